//! Truncated SVD of an implicitly represented Hankel matrix `G(a)` by Golub–Kahan–Lanczos
//! bidiagonalization with full reorthogonalization.
//!
//! Only products `G(a)·v` and `G(a)*·u` are needed, each one FFT correlation, so a
//! rank-`r` decomposition costs `O(k·n log n + k²·n)` for `k` bidiagonalization steps.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hankel::{HankelOperator, HankelOps};
use crate::{CMatrix, C64};

/// Top-`r` singular triplets. Each pair `(U[:, j], V[:, j])` is phased so the
/// largest-magnitude entry of `U[:, j]` is real and positive.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    pub u: CMatrix,
    pub sigma: Vec<f64>,
    pub v: CMatrix,
    /// `false` when the step cap was reached before the convergence test passed; the
    /// triplets are then the best available estimate.
    pub converged: bool,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Relative change (w.r.t. `σ₁`) of the top `r` values between checks.
    pub tol: f64,
    /// Cap on the residual `‖G(a)*u - σv‖ / σ₁` of each accepted triplet.
    pub residual_tol: f64,
    /// Bidiagonalization step cap; `None` means `10·r + 50`.
    pub max_steps: Option<usize>,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            residual_tol: 1e-8,
            max_steps: None,
            seed: 0x5eed,
        }
    }
}

/// Rank-`r` truncated SVD of `G(a)` with default options.
pub fn truncated_svd_hankel(ops: &HankelOps, a: &[C64], r: usize) -> Result<TruncatedSvd> {
    truncated_svd_with(ops, a, r, &LanczosOptions::default())
}

pub fn truncated_svd_with(
    ops: &HankelOps,
    a: &[C64],
    r: usize,
    opts: &LanczosOptions,
) -> Result<TruncatedSvd> {
    let geom = ops.geometry();
    if r == 0 || r > geom.max_rank() {
        return Err(Error::InvalidParameter(format!(
            "rank {r} outside 1..={} for a {}x{} Hankel matrix",
            geom.max_rank(),
            geom.n1(),
            geom.n2()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "signal has non-finite entries".into(),
        ));
    }
    let op = ops.operator(a)?;
    Ok(Bidiagonalization::new(&op, opts.seed).run(r, opts))
}

struct Bidiagonalization<'a, 'b> {
    op: &'a HankelOperator<'b>,
    rng: ChaCha8Rng,
    /// left Lanczos vectors, `n1`
    left: Vec<DVector<C64>>,
    /// right Lanczos vectors, `n2`; one ahead of `left`
    right: Vec<DVector<C64>>,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    /// running estimate of ‖G(a)‖ used for breakdown detection
    scale: f64,
}

struct Ritz {
    sigma: Vec<f64>,
    /// singular vectors of the projected bidiagonal matrix
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    residual: Vec<f64>,
}

impl<'a, 'b> Bidiagonalization<'a, 'b> {
    fn new(op: &'a HankelOperator<'b>, seed: u64) -> Self {
        Self {
            op,
            rng: ChaCha8Rng::seed_from_u64(seed),
            left: Vec::new(),
            right: Vec::new(),
            alphas: Vec::new(),
            betas: Vec::new(),
            scale: 0.0,
        }
    }

    fn random_unit(&mut self, len: usize, basis_is_left: bool) -> DVector<C64> {
        loop {
            let mut v = DVector::from_fn(len, |_, _| {
                C64::new(
                    self.rng.random_range(-1.0..1.0),
                    self.rng.random_range(-1.0..1.0),
                )
            });
            let basis = if basis_is_left {
                &self.left
            } else {
                &self.right
            };
            reorthogonalize(&mut v, basis);
            let norm = v.norm();
            if norm > 1e-8 {
                return v / C64::new(norm, 0.0);
            }
        }
    }

    fn breakdown(&self, value: f64) -> bool {
        value <= 1e-13 * self.scale.max(f64::MIN_POSITIVE) || value == 0.0
    }

    /// Extends the factorization by one step.
    fn step(&mut self) {
        let n1 = self.op.nrows();
        let k = self.left.len();
        let v = self.right[k].clone();

        let mut u = DVector::from_vec(self.op.matvec(v.as_view()));
        if k > 0 {
            u -= &self.left[k - 1] * C64::new(self.betas[k - 1], 0.0);
        }
        reorthogonalize(&mut u, &self.left);
        let mut alpha = u.norm();
        self.scale = self.scale.max(alpha);
        if self.breakdown(alpha) {
            alpha = 0.0;
            u = if self.left.len() < n1 {
                self.random_unit(n1, true)
            } else {
                DVector::zeros(n1)
            };
        } else {
            u /= C64::new(alpha, 0.0);
        }
        self.alphas.push(alpha);
        self.left.push(u);

        let n2 = self.op.ncols();
        if self.right.len() >= n2 {
            self.betas.push(0.0);
            return;
        }
        let u = &self.left[k];
        let mut w = DVector::from_vec(self.op.rmatvec(u.as_view()));
        w -= &self.right[k] * C64::new(alpha, 0.0);
        reorthogonalize(&mut w, &self.right);
        let mut beta = w.norm();
        self.scale = self.scale.max(beta);
        if self.breakdown(beta) {
            // invariant subspace found: continue from a fresh direction
            beta = 0.0;
            w = self.random_unit(n2, false);
        } else {
            w /= C64::new(beta, 0.0);
        }
        self.betas.push(beta);
        self.right.push(w);
    }

    fn ritz(&self) -> Ritz {
        let k = self.alphas.len();
        // once the left space is exhausted, `U_k* G V_{k+1}` is the whole operator
        let wide = k == self.op.nrows() && self.right.len() > k && self.betas[k - 1] != 0.0;
        let cols = if wide { k + 1 } else { k };
        let mut b = DMatrix::<f64>::zeros(k, cols);
        for i in 0..k {
            b[(i, i)] = self.alphas[i];
            if i + 1 < cols {
                b[(i, i + 1)] = self.betas[i];
            }
        }
        let svd = b.svd(true, true);
        let u = svd.u.expect("requested");
        let vt = svd.v_t.expect("requested");
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let x = DMatrix::from_fn(k, k, |i, j| u[(i, order[j])]);
        let y = DMatrix::from_fn(cols, k, |i, j| vt[(order[j], i)]);
        let sigma: Vec<f64> = order.iter().map(|&j| svd.singular_values[j]).collect();
        let tail = if wide { 0.0 } else { self.betas[k - 1] };
        let residual = (0..k).map(|j| (tail * x[(k - 1, j)]).abs()).collect();
        Ritz {
            sigma,
            x,
            y,
            residual,
        }
    }

    fn run(mut self, r: usize, opts: &LanczosOptions) -> TruncatedSvd {
        let n1 = self.op.nrows();
        let n2 = self.op.ncols();
        let full = n1.min(n2);
        let cap = opts.max_steps.unwrap_or(10 * r + 50).max(r).min(full);
        let check_every = (r / 2).max(2);

        let start = self.random_unit(n2, false);
        self.right.push(start);

        let mut previous: Option<Vec<f64>> = None;
        let mut converged = false;
        let mut ritz = None;
        for k in 1..=cap {
            self.step();
            let last = k == cap;
            if k < r || (!last && !(k - r).is_multiple_of(check_every)) {
                continue;
            }
            let current = self.ritz();
            let top = current.sigma[0].max(f64::MIN_POSITIVE);
            let exhausted = k == full;
            let settled = previous.as_ref().is_some_and(|prev| {
                (0..r).all(|j| (prev[j] - current.sigma[j]).abs() <= opts.tol * top)
            });
            let small_residual = (0..r).all(|j| current.residual[j] <= opts.residual_tol * top);
            let invariant = self.betas[k - 1] == 0.0 && small_residual;
            previous = Some(current.sigma[..r].to_vec());
            ritz = Some(current);
            if exhausted || invariant || (settled && small_residual) {
                converged = true;
                break;
            }
        }
        let ritz = ritz.expect("at least one Ritz extraction");
        self.assemble(ritz, r, converged)
    }

    fn assemble(&self, ritz: Ritz, r: usize, converged: bool) -> TruncatedSvd {
        let k = self.alphas.len();
        let n1 = self.op.nrows();
        let n2 = self.op.ncols();
        let mut u = CMatrix::zeros(n1, r);
        let mut v = CMatrix::zeros(n2, r);
        for j in 0..r {
            for i in 0..k {
                let cx = C64::new(ritz.x[(i, j)], 0.0);
                u.column_mut(j).axpy(cx, &self.left[i], C64::new(1.0, 0.0));
            }
            for i in 0..ritz.y.nrows() {
                let cy = C64::new(ritz.y[(i, j)], 0.0);
                v.column_mut(j).axpy(cy, &self.right[i], C64::new(1.0, 0.0));
            }
        }
        fix_phases(&mut u, &mut v);
        TruncatedSvd {
            u,
            sigma: ritz.sigma[..r].to_vec(),
            v,
            converged,
            steps: k,
        }
    }
}

/// Two passes of classical Gram–Schmidt against an orthonormal basis.
fn reorthogonalize(v: &mut DVector<C64>, basis: &[DVector<C64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = q.dotc(v);
            v.axpy(-c, q, C64::new(1.0, 0.0));
        }
    }
}

/// Rotates each `(u_j, v_j)` by a common unit phase so `u_j`'s largest entry is real positive.
pub(crate) fn fix_phases(u: &mut CMatrix, v: &mut CMatrix) {
    for j in 0..u.ncols() {
        let pivot = u
            .column(j)
            .iter()
            .copied()
            .enumerate()
            .fold((0, -1.0), |best, (i, x)| {
                if x.norm() > best.1 {
                    (i, x.norm())
                } else {
                    best
                }
            })
            .0;
        let p = u[(pivot, j)];
        if p.norm() == 0.0 {
            continue;
        }
        let phase = (p / p.norm()).conj();
        for x in u.column_mut(j).iter_mut() {
            *x *= phase;
        }
        for x in v.column_mut(j).iter_mut() {
            *x *= phase;
        }
        u[(pivot, j)] = C64::new(u[(pivot, j)].norm(), 0.0);
    }
}
