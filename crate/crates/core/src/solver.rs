//! Hankel structured gradient descent.
//!
//! The low-rank Hankel matrix is carried as factors `(L, R)` with `G(z) ≈ L·R*`, and
//! sparse outliers `s` on the observed set. Each iteration
//!
//! 1. re-estimates `s` by keeping the `⌊γ_k·α·p·n⌋` largest observed residues,
//! 2. takes one gradient step on
//!    `ℓ = (1/2p)‖Π_Ω(G*(LR*) + s - f)‖² + ½‖(I - GG*)(LR*)‖²_F + (λ/4)‖L*L - R*R‖²_F`,
//! 3. projects every row of `L` and `R` back into a norm ball fixed at initialization.
//!
//! Signals here are in the reweighted domain (`z = D·x`, `f = D·y`).

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hankel::{FactorPair, HankelOps};
use crate::lanczos::{truncated_svd_with, LanczosOptions};
use crate::mask::ObservationMask;
use crate::sparsify::sparsify;
use crate::{floor_count, CMatrix, C64};

/// `γ_k = floor + amplitude · decay^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GammaSchedule {
    pub floor: f64,
    pub amplitude: f64,
    pub decay: f64,
}

impl Default for GammaSchedule {
    fn default() -> Self {
        Self {
            floor: 1.05,
            amplitude: 0.45,
            decay: 0.95,
        }
    }
}

impl GammaSchedule {
    pub fn constant(gamma: f64) -> Self {
        Self {
            floor: gamma,
            amplitude: 0.0,
            decay: 0.0,
        }
    }

    pub fn gamma(&self, k: usize) -> f64 {
        self.floor + self.amplitude * self.decay.powi(k.min(i32::MAX as usize) as i32)
    }

    fn validate(&self) -> Result<()> {
        let ok = self.floor > 1.0
            && self.amplitude >= 0.0
            && self.floor + self.amplitude <= 2.0
            && (0.0..=1.0).contains(&self.decay);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "gamma schedule {self:?} must stay within (1, 2]"
            )))
        }
    }
}

/// Solver parameters. Field names double as the JSON configuration schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HsgdConfig {
    pub rank: usize,
    /// Outlier fraction of the observed entries.
    pub alpha: f64,
    /// Sampling rate; `None` uses `|Ω| / n`.
    pub p: Option<f64>,
    pub lambda: f64,
    /// Step size is `eta_scale / σ₁` of the initial spectral estimate.
    pub eta_scale: f64,
    pub gamma: GammaSchedule,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
    /// Incoherence parameter in the row-norm caps.
    pub mu: f64,
    pub projection: bool,
    /// How many times the step size is halved (restarting from initialization) after a
    /// non-finite iterate.
    pub max_step_halvings: usize,
}

impl Default for HsgdConfig {
    fn default() -> Self {
        Self {
            rank: 1,
            alpha: 0.0,
            p: None,
            lambda: 1.0 / 16.0,
            eta_scale: 0.5,
            gamma: GammaSchedule::default(),
            max_iters: 1000,
            rel_tol: 1e-5,
            seed: 0,
            mu: 1.0,
            projection: true,
            max_step_halvings: 5,
        }
    }
}

impl HsgdConfig {
    pub fn with_rank(rank: usize) -> Self {
        Self {
            rank,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.rank == 0 {
            return bad("rank must be positive".into());
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return bad(format!("alpha {} must lie in [0, 1)", self.alpha));
        }
        if let Some(p) = self.p {
            if !(p > 0.0 && p <= 1.0) {
                return bad(format!("sampling rate {p} must lie in (0, 1]"));
            }
        }
        if !(self.eta_scale > 0.0 && self.eta_scale.is_finite()) {
            return bad(format!("eta_scale {} must be positive", self.eta_scale));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda {} must be non-negative", self.lambda));
        }
        if self.mu.is_nan() || self.mu <= 0.0 {
            return bad(format!("mu {} must be positive", self.mu));
        }
        if self.rel_tol.is_nan() || self.rel_tol < 0.0 {
            return bad(format!("rel_tol {} must be non-negative", self.rel_tol));
        }
        self.gamma.validate()
    }
}

/// Iterate of the solver.
#[derive(Debug, Clone)]
pub struct HsgdState {
    pub factors: FactorPair,
    /// Outlier estimate, supported on `Ω`.
    pub s: Vec<C64>,
    /// `G*(L·R*)`, kept in sync with `factors`.
    pub z: Vec<C64>,
    pub row_bound_left: f64,
    pub row_bound_right: f64,
    pub eta: f64,
    /// Leading singular value of the initial spectral estimate.
    pub sigma1_init: f64,
    pub svd_converged: bool,
    pub k: usize,
    pub residual_trace: Vec<f64>,
}

impl HsgdState {
    pub fn residual(&self) -> f64 {
        *self.residual_trace.last().expect("trace is never empty")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoveryResult {
    /// Recovered signal, reweighted domain.
    pub z_hat: Vec<C64>,
    /// Recovered signal, `D⁻¹ z_hat`.
    pub x_hat: Vec<C64>,
    /// Outlier estimate, reweighted domain.
    pub s_hat: Vec<C64>,
    pub iterations: usize,
    pub converged: bool,
    pub residual_trace: Vec<f64>,
    pub wall_time_seconds: f64,
    pub svd_converged: bool,
    /// Step coefficient actually used after any automatic halving.
    pub eta_scale: f64,
    #[serde(skip)]
    pub factors: FactorPair,
}

/// Observations bound to a geometry, checked once.
#[derive(Debug, Clone)]
struct Observed {
    f: Vec<C64>,
    mask: ObservationMask,
    norm: f64,
}

/// Solver for one geometry and configuration.
#[derive(Debug, Clone)]
pub struct HsgdSolver {
    ops: HankelOps,
    cfg: HsgdConfig,
}

impl HsgdSolver {
    pub fn new(ops: HankelOps, cfg: HsgdConfig) -> Result<Self> {
        cfg.validate()?;
        let max_rank = ops.geometry().max_rank();
        if cfg.rank > max_rank {
            return Err(Error::InvalidParameter(format!(
                "rank {} exceeds min(n1, n2) = {max_rank}",
                cfg.rank
            )));
        }
        Ok(Self { ops, cfg })
    }

    pub fn for_length(n: usize, cfg: HsgdConfig) -> Result<Self> {
        Self::new(HankelOps::for_length(n)?, cfg)
    }

    pub fn ops(&self) -> &HankelOps {
        &self.ops
    }

    pub fn config(&self) -> &HsgdConfig {
        &self.cfg
    }

    fn n(&self) -> usize {
        self.ops.geometry().n()
    }

    /// Sampling rate in use for `mask`.
    pub fn sampling_rate(&self, mask: &ObservationMask) -> f64 {
        self.cfg.p.unwrap_or_else(|| mask.rate())
    }

    fn observed(&self, f_obs: &[C64], mask: &ObservationMask) -> Result<Observed> {
        self.ops.geometry().check_len(f_obs, "observations")?;
        if mask.signal_len() != self.n() {
            return Err(Error::ShapeMismatch(format!(
                "mask is for length {}, signal has {}",
                mask.signal_len(),
                self.n()
            )));
        }
        if mask.indices().iter().any(|&i| !f_obs[i].is_finite()) {
            return Err(Error::InvalidParameter(
                "observed entries must be finite".into(),
            ));
        }
        let f = mask.project(f_obs);
        let norm = mask.norm(&f);
        if norm == 0.0 {
            return Err(Error::InvalidParameter(
                "observations are identically zero".into(),
            ));
        }
        let budget = self.cfg.alpha * self.sampling_rate(mask) * self.n() as f64;
        if floor_count(budget) > mask.len() {
            return Err(Error::InvalidParameter(format!(
                "outlier budget {budget} exceeds the {} observed entries",
                mask.len()
            )));
        }
        Ok(Observed {
            f,
            mask: mask.clone(),
            norm,
        })
    }

    fn outlier_count(&self, gamma: f64, mask: &ObservationMask) -> usize {
        floor_count(gamma * self.cfg.alpha * self.sampling_rate(mask) * self.n() as f64)
    }

    /// Squared row-norm cap `(2μ r c_s / n)·‖M̃‖₂²`.
    fn row_bound(&self, spectral_norm_sq: f64) -> f64 {
        if !self.cfg.projection {
            return f64::INFINITY;
        }
        let g = self.ops.geometry();
        2.0 * self.cfg.mu * self.cfg.rank as f64 * g.aspect_constant() / g.n() as f64
            * spectral_norm_sq
    }

    /// Spectral initialization with trimming of the obvious outliers.
    pub fn initialize(&self, f_obs: &[C64], mask: &ObservationMask) -> Result<HsgdState> {
        let obs = self.observed(f_obs, mask)?;
        self.initialize_observed(&obs)
    }

    fn initialize_observed(&self, obs: &Observed) -> Result<HsgdState> {
        let geom = self.ops.geometry();
        let p = self.sampling_rate(&obs.mask);
        let count = self.outlier_count(1.0, &obs.mask);

        // trimming compares unweighted magnitudes
        let y = geom.reweight_inv(&obs.f);
        let s0 = geom.reweight(&sparsify(&y, count));
        let a0: Vec<C64> = obs.f.iter().zip(&s0).map(|(f, s)| (f - s) / p).collect();

        let opts = LanczosOptions {
            seed: self.cfg.seed,
            ..Default::default()
        };
        let svd = truncated_svd_with(&self.ops, &a0, self.cfg.rank, &opts)?;
        let sigma1 = svd.sigma[0];
        if sigma1.is_nan() || sigma1 <= 0.0 {
            return Err(Error::InvalidParameter(
                "initial spectral estimate is zero; all observations were trimmed".into(),
            ));
        }
        let root = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            svd.sigma.len(),
            svd.sigma.iter().map(|s| C64::new(s.sqrt(), 0.0)),
        ));
        let left0 = &svd.u * &root;
        let right0 = &svd.v * &root;
        // ‖U Σ^½‖₂² = σ₁
        let row_bound_left = self.row_bound(sigma1);
        let row_bound_right = self.row_bound(sigma1);
        let factors = FactorPair::new(
            project_rows(&left0, row_bound_left),
            project_rows(&right0, row_bound_right),
        )?;
        let z = self.ops.gstar_lowrank(&factors)?;
        let residual = residual(&z, &s0, obs);
        Ok(HsgdState {
            factors,
            s: s0,
            z,
            row_bound_left,
            row_bound_right,
            eta: self.cfg.eta_scale / sigma1,
            sigma1_init: sigma1,
            svd_converged: svd.converged,
            k: 0,
            residual_trace: vec![residual],
        })
    }

    /// `Γ_{⌊γ_k α p n⌋}(Π_Ω(f - z))` for the state's current `z`.
    pub fn update_outliers(
        &self,
        state: &HsgdState,
        f_obs: &[C64],
        mask: &ObservationMask,
    ) -> Vec<C64> {
        let gamma = self.cfg.gamma.gamma(state.k);
        let count = self.outlier_count(gamma, mask);
        let mut residue = vec![C64::new(0.0, 0.0); f_obs.len()];
        for &i in mask.indices() {
            residue[i] = f_obs[i] - state.z[i];
        }
        sparsify(&residue, count)
    }

    /// Wirtinger gradients `(∇_L ℓ, ∇_R ℓ)` at `state.factors` with outliers `s`.
    ///
    /// With `ℓ` real, the first-order change under `(dL, dR)` is
    /// `Re⟨∇_L, dL⟩ + Re⟨∇_R, dR⟩`, so `∂ℓ/∂Re(L_ij) = Re(∇_L)_ij` and
    /// `∂ℓ/∂Im(L_ij) = Im(∇_L)_ij`.
    pub fn gradient(
        &self,
        state: &HsgdState,
        s: &[C64],
        f_obs: &[C64],
        mask: &ObservationMask,
    ) -> Result<(CMatrix, CMatrix)> {
        let p = self.sampling_rate(mask);
        let z = &state.z;
        let mut a: Vec<C64> = z.iter().map(|v| -v).collect();
        for &i in mask.indices() {
            a[i] += (z[i] + s[i] - f_obs[i]) / p;
        }
        let FactorPair { left, right } = &state.factors;
        let op = self.ops.operator(&a)?;
        let lhl = left.adjoint() * left;
        let rhr = right.adjoint() * right;
        let lam = C64::new(self.cfg.lambda, 0.0);
        let one_minus = C64::new(1.0 - self.cfg.lambda, 0.0);
        let grad_left = op.apply_right(right)? + left * (&lhl * lam + &rhr * one_minus);
        let grad_right = op.apply_left(left)? + right * (&rhr * lam + &lhl * one_minus);
        Ok((grad_left, grad_right))
    }

    /// `ℓ(L, R; s)` in `O(r·n log n + r²·n)`, without forming `L·R*`.
    pub fn evaluate_loss(
        &self,
        factors: &FactorPair,
        s: &[C64],
        f_obs: &[C64],
        mask: &ObservationMask,
    ) -> Result<f64> {
        let p = self.sampling_rate(mask);
        let z = self.ops.gstar_lowrank(factors)?;
        let data: f64 = mask
            .indices()
            .iter()
            .map(|&i| (z[i] + s[i] - f_obs[i]).norm_sqr())
            .sum();
        let lhl = factors.left.adjoint() * &factors.left;
        let rhr = factors.right.adjoint() * &factors.right;
        // ‖LR*‖²_F = tr(L*L · R*R); GG* is an orthogonal projection
        let product_sq = (&lhl * &rhr).trace().re;
        let hankel_sq: f64 = z.iter().map(|v| v.norm_sqr()).sum();
        let off_hankel = (product_sq - hankel_sq).max(0.0);
        let balance = (&lhl - &rhr).norm_squared();
        Ok(data / (2.0 * p) + 0.5 * off_hankel + 0.25 * self.cfg.lambda * balance)
    }

    /// One outlier update plus one projected gradient step.
    pub fn step(&self, state: &mut HsgdState, f_obs: &[C64], mask: &ObservationMask) -> Result<()> {
        let obs = self.observed(f_obs, mask)?;
        self.step_observed(state, &obs)
    }

    fn step_observed(&self, state: &mut HsgdState, obs: &Observed) -> Result<()> {
        let s = self.update_outliers(state, &obs.f, &obs.mask);
        let (grad_left, grad_right) = self.gradient(state, &s, &obs.f, &obs.mask)?;
        let eta = C64::new(state.eta, 0.0);
        let left = project_rows(
            &(&state.factors.left - grad_left * eta),
            state.row_bound_left,
        );
        let right = project_rows(
            &(&state.factors.right - grad_right * eta),
            state.row_bound_right,
        );
        let factors = FactorPair { left, right };
        if !factors.is_finite() {
            return Err(Error::NonFinite {
                iteration: state.k,
                what: format!("factor update with step {:e}", state.eta),
            });
        }
        let z = self.ops.gstar_lowrank(&factors)?;
        debug_assert!(row_norms_within(&factors.left, state.row_bound_left));
        debug_assert!(row_norms_within(&factors.right, state.row_bound_right));
        debug_assert!(
            s.iter().filter(|v| v.norm() > 0.0).count()
                <= self.outlier_count(self.cfg.gamma.gamma(state.k), &obs.mask)
        );
        let res = residual(&z, &s, obs);
        if !res.is_finite() {
            return Err(Error::NonFinite {
                iteration: state.k,
                what: "residual".into(),
            });
        }
        state.factors = factors;
        state.z = z;
        state.s = s;
        state.k += 1;
        state.residual_trace.push(res);
        Ok(())
    }

    pub fn run(&self, f_obs: &[C64], mask: &ObservationMask) -> Result<RecoveryResult> {
        self.run_observed(f_obs, mask, |_| {})
    }

    /// Like [`run`](Self::run), calling `observer` on the initial state and after every
    /// step. A restart after step-size halving starts again from `k = 0`.
    pub fn run_observed<F>(
        &self,
        f_obs: &[C64],
        mask: &ObservationMask,
        mut observer: F,
    ) -> Result<RecoveryResult>
    where
        F: FnMut(&HsgdState),
    {
        let start = Instant::now();
        let obs = self.observed(f_obs, mask)?;
        let mut eta_scale = self.cfg.eta_scale;
        let mut halvings = 0;
        loop {
            match self.iterate(&obs, eta_scale, &mut observer) {
                Ok((state, converged)) => {
                    let geom = self.ops.geometry();
                    return Ok(RecoveryResult {
                        x_hat: geom.reweight_inv(&state.z),
                        z_hat: state.z,
                        s_hat: state.s,
                        iterations: state.k,
                        converged,
                        residual_trace: state.residual_trace,
                        wall_time_seconds: start.elapsed().as_secs_f64(),
                        svd_converged: state.svd_converged,
                        eta_scale,
                        factors: state.factors,
                    });
                }
                Err(Error::NonFinite { .. }) if halvings < self.cfg.max_step_halvings => {
                    halvings += 1;
                    eta_scale *= 0.5;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn iterate<F>(
        &self,
        obs: &Observed,
        eta_scale: f64,
        observer: &mut F,
    ) -> Result<(HsgdState, bool)>
    where
        F: FnMut(&HsgdState),
    {
        let mut state = self.initialize_observed(obs)?;
        state.eta = eta_scale / state.sigma1_init;
        observer(&state);
        for _ in 0..self.cfg.max_iters {
            self.step_observed(&mut state, obs)?;
            observer(&state);
            if state.residual() <= self.cfg.rel_tol {
                return Ok((state, true));
            }
        }
        Ok((state, false))
    }
}

fn residual(z: &[C64], s: &[C64], obs: &Observed) -> f64 {
    let num: f64 = obs
        .mask
        .indices()
        .iter()
        .map(|&i| (z[i] + s[i] - obs.f[i]).norm_sqr())
        .sum();
    num.sqrt() / obs.norm
}

/// Euclidean projection onto `{M : ‖M[i, :]‖² ≤ bound for all i}`: rows over the cap are
/// rescaled onto it, the rest are untouched.
pub fn project_rows(m: &CMatrix, bound: f64) -> CMatrix {
    let mut out = m.clone();
    if bound.is_infinite() {
        return out;
    }
    for i in 0..out.nrows() {
        let sq: f64 = out.row(i).iter().map(|v| v.norm_sqr()).sum();
        if sq > bound {
            let scale = (bound / sq).sqrt();
            for v in out.row_mut(i).iter_mut() {
                *v *= scale;
            }
        }
    }
    out
}

fn row_norms_within(m: &CMatrix, bound: f64) -> bool {
    (0..m.nrows()).all(|i| {
        let sq: f64 = m.row(i).iter().map(|v| v.norm_sqr()).sum();
        sq <= bound * (1.0 + 1e-12)
    })
}
