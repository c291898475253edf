//! Small solver instances with dense evaluations of the loss, shared by the integration
//! tests and the acceptance suite.

use hsgd_core::{FactorPair, HankelOps, HsgdConfig, HsgdSolver, HsgdState, ObservationMask, C64};
use rand::Rng;

use super::oracle::{self, Mat};

/// `ℓ` with every Hankel product formed explicitly.
pub fn dense_loss(
    solver: &HsgdSolver,
    factors: &FactorPair,
    s: &[C64],
    f: &[C64],
    mask: &ObservationMask,
) -> f64 {
    let g = solver.ops().geometry();
    let w = g.weights();
    let p = solver.sampling_rate(mask);
    let lambda = solver.config().lambda;
    let m: Mat = &factors.left * factors.right.adjoint();
    let z = oracle::gstar_dense(w, &m);
    let data: f64 = mask
        .indices()
        .iter()
        .map(|&i| (z[i] + s[i] - f[i]).norm_sqr())
        .sum();
    let off = (&m - oracle::g_dense(g.n1(), g.n2(), w, &z)).norm_squared();
    let balance = (factors.left.adjoint() * &factors.left
        - factors.right.adjoint() * &factors.right)
        .norm_squared();
    data / (2.0 * p) + 0.5 * off + 0.25 * lambda * balance
}

pub struct GradientCase {
    pub solver: HsgdSolver,
    pub state: HsgdState,
    pub s: Vec<C64>,
    pub f: Vec<C64>,
    pub mask: ObservationMask,
}

/// Random factors, roughly half the entries observed, a few outliers on the mask.
pub fn gradient_case(n: usize, r: usize, seed: u64) -> GradientCase {
    let mut rng = oracle::rng(seed);
    let mut indices: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
    if indices.is_empty() {
        indices.push(0);
    }
    let mask = ObservationMask::new(indices, n).unwrap();
    let cfg = HsgdConfig {
        lambda: 1.0 / 16.0,
        alpha: 0.1,
        ..HsgdConfig::with_rank(r)
    };
    let solver = HsgdSolver::for_length(n, cfg).unwrap();
    let g = solver.ops().geometry();
    let factors = FactorPair::new(
        oracle::random_matrix(&mut rng, g.n1(), r),
        oracle::random_matrix(&mut rng, g.n2(), r),
    )
    .unwrap();
    let zero = C64::new(0.0, 0.0);
    let mut f = vec![zero; n];
    let mut s = vec![zero; n];
    for &i in mask.indices() {
        f[i] = oracle::gaussian(&mut rng) * 3.0;
        if rng.random_bool(0.2) {
            s[i] = oracle::gaussian(&mut rng) * 5.0;
        }
    }
    let state = state_at(&solver, factors, s.clone());
    GradientCase {
        solver,
        state,
        s,
        f,
        mask,
    }
}

/// A state at the given factors with projection switched off.
pub fn state_at(solver: &HsgdSolver, factors: FactorPair, s: Vec<C64>) -> HsgdState {
    let z = solver.ops().gstar_lowrank(&factors).unwrap();
    HsgdState {
        factors,
        s,
        z,
        row_bound_left: f64::INFINITY,
        row_bound_right: f64::INFINITY,
        eta: 0.0,
        sigma1_init: 1.0,
        svd_converged: true,
        k: 0,
        residual_trace: vec![1.0],
    }
}

/// Largest componentwise relative gap between central differences of [`dense_loss`]
/// and the analytic gradients. Components below a thousandth of the largest gradient
/// entry are compared against that floor instead of their own magnitude.
pub fn fd_gradient_error(n: usize, r: usize, seed: u64, h: f64) -> f64 {
    let case = gradient_case(n, r, seed);
    let (gl, gr) = case
        .solver
        .gradient(&case.state, &case.s, &case.f, &case.mask)
        .unwrap();
    let scale = gl
        .iter()
        .chain(gr.iter())
        .map(|v| v.re.abs().max(v.im.abs()))
        .fold(0.0, f64::max);
    let floor = 1e-3 * scale;
    let loss = |fp: &FactorPair| dense_loss(&case.solver, fp, &case.s, &case.f, &case.mask);
    let mut worst: f64 = 0.0;
    for side in 0..2 {
        let grad = if side == 0 { &gl } else { &gr };
        for idx in 0..grad.len() {
            for (part, unit) in [(0, C64::new(h, 0.0)), (1, C64::new(0.0, h))] {
                let mut plus = case.state.factors.clone();
                let mut minus = case.state.factors.clone();
                {
                    let (mp, mm) = if side == 0 {
                        (&mut plus.left, &mut minus.left)
                    } else {
                        (&mut plus.right, &mut minus.right)
                    };
                    mp[idx] += unit;
                    mm[idx] -= unit;
                }
                let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
                let an = if part == 0 {
                    grad[idx].re
                } else {
                    grad[idx].im
                };
                worst = worst.max((fd - an).abs() / an.abs().max(floor));
            }
        }
    }
    worst
}

/// `G(z)` materialised through the FFT operator, one column per unit vector.
pub fn g_via_operator(ops: &HankelOps, z: &[C64]) -> Mat {
    let n2 = ops.geometry().n2();
    ops.g_apply_right(z, &Mat::identity(n2, n2)).unwrap()
}

/// Relative errors of `G*G z = z` and `‖G z‖_F = ‖z‖₂` for one random `z`, with `G`
/// applied by the structured kernels and `G*` by both the kernels and the dense oracle.
pub fn structure_errors(n: usize, seed: u64) -> (f64, f64) {
    let ops = HankelOps::for_length(n).unwrap();
    let g = ops.geometry();
    let mut rng = oracle::rng(seed);
    let z = oracle::random_vector(&mut rng, n);
    let lifted = g_via_operator(&ops, &z);
    let dense = oracle::g_dense(g.n1(), g.n2(), g.weights(), &z);
    let n2 = g.n2();
    let back = ops
        .gstar_lowrank(&FactorPair::new(lifted.clone(), Mat::identity(n2, n2)).unwrap())
        .unwrap();
    let adjoint = oracle::rel_err_vec(&back, &z)
        .max(oracle::rel_err_vec(
            &oracle::gstar_dense(g.weights(), &lifted),
            &z,
        ))
        .max(oracle::rel_err_mat(&lifted, &dense));
    let norm = (lifted.norm() - oracle::norm_vec(&z)).abs() / oracle::norm_vec(&z);
    (adjoint, norm)
}

/// Largest relative error of the three structured kernels against dense products.
pub fn kernel_errors(n: usize, r: usize, seed: u64) -> f64 {
    let ops = HankelOps::for_length(n).unwrap();
    let g = ops.geometry();
    let (n1, n2, w) = (g.n1(), g.n2(), g.weights());
    let mut rng = oracle::rng(seed);
    let left = oracle::random_matrix(&mut rng, n1, r);
    let right = oracle::random_matrix(&mut rng, n2, r);
    let a = oracle::random_vector(&mut rng, n);

    let fast_gstar = ops
        .gstar_lowrank(&FactorPair::new(left.clone(), right.clone()).unwrap())
        .unwrap();
    let dense_gstar = oracle::gstar_dense(w, &(&left * right.adjoint()));
    let ga = oracle::g_dense(n1, n2, w, &a);
    let fast_right = ops.g_apply_right(&a, &right).unwrap();
    let fast_left = ops.g_apply_left(&a, &left).unwrap();
    oracle::rel_err_vec(&fast_gstar, &dense_gstar)
        .max(oracle::rel_err_mat(&fast_right, &(&ga * &right)))
        .max(oracle::rel_err_mat(&fast_left, &(ga.adjoint() * &left)))
}
