//! Dense reference computations. These form full `n1 × n2` matrices and are only for
//! checking the structured kernels.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Mat = DMatrix<C64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| gaussian(rng)).collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Antidiagonal weights recomputed by counting cells.
pub fn count_weights(n1: usize, n2: usize) -> Vec<usize> {
    let mut w = vec![0; n1 + n2 - 1];
    for i in 0..n1 {
        for k in 0..n2 {
            w[i + k] += 1;
        }
    }
    w
}

/// `H(x)` formed explicitly.
pub fn hankel_dense(n1: usize, n2: usize, x: &[C64]) -> Mat {
    Mat::from_fn(n1, n2, |i, k| x[i + k])
}

/// `G(z) = H(D⁻¹ z)` formed explicitly.
pub fn g_dense(n1: usize, n2: usize, weights: &[usize], z: &[C64]) -> Mat {
    Mat::from_fn(n1, n2, |i, k| z[i + k] / (weights[i + k] as f64).sqrt())
}

/// `G*(M)`: antidiagonal sums divided by `√ς`.
pub fn gstar_dense(weights: &[usize], m: &Mat) -> Vec<C64> {
    let mut z = vec![C64::new(0.0, 0.0); weights.len()];
    for i in 0..m.nrows() {
        for k in 0..m.ncols() {
            z[i + k] += m[(i, k)];
        }
    }
    z.iter()
        .zip(weights)
        .map(|(v, &w)| v / (w as f64).sqrt())
        .collect()
}

pub fn norm_vec(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn rel_err_vec(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    diff / norm_vec(b).max(f64::MIN_POSITIVE)
}

pub fn rel_err_mat(a: &Mat, b: &Mat) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Singular values of a dense matrix, descending.
pub fn singular_values(m: &Mat) -> Vec<f64> {
    let mut s: Vec<f64> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Top-`r` left and right singular subspaces and values of a dense matrix.
pub fn top_svd(m: &Mat, r: usize) -> (Mat, Vec<f64>, Mat) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap()
    });
    let uu = Mat::from_fn(m.nrows(), r, |i, j| u[(i, order[j])]);
    let vv = Mat::from_fn(m.ncols(), r, |i, j| vt[(order[j], i)].conj());
    let s = order[..r].iter().map(|&j| svd.singular_values[j]).collect();
    (uu, s, vv)
}

/// Sine of the largest principal angle between the column spaces of two orthonormal bases.
pub fn subspace_sin_angle(a: &Mat, b: &Mat) -> f64 {
    let proj = a - b * (b.adjoint() * a);
    let s = singular_values(&proj);
    s.first().copied().unwrap_or(0.0)
}
