//! Error metrics for recovered signals and factors.

use crate::error::{Error, Result};
use crate::hankel::FactorPair;
use crate::{CMatrix, C64};

/// Recovery counts as successful at or below this relative error.
pub const SUCCESS_THRESHOLD: f64 = 1e-3;

/// Factor distance after the best unitary alignment.
#[derive(Debug, Clone)]
pub struct DistanceReport {
    /// `min_Q √(‖L - L_ref Q‖²_F + ‖R - R_ref Q‖²_F)` over `r × r` unitaries.
    pub d: f64,
    pub q: CMatrix,
    /// `‖L R* - L_ref R_ref*‖_F / ‖L_ref R_ref*‖_F`, from `r × r` Gram blocks.
    pub rel_frobenius: f64,
    /// The alignment problem had a singular cross-Gram matrix, so `q` is one of several
    /// minimizers.
    pub rank_deficient: bool,
}

/// Aligned distance between `factors` and `reference`.
///
/// With `A = L_ref*·L + R_ref*·R = U_A Σ_A V_A*`, the minimizing unitary is `Q = U_A V_A*`.
pub fn aligned_distance(factors: &FactorPair, reference: &FactorPair) -> Result<DistanceReport> {
    let (l, r) = (&factors.left, &factors.right);
    let (lr, rr) = (&reference.left, &reference.right);
    if l.shape() != lr.shape() || r.shape() != rr.shape() {
        return Err(Error::ShapeMismatch(format!(
            "factors {:?}/{:?} vs reference {:?}/{:?}",
            l.shape(),
            r.shape(),
            lr.shape(),
            rr.shape()
        )));
    }
    let cross = lr.adjoint() * l + rr.adjoint() * r;
    let svd = cross.svd(true, true);
    let u = svd.u.as_ref().expect("requested");
    let vt = svd.v_t.as_ref().expect("requested");
    let q = u * vt;
    let s = &svd.singular_values;
    let smax = s.max();
    let rank_deficient = s.min() <= 1e-12 * smax.max(f64::MIN_POSITIVE);

    let d = ((l - lr * &q).norm_squared() + (r - rr * &q).norm_squared()).sqrt();

    // ‖LR* - L'R'*‖² = tr(L*L R*R) - 2 Re tr(L*L' R'*R) + tr(L'*L' R'*R')
    let self_term = ((l.adjoint() * l) * (r.adjoint() * r)).trace().re;
    let ref_term = ((lr.adjoint() * lr) * (rr.adjoint() * rr)).trace().re;
    let mixed = ((l.adjoint() * lr) * (rr.adjoint() * r)).trace().re;
    let diff = (self_term - 2.0 * mixed + ref_term).max(0.0);
    let rel_frobenius = if ref_term > 0.0 {
        (diff / ref_term).sqrt()
    } else {
        diff.sqrt()
    };
    Ok(DistanceReport {
        d,
        q,
        rel_frobenius,
        rank_deficient,
    })
}

/// `‖ẑ - z‖₂ / ‖z‖₂`, equal to `‖G ẑ - G z‖_F / ‖G z‖_F` since `G` is an isometry.
pub fn relative_error(z_hat: &[C64], z_ref: &[C64]) -> Result<f64> {
    if z_hat.len() != z_ref.len() {
        return Err(Error::ShapeMismatch(format!(
            "lengths {} and {} differ",
            z_hat.len(),
            z_ref.len()
        )));
    }
    let denom: f64 = z_ref.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if denom == 0.0 {
        return Err(Error::InvalidParameter("reference signal is zero".into()));
    }
    let num: f64 = z_hat
        .iter()
        .zip(z_ref)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(num / denom)
}

pub fn classify_success(rel_err: f64) -> bool {
    rel_err <= SUCCESS_THRESHOLD
}
