//! Robust low-rank Hankel matrix completion by Hankel structured gradient descent.
//!
//! A Hankel matrix of size `n1 × n2` is represented throughout by its `n = n1 + n2 - 1`
//! distinct antidiagonal values. Every product with such a matrix is evaluated with FFT
//! convolutions, so no routine on a production path ever forms the `n1 × n2` matrix.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] and [`hankel`]: shapes, antidiagonal weights and the FFT kernels for
//!   `G*`, `G(a)·R` and `G(a)*·L`, where `G = H·D⁻¹` is the reweighted Hankel lift.
//! * [`sparsify`] and [`lanczos`]: hard truncation of outliers and the truncated SVD of
//!   implicitly represented Hankel matrices.
//! * [`solver`]: the alternating outlier / factored gradient descent iteration.
//! * [`eval`], [`synth`]: error metrics and synthetic problem generation.
//! * [`io`], [`experiments`]: file formats and the batch experiment harnesses.

pub mod error;
pub mod eval;
pub mod experiments;
pub mod geometry;
pub mod hankel;
pub mod io;
pub mod lanczos;
pub mod mask;
pub mod solver;
pub mod sparsify;
pub mod synth;

#[cfg(test)]
#[path = "../tests/common/oracle.rs"]
#[allow(dead_code)]
mod oracle;

pub use error::{Error, Result};
pub use eval::{aligned_distance, classify_success, relative_error, DistanceReport};
pub use geometry::HankelGeometry;
pub use hankel::{FactorPair, HankelOperator, HankelOps};
pub use lanczos::{truncated_svd_hankel, TruncatedSvd};
pub use mask::ObservationMask;
pub use solver::{GammaSchedule, HsgdConfig, HsgdSolver, HsgdState, RecoveryResult};
pub use sparsify::sparsify;
pub use synth::{ProblemInstance, SamplingScheme, SpectralModel};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix (column-major), used for the tall factors and small `r × r` blocks.
pub type CMatrix = nalgebra::DMatrix<C64>;

/// `⌊x⌋` for counts derived from products like `α·p·n`, tolerant to representation error
/// (so `0.1 * 50.0` counts as 5, not 4).
pub(crate) fn floor_count(x: f64) -> usize {
    if x.is_nan() || x <= 0.0 {
        return 0;
    }
    (x + 1e-9 * x.max(1.0)).floor() as usize
}
