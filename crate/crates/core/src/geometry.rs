//! Shape and antidiagonal bookkeeping for `n1 × n2` Hankel matrices.

use crate::error::{Error, Result};
use crate::C64;

/// Shape of a Hankel matrix together with the number of cells on each antidiagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HankelGeometry {
    n1: usize,
    n2: usize,
    weights: Vec<usize>,
}

impl HankelGeometry {
    /// Near-square layout for a length-`n` signal: `n1 = n2 = (n+1)/2` for odd `n`,
    /// `n1 = n2 - 1 = n/2` for even `n`.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "signal length must be positive".into(),
            ));
        }
        let (n1, n2) = if n.is_multiple_of(2) {
            (n / 2, n / 2 + 1)
        } else {
            (n.div_ceil(2), n.div_ceil(2))
        };
        Self::with_shape(n1, n2)
    }

    pub fn with_shape(n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "Hankel shape {n1}x{n2} must be non-empty"
            )));
        }
        let n = n1 + n2 - 1;
        let weights = (0..n).map(|t| (t + 1).min(n1).min(n2).min(n - t)).collect();
        Ok(Self { n1, n2, weights })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    /// Cells per antidiagonal, `ς_t = min(t+1, n1, n2, n-t)` for 0-based `t`.
    pub fn weights(&self) -> &[usize] {
        &self.weights
    }

    /// Aspect constant `c_s = max(n/n1, n/n2)`.
    pub fn aspect_constant(&self) -> f64 {
        let n = self.n() as f64;
        (n / self.n1 as f64).max(n / self.n2 as f64)
    }

    pub fn max_rank(&self) -> usize {
        self.n1.min(self.n2)
    }

    pub(crate) fn check_len(&self, v: &[C64], what: &str) -> Result<()> {
        if v.len() != self.n() {
            return Err(Error::ShapeMismatch(format!(
                "{what} has length {}, expected {}",
                v.len(),
                self.n()
            )));
        }
        Ok(())
    }

    /// `[D x]_t = √ς_t · x_t`.
    pub fn reweight(&self, x: &[C64]) -> Vec<C64> {
        debug_assert_eq!(x.len(), self.n());
        x.iter()
            .zip(&self.weights)
            .map(|(v, &w)| v * (w as f64).sqrt())
            .collect()
    }

    /// `[D⁻¹ z]_t = z_t / √ς_t`.
    pub fn reweight_inv(&self, z: &[C64]) -> Vec<C64> {
        debug_assert_eq!(z.len(), self.n());
        z.iter()
            .zip(&self.weights)
            .map(|(v, &w)| v / (w as f64).sqrt())
            .collect()
    }
}
