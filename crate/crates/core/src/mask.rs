//! Observed index sets `Ω ⊆ [0, n)`.

use crate::error::{Error, Result};
use crate::C64;

/// Strictly increasing list of observed 0-based positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationMask {
    indices: Vec<usize>,
    n: usize,
}

impl ObservationMask {
    /// Sorts and validates `indices`; duplicates and out-of-range positions are errors.
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!(
                "duplicate observed index {}",
                w[0]
            )));
        }
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(Error::InvalidParameter(format!(
                    "observed index {last} out of range for length {n}"
                )));
            }
        }
        if indices.is_empty() {
            return Err(Error::InvalidParameter("observation mask is empty".into()));
        }
        Ok(Self { indices, n })
    }

    pub fn full(n: usize) -> Self {
        Self {
            indices: (0..n).collect(),
            n,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Total signal length `n`.
    pub fn signal_len(&self) -> usize {
        self.n
    }

    /// Empirical sampling rate `|Ω| / n`.
    pub fn rate(&self) -> f64 {
        self.indices.len() as f64 / self.n as f64
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// `Π_Ω v`: zeroes every unobserved entry.
    pub fn project(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        for &i in &self.indices {
            out[i] = v[i];
        }
        out
    }

    /// `‖Π_Ω v‖₂`.
    pub fn norm(&self, v: &[C64]) -> f64 {
        self.indices
            .iter()
            .map(|&i| v[i].norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}
