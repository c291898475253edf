//! FFT kernels for products with the reweighted Hankel lift `G = H·D⁻¹`.
//!
//! For a signal `a` of length `n`, `G(a)` is the `n1 × n2` matrix with entries
//! `G(a)[i, k] = a[i+k] / √ς[i+k]`. Its products with tall factors are convolutions or
//! cross-correlations of length-`n` sequences, so each of the kernels below costs
//! `O(r·n log n)` for factors with `r` columns.
//!
//! All FFTs use one zero-padded length `N ≥ n`. That is enough for linear convolution
//! of an `n1` and an `n2` sequence (`n1 + n2 - 1 = n`), and for the valid part of a
//! correlation of the length-`n` signal with an `n1`/`n2` sequence: the wrapped tail
//! only lands on output positions that are discarded.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVectorView;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::geometry::HankelGeometry;
use crate::{CMatrix, C64};

/// Factored low-rank iterate `(L, R)`; the represented matrix is `L·R*`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub left: CMatrix,
    pub right: CMatrix,
}

impl FactorPair {
    pub fn new(left: CMatrix, right: CMatrix) -> Result<Self> {
        if left.ncols() != right.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "factor ranks differ: L has {} columns, R has {}",
                left.ncols(),
                right.ncols()
            )));
        }
        if left.ncols() == 0 {
            return Err(Error::InvalidParameter("rank must be positive".into()));
        }
        Ok(Self { left, right })
    }

    pub fn rank(&self) -> usize {
        self.left.ncols()
    }

    pub fn is_finite(&self) -> bool {
        self.left
            .iter()
            .chain(self.right.iter())
            .all(|v| v.is_finite())
    }

    pub(crate) fn check(&self, geom: &HankelGeometry) -> Result<()> {
        if self.left.nrows() != geom.n1() || self.right.nrows() != geom.n2() {
            return Err(Error::ShapeMismatch(format!(
                "factors are {}x{} and {}x{}, geometry is {}x{}",
                self.left.nrows(),
                self.left.ncols(),
                self.right.nrows(),
                self.right.ncols(),
                geom.n1(),
                geom.n2()
            )));
        }
        if self.left.ncols() != self.right.ncols() {
            return Err(Error::ShapeMismatch("factor ranks differ".into()));
        }
        Ok(())
    }
}

/// Smallest `N ≥ len` whose only prime factors are 2, 3, 5 and 7.
pub fn efficient_fft_len(len: usize) -> usize {
    let mut candidate = len.max(1);
    loop {
        let mut m = candidate;
        for p in [2, 3, 5, 7] {
            while m.is_multiple_of(p) {
                m /= p;
            }
        }
        if m == 1 {
            return candidate;
        }
        candidate += 1;
    }
}

/// Geometry plus cached FFT plans. Immutable after construction, so one instance can be
/// shared freely between threads.
#[derive(Clone)]
pub struct HankelOps {
    geom: HankelGeometry,
    fft_len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    inv_sqrt_weights: Vec<f64>,
}

impl fmt::Debug for HankelOps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HankelOps")
            .field("geom", &self.geom)
            .field("fft_len", &self.fft_len)
            .finish()
    }
}

impl HankelOps {
    pub fn new(geom: HankelGeometry) -> Self {
        let fft_len = efficient_fft_len(geom.n());
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);
        let inv_sqrt_weights = geom
            .weights()
            .iter()
            .map(|&w| 1.0 / (w as f64).sqrt())
            .collect();
        Self {
            geom,
            fft_len,
            forward,
            inverse,
            inv_sqrt_weights,
        }
    }

    pub fn for_length(n: usize) -> Result<Self> {
        Ok(Self::new(HankelGeometry::new(n)?))
    }

    pub fn geometry(&self) -> &HankelGeometry {
        &self.geom
    }

    pub fn fft_len(&self) -> usize {
        self.fft_len
    }

    fn scratch(&self) -> Vec<C64> {
        let len = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        vec![C64::new(0.0, 0.0); len]
    }

    fn padded<I: IntoIterator<Item = C64>>(&self, values: I) -> Vec<C64> {
        let mut buf = vec![C64::new(0.0, 0.0); self.fft_len];
        for (slot, v) in buf.iter_mut().zip(values) {
            *slot = v;
        }
        buf
    }

    /// `G*(L·R*)`: antidiagonal sums of `L·R*` scaled by `1/√ς`, via `r` convolutions
    /// `L[:, j] ⋆ conj(R[:, j])` accumulated in the frequency domain.
    pub fn gstar_lowrank(&self, factors: &FactorPair) -> Result<Vec<C64>> {
        factors.check(&self.geom)?;
        let mut scratch = self.scratch();
        let mut acc = vec![C64::new(0.0, 0.0); self.fft_len];
        for j in 0..factors.rank() {
            let mut lhs = self.padded(factors.left.column(j).iter().copied());
            let mut rhs = self.padded(factors.right.column(j).iter().map(|v| v.conj()));
            self.forward.process_with_scratch(&mut lhs, &mut scratch);
            self.forward.process_with_scratch(&mut rhs, &mut scratch);
            for ((a, l), r) in acc.iter_mut().zip(&lhs).zip(&rhs) {
                *a += l * r;
            }
        }
        self.inverse.process_with_scratch(&mut acc, &mut scratch);
        let scale = 1.0 / self.fft_len as f64;
        Ok(acc
            .iter()
            .zip(&self.inv_sqrt_weights)
            .map(|(v, w)| v * (scale * w))
            .collect())
    }

    /// Prepares the implicit matrix `G(a)` for repeated products.
    pub fn operator(&self, a: &[C64]) -> Result<HankelOperator<'_>> {
        self.geom.check_len(a, "signal")?;
        let mut spectrum = self.padded(a.iter().zip(&self.inv_sqrt_weights).map(|(v, w)| v * *w));
        let mut scratch = self.scratch();
        self.forward
            .process_with_scratch(&mut spectrum, &mut scratch);
        Ok(HankelOperator {
            ops: self,
            spectrum,
        })
    }

    /// `G(a)·R` (`n1 × r`).
    pub fn g_apply_right(&self, a: &[C64], right: &CMatrix) -> Result<CMatrix> {
        self.operator(a)?.apply_right(right)
    }

    /// `G(a)*·L` (`n2 × r`).
    pub fn g_apply_left(&self, a: &[C64], left: &CMatrix) -> Result<CMatrix> {
        self.operator(a)?.apply_left(left)
    }
}

/// The matrix `G(a)` held through the spectrum of `D⁻¹a`.
pub struct HankelOperator<'a> {
    ops: &'a HankelOps,
    spectrum: Vec<C64>,
}

impl HankelOperator<'_> {
    pub fn nrows(&self) -> usize {
        self.ops.geom.n1()
    }

    pub fn ncols(&self) -> usize {
        self.ops.geom.n2()
    }

    /// Valid cross-correlation `out[k] = Σ_i w[k+i]·c[i]` of the stored signal `w = D⁻¹a`
    /// with `c`, for `k < n - len(c) + 1`.
    fn correlate<I>(&self, c: I, len: usize, scratch: &mut [C64], out: &mut [C64])
    where
        I: DoubleEndedIterator<Item = C64>,
    {
        let ops = self.ops;
        // reversing c turns correlation into convolution; the valid block starts at len-1
        let mut buf = ops.padded(c.rev());
        ops.forward.process_with_scratch(&mut buf, scratch);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        ops.inverse.process_with_scratch(&mut buf, scratch);
        let scale = 1.0 / ops.fft_len as f64;
        for (o, v) in out.iter_mut().zip(&buf[len - 1..]) {
            *o = v * scale;
        }
    }

    /// `G(a)·v` for a length-`n2` vector.
    pub fn matvec(&self, v: DVectorView<'_, C64>) -> Vec<C64> {
        let mut scratch = self.ops.scratch();
        let mut out = vec![C64::new(0.0, 0.0); self.nrows()];
        self.correlate(v.iter().copied(), v.len(), &mut scratch, &mut out);
        out
    }

    /// `G(a)*·u` for a length-`n1` vector.
    pub fn rmatvec(&self, u: DVectorView<'_, C64>) -> Vec<C64> {
        let mut scratch = self.ops.scratch();
        let mut out = vec![C64::new(0.0, 0.0); self.ncols()];
        self.correlate(u.iter().map(|x| x.conj()), u.len(), &mut scratch, &mut out);
        out.iter_mut().for_each(|x| *x = x.conj());
        out
    }

    pub fn apply_right(&self, right: &CMatrix) -> Result<CMatrix> {
        if right.nrows() != self.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "right factor has {} rows, expected {}",
                right.nrows(),
                self.ncols()
            )));
        }
        let mut out = CMatrix::zeros(self.nrows(), right.ncols());
        let mut scratch = self.ops.scratch();
        for j in 0..right.ncols() {
            let col = right.column(j);
            let mut dst = out.column_mut(j);
            self.correlate(
                col.iter().copied(),
                col.len(),
                &mut scratch,
                dst.as_mut_slice(),
            );
        }
        Ok(out)
    }

    pub fn apply_left(&self, left: &CMatrix) -> Result<CMatrix> {
        if left.nrows() != self.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "left factor has {} rows, expected {}",
                left.nrows(),
                self.nrows()
            )));
        }
        let mut out = CMatrix::zeros(self.ncols(), left.ncols());
        let mut scratch = self.ops.scratch();
        for j in 0..left.ncols() {
            let col = left.column(j);
            let mut dst = out.column_mut(j);
            let dst = dst.as_mut_slice();
            self.correlate(col.iter().map(|x| x.conj()), col.len(), &mut scratch, dst);
            dst.iter_mut().for_each(|x| *x = x.conj());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn fft_len_is_smooth() {
        assert_eq!(efficient_fft_len(1), 1);
        assert_eq!(efficient_fft_len(11), 12);
        assert_eq!(efficient_fft_len(125), 125);
        assert_eq!(efficient_fft_len(127), 128);
        assert_eq!(efficient_fft_len(511), 512);
        assert_eq!(efficient_fft_len(121), 125);
    }

    #[test]
    fn gstar_small_examples() {
        let ops = HankelOps::for_length(3).unwrap();
        let f = FactorPair::new(
            CMatrix::from_column_slice(2, 1, &[c(1.0), c(0.0)]),
            CMatrix::from_column_slice(2, 1, &[c(1.0), c(0.0)]),
        )
        .unwrap();
        let z = ops.gstar_lowrank(&f).unwrap();
        for (a, b) in z.iter().zip([1.0, 0.0, 0.0]) {
            assert!((a - c(b)).norm() < 1e-14);
        }

        let f = FactorPair::new(
            CMatrix::from_element(2, 1, c(1.0)),
            CMatrix::from_element(2, 1, c(1.0)),
        )
        .unwrap();
        let z = ops.gstar_lowrank(&f).unwrap();
        for (a, b) in z.iter().zip([1.0, 2f64.sqrt(), 1.0]) {
            assert!((a - c(b)).norm() < 1e-14);
        }
    }

    #[test]
    fn apply_right_single_entry() {
        let ops = HankelOps::for_length(7).unwrap();
        let g = ops.geometry();
        let mut e1 = vec![c(0.0); 7];
        e1[0] = c(1.0);
        let a = g.reweight(&e1);
        let mut rng = oracle::rng(1);
        let right = oracle::random_matrix(&mut rng, g.n2(), 2);
        let m = ops.g_apply_right(&a, &right).unwrap();
        for j in 0..2 {
            assert!((m[(0, j)] - right[(0, j)]).norm() < 1e-13);
            for i in 1..g.n1() {
                assert!(m[(i, j)].norm() < 1e-13);
            }
        }
    }

    #[test]
    fn apply_right_all_ones_basis() {
        let ops = HankelOps::for_length(8).unwrap();
        let g = ops.geometry();
        let a = g.reweight(&[c(1.0); 8]);
        let mut right = CMatrix::zeros(g.n2(), 2);
        right[(0, 0)] = c(1.0);
        let m = ops.g_apply_right(&a, &right).unwrap();
        for i in 0..g.n1() {
            assert!((m[(i, 0)] - c(1.0)).norm() < 1e-13);
            assert!(m[(i, 1)].norm() < 1e-13);
        }
    }

    #[test]
    fn kernels_match_dense_oracle() {
        for (n, r, seed) in [
            (16, 1, 3),
            (63, 3, 4),
            (64, 3, 5),
            (128, 5, 6),
            (1, 1, 7),
            (2, 1, 8),
        ] {
            let ops = HankelOps::for_length(n).unwrap();
            let g = ops.geometry();
            let mut rng = oracle::rng(seed);
            let l = oracle::random_matrix(&mut rng, g.n1(), r);
            let rr = oracle::random_matrix(&mut rng, g.n2(), r);
            let a = oracle::random_vector(&mut rng, n);
            let f = FactorPair::new(l.clone(), rr.clone()).unwrap();

            let z = ops.gstar_lowrank(&f).unwrap();
            let z_dense = oracle::gstar_dense(g.weights(), &(&l * rr.adjoint()));
            assert!(oracle::rel_err_vec(&z, &z_dense) < 1e-10, "gstar n={n}");

            let dense = oracle::g_dense(g.n1(), g.n2(), g.weights(), &a);
            let m = ops.g_apply_right(&a, &rr).unwrap();
            assert!(
                oracle::rel_err_mat(&m, &(&dense * &rr)) < 1e-10,
                "right n={n}"
            );
            let m = ops.g_apply_left(&a, &l).unwrap();
            assert!(
                oracle::rel_err_mat(&m, &(dense.adjoint() * &l)) < 1e-10,
                "left n={n}"
            );
        }
    }

    #[test]
    fn shape_mismatch_reported() {
        let ops = HankelOps::for_length(9).unwrap();
        let f = FactorPair::new(CMatrix::zeros(4, 1), CMatrix::zeros(5, 1)).unwrap();
        assert!(matches!(
            ops.gstar_lowrank(&f),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(ops.operator(&[c(0.0); 8]).is_err());
        assert!(ops
            .g_apply_right(&[c(0.0); 9], &CMatrix::zeros(4, 1))
            .is_err());
        assert!(FactorPair::new(CMatrix::zeros(5, 1), CMatrix::zeros(5, 2)).is_err());
    }
}
