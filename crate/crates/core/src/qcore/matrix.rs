//! Dense row-major complex matrices.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use num_traits::Zero;

use crate::{QpvError, Result};

pub type C64 = Complex64;

/// Default unitarity tolerance for [`UnitaryMatrix`].
pub const UNITARY_TOL: f64 = 1e-10;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries. Fails on a length mismatch or
    /// non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(QpvError::DimensionMismatch(alloc::format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QpvError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Real row-major entries.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| c(x, 0.0)).collect())
    }

    pub(crate) fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Assembles a matrix from a grid of blocks. Blocks in one block-row must
    /// share a height, blocks in one block-column a width.
    pub fn from_blocks(blocks: &[Vec<ComplexMatrix>]) -> Result<Self> {
        let heights: Vec<usize> = blocks.iter().map(|row| row[0].rows).collect();
        let widths: Vec<usize> = blocks[0].iter().map(|b| b.cols).collect();
        for row in blocks {
            if row.len() != widths.len() {
                return Err(QpvError::DimensionMismatch("ragged block grid".into()));
            }
        }
        let rows: usize = heights.iter().sum();
        let cols: usize = widths.iter().sum();
        let mut out = Self::zeros(rows, cols);
        let mut r0 = 0;
        for (bi, row) in blocks.iter().enumerate() {
            let mut c0 = 0;
            for (bj, b) in row.iter().enumerate() {
                if b.rows != heights[bi] || b.cols != widths[bj] {
                    return Err(QpvError::DimensionMismatch(alloc::format!(
                        "block ({bi},{bj}) is {}x{}, expected {}x{}",
                        b.rows,
                        b.cols,
                        heights[bi],
                        widths[bj]
                    )));
                }
                for i in 0..b.rows {
                    for j in 0..b.cols {
                        out[(r0 + i, c0 + j)] = b[(i, j)];
                    }
                }
                c0 += widths[bj];
            }
            r0 += heights[bi];
        }
        Ok(out)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.data.iter().all(|z| z.im.abs() <= tol)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, k: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    pub fn scale_real(&self, k: f64) -> Self {
        self.scale(c(k, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Matrix product; panics on inner-dimension mismatch.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul inner dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        let n = rhs.cols;
        for i in 0..self.rows {
            let orow = &mut out.data[i * n..(i + 1) * n];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let brow = &rhs.data[k * n..(k + 1) * n];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self† · rhs` without materializing the adjoint.
    pub fn adjoint_mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.rows, rhs.rows, "adjoint_mul dimension mismatch");
        let mut out = Self::zeros(self.cols, rhs.cols);
        let n = rhs.cols;
        for k in 0..self.rows {
            let brow = &rhs.data[k * n..(k + 1) * n];
            for i in 0..self.cols {
                let a = self.data[k * self.cols + i].conj();
                let orow = &mut out.data[i * n..(i + 1) * n];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self · rhs†` without materializing the adjoint.
    pub fn mul_adjoint(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.cols, "mul_adjoint dimension mismatch");
        Self::from_fn(self.rows, rhs.rows, |i, j| {
            let a = &self.data[i * self.cols..(i + 1) * self.cols];
            let b = &rhs.data[j * rhs.cols..(j + 1) * rhs.cols];
            a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
        })
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let rows = self.rows * rhs.rows;
        let cols = self.cols * rhs.cols;
        Self::from_fn(rows, cols, |i, j| {
            self[(i / rhs.rows, j / rhs.cols)] * rhs[(i % rhs.rows, j % rhs.cols)]
        })
    }

    /// `max |M†M − I|` over entries. Panics on a non-square matrix.
    pub fn unitarity_deviation(&self) -> f64 {
        assert!(self.is_square(), "unitarity of a non-square matrix");
        let g = self.adjoint_mul(self);
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - c(target, 0.0)).norm());
            }
        }
        worst
    }

    /// `|tr(A†B)| / m`: 1 iff the two unitaries agree up to global phase.
    pub fn phase_fidelity(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let t: C64 = self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum();
        t.norm() / self.rows as f64
    }

    /// Entrywise distance after removing the best global phase.
    pub fn phase_distance(&self, other: &Self) -> f64 {
        let t: C64 = self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum();
        let phase = if t.norm() > 0.0 { t / t.norm() } else { c(1.0, 0.0) };
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a * phase - b).norm()))
    }

    /// Sub-matrix copy.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// A square matrix that passed the unitarity check at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix {
    matrix: ComplexMatrix,
    tolerance: f64,
}

impl UnitaryMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, UNITARY_TOL)
    }

    pub fn with_tolerance(matrix: ComplexMatrix, tolerance: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(QpvError::DimensionMismatch(alloc::format!(
                "unitary must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if !matrix.is_finite() {
            return Err(QpvError::NonFinite);
        }
        let deviation = matrix.unitarity_deviation();
        if deviation > tolerance {
            return Err(QpvError::NotUnitary {
                deviation,
                tolerance,
            });
        }
        Ok(Self { matrix, tolerance })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(n),
            tolerance: UNITARY_TOL,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    #[inline]
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Product, re-checked at ten times the looser input tolerance.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        if self.dim() != rhs.dim() {
            return Err(QpvError::DimensionMismatch("compose".into()));
        }
        Self::with_tolerance(
            self.matrix.matmul(&rhs.matrix),
            10.0 * self.tolerance.max(rhs.tolerance),
        )
    }

    /// Kronecker product, re-checked at ten times the looser input tolerance.
    pub fn kron(&self, rhs: &Self) -> Result<Self> {
        Self::with_tolerance(
            self.matrix.kron(&rhs.matrix),
            10.0 * self.tolerance.max(rhs.tolerance),
        )
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            tolerance: self.tolerance,
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            matrix: self.matrix.transpose(),
            tolerance: self.tolerance,
        }
    }
}

impl AsRef<ComplexMatrix> for UnitaryMatrix {
    fn as_ref(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// Named single-qubit gates used throughout.
pub mod gates {
    use super::{c, ComplexMatrix};
    use core::f64::consts::FRAC_1_SQRT_2;

    fn real2(a: f64, b: f64, cc: f64, d: f64) -> ComplexMatrix {
        ComplexMatrix::from_fn(2, 2, |i, j| c([[a, b], [cc, d]][i][j], 0.0))
    }

    pub fn i2() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }

    pub fn x() -> ComplexMatrix {
        real2(0.0, 1.0, 1.0, 0.0)
    }

    pub fn z() -> ComplexMatrix {
        real2(1.0, 0.0, 0.0, -1.0)
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => c(0.0, -1.0),
            (1, 0) => c(0.0, 1.0),
            _ => c(0.0, 0.0),
        })
    }

    pub fn h() -> ComplexMatrix {
        real2(FRAC_1_SQRT_2, FRAC_1_SQRT_2, FRAC_1_SQRT_2, -FRAC_1_SQRT_2)
    }

    /// CNOT with the first tensor factor as control.
    pub fn cnot() -> ComplexMatrix {
        ComplexMatrix::from_fn(4, 4, |i, j| {
            let target = [0, 1, 3, 2][j];
            c(if i == target { 1.0 } else { 0.0 }, 0.0)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gates::*;

    #[test]
    fn kron_identities() {
        assert_eq!(i2().kron(&i2()), ComplexMatrix::identity(4));
        // X ⊗ I swaps the two halves of a 4-vector
        let xi = x().kron(&i2());
        let v = ComplexMatrix::from_real(4, 1, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let w = xi.matmul(&v);
        let got: Vec<f64> = w.as_slice().iter().map(|z| z.re).collect();
        assert_eq!(got, [3.0, 4.0, 1.0, 2.0]);
    }

    #[test]
    fn kron_mixed_product_matches_direct_multiplication() {
        let a = ComplexMatrix::from_vec(2, 2, vec![c(0.3, 0.1), c(-1.2, 0.0), c(0.5, 2.0), c(0.0, -0.7)]).unwrap();
        let b = ComplexMatrix::from_vec(2, 2, vec![c(1.1, 0.2), c(0.4, -0.3), c(-0.6, 0.0), c(0.9, 0.9)]).unwrap();
        let cc = ComplexMatrix::from_vec(2, 2, vec![c(0.0, 1.0), c(2.0, 0.5), c(-0.3, -0.2), c(0.7, 0.0)]).unwrap();
        let d = ComplexMatrix::from_vec(2, 2, vec![c(1.0, -1.0), c(0.2, 0.0), c(0.0, 0.3), c(-0.8, 0.1)]).unwrap();
        // direct 4x4 multiplication of the two Kronecker products, entry by entry
        let lhs_a = a.kron(&b);
        let lhs_b = cc.kron(&d);
        let mut direct = ComplexMatrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = c(0.0, 0.0);
                for k in 0..4 {
                    acc += lhs_a[(i, k)] * lhs_b[(k, j)];
                }
                direct[(i, j)] = acc;
            }
        }
        let rhs = a.matmul(&cc).kron(&b.matmul(&d));
        assert!((&direct - &rhs).max_abs() < 1e-14);
    }

    #[test]
    fn adjoint_products_agree_with_explicit_adjoint() {
        let a = ComplexMatrix::from_vec(2, 3, (0..6).map(|k| c(k as f64, 1.0 - k as f64)).collect()).unwrap();
        let b = ComplexMatrix::from_vec(2, 3, (0..6).map(|k| c(0.5 * k as f64, 2.0)).collect()).unwrap();
        assert!((&a.adjoint_mul(&b) - &a.adjoint().matmul(&b)).max_abs() < 1e-14);
        assert!((&a.mul_adjoint(&b) - &a.matmul(&b.adjoint())).max_abs() < 1e-14);
    }

    #[test]
    fn unitary_checks() {
        assert!(UnitaryMatrix::new(h()).is_ok());
        assert!(UnitaryMatrix::new(cnot()).is_ok());
        let bad = h().scale_real(1.01);
        assert!(matches!(UnitaryMatrix::new(bad), Err(QpvError::NotUnitary { .. })));
        let nonsquare = ComplexMatrix::zeros(2, 3);
        assert!(matches!(UnitaryMatrix::new(nonsquare), Err(QpvError::DimensionMismatch(_))));
        let prod = UnitaryMatrix::new(h()).unwrap().kron(&UnitaryMatrix::new(y()).unwrap()).unwrap();
        assert!(prod.matrix().unitarity_deviation() < 1e-15);
    }

    #[test]
    fn phase_fidelity_ignores_global_phase() {
        let u = h();
        let v = h().scale(c(0.0, 1.0));
        assert!((u.phase_fidelity(&v) - 1.0).abs() < 1e-15);
        assert!(u.phase_distance(&v) < 1e-15);
        assert!(u.phase_fidelity(&x()) < 0.9);
    }

    #[test]
    fn non_finite_entries_are_rejected() {
        assert!(matches!(
            ComplexMatrix::from_real(1, 2, &[1.0, f64::NAN]),
            Err(QpvError::NonFinite)
        ));
        assert!(ComplexMatrix::from_real(2, 2, &[1.0]).is_err());
    }
}
