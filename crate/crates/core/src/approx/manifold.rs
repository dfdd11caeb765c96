//! Unconstrained coordinates for unitary (or orthogonal) matrices.
//!
//! A coordinate vector fills a skew-Hermitian matrix `A` (skew-symmetric in
//! the real field); the unitary is then `(I + A)^{-1}(I − A)` (Cayley) or
//! `e^A` (exponential). Coordinate order: upper-triangle real parts
//! row-major, then in the complex field the upper-triangle imaginary parts
//! and the diagonal imaginary parts.

use alloc::vec::Vec;

use crate::qcore::linalg::{expm, Lu};
use crate::qcore::matrix::{c, ComplexMatrix};
use crate::qcore::UnitaryMatrix;
use crate::{QpvError, Result};

/// Cayley points with `I + A` conditioned worse than this are refused.
pub const CAYLEY_MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamKind {
    Cayley,
    Exponential,
}

impl ParamKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Cayley => "cayley",
            Self::Exponential => "exp",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Field {
    /// Orthogonal matrices.
    Real,
    /// Unitary matrices.
    Complex,
}

impl Field {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Real => "real",
            Self::Complex => "complex",
        }
    }
}

/// Number of coordinates for an `m × m` matrix.
pub fn n_coords(field: Field, m: usize) -> usize {
    match field {
        Field::Real => m * (m - 1) / 2,
        Field::Complex => m * m,
    }
}

/// The skew matrix `A` encoded by `coords`.
pub fn skew_from_coords(field: Field, m: usize, coords: &[f64]) -> ComplexMatrix {
    debug_assert_eq!(coords.len(), n_coords(field, m));
    let half = m * (m - 1) / 2;
    let mut a = ComplexMatrix::zeros(m, m);
    let mut k = 0;
    for i in 0..m {
        for j in i + 1..m {
            let im = if field == Field::Complex { coords[half + k] } else { 0.0 };
            a[(i, j)] = c(coords[k], im);
            a[(j, i)] = c(-coords[k], im);
            k += 1;
        }
    }
    if field == Field::Complex {
        for i in 0..m {
            a[(i, i)] = c(0.0, coords[2 * half + i]);
        }
    }
    a
}

/// Pulls a Euclidean gradient `G` (w.r.t. `A`, in the sense
/// `df = Re tr(G† dA)`) back to the coordinates.
pub fn coords_gradient(field: Field, g: &ComplexMatrix, out: &mut [f64]) {
    let m = g.rows();
    let half = m * (m - 1) / 2;
    let mut k = 0;
    for i in 0..m {
        for j in i + 1..m {
            out[k] = g[(i, j)].re - g[(j, i)].re;
            if field == Field::Complex {
                out[half + k] = g[(i, j)].im + g[(j, i)].im;
            }
            k += 1;
        }
    }
    if field == Field::Complex {
        for i in 0..m {
            out[2 * half + i] = g[(i, i)].im;
        }
    }
}

/// A point on the unitary (orthogonal) group in coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldParam {
    pub kind: ParamKind,
    pub field: Field,
    pub dim: usize,
    pub coords: Vec<f64>,
}

impl ManifoldParam {
    pub fn new(kind: ParamKind, field: Field, dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(QpvError::InvalidArgument("dimension must be positive".into()));
        }
        if coords.len() != n_coords(field, dim) {
            return Err(QpvError::DimensionMismatch(alloc::format!(
                "{} coordinates given, {} needed",
                coords.len(),
                n_coords(field, dim)
            )));
        }
        Ok(Self {
            kind,
            field,
            dim,
            coords,
        })
    }

    pub fn zero(kind: ParamKind, field: Field, dim: usize) -> Self {
        Self {
            kind,
            field,
            dim,
            coords: alloc::vec![0.0; n_coords(field, dim)],
        }
    }

    pub fn skew(&self) -> ComplexMatrix {
        skew_from_coords(self.field, self.dim, &self.coords)
    }
}

/// Retraction plus what the gradient needs.
pub(crate) enum Retracted {
    /// `U` and `B = (I + A)^{-1}`.
    Cayley { u: ComplexMatrix, b: ComplexMatrix },
    /// `U` and `A`.
    Exponential { u: ComplexMatrix, a: ComplexMatrix },
}

impl Retracted {
    pub(crate) fn u(&self) -> &ComplexMatrix {
        match self {
            Self::Cayley { u, .. } | Self::Exponential { u, .. } => u,
        }
    }

    /// Pulls `G = ∂f/∂U` back to `∂f/∂A`.
    pub(crate) fn pullback(&self, g: &ComplexMatrix) -> ComplexMatrix {
        match self {
            Self::Cayley { u, b } => {
                // dU = −B dA (I + U)
                let ipu = u + &ComplexMatrix::identity(u.rows());
                b.adjoint_mul(g).mul_adjoint(&ipu).scale_real(-1.0)
            }
            Self::Exponential { a, .. } => frechet_expm(&a.adjoint(), g),
        }
    }
}

/// Fréchet derivative of `exp` at `a` in direction `e`, read off the
/// upper-right block of `exp([[a, e], [0, a]])`.
pub fn frechet_expm(a: &ComplexMatrix, e: &ComplexMatrix) -> ComplexMatrix {
    let m = a.rows();
    let z = ComplexMatrix::zeros(m, m);
    let big = ComplexMatrix::from_blocks(&[alloc::vec![a.clone(), e.clone()], alloc::vec![z, a.clone()]])
        .expect("square blocks");
    expm(&big).block(0, m, m, m)
}

/// `None` at a Cayley exceptional point.
pub(crate) fn retract_raw(kind: ParamKind, a: ComplexMatrix) -> Option<Retracted> {
    let m = a.rows();
    match kind {
        ParamKind::Cayley => {
            let id = ComplexMatrix::identity(m);
            let lu = Lu::new(&(&id + &a)).ok()?;
            if !(lu.pivot_ratio() <= CAYLEY_MAX_CONDITION) {
                return None;
            }
            let b = lu.inverse();
            let u = b.matmul(&(&id - &a));
            Some(Retracted::Cayley { u, b })
        }
        ParamKind::Exponential => Some(Retracted::Exponential { u: expm(&a), a }),
    }
}

/// The unitary encoded by `p`.
pub fn retract(p: &ManifoldParam) -> Result<UnitaryMatrix> {
    if p.coords.iter().any(|v| !v.is_finite()) {
        return Err(QpvError::NonFinite);
    }
    let r = retract_raw(p.kind, p.skew()).ok_or(QpvError::Singular)?;
    UnitaryMatrix::new(r.u().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::rotation_matrix;

    fn sample(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect()
    }

    #[test]
    fn zero_coords_give_identity() {
        for kind in [ParamKind::Cayley, ParamKind::Exponential] {
            for field in [Field::Real, Field::Complex] {
                let u = retract(&ManifoldParam::zero(kind, field, 4)).unwrap();
                assert!((u.matrix() - &ComplexMatrix::identity(4)).max_abs() < 1e-15);
            }
        }
    }

    #[test]
    fn exponential_of_planar_generator_is_rotation() {
        let a = 0.7;
        // coordinate −a encodes A = [[0, −a], [a, 0]], whose exponential is R(a)
        let p = ManifoldParam::new(ParamKind::Exponential, Field::Real, 2, alloc::vec![-a]).unwrap();
        let u = retract(&p).unwrap();
        assert!((u.matrix() - &rotation_matrix(a)).max_abs() < 1e-14);
    }

    #[test]
    fn retractions_are_unitary() {
        for (k, field) in [Field::Real, Field::Complex].into_iter().enumerate() {
            for m in 1..6 {
                let coords: Vec<f64> = sample(n_coords(field, m), 31 + m as u64 + k as u64).iter().map(|v| 3.0 * v).collect();
                for kind in [ParamKind::Cayley, ParamKind::Exponential] {
                    let p = ManifoldParam::new(kind, field, m, coords.clone()).unwrap();
                    let u = retract(&p).unwrap();
                    assert!(u.matrix().unitarity_deviation() < 1e-12);
                    if field == Field::Real {
                        assert!(u.matrix().is_real(1e-15));
                    }
                }
            }
        }
    }

    #[test]
    fn skew_coords_are_skew() {
        let coords = sample(9, 5);
        let a = skew_from_coords(Field::Complex, 3, &coords);
        assert!((&a + &a.adjoint()).max_abs() == 0.0);
    }

    fn check_pullback(kind: ParamKind, field: Field) {
        let m = 3;
        let coords: Vec<f64> = sample(n_coords(field, m), 77);
        // f(U) = Re tr(W† U) has ∂f/∂U = W
        let w = ComplexMatrix::from_fn(m, m, |i, j| c((i + 2 * j) as f64 * 0.3 - 0.5, (i as f64 - j as f64) * 0.2));
        let f = |x: &[f64]| {
            let r = retract_raw(kind, skew_from_coords(field, m, x)).unwrap();
            w.adjoint_mul(r.u()).trace().re
        };
        let r = retract_raw(kind, skew_from_coords(field, m, &coords)).unwrap();
        let mut g = alloc::vec![0.0; coords.len()];
        coords_gradient(field, &r.pullback(&w), &mut g);
        for k in 0..coords.len() {
            let h = 1e-6;
            let (mut xp, mut xm) = (coords.clone(), coords.clone());
            xp[k] += h;
            xm[k] -= h;
            let fd = (f(&xp) - f(&xm)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-7, "{kind:?} {field:?} coord {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn pullbacks_match_finite_differences() {
        for kind in [ParamKind::Cayley, ParamKind::Exponential] {
            for field in [Field::Real, Field::Complex] {
                check_pullback(kind, field);
            }
        }
    }

    #[test]
    fn rejects_wrong_coordinate_count() {
        assert!(ManifoldParam::new(ParamKind::Cayley, Field::Real, 3, alloc::vec![0.0; 2]).is_err());
    }
}
