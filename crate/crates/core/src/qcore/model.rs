//! Protocol description, reduced attack strategies and their output states.
//!
//! The 2d-dimensional output space is indexed qubit-major: `u = x·d + s`.
//! With that ordering the state `ψ_b(x, s)` is column `x·d + s` of
//! `V · (R_{θ_b} ⊗ U_b)`, and `b = 0` with `U = V = I` gives the
//! computational-basis indicator table.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use super::matrix::{c, ComplexMatrix, UnitaryMatrix, C64};
use crate::{QpvError, Result};

/// `x mod m` into `[0, m)`.
pub(crate) fn rem_euclid(x: f64, m: f64) -> f64 {
    let r = x % m;
    if r < 0.0 {
        r + m
    } else {
        r
    }
}

/// The verifier's basis rotation `[[cos θ, −sin θ], [sin θ, cos θ]]`.
pub fn rotation_matrix(theta: f64) -> ComplexMatrix {
    let (s, co) = theta.sin_cos();
    ComplexMatrix::from_fn(2, 2, |i, j| c([[co, -s], [s, co]][i][j], 0.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProtocolSpec {
    /// `QPV_θ`: bases `R_0 = I` and `R_θ`.
    SingleAngle(f64),
    /// `QPV_(n)`: `n` bases at angles `bπ/(2n)`.
    MultiBase(usize),
}

impl ProtocolSpec {
    /// Validated single-angle protocol; `θ` is reduced into `[0, 2π)`.
    pub fn single(theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(QpvError::InvalidProtocol("angle must be finite".into()));
        }
        Ok(Self::SingleAngle(rem_euclid(theta, 2.0 * PI)))
    }

    pub fn multibase(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(QpvError::InvalidProtocol(format!("need n >= 2 bases, got {n}")));
        }
        Ok(Self::MultiBase(n))
    }

    pub fn n_bases(&self) -> usize {
        match *self {
            Self::SingleAngle(_) => 2,
            Self::MultiBase(n) => n,
        }
    }

    /// Basis angles `θ_0 = 0, θ_1, …`.
    pub fn angles(&self) -> Vec<f64> {
        match *self {
            Self::SingleAngle(t) => alloc::vec![0.0, t],
            Self::MultiBase(n) => (0..n).map(|b| b as f64 * PI / (2 * n) as f64).collect(),
        }
    }

    /// Number of free `U_b` unitaries a strategy against this protocol carries.
    pub fn n_free_unitaries(&self) -> usize {
        self.n_bases() - 1
    }
}

/// Folds an angle into `[0, π/4]` using `R_{θ+π/2} ≅ R_θ` (relabel `x`)
/// and `R_{π/2−θ} = X R_θ Z`.
pub fn fold_angle(theta: f64) -> f64 {
    let t = rem_euclid(theta, FRAC_PI_2);
    if t > FRAC_PI_2 / 2.0 {
        FRAC_PI_2 - t
    } else {
        t
    }
}

/// True when `sin θ cos θ = 0`, i.e. the four input states are orthogonal.
pub fn is_classical(theta: f64, tol: f64) -> bool {
    let t = rem_euclid(theta, FRAC_PI_2);
    t < tol || FRAC_PI_2 - t < tol
}

/// A reduced attack: `V` on qubit ⊗ Alice's half, and the `U_b` (b ≥ 1)
/// applied to Alice's half when the basis is `b`. `U_0 = I`.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackStrategy {
    d: usize,
    us: Vec<UnitaryMatrix>,
    v: UnitaryMatrix,
}

impl AttackStrategy {
    /// Two-basis strategy `(U, V)`.
    pub fn new(u: UnitaryMatrix, v: UnitaryMatrix) -> Result<Self> {
        Self::multibase(alloc::vec![u], v)
    }

    /// Strategy carrying `U_1..U_{n-1}`.
    pub fn multibase(us: Vec<UnitaryMatrix>, v: UnitaryMatrix) -> Result<Self> {
        if v.dim() % 2 != 0 || v.dim() == 0 {
            return Err(QpvError::DimensionMismatch(format!("V must be 2d x 2d, got {}", v.dim())));
        }
        let d = v.dim() / 2;
        if us.is_empty() {
            return Err(QpvError::DimensionMismatch("at least one U is required".into()));
        }
        if let Some(bad) = us.iter().find(|u| u.dim() != d) {
            return Err(QpvError::DimensionMismatch(format!(
                "U is {0}x{0} but V implies d = {d}",
                bad.dim()
            )));
        }
        Ok(Self { d, us, v })
    }

    /// Builds a strategy from raw matrices, checking unitarity at `tol`.
    pub fn from_matrices(us: Vec<ComplexMatrix>, v: ComplexMatrix, tol: f64) -> Result<Self> {
        let us = us
            .into_iter()
            .map(|u| UnitaryMatrix::with_tolerance(u, tol))
            .collect::<Result<Vec<_>>>()?;
        Self::multibase(us, UnitaryMatrix::with_tolerance(v, tol)?)
    }

    pub fn identity(d: usize, n_free: usize) -> Self {
        Self {
            d,
            us: (0..n_free).map(|_| UnitaryMatrix::identity(d)).collect(),
            v: UnitaryMatrix::identity(2 * d),
        }
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    /// `U_1` (the `U` of a two-basis strategy).
    pub fn u(&self) -> &UnitaryMatrix {
        &self.us[0]
    }

    pub fn us(&self) -> &[UnitaryMatrix] {
        &self.us
    }

    pub fn v(&self) -> &UnitaryMatrix {
        &self.v
    }

    pub(crate) fn check_protocol(&self, protocol: &ProtocolSpec) -> Result<()> {
        if self.us.len() != protocol.n_free_unitaries() {
            return Err(QpvError::DimensionMismatch(format!(
                "protocol needs {} U matrices, strategy has {}",
                protocol.n_free_unitaries(),
                self.us.len()
            )));
        }
        Ok(())
    }
}

/// Amplitudes `⟨u|ψ_b(x,s)⟩` for every `(b, x, s, u)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputStateTable {
    d: usize,
    n_bases: usize,
    /// One `2d × 2d` matrix per basis; column `x·d + s` is `ψ_b(x, s)`.
    columns: Vec<ComplexMatrix>,
}

impl OutputStateTable {
    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn n_bases(&self) -> usize {
        self.n_bases
    }

    #[inline]
    pub fn amp(&self, b: usize, x: usize, s: usize, u: usize) -> C64 {
        self.columns[b][(u, x * self.d + s)]
    }

    #[inline]
    pub fn prob(&self, b: usize, x: usize, s: usize, u: usize) -> f64 {
        self.amp(b, x, s, u).norm_sqr()
    }

    /// The state `ψ_b(x, s)` as a column vector.
    pub fn state(&self, b: usize, x: usize, s: usize) -> Vec<C64> {
        let col = x * self.d + s;
        (0..2 * self.d).map(|u| self.columns[b][(u, col)]).collect()
    }

    /// Per-basis matrix whose columns are the states.
    pub fn basis_matrix(&self, b: usize) -> &ComplexMatrix {
        &self.columns[b]
    }

    /// `⟨ψ_b(x,s)|ψ_b'(y,t)⟩`.
    pub fn overlap(&self, (b, x, s): (usize, usize, usize), (b2, y, t): (usize, usize, usize)) -> C64 {
        (0..2 * self.d)
            .map(|u| self.amp(b, x, s, u).conj() * self.amp(b2, y, t, u))
            .sum()
    }
}

/// `V (R_{θ_b} ⊗ U_b)` for each basis, from raw matrices. `us[b-1]` is `U_b`.
pub(crate) fn basis_products(us: &[&ComplexMatrix], v: &ComplexMatrix, angles: &[f64]) -> Vec<ComplexMatrix> {
    angles
        .iter()
        .enumerate()
        .map(|(b, &theta)| {
            if b == 0 {
                v.clone()
            } else {
                v.matmul(&rotation_matrix(theta).kron(us[b - 1]))
            }
        })
        .collect()
}

/// Builds the output-state table of `strategy` against `protocol`.
pub fn output_states(strategy: &AttackStrategy, protocol: &ProtocolSpec) -> Result<OutputStateTable> {
    strategy.check_protocol(protocol)?;
    let us: Vec<&ComplexMatrix> = strategy.us.iter().map(|u| u.matrix()).collect();
    Ok(table_from_raw(strategy.d, &us, strategy.v.matrix(), protocol))
}

pub(crate) fn table_from_raw(d: usize, us: &[&ComplexMatrix], v: &ComplexMatrix, protocol: &ProtocolSpec) -> OutputStateTable {
    let angles = protocol.angles();
    OutputStateTable {
        d,
        n_bases: angles.len(),
        columns: basis_products(us, v, &angles),
    }
}
