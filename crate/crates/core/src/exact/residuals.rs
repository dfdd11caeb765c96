//! Polynomial residual system whose common zeros are exact attacks.
//!
//! Variables are the entries of `U` (row-major, `d²`) followed by those of
//! `V` (row-major, `4d²`). In complex mode the real parts come first and the
//! imaginary parts follow, offset by `5d²`.
//!
//! Residual order: the `b = 0` products `V*_{u,s} V_{u,d+s}`, the `b = 1`
//! products `M*_{u,s} M_{u,d+s}` with `M = V (R_θ ⊗ U)`, then the upper
//! triangles of `U†U − I` and `V†V − I`. Complex residuals contribute their
//! real and imaginary parts as consecutive entries; diagonal unitarity
//! residuals are real and contribute one.

use alloc::vec;
use alloc::vec::Vec;

use crate::optim::lm::{LeastSquaresProblem, SparseJacobian};
use crate::qcore::matrix::{c, ComplexMatrix, C64};
use crate::qcore::model::rotation_matrix;
use crate::{QpvError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SearchMode {
    /// Real orthogonal `U`, `V`.
    Real,
    /// Complex unitary `U`, `V`.
    Complex,
}

impl SearchMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Real => "real",
            Self::Complex => "complex",
        }
    }
}

/// `(13d² + 3d)/2` real residuals over `5d²` variables in real mode,
/// `13d²` residuals over `10d²` variables in complex mode.
#[derive(Clone, Debug)]
pub struct ResidualSystem {
    d: usize,
    theta: f64,
    mode: SearchMode,
    rot: [[f64; 2]; 2],
}

/// Contribution of one complex variable to the differential of a residual:
/// `dr = holo·dz + anti·dz̄`.
#[derive(Clone, Copy)]
struct Term {
    var: usize,
    holo: C64,
    anti: C64,
}

impl ResidualSystem {
    pub fn new(d: usize, theta: f64, mode: SearchMode) -> Result<Self> {
        if d == 0 {
            return Err(QpvError::InvalidArgument("d must be at least 1".into()));
        }
        if !theta.is_finite() {
            return Err(QpvError::InvalidProtocol("angle must be finite".into()));
        }
        let r = rotation_matrix(theta);
        let rot = [[r[(0, 0)].re, r[(0, 1)].re], [r[(1, 0)].re, r[(1, 1)].re]];
        Ok(Self { d, theta, mode, rot })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn mode(&self) -> SearchMode {
        self.mode
    }

    fn n_complex_vars(&self) -> usize {
        5 * self.d * self.d
    }

    pub fn n_vars(&self) -> usize {
        match self.mode {
            SearchMode::Real => self.n_complex_vars(),
            SearchMode::Complex => 2 * self.n_complex_vars(),
        }
    }

    pub fn n_residuals(&self) -> usize {
        let d = self.d;
        match self.mode {
            SearchMode::Real => (13 * d * d + 3 * d) / 2,
            SearchMode::Complex => 13 * d * d,
        }
    }

    /// Real-variable count with the DDC products counted as complex
    /// (two real equations each): `8d² + d(d+1)/2 + d(2d+1)`.
    pub fn complex_counted_ddc_residuals(d: usize) -> usize {
        8 * d * d + d * (d + 1) / 2 + d * (2 * d + 1)
    }

    fn u_var(&self, i: usize, j: usize) -> usize {
        i * self.d + j
    }

    fn v_var(&self, i: usize, j: usize) -> usize {
        self.d * self.d + i * 2 * self.d + j
    }

    /// Splits a point into `(U, V)`.
    pub fn unpack(&self, x: &[f64]) -> (ComplexMatrix, ComplexMatrix) {
        let d = self.d;
        let nc = self.n_complex_vars();
        let get = |k: usize| match self.mode {
            SearchMode::Real => c(x[k], 0.0),
            SearchMode::Complex => c(x[k], x[nc + k]),
        };
        let u = ComplexMatrix::from_fn(d, d, |i, j| get(self.u_var(i, j)));
        let v = ComplexMatrix::from_fn(2 * d, 2 * d, |i, j| get(self.v_var(i, j)));
        (u, v)
    }

    /// Inverse of [`unpack`](Self::unpack); real mode drops imaginary parts.
    pub fn pack(&self, u: &ComplexMatrix, v: &ComplexMatrix) -> Result<Vec<f64>> {
        let d = self.d;
        if u.rows() != d || u.cols() != d || v.rows() != 2 * d || v.cols() != 2 * d {
            return Err(QpvError::DimensionMismatch("U must be d x d and V 2d x 2d".into()));
        }
        let nc = self.n_complex_vars();
        let mut x = vec![0.0; self.n_vars()];
        let mut put = |k: usize, z: C64| {
            x[k] = z.re;
            if self.mode == SearchMode::Complex {
                x[nc + k] = z.im;
            }
        };
        for i in 0..d {
            for j in 0..d {
                put(self.u_var(i, j), u[(i, j)]);
            }
        }
        for i in 0..2 * d {
            for j in 0..2 * d {
                put(self.v_var(i, j), v[(i, j)]);
            }
        }
        Ok(x)
    }

    /// Evaluates residuals and, optionally, Jacobian rows in one pass so the
    /// two always agree on ordering.
    fn eval(&self, x: &[f64], out: &mut [f64], mut jac: Option<&mut SparseJacobian>) {
        let d = self.d;
        let n2 = 2 * d;
        let (u, v) = self.unpack(x);
        let k = rotation_matrix(self.theta).kron(&u);
        let m = v.matmul(&k);
        let rot = self.rot;
        let mut row = 0;
        let mut terms: Vec<Term> = Vec::with_capacity(4 * d);

        let mut emit = |value: C64, terms: &[Term], real_only: bool, jac: &mut Option<&mut SparseJacobian>| {
            match self.mode {
                SearchMode::Real => {
                    out[row] = value.re;
                    row += 1;
                    if let Some(j) = jac.as_deref_mut() {
                        for t in terms {
                            j.push(t.var, (t.holo + t.anti).re);
                        }
                        j.end_row();
                    }
                }
                SearchMode::Complex => {
                    let nc = 5 * d * d;
                    out[row] = value.re;
                    row += 1;
                    if let Some(j) = jac.as_deref_mut() {
                        for t in terms {
                            let da = t.holo + t.anti;
                            let db = (t.holo - t.anti) * c(0.0, 1.0);
                            j.push(t.var, da.re);
                            j.push(nc + t.var, db.re);
                        }
                        j.end_row();
                    }
                    if !real_only {
                        out[row] = value.im;
                        row += 1;
                        if let Some(j) = jac.as_deref_mut() {
                            for t in terms {
                                let da = t.holo + t.anti;
                                let db = (t.holo - t.anti) * c(0.0, 1.0);
                                j.push(t.var, da.im);
                                j.push(nc + t.var, db.im);
                            }
                            j.end_row();
                        }
                    }
                }
            }
        };

        // b = 0: conj(V[u,s]) V[u,d+s]
        for uu in 0..n2 {
            for s in 0..d {
                let (a, b) = (v[(uu, s)], v[(uu, d + s)]);
                terms.clear();
                terms.push(Term { var: self.v_var(uu, s), holo: C64::new(0.0, 0.0), anti: b });
                terms.push(Term { var: self.v_var(uu, d + s), holo: a.conj(), anti: C64::new(0.0, 0.0) });
                emit(a.conj() * b, &terms, false, &mut jac);
            }
        }
        // b = 1: conj(M[u,s]) M[u,d+s]
        for uu in 0..n2 {
            // W[t][x] = Σ_y V[u, y d + t] R[y, x]
            let w: Vec<[C64; 2]> = (0..d)
                .map(|t| {
                    let (v0, v1) = (v[(uu, t)], v[(uu, d + t)]);
                    [v0 * rot[0][0] + v1 * rot[1][0], v0 * rot[0][1] + v1 * rot[1][1]]
                })
                .collect();
            for s in 0..d {
                let (m1, m2) = (m[(uu, s)], m[(uu, d + s)]);
                terms.clear();
                if jac.is_some() {
                    for j in 0..n2 {
                        terms.push(Term {
                            var: self.v_var(uu, j),
                            holo: m1.conj() * k[(j, d + s)],
                            anti: m2 * k[(j, s)].conj(),
                        });
                    }
                    for (t, wt) in w.iter().enumerate() {
                        terms.push(Term {
                            var: self.u_var(t, s),
                            holo: m1.conj() * wt[1],
                            anti: m2 * wt[0].conj(),
                        });
                    }
                }
                emit(m1.conj() * m2, &terms, false, &mut jac);
            }
        }
        // unitarity: Σ_k conj(A[k,i]) A[k,j] − δ_ij for i ≤ j
        for (dim, is_u) in [(d, true), (n2, false)] {
            let mat = if is_u { &u } else { &v };
            let var = |r: usize, col: usize| if is_u { self.u_var(r, col) } else { self.v_var(r, col) };
            for i in 0..dim {
                for j in i..dim {
                    let mut val: C64 = (0..dim).map(|r| mat[(r, i)].conj() * mat[(r, j)]).sum();
                    if i == j {
                        val -= 1.0;
                    }
                    terms.clear();
                    if jac.is_some() {
                        for r in 0..dim {
                            terms.push(Term { var: var(r, i), holo: C64::new(0.0, 0.0), anti: mat[(r, j)] });
                            terms.push(Term { var: var(r, j), holo: mat[(r, i)].conj(), anti: C64::new(0.0, 0.0) });
                        }
                    }
                    emit(val, &terms, i == j, &mut jac);
                }
            }
        }
        debug_assert_eq!(row, self.n_residuals());
    }

    pub fn residuals(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_residuals()];
        self.eval(x, &mut out, None);
        out
    }

    pub fn jacobian(&self, x: &[f64]) -> SparseJacobian {
        let mut jac = SparseJacobian::new(self.n_vars());
        let mut scratch = vec![0.0; self.n_residuals()];
        self.eval(x, &mut scratch, Some(&mut jac));
        jac
    }
}

impl LeastSquaresProblem for ResidualSystem {
    fn n_vars(&self) -> usize {
        ResidualSystem::n_vars(self)
    }

    fn n_residuals(&self) -> usize {
        ResidualSystem::n_residuals(self)
    }

    fn residuals(&self, x: &[f64], out: &mut [f64]) {
        self.eval(x, out, None);
    }

    fn jacobian(&self, x: &[f64], jac: &mut SparseJacobian) {
        let mut scratch = vec![0.0; ResidualSystem::n_residuals(self)];
        self.eval(x, &mut scratch, Some(jac));
    }
}

/// `F = Σ f_i²`.
pub fn sum_of_squares(sys: &ResidualSystem, x: &[f64]) -> Result<f64> {
    if x.len() != sys.n_vars() {
        return Err(QpvError::DimensionMismatch(alloc::format!(
            "point has {} coordinates, system expects {}",
            x.len(),
            sys.n_vars()
        )));
    }
    Ok(sys.residuals(x).iter().map(|f| f * f).sum())
}

/// Convenience constructor mirroring the operation name.
pub fn build_residuals(d: usize, theta: f64, mode: SearchMode) -> Result<ResidualSystem> {
    ResidualSystem::new(d, theta, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_4;

    fn lcg(state: &mut u64) -> f64 {
        *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    #[test]
    fn counts() {
        let s = build_residuals(2, 0.3, SearchMode::Real).unwrap();
        assert_eq!((s.n_vars(), s.n_residuals()), (20, 29));
        let s = build_residuals(4, 0.3, SearchMode::Real).unwrap();
        assert_eq!((s.n_vars(), s.n_residuals()), (80, 110));
        assert_eq!(ResidualSystem::complex_counted_ddc_residuals(4), 174);
        let s = build_residuals(3, 0.3, SearchMode::Complex).unwrap();
        assert_eq!((s.n_vars(), s.n_residuals()), (90, 117));
    }

    #[test]
    fn zero_point_has_pure_unitarity_cost() {
        for d in 1..=4 {
            let s = build_residuals(d, 0.7, SearchMode::Real).unwrap();
            let f = sum_of_squares(&s, &vec![0.0; s.n_vars()]).unwrap();
            assert!((f - 3.0 * d as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_cost_at_quarter_turn() {
        for d in 1..=4 {
            for mode in [SearchMode::Real, SearchMode::Complex] {
                let s = build_residuals(d, FRAC_PI_4, mode).unwrap();
                let x = s.pack(&ComplexMatrix::identity(d), &ComplexMatrix::identity(2 * d)).unwrap();
                let f = sum_of_squares(&s, &x).unwrap();
                assert!((f - d as f64 / 2.0).abs() < 1e-14, "{f}");
            }
        }
    }

    #[test]
    fn pack_round_trips() {
        let mut st = 9;
        let s = build_residuals(3, 0.2, SearchMode::Complex).unwrap();
        let x: Vec<f64> = (0..s.n_vars()).map(|_| lcg(&mut st)).collect();
        let (u, v) = s.unpack(&x);
        assert_eq!(s.pack(&u, &v).unwrap(), x);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut st = 1;
        for mode in [SearchMode::Real, SearchMode::Complex] {
            for d in 1..=3 {
                let s = build_residuals(d, 0.37, mode).unwrap();
                let x: Vec<f64> = (0..s.n_vars()).map(|_| lcg(&mut st)).collect();
                let j = s.jacobian(&x).to_dense();
                let n = s.n_vars();
                let h = 1e-6;
                for k in 0..n {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[k] += h;
                    xm[k] -= h;
                    let (fp, fm) = (s.residuals(&xp), s.residuals(&xm));
                    for r in 0..s.n_residuals() {
                        let fd = (fp[r] - fm[r]) / (2.0 * h);
                        let an = j[r * n + k];
                        assert!((fd - an).abs() <= 1e-7 * (1.0 + an.abs()), "{mode:?} d={d} r={r} k={k}: {fd} vs {an}");
                    }
                }
            }
        }
    }
}
