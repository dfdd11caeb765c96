//! Nonlocal (Cartan) parameters of a two-qubit gate.
//!
//! In the magic basis local gates `A ⊗ B` become real orthogonal, and the
//! nonlocal core `exp(i(a XX + b YY + c ZZ))` is diagonal with phases
//! `a·x + b·y + c·z` over the sign vectors with `x·y·z = −1`. The
//! spectrum of `G_m^T G_m` therefore carries twice those phases, free of the
//! local factors.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use num_traits::Float;

use super::linalg::{det, jacobi_eigen};
use super::matrix::{c, gates, ComplexMatrix, C64};
use super::model::{rem_euclid, rotation_matrix};
use crate::{QpvError, Result};

/// Canonical nonlocal parameters, sorted so `0 ≤ alpha ≤ beta ≤ gamma ≤ π/4`.
///
/// Each raw coordinate is reduced modulo `π/2` and folded with
/// `x ↦ min(x, π/2 − x)`, so the triple is an invariant of local
/// equivalence together with complex conjugation of the gate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KakParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl KakParams {
    pub fn as_array(&self) -> [f64; 3] {
        [self.alpha, self.beta, self.gamma]
    }

    /// Largest coordinate difference against an (unsorted) expected set.
    pub fn distance_to_set(&self, mut expected: [f64; 3]) -> f64 {
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        self.as_array()
            .iter()
            .zip(expected)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

fn magic_basis() -> ComplexMatrix {
    let s = FRAC_1_SQRT_2;
    let z = c(0.0, 0.0);
    let r = c(s, 0.0);
    let i = c(0.0, s);
    ComplexMatrix::from_vec(
        4,
        4,
        alloc::vec![r, z, z, i, z, i, r, z, z, i, -r, z, r, z, z, -i],
    )
    .expect("magic basis literal")
}

fn fold(x: f64) -> f64 {
    let t = rem_euclid(x, FRAC_PI_2);
    t.min(FRAC_PI_2 - t)
}

/// Extracts the canonical nonlocal parameters of a 4×4 unitary.
pub fn kak_nonlocal_params(g: &ComplexMatrix) -> Result<KakParams> {
    if g.rows() != 4 || g.cols() != 4 {
        return Err(QpvError::DimensionMismatch("KAK needs a 4x4 matrix".into()));
    }
    let deviation = g.unitarity_deviation();
    if deviation > 1e-8 {
        return Err(QpvError::NotUnitary {
            deviation,
            tolerance: 1e-8,
        });
    }
    let q = magic_basis();
    let mut gm = q.adjoint_mul(&g.matmul(&q));
    let dt = det(&gm)?;
    let root = C64::from_polar(1.0, -dt.arg() / 4.0);
    gm = gm.scale(root);
    let m2 = gm.transpose().matmul(&gm);

    // M2 is symmetric unitary, so Re M2 and Im M2 commute and share a real
    // orthonormal eigenbasis; a generic real combination exposes it.
    let re: Vec<f64> = m2.as_slice().iter().map(|z| z.re).collect();
    let im: Vec<f64> = m2.as_slice().iter().map(|z| z.im).collect();
    let mut phases = None;
    for r in [0.4142, 1.1731, 2.2913, 0.0731, 2.9017] {
        let (sn, cs) = r.sin_cos();
        let comb: Vec<f64> = re.iter().zip(&im).map(|(a, b)| cs * a + sn * b).collect();
        let (_, p) = jacobi_eigen(&comb, 4);
        let pm = ComplexMatrix::from_fn(4, 4, |i, j| c(p[i * 4 + j], 0.0));
        let diag = pm.transpose().matmul(&m2.matmul(&pm));
        let off = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .fold(0.0, |m, (i, j)| m.max(diag[(i, j)].norm()));
        if off < 1e-10 {
            phases = Some([0, 1, 2, 3].map(|k| diag[(k, k)].arg() / 2.0));
            break;
        }
    }
    let phi = phases.ok_or(QpvError::Singular)?;
    // weights (1,−1,1), (1,1,−1), (−1,−1,−1), (−1,1,1)
    let raw = [
        (phi[0] + phi[1]) / 2.0,
        (phi[1] + phi[3]) / 2.0,
        (phi[0] + phi[3]) / 2.0,
    ];
    let mut folded = raw.map(fold);
    folded.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(KakParams {
        alpha: folded[0],
        beta: folded[1],
        gamma: folded[2],
    })
}

/// `U_θ = CNOT_AB (I ⊗ |0⟩⟨0| + R_{−θ} ⊗ |1⟩⟨1|)`, the nonlocal gate an
/// attack on `QPV_θ` must implement.
pub fn u_theta(theta: f64) -> ComplexMatrix {
    let p0 = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]).expect("projector");
    let p1 = ComplexMatrix::from_real(2, 2, &[0.0, 0.0, 0.0, 1.0]).expect("projector");
    let controlled = &gates::i2().kron(&p0) + &rotation_matrix(-theta).kron(&p1);
    gates::cnot().matmul(&controlled)
}

/// `exp(i(a XX + b YY + c ZZ))`, built from the magic-basis diagonal.
pub fn canonical_gate(a: f64, b: f64, cc: f64) -> ComplexMatrix {
    let q = magic_basis();
    let weights = [(1.0, -1.0, 1.0), (1.0, 1.0, -1.0), (-1.0, -1.0, -1.0), (-1.0, 1.0, 1.0)];
    // magic-basis columns are Φ+, iΨ+, Ψ−, iΦ−, in weight order
    let diag = ComplexMatrix::from_fn(4, 4, |i, j| {
        if i != j {
            return c(0.0, 0.0);
        }
        let (x, y, z) = weights[i];
        C64::from_polar(1.0, a * x + b * y + cc * z)
    });
    q.matmul(&diag).mul_adjoint(&q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::matrix::gates::*;
    use core::f64::consts::PI;

    #[test]
    fn magic_basis_makes_local_gates_real() {
        let q = magic_basis();
        assert!(q.unitarity_deviation() < 1e-15);
        let local = rotation_matrix(0.3).kron(&h().matmul(&z()));
        let lm = q.adjoint_mul(&local.matmul(&q));
        // H·Z has det −1; a global phase i makes the pair special unitary
        assert!(lm.scale(c(0.0, 1.0)).is_real(1e-14) || lm.is_real(1e-14));
    }

    #[test]
    fn canonical_gate_matches_pauli_exponential() {
        let (a, b, cc) = (0.3, -0.2, 0.7);
        let xx = x().kron(&x());
        let yy = y().kron(&y());
        let zz = z().kron(&z());
        let gen = &(&xx.scale_real(a) + &yy.scale_real(b)) + &zz.scale_real(cc);
        let want = crate::qcore::linalg::expm(&gen.scale(c(0.0, 1.0)));
        assert!((&canonical_gate(a, b, cc) - &want).max_abs() < 1e-13);
    }

    #[test]
    fn identity_has_zero_parameters() {
        let p = kak_nonlocal_params(&ComplexMatrix::identity(4)).unwrap();
        assert!(p.distance_to_set([0.0, 0.0, 0.0]) < 1e-12);
    }

    #[test]
    fn cnot_parameters() {
        let p = kak_nonlocal_params(&cnot()).unwrap();
        assert!(p.distance_to_set([0.0, 0.0, PI / 4.0]) < 1e-12, "{p:?}");
    }

    #[test]
    fn u_theta_parameters_at_pi_over_8() {
        let p = kak_nonlocal_params(&u_theta(PI / 8.0)).unwrap();
        assert!(p.distance_to_set([0.0, PI / 16.0, PI / 4.0]) < 1e-12, "{p:?}");
    }

    #[test]
    fn canonical_gate_round_trips_inside_chamber() {
        let p = kak_nonlocal_params(&canonical_gate(0.1, 0.25, 0.6)).unwrap();
        assert!(p.distance_to_set([0.1, 0.25, 0.6]) < 1e-12, "{p:?}");
        let p = kak_nonlocal_params(&canonical_gate(0.1, 0.25, 1.2)).unwrap();
        assert!(p.distance_to_set([0.1, 0.25, FRAC_PI_2 - 1.2]) < 1e-12, "{p:?}");
    }

    #[test]
    fn non_unitary_is_rejected() {
        let g = cnot().scale_real(1.1);
        assert!(matches!(kak_nonlocal_params(&g), Err(QpvError::NotUnitary { .. })));
        assert!(kak_nonlocal_params(&ComplexMatrix::identity(2)).is_err());
    }
}
