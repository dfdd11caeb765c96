//! The unreduced two-station attack and its reduction to `(U, V)`.
//!
//! [`simulate_spacetime`] runs the full three-register circuit (verifier
//! qubit, Alice's half, Bob's half of `|Φ⟩`) with no use of the
//! transpose trick, so it serves as an independent oracle for
//! [`reduce_spacetime`].

use alloc::vec;
use alloc::vec::Vec;

use super::matrix::{c, ComplexMatrix, UnitaryMatrix};
use super::model::{rotation_matrix, AttackStrategy};
use crate::{QpvError, Result};

/// Alice applies `V′` to (qubit ⊗ her half); Bob applies `W_b` to his half.
#[derive(Clone, Debug, PartialEq)]
pub struct SpacetimeStrategy {
    d: usize,
    v_prime: UnitaryMatrix,
    w0: UnitaryMatrix,
    w1: UnitaryMatrix,
}

impl SpacetimeStrategy {
    pub fn new(v_prime: UnitaryMatrix, w0: UnitaryMatrix, w1: UnitaryMatrix) -> Result<Self> {
        let d = w0.dim();
        if w1.dim() != d || v_prime.dim() != 2 * d {
            return Err(QpvError::DimensionMismatch(alloc::format!(
                "V' is {}, W0 is {}, W1 is {}",
                v_prime.dim(),
                w0.dim(),
                w1.dim()
            )));
        }
        Ok(Self { d, v_prime, w0, w1 })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn v_prime(&self) -> &UnitaryMatrix {
        &self.v_prime
    }

    pub fn w(&self, b: usize) -> &UnitaryMatrix {
        if b == 0 {
            &self.w0
        } else {
            &self.w1
        }
    }
}

/// `U = (W_1 W_0†)^T`, `V = V′ (I ⊗ W_0^T)`.
pub fn reduce_spacetime(st: &SpacetimeStrategy) -> Result<AttackStrategy> {
    let w0 = st.w0.matrix();
    let u = st.w1.matrix().mul_adjoint(w0).transpose();
    let v = st
        .v_prime
        .matrix()
        .matmul(&ComplexMatrix::identity(2).kron(&w0.transpose()));
    let tol = 10.0 * st.v_prime.tolerance().max(st.w0.tolerance()).max(st.w1.tolerance());
    AttackStrategy::new(
        UnitaryMatrix::with_tolerance(u, tol)?,
        UnitaryMatrix::with_tolerance(v, tol)?,
    )
}

/// Joint outcome distribution of one protocol round under the full circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct SpacetimeOutcome {
    d: usize,
    /// `p(b, x, s, u)` with `b, x` uniform, flattened as `((b·2 + x)·d + s)·2d + u`.
    probs: Vec<f64>,
    success: f64,
}

impl SpacetimeOutcome {
    pub fn prob(&self, b: usize, x: usize, s: usize, u: usize) -> f64 {
        let d = self.d;
        self.probs[((b * 2 + x) * d + s) * 2 * d + u]
    }

    /// Probability the optimal decoder `f(b, s, u)` recovers `x`.
    pub fn success_probability(&self) -> f64 {
        self.success
    }

    /// Marginal distribution of Bob's outcome `s`.
    pub fn s_marginal(&self) -> Vec<f64> {
        let d = self.d;
        let mut m = vec![0.0; d];
        for b in 0..2 {
            for x in 0..2 {
                for (s, ms) in m.iter_mut().enumerate() {
                    for u in 0..2 * d {
                        *ms += self.prob(b, x, s, u);
                    }
                }
            }
        }
        m
    }

    pub fn total_probability(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// Simulates `|Φ⟩ = Σ_s |s⟩|s⟩/√d`, the verifier's `R_θ^b |x⟩`, `V′` on
/// (qubit ⊗ A), `W_b` on B, and computational-basis measurements of both.
pub fn simulate_spacetime(st: &SpacetimeStrategy, theta: f64) -> SpacetimeOutcome {
    let d = st.d;
    let dim = 2 * d * d;
    let amp = 1.0 / (d as f64).sqrt();
    let mut probs = vec![0.0; 4 * d * 2 * d];
    for b in 0..2 {
        let rot = if b == 0 { ComplexMatrix::identity(2) } else { rotation_matrix(theta) };
        let joint = st.v_prime.matrix().kron(st.w(b).matrix());
        for x in 0..2 {
            // register order (qubit, A, B): index (q·d + a)·d + bb
            let mut psi = ComplexMatrix::zeros(dim, 1);
            for q in 0..2 {
                for s in 0..d {
                    psi[((q * d + s) * d + s, 0)] = rot[(q, x)] * c(amp, 0.0);
                }
            }
            let out = joint.matmul(&psi);
            for u in 0..2 * d {
                for s in 0..d {
                    probs[((b * 2 + x) * d + s) * 2 * d + u] = 0.25 * out[(u * d + s, 0)].norm_sqr();
                }
            }
        }
    }
    let mut success = 0.0;
    for b in 0..2 {
        for s in 0..d {
            for u in 0..2 * d {
                let p0 = probs[((b * 2) * d + s) * 2 * d + u];
                let p1 = probs[((b * 2 + 1) * d + s) * 2 * d + u];
                success += p0.max(p1);
            }
        }
    }
    SpacetimeOutcome { d, probs, success }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::matrix::gates;

    #[test]
    fn trivial_reduction() {
        let v = UnitaryMatrix::new(gates::cnot()).unwrap();
        let st = SpacetimeStrategy::new(v.clone(), UnitaryMatrix::identity(2), UnitaryMatrix::identity(2)).unwrap();
        let r = reduce_spacetime(&st).unwrap();
        assert!((&r.u().matrix().clone() - &ComplexMatrix::identity(2)).max_abs() < 1e-15);
        assert!((&r.v().matrix().clone() - v.matrix()).max_abs() < 1e-15);
    }

    #[test]
    fn hadamard_transpose_reduction() {
        let h = UnitaryMatrix::new(gates::h()).unwrap();
        let st = SpacetimeStrategy::new(UnitaryMatrix::identity(4), UnitaryMatrix::identity(2), h.transpose()).unwrap();
        let r = reduce_spacetime(&st).unwrap();
        assert!((&r.u().matrix().clone() - &gates::h()).max_abs() < 1e-15);
    }

    #[test]
    fn identity_attack_on_classical_protocol_always_succeeds() {
        for d in 1..=3 {
            let st = SpacetimeStrategy::new(
                UnitaryMatrix::identity(2 * d),
                UnitaryMatrix::identity(d),
                UnitaryMatrix::identity(d),
            )
            .unwrap();
            let out = simulate_spacetime(&st, 0.0);
            assert!((out.success_probability() - 1.0).abs() < 1e-14);
            assert!((out.total_probability() - 1.0).abs() < 1e-14);
            for p in out.s_marginal() {
                assert!((p - 1.0 / d as f64).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let r = SpacetimeStrategy::new(UnitaryMatrix::identity(4), UnitaryMatrix::identity(3), UnitaryMatrix::identity(3));
        assert!(r.is_err());
    }
}
