//! `p_err` as a function of manifold coordinates, with its gradient.
//!
//! With `M_b = V (R_{θ_b} ⊗ U_b)`, the error is
//! `c Σ_{b,s,u} min(|M_b[u,s]|², |M_b[u,d+s]|²)` for `c = 1/(2 n_b d)`.
//! Differentiating the active branch (first branch on ties) gives
//! `G_b = 2c M_b` masked to the active entries, and then
//! `∂/∂V = Σ_b G_b K_b†` and `∂/∂U_b = Σ_{ij} (R_{θ_b})_{ij} (V† G_b)_{ij}`,
//! where `(·)_{ij}` is the `(i, j)` block of size `d`.

use alloc::vec;
use alloc::vec::Vec;

use super::manifold::{coords_gradient, n_coords, retract_raw, skew_from_coords, Field, ParamKind, Retracted};
use crate::optim::Objective;
use crate::qcore::linalg::polar_unitary;
use crate::qcore::matrix::ComplexMatrix;
use crate::qcore::{rotation_matrix, AttackStrategy, ProtocolSpec, UnitaryMatrix};
use crate::{QpvError, Result};

/// Coordinate layout of a strategy: `V` first, then `U_1, …, U_{n−1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StrategyLayout {
    pub d: usize,
    pub n_free: usize,
    pub kind: ParamKind,
    pub field: Field,
}

impl StrategyLayout {
    pub fn new(d: usize, protocol: &ProtocolSpec, kind: ParamKind, field: Field) -> Result<Self> {
        if d == 0 {
            return Err(QpvError::InvalidArgument("d must be positive".into()));
        }
        Ok(Self {
            d,
            n_free: protocol.n_free_unitaries(),
            kind,
            field,
        })
    }

    pub fn v_coords(&self) -> usize {
        n_coords(self.field, 2 * self.d)
    }

    pub fn u_coords(&self) -> usize {
        n_coords(self.field, self.d)
    }

    pub fn n_coords(&self) -> usize {
        self.v_coords() + self.n_free * self.u_coords()
    }

    fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], impl Iterator<Item = &'a [f64]>) {
        let (v, rest) = x.split_at(self.v_coords());
        let uc = self.u_coords();
        (v, (0..self.n_free).map(move |b| &rest[b * uc..(b + 1) * uc]))
    }

    fn retract_all(&self, x: &[f64]) -> Option<(Retracted, Vec<Retracted>)> {
        let (vx, ux) = self.split(x);
        let v = retract_raw(self.kind, skew_from_coords(self.field, 2 * self.d, vx))?;
        let us = ux
            .map(|u| retract_raw(self.kind, skew_from_coords(self.field, self.d, u)))
            .collect::<Option<Vec<_>>>()?;
        Some((v, us))
    }

    /// The strategy encoded by `x`, projected onto the nearest unitaries to
    /// remove round-off from ill-conditioned retractions.
    pub fn strategy(&self, x: &[f64]) -> Result<AttackStrategy> {
        if x.len() != self.n_coords() {
            return Err(QpvError::DimensionMismatch(alloc::format!(
                "{} coordinates given, layout has {}",
                x.len(),
                self.n_coords()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(QpvError::NonFinite);
        }
        let (v, us) = self.retract_all(x).ok_or(QpvError::Singular)?;
        let project = |m: &ComplexMatrix| UnitaryMatrix::new(polar_unitary(m)?);
        let us = us.iter().map(|u| project(u.u())).collect::<Result<Vec<_>>>()?;
        AttackStrategy::multibase(us, project(v.u())?)
    }
}

/// The `p_err` objective for one protocol.
#[derive(Clone, Debug)]
pub struct PErrObjective {
    layout: StrategyLayout,
    rotations: Vec<ComplexMatrix>,
}

impl PErrObjective {
    pub fn new(d: usize, protocol: &ProtocolSpec, kind: ParamKind, field: Field) -> Result<Self> {
        let layout = StrategyLayout::new(d, protocol, kind, field)?;
        let rotations = protocol.angles().into_iter().map(rotation_matrix).collect();
        Ok(Self { layout, rotations })
    }

    pub fn layout(&self) -> &StrategyLayout {
        &self.layout
    }

    /// `p_err` at `x` and, if `grad` is given, its gradient. `None` at a
    /// Cayley exceptional point.
    pub fn evaluate(&self, x: &[f64], grad: Option<&mut [f64]>) -> Option<f64> {
        let d = self.layout.d;
        let nb = self.rotations.len();
        let (vr, urs) = self.layout.retract_all(x)?;
        let v = vr.u();
        let id = ComplexMatrix::identity(d);
        let scale = 1.0 / (2 * nb * d) as f64;
        let want_grad = grad.is_some();

        let mut p = 0.0;
        let mut grad_v = ComplexMatrix::zeros(2 * d, 2 * d);
        let mut grad_us: Vec<ComplexMatrix> = Vec::with_capacity(urs.len());
        for (b, rot) in self.rotations.iter().enumerate() {
            let ub = if b == 0 { &id } else { urs[b - 1].u() };
            let k = rot.kron(ub);
            let m = v.matmul(&k);
            let mut g = ComplexMatrix::zeros(2 * d, 2 * d);
            for u in 0..2 * d {
                for s in 0..d {
                    let (a0, a1) = (m[(u, s)], m[(u, d + s)]);
                    let (p0, p1) = (a0.norm_sqr(), a1.norm_sqr());
                    if p0 <= p1 {
                        p += p0;
                        g[(u, s)] = a0 * (2.0 * scale);
                    } else {
                        p += p1;
                        g[(u, d + s)] = a1 * (2.0 * scale);
                    }
                }
            }
            if !want_grad {
                continue;
            }
            grad_v = &grad_v + &g.mul_adjoint(&k);
            if b > 0 {
                let w = v.adjoint_mul(&g);
                let mut gu = ComplexMatrix::zeros(d, d);
                for i in 0..2 {
                    for j in 0..2 {
                        let r = rot[(i, j)];
                        for a in 0..d {
                            for e in 0..d {
                                gu[(a, e)] += r * w[(i * d + a, j * d + e)];
                            }
                        }
                    }
                }
                grad_us.push(gu);
            }
        }
        let p = (p * scale).clamp(0.0, 0.5);
        if let Some(out) = grad {
            let field = self.layout.field;
            let vc = self.layout.v_coords();
            let uc = self.layout.u_coords();
            coords_gradient(field, &vr.pullback(&grad_v), &mut out[..vc]);
            for (b, (ur, gu)) in urs.iter().zip(&grad_us).enumerate() {
                coords_gradient(field, &ur.pullback(gu), &mut out[vc + b * uc..vc + (b + 1) * uc]);
            }
        }
        Some(p)
    }
}

impl Objective for PErrObjective {
    fn dim(&self) -> usize {
        self.layout.n_coords()
    }

    fn eval(&mut self, x: &[f64], grad: &mut [f64]) -> Option<f64> {
        self.evaluate(x, Some(grad))
    }
}

/// `(p_err, gradient)` at `coords`.
pub fn objective_and_gradient(
    coords: &[f64],
    d: usize,
    protocol: &ProtocolSpec,
    kind: ParamKind,
    field: Field,
) -> Result<(f64, Vec<f64>)> {
    let obj = PErrObjective::new(d, protocol, kind, field)?;
    if coords.len() != obj.layout.n_coords() {
        return Err(QpvError::DimensionMismatch(alloc::format!(
            "{} coordinates given, layout has {}",
            coords.len(),
            obj.layout.n_coords()
        )));
    }
    let mut g = vec![0.0; coords.len()];
    let p = obj.evaluate(coords, Some(&mut g)).ok_or(QpvError::Singular)?;
    Ok((p, g))
}

/// Smallest gap `| |M[u,s]|² − |M[u,d+s]|² |` over all entries; small values
/// mean the gradient is near a branch switch.
pub fn min_branch_gap(strategy: &AttackStrategy, protocol: &ProtocolSpec) -> Result<f64> {
    let t = crate::qcore::output_states(strategy, protocol)?;
    let d = t.d();
    let mut gap = f64::INFINITY;
    for b in 0..t.n_bases() {
        for s in 0..d {
            for u in 0..2 * d {
                gap = gap.min((t.prob(b, 0, s, u) - t.prob(b, 1, s, u)).abs());
            }
        }
    }
    Ok(gap)
}
