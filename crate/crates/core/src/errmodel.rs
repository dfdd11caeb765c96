//! Error probability of an attack, the deterministic distinguishability
//! condition (DDC), decoders and closed-form baselines.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use crate::error::DdcConflict;
use crate::qcore::matrix::{gates, ComplexMatrix, UnitaryMatrix};
use crate::qcore::model::{fold_angle, output_states, rotation_matrix, AttackStrategy, OutputStateTable, ProtocolSpec};
use crate::{QpvError, Result};

/// Outcomes less likely than this are treated as never observed.
pub const DECODER_THRESHOLD: f64 = 1e-14;
/// `p_err` below this counts as an exact attack.
pub const EXACT_THRESHOLD: f64 = 1e-12;

/// Flat index of a `(b, s, u)` outcome in per-outcome arrays.
#[inline]
pub fn outcome_index(d: usize, b: usize, s: usize, u: usize) -> usize {
    (b * d + s) * 2 * d + u
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub p_err: f64,
    /// `min{|⟨u|ψ_b(0,s)⟩|², |⟨u|ψ_b(1,s)⟩|²}` per outcome, see [`outcome_index`].
    pub contributions: Vec<f64>,
    pub is_exact: bool,
    /// `max |⟨u|ψ_b(0,s)⟩ · ⟨u|ψ_b(1,s)⟩|`
    pub worst_ddc: f64,
    /// `max |Σ_s |⟨u|ψ_b(x,s)⟩|² − ½|`
    pub balanced_deviation: f64,
    pub d: usize,
    pub n_bases: usize,
}

impl ErrorReport {
    pub fn contribution(&self, b: usize, s: usize, u: usize) -> f64 {
        self.contributions[outcome_index(self.d, b, s, u)]
    }
}

/// Builds the [`ErrorReport`] of an already computed output table.
pub fn error_report(table: &OutputStateTable) -> ErrorReport {
    let (d, nb) = (table.d(), table.n_bases());
    let mut contributions = vec![0.0; nb * d * 2 * d];
    for b in 0..nb {
        for s in 0..d {
            for u in 0..2 * d {
                contributions[outcome_index(d, b, s, u)] = table.prob(b, 0, s, u).min(table.prob(b, 1, s, u));
            }
        }
    }
    let p_err = contributions.iter().sum::<f64>() / (2 * nb * d) as f64;
    let p_err = p_err.clamp(0.0, 0.5);
    ErrorReport {
        p_err,
        contributions,
        is_exact: p_err < EXACT_THRESHOLD,
        worst_ddc: ddc_worst(table).0,
        balanced_deviation: balanced_deviation(table),
        d,
        n_bases: nb,
    }
}

/// Probability that the best classical decoder outputs the wrong `x`.
pub fn p_err(strategy: &AttackStrategy, protocol: &ProtocolSpec) -> Result<ErrorReport> {
    Ok(error_report(&output_states(strategy, protocol)?))
}

fn ddc_worst(table: &OutputStateTable) -> (f64, Option<(usize, usize, usize)>) {
    let d = table.d();
    let mut worst = (0.0, None);
    for b in 0..table.n_bases() {
        for s in 0..d {
            for u in 0..2 * d {
                let p = (table.amp(b, 0, s, u) * table.amp(b, 1, s, u)).norm();
                if p > worst.0 || worst.1.is_none() {
                    worst = (p, Some((b, s, u)));
                }
            }
        }
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DdcReport {
    pub satisfied: bool,
    pub worst: f64,
    /// `(b, s, u)` of the worst product.
    pub at: Option<(usize, usize, usize)>,
}

pub fn ddc_check(table: &OutputStateTable, tol: f64) -> DdcReport {
    let (worst, at) = ddc_worst(table);
    DdcReport {
        satisfied: worst <= tol,
        worst,
        at,
    }
}

/// True iff every outcome `(b, s, u)` is compatible with a single `x`.
pub fn ddc_satisfied(strategy: &AttackStrategy, protocol: &ProtocolSpec, tol: f64) -> Result<DdcReport> {
    Ok(ddc_check(&output_states(strategy, protocol)?, tol))
}

fn balanced_deviation(table: &OutputStateTable) -> f64 {
    let d = table.d();
    let mut dev: f64 = 0.0;
    for b in 0..table.n_bases() {
        for x in 0..2 {
            for u in 0..2 * d {
                let w: f64 = (0..d).map(|s| table.prob(b, x, s, u)).sum();
                dev = dev.max((w - 0.5).abs());
            }
        }
    }
    dev
}

/// `max_{b,x,u} |Σ_s |⟨u|ψ_b(x,s)⟩|² − ½|`.
pub fn balanced_check(strategy: &AttackStrategy, protocol: &ProtocolSpec) -> Result<f64> {
    Ok(balanced_deviation(&output_states(strategy, protocol)?))
}

/// Lookup table `f(b, s, u) = x`; `None` marks unreachable outcomes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoder {
    d: usize,
    n_bases: usize,
    table: Vec<Option<u8>>,
}

impl Decoder {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_bases(&self) -> usize {
        self.n_bases
    }

    pub fn decode(&self, b: usize, s: usize, u: usize) -> Option<usize> {
        self.table[outcome_index(self.d, b, s, u)].map(usize::from)
    }

    pub fn reachable_count(&self) -> usize {
        self.table.iter().filter(|e| e.is_some()).count()
    }

    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize, usize), Option<usize>)> + '_ {
        let d = self.d;
        self.table.iter().enumerate().map(move |(i, e)| {
            let u = i % (2 * d);
            let s = (i / (2 * d)) % d;
            let b = i / (2 * d * d);
            ((b, s, u), e.map(usize::from))
        })
    }
}

/// Decoder for a table satisfying the DDC at `tol`.
pub fn decoder_from_table(table: &OutputStateTable, tol: f64) -> Result<Decoder> {
    let d = table.d();
    let nb = table.n_bases();
    let mut conflicts = Vec::new();
    let mut entries = vec![None; nb * d * 2 * d];
    for b in 0..nb {
        for s in 0..d {
            for u in 0..2 * d {
                let (a0, a1) = (table.amp(b, 0, s, u), table.amp(b, 1, s, u));
                let product = (a0 * a1).norm();
                if product > tol {
                    conflicts.push(DdcConflict { basis: b, s, u, product });
                    continue;
                }
                let (p0, p1) = (a0.norm_sqr(), a1.norm_sqr());
                if p0.max(p1) >= DECODER_THRESHOLD {
                    entries[outcome_index(d, b, s, u)] = Some(u8::from(p1 > p0));
                }
            }
        }
    }
    if !conflicts.is_empty() {
        let worst = conflicts.iter().fold(0.0, |m: f64, c| m.max(c.product));
        return Err(QpvError::DdcViolated { conflicts, worst });
    }
    Ok(Decoder {
        d,
        n_bases: nb,
        table: entries,
    })
}

/// The classical map `f(b, s, u)` both attackers evaluate after the exchange.
pub fn synthesize_decoder(strategy: &AttackStrategy, protocol: &ProtocolSpec, tol: f64) -> Result<Decoder> {
    decoder_from_table(&output_states(strategy, protocol)?, tol)
}

/// `sin²(θ/2)`: measuring in the intermediate basis `R_{θ/2}`, no entanglement.
pub fn pgm_p_err(theta: f64) -> f64 {
    let s = (theta / 2.0).sin();
    s * s
}

/// `sin²(θ/2 − π/8)`: the teleportation-based qubit attack.
pub fn teleport_d2_p_err(theta: f64) -> f64 {
    let s = (theta / 2.0 - PI / 8.0).sin();
    s * s
}

/// Best known single-ebit error at any angle: the better of the two
/// strategies above after folding into `[0, π/4]`.
pub fn d2_piecewise_p_err(theta: f64) -> f64 {
    let t = fold_angle(theta);
    pgm_p_err(t).min(teleport_d2_p_err(t))
}

/// `½ [1 − (1/n) csc(π/2n)]`, the unentangled optimum for `QPV_(n)`.
pub fn multibase_d1_p_err(n: usize) -> f64 {
    let n = n as f64;
    0.5 * (1.0 - 1.0 / (n * (PI / (2.0 * n)).sin()))
}

/// Unentangled attack measuring in the basis `R_{θ/2}`, padded to dimension `d`.
pub fn pgm_strategy(d: usize, theta: f64) -> AttackStrategy {
    let v = rotation_matrix(-theta / 2.0).kron(&ComplexMatrix::identity(d));
    AttackStrategy::new(
        UnitaryMatrix::identity(d),
        UnitaryMatrix::new(v).expect("rotation is unitary"),
    )
    .expect("consistent dimensions")
}

/// Qubit teleportation attack, `U = H` and
/// `V = (H ⊗ I) · CNOT · (R_{π/8 − θ/2} ⊗ I)` as a matrix product.
pub fn teleport_strategy(theta: f64) -> AttackStrategy {
    let h = gates::h();
    let v = h
        .kron(&gates::i2())
        .matmul(&gates::cnot())
        .matmul(&rotation_matrix(PI / 8.0 - theta / 2.0).kron(&gates::i2()));
    AttackStrategy::new(
        UnitaryMatrix::new(h).expect("Hadamard is unitary"),
        UnitaryMatrix::new(v).expect("product of unitaries"),
    )
    .expect("consistent dimensions")
}

/// Maps an attack on `θ` to one on `π/2 − θ` with the same error:
/// `R_{π/2−θ} = X R_θ Z`, so `V ↦ V (X ⊗ I)` relabels `x` in basis 0 and
/// only adds signs in basis 1.
pub fn symmetry_map(strategy: &AttackStrategy) -> Result<AttackStrategy> {
    if strategy.us().len() != 1 {
        return Err(QpvError::InvalidArgument("symmetry map needs a two-basis strategy".into()));
    }
    let d = strategy.d();
    let v = strategy.v().matrix().matmul(&gates::x().kron(&ComplexMatrix::identity(d)));
    let tol = strategy.v().tolerance();
    AttackStrategy::new(strategy.u().clone(), UnitaryMatrix::with_tolerance(v, 10.0 * tol)?)
}

/// The angle an attack produced by [`symmetry_map`] targets.
pub fn symmetric_angle(theta: f64) -> f64 {
    FRAC_PI_2 - theta
}

/// Embeds a dimension-`d` attack into dimension `k·d` by tensoring an idle
/// `k`-level register onto Alice's half; the error is unchanged.
pub fn embed_strategy(strategy: &AttackStrategy, k: usize) -> Result<AttackStrategy> {
    if k == 0 {
        return Err(QpvError::InvalidArgument("embedding factor must be positive".into()));
    }
    let id = ComplexMatrix::identity(k);
    let us = strategy
        .us()
        .iter()
        .map(|u| UnitaryMatrix::with_tolerance(u.matrix().kron(&id), 10.0 * u.tolerance()))
        .collect::<Result<Vec<_>>>()?;
    let v = UnitaryMatrix::with_tolerance(strategy.v().matrix().kron(&id), 10.0 * strategy.v().tolerance())?;
    AttackStrategy::multibase(us, v)
}
