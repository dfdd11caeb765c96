//! Multistart Levenberg-Marquardt search for zeros of `F`.
//!
//! Every restart draws its start uniformly from `[-1, 1]^n`, runs LM, and
//! projects the result onto the unitary group (polar factor) before scoring.
//! A restart counts as FOUND only if the projected point has
//! `F < found_threshold` and survives an independent check through
//! [`crate::errmodel`].

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::errmodel::{p_err, ErrorReport};
use crate::exact::residuals::{sum_of_squares, ResidualSystem, SearchMode};
use crate::multistart::{restart_rng, run_multistart, sweep_stream, RestartRunner, Sequential};
use crate::optim::lm::{levenberg_marquardt, LmConfig, LmStop};
use crate::qcore::linalg::polar_unitary;
use crate::qcore::{fold_angle, AttackStrategy, ProtocolSpec};
use crate::{QpvError, Result};

/// Largest dimension the search accepts.
pub const MAX_D: usize = 12;
/// Re-verification bounds applied to a candidate below the threshold.
pub const VERIFY_P_ERR: f64 = 1e-10;
pub const VERIFY_DDC: f64 = 1e-10;
pub const VERIFY_UNITARITY: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactConfig {
    pub restarts: u64,
    pub mode: SearchMode,
    pub seed: u64,
    pub max_iter: usize,
    pub found_threshold: f64,
    pub lm: LmConfig,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self {
            restarts: 1000,
            mode: SearchMode::Real,
            seed: 0,
            max_iter: 500,
            found_threshold: 1e-18,
            lm: LmConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Classification {
    Found,
    NotFound,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Found => "FOUND",
            Self::NotFound => "NOT-FOUND",
        }
    }
}

/// Outcome of one restart.
#[derive(Clone, Debug)]
pub struct RestartOutcome {
    pub index: u64,
    /// RNG stream the start was drawn from (the seed is the config seed).
    pub stream: u64,
    /// `F` at the LM end point.
    pub raw_f: f64,
    /// `F` after projecting `U` and `V` onto the unitary group.
    pub f: f64,
    pub iterations: usize,
    pub stop: LmStop,
    pub strategy: Option<AttackStrategy>,
    pub verification: Option<ErrorReport>,
    pub verified: bool,
}

#[derive(Clone, Debug)]
pub struct ExactSearchResult {
    pub d: usize,
    pub theta: f64,
    pub mode: SearchMode,
    pub seed: u64,
    pub classification: Classification,
    /// Lowest projected `F` over all restarts that ran.
    pub best_f: f64,
    pub best_restart: u64,
    /// Projected strategy of the best restart.
    pub strategy: Option<AttackStrategy>,
    pub verification: Option<ErrorReport>,
    pub restarts_used: u64,
    /// `(stream, projected F)` per restart, in index order.
    pub restarts: Vec<(u64, f64)>,
}

impl ExactSearchResult {
    pub fn found(&self) -> bool {
        self.classification == Classification::Found
    }
}

fn project(sys: &ResidualSystem, x: &[f64]) -> Option<(Vec<f64>, AttackStrategy)> {
    let (u, v) = sys.unpack(x);
    let (u, v) = (polar_unitary(&u).ok()?, polar_unitary(&v).ok()?);
    let xp = sys.pack(&u, &v).ok()?;
    let strategy = AttackStrategy::from_matrices(alloc::vec![u], v, VERIFY_UNITARITY).ok()?;
    Some((xp, strategy))
}

/// Independent check of a candidate: error probability, DDC and unitarity
/// computed from the output states rather than from the residuals.
pub fn verify_candidate(strategy: &AttackStrategy, theta: f64) -> Result<(bool, ErrorReport)> {
    let rep = p_err(strategy, &ProtocolSpec::single(theta)?)?;
    let unitary = strategy.us().iter().all(|u| u.matrix().unitarity_deviation() <= VERIFY_UNITARITY)
        && strategy.v().matrix().unitarity_deviation() <= VERIFY_UNITARITY;
    let ok = unitary && rep.p_err < VERIFY_P_ERR && rep.worst_ddc <= VERIFY_DDC;
    Ok((ok, rep))
}

fn run_restart(sys: &ResidualSystem, cfg: &ExactConfig, index: u64, stream: u64) -> RestartOutcome {
    let mut rng = restart_rng(cfg.seed, stream);
    let x0: Vec<f64> = (0..sys.n_vars()).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let lm_cfg = LmConfig {
        max_iter: cfg.max_iter,
        ..cfg.lm
    };
    let out = levenberg_marquardt(sys, &x0, &lm_cfg);
    let mut res = RestartOutcome {
        index,
        stream,
        raw_f: out.cost,
        f: f64::INFINITY,
        iterations: out.iterations,
        stop: out.stop,
        strategy: None,
        verification: None,
        verified: false,
    };
    if let Some((xp, strategy)) = project(sys, &out.x) {
        res.f = sum_of_squares(sys, &xp).unwrap_or(f64::INFINITY);
        if !res.f.is_finite() {
            res.f = f64::INFINITY;
        }
        if res.f < cfg.found_threshold {
            if let Ok((ok, rep)) = verify_candidate(&strategy, sys.theta()) {
                res.verified = ok;
                res.verification = Some(rep);
            }
        }
        res.strategy = Some(strategy);
    }
    res
}

fn check_args(d: usize, theta: f64, cfg: &ExactConfig) -> Result<()> {
    if d == 0 || d > MAX_D {
        return Err(QpvError::InvalidArgument(alloc::format!("d must be in 1..={MAX_D}, got {d}")));
    }
    if !theta.is_finite() {
        return Err(QpvError::NonFinite);
    }
    if !(cfg.found_threshold > 0.0) {
        return Err(QpvError::InvalidArgument("found threshold must be positive".into()));
    }
    Ok(())
}

/// Runs the search with restart `r` drawing from stream `stream(r)`.
pub fn least_squares_search_streams<R, S>(
    runner: &R,
    d: usize,
    theta: f64,
    cfg: &ExactConfig,
    stream: S,
) -> Result<ExactSearchResult>
where
    R: RestartRunner + ?Sized,
    S: Fn(u64) -> u64 + Sync,
{
    check_args(d, theta, cfg)?;
    let sys = ResidualSystem::new(d, theta, cfg.mode)?;
    let threshold = cfg.found_threshold;
    // an unverified candidate never scores below the threshold
    let score = |r: &RestartOutcome| if r.verified { r.f } else { r.f.max(threshold) };
    let out = run_multistart(runner, cfg.restarts, |i| run_restart(&sys, cfg, i, stream(i)), score, |s| {
        s < threshold
    });
    let Some(out) = out else {
        return Ok(ExactSearchResult {
            d,
            theta,
            mode: cfg.mode,
            seed: cfg.seed,
            classification: Classification::NotFound,
            best_f: f64::INFINITY,
            best_restart: 0,
            strategy: None,
            verification: None,
            restarts_used: 0,
            restarts: Vec::new(),
        });
    };
    let best = out.best;
    let found = best.verified && best.f < threshold;
    let restarts = out
        .scores
        .iter()
        .enumerate()
        .map(|(i, &f)| (stream(i as u64), f))
        .collect();
    Ok(ExactSearchResult {
        d,
        theta,
        mode: cfg.mode,
        seed: cfg.seed,
        classification: if found { Classification::Found } else { Classification::NotFound },
        best_f: best.f,
        best_restart: out.best_index,
        strategy: best.strategy,
        verification: best.verification,
        restarts_used: out.restarts_used,
        restarts,
    })
}

pub fn least_squares_search_with<R: RestartRunner + ?Sized>(
    runner: &R,
    d: usize,
    theta: f64,
    cfg: &ExactConfig,
) -> Result<ExactSearchResult> {
    least_squares_search_streams(runner, d, theta, cfg, |r| r)
}

/// Sequential [`least_squares_search_with`].
pub fn least_squares_search(d: usize, theta: f64, cfg: &ExactConfig) -> Result<ExactSearchResult> {
    least_squares_search_with(&Sequential, d, theta, cfg)
}

/// One angle `nπ/k` of a [`classify_angles`] row.
#[derive(Clone, Debug)]
pub struct AngleOutcome {
    pub n: u64,
    pub theta: f64,
    /// Representative in `[0, π/4]` that was actually searched.
    pub folded: f64,
    pub classification: Classification,
    pub best_f: f64,
    pub restarts_used: u64,
}

#[derive(Clone, Debug)]
pub struct ClassifyRow {
    pub k: u64,
    pub angles: Vec<AngleOutcome>,
}

impl ClassifyRow {
    pub fn all_found(&self) -> bool {
        self.angles.iter().all(|a| a.classification == Classification::Found)
    }
}

/// Distinct folded representatives of `nπ/k`, `n = 1..=k`, with the first
/// `n` hitting each.
pub fn folded_angles(k: u64) -> Vec<(u64, f64)> {
    let mut out: Vec<(u64, f64)> = Vec::new();
    for n in 1..=k {
        let f = fold_angle(n as f64 * PI / k as f64);
        if !out.iter().any(|&(_, g)| (g - f).abs() < 1e-12) {
            out.push((n, f));
        }
    }
    out
}

/// For each `k`, searches every distinct folded angle `nπ/k`. Angles are
/// searched once across rows; each gets its own block of RNG streams.
pub fn classify_angles_with<R: RestartRunner + ?Sized>(
    runner: &R,
    d: usize,
    k_list: &[u64],
    cfg: &ExactConfig,
) -> Result<Vec<ClassifyRow>> {
    if k_list.contains(&0) {
        return Err(QpvError::InvalidArgument("k must be positive".into()));
    }
    let mut cache: Vec<(f64, Classification, f64, u64)> = Vec::new();
    let mut rows = Vec::new();
    for &k in k_list {
        let mut angles = Vec::new();
        for (n, folded) in folded_angles(k) {
            let hit = cache.iter().find(|c| (c.0 - folded).abs() < 1e-12).copied();
            let (classification, best_f, restarts_used) = match hit {
                Some((_, c, f, r)) => (c, f, r),
                None => {
                    let grid = cache.len();
                    let res = least_squares_search_streams(runner, d, folded, cfg, |r| sweep_stream(grid, r))?;
                    cache.push((folded, res.classification, res.best_f, res.restarts_used));
                    (res.classification, res.best_f, res.restarts_used)
                }
            };
            angles.push(AngleOutcome {
                n,
                theta: n as f64 * PI / k as f64,
                folded,
                classification,
                best_f,
                restarts_used,
            });
        }
        rows.push(ClassifyRow { k, angles });
    }
    Ok(rows)
}

pub fn classify_angles(d: usize, k_list: &[u64], cfg: &ExactConfig) -> Result<Vec<ClassifyRow>> {
    classify_angles_with(&Sequential, d, k_list, cfg)
}
