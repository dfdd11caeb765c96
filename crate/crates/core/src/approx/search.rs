//! Multistart L-BFGS minimization of `p_err`, θ sweeps and `QPV_(n)`.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_4;

use rand::Rng;
use rand_distr::StandardNormal;

use super::manifold::{Field, ParamKind};
use super::objective::PErrObjective;
use crate::errmodel::{p_err, ErrorReport};
use crate::multistart::{restart_rng, run_multistart, sweep_stream, RestartRunner, Sequential};
use crate::optim::{lbfgs, LbfgsConfig, LbfgsStop};
use crate::qcore::{fold_angle, AttackStrategy, ProtocolSpec};
use crate::{QpvError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxConfig {
    pub restarts: u64,
    pub kind: ParamKind,
    pub field: Field,
    pub seed: u64,
    pub max_iter: usize,
    /// Fresh samples drawn when a start hits a Cayley exceptional point.
    pub max_resamples: usize,
    /// Stop after the batch in which some restart reaches this value.
    pub target: Option<f64>,
    pub lbfgs: LbfgsConfig,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        Self {
            restarts: 1000,
            kind: ParamKind::Cayley,
            field: Field::Real,
            seed: 0,
            max_iter: 1000,
            max_resamples: 8,
            target: None,
            lbfgs: LbfgsConfig::default(),
        }
    }
}

impl ApproxConfig {
    /// Default restart budget for dimension `d`.
    pub fn default_restarts(d: usize) -> u64 {
        match d {
            0..=2 => 1000,
            3 => 10_000,
            _ => 100_000,
        }
    }

    pub fn for_dimension(d: usize) -> Self {
        Self {
            restarts: Self::default_restarts(d),
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct StartOutcome {
    pub p_err: f64,
    pub coords: Vec<f64>,
    pub stop: LbfgsStop,
    pub iterations: usize,
    pub resamples: usize,
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub d: usize,
    pub angles: Vec<f64>,
    pub kind: ParamKind,
    pub field: Field,
    pub seed: u64,
    /// Best objective value.
    pub p_err: f64,
    pub coords: Vec<f64>,
    pub strategy: AttackStrategy,
    /// The best strategy re-evaluated through [`crate::errmodel`].
    pub report: ErrorReport,
    pub best_restart: u64,
    pub restarts_used: u64,
    /// Final `p_err` of every restart, by index.
    pub per_restart: Vec<f64>,
    /// True when the optimum came from a warm start rather than a sample.
    pub warm_start_won: bool,
}

fn descend(obj: &PErrObjective, x0: &[f64], cfg: &ApproxConfig) -> StartOutcome {
    let lcfg = LbfgsConfig {
        max_iter: cfg.max_iter,
        ..cfg.lbfgs
    };
    let out = lbfgs(&mut obj.clone(), x0, &lcfg);
    StartOutcome {
        p_err: if out.f.is_finite() { out.f } else { f64::INFINITY },
        coords: out.x,
        stop: out.stop,
        iterations: out.iterations,
        resamples: 0,
    }
}

fn run_start(obj: &PErrObjective, cfg: &ApproxConfig, stream: u64) -> StartOutcome {
    let n = obj.layout().n_coords();
    let mut rng = restart_rng(cfg.seed, stream);
    let mut resamples = 0;
    loop {
        let x0: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let mut out = descend(obj, &x0, cfg);
        out.resamples = resamples;
        if out.stop != LbfgsStop::Exceptional || resamples >= cfg.max_resamples {
            return out;
        }
        resamples += 1;
    }
}

fn finish(
    obj: &PErrObjective,
    protocol: &ProtocolSpec,
    cfg: &ApproxConfig,
    best: StartOutcome,
    best_restart: u64,
    restarts_used: u64,
    per_restart: Vec<f64>,
    warm_start_won: bool,
) -> Result<SearchResult> {
    let layout = obj.layout();
    let strategy = layout.strategy(&best.coords)?;
    let report = p_err(&strategy, protocol)?;
    Ok(SearchResult {
        d: layout.d,
        angles: protocol.angles(),
        kind: cfg.kind,
        field: cfg.field,
        seed: cfg.seed,
        p_err: best.p_err,
        coords: best.coords,
        strategy,
        report,
        best_restart,
        restarts_used,
        per_restart,
        warm_start_won,
    })
}

/// Multistart minimization with restart `r` drawing from `stream(r)` and,
/// optionally, one extra descent from `warm`.
pub fn minimize_p_err_streams<R, S>(
    runner: &R,
    d: usize,
    protocol: &ProtocolSpec,
    cfg: &ApproxConfig,
    stream: S,
    warm: Option<&[f64]>,
) -> Result<SearchResult>
where
    R: RestartRunner + ?Sized,
    S: Fn(u64) -> u64 + Sync,
{
    if cfg.restarts == 0 && warm.is_none() {
        return Err(QpvError::InvalidArgument("at least one restart is required".into()));
    }
    let obj = PErrObjective::new(d, protocol, cfg.kind, cfg.field)?;
    let target = cfg.target.unwrap_or(f64::NEG_INFINITY);
    let out = run_multistart(runner, cfg.restarts, |i| run_start(&obj, cfg, stream(i)), |r| r.p_err, |s| s <= target);
    let warm_out = warm.map(|x| descend(&obj, x, cfg));
    match (out, warm_out) {
        (Some(o), Some(w)) if w.p_err < o.best_score => {
            finish(&obj, protocol, cfg, w, o.best_index, o.restarts_used, o.scores, true)
        }
        (Some(o), _) => finish(&obj, protocol, cfg, o.best, o.best_index, o.restarts_used, o.scores, false),
        (None, Some(w)) => finish(&obj, protocol, cfg, w, 0, 0, Vec::new(), true),
        (None, None) => unreachable!("checked above"),
    }
}

pub fn minimize_p_err_with<R: RestartRunner + ?Sized>(
    runner: &R,
    d: usize,
    protocol: &ProtocolSpec,
    cfg: &ApproxConfig,
) -> Result<SearchResult> {
    minimize_p_err_streams(runner, d, protocol, cfg, |r| r, None)
}

/// Sequential [`minimize_p_err_with`].
pub fn minimize_p_err(d: usize, protocol: &ProtocolSpec, cfg: &ApproxConfig) -> Result<SearchResult> {
    minimize_p_err_with(&Sequential, d, protocol, cfg)
}

/// `n` evenly spaced angles covering `[0, π/4]`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![0.0],
        _ => (0..n).map(|i| FRAC_PI_4 * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    /// Angle as requested.
    pub theta: f64,
    /// Equivalent angle in `[0, π/4]` that was optimized.
    pub folded: f64,
    pub p_err: f64,
    pub restarts_used: u64,
    pub warm_start: bool,
    pub result: SearchResult,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub d: usize,
    pub restarts: u64,
    pub seed: u64,
    pub kind: ParamKind,
    pub field: Field,
    /// Sorted by folded angle.
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn max_p_err(&self) -> Option<(f64, f64)> {
        self.points
            .iter()
            .map(|p| (p.folded, p.p_err))
            .fold(None, |acc: Option<(f64, f64)>, (t, v)| match acc {
                Some((_, m)) if m >= v => acc,
                _ => Some((t, v)),
            })
    }

    /// Folded angles whose best `p_err` is at most `tol`.
    pub fn zeros(&self, tol: f64) -> Vec<f64> {
        self.points.iter().filter(|p| p.p_err <= tol).map(|p| p.folded).collect()
    }
}

/// Minimizes `p_err` at every grid angle (folded into `[0, π/4]`). Grid
/// point `g` uses RNG streams `sweep_stream(g, r)`. With `warm_start`, the
/// previous point's optimum is descended from as one extra start.
pub fn sweep_theta_with<R: RestartRunner + ?Sized>(
    runner: &R,
    d: usize,
    grid: &[f64],
    cfg: &ApproxConfig,
    warm_start: bool,
) -> Result<SweepResult> {
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(QpvError::NonFinite);
    }
    let mut order: Vec<(f64, f64)> = grid.iter().map(|&t| (t, fold_angle(t))).collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut points: Vec<SweepPoint> = Vec::with_capacity(order.len());
    for (g, &(theta, folded)) in order.iter().enumerate() {
        let protocol = ProtocolSpec::single(folded)?;
        let warm = if warm_start {
            points.last().map(|p| p.result.coords.as_slice())
        } else {
            None
        };
        let used_warm = warm.is_some();
        let result = minimize_p_err_streams(runner, d, &protocol, cfg, |r| sweep_stream(g, r), warm)?;
        points.push(SweepPoint {
            theta,
            folded,
            p_err: result.p_err,
            restarts_used: result.restarts_used,
            warm_start: used_warm,
            result,
        });
    }
    Ok(SweepResult {
        d,
        restarts: cfg.restarts,
        seed: cfg.seed,
        kind: cfg.kind,
        field: cfg.field,
        points,
    })
}

pub fn sweep_theta(d: usize, grid: &[f64], cfg: &ApproxConfig, warm_start: bool) -> Result<SweepResult> {
    sweep_theta_with(&Sequential, d, grid, cfg, warm_start)
}

/// Joint optimization of `V` and `U_1, …, U_{n−1}` for `QPV_(n)`.
pub fn minimize_multibase_with<R: RestartRunner + ?Sized>(
    runner: &R,
    d: usize,
    n: usize,
    cfg: &ApproxConfig,
) -> Result<SearchResult> {
    if n < 2 {
        return Err(QpvError::InvalidArgument("QPV_(n) needs n >= 2".into()));
    }
    minimize_p_err_with(runner, d, &ProtocolSpec::multibase(n)?, cfg)
}

pub fn minimize_multibase(d: usize, n: usize, cfg: &ApproxConfig) -> Result<SearchResult> {
    minimize_multibase_with(&Sequential, d, n, cfg)
}
