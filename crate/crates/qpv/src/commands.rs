//! Subcommand implementations. Each returns an [`Outcome`]; the caller
//! writes the body and summary, so all file output has a single writer.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::time::{SystemTime, UNIX_EPOCH};

use qpv_core::approx::{
    minimize_multibase_with, sweep_theta_with, uniform_grid, ApproxConfig, Field, ParamKind, SearchResult,
};
use qpv_core::errmodel::{multibase_d1_p_err, p_err, pgm_strategy};
use qpv_core::exact::{
    classify_angles_with, least_squares_search_with, verify_explicit, ExactConfig, ExplicitName, ExplicitReport,
    SearchMode, EXPLICIT_TOL,
};
use qpv_core::graphs::{enumerate_inner, enumerate_sides, nogo_scan, GraphPair, GraphSide, MAX_GRAPH_D};
use qpv_core::qcore::{fold_angle, kak_nonlocal_params, u_theta, ProtocolSpec};
use qpv_core::QpvError;
use serde::Serialize;
use serde_json::{json, Value};

use crate::angle::Angle;
use crate::cli::*;
use crate::config::RunConfig;
use crate::runner::RayonRunner;
use crate::store::{matrix_to_literal, read_records, verify_record, RecordKind, SolutionRecord, SolutionStore, StoreError};

/// `p_err` at or below this counts as a zero of a sweep.
pub const ZERO_TOL: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{0}")]
    Core(#[from] QpvError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 for failed verification, 2 for usage and input errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Verification(_) | Self::Store(StoreError::Invalid { .. }) => 1,
            _ => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Body {
    Csv(String),
    Json(Value),
}

impl Body {
    pub fn render(&self) -> String {
        match self {
            Self::Csv(s) => s.clone(),
            Self::Json(v) => {
                let mut s = serde_json::to_string_pretty(v).expect("json renders");
                s.push('\n');
                s
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub body: Body,
    /// Human-readable lines for stderr.
    pub summary: Vec<String>,
    /// False when a verification failed; maps to exit code 1.
    pub passed: bool,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn search_mode(m: ModeArg) -> SearchMode {
    match m {
        ModeArg::Real => SearchMode::Real,
        ModeArg::Complex => SearchMode::Complex,
    }
}

fn field(m: ModeArg) -> Field {
    match m {
        ModeArg::Real => Field::Real,
        ModeArg::Complex => Field::Complex,
    }
}

fn kind(k: KindArg) -> ParamKind {
    match k {
        KindArg::Cayley => ParamKind::Cayley,
        KindArg::Exp => ParamKind::Exponential,
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses arguments and runs the command.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let runner = RayonRunner::new(cli.threads).map_err(|e| usage(e.to_string()))?;
    let store_path = cli.store.as_ref().map(|p| p.display().to_string());
    let out_path = cli.out.as_ref().map(|p| p.display().to_string());
    let mut store = match (&cli.command, &cli.store) {
        (Command::Verify(_), _) | (_, None) => None,
        (_, Some(p)) => Some(SolutionStore::open(p)?),
    };
    let base = |name: &str, seed: u64| RunConfig {
        out: out_path.clone(),
        store: store_path.clone(),
        ..RunConfig::new(name, seed)
    };
    match &cli.command {
        Command::Sweep(a) => cmd_sweep(&runner, a, base("sweep", a.approx.seed), store.as_mut()),
        Command::Exact(a) => cmd_exact(&runner, a, base("exact", a.search.seed), store.as_mut()),
        Command::Classify(a) => cmd_classify(&runner, a, base("classify", a.search.seed)),
        Command::Verify(a) => cmd_verify(a, base("verify", 0), cli.store.as_deref()),
        Command::Graphs(a) => cmd_graphs(a, base("graphs", 0)),
        Command::Kak(a) => cmd_kak(a, base("kak", 0)),
        Command::Multibase(a) => cmd_multibase(&runner, a, base("multibase", a.approx.seed), store.as_mut()),
    }
}

fn approx_config(a: &ApproxArgs, d: usize) -> ApproxConfig {
    ApproxConfig {
        restarts: a.restarts.unwrap_or_else(|| ApproxConfig::default_restarts(d)),
        kind: kind(a.kind),
        field: field(a.mode),
        seed: a.seed,
        max_iter: a.max_iter,
        ..ApproxConfig::default()
    }
}

fn fill_approx(cfg: &mut RunConfig, a: &ApproxArgs, ac: &ApproxConfig) {
    cfg.restarts = Some(ac.restarts);
    cfg.mode = Some(a.mode.as_str().into());
    cfg.kind = Some(ac.kind.as_str().into());
    cfg.max_iter = Some(a.max_iter);
}

fn approx_record(res: &SearchResult, cfg: &RunConfig, protocol: &ProtocolSpec, theta: Option<&Angle>) -> SolutionRecord {
    let (theta_rad, bases) = match protocol {
        ProtocolSpec::SingleAngle(t) => (Some(*t), None),
        ProtocolSpec::MultiBase(n) => (None, Some(*n)),
    };
    SolutionRecord {
        id: String::new(),
        kind: RecordKind::Approx,
        d: res.d,
        theta: theta_rad,
        theta_label: theta.map(|a| a.label.clone()),
        k: theta.and_then(|a| a.k),
        n: theta.and_then(|a| a.n),
        bases,
        mode: res.field.as_str().into(),
        f: None,
        p_err: res.report.p_err,
        u: res.strategy.us().iter().map(|u| matrix_to_literal(u.matrix())).collect(),
        v: matrix_to_literal(res.strategy.v().matrix()),
        seed: res.seed,
        config_hash: cfg.hash(),
        timestamp: now(),
    }
    .with_id()
}

#[derive(Serialize)]
struct SweepRow {
    theta: f64,
    p_err: f64,
    d: usize,
    restarts: u64,
    seed: u64,
    warm_start: u8,
}

fn cmd_sweep(
    runner: &RayonRunner,
    a: &SweepArgs,
    mut cfg: RunConfig,
    mut store: Option<&mut SolutionStore>,
) -> Result<Outcome, CliError> {
    if a.d == 0 {
        return Err(usage("--d must be positive"));
    }
    if a.grid < 2 {
        return Err(usage("--grid needs at least 2 points"));
    }
    let grid = uniform_grid(a.grid);
    cfg.d = Some(a.d);
    cfg.grid = Some(a.grid);
    cfg.warm_start = Some(a.warm_start);
    let mut rows = Vec::with_capacity(grid.len());
    if a.d == 1 {
        // no entanglement: the optimum is the intermediate-basis measurement
        cfg.restarts = Some(0);
        for &t in &grid {
            let t = fold_angle(t);
            let rep = p_err(&pgm_strategy(1, t), &ProtocolSpec::single(t)?)?;
            rows.push(SweepRow {
                theta: t,
                p_err: rep.p_err,
                d: 1,
                restarts: 0,
                seed: a.approx.seed,
                warm_start: 0,
            });
        }
    } else {
        let ac = approx_config(&a.approx, a.d);
        fill_approx(&mut cfg, &a.approx, &ac);
        let res = sweep_theta_with(runner, a.d, &grid, &ac, a.warm_start)?;
        for p in &res.points {
            rows.push(SweepRow {
                theta: p.folded,
                p_err: p.p_err,
                d: a.d,
                restarts: p.restarts_used,
                seed: a.approx.seed,
                warm_start: p.warm_start as u8,
            });
            if let Some(s) = store.as_deref_mut() {
                let protocol = ProtocolSpec::single(p.folded)?;
                s.append(approx_record(&p.result, &cfg, &protocol, None))?;
            }
        }
    }
    let mut text = String::new();
    for line in cfg.header_lines() {
        text.push_str(&line);
        text.push('\n');
    }
    text.push_str(&format!("# timestamp={}\n", now()));
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(|e| std::io::Error::other(e.to_string()))?;
    }
    text.push_str(&String::from_utf8(w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?).expect("utf8"));

    let (max_t, max_p) = rows
        .iter()
        .fold((f64::NAN, f64::NEG_INFINITY), |m, r| if r.p_err > m.1 { (r.theta, r.p_err) } else { m });
    let zeros: Vec<String> = rows
        .iter()
        .filter(|r| r.p_err <= ZERO_TOL)
        .map(|r| format!("{:.6}", r.theta / PI))
        .collect();
    Ok(Outcome {
        body: Body::Csv(text),
        summary: vec![
            format!("d={} grid={} max p_err={max_p:.6e} at theta/pi={:.6}", a.d, rows.len(), max_t / PI),
            format!("zeros (p_err <= {ZERO_TOL:e}) at theta/pi: [{}]", zeros.join(", ")),
        ],
        passed: true,
    })
}

fn exact_config(a: &ExactSearchArgs, cfg: &mut RunConfig) -> ExactConfig {
    cfg.restarts = Some(a.restarts);
    cfg.mode = Some(a.mode.as_str().into());
    cfg.max_iter = Some(a.max_iter);
    cfg.found_threshold = Some(a.threshold);
    ExactConfig {
        restarts: a.restarts,
        mode: search_mode(a.mode),
        seed: a.seed,
        max_iter: a.max_iter,
        found_threshold: a.threshold,
        ..ExactConfig::default()
    }
}

fn cmd_exact(
    runner: &RayonRunner,
    a: &ExactArgs,
    mut cfg: RunConfig,
    store: Option<&mut SolutionStore>,
) -> Result<Outcome, CliError> {
    cfg.d = Some(a.d);
    cfg.theta = Some(a.theta.clone());
    let ec = exact_config(&a.search, &mut cfg);
    let res = least_squares_search_with(runner, a.d, a.theta.radians, &ec)?;
    let status = if res.found() {
        "attack found"
    } else {
        "no attack found within budget"
    };
    let mut record_id = None;
    if let (true, Some(s), Some(strategy), Some(rep)) = (res.found(), store, &res.strategy, &res.verification) {
        let rec = SolutionRecord {
            id: String::new(),
            kind: RecordKind::Exact,
            d: a.d,
            theta: Some(a.theta.radians),
            theta_label: Some(a.theta.label.clone()),
            k: a.theta.k,
            n: a.theta.n,
            bases: None,
            mode: ec.mode.as_str().into(),
            f: Some(res.best_f),
            p_err: rep.p_err,
            u: vec![matrix_to_literal(strategy.u().matrix())],
            v: matrix_to_literal(strategy.v().matrix()),
            seed: a.search.seed,
            config_hash: cfg.hash(),
            timestamp: now(),
        }
        .with_id();
        record_id = Some(rec.id.clone());
        s.append(rec)?;
    }
    let verification = res.verification.as_ref().map(|r| {
        json!({
            "p_err": r.p_err,
            "worst_ddc": r.worst_ddc,
            "balanced_deviation": r.balanced_deviation,
        })
    });
    let body = json!({
        "config": cfg.to_json(),
        "config_hash": cfg.hash(),
        "d": a.d,
        "theta": a.theta.radians,
        "theta_label": a.theta.label,
        "classification": res.classification.as_str(),
        "status": status,
        "best_F": res.best_f,
        "best_restart": res.best_restart,
        "restarts_used": res.restarts_used,
        "verification": verification,
        "record_id": record_id,
    });
    Ok(Outcome {
        body: Body::Json(body),
        summary: vec![format!(
            "d={} theta={}: {} ({status}); best F={:.3e} after {} restarts",
            a.d,
            a.theta,
            res.classification.as_str(),
            res.best_f,
            res.restarts_used
        )],
        passed: true,
    })
}

fn cmd_classify(runner: &RayonRunner, a: &ClassifyArgs, mut cfg: RunConfig) -> Result<Outcome, CliError> {
    cfg.d = Some(a.d);
    cfg.k = Some(a.k.clone());
    let ec = exact_config(&a.search, &mut cfg);
    let rows = classify_angles_with(runner, a.d, &a.k, &ec)?;
    let mut summary = Vec::new();
    let rows_json: Vec<Value> = rows
        .iter()
        .map(|r| {
            let found: Vec<String> = r
                .angles
                .iter()
                .map(|x| format!("n={}:{}", x.n, x.classification.as_str()))
                .collect();
            summary.push(format!("d={} k={}: {}", a.d, r.k, found.join(" ")));
            json!({
                "k": r.k,
                "all_found": r.all_found(),
                "angles": r.angles.iter().map(|x| json!({
                    "n": x.n,
                    "theta": x.theta,
                    "folded": x.folded,
                    "classification": x.classification.as_str(),
                    "best_F": x.best_f,
                    "restarts_used": x.restarts_used,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(Outcome {
        body: Body::Json(json!({ "config": cfg.to_json(), "config_hash": cfg.hash(), "d": a.d, "rows": rows_json })),
        summary,
        passed: true,
    })
}

fn explicit_violations(r: &ExplicitReport) -> Vec<String> {
    let mut v = Vec::new();
    for (name, dev) in [("U", r.unitarity_u), ("V", r.unitarity_v)] {
        if !(dev <= EXPLICIT_TOL) {
            v.push(format!("unitarity of {name}: deviation {dev:.3e} exceeds {EXPLICIT_TOL:e}"));
        }
    }
    if !(r.error.worst_ddc <= EXPLICIT_TOL) {
        v.push(format!("DDC: worst |amp0*amp1| {:.3e} exceeds {EXPLICIT_TOL:e}", r.error.worst_ddc));
    }
    if !(r.error.p_err <= qpv_core::errmodel::EXACT_THRESHOLD) {
        v.push(format!("p_err: {:.3e}", r.error.p_err));
    }
    v
}

fn cmd_verify(a: &VerifyArgs, mut cfg: RunConfig, store: Option<&std::path::Path>) -> Result<Outcome, CliError> {
    if let Some(name) = &a.name {
        cfg.name = Some(name.clone());
        let names: Vec<ExplicitName> = if name == "all" {
            ExplicitName::ALL.to_vec()
        } else {
            vec![name.parse().map_err(|e: QpvError| usage(e.to_string()))?]
        };
        let mut passed = true;
        let mut summary = Vec::new();
        let mut reports = Vec::new();
        for n in names {
            let r = verify_explicit(n)?;
            let violations = explicit_violations(&r);
            passed &= violations.is_empty();
            summary.push(format!(
                "{}: {} (unitarity {:.1e}/{:.1e}, DDC {:.1e}, p_err {:.1e})",
                n,
                if violations.is_empty() { "pass" } else { "FAIL" },
                r.unitarity_u,
                r.unitarity_v,
                r.error.worst_ddc,
                r.error.p_err
            ));
            reports.push(json!({
                "name": n.as_str(),
                "d": n.d(),
                "theta": r.theta,
                "unitarity_U": r.unitarity_u,
                "unitarity_V": r.unitarity_v,
                "worst_ddc": r.error.worst_ddc,
                "p_err": r.error.p_err,
                "balanced_deviation": r.error.balanced_deviation,
                "F": r.residual,
                "passed": violations.is_empty(),
                "violations": violations,
            }));
        }
        return Ok(Outcome {
            body: Body::Json(json!({ "config": cfg.to_json(), "reports": reports })),
            summary,
            passed,
        });
    }
    let id = a.store_record.as_ref().expect("clap enforces one of the two");
    cfg.record = Some(id.clone());
    let path = store.ok_or_else(|| usage("--store-record needs --store"))?;
    let records = read_records(path)?;
    let rec = records
        .iter()
        .find(|r| &r.id == id)
        .ok_or_else(|| usage(format!("no record {id} in {}", path.display())))?;
    let check = verify_record(rec);
    let summary = if check.passed() {
        vec![format!("record {id}: pass")]
    } else {
        check.violations.iter().map(|v| format!("record {id}: {v}")).collect()
    };
    Ok(Outcome {
        passed: check.passed(),
        body: Body::Json(json!({ "config": cfg.to_json(), "check": check })),
        summary,
    })
}

fn side_json(s: &GraphSide) -> Value {
    let lists = |e: &qpv_core::graphs::EdgeSet| (0..e.d).map(|c| e.vertices(c)).collect::<Vec<_>>();
    json!({ "inner": lists(&s.inner), "outer": lists(&s.outer) })
}

fn pair_json(p: &GraphPair) -> Value {
    json!({ "b0": side_json(&p.b0), "b1": side_json(&p.b1) })
}

fn cmd_graphs(a: &GraphsArgs, mut cfg: RunConfig) -> Result<Outcome, CliError> {
    cfg.d = Some(a.d);
    if a.d == 0 || a.d > MAX_GRAPH_D {
        return Err(usage(format!("--d must be in 1..={MAX_GRAPH_D}")));
    }
    if a.d > 3 && !a.enumerate_only {
        return Err(usage("the no-go scan covers d = 2, 3; use --enumerate-only for d = 4"));
    }
    let inner = enumerate_inner(a.d, true)?.len();
    let sides = enumerate_sides(a.d, true)?;
    let mut body = json!({
        "config": cfg.to_json(),
        "d": a.d,
        "vertex_base": 0,
        "inner_classes": inner,
        "side_classes": sides.len(),
        "sides": sides.iter().map(side_json).collect::<Vec<_>>(),
    });
    let mut summary = vec![format!("d={}: {inner} inner classes, {} side classes (rules I-IV)", a.d, sides.len())];
    if !a.enumerate_only && a.d >= 2 {
        let r = nogo_scan(a.d)?;
        body["viable_sides"] = json!(r.viable_sides);
        body["pairs_tested"] = json!(r.pairs_tested);
        body["consistent_pair_classes"] = json!(r.consistent_pairs.len());
        body["consistent_pairs"] = Value::Array(r.consistent_pairs.iter().map(pair_json).collect());
        body["quarter_pi_forced"] = json!(r.quarter_pi_forced);
        summary.push(format!(
            "{} pairs tested, {} consistent pair classes{}",
            r.pairs_tested,
            r.consistent_pairs.len(),
            if r.quarter_pi_forced { "; theta = n*pi/4 forced" } else { "" }
        ));
    }
    Ok(Outcome {
        body: Body::Json(body),
        summary,
        passed: true,
    })
}

fn fold_quarter(x: f64) -> f64 {
    let t = x.rem_euclid(FRAC_PI_2);
    t.min(FRAC_PI_2 - t)
}

fn cmd_kak(a: &KakArgs, mut cfg: RunConfig) -> Result<Outcome, CliError> {
    cfg.theta = Some(a.theta.clone());
    let t = a.theta.radians;
    let p = kak_nonlocal_params(&u_theta(t))?;
    let expected = [0.0, fold_quarter(t / 2.0), FRAC_PI_4];
    let dist = p.distance_to_set(expected);
    let mut sorted = expected;
    sorted.sort_by(f64::total_cmp);
    Ok(Outcome {
        body: Body::Json(json!({
            "config": cfg.to_json(),
            "theta": t,
            "theta_label": a.theta.label,
            "params": p.as_array(),
            "expected": sorted,
            "max_deviation": dist,
        })),
        summary: vec![format!(
            "theta={}: (alpha, beta, gamma) = ({:.12}, {:.12}, {:.12}); max deviation from {{0, theta/2, pi/4}} {dist:.2e}",
            a.theta, p.alpha, p.beta, p.gamma
        )],
        passed: true,
    })
}

fn cmd_multibase(
    runner: &RayonRunner,
    a: &MultibaseArgs,
    mut cfg: RunConfig,
    store: Option<&mut SolutionStore>,
) -> Result<Outcome, CliError> {
    cfg.d = Some(a.d);
    cfg.n = Some(a.n);
    let ac = approx_config(&a.approx, a.d);
    fill_approx(&mut cfg, &a.approx, &ac);
    let res = minimize_multibase_with(runner, a.d, a.n, &ac)?;
    let closed = (a.d == 1).then(|| multibase_d1_p_err(a.n));
    let mut record_id = None;
    if let Some(s) = store {
        let rec = approx_record(&res, &cfg, &ProtocolSpec::multibase(a.n)?, None);
        record_id = Some(rec.id.clone());
        s.append(rec)?;
    }
    let mut summary = vec![format!("d={} n={}: p_err={:.9e}", a.d, a.n, res.p_err)];
    if let Some(c) = closed {
        summary.push(format!("closed form 1/2[1 - (1/n)csc(pi/2n)] = {c:.9e}, gap {:.2e}", (res.p_err - c).abs()));
    }
    Ok(Outcome {
        body: Body::Json(json!({
            "config": cfg.to_json(),
            "config_hash": cfg.hash(),
            "d": a.d,
            "n": a.n,
            "p_err": res.p_err,
            "closed_form": closed,
            "best_restart": res.best_restart,
            "restarts_used": res.restarts_used,
            "record_id": record_id,
        })),
        summary,
        passed: true,
    })
}
