//! One line per acceptance criterion. Set `QPV_SLOW=1` for the long runs
//! (d = 4 with 10⁵ restarts, larger-d exact attacks).

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::process::ExitCode;
use std::time::Instant;

use qpv::RayonRunner;
use qpv_core::approx::{
    min_branch_gap, minimize_multibase_with, minimize_p_err_with, n_coords, objective_and_gradient, retract,
    sweep_theta_with, uniform_grid, ApproxConfig, Field, ManifoldParam, ParamKind, StrategyLayout,
};
use qpv_core::errmodel::{d2_piecewise_p_err, error_report, multibase_d1_p_err, ErrorReport};
use qpv_core::exact::{
    classify_angles_with, least_squares_search_with, verify_explicit, ExactConfig, ExplicitName,
};
use qpv_core::graphs::nogo_scan;
use qpv_core::qcore::{
    kak_nonlocal_params, output_states, reduce_spacetime, simulate_spacetime, u_theta, ProtocolSpec,
    SpacetimeStrategy, UnitaryMatrix,
};
use rand::{Rng, SeedableRng};

struct Suite {
    failed: usize,
    slow: bool,
    runner: RayonRunner,
}

impl Suite {
    fn report(&mut self, name: &str, ok: bool, detail: String) {
        println!("[{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        self.failed += !ok as usize;
    }

    fn skip(&self, name: &str, why: &str) {
        println!("[SKIP] {name}: {why}");
    }
}

fn single(theta: f64) -> ProtocolSpec {
    ProtocolSpec::single(theta).unwrap()
}

fn explicit_solutions(s: &mut Suite) {
    let t = Instant::now();
    let mut ok = true;
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for name in ExplicitName::ALL {
        let r = verify_explicit(name).unwrap();
        let unit = r.unitarity_u.max(r.unitarity_v);
        ok &= unit <= 1e-10 && r.error.worst_ddc <= 1e-10 && r.error.p_err <= 1e-12;
        worst = (worst.0.max(unit), worst.1.max(r.error.worst_ddc), worst.2.max(r.error.p_err));
    }
    let secs = t.elapsed().as_secs_f64();
    s.report(
        "explicit solutions (d4-first, d4-second, d6)",
        ok && secs < 1.0,
        format!("max unitarity {:.1e}, max DDC {:.1e}, max p_err {:.1e}, {secs:.3}s", worst.0, worst.1, worst.2),
    );
}

fn exact_recovery(s: &mut Suite) -> Vec<ErrorReport> {
    let t = Instant::now();
    let cases: [(usize, u64, u64, u64); 5] = [(2, 1, 4, 1000), (4, 1, 8, 1000), (4, 2, 8, 1000), (4, 3, 8, 1000), (6, 1, 12, 10_000)];
    let mut ok = true;
    let mut parts = Vec::new();
    let mut found = Vec::new();
    for (d, n, k, budget) in cases {
        let cfg = ExactConfig {
            restarts: budget,
            ..ExactConfig::default()
        };
        let r = least_squares_search_with(&s.runner, d, n as f64 * PI / k as f64, &cfg).unwrap();
        ok &= r.found() && r.best_f < 1e-18;
        parts.push(format!("d={d} {n}pi/{k}: {} F={:.1e} ({} restarts)", r.classification.as_str(), r.best_f, r.restarts_used));
        found.extend(r.verification);
    }
    s.report(
        "exact-attack recovery",
        ok,
        format!("{}; {:.1}s", parts.join(", "), t.elapsed().as_secs_f64()),
    );
    if s.slow {
        // larger dimensions: (d, k) with an attack expected at every nπ/k
        let rows: [(usize, u64, u64); 8] =
            [(3, 2, 10_000), (5, 4, 10_000), (6, 8, 10_000), (7, 4, 10_000), (8, 16, 10_000), (9, 6, 10_000), (10, 20, 10_000), (12, 24, 20_000)];
        for (d, k, budget) in rows {
            let t = Instant::now();
            let cfg = ExactConfig {
                restarts: budget,
                ..ExactConfig::default()
            };
            let r = classify_angles_with(&s.runner, d, &[k], &cfg).unwrap();
            let row = &r[0];
            let detail: Vec<String> = row
                .angles
                .iter()
                .map(|a| format!("n={} {} F={:.1e}", a.n, a.classification.as_str(), a.best_f))
                .collect();
            s.report(
                &format!("exact-attack recovery, slow row d={d} k={k}"),
                row.all_found(),
                format!("{}; {:.0}s", detail.join(", "), t.elapsed().as_secs_f64()),
            );
        }
    } else {
        s.skip("exact-attack recovery, larger-d rows", "set QPV_SLOW=1");
    }
    found
}

fn nogo(s: &mut Suite) {
    let t = Instant::now();
    let cfg = ExactConfig {
        restarts: 5000,
        ..ExactConfig::default()
    };
    let a = least_squares_search_with(&s.runner, 2, PI / 8.0, &cfg).unwrap();
    let b = least_squares_search_with(&s.runner, 3, FRAC_PI_4, &cfg).unwrap();
    let g2 = nogo_scan(2).unwrap();
    let g3 = nogo_scan(3).unwrap();
    let ok = !a.found()
        && !b.found()
        && a.best_f > 1e-6
        && b.best_f > 1e-6
        && a.restarts_used == 5000
        && b.restarts_used == 5000
        && g2.consistent_pairs.len() == 1
        && g3.consistent_pairs.is_empty();
    s.report(
        "no-go consistency",
        ok,
        format!(
            "d=2 pi/8 min F={:.3e}, d=3 pi/4 min F={:.3e} (5000 restarts each); graph scan d=2: {} class, d=3: {} classes; {:.1}s",
            a.best_f,
            b.best_f,
            g2.consistent_pairs.len(),
            g3.consistent_pairs.len(),
            t.elapsed().as_secs_f64()
        ),
    );
}

fn d2_curve(s: &mut Suite) {
    let t = Instant::now();
    let cfg = ApproxConfig {
        restarts: 1000,
        ..ApproxConfig::default()
    };
    let r = sweep_theta_with(&s.runner, 2, &uniform_grid(65), &cfg, false).unwrap();
    let dev = r.points.iter().fold(0.0f64, |m, p| m.max((p.p_err - d2_piecewise_p_err(p.folded)).abs()));
    let (_, max) = r.max_p_err().unwrap();
    let target = (PI / 16.0).sin().powi(2);
    let secs = t.elapsed().as_secs_f64();
    s.report(
        "d=2 curve",
        r.points.len() == 65 && dev <= 2e-4 && (max - target).abs() <= 2e-4 && secs < 600.0,
        format!("65 points, max pointwise deviation {dev:.2e}, max {max:.6} vs sin^2(pi/16) {target:.6}, {secs:.1}s"),
    );
}

fn d4_headline(s: &mut Suite) {
    let grid = uniform_grid(17);
    let t = Instant::now();
    // budget 10⁴ per point; a point stops early once it reaches the full-run bar
    let reduced = ApproxConfig {
        restarts: 10_000,
        target: Some(6e-3),
        ..ApproxConfig::default()
    };
    let r = sweep_theta_with(&s.runner, 4, &grid, &reduced, false).unwrap();
    let (at, max) = r.max_p_err().unwrap();
    let used: u64 = r.points.iter().map(|p| p.restarts_used).max().unwrap();
    s.report(
        "d=4 reduced run (10^4 restarts)",
        max <= 1e-2,
        format!("max over 17 points {max:.3e} at theta/pi={:.4}, at most {used} restarts per point, {:.1}s", at / PI, t.elapsed().as_secs_f64()),
    );
    if s.slow {
        let t = Instant::now();
        let full = ApproxConfig {
            restarts: 100_000,
            ..ApproxConfig::default()
        };
        let r = sweep_theta_with(&s.runner, 4, &grid, &full, false).unwrap();
        let (at, max) = r.max_p_err().unwrap();
        s.report(
            "d=4 headline (10^5 restarts)",
            max <= 6e-3,
            format!("max over 17 points {max:.3e} at theta/pi={:.4}, {:.0}s", at / PI, t.elapsed().as_secs_f64()),
        );
    } else {
        s.skip("d=4 headline (10^5 restarts)", "set QPV_SLOW=1 (hours)");
    }
}

fn multibase(s: &mut Suite) {
    let t = Instant::now();
    let cfg = ApproxConfig {
        restarts: 200,
        ..ApproxConfig::default()
    };
    let mut dev = 0.0f64;
    for n in 2..=8 {
        let r = minimize_multibase_with(&s.runner, 1, n, &cfg).unwrap();
        dev = dev.max((r.p_err - multibase_d1_p_err(n)).abs());
    }
    let d2 = minimize_multibase_with(&s.runner, 2, 2, &cfg).unwrap().p_err;
    s.report(
        "multibase closed form",
        dev <= 1e-6 && d2 <= 1e-10,
        format!("d=1 n=2..8 max deviation {dev:.2e}; d=2 n=2 p_err {d2:.2e}; {:.1}s", t.elapsed().as_secs_f64()),
    );
}

fn kak(s: &mut Suite) {
    let mut worst = 0.0f64;
    for i in 1..=20 {
        let theta = FRAC_PI_2 * i as f64 / 21.0;
        let p = kak_nonlocal_params(&u_theta(theta)).unwrap();
        worst = worst.max(p.distance_to_set([0.0, theta / 2.0, FRAC_PI_4]));
    }
    s.report("KAK parameters of U_theta", worst <= 1e-10, format!("20 angles, max deviation {worst:.2e}"));
}

fn random_unitary(rng: &mut impl Rng, m: usize) -> UnitaryMatrix {
    let coords = (0..n_coords(Field::Complex, m)).map(|_| rng.random_range(-2.0..2.0)).collect();
    retract(&ManifoldParam::new(ParamKind::Exponential, Field::Complex, m, coords).unwrap()).unwrap()
}

fn properties(s: &mut Suite, found: &[ErrorReport]) {
    let t = Instant::now();
    let mut rng = rand::rngs::StdRng::seed_from_u64(2024);

    // gradient against central differences, away from branch ties
    let mut grad_worst = 0.0f64;
    let mut grad_cases = 0;
    while grad_cases < 40 {
        let d = rng.random_range(1..=3);
        let theta = rng.random_range(0.0..PI);
        let kind = if rng.random() { ParamKind::Cayley } else { ParamKind::Exponential };
        let field = if rng.random() { Field::Complex } else { Field::Real };
        let protocol = single(theta);
        let layout = StrategyLayout::new(d, &protocol, kind, field).unwrap();
        let x: Vec<f64> = (0..layout.n_coords()).map(|_| rng.random_range(-1.0..1.0)).collect();
        if x.is_empty() || min_branch_gap(&layout.strategy(&x).unwrap(), &protocol).unwrap() < 1e-3 {
            continue;
        }
        let (_, g) = objective_and_gradient(&x, d, &protocol, kind, field).unwrap();
        let scale = g.iter().fold(1e-6f64, |m, v| m.max(v.abs()));
        for k in 0..x.len() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[k] += 1e-6;
            xm[k] -= 1e-6;
            let fd = (objective_and_gradient(&xp, d, &protocol, kind, field).unwrap().0
                - objective_and_gradient(&xm, d, &protocol, kind, field).unwrap().0)
                / 2e-6;
            grad_worst = grad_worst.max((fd - g[k]).abs() / scale);
        }
        grad_cases += 1;
    }

    // full circuit against the reduced model
    let mut st_worst = 0.0f64;
    for _ in 0..100 {
        let d = rng.random_range(1..=3);
        let theta = rng.random_range(0.0..2.0 * PI);
        let st = SpacetimeStrategy::new(random_unitary(&mut rng, 2 * d), random_unitary(&mut rng, d), random_unitary(&mut rng, d)).unwrap();
        let full = simulate_spacetime(&st, theta);
        let table = output_states(&reduce_spacetime(&st).unwrap(), &single(theta)).unwrap();
        for b in 0..2 {
            for x in 0..2 {
                for sx in 0..d {
                    for u in 0..2 * d {
                        st_worst = st_worst.max((full.prob(b, x, sx, u) - table.prob(b, x, sx, u) / (4 * d) as f64).abs());
                    }
                }
            }
        }
        st_worst = st_worst.max((full.success_probability() - 1.0 + error_report(&table).p_err).abs());
    }

    let balanced = found.iter().fold(0.0f64, |m, r| m.max(r.balanced_deviation));

    // optima at θ and π/2 − θ
    let cfg = ApproxConfig {
        restarts: 200,
        ..ApproxConfig::default()
    };
    let mut sym = 0.0f64;
    for theta in [0.15, 0.3, 0.45, 0.6, 0.75] {
        let a = minimize_p_err_with(&s.runner, 2, &single(theta), &cfg).unwrap().p_err;
        let b = minimize_p_err_with(&s.runner, 2, &single(FRAC_PI_2 - theta), &cfg).unwrap().p_err;
        sym = sym.max((a - b).abs());
    }

    s.report(
        "property suites",
        grad_worst <= 1e-4 && st_worst <= 1e-10 && !found.is_empty() && balanced <= 1e-5 && sym <= 2e-4,
        format!(
            "gradient rel err {grad_worst:.1e} ({grad_cases} cases), spacetime {st_worst:.1e} (100 cases), balanced {balanced:.1e} ({} FOUND), symmetry {sym:.1e}; {:.1}s",
            found.len(),
            t.elapsed().as_secs_f64()
        ),
    );
}

fn main() -> ExitCode {
    // `cargo test -- --list` and filters are not meaningful here
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut s = Suite {
        failed: 0,
        slow: std::env::var("QPV_SLOW").is_ok_and(|v| v == "1"),
        runner: RayonRunner::new(0).expect("thread pool"),
    };
    explicit_solutions(&mut s);
    let found = exact_recovery(&mut s);
    nogo(&mut s);
    d2_curve(&mut s);
    d4_headline(&mut s);
    multibase(&mut s);
    kak(&mut s);
    properties(&mut s, &found);
    if s.failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria failed", s.failed);
        ExitCode::FAILURE
    }
}
