use std::path::Path;
use std::process::{Command, Output};

use qpv::store::read_records;

fn qpv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpv")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn without_timestamps(s: &str) -> String {
    s.lines().filter(|l| !l.starts_with("# timestamp=")).collect::<Vec<_>>().join("\n")
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("json body")
}

#[test]
fn sweep_output_is_reproducible_across_thread_counts() {
    let args = ["sweep", "--d", "2", "--grid", "5", "--restarts", "40", "--seed", "7"];
    let a = qpv(&[&args[..], &["--threads", "1"]].concat());
    let b = qpv(&[&args[..], &["--threads", "3"]].concat());
    assert!(a.status.success());
    assert_eq!(without_timestamps(&stdout(&a)), without_timestamps(&stdout(&b)));
}

#[test]
fn sweep_csv_layout() {
    let o = qpv(&["sweep", "--d", "2", "--grid", "9", "--restarts", "50", "--seed", "7"]);
    let text = stdout(&o);
    let header: Vec<&str> = text.lines().take_while(|l| l.starts_with('#')).collect();
    for key in ["command=sweep", "d=2", "grid=9", "restarts=50", "seed=7", "kind=cayley", "mode=real"] {
        assert!(header.contains(&format!("# {key}").as_str()), "missing {key}");
    }
    assert!(header.iter().any(|l| l.starts_with("# config_hash=")));
    let body: Vec<&str> = text.lines().skip(header.len()).collect();
    assert_eq!(body[0], "theta,p_err,d,restarts,seed,warm_start");
    assert_eq!(body.len(), 10);
    let mid: Vec<f64> = body[5].split(',').take(2).map(|x| x.parse().unwrap()).collect();
    assert!((mid[0] - std::f64::consts::FRAC_PI_8).abs() < 1e-12);
    assert!((mid[1] - (std::f64::consts::PI / 16.0).sin().powi(2)).abs() < 2e-4);
}

#[test]
fn d1_sweep_is_the_analytic_curve() {
    let a = qpv(&["sweep", "--d", "1", "--grid", "17", "--seed", "1"]);
    let b = qpv(&["sweep", "--d", "1", "--grid", "17", "--seed", "2"]);
    let rows = |o: &Output| -> Vec<(f64, f64)> {
        stdout(o)
            .lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| {
                let v: Vec<&str> = l.split(',').collect();
                (v[0].parse().unwrap(), v[1].parse().unwrap())
            })
            .collect()
    };
    let (ra, rb) = (rows(&a), rows(&b));
    assert_eq!(ra.len(), 17);
    for ((t, p), (_, q)) in ra.iter().zip(&rb) {
        assert!((p - (t / 2.0).sin().powi(2)).abs() < 1e-14);
        assert_eq!(p, q);
    }
}

#[test]
fn json_reports_are_reproducible() {
    let args = ["exact", "--d", "2", "--theta", "pi/8", "--restarts", "40", "--seed", "5"];
    let a = qpv(&args);
    let b = qpv(&[&args[..], &["--threads", "2"]].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["classification"], "NOT-FOUND");
    assert_eq!(v["status"], "no attack found within budget");
}

#[test]
fn exit_codes() {
    assert_eq!(qpv(&["nonsense"]).status.code(), Some(2));
    assert_eq!(qpv(&["exact", "--d", "2", "--theta", "pi/"]).status.code(), Some(2));
    assert_eq!(qpv(&["verify", "--name", "d5"]).status.code(), Some(2));
    assert_eq!(qpv(&["graphs", "--d", "4"]).status.code(), Some(2));
    assert_eq!(qpv(&["sweep", "--d", "2", "--grid", "1"]).status.code(), Some(2));
    assert_eq!(qpv(&["verify", "--name", "all"]).status.code(), Some(0));
}

#[test]
fn verify_named_solutions() {
    for name in ["d6", "d4-first", "d4-second"] {
        let o = qpv(&["verify", "--name", name]);
        assert!(o.status.success(), "{name}");
        assert_eq!(json(&o)["reports"][0]["passed"], true);
    }
}

#[test]
fn kak_and_multibase_reports() {
    let k = json(&qpv(&["kak", "--theta", "pi/8"]));
    let p: Vec<f64> = serde_json::from_value(k["params"].clone()).unwrap();
    let want = [0.0, std::f64::consts::PI / 16.0, std::f64::consts::FRAC_PI_4];
    assert!(p.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-10), "{p:?}");

    let m = json(&qpv(&["multibase", "--d", "1", "--n", "6", "--restarts", "50"]));
    let closed = 0.5 * (1.0 - 1.0 / (6.0 * (std::f64::consts::PI / 12.0).sin()));
    assert!((m["p_err"].as_f64().unwrap() - closed).abs() < 1e-6);
}

#[test]
fn graphs_reports() {
    let g3 = json(&qpv(&["graphs", "--d", "3"]));
    assert_eq!(g3["consistent_pair_classes"], 0);
    assert_eq!(g3["side_classes"], 2);
    let g2 = json(&qpv(&["graphs", "--d", "2"]));
    assert_eq!(g2["consistent_pair_classes"], 1);
    assert_eq!(g2["quarter_pi_forced"], true);
}

fn exact_into_store(store: &Path) -> String {
    let o = qpv(&["exact", "--d", "4", "--theta", "3pi/8", "--restarts", "64", "--store", store.to_str().unwrap()]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["classification"], "FOUND");
    v["record_id"].as_str().unwrap().to_string()
}

#[test]
fn store_roundtrip_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("solutions.jsonl");
    let s = store.to_str().unwrap();
    let id = exact_into_store(&store);

    let recs = read_records(&store).unwrap();
    assert_eq!(recs.len(), 1);
    let r = &recs[0];
    assert_eq!((r.d, r.k, r.n, r.mode.as_str()), (4, Some(8), Some(3), "real"));
    assert!(r.f.unwrap() < 1e-18);

    let ok = qpv(&["verify", "--store-record", &id, "--store", s]);
    assert_eq!(ok.status.code(), Some(0));

    // perturb one entry of U by 1e-3
    let mut bad = r.clone();
    bad.u[0][0][0][0] += 1e-3;
    std::fs::write(&store, serde_json::to_string(&bad).unwrap() + "\n").unwrap();
    let o = qpv(&["verify", "--store-record", &id, "--store", s]);
    assert_eq!(o.status.code(), Some(1));
    let v: Vec<String> = serde_json::from_value(json(&o)["check"]["violations"].clone()).unwrap();
    assert!(v.iter().any(|x| x.starts_with("unitarity")), "{v:?}");
    assert!(v.iter().any(|x| x.starts_with("DDC")), "{v:?}");

    // any other command refuses to start on a bad store
    let o = qpv(&["kak", "--theta", "pi/8", "--store", s]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains(&id));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("k.json");
    let o = qpv(&["kak", "--theta", "0.3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["theta"], 0.3);
}
