use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zetablocks"))
        .args(args)
        .env_remove("PRECISION_BITS")
        .output()
        .expect("spawn zetablocks")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let o = run(args);
    assert_eq!(code(&o), 0, "{args:?}: {}", stderr(&o));
    serde_json::from_str(&stdout(&o)).unwrap()
}

fn num(v: &Value) -> f64 {
    match v {
        Value::String(s) => s.parse().unwrap(),
        other => other.as_f64().unwrap(),
    }
}

fn value(doc: &Value) -> (f64, f64) {
    (num(&doc["value"]["re"]), num(&doc["value"]["im"]))
}

fn certified(doc: &Value) -> f64 {
    let c = &doc["certified"];
    num(&c["truncation_bound"]) + num(&c["tail_bound"]) + num(&c["block_evaluation_bound"])
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

fn csv_rows(text: &str) -> (String, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

#[test]
fn zeta_two() {
    let doc = json(&["zeta", "--sigma", "2", "--t", "0"]);
    let v = value(&doc);
    let want = std::f64::consts::PI.powi(2) / 6.0;
    assert!(dist(v, (want, 0.0)) <= certified(&doc) + 1e-15, "{v:?}");
    assert_eq!(doc["params"]["precision_bits"], 128);
    for key in ["u0", "v0", "M", "m", "R", "block_count"] {
        assert!(!doc["params"][key].is_null(), "{key}");
    }
    assert!(doc["estimate"]["roundoff"].is_number());
    assert!(doc["timing_ms"].is_number());
}

#[test]
fn zeta_on_critical_line() {
    let doc = json(&["zeta", "--sigma", "0.5", "--t", "1e4", "--m", "6"]);
    // ζ(1/2 + 10^4 i) from an independent arbitrary-precision library, rounded to f64.
    let want = (-0.339_373_802_638_834_43, -0.037_091_505_973_206_03);
    let err = dist(value(&doc), want);
    assert!(err < 1e-9, "{err:e}");
    assert!(err <= certified(&doc), "{err:e}");
    assert!(num(&doc["certified"]["truncation_bound"]) > 0.0);
    assert!(doc["params"]["block_count"].as_u64().unwrap() > 0);
}

#[test]
fn zeta_rejects_small_u0() {
    let o = run(&["zeta", "--sigma", "0.5", "--t", "100", "--u0", "10"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("u0 < 2√𝔮(s)"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
}

#[test]
fn malformed_input_is_a_usage_error() {
    assert_eq!(code(&run(&["zeta", "--sigma", "abc", "--t", "0"])), 1);
    assert_eq!(code(&run(&["zeta", "--sigma", "1", "--t", "0", "--bogus"])), 1);
    assert_eq!(code(&run(&["zeta", "--t", "0"])), 1);
    assert_eq!(code(&run(&["lfun", "--p", "3", "--a", "x", "--index", "1", "--sigma", "2", "--t", "0"])), 1);
    assert_eq!(code(&run(&["verify", "--suite", "nope"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn nonpositive_sigma_is_a_validation_error() {
    let o = run(&["zeta", "--sigma", "-1", "--t", "5"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

/// Brute-force `χ(n)` mod 9 for character `index`: 2 generates, `χ(2) = e^{2πi index/6}`.
fn chi_mod9(index: u64, n: u64) -> Option<(f64, f64)> {
    let mut g = 1;
    for k in 0..6 {
        if g == n % 9 {
            let th = std::f64::consts::TAU * (index * k) as f64 / 6.0;
            return Some((th.cos(), th.sin()));
        }
        g = g * 2 % 9;
    }
    None
}

#[test]
fn lfun_mod_9_matches_series() {
    let doc = json(&["lfun", "--p", "3", "--a", "2", "--index", "1", "--sigma", "2", "--t", "0"]);
    assert_eq!(doc["p"], 3);
    assert_eq!(doc["a"], 2);
    assert_eq!(doc["index"], 1);
    assert!(doc["postnikov_L"].is_u64());
    let n_max = 1_000_000u64;
    let mut acc = (0.0, 0.0);
    for n in 1..n_max {
        if let Some((c, s)) = chi_mod9(1, n) {
            let w = 1.0 / (n as f64 * n as f64);
            acc.0 += c * w;
            acc.1 += s * w;
        }
    }
    // Partial sums of χ are bounded by 6, so the tail is at most 6·2/N².
    let series_err = 12.0 / (n_max as f64).powi(2) + 1e-13;
    let err = dist(value(&doc), acc);
    assert!(err <= certified(&doc) + series_err, "{err:e}");
}

#[test]
fn lfun_principal_is_rejected() {
    let o = run(&["lfun", "--p", "3", "--a", "2", "--index", "0", "--sigma", "2", "--t", "0"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("principal character"), "{}", stderr(&o));
}

/// `χ(n)` mod 16 for `index = 3`: with `n ≡ ±5^e`, `χ(n) = e^{2πi·6e/8}`.
fn chi_mod16_index3(n: u64) -> Option<(f64, f64)> {
    if n.is_multiple_of(2) {
        return None;
    }
    let r = n % 16;
    let mut g = 1;
    for e in 0..4 {
        if g == r || (16 - g) == r {
            let th = std::f64::consts::TAU * (6 * e) as f64 / 8.0;
            return Some((th.cos(), th.sin()));
        }
        g = g * 5 % 16;
    }
    unreachable!()
}

#[test]
fn lfun_mod_16_matches_truncated_sum() {
    let doc = json(&["lfun", "--p", "2", "--a", "4", "--index", "3", "--sigma", "0.5", "--t", "1000"]);
    let v0 = doc["params"]["v0"].as_u64().unwrap();
    assert_eq!(v0 % 4, 0, "v0 is a multiple of p^b = 4");
    assert!(doc["params"]["block_count"].as_u64().unwrap() > 0);
    let cutoff = doc["params"]["M"].as_u64().unwrap();
    let t = 1000.0f64;
    let mut acc = (0.0, 0.0);
    for n in 1..cutoff {
        if let Some((c, s)) = chi_mod16_index3(n) {
            let nf = n as f64;
            let mag = nf.powf(-0.5);
            let ph = -t * nf.ln();
            let (pc, ps) = (ph.cos() * mag, ph.sin() * mag);
            acc.0 += c * pc - s * ps;
            acc.1 += c * ps + s * pc;
        }
    }
    let trunc = num(&doc["certified"]["truncation_bound"]) + num(&doc["certified"]["block_evaluation_bound"]);
    let err = dist(value(&doc), acc);
    // The f64 reference carries phase errors of order eps·t·ln n per term.
    assert!(err <= trunc + 1e-8, "{err:e} vs {trunc:e}");
}

#[test]
fn json_round_trip_reproduces_value() {
    let first = json(&["zeta", "--sigma", "0.5", "--t", "1234.5", "--m", "4"]);
    let p = &first["params"];
    let s = |k: &str| p[k].to_string();
    let again = json(&[
        "zeta",
        "--sigma",
        first["s"]["sigma"].as_str().unwrap(),
        "--t",
        first["s"]["t"].as_str().unwrap(),
        "--u0",
        &s("u0"),
        "--v0",
        &s("v0"),
        "--M",
        &s("M"),
        "--m",
        &s("m"),
        "--L1",
        &s("L1"),
        "--bits",
        &s("precision_bits"),
        "--mode",
        first["mode"].as_str().unwrap(),
    ]);
    assert_eq!(first["value"], again["value"]);
    assert_eq!(first["certified"], again["certified"]);

    let args = ["lfun", "--p", "5", "--a", "2", "--index", "7", "--sigma", "0.5", "--t", "300", "--bits", "200"];
    let first = json(&args);
    assert_eq!(first["params"]["precision_bits"], 256);
    let p = &first["params"];
    let s = |k: &str| p[k].to_string();
    let mut again_args: Vec<String> = args[..args.len() - 2].iter().map(|x| x.to_string()).collect();
    for (flag, key) in [("--u0", "u0"), ("--v0", "v0"), ("--M", "M"), ("--m", "m"), ("--bits", "precision_bits")] {
        again_args.push(flag.into());
        again_args.push(s(key));
    }
    let refs: Vec<&str> = again_args.iter().map(String::as_str).collect();
    assert_eq!(first["value"], json(&refs)["value"]);
}

#[test]
fn threads_do_not_change_output() {
    let a = json(&["zeta", "--sigma", "0.5", "--t", "5e3", "--threads", "1"]);
    let b = json(&["zeta", "--sigma", "0.5", "--t", "5e3", "--threads", "4"]);
    assert_eq!(a["value"], b["value"]);
}

#[test]
fn precision_env_and_flag() {
    let o = Command::new(env!("CARGO_BIN_EXE_zetablocks"))
        .args(["zeta", "--sigma", "3", "--t", "1"])
        .env("PRECISION_BITS", "256")
        .output()
        .unwrap();
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["params"]["precision_bits"], 256);
    let o = Command::new(env!("CARGO_BIN_EXE_zetablocks"))
        .args(["zeta", "--sigma", "3", "--t", "1", "--bits", "53"])
        .env("PRECISION_BITS", "256")
        .output()
        .unwrap();
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["params"]["precision_bits"], 53);
}

#[test]
fn zeta_csv_has_one_row() {
    let o = run(&["zeta", "--sigma", "2", "--t", "3", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let (header, rows) = csv_rows(&stdout(&o));
    assert!(header.starts_with("sigma,t,method,re,im,truncation_bound,tail_bound"));
    assert_eq!(rows.len(), 1);
}

#[test]
fn table_default_grid() {
    let o = run(&["table"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, "t,m,abs_error,certified_bound,runtime_ms");
    assert_eq!(rows.len(), 8);
    for r in &rows {
        let err: f64 = r[2].parse().unwrap();
        let bound: f64 = r[3].parse().unwrap();
        assert!(err <= bound, "{r:?}");
        match (r[0].as_str(), r[1].as_str()) {
            ("1e4", "6") => assert!(err <= 1e-9, "{r:?}"),
            ("1e4", "0") => assert!(err <= 1e-2, "{r:?}"),
            _ => {}
        }
    }
}

#[test]
fn table_oracle_failure_marks_rows() {
    let o = run(&["table", "--t-list", "1e3", "--m-list", "0,2", "--oracle-bits", "53"]);
    assert_eq!(code(&o), 3);
    let (_, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[2] == "ERROR"));
    assert!(stderr(&o).contains("oracle"));
}

#[test]
fn bench_counts() {
    let o = run(&["bench", "--t-list", "1e6", "--strategies", "em-only,block", "--bits", "53"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, "t,strategy,terms_evaluated,runtime_ms");
    let terms = |name: &str| -> u64 { rows.iter().find(|r| r[1] == name).unwrap()[2].parse().unwrap() };
    assert!(terms("em-only") > 10 * terms("block"));

    let doc = json(&["zeta", "--sigma", "0.5", "--t", "1e6", "--bits", "53"]);
    let p = &doc["params"];
    let v0 = p["v0"].as_u64().unwrap();
    let m = p["m"].as_u64().unwrap();
    let r = p["R"].as_i64().unwrap();
    assert_eq!(p["block_count"].as_i64().unwrap(), r + 1);
    assert_eq!(terms("block"), v0 + (m + 1) * (r as u64 + 1));
    assert_eq!(terms("em-only"), p["M"].as_u64().unwrap() - 1);
}

#[test]
fn bench_strategies_agree() {
    let rows = json(&["bench", "--t-list", "1e3", "--m", "2", "--format", "json"]);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for a in rows {
        for b in rows {
            let d = dist(value(a), value(b));
            let tol = num(&a["certified_bound"]) + num(&b["certified_bound"]);
            assert!(d <= tol, "{} vs {}: {d:e} > {tol:e}", a["strategy"], b["strategy"]);
        }
    }
}

#[test]
fn verify_passes() {
    let o = run(&["verify"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let out = stdout(&o);
    for suite in ["postnikov", "gkr", "beta", "regime"] {
        assert!(out.contains(&format!("{suite}: ok")), "{out}");
    }
}

#[test]
fn verify_detects_injected_fault() {
    let o = run(&["verify", "--inject-beta-fault", "12,3,1"]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("(j,l,η) = (12,3,1)"), "{}", stderr(&o));
}

#[test]
fn verify_filter() {
    let o = run(&["verify", "--suite", "gkr", "--pa", "3,3"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1, "{out}");
    assert!(out.starts_with("gkr: ok"));
    assert_eq!(code(&run(&["verify", "--pa", "3"])), 1);
}
