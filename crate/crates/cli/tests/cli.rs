use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn relzeta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relzeta")).args(args).output().expect("spawn relzeta")
}

fn json_of(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(bytes)))
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("relzeta-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

const HARD: &str = "hard:a=1,gamma=0.5";

#[test]
fn verify_identities_passes() {
    let o = relzeta(&["verify-identities", "--n", "200"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn usage_errors_exit_2_with_json() {
    for args in [
        vec!["eval", "--p", "0,0,1"],
        vec!["eval", "--p", "0,0", "--kernel", HARD],
        vec!["eval", "--p", "0,0,1", "--kernel", "warm:a=1"],
        vec!["eval", "--p", "0,0,1", "--kernel", HARD, "--m", "1"],
        vec!["scan", "--p0", "LOG:10:1:4", "--kernel", HARD, "--out", "-"],
        vec!["frobnicate"],
    ] {
        let o = relzeta(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let err = json_of(o.stderr.trim_ascii());
        assert!(err["error"].is_string(), "{args:?}");
    }
}

#[test]
fn eval_small_momentum_is_deterministic() {
    let args = ["eval", "--p", "0,0,0.5", "--kernel", HARD, "--rel-tol", "1e-4"];
    let a = relzeta(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let v = json_of(&a.stdout);
    let b = &v["breakdown"];
    let num = |k: &str| b[k]["value"].as_f64().unwrap();
    // below |p| = 1, ζ is the added power of p⁰ and ζ_K takes the rest of ζ̃
    let term = b["p0"].as_f64().unwrap().powf(0.75);
    assert_eq!(num("zeta"), term);
    assert_eq!(num("zetaK"), num("tildeZeta") - term);
    assert_eq!(v["breakdown"]["m"].as_f64(), Some(45.0));
    assert_eq!(v["closure"]["pass"], Value::Bool(true));
    let b = relzeta(&args);
    assert_eq!(a.stdout, b.stdout);

    let t = relzeta(&["eval", "--p", "0,0,0.5", "--kernel", HARD, "--rel-tol", "1e-4", "--out", "text"]);
    assert!(String::from_utf8_lossy(&t.stdout).contains("tildeZeta"));
}

#[test]
fn eval_reports_closure_failure() {
    let o = relzeta(&["eval", "--p", "0,0,3", "--kernel", HARD, "--rel-tol", "1e-4"]);
    assert_eq!(o.status.code(), Some(1));
    let v = json_of(&o.stdout);
    assert_eq!(v["closure"]["pass"], Value::Bool(false));
    assert_eq!(json_of(o.stderr.trim_ascii())["error"], "check_failed");
}

#[test]
fn scan_writes_csv() {
    let o = relzeta(&["scan", "--p0", "LOG:1.5:3:2", "--kernel", HARD, "--rel-tol", "1e-3", "--out", "-"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("p0,zeta,zeta_err,zetaK"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 2);
    let p0: f64 = rows[0].split(',').next().unwrap().parse().unwrap();
    assert_eq!(p0, 1.5);
    assert!(rows[1].ends_with(&format!("\"{HARD}\"")));
}

/// Scan CSV with `zeta = c·p0^slope` and the other columns following their bounds.
fn synthetic_csv(slope: f64) -> String {
    let mut s = String::from("p0,zeta,zeta_err,zetaK,zetaK_err,zeta0,zetaL,tildeZeta,tildeZeta0m,tildeZetaLm,tildeZeta1,m,kernel\n");
    for i in 0..10 {
        let p0 = 10f64 * 100f64.powf(i as f64 / 9.0);
        let z1 = (-3.0 * p0.powf(1.0 / 45.0)).exp();
        s.push_str(&format!(
            "{p0},{},0,{},0,{},{},{},{},{},{z1},45,\"{HARD}\"\n",
            2.0 * p0.powf(slope),
            p0.powf(0.6),
            p0.powf(0.5),
            -p0.powf(0.3),
            p0.powf(0.75),
            p0.powf(0.4),
            p0.powf(0.4)
        ));
    }
    s
}

#[test]
fn fit_checks_exponents() {
    let d = scratch("fit");
    let good = d.join("good.csv");
    std::fs::write(&good, synthetic_csv(0.75)).unwrap();
    for q in ["zeta", "zetaK", "zetaL", "tildeZeta1"] {
        let o = relzeta(&["fit", "--in", good.to_str().unwrap(), "--quantity", q]);
        assert_eq!(o.status.code(), Some(0), "{q}: {}", String::from_utf8_lossy(&o.stdout));
        assert_eq!(json_of(&o.stdout)["pass"], Value::Bool(true));
    }
    let v = json_of(&relzeta(&["fit", "--in", good.to_str().unwrap(), "--quantity", "zeta"]).stdout);
    assert!((v["fit"]["slope"].as_f64().unwrap() - 0.75).abs() < 1e-12);

    let bad = d.join("bad.csv");
    std::fs::write(&bad, synthetic_csv(1.0)).unwrap();
    let o = relzeta(&["fit", "--in", bad.to_str().unwrap(), "--quantity", "zeta"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json_of(&o.stdout)["pass"], Value::Bool(false));
    std::fs::remove_dir_all(d).ok();
}

#[test]
fn plot_data_writes_dat_files() {
    let d = scratch("plot");
    let csv = d.join("scan.csv");
    std::fs::write(&csv, synthetic_csv(0.75)).unwrap();
    let out = d.join("dat");
    let o = relzeta(&["plot-data", "--in", csv.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json_of(&o.stdout)["files"].as_array().unwrap().len(), 8);
    let zeta = std::fs::read_to_string(out.join("zeta.dat")).unwrap();
    let data: Vec<_> = zeta.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()).collect();
    assert_eq!(data.len(), 10);
    assert_eq!(data[0].split_whitespace().count(), 2);
    std::fs::remove_dir_all(d).ok();
}

#[test]
fn config_file_precedence() {
    let d = scratch("config");
    let cfg = d.join("relzeta.conf");
    std::fs::write(&cfg, format!("# defaults\nkernel = {HARD}\nm = 20\nrel-tol = 1e-4\n")).unwrap();
    let c = cfg.to_str().unwrap();
    let v = json_of(&relzeta(&["eval", "--p", "0,0,0.5", "--config", c]).stdout);
    assert_eq!(v["kernel"], HARD);
    assert_eq!(v["breakdown"]["m"].as_f64(), Some(20.0));
    let v = json_of(&relzeta(&["eval", "--p", "0,0,0.5", "--config", c, "--m", "30", "--kernel", "soft:b=1.5,gamma=1.2"]).stdout);
    assert_eq!(v["breakdown"]["m"].as_f64(), Some(30.0));
    assert_eq!(v["kernel"], "soft:b=1.5,gamma=1.2");

    let bad = d.join("bad.conf");
    std::fs::write(&bad, "colour = blue\n").unwrap();
    assert_eq!(relzeta(&["eval", "--p", "0,0,0.5", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    std::fs::remove_dir_all(d).ok();
}

#[test]
fn demo_divergence_contrast() {
    let o = relzeta(&["demo-divergence", "--p", "0,0,2", "--kernel", "demo:a=0,bound=1", "--rel-tol", "1e-5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_of(&o.stdout);
    assert_eq!(v["pass"], Value::Bool(true));
    assert!(v["unweightedGrowth"].as_f64().unwrap() >= 10.0);
    assert_eq!(relzeta(&["demo-divergence", "--p", "0,0,2", "--kernel", HARD]).status.code(), Some(2));
}
