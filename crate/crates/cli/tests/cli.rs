use std::process::{Command, Output};

use serde_json::Value;

const FIG1: &[&str] = &["--delta1", "0.7", "--delta2", "0.4", "--g1", "0.8", "--g2", "0.4"];
const FIG2: &[&str] = &["--delta1", "0.7", "--delta2", "0.4", "--g1", "0.4", "--g2", "0.4"];

fn qrm2(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrm2")).args(args).output().expect("binary runs")
}

fn run(cmd: &str, params: &[&str], extra: &[&str]) -> Output {
    let mut args = vec![cmd];
    args.extend_from_slice(params);
    args.extend_from_slice(extra);
    qrm2(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn table(o: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    let text = stdout(o);
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).expect("valid json")
}

/// `(parity, E)` of every spectrum row.
fn levels(o: &Output) -> Vec<(String, f64)> {
    let (h, rows) = table(o);
    let pi = h.iter().position(|c| c == "parity").unwrap();
    let ei = h.iter().position(|c| c == "E").unwrap();
    rows.iter().map(|r| (r[pi].clone(), r[ei].parse().unwrap())).collect()
}

#[test]
fn spectrum_csv_schema() {
    let o = run("spectrum", FIG2, &["--emax", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
    assert_eq!(
        text.lines().next().unwrap(),
        "parity,level_index,E,kind,r_nc,coeff_decay,n_max_used,cross_check,converged"
    );
    let (_, rows) = table(&o);
    assert!(!rows.is_empty());
    for r in &rows {
        assert!(r[0] == "even" || r[0] == "odd");
        for k in [2, 4, 5, 7] {
            r[k].parse::<f64>().unwrap();
        }
        assert_eq!(r[8], "true");
    }
}

#[test]
fn output_is_deterministic() {
    for out in ["csv", "json"] {
        let a = run("spectrum", FIG2, &["--emax", "2.5", "--out", out]);
        let b = run("spectrum", FIG2, &["--emax", "2.5", "--out", out]);
        assert_eq!(a.stdout, b.stdout);
    }
    let sweep = ["--delta1", "0.7", "--delta2", "0.3", "--emin", "-0.5", "--emax", "1.5", "--g-steps", "8"];
    let a = run("sweep", &sweep, &[]);
    let b = run("sweep", &sweep, &[]);
    assert_eq!(code(&a), code(&b));
    assert_eq!(a.stdout, b.stdout);
    let a = run("gscan", FIG2, &["--samples", "200"]);
    let b = run("gscan", FIG2, &["--samples", "200"]);
    assert_eq!(a.stdout, b.stdout);
}

fn same_bits(csv_field: &str, json: &Value) -> bool {
    match (csv_field.parse::<f64>(), json.as_f64()) {
        (Ok(a), Some(b)) => a.to_bits() == b.to_bits(),
        (Err(_), None) => csv_field.is_empty() && json.is_null(),
        _ => false,
    }
}

#[test]
fn json_round_trips_exactly() {
    let o = run("spectrum", FIG2, &["--emax", "2.5", "--out", "json"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["params"]["regime"], "equal_coupling");
    assert_eq!(v["params"]["delta1"].as_f64().unwrap().to_bits(), 0.7f64.to_bits());

    // Every numeric field parsed back from JSON carries the bits the CSV
    // of the same run carries.
    let (h, rows) = table(&run("spectrum", FIG2, &["--emax", "2.5"]));
    let js = v["results"]["levels"].as_array().unwrap();
    assert_eq!(rows.len(), js.len());
    for (r, l) in rows.iter().zip(js) {
        for (k, name) in h.iter().enumerate() {
            match name.as_str() {
                "E" | "r_nc" | "coeff_decay" | "cross_check" => assert!(same_bits(&r[k], &l[name]), "{name}"),
                "parity" | "kind" => assert_eq!(l[name].as_str().unwrap(), r[k]),
                _ => assert_eq!(l[name].to_string(), r[k]),
            }
        }
    }

    let args = ["--emin", "-1", "--emax", "3", "--samples", "150"];
    let (_, rows) = table(&run("gscan", FIG2, &args));
    let v = json(&run("gscan", FIG2, &[&args[..], &["--out", "json"]].concat()));
    let js = v["results"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), js.len());
    for (r, j) in rows.iter().zip(js) {
        assert!(same_bits(&r[0], &j["E"]));
        assert!(same_bits(&r[1], &j["G_even"]));
        assert!(same_bits(&r[2], &j["G_odd"]));
    }
}

#[test]
fn fig1_spectrum_and_verify() {
    let window = ["--emin", "-1", "--emax", "3"];
    let s = run("spectrum", FIG1, &window);
    assert_eq!(code(&s), 0, "{}", stderr(&s));
    let lv = levels(&s);
    assert_eq!(lv.iter().filter(|l| l.0 == "even").count(), 8);
    assert_eq!(lv.iter().filter(|l| l.0 == "odd").count(), 8);

    let v = run("verify", FIG1, &[&window[..], &["--out", "json"]].concat());
    assert_eq!(code(&v), 0, "{}", stderr(&v));
    let r = &json(&v)["results"];
    assert_eq!(r["passed"], true);
    assert!(r["max_residual"].as_f64().unwrap() < 1e-6);
    assert_eq!(r["matched"], 16);
}

#[test]
fn fig2_verify_passes() {
    let o = run("verify", FIG2, &["--emin", "-1.5", "--emax", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (_, rows) = table(&o);
    assert!(rows.iter().all(|r| r[4] == "matched"));
}

#[test]
fn under_truncated_verify_fails() {
    let o = run("verify", FIG1, &["--emin", "-1", "--emax", "3", "--nmax", "10"]);
    assert_eq!(code(&o), 4);
    let err = stderr(&o);
    assert!(err.contains("verification failed"), "{err}");
    // The lowest diverging level is the even ground state.
    assert!(err.contains("even E=-0.96533"), "{err}");
}

#[test]
fn zero_coupling_routes_to_oracle() {
    let o = run("spectrum", &["--g1", "0", "--g2", "0", "--delta1", "0.7", "--delta2", "0.4"], &["--emax", "2.5"]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("notice: zero coupling"));
    let mut want = Vec::new();
    for n in 0..4 {
        for (s1, s2) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let e = n as f64 + s1 * 0.7 + s2 * 0.4;
            // Even parity pairs Δ2 + Δ1 with even n.
            let even = (s1 == s2) == (n % 2 == 0);
            let parity = if even { "even" } else { "odd" };
            if e > -1.6 && e < 2.5 {
                want.push((parity, e));
            }
        }
    }
    let got = levels(&o);
    assert_eq!(got.len(), want.len());
    for (p, e) in &want {
        assert!(got.iter().any(|(q, x)| q == p && (x - e).abs() < 1e-10), "{p} {e}");
    }
}

#[test]
fn usage_errors_exit_2() {
    let o = qrm2(&["spectrum", "--delta2", "0.4", "--g1", "0.8", "--g2", "0.4"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("delta1"));

    let o = run("spectrum", FIG1, &["--parity", "up"]);
    assert_eq!(code(&o), 2);

    let o = run("spectrum", FIG1, &["--emin", "2", "--emax", "1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("emin"));

    let o = run("spectrum", FIG1, &["--grid-step", "0"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("grid_step"));

    let o = run("gscan", &["--g1", "0", "--g2", "0", "--delta1", "0.7", "--delta2", "0.4"], &[]);
    assert_eq!(code(&o), 2);

    let o = qrm2(&["frobnicate"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(
        &path,
        r#"{"schema_version": 1, "delta1": 0.7, "delta2": 0.4, "g1": 0.4, "g2": 0.4, "emax": 2.0, "out": "json"}"#,
    )
    .unwrap();
    let p = path.to_str().unwrap();

    let o = qrm2(&["spectrum", "--config", p, "--emax", "1.5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["params"]["emax"], 1.5);
    assert_eq!(v["params"]["delta1"], 0.7);
    assert_eq!(v["params"]["grid_step"], 0.005);

    let o = qrm2(&["spectrum", "--config", p, "--out", "csv"]);
    assert!(stdout(&o).starts_with("parity,"));

    std::fs::write(&path, r#"{"schema_version": 2, "delta1": 0.7}"#).unwrap();
    let o = qrm2(&["spectrum", "--config", p]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("schema_version"));

    std::fs::write(&path, r#"{"schema_version": 1, "delta_one": 0.7}"#).unwrap();
    assert_eq!(code(&qrm2(&["spectrum", "--config", p])), 2);
}

#[test]
fn gscan_flags_poles_and_brackets_levels() {
    let o = run("gscan", FIG2, &["--emin", "-1", "--emax", "3", "--samples", "9"]);
    assert_eq!(code(&o), 0);
    let (h, rows) = table(&o);
    assert_eq!(h, ["E", "G_even", "G_odd", "pole_flag"]);
    let flagged: Vec<f64> = rows.iter().filter(|r| r[3] == "true").map(|r| r[0].parse().unwrap()).collect();
    // The equal-coupling series is singular at the positive integers.
    assert_eq!(flagged, [1.0, 2.0, 3.0]);
    for r in rows.iter().filter(|r| r[3] == "true") {
        assert!(r[1].is_empty() && r[2].is_empty());
    }
    assert!(rows.iter().filter(|r| r[3] == "false").all(|r| !r[1].is_empty() && !r[2].is_empty()));

    let window = ["--emin", "-1", "--emax", "3"];
    let scan = run("gscan", FIG1, &[&window[..], &["--samples", "2000"]].concat());
    let (_, rows) = table(&scan);
    let samples: Vec<(f64, Option<f64>, Option<f64>)> = rows
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().ok(), r[2].parse().ok()))
        .collect();
    for (parity, e) in levels(&run("spectrum", FIG1, &window)) {
        let k = samples.windows(2).position(|w| w[0].0 <= e && e < w[1].0).unwrap();
        let pick = |s: &(f64, Option<f64>, Option<f64>)| if parity == "even" { s.1 } else { s.2 };
        let (a, b) = (pick(&samples[k]).unwrap(), pick(&samples[k + 1]).unwrap());
        assert!(a * b <= 0.0, "{parity} level {e} not bracketed");
    }
}

#[test]
fn sweep_rows_for_dark_and_singlet_levels() {
    for (d1, parity) in [("0.7", "even"), ("1.3", "odd")] {
        let o = run("sweep", &["--delta1", d1, "--delta2", "0.3"], &["--emin", "-0.5", "--emax", "1.5"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let (h, rows) = table(&o);
        assert_eq!(h, ["g", "parity", "level_index", "E", "kind", "converged", "continuous", "error"]);
        assert!(rows.iter().any(|r| r[4] == "reference" && r[3] == "1.0"));
        let dark: Vec<_> = rows.iter().filter(|r| r[4] == "dark").collect();
        assert_eq!(dark.len(), 20);
        for r in dark {
            assert_eq!(r[1], parity);
            assert_eq!(r[3].parse::<f64>().unwrap(), 1.0);
        }
    }

    let o = run("sweep", &["--delta1", "0.5", "--delta2", "0.5"], &["--emin", "-0.5", "--emax", "2.5", "--g-steps", "5"]);
    let (_, rows) = table(&o);
    for (e, parity) in [(0.0, "odd"), (1.0, "even"), (2.0, "odd")] {
        let n = rows
            .iter()
            .filter(|r| r[4] == "singlet" && r[1] == parity && r[3].parse::<f64>().unwrap() == e)
            .count();
        assert_eq!(n, 5, "E = {e}");
    }
}

#[test]
fn sweep_records_failed_steps() {
    // An oracle this large exceeds the dense limit, so every step fails.
    let o = run("sweep", &["--delta1", "0.7", "--delta2", "0.4"], &["--g-steps", "3", "--oracle-n", "5000"]);
    assert_eq!(code(&o), 3);
    let (_, rows) = table(&o);
    let errors: Vec<_> = rows.iter().filter(|r| r[4] == "error").collect();
    assert_eq!(errors.len(), 3);
    assert!(errors.iter().all(|r| !r[7].is_empty() && !r[0].is_empty()));
}

#[test]
fn darkstate_reports_conditions() {
    let o = run("darkstate", &["--delta1", "0.7", "--delta2", "0.3", "--g1", "0.3", "--g2", "0.3"], &[]);
    assert_eq!(code(&o), 0);
    let (_, rows) = table(&o);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "even");
    assert_eq!(rows[0][2], "true");
    assert!(rows[0][4].parse::<f64>().unwrap() < 1e-8);
    assert_eq!(rows[1][2], "false");

    let o = run("darkstate", FIG1, &[]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("equal couplings"));
    assert_eq!(table(&o).1.len(), 0);
}
