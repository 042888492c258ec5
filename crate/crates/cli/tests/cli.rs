use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fhn(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fhn")).arg("--out").arg(out).args(args).output().expect("binary runs")
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).expect("manifest written")).unwrap()
}

fn rows(path: PathBuf) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn period_only() {
    let d = tempfile::tempdir().unwrap();
    let o = fhn(d.path(), &["singular", "--b", "0", "--c", "0", "--period-only"]);
    assert!(o.status.success());
    let r = rows(d.path().join("period.csv"));
    assert!((f(&r[0][2]) - (12.0 - 8.0 * 2f64.ln())).abs() < 1e-6);
    let m = manifest(d.path());
    assert_eq!(m["status"], "ok");
    assert_eq!(m["command"], "singular");
    assert!(m["timings"].as_array().unwrap().iter().any(|t| t["op"] == "relaxation_period"));
}

#[test]
fn singular_cycle_segments() {
    let d = tempfile::tempdir().unwrap();
    let o = fhn(d.path(), &["singular", "--b", "0.2", "--c", "0", "--x0", "-2.8", "--y0", "1.64"]);
    assert!(o.status.success());
    let m = manifest(d.path());
    assert_eq!(m["results"]["fate"], "PeriodicCycle");
    let r = rows(d.path().join("segments.csv"));
    assert_eq!(r[0][0], "fast");
    assert!(r.iter().all(|row| row.len() == 6));
}

#[test]
fn start_on_manifold_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let o = fhn(d.path(), &["singular", "--b", "0", "--c", "0", "--x0", "-2", "--y0", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let m = manifest(d.path());
    assert_eq!(m["status"], "error");
    assert_eq!(m["exit_code"], 2);
}

#[test]
fn unparsable_command_line_still_writes_a_manifest() {
    let d = tempfile::tempdir().unwrap();
    let o = fhn(d.path(), &["bifurcate", "--param", "q"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(manifest(d.path())["exit_code"], 2);
}

#[test]
fn simulate_rejects_eps_zero_and_bad_tolerance() {
    let d = tempfile::tempdir().unwrap();
    let o = fhn(d.path(), &["simulate", "--eps", "0", "--x0", "-2.8", "--y0", "1.64", "--tmax", "20"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("singular"));
    let o = fhn(d.path(), &["--tol", "0.1", "simulate", "--eps", "0.1", "--x0", "-2.8", "--y0", "1.64", "--tmax", "20"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn diverging_integration_exits_with_3() {
    let d = tempfile::tempdir().unwrap();
    let o = fhn(d.path(), &["simulate", "--b", "-5", "--eps", "1", "--x0", "0", "--y0", "1", "--tmax", "100"]);
    assert_eq!(o.status.code(), Some(3));
    let m = manifest(d.path());
    assert!(m["error"].as_str().unwrap().contains("t ="), "{m}");
}

#[test]
fn mirrored_simulation() {
    let d = tempfile::tempdir().unwrap();
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    assert!(fhn(&a, &["simulate", "--eps", "0.1", "--x0", "-2.8", "--y0", "1.64", "--tmax", "20"]).status.success());
    assert!(fhn(&b, &["simulate", "--eps", "0.1", "--x0", "2.8", "--y0", "-1.64", "--tmax", "20"]).status.success());
    let (ra, rb) = (rows(a.join("trajectory.csv")), rows(b.join("trajectory.csv")));
    assert_eq!(ra.len(), rb.len());
    assert_eq!(ra.len(), 1001);
    for (p, q) in ra.iter().zip(&rb) {
        assert_eq!(f(&p[0]), f(&q[0]));
        assert!((f(&p[1]) + f(&q[1])).abs() < 1e-7 && (f(&p[2]) + f(&q[2])).abs() < 1e-7);
    }
}

#[test]
fn csv_format() {
    let d = tempfile::tempdir().unwrap();
    assert!(fhn(d.path(), &["simulate", "--eps", "0.5", "--x0", "1", "--y0", "1", "--tmax", "1", "--spacing", "0.25"]).status.success());
    let text = fs::read_to_string(d.path().join("trajectory.csv")).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
    let line = text.lines().nth(2).unwrap();
    for field in line.split(',') {
        let mantissa = field.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
        assert_eq!(mantissa.len(), 17, "{field}");
    }
}

#[test]
fn slow_manifold_rows() {
    let d = tempfile::tempdir().unwrap();
    let o = fhn(d.path(), &["slow-manifold", "--branch", "left", "--eps", "0.1", "--b", "0", "--c", "0", "--at", "0"]);
    assert!(o.status.success());
    let r = rows(d.path().join("slow_manifold.csv"));
    let z = r.iter().find(|row| f(&row[0]) == 0.0).unwrap();
    assert_eq!((f(&z[1]), f(&z[2])), (-2.0, -0.03125));
    assert!((f(&z[3]) + 2.003125).abs() < 1e-15);
    assert!(manifest(d.path())["warnings"].as_array().unwrap().is_empty());

    let o = fhn(d.path(), &["slow-manifold", "--branch", "right", "--eps", "0", "--y-from", "-4", "--y-to", "4"]);
    assert!(o.status.success());
    let r = rows(d.path().join("slow_manifold.csv"));
    assert!(r.iter().all(|row| row[1] == row[3]));
    assert!(r.iter().all(|row| f(&row[0]) < 3.08));
    assert_eq!(manifest(d.path())["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn bifurcation_in_b_with_landmarks() {
    let d = tempfile::tempdir().unwrap();
    let o = fhn(d.path(), &["bifurcate", "--param", "b", "--from", "0.24", "--to", "0.40", "--steps", "200", "--eps", "0.5", "--landmarks"]);
    assert!(o.status.success());
    let marks: Vec<Value> = serde_json::from_str(&fs::read_to_string(d.path().join("landmarks.json")).unwrap()).unwrap();
    let value = |k: &str| marks.iter().find(|m| m["kind"] == k).unwrap()["value"].as_f64().unwrap();
    assert_eq!(value("Pitchfork"), 0.25);
    assert!((value("HopfSuper") - 0.3666).abs() < 1e-4);
    assert!((value("Homoclinic") - 0.36932).abs() < 1e-3);
    assert!(d.path().join("homoclinic_orbit.csv").exists());
    let r = rows(d.path().join("diagram.csv"));
    assert_eq!(r.len(), 200);
    assert_eq!(r[0][1], "1");
    assert_eq!(r[199][1], "3");
}

#[test]
fn bifurcation_in_c_shows_the_explosion() {
    let d = tempfile::tempdir().unwrap();
    let o = fhn(d.path(), &["bifurcate", "--param", "c", "--from", "1.10", "--to", "1.20", "--steps", "400", "--eps", "0.5"]);
    assert!(o.status.success());
    let r = rows(d.path().join("diagram.csv"));
    let header = csv::Reader::from_path(d.path().join("diagram.csv")).unwrap().headers().unwrap().clone();
    let col = header.iter().position(|h| h == "cycle_A").unwrap();
    let a = |row: &Vec<String>| if row[col].is_empty() { 0.0 } else { f(&row[col]) };
    let jump = r.windows(2).find(|w| a(&w[0]) > 15.0 && a(&w[1]) < 5.0).expect("a jump in A");
    assert!(f(&jump[0][0]) < 1.150077 && f(&jump[1][0]) > 1.150077);
}

#[test]
fn zero_step_sweep_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let o = fhn(d.path(), &["bifurcate", "--param", "b", "--from", "0.24", "--to", "0.40", "--steps", "0", "--eps", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_does_not_depend_on_workers() {
    let d = tempfile::tempdir().unwrap();
    let args = ["bifurcate", "--param", "c", "--from", "1.12", "--to", "1.16", "--steps", "37", "--eps", "0.5"];
    let mut outs = Vec::new();
    for (i, jobs) in ["1", "3", "3"].iter().enumerate() {
        let dir = d.path().join(i.to_string());
        let mut a = vec!["--jobs", jobs];
        a.extend(args);
        assert!(fhn(&dir, &a).status.success());
        outs.push(fs::read(dir.join("diagram.csv")).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
    assert_eq!(outs[1], outs[2]);
}

#[test]
fn canard_command() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(fhn(d.path(), &["canard", "--eps", "0"]).status.code(), Some(2));
    assert_eq!(fhn(d.path(), &["canard", "--eps", "0.5", "--from", "1.10", "--to", "1.14"]).status.code(), Some(4));
    let o = fhn(d.path(), &["canard", "--eps", "0.5"]);
    assert!(o.status.success());
    let report: Value = serde_json::from_str(&fs::read_to_string(d.path().join("explosion.json")).unwrap()).unwrap();
    assert!((report["explosion"]["c"].as_f64().unwrap() - 1.150077).abs() < 1e-4);
    assert_eq!(report["loci"]["case_i"]["loci"]["sign_discrepancy"], true);
    let classes: Vec<String> = rows(d.path().join("canard.csv")).into_iter().map(|r| r[3].clone()).collect();
    let order = ["HopfSmall", "Headless", "Headed", "Relaxation"];
    let rank: Vec<usize> = classes.iter().map(|c| order.iter().position(|o| o == c).unwrap()).collect();
    assert!(rank.windows(2).all(|w| w[0] <= w[1]), "{classes:?}");
    assert!(manifest(d.path())["warnings"].as_array().unwrap().iter().any(|w| w.as_str().unwrap().contains("stated value")));
}

#[test]
fn every_recipe_runs() {
    let d = tempfile::tempdir().unwrap();
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../recipes");
    let mut n = 0;
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "toml") {
            let out = d.path().join(p.file_stem().unwrap());
            let o = fhn(&out, &["recipe", p.to_str().unwrap()]);
            assert!(o.status.success(), "{}: {}", p.display(), String::from_utf8_lossy(&o.stderr));
            let m = manifest(&out);
            assert!(m["results"]["runs"].as_array().unwrap().iter().all(|r| r["exit_code"] == 0));
            n += 1;
        }
    }
    assert!(n >= 10);
}

#[test]
fn malformed_recipe_is_rejected_before_running() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("r.toml");
    fs::write(&p, "[[run]]\nname = \"a\"\ncommand = \"simulate\"\nargs = { eps = 0.1, x0 = 0.0, y0 = 1.0, tmax = 1.0 }\n[[run]]\nname = \"b\"\ncommand = \"simulate\"\nargs = { bogus = 1 }\n").unwrap();
    let out = d.path().join("out");
    let o = fhn(&out, &["recipe", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.join("a").exists());
}
