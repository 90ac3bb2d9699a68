use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ebg(args: &[&str], scenario: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ebg"))
        .args(args)
        .arg("--scenario")
        .arg(scenario)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn write_scenario(dir: &Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("scenario.json");
    std::fs::write(&p, body).unwrap();
    p
}

const SPACES: &str = r#"
    "spaces": [
        {"name": "r4", "factors": [{"dim": 4, "curvature": 0.0}]},
        {"name": "h3xr2", "factors": [{"dim": 3, "curvature": -1.0}, {"dim": 2, "curvature": 0.0}]}
    ],
    "t_grid": {"start": 0.0, "stop": 8.0, "points": 801}"#;

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn bounds_writes_curves_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(
        dir.path(),
        &format!("{{{SPACES}, \"jacobi\": {{\"trials\": 0}}}}"),
    );
    let out = dir.path().join("out");
    let o = ebg(&["bounds"], &sc, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let (header, rows) = read_csv(&out.join("r4.csv"));
    assert_eq!(&header[..5], ["t", "volume", "ebg", "bg", "hr"]);
    for row in &rows {
        let flat = std::f64::consts::PI.powi(2) / 2.0 * row[0].powi(4);
        for v in &row[1..5] {
            assert!((v - flat).abs() <= 1e-12 * flat.max(1e-300), "{row:?}");
        }
    }

    let (header, rows) = read_csv(&out.join("h3xr2.csv"));
    let (vol, hr) = (
        header.iter().position(|h| h == "volume").unwrap(),
        header.iter().position(|h| h == "hr").unwrap(),
    );
    for row in rows.iter().filter(|r| r[0] > 0.0) {
        assert_eq!(row[vol] > row[hr], row[0] < 7.3216, "t={}", row[0]);
    }

    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let names: Vec<&str> = report
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"bg-ebg.additive/h3xr2"));
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
}

#[test]
fn reversed_pair_is_reported_as_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(
        dir.path(),
        &format!("{{{SPACES}, \"jacobi\": {{\"trials\": 5, \"seed\": 1, \"step\": 0.01, \"inject_reversed\": true}}}}"),
    );
    let out = dir.path().join("out");
    let o = ebg(&["verify", "--only", "jacobi"], &sc, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let injected = report
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["name"] == "jacobi.monotonicity.injected")
        .unwrap();
    assert!(injected["pass"].is_null());
    assert!(injected["diagnostics"][0]
        .as_str()
        .unwrap()
        .contains("precondition not met"));
    assert!(String::from_utf8_lossy(&o.stdout).contains("SKIP jacobi.monotonicity.injected"));
}

#[test]
fn series_emits_exact_rationals() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(
        dir.path(),
        r#"{"spaces": [{"name": "h2xr2", "factors": [{"dim": 2, "curvature": -1.0}, {"dim": 2, "curvature": 0.0}]}],
            "t_grid": {"start": 0.0, "stop": 1.0, "points": 11}, "jacobi": {"trials": 0}}"#,
    );
    let out = dir.path().join("out");
    assert!(ebg(&["series"], &sc, &out).status.success());
    let series: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("series.json")).unwrap()).unwrap();
    let get = |kind: &str| {
        series
            .as_array()
            .unwrap()
            .iter()
            .find(|s| s["kind"] == kind)
            .unwrap()
            .clone()
    };
    assert_eq!(
        (get("volume")["c2"].as_str(), get("volume")["c4"].as_str()),
        (Some("1/18"), Some("1/720"))
    );
    assert_eq!(get("ebg")["c4"], "13/6480");
    assert_eq!(
        (get("bg")["c2"].as_str(), get("bg")["c4"].as_str()),
        (Some("1/9"), Some("13/2160"))
    );
}

#[test]
fn bad_scenarios_exit_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let sc = write_scenario(
        dir.path(),
        r#"{"spaces": [], "t_grid": {"start": 0, "stop": 1, "points": 5}}"#,
    );
    let o = ebg(&["verify"], &sc, &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("at least one space"));

    let sc = write_scenario(
        dir.path(),
        r#"{"spaces": [{"name": "x", "factors": []}], "t_grid": {}}"#,
    );
    assert_eq!(ebg(&["bounds"], &sc, &out).status.code(), Some(2));
    assert_eq!(
        ebg(&["bounds"], &dir.path().join("missing.json"), &out)
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn jacobi_lab_writes_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(
        dir.path(),
        &format!("{{{SPACES}, \"jacobi\": {{\"trials\": 3, \"seed\": 2, \"step\": 0.01}}, \"geodesic\": {{\"step\": 0.01}}}}"),
    );
    let out = dir.path().join("out");
    assert!(ebg(&["jacobi-lab"], &sc, &out).status.success());
    let (header, rows) = read_csv(&out.join("r4.trajectory.csv"));
    assert_eq!(header, ["t", "det_j", "u", "kappa_eff"]);
    for row in &rows {
        assert!((row[1] - row[0].powi(3)).abs() <= 1e-10 * row[0].powi(3));
        assert!((row[2] * row[0] - 1.0).abs() < 1e-10);
    }
}
