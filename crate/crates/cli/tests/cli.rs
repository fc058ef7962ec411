use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pclab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = pclab(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn csv_rows(bytes: &[u8]) -> Vec<Vec<String>> {
    csv::Reader::from_reader(bytes)
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn presets_lists_required_systems() {
    let v = json(&["presets"]);
    let names: Vec<&str> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["name"].as_str().unwrap())
        .collect();
    for required in [
        "example-4.1-f1",
        "example-4.1-f2",
        "example-4.1-f2-eps",
        "S2",
        "S3",
    ] {
        assert!(names.contains(&required), "{required}");
    }
}

#[test]
fn orbit_is_exact_on_rational_backend() {
    let v = json(&["orbit", "--preset", "S2", "0.2", "2"]);
    let xs: Vec<&str> = v["orbit"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["x"].as_str().unwrap())
        .collect();
    assert_eq!(xs, ["1/5", "4/25", "37/250"]);
    assert_eq!(v["orbit"][0]["d"], 1);

    let back = json(&["orbit", "--preset", "S2", "37/250", "2", "--inverse"]);
    assert_eq!(back["orbit"][2]["x"], "1/5");
}

#[test]
fn itinerary_reports_eventual_period() {
    let v = json(&[
        "itinerary",
        "--preset",
        "S2",
        "--cuts",
        "0.3",
        "0.9",
        "--steps",
        "80",
    ]);
    assert_eq!(v["digits"][0], 2);
    assert_eq!(v["period"], serde_json::json!([2]));
    assert_eq!(v["classification"]["kind"], "eventually-periodic");
}

#[test]
fn gaps_and_qpartition() {
    let v = json(&["gaps", "--preset", "S2", "--cuts", "0.1345"]);
    let hit = &v["hits"][0];
    assert_eq!(hit["q"], 2);
    assert_eq!(hit["verdict"], "hit-interior");

    let v = json(&["qpartition", "--preset", "S2"]);
    assert_eq!(v["m"], 2);
    assert_eq!(v["partition"]["tau"], serde_json::json!([1, 2]));
    assert!(v["verification"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["passed"] == true));

    let out = pclab(&["qpartition", "--preset", "S2", "--format", "csv"]);
    assert_eq!(
        csv_rows(&out.stdout),
        vec![
            vec!["1", "0", "3/10", "1", "1"],
            vec!["2", "3/10", "1", "2", "2"]
        ]
    );
}

#[test]
fn attractors_on_s2_and_on_general_examples() {
    let dir = tempfile::tempdir().unwrap();
    let basins = dir.path().join("basins.csv");
    let v = json(&[
        "attractors",
        "--preset",
        "S2",
        "--samples",
        "10",
        "--basins",
        basins.to_str().unwrap(),
    ]);
    let a = &v["attractors"];
    assert_eq!(a["r"], 2);
    assert_eq!(a["orbits"][0]["points"], serde_json::json!(["1/7"]));
    assert_eq!(a["orbits"][1]["points"], serde_json::json!(["5/7"]));
    assert_eq!(a["basin_histogram"], serde_json::json!([3, 7]));
    let rows = csv_rows(&std::fs::read(&basins).unwrap());
    assert_eq!(rows.len(), 10);
    assert_eq!(rows[0][..2], ["1/20".to_string(), "1".to_string()]);

    let f1 = json(&[
        "attractors",
        "--preset",
        "example-4.1-f1",
        "--samples",
        "40",
    ]);
    assert_eq!(f1["r"], 0);
    assert_eq!(f1["classes"][0]["kind"], "phantom");
    assert_eq!(f1["classes"][0]["points"], serde_json::json!(["1/2"]));
    assert_eq!(f1["classes"][0]["count"], 40);

    let f2 = json(&[
        "attractors",
        "--preset",
        "example-4.1-f2",
        "--samples",
        "40",
    ]);
    assert_eq!(f2["r"], 1);
    assert_eq!(f2["classes"][0]["points"], serde_json::json!(["1/2"]));
}

#[test]
fn gconnect_finds_engineered_connection() {
    let v = json(&["gconnect", "--preset", "S2", "--cuts", "4/9"]);
    assert_eq!(v["connection"]["k"], 1);
    let v = json(&["gconnect", "--preset", "S2", "--cuts", "0.3"]);
    assert!(v["connection"].is_null());
}

#[test]
fn ulam_and_density_gap_emit_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("density.csv");
    let status = pclab(&[
        "ulam",
        "--preset",
        "S2",
        "--bins",
        "32",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    let rows = csv_rows(&std::fs::read(&out).unwrap());
    assert_eq!(rows.len(), 32);
    let total: f64 = rows.iter().map(|r| r[2].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);

    let v = json(&[
        "density-gap",
        "--preset",
        "S2",
        "--seeds",
        "4",
        "--steps",
        "20000",
        "--seed",
        "10",
    ]);
    assert_eq!(v["records"][0]["seed"], 10);
    assert_eq!(v["dense"], 4);
}

#[test]
fn validate_accepts_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(
        dir.path(),
        "good.json",
        r#"{"branches":[{"kind":"affine","coefficients":["0.3","0.1"]},{"kind":"affine","coefficients":[0.3,0.5]}],"cuts":["0.3"]}"#,
    );
    let v = json(&["validate", &good]);
    assert_eq!(
        v["images"],
        serde_json::json!(["[1/10, 2/5]", "[1/2, 4/5]"])
    );
    assert_eq!(v["expansion"], "10/3");

    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"branches":[{"kind":"affine","coefficients":["0.6","0.1"]},{"kind":"affine","coefficients":["0.3","0.5"]}]}"#,
    );
    let out = pclab(&["validate", &bad]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("intersecting images"));

    let out = pclab(&["orbit", "--preset", "S9", "0.1", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("S2"));

    let out = pclab(&["orbit", "0.1", "3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn campaign_is_reproducible_and_writes_records() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "c.toml",
        "system = \"S2\"\ntrials = 12\nseed = 42\n",
    );
    let run = |tag: &str| {
        let records = dir.path().join(format!("{tag}.jsonl"));
        let flat = dir.path().join(format!("{tag}.csv"));
        let summary = json(&[
            "campaign",
            &config,
            "--records",
            records.to_str().unwrap(),
            "--flat",
            flat.to_str().unwrap(),
        ]);
        let lines: Vec<Value> = std::fs::read_to_string(&records)
            .unwrap()
            .lines()
            .map(|l| {
                let mut v: Value = serde_json::from_str(l).unwrap();
                v.as_object_mut().unwrap().remove("elapsed_ms");
                v
            })
            .collect();
        (summary, lines, csv_rows(&std::fs::read(&flat).unwrap()))
    };
    let (summary, first, flat) = run("a");
    let (_, second, _) = run("b");
    assert_eq!(first, second);
    assert_eq!(first.len(), 12);
    assert_eq!(flat.len(), 12);
    assert_eq!(summary["records"], 12);
    let counted = summary["successes"].as_u64().unwrap()
        + summary["discarded"].as_u64().unwrap()
        + summary["invariant_violations"].as_u64().unwrap();
    assert_eq!(counted, 12);
    assert!(summary["max_r"].as_u64().unwrap() <= 2);

    let reseeded = json(&["campaign", &config, "--seed", "7", "--trials", "3"]);
    assert_eq!(reseeded["trials"], 3);

    let broken = write(dir.path(), "bad.toml", "system = \"S2\"\ntrials = 0\n");
    assert_eq!(pclab(&["campaign", &broken]).status.code(), Some(1));
}

#[test]
fn shipped_configs_run() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("r.jsonl");
    let summary = dir.path().join("s.json");
    for (name, n, per_trial) in [("s2.toml", 2, 1), ("s3.toml", 2, 1), ("inline.json", 3, 4)] {
        let config = root.join(name);
        let v = json(&[
            "campaign",
            config.to_str().unwrap(),
            "--trials",
            "4",
            "--records",
            records.to_str().unwrap(),
            "--summary",
            summary.to_str().unwrap(),
        ]);
        assert_eq!(v["n"], n, "{name}");
        assert_eq!(v["records"], 4 * per_trial, "{name}");
        assert_eq!(v["invariant_violations"], 0, "{name}");
        let written: Value = serde_json::from_slice(&std::fs::read(&summary).unwrap()).unwrap();
        assert_eq!(written, v);
    }
}
