use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hubchoice"));
    c.env_remove("HUBCHOICE_THREADS");
    c
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn read(path: PathBuf) -> String {
    std::fs::read_to_string(path).unwrap()
}

const BIKE_REFERENCE: &str = r#"
[commute]
distance_km = 5.0
mode = "bike"
travel_time_min = 20.0
travel_cost_eur = 0.0
access_egress_min = 0.0
congestion_chance = 0.0
congestion_delay_min = 0.0
parking_search_min = 2.0
parking_fee_eur = 0.0
"#;

#[test]
fn commute_design_has_27_tasks_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "design.toml", &format!("respondents = 5\n{BIKE_REFERENCE}"));
    for out in ["a", "b"] {
        ok(&run(&["design", "--config", "design.toml", "--seed", "4", "--out", out], dir.path()));
    }
    let tasks = read(dir.path().join("a/tasks.csv"));
    // Header plus 27 tasks x 3 alternatives x 7 attributes.
    assert_eq!(tasks.lines().count(), 1 + 27 * 3 * 7);
    for f in ["plan.csv", "codebook.txt", "tasks.csv", "assignment.csv"] {
        assert_eq!(read(dir.path().join("a").join(f)), read(dir.path().join("b").join(f)), "{f}");
    }
    let manifest = read(dir.path().join("a/manifest.json"));
    assert!(manifest.contains("\"seed\": 4"));
    assert!(manifest.contains("tasks.csv"));
}

#[test]
fn too_many_factors_fail() {
    let dir = TempDir::new().unwrap();
    let factors: String = (0..14)
        .map(|i| format!("[[factors]]\nname = \"f{i}\"\nlevels = [1.0, 2.0, 3.0]\n"))
        .collect();
    write(dir.path(), "design.toml", &factors);
    let out = run(&["design", "--config", "design.toml", "--seed", "1", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("13"));
}

#[test]
fn seed_is_mandatory() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "syn.toml", "model = \"commute\"\nindividuals = 3\n");
    let out = run(&["synthesize", "--config", "syn.toml"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
}

#[test]
fn synthesize_writes_long_format_and_truth() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "syn.toml", "model = \"non-commute\"\nindividuals = 900\n");
    ok(&run(&["synthesize", "--config", "syn.toml", "--seed", "1", "--out", "o"], dir.path()));
    let data = read(dir.path().join("o/dataset.csv"));
    let mut lines = data.lines();
    assert_eq!(
        lines.next().unwrap(),
        hubchoice_core::io::dataset_columns().join(",")
    );
    assert_eq!(lines.count(), 16_200);
    let truth = read(dir.path().join("o/truth.csv"));
    assert_eq!(truth.lines().count(), 45);
}

#[test]
fn zero_individuals_and_missing_spec_fail() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "zero.toml", "model = \"non-commute\"\nindividuals = 0\n");
    let out = run(&["synthesize", "--config", "zero.toml", "--seed", "1", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    write(
        dir.path(),
        "missing.toml",
        "model = \"non-commute\"\nspec = \"nowhere.toml\"\nindividuals = 5\n",
    );
    let out = run(&["synthesize", "--config", "missing.toml", "--seed", "1", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.toml"));
}

#[test]
fn null_model_report() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "syn.toml", "model = \"non-commute\"\nindividuals = 707\n");
    ok(&run(&["synthesize", "--config", "syn.toml", "--seed", "2", "--out", "data"], dir.path()));
    let spec = hubchoice_core::presets::spec(hubchoice_core::model::DatasetKind::NonCommute);
    let zeros = hubchoice_core::model::ParameterVector::zeros_for(&spec);
    write(dir.path(), "zeros.csv", &zeros.to_csv_string());
    write(
        dir.path(),
        "est.toml",
        "model = \"non-commute\"\ndataset = \"data/dataset.csv\"\nstart = \"zeros.csv\"\n",
    );
    let text = ok(&run(&["estimate", "--config", "est.toml", "--seed", "1", "--draws", "10", "--out", "o"], dir.path()));
    assert!(text.contains("Number of observations      4242"), "{text}");
    assert!(text.contains("Null log-likelihood         -4660.3"), "{text}");
    assert!(text.contains("Final log-likelihood        -4660.3"), "{text}");
}

#[test]
fn unconverged_estimate_writes_flagged_report() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "syn.toml", "model = \"non-commute\"\nindividuals = 60\n");
    ok(&run(&["synthesize", "--config", "syn.toml", "--seed", "3", "--out", "data"], dir.path()));
    write(
        dir.path(),
        "est.toml",
        "model = \"non-commute\"\ndataset = \"data/dataset.csv\"\nmax_iterations = 2\nstd_errors = false\n",
    );
    let mut reports = Vec::new();
    for out in ["a", "b"] {
        let o = run(&["estimate", "--config", "est.toml", "--seed", "1", "--draws", "10", "--out", out], dir.path());
        assert_eq!(o.status.code(), Some(3));
        assert!(String::from_utf8_lossy(&o.stderr).contains("did not converge"));
        reports.push(read(dir.path().join(out).join("report.txt")));
    }
    assert_eq!(reports[0], reports[1]);
    assert!(reports[0].contains("Converged                   false"));
    let csv = read(dir.path().join("a/report.csv"));
    assert_eq!(csv.lines().count(), 45);
    let estimates = read(dir.path().join("a/estimates.csv"));
    assert_eq!(estimates.lines().count(), 45);
}

fn share_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .map(|l| {
            l.split(',')
                .filter_map(|v| v.parse::<f64>().ok())
                .collect()
        })
        .collect()
}

#[test]
fn bundled_scenarios_have_expected_shape() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "grid.toml", "model = \"non-commute\"\nscenario = \"noncommute-grid\"\n");
    write(dir.path(), "policies.toml", "model = \"non-commute\"\nscenario = \"car-policies\"\n");
    let text = ok(&run(&["simulate", "--config", "grid.toml", "--seed", "5", "--draws", "2000", "--out", "grid"], dir.path()));
    assert!(text.contains("walk 10 km"));
    let rows = share_rows(&read(dir.path().join("grid/shares.csv")));
    assert_eq!(rows.len(), 11);
    for r in &rows {
        // distance, then three shares
        assert!((r[1] + r[2] + r[3] - 100.0).abs() <= 0.1 + 1e-9, "{r:?}");
    }
    ok(&run(&["simulate", "--config", "policies.toml", "--seed", "5", "--draws", "2000", "--out", "policies"], dir.path()));
    let rows = share_rows(&read(dir.path().join("policies/policy.csv")));
    assert_eq!(rows.len(), 5);
    for r in &rows {
        assert!((r[0] + r[1] + r[2] - 100.0).abs() <= 0.1 + 1e-9, "{r:?}");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "grid.toml", "model = \"non-commute\"\nscenario = \"noncommute-grid\"\n");
    ok(&run(&["simulate", "--config", "grid.toml", "--seed", "5", "--draws", "500", "--out", "one", "--threads", "1"], dir.path()));
    let out = bin()
        .args(["simulate", "--config", "grid.toml", "--seed", "5", "--draws", "500", "--out", "many"])
        .env("HUBCHOICE_THREADS", "3")
        .current_dir(dir.path())
        .output()
        .unwrap();
    ok(&out);
    assert_eq!(read(dir.path().join("one/shares.csv")), read(dir.path().join("many/shares.csv")));
}

#[test]
fn value_of_time_from_published_estimates() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "vot.toml", "model = \"non-commute\"\n");
    let text = ok(&run(&["vot", "--config", "vot.toml", "--out", "v"], dir.path()));
    assert!(text.contains("6.4 EUR/h"), "{text}");
    assert!(text.contains("12.9 EUR/h"), "{text}");
    write(
        dir.path(),
        "custom.toml",
        "model = \"commute\"\n[[pairs]]\nlabel = \"e-bike\"\ntime = \"seb_time\"\ncost = \"seb_cost\"\n",
    );
    let text = ok(&run(&["vot", "--config", "custom.toml", "--out", "c"], dir.path()));
    assert!(text.contains("5.2 EUR/h"), "{text}");
}
