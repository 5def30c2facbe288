use hubchoice_core::estimator::{Convergence, EstimationResult, StopReason};
use hubchoice_core::io::{
    dataset_to_csv_string, read_dataset_csv, report_text, sha256_hex, write_report_csv,
    RunManifest,
};
use hubchoice_core::likelihood::FitStatistics;
use hubchoice_core::model::{ChoiceDataset, DatasetKind};
use hubchoice_core::presets;
use hubchoice_core::synthesizer::{synthesize_dataset, PopulationMarginals};

fn synthetic(kind: DatasetKind, n: usize, seed: u64) -> ChoiceDataset {
    synthesize_dataset(
        &presets::spec(kind),
        &presets::published_parameters(kind),
        n,
        &PopulationMarginals::survey_sample().restricted_to_modeled(),
        seed,
    )
    .unwrap()
}

#[test]
fn round_trip_is_byte_identical() {
    for kind in [DatasetKind::NonCommute, DatasetKind::Commute] {
        let data = synthetic(kind, 40, 5);
        let text = dataset_to_csv_string(&data).unwrap();
        let back = read_dataset_csv(text.as_bytes()).unwrap();
        assert_eq!(back, data);
        assert_eq!(dataset_to_csv_string(&back).unwrap(), text);
        assert_eq!(text.lines().count(), 1 + 3 * data.n_observations());
    }
}

#[test]
fn unanswered_tasks_round_trip() {
    let mut data = synthetic(DatasetKind::NonCommute, 3, 2);
    for r in &mut data.respondents {
        for t in &mut r.tasks {
            t.chosen = None;
        }
    }
    let text = dataset_to_csv_string(&data).unwrap();
    assert_eq!(read_dataset_csv(text.as_bytes()).unwrap(), data);
}

fn corrupt(f: impl Fn(&mut Vec<Vec<String>>)) -> String {
    let data = synthetic(DatasetKind::NonCommute, 2, 1);
    let text = dataset_to_csv_string(&data).unwrap();
    let mut rows: Vec<Vec<String>> = text
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    f(&mut rows);
    let text: String = rows.iter().map(|r| r.join(",") + "\n").collect();
    read_dataset_csv(text.as_bytes()).unwrap_err().to_string()
}

fn col(name: &str) -> usize {
    hubchoice_core::io::dataset_columns()
        .iter()
        .position(|c| *c == name)
        .unwrap()
}

#[test]
fn malformed_files_are_rejected() {
    let e = corrupt(|rows| rows[1][col("availability")] = "yes".into());
    assert!(e.contains("expected 0 or 1"), "{e}");

    let e = corrupt(|rows| {
        rows.remove(2);
    });
    assert!(e.contains("three alternatives"), "{e}");

    let e = corrupt(|rows| rows[1][col("purpose")] = "commute".into());
    assert!(e.contains("mixed") || e.contains("differ"), "{e}");

    let e = corrupt(|rows| rows[4][col("income_band")] = "zzz".into());
    assert!(e.contains("IncomeBand"), "{e}");

    let e = corrupt(|rows| {
        let i = col("age_group");
        let v = if rows[4][i] == "ge60" { "le35" } else { "ge60" };
        rows[4][i] = v.into();
    });
    assert!(e.contains("socio-demographics"), "{e}");

    let e = corrupt(|rows| rows[2][col("alt")] = "status-quo".into());
    assert!(e.contains("twice"), "{e}");
}

#[test]
fn empty_file_is_rejected() {
    let header = hubchoice_core::io::dataset_columns().join(",") + "\n";
    assert!(read_dataset_csv(header.as_bytes()).is_err());
}

fn published_result(kind: DatasetKind) -> EstimationResult {
    let spec = presets::spec(kind);
    let estimates = presets::published_parameters(kind);
    let free_names: Vec<String> = spec.coefficients.iter().map(|c| c.name.clone()).collect();
    let p: Vec<f64> = presets::published_p_values(kind)
        .unwrap()
        .into_iter()
        .map(|(_, p)| p)
        .collect();
    let data = synthetic(kind, 10, 1);
    EstimationResult {
        std_errors: Some(vec![0.1; free_names.len()]),
        p_values: Some(p),
        fit: FitStatistics::new(&data, -50.0, free_names.len()).unwrap(),
        free_names,
        estimates,
        convergence: Convergence {
            converged: true,
            reason: StopReason::GradientTolerance,
            iterations: 12,
            gradient_norm: 1e-7,
            ll_history: vec![-60.0, -50.0],
        },
    }
}

#[test]
fn report_groups_every_coefficient() {
    for (kind, n) in [(DatasetKind::NonCommute, 44), (DatasetKind::Commute, 31)] {
        let spec = presets::spec(kind);
        let result = published_result(kind);
        let text = report_text(&result, &spec).unwrap();
        for heading in [
            "Alternative specific constants",
            "Mode attributes",
            "Socio-demographic variables",
            "Model summary",
        ] {
            assert!(text.contains(heading), "{heading} missing");
        }
        for c in &spec.coefficients {
            assert!(text.contains(&c.label), "{} missing", c.label);
        }
        assert!(text.contains(&format!("Number of parameters        {n}")));
        let mut csv = Vec::new();
        write_report_csv(&result, &spec, &mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), n + 1);
    }
}

#[test]
fn manifest_records_file_digests() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.csv");
    let output = dir.path().join("out.csv");
    std::fs::write(&input, "a,b\n1,2\n").unwrap();
    std::fs::write(&output, "x\n").unwrap();
    let mut m = RunManifest::new("estimate", 3, &serde_json::json!({"draws": 10})).unwrap();
    m.add_input(&input).unwrap();
    m.add_output(&output).unwrap();
    assert_eq!(m.inputs[&input.display().to_string()], sha256_hex(b"a,b\n1,2\n"));
    let path = dir.path().join("manifest.json");
    m.write(&path).unwrap();
    let back: RunManifest =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, m);
    assert!(!std::fs::read_to_string(&path).unwrap().contains("time"));
}
