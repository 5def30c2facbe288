use hubchoice_core::model::{
    AlternativeId, CurrentMode, DatasetKind, ParameterVector, TripPurpose,
};
use hubchoice_core::presets;
use hubchoice_core::simulator::{
    base_scenario, bundled_scenario, policy_delta, reference_demographics, scenario_probabilities,
    scenario_shares, substitution_table, ScenarioOverride,
};
use proptest::prelude::*;

fn published(kind: DatasetKind) -> (hubchoice_core::model::ModelSpec, ParameterVector) {
    (presets::spec(kind), presets::published_parameters(kind))
}

fn car_5km(n_draws: usize, seed: u64) -> hubchoice_core::simulator::ScenarioDefinition {
    base_scenario(
        reference_demographics(),
        CurrentMode::Car,
        TripPurpose::Leisure,
        5.0,
        n_draws,
        seed,
    )
    .unwrap()
}

fn fee(value: f64) -> ScenarioOverride {
    ScenarioOverride {
        alternative: AlternativeId::StatusQuo,
        field: "parking_fee_eur".into(),
        value,
    }
}

#[test]
fn zero_sigma_is_closed_form_logit() {
    let (spec, params) = published(DatasetKind::NonCommute);
    let mut p = params.clone();
    for c in &spec.error_components {
        p.set(&c.coefficient, 0.0).unwrap();
    }
    let s = car_5km(50, 3);
    let probs = scenario_probabilities(&s, &p, &spec).unwrap();
    // Hand-evaluated utilities for the reference persona at the base ledger.
    let get = |n: &str| p.get(n).unwrap();
    let v_sq = get("sq_car_time") * 10.0
        + get("sq_car_cost") * 1.0
        + get("sq_access") * 5.0
        + get("sq_parking_time") * 5.0
        + get("sq_car_parking_cost") * 3.0;
    let v_sev = get("asc_sev")
        + get("sev_time_car_pt") * 10.0
        + get("sev_cost_car") * 2.5
        + get("sev_access") * 10.0
        + get("sev_age_le35");
    let v_seb = get("asc_seb")
        + get("seb_time_car_pt") * 12.0
        + get("seb_cost") * 1.0
        + get("seb_access") * 10.0
        + get("seb_age_le35")
        + get("seb_higher_education");
    let m = v_sq.max(v_sev).max(v_seb);
    let e = [(v_sq - m).exp(), (v_sev - m).exp(), (v_seb - m).exp()];
    let total: f64 = e.iter().sum();
    for j in 0..3 {
        assert!((probs[j] - e[j] / total).abs() < 1e-12, "{probs:?}");
    }
}

#[test]
fn same_seed_is_bitwise_stable() {
    let (spec, params) = published(DatasetKind::NonCommute);
    let a = scenario_shares(&car_5km(2000, 9), &params, &spec).unwrap();
    let b = scenario_shares(&car_5km(2000, 9), &params, &spec).unwrap();
    assert_eq!(a, b);
    let c = scenario_shares(&car_5km(2000, 10), &params, &spec).unwrap();
    assert_ne!(a, c);
}

#[test]
fn higher_parking_fee_lowers_status_quo() {
    let (spec, params) = published(DatasetKind::NonCommute);
    let base = car_5km(5000, 1);
    let mut previous = scenario_shares(&base, &params, &spec).unwrap()[0];
    for v in [3.5, 4.0, 5.0, 8.0] {
        let s = base.with_override(&fee(v)).unwrap();
        let sq = scenario_shares(&s, &params, &spec).unwrap()[0];
        assert!(sq < previous, "fee {v}: {sq} >= {previous}");
        previous = sq;
    }
}

#[test]
fn common_random_numbers_reduce_delta_noise() {
    let (spec, params) = published(DatasetKind::NonCommute);
    let deltas_crn: Vec<f64> = (0..20)
        .map(|seed| {
            let base = car_5km(500, seed);
            let modified = base.with_override(&fee(4.5)).unwrap();
            policy_delta(&base, &modified, &params, &spec).unwrap()[0]
        })
        .collect();
    let deltas_indep: Vec<f64> = (0..20)
        .map(|seed| {
            let base = car_5km(500, seed);
            let mut modified = base.with_override(&fee(4.5)).unwrap();
            modified.seed = seed + 1000;
            let a = scenario_shares(&base, &params, &spec).unwrap()[0];
            let b = scenario_shares(&modified, &params, &spec).unwrap()[0];
            b - a
        })
        .collect();
    let var = |x: &[f64]| {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
    };
    assert!(var(&deltas_crn) * 10.0 < var(&deltas_indep));
}

#[test]
fn policy_delta_requires_matching_draws() {
    let (spec, params) = published(DatasetKind::NonCommute);
    let base = car_5km(100, 1);
    let mut other = base.with_override(&fee(4.5)).unwrap();
    other.seed = 2;
    assert!(policy_delta(&base, &other, &params, &spec).is_err());
}

#[test]
fn commute_scenario_with_non_commute_spec_fails() {
    let (spec, params) = published(DatasetKind::NonCommute);
    let s = base_scenario(
        reference_demographics(),
        CurrentMode::Car,
        TripPurpose::Commute,
        5.0,
        100,
        1,
    )
    .unwrap();
    assert!(scenario_shares(&s, &params, &spec).is_err());
}

#[test]
fn grid_lists_undefined_cells_as_exclusions() {
    let (spec, params) = published(DatasetKind::Commute);
    let t = substitution_table(
        reference_demographics(),
        TripPurpose::Commute,
        &[CurrentMode::Car, CurrentMode::Bike],
        &[2.0, 5.0, 10.0],
        &params,
        &spec,
        500,
        4,
    )
    .unwrap();
    assert_eq!(t.rows.len(), 5);
    assert_eq!(t.exclusions.len(), 1);
    assert_eq!(t.exclusions[0].mode, CurrentMode::Bike);
    assert!(t.to_text().contains("Excluded"));
    let mut csv = Vec::new();
    t.write_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 6);
}

#[test]
fn grid_is_thread_count_invariant() {
    let (spec, params) = published(DatasetKind::NonCommute);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                substitution_table(
                    reference_demographics(),
                    TripPurpose::Leisure,
                    CurrentMode::ALL,
                    &[2.0, 5.0],
                    &params,
                    &spec,
                    300,
                    8,
                )
                .unwrap()
            })
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn bundled_policy_file_runs() {
    let (spec, params) = published(DatasetKind::NonCommute);
    let out = bundled_scenario("car-policies")
        .unwrap()
        .run(&params, &spec, 1, Some(2000))
        .unwrap();
    let table = out.policy.unwrap();
    assert_eq!(table.rows.len(), 5);
    assert!(table.rows[0].delta.iter().all(|d| *d == 0.0));
    for r in &table.rows[1..] {
        assert!(r.delta[0] < 0.0, "{}: {:?}", r.name, r.delta);
        assert!(r.delta.iter().sum::<f64>().abs() < 1e-9);
    }
    assert!(table.to_text().contains("Base"));
}

#[test]
fn scenario_file_round_trips_through_toml() {
    let file = bundled_scenario("car-policies").unwrap();
    let again = hubchoice_core::simulator::ScenarioFile::from_toml(&file.to_toml()).unwrap();
    assert_eq!(file, again);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shares_sum_to_one_hundred(seed in 0u64..1000, fee_value in 0.0f64..10.0, d in 0usize..3) {
        let (spec, params) = published(DatasetKind::NonCommute);
        let distance = [2.0, 5.0, 10.0][d];
        let s = base_scenario(reference_demographics(), CurrentMode::Car, TripPurpose::Shopping, distance, 200, seed)
            .unwrap()
            .with_override(&fee(fee_value))
            .unwrap();
        let shares = scenario_shares(&s, &params, &spec).unwrap();
        prop_assert!((shares.iter().sum::<f64>() - 100.0).abs() < 1e-9);
        prop_assert!(shares.iter().all(|v| *v > 0.0 && *v < 100.0));
    }
}
