//! Shared fixtures and independent oracles for integration tests.
#![allow(dead_code)]

use hubchoice_core::model::{
    AgeGroup, AlternativeId, AttributeBundle, ChoiceDataset, CurrentMode, DatasetKind,
    Demographics, IncomeBand, ModelSpec, Persona, Respondent, TaskObservation, TripContext,
    TripPurpose,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gauss-Hermite nodes and weights for the weight function exp(-x^2), by
/// Newton iteration on the orthonormal Hermite recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (j as f64 + 1.0)).sqrt() * p2 - (j as f64 / (j as f64 + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn logit(u: [f64; 3], available: [bool; 3]) -> [f64; 3] {
    let mut e = [0.0; 3];
    let mut s = 0.0;
    for j in 0..3 {
        if available[j] {
            e[j] = u[j].exp();
            s += e[j];
        }
    }
    [e[0] / s, e[1] / s, e[2] / s]
}

/// E_z[logit(v + sigma * z * loads)[chosen]] for z ~ N(0, 1), by quadrature.
pub fn quadrature_probability(
    v: [f64; 3],
    available: [bool; 3],
    sigma: f64,
    loads: [bool; 3],
    chosen: usize,
    nodes: usize,
) -> f64 {
    let (x, w) = gauss_hermite(nodes);
    let mut total = 0.0;
    for (xi, wi) in x.iter().zip(&w) {
        let z = std::f64::consts::SQRT_2 * xi;
        let mut u = v;
        for j in 0..3 {
            if loads[j] {
                u[j] += sigma * z;
            }
        }
        total += wi * logit(u, available)[chosen];
    }
    total / std::f64::consts::PI.sqrt()
}

/// Plain logit probability, computed without the crate.
pub fn plain_logit(v: [f64; 3], available: [bool; 3], chosen: usize) -> f64 {
    logit(v, available)[chosen]
}

/// Three-constant specification with one error component on the shared EV.
pub const TINY_SPEC: &str = r#"
name = "tiny"
kind = "non-commute"
availability = "conditional-switching"

[[coefficients]]
name = "asc_sev"
label = "SEV"
group = "constants"

[[coefficients]]
name = "sigma_sev"
label = "SEV: standard deviation"
group = "constants"

[[coefficients]]
name = "asc_seb"
label = "SEB"
group = "constants"

[[coefficients]]
name = "sq_time"
label = "SQ: time"
group = "mode-attributes"

[[terms]]
coefficient = "asc_sev"
alternative = "shared-ev"

[[terms]]
coefficient = "asc_seb"
alternative = "shared-ebike"

[[terms]]
coefficient = "sq_time"
alternative = "status-quo"
covariate = "travel-time"

[[error_components]]
name = "sev"
coefficient = "sigma_sev"
loads_on = ["shared-ev"]
"#;

pub fn tiny_spec() -> ModelSpec {
    ModelSpec::from_toml(TINY_SPEC).expect("tiny spec parses")
}

pub fn demographics() -> Demographics {
    Demographics {
        age_group: AgeGroup::From36To59,
        higher_education: false,
        income_band: IncomeBand::Middle,
        has_children: false,
    }
}

pub fn task(
    task_id: u32,
    mode: CurrentMode,
    distance_km: f64,
    sq_time: f64,
    chosen: AlternativeId,
) -> TaskObservation {
    let mut attributes = [AttributeBundle::default(); 3];
    attributes[0].travel_time_min = sq_time;
    attributes[1].travel_time_min = 10.0;
    attributes[2].travel_time_min = 12.0;
    TaskObservation {
        task_id,
        context: TripContext {
            purpose: TripPurpose::Leisure,
            distance_km,
        },
        current_mode: mode,
        status_quo_mode: mode,
        attributes,
        available: [true; 3],
        chosen: Some(chosen),
    }
}

pub fn single_respondent(tasks: Vec<TaskObservation>) -> ChoiceDataset {
    ChoiceDataset {
        kind: DatasetKind::NonCommute,
        respondents: vec![Respondent {
            id: 1,
            persona: Persona {
                demographics: demographics(),
                current_mode: tasks[0].current_mode,
            },
            tasks,
        }],
    }
}

fn random_bundle(rng: &mut ChaCha8Rng) -> AttributeBundle {
    let chance: f64 = [0.0, 0.25, 0.5][rng.random_range(0..3)];
    AttributeBundle {
        travel_time_min: rng.random_range(3.0..40.0),
        travel_cost_eur: rng.random_range(0.0..8.0),
        access_egress_time_min: rng.random_range(1.0..15.0),
        congestion_chance: chance,
        congestion_delay: if chance == 0.0 { 0.0 } else { rng.random_range(0.1..0.5) },
        parking_search_time_min: rng.random_range(0.0..10.0),
        parking_fee_eur: rng.random_range(0.0..5.0),
    }
}

/// Random non-commute panel with uniformly random choices; every
/// coefficient of the bundled specification gets data variation when
/// `n_individuals` is moderate.
pub fn random_non_commute_dataset(seed: u64, n_individuals: usize, n_tasks: usize) -> ChoiceDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let respondents = (0..n_individuals)
        .map(|i| {
            let demographics = Demographics {
                age_group: AgeGroup::ALL[rng.random_range(0..3)],
                higher_education: rng.random_bool(0.5),
                income_band: IncomeBand::ALL[rng.random_range(0..4)],
                has_children: rng.random_bool(0.4),
            };
            let mode = CurrentMode::ALL[rng.random_range(0..4)];
            let tasks = (0..n_tasks)
                .map(|t| {
                    let distance_km = if mode == CurrentMode::Walk {
                        [2.0, 5.0][rng.random_range(0..2)]
                    } else {
                        [2.0, 5.0, 10.0][rng.random_range(0..3)]
                    };
                    let purpose = if rng.random_bool(0.5) {
                        TripPurpose::Leisure
                    } else {
                        TripPurpose::Shopping
                    };
                    let attributes = [
                        random_bundle(&mut rng),
                        random_bundle(&mut rng),
                        random_bundle(&mut rng),
                    ];
                    TaskObservation {
                        task_id: t as u32,
                        context: TripContext {
                            purpose,
                            distance_km,
                        },
                        current_mode: mode,
                        status_quo_mode: mode,
                        attributes,
                        available: [true; 3],
                        chosen: Some(AlternativeId::ALL[rng.random_range(0..3)]),
                    }
                })
                .collect();
            Respondent {
                id: 1000 + i as u64,
                persona: Persona {
                    demographics,
                    current_mode: mode,
                },
                tasks,
            }
        })
        .collect();
    ChoiceDataset {
        kind: DatasetKind::NonCommute,
        respondents,
    }
}

/// Central finite difference of `f` at `x` in coordinate `i`.
pub fn central_difference(f: &dyn Fn(&[f64]) -> f64, x: &[f64], i: usize) -> f64 {
    let h = 1e-5 * x[i].abs().max(1.0);
    let mut up = x.to_vec();
    let mut down = x.to_vec();
    up[i] += h;
    down[i] -= h;
    (f(&up) - f(&down)) / (up[i] - down[i])
}
