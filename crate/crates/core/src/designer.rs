//! Stated-choice designs: 27-run orthogonal arrays over three-level factors,
//! instantiated as commuting (reference-pegged) and non-commuting task
//! batteries, and the random assignment of six tasks per respondent.

use std::fmt::Write as _;
use std::io::Write;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::draws::substream;
use crate::error::{Error, Result};
use crate::model::{
    AlternativeId, AttributeBundle, CurrentMode, DatasetKind, TaskObservation, TripContext,
    TripPurpose,
};

pub const N_RUNS: usize = 27;
pub const MAX_FACTORS: usize = 13;
pub const TASKS_PER_RESPONDENT: usize = 6;
pub const NON_COMMUTE_DISTANCES_KM: [f64; 3] = [2.0, 5.0, 10.0];
pub const NON_COMMUTE_PURPOSES: [TripPurpose; 2] = [TripPurpose::Leisure, TripPurpose::Shopping];

/// Coefficients (a, b, c) of the linear form a*x0 + b*x1 + c*x2 over GF(3),
/// where x0 x1 x2 are the ternary digits of the run index, most significant
/// first. Any two forms are linearly independent, which gives strength 2.
const FORMS: [[u8; 3]; MAX_FACTORS] = [
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 1, 0],
    [1, 2, 0],
    [1, 0, 1],
    [1, 0, 2],
    [0, 1, 1],
    [0, 1, 2],
    [1, 1, 1],
    [1, 1, 2],
    [1, 2, 1],
    [1, 2, 2],
];

/// OA(27, 3^k, 2) as 27 rows of `k` level indices in {0, 1, 2}.
pub fn orthogonal_array_27(k: usize) -> Result<Vec<Vec<u8>>> {
    if k == 0 || k > MAX_FACTORS {
        return Err(Error::Design(format!(
            "a 27-run orthogonal array holds 1 to {MAX_FACTORS} factors, {k} requested"
        )));
    }
    Ok((0..N_RUNS)
        .map(|run| {
            let digits = [(run / 9) as u8, ((run / 3) % 3) as u8, (run % 3) as u8];
            FORMS[..k]
                .iter()
                .map(|f| (f[0] * digits[0] + f[1] * digits[1] + f[2] * digits[2]) % 3)
                .collect()
        })
        .collect())
}

/// Attribute level grids of the experiments, indexed by trip distance.
pub mod levels {
    use super::*;

    fn distance_index(distance_km: f64) -> Result<usize> {
        NON_COMMUTE_DISTANCES_KM
            .iter()
            .position(|d| (d - distance_km).abs() < 1e-9)
            .ok_or_else(|| {
                Error::Design(format!("no attribute grid for a {distance_km} km trip"))
            })
    }

    fn by_distance(distance_km: f64, table: [[f64; 3]; 3]) -> Result<[f64; 3]> {
        Ok(table[distance_index(distance_km)?])
    }

    pub const SEV_TARIFF_EUR_PER_MIN: [f64; 3] = [0.15, 0.25, 0.35];
    pub const SEB_FEE_EUR: [f64; 3] = [0.5, 1.0, 1.5];
    pub const SEB_FEE_COMMUTE_EUR: [f64; 3] = [0.5, 1.5, 2.5];
    pub const CONGESTION_CHANCE: [f64; 3] = [0.0, 0.2, 0.4];
    /// Fractions of travel time.
    pub const CONGESTION_DELAY: [f64; 3] = [0.25, 0.5, 0.75];
    pub const COMMUTE_ACCESS_MIN: [f64; 3] = [2.0, 10.0, 18.0];
    pub const REFERENCE_MULTIPLIERS: [f64; 3] = [0.8, 1.0, 1.2];
    pub const SEV_REFERENCE_KMH: f64 = 30.0;
    pub const SEB_REFERENCE_KMH: f64 = 20.0;
    pub const CAR_COST_EUR_PER_KM: [f64; 3] = [0.1, 0.2, 0.3];
    pub const PARKING_SEARCH_MIN: [f64; 3] = [0.0, 5.0, 10.0];
    pub const PARKING_FEE_EUR: [f64; 3] = [0.0, 3.0, 6.0];

    pub fn ehub_access(distance_km: f64) -> Result<[f64; 3]> {
        by_distance(distance_km, [[2.0, 6.0, 10.0], [2.0, 10.0, 18.0], [2.0, 10.0, 18.0]])
    }

    pub fn sev_time(distance_km: f64) -> Result<[f64; 3]> {
        by_distance(distance_km, [[3.0, 5.0, 7.0], [7.0, 10.0, 13.0], [15.0, 20.0, 25.0]])
    }

    pub fn seb_time(distance_km: f64) -> Result<[f64; 3]> {
        by_distance(distance_km, [[4.0, 6.0, 8.0], [10.0, 12.0, 14.0], [20.0, 25.0, 30.0]])
    }

    /// Egress time of car and public transport.
    pub fn egress(distance_km: f64) -> Result<[f64; 3]> {
        by_distance(distance_km, [[1.0, 3.0, 5.0], [1.0, 5.0, 9.0], [1.0, 5.0, 9.0]])
    }

    pub fn pt_time(distance_km: f64) -> Result<[f64; 3]> {
        by_distance(distance_km, [[4.0, 6.0, 8.0], [10.0, 15.0, 20.0], [20.0, 30.0, 40.0]])
    }

    pub fn pt_cost(distance_km: f64) -> Result<[f64; 3]> {
        by_distance(distance_km, [[0.5, 1.0, 1.5], [1.0, 1.5, 2.0], [2.0, 3.0, 4.0]])
    }

    pub fn bike_time(distance_km: f64) -> Result<[f64; 3]> {
        by_distance(distance_km, [[6.0, 8.0, 10.0], [15.0, 20.0, 25.0], [30.0, 40.0, 50.0]])
    }

    pub fn walk_time(distance_km: f64) -> Result<[f64; 3]> {
        match distance_index(distance_km)? {
            0 => Ok([20.0, 25.0, 30.0]),
            1 => Ok([50.0, 60.0, 70.0]),
            _ => Err(Error::UndefinedCell {
                mode: CurrentMode::Walk,
                distance_km,
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub levels: [f64; 3],
}

impl Factor {
    pub fn new(name: &str, levels: [f64; 3]) -> Self {
        Self {
            name: name.to_string(),
            levels,
        }
    }
}

/// Factors mapped to orthogonal array columns in declaration order.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignPlan {
    factors: Vec<Factor>,
    matrix: Vec<Vec<u8>>,
}

impl DesignPlan {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        for (i, f) in factors.iter().enumerate() {
            if factors[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::Design(format!("factor `{}` listed twice", f.name)));
            }
            if f.levels.iter().any(|v| !v.is_finite()) {
                return Err(Error::Design(format!("factor `{}` has a non-finite level", f.name)));
            }
        }
        let matrix = orthogonal_array_27(factors.len())?;
        Ok(Self { factors, matrix })
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn matrix(&self) -> &[Vec<u8>] {
        &self.matrix
    }

    pub fn factor_index(&self, name: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.name == name)
    }

    /// Level value of factor `name` in `run`.
    pub fn value(&self, run: usize, name: &str) -> Result<f64> {
        let f = self
            .factor_index(name)
            .ok_or_else(|| Error::Design(format!("no factor `{name}` in the plan")))?;
        Ok(self.factors[f].levels[self.matrix[run][f] as usize])
    }

    /// Plain text description of factors, levels and array columns.
    pub fn codebook(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "runs: {N_RUNS}");
        let _ = writeln!(out, "factors: {}", self.factors.len());
        for (i, f) in self.factors.iter().enumerate() {
            let form = FORMS[i];
            let _ = writeln!(
                out,
                "column {:>2}  {:<24} levels {} | {} | {}  (x0*{} + x1*{} + x2*{} mod 3)",
                i + 1,
                f.name,
                f.levels[0],
                f.levels[1],
                f.levels[2],
                form[0],
                form[1],
                form[2]
            );
        }
        out
    }

    /// Wide matrix: `run` then one column of level values per factor.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["run".to_string()];
        header.extend(self.factors.iter().map(|f| f.name.clone()));
        w.write_record(&header)?;
        for (run, row) in self.matrix.iter().enumerate() {
            let mut record = vec![run.to_string()];
            record.extend(
                row.iter()
                    .zip(&self.factors)
                    .map(|(&l, f)| f.levels[l as usize].to_string()),
            );
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A respondent's regular commute, the fixed status quo of the commuting
/// experiment. Congestion delay is in minutes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTrip {
    pub distance_km: f64,
    pub mode: CurrentMode,
    pub travel_time_min: f64,
    pub travel_cost_eur: f64,
    pub access_egress_min: f64,
    pub congestion_chance: f64,
    pub congestion_delay_min: f64,
    pub parking_search_min: f64,
    pub parking_fee_eur: f64,
}

pub const MAX_BIKE_SPEED_KMH: f64 = 40.0;
pub const MAX_ACCESS_EGRESS_MIN: f64 = 60.0;

impl ReferenceTrip {
    pub fn speed_kmh(&self) -> f64 {
        self.distance_km / self.travel_time_min * 60.0
    }

    /// Plausibility screens; failures make the trip unusable.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Design(format!("implausible reference trip: {what}")));
        let values = [
            self.distance_km,
            self.travel_time_min,
            self.travel_cost_eur,
            self.access_egress_min,
            self.congestion_chance,
            self.congestion_delay_min,
            self.parking_search_min,
            self.parking_fee_eur,
        ];
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return bad("negative or non-finite attribute");
        }
        if self.distance_km <= 0.0 || self.travel_time_min <= 0.0 {
            return bad("zero distance or travel time");
        }
        if self.congestion_chance > 1.0 {
            return bad("congestion chance above 100%");
        }
        if self.congestion_chance == 0.0 && self.congestion_delay_min != 0.0 {
            return bad("congestion delay without congestion chance");
        }
        if self.mode == CurrentMode::Bike && self.speed_kmh() > MAX_BIKE_SPEED_KMH {
            return bad("bike faster than 40 km/h");
        }
        if self.access_egress_min >= MAX_ACCESS_EGRESS_MIN {
            return bad("access and egress of an hour or more");
        }
        Ok(())
    }

    /// Soft warnings for values outside the observed commuting ranges.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |name: &str, value: f64, max: f64| {
            if value > max {
                out.push(format!("{name} {value} above the observed maximum {max}"));
            }
        };
        match self.mode {
            CurrentMode::Car => {
                check("travel time", self.travel_time_min, 45.0);
                check("travel cost", self.travel_cost_eur, 9.9);
                check("access and egress", self.access_egress_min, 48.0);
                check("congestion delay", self.congestion_delay_min, 30.0);
                check("parking search", self.parking_search_min, 20.0);
                check("parking fee", self.parking_fee_eur, 20.0);
            }
            CurrentMode::Bike => {
                check("travel time", self.travel_time_min, 45.0);
                check("parking search", self.parking_search_min, 10.0);
            }
            _ => {}
        }
        out
    }

    fn status_quo_bundle(&self) -> AttributeBundle {
        AttributeBundle {
            travel_time_min: self.travel_time_min,
            travel_cost_eur: self.travel_cost_eur,
            access_egress_time_min: self.access_egress_min,
            congestion_chance: self.congestion_chance,
            congestion_delay: if self.congestion_chance == 0.0 {
                0.0
            } else {
                self.congestion_delay_min
            },
            parking_search_time_min: self.parking_search_min,
            parking_fee_eur: self.parking_fee_eur,
        }
    }
}

fn scaled(reference: f64, multipliers: [f64; 3]) -> [f64; 3] {
    multipliers.map(|m| reference * m)
}

/// Factors of the commuting experiment for `reference`. Car users keep
/// their own travel time and congestion on the shared EV.
pub fn commuting_plan(reference: &ReferenceTrip) -> Result<DesignPlan> {
    use levels::*;
    reference.validate()?;
    let sev_reference = reference.distance_km / SEV_REFERENCE_KMH * 60.0;
    let seb_reference = reference.distance_km / SEB_REFERENCE_KMH * 60.0;
    let mut factors = vec![
        Factor::new("sev_access", COMMUTE_ACCESS_MIN),
        Factor::new("seb_access", COMMUTE_ACCESS_MIN),
    ];
    if reference.mode != CurrentMode::Car {
        factors.push(Factor::new("sev_time", scaled(sev_reference, REFERENCE_MULTIPLIERS)));
    }
    factors.push(Factor::new("seb_time", scaled(seb_reference, REFERENCE_MULTIPLIERS)));
    factors.push(Factor::new("sev_tariff", SEV_TARIFF_EUR_PER_MIN));
    factors.push(Factor::new("seb_fee", SEB_FEE_COMMUTE_EUR));
    if reference.mode != CurrentMode::Car {
        factors.push(Factor::new("congestion_chance", CONGESTION_CHANCE));
        factors.push(Factor::new("congestion_delay", CONGESTION_DELAY));
    }
    DesignPlan::new(factors)
}

/// Congestion pair with the delay dropped when the chance is zero.
fn congestion(chance: f64, delay: f64) -> (f64, f64) {
    if chance == 0.0 {
        (0.0, 0.0)
    } else {
        (chance, delay)
    }
}

/// The 27 commuting tasks of one respondent; task ids are run indices.
pub fn build_commuting_tasks(reference: &ReferenceTrip) -> Result<Vec<TaskObservation>> {
    let plan = commuting_plan(reference)?;
    let status_quo = reference.status_quo_bundle();
    let context = TripContext {
        purpose: TripPurpose::Commute,
        distance_km: reference.distance_km,
    };
    (0..N_RUNS)
        .map(|run| {
            let v = |name: &str| plan.value(run, name);
            let is_car = reference.mode == CurrentMode::Car;
            let sev_time = if is_car {
                reference.travel_time_min
            } else {
                v("sev_time")?
            };
            let (chance, delay) = if is_car {
                (status_quo.congestion_chance, status_quo.congestion_delay)
            } else {
                let chance = v("congestion_chance")?;
                congestion(chance, v("congestion_delay")? * sev_time)
            };
            let sev = AttributeBundle {
                travel_time_min: sev_time,
                travel_cost_eur: v("sev_tariff")? * sev_time,
                access_egress_time_min: v("sev_access")?,
                congestion_chance: chance,
                congestion_delay: delay,
                ..AttributeBundle::default()
            };
            let seb = AttributeBundle {
                travel_time_min: v("seb_time")?,
                travel_cost_eur: v("seb_fee")?,
                access_egress_time_min: v("seb_access")?,
                ..AttributeBundle::default()
            };
            Ok(TaskObservation {
                task_id: run as u32,
                context,
                current_mode: reference.mode,
                status_quo_mode: reference.mode,
                attributes: [status_quo, sev, seb],
                available: [true; 3],
                chosen: None,
            })
        })
        .collect()
}

/// Index of a (distance, purpose) cell of the non-commuting experiment,
/// distance major.
pub fn non_commute_cell_index(distance_km: f64, purpose: TripPurpose) -> Result<usize> {
    let d = NON_COMMUTE_DISTANCES_KM
        .iter()
        .position(|x| (x - distance_km).abs() < 1e-9)
        .ok_or_else(|| Error::Design(format!("no non-commuting cell at {distance_km} km")))?;
    let p = NON_COMMUTE_PURPOSES
        .iter()
        .position(|x| *x == purpose)
        .ok_or_else(|| Error::Design(format!("no non-commuting cell for {purpose} trips")))?;
    Ok(d * NON_COMMUTE_PURPOSES.len() + p)
}

pub fn non_commute_cell(index: usize) -> Option<TripContext> {
    let n = NON_COMMUTE_PURPOSES.len();
    Some(TripContext {
        distance_km: *NON_COMMUTE_DISTANCES_KM.get(index / n)?,
        purpose: NON_COMMUTE_PURPOSES[index % n],
    })
}

pub const N_NON_COMMUTE_CELLS: usize = 6;

/// Factors of the non-commuting experiment: eight shared-mode factors
/// followed by the current mode's own factors.
pub fn noncommuting_plan(distance_km: f64, mode: CurrentMode) -> Result<DesignPlan> {
    use levels::*;
    if mode == CurrentMode::Walk && distance_km > 5.0 {
        return Err(Error::UndefinedCell { mode, distance_km });
    }
    let d = distance_km;
    let mut factors = vec![
        Factor::new("sev_access", ehub_access(d)?),
        Factor::new("seb_access", ehub_access(d)?),
        Factor::new("sev_time", sev_time(d)?),
        Factor::new("seb_time", seb_time(d)?),
        Factor::new("sev_tariff", SEV_TARIFF_EUR_PER_MIN),
        Factor::new("seb_fee", SEB_FEE_EUR),
        Factor::new("congestion_chance", CONGESTION_CHANCE),
        Factor::new("congestion_delay", CONGESTION_DELAY),
    ];
    match mode {
        CurrentMode::Car => {
            factors.push(Factor::new("car_egress", egress(d)?));
            factors.push(Factor::new("car_cost_per_km", CAR_COST_EUR_PER_KM));
            factors.push(Factor::new("car_parking_search", PARKING_SEARCH_MIN));
            factors.push(Factor::new("car_parking_fee", PARKING_FEE_EUR));
        }
        CurrentMode::PublicTransport => {
            factors.push(Factor::new("pt_egress", egress(d)?));
            factors.push(Factor::new("pt_time", pt_time(d)?));
            factors.push(Factor::new("pt_cost", pt_cost(d)?));
        }
        CurrentMode::Bike => {
            factors.push(Factor::new("bike_time", bike_time(d)?));
            factors.push(Factor::new("bike_parking_search", PARKING_SEARCH_MIN));
        }
        CurrentMode::Walk => {
            factors.push(Factor::new("walk_time", walk_time(d)?));
        }
    }
    DesignPlan::new(factors)
}

/// The 27 tasks of one (distance, purpose, current mode) battery. Task ids
/// are `cell_index * 27 + run`.
pub fn build_noncommuting_tasks(
    distance_km: f64,
    purpose: TripPurpose,
    mode: CurrentMode,
) -> Result<Vec<TaskObservation>> {
    let cell = non_commute_cell_index(distance_km, purpose)?;
    let plan = noncommuting_plan(distance_km, mode)?;
    let context = TripContext {
        purpose,
        distance_km,
    };
    (0..N_RUNS)
        .map(|run| {
            let v = |name: &str| plan.value(run, name);
            let sev_time = v("sev_time")?;
            let (chance, delay) = congestion(v("congestion_chance")?, v("congestion_delay")?);
            let sev = AttributeBundle {
                travel_time_min: sev_time,
                travel_cost_eur: v("sev_tariff")? * sev_time,
                access_egress_time_min: v("sev_access")?,
                congestion_chance: chance,
                congestion_delay: delay,
                ..AttributeBundle::default()
            };
            let seb = AttributeBundle {
                travel_time_min: v("seb_time")?,
                travel_cost_eur: v("seb_fee")?,
                access_egress_time_min: v("seb_access")?,
                ..AttributeBundle::default()
            };
            let status_quo = match mode {
                CurrentMode::Car => AttributeBundle {
                    travel_time_min: sev_time,
                    travel_cost_eur: v("car_cost_per_km")? * distance_km,
                    access_egress_time_min: v("car_egress")?,
                    congestion_chance: chance,
                    congestion_delay: delay,
                    parking_search_time_min: v("car_parking_search")?,
                    parking_fee_eur: v("car_parking_fee")?,
                },
                CurrentMode::PublicTransport => AttributeBundle {
                    travel_time_min: v("pt_time")?,
                    travel_cost_eur: v("pt_cost")?,
                    access_egress_time_min: v("pt_egress")?,
                    ..AttributeBundle::default()
                },
                CurrentMode::Bike => AttributeBundle {
                    travel_time_min: v("bike_time")?,
                    parking_search_time_min: v("bike_parking_search")?,
                    ..AttributeBundle::default()
                },
                CurrentMode::Walk => AttributeBundle {
                    travel_time_min: v("walk_time")?,
                    ..AttributeBundle::default()
                },
            };
            Ok(TaskObservation {
                task_id: (cell * N_RUNS + run) as u32,
                context,
                current_mode: mode,
                status_quo_mode: mode,
                attributes: [status_quo, sev, seb],
                available: [true; 3],
                chosen: None,
            })
        })
        .collect()
}

/// One assigned task: the battery cell (non-commuting only) and the run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSlot {
    pub cell: Option<usize>,
    pub run: usize,
}

/// Six tasks for one respondent: commuting draws six distinct runs,
/// non-commuting draws one run in each (distance, purpose) cell.
pub fn assign_tasks_with<R: Rng>(kind: DatasetKind, rng: &mut R) -> Vec<TaskSlot> {
    match kind {
        DatasetKind::Commute => {
            let mut runs = sample(rng, N_RUNS, TASKS_PER_RESPONDENT).into_vec();
            runs.sort_unstable();
            runs.into_iter().map(|run| TaskSlot { cell: None, run }).collect()
        }
        DatasetKind::NonCommute => (0..N_NON_COMMUTE_CELLS)
            .map(|cell| TaskSlot {
                cell: Some(cell),
                run: rng.random_range(0..N_RUNS),
            })
            .collect(),
    }
}

/// Deterministic assignment for `respondent` under `seed`.
pub fn assign_tasks(kind: DatasetKind, seed: u64, respondent: u64) -> Vec<TaskSlot> {
    assign_tasks_with(kind, &mut substream(seed, respondent))
}

/// Long design file: `task_id,alternative,attribute,value`.
pub fn write_design_csv<W: Write>(tasks: &[TaskObservation], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["task_id", "alternative", "attribute", "value"])?;
    for task in tasks {
        for alt in AlternativeId::ALL {
            let bundle = task.attributes_of(*alt);
            for (name, value) in AttributeBundle::FIELDS.iter().zip(bundle.values()) {
                w.write_record([
                    task.task_id.to_string(),
                    alt.to_string(),
                    name.to_string(),
                    value.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
