//! Synthetic respondents, reference trips and choices generated from known
//! parameters.
//!
//! Every random quantity comes from a per-respondent stream selected by the
//! respondent id, with separate domains for demographics, trips, task
//! assignment and choices. Output is therefore independent of generation
//! order and thread count.

use rand::Rng;
use rand_distr::{Open01, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::designer::{
    assign_tasks_with, build_commuting_tasks, build_noncommuting_tasks, non_commute_cell,
    ReferenceTrip, N_NON_COMMUTE_CELLS, NON_COMMUTE_DISTANCES_KM,
};
use crate::draws::domain_substream;
use crate::error::{Error, Result};
use crate::model::{
    utility_rows, AgeGroup, AlternativeId, ChoiceDataset, CurrentMode, DatasetKind,
    Demographics, IncomeBand, ModelSpec, ParameterVector, Persona, Respondent, TaskObservation,
};

const DOMAIN_PERSONS: u64 = 1;
const DOMAIN_TRIPS: u64 = 2;
const DOMAIN_ASSIGNMENT: u64 = 3;
const DOMAIN_CHOICES: u64 = 4;

/// Share of one reported current mode; no mode means a mode outside the
/// model (car passenger, taxi, shared modes and so on).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeShare {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<CurrentMode>,
    pub share: f64,
}

impl ModeShare {
    fn new(mode: Option<CurrentMode>, share: f64) -> Self {
        Self { mode, share }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weighted<T> {
    pub value: T,
    pub share: f64,
}

fn weighted<T>(pairs: &[(T, f64)]) -> Vec<Weighted<T>>
where
    T: Copy,
{
    pairs
        .iter()
        .map(|&(value, share)| Weighted { value, share })
        .collect()
}

/// Independent marginal distributions of the synthetic population.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationMarginals {
    pub age: Vec<Weighted<AgeGroup>>,
    pub higher_education: f64,
    pub income: Vec<Weighted<IncomeBand>>,
    pub has_children: f64,
    pub commute_modes: Vec<ModeShare>,
    /// One distribution per non-commuting trip distance (2, 5, 10 km).
    pub non_commute_modes: Vec<Vec<ModeShare>>,
}

impl PopulationMarginals {
    /// Shares of the survey sample. Modes outside the model keep their mass
    /// as "other", so these are the raw current-mode shares.
    pub fn survey_sample() -> Self {
        use CurrentMode::*;
        let m = |mode, share: f64| ModeShare::new(Some(mode), share / 100.0);
        let other = |modelled: &[ModeShare]| {
            ModeShare::new(None, 1.0 - modelled.iter().map(|s| s.share).sum::<f64>())
        };
        let with_other = |mut v: Vec<ModeShare>| {
            let o = other(&v);
            v.push(o);
            v
        };
        Self {
            age: weighted(&[
                (AgeGroup::UpTo35, 0.434),
                (AgeGroup::From36To59, 0.416),
                (AgeGroup::From60, 0.150),
            ]),
            higher_education: 0.605,
            income: weighted(&[
                (IncomeBand::Low, 0.410),
                (IncomeBand::Middle, 0.327),
                (IncomeBand::High, 0.135),
                (IncomeBand::Missing, 0.128),
            ]),
            has_children: 0.361,
            commute_modes: with_other(vec![m(Car, 38.4), m(Bike, 33.3)]),
            non_commute_modes: vec![
                with_other(vec![m(Car, 16.2), m(PublicTransport, 5.7), m(Walk, 35.0), m(Bike, 27.8)]),
                with_other(vec![m(Car, 28.6), m(PublicTransport, 11.3), m(Walk, 7.7), m(Bike, 31.5)]),
                with_other(vec![m(Car, 48.0), m(PublicTransport, 17.2), m(Bike, 12.0)]),
            ],
        }
    }

    /// Mode shares renormalized over the modelled modes, so every synthetic
    /// respondent answers every task.
    pub fn restricted_to_modeled(&self) -> Self {
        let restrict = |shares: &[ModeShare]| {
            let total: f64 = shares.iter().filter(|s| s.mode.is_some()).map(|s| s.share).sum();
            shares
                .iter()
                .filter(|s| s.mode.is_some())
                .map(|s| ModeShare::new(s.mode, s.share / total))
                .collect()
        };
        Self {
            commute_modes: restrict(&self.commute_modes),
            non_commute_modes: self.non_commute_modes.iter().map(|v| restrict(v)).collect(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sums_to_one = |what: &str, shares: &mut dyn Iterator<Item = f64>| -> Result<()> {
            let mut total = 0.0;
            for s in shares {
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::Marginals(format!("{what}: share {s} outside [0, 1]")));
                }
                total += s;
            }
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Marginals(format!("{what}: shares sum to {total}")));
            }
            Ok(())
        };
        sums_to_one("age", &mut self.age.iter().map(|w| w.share))?;
        sums_to_one("income", &mut self.income.iter().map(|w| w.share))?;
        for (what, p) in [
            ("higher education", self.higher_education),
            ("children", self.has_children),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Marginals(format!("{what}: probability {p} outside [0, 1]")));
            }
        }
        sums_to_one("commute modes", &mut self.commute_modes.iter().map(|s| s.share))?;
        if self
            .commute_modes
            .iter()
            .any(|s| matches!(s.mode, Some(CurrentMode::PublicTransport | CurrentMode::Walk)))
        {
            return Err(Error::Marginals("commuting covers car and bike users only".into()));
        }
        if self.non_commute_modes.len() != NON_COMMUTE_DISTANCES_KM.len() {
            return Err(Error::Marginals(format!(
                "expected {} non-commuting mode distributions, found {}",
                NON_COMMUTE_DISTANCES_KM.len(),
                self.non_commute_modes.len()
            )));
        }
        for (d, shares) in NON_COMMUTE_DISTANCES_KM.iter().zip(&self.non_commute_modes) {
            sums_to_one(&format!("{d} km modes"), &mut shares.iter().map(|s| s.share))?;
            if *d > 5.0 && shares.iter().any(|s| s.mode == Some(CurrentMode::Walk) && s.share > 0.0)
            {
                return Err(Error::Marginals("walking is not modelled at 10 km".into()));
            }
        }
        Ok(())
    }
}

fn pick<T: Copy>(rng: &mut impl Rng, items: &[T], share: impl Fn(&T) -> f64) -> T {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for item in items {
        acc += share(item);
        if u < acc {
            return *item;
        }
    }
    // Rounding slack: the last category with positive mass.
    *items
        .iter()
        .rev()
        .find(|i| share(i) > 0.0)
        .unwrap_or(&items[items.len() - 1])
}

/// One synthetic person with a current mode per trip context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPerson {
    pub id: u64,
    pub demographics: Demographics,
    pub commute_mode: Option<CurrentMode>,
    /// Indexed like the non-commuting distances.
    pub non_commute_modes: Vec<Option<CurrentMode>>,
}

/// `n` independent persons with ids `1..=n`.
pub fn sample_population(
    n: usize,
    marginals: &PopulationMarginals,
    seed: u64,
) -> Result<Vec<SyntheticPerson>> {
    if n == 0 {
        return Err(Error::ZeroCount("population size"));
    }
    marginals.validate()?;
    Ok((1..=n as u64)
        .into_par_iter()
        .map(|id| {
            let mut rng = domain_substream(seed, DOMAIN_PERSONS, id);
            let demographics = Demographics {
                age_group: pick(&mut rng, &marginals.age, |w| w.share).value,
                higher_education: rng.random::<f64>() < marginals.higher_education,
                income_band: pick(&mut rng, &marginals.income, |w| w.share).value,
                has_children: rng.random::<f64>() < marginals.has_children,
            };
            let commute_mode = pick(&mut rng, &marginals.commute_modes, |s| s.share).mode;
            let non_commute_modes = marginals
                .non_commute_modes
                .iter()
                .map(|shares| pick(&mut rng, shares, |s| s.share).mode)
                .collect();
            SyntheticPerson {
                id,
                demographics,
                commute_mode,
                non_commute_modes,
            }
        })
        .collect())
}

/// Piecewise-uniform draw through (min, 25%, 50%, 75%, max).
fn quartile_draw(rng: &mut impl Rng, q: [f64; 5]) -> f64 {
    let segment = rng.random_range(0..4);
    let u: f64 = rng.random();
    q[segment] + u * (q[segment + 1] - q[segment])
}

const CAR_TIME: [f64; 5] = [1.0, 10.0, 12.0, 15.0, 45.0];
const CAR_COST: [f64; 5] = [0.0, 0.3, 0.6, 1.3, 9.9];
const CAR_ACCESS: [f64; 5] = [0.0, 3.0, 5.0, 11.0, 48.0];
const CAR_CONGESTION_PCT: [f64; 5] = [0.0, 10.0, 20.0, 50.0, 100.0];
const CAR_CONGESTION_MIN: [f64; 5] = [0.0, 1.0, 5.0, 11.0, 30.0];
const CAR_PARKING_SEARCH: [f64; 5] = [0.0, 1.0, 2.0, 6.0, 20.0];
const CAR_PARKING_FEE: [f64; 5] = [0.0, 0.0, 3.0, 8.0, 20.0];
const BIKE_TIME: [f64; 5] = [4.0, 13.0, 20.0, 25.0, 45.0];
const BIKE_PARKING_SEARCH: [f64; 5] = [0.0, 0.0, 1.0, 2.0, 10.0];

/// Door-to-door speeds used to turn a sampled time into a distance.
const CAR_SPEED_KMH: (f64, f64) = (15.0, 35.0);
const BIKE_SPEED_KMH: (f64, f64) = (12.0, 20.0);
const MAX_COMMUTE_KM: f64 = 10.0;
const MIN_COMMUTE_KM: f64 = 0.5;
const MAX_TRIP_RETRIES: usize = 1000;

pub fn sample_reference_trip_with(mode: CurrentMode, rng: &mut impl Rng) -> Result<ReferenceTrip> {
    for _ in 0..MAX_TRIP_RETRIES {
        let trip = match mode {
            CurrentMode::Car => {
                let time = quartile_draw(rng, CAR_TIME);
                let speed = rng.random_range(CAR_SPEED_KMH.0..CAR_SPEED_KMH.1);
                let chance = quartile_draw(rng, CAR_CONGESTION_PCT) / 100.0;
                let delay = quartile_draw(rng, CAR_CONGESTION_MIN);
                ReferenceTrip {
                    distance_km: (time * speed / 60.0).clamp(MIN_COMMUTE_KM, MAX_COMMUTE_KM),
                    mode,
                    travel_time_min: time,
                    travel_cost_eur: quartile_draw(rng, CAR_COST),
                    access_egress_min: quartile_draw(rng, CAR_ACCESS),
                    congestion_chance: chance,
                    congestion_delay_min: if chance == 0.0 { 0.0 } else { delay },
                    parking_search_min: quartile_draw(rng, CAR_PARKING_SEARCH),
                    parking_fee_eur: quartile_draw(rng, CAR_PARKING_FEE),
                }
            }
            CurrentMode::Bike => {
                let time = quartile_draw(rng, BIKE_TIME);
                let speed = rng.random_range(BIKE_SPEED_KMH.0..BIKE_SPEED_KMH.1);
                ReferenceTrip {
                    distance_km: (time * speed / 60.0).clamp(MIN_COMMUTE_KM, MAX_COMMUTE_KM),
                    mode,
                    travel_time_min: time,
                    travel_cost_eur: 0.0,
                    access_egress_min: 0.0,
                    congestion_chance: 0.0,
                    congestion_delay_min: 0.0,
                    parking_search_min: quartile_draw(rng, BIKE_PARKING_SEARCH),
                    parking_fee_eur: 0.0,
                }
            }
            other => {
                return Err(Error::Design(format!(
                    "commuting reference trips exist for car and bike users, not {other}"
                )))
            }
        };
        if trip.validate().is_ok() {
            return Ok(trip);
        }
    }
    Err(Error::Design(format!(
        "no plausible {mode} reference trip after {MAX_TRIP_RETRIES} draws"
    )))
}

/// Reference commute for a car or bike user, reproducible by `seed`.
pub fn sample_reference_trip(mode: CurrentMode, seed: u64) -> Result<ReferenceTrip> {
    sample_reference_trip_with(mode, &mut domain_substream(seed, DOMAIN_TRIPS, 0))
}

fn persona(person: &SyntheticPerson, mode: CurrentMode) -> Persona {
    Persona {
        demographics: person.demographics,
        current_mode: mode,
    }
}

/// Unanswered non-commuting panel: one task per (distance, purpose) cell in
/// which the person uses a modelled mode. Persons without any such cell are
/// left out.
pub fn build_non_commute_panel(people: &[SyntheticPerson], seed: u64) -> Result<ChoiceDataset> {
    // Batteries by cell and mode.
    let mut batteries: Vec<Vec<Option<Vec<TaskObservation>>>> = Vec::new();
    for cell in 0..N_NON_COMMUTE_CELLS {
        let ctx = non_commute_cell(cell).expect("cell index in range");
        let per_mode = CurrentMode::ALL
            .iter()
            .map(|&mode| build_noncommuting_tasks(ctx.distance_km, ctx.purpose, mode).ok())
            .collect();
        batteries.push(per_mode);
    }
    let respondents = people
        .par_iter()
        .map(|person| -> Result<Option<Respondent>> {
            let mut rng = domain_substream(seed, DOMAIN_ASSIGNMENT, person.id);
            let slots = assign_tasks_with(DatasetKind::NonCommute, &mut rng);
            let mut tasks = Vec::new();
            for slot in slots {
                let cell = slot.cell.expect("non-commuting slots carry a cell");
                let distance_index = cell / 2;
                let Some(mode) = person.non_commute_modes.get(distance_index).copied().flatten()
                else {
                    continue;
                };
                let battery = batteries[cell][mode_index(mode)].as_ref().ok_or_else(|| {
                    Error::UndefinedCell {
                        mode,
                        distance_km: NON_COMMUTE_DISTANCES_KM[distance_index],
                    }
                })?;
                tasks.push(battery[slot.run].clone());
            }
            if tasks.is_empty() {
                return Ok(None);
            }
            let first_mode = tasks[0].current_mode;
            Ok(Some(Respondent {
                id: person.id,
                persona: persona(person, first_mode),
                tasks,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChoiceDataset {
        kind: DatasetKind::NonCommute,
        respondents: respondents.into_iter().flatten().collect(),
    })
}

fn mode_index(mode: CurrentMode) -> usize {
    CurrentMode::ALL
        .iter()
        .position(|m| *m == mode)
        .expect("mode listed in ALL")
}

/// Unanswered commuting panel: a sampled reference trip and six of its 27
/// tasks for every car or bike commuter.
pub fn build_commute_panel(people: &[SyntheticPerson], seed: u64) -> Result<ChoiceDataset> {
    let respondents = people
        .par_iter()
        .filter_map(|person| {
            let mode = person.commute_mode?;
            Some((person, mode))
        })
        .map(|(person, mode)| -> Result<Respondent> {
            let mut trip_rng = domain_substream(seed, DOMAIN_TRIPS, person.id);
            let trip = sample_reference_trip_with(mode, &mut trip_rng)?;
            let battery = build_commuting_tasks(&trip)?;
            let mut rng = domain_substream(seed, DOMAIN_ASSIGNMENT, person.id);
            let tasks = assign_tasks_with(DatasetKind::Commute, &mut rng)
                .into_iter()
                .map(|slot| battery[slot.run].clone())
                .collect();
            Ok(Respondent {
                id: person.id,
                persona: persona(person, mode),
                tasks,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChoiceDataset {
        kind: DatasetKind::Commute,
        respondents,
    })
}

/// Unanswered panel of the given kind.
pub fn build_panel(kind: DatasetKind, people: &[SyntheticPerson], seed: u64) -> Result<ChoiceDataset> {
    match kind {
        DatasetKind::Commute => build_commute_panel(people, seed),
        DatasetKind::NonCommute => build_non_commute_panel(people, seed),
    }
}

/// Standard Gumbel variate by inverse transform.
pub fn gumbel(rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.sample(Open01);
    -(-u.ln()).ln()
}

/// Answers every task of `panel` by utility maximization: error components
/// drawn once per respondent, independent Gumbel noise per task and
/// alternative.
pub fn simulate_choices(
    spec: &ModelSpec,
    true_params: &ParameterVector,
    panel: &ChoiceDataset,
    seed: u64,
) -> Result<ChoiceDataset> {
    if panel.kind != spec.kind {
        return Err(Error::Dataset(format!(
            "a {} panel cannot be answered with the {} specification",
            panel.kind, spec.kind
        )));
    }
    panel.validate()?;
    let theta = true_params.aligned_to(spec)?.values();
    let components: Vec<(f64, Vec<AlternativeId>)> = spec
        .error_components
        .iter()
        .map(|c| {
            let i = spec
                .coefficient_index(&c.coefficient)
                .ok_or_else(|| Error::UnknownCoefficient(c.coefficient.clone()))?;
            Ok((theta[i].abs(), c.loads_on.clone()))
        })
        .collect::<Result<_>>()?;
    let respondents = panel
        .respondents
        .par_iter()
        .map(|respondent| -> Result<Respondent> {
            let mut rng = domain_substream(seed, DOMAIN_CHOICES, respondent.id);
            let mut offset = [0.0; 3];
            for (sigma, loads_on) in &components {
                let z: f64 = rng.sample(StandardNormal);
                for alt in loads_on {
                    offset[alt.index()] += sigma * z;
                }
            }
            let mut out = respondent.clone();
            for task in &mut out.tasks {
                let persona = respondent.persona_for(task);
                let mut best: Option<(f64, AlternativeId)> = None;
                for &alt in AlternativeId::ALL {
                    let noise = gumbel(&mut rng);
                    if !task.is_available(alt) {
                        continue;
                    }
                    let v: f64 = utility_rows(alt, task, &persona, spec)?
                        .iter()
                        .map(|&(i, x)| theta[i] * x)
                        .sum();
                    let u = v + offset[alt.index()] + noise;
                    if best.is_none_or(|(b, _)| u > b) {
                        best = Some((u, alt));
                    }
                }
                task.chosen = Some(best.ok_or(Error::NoAvailableAlternative)?.1);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChoiceDataset {
        kind: panel.kind,
        respondents,
    })
}

/// Population, panel and choices in one call.
pub fn synthesize_dataset(
    spec: &ModelSpec,
    true_params: &ParameterVector,
    n: usize,
    marginals: &PopulationMarginals,
    seed: u64,
) -> Result<ChoiceDataset> {
    let people = sample_population(n, marginals, seed)?;
    let panel = build_panel(spec.kind, &people, seed)?;
    simulate_choices(spec, true_params, &panel, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_marginals_are_valid() {
        let m = PopulationMarginals::survey_sample();
        m.validate().unwrap();
        m.restricted_to_modeled().validate().unwrap();
        let other = m.non_commute_modes[1].iter().find(|s| s.mode.is_none()).unwrap();
        assert!((other.share - 0.209).abs() < 1e-9);
    }

    #[test]
    fn malformed_marginals_rejected() {
        let mut m = PopulationMarginals::survey_sample();
        m.age[0].share = 0.5;
        assert!(matches!(m.validate(), Err(Error::Marginals(_))));
        let mut m = PopulationMarginals::survey_sample();
        m.non_commute_modes.pop();
        assert!(m.validate().is_err());
        assert!(sample_population(0, &PopulationMarginals::survey_sample(), 1).is_err());
    }

    #[test]
    fn quartile_draws_stay_in_range() {
        let mut rng = domain_substream(1, 0, 0);
        for _ in 0..1000 {
            let x = quartile_draw(&mut rng, BIKE_PARKING_SEARCH);
            assert!((0.0..=10.0).contains(&x));
        }
    }

    #[test]
    fn gumbel_mean_is_euler_gamma() {
        let mut rng = domain_substream(3, 0, 0);
        let n = 200_000;
        let mean = (0..n).map(|_| gumbel(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.577_215_664_9).abs() < 0.01, "{mean}");
    }
}
