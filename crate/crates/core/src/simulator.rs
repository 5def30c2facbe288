//! Forward scenario simulation: choice shares for a persona facing fixed
//! attributes, substitution grids across current modes and distances, and
//! policy deltas under common random numbers.

use std::fmt::Write as _;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::designer::levels;
use crate::draws::{domain_substream, mlhs_normal_keyed};
use crate::error::{Error, Result};
use crate::likelihood::task_choice_prob;
use crate::model::{
    utility_rows, AgeGroup, AlternativeId, AttributeBundle, CurrentMode, DatasetKind,
    Demographics, IncomeBand, ModelSpec, ParameterVector, Persona, TaskObservation, TripContext,
    TripPurpose,
};

pub const DEFAULT_SIM_DRAWS: usize = 100_000;
const DOMAIN_CELLS: u64 = 11;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDefinition {
    pub persona: Persona,
    pub context: TripContext,
    /// Status quo, shared EV, shared e-bike.
    pub attributes: [AttributeBundle; 3],
    pub n_draws: usize,
    pub seed: u64,
}

/// Attribute fields that carry meaning for `alt` when the status quo is
/// `mode`; overrides of other fields are rejected.
pub fn applicable_fields(alt: AlternativeId, mode: CurrentMode) -> &'static [&'static str] {
    match (alt, mode) {
        (AlternativeId::SharedEv, _) => &[
            "travel_time_min",
            "travel_cost_eur",
            "access_egress_time_min",
            "congestion_chance",
            "congestion_delay",
        ],
        (AlternativeId::SharedEbike, _) => {
            &["travel_time_min", "travel_cost_eur", "access_egress_time_min"]
        }
        (AlternativeId::StatusQuo, CurrentMode::Car) => &AttributeBundle::FIELDS,
        (AlternativeId::StatusQuo, CurrentMode::PublicTransport) => {
            &["travel_time_min", "travel_cost_eur", "access_egress_time_min"]
        }
        (AlternativeId::StatusQuo, CurrentMode::Bike) => {
            &["travel_time_min", "parking_search_time_min"]
        }
        (AlternativeId::StatusQuo, CurrentMode::Walk) => &["travel_time_min"],
    }
}

/// One attribute change of a policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOverride {
    pub alternative: AlternativeId,
    pub field: String,
    pub value: f64,
}

impl ScenarioDefinition {
    pub fn kind(&self) -> DatasetKind {
        self.context.kind()
    }

    pub fn validate(&self) -> Result<()> {
        self.context.validate(self.kind())?;
        check_cell(self.kind(), self.persona.current_mode, self.context.distance_km)?;
        if self.n_draws == 0 {
            return Err(Error::ZeroCount("n_draws"));
        }
        for alt in AlternativeId::ALL {
            let bundle = &self.attributes[alt.index()];
            bundle.validate(*alt)?;
            let allowed = applicable_fields(*alt, self.persona.current_mode);
            for (name, value) in AttributeBundle::FIELDS.iter().zip(bundle.values()) {
                if value != 0.0 && !allowed.contains(name) {
                    return Err(Error::Scenario(format!(
                        "{name} does not apply to the {alt} alternative of a {} user",
                        self.persona.current_mode
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn with_override(&self, o: &ScenarioOverride) -> Result<Self> {
        let allowed = applicable_fields(o.alternative, self.persona.current_mode);
        if !allowed.contains(&o.field.as_str()) {
            return Err(Error::Scenario(format!(
                "{} does not apply to the {} alternative of a {} user",
                o.field, o.alternative, self.persona.current_mode
            )));
        }
        let mut out = self.clone();
        *out.attributes[o.alternative.index()].field_mut(&o.field)? = o.value;
        out.validate()?;
        Ok(out)
    }

    fn observation(&self) -> TaskObservation {
        TaskObservation {
            task_id: 0,
            context: self.context,
            current_mode: self.persona.current_mode,
            status_quo_mode: self.persona.current_mode,
            attributes: self.attributes,
            available: [true; 3],
            chosen: None,
        }
    }
}

/// Rejects (mode, distance) pairs that have no scenario: walking 10 km,
/// commuting by public transport or on foot, and 10 km bike commutes.
pub fn check_cell(kind: DatasetKind, mode: CurrentMode, distance_km: f64) -> Result<()> {
    let undefined = match kind {
        DatasetKind::NonCommute => mode == CurrentMode::Walk && distance_km > 5.0,
        DatasetKind::Commute => match mode {
            CurrentMode::Car => false,
            CurrentMode::Bike => distance_km > 5.0,
            CurrentMode::PublicTransport | CurrentMode::Walk => true,
        },
    };
    if undefined {
        Err(Error::UndefinedCell { mode, distance_km })
    } else {
        Ok(())
    }
}

/// Persona of the reference simulations: up to 35, higher education, no
/// children, middle income.
pub fn reference_demographics() -> Demographics {
    Demographics {
        age_group: AgeGroup::UpTo35,
        higher_education: true,
        income_band: IncomeBand::Middle,
        has_children: false,
    }
}

fn middle(levels: [f64; 3]) -> f64 {
    levels[1]
}

/// Middle-level attributes for a trip of `distance_km` (2, 5 or 10 km),
/// with zero congestion, 5 minutes of car parking search (bike: 5 minutes
/// for non-commuting trips, none for commuting) and a 3 euro parking fee.
pub fn base_attributes(
    kind: DatasetKind,
    mode: CurrentMode,
    distance_km: f64,
) -> Result<[AttributeBundle; 3]> {
    check_cell(kind, mode, distance_km)?;
    let d = distance_km;
    let sev_time = middle(levels::sev_time(d)?);
    let access = middle(levels::ehub_access(d)?);
    let sev = AttributeBundle {
        travel_time_min: sev_time,
        travel_cost_eur: middle(levels::SEV_TARIFF_EUR_PER_MIN) * sev_time,
        access_egress_time_min: access,
        ..AttributeBundle::default()
    };
    let seb = AttributeBundle {
        travel_time_min: middle(levels::seb_time(d)?),
        travel_cost_eur: middle(levels::SEB_FEE_EUR),
        access_egress_time_min: access,
        ..AttributeBundle::default()
    };
    let status_quo = match mode {
        CurrentMode::Car => AttributeBundle {
            travel_time_min: sev_time,
            travel_cost_eur: middle(levels::CAR_COST_EUR_PER_KM) * d,
            access_egress_time_min: middle(levels::egress(d)?),
            parking_search_time_min: middle(levels::PARKING_SEARCH_MIN),
            parking_fee_eur: middle(levels::PARKING_FEE_EUR),
            ..AttributeBundle::default()
        },
        CurrentMode::PublicTransport => AttributeBundle {
            travel_time_min: middle(levels::pt_time(d)?),
            travel_cost_eur: middle(levels::pt_cost(d)?),
            access_egress_time_min: middle(levels::egress(d)?),
            ..AttributeBundle::default()
        },
        CurrentMode::Bike => AttributeBundle {
            travel_time_min: middle(levels::bike_time(d)?),
            parking_search_time_min: match kind {
                DatasetKind::NonCommute => middle(levels::PARKING_SEARCH_MIN),
                DatasetKind::Commute => 0.0,
            },
            ..AttributeBundle::default()
        },
        CurrentMode::Walk => AttributeBundle {
            travel_time_min: middle(levels::walk_time(d)?),
            ..AttributeBundle::default()
        },
    };
    Ok([status_quo, sev, seb])
}

/// The base scenario of one grid cell.
pub fn base_scenario(
    demographics: Demographics,
    mode: CurrentMode,
    purpose: TripPurpose,
    distance_km: f64,
    n_draws: usize,
    seed: u64,
) -> Result<ScenarioDefinition> {
    let context = TripContext {
        purpose,
        distance_km,
    };
    let s = ScenarioDefinition {
        persona: Persona {
            demographics,
            current_mode: mode,
        },
        context,
        attributes: base_attributes(context.kind(), mode, distance_km)?,
        n_draws,
        seed,
    };
    s.validate()?;
    Ok(s)
}

/// Choice probabilities (fractions) averaged over `n_draws` MLHS
/// realizations of the error components.
pub fn scenario_probabilities(
    s: &ScenarioDefinition,
    params: &ParameterVector,
    spec: &ModelSpec,
) -> Result<[f64; 3]> {
    s.validate()?;
    if s.kind() != spec.kind {
        return Err(Error::Scenario(format!(
            "a {} scenario cannot be simulated with the {} specification",
            s.kind(),
            spec.kind
        )));
    }
    let theta = params.aligned_to(spec)?.values();
    let obs = s.observation();
    let mut v = [0.0; 3];
    for alt in AlternativeId::ALL {
        v[alt.index()] = utility_rows(*alt, &obs, &s.persona, spec)?
            .iter()
            .map(|&(i, x)| theta[i] * x)
            .sum();
    }
    let components: Vec<(f64, [bool; 3])> = spec
        .error_components
        .iter()
        .map(|c| {
            let i = spec
                .coefficient_index(&c.coefficient)
                .ok_or_else(|| Error::UnknownCoefficient(c.coefficient.clone()))?;
            let mut mask = [false; 3];
            for alt in &c.loads_on {
                mask[alt.index()] = true;
            }
            Ok((theta[i].abs(), mask))
        })
        .collect::<Result<_>>()?;
    if components.iter().all(|(sigma, _)| *sigma == 0.0) {
        return task_choice_prob(&v, &obs.available);
    }
    let draws = mlhs_normal_keyed(&[0], s.n_draws, components.len(), s.seed)?;
    let mut acc = [0.0; 3];
    for r in 0..s.n_draws {
        let z = draws.draw(0, r);
        let mut u = v;
        for (k, (sigma, mask)) in components.iter().enumerate() {
            for j in 0..3 {
                if mask[j] {
                    u[j] += sigma * z[k];
                }
            }
        }
        let p = task_choice_prob(&u, &obs.available)?;
        for j in 0..3 {
            acc[j] += p[j];
        }
    }
    Ok(acc.map(|a| a / s.n_draws as f64))
}

/// Shares in percent, status quo first.
pub fn scenario_shares(
    s: &ScenarioDefinition,
    params: &ParameterVector,
    spec: &ModelSpec,
) -> Result<[f64; 3]> {
    Ok(scenario_probabilities(s, params, spec)?.map(|p| 100.0 * p))
}

/// Modified minus base shares, in percentage points, under common random
/// numbers.
pub fn policy_delta(
    base: &ScenarioDefinition,
    modified: &ScenarioDefinition,
    params: &ParameterVector,
    spec: &ModelSpec,
) -> Result<[f64; 3]> {
    if base.persona != modified.persona || base.context != modified.context {
        return Err(Error::Scenario(
            "policy comparison needs the same persona and trip context".into(),
        ));
    }
    if base.seed != modified.seed || base.n_draws != modified.n_draws {
        return Err(Error::Scenario(
            "policy comparison needs the same seed and draw count".into(),
        ));
    }
    let a = scenario_shares(base, params, spec)?;
    let b = scenario_shares(modified, params, spec)?;
    Ok([b[0] - a[0], b[1] - a[1], b[2] - a[2]])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShareRow {
    pub mode: CurrentMode,
    pub distance_km: f64,
    /// Percent: status quo, shared EV, shared e-bike.
    pub shares: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub mode: CurrentMode,
    pub distance_km: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShareTable {
    pub kind: DatasetKind,
    pub rows: Vec<ShareRow>,
    pub exclusions: Vec<Exclusion>,
}

impl ShareTable {
    pub fn get(&self, mode: CurrentMode, distance_km: f64) -> Option<[f64; 3]> {
        self.rows
            .iter()
            .find(|r| r.mode == mode && (r.distance_km - distance_km).abs() < 1e-9)
            .map(|r| r.shares)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<14}{:>8}{:>12}{:>12}{:>15}",
            "Current mode", "km", "Status quo", "Shared EV", "Shared e-bike"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<14}{:>8}{:>11.1}%{:>11.1}%{:>14.1}%",
                r.mode.to_string(),
                r.distance_km,
                r.shares[0],
                r.shares[1],
                r.shares[2]
            );
        }
        if !self.exclusions.is_empty() {
            let _ = writeln!(out, "\nExcluded cells:");
            for e in &self.exclusions {
                let _ = writeln!(out, "  {} {} km: {}", e.mode, e.distance_km, e.reason);
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["current_mode", "distance_km", "status_quo", "shared_ev", "shared_ebike"])?;
        for r in &self.rows {
            w.write_record([
                r.mode.to_string(),
                r.distance_km.to_string(),
                format!("{:.1}", r.shares[0]),
                format!("{:.1}", r.shares[1]),
                format!("{:.1}", r.shares[2]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Seed of one grid cell, independent of the order in which cells run.
pub fn cell_seed(seed: u64, mode: CurrentMode, distance_km: f64) -> u64 {
    let mode_index = CurrentMode::ALL.iter().position(|m| *m == mode).unwrap_or(0) as u64;
    let key = (mode_index << 32) | (distance_km * 1000.0).round() as u64;
    domain_substream(seed, DOMAIN_CELLS, key).random()
}

/// Base-scenario shares for every (mode, distance) pair; undefined pairs
/// are listed as exclusions.
#[allow(clippy::too_many_arguments)]
pub fn substitution_table(
    demographics: Demographics,
    purpose: TripPurpose,
    modes: &[CurrentMode],
    distances_km: &[f64],
    params: &ParameterVector,
    spec: &ModelSpec,
    n_draws: usize,
    seed: u64,
) -> Result<ShareTable> {
    let kind = TripContext {
        purpose,
        distance_km: 0.0,
    }
    .kind();
    let cells: Vec<(CurrentMode, f64)> = modes
        .iter()
        .flat_map(|&m| distances_km.iter().map(move |&d| (m, d)))
        .collect();
    let results: Vec<Result<Option<ShareRow>>> = cells
        .par_iter()
        .map(|&(mode, distance_km)| {
            if check_cell(kind, mode, distance_km).is_err() {
                return Ok(None);
            }
            let s = base_scenario(
                demographics,
                mode,
                purpose,
                distance_km,
                n_draws,
                cell_seed(seed, mode, distance_km),
            )
            .map_err(|e| Error::Scenario(format!("{mode} {distance_km} km: {e}")))?;
            let shares = scenario_shares(&s, params, spec)
                .map_err(|e| Error::Scenario(format!("{mode} {distance_km} km: {e}")))?;
            Ok(Some(ShareRow {
                mode,
                distance_km,
                shares,
            }))
        })
        .collect();
    let mut rows = Vec::new();
    let mut exclusions = Vec::new();
    for ((mode, distance_km), r) in cells.into_iter().zip(results) {
        match r? {
            Some(row) => rows.push(row),
            None => exclusions.push(Exclusion {
                mode,
                distance_km,
                reason: check_cell(kind, mode, distance_km)
                    .err()
                    .map(|e| e.to_string())
                    .unwrap_or_default(),
            }),
        }
    }
    Ok(ShareTable {
        kind,
        rows,
        exclusions,
    })
}

/// A named set of attribute changes applied to the base scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub name: String,
    #[serde(default)]
    pub overrides: Vec<ScenarioOverride>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyRow {
    pub name: String,
    pub shares: [f64; 3],
    pub delta: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    pub mode: CurrentMode,
    pub distance_km: f64,
    /// Base row first.
    pub rows: Vec<PolicyRow>,
}

impl PolicyTable {
    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(6).max(6) + 2;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}{:>12}{:>12}{:>15}{:>10}{:>10}{:>10}",
            "Policy", "Status quo", "Shared EV", "Shared e-bike", "d SQ", "d SEV", "d SEB"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}{:>11.1}%{:>11.1}%{:>14.1}%{:>+10.1}{:>+10.1}{:>+10.1}",
                r.name, r.shares[0], r.shares[1], r.shares[2], r.delta[0], r.delta[1], r.delta[2]
            );
        }
        out
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "policy",
            "status_quo",
            "shared_ev",
            "shared_ebike",
            "delta_status_quo",
            "delta_shared_ev",
            "delta_shared_ebike",
        ])?;
        for r in &self.rows {
            let mut record = vec![r.name.clone()];
            record.extend(r.shares.iter().map(|v| format!("{v:.1}")));
            record.extend(r.delta.iter().map(|v| format!("{v:.1}")));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Base row plus one row per policy, all on the same draws.
pub fn policy_table(
    base: &ScenarioDefinition,
    policies: &[Policy],
    params: &ParameterVector,
    spec: &ModelSpec,
) -> Result<PolicyTable> {
    let base_shares = scenario_shares(base, params, spec)?;
    let mut rows = vec![PolicyRow {
        name: "Base".into(),
        shares: base_shares,
        delta: [0.0; 3],
    }];
    for policy in policies {
        let mut modified = base.clone();
        for o in &policy.overrides {
            modified = modified
                .with_override(o)
                .map_err(|e| Error::Scenario(format!("policy `{}`: {e}", policy.name)))?;
        }
        let shares = scenario_shares(&modified, params, spec)?;
        rows.push(PolicyRow {
            name: policy.name.clone(),
            shares,
            delta: [
                shares[0] - base_shares[0],
                shares[1] - base_shares[1],
                shares[2] - base_shares[2],
            ],
        });
    }
    Ok(PolicyTable {
        mode: base.persona.current_mode,
        distance_km: base.context.distance_km,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub modes: Vec<CurrentMode>,
    pub distances_km: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub mode: CurrentMode,
    pub distance_km: f64,
    pub policies: Vec<Policy>,
}

/// Scenario file: a persona, a trip purpose and either a substitution grid,
/// a policy comparison, or both.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub name: String,
    pub purpose: TripPurpose,
    #[serde(default)]
    pub n_draws: Option<usize>,
    pub persona: Demographics,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub policy: Option<PolicySpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutput {
    pub grid: Option<ShareTable>,
    pub policy: Option<PolicyTable>,
}

impl ScenarioFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text)?;
        if file.grid.is_none() && file.policy.is_none() {
            return Err(Error::Scenario(format!(
                "scenario `{}` defines neither a grid nor policies",
                file.name
            )));
        }
        Ok(file)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario file serializes to TOML")
    }

    pub fn kind(&self) -> DatasetKind {
        TripContext {
            purpose: self.purpose,
            distance_km: 0.0,
        }
        .kind()
    }

    /// Runs the file. `n_draws` overrides the file's draw count.
    pub fn run(
        &self,
        params: &ParameterVector,
        spec: &ModelSpec,
        seed: u64,
        n_draws: Option<usize>,
    ) -> Result<ScenarioOutput> {
        let n_draws = n_draws.or(self.n_draws).unwrap_or(DEFAULT_SIM_DRAWS);
        let grid = match &self.grid {
            Some(g) => Some(substitution_table(
                self.persona,
                self.purpose,
                &g.modes,
                &g.distances_km,
                params,
                spec,
                n_draws,
                seed,
            )?),
            None => None,
        };
        let policy = match &self.policy {
            Some(p) => {
                let base = base_scenario(
                    self.persona,
                    p.mode,
                    self.purpose,
                    p.distance_km,
                    n_draws,
                    cell_seed(seed, p.mode, p.distance_km),
                )?;
                Some(policy_table(&base, &p.policies, params, spec)?)
            }
            None => None,
        };
        Ok(ScenarioOutput { grid, policy })
    }
}

/// Bundled scenario files by name.
pub fn bundled_scenario(name: &str) -> Result<ScenarioFile> {
    let text = match name {
        "noncommute-grid" => include_str!("../assets/scenarios/noncommute-grid.toml"),
        "commute-grid" => include_str!("../assets/scenarios/commute-grid.toml"),
        "car-policies" => include_str!("../assets/scenarios/car-policies.toml"),
        other => {
            return Err(Error::Scenario(format!(
                "no bundled scenario `{other}` (available: noncommute-grid, commute-grid, car-policies)"
            )))
        }
    };
    ScenarioFile::from_toml(text)
}

pub const BUNDLED_SCENARIOS: [&str; 3] = ["noncommute-grid", "commute-grid", "car-policies"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undefined_cells() {
        assert!(check_cell(DatasetKind::NonCommute, CurrentMode::Walk, 10.0).is_err());
        assert!(check_cell(DatasetKind::NonCommute, CurrentMode::Walk, 5.0).is_ok());
        assert!(check_cell(DatasetKind::Commute, CurrentMode::Bike, 10.0).is_err());
        assert!(check_cell(DatasetKind::Commute, CurrentMode::PublicTransport, 2.0).is_err());
        assert!(check_cell(DatasetKind::Commute, CurrentMode::Car, 10.0).is_ok());
    }

    #[test]
    fn base_ledger_for_car_at_five_km() {
        let [sq, sev, seb] = base_attributes(DatasetKind::NonCommute, CurrentMode::Car, 5.0).unwrap();
        assert_eq!(sq.travel_time_min, 10.0);
        assert_eq!(sq.travel_cost_eur, 1.0);
        assert_eq!(sq.parking_search_time_min, 5.0);
        assert_eq!(sq.parking_fee_eur, 3.0);
        assert_eq!(sq.congestion_chance, 0.0);
        assert_eq!(sev.travel_time_min, 10.0);
        assert!((sev.travel_cost_eur - 2.5).abs() < 1e-12);
        assert_eq!(sev.access_egress_time_min, 10.0);
        assert_eq!(seb.travel_time_min, 12.0);
        assert_eq!(seb.travel_cost_eur, 1.0);
    }

    #[test]
    fn commuting_bikes_have_no_parking_search() {
        let [sq, _, _] = base_attributes(DatasetKind::Commute, CurrentMode::Bike, 5.0).unwrap();
        assert_eq!(sq.parking_search_time_min, 0.0);
        let [sq, _, _] = base_attributes(DatasetKind::NonCommute, CurrentMode::Bike, 5.0).unwrap();
        assert_eq!(sq.parking_search_time_min, 5.0);
    }

    #[test]
    fn bundled_scenarios_parse() {
        for name in BUNDLED_SCENARIOS {
            bundled_scenario(name).unwrap();
        }
        assert!(bundled_scenario("unknown-grid").is_err());
    }

    #[test]
    fn inapplicable_override_rejected() {
        let s = base_scenario(reference_demographics(), CurrentMode::Walk, TripPurpose::Leisure, 2.0, 10, 1)
            .unwrap();
        let o = ScenarioOverride {
            alternative: AlternativeId::StatusQuo,
            field: "parking_fee_eur".into(),
            value: 2.0,
        };
        assert!(matches!(s.with_override(&o), Err(Error::Scenario(_))));
    }
}
