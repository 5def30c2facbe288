//! Deterministic utility evaluation.
//!
//! Every utility is linear in the parameters. [`utility_rows`] produces the
//! (coefficient, covariate) pairs of one alternative, and all evaluators in
//! the crate (scalar evaluation here, the compiled likelihood, the forward
//! simulator) are built from it.

use super::dataset::TaskObservation;
use super::params::ParameterVector;
use super::spec::ModelSpec;
use super::types::{AlternativeId, AttributeBundle, Covariate, DatasetKind, Persona, TripContext};
use crate::error::{Error, Result};

/// Congestion covariate. Non-commute delay is a fraction of travel time and
/// the covariate is dimensionless; commute delay is in minutes.
pub fn build_congestion_covariate(
    kind: DatasetKind,
    chance: f64,
    delay: f64,
    travel_time_min: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&chance) {
        return Err(Error::InvalidAttribute {
            alternative: AlternativeId::StatusQuo,
            field: "congestion_chance",
            value: chance,
        });
    }
    if !(delay >= 0.0) {
        return Err(Error::InvalidAttribute {
            alternative: AlternativeId::StatusQuo,
            field: "congestion_delay",
            value: delay,
        });
    }
    match kind {
        DatasetKind::NonCommute if travel_time_min <= 0.0 => Err(Error::ZeroTravelTime),
        DatasetKind::NonCommute | DatasetKind::Commute => Ok(chance * delay),
    }
}

pub fn covariate_value(
    covariate: Covariate,
    bundle: &AttributeBundle,
    context: &TripContext,
) -> Result<f64> {
    Ok(match covariate {
        Covariate::Constant => 1.0,
        Covariate::TravelTime => bundle.travel_time_min,
        Covariate::TravelCost => bundle.travel_cost_eur,
        Covariate::AccessEgress => bundle.access_egress_time_min,
        Covariate::Congestion => {
            if bundle.congestion_chance == 0.0 {
                0.0
            } else {
                build_congestion_covariate(
                    context.kind(),
                    bundle.congestion_chance,
                    bundle.congestion_delay,
                    bundle.travel_time_min,
                )?
            }
        }
        Covariate::ParkingSearch => bundle.parking_search_time_min,
        Covariate::ParkingFee => bundle.parking_fee_eur,
    })
}

/// Linear decomposition of the systematic utility of `alt`: pairs of
/// (coefficient index in `spec`, covariate value), one per applicable term.
pub fn utility_rows(
    alt: AlternativeId,
    obs: &TaskObservation,
    persona: &Persona,
    spec: &ModelSpec,
) -> Result<Vec<(usize, f64)>> {
    let bundle = obs.attributes_of(alt);
    bundle.validate(alt)?;
    let mut rows = Vec::new();
    for term in spec.terms.iter().filter(|t| t.alternative == alt) {
        if !term.when.matches(persona, &obs.context) {
            continue;
        }
        let index = spec
            .coefficient_index(&term.coefficient)
            .ok_or_else(|| Error::UnknownCoefficient(term.coefficient.clone()))?;
        let value = covariate_value(term.covariate, bundle, &obs.context)?;
        rows.push((index, value));
    }
    Ok(rows)
}

fn evaluate_rows(rows: &[(usize, f64)], params: &ParameterVector, spec: &ModelSpec) -> Result<f64> {
    rows.iter().try_fold(0.0, |acc, &(index, x)| {
        let name = &spec.coefficients[index].name;
        Ok(acc + params.get(name)? * x)
    })
}

/// Status quo utility: attribute terms of the respondent's current mode
/// only, with no constant and no error component.
pub fn systematic_utility_sq(
    obs: &TaskObservation,
    persona: &Persona,
    params: &ParameterVector,
    spec: &ModelSpec,
) -> Result<f64> {
    let rows = utility_rows(AlternativeId::StatusQuo, obs, persona, spec)?;
    evaluate_rows(&rows, params, spec)
}

/// Shared-mode utility: constant, current-mode constant shifts, attribute
/// and socio-demographic terms. Error components are excluded.
pub fn systematic_utility_ehub(
    alt: AlternativeId,
    obs: &TaskObservation,
    persona: &Persona,
    params: &ParameterVector,
    spec: &ModelSpec,
) -> Result<f64> {
    if !alt.is_shared() {
        return Err(Error::Specification(
            "systematic_utility_ehub called for the status quo".into(),
        ));
    }
    let rows = utility_rows(alt, obs, persona, spec)?;
    evaluate_rows(&rows, params, spec)
}

pub fn systematic_utility(
    alt: AlternativeId,
    obs: &TaskObservation,
    persona: &Persona,
    params: &ParameterVector,
    spec: &ModelSpec,
) -> Result<f64> {
    match alt {
        AlternativeId::StatusQuo => systematic_utility_sq(obs, persona, params, spec),
        _ => systematic_utility_ehub(alt, obs, persona, params, spec),
    }
}

/// Sum of |sigma_k| * z_k over the error components loading on `alt`.
/// `draws` holds one standard normal per declared component.
pub fn random_utility_offset(
    alt: AlternativeId,
    draws: &[f64],
    params: &ParameterVector,
    spec: &ModelSpec,
) -> Result<f64> {
    if draws.len() != spec.n_components() {
        return Err(Error::DimensionMismatch {
            what: "error component draws",
            expected: spec.n_components(),
            found: draws.len(),
        });
    }
    if alt == AlternativeId::StatusQuo {
        return Ok(0.0);
    }
    spec.error_components
        .iter()
        .zip(draws)
        .filter(|(c, _)| c.loads_on.contains(&alt))
        .try_fold(0.0, |acc, (c, z)| Ok(acc + params.get(&c.coefficient)?.abs() * z))
}

/// Conditional switching: the status quo is only offered when its template
/// is the persona's own current mode.
pub fn availability(obs: &TaskObservation, alt: AlternativeId, persona: &Persona) -> bool {
    match alt {
        AlternativeId::StatusQuo => obs.status_quo_mode == persona.current_mode,
        AlternativeId::SharedEv | AlternativeId::SharedEbike => true,
    }
}
