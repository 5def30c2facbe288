//! Declarative model specification: coefficients, linear utility terms gated
//! by predicates, error components, and the availability rule.
//!
//! A specification is stored as TOML. Two terms that name the same
//! coefficient share it, which is how generic (pooled) coefficients are
//! expressed.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::types::{
    AgeGroup, AlternativeId, Covariate, CurrentMode, DatasetKind, IncomeBand, Persona,
    TripContext, TripPurpose,
};
use crate::error::{Error, Result};

const DISTANCE_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientGroup {
    Constants,
    ModeAttributes,
    SocioDemographics,
}

impl CoefficientGroup {
    pub fn heading(self) -> &'static str {
        match self {
            CoefficientGroup::Constants => "Alternative specific constants",
            CoefficientGroup::ModeAttributes => "Mode attributes",
            CoefficientGroup::SocioDemographics => "Socio-demographic variables",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientDecl {
    pub name: String,
    pub label: String,
    pub group: CoefficientGroup,
    /// Overrides the default starting value for estimation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
}

/// Conjunction of optional filters over persona and trip context. An absent
/// filter matches everything.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<CurrentMode>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purposes: Option<Vec<TripPurpose>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances_km: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age_groups: Option<Vec<AgeGroup>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub income_bands: Option<Vec<IncomeBand>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub higher_education: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub has_children: Option<bool>,
}

fn member<T: PartialEq>(filter: &Option<Vec<T>>, value: &T) -> bool {
    filter.as_ref().is_none_or(|set| set.contains(value))
}

fn sets_disjoint<T: PartialEq>(a: &Option<Vec<T>>, b: &Option<Vec<T>>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => !a.iter().any(|x| b.contains(x)),
        _ => false,
    }
}

fn flags_disjoint(a: Option<bool>, b: Option<bool>) -> bool {
    matches!((a, b), (Some(x), Some(y)) if x != y)
}

impl Predicate {
    pub fn matches(&self, persona: &Persona, context: &TripContext) -> bool {
        let demo = &persona.demographics;
        let distance_ok = self.distances_km.as_ref().is_none_or(|set| {
            set.iter()
                .any(|d| (d - context.distance_km).abs() < DISTANCE_EPS)
        });
        let income_ok = match &self.income_bands {
            None => true,
            Some(_) if demo.income_band == IncomeBand::Missing => false,
            Some(set) => set.contains(&demo.income_band),
        };
        member(&self.modes, &persona.current_mode)
            && member(&self.purposes, &context.purpose)
            && distance_ok
            && member(&self.age_groups, &demo.age_group)
            && income_ok
            && self.higher_education.is_none_or(|v| v == demo.higher_education)
            && self.has_children.is_none_or(|v| v == demo.has_children)
    }

    /// True when no persona/context can satisfy both predicates.
    pub fn disjoint_from(&self, other: &Predicate) -> bool {
        let distances = match (&self.distances_km, &other.distances_km) {
            (Some(a), Some(b)) => !a
                .iter()
                .any(|x| b.iter().any(|y| (x - y).abs() < DISTANCE_EPS)),
            _ => false,
        };
        sets_disjoint(&self.modes, &other.modes)
            || sets_disjoint(&self.purposes, &other.purposes)
            || distances
            || sets_disjoint(&self.age_groups, &other.age_groups)
            || sets_disjoint(&self.income_bands, &other.income_bands)
            || flags_disjoint(self.higher_education, other.higher_education)
            || flags_disjoint(self.has_children, other.has_children)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilityTerm {
    pub coefficient: String,
    pub alternative: AlternativeId,
    #[serde(default = "default_covariate")]
    pub covariate: Covariate,
    #[serde(default)]
    pub when: Predicate,
}

fn default_covariate() -> Covariate {
    Covariate::Constant
}

/// Zero-mean normal term with standard deviation `coefficient`, drawn once
/// per individual and added to every alternative in `loads_on`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorComponent {
    pub name: String,
    pub coefficient: String,
    pub loads_on: Vec<AlternativeId>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AvailabilityRule {
    /// Status quo offered only to current users of its mode; shared modes
    /// always offered.
    #[default]
    ConditionalSwitching,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    pub kind: DatasetKind,
    #[serde(default)]
    pub availability: AvailabilityRule,
    pub coefficients: Vec<CoefficientDecl>,
    pub terms: Vec<UtilityTerm>,
    #[serde(default)]
    pub error_components: Vec<ErrorComponent>,
}

pub const DEFAULT_SIGMA_START: f64 = 0.1;

impl ModelSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ModelSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("model specification serializes to TOML")
    }

    pub fn coefficient_index(&self, name: &str) -> Option<usize> {
        self.coefficients.iter().position(|c| c.name == name)
    }

    pub fn coefficient_names(&self) -> Vec<&str> {
        self.coefficients.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn n_components(&self) -> usize {
        self.error_components.len()
    }

    pub fn is_sigma(&self, name: &str) -> bool {
        self.error_components.iter().any(|c| c.coefficient == name)
    }

    /// Zeros for every linear coefficient, a small positive value for every
    /// standard deviation, unless the declaration carries its own start.
    pub fn default_start(&self, name: &str) -> f64 {
        let declared = self
            .coefficients
            .iter()
            .find(|c| c.name == name)
            .and_then(|c| c.start);
        match declared {
            Some(v) => v,
            None if self.is_sigma(name) => DEFAULT_SIGMA_START,
            None => 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let spec_err = |msg: String| Err(Error::Specification(msg));

        let mut names = HashSet::new();
        for c in &self.coefficients {
            if !names.insert(c.name.as_str()) {
                return spec_err(format!("coefficient `{}` declared twice", c.name));
            }
        }

        let mut used: HashMap<&str, &'static str> = HashMap::new();
        for term in &self.terms {
            if !names.contains(term.coefficient.as_str()) {
                return Err(Error::UnknownCoefficient(term.coefficient.clone()));
            }
            if term.alternative == AlternativeId::StatusQuo && term.covariate == Covariate::Constant
            {
                return spec_err(format!(
                    "`{}`: the status quo utility carries no constants",
                    term.coefficient
                ));
            }
            if term
                .when
                .income_bands
                .as_ref()
                .is_some_and(|b| b.contains(&IncomeBand::Missing))
            {
                return spec_err(format!(
                    "`{}`: missing income cannot be used in a predicate",
                    term.coefficient
                ));
            }
            used.insert(term.coefficient.as_str(), "term");
        }

        let mut component_names = HashSet::new();
        for comp in &self.error_components {
            if !component_names.insert(comp.name.as_str()) {
                return spec_err(format!("error component `{}` declared twice", comp.name));
            }
            if !names.contains(comp.coefficient.as_str()) {
                return Err(Error::UnknownCoefficient(comp.coefficient.clone()));
            }
            if comp.loads_on.is_empty() {
                return spec_err(format!("error component `{}` loads on nothing", comp.name));
            }
            if comp.loads_on.contains(&AlternativeId::StatusQuo) {
                return spec_err(format!(
                    "error component `{}` may not load on the status quo",
                    comp.name
                ));
            }
            if used.insert(comp.coefficient.as_str(), "sigma") == Some("term") {
                return spec_err(format!(
                    "`{}` is used both as a standard deviation and a utility coefficient",
                    comp.coefficient
                ));
            }
        }

        for c in &self.coefficients {
            if !used.contains_key(c.name.as_str()) {
                return spec_err(format!("coefficient `{}` is never used", c.name));
            }
        }

        // Attribute terms on the same alternative and covariate must not
        // overlap: each respondent gets exactly one applicable coefficient.
        for (i, a) in self.terms.iter().enumerate() {
            if a.covariate == Covariate::Constant {
                continue;
            }
            for b in &self.terms[i + 1..] {
                if b.alternative == a.alternative
                    && b.covariate == a.covariate
                    && !a.when.disjoint_from(&b.when)
                {
                    return spec_err(format!(
                        "terms `{}` and `{}` both apply {} on {}",
                        a.coefficient, b.coefficient, a.covariate, a.alternative
                    ));
                }
            }
        }
        Ok(())
    }
}
