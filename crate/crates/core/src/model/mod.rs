//! Domain types and utility evaluation for the conditional switching model.

mod dataset;
mod params;
mod spec;
mod types;
mod utility;

pub use dataset::{ChoiceDataset, Respondent, TaskObservation};
pub use params::{ParameterEntry, ParameterVector};
pub use spec::{
    AvailabilityRule, CoefficientDecl, CoefficientGroup, ErrorComponent, ModelSpec, Predicate,
    UtilityTerm, DEFAULT_SIGMA_START,
};
pub use types::{
    AgeGroup, AlternativeId, AttributeBundle, Covariate, CurrentMode, DatasetKind, Demographics,
    IncomeBand, Persona, TripContext, TripPurpose,
};
pub use utility::{
    availability, build_congestion_covariate, covariate_value, random_utility_offset,
    systematic_utility, systematic_utility_ehub, systematic_utility_sq, utility_rows,
};
