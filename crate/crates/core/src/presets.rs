//! Bundled specifications and published coefficient sets.
//!
//! The `*_published.csv` files carry an extra `p_value` column next to the
//! regular parameter-file columns.

use crate::error::Result;
use crate::model::{DatasetKind, ModelSpec, ParameterVector};

pub const NON_COMMUTE_SPEC: &str = include_str!("../assets/non_commute_spec.toml");
pub const COMMUTE_SPEC: &str = include_str!("../assets/commute_spec.toml");
pub const NON_COMMUTE_PUBLISHED: &str = include_str!("../assets/non_commute_published.csv");
pub const COMMUTE_PUBLISHED: &str = include_str!("../assets/commute_published.csv");

pub fn spec(kind: DatasetKind) -> ModelSpec {
    let text = match kind {
        DatasetKind::NonCommute => NON_COMMUTE_SPEC,
        DatasetKind::Commute => COMMUTE_SPEC,
    };
    ModelSpec::from_toml(text).expect("bundled specification is valid")
}

pub fn non_commute_spec() -> ModelSpec {
    spec(DatasetKind::NonCommute)
}

pub fn commute_spec() -> ModelSpec {
    spec(DatasetKind::Commute)
}

/// Published point estimates, all marked free.
pub fn published_parameters(kind: DatasetKind) -> ParameterVector {
    let text = match kind {
        DatasetKind::NonCommute => NON_COMMUTE_PUBLISHED,
        DatasetKind::Commute => COMMUTE_PUBLISHED,
    };
    ParameterVector::read_csv(text.as_bytes()).expect("bundled parameters are valid")
}

/// Published p-values keyed by coefficient name, in declaration order.
pub fn published_p_values(kind: DatasetKind) -> Result<Vec<(String, f64)>> {
    let text = match kind {
        DatasetKind::NonCommute => NON_COMMUTE_PUBLISHED,
        DatasetKind::Commute => COMMUTE_PUBLISHED,
    };
    #[derive(serde::Deserialize)]
    struct Row {
        name: String,
        p_value: f64,
    }
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in reader.deserialize() {
        let row: Row = row?;
        out.push((row.name, row.p_value));
    }
    Ok(out)
}
