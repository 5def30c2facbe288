//! TOML run configurations, one table layout per subcommand. Relative paths
//! are resolved against the directory of the configuration file.

use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use hubchoice_core::designer::{Factor, ReferenceTrip};
use hubchoice_core::model::{CurrentMode, DatasetKind, ModelSpec, ParameterVector, TripPurpose};
use hubchoice_core::{presets, Error, Result};

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Model selection shared by every command that evaluates utilities.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelChoice {
    pub model: DatasetKind,
    /// Replaces the bundled specification of `model`.
    #[serde(default)]
    pub spec: Option<PathBuf>,
}

impl ModelChoice {
    pub fn resolve_paths(&mut self, base: &Path) {
        if let Some(p) = &self.spec {
            self.spec = Some(resolve(base, p));
        }
    }

    pub fn load_spec(&self) -> Result<ModelSpec> {
        let spec = match &self.spec {
            Some(path) => ModelSpec::from_toml(&std::fs::read_to_string(path).map_err(|e| {
                Error::Parse(format!("cannot read {}: {e}", path.display()))
            })?)?,
            None => presets::spec(self.model),
        };
        if spec.kind != self.model {
            return Err(Error::Specification(format!(
                "specification `{}` is for {} data, the configuration selects {}",
                spec.name, spec.kind, self.model
            )));
        }
        Ok(spec)
    }
}

/// Parameter values from a file, or the bundled published estimates.
pub fn load_parameters(path: Option<&Path>, kind: DatasetKind) -> Result<ParameterVector> {
    match path {
        Some(p) => ParameterVector::read_csv(std::fs::File::open(p)?),
        None => Ok(presets::published_parameters(kind)),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NonCommuteDesign {
    pub distance_km: f64,
    pub purpose: TripPurpose,
    pub mode: CurrentMode,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    #[serde(default)]
    pub commute: Option<ReferenceTrip>,
    #[serde(default)]
    pub non_commute: Option<NonCommuteDesign>,
    /// A free-form plan: each factor takes three levels.
    #[serde(default)]
    pub factors: Option<Vec<Factor>>,
    /// Number of respondents to write task assignments for.
    #[serde(default)]
    pub respondents: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarginalsChoice {
    /// Survey shares with the mass of unmodelled modes redistributed.
    #[default]
    Modeled,
    /// Survey shares as published; unmodelled modes yield fewer tasks.
    Survey,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SynthesizeConfig {
    #[serde(flatten)]
    pub model: ModelChoice,
    #[serde(default)]
    pub parameters: Option<PathBuf>,
    pub individuals: usize,
    #[serde(default)]
    pub marginals: MarginalsChoice,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimateConfig {
    #[serde(flatten)]
    pub model: ModelChoice,
    pub dataset: PathBuf,
    /// Starting values and fixed/free flags; defaults to the model specification's
    /// starting values, all free.
    #[serde(default)]
    pub start: Option<PathBuf>,
    #[serde(default)]
    pub draws: Option<usize>,
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub gradient_tolerance: Option<f64>,
    #[serde(default = "yes")]
    pub std_errors: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimulateConfig {
    #[serde(flatten)]
    pub model: ModelChoice,
    #[serde(default)]
    pub parameters: Option<PathBuf>,
    /// Bundled scenario name (`noncommute-grid`, `commute-grid`, `car-policies`) or a path to a
    /// scenario file.
    pub scenario: String,
    #[serde(default)]
    pub draws: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VotPair {
    pub label: String,
    pub time: String,
    pub cost: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VotConfig {
    #[serde(flatten)]
    pub model: ModelChoice,
    #[serde(default)]
    pub parameters: Option<PathBuf>,
    #[serde(default)]
    pub pairs: Vec<VotPair>,
}

fn pair(label: &str, time: &str, cost: &str) -> VotPair {
    VotPair {
        label: label.into(),
        time: time.into(),
        cost: cost.into(),
    }
}

/// Time and cost coefficient pairs reported when none are configured.
pub fn default_vot_pairs(kind: DatasetKind) -> Vec<VotPair> {
    match kind {
        DatasetKind::NonCommute => vec![
            pair("Shared e-bike, car and PT users", "seb_time_car_pt", "seb_cost"),
            pair("Shared EV, PT users", "sev_time_car_pt", "sev_cost_pt"),
            pair("Car", "sq_car_time", "sq_car_cost"),
            pair("Public transport", "sq_pt_time", "sq_pt_cost"),
        ],
        DatasetKind::Commute => vec![
            pair("Shared e-bike", "seb_time", "seb_cost"),
            pair("Shared EV, bike users", "sev_time_bike", "sev_cost_bike"),
        ],
    }
}
