use serde::{Deserialize, Serialize};

use super::spec::ModelSpec;
use super::types::{
    AlternativeId, AttributeBundle, CurrentMode, DatasetKind, Persona, TripContext,
};
use super::utility::availability;
use crate::error::{Error, Result};

/// One choice task as shown to one respondent.
///
/// `current_mode` is the respondent's mode for this trip context (it can
/// differ between the distance contexts of a non-commute battery), while
/// `status_quo_mode` names the mode whose template filled the status quo
/// attributes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskObservation {
    pub task_id: u32,
    pub context: TripContext,
    pub current_mode: CurrentMode,
    pub status_quo_mode: CurrentMode,
    pub attributes: [AttributeBundle; 3],
    pub available: [bool; 3],
    pub chosen: Option<AlternativeId>,
}

impl TaskObservation {
    pub fn attributes_of(&self, alt: AlternativeId) -> &AttributeBundle {
        &self.attributes[alt.index()]
    }

    pub fn is_available(&self, alt: AlternativeId) -> bool {
        self.available[alt.index()]
    }

    pub fn n_available(&self) -> usize {
        self.available.iter().filter(|a| **a).count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Respondent {
    pub id: u64,
    pub persona: Persona,
    pub tasks: Vec<TaskObservation>,
}

impl Respondent {
    /// The persona as it applies to one task: demographics are fixed, the
    /// current mode is the one reported for that task's trip context.
    pub fn persona_for(&self, task: &TaskObservation) -> Persona {
        self.persona.with_mode(task.current_mode)
    }
}

/// Panel of respondents, each with a sequence of answered tasks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChoiceDataset {
    pub kind: DatasetKind,
    pub respondents: Vec<Respondent>,
}

impl ChoiceDataset {
    pub fn n_individuals(&self) -> usize {
        self.respondents.len()
    }

    pub fn n_observations(&self) -> usize {
        self.respondents.iter().map(|r| r.tasks.len()).sum()
    }

    /// Structural checks that do not depend on a model specification.
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for respondent in &self.respondents {
            if !seen.insert(respondent.id) {
                return Err(Error::Dataset(format!(
                    "duplicate individual id {}",
                    respondent.id
                )));
            }
            if respondent.tasks.is_empty() {
                return Err(Error::Dataset(format!(
                    "individual {} has no tasks",
                    respondent.id
                )));
            }
            for task in &respondent.tasks {
                task.context.validate(self.kind)?;
                for alt in AlternativeId::ALL {
                    task.attributes_of(*alt).validate(*alt)?;
                }
                let persona = respondent.persona_for(task);
                for alt in AlternativeId::ALL {
                    if task.is_available(*alt) != availability(task, *alt, &persona) {
                        return Err(Error::Dataset(format!(
                            "individual {}, task {}: availability of {} contradicts the conditional switching rule",
                            respondent.id, task.task_id, alt
                        )));
                    }
                }
                if task.n_available() == 0 {
                    return Err(Error::NoAvailableAlternative);
                }
                if let Some(chosen) = task.chosen {
                    if !task.is_available(chosen) {
                        return Err(Error::ChosenUnavailable {
                            individual: respondent.id,
                            task: task.task_id,
                            chosen,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Checks the dataset against a specification: matching experiment kind
    /// and a recorded choice in every task.
    pub fn validate_for(&self, spec: &ModelSpec) -> Result<()> {
        if spec.kind != self.kind {
            return Err(Error::Dataset(format!(
                "specification is for {} data but the dataset is {}",
                spec.kind, self.kind
            )));
        }
        self.validate()?;
        for respondent in &self.respondents {
            for task in &respondent.tasks {
                if task.chosen.is_none() {
                    return Err(Error::MissingChoice {
                        individual: respondent.id,
                        task: task.task_id,
                    });
                }
            }
        }
        Ok(())
    }
}
