//! File formats: long-format choice data, estimation reports, and run
//! manifests with content digests.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimator::EstimationResult;
use crate::model::{
    AlternativeId, AttributeBundle, ChoiceDataset, CoefficientGroup, CurrentMode, DatasetKind,
    Demographics, ModelSpec, Persona, Respondent, TaskObservation, TripContext, TripPurpose,
};

const DEMOGRAPHIC_COLUMNS: [&str; 4] = ["age_group", "higher_education", "income_band", "has_children"];

/// Column order of the long format, one row per task and alternative.
pub fn dataset_columns() -> Vec<&'static str> {
    let mut cols = vec![
        "individual_id",
        "task_id",
        "alt",
        "availability",
        "chosen",
        "purpose",
        "distance_km",
        "status_quo_mode",
    ];
    cols.extend(AttributeBundle::FIELDS);
    cols.extend(DEMOGRAPHIC_COLUMNS);
    cols.push("current_mode");
    cols
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn write_dataset_csv<W: Write>(dataset: &ChoiceDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(dataset_columns())?;
    for r in &dataset.respondents {
        let d = r.persona.demographics;
        for t in &r.tasks {
            for alt in AlternativeId::ALL {
                let mut rec = vec![
                    r.id.to_string(),
                    t.task_id.to_string(),
                    alt.to_string(),
                    flag(t.available[alt.index()]).to_string(),
                    match t.chosen {
                        Some(c) => flag(c == *alt).to_string(),
                        None => String::new(),
                    },
                    t.context.purpose.to_string(),
                    t.context.distance_km.to_string(),
                    t.status_quo_mode.to_string(),
                ];
                rec.extend(t.attributes[alt.index()].values().iter().map(f64::to_string));
                rec.push(d.age_group.to_string());
                rec.push(flag(d.higher_education).to_string());
                rec.push(d.income_band.to_string());
                rec.push(flag(d.has_children).to_string());
                rec.push(t.current_mode.to_string());
                w.write_record(&rec)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn dataset_to_csv_string(dataset: &ChoiceDataset) -> Result<String> {
    let mut buf = Vec::new();
    write_dataset_csv(dataset, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

struct Row<'a> {
    line: u64,
    record: &'a csv::StringRecord,
    columns: &'a HashMap<String, usize>,
}

impl Row<'_> {
    fn text(&self, col: &str) -> Result<&str> {
        let i = self.columns[col];
        self.record
            .get(i)
            .ok_or_else(|| self.error(col, "missing value"))
    }

    fn error(&self, col: &str, msg: &str) -> Error {
        Error::Parse(format!("line {}, column {col}: {msg}", self.line))
    }

    fn parse<T: std::str::FromStr>(&self, col: &str) -> Result<T> {
        let s = self.text(col)?;
        s.parse()
            .map_err(|_| self.error(col, &format!("cannot parse `{s}`")))
    }

    fn coded<T: std::str::FromStr<Err = Error>>(&self, col: &str) -> Result<T> {
        let s = self.text(col)?;
        s.parse().map_err(|e: Error| self.error(col, &e.to_string()))
    }

    fn flag(&self, col: &str) -> Result<bool> {
        match self.text(col)? {
            "1" => Ok(true),
            "0" => Ok(false),
            other => Err(self.error(col, &format!("expected 0 or 1, got `{other}`"))),
        }
    }
}

/// Reads the long format. Rows of one task must be contiguous; respondent
/// and task order follow first appearance. The experiment kind is taken
/// from the trip purposes.
pub fn read_dataset_csv<R: Read>(reader: R) -> Result<ChoiceDataset> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    let columns: HashMap<String, usize> = header
        .iter()
        .enumerate()
        .map(|(i, h)| (h.to_string(), i))
        .collect();
    for col in dataset_columns() {
        if !columns.contains_key(col) {
            return Err(Error::Parse(format!("missing column `{col}`")));
        }
    }

    let mut respondents: Vec<Respondent> = Vec::new();
    let mut by_id: HashMap<u64, usize> = HashMap::new();
    // Alternatives seen so far for the task being read.
    let mut pending: Option<[bool; 3]> = None;
    let mut kind: Option<DatasetKind> = None;
    let mut record = csv::StringRecord::new();
    let mut line = 1;
    while r.read_record(&mut record)? {
        line += 1;
        let row = Row {
            line,
            record: &record,
            columns: &columns,
        };
        let id: u64 = row.parse("individual_id")?;
        let task_id: u32 = row.parse("task_id")?;
        let alt: AlternativeId = row.coded("alt")?;
        let context = TripContext {
            purpose: row.coded::<TripPurpose>("purpose")?,
            distance_km: row.parse("distance_km")?,
        };
        match kind {
            None => kind = Some(context.kind()),
            Some(k) if k != context.kind() => {
                return Err(row.error("purpose", "commuting and non-commuting rows are mixed"))
            }
            _ => {}
        }
        let demographics = Demographics {
            age_group: row.coded("age_group")?,
            higher_education: row.flag("higher_education")?,
            income_band: row.coded("income_band")?,
            has_children: row.flag("has_children")?,
        };
        let current_mode: CurrentMode = row.coded("current_mode")?;
        let status_quo_mode: CurrentMode = row.coded("status_quo_mode")?;
        let mut values = [0.0; 7];
        for (v, name) in values.iter_mut().zip(AttributeBundle::FIELDS) {
            *v = row.parse(name)?;
        }
        let available = row.flag("availability")?;
        let chosen = match row.text("chosen")? {
            "" => None,
            _ => Some(row.flag("chosen")?),
        };

        let ri = *by_id.entry(id).or_insert_with(|| {
            respondents.push(Respondent {
                id,
                persona: Persona {
                    demographics,
                    current_mode,
                },
                tasks: Vec::new(),
            });
            respondents.len() - 1
        });
        let respondent = &mut respondents[ri];
        if respondent.persona.demographics != demographics {
            return Err(row.error("individual_id", "socio-demographics differ between rows"));
        }
        let new_task = match respondent.tasks.last() {
            Some(t) => t.task_id != task_id,
            None => true,
        };
        if new_task {
            if pending.is_some() {
                return Err(row.error("alt", "previous task does not list all three alternatives"));
            }
            if respondent.tasks.iter().any(|t| t.task_id == task_id) {
                return Err(row.error("task_id", "rows of a task are not contiguous"));
            }
            respondent.tasks.push(TaskObservation {
                task_id,
                context,
                current_mode,
                status_quo_mode,
                attributes: [AttributeBundle::default(); 3],
                available: [false; 3],
                chosen: None,
            });
            pending = Some([false; 3]);
        }
        let task = respondent.tasks.last_mut().expect("task pushed above");
        if task.context != context
            || task.current_mode != current_mode
            || task.status_quo_mode != status_quo_mode
        {
            return Err(row.error("task_id", "task-level columns differ between alternatives"));
        }
        let Some(seen) = pending.as_mut() else {
            return Err(row.error("alt", "task already lists all three alternatives"));
        };
        if seen[alt.index()] {
            return Err(row.error("alt", "alternative listed twice"));
        }
        seen[alt.index()] = true;
        task.attributes[alt.index()] = AttributeBundle::from_values(values);
        task.available[alt.index()] = available;
        match (chosen, task.chosen) {
            (Some(true), Some(_)) => return Err(row.error("chosen", "two chosen alternatives")),
            (Some(true), None) => task.chosen = Some(alt),
            _ => {}
        }
        if seen.iter().all(|s| *s) {
            pending = None;
        }
    }
    if pending.is_some() {
        return Err(Error::Parse("a task does not list all three alternatives".into()));
    }
    let kind = kind.ok_or_else(|| Error::Parse("dataset has no rows".into()))?;
    let dataset = ChoiceDataset { kind, respondents };
    dataset.validate()?;
    Ok(dataset)
}

/// Rounds to four significant digits.
pub fn significant4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (3 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn format_p(p: f64) -> String {
    if p < 0.001 {
        "<0.001".into()
    } else {
        format!("{p:.3}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportLine {
    pub group: CoefficientGroup,
    pub name: String,
    pub label: String,
    pub estimate: f64,
    pub free: bool,
    pub std_error: Option<f64>,
    pub p_value: Option<f64>,
}

pub fn report_lines(result: &EstimationResult, spec: &ModelSpec) -> Result<Vec<ReportLine>> {
    spec.coefficients
        .iter()
        .map(|c| {
            let entry = result
                .estimates
                .entry(&c.name)
                .ok_or_else(|| Error::UnknownCoefficient(c.name.clone()))?;
            Ok(ReportLine {
                group: c.group,
                name: c.name.clone(),
                label: c.label.clone(),
                estimate: entry.value,
                free: entry.free,
                std_error: result.std_error(&c.name),
                p_value: result.p_value(&c.name),
            })
        })
        .collect()
}

/// Aligned text table grouped by coefficient block, followed by the fit
/// summary.
pub fn report_text(result: &EstimationResult, spec: &ModelSpec) -> Result<String> {
    let lines = report_lines(result, spec)?;
    let width = lines.iter().map(|l| l.label.len()).max().unwrap_or(10).max(10) + 2;
    let mut out = String::new();
    let _ = writeln!(out, "{}", spec.name);
    let _ = writeln!(
        out,
        "{:<width$}{:>12}{:>12}{:>10}",
        "", "Estimate", "Std. error", "p-value"
    );
    for group in [
        CoefficientGroup::Constants,
        CoefficientGroup::ModeAttributes,
        CoefficientGroup::SocioDemographics,
    ] {
        let members: Vec<&ReportLine> = lines.iter().filter(|l| l.group == group).collect();
        if members.is_empty() {
            continue;
        }
        let _ = writeln!(out, "\n{}", group.heading());
        for l in members {
            let (se, p) = if l.free {
                (
                    l.std_error.map(significant4).unwrap_or_else(|| "n/a".into()),
                    l.p_value.map(format_p).unwrap_or_else(|| "n/a".into()),
                )
            } else {
                ("fixed".into(), String::new())
            };
            let _ = writeln!(
                out,
                "{:<width$}{:>12}{:>12}{:>10}",
                l.label,
                significant4(l.estimate),
                se,
                p
            );
        }
    }
    let f = &result.fit;
    let c = &result.convergence;
    let _ = writeln!(out, "\nModel summary");
    let _ = writeln!(out, "{:<28}{}", "Number of parameters", f.n_parameters);
    let _ = writeln!(out, "{:<28}{}", "Number of observations", f.n_observations);
    let _ = writeln!(out, "{:<28}{}", "Number of individuals", f.n_individuals);
    let _ = writeln!(out, "{:<28}{:.3}", "Null log-likelihood", f.null_ll);
    let _ = writeln!(out, "{:<28}{:.3}", "Final log-likelihood", f.final_ll);
    let _ = writeln!(out, "{:<28}{:.3}", "Rho-square", f.rho_square);
    let _ = writeln!(
        out,
        "{:<28}{} ({:?}, {} iterations)",
        "Converged", c.converged, c.reason, c.iterations
    );
    Ok(out)
}

pub fn write_report_csv<W: Write>(
    result: &EstimationResult,
    spec: &ModelSpec,
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["group", "name", "label", "estimate", "free", "std_error", "p_value"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for l in report_lines(result, spec)? {
        w.write_record([
            serde_json::to_value(l.group)?
                .as_str()
                .unwrap_or_default()
                .to_string(),
            l.name,
            l.label,
            l.estimate.to_string(),
            flag(l.free).to_string(),
            opt(l.std_error),
            opt(l.p_value),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

/// Record of one command invocation: the effective configuration and the
/// digests of every file read or written. Carries no timestamps so that
/// reruns with the same inputs produce identical manifests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new<C: Serialize>(command: &str, seed: u64, config: &C) -> Result<Self> {
        Ok(Self {
            tool: "hubchoice".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            config: serde_json::to_value(config)?,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        })
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs
            .insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> Result<()> {
        self.outputs
            .insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
