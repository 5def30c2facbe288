use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::spec::ModelSpec;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterEntry {
    pub name: String,
    pub value: f64,
    pub free: bool,
}

/// Named coefficient values with free/fixed flags. Entry order follows the
/// model specification's declaration order, which is also the report order.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterVector {
    entries: Vec<ParameterEntry>,
    index: HashMap<String, usize>,
}

impl ParameterVector {
    pub fn new(entries: Vec<ParameterEntry>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if index.insert(e.name.clone(), i).is_some() {
                return Err(Error::Specification(format!(
                    "parameter `{}` listed twice",
                    e.name
                )));
            }
            if !e.value.is_finite() {
                return Err(Error::Parse(format!("parameter `{}` is not finite", e.name)));
            }
        }
        Ok(Self { entries, index })
    }

    /// Default starting values for every coefficient of `spec`, all free.
    pub fn start_for(spec: &ModelSpec) -> Self {
        let entries = spec
            .coefficients
            .iter()
            .map(|c| ParameterEntry {
                name: c.name.clone(),
                value: spec.default_start(&c.name),
                free: true,
            })
            .collect();
        Self::new(entries).expect("specification names are unique")
    }

    /// Every coefficient fixed at zero: the equal-shares null model.
    pub fn zeros_for(spec: &ModelSpec) -> Self {
        let entries = spec
            .coefficients
            .iter()
            .map(|c| ParameterEntry {
                name: c.name.clone(),
                value: 0.0,
                free: false,
            })
            .collect();
        Self::new(entries).expect("specification names are unique")
    }

    /// Reorders and checks the vector so that entry `i` is coefficient `i` of
    /// `spec`. Extra names are rejected.
    pub fn aligned_to(&self, spec: &ModelSpec) -> Result<Self> {
        if self.entries.len() != spec.coefficients.len() {
            for e in &self.entries {
                if spec.coefficient_index(&e.name).is_none() {
                    return Err(Error::UnknownCoefficient(e.name.clone()));
                }
            }
        }
        let entries = spec
            .coefficients
            .iter()
            .map(|c| {
                self.entry(&c.name)
                    .cloned()
                    .ok_or_else(|| Error::UnknownCoefficient(c.name.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ParameterEntry] {
        &self.entries
    }

    pub fn entry(&self, name: &str) -> Option<&ParameterEntry> {
        self.index.get(name).map(|&i| &self.entries[i])
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        self.entry(name)
            .map(|e| e.value)
            .ok_or_else(|| Error::UnknownCoefficient(name.to_owned()))
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let i = self
            .position(name)
            .ok_or_else(|| Error::UnknownCoefficient(name.to_owned()))?;
        self.entries[i].value = value;
        Ok(())
    }

    pub fn fix(&mut self, name: &str, value: f64) -> Result<()> {
        self.set(name, value)?;
        let i = self.index[name];
        self.entries[i].free = false;
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.value).collect()
    }

    pub fn free_positions(&self) -> Vec<usize> {
        (0..self.entries.len())
            .filter(|&i| self.entries[i].free)
            .collect()
    }

    pub fn n_free(&self) -> usize {
        self.entries.iter().filter(|e| e.free).count()
    }

    pub fn with_values(&self, values: &[f64]) -> Self {
        let mut out = self.clone();
        for (e, v) in out.entries.iter_mut().zip(values) {
            e.value = *v;
        }
        out
    }

    /// Multiplies every value by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let values: Vec<f64> = self.values().iter().map(|v| v * factor).collect();
        self.with_values(&values)
    }

    /// CSV with columns `name,value,free`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["name", "value", "free"])?;
        for e in &self.entries {
            w.write_record([
                e.name.as_str(),
                &e.value.to_string(),
                if e.free { "true" } else { "false" },
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut entries = Vec::new();
        for record in r.deserialize() {
            let e: ParameterEntry = record?;
            entries.push(e);
        }
        Self::new(entries)
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}
