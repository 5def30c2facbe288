//! Simulated panel log-likelihood, its analytic gradient, and fit statistics.
//!
//! The panel probability of individual `n` is the draw average of the
//! product of logit probabilities of the observed choices, with the error
//! components held fixed across the individual's tasks:
//!
//! ```text
//! P_n = 1/R * sum_r prod_t exp(V_tc + e_rc) / sum_j exp(V_tj + e_rj)
//! ```
//!
//! The dataset is compiled once into sparse (coefficient, covariate) rows so
//! each evaluation costs one dot product per task-alternative plus the draw
//! loop. Per-individual results are collected in dataset order and summed
//! sequentially, so parallel evaluation is bit-for-bit reproducible.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::draws::{mlhs_normal_keyed, DrawMatrix};
use crate::error::{Error, Result};
use crate::model::{utility_rows, AlternativeId, ChoiceDataset, ModelSpec, ParameterVector};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitStatistics {
    pub null_ll: f64,
    pub final_ll: f64,
    pub rho_square: f64,
    pub n_parameters: usize,
    pub n_observations: usize,
    pub n_individuals: usize,
}

impl FitStatistics {
    pub fn new(dataset: &ChoiceDataset, final_ll: f64, n_parameters: usize) -> Result<Self> {
        let null_ll = null_loglik(dataset);
        Ok(Self {
            null_ll,
            final_ll,
            rho_square: rho_square(final_ll, null_ll)?,
            n_parameters,
            n_observations: dataset.n_observations(),
            n_individuals: dataset.n_individuals(),
        })
    }
}

/// Logit probabilities over the available alternatives, max-shifted.
pub fn task_choice_prob(v: &[f64; 3], available: &[bool; 3]) -> Result<[f64; 3]> {
    let max = (0..3)
        .filter(|&j| available[j])
        .map(|j| v[j])
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::NoAvailableAlternative);
    }
    let mut p = [0.0; 3];
    let mut sum = 0.0;
    for j in 0..3 {
        if available[j] {
            p[j] = (v[j] - max).exp();
            sum += p[j];
        }
    }
    for pj in &mut p {
        *pj /= sum;
    }
    Ok(p)
}

/// Log-likelihood of the equal-shares model: each observation contributes
/// `-ln(#available)`.
pub fn null_loglik(dataset: &ChoiceDataset) -> f64 {
    dataset
        .respondents
        .iter()
        .flat_map(|r| &r.tasks)
        .map(|t| -(t.n_available() as f64).ln())
        .sum()
}

pub fn rho_square(final_ll: f64, null_ll: f64) -> Result<f64> {
    if !(null_ll < 0.0) {
        return Err(Error::InvalidNullLikelihood(null_ll));
    }
    Ok(1.0 - final_ll / null_ll)
}

#[derive(Clone, Debug)]
struct CompiledTask {
    rows: [Range<usize>; 3],
    available: [bool; 3],
    chosen: usize,
}

#[derive(Clone, Debug)]
struct CompiledRespondent {
    id: u64,
    tasks: Range<usize>,
}

/// Dataset flattened against one specification.
#[derive(Clone, Debug)]
pub struct CompiledPanel {
    n_params: usize,
    entries: Vec<(usize, f64)>,
    tasks: Vec<CompiledTask>,
    respondents: Vec<CompiledRespondent>,
    /// Per error component: coefficient index and loading mask.
    components: Vec<(usize, [bool; 3])>,
}

impl CompiledPanel {
    pub fn compile(dataset: &ChoiceDataset, spec: &ModelSpec) -> Result<Self> {
        dataset.validate_for(spec)?;
        let mut entries = Vec::new();
        let mut tasks = Vec::with_capacity(dataset.n_observations());
        let mut respondents = Vec::with_capacity(dataset.n_individuals());
        for respondent in &dataset.respondents {
            let first = tasks.len();
            for obs in &respondent.tasks {
                let persona = respondent.persona_for(obs);
                let mut rows: [Range<usize>; 3] = [0..0, 0..0, 0..0];
                for alt in AlternativeId::ALL {
                    let start = entries.len();
                    if obs.is_available(*alt) {
                        entries.extend(utility_rows(*alt, obs, &persona, spec)?);
                    }
                    rows[alt.index()] = start..entries.len();
                }
                let chosen = obs.chosen.ok_or(Error::MissingChoice {
                    individual: respondent.id,
                    task: obs.task_id,
                })?;
                tasks.push(CompiledTask {
                    rows,
                    available: obs.available,
                    chosen: chosen.index(),
                });
            }
            respondents.push(CompiledRespondent {
                id: respondent.id,
                tasks: first..tasks.len(),
            });
        }
        let components = spec
            .error_components
            .iter()
            .map(|c| {
                let index = spec
                    .coefficient_index(&c.coefficient)
                    .ok_or_else(|| Error::UnknownCoefficient(c.coefficient.clone()))?;
                let mut mask = [false; 3];
                for alt in &c.loads_on {
                    mask[alt.index()] = true;
                }
                Ok((index, mask))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_params: spec.coefficients.len(),
            entries,
            tasks,
            respondents,
            components,
        })
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn n_individuals(&self) -> usize {
        self.respondents.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn respondent_ids(&self) -> Vec<u64> {
        self.respondents.iter().map(|r| r.id).collect()
    }

    /// Parameter positions whose covariate is zero in every available row
    /// (constants count as nonzero). Such parameters have no data variation.
    pub fn unidentified(&self) -> Vec<usize> {
        let mut seen = vec![false; self.n_params];
        for &(index, x) in &self.entries {
            if x != 0.0 {
                seen[index] = true;
            }
        }
        for &(index, _) in &self.components {
            seen[index] = true;
        }
        (0..self.n_params).filter(|&i| !seen[i]).collect()
    }
}

/// Per-individual evaluation: log panel probability and, optionally, its
/// gradient over all parameters.
struct Evaluation {
    log_prob: f64,
    gradient: Option<Vec<f64>>,
}

/// Simulated log-likelihood over a compiled panel with fixed draws (common
/// random numbers across evaluations).
#[derive(Clone, Debug)]
pub struct SimulatedLikelihood {
    panel: CompiledPanel,
    draws: Option<DrawMatrix>,
}

impl SimulatedLikelihood {
    /// `draws` row `i` belongs to respondent `i`. A specification without
    /// error components takes `None`.
    pub fn new(panel: CompiledPanel, draws: Option<DrawMatrix>) -> Result<Self> {
        match &draws {
            None if panel.n_components() > 0 => {
                return Err(Error::DimensionMismatch {
                    what: "draw dimensions",
                    expected: panel.n_components(),
                    found: 0,
                })
            }
            Some(d) => {
                if d.n_dims() != panel.n_components() {
                    return Err(Error::DimensionMismatch {
                        what: "draw dimensions",
                        expected: panel.n_components(),
                        found: d.n_dims(),
                    });
                }
                if d.n_individuals() != panel.n_individuals() {
                    return Err(Error::DimensionMismatch {
                        what: "draw rows",
                        expected: panel.n_individuals(),
                        found: d.n_individuals(),
                    });
                }
            }
            None => {}
        }
        Ok(Self { panel, draws })
    }

    /// Compiles `dataset` and generates MLHS normal draws keyed by
    /// respondent id.
    pub fn with_mlhs(
        dataset: &ChoiceDataset,
        spec: &ModelSpec,
        n_draws: usize,
        seed: u64,
    ) -> Result<Self> {
        let panel = CompiledPanel::compile(dataset, spec)?;
        let draws = if panel.n_components() == 0 {
            None
        } else {
            Some(mlhs_normal_keyed(
                &panel.respondent_ids(),
                n_draws,
                panel.n_components(),
                seed,
            )?)
        };
        Self::new(panel, draws)
    }

    pub fn panel(&self) -> &CompiledPanel {
        &self.panel
    }

    pub fn n_draws(&self) -> usize {
        self.draws.as_ref().map_or(1, DrawMatrix::n_draws)
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.panel.n_params {
            return Err(Error::DimensionMismatch {
                what: "parameter vector",
                expected: self.panel.n_params,
                found: theta.len(),
            });
        }
        Ok(())
    }

    fn evaluate(&self, n: usize, theta: &[f64], want_gradient: bool) -> Result<Evaluation> {
        let panel = &self.panel;
        let respondent = &panel.respondents[n];
        let tasks = &panel.tasks[respondent.tasks.clone()];
        let n_tasks = tasks.len();
        let n_comp = panel.components.len();
        let n_draws = self.n_draws();

        let systematic: Vec<[f64; 3]> = tasks
            .iter()
            .map(|t| {
                let mut v = [0.0; 3];
                for (j, vj) in v.iter_mut().enumerate() {
                    *vj = panel.entries[t.rows[j].clone()]
                        .iter()
                        .map(|&(i, x)| theta[i] * x)
                        .sum();
                }
                v
            })
            .collect();
        let sigma: Vec<f64> = panel.components.iter().map(|&(i, _)| theta[i].abs()).collect();

        let mut log_p = vec![0.0; n_draws];
        let (mut probs, mut score_sigma) = if want_gradient {
            (vec![[0.0; 3]; n_draws * n_tasks], vec![0.0; n_draws * n_comp])
        } else {
            (Vec::new(), Vec::new())
        };

        for r in 0..n_draws {
            let z = match &self.draws {
                Some(d) => d.draw(n, r),
                None => &[],
            };
            let mut offset = [0.0; 3];
            for (k, &(_, mask)) in panel.components.iter().enumerate() {
                let e = sigma[k] * z[k];
                for j in 0..3 {
                    if mask[j] {
                        offset[j] += e;
                    }
                }
            }
            let mut lp = 0.0;
            for (t, task) in tasks.iter().enumerate() {
                let mut u = [0.0; 3];
                let mut max = f64::NEG_INFINITY;
                for j in 0..3 {
                    if task.available[j] {
                        u[j] = systematic[t][j] + offset[j];
                        max = max.max(u[j]);
                    }
                }
                let mut e = [0.0; 3];
                let mut sum = 0.0;
                for j in 0..3 {
                    if task.available[j] {
                        e[j] = (u[j] - max).exp();
                        sum += e[j];
                    }
                }
                lp += u[task.chosen] - max - sum.ln();
                if want_gradient {
                    let p = [e[0] / sum, e[1] / sum, e[2] / sum];
                    probs[r * n_tasks + t] = p;
                    for (k, &(_, mask)) in panel.components.iter().enumerate() {
                        let mut loading = if mask[task.chosen] { 1.0 } else { 0.0 };
                        for j in 0..3 {
                            if mask[j] {
                                loading -= p[j];
                            }
                        }
                        score_sigma[r * n_comp + k] += loading;
                    }
                }
            }
            log_p[r] = lp;
        }

        let max = log_p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::ZeroProbability(respondent.id));
        }
        let weights: Vec<f64> = log_p.iter().map(|lp| (lp - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        let log_prob = max + (total / n_draws as f64).ln();
        if !log_prob.is_finite() {
            return Err(Error::ZeroProbability(respondent.id));
        }
        if !want_gradient {
            return Ok(Evaluation {
                log_prob,
                gradient: None,
            });
        }

        // d ln P_n = sum_r w_r * d ln P_nr with w_r = P_nr / sum_r P_nr.
        let mut grad = vec![0.0; panel.n_params];
        for (t, task) in tasks.iter().enumerate() {
            let mut expected = [0.0; 3];
            for r in 0..n_draws {
                let w = weights[r] / total;
                let p = probs[r * n_tasks + t];
                for j in 0..3 {
                    expected[j] += w * p[j];
                }
            }
            for &(i, x) in &panel.entries[task.rows[task.chosen].clone()] {
                grad[i] += x;
            }
            for j in 0..3 {
                for &(i, x) in &panel.entries[task.rows[j].clone()] {
                    grad[i] -= expected[j] * x;
                }
            }
        }
        for (k, &(index, _)) in panel.components.iter().enumerate() {
            let z_dim = match &self.draws {
                Some(d) => d,
                None => break,
            };
            let mut acc = 0.0;
            for r in 0..n_draws {
                acc += weights[r] / total * z_dim.get(n, r, k) * score_sigma[r * n_comp + k];
            }
            // d|s|/ds, taking the right derivative at zero.
            let sign = if theta[index] >= 0.0 { 1.0 } else { -1.0 };
            grad[index] += sign * acc;
        }
        Ok(Evaluation {
            log_prob,
            gradient: Some(grad),
        })
    }

    fn evaluate_all(&self, theta: &[f64], want_gradient: bool) -> Result<Vec<Evaluation>> {
        self.check_theta(theta)?;
        (0..self.panel.n_individuals())
            .into_par_iter()
            .map(|n| self.evaluate(n, theta, want_gradient))
            .collect()
    }

    /// Log of the simulated probability of respondent `n`'s choice sequence.
    pub fn individual_log_probability(&self, n: usize, theta: &[f64]) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(self.evaluate(n, theta, false)?.log_prob)
    }

    pub fn panel_probability(&self, n: usize, theta: &[f64]) -> Result<f64> {
        Ok(self.individual_log_probability(n, theta)?.exp())
    }

    /// `theta` holds every coefficient in specification order.
    pub fn loglik(&self, theta: &[f64]) -> Result<f64> {
        let ll: f64 = self
            .evaluate_all(theta, false)?
            .iter()
            .map(|e| e.log_prob)
            .sum();
        if !ll.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(ll)
    }

    /// Log-likelihood and its gradient over every coefficient.
    pub fn loglik_gradient(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let evals = self.evaluate_all(theta, true)?;
        let mut ll = 0.0;
        let mut grad = vec![0.0; self.panel.n_params];
        for e in evals {
            ll += e.log_prob;
            for (g, x) in grad.iter_mut().zip(e.gradient.expect("gradient requested")) {
                *g += x;
            }
        }
        if !ll.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok((ll, grad))
    }
}

/// Simulated log-likelihood of `dataset` at `params`. `draws` rows follow
/// the dataset's respondent order.
pub fn simulated_loglik(
    dataset: &ChoiceDataset,
    spec: &ModelSpec,
    params: &ParameterVector,
    draws: Option<DrawMatrix>,
) -> Result<f64> {
    let params = params.aligned_to(spec)?;
    let lik = SimulatedLikelihood::new(CompiledPanel::compile(dataset, spec)?, draws)?;
    lik.loglik(&params.values())
}

/// Gradient of the simulated log-likelihood over the free parameters, as
/// (name, derivative) pairs in specification order.
pub fn gradient(
    dataset: &ChoiceDataset,
    spec: &ModelSpec,
    params: &ParameterVector,
    draws: Option<DrawMatrix>,
) -> Result<Vec<(String, f64)>> {
    let params = params.aligned_to(spec)?;
    let lik = SimulatedLikelihood::new(CompiledPanel::compile(dataset, spec)?, draws)?;
    let (_, grad) = lik.loglik_gradient(&params.values())?;
    Ok(params
        .free_positions()
        .into_iter()
        .map(|i| (params.entries()[i].name.clone(), grad[i]))
        .collect())
}
