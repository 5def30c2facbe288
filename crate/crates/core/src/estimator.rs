//! Maximum simulated likelihood estimation.
//!
//! BFGS with a strong Wolfe line search minimizes the negative simulated
//! log-likelihood over the free parameters. Standard errors come from the
//! negated inverse of a central-difference Hessian of the analytic gradient.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::likelihood::{FitStatistics, SimulatedLikelihood};
use crate::model::{ChoiceDataset, CoefficientDecl, ModelSpec, ParameterVector};

pub const DEFAULT_DRAWS: usize = 1000;
pub const DEFAULT_MAX_ITERATIONS: usize = 500;
pub const DEFAULT_GRADIENT_TOLERANCE: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationSettings {
    pub n_draws: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Multiplied by max(1, |LL| / 1000) before comparison with the
    /// gradient infinity norm.
    pub gradient_tolerance: f64,
    pub compute_std_errors: bool,
}

impl EstimationSettings {
    pub fn new(seed: u64) -> Self {
        Self {
            n_draws: DEFAULT_DRAWS,
            seed,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            gradient_tolerance: DEFAULT_GRADIENT_TOLERANCE,
            compute_std_errors: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    GradientTolerance,
    MaxIterations,
    LineSearchFailed,
    /// The line search failed where the quasi-Newton model predicts an
    /// improvement below the resolution of the objective.
    NoFurtherProgress,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub converged: bool,
    pub reason: StopReason,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Log-likelihood after each accepted step, starting value first.
    pub ll_history: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimationResult {
    pub estimates: ParameterVector,
    /// Names of the free parameters, the order of the vectors below.
    pub free_names: Vec<String>,
    /// `None` when the Hessian is not negative definite.
    pub std_errors: Option<Vec<f64>>,
    pub p_values: Option<Vec<f64>>,
    pub fit: FitStatistics,
    pub convergence: Convergence,
}

impl EstimationResult {
    fn free_index(&self, name: &str) -> Option<usize> {
        self.free_names.iter().position(|n| n == name)
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        Some(self.std_errors.as_ref()?[self.free_index(name)?])
    }

    pub fn p_value(&self, name: &str) -> Option<f64> {
        Some(self.p_values.as_ref()?[self.free_index(name)?])
    }

    /// Fails with the best-so-far diagnostics when the optimizer stopped
    /// short of the gradient tolerance.
    pub fn require_converged(&self) -> Result<&Self> {
        if self.convergence.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                iterations: self.convergence.iterations,
                gradient_norm: self.convergence.gradient_norm,
            })
        }
    }
}

/// Estimates `spec` on `dataset` from `start` with fresh MLHS draws keyed by
/// respondent id.
pub fn estimate(
    dataset: &ChoiceDataset,
    spec: &ModelSpec,
    start: &ParameterVector,
    settings: &EstimationSettings,
) -> Result<EstimationResult> {
    let lik = SimulatedLikelihood::with_mlhs(dataset, spec, settings.n_draws, settings.seed)?;
    estimate_with(&lik, dataset, spec, start, settings)
}

/// Estimation over a prepared likelihood (compiled panel and draws).
pub fn estimate_with(
    lik: &SimulatedLikelihood,
    dataset: &ChoiceDataset,
    spec: &ModelSpec,
    start: &ParameterVector,
    settings: &EstimationSettings,
) -> Result<EstimationResult> {
    let start = start.aligned_to(spec)?;
    let free = start.free_positions();
    let unidentified = lik.panel().unidentified();
    if let Some(&i) = free.iter().find(|i| unidentified.contains(i)) {
        return Err(Error::Unidentified(spec.coefficients[i].name.clone()));
    }

    let base = start.values();
    let expand = |x: &[f64]| {
        let mut theta = base.clone();
        for (k, &i) in free.iter().enumerate() {
            theta[i] = x[k];
        }
        theta
    };
    let objective = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let (ll, g) = lik.loglik_gradient(&expand(x))?;
        Ok((-ll, free.iter().map(|&i| -g[i]).collect()))
    };
    let x0: Vec<f64> = free.iter().map(|&i| base[i]).collect();
    let (x, neg_ll, convergence) = minimize_bfgs(&objective, &x0, settings)?;
    let theta = expand(&x);
    let estimates = start.with_values(&theta);
    let final_ll = -neg_ll;

    let (std_errors, p_values) = if settings.compute_std_errors && !free.is_empty() {
        let sigma_free: Vec<bool> = free
            .iter()
            .map(|&i| spec.is_sigma(&spec.coefficients[i].name))
            .collect();
        let gradient = |x: &[f64]| -> Result<Vec<f64>> {
            let (_, g) = lik.loglik_gradient(&expand(x))?;
            Ok(free.iter().map(|&i| g[i]).collect())
        };
        let hessian = numerical_hessian(&gradient, &x, &sigma_free)?;
        match std_errors(&hessian) {
            Ok(se) => {
                let p = x.iter().zip(&se).map(|(b, s)| p_value(b / s)).collect();
                (Some(se), Some(p))
            }
            Err(Error::SingularHessian) => (None, None),
            Err(e) => return Err(e),
        }
    } else {
        (None, None)
    };

    Ok(EstimationResult {
        free_names: free.iter().map(|&i| spec.coefficients[i].name.clone()).collect(),
        estimates,
        std_errors,
        p_values,
        fit: FitStatistics::new(dataset, final_ll, free.len())?,
        convergence,
    })
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Relative predicted decrease below which a failed line search ends the
/// search as converged.
const NEGLIGIBLE_DECREASE: f64 = 1e-11;

type Objective<'a> = dyn Fn(&[f64]) -> Result<(f64, Vec<f64>)> + 'a;

/// Minimizes `f` (value and gradient). Returns the minimizer, its value and
/// the stopping diagnostics. The gradient test uses the unscaled value.
pub fn minimize_bfgs(
    f: &Objective<'_>,
    x0: &[f64],
    settings: &EstimationSettings,
) -> Result<(Vec<f64>, f64, Convergence)> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x)?;
    let mut history = vec![-fx];
    let tolerance = |fx: f64| settings.gradient_tolerance * (fx.abs() / 1000.0).max(1.0);
    let finish = |x: Vec<f64>, fx: f64, g: &[f64], it: usize, reason, history| {
        let gradient_norm = inf_norm(g);
        let (converged, reason) = if gradient_norm < tolerance(fx) {
            (true, StopReason::GradientTolerance)
        } else {
            (reason == StopReason::NoFurtherProgress, reason)
        };
        Ok((
            x,
            fx,
            Convergence {
                converged,
                reason,
                iterations: it,
                gradient_norm,
                ll_history: history,
            },
        ))
    };
    if n == 0 {
        return finish(x, fx, &g, 0, StopReason::GradientTolerance, history);
    }

    let mut h = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;
    let mut first_step = true;
    for it in 0..settings.max_iterations {
        if inf_norm(&g) < tolerance(fx) {
            return finish(x, fx, &g, it, StopReason::GradientTolerance, history);
        }
        let gv = DVector::from_column_slice(&g);
        let mut p: Vec<f64> = (-(&h * &gv)).iter().copied().collect();
        if dot(&p, &g) >= 0.0 {
            h = DMatrix::identity(n, n);
            fresh = true;
            p = g.iter().map(|v| -v).collect();
        }
        let alpha0 = if first_step {
            (1.0 / inf_norm(&g)).min(1.0)
        } else {
            1.0
        };
        let step = match line_search(f, &x, fx, &g, &p, alpha0)? {
            Some(step) => step,
            None if !fresh && -dot(&p, &g) < NEGLIGIBLE_DECREASE * fx.abs().max(1.0) => {
                return finish(x, fx, &g, it, StopReason::NoFurtherProgress, history);
            }
            None if !fresh => {
                h = DMatrix::identity(n, n);
                fresh = true;
                continue;
            }
            None => return finish(x, fx, &g, it, StopReason::LineSearchFailed, history),
        };
        let s: Vec<f64> = p.iter().map(|pi| step.alpha * pi).collect();
        let y: Vec<f64> = step.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        x = x.iter().zip(&s).map(|(xi, si)| xi + si).collect();
        fx = step.f;
        g = step.g;
        history.push(-fx);

        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if first_step || fresh {
                h = DMatrix::identity(n, n) * (sy / dot(&y, &y));
            }
            let sv = DVector::from_vec(s);
            let yv = DVector::from_vec(y);
            let hy = &h * &yv;
            let yhy = yv.dot(&hy);
            h += (&sv * sv.transpose()) * ((sy + yhy) / (sy * sy))
                - (&hy * sv.transpose() + &sv * hy.transpose()) / sy;
            fresh = false;
        }
        first_step = false;
    }
    let it = settings.max_iterations;
    finish(x, fx, &g, it, StopReason::MaxIterations, history)
}

struct Step {
    alpha: f64,
    f: f64,
    g: Vec<f64>,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;

/// Strong Wolfe line search along `p`. Failed evaluations count as
/// overshooting. Returns `None` when no step with sufficient decrease is
/// found.
fn line_search(
    f: &Objective<'_>,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    p: &[f64],
    alpha0: f64,
) -> Result<Option<Step>> {
    let d0 = dot(g0, p);
    if d0 >= 0.0 {
        return Ok(None);
    }
    let eval = |alpha: f64| -> Option<(f64, Vec<f64>, f64)> {
        let xt: Vec<f64> = x.iter().zip(p).map(|(xi, pi)| xi + alpha * pi).collect();
        match f(&xt) {
            Ok((fv, gv)) if fv.is_finite() && gv.iter().all(|v| v.is_finite()) => {
                let d = dot(&gv, p);
                Some((fv, gv, d))
            }
            _ => None,
        }
    };
    let armijo = |alpha: f64, fv: f64| fv <= f0 + C1 * alpha * d0;

    let mut prev = (0.0, f0, d0);
    let mut alpha = alpha0;
    for i in 0..40 {
        let Some((fv, gv, d)) = eval(alpha) else {
            return zoom(&eval, &armijo, prev, (alpha, f64::INFINITY, f64::NAN), f0, d0);
        };
        if !armijo(alpha, fv) || (i > 0 && fv >= prev.1) {
            return zoom(&eval, &armijo, prev, (alpha, fv, d), f0, d0);
        }
        if d.abs() <= -C2 * d0 {
            return Ok(Some(Step { alpha, f: fv, g: gv }));
        }
        if d >= 0.0 {
            return zoom(&eval, &armijo, (alpha, fv, d), prev, f0, d0);
        }
        prev = (alpha, fv, d);
        alpha *= 2.0;
    }
    Ok(None)
}

type Probe<'a> = dyn Fn(f64) -> Option<(f64, Vec<f64>, f64)> + 'a;

fn zoom(
    eval: &Probe<'_>,
    armijo: &dyn Fn(f64, f64) -> bool,
    mut lo: (f64, f64, f64),
    mut hi: (f64, f64, f64),
    f0: f64,
    d0: f64,
) -> Result<Option<Step>> {
    let mut best: Option<Step> = None;
    for _ in 0..60 {
        let width = hi.0 - lo.0;
        if width.abs() <= 1e-14 * lo.0.abs().max(1e-10) {
            break;
        }
        // Quadratic through (lo, f_lo, d_lo) and f_hi, safeguarded.
        let mut alpha = if hi.1.is_finite() {
            let denom = 2.0 * (hi.1 - lo.1 - lo.2 * width);
            if denom > 0.0 {
                lo.0 - lo.2 * width * width / denom
            } else {
                lo.0 + 0.5 * width
            }
        } else {
            lo.0 + 0.5 * width
        };
        let (a, b) = (lo.0 + 0.1 * width, lo.0 + 0.9 * width);
        let (min, max) = if a < b { (a, b) } else { (b, a) };
        if !(alpha >= min && alpha <= max) {
            alpha = lo.0 + 0.5 * width;
        }
        let Some((fv, gv, d)) = eval(alpha) else {
            hi = (alpha, f64::INFINITY, f64::NAN);
            continue;
        };
        if !armijo(alpha, fv) || fv >= lo.1 {
            hi = (alpha, fv, d);
        } else {
            if d.abs() <= -C2 * d0 {
                return Ok(Some(Step { alpha, f: fv, g: gv }));
            }
            if d * (hi.0 - lo.0) >= 0.0 {
                hi = lo;
            }
            lo = (alpha, fv, d);
            if best.as_ref().is_none_or(|b| fv < b.f) {
                best = Some(Step { alpha, f: fv, g: gv });
            }
        }
    }
    // Curvature never satisfied: accept the best sufficient-decrease point.
    Ok(best.filter(|b| b.f < f0))
}

/// Central-difference Jacobian of `gradient` at `x`, symmetrized. Entries
/// flagged in `abs_kink` enter the model as absolute values; their steps
/// stay on one side of zero.
pub fn numerical_hessian(
    gradient: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    x: &[f64],
    abs_kink: &[bool],
) -> Result<DMatrix<f64>> {
    let n = x.len();
    let mut h = DMatrix::<f64>::zeros(n, n);
    let g0 = if abs_kink.iter().any(|k| *k) {
        Some(gradient(x)?)
    } else {
        None
    };
    for j in 0..n {
        let step = 1e-5 * x[j].abs().max(1.0);
        let column: Vec<f64> = if abs_kink.get(j).copied().unwrap_or(false) && x[j].abs() < 2.0 * step
        {
            let side = if x[j] >= 0.0 { step } else { -step };
            let mut up = x.to_vec();
            up[j] += side;
            let gu = gradient(&up)?;
            let g0 = g0.as_ref().expect("base gradient computed");
            gu.iter().zip(g0).map(|(a, b)| (a - b) / side).collect()
        } else {
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[j] += step;
            down[j] -= step;
            let gu = gradient(&up)?;
            let gd = gradient(&down)?;
            let width = up[j] - down[j];
            gu.iter().zip(&gd).map(|(a, b)| (a - b) / width).collect()
        };
        for i in 0..n {
            h[(i, j)] = column[i];
        }
    }
    let sym = (&h + h.transpose()) * 0.5;
    if sym.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(sym)
}

/// Classical standard errors: square roots of the diagonal of (-H)^-1.
pub fn std_errors(hessian: &DMatrix<f64>) -> Result<Vec<f64>> {
    let neg = -hessian.clone();
    let chol = neg.cholesky().ok_or(Error::SingularHessian)?;
    let cov = chol.inverse();
    let se: Vec<f64> = cov.diagonal().iter().map(|v| v.sqrt()).collect();
    if se.iter().any(|s| !s.is_finite() || *s <= 0.0) {
        return Err(Error::SingularHessian);
    }
    Ok(se)
}

/// Two-sided normal p-value of a t statistic.
pub fn p_value(t: f64) -> f64 {
    erfc(t.abs() / std::f64::consts::SQRT_2)
}

/// Value of travel time in euros per hour from per-minute time and per-euro
/// cost coefficients.
pub fn vot(time_coeff: f64, cost_coeff: f64) -> Result<f64> {
    if cost_coeff == 0.0 {
        return Err(Error::ZeroCostCoefficient);
    }
    Ok(60.0 * time_coeff / cost_coeff)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodRatioTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Tests a restricted model (for example with pooled coefficients) against
/// the unrestricted one; `df` is the number of restrictions.
pub fn likelihood_ratio_test(
    ll_unrestricted: f64,
    ll_restricted: f64,
    df: usize,
) -> Result<LikelihoodRatioTest> {
    if df == 0 {
        return Err(Error::ZeroCount("likelihood ratio degrees of freedom"));
    }
    let statistic = (2.0 * (ll_unrestricted - ll_restricted)).max(0.0);
    let chi = ChiSquared::new(df as f64).map_err(|e| Error::Specification(e.to_string()))?;
    Ok(LikelihoodRatioTest {
        statistic,
        df,
        p_value: chi.sf(statistic),
    })
}

/// Replaces `members` by one generic coefficient `pooled`, declared where
/// the first member was. Equality-constrained re-estimation then amounts to
/// estimating the returned specification.
pub fn pool_coefficients(spec: &ModelSpec, members: &[&str], pooled: &str) -> Result<ModelSpec> {
    if members.len() < 2 {
        return Err(Error::Specification("pooling needs at least two coefficients".into()));
    }
    let mut first = None;
    for m in members {
        let i = spec
            .coefficient_index(m)
            .ok_or_else(|| Error::UnknownCoefficient((*m).to_string()))?;
        if spec.is_sigma(m) {
            return Err(Error::Specification(format!(
                "`{m}` is a standard deviation and cannot be pooled"
            )));
        }
        first = Some(first.map_or(i, |f: usize| f.min(i)));
    }
    let first = first.expect("members nonempty");
    let mut out = spec.clone();
    let decl = CoefficientDecl {
        name: pooled.to_string(),
        label: format!("Pooled: {}", members.join(", ")),
        group: spec.coefficients[first].group,
        start: None,
    };
    out.coefficients = Vec::with_capacity(spec.coefficients.len());
    for (i, c) in spec.coefficients.iter().enumerate() {
        if i == first {
            out.coefficients.push(decl.clone());
        } else if !members.contains(&c.name.as_str()) {
            out.coefficients.push(c.clone());
        }
    }
    for term in &mut out.terms {
        if members.contains(&term.coefficient.as_str()) {
            term.coefficient = pooled.to_string();
        }
    }
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_std_error() {
        for a in [0.5, 4.0, 100.0] {
            let h = DMatrix::from_element(1, 1, -a);
            let se = std_errors(&h).unwrap();
            assert!((se[0] - 1.0 / a.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_std_errors() {
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![-4.0, -9.0, -0.25]));
        let se = std_errors(&h).unwrap();
        assert_eq!(se, vec![0.5, 1.0 / 3.0, 2.0]);
    }

    #[test]
    fn indefinite_hessian_is_singular() {
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![-4.0, 1.0]));
        assert!(matches!(std_errors(&h), Err(Error::SingularHessian)));
        let h = DMatrix::from_element(2, 2, -1.0);
        assert!(matches!(std_errors(&h), Err(Error::SingularHessian)));
    }

    #[test]
    fn vot_examples() {
        assert!((vot(-0.05, -0.47).unwrap() - 6.4).abs() < 0.05);
        assert!((vot(-0.06, -0.28).unwrap() - 12.9).abs() < 0.05);
        assert_eq!(vot(-1.0, -1.0).unwrap(), 60.0);
        assert!(matches!(vot(-1.0, 0.0), Err(Error::ZeroCostCoefficient)));
    }

    #[test]
    fn p_value_of_normal_test() {
        assert!((p_value(1.959963984540054) - 0.05).abs() < 1e-10);
        assert_eq!(p_value(0.0), 1.0);
        assert_eq!(p_value(-2.5), p_value(2.5));
    }

    #[test]
    fn lr_test_matches_chi_square() {
        let t = likelihood_ratio_test(-100.0, -101.920729, 1).unwrap();
        assert!((t.statistic - 3.841458).abs() < 1e-5);
        assert!((t.p_value - 0.05).abs() < 1e-6);
        assert!(likelihood_ratio_test(-1.0, -2.0, 0).is_err());
    }

    #[test]
    fn bfgs_minimizes_rosenbrock() {
        let f = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ];
            Ok((v, g))
        };
        let mut settings = EstimationSettings::new(0);
        settings.gradient_tolerance = 1e-9;
        let (x, v, conv) = minimize_bfgs(&f, &[-1.2, 1.0], &settings).unwrap();
        assert!(conv.converged, "{conv:?}");
        assert!((x[0] - 1.0).abs() < 1e-6 && (x[1] - 1.0).abs() < 1e-6);
        assert!(v < 1e-12);
        assert!(conv.ll_history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn bfgs_at_the_optimum_stops_immediately() {
        let f = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            Ok((x[0] * x[0] + 3.0, vec![2.0 * x[0]]))
        };
        let (x, v, conv) = minimize_bfgs(&f, &[0.0], &EstimationSettings::new(0)).unwrap();
        assert_eq!((x[0], v, conv.iterations), (0.0, 3.0, 0));
        assert!(conv.converged);
    }

    #[test]
    fn hessian_of_a_quadratic() {
        let grad = |x: &[f64]| -> Result<Vec<f64>> {
            Ok(vec![-2.0 * x[0] - x[1], -x[0] - 6.0 * x[1]])
        };
        let h = numerical_hessian(&grad, &[0.3, -2.0], &[false, false]).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[-2.0, -1.0, -1.0, -6.0]);
        assert!((h - expected).abs().max() < 1e-8);
    }
}
