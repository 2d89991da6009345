//! Joint least-squares fit of the three relaxation times to ground-state
//! population curves measured after preparing `|1>`, `|2>` and `|3>`.
//!
//! Parameters are fitted in log space (keeps them positive and makes the fit
//! invariant under a common rescaling of times) with a Levenberg-Marquardt
//! iteration on a central-difference Jacobian, restarted from three
//! perturbed initial guesses.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ReadoutError, Result};
use crate::levels::{populations, DecayRates, Level};

/// Ground-state population measured at `times` (us) after preparing `prepared`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecaySeries {
    pub prepared: Level,
    pub times: Vec<f64>,
    pub p0: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Fit a shared preparation-error offset `b`: `p0 -> b + (1 - b) p0`.
    pub fit_baseline: bool,
    pub max_iterations: usize,
    /// Multiplicative perturbations of the initial guess, one per start.
    pub starts: Vec<[f64; 3]>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            fit_baseline: false,
            max_iterations: 200,
            starts: vec![[1.0, 1.0, 1.0], [1.3, 0.8, 1.2], [0.8, 1.25, 0.75]],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rates: DecayRates,
    pub baseline: Option<f64>,
    /// Covariance of `(T01, T12, T23[, baseline])`.
    pub covariance: Vec<Vec<f64>>,
    /// Root-mean-square residual of each input series, in input order.
    pub residual_rms: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
}

struct Problem<'a> {
    series: &'a [DecaySeries],
    fit_baseline: bool,
    points: usize,
}

impl Problem<'_> {
    fn params(&self) -> usize {
        if self.fit_baseline {
            4
        } else {
            3
        }
    }

    fn unpack(&self, theta: &DVector<f64>) -> (DecayRates, f64) {
        let rates = DecayRates {
            t01: theta[0].exp(),
            t12: theta[1].exp(),
            t23: theta[2].exp(),
        };
        let baseline = if self.fit_baseline { theta[3] } else { 0.0 };
        (rates, baseline)
    }

    fn residuals(&self, theta: &DVector<f64>) -> Result<DVector<f64>> {
        let (rates, baseline) = self.unpack(theta);
        let mut r = DVector::zeros(self.points);
        let mut k = 0;
        for s in self.series {
            for (&t, &y) in s.times.iter().zip(&s.p0) {
                let p0 = populations(&rates, s.prepared, t)?.p[0];
                r[k] = baseline + (1.0 - baseline) * p0 - y;
                k += 1;
            }
        }
        Ok(r)
    }

    fn jacobian(&self, theta: &DVector<f64>) -> Result<DMatrix<f64>> {
        let mut jac = DMatrix::zeros(self.points, self.params());
        for j in 0..self.params() {
            let h = 1e-6 * theta[j].abs().max(1.0);
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[j] += h;
            minus[j] -= h;
            let col = (self.residuals(&plus)? - self.residuals(&minus)?) / (2.0 * h);
            jac.set_column(j, &col);
        }
        Ok(jac)
    }
}

struct Solution {
    theta: DVector<f64>,
    cost: f64,
    iterations: usize,
    converged: bool,
}

fn levenberg_marquardt(
    problem: &Problem,
    start: DVector<f64>,
    max_iterations: usize,
) -> Result<Solution> {
    let mut theta = start;
    let mut r = problem.residuals(&theta)?;
    let mut cost = 0.5 * r.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iterations {
        iterations += 1;
        let jac = problem.jacobian(&theta)?;
        let jtj = jac.transpose() * &jac;
        let gradient = jac.transpose() * &r;
        if gradient.amax() < 1e-16 {
            converged = true;
            break;
        }
        let mut improved = false;
        while lambda < 1e16 {
            let mut damped = jtj.clone();
            for i in 0..damped.nrows() {
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = damped.lu().solve(&(-&gradient)) else {
                lambda *= 10.0;
                continue;
            };
            let candidate = &theta + &step;
            let r_new = problem.residuals(&candidate)?;
            let cost_new = 0.5 * r_new.norm_squared();
            if cost_new.is_finite() && cost_new <= cost {
                let decrease = cost - cost_new;
                theta = candidate;
                r = r_new;
                cost = cost_new;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if step.amax() < 1e-12 || decrease <= 1e-15 * cost.max(1e-300) {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // No downhill step at any damping: a (numerical) minimum.
            converged = true;
        }
        if converged {
            break;
        }
    }
    Ok(Solution {
        theta,
        cost,
        iterations,
        converged,
    })
}

/// Fits `(T01, T12, T23)` jointly to the supplied ground-state curves.
///
/// Curves for `|1>`, `|2>` and `|3>` are required; a `|0>` curve is accepted
/// but carries no information.
pub fn fit_decay_curves(
    series: &[DecaySeries],
    initial: &DecayRates,
    options: &FitOptions,
) -> Result<DecayFit> {
    initial.validate()?;
    if !initial.is_finite() {
        return Err(ReadoutError::InvalidArgument(
            "initial guess must be finite".into(),
        ));
    }
    for s in series {
        if s.times.len() != s.p0.len() {
            return Err(ReadoutError::InvalidArgument(format!(
                "series for {} has {} times but {} values",
                s.prepared,
                s.times.len(),
                s.p0.len()
            )));
        }
        if s.times.len() < 3 {
            return Err(ReadoutError::InvalidArgument(format!(
                "series for {} needs at least 3 points",
                s.prepared
            )));
        }
        if s.times.iter().chain(&s.p0).any(|v| !v.is_finite()) || s.times.iter().any(|&t| t < 0.0) {
            return Err(ReadoutError::InvalidArgument(format!(
                "series for {} contains invalid samples",
                s.prepared
            )));
        }
    }
    for needed in [Level::One, Level::Two, Level::Three] {
        if !series.iter().any(|s| s.prepared == needed) {
            return Err(ReadoutError::InvalidArgument(format!(
                "a decay curve for {needed} is required"
            )));
        }
    }
    if options.starts.is_empty() {
        return Err(ReadoutError::InvalidArgument(
            "at least one start is required".into(),
        ));
    }

    let problem = Problem {
        series,
        fit_baseline: options.fit_baseline,
        points: series.iter().map(|s| s.times.len()).sum(),
    };
    let dof = problem.points.saturating_sub(problem.params()).max(1);

    let mut best: Option<Solution> = None;
    let mut total_iterations = 0;
    for factors in &options.starts {
        let mut theta = DVector::zeros(problem.params());
        theta[0] = (initial.t01 * factors[0]).ln();
        theta[1] = (initial.t12 * factors[1]).ln();
        theta[2] = (initial.t23 * factors[2]).ln();
        let sol = levenberg_marquardt(&problem, theta, options.max_iterations)?;
        total_iterations += sol.iterations;
        if sol.converged && best.as_ref().is_none_or(|b| sol.cost < b.cost) {
            best = Some(sol);
        }
    }
    let best = best.ok_or(ReadoutError::FitNotConverged {
        iterations: total_iterations,
        cost: f64::NAN,
    })?;

    let (rates, baseline) = problem.unpack(&best.theta);
    let jac = problem.jacobian(&best.theta)?;
    let variance = 2.0 * best.cost / dof as f64;
    let p = problem.params();
    let covariance = match (jac.transpose() * &jac).try_inverse() {
        Some(inv) => {
            // d T / d ln T = T; the baseline is fitted directly.
            let scale: Vec<f64> = (0..p)
                .map(|i| if i < 3 { best.theta[i].exp() } else { 1.0 })
                .collect();
            (0..p)
                .map(|i| {
                    (0..p)
                        .map(|j| inv[(i, j)] * variance * scale[i] * scale[j])
                        .collect()
                })
                .collect()
        }
        None => vec![vec![f64::NAN; p]; p],
    };

    let r = problem.residuals(&best.theta)?;
    let mut offset = 0;
    let residual_rms = series
        .iter()
        .map(|s| {
            let n = s.times.len();
            let rms = (r.rows(offset, n).norm_squared() / n as f64).sqrt();
            offset += n;
            rms
        })
        .collect();

    Ok(DecayFit {
        rates,
        baseline: options.fit_baseline.then_some(baseline),
        covariance,
        residual_rms,
        cost: best.cost,
        iterations: best.iterations,
    })
}
