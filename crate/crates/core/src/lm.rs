//! Levenberg-Marquardt damped least squares over the free parameters.
//!
//! Each trial solves `(JᵀJ + λ·diag(JᵀJ))·s = Jᵀr` by Cholesky. A trial that
//! lowers the sum of squares is accepted and λ shrinks; a trial that raises
//! it, leaves the admissible region, or hits a singular system is rejected
//! and λ grows. Every trial counts as one iteration. With large λ the step
//! tends to diagonally scaled steepest descent, with small λ to Gauss-Newton.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FitError, ModelError};
use crate::model::{CesParams, ParamId};
use crate::objective::{jacobian, residuals, sum_of_squares, FreeMask, Scale};
use crate::Observation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmOptions {
    pub max_iterations: usize,
    pub lambda_init: f64,
    pub lambda_factor: f64,
    pub rss_rel_tol: f64,
    pub grad_tol: f64,
    pub step_tol: f64,
    pub lambda_max: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            lambda_init: 1e-3,
            lambda_factor: 10.0,
            rss_rel_tol: 1e-10,
            grad_tol: 1e-8,
            step_tol: 1e-12,
            lambda_max: 1e12,
        }
    }
}

impl LmOptions {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("lambda_init", self.lambda_init),
            ("rss_rel_tol", self.rss_rel_tol),
            ("grad_tol", self.grad_tol),
            ("step_tol", self.step_tol),
            ("lambda_max", self.lambda_max),
        ];
        if self.max_iterations == 0 {
            return Err("max_iterations must be positive".into());
        }
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.lambda_factor > 1.0) {
            return Err(format!("lambda_factor must exceed 1, got {}", self.lambda_factor));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LmStatus {
    ConvergedRss,
    ConvergedGradient,
    ConvergedStep,
    MaxIterations,
    DampingOverflow,
    /// Never produced by [`lm_fit`] itself (it returns an error instead); used
    /// for grid cells where no start was admissible.
    InadmissibleStart,
}

impl LmStatus {
    pub fn converged(self) -> bool {
        matches!(
            self,
            LmStatus::ConvergedRss | LmStatus::ConvergedGradient | LmStatus::ConvergedStep
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LmStatus::ConvergedRss => "ConvergedRss",
            LmStatus::ConvergedGradient => "ConvergedGradient",
            LmStatus::ConvergedStep => "ConvergedStep",
            LmStatus::MaxIterations => "MaxIterations",
            LmStatus::DampingOverflow => "DampingOverflow",
            LmStatus::InadmissibleStart => "InadmissibleStart",
        }
    }
}

impl std::fmt::Display for LmStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LmStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "ConvergedRss" => LmStatus::ConvergedRss,
            "ConvergedGradient" => LmStatus::ConvergedGradient,
            "ConvergedStep" => LmStatus::ConvergedStep,
            "MaxIterations" => LmStatus::MaxIterations,
            "DampingOverflow" => LmStatus::DampingOverflow,
            "InadmissibleStart" => LmStatus::InadmissibleStart,
            other => return Err(format!("unknown status `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmOutcome {
    /// Best accepted point.
    pub params: CesParams,
    pub rss: f64,
    pub iterations: usize,
    pub status: LmStatus,
    /// Sum of squares at the start followed by every accepted step.
    pub rss_trace: Vec<f64>,
}

/// Solves `(JᵀJ + λ·D)·s = Jᵀr` where `D` is the diagonal of `JᵀJ`, floored
/// so that zero columns still yield a positive definite system. Returns
/// `None` when the Cholesky factorization fails.
pub fn damped_step(jtj: &DMatrix<f64>, jtr: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let max_diag = jtj.diagonal().iter().fold(0.0_f64, |m, &d| m.max(d));
    let floor = if max_diag > 0.0 {
        max_diag * f64::EPSILON
    } else {
        f64::MIN_POSITIVE
    };
    let mut system = jtj.clone();
    for i in 0..system.nrows() {
        system[(i, i)] += lambda * jtj[(i, i)].max(floor);
    }
    let chol = system.cholesky()?;
    let step = chol.solve(jtr);
    step.iter().all(|v| v.is_finite()).then_some(step)
}

struct Problem<'a> {
    data: &'a [Observation],
    mask: FreeMask,
    scale: Scale,
    base: CesParams,
    free: Vec<ParamId>,
}

impl Problem<'_> {
    fn params(&self, theta: &DVector<f64>) -> CesParams {
        let mut p = self.base;
        for (id, &v) in self.free.iter().zip(theta.iter()) {
            p.set(*id, v);
        }
        p
    }

    /// Residual vector, or `None` when the point is outside the admissible
    /// region (non-positive A, non-positive aggregate, non-finite values).
    fn residuals(&self, params: &CesParams) -> Option<DVector<f64>> {
        if !(params.efficiency_a > 0.0) {
            return None;
        }
        let r = residuals(params, self.data, self.scale).ok()?;
        r.iter().all(|v| v.is_finite()).then(|| DVector::from_vec(r))
    }

    fn normal_equations(&self, params: &CesParams, r: &DVector<f64>) -> Option<(DMatrix<f64>, DVector<f64>)> {
        let j = jacobian(params, self.data, &self.mask, self.scale).ok()?;
        if j.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some((j.tr_mul(&j), j.tr_mul(r)))
    }
}

/// Fits the free parameters of `init` to `data`.
///
/// Returns [`FitError::InadmissibleStart`] when `init` cannot be evaluated on
/// every observation. The returned parameters never have a larger sum of
/// squares than `init`.
pub fn lm_fit(
    data: &[Observation],
    init: &CesParams,
    mask: &FreeMask,
    scale: Scale,
    options: &LmOptions,
) -> Result<LmOutcome, FitError> {
    if data.is_empty() {
        return Err(FitError::EmptyData);
    }
    let p = mask.count();
    if p == 0 {
        return Err(FitError::NoFreeParameters);
    }
    if data.len() <= p {
        return Err(FitError::TooFewObservations { n: data.len(), p });
    }
    if !(init.efficiency_a > 0.0) {
        return Err(FitError::InadmissibleStart {
            index: 0,
            source: ModelError::NonPositiveEfficiency(init.efficiency_a),
        });
    }
    // locate the offending observation for the error report
    if let Err(FitError::Observation { index, source }) = residuals(init, data, scale) {
        return Err(FitError::InadmissibleStart { index, source });
    }

    let problem = Problem {
        data,
        mask: *mask,
        scale,
        base: *init,
        free: mask.free_ids().collect(),
    };
    let mut theta = DVector::from_iterator(p, problem.free.iter().map(|&id| init.get(id)));
    let mut params = *init;
    let Some(mut r) = problem.residuals(&params) else {
        return Err(FitError::InadmissibleStart {
            index: 0,
            source: ModelError::NonFinite,
        });
    };
    let mut rss = sum_of_squares(r.as_slice());
    let mut trace = vec![rss];
    let mut lambda = options.lambda_init;
    let mut iterations = 0;

    let finish = |params: CesParams, rss: f64, iterations: usize, status: LmStatus, trace: Vec<f64>| LmOutcome {
        params,
        rss,
        iterations,
        status,
        rss_trace: trace,
    };

    let Some((mut jtj, mut jtr)) = problem.normal_equations(&params, &r) else {
        return Ok(finish(params, rss, 0, LmStatus::DampingOverflow, trace));
    };
    if jtr.amax() < options.grad_tol {
        return Ok(finish(params, rss, 0, LmStatus::ConvergedGradient, trace));
    }

    loop {
        if iterations >= options.max_iterations {
            return Ok(finish(params, rss, iterations, LmStatus::MaxIterations, trace));
        }
        iterations += 1;

        let accepted = damped_step(&jtj, &jtr, lambda).and_then(|step| {
            if step.amax() < options.step_tol * (theta.amax() + options.step_tol) {
                return Some(Err(()));
            }
            let candidate_theta = &theta + &step;
            let candidate = problem.params(&candidate_theta);
            let r_new = problem.residuals(&candidate)?;
            let rss_new = sum_of_squares(r_new.as_slice());
            (rss_new < rss).then_some(Ok((candidate_theta, candidate, r_new, rss_new)))
        });

        match accepted {
            Some(Err(())) => {
                return Ok(finish(params, rss, iterations, LmStatus::ConvergedStep, trace));
            }
            None => {
                lambda *= options.lambda_factor;
                if lambda > options.lambda_max {
                    return Ok(finish(params, rss, iterations, LmStatus::DampingOverflow, trace));
                }
            }
            Some(Ok((t, cand, r_new, rss_new))) => {
                let rel_change = (rss - rss_new) / rss;
                theta = t;
                params = cand;
                r = r_new;
                rss = rss_new;
                trace.push(rss);
                lambda /= options.lambda_factor;
                if rel_change < options.rss_rel_tol {
                    return Ok(finish(params, rss, iterations, LmStatus::ConvergedRss, trace));
                }
                match problem.normal_equations(&params, &r) {
                    Some((a, b)) => {
                        jtj = a;
                        jtr = b;
                    }
                    None => {
                        return Ok(finish(params, rss, iterations, LmStatus::DampingOverflow, trace));
                    }
                }
                if jtr.amax() < options.grad_tol {
                    return Ok(finish(params, rss, iterations, LmStatus::ConvergedGradient, trace));
                }
            }
        }
    }
}
