//! Residuals, the sum-of-squares objective, and the analytic Jacobian of
//! predictions with respect to the free parameters.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{FitError, ModelError};
use crate::model::{eval_ces, expm1_ratio, ln_eval_ces, CesParams, Nest, Observation, ParamId};

/// Scale in which residuals are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Scale {
    /// `r = V − V̂`
    #[default]
    Levels,
    /// `r = ln V − ln V̂`
    Logs,
}

impl Scale {
    /// Observed output in this scale.
    pub fn observed(self, output: f64) -> f64 {
        match self {
            Scale::Levels => output,
            Scale::Logs => output.ln(),
        }
    }
}

/// Which of `A, δ, δ₁, ρ, ρ₁` are estimated (true) or held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FreeMask([bool; 5]);

impl FreeMask {
    pub fn new(flags: [bool; 5]) -> Result<Self, FitError> {
        if flags.iter().any(|&f| f) {
            Ok(Self(flags))
        } else {
            Err(FitError::NoFreeParameters)
        }
    }

    pub fn all() -> Self {
        Self([true; 5])
    }

    /// `A, δ, δ₁` free with both substitution parameters fixed, the
    /// arrangement used at every grid cell.
    pub fn shares() -> Self {
        Self([true, true, true, false, false])
    }

    pub fn only(id: ParamId) -> Self {
        let mut flags = [false; 5];
        flags[id as usize] = true;
        Self(flags)
    }

    pub fn is_free(&self, id: ParamId) -> bool {
        self.0[id as usize]
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&f| f).count()
    }

    /// Free parameters in column order.
    pub fn free_ids(&self) -> impl Iterator<Item = ParamId> + '_ {
        ParamId::ALL.into_iter().filter(|&id| self.is_free(id))
    }

    pub fn flags(&self) -> [bool; 5] {
        self.0
    }
}

fn at(index: usize) -> impl FnOnce(ModelError) -> FitError {
    move |source| FitError::Observation { index, source }
}

/// Predicted output in the given scale for every observation.
pub fn predictions(params: &CesParams, data: &[Observation], scale: Scale) -> Result<Vec<f64>, FitError> {
    data.iter()
        .enumerate()
        .map(|(i, obs)| {
            match scale {
                Scale::Levels => eval_ces(params, obs.capital, obs.labor),
                Scale::Logs => ln_eval_ces(params, obs.capital, obs.labor),
            }
            .map_err(at(i))
        })
        .collect()
}

/// Observed minus predicted, in input order.
pub fn residuals(params: &CesParams, data: &[Observation], scale: Scale) -> Result<Vec<f64>, FitError> {
    let fitted = predictions(params, data, scale)?;
    Ok(data
        .iter()
        .zip(fitted)
        .map(|(obs, f)| scale.observed(obs.output) - f)
        .collect())
}

/// Left-to-right sum of squares, so the value is reproducible bit for bit.
pub fn sum_of_squares(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |acc, r| acc + r * r)
}

pub fn rss(params: &CesParams, data: &[Observation], scale: Scale) -> Result<f64, FitError> {
    residuals(params, data, scale).map(|r| sum_of_squares(&r))
}

/// Step for the central-difference fallback on substitution parameters that
/// sit on the Cobb-Douglas limit path.
const LIMIT_FD_STEP: f64 = 1e-5;

/// `∂ ln V̂ / ∂θ` for one observation and every parameter, in column order.
pub(crate) fn log_gradient(params: &CesParams, obs: &Observation) -> Result<[f64; 5], ModelError> {
    let nest = Nest::new(params, obs.capital, obs.labor)?;
    // ∂ln X/∂δ₁ = (L^(−ρ₁)/S)·expm1(−ρ₁ ln(K/L))/(−ρ₁)
    let dlnx_ddelta1 = nest.l_over_s * expm1_ratio(-params.rho1, nest.ln_r);

    let mut grad = [0.0; 5];
    grad[ParamId::Efficiency as usize] = 1.0 / params.efficiency_a;
    grad[ParamId::Delta as usize] = nest.w_over_b * expm1_ratio(-params.rho, nest.ln_xk + nest.ln_l);
    grad[ParamId::Delta1 as usize] = nest.s_u * dlnx_ddelta1;

    grad[ParamId::Rho as usize] = if nest.outer_limit {
        central_log_difference(params, obs, ParamId::Rho)?
    } else {
        // (s_u ln X + s_w ln(K/L) − ln Y)/ρ with ln K cancelled
        (nest.s_u * nest.ln_xk - nest.s_w * nest.ln_l - nest.ln_yk) / params.rho
    };
    grad[ParamId::Rho1 as usize] = if nest.inner_limit {
        central_log_difference(params, obs, ParamId::Rho1)?
    } else {
        let dlnx = (-nest.q_l * nest.ln_r - nest.ln_xk) / params.rho1;
        nest.s_u * dlnx
    };
    Ok(grad)
}

fn central_log_difference(params: &CesParams, obs: &Observation, id: ParamId) -> Result<f64, ModelError> {
    let x = params.get(id);
    let up = ln_eval_ces(&params.with(id, x + LIMIT_FD_STEP), obs.capital, obs.labor)?;
    let down = ln_eval_ces(&params.with(id, x - LIMIT_FD_STEP), obs.capital, obs.labor)?;
    Ok((up - down) / (2.0 * LIMIT_FD_STEP))
}

/// `n × p` matrix of `∂V̂ᵢ/∂θⱼ` (or `∂ ln V̂ᵢ/∂θⱼ` in [`Scale::Logs`]), columns
/// in the order `A, δ, δ₁, ρ, ρ₁` restricted to the free ones.
pub fn jacobian(
    params: &CesParams,
    data: &[Observation],
    mask: &FreeMask,
    scale: Scale,
) -> Result<DMatrix<f64>, FitError> {
    let free: Vec<usize> = mask.free_ids().map(|id| id as usize).collect();
    let mut jac = DMatrix::zeros(data.len(), free.len());
    for (i, obs) in data.iter().enumerate() {
        let grad = log_gradient(params, obs).map_err(at(i))?;
        let factor = match scale {
            Scale::Levels => ln_eval_ces(params, obs.capital, obs.labor).map_err(at(i))?.exp(),
            Scale::Logs => 1.0,
        };
        for (col, &j) in free.iter().enumerate() {
            jac[(i, col)] = factor * grad[j];
        }
    }
    Ok(jac)
}
