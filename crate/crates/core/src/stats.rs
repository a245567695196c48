//! Goodness-of-fit statistics for one solver outcome.

use serde::{Deserialize, Serialize};

use crate::error::StatsError;
use crate::lm::LmOutcome;
use crate::model::{classify_intensity, sigma_from_rho, IntensityClass};
use crate::objective::Scale;
use crate::Observation;

/// Label used for converged fits.
pub const CONVERGENCE_ACHIEVED: &str = "Achieved";
pub const CONVERGENCE_NOT_ACHIEVED: &str = "NotAchieved";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitStats {
    pub r_squared: f64,
    /// Residual standard error `sqrt(RSS/(n−p))`.
    pub std_error: f64,
    pub rss: f64,
    pub sigma_outer: f64,
    pub sigma_inner: f64,
    pub delta: f64,
    pub delta1: f64,
    pub efficiency_a: f64,
    pub convergence: String,
    pub intensity: IntensityClass,
}

/// `R² = 1 − RSS/TSS` with TSS about the mean in the fitting scale.
pub fn compute_stats(
    data: &[Observation],
    outcome: &LmOutcome,
    scale: Scale,
    free_params: usize,
    intensity_tolerance: f64,
) -> Result<FitStats, StatsError> {
    let n = data.len();
    if n <= free_params {
        return Err(StatsError::NoDegreesOfFreedom { n, p: free_params });
    }
    let y: Vec<f64> = data.iter().map(|o| scale.observed(o.output)).collect();
    let mean = y.iter().sum::<f64>() / n as f64;
    let tss = y.iter().fold(0.0, |acc, v| acc + (v - mean) * (v - mean));
    if !(tss > 0.0) {
        return Err(StatsError::DegenerateData);
    }
    let p = &outcome.params;
    Ok(FitStats {
        r_squared: 1.0 - outcome.rss / tss,
        std_error: (outcome.rss / (n - free_params) as f64).sqrt(),
        rss: outcome.rss,
        sigma_outer: sigma_from_rho(p.rho),
        sigma_inner: sigma_from_rho(p.rho1),
        delta: p.share_delta,
        delta1: p.share_delta1,
        efficiency_a: p.efficiency_a,
        convergence: if outcome.status.converged() {
            CONVERGENCE_ACHIEVED
        } else {
            CONVERGENCE_NOT_ACHIEVED
        }
        .to_string(),
        intensity: classify_intensity(p, intensity_tolerance),
    })
}
