//! Estimation of the nested three-input CES production function
//!
//! ```text
//! V = A·[δ·(δ₁K^(−ρ₁) + (1−δ₁)L^(−ρ₁))^(ρ/ρ₁) + (1−δ)·(K/L)^(−ρ)]^(−1/ρ)
//! ```
//!
//! from `(output, capital, labor)` observations.
//!
//! The workflow is a grid search over the substitution parameters `(ρ₁, ρ)`
//! where, at each cell, `A, δ, δ₁` are fitted by Levenberg-Marquardt
//! least squares ([`lm_fit`]). The per-cell sums of squares form a
//! negative-SSR surface ([`SsrSurface`]) and the reported model is chosen
//! either unconstrained or among cells whose elasticity of substitution lies
//! in `[0, 1]` ([`grid_search`]). Fit statistics and table rendering live in
//! [`stats`] and [`report`]; CSV ingestion, seeded synthetic data and group
//! totals in [`data`].
//!
//! ```
//! use nestces::{eval_ces, CesParams};
//!
//! // δ = δ₁ = 1 reduces the function to A·K
//! let p = CesParams::new(2.0, 1.0, 1.0, 0.5, 1.2);
//! assert!((eval_ces(&p, 3.0, 7.0).unwrap() - 6.0).abs() < 1e-12);
//! ```

pub mod data;
pub mod error;
pub mod grid;
pub mod lm;
pub mod model;
pub mod objective;
pub mod report;
pub mod stats;
pub mod surface;

pub use data::{aggregate_output, generate, load_csv, Dataset, GroupBy, GroupTotal, NoiseKind, RowTags, SynthSpec};
pub use error::{Aggregate, DataError, FitError, GridError, ModelError, StatsError, SurfaceParseError};
pub use grid::{
    default_init, expand_grid, grid_search, BestCell, GridFitResult, GridOptions, RhoGrid, Segment, SigmaSource,
};
pub use lm::{lm_fit, LmOptions, LmOutcome, LmStatus};
pub use model::{
    classify_intensity, concavity_probe, eval_cobb_douglas_limit, eval_ces, eval_plain_ces3, marginal_products,
    sigma_from_rho, CesParams, ConcavityPoint, IntensityClass, IntensityLabel, Observation, ParamId, EPSILON_RHO,
};
pub use objective::{jacobian, residuals, rss, FreeMask, Scale};
pub use report::{parse_json_report, render_report, ReportFormat, ReportMeta, ReportRow};
pub use stats::{compute_stats, FitStats};
pub use surface::{SsrSurface, SurfaceCell, SurfaceFormat};
