//! Error types, one enum per subsystem.

use thiserror::Error;

/// Which bracketed sum of the production function went non-positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregate {
    /// `δ₁K^(−ρ₁) + (1−δ₁)L^(−ρ₁)`
    Inner,
    /// `δ·inner^(ρ/ρ₁) + (1−δ)(K/L)^(−ρ)`
    Outer,
}

impl std::fmt::Display for Aggregate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Aggregate::Inner => f.write_str("inner capital-labor"),
            Aggregate::Outer => f.write_str("outer"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("capital and labor must be positive (capital={capital}, labor={labor})")]
    Domain { capital: f64, labor: f64 },
    #[error("efficiency A must be positive, got {0}")]
    NonPositiveEfficiency(f64),
    #[error("{0} aggregate is not positive; share parameters are inadmissible for this data point")]
    NonPositiveAggregate(Aggregate),
    #[error("predicted output is not finite")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("observation {index}: {source}")]
    Observation { index: usize, source: ModelError },
    #[error("initial parameters are inadmissible at observation {index}: {source}")]
    InadmissibleStart { index: usize, source: ModelError },
    #[error("no free parameters")]
    NoFreeParameters,
    #[error("{n} observations cannot identify {p} free parameters (need n > p)")]
    TooFewObservations { n: usize, p: usize },
    #[error("dataset is empty")]
    EmptyData,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid expands to no values")]
    EmptyGrid,
    #[error("invalid grid segment ({start}, {stop}, {step}): need start <= stop and step > 0")]
    InvalidSegment { start: f64, stop: f64, step: f64 },
    #[error("grid search needs at least 4 observations, got {0}")]
    TooFewObservations(usize),
    #[error("no grid cell produced an admissible fit")]
    AllCellsFailed,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("output is constant; total sum of squares is zero")]
    DegenerateData,
    #[error("{n} observations with {p} free parameters leave no residual degrees of freedom")]
    NoDegreesOfFreedom { n: usize, p: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: {reason}")]
    BadRow { row: usize, reason: String },
    #[error("dataset has no observations")]
    EmptyDataset,
    #[error("true parameters are inadmissible at generated row {row}: {source}")]
    InadmissibleParams { row: usize, source: ModelError },
    #[error("row {row} has no `{tag}` tag")]
    MissingTag { row: usize, tag: &'static str },
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SurfaceParseError {
    #[error("unexpected header `{0}`")]
    Header(String),
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("cells do not form a complete rectangular grid")]
    NotRectangular,
}
