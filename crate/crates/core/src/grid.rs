//! Grid search over the substitution parameters.
//!
//! Every `(ρ₁, ρ)` cell holds both substitution parameters fixed and fits
//! `A, δ, δ₁` with [`lm_fit`]. The cell sums of squares form an
//! [`SsrSurface`]; the reported model is the lowest-RSS cell, optionally
//! restricted to cells whose elasticity of substitution lies in `[0, 1]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::GridError;
use crate::lm::{lm_fit, LmOptions, LmOutcome, LmStatus};
use crate::model::{eval_ces, sigma_from_rho, CesParams};
use crate::objective::{FreeMask, Scale};
use crate::surface::{SsrSurface, SurfaceCell};
use crate::Observation;

/// Lattice points closer than this to `stop` are included (and snapped to it).
const STOP_TOLERANCE: f64 = 1e-9;
/// Expanded values closer than this are merged.
const DEDUP_TOLERANCE: f64 = 1e-12;

/// One `(start, stop, step)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Segment {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self, GridError> {
        if start.is_finite() && stop.is_finite() && start <= stop && step > 0.0 && step.is_finite() {
            Ok(Self { start, stop, step })
        } else {
            Err(GridError::InvalidSegment { start, stop, step })
        }
    }

    /// `start, start+step, …` up to `stop`. Values are computed as
    /// `start + k·step` and rounded to 12 decimals so that the decimal
    /// triples produce clean lattice values.
    pub fn expand(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0u64;
        loop {
            let raw = self.start + k as f64 * self.step;
            if raw > self.stop + STOP_TOLERANCE {
                break;
            }
            let v = if (raw - self.stop).abs() <= STOP_TOLERANCE {
                self.stop
            } else {
                (raw * 1e12).round() / 1e12
            };
            out.push(v);
            k += 1;
        }
        out
    }
}

/// Candidate values of one substitution parameter as a union of segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoGrid {
    pub segments: Vec<Segment>,
}

impl RhoGrid {
    pub fn new(segments: Vec<Segment>) -> Self {
        Self { segments }
    }

    /// Builds a grid from raw triples, validating each.
    pub fn from_triples(triples: &[(f64, f64, f64)]) -> Result<Self, GridError> {
        triples
            .iter()
            .map(|&(a, b, c)| Segment::new(a, b, c))
            .collect::<Result<Vec<_>, _>>()
            .map(Self::new)
    }

    /// A grid containing the single value `v`.
    pub fn single(v: f64) -> Self {
        Self::new(vec![Segment {
            start: v,
            stop: v,
            step: 1.0,
        }])
    }

    /// `rhoVec_1`: `(−0.9, 1.25, 0.64), (1.68, 1.72, 0.88), (1.86, 10.00, 0.94)`.
    pub fn rho_vec1() -> Self {
        Self::from_triples(&[(-0.9, 1.25, 0.64), (1.68, 1.72, 0.88), (1.86, 10.00, 0.94)])
            .expect("preset triples are valid")
    }

    /// `rhoVec_2`: `(−1, 1, 0.40), (1.68, 2.00, 0.64), (10.00, 11.51, 0.88)`.
    pub fn rho_vec2() -> Self {
        Self::from_triples(&[(-1.0, 1.0, 0.40), (1.68, 2.00, 0.64), (10.00, 11.51, 0.88)])
            .expect("preset triples are valid")
    }

    pub fn extend(&mut self, other: &RhoGrid) {
        self.segments.extend_from_slice(&other.segments);
    }
}

/// Union of all segment expansions, sorted ascending, near-duplicates merged.
pub fn expand_grid(grid: &RhoGrid) -> Result<Vec<f64>, GridError> {
    for s in &grid.segments {
        Segment::new(s.start, s.stop, s.step)?;
    }
    let mut values: Vec<f64> = grid.segments.iter().flat_map(Segment::expand).collect();
    values.sort_by(f64::total_cmp);
    values.dedup_by(|b, a| (*b - *a).abs() <= DEDUP_TOLERANCE);
    if values.is_empty() {
        Err(GridError::EmptyGrid)
    } else {
        Ok(values)
    }
}

/// Which substitution parameter the reported elasticity is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SigmaSource {
    /// `σ = 1/(1+ρ)`, between the capital-labor nest and `K/L`.
    #[default]
    Outer,
    /// `σ = 1/(1+ρ₁)`, between capital and labor.
    Inner,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    pub scale: Scale,
    pub lm: LmOptions,
    pub sigma_source: SigmaSource,
    /// Start each cell from its best already-fitted neighbour. Only honoured
    /// by the sequential scheduler.
    pub warm_start: bool,
    /// Fit cells on the rayon pool. Implies cold starts so that every cell
    /// is independent of the others.
    pub parallel: bool,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            scale: Scale::Levels,
            lm: LmOptions::default(),
            sigma_source: SigmaSource::Outer,
            warm_start: true,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestCell {
    pub rho1: f64,
    pub rho: f64,
    pub outcome: LmOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFitResult {
    pub best_unconstrained: BestCell,
    /// Lowest-RSS cell whose elasticity lies in `[0, 1]`, if any.
    pub best_reasonable: Option<BestCell>,
    pub surface: SsrSurface,
}

/// Starting `(A, δ, δ₁)` for a cell with no usable neighbour:
/// `δ = δ₁ = 0.5` and `A = mean(V) / mean(V̂ at A = 1)`.
pub fn default_init(data: &[Observation], rho: f64, rho1: f64) -> CesParams {
    let unit = CesParams::new(1.0, 0.5, 0.5, rho, rho1);
    let n = data.len() as f64;
    let mean_v = data.iter().map(|o| o.output).sum::<f64>() / n;
    let mean_g = data
        .iter()
        .map(|o| eval_ces(&unit, o.capital, o.labor).unwrap_or(f64::NAN))
        .sum::<f64>()
        / n;
    let a = mean_v / mean_g;
    CesParams::new(if a.is_finite() && a > 0.0 { a } else { 1.0 }, 0.5, 0.5, rho, rho1)
}

/// Fits one cell from `init`, returning `None` when the start is inadmissible.
fn fit_cell(data: &[Observation], init: &CesParams, opts: &GridOptions) -> Option<LmOutcome> {
    lm_fit(data, init, &FreeMask::shares(), opts.scale, &opts.lm).ok()
}

fn cold_cell(data: &[Observation], rho1: f64, rho: f64, opts: &GridOptions) -> Option<LmOutcome> {
    fit_cell(data, &default_init(data, rho, rho1), opts)
}

/// Elasticity used by the selection rule for a cell.
pub fn cell_sigma(rho1: f64, rho: f64, source: SigmaSource) -> f64 {
    match source {
        SigmaSource::Outer => sigma_from_rho(rho),
        SigmaSource::Inner => sigma_from_rho(rho1),
    }
}

pub fn sigma_is_reasonable(sigma: f64) -> bool {
    (0.0..=1.0).contains(&sigma)
}

/// Runs the grid. Cells are visited ρ₁-major (rows ρ₁, columns ρ).
///
/// With `warm_start`, a cell starts from the lower-RSS of its left `(i, j−1)`
/// and upper `(i−1, j)` neighbours (left wins ties), and falls back to
/// [`default_init`] if that start is inadmissible.
pub fn grid_search(
    data: &[Observation],
    rho_grid: &RhoGrid,
    rho1_grid: &RhoGrid,
    opts: &GridOptions,
) -> Result<GridFitResult, GridError> {
    let rho_values = expand_grid(rho_grid)?;
    let rho1_values = expand_grid(rho1_grid)?;
    if data.len() < 4 {
        return Err(GridError::TooFewObservations(data.len()));
    }
    let cols = rho_values.len();

    let fits: Vec<Option<LmOutcome>> = if opts.parallel {
        let cells: Vec<(f64, f64)> = rho1_values
            .iter()
            .flat_map(|&r1| rho_values.iter().map(move |&r| (r1, r)))
            .collect();
        cells
            .par_iter()
            .map(|&(r1, r)| cold_cell(data, r1, r, opts))
            .collect()
    } else {
        let mut fits: Vec<Option<LmOutcome>> = Vec::with_capacity(rho1_values.len() * cols);
        for (i, &r1) in rho1_values.iter().enumerate() {
            for (j, &r) in rho_values.iter().enumerate() {
                let neighbour = if opts.warm_start {
                    let left = (j > 0).then(|| fits[i * cols + j - 1].as_ref()).flatten();
                    let up = (i > 0).then(|| fits[(i - 1) * cols + j].as_ref()).flatten();
                    match (left, up) {
                        (Some(a), Some(b)) => Some(if b.rss < a.rss { b } else { a }),
                        (a, b) => a.or(b),
                    }
                } else {
                    None
                };
                let fit = neighbour
                    .and_then(|n| {
                        let init = CesParams::new(
                            n.params.efficiency_a,
                            n.params.share_delta,
                            n.params.share_delta1,
                            r,
                            r1,
                        );
                        fit_cell(data, &init, opts)
                    })
                    .or_else(|| cold_cell(data, r1, r, opts));
                fits.push(fit);
            }
        }
        fits
    };

    let cells: Vec<SurfaceCell> = fits
        .into_iter()
        .map(|fit| match fit {
            Some(outcome) => SurfaceCell {
                neg_ssr: Some(-outcome.rss),
                status: outcome.status,
                fit: Some(outcome),
            },
            None => SurfaceCell {
                neg_ssr: None,
                status: LmStatus::InadmissibleStart,
                fit: None,
            },
        })
        .collect();
    let surface = SsrSurface {
        rho1_values,
        rho_values,
        cells,
    };

    let best_unconstrained = select_best(&surface, |_, _| true).ok_or(GridError::AllCellsFailed)?;
    let best_reasonable = select_best(&surface, |r1, r| {
        sigma_is_reasonable(cell_sigma(r1, r, opts.sigma_source))
    });
    Ok(GridFitResult {
        best_unconstrained,
        best_reasonable,
        surface,
    })
}

/// Minimum-RSS fitted cell passing `keep`; ties go to smaller ρ, then
/// smaller ρ₁.
pub fn select_best(surface: &SsrSurface, keep: impl Fn(f64, f64) -> bool) -> Option<BestCell> {
    let mut best: Option<BestCell> = None;
    for (i, &r1) in surface.rho1_values.iter().enumerate() {
        for (j, &r) in surface.rho_values.iter().enumerate() {
            let Some(outcome) = surface.cell(i, j).fit.as_ref() else {
                continue;
            };
            if !keep(r1, r) {
                continue;
            }
            let better = match &best {
                None => true,
                Some(b) => outcome
                    .rss
                    .total_cmp(&b.outcome.rss)
                    .then(r.total_cmp(&b.rho))
                    .then(r1.total_cmp(&b.rho1))
                    .is_lt(),
            };
            if better {
                best = Some(BestCell {
                    rho1: r1,
                    rho: r,
                    outcome: outcome.clone(),
                });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_values(got: &[f64], want: &[f64]) {
        assert_eq!(got.len(), want.len(), "{got:?}");
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-12, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn exact_lattice() {
        let g = RhoGrid::from_triples(&[(0.0, 1.0, 0.5)]).unwrap();
        assert_values(&expand_grid(&g).unwrap(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn first_triples_of_presets() {
        let g = RhoGrid::from_triples(&[(-0.9, 1.25, 0.64)]).unwrap();
        assert_values(&expand_grid(&g).unwrap(), &[-0.9, -0.26, 0.38, 1.02]);
        let g = RhoGrid::from_triples(&[(-1.0, 1.0, 0.40)]).unwrap();
        assert_values(&expand_grid(&g).unwrap(), &[-1.0, -0.6, -0.2, 0.2, 0.6, 1.0]);
    }

    #[test]
    fn full_presets() {
        assert_values(
            &expand_grid(&RhoGrid::rho_vec1()).unwrap(),
            &[-0.9, -0.26, 0.38, 1.02, 1.68, 1.86, 2.80, 3.74, 4.68, 5.62, 6.56, 7.50, 8.44, 9.38],
        );
        assert_values(
            &expand_grid(&RhoGrid::rho_vec2()).unwrap(),
            &[-1.0, -0.6, -0.2, 0.2, 0.6, 1.0, 1.68, 10.0, 10.88],
        );
    }

    #[test]
    fn overlapping_segments_are_merged() {
        let g = RhoGrid::from_triples(&[(0.0, 1.0, 0.5), (0.5, 1.5, 0.5)]).unwrap();
        assert_values(&expand_grid(&g).unwrap(), &[0.0, 0.5, 1.0, 1.5]);
    }

    #[test]
    fn invalid_segments() {
        assert!(Segment::new(1.0, 0.0, 0.1).is_err());
        assert!(Segment::new(0.0, 1.0, 0.0).is_err());
        assert!(Segment::new(0.0, f64::NAN, 0.1).is_err());
        assert_eq!(expand_grid(&RhoGrid::new(vec![])), Err(GridError::EmptyGrid));
    }

    #[test]
    fn sigma_filter() {
        assert!(sigma_is_reasonable(cell_sigma(0.0, 0.38, SigmaSource::Outer)));
        assert!(!sigma_is_reasonable(cell_sigma(0.0, -0.26, SigmaSource::Outer)));
        assert!(!sigma_is_reasonable(cell_sigma(-1.0, 0.5, SigmaSource::Inner)));
        assert!(sigma_is_reasonable(cell_sigma(0.0, -0.5, SigmaSource::Inner)));
    }
}
