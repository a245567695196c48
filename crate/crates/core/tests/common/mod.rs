//! Independent reference computations for the integration and acceptance
//! tests. Nothing here calls the estimator's evaluation, derivative or
//! selection code; fits are driven through the public `lm_fit` only.
#![allow(dead_code)]

use nestces::{lm_fit, CesParams, FreeMask, LmOptions, LmOutcome, Observation, Scale};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The nested function evaluated with plain `powf`, no log space.
pub fn naive_ces(p: &CesParams, k: f64, l: f64) -> f64 {
    let inner = p.share_delta1 * k.powf(-p.rho1) + (1.0 - p.share_delta1) * l.powf(-p.rho1);
    let outer = p.share_delta * inner.powf(p.rho / p.rho1) + (1.0 - p.share_delta) * (k / l).powf(-p.rho);
    p.efficiency_a * outer.powf(-1.0 / p.rho)
}

/// Flat three-input form with a single exponent `rho`.
pub fn naive_flat(p: &CesParams, k: f64, l: f64) -> f64 {
    let r = p.rho;
    let d = p.share_delta;
    let d1 = p.share_delta1;
    let s = d * d1 * k.powf(-r) + d * (1.0 - d1) * l.powf(-r) + (1.0 - d) * (k / l).powf(-r);
    p.efficiency_a * s.powf(-1.0 / r)
}

/// Joint `ρ = ρ₁ → 0` limit: `A·K^(δδ₁+1−δ)·L^(δ(1−δ₁)−(1−δ))`.
pub fn naive_cobb_douglas(p: &CesParams, k: f64, l: f64) -> f64 {
    let d = p.share_delta;
    let d1 = p.share_delta1;
    p.efficiency_a * k.powf(d * d1 + 1.0 - d) * l.powf(d * (1.0 - d1) - (1.0 - d))
}

/// Fourth-order central difference (Richardson extrapolation of two
/// central differences).
pub fn richardson(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// Plain second-order central difference.
pub fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

/// Relative error, switching to absolute when the reference is tiny.
pub fn mixed_err(got: f64, want: f64, floor: f64) -> f64 {
    if want.abs() < floor {
        (got - want).abs()
    } else {
        rel_err(got, want)
    }
}

/// Draws `n` noiseless observations with log-uniform inputs in `[lo, hi]`.
pub fn noiseless_data(p: &CesParams, n: usize, (lo, hi): (f64, f64), rng: &mut ChaCha8Rng) -> Vec<Observation> {
    (0..n)
        .map(|_| {
            let k = (rng.random_range(lo.ln()..hi.ln())).exp();
            let l = (rng.random_range(lo.ln()..hi.ln())).exp();
            Observation::new(naive_ces(p, k, l), k, l)
        })
        .collect()
}

/// Same inputs with independent multiplicative noise `exp(σ·u)`,
/// `u` uniform on `[-1, 1]`.
pub fn noisy_data(p: &CesParams, n: usize, range: (f64, f64), sigma: f64, rng: &mut ChaCha8Rng) -> Vec<Observation> {
    let clean = noiseless_data(p, n, range, rng);
    clean
        .into_iter()
        .map(|o| Observation::new(o.output * (sigma * rng.random_range(-1.0..1.0)).exp(), o.capital, o.labor))
        .collect()
}

/// Admissible parameters with shares in `(0.15, 0.85)`.
pub fn random_params(rng: &mut ChaCha8Rng, rho: (f64, f64), rho1: (f64, f64)) -> CesParams {
    CesParams::new(
        rng.random_range(0.5..4.0),
        rng.random_range(0.15..0.85),
        rng.random_range(0.15..0.85),
        rng.random_range(rho.0..rho.1),
        rng.random_range(rho1.0..rho1.1),
    )
}

/// Least-squares efficiency with everything else held:
/// `A* = ΣVg / Σg²` where `g` is the model at `A = 1`.
pub fn closed_form_a(p: &CesParams, data: &[Observation]) -> f64 {
    let unit = CesParams { efficiency_a: 1.0, ..*p };
    let (mut num, mut den) = (0.0, 0.0);
    for o in data {
        let g = naive_ces(&unit, o.capital, o.labor);
        num += o.output * g;
        den += g * g;
    }
    num / den
}

/// `value(k) = start + k·step` up to `stop`, written out independently of the
/// library expansion.
pub fn lattice(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 0.0;
    loop {
        let v = start + k * step;
        if v > stop + 1e-9 {
            break;
        }
        out.push((v * 1e12).round() / 1e12);
        k += 1.0;
    }
    out
}

/// The documented cold start: shares at one half, `A` matching mean output.
pub fn cold_init(data: &[Observation], rho: f64, rho1: f64) -> CesParams {
    let unit = CesParams::new(1.0, 0.5, 0.5, rho, rho1);
    let n = data.len() as f64;
    let mean_v = data.iter().map(|o| o.output).sum::<f64>() / n;
    let mean_g = data
        .iter()
        .map(|o| nestces::eval_ces(&unit, o.capital, o.labor).unwrap_or(f64::NAN))
        .sum::<f64>()
        / n;
    let a = mean_v / mean_g;
    CesParams::new(if a.is_finite() && a > 0.0 { a } else { 1.0 }, 0.5, 0.5, rho, rho1)
}

/// One fitted cell of the reference loop.
#[derive(Debug, Clone)]
pub struct OracleCell {
    pub rho1: f64,
    pub rho: f64,
    pub outcome: Option<LmOutcome>,
}

/// Exhaustive re-fit of every `(ρ₁, ρ)` pair, ρ₁-major. With `warm`, each
/// cell starts from whichever of its left and upper neighbours has the
/// smaller RSS (left on equality) and falls back to the cold start.
pub fn brute_force_grid(
    data: &[Observation],
    rho1_values: &[f64],
    rho_values: &[f64],
    scale: Scale,
    opts: &LmOptions,
    warm: bool,
) -> Vec<OracleCell> {
    let mask = FreeMask::shares();
    let fit = |init: &CesParams| lm_fit(data, init, &mask, scale, opts).ok();
    let cols = rho_values.len();
    let mut cells: Vec<OracleCell> = Vec::new();
    for (i, &r1) in rho1_values.iter().enumerate() {
        for (j, &r) in rho_values.iter().enumerate() {
            let mut start = None;
            if warm {
                let left = if j > 0 { cells[i * cols + j - 1].outcome.clone() } else { None };
                let up = if i > 0 { cells[(i - 1) * cols + j].outcome.clone() } else { None };
                start = match (left, up) {
                    (Some(a), Some(b)) => Some(if b.rss < a.rss { b } else { a }),
                    (Some(a), None) => Some(a),
                    (None, b) => b,
                };
            }
            let mut outcome = start.and_then(|s| {
                fit(&CesParams::new(
                    s.params.efficiency_a,
                    s.params.share_delta,
                    s.params.share_delta1,
                    r,
                    r1,
                ))
            });
            if outcome.is_none() {
                outcome = fit(&cold_init(data, r, r1));
            }
            cells.push(OracleCell { rho1: r1, rho: r, outcome });
        }
    }
    cells
}

/// Smallest RSS among fitted cells passing `keep`; equal RSS resolved by
/// smaller ρ and then smaller ρ₁.
pub fn oracle_select(cells: &[OracleCell], keep: impl Fn(&OracleCell) -> bool) -> Option<&OracleCell> {
    let mut ranked: Vec<&OracleCell> = cells.iter().filter(|c| c.outcome.is_some() && keep(c)).collect();
    ranked.sort_by(|a, b| {
        let ra = a.outcome.as_ref().unwrap().rss;
        let rb = b.outcome.as_ref().unwrap().rss;
        ra.partial_cmp(&rb)
            .unwrap()
            .then(a.rho.partial_cmp(&b.rho).unwrap())
            .then(a.rho1.partial_cmp(&b.rho1).unwrap())
    });
    ranked.first().copied()
}

/// `σ = 1/(1+ρ)` inside `[0, 1]`.
pub fn oracle_reasonable(rho: f64) -> bool {
    if rho == -1.0 {
        return false;
    }
    let s = 1.0 / (1.0 + rho);
    (0.0..=1.0).contains(&s)
}

pub fn golden_csv() -> &'static str {
    include_str!("../fixtures/seed7_n200.csv")
}

pub fn golden_truth() -> CesParams {
    CesParams::new(2.0, 0.6, 0.4, 0.5, 1.2)
}

/// Parses `output,capital,labor` rows without going through the library.
pub fn parse_plain_csv(text: &str) -> Vec<Observation> {
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let v: Vec<f64> = line.split(',').map(|f| f.trim().parse().unwrap()).collect();
            Observation::new(v[0], v[1], v[2])
        })
        .collect()
}
