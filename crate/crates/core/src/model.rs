//! The nested three-input CES production function.
//!
//! ```text
//! V = A·[δ·(δ₁K^(−ρ₁) + (1−δ₁)L^(−ρ₁))^(ρ/ρ₁) + (1−δ)·(K/L)^(−ρ)]^(−1/ρ)
//! ```
//!
//! The inner bracket is a two-input CES aggregate `X` of capital and labor,
//! the outer bracket mixes `X` with the capital intensity `K/L`. Both nests
//! have weights summing to one, which lets every evaluation run in log space
//! through [`log_mix`] without overflow at currency-scale magnitudes.
//!
//! Share parameters are not restricted to `[0, 1]`; a parameter vector is
//! admissible for a data point when both brackets are strictly positive.

use serde::{Deserialize, Serialize};

use crate::error::{Aggregate, ModelError};

/// Below this magnitude a substitution parameter takes the Cobb-Douglas limit
/// path instead of direct powering (the bracket is `0/0` at `ρ = 0`).
pub const EPSILON_RHO: f64 = 1e-8;

/// One plant or industry record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub output: f64,
    pub capital: f64,
    /// Real-valued so that survey averages can be used directly.
    pub labor: f64,
}

impl Observation {
    pub fn new(output: f64, capital: f64, labor: f64) -> Self {
        Self {
            output,
            capital,
            labor,
        }
    }

    /// Capital intensity `K/L`.
    pub fn intensity(&self) -> f64 {
        self.capital / self.labor
    }
}

/// Index of a model parameter. The discriminant is the column order used
/// everywhere parameters are flattened: `A, δ, δ₁, ρ, ρ₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamId {
    Efficiency = 0,
    Delta = 1,
    Delta1 = 2,
    Rho = 3,
    Rho1 = 4,
}

impl ParamId {
    pub const ALL: [ParamId; 5] = [
        ParamId::Efficiency,
        ParamId::Delta,
        ParamId::Delta1,
        ParamId::Rho,
        ParamId::Rho1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamId::Efficiency => "A",
            ParamId::Delta => "delta",
            ParamId::Delta1 => "delta1",
            ParamId::Rho => "rho",
            ParamId::Rho1 => "rho1",
        }
    }

    /// Parses `A`/`a`, `delta`, `delta1`, `rho`, `rho1`.
    pub fn parse(name: &str) -> Option<ParamId> {
        match name {
            "A" | "a" => Some(ParamId::Efficiency),
            "delta" => Some(ParamId::Delta),
            "delta1" => Some(ParamId::Delta1),
            "rho" => Some(ParamId::Rho),
            "rho1" => Some(ParamId::Rho1),
            _ => None,
        }
    }
}

/// The five parameters of the nested function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CesParams {
    /// Technology level `A > 0`.
    pub efficiency_a: f64,
    /// Weight `δ` of the inner capital-labor nest.
    pub share_delta: f64,
    /// Weight `δ₁` of capital inside the inner nest.
    pub share_delta1: f64,
    /// Outer substitution parameter `ρ`.
    pub rho: f64,
    /// Inner substitution parameter `ρ₁`.
    pub rho1: f64,
}

impl CesParams {
    pub fn new(efficiency_a: f64, share_delta: f64, share_delta1: f64, rho: f64, rho1: f64) -> Self {
        Self {
            efficiency_a,
            share_delta,
            share_delta1,
            rho,
            rho1,
        }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [
            self.efficiency_a,
            self.share_delta,
            self.share_delta1,
            self.rho,
            self.rho1,
        ]
    }

    pub fn from_array(v: [f64; 5]) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4])
    }

    pub fn get(&self, id: ParamId) -> f64 {
        self.to_array()[id as usize]
    }

    pub fn set(&mut self, id: ParamId, value: f64) {
        let mut v = self.to_array();
        v[id as usize] = value;
        *self = Self::from_array(v);
    }

    pub fn with(mut self, id: ParamId, value: f64) -> Self {
        self.set(id, value);
        self
    }
}

/// `ln(w·e^a + (1−w)·e^b)`, or `None` when the mixture is not positive.
///
/// The sum is written as `e^h·(1 + t)` around whichever exponent keeps `1 + t`
/// away from cancellation, so a term with zero weight drops out exactly.
pub(crate) fn log_mix(w: f64, a: f64, b: f64) -> Option<f64> {
    let t_a = (1.0 - w) * (b - a).exp_m1();
    let t_b = w * (a - b).exp_m1();
    let (hi, t) = if t_a.is_finite() && (t_a >= -0.5 || !t_b.is_finite()) {
        (a, t_a)
    } else {
        (b, t_b)
    };
    if t > -1.0 && t.is_finite() && hi.is_finite() {
        Some(hi + t.ln_1p())
    } else {
        None
    }
}

/// `expm1(c·x)/c`, continuous through `c = 0`.
pub(crate) fn expm1_ratio(c: f64, x: f64) -> f64 {
    if c == 0.0 {
        x
    } else {
        (c * x).exp_m1() / c
    }
}

/// Intermediate quantities of one evaluation, shared by the value, the
/// marginal products and the parameter Jacobian.
///
/// Aggregates are kept relative to `K` (`ln(X/K)`, `ln(Y/K)`), which makes
/// the `δ = δ₁ = 1` collapse to `A·K` exact.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Nest {
    pub ln_k: f64,
    pub ln_l: f64,
    pub ln_r: f64,
    /// `ln(X/K)` for the inner aggregate `X = S^(−1/ρ₁)`.
    pub ln_xk: f64,
    /// Inner shares `δ₁K^(−ρ₁)/S` and `(1−δ₁)L^(−ρ₁)/S`; they sum to one.
    pub q_k: f64,
    pub q_l: f64,
    /// `L^(−ρ₁)/S`
    pub l_over_s: f64,
    /// Outer shares `δ·X^(−ρ)/B` and `(1−δ)(K/L)^(−ρ)/B`; they sum to one.
    pub s_u: f64,
    pub s_w: f64,
    /// `(K/L)^(−ρ)/B`
    pub w_over_b: f64,
    /// `ln(V/(A·K))`
    pub ln_yk: f64,
    pub inner_limit: bool,
    pub outer_limit: bool,
}

impl Nest {
    pub fn new(params: &CesParams, capital: f64, labor: f64) -> Result<Self, ModelError> {
        if !(capital > 0.0 && labor > 0.0) {
            return Err(ModelError::Domain { capital, labor });
        }
        let ln_k = capital.ln();
        let ln_l = labor.ln();
        let ln_r = ln_k - ln_l;
        let d1 = params.share_delta1;
        let r1 = params.rho1;

        // S/K^(−ρ₁) = δ₁ + (1−δ₁)·e^(ρ₁ ln(K/L))
        let inner_limit = r1.abs() < EPSILON_RHO;
        let (ln_xk, q_k, q_l, l_over_s) = if inner_limit {
            (-(1.0 - d1) * ln_r, d1, 1.0 - d1, 1.0)
        } else {
            let b = r1 * ln_r;
            let ln_sk = log_mix(d1, 0.0, b).ok_or(ModelError::NonPositiveAggregate(Aggregate::Inner))?;
            let l_over_s = (b - ln_sk).exp();
            (-ln_sk / r1, d1 * (-ln_sk).exp(), (1.0 - d1) * l_over_s, l_over_s)
        };

        // B/K^(−ρ) = δ·(X/K)^(−ρ) + (1−δ)·L^ρ
        let d = params.share_delta;
        let r = params.rho;
        let outer_limit = r.abs() < EPSILON_RHO;
        let (s_u, s_w, w_over_b, ln_yk) = if outer_limit {
            (d, 1.0 - d, 1.0, d * ln_xk - (1.0 - d) * ln_l)
        } else {
            let a = -r * ln_xk;
            let b = r * ln_l;
            let ln_bk = log_mix(d, a, b).ok_or(ModelError::NonPositiveAggregate(Aggregate::Outer))?;
            let w_over_b = (b - ln_bk).exp();
            (d * (a - ln_bk).exp(), (1.0 - d) * w_over_b, w_over_b, -ln_bk / r)
        };

        Ok(Nest {
            ln_k,
            ln_l,
            ln_r,
            ln_xk,
            q_k,
            q_l,
            l_over_s,
            s_u,
            s_w,
            w_over_b,
            ln_yk,
            inner_limit,
            outer_limit,
        })
    }

    pub fn ln_value(&self, efficiency_a: f64) -> f64 {
        efficiency_a.ln() + self.ln_k + self.ln_yk
    }

    pub fn value(&self, efficiency_a: f64, capital: f64) -> f64 {
        let v = efficiency_a * capital * self.ln_yk.exp();
        if v.is_finite() && v > 0.0 {
            v
        } else {
            self.ln_value(efficiency_a).exp()
        }
    }
}

fn check_efficiency(params: &CesParams) -> Result<(), ModelError> {
    if params.efficiency_a > 0.0 {
        Ok(())
    } else {
        Err(ModelError::NonPositiveEfficiency(params.efficiency_a))
    }
}

/// Natural log of the predicted output.
pub fn ln_eval_ces(params: &CesParams, capital: f64, labor: f64) -> Result<f64, ModelError> {
    check_efficiency(params)?;
    Nest::new(params, capital, labor).map(|n| n.ln_value(params.efficiency_a))
}

/// Predicted output `V` for inputs `K`, `L`.
///
/// Substitution parameters with magnitude below [`EPSILON_RHO`] are replaced
/// by their Cobb-Douglas limit, nest by nest.
pub fn eval_ces(params: &CesParams, capital: f64, labor: f64) -> Result<f64, ModelError> {
    check_efficiency(params)?;
    Nest::new(params, capital, labor).map(|n| n.value(params.efficiency_a, capital))
}

/// The flat three-input CES obtained by setting `ρ₁ = ρ`:
/// `A·[δδ₁K^(−ρ) + δ(1−δ₁)L^(−ρ) + (1−δ)(K/L)^(−ρ)]^(−1/ρ)`.
///
/// Only `params.rho` is read; the caller is responsible for `ρ₁ = ρ`.
pub fn eval_plain_ces3(params: &CesParams, capital: f64, labor: f64) -> Result<f64, ModelError> {
    check_efficiency(params)?;
    if !(capital > 0.0 && labor > 0.0) {
        return Err(ModelError::Domain { capital, labor });
    }
    let rho = params.rho;
    if rho.abs() < EPSILON_RHO {
        return eval_cobb_douglas_limit(params, capital, labor);
    }
    let d = params.share_delta;
    let d1 = params.share_delta1;
    let (ln_k, ln_l) = (capital.ln(), labor.ln());
    let terms = [
        (d * d1, -rho * ln_k),
        (d * (1.0 - d1), -rho * ln_l),
        (1.0 - d, -rho * (ln_k - ln_l)),
    ];
    let hi = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    // weights sum to one, so Σ wᵢe^(aᵢ−hi) = 1 + Σ wᵢ·expm1(aᵢ−hi)
    let t: f64 = terms.iter().map(|&(w, a)| w * (a - hi).exp_m1()).sum();
    if !(t > -1.0) {
        return Err(ModelError::NonPositiveAggregate(Aggregate::Outer));
    }
    let ln_b = hi + t.ln_1p();
    Ok((params.efficiency_a.ln() - ln_b / rho).exp())
}

/// Joint `ρ = ρ₁ → 0` limit:
/// `V = A·K^(δδ₁ + 1 − δ)·L^(δ(1−δ₁) − (1−δ))`. Substitution parameters
/// are ignored.
pub fn eval_cobb_douglas_limit(params: &CesParams, capital: f64, labor: f64) -> Result<f64, ModelError> {
    check_efficiency(params)?;
    if !(capital > 0.0 && labor > 0.0) {
        return Err(ModelError::Domain { capital, labor });
    }
    let d = params.share_delta;
    let d1 = params.share_delta1;
    let k_exp = d * d1 + 1.0 - d;
    let l_exp = d * (1.0 - d1) - (1.0 - d);
    Ok((params.efficiency_a.ln() + k_exp * capital.ln() + l_exp * labor.ln()).exp())
}

/// `(∂V/∂K, ∂V/∂L)`, with `K/L` differentiated through both inputs.
pub fn marginal_products(params: &CesParams, capital: f64, labor: f64) -> Result<(f64, f64), ModelError> {
    check_efficiency(params)?;
    let nest = Nest::new(params, capital, labor)?;
    let v = nest.value(params.efficiency_a, capital);
    let mpk = v * (nest.s_u * nest.q_k + nest.s_w) / capital;
    let mpl = v * (nest.s_u * nest.q_l - nest.s_w) / labor;
    Ok((mpk, mpl))
}

/// Elasticity of substitution `σ = 1/(1+ρ)`. Returns `+∞` at `ρ = −1`.
pub fn sigma_from_rho(rho: f64) -> f64 {
    let denom = 1.0 + rho;
    if denom == 0.0 {
        f64::INFINITY
    } else {
        1.0 / denom
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntensityLabel {
    PurelyCapitalIntensive,
    LaborIntensive,
}

impl IntensityLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            IntensityLabel::PurelyCapitalIntensive => "PurelyCapitalIntensive",
            IntensityLabel::LaborIntensive => "LaborIntensive",
        }
    }
}

impl std::fmt::Display for IntensityLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for IntensityLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "PurelyCapitalIntensive" => Ok(IntensityLabel::PurelyCapitalIntensive),
            "LaborIntensive" => Ok(IntensityLabel::LaborIntensive),
            other => Err(format!("unknown intensity label `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityClass {
    pub label: IntensityLabel,
    pub tolerance_used: f64,
}

/// Purely capital intensive iff both `|δ−1|` and `|δ₁−1|` are within
/// `tolerance`; labor intensive otherwise.
pub fn classify_intensity(params: &CesParams, tolerance: f64) -> IntensityClass {
    let capital = (params.share_delta - 1.0).abs() <= tolerance
        && (params.share_delta1 - 1.0).abs() <= tolerance;
    IntensityClass {
        label: if capital {
            IntensityLabel::PurelyCapitalIntensive
        } else {
            IntensityLabel::LaborIntensive
        },
        tolerance_used: tolerance,
    }
}

/// Second derivatives of `V` at one input point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcavityPoint {
    pub capital: f64,
    pub labor: f64,
    pub d2v_dk2: f64,
    pub d2v_dl2: f64,
    pub d2v_dkdl: f64,
}

impl ConcavityPoint {
    /// Non-positive leading diagonal of the Hessian.
    pub fn diagonal_non_positive(&self) -> bool {
        self.d2v_dk2 <= 0.0 && self.d2v_dl2 <= 0.0
    }

    pub fn hessian_determinant(&self) -> f64 {
        self.d2v_dk2 * self.d2v_dl2 - self.d2v_dkdl * self.d2v_dkdl
    }
}

/// Numerical Hessian of `V` in `(K, L)` at each point, from central
/// differences of the analytic marginal products. The capital-intensity term
/// is not globally concave, so callers inspect
/// [`ConcavityPoint::diagonal_non_positive`] rather than expect it.
pub fn concavity_probe(params: &CesParams, points: &[(f64, f64)]) -> Result<Vec<ConcavityPoint>, ModelError> {
    points
        .iter()
        .map(|&(k, l)| {
            let hk = 1e-5 * k;
            let hl = 1e-5 * l;
            let (mpk_p, mpl_kp) = marginal_products(params, k + hk, l)?;
            let (mpk_m, mpl_km) = marginal_products(params, k - hk, l)?;
            let (mpk_lp, mpl_p) = marginal_products(params, k, l + hl)?;
            let (mpk_lm, mpl_m) = marginal_products(params, k, l - hl)?;
            let cross_k = (mpl_kp - mpl_km) / (2.0 * hk);
            let cross_l = (mpk_lp - mpk_lm) / (2.0 * hl);
            Ok(ConcavityPoint {
                capital: k,
                labor: l,
                d2v_dk2: (mpk_p - mpk_m) / (2.0 * hk),
                d2v_dl2: (mpl_p - mpl_m) / (2.0 * hl),
                d2v_dkdl: 0.5 * (cross_k + cross_l),
            })
        })
        .collect()
}
