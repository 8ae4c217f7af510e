//! Closed-form scaling laws: shot variance, average-case mean squared
//! error, the shot threshold where depolarization inversion beats the raw
//! estimate, overhead scaling of the mitigation methods, the exact variance
//! of the exponential extrapolation, and the variance of the estimation
//! circuit's depolarization probability under fixed versus random gate
//! selection.
//!
//! Everything here is pure arithmetic on the published closed forms; the
//! test suite cross-checks them against Monte Carlo simulation and
//! finite-difference oracles where an independent route exists.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mitigation::Method;

/// Shot-count ratio of the zero-error quadratic extrapolation (three points
/// splitting the budget) to the unmitigated estimate at equal variance:
/// `3 * (9 + 100 + 225) / 64 = 501/32 ≈ 15.66`.
pub const QZNE_RAW_SHOT_RATIO: f64 = 501.0 / 32.0;

/// Inputs for the overhead scaling laws: error strength
/// `gamma = 1/(1 - p*) >= 1` for a single-layer depolarization probability
/// `p*`, circuit depth in layers, the target variance, and the Pauli-string
/// weights whose norm sets the numerator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadQuery {
    pub gamma: f64,
    pub layers: u32,
    pub sigma2: f64,
    pub weights: Vec<f64>,
}

impl OverheadQuery {
    pub fn validate(&self) -> Result<()> {
        if self.gamma < 1.0 || !self.gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "error strength gamma must be finite and at least 1, got {}",
                self.gamma
            )));
        }
        if self.sigma2 <= 0.0 || self.sigma2.is_nan() {
            return Err(Error::InvalidArgument(format!(
                "target variance must be positive, got {}",
                self.sigma2
            )));
        }
        Ok(())
    }

    /// `‖x‖²`, the squared Euclidean norm of the Pauli-string weights.
    pub fn weight_norm_sq(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }
}

/// Moments of the per-gate error rates entering an estimation circuit:
/// `g1`/`g2` gates are selected from the one- and two-qubit pools whose
/// rates have means `mean_a`/`mean_b` and variances `var_a`/`var_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionStats {
    pub g1: usize,
    pub g2: usize,
    pub mean_a: f64,
    pub var_a: f64,
    pub mean_b: f64,
    pub var_b: f64,
}

impl SelectionStats {
    pub fn validate(&self) -> Result<()> {
        if self.var_a < 0.0 || self.var_b < 0.0 {
            return Err(Error::InvalidArgument("variances must be non-negative".into()));
        }
        Ok(())
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "depolarization probability must lie in [0, 1), got {p}"
        )));
    }
    Ok(())
}

fn check_shots(s: u64) -> Result<()> {
    if s == 0 {
        return Err(Error::InvalidArgument("shot count must be at least 1".into()));
    }
    Ok(())
}

/// Variance of a sampled expectation value at `s` shots: `(1 - o²)/s` for a
/// single circuit, or `3(1 - o²)/s` when the budget is split evenly over
/// three extrapolation points (each point then has thrice the variance).
pub fn shot_variance(o_eps: f64, s: u64, points: usize) -> Result<f64> {
    check_shots(s)?;
    if o_eps.abs() > 1.0 {
        return Err(Error::InvalidArgument(format!(
            "expectation value must lie in [-1, 1], got {o_eps}"
        )));
    }
    let base = (1.0 - o_eps * o_eps) / s as f64;
    match points {
        1 => Ok(base),
        3 => Ok(3.0 * base),
        other => Err(Error::InvalidArgument(format!(
            "expected 1 or 3 extrapolation points, got {other}"
        ))),
    }
}

/// Mean squared error averaged over a uniform error-free expectation in
/// `[-1, 1]`, for the raw estimate and the depolarization-inverted
/// estimate:
///
/// * raw: `(2 + 2p - p² + s(2 - p)²) / (3s)`
/// * inverted: `(2 + 2p - p²) / (3s(1 - p)²)`
///
/// Only `Raw` and `Rida` have closed forms here.
pub fn mse_avg(method: Method, p: f64, s: u64) -> Result<f64> {
    check_probability(p)?;
    check_shots(s)?;
    let a = 2.0 + 2.0 * p - p * p;
    let s = s as f64;
    match method {
        Method::Raw => Ok((a + s * (2.0 - p) * (2.0 - p)) / (3.0 * s)),
        Method::Rida => Ok(a / (3.0 * s * (1.0 - p) * (1.0 - p))),
        other => Err(Error::InvalidArgument(format!(
            "no closed-form average mean squared error for method '{other}'"
        ))),
    }
}

/// The shot count above which the depolarization-inverted estimate has a
/// lower average mean squared error than the raw one:
/// `p(2 + 2p - p²) / ((2 - p)(1 - p)²)`. Zero at `p = 0` (inversion is
/// never worse) and divergent as `p -> 1`.
pub fn rida_threshold_shots(p: f64) -> Result<f64> {
    check_probability(p)?;
    Ok(p * (2.0 + 2.0 * p - p * p) / ((2.0 - p) * (1.0 - p) * (1.0 - p)))
}

/// Shots needed to reach the target variance, by the leading-order scaling
/// law of each method:
///
/// * `Rida`: `‖x‖² γ^{2L} / σ²`
/// * `TrexEzne`: `(3/2) ‖x‖² γ^{6L} / σ²`
/// * `CnotQzne`: `(27/64) ‖x‖² γ^{10L} / σ²` (leading term; see
///   [`overhead_cnot_qzne_exact`])
/// * `Raw`: `‖x‖² / σ²` for reference (no amplification, but also no bias
///   removal).
pub fn overhead(method: Method, q: &OverheadQuery) -> Result<f64> {
    q.validate()?;
    let base = q.weight_norm_sq() / q.sigma2;
    let gl = |k: u32| q.gamma.powi((k * q.layers) as i32);
    match method {
        Method::Raw => Ok(base),
        Method::Rida => Ok(base * gl(2)),
        Method::TrexEzne => Ok(1.5 * base * gl(6)),
        Method::CnotQzne => Ok(27.0 / 64.0 * base * gl(10)),
        other => Err(Error::InvalidArgument(format!(
            "no overhead scaling law for method '{other}'"
        ))),
    }
}

/// The exact (all-terms) overhead of the quadratic extrapolation with
/// per-point depolarization inversion: the three points at fold factors
/// 1, 3 and 5 contribute extrapolation weights `(15, -10, 3)/8` and error
/// amplifications `γ^{2L}`, `γ^{6L}`, `γ^{10L}` respectively, each tripled
/// by the three-way shot split. Reduces to [`QZNE_RAW_SHOT_RATIO`] times
/// the raw overhead at `γ = 1`.
pub fn overhead_cnot_qzne_exact(q: &OverheadQuery) -> Result<f64> {
    q.validate()?;
    let base = q.weight_norm_sq() / q.sigma2;
    let gl = |k: u32| q.gamma.powi((k * q.layers) as i32);
    let sum = 9.0 / 64.0 * gl(10) + 100.0 / 64.0 * gl(6) + 225.0 / 64.0 * gl(2);
    Ok(3.0 * base * sum)
}

/// Partial derivatives of the monotone-branch exponential extrapolation
/// `x0 = x1 + (x1 - x3)/(u + sqrt(u))` with `u = (x3 - x5)/(x1 - x3)`,
/// evaluated on geometric data, where they depend on `u` alone.
fn ezne_gradient(u: f64) -> (f64, f64, f64) {
    let su = u.sqrt();
    let g = 1.0 / (u + su);
    let gp = -(1.0 + 0.5 / su) / ((u + su) * (u + su));
    let d1 = 1.0 + g - u * gp;
    let d3 = -g + (1.0 + u) * gp;
    let d5 = -gp;
    (d1, d3, d5)
}

/// Exact variance of the exponential extrapolation on geometric data with
/// decay `u = γ^{-2L}` per two fold steps, at `s` total shots split three
/// ways: `(3/s) Σᵢ (∂x0/∂xᵢ)²` by first-order error propagation.
/// Asymptotically (small `u`) this approaches `3 γ^{6L} / (2s)`; see
/// [`ezne_variance_leading`].
pub fn ezne_variance_exact(u: f64, s: u64) -> Result<f64> {
    check_shots(s)?;
    if u <= 0.0 || !u.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "decay ratio must be positive and finite, got {u}"
        )));
    }
    let (d1, d3, d5) = ezne_gradient(u);
    Ok(3.0 / s as f64 * (d1 * d1 + d3 * d3 + d5 * d5))
}

/// Leading term of [`ezne_variance_exact`]: `3 γ^{6L} / (2s) = 3/(2 s u³)`.
pub fn ezne_variance_leading(u: f64, s: u64) -> Result<f64> {
    check_shots(s)?;
    if u <= 0.0 || !u.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "decay ratio must be positive and finite, got {u}"
        )));
    }
    Ok(3.0 / (2.0 * s as f64 * u * u * u))
}

/// Variance of the estimation-circuit depolarization probability under the
/// two ways of drawing gates, as `(fixed, random)`:
///
/// * fixed split (exactly `g1` one-qubit and `g2` two-qubit gates):
///   `4 (g1 Var(α) + g2 Var(β))`;
/// * random split (each of the `g1 + g2` picks is a one-qubit gate with
///   probability `g1/(g1+g2)`): the fixed value plus
///   `4 (E[α] - E[β])² g1 g2 / (g1 + g2)`, strictly larger whenever the
///   mean rates differ.
///
/// The factor 4 reflects the estimation circuit running each selected gate
/// and its inverse (twice the error), squared into the variance.
pub fn selection_variance(st: &SelectionStats) -> Result<(f64, f64)> {
    st.validate()?;
    let (g1, g2) = (st.g1 as f64, st.g2 as f64);
    let fixed = 4.0 * (g1 * st.var_a + g2 * st.var_b);
    let g = g1 + g2;
    let random = if g == 0.0 {
        fixed
    } else {
        let dm = st.mean_a - st.mean_b;
        fixed + 4.0 * dm * dm * g1 * g2 / g
    };
    Ok((fixed, random))
}

/// Decay ratio per two fold steps for a circuit whose whole-circuit
/// depolarization probability is `p`: `u = (1 - p)²`.
pub fn geometric_u(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "depolarization probability must lie in [0, 1], got {p}"
        )));
    }
    Ok((1.0 - p) * (1.0 - p))
}

/// The layered form of the decay ratio: `u = γ^{-2L}` for `L` layers of
/// error strength `γ >= 1`.
pub fn layered_u(gamma: f64, layers: u32) -> Result<f64> {
    if gamma < 1.0 || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "error strength gamma must be finite and at least 1, got {gamma}"
        )));
    }
    Ok(gamma.powi(-2 * layers as i32))
}
