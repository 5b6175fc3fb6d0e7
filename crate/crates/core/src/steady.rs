//! Long-time states after the scattered photon is detected at `k = k_c`.
//!
//! With an uncompensated energy mismatch only single-atom scattering survives
//! and the state is the two-term Bell-like superposition
//! `G(q_a+k_c, q_b) + G(q_a, q_b+k_c)`. With `E_m = 0` pairwise re-scattering
//! builds the correlated state `D′(q_a+k_c, q_b) + D′(q_a, q_b+k_c)` where,
//! in the rotated coordinates `s = q_a+q_b`, `r = q_a−q_b`,
//!
//! ```text
//! D′ = e^{−s²/(2σ²)} · e^{−|r|δ/(√2 k_c)} · Σ_{n≥0} e^{−σ²π²(2n+1)²/(8k_c²)} cos(π(2n+1) r/(2k_c))
//! ```
//!
//! The cosine series is a Gaussian train in `r`: by Poisson summation it
//! equals `(k_c/(√(2π)σ)) Σ_m (−1)^m e^{−(r−2m k_c)²/(2σ²)}`. Each Gaussian
//! is one recoil order. [`PairwiseForm::OrderResolved`] attaches the
//! δ-envelope to each order at its centre `r = 2m k_c`, which is what the
//! `t → ∞` limit of the time-dependent amplitude produces and stays exact when
//! neighbouring orders overlap (`σ ≳ k_c`). [`PairwiseForm::SmoothEnvelope`]
//! multiplies the truncated cosine series by the envelope pointwise. The two
//! coincide for `σ ≪ k_c` and are identical at `δ = 0`.

use std::f64::consts::{PI, SQRT_2};

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{
    gaussian_1d, normalize, BipartiteAmplitude, ModelParams, MomentumGrid, Representation,
};

/// Default tolerance for truncating the cosine series.
pub const DEFAULT_SERIES_TOL: f64 = 1e-12;

/// Gaussians further than this many σ from a point are below `f64` range.
const GAUSSIAN_REACH: f64 = 40.0;

/// Where the cosine series of `D′` is cut off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTruncation {
    /// Highest retained index `n`.
    pub n_max: usize,
    /// Prefactor of the first dropped term beyond the next one,
    /// `exp[−σ²π²(2n_max+3)²/(8k_c²)]`.
    pub tail_bound: f64,
}

/// How the δ-envelope is applied to the recoil-order structure of `D′`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PairwiseForm {
    /// Envelope sampled at the centre of each recoil order.
    #[default]
    OrderResolved,
    /// Envelope multiplied pointwise onto the truncated cosine series.
    SmoothEnvelope(SeriesTruncation),
}

impl PairwiseForm {
    /// Pointwise-envelope form with the default series tolerance.
    pub fn smooth_envelope(params: &ModelParams) -> Result<Self> {
        Ok(PairwiseForm::SmoothEnvelope(truncation_order(
            params,
            DEFAULT_SERIES_TOL,
        )?))
    }
}

fn series_coefficient(params: &ModelParams, n: usize) -> f64 {
    let odd = (2 * n + 1) as f64;
    let k = params.k_c;
    (-(params.sigma * params.sigma * PI * PI * odd * odd) / (8.0 * k * k)).exp()
}

/// Smallest `n_max` such that `exp[−σ²π²(2n_max+3)²/(8k_c²)] < tol`.
pub fn truncation_order(params: &ModelParams, tol: f64) -> Result<SeriesTruncation> {
    params.validate()?;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::param("tol", "must lie in (0, 1)"));
    }
    let mut n_max = 0usize;
    loop {
        // coefficient of index n_max + 1
        let tail = series_coefficient(params, n_max + 1);
        if tail < tol {
            return Ok(SeriesTruncation {
                n_max,
                tail_bound: tail,
            });
        }
        n_max += 1;
    }
}

/// Truncated Fourier series factor of `D′` as a function of `r = q_a − q_b`.
pub fn cosine_series(r: f64, params: &ModelParams, trunc: &SeriesTruncation) -> f64 {
    let w = PI / (2.0 * params.k_c);
    (0..=trunc.n_max)
        .map(|n| series_coefficient(params, n) * (w * (2 * n + 1) as f64 * r).cos())
        .sum()
}

fn total_momentum_factor(s: f64, sigma: f64) -> f64 {
    (-(s * s) / (2.0 * sigma * sigma)).exp()
}

fn smooth_envelope(r: f64, params: &ModelParams) -> f64 {
    (-(r.abs() * params.delta) / (SQRT_2 * params.k_c)).exp()
}

/// Relative-momentum factor of the smooth-envelope `D′`.
fn relative_smooth(r: f64, params: &ModelParams, trunc: &SeriesTruncation) -> f64 {
    smooth_envelope(r, params) * cosine_series(r, params, trunc)
}

/// Relative-momentum factor of the order-resolved `D′`: the Poisson-resummed
/// cosine series with weight `e^{−√2 δ |m|}` on order `m`.
fn relative_order_resolved(r: f64, params: &ModelParams) -> f64 {
    let k = params.k_c;
    let sigma = params.sigma;
    let reach = GAUSSIAN_REACH * sigma;
    let m_lo = ((r - reach) / (2.0 * k)).floor() as i64;
    let m_hi = ((r + reach) / (2.0 * k)).ceil() as i64;
    let mut acc = 0.0;
    for m in m_lo..=m_hi {
        let centre = 2.0 * m as f64 * k;
        let d = r - centre;
        let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        acc += sign
            * (-SQRT_2 * params.delta * m.unsigned_abs() as f64).exp()
            * (-(d * d) / (2.0 * sigma * sigma)).exp();
    }
    acc * k / ((2.0 * PI).sqrt() * sigma)
}

/// `D′(q_a, q_b)` exactly as the truncated cosine series with a pointwise envelope.
pub fn dprime(q_a: f64, q_b: f64, params: &ModelParams, trunc: &SeriesTruncation) -> f64 {
    total_momentum_factor(q_a + q_b, params.sigma) * relative_smooth(q_a - q_b, params, trunc)
}

/// `D′(q_a, q_b)` with the envelope attached per recoil order.
pub fn dprime_order_resolved(q_a: f64, q_b: f64, params: &ModelParams) -> f64 {
    total_momentum_factor(q_a + q_b, params.sigma) * relative_order_resolved(q_a - q_b, params)
}

/// The `E_m = 0` pairwise-scattering steady state in its default form.
pub fn steady_state_pairwise(
    params: &ModelParams,
    grid: &MomentumGrid,
) -> Result<BipartiteAmplitude> {
    steady_state_pairwise_with(params, grid, PairwiseForm::default())
}

/// `D′(q_a+k_c, q_b) + D′(q_a, q_b+k_c)`, normalized on the grid.
///
/// `em_over_hbar` is ignored. A truncated δ-envelope is flagged on the
/// grid ([`MomentumGrid::envelope_truncated`]), not treated as an error.
pub fn steady_state_pairwise_with(
    params: &ModelParams,
    grid: &MomentumGrid,
    form: PairwiseForm,
) -> Result<BipartiteAmplitude> {
    params.validate()?;
    let n = grid.n_points();
    let dq = grid.spacing();
    let k = params.k_c;

    // D_ij = S(i + j) · R(i − j): both shifted terms share s' = s + k_c and
    // differ only in r' = r ± k_c.
    let sum_factor: Vec<f64> = (0..2 * n - 1)
        .map(|idx| {
            let s = -2.0 * grid.extent() + idx as f64 * dq;
            total_momentum_factor(s + k, params.sigma)
        })
        .collect();
    let relative = |r: f64| match form {
        PairwiseForm::OrderResolved => relative_order_resolved(r, params),
        PairwiseForm::SmoothEnvelope(trunc) => relative_smooth(r, params, &trunc),
    };
    // R is even in r; evaluate r ≥ 0 once and mirror so D is exactly symmetric.
    let half: Vec<f64> = (0..n)
        .map(|d| {
            let r = d as f64 * dq;
            relative(r + k) + relative(r - k)
        })
        .collect();

    let values = Array2::from_shape_fn((n, n), |(i, j)| {
        let d = i.abs_diff(j);
        Complex64::new(sum_factor[i + j] * half[d], 0.0)
    });
    normalize(BipartiteAmplitude::new(values, grid.clone(), Representation::Momentum)?)
}

/// Bell-like single-scattering state `G(q_a+k_c, q_b) + G(q_a, q_b+k_c)`, normalized.
pub fn steady_state_bell(params: &ModelParams, grid: &MomentumGrid) -> Result<BipartiteAmplitude> {
    params.validate()?;
    let q = grid.points();
    let sigma = params.sigma;
    let g: Vec<f64> = q.iter().map(|&x| gaussian_1d(x, sigma)).collect();
    let g_shift: Vec<f64> = q.iter().map(|&x| gaussian_1d(x + params.k_c, sigma)).collect();
    let n = q.len();
    let values = Array2::from_shape_fn((n, n), |(i, j)| {
        Complex64::new(g_shift[i] * g[j] + g[i] * g_shift[j], 0.0)
    });
    normalize(BipartiteAmplitude::new(values, grid.clone(), Representation::Momentum)?)
}
