//! Time-dependent two-atom amplitude at the detected wavenumber `k = k_c`.
//!
//! In position space the amplitude is a product of the initial Gaussian, the
//! two single-scattering phases and the bracket `[1 − e^{−tΠ}]/Π`, where
//!
//! ```text
//! Π(x, t) = i·detuning + Γ[1 + sinc(E_m t/ħ)·cos φ·cos(k_c(x_a − x_b))]
//! ```
//!
//! The momentum amplitude is its Fourier transform `∫dx e^{ix·q} F(x)`.
//! The bracket tends to `t` at early times (Bell-like state) and to `1/Π`
//! for `tΓδ² ≫ 1`, whose Fourier series in `k_c(x_a−x_b)` generates the
//! cascade of recoil orders.

use num_complex::Complex64;
use rayon::prelude::*;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::fourier::{centered_transform, Kernel};
use crate::model::{normalize, BipartiteAmplitude, ModelParams, MomentumGrid, Representation};
use crate::schmidt;

/// Below this `|tΠ|` the bracket is evaluated from its series.
const SERIES_THRESHOLD: f64 = 1e-6;

/// `sin(x)/x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// The complex rate `Π` at positions `(x_a, x_b)` and time `t`.
pub fn pi_factor(x_a: f64, x_b: f64, t: f64, params: &ModelParams) -> Complex64 {
    let modulation = sinc(params.em_over_hbar * t) * params.cos_phi();
    Complex64::new(
        params.gamma_rate * (1.0 + modulation * (params.k_c * (x_a - x_b)).cos()),
        params.detuning,
    )
}

/// `[1 − e^{−tΠ}]/Π`, switching to `t(1 − tΠ/2)` when `|tΠ|` is tiny.
pub fn growth_bracket(t: f64, pi: Complex64) -> Complex64 {
    let z = pi * t;
    if z.norm() < SERIES_THRESHOLD {
        t * (1.0 - z * 0.5)
    } else {
        (1.0 - (-z).exp()) / pi
    }
}

/// Estimated time for the pairwise-scattering state to build up, `1/(δ²Γ)`.
pub fn buildup_time_estimate(params: &ModelParams) -> Result<f64> {
    if params.delta == 0.0 {
        return Err(Error::Undefined(
            "buildup time diverges for parallel dipoles (delta = 0)",
        ));
    }
    Ok(1.0 / (params.delta * params.delta * params.gamma_rate))
}

/// Normalized momentum amplitude at coupling time `t`.
pub fn amplitude_at_time(
    params: &ModelParams,
    grid: &MomentumGrid,
    t: f64,
) -> Result<BipartiteAmplitude> {
    params.validate()?;
    if !t.is_finite() || t < 0.0 {
        return Err(Error::param("t", "must be finite and non-negative"));
    }
    if t == 0.0 {
        return Err(Error::Vacuum);
    }
    let n = grid.n_points();
    let x = grid.position_points();
    let dx = grid.position_spacing();
    let sigma = params.sigma;
    let k = params.k_c;

    let envelope: Vec<f64> = x.iter().map(|&xi| (-(sigma * sigma) * xi * xi / 4.0).exp()).collect();
    let phase: Vec<Complex64> = x.iter().map(|&xi| Complex64::from_polar(1.0, k * xi)).collect();
    // Π depends only on |x_a − x_b| = d·dx
    let bracket: Vec<Complex64> = (0..n)
        .map(|d| growth_bracket(t, pi_factor(d as f64 * dx, 0.0, t, params)))
        .collect();

    let kernel = Array2::from_shape_fn((n, n), |(i, j)| {
        (phase[i] + phase[j]) * bracket[i.abs_diff(j)] * (envelope[i] * envelope[j])
    });
    let values = centered_transform(&kernel, Kernel::ToMomentum, dx);
    normalize(BipartiteAmplitude::new(values, grid.clone(), Representation::Momentum)?)
}

/// One `(t, K)` point of a time sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub k_value: f64,
}

/// Schmidt number as a function of coupling time.
#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementTrace {
    pub samples: Vec<TraceSample>,
    pub params: ModelParams,
}

impl EntanglementTrace {
    pub fn final_k(&self) -> f64 {
        self.samples.last().map_or(f64::NAN, |s| s.k_value)
    }

    pub fn max_k(&self) -> f64 {
        self.samples.iter().map(|s| s.k_value).fold(f64::NAN, f64::max)
    }

    /// First time `K` reaches `level`, interpolated linearly in `log t`
    /// between the bracketing samples.
    pub fn first_crossing(&self, level: f64) -> Option<f64> {
        let first = self.samples.first()?;
        if first.k_value >= level {
            return Some(first.t);
        }
        self.samples.windows(2).find_map(|w| {
            let (a, b) = (w[0], w[1]);
            if a.k_value < level && b.k_value >= level {
                let frac = (level - a.k_value) / (b.k_value - a.k_value);
                let (la, lb) = (a.t.ln(), b.t.ln());
                Some((la + frac * (lb - la)).exp())
            } else {
                None
            }
        })
    }
}

/// `count` logarithmically spaced times from `start` to `stop` inclusive.
pub fn log_times(start: f64, stop: f64, count: usize) -> Result<Vec<f64>> {
    if !(start > 0.0 && stop > start && start.is_finite() && stop.is_finite()) {
        return Err(Error::param("times", "need 0 < start < stop"));
    }
    if count < 2 {
        return Err(Error::param("times", "need at least two samples"));
    }
    let (la, lb) = (start.ln(), stop.ln());
    Ok((0..count)
        .map(|i| {
            if i == count - 1 {
                stop
            } else {
                (la + (lb - la) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect())
}

/// Schmidt number at each requested time. Samples are independent and are
/// evaluated in parallel; the first failing sample aborts the trace.
pub fn entanglement_trace(
    params: &ModelParams,
    grid: &MomentumGrid,
    times: &[f64],
) -> Result<EntanglementTrace> {
    params.validate()?;
    if times.is_empty() {
        return Err(Error::param("times", "empty time list"));
    }
    if times.iter().any(|&t| !(t.is_finite() && t > 0.0)) {
        return Err(Error::param("times", "all times must be positive"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("times", "times must be strictly increasing"));
    }
    let results: Vec<Result<f64>> = times
        .par_iter()
        .map(|&t| {
            let state = amplitude_at_time(params, grid, t)?;
            Ok(schmidt::spectrum(&state)?.k_number)
        })
        .collect();
    let mut samples = Vec::with_capacity(times.len());
    for (&t, res) in times.iter().zip(results) {
        match res {
            Ok(k_value) => samples.push(TraceSample { t, k_value }),
            Err(e) => {
                return Err(Error::TraceSample {
                    t,
                    source: Box::new(e),
                })
            }
        }
    }
    Ok(EntanglementTrace {
        samples,
        params: *params,
    })
}
