//! Schmidt decomposition of bipartite amplitudes and the analytic spectrum
//! of the pairwise-scattering state.
//!
//! Numerically the decomposition is the SVD of the sampled amplitude. On a
//! uniform lattice the quadrature weight is a scalar, so it drops out of the
//! normalized eigenvalues `λ_n = s_n²/Σs²` and only rescales the modes.

use std::f64::consts::SQRT_2;

use faer::{c64, Mat};
use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{gaussian_1d, BipartiteAmplitude, ModelParams, MomentumGrid};

/// Eigenvalues at or below this are dropped from spectra.
pub const LAMBDA_CUTOFF: f64 = 1e-14;

/// Tail fraction left out of converged analytic spectra.
pub const ANALYTIC_TAIL: f64 = 1e-12;

/// Normalized Schmidt eigenvalues in descending order with the derived
/// entanglement measures.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtSpectrum {
    pub lambdas: Vec<f64>,
    /// Schmidt number `1/Σλ²`.
    pub k_number: f64,
    /// Entanglement entropy `−Σλ log₂ λ` in ebits.
    pub entropy: f64,
}

impl SchmidtSpectrum {
    /// Normalizes non-negative weights, sorts them and drops those below
    /// [`LAMBDA_CUTOFF`].
    pub fn from_weights(mut weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::NonFinite);
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Degenerate("spectrum has no weight".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        weights.sort_by(|a, b| b.total_cmp(a));
        weights.retain(|&w| w > LAMBDA_CUTOFF);
        let k_number = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let entropy = -weights.iter().map(|w| w * w.log2()).sum::<f64>();
        Ok(SchmidtSpectrum {
            lambdas: weights,
            k_number,
            entropy: entropy.max(0.0),
        })
    }

    pub fn rank(&self) -> usize {
        self.lambdas.len()
    }
}

/// Single-particle Schmidt modes, one per column, unit norm under the 1-D
/// quadrature weight. Column `n` pairs with `lambdas[n]`.
///
/// Phase convention: every `modes_a` column is real and positive at its
/// largest-magnitude sample; `modes_b` carries the compensating phase.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtModes {
    pub modes_a: Array2<Complex64>,
    pub modes_b: Array2<Complex64>,
    /// 1-D quadrature weight (axis spacing).
    pub axis_weight: f64,
}

impl SchmidtModes {
    pub fn count(&self) -> usize {
        self.modes_a.ncols()
    }

    pub fn mode_a(&self, n: usize) -> Vec<Complex64> {
        self.modes_a.column(n).to_vec()
    }

    pub fn mode_b(&self, n: usize) -> Vec<Complex64> {
        self.modes_b.column(n).to_vec()
    }

    /// `Σ_n √λ_n mode_a ⊗ mode_b` over the retained modes.
    pub fn reconstruct(&self, spectrum: &SchmidtSpectrum) -> Array2<Complex64> {
        let n = self.modes_a.nrows();
        let mut out = Array2::zeros((n, n));
        for (idx, &lambda) in spectrum.lambdas.iter().enumerate() {
            let w = lambda.sqrt();
            let a = self.modes_a.column(idx);
            let b = self.modes_b.column(idx);
            for i in 0..n {
                let ai = a[i] * w;
                for j in 0..n {
                    out[[i, j]] += ai * b[j];
                }
            }
        }
        out
    }
}

fn real_matrix(a: &BipartiteAmplitude) -> Mat<f64> {
    let v = a.values();
    let n = v.nrows();
    Mat::from_fn(n, n, |i, j| v[[i, j]].re)
}

fn complex_matrix(a: &BipartiteAmplitude) -> Mat<c64> {
    let v = a.values();
    let n = v.nrows();
    Mat::from_fn(n, n, |i, j| v[[i, j]])
}

fn svd_error(e: impl std::fmt::Debug) -> Error {
    Error::Decomposition(format!("{e:?}"))
}

fn weights_from_singular_values(s: &[f64]) -> Vec<f64> {
    s.iter().map(|x| x * x).collect()
}

/// Spectrum only, from singular values (no singular vectors).
pub fn spectrum(a: &BipartiteAmplitude) -> Result<SchmidtSpectrum> {
    a.require_normalized()?;
    let s = if a.is_real() {
        real_matrix(a).singular_values().map_err(svd_error)?
    } else {
        complex_matrix(a).singular_values().map_err(svd_error)?
    };
    SchmidtSpectrum::from_weights(weights_from_singular_values(&s))
}

/// Full Schmidt decomposition: spectrum plus phase-fixed modes.
pub fn decompose(a: &BipartiteAmplitude) -> Result<(SchmidtSpectrum, SchmidtModes)> {
    a.require_normalized()?;
    let n = a.grid().n_points();
    let h = a.grid().axis_spacing(a.representation());
    let inv_sqrt_h = 1.0 / h.sqrt();

    // (singular values, U, conj(V)) as plain arrays
    let (s, u, vbar): (Vec<f64>, Array2<Complex64>, Array2<Complex64>) = if a.is_real() {
        let svd = real_matrix(a).thin_svd().map_err(svd_error)?;
        let s: Vec<f64> = (0..n).map(|k| svd.S().column_vector()[k]).collect();
        let u = Array2::from_shape_fn((n, n), |(i, k)| Complex64::new(svd.U()[(i, k)], 0.0));
        let v = Array2::from_shape_fn((n, n), |(j, k)| Complex64::new(svd.V()[(j, k)], 0.0));
        (s, u, v)
    } else {
        let svd = complex_matrix(a).thin_svd().map_err(svd_error)?;
        let s: Vec<f64> = (0..n).map(|k| svd.S().column_vector()[k].re).collect();
        let u = Array2::from_shape_fn((n, n), |(i, k)| svd.U()[(i, k)]);
        let v = Array2::from_shape_fn((n, n), |(j, k)| svd.V()[(j, k)].conj());
        (s, u, v)
    };

    let spectrum = SchmidtSpectrum::from_weights(weights_from_singular_values(&s))?;
    let rank = spectrum.rank();
    let mut modes_a = Array2::zeros((n, rank));
    let mut modes_b = Array2::zeros((n, rank));
    for k in 0..rank {
        let col = u.column(k);
        let peak = col
            .iter()
            .enumerate()
            .fold((0usize, -1.0f64), |best, (i, z)| {
                let m = z.norm();
                if m > best.1 {
                    (i, m)
                } else {
                    best
                }
            })
            .0;
        let rot = Complex64::from_polar(1.0, -col[peak].arg());
        for i in 0..n {
            modes_a[[i, k]] = u[[i, k]] * rot * inv_sqrt_h;
            modes_b[[i, k]] = vbar[[i, k]] * rot.conj() * inv_sqrt_h;
        }
        // exact zero imaginary part at the peak
        modes_a[[peak, k]] = Complex64::new(modes_a[[peak, k]].norm(), 0.0);
    }
    Ok((
        spectrum,
        SchmidtModes {
            modes_a,
            modes_b,
            axis_weight: h,
        },
    ))
}

/// Schmidt number from the purity of the reduced one-particle density
/// matrix, `(Tr ρ)²/Tr ρ²` with `ρ = A A†`. Uses no singular values.
pub fn purity_oracle(a: &BipartiteAmplitude) -> Result<f64> {
    a.require_normalized()?;
    let trace: f64 = a.values().iter().map(|z| z.norm_sqr()).sum();
    let trace_sq: f64 = if a.is_real() {
        let m = real_matrix(a);
        let rho = &m * m.transpose();
        let mut acc = 0.0;
        for j in 0..rho.ncols() {
            for i in 0..rho.nrows() {
                acc += rho[(i, j)] * rho[(i, j)];
            }
        }
        acc
    } else {
        let m = complex_matrix(a);
        let rho = &m * m.adjoint();
        let mut acc = 0.0;
        for j in 0..rho.ncols() {
            for i in 0..rho.nrows() {
                acc += rho[(i, j)].norm_sqr();
            }
        }
        acc
    };
    Ok(trace * trace / trace_sq)
}

/// Cosines of the principal angles between two subspaces of 1-D functions.
///
/// Both sets are orthonormalized (modified Gram–Schmidt under `weight`)
/// before the overlap matrix is decomposed, so nearly orthogonal inputs such
/// as shifted Gaussians are fine. Returned in descending order.
pub fn principal_cosines(
    first: &[Vec<Complex64>],
    second: &[Vec<Complex64>],
    weight: f64,
) -> Result<Vec<f64>> {
    let p = orthonormalize(first, weight)?;
    let q = orthonormalize(second, weight)?;
    let overlap = Mat::<c64>::from_fn(p.len(), q.len(), |i, j| weighted_dot(&p[i], &q[j], weight));
    overlap.singular_values().map_err(svd_error)
}

fn weighted_dot(a: &[Complex64], b: &[Complex64], weight: f64) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>() * weight
}

fn orthonormalize(vectors: &[Vec<Complex64>], weight: f64) -> Result<Vec<Vec<Complex64>>> {
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        for b in &basis {
            let c = weighted_dot(b, &w, weight);
            w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let norm = weighted_dot(&w, &w, weight).re.sqrt();
        if norm.is_nan() || norm <= 1e-12 {
            return Err(Error::Degenerate("linearly dependent subspace vectors".into()));
        }
        w.iter_mut().for_each(|x| *x /= norm);
        basis.push(w);
    }
    Ok(basis)
}

/// Analytic pairwise-scattering spectrum labelled by scattering order `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSpectrum {
    /// Orders `−n_max−1 ..= n_max`.
    pub orders: Vec<i64>,
    /// Normalized `λ_n`, aligned with `orders`.
    pub lambdas: Vec<f64>,
}

impl AnalyticSpectrum {
    pub fn lambda(&self, n: i64) -> Option<f64> {
        let first = *self.orders.first()?;
        let idx = usize::try_from(n - first).ok()?;
        self.lambdas.get(idx).copied()
    }

    pub fn to_spectrum(&self) -> Result<SchmidtSpectrum> {
        SchmidtSpectrum::from_weights(self.lambdas.clone())
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta == 0.0 {
        return Err(Error::Undefined(
            "all weights vanish at order zero for delta = 0 (singular limit)",
        ));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::param("delta", "must lie in (0, 1]"));
    }
    Ok(())
}

fn unnormalized_lambda(delta: f64, n: i64) -> f64 {
    let a = SQRT_2 * delta;
    let d = (-a * n.unsigned_abs() as f64).exp() - (-a * (n + 1).unsigned_abs() as f64).exp();
    d * d
}

/// `λ_n ∝ (e^{−√2δ|n|} − e^{−√2δ|n+1|})²` for `n = −n_max−1 ..= n_max`.
pub fn analytic_spectrum(delta: f64, n_max: usize) -> Result<AnalyticSpectrum> {
    check_delta(delta)?;
    let n_max = n_max as i64;
    let orders: Vec<i64> = (-n_max - 1..=n_max).collect();
    let raw: Vec<f64> = orders.iter().map(|&n| unnormalized_lambda(delta, n)).collect();
    let total: f64 = raw.iter().sum();
    Ok(AnalyticSpectrum {
        orders,
        lambdas: raw.into_iter().map(|w| w / total).collect(),
    })
}

/// Smallest `n_max` whose neglected geometric tail is below `tol` of the total.
pub fn analytic_order_for_tail(delta: f64, tol: f64) -> Result<usize> {
    check_delta(delta)?;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::param("tol", "must lie in (0, 1)"));
    }
    // tail beyond n_max on both sides is r^{n_max+1} of the total, r = e^{−2√2δ}
    let log_r = -2.0 * SQRT_2 * delta;
    let needed = (tol.ln() / log_r).floor() as usize;
    Ok(needed)
}

/// Analytic spectrum truncated where the tail drops below [`ANALYTIC_TAIL`].
pub fn analytic_spectrum_converged(delta: f64) -> Result<AnalyticSpectrum> {
    analytic_spectrum(delta, analytic_order_for_tail(delta, ANALYTIC_TAIL)?)
}

/// Closed-form and small-δ Schmidt numbers of the analytic spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticK {
    /// `2(1+r)/(1−r)`, `r = e^{−2√2δ}`.
    pub exact: f64,
    /// `√2/δ`.
    pub approx: f64,
}

pub fn analytic_k(delta: f64) -> Result<AnalyticK> {
    check_delta(delta)?;
    let r = (-2.0 * SQRT_2 * delta).exp();
    Ok(AnalyticK {
        exact: 2.0 * (1.0 + r) / (1.0 - r),
        approx: SQRT_2 / delta,
    })
}

/// `(−1)^{|n|+1} Sgn(n)` with `Sgn(0) = +1`.
pub fn analytic_mode_sign(n: i64) -> f64 {
    let parity = if (n.unsigned_abs() + 1) % 2 == 0 { 1.0 } else { -1.0 };
    let sgn = if n >= 0 { 1.0 } else { -1.0 };
    parity * sgn
}

/// One-axis factors of the analytic order-`n` mode:
/// `g(q_a − n k_c)` and `g(q_b + (n+1) k_c)`.
pub fn analytic_axis_modes(n: i64, params: &ModelParams, grid: &MomentumGrid) -> (Vec<f64>, Vec<f64>) {
    let shift = n as f64 * params.k_c;
    let q = grid.points();
    let a = q.iter().map(|&x| gaussian_1d(x - shift, params.sigma)).collect();
    let b = q
        .iter()
        .map(|&x| gaussian_1d(x + shift + params.k_c, params.sigma))
        .collect();
    (a, b)
}

/// `S_n(q) = (−1)^{|n|+1} Sgn(n) G(q_a − n k_c, q_b + n k_c + k_c)`. Only
/// meaningful as a Schmidt mode for `σ ≪ k_c`.
pub fn analytic_modes(
    n: i64,
    params: &ModelParams,
    grid: &MomentumGrid,
) -> Result<BipartiteAmplitude> {
    params.validate()?;
    let (a, b) = analytic_axis_modes(n, params, grid);
    let sign = analytic_mode_sign(n);
    let scaled: Vec<f64> = a.iter().map(|x| x * sign).collect();
    crate::model::outer_product(grid, &scaled, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_grid, gaussian_initial, inner_product, normalize, Representation};
    use crate::steady::steady_state_bell;

    #[test]
    fn spectrum_of_product_state() {
        let p = ModelParams {
            sigma: 0.5,
            ..ModelParams::default()
        };
        let g = build_grid(&p, 128, 6.0).unwrap();
        let a = normalize(gaussian_initial(&p, &g).unwrap()).unwrap();
        let (s, modes) = decompose(&a).unwrap();
        assert_eq!(s.rank(), 1);
        assert!((s.k_number - 1.0).abs() < 1e-9);
        assert!(s.entropy.abs() < 1e-9);
        assert!((purity_oracle(&a).unwrap() - 1.0).abs() < 1e-9);
        let rebuilt = modes.reconstruct(&s);
        let err: f64 = rebuilt
            .iter()
            .zip(a.values())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            * a.norm_weight();
        assert!(err.sqrt() < 1e-8);
        // positive real peak
        let m = modes.mode_a(0);
        let peak = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(m.iter().any(|z| z.im == 0.0 && z.re == peak));
    }

    #[test]
    fn rejects_unnormalized() {
        let p = ModelParams {
            sigma: 0.5,
            ..ModelParams::default()
        };
        let g = build_grid(&p, 64, 4.0).unwrap();
        let a = gaussian_initial(&p, &g).unwrap();
        let doubled = BipartiteAmplitude::new(
            a.values().mapv(|z| z * 2.0),
            g.clone(),
            Representation::Momentum,
        )
        .unwrap();
        assert!(matches!(decompose(&doubled), Err(Error::NotNormalized { .. })));
        assert!(matches!(purity_oracle(&doubled), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn bell_has_two_modes() {
        let p = ModelParams::default();
        let g = build_grid(&p, 256, 6.0).unwrap();
        let a = steady_state_bell(&p, &g).unwrap();
        let s = spectrum(&a).unwrap();
        assert!((s.k_number - 2.0).abs() < 1e-4);
        assert!((s.entropy - 1.0).abs() < 1e-3);
        assert!(((purity_oracle(&a).unwrap() - s.k_number) / s.k_number).abs() < 1e-8);
    }

    #[test]
    fn analytic_spectrum_structure() {
        for delta in [0.05, 0.1, 0.7] {
            let spec = analytic_spectrum_converged(delta).unwrap();
            assert_eq!(spec.lambda(0), spec.lambda(-1));
            let total: f64 = spec.lambdas.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            let ratio = (-2.0 * SQRT_2 * delta).exp();
            for n in 0..5 {
                let r = spec.lambda(n + 1).unwrap() / spec.lambda(n).unwrap();
                assert!((r - ratio).abs() < 1e-12 * ratio.max(1.0));
            }
        }
        assert!(matches!(analytic_spectrum(0.0, 10), Err(Error::Undefined(_))));
        assert!(analytic_spectrum(1.5, 10).is_err());
    }

    #[test]
    fn analytic_tail_is_small_enough() {
        for delta in [0.01, 0.1, 1.0] {
            let n_max = analytic_order_for_tail(delta, 1e-12).unwrap();
            let r = (-2.0 * SQRT_2 * delta).exp();
            assert!(r.powi(n_max as i32 + 1) < 1e-12);
            assert!(n_max == 0 || r.powi(n_max as i32) >= 1e-12);
        }
    }

    #[test]
    fn analytic_k_values() {
        let k = analytic_k(0.1).unwrap();
        assert!((k.approx - 14.142135623730951).abs() < 1e-12);
        assert!((k.exact - 14.236).abs() < 1e-3);
        let k = analytic_k(1.0).unwrap();
        assert!((k.exact - 2.2513).abs() < 1e-3);
        assert!(matches!(analytic_k(0.0), Err(Error::Undefined(_))));
    }

    #[test]
    fn mode_signs() {
        assert_eq!(analytic_mode_sign(0), -1.0);
        assert_eq!(analytic_mode_sign(-1), -1.0);
        assert_eq!(analytic_mode_sign(1), 1.0);
        assert_eq!(analytic_mode_sign(-2), 1.0);
        assert_eq!(analytic_mode_sign(2), -1.0);
    }

    #[test]
    fn analytic_modes_peak_and_overlap() {
        let p = ModelParams {
            sigma: 0.1,
            ..ModelParams::default()
        };
        let g = build_grid(&p, 512, 4.0).unwrap();
        let q = g.points();
        for (n, expect) in [(0i64, (0.0, -1.0)), (-1, (-1.0, 0.0))] {
            let m = analytic_modes(n, &p, &g).unwrap();
            let (idx, _) = m
                .values()
                .indexed_iter()
                .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                .unwrap();
            assert!((q[idx.0] - expect.0).abs() < 1e-12 && (q[idx.1] - expect.1).abs() < 1e-12);
        }
        let leak = (-1.0f64 / (2.0 * 0.01)).exp();
        for n in -2i64..=1 {
            for m in -2i64..=1 {
                let a = analytic_modes(n, &p, &g).unwrap();
                let b = analytic_modes(m, &p, &g).unwrap();
                let ip = inner_product(&a, &b).unwrap().norm();
                let want = if n == m { 1.0 } else { 0.0 };
                assert!((ip - want).abs() <= leak + 1e-10, "({n},{m}) {ip}");
            }
        }
    }

    #[test]
    fn principal_cosines_of_rotated_pair() {
        let e = |k: usize| {
            let mut v = vec![Complex64::new(0.0, 0.0); 4];
            v[k] = Complex64::new(1.0, 0.0);
            v
        };
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let mixed = vec![
            e(0).iter().zip(e(1)).map(|(a, b)| (a + b) * c).collect::<Vec<_>>(),
            e(0).iter().zip(e(1)).map(|(a, b)| (a - b) * c).collect(),
        ];
        let cos = principal_cosines(&[e(0), e(1)], &mixed, 1.0).unwrap();
        assert!(cos.iter().all(|x| (x - 1.0).abs() < 1e-12));
        let cos = principal_cosines(&[e(0), e(1)], &[e(1), e(2)], 1.0).unwrap();
        assert!((cos[0] - 1.0).abs() < 1e-12 && cos[1].abs() < 1e-12);
    }
}
