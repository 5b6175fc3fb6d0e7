//! Figure-level post-processing: position-space transforms, densities,
//! total-momentum moments, fringe detection and Schmidt-number sweeps.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::fourier::{centered_transform, Kernel};
use crate::model::{BipartiteAmplitude, ModelParams, MomentumGrid, Representation};
use crate::schmidt::{self, analytic_k};
use crate::steady::steady_state_pairwise;

/// Spectral peaks weaker than this fraction of the zero-frequency bin are
/// not fringes.
const FRINGE_THRESHOLD: f64 = 1e-3;

/// Unitary transform to the position lattice, `ψ(x) ∝ ∫dq e^{−ix·q} D(q)`.
/// The grid norm is preserved.
pub fn to_position_space(a: &BipartiteAmplitude) -> Result<BipartiteAmplitude> {
    if a.representation() != Representation::Momentum {
        return Err(Error::WrongRepresentation {
            expected: "momentum",
        });
    }
    let values = centered_transform(a.values(), Kernel::ToPosition, a.grid().spacing());
    Ok(a.with_values(values, Representation::Position))
}

/// Inverse of [`to_position_space`].
pub fn to_momentum_space(a: &BipartiteAmplitude) -> Result<BipartiteAmplitude> {
    if a.representation() != Representation::Position {
        return Err(Error::WrongRepresentation {
            expected: "position",
        });
    }
    let values = centered_transform(a.values(), Kernel::ToMomentum, a.grid().position_spacing());
    Ok(a.with_values(values, Representation::Momentum))
}

/// Block-averaged probability density.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub values: Array2<f64>,
    /// Cell-centre coordinates along each axis.
    pub axis: Vec<f64>,
    /// Area of one (downsampled) cell.
    pub cell_weight: f64,
    pub representation: Representation,
}

impl DensityField {
    pub fn total(&self) -> f64 {
        self.values.sum() * self.cell_weight
    }

    pub fn cell_spacing(&self) -> f64 {
        self.cell_weight.sqrt()
    }
}

/// `|a|²` averaged over `downsample × downsample` blocks.
pub fn density(a: &BipartiteAmplitude, downsample: usize) -> Result<DensityField> {
    let n = a.grid().n_points();
    if downsample == 0 || n % downsample != 0 {
        return Err(Error::InvalidDownsample {
            factor: downsample,
            n_points: n,
        });
    }
    let m = n / downsample;
    let v = a.values();
    let inv = 1.0 / (downsample * downsample) as f64;
    let values = Array2::from_shape_fn((m, m), |(bi, bj)| {
        let mut acc = 0.0;
        for i in bi * downsample..(bi + 1) * downsample {
            for j in bj * downsample..(bj + 1) * downsample {
                acc += v[[i, j]].norm_sqr();
            }
        }
        acc * inv
    });
    let coords = a.grid().axis_points(a.representation());
    let axis = (0..m)
        .map(|b| {
            let block = &coords[b * downsample..(b + 1) * downsample];
            block.iter().sum::<f64>() / downsample as f64
        })
        .collect();
    let h = a.grid().axis_spacing(a.representation()) * downsample as f64;
    Ok(DensityField {
        values,
        axis,
        cell_weight: h * h,
        representation: a.representation(),
    })
}

/// Mean and variance of the total momentum `q_a + q_b` under `|D|²`.
pub fn total_momentum_stats(a: &BipartiteAmplitude) -> Result<(f64, f64)> {
    if a.representation() != Representation::Momentum {
        return Err(Error::WrongRepresentation {
            expected: "momentum",
        });
    }
    let q = a.grid().points();
    let mut mass = 0.0;
    let mut first = 0.0;
    let mut second = 0.0;
    for ((i, j), z) in a.values().indexed_iter() {
        let p = z.norm_sqr();
        let s = q[i] + q[j];
        mass += p;
        first += p * s;
        second += p * s * s;
    }
    if mass == 0.0 {
        return Err(Error::Degenerate("zero probability mass".into()));
    }
    let mean = first / mass;
    Ok((mean, second / mass - mean * mean))
}

/// Which diagonal family of the density a fringe is measured along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FringeAxis {
    /// `x_a − x_b`: density summed along lines of constant relative position.
    #[default]
    Relative,
    /// `x_a + x_b`.
    Total,
}

/// Period of the dominant fringe of a position density along `axis`.
///
/// The density is integrated along the diagonals of the chosen family, the
/// 1-D profile is Fourier transformed, and the strongest interior local
/// maximum of the magnitude (excluding the zero-frequency bin) is refined by
/// a parabola through its neighbours.
pub fn fringe_period(field: &DensityField, axis: FringeAxis) -> Result<f64> {
    if field.representation != Representation::Position {
        return Err(Error::WrongRepresentation {
            expected: "position",
        });
    }
    let n = field.values.nrows();
    let len = 2 * n - 1;
    let mut profile = vec![Complex64::new(0.0, 0.0); len];
    for ((i, j), &p) in field.values.indexed_iter() {
        let idx = match axis {
            FringeAxis::Relative => i + (n - 1) - j,
            FringeAxis::Total => i + j,
        };
        profile[idx].re += p;
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(len);
    fft.process(&mut profile);
    let mag: Vec<f64> = profile.iter().map(|z| z.norm()).collect();
    let floor = FRINGE_THRESHOLD * mag[0];

    let half = len / 2;
    let peak = (2..half)
        .filter(|&k| mag[k] > mag[k - 1] && mag[k] > mag[k + 1] && mag[k] > floor)
        .max_by(|&a, &b| mag[a].total_cmp(&mag[b]))
        .ok_or(Error::NoFringe)?;

    let (l, c, r) = (mag[peak - 1], mag[peak], mag[peak + 1]);
    let curvature = l - 2.0 * c + r;
    let offset = if curvature != 0.0 {
        0.5 * (l - r) / curvature
    } else {
        0.0
    };
    // profile samples are one cell apart along either diagonal family
    let step = field.cell_spacing();
    Ok(len as f64 * step / (peak as f64 + offset))
}

/// One `(σ, δ)` point of a Schmidt-number sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub sigma: f64,
    pub delta: f64,
    pub k_numeric: f64,
    pub k_exact: f64,
    pub k_approx: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub n_points: usize,
    pub extent: f64,
}

/// Numeric and analytic Schmidt numbers of the pairwise steady state over a
/// `σ × δ` grid of parameters. Rows are ordered σ-major.
pub fn sweep_k_vs_delta(
    base: &ModelParams,
    deltas: &[f64],
    sigmas: &[f64],
    grid: &MomentumGrid,
) -> Result<SweepTable> {
    if deltas.is_empty() || sigmas.is_empty() {
        return Err(Error::param("sweep", "need at least one sigma and one delta"));
    }
    if deltas.iter().any(|&d| d.is_nan() || d <= 0.0) {
        return Err(Error::param("deltas", "all deltas must be positive"));
    }
    let jobs: Vec<(f64, f64)> = sigmas
        .iter()
        .flat_map(|&s| deltas.iter().map(move |&d| (s, d)))
        .collect();
    let results: Vec<Result<SweepRow>> = jobs
        .par_iter()
        .map(|&(sigma, delta)| {
            let params = ModelParams {
                sigma,
                delta,
                ..*base
            };
            // same lattice, rechecked against this row's σ
            let row_grid = crate::model::build_grid(&params, grid.n_points(), grid.extent())?;
            let state = steady_state_pairwise(&params, &row_grid)?;
            let k_numeric = schmidt::spectrum(&state)?.k_number;
            let analytic = analytic_k(delta)?;
            Ok(SweepRow {
                sigma,
                delta,
                k_numeric,
                k_exact: analytic.exact,
                k_approx: analytic.approx,
            })
        })
        .collect();
    let mut rows = Vec::with_capacity(jobs.len());
    for (&(sigma, delta), res) in jobs.iter().zip(results) {
        rows.push(res.map_err(|e| Error::SweepRow {
            sigma,
            delta,
            source: Box::new(e),
        })?);
    }
    Ok(SweepTable {
        rows,
        n_points: grid.n_points(),
        extent: grid.extent(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_grid, gaussian_initial, normalize};

    fn small() -> (ModelParams, MomentumGrid) {
        let p = ModelParams {
            sigma: 0.5,
            ..ModelParams::default()
        };
        let g = build_grid(&p, 128, 8.0).unwrap();
        (p, g)
    }

    #[test]
    fn density_sums_to_one() {
        let (p, g) = small();
        let a = normalize(gaussian_initial(&p, &g).unwrap()).unwrap();
        for d in [1, 2, 4, 8] {
            let f = density(&a, d).unwrap();
            assert!((f.total() - 1.0).abs() < 1e-9);
            assert!(f.values.iter().all(|&x| x >= 0.0));
        }
        assert!(density(&a, 3).is_err());
        assert!(density(&a, 0).is_err());
    }

    #[test]
    fn representation_checks() {
        let (p, g) = small();
        let a = normalize(gaussian_initial(&p, &g).unwrap()).unwrap();
        let x = to_position_space(&a).unwrap();
        assert!(to_position_space(&x).is_err());
        assert!(to_momentum_space(&a).is_err());
        assert!(total_momentum_stats(&x).is_err());
        let f = density(&a, 1).unwrap();
        assert!(matches!(
            fringe_period(&f, FringeAxis::Relative),
            Err(Error::WrongRepresentation { .. })
        ));
    }

    #[test]
    fn gaussian_has_no_fringe() {
        let (p, g) = small();
        let a = normalize(gaussian_initial(&p, &g).unwrap()).unwrap();
        let f = density(&to_position_space(&a).unwrap(), 1).unwrap();
        assert!(matches!(fringe_period(&f, FringeAxis::Relative), Err(Error::NoFringe)));
    }

    #[test]
    fn gaussian_moments() {
        let (p, g) = small();
        let a = normalize(gaussian_initial(&p, &g).unwrap()).unwrap();
        let (mean, var) = total_momentum_stats(&a).unwrap();
        assert!(mean.abs() < 1e-12);
        // |G|² has variance σ²/4 per axis
        assert!((var - 0.5 * p.sigma * p.sigma).abs() < 1e-9);
    }

    #[test]
    fn sweep_reports_failing_row() {
        let (p, g) = small();
        // σ = 0.1 cannot be resolved on this lattice
        let err = sweep_k_vs_delta(&p, &[0.2], &[0.5, 0.1], &g).unwrap_err();
        match err {
            Error::SweepRow { sigma, .. } => assert_eq!(sigma, 0.1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(sweep_k_vs_delta(&p, &[0.0], &[0.5], &g).is_err());
    }
}
