//! Physical parameters, sampling lattices and the bipartite amplitude type.
//!
//! Units are natural: `ħ = 1`, momenta are measured as wavenumbers and
//! times in units of `1/Γ` when `gamma_rate = 1`. The recoil is
//! one-dimensional, so a two-atom state is a complex function of
//! `(q_a, q_b)` sampled on an `N × N` lattice.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Samples per axis used when nothing else is configured.
pub const DEFAULT_GRID_POINTS: usize = 1024;
/// Default grid half-width, in units of `k_c`.
pub const DEFAULT_GRID_EXTENT: f64 = 24.0;

/// Tolerance used to decide whether an amplitude counts as normalized.
pub(crate) const NORM_TOLERANCE: f64 = 1e-8;

/// Physical controls of the two-atom scattering model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Recoil wavenumber of the scattered photon.
    pub k_c: f64,
    /// Momentum width of the initial product Gaussian.
    pub sigma: f64,
    /// Dipole parallelity, `cos φ = 1 − δ²`.
    pub delta: f64,
    /// Scattering rate Γ.
    pub gamma_rate: f64,
    /// Kinetic energy mismatch `E_m/ħ` of one re-scattering cycle.
    pub em_over_hbar: f64,
    /// Detection-mode detuning `ω_c − c|k|` at the detected wavenumber.
    pub detuning: f64,
    /// Elapsed coupling time.
    pub t: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            k_c: 1.0,
            sigma: 0.2,
            delta: 0.1,
            gamma_rate: 1.0,
            em_over_hbar: 0.0,
            detuning: 0.0,
            t: 0.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("k_c", self.k_c),
            ("sigma", self.sigma),
            ("delta", self.delta),
            ("gamma_rate", self.gamma_rate),
            ("em_over_hbar", self.em_over_hbar),
            ("detuning", self.detuning),
            ("t", self.t),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::param(name, format!("{value} is not finite")));
            }
        }
        if self.k_c <= 0.0 {
            return Err(Error::param("k_c", "must be positive"));
        }
        if self.sigma <= 0.0 {
            return Err(Error::param("sigma", "must be positive"));
        }
        if self.gamma_rate <= 0.0 {
            return Err(Error::param("gamma_rate", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::param("delta", "must lie in [0, 1]"));
        }
        if self.em_over_hbar < 0.0 {
            return Err(Error::param("em_over_hbar", "must be non-negative"));
        }
        if self.t < 0.0 {
            return Err(Error::param("t", "must be non-negative"));
        }
        Ok(())
    }

    /// `cos φ` of the two atomic dipoles.
    pub fn cos_phi(&self) -> f64 {
        1.0 - self.delta * self.delta
    }

    /// Grid half-width below which the `e^{−|q_a−q_b|δ/(√2 k_c)}` envelope is
    /// visibly truncated. Infinite for `δ = 0`.
    pub fn envelope_extent(&self) -> f64 {
        if self.delta == 0.0 {
            f64::INFINITY
        } else {
            3.0 * std::f64::consts::SQRT_2 * self.k_c / self.delta
        }
    }
}

/// Whether an amplitude is sampled in momentum or on the conjugate position lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Representation {
    Momentum,
    Position,
}

impl Representation {
    pub fn as_str(self) -> &'static str {
        match self {
            Representation::Momentum => "momentum",
            Representation::Position => "position",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "momentum" => Some(Representation::Momentum),
            "position" => Some(Representation::Position),
            _ => None,
        }
    }
}

/// Uniform symmetric lattice `q_i = −Q + i·(2Q/N)` used for both particles.
///
/// The conjugate position lattice has spacing `π/Q` and the same number of
/// points, so the two are related by an `N`-point DFT.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    extent: f64,
    n_points: usize,
    spacing: f64,
    envelope_truncated: bool,
}

impl MomentumGrid {
    /// Builds a lattice without any resolution checks. Used when re-reading
    /// state files, whose grids were validated when they were written.
    pub fn from_raw(n_points: usize, extent: f64) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::param("n_points", "need at least two points"));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::param("extent", "must be positive and finite"));
        }
        Ok(MomentumGrid {
            extent,
            n_points,
            spacing: 2.0 * extent / n_points as f64,
            envelope_truncated: false,
        })
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Set when the extent is smaller than the analytic δ-envelope needs.
    pub fn envelope_truncated(&self) -> bool {
        self.envelope_truncated
    }

    pub fn point(&self, i: usize) -> f64 {
        -self.extent + i as f64 * self.spacing
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }

    pub fn position_spacing(&self) -> f64 {
        PI / self.extent
    }

    pub fn position_point(&self, j: usize) -> f64 {
        let dx = self.position_spacing();
        -0.5 * self.n_points as f64 * dx + j as f64 * dx
    }

    pub fn position_points(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.position_point(j)).collect()
    }

    /// Axis spacing for the given representation.
    pub fn axis_spacing(&self, repr: Representation) -> f64 {
        match repr {
            Representation::Momentum => self.spacing,
            Representation::Position => self.position_spacing(),
        }
    }

    pub fn axis_points(&self, repr: Representation) -> Vec<f64> {
        match repr {
            Representation::Momentum => self.points(),
            Representation::Position => self.position_points(),
        }
    }

    /// Same lattice (point count and extent), ignoring the warning flag.
    pub fn same_lattice(&self, other: &MomentumGrid) -> bool {
        self.n_points == other.n_points && self.extent == other.extent
    }
}

/// Builds the lattice and rejects grids that cannot resolve the wavepackets.
pub fn build_grid(params: &ModelParams, n_points: usize, extent: f64) -> Result<MomentumGrid> {
    build_grid_with(params, n_points, extent, false)
}

/// Like [`build_grid`]; `allow_under_resolved` turns the resolution and
/// minimum-extent errors off.
pub fn build_grid_with(
    params: &ModelParams,
    n_points: usize,
    extent: f64,
    allow_under_resolved: bool,
) -> Result<MomentumGrid> {
    params.validate()?;
    if n_points < 16 {
        return Err(Error::param("n_points", "need at least 16 points per axis"));
    }
    let mut grid = MomentumGrid::from_raw(n_points, extent)?;
    if !allow_under_resolved {
        let limit = params.sigma / 4.0;
        if grid.spacing > limit {
            return Err(Error::UnderResolved {
                spacing: grid.spacing,
                limit,
            });
        }
        let minimum = 5.0 * params.sigma + params.k_c;
        if extent < minimum {
            return Err(Error::ExtentTooSmall { extent, minimum });
        }
    }
    grid.envelope_truncated = extent < params.envelope_extent();
    Ok(grid)
}

/// Complex two-particle amplitude on a lattice. Row index is particle a,
/// column index is particle b.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteAmplitude {
    values: Array2<Complex64>,
    grid: MomentumGrid,
    representation: Representation,
}

impl BipartiteAmplitude {
    pub fn new(
        values: Array2<Complex64>,
        grid: MomentumGrid,
        representation: Representation,
    ) -> Result<Self> {
        let n = grid.n_points();
        if values.dim() != (n, n) {
            return Err(Error::GridMismatch);
        }
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite);
        }
        Ok(BipartiteAmplitude {
            values,
            grid,
            representation,
        })
    }

    /// Samples `f(coord_a, coord_b)` on the lattice of the given representation.
    pub fn from_fn<F>(grid: &MomentumGrid, representation: Representation, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Complex64,
    {
        let axis = grid.axis_points(representation);
        let n = axis.len();
        let values = Array2::from_shape_fn((n, n), |(i, j)| f(axis[i], axis[j]));
        Self::new(values, grid.clone(), representation)
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<Complex64> {
        self.values
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    /// Riemann quadrature weight of one lattice cell.
    pub fn norm_weight(&self) -> f64 {
        let h = self.grid.axis_spacing(self.representation);
        h * h
    }

    /// `Σ |values|² · weight`.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.norm_weight()
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|z| z.im == 0.0)
    }

    /// `max |D_ij − D_ji|`; zero for exchange-symmetric states.
    pub fn exchange_asymmetry(&self) -> f64 {
        let n = self.grid.n_points();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.values[[i, j]] - self.values[[j, i]]).norm());
            }
        }
        worst
    }

    pub(crate) fn with_values(&self, values: Array2<Complex64>, repr: Representation) -> Self {
        BipartiteAmplitude {
            values,
            grid: self.grid.clone(),
            representation: repr,
        }
    }

    pub(crate) fn require_normalized(&self) -> Result<()> {
        let norm = self.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm });
        }
        Ok(())
    }

    pub fn normalized(self) -> Result<Self> {
        normalize(self)
    }
}

/// Unit-norm 1-D Gaussian `(2/(πσ²))^{1/4} e^{−q²/σ²}`.
pub fn gaussian_1d(q: f64, sigma: f64) -> f64 {
    (2.0 / (PI * sigma * sigma)).powf(0.25) * (-(q * q) / (sigma * sigma)).exp()
}

/// `G(q_a, q_b) = √2 e^{−(q_a²+q_b²)/σ²} / (√π σ)`.
pub fn gaussian_value(q_a: f64, q_b: f64, sigma: f64) -> f64 {
    std::f64::consts::SQRT_2 / (PI.sqrt() * sigma) * (-(q_a * q_a + q_b * q_b) / (sigma * sigma)).exp()
}

/// The unentangled initial state, sampled from its closed form.
pub fn gaussian_initial(params: &ModelParams, grid: &MomentumGrid) -> Result<BipartiteAmplitude> {
    params.validate()?;
    let axis: Vec<f64> = grid.points().iter().map(|&q| gaussian_1d(q, params.sigma)).collect();
    outer_product(grid, &axis, &axis)
}

pub(crate) fn outer_product(
    grid: &MomentumGrid,
    a: &[f64],
    b: &[f64],
) -> Result<BipartiteAmplitude> {
    let n = grid.n_points();
    let values = Array2::from_shape_fn((n, n), |(i, j)| Complex64::new(a[i] * b[j], 0.0));
    BipartiteAmplitude::new(values, grid.clone(), Representation::Momentum)
}

/// Rescales to unit grid norm.
pub fn normalize(a: BipartiteAmplitude) -> Result<BipartiteAmplitude> {
    let norm = a.norm_sqr();
    if !norm.is_finite() {
        return Err(Error::NonFinite);
    }
    if norm == 0.0 {
        return Err(Error::Degenerate("all-zero amplitude cannot be normalized".into()));
    }
    let scale = 1.0 / norm.sqrt();
    let BipartiteAmplitude {
        mut values,
        grid,
        representation,
    } = a;
    values.mapv_inplace(|z| z * scale);
    Ok(BipartiteAmplitude {
        values,
        grid,
        representation,
    })
}

/// `Σ conj(a)·b·weight`.
pub fn inner_product(a: &BipartiteAmplitude, b: &BipartiteAmplitude) -> Result<Complex64> {
    if !a.grid.same_lattice(&b.grid) || a.representation != b.representation {
        return Err(Error::GridMismatch);
    }
    let sum: Complex64 = a
        .values
        .iter()
        .zip(b.values.iter())
        .map(|(x, y)| x.conj() * y)
        .sum();
    Ok(sum * a.norm_weight())
}

/// `|⟨a, b⟩|`.
pub fn fidelity(a: &BipartiteAmplitude, b: &BipartiteAmplitude) -> Result<f64> {
    inner_product(a, b).map(|z| z.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(sigma: f64) -> ModelParams {
        ModelParams {
            sigma,
            ..ModelParams::default()
        }
    }

    #[test]
    fn grid_spacing_examples() {
        let g = build_grid(&params(0.2), 1024, 24.0).unwrap();
        assert_eq!(g.spacing(), 0.046875);
        assert_eq!(g.point(0), -24.0);
        assert!(g.envelope_truncated());

        match build_grid(&params(0.2), 64, 24.0) {
            Err(Error::UnderResolved { spacing, limit }) => {
                assert_eq!(spacing, 0.75);
                assert!((limit - 0.05).abs() < 1e-15);
            }
            other => panic!("expected under-resolution, got {other:?}"),
        }
        assert!(build_grid_with(&params(0.2), 64, 24.0, true).is_ok());

        let g = build_grid(&params(1.0), 256, 8.0).unwrap();
        assert_eq!(g.spacing(), 0.0625);
    }

    #[test]
    fn grid_rejects_small_inputs() {
        assert!(build_grid(&params(0.2), 8, 24.0).is_err());
        assert!(build_grid(&params(0.2), 1024, 0.0).is_err());
        assert!(matches!(
            build_grid(&params(0.2), 1024, 1.5),
            Err(Error::ExtentTooSmall { .. })
        ));
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::default().validate().is_ok());
        let bad = [
            ModelParams { k_c: 0.0, ..Default::default() },
            ModelParams { sigma: -1.0, ..Default::default() },
            ModelParams { delta: 1.5, ..Default::default() },
            ModelParams { gamma_rate: 0.0, ..Default::default() },
            ModelParams { em_over_hbar: -1e-3, ..Default::default() },
            ModelParams { t: f64::NAN, ..Default::default() },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }

    #[test]
    fn gaussian_peak_and_norm() {
        let p = params(0.2);
        let peak = gaussian_value(0.0, 0.0, 0.2);
        assert!((peak - 3.989422804014327).abs() < 1e-12);
        let g = build_grid(&p, 1024, 24.0).unwrap();
        let a = gaussian_initial(&p, &g).unwrap();
        // the grid contains q = 0 exactly
        assert!((a.values()[[512, 512]].re - peak).abs() < 1e-12);
        assert!((a.norm_sqr() - 1.0).abs() < 1e-10);
        assert_eq!(a.exchange_asymmetry(), 0.0);
    }

    #[test]
    fn gaussian_norm_on_coarse_grids() {
        for sigma in [0.2, 0.5, 1.0] {
            let p = params(sigma);
            let extent = 5.0 * sigma + p.k_c;
            let n = ((2.0 * extent) / (sigma / 4.0)).ceil() as usize;
            let g = build_grid(&p, n.max(16), extent).unwrap();
            let a = gaussian_initial(&p, &g).unwrap();
            assert!((a.norm_sqr() - 1.0).abs() < 1e-10, "sigma {sigma}");
        }
    }

    #[test]
    fn normalize_cases() {
        let p = params(0.5);
        let g = build_grid(&p, 64, 4.0).unwrap();
        let a = gaussian_initial(&p, &g).unwrap().normalized().unwrap();
        let doubled = a.with_values(a.values().mapv(|z| z * 2.0), Representation::Momentum);
        let back = normalize(doubled).unwrap();
        for (x, y) in back.values().iter().zip(a.values().iter()) {
            assert!((x - y).norm() < 1e-15);
        }
        let zeros = a.with_values(Array2::zeros((64, 64)), Representation::Momentum);
        assert!(matches!(normalize(zeros), Err(Error::Degenerate(_))));

        let raw = gaussian_initial(&p, &g).unwrap();
        let renorm = normalize(raw.clone()).unwrap();
        for (x, y) in raw.values().iter().zip(renorm.values().iter()) {
            assert!((x - y).norm() < 1e-10);
        }
        let twice = normalize(renorm.clone()).unwrap();
        for (x, y) in twice.values().iter().zip(renorm.values().iter()) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn inner_product_examples() {
        let p = params(0.2);
        let g = build_grid(&p, 1024, 24.0).unwrap();
        let a = gaussian_initial(&p, &g).unwrap().normalized().unwrap();
        let one = inner_product(&a, &a).unwrap();
        assert!((one.re - 1.0).abs() < 1e-12 && one.im.abs() < 1e-15);
        let neg = a.with_values(a.values().mapv(|z| -z), Representation::Momentum);
        assert!((inner_product(&a, &neg).unwrap().re + 1.0).abs() < 1e-12);

        let shifted = BipartiteAmplitude::from_fn(&g, Representation::Momentum, |qa, qb| {
            Complex64::new(gaussian_value(qa + 1.0, qb, 0.2), 0.0)
        })
        .unwrap();
        let overlap = inner_product(&shifted, &a).unwrap().re;
        let expected = (-1.0f64 / (2.0 * 0.04)).exp();
        assert!((overlap - expected).abs() / expected < 1e-6, "{overlap} vs {expected}");
    }

    #[test]
    fn inner_product_rejects_mismatch() {
        let p = params(0.5);
        let g1 = build_grid(&p, 64, 4.0).unwrap();
        let g2 = build_grid(&p, 128, 4.0).unwrap();
        let a = gaussian_initial(&p, &g1).unwrap();
        let b = gaussian_initial(&p, &g2).unwrap();
        assert!(matches!(inner_product(&a, &b), Err(Error::GridMismatch)));
        let pos = a.with_values(a.values().clone(), Representation::Position);
        assert!(matches!(inner_product(&a, &pos), Err(Error::GridMismatch)));
    }

    #[test]
    fn rejects_non_finite() {
        let g = MomentumGrid::from_raw(4, 1.0).unwrap();
        let mut v = Array2::zeros((4, 4));
        v[[1, 2]] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(
            BipartiteAmplitude::new(v, g, Representation::Momentum),
            Err(Error::NonFinite)
        ));
    }
}
