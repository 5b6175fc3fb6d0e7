use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use pairscatter::analysis::{
    density, fringe_period, to_momentum_space, to_position_space, total_momentum_stats, FringeAxis,
};
use pairscatter::dynamics::amplitude_at_time;
use pairscatter::model::{build_grid, fidelity, MomentumGrid};
use pairscatter::schmidt::{
    analytic_axis_modes, analytic_spectrum_converged, decompose, principal_cosines,
};
use pairscatter::steady::{
    dprime, steady_state_pairwise, steady_state_pairwise_with, truncation_order, PairwiseForm,
    SeriesTruncation,
};
use pairscatter::ModelParams;

fn params(sigma: f64, delta: f64) -> ModelParams {
    ModelParams {
        sigma,
        delta,
        ..ModelParams::default()
    }
}

/// Kahan-summed cosine series with a fixed 200 terms.
fn compensated_series(r: f64, p: &ModelParams) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for n in 0..200 {
        let odd = (2 * n + 1) as f64;
        let coeff = (-(p.sigma * p.sigma * PI * PI * odd * odd) / (8.0 * p.k_c * p.k_c)).exp();
        let term = coeff * (PI * odd * r / (2.0 * p.k_c)).cos() - carry;
        let next = sum + term;
        carry = (next - sum) - term;
        sum = next;
    }
    sum
}

fn oracle_dprime(qa: f64, qb: f64, p: &ModelParams) -> f64 {
    let (s, r) = (qa + qb, qa - qb);
    (-(s * s) / (2.0 * p.sigma * p.sigma)).exp()
        * (-(r.abs() * p.delta) / (SQRT_2 * p.k_c)).exp()
        * compensated_series(r, p)
}

#[test]
fn series_matches_compensated_sum() {
    for &(sigma, delta) in &[(0.2, 0.1), (0.5, 0.05), (1.0, 0.3)] {
        let p = params(sigma, delta);
        // (0.7, −0.2) sits near a node of the series, so truncate tightly
        let t = truncation_order(&p, 1e-16).unwrap();
        let origin = dprime(0.0, 0.0, &p, &t);
        let oracle_origin = oracle_dprime(0.0, 0.0, &p);
        for &(qa, qb) in &[(2.0, 0.0), (0.7, -0.2), (0.3, 0.9), (-1.4, 0.25)] {
            let ratio = dprime(qa, qb, &p, &t) / origin;
            let expected = oracle_dprime(qa, qb, &p) / oracle_origin;
            assert!(
                (ratio - expected).abs() <= 1e-10 * expected.abs(),
                "sigma={sigma} ({qa},{qb}): {ratio} vs {expected}"
            );
        }
        // at r = 2k_c every cosine is −1
        let closed = -(-2.0 / (sigma * sigma)).exp() * (-SQRT_2 * delta).exp();
        let ratio = dprime(2.0, 0.0, &p, &t) / origin;
        assert!((ratio - closed).abs() <= 1e-10 * closed.abs(), "{ratio} vs {closed}");
    }
}

#[test]
fn doubling_truncation_changes_little() {
    for sigma in [0.2, 0.5, 1.0] {
        let p = params(sigma, 0.1);
        let t = truncation_order(&p, 1e-12).unwrap();
        let doubled = SeriesTruncation {
            n_max: 2 * t.n_max + 1,
            tail_bound: 0.0,
        };
        for r in [0.0, 0.37, 1.5, -2.2, 5.0] {
            let a = dprime(r / 2.0, -r / 2.0, &p, &t);
            let b = dprime(r / 2.0, -r / 2.0, &p, &doubled);
            // every dropped term is bounded by its coefficient
            assert!((a - b).abs() <= 2.0 * t.tail_bound, "sigma={sigma} r={r}");
        }
    }
}

#[test]
fn order_resolved_form_is_the_long_time_limit() {
    // overlapping orders, envelope fully inside the grid
    let p = params(0.7, 0.3);
    let g = build_grid(&p, 512, 16.0).unwrap();
    assert!(!g.envelope_truncated());
    let late = amplitude_at_time(&p, &g, 1e7).unwrap();
    let resolved = steady_state_pairwise(&p, &g).unwrap();
    let smooth =
        steady_state_pairwise_with(&p, &g, PairwiseForm::smooth_envelope(&p).unwrap()).unwrap();
    let f_resolved = fidelity(&late, &resolved).unwrap();
    let f_smooth = fidelity(&late, &smooth).unwrap();
    eprintln!("fidelity to t→∞ dynamics: order-resolved {f_resolved}, smooth {f_smooth}");
    assert!(f_resolved > 0.999, "{f_resolved}");
    assert!(f_resolved > f_smooth);
}

#[test]
fn numeric_spectrum_matches_analytic() {
    let p = params(0.1, 0.1);
    let g = build_grid(&p, 2048, 24.0).unwrap();
    let state = steady_state_pairwise(&p, &g).unwrap();
    let (numeric, modes) = decompose(&state).unwrap();
    let analytic = analytic_spectrum_converged(0.1).unwrap().to_spectrum().unwrap();

    for idx in 0..12 {
        let (x, y) = (numeric.lambdas[idx], analytic.lambdas[idx]);
        assert!((x - y).abs() <= 0.02 * y, "lambda {idx}: {x} vs {y}");
    }
    // the leading pair is degenerate
    let gap = (numeric.lambdas[0] - numeric.lambdas[1]).abs() / numeric.lambdas[0];
    assert!(gap < 1e-3, "{gap}");

    // ranks 2k, 2k+1 span the analytic orders k and −k−1
    let h = g.spacing();
    for pair in 0..4i64 {
        let ranks = [2 * pair as usize, 2 * pair as usize + 1];
        let lift = |v: Vec<f64>| v.into_iter().map(|x| Complex64::new(x, 0.0)).collect::<Vec<_>>();
        let (a_pos, b_pos) = analytic_axis_modes(pair, &p, &g);
        let (a_neg, b_neg) = analytic_axis_modes(-pair - 1, &p, &g);
        let cos_a = principal_cosines(
            &ranks.map(|r| modes.mode_a(r)),
            &[lift(a_pos), lift(a_neg)],
            h,
        )
        .unwrap();
        let cos_b = principal_cosines(
            &ranks.map(|r| modes.mode_b(r)),
            &[lift(b_pos), lift(b_neg)],
            h,
        )
        .unwrap();
        for c in cos_a.iter().chain(&cos_b) {
            assert!(*c > 0.99, "pair {pair}: {cos_a:?} {cos_b:?}");
        }
    }
}

fn pairwise_default(kc: f64, n: usize, extent: f64) -> (ModelParams, MomentumGrid) {
    let p = ModelParams {
        k_c: kc,
        ..params(0.2, 0.1)
    };
    let g = build_grid(&p, n, extent).unwrap();
    (p, g)
}

#[test]
fn fringe_period_follows_recoil() {
    for &(kc, n, extent) in &[(1.0, 1024, 24.0), (2.0, 2048, 48.0)] {
        let (p, g) = pairwise_default(kc, n, extent);
        let state = steady_state_pairwise(&p, &g).unwrap();
        let x = to_position_space(&state).unwrap();
        let period = fringe_period(&density(&x, 1).unwrap(), FringeAxis::Relative).unwrap();
        let expected = 2.0 * PI / kc;
        assert!(
            (period - expected).abs() <= g.position_spacing(),
            "kc={kc}: {period} vs {expected}"
        );
    }
}

#[test]
fn total_momentum_moments() {
    let (p, g) = pairwise_default(1.0, 1024, 24.0);
    let state = steady_state_pairwise(&p, &g).unwrap();
    let (mean, var) = total_momentum_stats(&state).unwrap();
    assert!((mean + p.k_c).abs() <= 0.02 * p.k_c, "{mean}");
    let expected = p.sigma * p.sigma / 2.0;
    assert!((var - expected).abs() <= 0.05 * expected, "{var}");
}

#[test]
fn transforms_preserve_norm() {
    let (p, g) = pairwise_default(1.0, 1024, 24.0);
    let state = steady_state_pairwise(&p, &g).unwrap();
    let x = to_position_space(&state).unwrap();
    assert!((x.norm_sqr() - state.norm_sqr()).abs() < 1e-10);
    let back = to_momentum_space(&x).unwrap();
    let err: f64 = back
        .values()
        .iter()
        .zip(state.values())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        * state.norm_weight();
    assert!(err.sqrt() < 1e-10);
}
