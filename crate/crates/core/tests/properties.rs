use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pairscatter::model::{inner_product, normalize};
use pairscatter::schmidt::{analytic_k, analytic_spectrum, decompose, purity_oracle, spectrum};
use pairscatter::steady::{cosine_series, dprime, dprime_order_resolved, truncation_order};
use pairscatter::{BipartiteAmplitude, ModelParams, MomentumGrid, Representation};

const N: usize = 16;

fn small_grid() -> MomentumGrid {
    MomentumGrid::from_raw(N, 2.0).unwrap()
}

fn amplitude_from(values: Vec<(f64, f64)>) -> BipartiteAmplitude {
    let arr = Array2::from_shape_vec((N, N), values.into_iter().map(|(r, i)| Complex64::new(r, i)).collect())
        .unwrap();
    BipartiteAmplitude::new(arr, small_grid(), Representation::Momentum).unwrap()
}

fn entries() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), N * N)
}

fn params(sigma: f64, delta: f64) -> ModelParams {
    ModelParams {
        sigma,
        delta,
        ..ModelParams::default()
    }
}

/// Random matrix of the given rank from a seeded generator.
fn seeded_state(seed: u64, n: usize, rank: usize) -> BipartiteAmplitude {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = |count: usize| -> Vec<Vec<Complex64>> {
        (0..count)
            .map(|_| {
                (0..n)
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect()
            })
            .collect()
    };
    let u = cols(rank);
    let v = cols(rank);
    let values = Array2::from_shape_fn((n, n), |(i, j)| {
        (0..rank).map(|k| u[k][i] * v[k][j]).sum::<Complex64>()
    });
    let grid = MomentumGrid::from_raw(n, 3.0).unwrap();
    normalize(BipartiteAmplitude::new(values, grid, Representation::Momentum).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn inner_product_is_sesquilinear(x in entries(), y in entries(), z in entries(),
                                     cr in -2.0f64..2.0, ci in -2.0f64..2.0) {
        let c = Complex64::new(cr, ci);
        let (a, b, d) = (amplitude_from(x.clone()), amplitude_from(y.clone()), amplitude_from(z));
        let combo: Vec<(f64, f64)> = x.iter().zip(&y).map(|(p, q)| {
            let v = Complex64::new(p.0, p.1) * c + Complex64::new(q.0, q.1);
            (v.re, v.im)
        }).collect();
        let ab = amplitude_from(combo);
        // linear in the second slot, antilinear in the first
        let lhs = inner_product(&d, &ab).unwrap();
        let rhs = c * inner_product(&d, &a).unwrap() + inner_product(&d, &b).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
        let lhs = inner_product(&ab, &d).unwrap();
        let rhs = c.conj() * inner_product(&a, &d).unwrap() + inner_product(&b, &d).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
        let ab = inner_product(&a, &b).unwrap();
        let ba = inner_product(&b, &a).unwrap();
        prop_assert!((ab - ba.conj()).norm() < 1e-12 * (1.0 + ab.norm()));
        prop_assert!(inner_product(&a, &a).unwrap().im.abs() < 1e-12);
    }

    #[test]
    fn normalize_is_idempotent(x in entries()) {
        let once = normalize(amplitude_from(x)).unwrap();
        prop_assert!((once.norm_sqr() - 1.0).abs() < 1e-12);
        let twice = normalize(once.clone()).unwrap();
        for (p, q) in once.values().iter().zip(twice.values()) {
            prop_assert!((p - q).norm() < 1e-14);
        }
    }

    #[test]
    fn dprime_is_exchange_symmetric(qa in -6.0f64..6.0, qb in -6.0f64..6.0,
                                    sigma in 0.1f64..1.5, delta in 0.01f64..0.8) {
        let p = params(sigma, delta);
        let t = truncation_order(&p, 1e-14).unwrap();
        prop_assert_eq!(dprime(qa, qb, &p, &t), dprime(qb, qa, &p, &t));
        let x = dprime_order_resolved(qa, qb, &p);
        let y = dprime_order_resolved(qb, qa, &p);
        prop_assert!((x - y).abs() <= 1e-14 * (1.0 + x.abs()));
    }

    #[test]
    fn dprime_factorizes_in_rotated_coordinates(s1 in -3.0f64..3.0, r1 in -6.0f64..6.0,
                                                s2 in -3.0f64..3.0, r2 in -6.0f64..6.0,
                                                sigma in 0.15f64..1.2, delta in 0.02f64..0.5) {
        // D′ = f(s)·h(r), so swapping the r arguments between two points
        // leaves the product unchanged
        let p = params(sigma, delta);
        let t = truncation_order(&p, 1e-14).unwrap();
        let at = |s: f64, r: f64| ((s + r) / 2.0, (s - r) / 2.0);
        let smooth = |a: f64, b: f64| dprime(a, b, &p, &t);
        let resolved = |a: f64, b: f64| dprime_order_resolved(a, b, &p);
        let forms: [&dyn Fn(f64, f64) -> f64; 2] = [&smooth, &resolved];
        for f in forms {
            let (a1, b1) = at(s1, r1);
            let (a2, b2) = at(s2, r2);
            let (a3, b3) = at(s1, r2);
            let (a4, b4) = at(s2, r1);
            let lhs = f(a1, b1) * f(a2, b2);
            let rhs = f(a3, b3) * f(a4, b4);
            // h(r) has nodes, so compare against the r = 0 magnitude
            let (c1, d1) = at(s1, 0.0);
            let (c2, d2) = at(s2, 0.0);
            let scale = (f(c1, d1) * f(c2, d2)).abs();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale + 1e-300);
        }
    }

    #[test]
    fn cosine_series_is_antiperiodic(r in -10.0f64..10.0, sigma in 0.1f64..1.5, kc in 0.5f64..2.0) {
        let p = ModelParams { k_c: kc, ..params(sigma, 0.1) };
        let t = truncation_order(&p, 1e-15).unwrap();
        let base = cosine_series(r, &p, &t);
        let half = cosine_series(r + 2.0 * kc, &p, &t);
        let full = cosine_series(r + 4.0 * kc, &p, &t);
        let scale = 1.0 + base.abs();
        prop_assert!((half + base).abs() < 1e-12 * scale);
        prop_assert!((full - base).abs() < 1e-12 * scale);
    }

    #[test]
    fn analytic_k_decreases_with_delta(d1 in 0.005f64..1.0, d2 in 0.005f64..1.0) {
        prop_assume!((d1 - d2).abs() > 1e-9);
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        let (k_lo, k_hi) = (analytic_k(lo).unwrap(), analytic_k(hi).unwrap());
        prop_assert!(k_lo.exact > k_hi.exact);
        prop_assert!(k_hi.exact >= 2.0);
        prop_assert!(k_hi.exact > k_hi.approx);
    }

    #[test]
    fn analytic_spectrum_pairs_are_degenerate(delta in 0.01f64..1.0, n_max in 1usize..60) {
        let s = analytic_spectrum(delta, n_max).unwrap();
        let total: f64 = s.lambdas.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for n in 0..=n_max as i64 {
            prop_assert_eq!(s.lambda(n), s.lambda(-n - 1));
        }
    }

    #[test]
    fn decomposition_and_purity_agree(seed in any::<u64>(), rank in 1usize..12) {
        let a = seeded_state(seed, 24, rank);
        let (spec, modes) = decompose(&a).unwrap();
        let purity_k = purity_oracle(&a).unwrap();
        prop_assert!((spec.k_number - purity_k).abs() <= 1e-8 * purity_k);
        prop_assert!(spec.rank() <= rank);
        prop_assert!(spec.k_number >= 1.0 - 1e-12 && spec.k_number <= rank as f64 + 1e-9);
        prop_assert!((spec.lambdas.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let only = spectrum(&a).unwrap();
        prop_assert!((only.k_number - spec.k_number).abs() <= 1e-10 * spec.k_number);
        let rebuilt = modes.reconstruct(&spec);
        let err: f64 = rebuilt.iter().zip(a.values()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>()
            * a.norm_weight();
        prop_assert!(err.sqrt() < 1e-6);
    }
}
