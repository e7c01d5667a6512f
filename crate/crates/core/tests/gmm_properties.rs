mod common;

use mixsparse::gmm::{
    em_estimate, em_step, fit_single_gaussian, median_of_means, method_of_moments,
    mixture_log_likelihood, solve_moment_equations, EmOptions,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn exact_moments_return_the_means() {
    let grid: Vec<f64> = (-3..=3).map(f64::from).collect();
    for &mu1 in &grid {
        for &mu2 in &grid {
            for sigma in [0.5, 1.0, 2.0] {
                let (ex, var) = common::mixture_moments(mu1, mu2, sigma);
                let est = solve_moment_equations(ex, var, sigma);
                assert!(est.permutation_error(mu1, mu2) < 1e-9, "{mu1} {mu2} {sigma}: {est:?}");
            }
        }
    }
}

#[test]
fn clamped_discriminant_example() {
    let est = solve_moment_equations(5.0, 0.5, 1.0);
    assert_eq!(est.sorted(), (5.0, 5.0));
}

proptest! {
    #[test]
    fn perturbed_moments_stay_within_bound(
        mu1 in -10.0..10.0f64,
        mu2 in -10.0..10.0f64,
        sigma in 0.05..5.0f64,
        d1 in -1.0..1.0f64,
        d2 in -1.0..1.0f64,
        e1 in 0.0..2.0f64,
        e2 in 0.0..4.0f64,
    ) {
        let (ex, var) = common::mixture_moments(mu1, mu2, sigma);
        let est = solve_moment_equations(ex + d1 * e1, var + d2 * e2, sigma);
        let bound = 2.0 * e1 + 2.0 * e2.sqrt();
        prop_assert!(est.permutation_error(mu1, mu2) <= bound + 1e-9 * (1.0 + mu1.abs() + mu2.abs()));
    }

    #[test]
    fn em_never_decreases_likelihood(
        seed in 0u64..10_000,
        gap in 0.0..6.0f64,
        sigma in 0.2..2.0f64,
        init1 in -5.0..5.0f64,
        init2 in -5.0..5.0f64,
    ) {
        let ys = common::mixture_samples(0.0, gap, sigma, 200, seed);
        let (mut a, mut b) = (init1, init2);
        let mut ll = mixture_log_likelihood(&ys, sigma, a, b);
        for _ in 0..30 {
            (a, b) = em_step(&ys, sigma, a, b);
            let next = mixture_log_likelihood(&ys, sigma, a, b);
            prop_assert!(next >= ll - 1e-9 * ll.abs().max(1.0), "{ll} -> {next}");
            ll = next;
        }
    }

    #[test]
    fn negating_samples_negates_estimates(seed in 0u64..10_000, gap in 0.0..5.0f64, batches in 1usize..8) {
        let ys = common::mixture_samples(-1.0, gap, 1.0, 64, seed);
        let neg: Vec<f64> = ys.iter().map(|y| -y).collect();

        let mom = method_of_moments(&ys, 1.0, batches).unwrap();
        let mom_neg = method_of_moments(&neg, 1.0, batches).unwrap();
        prop_assert_eq!(mom.negated().sorted(), mom_neg.sorted());

        prop_assert_eq!(fit_single_gaussian(&neg).unwrap(), -fit_single_gaussian(&ys).unwrap());

        let opts = EmOptions { init: Some((-0.5, 1.5)), ..Default::default() };
        let mirrored = EmOptions { init: Some((0.5, -1.5)), ..Default::default() };
        let em = em_estimate(&ys, 1.0, &opts).unwrap().means;
        let em_neg = em_estimate(&neg, 1.0, &mirrored).unwrap().means;
        prop_assert!((em.first + em_neg.first).abs() < 1e-9);
        prop_assert!((em.second + em_neg.second).abs() < 1e-9);
    }
}

#[test]
fn equal_init_em_returns_the_sample_mean() {
    let ys = common::mixture_samples(0.0, 3.0, 1.0, 500, 5);
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let out = em_estimate(&ys, 1.0, &EmOptions { init: Some((0.7, 0.7)), ..Default::default() }).unwrap();
    assert!((out.means.first - mean).abs() < 1e-12);
    assert_eq!(out.means.first, out.means.second);
}

#[test]
fn symmetric_data_gives_symmetric_em() {
    let ys: Vec<f64> = (0..50).flat_map(|_| [-2.0, 2.0]).collect();
    let out = em_estimate(&ys, 1.0, &EmOptions { init: Some((-1.0, 1.0)), ..Default::default() }).unwrap();
    assert!(out.means.first <= 0.0);
    assert!((out.means.first + out.means.second).abs() < 1e-12);
}

#[test]
fn median_of_means_variance_concentrates() {
    // var X = 1 + (0 - 2)^2 / 4 = 2
    let (_, var) = common::mixture_moments(0.0, 2.0, 1.0);
    assert_eq!(var, 2.0);
    let hits = (0..100)
        .filter(|&t| {
            let ys = common::mixture_samples(0.0, 2.0, 1.0, 100_000, 100 + t);
            (median_of_means(&ys, 36).unwrap().m2_hat - var).abs() <= 0.1
        })
        .count();
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn moment_estimates_respect_realized_error_bound() {
    let (ex, var) = common::mixture_moments(0.0, 1.0, 1.0);
    for t in 0..20 {
        let ys = common::mixture_samples(0.0, 1.0, 1.0, 100_000, 300 + t);
        let m = median_of_means(&ys, 36).unwrap();
        let (e1, e2) = ((m.m1_hat - ex).abs(), (m.m2_hat - var).abs());
        let est = method_of_moments(&ys, 1.0, 36).unwrap();
        assert!(est.permutation_error(0.0, 1.0) <= 2.0 * e1 + 2.0 * e2.sqrt() + 1e-12);
    }
}

#[test]
fn em_recovers_well_separated_means() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let hits = (0..100)
        .filter(|&t| {
            let ys = common::mixture_samples(0.0, 8.0, 1.0, 10_000, 500 + t);
            let (lo, hi) = ys.iter().fold((f64::MAX, f64::MIN), |(l, h), &y| (l.min(y), h.max(y)));
            let init = (rng.random_range(lo..hi), rng.random_range(lo..hi));
            let out = em_estimate(&ys, 1.0, &EmOptions { init: Some(init), ..Default::default() }).unwrap();
            out.means.permutation_error(0.0, 8.0) <= 0.1
        })
        .count();
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn single_gaussian_fit_concentrates() {
    let hits = (0..100)
        .filter(|&t| {
            let ys = common::mixture_samples(3.0, 3.0, 1.0, 100_000, 700 + t);
            (fit_single_gaussian(&ys).unwrap() - 3.0).abs() <= 0.05
        })
        .count();
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn quartile_examples() {
    assert_eq!(fit_single_gaussian(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 2.5);
    let c = 7.25;
    assert_eq!(fit_single_gaussian(&[c - 1.0, c - 0.125, c + 0.125, c + 1.0]).unwrap(), c);
}
