mod common;

use fracdiff::kernels::{KernelPairHandle, TimeGrid};
use fracdiff::volterra::{
    check_k1, check_k2, k1_holds, l1_distance, mittag_leffler, solve_s_lambda, time_regularize, time_regularize_field,
    volterra_residual, yosida_cross_check,
};
use proptest::prelude::*;

#[test]
fn erfcx_oracle_agrees_with_series() {
    for &z in &[0.0, 0.1, 0.5, 1.0, 1.9, 2.1, 3.0] {
        let a = common::ml_half(z);
        let b = common::ml_series(0.5, -z);
        assert!((a - b).abs() < 1e-10, "z={z}: {a} vs {b}");
    }
}

#[test]
fn mittag_leffler_matches_oracles() {
    for &z in &[0.0, 0.3, 0.99, 1.01, 4.0, 37.0, 999.0, 1001.0, 1e5] {
        let got = mittag_leffler(0.5, -z).unwrap();
        let want = common::ml_half(z);
        assert!((got - want).abs() <= 1e-12 * want.max(1e-3), "z={z}: {got} vs {want}");
    }
    // the series cancels badly once |z|^{1/α} is large, so α = 0.3 stays near the origin
    for &(alpha, zs) in &[(0.3, [0.2, 0.8, 1.5]), (0.7, [0.2, 1.5, 4.0]), (0.9, [0.2, 1.5, 4.0])] {
        for &z in &zs {
            let got = mittag_leffler(alpha, -z).unwrap();
            let want = common::ml_series(alpha, -z);
            assert!((got - want).abs() < 1e-9, "alpha={alpha} z={z}: {got} vs {want}");
        }
    }
    assert!((mittag_leffler(1.0, -2.0).unwrap() - (-2f64).exp()).abs() < 1e-15);
    assert!(mittag_leffler(0.5, 1.0).is_err());
    assert!(mittag_leffler(1.5, -1.0).is_err());
}

#[test]
fn s_lambda_tracks_mittag_leffler_for_several_alphas() {
    for &alpha in &[0.3, 0.7] {
        let pair = KernelPairHandle::riemann_liouville(alpha).unwrap();
        let grid = TimeGrid::new(1.0, 256).unwrap();
        for &lambda in &[0.05, 1.0] {
            let fam = solve_s_lambda(&pair, lambda, grid).unwrap();
            let err = grid
                .nodes()
                .iter()
                .zip(&fam.s_values)
                .map(|(&t, &s)| (s - mittag_leffler(alpha, -t.powf(alpha) / lambda).unwrap()).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-4, "alpha={alpha} lambda={lambda}: {err}");
            assert!(volterra_residual(&fam, &pair) < 1e-8);
        }
    }
}

#[test]
fn s_lambda_is_completely_monotone_on_grid() {
    let pair = KernelPairHandle::exp_weighted(0.5, 2.0).unwrap();
    let fam = solve_s_lambda(&pair, 0.1, TimeGrid::new(1.0, 128).unwrap()).unwrap();
    assert_eq!(fam.s_values[0], 1.0);
    assert!(fam.s_values.windows(2).all(|w| w[1] <= w[0] && w[1] > 0.0));
    assert!(fam.r_increments.iter().all(|&r| r >= 0.0));
}

#[test]
fn yosida_kernels_approach_exp_weighted_kernel() {
    let pair = KernelPairHandle::exp_weighted(0.5, 1.0).unwrap();
    let grid = TimeGrid::new(1.0, 512).unwrap();
    let mut last = f64::INFINITY;
    for &lambda in &[1.0, 0.1, 0.01] {
        let fam = solve_s_lambda(&pair, lambda, grid).unwrap();
        let d = l1_distance(&fam, &pair.k);
        assert!(d < last, "lambda={lambda}: {d} >= {last}");
        last = d;
        assert!(yosida_cross_check(&fam, &pair.k) < 1e-2);
        let fit = check_k1(&fam, &pair.k);
        assert!(!fit.violation);
        assert!(k1_holds(&fam, &pair.k, fit.c1, fit.c2));
    }
}

#[test]
fn k2_fit_reports_non_negative_derivative_bound() {
    let pair = KernelPairHandle::riemann_liouville(0.5).unwrap();
    let fam = solve_s_lambda(&pair, 0.1, TimeGrid::new(1.0, 256).unwrap()).unwrap();
    let report = check_k2(&fam, &pair.k);
    assert!(!report.fit.violation);
    assert!(report.fit.min_value >= 0.0);
}

#[test]
fn solve_rejects_bad_lambda() {
    let pair = KernelPairHandle::riemann_liouville(0.5).unwrap();
    let grid = TimeGrid::new(1.0, 8).unwrap();
    assert!(solve_s_lambda(&pair, 0.0, grid).is_err());
    assert!(solve_s_lambda(&pair, f64::NAN, grid).is_err());
}

#[test]
fn regularizing_a_constant_field() {
    let pair = KernelPairHandle::riemann_liouville(0.5).unwrap();
    let grid = TimeGrid::new(1.0, 512).unwrap();
    let mu = 0.1;
    let fam = solve_s_lambda(&pair, mu, grid).unwrap();
    let v = vec![2.5; grid.steps + 1];
    let out = time_regularize(&v, &fam).unwrap();
    for (i, &t) in grid.nodes().iter().enumerate() {
        let want = 2.5 * (1.0 - common::ml_half((1.0 - t).sqrt() / mu));
        assert!((out[i] - want).abs() < 2e-5, "t={t}: {} vs {want}", out[i]);
    }
    assert!(time_regularize(&v[1..], &fam).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn regularization_does_not_increase_sup(values in proptest::collection::vec(-3.0f64..3.0, 65), mu in 0.001f64..1.0) {
        let pair = KernelPairHandle::riemann_liouville(0.5).unwrap();
        let fam = solve_s_lambda(&pair, mu, TimeGrid::new(1.0, 64).unwrap()).unwrap();
        let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let field: Vec<Vec<f64>> = values.iter().map(|&v| vec![v, -v, 0.5 * v]).collect();
        for row in time_regularize_field(&field, &fam).unwrap() {
            for v in row {
                prop_assert!(v.abs() <= sup * (1.0 + 1e-12));
            }
        }
    }
}
