mod common;

use fracdiff::entropy_verify::comparison_check;
use fracdiff::fraclap::{assemble, SpaceGrid1D};
use fracdiff::kernels::{KernelPairHandle, TimeGrid};
use fracdiff::timestepper::{
    approx_driver, memory_apply, solve, space_time_l1, ProblemData, Profile, SchemeWeights,
};
use proptest::prelude::*;

fn rl_problem(n_space: usize, steps: usize, f: Vec<f64>, u0: Vec<f64>) -> ProblemData {
    ProblemData::stationary(
        KernelPairHandle::riemann_liouville(0.5).unwrap(),
        0.5,
        SpaceGrid1D::new(-1.0, 1.0, n_space).unwrap(),
        TimeGrid::new(1.0, steps).unwrap(),
        f,
        u0,
    )
}

#[test]
fn zero_data_gives_zero_solution() {
    let sol = solve(&rl_problem(16, 32, vec![0.0; 16], vec![0.0; 16])).unwrap();
    assert!(sol.u.iter().flatten().all(|&v| v == 0.0));
    assert_eq!(sol.u.len(), 33);
}

#[test]
fn single_node_follows_mittag_leffler() {
    let grid = SpaceGrid1D::new(-1.0, 1.0, 1).unwrap();
    let a = assemble(grid, 0.5).unwrap().entries[(0, 0)];
    let mut last = f64::INFINITY;
    for &n in &[128, 256, 512] {
        let sol = solve(&rl_problem(1, n, vec![0.0], vec![1.0])).unwrap();
        let err = (sol.u[n][0] - common::ml_half(a)).abs();
        assert!(err < 1e-3, "n={n}: {err}");
        assert!(err < last);
        last = err;
    }
}

#[test]
fn matches_spectral_solution() {
    let n_space = 16;
    let grid = SpaceGrid1D::new(-1.0, 1.0, n_space).unwrap();
    let u0 = Profile::Bump.sample(&grid);
    let op = assemble(grid, 0.5).unwrap();
    let sol = solve(&rl_problem(n_space, 256, vec![0.0; n_space], u0.clone())).unwrap();
    let want = common::spectral_solution(&op.entries, &u0, 1.0);
    let err = sol.u[256].iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-2, "{err}");
}

#[test]
fn steps_satisfy_scheme_equations() {
    let grid = SpaceGrid1D::new(-1.0, 1.0, 24).unwrap();
    let p = rl_problem(24, 40, Profile::Indicator.sample(&grid), Profile::Spike.sample(&grid));
    let sol = solve(&p).unwrap();
    assert!(sol.max_step_residual() < 1e-10);
    assert!(sol.min_value() >= 0.0);
}

#[test]
fn memory_term_vanishes_on_constant_history() {
    let k = fracdiff::kernels::cell_integrals(&fracdiff::KernelSpec::riemann_liouville(0.3).unwrap(), 0.1, 10).unwrap();
    let w = SchemeWeights::new(k);
    assert!(w.is_monotone());
    let history = vec![vec![1.5, -2.0]; 11];
    for n in 1..=10 {
        assert!(memory_apply(&w, &history, n).unwrap().iter().all(|v| v.abs() < 1e-14));
    }
    assert!(memory_apply(&w, &history, 0).is_err());
    assert!(memory_apply(&w, &history[..3], 5).is_err());
}

#[test]
fn invalid_data_is_rejected() {
    let mut p = rl_problem(4, 4, vec![0.0; 4], vec![1.0, -1.0, 0.0, 0.0]);
    assert!(solve(&p).is_err());
    p.signed = true;
    assert!(solve(&p).is_ok());
    let short = rl_problem(4, 4, vec![0.0; 3], vec![0.0; 4]);
    assert!(solve(&short).is_err());
    assert!(approx_driver(&rl_problem(4, 4, vec![0.0; 4], vec![0.0; 4]), &[2.0, 1.0]).is_err());
}

#[test]
fn exp_weighted_kernel_decays_and_stays_positive() {
    let grid = SpaceGrid1D::new(0.0, 1.0, 12).unwrap();
    let u0 = Profile::Bump.sample(&grid);
    let p = ProblemData::stationary(
        KernelPairHandle::exp_weighted(0.6, 2.0).unwrap(),
        0.3,
        grid,
        TimeGrid::new(2.0, 64).unwrap(),
        vec![0.0; 12],
        u0.clone(),
    );
    let sol = solve(&p).unwrap();
    assert!(sol.min_value() >= 0.0);
    assert!(grid.l1_norm(&sol.u[64]) < grid.l1_norm(&u0));
}

#[test]
fn truncated_driver_is_monotone_with_bounded_l1() {
    let grid = SpaceGrid1D::new(-1.0, 1.0, 20).unwrap();
    let spike = Profile::Spike.sample(&grid);
    let p = rl_problem(20, 32, spike.clone(), spike);
    let (sols, report) = approx_driver(&p, &[0.5, 1.0, 3.0]).unwrap();
    assert_eq!(sols.len(), 3);
    assert_eq!(report.monotonicity_violations, 0);
    assert_eq!(report.negative_values, 0);
    for (norm, bound) in report.l1_norms.iter().zip(&report.l1_bounds) {
        assert!(norm <= bound);
    }
    let (tau, h) = (p.time.tau(), p.grid.h);
    assert!(report.l1_norms.windows(2).all(|w| w[0] <= w[1]));
    assert!((report.l1_norms[2] - space_time_l1(&sols[2].u, tau, h)).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ordered_data_give_ordered_solutions(
        f in proptest::collection::vec(0.0f64..2.0, 10),
        u0 in proptest::collection::vec(0.0f64..2.0, 10),
        df in proptest::collection::vec(0.0f64..1.0, 10),
        du in proptest::collection::vec(0.0f64..1.0, 10),
        alpha in 0.1f64..0.9,
        s in 0.1f64..0.9,
    ) {
        let grid = SpaceGrid1D::new(-1.0, 1.0, 10).unwrap();
        let time = TimeGrid::new(1.0, 16).unwrap();
        let pair = KernelPairHandle::riemann_liouville(alpha).unwrap();
        let lo = ProblemData::stationary(pair.clone(), s, grid, time, f.clone(), u0.clone());
        let hi = ProblemData::stationary(
            pair,
            s,
            grid,
            time,
            f.iter().zip(&df).map(|(a, b)| a + b).collect(),
            u0.iter().zip(&du).map(|(a, b)| a + b).collect(),
        );
        let (a, b) = (solve(&lo).unwrap(), solve(&hi).unwrap());
        for (x, y) in a.u.iter().flatten().zip(b.u.iter().flatten()) {
            prop_assert!(*x >= 0.0 && x <= y);
        }
    }

    #[test]
    fn signed_comparison_slacks_are_non_negative(
        f1 in proptest::collection::vec(-1.0f64..1.0, 8),
        f2 in proptest::collection::vec(-1.0f64..1.0, 8),
        u1 in proptest::collection::vec(-1.0f64..1.0, 8),
        u2 in proptest::collection::vec(-1.0f64..1.0, 8),
    ) {
        let grid = SpaceGrid1D::new(-1.0, 1.0, 8).unwrap();
        let time = TimeGrid::new(1.0, 16).unwrap();
        let pair = KernelPairHandle::riemann_liouville(0.5).unwrap();
        let mut p1 = ProblemData::stationary(pair.clone(), 0.5, grid, time, f1, u1);
        let mut p2 = ProblemData::stationary(pair, 0.5, grid, time, f2, u2);
        p1.signed = true;
        p2.signed = true;
        let slack = comparison_check(&solve(&p1).unwrap(), &solve(&p2).unwrap(), &p1, &p2).unwrap();
        prop_assert!(slack.positive_part >= -1e-10);
        prop_assert!(slack.contraction >= -1e-10);
    }
}
