use polariton_ed::basis::{full_dimension, Boundary};
use polariton_ed::eigen::LanczosOptions;
use polariton_ed::eigen::extremal_eigenpair;
use polariton_ed::groundstate::{
    analytic_gfds, argmax_abs_derivative, critical_bracket, gs_sweep, refined_sweep, GroundStateProblem,
};
use polariton_ed::multifractal::Moment;

#[test]
fn small_t_dimensions_vanish_with_detuning() {
    let opts = LanczosOptions::default();
    let d1 = |delta: f64| {
        let p = GroundStateProblem::new(4, 4, Boundary::Pbc, delta).unwrap();
        p.solve(1e-6, &opts).unwrap().d1
    };
    // t must sit well below the effective repulsion, which falls off like 1/Δ³
    let resonant = d1(0.0);
    for sign in [1.0, -1.0] {
        let (five, ten) = (d1(5.0 * sign), d1(10.0 * sign));
        assert!(ten < five && five < resonant, "Δ sign {sign}: {resonant} {five} {ten}");
        assert!(ten < 0.05, "{ten}");
    }
}

#[test]
fn analytic_state_dimensions_increase_with_length() {
    let rows: Vec<[f64; 3]> = (4..=9)
        .map(|l| analytic_gfds(l, l, full_dimension(l, l).unwrap()).unwrap())
        .collect();
    for k in 0..3 {
        assert!(rows.windows(2).all(|w| w[1][k] > w[0][k]), "component {k}: {rows:?}");
    }
    for r in &rows {
        assert!(r[2] <= r[1] && r[1] <= r[0]);
    }
}

#[test]
fn identical_sweeps_give_a_zero_width_bracket() {
    let p = GroundStateProblem::new(4, 4, Boundary::Pbc, 0.0).unwrap();
    let grid: Vec<f64> = (1..=12).map(|k| 0.04 * k as f64).collect();
    let sweep = gs_sweep(&p, &grid, &LanczosOptions::default()).unwrap();
    let est = critical_bracket(&sweep, &sweep, Moment::ONE).unwrap();
    assert_eq!(est.lower, est.upper);
    assert!(!est.grid_edge_warning);
}

#[test]
fn refined_sweeps_keep_a_strictly_increasing_grid() {
    let p = GroundStateProblem::new(4, 4, Boundary::Hwbc, 1.0).unwrap();
    let opts = LanczosOptions::default();
    let solver = |block: &_| extremal_eigenpair(block, &opts);
    for grid in [vec![0.05, 1.0, 10.0, 100.0], vec![1e-3, 1e-2, 0.1, 1.0]] {
        let sweep = refined_sweep(&p, &grid, Moment::ONE, 4, &solver).unwrap();
        let t: Vec<f64> = sweep.iter().map(|s| s.t_over_g).collect();
        assert!(t.windows(2).all(|w| w[1] > w[0]), "{t:?}");
        assert_eq!(t.len(), grid.len() + 4);
        argmax_abs_derivative(&sweep, Moment::ONE).unwrap();
    }
}
