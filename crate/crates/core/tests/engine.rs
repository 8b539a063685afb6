use gcalc_core::{
    conditional_expect, expect, solve_gheat_diag, CylinderFunctional, Direction, Error, SolverConfig, UncertaintySet,
};

fn light() -> SolverConfig {
    SolverConfig {
        grid_points: 801,
        nested_grid_points: 201,
        prefix_points: 201,
        grid_points_2d: 101,
        ..Default::default()
    }
}

fn interval() -> UncertaintySet {
    UncertaintySet::interval(0.5, 1.0).unwrap()
}

fn axis() -> Direction {
    Direction::new(vec![1.0]).unwrap()
}

#[test]
fn squared_increments_over_three_times() {
    let x = CylinderFunctional::new(vec![1.0, 2.0, 3.0], axis(), |v| {
        v[0] * v[0] + (v[1] - v[0]).powi(2) + (v[2] - v[1]).powi(2)
    })
    .unwrap();
    let up = expect(&x, &interval(), &light()).unwrap();
    assert!((up - 3.0).abs() < 2e-2, "{up}");
    let down = -expect(&x.neg(), &interval(), &light()).unwrap();
    assert!((down - 0.75).abs() < 2e-2, "{down}");
}

#[test]
fn conditioning_on_the_first_time_freezes_it() {
    // E[B_1 + (B_2 − B_1)^2 | H_1] = B_1 + 1
    let x = CylinderFunctional::new(vec![1.0, 2.0], axis(), |v| v[0] + (v[1] - v[0]).powi(2)).unwrap();
    let c = conditional_expect(&x, 1, &interval(), &light()).unwrap();
    assert!(c.max_deviation(|p| p[0] + 1.0, 2.0) < 5e-3);
}

#[test]
fn diagonal_solver_splits_across_axes() {
    let gamma = UncertaintySet::diagonal_box(vec![(0.5, 1.0), (0.2, 0.6)]).unwrap();
    // convex in x, concave in y: each axis picks its own extreme volatility
    let u = solve_gheat_diag(&gamma, |x, y| x * x - y * y, 1.0, &light()).unwrap();
    assert!((u.eval(0.0, 0.0) - (1.0 - 0.04)).abs() < 5e-3, "{}", u.eval(0.0, 0.0));
    let u = solve_gheat_diag(&gamma, |x, y| (x + 0.3).max(0.0) + y.abs(), 0.5, &light()).unwrap();
    let call = |v: f64, k: f64| {
        let s = v.sqrt();
        let z = k / s;
        let pdf = (-z * z / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        s * pdf + k * 0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
    };
    let expected = call(0.5, 0.3) + 2.0 * call(0.18, 0.0);
    assert!((u.eval(0.0, 0.0) - expected).abs() < 5e-3, "{} vs {expected}", u.eval(0.0, 0.0));
}

#[test]
fn one_dimensional_sets_reject_the_diagonal_solver() {
    assert!(matches!(solve_gheat_diag(&interval(), |x, _| x, 1.0, &light()), Err(Error::Unsupported(_))));
}

/// Abramowitz and Stegun 7.1.26, |error| < 1.5e-7.
fn erf(x: f64) -> f64 {
    let t = 1.0 / (1.0 + 0.3275911 * x.abs());
    let poly = t * (0.254829592 + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let y = 1.0 - poly * (-x * x).exp();
    if x >= 0.0 {
        y
    } else {
        -y
    }
}
