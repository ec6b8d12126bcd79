use std::sync::Arc;

use proptest::prelude::*;
use radial_extremal::error::Error;
use radial_extremal::linear_ode::{
    closed_form_window, compare_potentials, grid_for, power_law_solution, solve_linearized,
    WindowSolution,
};
use radial_extremal::potentials::{hardy_level, window_potential, PotentialSpec};
use radial_extremal::radial_core::{radial_laplacian, LogRadialGrid, RadialProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, p);
        b.swap(col, p);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Window solution from the five matching conditions, unknowns `k, p, q, a, b`.
fn window_oracle(big_a: f64, big_b: f64, dim: usize, r: f64) -> f64 {
    let n = dim as f64;
    let (ra, rb) = (big_a, big_b);
    let m = vec![
        vec![ra, -1.0 / ra, -ra.powf(3.0 - n), 0.0, 0.0],
        vec![
            1.0,
            1.0 / (ra * ra),
            -(3.0 - n) * ra.powf(2.0 - n),
            0.0,
            0.0,
        ],
        vec![0.0, 1.0 / rb, rb.powf(3.0 - n), -rb, -rb.powf(1.0 - n)],
        vec![
            0.0,
            -1.0 / (rb * rb),
            (3.0 - n) * rb.powf(2.0 - n),
            -1.0,
            -(1.0 - n) * rb.powf(-n),
        ],
        vec![0.0, 0.0, 0.0, 1.0, 1.0],
    ];
    let x = solve(m, vec![0.0, 0.0, 0.0, 0.0, 1.0]);
    if r < ra {
        x[0] * r
    } else if r <= rb {
        x[1] / r + x[2] * r.powf(3.0 - n)
    } else {
        x[3] * r + x[4] * r.powf(1.0 - n)
    }
}

#[test]
fn window_closed_form_matches_matching_conditions() {
    for &(dim, a, b) in &[
        (10usize, 0.25, 0.5),
        (12, 0.1, 0.3),
        (10, 0.5 * (-8f64).exp(), 0.5),
    ] {
        for r in [1e-3, 0.5 * a, a, 0.5 * (a + b), b, 0.75, 0.99, 1.0] {
            let lib = closed_form_window(a, b, dim, r).unwrap();
            let oracle = window_oracle(a, b, dim, r);
            assert!(
                (lib / oracle - 1.0).abs() < 1e-10,
                "N={dim} A={a} B={b} r={r}: {lib} vs {oracle}"
            );
        }
    }
    let w = closed_form_window(0.25, 0.5, 10, 0.75).unwrap();
    assert!((w - 0.753_022_712_581_542_5).abs() < 1e-12, "{w}");
}

#[test]
fn solver_matches_window_closed_form() {
    for &(dim, a, b) in &[
        (10usize, 0.25, 0.5),
        (12, 0.1, 0.3),
        (10, 0.5 * (-8f64).exp(), 0.5),
    ] {
        let psi = window_potential(a, b, dim).unwrap();
        let grid = Arc::new(grid_for(&psi, 20.0, None).unwrap());
        let sol = solve_linearized(&psi, &grid).unwrap();
        let exact = WindowSolution::new(a, b, dim).unwrap();
        let worst = (0..grid.len())
            .map(|i| (sol.omega.value(i) / exact.value_t(grid.t(i)) - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-6, "N={dim} A={a} B={b}: {worst}");
    }
}

#[test]
fn power_law_exponents() {
    let beta = |c: f64, n: usize| power_law_solution(c, n).unwrap().beta_plus;
    assert!((beta(15.0, 10) - (-0.837_722)).abs() < 1e-6);
    assert!((beta(25.0, 12) - (-1.683_375)).abs() < 1e-6);
    // both roots satisfy the indicial equation
    for (c, n) in [
        (0.0, 10usize),
        (16.0, 10),
        (15.0, 10),
        (16.0, 10),
        (20.0, 12),
        (25.0, 12),
    ] {
        let r = power_law_solution(c, n).unwrap();
        let nf = n as f64;
        for b in [r.beta_plus, r.beta_minus] {
            assert!((b * b + (nf - 2.0) * b + c - (nf - 1.0)).abs() < 1e-12);
        }
    }
    assert!(matches!(
        power_law_solution(25.5, 10),
        Err(Error::ComplexRoots { .. })
    ));
}

#[test]
fn solver_matches_power_laws() {
    for dim in [10usize, 12] {
        let n = dim as f64;
        let levels = [
            0.0,
            2.0 * (n - 2.0),
            2.0 * (n - 2.0) - 1.0,
            hardy_level(dim),
        ];
        for c in levels {
            let psi = if c == 0.0 {
                PotentialSpec::zero(dim).unwrap()
            } else if c == 2.0 * (n - 2.0) {
                PotentialSpec::borderline(dim).unwrap()
            } else if c == hardy_level(dim) {
                PotentialSpec::hardy(dim).unwrap()
            } else {
                PotentialSpec::shifted(dim, 1.0).unwrap()
            };
            assert_eq!(psi.level(-3.0), c);
            let grid = Arc::new(grid_for(&psi, 20.0, None).unwrap());
            let sol = solve_linearized(&psi, &grid).unwrap();
            let b = power_law_solution(c, dim).unwrap().beta_plus;
            for i in 0..grid.len() {
                let exact = (b * grid.t(i)).exp();
                let got = sol.omega.value(i);
                assert!(
                    (got / exact - 1.0).abs() <= 1e-6,
                    "N={dim} c={c} t={}: {got} vs {exact}",
                    grid.t(i)
                );
            }
        }
    }
}

#[test]
fn inadmissible_levels_are_rejected() {
    let grid = Arc::new(grid_for(&PotentialSpec::zero(10).unwrap(), 4.0, None).unwrap());
    let above = PotentialSpec::steps(10, vec![-2.0], vec![16.0, 16.5]);
    let err = above.and_then(|p| solve_linearized(&p, &grid).map(|_| ()));
    assert!(matches!(err, Err(Error::Inadmissible { .. })), "{err:?}");
}

fn random_pair(rng: &mut ChaCha8Rng, dim: usize) -> (PotentialSpec, PotentialSpec) {
    let hardy = hardy_level(dim);
    let pieces = rng.gen_range(1..=6);
    let mut edges: Vec<f64> = (0..pieces - 1)
        .map(|_| rng.gen_range(-20.0..-0.1))
        .collect();
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup();
    let lo: Vec<f64> = (0..=edges.len())
        .map(|_| rng.gen_range(0.0..=hardy))
        .collect();
    let hi: Vec<f64> = lo.iter().map(|&c| rng.gen_range(c..=hardy)).collect();
    (
        PotentialSpec::steps(dim, edges.clone(), lo).unwrap(),
        PotentialSpec::steps(dim, edges, hi).unwrap(),
    )
}

#[test]
fn comparison_principle_seeded_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut violations = 0;
    for k in 0..100 {
        let dim = if k % 2 == 0 { 10 } else { 12 };
        let (p1, p2) = random_pair(&mut rng, dim);
        let mut knots = p1.knots();
        knots.extend(p2.knots());
        let grid = Arc::new(LogRadialGrid::new(dim, -30.0, 8.0, &knots).unwrap());
        let rep = compare_potentials(&p1, &p2, &grid).unwrap();
        if rep.max_excess > 1e-8 {
            violations += 1;
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn comparison_rejects_unordered_pair() {
    let p1 = PotentialSpec::borderline(10).unwrap();
    let p2 = PotentialSpec::zero(10).unwrap();
    let grid = Arc::new(grid_for(&p1, 4.0, None).unwrap());
    assert!(matches!(
        compare_potentials(&p1, &p2, &grid),
        Err(Error::OrderingViolated { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn comparison_holds_for_random_steps(seed in any::<u64>(), dim in prop::sample::select(vec![10usize, 11, 12, 14])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p1, p2) = random_pair(&mut rng, dim);
        let mut knots = p1.knots();
        knots.extend(p2.knots());
        let grid = Arc::new(LogRadialGrid::new(dim, -30.0, 8.0, &knots).unwrap());
        let rep = compare_potentials(&p1, &p2, &grid).unwrap();
        prop_assert!(rep.max_excess <= 1e-8, "{:?}", rep);
    }

    #[test]
    fn laplacian_of_power(beta in -6.0f64..3.0, dim in 3usize..14) {
        let grid = Arc::new(LogRadialGrid::new(dim, -8.0, 80.0, &[]).unwrap());
        let u = RadialProfile::from_fn(grid.clone(), |t| (beta * t).exp(), |t| beta * (beta * t).exp()).unwrap();
        let lap = radial_laplacian(&u).unwrap();
        let n = dim as f64;
        for i in 1..grid.len() - 1 {
            let t = grid.t(i);
            let exact = -beta * (beta + n - 2.0) * ((beta - 2.0) * t).exp();
            let scale = ((beta - 2.0) * t).exp() * (1.0 + beta.abs() * (beta + n - 2.0).abs());
            prop_assert!((lap.profile.value(i) - exact).abs() <= 1e-6 * scale, "t={} {} vs {}", t, lap.profile.value(i), exact);
        }
    }

    #[test]
    fn omega_is_positive(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, _) = random_pair(&mut rng, 10);
        let grid = Arc::new(LogRadialGrid::new(10, -30.0, 8.0, &p.knots()).unwrap());
        let sol = solve_linearized(&p, &grid).unwrap();
        prop_assert!((0..grid.len()).all(|i| sol.omega.value(i) > 0.0));
        prop_assert!((sol.omega.value(grid.len() - 1) - 1.0).abs() < 1e-12);
    }
}
