use std::sync::Arc;

use proptest::prelude::*;
use radial_extremal::error::Error;
use radial_extremal::linear_ode::{default_density, grid_for};
use radial_extremal::potentials::{
    blend, build_oscillatory, hardy_level, OscillationOptions, Phi, PotentialSpec, Side,
};
use radial_extremal::reconstruction::{reconstruct, verify_fprime_equals_psi, NonlinearityTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ln_psi_over_phi(psi: &PotentialSpec, phi: &Phi, t: f64) -> f64 {
    psi.ln_psi(t, Side::Above) - phi.ln_value(t)
}

#[test]
fn first_stage_radii() {
    let (_, sched) = build_oscillatory(Phi::inv_r2(), 10, OscillationOptions::default()).unwrap();
    let sched = sched.unwrap();
    // x₁ = 1, g₁ = e^{-1}; the selection boundary solves φ(y)/32 = 1/g₁²
    let y1 = (-1f64).exp() / 32f64.sqrt() / 2.0;
    let s1 = &sched.stages[0];
    assert_eq!(s1.tx, 0.0);
    assert!((s1.tg + 1.0).abs() < 1e-15);
    assert!(
        (s1.ty.exp() / y1 - 1.0).abs() < 1e-14,
        "{} vs {y1}",
        s1.ty.exp()
    );
    assert!((s1.ty.exp() / 0.032_515_9 - 1.0).abs() < 2e-5);
    let x2 = sched.stages[1].tx.exp();
    assert!((x2 / (0.5 * y1) - 1.0).abs() < 1e-14);
    assert!((x2 / 0.016_257_9 - 1.0).abs() < 2e-5);
}

#[test]
fn stage_point_identities() {
    let phi = Phi::inv_r2();
    let (psi, sched) = build_oscillatory(phi, 10, OscillationOptions::default()).unwrap();
    let sched = sched.unwrap();
    assert_eq!(sched.stages.len(), 2);
    for st in &sched.stages {
        let n = st.n as f64;
        assert_eq!(psi.level(st.tx), 16.0, "r²Ψ(x_{})", st.n);
        let ratio = ln_psi_over_phi(&psi, &phi, st.ty) + (n + 1.0).ln();
        // ln φ(y₂) is about 4.7e5, so only relative rounding is meaningful
        let tol = 4.0 * f64::EPSILON * phi.ln_value(st.ty).abs().max(1.0);
        assert!(ratio.abs() <= tol, "Ψ/φ at y_{}: {ratio}", st.n);
    }
    assert_eq!(psi.level(sched.tail_tx), 16.0);
    let grid = grid_for(&psi, default_density(&psi), None).unwrap();
    psi.check_strictly_decreasing(&grid).unwrap();
    psi.check_admissible(&grid).unwrap();
}

#[test]
fn third_stage_is_not_representable() {
    let opts = OscillationOptions {
        stages: 3,
        ..Default::default()
    };
    let err = build_oscillatory(Phi::inv_r2(), 10, opts).unwrap_err();
    assert!(
        matches!(
            err,
            Error::TooManyStages {
                stage: 3,
                max_stages: 2
            }
        ),
        "{err:?}"
    );
}

#[test]
fn zero_stages_give_borderline() {
    let opts = OscillationOptions {
        stages: 0,
        ..Default::default()
    };
    let (psi, sched) = build_oscillatory(Phi::inv_r2(), 10, opts).unwrap();
    assert!(sched.is_none());
    assert_eq!(psi, PotentialSpec::borderline(10).unwrap());
}

#[test]
fn blend_stage_values() {
    let (inner, sched) =
        build_oscillatory(Phi::borderline(10), 10, OscillationOptions::default()).unwrap();
    let sched = sched.unwrap();
    let phi = blend(8.0, 16.0, inner, 10).unwrap();
    for st in &sched.stages {
        assert!((phi.level(st.tx) - 16.0).abs() < 1e-8);
        let expect = 8.0 + 8.0 / (st.n as f64 + 1.0);
        assert!(
            (phi.level(st.ty) - expect).abs() < 1e-8,
            "y_{}: {}",
            st.n,
            phi.level(st.ty)
        );
    }
    assert!((phi.level(sched.stages[1].ty) - (8.0 + 8.0 / 3.0)).abs() < 1e-8);
}

#[test]
fn oscillatory_reconstruction_passes_audit() {
    let (psi, _) = build_oscillatory(Phi::inv_r2(), 10, OscillationOptions::default()).unwrap();
    let grid = Arc::new(grid_for(&psi, default_density(&psi), None).unwrap());
    let rec = reconstruct(&psi, &grid).unwrap();
    assert!(rec.table.audit.passed(), "{:?}", rec.table.audit);
    let chk = verify_fprime_equals_psi(&rec.table, &psi, &rec.solution).unwrap();
    assert!(chk.max_rel_error <= 1e-6, "{chk:?}");

    let blended = blend(8.0, 16.0, psi, 10).unwrap();
    let rec = reconstruct(&blended, &grid).unwrap();
    assert!(rec.table.audit.passed(), "{:?}", rec.table.audit);
}

#[test]
fn borderline_round_trip() {
    let psi = PotentialSpec::borderline(10).unwrap();
    let grid = Arc::new(grid_for(&psi, 20.0, None).unwrap());
    let rec = reconstruct(&psi, &grid).unwrap();
    let f0 = rec.table.samples[0].f.value();
    assert!((f0 - 8.0).abs() < 1e-10, "{f0}");
    for k in 0..=100 {
        let s = k as f64 * 0.1;
        let exact = 8.0 * (2.0 * s).exp();
        let got = rec.table.value(s).unwrap();
        assert!((got / exact - 1.0).abs() <= 1e-5, "s={s}: {got} vs {exact}");
    }
    assert!((rec.table.value(2.0).unwrap() - 436.785).abs() < 1e-3);
    assert!(rec.table.audit.passed());
}

#[test]
fn hardy_round_trip() {
    // ω = r^β, u = (r^{-γ} - 1)/γ with γ = -(β+1), f = (β+N-1) r^{β-1}
    let dim = 12;
    let n = dim as f64;
    let beta = 0.5 * (2.0 - n + (n * n - 4.0 * hardy_level(dim)).sqrt());
    let gamma = -(beta + 1.0);
    let f = |s: f64| (beta + n - 1.0) * (1.0 + gamma * s).powf((1.0 - beta) / gamma);
    let psi = PotentialSpec::hardy(dim).unwrap();
    let grid = Arc::new(grid_for(&psi, 20.0, None).unwrap());
    let rec = reconstruct(&psi, &grid).unwrap();
    assert!((rec.table.samples[0].f.value() - 9.316_625).abs() < 1e-6);
    for s in [0.0, 0.5, 3.0, 20.0, 200.0] {
        assert!(
            (rec.table.value(s).unwrap() / f(s) - 1.0).abs() < 1e-6,
            "s={s}"
        );
    }
    assert!(((1.0 - beta) / gamma - 3.926_65).abs() < 1e-5);
    assert!(rec.table.audit.passed(), "{:?}", rec.table.audit);
    let chk = verify_fprime_equals_psi(&rec.table, &psi, &rec.solution).unwrap();
    assert!(chk.max_rel_error <= 1e-6, "{chk:?}");
}

#[test]
fn torsion_is_not_superlinear() {
    let psi = PotentialSpec::zero(10).unwrap();
    let grid = Arc::new(grid_for(&psi, 20.0, None).unwrap());
    let rec = reconstruct(&psi, &grid).unwrap();
    // ω = r, u = (1 - r²)/2, f ≡ N
    assert!((rec.table.samples[0].f.value() - 10.0).abs() < 1e-10);
    assert!(rec.table.s_max() <= 0.5);
    assert!(!rec.table.audit.superlinear);
    assert_eq!(rec.table.audit.failing_flag(), Some("superlinear"));
}

#[test]
fn table_csv_and_json() {
    let psi = PotentialSpec::borderline(10).unwrap();
    let grid = Arc::new(grid_for(&psi, 2.0, None).unwrap());
    let rec = reconstruct(&psi, &grid).unwrap();
    let csv = rec.table.to_csv();
    assert!(csv.starts_with("s,f,fp,fpp,t\n"));
    assert_eq!(csv.lines().count(), rec.table.len() + 1);
    let back: NonlinearityTable =
        serde_json::from_str(&serde_json::to_string(&rec.table).unwrap()).unwrap();
    assert_eq!(back, rec.table);
}

#[test]
fn outside_table_needs_extrapolation() {
    let psi = PotentialSpec::borderline(10).unwrap();
    let grid = Arc::new(grid_for(&psi, 10.0, Some(-12.0)).unwrap());
    let table = reconstruct(&psi, &grid).unwrap().table;
    let beyond = table.s_max() + 1.0;
    assert!(matches!(
        table.value(beyond),
        Err(Error::OutsideTable { .. })
    ));
    let table = table.with_extrapolation(true);
    let exact = 8.0 * (2.0 * beyond).exp();
    assert!((table.value(beyond).unwrap() / exact - 1.0).abs() < 1e-6);
}

fn random_steps(seed: u64, dim: usize) -> PotentialSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pieces = rng.gen_range(1..=4);
    let mut edges: Vec<f64> = (0..pieces - 1)
        .map(|_| rng.gen_range(-15.0..-0.5))
        .collect();
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup_by(|a, b| (*a - *b).abs() < 0.5);
    let levels = (0..=edges.len())
        .map(|_| rng.gen_range(0.5..=hardy_level(dim)))
        .collect();
    PotentialSpec::steps(dim, edges, levels).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fprime_equals_psi(seed in any::<u64>(), dim in prop::sample::select(vec![10usize, 12])) {
        let psi = random_steps(seed, dim);
        let grid = Arc::new(grid_for(&psi, 20.0, None).unwrap());
        let rec = reconstruct(&psi, &grid).unwrap();
        let chk = verify_fprime_equals_psi(&rec.table, &psi, &rec.solution).unwrap();
        prop_assert!(chk.max_rel_error <= 1e-6, "{:?}", chk);
    }

    #[test]
    fn potential_json_round_trip(seed in any::<u64>()) {
        let psi = random_steps(seed, 10);
        let back: PotentialSpec = serde_json::from_str(&serde_json::to_string(&psi).unwrap()).unwrap();
        prop_assert_eq!(back, psi);
    }
}
