use hartree_blowup::field::CartesianField;
use hartree_blowup::snapshot::radial_to_cartesian;
use hartree_blowup::solver::{Evolution, EvolutionParams, Sign};
use hartree_blowup_core::ground_state::GroundStateBundle;
use num_complex::Complex64;
use proptest::prelude::*;

fn params(dim: usize, extent: f64, cells: usize, weight: f64) -> EvolutionParams {
    EvolutionParams {
        dim,
        sigma: 0.3,
        sign: Sign::Plus,
        hartree_weight: weight,
        extent,
        cells,
        nonlinear: true,
        dealias: false,
    }
}

fn bundle() -> &'static GroundStateBundle {
    static B: std::sync::OnceLock<GroundStateBundle> = std::sync::OnceLock::new();
    B.get_or_init(|| GroundStateBundle::standard(1).unwrap())
}

fn ground_state(extent: f64, cells: usize, shift: f64) -> CartesianField {
    let b = bundle();
    radial_to_cartesian(&b.field(b.q()), &[shift], extent, cells).unwrap()
}

fn evolve(ev: &Evolution, u: &mut CartesianField, dt: f64, steps: usize) {
    for _ in 0..steps {
        ev.step(u, dt);
    }
}

#[test]
fn solitary_wave_only_rotates_without_hartree() {
    let ev = Evolution::new(params(1, 40.0, 1024, 0.0)).unwrap();
    let u0 = ground_state(40.0, 1024, 0.0);
    let err = |dt: f64| {
        let mut u = u0.clone();
        evolve(&ev, &mut u, dt, (1.0 / dt).round() as usize);
        let phase = Complex64::from_polar(1.0, 1.0);
        u.values().iter().zip(u0.values()).map(|(a, b)| (a - b * phase).norm()).fold(0.0, f64::max)
    };
    let (a, b) = (err(2e-3), err(1e-3));
    assert!(b < 1e-4, "{b}");
    assert!((a / b).log2() > 1.8, "{a} {b}");
}

#[test]
fn mass_is_conserved_and_energy_error_is_second_order() {
    let run = |dt: f64| {
        // defocusing Hartree keeps the critical-mass datum bounded
        let ev = Evolution::new(EvolutionParams { sign: Sign::Minus, ..params(1, 40.0, 1024, 1.0) }).unwrap();
        let mut u = ground_state(40.0, 1024, 0.0);
        u.values_mut().iter_mut().enumerate().for_each(|(i, v)| *v *= Complex64::from_polar(1.0, 0.3 * (i as f64 * 0.01).sin()));
        let (m0, e0) = (ev.mass(&u), ev.energy(&u));
        evolve(&ev, &mut u, dt, (0.5 / dt).round() as usize);
        ((ev.mass(&u) / m0 - 1.0).abs(), (ev.energy(&u) - e0).abs())
    };
    let (m1, e1) = run(4e-3);
    let (m2, e2) = run(2e-3);
    assert!(m1 < 1e-12 && m2 < 1e-12, "{m1} {m2}");
    let order = (e1 / e2).log2();
    assert!((order - 2.0).abs() < 0.3, "order {order}: {e1:e} {e2:e}");
}

#[test]
fn energy_is_translation_invariant() {
    let ev = Evolution::new(params(1, 60.0, 2048, 1.0)).unwrap();
    let a = ev.energy(&ground_state(60.0, 2048, 0.0));
    let b = ev.energy(&ground_state(60.0, 2048, 6.25));
    assert!((a - b).abs() < 1e-8 * a.abs().max(1.0), "{a} {b}");
}

#[test]
fn two_dimensional_mass_is_conserved() {
    let ev = Evolution::new(EvolutionParams { dim: 2, ..params(2, 16.0, 64, 0.5) }).unwrap();
    let mut u = CartesianField::from_fn(2, 16.0, 64, |x| {
        Complex64::new((-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp(), 0.2 * x[0] * (-(x[0] * x[0] + x[1] * x[1])).exp())
    })
    .unwrap();
    let m0 = ev.mass(&u);
    evolve(&ev, &mut u, 1e-3, 100);
    assert!((ev.mass(&u) / m0 - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn phase_rotation_commutes_with_the_flow(gamma in 0.0f64..std::f64::consts::TAU, amp in 0.5f64..1.5) {
        let ev = Evolution::new(params(1, 20.0, 256, 1.0)).unwrap();
        let base = CartesianField::from_fn(1, 20.0, 256, |x| Complex64::new(amp * (-x[0] * x[0]).exp(), 0.1 * x[0] * (-x[0] * x[0]).exp())).unwrap();
        let mut a = base.clone();
        a.rotate(gamma);
        evolve(&ev, &mut a, 1e-3, 20);
        let mut b = base;
        evolve(&ev, &mut b, 1e-3, 20);
        b.rotate(gamma);
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn reflection_commutes_with_the_flow(shift in -2.0f64..2.0) {
        let n = 256;
        let ev = Evolution::new(params(1, 20.0, n, 1.0)).unwrap();
        let f = move |x: f64| Complex64::new((-(x - shift).powi(2)).exp(), 0.2 * (-(x + 0.5).powi(2)).exp());
        let mut a = CartesianField::from_fn(1, 20.0, n, |x| f(x[0])).unwrap();
        let mut b = CartesianField::from_fn(1, 20.0, n, |x| f(-x[0])).unwrap();
        evolve(&ev, &mut a, 1e-3, 20);
        evolve(&ev, &mut b, 1e-3, 20);
        // x_j and x_{n-j} are mirror nodes
        for j in 1..n {
            prop_assert!((a.values()[j] - b.values()[n - j]).norm() < 1e-10);
        }
    }
}
