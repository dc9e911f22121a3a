use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rovib::error::Error;
use rovib::quantum::heisenberg::rotational_commutator_expectation;
use rovib::quantum::states::*;
use rovib::quantum::*;

fn line() -> Arc<LineGrid<f64>> {
    Arc::new(LineGrid::symmetric(12.0, 24001).unwrap())
}

fn ball() -> Arc<So3Grid<f64>> {
    Arc::new(So3Grid::new(96, 512, 1e-6).unwrap())
}

fn opts() -> QuantumOptions<f64> {
    QuantumOptions::default()
}

fn mean(psi: &GridWavefunction<f64>, a: &GridWavefunction<f64>) -> Complex<f64> {
    psi.inner(a).unwrap()
}

fn interior_state(grid: Arc<So3Grid<f64>>) -> GridWavefunction<f64> {
    orientation_gaussian(
        grid,
        Vector3::new(0.2, -0.1, 0.15),
        Matrix3::from_diagonal(&Vector3::new(0.09, 0.05, 0.07)),
        Vector3::new(1.0, 0.5, -0.3),
    )
    .unwrap()
}

#[test]
fn position_of_symmetric_constant_vanishes() {
    let g = Arc::new(LineGrid::symmetric(3.0, 301).unwrap());
    let psi = GridWavefunction::line_from_fn(g, |_| Complex::new(1.0, 0.0))
        .normalized()
        .unwrap();
    let x = position_op(&psi, 0).unwrap();
    assert!(mean(&psi, &x).norm() < 1e-14);
    assert!(matches!(position_op(&psi, 1), Err(Error::AxisOutOfRange(1))));
}

#[test]
fn narrow_peak_locates_its_centre() {
    let x0 = 1.37;
    let mut last = f64::MAX;
    for sigma in [0.2, 0.05, 0.01] {
        let psi = gaussian_packet(line(), x0, sigma, 0.0).unwrap();
        let x = mean(&psi, &position_op(&psi, 0).unwrap()).re;
        let dx = dispersion(&psi, Observable::Position(0), &opts()).unwrap();
        assert!((x - x0).abs() < 1e-10);
        assert!((dx - sigma).abs() < 1e-6 * sigma.max(1e-2));
        assert!(dx < last);
        last = dx;
    }
}

#[test]
fn momentum_of_plane_wave_packet() {
    for (hbar, k) in [(1.0, 1.7), (0.6, -2.3)] {
        let o = QuantumOptions { hbar, ..opts() };
        let psi = gaussian_packet(line(), 0.4, 0.8, k).unwrap();
        let p = mean(&psi, &momentum_op(&psi, &o).unwrap());
        assert!((p.re - hbar * k).abs() < 1e-4, "{p}");
        assert!(p.im.abs() < 1e-10);
    }
    let real = gaussian_packet(line(), 0.0, 1.0, 0.0).unwrap();
    assert!(mean(&real, &momentum_op(&real, &opts()).unwrap()).norm() < 1e-12);
}

#[test]
fn momentum_requires_decay() {
    let g = Arc::new(LineGrid::symmetric(3.0, 301).unwrap());
    let psi = gaussian_packet(g, 0.0, 1.0, 0.0).unwrap();
    assert!(matches!(momentum_op(&psi, &opts()), Err(Error::NoBoundaryDecay(_))));
}

#[test]
fn canonical_commutator_on_the_line() {
    let psi = oscillator_eigenstate(line(), 0, 1.0);
    let r4 = position_momentum_residual(&psi, &opts(), Stencil::Fourth).unwrap();
    assert!(r4 < 1e-10, "{r4}");
    let (r2, order) =
        position_momentum_convergence(&line(), |g| Ok(oscillator_eigenstate(g, 0, 1.0)), &opts()).unwrap();
    assert!(r2 <= 1e-6, "{r2}");
    assert!((order - 2.0).abs() <= 0.2, "{order}");
}

#[test]
fn oscillator_dispersions() {
    let o = opts();
    let g0 = oscillator_eigenstate(line(), 0, 1.0);
    let dq = dispersion(&g0, Observable::Position(0), &o).unwrap();
    let dp = dispersion(&g0, Observable::Momentum, &o).unwrap();
    assert!((dq - 0.5f64.sqrt()).abs() < 1e-9);
    assert!((dp - 0.5f64.sqrt()).abs() < 1e-9);
    for n in 0..=4 {
        let s = oscillator_eigenstate(line(), n, 1.0);
        let p =
            dispersion(&s, Observable::Position(0), &o).unwrap() * dispersion(&s, Observable::Momentum, &o).unwrap();
        assert!((p - (n as f64 + 0.5)).abs() < 1e-4, "{n} {p}");
    }
    let c = coherent_state(line(), 1.3, 0.0, 1.0);
    assert!((dispersion(&c, Observable::Position(0), &o).unwrap() - dq).abs() < 1e-6);
    assert!((dispersion(&c, Observable::Momentum, &o).unwrap() - dp).abs() < 1e-6);
}

#[test]
fn oscillator_dispersions_scale_with_hbar() {
    let hbar = 0.37;
    let o = QuantumOptions { hbar, ..opts() };
    let s = oscillator_eigenstate(line(), 2, hbar);
    let p = dispersion(&s, Observable::Position(0), &o).unwrap() * dispersion(&s, Observable::Momentum, &o).unwrap();
    assert!((p - 2.5 * hbar).abs() < 1e-4 * hbar);
}

#[test]
fn haar_grid_normalisation() {
    let g = ball();
    assert!((g.analytic_mass - 1.0).abs() < 1e-6);
    assert!((g.haar_weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(g.nodes.iter().all(|w| w.norm() < PI - 1e-6 + 1e-12));
    assert!(So3Grid::<f64>::new(15, 64, 1e-6).is_err());
    assert!(So3Grid::<f64>::new(16, 31, 1e-6).is_err());
}

#[test]
fn identity_centred_state_has_zero_means() {
    let psi = wrapped_gaussian(ball(), 0.3).unwrap();
    for k in 0..3 {
        let w = mean(&psi, &position_op(&psi, k).unwrap());
        assert!(w.norm() < 1e-12);
        let l = mean(&psi, &angmom_component_op(&psi, k, &opts()).unwrap());
        assert!(l.norm() < 1e-10, "{l}");
    }
}

#[test]
fn orientation_commutators() {
    let psi = interior_state(ball());
    let o = opts();
    assert!(body_commutator_residual(&psi, &o).unwrap() <= 1e-5);
    let l = angmom_commutator_residual(&psi, &o).unwrap();
    assert!(l <= 1e-5);
    // unit inertia reduces the angular-velocity check to the angular-momentum one
    assert_eq!(angvel_commutator_check(&Matrix3::identity(), &psi, &o).unwrap(), l);
    assert!(angvel_commutator_check(&Matrix3::from_diagonal(&Vector3::new(1.0, 2.0, 3.0)), &psi, &o).unwrap() <= 1e-4);
    let singular = Matrix3::from_diagonal(&Vector3::new(1.0, 0.0, 3.0));
    assert!(matches!(
        angvel_commutator_check(&singular, &psi, &o),
        Err(Error::SingularInertia(_))
    ));
}

#[test]
fn cyclic_boundary_negative_control() {
    let grid = ball();
    let edge = orientation_gaussian(
        grid.clone(),
        Vector3::new(0.0, 0.0, 2.9),
        Matrix3::from_diagonal(&Vector3::new(0.09, 0.09, 0.09)),
        Vector3::zeros(),
    )
    .unwrap();
    let inner = interior_state(grid);
    let o = opts();
    assert!(edge.boundary_mass(o.boundary_band) > o.boundary_gate);
    assert!(inner.boundary_mass(o.boundary_band) < o.boundary_gate);
    assert!(matches!(angmom_op(&edge, 0, &o), Err(Error::BoundaryMass { .. })));
    // including the outermost shells exposes the chart discontinuity
    let all = QuantumOptions {
        excluded_shells: 0,
        ..o
    };
    assert!(body_commutator_residual(&edge, &all).unwrap() > 1.0);
    assert!(body_commutator_residual(&inner, &all).unwrap() < 1e-5);
    let reports = heisenberg_suite(
        &[ProductState::single(edge)],
        SuiteKind::Rotational,
        &SuiteOptions::default(),
    )
    .unwrap();
    assert!(reports.iter().all(|r| r.indeterminate));
}

#[test]
fn hermitian_angular_momentum_is_symmetric() {
    let grid = ball();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_orientation_state(grid.clone(), &mut rng).unwrap();
    let b = random_orientation_state(grid, &mut rng).unwrap();
    let o = opts();
    for k in 0..3 {
        let d = mean(&a, &hermitian_angmom_op(&b, k, &o).unwrap()) - mean(&hermitian_angmom_op(&a, k, &o).unwrap(), &b);
        let l = mean(&a, &angmom_component_op(&b, k, &o).unwrap()) - mean(&angmom_component_op(&a, k, &o).unwrap(), &b);
        assert!(d.norm() < 1e-10 && l.norm() < 1e-10, "{d} {l}");
        for j in 0..3 {
            let c = rotational_commutator_expectation(&a, k, j, &o).unwrap();
            let expected = if j == k { 1.0 } else { 0.0 };
            assert!((c - expected).abs() < 1e-8, "{k}{j} {c}");
        }
    }
}

#[test]
fn vibrational_suite_saturates_for_ground_state() {
    let states = [ProductState::new(vec![
        oscillator_eigenstate(line(), 0, 1.0),
        oscillator_eigenstate(line(), 3, 1.0),
    ])];
    let r = heisenberg_suite(&states, SuiteKind::Vibrational, &SuiteOptions::default()).unwrap();
    assert_eq!(r.len(), 4);
    assert!(r.iter().all(|x| x.satisfied && !x.indeterminate));
    assert!((r[0].product - 0.5).abs() < 1e-6);
    assert_eq!((r[0].observable_a.as_str(), r[0].observable_b.as_str()), ("Q0", "P0"));
    assert!((r[3].product - 3.5).abs() < 1e-4);
    assert_eq!(r[1].bound, 0.0);
    assert_eq!(r[2].bound, 0.0);
    assert!(r
        .iter()
        .all(|x| (x.product - x.delta_a * x.delta_b).abs() <= 1e-12 * x.product.max(1.0)));
}

#[test]
fn electronic_suite_has_zero_cross_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let factors = (0..6)
        .map(|_| random_line_state(line(), 1.0, &mut rng).unwrap())
        .collect();
    let r = heisenberg_suite(
        &[ProductState::new(factors)],
        SuiteKind::Electronic,
        &SuiteOptions::default(),
    )
    .unwrap();
    assert_eq!(r.len(), 36);
    for x in &r {
        let same = x.observable_a[1..] == x.observable_b[1..];
        assert_eq!(
            x.bound,
            if same { 0.5 } else { 0.0 },
            "{} {}",
            x.observable_a,
            x.observable_b
        );
        assert!(x.satisfied);
    }
    let bad = ProductState::new(vec![oscillator_eigenstate(line(), 0, 1.0)]);
    assert!(matches!(
        heisenberg_suite(&[bad], SuiteKind::Electronic, &SuiteOptions::default()),
        Err(Error::MalformedStates(_))
    ));
}

#[test]
fn rotational_suite_for_narrow_wrapped_gaussian() {
    let psi = wrapped_gaussian(ball(), 0.1).unwrap();
    let r = heisenberg_suite(
        &[ProductState::single(psi)],
        SuiteKind::Rotational,
        &SuiteOptions::default(),
    )
    .unwrap();
    assert_eq!(r.len(), 9);
    for x in &r {
        assert!(x.satisfied && !x.indeterminate);
        if x.observable_a == "omega_z" && x.observable_b == "nL_z" {
            assert!(x.product >= 0.5 * (1.0 - 1e-3));
            assert!((x.product - 0.5).abs() <= 0.05 * 0.5);
        }
        if x.observable_a[6..] != x.observable_b[3..] {
            assert_eq!(x.bound, 0.0);
        }
    }
}

#[test]
fn fixed_frame_variant_is_satisfied() {
    let psi = wrapped_gaussian(ball(), 0.2).unwrap();
    let opts = SuiteOptions {
        frame: RotationalFrame::Fixed,
        ..SuiteOptions::default()
    };
    let r = heisenberg_suite(&[ProductState::single(psi)], SuiteKind::Rotational, &opts).unwrap();
    assert!(r.iter().all(|x| x.satisfied));
    // ⟨m⟩ is close to the identity for a state near the identity
    assert!(r[0].bound > 0.45 && r[0].bound < 0.5);
    assert!(r[1].bound < 1e-10);
}

#[test]
fn single_precision_line_grid() {
    let g = Arc::new(LineGrid::<f32>::symmetric(8.0, 801).unwrap());
    let psi = oscillator_eigenstate(g, 0, 1.0f32);
    psi.check_normalized(1e-5).unwrap();
    let o = QuantumOptions::<f32>::default();
    let dq = dispersion(&psi, Observable::Position(0), &o).unwrap();
    assert!((dq - 0.5f32.sqrt()).abs() < 1e-4);
}
