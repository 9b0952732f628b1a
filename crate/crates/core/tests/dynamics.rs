use approx::assert_relative_eq;
use nalgebra::DMatrix;
use num_complex::Complex64;
use polaron_core::bath::{CouplingConvention, DiscreteBath};
use polaron_core::dynamics::{
    analytic_amplitude, dominant_frequency, eta, max_dpe_dt, pe_lab_estimate, pe_polaron,
    propagate, rabi_onset_g, time_grid, EigenPropagator, Propagator, TaylorStepper, TimeSeries,
};
use polaron_core::experiments::{gamma_r, run_dynamics, solve, TimeGrid};
use polaron_core::polaron::{build_h_p1, frame_at, FixedPointOptions, SingleExcitationHamiltonian};
use polaron_core::spectral::ModelParams;
use polaron_core::Error;
use proptest::prelude::*;

/// App. C closed form at zero detuning, transcribed directly.
fn printed_amplitude(g: f64, gamma: f64, kappa: f64, t: f64) -> Complex64 {
    let eta = eta(g, gamma, kappa);
    let e = (eta * t * 0.5).exp();
    (-(kappa + gamma + eta) * t * 0.25).exp() * ((gamma - kappa) * (1.0 - e) + eta + eta * e)
        / (2.0 * eta)
}

fn fig3_hamiltonian(g: f64, n: usize) -> SingleExcitationHamiltonian {
    let p = ModelParams::new(1.0, 0.68, g, 0.1, 0.01, 10.0).unwrap();
    let s = solve(&p, n, &FixedPointOptions::default()).unwrap();
    build_h_p1(&s.bath, &s.frame).unwrap()
}

#[test]
fn empty_bath_is_pure_phase() {
    let f = frame_at(&DiscreteBath::empty(), 1.0, 0.8);
    let h = build_h_p1(&DiscreteBath::empty(), &f).unwrap();
    let times = time_grid(50.0, 0.5);
    for method in [Propagator::Eigen, Propagator::Taylor] {
        for s in propagate(&h, &times, method).unwrap() {
            let expected = Complex64::from_polar(1.0, -0.8 * s.time);
            assert!((s.psi - expected).norm() < 1e-12);
            assert!((pe_polaron(&s) - 1.0).abs() < 1e-14);
        }
    }
}

#[test]
fn single_resonant_mode_flops_completely() {
    let (delta, dr, c) = (1.0, 0.8, 0.05);
    // choose ω₁ so that both diagonal entries equal Δ_r
    let mut w = dr;
    for _ in 0..200 {
        let b = DiscreteBath::new(vec![w], vec![c], CouplingConvention::Annihilation).unwrap();
        let f = frame_at(&b, delta, dr).displacements[0];
        w = dr - 2.0 * dr * f * f;
    }
    let bath = DiscreteBath::new(vec![w], vec![c], CouplingConvention::Annihilation).unwrap();
    let frame = frame_at(&bath, delta, dr);
    let h = build_h_p1(&bath, &frame).unwrap();
    assert!((h.matrix[(1, 1)] - h.matrix[(0, 0)]).abs() < 1e-14);
    let v = 2.0 * dr * frame.displacements[0];
    let times = time_grid(200.0, 0.25);
    for method in [Propagator::Eigen, Propagator::Taylor] {
        for s in propagate(&h, &times, method).unwrap() {
            assert!(
                (pe_polaron(&s) - (v * s.time).cos().powi(2)).abs() < 1e-10,
                "{method:?} t={}",
                s.time
            );
        }
    }
}

#[test]
fn norm_is_conserved() {
    let h = fig3_hamiltonian(0.3, 128);
    let times = time_grid(200.0, 1.0);
    let eig = propagate(&h, &times, Propagator::Eigen).unwrap();
    assert!(eig.iter().all(|s| (s.norm_sqr() - 1.0).abs() < 1e-12));
    let tay = propagate(&h, &times, Propagator::Taylor).unwrap();
    assert!(tay.iter().all(|s| (s.norm_sqr() - 1.0).abs() < 1e-8));
}

#[test]
fn propagators_agree() {
    let h = fig3_hamiltonian(0.3, 64);
    let times = time_grid(200.0, 0.5);
    let eig = propagate(&h, &times, Propagator::Eigen).unwrap();
    let tay = TaylorStepper::new(&h).propagate(&times).unwrap();
    for (a, b) in eig.iter().zip(&tay) {
        assert!((pe_polaron(a) - pe_polaron(b)).abs() < 1e-7, "t={}", a.time);
        for (x, y) in a.psi_k.iter().zip(&b.psi_k) {
            assert!((x - y).norm() < 1e-6);
        }
    }
    let fast = EigenPropagator::new(&h).pe_series(&times);
    for (a, p) in eig.iter().zip(fast) {
        assert!((pe_polaron(a) - p).abs() < 1e-12);
    }
}

#[test]
fn non_hermitian_matrix_is_rejected() {
    let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.2, 1.0]);
    assert!(matches!(
        SingleExcitationHamiltonian::from_matrix(m),
        Err(Error::NonHermitian { .. })
    ));
}

#[test]
fn analytic_examples() {
    let (gamma, kappa) = (0.2, 0.05);
    for t in [0.0, 0.5, 3.0, 20.0] {
        let z = analytic_amplitude(0.0, gamma, kappa, 0.0, t);
        assert!((z - Complex64::new((-0.5 * gamma * t).exp(), 0.0)).norm() < 1e-14);
    }
    for (g, d) in [(0.0, 0.0), (0.3, 0.0), (0.3, 0.4), (1.0, -2.0)] {
        assert!((analytic_amplitude(g, gamma, kappa, d, 0.0) - 1.0).norm() < 1e-14);
    }
}

#[test]
fn analytic_matches_printed_closed_form() {
    for (g, gamma, kappa) in [
        (0.01, 0.3, 0.03),
        (0.05, 0.2, 0.02),
        (0.3, 0.21, 0.02),
        (0.6, 0.02, 0.2),
    ] {
        for i in 0..200 {
            let t = 0.25 * i as f64;
            let a = analytic_amplitude(g, gamma, kappa, 0.0, t);
            let b = printed_amplitude(g, gamma, kappa, t);
            assert!((a - b).norm() < 1e-12, "g={g} t={t}: {a} vs {b}");
        }
    }
}

#[test]
fn onset_is_the_reality_boundary_of_eta() {
    for (gr, k) in [(0.214, 0.0214), (0.05, 0.3), (0.1, 0.1)] {
        let g = rabi_onset_g(gr, k);
        assert!(eta(g, gr, k).norm() <= 1e-7 * (gr - k).abs().max(1e-300) + 1e-15);
        let above = eta(g * (1.0 + 1e-9) + 1e-12, gr, k);
        assert!(above.re == 0.0 && above.im > 0.0);
        if g > 0.0 {
            let below = eta(g * (1.0 - 1e-9), gr, k);
            assert!(below.im == 0.0 && below.re > 0.0);
        }
    }
    assert_eq!(rabi_onset_g(0.3, 0.3), 0.0);
}

#[test]
fn oscillation_frequency_is_half_imaginary_eta() {
    let (g, gamma, kappa) = (0.3, 0.05, 0.02);
    let times = time_grid(150.0, 0.05);
    // removing the envelope e^{−(γ+κ)t/2} leaves a pure sinusoid
    let pe: Vec<f64> = times
        .iter()
        .map(|&t| {
            analytic_amplitude(g, gamma, kappa, 0.0, t).norm_sqr()
                * (0.5 * (gamma + kappa) * t).exp()
        })
        .collect();
    let expected = 0.5 * eta(g, gamma, kappa).im.abs();
    let found = dominant_frequency(&times, &pe, 0.1, 2.0, 400);
    assert!(
        (found / expected - 1.0).abs() < 1e-3,
        "{found} vs {expected}"
    );
}

#[test]
fn lab_estimate_is_affine() {
    let s = TimeSeries::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.0]).unwrap();
    let lab = pe_lab_estimate(&s, 0.16);
    let app = lab.pe_app.unwrap();
    assert_eq!(app[0], 1.0);
    assert_relative_eq!(app[1], 0.58, max_relative = 1e-15);
    assert_relative_eq!(app[2], 0.16);
}

#[test]
fn derivative_diagnostic() {
    let times = time_grid(10.0, 0.1);
    let decay: Vec<f64> = times.iter().map(|t| (-t).exp()).collect();
    assert_eq!(
        max_dpe_dt(&TimeSeries::new(times.clone(), decay).unwrap()).unwrap(),
        0.0
    );
    let wave: Vec<f64> = times.iter().map(|t| 0.5 + 0.5 * (2.0 * t).cos()).collect();
    let m = max_dpe_dt(&TimeSeries::new(times, wave).unwrap()).unwrap();
    assert!((m - 1.0).abs() < 0.01);
    assert!(max_dpe_dt(&TimeSeries::new(vec![0.0, 1.0], vec![1.0, 0.5]).unwrap()).is_err());
}

#[test]
fn weak_coupling_decays_without_oscillating() {
    let p = ModelParams::new(1.0, 0.68, 0.05, 0.1, 0.01, 10.0).unwrap();
    let run = run_dynamics(
        &p,
        256,
        &TimeGrid {
            t_max: 60.0,
            dt: 0.05,
        },
        &FixedPointOptions::default(),
    )
    .unwrap();
    assert!(max_dpe_dt(&run.series).unwrap() < 1e-3);
    assert!(run.series.pe.last().unwrap() < &0.05);
}

#[test]
fn derivative_grows_with_coupling_above_threshold() {
    let o = FixedPointOptions::default();
    let grid = TimeGrid {
        t_max: 60.0,
        dt: 0.05,
    };
    let m: Vec<f64> = [0.2, 0.3, 0.4]
        .into_iter()
        .map(|g| {
            let p = ModelParams::new(1.0, 0.68, g, 0.1, 0.01, 10.0).unwrap();
            max_dpe_dt(&run_dynamics(&p, 256, &grid, &o).unwrap().series).unwrap()
        })
        .collect();
    assert!(m[0] > 0.0 && m[1] > m[0] && m[2] > m[1], "{m:?}");
}

#[test]
fn dynamics_run_bookkeeping() {
    let p = ModelParams::new(1.0, 0.68, 0.3, 0.1, 0.01, 10.0).unwrap();
    let run = run_dynamics(
        &p,
        128,
        &TimeGrid {
            t_max: 20.0,
            dt: 0.1,
        },
        &FixedPointOptions::default(),
    )
    .unwrap();
    assert_relative_eq!(run.gamma_r, gamma_r(&p, run.delta_r));
    assert_relative_eq!(run.pe_eq, 0.5 * (1.0 - run.delta_r));
    assert_eq!(
        run.series.pe_app.as_ref().unwrap().len(),
        run.series.times.len()
    );
    assert!(run
        .series
        .pe
        .iter()
        .all(|&x| (0.0..=1.0 + 1e-12).contains(&x)));
    let mut buf = Vec::new();
    run.series.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,pe_polaron,pe_app\n"));
    assert_eq!(text.lines().count(), run.series.times.len() + 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn analytic_amplitude_solves_its_ode(
        g in 0.0..1.0f64,
        gamma in 0.0..0.5f64,
        kappa in 0.0..0.5f64,
        d in -1.0..1.0f64,
        t in 0.1..20.0f64,
    ) {
        let h = 1e-4;
        let f = |s: f64| analytic_amplitude(g, gamma, kappa, d, s);
        let (m, z, p) = (f(t - h), f(t), f(t + h));
        let d1 = (p - m) / (2.0 * h);
        let d2 = (p - 2.0 * z + m) / (h * h);
        let i = Complex64::i();
        let res = d2 + (0.5 * (gamma + kappa) - i * d) * d1 + (g * g + 0.25 * gamma * kappa - i * 0.5 * d * gamma) * z;
        prop_assert!(res.norm() < 1e-5, "residual {}", res.norm());
    }

    #[test]
    fn analytic_probability_never_exceeds_one(
        g in 0.0..1.0f64,
        gamma in 0.0..0.5f64,
        kappa in 0.0..0.5f64,
        d in -1.0..1.0f64,
        t in 0.0..50.0f64,
    ) {
        prop_assert!(analytic_amplitude(g, gamma, kappa, d, t).norm_sqr() <= 1.0 + 1e-9);
    }

    #[test]
    fn random_hamiltonians_conserve_norm(
        ws in proptest::collection::vec(0.05..5.0f64, 1..24),
        cs in proptest::collection::vec(0.0..0.3f64, 24),
        dr in 0.1..1.0f64,
    ) {
        let n = ws.len();
        let bath = DiscreteBath::new(ws, cs[..n].to_vec(), CouplingConvention::Annihilation).unwrap();
        let frame = frame_at(&bath, 1.0, dr);
        let h = build_h_p1(&bath, &frame).unwrap();
        let times = time_grid(30.0, 1.0);
        let eig = propagate(&h, &times, Propagator::Eigen).unwrap();
        let tay = propagate(&h, &times, Propagator::Taylor).unwrap();
        for (a, b) in eig.iter().zip(&tay) {
            prop_assert!((a.norm_sqr() - 1.0).abs() < 1e-12);
            prop_assert!((b.norm_sqr() - 1.0).abs() < 1e-8);
            prop_assert!((pe_polaron(a) - pe_polaron(b)).abs() < 1e-7);
        }
    }
}
