use std::f64::consts::{FRAC_PI_2, PI};

use optispin::config::Presets;
use optispin::lambda::*;
use optispin::pulse::*;
use optispin::quantum::*;
use proptest::prelude::*;

fn preset(name: &str) -> (LambdaParams, DecayRates) {
    let p = Presets::builtin().get(name).unwrap();
    (p.params(), p.rates())
}

#[test]
fn cpt_fidelity_saturates_near_eighty_percent() {
    let pre = Presets::builtin().get("cpt_init").unwrap();
    let (p, r) = (pre.params(), pre.rates());
    let dark = dark_state(p.theta, p.phi, Branch::R);
    let w = build_lindbladian(&build_hamiltonian(&p), &r);
    let rho0 = DensityMatrix::from_bloch(&pre.initial_a.bloch()).unwrap();
    let f = |t: f64| evolve(&w, &rho0, t).unwrap().conditional_fidelity(&dark).unwrap();
    assert!(f(0.0) < f(0.05) && f(0.05) < f(0.1));
    let ss = stationary_state(&w, &rho0).unwrap().conditional_fidelity(&dark).unwrap();
    assert!((ss - 0.8).abs() <= 0.1, "{ss}");
    assert!((f(1.0) - ss).abs() < 0.01);
}

#[test]
fn cpt_drive_from_zero_settles_toward_steady_state() {
    let (p, r) = preset("cpt_init");
    let rho0 = DensityMatrix::basis(Level::Zero);
    let seq = PulseSequence::new(vec![PulseSegment::OpticalDrive { drive: p, rates: r, duration: 0.5 }]);
    let trace = run_sequence(&seq, &rho0, 0).unwrap();
    let w = build_lindbladian(&build_hamiltonian(&p), &r);
    let direct = evolve(&w, &rho0, 0.5).unwrap().bloch_vector();
    let end = trace.bloch.last().unwrap();
    assert!(end.distance(&direct) < 1e-9);
    let ss = stationary_state(&w, &rho0).unwrap().bloch_vector();
    assert!(end.distance(&ss) < 0.15, "{end:?} vs {ss:?}");
}

#[test]
fn single_branch_spectrum_has_deep_dip() {
    let (p, r) = preset("cpt_init");
    let s = simulate_cpt_spectrum(&p.with_coupling(Coupling::ROnly), &r, &[-50.0, 0.0, 50.0]).unwrap();
    assert!(s[1] < 0.5 * s[0] && s[1] < 0.5 * s[2], "{s:?}");
}

#[test]
fn competing_branch_quenches_the_dip() {
    let (p, r) = preset("cpt_init");
    let dets = [-50.0, 0.0, 50.0];
    let contrast = |p: &LambdaParams| {
        let s = simulate_cpt_spectrum(p, &r, &dets).unwrap();
        1.0 - s[1] / (0.5 * (s[0] + s[2]))
    };
    let resonant = contrast(&p);
    let centered = contrast(&LambdaParams { delta_l: -p.delta_e1 / 2.0, ..p });
    assert!(resonant > 0.0);
    assert!(resonant >= 2.0 * centered, "{resonant} vs {centered}");
}

fn dbp_counts(rho0: &DensityMatrix, duration: f64) -> f64 {
    let (p, r) = preset("cpt_init");
    let seq = PulseSequence::new(vec![PulseSegment::ReadoutWindow {
        duration,
        mode: ReadoutMode::Dbp { drive: p, rates: r },
        measured: true,
    }]);
    run_sequence(&seq, rho0, 0).unwrap().integrated_counts
}

#[test]
fn dbp_bright_input_outshines_dark_input() {
    let (p, _) = preset("cpt_init");
    let bright = dbp_counts(&bright_state(p.theta, p.phi, Branch::R).projector(), 0.4);
    let dark = dbp_counts(&dark_state(p.theta, p.phi, Branch::R).projector(), 0.4);
    assert!(bright > dark, "{bright} vs {dark}");
}

#[test]
fn srt_rotates_about_an_equatorial_axis() {
    let (p, r) = preset("sigma_x");
    let w = build_lindbladian(&build_hamiltonian(&p), &r);
    let rho0 = DensityMatrix::basis(Level::Zero);
    let pts: Vec<[f64; 3]> = (0..=100).map(|i| evolve(&w, &rho0, 0.001 * i as f64).unwrap().bloch_vector().as_array()).collect();
    let (axis, dev) = rotation_plane(&pts);
    assert!(axis[2].abs() < 0.25, "axis {axis:?}");
    assert!(dev < 0.25, "{dev}");
}

/// Normal of the best-fit plane through the origin and the largest
/// distance of any point from it.
fn rotation_plane(pts: &[[f64; 3]]) -> ([f64; 3], f64) {
    let mut m = nalgebra::Matrix3::<f64>::zeros();
    for p in pts {
        let v = nalgebra::Vector3::from(*p);
        m += v * v.transpose();
    }
    let eig = m.symmetric_eigen();
    let k = eig.eigenvalues.imin();
    let n = eig.eigenvectors.column(k);
    let axis = [n[0], n[1], n[2]];
    let dev = pts.iter().map(|p| (p[0] * axis[0] + p[1] * axis[1] + p[2] * axis[2]).abs()).fold(0.0, f64::max);
    (axis, dev)
}

fn arb_drive() -> impl Strategy<Value = (LambdaParams, DecayRates)> {
    (
        (-100.0..100.0f64, 0.0..300.0f64, 0.0..100.0f64, 0.0..PI, 0.0..2.0 * PI),
        (0.0..40.0f64, 0.0..40.0f64, 0.0..5.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..30.0f64),
    )
        .prop_map(|((dl, de, om, th, ph), (g, gi, gb, br, g1, gp))| {
            (
                LambdaParams { delta_l: dl, delta_e1: de, omega: om, theta: th, phi: ph, epsilon_s: 0.0, coupling: Coupling::Both },
                DecayRates { gamma_rad: g, gamma_isc: gi, gamma_isc_back: gb, branching: [br, 1.0 - br], gamma_1: g1, gamma_phi: gp },
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn evolution_is_a_quantum_channel((p, r) in arb_drive(), t in 0.0..2.0f64, rt in 0.0..1.0f64, th in 0.0..PI, ph in 0.0..2.0 * PI) {
        let w = build_lindbladian(&build_hamiltonian(&p), &r);
        let rho0 = DensityMatrix::from_bloch(&BlochVector::from_spherical(rt, th, ph)).unwrap();
        let m = evolve_raw(&w, rho0.matrix(), t).unwrap();
        prop_assert!((m.trace().re - 1.0).abs() < 1e-9);
        prop_assert!(hermiticity_error(&m) < 1e-9);
        let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
        let min = herm.symmetric_eigenvalues().min();
        prop_assert!(min >= -1e-8, "min eigenvalue {min}");
        let half = evolve_raw(&w, &evolve_raw(&w, rho0.matrix(), t / 2.0).unwrap(), t / 2.0).unwrap();
        prop_assert!((half - m).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-7);
    }

    #[test]
    fn dark_state_is_decoupled(th in 0.0..PI, ph in 0.0..2.0 * PI, om in 0.1..100.0f64) {
        let p = LambdaParams { delta_l: 0.0, delta_e1: 180.0, omega: om, theta: th, phi: ph, epsilon_s: 0.0, coupling: Coupling::Both };
        let h = build_hamiltonian(&p);
        for b in [Branch::R, Branch::L] {
            let d = dark_state(th, ph, b);
            let e = b.level().index();
            let amp: C64 = (0..DIM).map(|k| h[(e, k)] * d.as_vector()[k]).sum();
            prop_assert!(amp.norm() < 1e-12 * om.max(1.0));
        }
    }

    #[test]
    fn pl_counts_scale_with_shots_and_efficiency(shots in 1u64..1000, eff in 0.01..1.0f64) {
        let (p, r) = preset("cpt_init");
        let mk = |shots, eff| {
            let mut seq = PulseSequence::new(vec![PulseSegment::ReadoutWindow { duration: 0.05, mode: ReadoutMode::Dbp { drive: p, rates: r }, measured: true }]);
            seq.shots = shots;
            seq.collection_efficiency = eff;
            run_sequence(&seq, &DensityMatrix::basis(Level::PlusOne), 1).unwrap().integrated_counts
        };
        let base = mk(1, 1.0);
        prop_assert!((mk(shots, eff) - base * shots as f64 * eff).abs() <= 1e-9 * base * shots as f64);
    }
}

#[test]
fn esr_half_pi_about_y_maps_z_to_x() {
    let seq = PulseSequence::new(vec![PulseSegment::EsrRotation { axis_angle: FRAC_PI_2, angle: FRAC_PI_2 }]);
    let t = run_sequence(&seq, &DensityMatrix::basis(Level::Zero), 0).unwrap();
    let b = t.bloch.last().unwrap();
    assert!((b.x - 1.0).abs() < 1e-12 && b.y.abs() < 1e-12 && b.z.abs() < 1e-12, "{b:?}");
}
