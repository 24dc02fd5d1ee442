use std::f64::consts::PI;

use approx::assert_relative_eq;
use emharvest::device::{CoilSpec, DeviceParams, ElectricalLoad, Excitation, MagnetSpec, ResonatorParams};
use emharvest::dynamics::{self, Direction, State, SweepSpec};
use emharvest::electrical::{self, Branch};
use emharvest::fitting;
use emharvest::harmonic;

fn device(k_cub: f64, coupling: f64, zeta: f64) -> DeviceParams {
    let r = ResonatorParams::tuned(7.35e-4, 344.0, zeta)
        .unwrap()
        .with_k_cub(k_cub)
        .unwrap();
    DeviceParams::new(
        r,
        MagnetSpec::default(),
        CoilSpec::prototype(),
        ElectricalLoad::new(100.0).unwrap(),
        coupling,
        97.728,
        DeviceParams::PROTOTYPE_VOLUME,
    )
    .unwrap()
}

#[test]
fn linear_steady_amplitude_matches_closed_form() {
    let d = device(0.0, 0.3, 0.008);
    let r = d.resonator();
    let c = d.damping().unwrap().c_total();
    for f in [300.0, 330.0, 344.0, 350.0, 400.0] {
        let ex = Excitation::new(1e-6, f).unwrap();
        let w = ex.omega();
        let closed = r.mass() * 1e-6 * w * w / ((r.k_lin() - r.mass() * w * w).powi(2) + (c * w).powi(2)).sqrt();
        let traj = dynamics::integrate(&d, &ex, 2.0, 1.0 / (100.0 * f)).unwrap();
        let z = dynamics::steady_state_amplitude(&traj, 0.5).unwrap().settled_amplitude().unwrap();
        assert_relative_eq!(z, closed, max_relative = 1e-2);
    }
}

/// Free decay of the linear oscillator, exact, as `(z, v)`.
fn free_decay(d: &DeviceParams, z0: f64, t: f64) -> (f64, f64) {
    let wn = d.resonator().omega_n();
    let zeta = d.damping().unwrap().zeta_total;
    let wd = wn * (1.0 - zeta * zeta).sqrt();
    let e = (-zeta * wn * t).exp();
    let z = e * (z0 * (wd * t).cos() + zeta * wn * z0 / wd * (wd * t).sin());
    let v = -e * z0 * wn * wn / wd * (wd * t).sin();
    (z, v)
}

#[test]
fn rk4_global_error_is_fourth_order() {
    let d = device(0.0, 0.0, 0.02);
    let ex = Excitation::new(0.0, 344.0).unwrap();
    let wn = d.resonator().omega_n();
    let start = State { z: 1e-4, v: 0.0, t: 0.0 };
    let duration = 20.0 / 344.0;
    let err = |steps: f64| {
        let traj = dynamics::integrate_from(&d, &ex, start, duration, 1.0 / (steps * 344.0)).unwrap();
        let end = traj.final_state();
        let (z, v) = free_decay(&d, 1e-4, end.t);
        (end.z - z).hypot((end.v - v) / wn)
    };
    let ratio = err(50.0) / err(100.0);
    assert!((16.0 * 0.8..=16.0 * 1.2).contains(&ratio), "ratio {ratio}");
}

#[test]
fn halving_dt_changes_final_state_little() {
    let d = device(5e9, 0.27, 0.008);
    let ex = Excitation::new(5.1e-6, 340.0).unwrap();
    let a = dynamics::integrate(&d, &ex, 0.2, 1.0 / (200.0 * 340.0)).unwrap().final_state();
    let b = dynamics::integrate(&d, &ex, 0.2, 1.0 / (400.0 * 340.0)).unwrap().final_state();
    let w = 2.0 * PI * 340.0;
    let scale = a.z.hypot(a.v / w);
    assert!((a.z - b.z).hypot((a.v - b.v) / w) < 1e-6 * scale);
}

#[test]
fn steady_state_energy_balance() {
    let d = device(5e9, 0.5, 0.008).with_resonator(
        device(5e9, 0.5, 0.008).resonator().with_gamma_sat(5e6).unwrap(),
    );
    for f in [330.0, 344.0, 360.0] {
        let ex = Excitation::new(3e-6, f).unwrap();
        let traj = dynamics::integrate(&d, &ex, 1.5, 1.0 / (128.0 * f)).unwrap();
        let pb = dynamics::power_balance(&d, &ex, &traj, 50).unwrap();
        assert_relative_eq!(pb.input, pb.dissipated(), max_relative = 1e-2);
    }
}

#[test]
fn operating_point_power_matches_time_domain() {
    let d = device(5e9, 0.5, 0.008);
    for f in [320.0, 344.0, 370.0] {
        let ex = Excitation::new(2e-6, f).unwrap();
        let op = electrical::operating_point(&d, &ex, Branch::Up).unwrap();
        let traj = dynamics::integrate(&d, &ex, 1.5, 1.0 / (128.0 * f)).unwrap();
        let pb = dynamics::power_balance(&d, &ex, &traj, 50).unwrap();
        assert_relative_eq!(op.p_load, pb.load_power(&d), max_relative = 2e-2);
    }
}

#[test]
fn sweeping_up_then_down_closes_the_loop() {
    let d = fitting::calibrate_paper_device().unwrap();
    let y0 = 5.1e-6;
    let up = dynamics::sweep(&d, &SweepSpec::between(320.0, 360.0, Direction::Up, y0)).unwrap();
    let down = dynamics::sweep_from(
        &d,
        &SweepSpec::between(320.0, 360.0, Direction::Down, y0),
        Some(up.end),
    )
    .unwrap();
    assert_eq!(dynamics::find_jumps(&down.bins).len(), 1);
    // below the bistable band both directions follow the single-valued
    // harmonic balance response
    for bin in up.bins.iter().chain(down.bins.iter()).filter(|b| b.f < 327.0) {
        let roots = harmonic::response_amplitudes(&d, y0, bin.f).unwrap();
        assert_eq!(roots.len(), 1);
        assert_relative_eq!(bin.z_amp, roots[0].amplitude, max_relative = 3e-2);
    }
}

#[test]
fn branch_depends_on_history_inside_band() {
    let d = fitting::calibrate_paper_device().unwrap();
    let (y0, f) = (5.1e-6, 340.0);
    let ex = Excitation::new(y0, f).unwrap();
    let roots = harmonic::response_amplitudes(&d, y0, f).unwrap();
    assert_eq!(roots.len(), 3);
    let dt = 1.0 / (100.0 * f);
    let from_rest = dynamics::integrate(&d, &ex, 1.5, dt).unwrap();
    let low = dynamics::steady_state_amplitude(&from_rest, 0.5).unwrap().amplitude;
    assert_relative_eq!(low, roots[0].amplitude, max_relative = 2e-2);

    let z = roots[2].amplitude;
    let phi = harmonic::response_phase(&d, f, z).unwrap();
    let seeded = State {
        z: -z * phi.sin(),
        v: z * 2.0 * PI * f * phi.cos(),
        t: 0.0,
    };
    let traj = dynamics::integrate_from(&d, &ex, seeded, 1.5, dt).unwrap();
    let high = dynamics::steady_state_amplitude(&traj, 0.5).unwrap().amplitude;
    assert_relative_eq!(high, z, max_relative = 2e-2);
}

#[test]
fn saturation_makes_growth_sublinear() {
    let base = device(0.0, 0.27, 0.008);
    let sat = base.with_resonator(base.resonator().with_gamma_sat(2e7).unwrap());
    let amp = |d: &DeviceParams, y0: f64| {
        let ex = Excitation::new(y0, 344.0).unwrap();
        let traj = dynamics::integrate(d, &ex, 2.0, 1.0 / (100.0 * 344.0)).unwrap();
        dynamics::steady_state_amplitude(&traj, 0.5).unwrap().amplitude
    };
    let lin = amp(&base, 5e-6) / amp(&base, 1e-6);
    assert_relative_eq!(lin, 5.0, max_relative = 1e-3);
    let mut last = 0.0;
    let mut ratios = Vec::new();
    for y0 in [1e-6, 2e-6, 3e-6, 4e-6, 5e-6] {
        let a = amp(&sat, y0);
        assert!(a > last);
        ratios.push(a / y0);
        last = a;
    }
    assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
}
