use approx::assert_relative_eq;
use emharvest::device::{CoilSpec, DeviceParams, ElectricalLoad, Excitation, MagnetSpec, ResonatorParams};
use emharvest::electrical::{self, Branch, LoadSearch, Power, Tracking, Volume};
use emharvest::fitting::{
    self, calibrate_paper_device_detailed, FitOptions, FitParameter, MeasuredCurve, ParameterBound,
};
use emharvest::Execution;
use proptest::prelude::*;

fn device(k_cub: f64, coupling: f64, zeta: f64) -> DeviceParams {
    let r = ResonatorParams::tuned(7.35e-4, 344.0, zeta)
        .unwrap()
        .with_k_cub(k_cub)
        .unwrap();
    DeviceParams::new(
        r,
        MagnetSpec::default(),
        CoilSpec::prototype(),
        ElectricalLoad::new(1e3).unwrap(),
        coupling,
        97.728,
        DeviceParams::PROTOTYPE_VOLUME,
    )
    .unwrap()
}

fn unimodal(p: &[f64]) -> bool {
    let tol = 1e-9 * p.iter().cloned().fold(0.0, f64::max);
    let peak = p
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    p[..=peak].windows(2).all(|w| w[1] >= w[0] - tol) && p[peak..].windows(2).all(|w| w[1] <= w[0] + tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn load_power_is_unimodal_in_log_r(
        zeta in 1e-3f64..0.05,
        coupling in 0.01f64..3.0,
        k_cub in 0.0f64..5e9,
        y0 in 1e-7f64..5e-6,
        f in 300.0f64..400.0,
        resonant in any::<bool>(),
    ) {
        // at a fixed frequency a stiffening spring lets the upper branch
        // appear as the load lightens, so only the linear case is unimodal
        let d = device(if resonant { k_cub } else { 0.0 }, coupling, zeta);
        let search = LoadSearch {
            tracking: if resonant { Tracking::Resonance } else { Tracking::Fixed },
            branch: Branch::Up,
            exec: Execution::Sequential,
        };
        let ex = Excitation::new(y0, f).unwrap();
        let scan = electrical::load_scan(&d, &ex, &electrical::log_space(1e-2, 1e8, 121), &search);
        // past the bistability limit the resonant peak does not exist
        prop_assume!(scan.is_ok());
        let p: Vec<f64> = scan.unwrap().iter().map(|o| o.p_load).collect();
        prop_assert!(unimodal(&p), "{p:?}");
    }

    #[test]
    fn voltage_rises_with_load_at_fixed_amplitude(
        coupling in 0.01f64..3.0,
        z in 1e-7f64..1e-3,
        f in 10.0f64..1e4,
        r in 1e-2f64..1e7,
        factor in 1.001f64..100.0,
    ) {
        let d = device(0.0, coupling, 0.008);
        let lo = electrical::output_voltage(&d.with_load(r).unwrap(), z, f);
        let hi = electrical::output_voltage(&d.with_load(r * factor).unwrap(), z, f);
        prop_assert!(hi > lo);
    }

    #[test]
    fn npd_ignores_input_units(
        p_uw in 1e-3f64..1e4,
        v_cm3 in 1e-3f64..10.0,
        y0 in 1e-7f64..1e-4,
        f in 10.0f64..1e3,
    ) {
        let si = electrical::normalized_power_density(
            Power::watts(p_uw * 1e-6), Volume::cubic_meters(v_cm3 * 1e-6), y0, f);
        let lab = electrical::normalized_power_density(
            Power::microwatts(p_uw), Volume::cubic_centimeters(v_cm3), y0, f);
        prop_assert!((si - lab).abs() <= 1e-12 * si.abs());
    }
}

#[test]
fn bimodal_fixed_frequency_scan_falls_back_to_global_peak() {
    let d = device(751036835.4, 1.3029, 0.0031772);
    let ex = Excitation::new(4.832e-6, 354.185).unwrap();
    let search = LoadSearch::default();
    let opt = electrical::optimal_load(&d, &ex, (1e-2, 1e8), &search).unwrap();
    assert!(opt.used_fallback);
    let grid = electrical::log_space(1e-2, 1e8, 20001);
    let best = electrical::load_scan(&d, &ex, &grid, &search)
        .unwrap()
        .iter()
        .map(|o| o.p_load)
        .fold(0.0, f64::max);
    assert_relative_eq!(opt.p_max, best, max_relative = 1e-2);
}

fn bound(p: FitParameter) -> ParameterBound {
    match p {
        FitParameter::ZetaP => ParameterBound::new(p, 1e-3, 0.05),
        FitParameter::CouplingK => ParameterBound::new(p, 0.05, 3.0),
        FitParameter::KCub => ParameterBound::new(p, 1e8, 1e11),
    }
    .unwrap()
}

/// Up-branch voltage over the resonance, as a measured curve.
fn frequency_curve(d: &DeviceParams, y0: f64) -> MeasuredCurve {
    let f: Vec<f64> = (0..41).map(|i| 320.0 + i as f64).collect();
    let v = f
        .iter()
        .map(|&f| electrical::operating_point(d, &Excitation::new(y0, f).unwrap(), Branch::Up).unwrap().v_rms)
        .collect();
    MeasuredCurve::voltage_vs_frequency(f, v, y0, Branch::Up).unwrap()
}

#[test]
fn small_parameter_subsets_round_trip() {
    let truth = device(5e9, 0.5, 0.008);
    let y0 = 3e-6;
    let curve = frequency_curve(&truth, y0);
    let all = [FitParameter::ZetaP, FitParameter::CouplingK, FitParameter::KCub];
    let mut subsets: Vec<Vec<FitParameter>> = all.iter().map(|p| vec![*p]).collect();
    for i in 0..3 {
        for j in i + 1..3 {
            subsets.push(vec![all[i], all[j]]);
        }
    }
    for free in subsets {
        // start the template away from the truth in every free direction
        let template = free
            .iter()
            .try_fold(truth, |d, p| p.apply(&d, p.get(&truth) * 1.7))
            .unwrap();
        let bounds: Vec<_> = free.iter().map(|p| bound(*p)).collect();
        let report = fitting::fit_parameters(&curve, &template, &bounds, &FitOptions::default()).unwrap();
        assert!(report.converged, "{free:?}: {}", report.message);
        for p in &free {
            assert_relative_eq!(report.value(*p).unwrap(), p.get(&truth), max_relative = 1e-2);
        }
    }
}

#[test]
fn curves_need_five_increasing_points() {
    let ex = Excitation::new(1e-6, 344.0).unwrap();
    let short = MeasuredCurve::power_vs_load(vec![1.0, 2.0, 3.0, 4.0], vec![1.0; 4], ex, Tracking::Fixed);
    assert!(short.is_err());
    let unordered =
        MeasuredCurve::power_vs_load(vec![1.0, 3.0, 2.0, 4.0, 5.0], vec![1.0; 5], ex, Tracking::Fixed);
    assert!(unordered.is_err());
}

#[test]
fn calibration_is_deterministic() {
    let a = calibrate_paper_device_detailed(Execution::Parallel).unwrap();
    let b = calibrate_paper_device_detailed(Execution::Parallel).unwrap();
    let c = calibrate_paper_device_detailed(Execution::Sequential).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(a.zeta_p.to_bits(), c.zeta_p.to_bits());
}
