//! Load voltage and power, load-resistance optimization, power density
//! and the geometric scaling and track-thickness studies.

use std::f64::consts::PI;

use crate::device::{DeviceParams, Excitation, ResonatorParams};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::harmonic;

/// Which stable branch supplies the amplitude when the response is
/// multivalued.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branch {
    /// High-amplitude branch reached by increasing frequency.
    #[default]
    Up,
    /// Low-amplitude branch reached by decreasing frequency.
    Down,
}

/// How the excitation frequency is chosen for each load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Tracking {
    /// Use the excitation's own frequency.
    #[default]
    Fixed,
    /// Follow the resonance peak of the selected branch as the load moves it.
    Resonance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub f: f64,
    pub y0: f64,
    pub r_load: f64,
    pub z_amp: f64,
    pub v_rms: f64,
    pub p_load: f64,
}

impl OperatingPoint {
    fn new(device: &DeviceParams, f: f64, y0: f64, z_amp: f64) -> Self {
        let v_rms = output_voltage(device, z_amp, f);
        Self {
            f,
            y0,
            r_load: device.r_load(),
            z_amp,
            v_rms,
            p_load: v_rms * v_rms / device.r_load(),
        }
    }
}

/// RMS load voltage for displacement amplitude `z_amp` at `f` Hz.
pub fn output_voltage(device: &DeviceParams, z_amp: f64, f: f64) -> f64 {
    device.load_voltage_rms(z_amp, f)
}

/// Steady operating point at the excitation frequency, with the amplitude
/// taken from the harmonic balance at the device's load.
pub fn operating_point(
    device: &DeviceParams,
    excitation: &Excitation,
    branch: Branch,
) -> Result<OperatingPoint> {
    let y0 = excitation.amplitude_y0();
    let f = excitation.frequency_hz();
    let point = harmonic::ResponsePoint {
        f,
        roots: harmonic::response_amplitudes(device, y0, f)?,
    };
    let z = match branch {
        Branch::Up => point.largest_stable(),
        Branch::Down => point.smallest_stable(),
    }
    .ok_or_else(|| Error::Response(format!("no stable amplitude at {f} Hz")))?;
    Ok(OperatingPoint::new(device, f, y0, z))
}

/// Operating point at the resonance peak of the chosen branch.
///
/// On the up branch that is the backbone intersection. On the down branch
/// it is the landing point of the upward jump at the lower saddle-node, or
/// the backbone peak when the response is single-valued.
pub fn resonant_operating_point(
    device: &DeviceParams,
    y0: f64,
    branch: Branch,
) -> Result<OperatingPoint> {
    if y0 == 0.0 {
        let f = device.resonator().omega_n() / (2.0 * PI);
        return Ok(OperatingPoint::new(device, f, 0.0, 0.0));
    }
    if branch == Branch::Down {
        if let Some(f) = harmonic::jump_frequencies(device, y0)?.down_sweep {
            let roots = harmonic::response_amplitudes(device, y0, f)?;
            let z = roots.last().map(|r| r.amplitude).unwrap_or(0.0);
            return Ok(OperatingPoint::new(device, f, y0, z));
        }
    }
    let peak = harmonic::resonance_peak(device, y0)?.ok_or_else(|| {
        Error::Response(format!(
            "upper branch never turns over at Y0 = {y0:.3e} m (nonlinearity index >= 1)"
        ))
    })?;
    Ok(OperatingPoint::new(device, peak.f_peak, y0, peak.amplitude))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LoadSearch {
    pub tracking: Tracking,
    pub branch: Branch,
    pub exec: Execution,
}

impl LoadSearch {
    pub fn resonant() -> Self {
        Self {
            tracking: Tracking::Resonance,
            ..Self::default()
        }
    }

    fn evaluate(&self, device: &DeviceParams, excitation: &Excitation, r: f64) -> Result<OperatingPoint> {
        let dev = device.with_load(r)?;
        match self.tracking {
            Tracking::Fixed => operating_point(&dev, excitation, self.branch),
            Tracking::Resonance => {
                resonant_operating_point(&dev, excitation.amplitude_y0(), self.branch)
            }
        }
    }
}

pub fn load_scan(
    device: &DeviceParams,
    excitation: &Excitation,
    r_values: &[f64],
    search: &LoadSearch,
) -> Result<Vec<OperatingPoint>> {
    exec::map_ordered(search.exec, r_values, |&r| search.evaluate(device, excitation, r))
        .into_iter()
        .collect()
}

pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalLoad {
    pub r_opt: f64,
    pub p_max: f64,
    pub point: OperatingPoint,
    /// True when the pre-scan was not unimodal and a dense grid was used.
    pub used_fallback: bool,
}

const PRESCAN_POINTS: usize = 61;
const DENSE_POINTS: usize = 4001;
const GOLDEN_LOG_TOL: f64 = 1e-4;

/// Whether `p` rises (weakly) to a single maximum and then falls.
fn is_unimodal(p: &[f64]) -> bool {
    let tol = 1e-12 * p.iter().cloned().fold(0.0, f64::max);
    let mut falling = false;
    for w in p.windows(2) {
        let d = w[1] - w[0];
        if d < -tol {
            falling = true;
        } else if d > tol && falling {
            return false;
        }
    }
    true
}

/// Load resistance in `r_range` that maximizes delivered power: golden
/// section over `ln R` to 1e-4 relative after a unimodality pre-scan.
pub fn optimal_load(
    device: &DeviceParams,
    excitation: &Excitation,
    r_range: (f64, f64),
    search: &LoadSearch,
) -> Result<OptimalLoad> {
    let (lo, hi) = r_range;
    if !(lo > 0.0 && hi.is_finite() && hi / lo >= 1e3) {
        return Err(Error::Response(format!(
            "load range must span at least 3 decades, got {lo:.3e}..{hi:.3e} ohm"
        )));
    }
    let grid = log_space(lo, hi, PRESCAN_POINTS);
    let scan = load_scan(device, excitation, &grid, search)?;
    let powers: Vec<f64> = scan.iter().map(|p| p.p_load).collect();

    if !is_unimodal(&powers) {
        log::warn!("load pre-scan is not unimodal; falling back to a dense grid");
        let dense = log_space(lo, hi, DENSE_POINTS);
        let scan = load_scan(device, excitation, &dense, search)?;
        let best = scan
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.p_load.total_cmp(&b.1.p_load).then(b.0.cmp(&a.0)))
            .map(|(_, p)| *p)
            .expect("dense grid is non-empty");
        return Ok(OptimalLoad {
            r_opt: best.r_load,
            p_max: best.p_load,
            point: best,
            used_fallback: true,
        });
    }

    let i = powers
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .expect("pre-scan is non-empty");
    let mut a = grid[i.saturating_sub(1)].ln();
    let mut b = grid[(i + 1).min(grid.len() - 1)].ln();
    let power = |x: f64| search.evaluate(device, excitation, x.exp()).map(|p| p.p_load);

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut pc = power(c)?;
    let mut pd = power(d)?;
    while b - a > GOLDEN_LOG_TOL {
        if pc >= pd {
            b = d;
            d = c;
            pd = pc;
            c = b - inv_phi * (b - a);
            pc = power(c)?;
        } else {
            a = c;
            c = d;
            pc = pd;
            d = a + inv_phi * (b - a);
            pd = power(d)?;
        }
    }
    let r_opt = (0.5 * (a + b)).exp();
    let point = search.evaluate(device, excitation, r_opt)?;
    Ok(OptimalLoad {
        r_opt,
        p_max: point.p_load,
        point,
        used_fallback: false,
    })
}

/// Standard gravity used for normalizing accelerations, m/s^2.
pub const STANDARD_GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Power(f64);

impl Power {
    pub fn watts(w: f64) -> Self {
        Self(w)
    }
    pub fn microwatts(uw: f64) -> Self {
        Self(uw * 1e-6)
    }
    pub fn as_watts(&self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Volume(f64);

impl Volume {
    pub fn cubic_meters(v: f64) -> Self {
        Self(v)
    }
    pub fn cubic_centimeters(v: f64) -> Self {
        Self(v * 1e-6)
    }
    pub fn as_cubic_meters(&self) -> f64 {
        self.0
    }
    pub fn as_cubic_centimeters(&self) -> f64 {
        self.0 * 1e6
    }
}

/// Raw power density in W/cm^3.
pub fn power_density(p: Power, volume: Volume) -> f64 {
    p.as_watts() / volume.as_cubic_centimeters()
}

/// Power per volume per squared peak acceleration, W/cm^3/g^2.
pub fn normalized_power_density(p: Power, volume: Volume, y0: f64, f: f64) -> f64 {
    let a_g = y0 * (2.0 * PI * f).powi(2) / STANDARD_GRAVITY;
    power_density(p, volume) / (a_g * a_g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub s: f64,
    pub f_res: f64,
    pub y0: f64,
    pub coupling_k: f64,
    pub r_coil: f64,
    pub r_opt: f64,
    pub p_max: f64,
    pub volume: f64,
    pub npd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub points: Vec<ScalingPoint>,
    /// Slope of `ln NPD` against `ln s`.
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// RMS of the log-log fit residuals.
    pub residual_rms: f64,
    /// What is held fixed and how each parameter is rescaled.
    pub assumptions: Vec<String>,
}

/// Comparison exponent for miniaturized electromagnetic generators.
pub const REFERENCE_SCALING_EXPONENT: f64 = 4.0;

const SCALING_LOAD_RANGE: (f64, f64) = (1e-2, 1e8);

/// Geometric self-similar scaling at fixed base acceleration.
///
/// Every length of magnet, coil and gap is multiplied by `s`. Mass follows
/// the magnet (`s^3`), `k_lin` goes as `s`, `k_cub` as `s^-3` and
/// `gamma_sat` as `s^-4`, which keeps the nonlinear regime of the
/// fixed-acceleration operating point comparable. `K` and `R_coil` are
/// recomputed from the scaled geometry. Each device is driven at its own
/// up-branch resonance with the base acceleration amplitude, at its
/// optimal load.
pub fn scaling_study(
    base: &DeviceParams,
    base_y0: f64,
    s_list: &[f64],
    exec: Execution,
) -> Result<ScalingReport> {
    if s_list.len() < 5 {
        return Err(Error::Scaling(format!(
            "need at least 5 scale factors, got {}",
            s_list.len()
        )));
    }
    if let Some(s) = s_list.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::Scaling(format!("scale factors must be > 0, got {s}")));
    }
    let first = s_list[0];
    if s_list.iter().all(|s| *s == first) {
        return Err(Error::Scaling(
            "all scale factors are equal; the log-log exponent is undefined".into(),
        ));
    }
    let search = LoadSearch {
        exec: Execution::Sequential,
        ..LoadSearch::resonant()
    };
    let base_ex = Excitation::new(base_y0, 1.0)?;
    let base_op = optimal_load(base, &base_ex, SCALING_LOAD_RANGE, &search)?;
    let accel = base_y0 * (2.0 * PI * base_op.point.f).powi(2);

    let points = exec::map_ordered(exec, s_list, |&s| scaled_point(base, s, accel, &search))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let xs: Vec<f64> = points.iter().map(|p| p.s.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.npd.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - exponent * x).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    if !exponent.is_finite() {
        return Err(Error::Scaling("degenerate log-log fit".into()));
    }

    let assumptions = vec![
        "all lengths (magnet, coil tracks, die, gap) scale with s".to_string(),
        "mass ~ s^3 (fixed density); k_lin ~ s; k_cub ~ s^-3; gamma_sat ~ s^-4".to_string(),
        "zeta_p, remanence, resistivity and turn count held fixed".to_string(),
        format!("base acceleration amplitude held at {accel:.4} m/s^2"),
        "each device driven at its own up-branch resonance, at its optimal load".to_string(),
        format!(
            "comparison exponent for miniaturized electromagnetic generators: {REFERENCE_SCALING_EXPONENT}"
        ),
    ];
    Ok(ScalingReport {
        points,
        exponent,
        intercept,
        r_squared,
        residual_rms: (ss_res / n).sqrt(),
        assumptions,
    })
}

fn scaled_point(base: &DeviceParams, s: f64, accel: f64, search: &LoadSearch) -> Result<ScalingPoint> {
    let r = base.resonator();
    let magnet = base.magnet().scaled(s)?;
    let coil = base.coil().scaled(s)?;
    let resonator = ResonatorParams::new(
        r.mass() * s.powi(3),
        r.k_lin() * s,
        r.k_cub() * s.powi(-3),
        r.zeta_p(),
        r.gamma_sat() * s.powi(-4),
    )?;
    let volume = base.device_volume() * s.powi(3);
    let device = DeviceParams::from_geometry(resonator, magnet, coil, *base.load(), volume)?;

    // Y0 that gives the target acceleration at the resonance it excites.
    let mut y0 = accel / resonator.omega_n().powi(2);
    let mut best = None;
    for _ in 0..60 {
        let ex = Excitation::new(y0, 1.0)?;
        let opt = optimal_load(&device, &ex, SCALING_LOAD_RANGE, search)?;
        let w = 2.0 * PI * opt.point.f;
        let next = accel / (w * w);
        let done = ((next - y0) / y0).abs() < 1e-10;
        y0 = next;
        best = Some(opt);
        if done {
            break;
        }
    }
    let ex = Excitation::new(y0, 1.0)?;
    let opt = match best {
        Some(_) => optimal_load(&device, &ex, SCALING_LOAD_RANGE, search)?,
        None => unreachable!(),
    };
    let npd = normalized_power_density(
        Power::watts(opt.p_max),
        Volume::cubic_meters(volume),
        y0,
        opt.point.f,
    );
    Ok(ScalingPoint {
        s,
        f_res: opt.point.f,
        y0,
        coupling_k: device.coupling_k(),
        r_coil: device.r_coil(),
        r_opt: opt.r_opt,
        p_max: opt.p_max,
        volume,
        npd,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThicknessPoint {
    pub track_thickness: f64,
    pub r_coil: f64,
    pub r_opt: f64,
    pub p_max: f64,
}

pub const THICKNESS_BOUNDS: (f64, f64) = (5e-6, 100e-6);

/// Maximum deliverable power as the coil tracks are thickened.
pub fn thickness_projection(
    device: &DeviceParams,
    excitation: &Excitation,
    thicknesses: &[f64],
    search: &LoadSearch,
) -> Result<Vec<ThicknessPoint>> {
    let (lo, hi) = THICKNESS_BOUNDS;
    if let Some(t) = thicknesses.iter().find(|t| !(**t >= lo && **t <= hi)) {
        return Err(Error::InvalidParameter {
            name: "track_thickness",
            value: *t,
            reason: "outside the plausible 5-100 um range",
        });
    }
    let inner = LoadSearch {
        exec: Execution::Sequential,
        ..*search
    };
    exec::map_ordered(search.exec, thicknesses, |&t| {
        let coil = device.coil().with_track_thickness(t)?;
        let dev = device.with_coil_resistance_from(coil)?;
        let opt = optimal_load(&dev, excitation, (1e-2, 1e8), &inner)?;
        Ok(ThicknessPoint {
            track_thickness: t,
            r_coil: dev.r_coil(),
            r_opt: opt.r_opt,
            p_max: opt.p_max,
        })
    })
    .into_iter()
    .collect()
}
