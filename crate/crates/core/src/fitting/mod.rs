//! Parameter identification from measured curves.
//!
//! Free parameters are searched in log space inside user bounds with a
//! multi-start Nelder-Mead. Start points are drawn from a seeded ChaCha
//! stream in order, so a run with more starts always contains the starts
//! of a shorter run and can only match or improve its best result.

mod calibration;
mod simplex;

pub use calibration::{
    calibrate_paper_device, calibrate_paper_device_detailed, calibration_targets, Calibration,
    CalibrationTargets, DEFAULT_K_CUB,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::device::{DeviceParams, Excitation};
use crate::electrical::{self, Branch, LoadSearch, Tracking};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::harmonic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitParameter {
    ZetaP,
    CouplingK,
    KCub,
}

impl FitParameter {
    pub fn name(&self) -> &'static str {
        match self {
            FitParameter::ZetaP => "zeta_p",
            FitParameter::CouplingK => "coupling_k",
            FitParameter::KCub => "k_cub",
        }
    }

    pub fn get(&self, device: &DeviceParams) -> f64 {
        match self {
            FitParameter::ZetaP => device.resonator().zeta_p(),
            FitParameter::CouplingK => device.coupling_k(),
            FitParameter::KCub => device.resonator().k_cub(),
        }
    }

    pub fn apply(&self, device: &DeviceParams, value: f64) -> Result<DeviceParams> {
        match self {
            FitParameter::ZetaP => Ok(device.with_resonator(device.resonator().with_zeta_p(value)?)),
            FitParameter::CouplingK => device.with_coupling(value),
            FitParameter::KCub => Ok(device.with_resonator(device.resonator().with_k_cub(value)?)),
        }
    }
}

/// Search interval for one free parameter. Both ends must be positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterBound {
    pub param: FitParameter,
    pub lower: f64,
    pub upper: f64,
}

impl ParameterBound {
    pub fn new(param: FitParameter, lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0 && upper > lower && upper.is_finite()) {
            return Err(Error::Fit(format!(
                "bounds for {} must satisfy 0 < lower < upper, got [{lower}, {upper}]",
                param.name()
            )));
        }
        Ok(Self { param, lower, upper })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    /// Load power (W) against load resistance (ohm).
    PowerVsLoad,
    /// RMS load voltage (V) against excitation frequency (Hz).
    VoltageVsFrequency,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredCurve {
    kind: CurveKind,
    x: Vec<f64>,
    y: Vec<f64>,
    y0: f64,
    f_hz: f64,
    tracking: Tracking,
    branch: Branch,
}

impl MeasuredCurve {
    fn checked(kind: CurveKind, x: Vec<f64>, y: Vec<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
        if x.len() != y.len() {
            return Err(Error::Fit(format!("{} x values but {} y values", x.len(), y.len())));
        }
        if x.len() < 5 {
            return Err(Error::Fit(format!("need at least 5 points, got {}", x.len())));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Fit("abscissae must be strictly increasing".into()));
        }
        if x.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Fit("abscissae must be finite and > 0".into()));
        }
        if y.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Fit("measured values must be finite and >= 0".into()));
        }
        let _ = kind;
        Ok((x, y))
    }

    /// Power delivered to each load in `r_load` under `excitation`. With
    /// `Tracking::Resonance` the excitation frequency is ignored and each
    /// point is taken at the resonance peak.
    pub fn power_vs_load(
        r_load: Vec<f64>,
        power: Vec<f64>,
        excitation: Excitation,
        tracking: Tracking,
    ) -> Result<Self> {
        let (x, y) = Self::checked(CurveKind::PowerVsLoad, r_load, power)?;
        Ok(Self {
            kind: CurveKind::PowerVsLoad,
            x,
            y,
            y0: excitation.amplitude_y0(),
            f_hz: excitation.frequency_hz(),
            tracking,
            branch: Branch::Up,
        })
    }

    /// RMS load voltage at each frequency, on the branch a sweep in the
    /// given direction would follow. The load is the template device's.
    pub fn voltage_vs_frequency(freqs: Vec<f64>, v_rms: Vec<f64>, y0: f64, branch: Branch) -> Result<Self> {
        let (x, y) = Self::checked(CurveKind::VoltageVsFrequency, freqs, v_rms)?;
        Ok(Self {
            kind: CurveKind::VoltageVsFrequency,
            x,
            y,
            y0,
            f_hz: 0.0,
            tracking: Tracking::Fixed,
            branch,
        })
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }
    pub fn x(&self) -> &[f64] {
        &self.x
    }
    pub fn y(&self) -> &[f64] {
        &self.y
    }
    pub fn len(&self) -> usize {
        self.x.len()
    }
    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Model prediction at each abscissa of `curve`.
pub fn model_curve(curve: &MeasuredCurve, device: &DeviceParams) -> Result<Vec<f64>> {
    match curve.kind {
        CurveKind::PowerVsLoad => {
            let ex = Excitation::new(curve.y0, curve.f_hz)?;
            let search = LoadSearch {
                tracking: curve.tracking,
                branch: curve.branch,
                exec: Execution::Sequential,
            };
            Ok(electrical::load_scan(device, &ex, &curve.x, &search)?
                .into_iter()
                .map(|p| p.p_load)
                .collect())
        }
        CurveKind::VoltageVsFrequency => curve
            .x
            .iter()
            .map(|&f| {
                let point = harmonic::ResponsePoint {
                    f,
                    roots: harmonic::response_amplitudes(device, curve.y0, f)?,
                };
                let z = match curve.branch {
                    Branch::Up => point.largest_stable(),
                    Branch::Down => point.smallest_stable(),
                }
                .unwrap_or(0.0);
                Ok(electrical::output_voltage(device, z, f))
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Largest RMS relative residual accepted as a converged fit.
    pub residual_threshold: f64,
    pub exec: Execution,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            seed: 42,
            max_iter: 2000,
            residual_threshold: 0.1,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointResidual {
    pub x: f64,
    pub measured: f64,
    pub model: f64,
    /// `(model - measured) / measured`, with a floor on the denominator.
    pub relative: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartOutcome {
    pub index: usize,
    pub ssr: f64,
    pub iterations: usize,
    pub stalled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// Best values found, in the order the bounds were given. Empty when
    /// the data carried no information and no search was run.
    pub params: Vec<(FitParameter, f64)>,
    /// Sum of squared relative residuals at the best point.
    pub ssr: f64,
    pub rms_relative: f64,
    pub iterations: usize,
    pub converged: bool,
    pub at_bound: Vec<FitParameter>,
    pub residuals: Vec<PointResidual>,
    pub starts: Vec<StartOutcome>,
    pub message: String,
}

impl FitReport {
    pub fn value(&self, param: FitParameter) -> Option<f64> {
        self.params.iter().find(|(p, _)| *p == param).map(|(_, v)| *v)
    }
}

/// Start points in log space, drawn sequentially from one seeded stream.
pub(crate) fn start_points(seed: u64, count: usize, lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| lo.iter().zip(hi).map(|(l, h)| rng.gen_range(*l..=*h)).collect())
        .collect()
}

pub(crate) struct MultiStart {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub stalled: bool,
    pub starts: Vec<StartOutcome>,
}

/// Runs one bounded simplex per start and keeps the lowest objective,
/// ties going to the earliest start.
pub(crate) fn multistart<F>(objective: F, lo: &[f64], hi: &[f64], opts: &FitOptions) -> MultiStart
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let simplex_opts = simplex::SimplexOptions {
        max_iter: opts.max_iter,
        ..Default::default()
    };
    let starts = start_points(opts.seed, opts.starts.max(1), lo, hi);
    let runs = exec::map_ordered(opts.exec, &starts, |x0| {
        simplex::minimize(&objective, x0, lo, hi, &simplex_opts)
    });
    let outcomes = runs
        .iter()
        .enumerate()
        .map(|(index, r)| StartOutcome {
            index,
            ssr: r.f,
            iterations: r.iterations,
            stalled: r.stalled,
        })
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.f < a.f { b } else { a })
        .expect("at least one start");
    MultiStart {
        x: best.x,
        f: best.f,
        iterations: best.iterations,
        stalled: best.stalled,
        starts: outcomes,
    }
}

fn residuals(curve: &MeasuredCurve, model: &[f64]) -> Vec<PointResidual> {
    let floor = 1e-9 * curve.y.iter().cloned().fold(0.0, f64::max);
    curve
        .x
        .iter()
        .zip(&curve.y)
        .zip(model)
        .map(|((&x, &measured), &model)| PointResidual {
            x,
            measured,
            model,
            relative: (model - measured) / measured.max(floor),
        })
        .collect()
}

/// Fits the parameters named in `bounds` to `curve`, holding every other
/// parameter of `template` fixed.
pub fn fit_parameters(
    curve: &MeasuredCurve,
    template: &DeviceParams,
    bounds: &[ParameterBound],
    opts: &FitOptions,
) -> Result<FitReport> {
    if bounds.is_empty() {
        return Err(Error::Fit("no free parameters".into()));
    }
    for (i, b) in bounds.iter().enumerate() {
        ParameterBound::new(b.param, b.lower, b.upper)?;
        if bounds[..i].iter().any(|o| o.param == b.param) {
            return Err(Error::Fit(format!("{} listed twice", b.param.name())));
        }
    }
    if curve.y.iter().all(|v| *v == 0.0) {
        return Ok(FitReport {
            params: Vec::new(),
            ssr: f64::NAN,
            rms_relative: f64::NAN,
            iterations: 0,
            converged: false,
            at_bound: Vec::new(),
            residuals: Vec::new(),
            starts: Vec::new(),
            message: "measured curve is identically zero; parameters are not identifiable".into(),
        });
    }

    let lo: Vec<f64> = bounds.iter().map(|b| b.lower.ln()).collect();
    let hi: Vec<f64> = bounds.iter().map(|b| b.upper.ln()).collect();
    let build = |x: &[f64]| -> Result<DeviceParams> {
        bounds
            .iter()
            .zip(x)
            .try_fold(*template, |d, (b, v)| b.param.apply(&d, v.exp()))
    };
    let objective = |x: &[f64]| -> f64 {
        build(x)
            .and_then(|d| model_curve(curve, &d))
            .map(|m| residuals(curve, &m).iter().map(|r| r.relative * r.relative).sum())
            .unwrap_or(f64::INFINITY)
    };

    let best = multistart(objective, &lo, &hi, opts);
    let device = build(&best.x)?;
    let model = model_curve(curve, &device)?;
    let res = residuals(curve, &model);
    let rms_relative = (best.f / res.len() as f64).sqrt();
    let at_bound: Vec<FitParameter> = bounds
        .iter()
        .zip(&best.x)
        .zip(lo.iter().zip(&hi))
        .filter(|((_, x), (l, h))| (**x - **l).min(**h - **x) <= 1e-6 * (**h - **l))
        .map(|((b, _), _)| b.param)
        .collect();

    let mut problems = Vec::new();
    if !best.stalled {
        problems.push(format!("iteration cap {} reached", opts.max_iter));
    }
    if !at_bound.is_empty() {
        let names: Vec<_> = at_bound.iter().map(|p| p.name()).collect();
        problems.push(format!("at search bound: {}", names.join(", ")));
    }
    if !(rms_relative <= opts.residual_threshold) {
        problems.push(format!(
            "rms relative residual {rms_relative:.3e} above threshold {:.3e}",
            opts.residual_threshold
        ));
    }
    let converged = problems.is_empty();
    Ok(FitReport {
        params: bounds.iter().zip(&best.x).map(|(b, x)| (b.param, x.exp())).collect(),
        ssr: best.f,
        rms_relative,
        iterations: best.iterations,
        converged,
        at_bound,
        residuals: res,
        starts: best.starts,
        message: if converged {
            "converged".into()
        } else {
            problems.join("; ")
        },
    })
}
