//! Command dispatch. Each command writes CSV files with unit-named headers
//! into the output directory, plus a `key = value` summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{CurveMode, RunConfig};
use crate::device::Excitation;
use crate::dynamics::{self, Direction, SweepResult, SweepSpec};
use crate::electrical::{self, Branch, LoadSearch, Power, Tracking, Volume};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fitting::{self, FitOptions, FitParameter, MeasuredCurve, ParameterBound};
use crate::harmonic::{self, Stability};
use crate::magnetics;

pub const COMMANDS: &[&str] = &[
    "coil",
    "freq-response",
    "sweep",
    "optimal-load",
    "fit",
    "scaling",
    "project-thickness",
    "reproduce-paper",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Coil,
    FreqResponse,
    Sweep,
    OptimalLoad,
    Fit,
    Scaling,
    ProjectThickness,
    ReproducePaper,
}

impl std::str::FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "coil" => Command::Coil,
            "freq-response" => Command::FreqResponse,
            "sweep" => Command::Sweep,
            "optimal-load" => Command::OptimalLoad,
            "fit" => Command::Fit,
            "scaling" => Command::Scaling,
            "project-thickness" => Command::ProjectThickness,
            "reproduce-paper" => Command::ReproducePaper,
            other => {
                return Err(Error::Config(format!(
                    "unknown command `{other}`; expected one of: {}",
                    COMMANDS.join(", ")
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
            seed: 42,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Process exit code for an error: 2 for configuration problems, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_config() {
        2
    } else {
        1
    }
}

struct Summary(String);

impl Summary {
    fn new() -> Self {
        Self(String::new())
    }
    fn num(&mut self, key: &str, v: f64) -> &mut Self {
        let _ = writeln!(self.0, "{key} = {v:e}");
        self
    }
    fn opt(&mut self, key: &str, v: Option<f64>) -> &mut Self {
        match v {
            Some(v) => self.num(key, v),
            None => self.text(key, "none"),
        }
    }
    fn int(&mut self, key: &str, v: usize) -> &mut Self {
        let _ = writeln!(self.0, "{key} = {v}");
        self
    }
    fn text(&mut self, key: &str, v: &str) -> &mut Self {
        let _ = writeln!(self.0, "{key} = {v}");
        self
    }
}

struct Outputs<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl<'a> Outputs<'a> {
    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
        self.files.push(path);
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body)?;
        self.files.push(path);
        Ok(())
    }
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

pub fn run_command(command: Command, cfg: &RunConfig, opts: &RunOptions) -> Result<CommandOutput> {
    fs::create_dir_all(&opts.out_dir)?;
    let mut out = Outputs {
        dir: &opts.out_dir,
        files: Vec::new(),
    };
    let summary = match command {
        Command::Coil => coil(cfg, &mut out)?,
        Command::FreqResponse => freq_response(cfg, opts, &mut out)?,
        Command::Sweep => sweep(cfg, opts, &mut out)?,
        Command::OptimalLoad => optimal_load(cfg, opts, &mut out)?,
        Command::Fit => fit(cfg, opts, &mut out)?,
        Command::Scaling => scaling(cfg, opts, &mut out)?,
        Command::ProjectThickness => thickness(cfg, opts, &mut out)?,
        Command::ReproducePaper => reproduce(cfg, opts, &mut out)?,
    };
    let name = match command {
        Command::Coil => "coil",
        Command::FreqResponse => "freq_response",
        Command::Sweep => "sweep",
        Command::OptimalLoad => "optimal_load",
        Command::Fit => "fit",
        Command::Scaling => "scaling",
        Command::ProjectThickness => "thickness",
        Command::ReproducePaper => "reproduce",
    };
    out.text(&format!("{name}_summary.txt"), &summary)?;
    Ok(CommandOutput {
        files: out.files,
        summary,
    })
}

fn coil(cfg: &RunConfig, out: &mut Outputs) -> Result<String> {
    let magnet = cfg.magnet()?;
    let coil = cfg.coil()?;
    let layout = magnetics::build_layout(&coil)?;
    let r_coil = magnetics::coil_resistance(&layout, coil.resistivity());
    let source = magnetics::CuboidMagnet::from_spec(&magnet);
    let mut rows = Vec::new();
    for &gap in &cfg.gap_list {
        let phi = magnetics::flux_linkage(&source, &layout, gap)?;
        let k = magnetics::transduction_coefficient(&source, &layout, gap)?;
        rows.push(vec![fmt(gap), fmt(phi), fmt(k), fmt(r_coil)]);
    }
    out.csv("coil.csv", &["z_gap_m", "flux_wb", "k_vspm", "r_coil_ohm"], rows)?;
    let k = magnetics::transduction_coefficient(&source, &layout, magnet.gap_z0())?;
    let innermost = layout.turns.last().map(|t| t.side_length).unwrap_or(0.0);
    let mut s = Summary::new();
    s.int("n_turns", layout.turns.len())
        .num("innermost_side_m", innermost)
        .num("track_length_m", layout.total_track_length)
        .num("r_coil_ohm", r_coil)
        .num("gap_m", magnet.gap_z0())
        .num("k_vspm", k);
    Ok(s.0)
}

fn freq_grid(cfg: &RunConfig) -> Result<Vec<f64>> {
    let (a, b) = (cfg.f_start_hz.min(cfg.f_end_hz), cfg.f_start_hz.max(cfg.f_end_hz));
    if !(a > 0.0 && b > a) {
        return Err(Error::SweepRange(format!(
            "frequency range {} -> {} Hz is empty",
            cfg.f_start_hz, cfg.f_end_hz
        )));
    }
    let n = cfg.freq_points;
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

fn freq_response(cfg: &RunConfig, opts: &RunOptions, out: &mut Outputs) -> Result<String> {
    let device = cfg.device()?;
    let grid = freq_grid(cfg)?;
    let resp = harmonic::frequency_response(&device, cfg.y0, &grid, opts.exec)?;
    let rows = resp.points.iter().map(|p| {
        let mut row = vec![fmt(p.f)];
        for i in 0..3 {
            row.push(p.roots.get(i).map(|r| fmt(r.amplitude)).unwrap_or_default());
        }
        for i in 0..3 {
            row.push(
                p.roots
                    .get(i)
                    .map(|r| if r.stability == Stability::Stable { "stable" } else { "unstable" }.to_string())
                    .unwrap_or_default(),
            );
        }
        row
    });
    out.csv(
        "freq_response.csv",
        &["f_hz", "z_root1_m", "z_root2_m", "z_root3_m", "stability1", "stability2", "stability3"],
        rows,
    )?;
    let peak = harmonic::resonance_peak(&device, cfg.y0)?;
    if cfg.backbone {
        let z_max = peak
            .map(|p| 1.2 * p.amplitude)
            .unwrap_or_else(|| resp.points.iter().filter_map(|p| p.largest_stable()).fold(0.0, f64::max));
        let zs: Vec<f64> = (0..=200).map(|i| z_max * i as f64 / 200.0).collect();
        let rows = harmonic::backbone(&device, &zs)
            .into_iter()
            .map(|b| vec![fmt(b.amplitude), fmt(b.f_peak)]);
        out.csv("backbone.csv", &["z_amp_m", "f_hz"], rows)?;
    }
    let jumps = harmonic::jump_frequencies(&device, cfg.y0)?;
    let mut s = Summary::new();
    s.num("y0_m", cfg.y0)
        .num("r_load_ohm", device.r_load())
        .num("natural_freq_hz", device.resonator().omega_n() / (2.0 * std::f64::consts::PI))
        .num("nonlinearity_index", harmonic::nonlinearity_index(&device, cfg.y0)?)
        .opt("peak_freq_hz", peak.map(|p| p.f_peak))
        .opt("peak_amp_m", peak.map(|p| p.amplitude))
        .opt("up_sweep_jump_hz", jumps.up_sweep)
        .opt("down_sweep_jump_hz", jumps.down_sweep);
    if let Some(d) = &jumps.diagnostic {
        s.text("jump_diagnostic", d);
    }
    Ok(s.0)
}

fn sweep_rows(r: &SweepResult) -> Vec<Vec<String>> {
    r.bins
        .iter()
        .map(|b| vec![fmt(b.f), fmt(b.z_amp), fmt(b.v_out_rms)])
        .collect()
}

const SWEEP_HEADER: &[&str] = &["f_hz", "z_amp_m", "v_rms_v"];

fn sweep_spec(cfg: &RunConfig, direction: Direction, y0: f64) -> SweepSpec {
    let (lo, hi) = (cfg.f_start_hz.min(cfg.f_end_hz), cfg.f_start_hz.max(cfg.f_end_hz));
    SweepSpec {
        rate: cfg.sweep_rate,
        bin_width: cfg.bin_width,
        ..SweepSpec::between(lo, hi, direction, y0)
    }
}

fn sweep(cfg: &RunConfig, opts: &RunOptions, out: &mut Outputs) -> Result<String> {
    if cfg.f_start_hz == cfg.f_end_hz {
        return Err(Error::SweepRange(format!(
            "f_start_hz equals f_end_hz ({} Hz); a sweep needs a non-empty range",
            cfg.f_start_hz
        )));
    }
    let device = cfg.device()?;
    let dirs = cfg.sweep_directions.directions();
    let jobs: Vec<_> = dirs.iter().map(|d| (device, sweep_spec(cfg, *d, cfg.y0))).collect();
    let results = dynamics::sweep_batch(&jobs, opts.exec)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut s = Summary::new();
    s.num("y0_m", cfg.y0).num("r_load_ohm", device.r_load()).num("rate_hz_per_s", cfg.sweep_rate);
    for r in &results {
        out.csv(&format!("sweep_{}.csv", r.direction.as_str()), SWEEP_HEADER, sweep_rows(r))?;
        if let Some(p) = r.peak() {
            let tag = r.direction.as_str();
            s.num(&format!("{tag}_peak_freq_hz"), p.f)
                .num(&format!("{tag}_peak_amp_m"), p.z_amp)
                .num(&format!("{tag}_peak_v_rms_v"), p.v_out_rms)
                .int(&format!("{tag}_jump_count"), dynamics::find_jumps(&r.bins).len());
        }
    }
    if let [up, down] = &results[..] {
        let h = dynamics::hysteresis_metrics(up, down)?;
        s.opt("up_sweep_jump_hz", h.up_sweep_jump_hz)
            .opt("down_sweep_jump_hz", h.down_sweep_jump_hz)
            .num("hysteresis_width_hz", h.width_hz);
    }
    Ok(s.0)
}

fn search(cfg: &RunConfig, opts: &RunOptions) -> LoadSearch {
    LoadSearch {
        tracking: cfg.tracking,
        branch: cfg.branch,
        exec: opts.exec,
    }
}

fn optimal_load(cfg: &RunConfig, opts: &RunOptions, out: &mut Outputs) -> Result<String> {
    let device = cfg.device()?;
    let ex = Excitation::new(cfg.y0, cfg.freq_hz)?;
    let search = search(cfg, opts);
    let grid = electrical::log_space(cfg.r_min, cfg.r_max, cfg.load_points);
    let scan = electrical::load_scan(&device, &ex, &grid, &search)?;
    out.csv(
        "load_scan.csv",
        &["r_load_ohm", "f_hz", "z_amp_m", "v_rms_v", "p_load_w"],
        scan.iter()
            .map(|p| vec![fmt(p.r_load), fmt(p.f), fmt(p.z_amp), fmt(p.v_rms), fmt(p.p_load)]),
    )?;
    let opt = electrical::optimal_load(&device, &ex, (cfg.r_min, cfg.r_max), &search)?;
    let volume = Volume::cubic_meters(device.device_volume());
    let mut s = Summary::new();
    s.num("r_opt_ohm", opt.r_opt)
        .num("p_max_w", opt.p_max)
        .num("f_hz", opt.point.f)
        .num("v_rms_v", opt.point.v_rms)
        .num("power_density_w_per_cm3", electrical::power_density(Power::watts(opt.p_max), volume))
        .num(
            "npd_w_per_cm3_g2",
            electrical::normalized_power_density(Power::watts(opt.p_max), volume, cfg.y0, opt.point.f),
        )
        .text("used_dense_fallback", if opt.used_fallback { "true" } else { "false" });
    Ok(s.0)
}

/// Reads a measured curve. The header selects the curve kind.
/// Curve kind and SI scale factors for a two-column header.
fn curve_columns(x: &str, y: &str) -> Option<(CurveMode, f64, f64)> {
    let (kind, x_scale) = match x {
        "r_load_ohm" => (CurveMode::PowerVsLoad, 1.0),
        "r_load_kohm" => (CurveMode::PowerVsLoad, 1e3),
        "f_hz" => (CurveMode::VoltageVsFrequency, 1.0),
        _ => return None,
    };
    let y_scale = match (kind, y) {
        (CurveMode::PowerVsLoad, "p_load_w") => 1.0,
        (CurveMode::PowerVsLoad, "p_load_mw") => 1e-3,
        (CurveMode::PowerVsLoad, "p_load_uw") => 1e-6,
        (CurveMode::VoltageVsFrequency, "v_rms_v") => 1.0,
        (CurveMode::VoltageVsFrequency, "v_rms_mv") => 1e-3,
        _ => return None,
    };
    Some((kind, x_scale, y_scale))
}

pub fn read_curve(path: &Path, cfg: &RunConfig) -> Result<MeasuredCurve> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let columns = match &header[..] {
        [x, y] => curve_columns(x, y),
        _ => None,
    };
    let (kind, x_scale, y_scale) = columns.ok_or_else(|| {
        Error::Config(format!(
            "{}: header must be `r_load_<ohm|kohm>,p_load_<w|mw|uw>` or `f_hz,v_rms_<v|mv>`, got `{}`",
            path.display(),
            header.join(",")
        ))
    })?;
    if let Some(expected) = cfg.fit_curve {
        if expected != kind {
            return Err(Error::Config(format!(
                "{}: header does not match fit_curve_mode",
                path.display()
            )));
        }
    }
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let cell = |j: usize| -> Result<f64> {
            rec.get(j)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| Error::Config(format!("{}: row {} column {} is not a number", path.display(), i + 2, j + 1)))
        };
        x.push(cell(0)? * x_scale);
        y.push(cell(1)? * y_scale);
    }
    match kind {
        CurveMode::PowerVsLoad => {
            MeasuredCurve::power_vs_load(x, y, Excitation::new(cfg.y0, cfg.freq_hz)?, cfg.tracking)
        }
        CurveMode::VoltageVsFrequency => MeasuredCurve::voltage_vs_frequency(x, y, cfg.y0, cfg.branch),
    }
}

fn fit(cfg: &RunConfig, opts: &RunOptions, out: &mut Outputs) -> Result<String> {
    let path = cfg
        .fit_data
        .as_ref()
        .ok_or_else(|| Error::Config("`fit` needs `fit_data_path`".into()))?;
    let curve = read_curve(Path::new(path), cfg)?;
    let template = cfg.device()?;
    let bounds = cfg
        .fit_free
        .iter()
        .map(|p| {
            let (lo, hi) = match p {
                FitParameter::ZetaP => cfg.zeta_bounds,
                FitParameter::CouplingK => cfg.coupling_bounds,
                FitParameter::KCub => cfg.k_cub_bounds,
            };
            ParameterBound::new(*p, lo, hi).map_err(|e| Error::Config(e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let fit_opts = FitOptions {
        starts: cfg.fit_starts,
        seed: opts.seed,
        residual_threshold: cfg.fit_tolerance,
        exec: opts.exec,
        ..FitOptions::default()
    };
    let report = fitting::fit_parameters(&curve, &template, &bounds, &fit_opts)?;
    let (xh, yh) = match curve.kind() {
        fitting::CurveKind::PowerVsLoad => ("r_load_ohm", "p_load"),
        fitting::CurveKind::VoltageVsFrequency => ("f_hz", "v_rms"),
    };
    let unit = if yh == "p_load" { "w" } else { "v" };
    let measured = format!("{yh}_measured_{unit}");
    let model = format!("{yh}_model_{unit}");
    out.csv(
        "fit_residuals.csv",
        &[xh, &measured, &model, "relative_residual_ratio"],
        report
            .residuals
            .iter()
            .map(|r| vec![fmt(r.x), fmt(r.measured), fmt(r.model), fmt(r.relative)]),
    )?;
    let mut s = Summary::new();
    for (p, v) in &report.params {
        s.num(p.name(), *v);
    }
    s.text("converged", if report.converged { "true" } else { "false" })
        .num("ssr", report.ssr)
        .num("rms_relative_residual", report.rms_relative)
        .int("iterations", report.iterations)
        .int("starts", report.starts.len())
        .int("seed", opts.seed as usize)
        .text("message", &report.message);
    Ok(s.0)
}

fn scaling(cfg: &RunConfig, opts: &RunOptions, out: &mut Outputs) -> Result<String> {
    let device = cfg.device()?;
    let report = electrical::scaling_study(&device, cfg.y0, &cfg.scale_list, opts.exec)?;
    out.csv(
        "scaling.csv",
        &[
            "s_ratio",
            "f_res_hz",
            "y0_m",
            "k_vspm",
            "r_coil_ohm",
            "r_opt_ohm",
            "p_max_w",
            "volume_m3",
            "npd_w_per_cm3_g2",
        ],
        report.points.iter().map(|p| {
            vec![
                fmt(p.s),
                fmt(p.f_res),
                fmt(p.y0),
                fmt(p.coupling_k),
                fmt(p.r_coil),
                fmt(p.r_opt),
                fmt(p.p_max),
                fmt(p.volume),
                fmt(p.npd),
            ]
        }),
    )?;
    let mut s = Summary::new();
    for (i, a) in report.assumptions.iter().enumerate() {
        s.text(&format!("assumption_{}", i + 1), a);
    }
    s.num("exponent", report.exponent)
        .num("r_squared", report.r_squared)
        .num("residual_rms", report.residual_rms)
        .num("reference_exponent", electrical::REFERENCE_SCALING_EXPONENT);
    Ok(s.0)
}

fn thickness(cfg: &RunConfig, opts: &RunOptions, out: &mut Outputs) -> Result<String> {
    let device = cfg.device()?;
    let ex = Excitation::new(cfg.y0, cfg.freq_hz)?;
    let points = electrical::thickness_projection(&device, &ex, &cfg.thickness_list, &search(cfg, opts))?;
    out.csv(
        "thickness.csv",
        &["track_thickness_m", "r_coil_ohm", "r_opt_ohm", "p_max_w"],
        points
            .iter()
            .map(|p| vec![fmt(p.track_thickness), fmt(p.r_coil), fmt(p.r_opt), fmt(p.p_max)]),
    )?;
    let mut s = Summary::new();
    if let (Some(first), Some(last)) = (points.first(), points.last()) {
        s.num("p_max_first_w", first.p_max)
            .num("p_max_last_w", last.p_max)
            .num("gain_ratio", last.p_max / first.p_max);
    }
    Ok(s.0)
}

/// Amplitude-dependent damping used for the excitation-amplitude sweeps
/// unless `gamma_sat_per_m2` is given.
pub const DEFAULT_SATURATION_PER_M2: f64 = 5.5e6;

/// Reference values the reproduction is compared against.
struct Reference;

impl Reference {
    const P_MAX_W: f64 = 50e-6;
    const V_HIGH_LOAD_V: f64 = 0.180;
    const ZETA_P: f64 = 0.008;
    const F_RES_HZ: f64 = 344.0;
    const POWER_DENSITY_W_PER_CM3: f64 = 40e-6;
    const NPD_BAND: (f64, f64) = (1.6e-6, 3.8e-6);
    const AMPLITUDE_Y0_M: [f64; 5] = [1e-6, 2e-6, 3e-6, 4e-6, 5e-6];
}

fn reproduce(cfg: &RunConfig, opts: &RunOptions, out: &mut Outputs) -> Result<String> {
    let cal = fitting::calibrate_paper_device_detailed(opts.exec)?;
    let t = cal.targets;
    let device = cal.device;

    // Hysteresis sweeps at the calibration excitation.
    let spec = |dir, y0| SweepSpec {
        rate: cfg.sweep_rate,
        bin_width: cfg.bin_width,
        ..SweepSpec::between(t.f_res_hz - 24.0, t.f_res_hz + 16.0, dir, y0)
    };
    let mut jobs = vec![
        (device, spec(Direction::Up, t.y0)),
        (device, spec(Direction::Down, t.y0)),
    ];
    let gamma = if cfg.is_explicit("gamma_sat_per_m2") {
        cfg.gamma_sat
    } else {
        DEFAULT_SATURATION_PER_M2
    };
    let saturating = device.with_resonator(device.resonator().with_gamma_sat(gamma)?);
    for y0 in Reference::AMPLITUDE_Y0_M {
        jobs.push((saturating, spec(Direction::Up, y0)));
    }
    let sweeps = dynamics::sweep_batch(&jobs, opts.exec)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    out.csv("hysteresis_sweep_up.csv", SWEEP_HEADER, sweep_rows(&sweeps[0]))?;
    out.csv("hysteresis_sweep_down.csv", SWEEP_HEADER, sweep_rows(&sweeps[1]))?;
    let h = dynamics::hysteresis_metrics(&sweeps[0], &sweeps[1])?;

    let mut amp_rows = Vec::new();
    let mut amp_peaks = Vec::new();
    for (y0, r) in Reference::AMPLITUDE_Y0_M.iter().zip(&sweeps[2..]) {
        for b in &r.bins {
            amp_rows.push(vec![fmt(*y0), fmt(b.f), fmt(b.z_amp), fmt(b.v_out_rms)]);
        }
        let p = r.peak().expect("non-empty sweep");
        amp_peaks.push(vec![
            fmt(*y0),
            fmt(p.f),
            fmt(p.z_amp),
            fmt(harmonic::backbone_frequency(&saturating, p.z_amp)),
        ]);
    }
    out.csv("amplitude_sweeps.csv", &["y0_m", "f_hz", "z_amp_m", "v_rms_v"], amp_rows)?;
    out.csv(
        "amplitude_peaks.csv",
        &["y0_m", "f_peak_hz", "z_peak_m", "backbone_f_hz"],
        amp_peaks,
    )?;

    // Load dependence at resonance.
    let ex = Excitation::new(t.y0, t.f_res_hz)?;
    let search = LoadSearch {
        tracking: Tracking::Resonance,
        branch: Branch::Up,
        exec: opts.exec,
    };
    let grid = electrical::log_space(cfg.r_min, cfg.r_max, cfg.load_points);
    let scan = electrical::load_scan(&device, &ex, &grid, &search)?;
    out.csv(
        "load_curve.csv",
        &["r_load_ohm", "f_hz", "p_load_w", "v_rms_v"],
        scan.iter().map(|p| vec![fmt(p.r_load), fmt(p.f), fmt(p.p_load), fmt(p.v_rms)]),
    )?;

    let volume = Volume::cubic_meters(device.device_volume());
    let density = electrical::power_density(Power::watts(cal.p_max), volume);
    let npd = electrical::normalized_power_density(Power::watts(cal.p_max), volume, t.y0, cal.f_res_at_opt);
    let thick = electrical::thickness_projection(
        &device,
        &ex,
        &[15e-6, 40e-6],
        &LoadSearch { exec: Execution::Sequential, ..search },
    )?;

    let mut s = Summary::new();
    s.num("zeta_p", cal.zeta_p)
        .num("reference_zeta_p", Reference::ZETA_P)
        .num("coupling_k_vspm", device.coupling_k())
        .num("r_coil_ohm", device.r_coil())
        .num("natural_freq_hz", cal.natural_hz)
        .num("f_res_hz", cal.f_res_at_opt)
        .num("reference_f_res_hz", Reference::F_RES_HZ)
        .num("r_opt_ohm", cal.r_opt)
        .num("p_max_w", cal.p_max)
        .num("reference_p_max_w", Reference::P_MAX_W)
        .num("v_max_rms_v", cal.v_high_load_rms)
        .num("v_max_peak_v", cal.v_high_load_rms * std::f64::consts::SQRT_2)
        .num("reference_v_max_v", Reference::V_HIGH_LOAD_V)
        .num("power_density_w_per_cm3", density)
        .num("reference_power_density_w_per_cm3", Reference::POWER_DENSITY_W_PER_CM3)
        .num("npd_w_per_cm3_g2", npd)
        .num("reference_npd_low_w_per_cm3_g2", Reference::NPD_BAND.0)
        .num("reference_npd_high_w_per_cm3_g2", Reference::NPD_BAND.1)
        .num("f_peak_up_hz", h.f_peak_up)
        .num("f_peak_down_hz", h.f_peak_down)
        .opt("up_sweep_jump_hz", h.up_sweep_jump_hz)
        .opt("down_sweep_jump_hz", h.down_sweep_jump_hz)
        .num("hysteresis_width_hz", h.width_hz)
        .num("v_peak_up_rms_v", h.v_peak_up)
        .num("v_peak_down_rms_v", h.v_peak_down)
        .num("p_max_15um_w", thick[0].p_max)
        .num("p_max_40um_w", thick[1].p_max);
    Ok(s.0)
}
