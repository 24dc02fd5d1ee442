//! Flat `key = value` run configuration.
//!
//! Every key carries its unit in its name (`_m`, `_hz`, `_ohm`, ...).
//! Categorical keys end in `_mode`, file paths in `_path`, and lists of
//! numbers in `_list` after the unit. `#` starts a comment. Parsing
//! reports every violation with its line number, not just the first.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::device::{CoilSpec, DeviceParams, ElectricalLoad, MagnetSpec, ResonatorParams};
use crate::dynamics::Direction;
use crate::electrical::{Branch, Tracking};
use crate::error::{Error, Result};
use crate::fitting::{self, FitParameter};
use crate::magnetics;

/// Recognized unit suffixes, longest first so that `_ohm_m` wins over `_m`.
const UNIT_SUFFIXES: &[&str] = &[
    "_hz_per_s",
    "_n_per_m3",
    "_n_per_m",
    "_vs_per_m",
    "_per_m2",
    "_kg_m3",
    "_ohm_m",
    "_count",
    "_ratio",
    "_mode",
    "_path",
    "_ohm",
    "_kg",
    "_m3",
    "_hz",
    "_m",
    "_t",
    "_s",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Number,
    Count,
    List,
    Mode(&'static [&'static str]),
    FreeList,
    Path,
}

const PRESETS: &[&str] = &["prototype", "custom"];
const DIRECTIONS: &[&str] = &["up", "down", "both"];
const TRACKINGS: &[&str] = &["fixed", "resonance"];
const BRANCHES: &[&str] = &["up", "down"];
const SWITCH: &[&str] = &["on", "off"];

const SCHEMA: &[(&str, Kind)] = &[
    ("device_preset_mode", Kind::Mode(PRESETS)),
    ("magnet_side_m", Kind::Number),
    ("magnet_thickness_m", Kind::Number),
    ("magnet_remanence_t", Kind::Number),
    ("magnet_density_kg_m3", Kind::Number),
    ("gap_m", Kind::Number),
    ("coil_turns_count", Kind::Count),
    ("track_width_m", Kind::Number),
    ("track_separation_m", Kind::Number),
    ("track_thickness_m", Kind::Number),
    ("coil_outer_side_m", Kind::Number),
    ("resistivity_ohm_m", Kind::Number),
    ("mass_kg", Kind::Number),
    ("natural_freq_hz", Kind::Number),
    ("k_lin_n_per_m", Kind::Number),
    ("k_cub_n_per_m3", Kind::Number),
    ("zeta_p_ratio", Kind::Number),
    ("gamma_sat_per_m2", Kind::Number),
    ("coupling_k_vs_per_m", Kind::Number),
    ("r_coil_ohm", Kind::Number),
    ("r_load_ohm", Kind::Number),
    ("device_volume_m3", Kind::Number),
    ("y0_m", Kind::Number),
    ("freq_hz", Kind::Number),
    ("f_start_hz", Kind::Number),
    ("f_end_hz", Kind::Number),
    ("freq_points_count", Kind::Count),
    ("backbone_mode", Kind::Mode(SWITCH)),
    ("sweep_rate_hz_per_s", Kind::Number),
    ("bin_width_hz", Kind::Number),
    ("sweep_direction_mode", Kind::Mode(DIRECTIONS)),
    ("r_min_ohm", Kind::Number),
    ("r_max_ohm", Kind::Number),
    ("load_points_count", Kind::Count),
    ("tracking_mode", Kind::Mode(TRACKINGS)),
    ("branch_mode", Kind::Mode(BRANCHES)),
    ("gap_list_m", Kind::List),
    ("scale_list_ratio", Kind::List),
    ("thickness_list_m", Kind::List),
    ("fit_data_path", Kind::Path),
    ("fit_free_mode", Kind::FreeList),
    ("fit_curve_mode", Kind::Mode(&["power_vs_load", "voltage_vs_frequency"])),
    ("zeta_min_ratio", Kind::Number),
    ("zeta_max_ratio", Kind::Number),
    ("coupling_min_vs_per_m", Kind::Number),
    ("coupling_max_vs_per_m", Kind::Number),
    ("k_cub_min_n_per_m3", Kind::Number),
    ("k_cub_max_n_per_m3", Kind::Number),
    ("fit_starts_count", Kind::Count),
    ("fit_tolerance_ratio", Kind::Number),
    ("output_path", Kind::Path),
];

/// Keys that describe the device itself; they conflict with the prototype preset
/// except where noted in [`RunConfig::device`].
const DEVICE_KEYS: &[&str] = &[
    "magnet_side_m",
    "magnet_thickness_m",
    "magnet_remanence_t",
    "magnet_density_kg_m3",
    "gap_m",
    "coil_turns_count",
    "track_width_m",
    "track_separation_m",
    "track_thickness_m",
    "coil_outer_side_m",
    "resistivity_ohm_m",
    "mass_kg",
    "natural_freq_hz",
    "k_lin_n_per_m",
    "k_cub_n_per_m3",
    "zeta_p_ratio",
    "coupling_k_vs_per_m",
    "r_coil_ohm",
];

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Number(f64),
    Count(usize),
    List(Vec<f64>),
    Text(String),
    Free(Vec<FitParameter>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Prototype,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepDirections {
    Up,
    Down,
    Both,
}

impl SweepDirections {
    pub fn directions(&self) -> Vec<Direction> {
        match self {
            SweepDirections::Up => vec![Direction::Up],
            SweepDirections::Down => vec![Direction::Down],
            SweepDirections::Both => vec![Direction::Up, Direction::Down],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveMode {
    PowerVsLoad,
    VoltageVsFrequency,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Preset,
    pub magnet_side: f64,
    pub magnet_thickness: f64,
    pub magnet_remanence: f64,
    pub magnet_density: f64,
    pub gap: f64,
    pub coil_turns: usize,
    pub track_width: f64,
    pub track_separation: f64,
    pub track_thickness: f64,
    pub coil_outer_side: f64,
    pub resistivity: f64,
    pub mass: Option<f64>,
    pub natural_freq_hz: f64,
    pub k_lin: Option<f64>,
    pub k_cub: f64,
    pub zeta_p: f64,
    pub gamma_sat: f64,
    pub coupling_k: Option<f64>,
    pub r_coil: Option<f64>,
    pub r_load: f64,
    pub device_volume: f64,
    pub y0: f64,
    pub freq_hz: f64,
    pub f_start_hz: f64,
    pub f_end_hz: f64,
    pub freq_points: usize,
    pub backbone: bool,
    pub sweep_rate: f64,
    pub bin_width: f64,
    pub sweep_directions: SweepDirections,
    pub r_min: f64,
    pub r_max: f64,
    pub load_points: usize,
    pub tracking: Tracking,
    pub branch: Branch,
    pub gap_list: Vec<f64>,
    pub scale_list: Vec<f64>,
    pub thickness_list: Vec<f64>,
    pub fit_data: Option<String>,
    pub fit_curve: Option<CurveMode>,
    pub fit_free: Vec<FitParameter>,
    pub zeta_bounds: (f64, f64),
    pub coupling_bounds: (f64, f64),
    pub k_cub_bounds: (f64, f64),
    pub fit_starts: usize,
    pub fit_tolerance: f64,
    pub output: Option<String>,
    /// Keys that were set explicitly, with their line numbers.
    explicit: BTreeMap<String, usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let coil = CoilSpec::prototype();
        Self {
            preset: Preset::Custom,
            magnet_side: MagnetSpec::DEFAULT_SIDE,
            magnet_thickness: MagnetSpec::DEFAULT_THICKNESS,
            magnet_remanence: MagnetSpec::DEFAULT_REMANENCE,
            magnet_density: MagnetSpec::DEFAULT_DENSITY,
            gap: MagnetSpec::DEFAULT_GAP,
            coil_turns: coil.n_turns(),
            track_width: coil.track_width(),
            track_separation: coil.track_separation(),
            track_thickness: coil.track_thickness(),
            coil_outer_side: coil.outer_side(),
            resistivity: coil.resistivity(),
            mass: None,
            natural_freq_hz: 344.0,
            k_lin: None,
            k_cub: fitting::DEFAULT_K_CUB,
            zeta_p: 0.008,
            gamma_sat: 0.0,
            coupling_k: None,
            r_coil: None,
            r_load: 1e5,
            device_volume: DeviceParams::PROTOTYPE_VOLUME,
            y0: 5.1e-6,
            freq_hz: 344.0,
            f_start_hz: 320.0,
            f_end_hz: 360.0,
            freq_points: 401,
            backbone: false,
            sweep_rate: 1.0,
            bin_width: 0.5,
            sweep_directions: SweepDirections::Both,
            r_min: 1e-1,
            r_max: 1e7,
            load_points: 61,
            tracking: Tracking::Resonance,
            branch: Branch::Up,
            gap_list: vec![0.1e-3, 0.2e-3, 0.3e-3, 0.5e-3, 0.75e-3, 1e-3, 1.5e-3, 2e-3, 3e-3, 5e-3],
            scale_list: vec![0.5, 0.7, 1.0, 1.4, 2.0],
            thickness_list: vec![15e-6, 20e-6, 25e-6, 30e-6, 35e-6, 40e-6],
            fit_data: None,
            fit_curve: None,
            fit_free: vec![FitParameter::ZetaP, FitParameter::CouplingK],
            zeta_bounds: (1e-4, 0.1),
            coupling_bounds: (1e-3, 10.0),
            k_cub_bounds: (1e6, 1e12),
            fit_starts: 8,
            fit_tolerance: 0.1,
            output: None,
            explicit: BTreeMap::new(),
        }
    }
}

fn unit_suffix(key: &str) -> Option<&'static str> {
    let stem = key.strip_suffix("_list").unwrap_or(key);
    UNIT_SUFFIXES.iter().copied().find(|s| stem.ends_with(s) && stem.len() > s.len())
}

fn parse_number(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_value(kind: Kind, raw: &str) -> std::result::Result<Value, String> {
    match kind {
        Kind::Number => parse_number(raw).map(Value::Number),
        Kind::Count => raw
            .parse::<usize>()
            .map(Value::Count)
            .map_err(|_| format!("`{raw}` is not a non-negative integer")),
        Kind::List => {
            let items: Vec<&str> = raw.split(',').map(str::trim).collect();
            if items.iter().any(|s| s.is_empty()) {
                return Err("empty list item".into());
            }
            items.into_iter().map(parse_number).collect::<std::result::Result<_, _>>().map(Value::List)
        }
        Kind::Mode(allowed) => {
            if allowed.contains(&raw) {
                Ok(Value::Text(raw.to_string()))
            } else {
                Err(format!("`{raw}` is not one of {}", allowed.join(", ")))
            }
        }
        Kind::FreeList => raw
            .split(',')
            .map(str::trim)
            .map(|s| match s {
                "zeta_p" => Ok(FitParameter::ZetaP),
                "coupling_k" => Ok(FitParameter::CouplingK),
                "k_cub" => Ok(FitParameter::KCub),
                other => Err(format!("`{other}` is not one of zeta_p, coupling_k, k_cub")),
            })
            .collect::<std::result::Result<_, _>>()
            .map(Value::Free),
        Kind::Path => {
            if raw.is_empty() {
                Err("empty path".into())
            } else {
                Ok(Value::Text(raw.to_string()))
            }
        }
    }
}

/// Parses and validates a configuration. Absent keys take their documented
/// defaults. On failure the error lists every problem found.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut issues = Vec::new();
    let mut values: BTreeMap<String, (usize, Value)> = BTreeMap::new();

    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, raw)) = content.split_once('=') else {
            issues.push(format!("line {n}: expected `key = value`, got `{content}`"));
            continue;
        };
        let (key, raw) = (key.trim(), raw.trim());
        let Some(&(_, kind)) = SCHEMA.iter().find(|(k, _)| *k == key) else {
            if unit_suffix(key).is_none() {
                issues.push(format!("line {n}: key `{key}` has no unit suffix (e.g. _m, _hz, _ohm)"));
            } else {
                issues.push(format!("line {n}: unknown key `{key}`"));
            }
            continue;
        };
        if let Some((first, _)) = values.get(key) {
            issues.push(format!("line {n}: duplicate key `{key}` (first set on line {first})"));
            continue;
        }
        match parse_value(kind, raw) {
            Ok(v) => {
                values.insert(key.to_string(), (n, v));
            }
            Err(msg) => issues.push(format!("line {n}: `{key}`: {msg}")),
        }
    }

    let mut cfg = RunConfig::default();
    for (key, (line, value)) in &values {
        cfg.explicit.insert(key.clone(), *line);
        let num = || match value {
            Value::Number(v) => *v,
            _ => unreachable!("schema kind mismatch"),
        };
        let count = || match value {
            Value::Count(v) => *v,
            _ => unreachable!("schema kind mismatch"),
        };
        let list = || match value {
            Value::List(v) => v.clone(),
            _ => unreachable!("schema kind mismatch"),
        };
        let text = || match value {
            Value::Text(v) => v.clone(),
            _ => unreachable!("schema kind mismatch"),
        };
        match key.as_str() {
            "device_preset_mode" => {
                cfg.preset = if text() == "prototype" { Preset::Prototype } else { Preset::Custom }
            }
            "magnet_side_m" => cfg.magnet_side = num(),
            "magnet_thickness_m" => cfg.magnet_thickness = num(),
            "magnet_remanence_t" => cfg.magnet_remanence = num(),
            "magnet_density_kg_m3" => cfg.magnet_density = num(),
            "gap_m" => cfg.gap = num(),
            "coil_turns_count" => cfg.coil_turns = count(),
            "track_width_m" => cfg.track_width = num(),
            "track_separation_m" => cfg.track_separation = num(),
            "track_thickness_m" => cfg.track_thickness = num(),
            "coil_outer_side_m" => cfg.coil_outer_side = num(),
            "resistivity_ohm_m" => cfg.resistivity = num(),
            "mass_kg" => cfg.mass = Some(num()),
            "natural_freq_hz" => cfg.natural_freq_hz = num(),
            "k_lin_n_per_m" => cfg.k_lin = Some(num()),
            "k_cub_n_per_m3" => cfg.k_cub = num(),
            "zeta_p_ratio" => cfg.zeta_p = num(),
            "gamma_sat_per_m2" => cfg.gamma_sat = num(),
            "coupling_k_vs_per_m" => cfg.coupling_k = Some(num()),
            "r_coil_ohm" => cfg.r_coil = Some(num()),
            "r_load_ohm" => cfg.r_load = num(),
            "device_volume_m3" => cfg.device_volume = num(),
            "y0_m" => cfg.y0 = num(),
            "freq_hz" => cfg.freq_hz = num(),
            "f_start_hz" => cfg.f_start_hz = num(),
            "f_end_hz" => cfg.f_end_hz = num(),
            "freq_points_count" => cfg.freq_points = count(),
            "backbone_mode" => cfg.backbone = text() == "on",
            "sweep_rate_hz_per_s" => cfg.sweep_rate = num(),
            "bin_width_hz" => cfg.bin_width = num(),
            "sweep_direction_mode" => {
                cfg.sweep_directions = match text().as_str() {
                    "up" => SweepDirections::Up,
                    "down" => SweepDirections::Down,
                    _ => SweepDirections::Both,
                }
            }
            "r_min_ohm" => cfg.r_min = num(),
            "r_max_ohm" => cfg.r_max = num(),
            "load_points_count" => cfg.load_points = count(),
            "tracking_mode" => {
                cfg.tracking = if text() == "fixed" { Tracking::Fixed } else { Tracking::Resonance }
            }
            "branch_mode" => cfg.branch = if text() == "down" { Branch::Down } else { Branch::Up },
            "gap_list_m" => cfg.gap_list = list(),
            "scale_list_ratio" => cfg.scale_list = list(),
            "thickness_list_m" => cfg.thickness_list = list(),
            "fit_data_path" => cfg.fit_data = Some(text()),
            "fit_curve_mode" => {
                cfg.fit_curve = Some(if text() == "power_vs_load" {
                    CurveMode::PowerVsLoad
                } else {
                    CurveMode::VoltageVsFrequency
                })
            }
            "fit_free_mode" => {
                if let Value::Free(v) = value {
                    cfg.fit_free = v.clone();
                }
            }
            "zeta_min_ratio" => cfg.zeta_bounds.0 = num(),
            "zeta_max_ratio" => cfg.zeta_bounds.1 = num(),
            "coupling_min_vs_per_m" => cfg.coupling_bounds.0 = num(),
            "coupling_max_vs_per_m" => cfg.coupling_bounds.1 = num(),
            "k_cub_min_n_per_m3" => cfg.k_cub_bounds.0 = num(),
            "k_cub_max_n_per_m3" => cfg.k_cub_bounds.1 = num(),
            "fit_starts_count" => cfg.fit_starts = count(),
            "fit_tolerance_ratio" => cfg.fit_tolerance = num(),
            "output_path" => cfg.output = Some(text()),
            other => unreachable!("key `{other}` in schema but not mapped"),
        }
    }

    let line_of = |key: &str| cfg.explicit.get(key).map(|l| format!("line {l}: ")).unwrap_or_default();
    if cfg.preset == Preset::Prototype {
        for key in DEVICE_KEYS {
            if cfg.explicit.contains_key(*key) {
                issues.push(format!(
                    "{}`{key}` conflicts with device_preset_mode = prototype",
                    line_of(key)
                ));
            }
        }
    }
    if cfg.explicit.contains_key("k_lin_n_per_m") && cfg.explicit.contains_key("natural_freq_hz") {
        issues.push(format!(
            "{}set either `k_lin_n_per_m` or `natural_freq_hz`, not both",
            line_of("k_lin_n_per_m")
        ));
    }
    let positive = [
        ("r_load_ohm", cfg.r_load),
        ("device_volume_m3", cfg.device_volume),
        ("freq_hz", cfg.freq_hz),
        ("natural_freq_hz", cfg.natural_freq_hz),
        ("r_min_ohm", cfg.r_min),
        ("r_max_ohm", cfg.r_max),
        ("sweep_rate_hz_per_s", cfg.sweep_rate),
        ("bin_width_hz", cfg.bin_width),
    ];
    for (key, v) in positive {
        if v <= 0.0 {
            issues.push(format!("{}`{key}` must be > 0, got {v}", line_of(key)));
        }
    }
    if cfg.y0 < 0.0 {
        issues.push(format!("{}`y0_m` must be >= 0", line_of("y0_m")));
    }
    if cfg.freq_points < 2 {
        issues.push(format!("{}`freq_points_count` must be >= 2", line_of("freq_points_count")));
    }
    if cfg.load_points < 2 {
        issues.push(format!("{}`load_points_count` must be >= 2", line_of("load_points_count")));
    }
    if cfg.fit_starts < 1 {
        issues.push(format!("{}`fit_starts_count` must be >= 1", line_of("fit_starts_count")));
    }

    if issues.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(issues.join("\n")))
    }
}

impl RunConfig {
    /// Overrides the load as if `r_load_ohm` had been set in the file.
    pub fn set_r_load(&mut self, r_load: f64) {
        self.r_load = r_load;
        self.explicit.entry("r_load_ohm".into()).or_insert(0);
    }

    pub fn is_explicit(&self, key: &str) -> bool {
        self.explicit.contains_key(key)
    }

    pub fn magnet(&self) -> Result<MagnetSpec> {
        MagnetSpec::new(
            self.magnet_side,
            self.magnet_side,
            self.magnet_thickness,
            self.magnet_remanence,
            self.magnet_density,
            self.gap,
        )
    }

    pub fn coil(&self) -> Result<CoilSpec> {
        CoilSpec::new(
            self.coil_turns,
            self.track_width,
            self.track_thickness,
            self.track_separation,
            self.coil_outer_side,
            self.resistivity,
        )
    }

    /// The device described by this configuration, at `r_load_ohm`.
    ///
    /// The prototype preset returns the calibrated prototype; only the load,
    /// volume and saturation keys apply on top of it.
    pub fn device(&self) -> Result<DeviceParams> {
        let device = match self.preset {
            Preset::Prototype => {
                let d = fitting::calibrate_paper_device()?;
                let r = d.resonator().with_gamma_sat(self.gamma_sat)?;
                d.with_resonator(r)
            }
            Preset::Custom => {
                let magnet = self.magnet()?;
                let coil = self.coil()?;
                let mass = self.mass.unwrap_or_else(|| magnet.mass());
                let k_lin = self
                    .k_lin
                    .unwrap_or_else(|| mass * (2.0 * PI * self.natural_freq_hz).powi(2));
                let resonator = ResonatorParams::new(mass, k_lin, self.k_cub, self.zeta_p, self.gamma_sat)?;
                let layout = magnetics::build_layout(&coil)?;
                let r_coil = match self.r_coil {
                    Some(r) => r,
                    None => magnetics::coil_resistance(&layout, coil.resistivity()),
                };
                let k = match self.coupling_k {
                    Some(k) => k,
                    None => {
                        let source = magnetics::CuboidMagnet::from_spec(&magnet);
                        magnetics::transduction_coefficient(&source, &layout, magnet.gap_z0())?
                    }
                };
                DeviceParams::new(
                    resonator,
                    magnet,
                    coil,
                    ElectricalLoad::new(self.r_load)?,
                    k,
                    r_coil,
                    self.device_volume,
                )?
            }
        };
        let device = if self.preset == Preset::Custom || self.is_explicit("r_load_ohm") {
            device.with_load(self.r_load)?
        } else {
            device
        };
        if self.is_explicit("device_volume_m3") {
            device.with_volume(self.device_volume)
        } else {
            Ok(device)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn issues(text: &str) -> String {
        match parse_config(text) {
            Err(Error::Config(msg)) => msg,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn empty_config_takes_defaults() {
        let cfg = parse_config("# nothing\n\n").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.y0, 5.1e-6);
        assert_eq!(cfg.scale_list, vec![0.5, 0.7, 1.0, 1.4, 2.0]);
    }

    #[test]
    fn values_and_comments() {
        let cfg = parse_config(
            "y0_m = 2e-6   # excitation\nsweep_direction_mode = up\nscale_list_ratio = 1, 2,3\n",
        )
        .unwrap();
        assert_eq!(cfg.y0, 2e-6);
        assert_eq!(cfg.sweep_directions, SweepDirections::Up);
        assert_eq!(cfg.scale_list, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn missing_unit_is_named() {
        let msg = issues("mass = 1e-3\n");
        assert!(msg.contains("line 1") && msg.contains("`mass`") && msg.contains("unit"), "{msg}");
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        let msg = issues("banana_hz = 3\ny0_m = 1e-6\ny0_m = 2e-6\n");
        assert!(msg.contains("line 1: unknown key `banana_hz`"), "{msg}");
        assert!(msg.contains("line 3: duplicate key `y0_m`"), "{msg}");
    }

    #[test]
    fn every_violation_is_reported() {
        let msg = issues("mass = 1\nfreq_hz = inf\ny0_m = nan\nbranch_mode = sideways\nnot a pair\n");
        assert_eq!(msg.lines().count(), 5, "{msg}");
        for n in 1..=5 {
            assert!(msg.contains(&format!("line {n}:")), "{msg}");
        }
    }

    #[test]
    fn preset_conflicts() {
        let msg = issues("device_preset_mode = prototype\nzeta_p_ratio = 0.01\n");
        assert!(msg.contains("line 2") && msg.contains("zeta_p_ratio"), "{msg}");
        assert!(parse_config("device_preset_mode = prototype\nr_load_ohm = 100\n").is_ok());
    }

    #[test]
    fn suffix_detection() {
        assert_eq!(unit_suffix("resistivity_ohm_m"), Some("_ohm_m"));
        assert_eq!(unit_suffix("gap_list_m"), Some("_m"));
        assert_eq!(unit_suffix("mass"), None);
        assert_eq!(unit_suffix("_m"), None);
    }

    #[test]
    fn custom_device_with_explicit_coupling() {
        let cfg = parse_config("coupling_k_vs_per_m = 0.5\nr_coil_ohm = 80\nr_load_ohm = 200\n").unwrap();
        let d = cfg.device().unwrap();
        assert_eq!((d.coupling_k(), d.r_coil(), d.r_load()), (0.5, 80.0, 200.0));
        assert!((d.resonator().omega_n() / (2.0 * PI) - 344.0).abs() < 1e-9);
    }
}
