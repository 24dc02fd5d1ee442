//! Coil geometry, series resistance, magnet flux linkage and the
//! transduction coefficient `K = dPhi/dz`.
//!
//! The magnet field uses the surface-charge model of a uniformly
//! magnetized cuboid: the top and bottom faces carry charge densities
//! `+J/mu0` and `-J/mu0`, and each charged rectangle has a closed-form
//! axial field built from arctangent terms. Turns are treated as
//! filaments along their centerlines and the flux through each square is
//! integrated with composite Gauss-Legendre quadrature.

use std::f64::consts::PI;

use crate::device::{CoilSpec, MagnetSpec};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};

/// One square turn of the spiral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Turn {
    pub side_length: f64,
    /// Height of the turn above the coil reference plane.
    pub z_plane: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoilLayout {
    pub turns: Vec<Turn>,
    pub track_cross_section: f64,
    pub total_track_length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxSample {
    pub z_gap: f64,
    pub flux_linkage: f64,
}

/// Concentric square realization of a spiral: the outermost centerline sits
/// half a track width inside the die edge and every turn steps in by one
/// pitch on each side.
pub fn build_layout(coil: &CoilSpec) -> Result<CoilLayout> {
    let outermost = coil.outer_side() - coil.track_width();
    let step = 2.0 * coil.pitch();
    let mut turns = Vec::with_capacity(coil.n_turns());
    let mut side = outermost;
    for i in 0..coil.n_turns() {
        if side <= 0.0 {
            return Err(Error::Geometry(format!(
                "turn {} of {} has side {:.3e} m; spiral does not fit in {:.3e} m",
                i + 1,
                coil.n_turns(),
                side,
                coil.outer_side()
            )));
        }
        turns.push(Turn {
            side_length: side,
            z_plane: 0.0,
        });
        side -= step;
    }
    let total_track_length = turns.iter().map(|t| 4.0 * t.side_length).sum();
    Ok(CoilLayout {
        turns,
        track_cross_section: coil.track_width() * coil.track_thickness(),
        total_track_length,
    })
}

pub fn coil_resistance(layout: &CoilLayout, resistivity: f64) -> f64 {
    resistivity * layout.total_track_length / layout.track_cross_section
}

/// Anything that can supply the axial field in the coil plane.
pub trait FieldSource: Sync {
    /// `Bz` at lateral position `(x, y)` of the coil plane when the bottom
    /// face of the source sits `gap` above it.
    fn bz_in_plane(&self, x: f64, y: f64, gap: f64) -> f64;

    /// Lateral half-widths `(x, y)` at which the in-plane field has sharp
    /// features; used as quadrature breakpoints.
    fn lateral_edges(&self) -> Option<(f64, f64)> {
        None
    }
}

/// Cuboid magnet centred on the coil axis, magnetized along +z with
/// polarization `J` (tesla). `J` may be zero or negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CuboidMagnet {
    half_a: f64,
    half_b: f64,
    half_c: f64,
    polarization: f64,
}

impl CuboidMagnet {
    pub fn from_spec(spec: &MagnetSpec) -> Self {
        Self::with_polarization(spec, spec.remanence())
    }

    pub fn with_polarization(spec: &MagnetSpec, polarization: f64) -> Self {
        Self {
            half_a: spec.side_a() / 2.0,
            half_b: spec.side_b() / 2.0,
            half_c: spec.thickness() / 2.0,
            polarization,
        }
    }

    pub fn half_thickness(&self) -> f64 {
        self.half_c
    }

    fn contains(&self, x: f64, y: f64, z: f64) -> bool {
        x.abs() <= self.half_a && y.abs() <= self.half_b && z.abs() <= self.half_c
    }

    /// `Bz` in the magnet-centred frame. Caller guarantees the point is
    /// outside the body.
    fn bz_unchecked(&self, x: f64, y: f64, z: f64) -> f64 {
        let u = (-self.half_a - x, self.half_a - x);
        let v = (-self.half_b - y, self.half_b - y);
        let top = sheet_integral(u, v, z - self.half_c);
        let bottom = sheet_integral(u, v, z + self.half_c);
        self.polarization / (4.0 * PI) * (top - bottom)
    }
}

impl FieldSource for CuboidMagnet {
    fn bz_in_plane(&self, x: f64, y: f64, gap: f64) -> f64 {
        self.bz_unchecked(x, y, -(gap + self.half_c))
    }

    fn lateral_edges(&self) -> Option<(f64, f64)> {
        Some((self.half_a, self.half_b))
    }
}

/// `Integral dz / (u^2 + v^2 + dz^2)^{3/2} du dv` over the rectangle
/// `u in [u.0, u.1], v in [v.0, v.1]`: the solid angle the rectangle
/// subtends from a point at height `dz`.
fn sheet_integral(u: (f64, f64), v: (f64, f64), dz: f64) -> f64 {
    if dz == 0.0 {
        // Point in the plane of the sheet but outside it.
        return 0.0;
    }
    let g = |u: f64, v: f64| (u * v / (dz * (u * u + v * v + dz * dz).sqrt())).atan();
    g(u.1, v.1) - g(u.0, v.1) - g(u.1, v.0) + g(u.0, v.0)
}

/// Axial field of the magnet at `point = [x, y, z]`, in a frame whose
/// origin is the magnet's geometric centre.
pub fn magnet_bz(magnet: &MagnetSpec, point: [f64; 3]) -> Result<f64> {
    let source = CuboidMagnet::from_spec(magnet);
    let [x, y, z] = point;
    if source.contains(x, y, z) {
        return Err(Error::InsideMagnet { x, y, z });
    }
    Ok(source.bz_unchecked(x, y, z))
}

const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

const FLUX_REL_TOL: f64 = 1e-4;
const MAX_LEVEL: usize = 6;

/// Nodes and weights on `[0, half]` with `2^level` panels per segment and
/// a breakpoint at `edge` when it falls inside.
fn axis_rule(half: f64, edge: Option<f64>, level: usize) -> Vec<(f64, f64)> {
    let mut cuts = vec![0.0];
    if let Some(e) = edge {
        if e > 0.0 && e < half {
            cuts.push(e);
        }
    }
    cuts.push(half);
    let panels = 1usize << level;
    let mut rule = Vec::with_capacity((cuts.len() - 1) * panels * 8);
    for seg in cuts.windows(2) {
        let width = (seg[1] - seg[0]) / panels as f64;
        for p in 0..panels {
            let lo = seg[0] + p as f64 * width;
            for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
                rule.push((lo + 0.5 * width * (x + 1.0), 0.5 * width * w));
            }
        }
    }
    rule
}

fn turn_flux<S: FieldSource + ?Sized>(source: &S, turn: &Turn, gap: f64, level: usize) -> f64 {
    let half = turn.side_length / 2.0;
    let (ex, ey) = match source.lateral_edges() {
        Some((a, b)) => (Some(a), Some(b)),
        None => (None, None),
    };
    let xs = axis_rule(half, ex, level);
    let ys = axis_rule(half, ey, level);
    let plane_gap = gap - turn.z_plane;
    let mut quadrant = 0.0;
    for &(y, wy) in &ys {
        let mut row = 0.0;
        for &(x, wx) in &xs {
            row += wx * source.bz_in_plane(x, y, plane_gap);
        }
        quadrant += wy * row;
    }
    4.0 * quadrant
}

/// Total flux linkage at a fixed quadrature level.
pub fn flux_at_level<S: FieldSource + ?Sized>(
    source: &S,
    layout: &CoilLayout,
    gap: f64,
    level: usize,
    exec: Execution,
) -> f64 {
    exec::sum_ordered(exec, &layout.turns, |t| turn_flux(source, t, gap, level))
}

/// Flux linkage and the quadrature level at which it converged.
pub fn flux_linkage_converged<S: FieldSource + ?Sized>(
    source: &S,
    layout: &CoilLayout,
    z_gap: f64,
    exec: Execution,
) -> Result<(f64, usize)> {
    if !(z_gap > 0.0 && z_gap.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "z_gap",
            value: z_gap,
            reason: "must be > 0",
        });
    }
    let mut prev = flux_at_level(source, layout, z_gap, 0, exec);
    let mut change = f64::INFINITY;
    for level in 1..=MAX_LEVEL {
        let next = flux_at_level(source, layout, z_gap, level, exec);
        let scale = next.abs().max(prev.abs());
        change = if scale == 0.0 {
            0.0
        } else {
            (next - prev).abs() / scale
        };
        if change < FLUX_REL_TOL {
            return Ok((next, level));
        }
        prev = next;
    }
    Err(Error::Quadrature {
        levels: MAX_LEVEL,
        last_change: change,
    })
}

/// Flux linkage summed over all turns, in weber.
pub fn flux_linkage<S: FieldSource + ?Sized>(
    source: &S,
    layout: &CoilLayout,
    z_gap: f64,
) -> Result<f64> {
    flux_linkage_converged(source, layout, z_gap, Execution::default()).map(|(phi, _)| phi)
}

pub fn flux_profile<S: FieldSource + ?Sized>(
    source: &S,
    layout: &CoilLayout,
    gaps: &[f64],
) -> Result<Vec<FluxSample>> {
    gaps.iter()
        .map(|&z_gap| {
            flux_linkage(source, layout, z_gap).map(|flux_linkage| FluxSample {
                z_gap,
                flux_linkage,
            })
        })
        .collect()
}

const DERIVATIVE_REL_TOL: f64 = 1e-3;
const MAX_HALVINGS: usize = 12;

/// `K = -dPhi/d(gap)` in V s/m: the EMF per unit velocity of the magnet
/// toward the coil. Central differences at a fixed quadrature rule, with
/// the step halved until successive estimates agree to 0.1 %.
pub fn transduction_coefficient<S: FieldSource + ?Sized>(
    source: &S,
    layout: &CoilLayout,
    z_gap: f64,
) -> Result<f64> {
    let exec = Execution::default();
    let (phi0, level) = flux_linkage_converged(source, layout, z_gap, exec)?;
    // One level above convergence keeps quadrature noise well under the
    // finite-difference signal.
    let level = (level + 1).min(MAX_LEVEL);
    let central = |h: f64| {
        (flux_at_level(source, layout, z_gap - h, level, exec)
            - flux_at_level(source, layout, z_gap + h, level, exec))
            / (2.0 * h)
    };
    let mut h = z_gap / 4.0;
    let mut prev = central(h);
    let mut change = f64::INFINITY;
    for _ in 0..MAX_HALVINGS {
        h /= 2.0;
        let next = central(h);
        let diff = (next - prev).abs();
        let floor = 64.0 * f64::EPSILON * phi0.abs() / h;
        if diff <= DERIVATIVE_REL_TOL * next.abs() || diff <= floor {
            return Ok(next);
        }
        change = diff / next.abs();
        prev = next;
    }
    Err(Error::Derivative {
        step: h,
        last_change: change,
    })
}
