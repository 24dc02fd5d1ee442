//! First-harmonic balance of the base-excited Duffing resonator.
//!
//! With `z = Z sin(wt - phi)` and `u = Z^2`, balancing the fundamental
//! gives the amplitude equation
//!
//! ```text
//! ((k - m w^2 + 3/4 k3 u)^2 + (c w)^2) u = (m Y0 w^2)^2
//! ```
//!
//! a cubic in `u`. For a stiffening spring it has one or three positive
//! roots; with three, the middle one is the unstable saddle branch. The
//! damping is the constant `c_p + c_e` of the device at its configured load.

use std::f64::consts::PI;

use crate::device::DeviceParams;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchRoot {
    /// Displacement amplitude `Z`, m.
    pub amplitude: f64,
    pub stability: Stability,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponsePoint {
    pub f: f64,
    /// Ascending by amplitude.
    pub roots: Vec<BranchRoot>,
}

impl ResponsePoint {
    pub fn largest_stable(&self) -> Option<f64> {
        self.roots
            .iter()
            .rev()
            .find(|r| r.stability == Stability::Stable)
            .map(|r| r.amplitude)
    }

    pub fn smallest_stable(&self) -> Option<f64> {
        self.roots
            .iter()
            .find(|r| r.stability == Stability::Stable)
            .map(|r| r.amplitude)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    pub points: Vec<ResponsePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackbonePoint {
    pub amplitude: f64,
    pub f_peak: f64,
}

/// Saddle-node frequencies that bound the bistable band.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct JumpFrequencies {
    /// Where an increasing sweep falls off the upper branch (upper edge).
    pub up_sweep: Option<f64>,
    /// Where a decreasing sweep climbs onto the upper branch (lower edge).
    pub down_sweep: Option<f64>,
    pub diagnostic: Option<String>,
}

/// Cubic `a3 u^3 + a2 u^2 + a1 u + a0` for the amplitude equation.
struct AmplitudeCubic {
    a3: f64,
    a2: f64,
    a1: f64,
    a0: f64,
}

impl AmplitudeCubic {
    fn new(m: f64, k: f64, k3: f64, c: f64, y0: f64, f: f64) -> Self {
        let w = 2.0 * PI * f;
        let detune = k - m * w * w;
        let a = 0.75 * k3;
        let force = m * y0 * w * w;
        Self {
            a3: a * a,
            a2: 2.0 * a * detune,
            a1: detune * detune + (c * w) * (c * w),
            a0: -force * force,
        }
    }

    fn eval(&self, u: f64) -> f64 {
        ((self.a3 * u + self.a2) * u + self.a1) * u + self.a0
    }

    fn deriv(&self, u: f64) -> f64 {
        (3.0 * self.a3 * u + 2.0 * self.a2) * u + self.a1
    }

    /// Monic cubic in `x = u / scale` with O(1) coefficients, returned as
    /// the depressed form `t^3 + p t + q` plus the shift `x = t - b/3`.
    fn normalized(&self) -> (f64, f64, f64, f64) {
        let b = self.a2 / self.a3;
        let c = self.a1 / self.a3;
        let d = self.a0 / self.a3;
        let scale = b.abs().max(c.abs().sqrt()).max(d.abs().cbrt());
        let (b, c, d) = (b / scale, c / (scale * scale), d / (scale * scale * scale));
        let p = c - b * b / 3.0;
        let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
        (p, q, b / 3.0, scale)
    }

    /// `4p^3 + 27q^2` of the normalized cubic: negative means three distinct
    /// real roots.
    fn discriminant_sign(&self) -> f64 {
        if self.a3 == 0.0 {
            return 1.0;
        }
        let (p, q, _, _) = self.normalized();
        4.0 * p * p * p + 27.0 * q * q
    }

    /// Real roots in ascending order, each polished by one Newton step.
    fn real_roots(&self) -> Vec<f64> {
        if self.a3 == 0.0 {
            // k3 = 0: linear in u.
            return if self.a1 > 0.0 {
                vec![-self.a0 / self.a1]
            } else {
                vec![]
            };
        }
        let (p, q, shift, scale) = self.normalized();
        let disc = 4.0 * p * p * p + 27.0 * q * q;
        let mut ts = Vec::with_capacity(3);
        if disc < 0.0 {
            // three real roots, trigonometric form
            let r = 2.0 * (-p / 3.0).sqrt();
            let arg = (3.0 * q / (p * r)).clamp(-1.0, 1.0);
            let theta = arg.acos() / 3.0;
            for j in 0..3 {
                ts.push(r * (theta - 2.0 * PI * j as f64 / 3.0).cos());
            }
        } else {
            // one real root (or a repeated one), Cardano
            let s = (q * q / 4.0 + p * p * p / 27.0).max(0.0).sqrt();
            let t = (-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt();
            ts.push(t);
            if disc == 0.0 && p != 0.0 {
                ts.push(-t / 2.0);
            }
        }
        let mut roots: Vec<f64> = ts
            .into_iter()
            .map(|t| (t - shift) * scale)
            .map(|u| {
                let d = self.deriv(u);
                if d != 0.0 {
                    u - self.eval(u) / d
                } else {
                    u
                }
            })
            .collect();
        roots.sort_by(|a, b| a.total_cmp(b));
        roots
    }
}

fn cubic_for(device: &DeviceParams, y0: f64, f: f64) -> Result<AmplitudeCubic> {
    let r = device.resonator();
    let c = device.damping()?.c_total();
    Ok(AmplitudeCubic::new(r.mass(), r.k_lin(), r.k_cub(), c, y0, f))
}

/// Positive amplitude roots of the first-harmonic balance at `f` Hz,
/// ascending, with branch stability.
pub fn response_amplitudes(device: &DeviceParams, y0: f64, f: f64) -> Result<Vec<BranchRoot>> {
    if !(y0 >= 0.0 && f > 0.0 && y0.is_finite() && f.is_finite()) {
        return Err(Error::Response(format!("need Y0 >= 0 and f > 0, got Y0={y0}, f={f}")));
    }
    if y0 == 0.0 {
        return Ok(vec![BranchRoot {
            amplitude: 0.0,
            stability: Stability::Stable,
        }]);
    }
    let cubic = cubic_for(device, y0, f)?;
    let mut amps: Vec<f64> = cubic
        .real_roots()
        .into_iter()
        .filter(|u| *u > 0.0 && u.is_finite())
        .map(f64::sqrt)
        .collect();
    amps.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    let stability_of = |i: usize| match (amps.len(), i) {
        (3, 1) => Stability::Unstable,
        // tangency: the doubled root is the marginal saddle-node
        (2, _) => {
            let cubic_deriv = cubic.deriv(amps[i] * amps[i]).abs();
            let other = cubic.deriv(amps[1 - i] * amps[1 - i]).abs();
            if cubic_deriv < other {
                Stability::Unstable
            } else {
                Stability::Stable
            }
        }
        _ => Stability::Stable,
    };
    Ok((0..amps.len())
        .map(|i| BranchRoot {
            amplitude: amps[i],
            stability: stability_of(i),
        })
        .collect())
}

pub fn frequency_response(
    device: &DeviceParams,
    y0: f64,
    freqs: &[f64],
    exec: Execution,
) -> Result<FrequencyResponse> {
    let points = exec::map_ordered(exec, freqs, |&f| {
        response_amplitudes(device, y0, f).map(|roots| ResponsePoint { f, roots })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(FrequencyResponse { points })
}

/// Phase lag `phi` of the branch with amplitude `z_amp`, for
/// `z = Z sin(wt - phi)` under forcing `m Y0 w^2 sin(wt)`.
pub fn response_phase(device: &DeviceParams, f: f64, z_amp: f64) -> Result<f64> {
    let r = device.resonator();
    let c = device.damping()?.c_total();
    let w = 2.0 * PI * f;
    let stiffness = r.k_lin() - r.mass() * w * w + 0.75 * r.k_cub() * z_amp * z_amp;
    Ok((c * w * z_amp).atan2(stiffness * z_amp))
}

pub fn backbone(device: &DeviceParams, z_grid: &[f64]) -> Vec<BackbonePoint> {
    z_grid
        .iter()
        .map(|&z| BackbonePoint {
            amplitude: z,
            f_peak: backbone_frequency(device, z),
        })
        .collect()
}

pub fn backbone_frequency(device: &DeviceParams, z_amp: f64) -> f64 {
    let r = device.resonator();
    ((r.k_lin() + 0.75 * r.k_cub() * z_amp * z_amp) / r.mass()).sqrt() / (2.0 * PI)
}

/// Where the upper branch meets the backbone: `Z = m Y0 w / c` with
/// `w^2 = (k + 3/4 k3 Z^2)/m`. Solvable in closed form because base
/// forcing grows as `w^2`. `None` when the branch never turns over.
pub fn resonance_peak(device: &DeviceParams, y0: f64) -> Result<Option<BackbonePoint>> {
    let r = device.resonator();
    let c = device.damping()?.c_total();
    if c <= 0.0 {
        return Ok(None);
    }
    let kappa = nonlinearity_index(device, y0)?;
    if kappa >= 1.0 {
        return Ok(None);
    }
    let w2 = r.omega_n().powi(2) / (1.0 - kappa);
    let w = w2.sqrt();
    Ok(Some(BackbonePoint {
        amplitude: r.mass() * y0 * w / c,
        f_peak: w / (2.0 * PI),
    }))
}

/// `3/4 k3 m Y0^2 / c^2`: fractional shift of `w^2` at the resonance peak.
/// The peak frequency is `f_n / sqrt(1 - kappa)`.
pub fn nonlinearity_index(device: &DeviceParams, y0: f64) -> Result<f64> {
    let r = device.resonator();
    let c = device.damping()?.c_total();
    Ok(0.75 * r.k_cub() * r.mass() * y0 * y0 / (c * c))
}

const JUMP_TOL_HZ: f64 = 1e-3;
const SCAN_POINTS: usize = 4000;

/// Bounds of the bistable band, located where the cubic's discriminant
/// changes sign and refined by bisection to 1e-3 Hz.
pub fn jump_frequencies(device: &DeviceParams, y0: f64) -> Result<JumpFrequencies> {
    let r = device.resonator();
    if r.k_cub() == 0.0 || y0 == 0.0 {
        return Ok(JumpFrequencies::default());
    }
    let f_n = r.omega_n() / (2.0 * PI);
    let f_hi = match resonance_peak(device, y0)? {
        Some(peak) => 1.25 * peak.f_peak,
        None => {
            return Ok(JumpFrequencies {
                diagnostic: Some(
                    "upper branch does not turn over (nonlinearity index >= 1); no upper jump"
                        .into(),
                ),
                ..Default::default()
            })
        }
    };
    let f_lo = 0.5 * f_n;
    let c = device.damping()?.c_total();
    let disc = |f: f64| AmplitudeCubic::new(r.mass(), r.k_lin(), r.k_cub(), c, y0, f).discriminant_sign();

    let step = (f_hi - f_lo) / SCAN_POINTS as f64;
    let mut lower_edge = None;
    let mut upper_edge = None;
    let mut prev_f = f_lo;
    let mut prev_d = disc(f_lo);
    for i in 1..=SCAN_POINTS {
        let f = f_lo + step * i as f64;
        let d = disc(f);
        if prev_d >= 0.0 && d < 0.0 && lower_edge.is_none() {
            lower_edge = Some(bisect(&disc, prev_f, f));
        } else if prev_d < 0.0 && d >= 0.0 && lower_edge.is_some() {
            upper_edge = Some(bisect(&disc, prev_f, f));
        }
        prev_f = f;
        prev_d = d;
    }
    let diagnostic = match (lower_edge, upper_edge) {
        (None, _) => Some("single-valued response over the scanned band".to_string()),
        (Some(_), None) => Some(format!(
            "bistable band opens but does not close below {f_hi:.3} Hz"
        )),
        _ => None,
    };
    Ok(JumpFrequencies {
        up_sweep: upper_edge,
        down_sweep: lower_edge,
        diagnostic,
    })
}

fn bisect(disc: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let lo_sign = disc(lo) < 0.0;
    while hi - lo > JUMP_TOL_HZ {
        let mid = 0.5 * (lo + hi);
        if (disc(mid) < 0.0) == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{CoilSpec, ElectricalLoad, MagnetSpec, ResonatorParams};
    use approx::assert_relative_eq;

    pub(crate) fn duffing(k_cub: f64) -> DeviceParams {
        let r = ResonatorParams::tuned(7.35e-4, 322.0, 0.008)
            .unwrap()
            .with_k_cub(k_cub)
            .unwrap();
        DeviceParams::new(
            r,
            MagnetSpec::default(),
            CoilSpec::default(),
            ElectricalLoad::new(1e5).unwrap(),
            0.27,
            97.7,
            1.35e-6,
        )
        .unwrap()
    }

    #[test]
    fn linear_closed_form() {
        let dev = duffing(0.0);
        let y0 = 5.1e-6;
        let c = dev.damping().unwrap().c_total();
        let m = dev.resonator().mass();
        let k = dev.resonator().k_lin();
        for f in [200.0, 310.0, 322.0, 330.0, 500.0] {
            let w = 2.0 * PI * f;
            let expected = m * y0 * w * w / ((k - m * w * w).powi(2) + (c * w).powi(2)).sqrt();
            let roots = response_amplitudes(&dev, y0, f).unwrap();
            assert_eq!(roots.len(), 1);
            assert_relative_eq!(roots[0].amplitude, expected, max_relative = 1e-10);
        }
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let roots = response_amplitudes(&duffing(5e9), 0.0, 330.0).unwrap();
        assert_eq!(roots.len(), 1);
        assert_eq!(roots[0].amplitude, 0.0);
    }

    #[test]
    fn three_roots_inside_band_middle_unstable() {
        let dev = duffing(5e9);
        let jumps = jump_frequencies(&dev, 5.1e-6).unwrap();
        let (lo, hi) = (jumps.down_sweep.unwrap(), jumps.up_sweep.unwrap());
        assert!(hi > lo);
        let roots = response_amplitudes(&dev, 5.1e-6, 0.5 * (lo + hi)).unwrap();
        assert_eq!(roots.len(), 3);
        assert_eq!(roots[1].stability, Stability::Unstable);
        assert_eq!(roots[0].stability, Stability::Stable);
        assert_eq!(roots[2].stability, Stability::Stable);
        assert_eq!(response_amplitudes(&dev, 5.1e-6, lo - 0.5).unwrap().len(), 1);
        assert_eq!(response_amplitudes(&dev, 5.1e-6, hi + 0.5).unwrap().len(), 1);
    }

    #[test]
    fn roots_satisfy_the_amplitude_equation() {
        let dev = duffing(5e9);
        let r = dev.resonator();
        let c = dev.damping().unwrap().c_total();
        for f in [300.0, 330.0, 340.0, 345.0] {
            for root in response_amplitudes(&dev, 5.1e-6, f).unwrap() {
                let w = 2.0 * PI * f;
                let z = root.amplitude;
                let lhs = ((r.k_lin() - r.mass() * w * w + 0.75 * r.k_cub() * z * z).powi(2)
                    + (c * w).powi(2))
                    * z
                    * z;
                let rhs = (r.mass() * 5.1e-6 * w * w).powi(2);
                assert_relative_eq!(lhs, rhs, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn linear_device_has_no_jumps() {
        let j = jump_frequencies(&duffing(0.0), 5.1e-6).unwrap();
        assert!(j.up_sweep.is_none() && j.down_sweep.is_none());
    }

    #[test]
    fn weak_forcing_has_no_jumps() {
        let j = jump_frequencies(&duffing(5e9), 0.5e-6).unwrap();
        assert!(j.up_sweep.is_none() && j.down_sweep.is_none());
        assert!(j.diagnostic.is_some());
    }

    #[test]
    fn backbone_examples() {
        let dev = duffing(5e9);
        let b = backbone(&dev, &[0.0, 1e-4, 3e-4]);
        assert_relative_eq!(b[0].f_peak, 322.0, max_relative = 1e-12);
        assert!(b[1].f_peak > b[0].f_peak && b[2].f_peak > b[1].f_peak);
        let flat = backbone(&duffing(0.0), &[0.0, 1e-4, 3e-4]);
        assert!(flat.iter().all(|p| (p.f_peak - 322.0).abs() < 1e-9));
    }

    #[test]
    fn resonance_peak_is_the_response_maximum() {
        let dev = duffing(5e9);
        let peak = resonance_peak(&dev, 5.1e-6).unwrap().unwrap();
        // the largest root on a fine grid around the peak never exceeds it
        let mut best: f64 = 0.0;
        let mut f = peak.f_peak - 5.0;
        while f < peak.f_peak + 5.0 {
            let roots = response_amplitudes(&dev, 5.1e-6, f).unwrap();
            best = best.max(roots.last().unwrap().amplitude);
            f += 0.005;
        }
        assert_relative_eq!(best, peak.amplitude, max_relative = 1e-4);
        assert_relative_eq!(
            backbone_frequency(&dev, peak.amplitude),
            peak.f_peak,
            max_relative = 1e-12
        );
    }

    #[test]
    fn phase_at_linear_resonance_is_quarter_cycle() {
        let dev = duffing(0.0);
        let phi = response_phase(&dev, 322.0, 1e-5).unwrap();
        assert_relative_eq!(phi, PI / 2.0, epsilon = 1e-9);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(200))]
        #[test]
        fn root_count_is_odd_and_jumps_ordered(
            k_cub in 0.0f64..2e10,
            zeta in 0.002f64..0.05,
            y0 in 0.1e-6f64..8e-6,
            frac in 0.8f64..1.3,
        ) {
            let r = ResonatorParams::tuned(7.35e-4, 322.0, zeta).unwrap().with_k_cub(k_cub).unwrap();
            let dev = duffing(0.0).with_resonator(r);
            let roots = response_amplitudes(&dev, y0, 322.0 * frac).unwrap();
            proptest::prop_assert!(roots.len() == 1 || roots.len() == 3);
            let j = jump_frequencies(&dev, y0).unwrap();
            if let (Some(up), Some(down)) = (j.up_sweep, j.down_sweep) {
                proptest::prop_assert!(up >= down);
            }
        }

        #[test]
        fn peak_response_grows_with_forcing(y0 in 0.5e-6f64..5e-6, extra in 1.01f64..2.0) {
            let dev = duffing(5e9);
            let a = resonance_peak(&dev, y0).unwrap();
            let b = resonance_peak(&dev, y0 * extra).unwrap();
            if let (Some(a), Some(b)) = (a, b) {
                proptest::prop_assert!(b.amplitude >= a.amplitude);
            }
        }
    }
}
