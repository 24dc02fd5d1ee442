//! Physical parameter types shared by every other module.
//!
//! All quantities are SI. Every constructor validates its invariants and
//! rejects non-finite input, so a value that exists is a valid value. The
//! `with_*` methods return validated copies; nothing is mutated in place.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{require, Error, Result};
use crate::magnetics;

/// Uniformly magnetized rectangular magnet riding on the membrane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnetSpec {
    side_a: f64,
    side_b: f64,
    thickness: f64,
    remanence: f64,
    density: f64,
    gap_z0: f64,
}

impl MagnetSpec {
    pub const DEFAULT_SIDE: f64 = 7.0e-3;
    pub const DEFAULT_THICKNESS: f64 = 2.0e-3;
    pub const DEFAULT_REMANENCE: f64 = 1.2;
    pub const DEFAULT_DENSITY: f64 = 7500.0;
    pub const DEFAULT_GAP: f64 = 0.5e-3;

    pub fn new(
        side_a: f64,
        side_b: f64,
        thickness: f64,
        remanence: f64,
        density: f64,
        gap_z0: f64,
    ) -> Result<Self> {
        require(side_a > 0.0, "magnet.side_a", side_a, "must be > 0")?;
        require(side_b > 0.0, "magnet.side_b", side_b, "must be > 0")?;
        require(thickness > 0.0, "magnet.thickness", thickness, "must be > 0")?;
        require(remanence > 0.0, "magnet.remanence", remanence, "must be > 0")?;
        require(density > 0.0, "magnet.density", density, "must be > 0")?;
        require(gap_z0 > 0.0, "magnet.gap_z0", gap_z0, "must be > 0")?;
        Ok(Self {
            side_a,
            side_b,
            thickness,
            remanence,
            density,
            gap_z0,
        })
    }

    pub fn side_a(&self) -> f64 {
        self.side_a
    }
    pub fn side_b(&self) -> f64 {
        self.side_b
    }
    pub fn thickness(&self) -> f64 {
        self.thickness
    }
    pub fn remanence(&self) -> f64 {
        self.remanence
    }
    pub fn density(&self) -> f64 {
        self.density
    }
    pub fn gap_z0(&self) -> f64 {
        self.gap_z0
    }

    pub fn volume(&self) -> f64 {
        self.side_a * self.side_b * self.thickness
    }

    pub fn mass(&self) -> f64 {
        self.density * self.volume()
    }

    pub fn with_remanence(&self, remanence: f64) -> Result<Self> {
        Self::new(
            self.side_a,
            self.side_b,
            self.thickness,
            remanence,
            self.density,
            self.gap_z0,
        )
    }

    pub fn with_gap(&self, gap_z0: f64) -> Result<Self> {
        Self::new(
            self.side_a,
            self.side_b,
            self.thickness,
            self.remanence,
            self.density,
            gap_z0,
        )
    }

    /// Every length multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(
            self.side_a * s,
            self.side_b * s,
            self.thickness * s,
            self.remanence,
            self.density,
            self.gap_z0 * s,
        )
    }
}

impl Default for MagnetSpec {
    /// 7 x 7 mm sintered NdFeB, 2 mm thick, 0.5 mm above the coil.
    fn default() -> Self {
        Self {
            side_a: Self::DEFAULT_SIDE,
            side_b: Self::DEFAULT_SIDE,
            thickness: Self::DEFAULT_THICKNESS,
            remanence: Self::DEFAULT_REMANENCE,
            density: Self::DEFAULT_DENSITY,
            gap_z0: Self::DEFAULT_GAP,
        }
    }
}

/// Planar square spiral, described by its fabrication parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoilSpec {
    n_turns: usize,
    track_width: f64,
    track_thickness: f64,
    track_separation: f64,
    outer_side: f64,
    resistivity: f64,
}

impl CoilSpec {
    pub const COPPER_RESISTIVITY: f64 = 1.72e-8;

    pub fn new(
        n_turns: usize,
        track_width: f64,
        track_thickness: f64,
        track_separation: f64,
        outer_side: f64,
        resistivity: f64,
    ) -> Result<Self> {
        require(n_turns >= 1, "coil.n_turns", n_turns as f64, "must be >= 1")?;
        require(track_width > 0.0, "coil.track_width", track_width, "must be > 0")?;
        require(
            track_thickness > 0.0,
            "coil.track_thickness",
            track_thickness,
            "must be > 0",
        )?;
        require(
            track_separation > 0.0,
            "coil.track_separation",
            track_separation,
            "must be > 0",
        )?;
        require(outer_side > 0.0, "coil.outer_side", outer_side, "must be > 0")?;
        require(resistivity > 0.0, "coil.resistivity", resistivity, "must be > 0")?;
        let footprint = n_turns as f64 * (track_width + track_separation);
        require(
            footprint <= outer_side / 2.0,
            "coil.n_turns",
            n_turns as f64,
            "spiral does not fit: n_turns * pitch exceeds outer_side / 2",
        )?;
        Ok(Self {
            n_turns,
            track_width,
            track_thickness,
            track_separation,
            outer_side,
            resistivity,
        })
    }

    /// 52 turns of 20 um wide, 15 um thick Cu at 15 um spacing on a 10 mm die.
    pub fn prototype() -> Self {
        Self {
            n_turns: 52,
            track_width: 20e-6,
            track_thickness: 15e-6,
            track_separation: 15e-6,
            outer_side: 10e-3,
            resistivity: Self::COPPER_RESISTIVITY,
        }
    }

    /// Same coil with the width and separation swapped (15 um wide, 20 um gap).
    pub fn prototype_swapped_tracks() -> Self {
        Self {
            track_width: 15e-6,
            track_separation: 20e-6,
            ..Self::prototype()
        }
    }

    pub fn n_turns(&self) -> usize {
        self.n_turns
    }
    pub fn track_width(&self) -> f64 {
        self.track_width
    }
    pub fn track_thickness(&self) -> f64 {
        self.track_thickness
    }
    pub fn track_separation(&self) -> f64 {
        self.track_separation
    }
    pub fn outer_side(&self) -> f64 {
        self.outer_side
    }
    pub fn resistivity(&self) -> f64 {
        self.resistivity
    }

    pub fn pitch(&self) -> f64 {
        self.track_width + self.track_separation
    }

    pub fn with_track_thickness(&self, track_thickness: f64) -> Result<Self> {
        Self::new(
            self.n_turns,
            self.track_width,
            track_thickness,
            self.track_separation,
            self.outer_side,
            self.resistivity,
        )
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(
            self.n_turns,
            self.track_width * s,
            self.track_thickness * s,
            self.track_separation * s,
            self.outer_side * s,
            self.resistivity,
        )
    }
}

impl Default for CoilSpec {
    fn default() -> Self {
        Self::prototype()
    }
}

/// Lumped mechanics of the membrane and proof mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorParams {
    mass: f64,
    k_lin: f64,
    k_cub: f64,
    zeta_p: f64,
    gamma_sat: f64,
}

impl ResonatorParams {
    pub fn new(mass: f64, k_lin: f64, k_cub: f64, zeta_p: f64, gamma_sat: f64) -> Result<Self> {
        require(mass > 0.0, "resonator.mass", mass, "must be > 0")?;
        require(k_lin > 0.0, "resonator.k_lin", k_lin, "must be > 0")?;
        require(k_cub >= 0.0, "resonator.k_cub", k_cub, "must be >= 0 (stiffening)")?;
        require(zeta_p >= 0.0, "resonator.zeta_p", zeta_p, "must be >= 0")?;
        require(gamma_sat >= 0.0, "resonator.gamma_sat", gamma_sat, "must be >= 0")?;
        Ok(Self {
            mass,
            k_lin,
            k_cub,
            zeta_p,
            gamma_sat,
        })
    }

    /// Linear resonator with the given natural frequency.
    pub fn tuned(mass: f64, natural_hz: f64, zeta_p: f64) -> Result<Self> {
        require(natural_hz > 0.0, "resonator.natural_hz", natural_hz, "must be > 0")?;
        let omega = 2.0 * PI * natural_hz;
        Self::new(mass, mass * omega * omega, 0.0, zeta_p, 0.0)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }
    pub fn k_lin(&self) -> f64 {
        self.k_lin
    }
    pub fn k_cub(&self) -> f64 {
        self.k_cub
    }
    pub fn zeta_p(&self) -> f64 {
        self.zeta_p
    }
    pub fn gamma_sat(&self) -> f64 {
        self.gamma_sat
    }

    pub fn omega_n(&self) -> f64 {
        (self.k_lin / self.mass).sqrt()
    }

    pub fn with_mass(&self, mass: f64) -> Result<Self> {
        Self::new(mass, self.k_lin, self.k_cub, self.zeta_p, self.gamma_sat)
    }
    pub fn with_k_lin(&self, k_lin: f64) -> Result<Self> {
        Self::new(self.mass, k_lin, self.k_cub, self.zeta_p, self.gamma_sat)
    }
    pub fn with_k_cub(&self, k_cub: f64) -> Result<Self> {
        Self::new(self.mass, self.k_lin, k_cub, self.zeta_p, self.gamma_sat)
    }
    pub fn with_zeta_p(&self, zeta_p: f64) -> Result<Self> {
        Self::new(self.mass, self.k_lin, self.k_cub, zeta_p, self.gamma_sat)
    }
    pub fn with_gamma_sat(&self, gamma_sat: f64) -> Result<Self> {
        Self::new(self.mass, self.k_lin, self.k_cub, self.zeta_p, gamma_sat)
    }
}

/// Harmonic base displacement `y(t) = amplitude_y0 * sin(2 pi f t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Excitation {
    amplitude_y0: f64,
    frequency_hz: f64,
}

impl Excitation {
    pub fn new(amplitude_y0: f64, frequency_hz: f64) -> Result<Self> {
        require(amplitude_y0 >= 0.0, "excitation.amplitude_y0", amplitude_y0, "must be >= 0")?;
        require(frequency_hz > 0.0, "excitation.frequency_hz", frequency_hz, "must be > 0")?;
        Ok(Self {
            amplitude_y0,
            frequency_hz,
        })
    }

    pub fn amplitude_y0(&self) -> f64 {
        self.amplitude_y0
    }
    pub fn frequency_hz(&self) -> f64 {
        self.frequency_hz
    }
    pub fn omega(&self) -> f64 {
        2.0 * PI * self.frequency_hz
    }

    /// Peak base acceleration in m/s^2.
    pub fn acceleration(&self) -> f64 {
        self.amplitude_y0 * self.omega() * self.omega()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectricalLoad {
    r_load: f64,
}

impl ElectricalLoad {
    pub fn new(r_load: f64) -> Result<Self> {
        require(r_load > 0.0, "load.r_load", r_load, "must be > 0")?;
        Ok(Self { r_load })
    }

    pub fn r_load(&self) -> f64 {
        self.r_load
    }
}

/// Viscous damping split into its mechanical and electrical parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Damping {
    /// Parasitic coefficient, N s/m.
    pub c_p: f64,
    /// Electrical back-reaction coefficient, N s/m.
    pub c_e: f64,
    pub zeta_total: f64,
}

impl Damping {
    pub fn c_total(&self) -> f64 {
        self.c_p + self.c_e
    }
}

/// The complete electromechanical parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    resonator: ResonatorParams,
    magnet: MagnetSpec,
    coil: CoilSpec,
    load: ElectricalLoad,
    coupling_k: f64,
    r_coil: f64,
    device_volume: f64,
}

impl DeviceParams {
    /// Active device volume of the prototype, 1.35 cm^3.
    pub const PROTOTYPE_VOLUME: f64 = 1.35e-6;

    pub fn new(
        resonator: ResonatorParams,
        magnet: MagnetSpec,
        coil: CoilSpec,
        load: ElectricalLoad,
        coupling_k: f64,
        r_coil: f64,
        device_volume: f64,
    ) -> Result<Self> {
        require(true, "device.coupling_k", coupling_k, "must be finite")?;
        require(r_coil > 0.0, "device.r_coil", r_coil, "must be > 0")?;
        require(device_volume > 0.0, "device.device_volume", device_volume, "must be > 0")?;
        Ok(Self {
            resonator,
            magnet,
            coil,
            load,
            coupling_k,
            r_coil,
            device_volume,
        })
    }

    /// Builds a device whose coil resistance and transduction coefficient are
    /// computed from the magnet and coil geometry.
    pub fn from_geometry(
        resonator: ResonatorParams,
        magnet: MagnetSpec,
        coil: CoilSpec,
        load: ElectricalLoad,
        device_volume: f64,
    ) -> Result<Self> {
        let layout = magnetics::build_layout(&coil)?;
        let r_coil = magnetics::coil_resistance(&layout, coil.resistivity());
        let source = magnetics::CuboidMagnet::from_spec(&magnet);
        let k = magnetics::transduction_coefficient(&source, &layout, magnet.gap_z0())?;
        Self::new(resonator, magnet, coil, load, k, r_coil, device_volume)
    }

    pub fn resonator(&self) -> &ResonatorParams {
        &self.resonator
    }
    pub fn magnet(&self) -> &MagnetSpec {
        &self.magnet
    }
    pub fn coil(&self) -> &CoilSpec {
        &self.coil
    }
    pub fn load(&self) -> &ElectricalLoad {
        &self.load
    }
    pub fn coupling_k(&self) -> f64 {
        self.coupling_k
    }
    pub fn r_coil(&self) -> f64 {
        self.r_coil
    }
    pub fn r_load(&self) -> f64 {
        self.load.r_load
    }
    pub fn device_volume(&self) -> f64 {
        self.device_volume
    }

    pub fn with_resonator(&self, resonator: ResonatorParams) -> Self {
        Self { resonator, ..*self }
    }
    pub fn with_load(&self, r_load: f64) -> Result<Self> {
        Ok(Self {
            load: ElectricalLoad::new(r_load)?,
            ..*self
        })
    }
    pub fn with_coupling(&self, coupling_k: f64) -> Result<Self> {
        Self::new(
            self.resonator,
            self.magnet,
            self.coil,
            self.load,
            coupling_k,
            self.r_coil,
            self.device_volume,
        )
    }
    pub fn with_r_coil(&self, r_coil: f64) -> Result<Self> {
        Self::new(
            self.resonator,
            self.magnet,
            self.coil,
            self.load,
            self.coupling_k,
            r_coil,
            self.device_volume,
        )
    }
    /// Replaces the coil spec and recomputes its series resistance. The
    /// transduction coefficient is left alone: the filament model only
    /// sees turn centerlines, which track thickness does not move.
    pub fn with_coil_resistance_from(&self, coil: CoilSpec) -> Result<Self> {
        let layout = magnetics::build_layout(&coil)?;
        let r_coil = magnetics::coil_resistance(&layout, coil.resistivity());
        Self::new(
            self.resonator,
            self.magnet,
            coil,
            self.load,
            self.coupling_k,
            r_coil,
            self.device_volume,
        )
    }
    pub fn with_volume(&self, device_volume: f64) -> Result<Self> {
        Self::new(
            self.resonator,
            self.magnet,
            self.coil,
            self.load,
            self.coupling_k,
            self.r_coil,
            device_volume,
        )
    }

    pub fn damping(&self) -> Result<Damping> {
        damping_coefficients(&self.resonator, self.coupling_k, self.r_coil, self.r_load())
    }

    /// RMS voltage across the load for a sinusoidal displacement of
    /// amplitude `z_amp` at `f` Hz.
    pub fn load_voltage_rms(&self, z_amp: f64, f: f64) -> f64 {
        let emf_rms = self.coupling_k * z_amp * 2.0 * PI * f / SQRT_2;
        emf_rms * self.r_load() / (self.r_coil + self.r_load())
    }
}

/// Undamped natural frequency in Hz.
pub fn natural_frequency(resonator: &ResonatorParams) -> f64 {
    resonator.omega_n() / (2.0 * PI)
}

pub fn damping_coefficients(
    resonator: &ResonatorParams,
    coupling_k: f64,
    r_coil: f64,
    r_load: f64,
) -> Result<Damping> {
    let r_total = r_coil + r_load;
    if !(r_total > 0.0) {
        return Err(Error::InvalidParameter {
            name: "r_coil + r_load",
            value: r_total,
            reason: "must be > 0",
        });
    }
    let omega_n = resonator.omega_n();
    let c_p = 2.0 * resonator.zeta_p() * resonator.mass() * omega_n;
    let c_e = if r_total.is_infinite() {
        0.0
    } else {
        coupling_k * coupling_k / r_total
    };
    let zeta_total = resonator.zeta_p() + c_e / (2.0 * resonator.mass() * omega_n);
    Ok(Damping {
        c_p,
        c_e,
        zeta_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn natural_frequency_examples() {
        let r = ResonatorParams::new(7.4e-4, 3.45e3, 0.0, 0.008, 0.0).unwrap();
        // closed-form inversion of k = m (2 pi f)^2 gives 343.648 Hz
        assert!((natural_frequency(&r) - 343.648).abs() < 1e-3);

        let unit = ResonatorParams::new(1.0, 4.0 * PI * PI, 0.0, 0.0, 0.0).unwrap();
        assert_relative_eq!(natural_frequency(&unit), 1.0, epsilon = 1e-14);

        let stiff = unit.with_k_lin(unit.k_lin() * 4.0).unwrap();
        assert_relative_eq!(natural_frequency(&stiff), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn default_magnet_mass() {
        assert_relative_eq!(MagnetSpec::default().mass(), 7.35e-4, max_relative = 1e-12);
    }

    #[test]
    fn damping_examples() {
        let r = ResonatorParams::tuned(7.35e-4, 344.0, 0.008).unwrap();
        let d = damping_coefficients(&r, 0.0, 100.0, 100.0).unwrap();
        assert_eq!(d.c_e, 0.0);
        assert_eq!(d.zeta_total, 0.008);

        let d = damping_coefficients(&r, 0.1, 100.0, 100.0).unwrap();
        assert_relative_eq!(d.c_e, 5e-5, max_relative = 1e-12);

        let d = damping_coefficients(&r, 0.1, 100.0, f64::INFINITY).unwrap();
        assert_eq!(d.c_e, 0.0);

        assert!(damping_coefficients(&r, 0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn zeta_total_decreases_with_load() {
        let r = ResonatorParams::tuned(7.35e-4, 344.0, 0.008).unwrap();
        let mut last = f64::INFINITY;
        for r_load in [1.0, 10.0, 100.0, 1e3, 1e4, 1e5] {
            let z = damping_coefficients(&r, 0.3, 98.0, r_load).unwrap().zeta_total;
            assert!(z < last);
            last = z;
        }
    }

    #[test]
    fn constructors_reject_bad_values() {
        assert!(ResonatorParams::new(f64::NAN, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(ResonatorParams::new(1.0, f64::INFINITY, 0.0, 0.0, 0.0).is_err());
        assert!(ResonatorParams::new(1.0, 1.0, -1.0, 0.0, 0.0).is_err());
        assert!(MagnetSpec::new(1e-3, 1e-3, 1e-3, 0.0, 7500.0, 1e-3).is_err());
        assert!(Excitation::new(-1e-6, 100.0).is_err());
        assert!(Excitation::new(1e-6, 0.0).is_err());
        assert!(ElectricalLoad::new(0.0).is_err());
        assert!(CoilSpec::new(200, 20e-6, 15e-6, 15e-6, 10e-3, 1.7e-8).is_err());
        assert!(CoilSpec::new(0, 20e-6, 15e-6, 15e-6, 10e-3, 1.7e-8).is_err());
    }

    #[test]
    fn load_voltage_divider() {
        let r = ResonatorParams::tuned(7.35e-4, 344.0, 0.008).unwrap();
        let dev = DeviceParams::new(
            r,
            MagnetSpec::default(),
            CoilSpec::default(),
            ElectricalLoad::new(100.0).unwrap(),
            0.3,
            100.0,
            1.35e-6,
        )
        .unwrap();
        let open = 0.3 * 1e-4 * 2.0 * PI * 344.0 / SQRT_2;
        assert_relative_eq!(dev.load_voltage_rms(1e-4, 344.0), open / 2.0, max_relative = 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn frequency_invariant_under_joint_scaling(
            m in 1e-5f64..1.0, k in 1.0f64..1e6, s in 1e-3f64..1e3
        ) {
            let a = ResonatorParams::new(m, k, 0.0, 0.01, 0.0).unwrap();
            let b = ResonatorParams::new(m * s, k * s, 0.0, 0.01, 0.0).unwrap();
            proptest::prop_assert!(
                (natural_frequency(&a) - natural_frequency(&b)).abs()
                    <= 1e-12 * natural_frequency(&a)
            );
        }
    }
}
