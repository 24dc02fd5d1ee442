use std::f64::consts::PI;

use approx::assert_relative_eq;
use emharvest::device::{CoilSpec, MagnetSpec};
use emharvest::magnetics::{self, CuboidMagnet};
use proptest::prelude::*;

fn prototype() -> (MagnetSpec, CuboidMagnet, magnetics::CoilLayout) {
    let spec = MagnetSpec::default();
    let layout = magnetics::build_layout(&CoilSpec::prototype()).unwrap();
    (spec, CuboidMagnet::from_spec(&spec), layout)
}

#[test]
fn coupling_matches_polynomial_slope() {
    let (_, source, layout) = prototype();
    for gap in [0.3e-3, 0.5e-3, 1e-3, 2e-3] {
        let k = magnetics::transduction_coefficient(&source, &layout, gap).unwrap();
        // least-squares quadratic through 7 samples, slope at the centre
        let h = gap / 20.0;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for i in -3i32..=3 {
            let x = i as f64 * h;
            let phi = magnetics::flux_linkage(&source, &layout, gap + x).unwrap();
            sxy += x * phi;
            sxx += x * x;
        }
        // odd moments of a symmetric stencil isolate the linear term
        let slope = sxy / sxx;
        assert_relative_eq!(k, -slope, max_relative = 1e-2);
    }
}

/// Flux of a point dipole through a square loop of half-side `a` at axial
/// distance `z`, from the line integral of the vector potential, divided
/// by `mu0 m / 4 pi`.
fn dipole_loop(a: f64, z: f64) -> f64 {
    8.0 * a * a / ((a * a + z * z) * (2.0 * a * a + z * z).sqrt())
}

fn dipole_loop_dz(a: f64, z: f64) -> f64 {
    let p = a * a + z * z;
    let q = 2.0 * a * a + z * z;
    8.0 * a * a * (-2.0 * z / (p * p * q.sqrt()) - z / (p * q.powf(1.5)))
}

#[test]
fn far_field_coupling_matches_dipole_derivative() {
    let (spec, source, layout) = prototype();
    let moment = spec.remanence() * spec.volume() / (4.0 * PI);
    for gap in [50e-3, 70e-3] {
        let z = gap + spec.thickness() / 2.0;
        let analytic: f64 = layout
            .turns
            .iter()
            .map(|t| -moment * dipole_loop_dz(t.side_length / 2.0, z))
            .sum();
        let k = magnetics::transduction_coefficient(&source, &layout, gap).unwrap();
        assert_relative_eq!(k, analytic, max_relative = 2e-2);
        let flux: f64 = layout
            .turns
            .iter()
            .map(|t| moment * dipole_loop(t.side_length / 2.0, z))
            .sum();
        let phi = magnetics::flux_linkage(&source, &layout, gap).unwrap();
        assert_relative_eq!(phi, flux, max_relative = 2e-2);
    }
}

#[test]
fn resistance_linear_in_turns_for_fine_pitch() {
    // pitch a tenth of the prototype value, so the spiral barely shrinks inward
    let fine = |n| CoilSpec::new(n, 2e-6, 15e-6, 1.5e-6, 10e-3, CoilSpec::COPPER_RESISTIVITY).unwrap();
    let r = |n| magnetics::coil_resistance(&magnetics::build_layout(&fine(n)).unwrap(), CoilSpec::COPPER_RESISTIVITY);
    let r1 = r(1);
    for n in [2, 10, 26, 52] {
        assert_relative_eq!(r(n), n as f64 * r1, max_relative = 5e-2);
    }
}

#[test]
fn dipole_on_axis_far_away() {
    let spec = MagnetSpec::default();
    for factor in [20.0, 40.0] {
        let z = factor * spec.side_a();
        let bz = magnetics::magnet_bz(&spec, [0.0, 0.0, z]).unwrap();
        let dipole = spec.remanence() * spec.volume() / (2.0 * PI * z.powi(3));
        assert_relative_eq!(bz, dipole, max_relative = 1e-2);
        // below the magnet the axial field has the same sign and size
        let below = magnetics::magnet_bz(&spec, [0.0, 0.0, -z]).unwrap();
        assert_relative_eq!(below, bz, max_relative = 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flux_strictly_decreasing(g1 in 0.1e-3f64..10e-3, frac in 0.05f64..1.0) {
        let (_, source, layout) = prototype();
        let g2 = g1 + frac * (10e-3 - g1);
        prop_assume!(g2 > g1);
        let a = magnetics::flux_linkage(&source, &layout, g1).unwrap();
        let b = magnetics::flux_linkage(&source, &layout, g2).unwrap();
        prop_assert!(a.abs() > b.abs());
    }

    #[test]
    fn layout_is_reproducible(n in 1usize..60, w in 5e-6f64..40e-6, s in 5e-6f64..40e-6) {
        prop_assume!(n as f64 * (w + s) <= 5e-3);
        let c = CoilSpec::new(n, w, 15e-6, s, 10e-3, CoilSpec::COPPER_RESISTIVITY).unwrap();
        let a = magnetics::build_layout(&c).unwrap();
        let b = magnetics::build_layout(&c).unwrap();
        prop_assert_eq!(a, b);
    }
}
