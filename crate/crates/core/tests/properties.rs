use std::f64::consts::PI;

use proptest::prelude::*;

use num_complex::Complex64;
use porocell::bubbly::{
    bubbly_phase_velocity, dispersion_rhs, resonance_and_damping, BubblePopulation, BubblyLiquid,
};
use porocell::cellmodel::{
    equilibrium_strains, lithium_loss_effects, stack_tof, AgeingScenario, CellStack, LayerKind,
    LayerSpec, LossMechanism, SpringLayer, VelocitySource,
};

fn arb_layers() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((1e-5f64..1e-2, 300.0f64..7000.0), 1..8)
}

fn stack_of(parts: &[(f64, f64)]) -> CellStack {
    let layers = parts
        .iter()
        .enumerate()
        .map(|(i, &(d, c))| {
            let kind = LayerKind::ALL[i % LayerKind::ALL.len()];
            let porosity = kind.is_porous().then_some(0.4);
            LayerSpec::new(kind, porosity, d, c, VelocitySource::FixedTable).unwrap()
        })
        .collect::<Vec<_>>();
    let total = layers.iter().map(|l| l.thickness).sum();
    CellStack::new(layers, total).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn stack_tof_is_additive_and_order_free(parts in arb_layers(), rot in 0usize..8) {
        let tof = stack_tof(&stack_of(&parts));
        let sum: f64 = parts.iter().map(|(d, c)| d / c).sum();
        prop_assert!((tof - sum).abs() <= 1e-12 * sum);
        let mut rotated = parts.clone();
        rotated.rotate_left(rot % parts.len());
        rotated.reverse();
        let other = stack_tof(&stack_of(&rotated));
        prop_assert!((other - tof).abs() <= 1e-12 * tof);
    }

    #[test]
    fn equilibrium_conserves_total_thickness(
        layers in prop::collection::vec((1e-4f64..1e-2, -5e-3f64..5e-3, prop::option::weighted(0.8, 1e9f64..1e13)), 2..6),
    ) {
        prop_assume!(layers.iter().any(|l| l.2.is_some()));
        let springs: Vec<SpringLayer> =
            layers.iter().map(|&(thickness, free_strain, stiffness)| SpringLayer { thickness, free_strain, stiffness }).collect();
        let strains = equilibrium_strains(&springs).unwrap();
        let total: f64 = springs.iter().map(|l| l.thickness).sum();
        let change: f64 = springs.iter().zip(&strains).map(|(l, e)| l.thickness * e).sum();
        prop_assert!(change.abs() <= 1e-12 * total, "{change:e}");
        for (l, e) in springs.iter().zip(&strains) {
            if l.stiffness.is_none() {
                prop_assert_eq!(*e, l.free_strain);
            }
        }
    }

    #[test]
    fn sub_resonant_bubbles_only_slow_the_wave(r in -6.3f64..-3.0, f in 4.0f64..7.0, beta in -9.0f64..-3.0) {
        let (r, f, beta) = (10f64.powf(r), 10f64.powf(f), 10f64.powf(beta));
        let l = BubblyLiquid::water();
        let w = 2.0 * PI * f;
        if let Ok((w0, _)) = resonance_and_damping(&l, r, w) {
            prop_assume!(w < w0);
        }
        let pop = BubblePopulation::from_void_fraction(r, beta).unwrap();
        let v = bubbly_phase_velocity(&l, &pop, w).unwrap();
        prop_assert!(v.phase_velocity / l.sound_speed <= 1.0 + 1e-12);
        // Returned speed satisfies the dispersion relation.
        let s = Complex64::new(l.sound_speed / v.phase_velocity, v.attenuation);
        let rhs = dispersion_rhs(&l, &pop, w).unwrap();
        prop_assert!((s * s - rhs).norm() <= 1e-9 * rhs.norm());
    }

    #[test]
    fn lithium_loss_deltas_are_near_linear(fraction in 0.005f64..0.1) {
        let st = CellStack::reference_cell();
        for m in [LossMechanism::Sei, LossMechanism::Plating, LossMechanism::Lam] {
            let small = lithium_loss_effects(&AgeingScenario::lithium_loss(m, fraction), &st).unwrap();
            let full = lithium_loss_effects(&AgeingScenario::lithium_loss(m, 0.1), &st).unwrap();
            let k = fraction / 0.1;
            let pairs = [
                (small.cathode.modulus_pct, full.cathode.modulus_pct),
                (small.cathode.particle_size_pct, full.cathode.particle_size_pct),
                (small.cathode.layer_thickness_pct, full.cathode.layer_thickness_pct),
                (small.anode.layer_thickness_pct, full.anode.layer_thickness_pct),
            ];
            for (s, f) in pairs {
                if f != 0.0 {
                    prop_assert!((s / (k * f) - 1.0).abs() < 0.05, "{m:?}: {s} vs {}", k * f);
                }
            }
        }
    }
}
