//! Acceptance run: one PASS/FAIL line per check, grouped by criterion.
//!
//! Voxel simulations dominate the runtime; each distinct (structure, binder
//! scale) pair is simulated once and shared between criteria. Checks listed
//! as known conflicts print FAIL without failing the run.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use porocell::biot::{biot_coefficients, longitudinal_velocities, BiotMedium};
use porocell::bubbly::{bubbly_phase_velocity, log_space, BubblePopulation, BubblyLiquid};
use porocell::cellmodel::{
    binder_degradation_sweep, derive_layer_thicknesses, layer_tofs, lithium_loss_effects,
    reference_electrode, stack_tof, AgeingScenario, CellStack, ElectrodeVelocity, LayerKind,
    LossMechanism, MicrosimElectrodes, Porosities, StackVolumes,
};
use porocell::cli::{execute, Cli};
use porocell::materials::{builtin_compositions, builtin_library, names, MaterialSpec};
use porocell::microsim::{
    dual_end_speed, generate_electrode, generate_separator, measure_speed, run_simulation,
    with_duration, EndBoundary, Lattice, MicrostructureSpec, Picking, Simulation, SimulationConfig,
    VoxelGrid, DEFAULT_DURATION, DEFAULT_SEPARATOR_PERIOD,
};
use porocell::waveform::{pearson_correlation, PulseSpec};

/// Voxel sizes requested for each reference microstructure, m.
const ANODE_H: f64 = 1e-6 / 1.5;
const CATHODE_H: f64 = 1e-6 / 1.3;
const ANODE_BCC_H: f64 = 0.75e-6;
const CATHODE_BCC_H: f64 = 1e-6;
const CATHODE_3UM_H: f64 = 1e-6 / 3.0;

#[derive(Default)]
struct Report {
    lines: Vec<(String, bool, bool)>,
}

impl Report {
    fn check(&mut self, id: &str, pass: bool, detail: String) {
        self.record(id, pass, false, detail);
    }

    /// A check that cannot pass with the published inputs.
    fn known(&mut self, id: &str, pass: bool, detail: String) {
        self.record(id, pass, true, detail);
    }

    fn record(&mut self, id: &str, pass: bool, known: bool, detail: String) {
        let tag = match (pass, known) {
            (true, _) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "FAIL (known conflict)",
        };
        println!("{tag} [{id}] {detail}");
        self.lines.push((id.to_string(), pass, known));
    }

    fn unexpected_failures(&self) -> Vec<&str> {
        self.lines
            .iter()
            .filter(|(_, p, k)| !p && !k)
            .map(|(id, _, _)| id.as_str())
            .collect()
    }
}

fn within(x: f64, target: f64, rel: f64) -> bool {
    (x / target - 1.0).abs() <= rel
}

fn pct(x: f64, reference: f64) -> f64 {
    100.0 * (x / reference - 1.0)
}

fn lib(name: &str) -> MaterialSpec {
    builtin_library()
        .lookup(name)
        .expect("builtin material")
        .clone()
}

/// Electrode speeds, each distinct structure and binder scale simulated once.
struct Speeds {
    cache: RefCell<BTreeMap<(String, u64), f64>>,
}

impl Speeds {
    fn get(&self, label: &str, spec: &MicrostructureSpec, binder_scale: f64) -> f64 {
        let key = (label.to_string(), binder_scale.to_bits());
        if let Some(v) = self.cache.borrow().get(&key) {
            return *v;
        }
        let t0 = Instant::now();
        let solver = MicrosimElectrodes::new(spec.clone(), spec.clone());
        let v = solver
            .velocity(LayerKind::Anode, binder_scale)
            .expect("electrode simulation");
        let (_, g) = generate_electrode(spec).expect("geometry");
        println!(
            "       run {label} binder×{binder_scale}: {v:.1} m/s (l = {}, a = {}, h = {:.4} µm, solid {:.4}, binder {:.4}; {:.0} s)",
            g.cell_voxels,
            g.particle_voxels,
            g.voxel_size * 1e6,
            g.solid_fraction,
            g.binder_fraction_of_solid,
            t0.elapsed().as_secs_f64()
        );
        self.cache.borrow_mut().insert(key, v);
        v
    }
}

/// Sweep solver over the shared cache.
struct Sweep<'a> {
    speeds: &'a Speeds,
    anode: MicrostructureSpec,
    cathode: MicrostructureSpec,
}

impl ElectrodeVelocity for Sweep<'_> {
    fn velocity(&self, electrode: LayerKind, binder_scale: f64) -> porocell::Result<f64> {
        Ok(match electrode {
            LayerKind::Anode => self.speeds.get("anode-sc", &self.anode, binder_scale),
            _ => self.speeds.get("cathode-sc", &self.cathode, binder_scale),
        })
    }
}

fn electrode(kind: LayerKind, lattice: Lattice, particle: f64, h: f64) -> MicrostructureSpec {
    reference_electrode(kind, lattice, particle, h).expect("reference electrode")
}

fn criterion_1(r: &mut Report) {
    let pp = lib(names::PP).elastic().unwrap();
    let el = lib(names::ELECTROLYTE);
    let build = || {
        let mut m = BiotMedium::with_suspension_frame(
            0.4,
            pp.bulk_modulus(),
            pp.mu,
            el.bulk_modulus.unwrap(),
            pp.density,
            el.density,
        )
        .unwrap();
        m.tortuosity = 1.75;
        longitudinal_velocities(&biot_coefficients(&m).unwrap()).unwrap()
    };
    let v = build();
    let n = 1000;
    let t0 = Instant::now();
    let mut sink = 0.0;
    for _ in 0..n {
        sink += std::hint::black_box(build()).c_fast;
    }
    let per = t0.elapsed() / n;
    assert!(sink > 0.0);
    r.check(
        "1 biot c_fast",
        within(v.c_fast, 1345.4, 0.01),
        format!(
            "{:.1} m/s vs 1345.4 ± 1% ({:+.2}%)",
            v.c_fast,
            pct(v.c_fast, 1345.4)
        ),
    );
    r.check(
        "1 biot runtime",
        per < Duration::from_millis(1),
        format!("{:.1} µs per solve (< 1 ms)", per.as_secs_f64() * 1e6),
    );
}

fn criterion_2(r: &mut Report) {
    let st = CellStack::reference_cell();
    let expect = [7.97, 9.53, 1.88, 0.17, 0.93];
    let tofs = layer_tofs(&st);
    let worst = tofs
        .iter()
        .zip(expect)
        .map(|((_, t), e)| (t * 1e6 - e).abs())
        .fold(0.0, f64::max);
    let listed: Vec<String> = tofs
        .iter()
        .map(|(k, t)| format!("{k} {:.3}", t * 1e6))
        .collect();
    r.check(
        "2 layer ToFs",
        worst <= 0.01,
        format!("{} µs; worst |Δ| {worst:.4} µs (≤ 0.01)", listed.join(", ")),
    );
    let total = stack_tof(&st) * 1e6;
    r.check(
        "2 total ToF",
        (total - 20.47).abs() <= 0.05,
        format!("{total:.3} µs vs 20.47 ± 0.05"),
    );

    let comps = builtin_compositions();
    let vols = StackVolumes::from_compositions(
        &comps["cell"],
        &comps["anode_solid"],
        &comps["cathode_solid"],
    )
    .unwrap();
    let d = derive_layer_thicknesses(&vols, &Porosities::default(), st.total_thickness).unwrap();
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for l in &st.layers {
        let e = pct(d.get(l.kind), l.thickness);
        worst = worst.max(e.abs());
        parts.push(format!(
            "{} {:.2} mm ({e:+.1}%)",
            l.kind,
            d.get(l.kind) * 1e3
        ));
    }
    // The Al/Cu thickness ratio is fixed by the weight list at
    // (w_Al/ρ_Al)/(w_Cu/ρ_Cu) = 5.97 whatever the porosities; the reference stack has 7.62.
    r.known(
        "2 derived thicknesses",
        worst <= 2.0,
        format!("{}; worst {worst:.1}% (≤ 2%)", parts.join(", ")),
    );
}

fn separator_speed(h: f64) -> f64 {
    let (g, _) = generate_separator(
        0.4,
        lib(names::PP),
        lib(names::ELECTROLYTE),
        DEFAULT_SEPARATOR_PERIOD,
        h,
        1.2e-3,
    )
    .unwrap();
    let cfg = with_duration(&g, &SimulationConfig::default(), DEFAULT_DURATION).unwrap();
    dual_end_speed(&g, &cfg, Picking::default()).unwrap()
}

fn criterion_3(
    r: &mut Report,
    speeds: &Speeds,
    anode: &MicrostructureSpec,
    cathode: &MicrostructureSpec,
) {
    for (label, spec, target) in [("anode-sc", anode, 1154.8), ("cathode-sc", cathode, 1145.5)] {
        let v = speeds.get(label, spec, 1.0);
        r.check(
            &format!("3 fresh {label}"),
            within(v, target, 0.05),
            format!("{v:.1} m/s vs {target} ± 5% ({:+.2}%)", pct(v, target)),
        );
    }
    let t0 = Instant::now();
    let v = separator_speed(1e-6);
    println!(
        "       run separator h 1 µm: {v:.1} m/s ({:.0} s)",
        t0.elapsed().as_secs_f64()
    );
    r.check(
        "3 fresh separator",
        within(v, 1353.7, 0.05),
        format!("{v:.1} m/s vs 1353.7 ± 5% ({:+.2}%)", pct(v, 1353.7)),
    );
}

fn criterion_4(
    r: &mut Report,
    speeds: &Speeds,
    anode: &MicrostructureSpec,
    cathode: &MicrostructureSpec,
) {
    let aged = 0.25;
    for (label, spec, target) in [("anode-sc", anode, 960.3), ("cathode-sc", cathode, 966.0)] {
        let v = speeds.get(label, spec, aged);
        r.check(
            &format!("4 aged {label}"),
            within(v, target, 0.05),
            format!("{v:.1} m/s vs {target} ± 5% ({:+.2}%)", pct(v, target)),
        );
    }
    let variants = [
        (
            "anode-bcc",
            "anode-sc",
            electrode(LayerKind::Anode, Lattice::BodyCentered, 10e-6, ANODE_BCC_H),
            anode,
            [1.5, 3.2],
        ),
        (
            "cathode-bcc",
            "cathode-sc",
            electrode(
                LayerKind::Cathode,
                Lattice::BodyCentered,
                10e-6,
                CATHODE_BCC_H,
            ),
            cathode,
            [3.5, -1.5],
        ),
        (
            "cathode-3um",
            "cathode-sc",
            electrode(
                LayerKind::Cathode,
                Lattice::SimpleCubic,
                3e-6,
                CATHODE_3UM_H,
            ),
            cathode,
            [0.3, 2.0],
        ),
    ];
    for (label, base_label, spec, base, deltas) in variants {
        for (state, scale, target) in [("fresh", 1.0, deltas[0]), ("aged", aged, deltas[1])] {
            let d = pct(
                speeds.get(label, &spec, scale),
                speeds.get(base_label, base, scale),
            );
            r.check(
                &format!("4 {state} {label} vs {base_label}"),
                (d - target).abs() <= 3.0,
                format!("{d:+.2}% vs {target:+.1}% ± 3 pp"),
            );
        }
    }
}

fn criterion_5(
    r: &mut Report,
    speeds: &Speeds,
    anode: &MicrostructureSpec,
    cathode: &MicrostructureSpec,
) {
    let sweep = Sweep {
        speeds,
        anode: anode.clone(),
        cathode: cathode.clone(),
    };
    let st = CellStack::reference_cell();
    let rows = binder_degradation_sweep(&st, &[0.0, 0.25, 0.5, 0.75], &sweep).unwrap();
    let curve: Vec<String> = rows
        .iter()
        .map(|w| format!("{:.2}→{:+.2}%", w.reduction, w.delta_tof_pct))
        .collect();
    r.check(
        "5 sweep r=0 exact",
        rows[0].delta_tof_pct == 0.0 && rows[0].tof == stack_tof(&st),
        "ΔToF 0 and fresh ToF bit-exact".into(),
    );
    let last = rows.last().unwrap().delta_tof_pct;
    r.check(
        "5 sweep r=0.75",
        (last - 16.5).abs() <= 2.0,
        format!("{last:+.2}% vs +16.5 ± 2 pp"),
    );
    let mono = rows.windows(2).all(|w| w[1].tof > w[0].tof);
    r.check("5 sweep monotone", mono, curve.join(", "));
}

fn graphite_block(h: f64) -> (VoxelGrid, SimulationConfig) {
    let nx = (40e-3 / h).round() as usize;
    let g = VoxelGrid::uniform([nx, 1, 1], h, lib(names::GRAPHITE)).unwrap();
    let base = SimulationConfig {
        receiver_planes: vec![20e-3, 30e-3],
        ..SimulationConfig::default()
    };
    let cfg = with_duration(&g, &base, 12e-6).unwrap();
    (g, cfg)
}

fn criterion_6(r: &mut Report) {
    let e = lib(names::GRAPHITE).elastic().unwrap();
    let oracle = ((e.bulk_modulus() + 4.0 * e.mu / 3.0) / e.density).sqrt();
    let speed = |h: f64| {
        let (g, cfg) = graphite_block(h);
        measure_speed(&run_simulation(&g, &cfg).unwrap(), Picking::default()).unwrap()
    };
    let coarse = speed(10e-6);
    r.check(
        "6 graphite speed",
        within(coarse, oracle, 0.02),
        format!(
            "{coarse:.1} m/s vs {oracle:.1} ± 2% ({:+.3}%)",
            pct(coarse, oracle)
        ),
    );
    let fine = speed(5e-6);
    r.check(
        "6 grid refinement",
        within(fine, coarse, 0.01),
        format!(
            "h 10 → 5 µm: {coarse:.1} → {fine:.1} m/s ({:+.3}%, < 1%)",
            pct(fine, coarse)
        ),
    );

    let (g, cfg) = graphite_block(10e-6);
    let mut sim = Simulation::new(
        &g,
        &SimulationConfig {
            end: EndBoundary::Rigid,
            ..cfg
        },
    )
    .unwrap();
    let off = PulseSpec::default().duration();
    while sim.time() <= off {
        sim.step();
    }
    let e0 = sim.energy();
    // Long enough for the pulse to reflect off the rigid end.
    while sim.time() <= off + 20e-6 {
        sim.step();
    }
    let e1 = sim.energy();
    r.check(
        "6 energy after shutoff",
        within(e1, e0, 0.01),
        format!("{e0:.4e} → {e1:.4e} J ({:+.4}%, < 1%)", pct(e1, e0)),
    );
}

fn criterion_7(r: &mut Report) {
    let l = BubblyLiquid::water();
    let mut exact = true;
    for radius in [1e-6, 1e-5, 1e-4] {
        for f in [1e5, 1e6] {
            let v = bubbly_phase_velocity(
                &l,
                &BubblePopulation::new(radius, 0.0).unwrap(),
                2.0 * PI * f,
            )
            .unwrap();
            exact &= v.phase_velocity == l.sound_speed && v.attenuation == 0.0;
        }
    }
    r.check(
        "7 empty population identity",
        exact,
        "c_m = c exactly with n = 0".into(),
    );

    let mut worst: (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for radius in log_space(2.5e-6, 1e-3, 15) {
        for f in log_space(1e5, 1e7, 9) {
            for beta in log_space(1e-9, 1e-3, 7) {
                let pop = BubblePopulation::from_void_fraction(radius, beta).unwrap();
                let d = (1.0
                    - bubbly_phase_velocity(&l, &pop, 2.0 * PI * f)
                        .unwrap()
                        .phase_velocity
                        / l.sound_speed)
                    .abs();
                if d > worst.0 {
                    worst = (d, radius, f, beta);
                }
            }
        }
    }
    r.check(
        "7 threshold radius",
        worst.0 < 0.01,
        format!(
            "max |1 − c_m/c| = {:.2e} at r {:.2e} m, f {:.2e} Hz, β {:.0e} (< 1%)",
            worst.0, worst.1, worst.2, worst.3
        ),
    );

    // Lossless, tension-free host at 1 Hz against Wood's mixture law with an
    // adiabatic gas.
    let lossless = BubblyLiquid {
        surface_tension: 0.0,
        viscosity: 0.0,
        gas_thermal_diffusivity: 1e-30,
        ..l.clone()
    };
    let mut worst = 0.0f64;
    for (radius, beta) in [(1e-4, 1e-5), (1e-4, 1e-4), (1e-5, 1e-3), (1e-3, 5e-3)] {
        let pop = BubblePopulation::from_void_fraction(radius, beta).unwrap();
        let v = bubbly_phase_velocity(&lossless, &pop, 2.0 * PI)
            .unwrap()
            .phase_velocity;
        let (rho, c) = (l.density, l.sound_speed);
        let compliance =
            beta / (l.specific_heat_ratio * l.ambient_pressure) + (1.0 - beta) / (rho * c * c);
        let wood = 1.0 / ((1.0 - beta) * rho * compliance).sqrt();
        worst = worst.max((v / wood - 1.0).abs());
    }
    r.check(
        "7 Wood limit",
        worst < 0.01,
        format!("max relative deviation {worst:.2e} (< 1%)"),
    );
}

fn criterion_8(r: &mut Report) {
    let st = CellStack::reference_cell();
    let sei =
        lithium_loss_effects(&AgeingScenario::lithium_loss(LossMechanism::Sei, 0.1), &st).unwrap();
    let checks = [
        ("anode particle", sei.anode.particle_size_pct, 4.2, 0.05),
        ("cathode modulus", sei.cathode.modulus_pct, -2.0, 0.02),
        (
            "cathode particle",
            sei.cathode.particle_size_pct,
            -0.167,
            0.02,
        ),
        (
            "cathode thickness",
            sei.cathode.layer_thickness_pct,
            -0.135,
            0.02,
        ),
    ];
    for (what, got, want, tol) in checks {
        r.check(
            &format!("8 SEI {what}"),
            (got - want).abs() <= tol,
            format!("{got:+.4}% vs {want:+}% ± {tol} pp"),
        );
    }
    let plating = lithium_loss_effects(
        &AgeingScenario::lithium_loss(LossMechanism::Plating, 0.1),
        &st,
    )
    .unwrap();
    r.check(
        "8 plating anode particle",
        (plating.anode.particle_size_pct - 1.1).abs() <= 0.05,
        format!(
            "{:+.4}% vs +1.1% ± 0.05 pp (prose value 0.6%)",
            plating.anode.particle_size_pct
        ),
    );
    let lam =
        lithium_loss_effects(&AgeingScenario::lithium_loss(LossMechanism::Lam, 0.1), &st).unwrap();
    for (what, got, want) in [
        ("cathode", lam.cathode.layer_thickness_pct, -0.192),
        ("anode", lam.anode.layer_thickness_pct, 0.233),
    ] {
        r.check(
            &format!("8 LAM {what} thickness"),
            (got - want).abs() <= 0.02,
            format!("{got:+.4}% vs {want:+}% ± 0.02 pp"),
        );
    }
    let mut zero = true;
    for m in [
        LossMechanism::Sei,
        LossMechanism::Plating,
        LossMechanism::Lam,
    ] {
        let o = lithium_loss_effects(&AgeingScenario::lithium_loss(m, 0.0), &st).unwrap();
        for d in [o.anode, o.cathode] {
            zero &=
                d.particle_size_pct == 0.0 && d.layer_thickness_pct == 0.0 && d.modulus_pct == 0.0;
        }
        zero &= o.separator_thickness_pct == 0.0 && o.tof == stack_tof(&st);
    }
    r.check(
        "8 zero loss",
        zero,
        "all deltas exactly zero, ToF unchanged".into(),
    );
}

fn two_pass_pcc(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

fn criterion_9(r: &mut Report) {
    let x: Vec<f64> = (0..500).map(|i| 20e-6 * (1.0 + 1e-3 * i as f64)).collect();
    let y: Vec<f64> = x.iter().map(|v| -v).collect();
    let p = pearson_correlation(&x, &y).unwrap();
    r.check(
        "9 y = −x",
        (p + 1.0).abs() <= 1e-12,
        format!("ρ + 1 = {:.1e}", p + 1.0),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(2..300);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1e3..1e3)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| 0.3 * v + rng.gen_range(-500.0..500.0))
            .collect();
        worst = worst.max((pearson_correlation(&x, &y).unwrap() - two_pass_pcc(&x, &y)).abs());
    }
    r.check(
        "9 two-pass oracle",
        worst <= 1e-12,
        format!("max |Δρ| {worst:.1e} over 200 random series"),
    );
    let log = porocell::cli::cycle::SyntheticLog::default()
        .generate()
        .unwrap();
    let c = porocell::cli::cycle::correlate(&log).unwrap();
    r.check(
        "9 synthetic ageing series",
        c.pcc < -0.9,
        format!(
            "ρ = {:.4} over {} cycles (capacity {:+.1}%, ToF {:+.1}%; < −0.9)",
            c.pcc, c.records, c.capacity.change_pct, c.tof.change_pct
        ),
    );
}

fn criterion_10(r: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("cycles.csv");
    let records = porocell::cli::cycle::SyntheticLog {
        cycles: 50,
        ..Default::default()
    }
    .generate()
    .unwrap();
    std::fs::write(&log, porocell::cli::cycle::emit_cycle_log(&records)).unwrap();
    let log_arg = format!("analyze.cycle_log={}", log.display());
    let uniform = [
        "microsim.structure=uniform",
        "microsim.voxel_size_um=10",
        "microsim.length_mm=10",
        "microsim.receivers_mm=[4.0,7.0]",
        "microsim.duration_us=4",
    ];
    let separator = [
        "microsim.structure=separator",
        "microsim.length_mm=0.3",
        "microsim.receivers_mm=[0.1,0.2]",
        "microsim.duration_us=0.5",
        "microsim.dump_grid=true",
    ];
    let runs: Vec<(&str, Vec<String>)> = vec![
        ("materials", vec![]),
        ("biot", vec![]),
        ("bubbly", vec![]),
        ("microsim", uniform.iter().map(|s| s.to_string()).collect()),
        (
            "microsim",
            separator.iter().map(|s| s.to_string()).collect(),
        ),
        ("stack", vec![]),
        (
            "ageing",
            vec![
                "ageing.lithium_loss.mechanism=lam".into(),
                "ageing.lithium_loss.fraction=0.1".into(),
            ],
        ),
        ("analyze", vec![log_arg]),
    ];
    for (cmd, sets) in runs {
        let mut args = vec!["porocell".to_string(), cmd.to_string()];
        for s in &sets {
            args.push("--set".into());
            args.push(s.clone());
        }
        let cli = Cli::try_parse_from(&args).unwrap();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| execute(&cli).unwrap())
        };
        let reference = run(1);
        let same = [1, 2, 4].into_iter().all(|t| run(t) == reference);
        let bytes: usize = reference.iter().map(|a| a.bytes().len()).sum();
        r.check(
            &format!("10 {cmd} {}", sets.first().map_or("", |s| s.as_str())),
            same,
            format!("{bytes} bytes identical over 4 runs at 1, 1, 2, 4 threads"),
        );
    }
}

fn main() {
    // `cargo test -- --list` and filters should not trigger the long run.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let t0 = Instant::now();
    let mut r = Report::default();
    criterion_1(&mut r);
    criterion_2(&mut r);
    criterion_7(&mut r);
    criterion_8(&mut r);
    criterion_9(&mut r);
    criterion_10(&mut r);
    criterion_6(&mut r);
    let speeds = Speeds {
        cache: RefCell::new(BTreeMap::new()),
    };
    let anode = electrode(LayerKind::Anode, Lattice::SimpleCubic, 10e-6, ANODE_H);
    let cathode = electrode(LayerKind::Cathode, Lattice::SimpleCubic, 10e-6, CATHODE_H);
    criterion_3(&mut r, &speeds, &anode, &cathode);
    criterion_5(&mut r, &speeds, &anode, &cathode);
    criterion_4(&mut r, &speeds, &anode, &cathode);
    let bad = r.unexpected_failures();
    println!(
        "acceptance: {} checks, {} failed ({} known conflicts), {:.0} s",
        r.lines.len(),
        r.lines.iter().filter(|l| !l.1).count(),
        r.lines.iter().filter(|l| !l.1 && l.2).count(),
        t0.elapsed().as_secs_f64()
    );
    if !bad.is_empty() {
        eprintln!("unexpected failures: {}", bad.join(", "));
        std::process::exit(1);
    }
}
