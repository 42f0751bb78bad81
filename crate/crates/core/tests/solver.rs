use porocell::materials::{builtin_library, names, MaterialSpec};
use porocell::microsim::{
    cfl_limit, dual_end_speed, generate_separator, run_dual_end, run_simulation, with_duration,
    EndBoundary, LateralBoundary, Picking, Simulation, SimulationConfig, VoxelGrid,
    DEFAULT_SEPARATOR_PERIOD,
};
use porocell::waveform::{PulseSpec, Trace};
use porocell::Error;

fn lib(name: &str) -> MaterialSpec {
    builtin_library().lookup(name).unwrap().clone()
}

fn short_separator() -> VoxelGrid {
    generate_separator(
        0.4,
        lib(names::PP),
        lib(names::ELECTROLYTE),
        DEFAULT_SEPARATOR_PERIOD,
        1e-6,
        0.4e-3,
    )
    .unwrap()
    .0
}

fn short_config(grid: &VoxelGrid, lateral: LateralBoundary) -> SimulationConfig {
    let base = SimulationConfig {
        receiver_planes: vec![0.15e-3, 0.35e-3],
        lateral,
        ..SimulationConfig::default()
    };
    with_duration(grid, &base, 1.5e-6).unwrap()
}

#[test]
fn oversized_time_step_is_a_cfl_error() {
    let g = VoxelGrid::uniform([50, 2, 2], 1e-5, lib(names::GRAPHITE)).unwrap();
    let limit = cfl_limit(&g).unwrap();
    let cfg = SimulationConfig {
        dt: Some(1.01 * limit),
        n_steps: 10,
        ..SimulationConfig::default()
    };
    let cfg = SimulationConfig {
        receiver_planes: vec![1e-4],
        ..cfg
    };
    match run_simulation(&g, &cfg) {
        Err(Error::Cfl { dt, limit: l }) => assert!(dt > l),
        other => panic!("expected CFL error, got {other:?}"),
    }
}

#[test]
fn energy_is_conserved_after_source_shutoff() {
    for end in [EndBoundary::Rigid, EndBoundary::Free] {
        let g = VoxelGrid::uniform([600, 2, 2], 1e-5, lib(names::PP)).unwrap();
        let cfg = SimulationConfig {
            receiver_planes: vec![1e-3],
            end,
            ..SimulationConfig::default()
        };
        let mut sim = Simulation::new(&g, &cfg).unwrap();
        let off = PulseSpec::default().duration();
        while sim.time() <= off {
            sim.step();
        }
        let e0 = sim.energy();
        assert!(e0 > 0.0);
        // 6 mm at 1.7 km/s: several end reflections.
        while sim.time() <= off + 15e-6 {
            sim.step();
        }
        let e1 = sim.energy();
        assert!((e1 / e0 - 1.0).abs() < 0.01, "{end:?}: {e0:e} → {e1:e}");
    }
}

#[test]
fn repeated_runs_are_bit_identical_across_pools() {
    let g = short_separator();
    let cfg = short_config(&g, LateralBoundary::Mirror);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_dual_end(&g, &cfg).unwrap())
    };
    let a = run(1);
    for threads in [1, 2, 3] {
        let b = run(threads);
        for (x, y) in a.traces.iter().zip(&b.traces) {
            assert!(x
                .samples()
                .iter()
                .zip(y.samples())
                .all(|(p, q)| p.to_bits() == q.to_bits()));
        }
    }
}

#[test]
fn lateral_translation_under_periodic_boundaries() {
    let g = short_separator();
    let cfg = short_config(&g, LateralBoundary::Periodic);
    let base = dual_end_speed(&g, &cfg, Picking::default()).unwrap();
    for (dy, dz) in [(1, 0), (3, 2), (5, 6)] {
        let v = dual_end_speed(&g.shifted_lateral(dy, dz), &cfg, Picking::default()).unwrap();
        assert!(
            (v / base - 1.0).abs() < 0.005,
            "shift ({dy}, {dz}): {v} vs {base}"
        );
    }
}

/// Moving-RMS envelope over `w` samples.
fn envelope(t: &Trace, w: usize) -> Vec<f64> {
    let s = t.samples();
    let mut out = vec![0.0; s.len()];
    let mut acc = 0.0;
    for i in 0..s.len() {
        acc += s[i] * s[i];
        if i >= w {
            acc -= s[i - w] * s[i - w];
        }
        out[i] = (acc.max(0.0) / w as f64).sqrt();
    }
    out
}

/// Times of the two strongest envelope maxima, in order.
fn two_groups(t: &Trace, w: usize) -> (f64, f64) {
    let e = envelope(t, w);
    let mut peaks: Vec<(usize, f64)> = (1..e.len() - 1)
        .filter(|&i| e[i] >= e[i - 1] && e[i] > e[i + 1])
        .map(|i| (i, e[i]))
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    let (mut a, mut b) = (
        peaks[0].0,
        peaks[1..]
            .iter()
            .find(|p| p.0.abs_diff(peaks[0].0) > 2 * w)
            .unwrap()
            .0,
    );
    if b < a {
        std::mem::swap(&mut a, &mut b);
    }
    (a as f64 * t.dt(), b as f64 * t.dt())
}

#[test]
fn solid_and_fluid_paths_give_two_arrival_groups() {
    // Strut and pore channels running along x: the solid path carries a fast
    // group, the pore fluid a slow one.
    let (ny, nz, nx, h) = (4, 4, 700, 1e-5);
    let mut ids = vec![0u8; nx * ny * nz];
    for k in 0..nz {
        for j in 0..2 {
            for i in 0..nx {
                ids[i + nx * (j + ny * k)] = 1;
            }
        }
    }
    let g = VoxelGrid::new(
        [nx, ny, nz],
        h,
        ids,
        vec![lib(names::ELECTROLYTE), lib(names::PP)],
    )
    .unwrap();
    let source = PulseSpec {
        center_frequency: 5e6,
        n_cycles: 3,
        amplitude: 1.0,
    };
    let base = SimulationConfig {
        receiver_planes: vec![2e-3, 5e-3],
        source,
        ..SimulationConfig::default()
    };
    let cfg = with_duration(&g, &base, 8e-6).unwrap();
    let traces = run_dual_end(&g, &cfg).unwrap();
    let w = (0.2e-6 / traces.dt()).round() as usize;
    let (f0, s0) = two_groups(&traces.traces[0], w);
    let (f1, s1) = two_groups(&traces.traces[1], w);
    let dx = traces.positions[1] - traces.positions[0];
    let (fast, slow) = (dx / (f1 - f0), dx / (s1 - s0));
    let fluid = lib(names::ELECTROLYTE).longitudinal_speed().unwrap();
    let solid = lib(names::PP).longitudinal_speed().unwrap();
    // Layers are thin against the wavelength, so compliant walls slow the
    // fluid-borne group below the free-fluid speed; the solid-borne group
    // is loaded by the fluid mass and stays below the bare solid speed.
    assert!(
        slow < fluid && slow > 0.6 * fluid,
        "slow {slow} vs fluid {fluid}"
    );
    assert!(
        fast > 1.2 * fluid && fast < 1.01 * solid,
        "fast {fast} vs solid {solid}"
    );
}
