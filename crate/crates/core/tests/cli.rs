use std::path::Path;
use std::process::{Command, Output};

use porocell::cli::commands::parse_traces_csv;
use porocell::cli::cycle::{emit_cycle_log, parse_cycle_log, SyntheticLog};

fn porocell(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_porocell"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn flat_json(text: &str) -> serde_json::Map<String, serde_json::Value> {
    match serde_json::from_str(text).unwrap() {
        serde_json::Value::Object(m) => m,
        other => panic!("not an object: {other}"),
    }
}

#[test]
fn stack_table3_reproduction() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdout(&porocell(&["stack", "--table3"], dir.path()));
    let rows: Vec<Vec<&str>> = out.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(
        rows[0],
        [
            "layer",
            "porosity",
            "thickness_mm",
            "velocity_m_s",
            "tof_us",
            "derived_thickness_mm"
        ]
    );
    let tof = |layer: &str| -> f64 {
        rows.iter().find(|r| r[0] == layer).unwrap()[4]
            .parse()
            .unwrap()
    };
    for (layer, want) in [
        ("anode", 7.97),
        ("cathode", 9.53),
        ("separator", 1.88),
        ("cu", 0.17),
        ("al", 0.93),
    ] {
        assert!((tof(layer) - want).abs() <= 0.01, "{layer}");
    }
    assert!((tof("total") - 20.47).abs() <= 0.05);
}

#[test]
fn biot_medium_file_and_csv_row() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("separator.toml"),
        "[biot]\nsolid = \"PP\"\nporosity = 0.4\n",
    )
    .unwrap();
    let j = flat_json(&stdout(&porocell(
        &["biot", "--medium", "separator.toml"],
        dir.path(),
    )));
    let fast = j["c_fast_m_s"].as_f64().unwrap();
    assert!((fast / 1345.4 - 1.0).abs() < 0.01, "{fast}");
    for key in [
        "c_slow_m_s",
        "k_pa",
        "c_pa",
        "r_pa",
        "rho11_kg_m3",
        "rho12_kg_m3",
        "rho22_kg_m3",
    ] {
        assert!(j.contains_key(key), "{key}");
    }
    stdout(&porocell(
        &["biot", "--config", "separator.toml", "--out", "b.csv"],
        dir.path(),
    ));
    let csv = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("c_fast_m_s,c_slow_m_s,"));
    let first: f64 = lines[1].split(',').next().unwrap().parse().unwrap();
    assert_eq!(first, fast);
}

#[test]
fn overrides_win_over_file_and_each_other() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("b.toml"), "[biot]\nporosity = 0.3\n").unwrap();
    let run = |extra: &[&str]| {
        let mut args = vec!["biot", "--config", "b.toml"];
        args.extend_from_slice(extra);
        flat_json(&stdout(&porocell(&args, dir.path())))["c_fast_m_s"]
            .as_f64()
            .unwrap()
    };
    let file = run(&[]);
    let set = run(&["--set", "biot.porosity=0.4"]);
    let last = run(&["--set", "biot.porosity=0.5", "--set", "biot.porosity=0.4"]);
    assert_ne!(file, set);
    assert_eq!(set, last);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(porocell(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(porocell(&[], dir.path()).status.code(), Some(2));
    let bad = porocell(&["biot", "--set", "biot.porosity=1.5"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("biot"));
    let missing = porocell(&["stack", "--config", "nope.toml"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
    let unknown = porocell(&["bubbly", "--set", "bubbly.colour=3"], dir.path());
    assert_eq!(unknown.status.code(), Some(1));
    assert_eq!(porocell(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn bubbly_grid_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdout(&porocell(
        &[
            "bubbly",
            "--set",
            "bubbly.radius_m={min=1e-6, max=1e-4, n=3}",
            "--set",
            "bubbly.beta.n=2",
        ],
        dir.path(),
    ));
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("r_m,f_hz,beta,velocity_ratio"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3 * 5 * 2);
    assert!(rows
        .iter()
        .all(|r| r.len() == 4 && r[3] > 0.0 && r[3] <= 1.0 + 1e-9));
}

#[test]
fn microsim_outputs_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    let sets = [
        "microsim.structure=uniform",
        "microsim.material=PP",
        "microsim.voxel_size_um=10",
        "microsim.length_mm=6",
        "microsim.receivers_mm=[2.0,4.0]",
        "microsim.duration_us=5",
        "microsim.dump_grid=true",
    ];
    let mut args = vec!["microsim", "--out", "run"];
    for s in &sets {
        args.extend(["--set", s]);
    }
    stdout(&porocell(&args, dir.path()));
    let run = dir.path().join("run");
    let speed = flat_json(&std::fs::read_to_string(run.join("speed.json")).unwrap());
    let v = speed["speed_m_s"].as_f64().unwrap();
    assert!((v / 1701.85 - 1.0).abs() < 0.02, "{v}");
    let traces = std::fs::read_to_string(run.join("traces.csv")).unwrap();
    let (names, parsed) = parse_traces_csv(&traces).unwrap();
    assert_eq!(names, ["plane_1_pa", "plane_2_pa"]);
    assert_eq!(parsed[0].len(), traces.lines().count() - 1);
    let grid = std::fs::read(run.join("grid.pcel")).unwrap();
    assert_eq!(&grid[..4], b"PCEL");
    assert_eq!(grid.len(), 4 + 12 + 8 + 600 * 4 * 4);

    std::fs::write(
        dir.path().join("a.toml"),
        "[analyze]\ntraces = \"run/traces.csv\"\npositions_mm = [2.0, 4.0]\n",
    )
    .unwrap();
    let a = flat_json(&stdout(&porocell(
        &["analyze", "--config", "a.toml"],
        dir.path(),
    )));
    assert!(a.contains_key("plane_1_pa.pick_s") && a.contains_key("xcorr_delay_s"));
}

#[test]
fn cycle_log_csv_round_trips_through_the_ingester() {
    let dir = tempfile::tempdir().unwrap();
    let records = SyntheticLog::default().generate().unwrap();
    let text = emit_cycle_log(&records);
    assert_eq!(emit_cycle_log(&parse_cycle_log(&text).unwrap()), text);
    std::fs::write(dir.path().join("cycles.csv"), &text).unwrap();
    let a = flat_json(&stdout(&porocell(
        &["analyze", "--set", "analyze.cycle_log=cycles.csv"],
        dir.path(),
    )));
    assert!(a["pcc"].as_f64().unwrap() < -0.9);
    assert_eq!(a["records"].as_f64().unwrap(), 500.0);

    std::fs::write(
        dir.path().join("bad.csv"),
        "cycle,capacity_ah,tof_us\n1,50,20\n2,49,-1\n",
    )
    .unwrap();
    let bad = porocell(
        &["analyze", "--set", "analyze.cycle_log=bad.csv"],
        dir.path(),
    );
    assert_eq!(bad.status.code(), Some(1));
    assert!(
        String::from_utf8_lossy(&bad.stderr).contains("line 3"),
        "{}",
        String::from_utf8_lossy(&bad.stderr)
    );
}

#[test]
fn seed_changes_only_the_synthetic_noise() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str| {
        stdout(&porocell(
            &[
                "analyze",
                "--set",
                "analyze.synthetic.cycles=100",
                "--seed",
                seed,
            ],
            dir.path(),
        ))
    };
    assert_eq!(run("1"), run("1"));
    assert_ne!(run("1"), run("2"));
    // The stack path has no stochastic inputs.
    assert_eq!(
        stdout(&porocell(&["stack", "--seed", "9"], dir.path())),
        stdout(&porocell(&["stack"], dir.path()))
    );
}

#[test]
fn ageing_outcome_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "ageing",
        "--set",
        "ageing.lithium_loss={mechanism=\"lam\", fraction=0.1}",
    ];
    let one = stdout(&porocell(
        &[&args[..], &["--threads", "1"]].concat(),
        dir.path(),
    ));
    let four = stdout(&porocell(
        &[&args[..], &["--threads", "4"]].concat(),
        dir.path(),
    ));
    assert_eq!(one, four);
    let j = flat_json(&one);
    assert!((j["cathode.layer_thickness_pct"].as_f64().unwrap() + 0.192).abs() <= 0.02);
    assert!((j["anode.layer_thickness_pct"].as_f64().unwrap() - 0.233).abs() <= 0.02);
    let t = j["tof_us"].as_f64().unwrap();
    let sum: f64 = ["anode", "cathode", "separator", "cu", "al"]
        .iter()
        .map(|k| {
            j[&format!("{k}.thickness_mm")].as_f64().unwrap()
                / j[&format!("{k}.velocity_m_s")].as_f64().unwrap()
                * 1e3
        })
        .sum();
    assert!((sum - t).abs() < 1e-4, "{sum} vs {t}");
}

#[test]
fn default_electrode_grids_hit_the_binder_share() {
    use porocell::cellmodel::{reference_electrode, LayerKind};
    use porocell::cli::commands::{MicrosimSection, Structure};
    use porocell::microsim::{generate_electrode, Lattice};
    for (structure, kind) in [
        (Structure::Anode, LayerKind::Anode),
        (Structure::Cathode, LayerKind::Cathode),
    ] {
        let s = MicrosimSection {
            structure,
            ..MicrosimSection::default()
        };
        let spec = reference_electrode(kind, Lattice::SimpleCubic, 10e-6, s.voxel_size()).unwrap();
        let (_, g) = generate_electrode(&spec).unwrap();
        let want = spec.binder_volume_fraction_of_solid;
        assert!(
            (g.binder_fraction_of_solid - want).abs() < 1e-3,
            "{kind}: {} vs {want}",
            g.binder_fraction_of_solid
        );
        assert!(
            (g.solid_fraction - (1.0 - spec.porosity)).abs() < 0.01,
            "{kind}: {}",
            g.solid_fraction
        );
    }
}
