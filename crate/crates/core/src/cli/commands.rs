//! Subcommand bodies. Each returns the files it would write, keyed by name.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::config::ConfigTree;
use super::cycle::{correlate, ingest_cycle_log, SyntheticLog};
use super::format::{fmt6, Csv, FlatJson};
use crate::biot::{biot_coefficients, default_tortuosity, longitudinal_velocities, BiotMedium};
use crate::bubbly::{
    log_space, surface_csv, velocity_reduction_surface, BubblyLiquid, ThermalDamping,
};
use crate::cellmodel::{
    apply_binder_reduction, binder_degradation_sweep, derive_layer_thicknesses, layer_tofs,
    lithium_loss_effects, reference_electrode, stack_tof, AgeingScenario, CellStack, LayerKind,
    LayerSpec, MicrosimElectrodes, Porosities, StackVolumes, VelocitySource,
};
use crate::error::{config, Result};
use crate::materials::{
    binder_fraction_of_solid, names, weight_to_volume_fractions, MaterialSpec, GPA,
};
use crate::microsim::{
    generate_electrode, generate_separator, measure_speed, run_dual_end, run_simulation,
    with_duration, EndBoundary, LateralBoundary, Lattice, MicrostructureSpec, Picking,
    SimulationConfig, TraceSet, VoxelGrid, DEFAULT_DURATION, DEFAULT_SEPARATOR_PERIOD,
};
use crate::waveform::{
    cross_correlation_delay, pick_first_arrival, PulseSpec, Trace, DEFAULT_THRESHOLD_FRACTION,
};

const MODULE: &str = "cli";

/// Named output of a subcommand.
#[derive(Debug, Clone, PartialEq)]
pub enum Artifact {
    Text { name: String, body: String },
    Binary { name: String, body: Vec<u8> },
}

impl Artifact {
    pub fn text(name: &str, body: String) -> Self {
        Self::Text {
            name: name.into(),
            body,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Self::Text { name, .. } | Self::Binary { name, .. } => name,
        }
    }

    pub fn bytes(&self) -> &[u8] {
        match self {
            Self::Text { body, .. } => body.as_bytes(),
            Self::Binary { body, .. } => body,
        }
    }
}

// ---------------------------------------------------------------- materials

pub fn materials(cfg: &ConfigTree) -> Result<Vec<Artifact>> {
    cfg.check_sections(&["materials", "compositions"])?;
    let mc = cfg.materials()?;
    let mut j = FlatJson::default();
    for m in mc.catalog.iter() {
        let p = &m.name;
        j.num(format!("{p}.density_kg_m3"), m.density);
        if let Ok(e) = m.elastic() {
            j.num(format!("{p}.bulk_pa"), e.bulk_modulus())
                .num(format!("{p}.shear_pa"), e.mu);
            j.num(format!("{p}.longitudinal_m_s"), e.longitudinal_speed());
        }
    }
    for (name, comp) in &mc.compositions {
        for (m, v) in weight_to_volume_fractions(comp)? {
            j.num(format!("{name}.{m}.volume_fraction"), v);
        }
    }
    for (solid, active) in [
        ("anode_solid", names::GRAPHITE),
        ("cathode_solid", names::LFP),
    ] {
        if let Some(c) = mc.compositions.get(solid) {
            j.num(
                format!("{solid}.binder_fraction"),
                binder_fraction_of_solid(c, active)?,
            );
        }
    }
    Ok(vec![Artifact::text("materials.json", j.render())])
}

// --------------------------------------------------------------------- biot

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BiotSection {
    pub solid: String,
    pub fluid: String,
    pub porosity: f64,
    pub tortuosity: Option<f64>,
    /// Drained frame moduli; the suspension estimate when absent.
    pub frame_bulk_gpa: Option<f64>,
    pub frame_shear_gpa: Option<f64>,
    pub format: OutputFormat,
}

impl Default for BiotSection {
    fn default() -> Self {
        Self {
            solid: names::PP.into(),
            fluid: names::ELECTROLYTE.into(),
            porosity: 0.4,
            tortuosity: None,
            frame_bulk_gpa: None,
            frame_shear_gpa: None,
            format: OutputFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

pub fn biot(cfg: &ConfigTree, csv_out: bool) -> Result<Vec<Artifact>> {
    cfg.check_sections(&["materials", "compositions", "biot"])?;
    let s: BiotSection = cfg.section("biot")?;
    let mc = cfg.materials()?;
    let solid = mc.catalog.lookup(&s.solid)?.elastic()?;
    let fluid = mc.catalog.lookup(&s.fluid)?;
    let fluid_bulk = fluid
        .bulk_modulus
        .ok_or_else(|| config(MODULE, format!("fluid `{}` has no bulk modulus", s.fluid)))?;
    let mut m = BiotMedium::with_suspension_frame(
        s.porosity,
        solid.bulk_modulus(),
        solid.mu,
        fluid_bulk,
        solid.density,
        fluid.density,
    )?;
    m.tortuosity = s
        .tortuosity
        .unwrap_or_else(|| default_tortuosity(s.porosity));
    if let Some(k) = s.frame_bulk_gpa {
        m.frame_bulk = k * GPA;
    }
    if let Some(g) = s.frame_shear_gpa {
        m.frame_shear = g * GPA;
    }
    m.validate()?;
    let co = biot_coefficients(&m)?;
    let sol = longitudinal_velocities(&co)?;
    let fields = [
        ("c_fast_m_s", sol.c_fast),
        ("c_slow_m_s", sol.c_slow),
        ("k_pa", co.k),
        ("c_pa", co.c),
        ("r_pa", co.r),
        ("rho11_kg_m3", co.rho11),
        ("rho12_kg_m3", co.rho12),
        ("rho22_kg_m3", co.rho22),
    ];
    let format = if csv_out { OutputFormat::Csv } else { s.format };
    Ok(vec![match format {
        OutputFormat::Json => {
            let mut j = FlatJson::default();
            for (k, v) in fields {
                j.num(k, v);
            }
            j.num("tortuosity", m.tortuosity)
                .num("frame_bulk_pa", m.frame_bulk)
                .num("frame_shear_pa", m.frame_shear);
            Artifact::text("biot.json", j.render())
        }
        OutputFormat::Csv => {
            let mut csv = Csv::new(&fields.map(|f| f.0));
            csv.row(&fields.map(|f| f.1));
            Artifact::text("biot.csv", csv.finish())
        }
    }])
}

// ------------------------------------------------------------------- bubbly

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRange {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl LogRange {
    fn values(&self, what: &str) -> Result<Vec<f64>> {
        if !(self.min > 0.0 && self.max >= self.min && self.n >= 1) {
            return Err(config(
                MODULE,
                format!("{what} range needs 0 < min ≤ max and n ≥ 1"),
            ));
        }
        Ok(log_space(self.min, self.max, self.n))
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiquidPreset {
    #[default]
    Water,
    Electrolyte,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BubblySection {
    pub liquid: LiquidPreset,
    pub sound_speed: Option<f64>,
    pub density: Option<f64>,
    pub surface_tension: Option<f64>,
    pub viscosity: Option<f64>,
    pub ambient_pressure: Option<f64>,
    pub specific_heat_ratio: Option<f64>,
    pub gas_thermal_diffusivity: Option<f64>,
    pub thermal_damping: ThermalDamping,
    pub radius_m: LogRange,
    pub frequency_hz: LogRange,
    pub beta: LogRange,
}

impl Default for BubblySection {
    fn default() -> Self {
        Self {
            liquid: LiquidPreset::Water,
            sound_speed: None,
            density: None,
            surface_tension: None,
            viscosity: None,
            ambient_pressure: None,
            specific_heat_ratio: None,
            gas_thermal_diffusivity: None,
            thermal_damping: ThermalDamping::Reference,
            radius_m: LogRange {
                min: 5e-7,
                max: 1e-4,
                n: 12,
            },
            frequency_hz: LogRange {
                min: 1e5,
                max: 1e7,
                n: 5,
            },
            beta: LogRange {
                min: 1e-6,
                max: 1e-3,
                n: 4,
            },
        }
    }
}

pub fn bubbly(cfg: &ConfigTree) -> Result<Vec<Artifact>> {
    cfg.check_sections(&["materials", "compositions", "bubbly"])?;
    let s: BubblySection = cfg.section("bubbly")?;
    let mut l = match s.liquid {
        LiquidPreset::Water => BubblyLiquid::water(),
        LiquidPreset::Electrolyte => BubblyLiquid::electrolyte(),
    };
    let set = |dst: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *dst = v;
        }
    };
    set(&mut l.sound_speed, s.sound_speed);
    set(&mut l.density, s.density);
    set(&mut l.surface_tension, s.surface_tension);
    set(&mut l.viscosity, s.viscosity);
    set(&mut l.ambient_pressure, s.ambient_pressure);
    set(&mut l.specific_heat_ratio, s.specific_heat_ratio);
    set(&mut l.gas_thermal_diffusivity, s.gas_thermal_diffusivity);
    l.thermal_damping = s.thermal_damping;
    l.validate()?;
    let pts = velocity_reduction_surface(
        &l,
        &s.radius_m.values("radius")?,
        &s.frequency_hz.values("frequency")?,
        &s.beta.values("beta")?,
    )?;
    Ok(vec![Artifact::text("bubbly.csv", surface_csv(&pts, fmt6))])
}

// ----------------------------------------------------------------- microsim

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    #[default]
    Anode,
    Cathode,
    Separator,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndMode {
    /// Mean of rigid-end and free-end runs.
    #[default]
    Dual,
    Rigid,
    Free,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MicrosimSection {
    pub structure: Structure,
    pub lattice: Lattice,
    pub particle_size_um: f64,
    pub porosity: Option<f64>,
    pub binder_fraction: Option<f64>,
    pub binder_scale: f64,
    pub active: Option<String>,
    pub binder: Option<String>,
    pub fluid: String,
    /// Separator strut material and period.
    pub strut: String,
    pub lattice_period_um: f64,
    /// Uniform block material and cross-section.
    pub material: String,
    pub cross_section: usize,
    /// Defaults to a per-electrode fraction of the particle size, 1 µm otherwise.
    pub voxel_size_um: Option<f64>,
    pub length_mm: f64,
    pub receivers_mm: Vec<f64>,
    pub duration_us: f64,
    pub cfl_safety: f64,
    pub frequency_hz: f64,
    pub cycles: u32,
    pub lateral: LateralBoundary,
    pub end: EndMode,
    pub picking: Picking,
    pub dump_grid: bool,
}

impl Default for MicrosimSection {
    fn default() -> Self {
        let pulse = PulseSpec::default();
        Self {
            structure: Structure::Anode,
            lattice: Lattice::SimpleCubic,
            particle_size_um: 10.0,
            porosity: None,
            binder_fraction: None,
            binder_scale: 1.0,
            active: None,
            binder: None,
            fluid: names::ELECTROLYTE.into(),
            strut: names::PP.into(),
            lattice_period_um: DEFAULT_SEPARATOR_PERIOD * 1e6,
            material: names::GRAPHITE.into(),
            cross_section: 4,
            voxel_size_um: None,
            length_mm: 1.2,
            receivers_mm: vec![0.8, 1.1],
            duration_us: DEFAULT_DURATION * 1e6,
            cfl_safety: 0.5,
            frequency_hz: pulse.center_frequency,
            cycles: pulse.n_cycles,
            lateral: LateralBoundary::Mirror,
            end: EndMode::Dual,
            picking: Picking::default(),
            dump_grid: false,
        }
    }
}

/// Voxels per particle edge at which the reference electrodes hit their
/// binder share; coarser grids drift by up to a tenth of the binder volume.
const ANODE_VOXELS_PER_PARTICLE: f64 = 15.0;
const CATHODE_VOXELS_PER_PARTICLE: f64 = 13.0;

impl MicrosimSection {
    pub fn voxel_size(&self) -> f64 {
        let default_um = match self.structure {
            Structure::Anode => self.particle_size_um / ANODE_VOXELS_PER_PARTICLE,
            Structure::Cathode => self.particle_size_um / CATHODE_VOXELS_PER_PARTICLE,
            Structure::Separator | Structure::Uniform => 1.0,
        };
        self.voxel_size_um.unwrap_or(default_um) * 1e-6
    }
}

/// Grid described by a `[microsim]` section.
pub fn microsim_grid(cfg: &ConfigTree, s: &MicrosimSection) -> Result<VoxelGrid> {
    let mc = cfg.materials()?;
    let get = |n: &str| -> Result<MaterialSpec> { Ok(mc.catalog.lookup(n)?.clone()) };
    let h = s.voxel_size();
    let length = s.length_mm * 1e-3;
    Ok(match s.structure {
        Structure::Anode | Structure::Cathode => {
            let kind = if s.structure == Structure::Anode {
                LayerKind::Anode
            } else {
                LayerKind::Cathode
            };
            let mut spec = reference_electrode(kind, s.lattice, s.particle_size_um * 1e-6, h)?;
            spec.propagation_length = length;
            if let Some(p) = s.porosity {
                spec.porosity = p;
            }
            if let Some(b) = s.binder_fraction {
                spec.binder_volume_fraction_of_solid = b;
            }
            if let Some(a) = &s.active {
                spec.active_material = get(a)?;
            }
            if let Some(b) = &s.binder {
                spec.binder_material = get(b)?;
            }
            spec.fluid = get(&s.fluid)?;
            spec.binder_material = spec.binder_material.scaled_moduli(s.binder_scale);
            generate_electrode(&spec)?.0
        }
        Structure::Separator => {
            generate_separator(
                s.porosity.unwrap_or(0.4),
                get(&s.strut)?,
                get(&s.fluid)?,
                s.lattice_period_um * 1e-6,
                h,
                length,
            )?
            .0
        }
        Structure::Uniform => {
            if s.cross_section == 0 {
                return Err(config(MODULE, "cross_section must be positive"));
            }
            let nx = (length / h).round().max(1.0) as usize;
            VoxelGrid::uniform([nx, s.cross_section, s.cross_section], h, get(&s.material)?)?
        }
    })
}

pub fn microsim(cfg: &ConfigTree) -> Result<Vec<Artifact>> {
    cfg.check_sections(&["materials", "compositions", "microsim"])?;
    let s: MicrosimSection = cfg.section("microsim")?;
    let grid = microsim_grid(cfg, &s)?;
    let base = SimulationConfig {
        dt: None,
        n_steps: 0,
        source: PulseSpec {
            center_frequency: s.frequency_hz,
            n_cycles: s.cycles,
            ..PulseSpec::default()
        },
        receiver_planes: s.receivers_mm.iter().map(|x| x * 1e-3).collect(),
        cfl_safety: s.cfl_safety,
        lateral: s.lateral,
        end: EndBoundary::Rigid,
    };
    let sim = with_duration(&grid, &base, s.duration_us * 1e-6)?;
    let traces = match s.end {
        EndMode::Dual => run_dual_end(&grid, &sim)?,
        EndMode::Rigid => run_simulation(&grid, &sim)?,
        EndMode::Free => run_simulation(
            &grid,
            &SimulationConfig {
                end: EndBoundary::Free,
                ..sim.clone()
            },
        )?,
    };
    let mut j = FlatJson::default();
    let [nx, ny, nz] = grid.dims();
    j.int("nx", nx as u64)
        .int("ny", ny as u64)
        .int("nz", nz as u64);
    j.num("voxel_size_m", grid.voxel_size())
        .num("solid_fraction", grid.solid_fraction());
    j.num("dt_s", traces.dt())
        .int("n_steps", sim.n_steps as u64);
    for (i, x) in traces.positions.iter().enumerate() {
        j.num(format!("receiver_{}_m", i + 1), *x);
    }
    if traces.traces.len() >= 2 {
        j.num("speed_m_s", measure_speed(&traces, s.picking)?);
    }
    let mut out = vec![
        Artifact::text("speed.json", j.render()),
        Artifact::text("traces.csv", traces_csv(&traces)),
    ];
    if s.dump_grid {
        let mut buf = Vec::new();
        grid.write_pcel(&mut buf)?;
        out.push(Artifact::Binary {
            name: "grid.pcel".into(),
            body: buf,
        });
    }
    Ok(out)
}

pub fn traces_csv(t: &TraceSet) -> String {
    let mut header = vec!["t_s".to_string()];
    header.extend((1..=t.traces.len()).map(|i| format!("plane_{i}_pa")));
    let mut csv = Csv::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    let n = t.traces.iter().map(Trace::len).min().unwrap_or(0);
    let dt = t.dt();
    for k in 0..n {
        let mut row = vec![k as f64 * dt];
        row.extend(t.traces.iter().map(|tr| tr.samples()[k]));
        csv.row(&row);
    }
    csv.finish()
}

/// Columns of a `t_s,...` CSV as traces with a common sample period.
pub fn parse_traces_csv(text: &str) -> Result<(Vec<String>, Vec<Trace>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .unwrap_or("")
        .split(',')
        .map(|c| c.trim().to_string())
        .collect();
    if header.first().map(String::as_str) != Some("t_s") || header.len() < 2 {
        return Err(config(
            MODULE,
            "trace CSV needs a `t_s` column followed by at least one signal",
        ));
    }
    let mut t = Vec::new();
    let mut cols = vec![Vec::new(); header.len() - 1];
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(config(
                MODULE,
                format!("trace CSV line {}: wrong column count", i + 2),
            ));
        }
        let v = cells
            .iter()
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| config(MODULE, format!("trace CSV line {}: not a number", i + 2)))?;
        t.push(v[0]);
        for (c, x) in cols.iter_mut().zip(&v[1..]) {
            c.push(*x);
        }
    }
    if t.len() < 2 {
        return Err(config(MODULE, "trace CSV needs at least two samples"));
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    // Times carry six significant digits, so spacing is only checked coarsely.
    if t.windows(2)
        .any(|w| ((w[1] - w[0]) - dt).abs() > 0.25 * dt.abs())
    {
        return Err(config(MODULE, "trace CSV sampling is not uniform"));
    }
    let traces = cols
        .into_iter()
        .map(|c| Trace::new(dt, c))
        .collect::<Result<Vec<_>>>()?;
    Ok((header[1..].to_vec(), traces))
}

// -------------------------------------------------------------------- stack

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerRow {
    pub kind: LayerKind,
    pub porosity: Option<f64>,
    pub thickness_mm: f64,
    pub velocity_m_s: f64,
    #[serde(default = "fixed_table")]
    pub source: VelocitySource,
}

fn fixed_table() -> VelocitySource {
    VelocitySource::FixedTable
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StackSection {
    pub layers: Vec<LayerRow>,
    pub total_mm: Option<f64>,
    pub porosities: Option<Porosities>,
}

pub fn stack_from_config(cfg: &ConfigTree) -> Result<CellStack> {
    let s: StackSection = cfg.section("stack")?;
    if s.layers.is_empty() {
        return Ok(CellStack::reference_cell());
    }
    let layers = s
        .layers
        .iter()
        .map(|r| {
            LayerSpec::new(
                r.kind,
                r.porosity,
                r.thickness_mm * 1e-3,
                r.velocity_m_s,
                r.source,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let total = s
        .total_mm
        .map_or_else(|| layers.iter().map(|l| l.thickness).sum(), |t| t * 1e-3);
    CellStack::new(layers, total)
}

pub fn stack(cfg: &ConfigTree, table3: bool) -> Result<Vec<Artifact>> {
    cfg.check_sections(&["materials", "compositions", "stack"])?;
    let st = if table3 {
        CellStack::reference_cell()
    } else {
        stack_from_config(cfg)?
    };
    let sec: StackSection = cfg.section("stack")?;
    let por = sec.porosities.unwrap_or_default();
    let mc = cfg.materials()?;
    let comp = |n: &str| {
        mc.compositions
            .get(n)
            .ok_or_else(|| config(MODULE, format!("composition `{n}` missing")))
    };
    let vols = StackVolumes::from_compositions(
        comp("cell")?,
        comp("anode_solid")?,
        comp("cathode_solid")?,
    )?;
    let derived = derive_layer_thicknesses(&vols, &por, st.total_thickness)?;
    let mut csv = Csv::new(&[
        "layer",
        "porosity",
        "thickness_mm",
        "velocity_m_s",
        "tof_us",
        "derived_thickness_mm",
    ]);
    for (l, (_, tof)) in st.layers.iter().zip(layer_tofs(&st)) {
        csv.text_row(&[
            l.kind.name().to_string(),
            l.porosity.map(fmt6).unwrap_or_default(),
            fmt6(l.thickness * 1e3),
            fmt6(l.velocity),
            fmt6(tof * 1e6),
            fmt6(derived.get(l.kind) * 1e3),
        ]);
    }
    csv.text_row(&[
        "total".into(),
        String::new(),
        fmt6(st.total_thickness * 1e3),
        String::new(),
        fmt6(stack_tof(&st) * 1e6),
        fmt6(derived.thicknesses.iter().map(|(_, d)| d).sum::<f64>() * 1e3),
    ]);
    Ok(vec![Artifact::text("stack.csv", csv.finish())])
}

// ------------------------------------------------------------------- ageing

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub reductions: Vec<f64>,
    /// Anode and cathode grids, µm.
    pub voxel_size_um: f64,
    pub cathode_voxel_size_um: f64,
    pub length_mm: f64,
    pub duration_us: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            reductions: vec![],
            voxel_size_um: 10.0 / ANODE_VOXELS_PER_PARTICLE,
            cathode_voxel_size_um: 10.0 / CATHODE_VOXELS_PER_PARTICLE,
            length_mm: 1.2,
            duration_us: DEFAULT_DURATION * 1e6,
        }
    }
}

impl SweepSection {
    fn solver(&self) -> Result<MicrosimElectrodes> {
        let spec = |k, h_um: f64| -> Result<MicrostructureSpec> {
            let mut s = reference_electrode(k, Lattice::SimpleCubic, 10e-6, h_um * 1e-6)?;
            s.propagation_length = self.length_mm * 1e-3;
            Ok(s)
        };
        let mut solver = MicrosimElectrodes::new(
            spec(LayerKind::Anode, self.voxel_size_um)?,
            spec(LayerKind::Cathode, self.cathode_voxel_size_um)?,
        );
        solver.duration = self.duration_us * 1e-6;
        Ok(solver)
    }
}

pub fn ageing(cfg: &ConfigTree) -> Result<Vec<Artifact>> {
    cfg.check_sections(&["materials", "compositions", "stack", "ageing", "sweep"])?;
    let st = stack_from_config(cfg)?;
    let sw: SweepSection = cfg.section("sweep")?;
    let mut out = Vec::new();
    if cfg.has_section("ageing") {
        let sc: AgeingScenario = cfg.section("ageing")?;
        let aged = if sc.binder_stiffness_reduction.values().any(|&r| r != 0.0) {
            apply_binder_reduction(&sc, &st, &sw.solver()?)?
        } else {
            st.clone()
        };
        let o = lithium_loss_effects(&sc, &aged)?;
        let mut j = FlatJson::default();
        for (p, d) in [("anode", o.anode), ("cathode", o.cathode)] {
            j.num(format!("{p}.particle_size_pct"), d.particle_size_pct)
                .num(format!("{p}.layer_thickness_pct"), d.layer_thickness_pct)
                .num(format!("{p}.modulus_pct"), d.modulus_pct);
        }
        j.num("separator.layer_thickness_pct", o.separator_thickness_pct);
        for l in &o.layers {
            j.num(format!("{}.velocity_m_s", l.kind), l.velocity)
                .num(format!("{}.thickness_mm", l.kind), l.thickness * 1e3);
        }
        j.num("tof_us", o.tof * 1e6)
            .num("fresh_tof_us", stack_tof(&st) * 1e6);
        j.num("delta_tof_pct", 100.0 * (o.tof / stack_tof(&st) - 1.0));
        out.push(Artifact::text("outcome.json", j.render()));
    }
    if cfg.has_section("sweep") {
        let rows = binder_degradation_sweep(&st, &sw.reductions, &sw.solver()?)?;
        let mut csv = Csv::new(&[
            "reduction",
            "tof_us",
            "delta_tof_pct",
            "anode_velocity_m_s",
            "cathode_velocity_m_s",
        ]);
        for r in rows {
            csv.row(&[
                r.reduction,
                r.tof * 1e6,
                r.delta_tof_pct,
                r.anode_velocity,
                r.cathode_velocity,
            ]);
        }
        out.push(Artifact::text("sweep.csv", csv.finish()));
    }
    if out.is_empty() {
        return Err(config(
            MODULE,
            "ageing needs an [ageing] scenario or a [sweep] section",
        ));
    }
    Ok(out)
}

// ------------------------------------------------------------------ analyze

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzeSection {
    pub cycle_log: Option<PathBuf>,
    pub synthetic: Option<SyntheticLog>,
    pub traces: Option<PathBuf>,
    pub threshold: f64,
    /// Receiver positions of the trace columns, for a speed estimate.
    pub positions_mm: Vec<f64>,
}

impl Default for AnalyzeSection {
    fn default() -> Self {
        Self {
            cycle_log: None,
            synthetic: None,
            traces: None,
            threshold: DEFAULT_THRESHOLD_FRACTION,
            positions_mm: vec![],
        }
    }
}

pub fn analyze(cfg: &ConfigTree, seed: Option<u64>) -> Result<Vec<Artifact>> {
    cfg.check_sections(&["materials", "compositions", "analyze"])?;
    let s: AnalyzeSection = cfg.section("analyze")?;
    let mut j = FlatJson::default();
    let records = match (&s.cycle_log, s.synthetic) {
        (Some(p), _) => Some(ingest_cycle_log(&cfg.resolve(p))?),
        (None, Some(mut g)) => {
            if let Some(seed) = seed {
                g.seed = seed;
            }
            Some(g.generate()?)
        }
        (None, None) => None,
    };
    if let Some(r) = &records {
        correlate(r)?.to_json(&mut j);
    }
    if let Some(p) = &s.traces {
        let path = cfg.resolve(p);
        let text = std::fs::read_to_string(&path).map_err(|e| {
            config(
                MODULE,
                format!("cannot read traces {}: {e}", path.display()),
            )
        })?;
        let (names, traces) = parse_traces_csv(&text)?;
        let mut picks = Vec::with_capacity(traces.len());
        for (n, t) in names.iter().zip(&traces) {
            let pick = pick_first_arrival(t, s.threshold)?;
            j.num(format!("{n}.pick_s"), pick);
            picks.push(pick);
        }
        if traces.len() >= 2 {
            j.num(
                "xcorr_delay_s",
                cross_correlation_delay(&traces[0], &traces[traces.len() - 1])?,
            );
        }
        if s.positions_mm.len() == traces.len() && traces.len() >= 2 {
            let dx = (s.positions_mm[traces.len() - 1] - s.positions_mm[0]) * 1e-3;
            j.num("speed_m_s", dx / (picks[picks.len() - 1] - picks[0]));
        }
    }
    if records.is_none() && s.traces.is_none() {
        return Err(config(
            MODULE,
            "analyze needs cycle_log, synthetic or traces",
        ));
    }
    Ok(vec![Artifact::text("analysis.json", j.render())])
}
