//! Layered-cell time of flight and ageing scenarios.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{config, param, Error, Result};
use crate::materials::{
    binder_fraction_of_solid, builtin_compositions, builtin_library, names,
    weight_to_volume_fractions, Composition,
};
use crate::microsim::{
    dual_end_speed, generate_electrode, with_duration, Lattice, MicrostructureSpec, Picking,
    SimulationConfig, DEFAULT_DURATION,
};

const MODULE: &str = "cellmodel";

/// Allowed mismatch between the layer sum and the stated stack thickness, m.
pub const TOTAL_THICKNESS_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Anode,
    Cathode,
    Separator,
    Cu,
    Al,
}

impl LayerKind {
    pub const ALL: [LayerKind; 5] = [
        Self::Anode,
        Self::Cathode,
        Self::Separator,
        Self::Cu,
        Self::Al,
    ];

    pub fn is_porous(self) -> bool {
        matches!(self, Self::Anode | Self::Cathode | Self::Separator)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Anode => "anode",
            Self::Cathode => "cathode",
            Self::Separator => "separator",
            Self::Cu => "cu",
            Self::Al => "al",
        }
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where a layer velocity came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocitySource {
    FixedTable,
    Biot,
    Microsim,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    #[serde(default)]
    pub porosity: Option<f64>,
    /// Summed thickness of all layers of this kind, m.
    pub thickness: f64,
    /// m/s
    pub velocity: f64,
    pub source: VelocitySource,
}

impl LayerSpec {
    pub fn new(
        kind: LayerKind,
        porosity: Option<f64>,
        thickness: f64,
        velocity: f64,
        source: VelocitySource,
    ) -> Result<Self> {
        let l = Self {
            kind,
            porosity,
            thickness,
            velocity,
            source,
        };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.thickness > 0.0 && self.thickness.is_finite()) {
            return Err(param(
                MODULE,
                format!("{} thickness must be positive", self.kind),
            ));
        }
        if !(self.velocity > 0.0 && self.velocity.is_finite()) {
            return Err(param(
                MODULE,
                format!("{} velocity must be positive", self.kind),
            ));
        }
        match (self.kind.is_porous(), self.porosity) {
            (true, Some(p)) if p > 0.0 && p < 1.0 => Ok(()),
            (true, _) => Err(param(
                MODULE,
                format!("{} needs a porosity in (0, 1)", self.kind),
            )),
            (false, None) => Ok(()),
            (false, Some(_)) => Err(param(MODULE, format!("{} is not porous", self.kind))),
        }
    }

    pub fn tof(&self) -> f64 {
        self.thickness / self.velocity
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStack {
    pub layers: Vec<LayerSpec>,
    /// m
    pub total_thickness: f64,
}

impl CellStack {
    pub fn new(layers: Vec<LayerSpec>, total_thickness: f64) -> Result<Self> {
        let s = Self {
            layers,
            total_thickness,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(param(MODULE, "stack has no layers"));
        }
        for l in &self.layers {
            l.validate()?;
        }
        let sum: f64 = self.layers.iter().map(|l| l.thickness).sum();
        if (sum - self.total_thickness).abs() > TOTAL_THICKNESS_TOL {
            return Err(param(
                MODULE,
                format!(
                    "layer thicknesses sum to {sum:e} m, stated total is {:e} m",
                    self.total_thickness
                ),
            ));
        }
        Ok(())
    }

    /// The prismatic LFP cell: summed layer thicknesses and velocities.
    pub fn reference_cell() -> Self {
        use LayerKind::*;
        use VelocitySource::*;
        let layer = |kind, porosity, mm: f64, velocity, source| LayerSpec {
            kind,
            porosity,
            thickness: mm * 1e-3,
            velocity,
            source,
        };
        Self {
            layers: vec![
                layer(Anode, Some(0.37), 9.21, 1154.8, Microsim),
                layer(Cathode, Some(0.4), 10.91, 1145.4, Microsim),
                layer(Separator, Some(0.4), 2.54, 1353.7, Microsim),
                layer(Cu, None, 0.77, 4600.0, FixedTable),
                layer(Al, None, 5.87, 6320.0, FixedTable),
            ],
            total_thickness: 29.3e-3,
        }
    }

    pub fn layer(&self, kind: LayerKind) -> Option<&LayerSpec> {
        self.layers.iter().find(|l| l.kind == kind)
    }

    pub fn layer_mut(&mut self, kind: LayerKind) -> Option<&mut LayerSpec> {
        self.layers.iter_mut().find(|l| l.kind == kind)
    }
}

/// Σ dᵢ/cᵢ, s.
pub fn stack_tof(stack: &CellStack) -> f64 {
    stack.layers.iter().map(LayerSpec::tof).sum()
}

pub fn layer_tofs(stack: &CellStack) -> Vec<(LayerKind, f64)> {
    stack.layers.iter().map(|l| (l.kind, l.tof())).collect()
}

/// Cell volume shares of the solids of each layer and of the electrolyte.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StackVolumes {
    pub anode_solid: f64,
    pub cathode_solid: f64,
    pub separator_solid: f64,
    pub electrolyte: f64,
    pub cu: f64,
    pub al: f64,
}

impl StackVolumes {
    /// From the cell weight composition and the electrode solid compositions.
    /// The cell list names only the active materials, so each electrode's
    /// binder is added in proportion to its active material by weight.
    pub fn from_compositions(
        cell: &Composition,
        anode_solid: &Composition,
        cathode_solid: &Composition,
    ) -> Result<Self> {
        let weights = |c: &Composition| -> BTreeMap<String, f64> {
            c.entries()
                .iter()
                .map(|e| (e.material.name.clone(), e.weight_fraction))
                .collect()
        };
        let cw = weights(cell);
        let get = |m: &BTreeMap<String, f64>, n: &str| {
            m.get(n).copied().ok_or_else(|| Error::NotFound(n.into()))
        };
        let aw = weights(anode_solid);
        let kw = weights(cathode_solid);
        let density = |c: &Composition, n: &str| {
            c.entries()
                .iter()
                .find(|e| e.material.name == n)
                .map(|e| e.material.density)
                .ok_or_else(|| Error::NotFound(n.into()))
        };
        // Binder weight relative to active weight, and the mean binder density.
        let binder_of =
            |w: &BTreeMap<String, f64>, c: &Composition, active: &str| -> Result<(f64, f64)> {
                let act = get(w, active)?;
                let (mut bw, mut bv) = (0.0, 0.0);
                for e in c.entries().iter().filter(|e| e.material.name != active) {
                    bw += e.weight_fraction;
                    bv += e.weight_fraction / e.material.density;
                }
                Ok((bw / act, if bv > 0.0 { bw / bv } else { 1.0 }))
            };
        let (ab_ratio, ab_rho) = binder_of(&aw, anode_solid, names::GRAPHITE)?;
        let (kb_ratio, kb_rho) = binder_of(&kw, cathode_solid, names::LFP)?;
        let vol = |n: &str| -> Result<f64> { Ok(get(&cw, n)? / density(cell, n)?) };
        let graphite = vol(names::GRAPHITE)?;
        let lfp = vol(names::LFP)?;
        let anode_binder = get(&cw, names::GRAPHITE)? * ab_ratio / ab_rho;
        let cathode_binder = get(&cw, names::LFP)? * kb_ratio / kb_rho;
        let mut v = Self {
            anode_solid: graphite + anode_binder,
            cathode_solid: lfp + cathode_binder,
            separator_solid: vol(names::PP)?,
            electrolyte: vol(names::ELECTROLYTE)?,
            cu: vol(names::CU)?,
            al: vol(names::AL)?,
        };
        let total = v.sum();
        v.scale(1.0 / total);
        Ok(v)
    }

    pub fn sum(&self) -> f64 {
        self.anode_solid
            + self.cathode_solid
            + self.separator_solid
            + self.electrolyte
            + self.cu
            + self.al
    }

    fn scale(&mut self, k: f64) {
        for x in [
            &mut self.anode_solid,
            &mut self.cathode_solid,
            &mut self.separator_solid,
            &mut self.electrolyte,
            &mut self.cu,
            &mut self.al,
        ] {
            *x *= k;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Porosities {
    pub anode: f64,
    pub cathode: f64,
    pub separator: f64,
}

impl Default for Porosities {
    fn default() -> Self {
        Self {
            anode: 0.37,
            cathode: 0.4,
            separator: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedThicknesses {
    /// m, in [`LayerKind::ALL`] order.
    pub thicknesses: Vec<(LayerKind, f64)>,
    /// Electrolyte left over after filling the pores, as a cell volume share.
    pub unallocated_electrolyte: f64,
}

impl DerivedThicknesses {
    pub fn get(&self, kind: LayerKind) -> f64 {
        self.thicknesses
            .iter()
            .find(|(k, _)| *k == kind)
            .map_or(0.0, |(_, d)| *d)
    }
}

/// Fill each porous layer's pores with electrolyte, map solids to their layers
/// and split `total_thickness` in proportion to the resulting layer volumes.
/// Electrolyte beyond what the pores hold is reported, not assigned.
pub fn derive_layer_thicknesses(
    volumes: &StackVolumes,
    porosities: &Porosities,
    total_thickness: f64,
) -> Result<DerivedThicknesses> {
    if (volumes.sum() - 1.0).abs() > 1e-6 {
        return Err(param(MODULE, "cell volume fractions must sum to 1"));
    }
    if !(total_thickness > 0.0) {
        return Err(param(MODULE, "total thickness must be positive"));
    }
    for p in [porosities.anode, porosities.cathode, porosities.separator] {
        if !(0.0..1.0).contains(&p) {
            return Err(param(MODULE, "porosities must lie in [0, 1)"));
        }
    }
    let layer = |solid: f64, phi: f64| solid / (1.0 - phi);
    let v = [
        (
            LayerKind::Anode,
            layer(volumes.anode_solid, porosities.anode),
        ),
        (
            LayerKind::Cathode,
            layer(volumes.cathode_solid, porosities.cathode),
        ),
        (
            LayerKind::Separator,
            layer(volumes.separator_solid, porosities.separator),
        ),
        (LayerKind::Cu, volumes.cu),
        (LayerKind::Al, volumes.al),
    ];
    let pores = (v[0].1 - volumes.anode_solid)
        + (v[1].1 - volumes.cathode_solid)
        + (v[2].1 - volumes.separator_solid);
    let spare = volumes.electrolyte - pores;
    if spare < -1e-12 {
        return Err(Error::InfeasiblePorosity(format!(
            "pores need {pores:.4} of the cell volume but only {:.4} is electrolyte",
            volumes.electrolyte
        )));
    }
    let assigned: f64 = v.iter().map(|(_, x)| x).sum();
    Ok(DerivedThicknesses {
        thicknesses: v
            .iter()
            .map(|&(k, x)| (k, total_thickness * x / assigned))
            .collect(),
        unallocated_electrolyte: spare.max(0.0),
    })
}

/// Inverse of [`derive_layer_thicknesses`]: the cell volume shares implied by
/// layer thicknesses, with `unallocated_electrolyte` added back.
pub fn volumes_from_thicknesses(d: &DerivedThicknesses, porosities: &Porosities) -> StackVolumes {
    let total: f64 = d.thicknesses.iter().map(|(_, x)| x).sum();
    let share = |k| d.get(k) / total * (1.0 - d.unallocated_electrolyte);
    let solid = |k, phi: f64| share(k) * (1.0 - phi);
    let pores = share(LayerKind::Anode) * porosities.anode
        + share(LayerKind::Cathode) * porosities.cathode
        + share(LayerKind::Separator) * porosities.separator;
    StackVolumes {
        anode_solid: solid(LayerKind::Anode, porosities.anode),
        cathode_solid: solid(LayerKind::Cathode, porosities.cathode),
        separator_solid: solid(LayerKind::Separator, porosities.separator),
        electrolyte: pores + d.unallocated_electrolyte,
        cu: share(LayerKind::Cu),
        al: share(LayerKind::Al),
    }
}

/// Reference electrode microstructure: built-in materials, the composition's
/// binder share of the solid and the nominal porosity.
pub fn reference_electrode(
    kind: LayerKind,
    lattice: Lattice,
    particle_size: f64,
    voxel_size: f64,
) -> Result<MicrostructureSpec> {
    let lib = builtin_library();
    let (active, binder, porosity, solid) = match kind {
        LayerKind::Anode => (names::GRAPHITE, names::ANODE_BINDER, 0.37, "anode_solid"),
        LayerKind::Cathode => (names::LFP, names::CATHODE_BINDER, 0.4, "cathode_solid"),
        other => return Err(param(MODULE, format!("{other} is not an electrode"))),
    };
    let share = binder_fraction_of_solid(&builtin_compositions()[solid], active)?;
    let spec = MicrostructureSpec {
        lattice,
        particle_size,
        porosity,
        active_material: lib.lookup(active)?.clone(),
        binder_material: lib.lookup(binder)?.clone(),
        binder_volume_fraction_of_solid: share,
        fluid: lib.lookup(names::ELECTROLYTE)?.clone(),
        voxel_size,
        cells_along_propagation: None,
        propagation_length: 1.2e-3,
    };
    spec.validate()?;
    Ok(spec)
}

/// Electrode velocity as a function of the binder modulus scale factor.
pub trait ElectrodeVelocity {
    fn velocity(&self, electrode: LayerKind, binder_scale: f64) -> Result<f64>;
}

/// Electrode velocities from dual-end voxel simulations.
#[derive(Debug, Clone)]
pub struct MicrosimElectrodes {
    pub anode: MicrostructureSpec,
    pub cathode: MicrostructureSpec,
    pub config: SimulationConfig,
    /// Recording window, s.
    pub duration: f64,
    pub picking: Picking,
}

impl MicrosimElectrodes {
    pub fn new(anode: MicrostructureSpec, cathode: MicrostructureSpec) -> Self {
        Self {
            anode,
            cathode,
            config: SimulationConfig::default(),
            duration: DEFAULT_DURATION,
            picking: Picking::default(),
        }
    }
}

impl ElectrodeVelocity for MicrosimElectrodes {
    fn velocity(&self, electrode: LayerKind, binder_scale: f64) -> Result<f64> {
        let base = match electrode {
            LayerKind::Anode => &self.anode,
            LayerKind::Cathode => &self.cathode,
            other => return Err(param(MODULE, format!("{other} is not an electrode"))),
        };
        let spec = MicrostructureSpec {
            binder_material: base.binder_material.scaled_moduli(binder_scale),
            ..base.clone()
        };
        let (grid, _) = generate_electrode(&spec)?;
        let cfg = with_duration(&grid, &self.config, self.duration)?;
        dual_end_speed(&grid, &cfg, self.picking)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub reduction: f64,
    /// s
    pub tof: f64,
    pub delta_tof_pct: f64,
    pub anode_velocity: f64,
    pub cathode_velocity: f64,
}

/// Total ToF as both electrodes' binder moduli are scaled by (1 − r).
/// Electrode velocities are rescaled by the solver's aged/fresh ratio, so the
/// stack's own fresh velocities stay the reference.
pub fn binder_degradation_sweep(
    stack: &CellStack,
    reductions: &[f64],
    solver: &dyn ElectrodeVelocity,
) -> Result<Vec<SweepRow>> {
    stack.validate()?;
    if reductions.iter().any(|r| !(0.0..=0.9).contains(r)) {
        return Err(param(MODULE, "binder reductions must lie in [0, 0.9]"));
    }
    if reductions.windows(2).any(|w| w[1] < w[0]) {
        return Err(param(MODULE, "binder reductions must be sorted"));
    }
    let fresh_tof = stack_tof(stack);
    let electrodes = [LayerKind::Anode, LayerKind::Cathode];
    let c0: Vec<f64> = electrodes
        .iter()
        .map(|&k| {
            stack
                .layer(k)
                .map(|l| l.velocity)
                .ok_or_else(|| param(MODULE, format!("stack has no {k} layer")))
        })
        .collect::<Result<_>>()?;
    let mut fresh_sim: Option<Vec<f64>> = None;
    let mut rows = Vec::with_capacity(reductions.len());
    for &r in reductions {
        if r == 0.0 {
            rows.push(SweepRow {
                reduction: r,
                tof: fresh_tof,
                delta_tof_pct: 0.0,
                anode_velocity: c0[0],
                cathode_velocity: c0[1],
            });
            continue;
        }
        if fresh_sim.is_none() {
            fresh_sim = Some(
                electrodes
                    .iter()
                    .map(|&k| solver.velocity(k, 1.0))
                    .collect::<Result<_>>()?,
            );
        }
        let base = fresh_sim.as_ref().expect("set above");
        let mut aged = stack.clone();
        let mut v = [0.0; 2];
        for (i, &k) in electrodes.iter().enumerate() {
            v[i] = c0[i] * solver.velocity(k, 1.0 - r)? / base[i];
            aged.layer_mut(k).expect("checked").velocity = v[i];
        }
        let tof = stack_tof(&aged);
        rows.push(SweepRow {
            reduction: r,
            tof,
            delta_tof_pct: 100.0 * (tof / fresh_tof - 1.0),
            anode_velocity: v[0],
            cathode_velocity: v[1],
        });
    }
    Ok(rows)
}

/// Stack with each electrode's velocity scaled by the solver's aged/fresh
/// ratio for the scenario's binder stiffness reductions.
pub fn apply_binder_reduction(
    scenario: &AgeingScenario,
    stack: &CellStack,
    solver: &dyn ElectrodeVelocity,
) -> Result<CellStack> {
    scenario.validate()?;
    let mut out = stack.clone();
    for (&k, &r) in &scenario.binder_stiffness_reduction {
        if r == 0.0 {
            continue;
        }
        let ratio = solver.velocity(k, 1.0 - r)? / solver.velocity(k, 1.0)?;
        out.layer_mut(k)
            .ok_or_else(|| param(MODULE, format!("stack has no {k} layer")))?
            .velocity *= ratio;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMechanism {
    #[serde(rename = "sei")]
    Sei,
    Plating,
    Lam,
}

/// Molar volumes, m³/mol. SEI and lithium are per mole of lithium consumed;
/// lithiated graphite is per mole of LiC6.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MolarVolumes {
    pub graphite: Option<f64>,
    #[serde(rename = "sei")]
    pub sei: Option<f64>,
    pub lithium: Option<f64>,
    pub lithiated_graphite: Option<f64>,
}

impl Default for MolarVolumes {
    /// Graphite from 12.011 g/mol at 2.26 g/cm³ and lithium metal at 13.02 cm³/mol.
    /// The SEI value is chosen so a 10% loss grows graphite particles by 4.2%;
    /// the LiC6 value gives a 1.5% linear expansion of fully lithiated particles.
    fn default() -> Self {
        Self {
            graphite: Some(5.3146e-6),
            sei: Some(52.2e-6),
            lithium: Some(13.02e-6),
            lithiated_graphite: Some(33.34e-6),
        }
    }
}

impl MolarVolumes {
    fn need(v: Option<f64>, name: &str) -> Result<f64> {
        match v {
            Some(x) if x > 0.0 => Ok(x),
            Some(_) => Err(config(
                MODULE,
                format!("molar volume `{name}` must be positive"),
            )),
            None => Err(config(MODULE, format!("molar volume `{name}` is missing"))),
        }
    }
}

/// Lithium inventory of the cell, per unit cell volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellInventory {
    pub lfp_volume_fraction: f64,
    pub graphite_volume_fraction: f64,
    /// kg/m³
    pub lfp_density: f64,
    /// kg/mol
    pub lfp_molar_mass: f64,
}

impl Default for CellInventory {
    fn default() -> Self {
        Self {
            lfp_volume_fraction: 0.211,
            graphite_volume_fraction: 0.186,
            lfp_density: 3500.0,
            lfp_molar_mass: 0.15776,
        }
    }
}

impl CellInventory {
    /// mol/m³, all of it held in discharged LiFePO4.
    pub fn lithium_density(&self) -> f64 {
        self.lfp_volume_fraction * self.lfp_density / self.lfp_molar_mass
    }
}

/// Cathode response to delithiation, per unit fraction of lithium lost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CathodeResponse {
    pub modulus_per_loss: f64,
    pub volume_per_loss: f64,
    /// Volume share of the active material in the cathode solid.
    pub active_share_of_solid: f64,
}

impl Default for CathodeResponse {
    fn default() -> Self {
        Self {
            modulus_per_loss: -0.2,
            volume_per_loss: -0.05,
            active_share_of_solid: 0.89,
        }
    }
}

/// Layer stiffness inputs for the series-spring thickness balance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StackStiffness {
    /// Pa
    pub cathode_binder_bulk: f64,
    /// Binder volume share of the cathode layer.
    pub cathode_binder_fraction: f64,
    /// Pa
    pub separator_bulk: f64,
    pub separator_solid_fraction: f64,
    /// Anode spring (bulk, volume share); `None` holds the anode at its free expansion.
    #[serde(default)]
    pub anode: Option<(f64, f64)>,
}

impl Default for StackStiffness {
    fn default() -> Self {
        Self {
            cathode_binder_bulk: 1.78e9,
            cathode_binder_fraction: 0.11 * 0.6,
            separator_bulk: 1.38e9,
            separator_solid_fraction: 0.6,
            anode: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LithiumLoss {
    pub mechanism: LossMechanism,
    pub fraction: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgeingScenario {
    #[serde(default)]
    pub binder_stiffness_reduction: BTreeMap<LayerKind, f64>,
    pub lithium_loss: Option<LithiumLoss>,
    #[serde(default)]
    pub molar_volumes: MolarVolumes,
    #[serde(default)]
    pub inventory: CellInventory,
    #[serde(default)]
    pub cathode: CathodeResponse,
    #[serde(default)]
    pub stiffness: StackStiffness,
}

impl AgeingScenario {
    pub fn lithium_loss(mechanism: LossMechanism, fraction: f64) -> Self {
        Self {
            binder_stiffness_reduction: BTreeMap::new(),
            lithium_loss: Some(LithiumLoss {
                mechanism,
                fraction,
            }),
            molar_volumes: MolarVolumes::default(),
            inventory: CellInventory::default(),
            cathode: CathodeResponse::default(),
            stiffness: StackStiffness::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (k, r) in &self.binder_stiffness_reduction {
            if !(0.0..=0.9).contains(r) {
                return Err(param(
                    MODULE,
                    format!("binder reduction for {k} must lie in [0, 0.9]"),
                ));
            }
        }
        if let Some(l) = &self.lithium_loss {
            if !(0.0..=0.2).contains(&l.fraction) {
                return Err(param(MODULE, "lithium loss fraction must lie in [0, 0.2]"));
            }
        }
        Ok(())
    }
}

/// Percent changes for one layer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct LayerDelta {
    pub particle_size_pct: f64,
    pub layer_thickness_pct: f64,
    pub modulus_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioOutcome {
    pub anode: LayerDelta,
    pub cathode: LayerDelta,
    pub separator_thickness_pct: f64,
    /// Updated layers with velocities, in stack order.
    pub layers: Vec<LayerSpec>,
    /// s
    pub tof: f64,
}

/// One layer in the stack force balance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpringLayer {
    /// m
    pub thickness: f64,
    /// Thickness strain the layer would take on its own.
    pub free_strain: f64,
    /// Pa/m; `None` is rigid.
    pub stiffness: Option<f64>,
}

/// Spring constant of a layer whose load path is a solid fraction `share` of
/// bulk modulus `bulk`.
pub fn spring_stiffness(bulk: f64, share: f64, thickness: f64) -> f64 {
    bulk * share / thickness
}

/// Strains of a series stack held at constant total thickness. Every
/// compliant layer carries the same force; rigid layers keep their free strain.
pub fn equilibrium_strains(layers: &[SpringLayer]) -> Result<Vec<f64>> {
    let mut compliance = 0.0;
    let mut excess = 0.0;
    for l in layers {
        if !(l.thickness > 0.0) {
            return Err(param(MODULE, "layer thickness must be positive"));
        }
        match l.stiffness {
            Some(k) if !(k > 0.0) => {
                return Err(param(MODULE, "spring stiffness must be positive"))
            }
            Some(k) if k.is_finite() => compliance += 1.0 / k,
            _ => {}
        }
        excess += l.free_strain * l.thickness;
    }
    if compliance == 0.0 {
        return Err(Error::Indeterminate(
            "no compliant layer can absorb the expansion".into(),
        ));
    }
    let force = excess / compliance;
    Ok(layers
        .iter()
        .map(|l| match l.stiffness {
            Some(k) if k.is_finite() => l.free_strain - force / (k * l.thickness),
            _ => l.free_strain,
        })
        .collect())
}

/// Cathode and anode thickness changes, in percent, when the anode's free
/// expansion is taken up by the cathode binder and the separator.
pub fn equilibrium_thickness(
    anode_expansion: f64,
    cathode_shrinkage: f64,
    stack: &CellStack,
    stiffness: &StackStiffness,
) -> Result<(f64, f64)> {
    let [a, c, _] = stack_strains(anode_expansion, cathode_shrinkage, stack, stiffness)?;
    Ok((100.0 * c, 100.0 * a))
}

/// Anode, cathode and separator strains of the balance.
fn stack_strains(
    anode_expansion: f64,
    cathode_shrinkage: f64,
    stack: &CellStack,
    stiffness: &StackStiffness,
) -> Result<[f64; 3]> {
    let d = |k| {
        stack
            .layer(k)
            .map(|l| l.thickness)
            .ok_or_else(|| param(MODULE, format!("stack has no {k} layer")))
    };
    let (da, dc, ds) = (
        d(LayerKind::Anode)?,
        d(LayerKind::Cathode)?,
        d(LayerKind::Separator)?,
    );
    if !(stiffness.cathode_binder_bulk > 0.0
        && stiffness.cathode_binder_fraction > 0.0
        && stiffness.separator_bulk > 0.0
        && stiffness.separator_solid_fraction > 0.0)
    {
        return Err(param(MODULE, "stiffness inputs must be positive"));
    }
    let layers = [
        SpringLayer {
            thickness: da,
            free_strain: anode_expansion,
            stiffness: stiffness.anode.map(|(k, f)| spring_stiffness(k, f, da)),
        },
        SpringLayer {
            thickness: dc,
            free_strain: -cathode_shrinkage,
            stiffness: Some(spring_stiffness(
                stiffness.cathode_binder_bulk,
                stiffness.cathode_binder_fraction,
                dc,
            )),
        },
        SpringLayer {
            thickness: ds,
            free_strain: 0.0,
            stiffness: Some(spring_stiffness(
                stiffness.separator_bulk,
                stiffness.separator_solid_fraction,
                ds,
            )),
        },
    ];
    let e = equilibrium_strains(&layers)?;
    Ok([e[0], e[1], e[2]])
}

/// Table-style deltas and updated ToF for a lithium-loss scenario.
///
/// SEI and plating coat the graphite with the consumed lithium's molar volume,
/// anode thickness fixed. LAM locks the lost lithium in detached graphite as
/// LiC6; those particles grow and push on the cathode and separator. In every
/// case the cathode loses modulus and volume and would shrink freely by its
/// particle strain times the particle's share of the cell edge. Velocities
/// follow √modulus, an upper bound since the binder carries most of the load.
pub fn lithium_loss_effects(
    scenario: &AgeingScenario,
    stack: &CellStack,
) -> Result<ScenarioOutcome> {
    scenario.validate()?;
    stack.validate()?;
    let loss = scenario.lithium_loss.unwrap_or(LithiumLoss {
        mechanism: LossMechanism::Sei,
        fraction: 0.0,
    });
    let mv = &scenario.molar_volumes;
    let inv = &scenario.inventory;
    let n_lost = loss.fraction * inv.lithium_density();
    let porosity = |k| {
        stack
            .layer(k)
            .and_then(|l| l.porosity)
            .ok_or_else(|| param(MODULE, format!("stack needs a porous {k} layer")))
    };
    let (phi_a, phi_c) = (porosity(LayerKind::Anode)?, porosity(LayerKind::Cathode)?);

    let cr = &scenario.cathode;
    let modulus = cr.modulus_per_loss * loss.fraction;
    let particle_vol = cr.volume_per_loss * loss.fraction;
    let particle_lin = (1.0 + particle_vol).cbrt() - 1.0;
    let edge_share = ((1.0 - phi_c) * cr.active_share_of_solid).cbrt();
    let free_cathode = edge_share * particle_lin;

    let mut anode = LayerDelta::default();
    let mut separator = 0.0;
    let mut cathode = LayerDelta {
        particle_size_pct: 100.0 * particle_lin,
        layer_thickness_pct: 100.0 * free_cathode,
        modulus_pct: 100.0 * modulus,
    };
    match loss.mechanism {
        LossMechanism::Sei | LossMechanism::Plating => {
            let v = if loss.mechanism == LossMechanism::Sei {
                MolarVolumes::need(mv.sei, "sei")?
            } else {
                MolarVolumes::need(mv.lithium, "lithium")?
            };
            anode.particle_size_pct =
                100.0 * ((1.0 + n_lost * v / inv.graphite_volume_fraction).cbrt() - 1.0);
        }
        LossMechanism::Lam => {
            let c6 = 6.0 * MolarVolumes::need(mv.graphite, "graphite")?;
            let lic6 = MolarVolumes::need(mv.lithiated_graphite, "lithiated_graphite")?;
            anode.particle_size_pct = if loss.fraction > 0.0 {
                100.0 * ((lic6 / c6).cbrt() - 1.0)
            } else {
                0.0
            };
            let growth = n_lost * (lic6 - c6) / inv.graphite_volume_fraction;
            let free_anode = (1.0 - phi_a) * growth;
            let [ea, ec, es] =
                stack_strains(free_anode, -free_cathode, stack, &scenario.stiffness)?;
            anode.layer_thickness_pct = 100.0 * ea;
            cathode.layer_thickness_pct = 100.0 * ec;
            separator = 100.0 * es;
        }
    }

    let mut layers = stack.layers.clone();
    for l in &mut layers {
        match l.kind {
            LayerKind::Anode => l.thickness *= 1.0 + anode.layer_thickness_pct / 100.0,
            LayerKind::Cathode => {
                l.thickness *= 1.0 + cathode.layer_thickness_pct / 100.0;
                l.velocity *= (1.0 + modulus).sqrt();
            }
            LayerKind::Separator => l.thickness *= 1.0 + separator / 100.0,
            _ => {}
        }
    }
    let tof = layers.iter().map(LayerSpec::tof).sum();
    Ok(ScenarioOutcome {
        anode,
        cathode,
        separator_thickness_pct: separator,
        layers,
        tof,
    })
}

/// Binder share of an electrode's solid phase from its weight composition.
pub fn electrode_binder_share(solid: &Composition, active: &str) -> Result<f64> {
    binder_fraction_of_solid(solid, active)
}

/// Volume shares of a composition, keyed by material name.
pub fn volume_shares(c: &Composition) -> Result<BTreeMap<String, f64>> {
    Ok(weight_to_volume_fractions(c)?.into_iter().collect())
}
