//! Constituent materials and composition arithmetic.
//!
//! All quantities are SI internally. Table-style inputs (g/cm³, GPa, weight
//! percent) are converted when a config file is parsed.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::error::{config, param, validation, Error, Result};

const MODULE: &str = "materials";

/// Tolerance on the sum of weight or volume fractions.
pub const FRACTION_SUM_TOL: f64 = 1e-9;

pub const GPA: f64 = 1e9;
pub const G_PER_CM3: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Solid,
    Fluid,
}

/// Density and elastic constants of one constituent.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MaterialSpec {
    pub name: String,
    pub phase: Phase,
    /// kg/m³
    pub density: f64,
    /// Pa
    pub bulk_modulus: Option<f64>,
    /// Pa
    pub shear_modulus: Option<f64>,
    /// m/s, for simple solids quoted by longitudinal speed and for fluids.
    pub sound_speed: Option<f64>,
}

/// Isotropic elastic constants as the wave solver consumes them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Elastic {
    pub density: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl Elastic {
    pub fn p_modulus(&self) -> f64 {
        self.lambda + 2.0 * self.mu
    }

    pub fn bulk_modulus(&self) -> f64 {
        self.lambda + 2.0 * self.mu / 3.0
    }

    pub fn longitudinal_speed(&self) -> f64 {
        (self.p_modulus() / self.density).sqrt()
    }
}

impl MaterialSpec {
    pub fn solid(name: &str, density: f64, bulk: f64, shear: f64) -> Result<Self> {
        let m = Self {
            name: name.to_string(),
            phase: Phase::Solid,
            density,
            bulk_modulus: Some(bulk),
            shear_modulus: Some(shear),
            sound_speed: None,
        };
        m.validate()?;
        Ok(m)
    }

    /// A solid characterised only by its longitudinal speed (current collectors).
    pub fn simple_solid(name: &str, density: f64, speed: f64) -> Result<Self> {
        let m = Self {
            name: name.to_string(),
            phase: Phase::Solid,
            density,
            bulk_modulus: None,
            shear_modulus: None,
            sound_speed: Some(speed),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn fluid(name: &str, density: f64, bulk: f64) -> Result<Self> {
        let m = Self {
            name: name.to_string(),
            phase: Phase::Fluid,
            density,
            bulk_modulus: Some(bulk),
            shear_modulus: None,
            sound_speed: None,
        };
        m.validate()?;
        Ok(m)
    }

    /// Density-only entry used in composition arithmetic.
    pub fn density_only(name: &str, density: f64) -> Result<Self> {
        let m = Self {
            name: name.to_string(),
            phase: Phase::Solid,
            density,
            bulk_modulus: None,
            shear_modulus: None,
            sound_speed: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.density > 0.0) || !self.density.is_finite() {
            return Err(param(
                MODULE,
                format!("{}: density must be positive", self.name),
            ));
        }
        for (label, v) in [
            ("bulk modulus", self.bulk_modulus),
            ("shear modulus", self.shear_modulus),
        ] {
            if let Some(v) = v {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(param(
                        MODULE,
                        format!("{}: {label} must be >= 0", self.name),
                    ));
                }
            }
        }
        if let Some(c) = self.sound_speed {
            if !(c > 0.0) || !c.is_finite() {
                return Err(param(
                    MODULE,
                    format!("{}: sound speed must be positive", self.name),
                ));
            }
        }
        if self.phase == Phase::Fluid {
            if self.bulk_modulus.is_none() && self.sound_speed.is_none() {
                return Err(validation(
                    MODULE,
                    format!("{}: fluid needs a bulk modulus or a sound speed", self.name),
                ));
            }
            if let (Some(k), Some(c)) = (self.bulk_modulus, self.sound_speed) {
                let implied = (k / self.density).sqrt();
                if ((implied - c) / c).abs() > 1e-6 {
                    return Err(validation(
                        MODULE,
                        format!("{}: sound speed inconsistent with sqrt(K/rho)", self.name),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Longitudinal wave speed, from moduli when present.
    pub fn longitudinal_speed(&self) -> Option<f64> {
        match (self.bulk_modulus, self.shear_modulus, self.sound_speed) {
            (Some(k), g, _) if self.phase == Phase::Fluid || g.is_some() => {
                let g = g.unwrap_or(0.0);
                Some(((k + 4.0 * g / 3.0) / self.density).sqrt())
            }
            (_, _, Some(c)) => Some(c),
            _ => None,
        }
    }

    /// Lamé constants for the voxel solver. Fluids carry zero shear.
    pub fn elastic(&self) -> Result<Elastic> {
        match self.phase {
            Phase::Fluid => {
                let k = match (self.bulk_modulus, self.sound_speed) {
                    (Some(k), _) => k,
                    (None, Some(c)) => self.density * c * c,
                    _ => unreachable!("validated"),
                };
                Ok(Elastic {
                    density: self.density,
                    lambda: k,
                    mu: 0.0,
                })
            }
            Phase::Solid => match (self.bulk_modulus, self.shear_modulus) {
                (Some(k), Some(g)) => Ok(Elastic {
                    density: self.density,
                    lambda: k - 2.0 * g / 3.0,
                    mu: g,
                }),
                _ => Err(param(
                    MODULE,
                    format!(
                        "{}: solid needs bulk and shear moduli for the wave solver",
                        self.name
                    ),
                )),
            },
        }
    }

    /// Copy with both moduli multiplied by `factor`.
    pub fn scaled_moduli(&self, factor: f64) -> MaterialSpec {
        let mut m = self.clone();
        m.bulk_modulus = m.bulk_modulus.map(|k| k * factor);
        m.shear_modulus = m.shear_modulus.map(|g| g * factor);
        m.sound_speed = m.sound_speed.map(|c| c * factor.sqrt());
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositionEntry {
    pub material: MaterialSpec,
    pub weight_fraction: f64,
}

/// Mixture described by weight fractions that sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Composition {
    entries: Vec<CompositionEntry>,
}

impl Composition {
    pub fn new(entries: Vec<CompositionEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(validation(MODULE, "composition is empty"));
        }
        for e in &entries {
            if !(0.0..=1.0).contains(&e.weight_fraction) {
                return Err(validation(
                    MODULE,
                    format!(
                        "{}: weight fraction {} outside [0, 1]",
                        e.material.name, e.weight_fraction
                    ),
                ));
            }
        }
        let sum: f64 = entries.iter().map(|e| e.weight_fraction).sum();
        if (sum - 1.0).abs() > FRACTION_SUM_TOL {
            return Err(validation(
                MODULE,
                format!("weight fractions sum to {sum}, expected 1"),
            ));
        }
        Ok(Self { entries })
    }

    /// Build from unnormalised positive weights (percentages, parts, ...).
    pub fn from_weights(parts: Vec<(MaterialSpec, f64)>) -> Result<Self> {
        let total: f64 = parts.iter().map(|(_, w)| *w).sum();
        if parts.iter().any(|(_, w)| !(*w >= 0.0)) || !(total > 0.0) {
            return Err(validation(
                MODULE,
                "weights must be non-negative with a positive sum",
            ));
        }
        Self::new(
            parts
                .into_iter()
                .map(|(material, w)| CompositionEntry {
                    material,
                    weight_fraction: w / total,
                })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[CompositionEntry] {
        &self.entries
    }
}

/// Volume fractions in composition order: v_i = (w_i/ρ_i) / Σ_j (w_j/ρ_j).
pub fn weight_to_volume_fractions(composition: &Composition) -> Result<Vec<(String, f64)>> {
    let mut specific = Vec::with_capacity(composition.entries.len());
    for e in &composition.entries {
        if !(e.material.density > 0.0) {
            return Err(param(
                MODULE,
                format!("{}: density must be positive", e.material.name),
            ));
        }
        specific.push(e.weight_fraction / e.material.density);
    }
    let total: f64 = specific.iter().sum();
    if !(total > 0.0) {
        return Err(validation(MODULE, "composition has zero total volume"));
    }
    Ok(composition
        .entries
        .iter()
        .zip(specific)
        .map(|(e, s)| (e.material.name.clone(), s / total))
        .collect())
}

/// Volume-weighted density of a composition.
pub fn effective_density(composition: &Composition) -> Result<f64> {
    let fractions = weight_to_volume_fractions(composition)?;
    Ok(composition
        .entries
        .iter()
        .zip(&fractions)
        .map(|(e, (_, v))| v * e.material.density)
        .sum())
}

/// Bulk and shear moduli from Young's modulus and Poisson's ratio.
pub fn moduli_from_young_poisson(young: f64, poisson: f64) -> Result<(f64, f64)> {
    if !(young > 0.0) {
        return Err(param(MODULE, "Young's modulus must be positive"));
    }
    if poisson >= 0.5 {
        return Err(Error::Singular {
            module: MODULE,
            msg: format!("Poisson's ratio {poisson} >= 0.5 gives an infinite bulk modulus"),
        });
    }
    if poisson <= -1.0 {
        return Err(Error::Singular {
            module: MODULE,
            msg: format!("Poisson's ratio {poisson} <= -1 gives an infinite shear modulus"),
        });
    }
    Ok((
        young / (3.0 * (1.0 - 2.0 * poisson)),
        young / (2.0 * (1.0 + poisson)),
    ))
}

/// Inverse of [`moduli_from_young_poisson`].
pub fn young_poisson_from_moduli(bulk: f64, shear: f64) -> Result<(f64, f64)> {
    if !(bulk > 0.0) || !(shear > 0.0) {
        return Err(param(MODULE, "moduli must be positive"));
    }
    let young = 9.0 * bulk * shear / (3.0 * bulk + shear);
    let poisson = (3.0 * bulk - 2.0 * shear) / (2.0 * (3.0 * bulk + shear));
    Ok((young, poisson))
}

/// Names of the built-in catalog entries.
pub mod names {
    pub const GRAPHITE: &str = "graphite";
    pub const ANODE_BINDER: &str = "anode_binder";
    pub const LFP: &str = "LiFePO4";
    pub const CATHODE_BINDER: &str = "cathode_binder";
    pub const PP: &str = "PP";
    pub const ELECTROLYTE: &str = "electrolyte";
    pub const CU: &str = "Cu";
    pub const AL: &str = "Al";
}

/// Densities of binder constituents, kg/m³.
const CMC_DENSITY: f64 = 1600.0;
const SBR_DENSITY: f64 = 1520.0;
const CARBON_BLACK_DENSITY: f64 = 2100.0;
const PVDF_DENSITY: f64 = 1780.0;

fn binder_constituent(name: &str) -> MaterialSpec {
    let density = match name {
        "CMC" => CMC_DENSITY,
        "SBR" => SBR_DENSITY,
        "carbon_black" => CARBON_BLACK_DENSITY,
        "PVDF" => PVDF_DENSITY,
        _ => unreachable!(),
    };
    MaterialSpec::density_only(name, density).expect("positive density")
}

/// Anode binder phase: CMC, SBR and carbon black by weight.
pub fn anode_binder_mix() -> Composition {
    Composition::from_weights(vec![
        (binder_constituent("CMC"), 2.25),
        (binder_constituent("SBR"), 2.25),
        (binder_constituent("carbon_black"), 1.0),
    ])
    .expect("static composition")
}

/// Cathode binder phase: PVDF and carbon black by weight.
pub fn cathode_binder_mix() -> Composition {
    Composition::from_weights(vec![
        (binder_constituent("PVDF"), 2.5),
        (binder_constituent("carbon_black"), 4.0),
    ])
    .expect("static composition")
}

/// Materials keyed by name, iterated in sorted order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaterialCatalog {
    materials: BTreeMap<String, MaterialSpec>,
}

impl MaterialCatalog {
    pub fn insert(&mut self, m: MaterialSpec) {
        self.materials.insert(m.name.clone(), m);
    }

    pub fn lookup(&self, name: &str) -> Result<&MaterialSpec> {
        self.materials
            .get(name)
            .or_else(|| {
                self.materials
                    .iter()
                    .find(|(k, _)| k.eq_ignore_ascii_case(name))
                    .map(|(_, v)| v)
            })
            .ok_or_else(|| Error::NotFound(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &MaterialSpec> {
        self.materials.values()
    }

    pub fn len(&self) -> usize {
        self.materials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.materials.is_empty()
    }
}

/// The cell's constituents with their tabulated properties.
pub fn builtin_library() -> MaterialCatalog {
    use names::*;
    let anode_binder_density = effective_density(&anode_binder_mix()).expect("valid mix");
    let cathode_binder_density = effective_density(&cathode_binder_mix()).expect("valid mix");
    let mut cat = MaterialCatalog::default();
    let entries = [
        MaterialSpec::solid(GRAPHITE, 2260.0, 27.0 * GPA, 12.5 * GPA),
        MaterialSpec::solid(ANODE_BINDER, anode_binder_density, 0.56 * GPA, 0.19 * GPA),
        MaterialSpec::solid(LFP, 3500.0, 95.0 * GPA, 45.0 * GPA),
        MaterialSpec::solid(
            CATHODE_BINDER,
            cathode_binder_density,
            1.78 * GPA,
            0.59 * GPA,
        ),
        MaterialSpec::solid(PP, 900.0, 1.38 * GPA, 0.92 * GPA),
        MaterialSpec::fluid(ELECTROLYTE, 1270.0, 1.0 * GPA),
        MaterialSpec::simple_solid(CU, 8960.0, 4600.0),
        MaterialSpec::simple_solid(AL, 2700.0, 6320.0),
    ];
    for m in entries {
        cat.insert(m.expect("static material"));
    }
    cat
}

/// Compositions quoted for the cell, keyed by name.
pub fn builtin_compositions() -> BTreeMap<String, Composition> {
    use names::*;
    let lib = builtin_library();
    let get = |n: &str| lib.lookup(n).expect("builtin").clone();
    let mut out = BTreeMap::new();
    out.insert(
        "anode_solid".to_string(),
        Composition::from_weights(vec![
            (get(GRAPHITE), 94.5),
            (binder_constituent("CMC"), 2.25),
            (binder_constituent("SBR"), 2.25),
            (binder_constituent("carbon_black"), 1.0),
        ])
        .expect("static"),
    );
    out.insert(
        "cathode_solid".to_string(),
        Composition::from_weights(vec![
            (get(LFP), 93.5),
            (binder_constituent("PVDF"), 2.5),
            (binder_constituent("carbon_black"), 4.0),
        ])
        .expect("static"),
    );
    out.insert(
        "cell".to_string(),
        Composition::from_weights(vec![
            (get(LFP), 31.0),
            (get(ELECTROLYTE), 22.0),
            (get(GRAPHITE), 17.0),
            (get(AL), 18.0),
            (get(CU), 10.0),
            (get(PP), 2.0),
        ])
        .expect("static"),
    );
    out.insert("anode_binder".to_string(), anode_binder_mix());
    out.insert("cathode_binder".to_string(), cathode_binder_mix());
    out
}

/// Volume fraction of the binder phase within an electrode's solid phase.
pub fn binder_fraction_of_solid(solid: &Composition, active_name: &str) -> Result<f64> {
    let vf = weight_to_volume_fractions(solid)?;
    let active: f64 = vf
        .iter()
        .filter(|(n, _)| n == active_name)
        .map(|(_, v)| v)
        .sum();
    if vf.iter().all(|(n, _)| n != active_name) {
        return Err(Error::NotFound(active_name.to_string()));
    }
    Ok(1.0 - active)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialRow {
    density_g_cm3: Option<f64>,
    bulk_gpa: Option<f64>,
    shear_gpa: Option<f64>,
    speed_m_s: Option<f64>,
    #[serde(default)]
    fluid: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompositionRow {
    material: String,
    weight_pct: f64,
}

#[derive(Debug, Default, Deserialize)]
struct MaterialsFile {
    #[serde(default)]
    materials: BTreeMap<String, MaterialRow>,
    #[serde(default)]
    compositions: BTreeMap<String, Vec<CompositionRow>>,
}

/// Material catalog plus named compositions loaded from config.
#[derive(Debug, Clone)]
pub struct MaterialsConfig {
    pub catalog: MaterialCatalog,
    pub compositions: BTreeMap<String, Composition>,
}

impl Default for MaterialsConfig {
    fn default() -> Self {
        Self {
            catalog: builtin_library(),
            compositions: builtin_compositions(),
        }
    }
}

impl MaterialsConfig {
    /// Parse `materials.*` and `compositions.*` tables, layered over the
    /// built-in catalog. Other top-level keys are ignored so the same file
    /// can carry subcommand sections.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let value: toml::Value = toml::from_str(text).map_err(|e| config(MODULE, e.to_string()))?;
        Self::from_toml_value(&value)
    }

    pub fn from_toml_value(value: &toml::Value) -> Result<Self> {
        let mut table = toml::value::Table::new();
        if let Some(t) = value.as_table() {
            for key in ["materials", "compositions"] {
                if let Some(v) = t.get(key) {
                    table.insert(key.to_string(), v.clone());
                }
            }
        }
        let file: MaterialsFile = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| config(MODULE, e.to_string()))?;

        let mut cfg = Self::default();
        for (name, row) in file.materials {
            let base = cfg.catalog.lookup(&name).ok().cloned();
            let m = merge_row(&name, base, &row)?;
            cfg.catalog.insert(m);
        }
        for (name, rows) in file.compositions {
            let mut parts = Vec::with_capacity(rows.len());
            for r in rows {
                let m = match cfg.catalog.lookup(&r.material) {
                    Ok(m) => m.clone(),
                    Err(_) => match r.material.as_str() {
                        "CMC" | "SBR" | "carbon_black" | "PVDF" => binder_constituent(&r.material),
                        _ => return Err(Error::NotFound(r.material)),
                    },
                };
                parts.push(CompositionEntry {
                    material: m,
                    weight_fraction: r.weight_pct / 100.0,
                });
            }
            cfg.compositions.insert(name, Composition::new(parts)?);
        }
        Ok(cfg)
    }
}

fn merge_row(name: &str, base: Option<MaterialSpec>, row: &MaterialRow) -> Result<MaterialSpec> {
    let phase = match row.fluid {
        Some(true) => Phase::Fluid,
        Some(false) => Phase::Solid,
        None => base.as_ref().map(|b| b.phase).unwrap_or(
            if row.shear_gpa.is_none() && row.bulk_gpa.is_some() {
                Phase::Fluid
            } else {
                Phase::Solid
            },
        ),
    };
    let density = row
        .density_g_cm3
        .map(|d| d * G_PER_CM3)
        .or(base.as_ref().map(|b| b.density))
        .ok_or_else(|| {
            config(
                MODULE,
                format!("materials.{name}: density_g_cm3 is required"),
            )
        })?;
    let mut m = base.unwrap_or(MaterialSpec {
        name: name.to_string(),
        phase,
        density,
        bulk_modulus: None,
        shear_modulus: None,
        sound_speed: None,
    });
    m.phase = phase;
    m.density = density;
    if let Some(k) = row.bulk_gpa {
        m.bulk_modulus = Some(k * GPA);
    }
    if let Some(g) = row.shear_gpa {
        m.shear_modulus = Some(g * GPA);
    }
    if let Some(c) = row.speed_m_s {
        m.sound_speed = Some(c);
        if m.phase == Phase::Fluid && row.bulk_gpa.is_none() {
            m.bulk_modulus = None;
        }
    } else if m.phase == Phase::Fluid && row.bulk_gpa.is_some() {
        m.sound_speed = None;
    }
    m.validate()?;
    Ok(m)
}
