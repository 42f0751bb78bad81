//! Periodic unit cells for electrode and separator microstructures.
//!
//! Particle size is honoured exactly: the voxel size is adjusted so the
//! particle spans an integer number of voxels. Cell edge and bridge section
//! are then solved on the voxel lattice so that the solid fraction and the
//! binder share of the solid match their targets.

use serde::{Deserialize, Serialize};

use super::grid::VoxelGrid;
use crate::error::{param, Error, Result};
use crate::materials::MaterialSpec;

const MODULE: &str = "microsim";

pub const FLUID_ID: u8 = 0;
pub const ACTIVE_ID: u8 = 1;
pub const BINDER_ID: u8 = 2;
pub const STRUT_ID: u8 = 1;

/// Allowed deviation of the voxelized solid fraction from 1 − φ.
pub const SOLID_FRACTION_TOL: f64 = 0.02;
/// Allowed deviation of the voxelized binder share of the solid.
pub const BINDER_FRACTION_TOL: f64 = 0.01;
/// Minimum binder bridge section, in voxels.
pub const MIN_BRIDGE_VOXELS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lattice {
    SimpleCubic,
    BodyCentered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicrostructureSpec {
    pub lattice: Lattice,
    /// m
    pub particle_size: f64,
    pub porosity: f64,
    pub active_material: MaterialSpec,
    pub binder_material: MaterialSpec,
    pub binder_volume_fraction_of_solid: f64,
    pub fluid: MaterialSpec,
    /// Requested voxel size, m. The generator may adjust it slightly so the
    /// particle spans an integer number of voxels.
    pub voxel_size: f64,
    /// Number of unit cells along x; derived from `propagation_length` when absent.
    pub cells_along_propagation: Option<usize>,
    /// m
    pub propagation_length: f64,
}

impl MicrostructureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.porosity > 0.0 && self.porosity < 1.0) {
            return Err(param(MODULE, "porosity must lie in (0, 1)"));
        }
        if !(self.binder_volume_fraction_of_solid > 0.0
            && self.binder_volume_fraction_of_solid < 0.3)
        {
            return Err(param(
                MODULE,
                "binder fraction of solid must lie in (0, 0.3)",
            ));
        }
        if !(self.particle_size > 0.0) || !(self.voxel_size > 0.0) {
            return Err(param(MODULE, "particle and voxel sizes must be positive"));
        }
        if self.propagation_length < 100.0 * self.particle_size {
            return Err(param(
                MODULE,
                "propagation length must be at least 100 particle sizes to separate fast and slow arrivals",
            ));
        }
        Ok(())
    }
}

/// Achieved unit-cell dimensions, in voxels unless noted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellGeometry {
    pub lattice_kind: &'static str,
    /// m
    pub voxel_size: f64,
    pub cell_voxels: usize,
    pub particle_voxels: usize,
    /// Bridge section (simple cubic) or 2× bridge radius (body centred).
    pub bridge_voxels: (f64, f64),
    pub solid_fraction: f64,
    pub binder_fraction_of_solid: f64,
}

#[derive(Debug, Clone)]
pub struct Microstructure {
    pub unit_cell: VoxelGrid,
    pub geometry: CellGeometry,
}

impl Microstructure {
    /// Tile the unit cell along x to cover `length`.
    pub fn tiled_to(&self, length: f64) -> Result<VoxelGrid> {
        let cell = self.unit_cell.length_x();
        self.unit_cell
            .tiled_x(((length / cell) - 1e-9).ceil().max(1.0) as usize)
    }
}

fn electrode_materials(spec: &MicrostructureSpec) -> Vec<MaterialSpec> {
    vec![
        spec.fluid.clone(),
        spec.active_material.clone(),
        spec.binder_material.clone(),
    ]
}

fn particle_candidates(particle_size: f64, h: f64) -> Vec<usize> {
    let target = (particle_size / h).round().max(2.0) as usize;
    let mut out = vec![target];
    for d in 1..=2 {
        out.push(target + d);
        if target > d + 1 {
            out.push(target - d);
        }
    }
    out
}

fn fraction_cost(solid: f64, binder: f64, target_solid: f64, target_binder: f64) -> Option<f64> {
    let es = (solid - target_solid).abs();
    let eb = (binder - target_binder).abs();
    (es <= SOLID_FRACTION_TOL && eb <= BINDER_FRACTION_TOL)
        .then(|| (es / SOLID_FRACTION_TOL).powi(2) + (eb / BINDER_FRACTION_TOL).powi(2))
}

fn in_span(x: usize, start: usize, len: usize) -> bool {
    x >= start && x < start + len
}

/// Voxel ids of a simple-cubic cell: a cubic particle of edge `a` centred in a
/// cell of edge `l`, with an `sy × sz` binder bar along each axis spanning the gap.
fn simple_cubic_ids(l: usize, a: usize, sy: usize, sz: usize) -> Vec<u8> {
    let p0 = (l - a) / 2;
    let q = |s: usize| p0 + (a - s) / 2;
    let (qy, qz) = (q(sy), q(sz));
    let mut ids = vec![FLUID_ID; l * l * l];
    for z in 0..l {
        for y in 0..l {
            for x in 0..l {
                let (px, py, pz) = (in_span(x, p0, a), in_span(y, p0, a), in_span(z, p0, a));
                let id = if px && py && pz {
                    ACTIVE_ID
                } else if sy > 0
                    && ((in_span(y, qy, sy) && in_span(z, qz, sz) && !px)
                        || (in_span(z, qy, sy) && in_span(x, qz, sz) && !py)
                        || (in_span(x, qy, sy) && in_span(y, qz, sz) && !pz))
                {
                    BINDER_ID
                } else {
                    FLUID_ID
                };
                ids[x + l * (y + l * z)] = id;
            }
        }
    }
    ids
}

fn fractions(ids: &[u8]) -> (f64, f64) {
    let active = ids.iter().filter(|&&v| v == ACTIVE_ID).count() as f64;
    let binder = ids.iter().filter(|&&v| v == BINDER_ID).count() as f64;
    let solid = active + binder;
    (
        solid / ids.len() as f64,
        if solid > 0.0 { binder / solid } else { 0.0 },
    )
}

/// Search the voxel lattice for a simple-cubic cell meeting the targets.
pub fn simple_cubic_cell(
    particle_size: f64,
    porosity: f64,
    binder_fraction: f64,
    voxel_size: f64,
    materials: Vec<MaterialSpec>,
) -> Result<Microstructure> {
    if !(0.0..1.0).contains(&porosity) || !(0.0..0.3).contains(&binder_fraction) {
        return Err(param(
            MODULE,
            "porosity must lie in [0, 1) and binder fraction in [0, 0.3)",
        ));
    }
    let target_solid = 1.0 - porosity;
    let mut best: Option<(f64, usize, usize, usize, usize)> = None;
    for a in particle_candidates(particle_size, voxel_size) {
        let l_cont = a as f64 * (1.0 / ((1.0 - binder_fraction) * target_solid)).cbrt();
        let l_lo = (l_cont.floor() as usize).saturating_sub(1).max(a);
        for l in l_lo..=(l_cont.ceil() as usize + 1) {
            let gap = l - a;
            let sections: Vec<(usize, usize)> = if binder_fraction == 0.0 {
                vec![(0, 0)]
            } else if gap == 0 {
                vec![]
            } else {
                (MIN_BRIDGE_VOXELS..=a)
                    .flat_map(|sy| (sy..=(sy + 1).min(a)).map(move |sz| (sy, sz)))
                    .collect()
            };
            for (sy, sz) in sections {
                let particle = (a * a * a) as f64;
                let binder = (3 * gap * sy * sz) as f64;
                let cell = (l * l * l) as f64;
                let solid = (particle + binder) / cell;
                let share = binder / (particle + binder);
                if let Some(cost) = fraction_cost(solid, share, target_solid, binder_fraction) {
                    if best.map_or(true, |b| cost < b.0) {
                        best = Some((cost, a, l, sy, sz));
                    }
                }
            }
        }
        if best.is_some() {
            break;
        }
    }
    let (_, a, l, sy, sz) = best.ok_or_else(|| {
        Error::GeometryInfeasible(format!(
            "no simple-cubic cell reaches solid fraction {target_solid:.3} with binder share {binder_fraction:.3} \
             and bridges of at least {MIN_BRIDGE_VOXELS} voxels"
        ))
    })?;
    let h = particle_size / a as f64;
    let ids = simple_cubic_ids(l, a, sy, sz);
    let (solid, share) = fractions(&ids);
    let unit_cell = VoxelGrid::new([l, l, l], h, ids, materials)?;
    Ok(Microstructure {
        unit_cell,
        geometry: CellGeometry {
            lattice_kind: "simple_cubic",
            voxel_size: h,
            cell_voxels: l,
            particle_voxels: a,
            bridge_voxels: (sy as f64, sz as f64),
            solid_fraction: solid,
            binder_fraction_of_solid: share,
        },
    })
}

fn dist2_to_segment(p: [f64; 3], a: [f64; 3], b: [f64; 3]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let ap = [p[0] - a[0], p[1] - a[1], p[2] - a[2]];
    let len2 = ab.iter().map(|v| v * v).sum::<f64>();
    let t = (ap.iter().zip(&ab).map(|(x, y)| x * y).sum::<f64>() / len2).clamp(0.0, 1.0);
    (0..3).map(|i| (ap[i] - t * ab[i]).powi(2)).sum()
}

/// Body-centred cell: spheres of diameter `d` at the centre and the corners,
/// joined by cylindrical binder bridges of radius `rb` along the eight
/// half-diagonals. Face contacts between the centre and corner spheres are
/// converted to binder so that particles always meet through binder.
fn body_centered_ids(l: usize, d: f64, rb: f64) -> Vec<u8> {
    let lf = l as f64;
    let c = [lf / 2.0; 3];
    let r2 = (d / 2.0) * (d / 2.0);
    let corners: Vec<[f64; 3]> = (0..8)
        .map(|m| {
            [
                ((m & 1) as f64) * lf,
                (((m >> 1) & 1) as f64) * lf,
                (((m >> 2) & 1) as f64) * lf,
            ]
        })
        .collect();
    // 0 none, 1 centre sphere, 2 corner sphere
    let mut owner = vec![0u8; l * l * l];
    let mut centre_d2 = vec![0.0f64; l * l * l];
    let mut ids = vec![FLUID_ID; l * l * l];
    for z in 0..l {
        for y in 0..l {
            for x in 0..l {
                let p = [x as f64 + 0.5, y as f64 + 0.5, z as f64 + 0.5];
                let idx = x + l * (y + l * z);
                let dc: f64 = (0..3).map(|i| (p[i] - c[i]).powi(2)).sum();
                let dk = corners
                    .iter()
                    .map(|q| (0..3).map(|i| (p[i] - q[i]).powi(2)).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                if dc <= r2 && dc <= dk {
                    owner[idx] = 1;
                    centre_d2[idx] = dc / r2;
                    ids[idx] = ACTIVE_ID;
                } else if dk <= r2 {
                    owner[idx] = 2;
                    centre_d2[idx] = dk / r2;
                    ids[idx] = ACTIVE_ID;
                } else if rb > 0.0
                    && corners
                        .iter()
                        .any(|q| dist2_to_segment(p, c, *q) <= rb * rb)
                {
                    ids[idx] = BINDER_ID;
                }
            }
        }
    }
    let idx = |x: usize, y: usize, z: usize| (x % l) + l * ((y % l) + l * (z % l));
    let mut contacts = Vec::new();
    for z in 0..l {
        for y in 0..l {
            for x in 0..l {
                let here = idx(x, y, z);
                if owner[here] == 0 {
                    continue;
                }
                for n in [idx(x + 1, y, z), idx(x, y + 1, z), idx(x, y, z + 1)] {
                    if owner[n] != 0 && owner[n] != owner[here] {
                        // The voxel farther from its own sphere centre yields.
                        contacts.push(if centre_d2[here] >= centre_d2[n] {
                            here
                        } else {
                            n
                        });
                    }
                }
            }
        }
    }
    for v in contacts {
        ids[v] = BINDER_ID;
    }
    ids
}

/// Search for a body-centred cell meeting the targets.
pub fn body_centered_cell(
    particle_size: f64,
    porosity: f64,
    binder_fraction: f64,
    voxel_size: f64,
    materials: Vec<MaterialSpec>,
) -> Result<Microstructure> {
    if !(0.0..1.0).contains(&porosity) || !(0.0..0.3).contains(&binder_fraction) {
        return Err(param(
            MODULE,
            "porosity must lie in [0, 1) and binder fraction in [0, 0.3)",
        ));
    }
    let target_solid = 1.0 - porosity;
    let sphere = std::f64::consts::PI / 6.0;
    let mut best: Option<(f64, usize, usize, f64, Vec<u8>)> = None;
    for d in particle_candidates(particle_size, voxel_size) {
        let df = d as f64;
        let l_cont = (2.0 * sphere * df.powi(3) / ((1.0 - binder_fraction) * target_solid)).cbrt();
        let l_lo = (l_cont.floor() as usize).saturating_sub(1).max(2);
        for l in l_lo..=(l_cont.ceil() as usize + 1) {
            // Near-neighbour spacing must leave room for a binder layer.
            if (l as f64) * 3f64.sqrt() / 2.0 < df * 0.9 {
                continue;
            }
            let mut radii = vec![0.0];
            if binder_fraction > 0.0 {
                radii.extend(
                    (1..=((df / 2.0) / 0.1) as usize)
                        .map(|i| MIN_BRIDGE_VOXELS as f64 / 2.0 + 0.1 * i as f64),
                );
            }
            for rb in radii {
                let ids = body_centered_ids(l, df, rb);
                let (solid, share) = fractions(&ids);
                let overshoot = share > binder_fraction + BINDER_FRACTION_TOL;
                if let Some(cost) = fraction_cost(solid, share, target_solid, binder_fraction) {
                    if best.as_ref().map_or(true, |b| cost < b.0) {
                        best = Some((cost, d, l, rb, ids));
                    }
                }
                if overshoot {
                    break;
                }
            }
        }
        if best.is_some() {
            break;
        }
    }
    let (_, d, l, rb, ids) = best.ok_or_else(|| {
        Error::GeometryInfeasible(format!(
            "no body-centred cell reaches solid fraction {target_solid:.3} with binder share {binder_fraction:.3}"
        ))
    })?;
    let h = particle_size / d as f64;
    let (solid, share) = fractions(&ids);
    let unit_cell = VoxelGrid::new([l, l, l], h, ids, materials)?;
    Ok(Microstructure {
        unit_cell,
        geometry: CellGeometry {
            lattice_kind: "body_centered",
            voxel_size: h,
            cell_voxels: l,
            particle_voxels: d,
            bridge_voxels: (2.0 * rb, 2.0 * rb),
            solid_fraction: solid,
            binder_fraction_of_solid: share,
        },
    })
}

pub fn generate_simple_cubic(spec: &MicrostructureSpec) -> Result<(VoxelGrid, CellGeometry)> {
    spec.validate()?;
    let m = simple_cubic_cell(
        spec.particle_size,
        spec.porosity,
        spec.binder_volume_fraction_of_solid,
        spec.voxel_size,
        electrode_materials(spec),
    )?;
    tile(spec, m)
}

pub fn generate_body_centered(spec: &MicrostructureSpec) -> Result<(VoxelGrid, CellGeometry)> {
    spec.validate()?;
    let m = body_centered_cell(
        spec.particle_size,
        spec.porosity,
        spec.binder_volume_fraction_of_solid,
        spec.voxel_size,
        electrode_materials(spec),
    )?;
    tile(spec, m)
}

/// Dispatch on the lattice kind.
pub fn generate_electrode(spec: &MicrostructureSpec) -> Result<(VoxelGrid, CellGeometry)> {
    match spec.lattice {
        Lattice::SimpleCubic => generate_simple_cubic(spec),
        Lattice::BodyCentered => generate_body_centered(spec),
    }
}

fn tile(spec: &MicrostructureSpec, m: Microstructure) -> Result<(VoxelGrid, CellGeometry)> {
    let grid = match spec.cells_along_propagation {
        Some(n) => m.unit_cell.tiled_x(n)?,
        None => m.tiled_to(spec.propagation_length)?,
    };
    Ok((grid, m.geometry))
}

fn lattice_ids(l: usize, sy: usize, sz: usize) -> Vec<u8> {
    let qy = (l - sy) / 2;
    let qz = (l - sz) / 2;
    let mut ids = vec![FLUID_ID; l * l * l];
    for z in 0..l {
        for y in 0..l {
            for x in 0..l {
                let strut = (in_span(y, qy, sy) && in_span(z, qz, sz))
                    || (in_span(z, qy, sy) && in_span(x, qz, sz))
                    || (in_span(x, qy, sy) && in_span(y, qz, sz));
                if strut {
                    ids[x + l * (y + l * z)] = STRUT_ID;
                }
            }
        }
    }
    ids
}

/// Strut period giving solid fraction 0.606 with 4-voxel struts at 1 µm.
pub const DEFAULT_SEPARATOR_PERIOD: f64 = 7e-6;

/// Separator unit cell: cubic lattice of square-section struts.
pub fn separator_cell(
    porosity: f64,
    strut_material: MaterialSpec,
    fluid: MaterialSpec,
    lattice_period: f64,
    voxel_size: f64,
) -> Result<Microstructure> {
    if !(0.0..1.0).contains(&porosity) || !(lattice_period > 0.0) || !(voxel_size > 0.0) {
        return Err(param(
            MODULE,
            "porosity must lie in [0, 1) and sizes must be positive",
        ));
    }
    let target = 1.0 - porosity;
    let lt = (lattice_period / voxel_size).round().max(2.0) as usize;
    // Square struts if possible, else one voxel of aspect; periods within ±4 voxels,
    // closest fraction wins with a small pull towards the requested period.
    let mut best: Option<(f64, usize, usize, usize)> = None;
    for aspect in 0..=1usize {
        for l in lt.saturating_sub(4).max(2)..=lt + 4 {
            for sy in 1..=l {
                let sz = sy + aspect;
                if sz > l {
                    continue;
                }
                let ids = lattice_ids(l, sy, sz);
                let frac = ids.iter().filter(|&&v| v == STRUT_ID).count() as f64 / ids.len() as f64;
                let err = (frac - target).abs();
                let cost = err + 1e-4 * l.abs_diff(lt) as f64;
                if err <= SOLID_FRACTION_TOL && best.map_or(true, |b| cost < b.0) {
                    best = Some((cost, l, sy, sz));
                }
            }
        }
        if best.is_some() {
            break;
        }
    }
    let (_, l, sy, sz) = best.ok_or_else(|| {
        Error::GeometryInfeasible(format!(
            "no strut lattice reaches solid fraction {target:.3}"
        ))
    })?;
    let ids = lattice_ids(l, sy, sz);
    let unit_cell = VoxelGrid::new([l, l, l], voxel_size, ids, vec![fluid, strut_material])?;
    let solid = unit_cell.solid_fraction();
    Ok(Microstructure {
        unit_cell,
        geometry: CellGeometry {
            lattice_kind: "strut_lattice",
            voxel_size,
            cell_voxels: l,
            particle_voxels: 0,
            bridge_voxels: (sy as f64, sz as f64),
            solid_fraction: solid,
            binder_fraction_of_solid: 0.0,
        },
    })
}

/// Separator grid of the requested length.
pub fn generate_separator(
    porosity: f64,
    strut_material: MaterialSpec,
    fluid: MaterialSpec,
    lattice_period: f64,
    voxel_size: f64,
    propagation_length: f64,
) -> Result<(VoxelGrid, CellGeometry)> {
    let m = separator_cell(porosity, strut_material, fluid, lattice_period, voxel_size)?;
    Ok((m.tiled_to(propagation_length)?, m.geometry))
}
