use std::collections::VecDeque;
use std::io::{Read, Write};

use crate::error::{param, validation, Error, Result};
use crate::materials::{MaterialSpec, Phase};

const MODULE: &str = "microsim";
const MAGIC: &[u8; 4] = b"PCEL";

/// 3-D material-id grid, x-fastest storage.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    dims: [usize; 3],
    h: f64,
    ids: Vec<u8>,
    materials: Vec<MaterialSpec>,
}

impl VoxelGrid {
    pub fn new(
        dims: [usize; 3],
        h: f64,
        ids: Vec<u8>,
        materials: Vec<MaterialSpec>,
    ) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(param(MODULE, "grid dimensions must be positive"));
        }
        if !(h > 0.0) {
            return Err(param(MODULE, "voxel size must be positive"));
        }
        if ids.len() != dims[0] * dims[1] * dims[2] {
            return Err(param(MODULE, "id buffer does not match grid dimensions"));
        }
        if let Some(&bad) = ids.iter().find(|&&id| id as usize >= materials.len()) {
            return Err(param(MODULE, format!("material id {bad} has no material")));
        }
        Ok(Self {
            dims,
            h,
            ids,
            materials,
        })
    }

    /// Homogeneous block of a single material.
    pub fn uniform(dims: [usize; 3], h: f64, material: MaterialSpec) -> Result<Self> {
        Self::new(
            dims,
            h,
            vec![0; dims[0] * dims[1] * dims[2]],
            vec![material],
        )
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn voxel_size(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[u8] {
        &self.ids
    }

    pub fn materials(&self) -> &[MaterialSpec] {
        &self.materials
    }

    pub fn materials_mut(&mut self) -> &mut [MaterialSpec] {
        &mut self.materials
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn id(&self, i: usize, j: usize, k: usize) -> u8 {
        self.ids[self.index(i, j, k)]
    }

    pub fn length_x(&self) -> f64 {
        self.dims[0] as f64 * self.h
    }

    pub fn count(&self, id: u8) -> usize {
        self.ids.iter().filter(|&&v| v == id).count()
    }

    pub fn volume_fraction(&self, id: u8) -> f64 {
        self.count(id) as f64 / self.ids.len() as f64
    }

    fn is_solid(&self, id: u8) -> bool {
        self.materials[id as usize].phase == Phase::Solid
    }

    pub fn solid_fraction(&self) -> f64 {
        self.ids.iter().filter(|&&v| self.is_solid(v)).count() as f64 / self.ids.len() as f64
    }

    /// Repeat the grid `n` times along x.
    pub fn tiled_x(&self, n: usize) -> Result<VoxelGrid> {
        if n == 0 {
            return Err(param(MODULE, "tile count must be positive"));
        }
        let [nx, ny, nz] = self.dims;
        let mut ids = Vec::with_capacity(self.ids.len() * n);
        for row in self.ids.chunks(nx) {
            for _ in 0..n {
                ids.extend_from_slice(row);
            }
        }
        debug_assert_eq!(ids.len(), nx * n * ny * nz);
        VoxelGrid::new([nx * n, ny, nz], self.h, ids, self.materials.clone())
    }

    /// Cyclic shift of the microstructure in y and z.
    pub fn shifted_lateral(&self, dy: usize, dz: usize) -> VoxelGrid {
        let [nx, ny, nz] = self.dims;
        let mut ids = vec![0u8; self.ids.len()];
        for k in 0..nz {
            for j in 0..ny {
                let src = self.index(0, (j + ny - dy % ny) % ny, (k + nz - dz % nz) % nz);
                let dst = self.index(0, j, k);
                ids[dst..dst + nx].copy_from_slice(&self.ids[src..src + nx]);
            }
        }
        VoxelGrid {
            dims: self.dims,
            h: self.h,
            ids,
            materials: self.materials.clone(),
        }
    }

    /// Number of 6-connected components of voxels whose phase matches.
    /// Lateral faces wrap periodically when `periodic_lateral` is set.
    pub fn phase_components(&self, phase: Phase, periodic_lateral: bool) -> usize {
        let [nx, ny, nz] = self.dims;
        let member: Vec<bool> = self
            .ids
            .iter()
            .map(|&id| self.materials[id as usize].phase == phase)
            .collect();
        let mut seen = vec![false; member.len()];
        let mut components = 0;
        let mut queue = VecDeque::new();
        for start in 0..member.len() {
            if !member[start] || seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(c) = queue.pop_front() {
                let i = c % nx;
                let j = (c / nx) % ny;
                let k = c / (nx * ny);
                let mut visit = |n: usize| {
                    if member[n] && !seen[n] {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                };
                if i > 0 {
                    visit(c - 1);
                }
                if i + 1 < nx {
                    visit(c + 1);
                }
                for (coord, extent, stride) in [(j, ny, nx), (k, nz, nx * ny)] {
                    if coord > 0 {
                        visit(c - stride);
                    } else if periodic_lateral && extent > 1 {
                        visit(c + (extent - 1) * stride);
                    }
                    if coord + 1 < extent {
                        visit(c + stride);
                    } else if periodic_lateral && extent > 1 {
                        visit(c - (extent - 1) * stride);
                    }
                }
            }
        }
        components
    }

    /// Flat binary dump: `PCEL`, u32 nx ny nz, f64 h, one id byte per voxel.
    pub fn write_pcel<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        for d in self.dims {
            let d = u32::try_from(d).map_err(|_| param(MODULE, "grid too large for PCEL"))?;
            w.write_all(&d.to_le_bytes())?;
        }
        w.write_all(&self.h.to_le_bytes())?;
        w.write_all(&self.ids)?;
        Ok(())
    }

    /// Read a dump written by [`write_pcel`](Self::write_pcel); the id → material
    /// table is not part of the format and must be supplied.
    pub fn read_pcel<R: Read>(mut r: R, materials: Vec<MaterialSpec>) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(validation(MODULE, "not a PCEL grid dump"));
        }
        let mut dims = [0usize; 3];
        for d in &mut dims {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            *d = u32::from_le_bytes(b) as usize;
        }
        let mut hb = [0u8; 8];
        r.read_exact(&mut hb)?;
        let h = f64::from_le_bytes(hb);
        let mut ids = vec![0u8; dims[0] * dims[1] * dims[2]];
        r.read_exact(&mut ids).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => validation(MODULE, "PCEL payload truncated"),
            _ => Error::Io(e),
        })?;
        Self::new(dims, h, ids, materials)
    }
}
