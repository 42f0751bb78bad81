//! Explicit staggered-grid velocity–stress solver on a voxel grid.
//!
//! Normal stresses live at voxel centres, particle velocities on voxel faces
//! and shear stresses on voxel edges. Fluid voxels are elastic with zero
//! shear modulus, so a single update rule carries both phases and the
//! interface conditions (continuous normal traction and normal motion) hold
//! without explicit interface tracking.
//!
//! Boundaries: the x = 0 face carries the source as a uniform normal
//! traction; the far x face is rigid or traction-free; lateral faces are
//! mirror planes (zero normal velocity and zero tangential traction) or
//! periodic.
//!
//! Per-step updates are partitioned into z-slabs; every field value has a
//! single writer and receiver averages are summed sequentially, so results
//! do not depend on the number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::VoxelGrid;
use crate::error::{param, Error, Result};
use crate::waveform::{PulseSpec, Trace};

const MODULE: &str = "microsim";

/// Field and coefficient precision of the time-stepping kernel.
pub type Real = f32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LateralBoundary {
    #[default]
    Mirror,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EndBoundary {
    #[default]
    Rigid,
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    /// Time step, s. Derived from `cfl_safety` when absent.
    pub dt: Option<f64>,
    pub n_steps: usize,
    /// Normal traction applied on the x = 0 face, Pa per unit amplitude.
    pub source: PulseSpec,
    /// x-positions of the receiver planes, m.
    pub receiver_planes: Vec<f64>,
    pub cfl_safety: f64,
    pub lateral: LateralBoundary,
    pub end: EndBoundary,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            dt: None,
            n_steps: 0,
            source: PulseSpec::default(),
            receiver_planes: vec![0.8e-3, 1.1e-3],
            cfl_safety: 0.5,
            lateral: LateralBoundary::Mirror,
            end: EndBoundary::Rigid,
        }
    }
}

/// Plane-averaged normal stress recorded at each receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    pub positions: Vec<f64>,
    pub traces: Vec<Trace>,
}

impl TraceSet {
    pub fn dt(&self) -> f64 {
        self.traces[0].dt()
    }

    /// Sample-wise mean of two trace sets with identical layout.
    pub fn averaged(&self, other: &TraceSet) -> Result<TraceSet> {
        if self.positions != other.positions || self.traces.len() != other.traces.len() {
            return Err(param(MODULE, "trace sets differ in layout"));
        }
        let traces = self
            .traces
            .iter()
            .zip(&other.traces)
            .map(|(a, b)| {
                let s = a
                    .samples()
                    .iter()
                    .zip(b.samples())
                    .map(|(x, y)| 0.5 * (x + y))
                    .collect();
                Trace::new(a.dt(), s)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TraceSet {
            positions: self.positions.clone(),
            traces,
        })
    }
}

/// Largest stable time step for the grid: h / (c_max √3).
pub fn cfl_limit(grid: &VoxelGrid) -> Result<f64> {
    let mut c_max = 0.0f64;
    let present: Vec<bool> = {
        let mut p = vec![false; grid.materials().len()];
        for &id in grid.ids() {
            p[id as usize] = true;
        }
        p
    };
    for (m, used) in grid.materials().iter().zip(present) {
        if used {
            c_max = c_max.max(m.elastic()?.longitudinal_speed());
        }
    }
    Ok(grid.voxel_size() / (c_max * 3f64.sqrt()))
}

/// Time step the solver will use: the configured one, checked against the
/// stability limit, or `cfl_safety` × the limit.
pub fn time_step(grid: &VoxelGrid, cfg: &SimulationConfig) -> Result<f64> {
    if !(cfg.cfl_safety > 0.0 && cfg.cfl_safety < 1.0) {
        return Err(param(MODULE, "cfl_safety must lie in (0, 1)"));
    }
    let limit = cfg.cfl_safety * cfl_limit(grid)?;
    match cfg.dt {
        Some(dt) if !(dt > 0.0) => Err(param(MODULE, "time step must be positive")),
        Some(dt) if dt > limit => Err(Error::Cfl { dt, limit }),
        Some(dt) => Ok(dt),
        None => Ok(limit),
    }
}

/// Particle velocity and stress fields.
#[derive(Debug, Clone)]
pub struct FieldState {
    pub vx: Vec<Real>,
    pub vy: Vec<Real>,
    pub vz: Vec<Real>,
    /// Velocity of the far x face (free end only).
    pub vx_end: Vec<Real>,
    pub sxx: Vec<Real>,
    pub syy: Vec<Real>,
    pub szz: Vec<Real>,
    pub sxy: Vec<Real>,
    pub sxz: Vec<Real>,
    pub syz: Vec<Real>,
}

impl FieldState {
    fn zeros(n: usize, n_lateral: usize) -> Self {
        Self {
            vx: vec![0.0; n],
            vy: vec![0.0; n],
            vz: vec![0.0; n],
            vx_end: vec![0.0; n_lateral],
            sxx: vec![0.0; n],
            syy: vec![0.0; n],
            szz: vec![0.0; n],
            sxy: vec![0.0; n],
            sxz: vec![0.0; n],
            syz: vec![0.0; n],
        }
    }

    pub fn is_finite(&self) -> bool {
        [
            &self.vx, &self.vy, &self.vz, &self.sxx, &self.syy, &self.szz, &self.sxy, &self.sxz,
            &self.syz,
        ]
        .iter()
        .all(|f| f.iter().all(|v| v.is_finite()))
    }
}

/// Material coefficients sampled onto the staggered grid.
struct Coefficients {
    /// Buoyancy 1/ρ on x, y, z faces; zero where the face velocity is pinned.
    bx: Vec<Real>,
    by: Vec<Real>,
    bz: Vec<Real>,
    /// λ + 2μ and λ at voxel centres.
    l2m: Vec<Real>,
    lam: Vec<Real>,
    /// Harmonic-mean μ on xy, xz, yz edges; zero at traction-free edges.
    mxy: Vec<Real>,
    mxz: Vec<Real>,
    myz: Vec<Real>,
    /// Buoyancy of the last x layer (free end face).
    b_end: Vec<Real>,
}

fn harmonic4(m: [f64; 4]) -> Real {
    if m.iter().any(|&v| v <= 0.0) {
        0.0
    } else {
        (4.0 / m.iter().map(|v| 1.0 / v).sum::<f64>()) as Real
    }
}

impl Coefficients {
    fn build(grid: &VoxelGrid, lateral: LateralBoundary) -> Result<Self> {
        let [nx, ny, nz] = grid.dims();
        let n = grid.len();
        let elastic = grid
            .materials()
            .iter()
            .map(|m| m.elastic())
            .collect::<Result<Vec<_>>>()?;
        let rho: Vec<f64> = grid
            .ids()
            .iter()
            .map(|&id| elastic[id as usize].density)
            .collect();
        let mu: Vec<f64> = grid
            .ids()
            .iter()
            .map(|&id| elastic[id as usize].mu)
            .collect();
        let periodic = lateral == LateralBoundary::Periodic;
        let idx = |i: usize, j: usize, k: usize| i + nx * (j + ny * k);
        // Lower neighbour along a lateral axis, honouring the boundary kind.
        let lower = |c: usize, extent: usize| -> Option<usize> {
            if c > 0 {
                Some(c - 1)
            } else if periodic {
                Some(extent - 1)
            } else {
                None
            }
        };

        let mut co = Coefficients {
            bx: vec![0.0; n],
            by: vec![0.0; n],
            bz: vec![0.0; n],
            l2m: vec![0.0; n],
            lam: vec![0.0; n],
            mxy: vec![0.0; n],
            mxz: vec![0.0; n],
            myz: vec![0.0; n],
            b_end: vec![0.0; ny * nz],
        };
        for k in 0..nz {
            for j in 0..ny {
                co.b_end[j + ny * k] = (1.0 / rho[idx(nx - 1, j, k)]) as Real;
                for i in 0..nx {
                    let c = idx(i, j, k);
                    let e = elastic[grid.ids()[c] as usize];
                    co.l2m[c] = e.p_modulus() as Real;
                    co.lam[c] = e.lambda as Real;
                    co.bx[c] = (if i > 0 {
                        2.0 / (rho[c - 1] + rho[c])
                    } else {
                        1.0 / rho[c]
                    }) as Real;
                    let jm = lower(j, ny);
                    let km = lower(k, nz);
                    if let Some(jm) = jm {
                        co.by[c] = (2.0 / (rho[idx(i, jm, k)] + rho[c])) as Real;
                    }
                    if let Some(km) = km {
                        co.bz[c] = (2.0 / (rho[idx(i, j, km)] + rho[c])) as Real;
                    }
                    if i > 0 {
                        if let Some(jm) = jm {
                            co.mxy[c] = harmonic4([
                                mu[idx(i - 1, jm, k)],
                                mu[idx(i, jm, k)],
                                mu[idx(i - 1, j, k)],
                                mu[c],
                            ]);
                        }
                        if let Some(km) = km {
                            co.mxz[c] = harmonic4([
                                mu[idx(i - 1, j, km)],
                                mu[idx(i, j, km)],
                                mu[idx(i - 1, j, k)],
                                mu[c],
                            ]);
                        }
                    }
                    if let (Some(jm), Some(km)) = (jm, km) {
                        co.myz[c] = harmonic4([
                            mu[idx(i, jm, km)],
                            mu[idx(i, j, km)],
                            mu[idx(i, jm, k)],
                            mu[c],
                        ]);
                    }
                }
            }
        }
        Ok(co)
    }
}

/// Row of `a` starting at `start`, or the zero row for a missing neighbour.
fn seg_or<'a>(a: &'a [Real], start: Option<usize>, zeros: &'a [Real]) -> &'a [Real] {
    start.map_or(zeros, |s| &a[s..s + zeros.len()])
}

/// Update of a face velocity driven by σ_xy (or σ_xz) along x and two
/// lateral stress differences: `v += q b (Δx s + (a0 − a1) + (b0 − b1))`.
fn lateral_row(
    q: Real,
    v: &mut [Real],
    b: &[Real],
    shear: &[Real],
    a: (&[Real], &[Real]),
    c: (&[Real], &[Real]),
) {
    let n = v.len() - 1;
    let (a0, a1) = a;
    let (c0, c1) = c;
    let body = |((((v, b), (s1, s0)), (a0, a1)), (c0, c1)): (
        (((&mut Real, &Real), (&Real, &Real)), (&Real, &Real)),
        (&Real, &Real),
    )| {
        *v += q * b * ((s1 - s0) + (a0 - a1) + (c0 - c1));
    };
    v[..n]
        .iter_mut()
        .zip(&b[..n])
        .zip(shear[1..].iter().zip(&shear[..n]))
        .zip(a0.iter().zip(a1))
        .zip(c0.iter().zip(c1))
        .for_each(body);
    // The far x edge carries no shear traction.
    v[n] += q * b[n] * ((0.0 - shear[n]) + (a0[n] - a1[n]) + (c0[n] - c1[n]));
}

/// Start offsets of lateral neighbour rows.
#[derive(Clone, Copy)]
struct Neighbours {
    nx: usize,
    ny: usize,
    nz: usize,
    periodic: bool,
}

impl Neighbours {
    fn row(&self, j: usize, k: usize) -> usize {
        (j + self.ny * k) * self.nx
    }

    fn up_y(&self, j: usize, k: usize) -> Option<usize> {
        if j + 1 < self.ny {
            Some(self.row(j + 1, k))
        } else {
            self.periodic.then(|| self.row(0, k))
        }
    }

    fn down_y(&self, j: usize, k: usize) -> Option<usize> {
        if j > 0 {
            Some(self.row(j - 1, k))
        } else {
            self.periodic.then(|| self.row(self.ny - 1, k))
        }
    }

    fn up_z(&self, j: usize, k: usize) -> Option<usize> {
        if k + 1 < self.nz {
            Some(self.row(j, k + 1))
        } else {
            self.periodic.then(|| self.row(j, 0))
        }
    }

    fn down_z(&self, j: usize, k: usize) -> Option<usize> {
        if k > 0 {
            Some(self.row(j, k - 1))
        } else {
            self.periodic.then(|| self.row(j, self.nz - 1))
        }
    }
}

/// Flush subnormals to zero for the current thread while alive; restores
/// the previous floating-point control state on drop. Precursor noise ahead
/// of the wavefront otherwise decays into the subnormal range and stalls
/// the kernel.
struct FlushDenormals {
    #[cfg(target_arch = "x86_64")]
    saved: u32,
}

impl FlushDenormals {
    #[allow(deprecated)]
    fn new() -> Self {
        #[cfg(target_arch = "x86_64")]
        {
            use std::arch::x86_64::{_mm_getcsr, _mm_setcsr};
            // SAFETY: only the FTZ and DAZ bits are changed; SSE2 is baseline on x86_64.
            let saved = unsafe { _mm_getcsr() };
            unsafe { _mm_setcsr(saved | 0x8040) };
            Self { saved }
        }
        #[cfg(not(target_arch = "x86_64"))]
        Self {}
    }
}

impl Drop for FlushDenormals {
    #[allow(deprecated)]
    fn drop(&mut self) {
        #[cfg(target_arch = "x86_64")]
        // SAFETY: restores the value read in `new`.
        unsafe {
            std::arch::x86_64::_mm_setcsr(self.saved)
        };
    }
}

/// Explicit time integrator over one voxel grid.
pub struct Simulation {
    dims: [usize; 3],
    h: f64,
    dt: f64,
    step: usize,
    lateral: LateralBoundary,
    end: EndBoundary,
    source: PulseSpec,
    co: Coefficients,
    state: FieldState,
    receivers: Vec<usize>,
    zeros: Vec<Real>,
}

impl Simulation {
    pub fn new(grid: &VoxelGrid, cfg: &SimulationConfig) -> Result<Self> {
        if !(cfg.cfl_safety > 0.0 && cfg.cfl_safety < 1.0) {
            return Err(param(MODULE, "cfl_safety must lie in (0, 1)"));
        }
        cfg.source.validate()?;
        let dt = time_step(grid, cfg)?;
        let [nx, ny, nz] = grid.dims();
        let h = grid.voxel_size();
        let mut receivers = Vec::with_capacity(cfg.receiver_planes.len());
        for &x in &cfg.receiver_planes {
            if !(x >= 0.0 && x < grid.length_x()) {
                return Err(param(
                    MODULE,
                    format!(
                        "receiver at {x:e} m lies outside the domain [0, {:e})",
                        grid.length_x()
                    ),
                ));
            }
            receivers.push(((x / h).floor() as usize).min(nx - 1));
        }
        Ok(Self {
            dims: grid.dims(),
            h,
            dt,
            step: 0,
            lateral: cfg.lateral,
            end: cfg.end,
            source: cfg.source,
            co: Coefficients::build(grid, cfg.lateral)?,
            state: FieldState::zeros(nx * ny * nz, ny * nz),
            receivers,
            zeros: vec![0.0; nx],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn state(&self) -> &FieldState {
        &self.state
    }

    /// Receiver cell layers along x.
    pub fn receiver_layers(&self) -> &[usize] {
        &self.receivers
    }

    /// Plane average of σxx over the x layer `i`, summed in fixed order.
    pub fn plane_average_sxx(&self, i: usize) -> f64 {
        let [nx, ny, nz] = self.dims;
        let mut sum = 0.0;
        for k in 0..nz {
            for j in 0..ny {
                sum += self.state.sxx[i + nx * (j + ny * k)] as f64;
            }
        }
        sum / (ny * nz) as f64
    }

    /// Advance one time step.
    pub fn step(&mut self) {
        let traction = self.source.value(self.time()) as Real;
        self.update_velocity(traction);
        self.update_stress();
        self.step += 1;
    }

    fn update_velocity(&mut self, traction: Real) {
        let [nx, ny, _] = self.dims;
        let q = (self.dt / self.h) as Real;
        let nb = self.neighbours();
        let co = &self.co;
        let zeros = &self.zeros[..];
        let FieldState {
            vx,
            vy,
            vz,
            vx_end,
            sxx,
            syy,
            szz,
            sxy,
            sxz,
            syz,
        } = &mut self.state;
        let (sxx, syy, szz, sxy, sxz, syz) = (&*sxx, &*syy, &*szz, &*sxy, &*sxz, &*syz);

        vx.par_chunks_mut(nx * ny)
            .zip(vy.par_chunks_mut(nx * ny))
            .zip(vz.par_chunks_mut(nx * ny))
            .enumerate()
            .for_each(|(k, ((vx_s, vy_s), vz_s))| {
                let _fp = FlushDenormals::new();
                for j in 0..ny {
                    let row = nb.row(j, k);
                    // Pinned faces have zero buoyancy, so the row itself stands in
                    // for a missing lower neighbour.
                    let jm = nb.down_y(j, k).unwrap_or(row);
                    let km = nb.down_z(j, k).unwrap_or(row);
                    let (jp, kp) = (nb.up_y(j, k), nb.up_z(j, k));
                    let loc = j * nx..(j + 1) * nx;

                    let (v, b) = (&mut vx_s[loc.clone()], &co.bx[row..row + nx]);
                    let (s_xx, s_xy, s_xz) = (
                        &sxx[row..row + nx],
                        &sxy[row..row + nx],
                        &sxz[row..row + nx],
                    );
                    let (up_xy, up_xz) = (seg_or(sxy, jp, zeros), seg_or(sxz, kp, zeros));
                    v[0] += q
                        * b[0]
                        * (2.0 * (s_xx[0] + traction)
                            + (up_xy[0] - s_xy[0])
                            + (up_xz[0] - s_xz[0]));
                    v[1..]
                        .iter_mut()
                        .zip(&b[1..])
                        .zip(s_xx[1..].iter().zip(s_xx))
                        .zip(up_xy[1..].iter().zip(&s_xy[1..]))
                        .zip(up_xz[1..].iter().zip(&s_xz[1..]))
                        .for_each(|((((v, b), (hi, lo)), (u1, c1)), (u2, c2))| {
                            *v += q * b * ((hi - lo) + (u1 - c1) + (u2 - c2));
                        });

                    let (v, b) = (&mut vy_s[loc.clone()], &co.by[row..row + nx]);
                    let (s_yy, s_yz) = (&syy[row..row + nx], &syz[row..row + nx]);
                    let (dn_yy, up_yz) = (&syy[jm..jm + nx], seg_or(syz, kp, zeros));
                    lateral_row(q, v, b, s_xy, (s_yy, dn_yy), (up_yz, s_yz));

                    let (v, b) = (&mut vz_s[loc], &co.bz[row..row + nx]);
                    let s_zz = &szz[row..row + nx];
                    let (dn_zz, up_yz) = (&szz[km..km + nx], seg_or(syz, jp, zeros));
                    lateral_row(q, v, b, s_xz, (s_zz, dn_zz), (up_yz, s_yz));
                }
            });

        if self.end == EndBoundary::Free {
            for (l, v) in vx_end.iter_mut().enumerate() {
                let c = nx - 1 + nx * l;
                *v += q * co.b_end[l] * 2.0 * (0.0 - sxx[c]);
            }
        }
    }

    fn update_stress(&mut self) {
        let [nx, ny, _] = self.dims;
        let q = (self.dt / self.h) as Real;
        let nb = self.neighbours();
        let co = &self.co;
        let zeros = &self.zeros[..];
        let FieldState {
            vx,
            vy,
            vz,
            vx_end,
            sxx,
            syy,
            szz,
            sxy,
            sxz,
            syz,
        } = &mut self.state;
        let (vx, vy, vz, vx_end) = (&*vx, &*vy, &*vz, &*vx_end);

        sxx.par_chunks_mut(nx * ny)
            .zip(syy.par_chunks_mut(nx * ny))
            .zip(szz.par_chunks_mut(nx * ny))
            .zip(sxy.par_chunks_mut(nx * ny))
            .zip(sxz.par_chunks_mut(nx * ny))
            .zip(syz.par_chunks_mut(nx * ny))
            .enumerate()
            .for_each(|(k, (((((sxx_s, syy_s), szz_s), sxy_s), sxz_s), syz_s))| {
                let _fp = FlushDenormals::new();
                for j in 0..ny {
                    let row = nb.row(j, k);
                    // Edges on mirror planes carry zero modulus; the row stands in
                    // for the missing neighbour.
                    let jm = nb.down_y(j, k).unwrap_or(row);
                    let km = nb.down_z(j, k).unwrap_or(row);
                    let (jp, kp) = (nb.up_y(j, k), nb.up_z(j, k));
                    let loc = j * nx..(j + 1) * nx;
                    let (v_x, v_y, v_z) =
                        (&vx[row..row + nx], &vy[row..row + nx], &vz[row..row + nx]);
                    let (up_y, up_z) = (seg_or(vy, jp, zeros), seg_or(vz, kp, zeros));
                    let (l2m, lam) = (&co.l2m[row..row + nx], &co.lam[row..row + nx]);
                    let v_end = vx_end[j + ny * k];

                    let (s_xx, s_yy, s_zz) = (
                        &mut sxx_s[loc.clone()],
                        &mut syy_s[loc.clone()],
                        &mut szz_s[loc.clone()],
                    );
                    let n = nx - 1;
                    s_xx[..n]
                        .iter_mut()
                        .zip(&mut s_yy[..n])
                        .zip(&mut s_zz[..n])
                        .zip(v_x[1..].iter().zip(&v_x[..n]))
                        .zip(up_y.iter().zip(v_y))
                        .zip(up_z.iter().zip(v_z))
                        .zip(l2m.iter().zip(lam))
                        .for_each(
                            |((((((sx, sy), sz), (xh, xl)), (yh, yl)), (zh, zl)), (p, l))| {
                                let (exx, eyy, ezz) = (xh - xl, yh - yl, zh - zl);
                                *sx += q * (p * exx + l * (eyy + ezz));
                                *sy += q * (p * eyy + l * (exx + ezz));
                                *sz += q * (p * ezz + l * (exx + eyy));
                            },
                        );
                    {
                        let exx = v_end - v_x[n];
                        let eyy = up_y[n] - v_y[n];
                        let ezz = up_z[n] - v_z[n];
                        s_xx[n] += q * (l2m[n] * exx + lam[n] * (eyy + ezz));
                        s_yy[n] += q * (l2m[n] * eyy + lam[n] * (exx + ezz));
                        s_zz[n] += q * (l2m[n] * ezz + lam[n] * (exx + eyy));
                    }

                    let (dn_vx_y, dn_vx_z) = (&vx[jm..jm + nx], &vx[km..km + nx]);
                    let (dn_vy_z, dn_vz_y) = (&vy[km..km + nx], &vz[jm..jm + nx]);
                    let (m_xy, m_xz, m_yz) = (
                        &co.mxy[row..row + nx],
                        &co.mxz[row..row + nx],
                        &co.myz[row..row + nx],
                    );
                    let (s_xy, s_xz, s_yz) = (
                        &mut sxy_s[loc.clone()],
                        &mut sxz_s[loc.clone()],
                        &mut syz_s[loc],
                    );
                    s_xy[1..]
                        .iter_mut()
                        .zip(&m_xy[1..])
                        .zip(v_x[1..].iter().zip(&dn_vx_y[1..]))
                        .zip(v_y[1..].iter().zip(v_y))
                        .for_each(|(((s, m), (a, b)), (c, d))| *s += q * m * ((a - b) + (c - d)));
                    s_xz[1..]
                        .iter_mut()
                        .zip(&m_xz[1..])
                        .zip(v_x[1..].iter().zip(&dn_vx_z[1..]))
                        .zip(v_z[1..].iter().zip(v_z))
                        .for_each(|(((s, m), (a, b)), (c, d))| *s += q * m * ((a - b) + (c - d)));
                    s_yz.iter_mut()
                        .zip(m_yz)
                        .zip(v_y.iter().zip(dn_vy_z))
                        .zip(v_z.iter().zip(dn_vz_y))
                        .for_each(|(((s, m), (a, b)), (c, d))| *s += q * m * ((a - b) + (c - d)));
                }
            });
    }

    fn neighbours(&self) -> Neighbours {
        let [nx, ny, nz] = self.dims;
        Neighbours {
            nx,
            ny,
            nz,
            periodic: self.lateral == LateralBoundary::Periodic,
        }
    }

    /// Discrete kinetic plus strain energy, J.
    pub fn energy(&self) -> f64 {
        let nx = self.dims[0];
        let s = &self.state;
        let co = &self.co;
        let f = |v: Real| v as f64;
        let mut kinetic = 0.0;
        let mut strain = 0.0;
        for c in 0..s.sxx.len() {
            // Source-face velocities carry half a cell of mass.
            let mass_x = if c % nx == 0 { 0.5 } else { 1.0 } / f(co.bx[c]);
            kinetic += mass_x * f(s.vx[c]).powi(2);
            for (v, b) in [(s.vy[c], co.by[c]), (s.vz[c], co.bz[c])] {
                if b != 0.0 {
                    kinetic += f(v).powi(2) / f(b);
                }
            }
            let lam = f(co.lam[c]);
            let mu = 0.5 * (f(co.l2m[c]) - lam);
            let bulk = lam + 2.0 * mu / 3.0;
            let (xx, yy, zz) = (f(s.sxx[c]), f(s.syy[c]), f(s.szz[c]));
            let tr = xx + yy + zz;
            strain += tr * tr / (9.0 * bulk);
            if mu > 0.0 {
                let p = tr / 3.0;
                strain += ((xx - p).powi(2) + (yy - p).powi(2) + (zz - p).powi(2)) / (2.0 * mu);
            }
            for (sigma, m) in [
                (s.sxy[c], co.mxy[c]),
                (s.sxz[c], co.mxz[c]),
                (s.syz[c], co.myz[c]),
            ] {
                if m > 0.0 {
                    strain += f(sigma).powi(2) / f(m);
                }
            }
        }
        for (v, b) in s.vx_end.iter().zip(&co.b_end) {
            kinetic += 0.5 / f(*b) * f(*v).powi(2);
        }
        0.5 * self.h.powi(3) * (kinetic + strain)
    }

    /// Run `n_steps`, recording receiver averages after every step.
    pub fn record(&mut self, n_steps: usize) -> Result<TraceSet> {
        let mut records: Vec<Vec<f64>> =
            vec![Vec::with_capacity(n_steps + 1); self.receivers.len()];
        for (r, &layer) in records.iter_mut().zip(&self.receivers) {
            r.push(self.plane_average_sxx(layer));
        }
        for _ in 0..n_steps {
            self.step();
            for (r, &layer) in records.iter_mut().zip(&self.receivers) {
                let v = self.plane_average_sxx(layer);
                if !v.is_finite() {
                    return Err(Error::Instability { step: self.step });
                }
                r.push(v);
            }
            if self.step % 1024 == 0 && !self.state.sxx.iter().all(|v| v.is_finite()) {
                return Err(Error::Instability { step: self.step });
            }
        }
        if !self.state.is_finite() {
            return Err(Error::Instability { step: self.step });
        }
        let traces = records
            .into_iter()
            .map(|r| Trace::new(self.dt, r))
            .collect::<Result<Vec<_>>>()?;
        Ok(TraceSet {
            positions: self
                .receivers
                .iter()
                .map(|&i| (i as f64 + 0.5) * self.h)
                .collect(),
            traces,
        })
    }
}

/// Run the configured number of steps and return the receiver traces.
pub fn run_simulation(grid: &VoxelGrid, cfg: &SimulationConfig) -> Result<TraceSet> {
    if cfg.receiver_planes.is_empty() {
        return Err(param(MODULE, "at least one receiver plane is required"));
    }
    let mut sim = Simulation::new(grid, cfg)?;
    sim.record(cfg.n_steps)
}
