//! Lossless Biot theory for the two longitudinal waves of a fluid-saturated
//! porous medium.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

const MODULE: &str = "biot";

/// Berryman's estimate for spherical grains: τ = 1 + (1/φ − 1)/2.
pub fn default_tortuosity(porosity: f64) -> f64 {
    1.0 + 0.5 * (1.0 / porosity - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiotMedium {
    pub porosity: f64,
    /// Grain bulk modulus Ks, Pa.
    pub solid_bulk: f64,
    /// Grain shear modulus Gs, Pa.
    pub solid_shear: f64,
    /// Pore-fluid bulk modulus Kf, Pa.
    pub fluid_bulk: f64,
    /// Drained frame bulk modulus Km, Pa.
    pub frame_bulk: f64,
    /// Frame shear modulus Gm, Pa.
    pub frame_shear: f64,
    pub solid_density: f64,
    pub fluid_density: f64,
    pub tortuosity: f64,
}

impl BiotMedium {
    /// Medium whose frame moduli follow the suspension estimate and whose
    /// tortuosity takes the default for `porosity`.
    pub fn with_suspension_frame(
        porosity: f64,
        solid_bulk: f64,
        solid_shear: f64,
        fluid_bulk: f64,
        solid_density: f64,
        fluid_density: f64,
    ) -> Result<Self> {
        let (frame_bulk, frame_shear) = frame_moduli_suspension(solid_bulk, solid_shear, porosity)?;
        let m = Self {
            porosity,
            solid_bulk,
            solid_shear,
            fluid_bulk,
            frame_bulk,
            frame_shear,
            solid_density,
            fluid_density,
            tortuosity: default_tortuosity(porosity),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.porosity > 0.0 && self.porosity < 1.0) {
            return Err(param(MODULE, "porosity must lie in (0, 1)"));
        }
        let positive = [
            ("solid_bulk", self.solid_bulk),
            ("fluid_bulk", self.fluid_bulk),
            ("frame_bulk", self.frame_bulk),
            ("frame_shear", self.frame_shear),
            ("solid_density", self.solid_density),
            ("fluid_density", self.fluid_density),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(param(MODULE, format!("{name} must be positive and finite")));
        }
        if !(self.solid_shear >= 0.0) {
            return Err(param(MODULE, "solid_shear must be non-negative"));
        }
        if self.frame_bulk > self.solid_bulk {
            return Err(param(
                MODULE,
                "frame bulk modulus exceeds grain bulk modulus",
            ));
        }
        if !(self.tortuosity >= 1.0) {
            return Err(param(MODULE, "tortuosity must be at least 1"));
        }
        Ok(())
    }
}

/// Frame moduli of a dilute suspension of grains, (Km, Gm).
pub fn frame_moduli_suspension(
    solid_bulk: f64,
    solid_shear: f64,
    porosity: f64,
) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&porosity) {
        return Err(param(MODULE, "porosity must lie in [0, 1]"));
    }
    if !(solid_bulk > 0.0 && solid_shear > 0.0) {
        return Err(param(MODULE, "grain moduli must be positive"));
    }
    let (ks, gs, phi) = (solid_bulk, solid_shear, porosity);
    let km = 4.0 * gs * ks * (1.0 - phi) / (4.0 * gs + 3.0 * phi * ks);
    let gm = gs * (8.0 * gs + 9.0 * ks) * (1.0 - phi)
        / (8.0 * gs + 9.0 * ks + 6.0 * (2.0 * gs + ks) * phi);
    Ok((km, gm))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiotCoefficients {
    pub k: f64,
    pub c: f64,
    pub r: f64,
    pub frame_shear: f64,
    pub rho11: f64,
    pub rho12: f64,
    pub rho22: f64,
}

impl BiotCoefficients {
    /// [[K + 4Gm/3, C], [C, R]]
    pub fn stiffness(&self) -> [[f64; 2]; 2] {
        [
            [self.k + 4.0 * self.frame_shear / 3.0, self.c],
            [self.c, self.r],
        ]
    }

    /// [[ρ11, ρ12], [ρ12, ρ22]]
    pub fn density(&self) -> [[f64; 2]; 2] {
        [[self.rho11, self.rho12], [self.rho12, self.rho22]]
    }
}

pub fn biot_coefficients(m: &BiotMedium) -> Result<BiotCoefficients> {
    m.validate()?;
    let (phi, ks, km, kf) = (m.porosity, m.solid_bulk, m.frame_bulk, m.fluid_bulk);
    let a = 1.0 - phi - km / ks;
    let denom = a + phi * ks / kf;
    if denom.abs() <= 1e-12 * (1.0 + phi * ks / kf) {
        return Err(Error::Singular {
            module: MODULE,
            msg: format!(
                "1 − φ − Km/Ks + φKs/Kf vanishes (φ = {phi}, Km/Ks = {})",
                km / ks
            ),
        });
    }
    let rho12 = -phi * m.fluid_density * (m.tortuosity - 1.0);
    Ok(BiotCoefficients {
        k: ((1.0 - phi) * a * ks + phi * ks * km / kf) / denom,
        c: phi * a * ks / denom,
        r: phi * phi * ks / denom,
        frame_shear: m.frame_shear,
        rho11: (1.0 - phi) * m.solid_density - rho12,
        rho12,
        rho22: phi * m.fluid_density - rho12,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LongitudinalSolution {
    pub c_fast: f64,
    pub c_slow: f64,
    /// Unit amplitude vector (e_m0, e_f0) of the fast wave, e_m0 ≥ 0.
    pub fast_mode: [f64; 2],
    /// Unit amplitude vector (e_m0, e_f0) of the slow wave, e_m0 ≥ 0.
    pub slow_mode: [f64; 2],
}

impl LongitudinalSolution {
    /// e_f0 / e_m0 of the fast wave.
    pub fn fast_ratio(&self) -> f64 {
        self.fast_mode[1] / self.fast_mode[0]
    }

    /// e_f0 / e_m0 of the slow wave.
    pub fn slow_ratio(&self) -> f64 {
        self.slow_mode[1] / self.slow_mode[0]
    }
}

/// Null vector of B − λD, normalised.
fn mode(b: [[f64; 2]; 2], d: [[f64; 2]; 2], lambda: f64) -> [f64; 2] {
    let m = [
        [b[0][0] - lambda * d[0][0], b[0][1] - lambda * d[0][1]],
        [b[1][0] - lambda * d[1][0], b[1][1] - lambda * d[1][1]],
    ];
    // Use the row with the larger norm; (x, y) ⊥ (p, q) gives (q, −p).
    let row = if m[0][0].hypot(m[0][1]) >= m[1][0].hypot(m[1][1]) {
        m[0]
    } else {
        m[1]
    };
    let mut v = if row[0] == 0.0 && row[1] == 0.0 {
        [1.0, 0.0]
    } else {
        [row[1], -row[0]]
    };
    let n = v[0].hypot(v[1]);
    v = [v[0] / n, v[1] / n];
    if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) {
        v = [-v[0], -v[1]];
    }
    v
}

/// Roots of det(B − c²D) = 0.
pub fn longitudinal_velocities(co: &BiotCoefficients) -> Result<LongitudinalSolution> {
    let (b, d) = (co.stiffness(), co.density());
    let a2 = d[0][0] * d[1][1] - d[0][1] * d[0][1];
    if !(a2 > 0.0) {
        return Err(Error::PhysicallyInvalid(
            "density matrix is not positive definite".into(),
        ));
    }
    let a1 = -(b[0][0] * d[1][1] + b[1][1] * d[0][0] - 2.0 * b[0][1] * d[0][1]);
    let a0 = b[0][0] * b[1][1] - b[0][1] * b[0][1];
    let disc = a1 * a1 - 4.0 * a2 * a0;
    if disc < 0.0 {
        return Err(Error::PhysicallyInvalid("complex wave speeds".into()));
    }
    // Cancellation-free quadratic roots.
    let q = -0.5 * (a1 + a1.signum() * disc.sqrt());
    let (l1, l2) = (q / a2, if q != 0.0 { a0 / q } else { 0.0 });
    let (hi, lo) = if l1 >= l2 { (l1, l2) } else { (l2, l1) };
    if !(lo > 0.0) {
        return Err(Error::PhysicallyInvalid(format!(
            "non-positive squared speed {lo:e}"
        )));
    }
    Ok(LongitudinalSolution {
        c_fast: hi.sqrt(),
        c_slow: lo.sqrt(),
        fast_mode: mode(b, d, hi),
        slow_mode: mode(b, d, lo),
    })
}
