//! Sound speed in a liquid carrying a dilute, monodisperse bubble population
//! (linear Commander–Prosperetti model with thermal damping).

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

const MODULE: &str = "bubbly";

/// Upper limit of the dilute regime.
pub const MAX_VOID_FRACTION: f64 = 0.01;

/// Form of the thermal damping term in b.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThermalDamping {
    /// (p0 / 2ρr²) Im Φ, the form used for the reference results.
    #[default]
    Reference,
    /// (p0 / 2ρωr²) Im Φ, the dimensionally consistent form. Gives much
    /// stronger dispersion for micron bubbles.
    PerOmega,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubblyLiquid {
    /// m/s
    pub sound_speed: f64,
    /// kg/m³
    pub density: f64,
    /// N/m
    pub surface_tension: f64,
    /// Pa·s
    pub viscosity: f64,
    /// Pa
    pub ambient_pressure: f64,
    pub specific_heat_ratio: f64,
    /// Gas thermal diffusivity, m²/s.
    pub gas_thermal_diffusivity: f64,
    #[serde(default)]
    pub thermal_damping: ThermalDamping,
}

impl BubblyLiquid {
    /// Air bubbles in water at 20 °C and 1 atm.
    pub fn water() -> Self {
        Self {
            sound_speed: 1481.0,
            density: 998.0,
            surface_tension: 0.0728,
            viscosity: 1.0e-3,
            ambient_pressure: 101_325.0,
            specific_heat_ratio: 1.4,
            gas_thermal_diffusivity: 2.2e-5,
            thermal_damping: ThermalDamping::Reference,
        }
    }

    /// Electrolyte bulk properties with water-like interfacial and gas constants.
    pub fn electrolyte() -> Self {
        Self {
            sound_speed: (1e9f64 / 1270.0).sqrt(),
            density: 1270.0,
            ..Self::water()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("sound_speed", self.sound_speed),
            ("density", self.density),
            ("surface_tension", self.surface_tension),
            ("viscosity", self.viscosity),
            ("ambient_pressure", self.ambient_pressure),
            ("gas_thermal_diffusivity", self.gas_thermal_diffusivity),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !(*v >= 0.0 && v.is_finite())) {
            return Err(param(
                MODULE,
                format!("{name} must be non-negative and finite"),
            ));
        }
        if !(self.sound_speed > 0.0 && self.density > 0.0 && self.ambient_pressure > 0.0) {
            return Err(param(
                MODULE,
                "sound speed, density and ambient pressure must be positive",
            ));
        }
        if !(self.gas_thermal_diffusivity > 0.0) {
            return Err(param(MODULE, "gas thermal diffusivity must be positive"));
        }
        if !(self.specific_heat_ratio > 1.0) {
            return Err(param(MODULE, "specific heat ratio must exceed 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubblePopulation {
    /// m
    pub radius: f64,
    /// Bubbles per m³.
    pub number_density: f64,
}

impl BubblePopulation {
    pub fn new(radius: f64, number_density: f64) -> Result<Self> {
        let p = Self {
            radius,
            number_density,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_void_fraction(radius: f64, beta: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(param(MODULE, "bubble radius must be positive"));
        }
        Self::new(radius, 3.0 * beta / (4.0 * PI * radius.powi(3)))
    }

    pub fn void_fraction(&self) -> f64 {
        self.number_density * 4.0 / 3.0 * PI * self.radius.powi(3)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !(self.number_density >= 0.0) {
            return Err(param(
                MODULE,
                "radius must be positive and number density non-negative",
            ));
        }
        if self.void_fraction() >= MAX_VOID_FRACTION {
            return Err(param(
                MODULE,
                format!("void fraction must stay below {MAX_VOID_FRACTION}"),
            ));
        }
        Ok(())
    }
}

/// z·coth(z) − 1, accurate for small |z| (Re z > 0).
fn z_coth_z_minus_one(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        // Σ 2²ⁿ B₂ₙ z²ⁿ / (2n)!, n ≥ 1
        const C: [f64; 6] = [
            1.0 / 3.0,
            -1.0 / 45.0,
            2.0 / 945.0,
            -1.0 / 4725.0,
            2.0 / 93555.0,
            -1382.0 / 638_512_875.0,
        ];
        let z2 = z * z;
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in C.iter().rev() {
            acc = acc * z2 + c;
        }
        acc * z2
    } else {
        let e = (-2.0 * z).exp();
        z * (1.0 + e) / (1.0 - e) - 1.0
    }
}

/// Thermal factor Φ(χ) = 3γ / (1 − 3(γ−1)iχ[(i/χ)^½ coth (i/χ)^½ − 1]).
pub fn thermal_phi(chi: f64, gamma: f64) -> Result<Complex64> {
    if !(chi > 0.0 && chi.is_finite()) {
        return Err(param(MODULE, "χ must be positive and finite"));
    }
    let i = Complex64::i();
    let z = (i / chi).sqrt();
    let denom = 1.0 - 3.0 * (gamma - 1.0) * i * chi * z_coth_z_minus_one(z);
    Ok(3.0 * gamma / denom)
}

/// Bubble resonance ω0 (rad/s) and damping constant b (1/s) at drive ω.
pub fn resonance_and_damping(liquid: &BubblyLiquid, radius: f64, omega: f64) -> Result<(f64, f64)> {
    liquid.validate()?;
    if !(radius > 0.0 && omega > 0.0) {
        return Err(param(
            MODULE,
            "radius and angular frequency must be positive",
        ));
    }
    let (p0, rho, r) = (liquid.ambient_pressure, liquid.density, radius);
    let phi = thermal_phi(
        liquid.gas_thermal_diffusivity / (omega * r * r),
        liquid.specific_heat_ratio,
    )?;
    let stiffness = phi.re - 2.0 * liquid.surface_tension / (r * p0);
    if !(stiffness > 0.0) {
        return Err(Error::NoResonance(format!(
            "surface tension dominates at r = {r:e} m"
        )));
    }
    let omega0 = (p0 / (rho * r * r) * stiffness).sqrt();
    let thermal = match liquid.thermal_damping {
        ThermalDamping::Reference => p0 / (2.0 * rho * r * r),
        ThermalDamping::PerOmega => p0 / (2.0 * rho * omega * r * r),
    };
    let b = 2.0 * liquid.viscosity / (rho * r * r)
        + thermal * phi.im
        + omega * omega * r / (2.0 * liquid.sound_speed);
    Ok((omega0, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BubblyVelocity {
    /// m/s
    pub phase_velocity: f64,
    /// Im of the complex slowness times the liquid speed.
    pub attenuation: f64,
    /// c²/c_m² from the dispersion relation.
    #[serde(skip)]
    pub squared_index: Complex64,
}

/// Right-hand side of c²/c_m² = 1 + 4πc²nr / (ω0² − ω² + 2ibω).
pub fn dispersion_rhs(
    liquid: &BubblyLiquid,
    pop: &BubblePopulation,
    omega: f64,
) -> Result<Complex64> {
    pop.validate()?;
    if pop.number_density == 0.0 {
        liquid.validate()?;
        return Ok(Complex64::new(1.0, 0.0));
    }
    let (omega0, b) = resonance_and_damping(liquid, pop.radius, omega)?;
    let c = liquid.sound_speed;
    let num = 4.0 * PI * c * c * pop.number_density * pop.radius;
    Ok(1.0 + num / Complex64::new(omega0 * omega0 - omega * omega, 2.0 * b * omega))
}

/// Phase velocity c / Re √(c²/c_m²), principal branch.
pub fn bubbly_phase_velocity(
    liquid: &BubblyLiquid,
    pop: &BubblePopulation,
    omega: f64,
) -> Result<BubblyVelocity> {
    let s2 = dispersion_rhs(liquid, pop, omega)?;
    let s = s2.sqrt();
    if !(s.re > 0.0) {
        return Err(Error::NoResonance(
            "non-propagating band: Re √(c²/c_m²) ≤ 0".into(),
        ));
    }
    Ok(BubblyVelocity {
        phase_velocity: liquid.sound_speed / s.re,
        attenuation: s.im,
        squared_index: s2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfacePoint {
    pub radius: f64,
    pub frequency: f64,
    pub beta: f64,
    pub velocity_ratio: f64,
}

/// c_m/c over the product grid, radius outermost and void fraction innermost.
pub fn velocity_reduction_surface(
    liquid: &BubblyLiquid,
    radii: &[f64],
    frequencies: &[f64],
    betas: &[f64],
) -> Result<Vec<SurfacePoint>> {
    if radii.is_empty() || frequencies.is_empty() || betas.is_empty() {
        return Err(param(MODULE, "sweep ranges must be non-empty"));
    }
    if frequencies.iter().any(|&f| !(f > 0.0)) || betas.iter().any(|&b| !(b >= 0.0)) {
        return Err(param(
            MODULE,
            "frequencies must be positive and void fractions non-negative",
        ));
    }
    let mut out = Vec::with_capacity(radii.len() * frequencies.len() * betas.len());
    for &r in radii {
        for &f in frequencies {
            for &beta in betas {
                let pop = BubblePopulation::from_void_fraction(r, beta)?;
                let v = bubbly_phase_velocity(liquid, &pop, 2.0 * PI * f)?;
                out.push(SurfacePoint {
                    radius: r,
                    frequency: f,
                    beta,
                    velocity_ratio: v.phase_velocity / liquid.sound_speed,
                });
            }
        }
    }
    Ok(out)
}

/// Logarithmically spaced values from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect(),
    }
}

pub fn surface_csv(points: &[SurfacePoint], fmt: impl Fn(f64) -> String) -> String {
    let mut s = String::from("r_m,f_hz,beta,velocity_ratio\n");
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            fmt(p.radius),
            fmt(p.frequency),
            fmt(p.beta),
            fmt(p.velocity_ratio)
        );
    }
    s
}
