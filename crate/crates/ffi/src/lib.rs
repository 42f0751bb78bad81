//! C ABI over the porocell toolkit.
//!
//! Every function returns a [`PcStatus`]; results come back through out
//! pointers. Objects are opaque handles released with their `_free`
//! function. The message for the most recent failure on the calling thread
//! is available from [`pc_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use porocell::biot::{biot_coefficients, default_tortuosity, longitudinal_velocities, BiotMedium};
use porocell::bubbly::{bubbly_phase_velocity, BubblePopulation, BubblyLiquid};
use porocell::cellmodel::{
    lithium_loss_effects, reference_electrode, stack_tof, AgeingScenario, CellStack,
    ElectrodeVelocity, LayerKind, LossMechanism, MicrosimElectrodes,
};
use porocell::microsim::Lattice;
use porocell::waveform::{pearson_correlation, pick_first_arrival, Trace};
use porocell::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    NotFound = 3,
    Numerical = 4,
    NoArrival = 5,
    Infeasible = 6,
    Config = 7,
    Io = 8,
    Panic = 9,
}

impl From<&Error> for PcStatus {
    fn from(e: &Error) -> Self {
        use Error::*;
        match e {
            Parameter { .. } | Validation { .. } | PhysicallyInvalid(_) => {
                PcStatus::InvalidParameter
            }
            NotFound(_) => PcStatus::NotFound,
            Singular { .. } | NoResonance(_) | Cfl { .. } | Instability { .. } => {
                PcStatus::Numerical
            }
            NoArrival(_) | UndefinedDelay(_) | UndefinedCorrelation(_) => PcStatus::NoArrival,
            GeometryInfeasible(_) | InfeasiblePorosity(_) | Indeterminate(_) => {
                PcStatus::Infeasible
            }
            Config { .. } => PcStatus::Config,
            Io(_) => PcStatus::Io,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcElectrode {
    Anode = 0,
    Cathode = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcMechanism {
    Sei = 0,
    Plating = 1,
    Lam = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcLiquid {
    Water = 0,
    Electrolyte = 1,
}

/// Opaque layered cell stack.
pub struct PcStack(CellStack);

/// Opaque bubbly-liquid host.
pub struct PcBubblyLiquid(BubblyLiquid);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Run `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), PcFail>) -> PcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PcStatus::Ok,
        Ok(Err(PcFail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            PcStatus::NullPointer
        }
        Ok(Err(PcFail::Core(e))) => {
            set_error(e.to_string());
            PcStatus::from(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            PcStatus::Panic
        }
    }
}

enum PcFail {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for PcFail {
    fn from(e: Error) -> Self {
        PcFail::Core(e)
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, PcFail> {
    p.as_mut().ok_or(PcFail::Null(what))
}

unsafe fn obj<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, PcFail> {
    p.as_ref().ok_or(PcFail::Null(what))
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &'static str) -> Result<&'a [f64], PcFail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(PcFail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

/// Message for the last failure on this thread. Valid until the next call
/// on the same thread; never null.
#[no_mangle]
pub extern "C" fn pc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pc_version() -> *const c_char {
    static V: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(v) => v,
            Err(_) => panic!("version string"),
        };
    V.as_ptr()
}

// ------------------------------------------------------------------ stack

/// Reference LFP prismatic cell.
///
/// # Safety
/// `out_stack` must be a valid pointer; the handle is released with [`pc_stack_free`].
#[no_mangle]
pub unsafe extern "C" fn pc_stack_reference(out_stack: *mut *mut PcStack) -> PcStatus {
    guard(|| {
        *out(out_stack, "out_stack")? =
            Box::into_raw(Box::new(PcStack(CellStack::reference_cell())));
        Ok(())
    })
}

/// # Safety
/// `stack` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn pc_stack_free(stack: *mut PcStack) {
    if !stack.is_null() {
        drop(Box::from_raw(stack));
    }
}

/// Total time of flight, s.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pc_stack_tof(stack: *const PcStack, out_tof: *mut f64) -> PcStatus {
    guard(|| {
        let s = obj(stack, "stack")?;
        s.0.validate()?;
        *out(out_tof, "out_tof")? = stack_tof(&s.0);
        Ok(())
    })
}

/// Scale one electrode layer's velocity in place.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pc_stack_scale_velocity(
    stack: *mut PcStack,
    electrode: PcElectrode,
    factor: f64,
) -> PcStatus {
    guard(|| {
        let s = out(stack, "stack")?;
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::Parameter {
                module: "ffi",
                msg: "factor must be positive".into(),
            }
            .into());
        }
        let l =
            s.0.layer_mut(kind(electrode))
                .ok_or_else(|| Error::NotFound(kind(electrode).to_string()))?;
        l.velocity *= factor;
        Ok(())
    })
}

fn kind(e: PcElectrode) -> LayerKind {
    match e {
        PcElectrode::Anode => LayerKind::Anode,
        PcElectrode::Cathode => LayerKind::Cathode,
    }
}

/// Time of flight after losing `fraction` of the cyclable lithium, s, with
/// the default molar volumes and stack stiffness.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pc_lithium_loss_tof(
    stack: *const PcStack,
    mechanism: PcMechanism,
    fraction: f64,
    out_tof: *mut f64,
) -> PcStatus {
    guard(|| {
        let s = obj(stack, "stack")?;
        let m = match mechanism {
            PcMechanism::Sei => LossMechanism::Sei,
            PcMechanism::Plating => LossMechanism::Plating,
            PcMechanism::Lam => LossMechanism::Lam,
        };
        let o = lithium_loss_effects(&AgeingScenario::lithium_loss(m, fraction), &s.0)?;
        *out(out_tof, "out_tof")? = o.tof;
        Ok(())
    })
}

// ------------------------------------------------------------------- biot

/// Fast and slow longitudinal Biot velocities, m/s. A non-positive
/// `tortuosity` selects the default for the porosity.
///
/// # Safety
/// Out pointers must be valid.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn pc_biot_velocities(
    porosity: f64,
    solid_bulk: f64,
    solid_shear: f64,
    fluid_bulk: f64,
    solid_density: f64,
    fluid_density: f64,
    tortuosity: f64,
    out_fast: *mut f64,
    out_slow: *mut f64,
) -> PcStatus {
    guard(|| {
        let mut m = BiotMedium::with_suspension_frame(
            porosity,
            solid_bulk,
            solid_shear,
            fluid_bulk,
            solid_density,
            fluid_density,
        )?;
        m.tortuosity = if tortuosity > 0.0 {
            tortuosity
        } else {
            default_tortuosity(porosity)
        };
        m.validate()?;
        let v = longitudinal_velocities(&biot_coefficients(&m)?)?;
        *out(out_fast, "out_fast")? = v.c_fast;
        *out(out_slow, "out_slow")? = v.c_slow;
        Ok(())
    })
}

// ----------------------------------------------------------------- bubbly

/// # Safety
/// `out_liquid` must be valid; release with [`pc_bubbly_liquid_free`].
#[no_mangle]
pub unsafe extern "C" fn pc_bubbly_liquid_new(
    preset: PcLiquid,
    out_liquid: *mut *mut PcBubblyLiquid,
) -> PcStatus {
    guard(|| {
        let l = match preset {
            PcLiquid::Water => BubblyLiquid::water(),
            PcLiquid::Electrolyte => BubblyLiquid::electrolyte(),
        };
        *out(out_liquid, "out_liquid")? = Box::into_raw(Box::new(PcBubblyLiquid(l)));
        Ok(())
    })
}

/// # Safety
/// `liquid` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn pc_bubbly_liquid_free(liquid: *mut PcBubblyLiquid) {
    if !liquid.is_null() {
        drop(Box::from_raw(liquid));
    }
}

/// Phase velocity over host sound speed for bubbles of `radius` (m) at void
/// fraction `beta` and frequency `frequency` (Hz).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pc_bubbly_velocity_ratio(
    liquid: *const PcBubblyLiquid,
    radius: f64,
    beta: f64,
    frequency: f64,
    out_ratio: *mut f64,
) -> PcStatus {
    guard(|| {
        let l = &obj(liquid, "liquid")?.0;
        let pop = BubblePopulation::from_void_fraction(radius, beta)?;
        let v = bubbly_phase_velocity(l, &pop, 2.0 * std::f64::consts::PI * frequency)?;
        *out(out_ratio, "out_ratio")? = v.phase_velocity / l.sound_speed;
        Ok(())
    })
}

// --------------------------------------------------------------- microsim

/// Dual-end simulated longitudinal speed through the reference electrode
/// microstructure with its binder moduli scaled by `binder_scale`, m/s.
/// `voxel_size` is in metres; runtime grows as its inverse fourth power.
///
/// # Safety
/// `out_speed` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pc_electrode_speed(
    electrode: PcElectrode,
    voxel_size: f64,
    binder_scale: f64,
    out_speed: *mut f64,
) -> PcStatus {
    guard(|| {
        let o = out(out_speed, "out_speed")?;
        let spec = |k| reference_electrode(k, Lattice::SimpleCubic, 10e-6, voxel_size);
        let solver = MicrosimElectrodes::new(spec(LayerKind::Anode)?, spec(LayerKind::Cathode)?);
        *o = solver.velocity(kind(electrode), binder_scale)?;
        Ok(())
    })
}

// --------------------------------------------------------------- waveform

/// Pearson correlation of two series of length `n`.
///
/// # Safety
/// `x` and `y` must point to `n` doubles each.
#[no_mangle]
pub unsafe extern "C" fn pc_pearson(
    x: *const f64,
    y: *const f64,
    n: usize,
    out_r: *mut f64,
) -> PcStatus {
    guard(|| {
        let r = pearson_correlation(slice(x, n, "x")?, slice(y, n, "y")?)?;
        *out(out_r, "out_r")? = r;
        Ok(())
    })
}

/// First crossing of `fraction` × peak |sample| with linear interpolation, s.
///
/// # Safety
/// `samples` must point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn pc_pick_first_arrival(
    samples: *const f64,
    n: usize,
    dt: f64,
    fraction: f64,
    out_time: *mut f64,
) -> PcStatus {
    guard(|| {
        let t = Trace::new(dt, slice(samples, n, "samples")?.to_vec())?;
        *out(out_time, "out_time")? = pick_first_arrival(&t, fraction)?;
        Ok(())
    })
}
