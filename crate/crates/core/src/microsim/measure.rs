use serde::{Deserialize, Serialize};

use super::grid::VoxelGrid;
use super::solver::{run_simulation, time_step, EndBoundary, SimulationConfig, TraceSet};
use crate::error::{param, Error, Result};
use crate::waveform::{cross_correlation_delay, first_crossing, DEFAULT_THRESHOLD_FRACTION};

const MODULE: &str = "microsim";

/// Arrival-time rule used for two-receiver differencing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum Picking {
    /// First crossing of a common level, `fraction` × the peak magnitude of
    /// the near receiver. A shared level keeps the picks on the same phase
    /// of the waveform at both planes.
    Threshold { fraction: f64 },
    /// Lag of the full-trace cross-correlation maximum.
    CrossCorrelation,
}

impl Default for Picking {
    fn default() -> Self {
        Picking::Threshold {
            fraction: DEFAULT_THRESHOLD_FRACTION,
        }
    }
}

/// Speed between receivers `near` and `far` of the trace set, m/s.
pub fn measure_speed_between(
    traces: &TraceSet,
    near: usize,
    far: usize,
    picking: Picking,
) -> Result<f64> {
    let n = traces.traces.len();
    if n < 2 || near >= n || far >= n || near == far {
        return Err(param(
            MODULE,
            "speed measurement needs two distinct receiver planes",
        ));
    }
    let dx = traces.positions[far] - traces.positions[near];
    let (a, b) = (&traces.traces[near], &traces.traces[far]);
    let dt = match picking {
        Picking::Threshold { fraction } => {
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(param(MODULE, "threshold fraction must lie in (0, 1)"));
            }
            let peak = a.peak_abs();
            if !(peak > 0.0) {
                return Err(Error::NoArrival(
                    "near receiver trace is identically zero".into(),
                ));
            }
            let level = fraction * peak;
            first_crossing(b, level)? - first_crossing(a, level)?
        }
        Picking::CrossCorrelation => cross_correlation_delay(a, b)?,
    };
    if !(dt.abs() > 0.0) {
        return Err(Error::NoArrival(
            "receivers picked identical arrival times".into(),
        ));
    }
    Ok(dx / dt)
}

/// Speed from the first and last receiver planes, m/s.
pub fn measure_speed(traces: &TraceSet, picking: Picking) -> Result<f64> {
    let n = traces.traces.len();
    if n < 2 {
        return Err(param(
            MODULE,
            "speed measurement needs at least two receiver planes",
        ));
    }
    measure_speed_between(traces, 0, n - 1, picking)
}

/// Recording window that clears both receivers of the default 1.2 mm
/// domain for speeds down to about 800 m/s, s.
pub const DEFAULT_DURATION: f64 = 3.6e-6;

/// Configuration with `n_steps` set to cover `duration`.
pub fn with_duration(
    grid: &VoxelGrid,
    cfg: &SimulationConfig,
    duration: f64,
) -> Result<SimulationConfig> {
    if !(duration > 0.0) {
        return Err(param(MODULE, "duration must be positive"));
    }
    let dt = time_step(grid, cfg)?;
    Ok(SimulationConfig {
        n_steps: (duration / dt).ceil() as usize,
        ..cfg.clone()
    })
}

/// Mean of a rigid-end and a free-end run. The first reflection off the far
/// end has opposite sign in the two, so it cancels at the receivers.
pub fn run_dual_end(grid: &VoxelGrid, cfg: &SimulationConfig) -> Result<TraceSet> {
    let (rigid, free) = rayon::join(
        || {
            run_simulation(
                grid,
                &SimulationConfig {
                    end: EndBoundary::Rigid,
                    ..cfg.clone()
                },
            )
        },
        || {
            run_simulation(
                grid,
                &SimulationConfig {
                    end: EndBoundary::Free,
                    ..cfg.clone()
                },
            )
        },
    );
    rigid?.averaged(&free?)
}

/// Longitudinal speed from dual-end traces between the first and last receivers.
pub fn dual_end_speed(grid: &VoxelGrid, cfg: &SimulationConfig, picking: Picking) -> Result<f64> {
    measure_speed(&run_dual_end(grid, cfg)?, picking)
}
