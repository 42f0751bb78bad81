//! Voxel microstructures and the coupled fluid–solid wave solver.

pub mod geometry;
pub mod grid;
pub mod measure;
pub mod solver;

pub use geometry::{
    generate_body_centered, generate_electrode, generate_separator, generate_simple_cubic,
    CellGeometry, Lattice, Microstructure, MicrostructureSpec, DEFAULT_SEPARATOR_PERIOD,
};
pub use grid::VoxelGrid;
pub use measure::{
    dual_end_speed, measure_speed, measure_speed_between, run_dual_end, with_duration, Picking,
    DEFAULT_DURATION,
};
pub use solver::{
    cfl_limit, run_simulation, time_step, EndBoundary, FieldState, LateralBoundary, Simulation,
    SimulationConfig, TraceSet,
};
