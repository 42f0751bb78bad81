//! Ultrasonic time-of-flight modelling of porous battery electrodes and cells.

pub mod biot;
pub mod bubbly;
pub mod cellmodel;
pub mod cli;
pub mod error;
pub mod materials;
pub mod microsim;
pub mod waveform;

pub use error::{Error, Result};
