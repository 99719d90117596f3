//! Time-multiplexed spiking reservoir built from a single excitable node.
//!
//! The pipeline runs MADELON-style data through a random input mask, drives
//! one leaky integrate-and-fire node with the resulting waveform, reads each
//! θ-long virtual node out as spiking (1) or silent (0), and trains a linear
//! readout on those binary vectors, either by least squares or by picking a
//! handful of class-significant nodes.

pub mod cli;
pub mod dataset;
pub mod encoding;
pub mod error;
pub mod eval;
pub mod reservoir;
pub mod seed;
pub mod training;

pub use error::{Error, Result};
