//! Jamming workbench: synthesizes OFDM traffic and jammer waveforms, renders
//! them into feature grids, trains a small convolutional jam detector, and
//! replays detector output against a frequency-hopping channel simulator.

pub mod cli;
pub mod dataset;
pub mod detector;
pub mod error;
pub mod hopsim;
pub mod raster;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
