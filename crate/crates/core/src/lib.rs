//! Liquid state machine reservoirs: topology, LIF dynamics, spike encodings,
//! features, readouts, mean-field analysis and experiment orchestration.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod datasets;
pub mod dynamics;
pub mod encoding;
pub mod error;
pub mod experiment;
pub mod features;
pub mod meanfield;
pub mod readout;
pub mod robustness;
pub mod seeds;
pub mod topology;

pub use error::{Error, Result};
