//! Occlusion-aware VRU risk assessment with V2X cooperative perception.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod geometry;
pub mod report;
pub mod risk;
pub mod sensing;
pub mod sim;
pub mod synth;
pub mod v2x;

pub use error::{Error, Result};
