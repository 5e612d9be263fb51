//! Boundary geometry of two exactly computable CAT(-1) model families:
//! finite-ended metric trees and the hyperbolic disk.

pub mod boundary;
pub mod classifier;
pub mod disk;
pub mod disk_metric;
pub mod error;
pub mod extension;
pub mod interval;
pub mod rational;
pub mod sample;
pub mod schwarzian;
pub mod tree;

pub use error::{Error, Result};
