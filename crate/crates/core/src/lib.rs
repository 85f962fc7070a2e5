//! Decoders for the rotated surface code under independent depolarizing
//! noise: a nearest-boundary decoder, exact minimum-weight matching, and a
//! neural decoder that combines overlapping 3x3 tile statistics.

pub mod dataset;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod matching;
pub mod neural;
pub mod noise;
pub mod simple;
pub mod tiles;

pub use error::{Error, Result};
