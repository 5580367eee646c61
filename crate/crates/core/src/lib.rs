//! Harmonic analysis on finite spaces of homogeneous type.

pub mod bmo;
pub mod dyadic;
pub mod operators;
pub mod space;
pub mod weights;
