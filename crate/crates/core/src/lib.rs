//! Exact Fedosov quantization of symplectic connections on the flat torus.

// tensor code reads best with explicit index loops
#![allow(clippy::needless_range_loop)]

pub mod rational;
pub mod scalar_ring;
pub mod formal;
pub mod weyl;
pub mod geometry;
pub mod sample;
pub mod fedosov;
pub mod moment;
pub mod transport;
