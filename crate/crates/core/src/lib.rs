//! Abelian sandpiles on periodic tilings: torus and open-boundary graphs,
//! stopped-walk Green's functions, spectral parameters and mixing profiles.

pub mod error;
pub mod exact;
pub mod fft;
pub mod greens;
pub mod linalg;
pub mod mixing;
pub mod reference;
pub mod sandpile;
pub mod spectral;
pub mod tiling;

pub use error::{Error, Result};
pub use sandpile::{Configuration, Sandpile};
pub use tiling::{FiniteSandpileGraph, ReflectionFamily, Tiling, TilingSpec, Vertex};
