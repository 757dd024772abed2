//! Shared fixtures for the benchmarks.

use tilepile_core::tiling::build_torus;
use tilepile_core::{Sandpile, Tiling};

pub fn torus(name: &str, m: usize) -> Sandpile {
    let t = Tiling::builtin(name).expect("built-in tiling");
    Sandpile::new(build_torus(&t, m).expect("torus"))
}
