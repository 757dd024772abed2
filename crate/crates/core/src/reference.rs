//! Published spectral values used as reproduction targets.

/// `(tiling, γ, absolute tolerance)` with the default `B = 4`, `R₀ = 2`.
pub const PERIODIC_GAMMA: [(&str, f64, f64); 3] =
    [("triangular", 1.69416, 2e-3), ("hex", 5.977657, 6e-3), ("fcc", 0.3623, 5e-3)];

/// `γ_{D4,j}` and their published error bars, `j = 0..=4`.
pub const D4_GAMMA: [(f64, f64); 5] =
    [(0.075554, 0.00024), (0.0440957, 0.00017), (0.0389569, 0.00013), (0.036873324, 0.00012), (0.0357604, 0.00011)];

/// `Γ_{D4,j}` and their published error bars, `j = 0..=3`.
pub const D4_BIG_GAMMA: [(f64, f64); 4] = [(52.9428, 0.17), (68.03486, 0.27), (51.3393, 0.17), (27.1201, 0.084)];

/// Relative tolerance on each `γ_{D4,j}`.
pub const D4_REL_TOL: f64 = 0.01;

/// `π²/(2d² + d)`, the uniform lower bound on `γ_{ℤ^d,j}`.
pub fn cubic_lower_bound(d: usize) -> f64 {
    std::f64::consts::PI.powi(2) / (2 * d * d + d) as f64
}
