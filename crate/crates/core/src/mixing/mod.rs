//! Fourier analysis of the sandpile chain, Monte Carlo profiles and cut-off scans.

mod brute;
mod dual;
mod mc;
mod snf;

#[cfg(test)]
mod tests;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sandpile::Sandpile;
use crate::tiling::{torus_coords, torus_index, GraphGeometry};

pub use brute::{ExactChain, ExactSample};
pub use dual::{
    character_from_prevector, enumerate_dual, mu_hat, CholeskyLaplacian, DualCharacter, DualGroup, DUAL_CAP,
};
pub use mc::{
    cutoff_scan, embed_prevector, gap_observables, mc_mixing, torus_gap_trend, Boundary, CutoffOptions, CutoffRow,
    GapMethod, GapRow, McOptions,
};
pub use snf::{smith_normal_form, SnfDecomposition};

/// Brute-force cap on `|𝒢|` for exact distributions.
pub const EXACT_CAP: usize = 100_000;

/// One row of a mixing profile. Missing quantities are `None`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub n: usize,
    pub l2: Option<f64>,
    pub tv_upper: Option<f64>,
    /// Exact lower bound, or the Monte Carlo TV proxy.
    pub tv_lower: Option<f64>,
    pub observable_re: Option<f64>,
    pub observable_im: Option<f64>,
    pub stderr: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MixingProfile {
    pub graph: String,
    pub group_order: Option<String>,
    pub samples: Vec<ProfileSample>,
    /// First sampled `N` where the relevant TV estimate drops below `1/e`.
    pub t_mix: Option<f64>,
    pub predicted: Option<f64>,
}

impl MixingProfile {
    pub const CSV_HEADER: [&'static str; 7] = ["N", "l2", "tv_upper", "tv_lower", "observable_re", "observable_im", "stderr"];

    pub fn csv_rows(&self) -> Vec<[String; 7]> {
        let f = |x: Option<f64>| x.map(|v| format!("{v:.12e}")).unwrap_or_default();
        self.samples
            .iter()
            .map(|s| {
                [
                    s.n.to_string(),
                    f(s.l2),
                    f(s.tv_upper),
                    f(s.tv_lower),
                    f(s.observable_re),
                    f(s.observable_im),
                    f(s.stderr),
                ]
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    fn merge(mut self, o: Kahan) -> Kahan {
        self.add(o.sum);
        self.add(-o.c);
        self
    }
}

/// `‖μ^{*N} − 𝕌‖₂ = (Σ_{ξ≠0} |μ̂(ξ)|^{2N})^{1/2}` for each `N`.
pub fn l2_distances(dual: &DualGroup, steps: &[usize]) -> Vec<f64> {
    let acc = dual.fold(
        || vec![Kahan::default(); steps.len()],
        |acc, _, mu| {
            let a = mu.norm_sqr();
            let la = a.ln();
            for (k, &n) in acc.iter_mut().zip(steps) {
                k.add(if n == 0 { 1.0 } else { (la * n as f64).exp() });
            }
        },
        |a, b| a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect(),
    );
    acc.into_iter().map(|k| k.sum.max(0.0).sqrt()).collect()
}

/// Exact `L²` and TV-upper curves with the witness lower bound from
/// [`default_witness_set`].
pub fn l2_profile(sp: &Sandpile, steps: &[usize], cap: u64) -> Result<MixingProfile> {
    let dual = DualGroup::new(sp, cap)?;
    let l2 = l2_distances(&dual, steps);
    let witness = Witness::new(&default_witness_set(sp, &dual), dual.n_vertices());
    let samples: Vec<ProfileSample> = steps
        .iter()
        .zip(&l2)
        .map(|(&n, &l)| ProfileSample {
            n,
            l2: Some(l),
            tv_upper: Some((0.5 * l).min(1.0)),
            tv_lower: Some(witness.bound(n).bound),
            ..Default::default()
        })
        .collect();
    let t_mix = samples.iter().find(|s| s.tv_upper.unwrap() < (-1.0f64).exp()).map(|s| s.n as f64);
    Ok(MixingProfile {
        graph: sp.graph.hash(),
        group_order: Some(dual.order().to_string()),
        samples,
        t_mix,
        predicted: None,
    })
}

/// Outcome of the two-inequality lower bound on total variation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessBound {
    /// `1 − 4ε₁² − 4ε₂²`, clamped to `[0, 1]`.
    pub bound: f64,
    pub eps1: f64,
    pub eps2: f64,
    /// False when no `ε₁, ε₂ < 1` satisfy the inequalities; the bound is 0.
    pub satisfiable: bool,
}

/// `|μ̂(ξ)|` and `|μ̂(ξ₁ − ξ₂)|` over a witness set, precomputed.
#[derive(Clone, Debug)]
pub struct Witness {
    single: Vec<f64>,
    pairs: Vec<f64>,
}

impl Witness {
    pub fn new(set: &[DualCharacter], n_vertices: usize) -> Self {
        let single = set.iter().map(|c| c.mu_hat.norm()).collect();
        let mut pairs = Vec::with_capacity(set.len() * set.len());
        for a in set {
            for b in set {
                pairs.push(a.minus(b, n_vertices).mu_hat.norm());
            }
        }
        Witness { single, pairs }
    }

    pub fn bound(&self, n: usize) -> WitnessBound {
        let pw = |x: f64| if n == 0 { 1.0 } else { x.powi(n as i32) };
        let s: f64 = self.single.iter().map(|&x| pw(x)).sum();
        let p: f64 = self.pairs.iter().map(|&x| pw(x)).sum();
        let size = self.single.len() as f64;
        if self.single.is_empty() || s <= 0.0 {
            return WitnessBound { bound: 0.0, eps1: f64::INFINITY, eps2: f64::INFINITY, satisfiable: false };
        }
        let eps1 = size.sqrt() / s;
        let eps2 = (p / (s * s) - 1.0).max(0.0).sqrt();
        let satisfiable = eps1 < 1.0 && eps2 < 1.0;
        let bound = if satisfiable { (1.0 - 4.0 * eps1 * eps1 - 4.0 * eps2 * eps2).clamp(0.0, 1.0) } else { 0.0 };
        WitnessBound { bound, eps1, eps2, satisfiable }
    }
}

pub fn tv_lower_witness(set: &[DualCharacter], n_vertices: usize, n: usize) -> WitnessBound {
    Witness::new(set, n_vertices).bound(n)
}

/// Translates of the gap minimizer on a torus, each shifted to vanish at the
/// sink; elsewhere the 16 characters of largest `|μ̂|`.
pub fn default_witness_set(sp: &Sandpile, dual: &DualGroup) -> Vec<DualCharacter> {
    let Some(best) = dual.gap_minimizer() else {
        return vec![];
    };
    if let GraphGeometry::Torus { cells, dim, m } = sp.graph.geometry {
        let mut out: Vec<DualCharacter> = Vec::new();
        for k in 0..m.pow(dim as u32) {
            let t = translate_on_torus(&best, cells, dim, m, &torus_coords(k, dim, m), dual.n_vertices());
            if !t.is_zero() && !out.iter().any(|c| c.exact == t.exact) {
                out.push(t);
            }
        }
        return out;
    }
    let mut top = dual.fold(
        Vec::<(f64, u64)>::new,
        |acc, k, mu| {
            acc.push((mu.norm(), k));
            if acc.len() > 64 {
                acc.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
                acc.truncate(16);
            }
        },
        |mut a, b| {
            a.extend(b);
            a.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
            a.truncate(16);
            a
        },
    );
    top.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    top.truncate(16);
    top.into_iter().map(|(_, k)| dual.character(k)).collect()
}

/// `ξ'(v) = ξ(v − λ) − ξ(s − λ)` on a torus graph whose sink is vertex 0.
pub fn translate_on_torus(
    xi: &DualCharacter,
    cells: usize,
    dim: usize,
    m: usize,
    by: &[i64],
    n_vertices: usize,
) -> DualCharacter {
    let vol = m.pow(dim as u32);
    let src = |v: usize| -> usize {
        let (c, k) = (v / vol, v % vol);
        let lat: Vec<i64> = torus_coords(k, dim, m).iter().zip(by).map(|(x, b)| x - b).collect();
        c * vol + torus_index(&lat, m)
    };
    debug_assert_eq!(cells * vol, n_vertices);
    match &xi.exact {
        Some((num, den)) => {
            let at = |v: usize| if v == 0 { 0 } else { num[v - 1] };
            let base = at(src(0));
            DualCharacter::from_exact((1..n_vertices).map(|v| at(src(v)) - base).collect(), *den, n_vertices)
        }
        None => {
            let at = |v: usize| if v == 0 { 0.0 } else { xi.xi[v - 1] };
            let base = at(src(0));
            DualCharacter::from_xi((1..n_vertices).map(|v| at(src(v)) - base).collect(), n_vertices)
        }
    }
}

/// `ν(ξ) = Δ′ξ'` with `ξ'` the representative in `(C − ½, C + ½]`,
/// `C = arg μ̂(ξ)/2π`.
pub fn distinguished_prevector(sp: &Sandpile, xi: &DualCharacter) -> Vec<i64> {
    let rep = centered_representative(xi);
    (0..sp.n())
        .map(|k| {
            let mut s = sp.degrees()[k] as f64 * rep[k];
            for &(w, m) in sp.neighbors(k) {
                s -= m as f64 * rep[w as usize];
            }
            s.round() as i64
        })
        .collect()
}

/// `ξ'` on the non-sink vertices.
pub fn centered_representative(xi: &DualCharacter) -> Vec<f64> {
    let c = centre(xi);
    xi.xi.iter().map(|&x| x - ((x - c - 0.5).ceil())).collect()
}

fn centre(xi: &DualCharacter) -> f64 {
    let c = xi.mu_hat.arg() / (2.0 * std::f64::consts::PI);
    if c >= 0.5 {
        c - 1.0
    } else {
        c
    }
}

/// `‖ξ*‖₂²` over all of `V`, with `ξ* = ξ' − C` and `ξ(s) = 0`.
pub fn centered_norm_sq(xi: &DualCharacter) -> f64 {
    let c = centre(xi);
    let sink = -c;
    centered_representative(xi).iter().map(|x| (x - c).powi(2)).sum::<f64>() + sink * sink
}
