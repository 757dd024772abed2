//! Monte Carlo chains, cut-off scans and the finite-torus spectral gap.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::dual::{character_from_prevector, CholeskyLaplacian, DualCharacter, DualGroup};
use super::{translate_on_torus, MixingProfile, ProfileSample};
use crate::error::{Error, Result};
use crate::greens::{e, FunctionClass};
use crate::sandpile::Sandpile;
use crate::spectral::{enumerate_prevectors, EnumOptions, Prevector};
use crate::tiling::{build_open, build_torus, torus_index, GraphGeometry, Tiling, Vertex};

fn rng_for(seed: u64, chain: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(chain);
    r
}

#[derive(Clone, Debug)]
pub struct McOptions {
    pub chains: usize,
    /// Checkpoints, in steps.
    pub steps: Vec<usize>,
    pub seed: u64,
}

/// Runs `chains` sandpile chains from `σ_full` and estimates `E[e(ξ·σ_N)]`
/// for each observable. The reported observable is the first one; the TV
/// proxy is `max_ξ |E e(ξ·σ_N)|/2`, a lower bound on TV up to sampling error.
pub fn mc_mixing(sp: &Sandpile, observables: &[DualCharacter], opts: &McOptions) -> Result<MixingProfile> {
    if observables.is_empty() {
        return Err(Error::Invalid("no observables".into()));
    }
    let mut steps = opts.steps.clone();
    steps.sort_unstable();
    steps.dedup();
    let per_chain: Vec<Vec<Complex64>> = (0..opts.chains as u64)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_for(opts.seed, c);
            let mut sigma = sp.max_stable();
            let mut out = Vec::with_capacity(steps.len() * observables.len());
            let mut cur = 0;
            for &t in &steps {
                while cur < t {
                    sp.step(&mut sigma, &mut rng);
                    cur += 1;
                }
                out.extend(observables.iter().map(|o| e(o.pair(&sigma.chips))));
            }
            out
        })
        .collect();
    let k = observables.len();
    let nc = opts.chains.max(1) as f64;
    let samples = steps
        .iter()
        .enumerate()
        .map(|(si, &n)| {
            let mut best = 0.0f64;
            let mut first = (Complex64::new(0.0, 0.0), 0.0);
            for o in 0..k {
                let vals = per_chain.iter().map(|v| v[si * k + o]);
                let mean: Complex64 = vals.clone().sum::<Complex64>() / nc;
                let var = vals.map(|z| (z - mean).norm_sqr()).sum::<f64>() / (nc - 1.0).max(1.0);
                best = best.max(mean.norm() / 2.0);
                if o == 0 {
                    first = (mean, (var / nc).sqrt());
                }
            }
            ProfileSample {
                n,
                tv_lower: Some(best),
                observable_re: Some(first.0.re),
                observable_im: Some(first.0.im),
                stderr: Some(first.1),
                ..Default::default()
            }
        })
        .collect::<Vec<_>>();
    let t_mix = samples.iter().find(|s| s.tv_lower.unwrap() < (-1.0f64).exp()).map(|s| s.n as f64);
    Ok(MixingProfile { graph: sp.graph.hash(), group_order: None, samples, t_mix, predicted: None })
}

/// `ν` restricted to the non-sink vertices of a torus or open graph; support
/// outside the graph, or on the sink, is dropped.
pub fn embed_prevector(sp: &Sandpile, nu: &[(Vertex, i64)]) -> Result<Vec<i64>> {
    let g = &sp.graph;
    let mut out = vec![0i64; sp.n()];
    match &g.geometry {
        GraphGeometry::Torus { dim, m, .. } => {
            let vol = m.pow(*dim as u32);
            for (v, c) in nu {
                let idx = v.cell * vol + torus_index(&v.lat, *m);
                if idx != g.sink {
                    out[g.reduced_index(idx)] += c;
                }
            }
        }
        GraphGeometry::Open { vertices, .. } => {
            let index: HashMap<&Vertex, usize> = vertices.iter().enumerate().map(|(k, v)| (v, k)).collect();
            for (v, c) in nu {
                if let Some(&idx) = index.get(v) {
                    out[g.reduced_index(idx)] += c;
                }
            }
        }
        GraphGeometry::Abstract => return Err(Error::Invalid("graph has no tiling coordinates".into())),
    }
    Ok(out)
}

/// Characters `(Δ′)⁻¹ν_λ` for the given translates of `ν`.
pub fn gap_observables(sp: &Sandpile, nu: &Prevector, shifts: &[Vec<i64>]) -> Result<Vec<DualCharacter>> {
    let chol = CholeskyLaplacian::new(sp)?;
    shifts
        .iter()
        .map(|s| Ok(character_from_prevector(&chol, &embed_prevector(sp, &nu.translate(s).coeffs)?)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Torus,
    Open,
}

#[derive(Clone, Debug)]
pub struct CutoffOptions {
    pub chains: usize,
    pub seed: u64,
    /// Checkpoints per scan.
    pub checkpoints: usize,
    /// Scan horizon as a multiple of the prediction.
    pub horizon: f64,
}

impl Default for CutoffOptions {
    fn default() -> Self {
        CutoffOptions { chains: 400, seed: 0, checkpoints: 200, horizon: 2.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffRow {
    pub m: usize,
    pub vertices: usize,
    pub translates: usize,
    /// `(Γ/2)|V| log m`.
    pub predicted: f64,
    /// From the Monte Carlo proxy.
    pub t_mix: Option<f64>,
    pub width: Option<f64>,
    /// From the exact expectation `Σ|μ̂_i|^N` of the same statistic.
    pub t_mix_exact: Option<f64>,
    pub width_exact: Option<f64>,
    /// `(N, MC proxy, exact proxy)`.
    pub profile: Vec<(usize, f64, f64)>,
}

impl CutoffRow {
    pub fn ratio(&self) -> Option<f64> {
        Some(self.width? / self.t_mix?)
    }

    pub fn ratio_exact(&self) -> Option<f64> {
        Some(self.width_exact? / self.t_mix_exact?)
    }
}

/// Translates of `ν` and their characters on the graph: every torus
/// translate, or every translate with support inside the open region.
fn translate_family(sp: &Sandpile, nu: &Prevector) -> Result<Vec<DualCharacter>> {
    let nv = sp.n() + 1;
    match sp.graph.geometry.clone() {
        GraphGeometry::Torus { cells, dim, m } => {
            let chol = CholeskyLaplacian::new(sp)?;
            let base = character_from_prevector(&chol, &embed_prevector(sp, &nu.coeffs)?);
            Ok((0..m.pow(dim as u32))
                .map(|k| translate_on_torus(&base, cells, dim, m, &crate::tiling::torus_coords(k, dim, m), nv))
                .collect())
        }
        GraphGeometry::Open { vertices, .. } => {
            let inside: std::collections::HashSet<&Vertex> = vertices.iter().collect();
            let lead = &nu.coeffs[0].0;
            let mut shifts: Vec<Vec<i64>> = Vec::new();
            for v in &vertices {
                if v.cell != lead.cell {
                    continue;
                }
                let s: Vec<i64> = v.lat.iter().zip(&lead.lat).map(|(a, b)| a - b).collect();
                if nu.coeffs.iter().all(|(x, _)| inside.contains(&x.shifted(&s))) {
                    shifts.push(s);
                }
            }
            gap_observables(sp, nu, &shifts)
        }
        GraphGeometry::Abstract => Err(Error::Invalid("graph has no tiling coordinates".into())),
    }
}

fn crossing(profile: &[(usize, f64)], level: f64) -> Option<f64> {
    let k = profile.iter().position(|&(_, p)| p < level)?;
    if k == 0 {
        return Some(profile[0].0 as f64);
    }
    let (n0, p0) = profile[k - 1];
    let (n1, p1) = profile[k];
    Some(n0 as f64 + (p0 - level) / (p0 - p1) * (n1 - n0) as f64)
}

/// Scans the cut-off profile of `ν`'s translate statistic on each graph size.
///
/// The statistic is `S_N = Σ_i w_i e(ξ_i·(σ_N − σ_0))` with unit weights
/// `w_i` aligning the phases of `μ̂_i^N`; the chain contributes only through
/// the vertices that receive chips, so the phases are tracked directly. Its
/// TV proxy is the distance between Gaussians of variance `M/2` per component
/// whose means differ by `|E S_N|`.
pub fn cutoff_scan(
    tiling: &Tiling,
    boundary: Boundary,
    ms: &[usize],
    nu: &Prevector,
    big_gamma: f64,
    opts: &CutoffOptions,
) -> Result<Vec<CutoffRow>> {
    if nu.coeffs.is_empty() {
        return Err(Error::Invalid("empty prevector".into()));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut rows = Vec::new();
    for &m in ms {
        let graph = match boundary {
            Boundary::Torus => build_torus(tiling, m)?,
            Boundary::Open => {
                let fam = tiling.family().ok_or_else(|| Error::InvalidFamily("tiling has no reflection family".into()))?;
                build_open(tiling, fam, m)?
            }
        };
        let sp = Sandpile::new(graph);
        let n = sp.n();
        let nv = n + 1;
        let chars: Vec<DualCharacter> = translate_family(&sp, nu)?.into_iter().filter(|c| !c.is_zero()).collect();
        let mm = chars.len();
        if mm == 0 {
            return Err(Error::Invalid(format!("no nonzero translates at m = {m}")));
        }
        let predicted = big_gamma / 2.0 * nv as f64 * (m as f64).ln();
        let horizon = (opts.horizon * predicted).ceil().max(1.0) as usize;
        let stride = (horizon / opts.checkpoints.max(1)).max(1);
        let checkpoints: Vec<usize> = (0..=horizon).step_by(stride).collect();
        // table[u·M + i] = ξ_i(u)
        let mut table = vec![0.0f64; n * mm];
        for (i, c) in chars.iter().enumerate() {
            for u in 0..n {
                table[u * mm + i] = c.xi[u];
            }
        }
        let arg: Vec<f64> = chars.iter().map(|c| c.mu_hat.arg() / (2.0 * std::f64::consts::PI)).collect();
        let abs: Vec<f64> = chars.iter().map(|c| c.mu_hat.norm()).collect();
        let sums: Vec<Vec<Complex64>> = (0..opts.chains as u64)
            .into_par_iter()
            .map(|c| {
                let mut rng = rng_for(opts.seed ^ ((m as u64) << 32), c);
                let mut phase = vec![0.0f64; mm];
                let mut out = Vec::with_capacity(checkpoints.len());
                let mut cur = 0;
                for &t in &checkpoints {
                    while cur < t {
                        let u = rng.random_range(0..nv);
                        if u < n {
                            for (p, x) in phase.iter_mut().zip(&table[u * mm..(u + 1) * mm]) {
                                *p += x;
                            }
                        }
                        cur += 1;
                        if cur % 1024 == 0 {
                            phase.iter_mut().for_each(|p| *p -= p.floor());
                        }
                    }
                    let s: Complex64 = phase.iter().zip(&arg).map(|(p, a)| e(p - t as f64 * a)).sum();
                    out.push(s);
                }
                out
            })
            .collect();
        let nc = opts.chains.max(1) as f64;
        let sd = (mm as f64 / 2.0).sqrt();
        let proxy = |mean: f64| 2.0 * normal.cdf(mean / (2.0 * sd)) - 1.0;
        let mut prof = Vec::with_capacity(checkpoints.len());
        for (k, &t) in checkpoints.iter().enumerate() {
            let mean: Complex64 = sums.iter().map(|v| v[k]).sum::<Complex64>() / nc;
            let exact: f64 = abs.iter().map(|a| a.powi(t as i32)).sum();
            prof.push((t, proxy(mean.norm()), proxy(exact)));
        }
        let mc: Vec<(usize, f64)> = prof.iter().map(|&(t, p, _)| (t, p)).collect();
        let ex: Vec<(usize, f64)> = prof.iter().map(|&(t, _, p)| (t, p)).collect();
        let level = (-1.0f64).exp();
        let width = |p: &[(usize, f64)]| Some(crossing(p, 0.25)? - crossing(p, 0.75)?);
        rows.push(CutoffRow {
            m,
            vertices: nv,
            translates: mm,
            predicted,
            t_mix: crossing(&mc, level),
            width: width(&mc),
            t_mix_exact: crossing(&ex, level),
            width_exact: width(&ex),
            profile: prof,
        });
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapMethod {
    /// Minimum over the whole dual group.
    Exact,
    /// Minimum over characters of small prevectors; an upper bound.
    PrevectorSearch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub m: usize,
    /// `|𝕋_m|·min(1 − |μ̂|)`.
    pub value: f64,
    pub method: GapMethod,
    pub group_order: String,
}

/// `|𝕋_m|·gap` on tori of each size: exact when `|𝒢| ≤ cap`, otherwise
/// minimized over characters of zero-sum prevectors with `ℓ¹ ≤ b` in the
/// ball of radius `r0`.
pub fn torus_gap_trend(tiling: &Tiling, ms: &[usize], cap: u64, b: i64, r0: usize) -> Result<Vec<GapRow>> {
    let cands = enumerate_prevectors(tiling, &EnumOptions { b, r0, class: FunctionClass::C1, symmetry: None })?;
    let mut rows = Vec::new();
    for &m in ms {
        let sp = Sandpile::new(build_torus(tiling, m)?);
        let nv = (sp.n() + 1) as f64;
        let group_order = sp.group_order().to_string();
        match DualGroup::new(&sp, cap) {
            Ok(dual) => {
                let value = dual.scaled_gap().unwrap_or(f64::INFINITY);
                rows.push(GapRow { m, value, method: GapMethod::Exact, group_order });
            }
            Err(Error::GroupTooLarge { .. }) => {
                let chol = CholeskyLaplacian::new(&sp)?;
                let mut best = f64::INFINITY;
                for p in &cands {
                    let ch = character_from_prevector(&chol, &embed_prevector(&sp, &p.coeffs)?);
                    let g = nv * (1.0 - ch.mu_hat.norm());
                    if g > 1e-9 && g < best {
                        best = g;
                    }
                }
                rows.push(GapRow { m, value: best, method: GapMethod::PrevectorSearch, group_order });
            }
            Err(err) => return Err(err),
        }
    }
    Ok(rows)
}
