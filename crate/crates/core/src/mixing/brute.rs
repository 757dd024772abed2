//! Exact distributions of the chain on small sandpile groups.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sandpile::Sandpile;

/// Recurrent states with their one-step transition table.
#[derive(Clone, Debug)]
pub struct ExactChain {
    pub states: usize,
    n_vertices: usize,
    /// `next[s·n + u]`: state after adding a chip at non-sink `u`.
    next: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactSample {
    pub n: usize,
    /// `½ Σ |μ_N − 𝕌|`.
    pub tv: f64,
    /// `(|𝒢| Σ (μ_N − 𝕌)²)^{1/2}`.
    pub l2: f64,
}

impl ExactChain {
    pub fn new(sp: &Sandpile, cap: usize) -> Result<Self> {
        let states = sp
            .recurrent_states(cap)
            .ok_or_else(|| Error::GroupTooLarge { order: format!("> {cap}"), cap: cap as u64 })?;
        let index: HashMap<&[i64], u32> = states.iter().enumerate().map(|(k, c)| (c.chips.as_slice(), k as u32)).collect();
        let n = sp.n();
        let mut next = Vec::with_capacity(states.len() * n);
        for c in &states {
            for u in 0..n {
                let mut x = c.chips.clone();
                sp.add_chip(&mut x, u);
                next.push(index[x.as_slice()]);
            }
        }
        Ok(ExactChain { states: states.len(), n_vertices: n + 1, next })
    }

    /// Distances from uniform after each requested number of steps, started
    /// from `σ_full`.
    pub fn profile(&self, steps: &[usize]) -> Vec<ExactSample> {
        let g = self.states;
        let n = self.n_vertices - 1;
        let p = 1.0 / self.n_vertices as f64;
        let u = 1.0 / g as f64;
        let mut dist = vec![0.0; g];
        dist[0] = 1.0;
        let mut scratch = vec![0.0; g];
        let mut wanted: Vec<usize> = steps.to_vec();
        wanted.sort_unstable();
        wanted.dedup();
        let mut out = Vec::with_capacity(wanted.len());
        let mut cur = 0;
        for target in wanted {
            while cur < target {
                for (s, x) in scratch.iter_mut().zip(&dist) {
                    *s = p * x;
                }
                for (s, &mass) in dist.iter().enumerate() {
                    if mass == 0.0 {
                        continue;
                    }
                    let w = p * mass;
                    for &t in &self.next[s * n..(s + 1) * n] {
                        scratch[t as usize] += w;
                    }
                }
                std::mem::swap(&mut dist, &mut scratch);
                cur += 1;
            }
            let tv = 0.5 * dist.iter().map(|x| (x - u).abs()).sum::<f64>();
            let l2 = (g as f64 * dist.iter().map(|x| (x - u).powi(2)).sum::<f64>()).sqrt();
            out.push(ExactSample { n: target, tv, l2 });
        }
        out
    }
}
