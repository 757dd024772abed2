//! Savings functionals, prevector enumeration and the spectral parameters.

mod enumerate;
mod eval;
mod search;
mod symmetry;

#[cfg(test)]
mod tests;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::greens::{hitting_measure, FunctionClass, FunctionOnTiling, CLASS_TOL};
use crate::tiling::{Tiling, Vertex};

pub use eval::{default_ladder, f_eval, f_eval_antisymmetric, richardson, sav, sav_subset, Evaluator, SavingsReport};
pub use search::{
    gamma_j_search, gamma_search, hyperplane_sets, spectral_factors, spectral_params, FactorEntry, GammaEntry,
    SearchOptions, SpectralFactors, SpectralParams,
};
pub use symmetry::{Hyperplane, ReflectionGroup};

/// Enumeration order on vertices: lattice coordinates first, then cell.
pub fn key_cmp(a: &Vertex, b: &Vertex) -> Ordering {
    a.lat.cmp(&b.lat).then(a.cell.cmp(&b.cell))
}

/// An integer function on the tiling with its class tag.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prevector {
    /// Nonzero coefficients in enumeration order.
    pub coeffs: Vec<(Vertex, i64)>,
    pub class: FunctionClass,
    pub symmetry: Option<Vec<Hyperplane>>,
}

impl Prevector {
    pub fn new(tiling: &Tiling, coeffs: Vec<(Vertex, i64)>) -> Result<Self> {
        let oracle = ClassOracle::new(tiling)?;
        Ok(Self::with_oracle(&oracle, coeffs))
    }

    pub fn with_oracle(oracle: &ClassOracle, coeffs: Vec<(Vertex, i64)>) -> Self {
        let coeffs = normalize(coeffs);
        let class = oracle.class(&coeffs);
        Prevector { coeffs, class, symmetry: None }
    }

    pub fn l1(&self) -> i64 {
        self.coeffs.iter().map(|(_, c)| c.abs()).sum()
    }

    pub fn sum(&self) -> i64 {
        self.coeffs.iter().map(|(_, c)| c).sum()
    }

    pub fn to_function(&self) -> FunctionOnTiling {
        FunctionOnTiling::from_pairs(self.coeffs.iter().map(|(v, c)| (v.clone(), *c as f64)))
    }

    pub fn translate(&self, by: &[i64]) -> Self {
        Prevector {
            coeffs: normalize(self.coeffs.iter().map(|(v, c)| (v.shifted(by), *c)).collect()),
            class: self.class,
            symmetry: self.symmetry.clone(),
        }
    }

    /// Canonical form: reduced modulo `𝓘` (translation mode only), minimal
    /// translate, leading coefficient positive.
    pub fn canonical(&self, tiling: &Tiling) -> Self {
        let mut c = self.coeffs.clone();
        if self.symmetry.is_none() {
            c = min_translate(reduce_mod_i(tiling, &min_translate(c)));
        }
        Prevector { coeffs: sign_normalize(c), class: self.class, symmetry: self.symmetry.clone() }
    }
}

/// Merge duplicates, drop zeros, sort in enumeration order.
pub fn normalize(coeffs: Vec<(Vertex, i64)>) -> Vec<(Vertex, i64)> {
    let mut m: BTreeMap<Vertex, i64> = BTreeMap::new();
    for (v, c) in coeffs {
        *m.entry(v).or_insert(0) += c;
    }
    let mut out: Vec<(Vertex, i64)> = m.into_iter().filter(|(_, c)| *c != 0).collect();
    out.sort_by(|a, b| key_cmp(&a.0, &b.0));
    out
}

/// Translate so the smallest support vertex sits in the fundamental domain.
pub fn min_translate(coeffs: Vec<(Vertex, i64)>) -> Vec<(Vertex, i64)> {
    let c = normalize(coeffs);
    let Some((first, _)) = c.first() else {
        return c;
    };
    let by: Vec<i64> = first.lat.iter().map(|x| -x).collect();
    c.into_iter().map(|(v, k)| (v.shifted(&by), k)).collect()
}

fn sign_normalize(c: Vec<(Vertex, i64)>) -> Vec<(Vertex, i64)> {
    match c.first() {
        Some((_, k)) if *k < 0 => c.into_iter().map(|(v, k)| (v, -k)).collect(),
        _ => c,
    }
}

/// Greedily subtracts `±Δδ_x` while the ℓ² norm strictly decreases.
pub fn reduce_mod_i(tiling: &Tiling, coeffs: &[(Vertex, i64)]) -> Vec<(Vertex, i64)> {
    let mut cur: BTreeMap<Vertex, i64> = coeffs.iter().cloned().collect();
    loop {
        let mut cand: BTreeSet<Vertex> = BTreeSet::new();
        for v in cur.keys() {
            cand.insert(v.clone());
            for (w, _) in tiling.neighbors(v) {
                cand.insert(w);
            }
        }
        // ‖ν − sΔδ_x‖² − ‖ν‖² = ‖Δδ_x‖² − 2s⟨ν, Δδ_x⟩
        let mut best: Option<(i64, Vertex, i64)> = None;
        for x in cand {
            let deg = tiling.degree_of(&x) as i64;
            let mut inner = deg * cur.get(&x).copied().unwrap_or(0);
            let mut norm = deg * deg;
            for (w, m) in tiling.neighbors(&x) {
                inner -= m as i64 * cur.get(&w).copied().unwrap_or(0);
                norm += (m as i64).pow(2);
            }
            for s in [1i64, -1] {
                let delta = norm - 2 * s * inner;
                if delta < 0 && best.as_ref().is_none_or(|b| delta < b.0) {
                    best = Some((delta, x.clone(), s));
                }
            }
        }
        let Some((_, x, s)) = best else {
            break;
        };
        let deg = tiling.degree_of(&x) as i64;
        *cur.entry(x.clone()).or_insert(0) -= s * deg;
        for (w, m) in tiling.neighbors(&x) {
            *cur.entry(w).or_insert(0) += s * m as i64;
        }
        cur.retain(|_, c| *c != 0);
    }
    normalize(cur.into_iter().collect())
}

/// Moments `E[Y_{x,T_x}]` per cell, for classifying integer functions quickly.
#[derive(Clone, Debug)]
pub struct ClassOracle {
    cell_moments: Vec<Vec<f64>>,
}

impl ClassOracle {
    pub fn new(tiling: &Tiling) -> Result<Self> {
        let d = tiling.dim();
        let cell_moments = (0..tiling.cells())
            .map(|c| hitting_measure(tiling, &Vertex::new(c, vec![0; d]), 0).map(|h| h.moment))
            .collect::<Result<_>>()?;
        Ok(ClassOracle { cell_moments })
    }

    pub fn moment_of(&self, v: &Vertex) -> Vec<f64> {
        self.cell_moments[v.cell].iter().zip(&v.lat).map(|(m, l)| m + *l as f64).collect()
    }

    pub fn moment(&self, nu: &[(Vertex, i64)]) -> Vec<f64> {
        let d = self.cell_moments.first().map_or(0, |m| m.len());
        let mut out = vec![0.0; d];
        for (v, c) in nu {
            for (o, m) in out.iter_mut().zip(self.moment_of(v)) {
                *o += *c as f64 * m;
            }
        }
        out
    }

    pub fn class(&self, nu: &[(Vertex, i64)]) -> FunctionClass {
        let sum: i64 = nu.iter().map(|(_, c)| c).sum();
        if sum != 0 {
            return FunctionClass::C0;
        }
        let scale = nu.iter().map(|(_, c)| c.abs()).sum::<i64>().max(1) as f64;
        if self.moment(nu).iter().any(|m| m.abs() > CLASS_TOL * scale) {
            FunctionClass::C1
        } else {
            FunctionClass::C2
        }
    }
}

pub use enumerate::{enumerate_prevectors, lattice_step, EnumOptions};
