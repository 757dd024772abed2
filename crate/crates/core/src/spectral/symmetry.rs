//! Finite groups generated by family hyperplane reflections.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tiling::{Face, ReflectionFamily, Tiling, Vertex};

const MAX_ORDER: usize = 256;
const SNAP: f64 = 1e-6;

/// Hyperplane `{level_family = level}`; `side` marks the chamber half-space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Hyperplane {
    pub family: usize,
    pub level: i64,
    pub side: i8,
}

impl From<Face> for Hyperplane {
    fn from(f: Face) -> Self {
        Hyperplane { family: f.0, level: f.1, side: f.2 }
    }
}

#[derive(Clone, Debug)]
struct Affine {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    sign: i8,
}

impl Affine {
    fn compose(&self, o: &Affine) -> Affine {
        let d = self.b.len();
        let a = (0..d).map(|r| (0..d).map(|c| (0..d).map(|k| self.a[r][k] * o.a[k][c]).sum()).collect()).collect();
        let b = (0..d).map(|r| (0..d).map(|k| self.a[r][k] * o.b[k]).sum::<f64>() + self.b[r]).collect();
        Affine { a, b, sign: self.sign * o.sign }
    }

    fn key(&self) -> Vec<i64> {
        self.a.iter().flatten().chain(&self.b).map(|x| (x * 1e6).round() as i64).collect()
    }

    fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.a.iter().zip(&self.b).map(|(row, b)| row.iter().zip(f).map(|(x, y)| x * y).sum::<f64>() + b).collect()
    }
}

/// The group `𝔖_S` generated by reflections in a set of hyperplanes.
#[derive(Clone, Debug)]
pub struct ReflectionGroup {
    pub hyperplanes: Vec<Hyperplane>,
    elements: Vec<Affine>,
    positions: Vec<Vec<f64>>,
    geom: crate::tiling::geometry::FamGeom,
}

impl ReflectionGroup {
    pub fn new(tiling: &Tiling, family: &ReflectionFamily, hyperplanes: &[Hyperplane]) -> Result<Self> {
        let geom = tiling.family_geometry(family)?;
        let d = tiling.dim();
        for h in hyperplanes {
            if h.family >= geom.num_families() {
                return Err(Error::InvalidFamily(format!("no family {}", h.family)));
            }
        }
        let gens: Vec<Affine> = hyperplanes
            .iter()
            .map(|h| {
                let (a, b) = geom.reflection_affine(h.family, h.level);
                Affine { a, b, sign: -1 }
            })
            .collect();
        let id = Affine {
            a: (0..d).map(|r| (0..d).map(|c| if r == c { 1.0 } else { 0.0 }).collect()).collect(),
            b: vec![0.0; d],
            sign: 1,
        };
        let mut seen: HashSet<Vec<i64>> = HashSet::from([id.key()]);
        let mut elements = vec![id];
        let mut k = 0;
        while k < elements.len() {
            for g in &gens {
                let h = g.compose(&elements[k]);
                if seen.insert(h.key()) {
                    elements.push(h);
                    if elements.len() > MAX_ORDER {
                        return Err(Error::GroupTooLarge { order: format!(">{MAX_ORDER}"), cap: MAX_ORDER as u64 });
                    }
                }
            }
            k += 1;
        }
        let positions = tiling.spec.cells.iter().map(|c| c.position.iter().map(|s| s.to_f64()).collect()).collect();
        Ok(ReflectionGroup { hyperplanes: hyperplanes.to_vec(), elements, positions, geom })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn sign(&self, g: usize) -> i8 {
        self.elements[g].sign
    }

    pub fn apply(&self, g: usize, v: &Vertex) -> Result<Vertex> {
        let f: Vec<f64> = v.lat.iter().zip(&self.positions[v.cell]).map(|(l, p)| *l as f64 + p).collect();
        let img = self.elements[g].apply(&f);
        for (c, p) in self.positions.iter().enumerate() {
            let diff: Vec<f64> = img.iter().zip(p).map(|(a, b)| a - b).collect();
            if diff.iter().all(|x| (x - x.round()).abs() < SNAP) {
                return Ok(Vertex::new(c, diff.iter().map(|x| x.round() as i64).collect()));
            }
        }
        Err(Error::Invalid(format!("reflection image of {v:?} is not a vertex")))
    }

    /// Strictly on the chamber side of every hyperplane.
    pub fn in_chamber(&self, v: &Vertex) -> bool {
        self.hyperplanes.iter().all(|h| self.geom.side(h.family, h.level, v) * h.side as i32 > 0)
    }

    pub fn on_wall(&self, v: &Vertex) -> bool {
        self.hyperplanes.iter().any(|h| self.geom.side(h.family, h.level, v) == 0)
    }

    /// `Σ_g sign(g)·seed∘g⁻¹`.
    pub fn antisymmetrize(&self, seed: &[(Vertex, i64)]) -> Result<Vec<(Vertex, i64)>> {
        let mut out: BTreeMap<Vertex, i64> = BTreeMap::new();
        for (v, c) in seed {
            for g in 0..self.order() {
                *out.entry(self.apply(g, v)?).or_insert(0) += self.sign(g) as i64 * c;
            }
        }
        Ok(out.into_iter().filter(|(_, c)| *c != 0).collect())
    }

    pub fn is_antisymmetric(&self, nu: &[(Vertex, i64)]) -> Result<bool> {
        let map: BTreeMap<&Vertex, i64> = nu.iter().map(|(v, c)| (v, *c)).collect();
        for (v, c) in nu {
            for g in 1..self.order() {
                let w = self.apply(g, v)?;
                if map.get(&w).copied().unwrap_or(0) != self.sign(g) as i64 * c {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}
