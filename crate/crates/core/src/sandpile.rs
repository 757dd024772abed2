//! Chip configurations, stabilization and the sandpile group.
//!
//! Configurations are indexed by non-sink vertices in increasing order (see
//! [`FiniteSandpileGraph::reduced_index`]).

use std::collections::{HashSet, VecDeque};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::bareiss_det;
use crate::tiling::FiniteSandpileGraph;

/// Chip counts on the non-sink vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub chips: Vec<i64>,
}

impl Configuration {
    pub fn new(chips: Vec<i64>) -> Self {
        Configuration { chips }
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn total(&self) -> i64 {
        self.chips.iter().sum()
    }
}

/// A graph prepared for repeated toppling.
#[derive(Clone, Debug)]
pub struct Sandpile {
    pub graph: FiniteSandpileGraph,
    deg: Vec<i64>,
    /// Non-sink neighbours by reduced index, with multiplicity.
    nbrs: Vec<Vec<(u32, i64)>>,
    /// Number of edges to the sink.
    to_sink: Vec<i64>,
}

impl Sandpile {
    pub fn new(graph: FiniteSandpileGraph) -> Self {
        let n = graph.n_nonsink();
        let mut deg = Vec::with_capacity(n);
        let mut nbrs = Vec::with_capacity(n);
        let mut to_sink = Vec::with_capacity(n);
        for v in graph.nonsink() {
            deg.push(graph.degree[v] as i64);
            let mut ns = Vec::new();
            let mut s = 0;
            for &(w, m) in &graph.adjacency[v] {
                if w == graph.sink {
                    s += m as i64;
                } else {
                    ns.push((graph.reduced_index(w) as u32, m as i64));
                }
            }
            nbrs.push(ns);
            to_sink.push(s);
        }
        Sandpile { graph, deg, nbrs, to_sink }
    }

    /// Number of non-sink vertices.
    pub fn n(&self) -> usize {
        self.deg.len()
    }

    pub fn degrees(&self) -> &[i64] {
        &self.deg
    }

    pub fn sink_edges(&self) -> &[i64] {
        &self.to_sink
    }

    pub fn neighbors(&self, k: usize) -> &[(u32, i64)] {
        &self.nbrs[k]
    }

    fn check(&self, c: &Configuration) -> Result<()> {
        if c.len() != self.n() {
            return Err(Error::SizeMismatch { expected: self.n(), got: c.len() });
        }
        Ok(())
    }

    pub fn zero(&self) -> Configuration {
        Configuration::new(vec![0; self.n()])
    }

    /// `σ_full(v) = deg(v) − 1`.
    pub fn max_stable(&self) -> Configuration {
        Configuration::new(self.deg.iter().map(|d| d - 1).collect())
    }

    pub fn is_stable(&self, c: &Configuration) -> bool {
        c.chips.iter().zip(&self.deg).all(|(x, d)| *x >= 0 && x < d)
    }

    /// Stabilizes in place and returns the odometer.
    pub fn stabilize_in_place(&self, chips: &mut [i64]) -> Result<Vec<u64>> {
        let n = self.n();
        let mut odo = vec![0u64; n];
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| chips[v] >= self.deg[v]).collect();
        let mut queued = vec![false; n];
        for &v in &queue {
            queued[v] = true;
        }
        while let Some(v) = queue.pop_front() {
            queued[v] = false;
            let k = chips[v] / self.deg[v];
            if k == 0 {
                continue;
            }
            chips[v] -= k * self.deg[v];
            odo[v] += k as u64;
            for &(w, m) in &self.nbrs[v] {
                let w = w as usize;
                chips[w] = chips[w].checked_add(k * m).ok_or(Error::ChipOverflow(w))?;
                if !queued[w] && chips[w] >= self.deg[w] {
                    queued[w] = true;
                    queue.push_back(w);
                }
            }
        }
        Ok(odo)
    }

    pub fn stabilize(&self, c: &Configuration) -> Result<(Configuration, Vec<u64>)> {
        self.check(c)?;
        let mut chips = c.chips.clone();
        let odo = self.stabilize_in_place(&mut chips)?;
        Ok((Configuration::new(chips), odo))
    }

    /// Adds one chip at reduced index `k` and stabilizes; returns the avalanche size.
    pub fn add_chip(&self, chips: &mut [i64], k: usize) -> u64 {
        chips[k] += 1;
        if chips[k] < self.deg[k] {
            return 0;
        }
        self.stabilize_in_place(chips).expect("single chip cannot overflow").iter().sum()
    }

    /// `(a + b)°`.
    pub fn add(&self, a: &Configuration, b: &Configuration) -> Result<Configuration> {
        self.check(a)?;
        self.check(b)?;
        let sum = Configuration::new(a.chips.iter().zip(&b.chips).map(|(x, y)| x + y).collect());
        Ok(self.stabilize(&sum)?.0)
    }

    /// `(2σ_full − (2σ_full)°)°`.
    pub fn identity(&self) -> Configuration {
        let full = self.max_stable();
        let double = Configuration::new(full.chips.iter().map(|x| 2 * x).collect());
        let s = self.stabilize(&double).expect("bounded").0;
        let diff = Configuration::new(double.chips.iter().zip(&s.chips).map(|(a, b)| a - b).collect());
        self.stabilize(&diff).expect("bounded").0
    }

    /// Burning test: firing the sink once topples every vertex exactly once.
    pub fn is_recurrent(&self, c: &Configuration) -> bool {
        if self.check(c).is_err() || !self.is_stable(c) {
            return false;
        }
        let mut chips: Vec<i64> = c.chips.iter().zip(&self.to_sink).map(|(x, s)| x + s).collect();
        let odo = self.stabilize_in_place(&mut chips).expect("bounded");
        odo.iter().all(|&k| k == 1) && chips == c.chips
    }

    /// One step of the chain: with probability `1/|V|` stay, otherwise add a
    /// chip at a uniform non-sink vertex.
    pub fn step<R: Rng + ?Sized>(&self, c: &mut Configuration, rng: &mut R) {
        let u = rng.random_range(0..=self.n());
        if u < self.n() {
            self.add_chip(&mut c.chips, u);
        }
    }

    /// `Δ′` as a dense row-major matrix.
    pub fn reduced_laplacian(&self) -> Vec<Vec<i64>> {
        let n = self.n();
        let mut a = vec![vec![0i64; n]; n];
        for v in 0..n {
            a[v][v] = self.deg[v];
            for &(w, m) in &self.nbrs[v] {
                a[v][w as usize] -= m;
            }
        }
        a
    }

    /// `|𝒢| = det Δ′`.
    pub fn group_order(&self) -> BigInt {
        bareiss_det(&self.reduced_laplacian())
    }

    /// `k·a` in the group, by doubling.
    pub fn scalar_mul(&self, a: &Configuration, k: &BigInt) -> Result<Configuration> {
        self.check(a)?;
        let mut acc = self.identity();
        if k.is_zero() {
            return Ok(acc);
        }
        let mut base = a.clone();
        let mut e = k.abs();
        while !e.is_zero() {
            if (&e & BigInt::one()) == BigInt::one() {
                acc = self.add(&acc, &base)?;
            }
            e >>= 1;
            if !e.is_zero() {
                base = self.add(&base, &base)?;
            }
        }
        if k.is_negative() {
            return self.inverse(&acc);
        }
        Ok(acc)
    }

    /// `(|𝒢| − 1)·a`, the inverse of a recurrent `a`.
    pub fn inverse(&self, a: &Configuration) -> Result<Configuration> {
        let ord = self.group_order();
        self.scalar_mul(a, &(ord - 1))
    }

    /// All recurrent configurations, by closure of `σ_full` under adding single
    /// chips; `None` if more than `cap` are found.
    pub fn recurrent_states(&self, cap: usize) -> Option<Vec<Configuration>> {
        let start = self.max_stable();
        let mut seen: HashSet<Vec<i64>> = HashSet::new();
        seen.insert(start.chips.clone());
        let mut order = vec![start.chips];
        let mut head = 0;
        while head < order.len() {
            let cur = order[head].clone();
            head += 1;
            for k in 0..self.n() {
                let mut next = cur.clone();
                self.add_chip(&mut next, k);
                if seen.insert(next.clone()) {
                    if order.len() >= cap {
                        return None;
                    }
                    order.push(next);
                }
            }
        }
        Some(order.into_iter().map(Configuration::new).collect())
    }

    /// Group order by enumeration, capped.
    pub fn group_order_by_enumeration(&self, cap: usize) -> Option<u64> {
        self.recurrent_states(cap).map(|v| v.len() as u64)
    }
}

/// Positive definiteness of `Δ′` checked via a float Cholesky factorization.
pub fn is_positive_definite(a: &[Vec<i64>]) -> bool {
    let n = a.len();
    let flat: Vec<f64> = a.iter().flat_map(|r| r.iter().map(|&x| x as f64)).collect();
    crate::linalg::cholesky(&flat, n).is_some()
}

pub fn order_to_u64(b: &BigInt) -> Option<u64> {
    b.to_u64()
}
