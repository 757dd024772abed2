//! Stopped-walk measures on the period lattice, their characteristic
//! functions, and Green's functions on the torus and the infinite tiling.

mod llt;
mod torus;

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use llt::{local_limit_check, LocalLimitReport};
pub use torus::{add_shifted, point_kernels, solve_torus, TorusField};

use crate::error::{Error, Result};
use crate::linalg::solve_complex;
use crate::tiling::{graph_ball, torus_index, Tiling, Vertex};

/// Residual mass below which a stopped walk is truncated.
pub const STOP_TOL: f64 = 1e-14;
const MAX_STEPS: usize = 100_000;

/// `e(t) = exp(2πit)`.
pub fn e(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * t)
}

/// Law of the walk from `origin`, stopped on reaching the target cell class,
/// as a measure on lattice coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppedWalkMeasure {
    pub origin: Vertex,
    pub target_class: usize,
    pub weights: BTreeMap<Vec<i64>, f64>,
    pub mass: f64,
    /// `E[Y]` in lattice coordinates.
    pub moment: Vec<f64>,
    /// Mass still unabsorbed at truncation.
    pub residual: f64,
}

impl StoppedWalkMeasure {
    fn from_weights(origin: Vertex, target_class: usize, weights: BTreeMap<Vec<i64>, f64>, residual: f64, dim: usize) -> Self {
        let mass = weights.values().sum();
        let mut moment = vec![0.0; dim];
        for (x, w) in &weights {
            for k in 0..dim {
                moment[k] += w * x[k] as f64;
            }
        }
        StoppedWalkMeasure { origin, target_class, weights, mass, moment, residual }
    }

    /// `Σ_λ ϱ(λ) e(−x·λ)`.
    pub fn fourier(&self, x: &[f64]) -> Complex64 {
        self.weights
            .iter()
            .map(|(l, w)| *w * e(-l.iter().zip(x).map(|(a, b)| *a as f64 * b).sum::<f64>()))
            .sum()
    }

    /// Covariance in lattice coordinates.
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let d = self.moment.len();
        let mut c = vec![vec![0.0; d]; d];
        for (x, w) in &self.weights {
            for i in 0..d {
                for j in 0..d {
                    c[i][j] += w * (x[i] as f64 - self.moment[i]) * (x[j] as f64 - self.moment[j]);
                }
            }
        }
        c
    }
}

fn walk_until(tiling: &Tiling, start: HashMap<Vertex, f64>, target: usize) -> Result<(BTreeMap<Vec<i64>, f64>, f64)> {
    let mut absorbed: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    let mut cur = start;
    let mut steps = 0;
    loop {
        let live: f64 = cur.values().sum();
        if live < STOP_TOL {
            return Ok((absorbed, live));
        }
        if steps >= MAX_STEPS {
            return Err(Error::NonConvergent { residual: live, steps });
        }
        steps += 1;
        let mut next: HashMap<Vertex, f64> = HashMap::new();
        for (v, p) in cur {
            let deg = tiling.degree[v.cell] as f64;
            for (w, mult) in tiling.neighbors(&v) {
                let q = p * mult as f64 / deg;
                if w.cell == target {
                    *absorbed.entry(w.lat).or_default() += q;
                } else {
                    *next.entry(w).or_default() += q;
                }
            }
        }
        cur = next;
    }
}

/// `ϱ_v`: the walk from `v` stopped at its first positive time in `Λ`.
pub fn stopped_measure(tiling: &Tiling, v: &Vertex) -> Result<StoppedWalkMeasure> {
    let start: HashMap<Vertex, f64> = [(v.clone(), 1.0)].into();
    // take the first step by hand so that a start on Λ is not absorbed at time 0
    let mut first: HashMap<Vertex, f64> = HashMap::new();
    let mut absorbed: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    for (u, p) in start {
        let deg = tiling.degree[u.cell] as f64;
        for (w, mult) in tiling.neighbors(&u) {
            let q = p * mult as f64 / deg;
            if w.cell == 0 {
                *absorbed.entry(w.lat).or_default() += q;
            } else {
                *first.entry(w).or_default() += q;
            }
        }
    }
    let (rest, residual) = walk_until(tiling, first, 0)?;
    for (k, w) in rest {
        *absorbed.entry(k).or_default() += w;
    }
    Ok(StoppedWalkMeasure::from_weights(v.clone(), 0, absorbed, residual, tiling.dim()))
}

/// The walk from `v` stopped on first reaching cell class `target` (time 0 allowed).
pub fn hitting_measure(tiling: &Tiling, v: &Vertex, target: usize) -> Result<StoppedWalkMeasure> {
    if v.cell == target {
        let w: BTreeMap<Vec<i64>, f64> = [(v.lat.clone(), 1.0)].into();
        return Ok(StoppedWalkMeasure::from_weights(v.clone(), target, w, 0.0, tiling.dim()));
    }
    let (w, residual) = walk_until(tiling, [(v.clone(), 1.0)].into(), target)?;
    Ok(StoppedWalkMeasure::from_weights(v.clone(), target, w, residual, tiling.dim()))
}

/// `ϱ_η = Σ η(v) ϱ_v` pushed onto `Λ` (vertices of `Λ` push to themselves).
pub fn push_to_lattice(tiling: &Tiling, eta: &FunctionOnTiling) -> Result<BTreeMap<Vec<i64>, f64>> {
    let mut out: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    let mut cache: HashMap<usize, StoppedWalkMeasure> = HashMap::new();
    for (v, c) in &eta.values {
        if !cache.contains_key(&v.cell) {
            cache.insert(v.cell, hitting_measure(tiling, &Vertex::new(v.cell, vec![0; tiling.dim()]), 0)?);
        }
        for (l, w) in &cache[&v.cell].weights {
            let k: Vec<i64> = l.iter().zip(&v.lat).map(|(a, b)| a + b).collect();
            *out.entry(k).or_default() += c * w;
        }
    }
    Ok(out)
}

/// Laurent-polynomial matrix `Q(i,j)(z) = Σ mult/deg(i)·z^offset` over edges `i → j`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrix {
    pub cells: usize,
    pub entries: Vec<Vec<Vec<(Vec<i64>, f64)>>>,
}

impl TransferMatrix {
    pub fn new(tiling: &Tiling) -> Self {
        let n = tiling.cells();
        let mut entries = vec![vec![Vec::new(); n]; n];
        for (i, es) in tiling.out.iter().enumerate() {
            for e in es {
                entries[i][e.to].push((e.offset.clone(), e.mult as f64 / tiling.degree[i] as f64));
            }
        }
        TransferMatrix { cells: n, entries }
    }

    /// Entries at `z_k = e(−x_k)`.
    pub fn eval(&self, x: &[f64]) -> Vec<Vec<Complex64>> {
        self.entries
            .iter()
            .map(|row| {
                row.iter()
                    .map(|terms| {
                        terms
                            .iter()
                            .map(|(o, w)| *w * e(-o.iter().zip(x).map(|(a, b)| *a as f64 * b).sum::<f64>()))
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }

    pub fn is_row_stochastic(&self) -> bool {
        let q = self.eval(&vec![0.0; self.entries_dim()]);
        q.iter().all(|r| (r.iter().map(|z| z.re).sum::<f64>() - 1.0).abs() < 1e-12)
    }

    fn entries_dim(&self) -> usize {
        self.entries
            .iter()
            .flatten()
            .flatten()
            .map(|(o, _)| o.len())
            .next()
            .unwrap_or(0)
    }

    /// `(I − Q′)^{-1} c₀` where `Q′` is the block on the classes other than 0:
    /// the characteristic functions of the hitting measures from each class.
    pub fn hitting_transforms(&self, x: &[f64]) -> Result<Vec<Complex64>> {
        let q = self.eval(x);
        let n = self.cells;
        let mut out = vec![Complex64::new(1.0, 0.0); n];
        if n == 1 {
            return Ok(out);
        }
        let a: Vec<Vec<Complex64>> = (1..n)
            .map(|i| (1..n).map(|j| if i == j { Complex64::new(1.0, 0.0) - q[i][j] } else { -q[i][j] }).collect())
            .collect();
        let c0: Vec<Complex64> = (1..n).map(|i| q[i][0]).collect();
        let sol = match solve_complex(a, c0.clone(), 1e-13) {
            Some(s) => s,
            None => series_solve(&q, &c0)?,
        };
        out[1..].copy_from_slice(&sol);
        Ok(out)
    }
}

/// `Σ_k Q′^k c₀`, for a numerically singular `I − Q′`.
fn series_solve(q: &[Vec<Complex64>], c0: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = c0.len();
    let mut term = c0.to_vec();
    let mut acc = c0.to_vec();
    for _ in 0..100_000 {
        let next: Vec<Complex64> = (0..n).map(|i| (0..n).map(|j| q[i + 1][j + 1] * term[j]).sum()).collect();
        let size: f64 = next.iter().map(|z| z.norm()).sum();
        for i in 0..n {
            acc[i] += next[i];
        }
        term = next;
        if size < 1e-16 {
            return Ok(acc);
        }
    }
    Err(Error::SingularSolve)
}

/// `ϱ̂(x) = Q₀₀(z) + r₀(z)(I − Q′(z))^{-1} c₀(z)`.
pub fn rho_hat(tiling: &Tiling, x: &[f64]) -> Result<Complex64> {
    let tm = TransferMatrix::new(tiling);
    rho_hat_with(&tm, x)
}

pub fn rho_hat_with(tm: &TransferMatrix, x: &[f64]) -> Result<Complex64> {
    let q = tm.eval(x);
    let h = tm.hitting_transforms(x)?;
    Ok(q[0][0] + (1..tm.cells).map(|j| q[0][j] * h[j]).sum::<Complex64>())
}

/// Fourier transform of `g₀` restricted to `Λ`: `1/(deg 0·(1 − ϱ̂(x)))`.
pub fn g_hat(tiling: &Tiling, x: &[f64]) -> Result<Complex64> {
    let dist: f64 = x.iter().map(|t| (t - t.round()).powi(2)).sum::<f64>().sqrt();
    if dist < 1e-9 {
        return Err(Error::PoleAtZero(x.to_vec()));
    }
    let r = rho_hat(tiling, x)?;
    Ok(1.0 / (tiling.degree[0] as f64 * (Complex64::new(1.0, 0.0) - r)))
}

/// Finitely supported real function on the tiling.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FunctionOnTiling {
    pub values: BTreeMap<Vertex, f64>,
}

impl FunctionOnTiling {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn delta(v: Vertex) -> Self {
        let mut f = Self::new();
        f.add(v, 1.0);
        f
    }

    pub fn from_pairs<I: IntoIterator<Item = (Vertex, f64)>>(it: I) -> Self {
        let mut f = Self::new();
        for (v, c) in it {
            f.add(v, c);
        }
        f
    }

    pub fn add(&mut self, v: Vertex, c: f64) {
        let e = self.values.entry(v.clone()).or_default();
        *e += c;
        if *e == 0.0 {
            self.values.remove(&v);
        }
    }

    pub fn sum(&self) -> f64 {
        self.values.values().sum()
    }

    pub fn l1(&self) -> f64 {
        self.values.values().map(|x| x.abs()).sum()
    }

    pub fn translate(&self, by: &[i64]) -> Self {
        Self::from_pairs(self.values.iter().map(|(v, c)| (v.shifted(by), *c)))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_pairs(self.values.iter().map(|(v, c)| (v.clone(), c * s)))
    }

    pub fn plus(&self, o: &Self) -> Self {
        let mut f = self.clone();
        for (v, c) in &o.values {
            f.add(v.clone(), *c);
        }
        f
    }

    /// `Δf(x) = deg(x) f(x) − Σ_{y∼x} f(y)`.
    pub fn laplacian(&self, tiling: &Tiling) -> Self {
        let mut out = Self::new();
        for (v, c) in &self.values {
            out.add(v.clone(), tiling.degree_of(v) as f64 * c);
            for (w, m) in tiling.neighbors(v) {
                out.add(w, -(m as f64) * c);
            }
        }
        out
    }

    pub fn is_integer(&self) -> bool {
        self.values.values().all(|c| c.fract() == 0.0)
    }
}

/// `C⁰ ⊃ C¹ ⊃ C²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FunctionClass {
    C0,
    C1,
    C2,
}

impl std::fmt::Display for FunctionClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FunctionClass::C0 => "C0",
            FunctionClass::C1 => "C1",
            FunctionClass::C2 => "C2",
        };
        f.write_str(s)
    }
}

/// Class needed for `g*η ∈ ℓ²`: `C²` in `d = 2`, `C¹` in `d = 3, 4`, `C⁰` above.
pub fn required_class(dim: usize) -> FunctionClass {
    match dim {
        0..=2 => FunctionClass::C2,
        3 | 4 => FunctionClass::C1,
        _ => FunctionClass::C0,
    }
}

/// Decay exponent `β = d − 2 + ρ` of `g*η` for `η` in the required class.
pub fn decay_exponent(dim: usize) -> f64 {
    let rho = match required_class(dim) {
        FunctionClass::C0 => 0.0,
        FunctionClass::C1 => 1.0,
        FunctionClass::C2 => 2.0,
    };
    dim as f64 - 2.0 + rho
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: FunctionClass,
    pub sum: f64,
    /// `Σ η(x) E[Y_{x,T_x}]`, lattice coordinates.
    pub moment: Vec<f64>,
}

pub const CLASS_TOL: f64 = 1e-10;

pub fn moment_with_target(tiling: &Tiling, eta: &FunctionOnTiling, target: usize) -> Result<Vec<f64>> {
    let d = tiling.dim();
    let mut moments: HashMap<usize, Vec<f64>> = HashMap::new();
    let mut total = vec![0.0; d];
    for (v, c) in &eta.values {
        if !moments.contains_key(&v.cell) {
            let h = hitting_measure(tiling, &Vertex::new(v.cell, vec![0; d]), target)?;
            moments.insert(v.cell, h.moment);
        }
        let m = &moments[&v.cell];
        for k in 0..d {
            total[k] += c * (m[k] + v.lat[k] as f64);
        }
    }
    Ok(total)
}

pub fn classify(tiling: &Tiling, eta: &FunctionOnTiling) -> Result<Classification> {
    let sum = eta.sum();
    let moment = moment_with_target(tiling, eta, 0)?;
    let scale = eta.l1().max(1.0);
    let class = if sum.abs() > CLASS_TOL * scale {
        FunctionClass::C0
    } else if moment.iter().any(|m| m.abs() > CLASS_TOL * scale) {
        FunctionClass::C1
    } else {
        FunctionClass::C2
    };
    Ok(Classification { class, sum, moment })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Torus { m: usize },
    Ball { radius: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Normalization {
    /// Global mean zero on the torus.
    MeanZero,
    /// Richardson limit of torus tables; decays at infinity.
    Extrapolated { m1: usize, m2: usize, order: f64 },
}

/// Values of a Green's convolution on the torus or on a ball of the tiling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreensTable {
    pub dim: usize,
    pub cells: usize,
    pub domain: Domain,
    pub normalization: Normalization,
    /// Torus: indexed `c·m^d + lin(λ)`; ball: aligned with `vertices`.
    pub values: Vec<f64>,
    pub vertices: Vec<Vertex>,
    pub errors: Option<Vec<f64>>,
    /// Derivative multi-index applied so far.
    pub derivative: Vec<usize>,
}

impl GreensTable {
    pub fn get(&self, v: &Vertex) -> Option<f64> {
        match self.domain {
            Domain::Torus { m } => {
                let vol = m.pow(self.dim as u32);
                Some(self.values[v.cell * vol + torus_index(&v.lat, m)])
            }
            Domain::Ball { .. } => self.vertices.iter().position(|w| w == v).map(|k| self.values[k]),
        }
    }

    fn index(&self) -> HashMap<&Vertex, usize> {
        self.vertices.iter().enumerate().map(|(k, v)| (v, k)).collect()
    }

    /// Rows `(cell, lattice coordinates, value)`.
    pub fn rows(&self) -> Vec<(Vertex, f64)> {
        match self.domain {
            Domain::Torus { m } => {
                let vol = m.pow(self.dim as u32);
                (0..self.values.len())
                    .map(|k| (Vertex::new(k / vol, crate::tiling::torus_coords(k % vol, self.dim, m)), self.values[k]))
                    .collect()
            }
            Domain::Ball { .. } => self.vertices.iter().cloned().zip(self.values.iter().copied()).collect(),
        }
    }
}

/// `g_{𝕋_m} * η` for mean-zero `η`, normalized to global mean zero.
pub fn greens_torus(tiling: &Tiling, m: usize, eta: &FunctionOnTiling) -> Result<GreensTable> {
    let sum = eta.sum();
    if sum.abs() > 1e-10 * eta.l1().max(1.0) {
        return Err(Error::MeanNotZero(sum));
    }
    let d = tiling.dim();
    let vol = m.pow(d as u32);
    let mut rhs = vec![0.0; tiling.cells() * vol];
    for (v, c) in &eta.values {
        rhs[v.cell * vol + torus_index(&v.lat, m)] += c;
    }
    let field = solve_torus(tiling, m, &rhs, false)?;
    Ok(GreensTable {
        dim: d,
        cells: tiling.cells(),
        domain: Domain::Torus { m },
        normalization: Normalization::MeanZero,
        values: field.values,
        vertices: Vec::new(),
        errors: None,
        derivative: vec![0; d],
    })
}

/// Default torus sizes `(m₁, 2m₁)` for extrapolating to the infinite tiling.
pub fn default_levels(dim: usize, radius: usize) -> (usize, usize) {
    let m1 = match dim {
        0..=2 => (8 * radius).max(128),
        3 => 64.max(4 * radius),
        4 => 32.max(4 * radius),
        _ => 12.max(4 * radius),
    };
    (m1, 2 * m1)
}

/// Richardson order in `m` for torus-to-plane convergence.
pub fn richardson_order(dim: usize) -> f64 {
    if dim <= 2 {
        2.0
    } else {
        dim as f64 - 2.0
    }
}

/// `g*η` on the graph ball of radius `radius` about the origin, by Richardson
/// extrapolation of two torus tables.
pub fn greens_infinite(tiling: &Tiling, eta: &FunctionOnTiling, radius: usize) -> Result<GreensTable> {
    let (m1, m2) = default_levels(tiling.dim(), radius);
    greens_infinite_with(tiling, eta, radius, m1, m2)
}

pub fn greens_infinite_with(tiling: &Tiling, eta: &FunctionOnTiling, radius: usize, m1: usize, m2: usize) -> Result<GreensTable> {
    let d = tiling.dim();
    let need = required_class(d);
    let cls = classify(tiling, eta)?;
    if cls.class < need {
        return Err(Error::ClassMismatch { found: cls.class.to_string(), required: need.to_string() });
    }
    let t1 = greens_torus(tiling, m1, eta)?;
    let t2 = greens_torus(tiling, m2, eta)?;
    let ball: Vec<Vertex> = graph_ball(tiling, &Vertex::origin(d), radius).into_iter().map(|(v, _)| v).collect();
    let p = richardson_order(d);
    let (w1, w2) = ((m1 as f64).powf(p), (m2 as f64).powf(p));
    let mut values = Vec::with_capacity(ball.len());
    let mut errors = Vec::with_capacity(ball.len());
    for v in &ball {
        let a = t1.get(v).unwrap();
        let b = t2.get(v).unwrap();
        let r = (w2 * b - w1 * a) / (w2 - w1);
        values.push(r);
        errors.push((r - b).abs());
    }
    Ok(GreensTable {
        dim: d,
        cells: tiling.cells(),
        domain: Domain::Ball { radius },
        normalization: Normalization::Extrapolated { m1, m2, order: p },
        values,
        vertices: ball,
        errors: Some(errors),
        derivative: vec![0; d],
    })
}

/// `D^a f`, with `D_i f(x) = f(x + e_i) − f(x)` along lattice directions.
pub fn discrete_derivative(table: &GreensTable, a: &[usize]) -> GreensTable {
    let mut cur = table.clone();
    for (i, &ai) in a.iter().enumerate() {
        for _ in 0..ai {
            cur = difference(&cur, i);
        }
    }
    cur
}

fn difference(t: &GreensTable, axis: usize) -> GreensTable {
    let mut step = vec![0i64; t.dim];
    step[axis] = 1;
    let mut out = t.clone();
    out.derivative[axis] += 1;
    match t.domain {
        Domain::Torus { m } => {
            let vol = m.pow(t.dim as u32);
            for (k, val) in out.values.iter_mut().enumerate() {
                let c = k / vol;
                let lat = crate::tiling::torus_coords(k % vol, t.dim, m);
                let sh: Vec<i64> = lat.iter().zip(&step).map(|(a, b)| a + b).collect();
                *val = t.values[c * vol + torus_index(&sh, m)] - t.values[k];
            }
            out.errors = None;
        }
        Domain::Ball { .. } => {
            let idx = t.index();
            let mut verts = Vec::new();
            let mut vals = Vec::new();
            let mut errs = Vec::new();
            for (k, v) in t.vertices.iter().enumerate() {
                if let Some(&j) = idx.get(&v.shifted(&step)) {
                    verts.push(v.clone());
                    vals.push(t.values[j] - t.values[k]);
                    if let Some(e) = &t.errors {
                        errs.push(e[j] + e[k]);
                    }
                }
            }
            out.vertices = verts;
            out.values = vals;
            out.errors = t.errors.as_ref().map(|_| errs);
        }
    }
    out
}
