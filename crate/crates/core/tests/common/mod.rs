//! Independent oracles shared by the integration tests and the acceptance
//! harness. Nothing here calls the library routine it is used to check.
#![allow(dead_code)]

pub mod props;

use std::collections::{HashMap, HashSet};

use num_complex::Complex64;
use rand::seq::IndexedRandom;
use rand::Rng;
use tilepile_core::tiling::{build_open, build_torus, FiniteSandpileGraph};
use tilepile_core::{Sandpile, Tiling, Vertex};

pub fn tiling(name: &str) -> Tiling {
    Tiling::builtin(name).unwrap()
}

pub fn torus(name: &str, m: usize) -> Sandpile {
    Sandpile::new(build_torus(&tiling(name), m).unwrap())
}

pub fn open(name: &str, m: usize) -> Sandpile {
    let t = tiling(name);
    Sandpile::new(build_open(&t, t.family().unwrap(), m).unwrap())
}

pub fn cycle_with_sink(n: usize) -> Sandpile {
    let edges: Vec<(usize, usize, u32)> = (0..n).map(|i| (i, (i + 1) % n, 1)).collect();
    Sandpile::new(FiniteSandpileGraph::from_edges(n, 0, &edges).unwrap())
}

/// Connected multigraph on `n` vertices: a random spanning tree plus `extra`
/// random edges, multiplicities up to `max_mult`.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, extra: usize, max_mult: u32) -> Sandpile {
    let mut e: HashMap<(usize, usize), u32> = HashMap::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        *e.entry((u, v)).or_default() += rng.random_range(1..=max_mult);
    }
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            *e.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut edges: Vec<(usize, usize, u32)> = e.into_iter().map(|((a, b), m)| (a, b, m)).collect();
    edges.sort_unstable();
    let sink = rng.random_range(0..n);
    Sandpile::new(FiniteSandpileGraph::from_edges(n, sink, &edges).unwrap())
}

/// Multiplicity matrix of the full graph.
pub fn adjacency_matrix(g: &FiniteSandpileGraph) -> Vec<Vec<u64>> {
    let n = g.n();
    let mut a = vec![vec![0u64; n]; n];
    for (v, adj) in g.adjacency.iter().enumerate() {
        for &(w, m) in adj {
            a[v][w] = m as u64;
        }
    }
    a
}

/// Spanning trees by deletion–contraction on the multiplicity matrix,
/// memoized on the matrix itself.
pub fn spanning_trees(a: &[Vec<u64>]) -> u128 {
    fn go(a: Vec<Vec<u64>>, memo: &mut HashMap<Vec<Vec<u64>>, u128>) -> u128 {
        let n = a.len();
        if n <= 1 {
            return 1;
        }
        if let Some(&t) = memo.get(&a) {
            return t;
        }
        // a vertex of multi-degree to one neighbour is a forced leaf
        for v in 0..n {
            let nbrs: Vec<usize> = (0..n).filter(|&w| w != v && a[v][w] > 0).collect();
            if nbrs.is_empty() {
                memo.insert(a, 0);
                return 0;
            }
            if nbrs.len() == 1 {
                let k = a[v][nbrs[0]] as u128;
                let t = k * go(remove(&a, v), memo);
                memo.insert(a, t);
                return t;
            }
        }
        let (u, w) = (0, (1..n).find(|&w| a[0][w] > 0).unwrap());
        let k = a[u][w] as u128;
        let mut del = a.clone();
        del[u][w] = 0;
        del[w][u] = 0;
        let mut con = a.clone();
        for x in 0..n {
            if x != u && x != w {
                con[u][x] += con[w][x];
                con[x][u] += con[x][w];
            }
        }
        con[u][w] = 0;
        con[w][u] = 0;
        let t = go(del, memo) + k * go(remove(&con, w), memo);
        memo.insert(a, t);
        t
    }
    fn remove(a: &[Vec<u64>], v: usize) -> Vec<Vec<u64>> {
        a.iter()
            .enumerate()
            .filter(|&(i, _)| i != v)
            .map(|(_, row)| row.iter().enumerate().filter(|&(j, _)| j != v).map(|(_, &x)| x).collect())
            .collect()
    }
    go(a.to_vec(), &mut HashMap::new())
}

/// Fraction-free Gaussian elimination.
pub fn det_bareiss(m: &[Vec<i64>]) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            let Some(p) = (k + 1..n).find(|&i| a[i][k] != 0) else { return 0 };
            a.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

/// Chip state on all vertices, sink included (the sink never fires).
pub fn full_chips(sp: &Sandpile, reduced: &[i64]) -> Vec<i64> {
    let g = &sp.graph;
    let mut out = vec![0; g.n()];
    for (k, &c) in reduced.iter().enumerate() {
        out[g.vertex_of(k)] = c;
    }
    out
}

pub fn reduced_chips(sp: &Sandpile, full: &[i64]) -> Vec<i64> {
    (0..sp.n()).map(|k| full[sp.graph.vertex_of(k)]).collect()
}

/// One toppling at a time, at a uniformly random unstable vertex.
/// Returns the stable state and the odometer on non-sink vertices.
pub fn naive_stabilize<R: Rng>(sp: &Sandpile, reduced: &[i64], rng: &mut R) -> (Vec<i64>, Vec<u64>) {
    let g = &sp.graph;
    let mut c = full_chips(sp, reduced);
    let mut odo = vec![0u64; g.n()];
    loop {
        let unstable: Vec<usize> = (0..g.n()).filter(|&v| v != g.sink && c[v] >= g.degree[v] as i64).collect();
        let Some(&v) = unstable.choose(rng) else { break };
        c[v] -= g.degree[v] as i64;
        odo[v] += 1;
        for &(w, m) in &g.adjacency[v] {
            c[w] += m as i64;
        }
    }
    let odo_r = (0..sp.n()).map(|k| odo[g.vertex_of(k)]).collect();
    (reduced_chips(sp, &c), odo_r)
}

/// Recurrent states as the closure of `σ_full` under single-chip additions,
/// using [`naive_stabilize`].
pub fn reachable_from_full<R: Rng>(sp: &Sandpile, rng: &mut R) -> HashSet<Vec<i64>> {
    let g = &sp.graph;
    let full: Vec<i64> = (0..sp.n()).map(|k| g.degree[g.vertex_of(k)] as i64 - 1).collect();
    let mut seen = HashSet::from([full.clone()]);
    let mut queue = vec![full];
    while let Some(c) = queue.pop() {
        for k in 0..sp.n() {
            let mut x = c.clone();
            x[k] += 1;
            let (s, _) = naive_stabilize(sp, &x, rng);
            if seen.insert(s.clone()) {
                queue.push(s);
            }
        }
    }
    seen
}

/// Every stable configuration, in odometer order.
pub fn all_stable(sp: &Sandpile) -> Vec<Vec<i64>> {
    let g = &sp.graph;
    let caps: Vec<i64> = (0..sp.n()).map(|k| g.degree[g.vertex_of(k)] as i64).collect();
    let mut out = Vec::new();
    let mut cur = vec![0i64; caps.len()];
    loop {
        out.push(cur.clone());
        let mut i = 0;
        loop {
            if i == cur.len() {
                return out;
            }
            cur[i] += 1;
            if cur[i] < caps[i] {
                break;
            }
            cur[i] = 0;
            i += 1;
        }
    }
}

/// `(Δf)(v)` for `f` given on the torus `𝒯/mΛ` as `c·m^d + lin(λ)`.
pub fn torus_laplacian_at(t: &Tiling, m: usize, f: &[f64], v: &Vertex) -> f64 {
    let vol = m.pow(t.dim() as u32);
    let at = |w: &Vertex| f[w.cell * vol + tilepile_core::tiling::torus_index(&w.lat, m)];
    let mut s = t.degree_of(v) as f64 * at(v);
    for (w, k) in t.neighbors(v) {
        s -= k as f64 * at(&w);
    }
    s
}

/// Law of the walk from `v` stopped on its first positive visit to cell 0,
/// by plain iteration of the distribution.
pub fn stopped_by_iteration(t: &Tiling, v: &Vertex, tol: f64) -> HashMap<Vec<i64>, f64> {
    let mut alive: HashMap<Vertex, f64> = HashMap::from([(v.clone(), 1.0)]);
    let mut hit: HashMap<Vec<i64>, f64> = HashMap::new();
    for _ in 0..100_000 {
        let mut next: HashMap<Vertex, f64> = HashMap::new();
        for (u, p) in &alive {
            let deg = t.degree_of(u) as f64;
            for (w, k) in t.neighbors(u) {
                let q = p * k as f64 / deg;
                if w.cell == 0 {
                    *hit.entry(w.lat.clone()).or_default() += q;
                } else {
                    *next.entry(w).or_default() += q;
                }
            }
        }
        alive = next;
        if alive.values().sum::<f64>() < tol {
            break;
        }
    }
    hit
}

pub fn e(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * t)
}

/// `Σ_λ w(λ) e(−x·λ)`.
pub fn fourier_sum(w: &HashMap<Vec<i64>, f64>, x: &[f64]) -> Complex64 {
    w.iter().map(|(l, p)| *p * e(-l.iter().zip(x).map(|(a, b)| *a as f64 * b).sum::<f64>())).sum()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = pts.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// `Δ^{-1}η` on a regular torus graph by summing the lazy walk,
/// `g = (2·deg)^{-1} Σ_n P_lazy^n η`.
pub fn lazy_series_greens(g: &FiniteSandpileGraph, eta: &[f64], tol: f64) -> Vec<f64> {
    let deg = g.degree[0] as f64;
    let mut f: Vec<f64> = eta.to_vec();
    let mut acc = vec![0.0; f.len()];
    for _ in 0..10_000_000 {
        for (a, x) in acc.iter_mut().zip(&f) {
            *a += x;
        }
        let next: Vec<f64> = (0..f.len())
            .map(|v| {
                let s: f64 = g.adjacency[v].iter().map(|&(w, m)| m as f64 * f[w]).sum();
                0.5 * f[v] + 0.5 * s / deg
            })
            .collect();
        f = next;
        if f.iter().map(|x| x.abs()).fold(0.0, f64::max) < tol {
            break;
        }
    }
    acc.iter().map(|a| a / (2.0 * deg)).collect()
}

/// `Δ⁻¹(δ₀ − m^{-d}1_Λ)` on the torus graph by conjugate gradients.
pub fn cg_point_kernel(t: &Tiling, m: usize) -> (Vec<f64>, usize) {
    let g = build_torus(t, m).unwrap();
    let n = g.n();
    let vol = m.pow(t.dim() as u32);
    let mut b = vec![0.0; n];
    for x in b.iter_mut().take(vol) {
        *x = -1.0 / vol as f64;
    }
    b[0] += 1.0;
    let apply = |x: &[f64]| -> Vec<f64> {
        (0..n).map(|v| g.degree[v] as f64 * x[v] - g.adjacency[v].iter().map(|&(w, k)| k as f64 * x[w]).sum::<f64>()).collect()
    };
    let mut x = vec![0.0; n];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    for _ in 0..10 * n {
        let ap = apply(&p);
        let a = rr / p.iter().zip(&ap).map(|(u, v)| u * v).sum::<f64>();
        for i in 0..n {
            x[i] += a * p[i];
            r[i] -= a * ap[i];
        }
        let nr: f64 = r.iter().map(|v| v * v).sum();
        if nr < 1e-26 {
            break;
        }
        for i in 0..n {
            p[i] = r[i] + nr / rr * p[i];
        }
        rr = nr;
    }
    (x, vol)
}
