//! Periodic tilings, their torus and open-boundary quotients, and the
//! geometric hypotheses (condition A, reflection symmetry) on families of
//! reflecting hyperplanes.

mod builtins;
pub(crate) mod geometry;

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use builtins::{builtin, builtin_names, zd};
use geometry::{FamGeom, Geom};

use crate::error::{Error, Result};
use crate::exact::Scalar;

/// Largest allowed multiplicity of a single edge.
pub const MAX_MULTIPLICITY: u32 = 1 << 16;

/// Tolerance for `|det M|`.
pub const DET_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub id: usize,
    /// Fractional coordinates in `[0,1)^d`.
    pub position: Vec<Scalar>,
}

/// `[i, j, offset, multiplicity]`: an edge from cell vertex `i` in the
/// fundamental domain to cell vertex `j` in the domain translated by `offset`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeSpec(pub usize, pub usize, pub Vec<i64>, pub u32);

/// `[family, level, sign]`: the half-space `sign·(level_family(x) − level) > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Face(pub usize, pub i64, pub i8);

/// Hyperplanes `⟨x, v_i⟩ = n·|v_i|²` for each normal `v_i` (fractional
/// coordinates) and all `n ∈ ℤ`, plus the open region `ℛ` they cut out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectionFamily {
    pub normals: Vec<Vec<Scalar>>,
    pub region: Vec<Face>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TilingSpec {
    #[serde(default)]
    pub name: String,
    pub dim: usize,
    /// Row-major `d×d` matrix `M`; its columns generate the lattice.
    pub basis: Vec<Vec<Scalar>>,
    pub cells: Vec<CellSpec>,
    pub edges: Vec<EdgeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflections: Option<ReflectionFamily>,
}

/// A vertex of the infinite tiling: a cell vertex in the domain at `lat`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    pub cell: usize,
    pub lat: Vec<i64>,
}

impl Vertex {
    pub fn new(cell: usize, lat: Vec<i64>) -> Self {
        Vertex { cell, lat }
    }

    pub fn origin(dim: usize) -> Self {
        Vertex { cell: 0, lat: vec![0; dim] }
    }

    pub fn shifted(&self, by: &[i64]) -> Self {
        Vertex {
            cell: self.cell,
            lat: self.lat.iter().zip(by).map(|(a, b)| a + b).collect(),
        }
    }
}

/// Aggregated outgoing edge of a cell vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub to: usize,
    pub offset: Vec<i64>,
    pub mult: u32,
}

/// A validated tiling with aggregated adjacency and geometry.
#[derive(Clone, Debug)]
pub struct Tiling {
    pub spec: TilingSpec,
    /// Outgoing edges per cell vertex.
    pub out: Vec<Vec<Edge>>,
    pub degree: Vec<u64>,
    geom: Geom,
}

impl TilingSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidSpec(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn basis_f64(&self) -> Vec<Vec<f64>> {
        self.basis.iter().map(|r| r.iter().map(|x| x.to_f64()).collect()).collect()
    }

    /// Hex digest of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serializes");
        hex(&Sha256::digest(bytes))[..16].to_string()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        let bad = |s: String| Err(Error::InvalidSpec(s));
        if d == 0 {
            return bad("dimension must be at least 1".into());
        }
        if self.basis.len() != d || self.basis.iter().any(|r| r.len() != d) {
            return bad(format!("basis must be {d}x{d}"));
        }
        if det_f64(&self.basis_f64()).abs() <= DET_EPS {
            return bad("basis is singular".into());
        }
        if self.cells.is_empty() {
            return bad("no cells".into());
        }
        for (k, c) in self.cells.iter().enumerate() {
            if c.id != k {
                return bad(format!("cell ids must be 0..n in order (found {} at {k})", c.id));
            }
            if c.position.len() != d {
                return bad(format!("cell {k} position has wrong dimension"));
            }
        }
        if self.cells[0].position.iter().any(|x| x.to_f64() != 0.0) {
            return bad("cell 0 must sit at the origin".into());
        }
        if !Geom::new(self).positions_in_unit_cell() {
            return bad("cell positions must lie in [0,1)^d".into());
        }
        let n = self.cells.len();
        let mut mult: HashMap<(usize, usize, Vec<i64>), u64> = HashMap::new();
        for EdgeSpec(i, j, o, m) in &self.edges {
            if *i >= n || *j >= n || o.len() != d {
                return bad(format!("malformed edge [{i}, {j}, {o:?}, {m}]"));
            }
            if i == j && o.iter().all(|&x| x == 0) {
                return bad(format!("self-loop at cell {i}"));
            }
            if *m == 0 {
                return bad(format!("edge [{i}, {j}, {o:?}] has multiplicity 0"));
            }
            *mult.entry((*i, *j, o.clone())).or_default() += *m as u64;
        }
        for ((i, j, o), m) in &mult {
            if *m > MAX_MULTIPLICITY as u64 {
                return bad(format!("edge [{i}, {j}, {o:?}] multiplicity {m} exceeds {MAX_MULTIPLICITY}"));
            }
            let rev = (*j, *i, o.iter().map(|x| -x).collect::<Vec<_>>());
            if mult.get(&rev) != Some(m) {
                return bad(format!("edge [{i}, {j}, {o:?}] has no reverse of equal multiplicity"));
            }
        }
        for c in 0..n {
            if !mult.keys().any(|(i, _, _)| *i == c) {
                return bad(format!("cell {c} has degree 0"));
            }
        }
        // quotient connectivity
        let mut seen = vec![false; n];
        let mut q = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(a) = q.pop_front() {
            for (i, j, _) in mult.keys() {
                if *i == a && !seen[*j] {
                    seen[*j] = true;
                    q.push_back(*j);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return bad("quotient graph is disconnected".into());
        }
        if let Some(f) = &self.reflections {
            validate_family_shape(f, d)?;
        }
        Ok(())
    }
}

fn validate_family_shape(f: &ReflectionFamily, d: usize) -> Result<()> {
    if f.normals.is_empty() || f.normals.iter().any(|n| n.len() != d) {
        return Err(Error::InvalidFamily("normals must be nonempty vectors of the ambient dimension".into()));
    }
    if f.region.is_empty() {
        return Err(Error::InvalidFamily("region has no faces".into()));
    }
    Ok(())
}

pub(crate) fn hex(b: &[u8]) -> String {
    b.iter().map(|x| format!("{x:02x}")).collect()
}

pub(crate) fn det_f64(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m = a.to_vec();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs()))
            .unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    det
}

impl Tiling {
    pub fn new(spec: TilingSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.cells.len();
        let mut agg: Vec<BTreeMap<(usize, Vec<i64>), u32>> = vec![BTreeMap::new(); n];
        for EdgeSpec(i, j, o, m) in &spec.edges {
            *agg[*i].entry((*j, o.clone())).or_default() += m;
        }
        let out: Vec<Vec<Edge>> = agg
            .into_iter()
            .map(|es| es.into_iter().map(|((to, offset), mult)| Edge { to, offset, mult }).collect())
            .collect();
        let degree = out.iter().map(|es| es.iter().map(|e| e.mult as u64).sum()).collect();
        let geom = Geom::new(&spec);
        Ok(Tiling { spec, out, degree, geom })
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let spec = builtin(name).ok_or_else(|| Error::InvalidSpec(format!("unknown built-in tiling `{name}`")))?;
        Tiling::new(spec)
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn cells(&self) -> usize {
        self.spec.cells.len()
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    /// True when predicates run in exact rational arithmetic.
    pub fn is_exact(&self) -> bool {
        self.geom.is_exact()
    }

    pub fn family(&self) -> Option<&ReflectionFamily> {
        self.spec.reflections.as_ref()
    }

    pub fn degree_of(&self, v: &Vertex) -> u64 {
        self.degree[v.cell]
    }

    pub fn neighbors(&self, v: &Vertex) -> impl Iterator<Item = (Vertex, u32)> + '_ {
        let lat = v.lat.clone();
        self.out[v.cell].iter().map(move |e| (Vertex::new(e.to, lat.iter().zip(&e.offset).map(|(a, b)| a + b).collect()), e.mult))
    }

    pub(crate) fn edge_list(&self) -> Vec<(usize, usize, Vec<i64>, u32)> {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(i, es)| es.iter().map(move |e| (i, e.to, e.offset.clone(), e.mult)))
            .collect()
    }

    fn edge_map(&self) -> HashMap<(usize, usize, Vec<i64>), u32> {
        self.edge_list().into_iter().map(|(a, b, o, m)| ((a, b, o), m)).collect()
    }

    pub(crate) fn family_geometry(&self, family: &ReflectionFamily) -> Result<FamGeom> {
        validate_family_shape(family, self.dim())?;
        self.geom.family(&family.normals, &family.region)
    }

    /// Real coordinates of a vertex.
    pub fn position(&self, v: &Vertex) -> Vec<f64> {
        let m = self.spec.basis_f64();
        let f: Vec<f64> = v
            .lat
            .iter()
            .zip(&self.spec.cells[v.cell].position)
            .map(|(l, p)| *l as f64 + p.to_f64())
            .collect();
        m.iter().map(|row| row.iter().zip(&f).map(|(a, b)| a * b).sum()).collect()
    }
}

/// Detailed condition-A check; `Ok` when no edge crosses a family hyperplane.
pub fn condition_a(tiling: &Tiling, family: &ReflectionFamily) -> Result<()> {
    tiling.family_geometry(family)?.condition_a(&tiling.edge_list())
}

pub fn check_condition_a(tiling: &Tiling, family: &ReflectionFamily) -> bool {
    condition_a(tiling, family).is_ok()
}

/// Detailed reflection check on a two-period patch at levels 0 and 1.
pub fn reflection_symmetry(tiling: &Tiling, family: &ReflectionFamily) -> Result<()> {
    tiling.family_geometry(family)?.reflection(&tiling.edge_map())
}

pub fn check_reflection(tiling: &Tiling, family: &ReflectionFamily) -> bool {
    reflection_symmetry(tiling, family).is_ok()
}

/// In `d ≥ 3` the family must be a dilated rotation of the coordinate planes
/// with `ℛ` the unit cube.
pub fn is_cubical_family(tiling: &Tiling, family: &ReflectionFamily) -> Result<bool> {
    Ok(tiling.family_geometry(family)?.is_cubical())
}

/// Where the finite graph came from.
#[derive(Clone, Debug, PartialEq)]
pub enum GraphGeometry {
    /// Vertex `c·m^d + lin(λ)` is cell `c` at `λ ∈ (ℤ/m)^d`, row-major, last axis fastest.
    Torus { cells: usize, dim: usize, m: usize },
    /// `vertices[k]` is the tiling vertex of graph vertex `k`; the sink is last.
    Open { m: usize, vertices: Vec<Vertex> },
    Abstract,
}

/// Finite connected multigraph with a sink.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteSandpileGraph {
    pub adjacency: Vec<Vec<(usize, u32)>>,
    pub degree: Vec<u64>,
    pub sink: usize,
    pub geometry: GraphGeometry,
}

impl FiniteSandpileGraph {
    /// Graph from an undirected edge list; parallel entries add up.
    pub fn from_edges(n: usize, sink: usize, edges: &[(usize, usize, u32)]) -> Result<Self> {
        let mut agg: Vec<BTreeMap<usize, u32>> = vec![BTreeMap::new(); n];
        for &(a, b, m) in edges {
            if a >= n || b >= n || a == b {
                return Err(Error::Invalid(format!("bad edge ({a}, {b})")));
            }
            *agg[a].entry(b).or_default() += m;
            *agg[b].entry(a).or_default() += m;
        }
        Self::from_adjacency(agg, sink, GraphGeometry::Abstract)
    }

    fn from_adjacency(agg: Vec<BTreeMap<usize, u32>>, sink: usize, geometry: GraphGeometry) -> Result<Self> {
        let n = agg.len();
        if sink >= n {
            return Err(Error::Invalid("sink out of range".into()));
        }
        let adjacency: Vec<Vec<(usize, u32)>> = agg.into_iter().map(|m| m.into_iter().collect()).collect();
        let degree = adjacency.iter().map(|a| a.iter().map(|(_, m)| *m as u64).sum()).collect();
        let g = FiniteSandpileGraph { adjacency, degree, sink, geometry };
        if !g.is_connected() {
            return Err(Error::Invalid("graph is disconnected".into()));
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    /// Number of non-sink vertices.
    pub fn n_nonsink(&self) -> usize {
        self.n() - 1
    }

    pub fn nonsink(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(move |&v| v != self.sink)
    }

    /// Position of a non-sink vertex among the non-sink vertices.
    pub fn reduced_index(&self, v: usize) -> usize {
        debug_assert!(v != self.sink);
        if v < self.sink {
            v
        } else {
            v - 1
        }
    }

    /// Inverse of [`reduced_index`](Self::reduced_index).
    pub fn vertex_of(&self, k: usize) -> usize {
        if k < self.sink {
            k
        } else {
            k + 1
        }
    }

    pub fn edge_count(&self) -> u64 {
        self.degree.iter().sum::<u64>() / 2
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut q = VecDeque::from([self.sink]);
        seen[self.sink] = true;
        let mut cnt = 1;
        while let Some(a) = q.pop_front() {
            for &(b, _) in &self.adjacency[a] {
                if !seen[b] {
                    seen[b] = true;
                    cnt += 1;
                    q.push_back(b);
                }
            }
        }
        cnt == n
    }

    /// Multiplicity of the edge `{a, b}`.
    pub fn multiplicity(&self, a: usize, b: usize) -> u32 {
        self.adjacency[a]
            .binary_search_by_key(&b, |(w, _)| *w)
            .map(|k| self.adjacency[a][k].1)
            .unwrap_or(0)
    }

    /// Isomorphism-invariant hash (Weisfeiler-Lehman refinement, sink marked).
    pub fn hash(&self) -> String {
        let n = self.n();
        let mut color: Vec<u64> = (0..n)
            .map(|v| mix(self.degree[v] ^ if v == self.sink { 0xa5a5_0000_0000 } else { 0 }))
            .collect();
        for _ in 0..6 {
            let next: Vec<u64> = (0..n)
                .map(|v| {
                    let mut ns: Vec<u64> = self.adjacency[v].iter().map(|&(w, m)| mix(color[w] ^ ((m as u64) << 40))).collect();
                    ns.sort_unstable();
                    ns.iter().fold(mix(color[v]), |h, x| mix(h.rotate_left(7) ^ x))
                })
                .collect();
            color = next;
        }
        color.sort_unstable();
        let mut h = Sha256::new();
        h.update((n as u64).to_le_bytes());
        for c in color {
            h.update(c.to_le_bytes());
        }
        hex(&h.finalize())[..16].to_string()
    }
}

fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Row-major index of `λ mod m`.
pub fn torus_index(lat: &[i64], m: usize) -> usize {
    lat.iter().fold(0usize, |acc, &x| acc * m + x.rem_euclid(m as i64) as usize)
}

pub fn torus_coords(mut idx: usize, dim: usize, m: usize) -> Vec<i64> {
    let mut out = vec![0i64; dim];
    for k in (0..dim).rev() {
        out[k] = (idx % m) as i64;
        idx /= m;
    }
    out
}

/// The torus `𝒯/mΛ` with the origin vertex as sink.
pub fn build_torus(tiling: &Tiling, m: usize) -> Result<FiniteSandpileGraph> {
    if m == 0 {
        return Err(Error::Invalid("torus size must be at least 1".into()));
    }
    let d = tiling.dim();
    let vol = m.checked_pow(d as u32).ok_or_else(|| Error::Invalid("torus too large".into()))?;
    let n = tiling.cells() * vol;
    let mut agg: Vec<BTreeMap<usize, u32>> = vec![BTreeMap::new(); n];
    for (c, es) in tiling.out.iter().enumerate() {
        for e in es {
            if e.to == c && e.offset.iter().all(|o| o.rem_euclid(m as i64) == 0) {
                return Err(Error::SelfLoop { m, edge: (c, e.to, e.offset.clone()) });
            }
        }
    }
    for k in 0..vol {
        let lat = torus_coords(k, d, m);
        for (c, es) in tiling.out.iter().enumerate() {
            let a = c * vol + k;
            for e in es {
                let tl: Vec<i64> = lat.iter().zip(&e.offset).map(|(x, o)| x + o).collect();
                let b = e.to * vol + torus_index(&tl, m);
                *agg[a].entry(b).or_default() += e.mult;
            }
        }
    }
    FiniteSandpileGraph::from_adjacency(agg, 0, GraphGeometry::Torus { cells: tiling.cells(), dim: d, m })
}

/// Vertices strictly inside `m·ℛ` plus one sink absorbing everything else.
pub fn build_open(tiling: &Tiling, family: &ReflectionFamily, m: usize) -> Result<FiniteSandpileGraph> {
    if m == 0 {
        return Err(Error::Invalid("region scale must be at least 1".into()));
    }
    let fg = tiling.family_geometry(family)?;
    fg.condition_a(&tiling.edge_list())?;
    fg.reflection(&tiling.edge_map())?;
    let bb = fg.bounding_box(m as i64)?;
    let d = tiling.dim();
    let mut vertices = Vec::new();
    let mut lat = bb.iter().map(|(lo, _)| *lo).collect::<Vec<i64>>();
    'outer: loop {
        for c in 0..tiling.cells() {
            let v = Vertex::new(c, lat.clone());
            if fg.vertex_inside(&v, m as i64) {
                vertices.push(v);
            }
        }
        for k in (0..d).rev() {
            if lat[k] < bb[k].1 {
                lat[k] += 1;
                continue 'outer;
            }
            lat[k] = bb[k].0;
        }
        break;
    }
    if vertices.is_empty() {
        return Err(Error::Invalid(format!("region m = {m} contains no vertices")));
    }
    vertices.sort();
    let index: HashMap<&Vertex, usize> = vertices.iter().enumerate().map(|(k, v)| (v, k)).collect();
    let sink = vertices.len();
    let mut agg: Vec<BTreeMap<usize, u32>> = vec![BTreeMap::new(); sink + 1];
    for (a, v) in vertices.iter().enumerate() {
        for (w, mult) in tiling.neighbors(v) {
            let b = index.get(&w).copied().unwrap_or(sink);
            *agg[a].entry(b).or_default() += mult;
            if b == sink {
                *agg[sink].entry(a).or_default() += mult;
            }
        }
    }
    FiniteSandpileGraph::from_adjacency(agg, sink, GraphGeometry::Open { m, vertices })
}

/// One transition of the quotient chain on cell classes.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub to: usize,
    /// Change of lattice coordinate.
    pub disp: Vec<i64>,
    pub mult: u32,
    pub prob: f64,
}

/// The random walk on `𝒯/Λ` with lattice displacements.
#[derive(Clone, Debug, PartialEq)]
pub struct QuotientGraph {
    pub dim: usize,
    pub degree: Vec<u64>,
    pub transitions: Vec<Vec<Transition>>,
}

pub fn quotient_graph(tiling: &Tiling) -> QuotientGraph {
    let transitions = tiling
        .out
        .iter()
        .enumerate()
        .map(|(c, es)| {
            es.iter()
                .map(|e| Transition {
                    to: e.to,
                    disp: e.offset.clone(),
                    mult: e.mult,
                    prob: e.mult as f64 / tiling.degree[c] as f64,
                })
                .collect()
        })
        .collect();
    QuotientGraph { dim: tiling.dim(), degree: tiling.degree.clone(), transitions }
}

/// Vertices within graph distance `r` of `center`, with distances, in BFS order.
pub fn graph_ball(tiling: &Tiling, center: &Vertex, r: usize) -> Vec<(Vertex, usize)> {
    let mut dist: HashMap<Vertex, usize> = HashMap::new();
    dist.insert(center.clone(), 0);
    let mut order = vec![(center.clone(), 0)];
    let mut head = 0;
    while head < order.len() {
        let (v, dv) = order[head].clone();
        head += 1;
        if dv == r {
            continue;
        }
        for (w, _) in tiling.neighbors(&v) {
            if !dist.contains_key(&w) {
                dist.insert(w.clone(), dv + 1);
                order.push((w, dv + 1));
            }
        }
    }
    order
}

/// Graph distance between two vertices, by BFS (small distances only).
pub fn graph_distance(tiling: &Tiling, a: &Vertex, b: &Vertex, cap: usize) -> Option<usize> {
    let mut seen: HashSet<Vertex> = HashSet::from([a.clone()]);
    let mut frontier = vec![a.clone()];
    for d in 0..=cap {
        if frontier.iter().any(|v| v == b) {
            return Some(d);
        }
        let mut next = Vec::new();
        for v in &frontier {
            for (w, _) in tiling.neighbors(v) {
                if seen.insert(w.clone()) {
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(name: &str) -> Tiling {
        Tiling::builtin(name).unwrap()
    }

    #[test]
    fn builtins_validate_and_are_exact() {
        for name in builtin_names() {
            let tl = t(name);
            assert!(tl.is_exact(), "{name}");
        }
    }

    #[test]
    fn families_satisfy_hypotheses() {
        for name in ["square", "triangular", "hex", "tetrakis", "z3", "z4", "d4"] {
            let tl = t(name);
            let fam = tl.family().unwrap().clone();
            condition_a(&tl, &fam).unwrap_or_else(|e| panic!("{name}: {e}"));
            reflection_symmetry(&tl, &fam).unwrap_or_else(|e| panic!("{name}: {e}"));
            if tl.dim() >= 3 {
                assert!(is_cubical_family(&tl, &fam).unwrap(), "{name}");
            }
        }
    }

    #[test]
    fn long_edge_violates_condition_a() {
        let mut spec = builtin("square").unwrap();
        spec.edges.push(EdgeSpec(0, 0, vec![2, 1], 1));
        spec.edges.push(EdgeSpec(0, 0, vec![-2, -1], 1));
        let tl = Tiling::new(spec).unwrap();
        let fam = tl.family().unwrap().clone();
        assert!(matches!(condition_a(&tl, &fam), Err(Error::ConditionAViolated { .. })));
        assert!(build_open(&tl, &fam, 3).is_err());
    }

    #[test]
    fn torus_sizes() {
        let g = build_torus(&t("square"), 2).unwrap();
        assert_eq!(g.n(), 4);
        assert!(g.degree.iter().all(|&d| d == 4));
        assert_eq!(g.sink, 0);
        let g = build_torus(&t("hex"), 3).unwrap();
        assert_eq!(g.n(), 18);
        assert!(g.degree.iter().all(|&d| d == 3));
        assert!(matches!(build_torus(&t("square"), 1), Err(Error::SelfLoop { .. })));
        for name in builtin_names() {
            let tl = t(name);
            let m = if tl.dim() >= 4 { 3 } else { 4 };
            let g = build_torus(&tl, m).unwrap();
            assert_eq!(g.n(), tl.cells() * m.pow(tl.dim() as u32));
            let total: u64 = g.degree.iter().sum();
            assert_eq!(total, 2 * g.edge_count());
        }
    }

    #[test]
    fn open_square_grid() {
        let tl = t("square");
        let g = build_open(&tl, tl.family().unwrap(), 3).unwrap();
        assert_eq!(g.n(), 5);
        let corner_sink_edges: Vec<u32> = (0..4).map(|v| g.multiplicity(v, g.sink)).collect();
        assert_eq!(corner_sink_edges, vec![2, 2, 2, 2]);
        for v in g.nonsink() {
            assert_eq!(g.degree[v], 4);
        }
    }

    #[test]
    fn open_graphs_keep_interior_degrees() {
        for (name, m) in [("triangular", 6), ("hex", 4), ("tetrakis", 4), ("z3", 4), ("d4", 3)] {
            let tl = t(name);
            let g = build_open(&tl, tl.family().unwrap(), m).unwrap();
            let GraphGeometry::Open { vertices, .. } = &g.geometry else { panic!() };
            assert!(!vertices.is_empty(), "{name}");
            for (k, v) in vertices.iter().enumerate() {
                assert_eq!(g.degree[k], tl.degree_of(v), "{name}");
            }
        }
    }

    #[test]
    fn triangular_region_counts() {
        // interior of the triangle scaled by m holds (m−1)(m−2)/2 lattice points
        let tl = t("triangular");
        for m in 3..8 {
            let g = build_open(&tl, tl.family().unwrap(), m).unwrap();
            assert_eq!(g.n_nonsink(), (m - 1) * (m - 2) / 2);
        }
    }

    #[test]
    fn quotient_shapes() {
        let q = quotient_graph(&t("square"));
        assert_eq!(q.transitions.len(), 1);
        assert_eq!(q.transitions[0].len(), 4);
        let q = quotient_graph(&t("hex"));
        assert_eq!(q.transitions.iter().map(|x| x.len()).collect::<Vec<_>>(), vec![3, 3]);
        let q = quotient_graph(&t("fcc"));
        assert_eq!(q.transitions[0].len(), 12);
        for tr in &quotient_graph(&t("tetrakis")).transitions {
            let p: f64 = tr.iter().map(|x| x.prob).sum();
            assert!((p - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn relabelled_spec_hashes_equal() {
        let spec = builtin("hex").unwrap();
        let mut swapped = spec.clone();
        swapped.edges = spec
            .edges
            .iter()
            .map(|EdgeSpec(i, j, o, m)| EdgeSpec(1 - i, 1 - j, o.clone(), *m))
            .collect();
        // only the graph matters here, so positions are left as they are
        let a = build_torus(&Tiling::new(spec).unwrap(), 4).unwrap();
        let mut b_spec = swapped;
        b_spec.cells[1].position = b_spec.cells[1].position.clone();
        let b = build_torus(&Tiling::new(b_spec).unwrap(), 4).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), build_torus(&t("square"), 4).unwrap().hash());
    }

    #[test]
    fn json_round_trip() {
        for name in builtin_names() {
            let spec = builtin(name).unwrap();
            let back = TilingSpec::from_json(&spec.to_json()).unwrap();
            assert_eq!(spec, back);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = builtin("square").unwrap();
        s.edges.pop();
        assert!(s.validate().is_err());
        let mut s = builtin("square").unwrap();
        s.basis[1][1] = Scalar::int(0);
        assert!(s.validate().is_err());
        let mut s = builtin("square").unwrap();
        s.edges[0].3 = MAX_MULTIPLICITY + 1;
        s.edges[1].3 = MAX_MULTIPLICITY + 1;
        assert!(s.validate().is_err());
    }

    #[test]
    fn ball_radius_one() {
        let b = graph_ball(&t("triangular"), &Vertex::origin(2), 1);
        assert_eq!(b.len(), 7);
        let b = graph_ball(&t("z3"), &Vertex::origin(3), 2);
        assert_eq!(b.len(), 25);
    }
}
