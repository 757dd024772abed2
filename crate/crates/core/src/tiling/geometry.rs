//! Geometric predicates in fractional (lattice) coordinates.
//!
//! A point is stored as `f ∈ ℝ^d` with real position `M f`. With Gram matrix
//! `G = MᵀM`, a family normal `u` (fractional) defines hyperplanes
//! `⟨x, Mu⟩ = n·|Mu|²`, i.e. `level(f) = fᵀ G u / uᵀ G u ∈ ℤ`.

use std::collections::HashMap;

use num_integer::Integer;

use super::{Face, TilingSpec, Vertex};
use crate::error::{Error, Result};
use crate::exact::{Approx, Field, Scalar, Surd, Q};

#[derive(Clone, Debug)]
pub(crate) struct GeomF<F: Field> {
    pub dim: usize,
    pub pos: Vec<Vec<F>>,
    pub gram: Vec<Vec<F>>,
}

#[derive(Clone, Debug)]
pub(crate) struct FamF<F: Field> {
    pub u: Vec<Vec<F>>,
    /// `w_i = G u_i / (u_iᵀ G u_i)` so that `level_i(f) = f · w_i`.
    pub w: Vec<Vec<F>>,
    pub norm2: Vec<F>,
    pub faces: Vec<Face>,
}

#[derive(Clone, Debug)]
pub(crate) enum Geom {
    Exact(GeomF<Q>),
    Float(GeomF<Approx>),
}

#[derive(Clone, Debug)]
pub(crate) enum FamGeom {
    Exact(GeomF<Q>, FamF<Q>),
    Float(GeomF<Approx>, FamF<Approx>),
}

fn exact_gram(basis: &[Vec<Scalar>]) -> Option<Vec<Vec<Q>>> {
    let d = basis.len();
    let mut surds = vec![vec![Surd::rational(Q::from_integer(0)); d]; d];
    for (i, row) in basis.iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            match s {
                Scalar::Exact(v) => surds[i][j] = *v,
                Scalar::Float(_) => return None,
            }
        }
    }
    let mut g = vec![vec![Q::from_integer(0); d]; d];
    for i in 0..d {
        for j in 0..d {
            let mut by_rad: HashMap<u64, Q> = HashMap::new();
            for row in &surds {
                let p = row[i].mul(row[j]).ok()?;
                *by_rad.entry(p.rad).or_insert_with(|| Q::from_integer(0)) += p.coef;
            }
            for (rad, c) in by_rad {
                if rad == 1 {
                    g[i][j] = c;
                } else if c != Q::from_integer(0) {
                    return None;
                }
            }
        }
    }
    Some(g)
}

fn float_gram(basis: &[Vec<Scalar>]) -> Vec<Vec<f64>> {
    let d = basis.len();
    let mut g = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            g[i][j] = basis.iter().map(|r| r[i].to_f64() * r[j].to_f64()).sum();
        }
    }
    g
}

impl Geom {
    pub fn new(spec: &TilingSpec) -> Geom {
        let rational_pos: Option<Vec<Vec<Q>>> = spec
            .cells
            .iter()
            .map(|c| c.position.iter().map(|s| s.as_rational()).collect::<Option<Vec<_>>>())
            .collect();
        match (exact_gram(&spec.basis), rational_pos) {
            (Some(gram), Some(pos)) => Geom::Exact(GeomF {
                dim: spec.dim,
                pos,
                gram,
            }),
            _ => Geom::Float(GeomF {
                dim: spec.dim,
                pos: spec
                    .cells
                    .iter()
                    .map(|c| c.position.iter().map(|s| Approx(s.to_f64())).collect())
                    .collect(),
                gram: float_gram(&spec.basis)
                    .into_iter()
                    .map(|r| r.into_iter().map(Approx).collect())
                    .collect(),
            }),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Geom::Exact(_))
    }

    pub fn family(&self, normals: &[Vec<Scalar>], faces: &[Face]) -> Result<FamGeom> {
        match self {
            Geom::Exact(g) => {
                let u: Option<Vec<Vec<Q>>> =
                    normals.iter().map(|n| n.iter().map(|s| s.as_rational()).collect()).collect();
                match u {
                    Some(u) => Ok(FamGeom::Exact(g.clone(), build_family(g, u, faces)?)),
                    None => {
                        let gf = to_float(g);
                        let u = normals.iter().map(|n| n.iter().map(|s| Approx(s.to_f64())).collect()).collect();
                        Ok(FamGeom::Float(gf.clone(), build_family(&gf, u, faces)?))
                    }
                }
            }
            Geom::Float(g) => {
                let u = normals.iter().map(|n| n.iter().map(|s| Approx(s.to_f64())).collect()).collect();
                Ok(FamGeom::Float(g.clone(), build_family(g, u, faces)?))
            }
        }
    }

    /// Real positions are irrelevant here; this only checks `pos ∈ [0,1)^d`.
    pub fn positions_in_unit_cell(&self) -> bool {
        fn ok<F: Field>(g: &GeomF<F>) -> bool {
            g.pos.iter().all(|p| p.iter().all(|x| x.sign() >= 0 && x.floor() == 0))
        }
        match self {
            Geom::Exact(g) => ok(g),
            Geom::Float(g) => ok(g),
        }
    }
}

fn to_float(g: &GeomF<Q>) -> GeomF<Approx> {
    GeomF {
        dim: g.dim,
        pos: g.pos.iter().map(|p| p.iter().map(|x| Approx(x.to_f64())).collect()).collect(),
        gram: g.gram.iter().map(|r| r.iter().map(|x| Approx(x.to_f64())).collect()).collect(),
    }
}

fn matvec<F: Field>(a: &[Vec<F>], x: &[F]) -> Vec<F> {
    a.iter()
        .map(|row| row.iter().zip(x).fold(F::zero(), |acc, (r, v)| acc.add(&r.mul(v))))
        .collect()
}

fn dot<F: Field>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (x, y)| acc.add(&x.mul(y)))
}

fn build_family<F: Field>(g: &GeomF<F>, u: Vec<Vec<F>>, faces: &[Face]) -> Result<FamF<F>> {
    let mut w = Vec::new();
    let mut norm2 = Vec::new();
    for ui in &u {
        if ui.len() != g.dim {
            return Err(Error::InvalidFamily("normal has wrong dimension".into()));
        }
        let gu = matvec(&g.gram, ui);
        let n2 = dot(ui, &gu);
        if n2.sign() <= 0 {
            return Err(Error::InvalidFamily("zero normal".into()));
        }
        w.push(gu.iter().map(|x| x.div(&n2)).collect());
        norm2.push(n2);
    }
    for f in faces {
        if f.0 >= u.len() || (f.2 != 1 && f.2 != -1) {
            return Err(Error::InvalidFamily(format!("bad face {f:?}")));
        }
    }
    Ok(FamF { u, w, norm2, faces: faces.to_vec() })
}

impl<F: Field> GeomF<F> {
    pub fn frac(&self, v: &Vertex) -> Vec<F> {
        v.lat
            .iter()
            .zip(&self.pos[v.cell])
            .map(|(l, p)| F::from_i64(*l).add(p))
            .collect()
    }

    /// Vertex at fractional point `f`, if any.
    pub fn locate(&self, f: &[F]) -> Option<Vertex> {
        for (c, p) in self.pos.iter().enumerate() {
            let diff: Vec<F> = f.iter().zip(p).map(|(a, b)| a.sub(b)).collect();
            if diff.iter().all(|x| x.is_integer()) {
                let lat = diff
                    .iter()
                    .map(|x| {
                        let fl = x.floor();
                        // tolerant floor may land one below an integer reached from above
                        if x.sub(&F::from_i64(fl + 1)).is_zero() {
                            fl + 1
                        } else {
                            fl
                        }
                    })
                    .collect();
                return Some(Vertex { cell: c, lat });
            }
        }
        None
    }
}

impl<F: Field> FamF<F> {
    pub fn level(&self, i: usize, f: &[F]) -> F {
        dot(f, &self.w[i])
    }

    pub fn reflect(&self, i: usize, n: i64, f: &[F]) -> Vec<F> {
        let t = self.level(i, f).sub(&F::from_i64(n));
        let two_t = t.add(&t);
        f.iter().zip(&self.u[i]).map(|(x, u)| x.sub(&two_t.mul(u))).collect()
    }

    /// Linear part of the reflection in the level-0 hyperplane: `I − 2 u wᵀ`.
    pub fn reflection_matrix(&self, i: usize) -> Vec<Vec<F>> {
        let d = self.u[i].len();
        (0..d)
            .map(|r| {
                (0..d)
                    .map(|c| {
                        let id = if r == c { F::from_i64(1) } else { F::zero() };
                        let t = self.u[i][r].mul(&self.w[i][c]);
                        id.sub(&t.add(&t))
                    })
                    .collect()
            })
            .collect()
    }

    /// Strictly inside `m·ℛ`.
    pub fn inside(&self, f: &[F], m: i64) -> bool {
        self.faces.iter().all(|Face(i, lv, s)| {
            let v = self.level(*i, f).sub(&F::from_i64(m * lv));
            v.sign() * (*s as i32) > 0
        })
    }

    pub fn inside_closed(&self, f: &[F], m: i64) -> bool {
        self.faces.iter().all(|Face(i, lv, s)| {
            let v = self.level(*i, f).sub(&F::from_i64(m * lv));
            v.sign() * (*s as i32) >= 0
        })
    }
}

/// Period of the level pattern: levels of `λ + p` repeat when `λ` shifts by `D`.
fn level_period(w: &[Vec<Q>]) -> i64 {
    let mut d = 1i128;
    for wi in w {
        for x in wi {
            d = d.lcm(x.denom());
        }
    }
    d as i64
}

fn patch(dim: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        let mut next = Vec::new();
        for p in &out {
            for x in lo..=hi {
                let mut q = p.clone();
                q.push(x);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

fn condition_a_f<F: Field>(
    g: &GeomF<F>,
    fam: &FamF<F>,
    edges: &[(usize, usize, Vec<i64>, u32)],
    pts: &[Vec<i64>],
) -> Result<()> {
    for (i, _) in fam.w.iter().enumerate() {
        for lam in pts {
            for (a, b, off, _) in edges {
                let fa = g.frac(&Vertex { cell: *a, lat: lam.clone() });
                let lb: Vec<i64> = lam.iter().zip(off).map(|(x, o)| x + o).collect();
                let fb = g.frac(&Vertex { cell: *b, lat: lb });
                let la = fam.level(i, &fa);
                let lbv = fam.level(i, &fb);
                let (lo, hi) = if la.cmp_f(&lbv).is_le() { (la, lbv) } else { (lbv, la) };
                if lo.is_zero() && hi.is_zero() {
                    continue;
                }
                // smallest integer strictly above lo
                let next = if lo.is_integer() { lo.floor() + 1 } else { lo.floor() + 1 };
                if F::from_i64(next).cmp_f(&hi).is_lt() {
                    return Err(Error::ConditionAViolated {
                        family: i,
                        edge: (*a, *b, off.clone()),
                        at: lam.clone(),
                    });
                }
            }
        }
    }
    Ok(())
}

fn reflection_f<F: Field>(
    g: &GeomF<F>,
    fam: &FamF<F>,
    edges: &HashMap<(usize, usize, Vec<i64>), u32>,
) -> Result<()> {
    let pts = patch(g.dim, -1, 1);
    for i in 0..fam.u.len() {
        for n in [0i64, 1] {
            for lam in &pts {
                for c in 0..g.pos.len() {
                    let v = Vertex { cell: c, lat: lam.clone() };
                    let img = fam.reflect(i, n, &g.frac(&v));
                    let Some(vi) = g.locate(&img) else {
                        return Err(Error::NotReflectionSymmetric {
                            family: i,
                            level: n,
                            detail: format!("image of vertex {v:?} is not a vertex"),
                        });
                    };
                    for ((a, b, off), mult) in edges.iter().filter(|((a, _, _), _)| *a == c) {
                        let w = Vertex {
                            cell: *b,
                            lat: lam.iter().zip(off).map(|(x, o)| x + o).collect(),
                        };
                        let wimg = fam.reflect(i, n, &g.frac(&w));
                        let Some(wi) = g.locate(&wimg) else {
                            return Err(Error::NotReflectionSymmetric {
                                family: i,
                                level: n,
                                detail: format!("image of vertex {w:?} is not a vertex"),
                            });
                        };
                        let o2: Vec<i64> = wi.lat.iter().zip(&vi.lat).map(|(x, y)| x - y).collect();
                        let key = (vi.cell, wi.cell, o2);
                        if edges.get(&key) != Some(mult) {
                            return Err(Error::NotReflectionSymmetric {
                                family: i,
                                level: n,
                                detail: format!("edge ({a},{b},{off:?}) maps to non-edge {key:?}"),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Corners of the closed region `ℛ` (fractional coordinates, as floats) and
/// an unboundedness check.
fn corners_f<F: Field>(fam: &FamF<F>, dim: usize) -> Result<Vec<Vec<F>>> {
    let faces = &fam.faces;
    let rows: Vec<Vec<F>> = faces
        .iter()
        .map(|Face(i, _, s)| fam.w[*i].iter().map(|x| x.mul(&F::from_i64(*s as i64))).collect())
        .collect();
    // recession cone {y : rows·y ≥ 0} must be trivial
    for subset in subsets(faces.len(), dim.saturating_sub(1)) {
        let sub: Vec<Vec<F>> = subset.iter().map(|&k| rows[k].clone()).collect();
        if let Some(y) = null_vector(&sub, dim) {
            for sgn in [1i64, -1] {
                let ys: Vec<F> = y.iter().map(|x| x.mul(&F::from_i64(sgn))).collect();
                if rows.iter().all(|r| dot(r, &ys).sign() >= 0) {
                    return Err(Error::InvalidFamily("region is unbounded".into()));
                }
            }
        }
    }
    let mut out: Vec<Vec<F>> = Vec::new();
    for subset in subsets(faces.len(), dim) {
        let a: Vec<Vec<F>> = subset.iter().map(|&k| fam.w[faces[k].0].clone()).collect();
        let b: Vec<F> = subset.iter().map(|&k| F::from_i64(faces[k].1)).collect();
        if let Some(x) = crate::exact::solve_field(&a, &b) {
            if fam.inside_closed(&x, 1) && !out.iter().any(|y| y.iter().zip(&x).all(|(p, q)| p.sub(q).is_zero())) {
                out.push(x);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidFamily("region is empty".into()));
    }
    Ok(out)
}

pub(crate) fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// A nonzero vector in the kernel of `a` (rows) when the kernel is 1-dimensional.
fn null_vector<F: Field>(a: &[Vec<F>], dim: usize) -> Option<Vec<F>> {
    // try each coordinate direction as the free variable
    for free in 0..dim {
        let cols: Vec<usize> = (0..dim).filter(|&c| c != free).collect();
        let sq: Vec<Vec<F>> = a.iter().map(|r| cols.iter().map(|&c| r[c].clone()).collect()).collect();
        let rhs: Vec<F> = a.iter().map(|r| F::zero().sub(&r[free])).collect();
        if let Some(x) = crate::exact::solve_field(&sq, &rhs) {
            let mut y = vec![F::zero(); dim];
            y[free] = F::from_i64(1);
            for (k, &c) in cols.iter().enumerate() {
                y[c] = x[k].clone();
            }
            return Some(y);
        }
    }
    None
}

impl FamGeom {
    pub fn condition_a(&self, edges: &[(usize, usize, Vec<i64>, u32)]) -> Result<()> {
        match self {
            FamGeom::Exact(g, f) => {
                let d = level_period(&f.w).max(1);
                let pts = if (d as f64).powi(g.dim as i32) <= 2e5 {
                    patch(g.dim, 0, d - 1)
                } else {
                    patch(g.dim, -2, 2)
                };
                condition_a_f(g, f, edges, &pts)
            }
            FamGeom::Float(g, f) => condition_a_f(g, f, edges, &patch(g.dim, -2, 2)),
        }
    }

    pub fn reflection(&self, edges: &HashMap<(usize, usize, Vec<i64>), u32>) -> Result<()> {
        match self {
            FamGeom::Exact(g, f) => reflection_f(g, f, edges),
            FamGeom::Float(g, f) => reflection_f(g, f, edges),
        }
    }

    pub fn num_families(&self) -> usize {
        match self {
            FamGeom::Exact(_, f) => f.u.len(),
            FamGeom::Float(_, f) => f.u.len(),
        }
    }

    /// Normals pairwise orthogonal, of equal length, and `ℛ = {0 < level_i < 1}`.
    pub fn is_cubical(&self) -> bool {
        fn chk<F: Field>(g: &GeomF<F>, f: &FamF<F>) -> bool {
            let k = f.u.len();
            if k != g.dim {
                return false;
            }
            for i in 0..k {
                if f.norm2[i].sub(&f.norm2[0]).sign() != 0 {
                    return false;
                }
                for j in 0..i {
                    let gu = matvec(&g.gram, &f.u[j]);
                    if dot(&f.u[i], &gu).sign() != 0 {
                        return false;
                    }
                }
            }
            let mut want: Vec<Face> = (0..k).flat_map(|i| [Face(i, 0, 1), Face(i, 1, -1)]).collect();
            let mut have = f.faces.clone();
            want.sort();
            have.sort();
            want == have
        }
        match self {
            FamGeom::Exact(g, f) => chk(g, f),
            FamGeom::Float(g, f) => chk(g, f),
        }
    }

    /// Lattice-coordinate bounding box of `m·ℛ` (inclusive), per axis.
    pub fn bounding_box(&self, m: i64) -> Result<Vec<(i64, i64)>> {
        fn bb<F: Field>(g: &GeomF<F>, f: &FamF<F>, m: i64) -> Result<Vec<(i64, i64)>> {
            let cs = corners_f(f, g.dim)?;
            Ok((0..g.dim)
                .map(|k| {
                    let lo = cs.iter().map(|c| c[k].mul(&F::from_i64(m)).floor()).min().unwrap();
                    let hi = cs.iter().map(|c| c[k].mul(&F::from_i64(m)).floor()).max().unwrap();
                    (lo - 1, hi + 1)
                })
                .collect())
        }
        match self {
            FamGeom::Exact(g, f) => bb(g, f, m),
            FamGeom::Float(g, f) => bb(g, f, m),
        }
    }

    pub fn vertex_inside(&self, v: &Vertex, m: i64) -> bool {
        match self {
            FamGeom::Exact(g, f) => f.inside(&g.frac(v), m),
            FamGeom::Float(g, f) => f.inside(&g.frac(v), m),
        }
    }

    /// Sign of `level_i(v) − n`, exact when the geometry is.
    pub fn side(&self, i: usize, n: i64, v: &Vertex) -> i32 {
        match self {
            FamGeom::Exact(g, f) => f.level(i, &g.frac(v)).sub(&Q::from_i64(n)).sign(),
            FamGeom::Float(g, f) => f.level(i, &g.frac(v)).sub(&Approx::from_i64(n)).sign(),
        }
    }

    /// Reflection in the family-`i` hyperplane at level `n` as `f ↦ A f + b`.
    pub fn reflection_affine(&self, i: usize, n: i64) -> (Vec<Vec<f64>>, Vec<f64>) {
        fn go<F: Field>(f: &FamF<F>, i: usize, n: i64) -> (Vec<Vec<f64>>, Vec<f64>) {
            let a = f.reflection_matrix(i).iter().map(|r| r.iter().map(|x| x.to_f64()).collect()).collect();
            let b = f.u[i].iter().map(|x| 2.0 * n as f64 * x.to_f64()).collect();
            (a, b)
        }
        match self {
            FamGeom::Exact(_, f) => go(f, i, n),
            FamGeom::Float(_, f) => go(f, i, n),
        }
    }

    /// Pairs of faces whose hyperplanes meet in a corner of the closed region (2d).
    pub fn corner_face_pairs(&self) -> Result<Vec<(Face, Face, Vec<f64>)>> {
        fn go<F: Field>(f: &FamF<F>) -> Result<Vec<(Face, Face, Vec<f64>)>> {
            let mut out = Vec::new();
            for (x, fa) in f.faces.iter().enumerate() {
                for fb in &f.faces[x + 1..] {
                    if fa.0 == fb.0 {
                        continue;
                    }
                    let a = vec![f.w[fa.0].clone(), f.w[fb.0].clone()];
                    let b = vec![F::from_i64(fa.1), F::from_i64(fb.1)];
                    if let Some(p) = crate::exact::solve_field(&a, &b) {
                        if f.inside_closed(&p, 1) {
                            out.push((*fa, *fb, p.iter().map(|v| v.to_f64()).collect()));
                        }
                    }
                }
            }
            Ok(out)
        }
        match self {
            FamGeom::Exact(_, f) => go(f),
            FamGeom::Float(_, f) => go(f),
        }
    }

    /// A point on the family-`i` hyperplane at level `n`.
    pub fn point_on(&self, i: usize, n: i64) -> Vec<f64> {
        match self {
            FamGeom::Exact(_, f) => f.u[i].iter().map(|x| n as f64 * x.to_f64()).collect(),
            FamGeom::Float(_, f) => f.u[i].iter().map(|x| n as f64 * x.to_f64()).collect(),
        }
    }

    pub fn faces(&self) -> &[Face] {
        match self {
            FamGeom::Exact(_, f) => &f.faces,
            FamGeom::Float(_, f) => &f.faces,
        }
    }
}
