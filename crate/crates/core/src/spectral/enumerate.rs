//! Bounded enumeration of integer functions on a ball.
//!
//! Translation mode lists one representative per translation class and sign:
//! the smallest support vertex (in `key_cmp` order) lies in the fundamental
//! domain, carries a positive coefficient, and the whole support lies in the
//! graph ball of radius `R₀·step` about the origin (see [`lattice_step`]).
//! Symmetric mode lists seeds on the open chamber of a reflection group and
//! antisymmetrizes them.

use std::collections::BTreeSet;

use super::{key_cmp, ClassOracle, Prevector, ReflectionGroup};
use crate::error::Result;
use crate::greens::FunctionClass;
use crate::tiling::{graph_ball, Tiling, Vertex};

/// Candidate support points and which of them may lead a support.
#[derive(Clone, Debug)]
pub(crate) struct Pool {
    pub verts: Vec<Vertex>,
    pub leads: Vec<bool>,
}

/// Largest graph distance from the origin to a basis translate of it; the
/// unit in which `R₀` is measured.
pub fn lattice_step(tiling: &Tiling) -> usize {
    let d = tiling.dim();
    let o = Vertex::origin(d);
    (0..d)
        .map(|k| {
            let mut e = vec![0; d];
            e[k] = 1;
            crate::tiling::graph_distance(tiling, &o, &Vertex::new(0, e), 64).unwrap_or(1)
        })
        .max()
        .unwrap_or(1)
}

impl Pool {
    pub fn translation(tiling: &Tiling, r0: usize) -> Pool {
        let r = r0 * lattice_step(tiling);
        let mut verts: Vec<Vertex> = graph_ball(tiling, &Vertex::origin(tiling.dim()), r).into_iter().map(|p| p.0).collect();
        verts.sort_by(key_cmp);
        let leads = verts.iter().map(|v| v.lat.iter().all(|&x| x == 0)).collect();
        Pool { verts, leads }
    }

    /// Chamber vertices within `r0` of the chamber vertex nearest `anchor`.
    pub fn chamber(tiling: &Tiling, group: &ReflectionGroup, anchor: &Vertex, r0: usize) -> Pool {
        let r0 = r0 * lattice_step(tiling);
        let mut center = None;
        for r in 0..=4 * (r0 + tiling.dim()) {
            let ball = graph_ball(tiling, anchor, r);
            let mut inside: Vec<Vertex> = ball.into_iter().map(|p| p.0).filter(|v| group.in_chamber(v)).collect();
            if !inside.is_empty() {
                inside.sort_by(key_cmp);
                center = Some(inside.swap_remove(0));
                break;
            }
        }
        let Some(center) = center else {
            return Pool { verts: vec![], leads: vec![] };
        };
        let mut verts: Vec<Vertex> =
            graph_ball(tiling, &center, r0).into_iter().map(|p| p.0).filter(|v| group.in_chamber(v)).collect();
        verts.sort_by(key_cmp);
        let leads = vec![true; verts.len()];
        Pool { verts, leads }
    }
}

/// Visits every coefficient vector on `pool` with ℓ¹ ≤ `b` whose first
/// nonzero entry is positive and sits at a lead point. With `zero_sum`, only
/// vectors summing to zero are visited.
pub(crate) fn walk(pool: &Pool, b: i64, zero_sum: bool, f: &mut dyn FnMut(&[(usize, i64)])) {
    fn rec(
        n: usize,
        start: usize,
        rem: i64,
        sum: i64,
        zero_sum: bool,
        cur: &mut Vec<(usize, i64)>,
        f: &mut dyn FnMut(&[(usize, i64)]),
    ) {
        if !zero_sum || sum == 0 {
            f(cur);
        }
        for i in start..n {
            for mag in 1..=rem {
                for c in [mag, -mag] {
                    if zero_sum && (sum + c).abs() > rem - mag {
                        continue;
                    }
                    cur.push((i, c));
                    rec(n, i + 1, rem - mag, sum + c, zero_sum, cur, f);
                    cur.pop();
                }
            }
        }
    }
    let n = pool.verts.len();
    let mut cur = Vec::new();
    for a in 0..n {
        if !pool.leads[a] {
            continue;
        }
        for c in 1..=b {
            cur.push((a, c));
            rec(n, a + 1, b - c, c, zero_sum, &mut cur, f);
            cur.pop();
        }
    }
}

#[derive(Clone, Debug)]
pub struct EnumOptions<'a> {
    pub b: i64,
    pub r0: usize,
    pub class: FunctionClass,
    /// Group and an anchor point near its fixed set; seeds live within `r0`
    /// of the chamber vertex nearest the anchor.
    pub symmetry: Option<(&'a ReflectionGroup, Vertex)>,
}

/// All integer `ν` within the bounds, deduplicated by canonical form.
pub fn enumerate_prevectors(tiling: &Tiling, opts: &EnumOptions) -> Result<Vec<Prevector>> {
    let oracle = ClassOracle::new(tiling)?;
    let pool = match &opts.symmetry {
        None => Pool::translation(tiling, opts.r0),
        Some((g, c)) => Pool::chamber(tiling, g, c, opts.r0),
    };
    let zero_sum = opts.symmetry.is_none() && opts.class >= FunctionClass::C1;
    let mut raw: Vec<Vec<(Vertex, i64)>> = Vec::new();
    walk(&pool, opts.b, zero_sum, &mut |cur| {
        raw.push(cur.iter().map(|&(i, c)| (pool.verts[i].clone(), c)).collect());
    });
    let mut seen: BTreeSet<Vec<(Vertex, i64)>> = BTreeSet::new();
    let mut out = Vec::new();
    for seed in raw {
        let mut p = match &opts.symmetry {
            None => Prevector::with_oracle(&oracle, seed),
            Some((g, _)) => {
                let nu = g.antisymmetrize(&seed)?;
                let mut p = Prevector::with_oracle(&oracle, nu);
                p.symmetry = Some(g.hyperplanes.clone());
                p
            }
        };
        if p.coeffs.is_empty() || p.class < opts.class {
            continue;
        }
        p = p.canonical(tiling);
        if p.coeffs.is_empty() {
            continue;
        }
        if seen.insert(p.coeffs.clone()) {
            out.push(p);
        }
    }
    Ok(out)
}
