//! Searches for `γ`, `γ_j` and the spectral factors `Γ_j`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::enumerate::{walk, Pool};
use super::{Evaluator, Hyperplane, Prevector, ReflectionGroup, SavingsReport};
use crate::error::{Error, Result};
use crate::fft::{fftn, ifftn};
use crate::greens::{required_class, FunctionClass};
use crate::tiling::{torus_index, ReflectionFamily, Tiling, Vertex};

// candidates at or below this are in 𝓘
const ZERO_SAV: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// ℓ¹ bound on candidates (on seeds for anti-symmetric searches).
    pub b: i64,
    /// Graph radius of the support ball.
    pub r0: usize,
    pub levels: Vec<usize>,
    /// Candidates re-evaluated on the full ladder after screening.
    pub top_k: usize,
    /// Screening uses exact torus savings while `count·|𝕋_{m₁}|` stays below this.
    pub exact_work: f64,
    pub precision: Option<f64>,
}

impl SearchOptions {
    pub fn new(dim: usize) -> Self {
        SearchOptions {
            b: 4,
            r0: 2,
            levels: super::default_ladder(dim),
            top_k: if dim <= 2 { 32 } else { 16 },
            exact_work: 4e8,
            precision: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaEntry {
    pub label: String,
    /// `None` for `γ`.
    pub j: Option<usize>,
    pub value: f64,
    pub error: f64,
    pub argmin: Prevector,
    pub seed: Vec<(Vertex, i64)>,
    pub hyperplanes: Vec<Hyperplane>,
    pub group_order: usize,
    pub candidates: u64,
    pub screening: String,
    pub report: SavingsReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    pub tiling: String,
    pub dim: usize,
    pub gamma: GammaEntry,
    /// `γ_0, γ_1, …` as far as computed.
    pub gamma_j: Vec<GammaEntry>,
    pub b: i64,
    pub r0: usize,
    pub levels: Vec<usize>,
}

/// `Corr_ab(δ) = Σ_y P_a(y) P_b(y + δ)` on the first torus of the ladder.
struct Correlations {
    m: usize,
    cells: usize,
    vol: usize,
    table: Vec<Vec<f64>>,
}

impl Correlations {
    fn new(ev: &Evaluator) -> Correlations {
        let ks = ev.kernels(0);
        let (m, d, cells) = (ks[0].m, ks[0].dim, ks[0].cells);
        let vol = ks[0].vol();
        let shape = vec![m; d];
        // hats[a][c] = F[P_a restricted to class c]
        let hats: Vec<Vec<Vec<Complex64>>> = ks
            .iter()
            .map(|k| {
                (0..cells)
                    .map(|c| {
                        let mut buf: Vec<Complex64> =
                            k.values[c * vol..(c + 1) * vol].iter().map(|&x| Complex64::new(x, 0.0)).collect();
                        fftn(&mut buf, &shape, false);
                        buf
                    })
                    .collect()
            })
            .collect();
        let mut table = Vec::with_capacity(cells * cells);
        for a in 0..cells {
            for b in 0..cells {
                let mut buf = vec![Complex64::new(0.0, 0.0); vol];
                for c in 0..cells {
                    for (o, (x, y)) in buf.iter_mut().zip(hats[a][c].iter().zip(&hats[b][c])) {
                        *o += x.conj() * y;
                    }
                }
                ifftn(&mut buf, &shape);
                table.push(buf.iter().map(|z| z.re).collect());
            }
        }
        Correlations { m, cells, vol, table }
    }

    /// `Σ_x P_{c(p)}(x − λ_p) P_{c(q)}(x − λ_q)`.
    fn h(&self, p: &Vertex, q: &Vertex) -> f64 {
        let diff: Vec<i64> = p.lat.iter().zip(&q.lat).map(|(a, b)| a - b).collect();
        debug_assert!(self.vol > 0);
        self.table[p.cell * self.cells + q.cell][torus_index(&diff, self.m)]
    }
}

#[derive(Clone, Debug)]
struct Scored {
    score: f64,
    seed: Vec<(usize, i64)>,
}

impl PartialEq for Scored {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Scored {}
impl PartialOrd for Scored {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Scored {
    fn cmp(&self, o: &Self) -> Ordering {
        self.score.total_cmp(&o.score).then_with(|| self.seed.cmp(&o.seed))
    }
}

struct Best {
    report: SavingsReport,
    nu: Prevector,
    seed: Vec<(Vertex, i64)>,
    candidates: u64,
    screening: &'static str,
}

/// Screens everything the pool admits and re-evaluates the best `top_k`.
fn search_pool(
    ev: &Evaluator,
    pool: &Pool,
    group: Option<&ReflectionGroup>,
    class: FunctionClass,
    opts: &SearchOptions,
) -> Result<Option<Best>> {
    if pool.verts.is_empty() {
        return Ok(None);
    }
    let oracle = ev.oracle();
    let d = ev.tiling.dim();
    let order = group.map_or(1, |g| g.order());
    // orbit images per pool point, with signs
    let orbits: Vec<Vec<(Vertex, f64)>> = pool
        .verts
        .iter()
        .map(|v| match group {
            None => Ok(vec![(v.clone(), 1.0)]),
            Some(g) => (0..g.order()).map(|k| Ok((g.apply(k, v)?, g.sign(k) as f64))).collect(),
        })
        .collect::<Result<_>>()?;
    let need_moment = class >= FunctionClass::C2;
    let zero_sum = group.is_none() && class >= FunctionClass::C1;
    let moments: Vec<Vec<f64>> = orbits
        .iter()
        .map(|orb| {
            let mut m = vec![0.0; d];
            for (w, s) in orb {
                for (a, b) in m.iter_mut().zip(oracle.moment_of(w)) {
                    *a += s * b;
                }
            }
            m
        })
        .collect();
    let admissible = |cur: &[(usize, i64)]| -> bool {
        if !need_moment {
            return true;
        }
        let scale = cur.iter().map(|(_, c)| c.abs()).sum::<i64>() as f64 * order as f64;
        (0..d).all(|k| cur.iter().map(|(i, c)| *c as f64 * moments[*i][k]).sum::<f64>().abs() <= 1e-9 * scale)
    };
    let expand = |cur: &[(usize, i64)]| -> Vec<(Vertex, f64)> {
        let mut out: Vec<(Vertex, f64)> = Vec::new();
        for (i, c) in cur {
            for (w, s) in &orbits[*i] {
                out.push((w.clone(), s * *c as f64));
            }
        }
        out
    };

    let mut count = 0u64;
    walk(pool, opts.b, zero_sum, &mut |cur| {
        if admissible(cur) {
            count += 1;
        }
    });
    if count == 0 {
        return Ok(None);
    }
    let vol0 = ev.kernels(0)[0].values.len() as f64;
    let exact = count as f64 * vol0 <= opts.exact_work;
    let k = opts.top_k.max(1);
    let mut heap: BinaryHeap<Scored> = BinaryHeap::new();
    let push = |s: Scored, heap: &mut BinaryHeap<Scored>| {
        if !(s.score > ZERO_SAV) {
            return;
        }
        if heap.len() < k {
            heap.push(s);
        } else if s < *heap.peek().unwrap() {
            heap.pop();
            heap.push(s);
        }
    };
    if exact {
        let mut all: Vec<Vec<(usize, i64)>> = Vec::new();
        walk(pool, opts.b, zero_sum, &mut |cur| {
            if admissible(cur) {
                all.push(cur.to_vec());
            }
        });
        let scored: Vec<Scored> = all
            .into_par_iter()
            .map(|seed| Scored { score: ev.sav_at(0, &expand(&seed)) / order as f64, seed })
            .collect();
        for s in scored {
            push(s, &mut heap);
        }
    } else {
        let corr = Correlations::new(ev);
        let n = pool.verts.len();
        // H_S(p, q) = Σ_g sign(g) H(p, g q); f_S ≈ 2π² seedᵀ H_S seed
        let mut hs = vec![0.0; n * n];
        for p in 0..n {
            for q in 0..n {
                hs[p * n + q] = orbits[q].iter().map(|(w, s)| s * corr.h(&pool.verts[p], w)).sum();
            }
        }
        let tp2 = 2.0 * std::f64::consts::PI.powi(2);
        walk(pool, opts.b, zero_sum, &mut |cur| {
            if !admissible(cur) {
                return;
            }
            let mut q = 0.0;
            for (i, a) in cur {
                for (j, b) in cur {
                    q += (*a * *b) as f64 * hs[*i * n + *j];
                }
            }
            push(Scored { score: tp2 * q, seed: cur.to_vec() }, &mut heap);
        });
    }

    let finalists = heap.into_sorted_vec();
    let mut results: Vec<(SavingsReport, Vec<(usize, i64)>)> = Vec::new();
    for s in finalists {
        let r = ev.report(&expand(&s.seed), order);
        if r.value > ZERO_SAV {
            results.push((r, s.seed));
        }
    }
    let to_vertices = |seed: &[(usize, i64)]| -> Vec<(Vertex, i64)> {
        seed.iter().map(|(i, c)| (pool.verts[*i].clone(), *c)).collect()
    };
    let mut best: Option<(SavingsReport, Prevector, Vec<(Vertex, i64)>)> = None;
    for (r, seed) in results {
        let seed_v = to_vertices(&seed);
        let nu = match group {
            None => Prevector::with_oracle(oracle, seed_v.clone()),
            Some(g) => {
                let mut p = Prevector::with_oracle(oracle, g.antisymmetrize(&seed_v)?);
                p.symmetry = Some(g.hyperplanes.clone());
                p
            }
        };
        let nu = nu.canonical(&ev.tiling);
        let better = match &best {
            None => true,
            Some((br, bn, _)) => match r.value.total_cmp(&br.value) {
                Ordering::Less => true,
                Ordering::Equal => nu.coeffs < bn.coeffs,
                Ordering::Greater => false,
            },
        };
        if better {
            best = Some((r, nu, seed_v));
        }
    }
    Ok(best.map(|(report, nu, seed)| Best {
        report,
        nu,
        seed,
        candidates: count,
        screening: if exact { "exact" } else { "quadratic" },
    }))
}

fn entry(label: String, j: Option<usize>, best: Best, hyperplanes: Vec<Hyperplane>, group_order: usize) -> GammaEntry {
    GammaEntry {
        label,
        j,
        value: best.report.value,
        error: best.report.error,
        argmin: best.nu,
        seed: best.seed,
        hyperplanes,
        group_order,
        candidates: best.candidates,
        screening: best.screening.to_string(),
        report: best.report,
    }
}

fn translation_search(ev: &Evaluator, class: FunctionClass, opts: &SearchOptions) -> Result<Best> {
    let pool = Pool::translation(&ev.tiling, opts.r0);
    search_pool(ev, &pool, None, class, opts)?
        .ok_or_else(|| Error::Invalid(format!("no admissible {class} candidate with B = {}, R0 = {}", opts.b, opts.r0)))
}

fn check_levels(ev: &Evaluator, opts: &SearchOptions) -> Result<()> {
    if ev.levels != opts.levels {
        return Err(Error::Invalid(format!("evaluator ladder {:?} differs from options {:?}", ev.levels, opts.levels)));
    }
    Ok(())
}

fn check_bar(e: &GammaEntry, opts: &SearchOptions) -> Result<()> {
    match opts.precision {
        Some(t) if !(e.error <= t) => Err(Error::PrecisionUnreachable { value: e.value, bar: e.error, target: t }),
        _ => Ok(()),
    }
}

/// `γ` (class `C¹`) and `γ_0` (class `C^ρ`). For `d ≤ 4` every `C¹∖C^ρ`
/// function has `f = ∞` in `d = 2` and `C^ρ = C¹` in `d = 3, 4`, so one search
/// serves both.
pub fn gamma_search(ev: &Evaluator, opts: &SearchOptions) -> Result<SpectralParams> {
    check_levels(ev, opts)?;
    let d = ev.tiling.dim();
    let g0 = entry("gamma_0".into(), Some(0), translation_search(ev, required_class(d), opts)?, vec![], 1);
    check_bar(&g0, opts)?;
    let gamma = if required_class(d) == FunctionClass::C0 {
        let g = entry("gamma".into(), None, translation_search(ev, FunctionClass::C1, opts)?, vec![], 1);
        check_bar(&g, opts)?;
        g
    } else {
        GammaEntry { label: "gamma".into(), j: None, ..g0.clone() }
    };
    Ok(SpectralParams {
        tiling: ev.tiling.name().to_string(),
        dim: d,
        gamma,
        gamma_j: vec![g0],
        b: opts.b,
        r0: opts.r0,
        levels: opts.levels.clone(),
    })
}

/// Hyperplane sets for `γ_j` with a point on their intersection: boundary
/// lines (`j = 1`) and corners (`j = 2`) of `ℛ` in 2d, `j`-subsets of the
/// level-0 hyperplanes for `d ≥ 3`.
pub fn hyperplane_sets(tiling: &Tiling, family: &ReflectionFamily, j: usize) -> Result<Vec<(Vec<Hyperplane>, Vec<f64>)>> {
    let geom = tiling.family_geometry(family)?;
    let d = tiling.dim();
    if d == 2 {
        return match j {
            0 => Ok(vec![(vec![], vec![0.0; d])]),
            1 => Ok(geom.faces().iter().map(|f| (vec![Hyperplane::from(*f)], geom.point_on(f.0, f.1))).collect()),
            2 => Ok(geom
                .corner_face_pairs()?
                .into_iter()
                .map(|(a, b, p)| (vec![Hyperplane::from(a), Hyperplane::from(b)], p))
                .collect()),
            _ => Err(Error::Invalid(format!("γ_{j} is not defined in two dimensions"))),
        };
    }
    let k = geom.num_families();
    if j > k {
        return Err(Error::Invalid(format!("γ_{j} needs {j} families, the family has {k}")));
    }
    let side = |i: usize| geom.faces().iter().find(|f| f.0 == i && f.1 == 0).map_or(1, |f| f.2);
    Ok(crate::tiling::geometry::subsets(k, j)
        .into_iter()
        .map(|s| (s.into_iter().map(|i| Hyperplane { family: i, level: 0, side: side(i) }).collect(), vec![0.0; d]))
        .collect())
}

/// `γ_j`: minimum over hyperplane sets of the anti-symmetric search.
pub fn gamma_j_search(ev: &Evaluator, family: &ReflectionFamily, j: usize, opts: &SearchOptions) -> Result<GammaEntry> {
    check_levels(ev, opts)?;
    let d = ev.tiling.dim();
    let label = format!("gamma_{j}");
    if j == 0 {
        let e = entry(label, Some(0), translation_search(ev, required_class(d), opts)?, vec![], 1);
        check_bar(&e, opts)?;
        return Ok(e);
    }
    let mut best: Option<GammaEntry> = None;
    for (hs, point) in hyperplane_sets(&ev.tiling, family, j)? {
        let group = ReflectionGroup::new(&ev.tiling, family, &hs)?;
        let center = Vertex::new(0, point.iter().map(|x| x.round() as i64).collect());
        let pool = Pool::chamber(&ev.tiling, &group, &center, opts.r0);
        if let Some(b) = search_pool(ev, &pool, Some(&group), required_class(d), opts)? {
            let e = entry(label.clone(), Some(j), b, hs.clone(), group.order());
            if best.as_ref().is_none_or(|x| e.value < x.value) {
                best = Some(e);
            }
        }
    }
    let e = best.ok_or_else(|| Error::Invalid(format!("no admissible seed for {label}")))?;
    check_bar(&e, opts)?;
    Ok(e)
}

/// `γ`, then `γ_j` for every `j` in `js`.
pub fn spectral_params(
    ev: &Evaluator,
    family: Option<&ReflectionFamily>,
    js: &[usize],
    opts: &SearchOptions,
) -> Result<SpectralParams> {
    let mut p = gamma_search(ev, opts)?;
    for &j in js {
        if j == 0 {
            continue;
        }
        let fam = family.ok_or_else(|| Error::InvalidFamily("γ_j for j ≥ 1 needs a reflection family".into()))?;
        p.gamma_j.push(gamma_j_search(ev, fam, j, opts)?);
    }
    p.gamma_j.sort_by_key(|e| e.j);
    Ok(p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorEntry {
    pub j: usize,
    pub value: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralFactors {
    pub factors: Vec<FactorEntry>,
    pub big_gamma: f64,
    pub big_gamma_error: f64,
    pub controlling: usize,
    /// Error bars leave the argmax undecided.
    pub overlapping: bool,
}

/// `Γ_j = (d − j)/γ_j` for `j < d`, with first-order error propagation.
pub fn spectral_factors(params: &SpectralParams) -> Result<SpectralFactors> {
    let d = params.dim;
    let factors: Vec<FactorEntry> = params
        .gamma_j
        .iter()
        .filter_map(|e| e.j.filter(|&j| j < d).map(|j| (j, e)))
        .map(|(j, e)| {
            let k = (d - j) as f64;
            FactorEntry { j, value: k / e.value, error: k * e.error / (e.value * e.value) }
        })
        .collect();
    let top = factors
        .iter()
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or_else(|| Error::Invalid("no γ_j with j < d".into()))?;
    let overlapping = factors.iter().any(|f| f.j != top.j && f.value + f.error >= top.value - top.error);
    Ok(SpectralFactors {
        big_gamma: top.value,
        big_gamma_error: top.error,
        controlling: top.j,
        overlapping,
        factors: factors.clone(),
    })
}
