//! Savings of `ξ = g*ν` on a ladder of tori, extrapolated in `m`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ClassOracle, Prevector, ReflectionGroup};
use crate::error::{Error, Result};
use crate::greens::{add_shifted, point_kernels, required_class, richardson_order, TorusField};
use crate::tiling::{torus_index, Tiling, Vertex};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SavingsReport {
    /// Extrapolated `f`.
    pub value: f64,
    /// Difference between the last two Richardson estimates.
    pub error: f64,
    /// `(m, sav/|𝔖|)` per torus.
    pub levels: Vec<(usize, f64)>,
    pub order: f64,
    pub group_order: usize,
    /// `ξ` near the support on the largest torus.
    pub xi: Vec<(Vertex, f64)>,
}

/// Point kernels on each torus of the ladder.
#[derive(Clone, Debug)]
pub struct Evaluator {
    pub tiling: Tiling,
    pub levels: Vec<usize>,
    pub order: f64,
    kernels: Vec<Vec<TorusField>>,
    oracle: ClassOracle,
}

pub fn default_ladder(dim: usize) -> Vec<usize> {
    match dim {
        0..=2 => vec![64, 128, 256],
        3 => vec![32, 64, 128],
        4 => vec![16, 24, 32],
        _ => vec![8, 10, 12],
    }
}

impl Evaluator {
    pub fn new(tiling: &Tiling, levels: &[usize]) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Invalid("empty torus ladder".into()));
        }
        let kernels = levels.iter().map(|&m| point_kernels(tiling, m)).collect::<Result<_>>()?;
        Ok(Evaluator {
            tiling: tiling.clone(),
            levels: levels.to_vec(),
            order: richardson_order(tiling.dim()),
            kernels,
            oracle: ClassOracle::new(tiling)?,
        })
    }

    pub fn with_defaults(tiling: &Tiling) -> Result<Self> {
        Self::new(tiling, &default_ladder(tiling.dim()))
    }

    pub fn oracle(&self) -> &ClassOracle {
        &self.oracle
    }

    pub fn kernels(&self, level: usize) -> &[TorusField] {
        &self.kernels[level]
    }

    /// `ξ = Σ ν(v)·P_{c(v)}(· − λ_v)` on torus `level`.
    pub fn xi(&self, level: usize, nu: &[(Vertex, f64)]) -> Vec<f64> {
        let ks = &self.kernels[level];
        let mut out = vec![0.0; ks[0].values.len()];
        for (v, c) in nu {
            add_shifted(&mut out, &ks[v.cell], &v.lat, *c);
        }
        out
    }

    pub fn sav_at(&self, level: usize, nu: &[(Vertex, f64)]) -> f64 {
        sav(&self.xi(level, nu))
    }

    /// Evaluates on every torus and extrapolates; `group_order` divides each sum.
    pub fn report(&self, nu: &[(Vertex, f64)], group_order: usize) -> SavingsReport {
        let vals: Vec<f64> =
            (0..self.levels.len()).into_par_iter().map(|l| self.sav_at(l, nu) / group_order as f64).collect();
        let levels: Vec<(usize, f64)> = self.levels.iter().copied().zip(vals).collect();
        let (value, error) = richardson(&levels, self.order);
        let last = self.levels.len() - 1;
        let xi_field = self.xi(last, nu);
        let m = self.levels[last];
        let vol = m.pow(self.tiling.dim() as u32);
        let mut xi: Vec<(Vertex, f64)> = Vec::new();
        for (v, _) in nu {
            for (w, _) in crate::tiling::graph_ball(&self.tiling, v, 1) {
                if !xi.iter().any(|(x, _)| *x == w) {
                    xi.push((w.clone(), xi_field[w.cell * vol + torus_index(&w.lat, m)]));
                }
            }
        }
        xi.sort_by(|a, b| a.0.cmp(&b.0));
        SavingsReport { value, error, levels, order: self.order, group_order, xi }
    }
}

/// `N − |Σ e(ξ_x)|`, summed as `Σ 2 sin²(πξ_x − φ/2)` for accuracy.
pub fn sav(xi: &[f64]) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    let s: Complex64 = xi.iter().map(|&x| Complex64::from_polar(1.0, tau * x)).sum();
    let phi = s.arg();
    xi.iter().map(|&x| 2.0 * (0.5 * (tau * x - phi)).sin().powi(2)).sum()
}

/// `|S| − |Σ_{x∈S} e(ξ_x)|`.
pub fn sav_subset(xi: &[f64], subset: &[usize]) -> f64 {
    let s: Complex64 = subset.iter().map(|&i| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * xi[i])).sum();
    subset.len() as f64 - s.norm()
}

/// Richardson in `m^{-p}` over the last three levels; the error is the spread
/// between the two-level estimates.
pub fn richardson(levels: &[(usize, f64)], p: f64) -> (f64, f64) {
    let two = |a: (usize, f64), b: (usize, f64)| {
        let (wa, wb) = ((a.0 as f64).powf(p), (b.0 as f64).powf(p));
        (wb * b.1 - wa * a.1) / (wb - wa)
    };
    match levels.len() {
        0 => (f64::NAN, f64::INFINITY),
        1 => (levels[0].1, f64::INFINITY),
        2 => {
            let r = two(levels[0], levels[1]);
            (r, (r - levels[1].1).abs())
        }
        n => {
            let r1 = two(levels[n - 3], levels[n - 2]);
            let r2 = two(levels[n - 2], levels[n - 1]);
            (r2, (r2 - r1).abs())
        }
    }
}

fn as_f64(nu: &[(Vertex, i64)]) -> Vec<(Vertex, f64)> {
    nu.iter().map(|(v, c)| (v.clone(), *c as f64)).collect()
}

/// `f(g*ν)` on the infinite tiling.
pub fn f_eval(ev: &Evaluator, nu: &Prevector, precision: Option<f64>) -> Result<SavingsReport> {
    let d = ev.tiling.dim();
    let class = ev.oracle.class(&nu.coeffs);
    if class < required_class(d) {
        return Err(Error::ClassMismatch { found: class.to_string(), required: required_class(d).to_string() });
    }
    let r = ev.report(&as_f64(&nu.coeffs), 1);
    check_precision(r, precision)
}

/// `f_S`: the sum over `𝒯/𝔖_S` for `ν` anti-symmetric under the group.
pub fn f_eval_antisymmetric(
    ev: &Evaluator,
    nu: &Prevector,
    group: &ReflectionGroup,
    precision: Option<f64>,
) -> Result<SavingsReport> {
    if nu.coeffs.is_empty() || !group.is_antisymmetric(&nu.coeffs)? {
        return Err(Error::NotAntisymmetric);
    }
    let d = ev.tiling.dim();
    let class = ev.oracle.class(&nu.coeffs);
    if class < required_class(d) {
        return Err(Error::ClassMismatch { found: class.to_string(), required: required_class(d).to_string() });
    }
    let r = ev.report(&as_f64(&nu.coeffs), group.order());
    check_precision(r, precision)
}

fn check_precision(r: SavingsReport, precision: Option<f64>) -> Result<SavingsReport> {
    match precision {
        Some(t) if !(r.error <= t) => Err(Error::PrecisionUnreachable { value: r.value, bar: r.error, target: t }),
        _ => Ok(r),
    }
}
