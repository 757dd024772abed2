//! The dual group `(Δ′)⁻¹ℤⁿ/ℤⁿ`, enumerated through the Smith normal form.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::snf::{smith_normal_form, SnfDecomposition};
use crate::error::{Error, Result};
use crate::greens::e;
use crate::sandpile::Sandpile;

/// Default enumeration cap on `|𝒢|`.
pub const DUAL_CAP: u64 = 10_000_000;

const TABLE_MAX: i64 = 1 << 22;

/// A character `ξ` with its Fourier coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualCharacter {
    /// `ξ` on the non-sink vertices, in `[0, 1)`.
    pub xi: Vec<f64>,
    /// Exact numerators over a common denominator, when known.
    pub exact: Option<(Vec<i64>, i64)>,
    pub mu_hat: Complex64,
}

impl DualCharacter {
    /// From real values; `n_vertices` counts the sink.
    pub fn from_xi(xi: Vec<f64>, n_vertices: usize) -> Self {
        let xi: Vec<f64> = xi.into_iter().map(|x| x.rem_euclid(1.0)).map(|x| if x >= 1.0 { 0.0 } else { x }).collect();
        let mu_hat = mu_hat(&xi, n_vertices);
        DualCharacter { xi, exact: None, mu_hat }
    }

    pub fn from_exact(num: Vec<i64>, den: i64, n_vertices: usize) -> Self {
        let num: Vec<i64> = num.into_iter().map(|x| x.rem_euclid(den)).collect();
        let xi: Vec<f64> = num.iter().map(|&x| x as f64 / den as f64).collect();
        let mu_hat = mu_hat_exact(&num, den, n_vertices);
        DualCharacter { xi, exact: Some((num, den)), mu_hat }
    }

    pub fn is_zero(&self) -> bool {
        match &self.exact {
            Some((num, _)) => num.iter().all(|&x| x == 0),
            None => self.xi.iter().all(|&x| x.min(1.0 - x) < 1e-9),
        }
    }

    /// `ξ − η`.
    pub fn minus(&self, other: &DualCharacter, n_vertices: usize) -> DualCharacter {
        match (&self.exact, &other.exact) {
            (Some((a, da)), Some((b, db))) => {
                let l = da.lcm(db);
                let num = a.iter().zip(b).map(|(x, y)| x * (l / da) - y * (l / db)).collect();
                DualCharacter::from_exact(num, l, n_vertices)
            }
            _ => DualCharacter::from_xi(self.xi.iter().zip(&other.xi).map(|(x, y)| x - y).collect(), n_vertices),
        }
    }

    pub fn neg(&self, n_vertices: usize) -> DualCharacter {
        match &self.exact {
            Some((a, d)) => DualCharacter::from_exact(a.iter().map(|x| -x).collect(), *d, n_vertices),
            None => DualCharacter::from_xi(self.xi.iter().map(|x| -x).collect(), n_vertices),
        }
    }

    /// Largest distance of `Δ′ξ` from an integer; zero for exact characters
    /// that satisfy the congruence.
    pub fn congruence_residual(&self, sp: &Sandpile) -> f64 {
        if let Some((num, den)) = &self.exact {
            let bad = (0..sp.n()).any(|k| {
                let mut s = sp.degrees()[k] as i128 * num[k] as i128;
                for &(w, m) in sp.neighbors(k) {
                    s -= m as i128 * num[w as usize] as i128;
                }
                s % *den as i128 != 0
            });
            return if bad { 1.0 } else { 0.0 };
        }
        (0..sp.n())
            .map(|k| {
                let mut s = sp.degrees()[k] as f64 * self.xi[k];
                for &(w, m) in sp.neighbors(k) {
                    s -= m as f64 * self.xi[w as usize];
                }
                (s - s.round()).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `ξ·σ mod 1`.
    pub fn pair(&self, chips: &[i64]) -> f64 {
        match &self.exact {
            Some((num, den)) => {
                let s: i128 = num.iter().zip(chips).map(|(a, b)| *a as i128 * *b as i128).sum();
                s.rem_euclid(*den as i128) as f64 / *den as f64
            }
            None => self.xi.iter().zip(chips).map(|(a, b)| a * *b as f64).sum::<f64>().rem_euclid(1.0),
        }
    }
}

/// `(1/|V|)(1 + Σ_v e(ξ_v))`.
pub fn mu_hat(xi: &[f64], n_vertices: usize) -> Complex64 {
    let s: Complex64 = xi.iter().map(|&x| e(x)).sum();
    (s + 1.0) / n_vertices as f64
}

fn mu_hat_exact(num: &[i64], den: i64, n_vertices: usize) -> Complex64 {
    let s: Complex64 = num.iter().map(|&x| e(x as f64 / den as f64)).sum();
    (s + 1.0) / n_vertices as f64
}

/// The dual group of a sandpile graph, ready to be streamed.
#[derive(Clone, Debug)]
pub struct DualGroup {
    pub snf: SnfDecomposition,
    order: u64,
    den: i64,
    n_vertices: usize,
    /// Nontrivial cyclic factors and their generators (numerators over `den`).
    radix: Vec<u64>,
    gens: Vec<Vec<i64>>,
    /// `Σ_{i≤j} gens[i]`: the change when the counter carries through digit `j`.
    steps: Vec<Vec<i64>>,
    table: Option<Vec<Complex64>>,
}

impl DualGroup {
    pub fn new(sp: &Sandpile, cap: u64) -> Result<Self> {
        let snf = smith_normal_form(&sp.reduced_laplacian())?;
        let ord = snf.order();
        let order = ord.to_u64().filter(|&o| o <= cap).ok_or(Error::GroupTooLarge { order: ord.to_string(), cap })?;
        let den = snf.d.last().and_then(|x| x.to_i64()).unwrap_or(1).max(1);
        let n = sp.n();
        let mut radix = Vec::new();
        let mut gens = Vec::new();
        for (i, di) in snf.d.iter().enumerate() {
            let di = di.to_i64().expect("bounded by the order");
            if di <= 1 {
                continue;
            }
            let scale = den / di;
            let bi = BigInt::from(di);
            gens.push((0..n).map(|r| snf.v[r][i].mod_floor(&bi).to_i64().unwrap() * scale).collect());
            radix.push(di as u64);
        }
        let mut steps = Vec::with_capacity(gens.len());
        let mut acc = vec![0i64; n];
        for g in &gens {
            for (a, x) in acc.iter_mut().zip(g) {
                *a = (*a + x) % den;
            }
            steps.push(acc.clone());
        }
        let table = (den <= TABLE_MAX).then(|| (0..den).map(|k| e(k as f64 / den as f64)).collect());
        Ok(DualGroup { snf, order, den, n_vertices: n + 1, radix, gens, steps, table })
    }

    /// `|𝒢|`.
    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn denominator(&self) -> i64 {
        self.den
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Numerators of the character with linear index `k`.
    pub fn numerators(&self, mut k: u64) -> Vec<i64> {
        let n = self.n_vertices - 1;
        let mut num = vec![0i64; n];
        for (r, g) in self.radix.iter().zip(&self.gens) {
            let digit = (k % r) as i128;
            k /= r;
            if digit == 0 {
                continue;
            }
            for (a, x) in num.iter_mut().zip(g) {
                *a = ((*a as i128 + digit * *x as i128) % self.den as i128) as i64;
            }
        }
        num
    }

    pub fn character(&self, k: u64) -> DualCharacter {
        DualCharacter::from_exact(self.numerators(k), self.den, self.n_vertices)
    }

    fn mu_of(&self, num: &[i64]) -> Complex64 {
        let s: Complex64 = match &self.table {
            Some(t) => num.iter().map(|&x| t[x as usize]).sum(),
            None => num.iter().map(|&x| e(x as f64 / self.den as f64)).sum(),
        };
        (s + 1.0) / self.n_vertices as f64
    }

    /// Advances numerators from index `k` to `k + 1`.
    fn advance(&self, k: u64, num: &mut [i64]) {
        let mut j = 0;
        let mut rest = k;
        while j + 1 < self.radix.len() && rest % self.radix[j] == self.radix[j] - 1 {
            rest /= self.radix[j];
            j += 1;
        }
        for (a, x) in num.iter_mut().zip(&self.steps[j]) {
            *a += x;
            if *a >= self.den {
                *a -= self.den;
            }
        }
    }

    /// Visits `(k, μ̂)` for every nonzero character, in parallel chunks, and
    /// reduces the per-chunk accumulators.
    pub fn fold<T, I, F, R>(&self, init: I, visit: F, reduce: R) -> T
    where
        T: Send,
        I: Fn() -> T + Sync,
        F: Fn(&mut T, u64, Complex64) + Sync,
        R: Fn(T, T) -> T + Sync,
    {
        let total = self.order;
        let chunk = 1u64 << 16;
        let n_chunks = total.div_ceil(chunk);
        (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let lo = (c * chunk).max(1);
                let hi = ((c + 1) * chunk).min(total);
                let mut acc = init();
                if lo >= hi {
                    return acc;
                }
                let mut num = self.numerators(lo);
                for k in lo..hi {
                    visit(&mut acc, k, self.mu_of(&num));
                    if k + 1 < hi {
                        self.advance(k, &mut num);
                    }
                }
                acc
            })
            .reduce(&init, &reduce)
    }

    /// Streams all nonzero characters.
    pub fn iter(&self) -> impl Iterator<Item = DualCharacter> + '_ {
        let mut num = vec![0i64; self.n_vertices - 1];
        (0..self.order).filter_map(move |k| {
            if k > 0 {
                self.advance(k - 1, &mut num);
            }
            (k > 0).then(|| DualCharacter::from_exact(num.clone(), self.den, self.n_vertices))
        })
    }

    /// The nonzero character of largest `|μ̂|`, ties to the lowest index.
    pub fn gap_minimizer(&self) -> Option<DualCharacter> {
        let best = self.fold(
            || None::<(f64, u64)>,
            |acc, k, mu| {
                let g = 1.0 - mu.norm();
                if acc.is_none_or(|(b, _)| g < b) {
                    *acc = Some((g, k));
                }
            },
            |a, b| match (a, b) {
                (Some(x), Some(y)) => Some(if y.0 < x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x }),
                (x, None) => x,
                (None, y) => y,
            },
        );
        best.map(|(_, k)| self.character(k))
    }

    /// `min_{ξ≠0} |V|(1 − |μ̂(ξ)|)`.
    pub fn scaled_gap(&self) -> Option<f64> {
        self.gap_minimizer().map(|c| self.n_vertices as f64 * (1.0 - c.mu_hat.norm()))
    }
}

/// All nonzero characters of the dual group.
pub fn enumerate_dual(sp: &Sandpile, cap: u64) -> Result<Vec<DualCharacter>> {
    Ok(DualGroup::new(sp, cap)?.iter().collect())
}

/// `ξ = (Δ′)⁻¹ν` for an integer prevector on the non-sink vertices, solved
/// in floating point and reduced mod 1.
pub fn character_from_prevector(factor: &CholeskyLaplacian, nu: &[i64]) -> DualCharacter {
    let mut x: Vec<f64> = nu.iter().map(|&v| v as f64).collect();
    factor.solve(&mut x);
    DualCharacter::from_xi(x, factor.n + 1)
}

/// A dense Cholesky factor of `Δ′`.
#[derive(Clone, Debug)]
pub struct CholeskyLaplacian {
    n: usize,
    l: Vec<f64>,
}

impl CholeskyLaplacian {
    pub fn new(sp: &Sandpile) -> Result<Self> {
        let n = sp.n();
        let flat: Vec<f64> = sp.reduced_laplacian().into_iter().flatten().map(|x| x as f64).collect();
        let l = crate::linalg::cholesky(&flat, n).ok_or_else(|| Error::Invalid("reduced Laplacian is not positive definite".into()))?;
        Ok(CholeskyLaplacian { n, l })
    }

    pub fn solve(&self, b: &mut [f64]) {
        crate::linalg::cholesky_solve(&self.l, self.n, b);
    }
}
