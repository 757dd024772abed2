//! Smith normal form over big integers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `U·A·V = D` with `U`, `V` unimodular and `d₁ | d₂ | …`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnfDecomposition {
    pub d: Vec<BigInt>,
    pub u: Vec<Vec<BigInt>>,
    pub v: Vec<Vec<BigInt>>,
}

impl SnfDecomposition {
    /// `∏ d_i`.
    pub fn order(&self) -> BigInt {
        self.d.iter().fold(BigInt::one(), |a, b| a * b)
    }
}

fn identity(n: usize) -> Vec<Vec<BigInt>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect()).collect()
}

fn matmul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let n = a.len();
    let k = b.first().map_or(0, |r| r.len());
    let mut out = vec![vec![BigInt::zero(); k]; n];
    for i in 0..n {
        for (l, bl) in b.iter().enumerate() {
            if a[i][l].is_zero() {
                continue;
            }
            for j in 0..k {
                if !bl[j].is_zero() {
                    out[i][j] += &a[i][l] * &bl[j];
                }
            }
        }
    }
    out
}

// row_a += q·row_b, applied to both the working matrix and U
fn row_add(a: &mut [Vec<BigInt>], u: &mut [Vec<BigInt>], dst: usize, src: usize, q: &BigInt) {
    for m in [a, u] {
        let (s, d) = if src < dst {
            let (lo, hi) = m.split_at_mut(dst);
            (&lo[src], &mut hi[0])
        } else {
            let (lo, hi) = m.split_at_mut(src);
            (&hi[0], &mut lo[dst])
        };
        for (x, y) in d.iter_mut().zip(s) {
            if !y.is_zero() {
                *x += q * y;
            }
        }
    }
}

fn col_add(a: &mut [Vec<BigInt>], v: &mut [Vec<BigInt>], dst: usize, src: usize, q: &BigInt) {
    for m in [a, v] {
        for r in m.iter_mut() {
            if !r[src].is_zero() {
                let t = q * &r[src];
                r[dst] += t;
            }
        }
    }
}

pub fn smith_normal_form(a: &[Vec<i64>]) -> Result<SnfDecomposition> {
    let n = a.len();
    if a.iter().any(|r| r.len() != n) {
        return Err(Error::Invalid("Smith normal form needs a square matrix".into()));
    }
    let orig: Vec<Vec<BigInt>> = a.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let mut m = orig.clone();
    let mut u = identity(n);
    let mut v = identity(n);
    for t in 0..n {
        loop {
            let mut piv: Option<(usize, usize)> = None;
            for i in t..n {
                for j in t..n {
                    if !m[i][j].is_zero() && piv.is_none_or(|(pi, pj)| m[i][j].abs() < m[pi][pj].abs()) {
                        piv = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = piv else {
                break;
            };
            m.swap(t, pi);
            u.swap(t, pi);
            for r in m.iter_mut().chain(v.iter_mut()) {
                r.swap(t, pj);
            }
            let p = m[t][t].clone();
            let mut clean = true;
            for i in t + 1..n {
                if !m[i][t].is_zero() {
                    let q = -m[i][t].div_floor(&p);
                    row_add(&mut m, &mut u, i, t, &q);
                    clean &= m[i][t].is_zero();
                }
            }
            for j in t + 1..n {
                if !m[t][j].is_zero() {
                    let q = -m[t][j].div_floor(&p);
                    col_add(&mut m, &mut v, j, t, &q);
                    clean &= m[t][j].is_zero();
                }
            }
            if !clean {
                continue;
            }
            let bad = (t + 1..n).find(|&i| (t + 1..n).any(|j| !m[i][j].is_multiple_of(&p)));
            match bad {
                Some(i) => row_add(&mut m, &mut u, t, i, &BigInt::one()),
                None => break,
            }
        }
        if m[t][t].is_negative() {
            for x in m[t].iter_mut().chain(u[t].iter_mut()) {
                *x = -x.clone();
            }
        }
    }
    let d: Vec<BigInt> = (0..n).map(|i| m[i][i].clone()).collect();
    let check = matmul(&matmul(&u, &orig), &v);
    for (i, row) in check.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            let want = if i == j { &d[i] } else { &BigInt::zero() };
            if x != want {
                return Err(Error::Invalid("Smith normal form verification failed".into()));
            }
        }
    }
    Ok(SnfDecomposition { d, u, v })
}
