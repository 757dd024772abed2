//! Block-circulant solve of `Δg = η` on `𝒯/mΛ`.
//!
//! Per lattice frequency the Laplacian is a `|cells|×|cells|` matrix. The
//! classes off `Λ` are eliminated first, which leaves the scalar
//! `deg₀·(1 − ϱ̂)` acting on the pushed right-hand side.

use num_complex::Complex64;
use rayon::prelude::*;

use super::e;
use crate::error::{Error, Result};
use crate::fft::{fftn, ifftn};
use crate::linalg::solve_complex;
use crate::tiling::{torus_coords, Tiling};

/// A real function on `𝒯/mΛ`, indexed `c·m^d + lin(λ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusField {
    pub m: usize,
    pub dim: usize,
    pub cells: usize,
    pub values: Vec<f64>,
}

impl TorusField {
    pub fn vol(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    pub fn at(&self, cell: usize, lat: &[i64]) -> f64 {
        self.values[cell * self.vol() + crate::tiling::torus_index(lat, self.m)]
    }

    /// `Δf` on the torus.
    pub fn laplacian(&self, tiling: &Tiling) -> Vec<f64> {
        let vol = self.vol();
        let mut out = vec![0.0; self.values.len()];
        for k in 0..vol {
            let lat = torus_coords(k, self.dim, self.m);
            for c in 0..self.cells {
                let mut s = tiling.degree[c] as f64 * self.values[c * vol + k];
                for e in &tiling.out[c] {
                    let l: Vec<i64> = lat.iter().zip(&e.offset).map(|(a, b)| a + b).collect();
                    s -= e.mult as f64 * self.at(e.to, &l);
                }
                out[c * vol + k] = s;
            }
        }
        out
    }
}

/// Solves `Δg = rhs` on the torus, returning the mean-zero solution.
///
/// With `allow_mean`, the zero mode of the pushed right-hand side is dropped,
/// so `Δg = rhs − (Σ rhs)·m^{-d}·1_Λ`.
pub fn solve_torus(tiling: &Tiling, m: usize, rhs: &[f64], allow_mean: bool) -> Result<TorusField> {
    let d = tiling.dim();
    let cells = tiling.cells();
    let vol = m.pow(d as u32);
    assert_eq!(rhs.len(), cells * vol);
    let shape = vec![m; d];
    let mut hat: Vec<Vec<Complex64>> = (0..cells)
        .map(|c| {
            let mut buf: Vec<Complex64> = rhs[c * vol..(c + 1) * vol].iter().map(|&x| Complex64::new(x, 0.0)).collect();
            fftn(&mut buf, &shape, false);
            buf
        })
        .collect();
    let roots: Vec<Complex64> = (0..m).map(|j| e(j as f64 / m as f64)).collect();
    // edges as (from, to, mult, offset)
    let edges: Vec<(usize, usize, f64, Vec<i64>)> = tiling
        .out
        .iter()
        .enumerate()
        .flat_map(|(i, es)| es.iter().map(move |e| (i, e.to, e.mult as f64, e.offset.clone())))
        .collect();
    let deg: Vec<f64> = tiling.degree.iter().map(|&x| x as f64).collect();
    let scale: f64 = rhs.iter().map(|x| x.abs()).sum::<f64>().max(1.0);

    let solve_one = |k: usize, eta: Vec<Complex64>| -> Result<Vec<Complex64>> {
        let kc = torus_coords(k, d, m);
        let mut l = vec![vec![Complex64::new(0.0, 0.0); cells]; cells];
        for (c, row) in l.iter_mut().enumerate() {
            row[c] += deg[c];
        }
        for (i, j, w, o) in &edges {
            let ph = kc.iter().zip(o).map(|(a, b)| a * b).sum::<i64>().rem_euclid(m as i64) as usize;
            l[*i][*j] -= *w * roots[ph];
        }
        if cells == 1 {
            if k == 0 {
                if !allow_mean && eta[0].norm() > 1e-10 * scale {
                    return Err(Error::MeanNotZero(eta[0].re));
                }
                return Ok(vec![Complex64::new(0.0, 0.0)]);
            }
            return Ok(vec![eta[0] / l[0][0]]);
        }
        let r = cells - 1;
        let lrr: Vec<Vec<Complex64>> = (1..cells).map(|i| l[i][1..].to_vec()).collect();
        let eta_r: Vec<Complex64> = eta[1..].to_vec();
        let lr0: Vec<Complex64> = (1..cells).map(|i| l[i][0]).collect();
        let y = solve_complex(lrr.clone(), eta_r, 1e-14).ok_or(Error::SingularSolve)?;
        let z = solve_complex(lrr, lr0, 1e-14).ok_or(Error::SingularSolve)?;
        let num = eta[0] - (0..r).map(|j| l[0][j + 1] * y[j]).sum::<Complex64>();
        let schur = l[0][0] - (0..r).map(|j| l[0][j + 1] * z[j]).sum::<Complex64>();
        let g0 = if k == 0 {
            if !allow_mean && num.norm() > 1e-10 * scale {
                return Err(Error::MeanNotZero(num.re));
            }
            Complex64::new(0.0, 0.0)
        } else {
            num / schur
        };
        let mut out = vec![g0];
        out.extend((0..r).map(|j| y[j] - z[j] * g0));
        Ok(out)
    };

    let sols: Vec<Vec<Complex64>> = (0..vol)
        .into_par_iter()
        .map(|k| solve_one(k, (0..cells).map(|c| hat[c][k]).collect()))
        .collect::<Result<_>>()?;
    for (k, s) in sols.into_iter().enumerate() {
        for c in 0..cells {
            hat[c][k] = s[c];
        }
    }
    let mut values = Vec::with_capacity(cells * vol);
    for buf in hat.iter_mut() {
        ifftn(buf, &shape);
        values.extend(buf.iter().map(|z| z.re));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    for v in values.iter_mut() {
        *v -= mean;
    }
    Ok(TorusField { m, dim: d, cells, values })
}

/// `P_c` with `ΔP_c = δ_(c,0) − m^{-d}·1_Λ`, one per cell class.
pub fn point_kernels(tiling: &Tiling, m: usize) -> Result<Vec<TorusField>> {
    let vol = m.pow(tiling.dim() as u32);
    (0..tiling.cells())
        .map(|c| {
            let mut rhs = vec![0.0; tiling.cells() * vol];
            rhs[c * vol] = 1.0;
            solve_torus(tiling, m, &rhs, true)
        })
        .collect()
}

/// `dst(x) += coef·src(x − shift)` for every class, lattice shift only.
pub fn add_shifted(dst: &mut [f64], src: &TorusField, shift: &[i64], coef: f64) {
    let (m, d) = (src.m, src.dim);
    let vol = src.vol();
    if d == 0 {
        return;
    }
    let rows = vol / m;
    let s_last = shift[d - 1].rem_euclid(m as i64) as usize;
    for c in 0..src.cells {
        let base = c * vol;
        for row in 0..rows {
            let rc = torus_coords(row, d - 1, m);
            let mut src_row = 0usize;
            for (k, x) in rc.iter().enumerate() {
                src_row = src_row * m + (x - shift[k]).rem_euclid(m as i64) as usize;
            }
            let so = base + src_row * m;
            let dof = base + row * m;
            let split = m - s_last;
            // x_last ∈ [s_last, m): source index x_last − s_last
            let (d_lo, d_hi) = dst[dof..dof + m].split_at_mut(s_last);
            for (a, b) in d_hi.iter_mut().zip(&src.values[so..so + split]) {
                *a += coef * b;
            }
            for (a, b) in d_lo.iter_mut().zip(&src.values[so + split..so + m]) {
                *a += coef * b;
            }
        }
    }
}
