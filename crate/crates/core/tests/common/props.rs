//! Property checks driven by a proptest runner, usable from ordinary tests
//! and from the acceptance harness.

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use tilepile_core::greens::{classify, rho_hat, stopped_measure, FunctionClass, FunctionOnTiling};
use tilepile_core::spectral::{sav, sav_subset, Evaluator};
use tilepile_core::tiling::{builtin_names, graph_ball};
use tilepile_core::{Tiling, Vertex};

pub fn names() -> Vec<&'static str> {
    builtin_names()
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() })
}

fn flatten<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

/// Torus size used for single-level savings checks.
pub fn check_level(dim: usize) -> usize {
    match dim {
        1 => 32,
        2 => 16,
        3 => 10,
        4 => 6,
        _ => 4,
    }
}

fn small_ball(t: &Tiling, r: usize) -> Vec<Vertex> {
    graph_ball(t, &Vertex::origin(t.dim()), r).into_iter().map(|p| p.0).collect()
}

/// Random sum-zero integer function on `pool` (origin absorbs the sum).
fn sum_zero(pool: &[Vertex], picks: &[(usize, i64)]) -> FunctionOnTiling {
    let mut f = FunctionOnTiling::new();
    let mut total = 0.0;
    for &(i, c) in picks {
        let v = &pool[i % pool.len()];
        if v.cell == 0 && v.lat.iter().all(|&x| x == 0) {
            continue;
        }
        f.add(v.clone(), c as f64);
        total += c as f64;
    }
    f.add(pool.iter().find(|v| v.cell == 0 && v.lat.iter().all(|&x| x == 0)).unwrap().clone(), -total);
    f
}

fn to_pairs(f: &FunctionOnTiling) -> Vec<(Vertex, f64)> {
    f.values.iter().filter(|(_, c)| **c != 0.0).map(|(v, c)| (v.clone(), *c)).collect()
}

fn picks() -> impl Strategy<Value = Vec<(usize, i64)>> {
    prop::collection::vec((0usize..1000, -3i64..=3), 1..6)
}

fn shift(d: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-5i64..=5, d)
}

/// `sav` on a torus level is unchanged by lattice translation of `ν` and by
/// adding a Laplacian image `Δh`.
pub fn f_invariance(name: &str, cases: u32) -> Result<(), String> {
    let t = Tiling::builtin(name).map_err(|e| e.to_string())?;
    let d = t.dim();
    let ev = Evaluator::new(&t, &[check_level(d)]).map_err(|e| e.to_string())?;
    let pool = small_ball(&t, 2);
    let strat = (picks(), shift(d), prop::collection::vec((0usize..1000, -2i64..=2), 1..4));
    flatten(runner(cases).run(&strat, |(p, by, h)| {
        let nu = sum_zero(&pool, &p);
        prop_assume!(nu.l1() > 0.0);
        let base = ev.sav_at(0, &to_pairs(&nu));
        let moved = ev.sav_at(0, &to_pairs(&nu.translate(&by)));
        prop_assert!((base - moved).abs() < 1e-9, "translation: {base} vs {moved}");
        let mut hf = FunctionOnTiling::new();
        for (i, c) in h {
            hf.add(pool[i % pool.len()].clone(), c as f64);
        }
        let shifted = nu.plus(&hf.laplacian(&t));
        let s = ev.sav_at(0, &to_pairs(&shifted));
        prop_assert!((base - s).abs() < 1e-9, "Laplacian shift: {base} vs {s}");
        Ok(())
    }))
}

/// `sav(ξ; S₁ ∪ S₂) ≥ sav(ξ; S₁) + sav(ξ; S₂)` for disjoint `S₁, S₂`, on the
/// character of a random prevector.
pub fn superadditivity(name: &str, cases: u32) -> Result<(), String> {
    let t = Tiling::builtin(name).map_err(|e| e.to_string())?;
    let ev = Evaluator::new(&t, &[check_level(t.dim())]).map_err(|e| e.to_string())?;
    let pool = small_ball(&t, 2);
    let strat = (picks(), prop::collection::vec(0u8..3, 1..400));
    flatten(runner(cases).run(&strat, |(p, labels)| {
        let nu = sum_zero(&pool, &p);
        prop_assume!(nu.l1() > 0.0);
        let xi = ev.xi(0, &to_pairs(&nu));
        let mut s1 = Vec::new();
        let mut s2 = Vec::new();
        for (k, l) in labels.iter().enumerate() {
            let idx = (k * 7919) % xi.len();
            match l {
                1 if !s1.contains(&idx) && !s2.contains(&idx) => s1.push(idx),
                2 if !s1.contains(&idx) && !s2.contains(&idx) => s2.push(idx),
                _ => {}
            }
        }
        let union: Vec<usize> = s1.iter().chain(&s2).copied().collect();
        let lhs = sav_subset(&xi, &union);
        let rhs = sav_subset(&xi, &s1) + sav_subset(&xi, &s2);
        prop_assert!(lhs >= rhs - 1e-9, "{lhs} < {rhs}");
        prop_assert!(sav(&xi) >= lhs - 1e-9);
        Ok(())
    }))
}

/// `ϱ(x) = ϱ(−x)` with unit mass; `ϱ̂` real, even and of modulus ≤ 1.
pub fn rho_symmetry(name: &str, cases: u32) -> Result<(), String> {
    let t = Tiling::builtin(name).map_err(|e| e.to_string())?;
    let d = t.dim();
    let rho = stopped_measure(&t, &Vertex::origin(d)).map_err(|e| e.to_string())?;
    if (rho.mass - 1.0).abs() > 1e-12 {
        return Err(format!("mass {}", rho.mass));
    }
    for (x, w) in &rho.weights {
        let neg: Vec<i64> = x.iter().map(|a| -a).collect();
        let v = rho.weights.get(&neg).copied().unwrap_or(0.0);
        if (w - v).abs() > 1e-12 {
            return Err(format!("ϱ({x:?}) = {w} but ϱ(−x) = {v}"));
        }
    }
    let strat = prop::collection::vec(-0.5f64..0.5, d);
    flatten(runner(cases).run(&strat, |x| {
        let a = rho_hat(&t, &x).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let b = rho_hat(&t, &neg).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(a.im.abs() < 1e-10, "imaginary part {}", a.im);
        prop_assert!((a - b).norm() < 1e-10);
        prop_assert!(a.norm() <= 1.0 + 1e-12);
        Ok(())
    }))
}

/// Class and moment of `η` do not change under lattice translation; second
/// differences of point masses are always `C²`.
pub fn class_translation(name: &str, cases: u32) -> Result<(), String> {
    let t = Tiling::builtin(name).map_err(|e| e.to_string())?;
    let d = t.dim();
    let pool = small_ball(&t, 2);
    let strat = (picks(), shift(d), 0usize..1000, shift(d), shift(d));
    flatten(runner(cases).run(&strat, |(p, by, v, a, b)| {
        let eta = sum_zero(&pool, &p);
        prop_assume!(eta.l1() > 0.0);
        let c0 = classify(&t, &eta).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let c1 = classify(&t, &eta.translate(&by)).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(c0.class, c1.class);
        for (x, y) in c0.moment.iter().zip(&c1.moment) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        let v = pool[v % pool.len()].clone();
        let delta = FunctionOnTiling::delta(v);
        let da = delta.plus(&delta.translate(&a).scaled(-1.0));
        let dab = da.plus(&da.translate(&b).scaled(-1.0));
        prop_assume!(dab.l1() > 0.0);
        for f in [dab.clone(), dab.translate(&by)] {
            let c = classify(&t, &f).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(c.class, FunctionClass::C2);
        }
        Ok(())
    }))
}

pub fn llt_horizon(dim: usize) -> usize {
    if dim <= 2 {
        256
    } else {
        64
    }
}

/// The local-limit ratios stay bounded.
pub fn local_limit_bounded(name: &str) -> Result<(), String> {
    let t = Tiling::builtin(name).map_err(|e| e.to_string())?;
    let r = tilepile_core::greens::local_limit_check(&t, llt_horizon(t.dim())).map_err(|e| e.to_string())?;
    if r.bounded {
        Ok(())
    } else {
        Err(format!("unbounded ratios {:?}", r.rows))
    }
}
