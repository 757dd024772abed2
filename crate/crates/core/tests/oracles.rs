mod common;

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use tilepile_core::greens::{g_hat, greens_torus, rho_hat, FunctionClass, FunctionOnTiling};
use tilepile_core::mixing::{enumerate_dual, l2_profile, smith_normal_form};
use tilepile_core::spectral::{enumerate_prevectors, key_cmp, EnumOptions};
use tilepile_core::tiling::{build_torus, graph_ball, torus_coords};
use tilepile_core::{Configuration, Sandpile, Vertex};

use common::*;

#[test]
fn triangular_torus_order_is_tree_count() {
    let sp = torus("triangular", 4);
    assert_eq!(sp.n() + 1, 16);
    assert!(sp.graph.degree.iter().all(|&d| d == 6));
    let det = det_bareiss(&sp.reduced_laplacian());
    assert_eq!(sp.group_order(), BigInt::from(det));
    let trees = spanning_trees(&adjacency_matrix(&sp.graph));
    assert_eq!(det as u128, trees);
}

#[test]
fn open_grid_order_is_tree_count() {
    let sp = open("square", 4);
    assert_eq!(sp.n(), 9);
    let trees = spanning_trees(&adjacency_matrix(&sp.graph));
    assert_eq!(sp.group_order(), BigInt::from(trees));
    assert_eq!(trees, 100_352);
}

#[test]
fn snf_product_is_exact_determinant() {
    let sp = torus("triangular", 2);
    let l = sp.reduced_laplacian();
    let snf = smith_normal_form(&l).unwrap();
    assert_eq!(snf.order(), BigInt::from(det_bareiss(&l)));
}

#[test]
fn burning_test_matches_reachability() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut graphs = vec![cycle_with_sink(4), cycle_with_sink(7), open("square", 3), open("square", 4), torus("triangular", 2), torus("square", 3)];
    for _ in 0..4 {
        graphs.push(random_graph(&mut rng, 7, 4, 2));
    }
    for sp in graphs {
        let reach = reachable_from_full(&sp, &mut rng);
        let mut count = 0;
        for c in all_stable(&sp) {
            let r = sp.is_recurrent(&Configuration::new(c.clone()));
            assert_eq!(r, reach.contains(&c), "{c:?}");
            count += r as usize;
        }
        assert_eq!(BigInt::from(count), sp.group_order());
    }
    let grid = open("square", 4);
    assert!(!grid.is_recurrent(&grid.zero()));
}

#[test]
fn identity_by_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for sp in [cycle_with_sink(4), open("square", 4)] {
        let reach = reachable_from_full(&sp, &mut rng);
        let full = sp.max_stable().chips;
        let ids: Vec<&Vec<i64>> = reach
            .iter()
            .filter(|e| {
                let sum: Vec<i64> = e.iter().zip(&full).map(|(a, b)| a + b).collect();
                naive_stabilize(&sp, &sum, &mut rng).0 == full
            })
            .collect();
        assert_eq!(ids.len(), 1);
        assert_eq!(&sp.identity().chips, ids[0]);
    }
    assert_eq!(cycle_with_sink(4).identity().chips, vec![1, 0, 1]);
}

#[test]
fn full_plus_full_on_open_grid() {
    let sp = open("square", 4);
    let full = sp.max_stable();
    let (s, odo) = sp.stabilize(&Configuration::new(full.chips.iter().map(|x| 2 * x).collect())).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let (s2, odo2) = naive_stabilize(&sp, &full.chips.iter().map(|x| 2 * x).collect::<Vec<_>>(), &mut rng);
        assert_eq!(s.chips, s2);
        assert_eq!(odo, odo2);
    }
    assert_eq!(sp.add(&full, &full).unwrap(), s);
}

#[test]
fn one_step_law_on_three_cycle() {
    let sp = cycle_with_sink(3);
    let e = sp.identity();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // exact law: stay, or add a chip at either non-sink vertex
    let mut exact: HashMap<Vec<i64>, f64> = HashMap::new();
    *exact.entry(e.chips.clone()).or_default() += 1.0 / 3.0;
    for k in 0..2 {
        let mut x = e.chips.clone();
        x[k] += 1;
        *exact.entry(naive_stabilize(&sp, &x, &mut rng).0).or_default() += 1.0 / 3.0;
    }
    let n = 100_000;
    let mut counts: HashMap<Vec<i64>, f64> = HashMap::new();
    for _ in 0..n {
        let mut c = e.clone();
        sp.step(&mut c, &mut rng);
        *counts.entry(c.chips).or_default() += 1.0;
    }
    assert!(counts.keys().all(|k| exact.contains_key(k)));
    let chi2: f64 = exact.iter().map(|(k, p)| (counts.get(k).copied().unwrap_or(0.0) - n as f64 * p).powi(2) / (n as f64 * p)).sum();
    let dof = exact.len() as f64 - 1.0;
    assert!(1.0 - ChiSquared::new(dof).unwrap().cdf(chi2) > 1e-4, "χ² = {chi2}");
}

#[test]
fn one_vertex_chain_is_a_fair_coin() {
    // a double edge to the sink: states 0 and 1
    let sp = Sandpile::new(tilepile_core::tiling::FiniteSandpileGraph::from_edges(2, 0, &[(0, 1, 2)]).unwrap());
    assert_eq!(sp.group_order(), BigInt::from(2));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 20_000;
    let moved = (0..n)
        .filter(|_| {
            let mut c = Configuration::new(vec![0]);
            sp.step(&mut c, &mut rng);
            c.chips == [1]
        })
        .count();
    assert!((moved as f64 / n as f64 - 0.5).abs() < 0.02);
}

#[test]
fn three_cycle_characters_by_hand() {
    // Δ′ = [[2,−1],[−1,2]], (Δ′)⁻¹ = ⅓[[2,1],[1,2]]
    let chars = enumerate_dual(&cycle_with_sink(3), 10).unwrap();
    let mut got: Vec<Vec<i64>> = chars.iter().map(|c| c.xi.iter().map(|x| (3.0 * x).round() as i64).collect()).collect();
    got.sort();
    assert_eq!(got, vec![vec![1, 2], vec![2, 1]]);
    assert!((chars[0].mu_hat - chars[1].mu_hat.conj()).norm() < 1e-12);
}

/// Exact distribution of the chain on the group found by naive reachability.
fn brute_tv(sp: &Sandpile, steps: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let states: Vec<Vec<i64>> = reachable_from_full(sp, &mut rng).into_iter().collect();
    let index: HashMap<&Vec<i64>, usize> = states.iter().enumerate().map(|(k, s)| (s, k)).collect();
    let n = sp.n();
    let p = 1.0 / (n + 1) as f64;
    let next: Vec<Vec<usize>> = states
        .iter()
        .map(|s| {
            (0..n)
                .map(|k| {
                    let mut x = s.clone();
                    x[k] += 1;
                    index[&naive_stabilize(sp, &x, &mut rng).0]
                })
                .collect()
        })
        .collect();
    let g = states.len();
    let mut dist = vec![0.0; g];
    dist[index[&sp.max_stable().chips]] = 1.0;
    let mut out = vec![];
    for _ in 0..=steps {
        out.push(0.5 * dist.iter().map(|x| (x - 1.0 / g as f64).abs()).sum::<f64>());
        let mut nd: Vec<f64> = dist.iter().map(|x| p * x).collect();
        for (s, m) in dist.iter().enumerate() {
            for &t in &next[s] {
                nd[t] += p * m;
            }
        }
        dist = nd;
    }
    out
}

#[test]
fn exact_tv_below_half_l2_on_small_grid() {
    let sp = open("square", 3);
    let tv = brute_tv(&sp, 30);
    let steps: Vec<usize> = (0..=30).collect();
    let prof = l2_profile(&sp, &steps, 1_000_000).unwrap();
    for (s, t) in prof.samples.iter().zip(&tv) {
        assert!(*t <= 0.5 * s.l2.unwrap() + 1e-12, "N={}: {t} > ½·{}", s.n, s.l2.unwrap());
        assert!(s.tv_lower.unwrap() <= *t + 1e-12);
    }
    let l2_0 = prof.samples[0].l2.unwrap();
    assert!((l2_0 * l2_0 - (sp.group_order().to_string().parse::<f64>().unwrap() - 1.0)).abs() < 1e-6);
}

#[test]
fn characters_average_out_on_random_group_elements() {
    let sp = torus("square", 3);
    let chars = enumerate_dual(&sp, 1_000_000).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 4000;
    let samples: Vec<Vec<i64>> = (0..n)
        .map(|_| {
            let word: Vec<i64> = (0..sp.n()).map(|_| rng.random_range(0..60)).collect();
            sp.add(&sp.identity(), &Configuration::new(word)).unwrap().chips
        })
        .collect();
    for c in chars.iter().step_by(997).take(8) {
        let mean: num_complex::Complex64 = samples.iter().map(|s| e(c.pair(s))).sum::<num_complex::Complex64>() / n as f64;
        assert!(mean.norm() < 5.0 / (n as f64).sqrt(), "{}", mean.norm());
    }
}

#[test]
fn rho_hat_matches_iterated_walk() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for name in ["hex", "tetrakis", "triangular", "fcc"] {
        let t = tiling(name);
        let w = stopped_by_iteration(&t, &Vertex::origin(t.dim()), 1e-15);
        for _ in 0..20 {
            let x: Vec<f64> = (0..t.dim()).map(|_| rng.random_range(-0.5..0.5)).collect();
            let a = rho_hat(&t, &x).unwrap();
            let b = fourier_sum(&w, &x);
            assert!((a - b).norm() < 1e-10, "{name} at {x:?}: {a} vs {b}");
        }
    }
}

#[test]
fn g_hat_matches_torus_dft() {
    let m = 8;
    for name in ["hex", "triangular", "tetrakis"] {
        let t = tiling(name);
        let (x, vol) = cg_point_kernel(&t, m);
        for k in [(1, 0), (3, 5), (4, 4), (7, 2)] {
            let freq = [k.0 as f64 / m as f64, k.1 as f64 / m as f64];
            let dft: num_complex::Complex64 = (0..vol)
                .map(|i| {
                    let l = torus_coords(i, 2, m);
                    x[i] * e(-(l[0] as f64 * freq[0] + l[1] as f64 * freq[1]))
                })
                .sum();
            let gh = g_hat(&t, &freq).unwrap();
            assert!((dft - gh).norm() < 1e-8, "{name} {k:?}: {dft} vs {gh}");
        }
    }
}

#[test]
fn square_torus_greens_matches_walk_series() {
    let m = 64;
    let t = tiling("square");
    let g = build_torus(&t, m).unwrap();
    let mut eta = vec![0.0; g.n()];
    eta[0] = 1.0;
    eta[tilepile_core::tiling::torus_index(&[1, 0], m)] = -1.0;
    let series = lazy_series_greens(&g, &eta, 1e-14);
    let table = greens_torus(&t, m, &FunctionOnTiling::from_pairs([(Vertex::new(0, vec![0, 0]), 1.0), (Vertex::new(0, vec![1, 0]), -1.0)])).unwrap();
    for x in -5i64..=5 {
        for y in -5i64..=5 {
            if x.abs() + y.abs() > 5 {
                continue;
            }
            let k = tilepile_core::tiling::torus_index(&[x, y], m);
            assert!((series[k] - table.values[k]).abs() < 1e-8, "({x},{y}): {} vs {}", series[k], table.values[k]);
        }
    }
}

#[test]
fn enumeration_matches_nested_loops() {
    let t = tiling("square");
    let origin = Vertex::origin(2);
    let mut pool: Vec<Vertex> = graph_ball(&t, &origin, 2).into_iter().map(|p| p.0).collect();
    pool.sort_by(key_cmp);
    assert_eq!(pool.len(), 13);
    let n = pool.len();
    let mut raw: Vec<Vec<(Vertex, i64)>> = Vec::new();
    let mags = [-3i64, -2, -1, 1, 2, 3];
    let mut push = |sup: Vec<(usize, i64)>| {
        let l1: i64 = sup.iter().map(|p| p.1.abs()).sum();
        let sum: i64 = sup.iter().map(|p| p.1).sum();
        if l1 <= 3 && sum == 0 && pool[sup[0].0] == origin && sup[0].1 > 0 {
            raw.push(sup.into_iter().map(|(i, c)| (pool[i].clone(), c)).collect());
        }
    };
    for i in 0..n {
        for &a in &mags {
            for j in i + 1..n {
                for &b in &mags {
                    push(vec![(i, a), (j, b)]);
                    for k in j + 1..n {
                        for &c in &mags {
                            push(vec![(i, a), (j, b), (k, c)]);
                        }
                    }
                }
            }
        }
    }
    let lib = enumerate_prevectors(&t, &EnumOptions { b: 3, r0: 2, class: FunctionClass::C1, symmetry: None }).unwrap();
    let lib_set: BTreeSet<Vec<(Vertex, i64)>> = lib.iter().map(|p| p.coeffs.clone()).collect();
    let oracle_set: BTreeSet<Vec<(Vertex, i64)>> = raw
        .into_iter()
        .map(|c| tilepile_core::spectral::Prevector::new(&t, c).unwrap().canonical(&t).coeffs)
        .filter(|c| !c.is_empty())
        .collect();
    assert_eq!(lib_set, oracle_set);
    assert_eq!(lib.len(), lib_set.len());
}
