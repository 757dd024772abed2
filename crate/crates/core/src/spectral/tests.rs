use super::*;
use crate::greens::FunctionClass;

fn t(name: &str) -> Tiling {
    Tiling::builtin(name).unwrap()
}

fn v(cell: usize, lat: &[i64]) -> Vertex {
    Vertex::new(cell, lat.to_vec())
}

fn lap_delta(tl: &Tiling, x: &Vertex) -> Vec<(Vertex, i64)> {
    let mut out = vec![(x.clone(), tl.degree_of(x) as i64)];
    for (w, m) in tl.neighbors(x) {
        out.push((w, -(m as i64)));
    }
    normalize(out)
}

#[test]
fn dipoles_at_b2() {
    let tl = t("square");
    let ps = enumerate_prevectors(&tl, &EnumOptions { b: 2, r0: 2, class: FunctionClass::C1, symmetry: None }).unwrap();
    assert!(!ps.is_empty());
    for p in &ps {
        assert_eq!(p.coeffs.len(), 2);
        assert_eq!(p.coeffs[0], (Vertex::origin(2), 1));
        assert_eq!(p.coeffs[1].1, -1);
    }
    // ball of radius 2 has 12 other points, half of them after the origin
    assert_eq!(ps.len(), 6);
}

#[test]
fn c2_candidates_have_no_moment() {
    let tl = t("hex");
    let oracle = ClassOracle::new(&tl).unwrap();
    let ps = enumerate_prevectors(&tl, &EnumOptions { b: 4, r0: 1, class: FunctionClass::C2, symmetry: None }).unwrap();
    assert!(!ps.is_empty());
    for p in ps {
        assert_eq!(p.class, FunctionClass::C2);
        assert!(oracle.moment(&p.coeffs).iter().all(|m| m.abs() < 1e-12));
    }
}

#[test]
fn reduction_removes_laplacian_images() {
    let tl = t("triangular");
    let base = vec![(v(0, &[0, 0]), 1), (v(0, &[1, 0]), -1)];
    let mut nu = base.clone();
    nu.extend(lap_delta(&tl, &v(0, &[3, -1])));
    let r = reduce_mod_i(&tl, &normalize(nu));
    assert_eq!(r, normalize(base));
    assert!(reduce_mod_i(&tl, &lap_delta(&tl, &v(0, &[2, 2]))).is_empty());
}

#[test]
fn canonical_forms_agree_across_translates() {
    let tl = t("hex");
    let p = Prevector::new(&tl, vec![(v(1, &[0, 0]), 1), (v(0, &[2, -1]), -1)]).unwrap();
    let q = p.translate(&[-4, 7]);
    assert_eq!(p.canonical(&tl), q.canonical(&tl));
    let neg = Prevector::new(&tl, p.coeffs.iter().map(|(x, c)| (x.clone(), -c)).collect()).unwrap();
    assert_eq!(p.canonical(&tl), neg.canonical(&tl));
}

#[test]
fn richardson_is_exact_for_power_laws() {
    let f = |m: usize| 1.25 + 3.0 / (m as f64).powi(2);
    let levels: Vec<(usize, f64)> = [16, 32, 64].iter().map(|&m| (m, f(m))).collect();
    let (val, err) = richardson(&levels, 2.0);
    assert!((val - 1.25).abs() < 1e-12 && err < 1e-12);
}

#[test]
fn sav_is_phase_invariant() {
    let xi: Vec<f64> = (0..50).map(|k| ((k * 37) % 11) as f64 / 13.0).collect();
    let shifted: Vec<f64> = xi.iter().map(|x| x + 0.3125).collect();
    assert!((sav(&xi) - sav(&shifted)).abs() < 1e-12);
    let all: Vec<usize> = (0..xi.len()).collect();
    assert!((sav(&xi) - sav_subset(&xi, &all)).abs() < 1e-10);
}

#[test]
fn savings_vanish_on_laplacian_images() {
    let tl = t("square");
    let ev = Evaluator::new(&tl, &[16, 32]).unwrap();
    let p = Prevector::new(&tl, lap_delta(&tl, &Vertex::origin(2))).unwrap();
    let r = f_eval(&ev, &p, None).unwrap();
    assert!(r.value.abs() < 1e-9, "{r:?}");
}

#[test]
fn weak_class_rejected() {
    let tl = t("square");
    let ev = Evaluator::new(&tl, &[16]).unwrap();
    let p = Prevector::new(&tl, vec![(v(0, &[0, 0]), 1), (v(0, &[1, 0]), -1)]).unwrap();
    assert!(matches!(f_eval(&ev, &p, None), Err(crate::Error::ClassMismatch { .. })));
}

#[test]
fn precision_target_enforced() {
    let tl = t("square");
    let ev = Evaluator::new(&tl, &[8, 12]).unwrap();
    let p = Prevector::new(
        &tl,
        vec![(v(0, &[0, 0]), 1), (v(0, &[1, 0]), -1), (v(0, &[0, 1]), -1), (v(0, &[1, 1]), 1)],
    )
    .unwrap();
    assert!(matches!(f_eval(&ev, &p, Some(1e-15)), Err(crate::Error::PrecisionUnreachable { .. })));
}

#[test]
fn reflection_groups() {
    let tl = t("square");
    let fam = tl.family().unwrap().clone();
    let corners = hyperplane_sets(&tl, &fam, 2).unwrap();
    assert_eq!(corners.len(), 4);
    for (hs, _) in &corners {
        assert_eq!(ReflectionGroup::new(&tl, &fam, hs).unwrap().order(), 4);
    }
    let tk = t("tetrakis");
    let fam = tk.family().unwrap().clone();
    let orders: Vec<usize> = hyperplane_sets(&tk, &fam, 2)
        .unwrap()
        .iter()
        .map(|(hs, _)| ReflectionGroup::new(&tk, &fam, hs).unwrap().order())
        .collect();
    assert!(orders.contains(&8), "{orders:?}");
    let z = t("z3");
    let fam = z.family().unwrap().clone();
    let all = hyperplane_sets(&z, &fam, 3).unwrap();
    assert_eq!(ReflectionGroup::new(&z, &fam, &all[0].0).unwrap().order(), 8);
}

#[test]
fn antisymmetrization() {
    let tl = t("square");
    let fam = tl.family().unwrap().clone();
    let hs = vec![Hyperplane { family: 0, level: 0, side: 1 }];
    let g = ReflectionGroup::new(&tl, &fam, &hs).unwrap();
    let nu = g.antisymmetrize(&[(v(0, &[1, 0]), 1)]).unwrap();
    assert_eq!(nu.len(), 2);
    assert!(g.is_antisymmetric(&nu).unwrap());
    // a seed on the wall cancels
    assert!(g.antisymmetrize(&[(v(0, &[0, 3]), 2)]).unwrap().is_empty());
    let ev = Evaluator::new(&tl, &[16]).unwrap();
    let zero = Prevector { coeffs: vec![], class: FunctionClass::C2, symmetry: Some(hs.clone()) };
    assert!(matches!(f_eval_antisymmetric(&ev, &zero, &g, None), Err(crate::Error::NotAntisymmetric)));
    let lop = Prevector::new(&tl, vec![(v(0, &[1, 0]), 1), (v(0, &[2, 0]), -1)]).unwrap();
    assert!(matches!(f_eval_antisymmetric(&ev, &lop, &g, None), Err(crate::Error::NotAntisymmetric)));
}

#[test]
fn factors_from_entries() {
    let tl = t("square");
    let opts = SearchOptions { levels: vec![16, 32], top_k: 4, ..SearchOptions::new(2) };
    let ev = Evaluator::new(&tl, &opts.levels).unwrap();
    let p = spectral_params(&ev, tl.family(), &[0, 1], &opts).unwrap();
    let f = spectral_factors(&p).unwrap();
    assert_eq!(f.factors.len(), 2);
    assert!((f.factors[0].value - 2.0 / p.gamma_j[0].value).abs() < 1e-12);
    assert!((f.factors[1].value - 1.0 / p.gamma_j[1].value).abs() < 1e-12);
    assert_eq!(f.controlling, 0);
}
