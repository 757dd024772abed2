use super::*;
use crate::tiling::{build_open, build_torus, FiniteSandpileGraph, Tiling};
use num_traits::ToPrimitive;

fn cycle3() -> Sandpile {
    Sandpile::new(FiniteSandpileGraph::from_edges(3, 0, &[(0, 1, 1), (1, 2, 1), (2, 0, 1)]).unwrap())
}

fn open_square(m: usize) -> Sandpile {
    let tl = Tiling::builtin("square").unwrap();
    Sandpile::new(build_open(&tl, tl.family().unwrap(), m).unwrap())
}

fn torus(name: &str, m: usize) -> Sandpile {
    Sandpile::new(build_torus(&Tiling::builtin(name).unwrap(), m).unwrap())
}

#[test]
fn cyclic_group_of_order_three() {
    let chars = enumerate_dual(&cycle3(), DUAL_CAP).unwrap();
    assert_eq!(chars.len(), 2);
    let (a, b) = (chars[0].mu_hat, chars[1].mu_hat);
    assert!((a - b.conj()).norm() < 1e-12);
    assert!(a.norm() < 1.0);
}

#[test]
fn snf_matches_determinant() {
    for sp in [torus("triangular", 2), torus("square", 3), open_square(4)] {
        let snf = smith_normal_form(&sp.reduced_laplacian()).unwrap();
        assert_eq!(snf.order(), sp.group_order());
        for w in snf.d.windows(2) {
            assert!((&w[1] % &w[0]) == num_bigint::BigInt::from(0));
        }
    }
}

#[test]
fn characters_satisfy_congruence() {
    let sp = open_square(4);
    let dual = DualGroup::new(&sp, DUAL_CAP).unwrap();
    let chars: Vec<DualCharacter> = dual.iter().collect();
    assert_eq!(chars.len() as u64, sp.group_order().to_u64().unwrap() - 1);
    let nv = dual.n_vertices();
    for c in &chars {
        assert_eq!(c.congruence_residual(&sp), 0.0);
        assert!(c.mu_hat.norm() < 1.0 - 1e-12);
        assert!((c.neg(nv).mu_hat - c.mu_hat.conj()).norm() < 1e-12);
        let bound = 8.0 * centered_norm_sq(c) / nv as f64;
        assert!(1.0 - c.mu_hat.norm() >= bound - 1e-12);
    }
    let mut seen: Vec<&Vec<i64>> = chars.iter().map(|c| &c.exact.as_ref().unwrap().0).collect();
    seen.sort();
    seen.dedup();
    assert_eq!(seen.len(), chars.len());
}

#[test]
fn distinguished_prevector_recovers_character() {
    let sp = torus("square", 3);
    let dual = DualGroup::new(&sp, DUAL_CAP).unwrap();
    let chol = CholeskyLaplacian::new(&sp).unwrap();
    for k in [1u64, 17, 400, dual.order() - 1] {
        let c = dual.character(k);
        let nu = distinguished_prevector(&sp, &c);
        let back = character_from_prevector(&chol, &nu);
        let diff = c.minus(&back, dual.n_vertices());
        assert!(diff.is_zero(), "{k}");
    }
}

#[test]
fn fourier_and_convolution_agree() {
    for sp in [open_square(3), torus("triangular", 2), torus("square", 3), cycle3()] {
        let dual = DualGroup::new(&sp, DUAL_CAP).unwrap();
        let chain = ExactChain::new(&sp, EXACT_CAP).unwrap();
        assert_eq!(chain.states as u64, dual.order());
        let steps: Vec<usize> = (0..60).map(|k| k * 3).collect();
        let l2 = l2_distances(&dual, &steps);
        assert!((l2[0] - ((dual.order() - 1) as f64).sqrt()).abs() < 1e-9);
        assert!(l2.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        for (s, l) in chain.profile(&steps).iter().zip(&l2) {
            assert!((s.l2 - l).abs() < 1e-9 * l.max(1.0), "{} {} {}", s.n, s.l2, l);
            assert!(s.tv <= 0.5 * l + 1e-9);
        }
    }
}

#[test]
fn witness_is_a_lower_bound() {
    for sp in [torus("square", 3), torus("triangular", 2), open_square(3)] {
        let dual = DualGroup::new(&sp, DUAL_CAP).unwrap();
        let set = default_witness_set(&sp, &dual);
        assert!(!set.is_empty());
        let w = Witness::new(&set, dual.n_vertices());
        assert!(w.bound(0).bound >= 0.0);
        let steps: Vec<usize> = (0..80).map(|k| k * 2).collect();
        let exact = ExactChain::new(&sp, EXACT_CAP).unwrap().profile(&steps);
        for s in exact {
            assert!(w.bound(s.n).bound <= s.tv + 1e-9, "N = {}", s.n);
        }
        assert_eq!(w.bound(1_000_000).bound, 0.0);
    }
}

#[test]
fn torus_translates_are_characters() {
    let sp = torus("triangular", 3);
    let dual = DualGroup::new(&sp, DUAL_CAP).unwrap();
    let best = dual.gap_minimizer().unwrap();
    let t = translate_on_torus(&best, 1, 2, 3, &[1, 2], dual.n_vertices());
    assert_eq!(t.congruence_residual(&sp), 0.0);
    assert!((t.mu_hat.norm() - best.mu_hat.norm()).abs() < 1e-12);
}

#[test]
fn monte_carlo_basics() {
    let sp = open_square(4);
    let dual = DualGroup::new(&sp, DUAL_CAP).unwrap();
    let obs = vec![dual.gap_minimizer().unwrap()];
    let opts = McOptions { chains: 200, steps: vec![0, 10, 40, 400], seed: 42 };
    let a = mc_mixing(&sp, &obs, &opts).unwrap();
    let b = mc_mixing(&sp, &obs, &opts).unwrap();
    assert_eq!(a, b);
    let z0 = crate::greens::e(obs[0].pair(&sp.max_stable().chips));
    let s0 = &a.samples[0];
    assert!((s0.observable_re.unwrap() - z0.re).abs() < 1e-12 && s0.stderr.unwrap() < 1e-12);
    // E e(ξ·σ_N) = e(ξ·σ_full) μ̂^N
    for s in &a.samples[1..] {
        let want = z0 * obs[0].mu_hat.powu(s.n as u32);
        let got = num_complex::Complex64::new(s.observable_re.unwrap(), s.observable_im.unwrap());
        assert!((got - want).norm() < 5.0 * s.stderr.unwrap().max(0.01), "{s:?}");
    }
}

#[test]
fn profile_csv_shape() {
    let p = l2_profile(&cycle3(), &[0, 1, 5], DUAL_CAP).unwrap();
    let rows = p.csv_rows();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][0], "0");
    assert!(rows[0][4].is_empty());
}

#[test]
fn group_too_large() {
    let sp = torus("square", 6);
    assert!(matches!(DualGroup::new(&sp, DUAL_CAP), Err(crate::Error::GroupTooLarge { .. })));
}

