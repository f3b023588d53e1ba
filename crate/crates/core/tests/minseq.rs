mod common;

use num_complex::Complex;
use proptest::prelude::*;
use selfsim::minseq::{self, gamma_partial, local_minimal_word, series_sum, verify_minimal, GammaVector, SeriesVerdict};
use selfsim::{Letter, PointedWord};
use std::f64::consts::TAU;

fn pointed() -> impl Strategy<Value = PointedWord> {
    proptest::collection::vec((0usize..9).prop_map(Letter), 1..60).prop_flat_map(|w| {
        let n = w.len();
        (Just(w), 0..n).prop_map(|(w, o)| PointedWord::new(w, o))
    })
}

proptest! {
    #[test]
    fn cocycle_identity(w in pointed(), angle in 0.0..TAU, n in -30i64..30, m in -30i64..30) {
        let (_, e) = common::ay();
        let g = GammaVector::unit(&e, angle).gamma;
        let (Ok(gn), Some(shifted)) = (gamma_partial(&g, &w, n), w.shifted(n)) else { return Ok(()) };
        let (Ok(gnm), Ok(gm)) = (gamma_partial(&g, &w, n + m), gamma_partial(&g, &shifted, m)) else { return Ok(()) };
        prop_assert!((gnm - gn - gm).norm() < 1e-12);
    }

    #[test]
    fn gamma_sums_agree_with_partials(w in pointed(), angle in 0.0..TAU) {
        let (_, e) = common::ay();
        let g = GammaVector::unit(&e, angle).gamma;
        let sums = minseq::gamma_sums(&g, &w);
        for (i, z) in sums.iter().enumerate() {
            let n = w.lo() + i as i64;
            prop_assert!((z - gamma_partial(&g, &w, n).unwrap()).norm() < 1e-12);
        }
        prop_assert_eq!(sums[(-w.lo()) as usize], Complex::new(0.0, 0.0));
    }

    #[test]
    fn local_minimal_words_are_minimal(a in 0usize..9, n in 1usize..=6, angle in 0.0..TAU) {
        let (sub, e) = common::ay();
        let g = GammaVector::unit(&e, angle).gamma;
        let w = local_minimal_word(&sub, Letter(a), n, &g);
        prop_assert_eq!(&w.word, &sub.apply(&[Letter(a)], n));
        // Nonnegative on -m..=r-1-m; the full word's endpoint is not constrained.
        let sums = minseq::gamma_sums(&g, &w);
        prop_assert!(sums[..sums.len() - 1].iter().all(|z| z.re >= -1e-12));
    }

    #[test]
    fn shift_equivalence_recovers_the_shift(w in pointed(), k in 0usize..10) {
        prop_assume!(w.word.len() > 2 * k + 20);
        let inner = PointedWord::new(w.word[k..].to_vec(), 0);
        let found = minseq::shift_equivalent(&w, &inner, 10);
        prop_assert!(found.is_some());
        let s = found.unwrap();
        for n in inner.lo()..=inner.hi() {
            prop_assert_eq!(inner.get(n), w.get(n + s));
        }
    }
}

#[test]
fn generated_windows_are_minimal_and_leave_when_shifted() {
    let s = common::stages();
    for comp in &s.comps {
        for angle in [0.4, 2.0, 5.1] {
            let g = minseq::generate(&s.hmap, &s.sub, &s.eig, comp, angle, 500, 1e-9).unwrap();
            assert!(g.report.pass);
            assert!(g.window.lo() <= -500 && g.window.hi() >= 500);
            // A zero set this small means the sequence is pinned down uniquely.
            assert!(g.report.zero_set.len() <= 3, "{:?}", g.report.zero_set);
            let gamma = GammaVector::unit(&s.eig, angle).gamma;
            let first = gamma[g.window.get(0).unwrap().0].re;
            if first > 1e-6 {
                let moved = g.window.shifted(1).unwrap();
                assert!(!verify_minimal(&moved, &gamma, 1e-9).pass);
                let ell = minseq::log_products(&moved, &GammaVector::unit(&s.eig, angle).slopes());
                assert!(ell.iter().any(|&x| x > 0.0));
            }
        }
    }
}

#[test]
fn constant_slopes_diverge_linearly() {
    let w = PointedWord::new(vec![Letter(0); 401], 200);
    let r = series_sum(&w, &[1.0], 0.3);
    assert_eq!(*r.partial_sums.last().unwrap(), 401.0);
    assert_eq!(r.verdict, SeriesVerdict::Diverging);
}

#[test]
fn geometric_products_converge() {
    // Slope 2 on the left, 1/2 on the right: ℓ_n = 2^{-|n|} and the sum is 3.
    let mut word = vec![Letter(1); 200];
    word.extend(vec![Letter(0); 201]);
    let w = PointedWord::new(word, 200);
    let r = series_sum(&w, &[0.5, 2.0], 0.3);
    assert!((r.partial_sums.last().unwrap() - 3.0).abs() < 1e-12);
    assert!(r.first_small.is_some_and(|n| n < 50));
}
