mod common;

use proptest::prelude::*;
use selfsim::spectral::matmul_i64;
use selfsim::{Letter, PointedWord, Substitution};

proptest! {
    #[test]
    fn prefix_suffix_round_trip(sub in common::substitution(), a in 0usize..4, n in 1usize..=4, pick in any::<u64>()) {
        let a = Letter(a % sub.size());
        let word = sub.apply(&[a], n);
        let shift = pick % word.len() as u64;
        let mut st = sub.finite_prefix_suffix(a, n, shift).unwrap();
        prop_assert_eq!(st.entries().len(), n);
        let mut lens = sub.lengths();
        let s: u64 = st.entries().iter().enumerate().map(|(m, l)| lens.word(m, sub.prefix(*l))).sum();
        prop_assert_eq!(s, shift);
        let r = sub.reconstruct(&mut st, word.len()).unwrap();
        prop_assert_eq!(r.word.word, word);
        prop_assert_eq!(r.word.origin as u64, shift);
    }

    #[test]
    fn lengths_are_matrix_row_sums(sub in common::substitution(), n in 0usize..=5) {
        let d = sub.size();
        let mut p: Vec<Vec<i64>> = (0..d).map(|i| (0..d).map(|j| i64::from(i == j)).collect()).collect();
        for _ in 0..n {
            p = matmul_i64(&p, &sub.matrix());
        }
        let mut lens = sub.lengths();
        for a in sub.letters() {
            let row: i64 = p[a.0].iter().sum();
            prop_assert_eq!(sub.apply(&[a], n).len() as i64, row);
            prop_assert_eq!(lens.letter(n, a) as i64, row);
        }
    }

    #[test]
    fn labels_split_each_image(sub in common::substitution()) {
        for a in sub.letters() {
            let labels = sub.labels_of(a);
            prop_assert_eq!(labels.len(), sub.image(a).len());
            for &l in labels {
                prop_assert!(sub.is_valid_label(l));
                let mut w = sub.prefix(l).to_vec();
                w.push(l.center);
                w.extend_from_slice(sub.suffix(l));
                prop_assert_eq!(&w[..], sub.image(a));
            }
        }
    }

    #[test]
    fn apply_is_a_morphism(w in common::ay_word(), v in common::ay_word(), n in 0usize..=3) {
        let (sub, _) = common::ay();
        let mut wv = w.clone();
        wv.extend_from_slice(&v);
        let mut lhs = sub.apply(&w, n);
        lhs.extend(sub.apply(&v, n));
        prop_assert_eq!(sub.apply(&wv, n), lhs);
    }

    #[test]
    fn shifted_window_reads_the_same_letters(w in common::ay_word(), origin in 0usize..12, k in -6i64..6) {
        prop_assume!(!w.is_empty());
        let p = PointedWord::new(w.clone(), origin % w.len());
        if let Some(q) = p.shifted(k) {
            for n in q.lo()..=q.hi() {
                prop_assert_eq!(q.get(n), p.get(n + k));
            }
        }
    }
}

#[test]
fn ay_growth_approaches_the_perron_root() {
    let (sub, e) = common::ay();
    let mut lens = sub.lengths();
    for a in sub.letters() {
        let r = lens.letter(26, a) as f64 / lens.letter(25, a) as f64;
        assert!((r / e.perron - 1.0).abs() < 0.01, "letter {a:?}: ratio {r}");
    }
}

#[test]
fn ay_is_primitive_and_fibonacci_is_too() {
    assert!(selfsim::examples::ay_substitution().is_primitive());
    assert!(selfsim::examples::fibonacci_substitution().is_primitive());
    let reducible = Substitution::from_strings(&["a", "b"], &["a", "ab"]).unwrap();
    assert!(!reducible.is_primitive());
}

#[test]
fn pointed_words_round_trip_through_text() {
    let (sub, _) = common::ay();
    for s in ["35.46", ".12", "9.", "1789.2"] {
        let p = sub.pointed(s).unwrap();
        let text = sub.format_pointed(&p);
        assert_eq!(text.replace('·', "."), s);
        assert_eq!(sub.pointed(&text).unwrap(), p);
    }
    assert!(sub.pointed("3.5.4").is_err());
    assert!(sub.pointed("3x.4").is_err());
}

#[test]
fn json_round_trip() {
    let (sub, _) = common::ay();
    assert_eq!(Substitution::from_json(&sub.to_json()).unwrap(), sub);
}

#[test]
fn rejects_malformed_rules() {
    assert!(Substitution::from_strings(&["a", "b"], &["ab", ""]).is_err());
    assert!(Substitution::from_strings(&["a", "b"], &["ac", "a"]).is_err());
    assert!(Substitution::from_strings(&["a", "a"], &["a", "a"]).is_err());
}
