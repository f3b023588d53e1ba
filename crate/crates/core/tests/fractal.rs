mod common;

use num_complex::Complex;
use proptest::prelude::*;
use selfsim::fractal::{closed_form, ValueFunction, ValueQuery};
use selfsim::spectral::EigenData;
use selfsim::{Letter, Substitution};
use std::f64::consts::TAU;

/// `min ℜ(τ·z)` over every label chain of the given depth.
fn brute(sub: &Substitution, e: &EigenData<f64>, a: Letter, angle: f64, depth: usize) -> f64 {
    let tau = Complex::from_polar(1.0, angle);
    let mut frontier = vec![(a, Complex::new(0.0, 0.0))];
    let mut s = Complex::new(1.0, 0.0);
    for _ in 0..depth {
        s *= e.beta_inv;
        frontier = frontier
            .into_iter()
            .flat_map(|(c, z)| sub.labels_of(c).iter().map(move |&l| (l.center, z + s * e.gamma_of(sub.prefix(l)))))
            .collect();
    }
    frontier.iter().map(|(_, z)| (tau * z).re).fold(f64::INFINITY, f64::min)
}

fn v(vf: &ValueFunction<'_, f64>, a: Letter, angle: f64, depth: usize) -> f64 {
    vf.v_depth(&ValueQuery { letter: a, angle, depth, label: None }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bellman_matches_enumeration(a in 0usize..9, angle in 0.0..TAU, depth in 1usize..=6) {
        let (sub, e) = common::ay();
        let vf = ValueFunction::new(&sub, &e);
        let got = v(&vf, Letter(a), angle, depth);
        prop_assert!((got - brute(&sub, &e, Letter(a), angle, depth)).abs() <= 1e-12);
    }

    #[test]
    fn truncations_bracket_deeper_values(a in 0usize..9, angle in 0.0..TAU, n in 1usize..30) {
        let (sub, e) = common::ay();
        let vf = ValueFunction::new(&sub, &e);
        let shallow = vf.restricted(Letter(a), angle, n).unwrap();
        let deep = vf.restricted(Letter(a), angle, n + 20).unwrap();
        for (s, d) in shallow.iter().zip(&deep) {
            prop_assert_eq!(s.0, d.0);
            let gap = s.1 - d.1;
            prop_assert!(gap >= -1e-12 && gap <= e.c * e.modulus.powi(-(n as i32)) + 1e-12, "{gap}");
        }
    }

    #[test]
    fn value_is_c_lipschitz(a in 0usize..9, x in 0.0..TAU, dx in -0.1f64..0.1) {
        let (sub, e) = common::ay();
        let vf = ValueFunction::new(&sub, &e);
        let d = 40;
        let gap = (v(&vf, Letter(a), x, d) - v(&vf, Letter(a), x + dx, d)).abs();
        prop_assert!(gap <= e.c * dx.abs() + 1e-12);
    }

    #[test]
    fn value_is_the_min_over_first_labels(a in 0usize..9, angle in 0.0..TAU, n in 2usize..15) {
        let (sub, e) = common::ay();
        let vf = ValueFunction::new(&sub, &e);
        let per = vf.restricted(Letter(a), angle, n).unwrap();
        prop_assert_eq!(per.len(), sub.labels_of(Letter(a)).len());
        let m = per.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        prop_assert!((m - v(&vf, Letter(a), angle, n)).abs() <= 1e-12);
    }

    #[test]
    fn extreme_chain_attains_the_value(a in 0usize..9, angle in 0.0..TAU) {
        let (sub, e) = common::ay();
        let vf = ValueFunction::new(&sub, &e);
        let n = 30;
        let chain: Vec<_> = vf.extreme_chain(Letter(a), angle, n).iter().map(|c| c.label).collect();
        let z = vf.partial_sum(&chain);
        let value = (Complex::from_polar(1.0, angle) * z).re;
        prop_assert!((value - v(&vf, Letter(a), angle, n)).abs() <= 2.0 * vf.bound(0) * e.modulus.powi(-(n as i32 - 1)));
    }
}

#[test]
fn ay_tie_sets_have_the_expected_sizes() {
    let (sub, e) = common::ay();
    let vf = ValueFunction::new(&sub, &e);
    let sizes: Vec<usize> = sub.letters().map(|a| vf.compute_psi(a, 4096, 1e-12).unwrap().len()).collect();
    for (a, n) in sizes.iter().enumerate() {
        match a {
            2 | 5 | 8 => {}
            _ => assert!(*n <= 2, "letter {}: {n}", a + 1),
        }
    }
    assert_eq!(sizes[7], 0);
    for (a, encs) in sub.letters().map(|a| (a, vf.compute_psi(a, 4096, 1e-12).unwrap())) {
        for p in encs {
            assert!(p.width <= 1e-12);
            let per = vf.restricted(a, p.mid(), 200).unwrap();
            let value = |l| per.iter().find(|x| x.0 == l).unwrap().1;
            assert!((value(p.labels.0) - value(p.labels.1)).abs() < 1e-10);
            // Two distinct extreme points realise the tie.
            let (d1, d2) = vf.separation(a, p.mid(), 40).unwrap();
            assert!(d1 > 1e-6 && d2.is_finite(), "{d1} {d2}");
        }
    }
}

#[test]
fn closed_forms_are_recognised() {
    let phi = common::ay().1.phi;
    assert_eq!(closed_form(std::f64::consts::FRAC_PI_2 + 2.0 * phi, phi).as_deref(), Some("i*b0^2"));
    assert_eq!(closed_form(0.123, phi), None);
}

#[test]
fn clouds_are_deterministic() {
    let (sub, e) = common::ay();
    let vf = ValueFunction::new(&sub, &e);
    let a = vf.render_cloud(Letter(1), 6, 1000, 3);
    let b = vf.render_cloud(Letter(1), 6, 1000, 3);
    assert_eq!(a.points, b.points);
    let mut lens = sub.lengths();
    let full = lens.letter(6, Letter(1)) as usize;
    assert_eq!(a.points.len(), full.min(1000));
    assert_eq!(a.sampled, full > 1000);
}

#[test]
fn depth_beyond_cap_is_refused() {
    let (sub, e) = common::ay();
    let vf = ValueFunction::with_cap(&sub, &e, 10);
    assert!(vf.v_depth(&ValueQuery { letter: Letter(0), angle: 0.0, depth: 11, label: None }).is_err());
}
