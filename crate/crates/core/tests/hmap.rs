mod common;

use proptest::prelude::*;
use selfsim::circle::wrap;
use selfsim::fractal::ValueFunction;
use selfsim::hmap::ArcSet;
use selfsim::Letter;
use std::f64::consts::TAU;

const EPS: f64 = 1e-9;

#[test]
fn letter_partitions_cover_the_circle() {
    let s = common::stages();
    for a in s.sub.letters() {
        let arcs = s.hmap.partitions[a.0].arcs();
        let total: f64 = arcs.iter().map(|x| x.len).sum();
        assert!((total - TAU).abs() < 1e-12, "letter {a:?}: {total}");
        assert!(arcs.iter().all(|x| x.label.parent == a));
    }
}

#[test]
fn full_set_has_one_circle_per_label() {
    let s = common::stages();
    let n = s.sub.labels().len();
    assert!((s.hmap.full().measure() - TAU * n as f64).abs() < 1e-9);
}

#[test]
fn limit_set_is_a_fixed_point_reached_at_thirty() {
    let s = common::stages();
    assert_eq!(s.n, 30);
    assert!(s.hmap.image(&s.sub, &s.limit).approx_eq(&s.limit, EPS));
    // Images only shrink from the full set.
    let mut x = s.hmap.full();
    for _ in 0..5 {
        let y = s.hmap.image(&s.sub, &x);
        assert!(y.measure() <= x.measure() + EPS);
        x = y;
    }
}

#[test]
fn components_are_disjoint_invariant_and_fill_the_limit() {
    let s = common::stages();
    assert_eq!(s.comps.len(), 2);
    assert!(s.comps[0].arcs.overlap(&s.comps[1].arcs) <= EPS);
    let mut union = ArcSet::empty(s.limit.n_labels());
    for c in &s.comps {
        let img = s.hmap.image(&s.sub, &c.arcs);
        assert!(img.approx_eq(&c.arcs, EPS));
        assert!((img.measure() - c.arcs.measure()).abs() < 1e-10);
        union = union.union(&c.arcs, EPS);
    }
    assert!(union.approx_eq(&s.limit, EPS));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn step_follows_extreme_chains(angle in 0.0..TAU, pick in any::<prop::sample::Index>()) {
        let s = common::stages();
        let vf = ValueFunction::new(&s.sub, &s.eig);
        let start = *pick.get(s.sub.labels());
        let chain = vf.extreme_chain(start.center, angle, 6);
        prop_assume!(chain.iter().all(|c| !c.is_branch()));
        let (mut th, mut l) = (angle, start);
        for c in &chain {
            (th, l) = s.hmap.step(th, l);
            prop_assert_eq!(l, c.label);
            prop_assert!((wrap(c.angle - s.eig.phi) - th).abs() < 1e-12 || (wrap(c.angle - s.eig.phi) - th).abs() > TAU - 1e-12);
        }
    }

    #[test]
    fn inverse_step_undoes_step_inside_components(angle in 0.0..TAU, k in 0usize..2) {
        let s = common::stages();
        let comp = &s.comps[k];
        for l in s.hmap.labels_at(&s.sub, comp, angle) {
            let (th, next) = s.hmap.step(angle, l);
            if let Ok(back) = s.hmap.inverse_step(&s.sub, comp, th, next) {
                prop_assert_eq!(back.1, l);
                prop_assert!(selfsim::circle::arc_dist(back.0, angle) < 1e-12);
            }
        }
    }

    #[test]
    fn orbits_reach_a_component(angle in 0.0..TAU, a in 0usize..9) {
        let s = common::stages();
        let l = s.sub.labels_of(Letter(a))[0];
        prop_assert!(s.hmap.arrival_time(angle, l, &s.sub, &s.comps, 200).is_some());
    }
}
