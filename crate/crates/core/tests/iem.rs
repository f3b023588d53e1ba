mod common;

use proptest::prelude::*;
use selfsim::iem::{self, ay_raw_map, induce, make_ay, IemSpec};
use selfsim::minseq::{GammaVector, SeriesVerdict};
use selfsim::pipeline::base_point;

fn golden_rotation() -> IemSpec<f64> {
    let a = (5f64.sqrt() - 1.0) / 2.0;
    IemSpec::from_lengths(&[1.0 - a, a], &[a, a - 1.0]).unwrap()
}

/// First return to `[0, cut)` by iterating the map.
fn first_return(t: &IemSpec<f64>, cut: f64, x: f64) -> (f64, usize) {
    let mut y = t.apply(x);
    let mut k = 1;
    while y >= cut {
        y = t.apply(y);
        k += 1;
    }
    (y, k)
}

proptest! {
    #[test]
    fn ay_pieces_reproduce_the_half_exchanges(x in 0.0f64..1.0) {
        let (t, alpha) = make_ay();
        prop_assert!((t.apply(x) - ay_raw_map(alpha, x)).abs() < 1e-12);
    }

    #[test]
    fn ay_map_is_a_bijection(x in 0.0f64..1.0) {
        let (t, _) = make_ay();
        prop_assert!((t.inverse(t.apply(x)) - x).abs() < 1e-12);
        prop_assert!((t.apply(t.inverse(x)) - x).abs() < 1e-12);
    }

    #[test]
    fn induced_map_is_the_first_return(x in 0.0f64..1.0) {
        let (t, alpha) = make_ay();
        let ind = induce(&t, alpha, iem::DEFAULT_RETURN_CAP).unwrap();
        let y = x * alpha;
        let (z, k) = first_return(&t, alpha, y);
        prop_assert!((ind.apply(y) - z).abs() < 1e-12);
        let p = ind.pieces.iter().rev().find(|p| p.start <= y).unwrap();
        prop_assert_eq!(p.word.len(), k);
    }

    #[test]
    fn golden_rotation_induces_a_rotation(x in 0.0f64..1.0) {
        let t = golden_rotation();
        let a = (5f64.sqrt() - 1.0) / 2.0;
        let ind = induce(&t, a, 1000).unwrap();
        let y = x * a;
        prop_assert!((ind.apply(y) - first_return(&t, a, y).0).abs() < 1e-12);
        prop_assert_eq!(ind.pieces.len(), 2);
    }
}

#[test]
fn ay_letter_lengths_form_the_left_perron_vector() {
    let (t, alpha) = make_ay();
    let lens = t.letter_lengths();
    assert!((lens.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    let m = selfsim::examples::ay_substitution().matrix();
    for b in 0..lens.len() {
        let mv: f64 = (0..lens.len()).map(|a| m[a][b] as f64 * lens[a]).sum();
        assert!((mv * alpha - lens[b]).abs() < 1e-12);
    }
}

#[test]
fn ay_is_self_similar_under_induction() {
    let (t, alpha) = make_ay();
    let sub = selfsim::examples::ay_substitution();
    let ind = induce(&t, alpha, iem::DEFAULT_RETURN_CAP).unwrap();
    assert!(ind.letters_by_image(&sub).is_some());
    let sim = iem::self_similarity_fit(&t, &ind, 1000, 1);
    assert!(sim.max_error <= 1e-10, "{}", sim.max_error);
    assert!((sim.scale - alpha).abs() < 1e-15);
}

#[test]
fn rejects_overlapping_pieces() {
    assert!(IemSpec::from_lengths(&[0.5, 0.5], &[0.25, -0.5]).is_err());
    assert!(IemSpec::from_lengths(&[0.5, 0.4], &[0.5, -0.5]).is_err());
}

#[test]
fn affine_extensions_of_a_minimal_sequence() {
    let wb = common::workbench();
    let (t, alpha) = make_ay();
    let sim = iem::self_similarity_fit(&t, &induce(&t, alpha, iem::DEFAULT_RETURN_CAP).unwrap(), 1000, 1);
    let runs = wb.sequences().unwrap();
    let run = runs
        .iter()
        .find(|r| {
            let slopes = GammaVector::unit(&wb.eig, r.angle).slopes();
            selfsim::minseq::series_sum(&r.generated.window.trim(2000, 2000), &slopes, wb.rho()).verdict == SeriesVerdict::Converging
        })
        .unwrap();
    let slopes = GammaVector::unit(&wb.eig, run.angle).slopes();
    let x0 = base_point(&t, &wb.sub, &sim, run).unwrap();
    let w = &run.generated.window;

    // The base point realises the window as its itinerary.
    let it = t.itinerary(x0, 500);
    for n in -500..=500 {
        assert_eq!(it.get(n), w.get(n), "index {n}");
    }

    let flat = iem::denjoy_affine(&t, x0, w, &slopes, wb.rho(), 2000, 0.0).unwrap();
    let d = iem::distance_to_base(&flat, &t, 2000, 3);
    assert!(d.sup_away < 1e-12 && d.mean < 1e-12, "{d:?}");

    let f = iem::denjoy_affine(&t, x0, w, &slopes, wb.rho(), 2000, 0.5).unwrap();
    assert!((f.total_gap_mass() - 0.5).abs() < 1e-10);
    assert!(f.tiling_residual() < 1e-12);
    let mut gaps = f.gaps.clone();
    gaps.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for g in gaps.windows(2) {
        assert!(g[0].0 + g[0].1 <= g[1].0 + 1e-15);
    }
    assert!(iem::semiconjugacy_check(&f, &t, 5000, 9) < 1e-9);
    assert!(f.gap_ratio_error(1000) < 1e-8);
    // h is monotone.
    let xs: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0 * 0.999_999).collect();
    assert!(xs.windows(2).all(|p| f.h(p[0]) <= f.h(p[1]) + 1e-15));
    for x in [0.1, 0.37, 0.8] {
        assert!((f.inverse(f.apply(x)) - x).abs() < 1e-12);
    }
    assert_eq!(f.slopes.len(), 9);
}

#[test]
fn constant_series_is_refused() {
    let (t, _) = make_ay();
    let w = t.itinerary(0.3, 600);
    let r = iem::denjoy_affine(&t, 0.3, &w, &[1.0; 9], 0.2, 500, 0.5);
    assert!(matches!(r, Err(selfsim::Error::SeriesDiverging)));
}
