#![allow(dead_code)]

use proptest::prelude::*;
use selfsim::examples::{ay_substitution, AY_GAMMA_ANCHOR};
use selfsim::spectral::{select_beta, BetaChoice, EigenData, GammaNorm};
use selfsim::{Letter, Substitution};

pub fn ay() -> (Substitution, EigenData<f64>) {
    let sub = ay_substitution();
    let e = select_beta(&sub, GammaNorm::Anchor { index: AY_GAMMA_ANCHOR, value: -1.0 }, BetaChoice::Largest).unwrap();
    (sub, e)
}

/// Random substitutions on 2–4 letters with images of length 1–4.
pub fn substitution() -> impl Strategy<Value = Substitution> {
    (2usize..=4)
        .prop_flat_map(|d| proptest::collection::vec(proptest::collection::vec(0..d, 1..=4), d))
        .prop_map(|imgs| {
            let d = imgs.len();
            let names = (0..d).map(|i| i.to_string()).collect();
            Substitution::new(names, imgs.into_iter().map(|w| w.into_iter().map(Letter).collect()).collect()).unwrap()
        })
}

/// Random AY word of length 0–12.
pub fn ay_word() -> impl Strategy<Value = Vec<Letter>> {
    proptest::collection::vec((0usize..9).prop_map(Letter), 0..12)
}

/// AY workbench with default settings; stages are computed on first use.
pub fn workbench() -> selfsim::pipeline::Workbench {
    selfsim::pipeline::Workbench::new(selfsim::pipeline::PipelineConfig::default()).unwrap()
}

pub struct AyStages {
    pub sub: Substitution,
    pub eig: EigenData<f64>,
    pub hmap: selfsim::hmap::HMap,
    pub limit: selfsim::hmap::ArcSet,
    pub n: usize,
    pub comps: Vec<selfsim::hmap::MinimalComponent>,
}

/// The AY skew product and its components, computed once per test binary.
pub fn stages() -> &'static AyStages {
    static CELL: std::sync::OnceLock<AyStages> = std::sync::OnceLock::new();
    CELL.get_or_init(|| {
        let wb = workbench();
        let (limit, n) = wb.limit_set().unwrap().clone();
        AyStages { sub: wb.sub.clone(), eig: wb.eig.clone(), hmap: wb.hmap().unwrap().clone(), limit, n, comps: wb.components().unwrap().clone() }
    })
}
