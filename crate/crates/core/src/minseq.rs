use crate::circle::{arc_dist, wrap};
use crate::error::{Error, Result};
use crate::hmap::{HMap, MinimalComponent};
use crate::spectral::EigenData;
use crate::substitution::{Label, LabelSource, Letter, PointedWord, PrefixSuffixStream, Substitution};
use num_complex::Complex;
use rayon::prelude::*;

pub const DEFAULT_TOL_MIN: f64 = 1e-9;
pub const SERIES_THRESHOLD: f64 = 1e-12;

/// `γ = z·Γ`.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaVector {
    pub gamma: Vec<Complex<f64>>,
    pub angle: f64,
    pub scale: f64,
}

impl GammaVector {
    pub fn new(eig: &EigenData<f64>, z: Complex<f64>) -> Self {
        GammaVector { gamma: eig.gamma.iter().map(|g| z * g).collect(), angle: wrap(z.im.atan2(z.re)), scale: z.norm() }
    }

    pub fn unit(eig: &EigenData<f64>, angle: f64) -> Self {
        Self::new(eig, Complex::new(angle.cos(), angle.sin()))
    }

    /// Slopes `exp(−ℜ γ_a)`.
    pub fn slopes(&self) -> Vec<f64> {
        self.gamma.iter().map(|g| (-g.re).exp()).collect()
    }
}

/// `γ_n(ω)` for `n` in `[lo, hi + 1]` of the window, indexed from `lo`.
pub fn gamma_sums(gamma: &[Complex<f64>], w: &PointedWord) -> Vec<Complex<f64>> {
    let mut out = Vec::with_capacity(w.word.len() + 1);
    let mut acc = Complex::new(0.0, 0.0);
    // Start from γ_{lo} = −(γ_{ω_lo} + … + γ_{ω_{−1}}).
    for &b in &w.word[..w.origin] {
        acc -= gamma[b.0];
    }
    out.push(acc);
    for &b in &w.word {
        acc += gamma[b.0];
        out.push(acc);
    }
    // Pin γ_0 = 0 exactly.
    out[w.origin] = Complex::new(0.0, 0.0);
    out
}

pub fn gamma_partial(gamma: &[Complex<f64>], w: &PointedWord, n: i64) -> Result<Complex<f64>> {
    let (lo, hi) = (w.lo(), w.hi() + 1);
    if n < lo || n > hi {
        return Err(Error::WindowExceeded { index: n, lo, hi });
    }
    let mut acc = Complex::new(0.0, 0.0);
    if n >= 0 {
        for m in 0..n {
            acc += gamma[w.get(m).expect("in window").0];
        }
    } else {
        for m in n..0 {
            acc -= gamma[w.get(m).expect("in window").0];
        }
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimalityReport {
    /// First index of `values`.
    pub lo: i64,
    pub hi: i64,
    /// `ℜ γ_n` for `n = lo..=hi`.
    pub values: Vec<f64>,
    pub min: f64,
    pub argmin: Vec<i64>,
    pub zero_set: Vec<i64>,
    pub tol: f64,
    pub pass: bool,
}

pub fn verify_minimal(w: &PointedWord, gamma: &[Complex<f64>], tol: f64) -> MinimalityReport {
    let sums = gamma_sums(gamma, w);
    let values: Vec<f64> = sums.iter().map(|z| z.re).collect();
    let lo = w.lo();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let argmin = values.iter().enumerate().filter(|(_, &v)| v == min).map(|(i, _)| lo + i as i64).collect();
    let zero_set = values.iter().enumerate().filter(|(_, v)| v.abs() <= tol).map(|(i, _)| lo + i as i64).collect();
    MinimalityReport { lo, hi: lo + values.len() as i64 - 1, min, argmin, zero_set, tol, pass: min >= -tol, values }
}

/// Pre-orbit of `H` inside a component, yielding stream entries.
struct InverseOrbit {
    hmap: HMap,
    sub: Substitution,
    comp: MinimalComponent,
    angle: f64,
    label: Label,
    started: bool,
}

impl LabelSource for InverseOrbit {
    fn next_label(&mut self) -> Result<Option<Label>> {
        if self.started {
            let (a, l) = self.hmap.inverse_step(&self.sub, &self.comp, self.angle, self.label)?;
            self.angle = a;
            self.label = l;
        }
        self.started = true;
        Ok(Some(self.label))
    }
}

pub struct Generated {
    pub stream: PrefixSuffixStream,
    /// Window `[−L, L]` with the dot at the leftmost global minimum.
    pub window: PointedWord,
    /// Position of the minimum relative to the reconstructed dot.
    pub shift: i64,
    pub depth: usize,
    pub report: MinimalityReport,
}

/// Unbounded stream from the inverse `H`-orbit of the component label at `angle`.
pub fn component_stream(hmap: &HMap, sub: &Substitution, comp: &MinimalComponent, angle: f64) -> Result<PrefixSuffixStream> {
    let labels = hmap.labels_at(sub, comp, angle);
    let label = *labels.first().ok_or(Error::DirectionOutsideComponent(angle))?;
    Ok(PrefixSuffixStream::unbounded(Box::new(InverseOrbit {
        hmap: hmap.clone(),
        sub: sub.clone(),
        comp: comp.clone(),
        angle: wrap(angle),
        label,
        started: false,
    })))
}

pub fn generate(hmap: &HMap, sub: &Substitution, eig: &EigenData<f64>, comp: &MinimalComponent, angle: f64, l: usize, tol: f64) -> Result<Generated> {
    let gamma = GammaVector::unit(eig, angle).gamma;
    let mut radius = 2 * l.max(16);
    loop {
        let mut stream = component_stream(hmap, sub, comp, angle)?;
        let rec = sub.reconstruct(&mut stream, radius)?;
        let w = rec.word;
        let sums = gamma_sums(&gamma, &w);
        let (mut best, mut at) = (f64::INFINITY, 0usize);
        for (i, z) in sums.iter().enumerate() {
            if z.re < best {
                best = z.re;
                at = i;
            }
        }
        let shift = at as i64 - w.origin as i64;
        let r = radius as i64;
        if shift.abs() + l as i64 <= r && at < w.word.len() {
            let moved = w.shifted(shift).expect("shift inside word");
            let window = moved.trim(l, l);
            let report = verify_minimal(&window, &gamma, tol);
            return Ok(Generated { stream, window, shift, depth: rec.depth, report });
        }
        radius *= 2;
    }
}

/// Whether two windows agree on their overlap after some shift.
pub fn shift_equivalent(a: &PointedWord, b: &PointedWord, min_overlap: usize) -> Option<i64> {
    let (la, lb) = (a.word.len() as i64, b.word.len() as i64);
    for k in -(lb - 1)..la {
        // Align b's index 0 with a's index k.
        let start = k.max(0);
        let end = (k + lb).min(la);
        if end - start < min_overlap as i64 {
            continue;
        }
        if (start..end).all(|i| a.word[i as usize] == b.word[(i - k) as usize]) {
            return Some(k - a.origin as i64 + b.origin as i64);
        }
    }
    None
}

/// `σⁿ(a)` with the dot after its lowest proper prefix (shortest on ties).
pub fn local_minimal_word(sub: &Substitution, a: Letter, n: usize, gamma: &[Complex<f64>]) -> PointedWord {
    let w = sub.apply(&[a], n);
    let mut acc = 0.0;
    let (mut best, mut at) = (0.0, 0usize);
    for (i, &b) in w.iter().enumerate().take(w.len().saturating_sub(1)) {
        acc += gamma[b.0].re;
        if acc < best {
            best = acc;
            at = i + 1;
        }
    }
    PointedWord::new(w, at)
}

#[derive(Clone, Debug, PartialEq, Eq, Copy)]
pub enum SeriesVerdict {
    Converging,
    Diverging,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesReport {
    /// `Σ_{|n|≤k} ℓ_n` for `k = 0..=K`.
    pub partial_sums: Vec<f64>,
    /// `ℓ_k + ℓ_{−k}` for `k = 0..=K`.
    pub increments: Vec<f64>,
    pub last_increment: f64,
    /// First `k` with increment below the threshold, if any.
    pub first_small: Option<usize>,
    /// Sum of the increments after `first_small` (the whole sum when it is absent).
    pub tail: f64,
    pub c1: f64,
    pub c2: f64,
    pub rho: f64,
    pub rho_fit: f64,
    pub max_term: f64,
    pub verdict: SeriesVerdict,
}

/// `log ℓ_n(ω)` for `n` in `[lo, hi + 1]`, indexed from `lo`.
pub fn log_products(w: &PointedWord, slopes: &[f64]) -> Vec<f64> {
    let logs: Vec<f64> = slopes.iter().map(|s| s.ln()).collect();
    let mut out = vec![0.0; w.word.len() + 1];
    let o = w.origin;
    for i in (0..o).rev() {
        out[i] = out[i + 1] - logs[w.word[i].0];
    }
    for i in o..w.word.len() {
        out[i + 1] = out[i] + logs[w.word[i].0];
    }
    out
}

pub fn series_sum(w: &PointedWord, slopes: &[f64], rho: f64) -> SeriesReport {
    assert!(slopes.iter().all(|&s| s > 0.0), "slopes must be positive");
    let logs = log_products(w, slopes);
    let o = w.origin as i64;
    let at = |n: i64| logs[(n + o) as usize];
    let k_max = (w.origin as i64).min(w.hi() + 1).max(0) as usize;
    let mut partial_sums = Vec::with_capacity(k_max + 1);
    let mut increments = Vec::with_capacity(k_max + 1);
    let mut s = 0.0;
    for k in 0..=k_max as i64 {
        let inc = if k == 0 { at(0).exp() } else { at(k).exp() + at(-k).exp() };
        s += inc;
        increments.push(inc);
        partial_sums.push(s);
    }
    let last_increment = *increments.last().expect("k = 0 present");
    let first_small = increments.iter().position(|&x| x < SERIES_THRESHOLD);
    let tail = match first_small {
        Some(k) => increments[k + 1..].iter().sum(),
        None => s,
    };
    let samples: Vec<(f64, f64)> = (1..=k_max as i64).flat_map(|k| [(k as f64, at(k)), (k as f64, at(-k))]).collect();
    let (c2, c1) = fit(&samples, rho);
    let rho_fit = (1..=300)
        .map(|i| i as f64 * 0.005)
        .map(|r| (r, fit_r2(&samples, r)))
        .fold((rho, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
        .0;
    let q = (k_max / 4).max(1);
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len().max(1) as f64;
    let non_decaying = k_max >= 4 && mean(&increments[k_max + 1 - q..]) >= mean(&increments[1..=q]);
    // Finite-horizon witness only: a small increment inside the window under a decaying fit.
    // `tail` shows how far the partial sums still move after it.
    let verdict = if first_small.is_some() && c2 > 0.0 {
        SeriesVerdict::Converging
    } else if c2 <= 0.0 || non_decaying {
        SeriesVerdict::Diverging
    } else {
        SeriesVerdict::Inconclusive
    };
    let max_term = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max).exp();
    SeriesReport { partial_sums, increments, last_increment, first_small, tail, c1, c2, rho, rho_fit, max_term, verdict }
}

/// Least squares `log ℓ ≈ log C₁ − C₂ |m|^ρ`; returns `(C₂, C₁)`.
fn fit(samples: &[(f64, f64)], rho: f64) -> (f64, f64) {
    let n = samples.len() as f64;
    if samples.is_empty() {
        return (0.0, 1.0);
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.0.powf(rho)).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(samples).map(|(x, s)| (x - mx) * (s.1 - my)).sum();
    if sxx == 0.0 {
        return (0.0, my.exp());
    }
    let slope = sxy / sxx;
    (-slope, (my - slope * mx).exp())
}

fn fit_r2(samples: &[(f64, f64)], rho: f64) -> f64 {
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.0.powf(rho)).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = samples.iter().map(|s| (s.1 - my) * (s.1 - my)).sum();
    let sxy: f64 = xs.iter().zip(samples).map(|(x, s)| (x - mx) * (s.1 - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return f64::NEG_INFINITY;
    }
    sxy * sxy / (sxx * syy)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirectionQuality {
    pub a: f64,
    pub horizon: usize,
    /// Per `ξ`: `(ξ, log of the running minimum of Aⁿ⟦ξ − β₀ⁿτ⟧ over the first and last quarters)`.
    pub per_point: Vec<(f64, f64, f64)>,
    /// Semi-decision at the finite horizon, never a proof of the liminf property.
    pub good_so_far: bool,
}

pub fn direction_quality(angle: f64, xis: &[f64], phi: f64, a: f64, horizon: usize) -> DirectionQuality {
    assert!(horizon >= 4 && a > 1.0, "horizon ≥ 4 and A > 1 required");
    let q = horizon / 4;
    let la = a.ln();
    let per_point: Vec<(f64, f64, f64)> = xis
        .par_iter()
        .map(|&xi| {
            let (mut first, mut last) = (f64::INFINITY, f64::INFINITY);
            for n in 0..=horizon {
                let d = arc_dist(xi, angle + n as f64 * phi);
                let v = if d <= 0.0 { f64::NEG_INFINITY } else { n as f64 * la + d.ln() };
                if n <= q {
                    first = first.min(v);
                }
                if n >= horizon - q {
                    last = last.min(v);
                }
            }
            (xi, first, last)
        })
        .collect();
    let good = per_point.iter().all(|&(_, f, l)| f.is_finite() && l.is_finite() && l - f >= 10f64.ln());
    DirectionQuality { a, horizon, per_point, good_so_far: good }
}
