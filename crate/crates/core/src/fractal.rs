use crate::circle::{arc_dist, ccw, wrap};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::EigenData;
use crate::substitution::{Label, Letter, Substitution};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, TAU};

pub const DEFAULT_DEPTH_CAP: usize = 200;
pub const DEFAULT_PSI_GRID: usize = 4096;
pub const DEFAULT_PSI_TOL: f64 = 1e-12;
const FIRST_DEPTH: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValueQuery {
    pub letter: Letter,
    /// Direction angle in radians.
    pub angle: f64,
    pub depth: usize,
    /// Restricts the first level to this label of `letter`.
    pub label: Option<Label>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertifiedArgmin<T: Scalar> {
    /// `None` when no label wins by more than the bound.
    pub winner: Option<Label>,
    /// Labels whose value is within the bound of the best, best first.
    pub candidates: Vec<Label>,
    pub depth: usize,
    pub gap: T,
    pub bound: T,
}

impl<T: Scalar> CertifiedArgmin<T> {
    pub fn is_ambiguous(&self) -> bool {
        self.winner.is_none()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PsiEnclosure {
    pub letter: Letter,
    /// Counterclockwise arc `[lo, lo + width]`.
    pub lo: f64,
    pub width: f64,
    /// Winner just clockwise of the arc, then just counterclockwise.
    pub labels: (Label, Label),
    pub closed_form: Option<String>,
}

impl PsiEnclosure {
    pub fn hi(&self) -> f64 {
        wrap(self.lo + self.width)
    }

    pub fn mid(&self) -> f64 {
        wrap(self.lo + self.width / 2.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainEntry {
    pub angle: f64,
    pub label: Label,
    /// All labels tied at this step (length > 1 marks a branch point).
    pub candidates: Vec<Label>,
}

impl ChainEntry {
    pub fn is_branch(&self) -> bool {
        self.candidates.len() > 1
    }
}

#[derive(Clone, Debug)]
pub struct FractalCloud<T: Scalar> {
    pub letter: Letter,
    pub depth: usize,
    pub points: Vec<Complex<T>>,
    /// Label indices (global) of each point's chain, outermost first.
    pub chains: Vec<Vec<u16>>,
    pub sampled: bool,
}

/// Finite-depth value functions `v_a^{(n)}` for one substitution and eigen-data.
pub struct ValueFunction<'a, T: Scalar> {
    sub: &'a Substitution,
    eig: &'a EigenData<T>,
    cap: usize,
    /// `β⁻¹Γ(p)` per label, global label order.
    weights: Vec<Complex<T>>,
    inv_modulus: T,
}

impl<'a, T: Scalar> ValueFunction<'a, T> {
    pub fn new(sub: &'a Substitution, eig: &'a EigenData<T>) -> Self {
        Self::with_cap(sub, eig, DEFAULT_DEPTH_CAP)
    }

    pub fn with_cap(sub: &'a Substitution, eig: &'a EigenData<T>, cap: usize) -> Self {
        let weights = sub.labels().iter().map(|&l| eig.beta_inv * eig.gamma_of(sub.prefix(l))).collect();
        ValueFunction { sub, eig, cap, weights, inv_modulus: T::one() / eig.modulus }
    }

    pub fn substitution(&self) -> &'a Substitution {
        self.sub
    }

    pub fn eigen(&self) -> &'a EigenData<T> {
        self.eig
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// `C|β|^{-n} + 10·ε_num`.
    pub fn bound(&self, n: usize) -> T {
        self.eig.c * self.inv_modulus.powi(n as i32) + T::of(10.0 * self.eig.eps_num)
    }

    fn phi(&self) -> f64 {
        self.eig.phi.to_f64_lossy()
    }

    fn unit(angle: f64) -> Complex<T> {
        let a = T::of(wrap(angle));
        Complex::new(a.cos(), a.sin())
    }

    /// Values `v_c^{(n-k)}(β₀^{-k}τ)` at level `k = 1`, for every letter `c`.
    fn level_one(&self, angle: f64, n: usize) -> Vec<T> {
        let d = self.sub.size();
        let mut next = vec![T::zero(); d];
        let phi = self.phi();
        for k in (1..n).rev() {
            let tau = Self::unit(angle - k as f64 * phi);
            next = (0..d).map(|a| self.min_over_labels(Letter(a), tau, &next)).collect();
        }
        next
    }

    fn restricted_term(&self, l: Label, tau: Complex<T>, next: &[T]) -> T {
        let w = self.weights[self.sub.label_index(l)];
        (tau * w).re + self.inv_modulus * next[l.center.0]
    }

    fn min_over_labels(&self, a: Letter, tau: Complex<T>, next: &[T]) -> T {
        self.sub
            .labels_of(a)
            .iter()
            .map(|&l| self.restricted_term(l, tau, next))
            .fold(T::infinity(), T::min)
    }

    /// Restricted values `v^{(n)}_{a,L}(τ)` for every label `L` of `a`.
    pub fn restricted(&self, a: Letter, angle: f64, n: usize) -> Result<Vec<(Label, T)>> {
        if n > self.cap {
            return Err(Error::DepthCapExceeded { depth: n, cap: self.cap });
        }
        if n == 0 {
            return Ok(self.sub.labels_of(a).iter().map(|&l| (l, T::zero())).collect());
        }
        let next = self.level_one(angle, n);
        let tau = Self::unit(angle);
        Ok(self.sub.labels_of(a).iter().map(|&l| (l, self.restricted_term(l, tau, &next))).collect())
    }

    pub fn v_depth(&self, q: &ValueQuery) -> Result<T> {
        if q.depth == 0 {
            return Ok(T::zero());
        }
        let vals = self.restricted(q.letter, q.angle, q.depth)?;
        Ok(match q.label {
            Some(l) => vals.iter().find(|(m, _)| *m == l).map(|x| x.1).expect("label belongs to the letter"),
            None => vals.iter().map(|x| x.1).fold(T::infinity(), T::min),
        })
    }

    /// Smallest depth (doubling from 8 up to `max_depth`) at which one label wins by more than the bound.
    pub fn certified_argmin(&self, a: Letter, angle: f64, max_depth: usize) -> CertifiedArgmin<T> {
        let labels = self.sub.labels_of(a);
        if labels.len() == 1 {
            return CertifiedArgmin { winner: Some(labels[0]), candidates: vec![labels[0]], depth: 1, gap: T::infinity(), bound: self.bound(1) };
        }
        let max_depth = max_depth.min(self.cap);
        let mut n = FIRST_DEPTH.min(max_depth);
        loop {
            let mut vals = self.restricted(a, angle, n).expect("depth within cap");
            vals.sort_by(|x, y| x.1.partial_cmp(&y.1).expect("finite values"));
            let gap = vals[1].1 - vals[0].1;
            let bound = self.bound(n);
            if gap > bound {
                return CertifiedArgmin { winner: Some(vals[0].0), candidates: vec![vals[0].0], depth: n, gap, bound };
            }
            if n >= max_depth {
                let best = vals[0].1;
                let candidates = vals.iter().take_while(|x| x.1 - best <= bound).map(|x| x.0).collect();
                return CertifiedArgmin { winner: None, candidates, depth: n, gap, bound };
            }
            n = (2 * n).min(max_depth);
        }
    }

    /// Labels representing an extreme point in direction `τ`, step by step.
    pub fn extreme_chain(&self, a: Letter, angle: f64, length: usize) -> Vec<ChainEntry> {
        let mut out = Vec::with_capacity(length);
        let mut cur = a;
        let phi = self.phi();
        for m in 0..length {
            let th = wrap(angle - m as f64 * phi);
            let r = self.certified_argmin(cur, th, self.cap);
            let label = r.winner.unwrap_or(r.candidates[0]);
            out.push(ChainEntry { angle: th, label, candidates: r.candidates });
            cur = label.center;
        }
        out
    }

    /// `Σ_{m=1}^{n} β^{-m}Γ(p_m)` along a label chain, outermost first.
    pub fn partial_sum(&self, chain: &[Label]) -> Complex<T> {
        let mut z = Complex::new(T::zero(), T::zero());
        let mut scale = Complex::new(T::one(), T::zero());
        for &l in chain {
            scale *= self.eig.beta_inv;
            z += scale * self.eig.gamma_of(self.sub.prefix(l));
        }
        z
    }

    /// Elements of `Ψ_a`, each enclosed in an arc of width at most `tol`.
    pub fn compute_psi(&self, a: Letter, grid: usize, tol: f64) -> Result<Vec<PsiEnclosure>> {
        assert!(grid >= 32, "grid must have at least 32 points");
        if self.sub.labels_of(a).len() == 1 {
            return Ok(Vec::new());
        }
        let step = TAU / grid as f64;
        let winners: Vec<Option<Label>> = (0..grid)
            .into_par_iter()
            .map(|i| {
                let th = i as f64 * step;
                self.certified_argmin(a, th, self.cap)
                    .winner
                    .or_else(|| self.certified_argmin(a, th + step * 1e-3, self.cap).winner)
            })
            .collect();
        if let Some(i) = winners.iter().position(Option::is_none) {
            return Err(Error::UnresolvedRegion { letter: a.0, angle: i as f64 * step });
        }
        let winners: Vec<Label> = winners.into_iter().map(|w| w.expect("checked")).collect();
        let brackets: Vec<(f64, Label, Label)> = (0..grid)
            .filter(|&i| winners[i] != winners[(i + 1) % grid])
            .map(|i| (i as f64 * step, winners[i], winners[(i + 1) % grid]))
            .collect();
        let found: Vec<Vec<PsiEnclosure>> = brackets
            .par_iter()
            .map(|&(lo, wl, wr)| self.bisect(a, lo, step, wl, wr, tol))
            .collect::<Result<_>>()?;
        let mut out: Vec<PsiEnclosure> = found.into_iter().flatten().collect();
        for e in out.iter_mut() {
            e.closed_form = closed_form(e.mid(), self.phi());
        }
        out.sort_by(|x, y| x.lo.partial_cmp(&y.lo).expect("finite"));
        Ok(out)
    }

    fn bisect(&self, a: Letter, lo: f64, width: f64, wl: Label, wr: Label, tol: f64) -> Result<Vec<PsiEnclosure>> {
        let (mut lo, mut width) = (lo, width);
        while width > tol {
            if width < 1e-9 {
                if let Some(e) = self.secant_finish(a, lo, width, wl, wr, tol) {
                    return Ok(vec![e]);
                }
            }
            let mut probe = None;
            for frac in [0.5, 0.25, 0.75, 0.375, 0.625] {
                let r = self.certified_argmin(a, lo + frac * width, self.cap);
                if let Some(w) = r.winner {
                    probe = Some((frac, w));
                    break;
                }
            }
            let Some((frac, w)) = probe else {
                return Err(Error::UnresolvedRegion { letter: a.0, angle: wrap(lo + width / 2.0) });
            };
            let split = frac * width;
            if w == wl {
                lo += split;
                width -= split;
            } else if w == wr {
                width = split;
            } else {
                // A third label in between: two separate crossings.
                let mut left = self.bisect(a, lo, split, wl, w, tol)?;
                left.extend(self.bisect(a, lo + split, width - split, w, wr, tol)?);
                return Ok(left);
            }
        }
        Ok(vec![PsiEnclosure { letter: a, lo: wrap(lo), width, labels: (wl, wr), closed_form: None }])
    }

    /// Near a crossing the restricted values differ linearly; place a certified
    /// bracket of width just under `tol` around the interpolated zero.
    fn secant_finish(&self, a: Letter, lo: f64, width: f64, wl: Label, wr: Label, tol: f64) -> Option<PsiEnclosure> {
        let diff = |th: f64| {
            let v = self.restricted(a, th, self.cap).expect("depth within cap");
            let get = |l: Label| v.iter().find(|x| x.0 == l).expect("label of letter").1.to_f64_lossy();
            get(wl) - get(wr)
        };
        let (f0, f1) = (diff(lo), diff(lo + width));
        if !(f0 < 0.0 && f1 > 0.0) {
            return None;
        }
        let root = lo + width * (-f0) / (f1 - f0);
        let h = 0.4995 * tol;
        let left = self.certified_argmin(a, root - h, self.cap).winner;
        let right = self.certified_argmin(a, root + h, self.cap).winner;
        (left == Some(wl) && right == Some(wr)).then(|| PsiEnclosure { letter: a, lo: wrap(root - h), width: 2.0 * h, labels: (wl, wr), closed_form: None })
    }

    /// Distances between extreme points of the two tied sub-fractals at `ψ`.
    pub fn separation(&self, a: Letter, psi: f64, depth: usize) -> Result<(T, T)> {
        let r = self.certified_argmin(a, psi, self.cap);
        if !r.is_ambiguous() || r.candidates.len() < 2 {
            return Err(Error::NotATie { letter: a.0, angle: psi });
        }
        let phi = self.phi();
        let mut groups: Vec<Vec<Complex<T>>> = Vec::new();
        for &l in &r.candidates {
            let mut pts = Vec::new();
            self.collect_extremes(l.center, wrap(psi - phi), depth.saturating_sub(1), &mut vec![l], &mut pts, 64);
            groups.push(pts);
        }
        let mut d1 = T::infinity();
        let mut d2 = T::zero();
        for i in 0..groups.len() {
            for j in i + 1..groups.len() {
                for z in &groups[i] {
                    for w in &groups[j] {
                        let d = (*z - *w).norm();
                        d1 = d1.min(d);
                        d2 = d2.max(d);
                    }
                }
            }
        }
        Ok((d1, d2))
    }

    fn collect_extremes(&self, c: Letter, angle: f64, remaining: usize, chain: &mut Vec<Label>, out: &mut Vec<Complex<T>>, limit: usize) {
        if out.len() >= limit {
            return;
        }
        if remaining == 0 {
            out.push(self.partial_sum(chain));
            return;
        }
        let r = self.certified_argmin(c, angle, self.cap);
        for &l in &r.candidates {
            chain.push(l);
            self.collect_extremes(l.center, wrap(angle - self.phi()), remaining - 1, chain, out, limit);
            chain.pop();
        }
    }

    /// Points `z^{(depth)}_a(x)`; full enumeration when the count is at most `cap`, else `cap` random chains.
    pub fn render_cloud(&self, a: Letter, depth: usize, cap: usize, seed: u64) -> FractalCloud<T> {
        let count = self.sub.lengths().letter(depth, a);
        let zero = Complex::new(T::zero(), T::zero());
        if depth <= 20 && count <= cap as u64 {
            let mut points = Vec::with_capacity(count as usize);
            let mut chains = Vec::with_capacity(count as usize);
            let mut chain = Vec::with_capacity(depth);
            self.enumerate(a, depth, zero, Complex::new(T::one(), T::zero()), &mut chain, &mut points, &mut chains);
            return FractalCloud { letter: a, depth, points, chains, sampled: false };
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(cap);
        let mut chains = Vec::with_capacity(cap);
        for _ in 0..cap {
            let mut cur = a;
            let mut ch = Vec::with_capacity(depth);
            let mut labels = Vec::with_capacity(depth);
            for _ in 0..depth {
                let ls = self.sub.labels_of(cur);
                let l = ls[rng.gen_range(0..ls.len())];
                ch.push(self.sub.label_index(l) as u16);
                labels.push(l);
                cur = l.center;
            }
            points.push(self.partial_sum(&labels));
            chains.push(ch);
        }
        FractalCloud { letter: a, depth, points, chains, sampled: true }
    }

    #[allow(clippy::too_many_arguments)]
    fn enumerate(&self, c: Letter, remaining: usize, z: Complex<T>, scale: Complex<T>, chain: &mut Vec<u16>, points: &mut Vec<Complex<T>>, chains: &mut Vec<Vec<u16>>) {
        if remaining == 0 {
            points.push(z);
            chains.push(chain.clone());
            return;
        }
        let s = scale * self.eig.beta_inv;
        for &l in self.sub.labels_of(c) {
            chain.push(self.sub.label_index(l) as u16);
            self.enumerate(l.center, remaining - 1, z + s * self.eig.gamma_of(self.sub.prefix(l)), s, chain, points, chains);
            chain.pop();
        }
    }
}

/// Matches an angle against `±i·β₀^k`, `0 ≤ k ≤ 8`, within `1e-10`.
pub fn closed_form(angle: f64, phi: f64) -> Option<String> {
    for k in 0..=8 {
        for (sign, base) in [("", FRAC_PI_2), ("-", 3.0 * FRAC_PI_2)] {
            if arc_dist(angle, base + k as f64 * phi) <= 1e-10 {
                return Some(match k {
                    0 => format!("{sign}i"),
                    1 => format!("{sign}i*b0"),
                    _ => format!("{sign}i*b0^{k}"),
                });
            }
        }
    }
    None
}

/// Whether `x` lies on the counterclockwise arc from `lo` to `hi`.
pub fn in_ccw_arc(x: f64, lo: f64, hi: f64) -> bool {
    ccw(lo, x) <= ccw(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::{ay_substitution, AY_GAMMA_ANCHOR};
    use crate::spectral::{select_beta, BetaChoice, GammaNorm};

    fn ay() -> (Substitution, EigenData<f64>) {
        let s = ay_substitution();
        let e = select_beta(&s, GammaNorm::Anchor { index: AY_GAMMA_ANCHOR, value: -1.0 }, BetaChoice::Largest).unwrap();
        (s, e)
    }

    /// Independent oracle: `F^{(n)}_a = β^{-n} Γ(prefixes of σⁿ(a))`.
    fn brute(s: &Substitution, e: &EigenData<f64>, a: Letter, angle: f64, n: usize) -> f64 {
        let w = s.apply(&[a], n);
        let tau = Complex::new(angle.cos(), angle.sin());
        let scale = e.beta_inv.powi(n as i32);
        let mut g = Complex::new(0.0, 0.0);
        let mut best = f64::INFINITY;
        for &b in &w {
            best = best.min((tau * scale * g).re);
            g += e.gamma[b.0];
        }
        best
    }

    #[test]
    fn trivial_values() {
        let (s, e) = ay();
        let vf = ValueFunction::new(&s, &e);
        let q = ValueQuery { letter: Letter(3), angle: 1.0, depth: 0, label: None };
        assert_eq!(vf.v_depth(&q).unwrap(), 0.0);
        let q = ValueQuery { letter: Letter(7), angle: 2.0, depth: 1, label: None };
        assert_eq!(vf.v_depth(&q).unwrap(), 0.0);
        let q = ValueQuery { letter: Letter(0), angle: 0.0, depth: 5, label: None };
        assert!((vf.v_depth(&q).unwrap() - brute(&s, &e, Letter(0), 0.0, 5)).abs() < 1e-12);
        let q = ValueQuery { letter: Letter(0), angle: 0.0, depth: 201, label: None };
        assert!(vf.v_depth(&q).is_err());
    }

    #[test]
    fn argmin_examples() {
        let (s, e) = ay();
        let vf = ValueFunction::new(&s, &e);
        let r = vf.certified_argmin(Letter(7), 0.3, 200);
        assert_eq!(r.winner, Some(s.labels_of(Letter(7))[0]));
        let tie = FRAC_PI_2 + 2.0 * e.phi;
        assert!(vf.certified_argmin(Letter(1), tie, 200).is_ambiguous());
        let r = vf.certified_argmin(Letter(1), 0.0, 200);
        assert!(r.winner.is_some());
        assert!(r.depth <= 16);
    }

    #[test]
    fn extreme_chain_telescopes() {
        let (s, e) = ay();
        let vf = ValueFunction::new(&s, &e);
        let angle = 0.7;
        let chain = vf.extreme_chain(Letter(0), angle, 12);
        assert!(chain.iter().all(|c| !c.is_branch()));
        let labels: Vec<Label> = chain.iter().map(|c| c.label).collect();
        let z = vf.partial_sum(&labels);
        let tau = Complex::new(angle.cos(), angle.sin());
        let tail_dir = wrap(angle - 12.0 * e.phi);
        let tail = vf.v_depth(&ValueQuery { letter: labels[11].center, angle: tail_dir, depth: 150, label: None }).unwrap();
        let total = vf.v_depth(&ValueQuery { letter: Letter(0), angle, depth: 162, label: None }).unwrap();
        assert!(((tau * z).re + e.modulus.powi(-12) * tail - total).abs() < 1e-12);
        let v12 = vf.v_depth(&ValueQuery { letter: Letter(0), angle, depth: 12, label: None }).unwrap();
        let diff = (tau * z).re - v12;
        assert!(diff >= -1e-12 && diff <= vf.bound(12));
    }

    #[test]
    fn psi_for_letters_two_and_eight() {
        let (s, e) = ay();
        let vf = ValueFunction::new(&s, &e);
        assert!(vf.compute_psi(Letter(7), 256, 1e-12).unwrap().is_empty());
        let p = vf.compute_psi(Letter(1), 1024, 1e-12).unwrap();
        assert_eq!(p.len(), 2);
        let mut forms: Vec<String> = p.iter().map(|x| x.closed_form.clone().unwrap()).collect();
        forms.sort();
        assert_eq!(forms, vec!["-i*b0^2", "i*b0^2"]);
        assert!(p.iter().all(|x| x.width <= 1e-12));
        let mid = p[0].mid();
        let chain = vf.extreme_chain(Letter(1), mid, 3);
        assert!(chain[0].is_branch());
    }

    #[test]
    fn separation_is_positive_at_a_tie() {
        let (s, e) = ay();
        let vf = ValueFunction::new(&s, &e);
        let psi = FRAC_PI_2 + 2.0 * e.phi;
        let (d1, d2) = vf.separation(Letter(1), psi, 30).unwrap();
        assert!(d1 > 1e-3 && d1 <= d2);
        assert!(matches!(vf.separation(Letter(1), 0.0, 30), Err(Error::NotATie { .. })));
    }

    #[test]
    fn degenerate_prefix_gives_zero_separation() {
        // σ(a) = c z c with Γ(z) = −Γ(c): the first and last labels of a span identical sub-fractals.
        let s = Substitution::from_strings(&["a", "c", "z"], &["czc", "ac", "z"]).unwrap();
        let mut e = ay().1;
        e.gamma = vec![Complex::new(0.3, 0.8), Complex::new(1.0, -0.2), Complex::new(-1.0, 0.2)];
        let m = e.gamma.iter().map(|g| g.norm()).fold(0.0, f64::max);
        e.c = 2.0 * m / (e.modulus - 1.0);
        let vf = ValueFunction::new(&s, &e);
        let tied = (0..64)
            .map(|i| i as f64 * TAU / 64.0)
            .find(|&th| {
                let r = vf.certified_argmin(Letter(0), th, 60);
                r.is_ambiguous() && r.candidates.len() >= 2
            })
            .expect("identical sub-fractals tie somewhere");
        let (d1, d2) = vf.separation(Letter(0), tied, 20).unwrap();
        assert!(d1 < 1e-9 && d1 <= d2);
    }

    #[test]
    fn clouds() {
        let (s, e) = ay();
        let vf = ValueFunction::new(&s, &e);
        let c0 = vf.render_cloud(Letter(0), 0, 10, 1);
        assert_eq!(c0.points.len(), 1);
        assert_eq!(c0.points[0], Complex::new(0.0, 0.0));
        let c2 = vf.render_cloud(Letter(1), 12, 1 << 20, 1);
        let c3 = vf.render_cloud(Letter(2), 12, 1 << 20, 1);
        assert!(!c2.sampled);
        assert_eq!(c2.points.len() as u64, s.lengths().letter(12, Letter(1)));
        assert!(c2.points.iter().all(|z| z.norm() <= e.c + 1e-9));
        let h = |p: &[Complex<f64>], q: &[Complex<f64>]| p.iter().map(|z| q.iter().map(|w| (z - w).norm()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
        let dh = h(&c2.points, &c3.points).max(h(&c3.points, &c2.points));
        assert!(dh <= 2.0 * e.c * e.modulus.powi(-12));
        let sampled = vf.render_cloud(Letter(0), 30, 500, 7);
        assert!(sampled.sampled && sampled.points.len() == 500);
    }

    #[test]
    fn generic_over_single_precision() {
        let s = ay_substitution();
        let e: EigenData<f32> = select_beta(&s, GammaNorm::Anchor { index: AY_GAMMA_ANCHOR, value: -1.0 }, BetaChoice::Largest).unwrap();
        let vf = ValueFunction::new(&s, &e);
        let (s64, e64) = ay();
        for i in 0..16 {
            let th = i as f64 * 0.39;
            let v = vf.v_depth(&ValueQuery { letter: Letter(0), angle: th, depth: 8, label: None }).unwrap();
            assert!((v as f64 - brute(&s64, &e64, Letter(0), th, 8)).abs() < 1e-4);
        }
    }
}
