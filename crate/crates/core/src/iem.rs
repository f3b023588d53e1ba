use crate::error::{Error, Result};
use crate::minseq::{log_products, series_sum, SeriesVerdict};
use crate::scalar::Scalar;
use crate::substitution::{Letter, PointedWord, PrefixSuffixStream, Substitution, Word};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

pub const DEFAULT_THETA: f64 = 0.5;
pub const DEFAULT_RETURN_CAP: usize = 100_000;
pub const COLLISION_TOL: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq)]
pub struct IemPiece<T> {
    pub start: T,
    pub len: T,
    pub delta: T,
    pub letter: Letter,
}

impl<T: Scalar> IemPiece<T> {
    pub fn end(&self) -> T {
        self.start + self.len
    }
}

/// Piecewise translation of `[0, 1)`; several pieces may share a letter.
#[derive(Clone, Debug, PartialEq)]
pub struct IemSpec<T> {
    pieces: Vec<IemPiece<T>>,
    n_letters: usize,
    /// Piece indices sorted by image start.
    image_order: Vec<usize>,
}

fn two_sum<T: Scalar>(a: T, b: T) -> (T, T) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn clamp_unit<T: Scalar>(t: T) -> T {
    if t < T::zero() {
        T::zero()
    } else if t >= T::one() {
        T::one() - T::epsilon()
    } else {
        t
    }
}

impl<T: Scalar> IemSpec<T> {
    pub fn tolerance() -> T {
        T::of(1e-12f64.max(64.0 * T::UNIT_ROUNDOFF))
    }

    pub fn new(pieces: Vec<IemPiece<T>>, n_letters: usize) -> Result<Self> {
        let tol = Self::tolerance();
        let bad = |m: String| Err(Error::InvalidIem(m));
        if pieces.is_empty() {
            return bad("no pieces".into());
        }
        let mut end = T::zero();
        for (i, p) in pieces.iter().enumerate() {
            if p.len.is_nan() || p.len <= T::zero() || p.letter.0 >= n_letters {
                return bad(format!("piece {i} has non-positive length or unknown letter"));
            }
            if (p.start - end).abs() > tol {
                return bad(format!("piece {i} does not start where piece {} ends", i.max(1) - 1));
            }
            end = p.end();
        }
        if (end - T::one()).abs() > tol {
            return bad(format!("lengths sum to {end}"));
        }
        let mut image_order: Vec<usize> = (0..pieces.len()).collect();
        image_order.sort_by(|&a, &b| (pieces[a].start + pieces[a].delta).partial_cmp(&(pieces[b].start + pieces[b].delta)).expect("finite"));
        let mut end = T::zero();
        for &i in &image_order {
            let s = pieces[i].start + pieces[i].delta;
            if (s - end).abs() > tol {
                return bad(format!("images leave a gap or overlap at {s}"));
            }
            end = s + pieces[i].len;
        }
        if (end - T::one()).abs() > tol {
            return bad("images do not end at 1".into());
        }
        Ok(IemSpec { pieces, n_letters, image_order })
    }

    /// One piece per letter, in letter order.
    pub fn from_lengths(lengths: &[T], deltas: &[T]) -> Result<Self> {
        if lengths.len() != deltas.len() {
            return Err(Error::InvalidIem("lengths and translations differ in count".into()));
        }
        let mut start = T::zero();
        let mut pieces = Vec::with_capacity(lengths.len());
        for (a, (&len, &delta)) in lengths.iter().zip(deltas).enumerate() {
            pieces.push(IemPiece { start, len, delta, letter: Letter(a) });
            start += len;
        }
        Self::new(pieces, lengths.len())
    }

    pub fn pieces(&self) -> &[IemPiece<T>] {
        &self.pieces
    }

    pub fn n_letters(&self) -> usize {
        self.n_letters
    }

    pub fn letter_lengths(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.n_letters];
        for p in &self.pieces {
            out[p.letter.0] += p.len;
        }
        out
    }

    /// Interior discontinuities of the partition.
    pub fn breakpoints(&self) -> Vec<T> {
        self.pieces[1..].iter().map(|p| p.start).collect()
    }

    pub fn piece_index(&self, t: T) -> usize {
        self.pieces.partition_point(|p| p.start <= t).saturating_sub(1)
    }

    pub fn letter_at(&self, t: T) -> Letter {
        self.pieces[self.piece_index(t)].letter
    }

    pub fn apply(&self, t: T) -> T {
        clamp_unit(t + self.pieces[self.piece_index(t)].delta)
    }

    fn preimage_piece(&self, t: T) -> usize {
        let k = self.image_order.partition_point(|&i| self.pieces[i].start + self.pieces[i].delta <= t);
        self.image_order[k.saturating_sub(1)]
    }

    pub fn inverse(&self, t: T) -> T {
        clamp_unit(t - self.pieces[self.preimage_piece(t)].delta)
    }

    /// `Tⁿ(t)` for `n = lo..=hi` (`lo ≤ 0 ≤ hi`), with compensated summation of translations.
    pub fn orbit(&self, t: T, lo: i64, hi: i64) -> Vec<T> {
        assert!(lo <= 0 && hi >= 0);
        let mut fwd = Vec::with_capacity(hi as usize + 1);
        let (mut s, mut c) = (t, T::zero());
        fwd.push(t);
        for _ in 0..hi {
            let d = self.pieces[self.piece_index(s + c)].delta;
            (s, c) = self.comp_add(s, c, d);
            fwd.push(clamp_unit(s + c));
        }
        let mut back = Vec::with_capacity((-lo) as usize);
        let (mut s, mut c) = (t, T::zero());
        for _ in 0..(-lo) {
            let d = self.pieces[self.preimage_piece(s + c)].delta;
            (s, c) = self.comp_add(s, c, -d);
            back.push(clamp_unit(s + c));
        }
        back.reverse();
        back.extend(fwd);
        back
    }

    fn comp_add(&self, s: T, c: T, d: T) -> (T, T) {
        let (s1, e) = two_sum(s, d);
        two_sum(s1, c + e)
    }

    /// Two-sided itinerary on `[−l, l]`.
    pub fn itinerary(&self, t: T, l: usize) -> PointedWord {
        let pts = self.orbit(t, -(l as i64), l as i64);
        PointedWord::new(pts.iter().map(|&x| self.letter_at(x)).collect(), l)
    }

    pub fn cast<U: Scalar>(&self) -> Result<IemSpec<U>> {
        let c = |x: T| U::of(x.to_f64_lossy());
        let pieces = self.pieces.iter().map(|p| IemPiece { start: c(p.start), len: c(p.len), delta: c(p.delta), letter: p.letter }).collect();
        IemSpec::new(pieces, self.n_letters)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "n_letters": self.n_letters,
            "pieces": self.pieces.iter().map(|p| json!({
                "letter": p.letter.0,
                "start": crate::report::num17(p.start.to_f64_lossy()),
                "length": crate::report::num17(p.len.to_f64_lossy()),
                "translation": crate::report::num17(p.delta.to_f64_lossy()),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Root of `α + α² + α³ = 1` by Newton's method.
pub fn ay_alpha() -> f64 {
    let mut a = 0.5f64;
    for _ in 0..100 {
        let step = (a + a * a + a * a * a - 1.0) / (1.0 + 2.0 * a + 3.0 * a * a);
        a -= step;
        if step.abs() < 1e-17 {
            break;
        }
    }
    a
}

/// Exchange of the two halves of `[t0, t1)`; identity elsewhere.
pub fn half_exchange(t0: f64, t1: f64, t: f64) -> f64 {
    let h = (t1 - t0) / 2.0;
    let m = t0 + h;
    if t0 <= t && t < m {
        t + h
    } else if m <= t && t < t1 {
        t - h
    } else {
        t
    }
}

fn ay_stages(alpha: f64) -> [(f64, f64); 4] {
    let a2 = alpha + alpha * alpha;
    // In order of application.
    [(a2, 1.0), (alpha, a2), (0.0, alpha), (0.0, 1.0)]
}

/// The four-fold composition of half exchanges, evaluated directly.
pub fn ay_raw_map(alpha: f64, t: f64) -> f64 {
    ay_stages(alpha).iter().fold(t, |x, &(a, b)| half_exchange(a, b, x))
}

fn perron_left(sub: &Substitution) -> Vec<f64> {
    let m = sub.matrix();
    let d = m.len();
    let mut v = vec![1.0 / d as f64; d];
    for _ in 0..2000 {
        let mut w = vec![0.0; d];
        for (a, row) in m.iter().enumerate() {
            for (b, &x) in row.iter().enumerate() {
                // (Mᵗ v)_b = Σ_a M[a][b] v_a
                w[b] += x as f64 * v[a];
            }
        }
        let s: f64 = w.iter().sum();
        let next: Vec<f64> = w.iter().map(|x| x / s).collect();
        let diff = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if diff < 1e-17 {
            break;
        }
    }
    v
}

/// The Arnoux–Yoccoz map refined into the nine intervals coded by the built-in substitution.
pub fn make_ay() -> (IemSpec<f64>, f64) {
    let alpha = ay_alpha();
    let stages = ay_stages(alpha);
    let lambda = perron_left(&crate::examples::ay_substitution());
    let mut cuts = vec![0.0, 1.0];
    for (k, &(t0, t1)) in stages.iter().enumerate() {
        for x in [t0, (t0 + t1) / 2.0, t1] {
            // Half exchanges are involutions, so pulling back is applying them.
            cuts.push(stages[..k].iter().rev().fold(x, |y, &(a, b)| half_exchange(a, b, y)));
        }
    }
    let mut acc = 0.0;
    for l in &lambda {
        acc += l;
        cuts.push(acc);
    }
    cuts.retain(|&x| (0.0..=1.0).contains(&x));
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    cuts.dedup_by(|b, a| (*b - *a).abs() < 1e-12);
    *cuts.last_mut().expect("non-empty") = 1.0;
    let letter_of = |t: f64| {
        let mut acc = 0.0;
        for (a, l) in lambda.iter().enumerate() {
            acc += l;
            if t < acc {
                return Letter(a);
            }
        }
        Letter(lambda.len() - 1)
    };
    let mut pieces: Vec<IemPiece<f64>> = Vec::new();
    for w in cuts.windows(2) {
        let mid = (w[0] + w[1]) / 2.0;
        let delta = ay_raw_map(alpha, mid) - mid;
        let letter = letter_of(mid);
        match pieces.last_mut() {
            Some(p) if p.letter == letter && (p.delta - delta).abs() < 1e-12 => p.len = w[1] - p.start,
            _ => pieces.push(IemPiece { start: w[0], len: w[1] - w[0], delta, letter }),
        }
    }
    (IemSpec::new(pieces, lambda.len()).expect("the refinement is a bijection"), alpha)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InducedPiece<T> {
    pub start: T,
    pub len: T,
    pub delta: T,
    pub word: Word,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InductionResult<T> {
    pub cut: T,
    /// Pieces of the first-return map on `[0, cut)`, in spatial order.
    pub pieces: Vec<InducedPiece<T>>,
    /// Distinct return words, in order of first appearance.
    pub words: Vec<Word>,
    pub return_times: Vec<usize>,
    /// `R[a][b]` = occurrences of `a` in return word `b`.
    pub matrix: Vec<Vec<u64>>,
}

pub fn induce<T: Scalar>(spec: &IemSpec<T>, cut: T, cap: usize) -> Result<InductionResult<T>> {
    if !(cut > T::zero() && cut < T::one()) {
        return Err(Error::Config(format!("cut {cut} outside (0, 1)")));
    }
    let tol = T::of(1e-13f64.max(16.0 * T::UNIT_ROUNDOFF));
    // (a, b, offset, word): Tᵏ([a, b)) = [a, b) + offset.
    let mut work = vec![(T::zero(), cut, T::zero(), Word::new())];
    let mut done: Vec<InducedPiece<T>> = Vec::new();
    while let Some((a, b, off, mut word)) = work.pop() {
        if word.len() >= cap {
            return Err(Error::NonReturningOrbit(cap));
        }
        let p = &spec.pieces[spec.piece_index(a + off)];
        let e = p.end() - off;
        let b = if b > e + tol {
            work.push((e, b, off, word.clone()));
            e
        } else {
            b
        };
        word.push(p.letter);
        let off = off + p.delta;
        if b + off <= cut + tol {
            done.push(InducedPiece { start: a, len: b - a, delta: off, word });
        } else if a + off >= cut - tol {
            work.push((a, b, off, word));
        } else {
            let s = cut - off;
            work.push((s, b, off, word.clone()));
            done.push(InducedPiece { start: a, len: s - a, delta: off, word });
        }
    }
    done.sort_by(|x, y| x.start.partial_cmp(&y.start).expect("finite"));
    let mut pieces: Vec<InducedPiece<T>> = Vec::new();
    for p in done {
        match pieces.last_mut() {
            Some(q) if q.word == p.word && (q.delta - p.delta).abs() <= tol => q.len = p.start + p.len - q.start,
            _ if p.len <= tol => {}
            _ => pieces.push(p),
        }
    }
    let mut words: Vec<Word> = Vec::new();
    for p in &pieces {
        if !words.contains(&p.word) {
            words.push(p.word.clone());
        }
    }
    let mut matrix = vec![vec![0u64; words.len()]; spec.n_letters];
    for (b, w) in words.iter().enumerate() {
        for &a in w {
            matrix[a.0][b] += 1;
        }
    }
    let return_times = words.iter().map(|w| w.len()).collect();
    Ok(InductionResult { cut, pieces, words, return_times, matrix })
}

impl<T: Scalar> InductionResult<T> {
    fn piece_at(&self, t: T) -> &InducedPiece<T> {
        &self.pieces[self.pieces.partition_point(|p| p.start <= t).saturating_sub(1)]
    }

    /// First-return map on `[0, cut)`.
    pub fn apply(&self, t: T) -> T {
        t + self.piece_at(t).delta
    }

    /// Lengths per return word.
    pub fn word_lengths(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.words.len()];
        for p in &self.pieces {
            let b = self.words.iter().position(|w| *w == p.word).expect("word recorded");
            out[b] += p.len;
        }
        out
    }

    /// Induced map rescaled to `[0, 1)`, letters numbering the return words.
    pub fn rescaled(&self) -> Result<IemSpec<T>> {
        let pieces = self
            .pieces
            .iter()
            .map(|p| IemPiece {
                start: p.start / self.cut,
                len: p.len / self.cut,
                delta: p.delta / self.cut,
                letter: Letter(self.words.iter().position(|w| *w == p.word).expect("word recorded")),
            })
            .collect();
        IemSpec::new(pieces, self.words.len())
    }

    /// Letter `b` with `σ(b)` equal to each return word, when every word is an image.
    pub fn letters_by_image(&self, sub: &Substitution) -> Option<Vec<Letter>> {
        self.words.iter().map(|w| sub.letters().find(|&b| sub.image(b) == &w[..])).collect()
    }

    /// `R` with columns indexed by the letters whose images are the return words.
    pub fn matrix_by_letters(&self, sub: &Substitution) -> Option<Vec<Vec<u64>>> {
        let ls = self.letters_by_image(sub)?;
        let mut r = vec![vec![0u64; sub.size()]; self.matrix.len()];
        for (b, l) in ls.iter().enumerate() {
            for (row, m) in r.iter_mut().zip(&self.matrix) {
                row[l.0] = m[b];
            }
        }
        Some(r)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelfSimilarity {
    pub scale: f64,
    /// `r` in `t ↦ scale·((t + r) mod 1)`.
    pub rotation: f64,
    pub max_error: f64,
    pub samples: usize,
}

impl SelfSimilarity {
    pub fn embed(&self, t: f64) -> f64 {
        self.scale * (t + self.rotation).rem_euclid(1.0)
    }
}

/// Fits the rotation conjugating `T` to its rescaled first return on `[0, cut)`.
pub fn self_similarity_fit(spec: &IemSpec<f64>, induced: &InductionResult<f64>, samples: usize, seed: u64) -> SelfSimilarity {
    let x = induced.cut;
    let tb: Vec<f64> = std::iter::once(0.0).chain(spec.breakpoints()).collect();
    let ib: Vec<f64> = induced.pieces.iter().map(|p| p.start / x).collect();
    let near = |v: f64, pts: &[f64], eps: f64| pts.iter().any(|&p| crate::circle::arc_dist(v * std::f64::consts::TAU, p * std::f64::consts::TAU) < eps * std::f64::consts::TAU);
    let error = |r: f64, pts: &[f64]| {
        let s = SelfSimilarity { scale: x, rotation: r, max_error: 0.0, samples: 0 };
        pts.iter()
            .filter(|&&t| !near(t, &tb, 1e-9) && !near(s.embed(t) / x, &ib, 1e-9) && !near(t + r, &[0.0], 1e-9))
            .map(|&t| (induced.apply(s.embed(t)) - s.embed(spec.apply(t))).abs())
            .fold(0.0, f64::max)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probe: Vec<f64> = (0..200).map(|_| rng.gen::<f64>()).collect();
    let mut best = (f64::INFINITY, 0.0);
    for &u in &ib {
        for &v in &tb {
            let r = (u - v).rem_euclid(1.0);
            let e = error(r, &probe);
            if e < best.0 {
                best = (e, r);
            }
        }
    }
    let pts: Vec<f64> = (0..samples).map(|_| rng.gen::<f64>()).collect();
    SelfSimilarity { scale: x, rotation: best.1, max_error: error(best.1, &pts), samples }
}

/// The point whose itinerary is coded by a prefix-suffix stream, read from level `depth` down.
pub fn point_of_stream(spec: &IemSpec<f64>, sub: &Substitution, sim: &SelfSimilarity, stream: &mut PrefixSuffixStream, depth: usize) -> Result<f64> {
    let mut top = None;
    let mut d = depth;
    while top.is_none() {
        top = stream.get(sub, d)?;
        if top.is_none() {
            if d == 0 {
                return Err(Error::IncompatibleStream { index: 0, detail: "empty stream".into() });
            }
            d -= 1;
        }
    }
    let top = top.expect("found above");
    let lengths = spec.letter_lengths();
    let start: f64 = lengths[..top.center.0].iter().sum();
    let mut t = start + lengths[top.center.0] / 2.0;
    for m in (0..d).rev() {
        let l = stream.get(sub, m)?.expect("entries below a present one exist");
        t = sim.embed(t);
        for _ in 0..sub.prefix(l).len() {
            t = spec.apply(t);
        }
    }
    Ok(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AffineKind {
    Complement,
    /// Wandering gap at orbit index `n`.
    Gap(i64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AffinePiece {
    pub start: f64,
    pub len: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Image of `start`, kept exactly as constructed.
    pub image: f64,
    pub letter: Letter,
    pub kind: AffineKind,
    /// `h` on the piece: the collapsed point for a gap, the left preimage for a complement segment.
    pub base: f64,
}

/// Truncated blow-up of `T` along one orbit, with its collapsing map `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineIemSpec {
    pub pieces: Vec<AffinePiece>,
    /// `ℓ_a`, the slope on each gap lying over `I_a`.
    pub slopes: Vec<f64>,
    pub theta: f64,
    pub l: usize,
    /// `Tⁿ(π(ω))` for `n = −L..=L`.
    pub orbit: Vec<f64>,
    /// `(start, length)` of the gap over each orbit point.
    pub gaps: Vec<(f64, f64)>,
    /// `ℓ_n(ω)` for `n = −L..=L`.
    pub ell: Vec<f64>,
    image_order: Vec<usize>,
}

pub fn denjoy_affine(spec: &IemSpec<f64>, x0: f64, window: &PointedWord, gamma_slopes: &[f64], rho: f64, l: usize, theta: f64) -> Result<AffineIemSpec> {
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::Config(format!("theta {theta} outside [0, 1)")));
    }
    let li = l as i64;
    if window.lo() > -li || window.hi() < li {
        return Err(Error::WindowExceeded { index: li, lo: window.lo(), hi: window.hi() });
    }
    let win = window.trim(l, l);
    if theta > 0.0 && series_sum(&win, gamma_slopes, rho).verdict != SeriesVerdict::Converging {
        return Err(Error::SeriesDiverging);
    }
    let logs = log_products(&win, gamma_slopes);
    let ell: Vec<f64> = logs[..2 * l + 1].iter().map(|x| x.exp()).collect();
    let total: f64 = ell.iter().sum();
    let g = theta / total;
    let orbit = spec.orbit(x0, -li, li);
    let mut order: Vec<usize> = (0..orbit.len()).collect();
    order.sort_by(|&a, &b| orbit[a].partial_cmp(&orbit[b]).expect("finite"));
    for w in order.windows(2) {
        if orbit[w[1]] - orbit[w[0]] < COLLISION_TOL {
            return Err(Error::OrbitCollision(w[0] as i64 - li, w[1] as i64 - li));
        }
    }
    let glen: Vec<f64> = ell.iter().map(|e| g * e).collect();
    // Gap mass strictly left of each sorted position.
    let mut before = vec![0.0; order.len() + 1];
    for (k, &i) in order.iter().enumerate() {
        before[k + 1] = before[k] + glen[i];
    }
    let sorted: Vec<f64> = order.iter().map(|&i| orbit[i]).collect();
    let blow_after = |t: f64| (1.0 - theta) * t + before[sorted.partition_point(|&x| x <= t)];
    let mut rank = vec![0usize; orbit.len()];
    for (k, &i) in order.iter().enumerate() {
        rank[i] = k;
    }
    let gaps: Vec<(f64, f64)> = (0..orbit.len()).map(|i| ((1.0 - theta) * orbit[i] + before[rank[i]], glen[i])).collect();

    let mut pieces = Vec::new();
    // Complement segments between consecutive breakpoints of T, orbit points and T⁻¹(x_{−L}).
    // Marks: `Some(i)` for orbit point `i`, `Some(len)` for the preimage of the first one.
    let pre = spec.inverse(orbit[0]);
    let mut marks: Vec<(f64, Option<usize>)> = spec.pieces.iter().map(|p| (p.start, None)).collect();
    marks.extend(order.iter().map(|&i| (orbit[i], Some(i))));
    marks.push((pre, Some(orbit.len())));
    marks.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
    marks.push((1.0, None));
    for w in marks.windows(2) {
        let (b0, b1) = (w[0].0, w[1].0);
        if b1 - b0 <= 0.0 || theta >= 1.0 {
            continue;
        }
        let start = blow_after(b0);
        let p = &spec.pieces[spec.piece_index(b0)];
        let image = match w[0].1 {
            Some(i) if i + 1 < orbit.len() => gaps[i + 1].0 + gaps[i + 1].1,
            Some(i) if i == orbit.len() => gaps[0].0 + gaps[0].1,
            _ => blow_after(clamp_unit(b0 + p.delta)),
        };
        pieces.push(AffinePiece { start, len: (1.0 - theta) * (b1 - b0), slope: 1.0, intercept: image - start, image, letter: p.letter, kind: AffineKind::Complement, base: b0 });
    }
    if theta > 0.0 {
        for i in 0..orbit.len() {
            let (s, len) = gaps[i];
            let letter = win.word[i];
            let (slope, target) = if i + 1 < orbit.len() { (gamma_slopes[letter.0], gaps[i + 1].0) } else { (glen[0] / len, gaps[0].0) };
            pieces.push(AffinePiece { start: s, len, slope, intercept: target - slope * s, image: target, letter, kind: AffineKind::Gap(i as i64 - li), base: orbit[i] });
        }
    }
    // Gaps shorter than an ulp share their start with the next segment; they sort first.
    let tie = |p: &AffinePiece| matches!(p.kind, AffineKind::Complement);
    pieces.sort_by(|a, b| a.start.partial_cmp(&b.start).expect("finite").then(tie(a).cmp(&tie(b))));
    let mut image_order: Vec<usize> = (0..pieces.len()).collect();
    image_order.sort_by(|&a, &b| pieces[a].image.partial_cmp(&pieces[b].image).expect("finite").then(tie(&pieces[a]).cmp(&tie(&pieces[b]))));
    let f = AffineIemSpec { pieces, slopes: gamma_slopes.to_vec(), theta, l, orbit, gaps, ell, image_order };
    let residual = f.tiling_residual();
    if residual > 1e-9 {
        return Err(Error::InvalidIem(format!("blown-up map is not a bijection (residual {residual:e})")));
    }
    Ok(f)
}

impl AffineIemSpec {
    fn piece_index(&self, x: f64) -> usize {
        self.pieces.partition_point(|p| p.start <= x).saturating_sub(1)
    }

    pub fn apply(&self, x: f64) -> f64 {
        let p = &self.pieces[self.piece_index(x)];
        clamp_unit(p.slope * x + p.intercept)
    }

    pub fn inverse(&self, y: f64) -> f64 {
        let k = self.image_order.partition_point(|&i| self.pieces[i].image <= y);
        let p = &self.pieces[self.image_order[k.saturating_sub(1)]];
        clamp_unit((y - p.intercept) / p.slope)
    }

    /// The monotone collapsing map.
    pub fn h(&self, x: f64) -> f64 {
        let p = &self.pieces[self.piece_index(x)];
        match p.kind {
            AffineKind::Gap(_) => p.base,
            AffineKind::Complement => p.base + (x - p.start) / (1.0 - self.theta),
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces.iter().map(|p| p.start).collect()
    }

    pub fn total_gap_mass(&self) -> f64 {
        self.gaps.iter().map(|g| g.1).sum()
    }

    /// Largest mismatch between consecutive domain pieces and consecutive image pieces.
    pub fn tiling_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        let mut end = 0.0;
        for p in &self.pieces {
            r = r.max((p.start - end).abs());
            end = p.start + p.len;
        }
        r = r.max((end - 1.0).abs());
        let mut end = 0.0;
        for &i in &self.image_order {
            let p = &self.pieces[i];
            r = r.max((p.image - end).abs());
            end = p.image + p.slope * p.len;
        }
        r.max((end - 1.0).abs())
    }

    /// Piece carrying `[a, a + len)` forward (`image = false`) or backward; prefers a gap of that length on ties.
    /// The width is passed separately since gaps can be narrower than an ulp of `a`.
    fn carrier(&self, a: f64, len: f64, image: bool) -> &AffinePiece {
        let key = |p: &AffinePiece| if image { p.image } else { p.start };
        let width = |p: &AffinePiece| if image { p.len * p.slope } else { p.len };
        let seq: Vec<&AffinePiece> = if image { self.image_order.iter().map(|&i| &self.pieces[i]).collect() } else { self.pieces.iter().collect() };
        let lo = seq.partition_point(|p| key(p) < a - 1e-12);
        let hi = seq.partition_point(|p| key(p) <= a + 1e-12);
        let gap = seq[lo..hi]
            .iter()
            .find(|p| matches!(p.kind, AffineKind::Gap(_)) && (width(p) - len).abs() <= 1e-6 * len.max(f64::MIN_POSITIVE));
        let mid = a + len / 2.0;
        gap.copied().unwrap_or_else(|| seq[seq.partition_point(|p| key(p) <= mid).saturating_sub(1)])
    }

    /// Largest `|(fⁿ(J₀) length)/(J₀ length) − ℓ_n|` over `|n| ≤ steps`.
    pub fn gap_ratio_error(&self, steps: usize) -> f64 {
        let (s0, g0) = self.gaps[self.l];
        let idx = |n: i64| (n + self.l as i64) as usize;
        let mut worst: f64 = 0.0;
        // Track (left end, length); lengths only ever get multiplied.
        let (mut a, mut len) = (s0, g0);
        for n in 1..=steps as i64 {
            let p = self.carrier(a, len, false);
            (a, len) = (p.image + p.slope * (a - p.start), p.slope * len);
            worst = worst.max((len / g0 - self.ell[idx(n)]).abs());
        }
        let (mut a, mut len) = (s0, g0);
        for n in 1..=steps as i64 {
            let p = self.carrier(a, len, true);
            (a, len) = (p.start + (a - p.image) / p.slope, len / p.slope);
            worst = worst.max((len / g0 - self.ell[idx(-n)]).abs());
        }
        worst
    }

    pub fn to_json(&self) -> Value {
        use crate::report::num17;
        json!({
            "theta": num17(self.theta),
            "truncation": self.l,
            "slopes": self.slopes.iter().map(|&s| num17(s)).collect::<Vec<_>>(),
            "total_gap_mass": num17(self.total_gap_mass()),
            "pieces": self.pieces.iter().map(|p| json!({
                "start": num17(p.start),
                "length": num17(p.len),
                "slope": num17(p.slope),
                "intercept": num17(p.intercept),
                "letter": p.letter.0,
                "gap": match p.kind { AffineKind::Gap(n) => Value::from(n), AffineKind::Complement => Value::Null },
            })).collect::<Vec<_>>(),
        })
    }
}

/// `max |h(f(x)) − T(h(x))|` over seeded samples, skipping points within `1e−9` of a breakpoint.
pub fn semiconjugacy_check(f: &AffineIemSpec, spec: &IemSpec<f64>, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..samples).map(|_| rng.gen::<f64>()).collect();
    let bps = f.breakpoints();
    xs.par_iter()
        .filter(|&&x| {
            let k = bps.partition_point(|&b| b <= x);
            let near = |i: usize| bps.get(i).is_some_and(|&b| (b - x).abs() < 1e-9);
            !(near(k) || (k > 0 && near(k - 1)))
        })
        .map(|&x| {
            let d = (f.h(f.apply(x)) - spec.apply(f.h(x))).abs();
            d.min(1.0 - d)
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaseDistance {
    pub theta: f64,
    /// `sup |f − T|` over samples farther than `θ` from every breakpoint of `T`.
    pub sup_away: f64,
    pub considered: usize,
    /// Mean of `|f − T|` over all samples.
    pub mean: f64,
}

/// Distance between the blow-up and the base map. Breakpoints move by at most `θ`,
/// so only their `θ`-neighbourhoods see jump-sized differences.
pub fn distance_to_base(f: &AffineIemSpec, spec: &IemSpec<f64>, samples: usize, seed: u64) -> BaseDistance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bps = spec.breakpoints();
    bps.extend([0.0, 1.0]);
    let (mut sup, mut considered, mut total) = (0.0f64, 0usize, 0.0);
    for _ in 0..samples {
        let x = rng.gen::<f64>();
        let d = (f.apply(x) - spec.apply(x)).abs();
        let d = d.min(1.0 - d);
        total += d;
        if bps.iter().all(|&b| (b - x).abs() > f.theta + 1e-9) {
            sup = sup.max(d);
            considered += 1;
        }
    }
    BaseDistance { theta: f.theta, sup_away: sup, considered, mean: total / samples.max(1) as f64 }
}

/// Smallest distance between the collapsed gap orbits of two blow-ups.
pub fn orbit_separation(a: &AffineIemSpec, b: &AffineIemSpec) -> f64 {
    let mut s = b.orbit.clone();
    s.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    a.orbit
        .iter()
        .map(|&x| {
            let k = s.partition_point(|&y| y < x);
            let l = if k > 0 { x - s[k - 1] } else { f64::INFINITY };
            let r = s.get(k).map_or(f64::INFINITY, |&y| y - x);
            l.min(r)
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::ay_substitution;

    #[test]
    fn alpha_and_half_exchange() {
        let a = ay_alpha();
        assert!((a - 0.543689012).abs() < 1e-9);
        assert!((a + a * a + a * a * a - 1.0).abs() < 1e-15);
        assert_eq!(half_exchange(0.2, 0.4, 0.1), 0.1);
        assert_eq!(half_exchange(0.2, 0.4, 0.7), 0.7);
        assert!((half_exchange(0.2, 0.4, 0.25) - 0.35).abs() < 1e-15);
    }

    #[test]
    fn ay_refinement_matches_the_composition() {
        let (t, a) = make_ay();
        assert_eq!(t.n_letters(), 9);
        for i in 1..1000 {
            let x = i as f64 / 1000.0 + 1e-4;
            if x < 1.0 {
                assert!((t.apply(x) - ay_raw_map(a, x)).abs() < 1e-12, "{x}");
            }
        }
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(IemSpec::from_lengths(&[0.5, 0.5], &[0.5, -0.4]).is_err());
        assert!(IemSpec::from_lengths(&[0.5, 0.4], &[0.5, -0.5]).is_err());
        assert!(IemSpec::from_lengths(&[0.5, 0.5], &[0.5, -0.5]).is_ok());
    }

    #[test]
    fn golden_rotation_induction() {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let t = IemSpec::from_lengths(&[g, 1.0 - g], &[1.0 - g, -g]).unwrap();
        let r = induce(&t, g, 100).unwrap();
        let mut cols: Vec<Vec<u64>> = (0..2).map(|b| vec![r.matrix[0][b], r.matrix[1][b]]).collect();
        cols.sort();
        assert_eq!(cols, vec![vec![1, 0], vec![1, 1]]);
        let rescaled = r.rescaled().unwrap();
        assert_eq!(rescaled.pieces().len(), 2);
    }

    #[test]
    fn itinerary_shift() {
        let (t, _) = make_ay();
        let x = 0.3141592653589793;
        let w = t.itinerary(x, 50);
        let v = t.itinerary(t.apply(x), 49);
        for n in -49..=49 {
            assert_eq!(w.get(n + 1), v.get(n));
        }
        assert_eq!(t.itinerary(x, 0).word, vec![t.letter_at(x)]);
    }

    #[test]
    fn ay_induction_gives_transposed_matrix() {
        let (t, a) = make_ay();
        let s = ay_substitution();
        let r = induce(&t, a, 1000).unwrap();
        let m = s.matrix();
        let rl = r.matrix_by_letters(&s).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(rl[i][j] as i64, m[j][i]);
            }
        }
        let sim = self_similarity_fit(&t, &r, 1000, 7);
        assert!(sim.max_error < 1e-10, "{sim:?}");
    }

    #[test]
    fn zero_theta_is_the_base_map() {
        let (t, _) = make_ay();
        let ones = vec![1.0; 9];
        let x0 = 0.123456789;
        let f = denjoy_affine(&t, x0, &t.itinerary(x0, 20), &ones, 0.5, 20, 0.0).unwrap();
        assert!(semiconjugacy_check(&f, &t, 2000, 1) <= 1e-12);
        let d = distance_to_base(&f, &t, 2000, 1);
        assert!(d.sup_away <= 1e-12 && d.mean <= 1e-12);
    }
}
