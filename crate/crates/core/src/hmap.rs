use crate::circle::{ccw, wrap};
use crate::error::{Error, Result};
use crate::fractal::{PsiEnclosure, ValueFunction};
use crate::substitution::{Label, Letter, Substitution};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use std::f64::consts::TAU;

pub const DEFAULT_EPS_ARC: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 500;

/// Half-open counterclockwise arc `[start, start + len)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub start: f64,
    pub len: f64,
    pub label: Label,
}

impl Arc {
    pub fn end(&self) -> f64 {
        wrap(self.start + self.len)
    }

    pub fn contains(&self, angle: f64) -> bool {
        self.len >= TAU || ccw(self.start, angle) < self.len
    }
}

/// Disjoint intervals of `[0, 2π]` per label (global label index); arcs crossing
/// angle zero are stored as two pieces.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcSet {
    sets: Vec<Vec<(f64, f64)>>,
}

impl ArcSet {
    pub fn empty(n_labels: usize) -> Self {
        ArcSet { sets: vec![Vec::new(); n_labels] }
    }

    pub fn full(n_labels: usize) -> Self {
        ArcSet { sets: vec![vec![(0.0, TAU)]; n_labels] }
    }

    pub fn n_labels(&self) -> usize {
        self.sets.len()
    }

    pub fn intervals(&self, label_index: usize) -> &[(f64, f64)] {
        &self.sets[label_index]
    }

    pub fn is_empty(&self) -> bool {
        self.sets.iter().all(Vec::is_empty)
    }

    /// Adds the arc `[start, start + len)`, splitting at zero.
    fn push_arc(&mut self, label_index: usize, start: f64, len: f64) {
        if len >= TAU {
            self.sets[label_index].push((0.0, TAU));
            return;
        }
        let s = wrap(start);
        let e = s + len;
        if e <= TAU {
            self.sets[label_index].push((s, e));
        } else {
            self.sets[label_index].push((s, TAU));
            self.sets[label_index].push((0.0, e - TAU));
        }
    }

    /// Sorts, merges pieces closer than `eps`, and drops slivers shorter than `eps`.
    pub fn normalize(&mut self, eps: f64) {
        for set in self.sets.iter_mut() {
            set.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
            let mut out: Vec<(f64, f64)> = Vec::with_capacity(set.len());
            for &(s, e) in set.iter() {
                if let Some(last) = out.last_mut() {
                    if s <= last.1 + eps {
                        last.1 = last.1.max(e);
                        continue;
                    }
                }
                out.push((s, e));
            }
            out.retain(|&(s, e)| e - s >= eps);
            for iv in out.iter_mut() {
                if iv.0 < eps {
                    iv.0 = 0.0;
                }
                if iv.1 > TAU - eps {
                    iv.1 = TAU;
                }
            }
            *set = out;
        }
    }

    pub fn measure(&self) -> f64 {
        self.sets.iter().flatten().map(|(s, e)| e - s).sum()
    }

    pub fn label_measure(&self, label_index: usize) -> f64 {
        self.sets[label_index].iter().map(|(s, e)| e - s).sum()
    }

    /// Same interval counts and endpoints within `eps`, label by label.
    pub fn approx_eq(&self, other: &ArcSet, eps: f64) -> bool {
        self.sets.len() == other.sets.len()
            && self.sets.iter().zip(&other.sets).all(|(a, b)| {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x.0 - y.0).abs() <= eps && (x.1 - y.1).abs() <= eps)
            })
    }

    /// Membership of `(angle, label)` with slack `eps` on both ends.
    pub fn contains(&self, label_index: usize, angle: f64, eps: f64) -> bool {
        let a = wrap(angle);
        self.sets[label_index].iter().any(|&(s, e)| {
            (a >= s - eps && a < e + eps) || (s - eps < 0.0 && a >= s - eps + TAU) || (e + eps > TAU && a < e + eps - TAU)
        })
    }

    /// Maximal arcs, re-joining pieces split at zero.
    pub fn arcs(&self, sub: &Substitution) -> Vec<Arc> {
        let mut out = Vec::new();
        for (li, set) in self.sets.iter().enumerate() {
            let label = sub.labels()[li];
            let n = set.len();
            if n == 0 {
                continue;
            }
            let wraps = n >= 2 && set[0].0 == 0.0 && set[n - 1].1 == TAU;
            let (from, to) = if wraps { (1, n - 1) } else { (0, n) };
            for &(s, e) in &set[from..to] {
                out.push(Arc { start: s, len: e - s, label });
            }
            if wraps {
                out.push(Arc { start: set[n - 1].0, len: TAU - set[n - 1].0 + set[0].1, label });
            }
        }
        out
    }

    pub fn union(&self, other: &ArcSet, eps: f64) -> ArcSet {
        let mut out = self.clone();
        for (i, set) in other.sets.iter().enumerate() {
            out.sets[i].extend_from_slice(set);
        }
        out.normalize(eps);
        out
    }

    /// Total length of the common part, label by label.
    pub fn overlap(&self, other: &ArcSet) -> f64 {
        let mut tot = 0.0;
        for (a, b) in self.sets.iter().zip(&other.sets) {
            for x in a {
                for y in b {
                    tot += (x.1.min(y.1) - x.0.max(y.0)).max(0.0);
                }
            }
        }
        tot
    }
}

/// Partition of the circle for one parent letter: `owners[i]` owns `[cuts[i], cuts[i+1])`.
#[derive(Clone, Debug, PartialEq)]
pub struct LetterPartition {
    pub cuts: Vec<f64>,
    pub owners: Vec<Label>,
}

impl LetterPartition {
    /// Right-continuous owner of an angle.
    pub fn owner(&self, angle: f64) -> Label {
        if self.cuts.is_empty() {
            return self.owners[0];
        }
        let a = wrap(angle);
        match self.cuts.partition_point(|&c| c <= a) {
            0 => *self.owners.last().expect("nonempty"),
            i => self.owners[i - 1],
        }
    }

    pub fn arcs(&self) -> Vec<Arc> {
        if self.cuts.is_empty() {
            return vec![Arc { start: 0.0, len: TAU, label: self.owners[0] }];
        }
        let n = self.cuts.len();
        (0..n)
            .map(|i| {
                let s = self.cuts[i];
                let e = self.cuts[(i + 1) % n];
                let len = if n == 1 { TAU } else { ccw(s, e) };
                Arc { start: s, len, label: self.owners[i] }
            })
            .collect()
    }
}

/// The skew product `H(τ, (q, a, r)) = (β₀⁻¹τ, J-owner of τ in a)`.
#[derive(Clone, Debug)]
pub struct HMap {
    pub partitions: Vec<LetterPartition>,
    pub phi: f64,
    pub eps_arc: f64,
    n_labels: usize,
    label_index: Vec<Vec<usize>>,
}

pub fn build_hmap(vf: &ValueFunction<'_, f64>, psi: &[Vec<PsiEnclosure>], eps_arc: f64) -> Result<HMap> {
    let sub = vf.substitution();
    let mut partitions = Vec::with_capacity(sub.size());
    for a in sub.letters() {
        let mut cuts: Vec<f64> = psi[a.0].iter().map(PsiEnclosure::mid).collect();
        cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        let owners = if cuts.is_empty() {
            let r = vf.certified_argmin(a, 0.0, vf.cap());
            vec![r.winner.ok_or(Error::UnresolvedRegion { letter: a.0, angle: 0.0 })?]
        } else {
            let n = cuts.len();
            (0..n)
                .map(|i| {
                    let len = if n == 1 { TAU } else { ccw(cuts[i], cuts[(i + 1) % n]) };
                    let mid = wrap(cuts[i] + len / 2.0);
                    vf.certified_argmin(a, mid, vf.cap()).winner.ok_or(Error::UnresolvedRegion { letter: a.0, angle: mid })
                })
                .collect::<Result<Vec<_>>>()?
        };
        partitions.push(LetterPartition { cuts, owners });
    }
    let label_index = sub.letters().map(|a| sub.labels_of(a).iter().map(|&l| sub.label_index(l)).collect()).collect();
    Ok(HMap { partitions, phi: vf.eigen().phi, eps_arc, n_labels: sub.labels().len(), label_index })
}

impl HMap {
    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn owner(&self, a: Letter, angle: f64) -> Label {
        self.partitions[a.0].owner(angle)
    }

    pub fn step(&self, angle: f64, label: Label) -> (f64, Label) {
        (wrap(angle - self.phi), self.owner(label.center, angle))
    }

    pub fn full(&self) -> ArcSet {
        ArcSet::full(self.n_labels)
    }

    /// Pieces of `set` on which `H` is a single rotation, with their images.
    fn pieces(&self, sub: &Substitution, set: &ArcSet) -> Vec<Piece> {
        let mut out = Vec::new();
        for (li, ivs) in set.sets.iter().enumerate() {
            let label = sub.labels()[li];
            let part = &self.partitions[label.center.0];
            for &(s, e) in ivs {
                let mut bounds = vec![s];
                bounds.extend(part.cuts.iter().copied().filter(|&c| c > s && c < e));
                bounds.push(e);
                for w in bounds.windows(2) {
                    let owner = part.owner(w[0]);
                    out.push(Piece { from: li, start: w[0], end: w[1], to: sub.label_index(owner) });
                }
            }
        }
        out
    }

    pub fn image(&self, sub: &Substitution, set: &ArcSet) -> ArcSet {
        let mut out = ArcSet::empty(self.n_labels);
        for p in self.pieces(sub, set) {
            out.push_arc(p.to, p.start - self.phi, p.end - p.start);
        }
        out.normalize(self.eps_arc);
        out
    }

    /// Iterates the image of the full space until two consecutive sets agree.
    pub fn limit_set(&self, sub: &Substitution, max_iter: usize) -> Result<(ArcSet, usize)> {
        let mut cur = self.full();
        for n in 0..max_iter {
            let next = self.image(sub, &cur);
            if next.approx_eq(&cur, self.eps_arc) {
                return Ok((cur, n));
            }
            cur = next;
        }
        Err(Error::NoStabilization(max_iter))
    }

    /// Strongly connected pieces of the limit set under `H`, each checked for invariance and bijectivity.
    pub fn minimal_components(&self, sub: &Substitution, limit: &ArcSet) -> Result<Vec<MinimalComponent>> {
        let pieces = self.pieces(sub, limit);
        let mut g: DiGraph<usize, ()> = DiGraph::new();
        let nodes: Vec<_> = (0..pieces.len()).map(|i| g.add_node(i)).collect();
        for (i, p) in pieces.iter().enumerate() {
            let mut img = ArcSet::empty(self.n_labels);
            img.push_arc(p.to, p.start - self.phi, p.end - p.start);
            for (j, q) in pieces.iter().enumerate() {
                if q.from != p.to {
                    continue;
                }
                let ov: f64 = img.sets[p.to].iter().map(|x| (x.1.min(q.end) - x.0.max(q.start)).max(0.0)).sum();
                if ov > self.eps_arc {
                    g.add_edge(nodes[i], nodes[j], ());
                }
            }
        }
        let mut comps: Vec<ArcSet> = Vec::new();
        for scc in tarjan_scc(&g) {
            let single_without_loop = scc.len() == 1 && g.find_edge(scc[0], scc[0]).is_none();
            if single_without_loop {
                continue;
            }
            let mut set = ArcSet::empty(self.n_labels);
            for n in scc {
                let p = &pieces[g[n]];
                set.sets[p.from].push((p.start, p.end));
            }
            set.normalize(self.eps_arc);
            comps.push(set);
        }
        let key = |s: &ArcSet| {
            s.sets
                .iter()
                .enumerate()
                .flat_map(|(li, v)| v.iter().map(move |x| (x.0, li)))
                .fold((f64::INFINITY, usize::MAX), |acc, x| if x.0 < acc.0 || (x.0 == acc.0 && x.1 < acc.1) { x } else { acc })
        };
        comps.sort_by(|a, b| key(a).partial_cmp(&key(b)).expect("finite"));
        let mut out = Vec::with_capacity(comps.len());
        for (index, arcs) in comps.into_iter().enumerate() {
            let img = self.image(sub, &arcs);
            if !img.approx_eq(&arcs, self.eps_arc) {
                return Err(Error::InvarianceViolation { index, detail: "H(J) differs from J".into() });
            }
            let raw: f64 = self.pieces(sub, &arcs).iter().map(|p| p.end - p.start).sum();
            if (raw - img.measure()).abs() > 1e-10 || (arcs.measure() - img.measure()).abs() > 1e-10 {
                return Err(Error::InvarianceViolation { index, detail: format!("measure {} maps to {}", arcs.measure(), img.measure()) });
            }
            out.push(MinimalComponent { index, arcs });
        }
        Ok(out)
    }

    /// Steps until the orbit enters a component; `None` if not within `cap` steps.
    pub fn arrival_time(&self, angle: f64, label: Label, sub: &Substitution, comps: &[MinimalComponent], cap: usize) -> Option<(usize, usize)> {
        let (mut a, mut l) = (angle, label);
        for m in 0..=cap {
            let li = sub.label_index(l);
            if let Some(c) = comps.iter().find(|c| c.arcs.contains(li, a, self.eps_arc)) {
                return Some((m, c.index));
            }
            (a, l) = self.step(a, l);
        }
        None
    }

    /// Preimage of `(angle, label)` inside a component.
    pub fn inverse_step(&self, sub: &Substitution, comp: &MinimalComponent, angle: f64, label: Label) -> Result<(f64, Label)> {
        if !comp.arcs.contains(sub.label_index(label), angle, self.eps_arc) {
            return Err(Error::NotInComponent);
        }
        let prev = wrap(angle + self.phi);
        let owner_ok = self.owner(label.parent, prev) == label;
        for slack in [0.0, self.eps_arc] {
            let cands: Vec<Label> = sub
                .labels()
                .iter()
                .copied()
                .filter(|l| l.center == label.parent && owner_ok && comp.arcs.contains(sub.label_index(*l), prev, slack))
                .collect();
            match cands.len() {
                0 => continue,
                1 => return Ok((prev, cands[0])),
                n => return Err(Error::NonUniquePreimage(n)),
            }
        }
        Err(Error::NotInComponent)
    }

    /// Labels of a component at an angle.
    pub fn labels_at(&self, sub: &Substitution, comp: &MinimalComponent, angle: f64) -> Vec<Label> {
        sub.labels().iter().copied().filter(|&l| comp.arcs.contains(sub.label_index(l), angle, 0.0)).collect()
    }

    pub fn letter_label_indices(&self, a: Letter) -> &[usize] {
        &self.label_index[a.0]
    }
}

#[derive(Clone, Copy, Debug)]
struct Piece {
    from: usize,
    start: f64,
    end: f64,
    to: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimalComponent {
    pub index: usize,
    pub arcs: ArcSet,
}

impl MinimalComponent {
    /// Whether every direction is covered by some label of the component.
    pub fn covers_circle(&self, eps: f64) -> bool {
        let mut all = ArcSet::empty(1);
        for set in &self.arcs.sets {
            all.sets[0].extend_from_slice(set);
        }
        all.normalize(eps);
        all.sets[0] == vec![(0.0, TAU)]
    }
}
