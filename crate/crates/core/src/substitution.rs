use crate::error::{Error, Result};
use serde_json::{Map, Value};
use std::collections::HashMap;
use std::fmt;

/// Dense index into the alphabet of a [`Substitution`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter(pub usize);

pub type Word = Vec<Letter>;

/// Word with a dot: coordinates run from `-origin` to `len - 1 - origin`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointedWord {
    pub word: Word,
    pub origin: usize,
}

impl PointedWord {
    pub fn new(word: Word, origin: usize) -> Self {
        assert!(origin <= word.len(), "dot outside the word");
        PointedWord { word, origin }
    }

    /// Smallest coordinate present.
    pub fn lo(&self) -> i64 {
        -(self.origin as i64)
    }

    /// Largest coordinate present (`lo - 1` for the empty word).
    pub fn hi(&self) -> i64 {
        self.word.len() as i64 - 1 - self.origin as i64
    }

    pub fn get(&self, n: i64) -> Option<Letter> {
        let i = n + self.origin as i64;
        if i < 0 {
            return None;
        }
        self.word.get(i as usize).copied()
    }

    /// Restriction to the coordinates `[-l, r]`.
    pub fn trim(&self, l: usize, r: usize) -> PointedWord {
        let left = self.origin.min(l);
        let start = self.origin - left;
        let end = (self.origin + r + 1).min(self.word.len()).max(start);
        PointedWord { word: self.word[start..end].to_vec(), origin: left }
    }

    /// The same word with the dot moved `k` places to the right.
    pub fn shifted(&self, k: i64) -> Option<PointedWord> {
        let o = self.origin as i64 + k;
        if o < 0 || o > self.word.len() as i64 {
            return None;
        }
        Some(PointedWord { word: self.word.clone(), origin: o as usize })
    }
}

/// Position of a center letter inside `σ(parent)`; denotes the triple `(p, c, s)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    pub parent: Letter,
    pub pos: usize,
    pub center: Letter,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Substitution {
    names: Vec<String>,
    images: Vec<Word>,
    rule_order: Vec<Letter>,
    labels: Vec<Label>,
    label_start: Vec<usize>,
}

impl Substitution {
    pub fn new(names: Vec<String>, images: Vec<Word>) -> Result<Self> {
        let order = (0..names.len()).map(Letter).collect();
        Self::with_rule_order(names, images, order)
    }

    fn with_rule_order(names: Vec<String>, images: Vec<Word>, rule_order: Vec<Letter>) -> Result<Self> {
        let d = names.len();
        if d == 0 {
            return Err(Error::InvalidSubstitution("empty alphabet".into()));
        }
        if images.len() != d {
            return Err(Error::InvalidSubstitution(format!("{} images for {} letters", images.len(), d)));
        }
        let mut seen = HashMap::new();
        for (i, n) in names.iter().enumerate() {
            if seen.insert(n.as_str(), i).is_some() {
                return Err(Error::InvalidSubstitution(format!("duplicate letter name {n:?}")));
            }
        }
        for (a, img) in images.iter().enumerate() {
            if img.is_empty() {
                return Err(Error::InvalidSubstitution(format!("image of {} is empty", names[a])));
            }
            if let Some(b) = img.iter().find(|b| b.0 >= d) {
                return Err(Error::InvalidSubstitution(format!("letter index {} out of range", b.0)));
            }
        }
        let mut labels = Vec::new();
        let mut label_start = Vec::with_capacity(d + 1);
        for (a, img) in images.iter().enumerate() {
            label_start.push(labels.len());
            for (pos, &c) in img.iter().enumerate() {
                labels.push(Label { parent: Letter(a), pos, center: c });
            }
        }
        label_start.push(labels.len());
        Ok(Substitution { names, images, rule_order, labels, label_start })
    }

    /// Parses rules like `["35", "45", ...]` over single-character names.
    pub fn from_strings(names: &[&str], images: &[&str]) -> Result<Self> {
        let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        let imgs = images
            .iter()
            .map(|s| {
                s.chars()
                    .map(|ch| {
                        names
                            .iter()
                            .position(|n| n == &ch.to_string())
                            .map(Letter)
                            .ok_or_else(|| Error::InvalidSubstitution(format!("unknown letter {ch:?}")))
                    })
                    .collect::<Result<Word>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(names, imgs)
    }

    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> {
        (0..self.size()).map(Letter)
    }

    pub fn name(&self, a: Letter) -> &str {
        &self.names[a.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn letter(&self, name: &str) -> Option<Letter> {
        self.names.iter().position(|n| n == name).map(Letter)
    }

    pub fn image(&self, a: Letter) -> &[Letter] {
        &self.images[a.0]
    }

    /// Parses a word of single-character letter names.
    pub fn word(&self, s: &str) -> Result<Word> {
        s.chars()
            .map(|ch| self.letter(&ch.to_string()).ok_or_else(|| Error::InvalidSubstitution(format!("unknown letter {ch:?}"))))
            .collect()
    }

    /// Parses `left.right` (or `left·right`) into a pointed word with the dot between the halves.
    pub fn pointed(&self, s: &str) -> Result<PointedWord> {
        let (l, r) = s
            .split_once('.')
            .or_else(|| s.split_once('·'))
            .ok_or_else(|| Error::InvalidSubstitution(format!("pointed word {s:?} has no dot")))?;
        let mut w = self.word(l)?;
        let origin = w.len();
        w.extend(self.word(r)?);
        Ok(PointedWord::new(w, origin))
    }

    pub fn format_word(&self, w: &[Letter]) -> String {
        w.iter().map(|&b| self.name(b)).collect()
    }

    pub fn format_pointed(&self, w: &PointedWord) -> String {
        format!("{}·{}", self.format_word(&w.word[..w.origin]), self.format_word(&w.word[w.origin..]))
    }

    pub fn apply(&self, w: &[Letter], power: usize) -> Word {
        let mut cur = w.to_vec();
        for _ in 0..power {
            cur = cur.iter().flat_map(|&b| self.images[b.0].iter().copied()).collect();
        }
        cur
    }

    /// `M[a][b]` = number of occurrences of `b` in `σ(a)`.
    pub fn matrix(&self) -> Vec<Vec<i64>> {
        let d = self.size();
        let mut m = vec![vec![0i64; d]; d];
        for (a, img) in self.images.iter().enumerate() {
            for b in img {
                m[a][b.0] += 1;
            }
        }
        m
    }

    /// Some power of `M` is strictly positive (Wielandt bound on the exponent).
    pub fn is_primitive(&self) -> bool {
        let d = self.size();
        let base: Vec<Vec<bool>> = self.matrix().iter().map(|r| r.iter().map(|&x| x > 0).collect()).collect();
        let mut p = base.clone();
        for _ in 0..(d - 1) * (d - 1) + 1 {
            if p.iter().all(|r| r.iter().all(|&x| x)) {
                return true;
            }
            let mut q = vec![vec![false; d]; d];
            for i in 0..d {
                for k in 0..d {
                    if p[i][k] {
                        for j in 0..d {
                            q[i][j] |= base[k][j];
                        }
                    }
                }
            }
            p = q;
        }
        p.iter().all(|r| r.iter().all(|&x| x))
    }

    /// All labels, grouped by parent letter and ordered by center position.
    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn labels_of(&self, a: Letter) -> &[Label] {
        &self.labels[self.label_start[a.0]..self.label_start[a.0 + 1]]
    }

    /// Global index of a label in [`Substitution::labels`].
    pub fn label_index(&self, l: Label) -> usize {
        self.label_start[l.parent.0] + l.pos
    }

    pub fn label(&self, parent: Letter, pos: usize) -> Option<Label> {
        self.labels_of(parent).get(pos).copied()
    }

    pub fn prefix(&self, l: Label) -> &[Letter] {
        &self.images[l.parent.0][..l.pos]
    }

    pub fn suffix(&self, l: Label) -> &[Letter] {
        &self.images[l.parent.0][l.pos + 1..]
    }

    pub fn is_valid_label(&self, l: Label) -> bool {
        l.parent.0 < self.size() && self.images[l.parent.0].get(l.pos) == Some(&l.center)
    }

    pub fn format_label(&self, l: Label) -> String {
        let e = |w: &[Letter]| if w.is_empty() { "ε".to_string() } else { self.format_word(w) };
        format!("({},{},{})", e(self.prefix(l)), self.name(l.center), e(self.suffix(l)))
    }

    pub fn lengths(&self) -> LengthTable<'_> {
        LengthTable::new(self)
    }

    /// Canonical decomposition of `S^shift(σⁿ(a))`; entry 0 is the innermost level.
    pub fn finite_prefix_suffix(&self, a: Letter, n: usize, shift: u64) -> Result<PrefixSuffixStream> {
        assert!(n >= 1, "depth must be at least 1");
        let mut lens = self.lengths();
        let total = lens.letter(n, a);
        if shift >= total {
            return Err(Error::ShiftOutOfRange { shift, len: total });
        }
        let mut entries = vec![Label { parent: a, pos: 0, center: a }; n];
        let mut cur = a;
        let mut rem = shift;
        for level in (0..n).rev() {
            let img = &self.images[cur.0];
            let mut k = 0;
            loop {
                let l = lens.letter(level, img[k]);
                if rem < l {
                    break;
                }
                rem -= l;
                k += 1;
            }
            entries[level] = Label { parent: cur, pos: k, center: img[k] };
            cur = img[k];
        }
        PrefixSuffixStream::finite(self, entries)
    }

    /// Central part of a stream restricted to `[-l, l]`.
    pub fn reconstruct(&self, stream: &mut PrefixSuffixStream, l: usize) -> Result<Reconstruction> {
        self.reconstruct_with_cap(stream, l, 100_000)
    }

    pub fn reconstruct_with_cap(&self, stream: &mut PrefixSuffixStream, l: usize, max_entries: usize) -> Result<Reconstruction> {
        let mut lens = self.lengths();
        let mut left_blocks: Vec<Word> = Vec::new();
        let mut right_blocks: Vec<Word> = Vec::new();
        let (mut left, mut right) = (0usize, 0usize);
        let mut m = 0usize;
        while (left < l || right < l + 1) && m < max_entries {
            let Some(lab) = stream.get(self, m)? else { break };
            if m == 0 {
                right_blocks.push(vec![lab.center]);
                right = 1;
            }
            let p = self.prefix(lab);
            let s = self.suffix(lab);
            if left < l {
                let need = l - left;
                let len = lens.word(m, p);
                let take = (need as u64).min(len) as usize;
                let mut out = Vec::with_capacity(take);
                self.tail_into(&mut lens, p, m, take, &mut out);
                left += take;
                left_blocks.push(out);
            }
            if right < l + 1 {
                let need = l + 1 - right;
                let len = lens.word(m, s);
                let take = (need as u64).min(len) as usize;
                let mut out = Vec::with_capacity(take);
                self.head_into(&mut lens, s, m, take, &mut out);
                right += take;
                right_blocks.push(out);
            }
            m += 1;
        }
        let mut word: Word = Vec::with_capacity(left + right);
        for b in left_blocks.iter().rev() {
            word.extend_from_slice(b);
        }
        for b in &right_blocks {
            word.extend_from_slice(b);
        }
        let truncated = left < l || right < l + 1;
        Ok(Reconstruction { word: PointedWord::new(word, left), depth: m, truncated })
    }

    /// Appends the last `k` letters of `σ^m(w)`.
    fn tail_into(&self, lens: &mut LengthTable<'_>, w: &[Letter], m: usize, k: usize, out: &mut Word) {
        if k == 0 {
            return;
        }
        let mut acc = 0u64;
        let mut j = w.len();
        while j > 0 {
            j -= 1;
            let l = lens.letter(m, w[j]);
            if acc.saturating_add(l) >= k as u64 {
                let r = (k as u64 - acc) as usize;
                if m == 0 {
                    out.push(w[j]);
                } else {
                    self.tail_into(lens, &self.images[w[j].0], m - 1, r, out);
                }
                for &b in &w[j + 1..] {
                    out.extend(self.apply(&[b], m));
                }
                return;
            }
            acc += l;
        }
        panic!("tail longer than word");
    }

    /// Appends the first `k` letters of `σ^m(w)`.
    fn head_into(&self, lens: &mut LengthTable<'_>, w: &[Letter], m: usize, k: usize, out: &mut Word) {
        if k == 0 {
            return;
        }
        let mut acc = 0u64;
        for (j, &b) in w.iter().enumerate() {
            let l = lens.letter(m, b);
            if acc.saturating_add(l) >= k as u64 {
                for &x in &w[..j] {
                    out.extend(self.apply(&[x], m));
                }
                let r = (k as u64 - acc) as usize;
                if m == 0 {
                    out.push(b);
                } else {
                    self.head_into(lens, &self.images[b.0], m - 1, r, out);
                }
                return;
            }
            acc += l;
        }
        panic!("head longer than word");
    }

    /// JSON of the form `{"alphabet": [...], "rules": {name: [names]}}`.
    pub fn to_json_value(&self) -> Value {
        let mut rules = Map::new();
        for &a in &self.rule_order {
            let img: Vec<Value> = self.images[a.0].iter().map(|&b| Value::String(self.names[b.0].clone())).collect();
            rules.insert(self.names[a.0].clone(), Value::Array(img));
        }
        let mut obj = Map::new();
        obj.insert("alphabet".into(), Value::Array(self.names.iter().cloned().map(Value::String).collect()));
        obj.insert("rules".into(), Value::Object(rules));
        Value::Object(obj)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("json values serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s).map_err(|e| Error::InvalidSubstitution(e.to_string()))?;
        let bad = |m: &str| Error::InvalidSubstitution(m.to_string());
        let alphabet = v.get("alphabet").and_then(Value::as_array).ok_or_else(|| bad("missing \"alphabet\" array"))?;
        let names: Vec<String> = alphabet
            .iter()
            .map(|x| x.as_str().map(str::to_string).ok_or_else(|| bad("alphabet entries must be strings")))
            .collect::<Result<_>>()?;
        let rules = v.get("rules").and_then(Value::as_object).ok_or_else(|| bad("missing \"rules\" object"))?;
        let index = |n: &str| names.iter().position(|m| m == n).map(Letter).ok_or_else(|| bad(&format!("unknown letter {n:?}")));
        let mut images: Vec<Option<Word>> = vec![None; names.len()];
        let mut order = Vec::new();
        for (k, img) in rules {
            let a = index(k)?;
            let arr = img.as_array().ok_or_else(|| bad("rule images must be arrays"))?;
            let w = arr
                .iter()
                .map(|x| x.as_str().ok_or_else(|| bad("rule letters must be strings")).and_then(index))
                .collect::<Result<Word>>()?;
            images[a.0] = Some(w);
            order.push(a);
        }
        let images = images
            .into_iter()
            .enumerate()
            .map(|(i, w)| w.ok_or_else(|| bad(&format!("no rule for {}", names[i]))))
            .collect::<Result<Vec<_>>>()?;
        Self::with_rule_order(names, images, order)
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &a) in self.rule_order.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{} -> {}", self.name(a), self.format_word(self.image(a)))?;
        }
        Ok(())
    }
}

/// Saturating table of `|σ^m(a)|`, grown on demand.
pub struct LengthTable<'a> {
    sub: &'a Substitution,
    rows: Vec<Vec<u64>>,
}

impl<'a> LengthTable<'a> {
    pub fn new(sub: &'a Substitution) -> Self {
        LengthTable { sub, rows: vec![vec![1; sub.size()]] }
    }

    pub fn letter(&mut self, m: usize, a: Letter) -> u64 {
        while self.rows.len() <= m {
            let prev = self.rows.last().expect("row 0 exists");
            let next = self
                .sub
                .images
                .iter()
                .map(|img| img.iter().fold(0u64, |acc, b| acc.saturating_add(prev[b.0])))
                .collect();
            self.rows.push(next);
        }
        self.rows[m][a.0]
    }

    pub fn word(&mut self, m: usize, w: &[Letter]) -> u64 {
        w.iter().fold(0u64, |acc, &b| acc.saturating_add(self.letter(m, b)))
    }
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub word: PointedWord,
    /// Number of stream entries consumed.
    pub depth: usize,
    /// The window `[-l, l]` was not fully covered.
    pub truncated: bool,
}

/// Pull-based producer of further stream entries.
pub trait LabelSource: Send {
    fn next_label(&mut self) -> Result<Option<Label>>;
}

/// Prefix-suffix decomposition `(p_m, c_m, s_m)`, finite or backed by a generator.
pub struct PrefixSuffixStream {
    entries: Vec<Label>,
    source: Option<Box<dyn LabelSource>>,
}

impl fmt::Debug for PrefixSuffixStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PrefixSuffixStream")
            .field("entries", &self.entries)
            .field("unbounded", &self.source.is_some())
            .finish()
    }
}

impl PrefixSuffixStream {
    pub fn finite(sub: &Substitution, entries: Vec<Label>) -> Result<Self> {
        for (i, &l) in entries.iter().enumerate() {
            check_label(sub, i, l)?;
            if i > 0 {
                check_link(i - 1, entries[i - 1], l)?;
            }
        }
        Ok(PrefixSuffixStream { entries, source: None })
    }

    pub fn unbounded(source: Box<dyn LabelSource>) -> Self {
        PrefixSuffixStream { entries: Vec::new(), source: Some(source) }
    }

    pub fn is_finite(&self) -> bool {
        self.source.is_none()
    }

    /// Entries pulled so far.
    pub fn entries(&self) -> &[Label] {
        &self.entries
    }

    /// Entry `m`, pulling from the generator as needed; `None` past the end.
    pub fn get(&mut self, sub: &Substitution, m: usize) -> Result<Option<Label>> {
        while self.entries.len() <= m {
            let Some(src) = self.source.as_mut() else { return Ok(None) };
            match src.next_label()? {
                Some(l) => {
                    let i = self.entries.len();
                    check_label(sub, i, l)?;
                    if i > 0 {
                        check_link(i - 1, self.entries[i - 1], l)?;
                    }
                    self.entries.push(l);
                }
                None => {
                    self.source = None;
                    return Ok(None);
                }
            }
        }
        Ok(Some(self.entries[m]))
    }

    /// Pulls until `n` entries are available (or the stream ends).
    pub fn materialize(&mut self, sub: &Substitution, n: usize) -> Result<&[Label]> {
        if n > 0 {
            self.get(sub, n - 1)?;
        }
        Ok(&self.entries[..n.min(self.entries.len())])
    }
}

fn check_label(sub: &Substitution, i: usize, l: Label) -> Result<()> {
    if sub.is_valid_label(l) {
        Ok(())
    } else {
        Err(Error::IncompatibleStream { index: i, detail: format!("{l:?} is not a label of the substitution") })
    }
}

fn check_link(i: usize, inner: Label, outer: Label) -> Result<()> {
    if outer.center == inner.parent {
        Ok(())
    } else {
        Err(Error::IncompatibleStream {
            index: i + 1,
            detail: format!("center {} differs from parent {} of the previous entry", outer.center.0, inner.parent.0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::ay_substitution;

    #[test]
    fn apply_examples() {
        let s = ay_substitution();
        let one = s.word("1").unwrap();
        assert_eq!(s.format_word(&s.apply(&one, 1)), "35");
        assert_eq!(s.format_word(&s.apply(&one, 2)), "4618");
        assert!(s.apply(&[], 5).is_empty());
    }

    #[test]
    fn matrix_and_labels() {
        let s = ay_substitution();
        let m = s.matrix();
        let nz: Vec<usize> = (0..9).filter(|&j| m[0][j] != 0).collect();
        assert_eq!(nz, vec![2, 4]);
        assert!(s.is_primitive());
        assert_eq!(s.labels().len(), 16);
        let l8 = s.labels_of(Letter(7));
        assert_eq!(l8.len(), 1);
        assert_eq!(s.format_label(l8[0]), "(ε,2,ε)");
        let id = Substitution::from_strings(&["a", "b"], &["a", "b"]).unwrap();
        assert_eq!(id.matrix(), vec![vec![1, 0], vec![0, 1]]);
        assert_eq!(id.labels().len(), 2);
    }

    #[test]
    fn prefix_suffix_examples() {
        let s = ay_substitution();
        let one = Letter(0);
        let st = s.finite_prefix_suffix(one, 1, 1).unwrap();
        assert_eq!(s.format_label(st.entries()[0]), "(3,5,ε)");
        let mut st = s.finite_prefix_suffix(one, 2, 3).unwrap();
        let r = s.reconstruct(&mut st, 10).unwrap();
        assert_eq!(s.format_pointed(&r.word), "461·8");
        let st0 = s.finite_prefix_suffix(Letter(3), 5, 0).unwrap();
        assert!(st0.entries().iter().all(|l| l.pos == 0));
        assert!(s.finite_prefix_suffix(one, 2, 4).is_err());
    }

    #[test]
    fn stream_rejects_incompatible_entries() {
        let s = ay_substitution();
        let a = s.labels_of(Letter(0))[0];
        let b = s.labels_of(Letter(0))[1];
        assert!(PrefixSuffixStream::finite(&s, vec![a, b]).is_err());
    }

    #[test]
    fn periodic_stream_is_flagged_when_prefixes_stay_empty() {
        let s = Substitution::from_strings(&["a", "b"], &["ab", "a"]).unwrap();
        let l = s.labels_of(Letter(0))[0];
        let mut st = PrefixSuffixStream::finite(&s, vec![l; 50]).unwrap();
        let r = s.reconstruct(&mut st, 10).unwrap();
        assert!(r.truncated);
        assert_eq!(r.word.origin, 0);
        assert_eq!(r.word.word.len(), 11);
    }

    #[test]
    fn json_round_trip_preserves_order() {
        let js = r#"{"alphabet":["x","y"],"rules":{"y":["x"],"x":["x","y"]}}"#;
        let s = Substitution::from_json(js).unwrap();
        let out = s.to_json();
        assert!(out.find("\"y\": [").unwrap() < out.find("\"x\": [").unwrap());
        assert_eq!(Substitution::from_json(&out).unwrap().to_json(), out);
        let ay = ay_substitution();
        assert_eq!(Substitution::from_json(&ay.to_json()).unwrap(), ay);
    }
}
