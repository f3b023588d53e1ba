use crate::error::{Error, Result};
use crate::spectral::{char_poly, matmul_i64, root_of_unity_check, select_beta_of_matrix, BetaChoice, IntPolynomial, RootOfUnityCheck};
use num_complex::Complex;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde_json::{json, Value};
use std::collections::{HashMap, VecDeque};
use std::fmt;

pub type IntMatrix = Vec<Vec<i64>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Top,
    Bottom,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Top => Side::Bottom,
            Side::Bottom => Side::Top,
        }
    }
}

/// Two orderings of the symbols `1..=d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    top: Vec<usize>,
    bottom: Vec<usize>,
}

impl Permutation {
    pub fn new(top: Vec<usize>, bottom: Vec<usize>) -> Result<Self> {
        let d = top.len();
        let is_perm = |row: &[usize]| {
            let mut seen = vec![false; d + 1];
            row.iter().all(|&x| x >= 1 && x <= d && !std::mem::replace(&mut seen[x], true))
        };
        if d == 0 || bottom.len() != d || !is_perm(&top) || !is_perm(&bottom) {
            return Err(Error::InvalidPermutation(format!("{top:?} / {bottom:?}")));
        }
        Ok(Permutation { top, bottom })
    }

    /// `1 … d` over `d … 1`.
    pub fn hyperelliptic(d: usize) -> Self {
        Permutation { top: (1..=d).collect(), bottom: (1..=d).rev().collect() }
    }

    pub fn d(&self) -> usize {
        self.top.len()
    }

    pub fn top(&self) -> &[usize] {
        &self.top
    }

    pub fn bottom(&self) -> &[usize] {
        &self.bottom
    }

    /// No proper prefix of the top row is a prefix set of the bottom row.
    pub fn is_irreducible(&self) -> bool {
        let d = self.d();
        let mut seen = vec![0u8; d + 1];
        let mut shared = 0;
        for k in 0..d - 1 {
            // Bit 1: seen on top, bit 2: seen on the bottom.
            for (x, bit) in [(self.top[k], 1u8), (self.bottom[k], 2u8)] {
                seen[x] |= bit;
                if seen[x] == 3 {
                    shared += 1;
                }
            }
            if shared == k + 1 {
                return false;
            }
        }
        true
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let row = |r: &[usize]| r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        write!(f, "{} / {}", row(&self.top), row(&self.bottom))
    }
}

fn identity(d: usize) -> IntMatrix {
    (0..d).map(|i| (0..d).map(|j| i64::from(i == j)).collect()).collect()
}

/// One Rauzy–Veech move. The winner is the last symbol of the moving row, the loser
/// the last symbol of the other row; the loser is reinserted right after the winner.
/// The elementary matrix is `I + e_{loser, winner}`.
pub fn rauzy_move(p: &Permutation, side: Side) -> Result<(Permutation, IntMatrix)> {
    if !p.is_irreducible() {
        return Err(Error::ReduciblePermutation);
    }
    let d = p.d();
    let (mut top, mut bottom) = (p.top.clone(), p.bottom.clone());
    let (winner, loser) = match side {
        Side::Top => (top[d - 1], bottom[d - 1]),
        Side::Bottom => (bottom[d - 1], top[d - 1]),
    };
    let row = if side == Side::Top { &mut bottom } else { &mut top };
    row.retain(|&x| x != loser);
    let at = row.iter().position(|&x| x == winner).expect("winner present") + 1;
    row.insert(at, loser);
    let mut e = identity(d);
    e[loser - 1][winner - 1] += 1;
    Ok((Permutation { top, bottom }, e))
}

/// Endpoint and accumulated matrix `E_k ⋯ E_1` of a sequence of moves.
pub fn run_moves(p: &Permutation, moves: &[Side]) -> Result<(Permutation, IntMatrix)> {
    let mut cur = p.clone();
    let mut acc = identity(p.d());
    for &s in moves {
        let (next, e) = rauzy_move(&cur, s)?;
        acc = matmul_i64(&e, &acc);
        cur = next;
    }
    Ok((cur, acc))
}

/// Alternating moves starting with `first` until the walk returns to `p`.
pub fn alternating_cycle(p: &Permutation, first: Side, max_len: usize) -> Result<Vec<Side>> {
    let mut cur = p.clone();
    let mut side = first;
    let mut moves = Vec::new();
    while moves.len() < max_len {
        cur = rauzy_move(&cur, side)?.0;
        moves.push(side);
        side = side.other();
        if cur == *p {
            return Ok(moves);
        }
    }
    Err(Error::NonReturningOrbit(max_len))
}

/// Three bottom moves, `2n` top moves, two bottom moves.
pub fn parametric_cycle(n: usize) -> Vec<Side> {
    let mut m = vec![Side::Bottom; 3];
    m.extend(std::iter::repeat_n(Side::Top, 2 * n));
    m.extend([Side::Bottom; 2]);
    m
}

#[derive(Clone, Debug)]
pub struct RauzyClassGraph {
    /// Breadth-first order from the root, top move explored first.
    pub nodes: Vec<Permutation>,
    /// `[top target, bottom target]` per node.
    pub edges: Vec<[usize; 2]>,
    /// Elementary matrices, `[top, bottom]` per node.
    pub matrices: Vec<[IntMatrix; 2]>,
}

pub fn rauzy_class(p: &Permutation) -> Result<RauzyClassGraph> {
    let mut index: HashMap<Permutation, usize> = HashMap::new();
    let mut nodes = vec![p.clone()];
    index.insert(p.clone(), 0);
    let mut edges = Vec::new();
    let mut matrices = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let mut targets = [0usize; 2];
        let mut mats: Vec<IntMatrix> = Vec::with_capacity(2);
        for (k, side) in [Side::Top, Side::Bottom].into_iter().enumerate() {
            let (q, e) = rauzy_move(&nodes[i], side)?;
            let j = *index.entry(q.clone()).or_insert_with(|| {
                nodes.push(q);
                queue.push_back(nodes.len() - 1);
                nodes.len() - 1
            });
            targets[k] = j;
            mats.push(e);
        }
        // Nodes are discovered in increasing order, so row `i` is appended in order.
        debug_assert_eq!(edges.len(), i);
        edges.push(targets);
        let b = mats.pop().expect("two moves");
        let t = mats.pop().expect("two moves");
        matrices.push([t, b]);
    }
    Ok(RauzyClassGraph { nodes, edges, matrices })
}

impl RauzyClassGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, p: &Permutation) -> Option<usize> {
        self.nodes.iter().position(|q| q == p)
    }

    pub fn is_strongly_connected(&self) -> bool {
        let mut g = DiGraph::<(), ()>::new();
        let ids: Vec<_> = (0..self.len()).map(|_| g.add_node(())).collect();
        for (i, e) in self.edges.iter().enumerate() {
            for &j in e {
                g.add_edge(ids[i], ids[j], ());
            }
        }
        tarjan_scc(&g).len() == 1
    }

    /// Node reached by replaying moves from `start`.
    pub fn replay(&self, start: usize, moves: &[Side]) -> usize {
        moves.iter().fold(start, |i, &s| self.edges[i][usize::from(s == Side::Bottom)])
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph rauzy {\n");
        for (i, p) in self.nodes.iter().enumerate() {
            out.push_str(&format!("  n{i} [label=\"{p}\"];\n"));
        }
        for (i, e) in self.edges.iter().enumerate() {
            out.push_str(&format!("  n{i} -> n{} [style=solid];\n", e[0]));
            out.push_str(&format!("  n{i} -> n{} [style=dashed];\n", e[1]));
        }
        out.push_str("}\n");
        out
    }
}

/// Matrix of the alternating cycle on the hyperelliptic class that starts with a top move.
pub fn m1() -> IntMatrix {
    vec![
        vec![1, 0, 0, 0, 0, 1],
        vec![0, 2, 10, 10, 5, 1],
        vec![0, 7, 54, 54, 28, 1],
        vec![0, 22, 156, 161, 84, 1],
        vec![0, 42, 298, 306, 162, 1],
        vec![0, 26, 185, 190, 100, 1],
    ]
}

/// Matrix of the alternating cycle that starts with a bottom move.
pub fn m2() -> IntMatrix {
    vec![
        vec![1, 100, 190, 185, 26, 0],
        vec![1, 162, 306, 298, 42, 0],
        vec![1, 84, 161, 156, 22, 0],
        vec![1, 28, 54, 54, 7, 0],
        vec![1, 5, 10, 10, 2, 0],
        vec![1, 0, 0, 0, 0, 1],
    ]
}

/// Matrix of the parametric cycle.
pub fn m3(n: i64) -> IntMatrix {
    vec![
        vec![1, 0, n, 0, 0, 0],
        vec![1, 1, 2 * n, 0, 0, 0],
        vec![1, 0, 1 + n, 0, 0, 0],
        vec![1, 0, 0, 1, 0, 0],
        vec![1, 0, 0, 0, 1, 0],
        vec![1, 0, 0, 0, 0, 1],
    ]
}

/// `M₁ M₃(n) M₂`.
pub fn family_matrix(n: i64) -> IntMatrix {
    matmul_i64(&matmul_i64(&m1(), &m3(n)), &m2())
}

/// Closed-form coefficients `(A, B, C)` of `p = 1 − At + Bt² − Ct³ + Bt⁴ − At⁵ + t⁶`.
pub fn family_coefficients(n: i128) -> (i128, i128, i128) {
    (196351 + 51729 * n, 740715 + 183764 * n, 1092962 + 269314 * n)
}

/// `q(t) = t³ − A t² + (B − 3) t − (C − 2A)`, whose roots are `x + 1/x` over reciprocal root pairs of `p`.
pub fn trace_polynomial(p: &IntPolynomial) -> IntPolynomial {
    let (a, b, c) = (-p.coeff(5), p.coeff(4), -p.coeff(3));
    IntPolynomial::new(vec![-(c - 2 * a), b - 3, -a, 1])
}

/// Discriminant of a cubic, exactly.
pub fn cubic_discriminant(q: &IntPolynomial) -> i128 {
    let (d, c, b, a) = (q.coeff(0), q.coeff(1), q.coeff(2), q.coeff(3));
    18 * a * b * c * d - 4 * b * b * b * d + b * b * c * c - 4 * a * c * c * c - 27 * a * a * d * d
}

fn poly_rem_mod(num: &[i128], den: &[i128], m: i128) -> Vec<i128> {
    // `den` monic.
    let mut r: Vec<i128> = num.iter().map(|c| c.rem_euclid(m)).collect();
    let dd = den.len() - 1;
    while r.len() > dd {
        let lead = *r.last().expect("non-empty");
        let shift = r.len() - 1 - dd;
        for (i, &c) in den.iter().enumerate() {
            r[shift + i] = (r[shift + i] - lead * c).rem_euclid(m);
        }
        r.pop();
    }
    while r.last() == Some(&0) {
        r.pop();
    }
    r
}

/// Irreducibility over `𝔽_m` (prime `m`) by trial division with every monic polynomial up to half the degree.
pub fn is_irreducible_mod(coeffs: &[i128], m: i128) -> bool {
    let mut f: Vec<i128> = coeffs.iter().map(|c| c.rem_euclid(m)).collect();
    while f.last() == Some(&0) {
        f.pop();
    }
    let deg = f.len().saturating_sub(1);
    if deg == 0 {
        return false;
    }
    for k in 1..=deg / 2 {
        let count = (m as u64).pow(k as u32);
        for code in 0..count {
            let mut g = Vec::with_capacity(k + 1);
            let mut x = code;
            for _ in 0..k {
                g.push((x % m as u64) as i128);
                x /= m as u64;
            }
            g.push(1);
            if poly_rem_mod(&f, &g, m).is_empty() {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, Debug)]
pub struct FamilyReport {
    pub n: i64,
    pub p: IntPolynomial,
    pub q: IntPolynomial,
    pub discriminant: i128,
    /// `p` reduced mod 3, constant term first, when `n ≡ 2 (mod 3)`.
    pub mod3: Option<Vec<i128>>,
    pub mod3_irreducible: Option<bool>,
    pub q_real_roots: usize,
    pub beta: Option<Complex<f64>>,
    pub root_of_unity: Option<RootOfUnityCheck>,
}

impl FamilyReport {
    pub fn discriminant_negative(&self) -> bool {
        self.discriminant < 0
    }

    pub fn beta_modulus(&self) -> Option<f64> {
        self.beta.map(|b| b.norm())
    }

    pub fn to_json(&self) -> Value {
        use crate::report::num17;
        json!({
            "n": self.n,
            "p": self.p.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "q": self.q.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "discriminant": self.discriminant.to_string(),
            "discriminant_negative": self.discriminant_negative(),
            "mod3": self.mod3.as_ref().map(|v| v.iter().map(|c| c.to_string()).collect::<Vec<_>>()),
            "mod3_irreducible": self.mod3_irreducible,
            "q_real_roots": self.q_real_roots,
            "beta": self.beta.map(|b| json!({"re": num17(b.re), "im": num17(b.im)})),
            "beta_modulus": self.beta_modulus().map(num17),
            "beta_nonreal": self.beta.map(|b| b.im.abs() > 1e-9),
            "root_of_unity_check": self.root_of_unity.as_ref().map(|r| json!({
                "pass": r.pass,
                "witness": r.witness,
                "min_distance": num17(r.min_distance),
            })),
        })
    }
}

/// Analysis of `M₁ M₃(n) M₂`; the root-of-unity check up to `root_check_k` runs when positive.
pub fn family_analysis(n: i64, root_check_k: u64) -> Result<FamilyReport> {
    let m = family_matrix(n);
    let p = char_poly(&m);
    let q = trace_polynomial(&p);
    let discriminant = cubic_discriminant(&q);
    let (mod3, mod3_irreducible) = if n.rem_euclid(3) == 2 {
        let r = p.reduce_mod(3);
        let irr = is_irreducible_mod(&r, 3);
        (Some(r), Some(irr))
    } else {
        (None, None)
    };
    let q_roots = q.roots::<f64>()?;
    let q_real_roots = q_roots.iter().filter(|z| z.im.abs() <= 1e-9 * z.norm().max(1.0)).count();
    let beta = select_beta_of_matrix::<f64>(&m, BetaChoice::Largest).ok().map(|(b, _)| b);
    let root_of_unity = match (beta, root_check_k) {
        (Some(b), k) if k > 0 => Some(root_of_unity_check(b / b.norm(), k, 1e-9)),
        _ => None,
    };
    Ok(FamilyReport { n, p, q, discriminant, mod3, mod3_irreducible, q_real_roots, beta, root_of_unity })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_class_has_two_loops() {
        let p = Permutation::new(vec![1, 2], vec![2, 1]).unwrap();
        let g = rauzy_class(&p).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.edges[0], [0, 0]);
    }

    #[test]
    fn reducible_permutations_are_rejected() {
        let p = Permutation::new(vec![1, 2, 3], vec![2, 1, 3]).unwrap();
        assert!(!p.is_irreducible());
        assert_eq!(rauzy_move(&p, Side::Top).unwrap_err(), Error::ReduciblePermutation);
        assert!(Permutation::new(vec![1, 1], vec![1, 2]).is_err());
    }

    #[test]
    fn elementary_matrices_are_unipotent() {
        let p = Permutation::hyperelliptic(6);
        for side in [Side::Top, Side::Bottom] {
            let (_, e) = rauzy_move(&p, side).unwrap();
            assert_eq!(char_poly(&e).coeffs(), char_poly(&identity(6)).coeffs());
        }
    }

    #[test]
    fn cycles_reproduce_the_matrices() {
        let p = Permutation::hyperelliptic(6);
        let c1 = alternating_cycle(&p, Side::Top, 1000).unwrap();
        let c2 = alternating_cycle(&p, Side::Bottom, 1000).unwrap();
        assert_eq!(run_moves(&p, &c1).unwrap(), (p.clone(), m1()));
        assert_eq!(run_moves(&p, &c2).unwrap(), (p.clone(), m2()));
        for n in 0..6 {
            assert_eq!(run_moves(&p, &parametric_cycle(n)).unwrap(), (p.clone(), m3(n as i64)));
        }
    }

    #[test]
    fn mod3_irreducibility() {
        assert!(is_irreducible_mod(&[1, 2, 1, 2, 1, 2, 1], 3));
        // (t + 1)² = t² + 2t + 1
        assert!(!is_irreducible_mod(&[1, 2, 1], 3));
        assert!(is_irreducible_mod(&[1, 0, 1], 3));
    }

    #[test]
    fn family_at_two() {
        let r = family_analysis(2, 0).unwrap();
        assert_eq!(r.mod3.as_deref(), Some(&[1, 2, 1, 2, 1, 2, 1][..]));
        assert_eq!(r.mod3_irreducible, Some(true));
        assert!(r.discriminant_negative());
        assert_eq!(r.q_real_roots, 1);
        assert!(r.beta_modulus().unwrap() > 1.0);
    }
}
