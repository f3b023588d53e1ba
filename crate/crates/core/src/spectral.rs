use crate::error::{Error, Result};
use crate::report::num17;
use crate::scalar::Scalar;
use crate::substitution::{Letter, Substitution};
use num_bigint::BigInt;
use num_complex::Complex;
use num_traits::{One, ToPrimitive, Zero};
use serde_json::{json, Value};
use std::fmt;

/// Polynomial with exact integer coefficients, ascending degree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntPolynomial {
    coeffs: Vec<i128>,
}

impl IntPolynomial {
    /// Trailing zero coefficients are dropped; the zero polynomial is `[0]`.
    pub fn new(mut coeffs: Vec<i128>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().expect("nonempty") == 0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0);
        }
        IntPolynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> i128 {
        self.coeffs.get(i).copied().unwrap_or(0)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> i128 {
        *self.coeffs.last().expect("nonempty")
    }

    pub fn mul(&self, other: &IntPolynomial) -> IntPolynomial {
        let mut out = vec![0i128; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPolynomial::new(out)
    }

    pub fn neg(&self) -> IntPolynomial {
        IntPolynomial::new(self.coeffs.iter().map(|c| -c).collect())
    }

    /// `tᵈ p(1/t) = p(t)`.
    pub fn is_palindromic(&self) -> bool {
        self.coeffs.iter().eq(self.coeffs.iter().rev())
    }

    /// Coefficients reduced into `0..m`.
    pub fn reduce_mod(&self, m: i128) -> Vec<i128> {
        self.coeffs.iter().map(|c| c.rem_euclid(m)).collect()
    }

    pub fn eval<T: Scalar>(&self, z: Complex<T>) -> Complex<T> {
        self.coeffs.iter().rev().fold(Complex::zero(), |acc, &c| acc * z + Complex::new(T::of(c as f64), T::zero()))
    }

    pub fn derivative(&self) -> IntPolynomial {
        if self.coeffs.len() == 1 {
            return IntPolynomial::new(vec![0]);
        }
        IntPolynomial::new(self.coeffs.iter().enumerate().skip(1).map(|(i, &c)| c * i as i128).collect())
    }

    /// All complex roots, by simultaneous Aberth iteration followed by Newton polishing.
    pub fn roots<T: Scalar>(&self) -> Result<Vec<Complex<T>>> {
        let n = self.degree();
        if n == 0 {
            return Ok(Vec::new());
        }
        let lead = self.leading() as f64;
        // Fujiwara-type bound on root moduli.
        let bound = (0..n)
            .map(|i| ((self.coeffs[i] as f64) / lead).abs().powf(1.0 / (n - i) as f64))
            .fold(0.0f64, f64::max)
            * 2.0;
        let r = T::of(bound.max(1.0));
        let mut z: Vec<Complex<T>> = (0..n)
            .map(|k| {
                let th = T::of(std::f64::consts::TAU * (k as f64 + 0.25) / n as f64 + 0.4);
                Complex::new(r * th.cos(), r * th.sin()) * T::of(0.5 + 0.5 * (k as f64 + 1.0) / n as f64)
            })
            .collect();
        let dp = self.derivative();
        let tol = T::of(T::UNIT_ROUNDOFF * 8.0);
        let mut converged = false;
        for _ in 0..2000 {
            let mut max_step = T::zero();
            for k in 0..n {
                let pk = self.eval(z[k]);
                if pk.norm() == T::zero() {
                    continue;
                }
                let ratio = pk / dp.eval(z[k]);
                let s: Complex<T> = (0..n).filter(|&j| j != k).map(|j| Complex::<T>::one() / (z[k] - z[j])).sum();
                let w = ratio / (Complex::<T>::one() - ratio * s);
                if !(w.re.is_finite() && w.im.is_finite()) {
                    continue;
                }
                z[k] -= w;
                let rel = w.norm() / z[k].norm().max(T::one());
                if rel > max_step {
                    max_step = rel;
                }
            }
            if max_step <= tol {
                converged = true;
                break;
            }
        }
        for zk in z.iter_mut() {
            for _ in 0..3 {
                let d = dp.eval(*zk);
                if d.norm() == T::zero() {
                    break;
                }
                let step = self.eval(*zk) / d;
                if step.re.is_finite() && step.im.is_finite() {
                    *zk -= step;
                }
            }
        }
        if !converged {
            // Multiple roots converge only linearly; accept if residuals are small.
            let scale: f64 = self.coeffs.iter().map(|c| (*c as f64).abs()).sum();
            let worst = z
                .iter()
                .map(|&zk| self.eval(zk).norm().to_f64_lossy() / (scale * zk.norm().to_f64_lossy().max(1.0).powi(n as i32)))
                .fold(0.0, f64::max);
            if worst > 1e3 * T::UNIT_ROUNDOFF.sqrt() {
                return Err(Error::RootFinding(format!("residual {worst:e}")));
            }
        }
        Ok(z)
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0 && self.coeffs.len() > 1 {
                continue;
            }
            let sign = if c < 0 { "-" } else if first { "" } else { "+" };
            let a = c.abs();
            let body = match (i, a) {
                (0, _) => a.to_string(),
                (1, 1) => "t".to_string(),
                (1, _) => format!("{a}t"),
                (_, 1) => format!("t^{i}"),
                _ => format!("{a}t^{i}"),
            };
            if first {
                write!(f, "{sign}{body}")?;
            } else {
                write!(f, " {sign} {body}")?;
            }
            first = false;
        }
        Ok(())
    }
}

/// Monic `det(tI − M)` by exact Faddeev–LeVerrier recursion.
pub fn char_poly(m: &[Vec<i64>]) -> IntPolynomial {
    let n = m.len();
    assert!(m.iter().all(|r| r.len() == n), "matrix must be square");
    let a: Vec<Vec<BigInt>> = m.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let mut c = vec![BigInt::zero(); n + 1];
    c[n] = BigInt::one();
    let mut mk = vec![vec![BigInt::zero(); n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = matmul_big(&a, &mk);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += &c[n - k + 1];
        }
        mk = next;
        let am = matmul_big(&a, &mk);
        let tr: BigInt = (0..n).map(|i| am[i][i].clone()).sum();
        c[n - k] = -(tr / BigInt::from(k));
    }
    IntPolynomial::new(c.iter().map(|x| x.to_i128().expect("characteristic polynomial coefficient exceeds i128")).collect())
}

fn matmul_big(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let n = a.len();
    let mut out = vec![vec![BigInt::zero(); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..n {
                if !b[k][j].is_zero() {
                    out[i][j] += &a[i][k] * &b[k][j];
                }
            }
        }
    }
    out
}

pub fn matmul_i64(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = a.len();
    let p = b[0].len();
    let mut out = vec![vec![0i64; p]; n];
    for i in 0..n {
        for k in 0..b.len() {
            if a[i][k] != 0 {
                for j in 0..p {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
    }
    out
}

/// Scale convention for the eigenvector Γ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GammaNorm {
    /// Entry of largest modulus equal to 1.
    LargestPositive,
    /// Entry `index` equal to `value`.
    Anchor { index: usize, value: f64 },
}

/// Which expanding non-real eigenvalue to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BetaChoice {
    /// Largest modulus, positive imaginary part.
    #[default]
    Largest,
    /// Index into the candidates sorted by decreasing modulus (positive imaginary parts only).
    Index(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenData<T: Scalar> {
    pub beta: Complex<T>,
    pub beta_inv: Complex<T>,
    pub modulus: T,
    /// `β / |β|`.
    pub beta0: Complex<T>,
    /// `arg β₀` in radians.
    pub phi: T,
    pub gamma: Vec<Complex<T>>,
    /// Perron–Frobenius eigenvalue `α⁻¹`.
    pub perron: T,
    pub alpha: T,
    /// Certified tail constant `max |Γ(p)| / (|β| − 1)`.
    pub c: T,
    /// Lexicographically smallest prefix attaining `max |Γ(p)|`.
    pub c_prefix: Vec<Letter>,
    pub eps_num: f64,
}

pub fn default_eps_num<T: Scalar>() -> f64 {
    if T::UNIT_ROUNDOFF < 1e-15 {
        1e-14
    } else {
        100.0 * T::UNIT_ROUNDOFF
    }
}

/// Chosen expanding non-real eigenvalue of an integer matrix, with its dominant eigenvalue.
pub fn select_beta_of_matrix<T: Scalar>(m: &[Vec<i64>], choice: BetaChoice) -> Result<(Complex<T>, T)> {
    let roots = char_poly(m).roots::<T>()?;
    let eps = default_eps_num::<T>();
    let one = T::one();
    let mut cands: Vec<Complex<T>> = roots
        .iter()
        .copied()
        .filter(|z| z.norm() > one + T::of(eps) && z.im > T::of(eps))
        .collect();
    cands.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).expect("finite roots"));
    let beta = match choice {
        BetaChoice::Largest => cands.first().copied(),
        BetaChoice::Index(k) => cands.get(k).copied(),
    }
    .ok_or(Error::NoSuitableEigenvalue)?;
    let perron = roots.iter().copied().max_by(|a, b| a.norm().partial_cmp(&b.norm()).expect("finite")).expect("nonempty").re;
    Ok((beta, perron))
}

pub fn select_beta<T: Scalar>(sub: &Substitution, norm: GammaNorm, choice: BetaChoice) -> Result<EigenData<T>> {
    let m = sub.matrix();
    let (beta, perron) = select_beta_of_matrix::<T>(&m, choice)?;
    let one = T::one();
    let eps = default_eps_num::<T>();
    let gamma = eigenvector(&m, beta, norm);
    let modulus = beta.norm();
    let (maxp, prefix) = max_prefix_gamma(sub, &gamma);
    Ok(EigenData {
        beta,
        beta_inv: Complex::<T>::one() / beta,
        modulus,
        beta0: beta / modulus,
        phi: beta.im.atan2(beta.re),
        gamma,
        perron,
        alpha: one / perron,
        c: maxp / (modulus - one),
        c_prefix: prefix,
        eps_num: eps,
    })
}

/// Eigenvector of `M` for `β` by two steps of inverse iteration.
fn eigenvector<T: Scalar>(m: &[Vec<i64>], beta: Complex<T>, norm: GammaNorm) -> Vec<Complex<T>> {
    let n = m.len();
    let mut a: Vec<Vec<Complex<T>>> = m
        .iter()
        .map(|r| r.iter().map(|&x| Complex::new(T::of(x as f64), T::zero())).collect())
        .collect();
    // Shift slightly off the eigenvalue so the solve stays finite.
    let shift = beta + Complex::new(T::of(1e3 * T::UNIT_ROUNDOFF), T::zero()) * beta.norm();
    for (i, row) in a.iter_mut().enumerate() {
        row[i] -= shift;
    }
    let mut v: Vec<Complex<T>> = (0..n).map(|i| Complex::new(T::one(), T::of(0.1 * (i as f64 + 1.0)))).collect();
    for _ in 0..3 {
        v = solve(&a, &v);
        let s = v.iter().map(|z| z.norm()).fold(T::zero(), T::max);
        for z in v.iter_mut() {
            *z /= s;
        }
    }
    normalize_gamma(&mut v, norm);
    v
}

pub fn normalize_gamma<T: Scalar>(v: &mut [Complex<T>], norm: GammaNorm) {
    let target = match norm {
        GammaNorm::LargestPositive => {
            let k = (0..v.len()).max_by(|&i, &j| v[i].norm().partial_cmp(&v[j].norm()).expect("finite")).expect("nonempty");
            (k, Complex::new(T::one(), T::zero()))
        }
        GammaNorm::Anchor { index, value } => (index, Complex::new(T::of(value), T::zero())),
    };
    let scale = target.1 / v[target.0];
    for z in v.iter_mut() {
        *z *= scale;
    }
}

/// Gaussian elimination with partial pivoting.
fn solve<T: Scalar>(a: &[Vec<Complex<T>>], b: &[Complex<T>]) -> Vec<Complex<T>> {
    let n = a.len();
    let mut m: Vec<Vec<Complex<T>>> = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].norm().partial_cmp(&m[j][col].norm()).expect("finite")).expect("nonempty");
        m.swap(col, piv);
        x.swap(col, piv);
        let p = m[col][col];
        if p.norm() == T::zero() {
            continue;
        }
        for r in col + 1..n {
            let f = m[r][col] / p;
            if f.norm() == T::zero() {
                continue;
            }
            let (above, below) = m.split_at_mut(r);
            for (a, &b) in below[0][col..].iter_mut().zip(&above[col][col..]) {
                *a -= f * b;
            }
            let t = x[col];
            x[r] -= f * t;
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for c in col + 1..n {
            s -= m[col][c] * x[c];
        }
        let p = m[col][col];
        x[col] = if p.norm() == T::zero() { Complex::new(T::one(), T::zero()) } else { s / p };
    }
    x
}

fn max_prefix_gamma<T: Scalar>(sub: &Substitution, gamma: &[Complex<T>]) -> (T, Vec<Letter>) {
    let mut best = T::zero();
    let mut best_p: Vec<Letter> = Vec::new();
    let tie = T::of(1e3 * T::UNIT_ROUNDOFF);
    for &l in sub.labels() {
        let p = sub.prefix(l);
        let g = gamma_of_word(gamma, p).norm();
        let name = |w: &[Letter]| sub.format_word(w);
        if g > best + tie || ((g - best).abs() <= tie && !p.is_empty() && (best_p.is_empty() || name(p) < name(&best_p))) {
            if g > best {
                best = g;
            }
            best_p = p.to_vec();
        }
    }
    (best, best_p)
}

pub fn gamma_of_word<T: Scalar>(gamma: &[Complex<T>], w: &[Letter]) -> Complex<T> {
    w.iter().fold(Complex::zero(), |acc, b| acc + gamma[b.0])
}

impl<T: Scalar> EigenData<T> {
    pub fn gamma_of(&self, w: &[Letter]) -> Complex<T> {
        gamma_of_word(&self.gamma, w)
    }

    /// `max_a |(MΓ − βΓ)_a|`.
    pub fn eigen_residual(&self, m: &[Vec<i64>]) -> T {
        let mut worst = T::zero();
        for (a, row) in m.iter().enumerate() {
            let mv: Complex<T> = row.iter().zip(&self.gamma).map(|(&x, g)| *g * T::of(x as f64)).sum();
            let r = (mv - self.beta * self.gamma[a]).norm();
            if r > worst {
                worst = r;
            }
        }
        worst
    }

    /// Stretched-exponential exponent `log(|β| − η) / log(α⁻¹ + η)` with `η = |β|(A − 1)/A`.
    pub fn rho(&self, a: T) -> T {
        let eta = self.modulus * (a - T::one()) / a;
        (self.modulus - eta).ln() / (self.perron + eta).ln()
    }

    /// Default `A = |β|^{1/2}` used for good-direction diagnostics.
    pub fn default_a(&self) -> T {
        self.modulus.sqrt()
    }

    pub fn cast_f64(&self) -> EigenData<f64> {
        let c = |z: Complex<T>| Complex::new(z.re.to_f64_lossy(), z.im.to_f64_lossy());
        EigenData {
            beta: c(self.beta),
            beta_inv: c(self.beta_inv),
            modulus: self.modulus.to_f64_lossy(),
            beta0: c(self.beta0),
            phi: self.phi.to_f64_lossy(),
            gamma: self.gamma.iter().map(|&z| c(z)).collect(),
            perron: self.perron.to_f64_lossy(),
            alpha: self.alpha.to_f64_lossy(),
            c: self.c.to_f64_lossy(),
            c_prefix: self.c_prefix.clone(),
            eps_num: self.eps_num,
        }
    }

    pub fn to_json(&self, sub: &Substitution) -> Value {
        let cx = |z: Complex<T>| json!({"re": num17(z.re.to_f64_lossy()), "im": num17(z.im.to_f64_lossy())});
        json!({
            "beta": cx(self.beta),
            "modulus": num17(self.modulus.to_f64_lossy()),
            "beta0": cx(self.beta0),
            "phi": num17(self.phi.to_f64_lossy()),
            "gamma": self.gamma.iter().map(|&z| cx(z)).collect::<Vec<_>>(),
            "perron": num17(self.perron.to_f64_lossy()),
            "alpha": num17(self.alpha.to_f64_lossy()),
            "c": num17(self.c.to_f64_lossy()),
            "c_prefix": sub.format_word(&self.c_prefix),
            "eps_num": num17(self.eps_num),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootOfUnityCheck {
    pub pass: bool,
    pub witness: Option<u64>,
    /// `min_k |β₀^k − 1|` over the checked range.
    pub min_distance: f64,
}

/// Checks `β₀^k ≠ 1` for `1 ≤ k ≤ max_k` with tolerance `10·eps`.
pub fn root_of_unity_check(beta0: Complex<f64>, max_k: u64, eps: f64) -> RootOfUnityCheck {
    let theta = beta0.im.atan2(beta0.re);
    let tau = std::f64::consts::TAU;
    let mut min_d = f64::INFINITY;
    for k in 1..=max_k {
        let a = (theta * k as f64).rem_euclid(tau);
        let d = 2.0 * (a.min(tau - a) / 2.0).sin();
        if d < min_d {
            min_d = d;
        }
        if d <= 10.0 * eps.max(k as f64 * f64::EPSILON * theta.abs()) {
            return RootOfUnityCheck { pass: false, witness: Some(k), min_distance: d };
        }
    }
    RootOfUnityCheck { pass: true, witness: None, min_distance: min_d }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::{ay_substitution, fibonacci_substitution, AY_GAMMA_ANCHOR};

    fn ay_product() -> IntPolynomial {
        let a = IntPolynomial::new(vec![1, 0, 0, -1]);
        let b = IntPolynomial::new(vec![-1, 1, 1, 1]);
        let c = IntPolynomial::new(vec![1, 1, 1, -1]);
        a.mul(&b).mul(&c)
    }

    #[test]
    fn ay_char_poly_matches_product() {
        let p = char_poly(&ay_substitution().matrix());
        let q = ay_product();
        assert!(p == q || p == q.neg(), "{p} vs {q}");
        assert_eq!(p.leading(), 1);
    }

    #[test]
    fn identity_char_poly() {
        let id = vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
        assert_eq!(char_poly(&id).coeffs(), &[-1, 3, -3, 1]);
    }

    #[test]
    fn ay_beta_and_gamma() {
        let s = ay_substitution();
        let e: EigenData<f64> = select_beta(&s, GammaNorm::Anchor { index: AY_GAMMA_ANCHOR, value: -1.0 }, BetaChoice::Largest).unwrap();
        assert!((e.beta.re + 0.771845).abs() < 1e-6 && (e.beta.im - 1.11514).abs() < 1e-5);
        let b = e.beta;
        let one = Complex::new(1.0, 0.0);
        let expect = [b * b + b + one, -b, -b, -b * b - b - one, b + one, b + one, -b * b - b - 2.0 * one, -one, -one];
        for (g, x) in e.gamma.iter().zip(expect) {
            assert!((g - x).norm() < 1e-12, "{g} vs {x}");
        }
        assert!(e.eigen_residual(&s.matrix()) < 1e-12);
        assert!((e.c - e.modulus / (e.modulus - 1.0)).abs() < 1e-12);
        assert_eq!(s.format_word(&e.c_prefix), "2");
        let g35 = e.gamma_of(&s.word("35").unwrap());
        assert!((g35 - one).norm() < 1e-12);
        assert!((e.alpha - 0.5436890126920764).abs() < 1e-12);
    }

    #[test]
    fn fibonacci_has_no_complex_eigenvalue() {
        let r: Result<EigenData<f64>> = select_beta(&fibonacci_substitution(), GammaNorm::LargestPositive, BetaChoice::Largest);
        assert_eq!(r.unwrap_err(), Error::NoSuitableEigenvalue);
    }

    #[test]
    fn single_precision_agrees() {
        let s = ay_substitution();
        let e: EigenData<f32> = select_beta(&s, GammaNorm::Anchor { index: AY_GAMMA_ANCHOR, value: -1.0 }, BetaChoice::Largest).unwrap();
        assert!((e.beta.re + 0.771845).abs() < 1e-4 && (e.beta.im - 1.11514).abs() < 1e-4);
        assert!((e.c - 3.807).abs() < 1e-2);
    }

    #[test]
    fn roots_of_unity() {
        let i = Complex::new(0.0, 1.0);
        let r = root_of_unity_check(i, 10, 1e-14);
        assert_eq!((r.pass, r.witness), (false, Some(4)));
        let th = std::f64::consts::TAU * (2f64.sqrt() - 1.0);
        assert!(root_of_unity_check(Complex::new(th.cos(), th.sin()), 10_000, 1e-14).pass);
    }

    #[test]
    fn polynomial_display() {
        assert_eq!(IntPolynomial::new(vec![1, -2, 0, 1]).to_string(), "1 - 2t + t^3");
    }
}
