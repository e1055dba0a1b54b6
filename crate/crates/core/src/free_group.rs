//! Words in the free group on `a, b`, the no-sign-change set `Σ`, and coefficientwise
//! multipliers on finitely supported elements of the group algebra.
//!
//! Words print as run-length strings over `{a, A, b, B}` (upper case for inverses):
//! `"a2B3"` is `a²b⁻³`, and the identity prints as `"e"`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::orlicz::{orlicz_norm_of_values, OrliczFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Generator {
    A,
    B,
}

/// Reduced word: adjacent syllables have distinct generators and nonzero exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FreeWord {
    syllables: Vec<(Generator, i64)>,
}

impl FreeWord {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn generator(g: Generator, exp: i64) -> Self {
        Self::from_syllables(&[(g, exp)])
    }

    /// Reduces an arbitrary syllable list.
    pub fn from_syllables(s: &[(Generator, i64)]) -> Self {
        let mut w = Self::identity();
        for &(g, e) in s {
            w.push(g, e);
        }
        w
    }

    fn push(&mut self, g: Generator, e: i64) {
        if e == 0 {
            return;
        }
        match self.syllables.last_mut() {
            Some((h, x)) if *h == g => {
                *x += e;
                if *x == 0 {
                    self.syllables.pop();
                }
            }
            _ => self.syllables.push((g, e)),
        }
    }

    pub fn syllables(&self) -> &[(Generator, i64)] {
        &self.syllables
    }

    pub fn is_identity(&self) -> bool {
        self.syllables.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self { syllables: self.syllables.iter().rev().map(|&(g, e)| (g, -e)).collect() }
    }

    pub fn length(&self) -> u64 {
        self.syllables.iter().map(|s| s.1.unsigned_abs()).sum()
    }

    /// Signed exponent sums `(n_a, n_b)`.
    pub fn quotient_counts(&self) -> (i64, i64) {
        let mut c = (0, 0);
        for &(g, e) in &self.syllables {
            match g {
                Generator::A => c.0 += e,
                Generator::B => c.1 += e,
            }
        }
        c
    }

    /// All `a`-exponents share a sign and all `b`-exponents share a sign.
    pub fn in_sigma(&self) -> bool {
        let uniform = |g: Generator| {
            let mut signs = self.syllables.iter().filter(|s| s.0 == g).map(|s| s.1.signum());
            match signs.next() {
                None => true,
                Some(s) => signs.all(|t| t == s),
            }
        };
        uniform(Generator::A) && uniform(Generator::B)
    }
}

pub fn multiply(u: &FreeWord, v: &FreeWord) -> FreeWord {
    let mut w = u.clone();
    for &(g, e) in &v.syllables {
        w.push(g, e);
    }
    w
}

impl fmt::Display for FreeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.syllables.is_empty() {
            return write!(f, "e");
        }
        for &(g, e) in &self.syllables {
            let c = match (g, e > 0) {
                (Generator::A, true) => 'a',
                (Generator::A, false) => 'A',
                (Generator::B, true) => 'b',
                (Generator::B, false) => 'B',
            };
            if e.abs() == 1 {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c}{}", e.abs())?;
            }
        }
        Ok(())
    }
}

impl FromStr for FreeWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "e" {
            return Ok(Self::identity());
        }
        let mut w = Self::identity();
        let mut chars = s.chars().peekable();
        while let Some(c) = chars.next() {
            let (g, sign) = match c {
                'a' => (Generator::A, 1),
                'A' => (Generator::A, -1),
                'b' => (Generator::B, 1),
                'B' => (Generator::B, -1),
                _ => return Err(Error::Word(format!("unexpected character {c:?} in {s:?}"))),
            };
            let mut digits = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(*d);
                chars.next();
            }
            let n: i64 = if digits.is_empty() {
                1
            } else {
                digits.parse().map_err(|_| Error::Word(format!("bad exponent in {s:?}")))?
            };
            if n == 0 {
                return Err(Error::Word(format!("zero exponent in {s:?}")));
            }
            w.push(g, sign * n);
        }
        Ok(w)
    }
}

/// Every reduced word of length at most `max_len`, shortest first.
pub fn reduced_words(max_len: usize) -> Vec<FreeWord> {
    const LETTERS: [(Generator, i64); 4] = [(Generator::A, 1), (Generator::A, -1), (Generator::B, 1), (Generator::B, -1)];
    let mut out = vec![FreeWord::identity()];
    let mut shell: Vec<(FreeWord, Option<usize>)> = vec![(FreeWord::identity(), None)];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(shell.len() * 3 + 4);
        for (w, last) in &shell {
            for (i, &(g, e)) in LETTERS.iter().enumerate() {
                // Skip the inverse of the last letter.
                if last.is_some_and(|l| l ^ 1 == i) {
                    continue;
                }
                let mut v = w.clone();
                v.push(g, e);
                next.push((v, Some(i)));
            }
        }
        out.extend(next.iter().map(|(w, _)| w.clone()));
        shell = next;
    }
    out
}

pub const MAX_ENUMERATION_LEN: usize = 12;

#[derive(Clone, Debug)]
pub struct SigmaReport {
    pub max_len: usize,
    pub words_checked: usize,
    /// `|Σ ∩ {|ω| ≤ n}|` for `n = 0..=max_len`.
    pub sigma_ball_counts: Vec<usize>,
    pub ball_counts: Vec<usize>,
}

/// Checks `|ω| = |n_a| + |n_b|` exactly on `Σ`, and `|ω| ≥ |n_a| + |n_b|` everywhere.
pub fn sigma_length_identity(max_len: usize) -> Result<SigmaReport> {
    if max_len > MAX_ENUMERATION_LEN {
        return Err(Error::InvalidParameter(format!("max_len {max_len} exceeds {MAX_ENUMERATION_LEN}")));
    }
    let words = reduced_words(max_len);
    let mut sigma_shell = vec![0usize; max_len + 1];
    let mut shell = vec![0usize; max_len + 1];
    for w in &words {
        let len = w.length();
        let (na, nb) = w.quotient_counts();
        let q = na.unsigned_abs() + nb.unsigned_abs();
        if q > len {
            return Err(Error::Word(format!("{w}: |n_a| + |n_b| = {q} exceeds length {len}")));
        }
        if (q == len) != w.in_sigma() {
            return Err(Error::Word(format!("{w}: identity {} but membership {}", q == len, w.in_sigma())));
        }
        shell[len as usize] += 1;
        if w.in_sigma() {
            sigma_shell[len as usize] += 1;
        }
    }
    let cumulative = |v: &[usize]| v.iter().scan(0, |acc, &x| { *acc += x; Some(*acc) }).collect::<Vec<_>>();
    Ok(SigmaReport { max_len, words_checked: words.len(), sigma_ball_counts: cumulative(&sigma_shell), ball_counts: cumulative(&shell) })
}

/// Finitely supported `Σ f̂(ω) λ_ω`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FreeElement {
    coeffs: BTreeMap<FreeWord, Complex64>,
}

impl FreeElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms<I: IntoIterator<Item = (FreeWord, Complex64)>>(terms: I) -> Self {
        let mut e = Self::zero();
        for (w, c) in terms {
            e.add_term(w, c);
        }
        e
    }

    pub fn delta(w: FreeWord) -> Self {
        Self::from_terms([(w, Complex64::new(1.0, 0.0))])
    }

    pub fn add_term(&mut self, w: FreeWord, c: Complex64) {
        let v = *self.coeffs.entry(w.clone()).or_default() + c;
        if v == Complex64::new(0.0, 0.0) {
            self.coeffs.remove(&w);
        } else {
            self.coeffs.insert(w, v);
        }
    }

    pub fn coeff(&self, w: &FreeWord) -> Complex64 {
        self.coeffs.get(w).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FreeWord, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    /// `τ(f) = f̂(e)`.
    pub fn trace(&self) -> Complex64 {
        self.coeff(&FreeWord::identity())
    }

    /// Convolution product.
    pub fn product(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (u, x) in &self.coeffs {
            for (v, y) in &other.coeffs {
                out.add_term(multiply(u, v), x * y);
            }
        }
        out
    }

    fn map_coeffs<F: Fn(&FreeWord, Complex64) -> Complex64>(&self, f: F) -> Self {
        Self::from_terms(self.coeffs.iter().map(|(w, &c)| (w.clone(), f(w, c))))
    }
}

/// `e^{−t|ω|}` on each coefficient.
pub fn free_poisson(f: &FreeElement, t: f64) -> Result<FreeElement> {
    if !(t >= 0.0) {
        return Err(Error::Domain(t));
    }
    Ok(f.map_coeffs(|w, c| c * (-t * w.length() as f64).exp()))
}

/// `e^{2πi(n_a θ₁ + n_b θ₂)}` on each coefficient.
pub fn theta_twist(f: &FreeElement, theta: (f64, f64)) -> FreeElement {
    f.map_coeffs(|w, c| c * twist_phase(w, theta))
}

pub fn twist_phase(w: &FreeWord, theta: (f64, f64)) -> Complex64 {
    let (na, nb) = w.quotient_counts();
    // Reduce the phase mod 1 first so exact halves and quarters stay exact.
    let x = (na as f64 * theta.0 + nb as f64 * theta.1).rem_euclid(1.0);
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * x)
}

#[derive(Clone, Debug)]
pub struct DiagramRow {
    pub word: FreeWord,
    pub length: u64,
    pub n_a: i64,
    pub n_b: i64,
    pub in_sigma: bool,
    /// `e^{−t|ω|}`.
    pub semigroup: f64,
    /// `e^{−t(|n_a| + |n_b|)}`.
    pub torus: f64,
}

impl DiagramRow {
    pub fn gap(&self) -> f64 {
        self.torus - self.semigroup
    }
}

pub const DIAGRAM_REL_TOL: f64 = 1e-14;

/// Compares the free and torus Poisson multipliers on the support of `f`.
pub fn diagram_check(f: &FreeElement, t: f64) -> Result<Vec<DiagramRow>> {
    if !(t >= 0.0) {
        return Err(Error::Domain(t));
    }
    let mut rows = Vec::with_capacity(f.support_len());
    for (w, _) in f.terms() {
        let (na, nb) = w.quotient_counts();
        let row = DiagramRow {
            word: w.clone(),
            length: w.length(),
            n_a: na,
            n_b: nb,
            in_sigma: w.in_sigma(),
            semigroup: (-t * w.length() as f64).exp(),
            torus: (-t * (na.unsigned_abs() + nb.unsigned_abs()) as f64).exp(),
        };
        let close = (row.semigroup - row.torus).abs() <= DIAGRAM_REL_TOL * row.torus.abs().max(f64::MIN_POSITIVE);
        if row.in_sigma && !close {
            return Err(Error::Word(format!("{w}: multipliers differ on Σ ({} vs {})", row.semigroup, row.torus)));
        }
        if !row.in_sigma && t > 0.0 && !(row.semigroup < row.torus) {
            return Err(Error::Word(format!("{w}: expected a strict gap off Σ")));
        }
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug)]
pub struct ClassCBound {
    /// `Σ_{ω∈Σ} |f̂(ω)|`, bounding `‖g‖₁`.
    pub sigma_part: f64,
    /// `‖1‖_{L log² L} Σ_{ω∉Σ} |f̂(ω)|`, bounding `‖h‖_{L log² L}`.
    pub rest_part: f64,
    pub total: f64,
}

/// Upper bound for the class-C norm from the split along `Σ`, using `‖λ_ω‖ = ‖1‖` and the triangle inequality.
pub fn class_c_upper(f: &FreeElement) -> Result<ClassCBound> {
    let unit = orlicz_norm_of_values(&[1.0], &OrliczFunction::log_power(2.0)?)?;
    let (mut s, mut r) = (0.0, 0.0);
    for (w, c) in f.terms() {
        if w.in_sigma() {
            s += c.norm();
        } else {
            r += c.norm();
        }
    }
    let rest_part = unit * r;
    Ok(ClassCBound { sigma_part: s, rest_part, total: s + rest_part })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> FreeWord {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_print() {
        assert_eq!(w("a2B3").syllables(), &[(Generator::A, 2), (Generator::B, -3)]);
        assert_eq!(w("aab").to_string(), "a2b");
        assert_eq!(w("aA").to_string(), "e");
        assert!("a0".parse::<FreeWord>().is_err());
        assert!("c".parse::<FreeWord>().is_err());
    }

    #[test]
    fn multiply_examples() {
        assert!(multiply(&w("a2bA"), &w("a2bA").inverse()).is_identity());
        assert_eq!(multiply(&w("a2"), &w("Ab")), w("ab"));
        assert!(multiply(&w("ab"), &w("BA")).is_identity());
    }

    #[test]
    fn length_counts_sigma() {
        assert_eq!(FreeWord::identity().length(), 0);
        assert_eq!(w("a2b3").length(), 5);
        assert_eq!(w("abA").length(), 3);
        assert_eq!(w("a2b3").quotient_counts(), (2, 3));
        assert_eq!(w("abA").quotient_counts(), (0, 1));
        assert_eq!(FreeWord::identity().quotient_counts(), (0, 0));
        assert!(w("a2b3a").in_sigma());
        assert!(!w("abA").in_sigma());
        assert!(w("B2A").in_sigma());
    }

    #[test]
    fn small_ball_identity() {
        let rep = sigma_length_identity(2).unwrap();
        assert_eq!(rep.words_checked, 17);
        assert_eq!(rep.ball_counts, vec![1, 5, 17]);
        assert_eq!(rep.sigma_ball_counts, vec![1, 5, 17]);
        let rep = sigma_length_identity(3).unwrap();
        // Length-3 words off Σ are `x y x⁻¹` with x ∈ {a, A, b, B}, y a letter of the other generator.
        assert_eq!(rep.ball_counts[3] - rep.sigma_ball_counts[3], 8);
    }

    #[test]
    fn multipliers() {
        let c = |x| Complex64::new(x, 0.0);
        let f = FreeElement::from_terms([(w("a"), c(2.0)), (w("e"), c(0.5)), (w("abA"), Complex64::new(0.0, 1.0))]);
        assert_eq!(free_poisson(&f, 0.0).unwrap(), f);
        assert_eq!(free_poisson(&FreeElement::delta(w("e")), 3.0).unwrap(), FreeElement::delta(w("e")));
        let s = free_poisson(&FreeElement::delta(w("ab")), 1.0).unwrap();
        assert!((s.coeff(&w("ab")) - c((-2f64).exp())).norm() < 1e-16);
        assert_eq!(theta_twist(&f, (0.0, 0.0)), f);
        let t = theta_twist(&FreeElement::delta(w("a")), (0.5, 0.0));
        assert!((t.coeff(&w("a")) + c(1.0)).norm() < 1e-15);
        assert_eq!(theta_twist(&f, (0.3, 0.7)).trace(), f.trace());
    }

    #[test]
    fn diagram_examples() {
        let f = FreeElement::from_terms([(w("a2b"), Complex64::new(1.0, 0.0)), (w("ba"), Complex64::new(-2.0, 0.0))]);
        let t = 0.7;
        for row in diagram_check(&f, t).unwrap() {
            assert!(row.in_sigma);
            assert!((row.semigroup - (-t * row.length as f64).exp()).abs() < 1e-16);
        }
        let rows = diagram_check(&FreeElement::delta(w("abA")), 1.0).unwrap();
        assert!((rows[0].semigroup - (-3f64).exp()).abs() < 1e-16 && (rows[0].torus - (-1f64).exp()).abs() < 1e-16);
        assert!(diagram_check(&FreeElement::delta(w("abA")), 0.0).unwrap()[0].gap() == 0.0);
    }

    #[test]
    fn class_c_examples() {
        let f = FreeElement::from_terms([(w("a2b"), Complex64::new(3.0, 4.0)), (w("b"), Complex64::new(1.0, 0.0))]);
        let b = class_c_upper(&f).unwrap();
        assert_eq!((b.sigma_part, b.rest_part), (6.0, 0.0));
        let b = class_c_upper(&FreeElement::delta(w("abA"))).unwrap();
        assert_eq!(b.sigma_part, 0.0);
        assert!((b.rest_part - 1.0).abs() < 1e-10);
        assert_eq!(class_c_upper(&FreeElement::zero()).unwrap().total, 0.0);
    }
}
