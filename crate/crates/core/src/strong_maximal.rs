//! Projections controlling two-parameter martingales at height `λ = e^r`.
//!
//! A first Cuculescu pass on `(E_n ⊗ id)(f)` at the heights `e^ℓ` yields level
//! projections `π_j = M_j − M_{j−1}` with `M_j = ⋀_{ℓ≥j} q(e^ℓ)`. They weight
//! `Π_λ = Σ_{j≥r} e^j j^{1+ε} π_j`, a second pass on `(id ⊗ E_m)(Π_λ)` gives new level
//! projections, and `q(λ) = 1 − Σ_{j≥r} π_j^{[2]}`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::cuculescu::cuculescu_projections;
use crate::error::{Error, Result};
use crate::filtration::{martingale, Filtration, TwoParamFiltration};
use crate::orlicz::log_plus;
use crate::qps::{CMatrix, Hermitian, Projection, Subspace, EIG_TOL, MEET_TOL};

type Op = Hermitian<f64>;
type Proj = Projection<f64>;

/// Truncation index for `A_ε`.
pub const A_EPS_TERMS: usize = 1_000_000;
pub const THEOREM_B_SLACK: f64 = 1e-6;

/// `Σ_{j≤J} j^{−(1+ε)} + J^{−ε}/ε`, an upper bound for `Σ_{j≥1} j^{−(1+ε)}`.
pub fn a_epsilon(eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {eps}")));
    }
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&v) = cache.lock().unwrap().get(&eps.to_bits()) {
        return Ok(v);
    }
    let s: f64 = (1..=A_EPS_TERMS).rev().map(|j| (j as f64).powf(-(1.0 + eps))).sum();
    let v = s + (A_EPS_TERMS as f64).powf(-eps) / eps;
    cache.lock().unwrap().insert(eps.to_bits(), v);
    Ok(v)
}

/// Cuculescu projections on a height grid with their running meets.
#[derive(Clone, Debug)]
pub struct LevelProjections {
    lo: i32,
    hi: i32,
    q: Vec<Proj>,
    meets: Vec<Proj>,
    pi: Vec<Proj>,
}

impl LevelProjections {
    pub fn heights(&self) -> (i32, i32) {
        (self.lo, self.hi)
    }

    /// `q(e^ℓ)` for `ℓ ∈ [lo, hi]`.
    pub fn q(&self, l: i32) -> Option<&Proj> {
        (self.lo..=self.hi).contains(&l).then(|| &self.q[(l - self.lo) as usize])
    }

    /// `M_j = ⋀_{ℓ=j}^{hi} q(e^ℓ)` for `j ∈ [lo, hi+1]` (`M_{hi+1} = 1`).
    pub fn meet(&self, j: i32) -> Option<&Proj> {
        (self.lo..=self.hi + 1).contains(&j).then(|| &self.meets[(j - self.lo) as usize])
    }

    /// `π_j = M_j − M_{j−1}` for `j ∈ [lo+1, hi+1]`.
    pub fn pi(&self, j: i32) -> Option<&Proj> {
        (self.lo + 1..=self.hi + 1).contains(&j).then(|| &self.pi[(j - self.lo - 1) as usize])
    }

    pub fn pi_range(&self) -> std::ops::RangeInclusive<i32> {
        self.lo + 1..=self.hi + 1
    }
}

/// Runs Cuculescu on the martingale of `f` at every `e^ℓ`, `ℓ ∈ [lo, hi]`.
pub fn level_projections(f: &Op, filt: &Filtration<f64>, lo: i32, hi: i32) -> Result<LevelProjections> {
    if hi < lo {
        return Err(Error::InvalidParameter(format!("empty height range [{lo}, {hi}]")));
    }
    let d = f.dim();
    let mart = martingale(f, filt)?;
    let q: Vec<Proj> = (lo..=hi)
        .map(|l| cuculescu_projections(&mart, filt, (l as f64).exp()).map(|r| r.q))
        .collect::<Result<_>>()?;
    // Top-down: M_j is the part of range(M_{j+1}) fixed by q(e^j).
    let mut v = Subspace::full(d);
    let mut meets = vec![Proj::identity(d)];
    let mut pi = Vec::new();
    for l in (lo..=hi).rev() {
        let qm = q[(l - lo) as usize].as_op().matrix();
        let (keep, drop, _) = v.split(qm, |x| x >= 1.0 - MEET_TOL);
        pi.push(drop.projection());
        meets.push(keep.projection());
        v = keep;
    }
    meets.reverse();
    pi.reverse();
    Ok(LevelProjections { lo, hi, q, meets, pi })
}

#[derive(Clone, Debug)]
pub struct StrongMaxCertificate {
    pub q: Proj,
    pub lambda: f64,
    pub epsilon: f64,
    pub r: i32,
    /// `λ ≤ (2e²)^{1/ε}`, where `q = 0` is returned.
    pub trivial: bool,
    pub first: Option<LevelProjections>,
    pub rho: Proj,
    pub pi_lambda: Op,
    pub second: Option<LevelProjections>,
    pub a_eps: f64,
    /// `max_{n,m} λ_max(q f_{n,m} q) / λ`.
    pub measured_c: f64,
    pub worst_cell: (usize, usize),
    /// `τ(1 − q)`.
    pub trace_complement: f64,
    pub orlicz_rhs: f64,
    /// `τ(1 − q) / orlicz_rhs` (0 for trivial certificates).
    pub measured_trace_ratio: f64,
    /// `Σ_{ℓ≥r−1} e^{−ℓ} τ(Π_λ)`.
    pub intermediate_rhs: f64,
}

/// `(2e²)^{1/ε}`.
pub fn trivial_threshold(eps: f64) -> f64 {
    (2.0 * std::f64::consts::E.powi(2)).powf(1.0 / eps)
}

/// `τ{(f/λ)(1 + log₊(f/λ))(1 + log₊(f/λ^{1−ε}))^{1+ε}}`.
pub fn theorem_b_rhs(f: &Op, lambda: f64, eps: f64) -> f64 {
    let lam1 = lambda.powf(1.0 - eps);
    let vals = f.eigenvalues();
    vals.iter()
        .map(|&x| {
            let x = x.max(0.0);
            (x / lambda) * (1.0 + log_plus(x / lambda)) * (1.0 + log_plus(x / lam1)).powf(1.0 + eps)
        })
        .sum::<f64>()
        / vals.len() as f64
}

fn exact_exponent(lambda: f64) -> Result<i32> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    let l = lambda.ln();
    let r = l.round();
    if (l - r).abs() > 1e-9 || r < 1.0 {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} is not e^r for an integer r ≥ 1")));
    }
    Ok(r as i32)
}

fn top_height(norm: f64, floor: i32) -> i32 {
    let top = if norm > 0.0 { norm.ln().ceil() as i32 + 1 } else { floor };
    top.max(floor)
}

pub fn strong_q(f: &Op, lambda: f64, eps: f64, tp: &TwoParamFiltration<f64>) -> Result<StrongMaxCertificate> {
    let r = exact_exponent(lambda)?;
    let a_eps = a_epsilon(eps)?;
    f.same_dim(&Op::zero(tp.dim()))?;
    let d = f.dim();
    let scale = f.spectral_norm().max(1.0);
    if f.min_eigenvalue() < -1e-10 * scale {
        return Err(Error::NotPositive(f.min_eigenvalue()));
    }
    let orlicz_rhs = theorem_b_rhs(f, lambda, eps);
    if lambda <= trivial_threshold(eps) {
        return Ok(StrongMaxCertificate {
            q: Proj::zero(d),
            lambda,
            epsilon: eps,
            r,
            trivial: true,
            first: None,
            rho: Proj::zero(d),
            pi_lambda: Op::zero(d),
            second: None,
            a_eps,
            measured_c: 0.0,
            worst_cell: (0, 0),
            trace_complement: 1.0,
            orlicz_rhs,
            measured_trace_ratio: 0.0,
            intermediate_rhs: 0.0,
        });
    }
    let first = level_projections(f, tp.left_lift(), r - 1, top_height(f.spectral_norm(), r - 1))?;
    let rho = first.meet(r - 1).expect("r−1 is the bottom height").complement();
    let mut pi_lambda = CMatrix::<f64>::zeros(d, d);
    for j in r..=first.hi + 1 {
        let w = (j as f64).exp() * (j as f64).powf(1.0 + eps);
        pi_lambda += first.pi(j).unwrap().as_op().matrix() * nalgebra::Complex::new(w, 0.0);
    }
    let pi_lambda = Op::from_matrix((&pi_lambda + pi_lambda.adjoint()) * nalgebra::Complex::new(0.5, 0.0))?;
    let second = level_projections(&pi_lambda, tp.right_lift(), r - 1, top_height(pi_lambda.spectral_norm(), r - 1))?;
    let q = second.meet(r - 1).unwrap().clone();

    let grid = tp.martingale(f)?;
    let (_, cols) = tp.shape();
    let mut measured_c = 0.0;
    let mut worst_cell = (0, 0);
    for (idx, fnm) in grid.entries().iter().enumerate() {
        let c = fnm.compress(&q).max_eigenvalue() / lambda;
        if c > measured_c {
            measured_c = c;
            worst_cell = (idx / cols, idx % cols);
        }
    }
    let trace_complement = 1.0 - q.trace();
    let geometric = (-(r as f64 - 1.0)).exp() / (1.0 - (-1.0f64).exp());
    let intermediate_rhs = geometric * pi_lambda.trace();
    let measured_trace_ratio = if orlicz_rhs > 0.0 {
        trace_complement / orlicz_rhs
    } else if trace_complement > EIG_TOL {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(StrongMaxCertificate {
        q,
        lambda,
        epsilon: eps,
        r,
        trivial: false,
        first: Some(first),
        rho,
        pi_lambda,
        second: Some(second),
        a_eps,
        measured_c,
        worst_cell,
        trace_complement,
        orlicz_rhs,
        measured_trace_ratio,
        intermediate_rhs,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct TheoremBReport {
    pub measured_c: f64,
    pub bound_c: f64,
    pub trace_complement: f64,
    pub orlicz_rhs: f64,
    pub trace_ratio: f64,
    pub intermediate_rhs: f64,
}

/// Checks `q f_{n,m} q ≤ 2(A_ε + 1) λ q` and the intermediate trace bound; reports the trace ratio.
pub fn verify_theorem_b(cert: &StrongMaxCertificate, f: &Op, tp: &TwoParamFiltration<f64>) -> Result<TheoremBReport> {
    let bound_c = 2.0 * (cert.a_eps + 1.0);
    let mut measured = cert.measured_c;
    if !cert.trivial {
        // Re-measure from scratch rather than trusting the stored value.
        let grid = tp.martingale(f)?;
        let (_, cols) = tp.shape();
        for (idx, fnm) in grid.entries().iter().enumerate() {
            let sp = fnm.compress(&cert.q).spectrum();
            let c = sp.max() / cert.lambda;
            measured = measured.max(c);
            if c > bound_c + THEOREM_B_SLACK {
                let v: Vec<String> = sp.vectors.column(sp.dim() - 1).iter().map(|z| format!("{z:.4}")).collect();
                return Err(Error::Violation(format!(
                    "q f q ≤ Cλq fails at (n, m) = ({}, {}): {c} > {bound_c}, eigenvector [{}]",
                    idx / cols,
                    idx % cols,
                    v.join(", ")
                )));
            }
        }
        if cert.trace_complement > cert.intermediate_rhs + 1e-7 {
            return Err(Error::Violation(format!(
                "τ(1 − q) = {} exceeds Σ e^(−ℓ) τ(Π_λ) = {}",
                cert.trace_complement, cert.intermediate_rhs
            )));
        }
    }
    if !cert.measured_trace_ratio.is_finite() {
        return Err(Error::Violation("trace ratio is not finite".into()));
    }
    Ok(TheoremBReport {
        measured_c: measured,
        bound_c,
        trace_complement: cert.trace_complement,
        orlicz_rhs: cert.orlicz_rhs,
        trace_ratio: cert.measured_trace_ratio,
        intermediate_rhs: cert.intermediate_rhs,
    })
}

/// Support of `a` has trace `2^{−k}` and `‖a‖_∞ ≤ τ(e)^{−1} (1 + log₊ τ(e)^{−1})^{−s}`.
pub fn atom_check(a: &Op, s: f64) -> bool {
    let vals = a.eigenvalues();
    let support = vals.iter().filter(|x| x.abs() > EIG_TOL).count();
    if support == 0 {
        return false;
    }
    let te = support as f64 / vals.len() as f64;
    let k = (-te.log2()).round();
    if (te - 2f64.powf(-k)).abs() > 1e-9 {
        return false;
    }
    let bound = (1.0 / te) * (1.0 + log_plus(1.0 / te)).powf(-s);
    a.spectral_norm() <= bound * (1.0 + 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtration::{BlockMode, SubalgebraDescriptor};

    fn dyadic(d: usize) -> Filtration<f64> {
        Filtration::dyadic_commutative(d).unwrap()
    }

    #[test]
    fn a_eps_values() {
        // ζ(3/2) = 2.6123753486854883 and ζ(2) = π²/6.
        assert!((a_epsilon(0.5).unwrap() - 2.612_375_348_685_488).abs() < 1e-5);
        assert!((a_epsilon(1.0).unwrap() - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-9);
        assert!(a_epsilon(0.5).unwrap() >= 2.612_375_348_685_488);
        assert!(a_epsilon(0.0).is_err());
    }

    #[test]
    fn single_level_gives_spectral_bands() {
        let f = Hermitian::from_real_diagonal(&[0.2, 1.5, 3.0, 9.0, 30.0, 0.9, 2.5, 12.0]);
        let filt = Filtration::new(vec![SubalgebraDescriptor::full(8).unwrap()]).unwrap();
        let lp = level_projections(&f, &filt, -1, 4).unwrap();
        for l in -1..=4 {
            let want = f.spectral_projection(crate::qps::Interval::at_most((l as f64).exp()));
            assert_eq!(lp.q(l).unwrap().as_op().max_abs_diff(want.as_op()), 0.0);
        }
        for j in 0..=5 {
            let band: Vec<usize> = f
                .diagonal()
                .iter()
                .enumerate()
                .filter(|(_, &x)| x > ((j - 1) as f64).exp() && x <= (j as f64).exp())
                .map(|(i, _)| i)
                .collect();
            let want = Projection::from_indices(8, &band);
            assert_eq!(lp.pi(j).unwrap().as_op().max_abs_diff(want.as_op()), 0.0, "j = {j}");
        }
    }

    #[test]
    fn level_projections_telescope_noncommutative() {
        let f = Hermitian::from_real_rows(&[
            vec![5.0, 1.0, 0.5, 0.3],
            vec![1.0, 2.0, 0.7, 0.4],
            vec![0.5, 0.7, 9.0, 1.1],
            vec![0.3, 0.4, 1.1, 0.5],
        ])
        .unwrap();
        let filt = Filtration::new(vec![
            SubalgebraDescriptor::trivial(4).unwrap(),
            SubalgebraDescriptor::uniform_partition(4, 2, BlockMode::Full).unwrap(),
            SubalgebraDescriptor::full(4).unwrap(),
        ])
        .unwrap();
        let lp = level_projections(&f, &filt, -1, 4).unwrap();
        let mut sum = Hermitian::zero(4);
        for j in lp.pi_range() {
            let p = lp.pi(j).unwrap();
            assert!(p.as_op().min_eigenvalue() > -1e-8);
            sum = &sum + p.as_op();
            for k in lp.pi_range().filter(|&k| k > j) {
                let cross = lp.pi(k).unwrap().as_op().matrix() * p.as_op().matrix();
                assert!(Hermitian::operator_norm_of(&cross) < 1e-8);
            }
        }
        let want = lp.meet(-1).unwrap().complement();
        assert!(sum.max_abs_diff(want.as_op()) < 1e-7);
    }

    #[test]
    fn trivial_threshold_gives_zero() {
        let tp = TwoParamFiltration::new(dyadic(2), dyadic(2)).unwrap();
        let f = Hermitian::scaled_identity(4, 1.0);
        let cert = strong_q(&f, 2f64.exp(), 0.5, &tp).unwrap();
        assert!(cert.trivial && cert.q.is_zero());
        let rep = verify_theorem_b(&cert, &f, &tp).unwrap();
        assert_eq!((rep.measured_c, rep.trace_ratio), (0.0, 0.0));
        assert!(strong_q(&f, 7.0, 0.5, &tp).is_err());
    }

    #[test]
    fn small_operator_gives_identity() {
        let tp = TwoParamFiltration::new(dyadic(4), dyadic(4)).unwrap();
        let vals: Vec<f64> = (0..16).map(|k| 1.0 + 10.0 * k as f64).collect();
        let f = Hermitian::from_real_diagonal(&vals);
        let r = 7;
        let cert = strong_q(&f, (r as f64).exp(), 0.5, &tp).unwrap();
        assert!(cert.rho.is_zero());
        assert_eq!(cert.pi_lambda.spectral_norm(), 0.0);
        assert_eq!(cert.trace_complement, 0.0);
        let rep = verify_theorem_b(&cert, &f, &tp).unwrap();
        assert!(rep.measured_c <= 1.0);
    }

    #[test]
    fn atom_examples() {
        let p = Hermitian::from_real_diagonal(&[1.0, 1.0, 0.0, 0.0]);
        assert!(atom_check(&Hermitian::identity(4), 0.0));
        assert!(atom_check(&(p.clone() * 2.0), 0.0));
        assert!(!atom_check(&(p * 4.0), 1.0));
        assert!(!atom_check(&Hermitian::from_real_diagonal(&[1.0, 1.0, 1.0, 0.0]), 0.0));
    }

    /// Pointwise version of the whole construction on a `d₁ × d₂` grid of atoms.
    fn scalar_oracle(vals: &[f64], d1: usize, d2: usize, r: i32, eps: f64) -> Vec<bool> {
        let levels = |d: usize| d.trailing_zeros() as usize + 1;
        let avg = |v: &[f64], level: usize, left: bool| -> Vec<f64> {
            let (d, stride) = if left { (d1, d2) } else { (d2, 1) };
            let w = d >> level;
            (0..v.len())
                .map(|x| {
                    let (i, k) = (x / d2, x % d2);
                    let c = if left { i } else { k };
                    let start = (c / w) * w;
                    let base = if left { k } else { i * d2 };
                    (start..start + w).map(|t| v[base + t * stride]).sum::<f64>() / w as f64
                })
                .collect()
        };
        let alive_at = |v: &[f64], left: bool, lam: f64| -> Vec<bool> {
            let mut alive = vec![true; v.len()];
            for n in 0..levels(if left { d1 } else { d2 }) {
                let g = avg(v, n, left);
                for x in 0..v.len() {
                    alive[x] &= g[x] <= lam + 1e-10 * lam.max(1.0);
                }
            }
            alive
        };
        let pass = |v: &[f64], left: bool| -> (Vec<bool>, Vec<Option<i32>>) {
            // meet(r−1) and the band index j ≥ r of each point (None when in meet(r−1)).
            let top = 60;
            let mut meet = vec![true; v.len()];
            let mut band = vec![None; v.len()];
            for l in (r - 1..=top).rev() {
                let a = alive_at(v, left, (l as f64).exp());
                for x in 0..v.len() {
                    if meet[x] && !a[x] {
                        meet[x] = false;
                        band[x] = Some(l + 1);
                    }
                }
            }
            (meet, band)
        };
        let (_, band1) = pass(vals, true);
        let pi: Vec<f64> = band1
            .iter()
            .map(|b| b.map_or(0.0, |j| (j as f64).exp() * (j as f64).powf(1.0 + eps)))
            .collect();
        pass(&pi, false).0
    }

    #[test]
    fn commutative_matches_scalar_oracle() {
        use rand::{Rng, SeedableRng};
        let (d1, d2) = (8, 8);
        let tp = TwoParamFiltration::new(dyadic(d1), dyadic(d2)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for case in 0..6 {
            let mut vals = vec![1.0; d1 * d2];
            if case == 0 {
                vals[19] = 9f64.exp();
            } else {
                for v in vals.iter_mut() {
                    *v = (rng.random::<f64>() * 12.0 - 2.0).exp();
                }
            }
            let f = Hermitian::from_real_diagonal(&vals);
            for (r, eps) in [(7, 0.5), (8, 0.5), (5, 1.0)] {
                let cert = strong_q(&f, (r as f64).exp(), eps, &tp).unwrap();
                let want = scalar_oracle(&vals, d1, d2, r, eps);
                let idx: Vec<usize> = (0..want.len()).filter(|&x| want[x]).collect();
                assert_eq!(cert.q.as_op().max_abs_diff(Projection::from_indices(64, &idx).as_op()), 0.0, "case {case} r {r}");
                let rep = verify_theorem_b(&cert, &f, &tp).unwrap();
                assert!(rep.measured_c <= rep.bound_c);
                assert!(cert.trace_complement <= cert.intermediate_rhs + 1e-7);
            }
        }
    }
}
