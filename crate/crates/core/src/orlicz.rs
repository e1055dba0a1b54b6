//! `L_p` norms, the Orlicz family `Φ(t) = t(1 + log₊ t)^α` and the
//! Luxemburg norm `inf{λ > 0 : τΦ(|f|/λ) ≤ 1}`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::qps::Hermitian;
use crate::scalar::{lit, to_f64, Real};

pub const ORLICZ_ABS_TOL: f64 = 1e-10;
pub const MAX_BISECTION_STEPS: usize = 200;

/// `log₊ t = max(log t, 0)`.
#[inline]
pub fn log_plus<R: Real>(t: R) -> R {
    if t > R::one() {
        t.ln()
    } else {
        R::zero()
    }
}

/// Convex increasing `Φ` with `Φ(0) = 0`.
#[derive(Clone)]
pub enum OrliczFunction<R: Real> {
    /// `Φ(t) = t (1 + log₊ t)^α`.
    LogPower { alpha: R },
    Custom(Arc<dyn Fn(R) -> R + Send + Sync>),
}

impl<R: Real> fmt::Debug for OrliczFunction<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::LogPower { alpha } => write!(f, "LogPower {{ alpha: {} }}", to_f64(*alpha)),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl<R: Real> OrliczFunction<R> {
    pub fn log_power(alpha: R) -> Result<Self> {
        if !(alpha >= R::zero()) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("Orlicz exponent must be >= 0, got {}", to_f64(alpha))));
        }
        Ok(Self::LogPower { alpha })
    }

    /// `L log L`.
    pub fn l_log_l() -> Self {
        Self::LogPower { alpha: R::one() }
    }

    /// Wraps a user function after a sampled check of `Φ(0) = 0`, monotonicity and convexity.
    pub fn custom<F>(phi: F) -> Result<Self>
    where
        F: Fn(R) -> R + Send + Sync + 'static,
    {
        let candidate = Self::Custom(Arc::new(phi));
        candidate.check_sampled()?;
        Ok(candidate)
    }

    pub fn alpha(&self) -> Option<R> {
        match self {
            Self::LogPower { alpha } => Some(*alpha),
            Self::Custom(_) => None,
        }
    }

    pub fn eval(&self, t: R) -> R {
        match self {
            Self::LogPower { alpha } => {
                if t <= R::zero() {
                    return R::zero();
                }
                let a = *alpha;
                if a == R::zero() {
                    t
                } else {
                    t * (R::one() + log_plus(t)).powf(a)
                }
            }
            Self::Custom(phi) => phi(t),
        }
    }

    /// Sampled structural check on a log grid over `[1e-6, 1e6]`.
    pub fn check_sampled(&self) -> Result<()> {
        if self.eval(R::zero()).abs() > lit(1e-12) {
            return Err(Error::InvalidParameter("Orlicz function must vanish at 0".into()));
        }
        let n = 241;
        let grid: Vec<R> = (0..n).map(|k| lit::<R>(10f64.powf(-6.0 + 12.0 * k as f64 / (n - 1) as f64))).collect();
        let vals: Vec<R> = grid.iter().map(|&t| self.eval(t)).collect();
        for k in 1..n {
            if vals[k] < vals[k - 1] {
                return Err(Error::InvalidParameter("Orlicz function must be increasing".into()));
            }
        }
        for k in 1..n - 1 {
            let (t0, t1, t2) = (grid[k - 1], grid[k], grid[k + 1]);
            let s01 = (vals[k] - vals[k - 1]) / (t1 - t0);
            let s12 = (vals[k + 1] - vals[k]) / (t2 - t1);
            if s12 < s01 * (R::one() - lit(1e-9)) - lit(1e-12) {
                return Err(Error::InvalidParameter(format!("Orlicz function not convex near t = {}", to_f64(t1))));
            }
        }
        Ok(())
    }
}

fn abs_spectrum<R: Real>(f: &Hermitian<R>) -> Vec<R> {
    f.eigenvalues().into_iter().map(|x| x.abs()).collect()
}

fn mean<R: Real>(xs: impl Iterator<Item = R>, n: usize) -> R {
    xs.fold(R::zero(), |a, b| a + b) / lit(n as f64)
}

/// `‖f‖_p = τ(|f|^p)^{1/p}`; `p = ∞` gives the operator norm.
pub fn lp_norm<R: Real>(f: &Hermitian<R>, p: f64) -> Result<R> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    Ok(lp_norm_of_values(&abs_spectrum(f), p))
}

/// `L_p` norm of a spectrum (absolute values) under the uniform trace.
pub fn lp_norm_of_values<R: Real>(abs_vals: &[R], p: f64) -> R {
    let top = abs_vals.iter().copied().fold(R::zero(), |a, b| if b > a { b } else { a });
    if p.is_infinite() || top == R::zero() {
        return top;
    }
    let n = abs_vals.len();
    if p == 1.0 {
        return mean(abs_vals.iter().copied(), n);
    }
    let pr: R = lit(p);
    let m = mean(abs_vals.iter().map(|&x| (x / top).powf(pr)), n);
    top * m.powf(R::one() / pr)
}

/// `τ(Φ(|f|))`.
pub fn orlicz_value<R: Real>(f: &Hermitian<R>, phi: &OrliczFunction<R>) -> R {
    let vals = abs_spectrum(f);
    let n = vals.len();
    mean(vals.into_iter().map(|x| phi.eval(x)), n)
}

/// Luxemburg norm `inf{λ : τΦ(|f|/λ) ≤ 1}` by bisection.
pub fn orlicz_norm<R: Real>(f: &Hermitian<R>, phi: &OrliczFunction<R>) -> Result<R> {
    orlicz_norm_of_values(&abs_spectrum(f), phi)
}

/// Luxemburg norm of a commuting spectrum `|λ_1|, …, |λ_d|` with uniform weights.
pub fn orlicz_norm_of_values<R: Real>(abs_vals: &[R], phi: &OrliczFunction<R>) -> Result<R> {
    let n = abs_vals.len();
    let top = abs_vals.iter().copied().fold(R::zero(), |a, b| if b > a { b } else { a });
    if top == R::zero() {
        return Ok(R::zero());
    }
    let modular = |lam: R| mean(abs_vals.iter().map(|&x| phi.eval(x / lam)), n);
    let feasible = |lam: R| modular(lam) <= R::one();

    // Φ(t) ≥ t on the log-power family, so ‖f‖₁ is infeasible-or-exact from below.
    let mut lo = match phi {
        OrliczFunction::LogPower { .. } => mean(abs_vals.iter().copied(), n),
        OrliczFunction::Custom(_) => top,
    };
    let mut hi = top;
    let two: R = lit(2.0);
    let mut steps = 0;
    while !feasible(hi) {
        hi *= two;
        steps += 1;
        if steps > MAX_BISECTION_STEPS {
            return Err(Error::Bisection { steps, lo: to_f64(lo), hi: to_f64(hi) });
        }
    }
    while feasible(lo) && lo > R::zero() {
        if !matches!(phi, OrliczFunction::Custom(_)) {
            // lo is a root already (e.g. f = c·I with α = 0).
            return Ok(lo);
        }
        hi = lo;
        lo /= two;
        steps += 1;
        if steps > MAX_BISECTION_STEPS {
            return Err(Error::Bisection { steps, lo: to_f64(lo), hi: to_f64(hi) });
        }
    }
    let abs_tol: R = lit(ORLICZ_ABS_TOL);
    let ulp_floor = R::default_epsilon() * lit(4.0);
    for _ in 0..MAX_BISECTION_STEPS {
        if hi - lo <= abs_tol || hi - lo <= ulp_floor * hi {
            return Ok(hi);
        }
        let mid = (lo + hi) / two;
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::Bisection { steps: MAX_BISECTION_STEPS, lo: to_f64(lo), hi: to_f64(hi) })
}
