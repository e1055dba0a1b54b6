//! Cuculescu's projections for a finite martingale and height `λ`.
//!
//! Starting from `q_0 = I`, `q_n = q_{n−1} 1_{[0,λ]}(q_{n−1} f_n q_{n−1})`.
//! The recursion is run on isometries: with `q_{n−1} = V V*` the new level is
//! `V W`, where `W` spans the eigenvectors of `V* f_n V` with eigenvalue `≤ λ`.
//! Levels are nested by construction.

use crate::error::{Error, Result};
use crate::filtration::Filtration;
use crate::orlicz::{orlicz_norm, OrliczFunction};
use crate::qps::{CMatrix, Hermitian, Interval, Projection, Subspace, EIG_TOL};
use crate::scalar::{lit, to_f64, tol, Real};
use crate::sequence::OperatorSequence;

/// Above this `E_n(q_n) = q_n` residual the spectrum at `λ` is treated as degenerate.
pub const MEMBERSHIP_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct CuculescuResult<R: Real> {
    pub q_levels: Vec<Projection<R>>,
    pub q: Projection<R>,
    pub lambda: R,
    /// `max_n λ_max(q_n f_n q_n)`.
    pub corner_max_eig: R,
    /// `τ(q⊥)`.
    pub trace_complement: R,
    /// `max_n ‖E_n(q_n) − q_n‖`.
    pub membership_residual: R,
}

fn max_abs<R: Real>(m: &CMatrix<R>) -> R {
    m.iter().map(|z| nalgebra::ComplexField::modulus(*z)).fold(R::zero(), |a, b| if b > a { b } else { a })
}

/// Runs the recursion along `mart` (one entry per filtration level).
pub fn cuculescu_projections<R: Real>(
    mart: &OperatorSequence<R>,
    filt: &Filtration<R>,
    lambda: R,
) -> Result<CuculescuResult<R>> {
    if !(lambda > R::zero()) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {}", to_f64(lambda))));
    }
    let entries = mart.entries();
    if entries.len() != filt.depth() {
        return Err(Error::DimensionMismatch(filt.depth(), entries.len()));
    }
    let d = filt.dim();
    if let Some(last) = entries.last() {
        let scale = last.spectral_norm().max(R::one());
        let m = last.min_eigenvalue();
        if m < -tol::<R>(1e-10) * scale {
            return Err(Error::NotPositive(to_f64(m)));
        }
    }
    let bound = lambda + tol::<R>(EIG_TOL) * lambda.max(R::one());
    let mut v = Subspace::full(d);
    let mut q_levels = Vec::with_capacity(entries.len());
    let mut corner_max = R::zero();
    let mut membership = R::zero();
    for (n, f) in entries.iter().enumerate() {
        if v.rank() > 0 {
            let (kept, _, vals) = v.split(f.matrix(), |x| x <= bound);
            for x in vals {
                if x <= bound && x > corner_max {
                    corner_max = x;
                }
            }
            v = kept;
        }
        let q = v.projection();
        let eq = filt.expectation(n, q.as_op())?;
        let r = eq.max_abs_diff(q.as_op());
        if r > membership {
            membership = r;
        }
        if r > tol(MEMBERSHIP_TOL) {
            return Err(Error::Degenerate { lambda: to_f64(lambda), residual: to_f64(r) });
        }
        q_levels.push(q);
    }
    let q = q_levels.last().cloned().unwrap_or_else(|| Projection::identity(d));
    let trace_complement = R::one() - q.trace();
    Ok(CuculescuResult { q_levels, q, lambda, corner_max_eig: corner_max, trace_complement, membership_residual: membership })
}

/// Structural diagnostics of a result: nesting, corner bound and commutation defects.
#[derive(Clone, Debug)]
pub struct StructureReport {
    pub nesting_defect: f64,
    pub corner_excess: f64,
    pub commutator_max: f64,
    pub membership_residual: f64,
}

pub fn check_structure<R: Real>(res: &CuculescuResult<R>, mart: &OperatorSequence<R>) -> StructureReport {
    let d = res.q.dim();
    let mut nesting = R::zero();
    let mut corner = R::zero();
    let mut comm = R::zero();
    let mut prev = Projection::identity(d);
    for (q, f) in res.q_levels.iter().zip(mart.entries()) {
        // q_n ≤ q_{n−1} iff q_n q_{n−1} = q_n.
        let nest = max_abs(&(q.as_op().matrix() * prev.as_op().matrix() - q.as_op().matrix()));
        nesting = nesting.max(nest);
        let top = f.compress(q).max_eigenvalue() - res.lambda;
        corner = corner.max(top);
        let inner = f.compress(&prev);
        let c = Hermitian::<R>::operator_norm_of(&q.as_op().commutator(&inner));
        comm = comm.max(c);
        prev = q.clone();
    }
    StructureReport {
        nesting_defect: to_f64(nesting),
        corner_excess: to_f64(corner),
        commutator_max: to_f64(comm),
        membership_residual: to_f64(res.membership_residual),
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
}

impl BoundReport {
    pub fn ratio(&self) -> f64 {
        if self.rhs > 0.0 {
            self.lhs / self.rhs
        } else if self.lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }

    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }
}

pub const BOUND_SLACK: f64 = 1e-9;

/// `τ(q⊥) ≤ ‖f‖₁/λ`.
pub fn verify_weak11<R: Real>(res: &CuculescuResult<R>, f: &Hermitian<R>) -> Result<BoundReport> {
    let l1 = f.eigenvalues().iter().map(|x| to_f64(x.abs())).sum::<f64>() / f.dim() as f64;
    let rep = BoundReport { lhs: to_f64(res.trace_complement), rhs: l1 / to_f64(res.lambda) };
    if rep.lhs > rep.rhs + BOUND_SLACK {
        return Err(Error::Violation(format!("weak (1,1): {} > {}", rep.lhs, rep.rhs)));
    }
    Ok(rep)
}

/// `τ(q⊥) ≤ (2/λ) τ(f 1_{(λ/2,∞)}(f))`.
pub fn verify_refined<R: Real>(res: &CuculescuResult<R>, f: &Hermitian<R>) -> Result<BoundReport> {
    let lam = to_f64(res.lambda);
    let half = Interval::above(lam / 2.0);
    let band: f64 = f
        .eigenvalues()
        .iter()
        .map(|&x| to_f64(x))
        .filter(|&x| half.contains(x, EIG_TOL))
        .sum::<f64>()
        / f.dim() as f64;
    let rep = BoundReport { lhs: to_f64(res.trace_complement), rhs: 2.0 * band / lam };
    if rep.lhs > rep.rhs + BOUND_SLACK {
        return Err(Error::Violation(format!("refined weak bound: {} > {}", rep.lhs, rep.rhs)));
    }
    Ok(rep)
}

/// `n` points geometrically spaced on `[lo, hi]`.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || n < 2 {
        return Err(Error::InvalidParameter(format!("bad grid [{lo}, {hi}] with {n} points")));
    }
    let r = (hi / lo).ln() / (n - 1) as f64;
    Ok((0..n).map(|k| if k == n - 1 { hi } else { lo * (r * k as f64).exp() }).collect())
}

#[derive(Clone, Debug)]
pub struct SteinReport {
    pub integral: f64,
    pub orlicz_norm: f64,
    pub ratio: f64,
}

/// `∫₀^∞ τ(q(λ)⊥) dλ`: rectangle `λ_min τ(q(λ_min)⊥)` on `[0, λ_min]`, trapezoids on the grid,
/// nothing beyond `λ_max ≥ ‖f‖_∞` (where `q = I`).
pub fn stein_integral<R: Real>(f: &Hermitian<R>, filt: &Filtration<R>, grid: &[f64]) -> Result<SteinReport> {
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) || !(grid[0] > 0.0) {
        return Err(Error::InvalidParameter("grid must be increasing and positive".into()));
    }
    let top = to_f64(f.max_eigenvalue());
    if *grid.last().unwrap() < top {
        return Err(Error::InvalidParameter(format!("grid must reach ‖f‖_∞ = {top}")));
    }
    let mart = crate::filtration::martingale(f, filt)?;
    let mut vals = Vec::with_capacity(grid.len());
    for &lam in grid {
        let res = cuculescu_projections(&mart, filt, lit::<R>(lam))?;
        vals.push(to_f64(res.trace_complement));
    }
    let mut integral = grid[0] * vals[0];
    for k in 1..grid.len() {
        integral += 0.5 * (vals[k] + vals[k - 1]) * (grid[k] - grid[k - 1]);
    }
    let norm = to_f64(orlicz_norm(f, &OrliczFunction::l_log_l())?);
    let ratio = if norm > 0.0 { integral / norm } else { 0.0 };
    Ok(SteinReport { integral, orlicz_norm: norm, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtration::{martingale, BlockMode, SubalgebraDescriptor};

    fn diag(v: &[f64]) -> Hermitian<f64> {
        Hermitian::from_real_diagonal(v)
    }

    fn run(f: &Hermitian<f64>, filt: &Filtration<f64>, lam: f64) -> CuculescuResult<f64> {
        cuculescu_projections(&martingale(f, filt).unwrap(), filt, lam).unwrap()
    }

    #[test]
    fn small_operator_keeps_identity() {
        let filt = Filtration::dyadic(4, 3, BlockMode::Scalar).unwrap();
        let f = diag(&[0.5, 1.0, 0.2, 0.0]);
        let r = run(&f, &filt, 1.0);
        assert!(r.q.as_op().max_abs_diff(&Hermitian::identity(4)) == 0.0);
        assert_eq!(r.trace_complement, 0.0);
        assert_eq!(verify_weak11(&r, &f).unwrap().lhs, 0.0);
    }

    #[test]
    fn scalar_case_kills_everything() {
        let filt = Filtration::dyadic(4, 3, BlockMode::Scalar).unwrap();
        let f = Hermitian::scaled_identity(4, 3.0);
        let r = run(&f, &filt, 2.0);
        assert!(r.q_levels[0].is_zero());
        assert_eq!(r.trace_complement, 1.0);
        let w = verify_weak11(&r, &f).unwrap();
        assert!(w.lhs <= w.rhs);
        let rf = verify_refined(&r, &f).unwrap();
        assert!((rf.rhs - 3.0).abs() < 1e-14);
    }

    #[test]
    fn hand_recursion_dyadic() {
        let filt = Filtration::dyadic(4, 3, BlockMode::Scalar).unwrap();
        let f = diag(&[4.0, 0.0, 0.0, 0.0]);
        let r = run(&f, &filt, 1.0);
        assert!(r.q.as_op().max_abs_diff(&diag(&[0.0, 0.0, 1.0, 1.0])) == 0.0);
        assert_eq!(r.trace_complement, 0.5);
        let w = verify_weak11(&r, &f).unwrap();
        assert_eq!((w.lhs, w.rhs), (0.5, 1.0));
        let rf = verify_refined(&r, &f).unwrap();
        assert_eq!((rf.lhs, rf.rhs), (0.5, 2.0));
    }

    #[test]
    fn noncommutative_structure() {
        let f = Hermitian::from_real_rows(&[
            vec![3.0, 1.0, 0.5, 0.0],
            vec![1.0, 2.0, 0.2, 0.4],
            vec![0.5, 0.2, 1.5, 1.1],
            vec![0.0, 0.4, 1.1, 2.5],
        ])
        .unwrap();
        let filt = Filtration::new(vec![
            SubalgebraDescriptor::trivial(4).unwrap(),
            SubalgebraDescriptor::uniform_partition(4, 2, BlockMode::Full).unwrap(),
            SubalgebraDescriptor::full(4).unwrap(),
        ])
        .unwrap();
        for lam in [1.0, 2.0, 3.3] {
            let mart = martingale(&f, &filt).unwrap();
            let r = cuculescu_projections(&mart, &filt, lam).unwrap();
            let s = check_structure(&r, &mart);
            assert!(s.nesting_defect < 1e-10 && s.corner_excess < 1e-7 && s.commutator_max < 1e-7, "{s:?}");
            verify_weak11(&r, &f).unwrap();
            verify_refined(&r, &f).unwrap();
        }
    }

    #[test]
    fn stein_step_function() {
        let filt = Filtration::dyadic(4, 3, BlockMode::Scalar).unwrap();
        let grid = geometric_grid(1e-3, 4.0, 80).unwrap();
        let rep = stein_integral(&Hermitian::<f64>::identity(4), &filt, &grid).unwrap();
        // Oracle: the same quadrature applied to the step function 1_{λ < 1}.
        let step = |l: f64| if l < 1.0 { 1.0 } else { 0.0 };
        let mut want = grid[0] * step(grid[0]);
        for k in 1..grid.len() {
            want += 0.5 * (step(grid[k]) + step(grid[k - 1])) * (grid[k] - grid[k - 1]);
        }
        assert!((rep.integral - want).abs() < 1e-12);
        let widest = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        assert!((rep.integral - 1.0).abs() <= widest);
        assert!((rep.orlicz_norm - 1.0).abs() < 1e-10);
        let zero = stein_integral(&Hermitian::<f64>::zero(4), &filt, &grid).unwrap();
        assert_eq!(zero.integral, 0.0);
    }

    #[test]
    fn works_in_single_precision() {
        let filt = Filtration::<f32>::dyadic(4, 3, BlockMode::Scalar).unwrap();
        let f = Hermitian::<f32>::from_real_diagonal(&[4.0, 0.0, 0.0, 0.0]);
        let r = cuculescu_projections(&martingale(&f, &filt).unwrap(), &filt, 1.0f32).unwrap();
        assert_eq!(r.trace_complement, 0.5f32);
    }
}
