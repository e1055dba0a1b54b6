//! Log-barrier Newton method for `min τψ(g)` subject to `g ⪰ f_n`.
//!
//! Iterates minimize `τψ(g) − w Σ_n log det(g − f_n + μ)` with `w = μ/(N d)`,
//! so the barrier gap is at most `μ`. `μ` runs geometrically from 1 to 1e-9;
//! between stages `g` is shifted by the decrease in `μ`, which keeps every
//! slack matrix unchanged and hence positive definite.

use nalgebra::Cholesky;
use num_complex::Complex64;

use crate::qps::{CMatrix, Spectrum};

pub(crate) const MU_START: f64 = 1.0;
pub(crate) const MU_END: f64 = 1e-9;
pub(crate) const MU_FACTOR: f64 = 0.25;
const MAX_NEWTON: usize = 60;
const ARMIJO: f64 = 0.01;

/// Spectral objective `ψ` with first and second derivatives.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Psi {
    Linear,
    Square,
    /// `(x² + δ²)^{p/2}` with `δ = μ`.
    Power(f64),
    /// `Φ_η(x/t)` with `Φ_η(y) = y (1 + η softplus(ln y / η))^α` for `y > 0`, `y` for `y ≤ 0`.
    Orlicz { alpha: f64, eta: f64, t: f64 },
}

fn softplus(u: f64) -> f64 {
    if u > 30.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Smoothed `t(1 + log₊ t)^α` with `log₊` replaced by `η·softplus(ln t/η) ≥ log₊ t`.
pub(crate) fn smoothed_orlicz(alpha: f64, eta: f64, y: f64) -> (f64, f64, f64) {
    if y <= 0.0 {
        return (y, 1.0, 0.0);
    }
    let u = y.ln() / eta;
    let l = eta * softplus(u);
    let s = logistic(u);
    let a = 1.0 + l;
    let v = y * a.powf(alpha);
    let d1 = a.powf(alpha) + alpha * a.powf(alpha - 1.0) * s;
    let d2 = alpha * a.powf(alpha - 1.0) * s / y
        + alpha * (alpha - 1.0) * a.powf(alpha - 2.0) * s * s / y
        + alpha * a.powf(alpha - 1.0) * s * (1.0 - s) / (eta * y);
    (v, d1, d2)
}

impl Psi {
    fn eval(&self, x: f64, mu: f64) -> (f64, f64, f64) {
        match *self {
            Psi::Linear => (x, 1.0, 0.0),
            Psi::Square => (x * x, 2.0 * x, 2.0),
            Psi::Power(p) => {
                let q = x * x + mu * mu;
                let v = q.powf(p / 2.0);
                let d1 = p * x * q.powf(p / 2.0 - 1.0);
                let d2 = p * q.powf(p / 2.0 - 1.0) + p * (p - 2.0) * x * x * q.powf(p / 2.0 - 2.0);
                (v, d1, d2)
            }
            Psi::Orlicz { alpha, eta, t } => {
                let (v, d1, d2) = smoothed_orlicz(alpha, eta, x / t);
                (v, d1 / t, d2 / (t * t))
            }
        }
    }
}

pub(crate) struct BlockSolution {
    pub g: CMatrix<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn re_inner(a: &CMatrix<f64>, b: &CMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

fn hermitian_part(m: CMatrix<f64>) -> CMatrix<f64> {
    (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

struct Problem<'a> {
    fs: &'a [CMatrix<f64>],
    psi: Psi,
    inv_d: f64,
}

struct Eval {
    value: f64,
    chols: Vec<Cholesky<Complex64, nalgebra::Dyn>>,
}

impl Problem<'_> {
    fn size(&self) -> usize {
        self.fs[0].nrows()
    }

    fn objective(&self, g: &CMatrix<f64>, mu: f64) -> f64 {
        match self.psi {
            Psi::Linear => g.diagonal().iter().map(|z| z.re).sum::<f64>() * self.inv_d,
            Psi::Square => g.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.inv_d,
            _ => {
                let sp = Spectrum::of(&hermitian_part(g.clone()));
                sp.values.iter().map(|&x| self.psi.eval(x, mu).0).sum::<f64>() * self.inv_d
            }
        }
    }

    /// Value and slack factorizations, or `None` outside the shifted cones.
    fn eval(&self, g: &CMatrix<f64>, mu: f64, w: f64) -> Option<Eval> {
        let b = self.size();
        let shift = CMatrix::<f64>::identity(b, b) * Complex64::new(mu, 0.0);
        let mut chols = Vec::with_capacity(self.fs.len());
        let mut logdet = 0.0;
        for f in self.fs {
            let s = hermitian_part(g - f + &shift);
            let ch = Cholesky::new(s)?;
            let l = ch.l_dirty();
            for i in 0..b {
                let lii = l[(i, i)].re;
                if !(lii > 0.0) {
                    return None;
                }
                logdet += 2.0 * lii.ln();
            }
            chols.push(ch);
        }
        let value = self.objective(g, mu) - w * logdet;
        value.is_finite().then_some(Eval { value, chols })
    }

    /// Gradient and vectorized Hessian (column-major `vec`, `vec(AXB) = (Bᵀ ⊗ A) vec X`).
    fn derivatives(&self, g: &CMatrix<f64>, ev: &Eval, mu: f64, w: f64) -> (CMatrix<f64>, CMatrix<f64>) {
        let b = self.size();
        let n = b * b;
        let mut grad = CMatrix::<f64>::zeros(b, b);
        let mut hess = CMatrix::<f64>::zeros(n, n);
        let wc = Complex64::new(w, 0.0);
        for ch in &ev.chols {
            let inv = hermitian_part(ch.inverse());
            grad -= &inv * wc;
            hess += inv.map(|z| z.conj()).kronecker(&inv) * wc;
        }
        match self.psi {
            Psi::Linear => {
                for i in 0..b {
                    grad[(i, i)] += Complex64::new(self.inv_d, 0.0);
                }
            }
            Psi::Square => {
                grad += hermitian_part(g.clone()) * Complex64::new(2.0 * self.inv_d, 0.0);
                for i in 0..n {
                    hess[(i, i)] += Complex64::new(2.0 * self.inv_d, 0.0);
                }
            }
            _ => {
                let sp = Spectrum::of(&hermitian_part(g.clone()));
                let ders: Vec<(f64, f64)> = sp.values.iter().map(|&x| {
                    let (_, d1, d2) = self.psi.eval(x, mu);
                    (d1, d2)
                }).collect();
                let d1: Vec<f64> = ders.iter().map(|d| d.0 * self.inv_d).collect();
                grad += hermitian_part(sp.rebuild(&d1));
                let mut gamma = CMatrix::<f64>::zeros(b, b);
                for i in 0..b {
                    for j in 0..b {
                        let (li, lj) = (sp.values[i], sp.values[j]);
                        let gap = li - lj;
                        let v = if gap.abs() > 1e-10 * li.abs().max(lj.abs()).max(1e-12) {
                            (ders[i].0 - ders[j].0) / gap
                        } else {
                            0.5 * (ders[i].1 + ders[j].1)
                        };
                        gamma[(i, j)] = Complex64::new(v.max(0.0) * self.inv_d, 0.0);
                    }
                }
                let u = &sp.vectors;
                let big = u.map(|z| z.conj()).kronecker(u);
                let mut scaled = big.clone();
                for c in 0..n {
                    // Column c of vec corresponds to entry (c mod b, c / b).
                    let gc = gamma[(c % b, c / b)];
                    scaled.column_mut(c).scale_mut(gc.re);
                }
                hess += scaled * big.adjoint();
            }
        }
        (grad, hess)
    }
}

/// Solves one decoupled block; `inv_d` is `1/d` of the full algebra and `weight_den = N·d`.
pub(crate) fn solve_block(fs: &[CMatrix<f64>], psi: Psi, inv_d: f64, weight_den: f64, g0: CMatrix<f64>) -> BlockSolution {
    let prob = Problem { fs, psi, inv_d };
    let b = prob.size();
    let n = b * b;
    let mut g = g0;
    let mut mu = MU_START;
    let mut iterations = 0;
    let mut converged = true;
    loop {
        let w = mu / weight_den;
        let mut stage_ok = false;
        for _ in 0..MAX_NEWTON {
            let Some(ev) = prob.eval(&g, mu, w) else {
                converged = false;
                break;
            };
            let (grad, mut hess) = prob.derivatives(&g, &ev, mu, w);
            let rhs = CMatrix::<f64>::from_column_slice(n, 1, grad.as_slice()).map(|z| -z);
            for i in 0..n {
                let z = hess[(i, i)];
                hess[(i, i)] = Complex64::new(z.re, 0.0);
            }
            let hess = hermitian_part(hess);
            let Some(ch) = Cholesky::new(hess) else {
                converged = false;
                break;
            };
            let step = ch.solve(&rhs);
            let delta = hermitian_part(CMatrix::<f64>::from_column_slice(b, b, step.as_slice()));
            let dec2 = -re_inner(&grad, &delta);
            iterations += 1;
            // The second term is the f64 resolution of the merit value.
            if !(dec2 > (2e-8 * w).max(1e-14 * ev.value.abs())) {
                stage_ok = true;
                break;
            }
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-12 {
                let cand = &g + &delta * Complex64::new(t, 0.0);
                if let Some(e2) = prob.eval(&cand, mu, w) {
                    if e2.value <= ev.value - ARMIJO * t * dec2 {
                        g = cand;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                // Rounding floor: no representable descent left at this stage.
                stage_ok = true;
                break;
            }
        }
        if !stage_ok {
            converged = false;
        }
        if mu <= MU_END * (1.0 + 1e-12) {
            break;
        }
        let next = (mu * MU_FACTOR).max(MU_END);
        let shift = mu - next;
        for i in 0..b {
            g[(i, i)] += Complex64::new(shift, 0.0);
        }
        mu = next;
    }
    let objective = prob.objective(&g, mu);
    BlockSolution { g: hermitian_part(g), objective, iterations, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothed_orlicz_dominates_and_is_convex() {
        for alpha in [0.5, 1.0, 2.0] {
            let eta = 1e-3;
            let mut prev_d1 = 0.0;
            for k in 0..400 {
                let y = 10f64.powf(-3.0 + 6.0 * k as f64 / 399.0);
                let (v, d1, d2) = smoothed_orlicz(alpha, eta, y);
                let exact = y * (1.0 + y.ln().max(0.0)).powf(alpha);
                assert!(v >= exact * (1.0 - 1e-15));
                assert!(v <= exact * (1.0 + 2.0 * alpha * eta));
                assert!(d2 >= 0.0);
                assert!(d1 >= prev_d1 - 1e-12);
                prev_d1 = d1;
            }
        }
    }

    #[test]
    fn scalar_problem_hits_the_max() {
        let fs: Vec<CMatrix<f64>> = [0.25, 0.8, 0.5].iter().map(|&x| CMatrix::from_element(1, 1, Complex64::new(x, 0.0))).collect();
        let sol = solve_block(&fs, Psi::Linear, 1.0, 3.0, CMatrix::identity(1, 1));
        assert!(sol.converged);
        assert!((sol.g[(0, 0)].re - 0.8).abs() < 1e-8);
    }
}
