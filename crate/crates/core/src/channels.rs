//! Markov channels `T(x) = Σ K_i x K_i*` on `M_d`: unital, trace preserving,
//! completely positive. Ergodic means, fixed points and the subordination weight.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::filtration::{Side, SubalgebraDescriptor};
use crate::qps::{CMatrix, Hermitian};

pub const KRAUS_TOL: f64 = 1e-10;
pub const SYMMETRY_TOL: f64 = 1e-9;
pub const FIXED_POINT_TOL: f64 = 1e-9;
pub const MAX_DOUBLINGS: usize = 24;
/// Up to this dimension the lazy map is materialized and squared.
const SUPEROPERATOR_MAX_DIM: usize = 16;

#[derive(Clone, Debug)]
pub struct MarkovChannel {
    dim: usize,
    kraus: Vec<CMatrix<f64>>,
    symmetric: bool,
}

fn max_abs(m: &CMatrix<f64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Deterministic random Hermitian matrix with Gaussian entries.
fn probe(dim: usize, rng: &mut ChaCha8Rng) -> Hermitian<f64> {
    let m = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    Hermitian::symmetrized(&m + m.adjoint())
}

impl MarkovChannel {
    /// Validates `Σ K K* = I`, `Σ K* K = I`, and the trace symmetry when `symmetric` is set.
    pub fn new(kraus: Vec<CMatrix<f64>>, symmetric: bool) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::InvalidParameter("channel needs a Kraus operator".into()))?;
        let dim = first.nrows();
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        let mut unit = CMatrix::<f64>::zeros(dim, dim);
        let mut tp = CMatrix::<f64>::zeros(dim, dim);
        for k in &kraus {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(Error::DimensionMismatch(dim, k.nrows().max(k.ncols())));
            }
            unit += k * k.adjoint();
            tp += k.adjoint() * k;
        }
        let id = CMatrix::<f64>::identity(dim, dim);
        let du = max_abs(&(unit - &id));
        if du > KRAUS_TOL {
            return Err(Error::Violation(format!("channel not unital: defect {du:e}")));
        }
        let dt = max_abs(&(tp - &id));
        if dt > KRAUS_TOL {
            return Err(Error::Violation(format!("channel not trace preserving: defect {dt:e}")));
        }
        let ch = Self { dim, kraus, symmetric };
        if symmetric {
            let defect = ch.symmetry_defect(0)?;
            if defect > SYMMETRY_TOL {
                return Err(Error::Violation(format!("channel declared symmetric, defect {defect:e}")));
            }
        }
        Ok(ch)
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, kraus: vec![CMatrix::identity(dim, dim)], symmetric: true }
    }

    /// `x ↦ U x U*`.
    pub fn conjugation(u: CMatrix<f64>) -> Result<Self> {
        Self::new(vec![u], false)
    }

    /// `x ↦ Σ w_i U_i x U_i*` with `Σ w_i = 1`.
    pub fn mixture_of_unitaries(weights: &[f64], unitaries: &[CMatrix<f64>], symmetric: bool) -> Result<Self> {
        if weights.len() != unitaries.len() || weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidParameter("weights must be nonnegative, one per unitary".into()));
        }
        let kraus = weights.iter().zip(unitaries).map(|(&w, u)| u * Complex64::new(w.sqrt(), 0.0)).collect();
        Self::new(kraus, symmetric)
    }

    /// Random bistochastic channel: mixture of `count` Haar unitaries, closed under adjoints when `symmetric`.
    pub fn random_mixture<G: Rng>(dim: usize, count: usize, symmetric: bool, rng: &mut G) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter("need at least one unitary".into()));
        }
        let mut weights: Vec<f64> = (0..count).map(|_| rng.random::<f64>() + 0.1).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let mut us = Vec::with_capacity(count);
        for _ in 0..count {
            us.push(haar_unitary(dim, rng));
        }
        if symmetric {
            let adj: Vec<CMatrix<f64>> = us.iter().map(|u| u.adjoint()).collect();
            us.extend(adj);
            let half: Vec<f64> = weights.iter().map(|w| w / 2.0).collect();
            weights = half.iter().chain(half.iter()).copied().collect();
        }
        Self::mixture_of_unitaries(&weights, &us, symmetric)
    }

    /// The conditional expectation onto `A` as a channel.
    pub fn from_subalgebra(a: &SubalgebraDescriptor<f64>) -> Result<Self> {
        let d = a.dim();
        let mut kraus = Vec::new();
        for b in a.blocks() {
            let (outer, k) = b.shape();
            let v = b.basis();
            let scale = Complex64::new(1.0 / (k as f64).sqrt(), 0.0);
            for ka in 0..k {
                for kb in 0..k {
                    // V (I_a ⊗ e_kb e_ka*) V* / √k
                    let mut z = CMatrix::<f64>::zeros(outer * k, outer * k);
                    for al in 0..outer {
                        z[(al * k + kb, al * k + ka)] = Complex64::new(1.0, 0.0);
                    }
                    kraus.push((v * z * v.adjoint()) * scale);
                }
            }
        }
        debug_assert!(kraus.iter().all(|k| k.nrows() == d));
        Self::new(kraus, true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[CMatrix<f64>] {
        &self.kraus
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// `|τ(f T(g)) − τ(T(f) g)|` on a seeded random Hermitian pair.
    pub fn symmetry_defect(&self, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = probe(self.dim, &mut rng);
        let g = probe(self.dim, &mut rng);
        Ok((f.trace_product(&self.apply(&g)?) - self.apply(&f)?.trace_product(&g)).abs())
    }

    pub fn apply_matrix(&self, x: &CMatrix<f64>) -> CMatrix<f64> {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for k in &self.kraus {
            out += k * x * k.adjoint();
        }
        out
    }

    pub fn apply(&self, f: &Hermitian<f64>) -> Result<Hermitian<f64>> {
        if f.dim() != self.dim {
            return Err(Error::DimensionMismatch(self.dim, f.dim()));
        }
        Ok(Hermitian::symmetrized(self.apply_matrix(f.matrix())))
    }

    /// `T ⊗ id` (`Left`) or `id ⊗ T` (`Right`) on `M_d ⊗ M_other`.
    pub fn tensor_lift(&self, side: Side, other_dim: usize) -> Self {
        let id = CMatrix::<f64>::identity(other_dim, other_dim);
        let kraus = self
            .kraus
            .iter()
            .map(|k| match side {
                Side::Left => k.kronecker(&id),
                Side::Right => id.kronecker(k),
            })
            .collect();
        Self { dim: self.dim * other_dim, kraus, symmetric: self.symmetric }
    }

    /// `T^n(f)`.
    pub fn power(&self, n: usize, f: &Hermitian<f64>) -> Result<Hermitian<f64>> {
        let mut x = f.clone();
        for _ in 0..n {
            x = self.apply(&x)?;
        }
        Ok(x)
    }

    /// `(1/(n+1)) Σ_{k=0}^{n} T^k(f)` by repeated application.
    pub fn ergodic_mean(&self, n: usize, f: &Hermitian<f64>) -> Result<Hermitian<f64>> {
        if f.dim() != self.dim {
            return Err(Error::DimensionMismatch(self.dim, f.dim()));
        }
        let mut x = f.matrix().clone();
        let mut acc = x.clone();
        for _ in 0..n {
            x = self.apply_matrix(&x);
            acc += &x;
        }
        Ok(Hermitian::symmetrized(acc / Complex64::new((n + 1) as f64, 0.0)))
    }

    /// `F(f)`, the projection onto the fixed points of `T` along the closure of `ran(T − 1)`.
    ///
    /// Iterates the lazy channel `S = (id + T)/2`, which has the same fixed
    /// points as `T` and no other peripheral spectrum, at doubling counts
    /// `2^k` until successive iterates and `T x − x` fall below `1e-9 · max(1, ‖f‖₂)` in `L₂`.
    pub fn fixed_point_projection(&self, f: &Hermitian<f64>) -> Result<Hermitian<f64>> {
        if f.dim() != self.dim {
            return Err(Error::DimensionMismatch(self.dim, f.dim()));
        }
        let d = self.dim;
        let l2 = |m: &CMatrix<f64>| (m.iter().map(|z| z.norm_sqr()).sum::<f64>() / d as f64).sqrt();
        let lazy = |x: &CMatrix<f64>| (x + self.apply_matrix(x)) * Complex64::new(0.5, 0.0);
        let tol = FIXED_POINT_TOL * l2(f.matrix()).max(1.0);
        let converged = |prev: &CMatrix<f64>, x: &CMatrix<f64>| l2(&(x - prev)) < tol && l2(&(self.apply_matrix(x) - x)) < tol;
        let mut x = f.matrix().clone();
        let mut residual = f64::INFINITY;
        if d <= SUPEROPERATOR_MAX_DIM {
            // Column-major vec: vec(K X K*) = (conj(K) ⊗ K) vec(X).
            let n = d * d;
            let mut s = CMatrix::<f64>::identity(n, n);
            for k in &self.kraus {
                s += k.map(|z| z.conj()).kronecker(k);
            }
            s *= Complex64::new(0.5, 0.0);
            let mut v = DMatrix::from_column_slice(n, 1, x.as_slice());
            for _ in 0..MAX_DOUBLINGS {
                let next = &s * &v;
                let prev_x = DMatrix::from_column_slice(d, d, v.as_slice());
                x = DMatrix::from_column_slice(d, d, next.as_slice());
                residual = l2(&(&x - &prev_x));
                if converged(&prev_x, &x) {
                    return Ok(Hermitian::symmetrized(x));
                }
                v = next;
                s = &s * &s;
            }
        } else {
            let mut steps = 1usize;
            for _ in 0..MAX_DOUBLINGS {
                let prev = x.clone();
                for _ in 0..steps {
                    x = lazy(&x);
                }
                residual = l2(&(&x - &prev));
                if converged(&prev, &x) {
                    return Ok(Hermitian::symmetrized(x));
                }
                steps *= 2;
            }
        }
        Err(Error::FixedPoint { doublings: MAX_DOUBLINGS, residual })
    }
}

/// Haar unitary from the QR factorization of a complex Gaussian matrix, phases fixed by `R`'s diagonal.
pub fn haar_unitary<G: Rng>(dim: usize, rng: &mut G) -> CMatrix<f64> {
    let z = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Cyclic shift `e_i ↦ e_{i+1 mod d}`.
pub fn cyclic_shift(dim: usize) -> CMatrix<f64> {
    DMatrix::from_fn(dim, dim, |r, c| {
        if r == (c + 1) % dim {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// `φ_s(v) = (1/(2√π)) s e^{−s²/(4v)} v^{−3/2}`.
pub fn subordination_weight(s: f64, v: f64) -> Result<f64> {
    if !(s > 0.0) || !(v > 0.0) {
        return Err(Error::Domain(if s > 0.0 { v } else { s }));
    }
    Ok(s * (-s * s / (4.0 * v)).exp() * v.powf(-1.5) / (2.0 * std::f64::consts::PI.sqrt()))
}
