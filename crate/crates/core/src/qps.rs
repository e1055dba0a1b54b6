//! Matrix algebras `M_d` with the normalized trace `τ = Tr/d`: Hermitian
//! elements, spectral functional calculus and the projection lattice.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{ComplexField, DMatrix, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, tol, Real};

pub type CMatrix<R> = DMatrix<Complex<R>>;

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const PROJECTION_TOL: f64 = 1e-8;
/// Eigenvalues this close to a closed interval endpoint are inside.
pub const EIG_TOL: f64 = 1e-10;
/// Eigenvalues of `P + Q` this close to 2 span the meet.
pub const MEET_TOL: f64 = 1e-8;

/// The ambient algebra `M_d` with `τ(I) = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Qps {
    dim: usize,
}

impl Qps {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trace_normalizer<R: Real>(&self) -> R {
        R::one() / lit::<R>(self.dim as f64)
    }

    pub fn identity<R: Real>(&self) -> Hermitian<R> {
        Hermitian::identity(self.dim)
    }

    pub fn zero<R: Real>(&self) -> Hermitian<R> {
        Hermitian::zero(self.dim)
    }
}

#[inline]
pub(crate) fn re<R: Real>(x: R) -> Complex<R> {
    Complex::new(x, R::zero())
}

/// Eigendecomposition with eigenvalues sorted ascending.
#[derive(Clone, Debug)]
pub struct Spectrum<R: Real> {
    pub values: Vec<R>,
    pub vectors: CMatrix<R>,
}

impl<R: Real> Spectrum<R> {
    pub fn of(m: &CMatrix<R>) -> Self {
        let n = m.nrows();
        if n == 0 {
            return Self {
                values: Vec::new(),
                vectors: CMatrix::zeros(0, 0),
            };
        }
        let zero = Complex::new(R::zero(), R::zero());
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == zero));
        if diagonal {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| m[(a, a)].re.partial_cmp(&m[(b, b)].re).unwrap_or(std::cmp::Ordering::Equal));
            let values = order.iter().map(|&i| m[(i, i)].re).collect();
            let vectors = CMatrix::from_fn(n, n, |r, c| if r == order[c] { re(R::one()) } else { zero });
            return Self { values, vectors };
        }
        let eig = SymmetricEigen::new(m.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a]
                .partial_cmp(&eig.eigenvalues[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Self { values, vectors }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V diag(values) V*`.
    pub fn rebuild(&self, values: &[R]) -> CMatrix<R> {
        let mut scaled = self.vectors.clone();
        for (j, &v) in values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(v);
        }
        scaled * self.vectors.adjoint()
    }

    /// Isometry whose columns are the eigenvectors selected by `keep`.
    pub fn columns_where<F: Fn(R) -> bool>(&self, keep: F) -> CMatrix<R> {
        let cols: Vec<usize> = (0..self.dim()).filter(|&j| keep(self.values[j])).collect();
        let n = self.vectors.nrows();
        CMatrix::from_fn(n, cols.len(), |r, c| self.vectors[(r, cols[c])])
    }

    pub fn min(&self) -> R {
        self.values.first().copied().unwrap_or_else(R::zero)
    }

    pub fn max(&self) -> R {
        self.values.last().copied().unwrap_or_else(R::zero)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Endpoint<R> {
    Unbounded,
    Closed(R),
    Open(R),
}

/// A real interval; closed endpoints absorb eigenvalues within `EIG_TOL`,
/// open endpoints reject them, so `1_{[0,λ]} + 1_{(λ,∞)} = 1` on the positive cone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval<R> {
    pub lower: Endpoint<R>,
    pub upper: Endpoint<R>,
}

impl<R: Real> Interval<R> {
    pub fn closed(a: R, b: R) -> Self {
        Self { lower: Endpoint::Closed(a), upper: Endpoint::Closed(b) }
    }

    pub fn open(a: R, b: R) -> Self {
        Self { lower: Endpoint::Open(a), upper: Endpoint::Open(b) }
    }

    /// `(-∞, b]`
    pub fn at_most(b: R) -> Self {
        Self { lower: Endpoint::Unbounded, upper: Endpoint::Closed(b) }
    }

    /// `[a, ∞)`
    pub fn at_least(a: R) -> Self {
        Self { lower: Endpoint::Closed(a), upper: Endpoint::Unbounded }
    }

    /// `(a, ∞)`
    pub fn above(a: R) -> Self {
        Self { lower: Endpoint::Open(a), upper: Endpoint::Unbounded }
    }

    pub fn contains(&self, x: R, eps: R) -> bool {
        let lower_ok = match self.lower {
            Endpoint::Unbounded => true,
            Endpoint::Closed(a) => x >= a - eps,
            Endpoint::Open(a) => x > a + eps,
        };
        let upper_ok = match self.upper {
            Endpoint::Unbounded => true,
            Endpoint::Closed(b) => x <= b + eps,
            Endpoint::Open(b) => x < b - eps,
        };
        lower_ok && upper_ok
    }
}

/// Self-adjoint element of `M_d`. Constructors symmetrize their input.
#[derive(Clone, Debug, PartialEq)]
pub struct Hermitian<R: Real> {
    m: CMatrix<R>,
}

impl<R: Real> Hermitian<R> {
    pub fn from_matrix(m: CMatrix<R>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare(m.nrows(), m.ncols()));
        }
        if m.nrows() == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(Self::symmetrized(m))
    }

    pub(crate) fn symmetrized(m: CMatrix<R>) -> Self {
        let half = re(lit::<R>(0.5));
        let adj = m.adjoint();
        Self { m: (m + adj) * half }
    }

    pub fn from_real_diagonal(diag: &[R]) -> Self {
        let n = diag.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = re(v);
        }
        Self { m }
    }

    /// Real symmetric matrix from row-major entries.
    pub fn from_real_rows(rows: &[Vec<R>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotSquare(n, rows.first().map_or(0, |r| r.len())));
        }
        Self::from_matrix(CMatrix::from_fn(n, n, |i, j| re(rows[i][j])))
    }

    pub fn identity(dim: usize) -> Self {
        Self { m: CMatrix::identity(dim, dim) }
    }

    pub fn zero(dim: usize) -> Self {
        Self { m: CMatrix::zeros(dim, dim) }
    }

    pub fn scaled_identity(dim: usize, c: R) -> Self {
        Self::identity(dim) * c
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn qps(&self) -> Qps {
        Qps { dim: self.dim() }
    }

    pub fn matrix(&self) -> &CMatrix<R> {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix<R> {
        self.m
    }

    pub fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }

    /// `τ(f) = Tr(f)/d`.
    pub fn trace(&self) -> R {
        let mut s = R::zero();
        for i in 0..self.dim() {
            s += self.m[(i, i)].re;
        }
        s / lit(self.dim() as f64)
    }

    pub fn diagonal(&self) -> Vec<R> {
        (0..self.dim()).map(|i| self.m[(i, i)].re).collect()
    }

    /// True when every off-diagonal entry is exactly zero.
    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.m[(i, j)] == Complex::new(R::zero(), R::zero())))
    }

    pub fn spectrum(&self) -> Spectrum<R> {
        Spectrum::of(&self.m)
    }

    pub fn eigenvalues(&self) -> Vec<R> {
        if self.is_diagonal() {
            let mut d = self.diagonal();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            return d;
        }
        let mut ev: Vec<R> = SymmetricEigen::new(self.m.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        ev
    }

    pub fn min_eigenvalue(&self) -> R {
        self.eigenvalues().first().copied().unwrap_or_else(R::zero)
    }

    pub fn max_eigenvalue(&self) -> R {
        self.eigenvalues().last().copied().unwrap_or_else(R::zero)
    }

    /// Operator norm (largest singular value).
    pub fn spectral_norm(&self) -> R {
        let ev = self.eigenvalues();
        let lo = ev.first().copied().unwrap_or_else(R::zero).abs();
        let hi = ev.last().copied().unwrap_or_else(R::zero).abs();
        if lo > hi {
            lo
        } else {
            hi
        }
    }

    pub fn is_positive(&self, eps: R) -> bool {
        self.min_eigenvalue() >= -eps
    }

    /// Largest absolute entry of `f − f*` before symmetrization would apply.
    pub fn hermiticity_defect(m: &CMatrix<R>) -> R {
        let d = m - m.adjoint();
        d.iter().fold(R::zero(), |acc, z| {
            let a = z.modulus();
            if a > acc {
                a
            } else {
                acc
            }
        })
    }

    pub fn spectral_projection(&self, interval: Interval<R>) -> Projection<R> {
        self.spectral_projection_with(interval, tol(EIG_TOL))
    }

    pub fn spectral_projection_with(&self, interval: Interval<R>, eps: R) -> Projection<R> {
        if self.is_diagonal() {
            let d = self.diagonal();
            let idx: Vec<usize> = (0..d.len()).filter(|&i| interval.contains(d[i], eps)).collect();
            return Projection::from_indices(self.dim(), &idx);
        }
        let sp = self.spectrum();
        let v = sp.columns_where(|x| interval.contains(x, eps));
        Projection::from_isometry(&v, self.dim())
    }

    /// Same eigenvectors, eigenvalues mapped through `phi`. Non-finite images are domain errors.
    pub fn functional_calculus<F: Fn(R) -> R>(&self, phi: F) -> Result<Self> {
        if self.is_diagonal() {
            let mut mapped = Vec::with_capacity(self.dim());
            for x in self.diagonal() {
                let y = phi(x);
                if !y.is_finite() {
                    return Err(Error::Domain(to_f64(x)));
                }
                mapped.push(y);
            }
            return Ok(Self::from_real_diagonal(&mapped));
        }
        let sp = self.spectrum();
        let mut mapped = Vec::with_capacity(sp.dim());
        for &x in &sp.values {
            let y = phi(x);
            if !y.is_finite() {
                return Err(Error::Domain(to_f64(x)));
            }
            mapped.push(y);
        }
        Ok(Self::symmetrized(sp.rebuild(&mapped)))
    }

    pub fn abs(&self) -> Self {
        self.functional_calculus(|x| x.abs()).expect("abs is total")
    }

    /// Positive square root; negative rounding noise is clipped to zero.
    pub fn sqrt_psd(&self) -> Self {
        self.functional_calculus(|x| if x > R::zero() { x.sqrt() } else { R::zero() })
            .expect("clipped sqrt is total")
    }

    pub fn square(&self) -> Self {
        Self::symmetrized(&self.m * &self.m)
    }

    /// `a f a*` for an arbitrary square `a`.
    pub fn conjugate_by(&self, a: &CMatrix<R>) -> Self {
        Self::symmetrized(a * &self.m * a.adjoint())
    }

    /// `P f P`.
    pub fn compress(&self, p: &Projection<R>) -> Self {
        let pm = p.as_op().matrix();
        if p.as_op().is_diagonal() {
            let keep: Vec<bool> = (0..self.dim()).map(|i| pm[(i, i)].re > lit(0.5)).collect();
            let zero = Complex::new(R::zero(), R::zero());
            let m = CMatrix::from_fn(self.dim(), self.dim(), |i, j| if keep[i] && keep[j] { self.m[(i, j)] } else { zero });
            return Self { m };
        }
        Self::symmetrized(pm * &self.m * pm)
    }

    /// Symmetrized Jordan-type product `(fg + gf)/2`, Hermitian for Hermitian inputs.
    pub fn jordan(&self, other: &Self) -> Self {
        Self::symmetrized(&self.m * &other.m)
    }

    /// `τ(f g)` (real for Hermitian pairs).
    pub fn trace_product(&self, other: &Self) -> R {
        let n = self.dim();
        let mut s = R::zero();
        for i in 0..n {
            for k in 0..n {
                s += (self.m[(i, k)] * other.m[(k, i)]).re;
            }
        }
        s / lit(n as f64)
    }

    /// `[f, g] = fg − gf` (anti-Hermitian) as a raw matrix.
    pub fn commutator(&self, other: &Self) -> CMatrix<R> {
        &self.m * &other.m - &other.m * &self.m
    }

    /// Largest singular value of an arbitrary square matrix.
    pub fn operator_norm_of(m: &CMatrix<R>) -> R {
        let gram = m.adjoint() * m;
        let h = Self::symmetrized(gram);
        let top = h.max_eigenvalue();
        if top > R::zero() {
            top.sqrt()
        } else {
            R::zero()
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> R {
        (&self.m - &other.m).iter().fold(R::zero(), |acc, z| {
            let a = z.modulus();
            if a > acc {
                a
            } else {
                acc
            }
        })
    }

    /// Kronecker product `self ⊗ other` with index `i * d₂ + j`.
    pub fn kron(&self, other: &Self) -> Self {
        Self { m: self.m.kronecker(&other.m) }
    }

    pub fn cast_f64(&self) -> Hermitian<f64> {
        Hermitian {
            m: self.m.map(|z| Complex::new(to_f64(z.re), to_f64(z.im))),
        }
    }
}

/// `τ(f)`.
pub fn trace<R: Real>(f: &Hermitian<R>) -> R {
    f.trace()
}

/// `f ≤ g` in the operator order: `min eig(g − f) ≥ −tol`.
pub fn leq<R: Real>(f: &Hermitian<R>, g: &Hermitian<R>, eps: R) -> bool {
    debug_assert_eq!(f.dim(), g.dim());
    (g - f).min_eigenvalue() >= -eps
}

impl<R: Real> Add for &Hermitian<R> {
    type Output = Hermitian<R>;
    fn add(self, rhs: Self) -> Hermitian<R> {
        Hermitian { m: &self.m + &rhs.m }
    }
}

impl<R: Real> Sub for &Hermitian<R> {
    type Output = Hermitian<R>;
    fn sub(self, rhs: Self) -> Hermitian<R> {
        Hermitian { m: &self.m - &rhs.m }
    }
}

impl<R: Real> Add for Hermitian<R> {
    type Output = Hermitian<R>;
    fn add(self, rhs: Self) -> Hermitian<R> {
        Hermitian { m: self.m + rhs.m }
    }
}

impl<R: Real> Sub for Hermitian<R> {
    type Output = Hermitian<R>;
    fn sub(self, rhs: Self) -> Hermitian<R> {
        Hermitian { m: self.m - rhs.m }
    }
}

impl<R: Real> Neg for Hermitian<R> {
    type Output = Hermitian<R>;
    fn neg(self) -> Hermitian<R> {
        Hermitian { m: -self.m }
    }
}

impl<R: Real> Mul<R> for Hermitian<R> {
    type Output = Hermitian<R>;
    fn mul(self, c: R) -> Hermitian<R> {
        Hermitian { m: self.m * re(c) }
    }
}

impl<R: Real> Mul<R> for &Hermitian<R> {
    type Output = Hermitian<R>;
    fn mul(self, c: R) -> Hermitian<R> {
        Hermitian { m: &self.m * re(c) }
    }
}

/// Orthogonal projection; spectrum in `{0, 1}` within `PROJECTION_TOL`.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection<R: Real> {
    op: Hermitian<R>,
}

impl<R: Real> Projection<R> {
    pub fn new(op: Hermitian<R>) -> Result<Self> {
        let residual = Self::idempotency_residual(&op);
        if residual > tol(PROJECTION_TOL) {
            return Err(Error::NotProjection { residual: to_f64(residual) });
        }
        let t: R = tol(PROJECTION_TOL);
        if op.eigenvalues().iter().any(|&x| x.abs() > t && (x - R::one()).abs() > t) {
            return Err(Error::NotProjection { residual: to_f64(residual) });
        }
        Ok(Self { op })
    }

    /// `‖P² − P‖_∞`.
    pub fn idempotency_residual(op: &Hermitian<R>) -> R {
        Hermitian::symmetrized(op.matrix() * op.matrix() - op.matrix()).spectral_norm()
    }

    /// `V V*` for an isometry `V` (columns orthonormal).
    pub fn from_isometry(v: &CMatrix<R>, dim: usize) -> Self {
        if v.ncols() == 0 {
            return Self::zero(dim);
        }
        Self { op: Hermitian::symmetrized(v * v.adjoint()) }
    }

    /// Diagonal projection onto the listed coordinates.
    pub fn from_indices(dim: usize, idx: &[usize]) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        for &i in idx {
            m[(i, i)] = Complex::new(R::one(), R::zero());
        }
        Self { op: Hermitian { m } }
    }

    pub fn zero(dim: usize) -> Self {
        Self { op: Hermitian::zero(dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { op: Hermitian::identity(dim) }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn as_op(&self) -> &Hermitian<R> {
        &self.op
    }

    pub fn into_op(self) -> Hermitian<R> {
        self.op
    }

    pub fn trace(&self) -> R {
        self.op.trace()
    }

    pub fn rank(&self) -> usize {
        let tr = to_f64(self.op.trace()) * self.dim() as f64;
        tr.round().max(0.0) as usize
    }

    pub fn is_zero(&self) -> bool {
        self.rank() == 0
    }

    /// `P⊥ = I − P`.
    pub fn complement(&self) -> Self {
        Self { op: &Hermitian::identity(self.dim()) - &self.op }
    }

    /// Orthonormal basis of the range as the columns of an isometry.
    pub fn range_basis(&self) -> CMatrix<R> {
        if self.op.is_diagonal() {
            let d = self.op.diagonal();
            let idx: Vec<usize> = (0..d.len()).filter(|&i| d[i] > lit(0.5)).collect();
            let n = self.dim();
            return CMatrix::from_fn(n, idx.len(), |r, c| {
                if r == idx[c] {
                    Complex::new(R::one(), R::zero())
                } else {
                    Complex::new(R::zero(), R::zero())
                }
            });
        }
        self.op.spectrum().columns_where(|x| x > lit(0.5))
    }

    /// Projection onto `range(P) ∩ range(Q)`: eigenvalue-2 eigenspace of `P + Q`.
    pub fn meet(&self, other: &Self) -> Result<Self> {
        self.op.same_dim(&other.op)?;
        let sum = &self.op + &other.op;
        let two: R = lit(2.0);
        Ok(sum.spectral_projection_with(Interval::at_least(two - tol(MEET_TOL)), R::zero()))
    }

    /// `P ∨ Q = (P⊥ ∧ Q⊥)⊥`.
    pub fn join(&self, other: &Self) -> Result<Self> {
        Ok(self.complement().meet(&other.complement())?.complement())
    }

    pub fn leq(&self, other: &Self, eps: R) -> bool {
        leq(&self.op, &other.op, eps)
    }
}

/// Subspace held as an isometry, with a coordinate fast path.
#[derive(Clone, Debug)]
pub(crate) struct Subspace<R: Real> {
    dim: usize,
    coords: Option<Vec<usize>>,
    v: CMatrix<R>,
}

impl<R: Real> Subspace<R> {
    pub(crate) fn full(dim: usize) -> Self {
        Self { dim, coords: Some((0..dim).collect()), v: CMatrix::identity(dim, dim) }
    }

    pub(crate) fn rank(&self) -> usize {
        self.v.ncols()
    }

    /// `V* x V`, symmetrized.
    pub(crate) fn compress(&self, x: &CMatrix<R>) -> CMatrix<R> {
        let c = match &self.coords {
            Some(c) => CMatrix::from_fn(c.len(), c.len(), |i, j| x[(c[i], c[j])]),
            None => self.v.adjoint() * x * &self.v,
        };
        Hermitian::symmetrized(c).m
    }

    /// Splits by the eigenvalues of the compression of `x`: `(kept, dropped, compressed spectrum)`.
    pub(crate) fn split<F: Fn(R) -> bool>(&self, x: &CMatrix<R>, keep: F) -> (Self, Self, Vec<R>) {
        let c = self.compress(x);
        let n = c.nrows();
        let zero = Complex::new(R::zero(), R::zero());
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || c[(i, j)] == zero));
        if let (Some(co), true) = (&self.coords, diagonal) {
            let vals: Vec<R> = (0..n).map(|i| c[(i, i)].re).collect();
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for i in 0..n {
                if keep(vals[i]) { a.push(co[i]) } else { b.push(co[i]) }
            }
            return (self.from_coords(a), self.from_coords(b), vals);
        }
        let sp = Spectrum::of(&c);
        let a = &self.v * sp.columns_where(&keep);
        let b = &self.v * sp.columns_where(|x| !keep(x));
        let dense = |v| Self { dim: self.dim, coords: None, v };
        (dense(a), dense(b), sp.values)
    }

    fn from_coords(&self, c: Vec<usize>) -> Self {
        let d = self.dim;
        let one = Complex::new(R::one(), R::zero());
        let zero = Complex::new(R::zero(), R::zero());
        let v = CMatrix::from_fn(d, c.len(), |r, j| if r == c[j] { one } else { zero });
        Self { dim: d, coords: Some(c), v }
    }

    pub(crate) fn projection(&self) -> Projection<R> {
        match &self.coords {
            Some(c) => Projection::from_indices(self.dim, c),
            None => Projection::from_isometry(&self.v, self.dim),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn diag(v: &[f64]) -> Hermitian<f64> {
        Hermitian::from_real_diagonal(v)
    }

    #[test]
    fn trace_examples() {
        assert_abs_diff_eq!(Hermitian::<f64>::identity(4).trace(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(diag(&[4.0, 0.0, 0.0, 0.0]).trace(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(diag(&[1.0, 0.0]).trace(), 0.5, epsilon = 1e-15);
        assert!(matches!(Qps::new(0), Err(Error::ZeroDimension)));
    }

    #[test]
    fn spectral_projection_examples() {
        let id = Hermitian::<f64>::identity(3);
        let p = id.spectral_projection(Interval::closed(0.0, 1.0));
        assert_abs_diff_eq!(p.as_op().max_abs_diff(&id), 0.0, epsilon = 1e-12);

        let p = diag(&[0.5, 2.0]).spectral_projection(Interval::closed(0.0, 1.0));
        assert!(p.as_op().max_abs_diff(&diag(&[1.0, 0.0])) < 1e-12);

        let p = diag(&[1.0, 2.0, 3.0]).spectral_projection(Interval::above(1.5));
        assert!(p.as_op().max_abs_diff(&diag(&[0.0, 1.0, 1.0])) < 1e-12);

        let p = diag(&[1.0 + 5e-11, 3.0]).spectral_projection(Interval::closed(0.0, 1.0));
        assert_eq!(p.rank(), 1, "closed endpoint keeps boundary eigenvalues");
    }

    #[test]
    fn functional_calculus_examples() {
        let f = diag(&[2.0, -1.0, 0.25]);
        let g = f.functional_calculus(|x| x).unwrap();
        assert!(g.max_abs_diff(&f) < 1e-12);

        let e2 = std::f64::consts::E.powi(2);
        let lp = diag(&[e2, 0.5]).functional_calculus(|x: f64| x.ln().max(0.0)).unwrap();
        assert!(lp.max_abs_diff(&diag(&[2.0, 0.0])) < 1e-12);

        let phi = |t: f64| t * (1.0 + t.ln().max(0.0)).powi(2);
        let id = Hermitian::<f64>::identity(3);
        assert!(id.functional_calculus(phi).unwrap().max_abs_diff(&id) < 1e-12);

        assert!(matches!(diag(&[-1.0, 1.0]).functional_calculus(|x: f64| x.ln()), Err(Error::Domain(_))));
    }

    #[test]
    fn meet_examples() {
        let id = Projection::<f64>::identity(3);
        assert!(id.meet(&id).unwrap().as_op().max_abs_diff(id.as_op()) < 1e-12);

        let p = Projection::<f64>::from_indices(3, &[0, 2]);
        assert!(p.meet(&p.complement()).unwrap().is_zero());

        let a = Projection::<f64>::from_indices(3, &[0, 1]);
        let b = Projection::<f64>::from_indices(3, &[1, 2]);
        let m = a.meet(&b).unwrap();
        let expected: Vec<usize> = [0usize, 1].iter().filter(|i| [1usize, 2].contains(i)).copied().collect();
        assert!(m.as_op().max_abs_diff(Projection::from_indices(3, &expected).as_op()) < 1e-10);

        let j = a.join(&b).unwrap();
        assert_eq!(j.rank(), 3);
        assert!(a.meet(&Projection::identity(4)).is_err());
    }

    #[test]
    fn leq_examples() {
        assert!(leq(&Hermitian::zero(2), &Hermitian::identity(2), 1e-9));
        assert!(!leq(&diag(&[1.0, 2.0]), &diag(&[2.0, 1.0]), 1e-9));
        let f = diag(&[3.0, -1.0]);
        assert!(leq(&f, &f, 1e-9));
    }

    #[test]
    fn constructor_symmetrizes() {
        let mut m = CMatrix::<f64>::zeros(2, 2);
        m[(0, 1)] = Complex::new(1.0, 0.0);
        let h = Hermitian::from_matrix(m).unwrap();
        assert_eq!(h.matrix()[(0, 1)], Complex::new(0.5, 0.0));
        assert_eq!(h.matrix()[(1, 0)], Complex::new(0.5, 0.0));
        assert!(Hermitian::<f64>::from_matrix(CMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn projection_validation() {
        assert!(Projection::new(diag(&[1.0, 0.5])).is_err());
        assert!(Projection::new(diag(&[1.0, 0.0])).is_ok());
    }

    #[test]
    fn works_in_single_precision() {
        let f = Hermitian::<f32>::from_real_diagonal(&[0.5, 2.0, 3.0]);
        assert_eq!(f.spectral_projection(Interval::above(1.0)).rank(), 2);
        assert!((f.trace() - 5.5 / 3.0).abs() < 1e-6);
    }
}
