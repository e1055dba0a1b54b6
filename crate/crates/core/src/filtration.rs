//! Unital *-subalgebras of `M_d` given by orthogonal blocks, their
//! trace-preserving conditional expectations, filtrations and tensor lifts.
//!
//! A block is an isometry `V: C^r → C^d` with a shape `(a, k)`, `r = a·k`,
//! and carries the algebra `V (M_a ⊗ I_k) V*`. Column `α·k + κ` of `V` is the
//! image of `e_α ⊗ e_κ`. `Full` is `(r, 1)`, `Scalar` is `(1, r)`.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::qps::{CMatrix, Hermitian, Projection, Qps};
use crate::scalar::{lit, tol, Real};
use crate::sequence::OperatorSequence;

pub const DESCRIPTOR_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockMode {
    Full,
    Scalar,
    /// `M_outer ⊗ I_multiplicity` inside the block.
    Amplified { outer: usize, multiplicity: usize },
}

#[derive(Clone, Debug)]
pub struct Block<R: Real> {
    basis: CMatrix<R>,
    coords: Option<Vec<usize>>,
    outer: usize,
    multiplicity: usize,
}

impl<R: Real> Block<R> {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &CMatrix<R> {
        &self.basis
    }

    /// Coordinate indices when the block is spanned by standard basis vectors.
    pub fn coords(&self) -> Option<&[usize]> {
        self.coords.as_deref()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.outer, self.multiplicity)
    }

    pub fn mode(&self) -> BlockMode {
        match (self.outer, self.multiplicity) {
            (_, 1) => BlockMode::Full,
            (1, _) => BlockMode::Scalar,
            (a, k) => BlockMode::Amplified { outer: a, multiplicity: k },
        }
    }

    pub fn projection(&self) -> Projection<R> {
        match &self.coords {
            Some(c) => Projection::from_indices(self.basis.nrows(), c),
            None => Projection::from_isometry(&self.basis, self.basis.nrows()),
        }
    }

    fn compress(&self, x: &CMatrix<R>) -> CMatrix<R> {
        match &self.coords {
            Some(c) => CMatrix::from_fn(c.len(), c.len(), |i, j| x[(c[i], c[j])]),
            None => self.basis.adjoint() * x * &self.basis,
        }
    }

    /// `(id ⊗ Tr_k/k)` followed by re-amplification `Y ⊗ I_k`.
    fn average(&self, c: &CMatrix<R>) -> CMatrix<R> {
        let (a, k) = (self.outer, self.multiplicity);
        if k == 1 {
            return c.clone();
        }
        let inv_k: R = R::one() / lit(k as f64);
        let mut y = CMatrix::zeros(a, a);
        for al in 0..a {
            for be in 0..a {
                let mut s = Complex::new(R::zero(), R::zero());
                for ka in 0..k {
                    s += c[(al * k + ka, be * k + ka)];
                }
                y[(al, be)] = s * inv_k;
            }
        }
        let r = a * k;
        CMatrix::from_fn(r, r, |i, j| {
            if i % k == j % k {
                y[(i / k, j / k)]
            } else {
                Complex::new(R::zero(), R::zero())
            }
        })
    }

    fn expand_into(&self, z: &CMatrix<R>, out: &mut CMatrix<R>) {
        match &self.coords {
            Some(c) => {
                for (i, &ci) in c.iter().enumerate() {
                    for (j, &cj) in c.iter().enumerate() {
                        out[(ci, cj)] += z[(i, j)];
                    }
                }
            }
            None => *out += &self.basis * z * self.basis.adjoint(),
        }
    }

    /// Matrix units `V (e_{αβ} ⊗ I_k) V*` spanning the block algebra.
    fn generators(&self) -> Vec<CMatrix<R>> {
        let (a, k) = (self.outer, self.multiplicity);
        let one = Complex::new(R::one(), R::zero());
        let mut out = Vec::with_capacity(a * a);
        for al in 0..a {
            for be in 0..a {
                let mut z = CMatrix::zeros(a * k, a * k);
                for ka in 0..k {
                    z[(al * k + ka, be * k + ka)] = one;
                }
                let mut full = CMatrix::zeros(self.basis.nrows(), self.basis.nrows());
                self.expand_into(&z, &mut full);
                out.push(full);
            }
        }
        out
    }
}

/// `⊕_i V_i (M_{a_i} ⊗ I_{k_i}) V_i*`, the blocks summing to `I`.
#[derive(Clone, Debug)]
pub struct SubalgebraDescriptor<R: Real> {
    qps: Qps,
    blocks: Vec<Block<R>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

fn selector<R: Real>(dim: usize, coords: &[usize]) -> CMatrix<R> {
    CMatrix::from_fn(dim, coords.len(), |r, c| {
        if r == coords[c] {
            Complex::new(R::one(), R::zero())
        } else {
            Complex::new(R::zero(), R::zero())
        }
    })
}

fn shape_of(mode: BlockMode, rank: usize) -> Result<(usize, usize)> {
    match mode {
        BlockMode::Full => Ok((rank, 1)),
        BlockMode::Scalar => Ok((1, rank)),
        BlockMode::Amplified { outer, multiplicity } => {
            if outer * multiplicity != rank || outer == 0 {
                return Err(Error::InvalidDescriptor(format!(
                    "block of rank {rank} cannot carry M_{outer} ⊗ I_{multiplicity}"
                )));
            }
            Ok((outer, multiplicity))
        }
    }
}

impl<R: Real> SubalgebraDescriptor<R> {
    /// Blocks given by isometries (columns orthonormal), validated to be orthogonal and to sum to `I`.
    pub fn from_isometries(dim: usize, blocks: Vec<(CMatrix<R>, BlockMode)>) -> Result<Self> {
        let qps = Qps::new(dim)?;
        let mut out = Vec::with_capacity(blocks.len());
        for (basis, mode) in blocks {
            if basis.nrows() != dim {
                return Err(Error::DimensionMismatch(dim, basis.nrows()));
            }
            let rank = basis.ncols();
            let (outer, multiplicity) = shape_of(mode, rank)?;
            out.push(Block { basis, coords: None, outer, multiplicity });
        }
        let d = Self { qps, blocks: out };
        d.validate()?;
        Ok(d)
    }

    /// Blocks given by projections; each range basis is taken from the spectrum.
    pub fn from_projections(dim: usize, blocks: Vec<(Projection<R>, BlockMode)>) -> Result<Self> {
        let mut isos = Vec::with_capacity(blocks.len());
        let mut coords_all = Vec::with_capacity(blocks.len());
        for (p, mode) in blocks {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch(dim, p.dim()));
            }
            if p.as_op().is_diagonal() {
                let diag = p.as_op().diagonal();
                coords_all.push(Some((0..dim).filter(|&i| diag[i] > lit(0.5)).collect::<Vec<_>>()));
            } else {
                coords_all.push(None);
            }
            isos.push((p.range_basis(), mode));
        }
        let mut d = Self::from_isometries(dim, isos)?;
        for (b, c) in d.blocks.iter_mut().zip(coords_all) {
            b.coords = c;
        }
        Ok(d)
    }

    /// Blocks spanned by standard basis vectors.
    pub fn from_coordinate_blocks(dim: usize, blocks: Vec<(Vec<usize>, BlockMode)>) -> Result<Self> {
        let qps = Qps::new(dim)?;
        let mut seen = vec![false; dim];
        let mut out = Vec::with_capacity(blocks.len());
        for (coords, mode) in blocks {
            if coords.is_empty() {
                return Err(Error::InvalidDescriptor("empty block".into()));
            }
            for &c in &coords {
                if c >= dim || seen[c] {
                    return Err(Error::InvalidDescriptor(format!("coordinate {c} out of range or repeated")));
                }
                seen[c] = true;
            }
            let (outer, multiplicity) = shape_of(mode, coords.len())?;
            out.push(Block { basis: selector(dim, &coords), coords: Some(coords), outer, multiplicity });
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidDescriptor("blocks do not cover every coordinate".into()));
        }
        Ok(Self { qps, blocks: out })
    }

    /// `C·I`.
    pub fn trivial(dim: usize) -> Result<Self> {
        Self::from_coordinate_blocks(dim, vec![((0..dim).collect(), BlockMode::Scalar)])
    }

    /// `M_d`.
    pub fn full(dim: usize) -> Result<Self> {
        Self::from_coordinate_blocks(dim, vec![((0..dim).collect(), BlockMode::Full)])
    }

    /// The diagonal algebra.
    pub fn diagonal(dim: usize) -> Result<Self> {
        Self::from_coordinate_blocks(dim, (0..dim).map(|i| (vec![i], BlockMode::Full)).collect())
    }

    /// `parts` consecutive coordinate intervals of equal length.
    pub fn uniform_partition(dim: usize, parts: usize, mode: BlockMode) -> Result<Self> {
        if parts == 0 || dim % parts != 0 {
            return Err(Error::InvalidParameter(format!("{parts} does not divide {dim}")));
        }
        let w = dim / parts;
        Self::from_coordinate_blocks(dim, (0..parts).map(|p| ((p * w..(p + 1) * w).collect(), mode)).collect())
    }

    fn validate(&self) -> Result<()> {
        let t: R = tol(DESCRIPTOR_TOL);
        let d = self.qps.dim();
        let mut total = 0;
        for (i, b) in self.blocks.iter().enumerate() {
            if b.rank() == 0 {
                return Err(Error::InvalidDescriptor("block of zero trace".into()));
            }
            total += b.rank();
            let gram = b.basis.adjoint() * &b.basis - CMatrix::<R>::identity(b.rank(), b.rank());
            if max_abs(&gram) > t {
                return Err(Error::InvalidDescriptor(format!("block {i} basis is not orthonormal")));
            }
            for (j, c) in self.blocks.iter().enumerate().skip(i + 1) {
                if max_abs(&(b.basis.adjoint() * &c.basis)) > t {
                    return Err(Error::InvalidDescriptor(format!("blocks {i} and {j} are not orthogonal")));
                }
            }
        }
        if total != d {
            return Err(Error::InvalidDescriptor(format!("block ranks sum to {total}, expected {d}")));
        }
        Ok(())
    }

    pub fn qps(&self) -> Qps {
        self.qps
    }

    pub fn dim(&self) -> usize {
        self.qps.dim()
    }

    pub fn blocks(&self) -> &[Block<R>] {
        &self.blocks
    }

    pub fn is_coordinate(&self) -> bool {
        self.blocks.iter().all(|b| b.coords.is_some())
    }

    /// Commutative iff every block has `outer = 1`.
    pub fn is_commutative(&self) -> bool {
        self.blocks.iter().all(|b| b.outer == 1)
    }

    /// `E` applied to an arbitrary complex matrix (the map is complex-linear).
    pub fn expect_matrix(&self, x: &CMatrix<R>) -> CMatrix<R> {
        let d = self.dim();
        let mut out = CMatrix::zeros(d, d);
        for b in &self.blocks {
            let c = b.compress(x);
            let z = b.average(&c);
            b.expand_into(&z, &mut out);
        }
        out
    }

    pub fn conditional_expectation(&self, f: &Hermitian<R>) -> Result<Hermitian<R>> {
        if f.dim() != self.dim() {
            return Err(Error::DimensionMismatch(self.dim(), f.dim()));
        }
        Ok(Hermitian::symmetrized(self.expect_matrix(f.matrix())))
    }

    /// Whether this subalgebra is contained in `other`.
    pub fn contains_in(&self, other: &Self) -> bool {
        contains(self, other)
    }

    /// Descriptor of `A ⊗ M_{other}` (`Left`) or `M_{other} ⊗ A` (`Right`).
    pub fn tensor_lift(&self, side: Side, other_dim: usize) -> Result<Self> {
        let d = self.dim();
        let n = d * other_dim;
        let qps = Qps::new(n)?;
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let (a, k) = (b.outer, b.multiplicity);
            let r = b.rank();
            let new_r = r * other_dim;
            let (basis, coords, outer) = match side {
                Side::Left => {
                    // Column ((α·m + β)·k + κ) = V[:, α·k + κ] ⊗ e_β.
                    let mut v = CMatrix::zeros(n, new_r);
                    let mut cs = b.coords.as_ref().map(|_| vec![0; new_r]);
                    for al in 0..a {
                        for be in 0..other_dim {
                            for ka in 0..k {
                                let col = (al * other_dim + be) * k + ka;
                                let src = al * k + ka;
                                for i in 0..d {
                                    v[(i * other_dim + be, col)] = b.basis[(i, src)];
                                }
                                if let (Some(cs), Some(c)) = (cs.as_mut(), b.coords.as_ref()) {
                                    cs[col] = c[src] * other_dim + be;
                                }
                            }
                        }
                    }
                    (v, cs, a * other_dim)
                }
                Side::Right => {
                    // Column β·r + c = e_β ⊗ V[:, c].
                    let mut v = CMatrix::zeros(n, new_r);
                    let mut cs = b.coords.as_ref().map(|_| vec![0; new_r]);
                    for be in 0..other_dim {
                        for c in 0..r {
                            for i in 0..d {
                                v[(be * d + i, be * r + c)] = b.basis[(i, c)];
                            }
                            if let (Some(cs), Some(co)) = (cs.as_mut(), b.coords.as_ref()) {
                                cs[be * r + c] = be * d + co[c];
                            }
                        }
                    }
                    (v, cs, other_dim * a)
                }
            };
            blocks.push(Block { basis, coords, outer, multiplicity: k });
        }
        Ok(Self { qps, blocks })
    }
}

fn max_abs<R: Real>(m: &CMatrix<R>) -> R {
    m.iter().map(|z| z.modulus()).fold(R::zero(), |a, b| if b > a { b } else { a })
}

/// Whether the subalgebra of `a` lies inside that of `b`.
pub fn contains<R: Real>(a: &SubalgebraDescriptor<R>, b: &SubalgebraDescriptor<R>) -> bool {
    if a.dim() != b.dim() {
        return false;
    }
    let t: R = tol(DESCRIPTOR_TOL);
    let plain = |d: &SubalgebraDescriptor<R>| d.blocks.iter().all(|x| x.outer == 1 || x.multiplicity == 1);
    if !(plain(a) && plain(b)) {
        // E_B is the trace-preserving projection onto B: A ⊂ B iff E_B fixes A's matrix units.
        return a
            .blocks
            .iter()
            .flat_map(|blk| blk.generators())
            .all(|g| max_abs(&(b.expect_matrix(&g) - &g)) <= t);
    }
    if a.is_coordinate() && b.is_coordinate() {
        return contains_coordinate(a, b);
    }
    let proj = |blk: &Block<R>| blk.projection().into_op().into_matrix();
    let b_proj: Vec<CMatrix<R>> = b.blocks.iter().map(proj).collect();
    for ablk in &a.blocks {
        let va = &ablk.basis;
        if ablk.multiplicity == 1 && ablk.rank() >= 2 {
            let inside = b
                .blocks
                .iter()
                .zip(&b_proj)
                .any(|(bblk, pb)| bblk.multiplicity == 1 && max_abs(&(va - pb * va)) <= t);
            if !inside {
                return false;
            }
            continue;
        }
        let pa = proj(ablk);
        for (bblk, pb) in b.blocks.iter().zip(&b_proj) {
            if max_abs(&(&pa * pb - pb * &pa)) > t {
                return false;
            }
            if bblk.outer == 1 && bblk.rank() >= 2 {
                let pavb = &pa * &bblk.basis;
                let below = max_abs(&(&bblk.basis - &pavb)) <= t;
                let orthogonal = max_abs(&pavb) <= t;
                if !below && !orthogonal {
                    return false;
                }
            }
        }
    }
    true
}

/// The rule of [`contains`] on index sets; coordinate projections always commute.
fn contains_coordinate<R: Real>(a: &SubalgebraDescriptor<R>, b: &SubalgebraDescriptor<R>) -> bool {
    let sets: Vec<std::collections::BTreeSet<usize>> =
        b.blocks.iter().map(|blk| blk.coords.as_deref().unwrap_or_default().iter().copied().collect()).collect();
    a.blocks.iter().all(|ablk| {
        let ca = ablk.coords.as_deref().unwrap_or_default();
        if ablk.multiplicity == 1 && ablk.rank() >= 2 {
            return b.blocks.iter().zip(&sets).any(|(bblk, sb)| bblk.multiplicity == 1 && ca.iter().all(|i| sb.contains(i)));
        }
        let sa: std::collections::BTreeSet<usize> = ca.iter().copied().collect();
        b.blocks.iter().zip(&sets).all(|(bblk, sb)| !(bblk.outer == 1 && bblk.rank() >= 2) || sb.is_subset(&sa) || sb.is_disjoint(&sa))
    })
}

/// Nested subalgebras, coarsest first.
#[derive(Clone, Debug)]
pub struct Filtration<R: Real> {
    levels: Vec<SubalgebraDescriptor<R>>,
}

impl<R: Real> Filtration<R> {
    pub fn new(levels: Vec<SubalgebraDescriptor<R>>) -> Result<Self> {
        let first = levels.first().ok_or_else(|| Error::InvalidParameter("filtration needs a level".into()))?;
        let dim = first.dim();
        for (k, pair) in levels.windows(2).enumerate() {
            if pair[1].dim() != dim {
                return Err(Error::DimensionMismatch(dim, pair[1].dim()));
            }
            if !contains(&pair[0], &pair[1]) {
                return Err(Error::NotNested(k));
            }
        }
        Ok(Self { levels })
    }

    /// Levels `0..depth`; level `k` has `2^k` equal coordinate blocks of the given mode,
    /// the first level being `C·I`.
    pub fn dyadic(dim: usize, depth: usize, mode: BlockMode) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidParameter("depth must be positive".into()));
        }
        let mut levels = Vec::with_capacity(depth);
        for k in 0..depth {
            let parts = 1usize << k;
            let m = if k == 0 { BlockMode::Scalar } else { mode };
            levels.push(SubalgebraDescriptor::uniform_partition(dim, parts, m)?);
        }
        Self::new(levels)
    }

    /// Full dyadic chain on `d = 2^m` points ending at the diagonal algebra.
    pub fn dyadic_commutative(dim: usize) -> Result<Self> {
        if !dim.is_power_of_two() {
            return Err(Error::InvalidParameter(format!("{dim} is not a power of two")));
        }
        Self::dyadic(dim, dim.trailing_zeros() as usize + 1, BlockMode::Scalar)
    }

    pub fn levels(&self) -> &[SubalgebraDescriptor<R>] {
        &self.levels
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn dim(&self) -> usize {
        self.levels[0].dim()
    }

    pub fn is_commutative(&self) -> bool {
        self.levels.iter().all(|l| l.is_commutative())
    }

    pub fn expectation(&self, level: usize, f: &Hermitian<R>) -> Result<Hermitian<R>> {
        self.levels
            .get(level)
            .ok_or_else(|| Error::InvalidParameter(format!("no level {level}")))?
            .conditional_expectation(f)
    }

    pub fn tensor_lift(&self, side: Side, other_dim: usize) -> Result<Self> {
        let levels = self.levels.iter().map(|l| l.tensor_lift(side, other_dim)).collect::<Result<_>>()?;
        Ok(Self { levels })
    }
}

/// `(E_1 f, …, E_K f)` with constant tail `E_K f`.
pub fn martingale<R: Real>(f: &Hermitian<R>, filt: &Filtration<R>) -> Result<OperatorSequence<R>> {
    let entries: Vec<Hermitian<R>> = (0..filt.depth()).map(|k| filt.expectation(k, f)).collect::<Result<_>>()?;
    let tail = entries.last().cloned().expect("filtration has a level");
    OperatorSequence::with_constant_tail(entries, tail)
}

/// Tensor product of two filtrations acting on `M_{d₁} ⊗ M_{d₂}`.
#[derive(Clone, Debug)]
pub struct TwoParamFiltration<R: Real> {
    left: Filtration<R>,
    right: Filtration<R>,
    left_lift: Filtration<R>,
    right_lift: Filtration<R>,
}

impl<R: Real> TwoParamFiltration<R> {
    pub fn new(left: Filtration<R>, right: Filtration<R>) -> Result<Self> {
        let left_lift = left.tensor_lift(Side::Left, right.dim())?;
        let right_lift = right.tensor_lift(Side::Right, left.dim())?;
        Ok(Self { left, right, left_lift, right_lift })
    }

    pub fn left(&self) -> &Filtration<R> {
        &self.left
    }

    pub fn right(&self) -> &Filtration<R> {
        &self.right
    }

    /// `E_n ⊗ id` as a filtration of the product algebra.
    pub fn left_lift(&self) -> &Filtration<R> {
        &self.left_lift
    }

    /// `id ⊗ E_m` as a filtration of the product algebra.
    pub fn right_lift(&self) -> &Filtration<R> {
        &self.right_lift
    }

    pub fn dim(&self) -> usize {
        self.left.dim() * self.right.dim()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.left.depth(), self.right.depth())
    }

    /// `(E_n ⊗ E_m) f`.
    pub fn expectation(&self, n: usize, m: usize, f: &Hermitian<R>) -> Result<Hermitian<R>> {
        let inner = self.right_lift.expectation(m, f)?;
        self.left_lift.expectation(n, &inner)
    }

    /// Largest entry of `(E_n⊗id)(id⊗E_m) f − (id⊗E_m)(E_n⊗id) f` over all `(n, m)`.
    pub fn commutation_defect(&self, f: &Hermitian<R>) -> Result<R> {
        let (nl, nr) = self.shape();
        let mut worst = R::zero();
        for n in 0..nl {
            let l = self.left_lift.expectation(n, f)?;
            for m in 0..nr {
                let lr = self.right_lift.expectation(m, &l)?;
                let rl = self.left_lift.expectation(n, &self.right_lift.expectation(m, f)?)?;
                let e = lr.max_abs_diff(&rl);
                if e > worst {
                    worst = e;
                }
            }
        }
        Ok(worst)
    }

    /// Grid `f_{n,m} = (E_n ⊗ E_m) f` with corner tail `f_{K,L}`.
    pub fn martingale(&self, f: &Hermitian<R>) -> Result<OperatorSequence<R>> {
        let (nl, nr) = self.shape();
        let mut entries = Vec::with_capacity(nl * nr);
        for n in 0..nl {
            let l = self.left_lift.expectation(n, f)?;
            for m in 0..nr {
                entries.push(self.right_lift.expectation(m, &l)?);
            }
        }
        let corner = entries.last().cloned().expect("nonempty grid");
        OperatorSequence::grid2d(entries, nl, nr, corner)
    }
}

/// Real matrix-unit helper for tests and generators.
pub fn real_isometry<R: Real>(cols: &[Vec<f64>]) -> CMatrix<R> {
    let rows = cols.first().map_or(0, |c| c.len());
    DMatrix::from_fn(rows, cols.len(), |r, c| Complex::new(lit(cols[c][r]), R::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn diag(v: &[f64]) -> Hermitian<f64> {
        Hermitian::from_real_diagonal(v)
    }

    fn sample() -> Hermitian<f64> {
        Hermitian::from_real_rows(&[
            vec![2.0, 1.0, 0.5, -0.25],
            vec![1.0, 3.0, 0.0, 0.75],
            vec![0.5, 0.0, -1.0, 0.3],
            vec![-0.25, 0.75, 0.3, 0.5],
        ])
        .unwrap()
    }

    #[test]
    fn trivial_expectation_is_trace() {
        let f = sample();
        let e = SubalgebraDescriptor::trivial(4).unwrap().conditional_expectation(&f).unwrap();
        assert!(e.max_abs_diff(&Hermitian::scaled_identity(4, f.trace())) < 1e-14);
    }

    #[test]
    fn pinching_keeps_diagonal() {
        let f = Hermitian::from_real_rows(&[vec![1.0, 2.0], vec![2.0, 5.0]]).unwrap();
        let e = SubalgebraDescriptor::diagonal(2).unwrap().conditional_expectation(&f).unwrap();
        assert!(e.max_abs_diff(&diag(&[1.0, 5.0])) < 1e-15);
    }

    #[test]
    fn block_averaging_by_hand() {
        let a = SubalgebraDescriptor::uniform_partition(4, 2, BlockMode::Scalar).unwrap();
        let e = a.conditional_expectation(&diag(&[4.0, 0.0, 0.0, 0.0])).unwrap();
        assert!(e.max_abs_diff(&diag(&[2.0, 2.0, 0.0, 0.0])) < 1e-15);
    }

    #[test]
    fn invalid_descriptors_rejected() {
        assert!(SubalgebraDescriptor::<f64>::from_coordinate_blocks(3, vec![(vec![0, 1], BlockMode::Full)]).is_err());
        assert!(SubalgebraDescriptor::<f64>::from_coordinate_blocks(2, vec![(vec![0, 0], BlockMode::Full)]).is_err());
        let skew = real_isometry::<f64>(&[vec![1.0, 0.0], vec![0.6, 0.8]]);
        let blocks = vec![(skew.columns(0, 1).into_owned(), BlockMode::Full), (skew.columns(1, 1).into_owned(), BlockMode::Full)];
        assert!(SubalgebraDescriptor::from_isometries(2, blocks).is_err());
    }

    #[test]
    fn containment_examples() {
        let diag_full = SubalgebraDescriptor::<f64>::diagonal(2).unwrap();
        let diag_scalar = SubalgebraDescriptor::from_coordinate_blocks(2, vec![(vec![0], BlockMode::Scalar), (vec![1], BlockMode::Scalar)]).unwrap();
        assert!(contains(&diag_full, &diag_full));
        assert!(contains(&diag_full, &diag_scalar));
        assert!(contains(&diag_scalar, &diag_full));
        let triv = SubalgebraDescriptor::trivial(2).unwrap();
        assert!(contains(&triv, &diag_full));
        assert!(!contains(&SubalgebraDescriptor::full(2).unwrap(), &diag_full));
        let avg4 = SubalgebraDescriptor::<f64>::uniform_partition(4, 2, BlockMode::Scalar).unwrap();
        let pinch4 = SubalgebraDescriptor::<f64>::uniform_partition(4, 2, BlockMode::Full).unwrap();
        assert!(contains(&avg4, &pinch4));
        assert!(!contains(&pinch4, &avg4));
        assert!(!contains(&SubalgebraDescriptor::diagonal(4).unwrap(), &avg4));
    }

    #[test]
    fn martingale_examples() {
        let filt = Filtration::dyadic(4, 3, BlockMode::Scalar).unwrap();
        let f = diag(&[4.0, 0.0, 0.0, 0.0]);
        let m = martingale(&f, &filt).unwrap();
        let want = [Hermitian::identity(4), diag(&[2.0, 2.0, 0.0, 0.0]), f.clone()];
        for (got, w) in m.entries().iter().zip(&want) {
            assert!(got.max_abs_diff(w) < 1e-15);
        }
        assert!(m.tail_operator().unwrap().max_abs_diff(&f) < 1e-15);
        let z = martingale(&Hermitian::zero(4), &filt).unwrap();
        assert!(z.entries().iter().all(|e| e.spectral_norm() == 0.0));
        let c = Hermitian::scaled_identity(4, 3.0);
        assert!(martingale(&c, &filt).unwrap().entries().iter().all(|e| e.max_abs_diff(&c) < 1e-15));
    }

    fn partial_trace_first(f: &Hermitian<f64>, d1: usize, d2: usize) -> Hermitian<f64> {
        let mut m = CMatrix::zeros(d2, d2);
        for i in 0..d1 {
            for a in 0..d2 {
                for b in 0..d2 {
                    m[(a, b)] += f.matrix()[(i * d2 + a, i * d2 + b)];
                }
            }
        }
        Hermitian::from_matrix(m.map(|z| z / d1 as f64)).unwrap()
    }

    #[test]
    fn lifted_trivial_is_partial_trace() {
        let f = sample();
        let lifted = SubalgebraDescriptor::trivial(2).unwrap().tensor_lift(Side::Left, 2).unwrap();
        let got = lifted.conditional_expectation(&f).unwrap();
        let want = Hermitian::identity(2).kron(&partial_trace_first(&f, 2, 2));
        assert!(got.max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn lifted_expectation_on_simple_tensors() {
        let g = Hermitian::from_real_rows(&[vec![1.0, 0.5], vec![0.5, -2.0]]).unwrap();
        let h = Hermitian::from_real_rows(&[vec![0.0, 1.5, 0.0], vec![1.5, 1.0, 0.2], vec![0.0, 0.2, 3.0]]).unwrap();
        for a in [SubalgebraDescriptor::trivial(2).unwrap(), SubalgebraDescriptor::diagonal(2).unwrap()] {
            let eg = a.conditional_expectation(&g).unwrap();
            let l = a.tensor_lift(Side::Left, 3).unwrap();
            let got = l.conditional_expectation(&g.kron(&h)).unwrap();
            assert!(got.max_abs_diff(&eg.kron(&h)) < 1e-14);
            let r = a.tensor_lift(Side::Right, 3).unwrap();
            let got = r.conditional_expectation(&h.kron(&g)).unwrap();
            assert!(got.max_abs_diff(&h.kron(&eg)) < 1e-14);
        }
    }

    #[test]
    fn lifts_preserve_containment() {
        let coarse = SubalgebraDescriptor::<f64>::trivial(2).unwrap();
        let fine = SubalgebraDescriptor::<f64>::diagonal(2).unwrap();
        for side in [Side::Left, Side::Right] {
            let c = coarse.tensor_lift(side, 3).unwrap();
            let f = fine.tensor_lift(side, 3).unwrap();
            assert!(contains(&c, &f));
            assert!(!contains(&f, &c));
        }
    }

    #[test]
    fn two_param_commutes() {
        let left = Filtration::<f64>::dyadic(4, 3, BlockMode::Scalar).unwrap();
        let right = Filtration::<f64>::dyadic(2, 2, BlockMode::Full).unwrap();
        let tp = TwoParamFiltration::new(left, right).unwrap();
        let f = sample().kron(&Hermitian::from_real_rows(&[vec![1.0, 0.3], vec![0.3, 0.0]]).unwrap());
        assert!(tp.commutation_defect(&f).unwrap() < 1e-12);
        let grid = tp.martingale(&f).unwrap();
        assert!(grid.at(2, 1).unwrap().max_abs_diff(&tp.expectation(2, 1, &f).unwrap()) < 1e-15);
        assert_abs_diff_eq!(grid.at(0, 0).unwrap().trace(), f.trace(), epsilon = 1e-14);
    }

    #[test]
    fn rotated_blocks_use_dense_path() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = real_isometry::<f64>(&[vec![s, s], vec![s, -s]]);
        let rot = SubalgebraDescriptor::from_isometries(
            2,
            vec![(v.columns(0, 1).into_owned(), BlockMode::Full), (v.columns(1, 1).into_owned(), BlockMode::Full)],
        )
        .unwrap();
        let e = rot.conditional_expectation(&diag(&[1.0, 0.0])).unwrap();
        assert!(e.max_abs_diff(&Hermitian::scaled_identity(2, 0.5)) < 1e-15);
        assert!(!contains(&rot, &SubalgebraDescriptor::diagonal(2).unwrap()));
        assert!(contains(&SubalgebraDescriptor::trivial(2).unwrap(), &rot));
    }
}
