//! Positive-cone `L_p(M; ℓ_∞)` norms `inf{‖g‖_p : g ⪰ f_n}` and the
//! Orlicz, asymmetric, limsup and b.a.u. quantities built on them.

mod barrier;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::orlicz::{lp_norm, lp_norm_of_values, orlicz_norm, orlicz_norm_of_values, OrliczFunction};
use crate::qps::{CMatrix, Hermitian, Interval, Projection};
pub use crate::sequence::{OperatorSequence, Tail};

use barrier::{solve_block, Psi};

pub const POSITIVITY_TOL: f64 = 1e-9;
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// Softplus width used to smooth `log₊` in the Orlicz majorant problem.
pub const ORLICZ_SMOOTHING: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Method {
    /// Closed forms where they are exact (commuting diagonal families, identical entries, `p = ∞`).
    #[default]
    Auto,
    /// Always run the barrier solver (`p = ∞` still uses its closed form).
    Barrier,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Split into the connected components of the joint sparsity pattern.
    #[default]
    Blocks,
    Dense,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct MajorantOptions {
    pub method: Method,
    pub strategy: Strategy,
}

#[derive(Clone, Debug)]
pub struct MajorantSolution {
    pub g: Hermitian<f64>,
    pub objective: f64,
    /// `min_n λ_min(g − f_n)`.
    pub feasibility_residual: f64,
    pub iterations: usize,
    pub exact: bool,
}

fn check_positive(fs: &[Hermitian<f64>]) -> Result<()> {
    for f in fs {
        let m = f.min_eigenvalue();
        if m < -POSITIVITY_TOL {
            return Err(Error::NotPositive(m));
        }
    }
    Ok(())
}

fn residual_of(g: &Hermitian<f64>, fs: &[Hermitian<f64>]) -> f64 {
    fs.iter().map(|f| (g - f).min_eigenvalue()).fold(f64::INFINITY, f64::min)
}

fn pointwise_max(fs: &[Hermitian<f64>]) -> Vec<f64> {
    let d = fs[0].dim();
    let mut out = vec![f64::NEG_INFINITY; d];
    for f in fs {
        for (o, x) in out.iter_mut().zip(f.diagonal()) {
            *o = o.max(x);
        }
    }
    out
}

/// Connected components of the graph `i ~ j` iff some `f_n` has a nonzero `(i, j)` entry.
fn components(fs: &[Hermitian<f64>]) -> Vec<Vec<usize>> {
    let d = fs[0].dim();
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let zero = Complex64::new(0.0, 0.0);
    for f in fs {
        let m = f.matrix();
        for i in 0..d {
            for j in i + 1..d {
                if m[(i, j)] != zero {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a] = b;
                    }
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..d {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

fn submatrix(m: &CMatrix<f64>, idx: &[usize]) -> CMatrix<f64> {
    CMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// Runs the barrier on each component and assembles `g`, certified feasible by a final scalar shift.
fn barrier_majorant(fs: &[Hermitian<f64>], psi: Psi, scale: f64, strategy: Strategy) -> Result<(Hermitian<f64>, usize)> {
    let d = fs[0].dim();
    let groups = match strategy {
        Strategy::Blocks => components(fs),
        Strategy::Dense => vec![(0..d).collect()],
    };
    let inv = Complex64::new(1.0 / scale, 0.0);
    let scaled: Vec<CMatrix<f64>> = fs.iter().map(|f| f.matrix() * inv).collect();
    let mut g = CMatrix::<f64>::zeros(d, d);
    let mut iterations = 0;
    let weight_den = (fs.len() * d) as f64;
    for idx in &groups {
        let sub: Vec<CMatrix<f64>> = scaled.iter().map(|m| submatrix(m, idx)).collect();
        let b = idx.len();
        let sol = solve_block(&sub, psi, 1.0 / d as f64, weight_den, CMatrix::identity(b, b));
        iterations += sol.iterations;
        if !sol.converged {
            return Err(Error::SolverStagnation { objective: sol.objective, residual: f64::NAN, iterations });
        }
        for (i, &gi) in idx.iter().enumerate() {
            for (j, &gj) in idx.iter().enumerate() {
                g[(gi, gj)] = sol.g[(i, j)] * Complex64::new(scale, 0.0);
            }
        }
    }
    let mut g = Hermitian::from_matrix(g)?;
    let r = residual_of(&g, fs);
    if r < 0.0 {
        g = &g + &Hermitian::scaled_identity(d, -r);
    }
    Ok((g, iterations))
}

/// `inf{‖g‖_p : g ⪰ f_n ∀n}` over the folded sequence (constant tails contribute one entry).
pub fn sup_norm_positive(seq: &OperatorSequence<f64>, p: f64) -> Result<MajorantSolution> {
    sup_norm_positive_with(seq, p, MajorantOptions::default())
}

pub fn sup_norm_positive_with(seq: &OperatorSequence<f64>, p: f64, opts: MajorantOptions) -> Result<MajorantSolution> {
    majorant_of(&seq.folded(), p, opts)
}

/// Majorant problem for an explicit finite family.
pub fn majorant_of(fs: &[Hermitian<f64>], p: f64, opts: MajorantOptions) -> Result<MajorantSolution> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    let first = fs.first().ok_or_else(|| Error::InvalidParameter("empty family".into()))?;
    let d = first.dim();
    for f in fs {
        first.same_dim(f)?;
    }
    check_positive(fs)?;
    let exact = |g: Hermitian<f64>| -> Result<MajorantSolution> {
        let objective = lp_norm(&g, p)?;
        let feasibility_residual = residual_of(&g, fs);
        Ok(MajorantSolution { g, objective, feasibility_residual, iterations: 0, exact: true })
    };
    if p.is_infinite() {
        let top = fs.iter().map(|f| f.max_eigenvalue()).fold(0.0, f64::max);
        return exact(Hermitian::scaled_identity(d, top));
    }
    let scale = fs.iter().map(|f| f.spectral_norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return exact(Hermitian::zero(d));
    }
    if opts.method == Method::Auto {
        if fs.iter().all(|f| f.is_diagonal()) {
            return exact(Hermitian::from_real_diagonal(&pointwise_max(fs)));
        }
        if fs.iter().all(|f| f.max_abs_diff(first) == 0.0) {
            return exact(first.clone());
        }
    }
    let psi = if p == 1.0 {
        Psi::Linear
    } else if p == 2.0 {
        Psi::Square
    } else {
        Psi::Power(p)
    };
    let (g, iterations) = barrier_majorant(fs, psi, scale, opts.strategy)?;
    let objective = lp_norm(&g, p)?;
    let feasibility_residual = residual_of(&g, fs);
    if feasibility_residual < -FEASIBILITY_TOL {
        return Err(Error::SolverStagnation { objective, residual: feasibility_residual, iterations });
    }
    Ok(MajorantSolution { g, objective, feasibility_residual, iterations, exact: false })
}

/// Commutative majorant on `d` points: pointwise max and its `L_p` norm.
pub fn sup_norm_diagonal(entries: &[Vec<f64>], p: f64) -> Result<(Vec<f64>, f64)> {
    let d = entries.first().map_or(0, |e| e.len());
    let sparse: Vec<Vec<(usize, f64)>> = entries.iter().map(|e| e.iter().copied().enumerate().collect()).collect();
    if entries.iter().any(|e| e.len() != d) {
        return Err(Error::InvalidParameter("entries differ in length".into()));
    }
    sup_norm_sparse_diagonal(d, &sparse, p)
}

/// As `sup_norm_diagonal` for sparse nonnegative vectors given as `(index, value)` lists.
pub fn sup_norm_sparse_diagonal(dim: usize, entries: &[Vec<(usize, f64)>], p: f64) -> Result<(Vec<f64>, f64)> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    if dim == 0 {
        return Err(Error::ZeroDimension);
    }
    let mut g = vec![0.0f64; dim];
    for e in entries {
        for &(i, x) in e {
            if i >= dim {
                return Err(Error::DimensionMismatch(dim, i + 1));
            }
            if x < -POSITIVITY_TOL {
                return Err(Error::NotPositive(x));
            }
            g[i] = g[i].max(x);
        }
    }
    let abs: Vec<f64> = g.iter().map(|x| x.abs()).collect();
    let norm = lp_norm_of_values(&abs, p);
    Ok((g, norm))
}

/// `inf{‖g‖_Φ : g ⪰ f_n}` for the log-power family. Upper bound via the exact norm of a feasible `g`.
pub fn orlicz_sup_norm(seq: &OperatorSequence<f64>, phi: &OrliczFunction<f64>) -> Result<f64> {
    orlicz_sup_norm_with(seq, phi, MajorantOptions::default())
}

pub fn orlicz_sup_norm_with(seq: &OperatorSequence<f64>, phi: &OrliczFunction<f64>, opts: MajorantOptions) -> Result<f64> {
    let fs = seq.folded();
    let alpha = phi
        .alpha()
        .ok_or_else(|| Error::InvalidParameter("Orlicz majorant needs the log-power family".into()))?;
    check_positive(&fs)?;
    let first = &fs[0];
    let d = first.dim();
    let scale = fs.iter().map(|f| f.spectral_norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    if alpha == 0.0 {
        return Ok(majorant_of(&fs, 1.0, opts)?.objective);
    }
    if opts.method == Method::Auto {
        if fs.iter().all(|f| f.is_diagonal()) {
            let g: Vec<f64> = pointwise_max(&fs).into_iter().map(f64::abs).collect();
            return orlicz_norm_of_values(&g, phi);
        }
        if fs.iter().all(|f| f.max_abs_diff(first) == 0.0) {
            return orlicz_norm(first, phi);
        }
    }
    let mut lo = fs.iter().map(|f| orlicz_norm(f, phi)).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
    let g1 = majorant_of(&fs, 1.0, opts)?.g;
    let mut hi = orlicz_norm(&g1, phi)?;
    for _ in 0..60 {
        if hi - lo <= 1e-6 * hi {
            break;
        }
        let t = 0.5 * (lo + hi);
        let psi = Psi::Orlicz { alpha, eta: ORLICZ_SMOOTHING, t: t / scale };
        let (g, _) = barrier_majorant(&fs, psi, scale, opts.strategy)?;
        let smoothed: f64 = g
            .eigenvalues()
            .iter()
            .map(|&x| barrier::smoothed_orlicz(alpha, ORLICZ_SMOOTHING, x / t).0)
            .sum::<f64>()
            / d as f64;
        if smoothed <= 1.0 {
            hi = hi.min(orlicz_norm(&g, phi)?).min(t);
        } else {
            lo = t;
        }
    }
    Ok(hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AsymSide {
    Column,
    Row,
}

/// `‖(f_n* f_n)‖^{1/2}` (column) or `‖(f_n f_n*)‖^{1/2}` (row) in `L₁(ℓ_∞)`.
pub fn asym_sup_norm(entries: &[CMatrix<f64>], side: AsymSide) -> Result<f64> {
    asym_sup_norm_with(entries, side, MajorantOptions::default())
}

pub fn asym_sup_norm_with(entries: &[CMatrix<f64>], side: AsymSide, opts: MajorantOptions) -> Result<f64> {
    let squares = entries
        .iter()
        .map(|f| match side {
            AsymSide::Column => Hermitian::from_matrix(f.adjoint() * f),
            AsymSide::Row => Hermitian::from_matrix(f * f.adjoint()),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(majorant_of(&squares, 1.0, opts)?.objective.max(0.0).sqrt())
}

/// The best candidate found for one `ε` of the grid.
#[derive(Clone, Debug)]
pub struct EpsRecord {
    pub epsilon: f64,
    pub value: f64,
    pub cut: (usize, usize),
    pub e_rank: usize,
}

#[derive(Clone, Debug)]
pub struct LimsupEstimate {
    pub upper: f64,
    pub per_eps: Vec<EpsRecord>,
}

#[derive(Clone, Debug, Default)]
pub struct LimsupOptions {
    pub majorant: MajorantOptions,
    /// Projections tried at every cut in addition to the spectral candidates.
    pub extra_candidates: Vec<Projection<f64>>,
}

/// Families kept by each cut: `n ≥ N` (or `n ≥ N, m ≥ M` on a grid) plus the tail.
fn cut_families(seq: &OperatorSequence<f64>) -> Result<Vec<((usize, usize), Vec<Hermitian<f64>>)>> {
    match seq.tail() {
        Tail::None => Err(Error::InvalidParameter("limsup estimate needs a tail".into())),
        Tail::Constant(c) => Ok((0..=seq.len())
            .map(|n| {
                let mut fam: Vec<Hermitian<f64>> = seq.entries()[n..].to_vec();
                fam.push(c.clone());
                ((n, 0), fam)
            })
            .collect()),
        Tail::Grid2d { rows, cols, corner } => {
            let mut out = Vec::new();
            for a in 0..=*rows {
                for b in 0..=*cols {
                    let mut fam = Vec::new();
                    for n in a..*rows {
                        for m in b..*cols {
                            fam.push(seq.entries()[n * cols + m].clone());
                        }
                    }
                    fam.push(corner.clone());
                    out.push(((a, b), fam));
                }
            }
            Ok(out)
        }
    }
}

/// Spectral projections `1_{(t,∞)}(g)` of a majorant, one per distinct eigenvalue band.
fn spectral_candidates(g: &Hermitian<f64>) -> Vec<Projection<f64>> {
    let vals = g.eigenvalues();
    let mut out = vec![Projection::zero(g.dim())];
    let mut thresholds: Vec<f64> = Vec::new();
    for w in vals.windows(2) {
        if w[1] - w[0] > 1e-9 * w[1].abs().max(1.0) {
            thresholds.push(0.5 * (w[0] + w[1]));
        }
    }
    for t in thresholds {
        out.push(g.spectral_projection_with(Interval::above(t), 0.0));
    }
    out
}

/// Upper estimate of `sup_ε inf_{τ(e)<ε} inf_N ‖(e⊥ f_n e⊥)_{n>N}‖_p` over spectral candidates.
pub fn limsup_norm_estimate(seq: &OperatorSequence<f64>, p: f64, eps_grid: &[f64]) -> Result<LimsupEstimate> {
    limsup_norm_estimate_with(seq, p, eps_grid, &LimsupOptions::default())
}

pub fn limsup_norm_estimate_with(
    seq: &OperatorSequence<f64>,
    p: f64,
    eps_grid: &[f64],
    opts: &LimsupOptions,
) -> Result<LimsupEstimate> {
    if eps_grid.is_empty() {
        return Err(Error::InvalidParameter("empty epsilon grid".into()));
    }
    let cuts = cut_families(seq)?;
    let d = seq.dim();
    let eps_max = eps_grid.iter().copied().fold(0.0, f64::max);
    // (cut, rank, τ(e), value) for every evaluated candidate.
    let mut evaluated: Vec<((usize, usize), usize, f64, f64)> = Vec::new();
    for (cut, fam) in &cuts {
        let g = majorant_of(fam, p, opts.majorant)?.g;
        let mut cands = spectral_candidates(&g);
        cands.extend(opts.extra_candidates.iter().cloned());
        for e in cands {
            if e.dim() != d {
                return Err(Error::DimensionMismatch(d, e.dim()));
            }
            let tr = e.trace();
            if tr >= eps_max {
                continue;
            }
            let perp = e.complement();
            let compressed: Vec<Hermitian<f64>> = fam.iter().map(|f| f.compress(&perp)).collect();
            let v = majorant_of(&compressed, p, opts.majorant)?.objective;
            evaluated.push((*cut, e.rank(), tr, v));
        }
    }
    let mut per_eps = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let best = evaluated
            .iter()
            .filter(|c| c.2 < eps)
            .min_by(|a, b| a.3.total_cmp(&b.3))
            .ok_or_else(|| Error::InvalidParameter(format!("no admissible projection for epsilon {eps}")))?;
        per_eps.push(EpsRecord { epsilon: eps, value: best.3, cut: best.0, e_rank: best.1 });
    }
    let upper = per_eps.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max);
    Ok(LimsupEstimate { upper, per_eps })
}

/// A projection `e` with `τ(e) < ε` and `‖e⊥(f_n − f)e⊥‖_∞ ≤ δ` for all `n > N`.
#[derive(Clone, Debug)]
pub struct BauCertificate {
    pub e: Projection<f64>,
    pub n: usize,
    pub delta: f64,
    pub epsilon: f64,
}

/// Candidate at a fixed cut `N` (entries `n > N`, indexed from 1).
pub fn bau_certificate_at(seq: &OperatorSequence<f64>, f: &Hermitian<f64>, epsilon: f64, cut: usize) -> Result<BauCertificate> {
    let d = f.dim();
    let diffs: Vec<Hermitian<f64>> = seq.entries().iter().skip(cut).map(|x| (x - f).abs()).collect();
    if diffs.is_empty() {
        return Ok(BauCertificate { e: Projection::zero(d), n: cut, delta: 0.0, epsilon });
    }
    let h = majorant_of(&diffs, 1.0, MajorantOptions::default())?.g;
    let e = spectral_candidates(&h)
        .into_iter()
        .filter(|e| e.trace() < epsilon)
        .max_by(|a, b| a.rank().cmp(&b.rank()))
        .unwrap_or_else(|| Projection::zero(d));
    let perp = e.complement();
    let delta = seq
        .entries()
        .iter()
        .skip(cut)
        .map(|x| (x - f).compress(&perp).spectral_norm())
        .fold(0.0, f64::max);
    Ok(BauCertificate { e, n: cut, delta, epsilon })
}

/// Greedy certificate minimizing `δ` over cuts; the smallest cut wins ties.
pub fn bau_certificate(seq: &OperatorSequence<f64>, f: &Hermitian<f64>, epsilon: f64) -> Result<BauCertificate> {
    let mut best: Option<BauCertificate> = None;
    for cut in 0..seq.len().max(1) {
        let c = bau_certificate_at(seq, f, epsilon, cut)?;
        if best.as_ref().is_none_or(|b| c.delta < b.delta) {
            best = Some(c);
        }
    }
    Ok(best.expect("at least one cut"))
}
