//! Majorant certificates for composed families `A_n ∘ B_m`.
//!
//! With `g` the `L₁[ℓ_∞]` majorant of `(B_m f)_m`, positivity gives
//! `A_n B_m f ≤ A_n g`, so the limit map `F` of `(A_n)` bounds the composed
//! limsup by `‖F(g)‖₁ ≤ ‖g‖₁`.

use crate::channels::MarkovChannel;
use crate::error::{Error, Result};
use crate::filtration::Filtration;
use crate::orlicz::{orlicz_norm, OrliczFunction};
use crate::qps::{leq, Hermitian};
use crate::seq_spaces::{majorant_of, MajorantOptions};

type Op = Hermitian<f64>;

pub const DOMINATION_TOL: f64 = 1e-7;
pub const CONTRACTION_TOL: f64 = 1e-8;

/// A family of positive maps together with its limit.
#[derive(Clone, Debug)]
pub enum Family {
    /// `count` copies of the identity.
    Identity(usize),
    /// Conditional expectations of a filtration; the limit is the last level.
    Martingale(Filtration<f64>),
    /// `M_0(T), …, M_{count−1}(T)`; the limit is the fixed-point projection.
    ErgodicMeans { channel: MarkovChannel, count: usize },
    /// An arbitrary list of channels (no limit map).
    Channels(Vec<MarkovChannel>),
}

impl Family {
    pub fn apply_all(&self, f: &Op) -> Result<Vec<Op>> {
        match self {
            Family::Identity(n) => Ok(vec![f.clone(); (*n).max(1)]),
            Family::Martingale(filt) => (0..filt.depth()).map(|k| filt.expectation(k, f)).collect(),
            Family::ErgodicMeans { channel, count } => (0..(*count).max(1)).map(|n| channel.ergodic_mean(n, f)).collect(),
            Family::Channels(ts) => ts.iter().map(|t| t.apply(f)).collect(),
        }
    }

    pub fn limit(&self, f: &Op) -> Result<Op> {
        match self {
            Family::Identity(_) => Ok(f.clone()),
            Family::Martingale(filt) => filt.expectation(filt.depth() - 1, f),
            Family::ErgodicMeans { channel, .. } => channel.fixed_point_projection(f),
            Family::Channels(_) => Err(Error::InvalidParameter("a list of channels has no limit map".into())),
        }
    }
}

#[derive(Clone, Debug)]
pub struct JmzCertificate {
    pub g: Op,
    /// `‖F(g)‖₁`, which dominates `‖limsup⁺ A_n B_m f‖₁`.
    pub bound: f64,
    pub majorant_norm: f64,
    pub f_of_g_norm: f64,
    pub orlicz_norm: f64,
    /// `‖g‖₁ / ‖f‖_Φ`, the instance value of `‖(B_m)‖_{L_Φ → L₁[ℓ_∞]}`.
    pub instance_ratio: f64,
    /// `‖F‖ · ratio · ‖f‖_Φ` with `‖F‖ = 1`.
    pub theorem_bound: f64,
    pub domination_residual: f64,
}

pub fn theorem_a_certificate(f: &Op, a: &Family, b: &Family, phi: &OrliczFunction<f64>) -> Result<JmzCertificate> {
    let scale = f.spectral_norm().max(1.0);
    if f.min_eigenvalue() < -1e-10 * scale {
        return Err(Error::NotPositive(f.min_eigenvalue()));
    }
    let bs = b.apply_all(f)?;
    let sol = majorant_of(&bs, 1.0, MajorantOptions::default())?;
    let g = sol.g;
    let mut domination = f64::INFINITY;
    for (m, bm) in bs.iter().enumerate() {
        if !leq(bm, &g, DOMINATION_TOL) {
            return Err(Error::Violation(format!("B_{m}(f) is not below the majorant")));
        }
        domination = domination.min((&g - bm).min_eigenvalue());
    }
    let fg = a.limit(&g)?;
    // F(g) ≥ 0, so its L₁ norm is its trace.
    let f_of_g_norm = fg.eigenvalues().iter().map(|x| x.abs()).sum::<f64>() / fg.dim() as f64;
    let majorant_norm = g.eigenvalues().iter().map(|x| x.abs()).sum::<f64>() / g.dim() as f64;
    if f_of_g_norm > majorant_norm + CONTRACTION_TOL {
        return Err(Error::Violation(format!("‖F(g)‖₁ = {f_of_g_norm} exceeds ‖g‖₁ = {majorant_norm}")));
    }
    let norm = orlicz_norm(f, phi)?;
    let instance_ratio = if norm > 0.0 { majorant_norm / norm } else { 0.0 };
    Ok(JmzCertificate {
        g,
        bound: f_of_g_norm,
        majorant_norm,
        f_of_g_norm,
        orlicz_norm: norm,
        instance_ratio,
        theorem_bound: instance_ratio * norm,
        domination_residual: domination,
    })
}

/// Pointwise two-parameter dyadic maximal function and `max_m f_{K,m}` on a `d₁ × d₂` grid
/// (row-major, first index left). Level `k` averages over blocks of size `d/2^k`.
pub fn two_param_commutative_oracle(
    f: &[f64],
    d1: usize,
    d2: usize,
    left_depth: usize,
    right_depth: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !d1.is_power_of_two() || !d2.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("{d1} × {d2} is not a dyadic grid")));
    }
    if f.len() != d1 * d2 {
        return Err(Error::DimensionMismatch(d1 * d2, f.len()));
    }
    let max_l = d1.trailing_zeros() as usize + 1;
    let max_r = d2.trailing_zeros() as usize + 1;
    if left_depth == 0 || right_depth == 0 || left_depth > max_l || right_depth > max_r {
        return Err(Error::InvalidParameter(format!("depths ({left_depth}, {right_depth}) out of range")));
    }
    let mut maximal = vec![0.0f64; f.len()];
    let mut tail = vec![0.0f64; f.len()];
    for n in 0..left_depth {
        let wl = d1 >> n;
        for m in 0..right_depth {
            let wr = d2 >> m;
            for bi in (0..d1).step_by(wl) {
                for bk in (0..d2).step_by(wr) {
                    let mut s = 0.0;
                    for i in bi..bi + wl {
                        for k in bk..bk + wr {
                            s += f[i * d2 + k];
                        }
                    }
                    let avg = s / (wl * wr) as f64;
                    for i in bi..bi + wl {
                        for k in bk..bk + wr {
                            let x = i * d2 + k;
                            maximal[x] = maximal[x].max(avg);
                            if n == left_depth - 1 {
                                tail[x] = tail[x].max(avg);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((maximal, tail))
}
