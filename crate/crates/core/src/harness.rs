//! Seeded experiment campaigns with CSV reports and a JSON summary.
//!
//! Instances come from ChaCha20 keyed by the config seed, one stream per instance index,
//! so every instance is reproducible on its own and rows do not depend on thread scheduling.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{haar_unitary, MarkovChannel};
use crate::cuculescu::{cuculescu_projections, geometric_grid, stein_integral, verify_refined, verify_weak11, CuculescuResult};
use crate::error::{Error, Result};
use crate::filtration::{martingale, BlockMode, Filtration, Side, SubalgebraDescriptor, TwoParamFiltration};
use crate::free_group::{diagram_check, sigma_length_identity, theta_twist, FreeElement, FreeWord, Generator};
use crate::jmz::{theorem_a_certificate, two_param_commutative_oracle, Family};
use crate::orlicz::{lp_norm, OrliczFunction};
use crate::qps::{CMatrix, Hermitian};
use crate::seq_spaces::{limsup_norm_estimate, sup_norm_sparse_diagonal};
use crate::strong_maximal::{strong_q, verify_theorem_b};

pub const SCHEMA_VERSION: u32 = 1;
/// Spectra of random instances are log-uniform on `[e^{LOG_SPECTRUM.0}, e^{LOG_SPECTRUM.1}]`.
pub const LOG_SPECTRUM: (f64, f64) = (-2.0, 12.0);
pub const LAMBDA_JITTER: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Cuculescu,
    StrongMaximal,
    JmzTensorMartingale,
    ErgodicTensor,
    Limsup,
    FreegroupSigma,
    FreegroupDiagram,
    SteinIntegral,
    Remark23Divergence,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Cuculescu,
        Experiment::StrongMaximal,
        Experiment::JmzTensorMartingale,
        Experiment::ErgodicTensor,
        Experiment::Limsup,
        Experiment::FreegroupSigma,
        Experiment::FreegroupDiagram,
        Experiment::SteinIntegral,
        Experiment::Remark23Divergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Cuculescu => "cuculescu",
            Experiment::StrongMaximal => "strong_maximal",
            Experiment::JmzTensorMartingale => "jmz_tensor_martingale",
            Experiment::ErgodicTensor => "ergodic_tensor",
            Experiment::Limsup => "limsup",
            Experiment::FreegroupSigma => "freegroup_sigma",
            Experiment::FreegroupDiagram => "freegroup_diagram",
            Experiment::SteinIntegral => "stein_integral",
            Experiment::Remark23Divergence => "remark23_divergence",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Experiment::Cuculescu => "Cuculescu projections: weak (1,1) and the refined level-set bound",
            Experiment::StrongMaximal => "two-parameter projections q(λ): corner bound and trace ratio",
            Experiment::JmzTensorMartingale => "majorant certificate for E_n ⊗ E_m against the pointwise oracle",
            Experiment::ErgodicTensor => "majorant certificate for ergodic means composed with a martingale",
            Experiment::Limsup => "limsup seminorm of a martingale against ‖f‖_p",
            Experiment::FreegroupSigma => "length identity on Σ over all reduced words, growth of Σ-balls",
            Experiment::FreegroupDiagram => "free vs torus Poisson multipliers on random Σ-supported elements",
            Experiment::SteinIntegral => "∫ τ(q(λ)⊥) dλ against the L log L norm",
            Experiment::Remark23Divergence => "tail norms of n·1_[0,1/n] on a d-point grid",
        }
    }

    fn header(self) -> &'static [&'static str] {
        match self {
            Experiment::Cuculescu => &[
                "seed", "index", "d", "depth", "lambda", "tau_q_perp", "weak_rhs", "weak_slack", "refined_rhs", "refined_slack",
                "corner_max_eig", "pass", "note",
            ],
            Experiment::StrongMaximal => &[
                "seed", "index", "d1", "d2", "epsilon", "r", "trivial", "measured_c", "bound_c", "tau_one_minus_q", "orlicz_rhs",
                "ratio", "intermediate_rhs", "intermediate_slack", "pass", "note",
            ],
            Experiment::JmzTensorMartingale | Experiment::ErgodicTensor => &[
                "seed", "index", "d1", "d2", "bound", "reference", "bound_slack", "majorant_norm", "orlicz_norm", "instance_ratio",
                "domination_residual", "contraction_slack", "pass", "note",
            ],
            Experiment::Limsup => &["seed", "index", "d", "p", "estimate", "lp_norm", "gap", "pass", "note"],
            Experiment::FreegroupSigma => &["n", "ball", "sigma_ball", "growth_floor", "growth_slack", "pass", "note"],
            Experiment::FreegroupDiagram => {
                &["seed", "index", "t", "word", "length", "n_a", "n_b", "in_sigma", "multiplier_gap", "trace_defect", "pass", "note"]
            }
            Experiment::SteinIntegral => &["seed", "index", "d", "integral", "orlicz_norm", "ratio", "tripwire", "pass", "note"],
            Experiment::Remark23Divergence => &["d", "cut", "tail_norm", "exact_sum", "abs_diff", "log_d_over_cut", "pass", "note"],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    Range { r_min: i32, r_max: i32 },
    Grid { grid: Vec<f64> },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiltrationKind {
    /// Random refining splits with scalar and full blocks, in a Haar-rotated basis.
    #[default]
    Random,
    /// Random refining splits with scalar blocks in the standard basis (commutative).
    RandomScalar,
    /// Dyadic scalar blocks, levels `{I}, {halves}, …`.
    Dyadic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: Experiment,
    pub seed: u64,
    pub dims: Vec<usize>,
    pub corpus_size: usize,
    #[serde(default)]
    pub lambda_spec: Option<LambdaSpec>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// When set, each instance draws ε from this list instead of using `epsilon`.
    #[serde(default)]
    pub epsilon_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub phi_alpha: Option<f64>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    pub output: PathBuf,
    #[serde(default)]
    pub filtration: FiltrationKind,
    #[serde(default)]
    pub max_depth: Option<usize>,
    #[serde(default)]
    pub max_len: Option<usize>,
    #[serde(default)]
    pub t_values: Option<Vec<f64>>,
    #[serde(default)]
    pub cut: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Defaults matching the acceptance-scale campaign for each experiment.
    pub fn preset(experiment: Experiment, output: PathBuf) -> Self {
        let mut cfg = Self {
            schema_version: SCHEMA_VERSION,
            experiment,
            seed: 20_240_601,
            dims: vec![4, 8, 16],
            corpus_size: 200,
            lambda_spec: None,
            epsilon: None,
            epsilon_grid: None,
            phi_alpha: Some(1.0),
            tolerances: BTreeMap::new(),
            output,
            filtration: FiltrationKind::Random,
            max_depth: None,
            max_len: None,
            t_values: None,
            cut: None,
        };
        match experiment {
            Experiment::Cuculescu => cfg.lambda_spec = Some(LambdaSpec::Range { r_min: 0, r_max: 8 }),
            Experiment::StrongMaximal => {
                cfg.dims = vec![8, 8];
                cfg.epsilon = Some(0.5);
                cfg.epsilon_grid = Some(vec![0.5, 1.0]);
                cfg.lambda_spec = Some(LambdaSpec::Range { r_min: 6, r_max: 10 });
            }
            Experiment::JmzTensorMartingale => {
                cfg.dims = vec![8, 8];
                cfg.corpus_size = 100;
            }
            Experiment::ErgodicTensor => {
                cfg.dims = vec![2, 4];
                cfg.corpus_size = 50;
            }
            Experiment::Limsup => {
                cfg.dims = vec![4];
                cfg.corpus_size = 20;
            }
            Experiment::FreegroupSigma => {
                cfg.dims = vec![2];
                cfg.corpus_size = 1;
                cfg.max_len = Some(10);
            }
            Experiment::FreegroupDiagram => {
                cfg.dims = vec![2];
                cfg.corpus_size = 1000;
                cfg.t_values = Some(vec![0.1, 1.0]);
            }
            Experiment::SteinIntegral => {
                cfg.dims = vec![64];
                cfg.corpus_size = 100;
                cfg.filtration = FiltrationKind::Dyadic;
            }
            Experiment::Remark23Divergence => {
                cfg.dims = vec![1 << 10, 1 << 12, 1 << 14];
                cfg.corpus_size = 1;
                cfg.cut = Some(10);
            }
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported schema_version {}", self.schema_version)));
        }
        if self.corpus_size == 0 {
            return Err(Error::Config("corpus_size must be at least 1".into()));
        }
        if self.dims.is_empty() || self.dims.iter().any(|&d| d < 2) {
            return Err(Error::Config("dims must be nonempty, each at least 2".into()));
        }
        let pow2 = |d: &usize| d.is_power_of_two();
        match self.experiment {
            Experiment::StrongMaximal | Experiment::JmzTensorMartingale | Experiment::ErgodicTensor => {
                if self.dims.len() != 2 || !self.dims.iter().all(pow2) {
                    return Err(Error::Config("this experiment needs dims [d1, d2], powers of two".into()));
                }
            }
            Experiment::SteinIntegral | Experiment::Remark23Divergence => {
                if !self.dims.iter().all(pow2) {
                    return Err(Error::Config("dims must be powers of two".into()));
                }
            }
            _ => {}
        }
        if self.epsilon.iter().chain(self.epsilon_grid.iter().flatten()).any(|&e| !(e > 0.0)) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if self.epsilon_grid.as_ref().is_some_and(|g| g.is_empty()) {
            return Err(Error::Config("epsilon_grid must be nonempty".into()));
        }
        if let Some(LambdaSpec::Range { r_min, r_max }) = &self.lambda_spec {
            if r_min > r_max {
                return Err(Error::Config("lambda_spec: r_min > r_max".into()));
            }
        }
        if let Some(LambdaSpec::Grid { grid }) = &self.lambda_spec {
            if grid.is_empty() || grid.iter().any(|&l| !(l > 0.0)) {
                return Err(Error::Config("lambda_spec grid must be nonempty and positive".into()));
            }
        }
        if self.max_len.is_some_and(|n| n > crate::free_group::MAX_ENUMERATION_LEN) {
            return Err(Error::Config("max_len exceeds the enumeration bound".into()));
        }
        Ok(())
    }

    fn tol(&self, key: &str, default: f64) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(default)
    }

    fn lambdas(&self, rng: &mut ChaCha20Rng, default: (i32, i32)) -> f64 {
        match &self.lambda_spec {
            Some(LambdaSpec::Grid { grid }) => grid[rng.random_range(0..grid.len())],
            Some(LambdaSpec::Range { r_min, r_max }) => (rng.random_range(*r_min..=*r_max) as f64).exp(),
            None => (rng.random_range(default.0..=default.1) as f64).exp(),
        }
    }
}

/// The generator for instance `index`: ChaCha20 keyed by `seed`, stream `index`.
pub fn instance_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Spectrum drawn log-uniformly on the configured range.
pub fn log_uniform_spectrum<G: Rng>(d: usize, rng: &mut G) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(LOG_SPECTRUM.0..LOG_SPECTRUM.1).exp()).collect()
}

/// Positive operator with a log-uniform spectrum, diagonal or in a Haar basis.
pub fn random_positive<G: Rng>(d: usize, rng: &mut G, diagonal: bool) -> Hermitian<f64> {
    let vals = log_uniform_spectrum(d, rng);
    if diagonal {
        return Hermitian::from_real_diagonal(&vals);
    }
    let u = haar_unitary(d, rng);
    let dm = CMatrix::<f64>::from_diagonal(&DVector::from_iterator(d, vals.iter().map(|&x| Complex64::new(x, 0.0))));
    Hermitian::from_matrix(&u * dm * u.adjoint()).expect("conjugated diagonal is Hermitian")
}

/// Random refining filtration: each level splits scalar blocks or promotes them to full blocks.
pub fn random_filtration<G: Rng>(d: usize, depth: usize, kind: FiltrationKind, rng: &mut G) -> Result<Filtration<f64>> {
    if depth == 0 {
        return Err(Error::InvalidParameter("depth must be positive".into()));
    }
    if kind == FiltrationKind::Dyadic {
        return Filtration::dyadic(d, depth, BlockMode::Scalar);
    }
    let scalar_only = kind == FiltrationKind::RandomScalar;
    let mut blocks: Vec<(Vec<usize>, BlockMode)> = vec![((0..d).collect(), BlockMode::Scalar)];
    let mut levels = vec![blocks.clone()];
    for _ in 1..depth {
        let mut next = Vec::new();
        for (idx, mode) in &blocks {
            if *mode == BlockMode::Full || idx.len() == 1 {
                next.push((idx.clone(), *mode));
                continue;
            }
            let pick = |rng: &mut G| if !scalar_only && rng.random_bool(0.3) { BlockMode::Full } else { BlockMode::Scalar };
            if rng.random_bool(0.75) {
                let cut = rng.random_range(1..idx.len());
                next.push((idx[..cut].to_vec(), pick(rng)));
                next.push((idx[cut..].to_vec(), pick(rng)));
            } else {
                next.push((idx.clone(), pick(rng)));
            }
        }
        blocks = next;
        levels.push(blocks.clone());
    }
    let descs: Vec<SubalgebraDescriptor<f64>> = if scalar_only {
        levels.into_iter().map(|l| SubalgebraDescriptor::from_coordinate_blocks(d, l)).collect::<Result<_>>()?
    } else {
        let u = haar_unitary(d, rng);
        levels
            .into_iter()
            .map(|l| {
                let iso = l
                    .into_iter()
                    .map(|(idx, mode)| (CMatrix::from_fn(d, idx.len(), |r, c| u[(r, idx[c])]), mode))
                    .collect();
                SubalgebraDescriptor::from_isometries(d, iso)
            })
            .collect::<Result<_>>()?
    };
    Filtration::new(descs)
}

/// One CSV row plus its verdict and the ratios folded into the summary.
#[derive(Clone, Debug)]
pub struct ReportRow {
    pub cells: Vec<String>,
    pub pass: bool,
    pub seed: u64,
    pub index: u64,
    pub ratios: Vec<(&'static str, f64)>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Summary {
    pub schema_version: u32,
    pub experiment: Experiment,
    pub rows: usize,
    pub pass_count: usize,
    pub fail_count: usize,
    pub failing: Vec<FailingInstance>,
    pub max_ratios: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct FailingInstance {
    pub seed: u64,
    pub index: u64,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub summary: Summary,
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
}

impl RunOutcome {
    /// 0 when every row passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.summary.fail_count == 0 {
            0
        } else {
            1
        }
    }
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn row(cfg: &ExperimentConfig, index: u64, cells: Vec<String>, pass: bool, ratios: Vec<(&'static str, f64)>) -> ReportRow {
    ReportRow { cells, pass, seed: cfg.seed, index, ratios }
}

fn error_row(cfg: &ExperimentConfig, index: u64, leading: Vec<String>, err: &Error) -> ReportRow {
    let width = cfg.experiment.header().len();
    let mut cells = leading;
    cells.resize(width - 2, String::new());
    cells.push("false".into());
    cells.push(err.to_string());
    row(cfg, index, cells, false, Vec::new())
}

/// Runs Cuculescu, retrying with `λ(1 + 1e-7)` on a degenerate spectrum.
fn cuculescu_jittered(
    mart: &crate::sequence::OperatorSequence<f64>,
    filt: &Filtration<f64>,
    lambda: f64,
) -> Result<(CuculescuResult<f64>, String)> {
    let mut lam = lambda;
    for attempt in 0..3 {
        match cuculescu_projections(mart, filt, lam) {
            Ok(r) => {
                let note = if attempt == 0 { String::new() } else { format!("lambda jittered {attempt}x") };
                return Ok((r, note));
            }
            Err(Error::Degenerate { .. }) => lam *= 1.0 + LAMBDA_JITTER,
            Err(e) => return Err(e),
        }
    }
    cuculescu_projections(mart, filt, lam).map(|r| (r, "lambda jittered 3x".into()))
}

fn run_cuculescu(cfg: &ExperimentConfig, index: u64) -> Vec<ReportRow> {
    let mut rng = instance_rng(cfg.seed, index);
    let d = cfg.dims[rng.random_range(0..cfg.dims.len())];
    let depth = rng.random_range(1..=cfg.max_depth.unwrap_or(5));
    let lambda = cfg.lambdas(&mut rng, (0, 8));
    let diagonal = cfg.filtration != FiltrationKind::Random;
    let mut go = || -> Result<ReportRow> {
        let filt = random_filtration(d, depth, cfg.filtration, &mut rng)?;
        let f = random_positive(d, &mut rng, diagonal);
        let mart = martingale(&f, &filt)?;
        let (res, note) = cuculescu_jittered(&mart, &filt, lambda)?;
        let w = verify_weak11(&res, &f);
        let rf = verify_refined(&res, &f);
        let slack = cfg.tol("bound", 1e-9);
        let (w, rf) = match (w, rf) {
            (Ok(w), Ok(rf)) => (w, rf),
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let pass = w.lhs <= w.rhs + slack && rf.lhs <= rf.rhs + slack && res.corner_max_eig <= res.lambda + 1e-7 * res.lambda.max(1.0);
        Ok(row(
            cfg,
            index,
            vec![
                cfg.seed.to_string(),
                index.to_string(),
                d.to_string(),
                depth.to_string(),
                fmt(res.lambda),
                fmt(res.trace_complement),
                fmt(w.rhs),
                fmt(w.slack()),
                fmt(rf.rhs),
                fmt(rf.slack()),
                fmt(res.corner_max_eig),
                pass.to_string(),
                note,
            ],
            pass,
            vec![("weak11", w.ratio()), ("refined", rf.ratio())],
        ))
    };
    vec![go().unwrap_or_else(|e| error_row(cfg, index, vec![cfg.seed.to_string(), index.to_string(), d.to_string()], &e))]
}

fn random_two_param<G: Rng>(cfg: &ExperimentConfig, rng: &mut G) -> Result<TwoParamFiltration<f64>> {
    let (d1, d2) = (cfg.dims[0], cfg.dims[1]);
    let make = |d: usize, rng: &mut G| match cfg.filtration {
        FiltrationKind::Dyadic => Filtration::dyadic_commutative(d),
        kind => random_filtration(d, d.trailing_zeros() as usize + 1, kind, rng),
    };
    let left = make(d1, rng)?;
    let right = make(d2, rng)?;
    TwoParamFiltration::new(left, right)
}

/// Strong-maximal instances are rescaled to `τ(f) = λ e^{-s}` with `s` uniform on this range,
/// so that `q(λ)` is neither `0` nor `1` on most of the corpus.
pub const STRONG_TRACE_LEVEL: (f64, f64) = (1.0, 4.0);

fn run_strong(cfg: &ExperimentConfig, index: u64) -> Vec<ReportRow> {
    let mut rng = instance_rng(cfg.seed, index);
    let (d1, d2) = (cfg.dims[0], cfg.dims[1]);
    let eps = match &cfg.epsilon_grid {
        Some(g) => g[rng.random_range(0..g.len())],
        None => cfg.epsilon.unwrap_or(0.5),
    };
    let lambda = cfg.lambdas(&mut rng, (6, 10));
    let level = rng.random_range(STRONG_TRACE_LEVEL.0..STRONG_TRACE_LEVEL.1);
    // λ is rounded down to the e-grid the construction lives on.
    let r = lambda.ln().floor().max(1.0);
    let note = if (lambda.ln() - r).abs() > 1e-9 { format!("lambda {lambda} rounded to e^{r}") } else { String::new() };
    let lambda = r.exp();
    let mut go = || -> Result<ReportRow> {
        let tp = random_two_param(cfg, &mut rng)?;
        let f = random_positive(d1 * d2, &mut rng, cfg.filtration != FiltrationKind::Random);
        let f = &f * (lambda * (-level).exp() / f.trace());
        let cert = strong_q(&f, lambda, eps, &tp)?;
        let rep = verify_theorem_b(&cert, &f, &tp);
        let pass = rep.is_ok();
        let rep = rep?;
        let inter_slack = cert.intermediate_rhs - cert.trace_complement;
        Ok(row(
            cfg,
            index,
            vec![
                cfg.seed.to_string(),
                index.to_string(),
                d1.to_string(),
                d2.to_string(),
                fmt(eps),
                cert.r.to_string(),
                cert.trivial.to_string(),
                fmt(rep.measured_c),
                fmt(rep.bound_c),
                fmt(cert.trace_complement),
                fmt(cert.orlicz_rhs),
                fmt(cert.measured_trace_ratio),
                fmt(cert.intermediate_rhs),
                fmt(if cert.trivial { 0.0 } else { inter_slack }),
                pass.to_string(),
                note.clone(),
            ],
            pass,
            vec![("measured_c", rep.measured_c), ("trace_ratio", rep.trace_ratio)],
        ))
    };
    vec![go().unwrap_or_else(|e| error_row(cfg, index, vec![cfg.seed.to_string(), index.to_string(), d1.to_string(), d2.to_string()], &e))]
}

fn jmz_row(cfg: &ExperimentConfig, index: u64, d1: usize, d2: usize, cert: crate::jmz::JmzCertificate, reference: f64) -> ReportRow {
    let slack = cfg.tol("certificate", 1e-7);
    let bound_slack = cert.bound - reference;
    let contraction = cert.majorant_norm - cert.f_of_g_norm;
    let pass = bound_slack >= -slack && cert.domination_residual >= -slack && contraction >= -slack;
    row(
        cfg,
        index,
        vec![
            cfg.seed.to_string(),
            index.to_string(),
            d1.to_string(),
            d2.to_string(),
            fmt(cert.bound),
            fmt(reference),
            fmt(bound_slack),
            fmt(cert.majorant_norm),
            fmt(cert.orlicz_norm),
            fmt(cert.instance_ratio),
            fmt(cert.domination_residual),
            fmt(contraction),
            pass.to_string(),
            String::new(),
        ],
        pass,
        vec![("instance_ratio", cert.instance_ratio)],
    )
}

fn run_jmz(cfg: &ExperimentConfig, index: u64) -> Vec<ReportRow> {
    let mut rng = instance_rng(cfg.seed, index);
    let (d1, d2) = (cfg.dims[0], cfg.dims[1]);
    let alpha = cfg.phi_alpha.unwrap_or(1.0);
    let mut go = || -> Result<ReportRow> {
        let mut vals = log_uniform_spectrum(d1 * d2, &mut rng);
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        vals.iter_mut().for_each(|v| *v /= mean);
        let f = Hermitian::from_real_diagonal(&vals);
        let tp = TwoParamFiltration::new(Filtration::dyadic_commutative(d1)?, Filtration::dyadic_commutative(d2)?)?;
        let phi = OrliczFunction::log_power(alpha)?;
        let cert = theorem_a_certificate(&f, &Family::Martingale(tp.left_lift().clone()), &Family::Martingale(tp.right_lift().clone()), &phi)?;
        let (l, r) = tp.shape();
        let (_, tail) = two_param_commutative_oracle(&vals, d1, d2, l, r)?;
        let reference = tail.iter().sum::<f64>() / tail.len() as f64;
        Ok(jmz_row(cfg, index, d1, d2, cert, reference))
    };
    vec![go().unwrap_or_else(|e| error_row(cfg, index, vec![cfg.seed.to_string(), index.to_string()], &e))]
}

fn run_ergodic(cfg: &ExperimentConfig, index: u64) -> Vec<ReportRow> {
    let mut rng = instance_rng(cfg.seed, index);
    let (d1, d2) = (cfg.dims[0], cfg.dims[1]);
    let alpha = cfg.phi_alpha.unwrap_or(1.0);
    let mut go = || -> Result<ReportRow> {
        let t = MarkovChannel::random_mixture(d1, 2, true, &mut rng)?.tensor_lift(Side::Left, d2);
        let right = random_filtration(d2, d2.trailing_zeros() as usize + 1, FiltrationKind::Random, &mut rng)?;
        let f = random_positive(d1 * d2, &mut rng, false);
        let f = &f * (1.0 / f.trace());
        let b = Family::Martingale(right.tensor_lift(Side::Right, d1)?);
        let a = Family::ErgodicMeans { channel: t.clone(), count: 8 };
        let cert = theorem_a_certificate(&f, &a, &b, &OrliczFunction::log_power(alpha)?)?;
        // F(g) dominates the limit of every composed entry.
        let reference = b
            .apply_all(&f)?
            .iter()
            .map(|x| a.limit(x).map(|y| y.trace()))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok(jmz_row(cfg, index, d1, d2, cert, reference))
    };
    vec![go().unwrap_or_else(|e| error_row(cfg, index, vec![cfg.seed.to_string(), index.to_string()], &e))]
}

fn run_limsup(cfg: &ExperimentConfig, index: u64) -> Vec<ReportRow> {
    let mut rng = instance_rng(cfg.seed, index);
    let d = cfg.dims[rng.random_range(0..cfg.dims.len())];
    let mut rows = Vec::new();
    let go = |rng: &mut ChaCha20Rng| -> Result<Vec<(f64, f64, f64)>> {
        let mut filt = random_filtration(d, rng.random_range(1..=3), FiltrationKind::Random, rng)?.levels().to_vec();
        filt.push(SubalgebraDescriptor::full(d)?);
        let filt = Filtration::new(filt)?;
        // Rescale so the barrier solver works on O(1) data.
        let f = random_positive(d, rng, false);
        let f = &f * (1.0 / f.spectral_norm());
        let mart = martingale(&f, &filt)?;
        let eps = [0.5 / d as f64, 0.25, 0.5];
        let mut out = Vec::new();
        for p in [1.0, 2.0] {
            let est = limsup_norm_estimate(&mart, p, &eps)?;
            out.push((p, est.upper, lp_norm(&f, p)?));
        }
        Ok(out)
    };
    match go(&mut rng) {
        Ok(vals) => {
            for (p, est, norm) in vals {
                let gap = est - norm;
                let pass = gap.abs() <= cfg.tol("limsup", 1e-4);
                rows.push(row(
                    cfg,
                    index,
                    vec![cfg.seed.to_string(), index.to_string(), d.to_string(), fmt(p), fmt(est), fmt(norm), fmt(gap), pass.to_string(), String::new()],
                    pass,
                    vec![("limsup_gap", gap.abs())],
                ));
            }
        }
        Err(e) => rows.push(error_row(cfg, index, vec![cfg.seed.to_string(), index.to_string(), d.to_string()], &e)),
    }
    rows
}

fn run_sigma(cfg: &ExperimentConfig) -> Vec<ReportRow> {
    let max_len = cfg.max_len.unwrap_or(10);
    match sigma_length_identity(max_len) {
        Ok(rep) => (0..=max_len)
            .map(|n| {
                let floor = 2f64.powi(n as i32) / 4.0;
                let s = rep.sigma_ball_counts[n] as f64;
                let pass = s >= floor;
                row(
                    cfg,
                    n as u64,
                    vec![
                        n.to_string(),
                        rep.ball_counts[n].to_string(),
                        rep.sigma_ball_counts[n].to_string(),
                        fmt(floor),
                        fmt(s - floor),
                        pass.to_string(),
                        String::new(),
                    ],
                    pass,
                    vec![("sigma_fraction", s / rep.ball_counts[n] as f64)],
                )
            })
            .collect(),
        Err(e) => vec![error_row(cfg, 0, Vec::new(), &e)],
    }
}

/// Random element supported on `Σ`: words with fixed exponent signs per generator.
pub fn random_sigma_element<G: Rng>(rng: &mut G, terms: usize, max_syllables: usize) -> FreeElement {
    let mut f = FreeElement::zero();
    for _ in 0..terms {
        let sa = if rng.random_bool(0.5) { 1 } else { -1 };
        let sb = if rng.random_bool(0.5) { 1 } else { -1 };
        let n = rng.random_range(0..=max_syllables);
        let mut g = if rng.random_bool(0.5) { Generator::A } else { Generator::B };
        let mut syl = Vec::with_capacity(n);
        for _ in 0..n {
            let e = rng.random_range(1..=3) * if g == Generator::A { sa } else { sb };
            syl.push((g, e));
            g = if g == Generator::A { Generator::B } else { Generator::A };
        }
        let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        f.add_term(FreeWord::from_syllables(&syl), c);
    }
    f
}

fn run_diagram(cfg: &ExperimentConfig, index: u64) -> Vec<ReportRow> {
    let mut rng = instance_rng(cfg.seed, index);
    let f = random_sigma_element(&mut rng, 6, 6);
    let theta = (rng.random::<f64>(), rng.random::<f64>());
    let trace_defect = (theta_twist(&f, theta).trace() - f.trace()).norm();
    let mut rows = Vec::new();
    for &t in cfg.t_values.as_deref().unwrap_or(&[0.1, 1.0]) {
        match diagram_check(&f, t) {
            Ok(table) => {
                for r in table {
                    let pass = r.in_sigma && trace_defect <= 1e-14;
                    rows.push(row(
                        cfg,
                        index,
                        vec![
                            cfg.seed.to_string(),
                            index.to_string(),
                            fmt(t),
                            r.word.to_string(),
                            r.length.to_string(),
                            r.n_a.to_string(),
                            r.n_b.to_string(),
                            r.in_sigma.to_string(),
                            fmt(r.gap()),
                            fmt(trace_defect),
                            pass.to_string(),
                            String::new(),
                        ],
                        pass,
                        vec![("multiplier_gap", r.gap().abs())],
                    ));
                }
            }
            Err(e) => rows.push(error_row(cfg, index, vec![cfg.seed.to_string(), index.to_string(), fmt(t)], &e)),
        }
    }
    rows
}

pub const STEIN_TRIPWIRE: f64 = 10.0;

fn run_stein(cfg: &ExperimentConfig, index: u64) -> Vec<ReportRow> {
    let mut rng = instance_rng(cfg.seed, index);
    let d = cfg.dims[rng.random_range(0..cfg.dims.len())];
    let mut go = || -> Result<ReportRow> {
        let depth = cfg.max_depth.unwrap_or(d.trailing_zeros() as usize + 1);
        let filt = random_filtration(d, depth, cfg.filtration, &mut rng)?;
        let f = random_positive(d, &mut rng, cfg.filtration != FiltrationKind::Random);
        let top = f.spectral_norm();
        let grid = geometric_grid(top * 1e-9, top, 160)?;
        let rep = stein_integral(&f, &filt, &grid)?;
        let pass = rep.ratio <= cfg.tol("stein_tripwire", STEIN_TRIPWIRE);
        Ok(row(
            cfg,
            index,
            vec![
                cfg.seed.to_string(),
                index.to_string(),
                d.to_string(),
                fmt(rep.integral),
                fmt(rep.orlicz_norm),
                fmt(rep.ratio),
                fmt(STEIN_TRIPWIRE),
                pass.to_string(),
                String::new(),
            ],
            pass,
            vec![("stein_ratio", rep.ratio)],
        ))
    };
    vec![go().unwrap_or_else(|e| error_row(cfg, index, vec![cfg.seed.to_string(), index.to_string(), d.to_string()], &e))]
}

/// `f_n(k) = n` for `k < ⌊d/n⌋`, `n = 1..=d`, as sparse diagonals.
pub fn remark23_sequence(d: usize) -> Vec<Vec<(usize, f64)>> {
    (1..=d).map(|n| (0..d / n).map(|k| (k, n as f64)).collect()).collect()
}

/// `(1/d) Σ_k max_{n > cut} f_n(k)`; the largest `n` with `k < ⌊d/n⌋` is `⌊d/(k+1)⌋`.
pub fn remark23_exact(d: usize, cut: usize) -> f64 {
    (0..d).map(|k| d / (k + 1)).filter(|&n| n > cut).map(|n| n as f64).sum::<f64>() / d as f64
}

fn run_remark23(cfg: &ExperimentConfig) -> Vec<ReportRow> {
    let cut = cfg.cut.unwrap_or(10);
    let mut rows = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    let mut dims = cfg.dims.clone();
    dims.sort_unstable();
    for (i, &d) in dims.iter().enumerate() {
        let seq = remark23_sequence(d);
        match sup_norm_sparse_diagonal(d, &seq[cut.min(d)..], 1.0) {
            Ok((_, v)) => {
                let exact = remark23_exact(d, cut);
                let diff = (v - exact).abs();
                let pass = diff <= cfg.tol("remark23", 1e-12) && v > prev;
                prev = v;
                rows.push(row(
                    cfg,
                    i as u64,
                    vec![d.to_string(), cut.to_string(), fmt(v), fmt(exact), fmt(diff), fmt((d as f64 / cut as f64).ln()), pass.to_string(), String::new()],
                    pass,
                    vec![("remark23_diff", diff)],
                ));
            }
            Err(e) => rows.push(error_row(cfg, i as u64, vec![d.to_string(), cut.to_string()], &e)),
        }
    }
    rows
}

/// Writes every reduced word of length ≤ `max_len` with its length gap `|ω| − |n_a| − |n_b|`;
/// returns the number of words where `gap = 0` and `ω ∈ Σ` disagree.
pub fn write_word_table(max_len: usize, path: &Path) -> Result<usize> {
    if max_len > crate::free_group::MAX_ENUMERATION_LEN {
        return Err(Error::Config("max_len exceeds the enumeration bound".into()));
    }
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["word", "length", "n_a", "n_b", "in_sigma", "length_gap"])?;
    let mut bad = 0;
    for word in crate::free_group::reduced_words(max_len) {
        let (a, b) = word.quotient_counts();
        let gap = word.length() as i64 - a.abs() - b.abs();
        if (gap == 0) != word.in_sigma() || gap < 0 {
            bad += 1;
        }
        w.write_record([word.to_string(), word.length().to_string(), a.to_string(), b.to_string(), word.in_sigma().to_string(), gap.to_string()])?;
    }
    w.flush()?;
    Ok(bad)
}

/// Evaluates the corpus without writing anything; rows are in index order.
pub fn evaluate(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    cfg.validate()?;
    let n = cfg.corpus_size as u64;
    let per = |f: fn(&ExperimentConfig, u64) -> Vec<ReportRow>| -> Vec<ReportRow> {
        (0..n).into_par_iter().map(|i| f(cfg, i)).collect::<Vec<_>>().into_iter().flatten().collect()
    };
    Ok(match cfg.experiment {
        Experiment::Cuculescu => per(run_cuculescu),
        Experiment::StrongMaximal => per(run_strong),
        Experiment::JmzTensorMartingale => per(run_jmz),
        Experiment::ErgodicTensor => per(run_ergodic),
        Experiment::Limsup => per(run_limsup),
        Experiment::FreegroupSigma => run_sigma(cfg),
        Experiment::FreegroupDiagram => per(run_diagram),
        Experiment::SteinIntegral => per(run_stein),
        Experiment::Remark23Divergence => run_remark23(cfg),
    })
}

pub fn summarize(cfg: &ExperimentConfig, rows: &[ReportRow]) -> Summary {
    let mut max_ratios: BTreeMap<String, f64> = BTreeMap::new();
    let mut failing = Vec::new();
    for r in rows {
        for &(k, v) in &r.ratios {
            let e = max_ratios.entry(k.to_string()).or_insert(f64::NEG_INFINITY);
            if v > *e {
                *e = v;
            }
        }
        if !r.pass {
            let fi = FailingInstance { seed: r.seed, index: r.index };
            if !failing.contains(&fi) {
                failing.push(fi);
            }
        }
    }
    let pass_count = rows.iter().filter(|r| r.pass).count();
    Summary {
        schema_version: SCHEMA_VERSION,
        experiment: cfg.experiment,
        rows: rows.len(),
        pass_count,
        fail_count: rows.len() - pass_count,
        failing,
        max_ratios,
    }
}

pub fn write_csv(path: &Path, experiment: Experiment, rows: &[ReportRow]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(experiment.header())?;
    for r in rows {
        w.write_record(&r.cells)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the experiment, writing the CSV to `cfg.output` and the summary next to it (`.summary.json`).
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let rows = evaluate(cfg)?;
    let summary = summarize(cfg, &rows);
    write_csv(&cfg.output, cfg.experiment, &rows)?;
    let summary_path = cfg.output.with_extension("summary.json");
    fs::write(&summary_path, serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(RunOutcome { summary, csv_path: cfg.output.clone(), summary_path })
}
