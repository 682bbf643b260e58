//! Derivative-free search over Gaussian error-correcting codes for one that
//! lowers the entanglement degradation of a channel.
//!
//! No such code exists, so every run must end with `violated == false`;
//! the search is a falsification harness.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channels::GaussianChannel;
use crate::entanglement::entanglement_degradation;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gecc::{effective_channel, GECCode};
use crate::matrix;
use crate::optimize::NelderMead;
use crate::symplectic::{passive_symplectic, squeezing_layer, SymplecticMatrix};

pub const DEFAULT_R_MAX: f64 = 3.0;
pub const DEFAULT_N_MAX: usize = 4;
/// `best_D < baseline_D - VIOLATION_TOL` counts as a counterexample.
pub const VIOLATION_TOL: f64 = 1e-6;
/// Local refinements launched from the best random starts.
pub const REFINED_STARTS: usize = 5;

/// Parameters per symplectic: `n(n-1)/2` beam-splitter angles and `n`
/// phases for each of the two passive factors, plus `n` squeezings.
pub fn params_per_symplectic(n: usize) -> usize {
    n * (n - 1) + 3 * n
}

/// Bloch-Messiah parameters of an encoder/decoder pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeParameterization {
    pub n: usize,
    pub r_max: f64,
    /// Layout: angles, phases (input passive), squeezings, angles, phases (output passive).
    pub encoder_params: Vec<f64>,
    pub decoder_params: Vec<f64>,
}

impl CodeParameterization {
    pub fn zeros(n: usize, r_max: f64) -> Self {
        let k = params_per_symplectic(n);
        CodeParameterization {
            n,
            r_max,
            encoder_params: vec![0.0; k],
            decoder_params: vec![0.0; k],
        }
    }

    /// Uniform draw: angles and phases in `[0, 2 pi)`, squeezings in `[-r_max, r_max]`.
    pub fn random<R: Rng>(n: usize, r_max: f64, rng: &mut R) -> Self {
        let mut p = Self::zeros(n, r_max);
        let squeeze = squeezing_range(n);
        for v in [&mut p.encoder_params, &mut p.decoder_params] {
            for (i, x) in v.iter_mut().enumerate() {
                *x = if squeeze.contains(&i) {
                    rng.random_range(-r_max..=r_max)
                } else {
                    rng.random_range(0.0..std::f64::consts::TAU)
                };
            }
        }
        p
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.encoder_params.iter().chain(&self.decoder_params).copied().collect()
    }

    pub fn from_flat(n: usize, r_max: f64, flat: &[f64]) -> Self {
        let k = params_per_symplectic(n);
        CodeParameterization {
            n,
            r_max,
            encoder_params: flat[..k].to_vec(),
            decoder_params: flat[k..2 * k].to_vec(),
        }
    }

    /// Copy with every squeezing entry clamped into `[-r_max, r_max]`.
    pub fn clamped(&self) -> Self {
        let mut p = self.clone();
        let squeeze = squeezing_range(self.n);
        for v in [&mut p.encoder_params, &mut p.decoder_params] {
            for x in &mut v[squeeze.clone()] {
                *x = x.clamp(-self.r_max, self.r_max);
            }
        }
        p
    }

    fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::ZeroModes);
        }
        let k = params_per_symplectic(self.n);
        for v in [&self.encoder_params, &self.decoder_params] {
            if v.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("code parameters"));
            }
            for &r in &v[squeezing_range(self.n)] {
                if r.abs() > self.r_max {
                    return Err(Error::OutOfRange {
                        name: "code squeezing",
                        value: r,
                        range: format!("[-{0}, {0}]", self.r_max),
                    });
                }
            }
        }
        Ok(())
    }
}

fn squeezing_range(n: usize) -> std::ops::Range<usize> {
    let passive = n * (n - 1) / 2 + n;
    passive..passive + n
}

/// `diag(e^{i phi}) * G_last * ... * G_first`, with `G` real Givens
/// rotations over mode pairs `(i, j)`, `i < j`, in lexicographic order.
fn passive_unitary(n: usize, angles: &[f64], phases: &[f64]) -> DMatrix<Complex<f64>> {
    let mut u = DMatrix::<Complex<f64>>::identity(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let (s, c) = angles[k].sin_cos();
            k += 1;
            // rows i and j mix
            for col in 0..n {
                let (ui, uj) = (u[(i, col)], u[(j, col)]);
                u[(i, col)] = ui * c - uj * s;
                u[(j, col)] = ui * s + uj * c;
            }
        }
    }
    for (row, &phi) in phases.iter().enumerate() {
        let z = Complex::from_polar(1.0, phi);
        for col in 0..n {
            u[(row, col)] *= z;
        }
    }
    u
}

fn realize_one(n: usize, p: &[f64]) -> Result<SymplecticMatrix> {
    let na = n * (n - 1) / 2;
    let (a1, rest) = p.split_at(na);
    let (ph1, rest) = rest.split_at(n);
    let (sq, rest) = rest.split_at(n);
    let (a2, ph2) = rest.split_at(na);
    let k_in = passive_symplectic(&passive_unitary(n, a1, ph1))?;
    let k_out = passive_symplectic(&passive_unitary(n, a2, ph2))?;
    k_out.compose(&squeezing_layer(sq))?.compose(&k_in)
}

/// Builds `(S_E, S_D)`; each is `K_out * Sq(r) * K_in`.
pub fn realize(params: &CodeParameterization) -> Result<GECCode> {
    params.check()?;
    let e = realize_one(params.n, &params.encoder_params)?;
    let d = realize_one(params.n, &params.decoder_params)?;
    GECCode::new(e, d)
}

/// `D[T_GC]` of the realized code.
pub fn objective(params: &CodeParameterization, channel: &GaussianChannel) -> Result<f64> {
    crate::gecc::degradation_of_code(&realize(params)?, channel)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMethod {
    Random,
    NelderMeadMultistart,
}

impl fmt::Display for SearchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchMethod::Random => "random",
            SearchMethod::NelderMeadMultistart => "nelder-mead-multistart",
        })
    }
}

impl FromStr for SearchMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(SearchMethod::Random),
            "nelder-mead-multistart" | "nelder-mead" => Ok(SearchMethod::NelderMeadMultistart),
            other => Err(Error::Parse(format!(
                "unknown method {other:?} (expected random or nelder-mead-multistart)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub n: usize,
    pub budget: usize,
    pub seed: u64,
    pub method: SearchMethod,
    pub r_max: f64,
    pub n_max: usize,
    pub execution: Execution,
}

impl SearchConfig {
    pub fn new(n: usize, budget: usize, seed: u64, method: SearchMethod) -> Self {
        SearchConfig {
            n,
            budget,
            seed,
            method,
            r_max: DEFAULT_R_MAX,
            n_max: DEFAULT_N_MAX,
            execution: Execution::default(),
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    fn check(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::InvalidSearch("budget must be at least 1".into()));
        }
        if self.n == 0 || self.n > self.n_max {
            return Err(Error::InvalidSearch(format!(
                "n = {} outside [1, {}]",
                self.n, self.n_max
            )));
        }
        if !(self.r_max > 0.0) || !self.r_max.is_finite() {
            return Err(Error::InvalidSearch(format!("r_max = {} must be positive", self.r_max)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_params: CodeParameterization,
    #[serde(rename = "best_D")]
    pub best_d: f64,
    #[serde(rename = "baseline_D")]
    pub baseline_d: f64,
    pub evaluations: usize,
    /// Evaluations whose effective channel could not be formed or validated.
    pub skipped: usize,
    pub seed: u64,
    pub method: SearchMethod,
    pub n: usize,
    pub violated: bool,
    /// `(M_GC, N_GC)` of the best code.
    #[serde(rename = "best_M_GC")]
    pub best_m_gc: [[f64; 2]; 2],
    #[serde(rename = "best_N_GC")]
    pub best_n_gc: [[f64; 2]; 2],
    #[serde(rename = "best_det_N_GC")]
    pub best_det_n_gc: f64,
}

impl SearchResult {
    pub fn skipped_fraction(&self) -> f64 {
        if self.evaluations == 0 {
            0.0
        } else {
            self.skipped as f64 / self.evaluations as f64
        }
    }
}

/// One scored candidate; `None` when the evaluation failed numerically.
#[derive(Debug, Clone)]
struct Scored {
    index: usize,
    params: CodeParameterization,
    value: Option<f64>,
}

fn score(params: CodeParameterization, channel: &GaussianChannel, index: usize) -> Scored {
    let value = objective(&params, channel).ok().filter(|v| v.is_finite());
    Scored { index, params, value }
}

/// Lower value wins, then lower start index.
fn better(a: &Scored, b: &Scored) -> bool {
    match (a.value, b.value) {
        (Some(x), Some(y)) => x < y || (x == y && a.index < b.index),
        (Some(_), None) => true,
        (None, Some(_)) => false,
        (None, None) => a.index < b.index,
    }
}

/// RNG stream for start `index`, independent of scheduling.
fn start_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Start 0 is the trivial code; the rest are uniform draws.
fn sample_starts(channel: &GaussianChannel, cfg: &SearchConfig, count: usize) -> Vec<Scored> {
    cfg.execution.map_indexed(count, |i| {
        let params = if i == 0 {
            CodeParameterization::zeros(cfg.n, cfg.r_max)
        } else {
            CodeParameterization::random(cfg.n, cfg.r_max, &mut start_rng(cfg.seed, i))
        };
        score(params, channel, i)
    })
}

struct LocalRun {
    best: Scored,
    evaluations: usize,
    skipped: usize,
}

fn refine(channel: &GaussianChannel, cfg: &SearchConfig, start: &Scored, budget: usize) -> LocalRun {
    let n = cfg.n;
    let r_max = cfg.r_max;
    let mut skipped = 0usize;
    let nm = NelderMead {
        step: 0.3,
        max_evaluations: budget,
        f_tol: 1e-14,
    };
    let found = nm.minimize(
        |x| {
            let p = CodeParameterization::from_flat(n, r_max, x).clamped();
            match objective(&p, channel) {
                Ok(v) if v.is_finite() => v,
                _ => {
                    skipped += 1;
                    f64::INFINITY
                }
            }
        },
        &start.params.flatten(),
    );
    let params = CodeParameterization::from_flat(n, r_max, &found.x).clamped();
    let value = found.value.is_finite().then_some(found.value);
    LocalRun {
        best: Scored {
            index: start.index,
            params,
            value,
        },
        evaluations: found.evaluations,
        skipped,
    }
}

/// Searches codes on `cfg.n` modes for the smallest `D[T_GC]`.
///
/// Deterministic in `(channel, cfg)` regardless of `cfg.execution`.
pub fn search(channel: &GaussianChannel, cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.check()?;
    let baseline_d = entanglement_degradation(channel)?.d;

    let (starts_budget, local_budget) = match cfg.method {
        SearchMethod::Random => (cfg.budget, 0),
        SearchMethod::NelderMeadMultistart => {
            let starts = (cfg.budget / 2).max(1);
            (starts, cfg.budget - starts)
        }
    };
    let starts = sample_starts(channel, cfg, starts_budget);
    let mut evaluations = starts.len();
    let mut skipped = starts.iter().filter(|s| s.value.is_none()).count();
    let mut best = starts
        .iter()
        .fold(None::<&Scored>, |acc, s| match acc {
            Some(b) if !better(s, b) => Some(b),
            _ => Some(s),
        })
        .expect("at least one start")
        .clone();

    if local_budget > 0 {
        let mut ranked: Vec<&Scored> = starts.iter().filter(|s| s.value.is_some()).collect();
        ranked.sort_by(|a, b| if better(a, b) { std::cmp::Ordering::Less } else { std::cmp::Ordering::Greater });
        ranked.truncate(REFINED_STARTS);
        if !ranked.is_empty() {
            let per_run = local_budget / ranked.len();
            let extra = local_budget % ranked.len();
            let runs = cfg.execution.map_indexed(ranked.len(), |k| {
                let b = per_run + usize::from(k < extra);
                refine(channel, cfg, ranked[k], b)
            });
            for run in runs {
                evaluations += run.evaluations;
                skipped += run.skipped;
                if better(&run.best, &best) {
                    best = run.best;
                }
            }
        }
    }

    let best_d = best
        .value
        .ok_or_else(|| Error::Numerical("every evaluation failed".into()))?;
    let eff = effective_channel(&realize(&best.params)?, channel)?;
    Ok(SearchResult {
        best_params: best.params,
        best_d,
        baseline_d,
        evaluations,
        skipped,
        seed: cfg.seed,
        method: cfg.method,
        n: cfg.n,
        violated: best_d < baseline_d - VIOLATION_TOL,
        best_m_gc: matrix::matrix2_to_rows(eff.m()),
        best_n_gc: matrix::matrix2_to_rows(eff.n()),
        best_det_n_gc: eff.det_n(),
    })
}

/// `(M_GC, N_GC)` of a search result's best code, for inspection.
pub fn best_effective(result: &SearchResult) -> (Matrix2<f64>, Matrix2<f64>) {
    (
        matrix::matrix2_from_rows(&result.best_m_gc),
        matrix::matrix2_from_rows(&result.best_n_gc),
    )
}
