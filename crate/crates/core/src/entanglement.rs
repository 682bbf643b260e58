//! Two-mode entanglement and the entanglement degradation of a channel.
//!
//! Logarithms are base 2 throughout.

use std::fmt;

use nalgebra::{DMatrix, Matrix2};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::channels::{is_entanglement_breaking, GaussianChannel};
use crate::error::{Error, Result};
use crate::matrix;
use crate::symplectic::{tmsv_covariance_with_cap, CovarianceMatrix, DEFAULT_R_CAP};

/// Base of every logarithm reported by this crate.
pub const LOG_BASE: u32 = 2;

/// A nonnegative quantity that may be `+inf`; serialized as a number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    Infinite,
}

impl ExtendedReal {
    pub fn from_f64(v: f64) -> Self {
        if v == f64::INFINITY {
            ExtendedReal::Infinite
        } else {
            ExtendedReal::Finite(v)
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtendedReal::Finite(v) => v,
            ExtendedReal::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtendedReal::Infinite)
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Finite(v) => s.serialize_f64(*v),
            ExtendedReal::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(ExtendedReal::Finite(v)),
            Raw::Str(s) if s == "inf" => Ok(ExtendedReal::Infinite),
            Raw::Str(s) => Err(de::Error::custom(format!("expected a number or \"inf\", got {s:?}"))),
        }
    }
}

/// `gamma = [[A, B], [B^T, C]]` for a two-mode state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeBlocks {
    pub a: Matrix2<f64>,
    pub b: Matrix2<f64>,
    pub c: Matrix2<f64>,
}

impl TwoModeBlocks {
    pub fn from_matrix(gamma: &DMatrix<f64>) -> Result<Self> {
        let n = matrix::modes_of(gamma)?;
        if n != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: n,
            });
        }
        Ok(TwoModeBlocks {
            a: matrix::mode_block(gamma, 0, 0),
            b: matrix::mode_block(gamma, 0, 1),
            c: matrix::mode_block(gamma, 1, 1),
        })
    }

    pub fn assemble(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(4, 4);
        matrix::set_mode_block(&mut g, 0, 0, &self.a);
        matrix::set_mode_block(&mut g, 0, 1, &self.b);
        matrix::set_mode_block(&mut g, 1, 0, &self.b.transpose());
        matrix::set_mode_block(&mut g, 1, 1, &self.c);
        g
    }

    /// `det A + det C - 2 det B`, the symplectic invariant of the partial transpose.
    pub fn delta_tilde(&self) -> f64 {
        self.a.determinant() + self.c.determinant() - 2.0 * self.b.determinant()
    }

    /// `det gamma` through a Schur complement on the better-conditioned
    /// diagonal block. Large, nearly cancelling entries of strongly squeezed
    /// states stay at the scale of the blocks instead of their squares.
    pub fn determinant(&self) -> f64 {
        let (da, dc) = (self.a.determinant(), self.c.determinant());
        if da.abs() >= dc.abs() {
            if let Some(ai) = self.a.try_inverse() {
                return da * (self.c - self.b.transpose() * ai * self.b).determinant();
            }
        } else if let Some(ci) = self.c.try_inverse() {
            return dc * (self.a - self.b * ci * self.b.transpose()).determinant();
        }
        self.assemble().determinant()
    }
}

/// Momentum flip on mode 2: `P gamma P` with `P = diag(1, 1, 1, -1)`.
pub fn partial_transpose(gamma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = matrix::modes_of(gamma)?;
    if n != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: n,
        });
    }
    let mut out = gamma.clone();
    for k in 0..4 {
        out[(3, k)] = -out[(3, k)];
        out[(k, 3)] = -out[(k, 3)];
    }
    Ok(out)
}

/// Squared smallest symplectic eigenvalue of the partial transpose of a
/// two-mode covariance matrix, from `2 nu^2 = D - sqrt(D^2 - 4 det gamma)`
/// with `D = det A + det C - 2 det B`. Evaluated in the cancellation-free
/// form `nu^2 = 2 det gamma / (D + sqrt(D^2 - 4 det gamma))`.
pub fn nu_minus_squared_of(gamma: &DMatrix<f64>) -> Result<f64> {
    matrix::check_finite(gamma, "two-mode covariance matrix")?;
    let blocks = TwoModeBlocks::from_matrix(gamma)?;
    let asym = matrix::asymmetry(gamma);
    if asym > 1e-12 * matrix::max_abs(gamma).max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let delta = blocks.delta_tilde();
    let det = blocks.determinant();
    let disc = delta * delta - 4.0 * det;
    if disc < -1e-9 * (delta * delta).max(1.0) {
        return Err(Error::Numerical(format!(
            "negative discriminant {disc:e} in the partial-transpose invariant"
        )));
    }
    let root = disc.max(0.0).sqrt();
    let denom = delta + root;
    let nu2 = if denom > 0.0 { 2.0 * det / denom } else { 0.5 * delta };
    Ok(nu2.max(0.0))
}

pub fn nu_minus_squared(gamma: &CovarianceMatrix) -> Result<f64> {
    nu_minus_squared_of(gamma.matrix())
}

/// Smallest symplectic eigenvalue of the partially transposed state.
pub fn nu_minus(gamma: &CovarianceMatrix) -> Result<f64> {
    Ok(nu_minus_squared(gamma)?.sqrt())
}

/// `max(0, -log2 nu_minus)`.
pub fn log_negativity(gamma: &CovarianceMatrix) -> Result<f64> {
    Ok(log_negativity_from_nu_sq(nu_minus_squared(gamma)?).to_f64())
}

fn log_negativity_from_nu_sq(nu2: f64) -> ExtendedReal {
    if nu2 <= 0.0 {
        ExtendedReal::Infinite
    } else {
        ExtendedReal::Finite((-0.5 * nu2.log2()).max(0.0))
    }
}

/// The entanglement degradation `D[T]` and derived quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradationResult {
    pub d: f64,
    /// `det N / (1 + det M)^2` before clipping; `+inf` at `det M = -1`.
    pub nu_minus_squared: f64,
    /// `-1/2 log2 D`, infinite iff `D = 0`.
    pub log_negativity: ExtendedReal,
    pub entanglement_breaking: bool,
}

impl DegradationResult {
    /// Upper bound on the quantum capacity, `-1/2 log2 D`.
    pub fn capacity_upper_bound(&self) -> ExtendedReal {
        self.log_negativity
    }
}

#[derive(Serialize, Deserialize)]
struct DegradationFile {
    #[serde(rename = "D")]
    d: f64,
    nu_minus_sq: ExtendedReal,
    log_negativity: ExtendedReal,
    entanglement_breaking: bool,
    log_base: u32,
}

impl Serialize for DegradationResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DegradationFile {
            d: self.d,
            nu_minus_sq: ExtendedReal::from_f64(self.nu_minus_squared),
            log_negativity: self.log_negativity,
            entanglement_breaking: self.entanglement_breaking,
            log_base: LOG_BASE,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DegradationResult {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = DegradationFile::deserialize(d)?;
        if f.log_base != LOG_BASE {
            return Err(de::Error::custom(format!("unsupported log base {}", f.log_base)));
        }
        Ok(DegradationResult {
            d: f.d,
            nu_minus_squared: f.nu_minus_sq.to_f64(),
            log_negativity: f.log_negativity,
            entanglement_breaking: f.entanglement_breaking,
        })
    }
}

fn ensure_valid(channel: &GaussianChannel) -> Result<()> {
    let report = channel.report();
    if report.is_valid() {
        Ok(())
    } else {
        Err(Error::InvalidChannel(format!("{report:?}")))
    }
}

/// `D[T] = min(det N / (1 + det M)^2, 1)`, with `D = 1` whenever `det M <= 0`.
pub fn entanglement_degradation(channel: &GaussianChannel) -> Result<DegradationResult> {
    ensure_valid(channel)?;
    let det_m = channel.det_m();
    let det_n = channel.det_n().max(0.0);
    let denom = (1.0 + det_m).powi(2);
    let nu2 = if denom > 0.0 { det_n / denom } else { f64::INFINITY };
    let d = if det_m <= 0.0 { 1.0 } else { nu2.min(1.0) };
    let log_negativity = if d <= 0.0 {
        ExtendedReal::Infinite
    } else {
        ExtendedReal::Finite((-0.5 * d.log2()).max(0.0))
    };
    Ok(DegradationResult {
        d,
        nu_minus_squared: nu2,
        log_negativity,
        entanglement_breaking: is_entanglement_breaking(channel),
    })
}

/// `nu_minus^2` of the channel's Choi state at finite squeezing `r`.
pub fn finite_r_degradation(channel: &GaussianChannel, r: f64) -> Result<f64> {
    finite_r_degradation_with_cap(channel, r, DEFAULT_R_CAP)
}

pub fn finite_r_degradation_with_cap(channel: &GaussianChannel, r: f64, r_cap: f64) -> Result<f64> {
    ensure_valid(channel)?;
    let choi = channel.apply(&tmsv_covariance_with_cap(r, r_cap)?, 1)?;
    nu_minus_squared(&choi)
}

/// `min(1, nu_minus^2)` of a two-mode Choi-type state.
pub fn degradation_from_choi(chi: &CovarianceMatrix) -> Result<f64> {
    if !chi.is_physical() {
        return Err(Error::Unphysical {
            min_eigenvalue: chi.min_physical_eigenvalue(),
        });
    }
    Ok(nu_minus_squared(chi)?.min(1.0))
}

/// `-1/2 log2 D[T]`: infinite for `D = 0`, zero for `D = 1`.
pub fn capacity_upper_bound(channel: &GaussianChannel) -> Result<ExtendedReal> {
    Ok(entanglement_degradation(channel)?.capacity_upper_bound())
}
