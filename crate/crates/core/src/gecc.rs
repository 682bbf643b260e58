//! Gaussian error-correcting codes: `n - 1` vacuum ancillas, an encoding
//! symplectic, `n` parallel uses of a channel, and a decoding symplectic.
//!
//! The signal enters and leaves on mode 0; the decoder can absorb any mode
//! permutation, so this loses no generality. Discarded decoder outputs are
//! traced out.

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::channels::GaussianChannel;
use crate::entanglement::entanglement_degradation;
use crate::error::{Error, Result};
use crate::matrix;
use crate::symplectic::SymplecticMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CodeFile", into = "CodeFile")]
pub struct GECCode {
    n: usize,
    encoder: SymplecticMatrix,
    decoder: SymplecticMatrix,
}

#[derive(Serialize, Deserialize)]
struct CodeFile {
    n: usize,
    #[serde(rename = "S_E")]
    s_e: Vec<Vec<f64>>,
    #[serde(rename = "S_D")]
    s_d: Vec<Vec<f64>>,
}

impl TryFrom<CodeFile> for GECCode {
    type Error = Error;

    fn try_from(f: CodeFile) -> Result<Self> {
        let e = SymplecticMatrix::new(matrix::from_rows(&f.s_e)?)?;
        let d = SymplecticMatrix::new(matrix::from_rows(&f.s_d)?)?;
        let code = GECCode::new(e, d)?;
        if code.n != f.n {
            return Err(Error::DimensionMismatch {
                expected: f.n,
                found: code.n,
            });
        }
        Ok(code)
    }
}

impl From<GECCode> for CodeFile {
    fn from(c: GECCode) -> Self {
        CodeFile {
            n: c.n,
            s_e: matrix::to_rows(c.encoder.matrix()),
            s_d: matrix::to_rows(c.decoder.matrix()),
        }
    }
}

impl GECCode {
    pub fn new(encoder: SymplecticMatrix, decoder: SymplecticMatrix) -> Result<Self> {
        if encoder.n_modes() != decoder.n_modes() {
            return Err(Error::DimensionMismatch {
                expected: encoder.n_modes(),
                found: decoder.n_modes(),
            });
        }
        Ok(GECCode {
            n: encoder.n_modes(),
            encoder,
            decoder,
        })
    }

    /// Encoder and decoder both the identity.
    pub fn trivial(n: usize) -> Result<Self> {
        Self::new(SymplecticMatrix::identity(n)?, SymplecticMatrix::identity(n)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn encoder(&self) -> &SymplecticMatrix {
        &self.encoder
    }

    pub fn decoder(&self) -> &SymplecticMatrix {
        &self.decoder
    }

    /// Effective single-mode channel `(M_GC, N_GC)` of this code around `channel`.
    pub fn effective_channel(&self, channel: &GaussianChannel) -> Result<GaussianChannel> {
        effective_channel(self, channel)
    }
}

fn repeat_block(b: &Matrix2<f64>, n: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        matrix::set_mode_block(&mut out, k, k, b);
    }
    out
}

/// Unvalidated `(M_GC, N_GC)`.
///
/// With `A = S_D (M (+) ... (+) M) S_E` and `B = S_D (N (+) ... (+) N) S_D^T`,
/// `M_GC` is the signal-signal block of `A`, and `N_GC` is the signal block
/// of `A_a A_a^T + B` where `A_a` are the columns of `A` fed by the vacuum
/// ancillas.
pub fn effective_matrices(code: &GECCode, channel: &GaussianChannel) -> (Matrix2<f64>, Matrix2<f64>) {
    let n = code.n;
    let d = code.decoder.matrix();
    let a = d * repeat_block(channel.m(), n) * code.encoder.matrix();
    let noise = d * repeat_block(channel.n(), n) * d.transpose();
    let top = a.rows(0, 2);
    let m_gc = Matrix2::new(top[(0, 0)], top[(0, 1)], top[(1, 0)], top[(1, 1)]);
    let mut n_gc = Matrix2::new(noise[(0, 0)], noise[(0, 1)], noise[(1, 0)], noise[(1, 1)]);
    if n > 1 {
        let anc = top.columns(2, 2 * (n - 1));
        let extra = anc * anc.transpose();
        n_gc += Matrix2::new(extra[(0, 0)], extra[(0, 1)], extra[(1, 0)], extra[(1, 1)]);
    }
    (m_gc, (n_gc + n_gc.transpose()) * 0.5)
}

pub fn effective_channel(code: &GECCode, channel: &GaussianChannel) -> Result<GaussianChannel> {
    let (m, n) = effective_matrices(code, channel);
    GaussianChannel::new(m, n)
}

/// `D[T_GC]` for the code's effective channel.
pub fn degradation_of_code(code: &GECCode, channel: &GaussianChannel) -> Result<f64> {
    Ok(entanglement_degradation(&effective_channel(code, channel)?)?.d)
}

/// The `n`-fold parallel channel on the full `2n x 2n` space, for
/// cross-checks that propagate the whole state.
pub fn parallel_uses(channel: &GaussianChannel, n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    (repeat_block(channel.m(), n), repeat_block(channel.n(), n))
}
