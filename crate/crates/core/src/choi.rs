//! Finite-squeezing Choi states and covariance-level teleportation through them.
//!
//! Teleportation convention: the input and resource mode 1 meet on a 50/50
//! beam splitter whose ports carry `(r_in - r_a)/sqrt(2)` and
//! `(r_in + r_a)/sqrt(2)`. Port 1 is x-homodyned and port 2 p-homodyned,
//! giving `u = x_in - x_a` and `v = p_in + p_a`. Bob displaces resource
//! mode 2 by `G (u, v)`, where `G` is the resource's transfer matrix read
//! off its cross-covariance, `G = B^T diag(1, -1) / sinh(2r)`. A displacement
//! by `d` before a channel equals a displacement by `M d` after it, so this
//! is unit-gain feedforward at the channel input; for the identity channel
//! `G = I`. First moments are never formed: averaging over outcomes adds
//! `(K - K*) Gamma_mm (K - K*)^T` to the conditional covariance, with `K`
//! the feedforward gain and `K*` the conditional-mean gain.

use nalgebra::{DMatrix, Matrix2};
use serde::Serialize;

use crate::channels::{GaussianChannel, ValidityReport};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::matrix;
use crate::symplectic::{
    apply_symplectic, phase_shifter, squeezer, tensor, tmsv_covariance, tmsv_covariance_with_cap,
    CovarianceMatrix, SymplecticMatrix, DEFAULT_R_CAP,
};

/// Singular values of the measured block below this are treated as zero.
pub const PINV_CUTOFF: f64 = 1e-12;

/// `(1 (x) T)` applied to a two-mode squeezed vacuum of squeezing `r`.
/// Mode 0 is the untouched half, mode 1 the channel output.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiState {
    r: f64,
    gamma: CovarianceMatrix,
}

impl ChoiState {
    /// Wraps an arbitrary two-mode resource prepared at squeezing `r`.
    pub fn new(r: f64, gamma: CovarianceMatrix) -> Result<Self> {
        if gamma.n_modes() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: gamma.n_modes(),
            });
        }
        if !gamma.is_physical() {
            return Err(Error::Unphysical {
                min_eigenvalue: gamma.min_physical_eigenvalue(),
            });
        }
        Ok(ChoiState { r, gamma })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn gamma(&self) -> &CovarianceMatrix {
        &self.gamma
    }
}

pub fn choi_state(channel: &GaussianChannel, r: f64) -> Result<ChoiState> {
    choi_state_with_cap(channel, r, DEFAULT_R_CAP)
}

pub fn choi_state_with_cap(channel: &GaussianChannel, r: f64, r_cap: f64) -> Result<ChoiState> {
    let gamma = channel.apply(&tmsv_covariance_with_cap(r, r_cap)?, 1)?;
    Ok(ChoiState { r, gamma })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    X,
    P,
}

impl Quadrature {
    fn offset(self) -> usize {
        match self {
            Quadrature::X => 0,
            Quadrature::P => 1,
        }
    }
}

/// Conditional covariance of the remaining modes after homodyning one
/// quadrature of `mode`. The measured mode is removed.
pub fn homodyne_condition(gamma: &CovarianceMatrix, mode: usize, quadrature: Quadrature) -> Result<CovarianceMatrix> {
    let n = gamma.n_modes();
    if mode >= n {
        return Err(Error::ModeOutOfRange { index: mode, n_modes: n });
    }
    if n == 1 {
        return Err(Error::EmptySelection);
    }
    let g = gamma.matrix();
    let q = 2 * mode + quadrature.offset();
    let kept: Vec<usize> = (0..2 * n).filter(|&i| i / 2 != mode).collect();
    let var = g[(q, q)];
    let mut out = DMatrix::from_fn(kept.len(), kept.len(), |i, j| g[(kept[i], kept[j])]);
    if var.abs() > PINV_CUTOFF {
        let cross: Vec<f64> = kept.iter().map(|&i| g[(i, q)]).collect();
        for i in 0..kept.len() {
            for j in 0..kept.len() {
                out[(i, j)] -= cross[i] * cross[j] / var;
            }
        }
    }
    Ok(CovarianceMatrix::from_trusted(out))
}

/// Effective channel induced by teleporting through a resource state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TeleportationChannel {
    #[serde(rename = "M_tel")]
    pub m_tel: [[f64; 2]; 2],
    #[serde(rename = "N_tel")]
    pub n_tel: [[f64; 2]; 2],
}

impl TeleportationChannel {
    pub fn m(&self) -> Matrix2<f64> {
        matrix::matrix2_from_rows(&self.m_tel)
    }

    pub fn n(&self) -> Matrix2<f64> {
        matrix::matrix2_from_rows(&self.n_tel)
    }

    pub fn report(&self) -> ValidityReport {
        crate::channels::validate(&self.m(), &self.n())
    }

    pub fn to_channel(&self) -> Result<GaussianChannel> {
        GaussianChannel::new(self.m(), self.n())
    }
}

/// Feedforward gain matched to the resource, `B^T diag(1, -1) / sinh(2r)`.
fn feedforward_gain(resource: &ChoiState) -> Result<Matrix2<f64>> {
    let sh = (2.0 * resource.r).sinh();
    if !(sh.abs() > 0.0) || !sh.is_finite() {
        return Err(Error::OutOfRange {
            name: "resource squeezing r",
            value: resource.r,
            range: "nonzero and finite".into(),
        });
    }
    let b = resource.gamma.block(0, 1);
    let z = Matrix2::new(1.0, 0.0, 0.0, -1.0);
    Ok(b.transpose() * z / sh)
}

/// Teleports the last mode of `state` through `resource`; the output has the
/// same mode count with the last mode replaced by Bob's mode.
pub fn teleport_last_mode(state: &CovarianceMatrix, resource: &ChoiState) -> Result<CovarianceMatrix> {
    let gain = feedforward_gain(resource)?;
    let k = state.n_modes();
    let input = k - 1;
    let (a, b) = (k, k + 1);
    let joint = tensor(state, &resource.gamma);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut bs = DMatrix::identity(2 * (k + 2), 2 * (k + 2));
    for q in 0..2 {
        let (i, j) = (2 * input + q, 2 * a + q);
        bs[(i, i)] = h;
        bs[(i, j)] = -h;
        bs[(j, i)] = h;
        bs[(j, j)] = h;
    }
    let mixed = apply_symplectic(&SymplecticMatrix::new(bs)?, &joint)?;
    let g = mixed.matrix();

    // measured quadratures: x of port 1, p of port 2
    let meas = [2 * input, 2 * a + 1];
    let rest: Vec<usize> = (0..2 * (k + 2)).filter(|&i| i / 2 != input && i / 2 != a).collect();
    let gamma_mm = Matrix2::new(g[(meas[0], meas[0])], g[(meas[0], meas[1])], g[(meas[1], meas[0])], g[(meas[1], meas[1])]);
    let gamma_rm = DMatrix::from_fn(rest.len(), 2, |i, j| g[(rest[i], meas[j])]);

    let after_x = homodyne_condition(&mixed, input, Quadrature::X)?;
    // mode `a` shifted down by one after removing `input`
    let conditional = homodyne_condition(&after_x, a - 1, Quadrature::P)?;

    let pinv = gamma_mm
        .pseudo_inverse(PINV_CUTOFF)
        .map_err(|e| Error::Numerical(e.to_string()))?;
    // Bob's displacement is G (u, v) = sqrt(2) G (q1, q2)
    let mut gain_full = DMatrix::zeros(rest.len(), 2);
    let b_row = rest.iter().position(|&i| i == 2 * b).expect("Bob's mode is kept");
    for i in 0..2 {
        for j in 0..2 {
            gain_full[(b_row + i, j)] = std::f64::consts::SQRT_2 * gain[(i, j)];
        }
    }
    let pinv_d = DMatrix::from_fn(2, 2, |i, j| pinv[(i, j)]);
    let gmm_d = DMatrix::from_fn(2, 2, |i, j| gamma_mm[(i, j)]);
    let mismatch = gain_full + &gamma_rm * pinv_d;
    let out = conditional.matrix() + &mismatch * gmm_d * mismatch.transpose();
    Ok(CovarianceMatrix::from_trusted(out))
}

/// Probe states `(reference, input)` used to read off `M_tel` and `N_tel`.
fn probe_states() -> Result<Vec<CovarianceMatrix>> {
    let base = tmsv_covariance(0.5)?;
    let id = SymplecticMatrix::identity(1)?;
    let local = |s: SymplecticMatrix| -> Result<CovarianceMatrix> { apply_symplectic(&id.direct_sum(&s), &base) };
    Ok(vec![
        base.clone(),
        local(squeezer(0.4)?)?,
        local(phase_shifter(0.7)?.compose(&squeezer(-0.3)?)?)?,
    ])
}

/// `(M_tel, N_tel)` of teleportation through `resource`.
///
/// Each probe keeps a reference mode entangled with the input, so the
/// output cross-covariance `X M^T` fixes `M` including its sign, which
/// single-mode probes cannot. `M` is the least-squares solution over all
/// probes and `N` the mean of `out - M A M^T`.
pub fn teleport_channel(resource: &ChoiState) -> Result<TeleportationChannel> {
    teleport_channel_with(resource, Execution::default())
}

pub fn teleport_channel_with(resource: &ChoiState, exec: Execution) -> Result<TeleportationChannel> {
    if !resource.gamma.is_physical() {
        return Err(Error::Unphysical {
            min_eigenvalue: resource.gamma.min_physical_eigenvalue(),
        });
    }
    let probes = probe_states()?;
    let outputs: Vec<Result<CovarianceMatrix>> = exec.map_slice(&probes, |p| teleport_last_mode(p, resource));
    let mut xtx = Matrix2::zeros();
    let mut xtb = Matrix2::zeros();
    let mut pairs = Vec::with_capacity(probes.len());
    for (probe, out) in probes.iter().zip(outputs) {
        let out = out?;
        let x = probe.block(0, 1);
        let bo = out.block(0, 1);
        xtx += x.transpose() * x;
        xtb += x.transpose() * bo;
        pairs.push((probe.block(1, 1), out.block(1, 1)));
    }
    let mt = xtx
        .try_inverse()
        .ok_or_else(|| Error::Numerical("probe cross-covariances are singular".into()))?
        * xtb;
    let m = mt.transpose();
    let mut n = Matrix2::zeros();
    for (a_in, a_out) in &pairs {
        n += a_out - m * a_in * m.transpose();
    }
    n /= pairs.len() as f64;
    n = (n + n.transpose()) * 0.5;
    Ok(TeleportationChannel {
        m_tel: matrix::matrix2_to_rows(&m),
        n_tel: matrix::matrix2_to_rows(&n),
    })
}

/// Gap between a channel and its teleportation through its own Choi state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma1Residual {
    pub r: f64,
    /// `max(m_residual, n_residual)`.
    pub residual: f64,
    pub m_residual: f64,
    pub n_residual: f64,
    pub teleported: TeleportationChannel,
}

pub fn lemma1_check(channel: &GaussianChannel, r: f64) -> Result<Lemma1Residual> {
    let tel = teleport_channel(&choi_state(channel, r)?)?;
    let m_residual = (tel.m() - channel.m()).abs().max();
    let n_residual = (tel.n() - channel.n()).abs().max();
    Ok(Lemma1Residual {
        r,
        residual: m_residual.max(n_residual),
        m_residual,
        n_residual,
        teleported: tel,
    })
}

/// Max elementwise deviation of `(M_tel, N_tel)` from `(M, N)`.
pub fn lemma1_residual(channel: &GaussianChannel, r: f64) -> Result<f64> {
    Ok(lemma1_check(channel, r)?.residual)
}

/// Direct linear-map form of [`teleport_last_mode`]:
/// `r_out = r_b + G (x_in - x_a, p_in + p_a)`, so `Cov(r_out) = L gamma L^T`.
#[cfg(test)]
pub(crate) fn teleport_last_mode_direct(state: &CovarianceMatrix, resource: &ChoiState) -> CovarianceMatrix {
    let gain = feedforward_gain(resource).unwrap();
    let k = state.n_modes();
    let joint = tensor(state, &resource.gamma);
    let dim = 2 * (k + 2);
    let (input, a, b) = (k - 1, k, k + 1);
    let mut l = DMatrix::zeros(2 * k, dim);
    for i in 0..2 * (k - 1) {
        l[(i, i)] = 1.0;
    }
    let o = 2 * (k - 1);
    for i in 0..2 {
        l[(o + i, 2 * b + i)] = 1.0;
        // u = x_in - x_a, v = p_in + p_a
        l[(o + i, 2 * input)] += gain[(i, 0)];
        l[(o + i, 2 * a)] -= gain[(i, 0)];
        l[(o + i, 2 * input + 1)] += gain[(i, 1)];
        l[(o + i, 2 * a + 1)] += gain[(i, 1)];
    }
    CovarianceMatrix::from_trusted(&l * joint.matrix() * l.transpose())
}
