//! Single-mode Gaussian channels `gamma -> M gamma M^T + N`.

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{self, matrix2_from_rows, matrix2_to_rows};
use crate::symplectic::{phase_shifter, squeezer_with_cap, CovarianceMatrix, SymplecticMatrix};

/// Slack on `det N >= (det M - 1)^2`, relative to `max(1, det N, (det M - 1)^2)`.
pub const CP_TOL: f64 = 1e-9;
/// Slack on the smallest eigenvalue of `N`.
pub const PSD_TOL: f64 = 1e-12;
/// Slack on the entanglement-breaking inequality `det N >= (1 + det M)^2`.
pub const EB_TOL: f64 = 1e-12;
/// Singular values below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-12;

/// A single-mode Gaussian channel given by its amplification matrix `M`
/// and added-noise matrix `N`, in vacuum units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelFile", into = "ChannelFile")]
pub struct GaussianChannel {
    m: Matrix2<f64>,
    n: Matrix2<f64>,
}

#[derive(Serialize, Deserialize)]
struct ChannelFile {
    #[serde(rename = "M")]
    m: [[f64; 2]; 2],
    #[serde(rename = "N")]
    n: [[f64; 2]; 2],
}

impl TryFrom<ChannelFile> for GaussianChannel {
    type Error = Error;

    fn try_from(f: ChannelFile) -> Result<Self> {
        GaussianChannel::new(matrix2_from_rows(&f.m), matrix2_from_rows(&f.n))
    }
}

impl From<GaussianChannel> for ChannelFile {
    fn from(c: GaussianChannel) -> Self {
        ChannelFile {
            m: matrix2_to_rows(&c.m),
            n: matrix2_to_rows(&c.n),
        }
    }
}

/// Outcome of [`validate`]; failures are carried, never raised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidityReport {
    pub finite: bool,
    pub n_symmetric: bool,
    /// Smallest eigenvalue of the symmetric part of `N`.
    pub n_min_eigenvalue: f64,
    pub n_psd: bool,
    /// `det N - (det M - 1)^2`.
    pub cp_margin: f64,
    pub cp: bool,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.finite && self.n_symmetric && self.n_psd && self.cp
    }

    fn describe(&self) -> String {
        let mut why = Vec::new();
        if !self.finite {
            why.push("non-finite entries".to_string());
        }
        if !self.n_symmetric {
            why.push("N is not symmetric".to_string());
        }
        if !self.n_psd {
            why.push(format!("N has eigenvalue {:e}", self.n_min_eigenvalue));
        }
        if !self.cp {
            why.push(format!(
                "complete positivity violated: det N - (det M - 1)^2 = {:e}",
                self.cp_margin
            ));
        }
        why.join("; ")
    }
}

pub fn validate(m: &Matrix2<f64>, n: &Matrix2<f64>) -> ValidityReport {
    let finite = m.iter().chain(n.iter()).all(|v| v.is_finite());
    let scale_n = n.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    let n_symmetric = (n[(0, 1)] - n[(1, 0)]).abs() <= 1e-12 * scale_n;
    let ns = (n + n.transpose()) * 0.5;
    let n_min_eigenvalue = if finite {
        ns.symmetric_eigenvalues().min()
    } else {
        f64::NAN
    };
    let n_psd = n_min_eigenvalue >= -PSD_TOL * scale_n;
    let det_m = m.determinant();
    let det_n = ns.determinant();
    let bound = (det_m - 1.0).powi(2);
    let cp_margin = det_n - bound;
    let cp = cp_margin >= -CP_TOL * det_n.abs().max(bound).max(1.0);
    ValidityReport {
        finite,
        n_symmetric,
        n_min_eigenvalue,
        n_psd,
        cp_margin,
        cp,
    }
}

impl GaussianChannel {
    /// Builds a channel, rejecting it unless [`validate`] passes.
    pub fn new(m: Matrix2<f64>, n: Matrix2<f64>) -> Result<Self> {
        let report = validate(&m, &n);
        if !report.is_valid() {
            return Err(Error::InvalidChannel(report.describe()));
        }
        Ok(GaussianChannel {
            m,
            n: (n + n.transpose()) * 0.5,
        })
    }

    pub fn identity() -> Self {
        GaussianChannel {
            m: Matrix2::identity(),
            n: Matrix2::zeros(),
        }
    }

    pub fn m(&self) -> &Matrix2<f64> {
        &self.m
    }

    pub fn n(&self) -> &Matrix2<f64> {
        &self.n
    }

    pub fn det_m(&self) -> f64 {
        self.m.determinant()
    }

    pub fn det_n(&self) -> f64 {
        self.n.determinant()
    }

    pub fn report(&self) -> ValidityReport {
        validate(&self.m, &self.n)
    }

    /// Channel applied to mode `mode` of `gamma`; other modes untouched.
    pub fn apply(&self, gamma: &CovarianceMatrix, mode: usize) -> Result<CovarianceMatrix> {
        apply(self, gamma, mode)
    }

    pub fn then(&self, second: &GaussianChannel) -> GaussianChannel {
        compose(second, self)
    }
}

pub fn apply(channel: &GaussianChannel, gamma: &CovarianceMatrix, mode: usize) -> Result<CovarianceMatrix> {
    let n_modes = gamma.n_modes();
    if mode >= n_modes {
        return Err(Error::ModeOutOfRange {
            index: mode,
            n_modes,
        });
    }
    let mut out = gamma.matrix().clone();
    for j in 0..n_modes {
        let b = matrix::mode_block(&out, mode, j);
        matrix::set_mode_block(&mut out, mode, j, &(channel.m * b));
    }
    for i in 0..n_modes {
        let b = matrix::mode_block(&out, i, mode);
        matrix::set_mode_block(&mut out, i, mode, &(b * channel.m.transpose()));
    }
    let diag = matrix::mode_block(&out, mode, mode) + channel.n;
    matrix::set_mode_block(&mut out, mode, mode, &diag);
    Ok(CovarianceMatrix::from_trusted(out))
}

/// `second` after `first`: `M = M2 M1`, `N = M2 N1 M2^T + N2`.
pub fn compose(second: &GaussianChannel, first: &GaussianChannel) -> GaussianChannel {
    let m = second.m * first.m;
    let n = second.m * first.n * second.m.transpose() + second.n;
    GaussianChannel {
        m,
        n: (n + n.transpose()) * 0.5,
    }
}

/// `M = eta I`, `N = (1 - eta^2) I` for `0 < eta < 1`.
pub fn attenuation(eta: f64) -> Result<GaussianChannel> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::OutOfRange {
            name: "attenuation transmittance eta",
            value: eta,
            range: "(0, 1)".into(),
        });
    }
    Ok(lossy_family(eta))
}

/// `M = eta I`, `N = (eta^2 - 1) I` for `eta > 1`.
pub fn amplification(eta: f64) -> Result<GaussianChannel> {
    if !(eta > 1.0 && eta.is_finite()) {
        return Err(Error::OutOfRange {
            name: "amplification gain eta",
            value: eta,
            range: "(1, inf)".into(),
        });
    }
    Ok(lossy_family(eta))
}

fn lossy_family(eta: f64) -> GaussianChannel {
    GaussianChannel {
        m: Matrix2::identity() * eta,
        n: Matrix2::identity() * (1.0 - eta * eta).abs(),
    }
}

/// `M = I` plus positive-definite classical noise `N`.
pub fn classical_noise(n: Matrix2<f64>) -> Result<GaussianChannel> {
    let report = validate(&Matrix2::identity(), &n);
    if !report.finite || !report.n_symmetric || !(report.n_min_eigenvalue > 0.0) {
        return Err(Error::InvalidChannel(format!(
            "classical noise requires a symmetric positive-definite N (min eigenvalue {:e})",
            report.n_min_eigenvalue
        )));
    }
    GaussianChannel::new(Matrix2::identity(), n)
}

/// Isotropic classical noise `N = variance * I`.
pub fn isotropic_classical_noise(variance: f64) -> Result<GaussianChannel> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::OutOfRange {
            name: "classical noise variance",
            value: variance,
            range: "(0, inf)".into(),
        });
    }
    classical_noise(Matrix2::identity() * variance)
}

/// `M = eta diag(1, -1)` with the least noise allowed by complete
/// positivity, `N = (1 + eta^2) I`.
pub fn phase_conjugation(eta: f64) -> Result<GaussianChannel> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::OutOfRange {
            name: "phase conjugation gain eta",
            value: eta,
            range: "(0, inf)".into(),
        });
    }
    GaussianChannel::new(
        Matrix2::new(eta, 0.0, 0.0, -eta),
        Matrix2::identity() * (1.0 + eta * eta),
    )
}

/// Measure-and-prepare reference channel: `M = I`, `N = 2 I` (`det N = 4`).
pub fn measure_prepare() -> GaussianChannel {
    GaussianChannel {
        m: Matrix2::identity(),
        n: Matrix2::identity() * 2.0,
    }
}

/// `det M <= 0`, or `det M > 0` with `det N >= (1 + det M)^2`.
pub fn is_entanglement_breaking(channel: &GaussianChannel) -> bool {
    let det_m = channel.det_m();
    if det_m <= 0.0 {
        return true;
    }
    let bound = (1.0 + det_m).powi(2);
    channel.det_n() >= bound - EB_TOL * bound
}

/// Local-symplectic normal form of a channel: `M' = S V M U`,
/// `N' = S V N V^T S^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalDecomposition {
    pub channel_prime: GaussianChannel,
    /// Input phase shift.
    pub u: SymplecticMatrix,
    /// Output phase shift.
    pub v: SymplecticMatrix,
    /// Output squeezer.
    pub s: SymplecticMatrix,
    /// `sqrt(|det M|)`, or the surviving singular value when `det M = 0`.
    pub eta: f64,
}

fn rotation_angle(r: &Matrix2<f64>) -> f64 {
    // [[cos, sin], [-sin, cos]]
    r[(0, 1)].atan2(r[(0, 0)])
}

pub fn canonical_form(channel: &GaussianChannel) -> Result<CanonicalDecomposition> {
    let m = channel.m;
    // Rotations W (output side) and Vt (input side) with m = W diag(s1, s2) Vt,
    // s1 >= |s2|, sign of s2 = sign of det M.
    let (w, s1, s2, vt) = if m[(0, 1)] == 0.0 && m[(1, 0)] == 0.0 && m[(0, 0)] > 0.0 {
        (Matrix2::identity(), m[(0, 0)], m[(1, 1)], Matrix2::identity())
    } else {
        let svd = m.svd(true, true);
        let mut w = svd.u.ok_or_else(|| Error::Numerical("SVD of M failed".into()))?;
        let mut vt = svd.v_t.ok_or_else(|| Error::Numerical("SVD of M failed".into()))?;
        let (s1, mut s2) = (svd.singular_values[0], svd.singular_values[1]);
        if w.determinant() < 0.0 {
            w.set_column(1, &(-w.column(1)));
            s2 = -s2;
        }
        if vt.determinant() < 0.0 {
            vt.set_row(1, &(-vt.row(1)));
            s2 = -s2;
        }
        (w, s1, s2, vt)
    };
    let v = phase_shifter(rotation_angle(&w.transpose()))?;
    let u = phase_shifter(rotation_angle(&vt.transpose()))?;
    let singular = s2.abs() <= RANK_TOL * s1 || s1 == 0.0;
    let (s, eta) = if singular {
        (squeezer_with_cap(0.0, f64::INFINITY)?, s1.abs().max(s2.abs()))
    } else {
        let r = 0.5 * (s1 / s2.abs()).ln();
        (squeezer_with_cap(r, f64::INFINITY)?, (s1 * s2.abs()).sqrt())
    };
    let (sm, vm, um) = (to_matrix2(s.matrix()), to_matrix2(v.matrix()), to_matrix2(u.matrix()));
    let mut m_prime = sm * vm * m * um;
    if singular {
        m_prime[(0, 1)] = 0.0;
        m_prime[(1, 0)] = 0.0;
    } else {
        let sign = s2.signum();
        m_prime = Matrix2::new(eta, 0.0, 0.0, sign * eta);
    }
    let n_prime = sm * vm * channel.n * vm.transpose() * sm.transpose();
    Ok(CanonicalDecomposition {
        channel_prime: GaussianChannel {
            m: m_prime,
            n: (n_prime + n_prime.transpose()) * 0.5,
        },
        u,
        v,
        s,
        eta,
    })
}

impl CanonicalDecomposition {
    /// `S V M U` evaluated from the stored factors.
    pub fn reconstructed_m(&self, original: &GaussianChannel) -> Matrix2<f64> {
        let f = |x: &SymplecticMatrix| to_matrix2(x.matrix());
        f(&self.s) * f(&self.v) * original.m * f(&self.u)
    }
}

pub(crate) fn to_matrix2(m: &DMatrix<f64>) -> Matrix2<f64> {
    Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::tmsv_covariance;

    fn mclose(a: &Matrix2<f64>, b: &Matrix2<f64>, tol: f64) -> bool {
        (a - b).abs().max() <= tol
    }

    #[test]
    fn validation_examples() {
        let id = GaussianChannel::identity().report();
        assert!(id.is_valid());
        assert_eq!(id.cp_margin, 0.0);
        let bad = validate(&(Matrix2::identity() * 0.5), &(Matrix2::identity() * 0.1));
        assert!(!bad.cp);
        assert!((bad.cp_margin - (0.01 - 0.5625)).abs() < 1e-15);
        assert!(GaussianChannel::new(Matrix2::identity() * 0.5, Matrix2::identity() * 0.1).is_err());
        for eta in [0.3, 0.7, 0.9] {
            let r = attenuation(eta).unwrap().report();
            assert!(r.is_valid());
            assert!(r.cp_margin.abs() <= 1e-12);
        }
        let asym = validate(&Matrix2::identity(), &Matrix2::new(1.0, 0.2, 0.0, 1.0));
        assert!(!asym.n_symmetric && !asym.is_valid());
        let neg = validate(&Matrix2::zeros(), &Matrix2::new(2.0, 0.0, 0.0, -1.0));
        assert!(!neg.n_psd);
    }

    #[test]
    fn named_constructors() {
        let a = attenuation(0.5).unwrap();
        assert_eq!(a.m(), &(Matrix2::identity() * 0.5));
        assert_eq!(a.n(), &(Matrix2::identity() * 0.75));
        let g = amplification(2.0).unwrap();
        assert_eq!(g.n(), &(Matrix2::identity() * 3.0));
        assert!(g.report().is_valid());
        let near = attenuation(1.0 - 1e-9).unwrap();
        assert!(near.n().max() < 3e-9);
        assert!(attenuation(1.5).is_err());
        assert!(attenuation(0.0).is_err());
        assert!(amplification(0.9).is_err());
        for eta in [1.1, 1.5, 3.0] {
            assert!(amplification(eta).unwrap().report().cp_margin.abs() <= 1e-12);
        }

        let mp = classical_noise(Matrix2::identity() * 2.0).unwrap();
        assert_eq!(mp.det_n(), 4.0);
        assert_eq!(mp, measure_prepare());
        assert_eq!(classical_noise(Matrix2::identity()).unwrap().det_n(), 1.0);
        assert_eq!(classical_noise(Matrix2::new(4.0, 0.0, 0.0, 1.0)).unwrap().det_n(), 4.0);
        assert!(classical_noise(Matrix2::new(1.0, 0.0, 0.0, 0.0)).is_err());

        let pc = phase_conjugation(1.0).unwrap();
        assert_eq!(pc.det_m(), -1.0);
        assert_eq!(pc.n(), &(Matrix2::identity() * 2.0));
    }

    #[test]
    fn entanglement_breaking_predicate() {
        assert!(!is_entanglement_breaking(&attenuation(0.5).unwrap()));
        let conj = GaussianChannel::new(Matrix2::new(1.0, 0.0, 0.0, -1.0), Matrix2::identity() * 2.0).unwrap();
        assert!(is_entanglement_breaking(&conj));
        assert!(is_entanglement_breaking(&measure_prepare()));
        assert!(!is_entanglement_breaking(&isotropic_classical_noise(1.9).unwrap()));
        assert!(!is_entanglement_breaking(&GaussianChannel::identity()));
    }

    #[test]
    fn apply_examples() {
        let g = tmsv_covariance(0.9).unwrap();
        assert_eq!(GaussianChannel::identity().apply(&g, 1).unwrap(), g);
        let eta = 0.6;
        let out = attenuation(eta).unwrap().apply(&g, 1).unwrap();
        let (a, c) = ((1.8f64).cosh(), (1.8f64).sinh());
        let cr = Matrix2::new(c, 0.0, 0.0, -c);
        assert!(mclose(&out.block(0, 0), &(Matrix2::identity() * a), 1e-12));
        assert!(mclose(&out.block(0, 1), &(cr * eta), 1e-12));
        assert!(mclose(&out.block(1, 0), &(cr * eta), 1e-12));
        let expect = Matrix2::identity() * (eta * eta * a) + Matrix2::identity() * (1.0 - eta * eta);
        assert!(mclose(&out.block(1, 1), &expect, 1e-12));
        assert!(matches!(
            GaussianChannel::identity().apply(&g, 2),
            Err(Error::ModeOutOfRange { .. })
        ));
    }

    #[test]
    fn compose_examples() {
        let t = attenuation(0.4).unwrap();
        assert_eq!(compose(&GaussianChannel::identity(), &t), t);
        let ab = compose(&attenuation(0.8).unwrap(), &attenuation(0.5).unwrap());
        let direct = attenuation(0.4).unwrap();
        assert!(mclose(ab.m(), direct.m(), 1e-15));
        assert!(mclose(ab.n(), direct.n(), 1e-15));
        let amp_then_loss = amplification(2.0).unwrap().then(&attenuation(0.5).unwrap());
        assert!(amp_then_loss.report().is_valid());
        assert!(mclose(amp_then_loss.m(), &Matrix2::identity(), 1e-15));
    }

    #[test]
    fn canonical_form_examples() {
        let a = attenuation(0.7).unwrap();
        let c = canonical_form(&a).unwrap();
        assert_eq!(c.u.matrix(), &DMatrix::identity(2, 2));
        assert_eq!(c.v.matrix(), &DMatrix::identity(2, 2));
        assert_eq!(c.s.matrix(), &DMatrix::identity(2, 2));
        assert!((c.eta - 0.7).abs() < 1e-15);

        let t = GaussianChannel::new(Matrix2::new(2.0, 0.0, 0.0, 0.5), Matrix2::identity() * 4.0).unwrap();
        let c = canonical_form(&t).unwrap();
        assert!((c.eta - 1.0).abs() < 1e-12);
        assert!(mclose(c.channel_prime.m(), &Matrix2::identity(), 1e-12));
        assert!((c.channel_prime.det_n() - 16.0).abs() < 1e-9);

        let pc = GaussianChannel::new(Matrix2::new(1.0, 0.0, 0.0, -1.0), Matrix2::identity() * 2.0).unwrap();
        let c = canonical_form(&pc).unwrap();
        assert!((c.eta - 1.0).abs() < 1e-15);
        assert!(mclose(c.channel_prime.m(), &Matrix2::new(1.0, 0.0, 0.0, -1.0), 1e-15));

        let rank1 = GaussianChannel::new(Matrix2::new(0.3, 0.6, 0.1, 0.2), Matrix2::identity() * 1.2).unwrap();
        let c = canonical_form(&rank1).unwrap();
        assert_eq!(c.s.matrix(), &DMatrix::identity(2, 2));
        assert!(c.channel_prime.m()[(1, 1)].abs() < 1e-12);
        assert!((c.channel_prime.m()[(0, 0)].abs() - 0.5_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn canonical_form_generic_matrix() {
        let m = Matrix2::new(0.3, -1.2, 0.8, 0.5);
        let det_m = m.determinant();
        let n = Matrix2::new(3.0, 0.4, 0.4, 2.5);
        let t = GaussianChannel::new(m, n).unwrap();
        let c = canonical_form(&t).unwrap();
        assert!(mclose(&c.reconstructed_m(&t), c.channel_prime.m(), 1e-10));
        assert!((c.channel_prime.det_m() - det_m).abs() < 1e-9);
        assert!((c.channel_prime.det_n() - t.det_n()).abs() < 1e-9);
        assert!(mclose(c.channel_prime.m(), &(Matrix2::identity() * det_m.sqrt()), 1e-10));
    }

    #[test]
    fn channel_json() {
        let json = serde_json::to_string(&attenuation(0.5).unwrap()).unwrap();
        assert_eq!(json, r#"{"M":[[0.5,0.0],[0.0,0.5]],"N":[[0.75,0.0],[0.0,0.75]]}"#);
        let back: GaussianChannel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, attenuation(0.5).unwrap());
        let invalid = r#"{"M":[[0.5,0.0],[0.0,0.5]],"N":[[0.1,0.0],[0.0,0.1]]}"#;
        assert!(serde_json::from_str::<GaussianChannel>(invalid).is_err());
    }
}
