//! Symplectic linear algebra and Gaussian states at the covariance level.
//!
//! Quadratures are ordered `(x1, p1, ..., xn, pn)` and covariance matrices
//! are vacuum-normalized: the vacuum of `n` modes is the `2n x 2n` identity.

use nalgebra::{Complex, DMatrix, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{self, asymmetry, max_abs, symmetrize};

/// Default bound on |r| for squeezers and two-mode squeezed vacua.
pub const DEFAULT_R_CAP: f64 = 20.0;

/// Absolute symmetry tolerance, scaled by `max(1, max|entry|)`.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Allowed negativity of the smallest eigenvalue of `gamma + i Omega`,
/// scaled by `max(1, max|entry|)`.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Allowed elementwise deviation of `S Omega S^T` from `Omega`, scaled by
/// `max(1, max|S_ij|^2)`.
pub const SYMPLECTIC_TOL: f64 = 1e-10;

fn scale_of(m: &DMatrix<f64>) -> f64 {
    max_abs(m).max(1.0)
}

/// The standard symplectic form `Omega = (+) [[0, 1], [-1, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    n_modes: usize,
    data: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }
}

pub fn symplectic_form(n: usize) -> Result<SymplecticForm> {
    if n == 0 {
        return Err(Error::ZeroModes);
    }
    Ok(SymplecticForm {
        n_modes: n,
        data: omega(n),
    })
}

pub(crate) fn omega(n: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        w[(2 * k, 2 * k + 1)] = 1.0;
        w[(2 * k + 1, 2 * k)] = -1.0;
    }
    w
}

/// Second moments of an `n`-mode Gaussian state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CovarianceFile", into = "CovarianceFile")]
pub struct CovarianceMatrix {
    n_modes: usize,
    data: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct CovarianceFile {
    n_modes: usize,
    data: Vec<Vec<f64>>,
}

impl TryFrom<CovarianceFile> for CovarianceMatrix {
    type Error = Error;

    fn try_from(f: CovarianceFile) -> Result<Self> {
        let gamma = CovarianceMatrix::new(matrix::from_rows(&f.data)?)?;
        if gamma.n_modes != f.n_modes {
            return Err(Error::DimensionMismatch {
                expected: f.n_modes,
                found: gamma.n_modes,
            });
        }
        Ok(gamma)
    }
}

impl From<CovarianceMatrix> for CovarianceFile {
    fn from(g: CovarianceMatrix) -> Self {
        CovarianceFile {
            n_modes: g.n_modes,
            data: matrix::to_rows(&g.data),
        }
    }
}

impl CovarianceMatrix {
    /// Validates shape, symmetry and the uncertainty principle. The stored
    /// matrix is the symmetrized input.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        let n_modes = matrix::modes_of(&data)?;
        matrix::check_finite(&data, "covariance matrix")?;
        let asym = asymmetry(&data);
        if asym > SYMMETRY_TOL * scale_of(&data) {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        let data = symmetrize(&data);
        let min_eigenvalue = min_physical_eigenvalue(&data);
        if min_eigenvalue < -PHYSICALITY_TOL * scale_of(&data) {
            return Err(Error::Unphysical { min_eigenvalue });
        }
        Ok(CovarianceMatrix { n_modes, data })
    }

    /// Wraps the output of an operation that preserves physicality.
    pub(crate) fn from_trusted(data: DMatrix<f64>) -> Self {
        let n_modes = data.nrows() / 2;
        CovarianceMatrix {
            n_modes,
            data: symmetrize(&data),
        }
    }

    pub fn vacuum(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroModes);
        }
        Ok(CovarianceMatrix {
            n_modes: n,
            data: DMatrix::identity(2 * n, 2 * n),
        })
    }

    /// Thermal state with the same variance `v >= 1` in every quadrature.
    pub fn thermal(n: usize, v: f64) -> Result<Self> {
        if !(v >= 1.0) || !v.is_finite() {
            return Err(Error::OutOfRange {
                name: "thermal variance",
                value: v,
                range: "[1, inf)".into(),
            });
        }
        let mut g = Self::vacuum(n)?;
        g.data *= v;
        Ok(g)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    /// The 2x2 block between modes `i` and `j`.
    pub fn block(&self, i: usize, j: usize) -> Matrix2<f64> {
        matrix::mode_block(&self.data, i, j)
    }

    /// Smallest eigenvalue of the Hermitian matrix `gamma + i Omega`.
    pub fn min_physical_eigenvalue(&self) -> f64 {
        min_physical_eigenvalue(&self.data)
    }

    pub fn is_physical(&self) -> bool {
        self.min_physical_eigenvalue() >= -PHYSICALITY_TOL * scale_of(&self.data)
    }

    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        symplectic_eigenvalues(&self.data)
    }
}

/// Smallest eigenvalue of `gamma + i Omega`, via its real symmetric
/// embedding `[[gamma, -Omega], [Omega, gamma]]` (same spectrum, doubled).
pub(crate) fn min_physical_eigenvalue(gamma: &DMatrix<f64>) -> f64 {
    let d = gamma.nrows();
    let w = omega(d / 2);
    let mut h = DMatrix::zeros(2 * d, 2 * d);
    h.view_mut((0, 0), (d, d)).copy_from(gamma);
    h.view_mut((d, d), (d, d)).copy_from(gamma);
    h.view_mut((0, d), (d, d)).copy_from(&(-&w));
    h.view_mut((d, 0), (d, d)).copy_from(&w);
    h.symmetric_eigenvalues().min()
}

/// Gaussian unitary at the covariance level: `S Omega S^T = Omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    n_modes: usize,
    data: DMatrix<f64>,
}

impl SymplecticMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        let n_modes = matrix::modes_of(&data)?;
        matrix::check_finite(&data, "symplectic matrix")?;
        let s = SymplecticMatrix { n_modes, data };
        let deviation = s.symplectic_deviation();
        let scale = scale_of(&s.data).powi(2);
        if deviation > SYMPLECTIC_TOL * scale {
            return Err(Error::NotSymplectic { deviation });
        }
        let det = s.data.determinant();
        if (det - 1.0).abs() > 1e-9 * scale.powi(s.n_modes as i32) {
            return Err(Error::NotSymplectic {
                deviation: (det - 1.0).abs(),
            });
        }
        Ok(s)
    }

    pub(crate) fn from_trusted(data: DMatrix<f64>) -> Self {
        SymplecticMatrix {
            n_modes: data.nrows() / 2,
            data,
        }
    }

    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroModes);
        }
        Ok(Self::from_trusted(DMatrix::identity(2 * n, 2 * n)))
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    /// Max elementwise `|S Omega S^T - Omega|`.
    pub fn symplectic_deviation(&self) -> f64 {
        let w = omega(self.n_modes);
        max_abs(&(&self.data * &w * self.data.transpose() - w))
    }

    /// `self * other`: apply `other` first.
    pub fn compose(&self, other: &SymplecticMatrix) -> Result<SymplecticMatrix> {
        if self.n_modes != other.n_modes {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes,
                found: other.n_modes,
            });
        }
        Ok(Self::from_trusted(&self.data * &other.data))
    }

    /// `S^{-1} = -Omega S^T Omega`.
    pub fn inverse(&self) -> SymplecticMatrix {
        let w = omega(self.n_modes);
        Self::from_trusted(-(&w * self.data.transpose() * &w))
    }

    /// Block-diagonal direct sum, modes of `self` first.
    pub fn direct_sum(&self, other: &SymplecticMatrix) -> SymplecticMatrix {
        Self::from_trusted(direct_sum(&self.data, &other.data))
    }
}

pub(crate) fn direct_sum(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (da, db) = (a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(da + db, da + db);
    out.view_mut((0, 0), (da, da)).copy_from(a);
    out.view_mut((da, da), (db, db)).copy_from(b);
    out
}

/// `[[cos t, sin t], [-sin t, cos t]]`.
pub fn phase_shifter(theta: f64) -> Result<SymplecticMatrix> {
    if !theta.is_finite() {
        return Err(Error::NonFinite("phase shifter angle"));
    }
    let (s, c) = theta.sin_cos();
    Ok(SymplecticMatrix::from_trusted(DMatrix::from_row_slice(
        2,
        2,
        &[c, s, -s, c],
    )))
}

fn check_squeezing(r: f64, r_cap: f64) -> Result<()> {
    if !r.is_finite() {
        return Err(Error::NonFinite("squeezing parameter"));
    }
    if r.abs() > r_cap {
        return Err(Error::OutOfRange {
            name: "squeezing r",
            value: r,
            range: format!("[-{r_cap}, {r_cap}]"),
        });
    }
    Ok(())
}

/// `diag(e^{-r}, e^{r})`, with the default cap on |r|.
pub fn squeezer(r: f64) -> Result<SymplecticMatrix> {
    squeezer_with_cap(r, DEFAULT_R_CAP)
}

pub fn squeezer_with_cap(r: f64, r_cap: f64) -> Result<SymplecticMatrix> {
    check_squeezing(r, r_cap)?;
    Ok(SymplecticMatrix::from_trusted(DMatrix::from_diagonal(
        &nalgebra::DVector::from_vec(vec![(-r).exp(), r.exp()]),
    )))
}

/// Two-mode squeezed vacuum: blocks `A = cosh(2r) I`, `C = sinh(2r) diag(1, -1)`.
pub fn tmsv_covariance(r: f64) -> Result<CovarianceMatrix> {
    tmsv_covariance_with_cap(r, DEFAULT_R_CAP)
}

pub fn tmsv_covariance_with_cap(r: f64, r_cap: f64) -> Result<CovarianceMatrix> {
    check_squeezing(r, r_cap)?;
    let a = (2.0 * r).cosh();
    let c = (2.0 * r).sinh();
    #[rustfmt::skip]
    let data = DMatrix::from_row_slice(4, 4, &[
        a, 0.0, c, 0.0,
        0.0, a, 0.0, -c,
        c, 0.0, a, 0.0,
        0.0, -c, 0.0, a,
    ]);
    Ok(CovarianceMatrix::from_trusted(data))
}

/// Symplectic eigenvalues of a symmetric `2n x 2n` matrix, ascending.
///
/// The input need not be a physical state (partial transposes land here).
/// Positive-definite inputs use `gamma = L L^T` and the singular values of
/// the antisymmetric `L^T Omega L`, which come in equal pairs `nu, nu`.
/// Other symmetric inputs fall back to [`symplectic_eigenvalues_general`].
pub fn symplectic_eigenvalues(gamma: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = matrix::modes_of(gamma)?;
    matrix::check_finite(gamma, "symplectic eigenvalue input")?;
    let asym = asymmetry(gamma);
    if asym > SYMMETRY_TOL * scale_of(gamma) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let sym = symmetrize(gamma);
    let Some(chol) = sym.clone().cholesky() else {
        return symplectic_eigenvalues_general(&sym);
    };
    let l = chol.l();
    let k = l.transpose() * omega(n) * &l;
    let mut sv: Vec<f64> = k.singular_values().iter().copied().collect();
    sv.sort_by(f64::total_cmp);
    Ok(sv.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect())
}

/// Symplectic eigenvalues as square roots of the spectrum of `-(Omega gamma)^2`,
/// which is real and doubly degenerate for symmetric `gamma` with a
/// symplectic diagonalization. Uses a general (non-symmetric) eigensolver.
pub fn symplectic_eigenvalues_general(gamma: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = matrix::modes_of(gamma)?;
    let w = omega(n);
    let wg = &w * gamma;
    let m = -(&wg * &wg);
    let scale = max_abs(&m).max(1.0);
    let mut vals = Vec::with_capacity(2 * n);
    for ev in m.complex_eigenvalues().iter() {
        if ev.re < -PHYSICALITY_TOL * scale || ev.im.abs() > 1e-6 * scale {
            return Err(Error::Numerical(format!(
                "eigenvalue {ev} of -(Omega gamma)^2 is not a nonnegative real"
            )));
        }
        vals.push(ev.re.max(0.0).sqrt());
    }
    vals.sort_by(f64::total_cmp);
    Ok(vals.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect())
}

/// Direct sum `a (+) b`, modes of `a` first.
pub fn tensor(a: &CovarianceMatrix, b: &CovarianceMatrix) -> CovarianceMatrix {
    CovarianceMatrix {
        n_modes: a.n_modes + b.n_modes,
        data: direct_sum(&a.data, &b.data),
    }
}

/// Reduced state on the modes in `keep` (deduplicated, ascending).
pub fn partial_trace(gamma: &CovarianceMatrix, keep: &[usize]) -> Result<CovarianceMatrix> {
    if keep.is_empty() {
        return Err(Error::EmptySelection);
    }
    let mut modes = keep.to_vec();
    modes.sort_unstable();
    modes.dedup();
    if let Some(&bad) = modes.iter().find(|&&m| m >= gamma.n_modes) {
        return Err(Error::ModeOutOfRange {
            index: bad,
            n_modes: gamma.n_modes,
        });
    }
    let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
    let data = DMatrix::from_fn(idx.len(), idx.len(), |i, j| gamma.data[(idx[i], idx[j])]);
    Ok(CovarianceMatrix {
        n_modes: modes.len(),
        data,
    })
}

/// `S gamma S^T`.
pub fn apply_symplectic(s: &SymplecticMatrix, gamma: &CovarianceMatrix) -> Result<CovarianceMatrix> {
    if s.n_modes != gamma.n_modes {
        return Err(Error::DimensionMismatch {
            expected: gamma.n_modes,
            found: s.n_modes,
        });
    }
    Ok(CovarianceMatrix::from_trusted(
        &s.data * &gamma.data * s.data.transpose(),
    ))
}

/// Real symplectic representation of an `n x n` unitary acting on the mode
/// operators, returned in interleaved `(x1, p1, ...)` ordering.
///
/// In `(x1..xn, p1..pn)` ordering the representation is `[[Re U, -Im U], [Im U, Re U]]`.
pub fn passive_symplectic(u: &DMatrix<Complex<f64>>) -> Result<SymplecticMatrix> {
    let n = u.nrows();
    if n == 0 {
        return Err(Error::ZeroModes);
    }
    if u.ncols() != n {
        return Err(Error::BadShape {
            rows: n,
            cols: u.ncols(),
        });
    }
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = u[(i, j)];
            out[(2 * i, 2 * j)] = z.re;
            out[(2 * i, 2 * j + 1)] = -z.im;
            out[(2 * i + 1, 2 * j)] = z.im;
            out[(2 * i + 1, 2 * j + 1)] = z.re;
        }
    }
    Ok(SymplecticMatrix::from_trusted(out))
}

/// `(+)_i diag(e^{-r_i}, e^{r_i})`.
pub fn squeezing_layer(rs: &[f64]) -> SymplecticMatrix {
    let diag: Vec<f64> = rs.iter().flat_map(|&r| [(-r).exp(), r.exp()]).collect();
    SymplecticMatrix::from_trusted(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)))
}

/// Haar-random `n x n` unitary: QR of a complex Ginibre matrix with the
/// phases of `diag(R)` moved into `Q`.
pub(crate) fn haar_unitary<R: Rng>(n: usize, rng: &mut R) -> DMatrix<Complex<f64>> {
    let z = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = z.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { Complex::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random symplectic in Bloch-Messiah form `K1 * Sq(r) * K2`, with `K1`, `K2`
/// Haar-random passive and `r_i ~ U[-r_max, r_max]`. Deterministic in `seed`.
pub fn random_symplectic(n: usize, r_max: f64, seed: u64) -> Result<SymplecticMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_symplectic_with(n, r_max, &mut rng)
}

pub fn random_symplectic_with<R: Rng>(n: usize, r_max: f64, rng: &mut R) -> Result<SymplecticMatrix> {
    if n == 0 {
        return Err(Error::ZeroModes);
    }
    if !(r_max > 0.0) || !r_max.is_finite() {
        return Err(Error::OutOfRange {
            name: "r_max",
            value: r_max,
            range: "(0, inf)".into(),
        });
    }
    let k1 = passive_symplectic(&haar_unitary(n, rng))?;
    let rs: Vec<f64> = (0..n).map(|_| rng.random_range(-r_max..=r_max)).collect();
    let k2 = passive_symplectic(&haar_unitary(n, rng))?;
    Ok(SymplecticMatrix::from_trusted(
        k1.data * squeezing_layer(&rs).data * k2.data,
    ))
}
