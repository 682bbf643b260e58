//! Small dense-matrix helpers shared by the modules.

use nalgebra::{DMatrix, Matrix2};

use crate::error::{Error, Result};

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Largest |m_ij - m_ji|.
pub(crate) fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn check_finite(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Returns the number of modes of a square matrix of even dimension.
pub(crate) fn modes_of(m: &DMatrix<f64>) -> Result<usize> {
    let (rows, cols) = m.shape();
    if rows != cols || rows % 2 != 0 {
        return Err(Error::BadShape { rows, cols });
    }
    if rows == 0 {
        return Err(Error::ZeroModes);
    }
    Ok(rows / 2)
}

/// The 2x2 block coupling mode `i` (rows) with mode `j` (columns).
pub(crate) fn mode_block(m: &DMatrix<f64>, i: usize, j: usize) -> Matrix2<f64> {
    Matrix2::new(
        m[(2 * i, 2 * j)],
        m[(2 * i, 2 * j + 1)],
        m[(2 * i + 1, 2 * j)],
        m[(2 * i + 1, 2 * j + 1)],
    )
}

pub(crate) fn set_mode_block(m: &mut DMatrix<f64>, i: usize, j: usize, b: &Matrix2<f64>) {
    m[(2 * i, 2 * j)] = b[(0, 0)];
    m[(2 * i, 2 * j + 1)] = b[(0, 1)];
    m[(2 * i + 1, 2 * j)] = b[(1, 0)];
    m[(2 * i + 1, 2 * j + 1)] = b[(1, 1)];
}

/// Row-major nested vectors, the on-disk layout of every matrix.
pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Json("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub(crate) fn matrix2_to_rows(m: &Matrix2<f64>) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

pub(crate) fn matrix2_from_rows(r: &[[f64; 2]; 2]) -> Matrix2<f64> {
    Matrix2::new(r[0][0], r[0][1], r[1][0], r[1][1])
}
