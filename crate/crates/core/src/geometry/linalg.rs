//! Symmetric eigendecomposition helpers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues at or below this fraction of the largest eigenvalue are zero.
pub const ZERO_EIGEN_RATIO: f64 = 1e-10;

/// Absolute symmetry tolerance, scaled by `max(1, max |a_ij|)`.
pub const SYMMETRY_TOL: f64 = 1e-12;

fn check_symmetric(sigma: &DMatrix<f64>) -> Result<()> {
    if !sigma.is_square() {
        return Err(Error::InvalidParameter(format!(
            "matrix is {}x{}, expected square",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let scale = sigma.amax().max(1.0);
    let mut asymmetry: f64 = 0.0;
    for i in 0..sigma.nrows() {
        for j in i + 1..sigma.ncols() {
            asymmetry = asymmetry.max((sigma[(i, j)] - sigma[(j, i)]).abs());
        }
    }
    if asymmetry > SYMMETRY_TOL * scale {
        return Err(Error::Asymmetric { asymmetry });
    }
    Ok(())
}

/// Eigenpairs of a symmetric PSD matrix with the numerically-zero part
/// removed: returns `(eigenvalues, eigenvectors as columns)` for the
/// retained spectrum only.
pub fn positive_spectrum(sigma: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    check_symmetric(sigma)?;
    let n = sigma.nrows();
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let sym = (sigma + sigma.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let largest = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let cutoff = ZERO_EIGEN_RATIO * largest;
    let keep: Vec<usize> = (0..n)
        .filter(|&i| largest > 0.0 && eig.eigenvalues[i] > cutoff)
        .collect();
    let values = keep.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])]);
    Ok((values, vectors))
}

/// Moore-Penrose pseudo-inverse of a symmetric PSD matrix.
pub fn pseudo_inverse(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (values, vectors) = positive_spectrum(sigma)?;
    let n = sigma.nrows();
    let mut out = DMatrix::zeros(n, n);
    for (k, &lambda) in values.iter().enumerate() {
        let v = vectors.column(k);
        out += (v * v.transpose()) / lambda;
    }
    Ok(out)
}

/// Orthogonal projector onto the range of a symmetric PSD matrix.
pub fn range_projector(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (_, vectors) = positive_spectrum(sigma)?;
    Ok(&vectors * vectors.transpose())
}

pub fn mat_vec(a: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (a * DVector::from_column_slice(x)).as_slice().to_vec()
}
