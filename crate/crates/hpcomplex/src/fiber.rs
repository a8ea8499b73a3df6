//! Fiberwise dense linear algebra: kernels, images, harmonic subspaces and
//! functional calculus for the evaluated matrices that banded data produces
//! on the sample grid.

use crate::C64;
use nalgebra::{DMatrix, SymmetricEigen};

/// Orthonormal basis of the right null space of `m`, singular values at or
/// below `tol` counting as zero. Returns an `ncols x k` matrix.
///
/// The thin SVD only produces `min(rows, cols)` right singular vectors, so
/// wide matrices are padded with zero rows first.
pub fn null_space(m: &DMatrix<C64>, tol: f64) -> DMatrix<C64> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    let padded = if rows < cols {
        let mut p = DMatrix::<C64>::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut kept: Vec<usize> = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s <= tol {
            kept.push(i);
        }
    }
    let mut basis = DMatrix::<C64>::zeros(cols, kept.len());
    for (out, i) in kept.iter().enumerate() {
        // row i of V^H is the conjugate of the i-th right singular vector
        for j in 0..cols {
            basis[(j, out)] = v_t[(*i, j)].conj();
        }
    }
    basis
}

/// Orthonormal basis of the column space of `m` (singular values above `tol`).
pub fn column_space(m: &DMatrix<C64>, tol: f64) -> DMatrix<C64> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let kept: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > tol)
        .map(|(i, _)| i)
        .collect();
    let mut basis = DMatrix::<C64>::zeros(rows, kept.len());
    for (out, i) in kept.iter().enumerate() {
        basis.set_column(out, &u.column(*i));
    }
    basis
}

/// Rank with singular values above `tol`.
pub fn rank(m: &DMatrix<C64>, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .filter(|s| **s > tol)
        .count()
}

/// Smallest singular value; `infinity` for empty square matrices of size 0.
pub fn min_singular_value(m: &DMatrix<C64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return f64::INFINITY;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Harmonic subspace at one degree: vectors killed by the outgoing
/// differential `up` and by the adjoint of the `incoming` one. Either may be
/// `None` at the ends of the complex.
pub fn harmonic_basis(
    up: Option<&DMatrix<C64>>,
    incoming: Option<&DMatrix<C64>>,
    dim: usize,
    tol: f64,
) -> DMatrix<C64> {
    let mut rows = 0;
    if let Some(u) = up {
        rows += u.nrows();
    }
    if let Some(d) = incoming {
        rows += d.ncols();
    }
    if rows == 0 {
        // no differentials touch this degree: everything is harmonic
        return DMatrix::identity(dim, dim);
    }
    let mut stacked = DMatrix::<C64>::zeros(rows, dim);
    let mut r = 0;
    if let Some(u) = up {
        stacked.view_mut((r, 0), (u.nrows(), dim)).copy_from(u);
        r += u.nrows();
    }
    if let Some(d) = incoming {
        let adj = d.adjoint();
        stacked.view_mut((r, 0), (adj.nrows(), dim)).copy_from(&adj);
    }
    null_space(&stacked, tol)
}

/// Coefficients of the orthogonal projection of the columns of `x` onto the
/// span of the orthonormal `basis`, together with the residual norm.
pub fn project(basis: &DMatrix<C64>, x: &DMatrix<C64>) -> (DMatrix<C64>, f64) {
    let coeffs = basis.adjoint() * x;
    let residual = x - basis * &coeffs;
    (coeffs, residual.norm())
}

/// Apply a real function to a Hermitian matrix through its eigendecomposition.
pub fn hermitian_apply(h: &DMatrix<C64>, f: impl Fn(f64) -> f64) -> DMatrix<C64> {
    if h.nrows() == 0 {
        return h.clone();
    }
    let eig = SymmetricEigen::new(h.clone());
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| C64::new(f(x), 0.0)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Bounded transform at one fiber: `Q(t) = t (1 + t^* t)^{-1/2}`.
pub fn bounded_transform(t: &DMatrix<C64>) -> DMatrix<C64> {
    if t.ncols() == 0 {
        return t.clone();
    }
    let g = DMatrix::identity(t.ncols(), t.ncols()) + t.adjoint() * t;
    t * hermitian_apply(&g, |x| 1.0 / x.sqrt())
}

/// Determinant via LU with partial pivoting.
pub fn det(m: &DMatrix<C64>) -> C64 {
    if m.nrows() == 0 {
        return C64::new(1.0, 0.0);
    }
    m.clone().lu().determinant()
}

/// Deviation of `u` from unitarity in spectral norm.
pub fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    let gram = u.adjoint() * u;
    let eye = DMatrix::<C64>::identity(u.ncols(), u.ncols());
    crate::algebra::spectral_norm(&(gram - eye))
}

pub use crate::algebra::spectral_norm;

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn null_space_of_wide_matrix_is_complete() {
        // 1x3 matrix [1, 1, 1]: null space has dimension 2
        let m = DMatrix::from_row_slice(1, 3, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        let ns = null_space(&m, 1e-10);
        assert_eq!(ns.ncols(), 2);
        assert!((&m * &ns).norm() < 1e-12);
        let gram = ns.adjoint() * &ns;
        assert!((gram - DMatrix::<C64>::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn harmonic_of_zero_differentials_is_everything() {
        let h = harmonic_basis(None, None, 3, 1e-10);
        assert_eq!(h.ncols(), 3);
    }

    #[test]
    fn bounded_transform_scalar() {
        let t = DMatrix::from_row_slice(1, 1, &[c(1.0, 0.0)]);
        let q = bounded_transform(&t);
        assert!((q[(0, 0)].re - 1.0 / 2.0f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn projection_splits_vector() {
        let basis = DMatrix::from_row_slice(2, 1, &[c(1.0, 0.0), c(0.0, 0.0)]);
        let x = DMatrix::from_row_slice(2, 1, &[c(3.0, 0.0), c(4.0, 0.0)]);
        let (coeffs, residual) = project(&basis, &x);
        assert!((coeffs[(0, 0)].re - 3.0).abs() < 1e-14);
        assert!((residual - 4.0).abs() < 1e-12);
    }
}
