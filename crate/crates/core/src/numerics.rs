//! Dense linear-algebra kernels: spectra, column-span projections, least squares.
//!
//! Matrices are `nalgebra` dense matrices (column-major storage), so a column
//! `X_i` is a contiguous slice of the backing buffer.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative rank threshold: singular values below `RANK_TOL * sigma_max` count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Allowed relative asymmetry for inputs that must be symmetric.
const SYMMETRY_TOL: f64 = 1e-10;

/// Builds a matrix from row-major entries, rejecting bad lengths and non-finite values.
pub fn matrix_from_row_major(rows: usize, cols: usize, entries: &[f64]) -> Result<Matrix> {
    check_entries(rows, cols, entries)?;
    Ok(Matrix::from_row_slice(rows, cols, entries))
}

/// Builds a matrix from column-major entries, rejecting bad lengths and non-finite values.
pub fn matrix_from_col_major(rows: usize, cols: usize, entries: &[f64]) -> Result<Matrix> {
    check_entries(rows, cols, entries)?;
    Ok(Matrix::from_column_slice(rows, cols, entries))
}

fn check_entries(rows: usize, cols: usize, entries: &[f64]) -> Result<()> {
    if entries.len() != rows * cols {
        return Err(Error::shape(format!(
            "expected {} entries for a {rows}x{cols} matrix, got {}",
            rows * cols,
            entries.len()
        )));
    }
    if let Some(pos) = entries.iter().position(|v| !v.is_finite()) {
        return Err(Error::Data(format!("non-finite matrix entry at position {pos}")));
    }
    Ok(())
}

/// Column `j` of a column-major matrix as a contiguous slice.
#[inline]
pub fn col(m: &Matrix, j: usize) -> &[f64] {
    let n = m.nrows();
    &m.as_slice()[j * n..(j + 1) * n]
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
}

/// Smallest eigenvalue of a symmetric positive-semidefinite matrix.
///
/// Values within `1e-10` (relative to the spectral scale) below zero are
/// clamped to zero; anything more negative is reported as a domain error.
pub fn min_eigenvalue(g: &Matrix) -> Result<f64> {
    if g.nrows() != g.ncols() {
        return Err(Error::shape(format!(
            "min_eigenvalue needs a square matrix, got {}x{}",
            g.nrows(),
            g.ncols()
        )));
    }
    if g.nrows() == 0 {
        return Err(Error::shape("min_eigenvalue of an empty matrix"));
    }
    let scale = max_abs(g);
    let asym = max_abs(&(g - g.transpose()));
    if asym > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::shape(format!(
            "matrix is not symmetric (max asymmetry {asym:e})"
        )));
    }
    let eig = SymmetricEigen::new(g.clone());
    let lo = eig.eigenvalues.min();
    let hi = eig.eigenvalues.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let tol = SYMMETRY_TOL * hi.max(1.0);
    if lo >= 0.0 {
        Ok(lo)
    } else if lo >= -tol {
        Ok(0.0)
    } else {
        Err(Error::Domain(format!(
            "matrix is not positive semidefinite (smallest eigenvalue {lo:e})"
        )))
    }
}

/// Singular values of `m`, largest first.
pub fn singular_values(m: &Matrix) -> Vector {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vector::zeros(0);
    }
    let mut s = m.singular_values();
    s.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
    s
}

/// Smallest singular value above `RANK_TOL * sigma_max`.
pub fn min_nonzero_singular_value(m: &Matrix) -> Result<f64> {
    let s = singular_values(m);
    let smax = s.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return Err(Error::Degenerate("all-zero matrix has no nonzero singular value".into()));
    }
    let thresh = RANK_TOL * smax;
    Ok(s.iter().copied().filter(|&v| v > thresh).fold(f64::INFINITY, f64::min))
}

/// Orthonormal basis (as columns) for the column span of `m`.
pub fn orthonormal_basis(m: &Matrix) -> Matrix {
    let n = m.nrows();
    if m.ncols() == 0 || n == 0 {
        return Matrix::zeros(n, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return Matrix::zeros(n, 0);
    }
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > RANK_TOL * smax)
        .map(|(i, _)| i)
        .collect();
    Matrix::from_fn(n, keep.len(), |r, c| u[(r, keep[c])])
}

/// `v - Q Q^T v` for an orthonormal basis `q`.
pub fn remove_span(q: &Matrix, v: &Vector) -> Vector {
    if q.ncols() == 0 {
        return v.clone();
    }
    let coef = q.tr_mul(v);
    v - q * coef
}

/// `(I - P_col(M)) v`: projection of `v` onto the orthocomplement of the column span of `M`.
pub fn orthocomplement_projection(m: &Matrix, v: &Vector) -> Result<Vector> {
    if m.nrows() != v.len() {
        return Err(Error::shape(format!(
            "matrix has {} rows but vector has length {}",
            m.nrows(),
            v.len()
        )));
    }
    let q = orthonormal_basis(m);
    // A second pass removes the residual component left by rounding in the first.
    let once = remove_span(&q, v);
    Ok(remove_span(&q, &once))
}

/// Unique minimizer of `||b - A x||_2` for full-column-rank `A`.
pub fn least_squares(a: &Matrix, b: &Vector) -> Result<Vector> {
    if a.nrows() != b.len() {
        return Err(Error::shape(format!(
            "matrix has {} rows but right-hand side has length {}",
            a.nrows(),
            b.len()
        )));
    }
    if a.ncols() > a.nrows() {
        return Err(Error::Rank(format!(
            "{}x{} matrix cannot have full column rank",
            a.nrows(),
            a.ncols()
        )));
    }
    let qr = a.clone().qr();
    let r = qr.r();
    let s = singular_values(&r);
    let smax = s[0];
    let smin = s[s.len() - 1];
    if smax == 0.0 || smin <= RANK_TOL * smax {
        return Err(Error::Rank(format!(
            "least squares matrix is rank deficient (sigma_min {smin:e}, sigma_max {smax:e})"
        )));
    }
    let qtb = qr.q().tr_mul(b);
    let x = r
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::Rank("singular triangular factor".into()))?;
    // One step of iterative refinement.
    let resid = b - a * &x;
    let corr = r
        .solve_upper_triangular(&qr.q().tr_mul(&resid))
        .ok_or_else(|| Error::Rank("singular triangular factor".into()))?;
    Ok(x + corr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn randn(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn min_eigenvalue_examples() {
        assert_abs_diff_eq!(min_eigenvalue(&Matrix::identity(3, 3)).unwrap(), 1.0, epsilon = 1e-14);
        let d = Matrix::from_diagonal(&Vector::from_vec(vec![2.0, 5.0]));
        assert_abs_diff_eq!(min_eigenvalue(&d).unwrap(), 2.0, epsilon = 1e-14);
        // roots of (2-t)^2 - 1 are 1 and 3
        let g = matrix_from_row_major(2, 2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(min_eigenvalue(&g).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn min_eigenvalue_rejects_bad_shapes() {
        assert!(matches!(min_eigenvalue(&Matrix::zeros(2, 3)), Err(Error::Shape(_))));
        let asym = matrix_from_row_major(2, 2, &[1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(matches!(min_eigenvalue(&asym), Err(Error::Shape(_))));
    }

    #[test]
    fn min_eigenvalue_clamps_tiny_negative() {
        // rank-one PSD matrix: exact smallest eigenvalue is 0
        let v = Vector::from_vec(vec![1.0, 1.0 / 3.0, 7.0]);
        let g = &v * v.transpose();
        let lo = min_eigenvalue(&g).unwrap();
        assert!((0.0..1e-12).contains(&lo));
    }

    #[test]
    fn min_eigenvalue_below_rayleigh_quotients() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = randn(&mut rng, 8, 5);
        let g = a.transpose() * &a;
        let lo = min_eigenvalue(&g).unwrap();
        for _ in 0..100 {
            let v = randn(&mut rng, 5, 1).column(0).into_owned().normalize();
            let rq = v.dot(&(&g * &v));
            assert!(lo <= rq + 1e-10);
        }
    }

    #[test]
    fn singular_value_examples() {
        assert_abs_diff_eq!(
            min_nonzero_singular_value(&Matrix::identity(2, 2)).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        let c = matrix_from_col_major(2, 1, &[3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(min_nonzero_singular_value(&c).unwrap(), 5.0, epsilon = 1e-14);
        // [[1,1],[1,1]] = 2 * (e/sqrt2)(e/sqrt2)^T: singular values 2 and 0
        let ones = Matrix::from_element(2, 2, 1.0);
        assert_abs_diff_eq!(min_nonzero_singular_value(&ones).unwrap(), 2.0, epsilon = 1e-14);
        assert!(matches!(
            min_nonzero_singular_value(&Matrix::zeros(2, 2)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn orthocomplement_examples() {
        let e1 = matrix_from_col_major(2, 1, &[1.0, 0.0]).unwrap();
        let v = Vector::from_vec(vec![1.0, 0.0]);
        assert_abs_diff_eq!(orthocomplement_projection(&e1, &v).unwrap(), Vector::zeros(2), epsilon = 1e-15);
        let v = Vector::from_vec(vec![0.0, 1.0]);
        assert_abs_diff_eq!(orthocomplement_projection(&e1, &v).unwrap(), v, epsilon = 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let m = matrix_from_col_major(2, 1, &[h, h]).unwrap();
        let out = orthocomplement_projection(&m, &Vector::from_vec(vec![1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(out, Vector::from_vec(vec![0.5, -0.5]), epsilon = 1e-15);
        assert!(matches!(
            orthocomplement_projection(&m, &Vector::zeros(3)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn orthocomplement_is_idempotent_and_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let m = randn(&mut rng, 7, 3);
            let v = randn(&mut rng, 7, 1).column(0).into_owned();
            let once = orthocomplement_projection(&m, &v).unwrap();
            let twice = orthocomplement_projection(&m, &once).unwrap();
            assert!((&once - &twice).amax() <= 1e-12);
            for j in 0..3 {
                assert!(m.column(j).dot(&once).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn least_squares_examples() {
        let b = Vector::from_vec(vec![1.0, 2.0]);
        assert_abs_diff_eq!(least_squares(&Matrix::identity(2, 2), &b).unwrap(), b, epsilon = 1e-15);
        let two = Matrix::identity(2, 2) * 2.0;
        let x = least_squares(&two, &Vector::from_vec(vec![2.0, 4.0])).unwrap();
        assert_abs_diff_eq!(x, b, epsilon = 1e-15);
        // normal equation: 2x = 0 + 2
        let ones = matrix_from_col_major(2, 1, &[1.0, 1.0]).unwrap();
        let x = least_squares(&ones, &Vector::from_vec(vec![0.0, 2.0])).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn least_squares_rank_error() {
        let a = Matrix::from_element(3, 2, 1.0);
        assert!(matches!(least_squares(&a, &Vector::zeros(3)), Err(Error::Rank(_))));
    }

    #[test]
    fn least_squares_residual_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let a = randn(&mut rng, 10, 4);
            let b = randn(&mut rng, 10, 1).column(0).into_owned();
            let x = least_squares(&a, &b).unwrap();
            let r = &b - &a * &x;
            assert!(a.tr_mul(&r).amax() <= 1e-10);
        }
    }

    #[test]
    fn constructors_validate() {
        assert!(matches!(matrix_from_row_major(2, 2, &[1.0; 3]), Err(Error::Shape(_))));
        assert!(matches!(
            matrix_from_row_major(1, 2, &[1.0, f64::NAN]),
            Err(Error::Data(_))
        ));
        let m = matrix_from_row_major(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(col(&m, 1), &[2.0, 4.0]);
    }
}
