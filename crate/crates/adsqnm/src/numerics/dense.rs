//! Dense complex linear algebra on top of LAPACK (via ndarray-linalg).

use ndarray::{Array1, Array2, OwnedRepr};
use ndarray_linalg::{EigGeneralized, EigVals, Factorize, GeneralizedEigenvalue, JobSvd, LUFactorized, Solve, SVDDC};
use thiserror::Error;

use super::C64;

pub type CMat = Array2<C64>;
pub type CVec = Array1<C64>;

/// Largest dimension for which the smallest singular value is taken from a full SVD.
pub const DENSE_SVD_LIMIT: usize = 2400;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is numerically singular")]
    Singular,
    #[error("LAPACK routine failed: {0}")]
    Lapack(String),
}

pub fn eigenvalues(m: &CMat) -> Result<Vec<C64>, LinalgError> {
    let ev = m.eigvals().map_err(|e| LinalgError::Lapack(e.to_string()))?;
    Ok(ev.to_vec())
}

/// Finite eigenvalues of the pencil A − λB (infinite ones are dropped).
pub fn generalized_eigenvalues(a: &CMat, b: &CMat) -> Result<Vec<C64>, LinalgError> {
    let (ev, _) = (a.clone(), b.clone()).eig_generalized(None).map_err(|e| LinalgError::Lapack(e.to_string()))?;
    Ok(ev
        .iter()
        .filter_map(|g| match g {
            GeneralizedEigenvalue::Finite(v, _) if v.re.is_finite() && v.im.is_finite() => Some(*v),
            _ => None,
        })
        .collect())
}

/// LU factorization with partial pivoting.
pub struct Lu {
    inner: LUFactorized<OwnedRepr<C64>>,
}

impl Lu {
    pub fn new(m: &CMat) -> Result<Self, LinalgError> {
        let inner = m.factorize().map_err(|_| LinalgError::Singular)?;
        Ok(Self { inner })
    }

    pub fn solve(&self, b: &CVec) -> Result<CVec, LinalgError> {
        let x = self.inner.solve(b).map_err(|e| LinalgError::Lapack(e.to_string()))?;
        if x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            Ok(x)
        } else {
            Err(LinalgError::Singular)
        }
    }

    /// Solve with the conjugate transpose.
    pub fn solve_adjoint(&self, b: &CVec) -> Result<CVec, LinalgError> {
        let x = self.inner.solve_h(b).map_err(|e| LinalgError::Lapack(e.to_string()))?;
        if x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            Ok(x)
        } else {
            Err(LinalgError::Singular)
        }
    }
}

pub fn norm2(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// All singular values (descending) from a divide-and-conquer SVD.
pub fn singular_values(m: &CMat) -> Result<Vec<f64>, LinalgError> {
    let (_, s, _) = m.svddc(JobSvd::None).map_err(|e| LinalgError::Lapack(e.to_string()))?;
    Ok(s.to_vec())
}

/// Smallest singular value. Uses a dense SVD up to [`DENSE_SVD_LIMIT`], and
/// inverse iteration on `A^H A` above it or when the SVD driver fails.
/// Returns 0 for an exactly singular matrix.
pub fn sigma_min(m: &CMat) -> Result<f64, LinalgError> {
    if m.nrows() <= DENSE_SVD_LIMIT {
        if let Ok(s) = singular_values(m) {
            return Ok(s.iter().copied().fold(f64::INFINITY, f64::min));
        }
    }
    sigma_min_inverse_iteration(m, 200, 1e-10)
}

pub fn sigma_min_inverse_iteration(m: &CMat, max_iter: usize, tol: f64) -> Result<f64, LinalgError> {
    let n = m.nrows();
    let lu = match Lu::new(m) {
        Ok(lu) => lu,
        Err(LinalgError::Singular) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let mut x: CVec = (0..n)
        .map(|i| C64::new(1.0 + 0.37 * ((i as f64) * 0.7).sin(), 0.21 * ((i as f64) * 1.3).cos()))
        .collect();
    let nx = norm2(&x);
    x.mapv_inplace(|v| v / nx);
    let mut est = f64::INFINITY;
    for _ in 0..max_iter {
        let y = match lu.solve(&x) {
            Ok(y) => y,
            Err(LinalgError::Singular) => return Ok(0.0),
            Err(e) => return Err(e),
        };
        let ny = norm2(&y);
        let new_est = 1.0 / ny;
        let z = lu.solve_adjoint(&y.mapv(|v| v / ny))?;
        let nz = norm2(&z);
        x = z.mapv(|v| v / nz);
        if (est - new_est).abs() <= tol * new_est {
            return Ok(new_est);
        }
        est = new_est;
    }
    Ok(est)
}

/// Smallest singular value of `diag(row_scale)·A·diag(col_scale)⁻¹` by inverse iteration on
/// the LU of the unscaled `A`. Keeping the scales out of the factorization preserves accuracy
/// when they span many orders of magnitude. Returns 0 for an exactly singular `A`.
pub fn scaled_sigma_min(
    lu: &Lu,
    row_scale: &[f64],
    col_scale: &[f64],
    max_iter: usize,
    tol: f64,
) -> Result<f64, LinalgError> {
    let n = row_scale.len();
    let mut x: CVec = (0..n)
        .map(|i| C64::new(1.0 + 0.37 * ((i as f64) * 0.7).sin(), 0.21 * ((i as f64) * 1.3).cos()))
        .collect();
    let nx = norm2(&x);
    x.mapv_inplace(|v| v / nx);
    let mut est = f64::INFINITY;
    for _ in 0..max_iter {
        // y = Dc A⁻¹ Dr⁻¹ x
        let rhs: CVec = x.iter().zip(row_scale).map(|(v, r)| v / r).collect();
        let mut y = match lu.solve(&rhs) {
            Ok(y) => y,
            Err(LinalgError::Singular) => return Ok(0.0),
            Err(e) => return Err(e),
        };
        y.iter_mut().zip(col_scale).for_each(|(v, c)| *v *= c);
        let ny = norm2(&y);
        if ny == 0.0 || !ny.is_finite() {
            return Ok(if ny == 0.0 { f64::INFINITY } else { 0.0 });
        }
        let new_est = 1.0 / ny;
        // z = Dr⁻¹ A⁻ᴴ Dc y
        let rhs: CVec = y.iter().zip(col_scale).map(|(v, c)| v * c / ny).collect();
        let mut z = lu.solve_adjoint(&rhs)?;
        z.iter_mut().zip(row_scale).for_each(|(v, r)| *v /= r);
        let nz = norm2(&z);
        if nz == 0.0 || !nz.is_finite() {
            return Ok(new_est);
        }
        x = z.mapv(|v| v / nz);
        if (est - new_est).abs() <= tol * new_est {
            return Ok(new_est);
        }
        est = new_est;
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_matrix(n: usize) -> CMat {
        Array2::from_shape_fn((n, n), |(i, j)| {
            let d = if i == j { 3.0 + i as f64 } else { 0.0 };
            C64::new(d + ((i * 7 + j * 3) as f64).sin() * 0.3, ((i + 2 * j) as f64).cos() * 0.2)
        })
    }

    #[test]
    fn scaled_inverse_iteration_matches_svd() {
        let m = test_matrix(30);
        let rs: Vec<f64> = (0..30).map(|i| 10f64.powf(i as f64 / 6.0 - 2.0)).collect();
        let cs: Vec<f64> = (0..30).map(|i| 10f64.powf(1.0 - i as f64 / 10.0)).collect();
        let scaled = CMat::from_shape_fn((30, 30), |(i, j)| m[[i, j]] * rs[i] / cs[j]);
        let a = sigma_min(&scaled).unwrap();
        let b = scaled_sigma_min(&Lu::new(&m).unwrap(), &rs, &cs, 2000, 1e-13).unwrap();
        assert!((a - b).abs() < 1e-6 * a, "{a} {b}");
    }

    #[test]
    fn inverse_iteration_matches_svd() {
        let m = test_matrix(40);
        let a = sigma_min(&m).unwrap();
        let b = sigma_min_inverse_iteration(&m, 500, 1e-13).unwrap();
        assert!((a - b).abs() < 1e-8 * a, "{a} {b}");
    }

    #[test]
    fn lu_solves() {
        let m = test_matrix(25);
        let b: CVec = (0..25).map(|i| C64::new(i as f64, 1.0)).collect();
        let x = Lu::new(&m).unwrap().solve(&b).unwrap();
        let r = m.dot(&x) - &b;
        assert!(norm2(&r) < 1e-12 * norm2(&b));
        let y = Lu::new(&m).unwrap().solve_adjoint(&b).unwrap();
        let mh = m.t().mapv(|v| v.conj());
        assert!(norm2(&(mh.dot(&y) - &b)) < 1e-12 * norm2(&b));
    }
}
