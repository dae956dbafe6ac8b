//! Solution sets under spherical and elliptical joint laws.

use nalgebra::{DMatrix, DVector};

use super::{Qualifier, SolutionSetDescription, SolutionSetKind};
use crate::dist::cholesky;
use crate::error::{IdentError, Result};

fn to_matrix(sigma: &[Vec<f64>], d: usize) -> Result<DMatrix<f64>> {
    if sigma.len() != d || sigma.iter().any(|r| r.len() != d) {
        return Err(IdentError::Validation(format!("Sigma must be {d} x {d}")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| sigma[i][j]))
}

/// `{beta^T mu = c} ∩ {|Sigma^{1/2} beta| = rho}` with `c`, `rho` read off `beta0`.
pub fn elliptical_solution_set(
    mu: &[f64],
    sigma: &[Vec<f64>],
    beta0: &[f64],
) -> Result<SolutionSetDescription> {
    let d = beta0.len();
    if mu.len() != d {
        return Err(IdentError::Validation(format!("mu must have length {d}")));
    }
    let s = to_matrix(sigma, d)?;
    cholesky(&s)?;
    let b = DVector::from_column_slice(beta0);
    let rho = (b.transpose() * &s * &b)[(0, 0)].max(0.0).sqrt();
    let c: f64 = mu.iter().zip(beta0).map(|(m, b)| m * b).sum();
    let kind = if mu.iter().all(|m| *m == 0.0) && s == DMatrix::identity(d, d) {
        SolutionSetKind::Sphere { rho }
    } else {
        SolutionSetKind::EllipsoidHyperplane {
            mu: mu.to_vec(),
            sigma: sigma.to_vec(),
            c,
            rho,
        }
    };
    Ok(SolutionSetDescription::new(kind, Qualifier::Exact))
}

/// The points of the set when it is finite, `None` when it is a continuum.
///
/// With `Sigma = L L^T` and `u = L^T beta` the set is a sphere of radius
/// `rho` cut by the hyperplane `u^T L^{-1} mu = c`: a single point when
/// tangent, two points in the plane, a continuum otherwise.
pub fn elliptical_points(
    mu: &[f64],
    sigma: &[Vec<f64>],
    c: f64,
    rho: f64,
) -> Result<Option<Vec<Vec<f64>>>> {
    let d = mu.len();
    let s = to_matrix(sigma, d)?;
    let l = cholesky(&s)?;
    let lt = l.transpose();
    let back = |u: DVector<f64>| -> Vec<f64> {
        lt.clone()
            .solve_upper_triangular(&u)
            .expect("Cholesky factor is invertible")
            .iter()
            .copied()
            .collect()
    };
    let v = l
        .solve_lower_triangular(&DVector::from_column_slice(mu))
        .expect("Cholesky factor is invertible");
    let vv = v.norm_squared();
    if vv == 0.0 {
        return Ok(match d {
            1 => Some(vec![
                back(DVector::from_element(1, rho)),
                back(DVector::from_element(1, -rho)),
            ]),
            _ => None,
        });
    }
    let center = &v * (c / vv);
    let r2 = rho * rho - c * c / vv;
    if d == 1 || r2 <= 1e-12 * rho * rho {
        return Ok(Some(vec![back(center)]));
    }
    if d > 2 {
        return Ok(None);
    }
    let r = r2.sqrt();
    let w = DVector::from_column_slice(&[-v[1], v[0]]) / vv.sqrt();
    Ok(Some(vec![back(&center + &w * r), back(&center - &w * r)]))
}
