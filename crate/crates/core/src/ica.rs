//! Multi-response identifiability: `Y =d B0 X` with `m >= 2` responses.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dist::DistributionSpec;
use crate::error::{IdentError, Result};

/// Relative tolerance of the column proportionality test.
pub const PROPORTIONAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct MixingProblem {
    b0: DMatrix<f64>,
    components: Vec<DistributionSpec>,
}

impl MixingProblem {
    /// Components must already have unit variance.
    pub fn new(b0: DMatrix<f64>, components: Vec<DistributionSpec>) -> Result<Self> {
        if b0.nrows() < 2 {
            return Err(IdentError::Validation(
                "the mixing matrix needs at least two rows".into(),
            ));
        }
        if b0.ncols() != components.len() {
            return Err(IdentError::Validation(format!(
                "mixing matrix has {} columns but {} components were given",
                b0.ncols(),
                components.len()
            )));
        }
        if b0.iter().any(|v| !v.is_finite()) {
            return Err(IdentError::Validation(
                "mixing matrix entries must be finite".into(),
            ));
        }
        for (i, c) in components.iter().enumerate() {
            let var = c.variance()?;
            if (var - 1.0).abs() > 1e-9 {
                return Err(IdentError::Validation(format!(
                    "component {i} has variance {var}, expected 1"
                )));
            }
        }
        Ok(MixingProblem { b0, components })
    }

    /// Rescales every component to unit variance and absorbs the scale into `B0`.
    ///
    /// Centering only shifts `B0 X` by a constant, so it is applied as well.
    pub fn standardized(b0: DMatrix<f64>, components: Vec<DistributionSpec>) -> Result<Self> {
        if b0.ncols() != components.len() {
            return Self::new(b0, components);
        }
        let mut b = b0;
        let mut std = Vec::with_capacity(components.len());
        for (i, c) in components.iter().enumerate() {
            let var = c.variance()?;
            if !(var > 0.0) {
                return Err(IdentError::DegenerateComponent { index: i });
            }
            let sd = var.sqrt();
            let inv = 1.0 / sd;
            std.push(c.affine(-(inv * c.mean()?), inv)?);
            b.column_mut(i).scale_mut(sd);
        }
        Self::new(b, std)
    }

    /// Rows given as nested vectors.
    pub fn from_rows(
        rows: &[Vec<f64>],
        components: Vec<DistributionSpec>,
        standardize: bool,
    ) -> Result<Self> {
        let m = rows.len();
        let d = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != d) {
            return Err(IdentError::Validation(
                "mixing matrix rows differ in length".into(),
            ));
        }
        let b0 = DMatrix::from_fn(m, d, |i, j| rows[i][j]);
        if standardize {
            Self::standardized(b0, components)
        } else {
            Self::new(b0, components)
        }
    }

    pub fn b0(&self) -> &DMatrix<f64> {
        &self.b0
    }

    pub fn components(&self) -> &[DistributionSpec] {
        &self.components
    }
}

/// `B[scaled] = lambda * B[base]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnDependence {
    pub scaled: usize,
    pub base: usize,
    pub lambda: f64,
}

fn max_abs(col: &[f64]) -> f64 {
    col.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `lambda` with `a = lambda * b`, using the largest entry of `b` as pivot.
fn proportion(a: &[f64], b: &[f64]) -> Option<f64> {
    let pivot = (0..b.len()).max_by(|&i, &j| b[i].abs().total_cmp(&b[j].abs()))?;
    if b[pivot] == 0.0 {
        return None;
    }
    let lambda = a[pivot] / b[pivot];
    let scale = max_abs(a).max(lambda.abs() * max_abs(b));
    a.iter()
        .zip(b)
        .all(|(x, y)| (x - lambda * y).abs() <= PROPORTIONAL_TOL * scale)
        .then_some(lambda)
}

/// Every pair of zero-based columns `j < k` that are scalar multiples of each other.
pub fn pairwise_dependent_columns(b: &DMatrix<f64>) -> Vec<ColumnDependence> {
    let cols: Vec<Vec<f64>> = (0..b.ncols())
        .map(|j| b.column(j).iter().copied().collect())
        .collect();
    let mut out = Vec::new();
    for j in 0..cols.len() {
        for k in j + 1..cols.len() {
            let (zj, zk) = (max_abs(&cols[j]) == 0.0, max_abs(&cols[k]) == 0.0);
            let dep = if zk {
                Some(ColumnDependence {
                    scaled: k,
                    base: j,
                    lambda: 0.0,
                })
            } else if zj {
                Some(ColumnDependence {
                    scaled: j,
                    base: k,
                    lambda: 0.0,
                })
            } else {
                proportion(&cols[k], &cols[j]).map(|lambda| ColumnDependence {
                    scaled: k,
                    base: j,
                    lambda,
                })
            };
            out.extend(dep);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum IcaVerdict {
    /// `B0` is determined up to column permutations and sign flips.
    WeakUpToSignedPermutation,
    HypothesisFailed {
        reasons: Vec<String>,
    },
    GaussianComponentPresent {
        indices: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcaReport {
    pub verdict: IcaVerdict,
    pub dependent_columns: Vec<ColumnDependence>,
}

pub fn ica_verdict(problem: &MixingProblem) -> IcaVerdict {
    ica_report(problem).verdict
}

pub fn ica_report(problem: &MixingProblem) -> IcaReport {
    let dependent_columns = pairwise_dependent_columns(&problem.b0);
    let gaussian: Vec<usize> = (0..problem.components.len())
        .filter(|&i| problem.components[i].is_gaussian())
        .collect();
    let verdict = if !gaussian.is_empty() {
        IcaVerdict::GaussianComponentPresent { indices: gaussian }
    } else {
        let mut reasons: Vec<String> = dependent_columns
            .iter()
            .map(|c| format!("column {} = {} x column {}", c.scaled, c.lambda, c.base))
            .collect();
        for (i, c) in problem.components.iter().enumerate() {
            if c.is_degenerate() {
                reasons.push(format!("component {i} is degenerate"));
            }
        }
        if reasons.is_empty() {
            IcaVerdict::WeakUpToSignedPermutation
        } else {
            IcaVerdict::HypothesisFailed { reasons }
        }
    };
    IcaReport {
        verdict,
        dependent_columns,
    }
}

/// Drops column `j` into column `k` when `B0_j = lambda B0_k`: column `k`
/// is scaled by `1 + lambda` and column `j` zeroed.
pub fn collapse_counterexample(
    b0: &DMatrix<f64>,
    j: usize,
    k: usize,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    if j >= b0.ncols() || k >= b0.ncols() || j == k {
        return Err(IdentError::PreconditionUnmet(format!(
            "invalid column pair ({j}, {k})"
        )));
    }
    let cj: Vec<f64> = b0.column(j).iter().copied().collect();
    let ck: Vec<f64> = b0.column(k).iter().copied().collect();
    let scale = max_abs(&cj).max(lambda.abs() * max_abs(&ck));
    if cj
        .iter()
        .zip(&ck)
        .any(|(x, y)| (x - lambda * y).abs() > PROPORTIONAL_TOL * scale)
    {
        return Err(IdentError::PreconditionUnmet(format!(
            "column {j} is not {lambda} x column {k}"
        )));
    }
    let mut b = b0.clone();
    b.column_mut(k).scale_mut(1.0 + lambda);
    b.column_mut(j).fill(0.0);
    Ok(b)
}
