//! Projected moments `E[(beta^T X)^m]` for independent components.
//!
//! The moment tensor of an independent vector factorizes, so the inner
//! product `<T^(m), beta^{(x)m}>` is a sum over compositions of `m`.

use serde::{Deserialize, Serialize};

use crate::dist::{DistributionSpec, MAX_MOMENT_ORDER};
use crate::error::{IdentError, Result};

/// Relative matching tolerance with an absolute floor of 1.
pub const MATCH_TOL: f64 = 1e-9;

/// Raw moments `E[X_j^k]`, `k = 0..=m_max`, one row per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    rows: Vec<Vec<f64>>,
    m_max: usize,
}

impl MomentTable {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || width == 0 {
            return Err(IdentError::Validation(
                "moment table needs at least one row and column".into(),
            ));
        }
        for row in &rows {
            if row.len() != width {
                return Err(IdentError::Validation("ragged moment table".into()));
            }
            if row[0] != 1.0 {
                return Err(IdentError::Validation(
                    "column 0 of a moment table must be 1".into(),
                ));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(IdentError::Validation(
                    "moment table entries must be finite".into(),
                ));
            }
        }
        Ok(MomentTable {
            rows,
            m_max: width - 1,
        })
    }

    /// Raw moments up to `m_max` for each component; fails if any is undefined.
    pub fn new(components: &[DistributionSpec], m_max: usize) -> Result<Self> {
        if m_max > MAX_MOMENT_ORDER {
            return Err(IdentError::OrderExceeded {
                order: m_max,
                max: MAX_MOMENT_ORDER,
            });
        }
        let rows = components
            .iter()
            .map(|c| {
                (0..=m_max)
                    .map(|k| c.raw_moment(k))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(rows)
    }

    /// Table with as many orders as every component can serve.
    pub fn available(components: &[DistributionSpec]) -> Result<Self> {
        let m_max = components
            .iter()
            .map(DistributionSpec::known_moment_orders)
            .min()
            .unwrap_or(0);
        Self::new(components, m_max)
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn moment(&self, component: usize, order: usize) -> f64 {
        self.rows[component][order]
    }

    /// `T^(m)[i_1, ..., i_m] = E[X_{i_1} ... X_{i_m}]`.
    pub fn tensor_entry(&self, indices: &[usize]) -> Result<f64> {
        let m = indices.len();
        if m > self.m_max {
            return Err(IdentError::OrderExceeded {
                order: m,
                max: self.m_max,
            });
        }
        let mut counts = vec![0usize; self.dim()];
        for &i in indices {
            *counts
                .get_mut(i)
                .ok_or_else(|| IdentError::Validation(format!("index {i} out of range")))? += 1;
        }
        Ok(counts
            .iter()
            .enumerate()
            .map(|(j, &k)| self.rows[j][k])
            .product())
    }
}

/// All `k` with `k_1 + ... + k_d = m`, in lexicographic order.
pub fn compositions(m: usize, d: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, slot: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slot + 1 == cur.len() {
            cur[slot] = left;
            out.push(cur.clone());
            return;
        }
        for k in 0..=left {
            cur[slot] = k;
            rec(left - k, slot + 1, cur, out);
        }
    }
    let mut out = Vec::new();
    if d > 0 {
        rec(m, 0, &mut vec![0; d], &mut out);
    }
    out
}

pub fn multinomial(m: usize, k: &[usize]) -> f64 {
    let mut left = m;
    let mut acc = 1.0;
    for &kj in k {
        acc *= crate::dist::binomial(left, kj);
        left -= kj;
    }
    acc
}

/// `E[(beta^T X)^m]` under component independence.
pub fn projected_moment(table: &MomentTable, beta: &[f64], m: usize) -> Result<f64> {
    if beta.len() != table.dim() {
        return Err(IdentError::Validation(format!(
            "beta has length {} but the table has {} components",
            beta.len(),
            table.dim()
        )));
    }
    if m > table.m_max {
        return Err(IdentError::OrderExceeded {
            order: m,
            max: table.m_max,
        });
    }
    Ok(compositions(m, beta.len())
        .iter()
        .map(|k| {
            let term: f64 = k
                .iter()
                .enumerate()
                .map(|(j, &kj)| {
                    if kj == 0 {
                        1.0
                    } else {
                        beta[j].powi(kj as i32) * table.rows[j][kj]
                    }
                })
                .product();
            multinomial(m, k) * term
        })
        .sum())
}

pub(crate) fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= MATCH_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Outcome of [`moments_match_up_to`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentMatch {
    pub matches: bool,
    pub first_mismatch: Option<usize>,
}

/// Necessary condition for `beta` in the solution set: orders `1..=m` agree.
pub fn moments_match_up_to(
    table: &MomentTable,
    beta: &[f64],
    beta0: &[f64],
    m: usize,
) -> Result<MomentMatch> {
    for order in 1..=m {
        let lhs = projected_moment(table, beta, order)?;
        let rhs = projected_moment(table, beta0, order)?;
        if !approx_eq(lhs, rhs) {
            return Ok(MomentMatch {
                matches: false,
                first_mismatch: Some(order),
            });
        }
    }
    Ok(MomentMatch {
        matches: true,
        first_mismatch: None,
    })
}
