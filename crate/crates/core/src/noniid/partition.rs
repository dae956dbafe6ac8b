//! Fourth-moment bounds for more than two components via index-set splits.

use std::collections::BTreeSet;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::fourth_moment::{fourth_moment_test, FourthMomentVerdict};
use crate::dist::{standardize, ProblemSpec};
use crate::error::{IdentError, Result};
use crate::moments::{projected_moment, MomentTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionInvocation {
    /// Zero-based component indices, e.g. `{0,1}` or `{0,1} | {2,3}`.
    pub label: String,
    pub m1: f64,
    pub m2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub verdict: Option<FourthMomentVerdict>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    /// `d! 2^d`, saturating.
    pub bound: u64,
    pub invocations: Vec<PartitionInvocation>,
    pub notes: Vec<String>,
}

fn set_label(idx: &[usize]) -> String {
    format!("{{{}}}", idx.iter().join(","))
}

pub fn orbit_bound(d: usize) -> u64 {
    let fact = (1..=d as u64).try_fold(1u64, |acc, k| acc.checked_mul(k));
    fact.and_then(|f| f.checked_mul(1u64.checked_shl(d as u32)?))
        .unwrap_or(u64::MAX)
}

struct Walker<'a> {
    table: MomentTable,
    beta0: &'a [f64],
    seen: BTreeSet<(Vec<usize>, Vec<usize>)>,
    report: PartitionReport,
}

impl Walker<'_> {
    /// Normalized coefficient of the block and its weight `|beta0_block|`.
    fn block(&self, idx: &[usize]) -> Result<Option<(f64, f64)>> {
        let norm = idx
            .iter()
            .map(|&i| self.beta0[i] * self.beta0[i])
            .sum::<f64>()
            .sqrt();
        if norm == 0.0 {
            return Ok(None);
        }
        let mut coef = vec![0.0; self.beta0.len()];
        for &i in idx {
            coef[i] = self.beta0[i] / norm;
        }
        Ok(Some((projected_moment(&self.table, &coef, 4)?, norm)))
    }

    fn invoke(&mut self, left: &[usize], right: &[usize]) -> Result<()> {
        if !self.seen.insert((left.to_vec(), right.to_vec())) {
            return Ok(());
        }
        let label = if left.len() == 1 && right.len() == 1 {
            set_label(&[left[0], right[0]])
        } else {
            format!("{} | {}", set_label(left), set_label(right))
        };
        let (Some((m1, a)), Some((m2, b))) = (self.block(left)?, self.block(right)?) else {
            self.report
                .notes
                .push(format!("{label}: skipped, a block has zero coefficients"));
            return Ok(());
        };
        // Combinations computed from the moment table carry rounding error.
        let degenerate = (m1 - 3.0).abs() <= 1e-9 && (m2 - 3.0).abs() <= 1e-9;
        let verdict = if degenerate {
            None
        } else {
            Some(fourth_moment_test(m1, m2, a, b)?.verdict)
        };
        self.report.invocations.push(PartitionInvocation {
            label,
            m1,
            m2,
            alpha: a,
            beta: b,
            verdict,
            degenerate,
        });
        Ok(())
    }

    fn walk(&mut self, idx: &[usize]) -> Result<()> {
        if idx.len() < 2 {
            return Ok(());
        }
        if idx.len() == 2 {
            return self.invoke(&idx[..1], &idx[1..]);
        }
        for pair in idx.iter().copied().combinations(2) {
            let rest: Vec<usize> = idx.iter().copied().filter(|i| !pair.contains(i)).collect();
            self.invoke(&pair[..1], &pair[1..])?;
            self.invoke(&pair, &rest)?;
            self.walk(&rest)?;
        }
        Ok(())
    }
}

/// Runs the two-component test on every pair and on every
/// `pair | rest` split, recursing into the rest; each block is collapsed to
/// the normalized combination `beta0_B^T Z_B / |beta0_B|` of standardized components.
pub fn recursive_partition_analysis(problem: &ProblemSpec) -> Result<PartitionReport> {
    let d = problem.dim();
    if d <= 2 {
        return Err(IdentError::PreconditionUnmet(
            "partition analysis needs more than two components".into(),
        ));
    }
    let (std, _) = standardize(problem)?;
    let mut walker = Walker {
        table: MomentTable::new(std.components(), 4)?,
        beta0: std.beta0(),
        seen: BTreeSet::new(),
        report: PartitionReport {
            bound: orbit_bound(d),
            invocations: Vec::new(),
            notes: Vec::new(),
        },
    };
    walker.walk(&(0..d).collect::<Vec<_>>())?;
    let degenerate: Vec<String> = walker
        .report
        .invocations
        .iter()
        .filter(|i| i.degenerate)
        .map(|i| i.label.clone())
        .collect();
    if !degenerate.is_empty() {
        return Err(IdentError::DegenerateInstance {
            partitions: degenerate,
        });
    }
    Ok(walker.report)
}
