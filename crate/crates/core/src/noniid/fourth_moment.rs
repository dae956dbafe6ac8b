//! The two-component fourth-moment test and its odd-moment sign refinement.
//!
//! For standardized `Z_1, Z_2` with fourth moments `m1, m2`, any
//! `(gamma, delta)` on the unit circle with `gamma Z_1 + delta Z_2 =d
//! alpha_u Z_1 + beta_u Z_2` has `x = gamma^2` solving
//! `(w1 + w2) x^2 - 2 w2 x + w2 - 1 = 0`. One admissible root leaves only sign
//! flips; two leave at most eight candidates.

use serde::{Deserialize, Serialize};

use super::push_unique;
use crate::dist::ProblemSpec;
use crate::error::{IdentError, Result};
use crate::moments::{moments_match_up_to, MomentTable};

/// Slack allowed outside `[0, 1]` before a root is discarded.
const BOUNDARY_TOL: f64 = 1e-10;
const C3_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FourthMomentBranch {
    CEqualsThree,
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FourthMomentVerdict {
    SignFlipsOnly,
    AtMostEight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignFlipOutcome {
    pub survivors: Vec<Vec<f64>>,
    /// Rejected sign patterns with the first moment order that separates them.
    pub eliminated: Vec<(Vec<f64>, usize)>,
    /// Highest moment order consulted.
    pub orders_checked: usize,
}

impl SignFlipOutcome {
    pub fn is_singleton(&self) -> bool {
        self.survivors.len() == 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourthMomentReport {
    pub m1: f64,
    pub m2: f64,
    pub alpha_u: f64,
    pub beta_u: f64,
    pub c: f64,
    /// `(m1 - 3) / (c - 3)`; absent on the `c = 3` branch.
    pub w1: Option<f64>,
    pub w2: Option<f64>,
    pub delta1: f64,
    pub delta2: f64,
    pub branch: FourthMomentBranch,
    /// All real roots of the quadratic.
    pub raw_roots: Vec<f64>,
    /// Distinct roots in `[0, 1]`.
    pub roots_x: Vec<f64>,
    pub verdict: FourthMomentVerdict,
    pub refinement: Option<SignFlipOutcome>,
}

impl FourthMomentReport {
    /// Every `(±sqrt(x), ±sqrt(1-x))` scaled by `norm`, in standardized coordinates.
    pub fn candidates(&self, norm: f64) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for &x in &self.roots_x {
            let (g, h) = (x.sqrt() * norm, (1.0 - x).sqrt() * norm);
            for (s1, s2) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                push_unique(&mut out, vec![s1 * g, s2 * h]);
            }
        }
        out
    }
}

/// Real roots of `a x^2 + b x + c`, avoiding cancellation.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() <= 1e-14 * scale {
        return if b == 0.0 { Vec::new() } else { vec![-c / b] };
    }
    let mut disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        if disc >= -1e-12 * (b * b + (4.0 * a * c).abs()) {
            disc = 0.0;
        } else {
            return Vec::new();
        }
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0, 0.0];
    }
    vec![q / a, c / q]
}

pub fn fourth_moment_test(m1: f64, m2: f64, alpha: f64, beta: f64) -> Result<FourthMomentReport> {
    if ![m1, m2, alpha, beta].iter().all(|v| v.is_finite()) {
        return Err(IdentError::InvalidParameter(
            "fourth-moment inputs must be finite".into(),
        ));
    }
    let norm = alpha.hypot(beta);
    if norm == 0.0 {
        return Err(IdentError::PreconditionFailed(
            "(alpha, beta) = (0, 0)".into(),
        ));
    }
    let (delta1, delta2) = (m1 - 3.0, m2 - 3.0);
    if delta1.abs() <= 1e-12 * 3.0 && delta2.abs() <= 1e-12 * 3.0 {
        return Err(IdentError::PreconditionFailed(
            "both fourth moments equal 3; the test is silent (Gaussian-like pair)".into(),
        ));
    }
    let (alpha_u, beta_u) = (alpha / norm, beta / norm);
    let (a2, b2) = (alpha_u * alpha_u, beta_u * beta_u);
    let c = a2 * a2 * m1 + b2 * b2 * m2 + 6.0 * a2 * b2;
    let c3 = c - 3.0;
    let branch = if c3.abs() <= C3_TOL {
        FourthMomentBranch::CEqualsThree
    } else {
        FourthMomentBranch::Generic
    };
    let (w1, w2) = match branch {
        FourthMomentBranch::Generic => (Some(delta1 / c3), Some(delta2 / c3)),
        FourthMomentBranch::CEqualsThree => (None, None),
    };
    // (Δ1 + Δ2) x^2 - 2 Δ2 x + Δ2 - (c - 3) = 0, i.e. the normalized quadratic times (c - 3).
    let offset = if branch == FourthMomentBranch::CEqualsThree {
        0.0
    } else {
        c3
    };
    let mut raw_roots = quadratic_roots(delta1 + delta2, -2.0 * delta2, delta2 - offset);
    raw_roots.sort_by(f64::total_cmp);
    let mut roots_x: Vec<f64> = Vec::new();
    for &r in &raw_roots {
        if (-BOUNDARY_TOL..=1.0 + BOUNDARY_TOL).contains(&r) {
            let r = r.clamp(0.0, 1.0);
            if !roots_x.iter().any(|x| (x - r).abs() <= 1e-9) {
                roots_x.push(r);
            }
        }
    }
    debug_assert!(
        roots_x.iter().any(|x| (x - a2).abs() <= 1e-6),
        "true root {a2} missing from {roots_x:?}"
    );
    let verdict = match roots_x.len() {
        0 | 1 => FourthMomentVerdict::SignFlipsOnly,
        _ => FourthMomentVerdict::AtMostEight,
    };
    Ok(FourthMomentReport {
        m1,
        m2,
        alpha_u,
        beta_u,
        c,
        w1,
        w2,
        delta1,
        delta2,
        branch,
        raw_roots,
        roots_x,
        verdict,
        refinement: None,
    })
}

/// Keeps the sign patterns of `beta0` whose moments of order 1..=3 match,
/// evaluated on the original (not standardized) components.
pub fn sign_flip_refine(
    problem: &ProblemSpec,
    report: &FourthMomentReport,
) -> Result<SignFlipOutcome> {
    if report.verdict != FourthMomentVerdict::SignFlipsOnly {
        return Err(IdentError::PreconditionUnmet(
            "refinement needs a sign-flips-only report".into(),
        ));
    }
    if problem.dim() != 2 || !problem.is_independent() {
        return Err(IdentError::PreconditionUnmet(
            "refinement needs two independent components".into(),
        ));
    }
    let beta0 = problem.beta0();
    let mut patterns = Vec::new();
    for (s1, s2) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        push_unique(&mut patterns, vec![s1 * beta0[0], s2 * beta0[1]]);
    }
    let table = MomentTable::available(problem.components())?;
    let orders = table.m_max().min(3);
    let mut survivors = Vec::new();
    let mut eliminated = Vec::new();
    for beta in patterns {
        let m = moments_match_up_to(&table, &beta, beta0, orders)?;
        match m.first_mismatch {
            None => survivors.push(beta),
            Some(order) => eliminated.push((beta, order)),
        }
    }
    Ok(SignFlipOutcome {
        survivors,
        eliminated,
        orders_checked: orders,
    })
}
