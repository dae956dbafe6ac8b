//! Identifiability for independent but not identically distributed components,
//! and for spherical / elliptical joint laws.

mod convolution;
mod elliptical;
mod fourth_moment;
mod gamma_gaussian;
mod partition;
mod scale;

use serde::{Deserialize, Serialize};

pub use convolution::{
    convolution_alternatives, ConvolutionCandidate, ConvolutionStatus, MAX_RELATION_SIZE,
};
pub use elliptical::{elliptical_points, elliptical_solution_set};
pub use fourth_moment::{
    fourth_moment_test, sign_flip_refine, FourthMomentBranch, FourthMomentReport,
    FourthMomentVerdict, SignFlipOutcome,
};
pub use gamma_gaussian::{gamma_gaussian_check, GammaGaussianOutcome};
pub use partition::{
    orbit_bound, recursive_partition_analysis, PartitionInvocation, PartitionReport,
};
pub use scale::{scale_family_envelope, scale_family_orbit};

/// Membership tolerance, relative with an absolute floor of 1.
pub const MEMBER_TOL: f64 = 1e-9;

/// Largest orbit that is listed element by element.
pub const MAX_ENUMERATED: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Qualifier {
    /// The description is the solution set.
    Exact,
    /// The description contains the solution set.
    Superset,
    /// The description is contained in the solution set.
    Subset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolutionSetKind {
    Singleton {
        beta: Vec<f64>,
    },
    /// Images of `beta0` under coordinate permutations (with rescaling) and sign masks.
    FiniteOrbit {
        permutations: Vec<Vec<usize>>,
        sign_masks: Vec<Vec<i8>>,
        /// Listed when the orbit has at most [`MAX_ENUMERATED`] elements.
        elements: Vec<Vec<f64>>,
    },
    Sphere {
        rho: f64,
    },
    /// `{beta : beta^T mu = c} ∩ {beta : |Sigma^{1/2} beta| = rho}`.
    EllipsoidHyperplane {
        mu: Vec<f64>,
        sigma: Vec<Vec<f64>>,
        c: f64,
        rho: f64,
    },
    BoundedCardinality {
        bound: u64,
    },
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSetDescription {
    #[serde(flatten)]
    pub kind: SolutionSetKind,
    pub qualifier: Qualifier,
}

pub fn close_vec(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= MEMBER_TOL * x.abs().max(y.abs()).max(1.0))
}

/// Appends `v` unless an equal vector is already present.
pub(crate) fn push_unique(set: &mut Vec<Vec<f64>>, v: Vec<f64>) {
    if !set.iter().any(|w| close_vec(w, &v)) {
        set.push(v);
    }
}

fn quad_form(sigma: &[Vec<f64>], beta: &[f64]) -> f64 {
    sigma
        .iter()
        .zip(beta)
        .map(|(row, bi)| bi * row.iter().zip(beta).map(|(s, bj)| s * bj).sum::<f64>())
        .sum()
}

impl SolutionSetDescription {
    pub fn new(kind: SolutionSetKind, qualifier: Qualifier) -> Self {
        SolutionSetDescription { kind, qualifier }
    }

    pub fn unknown() -> Self {
        Self::new(SolutionSetKind::Unknown, Qualifier::Superset)
    }

    /// Whether `beta` lies in the described set; `None` when the description has no predicate.
    pub fn contains(&self, beta: &[f64]) -> Option<bool> {
        match &self.kind {
            SolutionSetKind::Singleton { beta: b } => Some(close_vec(b, beta)),
            SolutionSetKind::FiniteOrbit { elements, .. } if !elements.is_empty() => {
                Some(elements.iter().any(|e| close_vec(e, beta)))
            }
            SolutionSetKind::Sphere { rho } => {
                let norm = beta.iter().map(|b| b * b).sum::<f64>().sqrt();
                Some((norm - rho).abs() <= MEMBER_TOL * rho.max(1.0))
            }
            SolutionSetKind::EllipsoidHyperplane { mu, sigma, c, rho } => {
                if mu.len() != beta.len() {
                    return Some(false);
                }
                let lin: f64 = mu.iter().zip(beta).map(|(m, b)| m * b).sum();
                let norm = quad_form(sigma, beta).max(0.0).sqrt();
                Some(
                    (lin - c).abs() <= MEMBER_TOL * c.abs().max(1.0)
                        && (norm - rho).abs() <= MEMBER_TOL * rho.max(1.0),
                )
            }
            _ => None,
        }
    }

    /// Number of elements when finite and known.
    pub fn cardinality(&self) -> Option<usize> {
        match &self.kind {
            SolutionSetKind::Singleton { .. } => Some(1),
            SolutionSetKind::FiniteOrbit { elements, .. } if !elements.is_empty() => {
                Some(elements.len())
            }
            _ => None,
        }
    }

    /// Elements when the set is finite and listed.
    pub fn elements(&self) -> Option<Vec<Vec<f64>>> {
        match &self.kind {
            SolutionSetKind::Singleton { beta } => Some(vec![beta.clone()]),
            SolutionSetKind::FiniteOrbit { elements, .. } if !elements.is_empty() => {
                Some(elements.clone())
            }
            _ => None,
        }
    }

    /// Whether the set is a continuum in dimension `d`.
    pub fn is_infinite(&self, d: usize) -> bool {
        match &self.kind {
            SolutionSetKind::Sphere { .. } => d >= 2,
            SolutionSetKind::EllipsoidHyperplane { mu, sigma, c, rho } => {
                matches!(elliptical_points(mu, sigma, *c, *rho), Ok(None))
            }
            _ => false,
        }
    }
}
