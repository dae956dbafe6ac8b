//! Alternatives built from distributional identities `X_j =d sum_{i in I} alpha_i X_i`.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::dist::{ClosureTag, ProblemSpec};

/// Largest index set `I` searched for a relation.
pub const MAX_RELATION_SIZE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvolutionStatus {
    /// `beta0` vanishes on `I`, so the substitution preserves the law of the form.
    Certified,
    /// The substituted variables also appear in the form; membership must be tested.
    NeedsOracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionCandidate {
    pub beta: Vec<f64>,
    /// Component replaced by the sum.
    pub target: usize,
    pub sources: Vec<usize>,
    pub alphas: Vec<f64>,
    pub status: ConvolutionStatus,
}

/// `alpha_i X_i` as a member of its closure class, with the scale chosen so
/// that gamma rates line up with the target's.
fn scaled_tag(tag: ClosureTag, target: &ClosureTag) -> Option<(f64, ClosureTag)> {
    match (tag, target) {
        (ClosureTag::GammaRate { rate, shape }, ClosureTag::GammaRate { rate: r0, .. }) => {
            Some((rate / r0, ClosureTag::GammaRate { rate: *r0, shape }))
        }
        (ClosureTag::Gaussian { .. }, ClosureTag::Gaussian { .. }) => Some((1.0, tag)),
        _ => None,
    }
}

/// Every `beta0 + delta` with `delta_j = -beta0_j`, `delta_i = alpha_i beta0_j`
/// for a detected relation `X_j =d sum alpha_i X_i`, `|I| <= 3`.
///
/// Gamma relations take `alpha_i = lambda_i / lambda_j` so that all rates
/// match and shapes must add up; Gaussian relations use unit coefficients.
pub fn convolution_alternatives(problem: &ProblemSpec) -> Vec<ConvolutionCandidate> {
    if !problem.is_independent() {
        return Vec::new();
    }
    let comps = problem.components();
    let beta0 = problem.beta0();
    let d = comps.len();
    let tags: Vec<Option<ClosureTag>> = comps.iter().map(|c| c.convolution_family_tag()).collect();
    let mut out = Vec::new();
    for j in 0..d {
        let Some(target) = tags[j] else { continue };
        if beta0[j] == 0.0 {
            continue;
        }
        let others: Vec<usize> = (0..d).filter(|&i| i != j && tags[i].is_some()).collect();
        for size in 1..=MAX_RELATION_SIZE.min(d - 1) {
            for subset in others.iter().copied().combinations(size) {
                let Some(scaled) = subset
                    .iter()
                    .map(|&i| scaled_tag(tags[i].unwrap(), &target))
                    .collect::<Option<Vec<_>>>()
                else {
                    continue;
                };
                let sum = scaled[1..]
                    .iter()
                    .try_fold(scaled[0].1, |acc, (_, t)| acc.combine(t));
                if !sum.is_some_and(|s| s.same_law(&target)) {
                    continue;
                }
                let alphas: Vec<f64> = scaled.iter().map(|(a, _)| *a).collect();
                let mut beta = beta0.to_vec();
                beta[j] = 0.0;
                for (&i, a) in subset.iter().zip(&alphas) {
                    beta[i] += a * beta0[j];
                }
                let status = if subset.iter().all(|&i| beta0[i] == 0.0) {
                    ConvolutionStatus::Certified
                } else {
                    ConvolutionStatus::NeedsOracle
                };
                out.push(ConvolutionCandidate {
                    beta,
                    target: j,
                    sources: subset,
                    alphas,
                    status,
                });
            }
        }
    }
    out
}
