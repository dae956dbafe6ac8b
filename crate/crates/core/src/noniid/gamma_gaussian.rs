//! Strong identifiability for Gamma components plus one non-centered Gaussian.

use serde::{Deserialize, Serialize};

use crate::dist::ProblemSpec;

/// Subset sums are enumerated up to this many Gamma components.
const MAX_GAMMA_COMPONENTS: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum GammaGaussianOutcome {
    Strong,
    /// Two distinct index sets (zero-based) whose shapes have equal sums.
    SubsetSumCollision {
        i: Vec<usize>,
        j: Vec<usize>,
    },
    PreconditionFailed {
        reason: String,
    },
}

fn members(mask: usize, index: &[usize]) -> Vec<usize> {
    index
        .iter()
        .enumerate()
        .filter(|(b, _)| mask >> b & 1 == 1)
        .map(|(_, &i)| i)
        .collect()
}

/// `B0 = {beta0}` when all subset sums of the Gamma shapes are distinct.
///
/// The Gaussian may sit at any position; exponentials count as Gamma with shape 1.
pub fn gamma_gaussian_check(problem: &ProblemSpec) -> GammaGaussianOutcome {
    let fail = |reason: &str| GammaGaussianOutcome::PreconditionFailed {
        reason: reason.to_string(),
    };
    if !problem.is_independent() {
        return fail("components are not independent");
    }
    let comps = problem.components();
    if comps.len() < 3 {
        return fail("needs at least three components");
    }
    let gaussians: Vec<usize> = (0..comps.len())
        .filter(|&i| comps[i].is_gaussian())
        .collect();
    if gaussians.len() != 1 {
        return fail("needs exactly one Gaussian component");
    }
    let (mean, _) = comps[gaussians[0]].as_gaussian().expect("checked above");
    if mean == 0.0 {
        return fail("the Gaussian component must have non-zero mean");
    }
    let mut index = Vec::new();
    let mut shapes = Vec::new();
    for (i, c) in comps.iter().enumerate() {
        if i == gaussians[0] {
            continue;
        }
        match c.as_gamma() {
            Some((shape, _)) => {
                index.push(i);
                shapes.push(shape);
            }
            None => return fail("every non-Gaussian component must be Gamma"),
        }
    }
    if shapes.len() > MAX_GAMMA_COMPONENTS {
        return fail("too many Gamma components to enumerate subset sums");
    }
    let all: Vec<usize> = (0..shapes.len()).collect();
    let mut sums: Vec<(f64, usize)> = (1..1usize << shapes.len())
        .map(|mask| (members(mask, &all).iter().map(|&b| shapes[b]).sum(), mask))
        .collect();
    sums.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    // Scanning masks in increasing order, the first collision is met at the
    // smallest second member of any group of equal sums.
    let mut best: Option<(usize, usize)> = None;
    for group in sums.chunk_by(|a, b| (a.0 - b.0).abs() <= 1e-12 * a.0.abs().max(b.0.abs())) {
        if group.len() >= 2 {
            let mut masks: Vec<usize> = group.iter().map(|s| s.1).collect();
            masks.sort_unstable();
            if best.is_none_or(|b| masks[1] < b.1) {
                best = Some((masks[0], masks[1]));
            }
        }
    }
    match best {
        None => GammaGaussianOutcome::Strong,
        Some((a, b)) => GammaGaussianOutcome::SubsetSumCollision {
            i: members(a, &index),
            j: members(b, &index),
        },
    }
}
