//! Orbits for components drawn from one scale family `{lambda f(lambda x)}`.

use itertools::Itertools;

use super::{push_unique, Qualifier, SolutionSetDescription, SolutionSetKind, MAX_ENUMERATED};

fn all_masks(d: usize) -> Vec<Vec<i8>> {
    (0..1usize << d)
        .map(|m| {
            (0..d)
                .map(|j| if m >> j & 1 == 1 { -1 } else { 1 })
                .collect()
        })
        .collect()
}

fn orbit_size(d: usize, signed: bool) -> Option<usize> {
    let perms = (1..=d).try_fold(1usize, |acc, k| acc.checked_mul(k))?;
    if signed {
        perms.checked_mul(1usize.checked_shl(d as u32)?)
    } else {
        Some(perms)
    }
}

fn orbit(beta0: &[f64], lambdas: &[f64], signed: bool) -> SolutionSetKind {
    let d = beta0.len();
    let masks = if signed {
        all_masks(d)
    } else {
        vec![vec![1; d]]
    };
    let enumerable = orbit_size(d, signed).is_some_and(|n| n <= MAX_ENUMERATED);
    let mut permutations = Vec::new();
    let mut elements = Vec::new();
    if enumerable {
        for sigma in (0..d).permutations(d) {
            let base: Vec<f64> = (0..d)
                .map(|j| lambdas[j] / lambdas[sigma[j]] * beta0[sigma[j]])
                .collect();
            for s in &masks {
                push_unique(
                    &mut elements,
                    base.iter().zip(s).map(|(b, s)| b * *s as f64).collect(),
                );
            }
            permutations.push(sigma);
        }
    }
    SolutionSetKind::FiniteOrbit {
        permutations,
        sign_masks: masks,
        elements,
    }
}

/// `beta_j = (lambda_j / lambda_sigma(j)) beta0_sigma(j)` over all permutations,
/// with every sign mask when the base law is symmetric.
///
/// For a symmetric base this is the solution set. Otherwise the listed
/// vectors belong to it and [`scale_family_envelope`] bounds it from above.
pub fn scale_family_orbit(
    beta0: &[f64],
    lambdas: &[f64],
    symmetric: bool,
) -> SolutionSetDescription {
    let qualifier = if symmetric {
        Qualifier::Exact
    } else {
        Qualifier::Subset
    };
    SolutionSetDescription::new(orbit(beta0, lambdas, symmetric), qualifier)
}

/// The sign-closed orbit, which always contains the solution set.
pub fn scale_family_envelope(beta0: &[f64], lambdas: &[f64]) -> SolutionSetDescription {
    SolutionSetDescription::new(orbit(beta0, lambdas, true), Qualifier::Superset)
}
