//! Runs every applicable analyzer on a problem and merges their conclusions.
//!
//! Rules run in a fixed order: noise gate, elliptical laws, i.i.d. and
//! scale-family orbits, Gamma plus Gaussian, convolution identities, the
//! fourth-moment test (or its index-set extension), then the residual rule.
//! Finite supersets of the solution set are intersected; an exact infinite
//! set wins over everything else.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dist::{cholesky, standardize, DistributionSpec, ProblemSpec};
use crate::error::{IdentError, Result};
use crate::iid::{linnik_check, marcinkiewicz_verdict, LinnikReport, MarcinkiewiczVerdict};
use crate::moments::{moments_match_up_to, MomentTable};
use crate::noniid::{
    close_vec, convolution_alternatives, elliptical_points, elliptical_solution_set,
    fourth_moment_test, gamma_gaussian_check, recursive_partition_analysis, scale_family_envelope,
    scale_family_orbit, sign_flip_refine, ConvolutionCandidate, ConvolutionStatus,
    FourthMomentReport, FourthMomentVerdict, GammaGaussianOutcome, PartitionReport, Qualifier,
    SolutionSetDescription, SolutionSetKind,
};
use crate::oracle::{verify_candidate, Candidate, OracleConfig, OracleRecord};

/// Oracle runs per analysis, including the check of `beta0` itself.
pub const MAX_SPOT_CHECKS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum VerdictClass {
    Strong,
    Weak {
        bound: u64,
        set: SolutionSetDescription,
    },
    NonIdentifiable {
        witness: SolutionSetDescription,
    },
    Inconclusive {
        reasons: Vec<String>,
    },
}

impl VerdictClass {
    pub fn name(&self) -> &'static str {
        match self {
            VerdictClass::Strong => "Strong",
            VerdictClass::Weak { .. } => "Weak",
            VerdictClass::NonIdentifiable { .. } => "NonIdentifiable",
            VerdictClass::Inconclusive { .. } => "Inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiredRule {
    pub id: String,
    /// The mathematical result the rule applies.
    pub anchor: String,
    /// FNV-1a digest of the rule's inputs.
    pub digest: String,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedSet {
    pub source: String,
    pub set: SolutionSetDescription,
}

/// Outcome of moment matching for one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentScreen {
    pub candidate: Vec<f64>,
    pub first_mismatch: Option<usize>,
    pub orders_checked: usize,
    pub certified_member: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisDetails {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marcinkiewicz: Option<MarcinkiewiczVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linnik: Option<LinnikReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub solution_sets: Vec<NamedSet>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub moment_screen: Vec<MomentScreen>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_gaussian: Option<GammaGaussianOutcome>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub convolution: Vec<ConvolutionCandidate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fourth_moment: Option<FourthMomentReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifiabilityVerdict {
    #[serde(flatten)]
    pub class: VerdictClass,
    pub fired_rules: Vec<FiredRule>,
    pub oracle_evidence: Vec<OracleRecord>,
    pub details: AnalysisDetails,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
}

impl IdentifiabilityVerdict {
    pub fn is_strong(&self) -> bool {
        self.class == VerdictClass::Strong
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ *b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

fn digest<T: Serialize + ?Sized>(inputs: &T) -> String {
    let text = serde_json::to_string(inputs).unwrap_or_default();
    format!("{:016x}", fnv1a(text.as_bytes()))
}

struct Superset {
    source: &'static str,
    elements: Option<Vec<Vec<f64>>>,
    bound: u64,
}

#[derive(Default)]
struct Evidence {
    exact_infinite: Option<SolutionSetDescription>,
    supersets: Vec<Superset>,
    /// Analytically certified members, `beta0` first.
    members: Vec<Vec<f64>>,
    /// Alternatives certified to lie outside the set.
    excluded: Vec<Vec<f64>>,
    /// Candidates only the oracle can decide.
    undecided: Vec<Vec<f64>>,
    /// Points of an infinite witness set other than `beta0`.
    witnesses: Vec<Vec<f64>>,
    reasons: Vec<String>,
}

fn push_new(list: &mut Vec<Vec<f64>>, v: Vec<f64>) {
    if !list.iter().any(|w| close_vec(w, &v)) {
        list.push(v);
    }
}

fn contains(list: &[Vec<f64>], v: &[f64]) -> bool {
    list.iter().any(|w| close_vec(w, v))
}

struct Engine<'a> {
    problem: &'a ProblemSpec,
    fired: Vec<FiredRule>,
    details: AnalysisDetails,
    warnings: Vec<String>,
    notes: Vec<String>,
    ev: Evidence,
}

/// Anchors name the result each rule applies.
mod anchor {
    pub const NOISE: &str =
        "noise cancellation: characteristic function of eps without an interval of zeros";
    pub const SPHERICAL: &str = "spherical symmetry: B0 is the sphere of radius |beta0|";
    pub const ELLIPTICAL: &str =
        "elliptical symmetry: B0 = {beta^T mu = c} ∩ {|Sigma^(1/2) beta| = rho}";
    pub const MARCINKIEWICZ: &str =
        "Marcinkiewicz: |a| is a permutation of |b| or the common law is Gaussian";
    pub const LINNIK: &str = "Linnik: zeros of tau satisfying (A) and (B) force a Gaussian law";
    pub const SCALE: &str = "scale family: beta_j = (lambda_j / lambda_sigma(j)) beta0_sigma(j)";
    pub const MOMENTS: &str = "moment matching: <T^(m), beta^(⊗m)> = <T^(m), beta0^(⊗m)>";
    pub const GAMMA_GAUSSIAN: &str =
        "Gamma components plus a non-centred Gaussian with distinct shape subset sums";
    pub const CONVOLUTION: &str = "convolution closure: X_j =d sum_{i in I} alpha_i X_i";
    pub const FOURTH_MOMENT: &str =
        "fourth-moment test: min{w1, w2} < 1 leaves sign flips only, otherwise |B0| <= 8";
    pub const SIGN_FLIP: &str = "sign-flip refinement by moments of order 1 to 3";
    pub const PARTITION: &str = "fourth-moment test on index-set splits: |B0| <= d! 2^d";
    pub const RESIDUAL: &str = "no applicable result";
}

impl<'a> Engine<'a> {
    fn new(problem: &'a ProblemSpec) -> Self {
        let mut ev = Evidence::default();
        ev.members.push(problem.beta0().to_vec());
        Engine {
            problem,
            fired: Vec::new(),
            details: AnalysisDetails::default(),
            warnings: Vec::new(),
            notes: Vec::new(),
            ev,
        }
    }

    fn fire<T: Serialize + ?Sized>(&mut self, id: &str, anchor: &str, inputs: &T, summary: String) {
        self.fired.push(FiredRule {
            id: id.into(),
            anchor: anchor.into(),
            digest: digest(inputs),
            summary,
        });
    }

    fn beta0(&self) -> &'a [f64] {
        self.problem.beta0()
    }

    /// Returns false when analytic rules must stay silent.
    fn noise_gate(&mut self) -> bool {
        let Some(noise) = self.problem.noise() else {
            return true;
        };
        if noise.cf_zero_interval_free {
            self.fire(
                "noise-gate",
                anchor::NOISE,
                &noise.dist,
                "noise is admissible and cancels".into(),
            );
            true
        } else {
            self.fire(
                "noise-gate",
                anchor::NOISE,
                &noise.dist,
                "noise is not admissible; analytic rules skipped".into(),
            );
            self.ev
                .reasons
                .push("the noise characteristic function vanishes on an interval".into());
            false
        }
    }

    /// Joint elliptical laws and independent Gaussian components.
    fn elliptical(&mut self) -> Result<bool> {
        let d = self.problem.dim();
        let (mu, sigma) = match self.problem.joint_structure() {
            Some(joint) => {
                let (mu, s) = joint.location_scale(d);
                (
                    mu,
                    (0..d)
                        .map(|i| (0..d).map(|j| s[(i, j)]).collect::<Vec<f64>>())
                        .collect::<Vec<_>>(),
                )
            }
            None => {
                let comps = self.problem.components();
                if !self.problem.is_independent()
                    || !comps.iter().all(DistributionSpec::is_gaussian)
                {
                    return Ok(false);
                }
                let params: Vec<(f64, f64)> = comps
                    .iter()
                    .filter_map(DistributionSpec::as_gaussian)
                    .collect();
                let mu = params.iter().map(|p| p.0).collect();
                let sigma = (0..d)
                    .map(|i| {
                        (0..d)
                            .map(|j| if i == j { params[i].1 } else { 0.0 })
                            .collect()
                    })
                    .collect();
                (mu, sigma)
            }
        };
        let set = elliptical_solution_set(&mu, &sigma, self.beta0())?;
        let (id, anch) = match set.kind {
            SolutionSetKind::Sphere { .. } => ("spherical", anchor::SPHERICAL),
            _ => ("elliptical", anchor::ELLIPTICAL),
        };
        let (c, rho) = match &set.kind {
            SolutionSetKind::Sphere { rho } => (0.0, *rho),
            SolutionSetKind::EllipsoidHyperplane { c, rho, .. } => (*c, *rho),
            _ => unreachable!("elliptical sets are spheres or ellipsoid sections"),
        };
        match elliptical_points(&mu, &sigma, c, rho)? {
            None => {
                self.ev.witnesses = ellipse_witnesses(&mu, &sigma, self.beta0())?;
                self.fire(
                    id,
                    anch,
                    &(&mu, &sigma, self.beta0()),
                    format!("exact infinite solution set (rho = {rho})"),
                );
                self.ev.exact_infinite = Some(set.clone());
            }
            Some(points) => {
                let n = points.len();
                for p in &points {
                    push_new(&mut self.ev.members, p.clone());
                }
                self.fire(
                    id,
                    anch,
                    &(&mu, &sigma, self.beta0()),
                    format!("exact solution set with {n} point(s)"),
                );
                self.ev.supersets.push(Superset {
                    source: "elliptical",
                    elements: Some(points),
                    bound: n as u64,
                });
            }
        }
        self.details.solution_sets.push(NamedSet {
            source: id.into(),
            set,
        });
        Ok(true)
    }

    /// Moment screen of `candidates`; returns the survivors.
    fn screen(
        &mut self,
        candidates: &[Vec<f64>],
        certified: impl Fn(&[f64]) -> bool,
    ) -> Result<Vec<Vec<f64>>> {
        let table = MomentTable::available(self.problem.components())?;
        let orders = table.m_max();
        let mut survivors = Vec::new();
        for cand in candidates {
            let m = if orders == 0 {
                None
            } else {
                moments_match_up_to(&table, cand, self.beta0(), orders)?.first_mismatch
            };
            let member = m.is_none() && certified(cand);
            self.details.moment_screen.push(MomentScreen {
                candidate: cand.clone(),
                first_mismatch: m,
                orders_checked: orders,
                certified_member: member,
            });
            match (m, member) {
                (Some(_), _) => push_new(&mut self.ev.excluded, cand.clone()),
                (None, true) => {
                    push_new(&mut self.ev.members, cand.clone());
                    survivors.push(cand.clone());
                }
                (None, false) => {
                    push_new(&mut self.ev.undecided, cand.clone());
                    survivors.push(cand.clone());
                }
            }
        }
        Ok(survivors)
    }

    /// i.i.d. components and common scale families.
    fn orbits(&mut self) -> Result<()> {
        let p = self.problem;
        if !p.is_independent() {
            return Ok(());
        }
        let comps = p.components();
        let d = p.dim();
        let (lambdas, symmetric, all_moments, label) = if p.is_iid() {
            let c = &comps[0];
            (
                vec![1.0; d],
                c.is_symmetric_about_zero(),
                c.has_all_moments(),
                "iid",
            )
        } else {
            let members: Option<Vec<_>> =
                comps.iter().map(DistributionSpec::scale_family).collect();
            let Some(members) = members else {
                return Ok(());
            };
            if !members.windows(2).all(|w| w[0].same_family(&w[1])) {
                return Ok(());
            }
            let base = members[0].base;
            if base.is_gaussian() {
                return Ok(());
            }
            (
                members.iter().map(|m| m.lambda).collect(),
                base.is_symmetric(),
                base.has_all_moments(),
                "scale-family",
            )
        };
        if p.is_iid() {
            self.iid_probe(&comps[0])?;
        }
        if !all_moments {
            let reason = format!("{label}: the base law lacks moments of all orders; the orbit theorems do not apply");
            self.ev.reasons.push(reason);
            return Ok(());
        }
        let orbit = scale_family_orbit(p.beta0(), &lambdas, symmetric);
        let envelope = scale_family_envelope(p.beta0(), &lambdas);
        let (id, anch) = if p.is_iid() {
            ("iid-marcinkiewicz", anchor::MARCINKIEWICZ)
        } else {
            ("scale-family", anchor::SCALE)
        };
        match envelope.elements() {
            Some(elements) => {
                let survivors = self.screen(&elements, |b| orbit.contains(b) == Some(true))?;
                let n = survivors.len();
                self.fire(
                    id,
                    anch,
                    &(p.beta0(), &lambdas, symmetric),
                    format!("{n} orbit element(s) survive moment matching"),
                );
                self.fire(
                    "moment-screen",
                    anchor::MOMENTS,
                    &elements,
                    format!("{} of {} candidates survive", n, elements.len()),
                );
                self.ev.supersets.push(Superset {
                    source: "orbit",
                    elements: Some(survivors),
                    bound: n as u64,
                });
            }
            None => {
                let bound = crate::noniid::orbit_bound(d);
                self.fire(
                    id,
                    anch,
                    &(p.beta0(), &lambdas, symmetric),
                    format!("orbit too large to list; |B0| <= {bound}"),
                );
                self.ev.supersets.push(Superset {
                    source: "orbit",
                    elements: None,
                    bound,
                });
            }
        }
        self.details.solution_sets.push(NamedSet {
            source: format!("{label} orbit"),
            set: orbit,
        });
        self.details.solution_sets.push(NamedSet {
            source: format!("{label} envelope"),
            set: envelope,
        });
        Ok(())
    }

    /// Compares `beta0` with `(|beta0|, 0, ..., 0)`, the alternative with the same variance.
    fn iid_probe(&mut self, dist: &DistributionSpec) -> Result<()> {
        let b0 = self.beta0();
        let norm = b0.iter().map(|b| b * b).sum::<f64>().sqrt();
        let mut probe = vec![0.0; b0.len()];
        probe[0] = norm;
        if b0.iter().filter(|b| **b != 0.0).count() < 2 {
            return Ok(());
        }
        let m = marcinkiewicz_verdict(b0, &probe, dist);
        self.details.marcinkiewicz = Some(m);
        if m == MarcinkiewiczVerdict::GaussianForced && !dist.is_gaussian() {
            push_new(&mut self.ev.excluded, probe.clone());
        }
        match linnik_check(b0, &probe) {
            Ok(report) => {
                let summary = format!("beta0 against {probe:?}: {}", report.narrative);
                if report.applies && !dist.is_gaussian() {
                    push_new(&mut self.ev.excluded, probe.clone());
                }
                self.fire("iid-linnik", anchor::LINNIK, &(b0, &probe), summary);
                self.details.linnik = Some(report);
            }
            Err(e) if e.is_numeric_failure() => return Err(e),
            Err(e) => self
                .notes
                .push(format!("Linnik check on {probe:?} skipped: {e}")),
        }
        if !contains(&self.ev.excluded, &probe) && !dist.has_all_moments() {
            push_new(&mut self.ev.undecided, probe);
        }
        Ok(())
    }

    fn gamma_gaussian(&mut self) {
        let p = self.problem;
        if !p.is_independent() {
            return;
        }
        let comps = p.components();
        let has_gauss = comps.iter().any(DistributionSpec::is_gaussian);
        let has_gamma = comps.iter().any(|c| c.as_gamma().is_some());
        if !(has_gauss && has_gamma) {
            return;
        }
        let outcome = gamma_gaussian_check(p);
        match &outcome {
            GammaGaussianOutcome::Strong => {
                self.fire(
                    "gamma-gaussian",
                    anchor::GAMMA_GAUSSIAN,
                    comps,
                    "shape subset sums are distinct: B0 = {beta0}".into(),
                );
                self.ev.supersets.push(Superset {
                    source: "gamma-gaussian",
                    elements: Some(vec![p.beta0().to_vec()]),
                    bound: 1,
                });
            }
            GammaGaussianOutcome::SubsetSumCollision { i, j } => {
                self.fire(
                    "gamma-gaussian",
                    anchor::GAMMA_GAUSSIAN,
                    comps,
                    format!("shape sums collide on {i:?} and {j:?}; no conclusion"),
                );
            }
            GammaGaussianOutcome::PreconditionFailed { reason } => {
                self.notes.push(format!(
                    "Gamma plus Gaussian check not applicable: {reason}"
                ));
            }
        }
        self.details.gamma_gaussian = Some(outcome);
    }

    fn convolution(&mut self) {
        let cands = convolution_alternatives(self.problem);
        if cands.is_empty() {
            return;
        }
        let certified = cands
            .iter()
            .filter(|c| c.status == ConvolutionStatus::Certified)
            .count();
        for c in &cands {
            match c.status {
                ConvolutionStatus::Certified => push_new(&mut self.ev.members, c.beta.clone()),
                ConvolutionStatus::NeedsOracle => push_new(&mut self.ev.undecided, c.beta.clone()),
            }
        }
        let summary = format!("{} alternative(s), {certified} certified", cands.len());
        self.fire("convolution", anchor::CONVOLUTION, &cands, summary);
        self.details.convolution = cands;
    }

    fn fourth_moment(&mut self) -> Result<()> {
        let p = self.problem;
        if !p.is_independent() || p.dim() < 2 {
            return Ok(());
        }
        let fourth: Result<Vec<f64>> = p
            .components()
            .iter()
            .map(DistributionSpec::standardized_fourth_moment)
            .collect();
        let fourth = match fourth {
            Ok(f) => f,
            Err(e) => {
                self.notes.push(format!("fourth-moment test skipped: {e}"));
                return Ok(());
            }
        };
        if p.dim() > 2 {
            return self.partition();
        }
        let (std, scaling) = standardize(p)?;
        let g = std.beta0();
        let mut report = match fourth_moment_test(fourth[0], fourth[1], g[0], g[1]) {
            Ok(r) => r,
            Err(IdentError::PreconditionFailed(reason)) => {
                self.notes
                    .push(format!("fourth-moment test silent: {reason}"));
                return Ok(());
            }
            Err(e) => return Err(e),
        };
        let inputs = (fourth[0], fourth[1], g[0], g[1]);
        match report.verdict {
            FourthMomentVerdict::SignFlipsOnly => {
                self.fire(
                    "fourth-moment",
                    anchor::FOURTH_MOMENT,
                    &inputs,
                    "min{w1, w2} < 1: sign flips only".into(),
                );
                let refine = sign_flip_refine(p, &report)?;
                for (b, _) in &refine.eliminated {
                    push_new(&mut self.ev.excluded, b.clone());
                }
                let comps = p.components();
                let b0 = p.beta0();
                for s in &refine.survivors {
                    let harmless =
                        (0..2).all(|j| s[j] == b0[j] || comps[j].is_symmetric_about_zero());
                    if harmless {
                        push_new(&mut self.ev.members, s.clone());
                    } else {
                        push_new(&mut self.ev.undecided, s.clone());
                    }
                }
                let n = refine.survivors.len();
                self.fire(
                    "sign-flip-refine",
                    anchor::SIGN_FLIP,
                    &refine.survivors,
                    format!("{n} sign pattern(s) survive"),
                );
                self.ev.supersets.push(Superset {
                    source: "fourth-moment",
                    elements: Some(refine.survivors.clone()),
                    bound: n as u64,
                });
                report.refinement = Some(refine);
            }
            FourthMomentVerdict::AtMostEight => {
                let norm = g[0].hypot(g[1]);
                let cands: Vec<Vec<f64>> = report
                    .candidates(norm)
                    .iter()
                    .map(|c| scaling.to_original(c))
                    .collect();
                let comps = p.components();
                let b0 = p.beta0();
                let survivors = self.screen(&cands, |b| {
                    (0..2).all(|j| {
                        close_vec(&[b[j]], &[b0[j]])
                            || (close_vec(&[b[j]], &[-b0[j]]) && comps[j].is_symmetric_about_zero())
                    })
                })?;
                let n = survivors.len();
                self.fire(
                    "fourth-moment",
                    anchor::FOURTH_MOMENT,
                    &inputs,
                    format!("at most 8 candidates; {n} survive moment matching"),
                );
                self.ev.supersets.push(Superset {
                    source: "fourth-moment",
                    elements: Some(survivors),
                    bound: n as u64,
                });
            }
        }
        self.details.fourth_moment = Some(report);
        Ok(())
    }

    fn partition(&mut self) -> Result<()> {
        match recursive_partition_analysis(self.problem) {
            Ok(report) => {
                let bound = report.bound;
                self.fire(
                    "partition",
                    anchor::PARTITION,
                    self.problem.beta0(),
                    format!("{} invocations; |B0| <= {bound}", report.invocations.len()),
                );
                self.ev.supersets.push(Superset {
                    source: "partition",
                    elements: None,
                    bound,
                });
                self.details.partition = Some(report);
            }
            Err(IdentError::DegenerateInstance { partitions }) => {
                self.ev.reasons.push(format!(
                    "fourth-moment test degenerate on {}",
                    partitions.join(", ")
                ));
            }
            Err(e) if e.is_numeric_failure() => return Err(e),
            Err(e) => self.notes.push(format!("partition analysis skipped: {e}")),
        }
        Ok(())
    }

    fn resolve(&mut self) -> VerdictClass {
        let b0 = self.beta0().to_vec();
        if let Some(w) = &self.ev.exact_infinite {
            return VerdictClass::NonIdentifiable { witness: w.clone() };
        }
        if !self.ev.supersets.is_empty() {
            let listed: Vec<&Vec<Vec<f64>>> = self
                .ev
                .supersets
                .iter()
                .filter_map(|s| s.elements.as_ref())
                .collect();
            let min_bound = self
                .ev
                .supersets
                .iter()
                .map(|s| s.bound)
                .min()
                .unwrap_or(u64::MAX);
            let (elements, bound) = match listed.split_first() {
                Some((first, rest)) => {
                    let mut inter: Vec<Vec<f64>> = first
                        .iter()
                        .filter(|e| rest.iter().all(|r| contains(r, e)))
                        .cloned()
                        .collect();
                    if !contains(&inter, &b0) {
                        self.warnings.push(
                            "beta0 fell out of the intersected supersets; it is re-added".into(),
                        );
                        inter.insert(0, b0.clone());
                    }
                    let n = inter.len() as u64;
                    (Some(inter), n.min(min_bound))
                }
                None => (None, min_bound),
            };
            if bound <= 1 {
                return VerdictClass::Strong;
            }
            let sources: Vec<&str> = self.ev.supersets.iter().map(|s| s.source).collect();
            self.notes.push(format!(
                "finite supersets intersected from: {}",
                sources.join(", ")
            ));
            let set = match elements {
                Some(elements) if elements.len() as u64 == bound => {
                    let exact = elements.iter().all(|e| contains(&self.ev.members, e));
                    let q = if exact {
                        Qualifier::Exact
                    } else {
                        Qualifier::Superset
                    };
                    SolutionSetDescription::new(
                        SolutionSetKind::FiniteOrbit {
                            permutations: Vec::new(),
                            sign_masks: Vec::new(),
                            elements,
                        },
                        q,
                    )
                }
                _ => SolutionSetDescription::new(
                    SolutionSetKind::BoundedCardinality { bound },
                    Qualifier::Superset,
                ),
            };
            return VerdictClass::Weak { bound, set };
        }
        let mut reasons = std::mem::take(&mut self.ev.reasons);
        if self.ev.members.len() >= 2 {
            reasons.push(format!(
                "B0 has at least {} certified elements, but no finite bound applies",
                self.ev.members.len()
            ));
        }
        if reasons.is_empty() {
            reasons.push("no analytic rule applies to this instance".into());
        }
        self.fire(
            "residual",
            anchor::RESIDUAL,
            self.problem,
            "verdict left open".into(),
        );
        VerdictClass::Inconclusive { reasons }
    }

    fn spot_candidates(&self, class: &VerdictClass) -> Vec<Vec<f64>> {
        let mut out = vec![self.beta0().to_vec()];
        let ev = &self.ev;
        let order: Vec<&Vec<Vec<f64>>> = match class {
            VerdictClass::NonIdentifiable { .. } => vec![&ev.witnesses, &ev.undecided],
            VerdictClass::Strong => vec![&ev.excluded, &ev.undecided, &ev.members],
            _ => vec![&ev.undecided, &ev.members, &ev.excluded],
        };
        for list in order {
            for c in list {
                if out.len() < MAX_SPOT_CHECKS {
                    push_new(&mut out, c.clone());
                }
            }
        }
        out
    }

    fn spot_check(
        &mut self,
        class: VerdictClass,
        config: &OracleConfig,
    ) -> (VerdictClass, Vec<OracleRecord>) {
        let mut records = Vec::new();
        for cand in self.spot_candidates(&class) {
            match verify_candidate(self.problem, &cand, config) {
                Ok(r) => records.push(r),
                Err(e) => {
                    self.warnings.push(format!("oracle unavailable: {e}"));
                    return (class, records);
                }
            }
        }
        let b0 = self.beta0().to_vec();
        let mut class = class;
        for r in &records {
            let Candidate::Vector(c) = &r.candidate else {
                continue;
            };
            let is_b0 = close_vec(c, &b0);
            if is_b0 && !r.accepted() {
                self.warnings.push(format!(
                    "oracle rejected beta0 itself (p = {}); a false rejection",
                    r.p_value
                ));
            } else if !is_b0 && r.accepted() {
                if contains(&self.ev.excluded, c) {
                    self.warnings.push(format!(
                        "oracle accepted {c:?}, which is analytically excluded (low power?)"
                    ));
                } else if class == VerdictClass::Strong {
                    self.warnings.push(format!(
                        "oracle accepted {c:?}; the Strong verdict is withdrawn"
                    ));
                    class = VerdictClass::Inconclusive {
                        reasons: vec![format!(
                            "analytic rules gave Strong but the oracle accepts {c:?}"
                        )],
                    };
                } else if contains(&self.ev.undecided, c) {
                    self.notes
                        .push(format!("oracle supports membership of {c:?}"));
                }
            } else if !is_b0 && contains(&self.ev.members, c) {
                self.warnings.push(format!(
                    "oracle rejected certified member {c:?} (p = {})",
                    r.p_value
                ));
            }
        }
        (class, records)
    }

    fn conjecture_note(&mut self, class: &VerdictClass) {
        if !matches!(class, VerdictClass::Inconclusive { .. }) || !self.problem.is_independent() {
            return;
        }
        let comps = self.problem.components();
        let unit = comps
            .iter()
            .all(|c| c.variance().is_ok_and(|v| (v - 1.0).abs() <= 1e-9));
        let gaussians = comps.iter().filter(|c| c.is_gaussian()).count();
        if unit && gaussians <= 1 {
            self.notes.push(
                "conjecture (not used for the verdict): with unit-variance components and at most one \
                 Gaussian, B0 is expected to contain only sign flips of beta0"
                    .into(),
            );
        }
    }
}

/// Points of `{beta^T mu = c} ∩ {|L^T beta| = rho}` other than `beta0`,
/// obtained by a quarter turn of `beta0` about the section's centre.
fn ellipse_witnesses(mu: &[f64], sigma: &[Vec<f64>], beta0: &[f64]) -> Result<Vec<Vec<f64>>> {
    let d = beta0.len();
    let l = cholesky(&DMatrix::from_fn(d, d, |i, j| sigma[i][j]))?;
    let u0 = l.transpose() * DVector::from_column_slice(beta0);
    let v = l
        .solve_lower_triangular(&DVector::from_column_slice(mu))
        .expect("Cholesky factor is invertible");
    let vv = v.norm_squared();
    let center = if vv > 0.0 {
        &v * (u0.dot(&v) / vv)
    } else {
        DVector::zeros(d)
    };
    let w = &u0 - &center;
    let r = w.norm();
    if r == 0.0 {
        return Ok(Vec::new());
    }
    let mut basis: Vec<DVector<f64>> = vec![&w / r];
    if vv > 0.0 {
        basis.push(&v / vv.sqrt());
    }
    let mut best: Option<DVector<f64>> = None;
    for k in 0..d {
        let mut e = DVector::zeros(d);
        e[k] = 1.0;
        for b in &basis {
            e -= b * e.dot(b);
        }
        if best.as_ref().is_none_or(|x| e.norm() > x.norm()) {
            best = Some(e);
        }
    }
    let back = |u: DVector<f64>| -> Vec<f64> {
        l.transpose()
            .solve_upper_triangular(&u)
            .expect("Cholesky factor is invertible")
            .iter()
            .copied()
            .collect()
    };
    match best {
        Some(e) if e.norm() > 1e-8 => {
            let e = e.normalize();
            Ok(vec![back(&center + &e * r), back(&center - &e * r)])
        }
        _ => Ok(vec![back(&center - &w)]),
    }
}

fn run(problem: &ProblemSpec, oracle: Option<&OracleConfig>) -> Result<IdentifiabilityVerdict> {
    if let Some(config) = oracle {
        config.validate()?;
    }
    let mut e = Engine::new(problem);
    if e.noise_gate() && !e.elliptical()? {
        e.orbits()?;
        e.gamma_gaussian();
        e.convolution();
        e.fourth_moment()?;
    }
    let class = e.resolve();
    let (class, oracle_evidence) = match oracle {
        Some(config) => e.spot_check(class, config),
        None => (class, Vec::new()),
    };
    e.conjecture_note(&class);
    let Engine {
        fired,
        details,
        warnings,
        notes,
        ..
    } = e;
    Ok(IdentifiabilityVerdict {
        class,
        fired_rules: fired,
        oracle_evidence,
        details,
        warnings,
        notes,
    })
}

/// Full analysis with oracle spot checks of the analytic claims.
pub fn analyze(problem: &ProblemSpec, oracle: &OracleConfig) -> Result<IdentifiabilityVerdict> {
    run(problem, Some(oracle))
}

/// Analytic rules only.
pub fn analyze_analytic(problem: &ProblemSpec) -> Result<IdentifiabilityVerdict> {
    run(problem, None)
}
