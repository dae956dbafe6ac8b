//! Identifiability analysis for unlinked linear regression.
//!
//! In the unlinked model only the marginal laws of the covariates `X` and of
//! the response `Y = beta0^T X + eps` are observed, so `beta0` can at best be
//! recovered up to the set `{beta : beta^T X =d beta0^T X}`. This crate
//! decides, for a given instance, whether that set is a single point, a finite
//! set, or infinite, and when the theory is silent it samples both sides and
//! runs a two-sample test.

pub mod dist;
pub mod error;
pub mod ica;
pub mod iid;
pub mod moments;
pub mod noniid;
pub mod oracle;
pub mod report;
pub mod verdict;

pub use dist::{
    noise_admissible, standardize, ClosureTag, DistributionSpec, Family, JointStructure, NoiseSpec,
    ProblemSpec, ScaleBase, ScaleMember, ScalingRecord, SphericalGenerator, MAX_MOMENT_ORDER,
};
pub use error::{IdentError, Result};
pub use ica::{
    collapse_counterexample, ica_report, ica_verdict, pairwise_dependent_columns, ColumnDependence,
    IcaReport, IcaVerdict, MixingProblem,
};
pub use moments::{moments_match_up_to, projected_moment, MomentMatch, MomentTable};
pub use oracle::{
    two_sample_test, verify_candidate, verify_joint, Candidate, Decision, OracleConfig,
    OracleRecord, Statistic, TestOutcome,
};
pub use report::{
    analyze_task, render_text, tau_report, ConfigFile, ReportDocument, Task, SCHEMA_VERSION,
};
pub use verdict::{analyze, analyze_analytic, IdentifiabilityVerdict, VerdictClass};
