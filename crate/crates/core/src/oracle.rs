//! Two-sample permutation tests of `beta^T X =d beta0^T X` on simulated draws.
//!
//! Univariate samples use the energy distance, computed in `O(N)` per
//! permutation from one sort of the pooled sample. Vector samples use the
//! average energy distance over fixed random projections. The empirical
//! characteristic function distance is available for heavy tails.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dist::{cholesky, DistributionSpec, JointStructure, ProblemSpec, SphericalGenerator};
use crate::error::{IdentError, Result};
use crate::ica::MixingProblem;

/// Upper bound on `units * permutations * pooled size`.
pub const WORK_CAP: f64 = 4e8;
/// Projection directions (energy) or frequencies (ECF) for vector samples.
pub const PROJECTIONS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Statistic {
    #[default]
    EnergyDistance,
    /// Gaussian weight with standard deviation `weight_scale` in frequency space.
    EcfDistance { weight_scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub n: usize,
    pub permutations: usize,
    pub significance: f64,
    pub seed: u64,
    pub statistic: Statistic,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            n: 100_000,
            permutations: 200,
            significance: 0.01,
            seed: 0,
            statistic: Statistic::EnergyDistance,
        }
    }
}

impl OracleConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        OracleConfig { seed, ..self }
    }

    pub fn with_n(self, n: usize) -> Self {
        OracleConfig { n, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 100 {
            return Err(IdentError::Config(format!(
                "oracle n = {} is below 100",
                self.n
            )));
        }
        if self.permutations < 50 {
            return Err(IdentError::Config(format!(
                "{} permutations is below 50",
                self.permutations
            )));
        }
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return Err(IdentError::Config(format!(
                "significance {} is not in (0, 1)",
                self.significance
            )));
        }
        if let Statistic::EcfDistance { weight_scale } = self.statistic {
            if !(weight_scale > 0.0 && weight_scale.is_finite()) {
                return Err(IdentError::Config(
                    "ECF weight scale must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Candidate {
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub candidate: Candidate,
    pub decision: Decision,
    pub p_value: f64,
    pub statistic: f64,
    pub statistic_kind: Statistic,
    pub n: usize,
    /// Draws per side after the work cap.
    pub n_used: usize,
    pub permutations: usize,
    pub significance: f64,
    pub seed: u64,
    pub subsampled: bool,
}

impl OracleRecord {
    pub fn accepted(&self) -> bool {
        self.decision == Decision::Accept
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
    pub n_used: usize,
    pub subsampled: bool,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sub-stream `(stream, index)`.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ stream) ^ index)
}

fn rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, index))
}

const STREAM_PERMUTATION: u64 = 2;
const STREAM_DIRECTIONS: u64 = 3;
const NOISE_INDEX: u64 = u64::MAX;

/// Pooled sample reduced to one or more univariate views.
enum Pooled {
    /// Per view: sorted values, original indices and `sum_{a<b} |z_a - z_b|`.
    Energy {
        views: Vec<(Vec<f64>, Vec<u32>, f64)>,
    },
    /// Per frequency: `cos` and `sin` of `<t, z_a>` plus their totals.
    Ecf {
        cos: Vec<Vec<f64>>,
        sin: Vec<Vec<f64>>,
        totals: Vec<(f64, f64)>,
    },
}

fn gaussian_vector(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn project(points: &[f64], dim: usize, dir: &[f64]) -> Vec<f64> {
    points
        .chunks_exact(dim)
        .map(|p| p.iter().zip(dir).map(|(a, b)| a * b).sum())
        .collect()
}

impl Pooled {
    fn build(points: &[f64], dim: usize, statistic: Statistic, seed: u64) -> Pooled {
        let mut dir_rng = rng(seed, STREAM_DIRECTIONS, 0);
        match statistic {
            Statistic::EnergyDistance => {
                let dirs: Vec<Vec<f64>> = if dim == 1 {
                    vec![vec![1.0]]
                } else {
                    (0..PROJECTIONS)
                        .map(|_| {
                            let v = gaussian_vector(&mut dir_rng, dim, 1.0);
                            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                            v.into_iter().map(|x| x / norm).collect()
                        })
                        .collect()
                };
                let views = dirs
                    .iter()
                    .map(|dir| {
                        let z = project(points, dim, dir);
                        let mut order: Vec<u32> = (0..z.len() as u32).collect();
                        order.sort_unstable_by(|&a, &b| z[a as usize].total_cmp(&z[b as usize]));
                        let sorted: Vec<f64> = order.iter().map(|&i| z[i as usize]).collect();
                        let n = sorted.len() as f64;
                        let total = sorted
                            .iter()
                            .enumerate()
                            .map(|(a, v)| v * (2.0 * a as f64 + 1.0 - n))
                            .sum();
                        (sorted, order, total)
                    })
                    .collect();
                Pooled::Energy { views }
            }
            Statistic::EcfDistance { weight_scale } => {
                let mut cos = Vec::with_capacity(PROJECTIONS);
                let mut sin = Vec::with_capacity(PROJECTIONS);
                let mut totals = Vec::with_capacity(PROJECTIONS);
                for _ in 0..PROJECTIONS {
                    let t = gaussian_vector(&mut dir_rng, dim, weight_scale);
                    let z = project(points, dim, &t);
                    let c: Vec<f64> = z.iter().map(|v| v.cos()).collect();
                    let s: Vec<f64> = z.iter().map(|v| v.sin()).collect();
                    totals.push((c.iter().sum(), s.iter().sum()));
                    cos.push(c);
                    sin.push(s);
                }
                Pooled::Ecf { cos, sin, totals }
            }
        }
    }

    fn units(statistic: Statistic, dim: usize) -> usize {
        match statistic {
            Statistic::EnergyDistance if dim == 1 => 1,
            _ => PROJECTIONS,
        }
    }

    /// Statistic for a labelling (`false` = first sample) with group sizes `nx`, `ny`.
    fn statistic(&self, labels: &[bool], nx: usize, ny: usize) -> f64 {
        let (fx, fy) = (nx as f64, ny as f64);
        let scale = fx * fy / (fx + fy);
        match self {
            Pooled::Energy { views } => {
                let sizes = [fx, fy];
                let mut sum = 0.0;
                for (sorted, order, total) in views {
                    let mut count = [0.0f64; 2];
                    let mut within = [0.0f64; 2];
                    for (v, &i) in sorted.iter().zip(order) {
                        let l = labels[i as usize] as usize;
                        count[l] += 1.0;
                        within[l] += v * (2.0 * count[l] - sizes[l] - 1.0);
                    }
                    let cross = total - within[0] - within[1];
                    sum += 2.0 * cross / (fx * fy)
                        - 2.0 * within[0] / (fx * fx)
                        - 2.0 * within[1] / (fy * fy);
                }
                scale * sum / views.len() as f64
            }
            Pooled::Ecf { cos, sin, totals } => {
                let members: Vec<usize> = (0..labels.len()).filter(|&a| !labels[a]).collect();
                let mut sum = 0.0;
                for ((c, s), (ct, st)) in cos.iter().zip(sin).zip(totals) {
                    let cx: f64 = members.iter().map(|&a| c[a]).sum();
                    let sx: f64 = members.iter().map(|&a| s[a]).sum();
                    let dc = cx / fx - (ct - cx) / fy;
                    let ds = sx / fx - (st - sx) / fy;
                    sum += dc * dc + ds * ds;
                }
                scale * sum / cos.len() as f64
            }
        }
    }
}

/// Permutation test on two row-major point clouds in dimension `dim`.
///
/// When `units * permutations * (nx + ny)` exceeds [`WORK_CAP`], both samples
/// are truncated to a common prefix; the draws are i.i.d., so a prefix is a
/// seeded subsample.
pub fn two_sample_test(
    x: &[f64],
    y: &[f64],
    dim: usize,
    config: &OracleConfig,
) -> Result<TestOutcome> {
    if dim == 0 || x.len() % dim != 0 || y.len() % dim != 0 || x.is_empty() || y.is_empty() {
        return Err(IdentError::Validation(
            "samples must be non-empty and match the dimension".into(),
        ));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(IdentError::Validation(
            "samples contain non-finite values".into(),
        ));
    }
    let units = Pooled::units(config.statistic, dim) as f64;
    let cap = (WORK_CAP / (units * config.permutations.max(1) as f64 * 2.0)).floor() as usize;
    let (mut nx, mut ny) = (x.len() / dim, y.len() / dim);
    let subsampled = nx > cap || ny > cap;
    if subsampled {
        nx = nx.min(cap);
        ny = ny.min(cap);
    }
    let mut points = Vec::with_capacity((nx + ny) * dim);
    points.extend_from_slice(&x[..nx * dim]);
    points.extend_from_slice(&y[..ny * dim]);
    let pooled = Pooled::build(&points, dim, config.statistic, config.seed);

    let canonical: Vec<bool> = (0..nx + ny).map(|a| a >= nx).collect();
    let observed = pooled.statistic(&canonical, nx, ny);
    let mut exceed = 0usize;
    let mut labels = canonical.clone();
    for r in 0..config.permutations {
        labels.copy_from_slice(&canonical);
        labels.shuffle(&mut rng(config.seed, STREAM_PERMUTATION, r as u64));
        if pooled.statistic(&labels, nx, ny) >= observed {
            exceed += 1;
        }
    }
    let p_value = (1 + exceed) as f64 / (config.permutations + 1) as f64;
    Ok(TestOutcome {
        statistic: observed,
        p_value,
        n_used: nx.min(ny),
        subsampled,
    })
}

fn samplers(components: &[DistributionSpec]) -> Result<Vec<crate::dist::Sampler>> {
    components
        .iter()
        .enumerate()
        .map(|(index, c)| c.sampler().map_err(|_| IdentError::NotSamplable { index }))
        .collect()
}

/// `n` draws of `coef^T X (+ eps)` on stream `side`.
fn simulate(
    problem: &ProblemSpec,
    coef: &[f64],
    n: usize,
    seed: u64,
    side: u64,
) -> Result<Vec<f64>> {
    let d = problem.dim();
    let mut y = vec![0.0; n];
    match problem.joint_structure() {
        Some(joint) => sample_joint_projection(joint, d, coef, &mut y, &mut rng(seed, side, 0))?,
        None => {
            for (i, s) in samplers(problem.components())?.iter().enumerate() {
                let mut r = rng(seed, side, 1 + i as u64);
                for v in y.iter_mut() {
                    *v += coef[i] * s.draw(&mut r);
                }
            }
        }
    }
    if let Some(noise) = problem.noise() {
        let s = noise
            .dist
            .sampler()
            .map_err(|_| IdentError::NotSamplable { index: d })?;
        let mut r = rng(seed, side, NOISE_INDEX);
        for v in y.iter_mut() {
            *v += s.draw(&mut r);
        }
    }
    Ok(y)
}

/// Adds `coef^T (mu + L R z)` to `out`, `z` standard normal and `R` the radial factor.
fn sample_joint_projection(
    joint: &JointStructure,
    d: usize,
    coef: &[f64],
    out: &mut [f64],
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let (mu, sigma) = joint.location_scale(d);
    let l = cholesky(&sigma)?;
    let shift: f64 = coef.iter().zip(&mu).map(|(b, m)| b * m).sum();
    let u: Vec<f64> = (0..d)
        .map(|j| (0..d).map(|i| l[(i, j)] * coef[i]).sum())
        .collect();
    let chi = match joint.generator() {
        SphericalGenerator::Gaussian => None,
        SphericalGenerator::StudentT { nu } => Some((
            nu,
            ChiSquared::new(nu).map_err(|e| IdentError::InvalidParameter(e.to_string()))?,
        )),
    };
    for v in out.iter_mut() {
        let mut dot: f64 = u
            .iter()
            .map(|uj| uj * rng.sample::<f64, _>(StandardNormal))
            .sum();
        if let Some((nu, chi)) = &chi {
            dot *= (nu / chi.sample(rng)).sqrt();
        }
        *v += shift + dot;
    }
    Ok(())
}

fn record(candidate: Candidate, outcome: TestOutcome, config: &OracleConfig) -> OracleRecord {
    let decision = if outcome.p_value < config.significance {
        Decision::Reject
    } else {
        Decision::Accept
    };
    OracleRecord {
        candidate,
        decision,
        p_value: outcome.p_value,
        statistic: outcome.statistic,
        statistic_kind: config.statistic,
        n: config.n,
        n_used: outcome.n_used,
        permutations: config.permutations,
        significance: config.significance,
        seed: config.seed,
        subsampled: outcome.subsampled,
    }
}

/// Compares `beta0^T X (+ eps)` with `candidate^T X' (+ eps')` on independent draws.
pub fn verify_candidate(
    problem: &ProblemSpec,
    candidate: &[f64],
    config: &OracleConfig,
) -> Result<OracleRecord> {
    config.validate()?;
    if candidate.len() != problem.dim() || candidate.iter().any(|v| !v.is_finite()) {
        return Err(IdentError::Validation(format!(
            "candidate must be {} finite values",
            problem.dim()
        )));
    }
    let y0 = simulate(problem, problem.beta0(), config.n, config.seed, 0)?;
    let yc = simulate(problem, candidate, config.n, config.seed, 1)?;
    let outcome = two_sample_test(&y0, &yc, 1, config)?;
    Ok(record(
        Candidate::Vector(candidate.to_vec()),
        outcome,
        config,
    ))
}

fn simulate_mixing(
    b: &DMatrix<f64>,
    samplers: &[crate::dist::Sampler],
    n: usize,
    seed: u64,
    side: u64,
) -> Vec<f64> {
    let (m, d) = b.shape();
    let mut out = vec![0.0; n * m];
    for (i, s) in samplers.iter().enumerate().take(d) {
        let mut r = rng(seed, side, 1 + i as u64);
        for row in out.chunks_exact_mut(m) {
            let x = s.draw(&mut r);
            for (k, v) in row.iter_mut().enumerate() {
                *v += b[(k, i)] * x;
            }
        }
    }
    out
}

/// Compares `B0 X` with `candidate X'` as vectors in `R^m`.
pub fn verify_joint(
    problem: &MixingProblem,
    candidate: &DMatrix<f64>,
    config: &OracleConfig,
) -> Result<OracleRecord> {
    config.validate()?;
    let b0 = problem.b0();
    if candidate.shape() != b0.shape() || candidate.iter().any(|v| !v.is_finite()) {
        return Err(IdentError::Validation(format!(
            "candidate must be a finite {}x{} matrix",
            b0.nrows(),
            b0.ncols()
        )));
    }
    let s = samplers(problem.components())?;
    let y0 = simulate_mixing(b0, &s, config.n, config.seed, 0);
    let yc = simulate_mixing(candidate, &s, config.n, config.seed, 1);
    let outcome = two_sample_test(&y0, &yc, b0.nrows(), config)?;
    let rows = candidate
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    Ok(record(Candidate::Matrix(rows), outcome, config))
}
