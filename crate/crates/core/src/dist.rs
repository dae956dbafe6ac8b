//! Parametric component laws, problem instances and the standardization map.
//!
//! Every family exposes closed-form raw moments up to [`MAX_MOMENT_ORDER`],
//! a sampler, symmetry metadata and (where it exists) the additive closure
//! class used by the convolution analysis.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Normal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{IdentError, Result};

/// Highest raw moment order served by [`DistributionSpec::raw_moment`].
pub const MAX_MOMENT_ORDER: usize = 8;

/// Tolerance used when deciding that a standardized law is centered / scaled.
const STANDARD_TOL: f64 = 1e-12;

fn yes() -> bool {
    true
}

/// The parametric family of a single component.
///
/// Serialized with an internal `family` tag, e.g.
/// `{"family": "gamma", "shape": 2.0, "rate": 1.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    Gaussian {
        mean: f64,
        variance: f64,
    },
    Exponential {
        rate: f64,
    },
    Gamma {
        shape: f64,
        rate: f64,
    },
    Laplace {
        location: f64,
        scale: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    StudentT {
        nu: f64,
        location: f64,
        scale: f64,
    },
    PointMass {
        value: f64,
    },
    /// A law known only through its raw moments `E[X^1], E[X^2], ...`,
    /// optionally backed by equally weighted atoms for sampling.
    Empirical {
        #[serde(default)]
        moments: Vec<f64>,
        #[serde(default)]
        symmetric: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        atoms: Option<Vec<f64>>,
        #[serde(default = "yes")]
        cf_zero_interval_free: bool,
        #[serde(default = "yes")]
        all_moments_finite: bool,
    },
    /// `shift + scale * base`.
    Affine {
        base: Box<Family>,
        shift: f64,
        scale: f64,
    },
}

impl Family {
    fn name(&self) -> &'static str {
        match self {
            Family::Gaussian { .. } => "gaussian",
            Family::Exponential { .. } => "exponential",
            Family::Gamma { .. } => "gamma",
            Family::Laplace { .. } => "laplace",
            Family::Uniform { .. } => "uniform",
            Family::StudentT { .. } => "student_t",
            Family::PointMass { .. } => "point_mass",
            Family::Empirical { .. } => "empirical",
            Family::Affine { .. } => "affine",
        }
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(IdentError::InvalidParameter(format!(
            "{name} must be finite, got {v}"
        )))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(IdentError::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn validate_family(family: Family) -> Result<Family> {
    match family {
        Family::Gaussian { mean, variance } => {
            finite("mean", mean)?;
            positive("variance", variance)?;
            Ok(family)
        }
        Family::Exponential { rate } => positive("rate", rate).map(|_| family),
        Family::Gamma { shape, rate } => {
            positive("shape", shape)?;
            positive("rate", rate)?;
            Ok(family)
        }
        Family::Laplace { location, scale } => {
            finite("location", location)?;
            positive("scale", scale)?;
            Ok(family)
        }
        Family::Uniform { lo, hi } => {
            finite("lo", lo)?;
            finite("hi", hi)?;
            if lo < hi {
                Ok(family)
            } else {
                Err(IdentError::InvalidParameter(format!(
                    "uniform requires lo < hi, got [{lo}, {hi}]"
                )))
            }
        }
        Family::StudentT {
            nu,
            location,
            scale,
        } => {
            positive("nu", nu)?;
            finite("location", location)?;
            positive("scale", scale)?;
            Ok(family)
        }
        Family::PointMass { value } => finite("value", value).map(|_| family),
        Family::Empirical {
            mut moments,
            symmetric,
            atoms,
            cf_zero_interval_free,
            all_moments_finite,
        } => {
            if let Some(atoms) = &atoms {
                if atoms.is_empty() || atoms.iter().any(|a| !a.is_finite()) {
                    return Err(IdentError::InvalidParameter(
                        "empirical atoms must be a non-empty list of finite values".into(),
                    ));
                }
                if moments.is_empty() {
                    let n = atoms.len() as f64;
                    moments = (1..=MAX_MOMENT_ORDER as i32)
                        .map(|k| atoms.iter().map(|a| a.powi(k)).sum::<f64>() / n)
                        .collect();
                }
            }
            if moments.is_empty() {
                return Err(IdentError::InvalidParameter(
                    "empirical law needs moments or atoms".into(),
                ));
            }
            if moments.iter().any(|m| !m.is_finite()) {
                return Err(IdentError::InvalidParameter(
                    "empirical moments must be finite".into(),
                ));
            }
            if moments.len() >= 2
                && moments[1] - moments[0] * moments[0] < -1e-12 * moments[1].abs().max(1.0)
            {
                return Err(IdentError::InvalidParameter(
                    "empirical moments imply negative variance".into(),
                ));
            }
            let family = Family::Empirical {
                moments,
                symmetric,
                atoms,
                cf_zero_interval_free,
                all_moments_finite,
            };
            if symmetric {
                let spec = DistributionSpec {
                    family: family.clone(),
                };
                let sd = spec.variance().unwrap_or(1.0).max(0.0).sqrt().max(1.0);
                for k in (3..=spec.known_moment_orders()).step_by(2) {
                    let c = spec.central_moment(k)?;
                    if c.abs() > 1e-9 * sd.powi(k as i32) {
                        return Err(IdentError::InvalidParameter(format!(
                            "empirical law flagged symmetric but central moment {k} is {c}"
                        )));
                    }
                }
            }
            Ok(family)
        }
        Family::Affine { base, shift, scale } => {
            finite("shift", shift)?;
            if !scale.is_finite() || scale == 0.0 {
                return Err(IdentError::InvalidParameter(format!(
                    "affine scale must be finite and non-zero, got {scale}"
                )));
            }
            let base = validate_family(*base)?;
            Ok(Family::Affine {
                base: Box::new(base),
                shift,
                scale,
            })
        }
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// `(k-1)!!` for even `k`, i.e. `E[Z^k]` for a standard normal `Z`.
fn normal_even_moment(k: usize) -> f64 {
    (1..k).step_by(2).fold(1.0, |acc, i| acc * i as f64)
}

/// Raw moment of `shift + scale * Y` given a closure for the raw moments of `Y`.
fn affine_moment(
    k: usize,
    shift: f64,
    scale: f64,
    base: impl Fn(usize) -> Result<f64>,
) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..=k {
        let m = if scale == 0.0 && i > 0 { 0.0 } else { base(i)? };
        total += binomial(k, i) * shift.powi((k - i) as i32) * scale.powi(i as i32) * m;
    }
    Ok(total)
}

/// Base law of a scale family `{lambda f(lambda x)}`; members differ only by `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "base", rename_all = "snake_case")]
pub enum ScaleBase {
    Exponential,
    Gamma { shape: f64 },
    Laplace,
    SymmetricUniform,
    UnitUniform,
    StudentT { nu: f64 },
    Gaussian,
}

impl ScaleBase {
    pub fn is_symmetric(&self) -> bool {
        matches!(
            self,
            ScaleBase::Laplace
                | ScaleBase::SymmetricUniform
                | ScaleBase::StudentT { .. }
                | ScaleBase::Gaussian
        )
    }

    pub fn has_all_moments(&self) -> bool {
        !matches!(self, ScaleBase::StudentT { .. })
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, ScaleBase::Gaussian)
    }

    fn same_as(&self, other: &ScaleBase) -> bool {
        match (self, other) {
            (ScaleBase::Gamma { shape: a }, ScaleBase::Gamma { shape: b }) => rel_eq(*a, *b, 1e-12),
            (ScaleBase::StudentT { nu: a }, ScaleBase::StudentT { nu: b }) => rel_eq(*a, *b, 1e-12),
            _ => self == other,
        }
    }
}

/// A component seen as `X = Z / lambda` with `Z` drawn from `base`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleMember {
    pub base: ScaleBase,
    pub lambda: f64,
}

impl ScaleMember {
    pub fn same_family(&self, other: &ScaleMember) -> bool {
        self.base.same_as(&other.base)
    }
}

pub(crate) fn rel_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Additive closure class of a family, with the parameters of this member.
///
/// Two independent members of the same class sum to a member of the class
/// whose parameters are the sums of the summands' parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum ClosureTag {
    /// Gamma laws with a common rate; shapes add.
    GammaRate { rate: f64, shape: f64 },
    /// Gaussian laws; means and variances add.
    Gaussian { mean: f64, variance: f64 },
}

impl ClosureTag {
    pub fn same_class(&self, other: &ClosureTag) -> bool {
        match (self, other) {
            (ClosureTag::GammaRate { rate: a, .. }, ClosureTag::GammaRate { rate: b, .. }) => {
                rel_eq(*a, *b, 1e-12)
            }
            (ClosureTag::Gaussian { .. }, ClosureTag::Gaussian { .. }) => true,
            _ => false,
        }
    }

    /// Law of the sum of two independent members, when they share a class.
    pub fn combine(&self, other: &ClosureTag) -> Option<ClosureTag> {
        if !self.same_class(other) {
            return None;
        }
        Some(match (self, other) {
            (ClosureTag::GammaRate { rate, shape: a }, ClosureTag::GammaRate { shape: b, .. }) => {
                ClosureTag::GammaRate {
                    rate: *rate,
                    shape: a + b,
                }
            }
            (
                ClosureTag::Gaussian {
                    mean: m1,
                    variance: v1,
                },
                ClosureTag::Gaussian {
                    mean: m2,
                    variance: v2,
                },
            ) => ClosureTag::Gaussian {
                mean: m1 + m2,
                variance: v1 + v2,
            },
            _ => unreachable!(),
        })
    }

    pub fn same_law(&self, other: &ClosureTag) -> bool {
        match (self, other) {
            (
                ClosureTag::GammaRate {
                    rate: r1,
                    shape: s1,
                },
                ClosureTag::GammaRate {
                    rate: r2,
                    shape: s2,
                },
            ) => rel_eq(*r1, *r2, 1e-12) && rel_eq(*s1, *s2, 1e-12),
            (
                ClosureTag::Gaussian {
                    mean: m1,
                    variance: v1,
                },
                ClosureTag::Gaussian {
                    mean: m2,
                    variance: v2,
                },
            ) => {
                (m1 - m2).abs() <= 1e-12 * m1.abs().max(m2.abs()).max(1.0)
                    && rel_eq(*v1, *v2, 1e-12)
            }
            _ => false,
        }
    }
}

/// A validated univariate law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Family", into = "Family")]
pub struct DistributionSpec {
    family: Family,
}

impl TryFrom<Family> for DistributionSpec {
    type Error = IdentError;

    fn try_from(family: Family) -> Result<Self> {
        DistributionSpec::new(family)
    }
}

impl From<DistributionSpec> for Family {
    fn from(spec: DistributionSpec) -> Family {
        spec.family
    }
}

impl DistributionSpec {
    pub fn new(family: Family) -> Result<Self> {
        Ok(DistributionSpec {
            family: validate_family(family)?,
        })
    }

    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        Self::new(Family::Gaussian { mean, variance })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(Family::Exponential { rate })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        Self::new(Family::Gamma { shape, rate })
    }

    pub fn laplace(location: f64, scale: f64) -> Result<Self> {
        Self::new(Family::Laplace { location, scale })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::new(Family::Uniform { lo, hi })
    }

    pub fn student_t(nu: f64, location: f64, scale: f64) -> Result<Self> {
        Self::new(Family::StudentT {
            nu,
            location,
            scale,
        })
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        Self::new(Family::PointMass { value })
    }

    /// Moment-only law. `moments[k-1]` is `E[X^k]`.
    pub fn empirical(moments: Vec<f64>, symmetric: bool) -> Result<Self> {
        Self::new(Family::Empirical {
            moments,
            symmetric,
            atoms: None,
            cf_zero_interval_free: true,
            all_moments_finite: true,
        })
    }

    /// Discrete law putting equal mass on each atom.
    pub fn atoms(atoms: Vec<f64>) -> Result<Self> {
        let symmetric = {
            let mut sorted = atoms.clone();
            sorted.sort_by(f64::total_cmp);
            let center = sorted.iter().sum::<f64>() / sorted.len().max(1) as f64;
            sorted.iter().zip(sorted.iter().rev()).all(|(lo, hi)| {
                ((lo - center) + (hi - center)).abs() <= 1e-12 * (1.0 + center.abs())
            })
        };
        Self::new(Family::Empirical {
            moments: Vec::new(),
            symmetric,
            atoms: Some(atoms),
            cf_zero_interval_free: true,
            all_moments_finite: true,
        })
    }

    /// `shift + scale * self`.
    pub fn affine(&self, shift: f64, scale: f64) -> Result<Self> {
        let family = match &self.family {
            Family::Affine {
                base,
                shift: s,
                scale: c,
            } => Family::Affine {
                base: base.clone(),
                shift: shift + scale * s,
                scale: scale * c,
            },
            other => Family::Affine {
                base: Box::new(other.clone()),
                shift,
                scale,
            },
        };
        Self::new(family)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        self.family.name()
    }

    /// Number of raw moments the specification can serve (capped at [`MAX_MOMENT_ORDER`]).
    pub fn known_moment_orders(&self) -> usize {
        fn orders(f: &Family) -> usize {
            match f {
                Family::StudentT { nu, .. } => {
                    (nu.ceil() as usize).saturating_sub(1).min(MAX_MOMENT_ORDER)
                }
                Family::Empirical { moments, .. } => moments.len().min(MAX_MOMENT_ORDER),
                Family::Affine { base, .. } => orders(base),
                _ => MAX_MOMENT_ORDER,
            }
        }
        orders(&self.family)
    }

    /// `E[X^k]` in closed form.
    pub fn raw_moment(&self, k: usize) -> Result<f64> {
        if k > MAX_MOMENT_ORDER {
            return Err(IdentError::OrderExceeded {
                order: k,
                max: MAX_MOMENT_ORDER,
            });
        }
        raw_moment_of(&self.family, k)
    }

    pub fn mean(&self) -> Result<f64> {
        self.raw_moment(1)
    }

    pub fn central_moment(&self, k: usize) -> Result<f64> {
        let mu = self.mean()?;
        affine_moment(k, -mu, 1.0, |i| self.raw_moment(i))
    }

    pub fn variance(&self) -> Result<f64> {
        self.central_moment(2).map(|v| v.max(0.0))
    }

    /// Fourth moment of the standardized law (the kurtosis).
    pub fn standardized_fourth_moment(&self) -> Result<f64> {
        let var = self.variance()?;
        if var <= 0.0 {
            return Err(IdentError::DegenerateComponent { index: 0 });
        }
        Ok(self.central_moment(4)? / (var * var))
    }

    /// Symmetric about its mean.
    pub fn is_symmetric(&self) -> bool {
        fn sym(f: &Family) -> bool {
            match f {
                Family::Gaussian { .. }
                | Family::Laplace { .. }
                | Family::Uniform { .. }
                | Family::StudentT { .. }
                | Family::PointMass { .. } => true,
                Family::Exponential { .. } | Family::Gamma { .. } => false,
                Family::Empirical { symmetric, .. } => *symmetric,
                Family::Affine { base, .. } => sym(base),
            }
        }
        sym(&self.family)
    }

    /// `-X` has the same law as `X`.
    pub fn is_symmetric_about_zero(&self) -> bool {
        if !self.is_symmetric() {
            return false;
        }
        let center = match self.mean() {
            Ok(m) => m,
            // Heavy tails: fall back to the location parameter.
            Err(_) => location_of(&self.family),
        };
        let spread = self.variance().map(f64::sqrt).unwrap_or(1.0).max(1e-300);
        center.abs() <= STANDARD_TOL * spread.max(1.0)
    }

    pub fn as_gaussian(&self) -> Option<(f64, f64)> {
        match &self.family {
            Family::Gaussian { mean, variance } => Some((*mean, *variance)),
            Family::Affine { base, shift, scale } => match base.as_ref() {
                Family::Gaussian { mean, variance } => {
                    Some((shift + scale * mean, scale * scale * variance))
                }
                _ => None,
            },
            _ => None,
        }
    }

    /// `(shape, rate)` for Gamma laws, including exponentials and positive rescalings.
    pub fn as_gamma(&self) -> Option<(f64, f64)> {
        fn gamma(f: &Family) -> Option<(f64, f64)> {
            match f {
                Family::Exponential { rate } => Some((1.0, *rate)),
                Family::Gamma { shape, rate } => Some((*shape, *rate)),
                _ => None,
            }
        }
        match &self.family {
            Family::Affine { base, shift, scale } if *shift == 0.0 && *scale > 0.0 => {
                gamma(base).map(|(shape, rate)| (shape, rate / scale))
            }
            other => gamma(other),
        }
    }

    pub fn is_gaussian(&self) -> bool {
        self.as_gaussian().is_some()
    }

    /// Moments of every positive order are finite.
    pub fn has_all_moments(&self) -> bool {
        fn all(f: &Family) -> bool {
            match f {
                Family::StudentT { .. } => false,
                Family::Empirical {
                    all_moments_finite,
                    atoms,
                    ..
                } => *all_moments_finite || atoms.is_some(),
                Family::Affine { base, .. } => all(base),
                _ => true,
            }
        }
        all(&self.family)
    }

    /// StudentT with `nu <= 4` cannot enter fourth-moment analysis.
    pub fn is_moment_limited(&self) -> bool {
        self.known_moment_orders() < 4
    }

    pub fn is_degenerate(&self) -> bool {
        match &self.family {
            Family::PointMass { .. } => true,
            _ => matches!(self.variance(), Ok(v) if v <= 1e-300),
        }
    }

    /// Stored family-level fact: the characteristic function has no interval of zeros.
    pub fn cf_zero_interval_free(&self) -> bool {
        fn free(f: &Family) -> bool {
            match f {
                Family::Empirical {
                    cf_zero_interval_free,
                    ..
                } => *cf_zero_interval_free,
                Family::Affine { base, .. } => free(base),
                _ => true,
            }
        }
        free(&self.family)
    }

    pub fn is_samplable(&self) -> bool {
        fn ok(f: &Family) -> bool {
            match f {
                Family::Empirical { atoms, .. } => atoms.is_some(),
                Family::Affine { base, .. } => ok(base),
                _ => true,
            }
        }
        ok(&self.family)
    }

    /// Membership in a scale family `lambda f(lambda x)`.
    pub fn scale_family(&self) -> Option<ScaleMember> {
        fn member(f: &Family) -> Option<ScaleMember> {
            let (base, lambda) = match f {
                Family::Exponential { rate } => (ScaleBase::Exponential, *rate),
                Family::Gamma { shape, rate } if rel_eq(*shape, 1.0, 1e-15) => {
                    (ScaleBase::Exponential, *rate)
                }
                Family::Gamma { shape, rate } => (ScaleBase::Gamma { shape: *shape }, *rate),
                Family::Laplace { location, scale } if *location == 0.0 => {
                    (ScaleBase::Laplace, 1.0 / scale)
                }
                Family::Uniform { lo, hi } if *lo == -*hi => {
                    (ScaleBase::SymmetricUniform, 1.0 / hi)
                }
                Family::Uniform { lo, hi } if *lo == 0.0 => (ScaleBase::UnitUniform, 1.0 / hi),
                Family::StudentT {
                    nu,
                    location,
                    scale,
                } if *location == 0.0 => (ScaleBase::StudentT { nu: *nu }, 1.0 / scale),
                Family::Gaussian { mean, variance } if *mean == 0.0 => {
                    (ScaleBase::Gaussian, 1.0 / variance.sqrt())
                }
                Family::Affine { base, shift, scale } if *shift == 0.0 && *scale > 0.0 => {
                    let inner = member(base)?;
                    return Some(ScaleMember {
                        base: inner.base,
                        lambda: inner.lambda / scale,
                    });
                }
                _ => return None,
            };
            Some(ScaleMember { base, lambda })
        }
        member(&self.family)
    }

    /// Additive closure class, if the family has one.
    pub fn convolution_family_tag(&self) -> Option<ClosureTag> {
        if let Some((mean, variance)) = self.as_gaussian() {
            return Some(ClosureTag::Gaussian { mean, variance });
        }
        self.as_gamma()
            .map(|(shape, rate)| ClosureTag::GammaRate { rate, shape })
    }

    pub(crate) fn sampler(&self) -> Result<Sampler> {
        Sampler::build(&self.family)
    }

    /// Draws `n` values from a ChaCha stream seeded with `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, n)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<f64>> {
        let sampler = self.sampler()?;
        Ok((0..n).map(|_| sampler.draw(rng)).collect())
    }
}

fn location_of(f: &Family) -> f64 {
    match f {
        Family::Gaussian { mean, .. } => *mean,
        Family::Laplace { location, .. } | Family::StudentT { location, .. } => *location,
        Family::Uniform { lo, hi } => 0.5 * (lo + hi),
        Family::PointMass { value } => *value,
        Family::Affine { base, shift, scale } => shift + scale * location_of(base),
        _ => f64::NAN,
    }
}

fn raw_moment_of(family: &Family, k: usize) -> Result<f64> {
    if k == 0 {
        return Ok(1.0);
    }
    let undefined = || IdentError::MomentUndefined {
        family: family.name().to_string(),
        order: k,
    };
    Ok(match family {
        Family::Gaussian { mean, variance } => {
            let sd = variance.sqrt();
            affine_moment(k, *mean, sd, |i| {
                Ok(if i % 2 == 1 {
                    0.0
                } else {
                    normal_even_moment(i)
                })
            })?
        }
        Family::Exponential { rate } => factorial(k) / rate.powi(k as i32),
        Family::Gamma { shape, rate } => {
            (0..k).fold(1.0, |acc, i| acc * (shape + i as f64)) / rate.powi(k as i32)
        }
        Family::Laplace { location, scale } => affine_moment(k, *location, *scale, |i| {
            Ok(if i % 2 == 1 { 0.0 } else { factorial(i) })
        })?,
        Family::Uniform { lo, hi } => {
            let kp = (k + 1) as i32;
            (hi.powi(kp) - lo.powi(kp)) / ((k + 1) as f64 * (hi - lo))
        }
        Family::StudentT {
            nu,
            location,
            scale,
        } => {
            if (k as f64) >= *nu {
                return Err(undefined());
            }
            affine_moment(k, *location, *scale, |i| {
                if i % 2 == 1 {
                    return Ok(0.0);
                }
                let half = i / 2;
                Ok((1..=half).fold(nu.powi(half as i32), |acc, j| {
                    acc * (2 * j - 1) as f64 / (nu - 2.0 * j as f64)
                }))
            })?
        }
        Family::PointMass { value } => value.powi(k as i32),
        Family::Empirical { moments, .. } => *moments.get(k - 1).ok_or_else(undefined)?,
        Family::Affine { base, shift, scale } => match symmetric_center(base) {
            Some(loc) => {
                // Expand around the center so odd moments vanish exactly when it is 0.
                let tilt = scale * loc;
                let mut c = shift + tilt;
                if c.abs() <= 4.0 * f64::EPSILON * (shift.abs() + tilt.abs()) {
                    c = 0.0;
                }
                affine_moment(k, c, *scale, |i| symmetric_central_moment(base, i))?
            }
            None => affine_moment(k, *shift, *scale, |i| raw_moment_of(base, i))?,
        },
    })
}

fn symmetric_center(f: &Family) -> Option<f64> {
    match f {
        Family::Gaussian { .. }
        | Family::Laplace { .. }
        | Family::Uniform { .. }
        | Family::StudentT { .. } => Some(location_of(f)),
        Family::Empirical {
            symmetric: true,
            moments,
            ..
        } => moments.first().copied(),
        _ => None,
    }
}

fn symmetric_central_moment(f: &Family, i: usize) -> Result<f64> {
    if i == 0 {
        return Ok(1.0);
    }
    if i % 2 == 1 {
        // Existence still matters for heavy tails.
        if let Family::StudentT { nu, .. } = f {
            if i as f64 >= *nu {
                return Err(IdentError::MomentUndefined {
                    family: f.name().to_string(),
                    order: i,
                });
            }
        }
        if let Family::Empirical { moments, .. } = f {
            if i > moments.len() {
                return Err(IdentError::MomentUndefined {
                    family: f.name().to_string(),
                    order: i,
                });
            }
        }
        return Ok(0.0);
    }
    match f {
        Family::Uniform { lo, hi } => Ok((0.5 * (hi - lo)).powi(i as i32) / (i + 1) as f64),
        Family::Empirical { .. } => {
            let spec = DistributionSpec { family: f.clone() };
            spec.central_moment(i)
        }
        Family::Gaussian { variance, .. } => {
            Ok(variance.sqrt().powi(i as i32) * normal_even_moment(i))
        }
        Family::Laplace { scale, .. } => Ok(scale.powi(i as i32) * factorial(i)),
        Family::StudentT { nu, scale, .. } => {
            let centered = Family::StudentT {
                nu: *nu,
                location: 0.0,
                scale: *scale,
            };
            raw_moment_of(&centered, i)
        }
        _ => unreachable!("not a symmetric base"),
    }
}

/// Pre-built sampler for one family; avoids re-validating parameters per draw.
pub(crate) enum Sampler {
    Normal(Normal<f64>),
    Exp(Exp<f64>),
    Gamma(Gamma<f64>),
    Laplace {
        location: f64,
        scale: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    StudentT {
        t: StudentT<f64>,
        location: f64,
        scale: f64,
    },
    Point(f64),
    Atoms(Vec<f64>),
    Affine {
        base: Box<Sampler>,
        shift: f64,
        scale: f64,
    },
}

impl Sampler {
    fn build(family: &Family) -> Result<Sampler> {
        let bad = |e: &dyn std::fmt::Display| IdentError::InvalidParameter(e.to_string());
        Ok(match family {
            Family::Gaussian { mean, variance } => {
                Sampler::Normal(Normal::new(*mean, variance.sqrt()).map_err(|e| bad(&e))?)
            }
            Family::Exponential { rate } => Sampler::Exp(Exp::new(*rate).map_err(|e| bad(&e))?),
            Family::Gamma { shape, rate } => {
                Sampler::Gamma(Gamma::new(*shape, 1.0 / rate).map_err(|e| bad(&e))?)
            }
            Family::Laplace { location, scale } => Sampler::Laplace {
                location: *location,
                scale: *scale,
            },
            Family::Uniform { lo, hi } => Sampler::Uniform { lo: *lo, hi: *hi },
            Family::StudentT {
                nu,
                location,
                scale,
            } => Sampler::StudentT {
                t: StudentT::new(*nu).map_err(|e| bad(&e))?,
                location: *location,
                scale: *scale,
            },
            Family::PointMass { value } => Sampler::Point(*value),
            Family::Empirical {
                atoms: Some(atoms), ..
            } => Sampler::Atoms(atoms.clone()),
            Family::Empirical { atoms: None, .. } => {
                return Err(IdentError::NotSamplable { index: 0 })
            }
            Family::Affine { base, shift, scale } => Sampler::Affine {
                base: Box::new(Sampler::build(base)?),
                shift: *shift,
                scale: *scale,
            },
        })
    }

    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Normal(d) => d.sample(rng),
            Sampler::Exp(d) => d.sample(rng),
            Sampler::Gamma(d) => d.sample(rng),
            Sampler::Laplace { location, scale } => loop {
                let u: f64 = rng.gen::<f64>() - 0.5;
                if u.abs() < 0.5 {
                    break location - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln();
                }
            },
            Sampler::Uniform { lo, hi } => lo + (hi - lo) * rng.gen::<f64>(),
            Sampler::StudentT { t, location, scale } => location + scale * t.sample(rng),
            Sampler::Point(v) => *v,
            Sampler::Atoms(atoms) => atoms[rng.gen_range(0..atoms.len())],
            Sampler::Affine { base, shift, scale } => shift + scale * base.draw(rng),
        }
    }
}

/// Additive noise together with its characteristic-function metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "DistributionSpec", into = "DistributionSpec")]
pub struct NoiseSpec {
    pub dist: DistributionSpec,
    /// True when the characteristic function's zero set contains no open interval.
    pub cf_zero_interval_free: bool,
}

impl NoiseSpec {
    pub fn new(dist: DistributionSpec) -> Self {
        let cf_zero_interval_free = dist.cf_zero_interval_free();
        NoiseSpec {
            dist,
            cf_zero_interval_free,
        }
    }
}

impl From<DistributionSpec> for NoiseSpec {
    fn from(dist: DistributionSpec) -> Self {
        NoiseSpec::new(dist)
    }
}

impl From<NoiseSpec> for DistributionSpec {
    fn from(noise: NoiseSpec) -> Self {
        noise.dist
    }
}

/// Whether the noise can be cancelled from the identifiability question.
pub fn noise_admissible(noise: &NoiseSpec) -> bool {
    noise.cf_zero_interval_free
}

/// Radial generator used when the oracle samples a spherical law.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SphericalGenerator {
    #[default]
    Gaussian,
    StudentT {
        nu: f64,
    },
}

/// Joint law replacing componentwise independence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JointStructure {
    Spherical {
        #[serde(default)]
        generator: SphericalGenerator,
    },
    Elliptical {
        mu: Vec<f64>,
        sigma: Vec<Vec<f64>>,
        #[serde(default)]
        generator: SphericalGenerator,
    },
}

impl JointStructure {
    pub fn generator(&self) -> SphericalGenerator {
        match self {
            JointStructure::Spherical { generator }
            | JointStructure::Elliptical { generator, .. } => *generator,
        }
    }

    /// Location vector and scale matrix in dimension `d`.
    pub fn location_scale(&self, d: usize) -> (Vec<f64>, DMatrix<f64>) {
        match self {
            JointStructure::Spherical { .. } => (vec![0.0; d], DMatrix::identity(d, d)),
            JointStructure::Elliptical { mu, sigma, .. } => {
                (mu.clone(), DMatrix::from_fn(d, d, |i, j| sigma[i][j]))
            }
        }
    }
}

/// Validates symmetry and positive definiteness; returns the Cholesky factor.
pub(crate) fn cholesky(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = sigma.nrows();
    if sigma.ncols() != d {
        return Err(IdentError::SigmaNotPd);
    }
    for i in 0..d {
        for j in 0..i {
            let (a, b) = (sigma[(i, j)], sigma[(j, i)]);
            if !a.is_finite() || (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                return Err(IdentError::SigmaNotPd);
            }
        }
    }
    sigma
        .clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or(IdentError::SigmaNotPd)
}

/// A complete unlinked-regression instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProblemSpecRaw", into = "ProblemSpecRaw")]
pub struct ProblemSpec {
    components: Vec<DistributionSpec>,
    independent: bool,
    beta0: Vec<f64>,
    noise: Option<NoiseSpec>,
    joint_structure: Option<JointStructure>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ProblemSpecRaw {
    #[serde(default)]
    components: Vec<DistributionSpec>,
    #[serde(default = "yes")]
    independent: bool,
    beta0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise: Option<NoiseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    joint_structure: Option<JointStructure>,
}

impl TryFrom<ProblemSpecRaw> for ProblemSpec {
    type Error = IdentError;

    fn try_from(raw: ProblemSpecRaw) -> Result<Self> {
        ProblemSpec::new(
            raw.components,
            raw.independent,
            raw.beta0,
            raw.noise,
            raw.joint_structure,
        )
    }
}

impl From<ProblemSpec> for ProblemSpecRaw {
    fn from(p: ProblemSpec) -> Self {
        ProblemSpecRaw {
            components: p.components,
            independent: p.independent,
            beta0: p.beta0,
            noise: p.noise,
            joint_structure: p.joint_structure,
        }
    }
}

impl ProblemSpec {
    pub fn new(
        components: Vec<DistributionSpec>,
        independent: bool,
        beta0: Vec<f64>,
        noise: Option<NoiseSpec>,
        joint_structure: Option<JointStructure>,
    ) -> Result<Self> {
        let d = beta0.len();
        if d == 0 {
            return Err(IdentError::Validation("beta0 must be non-empty".into()));
        }
        if beta0.iter().any(|b| !b.is_finite()) {
            return Err(IdentError::Validation(
                "beta0 entries must be finite".into(),
            ));
        }
        if beta0.iter().all(|b| *b == 0.0) {
            return Err(IdentError::Validation(
                "beta0 = 0 gives a trivial model".into(),
            ));
        }
        match &joint_structure {
            Some(joint) => {
                if !components.is_empty() {
                    return Err(IdentError::Validation(
                        "components must be empty when joint_structure is given".into(),
                    ));
                }
                if independent {
                    return Err(IdentError::Validation(
                        "joint_structure overrides independence; set independent = false".into(),
                    ));
                }
                if let JointStructure::Elliptical { mu, sigma, .. } = joint {
                    if mu.len() != d || sigma.len() != d || sigma.iter().any(|row| row.len() != d) {
                        return Err(IdentError::Validation(format!(
                            "elliptical parameters must have dimension {d}"
                        )));
                    }
                    if mu.iter().any(|m| !m.is_finite()) {
                        return Err(IdentError::Validation("mu entries must be finite".into()));
                    }
                    cholesky(&joint.location_scale(d).1)?;
                }
                if let SphericalGenerator::StudentT { nu } = joint.generator() {
                    positive("nu", nu)?;
                }
            }
            None => {
                if components.len() != d {
                    return Err(IdentError::Validation(format!(
                        "{} components but beta0 has length {d}",
                        components.len()
                    )));
                }
            }
        }
        Ok(ProblemSpec {
            components,
            independent,
            beta0,
            noise,
            joint_structure,
        })
    }

    /// Independent components, no noise.
    pub fn independent(components: Vec<DistributionSpec>, beta0: Vec<f64>) -> Result<Self> {
        Self::new(components, true, beta0, None, None)
    }

    pub fn joint(structure: JointStructure, beta0: Vec<f64>) -> Result<Self> {
        Self::new(Vec::new(), false, beta0, None, Some(structure))
    }

    pub fn with_noise(mut self, noise: NoiseSpec) -> Self {
        self.noise = Some(noise);
        self
    }

    pub fn with_beta0(&self, beta0: Vec<f64>) -> Result<Self> {
        Self::new(
            self.components.clone(),
            self.independent,
            beta0,
            self.noise.clone(),
            self.joint_structure.clone(),
        )
    }

    pub fn dim(&self) -> usize {
        self.beta0.len()
    }

    pub fn components(&self) -> &[DistributionSpec] {
        &self.components
    }

    pub fn is_independent(&self) -> bool {
        self.independent && self.joint_structure.is_none()
    }

    pub fn beta0(&self) -> &[f64] {
        &self.beta0
    }

    pub fn noise(&self) -> Option<&NoiseSpec> {
        self.noise.as_ref()
    }

    pub fn joint_structure(&self) -> Option<&JointStructure> {
        self.joint_structure.as_ref()
    }

    /// All components share one law.
    pub fn is_iid(&self) -> bool {
        self.is_independent() && self.components.windows(2).all(|w| w[0] == w[1])
    }
}

/// Per-coordinate centering and scaling applied by [`standardize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    pub means: Vec<f64>,
    pub std_devs: Vec<f64>,
    /// Centering can add spurious solutions; the standardized set then only
    /// bounds the original one from above.
    pub superset: bool,
}

impl ScalingRecord {
    /// Coefficients acting on the standardized components: `b_j * sigma_j`.
    pub fn to_standardized(&self, beta: &[f64]) -> Vec<f64> {
        beta.iter()
            .zip(&self.std_devs)
            .map(|(b, s)| b * s)
            .collect()
    }

    pub fn to_original(&self, gamma: &[f64]) -> Vec<f64> {
        gamma
            .iter()
            .zip(&self.std_devs)
            .map(|(g, s)| g / s)
            .collect()
    }
}

/// Centers and scales every component to mean 0 and variance 1.
pub fn standardize(problem: &ProblemSpec) -> Result<(ProblemSpec, ScalingRecord)> {
    if !problem.is_independent() {
        return Err(IdentError::Validation(
            "standardization needs independent components".into(),
        ));
    }
    let mut comps = Vec::with_capacity(problem.dim());
    let mut means = Vec::with_capacity(problem.dim());
    let mut std_devs = Vec::with_capacity(problem.dim());
    for (index, c) in problem.components.iter().enumerate() {
        let mean = c.mean()?;
        let var = c.variance()?;
        if !(var > 1e-300) || c.is_degenerate() {
            return Err(IdentError::DegenerateComponent { index });
        }
        let sd = var.sqrt();
        let inv = 1.0 / sd;
        comps.push(c.affine(-(inv * mean), inv)?);
        means.push(mean);
        std_devs.push(sd);
    }
    let record = ScalingRecord {
        superset: means.iter().any(|m| *m != 0.0),
        means,
        std_devs,
    };
    let beta0 = record.to_standardized(&problem.beta0);
    let standardized = ProblemSpec::new(comps, true, beta0, problem.noise.clone(), None)?;
    Ok((standardized, record))
}

/// Mean within `1e-12` of 0 and variance within `1e-12` of 1.
pub fn is_standardized(dist: &DistributionSpec) -> bool {
    matches!((dist.mean(), dist.variance()), (Ok(m), Ok(v)) if m.abs() <= STANDARD_TOL && (v - 1.0).abs() <= STANDARD_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    /// Composite Simpson quadrature of `x^k f(x)` on `[lo, hi]`.
    fn quad_moment(f: impl Fn(f64) -> f64, k: i32, lo: f64, hi: f64, n: usize) -> f64 {
        let h = (hi - lo) / n as f64;
        let g = |x: f64| x.powi(k) * f(x);
        let mut s = g(lo) + g(hi);
        for i in 1..n {
            let x = lo + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(x);
        }
        s * h / 3.0
    }

    #[test]
    fn exponential_third_moment_is_factorial() {
        let d = DistributionSpec::exponential(1.0).unwrap();
        assert_eq!(d.raw_moment(3).unwrap(), 6.0);
    }

    #[test]
    fn gaussian_third_moment_matches_quadrature() {
        let pdf = |x: f64| (-(x - 1.0).powi(2) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let oracle = quad_moment(pdf, 3, -15.0, 17.0, 200_000);
        assert!(close(oracle, 4.0, 1e-9), "oracle {oracle}");
        let d = DistributionSpec::gaussian(1.0, 1.0).unwrap();
        assert!(close(d.raw_moment(3).unwrap(), oracle, 1e-9));
    }

    #[test]
    fn student_t_fourth_moment_matches_quadrature() {
        let nu: f64 = 5.0;
        let s = (3.0f64 / 5.0).sqrt();
        // t_5 density: c (1 + t^2/5)^{-3}, c = 8 / (3 pi sqrt 5)
        let c = 8.0 / (3.0 * std::f64::consts::PI * nu.sqrt());
        let pdf = |x: f64| {
            let t = x / s;
            c * (1.0 + t * t / nu).powf(-(nu + 1.0) / 2.0) / s
        };
        // Tail beyond |x| = L contributes ~ 2 c' L^{-1}; integrate far and add the analytic tail.
        let l = 4000.0;
        let body = quad_moment(pdf, 4, -l, l, 4_000_000);
        let tail = 2.0 * c * s.powi(4) * nu.powf(3.0) * (s / l); // ∫_L^∞ x^4 c s^5 5^3 / x^6 dx / s
        let oracle = body + tail;
        assert!(close(oracle, 9.0, 1e-5), "oracle {oracle}");
        let d = DistributionSpec::student_t(nu, 0.0, s).unwrap();
        assert!(close(d.raw_moment(4).unwrap(), 9.0, 1e-12));
    }

    #[test]
    fn student_t_high_orders_are_undefined() {
        let d = DistributionSpec::student_t(5.0, 0.0, 1.0).unwrap();
        assert!(matches!(
            d.raw_moment(5),
            Err(IdentError::MomentUndefined { order: 5, .. })
        ));
        assert!(d.raw_moment(4).is_ok());
        let limited = DistributionSpec::student_t(3.0, 0.0, 1.0).unwrap();
        assert!(limited.is_moment_limited());
        assert!(!d.is_moment_limited());
    }

    #[test]
    fn order_cap() {
        let d = DistributionSpec::exponential(1.0).unwrap();
        assert!(matches!(
            d.raw_moment(9),
            Err(IdentError::OrderExceeded { order: 9, max: 8 })
        ));
    }

    #[test]
    fn standard_laws_have_the_quoted_kurtoses() {
        let laplace = DistributionSpec::laplace(0.0, 1.0 / 2f64.sqrt()).unwrap();
        assert!(close(laplace.variance().unwrap(), 1.0, 1e-14));
        assert!(close(laplace.raw_moment(4).unwrap(), 6.0, 1e-14));
        let r3 = 3f64.sqrt();
        let unif = DistributionSpec::uniform(-r3, r3).unwrap();
        assert!(close(unif.raw_moment(4).unwrap(), 9.0 / 5.0, 1e-14));
        let exp = DistributionSpec::exponential(1.0).unwrap();
        assert!(close(exp.standardized_fourth_moment().unwrap(), 9.0, 1e-14));
    }

    #[test]
    fn standardize_example_and_superset_flag() {
        let p = ProblemSpec::independent(
            vec![
                DistributionSpec::gaussian(1.0, 1.0).unwrap(),
                DistributionSpec::exponential(1.0).unwrap(),
            ],
            vec![2.0, 3.0],
        )
        .unwrap();
        let (s, rec) = standardize(&p).unwrap();
        assert!(rec.superset);
        assert_eq!(rec.std_devs, vec![1.0, 1.0]);
        assert_eq!(s.beta0(), &[2.0, 3.0]);
        for c in s.components() {
            assert!(is_standardized(c));
        }
        assert!(close(s.components()[1].raw_moment(4).unwrap(), 9.0, 1e-12));
        assert!(close(s.components()[1].raw_moment(3).unwrap(), 2.0, 1e-12));
    }

    #[test]
    fn standardize_identity_on_standard_components() {
        let p = ProblemSpec::independent(
            vec![
                DistributionSpec::gaussian(0.0, 1.0).unwrap(),
                DistributionSpec::laplace(0.0, 0.5f64.sqrt()).unwrap(),
            ],
            vec![1.0, -2.0],
        )
        .unwrap();
        let (_, rec) = standardize(&p).unwrap();
        assert!(!rec.superset);
        for (m, s) in rec.means.iter().zip(&rec.std_devs) {
            assert!(m.abs() <= 1e-12 && (s - 1.0).abs() <= 1e-12);
        }
        assert_eq!(rec.to_standardized(&[1.0, -2.0]), vec![1.0, -2.0]);
    }

    #[test]
    fn standardize_is_idempotent() {
        let p = ProblemSpec::independent(
            vec![
                DistributionSpec::gamma(2.5, 3.0).unwrap(),
                DistributionSpec::uniform(-1.0, 4.0).unwrap(),
                DistributionSpec::student_t(7.0, 2.0, 0.5).unwrap(),
            ],
            vec![1.0, 2.0, 3.0],
        )
        .unwrap();
        let (once, _) = standardize(&p).unwrap();
        let (twice, rec) = standardize(&once).unwrap();
        for (m, s) in rec.means.iter().zip(&rec.std_devs) {
            assert!(m.abs() <= 1e-12, "mean {m}");
            assert!((s - 1.0).abs() <= 1e-12, "sd {s}");
        }
        for (a, b) in once.beta0().iter().zip(twice.beta0()) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    fn all_families() -> Vec<DistributionSpec> {
        vec![
            DistributionSpec::gaussian(0.5, 2.0).unwrap(),
            DistributionSpec::exponential(1.5).unwrap(),
            DistributionSpec::gamma(2.5, 0.7).unwrap(),
            DistributionSpec::laplace(-1.0, 0.8).unwrap(),
            DistributionSpec::uniform(-0.5, 2.0).unwrap(),
            DistributionSpec::student_t(12.0, 1.0, 0.5).unwrap(),
            DistributionSpec::atoms(vec![-1.0, 0.0, 2.0, 5.0]).unwrap(),
            DistributionSpec::exponential(1.0)
                .unwrap()
                .affine(2.0, -0.5)
                .unwrap(),
        ]
    }

    #[test]
    fn moments_match_monte_carlo_within_four_standard_errors() {
        let n = 1_000_000;
        for (i, d) in all_families().into_iter().enumerate() {
            let xs = d.sample(n, 1000 + i as u64).unwrap();
            for k in 1..=4i32 {
                let pows: Vec<f64> = xs.iter().map(|x| x.powi(k)).collect();
                let est = pows.iter().sum::<f64>() / n as f64;
                let var = pows.iter().map(|p| (p - est).powi(2)).sum::<f64>() / (n as f64 - 1.0);
                let se = (var / n as f64).sqrt();
                let exact = d.raw_moment(k as usize).unwrap();
                assert!(
                    (est - exact).abs() <= 4.0 * se,
                    "{} k={k}: estimate {est} exact {exact} se {se}",
                    d.family_name()
                );
            }
        }
    }

    #[test]
    fn standardized_laws_obey_jensen_and_symmetry() {
        for d in all_families() {
            let p = ProblemSpec::independent(vec![d.clone()], vec![1.0]).unwrap();
            let (s, _) = standardize(&p).unwrap();
            let z = &s.components()[0];
            assert!(z.raw_moment(4).unwrap() >= 1.0 - 1e-12);
            if d.is_symmetric() {
                assert_eq!(z.raw_moment(3).unwrap(), 0.0, "{}", d.family_name());
            }
        }
    }

    #[test]
    fn degenerate_component_rejected() {
        let p = ProblemSpec::independent(
            vec![
                DistributionSpec::point_mass(2.0).unwrap(),
                DistributionSpec::exponential(1.0).unwrap(),
            ],
            vec![1.0, 1.0],
        )
        .unwrap();
        assert_eq!(
            standardize(&p).unwrap_err(),
            IdentError::DegenerateComponent { index: 0 }
        );
    }

    #[test]
    fn noise_admissibility_is_metadata() {
        assert!(noise_admissible(&NoiseSpec::new(
            DistributionSpec::gaussian(0.0, 1.0).unwrap()
        )));
        assert!(noise_admissible(&NoiseSpec::new(
            DistributionSpec::point_mass(0.0).unwrap()
        )));
        let odd = DistributionSpec::new(Family::Empirical {
            moments: vec![0.0, 1.0],
            symmetric: false,
            atoms: None,
            cf_zero_interval_free: false,
            all_moments_finite: true,
        })
        .unwrap();
        assert!(!noise_admissible(&NoiseSpec::new(odd)));
    }

    #[test]
    fn point_mass_samples_are_constant() {
        let d = DistributionSpec::point_mass(3.0).unwrap();
        assert_eq!(d.sample(4, 99).unwrap(), vec![3.0; 4]);
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let d = DistributionSpec::gamma(2.0, 1.5).unwrap();
        assert_eq!(d.sample(100, 5).unwrap(), d.sample(100, 5).unwrap());
        assert_ne!(d.sample(100, 5).unwrap(), d.sample(100, 6).unwrap());
    }

    #[test]
    fn uniform_sample_variance() {
        let r3 = 3f64.sqrt();
        let d = DistributionSpec::uniform(-r3, r3).unwrap();
        let xs = d.sample(1_000_000, 1).unwrap();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((0.99..=1.01).contains(&var), "variance {var}");
    }

    #[test]
    fn moment_only_law_is_not_samplable() {
        let d = DistributionSpec::empirical(vec![0.0, 1.0, 0.0, 3.0], true).unwrap();
        assert!(!d.is_samplable());
        assert!(d.sample(3, 1).is_err());
        assert!(d.raw_moment(5).is_err());
    }

    #[test]
    fn symmetric_flag_checked_against_moments() {
        assert!(DistributionSpec::empirical(vec![0.0, 1.0, 2.0], true).is_err());
        let a = DistributionSpec::atoms(vec![-1.0, 0.0, 1.0]).unwrap();
        assert!(a.is_symmetric_about_zero());
        assert_eq!(a.raw_moment(2).unwrap(), 2.0 / 3.0);
    }

    #[test]
    fn closure_tags() {
        let g = DistributionSpec::gamma(2.0, 1.0)
            .unwrap()
            .convolution_family_tag()
            .unwrap();
        assert_eq!(
            g,
            ClosureTag::GammaRate {
                rate: 1.0,
                shape: 2.0
            }
        );
        let e = DistributionSpec::exponential(1.0)
            .unwrap()
            .convolution_family_tag()
            .unwrap();
        assert!(e.combine(&e).unwrap().same_law(&g));
        assert_eq!(
            DistributionSpec::uniform(0.0, 1.0)
                .unwrap()
                .convolution_family_tag(),
            None
        );
        let n = DistributionSpec::gaussian(1.0, 2.0)
            .unwrap()
            .convolution_family_tag()
            .unwrap();
        assert_eq!(
            n,
            ClosureTag::Gaussian {
                mean: 1.0,
                variance: 2.0
            }
        );
        assert!(!n.same_class(&g));
        let other_rate = DistributionSpec::gamma(2.0, 3.0)
            .unwrap()
            .convolution_family_tag()
            .unwrap();
        assert!(other_rate.combine(&g).is_none());
    }

    #[test]
    fn scale_family_membership() {
        let l = DistributionSpec::laplace(0.0, 1.0 / 3.0)
            .unwrap()
            .scale_family()
            .unwrap();
        assert_eq!(l.base, ScaleBase::Laplace);
        assert!((l.lambda - 3.0).abs() < 1e-12);
        let e = DistributionSpec::gamma(1.0, 2.0)
            .unwrap()
            .scale_family()
            .unwrap();
        assert_eq!(e.base, ScaleBase::Exponential);
        assert!(DistributionSpec::laplace(1.0, 1.0)
            .unwrap()
            .scale_family()
            .is_none());
    }

    #[test]
    fn problem_validation() {
        let e = DistributionSpec::exponential(1.0).unwrap();
        assert!(ProblemSpec::independent(vec![e.clone()], vec![0.0]).is_err());
        assert!(ProblemSpec::independent(vec![e.clone()], vec![1.0, 2.0]).is_err());
        let bad = JointStructure::Elliptical {
            mu: vec![0.0, 0.0],
            sigma: vec![vec![1.0, 2.0], vec![2.0, 1.0]],
            generator: SphericalGenerator::Gaussian,
        };
        assert_eq!(
            ProblemSpec::joint(bad, vec![1.0, 1.0]).unwrap_err(),
            IdentError::SigmaNotPd
        );
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let ok: DistributionSpec =
            serde_json::from_str(r#"{"family":"gamma","shape":2,"rate":1}"#).unwrap();
        assert_eq!(ok.as_gamma(), Some((2.0, 1.0)));
        assert!(serde_json::from_str::<DistributionSpec>(
            r#"{"family":"gamma","shape":2,"rate":1,"x":0}"#
        )
        .is_err());
        assert!(serde_json::from_str::<DistributionSpec>(
            r#"{"family":"gamma","shape":-2,"rate":1}"#
        )
        .is_err());
        let p: ProblemSpec = serde_json::from_str(
            r#"{"components":[{"family":"exponential","rate":1}],"beta0":[2]}"#,
        )
        .unwrap();
        assert!(p.is_independent());
        assert!(
            serde_json::from_str::<ProblemSpec>(r#"{"components":[],"beta0":[2],"extra":1}"#)
                .is_err()
        );
    }
}
