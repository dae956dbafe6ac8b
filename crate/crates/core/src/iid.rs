//! Identifiability for i.i.d. components.
//!
//! Two linear forms `a^T X` and `b^T X` in i.i.d. coordinates are compared
//! through `tau(x) = sum |a_j|^{2x} - sum |b_j|^{2x}`. Its positive zeros decide
//! Linnik's conditions (A) and (B); the Ghurye-Olkin partial-sum test is a
//! cheap sufficient condition; Marcinkiewicz settles the all-moments case.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dist::DistributionSpec;
use crate::error::{IdentError, Result};

/// Tail tolerance defining the root horizon.
pub const EPS_TAIL: f64 = 1e-12;
/// Minimal separation between distinct roots.
pub const MIN_ROOT_GAP: f64 = 1e-4;
/// Maximal normalized residual of a reported root.
pub const MAX_RESIDUAL: f64 = 1e-10;
/// Levels closer than this (relative) are merged before cancellation.
const LEVEL_TOL: f64 = 1e-12;
/// A critical value this small relative to the term magnitudes is a zero.
const ZERO_REL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauTolerances {
    pub integer: f64,
    pub derivative: f64,
}

impl Default for TauTolerances {
    fn default() -> Self {
        TauTolerances {
            integer: 1e-6,
            derivative: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Multiplicity {
    Simple,
    Double,
    /// Both the first and second normalized derivatives vanish.
    Higher,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauRoot {
    pub x: f64,
    pub multiplicity: Multiplicity,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauAnalysis {
    pub roots: Vec<TauRoot>,
    /// Largest positive zero; absent when tau has none.
    pub xi0: Option<f64>,
    pub p: usize,
    pub q: usize,
    pub a_max: f64,
    pub cond_a: bool,
    pub cond_b: bool,
    /// `{|a_j|}` is a permutation of `{|b_j|}` up to zeros, so `tau` vanishes identically.
    pub degenerate: bool,
    /// Past this point the sign of `tau` is fixed.
    pub horizon: f64,
    /// A negative coefficient attains `|a_max|`, so the literal count may differ from the absolute one.
    pub negative_at_max: bool,
}

/// `sum_k w_k exp(s_k x)`, exponents strictly decreasing.
#[derive(Debug, Clone)]
struct ExpSum {
    terms: Vec<(f64, f64)>,
}

impl ExpSum {
    fn eval(&self, x: f64) -> f64 {
        self.terms.iter().map(|(s, w)| w * (s * x).exp()).sum()
    }

    fn magnitude(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|(s, w)| (w * (s * x).exp()).abs())
            .sum()
    }

    /// The sum after dividing by its leading exponential.
    fn shifted(&self) -> ExpSum {
        let top = self.terms[0].0;
        ExpSum {
            terms: self.terms.iter().map(|(s, w)| (s - top, *w)).collect(),
        }
    }

    fn derivative(&self) -> ExpSum {
        ExpSum {
            terms: self
                .terms
                .iter()
                .filter(|(s, _)| *s != 0.0)
                .map(|(s, w)| (*s, w * s))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Zero {
    x: f64,
    critical: bool,
}

/// Every zero of `f` in the open interval `(lo, hi)`.
///
/// `f` divided by its leading exponential has a derivative with one term
/// fewer, so its critical points come from the same routine; between
/// consecutive critical points the function is monotone.
fn real_zeros(f: &ExpSum, lo: f64, hi: f64) -> Vec<Zero> {
    if f.terms.len() <= 1 {
        return Vec::new();
    }
    let h = f.shifted();
    let dh = h.derivative();
    let crit = real_zeros(&dh, lo, hi);
    let is_zero = |x: f64| h.eval(x).abs() <= ZERO_REL * h.magnitude(x);

    let mut breaks = Vec::with_capacity(crit.len() + 2);
    breaks.push((lo, false));
    breaks.extend(crit.iter().map(|z| (z.x, true)));
    breaks.push((hi, false));

    let mut out = Vec::new();
    for &(x, is_crit) in &breaks {
        if is_crit && is_zero(x) {
            out.push(Zero { x, critical: true });
        }
    }
    for seg in breaks.windows(2) {
        let (l, r) = (seg[0].0, seg[1].0);
        if !(r > l) || is_zero(l) || is_zero(r) {
            continue;
        }
        let (fl, fr) = (h.eval(l), h.eval(r));
        if fl.signum() != fr.signum() {
            out.push(Zero {
                x: polish(&h, &dh, l, r, fl),
                critical: false,
            });
        }
    }
    out.sort_by(|a, b| a.x.total_cmp(&b.x));
    out
}

/// Safeguarded Newton on a bracket with a sign change.
fn polish(h: &ExpSum, dh: &ExpSum, mut l: f64, mut r: f64, fl: f64) -> f64 {
    let left_sign = fl.signum();
    let mut x = 0.5 * (l + r);
    for _ in 0..300 {
        let fx = h.eval(x);
        if fx == 0.0 {
            return x;
        }
        if fx.signum() == left_sign {
            l = x;
        } else {
            r = x;
        }
        if r - l <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            break;
        }
        let step = fx / dh.eval(x);
        let newton = x - step;
        x = if newton.is_finite() && newton > l && newton < r && step.abs() < 0.5 * (r - l) {
            newton
        } else {
            0.5 * (l + r)
        };
    }
    x
}

/// Normalized levels `(a_j^2 / M, count)` after cancelling equal magnitudes.
struct Levels {
    /// `M = max_j max(a_j^2, b_j^2)`.
    top: f64,
    /// `(ln(level / M), net weight)`, strictly decreasing exponents.
    terms: Vec<(f64, f64)>,
}

fn squares(v: &[f64]) -> Vec<f64> {
    v.iter().filter(|c| **c != 0.0).map(|c| c * c).collect()
}

fn levels(a: &[f64], b: &[f64]) -> Result<Levels> {
    if a.iter().chain(b).any(|c| !c.is_finite()) {
        return Err(IdentError::InvalidParameter(
            "coefficients must be finite".into(),
        ));
    }
    let sa = squares(a);
    let sb = squares(b);
    let top = sa.iter().chain(&sb).copied().fold(0.0, f64::max);
    if top == 0.0 {
        return Err(IdentError::AllZeroCoefficients);
    }
    let mut all: Vec<(f64, f64)> = sa
        .iter()
        .map(|s| (s / top, 1.0))
        .chain(sb.iter().map(|s| (s / top, -1.0)))
        .collect();
    all.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (level, w) in all {
        match merged.last_mut() {
            Some((l, acc)) if (*l - level).abs() <= LEVEL_TOL * *l => *acc += w,
            _ => merged.push((level, w)),
        }
    }
    let terms = merged
        .into_iter()
        .filter(|(_, w)| *w != 0.0)
        .map(|(l, w)| (l.ln(), w))
        .collect();
    Ok(Levels { top, terms })
}

/// `(tau_n, tau_n', tau_n'')` with `tau_n(x) = tau(x) / M^x`.
fn normalized(levels: &Levels, x: f64) -> (f64, f64, f64) {
    levels
        .terms
        .iter()
        .fold((0.0, 0.0, 0.0), |(v, d1, d2), (s, w)| {
            let t = w * (s * x).exp();
            (v + t, d1 + t * s, d2 + t * s * s)
        })
}

/// `(tau(x), tau'(x))`.
pub fn tau_eval(a: &[f64], b: &[f64], x: f64) -> Result<(f64, f64)> {
    let sa = squares(a);
    let sb = squares(b);
    let top = sa.iter().chain(&sb).copied().fold(0.0, f64::max);
    if top == 0.0 {
        return Err(IdentError::AllZeroCoefficients);
    }
    let scale = top.powf(x);
    let part = |v: &[f64]| {
        v.iter().fold((0.0, 0.0), |(val, der), s| {
            let t = (s / top).powf(x);
            (val + t, der + t * s.ln())
        })
    };
    let (va, da) = part(&sa);
    let (vb, db) = part(&sb);
    Ok((scale * (va - vb), scale * (da - db)))
}

fn rel_eq(x: f64, y: f64) -> bool {
    (x - y).abs() <= 1e-12 * x.abs().max(y.abs())
}

fn near_integer(x: f64, tol: f64) -> Option<i64> {
    let r = x.round();
    ((x - r).abs() <= tol).then_some(r as i64)
}

fn in_odd_even_window(x: f64, tol: f64) -> bool {
    // 2m - 1 <= x <= 2m for some m >= 1
    let m = ((x - tol) / 2.0).ceil().max(1.0);
    2.0 * m - 1.0 - tol <= x && x <= 2.0 * m + tol
}

pub fn tau_roots(a: &[f64], b: &[f64]) -> Result<TauAnalysis> {
    tau_roots_with(a, b, TauTolerances::default())
}

pub fn tau_roots_with(a: &[f64], b: &[f64], tol: TauTolerances) -> Result<TauAnalysis> {
    let lv = levels(a, b)?;
    let a_max = a.iter().chain(b).copied().fold(f64::NEG_INFINITY, f64::max);
    let abs_max = lv.top.sqrt();
    let p = a.iter().filter(|c| rel_eq(**c, a_max)).count();
    let q = b.iter().filter(|c| rel_eq(**c, a_max)).count();
    let negative_at_max = a
        .iter()
        .chain(b)
        .any(|c| *c < 0.0 && (rel_eq(-c, abs_max) || -c >= a_max));

    let mut analysis = TauAnalysis {
        roots: Vec::new(),
        xi0: None,
        p,
        q,
        a_max,
        cond_a: true,
        cond_b: false,
        degenerate: lv.terms.is_empty(),
        horizon: 0.0,
        negative_at_max,
    };
    if analysis.degenerate || lv.terms.len() == 1 {
        return Ok(analysis);
    }

    let d = a.len() + b.len();
    let ratio = lv.terms[1].0 - lv.terms[0].0;
    analysis.horizon = (EPS_TAIL / (2.0 * d as f64)).ln() / ratio + 1.0;

    let sum = ExpSum {
        terms: lv.terms.clone(),
    };
    let zeros = real_zeros(&sum, 0.0, analysis.horizon);
    for z in zeros.iter().filter(|z| z.x > 0.0) {
        let (v, d1, d2) = normalized(&lv, z.x);
        if v.abs() > MAX_RESIDUAL {
            return Err(IdentError::RootIsolationFailure(format!(
                "residual {v:e} at x = {} exceeds {MAX_RESIDUAL:e}",
                z.x
            )));
        }
        let multiplicity = if d1.abs() > tol.derivative {
            Multiplicity::Simple
        } else if d2.abs() > tol.derivative {
            Multiplicity::Double
        } else {
            Multiplicity::Higher
        };
        debug_assert!(
            z.critical || multiplicity == Multiplicity::Simple || d1.abs() <= tol.derivative
        );
        analysis.roots.push(TauRoot {
            x: z.x,
            multiplicity,
            residual: v.abs(),
        });
    }
    for w in analysis.roots.windows(2) {
        if w[1].x - w[0].x < MIN_ROOT_GAP {
            return Err(IdentError::RootIsolationFailure(format!(
                "roots {} and {} are closer than {MIN_ROOT_GAP:e}",
                w[0].x, w[1].x
            )));
        }
    }

    if let Some(last) = analysis.roots.last().copied() {
        analysis.xi0 = Some(last.x);
        analysis.cond_a = analysis.roots[..analysis.roots.len() - 1].iter().all(|r| {
            r.multiplicity == Multiplicity::Simple && near_integer(r.x, tol.integer).is_some()
        });
        analysis.cond_b = match last.multiplicity {
            Multiplicity::Simple => in_odd_even_window(last.x, tol.integer),
            Multiplicity::Double => near_integer(last.x, tol.integer).is_some_and(|n| n % 2 != 0),
            Multiplicity::Higher => false,
        };
    }
    Ok(analysis)
}

/// `(x, tau(x))` on `points` equispaced abscissae in `[0, x_max]`.
pub fn tau_table(a: &[f64], b: &[f64], x_max: f64, points: usize) -> Result<Vec<(f64, f64)>> {
    let n = points.max(2);
    (0..n)
        .map(|i| {
            let x = x_max * i as f64 / (n - 1) as f64;
            tau_eval(a, b, x).map(|(v, _)| (x, v))
        })
        .collect()
}

/// Tab-separated table with a `# a=... b=...` header line.
pub fn tau_table_text(a: &[f64], b: &[f64], rows: &[(f64, f64)]) -> String {
    let join = |v: &[f64]| {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut out = format!("# a={} b={}\n", join(a), join(b));
    for (x, t) in rows {
        let _ = writeln!(out, "{x}\t{t}");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinnikReport {
    /// Conditions (A) and (B) both hold.
    pub applies: bool,
    /// Equality in law of the two forms forces a Gaussian common law.
    pub gaussian_forced: bool,
    /// The mean must vanish because the coefficient sums differ.
    pub mean_forced_zero: bool,
    /// The variance must vanish because the sums of squares differ.
    pub variance_forced_zero: bool,
    pub sum_a: f64,
    pub sum_b: f64,
    pub sum_sq_a: f64,
    pub sum_sq_b: f64,
    pub analysis: TauAnalysis,
    pub narrative: String,
}

pub fn linnik_check(a: &[f64], b: &[f64]) -> Result<LinnikReport> {
    let analysis = tau_roots(a, b)?;
    if analysis.p == analysis.q {
        return Err(IdentError::PreconditionUnmet(format!(
            "p = q = {}: the count condition of Linnik's theorem fails",
            analysis.p
        )));
    }
    if analysis.degenerate {
        return Err(IdentError::DegenerateTau);
    }
    let sum_a: f64 = a.iter().sum();
    let sum_b: f64 = b.iter().sum();
    let sum_sq_a: f64 = a.iter().map(|x| x * x).sum();
    let sum_sq_b: f64 = b.iter().map(|x| x * x).sum();
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0);
    let applies = analysis.cond_a && analysis.cond_b;
    let mean_forced_zero = !close(sum_a, sum_b);
    let variance_forced_zero = !close(sum_sq_a, sum_sq_b);
    let narrative = if applies {
        let mut s = String::from(
            "conditions (A) and (B) hold: equal laws force a Gaussian common distribution",
        );
        if mean_forced_zero {
            s.push_str(&format!(
                "; mean forced to 0 (sums {sum_a:.6} vs {sum_b:.6})"
            ));
        }
        if variance_forced_zero {
            s.push_str(&format!(
                "; variance forced to 0 (sums of squares {sum_sq_a:.6} vs {sum_sq_b:.6})"
            ));
        }
        s
    } else {
        format!(
            "conditions fail (A: {}, B: {}); the theorem gives no conclusion",
            analysis.cond_a, analysis.cond_b
        )
    };
    Ok(LinnikReport {
        applies,
        gaussian_forced: applies,
        mean_forced_zero,
        variance_forced_zero,
        sum_a,
        sum_b,
        sum_sq_a,
        sum_sq_b,
        analysis,
        narrative,
    })
}

fn sorted_squares_desc(v: &[f64], len: usize) -> Vec<f64> {
    let mut s: Vec<f64> = v.iter().map(|x| x * x).collect();
    s.resize(len, 0.0);
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Partial sums of the sorted squares of `a` dominate those of `b`, strictly
/// somewhere, with equal totals.
pub fn ghurye_olkin_check(a: &[f64], b: &[f64]) -> bool {
    let d = a.len().max(b.len());
    if d < 2 {
        return false;
    }
    let sa = sorted_squares_desc(a, d);
    let sb = sorted_squares_desc(b, d);
    let total_a: f64 = sa.iter().sum();
    let total_b: f64 = sb.iter().sum();
    let scale = total_a.abs().max(total_b.abs());
    if (total_a - total_b).abs() > 1e-12 * scale {
        return false;
    }
    let tol = 1e-12 * scale;
    let (mut pa, mut pb, mut strict) = (0.0, 0.0, false);
    for k in 0..d - 1 {
        pa += sa[k];
        pb += sb[k];
        if pa < pb - tol {
            return false;
        }
        strict |= pa > pb + tol;
    }
    strict
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarcinkiewiczVerdict {
    PermutationUpToSign,
    GaussianForced,
    NotApplicable,
}

/// Multisets of absolute values agree, ignoring zeros.
pub fn same_abs_multiset(a: &[f64], b: &[f64]) -> bool {
    let norm = |v: &[f64]| {
        let mut s: Vec<f64> = v.iter().map(|x| x.abs()).filter(|x| *x != 0.0).collect();
        s.sort_by(f64::total_cmp);
        s
    };
    let (x, y) = (norm(a), norm(b));
    x.len() == y.len()
        && x.iter()
            .zip(&y)
            .all(|(p, q)| (p - q).abs() <= 1e-12 * p.max(*q))
}

pub fn marcinkiewicz_verdict(
    a: &[f64],
    b: &[f64],
    dist: &DistributionSpec,
) -> MarcinkiewiczVerdict {
    if !dist.has_all_moments() {
        MarcinkiewiczVerdict::NotApplicable
    } else if same_abs_multiset(a, b) {
        MarcinkiewiczVerdict::PermutationUpToSign
    } else {
        MarcinkiewiczVerdict::GaussianForced
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fig_left() -> (Vec<f64>, Vec<f64>) {
        (
            vec![0.5f64.sqrt(), 0.25f64.sqrt(), 0.25f64.sqrt()],
            vec![0.4f64.sqrt(), 0.4f64.sqrt(), 0.2f64.sqrt()],
        )
    }

    /// Counts sign changes of `tau` on a fine grid and locates them by bisection.
    fn grid_roots(a2: &[f64], b2: &[f64], x_max: f64) -> Vec<f64> {
        let tau = |x: f64| {
            a2.iter().map(|s| s.powf(x)).sum::<f64>() - b2.iter().map(|s| s.powf(x)).sum::<f64>()
        };
        let n = 20_000;
        let mut roots = Vec::new();
        let mut prev = (1e-9, tau(1e-9));
        for i in 1..=n {
            let x = x_max * i as f64 / n as f64;
            let v = tau(x);
            if v == 0.0 {
                roots.push(x);
            } else if prev.1 != 0.0 && v.signum() != prev.1.signum() {
                let (mut l, mut r) = (prev.0, x);
                for _ in 0..100 {
                    let m = 0.5 * (l + r);
                    if tau(m).signum() == prev.1.signum() {
                        l = m;
                    } else {
                        r = m;
                    }
                }
                roots.push(0.5 * (l + r));
            }
            prev = (x, v);
        }
        roots
    }

    /// Searches squared coefficients on a quarter grid for a pair whose only positive root is 0.5.
    fn search_sole_root_half() -> (Vec<f64>, Vec<f64>) {
        let grid: Vec<f64> = (1..=8).map(|k| k as f64 / 4.0).collect();
        for &a1 in &grid {
            for &b1 in &grid {
                for &b2 in &grid {
                    let roots = grid_roots(&[a1], &[b1, b2], 10.0);
                    if roots.len() == 1 && (roots[0] - 0.5).abs() < 1e-9 {
                        return (vec![a1.sqrt(), 0.0, 0.0], vec![b1.sqrt(), b2.sqrt(), 0.0]);
                    }
                }
            }
        }
        panic!("no instance found");
    }

    #[test]
    fn closed_form_tau() {
        let (v, d) = tau_eval(&[1.0, 1.0], &[2f64.sqrt(), 0.0], 1.0).unwrap();
        assert!(v.abs() < 1e-14);
        assert!((d + 2.0 * 2f64.ln()).abs() < 1e-14);
        let (a, b) = fig_left();
        assert!(tau_eval(&a, &b, 1.0).unwrap().0.abs() < 1e-14);
        assert_eq!(tau_eval(&[1.0, 2.0], &[1.0, 2.0], 0.7).unwrap().0, 0.0);
        assert_eq!(
            tau_eval(&[0.0], &[0.0], 1.0),
            Err(IdentError::AllZeroCoefficients)
        );
    }

    #[test]
    fn non_majorized_pair_sole_root_one() {
        let (a, b) = fig_left();
        let t = tau_roots(&a, &b).unwrap();
        assert_eq!(t.roots.len(), 1);
        assert!((t.roots[0].x - 1.0).abs() < 1e-12);
        assert_eq!(t.roots[0].multiplicity, Multiplicity::Simple);
        assert!(t.cond_a && t.cond_b);
        assert_eq!((t.p, t.q), (1, 0));
        let oracle = grid_roots(&[0.5, 0.25, 0.25], &[0.4, 0.4, 0.2], 40.0);
        assert_eq!(oracle.len(), 1);
    }

    #[test]
    fn searched_half_root_instance_fails_b() {
        let (a, b) = search_sole_root_half();
        assert_eq!(a, vec![1.0, 0.0, 0.0]);
        assert_eq!(b, vec![0.5, 0.5, 0.0]);
        let t = tau_roots(&a, &b).unwrap();
        assert_eq!(t.roots.len(), 1);
        assert!((t.xi0.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(t.roots[0].multiplicity, Multiplicity::Simple);
        assert!(!t.cond_b);
    }

    #[test]
    fn closed_form_root() {
        let t = tau_roots(&[1.0, 1.0], &[2f64.sqrt(), 0.0]).unwrap();
        assert_eq!(t.roots.len(), 1);
        assert!((t.xi0.unwrap() - 1.0).abs() < 1e-12);
        assert!(t.cond_a && t.cond_b);
        assert_eq!((t.p, t.q), (0, 1));
    }

    #[test]
    fn degenerate_tau() {
        let t = tau_roots(&[1.0, -2.0, 0.0], &[2.0, 1.0]).unwrap();
        assert!(t.degenerate && t.roots.is_empty());
    }

    #[test]
    fn double_root_detected() {
        // (2^x - 2)^2 = 4^x - 4 * 2^x + 4
        let a = [vec![2.0], vec![1.0; 4]].concat();
        let b = vec![2f64.sqrt(); 4];
        let t = tau_roots(&a, &b).unwrap();
        assert_eq!(t.roots.len(), 1, "{:?}", t.roots);
        assert!((t.roots[0].x - 1.0).abs() < 1e-6);
        assert_eq!(t.roots[0].multiplicity, Multiplicity::Double);
        assert!(t.cond_b);
    }

    #[test]
    fn multiple_roots_and_condition_a() {
        // (2^x - 2)(2^x - 4) = 4^x - 6*2^x + 8: simple zeros at 1 and 2.
        let a = [vec![2.0], vec![1.0; 8]].concat();
        let b = vec![2f64.sqrt(); 6];
        let t = tau_roots(&a, &b).unwrap();
        let xs: Vec<f64> = t.roots.iter().map(|r| r.x).collect();
        assert_eq!(xs.len(), 2);
        assert!((xs[0] - 1.0).abs() < 1e-9 && (xs[1] - 2.0).abs() < 1e-9);
        assert!(t.cond_a && t.cond_b, "{:?}", t);
    }

    #[test]
    fn classification_stable_under_tolerance_halving() {
        let half = TauTolerances {
            integer: 0.5e-6,
            derivative: 0.5e-8,
        };
        let cases: Vec<(Vec<f64>, Vec<f64>)> = vec![
            fig_left(),
            (vec![2.0, 0.0, 0.0], vec![1.0, 1.0, 0.0]),
            (vec![1.0, 1.0], vec![2f64.sqrt(), 0.0]),
            ([vec![2.0], vec![1.0; 4]].concat(), vec![2f64.sqrt(); 4]),
        ];
        for (a, b) in cases {
            let full = tau_roots(&a, &b).unwrap();
            let halved = tau_roots_with(&a, &b, half).unwrap();
            assert_eq!(full.roots.len(), halved.roots.len());
            for (x, y) in full.roots.iter().zip(&halved.roots) {
                assert_eq!(x.multiplicity, y.multiplicity);
            }
            assert_eq!((full.cond_a, full.cond_b), (halved.cond_a, halved.cond_b));
        }
    }

    #[test]
    fn linnik_examples() {
        let (a, b) = fig_left();
        let r = linnik_check(&a, &b).unwrap();
        assert!(r.applies && r.gaussian_forced);
        assert!((r.sum_a - 1.707_106_781_186_547_5).abs() < 1e-12);
        assert!(r.mean_forced_zero);
        assert!(!r.variance_forced_zero);

        let r = linnik_check(&[1.0, 1.0], &[2f64.sqrt(), 0.0]).unwrap();
        assert!(r.applies && r.mean_forced_zero && !r.variance_forced_zero);

        assert!(matches!(
            linnik_check(&[1.0, 1.0], &[1.0, 1.0]),
            Err(IdentError::PreconditionUnmet(_))
        ));
    }

    #[test]
    fn ghurye_olkin_examples() {
        let s = |v: &[f64]| v.iter().map(|x| x.sqrt()).collect::<Vec<_>>();
        assert!(ghurye_olkin_check(
            &s(&[0.5, 0.3, 0.2]),
            &s(&[0.4, 0.4, 0.2])
        ));
        assert!(!ghurye_olkin_check(&[1.0, 2.0], &[1.0, 2.0]));
        let (a, b) = fig_left();
        assert!(!ghurye_olkin_check(&a, &b));
    }

    #[test]
    fn marcinkiewicz_examples() {
        let exp = DistributionSpec::exponential(1.0).unwrap();
        assert_eq!(
            marcinkiewicz_verdict(&[1.0, -2.0, 3.0], &[3.0, 2.0, -1.0], &exp),
            MarcinkiewiczVerdict::PermutationUpToSign
        );
        assert_eq!(
            marcinkiewicz_verdict(&[1.0, 1.0], &[2f64.sqrt(), 0.0], &exp),
            MarcinkiewiczVerdict::GaussianForced
        );
        let cauchy = DistributionSpec::student_t(1.0, 0.0, 1.0).unwrap();
        assert_eq!(
            marcinkiewicz_verdict(&[1.0], &[1.0], &cauchy),
            MarcinkiewiczVerdict::NotApplicable
        );
    }

    #[test]
    fn table_header() {
        let rows = tau_table(&[1.0, 1.0], &[2f64.sqrt(), 0.0], 3.0, 4).unwrap();
        let text = tau_table_text(&[1.0, 1.0], &[2f64.sqrt(), 0.0], &rows);
        assert!(text.starts_with("# a=1,1 b=1.4142135623730951,0\n0\t1\n"));
        assert_eq!(text.lines().count(), 5);
    }

    fn majorizing_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        // b^2 is a T-transform (Robin Hood move) of a^2, so a^2 majorizes b^2.
        (
            prop::collection::vec(0.05..1.0f64, 2..=5),
            any::<prop::sample::Index>(),
            any::<prop::sample::Index>(),
            0.05..0.95f64,
        )
            .prop_filter_map("distinct indices", |(a2, i, j, t)| {
                let n = a2.len();
                let (i, j) = (i.index(n), j.index(n));
                if i == j || (a2[i] - a2[j]).abs() < 1e-3 {
                    return None;
                }
                let mut b2 = a2.clone();
                let (x, y) = (a2[i], a2[j]);
                b2[i] = t * x + (1.0 - t) * y;
                b2[j] = (1.0 - t) * x + t * y;
                Some((
                    a2.iter().map(|v| v.sqrt()).collect(),
                    b2.iter().map(|v| v.sqrt()).collect(),
                ))
            })
    }

    proptest! {
        #[test]
        fn derivative_matches_finite_differences(
            a in prop::collection::vec(-2.0..2.0f64, 1..=5),
            b in prop::collection::vec(-2.0..2.0f64, 1..=5),
            x in 0.05..4.0f64,
        ) {
            prop_assume!(a.iter().chain(&b).any(|c| c.abs() > 1e-3));
            let h = 1e-6;
            let (_, d) = tau_eval(&a, &b, x).unwrap();
            let fd = (tau_eval(&a, &b, x + h).unwrap().0 - tau_eval(&a, &b, x - h).unwrap().0) / (2.0 * h);
            let scale = a.iter().chain(&b).map(|c| (c * c).powf(x) * (c * c).ln().abs()).sum::<f64>().max(1e-3);
            prop_assert!((d - fd).abs() <= 1e-5 * d.abs().max(scale), "{} vs {}", d, fd);
        }

        #[test]
        fn reported_roots_have_small_residuals(
            a in prop::collection::vec(0.1..2.0f64, 1..=4),
            b in prop::collection::vec(0.1..2.0f64, 1..=4),
        ) {
            if let Ok(t) = tau_roots(&a, &b) {
                let top = a.iter().chain(&b).map(|c| c * c).fold(0.0, f64::max);
                for r in &t.roots {
                    let v = tau_eval(&a, &b, r.x).unwrap().0 / top.powf(r.x);
                    prop_assert!(v.abs() <= MAX_RESIDUAL);
                }
                let oracle = grid_roots(
                    &a.iter().map(|c| c * c).collect::<Vec<_>>(),
                    &b.iter().map(|c| c * c).collect::<Vec<_>>(),
                    t.horizon.min(60.0),
                );
                for x in oracle {
                    prop_assert!(t.roots.iter().any(|r| (r.x - x).abs() < 1e-6), "missed root {}", x);
                }
            }
        }

        #[test]
        fn ghurye_olkin_implies_linnik((a, b) in majorizing_pair()) {
            prop_assert!(ghurye_olkin_check(&a, &b));
            let t = tau_roots(&a, &b).unwrap();
            prop_assert!(t.cond_a && t.cond_b, "{:?}", t);
        }

        #[test]
        fn marcinkiewicz_invariant_under_signed_permutations(
            a in prop::collection::vec(-3.0..3.0f64, 1..=5),
            b in prop::collection::vec(-3.0..3.0f64, 1..=5),
            flips in prop::collection::vec(any::<bool>(), 5),
            rot in 0usize..5,
        ) {
            let exp = DistributionSpec::exponential(1.0).unwrap();
            let base = marcinkiewicz_verdict(&a, &b, &exp);
            let mut a2: Vec<f64> = a.iter().zip(&flips).map(|(x, f)| if *f { -x } else { *x }).collect();
            let len = a2.len();
            a2.rotate_left(rot % len);
            prop_assert_eq!(base, marcinkiewicz_verdict(&a2, &b, &exp));
            prop_assert_eq!(marcinkiewicz_verdict(&b, &a, &exp), base);
        }
    }
}
