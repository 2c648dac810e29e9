//! Real-valued functions on space points with a declared Lipschitz bound.
//!
//! The two workhorses are the Lipschitz regularization
//! `envelope(f, n)(x) = max_t (f(t) - n * d(x, t))`, which is the least
//! n-Lipschitz function above `f`, and the extension
//! `mcshane_extend(partial)(x) = min_a (partial(a) + d(x, a))`, which is the
//! pointwise largest 1-Lipschitz function agreeing with `partial` on its
//! domain. Both identities are finite maxima/minima here, so they are
//! computed exactly up to rounding.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::space::MetricSpace;
use crate::tol;

/// A function from point indices to reals, together with a declared
/// Lipschitz bound.
///
/// The bound is a contract, not a computed fact: constructors that derive
/// functions (envelope, extension, transport potentials) guarantee it, while
/// [`LipFunction::new`] trusts the caller. Use [`lip_constant`] to measure
/// the true constant.
#[derive(Debug, Clone, PartialEq)]
pub struct LipFunction {
    values: BTreeMap<usize, f64>,
    lip_bound: f64,
}

impl LipFunction {
    pub fn new(values: BTreeMap<usize, f64>, lip_bound: f64) -> Result<Self> {
        if !lip_bound.is_finite() || lip_bound < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "lip_bound must be finite and nonnegative, got {lip_bound}"
            )));
        }
        for (&i, &v) in &values {
            if !v.is_finite() {
                return Err(Error::UndefinedAt { index: i });
            }
        }
        Ok(LipFunction { values, lip_bound })
    }

    /// Evaluate `f` at every point of `space`.
    pub fn from_fn(space: &MetricSpace, lip_bound: f64, f: impl Fn(usize) -> f64) -> Result<Self> {
        let values = (0..space.len()).map(|i| (i, f(i))).collect();
        LipFunction::new(values, lip_bound)
    }

    pub fn constant(space: &MetricSpace, c: f64) -> Result<Self> {
        LipFunction::from_fn(space, 0.0, |_| c)
    }

    /// The distance function `x -> d(a, x)`, which is 1-Lipschitz.
    pub fn distance_from(space: &MetricSpace, a: usize) -> Result<Self> {
        if a >= space.len() {
            return Err(Error::PointOutOfRange { index: a, len: space.len() });
        }
        LipFunction::from_fn(space, 1.0, |i| space.dist(a, i))
    }

    pub fn value(&self, i: usize) -> Option<f64> {
        self.values.get(&i).copied()
    }

    pub fn try_value(&self, i: usize) -> Result<f64> {
        self.value(i).ok_or(Error::UndefinedAt { index: i })
    }

    pub fn lip_bound(&self) -> f64 {
        self.lip_bound
    }

    pub fn values(&self) -> &BTreeMap<usize, f64> {
        &self.values
    }

    pub fn domain(&self) -> impl Iterator<Item = usize> + '_ {
        self.values.keys().copied()
    }

    pub fn is_total_on(&self, space: &MetricSpace) -> bool {
        (0..space.len()).all(|i| self.values.contains_key(&i))
    }

    /// Pointwise minimum with a constant. Clipping from above cannot increase
    /// the Lipschitz constant, so the bound is kept.
    pub fn min_with_const(&self, c: f64) -> LipFunction {
        LipFunction {
            values: self.values.iter().map(|(&i, &v)| (i, v.min(c))).collect(),
            lip_bound: self.lip_bound,
        }
    }

    /// Pointwise sum. Valid Lipschitz bounds add; for bump functions with
    /// disjoint supports the caller may know a tighter bound and override it
    /// with [`LipFunction::with_bound`].
    pub fn add(&self, other: &LipFunction) -> Result<LipFunction> {
        let mut values = BTreeMap::new();
        for (&i, &v) in &self.values {
            let w = other.try_value(i)?;
            values.insert(i, v + w);
        }
        LipFunction::new(values, self.lip_bound + other.lip_bound)
    }

    pub fn with_bound(mut self, lip_bound: f64) -> LipFunction {
        self.lip_bound = lip_bound;
        self
    }

    fn require_total(&self, space: &MetricSpace) -> Result<()> {
        for i in 0..space.len() {
            if !self.values.contains_key(&i) {
                return Err(Error::UndefinedAt { index: i });
            }
        }
        Ok(())
    }
}

/// Exact Lipschitz constant of `f` over all pairs of space points.
///
/// Requires `f` to be defined on the whole space. A one-point space has
/// constant 0. Distinct indices at distance zero with differing values give
/// `f64::INFINITY`.
pub fn lip_constant(f: &LipFunction, space: &MetricSpace) -> Result<f64> {
    f.require_total(space)?;
    Ok(max_quotient(f.values(), space))
}

/// Largest quotient `|f(i) - f(j)| / d(i, j)` over pairs in the domain of
/// `values`. Shared helper for [`lip_constant`] and the certificate checks,
/// which measure functions defined only on a support.
pub(crate) fn max_quotient(values: &BTreeMap<usize, f64>, space: &MetricSpace) -> f64 {
    let entries: Vec<(usize, f64)> = values.iter().map(|(&i, &v)| (i, v)).collect();
    let mut best = 0.0_f64;
    for (a, &(i, fi)) in entries.iter().enumerate() {
        for &(j, fj) in &entries[a + 1..] {
            let df = (fi - fj).abs();
            if df == 0.0 {
                continue;
            }
            let d = space.dist(i, j);
            if d == 0.0 {
                return f64::INFINITY;
            }
            best = best.max(df / d);
        }
    }
    best
}

/// Largest defect `|f(i) - f(j)| - bound * d(i, j)` over domain pairs;
/// nonpositive means the bound holds exactly.
pub(crate) fn max_defect(values: &BTreeMap<usize, f64>, space: &MetricSpace, bound: f64) -> f64 {
    let entries: Vec<(usize, f64)> = values.iter().map(|(&i, &v)| (i, v)).collect();
    let mut worst = f64::NEG_INFINITY;
    if entries.len() < 2 {
        return 0.0;
    }
    for (a, &(i, fi)) in entries.iter().enumerate() {
        for &(j, fj) in &entries[a + 1..] {
            let defect = (fi - fj).abs() - bound * space.dist(i, j);
            worst = worst.max(defect);
        }
    }
    worst
}

/// Least n-Lipschitz function above `f`:
/// `envelope(f, n)(x) = max_t (f(t) - n * d(x, t))`.
///
/// For every `n > 0` the result dominates `f`, is n-Lipschitz, decreases
/// pointwise as `n` grows, and equals `f` exactly once `n >= lip_constant(f)`.
pub fn envelope(f: &LipFunction, n: f64, space: &MetricSpace) -> Result<LipFunction> {
    if n <= 0.0 || !n.is_finite() {
        return Err(Error::NonPositive { what: "envelope slope", value: n });
    }
    f.require_total(space)?;
    let sources: Vec<(usize, f64)> = f.values().iter().map(|(&i, &v)| (i, v)).collect();
    let mut values = BTreeMap::new();
    for x in 0..space.len() {
        let mut best = f64::NEG_INFINITY;
        for &(t, ft) in &sources {
            best = best.max(ft - n * space.dist(x, t));
        }
        values.insert(x, best);
    }
    LipFunction::new(values, n)
}

/// Pointwise largest 1-Lipschitz extension of a partial assignment:
/// `psi(x) = min_a (partial(a) + d(x, a))`.
///
/// The partial values must already be 1-Lipschitz on their domain (checked
/// with an absolute slack of [`tol::LIP_SLACK`]); the violating pair is
/// reported otherwise. On the domain the extension returns the given values
/// unchanged.
pub fn mcshane_extend(
    partial: &BTreeMap<usize, f64>,
    space: &MetricSpace,
) -> Result<LipFunction> {
    if partial.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot extend an empty partial assignment".into(),
        ));
    }
    let entries: Vec<(usize, f64)> = partial.iter().map(|(&i, &v)| (i, v)).collect();
    for (a, &(i, fi)) in entries.iter().enumerate() {
        if i >= space.len() {
            return Err(Error::PointOutOfRange { index: i, len: space.len() });
        }
        if !fi.is_finite() {
            return Err(Error::UndefinedAt { index: i });
        }
        for &(j, fj) in &entries[a + 1..] {
            let df = (fi - fj).abs();
            let d = space.dist(i, j);
            if df > d + tol::LIP_SLACK {
                return Err(Error::NotLipschitz { i, j, observed: df, allowed: d });
            }
        }
    }
    let mut values = BTreeMap::new();
    for x in 0..space.len() {
        let v = match partial.get(&x) {
            Some(&given) => given,
            None => mcshane_value(&entries, space, x),
        };
        values.insert(x, v);
    }
    LipFunction::new(values, 1.0)
}

/// Unchecked McShane transform used to re-project nearly-1-Lipschitz values
/// (for example dual potentials carrying round-off) onto an exactly
/// 1-Lipschitz function. Values may only move down, and move at most by the
/// Lipschitz defect of the input.
pub(crate) fn mcshane_reproject(
    values: &BTreeMap<usize, f64>,
    space: &MetricSpace,
) -> BTreeMap<usize, f64> {
    let entries: Vec<(usize, f64)> = values.iter().map(|(&i, &v)| (i, v)).collect();
    values
        .keys()
        .map(|&x| (x, mcshane_value(&entries, space, x)))
        .collect()
}

fn mcshane_value(anchors: &[(usize, f64)], space: &MetricSpace, x: usize) -> f64 {
    let mut best = f64::INFINITY;
    for &(a, fa) in anchors {
        best = best.min(fa + space.dist(x, a));
    }
    best
}
