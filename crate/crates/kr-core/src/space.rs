//! Finite metric spaces over an indexed point registry.
//!
//! A [`MetricSpace`] is either *euclidean* (points carry coordinates and
//! distances are computed on demand) or *matrix* (an explicit distance
//! table). Points are identified by their registry index; coordinates are
//! payload only. Spaces are immutable: registering new points goes through
//! [`SpaceBuilder`], which copies the registry and appends, so existing
//! indices stay valid in every later version of the space.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tol;

/// Grid cell width for the nearest-duplicate lookup. Much coarser than the
/// merge tolerance so a candidate is almost always found in a single cell.
const LOOKUP_CELL: f64 = 1e-9;

#[derive(Debug, Clone)]
enum Mode {
    Euclidean { dim: usize, coords: Vec<f64> },
    Matrix { n: usize, dist: Vec<f64> },
}

/// Quantized coordinate index used to find merge candidates without a full
/// scan. Maps a grid cell to the point indices whose coordinates fall in it.
#[derive(Debug, Clone, Default)]
struct Lookup {
    cells: HashMap<Vec<i64>, Vec<usize>>,
}

fn quantize(x: f64) -> i64 {
    let q = (x / LOOKUP_CELL).floor();
    if q >= i64::MAX as f64 {
        i64::MAX
    } else if q <= i64::MIN as f64 {
        i64::MIN
    } else {
        q as i64
    }
}

impl Lookup {
    fn insert(&mut self, coords: &[f64], index: usize) {
        let key: Vec<i64> = coords.iter().map(|&x| quantize(x)).collect();
        self.cells.entry(key).or_default().push(index);
    }

    /// Visit every registered index whose cell could contain a point within
    /// `tol` of `coords`. Cells neighbouring a coordinate are only visited
    /// when that coordinate sits within `tol` of the cell boundary.
    fn candidates(&self, coords: &[f64], tolerance: f64, mut visit: impl FnMut(usize)) {
        let mut choices: Vec<[i64; 2]> = Vec::with_capacity(coords.len());
        let mut counts: Vec<usize> = Vec::with_capacity(coords.len());
        for &x in coords {
            let q = quantize(x);
            let lo = quantize(x - tolerance);
            let hi = quantize(x + tolerance);
            if lo != q {
                choices.push([q, lo]);
                counts.push(2);
            } else if hi != q {
                choices.push([q, hi]);
                counts.push(2);
            } else {
                choices.push([q, q]);
                counts.push(1);
            }
        }
        let mut key = vec![0_i64; coords.len()];
        let mut pick = vec![0_usize; coords.len()];
        loop {
            for d in 0..coords.len() {
                key[d] = choices[d][pick[d]];
            }
            if let Some(indices) = self.cells.get(&key) {
                for &i in indices {
                    visit(i);
                }
            }
            let mut d = 0;
            loop {
                if d == coords.len() {
                    return;
                }
                pick[d] += 1;
                if pick[d] < counts[d] {
                    break;
                }
                pick[d] = 0;
                d += 1;
            }
        }
    }
}

/// An immutable finite metric space.
#[derive(Debug)]
pub struct MetricSpace {
    mode: Mode,
    lookup: Lookup,
}

impl MetricSpace {
    /// Build a euclidean space from a nonempty list of coordinate vectors,
    /// all of the same dimension.
    pub fn euclidean(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySpace);
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::BadMatrix("points must have at least one coordinate".into()));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        let mut lookup = Lookup::default();
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    point: i,
                    expected: dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteCoordinate { point: i });
            }
            lookup.insert(p, i);
            coords.extend_from_slice(p);
        }
        Ok(MetricSpace {
            mode: Mode::Euclidean { dim, coords },
            lookup,
        })
    }

    /// Build a matrix space from an explicit square distance table. Shape and
    /// finiteness are enforced here; metric axioms are reported by
    /// [`MetricSpace::validate`] rather than rejected.
    pub fn from_matrix(dist: Vec<Vec<f64>>) -> Result<Self> {
        let n = dist.len();
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return Err(Error::BadMatrix(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::BadMatrix(format!("row {i} contains a non-finite entry")));
            }
            flat.extend_from_slice(row);
        }
        Ok(MetricSpace {
            mode: Mode::Matrix { n, dist: flat },
            lookup: Lookup::default(),
        })
    }

    /// Number of registered points.
    pub fn len(&self) -> usize {
        match &self.mode {
            Mode::Euclidean { dim, coords } => coords.len() / dim,
            Mode::Matrix { n, .. } => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinate dimension, or `None` for matrix mode.
    pub fn dim(&self) -> Option<usize> {
        match &self.mode {
            Mode::Euclidean { dim, .. } => Some(*dim),
            Mode::Matrix { .. } => None,
        }
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.mode, Mode::Euclidean { .. })
    }

    /// Coordinates of point `i` (euclidean mode only).
    pub fn point(&self, i: usize) -> Option<&[f64]> {
        match &self.mode {
            Mode::Euclidean { dim, coords } => coords.get(i * dim..(i + 1) * dim),
            Mode::Matrix { .. } => None,
        }
    }

    /// Distance between two registered points.
    ///
    /// Panics if an index is out of range; callers validate indices at their
    /// own boundaries.
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match &self.mode {
            Mode::Euclidean { dim, coords } => {
                let a = &coords[i * dim..(i + 1) * dim];
                let b = &coords[j * dim..(j + 1) * dim];
                euclid(a, b)
            }
            Mode::Matrix { n, dist } => {
                assert!(i < *n && j < *n, "point index out of range");
                dist[i * n + j]
            }
        }
    }

    /// Check the metric axioms and report every violation found.
    ///
    /// Euclidean distances satisfy the axioms by construction, so euclidean
    /// spaces always produce an empty report. For matrix spaces the triangle
    /// inequality is checked with a relative slack of
    /// [`tol::TRIANGLE_REL`] to tolerate tables produced by rounded
    /// arithmetic.
    pub fn validate(&self) -> Vec<ValidationIssue> {
        let mut issues = Vec::new();
        let (n, dist) = match &self.mode {
            Mode::Euclidean { .. } => return issues,
            Mode::Matrix { n, dist } => (*n, dist),
        };
        let d = |i: usize, j: usize| dist[i * n + j];
        for i in 0..n {
            if d(i, i) != 0.0 {
                issues.push(ValidationIssue::NonzeroDiagonal { i, value: d(i, i) });
            }
            for j in 0..n {
                if d(i, j) < 0.0 {
                    issues.push(ValidationIssue::NegativeDistance { i, j, value: d(i, j) });
                }
                if i < j && d(i, j) != d(j, i) {
                    issues.push(ValidationIssue::Asymmetry {
                        i,
                        j,
                        forward: d(i, j),
                        backward: d(j, i),
                    });
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if j == i {
                    continue;
                }
                for k in 0..n {
                    if k == i || k == j {
                        continue;
                    }
                    let direct = d(i, k);
                    let via = d(i, j) + d(j, k);
                    let slack = tol::TRIANGLE_REL * direct.abs().max(1.0);
                    if direct > via + slack {
                        issues.push(ValidationIssue::TriangleViolation {
                            i,
                            j,
                            k,
                            excess: direct - via,
                        });
                    }
                }
            }
        }
        issues
    }

    fn coords(&self) -> Option<&[f64]> {
        match &self.mode {
            Mode::Euclidean { coords, .. } => Some(coords),
            Mode::Matrix { .. } => None,
        }
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s.sqrt()
}

/// A single metric-axiom violation found by [`MetricSpace::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum ValidationIssue {
    Asymmetry { i: usize, j: usize, forward: f64, backward: f64 },
    NegativeDistance { i: usize, j: usize, value: f64 },
    NonzeroDiagonal { i: usize, value: f64 },
    TriangleViolation { i: usize, j: usize, k: usize, excess: f64 },
}

impl std::fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ValidationIssue::Asymmetry { i, j, forward, backward } => {
                write!(f, "d({i},{j}) = {forward} but d({j},{i}) = {backward}")
            }
            ValidationIssue::NegativeDistance { i, j, value } => {
                write!(f, "d({i},{j}) = {value} is negative")
            }
            ValidationIssue::NonzeroDiagonal { i, value } => {
                write!(f, "d({i},{i}) = {value}, expected 0")
            }
            ValidationIssue::TriangleViolation { i, j, k, excess } => {
                write!(f, "d({i},{k}) exceeds d({i},{j}) + d({j},{k}) by {excess}")
            }
        }
    }
}

/// Copy-on-extend editor for euclidean spaces.
///
/// Cloning the registry once and batching insertions keeps a pushforward or
/// a Markov step at one copy of the space instead of one per image point.
/// Images landing within [`tol::MERGE`] of a registered point are identified
/// with it instead of being appended.
pub struct SpaceBuilder {
    base: Arc<MetricSpace>,
    dim: usize,
    extra: Vec<f64>,
    lookup: Option<Lookup>,
}

impl SpaceBuilder {
    pub fn new(base: &Arc<MetricSpace>) -> Result<Self> {
        let dim = base.dim().ok_or(Error::MatrixSpaceFrozen)?;
        Ok(SpaceBuilder {
            base: Arc::clone(base),
            dim,
            extra: Vec::new(),
            lookup: None,
        })
    }

    pub fn len(&self) -> usize {
        self.base.len() + self.extra.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn point_at(&self, i: usize) -> &[f64] {
        let n = self.base.len();
        if i < n {
            self.base.point(i).expect("base index in range")
        } else {
            let off = (i - n) * self.dim;
            &self.extra[off..off + self.dim]
        }
    }

    /// Return the index of a registered point within the merge tolerance of
    /// `coords`, or register `coords` as a new point.
    pub fn find_or_insert(&mut self, coords: &[f64]) -> Result<usize> {
        if coords.len() != self.dim {
            return Err(Error::DimensionMismatch {
                point: self.len(),
                expected: self.dim,
                got: coords.len(),
            });
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteCoordinate { point: self.len() });
        }
        let lookup = match &self.lookup {
            Some(l) => l,
            None => &self.base.lookup,
        };
        let mut found: Option<usize> = None;
        lookup.candidates(coords, tol::MERGE, |i| {
            if euclid(coords, self.point_at(i)) <= tol::MERGE {
                found = Some(match found {
                    Some(prev) => prev.min(i),
                    None => i,
                });
            }
        });
        if let Some(i) = found {
            return Ok(i);
        }
        let index = self.len();
        if self.lookup.is_none() {
            self.lookup = Some(self.base.lookup.clone());
        }
        self.lookup.as_mut().unwrap().insert(coords, index);
        self.extra.extend_from_slice(coords);
        Ok(index)
    }

    /// Finish editing. Returns the base space unchanged (and unshared work)
    /// when nothing was appended.
    pub fn finish(self) -> Arc<MetricSpace> {
        if self.extra.is_empty() {
            return self.base;
        }
        let mut coords = self
            .base
            .coords()
            .expect("builder only wraps euclidean spaces")
            .to_vec();
        coords.extend_from_slice(&self.extra);
        Arc::new(MetricSpace {
            mode: Mode::Euclidean { dim: self.dim, coords },
            lookup: self.lookup.expect("lookup cloned on first insert"),
        })
    }
}

/// Resolve two space versions to their common extension.
///
/// Spaces are compatible when one's registry is a bit-exact prefix of the
/// other's, which is exactly what [`SpaceBuilder`] produces. Returns the
/// longer of the two; errors with [`Error::SpaceMismatch`] otherwise.
pub fn union_space(a: &Arc<MetricSpace>, b: &Arc<MetricSpace>) -> Result<Arc<MetricSpace>> {
    if Arc::ptr_eq(a, b) {
        return Ok(Arc::clone(a));
    }
    match (&a.mode, &b.mode) {
        (
            Mode::Euclidean { dim: da, coords: ca },
            Mode::Euclidean { dim: db, coords: cb },
        ) => {
            if da != db {
                return Err(Error::SpaceMismatch);
            }
            if ca.len() <= cb.len() && cb[..ca.len()] == ca[..] {
                Ok(Arc::clone(b))
            } else if cb.len() < ca.len() && ca[..cb.len()] == cb[..] {
                Ok(Arc::clone(a))
            } else {
                Err(Error::SpaceMismatch)
            }
        }
        (Mode::Matrix { n: na, dist: ta }, Mode::Matrix { n: nb, dist: tb }) => {
            if na == nb && ta == tb {
                Ok(Arc::clone(a))
            } else {
                Err(Error::SpaceMismatch)
            }
        }
        _ => Err(Error::SpaceMismatch),
    }
}
