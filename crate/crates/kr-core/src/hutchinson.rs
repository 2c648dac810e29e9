//! Contraction systems and certified iteration to their invariant measures.
//!
//! A system is a finite list of contractions of euclidean space with a
//! probability weight each. Its Markov operator sends a measure `nu` to the
//! weighted sum of its images under the maps; the operator contracts the
//! transport metric with factor `c = sum p_i * lip_i`, so from any starting
//! probability measure the iteration converges to the unique invariant
//! measure. The iteration here is inexact in a controlled way: after each
//! step the support may be coarsened to a capped size, and the coarsening
//! error is folded into the stopping bound so the final certificate
//!
//! ```text
//! H(iterate, invariant) <= (c/(1-c)) * last_step_distance
//!                          + coarsening_bound / (1-c)
//! ```
//!
//! remains sound. Countable systems enter through explicit truncation with
//! caller-declared tail sums; nothing here ever enumerates infinitely.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::measure::{kahan_total, DiscreteMeasure};
use crate::space::{union_space, SpaceBuilder};
use crate::tol;
use crate::transport::kr_distance;

/// Iteration stops after this many steps when no tolerance is reached.
pub const DEFAULT_STEP_LIMIT: usize = 10_000;

/// Default support cap: room for a two-map system to depth 12 uncoarsened.
pub const DEFAULT_SUPPORT_CAP: usize = 4096;

const SAMPLE_PAIRS: usize = 32;

/// A contraction of euclidean space with a certified Lipschitz constant and
/// a known fixed point.
#[derive(Debug, Clone)]
pub struct ContractionMap {
    kind: MapKind,
    lip: f64,
    fixed: Vec<f64>,
}

#[derive(Debug, Clone)]
enum MapKind {
    /// x -> A x + b, row-major matrix.
    Affine { a: Vec<f64>, b: Vec<f64> },
    /// x -> fix + ratio * (x - fix).
    Similarity { ratio: f64, fix: Vec<f64> },
}

impl ContractionMap {
    /// Affine contraction `x -> A x + b`. The Lipschitz constant is the
    /// operator norm of `A`, estimated by power iteration and inflated by a
    /// relative safety margin; the estimate is then cross-checked against
    /// sampled difference quotients.
    pub fn affine(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        let (flat, dim) = flatten_matrix(&a, &b)?;
        let lip = operator_norm(&flat, dim) * (1.0 + 1e-10);
        Self::build_affine(flat, b, lip)
    }

    /// Affine contraction with a caller-declared Lipschitz constant, for
    /// matrices whose norm is known exactly. The declaration is checked
    /// against sampled difference quotients.
    pub fn affine_with_lip(a: Vec<Vec<f64>>, b: Vec<f64>, lip: f64) -> Result<Self> {
        let (flat, _) = flatten_matrix(&a, &b)?;
        if !lip.is_finite() || lip < 0.0 {
            return Err(Error::NonPositive { what: "Lipschitz constant", value: lip });
        }
        Self::build_affine(flat, b, lip)
    }

    fn build_affine(flat: Vec<f64>, b: Vec<f64>, lip: f64) -> Result<Self> {
        if lip >= 1.0 {
            return Err(Error::NotContractive { lip });
        }
        let map = ContractionMap {
            kind: MapKind::Affine { a: flat, b },
            lip,
            fixed: Vec::new(),
        };
        let fixed = map.solve_fixed_point()?;
        let map = ContractionMap { fixed, ..map };
        map.check_sampled_quotient()?;
        map.check_fixed_point()?;
        Ok(map)
    }

    /// Similarity `x -> fix + ratio * (x - fix)`; the fixed point is `fix`
    /// and the Lipschitz constant is `|ratio|`.
    pub fn similarity(ratio: f64, fix: Vec<f64>) -> Result<Self> {
        if fix.is_empty() {
            return Err(Error::BadSystem("similarity needs a nonempty fixed point".into()));
        }
        if fix.iter().any(|x| !x.is_finite()) || !ratio.is_finite() {
            return Err(Error::BadSystem("similarity parameters must be finite".into()));
        }
        let lip = ratio.abs();
        if lip >= 1.0 {
            return Err(Error::NotContractive { lip });
        }
        Ok(ContractionMap {
            fixed: fix.clone(),
            kind: MapKind::Similarity { ratio, fix },
            lip,
        })
    }

    pub fn dim(&self) -> usize {
        self.fixed.len()
    }

    pub fn lip(&self) -> f64 {
        self.lip
    }

    pub fn fixed_point(&self) -> &[f64] {
        &self.fixed
    }

    /// Apply the map. The input length must equal [`dim`](Self::dim); this
    /// is checked by the callers that loop over measure atoms.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim());
        match &self.kind {
            MapKind::Affine { a, b } => {
                let dim = b.len();
                let mut y = b.clone();
                for (row, yi) in y.iter_mut().enumerate() {
                    let mut acc = *yi;
                    for (col, &xj) in x.iter().enumerate() {
                        acc += a[row * dim + col] * xj;
                    }
                    *yi = acc;
                }
                y
            }
            MapKind::Similarity { ratio, fix } => fix
                .iter()
                .zip(x)
                .map(|(&f, &xi)| f + ratio * (xi - f))
                .collect(),
        }
    }

    fn solve_fixed_point(&self) -> Result<Vec<f64>> {
        match &self.kind {
            MapKind::Similarity { fix, .. } => Ok(fix.clone()),
            MapKind::Affine { a, b } => {
                // (I - A) x = b
                let dim = b.len();
                let mut lhs = vec![0.0; dim * dim];
                for row in 0..dim {
                    for col in 0..dim {
                        let id = if row == col { 1.0 } else { 0.0 };
                        lhs[row * dim + col] = id - a[row * dim + col];
                    }
                }
                solve_linear(lhs, b.clone())
            }
        }
    }

    fn check_fixed_point(&self) -> Result<()> {
        let image = self.apply(&self.fixed);
        let residual = image
            .iter()
            .zip(&self.fixed)
            .map(|(y, x)| (y - x) * (y - x))
            .sum::<f64>()
            .sqrt();
        if residual > 1e-9 {
            return Err(Error::BadSystem(format!(
                "fixed point residual {residual:.3e} exceeds 1e-9"
            )));
        }
        Ok(())
    }

    /// Random difference quotients must respect the declared constant. This
    /// guards both a user-declared `lip` and the power-iteration estimate.
    fn check_sampled_quotient(&self) -> Result<()> {
        let dim = self.dim();
        let mut state = 0x1234_5678_9abc_def0u64;
        let mut coord = |scale: f64| (unit_f64(&mut state) * 2.0 - 1.0) * scale;
        for _ in 0..SAMPLE_PAIRS {
            let x: Vec<f64> = (0..dim).map(|_| coord(2.0)).collect();
            let y: Vec<f64> = (0..dim).map(|_| coord(2.0)).collect();
            let dxy = dist(&x, &y);
            if dxy == 0.0 {
                continue;
            }
            let quotient = dist(&self.apply(&x), &self.apply(&y)) / dxy;
            if quotient > self.lip + 1e-9 {
                return Err(Error::BadSystem(format!(
                    "observed Lipschitz quotient {quotient} exceeds declared {}",
                    self.lip
                )));
            }
        }
        Ok(())
    }
}

fn flatten_matrix(a: &[Vec<f64>], b: &[f64]) -> Result<(Vec<f64>, usize)> {
    let dim = b.len();
    if dim == 0 {
        return Err(Error::BadSystem("affine map needs dimension at least 1".into()));
    }
    if a.len() != dim || a.iter().any(|row| row.len() != dim) {
        return Err(Error::BadMatrix(format!(
            "matrix must be {dim}x{dim} to match the offset"
        )));
    }
    let flat: Vec<f64> = a.iter().flatten().copied().collect();
    if flat.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::BadMatrix("matrix entries must be finite".into()));
    }
    Ok((flat, dim))
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn unit_f64(state: &mut u64) -> f64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

/// Spectral norm by power iteration on `A^T A`; deterministic start with a
/// mild tilt so it cannot sit orthogonal to the leading eigenvector.
fn operator_norm(a: &[f64], dim: usize) -> f64 {
    let mut v: Vec<f64> = (0..dim).map(|i| 1.0 + i as f64 * 1e-3).collect();
    let mut av = vec![0.0; dim];
    let mut atav = vec![0.0; dim];
    for _ in 0..200 {
        for (row, slot) in av.iter_mut().enumerate() {
            *slot = (0..dim).map(|col| a[row * dim + col] * v[col]).sum();
        }
        for (col, slot) in atav.iter_mut().enumerate() {
            *slot = (0..dim).map(|row| a[row * dim + col] * av[row]).sum();
        }
        let norm = atav.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        for (vi, &ai) in v.iter_mut().zip(&atav) {
            *vi = ai / norm;
        }
    }
    for (row, slot) in av.iter_mut().enumerate() {
        *slot = (0..dim).map(|col| a[row * dim + col] * v[col]).sum();
    }
    av.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gaussian elimination with partial pivoting; enough for the desk-scale
/// dimensions contraction systems live in.
fn solve_linear(mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().fold(1.0f64, |acc, &x| acc.max(x.abs()));
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r, &s| {
                a[r * n + col]
                    .abs()
                    .partial_cmp(&a[s * n + col].abs())
                    .unwrap()
            })
            .unwrap();
        if a[pivot_row * n + col].abs() < 1e-12 * scale {
            return Err(Error::SingularSystem);
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            b.swap(col, pivot_row);
        }
        for row in col + 1..n {
            let factor = a[row * n + col] / a[col * n + col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col * n + k] * b[k];
        }
        b[col] = acc / a[col * n + col];
    }
    Ok(b)
}

/// A finite weighted family of contractions acting on a common dimension.
#[derive(Debug, Clone)]
pub struct ContractionSystem {
    maps: Vec<ContractionMap>,
    probs: Vec<f64>,
    factor: f64,
    moment_sum: f64,
}

impl ContractionSystem {
    /// Validate weights and contraction margins. The probabilities must sum
    /// to one; every map must share one dimension; the largest Lipschitz
    /// constant must stay strictly under 1.
    pub fn new(maps: Vec<ContractionMap>, probs: Vec<f64>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::BadSystem("a system needs at least one map".into()));
        }
        if maps.len() != probs.len() {
            return Err(Error::BadSystem(format!(
                "{} maps with {} probabilities",
                maps.len(),
                probs.len()
            )));
        }
        let dim = maps[0].dim();
        if maps.iter().any(|m| m.dim() != dim) {
            return Err(Error::BadSystem("maps act on different dimensions".into()));
        }
        if probs.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::BadSystem("probabilities must be finite and nonnegative".into()));
        }
        let mass = kahan_total(probs.iter().copied());
        if (mass - 1.0).abs() > tol::MASS {
            return Err(Error::NotProbability { mass });
        }
        let sup = maps.iter().map(ContractionMap::lip).fold(0.0f64, f64::max);
        if sup >= 1.0 - 1e-12 {
            return Err(Error::NotContractive { lip: sup });
        }
        let factor = kahan_total(maps.iter().zip(&probs).map(|(m, &p)| p * m.lip()));
        let moment_sum = kahan_total(
            maps.iter()
                .zip(&probs)
                .map(|(m, &p)| p * dist(maps[0].fixed_point(), m.fixed_point())),
        );
        Ok(ContractionSystem { maps, probs, factor, moment_sum })
    }

    pub fn maps(&self) -> &[ContractionMap] {
        &self.maps
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn dim(&self) -> usize {
        self.maps[0].dim()
    }

    /// The modulus `c = sum p_i * lip_i` with which the Markov operator
    /// contracts the transport metric. Tighter than the largest individual
    /// constant, and the factor the iteration bound uses.
    pub fn contraction_factor(&self) -> f64 {
        self.factor
    }

    /// `sum p_i * dist(fix_1, fix_i)`: the summability quantity that keeps
    /// first moments finite along the iteration.
    pub fn moment_sum(&self) -> f64 {
        self.moment_sum
    }
}

/// Caller-declared bounds on the discarded tail of a countable family:
/// the probability mass past the truncation point and the corresponding
/// partial sum `sum_{i>N} p_i * dist(x_1, x_i)`.
#[derive(Debug, Clone, Copy)]
pub struct TailBound {
    pub mass: f64,
    pub moment: f64,
}

/// What truncation kept and what it certifiably discarded.
#[derive(Debug, Clone, Copy)]
pub struct TailReport {
    /// Probability mass of the discarded maps.
    pub mass: f64,
    /// Discarded part of the moment sum.
    pub moment: f64,
    /// Probability mass of the kept maps before renormalization.
    pub kept_probability: f64,
}

/// Keep the first `n` members of a countable family, renormalize their
/// probabilities to sum to one, and pass the caller's tail bounds through
/// after a consistency check: kept mass plus declared tail mass must equal
/// one within 1e-9.
pub fn truncate_countable(
    family: impl IntoIterator<Item = (ContractionMap, f64)>,
    n: usize,
    tail: TailBound,
) -> Result<(ContractionSystem, TailReport)> {
    if n == 0 {
        return Err(Error::InvalidArgument("truncation must keep at least one map".into()));
    }
    if !tail.mass.is_finite() || tail.mass < 0.0 || tail.mass >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "tail mass bound {} must lie in [0, 1)",
            tail.mass
        )));
    }
    if !tail.moment.is_finite() || tail.moment < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tail moment bound {} must be finite and nonnegative",
            tail.moment
        )));
    }
    let mut maps = Vec::with_capacity(n);
    let mut probs = Vec::with_capacity(n);
    for (map, p) in family.into_iter().take(n) {
        maps.push(map);
        probs.push(p);
    }
    if maps.len() < n {
        return Err(Error::InvalidArgument(format!(
            "family yielded only {} members, {n} requested",
            maps.len()
        )));
    }
    let kept = kahan_total(probs.iter().copied());
    if (kept + tail.mass - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "kept mass {kept} plus tail mass {} does not close to 1",
            tail.mass
        )));
    }
    for p in &mut probs {
        *p /= kept;
    }
    // Absorb the division round-off so the system constructor's exact-sum
    // check cannot trip over it.
    let rescaled = kahan_total(probs.iter().copied());
    if let Some(p0) = probs.first_mut() {
        *p0 += 1.0 - rescaled;
    }
    let system = ContractionSystem::new(maps, probs)?;
    let report = TailReport { mass: tail.mass, moment: tail.moment, kept_probability: kept };
    Ok((system, report))
}

/// One application of the Markov operator: each atom is pushed through
/// every map and the images are mixed with the system's weights. All images
/// land in one shared extension of the input space, so the result remains
/// comparable with the input and with other images built the same way.
pub fn markov_step(nu: &DiscreteMeasure, sys: &ContractionSystem) -> Result<DiscreteMeasure> {
    let mut builder = SpaceBuilder::new(nu.space())?;
    let atoms = image_atoms(&mut builder, nu, sys)?;
    DiscreteMeasure::new(builder.finish(), atoms)
}

/// One Markov step of two measures through one shared space extension, so
/// the images can be compared directly. The measures must live on the same
/// space (or compatible generations of it).
pub fn markov_step_pair(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    sys: &ContractionSystem,
) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    let shared = union_space(mu.space(), nu.space())?;
    let mut builder = SpaceBuilder::new(&shared)?;
    let image_mu = image_atoms(&mut builder, mu, sys)?;
    let image_nu = image_atoms(&mut builder, nu, sys)?;
    let space = builder.finish();
    Ok((
        DiscreteMeasure::new(Arc::clone(&space), image_mu)?,
        DiscreteMeasure::new(space, image_nu)?,
    ))
}

/// Transport distance between the images of one measure under two systems,
/// `H(T_A nu, T_B nu)`. Dividing by `1 - c` turns a uniform bound on this
/// quantity into a bound on the distance between the two invariant
/// measures; along an iteration trajectory it serves as a perturbation
/// gauge for truncated families.
pub fn operator_gap(
    sys_a: &ContractionSystem,
    sys_b: &ContractionSystem,
    nu: &DiscreteMeasure,
) -> Result<f64> {
    let mut builder = SpaceBuilder::new(nu.space())?;
    let image_a = image_atoms(&mut builder, nu, sys_a)?;
    let image_b = image_atoms(&mut builder, nu, sys_b)?;
    let space = builder.finish();
    let ta = DiscreteMeasure::new(Arc::clone(&space), image_a)?;
    let tb = DiscreteMeasure::new(space, image_b)?;
    Ok(kr_distance(&ta, &tb)?.value)
}

fn image_atoms(
    builder: &mut SpaceBuilder,
    nu: &DiscreteMeasure,
    sys: &ContractionSystem,
) -> Result<BTreeMap<usize, f64>> {
    let space = nu.space();
    match space.dim() {
        Some(dim) if dim == sys.dim() => {}
        Some(dim) => {
            return Err(Error::DimensionMismatch { point: 0, expected: sys.dim(), got: dim })
        }
        None => return Err(Error::MatrixSpaceFrozen),
    }
    let mut out: BTreeMap<usize, f64> = BTreeMap::new();
    for (map, &p) in sys.maps.iter().zip(&sys.probs) {
        if p == 0.0 {
            continue;
        }
        for &(idx, w) in nu.atoms() {
            let x = space.point(idx).expect("atom index is registered");
            let target = builder.find_or_insert(&map.apply(x))?;
            *out.entry(target).or_insert(0.0) += p * w;
        }
    }
    Ok(out)
}

/// The result of a certified iteration run.
#[derive(Debug, Clone)]
pub struct IterationReport {
    /// The final (possibly coarsened) iterate.
    pub iterate: DiscreteMeasure,
    /// Markov steps taken.
    pub steps: usize,
    /// Transport distance between the last two iterates.
    pub last_step_distance: f64,
    /// Certified bound on the distance from `iterate` to the invariant
    /// measure: `(c/(1-c)) * last_step_distance + coarsening_bound/(1-c)`.
    pub a_posteriori_bound: f64,
    /// Coarsening error of the final step (zero when the support stayed
    /// under the cap).
    pub coarsening_bound: f64,
    /// The modulus `c` used in the bound.
    pub contraction_factor: f64,
    /// Whether the bound reached the requested tolerance.
    pub converged: bool,
    /// Distance of every step taken, in order.
    pub step_distances: Vec<f64>,
}

/// Iterate the Markov operator from `nu0` until the a posteriori bound
/// falls under `tol`, coarsening each iterate to at most `cap` atoms.
/// Runs at most [`DEFAULT_STEP_LIMIT`] steps; a run that exhausts the limit
/// returns its partial report with `converged` unset rather than an error.
pub fn iterate_invariant(
    sys: &ContractionSystem,
    nu0: &DiscreteMeasure,
    tol: f64,
    cap: usize,
) -> Result<IterationReport> {
    iterate_invariant_with(sys, nu0, tol, cap, DEFAULT_STEP_LIMIT)
}

/// [`iterate_invariant`] with an explicit step limit.
pub fn iterate_invariant_with(
    sys: &ContractionSystem,
    nu0: &DiscreteMeasure,
    tol: f64,
    cap: usize,
    step_limit: usize,
) -> Result<IterationReport> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::NonPositive { what: "tolerance", value: tol });
    }
    if cap == 0 {
        return Err(Error::NonPositive { what: "support cap", value: 0.0 });
    }
    if step_limit == 0 {
        return Err(Error::NonPositive { what: "step limit", value: 0.0 });
    }
    nu0.require_probability()?;
    let c = sys.contraction_factor();
    let gain = 1.0 / (1.0 - c);

    let mut current = nu0.clone();
    let mut step_distances = Vec::new();
    let mut coarsening_bound = 0.0;
    let mut bound = f64::INFINITY;
    let mut converged = false;
    while step_distances.len() < step_limit {
        let stepped = markov_step(&current, sys)?;
        let (next, coarse_err) = stepped.coarsen(cap)?;
        let step = kr_distance(&current, &next)?.value;
        step_distances.push(step);
        coarsening_bound = coarse_err;
        bound = c * gain * step + coarse_err * gain;
        current = next;
        if bound <= tol {
            converged = true;
            break;
        }
    }
    let last_step_distance = *step_distances.last().expect("at least one step ran");
    Ok(IterationReport {
        iterate: current,
        steps: step_distances.len(),
        last_step_distance,
        a_posteriori_bound: bound,
        coarsening_bound,
        contraction_factor: c,
        converged,
        step_distances,
    })
}

/// The two-map halving system on the line: `x/2` and `x/2 + 1/2` with
/// equal weights. Its invariant measure is Lebesgue on `[0,1]`.
pub fn bernoulli_system() -> ContractionSystem {
    let maps = vec![
        ContractionMap::similarity(0.5, vec![0.0]).expect("static system"),
        ContractionMap::similarity(0.5, vec![1.0]).expect("static system"),
    ];
    ContractionSystem::new(maps, vec![0.5, 0.5]).expect("static system")
}

/// The two-map thirds system on the line: `x/3` and `x/3 + 2/3` with equal
/// weights. Its invariant measure is the uniform measure on the middle
/// thirds Cantor set.
pub fn cantor_system() -> ContractionSystem {
    let maps = vec![
        ContractionMap::similarity(1.0 / 3.0, vec![0.0]).expect("static system"),
        ContractionMap::similarity(1.0 / 3.0, vec![1.0]).expect("static system"),
    ];
    ContractionSystem::new(maps, vec![0.5, 0.5]).expect("static system")
}

/// The countable family whose i-th member halves toward the i-th basis
/// vector with weight `2^-i`, materialized for the first `dim` members in
/// `R^dim`. Together with [`basis_halving_tail`] it feeds
/// [`truncate_countable`].
pub fn basis_halving_family(dim: usize) -> Vec<(ContractionMap, f64)> {
    (1..=dim)
        .map(|i| {
            let mut fix = vec![0.0; dim];
            fix[i - 1] = 1.0;
            let map = ContractionMap::similarity(0.5, fix).expect("static family");
            (map, 0.5f64.powi(i as i32))
        })
        .collect()
}

/// Closed-form tail sums for the basis-halving family past member `n`:
/// mass `2^-n` and moment `sqrt(2) * 2^-n`, since every pair of distinct
/// basis vectors sits at distance `sqrt(2)`.
pub fn basis_halving_tail(n: u32) -> TailBound {
    let mass = 0.5f64.powi(n as i32);
    TailBound { mass, moment: std::f64::consts::SQRT_2 * mass }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::MetricSpace;

    fn line_space(points: &[f64]) -> Arc<MetricSpace> {
        Arc::new(MetricSpace::euclidean(points.iter().map(|&x| vec![x]).collect()).unwrap())
    }

    #[test]
    fn similarity_fixed_point_and_lip() {
        let m = ContractionMap::similarity(0.5, vec![1.0, 2.0]).unwrap();
        assert_eq!(m.lip(), 0.5);
        assert_eq!(m.fixed_point(), &[1.0, 2.0]);
        assert_eq!(m.apply(&[1.0, 2.0]), vec![1.0, 2.0]);
        assert_eq!(m.apply(&[3.0, 2.0]), vec![2.0, 2.0]);
    }

    #[test]
    fn negative_ratio_contracts_through_the_fix() {
        let m = ContractionMap::similarity(-0.5, vec![0.0]).unwrap();
        assert_eq!(m.lip(), 0.5);
        assert_eq!(m.apply(&[2.0]), vec![-1.0]);
    }

    #[test]
    fn similarity_rejects_unit_ratio() {
        assert!(matches!(
            ContractionMap::similarity(1.0, vec![0.0]),
            Err(Error::NotContractive { lip }) if lip == 1.0
        ));
    }

    #[test]
    fn affine_fixed_point_solved() {
        let m = ContractionMap::affine(
            vec![vec![0.5, 0.0], vec![0.0, 0.25]],
            vec![1.0, 0.0],
        )
        .unwrap();
        assert_eq!(m.fixed_point(), &[2.0, 0.0]);
        assert!((m.lip() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn affine_norm_sees_rotation_scaling() {
        let c = (std::f64::consts::FRAC_PI_4).cos() * 0.9;
        let s = (std::f64::consts::FRAC_PI_4).sin() * 0.9;
        let m = ContractionMap::affine(vec![vec![c, -s], vec![s, c]], vec![0.1, 0.0]).unwrap();
        assert!((m.lip() - 0.9).abs() < 1e-6);
    }

    #[test]
    fn affine_rejects_expanding_matrix() {
        let r = ContractionMap::affine(vec![vec![1.5]], vec![0.0]);
        assert!(matches!(r, Err(Error::NotContractive { .. })));
    }

    #[test]
    fn declared_lip_is_cross_checked() {
        let r = ContractionMap::affine_with_lip(vec![vec![0.9]], vec![0.0], 0.1);
        assert!(matches!(r, Err(Error::BadSystem(_))));
    }

    #[test]
    fn system_requires_probability_weights() {
        let maps = vec![ContractionMap::similarity(0.5, vec![0.0]).unwrap()];
        assert!(matches!(
            ContractionSystem::new(maps, vec![0.9]),
            Err(Error::NotProbability { .. })
        ));
    }

    #[test]
    fn system_contraction_factor_is_weighted() {
        let maps = vec![
            ContractionMap::similarity(0.5, vec![0.0]).unwrap(),
            ContractionMap::similarity(0.25, vec![1.0]).unwrap(),
        ];
        let sys = ContractionSystem::new(maps, vec![0.5, 0.5]).unwrap();
        assert!((sys.contraction_factor() - 0.375).abs() < 1e-15);
        assert!((sys.moment_sum() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn markov_step_splits_a_dirac() {
        let s = line_space(&[0.0]);
        let nu = DiscreteMeasure::dirac(s, 0).unwrap();
        let out = markov_step(&nu, &bernoulli_system()).unwrap();
        assert_eq!(out.support_size(), 2);
        assert!((out.mass() - 1.0).abs() < 1e-12);
        let pts: Vec<f64> = out
            .atoms()
            .iter()
            .map(|&(i, _)| out.space().point(i).unwrap()[0])
            .collect();
        assert_eq!(pts, vec![0.0, 0.5]);
        assert!(out.atoms().iter().all(|&(_, w)| w == 0.5));
    }

    #[test]
    fn markov_step_fixes_the_fixed_dirac() {
        let sys = ContractionSystem::new(
            vec![ContractionMap::similarity(0.5, vec![0.75]).unwrap()],
            vec![1.0],
        )
        .unwrap();
        let s = line_space(&[0.75]);
        let nu = DiscreteMeasure::dirac(s, 0).unwrap();
        let out = markov_step(&nu, &sys).unwrap();
        assert_eq!(out.atoms(), nu.atoms());
        assert_eq!(out.space().len(), 1);
    }

    #[test]
    fn markov_step_rejects_dimension_mismatch() {
        let s = Arc::new(MetricSpace::euclidean(vec![vec![0.0, 0.0]]).unwrap());
        let nu = DiscreteMeasure::dirac(s, 0).unwrap();
        assert!(matches!(
            markov_step(&nu, &bernoulli_system()),
            Err(Error::DimensionMismatch { expected: 1, got: 2, .. })
        ));
    }

    #[test]
    fn halving_iteration_halves_step_distances() {
        let s = line_space(&[0.0]);
        let nu0 = DiscreteMeasure::dirac(s, 0).unwrap();
        let report =
            iterate_invariant_with(&bernoulli_system(), &nu0, f64::MIN_POSITIVE, 4096, 10)
                .unwrap();
        assert_eq!(report.steps, 10);
        assert!(!report.converged);
        // H between successive iterates is exactly 2^-(k+1) at step k.
        for (k, &d) in report.step_distances.iter().enumerate() {
            let expect = 0.5f64.powi(k as i32 + 2);
            assert!(
                (d - expect).abs() < 1e-12,
                "step {k}: {d} vs {expect}"
            );
        }
        // The iterate is uniform on the dyadic grid of depth 10.
        assert_eq!(report.iterate.support_size(), 1024);
        let w = 0.5f64.powi(10);
        assert!(report.iterate.atoms().iter().all(|&(_, x)| (x - w).abs() < 1e-15));
        assert!((report.a_posteriori_bound - 0.5f64.powi(11)).abs() < 1e-12);
        assert_eq!(report.coarsening_bound, 0.0);
    }

    #[test]
    fn thirds_iteration_mean_approaches_half() {
        let s = line_space(&[0.0]);
        let nu0 = DiscreteMeasure::dirac(Arc::clone(&s), 0).unwrap();
        let report =
            iterate_invariant_with(&cantor_system(), &nu0, f64::MIN_POSITIVE, 4096, 12)
                .unwrap();
        // The mean after k steps is (1 - 3^-k)/2 exactly.
        let origin = report
            .iterate
            .space()
            .point(0)
            .map(|p| p[0])
            .unwrap();
        assert_eq!(origin, 0.0);
        let mean = report.iterate.first_moment(0).unwrap();
        let expect = 0.5 * (1.0 - 3.0f64.powi(-12));
        assert!((mean - expect).abs() < 1e-12, "{mean} vs {expect}");
    }

    #[test]
    fn single_map_iteration_converges_to_the_fixed_point() {
        let sys = ContractionSystem::new(
            vec![ContractionMap::similarity(0.5, vec![0.0]).unwrap()],
            vec![1.0],
        )
        .unwrap();
        let s = line_space(&[1.0]);
        let nu0 = DiscreteMeasure::dirac(s, 0).unwrap();
        let report = iterate_invariant(&sys, &nu0, 1e-6, 16).unwrap();
        assert!(report.converged);
        assert!(report.a_posteriori_bound <= 1e-6);
        assert_eq!(report.iterate.support_size(), 1);
        let (idx, _) = report.iterate.atoms()[0];
        let x = report.iterate.space().point(idx).unwrap()[0];
        assert!(x.abs() <= 2e-6);
    }

    #[test]
    fn coarsened_iteration_keeps_bound_sound() {
        let s = line_space(&[0.0]);
        let nu0 = DiscreteMeasure::dirac(s, 0).unwrap();
        let report =
            iterate_invariant_with(&bernoulli_system(), &nu0, f64::MIN_POSITIVE, 32, 8).unwrap();
        assert!(report.coarsening_bound > 0.0);
        // The invariant measure is Lebesgue on [0,1]; distance from the
        // iterate is measurable against a fine uncoarsened iterate. The two
        // runs grow separate space lineages, so the coarse iterate is
        // re-registered in the fine space before comparing.
        let fine = iterate_invariant_with(&bernoulli_system(), &nu0, f64::MIN_POSITIVE, 4096, 12)
            .unwrap();
        let mut rebuild = SpaceBuilder::new(fine.iterate.space()).unwrap();
        let transplanted: Vec<(usize, f64)> = report
            .iterate
            .atoms()
            .iter()
            .map(|&(i, w)| {
                let coords = report.iterate.space().point(i).unwrap();
                (rebuild.find_or_insert(coords).unwrap(), w)
            })
            .collect();
        let coarse = DiscreteMeasure::new(rebuild.finish(), transplanted).unwrap();
        let gap = kr_distance(&coarse, &fine.iterate).unwrap().value;
        // H(coarse, invariant) <= H(coarse, fine) + H(fine, invariant)
        assert!(gap <= report.a_posteriori_bound + fine.a_posteriori_bound + 1e-12);
    }

    #[test]
    fn truncation_renormalizes_and_reports_the_tail() {
        let (sys, tail) = truncate_countable(basis_halving_family(8), 8, basis_halving_tail(8))
            .unwrap();
        assert_eq!(sys.maps().len(), 8);
        assert!((tail.mass - 0.5f64.powi(8)).abs() < 1e-15);
        assert!((tail.kept_probability - (1.0 - 0.5f64.powi(8))).abs() < 1e-12);
        assert!((kahan_total(sys.probabilities().iter().copied()) - 1.0).abs() <= 1e-12);
        // Renormalized weights keep their ratios: p1/p2 = 2.
        assert!((sys.probabilities()[0] / sys.probabilities()[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn truncation_of_a_fully_listed_family_has_zero_tail() {
        let family = vec![
            (ContractionMap::similarity(0.5, vec![0.0]).unwrap(), 0.5),
            (ContractionMap::similarity(0.5, vec![1.0]).unwrap(), 0.5),
        ];
        let (sys, tail) =
            truncate_countable(family, 2, TailBound { mass: 0.0, moment: 0.0 }).unwrap();
        assert_eq!(tail.mass, 0.0);
        assert_eq!(sys.probabilities(), &[0.5, 0.5]);
    }

    #[test]
    fn truncation_rejects_negative_or_inconsistent_tails() {
        let family = basis_halving_family(4);
        assert!(matches!(
            truncate_countable(family.clone(), 4, TailBound { mass: -0.1, moment: 0.0 }),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            truncate_countable(family.clone(), 4, TailBound { mass: 0.5, moment: 0.0 }),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            truncate_countable(family, 9, basis_halving_tail(9)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn moment_sum_matches_geometric_series() {
        let (sys, _) = truncate_countable(basis_halving_family(8), 8, basis_halving_tail(8))
            .unwrap();
        // sum_{i>=2} 2^-i * sqrt(2) over the kept members, renormalized.
        let kept = 1.0 - 0.5f64.powi(8);
        let raw: f64 = (2..=8).map(|i| 0.5f64.powi(i) * std::f64::consts::SQRT_2).sum();
        assert!((sys.moment_sum() - raw / kept).abs() < 1e-12);
    }

    #[test]
    fn operator_gap_vanishes_on_equal_systems() {
        let s = line_space(&[0.0, 0.25, 0.5]);
        let nu = DiscreteMeasure::new(
            Arc::clone(&s),
            [(0, 0.5), (1, 0.25), (2, 0.25)],
        )
        .unwrap();
        let sys = bernoulli_system();
        let gap = operator_gap(&sys, &sys, &nu).unwrap();
        assert_eq!(gap, 0.0);
    }

    #[test]
    fn operator_gap_of_shifted_halving_maps_is_the_shift() {
        let eps = 0.125;
        let a = ContractionSystem::new(
            vec![ContractionMap::similarity(0.5, vec![0.0]).unwrap()],
            vec![1.0],
        )
        .unwrap();
        let b = ContractionSystem::new(
            vec![ContractionMap::affine_with_lip(vec![vec![0.5]], vec![eps], 0.5).unwrap()],
            vec![1.0],
        )
        .unwrap();
        let s = line_space(&[0.0]);
        let nu = DiscreteMeasure::dirac(s, 0).unwrap();
        let gap = operator_gap(&a, &b, &nu).unwrap();
        assert!((gap - eps).abs() < 1e-12);
    }

    #[test]
    fn empirical_contraction_of_the_markov_operator() {
        let s = line_space(&[0.0, 0.3, 0.8, 1.0]);
        let sys = cantor_system();
        let mu = DiscreteMeasure::new(Arc::clone(&s), [(0, 0.5), (2, 0.5)]).unwrap();
        let nu = DiscreteMeasure::new(Arc::clone(&s), [(1, 0.25), (3, 0.75)]).unwrap();
        let before = kr_distance(&mu, &nu).unwrap().value;
        let (ta, tb) = markov_step_pair(&mu, &nu, &sys).unwrap();
        let after = kr_distance(&ta, &tb).unwrap().value;
        assert!(after <= sys.contraction_factor() * before * (1.0 + 1e-9));
    }
}
