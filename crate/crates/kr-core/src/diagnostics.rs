//! Diagnostic machinery around completeness and tightness of the transport
//! metric: lazily generated measure sequences, pairwise Cauchy profiles,
//! finite ball covers, and the explicit construction of an oscillating
//! witness function for sequences that keep escaping every finite cover.
//!
//! The sequences here are the classical probes. The dyadic reservoir keeps
//! half-shrinking mass on a reservoir point while spreading the rest along
//! a walk; it is Cauchy in the transport metric while its mass escapes to
//! infinity. The receding spike sends a `1/n` sliver to a point at distance
//! at least `n^2`, so it converges under bounded test functions while the
//! transport distances blow up. The dirac walk simply carries unit mass
//! outward and is the canonical non-tight family.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lipschitz::{lip_constant, LipFunction};
use crate::measure::DiscreteMeasure;
use crate::space::{MetricSpace, SpaceBuilder};
use crate::transport::kr_distance;

/// How a sequence assigns mass at each index.
enum SequenceKind {
    /// `2^-n` at the base point plus `2^-k` at the k-th walk point,
    /// `k = 1..=n`. Requires `dist(x_0, x_k) <= k` so first moments stay
    /// finite.
    DyadicReservoir,
    /// `(1/n)` at the n-th point and `1 - 1/n` at the base point. Requires
    /// `dist(x_0, x_n) >= n^2` so the sliver dominates the distance.
    RecedingSpike,
    /// Unit mass at the n-th point; no growth requirement.
    DiracWalk,
}

/// A deterministic, lazily materialized sequence of probability measures
/// over one growing space. Index `n` starts at 1; every constructor fixes
/// the positions via a closure so the same index always yields the same
/// measure.
pub struct MeasureSequence {
    name: &'static str,
    positions: Box<dyn Fn(usize) -> Vec<f64> + Send>,
    kind: SequenceKind,
    space: Arc<MetricSpace>,
    base: Option<usize>,
    walk: Vec<usize>,
    cache: Vec<DiscreteMeasure>,
}

impl fmt::Debug for MeasureSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MeasureSequence")
            .field("name", &self.name)
            .field("horizon", &self.cache.len())
            .field("points", &self.space.len())
            .finish()
    }
}

impl MeasureSequence {
    /// Reservoir-plus-walk sequence: `nu_n` places `2^-n` at the base point
    /// `positions(0)` and `2^-k` at `positions(k)` for `k = 1..=n`. The walk
    /// must not outrun linear speed: `dist(x_0, x_k) <= k + 1e-9`, checked
    /// as indices materialize.
    pub fn dyadic_reservoir(
        positions: impl Fn(usize) -> Vec<f64> + Send + 'static,
    ) -> Result<Self> {
        Self::seeded("dyadic-reservoir", SequenceKind::DyadicReservoir, positions)
    }

    /// Two-atom sequence `nu_n = (1/n) delta_{x_n} + (1 - 1/n) delta_{x_0}`
    /// with the spike receding at least quadratically:
    /// `dist(x_0, x_n) >= n^2 - 1e-9`.
    pub fn receding_spike(
        positions: impl Fn(usize) -> Vec<f64> + Send + 'static,
    ) -> Result<Self> {
        Self::seeded("receding-spike", SequenceKind::RecedingSpike, positions)
    }

    /// The sequence of unit masses `nu_n = delta_{x_n}`.
    pub fn dirac_walk(positions: impl Fn(usize) -> Vec<f64> + Send + 'static) -> Result<Self> {
        let first = positions(1);
        let space = Arc::new(MetricSpace::euclidean(vec![first])?);
        Ok(MeasureSequence {
            name: "dirac-walk",
            positions: Box::new(positions),
            kind: SequenceKind::DiracWalk,
            space,
            base: None,
            walk: Vec::new(),
            cache: Vec::new(),
        })
    }

    fn seeded(
        name: &'static str,
        kind: SequenceKind,
        positions: impl Fn(usize) -> Vec<f64> + Send + 'static,
    ) -> Result<Self> {
        let origin = positions(0);
        let space = Arc::new(MetricSpace::euclidean(vec![origin])?);
        Ok(MeasureSequence {
            name,
            positions: Box::new(positions),
            kind,
            space,
            base: Some(0),
            walk: Vec::new(),
            cache: Vec::new(),
        })
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    /// Largest index materialized so far.
    pub fn horizon(&self) -> usize {
        self.cache.len()
    }

    /// The current generation of the growing space. Extended, never edited:
    /// measures from earlier generations remain comparable.
    pub fn space(&self) -> &Arc<MetricSpace> {
        &self.space
    }

    /// Materialize (or fetch) the measure at index `n >= 1`.
    pub fn measure(&mut self, n: usize) -> Result<DiscreteMeasure> {
        if n == 0 {
            return Err(Error::InvalidArgument("sequence indices start at 1".into()));
        }
        while self.cache.len() < n {
            self.extend_one()?;
        }
        Ok(self.cache[n - 1].clone())
    }

    fn extend_one(&mut self) -> Result<()> {
        let n = self.cache.len() + 1;
        let mut builder = SpaceBuilder::new(&self.space)?;
        let point = builder.find_or_insert(&(self.positions)(n))?;
        let next = match self.kind {
            SequenceKind::DyadicReservoir => {
                let base = self.base.expect("seeded with a base point");
                let arrival = builder.point_at(point).to_vec();
                let origin = builder.point_at(base).to_vec();
                let reach = euclid(&origin, &arrival);
                if reach > n as f64 + 1e-9 {
                    return Err(Error::GrowthViolated {
                        index: n,
                        detail: format!(
                            "walk point sits at distance {reach} from the base, over the allowed {n}"
                        ),
                    });
                }
                self.walk.push(point);
                let mut atoms: Vec<(usize, f64)> =
                    vec![(base, 0.5f64.powi(n as i32))];
                for (k, &idx) in self.walk.iter().enumerate() {
                    atoms.push((idx, 0.5f64.powi(k as i32 + 1)));
                }
                DiscreteMeasure::new(builder.finish(), atoms)?
            }
            SequenceKind::RecedingSpike => {
                let base = self.base.expect("seeded with a base point");
                let arrival = builder.point_at(point).to_vec();
                let origin = builder.point_at(base).to_vec();
                let reach = euclid(&origin, &arrival);
                let need = (n as f64) * (n as f64);
                if reach < need - 1e-9 {
                    return Err(Error::GrowthViolated {
                        index: n,
                        detail: format!(
                            "spike sits at distance {reach} from the base, under the required {need}"
                        ),
                    });
                }
                self.walk.push(point);
                let sliver = 1.0 / n as f64;
                DiscreteMeasure::new(
                    builder.finish(),
                    [(point, sliver), (base, 1.0 - sliver)],
                )?
            }
            SequenceKind::DiracWalk => {
                self.walk.push(point);
                DiscreteMeasure::new(builder.finish(), [(point, 1.0)])?
            }
        };
        self.space = Arc::clone(next.space());
        self.cache.push(next);
        Ok(())
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Exact pairwise distances of a sequence prefix.
#[derive(Debug, Clone)]
pub struct CauchyProfile {
    /// `(n, m, H(nu_n, nu_m))` for all `1 <= n < m <= n_max`, ordered.
    pub rows: Vec<(usize, usize, f64)>,
    /// For each `n < n_max`, the largest distance to any later index in the
    /// prefix: the quantity that must vanish for the sequence to be Cauchy.
    pub sup_tail: Vec<(usize, f64)>,
}

/// Compute all pairwise distances up to `n_max` with the exact solver.
pub fn cauchy_profile(seq: &mut MeasureSequence, n_max: usize) -> Result<CauchyProfile> {
    if n_max < 2 {
        return Err(Error::InvalidArgument("a profile needs at least two indices".into()));
    }
    let measures: Vec<DiscreteMeasure> =
        (1..=n_max).map(|n| seq.measure(n)).collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(n_max * (n_max - 1) / 2);
    let mut sup_tail = vec![0.0f64; n_max - 1];
    for n in 0..n_max {
        for m in n + 1..n_max {
            let h = kr_distance(&measures[n], &measures[m])?.value;
            rows.push((n + 1, m + 1, h));
            sup_tail[n] = sup_tail[n].max(h);
        }
    }
    Ok(CauchyProfile {
        rows,
        sup_tail: sup_tail.into_iter().enumerate().map(|(n, s)| (n + 1, s)).collect(),
    })
}

/// Outcome of a ball-cover search.
#[derive(Debug, Clone)]
pub enum CoverOutcome {
    /// Ball centers (point indices) with every measure leaving less than
    /// `delta` mass outside the union of closed `eps`-balls.
    Covered { centers: Vec<usize> },
    /// No cover within the budget exists: the witness measure index and the
    /// smallest uncovered mass any budget-sized center set leaves on it.
    Uncoverable { measure: usize, uncovered_mass: f64, budget: usize },
}

/// Too many candidate subsets to decide the budgeted cover exactly.
const COVER_SEARCH_LIMIT: u128 = 2_000_000;

/// Find closed `eps`-balls centered on atom locations such that every
/// measure keeps all but `< delta` of its mass inside their union,
/// optionally limited to at most `budget` centers.
///
/// Centers are chosen greedily by covered mass. When greedy fails inside a
/// budget the search falls back to exhaustive enumeration of center
/// subsets, so an `Uncoverable` verdict is exact, never a greedy artifact;
/// instances too large to decide exactly are rejected up front rather than
/// guessed at.
pub fn tightness_cover(
    measures: &[DiscreteMeasure],
    eps: f64,
    delta: f64,
    budget: Option<usize>,
) -> Result<CoverOutcome> {
    if measures.is_empty() {
        return Err(Error::InvalidArgument("cover of no measures".into()));
    }
    if !eps.is_finite() || eps <= 0.0 {
        return Err(Error::NonPositive { what: "cover radius", value: eps });
    }
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::NonPositive { what: "mass slack", value: delta });
    }
    let mut metric = Arc::clone(measures[0].space());
    for m in &measures[1..] {
        metric = crate::space::union_space(&metric, m.space())?;
    }
    let metric = &metric;

    let mut candidates: BTreeSet<usize> = BTreeSet::new();
    for m in measures {
        candidates.extend(m.atoms().iter().map(|&(i, _)| i));
    }
    let candidates: Vec<usize> = candidates.into_iter().collect();

    // covered[m][a]: is atom a of measure m within eps of a chosen center.
    let uncovered_mass = |chosen: &[usize], measure: &DiscreteMeasure| -> f64 {
        measure
            .atoms()
            .iter()
            .filter(|&&(a, _)| {
                !chosen.iter().any(|&c| metric.dist(c, a) <= eps)
            })
            .map(|&(_, w)| w)
            .sum()
    };
    let all_fine = |chosen: &[usize]| -> bool {
        measures.iter().all(|m| uncovered_mass(chosen, m) < delta)
    };

    let cap = budget.unwrap_or(candidates.len()).min(candidates.len());

    // Greedy: repeatedly take the center that newly covers the most mass
    // summed across measures, lowest index on ties.
    let mut chosen: Vec<usize> = Vec::new();
    while chosen.len() < cap && !all_fine(&chosen) {
        let mut best: Option<(f64, usize)> = None;
        for &c in &candidates {
            if chosen.contains(&c) {
                continue;
            }
            let mut gain = 0.0;
            for m in measures {
                for &(a, w) in m.atoms() {
                    let already = chosen.iter().any(|&x| metric.dist(x, a) <= eps);
                    if !already && metric.dist(c, a) <= eps {
                        gain += w;
                    }
                }
            }
            let better = match best {
                None => true,
                Some((g, _)) => gain > g,
            };
            if better {
                best = Some((gain, c));
            }
        }
        match best {
            Some((gain, c)) if gain > 0.0 => chosen.push(c),
            _ => break,
        }
    }
    if all_fine(&chosen) {
        return Ok(CoverOutcome::Covered { centers: chosen });
    }
    if budget.is_none() {
        // All candidates are available and even the full set failed, which
        // cannot happen for positive delta: every atom is then covered.
        let chosen = candidates.clone();
        debug_assert!(all_fine(&chosen));
        return Ok(CoverOutcome::Covered { centers: chosen });
    }

    // Exhaustive fallback: the failure verdict must be exact.
    let budget_size = cap;
    let combos = combinations_count(candidates.len(), budget_size);
    if combos > COVER_SEARCH_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "deciding a budget-{budget_size} cover over {} candidate centers needs {combos} \
             subsets, over the exact-search limit",
            candidates.len()
        )));
    }
    let mut best_failure: Option<(usize, f64)> = None;
    let mut pick: Vec<usize> = (0..budget_size).collect();
    loop {
        let chosen: Vec<usize> = pick.iter().map(|&i| candidates[i]).collect();
        let mut worst: Option<(usize, f64)> = None;
        for (mi, m) in measures.iter().enumerate() {
            let left = uncovered_mass(&chosen, m);
            if left >= delta {
                worst = Some((mi, left));
                break;
            }
        }
        match worst {
            None => return Ok(CoverOutcome::Covered { centers: chosen }),
            Some((mi, left)) => {
                let keep = match best_failure {
                    None => true,
                    Some((_, prev)) => left < prev,
                };
                if keep {
                    best_failure = Some((mi, left));
                }
            }
        }
        if budget_size == 0 || !advance_combination(&mut pick, candidates.len()) {
            break;
        }
    }
    let (measure, uncovered_mass) =
        best_failure.expect("no cover found, so some subset failed");
    Ok(CoverOutcome::Uncoverable { measure, uncovered_mass, budget: budget_size })
}

fn combinations_count(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
        if acc > COVER_SEARCH_LIMIT * 1000 {
            return acc;
        }
    }
    acc
}

fn advance_combination(pick: &mut [usize], n: usize) -> bool {
    let k = pick.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if pick[i] != i + n - k {
            pick[i] += 1;
            for j in i + 1..k {
                pick[j] = pick[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Everything the oscillating-witness construction produces, with the data
/// needed to re-verify it from scratch.
#[derive(Debug)]
pub struct WitnessArtifacts {
    /// The selected subsequence indices `n_1 < n_2 < ...`.
    pub indices: Vec<usize>,
    /// Covering sets: `a_sets[k]` accumulates every atom seen through
    /// index `n_{k+1}`.
    pub a_sets: Vec<Vec<usize>>,
    /// Escape sets: atoms of the k-th selected measure farther than `eps`
    /// from the previous covering set.
    pub d_sets: Vec<Vec<usize>>,
    /// One bump per escape set: `max(1 - dist(x, D_k) * 2/eps, 0)`.
    pub bumps: Vec<LipFunction>,
    /// The accumulated witness function.
    pub witness: LipFunction,
    pub eps: f64,
    pub delta: f64,
}

/// Measured facts about a witness, re-derived from the artifacts and the
/// sequence alone; see [`verify_witness`]. The first five fields restate
/// the structural properties of the selected subsequence, the rest measure
/// the function itself.
#[derive(Debug, Clone)]
pub struct WitnessReport {
    /// The selected indices are strictly increasing.
    pub indices_increasing: bool,
    /// Every escape point is an atom of its selected measure.
    pub escapes_are_atoms: bool,
    /// Smallest distance from an escape set to the previous covering set;
    /// infinite when there is only the first (which escapes nothing).
    pub min_escape_distance: f64,
    /// Each covering set contains its predecessor and its escape set.
    pub nested_covers: bool,
    /// Smallest mass any selected measure keeps within `eps/4` of its
    /// escape set.
    pub min_escape_mass: f64,
    /// Largest mass any selected measure leaves farther than `eps/2` from
    /// its own covering set.
    pub max_leak: f64,
    /// Exhaustive Lipschitz constant of the witness on the full space.
    pub lip_constant: f64,
    /// Smallest `|nu_{n_k}(f) - nu_{n_{k+1}}(f)|` over consecutive selected
    /// indices.
    pub min_oscillation: f64,
    /// Range of the witness over the space.
    pub min_value: f64,
    pub max_value: f64,
    /// Smallest distance between points of two different escape sets.
    pub escape_separation: f64,
}

impl WitnessReport {
    /// The bundle of conditions a sound witness satisfies: an increasing
    /// subsequence whose escape sets are atoms more than `eps` past the
    /// previous cover, nested covers that leak less than `delta/32` of
    /// mass, escape mass above `delta/2`, a function bounded by `[0, 1]`
    /// with slope at most `2/eps`, bump regions separated by more than
    /// `eps` (so their `eps/2`-neighborhoods cannot touch), and
    /// oscillations above `delta/16`.
    pub fn passes(&self, eps: f64, delta: f64) -> bool {
        self.indices_increasing
            && self.escapes_are_atoms
            && self.min_escape_distance > eps
            && self.nested_covers
            && self.min_escape_mass > delta / 2.0
            && self.max_leak < delta / 32.0
            && self.lip_constant <= 2.0 / eps + 1e-9
            && self.min_oscillation > delta / 16.0
            && self.min_value >= -1e-12
            && self.max_value <= 1.0 + 1e-12
            && self.escape_separation > eps
    }
}

/// Construct the oscillating witness for a sequence that escapes every
/// finite cover at scale `(eps, delta)`.
///
/// The engine selects indices `n_1 < ... < n_K` so that each selected
/// measure carries at least `delta` mass farther than `eps` from everything
/// seen before; it aborts with the covering set in hand if the sequence
/// stops escaping within `horizon`. Escape sets receive bumps of height 1
/// and slope `2/eps` with pairwise disjoint supports, and the witness adds
/// the next bump exactly when the integrals of the current function against
/// the adjacent selected measures are closer than `delta/8`. Either way
/// consecutive selected measures integrate the final function at least
/// `delta/16` apart: adding the bump lifts the later integral by nearly 1,
/// and the skipped branch already oscillates. (The `delta/32` slack spent
/// on each side of that argument is what the covering sets' construction
/// guarantees; with full atom sets it holds with room to spare.)
pub fn build_witness(
    seq: &mut MeasureSequence,
    eps: f64,
    delta: f64,
    count: usize,
    horizon: usize,
) -> Result<WitnessArtifacts> {
    if !eps.is_finite() || eps <= 0.0 {
        return Err(Error::NonPositive { what: "escape radius", value: eps });
    }
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::NonPositive { what: "escape mass", value: delta });
    }
    if count < 2 {
        return Err(Error::InvalidArgument(
            "a witness needs at least two selected indices".into(),
        ));
    }

    // Select the subsequence and record covering/escape sets.
    let mut indices: Vec<usize> = Vec::with_capacity(count);
    let mut a_sets: Vec<Vec<usize>> = Vec::with_capacity(count);
    let mut d_sets: Vec<Vec<usize>> = Vec::with_capacity(count);
    let mut covering: BTreeSet<usize> = BTreeSet::new();
    while indices.len() < count {
        let from = indices.last().map_or(0, |&n| n);
        let mut found = None;
        for n in from + 1..=horizon {
            let nu = seq.measure(n)?;
            let escaped = escape_mass(&nu, &covering, eps);
            if escaped >= delta {
                found = Some(n);
                break;
            }
        }
        let Some(n) = found else {
            return Err(Error::PremiseFailed {
                searched_from: from + 1,
                horizon,
                covering: covering.iter().copied().collect(),
            });
        };
        let nu = seq.measure(n)?;
        let space = seq.space();
        let escapes: Vec<usize> = nu
            .atoms()
            .iter()
            .map(|&(a, _)| a)
            .filter(|&a| {
                covering.iter().all(|&c| space.dist(a, c) > eps)
            })
            .collect();
        covering.extend(nu.atoms().iter().map(|&(a, _)| a));
        indices.push(n);
        d_sets.push(escapes);
        a_sets.push(covering.iter().copied().collect());
    }

    // Bumps live on the final space generation so they are total there.
    let space = Arc::clone(seq.space());
    let slope = 2.0 / eps;
    let bumps: Vec<LipFunction> = d_sets
        .iter()
        .map(|d| {
            LipFunction::from_fn(&space, slope, |x| {
                let to_set = d
                    .iter()
                    .map(|&a| space.dist(x, a))
                    .fold(f64::INFINITY, f64::min);
                (1.0 - to_set * slope).max(0.0)
            })
        })
        .collect::<Result<_>>()?;

    // Accumulate the witness: start flat, and before each new index decide
    // by the measured oscillation whether the next bump is needed.
    let selected: Vec<DiscreteMeasure> =
        indices.iter().map(|&n| seq.measure(n)).collect::<Result<_>>()?;
    let mut witness = LipFunction::constant(&space, 0.0)?.with_bound(slope);
    for k in 0..count - 1 {
        let here = selected[k].integrate(&witness)?;
        let there = selected[k + 1].integrate(&witness)?;
        if (here - there).abs() > delta / 8.0 {
            continue;
        }
        // Disjoint bump supports keep the slope at 2/eps even though
        // bounds add under summation.
        witness = witness.add(&bumps[k + 1])?.with_bound(slope);
    }

    Ok(WitnessArtifacts { indices, a_sets, d_sets, bumps, witness, eps, delta })
}

/// Re-derive every property of a witness from its artifacts and the
/// sequence alone: the structure of the selected subsequence, range and
/// exhaustive Lipschitz constant of the function, separation and mass of
/// the escape sets, and the oscillation along the selected indices.
pub fn verify_witness(
    artifacts: &WitnessArtifacts,
    seq: &mut MeasureSequence,
) -> Result<WitnessReport> {
    let space = Arc::clone(seq.space());
    let lip = lip_constant(&artifacts.witness, &space)?;
    let mut min_value = f64::INFINITY;
    let mut max_value = f64::NEG_INFINITY;
    for &v in artifacts.witness.values().values() {
        min_value = min_value.min(v);
        max_value = max_value.max(v);
    }

    let indices_increasing = artifacts.indices.windows(2).all(|w| w[0] < w[1]);

    let mut escape_separation = f64::INFINITY;
    for (i, d1) in artifacts.d_sets.iter().enumerate() {
        for d2 in &artifacts.d_sets[i + 1..] {
            for &a in d1 {
                for &b in d2 {
                    escape_separation = escape_separation.min(space.dist(a, b));
                }
            }
        }
    }

    let mut min_escape_distance = f64::INFINITY;
    for (k, d) in artifacts.d_sets.iter().enumerate().skip(1) {
        for &a in d {
            for &c in &artifacts.a_sets[k - 1] {
                min_escape_distance = min_escape_distance.min(space.dist(a, c));
            }
        }
    }

    let mut nested_covers = true;
    for (k, a) in artifacts.a_sets.iter().enumerate() {
        let set: BTreeSet<usize> = a.iter().copied().collect();
        let mut wanted: Vec<usize> = artifacts.d_sets[k].clone();
        if k > 0 {
            wanted.extend(artifacts.a_sets[k - 1].iter().copied());
        }
        if wanted.iter().any(|p| !set.contains(p)) {
            nested_covers = false;
        }
    }

    let mut escapes_are_atoms = true;
    let mut min_escape_mass = f64::INFINITY;
    let mut max_leak: f64 = 0.0;
    let mut min_oscillation = f64::INFINITY;
    let mut previous: Option<f64> = None;
    for (k, &n) in artifacts.indices.iter().enumerate() {
        let nu = seq.measure(n)?;
        let atoms: BTreeSet<usize> = nu.atoms().iter().map(|&(a, _)| a).collect();
        if artifacts.d_sets[k].iter().any(|d| !atoms.contains(d)) {
            escapes_are_atoms = false;
        }
        let near: f64 = nu
            .atoms()
            .iter()
            .filter(|&&(a, _)| {
                artifacts.d_sets[k]
                    .iter()
                    .any(|&d| space.dist(a, d) <= artifacts.eps / 4.0)
            })
            .map(|&(_, w)| w)
            .sum();
        min_escape_mass = min_escape_mass.min(near);
        let leak: f64 = nu
            .atoms()
            .iter()
            .filter(|&&(a, _)| {
                artifacts.a_sets[k]
                    .iter()
                    .all(|&c| space.dist(a, c) > artifacts.eps / 2.0)
            })
            .map(|&(_, w)| w)
            .sum();
        max_leak = max_leak.max(leak);
        let integral = nu.integrate(&artifacts.witness)?;
        if let Some(prev) = previous {
            min_oscillation = min_oscillation.min((integral - prev).abs());
        }
        previous = Some(integral);
    }

    Ok(WitnessReport {
        indices_increasing,
        escapes_are_atoms,
        min_escape_distance,
        nested_covers,
        min_escape_mass,
        max_leak,
        lip_constant: lip,
        min_oscillation,
        min_value,
        max_value,
        escape_separation,
    })
}

fn escape_mass(nu: &DiscreteMeasure, covering: &BTreeSet<usize>, eps: f64) -> f64 {
    let space = nu.space();
    nu.atoms()
        .iter()
        .filter(|&&(a, _)| covering.iter().all(|&c| space.dist(a, c) > eps))
        .map(|&(_, w)| w)
        .sum()
}
