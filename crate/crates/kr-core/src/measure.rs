//! Finitely supported nonnegative measures over a metric space.
//!
//! Atoms are `(point index, weight > 0)` pairs, kept sorted by index with no
//! duplicates. Nothing here renormalizes implicitly: operations preserve
//! total mass and the probability requirement is checked only where the
//! semantics demand it (transport, invariant iteration).

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lipschitz::LipFunction;
use crate::space::{union_space, MetricSpace, SpaceBuilder};
use crate::tol;

/// Compensated (Kahan) summation; measure arithmetic sums thousands of
/// weights and the mass bookkeeping tolerance is 1e-12, so plain folds are
/// too sloppy.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

pub(crate) fn kahan_total(it: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::default();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

/// Where a pushforward sends one atom: an already registered point, or fresh
/// coordinates to register (euclidean spaces only).
#[derive(Debug, Clone)]
pub enum Target {
    Index(usize),
    Coords(Vec<f64>),
}

/// A finitely supported measure with cached total mass.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    space: Arc<MetricSpace>,
    atoms: Vec<(usize, f64)>,
    mass: f64,
}

impl DiscreteMeasure {
    /// Build a measure from `(index, weight)` pairs. Duplicate indices are
    /// merged by adding weights, zero weights are dropped, negative or
    /// non-finite weights are rejected. The atom list may be empty (the zero
    /// measure).
    pub fn new(
        space: Arc<MetricSpace>,
        atoms: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<Self> {
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for (index, weight) in atoms {
            if index >= space.len() {
                return Err(Error::PointOutOfRange { index, len: space.len() });
            }
            if !weight.is_finite() || weight < 0.0 {
                return Err(Error::NegativeWeight { index, weight });
            }
            if weight > 0.0 {
                *merged.entry(index).or_insert(0.0) += weight;
            }
        }
        let atoms: Vec<(usize, f64)> = merged.into_iter().filter(|&(_, w)| w > 0.0).collect();
        let mass = kahan_total(atoms.iter().map(|&(_, w)| w));
        Ok(DiscreteMeasure { space, atoms, mass })
    }

    /// Unit mass at a single point.
    pub fn dirac(space: Arc<MetricSpace>, index: usize) -> Result<Self> {
        DiscreteMeasure::new(space, [(index, 1.0)])
    }

    pub fn space(&self) -> &Arc<MetricSpace> {
        &self.space
    }

    pub fn atoms(&self) -> &[(usize, f64)] {
        &self.atoms
    }

    pub fn support_size(&self) -> usize {
        self.atoms.len()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn is_probability(&self) -> bool {
        (self.mass - 1.0).abs() <= tol::MASS
    }

    pub(crate) fn require_probability(&self) -> Result<()> {
        if self.is_probability() {
            Ok(())
        } else {
            Err(Error::NotProbability { mass: self.mass })
        }
    }

    /// Weight at a point index (0 when the point carries no atom).
    pub fn weight(&self, index: usize) -> f64 {
        match self.atoms.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(pos) => self.atoms[pos].1,
            Err(_) => 0.0,
        }
    }

    /// Integral of `f`: the weighted sum of its values over the atoms.
    /// `f` must be defined at every atom.
    pub fn integrate(&self, f: &LipFunction) -> Result<f64> {
        let mut acc = KahanSum::default();
        for &(i, w) in &self.atoms {
            acc.add(w * f.try_value(i)?);
        }
        Ok(acc.value())
    }

    /// Integral of the distance function based at `a`; finite by
    /// construction for finitely supported measures. As a function of the
    /// base point it is 1-Lipschitz in `a` (times the total mass).
    pub fn first_moment(&self, a: usize) -> Result<f64> {
        if a >= self.space.len() {
            return Err(Error::PointOutOfRange { index: a, len: self.space.len() });
        }
        let mut acc = KahanSum::default();
        for &(i, w) in &self.atoms {
            acc.add(w * self.space.dist(a, i));
        }
        Ok(acc.value())
    }

    /// Image measure under an index map. Atoms whose images collide (exactly
    /// or within the merge tolerance for fresh coordinates) are merged by
    /// adding weights; total mass is carried over unchanged. Fresh
    /// coordinates extend the space copy-on-write: the input measure and its
    /// space are untouched.
    pub fn pushforward(&self, mut map: impl FnMut(usize) -> Result<Target>) -> Result<Self> {
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        if self.space.is_euclidean() {
            let mut builder = SpaceBuilder::new(&self.space)?;
            for &(i, w) in &self.atoms {
                let target = match map(i)? {
                    Target::Index(j) => {
                        if j >= builder.len() {
                            return Err(Error::PointOutOfRange { index: j, len: builder.len() });
                        }
                        j
                    }
                    Target::Coords(c) => builder.find_or_insert(&c)?,
                };
                *merged.entry(target).or_insert(0.0) += w;
            }
            let space = builder.finish();
            Ok(DiscreteMeasure {
                space,
                atoms: merged.into_iter().collect(),
                mass: self.mass,
            })
        } else {
            for &(i, w) in &self.atoms {
                let target = match map(i)? {
                    Target::Index(j) => {
                        if j >= self.space.len() {
                            return Err(Error::PointOutOfRange { index: j, len: self.space.len() });
                        }
                        j
                    }
                    Target::Coords(_) => return Err(Error::MatrixSpaceFrozen),
                };
                *merged.entry(target).or_insert(0.0) += w;
            }
            Ok(DiscreteMeasure {
                space: Arc::clone(&self.space),
                atoms: merged.into_iter().collect(),
                mass: self.mass,
            })
        }
    }

    /// Reduce the support to at most `cap` atoms and certify the damage.
    ///
    /// Representatives are chosen among the atom locations by greedy
    /// farthest-point selection (seeded with the heaviest atom, ties to the
    /// lowest index); every atom is then moved to its nearest representative.
    /// The returned bound `sum_x w(x) * d(x, rep(x))` dominates the
    /// transport distance between input and output, because moving each
    /// atom's mass back along the assignment is a feasible plan.
    pub fn coarsen(&self, cap: usize) -> Result<(Self, f64)> {
        if cap == 0 {
            return Err(Error::InvalidArgument("coarsen cap must be at least 1".into()));
        }
        if self.atoms.len() <= cap {
            return Ok((self.clone(), 0.0));
        }
        let seed = self
            .atoms
            .iter()
            .enumerate()
            .max_by(|(ai, (_, aw)), (bi, (_, bw))| {
                aw.partial_cmp(bw)
                    .unwrap()
                    .then(bi.cmp(ai))
            })
            .map(|(pos, _)| pos)
            .expect("nonempty: len > cap >= 1");

        // nearest[k] = (distance to nearest chosen rep, its atom position)
        let mut nearest: Vec<(f64, usize)> = self
            .atoms
            .iter()
            .map(|&(i, _)| (self.space.dist(self.atoms[seed].0, i), seed))
            .collect();
        let mut reps = vec![seed];
        while reps.len() < cap {
            let mut far_pos = 0;
            let mut far_dist = -1.0;
            for (pos, &(d, _)) in nearest.iter().enumerate() {
                if d > far_dist {
                    far_dist = d;
                    far_pos = pos;
                }
            }
            if far_dist <= 0.0 {
                break; // every atom already sits on a representative
            }
            reps.push(far_pos);
            let new_rep_index = self.atoms[far_pos].0;
            for (pos, &(i, _)) in self.atoms.iter().enumerate() {
                let d = self.space.dist(new_rep_index, i);
                if d < nearest[pos].0 {
                    nearest[pos] = (d, far_pos);
                }
            }
        }

        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        let mut bound = KahanSum::default();
        for (pos, &(_, w)) in self.atoms.iter().enumerate() {
            let (d, rep_pos) = nearest[pos];
            *merged.entry(self.atoms[rep_pos].0).or_insert(0.0) += w;
            bound.add(w * d);
        }
        let coarse = DiscreteMeasure {
            space: Arc::clone(&self.space),
            atoms: merged.into_iter().collect(),
            mass: self.mass,
        };
        Ok((coarse, bound.value()))
    }
}

/// Weighted sum of measures over a common space (or compatible versions of
/// one). Component weights must be finite and nonnegative; no implicit
/// normalization happens, so the result has mass `sum_i p_i * mass_i`.
pub fn mixture(components: &[(f64, &DiscreteMeasure)]) -> Result<DiscreteMeasure> {
    if components.is_empty() {
        return Err(Error::InvalidArgument("mixture of no components".into()));
    }
    for &(p, _) in components {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "mixture weight {p} must be finite and nonnegative"
            )));
        }
    }
    let mut space = Arc::clone(components[0].1.space());
    for &(_, m) in &components[1..] {
        space = union_space(&space, m.space())?;
    }
    let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
    let mut mass = KahanSum::default();
    for &(p, m) in components {
        if p == 0.0 {
            continue;
        }
        for &(i, w) in m.atoms() {
            *merged.entry(i).or_insert(0.0) += p * w;
        }
        mass.add(p * m.mass());
    }
    Ok(DiscreteMeasure {
        space,
        atoms: merged.into_iter().filter(|&(_, w)| w > 0.0).collect(),
        mass: mass.value(),
    })
}
