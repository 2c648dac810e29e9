//! Serializable descriptors for the crate's domain objects.
//!
//! Everything here is plain data with a pinned JSON shape; the conversions
//! validate on the way in and compact on the way out. File handling stays
//! with the caller, so a `reference` space (a path string) must be resolved
//! before a measure can be built.
//!
//! Shapes:
//!
//! * space: `{"mode":"euclidean","points":[[x,...],...]}` or
//!   `{"mode":"matrix","n":k,"dist":[[...],...]}`
//! * measure: `{"space":<space or path string>,"atoms":[[index,weight],...]}`
//! * function: `{"space":...,"values":[[index,value],...],"lip_bound":b}`
//!   (`lip_bound` optional; omitted for partial assignments to extend)
//! * system: `{"maps":[{"A":[[...]],"b":[...],"lip":s}
//!   or {"ratio":r,"fix":[...]}],"p":[...]}`
//! * certificate: `{"value":v,"plan":[[i,j,flow],...],"potential":[[i,f],...]}`

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hutchinson::{ContractionMap, ContractionSystem, IterationReport};
use crate::lipschitz::LipFunction;
use crate::measure::DiscreteMeasure;
use crate::space::MetricSpace;
use crate::transport::TransportCertificate;

/// A metric space as data: explicit coordinates or an explicit table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum SpaceDescriptor {
    Euclidean { points: Vec<Vec<f64>> },
    Matrix { n: usize, dist: Vec<Vec<f64>> },
}

impl SpaceDescriptor {
    /// Validate and build the described space.
    pub fn build(&self) -> Result<Arc<MetricSpace>> {
        match self {
            SpaceDescriptor::Euclidean { points } => {
                Ok(Arc::new(MetricSpace::euclidean(points.clone())?))
            }
            SpaceDescriptor::Matrix { n, dist } => {
                if dist.len() != *n {
                    return Err(Error::BadMatrix(format!(
                        "declared n = {n} but the table has {} rows",
                        dist.len()
                    )));
                }
                Ok(Arc::new(MetricSpace::from_matrix(dist.clone())?))
            }
        }
    }

    /// Describe an existing space verbatim.
    pub fn from_space(space: &MetricSpace) -> SpaceDescriptor {
        match space.dim() {
            Some(_) => SpaceDescriptor::Euclidean {
                points: (0..space.len())
                    .map(|i| space.point(i).expect("index in range").to_vec())
                    .collect(),
            },
            None => SpaceDescriptor::Matrix {
                n: space.len(),
                dist: (0..space.len())
                    .map(|i| (0..space.len()).map(|j| space.dist(i, j)).collect())
                    .collect(),
            },
        }
    }
}

/// A space given inline or by reference to an external artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceRef {
    Inline(SpaceDescriptor),
    Reference(String),
}

/// A finitely supported measure, atoms indexing into its space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureDescriptor {
    pub space: SpaceRef,
    pub atoms: Vec<(usize, f64)>,
}

impl MeasureDescriptor {
    /// Build the measure against an already-resolved space. The caller must
    /// have built `space` from this descriptor's space (or from the shared
    /// space both measures of a pair reference).
    pub fn build_on(&self, space: Arc<MetricSpace>) -> Result<DiscreteMeasure> {
        DiscreteMeasure::new(space, self.atoms.iter().copied())
    }

    /// Describe a measure compactly: only the support points are emitted,
    /// with atoms reindexed against them, so artifacts stay small no matter
    /// how large the working space grew.
    pub fn from_measure(nu: &DiscreteMeasure) -> MeasureDescriptor {
        let space = nu.space();
        let support: Vec<usize> = nu.atoms().iter().map(|&(i, _)| i).collect();
        let descriptor = match space.dim() {
            Some(_) => SpaceDescriptor::Euclidean {
                points: support
                    .iter()
                    .map(|&i| space.point(i).expect("atom in range").to_vec())
                    .collect(),
            },
            None => SpaceDescriptor::Matrix {
                n: support.len(),
                dist: support
                    .iter()
                    .map(|&i| support.iter().map(|&j| space.dist(i, j)).collect())
                    .collect(),
            },
        };
        MeasureDescriptor {
            space: SpaceRef::Inline(descriptor),
            atoms: nu
                .atoms()
                .iter()
                .enumerate()
                .map(|(k, &(_, w))| (k, w))
                .collect(),
        }
    }
}

/// A Lipschitz function (or partial assignment) as index/value pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionDescriptor {
    pub space: SpaceRef,
    pub values: Vec<(usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lip_bound: Option<f64>,
}

impl FunctionDescriptor {
    /// Build the function with the declared bound, or with the exhaustive
    /// Lipschitz constant of the data when none is declared.
    pub fn build_on(&self, space: &MetricSpace) -> Result<LipFunction> {
        let values: BTreeMap<usize, f64> = self.values.iter().copied().collect();
        if values.len() != self.values.len() {
            return Err(Error::InvalidArgument(
                "duplicate indices in function values".into(),
            ));
        }
        for &i in values.keys() {
            if i >= space.len() {
                return Err(Error::PointOutOfRange { index: i, len: space.len() });
            }
        }
        let bound = match self.lip_bound {
            Some(b) => b,
            None => crate::lipschitz::max_quotient(&values, space),
        };
        LipFunction::new(values, bound)
    }

    /// The raw partial assignment, for extension.
    pub fn partial_values(&self) -> Result<BTreeMap<usize, f64>> {
        let values: BTreeMap<usize, f64> = self.values.iter().copied().collect();
        if values.len() != self.values.len() {
            return Err(Error::InvalidArgument(
                "duplicate indices in function values".into(),
            ));
        }
        Ok(values)
    }

    /// Describe a function over the given space.
    pub fn from_function(f: &LipFunction, space: &MetricSpace) -> FunctionDescriptor {
        FunctionDescriptor {
            space: SpaceRef::Inline(SpaceDescriptor::from_space(space)),
            values: f.values().iter().map(|(&i, &v)| (i, v)).collect(),
            lip_bound: Some(f.lip_bound()),
        }
    }
}

/// One contraction map: an affine map with an optional declared constant,
/// or a similarity collapsing toward a fixed point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MapDescriptor {
    Affine {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lip: Option<f64>,
    },
    Similarity { ratio: f64, fix: Vec<f64> },
}

impl MapDescriptor {
    pub fn build(&self) -> Result<ContractionMap> {
        match self {
            MapDescriptor::Affine { a, b, lip } => match lip {
                Some(s) => ContractionMap::affine_with_lip(a.clone(), b.clone(), *s),
                None => ContractionMap::affine(a.clone(), b.clone()),
            },
            MapDescriptor::Similarity { ratio, fix } => {
                ContractionMap::similarity(*ratio, fix.clone())
            }
        }
    }
}

/// A finite contraction system: maps plus a probability vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDescriptor {
    pub maps: Vec<MapDescriptor>,
    pub p: Vec<f64>,
}

impl SystemDescriptor {
    pub fn build(&self) -> Result<ContractionSystem> {
        let maps: Vec<ContractionMap> =
            self.maps.iter().map(|m| m.build()).collect::<Result<_>>()?;
        ContractionSystem::new(maps, self.p.clone())
    }
}

/// A distance certificate as data: optimal value, transport plan, and the
/// dual potential on the union support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateDescriptor {
    pub value: f64,
    pub plan: Vec<(usize, usize, f64)>,
    pub potential: Vec<(usize, f64)>,
}

impl CertificateDescriptor {
    pub fn from_certificate(cert: &TransportCertificate) -> CertificateDescriptor {
        CertificateDescriptor {
            value: cert.value,
            plan: cert.plan.clone(),
            potential: cert.potential.values().iter().map(|(&i, &v)| (i, v)).collect(),
        }
    }

    /// Rebuild the in-memory certificate (potential declared 1-Lipschitz,
    /// as certificates require).
    pub fn build(&self) -> Result<TransportCertificate> {
        let potential =
            LipFunction::new(self.potential.iter().copied().collect(), 1.0)?;
        Ok(TransportCertificate {
            value: self.value,
            plan: self.plan.clone(),
            potential,
        })
    }
}

/// A fixed-point iteration outcome as data, with the iterate compacted to
/// its support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationDescriptor {
    pub iterate: MeasureDescriptor,
    pub steps: usize,
    pub last_step_distance: f64,
    pub a_posteriori_bound: f64,
    pub coarsening_bound: f64,
    pub contraction_factor: f64,
    pub converged: bool,
    pub step_distances: Vec<f64>,
}

impl IterationDescriptor {
    pub fn from_report(report: &IterationReport) -> IterationDescriptor {
        IterationDescriptor {
            iterate: MeasureDescriptor::from_measure(&report.iterate),
            steps: report.steps,
            last_step_distance: report.last_step_distance,
            a_posteriori_bound: report.a_posteriori_bound,
            coarsening_bound: report.coarsening_bound,
            contraction_factor: report.contraction_factor,
            converged: report.converged,
            step_distances: report.step_distances.clone(),
        }
    }
}
