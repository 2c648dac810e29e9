//! Exact transport distances and certified fixed points for finitely
//! supported measures on a metric space.
//!
//! The crate is organized around four layers:
//!
//! * [`space`] registers points of a metric space (euclidean coordinates or
//!   an explicit distance matrix) behind immutable, copy-on-extend handles.
//! * [`measure`] and [`lipschitz`] provide the two sides of the duality:
//!   finitely supported measures and bounded-slope functions, with the
//!   classical envelope and extension operators.
//! * [`transport`] computes the Kantorovich-Rubinshtein distance between two
//!   probability measures by solving the induced transportation problem
//!   exactly, returning a primal plan and a dual potential that certify the
//!   value against each other.
//! * [`hutchinson`] iterates the Markov operator of a contraction system to
//!   an invariant measure with an a posteriori error bound, and
//!   [`diagnostics`] builds the classical sequences that probe completeness
//!   and tightness of the metric itself.
//!
//! All computations are deterministic: identical inputs produce identical
//! bytes in every report.

#![forbid(unsafe_code)]

pub mod diagnostics;
pub mod error;
pub mod hutchinson;
pub mod io;
pub mod lipschitz;
pub mod measure;
pub mod space;
pub mod transport;

/// Numeric tolerances used across the crate.
///
/// These are deliberate, documented slacks, not ambient fuzz: every
/// comparison that is not exact points at one of these constants.
pub mod tol {
    /// Euclidean points closer than this merge into one registered point.
    pub const MERGE: f64 = 1e-12;

    /// Total-mass bookkeeping: a measure is a probability when its mass is
    /// within this of 1, and plan marginals must match within this.
    pub const MASS: f64 = 1e-12;

    /// Certificate checks (duality gap, marginal residuals) pass below this.
    pub const CERT: f64 = 1e-9;

    /// Slack allowed when checking a Lipschitz bound on given data, to keep
    /// honest round-off from failing an exactly tight pair.
    pub const LIP_SLACK: f64 = 1e-9;

    /// Relative slack for triangle-inequality validation of distance
    /// matrices.
    pub const TRIANGLE_REL: f64 = 1e-9;
}

pub use diagnostics::{
    build_witness, cauchy_profile, tightness_cover, verify_witness, CauchyProfile, CoverOutcome,
    MeasureSequence, WitnessArtifacts, WitnessReport,
};
pub use error::{Error, Result};
pub use hutchinson::{
    iterate_invariant, iterate_invariant_with, markov_step, markov_step_pair, operator_gap,
    truncate_countable,
    ContractionMap, ContractionSystem, IterationReport, TailBound, TailReport,
};
pub use io::{
    CertificateDescriptor, FunctionDescriptor, IterationDescriptor, MapDescriptor,
    MeasureDescriptor, SpaceDescriptor, SpaceRef, SystemDescriptor,
};
pub use lipschitz::{envelope, lip_constant, mcshane_extend, LipFunction};
pub use measure::{mixture, DiscreteMeasure, Target};
pub use space::{union_space, MetricSpace, SpaceBuilder, ValidationIssue};
pub use transport::{
    dual_evaluate, kr_distance, verify_certificate, CertificateCheck, TransportCertificate,
};
