//! The built-in scenarios: lazily growing measure sequences, the two
//! classic one-dimensional systems, and the truncated basis-halving family.

use anyhow::{bail, Result};

use kr_core::hutchinson::{
    basis_halving_family, basis_halving_tail, bernoulli_system, cantor_system,
};
use kr_core::{ContractionSystem, MeasureSequence, TailReport};

pub const SEQUENCES: [&str; 3] = ["assertion-1.1", "lemma-3.7", "escaping-dirac"];
pub const SYSTEMS: [&str; 2] = ["bernoulli", "cantor"];

/// The sequence scenarios: a reservoir draining along the integers, a
/// receding spike at quadratic positions, and a Dirac walking off in steps
/// of two.
pub fn sequence(name: &str) -> Result<MeasureSequence> {
    Ok(match name {
        "assertion-1.1" => MeasureSequence::dyadic_reservoir(|k| vec![k as f64])?,
        "lemma-3.7" => MeasureSequence::receding_spike(|n| vec![(n * n) as f64])?,
        "escaping-dirac" => MeasureSequence::dirac_walk(|n| vec![2.0 * n as f64])?,
        other => bail!(
            "unknown sequence scenario {other:?}; expected one of {}",
            SEQUENCES.join(", ")
        ),
    })
}

pub fn system(name: &str) -> Result<ContractionSystem> {
    Ok(match name {
        "bernoulli" => bernoulli_system(),
        "cantor" => cantor_system(),
        other => bail!(
            "unknown system scenario {other:?}; expected one of {}",
            SYSTEMS.join(", ")
        ),
    })
}

/// The first `trunc` maps of the basis-halving family in the given
/// dimension, renormalized, with the discarded tail accounted for.
pub fn example_truncation(dim: usize, trunc: usize) -> Result<(ContractionSystem, TailReport)> {
    if trunc == 0 || trunc > dim {
        bail!("truncation must keep between 1 and {dim} maps, got {trunc}");
    }
    if trunc > u32::MAX as usize {
        bail!("truncation {trunc} is out of range");
    }
    let family = basis_halving_family(dim).into_iter().take(trunc);
    Ok(kr_core::truncate_countable(family, trunc, basis_halving_tail(trunc as u32))?)
}
