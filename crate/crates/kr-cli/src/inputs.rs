//! Input-file plumbing: parse JSON descriptors and resolve space references
//! relative to the file that makes them.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;

use kr_core::{
    DiscreteMeasure, FunctionDescriptor, MeasureDescriptor, MetricSpace, SpaceDescriptor,
    SpaceRef, SystemDescriptor,
};

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

/// Resolve a space reference; relative paths count from the directory of
/// the referencing file.
pub fn resolve_space(space: &SpaceRef, from: &Path) -> Result<Arc<MetricSpace>> {
    match space {
        SpaceRef::Inline(descriptor) => Ok(descriptor.build()?),
        SpaceRef::Reference(target) => {
            let mut path = PathBuf::from(target);
            if path.is_relative() {
                if let Some(dir) = from.parent() {
                    path = dir.join(path);
                }
            }
            let descriptor: SpaceDescriptor = load(&path)?;
            Ok(descriptor.build()?)
        }
    }
}

pub fn load_measure(path: &Path) -> Result<DiscreteMeasure> {
    let descriptor: MeasureDescriptor = load(path)?;
    let space = resolve_space(&descriptor.space, path)?;
    Ok(descriptor.build_on(space)?)
}

pub fn load_function(path: &Path) -> Result<(FunctionDescriptor, Arc<MetricSpace>)> {
    let descriptor: FunctionDescriptor = load(path)?;
    let space = resolve_space(&descriptor.space, path)?;
    Ok((descriptor, space))
}

pub fn load_system(path: &Path) -> Result<kr_core::ContractionSystem> {
    let descriptor: SystemDescriptor = load(path)?;
    Ok(descriptor.build()?)
}
