//! Self-contained deployment bundles: a platform-specific process model with
//! the catalog entries it uses and a snapshot of its platform.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::apm::{required_actions, AssemblyProcessModel, Stage};
use crate::aspm::PlatformModel;
use crate::catalog::ActionCatalog;
use crate::document::to_json;
use crate::ids::{kind_tag, ActionId};
use crate::lower::{check_schedule, Instance};
use crate::repo::content_digest;

kind_tag!(ManifestTag, "deploy-manifest");

pub const PS_APM_FILE: &str = "ps-apm.json";
pub const CATALOG_FILE: &str = "catalog.json";
pub const PLATFORM_FILE: &str = "platform.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub kind: ManifestTag,
    pub model: String,
    pub platform: String,
    pub files: Vec<BundleFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DeployError {
    #[error("NOT_PLATFORM_SPECIFIC: model `{0}` has no schedule")]
    NotPlatformSpecific(String),
    #[error("BINDING_MISMATCH: model is bound to platform `{bound}`, not `{given}`")]
    BindingMismatch { bound: String, given: String },
    #[error("UNKNOWN_ACTION: catalog lacks {}", .0.iter().map(ActionId::as_str).collect::<Vec<_>>().join(", "))]
    UnknownAction(BTreeSet<ActionId>),
    #[error("INVALID_SCHEDULE: {0}")]
    InvalidSchedule(String),
    #[error("IO_ERROR: {path}: {message}")]
    Io { path: String, message: String },
}

impl DeployError {
    pub fn code(&self) -> &'static str {
        match self {
            DeployError::NotPlatformSpecific(_) => "NOT_PLATFORM_SPECIFIC",
            DeployError::BindingMismatch { .. } => "BINDING_MISMATCH",
            DeployError::UnknownAction(_) => "UNKNOWN_ACTION",
            DeployError::InvalidSchedule(_) => "INVALID_SCHEDULE",
            DeployError::Io { .. } => "IO_ERROR",
        }
    }
}

/// The catalog restricted to the actions `apm` uses.
pub fn catalog_subset(apm: &AssemblyProcessModel, catalog: &ActionCatalog) -> Result<ActionCatalog, DeployError> {
    let used = required_actions(apm);
    let missing: BTreeSet<ActionId> = used.iter().filter(|a| catalog.get(a).is_none()).cloned().collect();
    if !missing.is_empty() {
        return Err(DeployError::UnknownAction(missing));
    }
    Ok(ActionCatalog {
        entries: catalog.entries.iter().filter(|e| used.contains(&e.id)).cloned().collect(),
        ..catalog.clone()
    })
}

/// Checks the schedule against the platform and writes the bundle into
/// `dir`, creating it if needed.
pub fn deploy(
    ps_apm: &AssemblyProcessModel,
    platform: &PlatformModel,
    catalog: &ActionCatalog,
    dir: &Path,
) -> Result<Manifest, DeployError> {
    let binding = match (&ps_apm.stage, &ps_apm.platform_binding) {
        (Stage::PlatformSpecific, Some(b)) => b,
        _ => return Err(DeployError::NotPlatformSpecific(ps_apm.id.clone())),
    };
    if binding.platform_ref != platform.id {
        return Err(DeployError::BindingMismatch {
            bound: binding.platform_ref.clone(),
            given: platform.id.clone(),
        });
    }
    let subset = catalog_subset(ps_apm, catalog)?;
    let inst = Instance::new(ps_apm, platform, catalog).map_err(|e| DeployError::InvalidSchedule(e.to_string()))?;
    if let Some(v) = check_schedule(&inst, &binding.schedule).first() {
        return Err(DeployError::InvalidSchedule(v.to_string()));
    }

    let io = |path: &Path, e: std::io::Error| DeployError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut files = Vec::new();
    for (name, text) in [
        (PS_APM_FILE, to_json(ps_apm)),
        (CATALOG_FILE, to_json(&subset)),
        (PLATFORM_FILE, to_json(platform)),
    ] {
        let path = dir.join(name);
        fs::write(&path, &text).map_err(|e| io(&path, e))?;
        files.push(BundleFile {
            path: name.to_owned(),
            sha256: content_digest(&text),
        });
    }
    let manifest = Manifest {
        kind: ManifestTag,
        model: ps_apm.id.clone(),
        platform: platform.id.clone(),
        files,
    };
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, to_json(&manifest)).map_err(|e| io(&path, e))?;
    Ok(manifest)
}
