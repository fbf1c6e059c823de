use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ModelUri, RepoError, Repository};
use crate::apm::{validate_apm, AssemblyProcessModel, Stage};
use crate::aspm::{validate_aspm, CapabilityError, PlatformModel};
use crate::catalog::ActionCatalog;
use crate::document::{to_json, ModelKind};
use crate::ids::{kind_tag, ActionId, VariantTag};
use crate::lower::{check_feasibility, lower, LowerError, LoweringPolicy};
use crate::psm::{resolve_variant, ProductStructuralModel, PsmError};
use crate::report::ValidationReport;
use crate::sim::{simulate, SimConfig, SimError};

kind_tag!(JobTag, "job");

/// An order for `quantity` units of a product variant, assembled by the
/// referenced platform-independent process.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssemblyJob {
    pub kind: JobTag,
    /// Job name; its outputs are stored under this name.
    pub id: String,
    pub product_ref: ModelUri,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<VariantTag>,
    pub quantity: u32,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub quality_params: BTreeMap<String, String>,
    pub pi_apm_ref: ModelUri,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobStage {
    Resolve,
    ResolveVariant,
    Validate,
    CheckFeasibility,
    Lower,
    Simulate,
    Store,
}

impl JobStage {
    pub fn as_str(self) -> &'static str {
        match self {
            JobStage::Resolve => "resolve",
            JobStage::ResolveVariant => "resolve_variant",
            JobStage::Validate => "validate",
            JobStage::CheckFeasibility => "check_feasibility",
            JobStage::Lower => "lower",
            JobStage::Simulate => "simulate",
            JobStage::Store => "store",
        }
    }
}

impl fmt::Display for JobStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JobFailure {
    #[error(transparent)]
    Repo(#[from] RepoError),
    #[error(transparent)]
    Variant(#[from] PsmError),
    #[error("VALIDATION_FAILED: {0}")]
    Invalid(ValidationReport),
    #[error("WRONG_STAGE: `{0}` is not a platform-independent process model")]
    WrongStage(String),
    #[error("INFEASIBLE: platform lacks skills for actions {{{}}}", .gap.iter().map(ActionId::as_str).collect::<Vec<_>>().join(", "))]
    Infeasible { gap: BTreeSet<ActionId> },
    #[error(transparent)]
    Capability(#[from] CapabilityError),
    #[error(transparent)]
    Lower(#[from] LowerError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl JobFailure {
    pub fn code(&self) -> &'static str {
        match self {
            JobFailure::Repo(e) => e.code(),
            JobFailure::Variant(e) => e.code(),
            JobFailure::Invalid(_) => "VALIDATION_FAILED",
            JobFailure::WrongStage(_) => "WRONG_STAGE",
            JobFailure::Infeasible { .. } => "INFEASIBLE",
            JobFailure::Capability(_) => "UNKNOWN_ACTION",
            JobFailure::Lower(e) => e.code(),
            JobFailure::Sim(e) => e.code(),
        }
    }
}

/// A failed job run, naming the pipeline stage that failed.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("job failed at stage {stage}: {failure}")]
pub struct JobError {
    pub stage: JobStage,
    pub failure: JobFailure,
}

impl JobError {
    pub fn code(&self) -> &'static str {
        self.failure.code()
    }

    /// The capability gap, when the job failed for lack of skills.
    pub fn gap(&self) -> Option<&BTreeSet<ActionId>> {
        match &self.failure {
            JobFailure::Infeasible { gap } => Some(gap),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JobOutputs {
    pub ps_apm: ModelUri,
    pub report: ModelUri,
}

fn at<E: Into<JobFailure>>(stage: JobStage) -> impl FnOnce(E) -> JobError {
    move |e| JobError {
        stage,
        failure: e.into(),
    }
}

/// Resolves the job's models, specializes the product variant, checks the
/// platform can realize every action, lowers, simulates `quantity` units
/// and stores the platform-specific model and the report under the job id.
pub fn run_job(
    repo: &Repository,
    job: &AssemblyJob,
    platform_ref: &ModelUri,
    policy: LoweringPolicy,
) -> Result<JobOutputs, JobError> {
    use JobStage::*;
    let psm: ProductStructuralModel = repo.load(&job.product_ref).map_err(at(Resolve))?;
    let pi: AssemblyProcessModel = repo.load(&job.pi_apm_ref).map_err(at(Resolve))?;
    let platform: PlatformModel = repo.load(platform_ref).map_err(at(Resolve))?;
    let catalog_ref = ModelUri::parse(&pi.catalog_ref)
        .map_err(RepoError::from)
        .map_err(at(Resolve))?;
    let catalog: ActionCatalog = repo.load(&catalog_ref).map_err(at(Resolve))?;

    let psm = match &job.variant {
        Some(v) => resolve_variant(&psm, v).map_err(at(ResolveVariant))?,
        None => psm,
    };

    if pi.stage != Stage::PlatformIndependent {
        return Err(at(Validate)(JobFailure::WrongStage(pi.id.clone())));
    }
    let mut report = validate_apm(&pi, &psm, &catalog);
    report.merge(validate_aspm(&platform));
    if !report.is_conformant() {
        return Err(at(Validate)(JobFailure::Invalid(report)));
    }

    let feasibility = check_feasibility(&pi, &platform, &catalog).map_err(at(CheckFeasibility))?;
    if !feasibility.feasible {
        return Err(at(CheckFeasibility)(JobFailure::Infeasible { gap: feasibility.gap }));
    }

    let ps = lower(&pi, &platform, &catalog, policy).map_err(at(Lower))?;
    let config = SimConfig {
        quantity: job.quantity,
        quality_params: job.quality_params.clone(),
        ..SimConfig::default()
    };
    let sim = simulate(&ps, &platform, &config).map_err(at(Simulate))?;

    let ps_apm = repo.store(&to_json(&ps), Some(&job.id)).map_err(at(Store))?;
    let report = repo.store(&to_json(&sim), Some(&job.id)).map_err(at(Store))?;
    debug_assert_eq!((ps_apm.kind, report.kind), (ModelKind::ApmPs, ModelKind::SimReport));
    Ok(JobOutputs { ps_apm, report })
}
