//! URI-addressed local model repository and assembly-job execution.
//!
//! Entries live at `<root>/<kind>/<name>/<version>.json`. Each file wraps
//! the stored document text verbatim together with its SHA-256 digest, the
//! entry URI and the time of storage. Entries are immutable: storing again
//! under an existing name allocates the next version.

mod job;
mod uri;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use job::{run_job, AssemblyJob, JobError, JobFailure, JobOutputs, JobStage, JobTag};
pub use uri::{check_name, ModelUri, UriError, SCHEME};

use crate::apm::{validate_apm, validate_apm_structure, AssemblyProcessModel, Stage};
use crate::aspm::PlatformModel;
use crate::catalog::ActionCatalog;
use crate::document::{parse_as, validate_document, Document, DocumentError, ModelKind};
use crate::lower::{check_schedule, Instance};
use crate::psm::ProductStructuralModel;
use crate::report::{Rule, ValidationReport};

pub const DEFAULT_ROOT: &str = ".hasrepo";
pub const ROOT_ENV: &str = "HAS_REPO";
pub const DEFAULT_NAME: &str = "main";
pub const ENTRY_FORMAT: &str = "has-repo-entry/1";
pub const DIGEST_ALGORITHM: &str = "sha256";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RepoError {
    #[error(transparent)]
    MalformedUri(#[from] UriError),
    #[error("NOT_FOUND: {0}")]
    NotFound(String),
    #[error("VALIDATION_FAILED: {kind} document rejected:\n  {}", .details.join("\n  "))]
    ValidationFailed { kind: String, details: Vec<String> },
    #[error("UNSUPPORTED_KIND: `{0}` documents cannot be stored")]
    UnsupportedKind(ModelKind),
    #[error("CORRUPT_ENTRY: {path}: {message}")]
    Corrupt { path: String, message: String },
    #[error("IO_ERROR: {path}: {message}")]
    Io { path: String, message: String },
}

impl RepoError {
    pub fn code(&self) -> &'static str {
        match self {
            RepoError::MalformedUri(_) => "MALFORMED_URI",
            RepoError::NotFound(_) => "NOT_FOUND",
            RepoError::ValidationFailed { .. } => "VALIDATION_FAILED",
            RepoError::UnsupportedKind(_) => "UNSUPPORTED_KIND",
            RepoError::Corrupt { .. } => "CORRUPT_ENTRY",
            RepoError::Io { .. } => "IO_ERROR",
        }
    }

    fn io(path: &Path, e: io::Error) -> RepoError {
        RepoError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    fn rejected(kind: impl ToString, details: Vec<String>) -> RepoError {
        RepoError::ValidationFailed {
            kind: kind.to_string(),
            details,
        }
    }
}

/// Metadata of one stored version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoEntry {
    pub uri: ModelUri,
    pub content_digest: String,
    pub stored_at: String,
}

/// On-disk wrapper around the stored document text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryFile {
    format: String,
    digest_algorithm: String,
    digest: String,
    uri: ModelUri,
    stored_at: String,
    content: String,
}

pub fn content_digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Repository {
    root: PathBuf,
    name: String,
}

impl Repository {
    pub fn open(root: impl Into<PathBuf>) -> Repository {
        Repository {
            root: root.into(),
            name: DEFAULT_NAME.to_owned(),
        }
    }

    /// Root from `flag`, else `$HAS_REPO`, else `.hasrepo`.
    pub fn locate(flag: Option<&Path>) -> Repository {
        match (flag, std::env::var_os(ROOT_ENV)) {
            (Some(p), _) => Repository::open(p),
            (None, Some(env)) if !env.is_empty() => Repository::open(env),
            _ => Repository::open(DEFAULT_ROOT),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    fn entry_dir(&self, kind: ModelKind, name: &str) -> PathBuf {
        self.root.join(kind.as_str()).join(name)
    }

    fn entry_path(&self, uri: &ModelUri) -> PathBuf {
        self.entry_dir(uri.kind, &uri.name).join(format!("{}.json", uri.version))
    }

    /// Stored versions of `(kind, name)`, ascending.
    pub fn versions(&self, kind: ModelKind, name: &str) -> Result<Vec<u32>, RepoError> {
        let dir = self.entry_dir(kind, name);
        let mut versions = Vec::new();
        let listing = match fs::read_dir(&dir) {
            Ok(l) => l,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(versions),
            Err(e) => return Err(RepoError::io(&dir, e)),
        };
        for item in listing {
            let item = item.map_err(|e| RepoError::io(&dir, e))?;
            let file = item.file_name();
            let Some(stem) = file.to_str().and_then(|f| f.strip_suffix(".json")) else {
                continue;
            };
            if let Ok(v) = stem.parse::<u32>() {
                if v > 0 && stem == v.to_string() {
                    versions.push(v);
                }
            }
        }
        versions.sort_unstable();
        Ok(versions)
    }

    /// Validates `text` for its kind and persists it under the next version
    /// of `name` (default: the document's own id).
    pub fn store(&self, text: &str, name: Option<&str>) -> Result<ModelUri, RepoError> {
        let doc = Document::parse(text).map_err(|e| match e {
            DocumentError::UnknownKind(ref k) => RepoError::rejected(k, vec![e.to_string()]),
            other => RepoError::rejected("unknown", vec![other.to_string()]),
        })?;
        let kind = doc.kind();
        if !kind.is_storable() {
            return Err(RepoError::UnsupportedKind(kind));
        }
        let name = match name {
            Some(n) => n.to_owned(),
            None => match doc.id() {
                Some(id) => ModelUri::parse(id).map(|u| u.name).unwrap_or_else(|_| id.to_owned()),
                None => return Err(RepoError::rejected(kind, vec!["document has no id; give a name".into()])),
            },
        };
        check_name(&name).map_err(|reason| UriError {
            text: format!("{SCHEME}{}/{kind}/{name}", self.name),
            reason,
        })?;
        self.check(&doc)?;
        self.write(kind, &name, text)
    }

    fn write(&self, kind: ModelKind, name: &str, text: &str) -> Result<ModelUri, RepoError> {
        static COUNTER: AtomicU64 = AtomicU64::new(0);
        let dir = self.entry_dir(kind, name);
        fs::create_dir_all(&dir).map_err(|e| RepoError::io(&dir, e))?;
        let stored_at = time::OffsetDateTime::now_utc()
            .format(&time::format_description::well_known::Rfc3339)
            .expect("UTC timestamps format");
        let digest = content_digest(text);
        let tmp = dir.join(format!(
            ".tmp-{}-{}",
            std::process::id(),
            COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let mut version = self.versions(kind, name)?.last().copied().unwrap_or(0) + 1;
        // Hard-linking fails if the target exists, so a concurrent writer
        // that claimed this version pushes us to the next one.
        let result = loop {
            let uri = ModelUri::new(&self.name, kind, name, version);
            let file = EntryFile {
                format: ENTRY_FORMAT.to_owned(),
                digest_algorithm: DIGEST_ALGORITHM.to_owned(),
                digest: digest.clone(),
                uri: uri.clone(),
                stored_at: stored_at.clone(),
                content: text.to_owned(),
            };
            if let Err(e) = fs::write(&tmp, crate::document::to_json(&file)) {
                break Err(RepoError::io(&tmp, e));
            }
            let path = self.entry_path(&uri);
            match fs::hard_link(&tmp, &path) {
                Ok(()) => break Ok(uri),
                Err(e) if e.kind() == io::ErrorKind::AlreadyExists => version += 1,
                Err(e) => break Err(RepoError::io(&path, e)),
            }
        };
        let _ = fs::remove_file(&tmp);
        result
    }

    fn read_entry(&self, uri: &ModelUri) -> Result<EntryFile, RepoError> {
        if uri.repo != self.name {
            return Err(RepoError::NotFound(format!("{uri} (repository is `{}`)", self.name)));
        }
        let path = self.entry_path(uri);
        let raw = match fs::read_to_string(&path) {
            Ok(r) => r,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(RepoError::NotFound(uri.to_string())),
            Err(e) => return Err(RepoError::io(&path, e)),
        };
        let corrupt = |message: String| RepoError::Corrupt {
            path: path.display().to_string(),
            message,
        };
        let entry: EntryFile = serde_json::from_str(&raw).map_err(|e| corrupt(e.to_string()))?;
        if entry.digest_algorithm != DIGEST_ALGORITHM || entry.digest != content_digest(&entry.content) {
            return Err(corrupt("content digest mismatch".into()));
        }
        if entry.uri != *uri {
            return Err(corrupt(format!("entry claims to be {}", entry.uri)));
        }
        Ok(entry)
    }

    /// The exact stored text.
    pub fn resolve(&self, uri: &ModelUri) -> Result<String, RepoError> {
        Ok(self.read_entry(uri)?.content)
    }

    pub fn resolve_str(&self, uri: &str) -> Result<String, RepoError> {
        self.resolve(&ModelUri::parse(uri)?)
    }

    pub fn entry(&self, uri: &ModelUri) -> Result<RepoEntry, RepoError> {
        let e = self.read_entry(uri)?;
        Ok(RepoEntry {
            uri: e.uri,
            content_digest: e.digest,
            stored_at: e.stored_at,
        })
    }

    /// Resolves and parses a document of the URI's kind.
    pub fn load<T: serde::de::DeserializeOwned>(&self, uri: &ModelUri) -> Result<T, RepoError> {
        let text = self.resolve(uri)?;
        parse_as(&text, uri.kind).map_err(|e| RepoError::Corrupt {
            path: self.entry_path(uri).display().to_string(),
            message: e.to_string(),
        })
    }

    /// All entries, optionally of one kind, ordered by kind, name, version.
    pub fn list(&self, kind: Option<ModelKind>) -> Result<Vec<RepoEntry>, RepoError> {
        let mut out = Vec::new();
        for k in ModelKind::ALL.into_iter().filter(|k| k.is_storable() && kind.is_none_or(|x| x == *k)) {
            let dir = self.root.join(k.as_str());
            let listing = match fs::read_dir(&dir) {
                Ok(l) => l,
                Err(e) if e.kind() == io::ErrorKind::NotFound => continue,
                Err(e) => return Err(RepoError::io(&dir, e)),
            };
            let mut names: Vec<String> = Vec::new();
            for item in listing {
                let item = item.map_err(|e| RepoError::io(&dir, e))?;
                if let Some(n) = item.file_name().to_str() {
                    if check_name(n).is_ok() {
                        names.push(n.to_owned());
                    }
                }
            }
            names.sort();
            for n in names {
                for v in self.versions(k, &n)? {
                    out.push(self.entry(&ModelUri::new(&self.name, k, &n, v))?);
                }
            }
        }
        Ok(out)
    }

    /// A `has://` reference of this repository that currently resolves.
    fn resolvable<T: serde::de::DeserializeOwned>(&self, reference: &str, kind: ModelKind) -> Option<T> {
        let uri = ModelUri::parse(reference).ok()?;
        (uri.kind == kind).then_some(())?;
        self.load(&uri).ok()
    }

    fn check(&self, doc: &Document) -> Result<(), RepoError> {
        let mut report = validate_document(doc);
        if report.is_conformant() {
            match doc {
                Document::Apm(m) => report = self.check_apm(m),
                Document::Job(j) => report.merge(self.check_job(j)),
                Document::Liaisons(_) => return Err(RepoError::UnsupportedKind(doc.kind())),
                _ => {}
            }
        }
        if report.is_conformant() {
            Ok(())
        } else {
            Err(RepoError::rejected(
                doc.kind(),
                report
                    .violations
                    .iter()
                    .map(|f| format!("{} [{}] {}", f.rule, f.element, f.message))
                    .collect(),
            ))
        }
    }

    /// Full validation when the product and catalog references resolve in
    /// this repository, structural validation otherwise. Platform-specific
    /// schedules are also checked when the platform resolves.
    pub fn check_apm(&self, m: &AssemblyProcessModel) -> ValidationReport {
        let psm: Option<ProductStructuralModel> = self.resolvable(&m.product_ref, ModelKind::Psm);
        let catalog: Option<ActionCatalog> = self.resolvable(&m.catalog_ref, ModelKind::Catalog);
        let mut report = match (&psm, &catalog) {
            (Some(p), Some(c)) => validate_apm(m, p, c),
            _ => validate_apm_structure(m),
        };
        if !report.is_conformant() {
            return report;
        }
        if let (Stage::PlatformSpecific, Some(binding), Some(c)) = (m.stage, &m.platform_binding, &catalog) {
            let platform: Option<PlatformModel> = self.resolvable(&binding.platform_ref, ModelKind::Aspm);
            if let Some(p) = platform {
                match Instance::new(m, &p, c) {
                    Ok(inst) => {
                        for v in check_schedule(&inst, &binding.schedule) {
                            report.violation(Rule::ScheduleIncomplete, &m.id, v.to_string());
                        }
                    }
                    Err(e) => report.violation(Rule::ScheduleIncomplete, &m.id, e.to_string()),
                }
            }
        }
        report
    }

    fn check_job(&self, j: &AssemblyJob) -> ValidationReport {
        let mut r = ValidationReport::new(&j.id);
        match self.load::<ProductStructuralModel>(&j.product_ref) {
            Ok(psm) => {
                if let Some(v) = &j.variant {
                    if !psm.variants.contains(v) {
                        r.violation(Rule::UnknownVariant, v.as_str(), format!("not declared by {}", j.product_ref));
                    }
                }
            }
            Err(e) => r.violation(Rule::DanglingReference, j.product_ref.to_string(), e.to_string()),
        }
        if let Err(e) = self.resolve(&j.pi_apm_ref) {
            r.violation(Rule::DanglingReference, j.pi_apm_ref.to_string(), e.to_string());
        }
        r
    }
}
