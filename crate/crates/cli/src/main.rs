//! `has`: command-line driver for the assembly toolchain.
//!
//! Structured results go to standard output, diagnostics to standard error.
//! Exit status: 0 success, 1 validation failure, 2 infeasible or cyclic,
//! 3 I/O or URI error, 4 usage error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use has_core::apm::{validate_apm, AssemblyProcessModel};
use has_core::aspm::PlatformModel;
use has_core::catalog::ActionCatalog;
use has_core::deploy::deploy;
use has_core::document::{parse_as, to_json, validate_document, Document, ModelKind};
use has_core::lower::{lower, LoweringPolicy};
use has_core::psm::ProductStructuralModel;
use has_core::repo::{run_job, AssemblyJob, ModelUri, Repository, SCHEME};
use has_core::sim::{compare_scenarios, comparison_table, simulate, SimConfig, SimReport};
use has_core::xform::{
    count_sequences, enumerate_sequences, generate_pi_apm, import_bom, BillOfMaterials, ConstraintSet, LiaisonList,
    Template,
};
use has_core::Time;

const EXIT_VALIDATION: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_USAGE: u8 = 4;

#[derive(Parser)]
#[command(name = "has", version, about = "Model-driven assembly process toolchain")]
struct Cli {
    /// Repository root (default `.hasrepo`).
    #[arg(long, global = true, env = "HAS_REPO")]
    repo: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model file against its meta-model.
    Validate {
        file: String,
        /// Product model for full process-model validation.
        #[arg(long)]
        psm: Option<String>,
        /// Action catalog for full process-model validation.
        #[arg(long)]
        catalog: Option<String>,
    },
    /// Turn a bill of materials into a product structural model.
    ImportBom {
        #[arg(long)]
        bom: String,
        #[arg(long)]
        liaisons: Option<String>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Generate the platform-independent process model of a product.
    GenPi {
        #[arg(long)]
        psm: String,
        #[arg(long)]
        constraints: Option<String>,
        #[arg(long)]
        catalog: String,
        /// Catalog action used for every joining step.
        #[arg(long, default_value = "insert")]
        join_action: String,
        /// Id of the generated model (default `<psm id>:pi`).
        #[arg(long)]
        id: Option<String>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// List the feasible activity orders of one process level.
    Enumerate {
        #[arg(long)]
        apm: String,
        #[arg(long)]
        level: String,
        #[arg(long, default_value_t = 1000)]
        limit: usize,
        /// Print only the number of orders.
        #[arg(long)]
        count_only: bool,
    },
    /// Schedule a platform-independent process onto a platform.
    Lower {
        #[arg(long)]
        apm: String,
        #[arg(long)]
        platform: String,
        #[arg(long)]
        catalog: String,
        #[arg(long, value_enum, default_value_t = Policy::List)]
        policy: Policy,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Evaluate a platform-specific process by discrete-event simulation.
    Simulate {
        #[arg(long)]
        apm_ps: String,
        #[arg(long)]
        platform: String,
        #[arg(long, default_value_t = 1)]
        quantity: u32,
        /// Time between successive unit releases.
        #[arg(long, default_value = "0")]
        release: Time,
        /// Also write the JSON report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Print an aligned table instead of JSON.
        #[arg(long)]
        table: bool,
    },
    /// Rank simulation reports (labelled by file name).
    Compare {
        #[arg(required = true)]
        reports: Vec<String>,
        /// Print the ranking as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Manage repository entries.
    Repo {
        #[command(subcommand)]
        command: RepoCommand,
    },
    /// Register and run assembly jobs.
    Job {
        #[command(subcommand)]
        command: JobCommand,
    },
    /// Write a deployment bundle for a platform-specific process.
    Deploy {
        #[arg(long)]
        apm_ps: String,
        #[arg(long)]
        platform: String,
        #[arg(long)]
        catalog: String,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Subcommand)]
enum RepoCommand {
    /// Validate and store a model; prints its URI.
    Store {
        file: PathBuf,
        /// Entry name (default: the document id).
        #[arg(long)]
        name: Option<String>,
    },
    /// Print the exact stored text of a URI.
    Resolve { uri: String },
    /// List entries as `uri digest stored_at`.
    List {
        #[arg(long)]
        kind: Option<String>,
    },
}

#[derive(Subcommand)]
enum JobCommand {
    /// Store a job file; prints its URI.
    Add { file: PathBuf },
    /// Run a stored job against a stored platform.
    Run {
        job: String,
        #[arg(long)]
        platform: String,
        #[arg(long, value_enum, default_value_t = Policy::List)]
        policy: Policy,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    List,
    Exact,
}

impl From<Policy> for LoweringPolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::List => LoweringPolicy::LIST,
            Policy::Exact => LoweringPolicy::EXACT,
        }
    }
}

/// A failure carrying its exit status.
struct Failure {
    status: u8,
    message: String,
}

impl Failure {
    fn new(status: u8, message: impl ToString) -> Self {
        Failure {
            status,
            message: message.to_string(),
        }
    }

    /// Exit status from a library error code.
    fn coded(code: &str, message: impl ToString) -> Self {
        let status = match code {
            "INFEASIBLE" | "CONSTRAINT_CYCLE" | "CYCLIC" | "NO_ROUTE" | "CAPACITY_EXCEEDED" | "EXACT_LIMIT"
            | "LEVEL_TOO_LARGE" => EXIT_INFEASIBLE,
            "IO_ERROR" | "NOT_FOUND" | "MALFORMED_URI" | "CORRUPT_ENTRY" => EXIT_IO,
            "UNKNOWN_LEVEL" => EXIT_USAGE,
            _ => EXIT_VALIDATION,
        };
        Failure::new(status, message)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let repo = Repository::locate(cli.repo.as_deref());
    match run(cli.command, &repo) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.status)
        }
    }
}

/// File contents, or the stored text when `arg` is a `has://` URI.
fn read_text(arg: &str, repo: &Repository) -> Result<String, Failure> {
    if arg.starts_with(SCHEME) {
        repo.resolve_str(arg).map_err(|e| Failure::coded(e.code(), e))
    } else {
        fs::read_to_string(arg).map_err(|e| Failure::new(EXIT_IO, format!("{arg}: {e}")))
    }
}

fn read<T: serde::de::DeserializeOwned>(arg: &str, kind: ModelKind, repo: &Repository) -> Result<T, Failure> {
    let text = read_text(arg, repo)?;
    parse_as(&text, kind).map_err(|e| Failure::coded(e.code(), format!("{arg}: {e}")))
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))
}

fn print_json<T: serde::Serialize>(value: &T) {
    print!("{}", to_json(value));
}

fn run(command: Command, repo: &Repository) -> Outcome {
    match command {
        Command::Validate { file, psm, catalog } => {
            let text = read_text(&file, repo)?;
            let doc = Document::parse(&text).map_err(|e| Failure::coded(e.code(), format!("{file}: {e}")))?;
            let report = match (&doc, psm, catalog) {
                (Document::Apm(m), Some(p), Some(c)) => {
                    let psm: ProductStructuralModel = read(&p, ModelKind::Psm, repo)?;
                    let catalog: ActionCatalog = read(&c, ModelKind::Catalog, repo)?;
                    validate_apm(m, &psm, &catalog)
                }
                (_, None, None) => validate_document(&doc),
                _ => return Err(Failure::new(EXIT_USAGE, "--psm and --catalog go together")),
            };
            print_json(&report);
            eprint!("{report}");
            if report.is_conformant() {
                Ok(())
            } else {
                Err(Failure::new(EXIT_VALIDATION, format!("{file} is not conformant")))
            }
        }
        Command::ImportBom { bom, liaisons, output } => {
            let bill: BillOfMaterials = read(&bom, ModelKind::Bom, repo)?;
            let list: Option<LiaisonList> = liaisons.map(|l| read(&l, ModelKind::Liaisons, repo)).transpose()?;
            let imported = import_bom(&bill, list.as_ref().map(|l| l.connectors.as_slice()))
                .map_err(|e| Failure::coded(e.code(), e))?;
            for w in &imported.warnings {
                eprintln!("warning {} [{}] {}", w.rule, w.element, w.message);
            }
            write(&output, &to_json(&imported.model))
        }
        Command::GenPi {
            psm,
            constraints,
            catalog,
            join_action,
            id,
            output,
        } => {
            let psm_arg = psm;
            let catalog_arg = catalog;
            let psm: ProductStructuralModel = read(&psm_arg, ModelKind::Psm, repo)?;
            let extra: ConstraintSet = match constraints {
                Some(c) => read(&c, ModelKind::Constraints, repo)?,
                None => ConstraintSet::default(),
            };
            let catalog: ActionCatalog = read(&catalog_arg, ModelKind::Catalog, repo)?;
            let template = Template {
                join: join_action.into(),
                model_id: id,
                ..Template::default()
            };
            let mut apm =
                generate_pi_apm(&psm, &extra, &catalog, &template).map_err(|e| Failure::coded(e.code(), e))?;
            // Models read from the repository are referenced by URI.
            if psm_arg.starts_with(SCHEME) {
                apm.product_ref = psm_arg;
            }
            if catalog_arg.starts_with(SCHEME) {
                apm.catalog_ref = catalog_arg;
            }
            write(&output, &to_json(&apm))
        }
        Command::Enumerate {
            apm,
            level,
            limit,
            count_only,
        } => {
            let apm: AssemblyProcessModel = read(&apm, ModelKind::ApmPi, repo)?;
            if count_only {
                let n = count_sequences(&apm, &level).map_err(|e| Failure::coded(e.code(), e))?;
                println!("{n}");
            } else {
                let e = enumerate_sequences(&apm, &level, limit).map_err(|e| Failure::coded(e.code(), e))?;
                print_json(&e);
            }
            Ok(())
        }
        Command::Lower {
            apm,
            platform,
            catalog,
            policy,
            output,
        } => {
            let apm: AssemblyProcessModel = read(&apm, ModelKind::ApmPi, repo)?;
            let platform: PlatformModel = read(&platform, ModelKind::Aspm, repo)?;
            let catalog: ActionCatalog = read(&catalog, ModelKind::Catalog, repo)?;
            let ps = lower(&apm, &platform, &catalog, policy.into()).map_err(|e| Failure::coded(e.code(), e))?;
            write(&output, &to_json(&ps))
        }
        Command::Simulate {
            apm_ps,
            platform,
            quantity,
            release,
            report,
            table,
        } => {
            let ps: AssemblyProcessModel = read(&apm_ps, ModelKind::ApmPs, repo)?;
            let platform: PlatformModel = read(&platform, ModelKind::Aspm, repo)?;
            let config = SimConfig {
                quantity,
                inter_unit_release: release,
                ..SimConfig::default()
            };
            let r = simulate(&ps, &platform, &config).map_err(|e| Failure::coded(e.code(), e))?;
            if let Some(path) = report {
                write(&path, &to_json(&r))?;
            }
            if table {
                print!("{}", r.to_table());
            } else {
                print_json(&r);
            }
            Ok(())
        }
        Command::Compare { reports, json } => {
            let mut labelled = Vec::new();
            for arg in &reports {
                let r: SimReport = read(arg, ModelKind::SimReport, repo)?;
                let label = Path::new(arg)
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or(arg)
                    .to_owned();
                labelled.push((label, r));
            }
            let rows = compare_scenarios(&labelled);
            if json {
                print_json(&rows);
            } else {
                print!("{}", comparison_table(&rows));
            }
            Ok(())
        }
        Command::Repo { command } => match command {
            RepoCommand::Store { file, name } => {
                let text = read_text(&file.to_string_lossy(), repo)?;
                let uri = repo.store(&text, name.as_deref()).map_err(|e| Failure::coded(e.code(), e))?;
                println!("{uri}");
                Ok(())
            }
            RepoCommand::Resolve { uri } => {
                let text = repo.resolve_str(&uri).map_err(|e| Failure::coded(e.code(), e))?;
                print!("{text}");
                Ok(())
            }
            RepoCommand::List { kind } => {
                let kind = kind
                    .map(|k| k.parse::<ModelKind>())
                    .transpose()
                    .map_err(|e| Failure::new(EXIT_USAGE, e))?;
                for e in repo.list(kind).map_err(|e| Failure::coded(e.code(), e))? {
                    println!("{} {} {}", e.uri, e.content_digest, e.stored_at);
                }
                Ok(())
            }
        },
        Command::Job { command } => match command {
            JobCommand::Add { file } => {
                let text = read_text(&file.to_string_lossy(), repo)?;
                let _: AssemblyJob = parse_as(&text, ModelKind::Job).map_err(|e| Failure::coded(e.code(), e))?;
                let uri = repo.store(&text, None).map_err(|e| Failure::coded(e.code(), e))?;
                println!("{uri}");
                Ok(())
            }
            JobCommand::Run { job, platform, policy } => {
                let job_uri = ModelUri::parse(&job).map_err(|e| Failure::coded(e.code(), e))?;
                let platform = ModelUri::parse(&platform).map_err(|e| Failure::coded(e.code(), e))?;
                let job: AssemblyJob = repo.load(&job_uri).map_err(|e| Failure::coded(e.code(), e))?;
                let out = run_job(repo, &job, &platform, policy.into()).map_err(|e| Failure::coded(e.code(), e))?;
                print_json(&out);
                Ok(())
            }
        },
        Command::Deploy {
            apm_ps,
            platform,
            catalog,
            output,
        } => {
            let ps: AssemblyProcessModel = read(&apm_ps, ModelKind::ApmPs, repo)?;
            let platform: PlatformModel = read(&platform, ModelKind::Aspm, repo)?;
            let catalog: ActionCatalog = read(&catalog, ModelKind::Catalog, repo)?;
            let manifest = deploy(&ps, &platform, &catalog, &output).map_err(|e| Failure::coded(e.code(), e))?;
            print_json(&manifest);
            Ok(())
        }
    }
}
