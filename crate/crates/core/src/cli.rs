//! Command-line front end. Exit codes: 0 success, 2 usage or I/O error,
//! 3 backend failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::audit::{render_report, scan_corpus_with, CategoryMap, ReportFormat};
use crate::corpus::{list_apps, load_app, LoadedApp};
use crate::embedding::EmbeddingTable;
use crate::exec::{with_jobs, Exec};
use crate::gateway::{BackendConfig, Gateway, MockScript};
use crate::hierarchy::{find_text_inputs, fingerprint, has_hint, NodePath};
use crate::metrics::{evaluate_corpus_with, EvalPair, MetricConfig};
use crate::pipeline::{repair_corpus, Collaborators, GenerateOptions, PageJob, PipelineError, TranscriptEntry};
use crate::prompt::Verdict;
use crate::sim::{load_sim_app, SimAction};
use crate::store::{mine_examples, CorpusEntry, ExampleStore, DEFAULT_K};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Backend(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Backend(_) => EXIT_BACKEND,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Backend(m) => m,
        }
    }
}

type CliResult = Result<(), CliError>;

fn usage<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Usage(format!("{context}: {e}"))
}

#[derive(Debug, Parser)]
#[command(name = "hintsmith", version, about = "Generate and evaluate hint-texts for Android text inputs")]
pub struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report how many apps and pages lack hint-texts.
    Audit(AuditArgs),
    /// Build or extend the example store from hinted inputs.
    Mine(MineArgs),
    /// Generate hint-texts for every hint-less input of a corpus.
    Generate(GenerateArgs),
    /// Score generated hints against references.
    Evaluate(EvaluateArgs),
    /// Replay an action trace against a simulated app.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Structured,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Two-column app-id / category file.
    #[arg(long)]
    categories: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct MineArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Store file; created when missing, extended otherwise.
    #[arg(long)]
    store: PathBuf,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    /// Example store to retrieve from; missing file means empty.
    #[arg(long)]
    store: Option<PathBuf>,
    /// Where to save the store grown by this run.
    #[arg(long)]
    store_out: Option<PathBuf>,
    #[command(flatten)]
    backend: BackendArgs,
    /// Skip device validation; verdicts become unvalidated.
    #[arg(long)]
    dry_run: bool,
    #[arg(long)]
    no_feedback: bool,
    #[arg(long)]
    no_icl: bool,
    /// Number of retrieved examples; 0 disables them.
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = crate::pipeline::DEFAULT_MAX_ROUNDS)]
    max_rounds: u32,
    #[arg(long)]
    jobs: Option<usize>,
    /// Patch file (JSON lines).
    #[arg(long)]
    patches: PathBuf,
    /// Per-input transcript (JSON lines).
    #[arg(long)]
    transcript: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BackendArgs {
    /// Scripted mock backend definition.
    #[arg(long, conflicts_with = "endpoint")]
    mock_script: Option<PathBuf>,
    /// Chat-completions URL.
    #[arg(long, requires = "model")]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long, default_value = "OPENAI_API_KEY")]
    api_key_env: String,
    #[arg(long, default_value_t = 30)]
    timeout_secs: u64,
    #[arg(long, default_value_t = 2)]
    max_retries: u32,
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    #[arg(long, default_value_t = 4)]
    max_in_flight: usize,
    /// Log every prompt and response here.
    #[arg(long)]
    llm_trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// JSON lines of `{"candidate": .., "reference": ..}`.
    #[arg(long, conflicts_with_all = ["candidates", "references"])]
    pairs: Option<PathBuf>,
    /// One hint per line, or patch-style JSON lines.
    #[arg(long, requires = "references")]
    candidates: Option<PathBuf>,
    #[arg(long, requires = "candidates")]
    references: Option<PathBuf>,
    /// Structured report destination.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    spec: PathBuf,
    /// JSON lines of actions.
    #[arg(long)]
    trace: PathBuf,
    /// Per-step history (JSON lines).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_out(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => fs::write(p, text).map_err(usage(p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> CliResult {
    let mut text = String::new();
    for row in rows {
        text.push_str(&serde_json::to_string(row).expect("rows serialize"));
        text.push('\n');
    }
    fs::write(path, text).map_err(usage(path.display()))
}

fn exec_for(jobs: Option<usize>) -> Exec {
    if jobs == Some(1) {
        Exec::Sequential
    } else {
        Exec::default()
    }
}

fn cmd_audit(a: &AuditArgs) -> CliResult {
    let categories = match &a.categories {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(usage(p.display()))?;
            let (map, warnings) = CategoryMap::parse(&text).map_err(usage(p.display()))?;
            for w in warnings {
                log::warn!("{}: {w}", p.display());
            }
            map
        }
        None => CategoryMap::default(),
    };
    let report = with_jobs(a.jobs, || scan_corpus_with(&a.corpus, &categories, exec_for(a.jobs)))
        .map_err(usage(a.corpus.display()))?;
    let format = match a.format {
        FormatArg::Text => ReportFormat::Text,
        FormatArg::Structured => ReportFormat::Structured,
    };
    write_out(a.out.as_deref(), &render_report(&report, format))
}

fn load_corpus(root: &Path, with_sim: bool) -> Result<Vec<LoadedApp>, CliError> {
    let dirs = list_apps(root).map_err(usage(root.display()))?;
    let mut apps = Vec::with_capacity(dirs.len());
    for d in &dirs {
        let app = load_app(d, with_sim).map_err(CliError::Usage)?;
        for (p, e) in &app.skipped {
            log::warn!("skipped {}: {e}", p.display());
        }
        apps.push(app);
    }
    Ok(apps)
}

fn cmd_mine(a: &MineArgs) -> CliResult {
    let apps = load_corpus(&a.corpus, false)?;
    let entries: Vec<CorpusEntry<'_>> = apps
        .iter()
        .flat_map(|app| app.pages.iter().map(move |p| (p, app.manifest.as_ref())))
        .collect();
    let mined = with_jobs(a.jobs, || mine_examples(&entries, exec_for(a.jobs)));
    let loaded = ExampleStore::load_path(&a.store).map_err(usage(a.store.display()))?;
    for w in &loaded.warnings {
        log::warn!("{}: {w}", a.store.display());
    }
    let mut store = loaded.store;
    let before = store.len();
    for rec in mined {
        store.add(rec).map_err(usage("mined record"))?;
    }
    store.save_path(&a.store).map_err(usage(a.store.display()))?;
    println!("added {} examples, store now holds {}", store.len() - before, store.len());
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct TranscriptRow {
    source: String,
    node_path: NodePath,
    input_label: String,
    verdict: Verdict,
    rounds_used: u32,
    backend_calls: u32,
    rounds: Vec<TranscriptEntry>,
}

fn build_gateway(b: &BackendArgs) -> Result<Gateway, CliError> {
    let (cfg, script) = match (&b.mock_script, &b.endpoint) {
        (Some(p), _) => {
            let script = MockScript::load_path(p).map_err(usage(p.display()))?;
            (BackendConfig::mock(), Some(script))
        }
        (None, Some(url)) => {
            let model = b.model.clone().unwrap_or_default();
            (BackendConfig::http(url.clone(), model), None)
        }
        (None, None) => return Err(CliError::Usage("generate needs --mock-script or --endpoint".into())),
    };
    let cfg = BackendConfig {
        timeout: Duration::from_secs(b.timeout_secs),
        max_retries: b.max_retries,
        temperature: b.temperature,
        api_key_env: Some(b.api_key_env.clone()),
        max_in_flight: b.max_in_flight,
        trace_path: b.llm_trace.clone(),
        ..cfg
    };
    Gateway::from_config(&cfg, script).map_err(usage("backend"))
}

fn cmd_generate(a: &GenerateArgs) -> CliResult {
    let table = Arc::new(EmbeddingTable::load_path(&a.embeddings).map_err(usage(a.embeddings.display()))?);
    let mut store = match &a.store {
        Some(p) => {
            let loaded = ExampleStore::load_path(p).map_err(usage(p.display()))?;
            for w in &loaded.warnings {
                log::warn!("{}: {w}", p.display());
            }
            loaded.store
        }
        None => ExampleStore::new(),
    };
    store.attach_embeddings(Arc::clone(&table));
    let gateway = build_gateway(&a.backend)?;
    let apps = load_corpus(&a.corpus, !a.dry_run)?;

    let mut jobs = Vec::new();
    for app in &apps {
        for page in &app.pages {
            let needs_hint = find_text_inputs(page).iter().any(|(_, n)| !has_hint(n));
            if needs_hint && !a.dry_run && app.sim.is_none() {
                return Err(CliError::Usage(format!(
                    "app {} has no sim.json; use --dry-run to skip validation",
                    app.app_id
                )));
            }
            if needs_hint {
                jobs.push(PageJob {
                    page,
                    manifest: app.manifest.as_ref(),
                    sim: app.sim.clone(),
                });
            }
        }
    }

    let opts = GenerateOptions {
        max_rounds: a.max_rounds,
        use_icl: !a.no_icl && a.k > 0,
        use_feedback: !a.no_feedback,
        k: a.k,
        ..Default::default()
    };
    let store = RwLock::new(store);
    let collab = Collaborators {
        store: &store,
        table: &table,
        gateway: &gateway,
    };
    let results = with_jobs(a.jobs, || repair_corpus(&jobs, collab, &opts, exec_for(a.jobs)));

    let mut patches = Vec::new();
    let mut transcript = Vec::new();
    let mut counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    for (job, result) in jobs.iter().zip(results) {
        let repair = match result {
            Ok(r) => r,
            Err(e @ (PipelineError::Backend(_) | PipelineError::UnparseableAfterReminder)) => {
                return Err(CliError::Backend(format!("{}: {e}", job.page.source_path)));
            }
            Err(e) => {
                log::warn!("skipped {}: {e}", job.page.source_path);
                *counts.entry("skipped_pages").or_default() += 1;
                continue;
            }
        };
        for (patch, outcome) in repair.patches.into_iter().zip(repair.outcomes) {
            let key = match patch.verdict {
                Verdict::Pass => "pass",
                Verdict::FailNoTransition => "fail",
                Verdict::Unvalidated => "unvalidated",
            };
            *counts.entry(key).or_default() += 1;
            transcript.push(TranscriptRow {
                source: patch.source.clone(),
                node_path: patch.node_path.clone(),
                input_label: outcome.bundle.input.input_label.clone(),
                verdict: patch.verdict,
                rounds_used: outcome.rounds_used,
                backend_calls: outcome.backend_calls,
                rounds: outcome.transcript,
            });
            patches.push(patch);
        }
    }

    write_jsonl(&a.patches, &patches)?;
    if let Some(p) = &a.transcript {
        write_jsonl(p, &transcript)?;
    }
    if let Some(p) = &a.store_out {
        let store = store.read().unwrap_or_else(|e| e.into_inner());
        store.save_path(p).map_err(usage(p.display()))?;
    }
    let summary: Vec<String> = counts.iter().map(|(k, v)| format!("{k} {v}")).collect();
    println!("patches {} ({})", patches.len(), summary.join(", "));
    Ok(())
}

#[derive(Debug, Deserialize)]
struct KeyedHint {
    source: String,
    node_path: NodePath,
    hint_text: String,
}

enum HintFile {
    Lines(Vec<String>),
    Keyed(Vec<KeyedHint>),
}

fn read_hint_file(path: &Path) -> Result<HintFile, CliError> {
    let text = fs::read_to_string(path).map_err(usage(path.display()))?;
    let lines: Vec<&str> = text.lines().collect();
    let keyed: Option<Vec<KeyedHint>> = lines
        .iter()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).ok())
        .collect();
    match keyed {
        Some(rows) if !rows.is_empty() => Ok(HintFile::Keyed(rows)),
        _ => Ok(HintFile::Lines(lines.into_iter().map(String::from).collect())),
    }
}

fn join_pairs(cand_path: &Path, ref_path: &Path) -> Result<Vec<EvalPair>, CliError> {
    match (read_hint_file(cand_path)?, read_hint_file(ref_path)?) {
        (HintFile::Lines(c), HintFile::Lines(r)) => {
            if c.len() != r.len() {
                return Err(CliError::Usage(format!(
                    "{} has {} lines but {} has {}",
                    cand_path.display(),
                    c.len(),
                    ref_path.display(),
                    r.len()
                )));
            }
            Ok(c.into_iter()
                .zip(r)
                .map(|(candidate, reference)| EvalPair { candidate, reference })
                .collect())
        }
        (HintFile::Keyed(c), HintFile::Keyed(r)) => {
            let refs: BTreeMap<(String, NodePath), String> =
                r.into_iter().map(|k| ((k.source, k.node_path), k.hint_text)).collect();
            if refs.len() != c.len() {
                return Err(CliError::Usage(format!("{} candidates but {} references", c.len(), refs.len())));
            }
            c.into_iter()
                .map(|k| {
                    let reference = refs.get(&(k.source.clone(), k.node_path.clone())).ok_or_else(|| {
                        CliError::Usage(format!("no reference for {} {}", k.source, k.node_path))
                    })?;
                    Ok(EvalPair {
                        candidate: k.hint_text,
                        reference: reference.clone(),
                    })
                })
                .collect()
        }
        _ => Err(CliError::Usage("candidates and references must use the same file format".into())),
    }
}

fn cmd_evaluate(a: &EvaluateArgs) -> CliResult {
    let pairs = match (&a.pairs, &a.candidates, &a.references) {
        (Some(p), _, _) => {
            let text = fs::read_to_string(p).map_err(usage(p.display()))?;
            text.lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(i, l)| serde_json::from_str(l).map_err(usage(format!("{} line {}", p.display(), i + 1))))
                .collect::<Result<Vec<EvalPair>, _>>()?
        }
        (None, Some(c), Some(r)) => join_pairs(c, r)?,
        _ => return Err(CliError::Usage("evaluate needs --pairs or --candidates with --references".into())),
    };
    let report = with_jobs(a.jobs, || evaluate_corpus_with(&pairs, &MetricConfig::default(), exec_for(a.jobs)))
        .map_err(usage("evaluate"))?;
    if let Some(p) = &a.out {
        fs::write(p, report.to_json()).map_err(usage(p.display()))?;
    }
    print!("{}", report.to_table());
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> CliResult {
    let spec = fs::read_to_string(&a.spec).map_err(usage(a.spec.display()))?;
    let app = load_sim_app(&spec).map_err(usage(a.spec.display()))?;
    let trace = fs::read_to_string(&a.trace).map_err(usage(a.trace.display()))?;
    let mut state = app.start();
    for (i, line) in trace.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let step = i + 1;
        let action: SimAction = serde_json::from_str(line).map_err(usage(format!("step {step}")))?;
        app.apply(&mut state, &action).map_err(usage(format!("step {step}")))?;
    }
    if let Some(p) = &a.out {
        write_jsonl(p, &state.history)?;
    }
    println!("steps {}", state.history.len());
    println!("final activity {}", app.screen(&state).activity_name);
    println!("fingerprint {}", fingerprint(&app.render(&state)));
    Ok(())
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    init_logging(cli.verbose);
    let result = match &cli.command {
        Command::Audit(a) => cmd_audit(a),
        Command::Mine(a) => cmd_mine(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    let _ = std::io::stdout().flush();
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

pub fn main() -> ! {
    std::process::exit(run(std::env::args_os()))
}
