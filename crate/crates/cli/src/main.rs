//! `sesh`: index a corpus, rank sessions, evaluate runs and build reports.
//!
//! Exit codes: 0 on success, 1 when evaluation finds a mismatch or a
//! `--strict` run could not rank every session, 2 on unreadable or invalid
//! input. `SESH_LOG` sets the log filter (default `warn`).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use sesh::experiment::{self, Manifest};
use sesh::metrics::{evaluate_run, EvalOptions};
use sesh::oracles::GridConfig;
use sesh::pipeline::PipelineConfig;
use sesh::querymodels::{AnchorTexts, Method};
use sesh::ranker::{read_run, retrieve, write_run, RetrievalConfig};
use sesh::report::{build_report, Progressing, RunInput};
use sesh::sessionlog::{read_qrels, read_sessions, SessionMapping};
use sesh::synthetic::{generate, SyntheticConfig, DEFAULT_SEED};
use sesh::textindex::{build_index, read_corpus, save_index, SpamScores, TokenizerConfig, DEFAULT_SPAM_THRESHOLD};
use sesh::lmscore::{SmoothingConfig, DEFAULT_MU};

#[derive(Parser)]
#[command(name = "sesh", version, about = "Lexical query modeling testbed for session search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index file from a corpus.
    Index(IndexArgs),
    /// First-pass retrieval by the current query; writes a run file.
    Retrieve(RetrieveArgs),
    /// First pass plus re-ranking with a method; writes run, eval and aggregate files.
    #[command(alias = "rerank")]
    Run(RunArgs),
    /// `run` with the ground-truth oracle.
    Oracle(RunArgs),
    /// `run` with the ideal term-weight grid search.
    GridSearch(RunArgs),
    /// NDCG@10 and MRR of a run file.
    Evaluate(EvaluateArgs),
    /// Compare runs: table2.csv, fig2_box.json, fig3_by_length.csv, fig4_progressing.csv.
    Report(ReportArgs),
    /// Write the seeded synthetic benchmark.
    Synth(SynthArgs),
}

#[derive(Args)]
struct CorpusArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    spam: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SPAM_THRESHOLD)]
    spam_threshold: u8,
    /// Drop English stopwords.
    #[arg(long)]
    stopwords: bool,
    /// Porter2 stemming.
    #[arg(long)]
    stem: bool,
}

impl CorpusArgs {
    fn tokenizer(&self) -> TokenizerConfig {
        TokenizerConfig {
            stopwords: self.stopwords,
            stem: self.stem,
        }
    }
}

#[derive(Args)]
struct IndexArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RetrieveArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long)]
    sessions: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MU)]
    mu: f64,
    #[arg(long, default_value_t = 2000)]
    first_pass_n: usize,
    #[arg(long, default_value = "first_pass")]
    tag: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Manifest JSON; other flags override its fields when given.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long)]
    sessions: Option<PathBuf>,
    #[arg(long)]
    qrels: Option<PathBuf>,
    #[arg(long)]
    mapping: Option<PathBuf>,
    #[arg(long)]
    anchors: Option<PathBuf>,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    first_pass_n: Option<usize>,
    #[arg(long)]
    grid_lo: Option<f64>,
    #[arg(long)]
    grid_hi: Option<f64>,
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long)]
    grid_max_terms: Option<usize>,
    #[arg(long)]
    grid_max_assignments: Option<u64>,
    #[arg(long)]
    grid_max_candidates: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    tag: Option<String>,
    /// Count judged sessions missing from the run as 0.
    #[arg(long)]
    missing_as_zero: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    #[arg(long)]
    mapping: Option<PathBuf>,
    #[arg(long)]
    missing_as_zero: bool,
    /// Per-session CSV destination.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// `label=path` (label defaults to the run tag); repeatable.
    #[arg(long = "run", required = true)]
    runs: Vec<String>,
    #[arg(long)]
    qrels: PathBuf,
    #[arg(long)]
    mapping: Option<PathBuf>,
    #[arg(long)]
    sessions: PathBuf,
    #[arg(long, default_value = "local")]
    edition: String,
    /// Add the published results table rows for context.
    #[arg(long)]
    reference: bool,
    /// Methods for the progressing-session breakdown (needs an index or corpus).
    #[arg(long, value_delimiter = ',')]
    progressing: Vec<Method>,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long)]
    anchors: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MU)]
    mu: f64,
    #[arg(long, default_value_t = 2000)]
    first_pass_n: usize,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Failure that maps to exit code 1.
#[derive(Debug)]
struct Mismatch(String);

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Mismatch {}

fn require(path: &Path, what: &str) -> Result<()> {
    if !path.exists() {
        bail!(sesh::Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, format!("{what} not found")),
        });
    }
    Ok(())
}

fn cmd_index(a: IndexArgs) -> Result<()> {
    let corpus_path = a.corpus.corpus.as_deref().ok_or_else(|| anyhow!("--corpus is required"))?;
    require(corpus_path, "corpus")?;
    let corpus = read_corpus(corpus_path)?;
    let spam = a.corpus.spam.as_deref().map(SpamScores::read).transpose()?;
    let (index, report) = build_index(corpus, spam.as_ref(), a.corpus.spam_threshold, a.corpus.tokenizer())?;
    save_index(&index, &a.out)?;
    let stats = index.stats();
    println!("documents\t{}", stats.num_docs);
    println!("terms\t{}", index.vocab().len());
    println!("tokens\t{}", stats.total_terms);
    println!("input documents\t{}", report.input_docs);
    println!("spam filtered\t{} (threshold {})", report.spam_filtered, a.corpus.spam_threshold);
    Ok(())
}

fn load_index_from(index: Option<&Path>, corpus: &CorpusArgs) -> Result<sesh::textindex::Index> {
    let mut m = Manifest::new(PathBuf::new(), Method::TfLast, PathBuf::new());
    m.index = index.map(Path::to_path_buf);
    m.corpus = corpus.corpus.clone();
    m.spam = corpus.spam.clone();
    m.spam_threshold = corpus.spam_threshold;
    m.tokenizer = corpus.tokenizer();
    if m.index.is_none() && m.corpus.is_none() {
        bail!(sesh::Error::InvalidConfig("--index or --corpus is required".into()));
    }
    for p in m.index.iter().chain(&m.corpus) {
        require(p, if m.index.is_some() { "index" } else { "corpus" })?;
    }
    Ok(experiment::load_or_build_index(&m)?)
}

fn cmd_retrieve(a: RetrieveArgs) -> Result<()> {
    let index = load_index_from(a.index.as_deref(), &a.corpus)?;
    require(&a.sessions, "session log")?;
    let log = read_sessions(&a.sessions, index.tokenizer())?;
    let cfg = RetrievalConfig {
        smoothing: SmoothingConfig::new(a.mu)?,
        first_pass_n: a.first_pass_n,
    };
    let rankings = log
        .sessions
        .iter()
        .map(|s| retrieve(&index, s, &cfg))
        .collect::<sesh::Result<Vec<_>>>()?;
    std::fs::write(&a.out, write_run(&rankings, &a.tag)?).with_context(|| format!("writing {}", a.out.display()))?;
    info!("wrote {} sessions to {}", rankings.len(), a.out.display());
    Ok(())
}

fn manifest_from(a: RunArgs, forced: Option<Method>) -> Result<Manifest> {
    let mut m = match &a.manifest {
        Some(p) => {
            require(p, "manifest")?;
            Manifest::read(p)?
        }
        None => {
            let sessions = a.sessions.clone().ok_or_else(|| anyhow!("--sessions is required"))?;
            let method = forced.or(a.method).ok_or_else(|| anyhow!("--method is required"))?;
            let out = a.out.clone().ok_or_else(|| anyhow!("--out is required"))?;
            Manifest::new(sessions, method, out)
        }
    };
    macro_rules! set {
        ($field:expr, $val:expr) => {
            if let Some(v) = $val {
                $field = v;
            }
        };
    }
    set!(m.method, forced.or(a.method));
    set!(m.out, a.out);
    set!(m.sessions, a.sessions);
    m.corpus = a.corpus.corpus.or(m.corpus);
    m.spam = a.corpus.spam.or(m.spam);
    if a.corpus.spam_threshold != DEFAULT_SPAM_THRESHOLD {
        m.spam_threshold = a.corpus.spam_threshold;
    }
    m.tokenizer.stopwords |= a.corpus.stopwords;
    m.tokenizer.stem |= a.corpus.stem;
    m.index = a.index.or(m.index);
    m.qrels = a.qrels.or(m.qrels);
    m.mapping = a.mapping.or(m.mapping);
    m.anchors = a.anchors.or(m.anchors);
    m.tag = a.tag.or(m.tag);
    m.threads = a.threads.or(m.threads);
    m.strict |= a.strict;
    m.missing_as_zero |= a.missing_as_zero;
    if let Some(mu) = a.mu {
        m.pipeline.retrieval.smoothing = SmoothingConfig::new(mu)?;
    }
    set!(m.pipeline.retrieval.first_pass_n, a.first_pass_n);
    let g: &mut GridConfig = &mut m.pipeline.grid;
    set!(g.lo, a.grid_lo);
    set!(g.hi, a.grid_hi);
    set!(g.step, a.grid_step);
    set!(g.max_unique_terms, a.grid_max_terms);
    set!(g.max_assignments, a.grid_max_assignments);
    if a.grid_max_candidates.is_some() {
        g.max_candidates = a.grid_max_candidates;
    }
    Ok(m)
}

fn cmd_run(a: RunArgs, forced: Option<Method>) -> Result<()> {
    let m = manifest_from(a, forced)?;
    let out = experiment::run_experiment(&m)?;
    let agg = &out.aggregate;
    println!("method\t{}", agg.method);
    println!("sessions ranked\t{} of {}", agg.sessions_ranked, agg.sessions_in_log);
    println!("sessions failed\t{}", agg.failures.len());
    println!("sessions skipped in log\t{}", agg.log_skipped.len());
    if let Some(e) = &agg.eval {
        println!("evaluated\t{}", e.evaluated);
        println!("NDCG@10\t{}", e.mean_ndcg_at_10.map_or("NA".into(), |v| format!("{v:.4}")));
        println!("MRR\t{}", e.mean_mrr.map_or("NA".into(), |v| format!("{v:.4}")));
    }
    println!("output\t{}", m.out.display());
    if m.strict && out.has_failures() {
        bail!(Mismatch(format!(
            "{} sessions failed and {} were skipped in the log under --strict",
            agg.failures.len(),
            agg.log_skipped.len()
        )));
    }
    Ok(())
}

fn read_mapping(p: Option<&Path>) -> Result<Option<SessionMapping>> {
    p.map(|p| {
        require(p, "mapping")?;
        Ok(SessionMapping::read(p)?)
    })
    .transpose()
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    require(&a.run, "run file")?;
    require(&a.qrels, "qrels")?;
    let run = read_run(&std::fs::read_to_string(&a.run).with_context(|| format!("reading {}", a.run.display()))?)?;
    let mapping = read_mapping(a.mapping.as_deref())?;
    let (qrels, _) = read_qrels(&a.qrels, mapping.as_ref())?;
    let rep = evaluate_run(
        &run.rankings,
        &qrels,
        EvalOptions {
            missing_as_zero: a.missing_as_zero,
        },
    );
    if let Some(out) = &a.out {
        std::fs::write(out, rep.to_csv()).with_context(|| format!("writing {}", out.display()))?;
    }
    println!("evaluated\t{}", rep.evaluated());
    println!("NDCG@10\t{}", rep.mean_ndcg_at_10.map_or("NA".into(), |v| format!("{v:.4}")));
    println!("MRR\t{}", rep.mean_mrr.map_or("NA".into(), |v| format!("{v:.4}")));
    println!("excluded (no relevant)\t{}", rep.excluded.len());
    println!("missing from run\t{}", rep.missing.len());
    if !rep.unknown.is_empty() {
        bail!(Mismatch(format!(
            "run has {} sessions without judgments: {}",
            rep.unknown.len(),
            rep.unknown.join(" ")
        )));
    }
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    require(&a.qrels, "qrels")?;
    require(&a.sessions, "session log")?;
    let mapping = read_mapping(a.mapping.as_deref())?;
    let (qrels, _) = read_qrels(&a.qrels, mapping.as_ref())?;
    let mut runs = Vec::new();
    for spec in &a.runs {
        let (label, path) = match spec.split_once('=') {
            Some((l, p)) => (Some(l.to_string()), PathBuf::from(p)),
            None => (None, PathBuf::from(spec)),
        };
        require(&path, "run file")?;
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let run = read_run(&text)?;
        let label = label.or(run.tag).unwrap_or_else(|| path.display().to_string());
        runs.push(RunInput {
            label,
            edition: a.edition.clone(),
            rankings: run.rankings,
        });
    }
    let pool = experiment::thread_pool(a.threads)?;
    let index = if a.progressing.is_empty() {
        None
    } else {
        Some(load_index_from(a.index.as_deref(), &a.corpus)?)
    };
    let tokenizer = index
        .as_ref()
        .map(|i| i.tokenizer().clone())
        .unwrap_or_else(|| sesh::textindex::Tokenizer::new(a.corpus.tokenizer()));
    let sessions = read_sessions(&a.sessions, &tokenizer)?.sessions;
    let anchors = a.anchors.as_deref().map(AnchorTexts::read).transpose()?;
    let pipeline = PipelineConfig {
        retrieval: RetrievalConfig {
            smoothing: SmoothingConfig::new(a.mu)?,
            first_pass_n: a.first_pass_n,
        },
        ..Default::default()
    };
    let progressing = index.as_ref().map(|index| Progressing {
        index,
        methods: &a.progressing,
        pipeline: &pipeline,
        anchors: anchors.as_ref(),
    });
    let out = pool.install(|| build_report(&runs, &qrels, &sessions, a.reference, progressing.as_ref()))?;
    experiment::write_outputs(&a.out, &out.files)?;
    for r in &out.summary.runs {
        println!(
            "{}\t{}\tNDCG@10 {}\tMRR {}",
            r.label,
            r.edition,
            r.mean_ndcg_at_10.map_or("NA".into(), |v| format!("{v:.4}")),
            r.mean_mrr.map_or("NA".into(), |v| format!("{v:.4}"))
        );
    }
    if !out.summary.mismatched_sessions.is_empty() {
        bail!(Mismatch(format!(
            "runs cover different sessions: {}",
            out.summary.mismatched_sessions.join(" ")
        )));
    }
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let data = generate(&SyntheticConfig {
        seed: a.seed,
        ..Default::default()
    })?;
    data.write_to(&a.out)?;
    println!("documents\t{}", data.corpus.len());
    println!("sessions\t{}", data.sessions.len());
    println!("output\t{}", a.out.display());
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Mismatch>().is_some() {
        return 1;
    }
    match err.downcast_ref::<sesh::Error>() {
        Some(e) if !e.is_input_error() && !matches!(e, sesh::Error::InvalidConfig(_) | sesh::Error::InvalidTag(_)) => 1,
        _ => 2,
    }
}

/// The error chain without causes already quoted by their parent.
fn describe(err: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in err.chain() {
        let part = cause.to_string();
        if !msg.ends_with(&part) {
            if !msg.is_empty() {
                msg.push_str(": ");
            }
            msg.push_str(&part);
        }
    }
    msg
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("SESH_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Index(a) => cmd_index(a),
        Command::Retrieve(a) => cmd_retrieve(a),
        Command::Run(a) => cmd_run(a, None),
        Command::Oracle(a) => cmd_run(a, Some(Method::Oracle)),
        Command::GridSearch(a) => cmd_run(a, Some(Method::Grid)),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Report(a) => cmd_report(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
