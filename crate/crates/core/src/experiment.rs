//! Reproducible experiment runs driven by a manifest.
//!
//! A run loads (or builds) the index, ranks every session with one method,
//! and writes `run.txt`, `manifest.json` and, given qrels, `eval.csv` and
//! `aggregate.json`. Grid runs add `grid_results.jsonl` and `table4.csv`.
//! Outputs depend only on the inputs, never on the thread count.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{evaluate_run, mean, EvalOptions, EvalReport};
use crate::oracles::GridOutcome;
use crate::pipeline::{grid_session, rank_session, GridReport, PipelineConfig};
use crate::querymodels::{AnchorTexts, Method};
use crate::ranker::{write_run, Ranking};
use crate::sessionlog::{read_qrels, read_sessions, Qrels, Session, SessionMapping, SkippedSession};
use crate::textindex::{build_index, load_index, read_corpus, Index, SpamScores, TokenizerConfig, DEFAULT_SPAM_THRESHOLD};

pub const RUN_FILE: &str = "run.txt";
pub const EVAL_FILE: &str = "eval.csv";
pub const AGGREGATE_FILE: &str = "aggregate.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const GRID_FILE: &str = "grid_results.jsonl";
pub const TABLE4_FILE: &str = "table4.csv";

fn default_spam_threshold() -> u8 {
    DEFAULT_SPAM_THRESHOLD
}

/// Everything needed to reproduce a run. Relative paths resolve against the
/// working directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    /// Built into an index when `index` is absent.
    #[serde(default)]
    pub corpus: Option<PathBuf>,
    #[serde(default)]
    pub spam: Option<PathBuf>,
    #[serde(default = "default_spam_threshold")]
    pub spam_threshold: u8,
    #[serde(default)]
    pub tokenizer: TokenizerConfig,
    #[serde(default)]
    pub index: Option<PathBuf>,
    pub sessions: PathBuf,
    #[serde(default)]
    pub qrels: Option<PathBuf>,
    #[serde(default)]
    pub mapping: Option<PathBuf>,
    #[serde(default)]
    pub anchors: Option<PathBuf>,
    pub method: Method,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    /// Worker threads; `None` uses every core. Does not affect outputs.
    #[serde(default)]
    pub threads: Option<usize>,
    pub out: PathBuf,
    #[serde(default)]
    pub strict: bool,
    /// Run tag; defaults to the method name.
    #[serde(default)]
    pub tag: Option<String>,
    #[serde(default)]
    pub missing_as_zero: bool,
}

impl Manifest {
    pub fn new(sessions: PathBuf, method: Method, out: PathBuf) -> Self {
        Manifest {
            corpus: None,
            spam: None,
            spam_threshold: DEFAULT_SPAM_THRESHOLD,
            tokenizer: TokenizerConfig::default(),
            index: None,
            sessions,
            qrels: None,
            mapping: None,
            anchors: None,
            method,
            pipeline: PipelineConfig::default(),
            threads: None,
            out,
            strict: false,
            tag: None,
            missing_as_zero: false,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn tag(&self) -> String {
        self.tag.clone().unwrap_or_else(|| self.method.name().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        self.pipeline.validate()?;
        if self.index.is_none() && self.corpus.is_none() {
            return Err(Error::InvalidConfig("manifest needs an index or a corpus".into()));
        }
        if matches!(self.method, Method::Oracle | Method::Grid) && self.qrels.is_none() {
            return Err(Error::InvalidConfig(format!(
                "method {} needs qrels",
                self.method
            )));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("threads must be positive".into()));
        }
        let tag = self.tag();
        if tag.is_empty() || tag.chars().any(char::is_whitespace) {
            return Err(Error::InvalidTag(tag));
        }
        let files = [
            Some(&self.sessions),
            self.corpus.as_ref(),
            self.spam.as_ref(),
            self.index.as_ref(),
            self.qrels.as_ref(),
            self.mapping.as_ref(),
            self.anchors.as_ref(),
        ];
        for p in files.into_iter().flatten() {
            if !p.exists() {
                return Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "not found"),
                ));
            }
        }
        Ok(())
    }
}

/// Loaded inputs shared by runs and reports.
pub struct Inputs {
    pub index: Index,
    pub sessions: Vec<Session>,
    pub log_skipped: Vec<SkippedSession>,
    pub qrels: Option<Qrels>,
    pub anchors: Option<AnchorTexts>,
}

pub fn load_or_build_index(m: &Manifest) -> Result<Index> {
    if let Some(p) = &m.index {
        return load_index(p);
    }
    let corpus_path = m.corpus.as_ref().expect("validated");
    let corpus = read_corpus(corpus_path)?;
    let spam = m.spam.as_deref().map(SpamScores::read).transpose()?;
    let (index, report) = build_index(corpus, spam.as_ref(), m.spam_threshold, m.tokenizer)?;
    info!(
        "indexed {} of {} documents ({} spam filtered)",
        report.indexed, report.input_docs, report.spam_filtered
    );
    Ok(index)
}

pub fn load_inputs(m: &Manifest) -> Result<Inputs> {
    m.validate()?;
    let index = load_or_build_index(m)?;
    let log = read_sessions(&m.sessions, index.tokenizer())?;
    for s in &log.skipped {
        warn!("session {} skipped while parsing: {}", s.session_id, s.reason);
    }
    let mapping = m.mapping.as_deref().map(SessionMapping::read).transpose()?;
    let qrels = m
        .qrels
        .as_deref()
        .map(|p| read_qrels(p, mapping.as_ref()).map(|(q, _)| q))
        .transpose()?;
    let anchors = m.anchors.as_deref().map(AnchorTexts::read).transpose()?;
    Ok(Inputs {
        index,
        sessions: log.sessions,
        log_skipped: log.skipped,
        qrels,
        anchors,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionFailure {
    pub session_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: Method,
    pub tag: String,
    pub sessions_in_log: usize,
    pub sessions_ranked: usize,
    pub failures: Vec<SessionFailure>,
    pub log_skipped: Vec<SessionFailure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval: Option<EvalSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub evaluated: usize,
    pub mean_ndcg_at_10: Option<f64>,
    pub mean_mrr: Option<f64>,
    pub excluded: Vec<String>,
    pub unknown: Vec<String>,
    pub missing: Vec<String>,
    pub missing_as_zero: bool,
}

impl From<&EvalReport> for EvalSummary {
    fn from(r: &EvalReport) -> Self {
        EvalSummary {
            evaluated: r.evaluated(),
            mean_ndcg_at_10: r.mean_ndcg_at_10,
            mean_mrr: r.mean_mrr,
            excluded: r.excluded.clone(),
            unknown: r.unknown.clone(),
            missing: r.missing.clone(),
            missing_as_zero: r.missing_as_zero,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rankings: Vec<Ranking>,
    pub aggregate: Aggregate,
    pub eval: Option<EvalReport>,
    pub grid: Vec<GridReport>,
    /// File name → contents, in write order.
    pub files: Vec<(&'static str, String)>,
}

impl RunOutput {
    /// `--strict` failure: some session could not be ranked.
    pub fn has_failures(&self) -> bool {
        !self.aggregate.failures.is_empty() || !self.aggregate.log_skipped.is_empty()
    }
}

pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

enum Ranked {
    Ok(Ranking, Option<GridReport>),
    Failed(String, Option<GridReport>),
}

fn rank_all(m: &Manifest, inputs: &Inputs) -> Vec<Ranked> {
    let empty = Default::default();
    inputs
        .sessions
        .par_iter()
        .map(|s| {
            let judgments = inputs.qrels.as_ref().and_then(|q| q.for_session(&s.session_id));
            if m.method == Method::Grid {
                let j = judgments.unwrap_or(&empty);
                return match grid_session(&inputs.index, s, &m.pipeline, j) {
                    Ok((Some(r), rep)) => Ranked::Ok(r, Some(rep)),
                    Ok((None, rep)) => {
                        let reason = match &rep.outcome {
                            GridOutcome::Skipped { reason, .. } => {
                                serde_json::to_string(reason).unwrap_or_default()
                            }
                            GridOutcome::Searched(_) => unreachable!("searched grids rank"),
                        };
                        Ranked::Failed(format!("grid search skipped: {reason}"), Some(rep))
                    }
                    Err(e) => Ranked::Failed(e.to_string(), None),
                };
            }
            match rank_session(&inputs.index, s, m.method, &m.pipeline, inputs.anchors.as_ref(), judgments) {
                Ok(out) => Ranked::Ok(out.ranking, None),
                Err(e) => Ranked::Failed(e.to_string(), None),
            }
        })
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"))
}

fn table4(reports: &[GridReport]) -> String {
    let mut out = String::from("session_id,terms,candidates,assignments,tf_all_ndcg10,ideal_ndcg10,ground_truth_ndcg10\n");
    let mut cols: [Vec<f64>; 3] = Default::default();
    for r in reports {
        let GridOutcome::Searched(g) = &r.outcome else { continue };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.6},{}",
            g.session_id,
            g.terms.len(),
            g.candidates,
            g.assignments_evaluated,
            fmt_opt(r.tf_all_ndcg),
            g.best_ndcg,
            fmt_opt(r.ground_truth_ndcg)
        );
        if let (Some(tf), Some(gt)) = (r.tf_all_ndcg, r.ground_truth_ndcg) {
            cols[0].push(tf);
            cols[1].push(g.best_ndcg);
            cols[2].push(gt);
        }
    }
    let _ = writeln!(
        out,
        "mean,,,,{},{},{}",
        fmt_opt(mean(cols[0].iter().copied())),
        fmt_opt(mean(cols[1].iter().copied())),
        fmt_opt(mean(cols[2].iter().copied()))
    );
    out
}

/// Runs the manifest and returns the artifacts without touching the disk.
pub fn execute(m: &Manifest) -> Result<RunOutput> {
    let inputs = load_inputs(m)?;
    execute_with(m, &inputs)
}

pub fn execute_with(m: &Manifest, inputs: &Inputs) -> Result<RunOutput> {
    m.validate()?;
    let pool = thread_pool(m.threads)?;
    let ranked = pool.install(|| rank_all(m, inputs));

    let mut rankings = Vec::new();
    let mut failures = Vec::new();
    let mut grid = Vec::new();
    for (s, r) in inputs.sessions.iter().zip(ranked) {
        match r {
            Ranked::Ok(r, g) => {
                rankings.push(r);
                grid.extend(g);
            }
            Ranked::Failed(reason, g) => {
                warn!("session {}: {reason}", s.session_id);
                failures.push(SessionFailure {
                    session_id: s.session_id.clone(),
                    reason,
                });
                grid.extend(g);
            }
        }
    }

    let tag = m.tag();
    let mut files = vec![(RUN_FILE, write_run(&rankings, &tag)?)];
    let eval = inputs.qrels.as_ref().map(|q| {
        evaluate_run(
            &rankings,
            q,
            EvalOptions {
                missing_as_zero: m.missing_as_zero,
            },
        )
    });
    if let Some(e) = &eval {
        files.push((EVAL_FILE, e.to_csv()));
    }
    let aggregate = Aggregate {
        method: m.method,
        tag,
        sessions_in_log: inputs.sessions.len(),
        sessions_ranked: rankings.len(),
        failures,
        log_skipped: inputs
            .log_skipped
            .iter()
            .map(|s| SessionFailure {
                session_id: s.session_id.clone(),
                reason: s.reason.clone(),
            })
            .collect(),
        eval: eval.as_ref().map(EvalSummary::from),
    };
    files.push((AGGREGATE_FILE, serde_json::to_string_pretty(&aggregate)? + "\n"));
    files.push((MANIFEST_FILE, serde_json::to_string_pretty(m)? + "\n"));
    if m.method == Method::Grid {
        let mut lines = String::new();
        for r in &grid {
            lines.push_str(&serde_json::to_string(r)?);
            lines.push('\n');
        }
        files.push((GRID_FILE, lines));
        files.push((TABLE4_FILE, table4(&grid)));
    }
    Ok(RunOutput {
        rankings,
        aggregate,
        eval,
        grid,
        files,
    })
}

pub fn write_outputs(dir: &Path, files: &[(&'static str, String)]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Runs the manifest and writes its artifacts to `m.out`.
pub fn run_experiment(m: &Manifest) -> Result<RunOutput> {
    let out = execute(m)?;
    write_outputs(&m.out, &out.files)?;
    Ok(out)
}
