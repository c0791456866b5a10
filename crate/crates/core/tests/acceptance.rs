//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints exactly one `[acceptance]` verdict line, in order, even
//! under plain `cargo test`. Exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU32, Ordering};
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use sesh::experiment::{execute, execute_with, load_inputs, write_outputs, Manifest, MANIFEST_FILE};
use sesh::lmscore::{score, LexEntity, QueryModel, SmoothingConfig};
use sesh::metrics::{mrr, ndcg_at_k, progressing_session};
use sesh::oracles::{ground_truth_rank, ideal_weights, GridConfig, GridOutcome};
use sesh::pipeline::{rank_session, PipelineConfig};
use sesh::querymodels::{qcm_decompose, qcm_weight, session_model, tf_session_model, Method, QcmCase, QcmParams, TfScope};
use sesh::ranker::{first_pass, rerank, retrieve, write_run, CandidateSet, Ranking, RetrievalConfig};
use sesh::sessionlog::{HistoryMode, Judgments, Query, Session};
use sesh::synthetic::{generate, SyntheticConfig, SyntheticData};
use sesh::textindex::{build_index, CorpusRecord, DocId, Index, Tokenizer, DEFAULT_SPAM_THRESHOLD};

const METRIC_TOL: f64 = 1e-9;
const SCORER_TOL: f64 = 1e-10;
const QCM_TOL: f64 = 1e-12;
const C1_BUDGET: Duration = Duration::from_secs(5);
const C2_BUDGET: Duration = Duration::from_secs(5);
const C3_BUDGET: Duration = Duration::from_secs(1);
const C4_BUDGET: Duration = Duration::from_secs(600);
const C5_BUDGET: Duration = Duration::from_secs(10);
const C9_TIME_BUDGET: Duration = Duration::from_secs(10);
const C9_MEMORY_BUDGET: u64 = 1 << 30;

/// Bit `id` is set once criterion `id` has printed its verdict.
static REPORTED: AtomicU32 = AtomicU32::new(0);

fn verdict(id: u32, name: &str, ok: bool, detail: String) {
    REPORTED.fetch_or(1 << id, Ordering::SeqCst);
    println!(
        "[acceptance] C{id} {name}: {} ({detail})",
        if ok { "PASS" } else { "FAIL" }
    );
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic")
}

fn synthetic() -> (SyntheticData, Index) {
    let data = generate(&SyntheticConfig::default()).unwrap();
    let (index, _) = build_index(
        data.corpus.iter().cloned(),
        Some(&data.spam),
        DEFAULT_SPAM_THRESHOLD,
        Default::default(),
    )
    .unwrap();
    (data, index)
}

// C1 -----------------------------------------------------------------------

/// Straight from the definitions: DCG by direct summation with
/// discount ln 2 / ln(r + 1); ideal from every judged grade.
fn brute_ndcg10(order: &[String], judged: &BTreeMap<String, i32>) -> Option<f64> {
    let g = |d: &String| judged.get(d).map_or(0, |&x| x.max(0)) as f64;
    let mut ideal: Vec<f64> = judged.values().map(|&x| x.max(0) as f64).collect();
    ideal.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut idcg = 0.0;
    let mut dcg = 0.0;
    for r in 1..=10usize {
        let disc = std::f64::consts::LN_2 / ((r + 1) as f64).ln();
        if let Some(x) = ideal.get(r - 1) {
            idcg += x * disc;
        }
        if let Some(d) = order.get(r - 1) {
            dcg += g(d) * disc;
        }
    }
    (idcg > 0.0).then(|| dcg / idcg)
}

fn brute_mrr(order: &[String], judged: &BTreeMap<String, i32>) -> Option<f64> {
    if !judged.values().any(|&x| x > 0) {
        return None;
    }
    for (i, d) in order.iter().enumerate() {
        if judged.get(d).is_some_and(|&x| x > 0) {
            return Some(1.0 / (i as f64 + 1.0));
        }
    }
    Some(0.0)
}

fn c1_metric_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut agree = true;
    for f in 0..200 {
        let n = rng.gen_range(1..=50);
        let mut docs: Vec<String> = (0..n).map(|i| format!("d{i:02}")).collect();
        docs.shuffle(&mut rng);
        let pool: Vec<String> = (0..60).map(|i| format!("d{i:02}")).collect();
        let n_judged = rng.gen_range(0..=10);
        let picked: Vec<String> = pool.choose_multiple(&mut rng, n_judged).cloned().collect();
        let judged: BTreeMap<String, i32> = picked
            .into_iter()
            .map(|d| (d, rng.gen_range(-2..=3)))
            .collect();
        let ranking = Ranking::from_scored(
            format!("f{f}"),
            docs.iter().enumerate().map(|(i, d)| (d.clone(), -(i as f64))).collect(),
        );
        let (a, b) = (ndcg_at_k(&ranking, &judged, 10), brute_ndcg10(&docs, &judged));
        let (c, d) = (mrr(&ranking, &judged), brute_mrr(&docs, &judged));
        match (a, b, c, d) {
            (Some(a), Some(b), Some(c), Some(d)) => {
                worst = worst.max((a - b).abs()).max((c - d).abs());
                agree &= (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&c);
            }
            (None, None, None, None) => {}
            _ => agree = false,
        }
    }
    let took = start.elapsed();
    let ok = agree && worst <= METRIC_TOL && took < C1_BUDGET;
    verdict(1, "metric oracle equivalence", ok, format!("200 fixtures, max |diff| {worst:.1e}, tol {METRIC_TOL:.0e}, {took:.2?}"));
    assert!(ok);
}

// C2 -----------------------------------------------------------------------

/// Query likelihood computed from raw token lists only.
fn naive_score(docs: &[Vec<String>], d: usize, qm: &[(Vec<String>, f64)], mu: f64) -> f64 {
    let total: usize = docs.iter().map(Vec::len).sum();
    let floor = 0.5 / total as f64;
    let count = |doc: &Vec<String>, g: &[String]| -> usize {
        if doc.len() < g.len() {
            return 0;
        }
        (0..=doc.len() - g.len()).filter(|&i| doc[i..i + g.len()] == *g).count()
    };
    let mut s = 0.0;
    for (g, w) in qm {
        let n = g.len();
        let hits: usize = docs.iter().map(|x| count(x, g)).sum();
        let windows: usize = docs.iter().map(|x| (x.len() + 1).saturating_sub(n)).sum();
        let pc = if hits == 0 || windows == 0 { floor } else { hits as f64 / windows as f64 };
        let units = (docs[d].len() + 1).saturating_sub(n) as f64;
        let p = (count(&docs[d], g) as f64 + mu * pc) / (units + mu);
        s += w * p.ln();
    }
    s
}

fn c2_lm_scorer_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let words = ["ab", "cd", "ef", "gh", "ij", "kl", "mn"];
    let mut worst = 0.0f64;
    let mut with_neg = 0;
    let mut with_ngram = 0;
    for m in 0..100 {
        let n_docs = rng.gen_range(1..=20);
        let docs: Vec<Vec<String>> = (0..n_docs)
            .map(|_| {
                (0..rng.gen_range(1..=50))
                    .map(|_| words[rng.gen_range(0..5)].to_string())
                    .collect()
            })
            .collect();
        let (index, _) = build_index(
            docs.iter().enumerate().map(|(i, t)| CorpusRecord::new(format!("doc{i:02}"), t.join(" "))),
            None,
            70,
            Default::default(),
        )
        .unwrap();
        let mut qm = QueryModel::new();
        for _ in 0..rng.gen_range(1..=5) {
            let n = if rng.gen_bool(0.4) { rng.gen_range(2..=3) } else { 1 };
            // Index 5 and 6 never occur in documents.
            let g: Vec<String> = (0..n).map(|_| words[rng.gen_range(0..7)].to_string()).collect();
            let w = rng.gen_range(-2.0..2.0);
            let e = if n == 1 { LexEntity::Term(g[0].clone()) } else { LexEntity::Ngram(g) };
            qm.add(e, w);
        }
        if qm.is_empty() {
            qm.set(LexEntity::term("ab"), 1.0);
        }
        with_neg += usize::from(qm.iter().any(|(_, w)| w < 0.0));
        with_ngram += usize::from(qm.iter().any(|(e, _)| e.order() > 1));
        let flat: Vec<(Vec<String>, f64)> = qm
            .iter()
            .map(|(e, w)| match e {
                LexEntity::Term(t) => (vec![t.clone()], w),
                LexEntity::Ngram(g) => (g.clone(), w),
            })
            .collect();
        let mu = if m % 2 == 0 { 2500.0 } else { rng.gen_range(1.0..5000.0) };
        let cfg = SmoothingConfig::new(mu).unwrap();
        for d in 0..n_docs {
            let docno = format!("doc{d:02}");
            let id = index.doc_id(&docno).unwrap();
            let fast = score(&index, id, &qm, cfg).unwrap();
            let slow = naive_score(&docs, d, &flat, mu);
            worst = worst.max((fast - slow).abs() / slow.abs().max(1.0));
        }
    }
    let took = start.elapsed();
    let ok = worst <= SCORER_TOL && with_neg > 0 && with_ngram > 0 && took < C2_BUDGET;
    verdict(
        2,
        "LM scorer equivalence",
        ok,
        format!("100 models ({with_neg} with negative weights, {with_ngram} with n-grams), max rel diff {worst:.1e}, tol {SCORER_TOL:.0e}, {took:.2?}"),
    );
    assert!(ok);
}

// C3 -----------------------------------------------------------------------

fn c3_qcm_closed_form_table() {
    let start = Instant::now();
    let p = QcmParams::default();
    assert_eq!((p.alpha, p.beta, p.epsilon, p.delta), (2.2, 1.8, 0.07, 0.4));
    // (previous query, current query, term, present in reference doc, P, idf, expected)
    let table: [(&str, &str, &str, bool, f64, f64, f64); 25] = [
        ("a b", "a c", "a", true, 0.0, 0.0, 3.2),
        ("a b", "a c", "a", true, 0.5, 0.0, 2.1),
        ("a b", "a c", "a", true, 1.0, 0.0, 1.0),
        ("a b", "a c", "a", true, 0.25, 0.0, 2.65),
        ("x y z", "x y", "y", true, 0.1, 0.0, 2.98),
        ("x y z", "x y", "x", true, 0.05, 0.0, 3.09),
        ("a", "a", "a", true, 0.2, 0.0, 2.76),
        ("a b", "a c", "b", true, 0.2, 0.0, -0.08),
        ("a b", "a c", "b", true, 0.0, 0.0, 0.0),
        ("a b", "a c", "b", true, 1.0, 0.0, -0.4),
        ("a b", "a c", "b", true, 0.5, 0.0, -0.2),
        ("x y z", "x y", "z", true, 0.05, 0.0, -0.02),
        ("p q", "r", "q", true, 0.75, 0.0, -0.3),
        ("a b", "a c", "c", false, 0.0, 3.0, 1.21),
        ("a b", "a c", "c", false, 0.0, 0.0, 1.0),
        ("a b", "a c", "c", false, 0.0, 1.0, 1.07),
        ("a b", "a c", "c", false, 0.0, 7.6, 1.532),
        ("p q", "r", "r", false, 0.0, 10.0, 1.7),
        ("a", "a d e", "e", false, 0.0, 0.5, 1.035),
        ("a b", "a c", "c", true, 0.5, 0.0, 0.1),
        ("a b", "a c", "c", true, 0.0, 0.0, 1.0),
        ("a b", "a c", "c", true, 1.0, 0.0, -0.8),
        ("a b", "a c", "c", true, 0.1, 0.0, 0.82),
        ("p q", "r", "r", true, 0.25, 0.0, 0.55),
        ("a", "a d e", "d", true, 0.2, 0.0, 0.64),
    ];
    let tok = Tokenizer::default();
    let mut worst = 0.0f64;
    let mut counts = BTreeMap::new();
    for (prev, cur, term, present, prob, idf, expected) in table {
        let dec = qcm_decompose(&Query::new(prev, &tok), &Query::new(cur, &tok));
        let case = if dec.theme.contains(term) {
            QcmCase::Theme
        } else if dec.removed.contains(term) {
            QcmCase::Removed
        } else if dec.added.contains(term) && present {
            QcmCase::AddedPresent
        } else {
            assert!(dec.added.contains(term), "{term} not in {prev:?} or {cur:?}");
            QcmCase::AddedAbsent
        };
        *counts.entry(format!("{case:?}")).or_insert(0) += 1;
        let w = qcm_weight(case, prob, idf, &p);
        worst = worst.max((w - expected).abs());
    }
    let took = start.elapsed();
    let ok = worst <= QCM_TOL && counts.len() == 4 && took < C3_BUDGET;
    verdict(3, "QCM closed-form table", ok, format!("25 cases {counts:?}, max |diff| {worst:.1e}, tol {QCM_TOL:.0e}, {took:.2?}"));
    assert!(ok);
}

// C4 -----------------------------------------------------------------------

fn c4_oracle_dominance() {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let (ok, detail) = pool.install(|| {
        let (data, index) = synthetic();
        let qrels = data.qrels().unwrap();
        let cfg = PipelineConfig::default();
        let methods = [
            Method::TfFirst,
            Method::TfLast,
            Method::TfAll,
            Method::NuggetRl2,
            Method::NuggetRl3,
            Method::NuggetRl4,
            Method::Qcm,
        ];
        let mut violations = Vec::new();
        let mut compared = 0;
        let grid = GridConfig {
            max_unique_terms: 3,
            max_candidates: Some(200),
            ..Default::default()
        };
        let mut searched = 0;
        let mut means = [0.0; 3];
        for s in &data.sessions {
            let j = qrels.for_session(&s.session_id).unwrap();
            let gt_out = rank_session(&index, s, Method::Oracle, &cfg, Some(&data.anchors), Some(j)).unwrap();
            let gt = ndcg_at_k(&gt_out.ranking, j, 10).unwrap();
            for m in methods {
                let r = rank_session(&index, s, m, &cfg, Some(&data.anchors), Some(j)).unwrap();
                let v = ndcg_at_k(&r.ranking, j, 10).unwrap();
                compared += 1;
                if v > gt {
                    violations.push(format!("{} {m}: {v} > oracle {gt}", s.session_id));
                }
            }

            let cands = first_pass(&index, s, &cfg.retrieval).unwrap().truncated(200);
            let tf = tf_session_model(s, TfScope::AllQueries).unwrap();
            let tf_v = ndcg_at_k(&rerank(&index, &cands, &tf, &cfg.retrieval).unwrap(), j, 10).unwrap();
            let gt_v = ndcg_at_k(&ground_truth_rank(&cands, j), j, 10).unwrap();
            let out = ideal_weights(&index, s, &cands, j, &grid, cfg.retrieval.smoothing, &[tf]).unwrap();
            if let GridOutcome::Searched(g) = out {
                searched += 1;
                if g.assignments_evaluated != 21u64.pow(g.terms.len() as u32) {
                    violations.push(format!("{}: {} assignments", s.session_id, g.assignments_evaluated));
                }
                // The reported weights reproduce the reported NDCG.
                let again = if g.best_weights.is_empty() {
                    g.best_ndcg
                } else {
                    ndcg_at_k(&rerank(&index, &cands, &g.best_weights, &cfg.retrieval).unwrap(), j, 10).unwrap()
                };
                if !(tf_v <= g.best_ndcg && g.best_ndcg <= gt_v && again == g.best_ndcg) {
                    violations.push(format!(
                        "{}: tf {tf_v} ideal {} gt {gt_v} replay {again}",
                        s.session_id, g.best_ndcg
                    ));
                }
                means[0] += tf_v;
                means[1] += g.best_ndcg;
                means[2] += gt_v;
            }
        }
        let n = searched as f64;
        let took = start.elapsed();
        let ok = violations.is_empty() && searched > 0 && took < C4_BUDGET;
        let detail = format!(
            "{compared} method/session pairs under the oracle; grid over {searched} sessions, mean TF(all) {:.3} <= ideal {:.3} <= ground truth {:.3}; {} violations; {took:.2?} single-threaded{}",
            means[0] / n,
            means[1] / n,
            means[2] / n,
            violations.len(),
            violations.first().map(|v| format!("; first: {v}")).unwrap_or_default()
        );
        (ok, detail)
    });
    verdict(4, "oracle dominance", ok, detail);
    assert!(ok);
}

// C5 -----------------------------------------------------------------------

fn c5_baseline_identity() {
    let start = Instant::now();
    let (data, index) = synthetic();
    let cfg = RetrievalConfig::default();
    let mut mismatched = Vec::new();
    for s in &data.sessions {
        let first = retrieve(&index, s, &cfg).unwrap();
        let qm = tf_session_model(s, TfScope::LastQuery).unwrap();
        let again = rerank(&index, &CandidateSet::from_ranking(&first), &qm, &cfg).unwrap();
        if again != first {
            mismatched.push(s.session_id.clone());
        }
    }
    let took = start.elapsed();
    let ok = mismatched.is_empty() && took < C5_BUDGET;
    verdict(5, "baseline identity", ok, format!("{} sessions, {} differ, {took:.2?}", data.sessions.len(), mismatched.len()));
    assert!(ok);
}

// C6 -----------------------------------------------------------------------

/// The echoed manifest records the thread count; everything else must match.
fn normalized(mut files: Vec<(String, Vec<u8>)>) -> Vec<(String, Vec<u8>)> {
    for (n, bytes) in files.iter_mut() {
        if n == MANIFEST_FILE {
            let mut v: serde_json::Value = serde_json::from_slice(bytes).unwrap();
            v["threads"] = serde_json::Value::Null;
            *bytes = serde_json::to_vec(&v).unwrap();
        }
    }
    files.sort();
    files
}

fn c6_determinism() {
    let d = data_dir();
    let tmp = tempfile::tempdir().unwrap();
    let mut differing = Vec::new();
    let mut runs = 0;
    for method in Method::ALL {
        let mut m = Manifest::new(d.join("sessions.xml"), method, tmp.path().join("unused"));
        m.corpus = Some(d.join("corpus.jsonl"));
        m.spam = Some(d.join("spam.txt"));
        m.qrels = Some(d.join("qrels.txt"));
        m.mapping = Some(d.join("mapping.json"));
        m.anchors = Some(d.join("anchors.jsonl"));
        m.pipeline.grid.max_unique_terms = 3;
        m.pipeline.grid.max_candidates = Some(200);
        let mut outputs: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
        for (k, threads) in [1, 1, 8, 8].into_iter().enumerate() {
            m.threads = Some(threads);
            // The echoed manifest names its own output directory, so all
            // executions share one.
            m.out = tmp.path().join(method.name());
            let out = execute(&m).unwrap();
            if k == 0 {
                write_outputs(&m.out, &out.files).unwrap();
            }
            runs += 1;
            let files: Vec<(String, Vec<u8>)> = out
                .files
                .iter()
                .map(|(n, t)| (n.to_string(), t.clone().into_bytes()))
                .collect();
            // Bytes on disk match the in-memory artifacts.
            if k == 0 {
                for (n, bytes) in &files {
                    assert_eq!(&std::fs::read(m.out.join(n)).unwrap(), bytes);
                }
            }
            outputs.push(normalized(files));
        }
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            differing.push(method.name());
        }
        // The echoed manifest reproduces the run.
        let echoed = Manifest::read(&m.out.join("manifest.json")).unwrap();
        let inputs = load_inputs(&echoed).unwrap();
        let replay = execute_with(&echoed, &inputs).unwrap();
        let first = normalized(replay.files.iter().map(|(n, t)| (n.to_string(), t.clone().into_bytes())).collect());
        if first != outputs[0] {
            differing.push("manifest replay");
        }
    }
    let ok = differing.is_empty();
    verdict(
        6,
        "determinism",
        ok,
        format!("{runs} executions over {} methods at 1 and 8 threads; differing: {differing:?}", Method::ALL.len()),
    );
    assert!(ok);
}

// C7 -----------------------------------------------------------------------

fn c7_single_query_sessions() {
    let (data, index) = synthetic();
    let singles: Vec<&Session> = data.sessions.iter().filter(|s| s.len() == 1).collect();
    let params = PipelineConfig::default().params;
    let cfg = RetrievalConfig::default();
    let mut differing = Vec::new();
    for s in &singles {
        let mut lines = Vec::new();
        for m in [Method::TfLast, Method::TfAll, Method::TfFirst, Method::Qcm, Method::NuggetRl2, Method::NuggetRl3, Method::NuggetRl4] {
            let qm = session_model(m, &index, s, &params, Some(&data.anchors)).unwrap();
            let cands = first_pass(&index, s, &cfg).unwrap();
            let r = rerank(&index, &cands, &qm, &cfg).unwrap();
            lines.push((m, qm, write_run(&[r], "x").unwrap()));
        }
        if lines.windows(2).any(|w| w[0].1 != w[1].1 || w[0].2 != w[1].2) {
            differing.push(s.session_id.clone());
        }
    }
    let ok = !singles.is_empty() && differing.is_empty();
    verdict(
        7,
        "degenerate-session handling",
        ok,
        format!("{} single-query sessions, TF/QCM/Nugget models and run lines identical except {differing:?}", singles.len()),
    );
    assert!(ok);
}

// C8 -----------------------------------------------------------------------

fn c8_progressing_session_shape() {
    let (data, index) = synthetic();
    let qrels = data.qrels().unwrap();
    let cfg = PipelineConfig::default();
    let fives: Vec<&Session> = data.sessions.iter().filter(|s| s.len() == 5).collect();
    let mut problems = Vec::new();
    let methods = [Method::TfLast, Method::TfAll, Method::Qcm, Method::NuggetRl2];
    for s in &fives {
        let j: &Judgments = qrels.for_session(&s.session_id).unwrap();
        for mode in [HistoryMode::FullHistory, HistoryMode::PreviousQueryOnly] {
            let base = progressing_session(&index, s, Method::TfLast, j, mode, &cfg, Some(&data.anchors)).unwrap();
            let base2 = progressing_session(&index, s, Method::TfLast, j, mode, &cfg, Some(&data.anchors)).unwrap();
            if base.len() != 5 || base.iter().zip(&base2).any(|(a, b)| a - b != 0.0) {
                problems.push(format!("{} {mode:?}: TF(last) self-delta", s.session_id));
            }
            for m in methods {
                let v = progressing_session(&index, s, m, j, mode, &cfg, Some(&data.anchors)).unwrap();
                if v.len() != 5 {
                    problems.push(format!("{} {m}: {} values", s.session_id, v.len()));
                }
                // No history at j = 1.
                if v[0] != base[0] {
                    problems.push(format!("{} {m}: step 1 {} vs {}", s.session_id, v[0], base[0]));
                }
            }
        }
    }
    let ok = fives.len() == 5 && problems.is_empty();
    verdict(
        8,
        "progressing-session shape",
        ok,
        format!("{} length-5 sessions x 2 history modes, {} problems{}", fives.len(), problems.len(), problems.first().map(|p| format!("; first: {p}")).unwrap_or_default()),
    );
    assert!(ok);
}

// C9 -----------------------------------------------------------------------

fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn c9_indexing_throughput() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let vocab: Vec<String> = (0..20_000).map(|i| format!("w{i:x}")).collect();
    let zipf = rand::distributions::WeightedIndex::new((0..vocab.len()).map(|r| 1.0 / (r as f64 + 1.0))).unwrap();
    let corpus: Vec<CorpusRecord> = (0..10_000)
        .map(|i| {
            let len = rng.gen_range(150..=250);
            let text: Vec<&str> = (0..len).map(|_| vocab[zipf.sample(&mut rng)].as_str()).collect();
            CorpusRecord::new(format!("doc{i:05}"), text.join(" "))
        })
        .collect();
    let tokens: usize = corpus.iter().map(|r| r.text.split(' ').count()).sum();
    let start = Instant::now();
    let (index, _) = build_index(corpus, None, 70, Default::default()).unwrap();
    let took = start.elapsed();
    let heap = index.heap_size_bytes() as u64;
    let rss = peak_rss_bytes();
    assert!(index.doc(DocId(0)).is_ok());
    let ok = index.num_docs() == 10_000 && took < C9_TIME_BUDGET && heap < C9_MEMORY_BUDGET && rss.is_none_or(|r| r < C9_MEMORY_BUDGET);
    verdict(
        9,
        "indexing throughput",
        ok,
        format!(
            "10000 docs, {tokens} tokens in {took:.2?}; index heap {:.1} MiB, process peak RSS {}",
            heap as f64 / (1 << 20) as f64,
            rss.map_or("n/a".into(), |r| format!("{:.1} MiB", r as f64 / (1 << 20) as f64))
        ),
    );
    assert!(ok);
}

fn main() {
    let criteria: [(u32, &str, fn()); 9] = [
        (1, "metric oracle equivalence", c1_metric_oracle_equivalence),
        (2, "LM scorer equivalence", c2_lm_scorer_equivalence),
        (3, "QCM closed-form table", c3_qcm_closed_form_table),
        (4, "oracle dominance", c4_oracle_dominance),
        (5, "baseline identity", c5_baseline_identity),
        (6, "determinism", c6_determinism),
        (7, "degenerate-session handling", c7_single_query_sessions),
        (8, "progressing-session shape", c8_progressing_session_shape),
        (9, "indexing throughput", c9_indexing_throughput),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        if std::panic::catch_unwind(check).is_err() {
            failed += 1;
            if REPORTED.load(Ordering::SeqCst) & (1 << id) == 0 {
                verdict(id, name, false, "aborted before a verdict".into());
            }
        }
    }
    println!("[acceptance] {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
