//! Seeded synthetic benchmark: corpus, spam scores, session log, topic qrels,
//! topic→session mapping and anchor texts, shaped like a tiny session track.
//!
//! Words are pronounceable nonsense so no tokenizer option changes them.
//! Each topic has a core term that decides relevance and a few secondary
//! terms; distractor documents repeat the secondary terms without the core
//! one, so equal query weights are beatable. Result pages are produced by
//! the engine itself on the spam-filtered index.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::querymodels::AnchorTexts;
use crate::ranker::{retrieve, RetrievalConfig};
use crate::sessionlog::{parse_qrels, write_sessions, Interaction, Qrels, Query, ResultEntry, Session, SessionMapping};
use crate::textindex::{build_index, CorpusRecord, SpamScores, Tokenizer, DEFAULT_SPAM_THRESHOLD};

pub const DEFAULT_SEED: u64 = 20_150_809;

/// File names written by [`SyntheticData::write_to`].
pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const SPAM_FILE: &str = "spam.txt";
pub const SESSIONS_FILE: &str = "sessions.xml";
pub const QRELS_FILE: &str = "qrels.txt";
pub const MAPPING_FILE: &str = "mapping.json";
pub const ANCHORS_FILE: &str = "anchors.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub seed: u64,
    /// Documents that survive spam filtering.
    pub num_docs: usize,
    pub num_spam: usize,
    pub num_topics: usize,
    pub sessions_per_length: usize,
    pub max_session_len: usize,
    pub serp_size: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: DEFAULT_SEED,
            num_docs: 1000,
            num_spam: 50,
            num_topics: 15,
            sessions_per_length: 5,
            max_session_len: 6,
            serp_size: 10,
        }
    }
}

impl SyntheticConfig {
    fn validate(&self) -> Result<()> {
        let per_topic = STRONG + PARTIAL + DISTRACTOR;
        if self.num_topics == 0 || self.num_docs < self.num_topics * per_topic + JUDGED_BACKGROUND {
            return Err(Error::InvalidConfig(format!(
                "synthetic corpus needs at least {} documents for {} topics",
                self.num_topics * per_topic + JUDGED_BACKGROUND,
                self.num_topics
            )));
        }
        if self.sessions_per_length == 0 || self.max_session_len == 0 || self.serp_size == 0 {
            return Err(Error::InvalidConfig("synthetic session shape must be positive".into()));
        }
        Ok(())
    }
}

const STRONG: usize = 12;
const PARTIAL: usize = 15;
const DISTRACTOR: usize = 8;
const JUDGED_BACKGROUND: usize = 10;
const TOPIC_POOL: usize = 120;
const VOCAB: usize = 1500;

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub corpus: Vec<CorpusRecord>,
    pub spam: SpamScores,
    pub sessions: Vec<Session>,
    /// Topic-level `topic 0 docno grade` lines.
    pub qrels_text: String,
    pub mapping: SessionMapping,
    pub anchors: AnchorTexts,
}

impl SyntheticData {
    /// Session-level judgments.
    pub fn qrels(&self) -> Result<Qrels> {
        parse_qrels(&self.qrels_text, Some(&self.mapping)).map(|(q, _)| q)
    }

    /// File name → contents.
    pub fn files(&self) -> Result<Vec<(&'static str, String)>> {
        let corpus = self
            .corpus
            .iter()
            .map(|r| serde_json::to_string(r).map(|s| s + "\n"))
            .collect::<std::result::Result<String, _>>()?;
        Ok(vec![
            (CORPUS_FILE, corpus),
            (SPAM_FILE, self.spam.to_text()),
            (SESSIONS_FILE, write_sessions(&self.sessions)),
            (QRELS_FILE, self.qrels_text.clone()),
            (MAPPING_FILE, serde_json::to_string_pretty(&self.mapping)? + "\n"),
            (ANCHORS_FILE, self.anchors.to_jsonl()),
        ])
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, text) in self.files()? {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

fn make_vocab(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    const ONSETS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr", "st"];
    const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.gen_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS.choose(rng).expect("non-empty"));
            w.push_str(VOWELS.choose(rng).expect("non-empty"));
        }
        if rng.gen_bool(0.3) {
            w.push_str(["n", "r", "s", "x"].choose(rng).expect("non-empty"));
        }
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

struct Topic {
    id: String,
    /// `terms[0]` is the core term.
    terms: Vec<String>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Strong,
    Partial,
    Distractor,
    Spam,
    Background,
}

struct Doc {
    tokens: Vec<String>,
    topic: Option<usize>,
    kind: Kind,
}

struct Gen<'a> {
    rng: ChaCha8Rng,
    background: &'a [String],
    zipf: WeightedIndex<f64>,
}

impl Gen<'_> {
    fn filler(&mut self, n: usize) -> Vec<String> {
        (0..n)
            .map(|_| self.background[self.zipf.sample(&mut self.rng)].clone())
            .collect()
    }

    /// Inserts each phrase at a random position.
    fn sprinkle(&mut self, tokens: &mut Vec<String>, phrases: &[Vec<String>]) {
        for p in phrases {
            let at = self.rng.gen_range(0..=tokens.len());
            tokens.splice(at..at, p.iter().cloned());
        }
    }

    fn doc(&mut self, topic: &Topic, ti: usize, kind: Kind) -> Doc {
        let len = self.rng.gen_range(50..120);
        let mut tokens = self.filler(len);
        let t = &topic.terms;
        let mut phrases: Vec<Vec<String>> = Vec::new();
        match kind {
            Kind::Strong => {
                for _ in 0..self.rng.gen_range(2..=4) {
                    phrases.push(t[..2].to_vec());
                }
                for _ in 0..self.rng.gen_range(2..=4) {
                    phrases.push(vec![t[0].clone()]);
                }
                for s in &t[2..] {
                    if self.rng.gen_bool(0.6) {
                        phrases.push(vec![s.clone()]);
                    }
                }
            }
            Kind::Partial => {
                phrases.push(vec![t[0].clone()]);
                let other = &t[self.rng.gen_range(1..t.len())];
                for _ in 0..self.rng.gen_range(1..=3) {
                    phrases.push(vec![other.clone()]);
                }
            }
            Kind::Distractor => {
                for s in &t[1..] {
                    for _ in 0..self.rng.gen_range(2..=5) {
                        phrases.push(vec![s.clone()]);
                    }
                }
            }
            Kind::Spam => {
                for _ in 0..self.rng.gen_range(8..=15) {
                    phrases.push(t.clone());
                }
            }
            Kind::Background => {}
        }
        self.sprinkle(&mut tokens, &phrases);
        Doc {
            tokens,
            topic: Some(ti),
            kind,
        }
    }
}

fn grade(kind: Kind) -> i32 {
    match kind {
        Kind::Strong => 2,
        Kind::Partial => 1,
        Kind::Spam => -2,
        Kind::Distractor | Kind::Background => 0,
    }
}

/// Query sequence over a topic: starts with one or two terms, then adds,
/// drops or swaps one term per step. Topics with more than three terms may
/// also pick up an off-topic word.
fn queries(rng: &mut ChaCha8Rng, topic: &Topic, len: usize, background: &[String]) -> Vec<Vec<String>> {
    let t = &topic.terms;
    let mut cur: BTreeSet<usize> = BTreeSet::new();
    cur.insert(rng.gen_range(0..t.len()));
    if rng.gen_bool(0.5) {
        cur.insert(rng.gen_range(0..t.len()));
    }
    let mut noise: Option<String> = None;
    let render = |cur: &BTreeSet<usize>, noise: &Option<String>| {
        let mut q: Vec<String> = cur.iter().map(|&i| t[i].clone()).collect();
        q.extend(noise.iter().cloned());
        q
    };
    let mut out = vec![render(&cur, &noise)];
    while out.len() < len {
        let missing: Vec<usize> = (0..t.len()).filter(|i| !cur.contains(i)).collect();
        match rng.gen_range(0..3) {
            0 if !missing.is_empty() => {
                cur.insert(*missing.choose(rng).expect("non-empty"));
            }
            1 if cur.len() > 1 => {
                let drop = **cur.iter().collect::<Vec<_>>().choose(rng).expect("non-empty");
                cur.remove(&drop);
            }
            _ if !missing.is_empty() => {
                let drop = **cur.iter().collect::<Vec<_>>().choose(rng).expect("non-empty");
                cur.remove(&drop);
                cur.insert(*missing.choose(rng).expect("non-empty"));
            }
            _ => {}
        }
        noise = if t.len() > 3 && rng.gen_bool(0.2) {
            Some(background[rng.gen_range(0..background.len())].clone())
        } else {
            None
        };
        out.push(render(&cur, &noise));
    }
    out
}

fn snippet(tokens: &[String], query: &[String]) -> String {
    let hit = tokens.iter().position(|w| query.contains(w)).unwrap_or(0);
    let start = hit.saturating_sub(4);
    tokens[start..(start + 16).min(tokens.len())].join(" ")
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticData> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vocab = make_vocab(&mut rng, VOCAB + TOPIC_POOL);
    let (background, pool) = vocab.split_at(VOCAB);
    let zipf = WeightedIndex::new((0..background.len()).map(|r| 1.0 / (r as f64 + 1.0)))
        .expect("positive weights");

    let mut pool: Vec<String> = pool.to_vec();
    pool.shuffle(&mut rng);
    let mut pool = pool.into_iter();
    let topics: Vec<Topic> = (0..cfg.num_topics)
        .map(|i| Topic {
            id: format!("T{:02}", i + 1),
            terms: (0..3 + (i * 3 / cfg.num_topics)).map(|_| pool.next().expect("pool")).collect(),
        })
        .collect();

    let mut g = Gen {
        rng,
        background,
        zipf,
    };
    let mut docs: Vec<Doc> = Vec::new();
    for (ti, topic) in topics.iter().enumerate() {
        for (kind, n) in [(Kind::Strong, STRONG), (Kind::Partial, PARTIAL), (Kind::Distractor, DISTRACTOR)] {
            for _ in 0..n {
                docs.push(g.doc(topic, ti, kind));
            }
        }
    }
    for i in 0..cfg.num_spam {
        let ti = i % topics.len();
        docs.push(g.doc(&topics[ti], ti, Kind::Spam));
    }
    while docs.len() < cfg.num_docs + cfg.num_spam {
        let len = g.rng.gen_range(50..120);
        let mut tokens = g.filler(len);
        // A stray topic word now and then.
        if g.rng.gen_bool(0.1) {
            let t = &topics[g.rng.gen_range(0..topics.len())];
            let w = t.terms[g.rng.gen_range(0..t.terms.len())].clone();
            g.sprinkle(&mut tokens, &[vec![w]]);
        }
        docs.push(Doc {
            tokens,
            topic: None,
            kind: Kind::Background,
        });
    }
    docs.shuffle(&mut g.rng);
    let docnos: Vec<String> = (0..docs.len()).map(|i| format!("syn-{i:04}")).collect();

    let mut spam = SpamScores::new();
    for (d, docno) in docs.iter().zip(&docnos) {
        let score = if d.kind == Kind::Spam {
            g.rng.gen_range(0..DEFAULT_SPAM_THRESHOLD)
        } else {
            g.rng.gen_range(DEFAULT_SPAM_THRESHOLD..100)
        };
        spam.insert(docno.clone(), score)?;
    }
    let corpus: Vec<CorpusRecord> = docs
        .iter()
        .zip(&docnos)
        .map(|(d, n)| CorpusRecord::new(n.clone(), d.tokens.join(" ")))
        .collect();

    // Topic qrels: every topic document plus a few background ones.
    let mut judged: BTreeMap<&str, BTreeMap<&str, i32>> = BTreeMap::new();
    let background_idx: Vec<usize> = (0..docs.len()).filter(|&i| docs[i].topic.is_none()).collect();
    for (i, d) in docs.iter().enumerate() {
        if let Some(ti) = d.topic {
            judged.entry(&topics[ti].id).or_default().insert(&docnos[i], grade(d.kind));
        }
    }
    for t in &topics {
        for &i in background_idx.choose_multiple(&mut g.rng, JUDGED_BACKGROUND) {
            judged.entry(&t.id).or_default().insert(&docnos[i], 0);
        }
    }
    let mut qrels_text = String::new();
    for (t, ds) in &judged {
        for (d, grade) in ds {
            let _ = writeln!(qrels_text, "{t} 0 {d} {grade}");
        }
    }

    let mut anchors = AnchorTexts::new();
    for (i, d) in docs.iter().enumerate() {
        let n = match d.kind {
            Kind::Strong | Kind::Partial => g.rng.gen_range(1..=3),
            Kind::Background if g.rng.gen_bool(0.1) => g.rng.gen_range(1..=2),
            _ => 0,
        };
        let list: Vec<String> = (0..n)
            .map(|_| {
                let n_words = g.rng.gen_range(1..=2);
                let mut words = g.filler(n_words);
                if let Some(ti) = d.topic {
                    let t = &topics[ti].terms;
                    words.insert(0, t[..2].join(" "));
                }
                words.join(" ")
            })
            .collect();
        if !list.is_empty() {
            anchors.insert(docnos[i].clone(), list);
        }
    }

    let (index, _) = build_index(corpus.iter().cloned(), Some(&spam), DEFAULT_SPAM_THRESHOLD, Default::default())?;
    let tokenizer = Tokenizer::default();
    let grades: BTreeMap<&str, (Option<usize>, i32)> = docs
        .iter()
        .zip(&docnos)
        .map(|(d, n)| (n.as_str(), (d.topic, grade(d.kind))))
        .collect();
    let serp_cfg = RetrievalConfig {
        first_pass_n: cfg.serp_size,
        ..Default::default()
    };

    let total = cfg.sessions_per_length * cfg.max_session_len;
    let mut sessions = Vec::with_capacity(total);
    let mut to_sessions: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for k in 0..total {
        let len = k % cfg.max_session_len + 1;
        let ti = k % topics.len();
        let topic = &topics[ti];
        let sid = format!("S{:02}", k + 1);
        to_sessions.entry(topic.id.clone()).or_default().push(sid.clone());
        let qs = queries(&mut g.rng, topic, len, background);
        let mut history = Vec::with_capacity(len - 1);
        for q in &qs[..len - 1] {
            let query = Query::new(&q.join(" "), &tokenizer);
            let probe = Session {
                session_id: sid.clone(),
                topic_id: None,
                history: vec![],
                current_query: query.clone(),
            };
            let page = retrieve(&index, &probe, &serp_cfg)?;
            let serp = page
                .entries
                .iter()
                .map(|e| {
                    let doc = &docs[docnos.binary_search(&e.docno).expect("generated docno")];
                    let relevant = matches!(grades[e.docno.as_str()], (Some(t), g) if t == ti && g > 0);
                    let clicked = g.rng.gen_bool(if relevant { 0.6 } else { 0.15 });
                    let sat_click = clicked && g.rng.gen_bool(if relevant { 0.8 } else { 0.2 });
                    ResultEntry {
                        docno: e.docno.clone(),
                        rank: e.rank as u32,
                        url: format!("http://synthetic.example/{}", e.docno),
                        title: doc.tokens[..4].join(" "),
                        snippet: snippet(&doc.tokens, q),
                        clicked,
                        sat_click,
                    }
                })
                .collect();
            history.push(Interaction { query, serp });
        }
        sessions.push(Session {
            session_id: sid,
            topic_id: Some(topic.id.clone()),
            history,
            current_query: Query::new(&qs[len - 1].join(" "), &tokenizer),
        });
    }

    Ok(SyntheticData {
        corpus,
        spam,
        sessions,
        qrels_text,
        mapping: SessionMapping {
            topic_to_sessions: to_sessions,
            grade_map: Default::default(),
        },
        anchors,
    })
}
