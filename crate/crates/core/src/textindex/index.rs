use std::collections::HashMap;

use rayon::prelude::*;

use super::corpus::{CorpusRecord, SpamScores};
use super::tokenizer::{Term, Tokenizer, TokenizerConfig};
use crate::error::{Error, Result};

/// Default spam percentile cut-off: documents scoring below it are dropped.
pub const DEFAULT_SPAM_THRESHOLD: u8 = 70;

/// Dense document id. Ids follow ascending docno order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DocId(pub u32);

/// Dense term id. Ids follow ascending lexicographic term order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermId(pub u32);

/// A tokenized document with a per-term position list.
///
/// Terms are stored sorted by id; `offsets[i]..offsets[i + 1]` delimits the
/// positions of `terms[i]` in `positions`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    docno: String,
    length: u32,
    terms: Vec<TermId>,
    offsets: Vec<u32>,
    positions: Vec<u32>,
}

impl Document {
    pub(crate) fn from_token_ids(docno: String, tokens: &[TermId]) -> Self {
        let mut pairs: Vec<(TermId, u32)> = tokens
            .iter()
            .enumerate()
            .map(|(p, &t)| (t, p as u32))
            .collect();
        pairs.sort_unstable();
        let mut terms = Vec::new();
        let mut offsets = vec![0u32];
        let mut positions = Vec::with_capacity(pairs.len());
        for (t, p) in pairs {
            if terms.last() != Some(&t) {
                if !terms.is_empty() {
                    offsets.push(positions.len() as u32);
                }
                terms.push(t);
            }
            positions.push(p);
        }
        if !terms.is_empty() {
            offsets.push(positions.len() as u32);
        }
        Document {
            docno,
            length: tokens.len() as u32,
            terms,
            offsets,
            positions,
        }
    }

    /// Rebuilds a document from `(term, positions)` groups, validating invariants.
    pub(crate) fn from_groups(docno: String, groups: Vec<(TermId, Vec<u32>)>) -> Result<Self> {
        let mut terms = Vec::with_capacity(groups.len());
        let mut offsets = vec![0u32];
        let mut positions = Vec::new();
        for (t, ps) in groups {
            if terms.last().is_some_and(|last| *last >= t) {
                return Err(Error::IndexFormat(format!(
                    "document {docno}: term ids not strictly increasing"
                )));
            }
            if ps.is_empty() || ps.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::IndexFormat(format!(
                    "document {docno}: positions must be non-empty and strictly increasing"
                )));
            }
            terms.push(t);
            positions.extend_from_slice(&ps);
            offsets.push(positions.len() as u32);
        }
        let length = positions.len() as u32;
        let mut seen = positions.clone();
        seen.sort_unstable();
        if seen.iter().enumerate().any(|(i, &p)| p != i as u32) {
            return Err(Error::IndexFormat(format!(
                "document {docno}: positions do not cover 0..{length}"
            )));
        }
        Ok(Document {
            docno,
            length,
            terms,
            offsets,
            positions,
        })
    }

    pub fn docno(&self) -> &str {
        &self.docno
    }

    /// Token count |d|.
    pub fn length(&self) -> u32 {
        self.length
    }

    pub fn unique_terms(&self) -> usize {
        self.terms.len()
    }

    fn slot(&self, term: TermId) -> Option<usize> {
        self.terms.binary_search(&term).ok()
    }

    pub fn term_freq(&self, term: TermId) -> u32 {
        self.slot(term)
            .map(|i| self.offsets[i + 1] - self.offsets[i])
            .unwrap_or(0)
    }

    pub fn positions(&self, term: TermId) -> &[u32] {
        match self.slot(term) {
            Some(i) => &self.positions[self.offsets[i] as usize..self.offsets[i + 1] as usize],
            None => &[],
        }
    }

    /// `(term, tf)` pairs in ascending term id order.
    pub fn term_freqs(&self) -> impl Iterator<Item = (TermId, u32)> + '_ {
        self.terms
            .iter()
            .enumerate()
            .map(|(i, &t)| (t, self.offsets[i + 1] - self.offsets[i]))
    }

    /// Exact contiguous occurrences of the term sequence (overlaps counted).
    pub fn phrase_freq_ids(&self, ngram: &[TermId]) -> u32 {
        let Some((first, rest)) = ngram.split_first() else {
            return 0;
        };
        let tails: Vec<&[u32]> = rest.iter().map(|&t| self.positions(t)).collect();
        if tails.iter().any(|p| p.is_empty()) {
            return 0;
        }
        self.positions(*first)
            .iter()
            .filter(|&&p| {
                tails
                    .iter()
                    .enumerate()
                    .all(|(j, ps)| ps.binary_search(&(p + j as u32 + 1)).is_ok())
            })
            .count() as u32
    }

    /// The document's token sequence reconstructed from positions.
    pub fn token_ids(&self) -> Vec<TermId> {
        let mut out = vec![TermId(0); self.length as usize];
        for (i, &t) in self.terms.iter().enumerate() {
            for &p in &self.positions[self.offsets[i] as usize..self.offsets[i + 1] as usize] {
                out[p as usize] = t;
            }
        }
        out
    }

    pub(crate) fn groups(&self) -> impl Iterator<Item = (TermId, &[u32])> + '_ {
        self.terms.iter().enumerate().map(|(i, &t)| {
            (
                t,
                &self.positions[self.offsets[i] as usize..self.offsets[i + 1] as usize],
            )
        })
    }

    fn heap_bytes(&self) -> usize {
        self.docno.capacity()
            + self.terms.capacity() * 4
            + self.offsets.capacity() * 4
            + self.positions.capacity() * 4
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollectionStats {
    pub num_docs: u32,
    pub total_terms: u64,
    /// Indexed by `TermId`.
    pub doc_freq: Vec<u32>,
    /// Indexed by `TermId`.
    pub coll_freq: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BuildReport {
    pub input_docs: usize,
    pub spam_filtered: usize,
    pub indexed: usize,
}

/// Positional inverted index over an immutable document collection.
#[derive(Debug, Clone)]
pub struct Index {
    tokenizer: Tokenizer,
    vocab: Vec<Term>,
    term_ids: HashMap<Term, TermId>,
    documents: Vec<Document>,
    docno_ids: HashMap<String, DocId>,
    postings: Vec<Vec<DocId>>,
    stats: CollectionStats,
}

/// Builds an index, dropping documents whose spam score is below `threshold`.
///
/// Documents without a spam score are kept.
pub fn build_index<I>(
    corpus: I,
    spam: Option<&SpamScores>,
    threshold: u8,
    tokenizer: TokenizerConfig,
) -> Result<(Index, BuildReport)>
where
    I: IntoIterator<Item = CorpusRecord>,
{
    if threshold > 100 {
        return Err(Error::InvalidConfig(format!(
            "spam threshold {threshold} outside 0..=100"
        )));
    }
    let mut records: Vec<CorpusRecord> = corpus.into_iter().collect();
    let input_docs = records.len();
    records.sort_by(|a, b| a.docno.cmp(&b.docno));
    if let Some(w) = records.windows(2).find(|w| w[0].docno == w[1].docno) {
        return Err(Error::DuplicateDocno(w[0].docno.clone()));
    }
    if let Some(spam) = spam {
        records.retain(|r| spam.get(&r.docno).is_none_or(|s| s >= threshold));
    }
    let spam_filtered = input_docs - records.len();

    let tok = Tokenizer::new(tokenizer);
    let token_lists: Vec<Vec<Term>> = records.par_iter().map(|r| tok.tokenize(&r.text)).collect();

    let mut vocab: Vec<Term> = token_lists
        .par_iter()
        .fold(std::collections::HashSet::new, |mut acc, toks| {
            acc.extend(toks.iter().map(String::as_str));
            acc
        })
        .reduce(std::collections::HashSet::new, |mut a, b| {
            a.extend(b);
            a
        })
        .into_iter()
        .map(str::to_string)
        .collect();
    vocab.sort_unstable();
    let term_ids: HashMap<Term, TermId> = vocab
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), TermId(i as u32)))
        .collect();

    let documents: Vec<Document> = records
        .into_par_iter()
        .zip(token_lists.into_par_iter())
        .map(|(rec, toks)| {
            let ids: Vec<TermId> = toks.iter().map(|t| term_ids[t]).collect();
            Document::from_token_ids(rec.docno, &ids)
        })
        .collect();
    let indexed = documents.len();
    let index = Index::assemble(tok, vocab, term_ids, documents);
    Ok((
        index,
        BuildReport {
            input_docs,
            spam_filtered,
            indexed,
        },
    ))
}

impl Index {
    /// Builds from already-tokenized parts; documents must be in ascending docno order.
    pub(crate) fn from_parts(
        tokenizer: Tokenizer,
        vocab: Vec<Term>,
        documents: Vec<Document>,
    ) -> Result<Self> {
        if vocab.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::IndexFormat("vocabulary not sorted".into()));
        }
        if documents.windows(2).any(|w| w[0].docno >= w[1].docno) {
            return Err(Error::IndexFormat(
                "documents not in strictly ascending docno order".into(),
            ));
        }
        let nv = vocab.len() as u32;
        if documents
            .iter()
            .any(|d| d.terms.last().is_some_and(|t| t.0 >= nv))
        {
            return Err(Error::IndexFormat("term id out of vocabulary range".into()));
        }
        let term_ids = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), TermId(i as u32)))
            .collect();
        Ok(Self::assemble(tokenizer, vocab, term_ids, documents))
    }

    fn assemble(
        tokenizer: Tokenizer,
        vocab: Vec<Term>,
        term_ids: HashMap<Term, TermId>,
        documents: Vec<Document>,
    ) -> Self {
        let mut postings: Vec<Vec<DocId>> = vec![Vec::new(); vocab.len()];
        let mut coll_freq = vec![0u64; vocab.len()];
        let mut total_terms = 0u64;
        for (i, doc) in documents.iter().enumerate() {
            total_terms += u64::from(doc.length);
            for (t, tf) in doc.term_freqs() {
                postings[t.0 as usize].push(DocId(i as u32));
                coll_freq[t.0 as usize] += u64::from(tf);
            }
        }
        let doc_freq = postings.iter().map(|p| p.len() as u32).collect();
        let docno_ids = documents
            .iter()
            .enumerate()
            .map(|(i, d)| (d.docno.clone(), DocId(i as u32)))
            .collect();
        let stats = CollectionStats {
            num_docs: documents.len() as u32,
            total_terms,
            doc_freq,
            coll_freq,
        };
        Index {
            tokenizer,
            vocab,
            term_ids,
            documents,
            docno_ids,
            postings,
            stats,
        }
    }

    pub fn tokenizer(&self) -> &Tokenizer {
        &self.tokenizer
    }

    pub fn fingerprint(&self) -> String {
        self.tokenizer.config().fingerprint()
    }

    pub fn stats(&self) -> &CollectionStats {
        &self.stats
    }

    pub fn num_docs(&self) -> usize {
        self.documents.len()
    }

    pub fn vocab(&self) -> &[Term] {
        &self.vocab
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn term_id(&self, term: &str) -> Option<TermId> {
        self.term_ids.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.vocab[id.0 as usize]
    }

    pub fn doc_id(&self, docno: &str) -> Option<DocId> {
        self.docno_ids.get(docno).copied()
    }

    pub fn doc(&self, id: DocId) -> Result<&Document> {
        self.documents
            .get(id.0 as usize)
            .ok_or_else(|| Error::UnknownDoc(format!("#{}", id.0)))
    }

    pub fn doc_by_docno(&self, docno: &str) -> Result<&Document> {
        self.doc_id(docno)
            .map(|id| &self.documents[id.0 as usize])
            .ok_or_else(|| Error::UnknownDoc(docno.to_string()))
    }

    pub fn postings(&self, term: TermId) -> &[DocId] {
        &self.postings[term.0 as usize]
    }

    pub fn doc_freq(&self, term: &str) -> u32 {
        self.term_id(term)
            .map(|t| self.stats.doc_freq[t.0 as usize])
            .unwrap_or(0)
    }

    pub fn coll_freq(&self, term: &str) -> u64 {
        self.term_id(term)
            .map(|t| self.stats.coll_freq[t.0 as usize])
            .unwrap_or(0)
    }

    /// Collection-probability floor ε_c = 0.5 / total_terms for unseen entities.
    pub fn oov_floor(&self) -> f64 {
        0.5 / self.stats.total_terms.max(1) as f64
    }

    /// Collection probability P_c(t) = cf / total_terms, floored at ε_c.
    pub fn coll_term_prob(&self, term: &str) -> f64 {
        match self.term_id(term) {
            Some(t) => self.coll_term_prob_id(t),
            None => self.oov_floor(),
        }
    }

    pub(crate) fn coll_term_prob_id(&self, term: TermId) -> f64 {
        let cf = self.stats.coll_freq[term.0 as usize];
        if cf == 0 {
            self.oov_floor()
        } else {
            cf as f64 / self.stats.total_terms as f64
        }
    }

    /// Resolves every term of an n-gram; `None` if any is out of vocabulary.
    pub fn resolve(&self, terms: &[Term]) -> Option<Vec<TermId>> {
        terms.iter().map(|t| self.term_id(t)).collect()
    }

    pub fn phrase_freq(&self, doc: DocId, ngram: &[Term]) -> Result<u32> {
        if ngram.len() < 2 {
            return Err(Error::NgramTooShort(ngram.len()));
        }
        let d = self.doc(doc)?;
        Ok(self
            .resolve(ngram)
            .map(|ids| d.phrase_freq_ids(&ids))
            .unwrap_or(0))
    }

    /// Number of n-gram windows across the collection: Σ_d max(0, |d| − n + 1).
    pub fn window_count(&self, n: usize) -> u64 {
        self.documents
            .iter()
            .map(|d| (d.length as u64 + 1).saturating_sub(n as u64))
            .sum()
    }

    pub(crate) fn coll_phrase_freq_ids(&self, ngram: &[TermId]) -> u64 {
        let Some(rarest) = ngram.iter().min_by_key(|t| self.postings(**t).len()) else {
            return 0;
        };
        self.postings(*rarest)
            .iter()
            .map(|&d| u64::from(self.documents[d.0 as usize].phrase_freq_ids(ngram)))
            .sum()
    }

    /// Collection probability of an n-gram over all windows of its length, floored at ε_c.
    pub fn coll_phrase_prob(&self, ngram: &[Term]) -> Result<f64> {
        if ngram.len() < 2 {
            return Err(Error::NgramTooShort(ngram.len()));
        }
        let hits = self
            .resolve(ngram)
            .map(|ids| self.coll_phrase_freq_ids(&ids))
            .unwrap_or(0);
        let windows = self.window_count(ngram.len());
        if hits == 0 || windows == 0 {
            Ok(self.oov_floor())
        } else {
            Ok(hits as f64 / windows as f64)
        }
    }

    /// Approximate heap footprint in bytes.
    pub fn heap_size_bytes(&self) -> usize {
        let docs: usize = self.documents.iter().map(Document::heap_bytes).sum();
        let vocab: usize = self.vocab.iter().map(|t| 2 * t.capacity() + 48).sum();
        let postings: usize = self.postings.iter().map(|p| p.capacity() * 4 + 24).sum();
        let docnos: usize = self.documents.iter().map(|d| d.docno.len() + 40).sum();
        docs + vocab
            + postings
            + docnos
            + self.stats.doc_freq.capacity() * 4
            + self.stats.coll_freq.capacity() * 8
    }
}
