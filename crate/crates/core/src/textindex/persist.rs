//! Single-file index persistence.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic    8 bytes  "SESHIDX\0"
//! version  u32
//! hlen     u32      length of the JSON header
//! header   hlen bytes of JSON (fingerprint, tokenizer config, counts)
//! vocab    num_terms × (u32 len, UTF-8 bytes), ascending
//! docs     num_docs × (u32 len, docno bytes, u32 n_terms,
//!                      n_terms × (u32 term_id, u32 tf, tf × u32 position))
//! ```
//!
//! Collection statistics and postings are recomputed on load; they are pure
//! integer functions of the documents so a reload scores bit-identically.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::index::{Document, Index, TermId};
use super::tokenizer::{Tokenizer, TokenizerConfig};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"SESHIDX\0";
const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    version: u32,
    fingerprint: String,
    tokenizer: TokenizerConfig,
    num_docs: u64,
    num_terms: u64,
    total_terms: u64,
}

fn put_u32(w: &mut impl Write, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_str(w: &mut impl Write, s: &str) -> std::io::Result<()> {
    put_u32(w, s.len() as u32)?;
    w.write_all(s.as_bytes())
}

pub fn write_index(index: &Index, w: &mut impl Write) -> std::io::Result<()> {
    let header = Header {
        version: VERSION,
        fingerprint: index.fingerprint(),
        tokenizer: index.tokenizer().config(),
        num_docs: index.num_docs() as u64,
        num_terms: index.vocab().len() as u64,
        total_terms: index.stats().total_terms,
    };
    let header = serde_json::to_vec(&header).expect("header serializes");
    w.write_all(MAGIC)?;
    put_u32(w, VERSION)?;
    put_u32(w, header.len() as u32)?;
    w.write_all(&header)?;
    for term in index.vocab() {
        put_str(w, term)?;
    }
    for doc in index.documents() {
        put_str(w, doc.docno())?;
        put_u32(w, doc.unique_terms() as u32)?;
        for (t, ps) in doc.groups() {
            put_u32(w, t.0)?;
            put_u32(w, ps.len() as u32)?;
            for &p in ps {
                put_u32(w, p)?;
            }
        }
    }
    Ok(())
}

pub fn save_index(index: &Index, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_index(index, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

struct Cursor<R> {
    inner: R,
}

impl<R: Read> Cursor<R> {
    fn u32(&mut self, what: &str) -> Result<u32> {
        let mut b = [0u8; 4];
        self.inner
            .read_exact(&mut b)
            .map_err(|_| Error::IndexFormat(format!("truncated while reading {what}")))?;
        Ok(u32::from_le_bytes(b))
    }

    fn bytes(&mut self, n: usize, what: &str) -> Result<Vec<u8>> {
        let mut b = vec![0u8; n];
        self.inner
            .read_exact(&mut b)
            .map_err(|_| Error::IndexFormat(format!("truncated while reading {what}")))?;
        Ok(b)
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let n = self.u32(what)? as usize;
        String::from_utf8(self.bytes(n, what)?)
            .map_err(|_| Error::IndexFormat(format!("{what} is not UTF-8")))
    }
}

pub fn read_index(r: impl Read) -> Result<Index> {
    let mut c = Cursor { inner: r };
    if c.bytes(8, "magic")?.as_slice() != MAGIC {
        return Err(Error::IndexFormat("not a sesh index file (bad magic)".into()));
    }
    let version = c.u32("version")?;
    if version != VERSION {
        return Err(Error::IndexFormat(format!(
            "unsupported index version {version} (expected {VERSION})"
        )));
    }
    let hlen = c.u32("header length")? as usize;
    let header: Header = serde_json::from_slice(&c.bytes(hlen, "header")?)
        .map_err(|e| Error::IndexFormat(format!("bad header: {e}")))?;
    if header.fingerprint != header.tokenizer.fingerprint() {
        return Err(Error::IndexFormat(format!(
            "fingerprint {:?} does not match tokenizer config {:?}",
            header.fingerprint,
            header.tokenizer.fingerprint()
        )));
    }
    let vocab = (0..header.num_terms)
        .map(|_| c.string("vocabulary term"))
        .collect::<Result<Vec<_>>>()?;
    let mut documents = Vec::with_capacity(header.num_docs as usize);
    for _ in 0..header.num_docs {
        let docno = c.string("docno")?;
        let n = c.u32("term count")?;
        let mut groups = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let t = c.u32("term id")?;
            let tf = c.u32("term frequency")?;
            let ps = (0..tf)
                .map(|_| c.u32("position"))
                .collect::<Result<Vec<_>>>()?;
            groups.push((TermId(t), ps));
        }
        documents.push(Document::from_groups(docno, groups)?);
    }
    let index = Index::from_parts(Tokenizer::new(header.tokenizer), vocab, documents)?;
    if index.stats().total_terms != header.total_terms {
        return Err(Error::IndexFormat(format!(
            "header total_terms {} disagrees with body {}",
            header.total_terms,
            index.stats().total_terms
        )));
    }
    Ok(index)
}

pub fn load_index(path: &Path) -> Result<Index> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_index(BufReader::new(file))
}
