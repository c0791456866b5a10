//! TREC Session Track log reader and writer.
//!
//! Handles the 2011–2014 layouts: sessions carry their id in `num` (or `id`),
//! the topic either as a `topic` attribute or a `<topic num=..>` child,
//! results identify documents via `<clueweb09id>`, `<clueweb12id>` or
//! `<docno>`, and clicks reference results by `<rank>` (or docno). A click is
//! satisfied when it has `sat="1"`/`sat="true"`, or, lacking that attribute,
//! when its dwell time (`endtime - starttime`) is at least [`SAT_DWELL_SECS`].

use std::collections::HashSet;
use std::fmt::Write as _;

use roxmltree::{Document, Node};

use super::types::{Interaction, Query, ResultEntry, Session};
use crate::error::{Error, Result};
use crate::textindex::Tokenizer;

pub const SAT_DWELL_SECS: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedSession {
    pub session_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedLog {
    pub sessions: Vec<Session>,
    pub skipped: Vec<SkippedSession>,
    pub warnings: Vec<String>,
}

fn line_of(doc: &Document, node: Node) -> u32 {
    doc.text_pos_at(node.range().start).row
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.has_tag_name(name))
}

fn children<'a, 'i: 'a>(node: Node<'a, 'i>, name: &'a str) -> impl Iterator<Item = Node<'a, 'i>> + 'a {
    node.children().filter(move |c| c.has_tag_name(name))
}

/// Concatenated text content of an element, trimmed.
fn text(node: Option<Node>) -> String {
    node.map(|n| {
        n.descendants()
            .filter(|d| d.is_text())
            .filter_map(|d| d.text())
            .collect::<String>()
            .trim()
            .to_string()
    })
    .unwrap_or_default()
}

fn result_docno(node: Node) -> String {
    for tag in ["docno", "clueweb12id", "clueweb09id"] {
        let t = text(child(node, tag));
        if !t.is_empty() {
            return t;
        }
    }
    text(child(node, "url"))
}

fn is_sat(click: Node) -> bool {
    if let Some(flag) = click.attribute("sat") {
        return matches!(flag.trim(), "1" | "true" | "yes");
    }
    let start = click.attribute("starttime").and_then(|s| s.trim().parse::<f64>().ok());
    let end = click.attribute("endtime").and_then(|s| s.trim().parse::<f64>().ok());
    matches!((start, end), (Some(s), Some(e)) if e - s >= SAT_DWELL_SECS)
}

fn parse_interaction(
    doc: &Document,
    node: Node,
    tokenizer: &Tokenizer,
    session_id: &str,
    warnings: &mut Vec<String>,
) -> Result<Interaction> {
    let query = Query::new(&text(child(node, "query")), tokenizer);
    if query.is_empty() {
        warnings.push(format!(
            "session {session_id}: empty query at line {}",
            line_of(doc, node)
        ));
    }
    let mut serp = Vec::new();
    if let Some(results) = child(node, "results") {
        for (pos, r) in children(results, "result").enumerate() {
            let rank = match r.attribute("rank") {
                Some(v) => v.trim().parse::<u32>().map_err(|_| Error::Xml {
                    line: line_of(doc, r),
                    message: format!("invalid result rank {v:?}"),
                })?,
                None => pos as u32 + 1,
            };
            serp.push((
                line_of(doc, r),
                ResultEntry {
                    docno: result_docno(r),
                    rank,
                    url: text(child(r, "url")),
                    title: text(child(r, "title")),
                    snippet: text(child(r, "snippet")),
                    clicked: false,
                    sat_click: false,
                },
            ));
        }
    }
    serp.sort_by_key(|(_, e)| e.rank);
    let mut prev = 0;
    for (line, e) in &serp {
        if e.rank <= prev {
            return Err(Error::Xml {
                line: *line,
                message: format!("result ranks must be distinct and >= 1 (saw {})", e.rank),
            });
        }
        prev = e.rank;
    }
    let mut serp: Vec<ResultEntry> = serp.into_iter().map(|(_, e)| e).collect();

    if let Some(clicked) = child(node, "clicked") {
        for click in children(clicked, "click") {
            let rank_text = text(child(click, "rank"));
            let target = if !rank_text.is_empty() {
                let rank: u32 = rank_text.parse().map_err(|_| Error::Xml {
                    line: line_of(doc, click),
                    message: format!("invalid click rank {rank_text:?}"),
                })?;
                serp.iter_mut().find(|e| e.rank == rank)
            } else {
                let d = result_docno(click);
                serp.iter_mut().find(|e| !d.is_empty() && e.docno == d)
            };
            match target {
                Some(e) => {
                    e.clicked = true;
                    e.sat_click |= is_sat(click);
                }
                None => warnings.push(format!(
                    "session {session_id}: click at line {} references no result",
                    line_of(doc, click)
                )),
            }
        }
    }
    Ok(Interaction { query, serp })
}

/// Parses a session log. Sessions without a usable current query are skipped
/// and listed in [`ParsedLog::skipped`].
pub fn parse_sessions(xml: &str, tokenizer: &Tokenizer) -> Result<ParsedLog> {
    let doc = Document::parse(xml).map_err(|e| Error::Xml {
        line: e.pos().row,
        message: e.to_string(),
    })?;
    let mut log = ParsedLog::default();
    let mut seen = HashSet::new();
    for node in doc.root_element().children().filter(|n| n.has_tag_name("session")) {
        let session_id = node
            .attribute("num")
            .or_else(|| node.attribute("id"))
            .map(|s| s.trim().to_string())
            .ok_or_else(|| Error::Xml {
                line: line_of(&doc, node),
                message: "session without num/id attribute".into(),
            })?;
        if !seen.insert(session_id.clone()) {
            return Err(Error::Xml {
                line: line_of(&doc, node),
                message: format!("duplicate session id {session_id}"),
            });
        }
        let topic_id = node
            .attribute("topic")
            .map(str::to_string)
            .or_else(|| child(node, "topic").and_then(|t| t.attribute("num").map(str::to_string)))
            .map(|t| t.trim().to_string());
        let mut history = Vec::new();
        for inter in children(node, "interaction") {
            history.push(parse_interaction(
                &doc,
                inter,
                tokenizer,
                &session_id,
                &mut log.warnings,
            )?);
        }
        let Some(current) = child(node, "currentquery") else {
            log.skipped.push(SkippedSession {
                session_id,
                reason: "missing <currentquery>".into(),
            });
            continue;
        };
        let current_query = Query::new(&text(child(current, "query")), tokenizer);
        if current_query.is_empty() {
            log.skipped.push(SkippedSession {
                session_id,
                reason: "current query is empty after tokenization".into(),
            });
            continue;
        }
        log.sessions.push(Session {
            session_id,
            topic_id,
            history,
            current_query,
        });
    }
    Ok(log)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Serializes sessions in the canonical layout accepted by [`parse_sessions`].
pub fn write_sessions(sessions: &[Session]) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<sessiontrack>\n");
    for s in sessions {
        let topic = s
            .topic_id
            .as_ref()
            .map(|t| format!(" topic=\"{}\"", escape(t)))
            .unwrap_or_default();
        let _ = writeln!(out, "<session num=\"{}\"{topic}>", escape(&s.session_id));
        for (i, inter) in s.history.iter().enumerate() {
            let _ = writeln!(out, "  <interaction num=\"{}\">", i + 1);
            let _ = writeln!(out, "    <query>{}</query>", escape(&inter.query.text));
            out.push_str("    <results>\n");
            for r in &inter.serp {
                let _ = writeln!(
                    out,
                    "      <result rank=\"{}\"><url>{}</url><docno>{}</docno><title>{}</title><snippet>{}</snippet></result>",
                    r.rank,
                    escape(&r.url),
                    escape(&r.docno),
                    escape(&r.title),
                    escape(&r.snippet)
                );
            }
            out.push_str("    </results>\n");
            let clicks: Vec<&ResultEntry> = inter.serp.iter().filter(|r| r.clicked).collect();
            if !clicks.is_empty() {
                out.push_str("    <clicked>\n");
                for (n, r) in clicks.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "      <click num=\"{}\" sat=\"{}\"><rank>{}</rank></click>",
                        n + 1,
                        u8::from(r.sat_click),
                        r.rank
                    );
                }
                out.push_str("    </clicked>\n");
            }
            out.push_str("  </interaction>\n");
        }
        let _ = writeln!(
            out,
            "  <currentquery><query>{}</query></currentquery>",
            escape(&s.current_query.text)
        );
        out.push_str("</session>\n");
    }
    out.push_str("</sessiontrack>\n");
    out
}
