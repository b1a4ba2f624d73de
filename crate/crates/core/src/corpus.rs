//! Corpus ingestion: one JSON record per (sentence, entity pair) instance.
//!
//! ```text
//! {"id": "s1", "tokens": [{"text": "Reagan", "pos": "PROPN", "dep": "nsubj", "head": 1}, ...],
//!  "subject": {"start": 0, "end": 1, "canonical": "Reagan"}, "object": {...}}
//! ```
//!
//! Heads are 0-based token indices; the root token has `head == -1` and
//! `dep == "ROOT"`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ssp::{self, SspTriple};

pub const ROOT_DEP: &str = "ROOT";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub pos: String,
    pub dep: String,
    pub head: i64,
}

impl Token {
    pub fn is_root(&self) -> bool {
        self.head == -1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub canonical: String,
}

impl EntitySpan {
    pub fn contains(&self, idx: usize) -> bool {
        (self.start..self.end).contains(&idx)
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn overlaps(&self, other: &EntitySpan) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedSentence {
    pub id: String,
    pub tokens: Vec<Token>,
    pub subject: EntitySpan,
    pub object: EntitySpan,
}

/// Ordered entity pair, serialized as `[subject, object]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairKey(pub String, pub String);

impl PairKey {
    pub fn subject(&self) -> &str {
        &self.0
    }

    pub fn object(&self) -> &str {
        &self.1
    }
}

impl std::fmt::Display for PairKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.0, self.1)
    }
}

/// One extracted path together with the pair it belongs to. This is the
/// record written by `extract-paths`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathInstance {
    pub pair: PairKey,
    #[serde(flatten)]
    pub path: SspTriple,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairGroup {
    pub pair: PairKey,
    pub paths: Vec<SspTriple>,
}

/// Collapse internal whitespace runs to single spaces; case is kept.
pub fn canonicalize(surface: &str) -> String {
    surface.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl ParsedSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn pair_key(&self) -> PairKey {
        PairKey(self.subject.canonical.clone(), self.object.canonical.clone())
    }

    /// Check the tree and span invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.tokens.len();
        if n == 0 {
            return Err(Error::Validation("sentence has no tokens".into()));
        }
        let mut root = None;
        for (i, tok) in self.tokens.iter().enumerate() {
            if tok.is_root() {
                if tok.dep != ROOT_DEP {
                    return Err(Error::Validation(format!(
                        "token {i} has head -1 but dep {:?}, expected \"ROOT\"",
                        tok.dep
                    )));
                }
                if let Some(r) = root {
                    return Err(Error::Validation(format!("multiple roots: tokens {r} and {i}")));
                }
                root = Some(i);
            } else {
                if tok.dep == ROOT_DEP {
                    return Err(Error::Validation(format!("token {i} has dep ROOT but head {}", tok.head)));
                }
                if tok.head < 0 || tok.head as usize >= n {
                    return Err(Error::Validation(format!("token {i} head {} out of range", tok.head)));
                }
                if tok.head as usize == i {
                    return Err(Error::Validation(format!("token {i} is its own head")));
                }
            }
        }
        if root.is_none() {
            return Err(Error::Validation("no root token".into()));
        }
        // every token must reach the root in at most n steps
        for start in 0..n {
            let mut cur = start;
            let mut steps = 0;
            while !self.tokens[cur].is_root() {
                cur = self.tokens[cur].head as usize;
                steps += 1;
                if steps > n {
                    return Err(Error::Validation(format!("cyclic head links through token {start}")));
                }
            }
        }
        for (name, span) in [("subject", &self.subject), ("object", &self.object)] {
            if span.start >= span.end {
                return Err(Error::Validation(format!("{name}: empty span ({}, {})", span.start, span.end)));
            }
            if span.end > n {
                return Err(Error::Validation(format!(
                    "{name}: span ({}, {}) out of range for {n} tokens",
                    span.start, span.end
                )));
            }
            if span.canonical.trim().is_empty() {
                return Err(Error::Validation(format!("{name}: empty canonical key")));
            }
        }
        if self.subject.overlaps(&self.object) {
            return Err(Error::Validation("subject and object spans overlap".into()));
        }
        Ok(())
    }

    /// Serialize to one corpus record line (no trailing newline).
    pub fn to_record(&self) -> String {
        serde_json::to_string(self).expect("sentence serializes")
    }
}

/// Parse and validate a single record. Canonical keys are normalized.
pub fn parse_record(line: &str) -> Result<ParsedSentence, String> {
    let mut sent: ParsedSentence = serde_json::from_str(line).map_err(|e| e.to_string())?;
    sent.subject.canonical = canonicalize(&sent.subject.canonical);
    sent.object.canonical = canonicalize(&sent.object.canonical);
    sent.validate().map_err(|e| match e {
        Error::Validation(msg) => msg,
        other => other.to_string(),
    })?;
    Ok(sent)
}

pub fn parse_corpus_str(text: &str) -> Result<Vec<ParsedSentence>> {
    let lines: Vec<(usize, &str)> =
        text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).map(|(i, l)| (i + 1, l)).collect();
    let parsed: Vec<(usize, Result<ParsedSentence, String>)> =
        lines.par_iter().map(|&(no, l)| (no, parse_record(l))).collect();
    parsed.into_iter().map(|(line, r)| r.map_err(|reason| Error::Parse { line, reason })).collect()
}

pub fn parse_corpus(path: impl AsRef<Path>) -> Result<Vec<ParsedSentence>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::NotFound { what: "corpus", path: path.to_path_buf() });
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus_str(&text)
}

/// Extract the shortest path of every sentence, in input order.
pub fn extract_instances(sentences: &[ParsedSentence]) -> Result<Vec<PathInstance>> {
    sentences
        .par_iter()
        .map(|s| {
            let path = ssp::shortest_path(s).map_err(|e| match e {
                Error::Validation(msg) => Error::Validation(format!("sentence {}: {msg}", s.id)),
                other => other,
            })?;
            Ok(PathInstance { pair: s.pair_key(), path })
        })
        .collect()
}

/// Group path instances by ordered pair and keep groups with at least
/// `min_paths` paths.
///
/// Groups come back sorted by key and the paths inside a group are sorted
/// too, so the result does not depend on input order.
pub fn group_pairs<I>(instances: I, min_paths: usize) -> Vec<PairGroup>
where
    I: IntoIterator<Item = PathInstance>,
{
    let mut by_pair: BTreeMap<PairKey, Vec<SspTriple>> = BTreeMap::new();
    for inst in instances {
        by_pair.entry(inst.pair).or_default().push(inst.path);
    }
    by_pair
        .into_iter()
        .filter(|(_, paths)| paths.len() >= min_paths.max(1))
        .map(|(pair, mut paths)| {
            paths.sort();
            PairGroup { pair, paths }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn reagan() -> ParsedSentence {
        let toks = [
            ("Ronald", "PROPN", "compound", 1),
            ("Reagan", "PROPN", "nsubj", 2),
            ("served", "VERB", "ROOT", -1),
            ("as", "ADP", "prep", 2),
            ("the", "DET", "det", 6),
            ("40th", "ADJ", "amod", 6),
            ("president", "NOUN", "pobj", 3),
            ("of", "ADP", "prep", 6),
            ("the", "DET", "det", 10),
            ("United", "PROPN", "compound", 10),
            ("States", "PROPN", "pobj", 7),
        ];
        ParsedSentence {
            id: "reagan".into(),
            tokens: toks
                .iter()
                .map(|&(t, p, d, h)| Token { text: t.into(), pos: p.into(), dep: d.into(), head: h })
                .collect(),
            subject: EntitySpan { start: 0, end: 2, canonical: "Ronald Reagan".into() },
            object: EntitySpan { start: 8, end: 11, canonical: "the United States".into() },
        }
    }

    #[test]
    fn reagan_record_parses() {
        let line = reagan().to_record();
        let parsed = parse_corpus_str(&line).unwrap();
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed[0].tokens.len(), 11);
        let root: Vec<_> = parsed[0].tokens.iter().filter(|t| t.is_root()).collect();
        assert_eq!(root.len(), 1);
        assert_eq!(root[0].text, "served");
        assert_eq!(root[0].dep, "ROOT");
    }

    #[test]
    fn empty_input() {
        assert!(parse_corpus_str("").unwrap().is_empty());
        assert!(parse_corpus_str("\n\n").unwrap().is_empty());
    }

    #[test]
    fn empty_span_rejected() {
        let mut s = reagan();
        s.subject.start = 3;
        s.subject.end = 3;
        let err = parse_corpus_str(&s.to_record()).unwrap_err();
        assert!(err.to_string().contains("empty span"), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let good = reagan().to_record();
        let text = format!("{good}\n{{not json\n");
        match parse_corpus_str(&text).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn cycle_rejected() {
        let mut s = reagan();
        // Ronald -> Reagan -> Ronald
        s.tokens[1].head = 0;
        let err = parse_record(&s.to_record()).unwrap_err();
        assert!(err.contains("cyclic"), "{err}");
    }

    #[test]
    fn span_out_of_range() {
        let mut s = reagan();
        s.object.end = 12;
        assert!(parse_record(&s.to_record()).unwrap_err().contains("out of range"));
    }

    #[test]
    fn overlapping_spans() {
        let mut s = reagan();
        s.object = EntitySpan { start: 1, end: 3, canonical: "x".into() };
        assert!(parse_record(&s.to_record()).unwrap_err().contains("overlap"));
    }

    #[test]
    fn root_rules() {
        let mut s = reagan();
        s.tokens[3].head = -1;
        assert!(parse_record(&s.to_record()).is_err());
        let mut s = reagan();
        s.tokens[2].dep = "root".into();
        assert!(parse_record(&s.to_record()).is_err());
        let mut s = reagan();
        s.tokens[4].head = 4;
        assert!(parse_record(&s.to_record()).unwrap_err().contains("own head"));
    }

    #[test]
    fn canonical_whitespace_collapsed() {
        let mut s = reagan();
        s.subject.canonical = "  Ronald \t Reagan ".into();
        let p = parse_record(&s.to_record()).unwrap();
        assert_eq!(p.subject.canonical, "Ronald Reagan");
    }

    fn inst(s: &str, o: &str, w: &str) -> PathInstance {
        PathInstance {
            pair: PairKey(s.into(), o.into()),
            path: SspTriple {
                words: vec![s.into(), w.into(), o.into()],
                deps: vec!["nsubj".into(), "ROOT".into(), "dobj".into()],
                poss: vec!["PROPN".into(), "VERB".into(), "PROPN".into()],
            },
        }
    }

    #[test]
    fn grouping_threshold_and_direction() {
        let insts = vec![
            inst("A", "B", "x"),
            inst("A", "B", "y"),
            inst("C", "D", "x"),
            inst("A", "B", "z"),
            inst("B", "A", "x"),
            inst("B", "A", "w"),
        ];
        let groups = group_pairs(insts, 2);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].pair, PairKey("A".into(), "B".into()));
        assert_eq!(groups[0].paths.len(), 3);
        assert_eq!(groups[1].pair, PairKey("B".into(), "A".into()));
    }

    #[test]
    fn duplicates_are_kept() {
        let groups = group_pairs(vec![inst("A", "B", "x"), inst("A", "B", "x")], 2);
        assert_eq!(groups[0].paths.len(), 2);
    }
}
