//! Random dependency trees and a breadth-first path oracle.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use cure::corpus::{EntitySpan, ParsedSentence, Token};

const DEPS: &[&str] =
    &["nsubj", "nsubjpass", "dobj", "pobj", "amod", "nmod", "poss", "prep", "det", "compound", "advmod", "aux", "conj"];

/// Random tree: tokens attach to a token earlier in a random order.
pub fn random_sentence(rng: &mut ChaCha8Rng, max_len: usize) -> ParsedSentence {
    let n = rng.gen_range(2..=max_len);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut heads = vec![-1i64; n];
    for k in 1..n {
        heads[order[k]] = order[rng.gen_range(0..k)] as i64;
    }
    let tokens = (0..n)
        .map(|i| Token {
            text: format!("t{i}"),
            pos: ["NOUN", "VERB", "ADP", "PROPN"][i % 4].into(),
            dep: if heads[i] < 0 { "ROOT".into() } else { DEPS.choose(rng).unwrap().to_string() },
            head: heads[i],
        })
        .collect();
    // two disjoint spans of up to three tokens
    let a = rng.gen_range(1..=3.min(n - 1));
    let b = rng.gen_range(1..=3.min(n - a));
    let s_start = rng.gen_range(0..=n - a - b);
    let o_start = rng.gen_range(s_start + a..=n - b);
    let (subject, object) = if rng.gen_bool(0.5) {
        ((s_start, s_start + a), (o_start, o_start + b))
    } else {
        ((o_start, o_start + b), (s_start, s_start + a))
    };
    let span = |(s, e): (usize, usize)| EntitySpan { start: s, end: e, canonical: format!("e{s}_{e}") };
    ParsedSentence { id: "r".into(), tokens, subject: span(subject), object: span(object) }
}

/// Representative token, written out from the rule's statement.
pub fn oracle_rep(s: &ParsedSentence, span: &EntitySpan) -> usize {
    let idx: Vec<usize> = (span.start..span.end).collect();
    let prefs: [&[&str]; 3] =
        [&["nsubj", "nsubjpass", "csubj"], &["dobj", "pobj", "iobj", "obj"], &["amod", "nmod", "appos", "poss"]];
    for set in prefs {
        let hits: Vec<usize> = idx.iter().copied().filter(|&i| set.contains(&s.tokens[i].dep.as_str())).collect();
        if let Some(&last) = hits.last() {
            return last;
        }
    }
    let outside: Vec<usize> = idx
        .iter()
        .copied()
        .filter(|&i| s.tokens[i].head < 0 || !(span.start..span.end).contains(&(s.tokens[i].head as usize)))
        .collect();
    *outside.last().unwrap()
}

/// Breadth-first search over the undirected tree.
pub fn bfs_path(s: &ParsedSentence, from: usize, to: usize) -> Vec<usize> {
    let n = s.tokens.len();
    let mut adj = vec![Vec::new(); n];
    for (i, t) in s.tokens.iter().enumerate() {
        if t.head >= 0 {
            adj[i].push(t.head as usize);
            adj[t.head as usize].push(i);
        }
    }
    let mut prev = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                prev[v] = u;
                queue.push_back(v);
            }
        }
    }
    let mut path = vec![to];
    while *path.last().unwrap() != from {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    path
}

/// Word and dependency sequences of the oracle path.
pub fn oracle_path(s: &ParsedSentence) -> (Vec<String>, Vec<String>) {
    let idx = bfs_path(s, oracle_rep(s, &s.subject), oracle_rep(s, &s.object));
    (idx.iter().map(|&i| s.tokens[i].text.clone()).collect(), idx.iter().map(|&i| s.tokens[i].dep.clone()).collect())
}
