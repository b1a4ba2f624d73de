//! Clustering evaluation against gold relations.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::corpus::PairKey;
use crate::error::{Error, Result};

/// Gold relations per entity pair. A pair may carry several relations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GoldAssignment(pub BTreeMap<PairKey, Vec<String>>);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoldRecord {
    pub pair: PairKey,
    pub relations: Vec<String>,
}

impl GoldAssignment {
    pub fn from_records(records: impl IntoIterator<Item = GoldRecord>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for r in records {
            if r.relations.is_empty() || r.relations.iter().any(|n| n.trim().is_empty()) {
                return Err(Error::Validation(format!("gold entry {} has an empty relation list or name", r.pair)));
            }
            if map.insert(r.pair.clone(), r.relations).is_some() {
                return Err(Error::Validation(format!("duplicate gold entry for {}", r.pair)));
            }
        }
        Ok(GoldAssignment(map))
    }

    pub fn records(&self) -> impl Iterator<Item = GoldRecord> + '_ {
        self.0.iter().map(|(pair, relations)| GoldRecord { pair: pair.clone(), relations: relations.clone() })
    }

    /// Distinct relation names, sorted.
    pub fn relation_names(&self) -> Vec<String> {
        self.0.values().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn get(&self, pair: &PairKey) -> Option<&[String]> {
        self.0.get(pair).map(Vec::as_slice)
    }

    /// One block per pair: its first listed relation.
    pub fn primary(&self, pair: &PairKey) -> Option<&str> {
        self.get(pair).map(|r| r[0].as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationScore {
    pub relation: String,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

impl RelationScore {
    pub fn new(relation: impl Into<String>, correct: usize, predicted: usize, gold: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(correct, predicted);
        let recall = ratio(correct, gold);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        RelationScore { relation: relation.into(), recall, precision, f1 }
    }
}

fn choose2(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Fraction of item pairs on which the two labelings agree (same block in
/// both, or different blocks in both). Items are matched by position.
pub fn rand_index<A, B>(predicted: &[A], gold: &[B]) -> Result<f64>
where
    A: Eq + Hash,
    B: Eq + Hash,
{
    if predicted.len() != gold.len() {
        return Err(Error::Validation(format!(
            "partitions cover different item sets ({} vs {} items)",
            predicted.len(),
            gold.len()
        )));
    }
    let n = predicted.len() as u64;
    if n < 2 {
        return Err(Error::Validation("rand index needs at least 2 items".into()));
    }
    let mut joint: HashMap<(&A, &B), u64> = HashMap::new();
    let mut rows: HashMap<&A, u64> = HashMap::new();
    let mut cols: HashMap<&B, u64> = HashMap::new();
    for (a, b) in predicted.iter().zip(gold) {
        *joint.entry((a, b)).or_default() += 1;
        *rows.entry(a).or_default() += 1;
        *cols.entry(b).or_default() += 1;
    }
    let both: u64 = joint.values().map(|&c| choose2(c)).sum();
    let pred_together: u64 = rows.values().map(|&c| choose2(c)).sum();
    let gold_together: u64 = cols.values().map(|&c| choose2(c)).sum();
    let total = choose2(n);
    let apart_both = total + both - pred_together - gold_together;
    Ok((both + apart_both) as f64 / total as f64)
}

/// [`rand_index`] over keyed labelings; the key sets must be identical.
pub fn rand_index_keyed<K, A, B>(predicted: &BTreeMap<K, A>, gold: &BTreeMap<K, B>) -> Result<f64>
where
    K: Ord + std::fmt::Debug,
    A: Eq + Hash,
    B: Eq + Hash,
{
    if predicted.len() != gold.len() || predicted.keys().zip(gold.keys()).any(|(a, b)| a != b) {
        let missing = predicted
            .keys()
            .find(|k| !gold.contains_key(k))
            .or_else(|| gold.keys().find(|k| !predicted.contains_key(k)));
        return Err(Error::Validation(format!("partitions cover different item sets (e.g. {missing:?})")));
    }
    let a: Vec<&A> = predicted.values().collect();
    let b: Vec<&B> = gold.values().collect();
    rand_index(&a, &b)
}

/// Per-relation recall, precision and F1.
///
/// `predicted` maps each evaluated pair to the relation of its cluster. A
/// prediction is correct when it is among the pair's gold relations.
/// Relations without any gold pair are dropped with a warning.
pub fn prf1(predicted: &BTreeMap<PairKey, String>, gold: &GoldAssignment) -> Result<Vec<RelationScore>> {
    let mut predicted_count: BTreeMap<&str, usize> = BTreeMap::new();
    let mut correct: BTreeMap<&str, usize> = BTreeMap::new();
    let mut gold_count: BTreeMap<&str, usize> = BTreeMap::new();
    for (pair, rel) in predicted {
        let g = gold.get(pair).ok_or_else(|| Error::Validation(format!("pair {pair} has no gold relation")))?;
        *predicted_count.entry(rel).or_default() += 1;
        if g.iter().any(|r| r == rel) {
            *correct.entry(rel).or_default() += 1;
        }
        for r in g.iter().collect::<BTreeSet<_>>() {
            *gold_count.entry(r).or_default() += 1;
        }
    }
    for rel in predicted_count.keys().filter(|r| !gold_count.contains_key(*r)) {
        log::warn!("relation {rel:?} has no gold pairs; excluded from scoring");
    }
    Ok(gold_count
        .iter()
        .map(|(rel, &g)| {
            RelationScore::new(
                *rel,
                correct.get(rel).copied().unwrap_or(0),
                predicted_count.get(rel).copied().unwrap_or(0),
                g,
            )
        })
        .collect())
}
