//! JSON Lines artifacts exchanged between pipeline stages.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::corpus::{PairGroup, PairKey, PathInstance};
use crate::error::{Error, Result};
use crate::eval::{GoldAssignment, GoldRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorRecord {
    pub pair: PairKey,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub cluster: usize,
    pub pair: PairKey,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidRecord {
    pub cluster: usize,
    pub size: usize,
    pub centroid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub cluster: usize,
    pub labels: Vec<(String, f64)>,
}

pub fn read_text(path: &Path, what: &'static str) -> Result<String> {
    if !path.exists() {
        return Err(Error::NotFound { what, path: path.to_path_buf() });
    }
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Blank lines are skipped; errors carry the 1-based line number.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Parse { line: i + 1, reason: e.to_string() }))
        .collect()
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path, what: &'static str) -> Result<Vec<T>> {
    let text = read_text(path, what)?;
    parse_jsonl(&text).map_err(|e| match e {
        Error::Parse { line, reason } => Error::Parse { line, reason: format!("{}: {reason}", path.display()) },
        other => other,
    })
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for it in items {
        out.push_str(&serde_json::to_string(it)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    write_text(path, &to_jsonl(items)?)
}

pub fn read_paths(path: &Path) -> Result<Vec<PathInstance>> {
    read_jsonl(path, "paths file")
}

/// Regroup a paths file by pair. Every pair present in the file is kept.
pub fn read_groups(path: &Path) -> Result<Vec<PairGroup>> {
    Ok(crate::corpus::group_pairs(read_paths(path)?, 1))
}

pub fn read_gold(path: &Path) -> Result<GoldAssignment> {
    GoldAssignment::from_records(read_jsonl::<GoldRecord>(path, "gold file")?)
}
