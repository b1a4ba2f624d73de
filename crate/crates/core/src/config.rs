//! Flat `key = value` run configuration shared by every subcommand.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelMethod {
    Wvs,
    Cw,
}

impl FromStr for LabelMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wvs" => Ok(LabelMethod::Wvs),
            "cw" => Ok(LabelMethod::Cw),
            _ => Err(Error::Config(format!("method must be wvs or cw, got {s:?}"))),
        }
    }
}

impl fmt::Display for LabelMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelMethod::Wvs => "wvs",
            LabelMethod::Cw => "cw",
        })
    }
}

/// `(key, default, meaning)`; an empty default marks a key with no default.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("corpus", "", "input corpus (JSON lines of parsed sentences)"),
    ("out_dir", "cure-out", "directory for pipeline artifacts"),
    ("embeddings", "", "pretrained word vectors (text format)"),
    ("gold", "", "gold relations (JSON lines)"),
    ("stopwords", "", "stopword list, one per line (built-in list if unset)"),
    ("k", "", "number of relation clusters"),
    ("min_freq", "2", "minimum word frequency for the word vocabulary"),
    ("min_paths", "2", "minimum paths per entity pair used for training"),
    ("method", "wvs", "cluster labeling method: wvs or cw"),
    ("top", "5", "label candidates kept per cluster"),
    ("n_h", "32", "forward LSTM hidden size"),
    ("n_h2", "32", "backward LSTM hidden size"),
    ("n_g", "64", "decoder GRU hidden size"),
    ("n_l", "8", "fixed path length"),
    ("d_w", "50", "word embedding size"),
    ("d_d", "16", "dependency tag embedding size"),
    ("d_p", "16", "POS tag embedding size"),
    ("max_input_paths", "8", "cap on encoder input paths per example"),
    ("learning_rate", "0.05", "SGD step size"),
    ("epochs", "30", "training epochs"),
    ("batch_size", "1", "examples per SGD step"),
    ("seed", "42", "root seed for all randomness"),
    ("clip_norm", "5", "global gradient norm cap"),
    ("init_scale", "0.1", "uniform init range"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub embeddings: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub k: Option<usize>,
    pub min_freq: usize,
    pub min_paths: usize,
    pub method: LabelMethod,
    pub top: usize,
    pub model: ModelConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut cfg = RunConfig {
            corpus: None,
            out_dir: PathBuf::new(),
            embeddings: None,
            gold: None,
            stopwords: None,
            k: None,
            min_freq: 0,
            min_paths: 0,
            method: LabelMethod::Wvs,
            top: 0,
            model: ModelConfig::default(),
        };
        for (key, default, _) in KEYS {
            if !default.is_empty() {
                cfg.set(key, default).expect("valid default");
            }
        }
        cfg
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn unknown_key(key: &str) -> Error {
    let nearest =
        KEYS.iter().map(|(k, ..)| (strsim::levenshtein(key, k), *k)).min().map(|(_, k)| k).unwrap_or_default();
    Error::Config(format!("unknown key {key:?} (did you mean {nearest:?}?)"))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let m = &mut self.model;
        let path = || (!value.is_empty()).then(|| PathBuf::from(value));
        match key {
            "corpus" => self.corpus = path(),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "embeddings" => self.embeddings = path(),
            "gold" => self.gold = path(),
            "stopwords" => self.stopwords = path(),
            "k" => self.k = if value.is_empty() { None } else { Some(parse(key, value)?) },
            "min_freq" => self.min_freq = parse(key, value)?,
            "min_paths" => self.min_paths = parse(key, value)?,
            "method" => self.method = value.parse()?,
            "top" => self.top = parse(key, value)?,
            "n_h" => m.n_h = parse(key, value)?,
            "n_h2" => m.n_h2 = parse(key, value)?,
            "n_g" => m.n_g = parse(key, value)?,
            "n_l" => m.n_l = parse(key, value)?,
            "d_w" => m.d_w = parse(key, value)?,
            "d_d" => m.d_d = parse(key, value)?,
            "d_p" => m.d_p = parse(key, value)?,
            "max_input_paths" => m.max_input_paths = parse(key, value)?,
            "learning_rate" => m.learning_rate = parse(key, value)?,
            "epochs" => m.epochs = parse(key, value)?,
            "batch_size" => m.batch_size = parse(key, value)?,
            "seed" => m.seed = parse(key, value)?,
            "clip_norm" => m.clip_norm = parse(key, value)?,
            "init_scale" => m.init_scale = parse(key, value)?,
            _ => return Err(unknown_key(key)),
        }
        Ok(())
    }

    /// Current value of every key, in table order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let p = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let m = &self.model;
        KEYS.iter()
            .map(|(key, ..)| {
                let v = match *key {
                    "corpus" => p(&self.corpus),
                    "out_dir" => self.out_dir.display().to_string(),
                    "embeddings" => p(&self.embeddings),
                    "gold" => p(&self.gold),
                    "stopwords" => p(&self.stopwords),
                    "k" => self.k.map(|k| k.to_string()).unwrap_or_default(),
                    "min_freq" => self.min_freq.to_string(),
                    "min_paths" => self.min_paths.to_string(),
                    "method" => self.method.to_string(),
                    "top" => self.top.to_string(),
                    "n_h" => m.n_h.to_string(),
                    "n_h2" => m.n_h2.to_string(),
                    "n_g" => m.n_g.to_string(),
                    "n_l" => m.n_l.to_string(),
                    "d_w" => m.d_w.to_string(),
                    "d_d" => m.d_d.to_string(),
                    "d_p" => m.d_p.to_string(),
                    "max_input_paths" => m.max_input_paths.to_string(),
                    "learning_rate" => m.learning_rate.to_string(),
                    "epochs" => m.epochs.to_string(),
                    "batch_size" => m.batch_size.to_string(),
                    "seed" => m.seed.to_string(),
                    "clip_norm" => m.clip_norm.to_string(),
                    "init_scale" => m.init_scale.to_string(),
                    _ => unreachable!("every key is listed"),
                };
                (*key, v)
            })
            .collect()
    }

    /// Range checks on numeric keys.
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.min_freq == 0 {
            return Err(Error::Config("min_freq must be at least 1".into()));
        }
        if self.min_paths == 0 {
            return Err(Error::Config("min_paths must be at least 1".into()));
        }
        if self.top == 0 {
            return Err(Error::Config("top must be at least 1".into()));
        }
        if self.k == Some(0) {
            return Err(Error::Config("k must be at least 1".into()));
        }
        Ok(())
    }

    /// Every listed key must be set and every set file must exist.
    pub fn require(&self, command: &str, keys: &[&str]) -> Result<()> {
        let entries = self.entries();
        for key in keys {
            let set = entries.iter().any(|(k, v)| k == key && !v.is_empty());
            if !set {
                return Err(Error::Config(format!("`{command}` requires key {key:?}")));
            }
        }
        for (what, p) in [
            ("corpus", &self.corpus),
            ("embeddings", &self.embeddings),
            ("gold file", &self.gold),
            ("stopword list", &self.stopwords),
        ] {
            if let Some(p) = p.as_ref().filter(|p| !p.exists()) {
                return Err(Error::NotFound { what, path: p.clone() });
            }
        }
        Ok(())
    }

    pub fn k(&self) -> Result<usize> {
        self.k.ok_or_else(|| Error::Config("missing required key \"k\"".into()))
    }
}

/// `key = value` pairs of a config text; `#` starts a comment.
pub fn parse_config_str(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: i + 1, reason: format!("expected key = value, got {raw:?}") })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s.split_once('=').ok_or_else(|| Error::Config(format!("override {s:?} is not key=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// Defaults, then the file (if any), then `overrides` in order.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(p) = path {
        let text = crate::io::read_text(p, "config file")?;
        for (k, v) in parse_config_str(&text)? {
            cfg.set(&k, &v)?;
        }
    }
    for o in overrides {
        let (k, v) = parse_override(o)?;
        cfg.set(&k, &v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Defaults table for `--help`.
pub fn defaults_table() -> String {
    let width = KEYS.iter().map(|(k, ..)| k.len()).max().unwrap_or(0);
    let mut s = String::from("Configuration keys (key = value, '#' comments):\n");
    for (k, d, about) in KEYS {
        let d = if d.is_empty() { "-" } else { d };
        s.push_str(&format!("  {k:<width$}  {d:<9} {about}\n"));
    }
    s
}
