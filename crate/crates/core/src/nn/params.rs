//! Named parameter tensors and the text checkpoint format.
//!
//! ```text
//! CURE-MODEL v1
//! emb.word 12 50
//! 0.013 -0.07 ...
//! ...
//! ```
//!
//! One block per parameter: a `name rows cols` line, then `rows` lines of
//! `cols` values. Values use the shortest representation that parses back
//! to the same `f64`, so a write/read cycle is bit-exact.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::{Graph, Tensor, Value};

pub const CHECKPOINT_HEADER: &str = "CURE-MODEL v1";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    index: HashMap<String, usize>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, t: Tensor) -> Result<()> {
        let name = name.into();
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::Validation(format!("bad parameter name {name:?}")));
        }
        if self.index.contains_key(&name) {
            return Err(Error::Validation(format!("duplicate parameter {name}")));
        }
        self.index.insert(name.clone(), self.names.len());
        self.names.push(name);
        self.tensors.push(t);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.position(name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.position(name).map(move |i| &mut self.tensors[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    /// Same names and shapes, all zeros.
    pub fn zeros_like(&self) -> ParamSet {
        let mut out = self.clone();
        for t in &mut out.tensors {
            t.scale(0.0);
        }
        out
    }

    pub fn num_values(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// Register every tensor as a leaf of `g`, in order.
    pub fn bind(&self, g: &mut Graph) -> BoundParams {
        BoundParams { values: self.tensors.iter().map(|t| g.leaf(t.clone())).collect() }
    }

    pub fn to_checkpoint(&self) -> String {
        let mut out = String::from(CHECKPOINT_HEADER);
        out.push('\n');
        for (name, t) in self.iter() {
            let _ = writeln!(out, "{name} {} {}", t.rows(), t.cols());
            for r in 0..t.rows() {
                let row: Vec<String> = t.row(r).iter().map(|v| format!("{v:?}")).collect();
                out.push_str(&row.join(" "));
                out.push('\n');
            }
        }
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<ParamSet> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, h)) if h.trim_end() == CHECKPOINT_HEADER => {}
            _ => return Err(Error::Parse { line: 1, reason: format!("missing {CHECKPOINT_HEADER:?} header") }),
        }
        let mut set = ParamSet::new();
        while let Some((no, line)) = lines.next() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = |reason: String| Error::Parse { line: no, reason };
            if f.len() != 3 {
                return Err(bad(format!("expected \"name rows cols\", got {line:?}")));
            }
            let rows: usize = f[1].parse().map_err(|_| bad(format!("bad row count {:?}", f[1])))?;
            let cols: usize = f[2].parse().map_err(|_| bad(format!("bad column count {:?}", f[2])))?;
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (rno, rline) = lines.next().ok_or_else(|| bad(format!("{}: truncated block", f[0])))?;
                let before = data.len();
                for v in rline.split_whitespace() {
                    data.push(v.parse::<f64>().map_err(|e| Error::Parse { line: rno, reason: e.to_string() })?);
                }
                if data.len() - before != cols {
                    return Err(Error::Parse { line: rno, reason: format!("{}: expected {cols} values", f[0]) });
                }
            }
            let t = Tensor::from_vec(rows, cols, data)?;
            if !t.is_finite() {
                return Err(bad(format!("{}: non-finite value", f[0])));
            }
            set.insert(f[0], t).map_err(|e| bad(e.to_string()))?;
        }
        Ok(set)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_checkpoint()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ParamSet> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::NotFound { what: "checkpoint", path: path.to_path_buf() });
        }
        ParamSet::from_checkpoint(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Graph handles for a [`ParamSet`], index-aligned with it.
#[derive(Debug, Clone)]
pub struct BoundParams {
    values: Vec<Value>,
}

impl BoundParams {
    pub fn value(&self, i: usize) -> Value {
        self.values[i]
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    /// Gradients after `backward`, shaped like `params`; unreached
    /// parameters get zeros.
    pub fn grads(&self, g: &Graph, params: &ParamSet) -> ParamSet {
        let mut out = params.zeros_like();
        for (t, v) in out.tensors.iter_mut().zip(&self.values) {
            if let Some(gr) = g.grad(*v) {
                t.add_assign(gr);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_roundtrip_is_bitwise() {
        let mut p = ParamSet::new();
        p.insert("a", Tensor::from_vec(2, 3, vec![0.1, -1e-300, 3.0, 1.0 / 3.0, 2e20, -0.0]).unwrap()).unwrap();
        p.insert("b", Tensor::vector(vec![std::f64::consts::PI])).unwrap();
        let back = ParamSet::from_checkpoint(&p.to_checkpoint()).unwrap();
        assert_eq!(back.names(), p.names());
        for (x, y) in back.tensors().iter().zip(p.tensors()) {
            let xb: Vec<u64> = x.data().iter().map(|v| v.to_bits()).collect();
            let yb: Vec<u64> = y.data().iter().map(|v| v.to_bits()).collect();
            assert_eq!(xb, yb);
        }
    }

    #[test]
    fn bad_checkpoints() {
        assert!(ParamSet::from_checkpoint("nope\n").is_err());
        assert!(ParamSet::from_checkpoint("CURE-MODEL v1\na 2 2\n1 2\n").is_err());
        assert!(ParamSet::from_checkpoint("CURE-MODEL v1\na 1 2\n1 2 3\n").is_err());
        assert!(ParamSet::from_checkpoint("CURE-MODEL v1\na 1 1\nNaN\n").is_err());
    }
}
