//! Graph wiring of the Bi-LSTM encoder and the attention-GRU decoder.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::nn::{
    gru_step, lstm_step, BoundParams, Graph, GruParams, GruState, LstmParams, LstmState, ParamSet, Tensor, Value,
};

const LSTM_GATES: [&str; 4] = ["o", "f", "i", "c"];
const GRU_GATES: [&str; 3] = ["z", "r", "h"];

/// `(name, rows, cols)` of every model parameter, in checkpoint order.
pub fn param_shapes(cfg: &ModelConfig, n_w: usize, n_d: usize, n_p: usize) -> Vec<(String, usize, usize)> {
    let mut out = vec![
        ("emb.word".to_string(), n_w, cfg.d_w),
        ("emb.dep".to_string(), n_d, cfg.d_d),
        ("emb.pos".to_string(), n_p, cfg.d_p),
    ];
    for (dir, n) in [("enc.fwd", cfg.n_h), ("enc.bwd", cfg.n_h2)] {
        for gate in LSTM_GATES {
            out.push((format!("{dir}.W_{gate}"), n, n));
            out.push((format!("{dir}.U_{gate}"), n, cfg.input_dim()));
            out.push((format!("{dir}.b_{gate}"), n, 1));
        }
    }
    out.push(("att.W_alpha".into(), cfg.n_l, cfg.n_g));
    out.push(("att.b_alpha".into(), cfg.n_l, 1));
    out.push(("att.W_beta".into(), cfg.n_g, cfg.block_dim() + cfg.n_g));
    for gate in GRU_GATES {
        out.push((format!("dec.W_{gate}"), cfg.n_g, cfg.n_g));
        out.push((format!("dec.U_{gate}"), cfg.n_g, cfg.n_g));
        out.push((format!("dec.b_{gate}"), cfg.n_g, 1));
    }
    out.push(("out.W".into(), n_w, cfg.n_g));
    out.push(("out.b".into(), n_w, 1));
    out
}

pub fn init_params<R: Rng>(cfg: &ModelConfig, n_w: usize, n_d: usize, n_p: usize, rng: &mut R) -> ParamSet {
    let mut set = ParamSet::new();
    for (name, r, c) in param_shapes(cfg, n_w, n_d, n_p) {
        set.insert(name, Tensor::uniform(r, c, cfg.init_scale, rng)).expect("unique names");
    }
    set
}

/// Check that `params` has exactly the layout the config implies.
pub fn check_layout(cfg: &ModelConfig, params: &ParamSet) -> Result<()> {
    let dim = |name: &str| {
        params.get(name).map(Tensor::rows).ok_or_else(|| Error::Validation(format!("missing parameter {name}")))
    };
    let expected = param_shapes(cfg, dim("emb.word")?, dim("emb.dep")?, dim("emb.pos")?);
    if expected.len() != params.len() {
        return Err(Error::Validation(format!("expected {} parameters, found {}", expected.len(), params.len())));
    }
    for ((name, r, c), (pname, t)) in expected.iter().zip(params.iter()) {
        if name != pname || (*r, *c) != t.shape() {
            return Err(Error::Validation(format!(
                "parameter {pname} {:?} does not match expected {name} ({r}, {c})",
                t.shape()
            )));
        }
    }
    Ok(())
}

/// Vocabulary ids of one padded path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathIds {
    pub words: Vec<usize>,
    pub deps: Vec<usize>,
    pub poss: Vec<usize>,
    /// Unpadded length.
    pub len: usize,
}

/// Model parameters bound into one graph.
pub struct Net {
    cfg: ModelConfig,
    emb_word: Value,
    emb_dep: Value,
    emb_pos: Value,
    fwd: LstmParams,
    bwd: LstmParams,
    w_alpha: Value,
    b_alpha: Value,
    w_beta: Value,
    gru: GruParams,
    w_out: Value,
    b_out: Value,
}

impl Net {
    pub fn bind(g: &mut Graph, cfg: &ModelConfig, params: &ParamSet) -> Result<(Net, BoundParams)> {
        check_layout(cfg, params)?;
        let bound = params.bind(g);
        let v = |name: &str| bound.value(params.position(name).expect("layout checked"));
        let lstm = |dir: &str| LstmParams {
            w_o: v(&format!("{dir}.W_o")),
            w_f: v(&format!("{dir}.W_f")),
            w_i: v(&format!("{dir}.W_i")),
            w_c: v(&format!("{dir}.W_c")),
            u_o: v(&format!("{dir}.U_o")),
            u_f: v(&format!("{dir}.U_f")),
            u_i: v(&format!("{dir}.U_i")),
            u_c: v(&format!("{dir}.U_c")),
            b_o: v(&format!("{dir}.b_o")),
            b_f: v(&format!("{dir}.b_f")),
            b_i: v(&format!("{dir}.b_i")),
            b_c: v(&format!("{dir}.b_c")),
        };
        let net = Net {
            cfg: cfg.clone(),
            emb_word: v("emb.word"),
            emb_dep: v("emb.dep"),
            emb_pos: v("emb.pos"),
            fwd: lstm("enc.fwd"),
            bwd: lstm("enc.bwd"),
            w_alpha: v("att.W_alpha"),
            b_alpha: v("att.b_alpha"),
            w_beta: v("att.W_beta"),
            gru: GruParams {
                w_z: v("dec.W_z"),
                w_r: v("dec.W_r"),
                w_h: v("dec.W_h"),
                u_z: v("dec.U_z"),
                u_r: v("dec.U_r"),
                u_h: v("dec.U_h"),
                b_z: v("dec.b_z"),
                b_r: v("dec.b_r"),
                b_h: v("dec.b_h"),
            },
            w_out: v("out.W"),
            b_out: v("out.b"),
        };
        Ok((net, bound))
    }

    fn zeros(g: &mut Graph, n: usize) -> Value {
        g.leaf(Tensor::zeros(n, 1))
    }

    /// Bi-LSTM over the `n_l` positions; the result concatenates, position
    /// by position, the forward and backward hidden states.
    pub fn encode_path(&self, g: &mut Graph, path: &PathIds) -> Result<Value> {
        let n_l = self.cfg.n_l;
        if path.words.len() != n_l || path.deps.len() != n_l || path.poss.len() != n_l {
            return Err(Error::shape("encode_path", format!("path of length {} with n_l = {n_l}", path.words.len())));
        }
        let mut xs = Vec::with_capacity(n_l);
        for i in 0..n_l {
            let w = g.row(self.emb_word, path.words[i])?;
            let d = g.row(self.emb_dep, path.deps[i])?;
            let p = g.row(self.emb_pos, path.poss[i])?;
            xs.push(g.concat(&[w, d, p])?);
        }
        let mut fwd_h = Vec::with_capacity(n_l);
        let mut state = LstmState { h: Self::zeros(g, self.cfg.n_h), c: Self::zeros(g, self.cfg.n_h) };
        for &x in &xs {
            state = lstm_step(g, x, state, &self.fwd)?;
            fwd_h.push(state.h);
        }
        let mut bwd_h = vec![None; n_l];
        let mut state = LstmState { h: Self::zeros(g, self.cfg.n_h2), c: Self::zeros(g, self.cfg.n_h2) };
        for i in (0..n_l).rev() {
            state = lstm_step(g, xs[i], state, &self.bwd)?;
            bwd_h[i] = Some(state.h);
        }
        let parts: Vec<Value> = fwd_h.into_iter().zip(bwd_h).flat_map(|(f, b)| [f, b.expect("filled")]).collect();
        g.concat(&parts)
    }

    /// Word logits for each of the `n_l` output positions.
    ///
    /// At every step the previous GRU state scores the `n_l` blocks of the
    /// relation vector, the softmax-weighted block sum is concatenated with
    /// the previous attention output and projected to the GRU input.
    pub fn decode(&self, g: &mut Graph, relation: Value) -> Result<Vec<Value>> {
        let expected = self.cfg.relation_dim();
        if g.data(relation).shape() != (expected, 1) {
            return Err(Error::shape(
                "decode",
                format!("relation vector {:?}, expected ({expected}, 1)", g.data(relation).shape()),
            ));
        }
        let mut h = GruState { h: Self::zeros(g, self.cfg.n_g) };
        let mut q_prev = Self::zeros(g, self.cfg.n_g);
        let mut logits = Vec::with_capacity(self.cfg.n_l);
        for _ in 0..self.cfg.n_l {
            let s = g.matvec(self.w_alpha, h.h)?;
            let scores = g.add(s, self.b_alpha)?;
            let weights = g.softmax(scores)?;
            let context = g.block_mix(weights, relation)?;
            let joined = g.concat(&[context, q_prev])?;
            let q = g.matvec(self.w_beta, joined)?;
            h = gru_step(g, q, h, &self.gru)?;
            let o = g.matvec(self.w_out, h.h)?;
            logits.push(g.add(o, self.b_out)?);
            q_prev = q;
        }
        Ok(logits)
    }

    /// Mean cross entropy of the target's words over its unpadded length.
    pub fn path_loss(&self, g: &mut Graph, logits: &[Value], target: &PathIds) -> Result<Value> {
        if target.len == 0 || target.len > logits.len() {
            return Err(Error::shape("path_loss", format!("target length {} with {} steps", target.len, logits.len())));
        }
        let terms = (0..target.len).map(|i| g.softmax_xent(logits[i], target.words[i])).collect::<Result<Vec<_>>>()?;
        let total = g.add_n(&terms)?;
        Ok(g.scale(total, 1.0 / target.len as f64))
    }

    /// Leave-one-out loss: encode `inputs`, sum them, decode, score against
    /// `target`.
    pub fn loss(&self, g: &mut Graph, inputs: &[PathIds], target: &PathIds) -> Result<Value> {
        if inputs.is_empty() {
            return Err(Error::Validation("no input paths".into()));
        }
        let eis = inputs.iter().map(|p| self.encode_path(g, p)).collect::<Result<Vec<_>>>()?;
        let relation = g.add_n(&eis)?;
        let logits = self.decode(g, relation)?;
        self.path_loss(g, &logits, target)
    }
}
