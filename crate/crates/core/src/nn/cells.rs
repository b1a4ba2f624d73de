//! LSTM and GRU cell steps built from graph operations.

use crate::error::Result;
use crate::nn::{Graph, Value};

/// Gate weights of one LSTM direction. `w_*` act on the previous hidden
/// state, `u_*` on the input.
#[derive(Debug, Clone, Copy)]
pub struct LstmParams {
    pub w_o: Value,
    pub w_f: Value,
    pub w_i: Value,
    pub w_c: Value,
    pub u_o: Value,
    pub u_f: Value,
    pub u_i: Value,
    pub u_c: Value,
    pub b_o: Value,
    pub b_f: Value,
    pub b_i: Value,
    pub b_c: Value,
}

#[derive(Debug, Clone, Copy)]
pub struct LstmState {
    pub h: Value,
    pub c: Value,
}

/// GRU weights. `w_*` act on the input, `u_*` on the previous hidden state.
#[derive(Debug, Clone, Copy)]
pub struct GruParams {
    pub w_z: Value,
    pub w_r: Value,
    pub w_h: Value,
    pub u_z: Value,
    pub u_r: Value,
    pub u_h: Value,
    pub b_z: Value,
    pub b_r: Value,
    pub b_h: Value,
}

#[derive(Debug, Clone, Copy)]
pub struct GruState {
    pub h: Value,
}

/// `a·p + b·q + bias`
fn affine2(g: &mut Graph, a: Value, p: Value, b: Value, q: Value, bias: Value) -> Result<Value> {
    let ap = g.matvec(a, p)?;
    let bq = g.matvec(b, q)?;
    g.add_n(&[ap, bq, bias])
}

/// One LSTM step:
///
/// ```text
/// o = σ(W_o h + U_o x + b_o)     f = σ(W_f h + U_f x + b_f)
/// i = σ(W_i h + U_i x + b_i)     ĉ = tanh(W_c h + U_c x + b_c)
/// c' = f ⊙ c + i ⊙ ĉ             h' = o ⊙ tanh(c')
/// ```
pub fn lstm_step(g: &mut Graph, x: Value, prev: LstmState, p: &LstmParams) -> Result<LstmState> {
    let pre_o = affine2(g, p.w_o, prev.h, p.u_o, x, p.b_o)?;
    let pre_f = affine2(g, p.w_f, prev.h, p.u_f, x, p.b_f)?;
    let pre_i = affine2(g, p.w_i, prev.h, p.u_i, x, p.b_i)?;
    let pre_c = affine2(g, p.w_c, prev.h, p.u_c, x, p.b_c)?;
    let o = g.sigmoid(pre_o);
    let f = g.sigmoid(pre_f);
    let i = g.sigmoid(pre_i);
    let c_hat = g.tanh(pre_c);
    let keep = g.mul(f, prev.c)?;
    let write = g.mul(i, c_hat)?;
    let c = g.add(keep, write)?;
    let tc = g.tanh(c);
    let h = g.mul(o, tc)?;
    Ok(LstmState { h, c })
}

/// One GRU step:
///
/// ```text
/// z = σ(W_z x + U_z h + b_z)     r = σ(W_r x + U_r h + b_r)
/// h' = z ⊙ h + (1 - z) ⊙ tanh(W_h x + U_h (r ⊙ h) + b_h)
/// ```
pub fn gru_step(g: &mut Graph, x: Value, prev: GruState, p: &GruParams) -> Result<GruState> {
    let pre_z = affine2(g, p.w_z, x, p.u_z, prev.h, p.b_z)?;
    let pre_r = affine2(g, p.w_r, x, p.u_r, prev.h, p.b_r)?;
    let z = g.sigmoid(pre_z);
    let r = g.sigmoid(pre_r);
    let rh = g.mul(r, prev.h)?;
    let pre_h = affine2(g, p.w_h, x, p.u_h, rh, p.b_h)?;
    let cand = g.tanh(pre_h);
    let keep = g.mul(z, prev.h)?;
    let one_minus_z = g.one_minus(z);
    let write = g.mul(one_minus_z, cand)?;
    let h = g.add(keep, write)?;
    Ok(GruState { h })
}
