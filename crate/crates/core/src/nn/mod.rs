//! Minimal reverse-mode differentiation with the recurrent cells the model
//! needs.

mod cells;
mod graph;
mod params;
mod tensor;

pub use cells::{gru_step, lstm_step, GruParams, GruState, LstmParams, LstmState};
pub use graph::{sigmoid, softmax_xent, Graph, Value};
pub use params::{BoundParams, ParamSet, CHECKPOINT_HEADER};
pub use tensor::Tensor;

/// Scale `grads` so their global L2 norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_global_norm(grads: &mut ParamSet, max_norm: f64) -> f64 {
    let norm = grads.tensors().iter().map(Tensor::norm_sq).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let c = max_norm / norm;
        for t in grads.tensors_mut() {
            t.scale(c);
        }
    }
    norm
}
