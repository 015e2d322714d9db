//! Context fusion layers: concatenation + MLP and tensor conditioning.
//!
//! Both take an embedding `x ∈ R^D` and a one-hot noun `n ∈ R^N` and produce
//! one score per aspect. Tensor conditioning keeps a weight matrix and a bias
//! per noun on top of a shared pair:
//!
//! ```text
//! T(x, n) = tanh((W0 + W·n)·x + b0 + B·n)
//! ```
//!
//! where `W·n` contracts the noun axis of the A × D × N tensor `W`. With a
//! one-hot `n` this selects one slice, which is how the training code
//! evaluates it; the public forward function computes the contraction.

mod concat_mlp;
mod tensor_cond;

pub use concat_mlp::{concat_mlp_backward, concat_mlp_forward, ConcatMlpParams};
pub use tensor_cond::{
    tanh_backward, tensor_condition_backward, tensor_condition_forward, TensorCondGrads,
    TensorCondParams,
};
