//! Dense numeric kernels, losses, the optimizer and the finite-difference
//! gradient checker. Everything is `f64`.

mod gradcheck;
mod loss;
mod optim;
mod tensor;

pub use gradcheck::{finite_diff_check, relative_error, GradCheckReport};
pub use loss::{logistic_loss_pm1, sigmoid, softmax, softmax_xent, softplus};
pub use optim::{optimizer_step, OptConfig, OptState, OptimizerKind, ParamBlock};
pub use tensor::{
    affine, argmax, axpy, dot, glorot_limit, one_hot, one_hot_index, Matrix, Tensor3,
};
