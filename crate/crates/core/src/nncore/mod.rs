//! Dense numeric kernel used by the model: tensors, activations, the LSTM,
//! convolution and dense layers with hand-written backward passes, losses,
//! Adam and a central-difference gradient checker.

mod activation;
mod adam;
mod gradcheck;
mod layers;
mod loss;
mod tensor;

pub use activation::{selu, selu_derivative, selu_scalar, sigmoid, softmax, SELU_ALPHA, SELU_LAMBDA};
pub use adam::{adam_update, AdamState, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPSILON, DEFAULT_LR};
pub use gradcheck::{grad_check, relative_error, GradCheckReport};
pub use layers::{
    conv1d_maxpool, conv1d_maxpool_backward, dense, dense_backward, dot, Activation, ConvPool,
    DenseOut, LstmCache, LstmCell, LstmGrads,
};
pub use loss::{cross_entropy, cross_entropy_grad, l2_loss, l2_loss_grad, LOG_CLAMP};
pub use tensor::{Parameter, Real, Tensor};
