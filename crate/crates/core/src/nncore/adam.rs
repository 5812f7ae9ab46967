use super::tensor::{Parameter, Real, Tensor};

pub const DEFAULT_LR: f64 = 1e-3;
pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Per-parameter Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<F> {
    pub m: Tensor<F>,
    pub v: Tensor<F>,
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl<F: Real> AdamState<F> {
    pub fn new(shape: &[usize], lr: f64) -> Self {
        Self {
            m: Tensor::zeros(shape),
            v: Tensor::zeros(shape),
            t: 0,
            lr,
            beta1: DEFAULT_BETA1,
            beta2: DEFAULT_BETA2,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn for_parameter(param: &Parameter<F>, lr: f64) -> Self {
        Self::new(param.value.shape(), lr)
    }
}

/// One bias-corrected Adam step using the gradient stored in `param.grad`.
pub fn adam_update<F: Real>(param: &mut Parameter<F>, state: &mut AdamState<F>) {
    debug_assert_eq!(param.value.shape(), state.m.shape());
    state.t += 1;
    let t = i32::try_from(state.t).unwrap_or(i32::MAX);
    let b1 = F::lit(state.beta1);
    let b2 = F::lit(state.beta2);
    let one_m_b1 = F::lit(1.0 - state.beta1);
    let one_m_b2 = F::lit(1.0 - state.beta2);
    let corr1 = F::lit(1.0 - state.beta1.powi(t));
    let corr2 = F::lit(1.0 - state.beta2.powi(t));
    let lr = F::lit(state.lr);
    let eps = F::lit(state.epsilon);

    let values = param.value.data_mut();
    let grads = param.grad.data();
    let ms = state.m.data_mut();
    let vs = state.v.data_mut();
    for i in 0..values.len() {
        let g = grads[i];
        ms[i] = b1 * ms[i] + one_m_b1 * g;
        vs[i] = b2 * vs[i] + one_m_b2 * g * g;
        let m_hat = ms[i] / corr1;
        let v_hat = vs[i] / corr2;
        values[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}
