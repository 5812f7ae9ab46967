use super::tensor::{Real, Tensor};

/// SELU scale.
pub const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;
/// SELU negative-branch saturation.
pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_2;

#[inline]
pub fn selu_scalar<F: Real>(x: F) -> F {
    let lambda = F::lit(SELU_LAMBDA);
    if x > F::zero() {
        lambda * x
    } else {
        lambda * F::lit(SELU_ALPHA) * x.exp_m1()
    }
}

#[inline]
pub fn selu_derivative<F: Real>(x: F) -> F {
    let lambda = F::lit(SELU_LAMBDA);
    if x > F::zero() {
        lambda
    } else {
        lambda * F::lit(SELU_ALPHA) * x.exp()
    }
}

/// Elementwise SELU.
pub fn selu<F: Real>(x: &Tensor<F>) -> Tensor<F> {
    let mut out = x.clone();
    out.data_mut().iter_mut().for_each(|v| *v = selu_scalar(*v));
    out
}

#[inline]
pub fn sigmoid<F: Real>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

/// Max-subtracted softmax.
pub fn softmax<F: Real>(logits: &[F]) -> Vec<F> {
    let max = logits.iter().copied().fold(F::neg_infinity(), F::max);
    let exps: Vec<F> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: F = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
