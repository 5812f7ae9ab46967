use super::tensor::Tensor;

/// `|a - n| / max(1e-8, |a| + |n|)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Maximum relative error per tensor, in input order.
    pub per_tensor: Vec<f64>,
    pub max_relative_error: f64,
    /// `(tensor, element)` of the worst disagreement.
    pub worst: (usize, usize),
}

/// Compares `analytic` gradients against central differences
/// `(f(x + eps) - f(x - eps)) / (2 eps)` for every element of `params`.
///
/// `loss` is evaluated on the perturbed parameter list; each element is
/// restored before moving to the next one.
pub fn grad_check<L>(params: &mut [Tensor<f64>], analytic: &[Tensor<f64>], mut loss: L, epsilon: f64) -> GradCheckReport
where
    L: FnMut(&[Tensor<f64>]) -> f64,
{
    assert_eq!(params.len(), analytic.len(), "one analytic gradient per tensor");
    let mut per_tensor = Vec::with_capacity(params.len());
    let mut max_err = 0.0f64;
    let mut worst = (0, 0);
    for ti in 0..params.len() {
        assert_eq!(params[ti].shape(), analytic[ti].shape(), "gradient shape of tensor {ti}");
        let mut tensor_max = 0.0f64;
        for ei in 0..params[ti].len() {
            let orig = params[ti].data()[ei];
            params[ti].data_mut()[ei] = orig + epsilon;
            let up = loss(params);
            params[ti].data_mut()[ei] = orig - epsilon;
            let down = loss(params);
            params[ti].data_mut()[ei] = orig;
            let numeric = (up - down) / (2.0 * epsilon);
            let err = relative_error(analytic[ti].data()[ei], numeric);
            tensor_max = tensor_max.max(err);
            if err > max_err {
                max_err = err;
                worst = (ti, ei);
            }
        }
        per_tensor.push(tensor_max);
    }
    GradCheckReport {
        per_tensor,
        max_relative_error: max_err,
        worst,
    }
}
