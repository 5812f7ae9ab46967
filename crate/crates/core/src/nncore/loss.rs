use super::tensor::Real;

/// Probabilities are clamped to at least this value before taking the log.
pub const LOG_CLAMP: f64 = 1e-12;

/// `-ln(max(probs[target], 1e-12))`
pub fn cross_entropy<F: Real>(probs: &[F], target: usize) -> F {
    -probs[target].max(F::lit(LOG_CLAMP)).ln()
}

/// Gradient of softmax + cross-entropy with respect to the logits.
pub fn cross_entropy_grad<F: Real>(probs: &[F], target: usize) -> Vec<F> {
    probs
        .iter()
        .enumerate()
        .map(|(k, &p)| if k == target { p - F::one() } else { p })
        .collect()
}

/// Squared error `(pred - target)^2`.
pub fn l2_loss<F: Real>(pred: F, target: F) -> F {
    let d = pred - target;
    d * d
}

pub fn l2_loss_grad<F: Real>(pred: F, target: F) -> F {
    F::lit(2.0) * (pred - target)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_entropy_examples() {
        assert_eq!(cross_entropy(&[1.0f64, 0.0], 0), 0.0);
        assert!((cross_entropy(&[0.5f64, 0.5], 1) - 2.0f64.ln()).abs() < 1e-15);
        assert!((cross_entropy(&[0.5f64, 0.5], 1) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((cross_entropy(&[0.25f64, 0.75], 0) - 4.0f64.ln()).abs() < 1e-15);
        assert!((cross_entropy(&[0.25f64, 0.75], 0) - 1.386_29).abs() < 1e-5);
    }

    #[test]
    fn cross_entropy_clamps_zero_probability() {
        let l = cross_entropy(&[1.0f64, 0.0], 1);
        assert!((l - (1e12f64).ln()).abs() < 1e-9);
        assert!(l.is_finite());
    }

    #[test]
    fn l2_examples() {
        assert_eq!(l2_loss(0.3f64, 0.3), 0.0);
        assert_eq!(l2_loss(0.0f64, 1.0), 1.0);
        assert_eq!(l2_loss(-0.5f64, 1.0), 2.25);
        assert_eq!(l2_loss_grad(-0.5f64, 1.0), -3.0);
    }
}
