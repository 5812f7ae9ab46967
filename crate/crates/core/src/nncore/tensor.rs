use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

use crate::error::{Result, SocError};

/// Floating-point element type: `f32` for training, `f64` for
/// gradient checks and bitwise determinism tests.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + Send
    + Sync
    + 'static
{
    /// Width in bytes, used as the dtype tag in checkpoints.
    const BYTES: u8;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("representable constant")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("float to f64")
    }

    fn write_le(self, out: &mut Vec<u8>);

    fn read_le(bytes: &[u8]) -> Self;
}

impl Real for f32 {
    const BYTES: u8 = 4;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("4 bytes"))
    }
}

impl Real for f64 {
    const BYTES: u8 = 8;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8 bytes"))
    }
}

/// Row-major dense tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<F> {
    shape: Vec<usize>,
    data: Vec<F>,
}

impl<F: Real> Tensor<F> {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![F::zero(); shape.iter().product()],
        }
    }

    /// Fails if the data length does not match the shape or any value is
    /// not finite.
    pub fn new(shape: &[usize], data: Vec<F>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(SocError::Shape(format!(
                "shape {shape:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(SocError::NonFinite(format!("tensor element {pos} is {}", data[pos])));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<F> {
        self.data
    }

    pub fn fill(&mut self, value: F) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<G: Real>(&self) -> Tensor<G> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| G::lit(v.as_f64())).collect(),
        }
    }
}

/// A trainable tensor and its gradient buffer (always the same shape).
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter<F> {
    pub value: Tensor<F>,
    pub grad: Tensor<F>,
}

impl<F: Real> Parameter<F> {
    pub fn new(value: Tensor<F>) -> Self {
        let grad = Tensor::zeros(value.shape());
        Self { value, grad }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::new(Tensor::zeros(shape))
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(F::zero());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_validates_length_and_finiteness() {
        assert!(Tensor::<f64>::new(&[2, 2], vec![0.0; 3]).is_err());
        assert!(matches!(
            Tensor::<f64>::new(&[2], vec![0.0, f64::NAN]),
            Err(SocError::NonFinite(_))
        ));
        let t = Tensor::<f32>::new(&[2, 3], vec![1.0; 6]).unwrap();
        assert_eq!(t.shape(), &[2, 3]);
        assert_eq!(t.len(), 6);
    }

    #[test]
    fn parameter_grad_matches_value_shape() {
        let p = Parameter::new(Tensor::<f64>::new(&[3, 1], vec![1.0, 2.0, 3.0]).unwrap());
        assert_eq!(p.grad.shape(), p.value.shape());
        assert!(p.grad.data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn le_bytes_roundtrip() {
        let mut buf = Vec::new();
        1.25f32.write_le(&mut buf);
        (-3.5f64).write_le(&mut buf);
        assert_eq!(f32::read_le(&buf[..4]), 1.25);
        assert_eq!(f64::read_le(&buf[4..]), -3.5);
    }
}
