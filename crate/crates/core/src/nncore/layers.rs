use super::activation::{selu_derivative, selu_scalar, sigmoid};
use super::tensor::Real;
use crate::error::{Result, SocError};

/// Dot product with four independent accumulators combined in a fixed order.
#[inline]
pub fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [F::zero(); 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let k = i * 4;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut tail = F::zero();
    for k in chunks * 4..a.len() {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += alpha * x`
#[inline]
fn axpy<F: Real>(alpha: F, x: &[F], y: &mut [F]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(SocError::Config(format!("{what}: expected {want} values, got {got}")));
    }
    Ok(())
}

/// Borrowed LSTM weights. Gate blocks are stacked in the order
/// input, forget, cell candidate, output.
#[derive(Debug, Clone, Copy)]
pub struct LstmCell<'a, F> {
    /// `4H x d`
    pub w_input: &'a [F],
    /// `4H x H`
    pub w_hidden: &'a [F],
    /// `4H`
    pub bias: &'a [F],
    pub input_dim: usize,
    pub hidden: usize,
}

/// Activations kept from the forward pass for backpropagation through time.
#[derive(Debug, Clone)]
pub struct LstmCache<F> {
    pub steps: usize,
    /// `T x 4H`, post-activation `[i, f, g, o]`.
    pub gates: Vec<F>,
    /// `T x H`
    pub cell: Vec<F>,
    /// `T x H`
    pub hidden: Vec<F>,
}

#[derive(Debug, Clone)]
pub struct LstmGrads<F> {
    pub w_input: Vec<F>,
    pub w_hidden: Vec<F>,
    pub bias: Vec<F>,
}

impl<F: Real> LstmGrads<F> {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            w_input: vec![F::zero(); 4 * hidden * input_dim],
            w_hidden: vec![F::zero(); 4 * hidden * hidden],
            bias: vec![F::zero(); 4 * hidden],
        }
    }
}

impl<'a, F: Real> LstmCell<'a, F> {
    pub fn new(w_input: &'a [F], w_hidden: &'a [F], bias: &'a [F], input_dim: usize, hidden: usize) -> Result<Self> {
        check_len("lstm input weights", w_input.len(), 4 * hidden * input_dim)?;
        check_len("lstm hidden weights", w_hidden.len(), 4 * hidden * hidden)?;
        check_len("lstm bias", bias.len(), 4 * hidden)?;
        Ok(Self {
            w_input,
            w_hidden,
            bias,
            input_dim,
            hidden,
        })
    }

    /// One time step: returns `(h_t, c_t)`.
    pub fn step(&self, x: &[F], h_prev: &[F], c_prev: &[F]) -> Result<(Vec<F>, Vec<F>)> {
        check_len("lstm input", x.len(), self.input_dim)?;
        check_len("lstm previous hidden state", h_prev.len(), self.hidden)?;
        check_len("lstm previous cell state", c_prev.len(), self.hidden)?;
        let mut gates = vec![F::zero(); 4 * self.hidden];
        let mut c = vec![F::zero(); self.hidden];
        let mut h = vec![F::zero(); self.hidden];
        self.step_into(x, h_prev, c_prev, &mut gates, &mut c, &mut h);
        Ok((h, c))
    }

    fn step_into(&self, x: &[F], h_prev: &[F], c_prev: &[F], gates: &mut [F], c: &mut [F], h: &mut [F]) {
        let (d, hd) = (self.input_dim, self.hidden);
        for (r, g) in gates.iter_mut().enumerate() {
            *g = self.bias[r]
                + dot(&self.w_input[r * d..(r + 1) * d], x)
                + dot(&self.w_hidden[r * hd..(r + 1) * hd], h_prev);
        }
        for j in 0..hd {
            let i = sigmoid(gates[j]);
            let f = sigmoid(gates[hd + j]);
            let g = gates[2 * hd + j].tanh();
            let o = sigmoid(gates[3 * hd + j]);
            gates[j] = i;
            gates[hd + j] = f;
            gates[2 * hd + j] = g;
            gates[3 * hd + j] = o;
            c[j] = f * c_prev[j] + i * g;
            h[j] = o * c[j].tanh();
        }
    }

    /// Runs the cell over `steps` inputs (row-major `T x d`) from a zero state.
    pub fn forward_sequence(&self, inputs: &[F], steps: usize) -> Result<LstmCache<F>> {
        check_len("lstm input sequence", inputs.len(), steps * self.input_dim)?;
        let (d, hd) = (self.input_dim, self.hidden);
        let mut cache = LstmCache {
            steps,
            gates: vec![F::zero(); steps * 4 * hd],
            cell: vec![F::zero(); steps * hd],
            hidden: vec![F::zero(); steps * hd],
        };
        let zeros = vec![F::zero(); hd];
        for t in 0..steps {
            let (h_done, h_rest) = cache.hidden.split_at_mut(t * hd);
            let (c_done, c_rest) = cache.cell.split_at_mut(t * hd);
            let h_prev = if t == 0 { &zeros[..] } else { &h_done[(t - 1) * hd..] };
            let c_prev = if t == 0 { &zeros[..] } else { &c_done[(t - 1) * hd..] };
            self.step_into(
                &inputs[t * d..(t + 1) * d],
                h_prev,
                c_prev,
                &mut cache.gates[t * 4 * hd..(t + 1) * 4 * hd],
                &mut c_rest[..hd],
                &mut h_rest[..hd],
            );
        }
        Ok(cache)
    }

    /// Backpropagation through time. `d_hidden` is the loss gradient with
    /// respect to every hidden state (`T x H`); weight gradients are
    /// accumulated into `grads` and the input gradients (`T x d`) returned.
    pub fn backward_sequence(&self, cache: &LstmCache<F>, inputs: &[F], d_hidden: &[F], grads: &mut LstmGrads<F>) -> Vec<F> {
        let (d, hd) = (self.input_dim, self.hidden);
        let steps = cache.steps;
        let mut d_inputs = vec![F::zero(); steps * d];
        let mut dh_next = vec![F::zero(); hd];
        let mut dc_next = vec![F::zero(); hd];
        let mut dz = vec![F::zero(); 4 * hd];
        let zeros = vec![F::zero(); hd];
        let one = F::one();

        for t in (0..steps).rev() {
            let gates = &cache.gates[t * 4 * hd..(t + 1) * 4 * hd];
            let c = &cache.cell[t * hd..(t + 1) * hd];
            let c_prev = if t == 0 { &zeros[..] } else { &cache.cell[(t - 1) * hd..t * hd] };
            let h_prev = if t == 0 { &zeros[..] } else { &cache.hidden[(t - 1) * hd..t * hd] };
            for j in 0..hd {
                let (i, f, g, o) = (gates[j], gates[hd + j], gates[2 * hd + j], gates[3 * hd + j]);
                let dh = d_hidden[t * hd + j] + dh_next[j];
                let tc = c[j].tanh();
                let d_o = dh * tc;
                let dc = dc_next[j] + dh * o * (one - tc * tc);
                let d_i = dc * g;
                let d_g = dc * i;
                let d_f = dc * c_prev[j];
                dc_next[j] = dc * f;
                dz[j] = d_i * i * (one - i);
                dz[hd + j] = d_f * f * (one - f);
                dz[2 * hd + j] = d_g * (one - g * g);
                dz[3 * hd + j] = d_o * o * (one - o);
            }
            let x = &inputs[t * d..(t + 1) * d];
            let dx = &mut d_inputs[t * d..(t + 1) * d];
            dh_next.iter_mut().for_each(|v| *v = F::zero());
            for (r, &g) in dz.iter().enumerate() {
                if g == F::zero() {
                    continue;
                }
                grads.bias[r] += g;
                axpy(g, x, &mut grads.w_input[r * d..(r + 1) * d]);
                axpy(g, h_prev, &mut grads.w_hidden[r * hd..(r + 1) * hd]);
                axpy(g, &self.w_input[r * d..(r + 1) * d], dx);
                axpy(g, &self.w_hidden[r * hd..(r + 1) * hd], &mut dh_next);
            }
        }
        d_inputs
    }
}

/// Max-over-time pooled convolution output plus the winning window of each
/// filter.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvPool<F> {
    pub pooled: Vec<F>,
    pub argmax: Vec<usize>,
}

/// Valid 1-D convolution over a `steps x channels` sequence followed by
/// max-over-time pooling. `kernel` is `filters x (width * channels)`, each
/// filter laid out time-major to match a contiguous window of the sequence.
pub fn conv1d_maxpool<F: Real>(
    seq: &[F],
    steps: usize,
    channels: usize,
    kernel: &[F],
    bias: &[F],
    width: usize,
) -> Result<ConvPool<F>> {
    check_len("conv input sequence", seq.len(), steps * channels)?;
    if width == 0 || steps < width {
        return Err(SocError::Config(format!(
            "kernel width {width} does not fit a sequence of {steps} steps"
        )));
    }
    let filters = bias.len();
    let span = width * channels;
    check_len("conv kernel", kernel.len(), filters * span)?;
    let positions = steps - width + 1;
    let mut pooled = vec![F::neg_infinity(); filters];
    let mut argmax = vec![0usize; filters];
    for t in 0..positions {
        let window = &seq[t * channels..t * channels + span];
        for k in 0..filters {
            let r = bias[k] + dot(&kernel[k * span..(k + 1) * span], window);
            if r > pooled[k] {
                pooled[k] = r;
                argmax[k] = t;
            }
        }
    }
    Ok(ConvPool { pooled, argmax })
}

/// Routes `d_pooled` back through the recorded argmax windows.
#[allow(clippy::too_many_arguments)]
pub fn conv1d_maxpool_backward<F: Real>(
    seq: &[F],
    channels: usize,
    kernel: &[F],
    width: usize,
    pool: &ConvPool<F>,
    d_pooled: &[F],
    d_kernel: &mut [F],
    d_bias: &mut [F],
    d_seq: &mut [F],
) {
    let span = width * channels;
    for (k, (&g, &t)) in d_pooled.iter().zip(&pool.argmax).enumerate() {
        if g == F::zero() {
            continue;
        }
        d_bias[k] += g;
        let start = t * channels;
        axpy(g, &seq[start..start + span], &mut d_kernel[k * span..(k + 1) * span]);
        axpy(g, &kernel[k * span..(k + 1) * span], &mut d_seq[start..start + span]);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Selu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply<F: Real>(self, x: F) -> F {
        match self {
            Activation::Selu => selu_scalar(x),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative given the pre-activation `x` and activation `y`.
    #[inline]
    pub fn derivative<F: Real>(self, x: F, y: F) -> F {
        match self {
            Activation::Selu => selu_derivative(x),
            Activation::Tanh => F::one() - y * y,
            Activation::Identity => F::one(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOut<F> {
    pub pre: Vec<F>,
    pub out: Vec<F>,
}

/// `activation(W x + b)` with `W` stored `out x in`.
pub fn dense<F: Real>(x: &[F], weight: &[F], bias: &[F], act: Activation) -> Result<DenseOut<F>> {
    let n_in = x.len();
    let n_out = bias.len();
    check_len("dense weight", weight.len(), n_out * n_in)?;
    let pre: Vec<F> = (0..n_out)
        .map(|r| bias[r] + dot(&weight[r * n_in..(r + 1) * n_in], x))
        .collect();
    let out = pre.iter().map(|&p| act.apply(p)).collect();
    Ok(DenseOut { pre, out })
}

/// Accumulates weight and bias gradients; writes the input gradient into
/// `d_x` when requested.
#[allow(clippy::too_many_arguments)]
pub fn dense_backward<F: Real>(
    x: &[F],
    weight: &[F],
    fwd: &DenseOut<F>,
    act: Activation,
    d_out: &[F],
    d_weight: &mut [F],
    d_bias: &mut [F],
    mut d_x: Option<&mut [F]>,
) {
    let n_in = x.len();
    if let Some(dx) = d_x.as_deref_mut() {
        dx.iter_mut().for_each(|v| *v = F::zero());
    }
    for r in 0..d_out.len() {
        let g = d_out[r] * act.derivative(fwd.pre[r], fwd.out[r]);
        if g == F::zero() {
            continue;
        }
        d_bias[r] += g;
        axpy(g, x, &mut d_weight[r * n_in..(r + 1) * n_in]);
        if let Some(dx) = d_x.as_deref_mut() {
            axpy(g, &weight[r * n_in..(r + 1) * n_in], dx);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-scale..scale)).collect()
    }

    fn sig(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    // Straight scalar-loop LSTM step with each gate computed separately.
    #[allow(clippy::needless_range_loop)]
    fn lstm_oracle(cell: &LstmCell<f64>, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (d, hd) = (cell.input_dim, cell.hidden);
        let affine = |gate: usize, j: usize| {
            let row = gate * hd + j;
            let mut s = cell.bias[row];
            for k in 0..d {
                s += cell.w_input[row * d + k] * x[k];
            }
            for k in 0..hd {
                s += cell.w_hidden[row * hd + k] * h[k];
            }
            s
        };
        let mut h_new = vec![0.0; hd];
        let mut c_new = vec![0.0; hd];
        for j in 0..hd {
            let i = sig(affine(0, j));
            let f = sig(affine(1, j));
            let g = affine(2, j).tanh();
            let o = sig(affine(3, j));
            c_new[j] = f * c[j] + i * g;
            h_new[j] = o * c_new[j].tanh();
        }
        (h_new, c_new)
    }

    #[test]
    fn lstm_zero_everything_gives_zero_state() {
        let (d, h) = (3, 2);
        let wi = vec![0.0; 4 * h * d];
        let wh = vec![0.0; 4 * h * h];
        let b = vec![0.0; 4 * h];
        let cell = LstmCell::new(&wi, &wh, &b, d, h).unwrap();
        let (h1, c1) = cell.step(&[0.0; 3], &[0.0; 2], &[0.0; 2]).unwrap();
        assert_eq!(h1, vec![0.0, 0.0]);
        assert_eq!(c1, vec![0.0, 0.0]);
    }

    #[test]
    fn lstm_saturated_forget_gate_keeps_cell() {
        let (d, h) = (2, 2);
        let wi = vec![0.0; 4 * h * d];
        let wh = vec![0.0; 4 * h * h];
        let mut b = vec![0.0; 4 * h];
        for j in 0..h {
            b[h + j] = 60.0;
            // input gate closed so the candidate adds nothing
            b[j] = -60.0;
        }
        let cell = LstmCell::new(&wi, &wh, &b, d, h).unwrap();
        let c_prev = [0.7f64, -0.4];
        let (_, c1) = cell.step(&[0.3, 0.1], &[0.2, 0.2], &c_prev).unwrap();
        for j in 0..h {
            assert!((c1[j] - c_prev[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn lstm_step_matches_scalar_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (d, h) = (5, 4);
        let wi = random_vec(&mut rng, 4 * h * d, 0.5);
        let wh = random_vec(&mut rng, 4 * h * h, 0.5);
        let b = random_vec(&mut rng, 4 * h, 0.5);
        let cell = LstmCell::new(&wi, &wh, &b, d, h).unwrap();
        let x = random_vec(&mut rng, d, 1.0);
        let hp = random_vec(&mut rng, h, 0.9);
        let cp = random_vec(&mut rng, h, 2.0);
        let (h1, c1) = cell.step(&x, &hp, &cp).unwrap();
        let (h2, c2) = lstm_oracle(&cell, &x, &hp, &cp);
        for j in 0..h {
            assert!((h1[j] - h2[j]).abs() < 1e-12);
            assert!((c1[j] - c2[j]).abs() < 1e-12);
            assert!(h1[j].abs() < 1.0);
        }
    }

    #[test]
    fn lstm_shape_mismatch_is_config_error() {
        let w = vec![0.0; 8];
        assert!(matches!(LstmCell::new(&w, &w, &w, 3, 2), Err(SocError::Config(_))));
        let wi = vec![0.0; 16];
        let wh = vec![0.0; 16];
        let b = vec![0.0; 8];
        let cell = LstmCell::new(&wi, &wh, &b, 2, 2).unwrap();
        assert!(cell.step(&[0.0; 3], &[0.0; 2], &[0.0; 2]).is_err());
    }

    #[test]
    fn lstm_bptt_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (d, h, steps) = (3, 3, 5);
        let mut wi = random_vec(&mut rng, 4 * h * d, 0.6);
        let wh = random_vec(&mut rng, 4 * h * h, 0.6);
        let b = random_vec(&mut rng, 4 * h, 0.3);
        let xs = random_vec(&mut rng, steps * d, 1.0);
        let proj = random_vec(&mut rng, steps * h, 1.0);

        let loss = |wi: &[f64], xs: &[f64]| {
            let cell = LstmCell::new(wi, &wh, &b, d, h).unwrap();
            let cache = cell.forward_sequence(xs, steps).unwrap();
            dot(&cache.hidden, &proj)
        };
        let cell = LstmCell::new(&wi, &wh, &b, d, h).unwrap();
        let cache = cell.forward_sequence(&xs, steps).unwrap();
        let mut grads = LstmGrads::zeros(d, h);
        let dxs = cell.backward_sequence(&cache, &xs, &proj, &mut grads);

        let eps = 1e-6;
        for k in 0..wi.len() {
            let orig = wi[k];
            wi[k] = orig + eps;
            let up = loss(&wi, &xs);
            wi[k] = orig - eps;
            let down = loss(&wi, &xs);
            wi[k] = orig;
            let numeric = (up - down) / (2.0 * eps);
            assert!((numeric - grads.w_input[k]).abs() < 1e-7, "w_input[{k}]");
        }
        let mut xs2 = xs.clone();
        for k in 0..xs.len() {
            xs2[k] = xs[k] + eps;
            let up = loss(&wi, &xs2);
            xs2[k] = xs[k] - eps;
            let down = loss(&wi, &xs2);
            xs2[k] = xs[k];
            let numeric = (up - down) / (2.0 * eps);
            assert!((numeric - dxs[k]).abs() < 1e-7, "x[{k}]");
        }
    }

    #[test]
    fn conv_all_ones_example() {
        let seq = [1.0, 2.0, 3.0, 4.0];
        let pool = conv1d_maxpool(&seq, 2, 2, &[1.0; 4], &[0.0], 2).unwrap();
        assert_eq!(pool.pooled, vec![10.0]);
        assert_eq!(pool.argmax, vec![0]);
    }

    #[test]
    fn conv_zero_filters_pool_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let seq = random_vec(&mut rng, 6 * 3, 1.0);
        let pool = conv1d_maxpool(&seq, 6, 3, &[0.0; 2 * 9], &[0.0; 2], 3).unwrap();
        assert_eq!(pool.pooled, vec![0.0, 0.0]);
    }

    #[test]
    fn conv_pooled_dominates_every_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (steps, ch, w, nf) = (9, 4, 3, 5);
        let seq = random_vec(&mut rng, steps * ch, 1.0);
        let kernel = random_vec(&mut rng, nf * w * ch, 1.0);
        let bias = random_vec(&mut rng, nf, 1.0);
        let pool = conv1d_maxpool(&seq, steps, ch, &kernel, &bias, w).unwrap();
        for k in 0..nf {
            for t in 0..=steps - w {
                let mut r = bias[k];
                for j in 0..w {
                    for c in 0..ch {
                        r += kernel[k * w * ch + j * ch + c] * seq[(t + j) * ch + c];
                    }
                }
                assert!(pool.pooled[k] >= r - 1e-12);
            }
        }
    }

    #[test]
    fn conv_rejects_short_sequences() {
        assert!(matches!(
            conv1d_maxpool(&[0.0f64; 4], 2, 2, &[0.0; 6], &[0.0], 3),
            Err(SocError::Config(_))
        ));
    }

    #[test]
    fn dense_identity_and_zero_cases() {
        let x = [0.3, -1.2, 2.0];
        let eye = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let out = dense(&x, &eye, &[0.0; 3], Activation::Identity).unwrap();
        assert_eq!(out.out, x.to_vec());
        for act in [Activation::Selu, Activation::Tanh] {
            let out = dense(&[0.0; 3], &eye, &[0.0; 3], act).unwrap();
            assert_eq!(out.out, vec![0.0; 3]);
        }
        assert!(dense(&x, &eye[..8], &[0.0; 3], Activation::Identity).is_err());
    }

    #[test]
    fn dense_matches_scalar_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (n_in, n_out) = (7, 4);
        let x = random_vec(&mut rng, n_in, 1.0);
        let w = random_vec(&mut rng, n_in * n_out, 1.0);
        let b = random_vec(&mut rng, n_out, 1.0);
        let out = dense(&x, &w, &b, Activation::Selu).unwrap();
        for r in 0..n_out {
            let mut s = b[r];
            for c in 0..n_in {
                s += w[r * n_in + c] * x[c];
            }
            let lambda = 1.050_700_987_355_480_5;
            let alpha = 1.673_263_242_354_377_2;
            let y = if s > 0.0 { lambda * s } else { lambda * alpha * (s.exp() - 1.0) };
            assert!((out.out[r] - y).abs() < 1e-12);
        }
    }

    #[test]
    fn dot_handles_tails() {
        let a: Vec<f64> = (1..=7).map(f64::from).collect();
        assert_eq!(dot(&a, &a), 140.0);
        assert_eq!(dot::<f64>(&[], &[]), 0.0);
    }
}
