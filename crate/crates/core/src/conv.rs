//! Valid cross-correlation, its gradients, and the tanh nonlinearity.
//!
//! The convolution convention everywhere is cross-correlation (no kernel
//! flip); forward and backward passes share it, which is all that matters
//! for learning. Products are accumulated in f64.
//!
//! `conv_valid` splits its work across output rows; `conv_backward`
//! accumulates into shared gradient buffers and therefore runs
//! sequentially — callers parallelize across batch samples instead.

use crate::error::{Error, Result};
use crate::exec;
use crate::tensor::Tensor;

/// A bank of convolution kernels plus one bias per kernel.
///
/// Weights are stored in (kernel, row, column, input channel) order as
/// f32, matching the on-disk weight format; arithmetic promotes to f64.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBank {
    count: usize,
    kh: usize,
    kw: usize,
    in_channels: usize,
    weights: Vec<f32>,
    bias: Vec<f32>,
}

impl KernelBank {
    pub fn new(
        count: usize,
        kh: usize,
        kw: usize,
        in_channels: usize,
        weights: Vec<f32>,
        bias: Vec<f32>,
    ) -> Result<Self> {
        if count == 0 || kh == 0 || kw == 0 || in_channels == 0 {
            return Err(Error::InvalidArgument(format!(
                "kernel bank dimensions must be >= 1, got {count} kernels of {kh}x{kw}x{in_channels}"
            )));
        }
        if weights.len() != count * kh * kw * in_channels {
            return Err(Error::InvalidArgument(format!(
                "weight count {} does not match {count} kernels of {kh}x{kw}x{in_channels}",
                weights.len()
            )));
        }
        if bias.len() != count {
            return Err(Error::InvalidArgument(format!(
                "bias count {} does not match kernel count {count}",
                bias.len()
            )));
        }
        Ok(Self {
            count,
            kh,
            kw,
            in_channels,
            weights,
            bias,
        })
    }

    pub fn zeros(count: usize, kh: usize, kw: usize, in_channels: usize) -> Self {
        Self::new(
            count,
            kh,
            kw,
            in_channels,
            vec![0.0; count * kh * kw * in_channels],
            vec![0.0; count],
        )
        .expect("dimensions checked by caller")
    }

    #[inline]
    pub fn count(&self) -> usize {
        self.count
    }

    #[inline]
    pub fn kh(&self) -> usize {
        self.kh
    }

    #[inline]
    pub fn kw(&self) -> usize {
        self.kw
    }

    #[inline]
    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f32] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f32] {
        &mut self.bias
    }

    /// Number of weight plus bias values.
    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    #[inline]
    pub fn weight_at(&self, k: usize, dy: usize, dx: usize, c: usize) -> f32 {
        self.weights[((k * self.kh + dy) * self.kw + dx) * self.in_channels + c]
    }

    /// Contiguous weights of kernel `k`, row `dy` (kw * in_channels values).
    #[inline]
    fn kernel_row(&self, k: usize, dy: usize) -> &[f32] {
        let len = self.kw * self.in_channels;
        let start = (k * self.kh + dy) * len;
        &self.weights[start..start + len]
    }
}

/// Gradients with the same layout as the [`KernelBank`] they belong to,
/// kept in f64 so finite-difference checks hold tightly.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBankGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl KernelBankGrads {
    pub fn zeros_like(bank: &KernelBank) -> Self {
        Self {
            weights: vec![0.0; bank.weights.len()],
            bias: vec![0.0; bank.bias.len()],
        }
    }

    pub fn add_assign(&mut self, other: &KernelBankGrads) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            *a += b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for v in self.weights.iter_mut() {
            *v *= factor;
        }
        for v in self.bias.iter_mut() {
            *v *= factor;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|v| v.is_finite()) && self.bias.iter().all(|v| v.is_finite())
    }
}

fn check_conv_shapes(input: &Tensor, bank: &KernelBank) -> Result<(usize, usize)> {
    if input.channels() != bank.in_channels() {
        return Err(Error::ShapeMismatch {
            context: "conv_valid",
            left: input.shape_string(),
            right: format!(
                "{} kernels of {}x{}x{}",
                bank.count, bank.kh, bank.kw, bank.in_channels
            ),
        });
    }
    if input.height() < bank.kh || input.width() < bank.kw {
        return Err(Error::InputTooSmall {
            context: "conv_valid",
            got_h: input.height(),
            got_w: input.width(),
            min_h: bank.kh,
            min_w: bank.kw,
        });
    }
    Ok((
        input.height() - bank.kh + 1,
        input.width() - bank.kw + 1,
    ))
}

#[inline]
fn dot_f64_f32(a: &[f64], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, w) in a.iter().zip(b.iter()) {
        acc += x * *w as f64;
    }
    acc
}

/// Valid cross-correlation: output (H-kh+1, W-kw+1, count), each value the
/// windowed inner product plus the kernel's bias.
pub fn conv_valid(input: &Tensor, bank: &KernelBank) -> Result<Tensor> {
    let (oh, ow) = check_conv_shapes(input, bank)?;
    let k_count = bank.count;
    let seg = bank.kw * bank.in_channels;
    let c = input.channels();

    let mut out = Tensor::zeros(oh, ow, k_count);
    let row_stride = ow * k_count;
    exec::for_each_chunk_mut(out.data_mut(), row_stride, |yo, out_row| {
        for (k, &b) in bank.bias.iter().enumerate() {
            let mut i = k;
            for _ in 0..ow {
                out_row[i] = b as f64;
                i += k_count;
            }
        }
        for dy in 0..bank.kh {
            let in_row = input.row(yo + dy);
            for xo in 0..ow {
                let window = &in_row[xo * c..xo * c + seg];
                let cell = &mut out_row[xo * k_count..(xo + 1) * k_count];
                for (k, acc) in cell.iter_mut().enumerate() {
                    *acc += dot_f64_f32(window, bank.kernel_row(k, dy));
                }
            }
        }
    });
    Ok(out)
}

/// Gradients of a scalar loss through [`conv_valid`].
///
/// `grad_out` is dL/d(output); returns dL/d(input) and dL/d(weights, bias).
/// The bias gradient is the per-output-channel sum of `grad_out`.
pub fn conv_backward(
    input: &Tensor,
    bank: &KernelBank,
    grad_out: &Tensor,
) -> Result<(Tensor, KernelBankGrads)> {
    let (oh, ow) = check_conv_shapes(input, bank)?;
    if grad_out.shape() != (oh, ow, bank.count) {
        return Err(Error::ShapeMismatch {
            context: "conv_backward",
            left: grad_out.shape_string(),
            right: format!("{}x{}x{}", oh, ow, bank.count),
        });
    }

    let k_count = bank.count;
    let c = input.channels();
    let seg = bank.kw * c;
    let mut grads = KernelBankGrads::zeros_like(bank);
    let mut grad_input = Tensor::zeros(input.height(), input.width(), c);

    for yo in 0..oh {
        let gout_row = grad_out.row(yo);
        for dy in 0..bank.kh {
            let in_row = input.row(yo + dy);
            for xo in 0..ow {
                let window = &in_row[xo * c..xo * c + seg];
                let gcell = &gout_row[xo * k_count..(xo + 1) * k_count];
                for (k, &g) in gcell.iter().enumerate() {
                    let wrow_start = (k * bank.kh + dy) * seg;
                    let grow = &mut grads.weights[wrow_start..wrow_start + seg];
                    for (gw, &x) in grow.iter_mut().zip(window.iter()) {
                        *gw += g * x;
                    }
                }
            }
        }
        for xo in 0..ow {
            let gcell = &gout_row[xo * k_count..(xo + 1) * k_count];
            for (k, &g) in gcell.iter().enumerate() {
                grads.bias[k] += g;
                for dy in 0..bank.kh {
                    let wrow = bank.kernel_row(k, dy);
                    let start = grad_input.index(yo + dy, xo, 0);
                    let gin = &mut grad_input.data_mut()[start..start + seg];
                    for (gi, &w) in gin.iter_mut().zip(wrow.iter()) {
                        *gi += g * w as f64;
                    }
                }
            }
        }
    }
    Ok((grad_input, grads))
}

/// Weight and bias gradients only, skipping the input gradient. Saves a
/// third of the backward cost for the first layer, whose input gradient
/// nobody consumes.
pub(crate) fn conv_backward_params(
    input: &Tensor,
    bank: &KernelBank,
    grad_out: &Tensor,
) -> Result<KernelBankGrads> {
    let (oh, ow) = check_conv_shapes(input, bank)?;
    if grad_out.shape() != (oh, ow, bank.count) {
        return Err(Error::ShapeMismatch {
            context: "conv_backward",
            left: grad_out.shape_string(),
            right: format!("{}x{}x{}", oh, ow, bank.count),
        });
    }
    let k_count = bank.count;
    let c = input.channels();
    let seg = bank.kw * c;
    let mut grads = KernelBankGrads::zeros_like(bank);
    for yo in 0..oh {
        let gout_row = grad_out.row(yo);
        for dy in 0..bank.kh {
            let in_row = input.row(yo + dy);
            for xo in 0..ow {
                let window = &in_row[xo * c..xo * c + seg];
                let gcell = &gout_row[xo * k_count..(xo + 1) * k_count];
                for (k, &g) in gcell.iter().enumerate() {
                    let wrow_start = (k * bank.kh + dy) * seg;
                    let grow = &mut grads.weights[wrow_start..wrow_start + seg];
                    for (gw, &x) in grow.iter_mut().zip(window.iter()) {
                        *gw += g * x;
                    }
                }
            }
        }
        for xo in 0..ow {
            let gcell = &gout_row[xo * k_count..(xo + 1) * k_count];
            for (k, &g) in gcell.iter().enumerate() {
                grads.bias[k] += g;
            }
        }
    }
    Ok(grads)
}

/// Elementwise hyperbolic tangent.
pub fn tanh_map(input: &Tensor) -> Tensor {
    input.map(f64::tanh)
}

/// Backward pass of tanh given the *activated* values: gradOut * (1 - a^2).
pub fn tanh_backward(activated: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
    if !activated.same_shape(grad_out) {
        return Err(Error::ShapeMismatch {
            context: "tanh_backward",
            left: activated.shape_string(),
            right: grad_out.shape_string(),
        });
    }
    let mut out = grad_out.clone();
    for (g, &a) in out.data_mut().iter_mut().zip(activated.data().iter()) {
        *g *= 1.0 - a * a;
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Brute-force reference used by tests: quadruple-loop direct
    //! summation, no layout tricks. Kept independent of the production
    //! kernels above.

    use super::KernelBank;
    use crate::tensor::Tensor;

    pub fn conv_valid_direct(input: &Tensor, bank: &KernelBank) -> Tensor {
        let oh = input.height() - bank.kh() + 1;
        let ow = input.width() - bank.kw() + 1;
        let mut out = Tensor::zeros(oh, ow, bank.count());
        for y in 0..oh {
            for x in 0..ow {
                for k in 0..bank.count() {
                    let mut acc = bank.bias()[k] as f64;
                    for dy in 0..bank.kh() {
                        for dx in 0..bank.kw() {
                            for c in 0..bank.in_channels() {
                                acc += input.get(y + dy, x + dx, c)
                                    * bank.weight_at(k, dy, dx, c) as f64;
                            }
                        }
                    }
                    out.set(y, x, k, acc);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_tensor(rng: &mut StdRng, h: usize, w: usize, c: usize) -> Tensor {
        Tensor::from_fn(h, w, c, |_, _, _| rng.gen_range(-1.0..1.0))
    }

    fn random_bank(rng: &mut StdRng, count: usize, kh: usize, kw: usize, c: usize) -> KernelBank {
        let weights = (0..count * kh * kw * c)
            .map(|_| rng.gen_range(-1.0..1.0f32))
            .collect();
        let bias = (0..count).map(|_| rng.gen_range(-0.5..0.5f32)).collect();
        KernelBank::new(count, kh, kw, c, weights, bias).unwrap()
    }

    fn max_rel_err(a: &Tensor, b: &Tensor) -> f64 {
        a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1.0))
            .fold(0.0, f64::max)
    }

    #[test]
    fn identity_kernel_returns_input() {
        let mut rng = StdRng::seed_from_u64(7);
        let input = random_tensor(&mut rng, 5, 5, 1);
        let bank = KernelBank::new(1, 1, 1, 1, vec![1.0], vec![0.0]).unwrap();
        let out = conv_valid(&input, &bank).unwrap();
        assert_eq!(out.shape(), (5, 5, 1));
        for (a, b) in out.data().iter().zip(input.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_sum_case() {
        let input = Tensor::filled(3, 3, 1, 1.0);
        let bank = KernelBank::new(1, 2, 2, 1, vec![1.0; 4], vec![0.0]).unwrap();
        let out = conv_valid(&input, &bank).unwrap();
        assert_eq!(out.shape(), (2, 2, 1));
        assert!(out.data().iter().all(|&v| (v - 4.0).abs() < 1e-12));
    }

    #[test]
    fn matches_direct_summation_oracle() {
        let mut rng = StdRng::seed_from_u64(42);
        let input = random_tensor(&mut rng, 6, 6, 2);
        let bank = random_bank(&mut rng, 3, 3, 3, 2);
        let fast = conv_valid(&input, &bank).unwrap();
        let slow = oracle::conv_valid_direct(&input, &bank);
        assert!(max_rel_err(&fast, &slow) < 1e-6);
    }

    #[test]
    fn rejects_channel_mismatch_with_both_shapes() {
        let input = Tensor::zeros(4, 4, 2);
        let bank = KernelBank::zeros(1, 2, 2, 3);
        let err = conv_valid(&input, &bank).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("4x4x2"), "{msg}");
        assert!(msg.contains("2x2x3"), "{msg}");
    }

    #[test]
    fn backward_zero_upstream_gives_zero_grads() {
        let mut rng = StdRng::seed_from_u64(3);
        let input = random_tensor(&mut rng, 4, 4, 2);
        let bank = random_bank(&mut rng, 2, 2, 2, 2);
        let gout = Tensor::zeros(3, 3, 2);
        let (gin, grads) = conv_backward(&input, &bank, &gout).unwrap();
        assert!(gin.data().iter().all(|&v| v == 0.0));
        assert!(grads.weights.iter().all(|&v| v == 0.0));
        assert!(grads.bias.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_scalar_kernel_weight_grad_is_inner_product() {
        let mut rng = StdRng::seed_from_u64(11);
        let input = random_tensor(&mut rng, 4, 5, 1);
        let bank = random_bank(&mut rng, 1, 1, 1, 1);
        let gout = random_tensor(&mut rng, 4, 5, 1);
        let (_, grads) = conv_backward(&input, &bank, &gout).unwrap();
        let expected: f64 = input
            .data()
            .iter()
            .zip(gout.data())
            .map(|(a, b)| a * b)
            .sum();
        assert!((grads.weights[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn backward_bias_grad_is_channel_sum() {
        let mut rng = StdRng::seed_from_u64(12);
        let input = random_tensor(&mut rng, 5, 5, 1);
        let bank = random_bank(&mut rng, 2, 2, 2, 1);
        let gout = random_tensor(&mut rng, 4, 4, 2);
        let (_, grads) = conv_backward(&input, &bank, &gout).unwrap();
        for k in 0..2 {
            let expected: f64 = (0..4)
                .flat_map(|y| (0..4).map(move |x| (y, x)))
                .map(|(y, x)| gout.get(y, x, k))
                .sum();
            assert!((grads.bias[k] - expected).abs() < 1e-12);
        }
    }

    /// Central finite differences on a single conv + sum-of-squares loss.
    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = StdRng::seed_from_u64(99);
        let input = random_tensor(&mut rng, 4, 4, 1);
        let mut bank = random_bank(&mut rng, 1, 2, 2, 1);
        let target = random_tensor(&mut rng, 3, 3, 1);

        let loss = |bank: &KernelBank, input: &Tensor| -> f64 {
            let out = conv_valid(input, bank).unwrap();
            out.data()
                .iter()
                .zip(target.data())
                .map(|(o, t)| (o - t) * (o - t))
                .sum()
        };

        let out = conv_valid(&input, &bank).unwrap();
        let gout = out.sub(&target).unwrap().scale(2.0);
        let (gin, grads) = conv_backward(&input, &bank, &gout).unwrap();

        let h = 1e-4f32;
        for i in 0..bank.weights().len() {
            let orig = bank.weights()[i];
            bank.weights_mut()[i] = orig + h;
            let plus = loss(&bank, &input);
            let hi = bank.weights()[i];
            bank.weights_mut()[i] = orig - h;
            let minus = loss(&bank, &input);
            let lo = bank.weights()[i];
            bank.weights_mut()[i] = orig;
            let fd = (plus - minus) / (hi as f64 - lo as f64);
            let rel = (grads.weights[i] - fd).abs() / grads.weights[i].abs().max(fd.abs()).max(1e-8);
            assert!(rel < 1e-4, "weight {i}: analytic {} vs fd {fd}", grads.weights[i]);
        }
        // Input gradient by the same scheme (f64 inputs perturb exactly).
        let mut input = input;
        let h = 1e-4;
        for i in 0..input.len() {
            let orig = input.data()[i];
            input.data_mut()[i] = orig + h;
            let plus = loss(&bank, &input);
            input.data_mut()[i] = orig - h;
            let minus = loss(&bank, &input);
            input.data_mut()[i] = orig;
            let fd = (plus - minus) / (2.0 * h);
            let rel = (gin.data()[i] - fd).abs() / gin.data()[i].abs().max(fd.abs()).max(1e-8);
            assert!(rel < 1e-4, "input {i}: analytic {} vs fd {fd}", gin.data()[i]);
        }
    }

    #[test]
    fn tanh_basics() {
        let zero = Tensor::zeros(2, 2, 1);
        assert!(tanh_map(&zero).data().iter().all(|&v| v == 0.0));

        let one = Tensor::filled(1, 1, 1, 1.0);
        let t = tanh_map(&one);
        assert!((t.get(0, 0, 0) - 0.761594).abs() < 1e-6);

        // derivative at the origin is 1
        let g = Tensor::filled(2, 2, 1, 0.37);
        let back = tanh_backward(&zero, &g).unwrap();
        assert_eq!(back.data(), g.data());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Output shape is exactly (H-kh+1, W-kw+1, count) and values agree
        /// with the direct-summation oracle, for inputs up to 8x8x3 and
        /// kernels up to 4x4.
        #[test]
        fn conv_agrees_with_oracle(
            seed in any::<u64>(),
            h in 1usize..=8,
            w in 1usize..=8,
            c in 1usize..=3,
            kh in 1usize..=4,
            kw in 1usize..=4,
            count in 1usize..=3,
        ) {
            prop_assume!(kh <= h && kw <= w);
            let mut rng = StdRng::seed_from_u64(seed);
            let input = random_tensor(&mut rng, h, w, c);
            let bank = random_bank(&mut rng, count, kh, kw, c);
            let fast = conv_valid(&input, &bank).unwrap();
            prop_assert_eq!(fast.shape(), (h - kh + 1, w - kw + 1, count));
            let slow = oracle::conv_valid_direct(&input, &bank);
            prop_assert!(max_rel_err(&fast, &slow) < 1e-6);
        }
    }
}
