//! The three-layer convolutional network: parameters, forward pass,
//! loss, backpropagation, the SGD training loop, and weight-file I/O.
//!
//! Layers 1 and 2 apply tanh after a valid cross-correlation; layer 3 is
//! linear. Every valid convolution shrinks the spatial dims, so for an
//! input of side L the output side is L - (s1 + s2 + s3 - 3).

use std::io::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::conv::{conv_backward, conv_valid, tanh_backward, tanh_map, KernelBank, KernelBankGrads};
use crate::enhance::{reconstruct_enhanced, EnhanceConfig};
use crate::error::{Error, Result};
use crate::exec;
use crate::filters::{decompose, GuidedFilterConfig};
use crate::tensor::Tensor;

/// The three kernel banks and their biases.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    layer1: KernelBank,
    layer2: KernelBank,
    layer3: KernelBank,
}

impl NetworkParams {
    /// Checks the channel chaining between layers and that the network
    /// maps back onto its input channel count.
    pub fn new(layer1: KernelBank, layer2: KernelBank, layer3: KernelBank) -> Result<Self> {
        if layer2.in_channels() != layer1.count()
            || layer3.in_channels() != layer2.count()
            || layer3.count() != layer1.in_channels()
        {
            return Err(Error::InvalidArgument(format!(
                "layer channel chaining broken: {}x{} -> {}x{} -> {}x{}",
                layer1.in_channels(),
                layer1.count(),
                layer2.in_channels(),
                layer2.count(),
                layer3.in_channels(),
                layer3.count()
            )));
        }
        Ok(Self {
            layer1,
            layer2,
            layer3,
        })
    }

    pub fn layer1(&self) -> &KernelBank {
        &self.layer1
    }

    pub fn layer2(&self) -> &KernelBank {
        &self.layer2
    }

    pub fn layer3(&self) -> &KernelBank {
        &self.layer3
    }

    pub fn layers_mut(&mut self) -> [&mut KernelBank; 3] {
        [&mut self.layer1, &mut self.layer2, &mut self.layer3]
    }

    /// Total spatial shrink of the forward pass, (s1-1)+(s2-1)+(s3-1).
    pub fn shrink(&self) -> usize {
        (self.layer1.kh() - 1) + (self.layer2.kh() - 1) + (self.layer3.kh() - 1)
    }

    /// Smallest input side the forward pass accepts.
    pub fn min_input_side(&self) -> usize {
        self.shrink() + 1
    }

    pub fn total_parameters(&self) -> usize {
        self.layer1.parameter_count()
            + self.layer2.parameter_count()
            + self.layer3.parameter_count()
    }

    /// (s1, s2, s3, n1, n2) as used by the weight-file header.
    pub fn sizes(&self) -> (usize, usize, usize, usize, usize) {
        (
            self.layer1.kh(),
            self.layer2.kh(),
            self.layer3.kh(),
            self.layer1.count(),
            self.layer2.count(),
        )
    }
}

/// Which domain the training pairs live in: detail layers (the normal
/// path) or raw image patches (kept for the ablation comparison).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainMode {
    Detail,
    Image,
}

impl std::str::FromStr for DomainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "detail" => Ok(DomainMode::Detail),
            "image" => Ok(DomainMode::Image),
            other => Err(Error::InvalidArgument(format!(
                "unknown domain mode '{other}', expected 'detail' or 'image'"
            ))),
        }
    }
}

impl std::fmt::Display for DomainMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DomainMode::Detail => write!(f, "detail"),
            DomainMode::Image => write!(f, "image"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub steps: usize,
    pub patch_size: usize,
    pub rng_seed: u64,
    pub domain_mode: DomainMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 16,
            steps: 0,
            patch_size: 64,
            rng_seed: 0,
            domain_mode: DomainMode::Detail,
        }
    }
}

/// One aligned training sample: an input patch and the target
/// center-cropped to the network's output size.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchPair {
    pub input: Tensor,
    pub target: Tensor,
}

/// Anything that can hand out training pairs by index. Implementations
/// must be deterministic: `pair(i)` always returns the same values.
pub trait PatchSource: Sync {
    fn len(&self) -> usize;
    fn pair(&self, index: usize) -> Result<PatchPair>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl PatchSource for Vec<PatchPair> {
    fn len(&self) -> usize {
        self.as_slice().len()
    }

    fn pair(&self, index: usize) -> Result<PatchPair> {
        Ok(self[index].clone())
    }
}

/// Weights i.i.d. Gaussian with mean 0 and standard deviation 0.001,
/// biases zero; deterministic in `seed`. Layer 1 reads RGB input and
/// layer 3 produces RGB output.
pub fn init_params(
    s1: usize,
    s2: usize,
    s3: usize,
    n1: usize,
    n2: usize,
    seed: u64,
) -> Result<NetworkParams> {
    if s1 < 1 || s2 < 1 || s3 < 1 || n1 < 1 || n2 < 1 {
        return Err(Error::InvalidArgument(format!(
            "network sizes must be >= 1, got kernels {s1}-{s2}-{s3}, widths {n1}/{n2}"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0f64, 1e-3).expect("valid std dev");
    let mut draw = |n: usize| -> Vec<f32> { (0..n).map(|_| normal.sample(&mut rng) as f32).collect() };

    let layer1 = KernelBank::new(n1, s1, s1, 3, draw(n1 * s1 * s1 * 3), vec![0.0; n1])?;
    let layer2 = KernelBank::new(n2, s2, s2, n1, draw(n2 * s2 * s2 * n1), vec![0.0; n2])?;
    let layer3 = KernelBank::new(3, s3, s3, n2, draw(3 * s3 * s3 * n2), vec![0.0; 3])?;
    NetworkParams::new(layer1, layer2, layer3)
}

fn check_input_size(params: &NetworkParams, input: &Tensor) -> Result<()> {
    let min = params.min_input_side();
    if input.height() < min || input.width() < min {
        return Err(Error::InputTooSmall {
            context: "network forward",
            got_h: input.height(),
            got_w: input.width(),
            min_h: min,
            min_w: min,
        });
    }
    Ok(())
}

/// tanh(W1 * x + b1) -> tanh(W2 * . + b2) -> W3 * . + b3 (layer 3 linear).
pub fn forward(params: &NetworkParams, detail: &Tensor) -> Result<Tensor> {
    check_input_size(params, detail)?;
    let f1 = tanh_map(&conv_valid(detail, &params.layer1)?);
    let f2 = tanh_map(&conv_valid(&f1, &params.layer2)?);
    conv_valid(&f2, &params.layer3)
}

/// Mean over the batch of the squared Frobenius norm of the residual;
/// the sum runs over every pixel and channel, the 1/N only over samples.
pub fn loss(params: &NetworkParams, batch: &[PatchPair]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for pair in batch {
        let out = forward(params, &pair.input)?;
        if !out.same_shape(&pair.target) {
            return Err(Error::ShapeMismatch {
                context: "loss target",
                left: out.shape_string(),
                right: pair.target.shape_string(),
            });
        }
        total += out
            .data()
            .iter()
            .zip(pair.target.data())
            .map(|(o, t)| (o - t) * (o - t))
            .sum::<f64>();
    }
    Ok(total / batch.len() as f64)
}

/// Per-layer gradients of the batch loss.
#[derive(Debug, Clone)]
pub struct NetworkGrads {
    pub layer1: KernelBankGrads,
    pub layer2: KernelBankGrads,
    pub layer3: KernelBankGrads,
}

impl NetworkGrads {
    fn zeros_like(params: &NetworkParams) -> Self {
        Self {
            layer1: KernelBankGrads::zeros_like(&params.layer1),
            layer2: KernelBankGrads::zeros_like(&params.layer2),
            layer3: KernelBankGrads::zeros_like(&params.layer3),
        }
    }

    fn add_assign(&mut self, other: &NetworkGrads) {
        self.layer1.add_assign(&other.layer1);
        self.layer2.add_assign(&other.layer2);
        self.layer3.add_assign(&other.layer3);
    }

    fn scale(&mut self, factor: f64) {
        self.layer1.scale(factor);
        self.layer2.scale(factor);
        self.layer3.scale(factor);
    }

    fn is_finite(&self) -> bool {
        self.layer1.is_finite() && self.layer2.is_finite() && self.layer3.is_finite()
    }
}

/// Full backpropagation for one sample. Returns the sample's summed
/// squared residual and the gradients of that sum. Also reports the
/// spatial output size of each layer, which the update step uses to put
/// bias steps on a per-position scale.
fn sample_gradients(params: &NetworkParams, pair: &PatchPair) -> Result<(f64, NetworkGrads)> {
    check_input_size(params, &pair.input)?;
    let a1 = conv_valid(&pair.input, &params.layer1)?;
    let f1 = tanh_map(&a1);
    let a2 = conv_valid(&f1, &params.layer2)?;
    let f2 = tanh_map(&a2);
    let out = conv_valid(&f2, &params.layer3)?;
    if !out.same_shape(&pair.target) {
        return Err(Error::ShapeMismatch {
            context: "loss target",
            left: out.shape_string(),
            right: pair.target.shape_string(),
        });
    }

    let mut sample_loss = 0.0;
    let mut delta3 = out;
    for (o, &t) in delta3.data_mut().iter_mut().zip(pair.target.data()) {
        let r = *o - t;
        sample_loss += r * r;
        *o = 2.0 * r;
    }

    let (gin3, g3) = conv_backward(&f2, &params.layer3, &delta3)?;
    let delta2 = tanh_backward(&f2, &gin3)?;
    let (gin2, g2) = conv_backward(&f1, &params.layer2, &delta2)?;
    let delta1 = tanh_backward(&f1, &gin2)?;
    let g1 = crate::conv::conv_backward_params(&pair.input, &params.layer1, &delta1)?;

    Ok((
        sample_loss,
        NetworkGrads {
            layer1: g1,
            layer2: g2,
            layer3: g3,
        },
    ))
}

/// Gradients of [`loss`] with respect to every weight and bias (mean over
/// the batch), together with the loss value itself. This is the quantity
/// finite-difference checks compare against.
pub fn loss_gradients(params: &NetworkParams, batch: &[PatchPair]) -> Result<(f64, NetworkGrads)> {
    if batch.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let per_sample: Vec<Result<(f64, NetworkGrads)>> =
        exec::map_indexed(batch.len(), |i| sample_gradients(params, &batch[i]));

    let mut total_loss = 0.0;
    let mut grads = NetworkGrads::zeros_like(params);
    for result in per_sample {
        let (sample_loss, sample_grads) = result?;
        total_loss += sample_loss;
        grads.add_assign(&sample_grads);
    }
    let scale = 1.0 / batch.len() as f64;
    grads.scale(scale);
    Ok((total_loss * scale, grads))
}

/// One SGD update on `params` in place; returns the batch loss measured
/// before the update.
///
/// Weights move by -lr times their mean gradient. Bias gradients are sums
/// over all output positions of their layer, so the bias step is scaled
/// by the reciprocal of that position count; otherwise the effective bias
/// step would grow with the patch area and no single learning rate could
/// keep both weights and biases stable.
pub fn sgd_step(params: &mut NetworkParams, batch: &[PatchPair], learning_rate: f64) -> Result<f64> {
    if learning_rate < 0.0 || !learning_rate.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "learning rate must be finite and >= 0, got {learning_rate}"
        )));
    }
    let (batch_loss, grads) = loss_gradients(params, batch)?;
    if !batch_loss.is_finite() {
        return Err(Error::NonFinite { what: "loss" });
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite { what: "gradient" });
    }

    // Output spatial extent of each layer for this batch's geometry
    // (all pairs in a batch share the first pair's patch size).
    let (in_h, in_w) = (batch[0].input.height(), batch[0].input.width());
    let mut shrink_h = 0;
    let mut shrink_w = 0;
    let mut positions = [0.0f64; 3];
    for (i, bank) in [&params.layer1, &params.layer2, &params.layer3].into_iter().enumerate() {
        shrink_h += bank.kh() - 1;
        shrink_w += bank.kw() - 1;
        positions[i] = ((in_h - shrink_h) * (in_w - shrink_w)) as f64;
    }

    let layer_grads = [&grads.layer1, &grads.layer2, &grads.layer3];
    for ((bank, grad), pos) in params.layers_mut().into_iter().zip(layer_grads).zip(positions) {
        for (w, &g) in bank.weights_mut().iter_mut().zip(grad.weights.iter()) {
            *w = (*w as f64 - learning_rate * g) as f32;
        }
        for (b, &g) in bank.bias_mut().iter_mut().zip(grad.bias.iter()) {
            *b = (*b as f64 - learning_rate * g / pos) as f32;
        }
    }
    Ok(batch_loss)
}

/// Emitted after every SGD step.
pub struct TrainEvent<'a> {
    pub step: usize,
    pub batch_loss: f64,
    pub params: &'a NetworkParams,
}

pub struct TrainResult {
    pub params: NetworkParams,
    /// Batch loss of every step, in order.
    pub loss_history: Vec<f64>,
}

/// Runs `cfg.steps` SGD steps over the source, reshuffling the sample
/// order each epoch (deterministic in `cfg.rng_seed`). A trailing partial
/// batch is dropped and the next epoch begins. The observer sees every
/// step and may persist checkpoints from it.
pub fn train(
    initial: NetworkParams,
    source: &dyn PatchSource,
    cfg: &TrainConfig,
    mut observer: impl FnMut(&TrainEvent<'_>) -> Result<()>,
) -> Result<TrainResult> {
    if cfg.batch_size < 1 {
        return Err(Error::InvalidArgument("batch size must be >= 1".into()));
    }
    if !(cfg.learning_rate > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "learning rate must be > 0, got {}",
            cfg.learning_rate
        )));
    }
    if cfg.patch_size <= initial.shrink() {
        return Err(Error::InvalidArgument(format!(
            "patch size {} too small: the network shrinks inputs by {}",
            cfg.patch_size,
            initial.shrink()
        )));
    }
    if source.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let mut params = initial;
    let mut loss_history = Vec::with_capacity(cfg.steps);
    if cfg.steps == 0 {
        return Ok(TrainResult {
            params,
            loss_history,
        });
    }

    let mut order: Vec<usize> = (0..source.len()).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.rng_seed);
    order.shuffle(&mut rng);
    let mut cursor = 0usize;

    for step in 0..cfg.steps {
        if cursor + cfg.batch_size > order.len() {
            order.shuffle(&mut rng);
            cursor = 0;
            if order.len() < cfg.batch_size {
                return Err(Error::InvalidArgument(format!(
                    "dataset of {} pairs cannot fill a batch of {}",
                    order.len(),
                    cfg.batch_size
                )));
            }
        }
        let indices = &order[cursor..cursor + cfg.batch_size];
        cursor += cfg.batch_size;

        let pairs: Vec<Result<PatchPair>> =
            exec::map_indexed(indices.len(), |i| source.pair(indices[i]));
        let mut batch = Vec::with_capacity(indices.len());
        for p in pairs {
            batch.push(p?);
        }

        let batch_loss = sgd_step(&mut params, &batch, cfg.learning_rate).map_err(|e| match e {
            Error::NonFinite { .. } => Error::TrainingAborted {
                step,
                source: Box::new(e),
            },
            other => other,
        })?;
        loss_history.push(batch_loss);
        observer(&TrainEvent {
            step,
            batch_loss,
            params: &params,
        })?;
    }

    Ok(TrainResult {
        params,
        loss_history,
    })
}

const WEIGHT_MAGIC: &[u8; 4] = b"DRNW";
const WEIGHT_VERSION: u32 = 1;

/// Weight-file layout: magic "DRNW"; u32 version = 1; u32 s1, s2, s3,
/// n1, n2; then for each layer its weights followed by its bias, all as
/// little-endian f32 in (kernel, row, column, input channel) order.
pub fn save_params(path: &Path, params: &NetworkParams) -> Result<()> {
    let (s1, s2, s3, n1, n2) = params.sizes();
    let mut buf = Vec::with_capacity(28 + 4 * params.total_parameters());
    buf.extend_from_slice(WEIGHT_MAGIC);
    for v in [WEIGHT_VERSION, s1 as u32, s2 as u32, s3 as u32, n1 as u32, n2 as u32] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for bank in [&params.layer1, &params.layer2, &params.layer3] {
        for &w in bank.weights() {
            buf.extend_from_slice(&w.to_le_bytes());
        }
        for &b in bank.bias() {
            buf.extend_from_slice(&b.to_le_bytes());
        }
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_params(path: &Path) -> Result<NetworkParams> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 28 {
        return Err(Error::WeightFormat(format!(
            "file is {} bytes, smaller than the 28-byte header",
            bytes.len()
        )));
    }
    if &bytes[0..4] != WEIGHT_MAGIC {
        return Err(Error::WeightFormat(format!(
            "bad magic {:02x?}, expected {WEIGHT_MAGIC:02x?}",
            &bytes[0..4]
        )));
    }
    let mut ints = [0u32; 6];
    for (i, v) in ints.iter_mut().enumerate() {
        *v = u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    }
    let [version, s1, s2, s3, n1, n2] = ints.map(|v| v as usize);
    if version as u32 != WEIGHT_VERSION {
        return Err(Error::WeightFormat(format!(
            "unsupported version {version}, expected {WEIGHT_VERSION}"
        )));
    }
    if s1 == 0 || s2 == 0 || s3 == 0 || n1 == 0 || n2 == 0 {
        return Err(Error::WeightFormat(format!(
            "degenerate sizes {s1}-{s2}-{s3} widths {n1}/{n2}"
        )));
    }
    let counts = [
        n1 * s1 * s1 * 3,
        n1,
        n2 * s2 * s2 * n1,
        n2,
        3 * s3 * s3 * n2,
        3,
    ];
    let total: usize = counts.iter().sum();
    let expected = 28 + 4 * total;
    if bytes.len() != expected {
        return Err(Error::WeightFormat(format!(
            "file is {} bytes but the header implies {expected} (truncated or trailing data)",
            bytes.len()
        )));
    }

    let mut offset = 28;
    let mut read_f32s = |n: usize| -> Vec<f32> {
        let out = bytes[offset..offset + 4 * n]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        offset += 4 * n;
        out
    };
    let w1 = read_f32s(counts[0]);
    let b1 = read_f32s(counts[1]);
    let w2 = read_f32s(counts[2]);
    let b2 = read_f32s(counts[3]);
    let w3 = read_f32s(counts[4]);
    let b3 = read_f32s(counts[5]);

    NetworkParams::new(
        KernelBank::new(n1, s1, s1, 3, w1, b1)?,
        KernelBank::new(n2, s2, s2, n1, w2, b2)?,
        KernelBank::new(3, s3, s3, n2, w3, b3)?,
    )
}

/// Whole-image inference: decompose, mirror-pad the detail layer so the
/// network output realigns with the base layer, run the network, then
/// reconstruct according to the enhancement config. Output dimensions
/// equal input dimensions.
pub fn derain_image(
    image: &Tensor,
    params: &NetworkParams,
    gf_cfg: &GuidedFilterConfig,
    enhance_cfg: &EnhanceConfig,
) -> Result<Tensor> {
    let shrink = params.shrink();
    let min = params.min_input_side();
    if image.height() < min || image.width() < min {
        return Err(Error::InputTooSmall {
            context: "derain",
            got_h: image.height(),
            got_w: image.width(),
            min_h: min,
            min_w: min,
        });
    }
    let parts = decompose(image, gf_cfg)?;
    let pad_lo = shrink / 2;
    let pad_hi = shrink - pad_lo;
    let padded = parts.detail.pad_symmetric(pad_lo, pad_hi, pad_lo, pad_hi)?;
    let derained_detail = forward(params, &padded)?;
    reconstruct_enhanced(&parts.base, &derained_detail, enhance_cfg, gf_cfg)
}
