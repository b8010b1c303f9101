//! Single-image rain removal.
//!
//! The pipeline decomposes an image into a smooth base layer and a
//! high-frequency detail layer with a self-guided filter, maps the rainy
//! detail layer to a clean detail layer with a small three-layer
//! convolutional network, and reconstructs the output (optionally with
//! base-layer enhancement and detail boosting). The crate also contains
//! the procedural rain synthesizer used to build training data, the
//! training loop, and the evaluation metrics.
//!
//! Everything is deterministic for a fixed seed: parallel sections only
//! ever partition disjoint output ranges and all floating-point
//! reductions run in a fixed order, so results are bitwise identical
//! for any thread count.

pub mod boxfilter;
pub mod conv;
pub mod dataset;
pub mod enhance;
pub mod error;
mod exec;
pub mod filters;
pub mod metrics;
pub mod network;
pub mod rainsynth;
pub mod tensor;

pub use boxfilter::box_mean;
pub use conv::{conv_backward, conv_valid, tanh_backward, tanh_map, KernelBank, KernelBankGrads};
pub use enhance::{enhance_base, reconstruct, reconstruct_enhanced, EnhanceConfig, EnhanceMode};
pub use error::{Error, Result};
pub use filters::{decompose, guided_filter, Decomposition, GuidedFilterConfig};
pub use metrics::{bench_inference, sparsity_fraction, ssim, BenchReport, SsimConfig};
pub use network::{
    derain_image, forward, init_params, load_params, loss, save_params, sgd_step, train,
    DomainMode, NetworkParams, PatchPair, TrainConfig, TrainEvent, TrainResult,
};
pub use rainsynth::{composite, default_variants, render_rain_layer, RainParams};
pub use tensor::Tensor;
