//! Guided image filtering and the base/detail decomposition.
//!
//! The base layer is the output of a self-guided filter (an
//! edge-preserving smoother built from local linear models); the detail
//! layer is whatever remains, so base + detail reconstructs the source
//! exactly. Rain streaks land in the detail layer as long as the filter
//! radius exceeds the streak width.

use crate::boxfilter::box_mean;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidedFilterConfig {
    /// Box window radius in pixels.
    pub radius: usize,
    /// Regularization in squared normalized-intensity units.
    pub epsilon: f64,
}

impl Default for GuidedFilterConfig {
    fn default() -> Self {
        // Large enough that rain streaks fall entirely in the detail layer.
        Self {
            radius: 15,
            epsilon: 0.01,
        }
    }
}

impl GuidedFilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radius < 1 {
            return Err(Error::InvalidArgument(
                "guided filter radius must be >= 1".into(),
            ));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "guided filter epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Paired base and detail layers; their sum is the source image.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub base: Tensor,
    pub detail: Tensor,
}

/// Per-channel guided filter.
///
/// With window means mu_I (guide), mu_p (input), guide variance var and
/// covariance cov, each window fits the linear model a = cov / (var + eps),
/// b = mu_p - a * mu_I; the output averages the models over all windows
/// covering a pixel: mean(a) * guide + mean(b). Self-guidance
/// (guide == input) is the usual path.
pub fn guided_filter(input: &Tensor, guide: &Tensor, cfg: &GuidedFilterConfig) -> Result<Tensor> {
    cfg.validate()?;
    if !input.same_shape(guide) {
        return Err(Error::ShapeMismatch {
            context: "guided_filter",
            left: input.shape_string(),
            right: guide.shape_string(),
        });
    }
    let r = cfg.radius;
    let mean_guide = box_mean(guide, r)?;
    let mean_input = box_mean(input, r)?;
    let corr_gg = box_mean(&guide.mul(guide)?, r)?;
    let corr_gi = box_mean(&guide.mul(input)?, r)?;

    let var = corr_gg.sub(&mean_guide.mul(&mean_guide)?)?;
    let cov = corr_gi.sub(&mean_guide.mul(&mean_input)?)?;

    let mut a = cov;
    for (av, &vv) in a.data_mut().iter_mut().zip(var.data()) {
        *av /= vv + cfg.epsilon;
    }
    let b = mean_input.sub(&a.mul(&mean_guide)?)?;

    let mean_a = box_mean(&a, r)?;
    let mean_b = box_mean(&b, r)?;
    mean_a.mul(guide)?.add(&mean_b)
}

/// Splits an image into base (guided-filtered, self-guided) and detail
/// (image minus base) layers.
pub fn decompose(image: &Tensor, cfg: &GuidedFilterConfig) -> Result<Decomposition> {
    let base = guided_filter(image, image, cfg)?;
    let detail = image.sub(&base)?;
    Ok(Decomposition { base, detail })
}
