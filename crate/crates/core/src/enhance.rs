//! Reconstruction of the derained image and its enhanced variants.
//!
//! Plain reconstruction adds the derained detail layer back onto the
//! base layer. The enhanced path remaps the base layer (gamma plus a
//! percentile contrast stretch) and boosts the detail layer, either
//! inside the reconstruction ("simultaneous") or as a post-processing
//! step on the plain output's own re-decomposition.

use crate::error::{Error, Result};
use crate::filters::{decompose, GuidedFilterConfig};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnhanceMode {
    None,
    Post,
    Simultaneous,
}

impl std::str::FromStr for EnhanceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(EnhanceMode::None),
            "post" => Ok(EnhanceMode::Post),
            "simultaneous" => Ok(EnhanceMode::Simultaneous),
            other => Err(Error::InvalidArgument(format!(
                "unknown enhance mode '{other}', expected none|post|simultaneous"
            ))),
        }
    }
}

impl std::fmt::Display for EnhanceMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EnhanceMode::None => write!(f, "none"),
            EnhanceMode::Post => write!(f, "post"),
            EnhanceMode::Simultaneous => write!(f, "simultaneous"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnhanceConfig {
    /// Base-layer luminance exponent, in (0, 2].
    pub gamma: f64,
    /// Multiplier on the network's detail output, > 0.
    pub detail_boost: f64,
    pub mode: EnhanceMode,
}

impl Default for EnhanceConfig {
    fn default() -> Self {
        Self {
            gamma: 0.8,
            detail_boost: 2.0,
            mode: EnhanceMode::Simultaneous,
        }
    }
}

impl EnhanceConfig {
    /// Plain reconstruction, no enhancement.
    pub fn disabled() -> Self {
        Self {
            mode: EnhanceMode::None,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 2.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma must be in (0, 2], got {}",
                self.gamma
            )));
        }
        if !(self.detail_boost > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "detail boost must be > 0, got {}",
                self.detail_boost
            )));
        }
        Ok(())
    }
}

/// Derained output: base + detail, clamped into [0, 1].
pub fn reconstruct(base: &Tensor, derained_detail: &Tensor) -> Result<Tensor> {
    if !base.same_shape(derained_detail) {
        return Err(Error::ShapeMismatch {
            context: "reconstruct",
            left: base.shape_string(),
            right: derained_detail.shape_string(),
        });
    }
    Ok(base.add(derained_detail)?.clamp01())
}

fn luminance_values(t: &Tensor) -> Result<Vec<f64>> {
    match t.channels() {
        1 => Ok(t.data().to_vec()),
        3 => Ok(t
            .data()
            .chunks_exact(3)
            .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
            .collect()),
        c => Err(Error::InvalidArgument(format!(
            "luminance needs 1 or 3 channels, got {c}"
        ))),
    }
}

/// Linear-interpolated percentile of already-sorted values, q in [0, 1].
fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 >= sorted.len() {
        sorted[sorted.len() - 1]
    } else {
        sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
    }
}

/// Base-layer remap: per-channel gamma, then a linear contrast stretch
/// taking the 1st/99th luminance percentiles to 0.02/0.98 (the same
/// affine on every channel), clamped to [0, 1]. When the two percentiles
/// coincide the stretch is skipped and the gamma-mapped image returned.
pub fn enhance_base(base: &Tensor, cfg: &EnhanceConfig) -> Result<Tensor> {
    cfg.validate()?;
    // gamma == 1 must be an exact no-op so the enhanced path can
    // degenerate bitwise to plain reconstruction.
    let mapped = if cfg.gamma == 1.0 {
        base.clone()
    } else {
        base.map(|v| v.max(0.0).powf(cfg.gamma))
    };

    let mut lum = luminance_values(&mapped)?;
    lum.sort_by(|a, b| a.partial_cmp(b).expect("luminance values are finite"));
    let p_lo = percentile_sorted(&lum, 0.01);
    let p_hi = percentile_sorted(&lum, 0.99);
    if p_hi - p_lo <= f64::EPSILON {
        return Ok(mapped);
    }
    let scale = (0.98 - 0.02) / (p_hi - p_lo);
    Ok(mapped.map(|v| (0.02 + (v - p_lo) * scale).clamp(0.0, 1.0)))
}

/// Enhanced reconstruction: enhance_base(base) + detail_boost * detail,
/// clamped. Mode `post` first reconstructs plainly, re-decomposes the
/// result and enhances that; mode `none` bypasses enhancement entirely.
pub fn reconstruct_enhanced(
    base: &Tensor,
    derained_detail: &Tensor,
    cfg: &EnhanceConfig,
    gf_cfg: &GuidedFilterConfig,
) -> Result<Tensor> {
    cfg.validate()?;
    match cfg.mode {
        EnhanceMode::None => reconstruct(base, derained_detail),
        EnhanceMode::Simultaneous => {
            let enhanced = enhance_base(base, cfg)?;
            Ok(enhanced
                .add(&derained_detail.scale(cfg.detail_boost))?
                .clamp01())
        }
        EnhanceMode::Post => {
            let plain = reconstruct(base, derained_detail)?;
            let parts = decompose(&plain, gf_cfg)?;
            let enhanced = enhance_base(&parts.base, cfg)?;
            Ok(enhanced
                .add(&parts.detail.scale(cfg.detail_boost))?
                .clamp01())
        }
    }
}
