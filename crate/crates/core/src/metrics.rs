//! Image quality metrics and the inference timing harness.

use std::time::Instant;

use crate::enhance::EnhanceConfig;
use crate::error::{Error, Result};
use crate::exec;
use crate::filters::GuidedFilterConfig;
use crate::network::{derain_image, NetworkParams};
use crate::tensor::Tensor;

/// Standard SSIM constants: 11x11 Gaussian window with sigma 1.5,
/// k1 = 0.01, k2 = 0.03, dynamic range 1 for [0, 1] images.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimConfig {
    pub window_side: usize,
    pub window_sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self {
            window_side: 11,
            window_sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

impl SsimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_side < 3 || self.window_side % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "SSIM window side must be odd and >= 3, got {}",
                self.window_side
            )));
        }
        if !(self.k1 > 0.0 && self.k2 > 0.0) {
            return Err(Error::InvalidArgument(
                "SSIM stability constants k1, k2 must be > 0".into(),
            ));
        }
        if !(self.window_sigma > 0.0 && self.dynamic_range > 0.0) {
            return Err(Error::InvalidArgument(
                "SSIM sigma and dynamic range must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Rec. 601 luminance; single-channel images pass through.
pub(crate) fn luminance(t: &Tensor) -> Result<Tensor> {
    match t.channels() {
        1 => Ok(t.clone()),
        3 => {
            let mut out = Tensor::zeros(t.height(), t.width(), 1);
            for (o, p) in out.data_mut().iter_mut().zip(t.data().chunks_exact(3)) {
                *o = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
            }
            Ok(out)
        }
        c => Err(Error::InvalidArgument(format!(
            "luminance needs 1 or 3 channels, got {c}"
        ))),
    }
}

fn gaussian_window(side: usize, sigma: f64) -> Vec<f64> {
    let half = (side / 2) as f64;
    let mut w: Vec<f64> = (0..side)
        .map(|i| (-((i as f64 - half).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= total;
    }
    w
}

/// Separable valid convolution of a single-channel tensor with a
/// normalized 1-D window applied along both axes.
fn weighted_local_mean(t: &Tensor, window: &[f64]) -> Tensor {
    let side = window.len();
    let (h, w, _) = t.shape();
    let ow = w - side + 1;
    let oh = h - side + 1;

    // horizontal pass
    let mut hpass = Tensor::zeros(h, ow, 1);
    exec::for_each_chunk_mut(hpass.data_mut(), ow, |y, out_row| {
        let row = t.row(y);
        for (x, out) in out_row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (i, &g) in window.iter().enumerate() {
                acc += g * row[x + i];
            }
            *out = acc;
        }
    });

    // vertical pass
    let mut out = Tensor::zeros(oh, ow, 1);
    exec::for_each_chunk_mut(out.data_mut(), ow, |y, out_row| {
        for x in 0..ow {
            let mut acc = 0.0;
            for (i, &g) in window.iter().enumerate() {
                acc += g * hpass.get(y + i, x, 0);
            }
            out_row[x] = acc;
        }
    });
    out
}

/// Mean structural similarity over the valid region (no padding):
/// images are converted to luminance and compared with Gaussian-weighted
/// local statistics. 1 means identical; anti-correlated structure goes
/// negative.
pub fn ssim(a: &Tensor, b: &Tensor, cfg: &SsimConfig) -> Result<f64> {
    cfg.validate()?;
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch {
            context: "ssim",
            left: a.shape_string(),
            right: b.shape_string(),
        });
    }
    if a.height() < cfg.window_side || a.width() < cfg.window_side {
        return Err(Error::InputTooSmall {
            context: "ssim",
            got_h: a.height(),
            got_w: a.width(),
            min_h: cfg.window_side,
            min_w: cfg.window_side,
        });
    }

    let la = luminance(a)?;
    let lb = luminance(b)?;
    let window = gaussian_window(cfg.window_side, cfg.window_sigma);

    let mu_a = weighted_local_mean(&la, &window);
    let mu_b = weighted_local_mean(&lb, &window);
    let aa = weighted_local_mean(&la.mul(&la)?, &window);
    let bb = weighted_local_mean(&lb.mul(&lb)?, &window);
    let ab = weighted_local_mean(&la.mul(&lb)?, &window);

    let c1 = (cfg.k1 * cfg.dynamic_range).powi(2);
    let c2 = (cfg.k2 * cfg.dynamic_range).powi(2);

    let mut total = 0.0;
    for i in 0..mu_a.len() {
        let ma = mu_a.data()[i];
        let mb = mu_b.data()[i];
        let va = aa.data()[i] - ma * ma;
        let vb = bb.data()[i] - mb * mb;
        let cov = ab.data()[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
            / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    Ok(total / mu_a.len() as f64)
}

/// Fraction of values with |v - offset| < threshold. Detail layers use
/// offset 0; for raw images pass the image mean so the comparison is
/// against fluctuation around the brightness level.
pub fn sparsity_fraction(t: &Tensor, offset: f64, threshold: f64) -> f64 {
    let hits = t
        .data()
        .iter()
        .filter(|&&v| (v - offset).abs() < threshold)
        .count();
    hits as f64 / t.len() as f64
}

pub const DEFAULT_BENCH_SIDES: [usize; 3] = [250, 500, 750];

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub side: usize,
    /// Median wall-clock seconds of all runs at this size.
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub threads: usize,
    pub runs_per_size: usize,
}

impl BenchReport {
    pub fn text_table(&self) -> String {
        let mut out = format!(
            "inference timing (median of {} runs, {} thread{})\n{:>10}  {:>12}\n",
            self.runs_per_size,
            self.threads,
            if self.threads == 1 { "" } else { "s" },
            "size",
            "seconds"
        );
        for row in &self.rows {
            out.push_str(&format!(
                "{:>10}  {:>12.4}\n",
                format!("{}x{}", row.side, row.side),
                row.seconds
            ));
        }
        out
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("side,seconds,threads,runs\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.side, row.seconds, self.threads, self.runs_per_size
            ));
        }
        out
    }
}

/// Times the whole-image deraining path (decompose, pad, forward,
/// reconstruct) on synthetic inputs of the given sizes. The timed section
/// runs single-threaded unless a thread count is configured explicitly;
/// the report records the configuration either way.
pub fn bench_inference(
    params: &NetworkParams,
    sides: &[usize],
    runs_per_size: usize,
    threads: Option<usize>,
    gf_cfg: &GuidedFilterConfig,
) -> Result<BenchReport> {
    let runs = runs_per_size.max(3);
    let threads = threads.unwrap_or(1).max(1);
    let enhance = EnhanceConfig::disabled();

    let mut rows = Vec::with_capacity(sides.len());
    for &side in sides {
        let input = Tensor::from_fn(side, side, 3, |y, x, c| {
            let fy = y as f64 * 0.13 + c as f64;
            let fx = x as f64 * 0.07;
            0.5 + 0.3 * (fy.sin() * fx.cos())
        });
        let mut times = Vec::with_capacity(runs);
        for _ in 0..runs {
            let start = Instant::now();
            let out = exec::with_thread_count(threads, || derain_image(&input, params, gf_cfg, &enhance))?;
            times.push(start.elapsed().as_secs_f64());
            std::hint::black_box(out);
        }
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let seconds = if runs % 2 == 1 {
            times[runs / 2]
        } else {
            0.5 * (times[runs / 2 - 1] + times[runs / 2])
        };
        rows.push(BenchRow { side, seconds });
    }
    Ok(BenchReport {
        rows,
        threads,
        runs_per_size: runs,
    })
}
