//! Box-window mean via per-channel integral images.
//!
//! The window is clipped to the image and divided by the true in-bounds
//! count, so edges are not darkened. Cost is independent of the radius.

use crate::error::Result;
use crate::exec;
use crate::tensor::Tensor;

/// Per-channel mean over the (2r+1)x(2r+1) window centered on each pixel,
/// window intersected with the image.
pub fn box_mean(input: &Tensor, radius: usize) -> Result<Tensor> {
    let (h, w, channels) = input.shape();

    // Integral images, one per channel: s[(y+1)*(w+1) + (x+1)] holds the
    // sum of the inclusive rectangle (0,0)..(y,x).
    let mut integrals = vec![0.0f64; channels * (h + 1) * (w + 1)];
    let stride = w + 1;
    for c in 0..channels {
        let s = &mut integrals[c * (h + 1) * stride..(c + 1) * (h + 1) * stride];
        for y in 0..h {
            let row = input.row(y);
            let mut row_sum = 0.0;
            for x in 0..w {
                row_sum += row[x * channels + c];
                s[(y + 1) * stride + x + 1] = s[y * stride + x + 1] + row_sum;
            }
        }
    }

    let r = radius as isize;
    let mut out = Tensor::zeros(h, w, channels);
    let row_stride = w * channels;
    exec::for_each_chunk_mut(out.data_mut(), row_stride, |y, out_row| {
        let y0 = (y as isize - r).max(0) as usize;
        let y1 = (y as isize + r).min(h as isize - 1) as usize + 1;
        for x in 0..w {
            let x0 = (x as isize - r).max(0) as usize;
            let x1 = (x as isize + r).min(w as isize - 1) as usize + 1;
            let count = ((y1 - y0) * (x1 - x0)) as f64;
            for c in 0..channels {
                let s = &integrals[c * (h + 1) * stride..(c + 1) * (h + 1) * stride];
                let sum =
                    s[y1 * stride + x1] - s[y0 * stride + x1] - s[y1 * stride + x0] + s[y0 * stride + x0];
                out_row[x * channels + c] = sum / count;
            }
        }
    });
    Ok(out)
}
