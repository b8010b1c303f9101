//! Dense HxWxC tensor, the pixel container used throughout the crate.
//!
//! Values are stored row-major as (row, column, channel) in `f64`;
//! accumulating numerical kernels elsewhere in the crate also run their
//! sums in `f64` so that oracle comparisons hold to tight tolerances.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor after checking that `data` matches the shape and
    /// that every dimension is at least 1.
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::InvalidArgument(format!(
                "tensor dimensions must be >= 1, got {height}x{width}x{channels}"
            )));
        }
        let expected = height * width * channels;
        if data.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "tensor data length {} does not match shape {height}x{width}x{channels} ({expected})",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        assert!(height >= 1 && width >= 1 && channels >= 1);
        Self {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        }
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Self {
        let mut t = Self::zeros(height, width, channels);
        t.data.fill(value);
        t
    }

    /// Builds a tensor by evaluating `f(row, col, channel)`.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut t = Self::zeros(height, width, channels);
        let mut i = 0;
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    t.data[i] = f(y, x, c);
                    i += 1;
                }
            }
        }
        t
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    /// (height, width, channels)
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn shape_string(&self) -> String {
        format!("{}x{}x{}", self.height, self.width, self.channels)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub(crate) fn index(&self, y: usize, x: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[self.index(y, x, c)]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, value: f64) {
        let i = self.index(y, x, c);
        self.data[i] = value;
    }

    /// Contiguous slice holding row `y` (width * channels values).
    #[inline]
    pub fn row(&self, y: usize) -> &[f64] {
        let stride = self.width * self.channels;
        &self.data[y * stride..(y + 1) * stride]
    }

    pub fn same_shape(&self, other: &Tensor) -> bool {
        self.shape() == other.shape()
    }

    fn check_same_shape(&self, other: &Tensor, context: &'static str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                context,
                left: self.shape_string(),
                right: other.shape_string(),
            })
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v = f(*v);
        }
        out
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, "mul", |a, b| a * b)
    }

    pub fn scale(&self, factor: f64) -> Tensor {
        self.map(|v| v * factor)
    }

    pub fn clamp01(&self) -> Tensor {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    fn zip_with(
        &self,
        other: &Tensor,
        context: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor> {
        self.check_same_shape(other, context)?;
        let mut out = self.clone();
        for (v, &b) in out.data.iter_mut().zip(other.data.iter()) {
            *v = f(*v, b);
        }
        Ok(out)
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean_value(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Mirror-pads the spatial dimensions, repeating the edge sample
    /// (…, v1, v0 | v0, v1, …). Padding must not exceed the corresponding
    /// dimension.
    pub fn pad_symmetric(&self, top: usize, bottom: usize, left: usize, right: usize) -> Result<Tensor> {
        if top > self.height || bottom > self.height || left > self.width || right > self.width {
            return Err(Error::InvalidArgument(format!(
                "symmetric padding ({top},{bottom},{left},{right}) exceeds image size {}",
                self.shape_string()
            )));
        }
        let mirror = |i: isize, n: usize| -> usize {
            if i < 0 {
                (-i - 1) as usize
            } else if i as usize >= n {
                2 * n - 1 - i as usize
            } else {
                i as usize
            }
        };
        let (h, w, c) = (self.height, self.width, self.channels);
        let mut out = Tensor::zeros(h + top + bottom, w + left + right, c);
        for oy in 0..out.height {
            let sy = mirror(oy as isize - top as isize, h);
            for ox in 0..out.width {
                let sx = mirror(ox as isize - left as isize, w);
                let src = self.index(sy, sx, 0);
                let dst = out.index(oy, ox, 0);
                out.data[dst..dst + c].copy_from_slice(&self.data[src..src + c]);
            }
        }
        Ok(out)
    }

    /// Extracts the centered `out_h` x `out_w` window. The margins must be
    /// even so the crop aligns exactly.
    pub fn center_crop(&self, out_h: usize, out_w: usize) -> Result<Tensor> {
        if out_h > self.height || out_w > self.width {
            return Err(Error::InvalidArgument(format!(
                "center crop {out_h}x{out_w} larger than source {}",
                self.shape_string()
            )));
        }
        let (mh, mw) = (self.height - out_h, self.width - out_w);
        if mh % 2 != 0 || mw % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "center crop margins must be even, got {mh} and {mw}"
            )));
        }
        Ok(self.crop(mh / 2, mw / 2, out_h, out_w))
    }

    /// Copies the `out_h` x `out_w` window with top-left corner (y0, x0).
    pub fn crop(&self, y0: usize, x0: usize, out_h: usize, out_w: usize) -> Tensor {
        assert!(y0 + out_h <= self.height && x0 + out_w <= self.width);
        let c = self.channels;
        let mut out = Tensor::zeros(out_h, out_w, c);
        for y in 0..out_h {
            let src = self.index(y0 + y, x0, 0);
            let dst = out.index(y, 0, 0);
            out.data[dst..dst + out_w * c].copy_from_slice(&self.data[src..src + out_w * c]);
        }
        out
    }
}
