//! Convolution layer description and the reference kernels every simulated
//! datapath is checked against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Layout, Tensor};

fn one() -> usize {
    1
}

/// Shape of one convolutional layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConvSpec {
    pub batch: usize,
    pub in_channels: usize,
    pub in_height: usize,
    pub in_width: usize,
    pub out_channels: usize,
    pub filter_height: usize,
    pub filter_width: usize,
    #[serde(default = "one")]
    pub stride_h: usize,
    #[serde(default = "one")]
    pub stride_w: usize,
    #[serde(default)]
    pub pad_h: usize,
    #[serde(default)]
    pub pad_w: usize,
    #[serde(default = "one")]
    pub dilation_h: usize,
    #[serde(default = "one")]
    pub dilation_w: usize,
}

impl ConvSpec {
    /// Square-ish spec with unit stride, no padding and no dilation.
    pub fn new(
        batch: usize,
        in_channels: usize,
        in_height: usize,
        in_width: usize,
        out_channels: usize,
        filter_height: usize,
        filter_width: usize,
    ) -> Self {
        Self {
            batch,
            in_channels,
            in_height,
            in_width,
            out_channels,
            filter_height,
            filter_width,
            stride_h: 1,
            stride_w: 1,
            pad_h: 0,
            pad_w: 0,
            dilation_h: 1,
            dilation_w: 1,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride_h = stride;
        self.stride_w = stride;
        self
    }

    pub fn with_padding(mut self, pad: usize) -> Self {
        self.pad_h = pad;
        self.pad_w = pad;
        self
    }

    pub fn with_dilation(mut self, dilation: usize) -> Self {
        self.dilation_h = dilation;
        self.dilation_w = dilation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("batch", self.batch),
            ("in_channels", self.in_channels),
            ("in_height", self.in_height),
            ("in_width", self.in_width),
            ("out_channels", self.out_channels),
            ("filter_height", self.filter_height),
            ("filter_width", self.filter_width),
            ("stride_h", self.stride_h),
            ("stride_w", self.stride_w),
            ("dilation_h", self.dilation_h),
            ("dilation_w", self.dilation_w),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidSpec(format!("{name} must be at least 1")));
        }
        let eff_h = self.dilation_h * (self.filter_height - 1) + 1;
        let eff_w = self.dilation_w * (self.filter_width - 1) + 1;
        if eff_h > self.in_height + 2 * self.pad_h || eff_w > self.in_width + 2 * self.pad_w {
            return Err(Error::InvalidSpec(format!(
                "effective filter {eff_h}x{eff_w} exceeds padded input {}x{}",
                self.in_height + 2 * self.pad_h,
                self.in_width + 2 * self.pad_w
            )));
        }
        Ok(())
    }

    pub fn out_height(&self) -> usize {
        (self.in_height + 2 * self.pad_h - self.dilation_h * (self.filter_height - 1) - 1)
            / self.stride_h
            + 1
    }

    pub fn out_width(&self) -> usize {
        (self.in_width + 2 * self.pad_w - self.dilation_w * (self.filter_width - 1) - 1)
            / self.stride_w
            + 1
    }

    /// Output positions per image, `H_O * W_O`.
    pub fn out_positions(&self) -> usize {
        self.out_height() * self.out_width()
    }

    /// Rows of the lowered feature matrix across the batch.
    pub fn lowered_rows(&self) -> usize {
        self.batch * self.out_positions()
    }

    /// Columns of the lowered feature matrix, `H_F * W_F * C_I`.
    pub fn lowered_cols(&self) -> usize {
        self.filter_height * self.filter_width * self.in_channels
    }

    pub fn filter_positions(&self) -> usize {
        self.filter_height * self.filter_width
    }

    /// Useful multiply-accumulates of the layer.
    pub fn macs(&self) -> u64 {
        self.lowered_rows() as u64 * self.lowered_cols() as u64 * self.out_channels as u64
    }

    /// Input row/column touched by output `(i, j)` and filter tap `(r, s)`,
    /// or `None` when it falls in the zero padding.
    #[inline]
    pub fn input_coord(&self, i: usize, j: usize, r: usize, s: usize) -> Option<(usize, usize)> {
        let h = (i * self.stride_h + r * self.dilation_h) as isize - self.pad_h as isize;
        let w = (j * self.stride_w + s * self.dilation_w) as isize - self.pad_w as isize;
        if h < 0 || w < 0 || h as usize >= self.in_height || w as usize >= self.in_width {
            None
        } else {
            Some((h as usize, w as usize))
        }
    }

    pub(crate) fn check_ifmap(&self, ifmap: &Tensor) -> Result<()> {
        let want = [self.batch, self.in_channels, self.in_height, self.in_width];
        match ifmap.logical_dims() {
            Some(d) if d == want => Ok(()),
            other => Err(Error::Shape(format!(
                "IFMap logical dims {other:?} do not match spec [N, C, H, W] = {want:?}"
            ))),
        }
    }

    pub(crate) fn check_filters(&self, filters: &Tensor) -> Result<()> {
        let want = [
            self.out_channels,
            self.in_channels,
            self.filter_height,
            self.filter_width,
        ];
        match filters.logical_dims() {
            Some(d) if d == want => Ok(()),
            other => Err(Error::Shape(format!(
                "filter logical dims {other:?} do not match spec [C_O, C_I, H_F, W_F] = {want:?}"
            ))),
        }
    }
}

/// Direct convolution with virtual zero padding. Output is NHWC.
pub fn direct_conv(ifmap: &Tensor, filters: &Tensor, spec: &ConvSpec) -> Result<Tensor> {
    spec.validate()?;
    spec.check_ifmap(ifmap)?;
    spec.check_filters(filters)?;
    let (ho, wo) = (spec.out_height(), spec.out_width());
    let mut out = Tensor::zeros(vec![spec.batch, ho, wo, spec.out_channels], Layout::Nhwc)?;
    for n in 0..spec.batch {
        for i in 0..ho {
            for j in 0..wo {
                for co in 0..spec.out_channels {
                    let mut acc = 0.0f32;
                    for r in 0..spec.filter_height {
                        for s in 0..spec.filter_width {
                            let Some((h, w)) = spec.input_coord(i, j, r, s) else {
                                continue;
                            };
                            for c in 0..spec.in_channels {
                                acc += ifmap.at(n, c, h, w) * filters.at(co, c, r, s);
                            }
                        }
                    }
                    out.set(n, co, i, j, acc);
                }
            }
        }
    }
    Ok(out)
}

/// Plain `C = A * B` on row-major matrices.
pub fn gemm(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.layout() != Layout::RowMajorMatrix || b.layout() != Layout::RowMajorMatrix {
        return Err(Error::Layout("gemm operands must be row-major matrices".into()));
    }
    let (m, k) = (a.rows(), a.cols());
    let (kb, n) = (b.rows(), b.cols());
    if k != kb {
        return Err(Error::Shape(format!(
            "inner dimensions differ: {m}x{k} * {kb}x{n}"
        )));
    }
    let mut c = Tensor::zeros_matrix(m, n);
    let (ad, bd) = (a.data(), b.data());
    for i in 0..m {
        for p in 0..k {
            let av = ad[i * k + p];
            if av == 0.0 {
                continue;
            }
            for j in 0..n {
                let cur = c.get2(i, j);
                c.set2(i, j, cur + av * bd[p * n + j]);
            }
        }
    }
    Ok(c)
}
