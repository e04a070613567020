//! Dense tensors tagged with an explicit memory layout.
//!
//! Every 4-D layout is a permutation of the logical axes `(n, c, h, w)`.
//! Filters reuse the same machinery with `n` standing for the output channel,
//! so a filter bank in [`Layout::Hwcn`] has physical dims
//! `[H_F, W_F, C_I, C_O]`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linearization order of a tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Layout {
    Nchw,
    Nhwc,
    Hwcn,
    RowMajorMatrix,
}

impl Layout {
    pub const fn rank(self) -> usize {
        match self {
            Layout::RowMajorMatrix => 2,
            _ => 4,
        }
    }

    /// For each physical dimension, the logical axis (0=n, 1=c, 2=h, 3=w) it holds.
    const fn axes(self) -> Option<[usize; 4]> {
        match self {
            Layout::Nchw => Some([0, 1, 2, 3]),
            Layout::Nhwc => Some([0, 2, 3, 1]),
            Layout::Hwcn => Some([2, 3, 1, 0]),
            Layout::RowMajorMatrix => None,
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Layout::Nchw => "NCHW",
            Layout::Nhwc => "NHWC",
            Layout::Hwcn => "HWCN",
            Layout::RowMajorMatrix => "row-major matrix",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    layout: Layout,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, layout: Layout, data: Vec<f32>) -> Result<Self> {
        if dims.len() != layout.rank() {
            return Err(Error::Layout(format!(
                "{layout} needs rank {}, got {} dims",
                layout.rank(),
                dims.len()
            )));
        }
        let len: usize = dims.iter().product();
        if len != data.len() {
            return Err(Error::Shape(format!(
                "dims {dims:?} hold {len} elements but data has {}",
                data.len()
            )));
        }
        Ok(Self { dims, layout, data })
    }

    pub fn zeros(dims: Vec<usize>, layout: Layout) -> Result<Self> {
        let len = dims.iter().product();
        Self::new(dims, layout, vec![0.0; len])
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        Self::new(vec![rows, cols], Layout::RowMajorMatrix, data)
    }

    pub fn zeros_matrix(rows: usize, cols: usize) -> Self {
        Self {
            dims: vec![rows, cols],
            layout: Layout::RowMajorMatrix,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a 4-D tensor from logical extents `[n, c, h, w]` and a value function.
    pub fn from_fn(
        logical: [usize; 4],
        layout: Layout,
        mut f: impl FnMut(usize, usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let axes = layout
            .axes()
            .ok_or_else(|| Error::Layout(format!("{layout} is not a 4-D layout")))?;
        let dims: Vec<usize> = axes.iter().map(|&a| logical[a]).collect();
        let mut t = Self::zeros(dims, layout)?;
        for n in 0..logical[0] {
            for c in 0..logical[1] {
                for h in 0..logical[2] {
                    for w in 0..logical[3] {
                        let off = t.offset([n, c, h, w]);
                        t.data[off] = f(n, c, h, w);
                    }
                }
            }
        }
        Ok(t)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// Logical extents `[n, c, h, w]` of a 4-D tensor.
    pub fn logical_dims(&self) -> Option<[usize; 4]> {
        let axes = self.layout.axes()?;
        let mut out = [0; 4];
        for (phys, &axis) in axes.iter().enumerate() {
            out[axis] = self.dims[phys];
        }
        Some(out)
    }

    fn offset(&self, logical: [usize; 4]) -> usize {
        let axes = self.layout.axes().expect("4-D layout");
        axes.iter()
            .zip(&self.dims)
            .fold(0, |acc, (&axis, &extent)| acc * extent + logical[axis])
    }

    /// Value at logical coordinate `(n, c, h, w)`. Panics on a matrix or out-of-range index.
    #[inline]
    pub fn at(&self, n: usize, c: usize, h: usize, w: usize) -> f32 {
        self.data[self.offset([n, c, h, w])]
    }

    #[inline]
    pub fn set(&mut self, n: usize, c: usize, h: usize, w: usize, v: f32) {
        let off = self.offset([n, c, h, w]);
        self.data[off] = v;
    }

    pub fn rows(&self) -> usize {
        self.dims[0]
    }

    pub fn cols(&self) -> usize {
        self.dims[1]
    }

    #[inline]
    pub fn get2(&self, r: usize, c: usize) -> f32 {
        self.data[r * self.dims[1] + c]
    }

    #[inline]
    pub fn set2(&mut self, r: usize, c: usize, v: f32) {
        let cols = self.dims[1];
        self.data[r * cols + c] = v;
    }

    /// Re-linearizes the same logical values under `target`.
    pub fn relayout(&self, target: Layout) -> Result<Tensor> {
        if self.layout == target {
            return Ok(self.clone());
        }
        let logical = self.logical_dims().ok_or_else(|| {
            Error::Layout(format!("cannot relayout a {} to {target}", self.layout))
        })?;
        if target.rank() != 4 {
            return Err(Error::Layout(format!(
                "cannot relayout a rank-4 {} tensor to {target}",
                self.layout
            )));
        }
        Tensor::from_fn(logical, target, |n, c, h, w| self.at(n, c, h, w))
    }
}
