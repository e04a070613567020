#![allow(dead_code)]

use cfsim_core::{ConvSpec, Layout, Tensor};
use rand::Rng;

/// Small-integer tensors so every sum is exact in f32.
pub fn int_tensor(rng: &mut impl Rng, logical: [usize; 4], layout: Layout) -> Tensor {
    Tensor::from_fn(logical, layout, |_, _, _, _| rng.gen_range(-3i32..=3) as f32).unwrap()
}

pub fn int_inputs(rng: &mut impl Rng, spec: &ConvSpec) -> (Tensor, Tensor) {
    let x = int_tensor(
        rng,
        [spec.batch, spec.in_channels, spec.in_height, spec.in_width],
        Layout::Nhwc,
    );
    let f = int_tensor(
        rng,
        [spec.out_channels, spec.in_channels, spec.filter_height, spec.filter_width],
        Layout::Hwcn,
    );
    (x, f)
}

/// Output-stationary loop nest over raw NHWC / HWCN buffers, written
/// independently of the library's indexing helpers.
pub fn brute_conv(x: &[f32], f: &[f32], s: &ConvSpec) -> Vec<f32> {
    let ho = (s.in_height + 2 * s.pad_h - s.dilation_h * (s.filter_height - 1) - 1) / s.stride_h + 1;
    let wo = (s.in_width + 2 * s.pad_w - s.dilation_w * (s.filter_width - 1) - 1) / s.stride_w + 1;
    let mut out = vec![0.0f32; s.batch * ho * wo * s.out_channels];
    for n in 0..s.batch {
        for i in 0..ho {
            for j in 0..wo {
                for o in 0..s.out_channels {
                    let mut acc = 0.0f32;
                    for r in 0..s.filter_height {
                        for q in 0..s.filter_width {
                            let h = (i * s.stride_h + r * s.dilation_h) as isize - s.pad_h as isize;
                            let w = (j * s.stride_w + q * s.dilation_w) as isize - s.pad_w as isize;
                            if h < 0 || w < 0 || h >= s.in_height as isize || w >= s.in_width as isize {
                                continue;
                            }
                            let (h, w) = (h as usize, w as usize);
                            for c in 0..s.in_channels {
                                let xv = x[((n * s.in_height + h) * s.in_width + w) * s.in_channels + c];
                                let fv = f[((r * s.filter_width + q) * s.in_channels + c) * s.out_channels + o];
                                acc += xv * fv;
                            }
                        }
                    }
                    out[((n * ho + i) * wo + j) * s.out_channels + o] = acc;
                }
            }
        }
    }
    out
}

pub fn naive_gemm(a: &[f32], b: &[f32], m: usize, k: usize, n: usize) -> Vec<f32> {
    let mut c = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            for p in 0..k {
                c[i * n + j] += a[i * k + p] * b[p * n + j];
            }
        }
    }
    c
}

/// Random valid spec inside the given limits.
pub fn random_spec(rng: &mut impl Rng, max_batch: usize, channels: &[usize], max_hw: usize, max_co: usize) -> ConvSpec {
    loop {
        let hf = rng.gen_range(1..=5);
        let wf = rng.gen_range(1..=5);
        let mut s = ConvSpec::new(
            rng.gen_range(1..=max_batch),
            channels[rng.gen_range(0..channels.len())],
            rng.gen_range(1..=max_hw),
            rng.gen_range(1..=max_hw),
            rng.gen_range(1..=max_co),
            hf,
            wf,
        );
        s.stride_h = rng.gen_range(1..=4);
        s.stride_w = rng.gen_range(1..=4);
        s.pad_h = rng.gen_range(0..=2);
        s.pad_w = rng.gen_range(0..=2);
        s.dilation_h = rng.gen_range(1..=2);
        s.dilation_w = rng.gen_range(1..=2);
        if s.validate().is_ok() {
            return s;
        }
    }
}
