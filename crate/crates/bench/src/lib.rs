//! Shared inputs for the benchmarks.

use cfsim_core::{ConvSpec, Layout, Tensor};

/// Small layers cheap enough for functional runs.
pub fn small_layers() -> Vec<(&'static str, ConvSpec)> {
    vec![
        ("3x3_s1", ConvSpec::new(2, 16, 14, 14, 16, 3, 3).with_padding(1)),
        ("3x3_s2", ConvSpec::new(2, 16, 14, 14, 16, 3, 3).with_padding(1).with_stride(2)),
        ("1x1", ConvSpec::new(2, 32, 14, 14, 32, 1, 1)),
    ]
}

/// Layers at network scale, for the timing model only.
pub fn large_layers() -> Vec<(&'static str, ConvSpec)> {
    vec![
        ("56x56x64", ConvSpec::new(8, 64, 56, 56, 64, 3, 3).with_padding(1)),
        ("28x28x128_s2", ConvSpec::new(8, 128, 56, 56, 128, 3, 3).with_padding(1).with_stride(2)),
        ("narrow_channels", ConvSpec::new(8, 8, 128, 128, 128, 3, 3)),
    ]
}

pub fn inputs(spec: &ConvSpec) -> (Tensor, Tensor) {
    let x = Tensor::from_fn(
        [spec.batch, spec.in_channels, spec.in_height, spec.in_width],
        Layout::Nhwc,
        |n, c, h, w| ((n * 31 + c * 17 + h * 7 + w) % 13) as f32 * 0.25 - 1.5,
    )
    .expect("valid shape");
    let f = Tensor::from_fn(
        [spec.out_channels, spec.in_channels, spec.filter_height, spec.filter_width],
        Layout::Hwcn,
        |o, c, r, s| ((o * 5 + c * 3 + r * 2 + s) % 7) as f32 * 0.5 - 1.5,
    )
    .expect("valid shape");
    (x, f)
}
