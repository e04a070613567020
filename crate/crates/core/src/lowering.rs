//! Index mathematics of im2col.
//!
//! Two column orderings of the lowered matrix are supported:
//!
//! * channel-last: `k = (c * H_F + h_f) * W_F + w_f`, each channel's window is contiguous;
//! * channel-first: `k = (h_f * W_F + w_f) * C_I + c`, all channels of one window
//!   position are contiguous.
//!
//! Channel-first columns split naturally into `H_F * W_F` groups of `C_I`
//! columns. Each group is a 1x1 convolution over a strided gather of the
//! IFMap; [`TileDescriptor`] describes one of them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::conv::ConvSpec;
use crate::error::{Error, Result};
use crate::tensor::{Layout, Tensor};

/// Element width used by footprint reports when nothing else is specified (16-bit).
pub const DEFAULT_ELEM_BYTES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColumnOrdering {
    ChannelLast,
    ChannelFirst,
}

impl ColumnOrdering {
    #[inline]
    pub fn index(self, spec: &ConvSpec, hf: usize, wf: usize, c: usize) -> usize {
        match self {
            ColumnOrdering::ChannelLast => (c * spec.filter_height + hf) * spec.filter_width + wf,
            ColumnOrdering::ChannelFirst => (hf * spec.filter_width + wf) * spec.in_channels + c,
        }
    }

    /// Inverse of [`ColumnOrdering::index`]: `(h_f, w_f, c)` of column `k`.
    #[inline]
    pub fn decode(self, spec: &ConvSpec, k: usize) -> (usize, usize, usize) {
        match self {
            ColumnOrdering::ChannelLast => {
                let wf = k % spec.filter_width;
                let rest = k / spec.filter_width;
                (rest % spec.filter_height, wf, rest / spec.filter_height)
            }
            ColumnOrdering::ChannelFirst => {
                let c = k % spec.in_channels;
                let pos = k / spec.in_channels;
                (pos / spec.filter_width, pos % spec.filter_width, c)
            }
        }
    }
}

/// One decomposed 1x1 filter position `<r, s>` (zero-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TileDescriptor {
    pub r: usize,
    pub s: usize,
}

impl fmt::Display for TileDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}>", self.r + 1, self.s + 1)
    }
}

impl TileDescriptor {
    pub fn new(r: usize, s: usize) -> Self {
        Self { r, s }
    }

    /// Raw IFMap coordinate feeding output `(i, j)`; may lie in the padding.
    pub fn gather(&self, spec: &ConvSpec, i: usize, j: usize) -> (isize, isize) {
        (
            (i * spec.stride_h + self.r * spec.dilation_h) as isize - spec.pad_h as isize,
            (j * spec.stride_w + self.s * spec.dilation_w) as isize - spec.pad_w as isize,
        )
    }

    #[inline]
    pub fn gather_in_bounds(&self, spec: &ConvSpec, i: usize, j: usize) -> Option<(usize, usize)> {
        spec.input_coord(i, j, self.r, self.s)
    }

    /// Sorted, de-duplicated in-bounds IFMap coordinates the tile reads.
    pub fn coords(&self, spec: &ConvSpec) -> Vec<(usize, usize)> {
        let mut out: Vec<_> = (0..spec.out_height())
            .flat_map(|i| (0..spec.out_width()).map(move |j| (i, j)))
            .filter_map(|(i, j)| self.gather_in_bounds(spec, i, j))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Output positions whose gather lands inside the IFMap.
    pub fn in_bounds_positions(&self, spec: &ConvSpec) -> usize {
        self.valid_rows(spec).len() * self.valid_cols(spec).len()
    }

    /// Output rows `i` whose gathered IFMap row is in bounds.
    pub fn valid_rows(&self, spec: &ConvSpec) -> Vec<usize> {
        (0..spec.out_height())
            .filter(|&i| {
                let (h, _) = self.gather(spec, i, 0);
                h >= 0 && (h as usize) < spec.in_height
            })
            .collect()
    }

    /// Output columns `j` whose gathered IFMap column is in bounds.
    pub fn valid_cols(&self, spec: &ConvSpec) -> Vec<usize> {
        (0..spec.out_width())
            .filter(|&j| {
                let (_, w) = self.gather(spec, 0, j);
                w >= 0 && (w as usize) < spec.in_width
            })
            .collect()
    }
}

/// The `H_F * W_F` decomposed 1x1 tiles in filter row-major order.
pub fn decompose_tiles(spec: &ConvSpec) -> Vec<TileDescriptor> {
    (0..spec.filter_height)
        .flat_map(|r| (0..spec.filter_width).map(move |s| TileDescriptor::new(r, s)))
        .collect()
}

/// Lowers the IFMap to an `(N * H_O * W_O) x (H_F * W_F * C_I)` matrix.
/// Batch elements are stacked along rows.
pub fn im2col_explicit(ifmap: &Tensor, spec: &ConvSpec, ord: ColumnOrdering) -> Result<Tensor> {
    spec.validate()?;
    spec.check_ifmap(ifmap)?;
    let (ho, wo) = (spec.out_height(), spec.out_width());
    let k = spec.lowered_cols();
    let mut out = Tensor::zeros_matrix(spec.lowered_rows(), k);
    for n in 0..spec.batch {
        for i in 0..ho {
            for j in 0..wo {
                let row = (n * ho + i) * wo + j;
                for r in 0..spec.filter_height {
                    for s in 0..spec.filter_width {
                        let Some((h, w)) = spec.input_coord(i, j, r, s) else {
                            continue;
                        };
                        for c in 0..spec.in_channels {
                            out.set2(row, ord.index(spec, r, s, c), ifmap.at(n, c, h, w));
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Flattens the filter bank to `(H_F * W_F * C_I) x C_O` with rows in `ord` order.
pub fn lower_filter(filters: &Tensor, spec: &ConvSpec, ord: ColumnOrdering) -> Result<Tensor> {
    spec.check_filters(filters)?;
    let k = spec.lowered_cols();
    let mut out = Tensor::zeros_matrix(k, spec.out_channels);
    for row in 0..k {
        let (r, s, c) = ord.decode(spec, row);
        for co in 0..spec.out_channels {
            out.set2(row, co, filters.at(co, c, r, s));
        }
    }
    Ok(out)
}

/// `perm[k_cf] = k_cl`: where each channel-first column sits in channel-last order.
pub fn column_permutation(spec: &ConvSpec) -> Vec<usize> {
    (0..spec.lowered_cols())
        .map(|k| {
            let (r, s, c) = ColumnOrdering::ChannelFirst.decode(spec, k);
            ColumnOrdering::ChannelLast.index(spec, r, s, c)
        })
        .collect()
}

/// The gathered `(N * H_O * W_O) x C_I` operand of one decomposed tile.
pub fn tile_gather_matrix(ifmap: &Tensor, tile: TileDescriptor, spec: &ConvSpec) -> Result<Tensor> {
    spec.check_ifmap(ifmap)?;
    let (ho, wo) = (spec.out_height(), spec.out_width());
    let mut out = Tensor::zeros_matrix(spec.lowered_rows(), spec.in_channels);
    for n in 0..spec.batch {
        for i in 0..ho {
            for j in 0..wo {
                if let Some((h, w)) = tile.gather_in_bounds(spec, i, j) {
                    let row = (n * ho + i) * wo + j;
                    for c in 0..spec.in_channels {
                        out.set2(row, c, ifmap.at(n, c, h, w));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// The `C_I x C_O` weight slice of one filter position.
pub fn tile_filter_slice(filters: &Tensor, tile: TileDescriptor, spec: &ConvSpec) -> Result<Tensor> {
    spec.check_filters(filters)?;
    let mut out = Tensor::zeros_matrix(spec.in_channels, spec.out_channels);
    for c in 0..spec.in_channels {
        for co in 0..spec.out_channels {
            out.set2(c, co, filters.at(co, c, tile.r, tile.s));
        }
    }
    Ok(out)
}

/// Reinterprets an `(N * H_O * W_O) x C_O` GEMM result as an NHWC OFMap.
pub fn matrix_to_ofmap(mat: Tensor, spec: &ConvSpec) -> Result<Tensor> {
    if mat.rows() != spec.lowered_rows() || mat.cols() != spec.out_channels {
        return Err(Error::Shape(format!(
            "{}x{} matrix is not an OFMap of {}x{}",
            mat.rows(),
            mat.cols(),
            spec.lowered_rows(),
            spec.out_channels
        )));
    }
    Tensor::new(
        vec![spec.batch, spec.out_height(), spec.out_width(), spec.out_channels],
        Layout::Nhwc,
        mat.into_data(),
    )
}

/// Convolution as the sum of the per-tile 1x1 convolutions, tiles in row-major order.
pub fn conv_by_tiles(ifmap: &Tensor, filters: &Tensor, spec: &ConvSpec) -> Result<Tensor> {
    spec.validate()?;
    let mut acc = Tensor::zeros_matrix(spec.lowered_rows(), spec.out_channels);
    for tile in decompose_tiles(spec) {
        let part = crate::conv::gemm(
            &tile_gather_matrix(ifmap, tile, spec)?,
            &tile_filter_slice(filters, tile, spec)?,
        )?;
        for (a, p) in acc.data_mut().iter_mut().zip(part.data()) {
            *a += p;
        }
    }
    matrix_to_ofmap(acc, spec)
}

/// `(|a ∩ b|, |a ∪ b|)` over in-bounds IFMap coordinates.
pub fn tile_overlap_counts(a: TileDescriptor, b: TileDescriptor, spec: &ConvSpec) -> (usize, usize) {
    let ca = a.coords(spec);
    let cb = b.coords(spec);
    let (mut i, mut j, mut inter) = (0, 0, 0);
    while i < ca.len() && j < cb.len() {
        match ca[i].cmp(&cb[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    (inter, ca.len() + cb.len() - inter)
}

/// Jaccard overlap of the IFMap working sets of two tiles.
pub fn tile_overlap(a: TileDescriptor, b: TileDescriptor, spec: &ConvSpec) -> f64 {
    let (inter, union) = tile_overlap_counts(a, b, spec);
    if union == 0 {
        return 1.0;
    }
    inter as f64 / union as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Footprint {
    pub original_bytes: u64,
    pub lowered_bytes: u64,
    pub ratio: f64,
}

/// Size of the IFMap versus its explicitly lowered matrix.
pub fn lowered_memory_footprint(spec: &ConvSpec, elem_bytes: usize) -> Footprint {
    let e = elem_bytes as u64;
    let original = (spec.batch * spec.in_channels * spec.in_height * spec.in_width) as u64 * e;
    let lowered = spec.lowered_rows() as u64 * spec.lowered_cols() as u64 * e;
    Footprint {
        original_bytes: original,
        lowered_bytes: lowered,
        ratio: lowered as f64 / original as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq_ifmap(spec: &ConvSpec) -> Tensor {
        Tensor::from_fn(
            [spec.batch, spec.in_channels, spec.in_height, spec.in_width],
            Layout::Nhwc,
            |n, c, h, w| (n * 1000 + c * 100 + h * 10 + w) as f32,
        )
        .unwrap()
    }

    #[test]
    fn orderings_are_inverse_bijections() {
        let spec = ConvSpec::new(1, 3, 5, 5, 1, 2, 3);
        for ord in [ColumnOrdering::ChannelLast, ColumnOrdering::ChannelFirst] {
            let mut seen = vec![false; spec.lowered_cols()];
            for r in 0..2 {
                for s in 0..3 {
                    for c in 0..3 {
                        let k = ord.index(&spec, r, s, c);
                        assert!(!seen[k]);
                        seen[k] = true;
                        assert_eq!(ord.decode(&spec, k), (r, s, c));
                    }
                }
            }
        }
    }

    #[test]
    fn one_by_one_lowering_is_the_ifmap_matrix() {
        let spec = ConvSpec::new(1, 3, 4, 5, 2, 1, 1);
        let x = seq_ifmap(&spec);
        for ord in [ColumnOrdering::ChannelLast, ColumnOrdering::ChannelFirst] {
            let l = im2col_explicit(&x, &spec, ord).unwrap();
            assert_eq!((l.rows(), l.cols()), (20, 3));
            for h in 0..4 {
                for w in 0..5 {
                    for c in 0..3 {
                        assert_eq!(l.get2(h * 5 + w, c), x.at(0, c, h, w));
                    }
                }
            }
        }
    }

    #[test]
    fn channel_first_first_row_walks_window_then_channels() {
        // 8 channels, 5x5, 3x3 filter: 1A,1B,1C,2A,.. each spread over 8 channels.
        let spec = ConvSpec::new(1, 8, 5, 5, 1, 3, 3);
        let x = seq_ifmap(&spec);
        let l = im2col_explicit(&x, &spec, ColumnOrdering::ChannelFirst).unwrap();
        assert_eq!(l.cols(), 72);
        let mut k = 0;
        for h in 0..3 {
            for w in 0..3 {
                for c in 0..8 {
                    assert_eq!(l.get2(0, k), x.at(0, c, h, w));
                    k += 1;
                }
            }
        }
    }

    #[test]
    fn permutation_small_cases() {
        let s = ConvSpec::new(1, 1, 4, 4, 1, 3, 3);
        assert_eq!(column_permutation(&s), (0..9).collect::<Vec<_>>());
        let s = ConvSpec::new(1, 5, 4, 4, 1, 1, 1);
        assert_eq!(column_permutation(&s), (0..5).collect::<Vec<_>>());
    }

    #[test]
    fn one_by_one_filter_lowering_is_identity() {
        let spec = ConvSpec::new(1, 3, 2, 2, 4, 1, 1);
        let f = Tensor::from_fn([4, 3, 1, 1], Layout::Hwcn, |co, c, _, _| (co * 3 + c) as f32)
            .unwrap();
        let b = lower_filter(&f, &spec, ColumnOrdering::ChannelFirst).unwrap();
        for c in 0..3 {
            for co in 0..4 {
                assert_eq!(b.get2(c, co), (co * 3 + c) as f32);
            }
        }
    }

    #[test]
    fn single_tile_for_pointwise_filter() {
        let spec = ConvSpec::new(1, 1, 6, 6, 1, 1, 1).with_stride(2);
        let tiles = decompose_tiles(&spec);
        assert_eq!(tiles, vec![TileDescriptor::new(0, 0)]);
        assert_eq!(tiles[0].gather(&spec, 1, 2), (2, 4));
    }

    #[test]
    fn strided_tiles_gather_every_other_column() {
        // 5x5 IFMap, 3x3 filter, stride 2: <1,1> -> 1A 1C 3A 3C, <1,2> -> 1B 1D 3B 3D.
        let spec = ConvSpec::new(1, 1, 5, 5, 1, 3, 3).with_stride(2);
        let t11 = TileDescriptor::new(0, 0);
        let t12 = TileDescriptor::new(0, 1);
        assert_eq!(t11.coords(&spec), vec![(0, 0), (0, 2), (2, 0), (2, 2)]);
        assert_eq!(t12.coords(&spec), vec![(0, 1), (0, 3), (2, 1), (2, 3)]);
    }

    #[test]
    fn padding_positions_are_excluded() {
        let spec = ConvSpec::new(1, 1, 4, 4, 1, 3, 3).with_padding(1);
        let t = TileDescriptor::new(0, 0);
        assert_eq!(t.gather(&spec, 0, 0), (-1, -1));
        assert_eq!(t.coords(&spec).len(), 9);
        assert_eq!(t.in_bounds_positions(&spec), 9);
    }

    #[test]
    fn identical_tiles_overlap_fully() {
        let spec = ConvSpec::new(1, 1, 9, 9, 1, 3, 3).with_stride(2);
        let t = TileDescriptor::new(1, 2);
        assert_eq!(tile_overlap(t, t, &spec), 1.0);
    }

    #[test]
    fn footprint_formula() {
        let spec = ConvSpec::new(1, 16, 8, 8, 4, 1, 1);
        let f = lowered_memory_footprint(&spec, DEFAULT_ELEM_BYTES);
        assert_eq!(f.ratio, 1.0);
        let strided = ConvSpec::new(1, 16, 8, 8, 4, 1, 1).with_stride(2);
        assert!(lowered_memory_footprint(&strided, 2).ratio <= 1.0);
        let same = ConvSpec::new(2, 3, 10, 10, 4, 3, 3).with_padding(1);
        assert_eq!(lowered_memory_footprint(&same, 2).ratio, 9.0);
    }

    #[test]
    fn matrix_to_ofmap_checks_shape() {
        let spec = ConvSpec::new(1, 1, 3, 3, 2, 3, 3);
        assert!(matrix_to_ofmap(Tensor::zeros_matrix(1, 2), &spec).is_ok());
        assert!(matrix_to_ofmap(Tensor::zeros_matrix(2, 2), &spec).is_err());
    }
}
