//! Channel-last implicit im2col baseline.
//!
//! The array rows read from `R` single-ported, one-element-wide SRAM banks,
//! one element per bank per cycle, with a conflict-free layout. A step
//! stages the receptive input rows of an output band for the channels that
//! one K tile touches; these rows do not shrink with stride. The IFMap is
//! fetched from a CHW DRAM image.

use std::ops::Range;

use crate::conv::ConvSpec;
use crate::error::Result;
use crate::lowering::{matrix_to_ofmap, ColumnOrdering};
use crate::memmodel::{linear_element_index, ArchConfig, DramLayout, RunMerger};
use crate::tensor::Tensor;

use super::systolic::SystolicArray;
use super::timeline::Step;

/// Input channels touched by lowered columns `k_range` in channel-last order.
fn channels_of(spec: &ConvSpec, k_range: &Range<usize>) -> Range<usize> {
    let taps = spec.filter_positions();
    k_range.start / taps..(k_range.end - 1) / taps + 1
}

fn k_tiles(spec: &ConvSpec, rows: usize) -> Vec<Range<usize>> {
    let k = spec.lowered_cols();
    (0..k).step_by(rows).map(|k0| k0..(k0 + rows).min(k)).collect()
}

/// Output rows per band so one band's staged rows fit half the banks.
pub(crate) fn band_rows(spec: &ConvSpec, arch: &ArchConfig) -> usize {
    let chans = k_tiles(spec, arch.array_rows)
        .iter()
        .map(|kr| channels_of(spec, kr).len())
        .max()
        .unwrap_or(1);
    let eff_h = spec.dilation_h * (spec.filter_height - 1) + 1;
    let half = (arch.vector_memories() * arch.sram_capacity_bytes / 2) as u64;
    let row_bytes = (spec.in_width * chans * spec.batch * arch.elem_bytes) as u64;
    let rows_cap = ((half / row_bytes) as usize).max(eff_h);
    ((rows_cap - eff_h) / spec.stride_h + 1).clamp(1, spec.out_height())
}

/// Input rows `[lo, hi)` feeding output rows `[o0, o1)`.
fn input_rows(spec: &ConvSpec, o0: usize, o1: usize) -> Range<usize> {
    let eff_h = spec.dilation_h * (spec.filter_height - 1) + 1;
    let lo = (o0 * spec.stride_h).saturating_sub(spec.pad_h);
    let hi = ((o1 - 1) * spec.stride_h + eff_h)
        .saturating_sub(spec.pad_h)
        .min(spec.in_height);
    lo..hi.max(lo)
}

pub(crate) fn steps(spec: &ConvSpec, arch: &ArchConfig) -> Vec<Step> {
    let rows = arch.array_rows;
    let nvm = arch.vector_memories();
    let col_tiles = spec.out_channels.div_ceil(arch.array_cols);
    let elem = arch.elem_bytes as u64;
    let n = spec.batch as u64;
    let wi = spec.in_width as u64;
    let b = band_rows(spec, arch);
    let kts = k_tiles(spec, rows);
    let mut out = Vec::new();
    for o0 in (0..spec.out_height()).step_by(b) {
        let o1 = (o0 + b).min(spec.out_height());
        let in_rows = input_rows(spec, o0, o1);
        let m_band = n * (o1 - o0) as u64 * spec.out_width() as u64;
        for ct in 0..col_tiles {
            for (kt, kr) in kts.iter().enumerate() {
                let chans = channels_of(spec, kr);
                let region = in_rows.len() as u64 * wi * chans.len() as u64 * n;
                let mut reads = vec![0; nvm];
                for r in reads.iter_mut().take(kr.len()) {
                    *r = m_band;
                }
                let mut dram = RunMerger::new(arch);
                for c in chans.clone() {
                    let idx = linear_element_index(DramLayout::Chw, spec, in_rows.start, 0, c);
                    dram.push(idx * n * elem, in_rows.len() as u64 * wi * n * elem);
                }
                let cost = dram.finish();
                out.push(Step {
                    col_tile_stream: m_band,
                    weight_sets: 1,
                    first_weights: (0, kt, ct),
                    last_weights: (0, kt, ct),
                    reads,
                    writes: vec![0; nvm],
                    fill: vec![region.div_ceil(nvm as u64); nvm],
                    dram_cycles: cost.cycles,
                    dram_bytes: cost.bytes,
                    resident_bytes: region * elem,
                    extra_stall: arch.cl_addr_gen_overhead_cycles * kr.len() as u64,
                });
            }
        }
    }
    out
}

/// Lowers each K tile on the fly in channel-last order and streams it.
pub(crate) fn functional(ifmap: &Tensor, filters: &Tensor, spec: &ConvSpec, arch: &ArchConfig) -> Result<Tensor> {
    let ord = ColumnOrdering::ChannelLast;
    let (ho, wo) = (spec.out_height(), spec.out_width());
    let m = spec.lowered_rows();
    let n_out = spec.out_channels;
    let cols = arch.array_cols;
    let mut acc = Tensor::zeros_matrix(m, n_out);
    let mut pe = SystolicArray::new(arch.array_rows, cols);
    for kr in k_tiles(spec, arch.array_rows) {
        let taps: Vec<_> = kr.clone().map(|k| ord.decode(spec, k)).collect();
        let mut a = Tensor::zeros_matrix(m, kr.len());
        for nb in 0..spec.batch {
            for i in 0..ho {
                for j in 0..wo {
                    let row = (nb * ho + i) * wo + j;
                    for (col, &(r, s, c)) in taps.iter().enumerate() {
                        if let Some((h, w)) = spec.input_coord(i, j, r, s) {
                            a.set2(row, col, ifmap.at(nb, c, h, w));
                        }
                    }
                }
            }
        }
        for c0 in (0..n_out).step_by(cols) {
            let c1 = (c0 + cols).min(n_out);
            let mut w = Tensor::zeros_matrix(kr.len(), c1 - c0);
            for (row, &(r, s, c)) in taps.iter().enumerate() {
                for co in c0..c1 {
                    w.set2(row, co - c0, filters.at(co, c, r, s));
                }
            }
            pe.load_weights(&w)?;
            let (part, _) = pe.stream(&a)?;
            for row in 0..m {
                for co in c0..c1 {
                    let v = acc.get2(row, co) + part.get2(row, co - c0);
                    acc.set2(row, co, v);
                }
            }
        }
    }
    matrix_to_ofmap(acc, spec)
}
