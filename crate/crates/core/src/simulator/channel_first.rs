//! Channel-first implicit im2col: decomposed 1x1 tiles streamed from HWCN
//! vector memories, fetched from an HWC DRAM image.

use std::ops::Range;

use crate::conv::ConvSpec;
use crate::error::Result;
use crate::lowering::{matrix_to_ofmap, TileDescriptor};
use crate::memmodel::{linear_element_index, pack_hwcn_positions, ArchConfig, DramLayout, RunMerger};
use crate::tensor::Tensor;

use super::plan::MultiTilePlan;
use super::systolic::SystolicArray;
use super::timeline::{outputs_to, Step};

/// One batch group and a slice of its output positions, resident together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Chunk {
    pub group: usize,
    pub lanes: usize,
    pub positions: Range<usize>,
}

/// Batch groups, then runs of at most half a vector memory of positions each.
pub(crate) fn chunks(spec: &ConvSpec, arch: &ArchConfig) -> Vec<Chunk> {
    let we = arch.word_elems;
    let cap = (arch.words_per_array() / 2).max(1);
    let p = spec.out_positions();
    (0..spec.batch.div_ceil(we))
        .flat_map(|g| {
            let lanes = (spec.batch - g * we).min(we);
            (0..p).step_by(cap).map(move |p0| Chunk {
                group: g,
                lanes,
                positions: p0..(p0 + cap).min(p),
            })
        })
        .collect()
}

/// In-bounds IFMap positions `tile` reads for the output positions in `range`.
fn gathered(tile: TileDescriptor, spec: &ConvSpec, range: Range<usize>) -> Vec<(usize, usize)> {
    let wo = spec.out_width();
    range
        .filter_map(|p| tile.gather_in_bounds(spec, p / wo, p % wo))
        .collect()
}

pub(crate) fn steps(spec: &ConvSpec, arch: &ArchConfig, plan: &MultiTilePlan) -> Vec<Step> {
    let nvm = arch.vector_memories();
    let col_tiles = spec.out_channels.div_ceil(arch.array_cols);
    let we = arch.word_elems as u64;
    let elem = arch.elem_bytes as u64;
    let chunks = chunks(spec, arch);
    let mut out = Vec::with_capacity(plan.total_passes() * chunks.len());
    for (g, p, ts) in plan.tile_sets() {
        let cg = ts.channels_per_copy();
        for ch in &chunks {
            let per_copy: Vec<Vec<(usize, usize)>> = ts
                .tiles
                .iter()
                .map(|&t| gathered(t, spec, ch.positions.clone()))
                .collect();
            let npos = ch.positions.len() as u64;
            let mut reads = vec![0; nvm];
            let mut fill = vec![0; nvm];
            for a in 0..ts.active_arrays() {
                let words = per_copy[a / cg].len() as u64;
                reads[a] = col_tiles as u64 * words;
                fill[a] = words;
            }
            let writes = (0..nvm)
                .map(|a| npos * outputs_to(spec.out_channels, nvm, a))
                .collect();

            let mut union: Vec<(usize, usize)> = per_copy.concat();
            union.sort_unstable();
            union.dedup();
            let unit = (ch.lanes as u64) * elem;
            let mut dram = RunMerger::new(arch);
            for &(h, w) in &union {
                let idx = linear_element_index(DramLayout::Hwc, spec, h, w, ts.channels.start);
                dram.push(idx * unit, cg as u64 * unit);
            }
            let cost = dram.finish();

            let resident: u64 = fill.iter().sum::<u64>() * arch.word_bytes() as u64;
            out.push(Step {
                col_tile_stream: npos * we,
                weight_sets: col_tiles as u64,
                first_weights: (g, p, 0),
                last_weights: (g, p, col_tiles - 1),
                reads,
                writes,
                fill,
                dram_cycles: cost.cycles,
                dram_bytes: cost.bytes,
                resident_bytes: resident,
                extra_stall: 0,
            });
        }
    }
    out
}

/// Streams every tile set through the array and accumulates the OFMap.
pub(crate) fn functional(
    ifmap: &Tensor,
    filters: &Tensor,
    spec: &ConvSpec,
    arch: &ArchConfig,
    plan: &MultiTilePlan,
) -> Result<Tensor> {
    let (n_out, p_out) = (spec.out_channels, spec.out_positions());
    let we = arch.word_elems;
    let cols = arch.array_cols;
    let mut acc = Tensor::zeros_matrix(spec.lowered_rows(), n_out);
    let mut pe = SystolicArray::new(arch.array_rows, cols);
    let chunks = chunks(spec, arch);
    for (_, _, ts) in plan.tile_sets() {
        let active = ts.active_arrays();
        let mut weights = Tensor::zeros_matrix(active, n_out);
        for a in 0..active {
            let (copy, c) = ts.array_contents(a).expect("active array");
            let t = ts.tiles[copy];
            for co in 0..n_out {
                weights.set2(a, co, filters.at(co, c, t.r, t.s));
            }
        }
        for ch in &chunks {
            let img = pack_hwcn_positions(ifmap, &ts, ch.group, ch.positions.clone(), spec, arch)?;
            let rows = ch.positions.len() * we;
            let mut stream = Tensor::zeros_matrix(rows, active);
            for (k, p) in ch.positions.clone().enumerate() {
                for a in 0..active {
                    if let Some(word) = img.word_for_output(a, p) {
                        for (lane, &v) in word.iter().enumerate() {
                            stream.set2(k * we + lane, a, v);
                        }
                    }
                }
            }
            for c0 in (0..n_out).step_by(cols) {
                let c1 = (c0 + cols).min(n_out);
                let mut w = Tensor::zeros_matrix(active, c1 - c0);
                for a in 0..active {
                    for co in c0..c1 {
                        w.set2(a, co - c0, weights.get2(a, co));
                    }
                }
                pe.load_weights(&w)?;
                let (part, _) = pe.stream(&stream)?;
                for (k, p) in ch.positions.clone().enumerate() {
                    for lane in 0..ch.lanes {
                        let n = ch.group * we + lane;
                        let row = n * p_out + p;
                        for co in c0..c1 {
                            let v = acc.get2(row, co) + part.get2(k * we + lane, co - c0);
                            acc.set2(row, co, v);
                        }
                    }
                }
            }
        }
    }
    matrix_to_ofmap(acc, spec)
}
