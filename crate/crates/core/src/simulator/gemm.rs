//! Plain `M x K x N` GEMM from vector memories whose words hold
//! `word_elems` consecutive rows of one K column.

use crate::memmodel::{ArchConfig, RunMerger};

use super::timeline::{outputs_to, Step};

/// The operand is stored K-tile blocked in DRAM, each block `M x k_rows` row-major.
pub(crate) fn steps(m: usize, k: usize, n: usize, arch: &ArchConfig) -> Vec<Step> {
    let rows = arch.array_rows;
    let nvm = arch.vector_memories();
    let we = arch.word_elems;
    let elem = arch.elem_bytes as u64;
    let words = m.div_ceil(we);
    let cap = (arch.words_per_array() / 2).max(1);
    let col_tiles = n.div_ceil(arch.array_cols);
    let mut out = Vec::new();
    for (kt, k0) in (0..k).step_by(rows).enumerate() {
        let krows = (k - k0).min(rows);
        for w0 in (0..words).step_by(cap) {
            let nw = (words - w0).min(cap);
            let real_rows = (m.min((w0 + nw) * we) - w0 * we) as u64;
            let mut reads = vec![0; nvm];
            let mut fill = vec![0; nvm];
            for a in 0..krows {
                reads[a] = (col_tiles * nw) as u64;
                fill[a] = nw as u64;
            }
            let writes = (0..nvm).map(|a| nw as u64 * outputs_to(n, nvm, a)).collect();
            let mut dram = RunMerger::new(arch);
            let start = (k0 * m + w0 * we * krows) as u64 * elem;
            dram.push(start, real_rows * krows as u64 * elem);
            let cost = dram.finish();
            out.push(Step {
                col_tile_stream: (nw * we) as u64,
                weight_sets: col_tiles as u64,
                first_weights: (kt, 0, 0),
                last_weights: (kt, 0, col_tiles - 1),
                reads,
                writes,
                fill,
                dram_cycles: cost.cycles,
                dram_bytes: cost.bytes,
                resident_bytes: (nw * krows * arch.word_bytes()) as u64,
                extra_stall: 0,
            });
        }
    }
    out
}
