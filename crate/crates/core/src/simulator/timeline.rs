//! Step-level timing engine shared by every method.
//!
//! A step is one resident working set streamed under one or more weight
//! sets (column tiles). While step `k` streams:
//!
//! * the next step's DRAM fill proceeds in the background;
//! * each vector memory serves this step's reads and OFMap writes plus the
//!   next step's fill writes through its single port;
//! * the next weight set shifts in over `R` cycles.
//!
//! Whatever does not fit in the stream window is exposed: port overflow and
//! DRAM wait as stalls, weight shifting as weight-load cycles. The first
//! step's fill and weights form a prologue; the final drain of `R + C - 2`
//! cycles counts as compute.

use crate::memmodel::ArchConfig;
use crate::report::SimReport;

/// Identity of a loaded weight set.
pub(crate) type WeightKey = (usize, usize, usize);

#[derive(Debug, Clone, Default)]
pub(crate) struct Step {
    /// Stream cycles under one weight set.
    pub col_tile_stream: u64,
    /// Weight sets streamed back to back inside the step.
    pub weight_sets: u64,
    pub first_weights: WeightKey,
    pub last_weights: WeightKey,
    /// Per vector memory.
    pub reads: Vec<u64>,
    pub writes: Vec<u64>,
    /// Words written into each memory before the step can start.
    pub fill: Vec<u64>,
    pub dram_cycles: u64,
    pub dram_bytes: u64,
    pub resident_bytes: u64,
    pub extra_stall: u64,
}

impl Step {
    pub fn stream(&self) -> u64 {
        self.col_tile_stream * self.weight_sets
    }
}

/// Runs `steps` after `pre_stall` non-overlapped cycles.
pub(crate) fn run(steps: &[Step], arch: &ArchConfig, pre_stall: u64) -> SimReport {
    let r = arch.array_rows as u64;
    let nvm = arch.vector_memories();
    let mut rep = SimReport {
        sram_ports: nvm,
        clock_mhz: arch.clock_mhz,
        stall_cycles: pre_stall,
        ..SimReport::default()
    };
    let Some(first) = steps.first() else {
        rep.total_cycles = pre_stall;
        return rep;
    };

    let mut per_array = vec![0u64; nvm];
    let first_fill = first.dram_cycles.max(first.fill.iter().copied().max().unwrap_or(0));
    rep.weight_load_cycles += r;
    rep.stall_cycles += first_fill.saturating_sub(r);
    rep.dram_bytes_read += first.dram_bytes;
    for (acc, f) in per_array.iter_mut().zip(&first.fill) {
        *acc += f;
    }
    rep.sram_writes += first.fill.iter().sum::<u64>();

    for (k, s) in steps.iter().enumerate() {
        let stream = s.stream();
        rep.compute_cycles += stream;
        rep.stall_cycles += s.extra_stall;
        rep.weight_load_cycles += s.weight_sets.saturating_sub(1) * r.saturating_sub(s.col_tile_stream);
        rep.sram_resident_bytes = rep.sram_resident_bytes.max(s.resident_bytes);

        let next = steps.get(k + 1);
        let mut demand = 0;
        for (a, total) in per_array.iter_mut().enumerate().take(nvm) {
            let d = s.reads[a] + s.writes[a] + next.map_or(0, |n| n.fill[a]);
            *total += d;
            demand = demand.max(d);
        }
        rep.sram_reads += s.reads.iter().sum::<u64>();
        rep.sram_writes += s.writes.iter().sum::<u64>();
        let port_stall = demand.saturating_sub(stream);
        rep.stall_cycles += port_stall;

        if let Some(n) = next {
            rep.sram_writes += n.fill.iter().sum::<u64>();
            rep.dram_bytes_read += n.dram_bytes;
            let wait = n.dram_cycles.saturating_sub(stream + port_stall);
            rep.stall_cycles += wait;
            if n.first_weights != s.last_weights {
                rep.weight_load_cycles += r.saturating_sub(s.col_tile_stream + port_stall + wait);
            }
        }
    }

    rep.compute_cycles += r + arch.array_cols as u64 - 2;
    rep.total_cycles = rep.compute_cycles + rep.stall_cycles + rep.weight_load_cycles;
    rep.sram_peak_array_accesses = per_array.into_iter().max().unwrap_or(0);
    rep
}

/// Number of output channels whose OFMap words land in memory `a`.
pub(crate) fn outputs_to(out_channels: usize, memories: usize, a: usize) -> u64 {
    (out_channels / memories + usize::from(a < out_channels % memories)) as u64
}
