use serde::{Deserialize, Serialize};

/// Timing and traffic summary of one simulated layer.
///
/// `total_cycles == compute_cycles + stall_cycles + weight_load_cycles`.
/// Pipeline drain of the final pass is counted as compute.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub total_cycles: u64,
    pub compute_cycles: u64,
    pub stall_cycles: u64,
    pub weight_load_cycles: u64,
    /// Useful MACs / (total_cycles * rows * cols).
    pub pe_utilization: f64,
    pub useful_macs: u64,
    pub dram_bytes_read: u64,
    pub dram_bytes_written: u64,
    /// Word accesses summed over all vector memories (or SRAM banks).
    pub sram_reads: u64,
    pub sram_writes: u64,
    /// Accesses seen by the busiest single-ported memory.
    pub sram_peak_array_accesses: u64,
    pub sram_ports: usize,
    /// Largest per-step on-chip IFMap working set, in bytes.
    pub sram_resident_bytes: u64,
    /// Useful MACs per cycle.
    pub achieved_flops: f64,
    pub tiles_per_pass: usize,
    pub clock_mhz: f64,
}

impl SimReport {
    /// Achieved TFLOPS, counting two floating-point operations per MAC.
    pub fn tflops(&self) -> f64 {
        2.0 * self.achieved_flops * self.clock_mhz * 1e6 / 1e12
    }

    /// Idle port cycles over all port cycles, across every memory.
    pub fn sram_idle_ratio(&self) -> f64 {
        let port_cycles = self.total_cycles as f64 * self.sram_ports as f64;
        if port_cycles == 0.0 {
            return 1.0;
        }
        1.0 - (self.sram_reads + self.sram_writes) as f64 / port_cycles
    }

    /// Idle ratio of the busiest memory port.
    pub fn sram_min_port_idle_ratio(&self) -> f64 {
        if self.total_cycles == 0 {
            return 1.0;
        }
        1.0 - self.sram_peak_array_accesses as f64 / self.total_cycles as f64
    }

    pub(crate) fn finish(&mut self, rows: usize, cols: usize) {
        debug_assert_eq!(
            self.total_cycles,
            self.compute_cycles + self.stall_cycles + self.weight_load_cycles
        );
        if self.total_cycles > 0 {
            self.pe_utilization =
                self.useful_macs as f64 / (self.total_cycles as f64 * rows as f64 * cols as f64);
            self.achieved_flops = self.useful_macs as f64 / self.total_cycles as f64;
        }
    }
}
