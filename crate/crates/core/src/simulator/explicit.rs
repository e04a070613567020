//! Explicit im2col: the IFMap is read, lowered and written back to DRAM
//! before the GEMM starts; the GEMM then reads the lowered matrix.

use crate::conv::ConvSpec;
use crate::lowering::lowered_memory_footprint;
use crate::memmodel::{ArchConfig, RunMerger};

/// `(cycles, bytes read, bytes written)` of the lowering phase.
pub(crate) fn lowering_phase(spec: &ConvSpec, arch: &ArchConfig) -> (u64, u64, u64) {
    let fp = lowered_memory_footprint(spec, arch.elem_bytes);
    let mut read = RunMerger::new(arch);
    read.push(0, fp.original_bytes);
    let read = read.finish();
    let mut write = RunMerger::new(arch);
    write.push(0, fp.lowered_bytes);
    let write = write.finish();
    (read.cycles + write.cycles, read.bytes, fp.lowered_bytes)
}
