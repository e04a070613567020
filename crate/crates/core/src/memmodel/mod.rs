//! On-chip vector memories and the DRAM behind them.

mod arch;
mod dram;
mod schedule;
mod vmem;

pub use arch::{ArchConfig, MultiTileCap};
pub use dram::{
    dram_fill_cost, dram_fill_detail, linear_element_index, DramLayout, FillCost, RunMerger,
};
pub use schedule::{address_schedule, read_schedule, Access, AccessKind, AccessTrace};
pub use vmem::{pack_hwcn, pack_hwcn_positions, TileSet, VectorMemoryImage};
