//! Cycle-level model of a weight-stationary systolic array running
//! convolutions through implicit (channel-first and channel-last) and
//! explicit im2col.
//!
//! The crate is organised bottom-up:
//!
//! * [`conv`], [`tensor`]: reference kernels and data types;
//! * [`lowering`]: im2col index maths and 1x1 tile decomposition;
//! * [`memmodel`]: vector memories, port schedules and the DRAM cost model;
//! * [`simulator`]: functional datapaths plus the timing engine;
//! * [`blocksched`]: block-level subtile ordering and SRAM reuse.

pub mod blocksched;
pub mod conv;
pub mod error;
pub mod lowering;
pub mod memmodel;
pub mod report;
pub mod simulator;
pub mod tensor;

pub use conv::{direct_conv, gemm, ConvSpec};
pub use error::{Error, Result};
pub use lowering::{ColumnOrdering, Footprint, TileDescriptor};
pub use memmodel::{AccessTrace, ArchConfig, DramLayout, MultiTileCap, TileSet, VectorMemoryImage};
pub use report::SimReport;
pub use simulator::{estimate, estimate_gemm, simulate, Method, MultiTilePlan, SimOutput};
pub use tensor::{Layout, Tensor};
