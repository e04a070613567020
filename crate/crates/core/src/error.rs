use thiserror::Error;

/// Errors produced by the kernels, lowering and the simulator.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid convolution spec: {0}")]
    InvalidSpec(String),

    #[error("incompatible layout: {0}")]
    Layout(String),

    #[error("invalid architecture config: {0}")]
    InvalidArch(String),

    #[error("vector memory capacity exceeded: {required} bytes required per array, {available} available")]
    Capacity { required: u64, available: u64 },

    #[error("{in_channels} input channels exceed {array_rows} array rows (channel split required)")]
    ChannelSplit { in_channels: usize, array_rows: usize },

    #[error("port conflict on vector memory {array} at cycle {cycle}")]
    PortConflict { array: usize, cycle: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
