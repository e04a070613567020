use std::fmt;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Upper bound on decomposed tiles mapped to the array at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum MultiTileCap {
    #[default]
    Auto,
    Fixed(usize),
}

impl fmt::Display for MultiTileCap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MultiTileCap::Auto => f.write_str("auto"),
            MultiTileCap::Fixed(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for MultiTileCap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") {
            return Ok(MultiTileCap::Auto);
        }
        s.parse::<usize>()
            .map(MultiTileCap::Fixed)
            .map_err(|_| Error::InvalidArch(format!("max_multi_tile must be \"auto\" or a count, got {s:?}")))
    }
}

impl Serialize for MultiTileCap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MultiTileCap::Auto => s.serialize_str("auto"),
            MultiTileCap::Fixed(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for MultiTileCap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct CapVisitor;

        impl Visitor<'_> for CapVisitor {
            type Value = MultiTileCap;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("\"auto\" or a non-negative integer")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<MultiTileCap, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<MultiTileCap, E> {
                Ok(MultiTileCap::Fixed(v as usize))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<MultiTileCap, E> {
                usize::try_from(v)
                    .map(MultiTileCap::Fixed)
                    .map_err(|_| E::custom(format!("max_multi_tile must be non-negative, got {v}")))
            }
        }

        d.deserialize_any(CapVisitor)
    }
}

/// Accelerator parameters. Defaults are the 128x128, 700 MHz configuration
/// with 128 vector memories of 256 KiB and 8 x 4-byte words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchConfig {
    pub array_rows: usize,
    pub array_cols: usize,
    pub clock_mhz: f64,
    /// Defaults to `array_rows` when absent.
    pub num_vector_memories: Option<usize>,
    pub word_elems: usize,
    pub elem_bytes: usize,
    /// Capacity of one vector memory.
    pub sram_capacity_bytes: usize,
    /// GB/s; may be `inf`.
    pub dram_bandwidth_gbps: f64,
    pub dram_fixed_latency_cycles: u64,
    /// Run-merging granularity; 0 merges only exactly adjacent bytes.
    pub dram_burst_bytes: usize,
    pub max_multi_tile: MultiTileCap,
    /// Extra cycles per lowered column in each channel-last tile step.
    pub cl_addr_gen_overhead_cycles: u64,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            array_rows: 128,
            array_cols: 128,
            clock_mhz: 700.0,
            num_vector_memories: None,
            word_elems: 8,
            elem_bytes: 4,
            sram_capacity_bytes: 32 * 1024 * 1024 / 128,
            dram_bandwidth_gbps: 700.0,
            dram_fixed_latency_cycles: 2,
            dram_burst_bytes: 0,
            max_multi_tile: MultiTileCap::Auto,
            cl_addr_gen_overhead_cycles: 0,
        }
    }
}

impl ArchConfig {
    pub fn baseline() -> Self {
        Self::default()
    }

    /// Square `n x n` array with one vector memory per row.
    pub fn with_array_size(mut self, n: usize) -> Self {
        self.array_rows = n;
        self.array_cols = n;
        self.num_vector_memories = None;
        self
    }

    pub fn with_word_elems(mut self, w: usize) -> Self {
        self.word_elems = w;
        self
    }

    pub fn vector_memories(&self) -> usize {
        self.num_vector_memories.unwrap_or(self.array_rows)
    }

    pub fn word_bytes(&self) -> usize {
        self.word_elems * self.elem_bytes
    }

    /// Capacity of one vector memory in words.
    pub fn words_per_array(&self) -> usize {
        self.sram_capacity_bytes / self.word_bytes()
    }

    pub fn bytes_per_cycle(&self) -> f64 {
        self.dram_bandwidth_gbps * 1000.0 / self.clock_mhz
    }

    /// Cycles to move `bytes` at full bandwidth, rounded up.
    pub fn transfer_cycles(&self, bytes: u64) -> u64 {
        let bpc = self.bytes_per_cycle();
        if bpc.is_infinite() || bytes == 0 {
            0
        } else {
            (bytes as f64 / bpc).ceil() as u64
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("array_rows", self.array_rows),
            ("array_cols", self.array_cols),
            ("word_elems", self.word_elems),
            ("elem_bytes", self.elem_bytes),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidArch(format!("{name} must be at least 1")));
        }
        if let Some(v) = self.num_vector_memories {
            if v != self.array_rows {
                return Err(Error::InvalidArch(format!(
                    "num_vector_memories ({v}) must equal array_rows ({})",
                    self.array_rows
                )));
            }
        }
        if !(self.clock_mhz > 0.0 && self.clock_mhz.is_finite()) {
            return Err(Error::InvalidArch(format!("clock_mhz must be positive, got {}", self.clock_mhz)));
        }
        if self.dram_bandwidth_gbps.is_nan() || self.dram_bandwidth_gbps <= 0.0 {
            return Err(Error::InvalidArch(format!(
                "dram_bandwidth_gbps must be positive, got {}",
                self.dram_bandwidth_gbps
            )));
        }
        if self.words_per_array() < 2 {
            return Err(Error::InvalidArch(format!(
                "sram_capacity_bytes {} holds fewer than two {}-byte words",
                self.sram_capacity_bytes,
                self.word_bytes()
            )));
        }
        if self.max_multi_tile == MultiTileCap::Fixed(0) {
            return Err(Error::InvalidArch("max_multi_tile must be at least 1".into()));
        }
        Ok(())
    }
}
