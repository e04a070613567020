//! Block-level channel-first im2col for dot-product GEMM engines.
//!
//! The equivalent GEMM (`M = N * H_O * W_O`, `K = H_F * W_F * C_I` in
//! channel-first order, `Nc = C_O`) is cut into output blocks. Each block
//! accumulates its own k-subtiles, one per (filter position, channel chunk),
//! so no two blocks ever write the same output element.
//!
//! [`reuse_traffic`] replays the IFMap elements each subtile gathers through
//! an element-granular LRU buffer to count DRAM traffic for a given order.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::conv::ConvSpec;
use crate::error::{Error, Result};
use crate::lowering::{decompose_tiles, matrix_to_ofmap, TileDescriptor};
use crate::tensor::Tensor;

/// One filter position restricted to a channel chunk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KSubtile {
    pub tile: TileDescriptor,
    pub channels: Range<usize>,
    /// Channel-first lowered columns covered.
    pub k_range: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockPlan {
    pub spec: ConvSpec,
    pub block_m: usize,
    pub block_n: usize,
    pub block_k: usize,
    pub m_blocks: Vec<Range<usize>>,
    pub n_blocks: Vec<Range<usize>>,
    /// Position-major: all chunks of one filter position, then the next.
    pub k_subtiles: Vec<KSubtile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subtile {
    pub m_block: usize,
    pub n_block: usize,
    pub k_subtile: usize,
}

fn ranges(total: usize, step: usize) -> Vec<Range<usize>> {
    (0..total).step_by(step).map(|s| s..(s + step).min(total)).collect()
}

/// Cuts the equivalent GEMM into `block_m x block_n` output blocks and
/// `block_k`-channel k-subtiles. Edge blocks may be ragged.
pub fn partition(spec: &ConvSpec, block_m: usize, block_n: usize, block_k: usize) -> Result<BlockPlan> {
    spec.validate()?;
    if block_m == 0 || block_n == 0 || block_k == 0 {
        return Err(Error::InvalidSpec(format!(
            "block extents must be at least 1, got {block_m}x{block_n}x{block_k}"
        )));
    }
    let ci = spec.in_channels;
    let k_subtiles = decompose_tiles(spec)
        .into_iter()
        .flat_map(|tile| {
            let base = (tile.r * spec.filter_width + tile.s) * ci;
            ranges(ci, block_k).into_iter().map(move |ch| KSubtile {
                tile,
                k_range: base + ch.start..base + ch.end,
                channels: ch,
            })
        })
        .collect();
    Ok(BlockPlan {
        spec: *spec,
        block_m,
        block_n,
        block_k,
        m_blocks: ranges(spec.lowered_rows(), block_m),
        n_blocks: ranges(spec.out_channels, block_n),
        k_subtiles,
    })
}

impl BlockPlan {
    pub fn subtile_count(&self) -> usize {
        self.m_blocks.len() * self.n_blocks.len() * self.k_subtiles.len()
    }

    /// Largest IFMap footprint of one subtile, in bytes.
    pub fn working_set_bytes(&self, elem_bytes: usize) -> u64 {
        let m = self.m_blocks.iter().map(|r| r.len()).max().unwrap_or(0);
        let k = self.k_subtiles.iter().map(|k| k.channels.len()).max().unwrap_or(0);
        (m * k * elem_bytes) as u64
    }

    /// True when every output element has exactly one writing block.
    pub fn writers_disjoint(&self) -> bool {
        let n = self.spec.out_channels;
        let mut owner = vec![0u32; self.spec.lowered_rows() * n];
        for mb in &self.m_blocks {
            for nb in &self.n_blocks {
                for i in mb.clone() {
                    for j in nb.clone() {
                        owner[i * n + j] += 1;
                    }
                }
            }
        }
        owner.iter().all(|&c| c == 1)
    }

    /// In-bounds IFMap elements `(n, h, w, c)` a subtile reads, in row order.
    pub fn subtile_coords(&self, st: Subtile) -> Vec<(usize, usize, usize, usize)> {
        let spec = &self.spec;
        let ks = &self.k_subtiles[st.k_subtile];
        let (ho, wo) = (spec.out_height(), spec.out_width());
        let mut out = Vec::new();
        for row in self.m_blocks[st.m_block].clone() {
            let n = row / (ho * wo);
            let p = row % (ho * wo);
            if let Some((h, w)) = ks.tile.gather_in_bounds(spec, p / wo, p % wo) {
                out.extend(ks.channels.clone().map(|c| (n, h, w, c)));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrderPolicy {
    /// All output blocks of one filter position before the next.
    #[serde(rename = "filter-major")]
    FilterMajor,
    /// Filter positions innermost within each output block.
    #[serde(rename = "reuse-aware")]
    ReuseAware,
}

impl OrderPolicy {
    pub const ALL: [OrderPolicy; 2] = [OrderPolicy::FilterMajor, OrderPolicy::ReuseAware];
}

impl fmt::Display for OrderPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrderPolicy::FilterMajor => "filter-major",
            OrderPolicy::ReuseAware => "reuse-aware",
        })
    }
}

impl FromStr for OrderPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "filter-major" => Ok(OrderPolicy::FilterMajor),
            "reuse-aware" => Ok(OrderPolicy::ReuseAware),
            other => Err(Error::InvalidSpec(format!(
                "unknown order policy {other:?} (expected filter-major or reuse-aware)"
            ))),
        }
    }
}

/// Every subtile of `plan` exactly once, in `policy` order.
pub fn order_subtiles(plan: &BlockPlan, policy: OrderPolicy) -> Vec<Subtile> {
    let positions = plan.spec.filter_positions();
    let chunks = plan.k_subtiles.len() / positions;
    let mut out = Vec::with_capacity(plan.subtile_count());
    for n_block in 0..plan.n_blocks.len() {
        match policy {
            OrderPolicy::FilterMajor => {
                for k_subtile in 0..plan.k_subtiles.len() {
                    for m_block in 0..plan.m_blocks.len() {
                        out.push(Subtile { m_block, n_block, k_subtile });
                    }
                }
            }
            OrderPolicy::ReuseAware => {
                for m_block in 0..plan.m_blocks.len() {
                    for chunk in 0..chunks {
                        for pos in 0..positions {
                            out.push(Subtile {
                                m_block,
                                n_block,
                                k_subtile: pos * chunks + chunk,
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ReuseStats {
    pub dram_bytes: u64,
    pub hits: u64,
    pub misses: u64,
}

impl ReuseStats {
    pub fn hit_fraction(&self) -> f64 {
        let total = self.hits + self.misses;
        if total == 0 {
            0.0
        } else {
            self.hits as f64 / total as f64
        }
    }
}

type Key = (usize, usize, usize, usize);

/// Element-granular LRU of `capacity` entries.
struct Lru {
    capacity: usize,
    clock: u64,
    stamp: HashMap<Key, u64>,
    by_age: BTreeMap<u64, Key>,
}

impl Lru {
    fn new(capacity: usize) -> Self {
        Self {
            capacity,
            clock: 0,
            stamp: HashMap::new(),
            by_age: BTreeMap::new(),
        }
    }

    /// Touches `key`; true on a hit.
    fn access(&mut self, key: Key) -> bool {
        if self.capacity == 0 {
            return false;
        }
        self.clock += 1;
        let hit = match self.stamp.insert(key, self.clock) {
            Some(old) => {
                self.by_age.remove(&old);
                true
            }
            None => false,
        };
        self.by_age.insert(self.clock, key);
        if self.stamp.len() > self.capacity {
            if let Some((_, victim)) = self.by_age.pop_first() {
                self.stamp.remove(&victim);
            }
        }
        hit
    }
}

/// DRAM traffic of running `order` through an LRU buffer of `sram_budget_bytes`.
pub fn reuse_traffic(plan: &BlockPlan, order: &[Subtile], sram_budget_bytes: u64, elem_bytes: usize) -> ReuseStats {
    let mut lru = Lru::new((sram_budget_bytes / elem_bytes.max(1) as u64) as usize);
    let mut stats = ReuseStats::default();
    for &st in order {
        for key in plan.subtile_coords(st) {
            if lru.access(key) {
                stats.hits += 1;
            } else {
                stats.misses += 1;
            }
        }
    }
    stats.dram_bytes = stats.misses * elem_bytes as u64;
    stats
}

/// Distinct IFMap elements read by any subtile.
pub fn unique_elements(plan: &BlockPlan) -> usize {
    let mut seen = HashSet::new();
    for mb in 0..plan.m_blocks.len() {
        for k in 0..plan.k_subtiles.len() {
            seen.extend(plan.subtile_coords(Subtile {
                m_block: mb,
                n_block: 0,
                k_subtile: k,
            }));
        }
    }
    seen.len()
}

/// Accumulates every subtile's partial GEMM in `order`; returns the NHWC OFMap.
pub fn execute_plan(plan: &BlockPlan, order: &[Subtile], ifmap: &Tensor, filters: &Tensor) -> Result<Tensor> {
    let spec = &plan.spec;
    spec.check_ifmap(ifmap)?;
    spec.check_filters(filters)?;
    let mut seen = vec![false; plan.subtile_count()];
    let per_n = plan.m_blocks.len() * plan.k_subtiles.len();
    for st in order {
        let idx = st.n_block * per_n + st.m_block * plan.k_subtiles.len() + st.k_subtile;
        if std::mem::replace(&mut seen[idx], true) {
            return Err(Error::InvalidSpec(format!("subtile {st:?} scheduled twice")));
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidSpec("order does not cover every subtile".into()));
    }

    let (ho, wo) = (spec.out_height(), spec.out_width());
    let mut acc = Tensor::zeros_matrix(spec.lowered_rows(), spec.out_channels);
    for st in order {
        let ks = &plan.k_subtiles[st.k_subtile];
        for row in plan.m_blocks[st.m_block].clone() {
            let n = row / (ho * wo);
            let p = row % (ho * wo);
            let Some((h, w)) = ks.tile.gather_in_bounds(spec, p / wo, p % wo) else {
                continue;
            };
            for co in plan.n_blocks[st.n_block].clone() {
                let mut v = acc.get2(row, co);
                for c in ks.channels.clone() {
                    v += ifmap.at(n, c, h, w) * filters.at(co, c, ks.tile.r, ks.tile.s);
                }
                acc.set2(row, co, v);
            }
        }
    }
    matrix_to_ofmap(acc, spec)
}

#[derive(Debug, Clone)]
pub struct ReuseRow {
    pub layer: String,
    pub policy: OrderPolicy,
    pub block_m: usize,
    pub block_n: usize,
    pub block_k: usize,
    pub sram_budget_bytes: u64,
    pub stats: ReuseStats,
}

pub const REUSE_SCHEMA: &str = "# cfsim reuse schema v1";

/// Writes the schema line, header and one record per row.
pub fn write_reuse_csv<W: Write>(mut out: W, rows: &[ReuseRow]) -> std::io::Result<()> {
    writeln!(out, "{REUSE_SCHEMA}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "layer",
        "policy",
        "block_m",
        "block_n",
        "block_k",
        "sram_budget_bytes",
        "dram_bytes",
        "hits",
        "misses",
        "hit_fraction",
    ])?;
    for r in rows {
        w.write_record([
            r.layer.clone(),
            r.policy.to_string(),
            r.block_m.to_string(),
            r.block_n.to_string(),
            r.block_k.to_string(),
            r.sram_budget_bytes.to_string(),
            r.stats.dram_bytes.to_string(),
            r.stats.hits.to_string(),
            r.stats.misses.to_string(),
            format!("{:.6}", r.stats.hit_fraction()),
        ])?;
    }
    w.flush()?;
    Ok(())
}
