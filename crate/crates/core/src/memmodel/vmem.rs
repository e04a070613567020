//! Per-row vector memories holding the HWCN-packed gather of a tile set.

use std::collections::HashMap;
use std::ops::Range;

use crate::conv::ConvSpec;
use crate::error::{Error, Result};
use crate::lowering::TileDescriptor;
use crate::tensor::Tensor;

use super::ArchConfig;

/// Tiles mapped side by side onto the array, each over the same channel slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileSet {
    pub tiles: Vec<TileDescriptor>,
    pub channels: Range<usize>,
}

impl TileSet {
    pub fn new(tiles: Vec<TileDescriptor>, channels: Range<usize>) -> Self {
        Self { tiles, channels }
    }

    pub fn all_channels(tiles: Vec<TileDescriptor>, spec: &ConvSpec) -> Self {
        Self::new(tiles, 0..spec.in_channels)
    }

    pub fn copies(&self) -> usize {
        self.tiles.len()
    }

    pub fn channels_per_copy(&self) -> usize {
        self.channels.len()
    }

    pub fn active_arrays(&self) -> usize {
        self.copies() * self.channels_per_copy()
    }

    /// `(copy, channel)` streamed by array `a`.
    pub fn array_contents(&self, a: usize) -> Option<(usize, usize)> {
        (a < self.active_arrays()).then(|| {
            let cg = self.channels_per_copy();
            (a / cg, self.channels.start + a % cg)
        })
    }

    pub(crate) fn check(&self, spec: &ConvSpec, arch: &ArchConfig) -> Result<()> {
        if self.tiles.is_empty() || self.channels.is_empty() || self.channels.end > spec.in_channels {
            return Err(Error::Shape(format!(
                "tile set of {} tiles over channels {:?} does not fit C_I = {}",
                self.tiles.len(),
                self.channels,
                spec.in_channels
            )));
        }
        if let Some(t) = self
            .tiles
            .iter()
            .find(|t| t.r >= spec.filter_height || t.s >= spec.filter_width)
        {
            return Err(Error::Shape(format!("tile {t} outside the {}x{} filter", spec.filter_height, spec.filter_width)));
        }
        let rows = arch.vector_memories();
        if self.channels_per_copy() > rows {
            return Err(Error::ChannelSplit {
                in_channels: self.channels_per_copy(),
                array_rows: rows,
            });
        }
        if self.active_arrays() > rows {
            return Err(Error::Shape(format!(
                "{} tile copies x {} channels exceed {rows} vector memories",
                self.copies(),
                self.channels_per_copy()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct VectorMemoryImage {
    word_elems: usize,
    group: usize,
    lanes_used: usize,
    first_position: usize,
    arrays: Vec<Vec<f32>>,
    occupancy: Vec<Option<(usize, usize)>>,
    /// Per copy, word address of each output position (`None` in padding).
    addr: Vec<Vec<Option<usize>>>,
    coord_addr: Vec<HashMap<(usize, usize), usize>>,
}

impl VectorMemoryImage {
    pub fn num_arrays(&self) -> usize {
        self.arrays.len()
    }

    pub fn word_elems(&self) -> usize {
        self.word_elems
    }

    /// Batch group packed into the words.
    pub fn group(&self) -> usize {
        self.group
    }

    pub fn words(&self, array: usize) -> usize {
        self.arrays[array].len() / self.word_elems
    }

    pub fn word(&self, array: usize, addr: usize) -> &[f32] {
        let w = self.word_elems;
        &self.arrays[array][addr * w..(addr + 1) * w]
    }

    /// `(channel, copy)` held by `array`, or `None` if it is idle.
    pub fn occupancy(&self, array: usize) -> Option<(usize, usize)> {
        self.occupancy[array]
    }

    pub fn word_addr_for_output(&self, array: usize, position: usize) -> Option<usize> {
        let (_, copy) = self.occupancy[array]?;
        let local = position.checked_sub(self.first_position)?;
        *self.addr[copy].get(local)?
    }

    /// Word feeding output `position`; `None` means the serializer injects zeros.
    pub fn word_for_output(&self, array: usize, position: usize) -> Option<&[f32]> {
        self.word_addr_for_output(array, position).map(|a| self.word(array, a))
    }

    /// Word holding IFMap position `(h, w)` of this array's channel, if resident.
    pub fn word_at_coord(&self, array: usize, h: usize, w: usize) -> Option<&[f32]> {
        let (_, copy) = self.occupancy[array]?;
        let a = *self.coord_addr[copy].get(&(h, w))?;
        Some(self.word(array, a))
    }

    pub fn resident_bytes(&self, elem_bytes: usize) -> u64 {
        self.arrays.iter().map(|a| a.len() as u64).sum::<u64>() * elem_bytes as u64
    }

    /// Fraction of stored word slots carrying real batch elements.
    pub fn lane_occupancy(&self) -> f64 {
        self.lanes_used as f64 / self.word_elems as f64
    }
}

/// Packs the in-bounds gather of every tile in `tiles` for batch group `group`.
///
/// Array `copy * C_g + c` holds channel `channels.start + c` of tile `copy`;
/// each word carries the `word_elems` batch lanes of one IFMap position.
pub fn pack_hwcn(
    ifmap: &Tensor,
    tiles: &TileSet,
    group: usize,
    spec: &ConvSpec,
    arch: &ArchConfig,
) -> Result<VectorMemoryImage> {
    pack_hwcn_positions(ifmap, tiles, group, 0..spec.out_positions(), spec, arch)
}

/// [`pack_hwcn`] restricted to the flat output positions in `positions`.
pub fn pack_hwcn_positions(
    ifmap: &Tensor,
    tiles: &TileSet,
    group: usize,
    positions: Range<usize>,
    spec: &ConvSpec,
    arch: &ArchConfig,
) -> Result<VectorMemoryImage> {
    arch.validate()?;
    spec.check_ifmap(ifmap)?;
    tiles.check(spec, arch)?;
    let we = arch.word_elems;
    let groups = spec.batch.div_ceil(we);
    if group >= groups {
        return Err(Error::Shape(format!("batch group {group} out of {groups}")));
    }
    let lanes_used = (spec.batch - group * we).min(we);
    let wo = spec.out_width();
    if positions.end > spec.out_positions() {
        return Err(Error::Shape(format!(
            "positions {positions:?} exceed {} output positions",
            spec.out_positions()
        )));
    }

    let mut addr = Vec::with_capacity(tiles.copies());
    let mut coord_addr = Vec::with_capacity(tiles.copies());
    let mut gathered = Vec::with_capacity(tiles.copies());
    for tile in &tiles.tiles {
        let mut a = vec![None; positions.len()];
        let mut map = HashMap::new();
        let mut coords = Vec::new();
        for (slot, p) in a.iter_mut().zip(positions.clone()) {
            if let Some(hw) = tile.gather_in_bounds(spec, p / wo, p % wo) {
                *slot = Some(coords.len());
                map.insert(hw, coords.len());
                coords.push(hw);
            }
        }
        addr.push(a);
        coord_addr.push(map);
        gathered.push(coords);
    }

    let max_words = gathered.iter().map(Vec::len).max().unwrap_or(0);
    let required = (max_words * arch.word_bytes()) as u64;
    if required > arch.sram_capacity_bytes as u64 {
        return Err(Error::Capacity {
            required,
            available: arch.sram_capacity_bytes as u64,
        });
    }

    let nvm = arch.vector_memories();
    let mut arrays = vec![Vec::new(); nvm];
    let mut occupancy = vec![None; nvm];
    for (a, store) in arrays.iter_mut().enumerate().take(tiles.active_arrays()) {
        let (copy, c) = tiles.array_contents(a).expect("active array");
        occupancy[a] = Some((c, copy));
        store.reserve(gathered[copy].len() * we);
        for &(h, w) in &gathered[copy] {
            for lane in 0..we {
                let n = group * we + lane;
                store.push(if lane < lanes_used { ifmap.at(n, c, h, w) } else { 0.0 });
            }
        }
    }

    Ok(VectorMemoryImage {
        word_elems: we,
        group,
        lanes_used,
        first_position: positions.start,
        arrays,
        occupancy,
        addr,
        coord_addr,
    })
}
