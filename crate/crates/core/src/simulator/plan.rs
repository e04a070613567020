use std::ops::Range;

use crate::conv::ConvSpec;
use crate::error::{Error, Result};
use crate::lowering::{decompose_tiles, TileDescriptor};
use crate::memmodel::{ArchConfig, MultiTileCap, TileSet};

/// Tiles mapped onto the array at once: `min(R / C_I, W_F)`, further capped
/// by `max_multi_tile`. Fails with [`Error::ChannelSplit`] when `C_I > R`.
pub fn multi_tile_count(spec: &ConvSpec, arch: &ArchConfig) -> Result<usize> {
    let rows = arch.array_rows;
    if spec.in_channels > rows {
        return Err(Error::ChannelSplit {
            in_channels: spec.in_channels,
            array_rows: rows,
        });
    }
    let auto = (rows / spec.in_channels).min(spec.filter_width);
    Ok(match arch.max_multi_tile {
        MultiTileCap::Auto => auto,
        MultiTileCap::Fixed(n) => auto.min(n.max(1)),
    })
}

/// Channel groups and tile passes of a channel-first run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiTilePlan {
    pub tiles_per_pass: usize,
    /// Tile groups in row-major tile order, `tiles_per_pass` per group.
    pub passes: Vec<Vec<TileDescriptor>>,
    /// Copies of each IFMap element held on chip.
    pub duplication_factor: usize,
    /// Channel slices processed one after another; one slice unless `C_I > R`.
    pub channel_groups: Vec<Range<usize>>,
}

impl MultiTilePlan {
    pub fn new(spec: &ConvSpec, arch: &ArchConfig) -> Result<Self> {
        spec.validate()?;
        match multi_tile_count(spec, arch) {
            Ok(t) => Self::with_tiles_per_pass(spec, arch, t),
            Err(Error::ChannelSplit { .. }) => {
                let rows = arch.array_rows;
                let groups = (0..spec.in_channels)
                    .step_by(rows)
                    .map(|c| c..(c + rows).min(spec.in_channels))
                    .collect();
                Ok(Self::build(spec, 1, groups))
            }
            Err(e) => Err(e),
        }
    }

    /// Plan with an explicit tile count; `t * C_I` must fit the array rows.
    pub fn with_tiles_per_pass(spec: &ConvSpec, arch: &ArchConfig, t: usize) -> Result<Self> {
        if t == 0 || t > spec.filter_positions() || t * spec.in_channels > arch.array_rows {
            return Err(Error::Shape(format!(
                "{t} tiles of {} channels do not fit {} rows and {} filter positions",
                spec.in_channels,
                arch.array_rows,
                spec.filter_positions()
            )));
        }
        Ok(Self::build(spec, t, std::iter::once(0..spec.in_channels).collect()))
    }

    fn build(spec: &ConvSpec, t: usize, channel_groups: Vec<Range<usize>>) -> Self {
        let passes = decompose_tiles(spec).chunks(t).map(<[_]>::to_vec).collect();
        Self {
            tiles_per_pass: t,
            passes,
            duplication_factor: t,
            channel_groups,
        }
    }

    /// Every `(channel group, pass)` tile set in execution order.
    pub fn tile_sets(&self) -> impl Iterator<Item = (usize, usize, TileSet)> + '_ {
        self.channel_groups.iter().enumerate().flat_map(move |(g, chans)| {
            self.passes
                .iter()
                .enumerate()
                .map(move |(p, tiles)| (g, p, TileSet::new(tiles.clone(), chans.clone())))
        })
    }

    pub fn total_passes(&self) -> usize {
        self.channel_groups.len() * self.passes.len()
    }
}
