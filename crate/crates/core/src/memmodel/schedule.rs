//! Port-level access schedule of the vector memories during one tile pass.
//!
//! Output row `m` (position `p`, lane `l`, `m = p * word_elems + l`) enters
//! PE row `r` at cycle `m + r`. The serializer of array `a` therefore reads
//! the word of position `p` at cycle `a + p * word_elems`. Column `c`'s
//! deserializer has a full OFMap word once the last lane leaves the bottom
//! row, at `p * word_elems + word_elems - 1 + R + c`, and writes it to vector
//! memory `c mod R` in the first cycle that array's port is free.

use std::collections::HashSet;

use serde::Serialize;

use crate::conv::ConvSpec;
use crate::error::{Error, Result};

use super::{ArchConfig, TileSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum AccessKind {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Access {
    pub cycle: u64,
    pub array: usize,
    pub addr: usize,
    pub kind: AccessKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AccessTrace {
    accesses: Vec<Access>,
}

impl AccessTrace {
    fn from_unsorted(mut accesses: Vec<Access>) -> Self {
        accesses.sort_unstable_by_key(|a| (a.cycle, a.array, a.kind));
        Self { accesses }
    }

    pub fn accesses(&self) -> &[Access] {
        &self.accesses
    }

    pub fn len(&self) -> usize {
        self.accesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accesses.is_empty()
    }

    pub fn count(&self, kind: AccessKind) -> usize {
        self.accesses.iter().filter(|a| a.kind == kind).count()
    }

    /// Cycles at which `array` is accessed with `kind`, ascending.
    pub fn cycles_of(&self, array: usize, kind: AccessKind) -> Vec<u64> {
        self.accesses
            .iter()
            .filter(|a| a.array == array && a.kind == kind)
            .map(|a| a.cycle)
            .collect()
    }

    pub fn kind_at(&self, array: usize, cycle: u64) -> Option<AccessKind> {
        self.accesses
            .iter()
            .find(|a| a.array == array && a.cycle == cycle)
            .map(|a| a.kind)
    }

    /// Fails on the first array touched twice in one cycle.
    pub fn verify_exclusive(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.accesses.len());
        for a in &self.accesses {
            if !seen.insert((a.array, a.cycle)) {
                return Err(Error::PortConflict {
                    array: a.array,
                    cycle: a.cycle,
                });
            }
        }
        Ok(())
    }

    pub fn last_cycle(&self) -> Option<u64> {
        self.accesses.last().map(|a| a.cycle)
    }
}

fn reads(tiles: &TileSet, spec: &ConvSpec, arch: &ArchConfig) -> Result<(Vec<Access>, Vec<usize>)> {
    arch.validate()?;
    spec.validate()?;
    tiles.check(spec, arch)?;
    let we = arch.word_elems as u64;
    let (ho, wo) = (spec.out_height(), spec.out_width());
    let mut out = Vec::new();
    let mut words = vec![0usize; arch.vector_memories()];
    for (a, used) in words.iter_mut().enumerate().take(tiles.active_arrays()) {
        let (copy, _) = tiles.array_contents(a).expect("active array");
        let tile = tiles.tiles[copy];
        for p in 0..ho * wo {
            if tile.gather_in_bounds(spec, p / wo, p % wo).is_some() {
                out.push(Access {
                    cycle: a as u64 + p as u64 * we,
                    array: a,
                    addr: *used,
                    kind: AccessKind::Read,
                });
                *used += 1;
            }
        }
    }
    Ok((out, words))
}

/// Serializer reads only, for batch group 0 of one tile set.
pub fn read_schedule(tiles: &TileSet, spec: &ConvSpec, arch: &ArchConfig) -> Result<AccessTrace> {
    Ok(AccessTrace::from_unsorted(reads(tiles, spec, arch)?.0))
}

/// Reads plus OFMap write-backs of the first column tile, for batch group 0.
pub fn address_schedule(tiles: &TileSet, spec: &ConvSpec, arch: &ArchConfig) -> Result<AccessTrace> {
    let (mut acc, words) = reads(tiles, spec, arch)?;
    let nvm = arch.vector_memories();
    let mut busy: Vec<HashSet<u64>> = vec![HashSet::new(); nvm];
    for a in &acc {
        busy[a.array].insert(a.cycle);
    }
    let we = arch.word_elems as u64;
    let rows = arch.array_rows as u64;
    let cols = spec.out_channels.min(arch.array_cols);
    let mut written = vec![0usize; nvm];
    for p in 0..spec.out_positions() as u64 {
        for c in 0..cols {
            let target = c % nvm;
            let mut cycle = p * we + we - 1 + rows + c as u64;
            while busy[target].contains(&cycle) {
                cycle += 1;
            }
            busy[target].insert(cycle);
            acc.push(Access {
                cycle,
                array: target,
                addr: words[target] + written[target],
                kind: AccessKind::Write,
            });
            written[target] += 1;
        }
    }
    let trace = AccessTrace::from_unsorted(acc);
    trace.verify_exclusive()?;
    Ok(trace)
}
