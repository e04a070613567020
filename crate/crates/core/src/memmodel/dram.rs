//! Burst-latency plus bandwidth DRAM model.
//!
//! A coordinate `(h, w, c)` stands for the `group` batch lanes stored
//! innermost at that position, so one coordinate is `group * elem_bytes`
//! contiguous bytes. Requested bytes are merged into maximal contiguous runs
//! and each run costs `dram_fixed_latency_cycles + ceil(bytes / bytes_per_cycle)`.

use serde::{Deserialize, Serialize};

use crate::conv::ConvSpec;

use super::ArchConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DramLayout {
    Chw,
    Hwc,
}

/// Index of `(h, w, c)` among IFMap positions under `layout`.
#[inline]
pub fn linear_element_index(layout: DramLayout, spec: &ConvSpec, h: usize, w: usize, c: usize) -> u64 {
    let (hh, ww, cc) = (spec.in_height as u64, spec.in_width as u64, spec.in_channels as u64);
    let (h, w, c) = (h as u64, w as u64, c as u64);
    match layout {
        DramLayout::Hwc => (h * ww + w) * cc + c,
        DramLayout::Chw => (c * hh + h) * ww + w,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FillCost {
    pub runs: u64,
    pub bytes: u64,
    pub cycles: u64,
}

/// Merges byte ranges arriving in non-decreasing start order into runs.
#[derive(Debug, Clone)]
pub struct RunMerger<'a> {
    arch: &'a ArchConfig,
    burst: u64,
    cur: Option<(u64, u64)>,
    cost: FillCost,
}

impl<'a> RunMerger<'a> {
    pub fn new(arch: &'a ArchConfig) -> Self {
        Self {
            arch,
            burst: arch.dram_burst_bytes as u64,
            cur: None,
            cost: FillCost::default(),
        }
    }

    pub fn push(&mut self, start: u64, len: u64) {
        if len == 0 {
            return;
        }
        let (s, e) = match start.checked_div(self.burst) {
            Some(q) => (q * self.burst, (start + len).div_ceil(self.burst) * self.burst),
            None => (start, start + len),
        };
        match &mut self.cur {
            Some((_, end)) if s <= *end => *end = (*end).max(e),
            _ => {
                self.flush();
                self.cur = Some((s, e));
            }
        }
    }

    fn flush(&mut self) {
        if let Some((s, e)) = self.cur.take() {
            self.cost.runs += 1;
            self.cost.bytes += e - s;
            self.cost.cycles += self.arch.dram_fixed_latency_cycles + self.arch.transfer_cycles(e - s);
        }
    }

    pub fn finish(mut self) -> FillCost {
        self.flush();
        self.cost
    }
}

/// Fill cost of an arbitrary coordinate list with `group` lanes per coordinate.
pub fn dram_fill_detail(
    coords: &[(usize, usize, usize)],
    layout: DramLayout,
    spec: &ConvSpec,
    arch: &ArchConfig,
    group: usize,
) -> FillCost {
    debug_assert!(coords
        .iter()
        .all(|&(h, w, c)| h < spec.in_height && w < spec.in_width && c < spec.in_channels));
    let mut idx: Vec<u64> = coords
        .iter()
        .map(|&(h, w, c)| linear_element_index(layout, spec, h, w, c))
        .collect();
    idx.sort_unstable();
    idx.dedup();
    let unit = (group * arch.elem_bytes) as u64;
    let mut m = RunMerger::new(arch);
    for i in idx {
        m.push(i * unit, unit);
    }
    m.finish()
}

/// Cycles to fetch `coords` with the batch packed `min(N, word_elems)` wide.
pub fn dram_fill_cost(coords: &[(usize, usize, usize)], layout: DramLayout, spec: &ConvSpec, arch: &ArchConfig) -> u64 {
    let group = spec.batch.min(arch.word_elems);
    dram_fill_detail(coords, layout, spec, arch, group).cycles
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_element_cost() {
        let spec = ConvSpec::new(2, 4, 5, 5, 1, 3, 3);
        let arch = ArchConfig::default();
        let c = dram_fill_cost(&[(1, 1, 1)], DramLayout::Hwc, &spec, &arch);
        assert_eq!(c, arch.dram_fixed_latency_cycles + 1);
    }

    #[test]
    fn adjacent_ranges_merge_and_gaps_split() {
        let arch = ArchConfig::default();
        let mut m = RunMerger::new(&arch);
        m.push(0, 8);
        m.push(8, 8);
        m.push(32, 4);
        let c = m.finish();
        assert_eq!((c.runs, c.bytes), (2, 20));
    }

    #[test]
    fn burst_granularity_merges_nearby_ranges() {
        let arch = ArchConfig {
            dram_burst_bytes: 64,
            ..ArchConfig::default()
        };
        let mut m = RunMerger::new(&arch);
        m.push(0, 8);
        m.push(32, 4);
        m.push(130, 2);
        let c = m.finish();
        assert_eq!((c.runs, c.bytes), (2, 128));
    }

    #[test]
    fn duplicates_are_fetched_once() {
        let spec = ConvSpec::new(1, 1, 4, 4, 1, 1, 1);
        let arch = ArchConfig::default();
        let c = dram_fill_detail(&[(0, 0, 0), (0, 0, 0), (0, 1, 0)], DramLayout::Hwc, &spec, &arch, 1);
        assert_eq!((c.runs, c.bytes), (1, 8));
    }
}
