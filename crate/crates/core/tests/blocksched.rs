mod common;

use std::collections::HashSet;

use cfsim_core::blocksched::{
    execute_plan, order_subtiles, partition, reuse_traffic, unique_elements, write_reuse_csv, OrderPolicy, ReuseRow,
    ReuseStats, Subtile, REUSE_SCHEMA,
};
use cfsim_core::lowering::tile_overlap_counts;
use cfsim_core::{direct_conv, ConvSpec, TileDescriptor};
use common::{int_inputs, random_spec};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn big_strided() -> ConvSpec {
    ConvSpec::new(1, 1, 99, 99, 1, 3, 3).with_stride(2)
}

#[test]
fn any_order_reproduces_direct_conv() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..30 {
        let spec = random_spec(&mut rng, 3, &[1, 2, 3, 5], 8, 5);
        let plan = partition(&spec, rng.gen_range(1..12), rng.gen_range(1..4), rng.gen_range(1..4)).unwrap();
        let (x, f) = int_inputs(&mut rng, &spec);
        let want = direct_conv(&x, &f, &spec).unwrap();
        for p in OrderPolicy::ALL {
            assert_eq!(execute_plan(&plan, &order_subtiles(&plan, p), &x, &f).unwrap(), want);
        }
        let mut order = order_subtiles(&plan, OrderPolicy::FilterMajor);
        order.shuffle(&mut rng);
        assert_eq!(execute_plan(&plan, &order, &x, &f).unwrap(), want, "{spec:?}");
    }
}

#[test]
fn policies_schedule_the_same_subtiles() {
    let spec = ConvSpec::new(2, 5, 7, 7, 6, 3, 3).with_padding(1);
    let plan = partition(&spec, 10, 4, 2).unwrap();
    let mut a = order_subtiles(&plan, OrderPolicy::FilterMajor);
    let mut b = order_subtiles(&plan, OrderPolicy::ReuseAware);
    assert_eq!(a.len(), plan.subtile_count());
    a.sort();
    b.sort();
    assert_eq!(a, b);
    a.dedup();
    assert_eq!(a.len(), plan.subtile_count());
}

#[test]
fn whole_output_block_has_one_subtile_per_position_and_chunk() {
    let spec = ConvSpec::new(2, 7, 6, 6, 5, 3, 2);
    let plan = partition(&spec, spec.lowered_rows(), spec.out_channels, 3).unwrap();
    assert_eq!(plan.subtile_count(), 6 * 3);
    let mut covered = vec![0; spec.lowered_cols()];
    for ks in &plan.k_subtiles {
        for k in ks.k_range.clone() {
            covered[k] += 1;
        }
    }
    assert!(covered.iter().all(|&c| c == 1));
}

#[test]
fn filter_major_neighbours_share_nothing_on_large_inputs() {
    let spec = big_strided();
    let plan = partition(&spec, 49, 1, 1).unwrap();
    let order = order_subtiles(&plan, OrderPolicy::FilterMajor);
    let sets: Vec<HashSet<_>> = order.iter().map(|&s| plan.subtile_coords(s).into_iter().collect()).collect();
    let shared: usize = sets.windows(2).map(|w| w[0].intersection(&w[1]).count()).sum();
    assert_eq!(shared, 0);
}

#[test]
fn reuse_aware_neighbours_share_most_columns_at_stride_one() {
    let spec = ConvSpec::new(1, 1, 99, 99, 1, 3, 3);
    let plan = partition(&spec, spec.out_width(), 1, 1).unwrap();
    let order = order_subtiles(&plan, OrderPolicy::ReuseAware);
    for w in order.windows(2) {
        let (a, b) = (plan.k_subtiles[w[0].k_subtile].tile, plan.k_subtiles[w[1].k_subtile].tile);
        if w[0].m_block != w[1].m_block || a.r != b.r {
            continue;
        }
        let sa: HashSet<_> = plan.subtile_coords(w[0]).into_iter().collect();
        let shared = plan.subtile_coords(w[1]).into_iter().filter(|c| sa.contains(c)).count();
        assert!(shared as f64 / sa.len() as f64 >= 2.0 / 3.0);
    }
}

#[test]
fn lru_hits_agree_with_tile_overlap() {
    let spec = big_strided();
    let plan = partition(&spec, 49, 1, 1).unwrap();
    // every output row of the first tile, then every row of the third
    let order: Vec<_> = [0, 2]
        .iter()
        .flat_map(|&k| (0..plan.m_blocks.len()).map(move |m| Subtile { m_block: m, n_block: 0, k_subtile: k }))
        .collect();
    let budget = (49 * 49 * 4) as u64;
    let s = reuse_traffic(&plan, &order, budget, 4);
    let (shared, union) = tile_overlap_counts(TileDescriptor::new(0, 0), TileDescriptor::new(0, 2), &spec);
    assert_eq!(s.hits as usize, shared);
    assert_eq!(s.misses as usize, union);
    assert_eq!(s.hits as f64 / s.misses as f64, 0.96);
}

#[test]
fn reuse_aware_fetches_less_at_two_working_sets() {
    let spec = big_strided();
    let plan = partition(&spec, 49, 1, 1).unwrap();
    let budget = 2 * plan.working_set_bytes(4);
    let fm = reuse_traffic(&plan, &order_subtiles(&plan, OrderPolicy::FilterMajor), budget, 4);
    let ra = reuse_traffic(&plan, &order_subtiles(&plan, OrderPolicy::ReuseAware), budget, 4);
    assert!(ra.dram_bytes < fm.dram_bytes);
    assert!(ra.hit_fraction() > fm.hit_fraction());
    assert!(ra.dram_bytes >= unique_elements(&plan) as u64 * 4);
}

#[test]
fn unlimited_budget_pays_only_compulsory_misses() {
    let spec = ConvSpec::new(2, 3, 9, 9, 2, 3, 3).with_stride(2).with_padding(1);
    let plan = partition(&spec, 7, 1, 2).unwrap();
    let whole = (spec.batch * spec.in_channels * spec.in_height * spec.in_width * 4) as u64;
    let unique = unique_elements(&plan) as u64 * 4;
    for p in OrderPolicy::ALL {
        let s = reuse_traffic(&plan, &order_subtiles(&plan, p), whole, 4);
        assert_eq!(s.dram_bytes, unique);
    }
}

#[test]
fn reuse_csv_has_schema_line() {
    let rows = vec![ReuseRow {
        layer: "x".into(),
        policy: OrderPolicy::ReuseAware,
        block_m: 4,
        block_n: 2,
        block_k: 1,
        sram_budget_bytes: 64,
        stats: ReuseStats { dram_bytes: 40, hits: 6, misses: 10 },
    }];
    let mut buf = Vec::new();
    write_reuse_csv(&mut buf, &rows).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], REUSE_SCHEMA);
    assert_eq!(lines[2], "x,reuse-aware,4,2,1,64,40,6,10,0.375000");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn writer_sets_are_disjoint(
        n in 1usize..3, c in 1usize..6, h in 3usize..9, co in 1usize..7,
        bm in 1usize..20, bn in 1usize..5, bk in 1usize..6,
    ) {
        let spec = ConvSpec::new(n, c, h, h, co, 3, 3).with_padding(1);
        let plan = partition(&spec, bm, bn, bk).unwrap();
        prop_assert!(plan.writers_disjoint());
        if bk <= c {
            for ks in &plan.k_subtiles {
                prop_assert_eq!(ks.k_range.start / c, (ks.k_range.end - 1) / c);
            }
        }
    }

    #[test]
    fn reuse_aware_never_fetches_more(
        c in 1usize..4, h in 6usize..16, st in 1usize..3, bm_rows in 1usize..3, extra in 0u64..3,
    ) {
        let spec = ConvSpec::new(1, c, h, h, 1, 3, 3).with_stride(st);
        prop_assume!(spec.validate().is_ok());
        let plan = partition(&spec, bm_rows * spec.out_width(), 1, c).unwrap();
        let budget = (1 + extra) * plan.working_set_bytes(4);
        let fm = reuse_traffic(&plan, &order_subtiles(&plan, OrderPolicy::FilterMajor), budget, 4);
        let ra = reuse_traffic(&plan, &order_subtiles(&plan, OrderPolicy::ReuseAware), budget, 4);
        prop_assert!(ra.dram_bytes <= fm.dram_bytes, "{:?} vs {:?}", ra, fm);
    }
}
