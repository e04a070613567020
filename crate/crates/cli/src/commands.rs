use std::io::Write;

use cfsim_core::blocksched::{order_subtiles, partition, reuse_traffic, write_reuse_csv, OrderPolicy, ReuseRow};
use cfsim_core::lowering::{lowered_memory_footprint, DEFAULT_ELEM_BYTES};
use cfsim_core::simulator::{sweep as run_sweep, write_report_csv, SweepCase, SweepRow};
use cfsim_core::{direct_conv, estimate, simulate as run_simulate, ArchConfig, ConvSpec, Layout, Method, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::args::{OverheadArgs, ReuseArgs, SimulateArgs, SweepArgs, VerifyArgs};
use crate::config::{load_arch, load_sweep, load_workload, LayerEntry};
use crate::error::CliError;

pub const OVERHEAD_SCHEMA: &str = "# cfsim overhead schema v1";

/// CSV body plus an optional human summary line.
pub struct Output {
    pub csv: Vec<u8>,
    pub summary: Option<String>,
}

fn csv_err(e: std::io::Error) -> CliError {
    CliError::Config(format!("csv encoding failed: {e}"))
}

pub fn simulate(args: &SimulateArgs) -> Result<Output, CliError> {
    let work = load_workload(&args.workload)?;
    let mut arch = load_arch(args.arch.as_deref())?;
    work.apply_elem_bytes(&mut arch);
    arch.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let methods = work.methods_or(&args.method);
    let grid: Vec<(&LayerEntry, Method)> = work
        .layers
        .iter()
        .flat_map(|l| methods.iter().map(move |&m| (l, m)))
        .collect();
    let results: Vec<_> = grid
        .par_iter()
        .map(|&(l, m)| estimate(&l.spec, &arch, m).map_err(|e| CliError::sim(&l.name, e)))
        .collect();
    let mut rows = Vec::with_capacity(grid.len());
    for ((l, m), r) in grid.iter().zip(results) {
        rows.push(SweepRow {
            layer: l.name.clone(),
            spec: l.spec,
            arch: arch.clone(),
            method: *m,
            result: Ok(r?),
        });
    }
    let mut csv = Vec::new();
    write_report_csv(&mut csv, &rows).map_err(csv_err)?;

    let mut summary = None;
    if args.verify {
        let seed = args.seed.or(work.seed).unwrap_or(0);
        let specs: Vec<_> = work.layers.iter().map(|l| (l.name.clone(), l.spec)).collect();
        let (ok, total) = verify_layers(&specs, &arch, &methods, seed)?;
        let line = format!("{ok}/{total} match");
        if ok != total {
            eprintln!("{line}");
            return Err(CliError::Mismatch {
                failed: total - ok,
                total,
            });
        }
        summary = Some(line);
    }
    Ok(Output { csv, summary })
}

pub fn sweep(args: &SweepArgs) -> Result<Output, CliError> {
    let work = load_workload(&args.workload)?;
    let grid = load_sweep(&args.sweep)?;
    let mut base = load_arch(args.arch.as_deref())?;
    work.apply_elem_bytes(&mut base);
    let archs = grid.arch_grid(&base);
    let methods = if !args.method.is_empty() {
        args.method.clone()
    } else if !grid.methods.is_empty() {
        grid.methods.clone()
    } else {
        work.methods_or(&[])
    };
    let mut cs = Vec::new();
    for l in &work.layers {
        if grid.strides.is_empty() {
            cs.push(SweepCase::new(l.name.clone(), l.spec));
        }
        for &s in &grid.strides {
            cs.push(SweepCase::new(l.name.clone(), l.spec.with_stride(s)));
        }
    }
    let rows = run_sweep(&cs, &archs, &methods);
    let failed = rows.iter().filter(|r| r.result.is_err()).count();
    if failed > 0 {
        log::warn!("{failed} of {} grid points failed; see the error column", rows.len());
    }
    let mut csv = Vec::new();
    write_report_csv(&mut csv, &rows).map_err(csv_err)?;
    Ok(Output { csv, summary: None })
}

pub fn overhead(args: &OverheadArgs) -> Result<Output, CliError> {
    let work = load_workload(&args.workload)?;
    let elem = work.elem_bytes.unwrap_or(DEFAULT_ELEM_BYTES);
    let mut out = Vec::new();
    writeln!(out, "{OVERHEAD_SCHEMA}").map_err(csv_err)?;
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record([
        "scope",
        "name",
        "batch",
        "in_channels",
        "in_height",
        "in_width",
        "out_channels",
        "filter_height",
        "filter_width",
        "stride_h",
        "stride_w",
        "pad_h",
        "pad_w",
        "elem_bytes",
        "original_bytes",
        "lowered_bytes",
        "ratio",
    ])
    .map_err(|e| csv_err(e.into()))?;
    let (mut orig, mut low) = (0u64, 0u64);
    for l in &work.layers {
        let s = &l.spec;
        let fp = lowered_memory_footprint(s, elem);
        orig += fp.original_bytes;
        low += fp.lowered_bytes;
        let mut rec = vec!["layer".to_string(), l.name.clone()];
        rec.extend(
            [
                s.batch,
                s.in_channels,
                s.in_height,
                s.in_width,
                s.out_channels,
                s.filter_height,
                s.filter_width,
                s.stride_h,
                s.stride_w,
                s.pad_h,
                s.pad_w,
                elem,
            ]
            .iter()
            .map(ToString::to_string),
        );
        rec.push(fp.original_bytes.to_string());
        rec.push(fp.lowered_bytes.to_string());
        rec.push(format!("{:.6}", fp.ratio));
        w.write_record(&rec).map_err(|e| csv_err(e.into()))?;
    }
    if !work.layers.is_empty() {
        let mut rec = vec!["model".to_string(), work.model.clone().unwrap_or_else(|| "model".into())];
        rec.extend(std::iter::repeat_n(String::new(), 11));
        rec.push(elem.to_string());
        rec.push(orig.to_string());
        rec.push(low.to_string());
        rec.push(format!("{:.6}", low as f64 / orig as f64));
        w.write_record(&rec).map_err(|e| csv_err(e.into()))?;
    }
    w.flush().map_err(csv_err)?;
    drop(w);
    Ok(Output { csv: out, summary: None })
}

pub fn verify(args: &VerifyArgs) -> Result<Output, CliError> {
    let mut arch = load_arch(args.arch.as_deref())?;
    let (specs, methods, seed) = match (&args.workload, args.random) {
        (Some(p), _) => {
            let work = load_workload(p)?;
            work.apply_elem_bytes(&mut arch);
            let specs = work.layers.iter().map(|l| (l.name.clone(), l.spec)).collect();
            (specs, work.methods_or(&args.method), args.seed.or(work.seed).unwrap_or(0))
        }
        (None, Some(n)) => {
            let seed = args.seed.unwrap_or(0);
            let methods = if args.method.is_empty() {
                Method::ALL.to_vec()
            } else {
                args.method.clone()
            };
            (random_layers(n, seed), methods, seed)
        }
        (None, None) => return Err(CliError::Usage("verify needs --workload or --random".into())),
    };
    let (ok, total) = verify_layers(&specs, &arch, &methods, seed)?;
    let line = format!("{ok}/{total} match");
    if ok != total {
        println!("{line}");
        return Err(CliError::Mismatch {
            failed: total - ok,
            total,
        });
    }
    Ok(Output {
        csv: Vec::new(),
        summary: Some(line),
    })
}

pub fn reuse(args: &ReuseArgs) -> Result<Output, CliError> {
    let work = load_workload(&args.workload)?;
    let mut arch = load_arch(args.arch.as_deref())?;
    work.apply_elem_bytes(&mut arch);
    let elem = arch.elem_bytes;
    let per_layer: Vec<Result<Vec<ReuseRow>, CliError>> = work
        .layers
        .par_iter()
        .map(|l| {
            let plan = partition(&l.spec, args.block_m, args.block_n, args.block_k)
                .map_err(|e| CliError::sim(&l.name, e))?;
            let budget = args
                .budget_bytes
                .unwrap_or(args.budget_sets * plan.working_set_bytes(elem));
            Ok(OrderPolicy::ALL
                .iter()
                .map(|&p| ReuseRow {
                    layer: l.name.clone(),
                    policy: p,
                    block_m: args.block_m,
                    block_n: args.block_n,
                    block_k: args.block_k,
                    sram_budget_bytes: budget,
                    stats: reuse_traffic(&plan, &order_subtiles(&plan, p), budget, elem),
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_layer {
        rows.extend(r?);
    }
    let mut csv = Vec::new();
    write_reuse_csv(&mut csv, &rows).map_err(csv_err)?;
    Ok(Output { csv, summary: None })
}

/// Random small-integer IFMap and filters for `spec`.
pub fn int_data(spec: &ConvSpec, rng: &mut impl Rng) -> (Tensor, Tensor) {
    let x = Tensor::from_fn(
        [spec.batch, spec.in_channels, spec.in_height, spec.in_width],
        Layout::Nhwc,
        |_, _, _, _| rng.gen_range(-3i32..=3) as f32,
    )
    .expect("spec dims are non-zero");
    let f = Tensor::from_fn(
        [spec.out_channels, spec.in_channels, spec.filter_height, spec.filter_width],
        Layout::Hwcn,
        |_, _, _, _| rng.gen_range(-3i32..=3) as f32,
    )
    .expect("spec dims are non-zero");
    (x, f)
}

/// Runs each layer through every method on seeded integer data; returns
/// (matching layers, layers).
pub fn verify_layers(
    specs: &[(String, ConvSpec)],
    arch: &ArchConfig,
    methods: &[Method],
    seed: u64,
) -> Result<(usize, usize), CliError> {
    let results: Vec<Result<bool, CliError>> = specs
        .par_iter()
        .enumerate()
        .map(|(i, (name, spec))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let (x, f) = int_data(spec, &mut rng);
            let want = direct_conv(&x, &f, spec).map_err(|e| CliError::sim(name, e))?;
            let mut ok = true;
            for &m in methods {
                let out = run_simulate(&x, &f, spec, arch, m).map_err(|e| CliError::sim(name, e))?;
                if out.ofmap != want {
                    log::error!("{name} / {m}: output differs from the reference");
                    ok = false;
                }
            }
            log::debug!("{name}: {}", if ok { "match" } else { "MISMATCH" });
            Ok(ok)
        })
        .collect();
    let mut ok = 0;
    for r in &results {
        if *r.as_ref().map_err(|e| CliError::Config(e.to_string()))? {
            ok += 1;
        }
    }
    Ok((ok, specs.len()))
}

/// Draws a layer with N <= 8, C_I in {1,2,3,8,16,128}, H_I, W_I <= 16,
/// C_O <= 16, filters up to 5x5, stride 1-4, padding 0-2, dilation 1-2.
pub fn random_spec(rng: &mut impl Rng) -> ConvSpec {
    const CHANNELS: [usize; 6] = [1, 2, 3, 8, 16, 128];
    loop {
        let s = ConvSpec {
            batch: rng.gen_range(1..=8),
            in_channels: CHANNELS[rng.gen_range(0..CHANNELS.len())],
            in_height: rng.gen_range(1..=16),
            in_width: rng.gen_range(1..=16),
            out_channels: rng.gen_range(1..=16),
            filter_height: rng.gen_range(1..=5),
            filter_width: rng.gen_range(1..=5),
            stride_h: rng.gen_range(1..=4),
            stride_w: rng.gen_range(1..=4),
            pad_h: rng.gen_range(0..=2),
            pad_w: rng.gen_range(0..=2),
            dilation_h: rng.gen_range(1..=2),
            dilation_w: rng.gen_range(1..=2),
        };
        if s.validate().is_ok() {
            return s;
        }
    }
}

pub fn random_layers(n: usize, seed: u64) -> Vec<(String, ConvSpec)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| (format!("random{i}"), random_spec(&mut rng))).collect()
}
