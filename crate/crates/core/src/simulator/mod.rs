//! Functional execution and timing of a convolution on the systolic array.
//!
//! [`simulate`] runs the data through the method's datapath and attaches the
//! timing report; [`estimate`] produces the same report without touching data.

mod channel_first;
mod channel_last;
mod csv;
mod explicit;
mod gemm;
mod method;
mod plan;
mod sweep;
mod systolic;
mod timeline;

pub use self::csv::{write_report_csv, REPORT_COLUMNS, REPORT_SCHEMA};
pub use method::Method;
pub use plan::{multi_tile_count, MultiTilePlan};
pub use sweep::{sweep, SweepCase, SweepRow};
pub use systolic::{systolic_gemm, SystolicArray};

use crate::conv::ConvSpec;
use crate::error::{Error, Result};
use crate::lowering::{im2col_explicit, lower_filter, matrix_to_ofmap, ColumnOrdering};
use crate::memmodel::ArchConfig;
use crate::report::SimReport;
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct SimOutput {
    /// NHWC.
    pub ofmap: Tensor,
    pub report: SimReport,
}

/// Timing report of `spec` under `method`.
pub fn estimate(spec: &ConvSpec, arch: &ArchConfig, method: Method) -> Result<SimReport> {
    spec.validate()?;
    arch.validate()?;
    let mut rep = match method {
        Method::ChannelFirstImplicit => {
            let plan = MultiTilePlan::new(spec, arch)?;
            let mut r = timeline::run(&channel_first::steps(spec, arch, &plan), arch, 0);
            r.tiles_per_pass = plan.tiles_per_pass;
            r
        }
        Method::ChannelLastImplicit => timeline::run(&channel_last::steps(spec, arch), arch, 0),
        Method::ExplicitIm2col => {
            let (cycles, read, written) = explicit::lowering_phase(spec, arch);
            let st = gemm::steps(spec.lowered_rows(), spec.lowered_cols(), spec.out_channels, arch);
            let mut r = timeline::run(&st, arch, cycles);
            r.dram_bytes_read += read;
            r.dram_bytes_written = written;
            r
        }
        Method::PlainGemm => {
            let st = gemm::steps(spec.lowered_rows(), spec.lowered_cols(), spec.out_channels, arch);
            timeline::run(&st, arch, 0)
        }
    };
    rep.total_cycles = rep.compute_cycles + rep.stall_cycles + rep.weight_load_cycles;
    rep.useful_macs = spec.macs();
    rep.finish(arch.array_rows, arch.array_cols);
    Ok(rep)
}

/// Timing report of a standalone `m x k` by `k x n` GEMM.
pub fn estimate_gemm(m: usize, k: usize, n: usize, arch: &ArchConfig) -> Result<SimReport> {
    arch.validate()?;
    if m == 0 || k == 0 || n == 0 {
        return Err(Error::Shape(format!("empty GEMM {m}x{k}x{n}")));
    }
    let mut rep = timeline::run(&gemm::steps(m, k, n, arch), arch, 0);
    rep.useful_macs = (m * k * n) as u64;
    rep.finish(arch.array_rows, arch.array_cols);
    Ok(rep)
}

/// Runs `ifmap` and `filters` through `method`'s datapath.
pub fn simulate(
    ifmap: &Tensor,
    filters: &Tensor,
    spec: &ConvSpec,
    arch: &ArchConfig,
    method: Method,
) -> Result<SimOutput> {
    spec.validate()?;
    arch.validate()?;
    spec.check_ifmap(ifmap)?;
    spec.check_filters(filters)?;
    let (rows, cols) = (arch.array_rows, arch.array_cols);
    let ofmap = match method {
        Method::ChannelFirstImplicit => {
            let plan = MultiTilePlan::new(spec, arch)?;
            channel_first::functional(ifmap, filters, spec, arch, &plan)?
        }
        Method::ChannelLastImplicit => channel_last::functional(ifmap, filters, spec, arch)?,
        Method::ExplicitIm2col => {
            let ord = ColumnOrdering::ChannelLast;
            let a = im2col_explicit(ifmap, spec, ord)?;
            let b = lower_filter(filters, spec, ord)?;
            matrix_to_ofmap(systolic_gemm(&a, &b, rows, cols)?, spec)?
        }
        Method::PlainGemm => {
            let ord = ColumnOrdering::ChannelFirst;
            let a = im2col_explicit(ifmap, spec, ord)?;
            let b = lower_filter(filters, spec, ord)?;
            matrix_to_ofmap(systolic_gemm(&a, &b, rows, cols)?, spec)?
        }
    };
    let report = estimate(spec, arch, method)?;
    Ok(SimOutput { ofmap, report })
}
