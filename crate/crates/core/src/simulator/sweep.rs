use rayon::prelude::*;

use crate::conv::ConvSpec;
use crate::memmodel::ArchConfig;
use crate::report::SimReport;

use super::{estimate, Method};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCase {
    pub name: String,
    pub spec: ConvSpec,
}

impl SweepCase {
    pub fn new(name: impl Into<String>, spec: ConvSpec) -> Self {
        Self { name: name.into(), spec }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub layer: String,
    pub spec: ConvSpec,
    pub arch: ArchConfig,
    pub method: Method,
    /// Failure message of this grid point; the sweep carries on regardless.
    pub result: Result<SimReport, String>,
}

/// Estimates the full cross product, ordered arch, then case, then method.
///
/// Grid points run in parallel on the current rayon pool.
pub fn sweep(cases: &[SweepCase], archs: &[ArchConfig], methods: &[Method]) -> Vec<SweepRow> {
    let grid: Vec<(&ArchConfig, &SweepCase, Method)> = archs
        .iter()
        .flat_map(|a| cases.iter().flat_map(move |c| methods.iter().map(move |&m| (a, c, m))))
        .collect();
    grid.into_par_iter()
        .map(|(arch, case, method)| {
            let result = estimate(&case.spec, arch, method).map_err(|e| e.to_string());
            if let Err(e) = &result {
                log::warn!("{} / {method}: {e}", case.name);
            }
            SweepRow {
                layer: case.name.clone(),
                spec: case.spec,
                arch: arch.clone(),
                method,
                result,
            }
        })
        .collect()
}
