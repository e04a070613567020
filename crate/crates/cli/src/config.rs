//! TOML inputs: architecture, workload and sweep grid files.
//!
//! Architecture keys are exactly the [`ArchConfig`] field names; missing keys
//! take the baseline defaults.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use cfsim_core::{ArchConfig, ConvSpec, Method, MultiTileCap};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct LayerEntry {
    pub name: String,
    #[serde(flatten)]
    pub spec: ConvSpec,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadFile {
    #[serde(default)]
    pub model: Option<String>,
    /// Overrides the architecture's element width when set.
    #[serde(default)]
    pub elem_bytes: Option<usize>,
    #[serde(default)]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub layers: Vec<LayerEntry>,
}

impl WorkloadFile {
    pub fn validate(&self) -> Result<(), CliError> {
        let mut seen = HashSet::new();
        for l in &self.layers {
            if !seen.insert(l.name.as_str()) {
                return Err(CliError::Config(format!("duplicate layer name {:?}", l.name)));
            }
            l.spec
                .validate()
                .map_err(|e| CliError::Config(format!("layer {}: {e}", l.name)))?;
        }
        if self.elem_bytes == Some(0) {
            return Err(CliError::Config("elem_bytes must be at least 1".into()));
        }
        Ok(())
    }

    /// Methods named on the command line, else in the file, else all four.
    pub fn methods_or(&self, cli: &[Method]) -> Vec<Method> {
        if !cli.is_empty() {
            cli.to_vec()
        } else if !self.methods.is_empty() {
            self.methods.clone()
        } else {
            Method::ALL.to_vec()
        }
    }

    pub fn apply_elem_bytes(&self, arch: &mut ArchConfig) {
        if let Some(e) = self.elem_bytes {
            arch.elem_bytes = e;
        }
    }
}

/// Parameter grids for `sweep`. An empty list keeps the base value.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    #[serde(default)]
    pub array_sizes: Vec<usize>,
    #[serde(default)]
    pub word_sizes: Vec<usize>,
    #[serde(default)]
    pub strides: Vec<usize>,
    #[serde(default)]
    pub multi_tile_caps: Vec<MultiTileCap>,
    #[serde(default)]
    pub methods: Vec<Method>,
}

impl SweepFile {
    /// Architecture grid, array size outermost, then word size, then cap.
    pub fn arch_grid(&self, base: &ArchConfig) -> Vec<ArchConfig> {
        let or = |v: &Vec<usize>, d: usize| if v.is_empty() { vec![d] } else { v.clone() };
        let caps = if self.multi_tile_caps.is_empty() {
            vec![base.max_multi_tile]
        } else {
            self.multi_tile_caps.clone()
        };
        let mut out = Vec::new();
        for n in or(&self.array_sizes, base.array_rows) {
            for w in or(&self.word_sizes, base.word_elems) {
                for &cap in &caps {
                    let a = if n == base.array_rows && n == base.array_cols {
                        base.clone()
                    } else {
                        base.clone().with_array_size(n)
                    };
                    out.push(ArchConfig {
                        max_multi_tile: cap,
                        ..a.with_word_elems(w)
                    });
                }
            }
        }
        out
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

pub fn load_toml<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_toml(&text, path)
}

pub fn parse_toml<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T, CliError> {
    toml::from_str(text).map_err(|e| {
        let (line, col) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        CliError::Parse {
            path: path.to_path_buf(),
            line,
            col,
            msg: e.message().to_string(),
        }
    })
}

/// Baseline defaults when `path` is `None`.
pub fn load_arch(path: Option<&Path>) -> Result<ArchConfig, CliError> {
    let arch = match path {
        Some(p) => load_toml::<ArchConfig>(p)?,
        None => ArchConfig::baseline(),
    };
    arch.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(arch)
}

pub fn load_workload(path: &Path) -> Result<WorkloadFile, CliError> {
    let w: WorkloadFile = load_toml(path)?;
    w.validate()?;
    Ok(w)
}

pub fn load_sweep(path: &Path) -> Result<SweepFile, CliError> {
    let s: SweepFile = load_toml(path)?;
    if s.array_sizes.contains(&0) || s.word_sizes.contains(&0) || s.strides.contains(&0) {
        return Err(CliError::Config(format!("{}: grid values must be at least 1", path.display())));
    }
    Ok(s)
}
