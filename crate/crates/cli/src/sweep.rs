//! Cartesian parameter sweeps over a base configuration.
//!
//! A grid spec lists axes separated by `;`, each `field=v1,v2,...`:
//!
//! ```text
//! experts[*].beta=0.25,0.5,1;horizon=1000,2000
//! ```
//!
//! Supported fields: `horizon`, `seed`, `domain.dim`, `domain.radius`,
//! `stream.trunc_radius`, `stream.lipschitz`, `stream.truncation`,
//! `scale.policy`, `scale.warmup`, `mgd_engine.kind`, `mgd_engine.eta`,
//! `fmgd_engine.kind`, `fmgd_engine.eta`, `fmgd_engine.alpha`, and
//! `experts[i].beta|eta|mode` with `i` an index or `*` (for `beta`, `*`
//! selects the hypentropy experts).

use std::path::Path;

use serde::de::value::{Error as ValueError, StrDeserializer};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, RegularizerName};
use crate::runner::{self, RunSummary};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl GridValue {
    fn parse(s: &str) -> Self {
        let s = s.trim();
        if let Ok(i) = s.parse::<i64>() {
            GridValue::Int(i)
        } else if let Ok(f) = s.parse::<f64>() {
            GridValue::Float(f)
        } else {
            GridValue::Text(s.to_string())
        }
    }

    fn float(&self, field: &str) -> Result<f64, CliError> {
        match *self {
            GridValue::Int(i) => Ok(i as f64),
            GridValue::Float(f) => Ok(f),
            GridValue::Text(ref t) => Err(schema(format!("{field}: expected a number, got {t:?}"))),
        }
    }

    fn count(&self, field: &str) -> Result<u64, CliError> {
        match *self {
            GridValue::Int(i) if i >= 0 => Ok(i as u64),
            _ => Err(schema(format!("{field}: expected a nonnegative integer, got {self:?}"))),
        }
    }

    fn variant<'de, T: Deserialize<'de>>(&'de self, field: &str) -> Result<T, CliError> {
        match self {
            GridValue::Text(t) => T::deserialize(StrDeserializer::<ValueError>::new(t))
                .map_err(|e| schema(format!("{field}: {e}"))),
            other => Err(schema(format!("{field}: expected a name, got {other:?}"))),
        }
    }
}

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub field: String,
    pub values: Vec<GridValue>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub axes: Vec<GridAxis>,
}

impl Grid {
    /// Parses `field=v1,v2;field=...`; blank input is the empty grid.
    pub fn parse(spec: &str) -> Result<Self, CliError> {
        let mut axes = Vec::new();
        for part in spec.split([';', '\n']).map(str::trim).filter(|p| !p.is_empty()) {
            let (field, values) = part.split_once('=').ok_or_else(|| schema(format!("grid: {part:?} lacks '='")))?;
            let values: Vec<GridValue> =
                values.split(',').map(str::trim).filter(|v| !v.is_empty()).map(GridValue::parse).collect();
            if values.is_empty() {
                return Err(schema(format!("grid: {} has no values", field.trim())));
            }
            axes.push(GridAxis { field: field.trim().to_string(), values });
        }
        Ok(Self { axes })
    }

    /// Every combination of axis values, first axis slowest.
    pub fn cells(&self) -> Vec<Vec<Assignment>> {
        let mut out = vec![Vec::new()];
        for axis in &self.axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.values.iter().map(move |v| {
                        let mut cell = prefix.clone();
                        cell.push(Assignment { field: axis.field.clone(), value: v.clone() });
                        cell
                    })
                })
                .collect();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub field: String,
    pub value: GridValue,
}

enum ExpertTarget {
    All,
    One(usize),
}

fn expert_field(field: &str) -> Option<(ExpertTarget, &str)> {
    let rest = field.strip_prefix("experts[")?;
    let (idx, attr) = rest.split_once("].")?;
    let target = if idx == "*" { ExpertTarget::All } else { ExpertTarget::One(idx.parse().ok()?) };
    Some((target, attr))
}

/// Applies one assignment to `cfg`; unknown fields are schema errors.
pub fn apply(cfg: &mut ExperimentConfig, a: &Assignment) -> Result<(), CliError> {
    let f = a.field.as_str();
    let v = &a.value;
    match f {
        "horizon" => cfg.horizon = v.count(f)? as usize,
        "seed" => cfg.seeds = vec![v.count(f)?],
        "domain.dim" => cfg.domain.dim = v.count(f)? as usize,
        "domain.radius" => cfg.domain.radius = Some(v.float(f)?),
        "stream.trunc_radius" => cfg.stream.trunc_radius = v.float(f)?,
        "stream.lipschitz" => cfg.stream.lipschitz = v.float(f)?,
        "stream.truncation" => cfg.stream.truncation = v.variant(f)?,
        "scale.policy" => cfg.scale.policy = v.variant(f)?,
        "scale.warmup" => cfg.scale.warmup = v.count(f)? as usize,
        "mgd_engine.kind" => cfg.mgd_engine.kind = v.variant(f)?,
        "mgd_engine.eta" => cfg.mgd_engine.eta = Some(v.float(f)?),
        "fmgd_engine.kind" => cfg.fmgd_engine.kind = v.variant(f)?,
        "fmgd_engine.eta" => cfg.fmgd_engine.eta = Some(v.float(f)?),
        "fmgd_engine.alpha" => cfg.fmgd_engine.alpha = Some(v.float(f)?),
        _ => {
            let (target, attr) = expert_field(f).ok_or_else(|| schema(format!("grid: unsupported field {f:?}")))?;
            let k = cfg.experts.len();
            let indices: Vec<usize> = match target {
                ExpertTarget::One(i) if i < k => vec![i],
                ExpertTarget::One(i) => return Err(schema(format!("{f}: expert {i} out of range for K = {k}"))),
                ExpertTarget::All if attr == "beta" => {
                    (0..k).filter(|&i| cfg.experts[i].regularizer == RegularizerName::Hypentropy).collect()
                }
                ExpertTarget::All => (0..k).collect(),
            };
            for i in indices {
                let e = &mut cfg.experts[i];
                match attr {
                    "beta" => e.beta = Some(v.float(f)?),
                    "eta" => e.eta = Some(v.float(f)?),
                    "mode" => e.mode = v.variant(f)?,
                    _ => return Err(schema(format!("grid: unsupported field {f:?}"))),
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub dir: String,
    pub assignments: Vec<Assignment>,
    pub config: ExperimentConfig,
}

/// Maps each sweep cell to its subdirectory and fully resolved config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub base: String,
    pub cells: Vec<Cell>,
}

impl Manifest {
    pub fn plan(base: &ExperimentConfig, grid: &Grid) -> Result<Self, CliError> {
        base.validate()?;
        let cells = grid
            .cells()
            .into_iter()
            .enumerate()
            .map(|(n, assignments)| {
                let mut config = base.clone();
                for a in &assignments {
                    apply(&mut config, a)?;
                }
                config.validate()?;
                Ok(Cell { dir: format!("cell-{n:03}"), assignments, config })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(Self { base: base.name.clone(), cells })
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| schema(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let m: Self = toml::from_str(text).map_err(|e| schema(e.to_string()))?;
        for c in &m.cells {
            c.config.validate()?;
        }
        Ok(m)
    }
}

/// Runs every cell into `dir/<cell>` and writes `dir/manifest.toml`.
pub fn sweep(base: &ExperimentConfig, grid: &Grid, dir: &Path) -> Result<(Manifest, Vec<RunSummary>), CliError> {
    let manifest = Manifest::plan(base, grid)?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    runner::write_text(&dir.join("manifest.toml"), &manifest.to_toml()?)?;
    let summaries = manifest
        .cells
        .iter()
        .map(|c| runner::run(&c.config, &dir.join(&c.dir)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((manifest, summaries))
}
