//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown or repeated
//! keys are rejected with their line number.
//!
//! | key                | default        | meaning                                      |
//! |--------------------|----------------|----------------------------------------------|
//! | `n`                | `16`           | grid points per axis                         |
//! | `metric`           | `flat`         | `flat` or `constant:` + 16 comma-separated   |
//! | `seed`             | `perturbation` | `constant`, `perturbation`, `sphere_map`, `file` |
//! | `epsilon`          | `0.1`          | perturbation amplitude                       |
//! | `mode`             | `1`            | perturbation wave number                     |
//! | `plane`            | `0,2`          | perturbation rotation plane                  |
//! | `degrees`          | `1,0,0,0,0,0`  | sphere-map degrees, planes 01 02 03 12 13 23 |
//! | `seed_file`        |                | snapshot path for `seed = file`              |
//! | `max_iters`        | `5000`         | optimizer iteration cap                      |
//! | `grad_tol`         | `1e-8`         | stop when the gradient norm drops below      |
//! | `initial_step`     | `h^4`          | first trial step                             |
//! | `armijo_c`         | `1e-4`         | sufficient-decrease constant                 |
//! | `armijo_shrink`    | `0.5`          | backtracking factor                          |
//! | `checkpoint_every` | `100`          | snapshot and period interval                 |
//! | `rng_seed`         | `0`            | seed recorded with the run                   |
//! | `battery_size`     | `32`           | weak-residual test fields                    |
//! | `battery_seed`     | built in       | weak-residual battery seed                   |
//! | `out`              | `out`          | output directory                             |

use std::path::{Path, PathBuf};

use crate::acs::{rotation_perturbation, standard_structure, CompatibleJField};
use crate::energy::{DEFAULT_BATTERY_SEED, DEFAULT_BATTERY_SIZE};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::Mat4;
use crate::metric::MetricField;
use crate::minimize::OptimizerConfig;
use crate::snapshot::Snapshot;
use crate::topology::sphere_map_seed;

#[derive(Clone, Debug, PartialEq)]
pub enum MetricSpec {
    Flat,
    Constant(Mat4),
}

#[derive(Clone, Debug, PartialEq)]
pub enum SeedSpec {
    Constant,
    Perturbation { epsilon: f64, mode: f64, plane: (usize, usize) },
    SphereMap { degrees: [i32; 6] },
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub metric: MetricSpec,
    pub seed: SeedSpec,
    pub optimizer: OptimizerConfig,
    pub battery_size: usize,
    pub battery_seed: u64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 16,
            metric: MetricSpec::Flat,
            seed: SeedSpec::Perturbation { epsilon: 0.1, mode: 1.0, plane: (0, 2) },
            optimizer: OptimizerConfig::default(),
            battery_size: DEFAULT_BATTERY_SIZE,
            battery_seed: DEFAULT_BATTERY_SEED,
            out: PathBuf::from("out"),
        }
    }
}

const KEYS: &[&str] = &[
    "n",
    "metric",
    "seed",
    "epsilon",
    "mode",
    "plane",
    "degrees",
    "seed_file",
    "max_iters",
    "grad_tol",
    "initial_step",
    "armijo_c",
    "armijo_shrink",
    "checkpoint_every",
    "rng_seed",
    "battery_size",
    "battery_seed",
    "out",
];

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config {
        line,
        key: key.to_string(),
        message: format!("cannot parse {value:?}"),
    })
}

fn parse_list<T: std::str::FromStr>(line: usize, key: &str, value: &str, len: usize) -> Result<Vec<T>> {
    let items = value
        .split(',')
        .map(|v| parse_value(line, key, v.trim()))
        .collect::<Result<Vec<T>>>()?;
    if items.len() != len {
        return Err(Error::Config {
            line,
            key: key.to_string(),
            message: format!("expected {len} comma-separated values, found {}", items.len()),
        });
    }
    Ok(items)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen: Vec<(&str, usize)> = Vec::new();
        let (mut epsilon, mut mode, mut plane) = (0.1, 1.0, (0usize, 2usize));
        let mut degrees = [1, 0, 0, 0, 0, 0];
        let mut seed_kind = ("perturbation".to_string(), 0usize);
        let mut seed_file: Option<PathBuf> = None;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let body = raw.trim();
            if body.is_empty() || body.starts_with('#') {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| Error::Config {
                line,
                key: body.to_string(),
                message: "expected key = value".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let Some(&known) = KEYS.iter().find(|&&k| k == key) else {
                return Err(Error::Config { line, key: key.to_string(), message: "unknown key".into() });
            };
            if let Some((_, first)) = seen.iter().find(|(k, _)| *k == known) {
                return Err(Error::Config {
                    line,
                    key: key.to_string(),
                    message: format!("repeated key (first set on line {first})"),
                });
            }
            seen.push((known, line));
            match known {
                "n" => cfg.n = parse_value(line, key, value)?,
                "metric" => {
                    cfg.metric = if value == "flat" {
                        MetricSpec::Flat
                    } else if let Some(rest) = value.strip_prefix("constant:") {
                        let v: Vec<f64> = parse_list(line, key, rest, 16)?;
                        MetricSpec::Constant(Mat4::from_row_slice(&v))
                    } else {
                        return Err(Error::Config {
                            line,
                            key: key.into(),
                            message: format!("unknown metric {value:?}; use flat or constant:..."),
                        });
                    }
                }
                "seed" => seed_kind = (value.to_string(), line),
                "epsilon" => epsilon = parse_value(line, key, value)?,
                "mode" => mode = parse_value(line, key, value)?,
                "plane" => {
                    let p: Vec<usize> = parse_list(line, key, value, 2)?;
                    plane = (p[0], p[1]);
                }
                "degrees" => {
                    let d: Vec<i32> = parse_list(line, key, value, 6)?;
                    degrees.copy_from_slice(&d);
                }
                "seed_file" => seed_file = Some(PathBuf::from(value)),
                "max_iters" => cfg.optimizer.max_iters = parse_value(line, key, value)?,
                "grad_tol" => cfg.optimizer.grad_tol = parse_value(line, key, value)?,
                "initial_step" => cfg.optimizer.initial_step = Some(parse_value(line, key, value)?),
                "armijo_c" => cfg.optimizer.armijo_c = parse_value(line, key, value)?,
                "armijo_shrink" => cfg.optimizer.armijo_shrink = parse_value(line, key, value)?,
                "checkpoint_every" => cfg.optimizer.checkpoint_every = parse_value(line, key, value)?,
                "rng_seed" => cfg.optimizer.seed = parse_value(line, key, value)?,
                "battery_size" => cfg.battery_size = parse_value(line, key, value)?,
                "battery_seed" => cfg.battery_seed = parse_value(line, key, value)?,
                "out" => cfg.out = PathBuf::from(value),
                _ => unreachable!("key list and match arms agree"),
            }
        }
        let (kind, line) = seed_kind;
        cfg.seed = match kind.as_str() {
            "constant" => SeedSpec::Constant,
            "perturbation" => SeedSpec::Perturbation { epsilon, mode, plane },
            "sphere_map" => SeedSpec::SphereMap { degrees },
            "file" => SeedSpec::File(seed_file.ok_or_else(|| Error::Config {
                line,
                key: "seed_file".into(),
                message: "seed = file needs seed_file".into(),
            })?),
            other => {
                return Err(Error::Config { line, key: "seed".into(), message: format!("unknown seed {other:?}") })
            }
        };
        if cfg.n < 8 {
            return Err(Error::Config { line: 0, key: "n".into(), message: format!("n = {} must be at least 8", cfg.n) });
        }
        if cfg.battery_size == 0 {
            return Err(Error::Config { line: 0, key: "battery_size".into(), message: "must be positive".into() });
        }
        cfg.optimizer.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn metric_field(&self) -> Result<MetricField> {
        let grid = Grid::new(self.n)?;
        match &self.metric {
            MetricSpec::Flat => Ok(MetricField::flat(grid)),
            MetricSpec::Constant(g) => MetricField::constant(grid, *g),
        }
    }

    /// Builds the seed structure and its metric.
    pub fn build_seed(&self) -> Result<(CompatibleJField, MetricField)> {
        if let SeedSpec::File(path) = &self.seed {
            let snap = Snapshot::read(path)?;
            if snap.grid().n() != self.n {
                return Err(Error::GridMismatch { expected: self.n, found: snap.grid().n() });
            }
            return snap.structure();
        }
        let metric = self.metric_field()?;
        let j = match &self.seed {
            SeedSpec::Constant => standard_structure(&metric)?,
            SeedSpec::Perturbation { epsilon, mode, plane } => {
                rotation_perturbation(&metric, *epsilon, *mode, *plane)?
            }
            SeedSpec::SphereMap { degrees } => sphere_map_seed(degrees, &metric)?,
            SeedSpec::File(_) => unreachable!("handled above"),
        };
        Ok((j, metric))
    }
}
