//! Run configuration: defaults, JSON config files and source descriptors.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};
use crate::grid::{RadialGrid, RadialProfile};
use crate::kernel::FracOrder;

use super::rng::DEFAULT_SEED;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Phi,
    Poisson,
    Semilinear,
    Verify,
    Convergence,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

/// Everything a run depends on. Field names double as the keys of the JSON
/// config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub s: f64,
    pub dim: usize,
    pub nodes: usize,
    pub beta: f64,
    pub source: String,
    pub h1: String,
    pub h2: String,
    pub p: f64,
    pub r0: Vec<f64>,
    pub eps: Vec<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub allow_large_s: bool,
    pub allow_zero_h1: bool,
    pub cache_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            s: 0.25,
            dim: 2,
            nodes: 256,
            beta: 2.0,
            source: "two-minus-r-squared".into(),
            h1: "constant:1".into(),
            h2: "constant:1".into(),
            p: 2.0,
            r0: Vec::new(),
            eps: vec![0.1],
            seed: DEFAULT_SEED,
            out: None,
            format: Format::Json,
            allow_large_s: false,
            allow_zero_h1: false,
            cache_dir: None,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FracError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| FracError::Config(format!("{}: {e}", path.display())))
    }

    pub fn command(&self) -> Result<Command> {
        self.command
            .ok_or_else(|| FracError::Config("no command given".into()))
    }

    pub fn order(&self) -> Result<FracOrder> {
        let order = FracOrder::new(self.s, self.dim)
            .map_err(|e| FracError::Config(e.to_string()))?;
        order
            .require_solver_regime(self.allow_large_s)
            .map_err(|e| FracError::Config(e.to_string()))?;
        Ok(order)
    }

    pub fn grid(&self) -> Result<Arc<RadialGrid>> {
        Ok(Arc::new(RadialGrid::graded(self.nodes, self.beta, self.dim)?))
    }

    pub fn validate(&self) -> Result<()> {
        self.command()?;
        self.order()?;
        self.grid()?;
        if self.r0.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            return Err(FracError::Config("every r0 must lie in (0, 1]".into()));
        }
        if self.eps.iter().any(|&e| !(e >= 0.0) || !e.is_finite()) {
            return Err(FracError::Config("every eps must be finite and >= 0".into()));
        }
        if !(self.p > 1.0) || !self.p.is_finite() {
            return Err(FracError::Config(format!("p = {} must exceed 1", self.p)));
        }
        for d in [&self.source, &self.h1, &self.h2] {
            SourceDescriptor::parse(d)?;
        }
        Ok(())
    }
}

/// Closed-form radial data or a CSV table.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceDescriptor {
    Constant(f64),
    TwoMinusRSquared,
    /// `a exp(-b r²)`.
    Gaussian { a: f64, b: f64 },
    Csv(PathBuf),
}

impl SourceDescriptor {
    /// `constant:c`, `two-minus-r-squared`, `gaussian:a,b`, `csv:path`, or a
    /// bare path ending in `.csv`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || FracError::Config(format!("unrecognized source descriptor '{text}'"));
        let number = |t: &str| t.trim().parse::<f64>().ok().filter(|v| v.is_finite());
        if text == "two-minus-r-squared" {
            return Ok(SourceDescriptor::TwoMinusRSquared);
        }
        if let Some(rest) = text.strip_prefix("constant:") {
            return number(rest).map(SourceDescriptor::Constant).ok_or_else(bad);
        }
        if let Some(rest) = text.strip_prefix("gaussian:") {
            let (a, b) = rest.split_once(',').ok_or_else(bad)?;
            return match (number(a), number(b)) {
                (Some(a), Some(b)) => Ok(SourceDescriptor::Gaussian { a, b }),
                _ => Err(bad()),
            };
        }
        if let Some(rest) = text.strip_prefix("csv:") {
            return Ok(SourceDescriptor::Csv(rest.into()));
        }
        if text.ends_with(".csv") {
            return Ok(SourceDescriptor::Csv(text.into()));
        }
        Err(bad())
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, SourceDescriptor::Constant(_))
    }

    pub fn sample(&self, grid: Arc<RadialGrid>) -> Result<RadialProfile> {
        match self {
            SourceDescriptor::Constant(c) => Ok(RadialProfile::constant(grid, *c)),
            SourceDescriptor::TwoMinusRSquared => {
                Ok(RadialProfile::from_fn(grid, |r| 2.0 - r * r))
            }
            SourceDescriptor::Gaussian { a, b } => {
                let (a, b) = (*a, *b);
                Ok(RadialProfile::from_fn(grid, move |r| a * (-b * r * r).exp()))
            }
            SourceDescriptor::Csv(path) => {
                let (r, v) = read_profile_csv(path)?;
                Ok(RadialProfile::from_fn(grid, |x| interpolate(&r, &v, x)))
            }
        }
    }
}

/// Two-column CSV `r,value` with a header row; radii strictly increasing
/// from 0 to 1.
pub fn read_profile_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| FracError::Config(format!("{}: {e}", path.display())))?;
    let mut r = Vec::new();
    let mut v = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split(',').map(|c| c.trim().parse::<f64>());
        match (cols.next(), cols.next()) {
            (Some(Ok(a)), Some(Ok(b))) if a.is_finite() && b.is_finite() => {
                r.push(a);
                v.push(b);
            }
            _ => {
                return Err(FracError::Config(format!(
                    "{}: line {} is not 'r,value'",
                    path.display(),
                    n + 1
                )))
            }
        }
    }
    if r.len() < 2 || r[0] != 0.0 || *r.last().unwrap() != 1.0 {
        return Err(FracError::Config(format!(
            "{}: radii must run from 0 to 1",
            path.display()
        )));
    }
    if r.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(FracError::Config(format!(
            "{}: radii must be strictly increasing",
            path.display()
        )));
    }
    Ok((r, v))
}

fn interpolate(r: &[f64], v: &[f64], x: f64) -> f64 {
    let k = r.partition_point(|&t| t <= x).clamp(1, r.len() - 1);
    let t = (x - r[k - 1]) / (r[k] - r[k - 1]);
    (1.0 - t) * v[k - 1] + t * v[k]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptors() {
        assert_eq!(
            SourceDescriptor::parse("constant:3").unwrap(),
            SourceDescriptor::Constant(3.0)
        );
        assert_eq!(
            SourceDescriptor::parse("gaussian:2,0.5").unwrap(),
            SourceDescriptor::Gaussian { a: 2.0, b: 0.5 }
        );
        assert_eq!(
            SourceDescriptor::parse("two-minus-r-squared").unwrap(),
            SourceDescriptor::TwoMinusRSquared
        );
        assert!(matches!(
            SourceDescriptor::parse("data/f.csv").unwrap(),
            SourceDescriptor::Csv(_)
        ));
        for bad in ["constant:", "constant:x", "gaussian:1", "sin", "constant:inf"] {
            assert!(SourceDescriptor::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn csv_source_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        std::fs::write(&path, "r,F\n0,2\n0.5,1.5\n1,1\n").unwrap();
        let grid = Arc::new(RadialGrid::graded(8, 1.0, 2).unwrap());
        let f = SourceDescriptor::Csv(path.clone()).sample(grid).unwrap();
        for (&r, &v) in f.grid().nodes().iter().zip(f.values()) {
            assert!((v - (2.0 - r)).abs() < 1e-15);
        }
        std::fs::write(&path, "r,F\n0.1,2\n1,1\n").unwrap();
        assert!(read_profile_csv(&path).is_err());
    }

    #[test]
    fn config_file_fields() {
        let c: RunConfig =
            serde_json::from_str(r#"{"command": "verify", "s": 0.5, "r0": [0.5, 0.9]}"#).unwrap();
        assert_eq!(c.command, Some(Command::Verify));
        assert_eq!(c.s, 0.5);
        assert_eq!(c.seed, 42);
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig {
            command: Some(Command::Poisson),
            ..RunConfig::default()
        };
        assert!(c.validate().is_ok());
        c.s = 0.75;
        assert!(matches!(c.validate(), Err(FracError::Config(_))));
        c.allow_large_s = true;
        assert!(c.validate().is_ok());
        c.command = None;
        assert!(c.validate().is_err());
    }
}
