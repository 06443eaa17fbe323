//! Graded radial grids on [0, 1] and piecewise-linear radial profiles.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};
use crate::quadrature::GaussRule;
use crate::special::sphere_area;

pub const MIN_INTERVALS: usize = 8;
pub const MAX_INTERVALS: usize = 4096;

/// Nodes `r_i = 1 - ((M - i)/M)^β`, `i = 0..=M`.
pub fn graded_nodes(intervals: usize, beta: f64) -> Vec<f64> {
    let m = intervals as f64;
    (0..=intervals)
        .map(|i| {
            if i == intervals {
                1.0
            } else {
                1.0 - ((intervals - i) as f64 / m).powf(beta)
            }
        })
        .collect()
}

/// Radii `0 = r_0 < r_1 < ... < r_M = 1` of a radial discretization of B₁,
/// together with the ball measure carried by each nodal hat function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    dim: usize,
    beta: f64,
    nodes: Vec<f64>,
    masses: Vec<f64>,
}

impl RadialGrid {
    /// Graded grid with `intervals = M` cells, clustered toward r = 1 for β > 1.
    pub fn graded(intervals: usize, beta: f64, dim: usize) -> Result<Self> {
        if intervals < MIN_INTERVALS {
            return Err(FracError::Config(format!(
                "grid needs M >= {MIN_INTERVALS} intervals, got {intervals}"
            )));
        }
        if intervals > MAX_INTERVALS {
            return Err(FracError::Config(format!(
                "dense storage limits M to {MAX_INTERVALS}, got {intervals}"
            )));
        }
        if !(beta >= 1.0) || !beta.is_finite() {
            return Err(FracError::Config(format!(
                "grading exponent beta = {beta} must be >= 1"
            )));
        }
        let mut grid = Self::from_nodes(graded_nodes(intervals, beta), dim)?;
        grid.beta = beta;
        Ok(grid)
    }

    /// Grid from explicit radii. Endpoints must be exactly 0 and 1 and the
    /// sequence strictly increasing.
    pub fn from_nodes(nodes: Vec<f64>, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(FracError::Config(format!("dimension {dim} must be >= 2")));
        }
        if nodes.len() < 2 || nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
            return Err(FracError::Config(
                "radial grid must start at 0 and end at 1".into(),
            ));
        }
        if let Some(w) = nodes.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(FracError::Config(format!(
                "grid nodes must be strictly increasing (found {} then {})",
                w[0], w[1]
            )));
        }
        let masses = hat_masses(&nodes, dim);
        Ok(RadialGrid {
            dim,
            beta: f64::NAN,
            nodes,
            masses,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Grading exponent; NaN for grids built from explicit nodes.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Ball measure `|S^{N-1}| ∫ ψ_i(r) r^{N-1} dr` of each nodal hat `ψ_i`.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of cells `M`.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn last(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Cell containing `r`, as the index of its left node.
    pub fn locate(&self, r: f64) -> usize {
        let k = self.nodes.partition_point(|&x| x <= r);
        k.saturating_sub(1).min(self.nodes.len() - 2)
    }
}

fn hat_masses(nodes: &[f64], dim: usize) -> Vec<f64> {
    // r^{N-1} times a linear weight has degree N; this rule is exact for it.
    let rule = GaussRule::new(dim / 2 + 2);
    let area = sphere_area(dim);
    let mut masses = vec![0.0; nodes.len()];
    for (k, w) in nodes.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let h = b - a;
        for (r, wt) in rule.mapped(a, b) {
            let jac = wt * r.powi(dim as i32 - 1) * area;
            masses[k] += jac * (b - r) / h;
            masses[k + 1] += jac * (r - a) / h;
        }
    }
    masses
}

/// Nodal values on a grid, read as the piecewise-linear interpolant.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(FracError::Usage(format!(
                "profile has {} values but the grid has {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        Ok(RadialProfile { grid, values })
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        RadialProfile { grid, values }
    }

    pub fn constant(grid: Arc<RadialGrid>, c: f64) -> Self {
        let n = grid.node_count();
        RadialProfile {
            grid,
            values: vec![c; n],
        }
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same grid object or an equal one.
    pub fn same_grid(&self, grid: &RadialGrid) -> bool {
        std::ptr::eq(self.grid.as_ref(), grid) || self.grid.as_ref() == grid
    }

    pub fn ensure_grid(&self, grid: &RadialGrid) -> Result<()> {
        if self.same_grid(grid) {
            Ok(())
        } else {
            Err(FracError::Usage("profile lives on a different grid".into()))
        }
    }

    /// Linear interpolation; `r` is clamped to [0, 1].
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.clamp(0.0, 1.0);
        let nodes = self.grid.nodes();
        let k = self.grid.locate(r);
        let t = (r - nodes[k]) / (nodes[k + 1] - nodes[k]);
        (1.0 - t) * self.values[k] + t * self.values[k + 1]
    }

    /// `∫_{B₁} u dx` of the interpolant, exact up to rounding.
    pub fn ball_integral(&self) -> f64 {
        self.grid
            .masses()
            .iter()
            .zip(&self.values)
            .map(|(m, v)| m * v)
            .sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Value at the boundary node r = 1.
    pub fn boundary_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        RadialProfile {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn sup_distance(&self, other: &RadialProfile) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
