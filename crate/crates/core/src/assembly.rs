//! Dense discretization of `(-Δ)^s_{B₁}` acting on piecewise-linear radial
//! profiles.
//!
//! Each row starts from a collocation rule at node `r_i`:
//!
//! ```text
//! (A_col u)_i = c_{N,s} ∫_0^1 (u_i - Π_i u(ρ)) ρ^{N-1} J(r_i, ρ) dρ
//! ```
//!
//! where `Π_i u` is the linear interpolant away from `r_i` and, on the two
//! cells touching `r_i`, the blend `u_i + (u_{i±1} - u_i)(δ/h_±)²` in the
//! distance `δ = |ρ - r_i|`. The blend keeps every weight nonnegative and
//! removes the kink of the interpolant at `r_i`, so the integrand is
//! `O(δ^{1-2s})` and no principal-value cutoff is needed even at `s = 1/2`.
//! Near the diagonal the ρ-integral uses dyadic levels in `δ`, mirrored on
//! both sides, plus the analytic leading term below the innermost level.
//!
//! The collocation weights are then symmetrized against the hat masses
//! `m_i`: `K_ij = -(m_i w_ij + m_j w_ji) / 2`, `K_ii = -Σ_{j≠i} K_ij`, and the
//! stored operator is `A = diag(m)^{-1} K`. Consequences that the solvers
//! rely on: rows of `A` sum to zero, off-diagonals are nonpositive,
//! `Σ_i m_i (A u)_i = 0` for every `u` (discrete conservation), and
//! `(A + I) u = F` is the Euler–Lagrange equation of the discrete energy
//! `½ uᵀ K u + ½ Σ m_i u_i² - Σ m_i F_i u_i`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{FracError, Result};
use crate::grid::{RadialGrid, RadialProfile};
use crate::kernel::{dyda_constant, AngularQuadrature, FracOrder, KernelEvaluator};
use crate::quadrature::{geometric_edges, GaussRule};

/// Nodes with `r ≤ INTERIOR_LIMIT` are the ones where pointwise accuracy is checked.
pub const INTERIOR_LIMIT: f64 = 0.9;

/// Radial quadrature used by the assembly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Gauss nodes on each cell not touching the collocation node.
    pub panel_nodes: usize,
    /// Gauss nodes on each dyadic level next to the collocation node.
    pub near_nodes: usize,
    /// Number of dyadic levels in the distance to the collocation node.
    pub near_levels: usize,
    /// Width ratio between consecutive levels.
    pub level_ratio: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            panel_nodes: 8,
            near_nodes: 8,
            near_levels: 20,
            level_ratio: 0.5,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.panel_nodes < 4 || self.near_nodes < 4 {
            return Err(FracError::Config(format!(
                "quadrature needs at least 4 nodes per panel, got {} / {}",
                self.panel_nodes, self.near_nodes
            )));
        }
        if self.near_levels == 0 {
            return Err(FracError::Config("need at least one near-diagonal level".into()));
        }
        if !(self.level_ratio > 0.0 && self.level_ratio < 1.0) {
            return Err(FracError::Config(format!(
                "level ratio {} must lie in (0, 1)",
                self.level_ratio
            )));
        }
        Ok(())
    }
}

/// Everything about how an operator was integrated; part of the cache key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureMeta {
    pub radial: QuadratureSpec,
    pub angular: AngularQuadrature,
    pub near_diag_delta: f64,
    pub tail_cutoff: f64,
}

impl QuadratureMeta {
    fn new(quad: &QuadratureSpec, kernel: &KernelEvaluator) -> Self {
        QuadratureMeta {
            radial: *quad,
            angular: kernel.angular_quadrature(),
            near_diag_delta: kernel.near_diag_delta(),
            tail_cutoff: kernel.tail_cutoff(),
        }
    }

    /// Hex SHA-256 of the canonical descriptor text, truncated to 16 digits.
    pub fn hash(&self) -> String {
        let text = format!(
            "radial:{}:{}:{}:{:?};angular:{}:{:?};delta:{:?};tail:{:?}",
            self.radial.panel_nodes,
            self.radial.near_nodes,
            self.radial.near_levels,
            self.radial.level_ratio,
            self.angular.nodes_per_panel,
            self.angular.panel_growth,
            self.near_diag_delta,
            self.tail_cutoff
        );
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Dense `(M+1) × (M+1)` operator table, row-major.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    grid: Arc<RadialGrid>,
    order: FracOrder,
    entries: Vec<f64>,
    meta: QuadratureMeta,
}

impl OperatorMatrix {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn order(&self) -> FracOrder {
        self.order
    }

    pub fn quadrature_meta(&self) -> &QuadratureMeta {
        &self.meta
    }

    pub fn size(&self) -> usize {
        self.grid.node_count()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.size();
        &self.entries[i * n..(i + 1) * n]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// `A u` in difference form `Σ_{j≠i} A_ij (u_j - u_i)`, so constants map
    /// to exactly zero.
    pub fn apply_values(&self, u: &[f64]) -> Vec<f64> {
        (0..self.size())
            .map(|i| {
                let ui = u[i];
                self.row(i)
                    .iter()
                    .zip(u)
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, (a, uj))| a * (uj - ui))
                    .sum()
            })
            .collect()
    }

    /// Largest `|Σ_j A_ij|` over rows.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.size())
            .map(|i| self.row(i).iter().sum::<f64>().abs())
            .fold(0.0, f64::max)
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..self.size()).map(|i| self.entry(i, i)).fold(0.0, f64::max)
    }

    /// Largest off-diagonal entry; nonpositive for a Z-matrix.
    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.size();
        let mut best = f64::NEG_INFINITY;
        for i in 0..n {
            for (j, &a) in self.row(i).iter().enumerate() {
                if i != j {
                    best = best.max(a);
                }
            }
        }
        best
    }

    pub fn min_diagonal(&self) -> f64 {
        (0..self.size())
            .map(|i| self.entry(i, i))
            .fold(f64::INFINITY, f64::min)
    }

    /// Symmetric stiffness `K = diag(m) A`, symmetrized entrywise to remove
    /// rounding asymmetry.
    pub fn stiffness(&self) -> Vec<f64> {
        let n = self.size();
        let m = self.grid.masses();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                k[i * n + j] = 0.5 * (m[i] * self.entry(i, j) + m[j] * self.entry(j, i));
            }
        }
        k
    }
}

/// Assemble the operator for `s ≤ 1/2`.
pub fn assemble_operator(
    grid: Arc<RadialGrid>,
    kernel: &KernelEvaluator,
    quad: &QuadratureSpec,
) -> Result<OperatorMatrix> {
    kernel.order().require_solver_regime(false)?;
    assemble_operator_unrestricted(grid, kernel, quad)
}

/// Assemble without the `s ≤ 1/2` restriction (any `s < 1` integrates;
/// constants are then no longer admissible, see the README).
pub fn assemble_operator_unrestricted(
    grid: Arc<RadialGrid>,
    kernel: &KernelEvaluator,
    quad: &QuadratureSpec,
) -> Result<OperatorMatrix> {
    quad.validate()?;
    let order = kernel.order();
    if grid.dim() != order.dim() {
        return Err(FracError::Usage(format!(
            "grid dimension {} differs from operator dimension {}",
            grid.dim(),
            order.dim()
        )));
    }
    let n = grid.node_count();
    let far_rule = GaussRule::new(quad.panel_nodes);
    let near_rule = GaussRule::new(quad.near_nodes);
    let c = kernel.normalization();

    let mut weights = vec![0.0; n * n];
    for i in 0..n {
        let row = collocation_row(&grid, i, kernel, quad, &far_rule, &near_rule);
        weights[i * n..(i + 1) * n].copy_from_slice(&row);
    }

    let m = grid.masses();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            let k = 0.5 * c * (m[i] * weights[i * n + j] + m[j] * weights[j * n + i]);
            let a = -k / m[i];
            entries[i * n + j] = a;
            diag -= a;
        }
        entries[i * n + i] = diag;
    }

    Ok(OperatorMatrix {
        meta: QuadratureMeta::new(quad, kernel),
        grid,
        order,
        entries,
    })
}

/// Collocation weights `∫ ω_j(ρ) ρ^{N-1} J(r_i, ρ) dρ` for `j ≠ i`, without `c_{N,s}`.
fn collocation_row(
    grid: &RadialGrid,
    i: usize,
    kernel: &KernelEvaluator,
    quad: &QuadratureSpec,
    far_rule: &GaussRule,
    near_rule: &GaussRule,
) -> Vec<f64> {
    let nodes = grid.nodes();
    let n = nodes.len();
    let last = n - 1;
    let r = nodes[i];
    let power = grid.dim() as i32 - 1;
    let density = |rho: f64| rho.powi(power) * kernel.angular_kernel_unchecked(r, rho);
    let mut row = vec![0.0; n];

    for j in 0..last {
        if j == i || j + 1 == i {
            continue;
        }
        let (a, b) = (nodes[j], nodes[j + 1]);
        let h = b - a;
        for (rho, wt) in far_rule.mapped(a, b) {
            let v = wt * density(rho);
            row[j] += v * (b - rho) / h;
            row[j + 1] += v * (rho - a) / h;
        }
    }

    let h_left = (i > 0).then(|| r - nodes[i - 1]);
    let h_right = (i < last).then(|| nodes[i + 1] - r);
    let h_min = match (h_left, h_right) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => unreachable!("grids have at least two nodes"),
    };

    // mirrored dyadic levels δ ∈ [q^{k+1} h_min, q^k h_min]
    let mut hi = h_min;
    for _ in 0..quad.near_levels {
        let lo = hi * quad.level_ratio;
        for (d, wt) in near_rule.mapped(lo, hi) {
            if let Some(h) = h_right {
                let t = d / h;
                row[i + 1] += wt * density(r + d) * t * t;
            }
            if let Some(h) = h_left {
                let t = d / h;
                row[i - 1] += wt * density(r - d) * t * t;
            }
        }
        hi = lo;
    }

    // below the innermost level: leading singular term, integrated exactly
    let two_s = 2.0 * kernel.order().s();
    let coeff = if r == 0.0 {
        kernel.sphere_area()
    } else {
        kernel.diagonal_coefficient()
    };
    let inner = coeff * hi.powf(2.0 - two_s) / (2.0 - two_s);
    if let Some(h) = h_right {
        row[i + 1] += inner / (h * h);
    }
    if let Some(h) = h_left {
        row[i - 1] += inner / (h * h);
    }

    // unmirrored remainder of the longer neighbouring cell
    for (side, h) in [(1.0, h_right), (-1.0, h_left)] {
        let Some(h) = h else { continue };
        if h <= h_min {
            continue;
        }
        let edges = geometric_edges(h_min, h, 2.0);
        let neighbour = if side > 0.0 { i + 1 } else { i - 1 };
        for w in edges.windows(2).skip(1) {
            for (d, wt) in near_rule.mapped(w[0], w[1]) {
                let t = d / h;
                row[neighbour] += wt * density(r + side * d) * t * t;
            }
        }
    }

    row
}

/// `A u` as a profile on the operator's grid.
pub fn apply_operator(op: &OperatorMatrix, u: &RadialProfile) -> Result<RadialProfile> {
    u.ensure_grid(op.grid())?;
    RadialProfile::new(op.grid().clone(), op.apply_values(u.values()))
}

/// Full-space values `(-Δ)^s ũ(r_i)` against which the extension identity is tested.
#[derive(Debug, Clone)]
pub enum FullSpaceReference {
    /// The constant `B(N,s)` valid for `u = (1 - r²)^s`.
    Dyda,
    /// Caller-supplied nodal values.
    Values(Vec<f64>),
}

/// `(1 - r²)^s` sampled on the grid.
pub fn dyda_profile(grid: Arc<RadialGrid>, s: f64) -> RadialProfile {
    RadialProfile::from_fn(grid, |r| (1.0 - r * r).max(0.0).powf(s))
}

/// Per-node residuals of `(A u)_i + c_{N,s} φ(r_i) u_i - L_i` at nodes
/// `r_i ≤ 0.9`, returned as `(r_i, residual_i)`.
pub fn extension_identity_profile(
    op: &OperatorMatrix,
    kernel: &KernelEvaluator,
    u: &RadialProfile,
    reference: &FullSpaceReference,
) -> Result<Vec<(f64, f64)>> {
    u.ensure_grid(op.grid())?;
    if kernel.order() != op.order() {
        return Err(FracError::Usage("kernel and operator orders differ".into()));
    }
    let scale = u.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if u.boundary_value().abs() > 1e-14 * scale.max(1.0) {
        return Err(FracError::Precondition(format!(
            "profile must vanish at r = 1 for the zero extension, got {}",
            u.boundary_value()
        )));
    }
    if let FullSpaceReference::Values(v) = reference {
        if v.len() != op.size() {
            return Err(FracError::Usage("reference length differs from grid".into()));
        }
    }
    let au = op.apply_values(u.values());
    let b = dyda_constant(op.order());
    let mut out = Vec::new();
    for (i, &r) in op.grid().nodes().iter().enumerate() {
        if r > INTERIOR_LIMIT {
            break;
        }
        let target = match reference {
            FullSpaceReference::Dyda => b,
            FullSpaceReference::Values(v) => v[i],
        };
        let lhs = au[i] + kernel.killing_potential(r)? * u.values()[i];
        out.push((r, lhs - target));
    }
    Ok(out)
}

/// Max-norm of [`extension_identity_profile`].
pub fn extension_identity_residual(
    op: &OperatorMatrix,
    kernel: &KernelEvaluator,
    u: &RadialProfile,
    reference: &FullSpaceReference,
) -> Result<f64> {
    Ok(extension_identity_profile(op, kernel, u, reference)?
        .iter()
        .fold(0.0, |acc, &(_, e)| acc.max(e.abs())))
}

const CACHE_MAGIC: &str = "fraclap-operator-cache v1";

/// On-disk store of assembled operators: a text header with the key fields
/// followed by the row-major entries as little-endian `f64`.
#[derive(Debug, Clone)]
pub struct OperatorCache {
    dir: PathBuf,
}

impl OperatorCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        OperatorCache { dir: dir.into() }
    }

    fn header(order: FracOrder, grid: &RadialGrid, meta: &QuadratureMeta) -> String {
        format!(
            "{CACHE_MAGIC}\ndim {}\ns {:?}\nintervals {}\nbeta {:?}\nquadrature {}\nend\n",
            order.dim(),
            order.s(),
            grid.intervals(),
            grid.beta(),
            meta.hash()
        )
    }

    pub fn path_for(&self, order: FracOrder, grid: &RadialGrid, meta: &QuadratureMeta) -> PathBuf {
        self.dir.join(format!(
            "op_n{}_s{:?}_m{}_b{:?}_{}.bin",
            order.dim(),
            order.s(),
            grid.intervals(),
            grid.beta(),
            meta.hash()
        ))
    }

    pub fn store(&self, op: &OperatorMatrix) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.dir)?;
        let path = self.path_for(op.order, &op.grid, &op.meta);
        let tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        {
            let mut w = BufWriter::new(tmp.as_file());
            w.write_all(Self::header(op.order, &op.grid, &op.meta).as_bytes())?;
            for v in &op.entries {
                w.write_all(&v.to_le_bytes())?;
            }
            w.flush()?;
        }
        tmp.persist(&path).map_err(|e| FracError::Io(e.error))?;
        Ok(path)
    }

    /// Read a stored operator; `None` when no file exists for the key.
    pub fn load(
        &self,
        grid: Arc<RadialGrid>,
        kernel: &KernelEvaluator,
        quad: &QuadratureSpec,
    ) -> Result<Option<OperatorMatrix>> {
        let order = kernel.order();
        let meta = QuadratureMeta::new(quad, kernel);
        let path = self.path_for(order, &grid, &meta);
        if !path.exists() {
            return Ok(None);
        }
        read_cache_file(&path, grid, order, meta).map(Some)
    }

    pub fn load_or_assemble(
        &self,
        grid: Arc<RadialGrid>,
        kernel: &KernelEvaluator,
        quad: &QuadratureSpec,
    ) -> Result<OperatorMatrix> {
        if let Some(op) = self.load(grid.clone(), kernel, quad)? {
            return Ok(op);
        }
        let op = assemble_operator(grid, kernel, quad)?;
        self.store(&op)?;
        Ok(op)
    }
}

fn read_cache_file(
    path: &Path,
    grid: Arc<RadialGrid>,
    order: FracOrder,
    meta: QuadratureMeta,
) -> Result<OperatorMatrix> {
    let expected = OperatorCache::header(order, &grid, &meta);
    let mut reader = BufReader::new(File::open(path)?);
    let mut header = String::new();
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Err(FracError::Cache(format!("{}: truncated header", path.display())));
        }
        header.push_str(&line);
        if line == "end\n" {
            break;
        }
    }
    if header != expected {
        return Err(FracError::Cache(format!(
            "{}: header does not match the requested operator",
            path.display()
        )));
    }
    let n = grid.node_count();
    let mut bytes = Vec::with_capacity(n * n * 8);
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != n * n * 8 {
        return Err(FracError::Cache(format!(
            "{}: expected {} entries, found {} bytes",
            path.display(),
            n * n,
            bytes.len()
        )));
    }
    let entries = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(OperatorMatrix {
        grid,
        order,
        entries,
        meta,
    })
}
