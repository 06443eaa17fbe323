//! Scalar kernels of the regional fractional Laplacian on the unit ball.
//!
//! For radial functions the operator reduces to a one-dimensional integral
//! against the angular kernel
//!
//! ```text
//! J(r, ρ) = |S^{N-2}| ∫_0^π sin^{N-2}θ (r² + ρ² - 2rρ cos θ)^{-(N+2s)/2} dθ,
//! ```
//!
//! so that `(-Δ)^s_{B₁} u(r) = c_{N,s} p.v. ∫_0^1 (u(r) - u(ρ)) ρ^{N-1} J(r, ρ) dρ`.
//! The killing potential of the ball is `φ(r) = ∫_1^∞ ρ^{N-1} J(r, ρ) dρ`
//! (without the `c_{N,s}` factor), and `φ(r)(1 - r)^{2s}` tends to the
//! boundary constant `c₁` as `r → 1`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};
use crate::quadrature::{geometric_edges, GaussRule};
use crate::special::{gamma, sphere_area};

/// Fractional order `s ∈ (0, 1)` together with the space dimension `N ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracOrder {
    s: f64,
    dim: usize,
}

impl FracOrder {
    pub fn new(s: f64, dim: usize) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(FracError::Domain(format!(
                "fractional order s = {s} must lie in (0, 1)"
            )));
        }
        if dim < 2 {
            return Err(FracError::Domain(format!(
                "dimension N = {dim} must be at least 2"
            )));
        }
        Ok(FracOrder { s, dim })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Exponent `(N + 2s) / 2` of the squared distance in the kernel.
    pub fn kernel_exponent(&self) -> f64 {
        0.5 * (self.dim as f64 + 2.0 * self.s)
    }

    /// The solvers work in the conservative regime `s ≤ 1/2`; larger orders
    /// need an explicit override.
    pub fn require_solver_regime(&self, allow_large_s: bool) -> Result<()> {
        if self.s > 0.5 && !allow_large_s {
            return Err(FracError::Domain(format!(
                "s = {} exceeds 1/2; set allow_large_s to override",
                self.s
            )));
        }
        Ok(())
    }
}

/// `c_{N,s} = 2^{2s} s Γ((N+2s)/2) / (π^{N/2} Γ(1-s))`.
///
/// This is the only normalization used anywhere in the crate: the
/// assembled operator carries it, the raw potential `φ` does not.
pub fn normalization_constant(order: FracOrder) -> f64 {
    let (s, n) = (order.s, order.dim as f64);
    4f64.powf(s) * s * gamma(0.5 * (n + 2.0 * s)) / (PI.powf(0.5 * n) * gamma(1.0 - s))
}

/// Coefficient `κ` of the diagonal singularity
/// `J(r, ρ) ≈ κ (rρ)^{-(N-1)/2} |r - ρ|^{-1-2s}`.
///
/// `κ = |S^{N-2}| ∫_0^∞ t^{N-2}(1+t²)^{-(N+2s)/2} dt = π^{(N-1)/2} Γ(s+½) / Γ((N+2s)/2)`.
pub fn diagonal_coefficient(order: FracOrder) -> f64 {
    let (s, n) = (order.s, order.dim as f64);
    PI.powf(0.5 * (n - 1.0)) * gamma(s + 0.5) / gamma(0.5 * (n + 2.0 * s))
}

/// Boundary constant `c₁ = lim φ(r)(1-r)^{2s}`: the half-space potential,
/// `κ / (2s)` with `κ` from [`diagonal_coefficient`].
pub fn phi_boundary_constant(order: FracOrder) -> f64 {
    diagonal_coefficient(order) / (2.0 * order.s)
}

/// Constant value `B(N,s) = 2^{2s} Γ(N/2+s) Γ(1+s) / Γ(N/2)` of the full-space
/// fractional Laplacian of `(1-|x|²)_+^s` inside the unit ball.
pub fn dyda_constant(order: FracOrder) -> f64 {
    let (s, n) = (order.s, order.dim as f64);
    4f64.powf(s) * gamma(0.5 * n + s) * gamma(1.0 + s) / gamma(0.5 * n)
}

/// Angular quadrature: Gauss panels that double in width away from θ = 0,
/// starting at the width of the near-diagonal peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularQuadrature {
    pub nodes_per_panel: usize,
    pub panel_growth: f64,
}

impl Default for AngularQuadrature {
    fn default() -> Self {
        AngularQuadrature {
            nodes_per_panel: 10,
            panel_growth: 2.0,
        }
    }
}

/// Evaluator for `J`, `φ` and the derived constants at a fixed order.
///
/// Immutable after construction; all methods take `&self`.
#[derive(Debug, Clone)]
pub struct KernelEvaluator {
    order: FracOrder,
    angular: AngularQuadrature,
    tail_cutoff: f64,
    near_diag_delta: f64,
    phi_nodes: usize,
    angular_rule: GaussRule,
    radial_rule: GaussRule,
    sphere_low: f64,
    sphere_full: f64,
    diag_coeff: f64,
    norm_const: f64,
}

impl KernelEvaluator {
    pub const DEFAULT_TAIL_CUTOFF: f64 = 1e3;
    pub const DEFAULT_NEAR_DIAG_DELTA: f64 = 1e-6;
    pub const DEFAULT_PHI_NODES: usize = 16;

    pub fn new(order: FracOrder) -> Self {
        Self::with_settings(
            order,
            AngularQuadrature::default(),
            Self::DEFAULT_TAIL_CUTOFF,
            Self::DEFAULT_NEAR_DIAG_DELTA,
            Self::DEFAULT_PHI_NODES,
        )
        .expect("default kernel settings are valid")
    }

    pub fn with_settings(
        order: FracOrder,
        angular: AngularQuadrature,
        tail_cutoff: f64,
        near_diag_delta: f64,
        phi_nodes: usize,
    ) -> Result<Self> {
        if angular.nodes_per_panel < 2 || !(angular.panel_growth > 1.0) {
            return Err(FracError::Config(format!(
                "angular quadrature needs >= 2 nodes per panel and growth > 1, got {angular:?}"
            )));
        }
        if !(tail_cutoff > 1.0) {
            return Err(FracError::Config(format!(
                "tail cutoff {tail_cutoff} must exceed 1"
            )));
        }
        if !(near_diag_delta > 0.0) {
            return Err(FracError::Config(format!(
                "near-diagonal threshold {near_diag_delta} must be positive"
            )));
        }
        if phi_nodes < 2 {
            return Err(FracError::Config("phi quadrature needs >= 2 nodes".into()));
        }
        Ok(KernelEvaluator {
            order,
            angular,
            tail_cutoff,
            near_diag_delta,
            phi_nodes,
            angular_rule: GaussRule::new(angular.nodes_per_panel),
            radial_rule: GaussRule::new(phi_nodes),
            sphere_low: sphere_area(order.dim - 1),
            sphere_full: sphere_area(order.dim),
            diag_coeff: diagonal_coefficient(order),
            norm_const: normalization_constant(order),
        })
    }

    pub fn order(&self) -> FracOrder {
        self.order
    }

    pub fn angular_quadrature(&self) -> AngularQuadrature {
        self.angular
    }

    pub fn tail_cutoff(&self) -> f64 {
        self.tail_cutoff
    }

    pub fn near_diag_delta(&self) -> f64 {
        self.near_diag_delta
    }

    pub fn phi_nodes(&self) -> usize {
        self.phi_nodes
    }

    /// `c_{N,s}`.
    pub fn normalization(&self) -> f64 {
        self.norm_const
    }

    /// `κ` of [`diagonal_coefficient`].
    pub fn diagonal_coefficient(&self) -> f64 {
        self.diag_coeff
    }

    /// `|S^{N-1}|`.
    pub fn sphere_area(&self) -> f64 {
        self.sphere_full
    }

    pub fn boundary_constant(&self) -> f64 {
        phi_boundary_constant(self.order)
    }

    /// Angular kernel `J(r, ρ)`; errors on the diagonal and on negative radii.
    pub fn angular_kernel(&self, r: f64, rho: f64) -> Result<f64> {
        if !(r >= 0.0) || !(rho >= 0.0) || !r.is_finite() || !rho.is_finite() {
            return Err(FracError::Domain(format!(
                "radii must be finite and nonnegative, got r = {r}, rho = {rho}"
            )));
        }
        if r == rho {
            return Err(FracError::Singularity(r));
        }
        Ok(self.angular_kernel_unchecked(r, rho))
    }

    /// `J(r, ρ)` without argument validation; `r ≠ ρ`, both nonnegative.
    pub fn angular_kernel_unchecked(&self, r: f64, rho: f64) -> f64 {
        let nu = self.order.kernel_exponent();
        let prod = r * rho;
        if prod == 0.0 {
            let m = r.max(rho);
            return self.sphere_full * m.powf(-2.0 * nu);
        }
        let gap = (r - rho).abs();
        if gap < self.near_diag_delta {
            return self.diag_coeff
                * prod.powf(-0.5 * (self.order.dim as f64 - 1.0))
                * gap.powf(-1.0 - 2.0 * self.order.s);
        }
        // |x - y|² = gap² + 4 r ρ sin²(θ/2); complex zeros at θ = ±i·width.
        let gap2 = gap * gap;
        let four_prod = 4.0 * prod;
        let width = 2.0 * (gap / (2.0 * prod.sqrt())).asinh();
        let sin_power = self.order.dim as i32 - 2;
        let edges = geometric_edges(width, PI, self.angular.panel_growth);
        let mut total = 0.0;
        for w in edges.windows(2) {
            for (theta, weight) in self.angular_rule.mapped(w[0], w[1]) {
                let half = (0.5 * theta).sin();
                let dist2 = gap2 + four_prod * half * half;
                let mut val = (-nu * dist2.ln()).exp();
                if sin_power > 0 {
                    val *= theta.sin().powi(sin_power);
                }
                total += weight * val;
            }
        }
        self.sphere_low * total
    }

    /// Raw killing potential `φ(r) = ∫_{|y|>1} |x - y|^{-N-2s} dy` at `|x| = r`,
    /// without the `c_{N,s}` factor.
    pub fn phi_raw(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) || r >= 1.0 {
            return Err(FracError::Domain(format!(
                "phi is defined for 0 <= r < 1, got r = {r}"
            )));
        }
        Ok(self.phi_raw_unchecked(r))
    }

    fn phi_raw_unchecked(&self, r: f64) -> f64 {
        let n = self.order.dim as i32;
        let two_s = 2.0 * self.order.s;
        let cutoff = self.tail_cutoff;
        // ρ = r + t with t ∈ [1 - r, cutoff - r], panels doubling away from the boundary.
        let start = 1.0 - r;
        let end = cutoff - r;
        let edges = geometric_edges(start, end, 2.0);
        let mut total = 0.0;
        for w in edges.windows(2).skip(1) {
            for (t, weight) in self.radial_rule.mapped(w[0], w[1]) {
                let rho = r + t;
                total += weight * rho.powi(n - 1) * self.angular_kernel_unchecked(r, rho);
            }
        }
        // leading-order tail beyond the cutoff; the neglected term is O(cutoff^-2)
        total + self.sphere_full * cutoff.powf(-two_s) / two_s
    }

    /// `c_{N,s} φ(r)`, the potential entering the extension identity.
    pub fn killing_potential(&self, r: f64) -> Result<f64> {
        Ok(self.norm_const * self.phi_raw(r)?)
    }
}
