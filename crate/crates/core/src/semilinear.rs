//! Minimal positive solutions of `(A + I) u = h₁ u^p + ε h₂` by monotone
//! iteration, with the thresholds that control it.

use serde::Serialize;

use crate::assembly::OperatorMatrix;
use crate::error::{FracError, Result};
use crate::grid::RadialProfile;
use crate::poisson::{FullSolver, PoissonSolver, SolveReport, DEFAULT_TOLERANCE};

pub const DEFAULT_MAX_ITERATIONS: usize = 500;
/// Allowed decrease between consecutive iterates.
pub const ITERATE_SLACK: f64 = 1e-10;
pub const BARRIER_SLACK: f64 = 1e-8;
pub const LEVEL_SLACK: f64 = 1e-8;
/// Iterates beyond this multiple of `t_p` count as diverging.
const DIVERGENCE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct SemilinearSpec {
    pub h1: RadialProfile,
    pub h2: RadialProfile,
    pub p: f64,
    pub eps: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Admit `h₁ ≡ 0`, which turns the problem linear.
    pub allow_zero_h1: bool,
}

impl SemilinearSpec {
    pub fn new(h1: RadialProfile, h2: RadialProfile, p: f64, eps: f64) -> Self {
        SemilinearSpec {
            h1,
            h2,
            p,
            eps,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            allow_zero_h1: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0) || !self.p.is_finite() {
            return Err(FracError::Config(format!("exponent p = {} must exceed 1", self.p)));
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(FracError::Config(format!("eps = {} must be >= 0", self.eps)));
        }
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(FracError::Config(
                "iteration needs a positive tolerance and at least one step".into(),
            ));
        }
        self.h1.ensure_grid(self.h2.grid())?;
        let zero_h1 = self.h1.values().iter().all(|&v| v == 0.0);
        if !(zero_h1 && self.allow_zero_h1) && !(self.h1.min() > 0.0) {
            return Err(FracError::Precondition(format!(
                "inf h1 = {} must be positive",
                self.h1.min()
            )));
        }
        if !(self.h2.min() > 0.0) {
            return Err(FracError::Precondition(format!(
                "inf h2 = {} must be positive",
                self.h2.min()
            )));
        }
        for (name, h) in [("h1", &self.h1), ("h2", &self.h2)] {
            if h.values().iter().any(|v| !v.is_finite()) {
                return Err(FracError::Precondition(format!("{name} has non-finite values")));
            }
            if h.values().windows(2).any(|w| w[1] > w[0]) {
                return Err(FracError::Precondition(format!(
                    "{name} must be nonincreasing in r"
                )));
            }
        }
        Ok(())
    }

    fn volume(&self) -> f64 {
        self.h1.grid().masses().iter().sum()
    }

    /// Barrier height `t_p = (p ‖h₁‖_∞)^{-1/(p-1)}`.
    pub fn barrier_height(&self) -> f64 {
        (self.p * self.h1.max()).powf(-1.0 / (self.p - 1.0))
    }

    /// `max_t (t - ‖h₁‖_∞ t^p) / ‖h₂‖_∞`.
    pub fn eps_p(&self) -> f64 {
        let lmax = (self.p - 1.0) / self.p * self.barrier_height();
        lmax / self.h2.max()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub t_p: f64,
    pub l_max: f64,
    pub eps_p: f64,
    pub eps_0: f64,
    pub eps_star_upper: f64,
}

/// Thresholds from the data and the full solution `u_{h₁}` of
/// `(A + I) u = h₁`.
pub fn thresholds(spec: &SemilinearSpec, u_h1: &RadialProfile) -> Result<Thresholds> {
    u_h1.ensure_grid(spec.h1.grid())?;
    let inf_h1 = spec.h1.min();
    let inf_h2 = spec.h2.min();
    if !(inf_h1 > 0.0) || !(inf_h2 > 0.0) {
        return Err(FracError::Precondition(
            "thresholds need inf h1 > 0 and inf h2 > 0".into(),
        ));
    }
    if !(u_h1.min() > 0.0) {
        return Err(FracError::Precondition(
            "thresholds need a strictly positive u_h1".into(),
        ));
    }
    let p = spec.p;
    let t_p = spec.barrier_height();
    let l_max = (p - 1.0) / p * t_p;
    let eps_p = l_max / spec.h2.max();
    let h1_l1 = spec.h1.ball_integral();
    let eps_0 = h1_l1.powf(1.0 / p) / (spec.volume() * inf_h2 * inf_h1);

    let m = u_h1.grid().masses();
    let (mut num, mut den) = (0.0, 0.0);
    for (i, &mi) in m.iter().enumerate() {
        let u = u_h1.values()[i];
        num += mi * spec.h1.values()[i] * u.powf(-1.0 / (p - 1.0));
        den += mi * spec.h2.values()[i] * u;
    }
    Ok(Thresholds {
        t_p,
        l_max,
        eps_p,
        eps_0,
        eps_star_upper: num / den,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationStatus {
    Converged,
    MaxIterations,
    Diverged,
}

/// One step `v_{n-1} → v_n`; step 0 records the starting iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    /// `‖v_n - v_{n-1}‖_∞`.
    pub delta: f64,
    /// `min_i (v_n - v_{n-1})_i`.
    pub min_increment: f64,
    /// `max_i v_n`.
    pub max_value: f64,
}

#[derive(Debug, Clone)]
pub struct SemilinearReport {
    pub status: IterationStatus,
    pub eps: f64,
    /// Last iterate; `u_ε` when converged.
    pub solution: RadialProfile,
    /// The final linear solve, present unless the iteration blew up.
    pub last_solve: Option<SolveReport>,
    pub history: Vec<IterationRecord>,
}

impl SemilinearReport {
    pub fn converged(&self) -> bool {
        self.status == IterationStatus::Converged
    }

    pub fn iterations(&self) -> usize {
        self.history.len() - 1
    }

    /// Smallest increment over all steps.
    pub fn min_increment(&self) -> f64 {
        self.history[1..]
            .iter()
            .map(|h| h.min_increment)
            .fold(f64::INFINITY, f64::min)
    }

    /// Iterates nondecreasing within slack.
    pub fn monotone(&self) -> bool {
        self.min_increment() >= -ITERATE_SLACK
    }

    /// Largest nodal value over all iterates.
    pub fn max_value(&self) -> f64 {
        self.history.iter().map(|h| h.max_value).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Iterate from `v₀ = ε u_{h₂}`.
pub fn monotone_iteration(op: &OperatorMatrix, spec: &SemilinearSpec) -> Result<SemilinearReport> {
    spec.validate()?;
    let full = PoissonSolver::new(op).factor_full()?;
    let v0 = start(&full, spec)?;
    iterate(&full, spec, v0)
}

fn start(full: &FullSolver<'_>, spec: &SemilinearSpec) -> Result<Vec<f64>> {
    spec.h2.ensure_grid(full.grid())?;
    Ok(full
        .solve_values(spec.h2.values())
        .into_iter()
        .map(|v| spec.eps * v)
        .collect())
}

fn iterate(full: &FullSolver<'_>, spec: &SemilinearSpec, v0: Vec<f64>) -> Result<SemilinearReport> {
    spec.h1.ensure_grid(full.grid())?;
    let grid = full.grid().clone();
    let t_p = spec.barrier_height();
    let below_barrier = spec.eps <= spec.eps_p();
    let h1 = spec.h1.values();
    let h2 = spec.h2.values();

    let mut v = v0;
    let mut history = vec![IterationRecord {
        delta: 0.0,
        min_increment: 0.0,
        max_value: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }];
    let mut status = IterationStatus::MaxIterations;
    let mut last_solve = None;

    for _ in 0..spec.max_iterations {
        let src: Vec<f64> = (0..v.len())
            .map(|i| h1[i] * v[i].max(0.0).powf(spec.p) + spec.eps * h2[i])
            .collect();
        let next = full.solve_values(&src);
        let mut delta = 0.0f64;
        let mut min_increment = f64::INFINITY;
        let mut max_value = f64::NEG_INFINITY;
        for (a, b) in next.iter().zip(&v) {
            delta = delta.max((a - b).abs());
            min_increment = min_increment.min(a - b);
            max_value = max_value.max(*a);
        }
        history.push(IterationRecord {
            delta,
            min_increment,
            max_value,
        });
        let blown = !max_value.is_finite() || max_value > DIVERGENCE_FACTOR * t_p;
        if blown {
            if below_barrier {
                return Err(FracError::InternalConsistency(format!(
                    "iterate reached {max_value:e} > {DIVERGENCE_FACTOR} t_p with eps = {} <= eps_p",
                    spec.eps
                )));
            }
            v = next;
            status = IterationStatus::Diverged;
            break;
        }
        v = next;
        if delta < spec.tolerance {
            let src_profile = RadialProfile::new(grid.clone(), src)?;
            last_solve = Some(full.solve(&src_profile)?);
            status = IterationStatus::Converged;
            break;
        }
    }

    Ok(SemilinearReport {
        status,
        eps: spec.eps,
        solution: RadialProfile::new(grid, v)?,
        last_solve,
        history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BarrierFlags {
    /// `u_ε ≤ t_p` for every iterate; `None` when `ε > ε_p`.
    pub barrier: Option<bool>,
    pub max_value: f64,
    pub t_p: f64,
    /// Distance between the limits from `v₀` and from `v₀/2`.
    pub restart_distance: f64,
    pub minimal: bool,
}

/// Barrier check and a restart from `v₀/2` that must reach the same limit.
pub fn barrier_and_minimality(
    op: &OperatorMatrix,
    spec: &SemilinearSpec,
    report: &SemilinearReport,
) -> Result<BarrierFlags> {
    if !report.converged() {
        return Err(FracError::Usage(
            "barrier and minimality need a converged iteration".into(),
        ));
    }
    let t_p = spec.barrier_height();
    let max_value = report.max_value();
    let barrier = (spec.eps <= spec.eps_p()).then_some(max_value <= t_p + BARRIER_SLACK);
    if barrier == Some(false) {
        return Err(FracError::Verification {
            check: "iterates below the barrier t_p".into(),
            measured: max_value - t_p,
            tolerance: BARRIER_SLACK,
        });
    }
    let full = PoissonSolver::new(op).factor_full()?;
    let v0: Vec<f64> = start(&full, spec)?.into_iter().map(|v| 0.5 * v).collect();
    let restart = iterate(&full, spec, v0)?;
    let restart_distance = if restart.converged() {
        restart.solution.sup_distance(&report.solution)
    } else {
        f64::INFINITY
    };
    Ok(BarrierFlags {
        barrier,
        max_value,
        t_p,
        restart_distance,
        minimal: restart_distance <= 2.0 * spec.tolerance,
    })
}

#[derive(Debug, Clone)]
pub struct LevelBounds {
    /// `d_ε = u_ε(r_M)`.
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    /// `w_ε = u_ε - d_ε`.
    pub shifted: RadialProfile,
}

/// `ε inf h₂ ≤ d_ε ≤ (‖h₁‖_{L¹} / (|B₁| inf h₁))^{1/p}` and the shifted profile.
pub fn boundary_level_bounds(report: &SemilinearReport, spec: &SemilinearSpec) -> Result<LevelBounds> {
    if !report.converged() {
        return Err(FracError::Usage("boundary level needs a converged iteration".into()));
    }
    let level = report.solution.boundary_value();
    let lower = spec.eps * spec.h2.min();
    let upper = (spec.h1.ball_integral() / (spec.volume() * spec.h1.min())).powf(1.0 / spec.p);
    if level < lower - LEVEL_SLACK {
        return Err(FracError::Verification {
            check: "semilinear boundary level above eps inf h2".into(),
            measured: level - lower,
            tolerance: LEVEL_SLACK,
        });
    }
    if level > upper + LEVEL_SLACK {
        return Err(FracError::Verification {
            check: "semilinear boundary level below the upper bound".into(),
            measured: level - upper,
            tolerance: LEVEL_SLACK,
        });
    }
    Ok(LevelBounds {
        level,
        lower,
        upper,
        shifted: report.solution.map(|v| v - level),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_operator, QuadratureSpec};
    use crate::grid::RadialGrid;
    use crate::kernel::{FracOrder, KernelEvaluator};
    use std::sync::Arc;

    fn operator(m: usize) -> OperatorMatrix {
        let order = FracOrder::new(0.25, 2).unwrap();
        let grid = Arc::new(RadialGrid::graded(m, 2.0, 2).unwrap());
        assemble_operator(grid, &KernelEvaluator::new(order), &QuadratureSpec::default()).unwrap()
    }

    fn constant_spec(op: &OperatorMatrix, eps: f64) -> SemilinearSpec {
        let one = RadialProfile::constant(op.grid().clone(), 1.0);
        SemilinearSpec::new(one.clone(), one, 2.0, eps)
    }

    #[test]
    fn constant_thresholds() {
        let op = operator(16);
        let spec = constant_spec(&op, 0.1);
        let u = RadialProfile::constant(op.grid().clone(), 1.0);
        let t = thresholds(&spec, &u).unwrap();
        assert!((t.t_p - 0.5).abs() < 1e-15);
        assert!((t.l_max - 0.25).abs() < 1e-15);
        assert!((t.eps_p - 0.25).abs() < 1e-15);
        assert!((t.eps_0 - std::f64::consts::PI.powf(-0.5)).abs() < 1e-12);
        assert!((t.eps_star_upper - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_fixed_point() {
        let op = operator(24);
        let spec = constant_spec(&op, 0.1);
        let rep = monotone_iteration(&op, &spec).unwrap();
        assert!(rep.converged());
        let root = (1.0 - 0.6f64.sqrt()) / 2.0;
        assert!(rep.solution.values().iter().all(|v| (v - root).abs() < 1e-9));
        assert!(rep.monotone());
        let flags = barrier_and_minimality(&op, &spec, &rep).unwrap();
        assert_eq!(flags.barrier, Some(true));
        assert!(flags.minimal);
        let lv = boundary_level_bounds(&rep, &spec).unwrap();
        assert!((lv.upper - 1.0).abs() < 1e-12);
        assert_eq!(lv.shifted.boundary_value(), 0.0);
    }

    #[test]
    fn zero_eps_stays_zero() {
        let op = operator(16);
        let spec = constant_spec(&op, 0.0);
        let rep = monotone_iteration(&op, &spec).unwrap();
        assert!(rep.converged());
        assert!(rep.solution.values().iter().all(|&v| v == 0.0));
        assert_eq!(barrier_and_minimality(&op, &spec, &rep).unwrap().barrier, Some(true));
    }

    #[test]
    fn zero_h1_override_is_linear() {
        let op = operator(16);
        let g = op.grid().clone();
        let h2 = RadialProfile::from_fn(g.clone(), |r| 2.0 - r * r);
        let mut spec = SemilinearSpec::new(RadialProfile::zeros(g), h2.clone(), 2.0, 0.3);
        assert!(matches!(spec.validate(), Err(FracError::Precondition(_))));
        spec.allow_zero_h1 = true;
        let rep = monotone_iteration(&op, &spec).unwrap();
        assert!(rep.converged());
        assert_eq!(rep.iterations(), 1);
        let lin = PoissonSolver::new(&op).solve_full(&h2).unwrap();
        for (a, b) in rep.solution.values().iter().zip(lin.solution.values()) {
            assert!((a - 0.3 * b).abs() < 1e-14);
        }
    }

    #[test]
    fn large_eps_reports_divergence() {
        let op = operator(16);
        let spec = constant_spec(&op, 10.0);
        let rep = monotone_iteration(&op, &spec).unwrap();
        assert_eq!(rep.status, IterationStatus::Diverged);
        assert!(rep.last_solve.is_none());
        assert!(matches!(
            barrier_and_minimality(&op, &spec, &rep),
            Err(FracError::Usage(_))
        ));
    }

    #[test]
    fn spec_validation() {
        let op = operator(16);
        let g = op.grid().clone();
        let mut spec = constant_spec(&op, 0.1);
        spec.p = 1.0;
        assert!(matches!(spec.validate(), Err(FracError::Config(_))));
        let mut spec = constant_spec(&op, 0.1);
        spec.h2 = RadialProfile::from_fn(g.clone(), |r| 1.0 + r);
        assert!(matches!(spec.validate(), Err(FracError::Precondition(_))));
        let mut spec = constant_spec(&op, 0.1);
        spec.h2 = RadialProfile::from_fn(g, |r| 1.0 - r);
        assert!(matches!(spec.validate(), Err(FracError::Precondition(_))));
    }
}
