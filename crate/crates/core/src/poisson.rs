//! Linear problems `(A + I) u = F` on the ball and on truncated balls.

use std::sync::Arc;

use serde::Serialize;

use crate::assembly::OperatorMatrix;
use crate::error::{FracError, Result};
use crate::grid::{RadialGrid, RadialProfile};
use crate::kernel::FracOrder;
use crate::linalg::RestrictedSystem;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
const REFINEMENT_STEPS: usize = 2;

/// Slack for nondecreasing-in-`r` violations.
pub const MONOTONE_SLACK: f64 = 1e-10;
/// Required drop per interior cell for strict decrease.
pub const STRICT_DROP: f64 = 1e-12;
/// Radial band in which strict decrease is checked.
pub const STRICT_BAND: (f64, f64) = (0.05, 0.95);
/// `max F - min F` above which a source counts as non-constant.
pub const NONCONSTANT_GAP: f64 = 1e-12;
/// Slack on the boundary-level interval.
pub const LEVEL_SLACK: f64 = 1e-8;
/// Slack for monotonicity in the truncation radius.
pub const EXHAUSTION_SLACK: f64 = 1e-8;

/// Parameters of a linear solve as read from a run configuration.
#[derive(Debug, Clone)]
pub struct PoissonSpec {
    pub order: FracOrder,
    pub intervals: usize,
    pub beta: f64,
    pub source: RadialProfile,
    pub r0: f64,
    pub tolerance: f64,
}

impl PoissonSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0 && self.r0 <= 1.0) {
            return Err(FracError::Config(format!(
                "truncation radius r0 = {} must lie in (0, 1]",
                self.r0
            )));
        }
        if self.source.values().iter().any(|v| !v.is_finite()) {
            return Err(FracError::Precondition("source has non-finite values".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(FracError::Config("solver tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Run the solve this spec describes on an operator built for it.
    pub fn solve(&self, op: &OperatorMatrix) -> Result<SolveReport> {
        self.validate()?;
        let solver = PoissonSolver::new(op).with_tolerance(self.tolerance);
        if self.r0 >= 1.0 {
            solver.solve_full(&self.source)
        } else {
            solver.solve_truncated(&self.source, self.r0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityFlags {
    /// `u(r_{i+1}) - u(r_i) ≤ 1e-10` for every cell.
    pub nonincreasing: bool,
    /// Largest `u(r_{i+1}) - u(r_i)`.
    pub max_increase: f64,
    /// Strict decrease on the interior band; `None` when not applicable.
    pub strict_interior: Option<bool>,
}

/// Monotonicity of nodal values along the grid.
pub fn radial_monotonicity(u: &RadialProfile, check_strict: bool) -> MonotonicityFlags {
    let nodes = u.grid().nodes();
    let v = u.values();
    let max_increase = v.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let strict_interior = check_strict.then(|| {
        let (lo, hi) = STRICT_BAND;
        (0..v.len() - 1)
            .filter(|&i| nodes[i] >= lo && nodes[i + 1] <= hi)
            .all(|i| v[i + 1] - v[i] < -STRICT_DROP)
    });
    MonotonicityFlags {
        nonincreasing: max_increase <= MONOTONE_SLACK,
        max_increase,
        strict_interior,
    }
}

/// Whether `max F - min F` exceeds the non-constant gate.
pub fn is_nonconstant(f: &RadialProfile) -> bool {
    f.max() - f.min() > NONCONSTANT_GAP
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: RadialProfile,
    pub source: RadialProfile,
    pub r0: f64,
    /// Solution value at the last node.
    pub boundary_level: f64,
    /// Filled in by [`shift_and_mass`].
    pub mass_residual: Option<f64>,
    /// `‖(A + I)u - F‖_∞ / (‖F‖_∞ + max_i A_ii ‖u‖_∞)` over the unknowns.
    pub linear_residual: f64,
    pub monotonicity: MonotonicityFlags,
    pub energy: f64,
}

/// Dense solver bound to one assembled operator.
pub struct PoissonSolver<'a> {
    op: &'a OperatorMatrix,
    tolerance: f64,
}

impl<'a> PoissonSolver<'a> {
    pub fn new(op: &'a OperatorMatrix) -> Self {
        PoissonSolver {
            op,
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn operator(&self) -> &'a OperatorMatrix {
        self.op
    }

    /// Factorization of `(A + I)` on all nodes, for repeated solves.
    pub fn factor_full(&self) -> Result<FullSolver<'a>> {
        let n = self.op.size();
        let system = RestrictedSystem::new(self.op, (0..n).collect(), 1.0)?;
        Ok(FullSolver {
            op: self.op,
            system,
            tolerance: self.tolerance,
        })
    }

    /// `(A + I) u = F` on nodes `r_i < r0`, `u = 0` on the rest.
    pub fn solve_truncated(&self, f: &RadialProfile, r0: f64) -> Result<SolveReport> {
        if !(r0 > 0.0 && r0 < 1.0) {
            return Err(FracError::Usage(format!(
                "truncated solve needs r0 in (0, 1), got {r0}"
            )));
        }
        check_source(self.op, f)?;
        let indices: Vec<usize> = self
            .op
            .grid()
            .nodes()
            .iter()
            .enumerate()
            .filter(|&(_, &r)| r < r0)
            .map(|(i, _)| i)
            .collect();
        let system = RestrictedSystem::new(self.op, indices, 1.0)?;
        let u = system.solve_refined(self.op, f.values(), REFINEMENT_STEPS);
        finish(self.op, &system, u, f, r0, self.tolerance, false)
    }

    /// `(A + I) u = F` on every node, without a boundary condition.
    pub fn solve_full(&self, f: &RadialProfile) -> Result<SolveReport> {
        check_source(self.op, f)?;
        self.factor_full()?.solve(f)
    }
}

/// Factored full-ball system.
pub struct FullSolver<'a> {
    op: &'a OperatorMatrix,
    system: RestrictedSystem,
    tolerance: f64,
}

impl FullSolver<'_> {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.op.grid()
    }

    /// Solve without the sign precondition on `F`.
    pub fn solve_values(&self, f: &[f64]) -> Vec<f64> {
        self.system.solve_refined(self.op, f, REFINEMENT_STEPS)
    }

    pub fn solve(&self, f: &RadialProfile) -> Result<SolveReport> {
        f.ensure_grid(self.op.grid())?;
        let u = self.solve_values(f.values());
        finish(
            self.op,
            &self.system,
            u,
            f,
            1.0,
            self.tolerance,
            is_nonconstant(f),
        )
    }
}

fn check_source(op: &OperatorMatrix, f: &RadialProfile) -> Result<()> {
    f.ensure_grid(op.grid())?;
    if let Some((i, v)) = f
        .values()
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v >= 0.0) || !v.is_finite())
    {
        return Err(FracError::Precondition(format!(
            "source must be finite and nonnegative, F(r_{i}) = {v}"
        )));
    }
    Ok(())
}

fn finish(
    op: &OperatorMatrix,
    system: &RestrictedSystem,
    u: Vec<f64>,
    f: &RadialProfile,
    r0: f64,
    tolerance: f64,
    check_strict: bool,
) -> Result<SolveReport> {
    let res = system.residual(op, &u, f.values());
    let res_max = res.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let f_max = f.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let u_max = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let scale = f_max + op.max_diagonal() * u_max;
    let linear_residual = if scale > 0.0 { res_max / scale } else { res_max };
    if !(linear_residual <= tolerance) {
        return Err(FracError::InternalConsistency(format!(
            "linear residual {linear_residual:e} exceeds tolerance {tolerance:e}"
        )));
    }
    let solution = RadialProfile::new(op.grid().clone(), u)?;
    let energy = energy_functional(op, &solution, f)?;
    Ok(SolveReport {
        boundary_level: solution.boundary_value(),
        monotonicity: radial_monotonicity(&solution, check_strict),
        solution,
        source: f.clone(),
        r0,
        mass_residual: None,
        linear_residual,
        energy,
    })
}

/// Status of the strict upper bound `d < avg F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundStatus {
    Pass,
    /// `d` equals the bound within slack.
    Inconclusive,
    /// Constant source: the interval is empty and nothing is asserted.
    NotApplicable,
}

/// Full solution moved down by its boundary level.
#[derive(Debug, Clone)]
pub struct ShiftReport {
    /// `d = u(r_M)`.
    pub level: f64,
    /// `u_f = u - d`, zero at the last node.
    pub shifted: RadialProfile,
    /// `f = F - d`.
    pub reduced_source: RadialProfile,
    /// `|∫ u_f - ∫ f|`.
    pub mass_residual: f64,
    /// `∫ |f|`.
    pub mass_scale: f64,
    pub inf_source: f64,
    pub mean_source: f64,
    pub upper: BoundStatus,
}

/// Shift a full solve by its boundary level and test the mass identity and
/// `inf F ≤ d < avg F`.
pub fn shift_and_mass(report: &SolveReport, f: &RadialProfile) -> Result<ShiftReport> {
    if report.r0 < 1.0 {
        return Err(FracError::Usage(
            "boundary shift needs a full-ball solve".into(),
        ));
    }
    f.ensure_grid(report.solution.grid())?;
    let d = report.boundary_level;
    let shifted = report.solution.map(|v| v - d);
    let reduced_source = f.map(|v| v - d);
    let mass_residual = (shifted.ball_integral() - reduced_source.ball_integral()).abs();
    let mass_scale = reduced_source.map(f64::abs).ball_integral();
    let volume: f64 = f.grid().masses().iter().sum();
    let inf_source = f.min();
    let mean_source = f.ball_integral() / volume;

    let upper = if is_nonconstant(f) {
        if d < inf_source - LEVEL_SLACK {
            return Err(FracError::Verification {
                check: "boundary level above inf F".into(),
                measured: d - inf_source,
                tolerance: LEVEL_SLACK,
            });
        }
        if d > mean_source + LEVEL_SLACK {
            return Err(FracError::Verification {
                check: "boundary level below mean of F".into(),
                measured: d - mean_source,
                tolerance: LEVEL_SLACK,
            });
        }
        if d < mean_source - LEVEL_SLACK {
            BoundStatus::Pass
        } else {
            BoundStatus::Inconclusive
        }
    } else {
        BoundStatus::NotApplicable
    };

    Ok(ShiftReport {
        level: d,
        shifted,
        reduced_source,
        mass_residual,
        mass_scale,
        inf_source,
        mean_source,
        upper,
    })
}

impl SolveReport {
    /// Copy with the mass residual of a boundary shift recorded.
    pub fn with_shift(mut self, shift: &ShiftReport) -> Self {
        self.mass_residual = Some(shift.mass_residual);
        self
    }
}

/// Truncated solves at increasing radii compared with the full solve.
#[derive(Debug, Clone)]
pub struct ExhaustionStudy {
    pub radii: Vec<f64>,
    pub solutions: Vec<RadialProfile>,
    /// `sup |u_{r0} - u_full|` per radius.
    pub distances: Vec<f64>,
    /// `u_{r_k} ≤ u_{r_{k+1}} + 1e-8` for each consecutive pair.
    pub monotone: Vec<bool>,
    pub distances_decreasing: bool,
    pub full: SolveReport,
}

impl ExhaustionStudy {
    pub fn all_monotone(&self) -> bool {
        self.monotone.iter().all(|&m| m)
    }
}

pub fn exhaustion_study(
    op: &OperatorMatrix,
    f: &RadialProfile,
    radii: &[f64],
) -> Result<ExhaustionStudy> {
    if radii.is_empty() {
        return Err(FracError::Usage("exhaustion needs at least one radius".into()));
    }
    if radii.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return Err(FracError::Usage("exhaustion radii must lie in (0, 1)".into()));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(FracError::Usage(
            "exhaustion radii must be strictly increasing".into(),
        ));
    }
    let solver = PoissonSolver::new(op);
    let full = solver.solve_full(f)?;
    let mut solutions = Vec::with_capacity(radii.len());
    for &r0 in radii {
        solutions.push(solver.solve_truncated(f, r0)?.solution);
    }
    let distances: Vec<f64> = solutions
        .iter()
        .map(|u| u.sup_distance(&full.solution))
        .collect();
    let monotone = solutions
        .windows(2)
        .map(|w| {
            w[0].values()
                .iter()
                .zip(w[1].values())
                .all(|(a, b)| *a <= b + EXHAUSTION_SLACK)
        })
        .collect();
    let distances_decreasing = distances.windows(2).all(|w| w[1] < w[0]);
    Ok(ExhaustionStudy {
        radii: radii.to_vec(),
        solutions,
        distances,
        monotone,
        distances_decreasing,
        full,
    })
}

/// Discrete energy `½ Σ m_i u_i (A u)_i + ½ ∫ u² - ∫ F u`, whose critical
/// point is the full-ball solution. Nodal products use the hat masses.
pub fn energy_functional(op: &OperatorMatrix, u: &RadialProfile, f: &RadialProfile) -> Result<f64> {
    u.ensure_grid(op.grid())?;
    f.ensure_grid(op.grid())?;
    let au = op.apply_values(u.values());
    let m = op.grid().masses();
    let e = (0..op.size())
        .map(|i| {
            let ui = u.values()[i];
            m[i] * (0.5 * ui * au[i] + 0.5 * ui * ui - f.values()[i] * ui)
        })
        .sum();
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_operator, QuadratureSpec};
    use crate::kernel::KernelEvaluator;

    fn operator(s: f64, m: usize) -> OperatorMatrix {
        let order = FracOrder::new(s, 2).unwrap();
        let grid = Arc::new(RadialGrid::graded(m, 2.0, 2).unwrap());
        assemble_operator(grid, &KernelEvaluator::new(order), &QuadratureSpec::default()).unwrap()
    }

    #[test]
    fn zero_source_gives_zero() {
        let op = operator(0.25, 24);
        let f = RadialProfile::zeros(op.grid().clone());
        let solver = PoissonSolver::new(&op);
        let full = solver.solve_full(&f).unwrap();
        assert!(full.solution.values().iter().all(|&v| v == 0.0));
        assert_eq!(full.energy, 0.0);
        let tr = solver.solve_truncated(&f, 0.5).unwrap();
        assert!(tr.solution.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constants_reproduced() {
        let op = operator(0.5, 32);
        let f = RadialProfile::constant(op.grid().clone(), 3.0);
        let rep = PoissonSolver::new(&op).solve_full(&f).unwrap();
        assert!(rep.solution.values().iter().all(|v| (v - 3.0).abs() <= 3e-10));
        assert!(rep.monotonicity.nonincreasing);
        let sh = shift_and_mass(&rep, &f).unwrap();
        assert_eq!(sh.upper, BoundStatus::NotApplicable);
        assert!(sh.mass_residual < 1e-12);
        assert_eq!(sh.shifted.boundary_value(), 0.0);
    }

    #[test]
    fn truncated_pins_outer_nodes() {
        let op = operator(0.25, 32);
        let f = RadialProfile::constant(op.grid().clone(), 1.0);
        let rep = PoissonSolver::new(&op).solve_truncated(&f, 0.5).unwrap();
        for (&r, &u) in op.grid().nodes().iter().zip(rep.solution.values()) {
            if r < 0.5 {
                assert!(u > 0.0 && u < 1.0, "u({r}) = {u}");
            } else {
                assert_eq!(u, 0.0);
            }
        }
    }

    #[test]
    fn negative_source_rejected() {
        let op = operator(0.25, 16);
        let f = RadialProfile::from_fn(op.grid().clone(), |r| 0.5 - r);
        let solver = PoissonSolver::new(&op);
        assert!(matches!(solver.solve_full(&f), Err(FracError::Precondition(_))));
        assert!(matches!(
            solver.solve_truncated(&f, 0.3),
            Err(FracError::Precondition(_))
        ));
    }

    #[test]
    fn shift_needs_full_solve() {
        let op = operator(0.25, 16);
        let f = RadialProfile::constant(op.grid().clone(), 1.0);
        let rep = PoissonSolver::new(&op).solve_truncated(&f, 0.5).unwrap();
        assert!(matches!(shift_and_mass(&rep, &f), Err(FracError::Usage(_))));
    }

    #[test]
    fn exhaustion_rejects_bad_radii() {
        let op = operator(0.25, 16);
        let f = RadialProfile::constant(op.grid().clone(), 1.0);
        for radii in [vec![], vec![0.5, 0.4], vec![0.5, 0.5], vec![0.5, 1.0]] {
            assert!(matches!(
                exhaustion_study(&op, &f, &radii),
                Err(FracError::Usage(_))
            ));
        }
    }

    #[test]
    fn single_radius_study_matches_truncated_solve() {
        let op = operator(0.25, 24);
        let f = RadialProfile::from_fn(op.grid().clone(), |r| 2.0 - r * r);
        let study = exhaustion_study(&op, &f, &[0.6]).unwrap();
        let direct = PoissonSolver::new(&op).solve_truncated(&f, 0.6).unwrap();
        assert_eq!(study.solutions[0].values(), direct.solution.values());
        assert!(study.monotone.is_empty() && study.distances_decreasing);
    }

    #[test]
    fn energy_of_constants() {
        let op = operator(0.25, 16);
        let c = 1.7;
        let u = RadialProfile::constant(op.grid().clone(), c);
        let e = energy_functional(&op, &u, &u).unwrap();
        let expect = -0.5 * c * c * std::f64::consts::PI;
        assert!((e - expect).abs() < 1e-12);
    }

    #[test]
    fn energy_grid_mismatch() {
        let op = operator(0.25, 16);
        let other = Arc::new(RadialGrid::graded(17, 2.0, 2).unwrap());
        let u = RadialProfile::zeros(other);
        let f = RadialProfile::zeros(op.grid().clone());
        assert!(matches!(energy_functional(&op, &u, &f), Err(FracError::Usage(_))));
    }

    #[test]
    fn monotonicity_flags() {
        let g = Arc::new(RadialGrid::graded(16, 2.0, 2).unwrap());
        let flat = RadialProfile::constant(g.clone(), 1.0);
        let f = radial_monotonicity(&flat, true);
        assert!(f.nonincreasing);
        assert_eq!(f.strict_interior, Some(false));
        let dec = RadialProfile::from_fn(g.clone(), |r| 1.0 - r);
        assert_eq!(radial_monotonicity(&dec, true).strict_interior, Some(true));
        let inc = RadialProfile::from_fn(g, |r| r);
        assert!(!radial_monotonicity(&inc, false).nonincreasing);
    }
}
