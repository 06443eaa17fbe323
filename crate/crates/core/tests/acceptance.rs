//! Acceptance gate: one line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use fraclap::assembly::{
    assemble_operator, dyda_profile, extension_identity_residual, FullSpaceReference,
    OperatorMatrix, QuadratureSpec,
};
use fraclap::grid::{RadialGrid, RadialProfile};
use fraclap::harness::checks::{
    abp_scaling_check, centered_sets, comparison_check, ABP_FRACTIONS, ABP_TRIALS,
};
use fraclap::harness::rng::CheckRng;
use fraclap::kernel::{dyda_constant, phi_boundary_constant, FracOrder, KernelEvaluator};
use fraclap::poisson::{exhaustion_study, radial_monotonicity, shift_and_mass, PoissonSolver};
use fraclap::semilinear::{
    barrier_and_minimality, boundary_level_bounds, monotone_iteration, thresholds, SemilinearSpec,
};

const BETA: f64 = 2.0;
const SEED: u64 = 42;

fn operator(s: f64, dim: usize, m: usize) -> OperatorMatrix {
    let order = FracOrder::new(s, dim).unwrap();
    let grid = Arc::new(RadialGrid::graded(m, BETA, dim).unwrap());
    assemble_operator(grid, &KernelEvaluator::new(order), &QuadratureSpec::default()).unwrap()
}

/// Operators shared between criteria, built on first use.
struct Ops {
    cache: Vec<((u64, usize, usize), Arc<OperatorMatrix>)>,
}

impl Ops {
    fn get(&mut self, s: f64, dim: usize, m: usize) -> (Arc<OperatorMatrix>, Duration) {
        let key = (s.to_bits(), dim, m);
        if let Some((_, op)) = self.cache.iter().find(|(k, _)| *k == key) {
            return (op.clone(), Duration::ZERO);
        }
        let t = Instant::now();
        let op = Arc::new(operator(s, dim, m));
        let spent = t.elapsed();
        self.cache.push((key, op.clone()));
        (op, spent)
    }
}

struct Outcome {
    ok: bool,
    text: String,
}

fn outcome(ok: bool, text: String) -> Outcome {
    Outcome { ok, text }
}

fn sup(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn criterion_1(ops: &mut Ops) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (s, dim) in [(0.25, 2), (0.5, 2), (0.5, 3)] {
        let t = Instant::now();
        let (op, _) = ops.get(s, dim, 256);
        let f = RadialProfile::constant(op.grid().clone(), 3.0);
        let rep = PoissonSolver::new(&op).solve_full(&f).unwrap();
        let err = sup(rep.solution.values().iter().map(|v| v - 3.0));
        let secs = t.elapsed().as_secs_f64();
        ok &= err <= 3e-10 && secs < 10.0;
        parts.push(format!("({dim},{s}) err {err:.2e} in {secs:.2}s"));
    }
    outcome(ok, format!("constant reproduction F = 3, M = 256: {} [tol 3e-10, < 10 s]", parts.join("; ")))
}

/// `∫_R (1 + t²)^{-(1+s)} dt / (2s)` by the trapezoid rule after `t = sinh x`.
fn boundary_constant_by_quadrature(s: f64) -> f64 {
    let h = 1e-3;
    let n = (60.0 / h) as i64;
    let sum: f64 = (-n..=n)
        .map(|k| (k as f64 * h).cosh().powf(-1.0 - 2.0 * s))
        .sum();
    sum * h / (2.0 * s)
}

fn criterion_2() -> Outcome {
    let mut worst_phi = 0.0f64;
    for (s, dim) in [(0.25, 2), (0.5, 2), (0.5, 3), (0.25, 3)] {
        let ke = KernelEvaluator::new(FracOrder::new(s, dim).unwrap());
        let expect = ke.sphere_area() / (2.0 * s);
        worst_phi = worst_phi.max((ke.phi_raw(0.0).unwrap() / expect - 1.0).abs());
    }
    let c_half = phi_boundary_constant(FracOrder::new(0.5, 2).unwrap());
    let err_half = (c_half / 2.0 - 1.0).abs();
    let c_quarter = phi_boundary_constant(FracOrder::new(0.25, 2).unwrap());
    let quad = boundary_constant_by_quadrature(0.25);
    let err_quarter = (c_quarter / quad - 1.0).abs();
    let ok = worst_phi <= 1e-8 && err_half <= 1e-8 && err_quarter <= 1e-6;
    outcome(
        ok,
        format!(
            "kernel anchors: phi(0) rel err {worst_phi:.2e} [1e-8]; c1(2,0.5) rel err {err_half:.2e} [1e-8]; \
             c1(2,0.25) = {c_quarter:.12} vs quadrature {quad:.12}, rel err {err_quarter:.2e} [1e-6]"
        ),
    )
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for s in [0.25, 0.5] {
        let order = FracOrder::new(s, 2).unwrap();
        let ke = KernelEvaluator::new(order);
        let d = 1e-4;
        let ratio = ke.phi_raw(1.0 - d).unwrap() * d.powf(2.0 * s) / phi_boundary_constant(order);
        let dev = (ratio - 1.0).abs();
        ok &= dev <= 0.02;
        parts.push(format!("s = {s}: |ratio - 1| = {dev:.4e}"));
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs < 30.0;
    outcome(ok, format!("boundary asymptotics at 1 - r = 1e-4: {} [tol 0.02, {secs:.2}s < 30 s]", parts.join("; ")))
}

fn dyda_residual(op: &OperatorMatrix) -> f64 {
    let ke = KernelEvaluator::new(op.order());
    let u = dyda_profile(op.grid().clone(), op.order().s());
    extension_identity_residual(op, &ke, &u, &FullSpaceReference::Dyda).unwrap()
}

fn criterion_4(ops: &mut Ops) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for s in [0.25, 0.5] {
        let b = dyda_constant(FracOrder::new(s, 2).unwrap());
        let fine = dyda_residual(&ops.get(s, 2, 256).0);
        let coarse = dyda_residual(&ops.get(s, 2, 128).0);
        let ratio = coarse / fine;
        ok &= fine <= 1e-2 * b && ratio >= 1.7;
        parts.push(format!("s = {s}: residual {fine:.3e} [<= {:.3e}], ratio {ratio:.3} [>= 1.7]", 1e-2 * b));
    }
    outcome(ok, format!("extension identity oracle, N = 2, r <= 0.9: {}", parts.join("; ")))
}

fn two_minus_r2(op: &OperatorMatrix) -> RadialProfile {
    RadialProfile::from_fn(op.grid().clone(), |r| 2.0 - r * r)
}

fn criterion_5(ops: &mut Ops) -> Outcome {
    let (op, _) = ops.get(0.25, 2, 256);
    let f = two_minus_r2(&op);
    let rep = PoissonSolver::new(&op).solve_full(&f).unwrap();
    match shift_and_mass(&rep, &f) {
        Ok(sh) => {
            let rel = sh.mass_residual / sh.mass_scale;
            let d = sh.level;
            let ok = rel <= 1e-6 && (1.0 - 1e-8..1.5).contains(&d);
            outcome(ok, format!("mass identity F = 2 - r^2: |int u_f - int f| / int|f| = {rel:.3e} [1e-6]; d = {d:.10} in [1 - 1e-8, 1.5)"))
        }
        Err(e) => outcome(false, format!("mass identity: {e}")),
    }
}

fn criterion_6(ops: &mut Ops) -> Outcome {
    let (op, _) = ops.get(0.25, 2, 256);
    let f = two_minus_r2(&op);
    let st = exhaustion_study(&op, &f, &[0.5, 0.75, 0.9, 0.99]).unwrap();
    let ok = st.all_monotone() && st.distances_decreasing;
    let d: Vec<String> = st.distances.iter().map(|x| format!("{x:.6}")).collect();
    outcome(
        ok,
        format!(
            "exhaustion r0 in {{0.5, 0.75, 0.9, 0.99}}: monotone {:?} [slack 1e-8], sup distances [{}] strictly decreasing {}",
            st.monotone,
            d.join(", "),
            st.distances_decreasing
        ),
    )
}

fn criterion_7(ops: &mut Ops) -> Outcome {
    let (op, _) = ops.get(0.25, 2, 256);
    let one = RadialProfile::constant(op.grid().clone(), 1.0);
    let spec = SemilinearSpec::new(one.clone(), one.clone(), 2.0, 0.1);
    let rep = monotone_iteration(&op, &spec).unwrap();
    let err = sup(rep.solution.values().iter().map(|v| v - 0.1127017));
    let flags = barrier_and_minimality(&op, &spec, &rep);
    let level = boundary_level_bounds(&rep, &spec);
    let u_h1 = PoissonSolver::new(&op).solve_full(&one).unwrap().solution;
    let th = thresholds(&spec, &u_h1).unwrap();
    let below_barrier = rep.max_value() <= th.t_p && matches!(flags, Ok(ref f) if f.barrier == Some(true));
    let d = rep.solution.boundary_value();
    let d_ok = level.is_ok() && (0.1 - 1e-8..=1.0 + 1e-8).contains(&d);
    let th_ok = (th.t_p - 0.5).abs() <= 1e-12
        && (th.eps_p - 0.25).abs() <= 1e-12
        && (th.eps_0 - PI.powf(-0.5)).abs() <= 1e-12
        && (th.eps_star_upper - 1.0).abs() <= 1e-6;
    let ok = rep.converged() && err <= 1e-6 && rep.monotone() && below_barrier && d_ok && th_ok;
    outcome(
        ok,
        format!(
            "semilinear fixed point p = 2, eps = 0.1: max |u - 0.1127017| = {err:.2e} [1e-6]; min step {:.2e} [>= -1e-10]; \
             max u {:.7} [<= 0.5]; d = {d:.7} in [0.1, 1]; t_p = {}, eps_p = {}, eps_0 = {:.15}, eps* <= {:.10}",
            rep.min_increment(),
            rep.max_value(),
            th.t_p,
            th.eps_p,
            th.eps_0,
            th.eps_star_upper
        ),
    )
}

fn criterion_8(ops: &mut Ops) -> Outcome {
    let (op, _) = ops.get(0.25, 2, 256);
    let mut rng = CheckRng::new(SEED);
    let e = comparison_check(&op, 0.8, 20, &mut rng).unwrap();
    outcome(
        e.passed(),
        format!("comparison principle, 20 seeded sources, r0 = 0.8: min u = {:.3e} [>= -1e-10]", e.measured.unwrap()),
    )
}

fn criterion_9(ops: &mut Ops) -> Outcome {
    let (op, _) = ops.get(0.25, 2, 256);
    let mut rng = CheckRng::new(SEED);
    let sets = centered_sets(op.grid(), &ABP_FRACTIONS);
    let (e, rows) = abp_scaling_check(&op, &sets, ABP_TRIALS, &mut rng).unwrap();
    let span = rows.first().unwrap().measure / rows.last().unwrap().measure;
    let ratios: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.ratio)).collect();
    outcome(
        e.passed() && span >= 100.0,
        format!(
            "ABP boundedness, measures spanning {:.2} decades: ratios [{}], spread {:.3} [<= 10]",
            span.log10(),
            ratios.join(", "),
            e.measured.unwrap_or(f64::NAN)
        ),
    )
}

fn criterion_10(ops: &mut Ops) -> Outcome {
    let (op, _) = ops.get(0.25, 2, 256);
    let f = two_minus_r2(&op);
    let lin = PoissonSolver::new(&op).solve_full(&f).unwrap();
    let lin_flags = radial_monotonicity(&lin.solution, true);
    let h = two_minus_r2(&op);
    let mut spec = SemilinearSpec::new(h.clone(), h, 2.0, 0.0);
    spec.eps = 0.5 * spec.eps_p();
    let semi = monotone_iteration(&op, &spec).unwrap();
    let semi_flags = radial_monotonicity(&semi.solution, true);
    let ok = semi.converged()
        && lin_flags.nonincreasing
        && lin_flags.strict_interior == Some(true)
        && semi_flags.nonincreasing
        && semi_flags.strict_interior == Some(true);
    outcome(
        ok,
        format!(
            "radial monotonicity: linear max step {:.2e}, strict {:?}; semilinear (eps = {}) max step {:.2e}, strict {:?} [<= 1e-10]",
            lin_flags.max_increase, lin_flags.strict_interior, spec.eps, semi_flags.max_increase, semi_flags.strict_interior
        ),
    )
}

fn criterion_11() -> Outcome {
    let run = || {
        let out = Command::new(env!("CARGO_BIN_EXE_fraclap"))
            .args(["verify", "--s", "0.25", "--dim", "2", "--nodes", "256", "--seed", "42"])
            .output()
            .unwrap();
        (out.status.code(), out.stdout)
    };
    let (c1, a) = run();
    let (c2, b) = run();
    let ok = c1 == Some(0) && c2 == Some(0) && !a.is_empty() && a == b;
    outcome(
        ok,
        format!(
            "determinism: two verify runs, seed 42: exit codes {c1:?}/{c2:?}, {} report bytes, byte-identical {}",
            a.len(),
            a == b
        ),
    )
}

type Criterion = Box<dyn FnOnce(&mut Ops) -> Outcome>;

fn main() {
    let mut ops = Ops { cache: Vec::new() };
    let criteria: Vec<(usize, Criterion)> = vec![
        (1, Box::new(criterion_1)),
        (2, Box::new(|_| criterion_2())),
        (3, Box::new(|_| criterion_3())),
        (4, Box::new(criterion_4)),
        (5, Box::new(criterion_5)),
        (6, Box::new(criterion_6)),
        (7, Box::new(criterion_7)),
        (8, Box::new(criterion_8)),
        (9, Box::new(criterion_9)),
        (10, Box::new(criterion_10)),
        (11, Box::new(|_| criterion_11())),
    ];
    let mut failed = 0;
    for (n, check) in criteria {
        let o = check(&mut ops);
        if !o.ok {
            failed += 1;
        }
        println!("[{}] criterion {n:>2}: {}", if o.ok { "PASS" } else { "FAIL" }, o.text);
    }
    println!("acceptance: {} of 11 criteria passed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
