//! Log-barrier interior-point method for convex quadratic programs with
//! convex quadratic inequality constraints, in real variables.
//!
//! Each constraint `f_i(z) ≤ 0` is divided by its largest coefficient and
//! the objective by its largest non-constant coefficient before iterating,
//! so tolerances are relative. A phase-I problem `min s s.t. f_i(z) ≤ s`
//! produces a strictly feasible start when the given one is not.

use nalgebra::{DMatrix, DVector};

use super::{Curvature, RealFunction, RealProblem, SolverOptions, Status};

const MU: f64 = 20.0;
const ARMIJO: f64 = 0.01;
const INNER_ITERATIONS: usize = 50;
/// Half the squared Newton decrement at which centering stops.
const NEWTON_TOLERANCE: f64 = 1e-10;
const BACKTRACK: f64 = 0.5;
/// Normalized margin below which a start point is treated as on the boundary.
const STRICT_MARGIN: f64 = 1e-7;
/// Phase I searches within this many multiples of `1 + ‖z0‖` of the start.
const PHASE_ONE_RADIUS: f64 = 1e6;
const SUBGRADIENT_ITERATIONS: usize = 3000;

#[derive(Clone, Debug)]
pub struct IpmOutcome {
    pub z: DVector<f64>,
    /// Multipliers of the original (unnormalized) constraints.
    pub multipliers: DVector<f64>,
    pub status: Status,
    pub iterations: usize,
}

struct Normalized {
    objective: RealFunction,
    constraints: Vec<RealFunction>,
    /// Index into the original constraint list, and the scale that was divided out.
    origin: Vec<(usize, f64)>,
    objective_scale: f64,
}

fn normalize(problem: &RealProblem) -> Result<Normalized, ()> {
    let obj_mag = {
        let mut f = problem.objective.clone();
        f.constant = 0.0;
        f.magnitude()
    };
    let objective_scale = if obj_mag > 0.0 { obj_mag } else { 1.0 };
    let mut constraints = Vec::new();
    let mut origin = Vec::new();
    for (i, c) in problem.constraints.iter().enumerate() {
        if c.is_constant() {
            if c.constant > 0.0 {
                return Err(());
            }
            continue;
        }
        let s = c.magnitude();
        constraints.push(c.scaled(1.0 / s));
        origin.push((i, s));
    }
    Ok(Normalized { objective: problem.objective.scaled(1.0 / objective_scale), constraints, origin, objective_scale })
}

/// Solves the real problem starting from `z0` (which need not be feasible).
pub fn solve_real(problem: &RealProblem, z0: &DVector<f64>, options: &SolverOptions) -> IpmOutcome {
    let m_orig = problem.constraints.len();
    let Ok(norm) = normalize(problem) else {
        return IpmOutcome {
            z: z0.clone(),
            multipliers: DVector::zeros(m_orig),
            status: Status::Infeasible,
            iterations: 0,
        };
    };
    let to_original = |lambda: &DVector<f64>| {
        let mut out = DVector::zeros(m_orig);
        for (k, (i, s)) in norm.origin.iter().enumerate() {
            out[*i] = lambda[k] * norm.objective_scale / s;
        }
        out
    };

    if norm.constraints.is_empty() {
        let (z, status) = unconstrained(&norm.objective, z0, options);
        return IpmOutcome { z, multipliers: DVector::zeros(m_orig), status, iterations: 1 };
    }

    let mut iterations = 0;
    let fmax = norm.constraints.iter().map(|c| c.value(z0)).fold(f64::NEG_INFINITY, f64::max);
    let start = if fmax < -STRICT_MARGIN {
        z0.clone()
    } else {
        match phase_one(&norm.constraints, z0, fmax, options) {
            (Some(z), it) => {
                iterations += it.0;
                z
            }
            (None, it) => {
                return IpmOutcome {
                    z: z0.clone(),
                    multipliers: DVector::zeros(m_orig),
                    status: if it.1 { Status::Infeasible } else { Status::NumericalFailure },
                    iterations: iterations + it.0,
                };
            }
        }
    };

    let run = barrier(&norm.objective, &norm.constraints, start, options, None);
    iterations += run.iterations;
    let mut z = run.z;
    if run.status == Status::NumericalFailure {
        if let Some(candidate) = subgradient_fallback(&norm.objective, &norm.constraints, &z, options.tolerance) {
            if norm.objective.value(&candidate) < norm.objective.value(&z) {
                z = candidate;
            }
        }
    }
    IpmOutcome { z, multipliers: to_original(&run.lambda), status: run.status, iterations }
}

fn unconstrained(objective: &RealFunction, z0: &DVector<f64>, options: &SolverOptions) -> (DVector<f64>, Status) {
    let d = z0.len();
    let mut k = DMatrix::zeros(d, d);
    objective.add_hessian(1.0, &mut k);
    let g = objective.gradient(z0);
    let svd = k.clone().svd(true, true);
    let step = match svd.solve(&(-&g), 1e-12 * svd.singular_values.max().max(1e-300)) {
        Ok(s) => s,
        Err(_) => return (z0.clone(), Status::NumericalFailure),
    };
    let z = z0 + step;
    let residual = objective.gradient(&z).amax();
    if residual <= options.tolerance * g.amax().max(1.0) {
        (z, Status::Optimal)
    } else {
        // Gradient outside the range of the Hessian: unbounded below.
        (z0.clone(), Status::NumericalFailure)
    }
}

/// Returns a strictly feasible point, or `None` with (iterations, certified
/// infeasible).
fn phase_one(
    constraints: &[RealFunction],
    z0: &DVector<f64>,
    fmax: f64,
    options: &SolverOptions,
) -> (Option<DVector<f64>>, (usize, bool)) {
    let d = z0.len();
    let mut cons: Vec<RealFunction> = constraints
        .iter()
        .map(|c| {
            let mut e = c.extended(1);
            e.linear[d] = -1.0;
            e
        })
        .collect();
    // s >= -1 keeps the phase-I problem bounded.
    let mut lower = RealFunction::zero(d + 1);
    lower.linear[d] = -1.0;
    lower.constant = -1.0;
    cons.push(lower);
    // Variables that no constraint bounds would otherwise drift to infinity.
    let radius = PHASE_ONE_RADIUS * (1.0 + z0.norm());
    let mut ball = RealFunction::zero(d + 1);
    ball.curvature = Curvature::Diagonal((0..d).map(|k| (k, 1.0)).collect());
    ball.linear.rows_mut(0, d).copy_from(&(z0 * -2.0));
    ball.constant = z0.norm_squared() - radius * radius;
    cons.push(ball);
    let mut objective = RealFunction::zero(d + 1);
    objective.linear[d] = 1.0;
    let mut w0 = z0.clone().resize_vertically(d + 1, 0.0);
    w0[d] = fmax.max(-0.5) + 1.0;
    let run = barrier(&objective, &cons, w0, options, Some(d));
    let s = run.z[d];
    if s < 0.0 {
        let z = run.z.rows(0, d).into_owned();
        if constraints.iter().all(|c| c.value(&z) < 0.0) {
            return (Some(z), (run.iterations, false));
        }
    }
    (None, (run.iterations, run.status == Status::Optimal))
}

struct Run {
    z: DVector<f64>,
    lambda: DVector<f64>,
    status: Status,
    iterations: usize,
}

/// `t f0(z) − Σ log(−f_i(z))`, or `None` outside the strict interior.
fn barrier_value(objective: &RealFunction, constraints: &[RealFunction], z: &DVector<f64>, t: f64) -> Option<f64> {
    let mut v = t * objective.value(z);
    for c in constraints {
        let fi = c.value(z);
        if fi >= 0.0 || !fi.is_finite() {
            return None;
        }
        v -= (-fi).ln();
    }
    Some(v)
}

/// Log-barrier method: Newton centering for increasing `t`. `z` must be
/// strictly feasible. With `phase_one_slack`, stops as soon as a centered
/// point has the slack variable comfortably negative.
fn barrier(
    objective: &RealFunction,
    constraints: &[RealFunction],
    mut z: DVector<f64>,
    options: &SolverOptions,
    phase_one_slack: Option<usize>,
) -> Run {
    let m = constraints.len();
    let d = z.len();
    let tol = options.tolerance;
    let mut iterations = 0;

    // Start where objective and barrier gradients are of similar size.
    let mut t = {
        let g0 = objective.gradient(&z).norm();
        let mut gb = DVector::zeros(d);
        for c in constraints {
            gb.axpy(1.0 / -c.value(&z), &c.gradient(&z), 1.0);
        }
        if g0 > 0.0 {
            (gb.norm() / g0).clamp(1e-2, 1e4)
        } else {
            1.0
        }
    };

    let status = 'outer: loop {
        let mut stalled = false;
        for _ in 0..INNER_ITERATIONS {
            if iterations >= options.max_iterations {
                break 'outer Status::MaxIterations;
            }
            iterations += 1;
            let mut h = DMatrix::zeros(d, d);
            objective.add_hessian(t, &mut h);
            let mut g = objective.gradient(&z) * t;
            for c in constraints {
                let fi = c.value(&z);
                let a = c.gradient(&z);
                c.add_hessian(1.0 / -fi, &mut h);
                h.ger(1.0 / (fi * fi), &a, &a, 1.0);
                g.axpy(1.0 / -fi, &a, 1.0);
            }
            let Some(dz) = solve_spd(h, &(-&g)) else {
                stalled = true;
                break;
            };
            let slope = g.dot(&dz);
            if -slope / 2.0 <= NEWTON_TOLERANCE {
                break;
            }
            let phi0 = barrier_value(objective, constraints, &z, t).unwrap_or(f64::INFINITY);
            let mut s = 1.0;
            let mut moved = false;
            while s > 1e-14 {
                let trial = &z + &dz * s;
                if let Some(phi) = barrier_value(objective, constraints, &trial, t) {
                    if phi <= phi0 + ARMIJO * s * slope {
                        z = trial;
                        moved = true;
                        break;
                    }
                }
                s *= BACKTRACK;
            }
            if !moved {
                stalled = true;
                break;
            }
        }

        let gap = m as f64 / t;
        if let Some(k) = phase_one_slack {
            let slack = z[k];
            if slack < 0.0 && (gap <= 0.5 * slack.abs() || slack <= -0.5) {
                break Status::Optimal;
            }
        }
        if gap <= tol * objective.value(&z).abs().max(1.0) {
            break Status::Optimal;
        }
        if stalled {
            break Status::NumericalFailure;
        }
        t *= MU;
    };
    let lambda = DVector::from_iterator(m, constraints.iter().map(|c| 1.0 / (-t * c.value(&z))));
    Run { z, lambda, status, iterations }
}

/// Cholesky solve with escalating diagonal regularization.
fn solve_spd(k: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = k.diagonal().amax().max(1e-300);
    let mut delta = 0.0;
    for _ in 0..8 {
        let mut kk = k.clone();
        if delta > 0.0 {
            for i in 0..kk.nrows() {
                kk[(i, i)] += delta;
            }
        }
        if let Some(ch) = kk.cholesky() {
            let x = ch.solve(rhs);
            if x.iter().all(|v| v.is_finite()) {
                return Some(x);
            }
        }
        delta = if delta == 0.0 { 1e-14 * scale } else { delta * 100.0 };
    }
    None
}

/// Diminishing-step subgradient method on the exact penalty
/// `f0 + μ Σ max(0, f_i)`; returns the best point with all `f_i ≤ tol`.
fn subgradient_fallback(
    objective: &RealFunction,
    constraints: &[RealFunction],
    z0: &DVector<f64>,
    tol: f64,
) -> Option<DVector<f64>> {
    let penalty = 1e3 * (1.0 + objective.gradient(z0).amax());
    let radius = 0.1 * (1.0 + z0.amax());
    let mut z = z0.clone();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for k in 0..SUBGRADIENT_ITERATIONS {
        let mut g = objective.gradient(&z);
        let mut worst = f64::NEG_INFINITY;
        for c in constraints {
            let v = c.value(&z);
            worst = worst.max(v);
            if v > 0.0 {
                g.axpy(penalty, &c.gradient(&z), 1.0);
            }
        }
        if worst <= tol {
            let val = objective.value(&z);
            if best.as_ref().is_none_or(|(b, _)| val < *b) {
                best = Some((val, z.clone()));
            }
        }
        let gn = g.norm();
        if gn == 0.0 {
            break;
        }
        z.axpy(-radius / ((k + 1) as f64).sqrt() / gn, &g, 1.0);
    }
    best.map(|(_, z)| z)
}
