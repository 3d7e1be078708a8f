//! IRS phase optimization by penalty dual decomposition.
//!
//! The unit-modulus constraint is handled by a copy `φ` with `|φ_n| = 1`
//! coupled to the relaxed variable `θ` (`|θ_n| ≤ 1`) through an augmented
//! Lagrangian. The inner loop alternates a convex `θ` step (EHR powers
//! linearized at the current `θ`) with the closed-form projection for `φ`;
//! the outer loop either updates the multiplier or shrinks the penalty.
//!
//! Both the sum-rate variant and the feasibility variant (which minimizes
//! the worst EHR shortfall `β`) are provided.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::qcqp::{ComplexQuadratic, Constraint, ConvexSubproblem, Status};
use crate::scenario::{ChannelSet, ScenarioConfig};
use crate::system::{constraint_report_with, DesignPoint, Links};
use crate::wmmse::{surrogate_from, AuxiliaryState};

/// The WMMSE surrogate and EHR powers as quadratic forms in `θ = e^{jθ}`:
/// surrogate `= constant − (θᴴ Q₀ θ − 2Re{q₀ᴴ θ})` and `P_j = θᴴ Q₁,j θ`.
#[derive(Clone, Debug)]
pub struct QuadraticForms {
    pub objective_matrix: DMatrix<Complex64>,
    pub objective_linear: DVector<Complex64>,
    pub constant: f64,
    pub ehr_matrices: Vec<DMatrix<Complex64>>,
}

impl QuadraticForms {
    /// `θᴴ Q₀ θ − 2Re{q₀ᴴ θ}`.
    pub fn objective(&self, theta: &DVector<Complex64>) -> f64 {
        crate::linalg::quad_form(&self.objective_matrix, theta) - 2.0 * crate::linalg::re_inner(&self.objective_linear, theta)
    }

    pub fn surrogate(&self, theta: &DVector<Complex64>) -> f64 {
        self.constant - self.objective(theta)
    }

    pub fn ehr_power(&self, j: usize, theta: &DVector<Complex64>) -> f64 {
        crate::linalg::quad_form(&self.ehr_matrices[j], theta)
    }

    /// `max_j (P_E,j − P_j(θ))`.
    pub fn worst_shortfall(&self, theta: &DVector<Complex64>, config: &ScenarioConfig) -> f64 {
        (0..self.ehr_matrices.len())
            .map(|j| config.ehr_thresholds[j] - self.ehr_power(j, theta))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn forms_with(links: &Links, point: &DesignPoint, aux: Option<&AuxiliaryState>, config: &ScenarioConfig) -> QuadraticForms {
    let n = config.num_irs_elements;
    let g = links.bs_irs(&point.positions);
    let transmitted: Vec<DVector<Complex64>> = point.beams().map(|f| &g * f).collect();
    // e = Diag(conj a) r, so that r_effᴴ f = eᴴ θ
    let cascade = |r: &DVector<Complex64>, a: &DVector<Complex64>| r.zip_map(a, |x, y| x * y.conj());

    let mut q0 = DMatrix::zeros(n, n);
    let mut lin = DVector::zeros(n);
    let mut constant = 0.0;
    if let Some(aux) = aux {
        for i in 0..config.num_idrs {
            let alpha_w = config.rate_weights[i] * aux.w[i];
            let scale = alpha_w * aux.v[i].norm_sqr();
            for (k, a) in transmitted.iter().enumerate() {
                let e = cascade(&links.idr[i], a);
                q0 += (&e * e.adjoint()) * Complex64::new(scale, 0.0);
                if k == i {
                    lin += e * (aux.v[i] * alpha_w);
                }
            }
            constant += config.rate_weights[i]
                * (aux.w[i].ln() - aux.w[i] * (aux.v[i].norm_sqr() * config.noise_powers[i] + 1.0) + 1.0);
        }
    }
    let ehr_matrices = links
        .ehr
        .iter()
        .map(|r| {
            let mut q = DMatrix::zeros(n, n);
            for a in &transmitted {
                let d = cascade(r, a);
                q += &d * d.adjoint();
            }
            q
        })
        .collect();
    QuadraticForms { objective_matrix: q0, objective_linear: lin, constant, ehr_matrices }
}

/// Builds the phase-block quadratic forms at `point`.
pub fn build_quadratic_forms(
    point: &DesignPoint,
    channels: &ChannelSet,
    aux: &AuxiliaryState,
    config: &ScenarioConfig,
) -> QuadraticForms {
    forms_with(&Links::new(channels), point, Some(aux), config)
}

/// Iterates of the penalty dual decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct PddState {
    pub theta: DVector<Complex64>,
    pub phi: DVector<Complex64>,
    pub lambda: DVector<Complex64>,
    pub rho: f64,
    pub delta: f64,
}

impl PddState {
    pub fn new(start: &DVector<Complex64>, config: &ScenarioConfig) -> Self {
        let s = &config.solver.pdd;
        Self {
            theta: start.clone(),
            phi: start.clone(),
            lambda: DVector::zeros(start.len()),
            rho: s.rho_initial,
            delta: s.delta_scale * (start.len() as f64).sqrt(),
        }
    }

    pub fn consensus_inf(&self) -> f64 {
        (&self.theta - &self.phi).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn consensus(&self) -> f64 {
        (&self.theta - &self.phi).norm()
    }

    /// `Re{λᴴ(θ − φ)} + ‖θ − φ‖² / (2ρ)`.
    pub fn penalty(&self) -> f64 {
        let diff = &self.theta - &self.phi;
        crate::linalg::re_inner(&self.lambda, &diff) + diff.norm_squared() / (2.0 * self.rho)
    }
}

/// What the `θ` step minimizes besides the penalty term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PddMode {
    /// Maximize the WMMSE surrogate subject to the EHR constraints.
    SumRate,
    /// Minimize the worst EHR shortfall, measured in units of `reference`
    /// watts.
    Feasibility { reference: f64 },
}

/// One `θ` step at anchor `state.theta`. Returns `None` if the solver fails,
/// and in feasibility mode also the scaled `β` it reached.
pub fn solve_theta_subproblem(
    forms: &QuadraticForms,
    state: &PddState,
    config: &ScenarioConfig,
    mode: PddMode,
) -> Option<(DVector<Complex64>, Option<f64>)> {
    let n = state.theta.len();
    let inv = 1.0 / (2.0 * state.rho);
    let shifted = &state.phi - &state.lambda * Complex64::new(state.rho, 0.0);
    let target = &shifted * Complex64::new(inv, 0.0);
    // Carry the constant of ‖θ − shifted‖²/(2ρ) so the objective stays small
    // near the optimum; the solver's gap test is relative to its value.
    let constant = shifted.norm_squared() * inv;
    let identity = DMatrix::<Complex64>::identity(n, n) * Complex64::new(inv, 0.0);
    let (matrix, linear) = match mode {
        PddMode::SumRate => (&forms.objective_matrix + identity, &forms.objective_linear + target),
        PddMode::Feasibility { .. } => (identity, target),
    };
    let real_dim = usize::from(matches!(mode, PddMode::Feasibility { .. }));
    let anchor = &state.theta;
    let mut problem = ConvexSubproblem::new(n, real_dim).minimize_complex(ComplexQuadratic::new(matrix, linear, constant));
    let mut worst = f64::NEG_INFINITY;
    for (j, q1) in forms.ehr_matrices.iter().enumerate() {
        // P_E − (2Re{θ0ᴴ Q₁ θ} − θ0ᴴ Q₁ θ0) ≤ β
        let q_anchor = q1 * anchor;
        let anchor_power = crate::linalg::re_inner(anchor, &q_anchor);
        let threshold = config.ehr_thresholds[j];
        worst = worst.max(threshold - anchor_power);
        let a = q_anchor * Complex64::new(-2.0, 0.0);
        let b = -threshold - anchor_power;
        problem = match mode {
            PddMode::SumRate => problem.subject_to(Constraint::Affine { complex: a, real: DVector::zeros(0), bound: b }),
            PddMode::Feasibility { reference } => problem.subject_to(Constraint::Affine {
                complex: a / Complex64::new(reference, 0.0),
                real: DVector::from_element(1, -1.0),
                bound: b / reference,
            }),
        };
    }
    for k in 0..n {
        problem = problem.subject_to(Constraint::NormBall {
            indices: vec![k],
            center: DVector::zeros(1),
            radius: 1.0,
        });
    }
    let real_start = match mode {
        PddMode::SumRate => DVector::zeros(0),
        PddMode::Feasibility { reference } => {
            problem = problem.minimize_real(crate::qcqp::RealQuadratic::linear(DVector::from_element(1, 1.0), 0.0));
            DVector::from_element(1, worst / reference + 1.0)
        }
    };
    let problem = problem.starting_at(anchor.clone(), real_start);
    // The consensus gap can only shrink to about the square root of the
    // solver's relative gap, so this subproblem is solved tighter.
    let options = crate::qcqp::SolverOptions { tolerance: config.solver.qcqp.tolerance * 1e-4, ..config.solver.qcqp };
    let sol = problem.solve(&options).ok()?;
    match sol.report.status {
        Status::Optimal | Status::MaxIterations => {
            let beta = (real_dim == 1).then(|| sol.real[0]);
            Some((sol.complex, beta))
        }
        Status::Infeasible | Status::NumericalFailure => None,
    }
}

/// `φ = exp(j∠(θ + ρλ))`, keeping the previous entry where the argument
/// vanishes.
pub fn update_phi(state: &mut PddState) {
    let rho = Complex64::new(state.rho, 0.0);
    for n in 0..state.phi.len() {
        let z = state.theta[n] + rho * state.lambda[n];
        if z.norm() > 0.0 {
            state.phi[n] = z / z.norm();
        }
    }
}

/// Multiplier step if the consensus gap is below `δ`, otherwise penalty
/// shrink; `δ` shrinks either way.
pub fn outer_update(state: &mut PddState, config: &ScenarioConfig) {
    let s = &config.solver.pdd;
    if state.consensus_inf() <= state.delta {
        let step = (&state.theta - &state.phi) / Complex64::new(state.rho, 0.0);
        state.lambda += step;
    } else {
        state.rho *= s.rho_shrink;
    }
    state.delta *= s.delta_shrink;
}

#[derive(Clone, Debug, PartialEq)]
pub struct PddRecord {
    pub outer: usize,
    pub inner: usize,
    /// Objective of the current mode plus the penalty term.
    pub lagrangian: f64,
    /// `‖θ − φ‖∞`.
    pub consensus: f64,
    pub rho: f64,
    /// Worst EHR shortfall at `φ`, in watts.
    pub beta: f64,
}

#[derive(Clone, Debug)]
pub struct PddOutcome {
    /// The final unit-modulus iterate `φ`.
    pub phi: DVector<Complex64>,
    /// The design point to continue from, if some unit-modulus iterate
    /// improved on the incoming one without breaking feasibility.
    pub accepted: Option<DesignPoint>,
    /// `‖θ − φ‖∞` at exit.
    pub consensus_inf: f64,
    pub outer_iterations: usize,
    pub converged: bool,
    pub trace: Vec<PddRecord>,
}

impl PddOutcome {
    /// Columns `outer,inner,lagrangian,consensus,rho,beta`.
    pub fn write_csv<W: Write>(&self, out: W) -> crate::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["outer", "inner", "lagrangian", "consensus", "rho", "beta"])?;
        for r in &self.trace {
            w.write_record([
                r.outer.to_string(),
                r.inner.to_string(),
                format!("{:.12e}", r.lagrangian),
                format!("{:.6e}", r.consensus),
                format!("{:.6e}", r.rho),
                format!("{:.6e}", r.beta),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> crate::Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

fn run(
    links: &Links,
    point: &DesignPoint,
    aux: Option<&AuxiliaryState>,
    config: &ScenarioConfig,
    mode: PddMode,
) -> PddOutcome {
    let s = config.solver.pdd;
    let forms = forms_with(links, point, aux, config);
    let start = point.reflection();
    let mut state = PddState::new(&start, config);

    let with_phases = |phi: &DVector<Complex64>| {
        let mut p = point.clone();
        p.set_reflection(phi);
        p
    };
    // Candidates are scored on the true objective of the block.
    let score = |p: &DesignPoint| -> Option<f64> {
        let eq = links.equivalent(p);
        match mode {
            PddMode::SumRate => {
                let report = constraint_report_with(&eq, p, config);
                report.ehr_satisfied(config).then(|| surrogate_from(&eq, p, aux.expect("sum-rate mode needs (v, w)"), config))
            }
            PddMode::Feasibility { .. } => Some(-constraint_report_with(&eq, p, config).worst_ehr_shortfall()),
        }
    };
    let incoming = score(point);
    let mut best: Option<(f64, DesignPoint)> = None;

    let value = |state: &PddState, beta: Option<f64>| match mode {
        PddMode::SumRate => forms.objective(&state.theta) + state.penalty(),
        PddMode::Feasibility { .. } => beta.unwrap_or(0.0) + state.penalty(),
    };

    let mut trace = Vec::new();
    let mut outer_iterations = 0;
    let mut converged = false;
    for outer in 0..s.max_outer_iterations {
        outer_iterations = outer + 1;
        let mut previous: Option<f64> = None;
        for inner in 0..s.max_inner_iterations {
            let mut beta = None;
            if let Some((theta, b)) = solve_theta_subproblem(&forms, &state, config, mode) {
                state.theta = theta;
                beta = b;
            }
            update_phi(&mut state);
            let current = value(&state, beta);
            trace.push(PddRecord {
                outer,
                inner,
                lagrangian: current,
                consensus: state.consensus_inf(),
                rho: state.rho,
                beta: forms.worst_shortfall(&state.phi, config),
            });
            let done = previous.is_some_and(|p| (current - p).abs() <= s.inner_tolerance * p.abs().max(1e-300));
            previous = Some(current);
            if done {
                break;
            }
        }
        let candidate = with_phases(&state.phi);
        if let Some(v) = score(&candidate) {
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, candidate));
            }
        }
        if state.consensus() <= s.consensus_tolerance {
            converged = true;
            break;
        }
        outer_update(&mut state, config);
    }
    let accepted = match (best, incoming) {
        (Some((v, p)), Some(old)) if v >= old => Some(p),
        (Some((_, p)), None) => Some(p),
        _ => None,
    };
    PddOutcome {
        consensus_inf: state.consensus_inf(),
        phi: state.phi,
        accepted,
        outer_iterations,
        converged,
        trace,
    }
}

pub(crate) fn sumrate_step(links: &Links, point: &DesignPoint, aux: &AuxiliaryState, config: &ScenarioConfig) -> PddOutcome {
    run(links, point, Some(aux), config, PddMode::SumRate)
}

pub(crate) fn feasibility_step(links: &Links, point: &DesignPoint, config: &ScenarioConfig, reference: f64) -> PddOutcome {
    run(links, point, None, config, PddMode::Feasibility { reference })
}

/// Phase update for the sum-rate problem with the other blocks fixed.
pub fn run_pdd_sumrate(point: &DesignPoint, channels: &ChannelSet, aux: &AuxiliaryState, config: &ScenarioConfig) -> PddOutcome {
    sumrate_step(&Links::new(channels), point, aux, config)
}

/// Phase update minimizing the worst EHR shortfall with the other blocks
/// fixed.
pub fn run_pdd_feasibility(point: &DesignPoint, channels: &ChannelSet, config: &ScenarioConfig) -> PddOutcome {
    let reference = config.max_ehr_threshold().max(f64::MIN_POSITIVE);
    feasibility_step(&Links::new(channels), point, config, reference)
}
