//! Property checks shared by the unit suites and the acceptance runner.
//! Each returns a [`Check`] with the worst margin seen.

use rand::Rng;
use swipt_core::pdd::{self, PddState};
use swipt_core::positioning::{self, CosineSum};
use swipt_core::qcqp::SolverOptions;
use swipt_core::wmmse::{self, AuxiliaryState};
use swipt_core::*;

use super::{fd_hessian, grid_search, min_eigenvalue, random_point, random_state, random_tiny_qcqp, random_unit_modulus, random_vector, rng};

#[derive(Clone, Debug)]
pub struct Check {
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }

    pub fn all(parts: Vec<(&str, Check)>) -> Self {
        let pass = parts.iter().all(|(_, c)| c.pass);
        let detail = parts.iter().map(|(name, c)| format!("{name}: {}", c.detail)).collect::<Vec<_>>().join("; ");
        Self { pass, detail }
    }
}

fn random_in_region<R: Rng>(rng: &mut R, config: &ScenarioConfig) -> Vector2<f64> {
    let half = config.region_size / 2.0;
    Vector2::new(rng.random_range(-half..half), rng.random_range(-half..half))
}

fn moved(point: &DesignPoint, m: usize, t: Vector2<f64>) -> DesignPoint {
    let mut p = point.clone();
    p.positions[m] = t;
    p
}

/// `Σ_i α_i w_i (|v_i|² Σ_k |h_iᴴ f_k|² − 2Re{v_i* h_iᴴ f_i})`, the part of
/// the weighted MSE that depends on the design.
fn rate_block_objective(point: &DesignPoint, channels: &ChannelSet, aux: &AuxiliaryState, config: &ScenarioConfig) -> f64 {
    let mse = wmmse::mse_values(point, channels, &aux.v, config);
    (0..config.num_idrs)
        .map(|i| config.rate_weights[i] * aux.w[i] * (mse[i] - aux.v[i].norm_sqr() * config.noise_powers[i] - 1.0))
        .sum()
}

/// After the closed-form `(v, w)` updates the WMMSE surrogate equals the
/// weighted sum-rate.
pub fn wmmse_tightness(states: u64) -> Check {
    let mut worst: f64 = 0.0;
    for s in 0..states {
        let mut cfg = ScenarioConfig::desk();
        cfg.power_budget = units::dbm_to_watts(20.0 + 5.0 * (s % 5) as f64);
        let st = random_state(&cfg, s);
        let surrogate = wmmse::surrogate_value(&st.point, &st.channels, &st.aux, &cfg);
        let rate = system::weighted_sum_rate(&st.point, &st.channels, &cfg);
        worst = worst.max((surrogate - rate).abs());
    }
    Check::new(worst <= 1e-10, format!("max |surrogate - rate| = {worst:.2e} over {states} states"))
}

/// The equalizer and weight updates beat perturbations of relative size at
/// most `1e-2` on their block objectives.
pub fn closed_form_updates(states: u64, perturbations: usize) -> Check {
    let mut violations = 0usize;
    let mut trials = 0usize;
    let mut r = rng(11);
    for s in 0..states {
        let cfg = ScenarioConfig::desk();
        let st = random_state(&cfg, s);
        let base = wmmse::mse_values(&st.point, &st.channels, &st.aux.v, &cfg);
        for i in 0..cfg.num_idrs {
            let v0 = st.aux.v[i];
            let w0 = st.aux.w[i];
            for _ in 0..perturbations {
                let size = 1e-2 * r.random_range(1e-3..=1.0);
                let delta = Complex64::from_polar(size * v0.norm(), r.random::<f64>() * std::f64::consts::TAU);
                let mut v = st.aux.v.clone();
                v[i] = v0 + delta;
                let mse = wmmse::mse_values(&st.point, &st.channels, &v, &cfg)[i];
                trials += 1;
                if mse < base[i] * (1.0 - 1e-13) {
                    violations += 1;
                }

                let w = w0 * (1.0 + size * if r.random::<bool>() { 1.0 } else { -1.0 });
                let objective = |w: f64| w.ln() - w * base[i];
                trials += 1;
                if objective(w) > objective(w0) + 1e-13 * objective(w0).abs().max(1.0) {
                    violations += 1;
                }
            }
        }
    }
    Check::new(violations == 0, format!("{violations} violations in {trials} perturbations"))
}

/// The projection onto unit modulus beats random unit-modulus candidates on
/// the `φ` block of the augmented Lagrangian.
pub fn phi_projection(candidates: usize) -> Check {
    let mut r = rng(13);
    let mut violations = 0;
    for trial in 0..10 {
        let n = 8 + trial;
        let theta = random_vector(&mut r, n) * Complex64::new(0.5, 0.0);
        let mut state = PddState {
            theta: theta.clone(),
            phi: random_unit_modulus(&mut r, n),
            lambda: random_vector(&mut r, n),
            rho: r.random_range(1e-3..1.0),
            delta: 1.0,
        };
        pdd::update_phi(&mut state);
        let best = state.penalty();
        for _ in 0..candidates / 10 {
            let mut other = state.clone();
            other.phi = random_unit_modulus(&mut r, n);
            if other.penalty() < best - 1e-12 * best.abs().max(1.0) {
                violations += 1;
            }
        }
        if state.phi.iter().any(|z| (z.norm() - 1.0).abs() > 1e-15) {
            violations += 1;
        }
    }
    Check::new(violations == 0, format!("{violations} candidates beat the projection out of {candidates}"))
}

fn within(lower: f64, upper: f64, slack: f64) -> bool {
    lower <= upper + slack * lower.abs().max(upper.abs())
}

/// Linearized EHR power in the beamformers stays below the true power and
/// touches it at the anchor.
pub fn beamformer_power_bound(points: usize) -> Check {
    let cfg = ScenarioConfig::desk();
    let mut r = rng(17);
    let mut bad = 0;
    let mut anchor_gap: f64 = 0.0;
    for s in 0..points {
        let st = random_state(&cfg, s as u64 % 10);
        let eq = system::equivalent_channels(&st.point, &st.channels);
        let other = random_point(&mut r, &cfg);
        let mut probe = st.point.clone();
        probe.info_beams = other.info_beams;
        probe.energy_beams = other.energy_beams;
        for (j, g) in eq.ehr.iter().enumerate() {
            let truth = eq.harvested_power(&probe, j);
            if !within(wmmse::linearized_power(g, &probe, &st.point), truth, 1e-9) {
                bad += 1;
            }
            let at_anchor = eq.harvested_power(&st.point, j);
            anchor_gap = anchor_gap.max((wmmse::linearized_power(g, &st.point, &st.point) - at_anchor).abs() / at_anchor);
        }
    }
    Check::new(bad == 0 && anchor_gap <= 1e-10, format!("{bad} violations, anchor gap {anchor_gap:.1e}"))
}

/// Linearized EHR power in the reflection vector.
pub fn phase_power_bound(points: usize) -> Check {
    let cfg = ScenarioConfig::desk();
    let mut r = rng(19);
    let mut bad = 0;
    let mut anchor_gap: f64 = 0.0;
    for s in 0..points {
        let st = random_state(&cfg, s as u64 % 10);
        let forms = pdd::build_quadratic_forms(&st.point, &st.channels, &st.aux, &cfg);
        let theta0 = st.point.reflection();
        let theta = if s % 2 == 0 {
            random_unit_modulus(&mut r, cfg.num_irs_elements)
        } else {
            random_vector(&mut r, cfg.num_irs_elements).map(|z| z / z.norm().max(1.0))
        };
        for (j, q) in forms.ehr_matrices.iter().enumerate() {
            let q0 = q * &theta0;
            let anchor_power = linalg::re_inner(&theta0, &q0);
            let lower = 2.0 * linalg::re_inner(&q0, &theta) - anchor_power;
            if !within(lower, forms.ehr_power(j, &theta), 1e-9) {
                bad += 1;
            }
            let truth = system::harvested_power(&st.point, &st.channels, j);
            anchor_gap = anchor_gap.max((anchor_power - truth).abs() / truth);
        }
    }
    Check::new(bad == 0 && anchor_gap <= 1e-10, format!("{bad} violations, anchor gap {anchor_gap:.1e}"))
}

/// Position-domain power minorizer and its quadratic lower bound.
pub fn position_power_bound(points: usize) -> Check {
    let cfg = ScenarioConfig::desk();
    let mut r = rng(23);
    let mut bad = 0;
    let mut anchor_gap: f64 = 0.0;
    for s in 0..points {
        let st = random_state(&cfg, s as u64 % 10);
        let m = s % cfg.num_bs_antennas;
        let t = random_in_region(&mut r, &cfg);
        for pm in positioning::build_power_surrogate(&st.point, &st.channels, m).unwrap() {
            let truth = system::harvested_power(&moved(&st.point, m, t), &st.channels, pm.ehr);
            let cosine = pm.value(&t);
            let quadratic = pm.quadratic_bound(&t);
            if !within(cosine, truth, 1e-9) || !within(quadratic, cosine, 1e-9) {
                bad += 1;
            }
            let a = pm.anchor;
            let gap = (pm.value(&a) - pm.anchor_power).abs().max((pm.quadratic_bound(&a) - pm.anchor_power).abs());
            anchor_gap = anchor_gap.max(gap / pm.anchor_power);
        }
    }
    Check::new(bad == 0 && anchor_gap <= 1e-10, format!("{bad} violations, anchor gap {anchor_gap:.1e}"))
}

/// Position-domain majorizer of the weighted-MSE block objective.
pub fn position_rate_bound(points: usize) -> Check {
    let cfg = ScenarioConfig::desk();
    let mut r = rng(29);
    let mut bad = 0;
    let mut anchor_gap: f64 = 0.0;
    for s in 0..points {
        let st = random_state(&cfg, s as u64 % 10);
        let m = s % cfg.num_bs_antennas;
        let t = random_in_region(&mut r, &cfg);
        let rm = positioning::rate_gradient_and_bound(&st.point, &st.channels, &st.aux, &cfg, m).unwrap();
        let truth = rate_block_objective(&moved(&st.point, m, t), &st.channels, &st.aux, &cfg);
        if !within(truth, rm.value(&t), 1e-9) || !within(rm.value(&t), rm.quadratic_bound(&t), 1e-9) {
            bad += 1;
        }
        let at_anchor = rate_block_objective(&st.point, &st.channels, &st.aux, &cfg);
        let gap = (rm.value(&rm.anchor) - at_anchor).abs().max((rm.quadratic_bound(&rm.anchor) - at_anchor).abs());
        anchor_gap = anchor_gap.max(gap / at_anchor.abs());
    }
    Check::new(bad == 0 && anchor_gap <= 1e-10, format!("{bad} violations, anchor gap {anchor_gap:.1e}"))
}

/// First-order expansion of the antenna spacing.
pub fn spacing_bound(points: usize) -> Check {
    let cfg = ScenarioConfig::desk();
    let mut r = rng(31);
    let mut bad = 0;
    let mut anchor_gap: f64 = 0.0;
    for s in 0..points {
        let positions = super::random_positions(&mut r, &cfg);
        let m = s % cfg.num_bs_antennas;
        let t = random_in_region(&mut r, &cfg);
        let cuts = positioning::linearize_spacing(&positions, m, cfg.min_spacing).unwrap();
        let others = positions.iter().enumerate().filter(|(k, _)| *k != m).map(|(_, p)| p);
        for ((e, bound), other) in cuts.iter().zip(others) {
            // ê·(t − t_s) lower-bounds ‖t − t_s‖
            let linear = e.dot(&t) - (bound - cfg.min_spacing);
            if !within(linear, (t - other).norm(), 1e-9) {
                bad += 1;
            }
            let at_anchor = e.dot(&positions[m]) - (bound - cfg.min_spacing);
            anchor_gap = anchor_gap.max((at_anchor - (positions[m] - other).norm()).abs() / cfg.min_spacing);
        }
    }
    Check::new(bad == 0 && anchor_gap <= 1e-10, format!("{bad} violations, anchor gap {anchor_gap:.1e}"))
}

/// Curvature bounds of the rate and power cosine sums against
/// finite-difference Hessians: `M ∓ ∇²` has minimum eigenvalue at least
/// `−1e-6 ‖M‖`.
pub fn curvature_bounds(positions: usize) -> Check {
    let cfg = ScenarioConfig::desk();
    let mut r = rng(37);
    let mut worst = f64::INFINITY;
    let mut check = |cos: &CosineSum, tau: &Vector2<f64>| {
        let bound = cos.curvature_bound();
        let h = fd_hessian(|x| cos.value(x), tau, 3e-5);
        let scale = bound.norm().max(1e-300);
        worst = worst.min(min_eigenvalue(&(bound - h)) / scale).min(min_eigenvalue(&(bound + h)) / scale);
    };
    for s in 0..positions {
        let st = random_state(&cfg, s as u64 % 10);
        let m = s % cfg.num_bs_antennas;
        let tau = random_in_region(&mut r, &cfg) / cfg.carrier_wavelength;
        let rm = positioning::rate_gradient_and_bound(&st.point, &st.channels, &st.aux, &cfg, m).unwrap();
        check(&rm.cosine, &tau);
        for pm in positioning::build_power_surrogate(&st.point, &st.channels, m).unwrap() {
            check(&pm.cosine, &tau);
        }
    }
    Check::new(worst >= -1e-6, format!("min normalized eigenvalue margin {worst:.2e}"))
}

/// Solver against the boundary-aware grid oracle on tiny random problems.
pub fn solver_oracle(problems: usize) -> Check {
    let options = SolverOptions::default();
    let mut r = rng(41);
    let mut worst_gap: f64 = 0.0;
    let mut worst_violation: f64 = 0.0;
    let mut failures = 0;
    for k in 0..problems {
        let problem = random_tiny_qcqp(&mut r, 1 + k % 2);
        let y = DVector::zeros(0);
        let Ok(sol) = problem.solve(&options) else {
            failures += 1;
            continue;
        };
        if !sol.is_optimal() {
            failures += 1;
        }
        worst_violation = worst_violation.max(problem.max_violation(&sol.complex, &y));
        match grid_search(&problem, 1.6, 7, 400) {
            Some((_, best)) => worst_gap = worst_gap.max((problem.objective_value(&sol.complex, &y) - best).abs()),
            None => failures += 1,
        }
    }
    Check::new(
        failures == 0 && worst_gap <= 1e-3 && worst_violation <= 1e-8,
        format!("max objective gap {worst_gap:.2e}, max violation {worst_violation:.2e}, {failures} failures"),
    )
}

/// Sum-rate and feasibility PDD runs from feasible starts: consensus at
/// exit, unit-modulus export and EHR feasibility of the accepted point.
pub fn pdd_consensus(seeds: u64) -> Check {
    let mut cfg = ScenarioConfig::desk();
    cfg.set_ehr_threshold(units::dbm_to_watts(-55.0));
    let mut worst_consensus: f64 = 0.0;
    let mut worst_modulus: f64 = 0.0;
    let mut violations = 0;
    let mut runs = 0;
    for seed in 0..seeds {
        let channels = scenario::synthesize_scenario_at(&cfg, seed).unwrap();
        let start = wmmse::initial_point(&channels, &cfg, seed);
        // The feasibility variant runs from the raw start, the sum-rate one
        // from a repaired start when there is one.
        let outcomes = {
            let mut out = vec![pdd::run_pdd_feasibility(&start, &channels, &cfg)];
            if let Some((_, p)) = super::feasible_start(&cfg, seed) {
                let v = wmmse::update_v(&p, &channels, &cfg);
                let aux = AuxiliaryState { w: wmmse::update_w(&p, &channels, &v, &cfg), v };
                let sumrate = pdd::run_pdd_sumrate(&p, &channels, &aux, &cfg);
                if let Some(q) = &sumrate.accepted {
                    if !system::constraint_report(q, &channels, &cfg).ehr_satisfied(&cfg) {
                        violations += 1;
                    }
                }
                out.push(sumrate);
            }
            out
        };
        for o in outcomes {
            runs += 1;
            worst_consensus = worst_consensus.max(o.consensus_inf);
            worst_modulus = o.phi.iter().map(|z| (z.norm() - 1.0).abs()).fold(worst_modulus, f64::max);
            if let Some(q) = &o.accepted {
                worst_modulus = q.reflection().iter().map(|z| (z.norm() - 1.0).abs()).fold(worst_modulus, f64::max);
            }
        }
    }
    Check::new(
        worst_consensus <= 1e-4 && worst_modulus <= 1e-15 && violations == 0,
        format!("{runs} runs, max |theta - phi|_inf {worst_consensus:.2e}, max ||phi|-1| {worst_modulus:.1e}, {violations} EHR violations"),
    )
}

/// The feasibility search: `β` nonincreasing over its trace, zero
/// thresholds feasible, thresholds above the screen rejected up front.
pub fn feasibility_trace(seeds: u64) -> Check {
    let mut cfg = ScenarioConfig::desk();
    cfg.power_budget = units::dbm_to_watts(30.0);
    cfg.set_ehr_threshold(units::dbm_to_watts(-55.0));
    let stop = feasibility::stop_rule(&cfg);
    let mut increases = 0;
    let mut verdicts = [0usize; 3];
    for seed in 0..seeds {
        let channels = scenario::synthesize_scenario_at(&cfg, seed).unwrap();
        let start = feasibility::feasibility_start(&channels, &cfg, seed);
        let v = feasibility::run_feasibility_from(&start, &channels, &cfg, &stop, wmmse::BlockMask::ALL).unwrap();
        let betas = v.betas();
        if betas.windows(2).any(|w| w[1] > w[0]) {
            increases += 1;
        }
        verdicts[v.verdict as usize] += 1;
        if v.verdict == feasibility::Verdict::Feasible && !system::constraint_report(&v.witness, &channels, &cfg).is_feasible(&cfg) {
            increases += 1;
        }
    }
    let traces = Check::new(
        increases == 0,
        format!("{increases} bad traces over {seeds} seeds (feasible/no point found/undecided = {verdicts:?})"),
    );

    let mut zero = cfg.clone();
    zero.set_ehr_threshold(0.0);
    let channels = scenario::synthesize_scenario_at(&zero, 0).unwrap();
    let v = feasibility::run_feasibility(&channels, &zero, &stop).unwrap();
    let zero_check = Check::new(v.verdict == feasibility::Verdict::Feasible, format!("verdict {}", v.verdict.as_str()));

    let mut above = cfg.clone();
    let bound = feasibility::screen_bound(&channels, &above).into_iter().fold(0.0, f64::max);
    above.set_ehr_threshold(1.01 * bound);
    let v = feasibility::run_feasibility(&channels, &above, &stop).unwrap();
    let screen_check = Check::new(
        v.verdict == feasibility::Verdict::Infeasible && v.screened && v.trace.len() == 1,
        format!("verdict {}, screened {}, {} trace entries", v.verdict.as_str(), v.screened, v.trace.len()),
    );
    Check::all(vec![("traces", traces), ("zero thresholds", zero_check), ("above screen", screen_check)])
}

/// One antenna, one element, one IDR and no EHR: every scheme ends at
/// `ln(1 + P_B |h|² / σ²)` with `h` the scalar channel of its final point.
pub fn degenerate_oracle(seeds: u64) -> Check {
    let mut cfg = ScenarioConfig::desk();
    cfg.num_bs_antennas = 1;
    cfg.num_irs_elements = 1;
    cfg.set_users(1, 0);
    if let Err(e) = cfg.validate() {
        return Check::new(false, format!("config rejected: {e}"));
    }
    let mut worst: f64 = 0.0;
    for seed in 0..seeds {
        let channels = scenario::synthesize_scenario_at(&cfg, seed).unwrap();
        for out in harness::run_schemes(&harness::Scheme::ALL, &channels, &cfg, seed).unwrap() {
            let Some(p) = out.point else { return Check::new(false, format!("{} found no point", out.scheme.label())) };
            let h = system::equivalent_channels(&p, &channels).idr[0][0];
            let analytic = (1.0 + cfg.power_budget * h.norm_sqr() / cfg.noise_powers[0]).ln();
            worst = worst.max((out.sum_rate - analytic).abs());
        }
    }
    Check::new(worst <= 1e-6, format!("max |rate - analytic| = {worst:.2e} over {seeds} draws and 4 schemes"))
}
