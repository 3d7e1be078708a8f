//! Weighted-MMSE block coordinate descent for the weighted sum-rate.
//!
//! With receive equalizers `v_i` and MSE weights `w_i`, each IDR's rate is
//! lower-bounded by `R_i = ln w_i − w_i MSE_i + 1`, tight when `v` and `w`
//! take their closed-form values. The outer loop updates `v`, `w`, the
//! beamformers, the IRS phases ([`crate::pdd`]) and each antenna position
//! ([`crate::positioning`]) in turn; every block is an exact minimization or
//! an MM step, so the surrogate never decreases.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::pdd;
use crate::positioning;
use crate::qcqp::{ComplexQuadratic, Constraint, ConvexSubproblem};
use crate::scenario::{initial_antenna_layout, scenario_rng, ChannelSet, RngPurpose, ScenarioConfig};
use crate::system::{constraint_report_with, ConstraintReport, DesignPoint, EquivalentChannels, Links};

/// Receive equalizers and MSE weights.
#[derive(Clone, Debug, PartialEq)]
pub struct AuxiliaryState {
    pub v: Vec<Complex64>,
    pub w: Vec<f64>,
}

/// Which of the optional blocks are optimized. Beamformers are always
/// optimized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockMask {
    pub phases: bool,
    pub positions: bool,
}

impl BlockMask {
    pub const ALL: BlockMask = BlockMask { phases: true, positions: true };
    pub const BEAMFORMERS_ONLY: BlockMask = BlockMask { phases: false, positions: false };
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopRule {
    /// Relative surrogate change below which the loop stops.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl StopRule {
    pub fn from_config(config: &ScenarioConfig) -> Self {
        Self { tolerance: config.solver.bcd_tolerance, max_iterations: config.solver.bcd_max_iterations }
    }
}

fn equalizer(eq: &EquivalentChannels, point: &DesignPoint, noise: f64, i: usize) -> Complex64 {
    eq.idr[i].dotc(&point.info_beams[i]) / eq.idr_received_power(point, noise, i)
}

/// `MSE_i = |v|² (interference + noise) + |1 − v* h_iᴴ f_I,i|²`.
fn mse(eq: &EquivalentChannels, point: &DesignPoint, v: Complex64, noise: f64, i: usize) -> f64 {
    let h = &eq.idr[i];
    let mut other = noise;
    let mut signal = Complex64::new(0.0, 0.0);
    for (k, f) in point.beams().enumerate() {
        let r = h.dotc(f);
        if k == i {
            signal = r;
        } else {
            other += r.norm_sqr();
        }
    }
    v.norm_sqr() * other + (Complex64::new(1.0, 0.0) - v.conj() * signal).norm_sqr()
}

pub(crate) fn v_from(eq: &EquivalentChannels, point: &DesignPoint, config: &ScenarioConfig) -> Vec<Complex64> {
    (0..config.num_idrs).map(|i| equalizer(eq, point, config.noise_powers[i], i)).collect()
}

pub(crate) fn w_from(eq: &EquivalentChannels, point: &DesignPoint, v: &[Complex64], config: &ScenarioConfig) -> Vec<f64> {
    (0..config.num_idrs).map(|i| 1.0 / mse(eq, point, v[i], config.noise_powers[i], i)).collect()
}

pub(crate) fn aux_from(eq: &EquivalentChannels, point: &DesignPoint, config: &ScenarioConfig) -> AuxiliaryState {
    let v = v_from(eq, point, config);
    let w = w_from(eq, point, &v, config);
    AuxiliaryState { v, w }
}

pub(crate) fn surrogate_from(eq: &EquivalentChannels, point: &DesignPoint, aux: &AuxiliaryState, config: &ScenarioConfig) -> f64 {
    (0..config.num_idrs)
        .map(|i| {
            let m = mse(eq, point, aux.v[i], config.noise_powers[i], i);
            config.rate_weights[i] * (aux.w[i].ln() - aux.w[i] * m + 1.0)
        })
        .sum()
}

/// Per-IDR MSE for given equalizers.
pub fn mse_values(point: &DesignPoint, channels: &ChannelSet, v: &[Complex64], config: &ScenarioConfig) -> Vec<f64> {
    let eq = Links::new(channels).equivalent(point);
    (0..config.num_idrs).map(|i| mse(&eq, point, v[i], config.noise_powers[i], i)).collect()
}

/// MMSE receive equalizers.
pub fn update_v(point: &DesignPoint, channels: &ChannelSet, config: &ScenarioConfig) -> Vec<Complex64> {
    v_from(&Links::new(channels).equivalent(point), point, config)
}

/// MSE weights `w_i = 1 / MSE_i`.
pub fn update_w(point: &DesignPoint, channels: &ChannelSet, v: &[Complex64], config: &ScenarioConfig) -> Vec<f64> {
    w_from(&Links::new(channels).equivalent(point), point, v, config)
}

/// `Σ_i α_i (ln w_i − w_i MSE_i + 1)`.
pub fn surrogate_value(point: &DesignPoint, channels: &ChannelSet, aux: &AuxiliaryState, config: &ScenarioConfig) -> f64 {
    surrogate_from(&Links::new(channels).equivalent(point), point, aux, config)
}

/// The convex beamforming subproblem at anchor `point`: the WMMSE objective
/// in the stacked beams, each EHR power linearized at the anchor, and the
/// power budget.
pub fn beamformer_subproblem(
    eq: &EquivalentChannels,
    point: &DesignPoint,
    aux: &AuxiliaryState,
    config: &ScenarioConfig,
) -> ConvexSubproblem {
    let m = config.num_bs_antennas;
    let k_total = config.num_beams();
    let dim = m * k_total;
    let mut block = nalgebra::DMatrix::<Complex64>::zeros(m, m);
    for i in 0..config.num_idrs {
        let c = config.rate_weights[i] * aux.w[i] * aux.v[i].norm_sqr();
        block += (&eq.idr[i] * eq.idr[i].adjoint()) * Complex64::new(c, 0.0);
    }
    let mut q = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
    for k in 0..k_total {
        q.view_mut((k * m, k * m), (m, m)).copy_from(&block);
    }
    let mut linear = DVector::<Complex64>::zeros(dim);
    for i in 0..config.num_idrs {
        let c = aux.v[i] * (config.rate_weights[i] * aux.w[i]);
        linear.rows_mut(i * m, m).copy_from(&(&eq.idr[i] * c));
    }
    let anchor = point.stacked();
    let mut problem = ConvexSubproblem::new(dim, 0)
        .minimize_complex(ComplexQuadratic::new(q, linear, 0.0))
        .subject_to(Constraint::power_budget((0..dim).collect(), config.power_budget))
        .starting_at(anchor, DVector::zeros(0));
    for (j, g) in eq.ehr.iter().enumerate() {
        let (a, b) = linearized_ehr(g, point, m, config.ehr_thresholds[j]);
        problem = problem.subject_to(Constraint::Affine { complex: a, real: DVector::zeros(0), bound: b });
    }
    problem
}

/// `P_E − Σ_k (2Re{f0_kᴴ g gᴴ f_k} − |gᴴ f0_k|²) ≤ 0` as `Re{aᴴ f̃} ≤ b`.
pub(crate) fn linearized_ehr(g: &DVector<Complex64>, anchor: &DesignPoint, m: usize, threshold: f64) -> (DVector<Complex64>, f64) {
    let mut a = DVector::zeros(m * anchor.num_beams());
    let mut anchor_power = 0.0;
    for (k, f0) in anchor.beams().enumerate() {
        let r = g.dotc(f0);
        anchor_power += r.norm_sqr();
        a.rows_mut(k * m, m).copy_from(&(g * (r * -2.0)));
    }
    (a, -threshold - anchor_power)
}

/// Minimum-power lower bound of `P_j` linearized at `anchor`, evaluated at `point`.
pub fn linearized_power(g: &DVector<Complex64>, point: &DesignPoint, anchor: &DesignPoint) -> f64 {
    point
        .beams()
        .zip(anchor.beams())
        .map(|(f, f0)| {
            let r0 = g.dotc(f0);
            2.0 * (r0.conj() * g.dotc(f)).re - r0.norm_sqr()
        })
        .sum()
}

pub(crate) fn beamformer_step(
    eq: &EquivalentChannels,
    point: &DesignPoint,
    aux: &AuxiliaryState,
    config: &ScenarioConfig,
) -> DesignPoint {
    let problem = beamformer_subproblem(eq, point, aux, config);
    let Ok(sol) = problem.solve(&config.solver.qcqp) else {
        return point.clone();
    };
    let mut candidate = point.clone();
    candidate.set_stacked(&sol.complex);
    let before = surrogate_from(eq, point, aux, config);
    let after = surrogate_from(eq, &candidate, aux, config);
    let report = constraint_report_with(eq, &candidate, config);
    if after >= before && report.power_satisfied(config) && report.ehr_satisfied(config) {
        candidate
    } else {
        point.clone()
    }
}

/// One MM step on the beamformers; returns the anchor unchanged if the
/// subproblem fails or would not improve the surrogate.
pub fn update_beamformers(
    point: &DesignPoint,
    channels: &ChannelSet,
    aux: &AuxiliaryState,
    config: &ScenarioConfig,
) -> DesignPoint {
    beamformer_step(&Links::new(channels).equivalent(point), point, aux, config)
}

/// One row of the outer-loop trace.
#[derive(Clone, Debug, PartialEq)]
pub struct BcdRecord {
    pub iteration: usize,
    /// WMMSE surrogate after all blocks, with this iteration's `(v, w)`.
    pub surrogate: f64,
    /// Weighted sum-rate at the end of the iteration.
    pub true_rate: f64,
    pub report: ConstraintReport,
    pub power_used: f64,
    /// Seconds spent in the beamformer, phase and position blocks.
    pub block_seconds: [f64; 3],
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BcdTrace {
    /// Rate of the initial point.
    pub initial_rate: f64,
    pub records: Vec<BcdRecord>,
}

impl BcdTrace {
    pub fn surrogates(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.surrogate).collect()
    }

    /// Columns `iter,surrogate,true_rate,worst_ehr_shortfall,power_used,seconds`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iter", "surrogate", "true_rate", "worst_ehr_shortfall", "power_used", "seconds"])?;
        for r in &self.records {
            let worst = r.report.worst_ehr_shortfall();
            w.write_record([
                r.iteration.to_string(),
                format!("{:.12e}", r.surrogate),
                format!("{:.12e}", r.true_rate),
                if worst.is_finite() { format!("{worst:.6e}") } else { String::new() },
                format!("{:.9e}", r.power_used),
                format!("{:.6}", r.seconds),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

#[derive(Clone, Debug)]
pub struct BcdOutcome {
    pub point: DesignPoint,
    pub aux: AuxiliaryState,
    pub trace: BcdTrace,
    /// Whether the relative-change rule fired before the iteration cap.
    pub converged: bool,
}

impl BcdOutcome {
    pub fn iterations(&self) -> usize {
        self.trace.records.len()
    }
}

/// Runs the full outer loop over all blocks.
pub fn run(initial: &DesignPoint, channels: &ChannelSet, config: &ScenarioConfig, stop: &StopRule) -> Result<BcdOutcome> {
    run_with_blocks(initial, channels, config, stop, BlockMask::ALL)
}

/// Runs the outer loop, skipping the blocks disabled in `blocks`.
pub fn run_with_blocks(
    initial: &DesignPoint,
    channels: &ChannelSet,
    config: &ScenarioConfig,
    stop: &StopRule,
    blocks: BlockMask,
) -> Result<BcdOutcome> {
    config.validate()?;
    let links = Links::new(channels);
    let mut point = initial.clone();
    let eq0 = links.equivalent(&point);
    let report = constraint_report_with(&eq0, &point, config);
    if !report.is_feasible(config) {
        return Err(Error::InfeasibleStart(report.describe_violations(config)));
    }
    let mut trace = BcdTrace { initial_rate: eq0.weighted_sum_rate(&point, config), records: Vec::new() };
    let mut previous = trace.initial_rate;
    let mut converged = false;

    for iteration in 0..stop.max_iterations {
        let start = Instant::now();
        let mut eq = links.equivalent(&point);
        let aux = aux_from(&eq, &point, config);
        let mut block_seconds = [0.0; 3];

        let t = Instant::now();
        point = beamformer_step(&eq, &point, &aux, config);
        block_seconds[0] = t.elapsed().as_secs_f64();

        if blocks.phases {
            let t = Instant::now();
            let outcome = pdd::sumrate_step(&links, &point, &aux, config);
            if let Some(candidate) = outcome.accepted {
                point = candidate;
                eq = links.equivalent(&point);
            }
            block_seconds[1] = t.elapsed().as_secs_f64();
        }

        if blocks.positions {
            let t = Instant::now();
            for m in 0..config.num_bs_antennas {
                for _ in 0..config.solver.position_mm_steps.max(1) {
                    let Some(candidate) = positioning::position_step(&links, &point, &aux, config, m) else {
                        break;
                    };
                    let moved = (candidate.positions[m] - point.positions[m]).norm();
                    point = candidate;
                    if moved <= 1e-9 * config.carrier_wavelength {
                        break;
                    }
                }
            }
            eq = links.equivalent(&point);
            block_seconds[2] = t.elapsed().as_secs_f64();
        }

        let surrogate = surrogate_from(&eq, &point, &aux, config);
        let true_rate = eq.weighted_sum_rate(&point, config);
        trace.records.push(BcdRecord {
            iteration,
            surrogate,
            true_rate,
            report: constraint_report_with(&eq, &point, config),
            power_used: point.transmit_power(),
            block_seconds,
            seconds: start.elapsed().as_secs_f64(),
        });
        let change = (surrogate - previous).abs() / previous.abs().max(f64::MIN_POSITIVE);
        previous = surrogate;
        if change < stop.tolerance {
            converged = true;
            break;
        }
    }
    let eq = links.equivalent(&point);
    let aux = aux_from(&eq, &point, config);
    Ok(BcdOutcome { point, aux, trace, converged })
}

/// Starting point before any feasibility repair: equal-power beams matched
/// to each user's equivalent channel, random IRS phases and the centered
/// antenna grid.
pub fn initial_point(channels: &ChannelSet, config: &ScenarioConfig, scenario_index: u64) -> DesignPoint {
    let mut rng = scenario_rng(config.rng_seed, scenario_index, RngPurpose::Initialization);
    let phases: Vec<f64> = (0..config.num_irs_elements).map(|_| rng.random::<f64>() * 2.0 * std::f64::consts::PI).collect();
    let positions = initial_antenna_layout(config);
    let mut point = DesignPoint::zeros(config, positions, phases);
    let eq = Links::new(channels).equivalent(&point);
    let per_beam = config.power_budget / config.num_beams() as f64;
    let matched = |h: &DVector<Complex64>| {
        let n = h.norm();
        if n > 0.0 {
            h * Complex64::new(per_beam.sqrt() / n, 0.0)
        } else {
            let mut e = DVector::zeros(h.len());
            e[0] = Complex64::new(per_beam.sqrt(), 0.0);
            e
        }
    };
    point.info_beams = eq.idr.iter().map(matched).collect();
    point.energy_beams = eq.ehr.iter().map(matched).collect();
    point
}
