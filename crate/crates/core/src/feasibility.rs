//! Feasibility check for the EHR constraints.
//!
//! Minimizes the worst EHR shortfall `β = max_j (P_E,j − P_j)` by block
//! coordinate descent over the beamformers, the IRS phases and each antenna
//! position. A point with `β ≤ 0` satisfies every constraint. The method is
//! local: an `Infeasible` verdict means no feasible point was found.

use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::Result;
use crate::pdd;
use crate::positioning;
use crate::qcqp::{Constraint, ConvexSubproblem, RealQuadratic, Status};
use crate::scenario::{initial_antenna_layout, scenario_rng, ChannelSet, RngPurpose, ScenarioConfig};
use crate::system::{constraint_report_with, DesignPoint, Links};
use crate::wmmse::{linearized_ehr, BlockMask, StopRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Feasible,
    /// No feasible point was found.
    Infeasible,
    /// `β` was still decreasing when the iteration cap was hit.
    Undecided,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Feasible => "feasible",
            Verdict::Infeasible => "no_feasible_point_found",
            Verdict::Undecided => "undecided",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityRecord {
    pub iteration: usize,
    /// Worst EHR shortfall after the block, in watts.
    pub beta: f64,
    pub block: String,
}

#[derive(Clone, Debug)]
pub struct FeasibilityVerdict {
    pub beta_star: f64,
    pub verdict: Verdict,
    pub witness: DesignPoint,
    /// Whether the energy-budget screen decided the instance without
    /// iterating.
    pub screened: bool,
    pub trace: Vec<FeasibilityRecord>,
}

impl FeasibilityVerdict {
    /// Columns `iter,beta,block_name`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iter", "beta", "block_name"])?;
        for r in &self.trace {
            w.write_record([r.iteration.to_string(), format!("{:.9e}", r.beta), r.block.clone()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn betas(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.beta).collect()
    }
}

/// Upper bounds on the harvested power of each EHR over every design in
/// the region: `P_j ≤ P_B ‖g_j‖²` with
/// `‖g_j‖ ≤ ‖g_r,j‖ ‖(F_G^r)ᴴ Σ_G‖₂ √(M L)`.
pub fn screen_bound(channels: &ChannelSet, config: &ScenarioConfig) -> Vec<f64> {
    let links = Links::new(channels);
    let path_norm = links.irs_path.clone().svd(false, false).singular_values.max();
    let transmit = ((config.num_bs_antennas * links.tx_directions.len()) as f64).sqrt();
    links
        .ehr
        .iter()
        .map(|g| {
            let bound = g.norm() * path_norm * transmit;
            config.power_budget * bound * bound
        })
        .collect()
}

fn worst_shortfall(links: &Links, point: &DesignPoint, config: &ScenarioConfig) -> f64 {
    constraint_report_with(&links.equivalent(point), point, config).worst_ehr_shortfall()
}

fn reference_power(config: &ScenarioConfig) -> f64 {
    config.max_ehr_threshold().max(f64::MIN_POSITIVE)
}

/// The beamforming step: minimize `β` with each `P_j` linearized at the
/// current beams, inside the power budget. Returns the new point and its
/// true worst shortfall; the incoming point if nothing improved.
pub fn solve_beamformer_feasibility(point: &DesignPoint, channels: &ChannelSet, config: &ScenarioConfig) -> (DesignPoint, f64) {
    beamformer_step(&Links::new(channels), point, config, reference_power(config))
}

fn beamformer_step(links: &Links, point: &DesignPoint, config: &ScenarioConfig, reference: f64) -> (DesignPoint, f64) {
    let incoming = worst_shortfall(links, point, config);
    let eq = links.equivalent(point);
    let m = config.num_bs_antennas;
    let dim = m * point.num_beams();
    let mut problem = ConvexSubproblem::new(dim, 1)
        .minimize_real(RealQuadratic::linear(DVector::from_element(1, 1.0), 0.0))
        .subject_to(Constraint::power_budget((0..dim).collect(), config.power_budget));
    for (j, g) in eq.ehr.iter().enumerate() {
        let (a, b) = linearized_ehr(g, point, m, config.ehr_thresholds[j]);
        problem = problem.subject_to(Constraint::Affine {
            complex: a / Complex64::new(reference, 0.0),
            real: DVector::from_element(1, -1.0),
            bound: b / reference,
        });
    }
    let problem = problem.starting_at(point.stacked(), DVector::from_element(1, incoming / reference + 1.0));
    let Ok(sol) = problem.solve(&config.solver.qcqp) else {
        return (point.clone(), incoming);
    };
    if !matches!(sol.report.status, Status::Optimal | Status::MaxIterations) {
        return (point.clone(), incoming);
    }
    let mut candidate = point.clone();
    candidate.set_stacked(&sol.complex);
    let report = constraint_report_with(&links.equivalent(&candidate), &candidate, config);
    let beta = report.worst_ehr_shortfall();
    if beta <= incoming && report.power_satisfied(config) {
        (candidate, beta)
    } else {
        (point.clone(), incoming)
    }
}

/// Default starting point: every beam at full power along the strongest
/// EHR's equivalent channel, random phases and the centered antenna grid.
pub fn feasibility_start(channels: &ChannelSet, config: &ScenarioConfig, scenario_index: u64) -> DesignPoint {
    use rand::Rng;
    let mut rng = scenario_rng(config.rng_seed, scenario_index, RngPurpose::Initialization);
    let phases: Vec<f64> = (0..config.num_irs_elements).map(|_| rng.random::<f64>() * 2.0 * std::f64::consts::PI).collect();
    let mut point = DesignPoint::zeros(config, initial_antenna_layout(config), phases);
    let eq = Links::new(channels).equivalent(&point);
    let strongest = eq.ehr.iter().chain(&eq.idr).max_by(|a, b| a.norm().total_cmp(&b.norm()));
    let per_beam = (config.power_budget / config.num_beams() as f64).sqrt();
    let direction = match strongest {
        Some(g) if g.norm() > 0.0 => g / Complex64::new(g.norm(), 0.0),
        _ => {
            let mut e = DVector::zeros(config.num_bs_antennas);
            e[0] = Complex64::new(1.0, 0.0);
            e
        }
    };
    point.beams_mut().for_each(|f| *f = &direction * Complex64::new(per_beam, 0.0));
    point
}

pub fn stop_rule(config: &ScenarioConfig) -> StopRule {
    StopRule { tolerance: config.solver.feasibility_tolerance, max_iterations: config.solver.feasibility_max_iterations }
}

/// Runs the feasibility search from [`feasibility_start`].
pub fn run_feasibility(channels: &ChannelSet, config: &ScenarioConfig, stop: &StopRule) -> Result<FeasibilityVerdict> {
    let start = feasibility_start(channels, config, 0);
    run_feasibility_from(&start, channels, config, stop, BlockMask::ALL)
}

/// Runs the feasibility search from `start`, optimizing only the blocks in
/// `blocks` besides the beamformers.
pub fn run_feasibility_from(
    start: &DesignPoint,
    channels: &ChannelSet,
    config: &ScenarioConfig,
    stop: &StopRule,
    blocks: BlockMask,
) -> Result<FeasibilityVerdict> {
    config.validate()?;
    let links = Links::new(channels);
    let mut point = start.clone();
    let mut beta = worst_shortfall(&links, &point, config);
    let mut trace = vec![FeasibilityRecord { iteration: 0, beta, block: "start".into() }];
    let done = |beta: f64, point: &DesignPoint| {
        beta <= 0.0 && constraint_report_with(&links.equivalent(point), point, config).is_feasible(config)
    };
    if config.num_ehrs == 0 || done(beta, &point) {
        return Ok(FeasibilityVerdict { beta_star: beta, verdict: Verdict::Feasible, witness: point, screened: false, trace });
    }
    let bounds = screen_bound(channels, config);
    if bounds.iter().zip(&config.ehr_thresholds).any(|(b, p)| p > b) {
        return Ok(FeasibilityVerdict { beta_star: beta, verdict: Verdict::Infeasible, witness: point, screened: true, trace });
    }

    let reference = reference_power(config);
    let mut verdict = Verdict::Undecided;
    for iteration in 1..=stop.max_iterations {
        let sweep_start = beta;

        let (p, b) = beamformer_step(&links, &point, config, reference);
        (point, beta) = (p, b);
        trace.push(FeasibilityRecord { iteration, beta, block: "beamformers".into() });

        if blocks.phases && !done(beta, &point) {
            if let Some(p) = pdd::feasibility_step(&links, &point, config, reference).accepted {
                let b = worst_shortfall(&links, &p, config);
                if b <= beta {
                    (point, beta) = (p, b);
                }
            }
            trace.push(FeasibilityRecord { iteration, beta, block: "phases".into() });
        }

        if blocks.positions {
            for m in 0..config.num_bs_antennas {
                if done(beta, &point) {
                    break;
                }
                if let Some(p) = positioning::feasibility_step(&links, &point, config, m, reference) {
                    let b = worst_shortfall(&links, &p, config);
                    if b <= beta {
                        (point, beta) = (p, b);
                    }
                }
                trace.push(FeasibilityRecord { iteration, beta, block: format!("position_{m}") });
            }
        }

        if done(beta, &point) {
            verdict = Verdict::Feasible;
            break;
        }
        if sweep_start - beta <= stop.tolerance * reference {
            verdict = Verdict::Infeasible;
            break;
        }
    }
    Ok(FeasibilityVerdict { beta_star: beta, verdict, witness: point, screened: false, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::synthesize_scenario;

    #[test]
    fn zero_thresholds_are_feasible_at_start() {
        let mut cfg = ScenarioConfig::desk();
        cfg.set_ehr_threshold(0.0);
        let ch = synthesize_scenario(&cfg).unwrap();
        let v = run_feasibility(&ch, &cfg, &stop_rule(&cfg)).unwrap();
        assert_eq!(v.verdict, Verdict::Feasible);
        assert!(v.beta_star <= 0.0);
        assert_eq!(v.trace.len(), 1);
    }

    #[test]
    fn thresholds_above_screen_are_rejected_without_iterating() {
        let mut cfg = ScenarioConfig::desk();
        let ch = synthesize_scenario(&cfg).unwrap();
        let bound = screen_bound(&ch, &cfg).into_iter().fold(0.0, f64::max);
        cfg.set_ehr_threshold(10.0 * bound);
        let v = run_feasibility(&ch, &cfg, &stop_rule(&cfg)).unwrap();
        assert_eq!(v.verdict, Verdict::Infeasible);
        assert!(v.screened);
        assert_eq!(v.trace.len(), 1);
    }
}
