mod common;

use common::checks;
use swipt_core::feasibility::{self, Verdict};
use swipt_core::wmmse::{BlockMask, StopRule};
use swipt_core::*;

#[test]
fn beta_trace_and_verdicts() {
    let c = checks::feasibility_trace(5);
    assert!(c.pass, "{}", c.detail);
}

#[test]
fn beamformer_step_never_raises_beta() {
    let mut cfg = ScenarioConfig::desk();
    cfg.set_ehr_threshold(units::dbm_to_watts(-45.0));
    let ch = scenario::synthesize_scenario(&cfg).unwrap();
    let p = feasibility::feasibility_start(&ch, &cfg, 0);
    let before = system::constraint_report(&p, &ch, &cfg).worst_ehr_shortfall();
    let (q, beta) = feasibility::solve_beamformer_feasibility(&p, &ch, &cfg);
    assert!(beta <= before);
    assert!(system::constraint_report(&q, &ch, &cfg).power_satisfied(&cfg));
}

#[test]
fn iteration_cap_gives_undecided_or_a_verdict() {
    let mut cfg = ScenarioConfig::desk();
    cfg.set_ehr_threshold(units::dbm_to_watts(-45.0));
    let ch = scenario::synthesize_scenario(&cfg).unwrap();
    let start = feasibility::feasibility_start(&ch, &cfg, 0);
    let stop = StopRule { tolerance: 0.0, max_iterations: 1 };
    let v = feasibility::run_feasibility_from(&start, &ch, &cfg, &stop, BlockMask::ALL).unwrap();
    // With a zero tolerance only a strict stall ends the search early.
    assert!(matches!(v.verdict, Verdict::Undecided | Verdict::Feasible | Verdict::Infeasible));
    assert!(v.trace.iter().all(|r| r.iteration <= 1));
}

#[test]
fn no_ehrs_is_trivially_feasible() {
    let mut cfg = ScenarioConfig::desk();
    cfg.set_users(2, 0);
    let ch = scenario::synthesize_scenario(&cfg).unwrap();
    let v = feasibility::run_feasibility(&ch, &cfg, &feasibility::stop_rule(&cfg)).unwrap();
    assert_eq!(v.verdict, Verdict::Feasible);
    assert_eq!(v.beta_star, f64::NEG_INFINITY);
}

#[test]
fn trace_csv_has_expected_columns() {
    let mut cfg = ScenarioConfig::desk();
    cfg.set_ehr_threshold(units::dbm_to_watts(-45.0));
    let ch = scenario::synthesize_scenario(&cfg).unwrap();
    let v = feasibility::run_feasibility(&ch, &cfg, &feasibility::stop_rule(&cfg)).unwrap();
    let mut buf = Vec::new();
    v.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "iter,beta,block_name");
    assert_eq!(lines.next().unwrap().split(',').nth(2), Some("start"));
}
