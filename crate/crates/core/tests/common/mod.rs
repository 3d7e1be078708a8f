#![allow(dead_code)]

pub mod checks;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use swipt_core::qcqp::{ComplexQuadratic, Constraint, ConvexSubproblem};
use swipt_core::scenario::{initial_antenna_layout, synthesize_scenario_at};
use swipt_core::wmmse::{initial_point, AuxiliaryState};
use swipt_core::*;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_normal<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<Complex64> {
    DVector::from_iterator(n, (0..n).map(|_| complex_normal(rng)))
}

pub fn random_unit_modulus<R: Rng>(rng: &mut R, n: usize) -> DVector<Complex64> {
    DVector::from_iterator(n, (0..n).map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * 2.0 * std::f64::consts::PI)))
}

/// Random antenna layout inside the region with the minimum spacing kept.
pub fn random_positions<R: Rng>(rng: &mut R, config: &ScenarioConfig) -> Vec<Vector2<f64>> {
    let half = config.region_size / 2.0;
    for _ in 0..10_000 {
        let candidate: Vec<Vector2<f64>> = (0..config.num_bs_antennas)
            .map(|_| Vector2::new(rng.random_range(-half..half), rng.random_range(-half..half)))
            .collect();
        let ok = (0..candidate.len())
            .all(|a| (0..a).all(|b| (candidate[a] - candidate[b]).norm() >= config.min_spacing));
        if ok {
            return candidate;
        }
    }
    initial_antenna_layout(config)
}

/// Random design: beams scaled to a random fraction of the budget, random
/// phases and positions.
pub fn random_point<R: Rng>(rng: &mut R, config: &ScenarioConfig) -> DesignPoint {
    let phases = (0..config.num_irs_elements).map(|_| rng.random::<f64>() * 2.0 * std::f64::consts::PI).collect();
    let positions = random_positions(rng, config);
    let mut p = DesignPoint::zeros(config, positions, phases);
    for f in p.beams_mut() {
        *f = random_vector(rng, config.num_bs_antennas);
    }
    let scale = (config.power_budget * rng.random_range(0.1..1.0) / p.transmit_power()).sqrt();
    for f in p.beams_mut() {
        *f *= Complex64::new(scale, 0.0);
    }
    p
}

/// Channel draw and a random state with its closed-form auxiliaries.
pub struct RandomState {
    pub channels: ChannelSet,
    pub point: DesignPoint,
    pub aux: AuxiliaryState,
}

pub fn random_state(config: &ScenarioConfig, draw: u64) -> RandomState {
    let channels = synthesize_scenario_at(config, draw).unwrap();
    let mut r = rng(1_000 + draw);
    let point = random_point(&mut r, config);
    let v = wmmse::update_v(&point, &channels, config);
    let w = wmmse::update_w(&point, &channels, &v, config);
    RandomState { channels, point, aux: AuxiliaryState { v, w } }
}

/// Feasible starting point of draw `draw`, repaired if needed.
pub fn feasible_start(config: &ScenarioConfig, draw: u64) -> Option<(ChannelSet, DesignPoint)> {
    let channels = synthesize_scenario_at(config, draw).unwrap();
    let p0 = initial_point(&channels, config, draw);
    if system::constraint_report(&p0, &channels, config).is_feasible(config) {
        return Some((channels, p0));
    }
    let stop = feasibility::stop_rule(config);
    let v = feasibility::run_feasibility_from(&p0, &channels, config, &stop, wmmse::BlockMask::ALL).unwrap();
    (v.verdict == feasibility::Verdict::Feasible).then_some((channels, v.witness))
}

/// Minimum eigenvalue of a symmetric 2×2 matrix.
pub fn min_eigenvalue(m: &nalgebra::Matrix2<f64>) -> f64 {
    let s = nalgebra::Matrix2::new(m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
    s.symmetric_eigenvalues().min()
}

/// Central finite-difference Hessian of a scalar function of the plane.
pub fn fd_hessian(f: impl Fn(&Vector2<f64>) -> f64, x: &Vector2<f64>, h: f64) -> nalgebra::Matrix2<f64> {
    let e = [Vector2::new(h, 0.0), Vector2::new(0.0, h)];
    let mut out = nalgebra::Matrix2::zeros();
    for a in 0..2 {
        for b in 0..2 {
            let v = f(&(x + e[a] + e[b])) - f(&(x + e[a] - e[b])) - f(&(x - e[a] + e[b])) + f(&(x - e[a] - e[b]));
            out[(a, b)] = v / (4.0 * h * h);
        }
    }
    out
}

/// Small random convex QCQP in `n` complex variables, strictly feasible at 0:
/// a PSD quadratic objective, a norm ball, an affine cut and a convex
/// quadratic constraint.
pub fn random_tiny_qcqp<R: Rng>(rng: &mut R, n: usize) -> ConvexSubproblem {
    let a = DMatrix::from_fn(n, n, |_, _| complex_normal(rng));
    let q = &a * a.adjoint() * Complex64::new(rng.random_range(0.1..2.0), 0.0);
    let lin = random_vector(rng, n) * Complex64::new(rng.random_range(0.5..3.0), 0.0);
    let radius = rng.random_range(0.5..1.5);
    let cut = random_vector(rng, n);
    let b = DMatrix::from_fn(n, n, |_, _| complex_normal(rng));
    let cq = &b * b.adjoint() * Complex64::new(0.5, 0.0);
    ConvexSubproblem::new(n, 0)
        .minimize_complex(ComplexQuadratic::new(q, lin, 0.0))
        .subject_to(Constraint::power_budget((0..n).collect(), radius * radius))
        .subject_to(Constraint::Affine { complex: cut, real: DVector::zeros(0), bound: rng.random_range(0.1..0.8) })
        .subject_to(Constraint::Quadratic {
            complex: Some(ComplexQuadratic::new(cq, random_vector(rng, n) * Complex64::new(0.2, 0.0), -rng.random_range(0.3..1.0))),
            real: None,
        })
}

/// Zooming grid search over the real and imaginary parts. Each level scans
/// `points^(2n)` candidates in a box around the incumbent. Where a feasible
/// candidate neighbours an infeasible one along an axis, the segment between
/// them is bisected so that points on curved boundaries are reached too. The
/// box halves whenever a level brings no improvement.
pub fn grid_search(problem: &ConvexSubproblem, half_width: f64, points: usize, levels: usize) -> Option<(DVector<Complex64>, f64)> {
    let n = problem.complex_dim;
    let dims = 2 * n;
    let y = DVector::zeros(0);
    let feasible = |z: &[f64]| problem.max_violation(&to_complex(z), &y) <= 0.0;
    let value = |z: &[f64]| problem.objective_value(&to_complex(z), &y);
    let mut center = vec![0.0; dims];
    let mut width = half_width;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let consider = |z: Vec<f64>, best: &mut Option<(Vec<f64>, f64)>| {
        let f = value(&z);
        if best.as_ref().is_none_or(|(_, b)| f < *b) {
            *best = Some((z, f));
        }
    };
    for _ in 0..levels {
        if width < 1e-10 {
            break;
        }
        let step = 2.0 * width / (points - 1) as f64;
        let total = points.pow(dims as u32);
        let mut level_best = best.clone();
        let coord = |idx: usize| -> Vec<f64> {
            let mut rest = idx;
            (0..dims)
                .map(|d| {
                    let k = rest % points;
                    rest /= points;
                    center[d] - width + step * k as f64
                })
                .collect()
        };
        for idx in 0..total {
            let z = coord(idx);
            if !feasible(&z) {
                continue;
            }
            for d in 0..dims {
                for sign in [-1.0, 1.0] {
                    let mut outside = z.clone();
                    outside[d] += sign * step;
                    if feasible(&outside) {
                        continue;
                    }
                    let (mut lo, mut hi) = (0.0, step);
                    for _ in 0..50 {
                        let mid = 0.5 * (lo + hi);
                        let mut t = z.clone();
                        t[d] += sign * mid;
                        if feasible(&t) {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    let mut edge = z.clone();
                    edge[d] += sign * lo;
                    consider(edge, &mut level_best);
                }
            }
            consider(z, &mut level_best);
        }
        let (z, f) = level_best.clone()?;
        let improved = best.as_ref().is_none_or(|(_, b)| f < *b);
        center = z;
        best = level_best;
        if !improved {
            width /= 2.0;
        }
    }
    best.map(|(z, f)| (to_complex(&z), f))
}

fn to_complex(z: &[f64]) -> DVector<Complex64> {
    DVector::from_iterator(z.len() / 2, z.chunks(2).map(|c| Complex64::new(c[0], c[1])))
}
