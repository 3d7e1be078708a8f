//! Physical-layer evaluation of a design: equivalent channels, SINR,
//! harvested RF power, weighted sum-rate and constraint residuals.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Vector2};
use num_complex::Complex64;

use crate::scenario::{irs_path_matrix, irs_user_channel, response_matrix, ChannelSet, DirectionConvention, ScenarioConfig};

/// Optimization variables: information beams `f_I,i`, energy beams `f_E,j`,
/// movable-antenna positions and IRS phase angles (radians).
#[derive(Clone, Debug, PartialEq)]
pub struct DesignPoint {
    pub info_beams: Vec<DVector<Complex64>>,
    pub energy_beams: Vec<DVector<Complex64>>,
    pub positions: Vec<Vector2<f64>>,
    pub phases: Vec<f64>,
}

impl DesignPoint {
    /// All beams zero.
    pub fn zeros(config: &ScenarioConfig, positions: Vec<Vector2<f64>>, phases: Vec<f64>) -> Self {
        let m = config.num_bs_antennas;
        Self {
            info_beams: vec![DVector::zeros(m); config.num_idrs],
            energy_beams: vec![DVector::zeros(m); config.num_ehrs],
            positions,
            phases,
        }
    }

    pub fn num_beams(&self) -> usize {
        self.info_beams.len() + self.energy_beams.len()
    }

    /// Beam `k` in stacked order (information beams first).
    pub fn beam(&self, k: usize) -> &DVector<Complex64> {
        let ki = self.info_beams.len();
        if k < ki {
            &self.info_beams[k]
        } else {
            &self.energy_beams[k - ki]
        }
    }

    pub fn beams(&self) -> impl Iterator<Item = &DVector<Complex64>> {
        self.info_beams.iter().chain(self.energy_beams.iter())
    }

    pub fn beams_mut(&mut self) -> impl Iterator<Item = &mut DVector<Complex64>> {
        self.info_beams.iter_mut().chain(self.energy_beams.iter_mut())
    }

    /// Stacked beamformer vector `f̃`.
    pub fn stacked(&self) -> DVector<Complex64> {
        let m = self.positions.len();
        let mut out = DVector::zeros(m * self.num_beams());
        for (k, f) in self.beams().enumerate() {
            out.rows_mut(k * m, m).copy_from(f);
        }
        out
    }

    pub fn set_stacked(&mut self, stacked: &DVector<Complex64>) {
        let m = self.positions.len();
        for (k, f) in self.beams_mut().enumerate() {
            f.copy_from(&stacked.rows(k * m, m));
        }
    }

    /// `Σ_k f_k f_kᴴ`.
    pub fn beam_covariance(&self) -> DMatrix<Complex64> {
        let m = self.positions.len();
        let mut out = DMatrix::zeros(m, m);
        for f in self.beams() {
            out += f * f.adjoint();
        }
        out
    }

    pub fn transmit_power(&self) -> f64 {
        self.beams().map(|f| f.norm_squared()).sum()
    }

    /// Unit-modulus reflection vector `e^{jθ}`.
    pub fn reflection(&self) -> DVector<Complex64> {
        DVector::from_iterator(self.phases.len(), self.phases.iter().map(|t| Complex64::from_polar(1.0, *t)))
    }

    /// Stores the phases of `theta`, wrapped to `[0, 2π)`. Zero entries get
    /// phase 0.
    pub fn set_reflection(&mut self, theta: &DVector<Complex64>) {
        self.phases = theta.iter().map(|z| wrap_phase(z.arg())).collect();
    }

    /// Scales every beam so the total transmit power equals `budget` (no-op
    /// for an all-zero point).
    pub fn scale_to_power(&mut self, budget: f64) {
        let p = self.transmit_power();
        if p > 0.0 {
            let s = (budget / p).sqrt();
            self.beams_mut().for_each(|f| f.scale_mut(s));
        }
    }
}

pub fn wrap_phase(angle: f64) -> f64 {
    let w = angle.rem_euclid(2.0 * PI);
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

/// Position-independent parts of a scenario, precomputed once per run.
#[derive(Clone, Debug)]
pub struct Links {
    /// `(F_G^r)ᴴ Σ_G`, `N × L`.
    pub irs_path: DMatrix<Complex64>,
    /// BS-side path directions of the BS-IRS link.
    pub tx_directions: Vec<Vector2<f64>>,
    /// `h_r,i`.
    pub idr: Vec<DVector<Complex64>>,
    /// `g_r,j`.
    pub ehr: Vec<DVector<Complex64>>,
    pub wavelength: f64,
}

impl Links {
    pub fn new(channels: &ChannelSet) -> Self {
        let lambda = channels.wavelength;
        Self {
            irs_path: irs_path_matrix(channels),
            tx_directions: channels.bs_irs.departure_directions(DirectionConvention::BsTransmit),
            idr: channels.irs_idr.iter().map(|c| irs_user_channel(c, &channels.irs_positions, lambda)).collect(),
            ehr: channels.irs_ehr.iter().map(|c| irs_user_channel(c, &channels.irs_positions, lambda)).collect(),
            wavelength: lambda,
        }
    }

    /// `F_G^t(t̃_B)`, `L × M`.
    pub fn transmit_response(&self, positions: &[Vector2<f64>]) -> DMatrix<Complex64> {
        response_matrix(positions, &self.tx_directions, self.wavelength)
    }

    pub fn bs_irs(&self, positions: &[Vector2<f64>]) -> DMatrix<Complex64> {
        &self.irs_path * self.transmit_response(positions)
    }

    pub fn equivalent(&self, point: &DesignPoint) -> EquivalentChannels {
        let g = self.bs_irs(&point.positions);
        let theta = point.reflection();
        // h = Gᴴ Θᴴ h_r
        let cascade = |r: &DVector<Complex64>| -> DVector<Complex64> {
            let weighted = r.zip_map(&theta, |a, t| t.conj() * a);
            g.adjoint() * weighted
        };
        EquivalentChannels {
            idr: self.idr.iter().map(cascade).collect(),
            ehr: self.ehr.iter().map(cascade).collect(),
            bs_irs: g,
        }
    }
}

/// Equivalent BS-to-user channels `h_i`, `g_j` for one design point (so that
/// the received signal is `h_iᴴ x`).
#[derive(Clone, Debug)]
pub struct EquivalentChannels {
    pub bs_irs: DMatrix<Complex64>,
    pub idr: Vec<DVector<Complex64>>,
    pub ehr: Vec<DVector<Complex64>>,
}

impl EquivalentChannels {
    /// `h_iᴴ f_k` for every beam, information beams first.
    pub fn idr_responses(&self, point: &DesignPoint, i: usize) -> Vec<Complex64> {
        point.beams().map(|f| self.idr[i].dotc(f)).collect()
    }

    /// Total received power at IDR `i` including noise.
    pub fn idr_received_power(&self, point: &DesignPoint, noise: f64, i: usize) -> f64 {
        point.beams().map(|f| self.idr[i].dotc(f).norm_sqr()).sum::<f64>() + noise
    }

    pub fn sinr(&self, point: &DesignPoint, noise: f64, i: usize) -> f64 {
        let h = &self.idr[i];
        let mut signal = 0.0;
        let mut interference = noise;
        for (k, f) in point.beams().enumerate() {
            let p = h.dotc(f).norm_sqr();
            if k == i {
                signal = p;
            } else {
                interference += p;
            }
        }
        signal / interference
    }

    pub fn harvested_power(&self, point: &DesignPoint, j: usize) -> f64 {
        point.beams().map(|f| self.ehr[j].dotc(f).norm_sqr()).sum()
    }

    pub fn weighted_sum_rate(&self, point: &DesignPoint, config: &ScenarioConfig) -> f64 {
        (0..point.info_beams.len())
            .map(|i| config.rate_weights[i] * self.sinr(point, config.noise_powers[i], i).ln_1p())
            .sum()
    }
}

pub fn equivalent_channels(point: &DesignPoint, channels: &ChannelSet) -> EquivalentChannels {
    Links::new(channels).equivalent(point)
}

pub fn sinr(point: &DesignPoint, channels: &ChannelSet, config: &ScenarioConfig, i: usize) -> f64 {
    equivalent_channels(point, channels).sinr(point, config.noise_powers[i], i)
}

pub fn harvested_power(point: &DesignPoint, channels: &ChannelSet, j: usize) -> f64 {
    equivalent_channels(point, channels).harvested_power(point, j)
}

/// `Σ_i α_i ln(1 + SINR_i)` in nats.
pub fn weighted_sum_rate(point: &DesignPoint, channels: &ChannelSet, config: &ScenarioConfig) -> f64 {
    equivalent_channels(point, channels).weighted_sum_rate(point, config)
}

/// Signed residuals of every constraint; positive means violated.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintReport {
    /// `P_E,j − P_j` in watts.
    pub ehr_shortfalls: Vec<f64>,
    /// `Σ‖f‖² − P_B` in watts.
    pub power_excess: f64,
    /// `max_{m<n} (D_B − ‖t_m − t_n‖)` in meters; `−D_B` for a single antenna.
    pub spacing_violation: f64,
    /// `max_m max(|x_m|, |y_m|) − A/2` in meters.
    pub region_violation: f64,
}

/// Relative tolerance on power and EHR constraints.
pub const POWER_TOLERANCE: f64 = 1e-6;
/// Absolute tolerance on geometric constraints (meters).
pub const GEOMETRY_TOLERANCE: f64 = 1e-9;

impl ConstraintReport {
    pub fn worst_ehr_shortfall(&self) -> f64 {
        self.ehr_shortfalls.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn ehr_satisfied(&self, config: &ScenarioConfig) -> bool {
        self.ehr_shortfalls
            .iter()
            .zip(&config.ehr_thresholds)
            .all(|(s, p)| *s <= POWER_TOLERANCE * p)
    }

    pub fn geometry_satisfied(&self) -> bool {
        self.spacing_violation <= GEOMETRY_TOLERANCE && self.region_violation <= GEOMETRY_TOLERANCE
    }

    pub fn power_satisfied(&self, config: &ScenarioConfig) -> bool {
        self.power_excess <= POWER_TOLERANCE * config.power_budget
    }

    pub fn is_feasible(&self, config: &ScenarioConfig) -> bool {
        self.ehr_satisfied(config) && self.power_satisfied(config) && self.geometry_satisfied()
    }

    /// Human-readable list of the violated constraints.
    pub fn describe_violations(&self, config: &ScenarioConfig) -> String {
        let mut parts = Vec::new();
        for (j, (s, p)) in self.ehr_shortfalls.iter().zip(&config.ehr_thresholds).enumerate() {
            if *s > POWER_TOLERANCE * p {
                parts.push(format!("EHR {j} short by {s:.3e} W"));
            }
        }
        if !self.power_satisfied(config) {
            parts.push(format!("power budget exceeded by {:.3e} W", self.power_excess));
        }
        if self.spacing_violation > GEOMETRY_TOLERANCE {
            parts.push(format!("antenna spacing short by {:.3e} m", self.spacing_violation));
        }
        if self.region_violation > GEOMETRY_TOLERANCE {
            parts.push(format!("antenna outside region by {:.3e} m", self.region_violation));
        }
        parts.join(", ")
    }
}

pub(crate) fn spacing_violation(positions: &[Vector2<f64>], min_spacing: f64) -> f64 {
    let mut worst = -min_spacing;
    for a in 0..positions.len() {
        for b in 0..a {
            worst = worst.max(min_spacing - (positions[a] - positions[b]).norm());
        }
    }
    worst
}

pub(crate) fn region_violation(positions: &[Vector2<f64>], region_size: f64) -> f64 {
    positions
        .iter()
        .map(|p| p.x.abs().max(p.y.abs()) - region_size / 2.0)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn constraint_report_with(eq: &EquivalentChannels, point: &DesignPoint, config: &ScenarioConfig) -> ConstraintReport {
    ConstraintReport {
        ehr_shortfalls: (0..eq.ehr.len())
            .map(|j| config.ehr_thresholds[j] - eq.harvested_power(point, j))
            .collect(),
        power_excess: point.transmit_power() - config.power_budget,
        spacing_violation: spacing_violation(&point.positions, config.min_spacing),
        region_violation: region_violation(&point.positions, config.region_size),
    }
}

pub fn constraint_report(point: &DesignPoint, channels: &ChannelSet, config: &ScenarioConfig) -> ConstraintReport {
    constraint_report_with(&equivalent_channels(point, channels), point, config)
}
