//! Scenario configuration and field-response channel synthesis.
//!
//! Every link is a set of `L` planar-wave paths. A path is described by its
//! (azimuth, elevation) pair at each end and a complex gain. The channel seen
//! by an antenna at position `t` along path `l` carries the phase
//! `exp(j 2π/λ tᵀρ_l)`, where `ρ_l` is the projection of the path direction
//! onto the array plane.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Vector2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcqp::SolverOptions;
use crate::units::dbm_to_watts;

/// Harvesting threshold used when a configuration does not give one.
pub const DEFAULT_EHR_THRESHOLD_DBM: f64 = -70.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceRange {
    pub min: f64,
    pub max: f64,
}

impl DistanceRange {
    pub fn fixed(d: f64) -> Self {
        Self { min: d, max: d }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathLossExponents {
    pub bs_irs: f64,
    pub irs_idr: f64,
    pub irs_ehr: f64,
}

/// Parameters of the two-layer penalty dual decomposition used for the IRS
/// phases.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PddSettings {
    pub rho_initial: f64,
    pub rho_shrink: f64,
    /// Multiplier-step threshold is `delta_scale * sqrt(N)` in the first
    /// outer round and shrinks by `delta_shrink` every round.
    pub delta_scale: f64,
    pub delta_shrink: f64,
    pub inner_tolerance: f64,
    pub max_inner_iterations: usize,
    /// Exit once `‖θ − φ‖₂` drops below this.
    pub consensus_tolerance: f64,
    pub max_outer_iterations: usize,
}

impl Default for PddSettings {
    fn default() -> Self {
        Self {
            rho_initial: 0.5,
            rho_shrink: 0.75,
            delta_scale: 1e-3,
            delta_shrink: 0.8,
            inner_tolerance: 1e-6,
            max_inner_iterations: 50,
            consensus_tolerance: 1e-5,
            max_outer_iterations: 100,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    /// Outer BCD stops when the relative surrogate change drops below this.
    pub bcd_tolerance: f64,
    pub bcd_max_iterations: usize,
    pub pdd: PddSettings,
    /// MM steps per antenna in each outer iteration; each step re-anchors
    /// the surrogate, so the objective stays monotone.
    pub position_mm_steps: usize,
    pub qcqp: SolverOptions,
    /// Feasibility search stops when β improves by less than this fraction
    /// of `max_j P_E,j` over one sweep.
    pub feasibility_tolerance: f64,
    pub feasibility_max_iterations: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            bcd_tolerance: 1e-4,
            bcd_max_iterations: 100,
            pdd: PddSettings::default(),
            position_mm_steps: 10,
            qcqp: SolverOptions::default(),
            feasibility_tolerance: 1e-4,
            feasibility_max_iterations: 50,
        }
    }
}

/// Physical and algorithmic parameters. All powers are in watts, all lengths
/// in meters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub num_bs_antennas: usize,
    pub num_irs_elements: usize,
    pub num_idrs: usize,
    pub num_ehrs: usize,
    pub carrier_wavelength: f64,
    pub region_size: f64,
    pub min_spacing: f64,
    pub power_budget: f64,
    pub ehr_thresholds: Vec<f64>,
    pub rate_weights: Vec<f64>,
    pub noise_powers: Vec<f64>,
    pub paths_per_link: usize,
    pub bs_irs_distance: f64,
    pub idr_distance: DistanceRange,
    pub ehr_distance: DistanceRange,
    pub path_loss: PathLossExponents,
    pub rng_seed: u64,
    pub solver: SolverSettings,
}

impl ScenarioConfig {
    /// Full-size simulation settings: 40 dBm budget, 4 movable antennas,
    /// 16 IRS elements, 3 IDRs and 3 EHRs.
    pub fn reference() -> Self {
        let wavelength = 0.125;
        let mut cfg = Self {
            num_bs_antennas: 4,
            num_irs_elements: 16,
            num_idrs: 0,
            num_ehrs: 0,
            carrier_wavelength: wavelength,
            region_size: 2.5 * wavelength,
            min_spacing: 0.5 * wavelength,
            power_budget: dbm_to_watts(40.0),
            ehr_thresholds: Vec::new(),
            rate_weights: Vec::new(),
            noise_powers: Vec::new(),
            paths_per_link: 5,
            bs_irs_distance: 4.0,
            idr_distance: DistanceRange { min: 20.0, max: 25.0 },
            ehr_distance: DistanceRange { min: 4.0, max: 4.5 },
            path_loss: PathLossExponents { bs_irs: 2.2, irs_idr: 2.2, irs_ehr: 2.2 },
            rng_seed: 0,
            solver: SolverSettings::default(),
        };
        cfg.set_users(3, 3);
        cfg
    }

    /// Reduced instance used by the test suites: 8 IRS elements, 2 IDRs and
    /// 2 EHRs.
    pub fn desk() -> Self {
        let mut cfg = Self::reference();
        cfg.num_irs_elements = 8;
        cfg.set_users(2, 2);
        cfg
    }

    /// Resizes the per-user vectors, reusing the first entry of each (or the
    /// defaults when empty).
    pub fn set_users(&mut self, num_idrs: usize, num_ehrs: usize) {
        let threshold = self
            .ehr_thresholds
            .first()
            .copied()
            .unwrap_or_else(|| dbm_to_watts(DEFAULT_EHR_THRESHOLD_DBM));
        let weight = self.rate_weights.first().copied().unwrap_or(1.0);
        let noise = self.noise_powers.first().copied().unwrap_or_else(|| dbm_to_watts(-90.0));
        self.num_idrs = num_idrs;
        self.num_ehrs = num_ehrs;
        self.ehr_thresholds = vec![threshold; num_ehrs];
        self.rate_weights = vec![weight; num_idrs];
        self.noise_powers = vec![noise; num_idrs];
    }

    pub fn set_ehr_threshold(&mut self, watts: f64) {
        self.ehr_thresholds = vec![watts; self.num_ehrs];
    }

    pub fn max_ehr_threshold(&self) -> f64 {
        self.ehr_thresholds.iter().copied().fold(0.0, f64::max)
    }

    pub fn num_beams(&self) -> usize {
        self.num_idrs + self.num_ehrs
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_bs_antennas == 0 {
            return bad("num_bs_antennas must be at least 1".into());
        }
        if self.num_irs_elements == 0 {
            return bad("num_irs_elements must be at least 1".into());
        }
        if self.num_idrs == 0 {
            return bad("num_idrs must be at least 1".into());
        }
        if self.paths_per_link == 0 {
            return bad("paths_per_link must be at least 1".into());
        }
        if self.ehr_thresholds.len() != self.num_ehrs {
            return bad(format!(
                "{} EHR thresholds given for {} EHRs",
                self.ehr_thresholds.len(),
                self.num_ehrs
            ));
        }
        if self.rate_weights.len() != self.num_idrs || self.noise_powers.len() != self.num_idrs {
            return bad(format!(
                "rate_weights ({}) and noise_powers ({}) must both have num_idrs = {} entries",
                self.rate_weights.len(),
                self.noise_powers.len(),
                self.num_idrs
            ));
        }
        let positive = [
            ("carrier_wavelength", self.carrier_wavelength),
            ("region_size", self.region_size),
            ("min_spacing", self.min_spacing),
            ("power_budget", self.power_budget),
            ("bs_irs_distance", self.bs_irs_distance),
            ("idr_distance.min", self.idr_distance.min),
            ("ehr_distance.min", self.ehr_distance.min),
            ("path_loss.bs_irs", self.path_loss.bs_irs),
            ("path_loss.irs_idr", self.path_loss.irs_idr),
            ("path_loss.irs_ehr", self.path_loss.irs_ehr),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return bad(format!("{name} must be finite and positive, got {value}"));
            }
        }
        for (name, r) in [("idr_distance", self.idr_distance), ("ehr_distance", self.ehr_distance)] {
            if !(r.max.is_finite() && r.max >= r.min) {
                return bad(format!("{name}: max ({}) must be >= min ({})", r.max, r.min));
            }
        }
        if let Some(n) = self.noise_powers.iter().find(|n| !(n.is_finite() && **n > 0.0)) {
            return bad(format!("noise powers must be positive, got {n}"));
        }
        if let Some(a) = self.rate_weights.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return bad(format!("rate weights must be nonnegative, got {a}"));
        }
        if let Some(p) = self.ehr_thresholds.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return bad(format!("EHR thresholds must be nonnegative, got {p}"));
        }
        let cols = grid_columns(self.num_bs_antennas);
        if self.min_spacing * (cols as f64 - 1.0) > self.region_size {
            return bad(format!(
                "a {cols}-column antenna grid with spacing {} does not fit in a region of side {}",
                self.min_spacing, self.region_size
            ));
        }
        Ok(())
    }
}

/// A path direction: azimuth in `[0, 2π)`, elevation in `[0, π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathAngle {
    pub azimuth: f64,
    pub elevation: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DirectionConvention {
    /// `ρ = [cos ϑ sin φ, cos φ]`, used for the BS transmit region.
    BsTransmit,
    /// `ρ = [sin ϑ sin φ, cos φ]`, used on both sides of the IRS.
    IrsSide,
}

impl PathAngle {
    pub fn direction(&self, convention: DirectionConvention) -> Vector2<f64> {
        let (sa, ca) = self.azimuth.sin_cos();
        let (se, ce) = self.elevation.sin_cos();
        match convention {
            DirectionConvention::BsTransmit => Vector2::new(ca * se, ce),
            DirectionConvention::IrsSide => Vector2::new(sa * se, ce),
        }
    }
}

/// One propagation link: per-path angles at both ends and the diagonal of
/// the path-response matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct PathCluster {
    pub departure: Vec<PathAngle>,
    pub arrival: Vec<PathAngle>,
    pub gains: DVector<Complex64>,
}

impl PathCluster {
    pub fn num_paths(&self) -> usize {
        self.gains.len()
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.gains.len();
        if self.departure.len() != l || self.arrival.len() != l {
            return Err(Error::InvalidInput(format!(
                "path cluster has {} departure angles, {} arrival angles and {} gains",
                self.departure.len(),
                self.arrival.len(),
                l
            )));
        }
        if self.gains.iter().any(|g| !(g.re.is_finite() && g.im.is_finite())) {
            return Err(Error::InvalidInput("non-finite path gain".into()));
        }
        Ok(())
    }

    pub fn departure_directions(&self, convention: DirectionConvention) -> Vec<Vector2<f64>> {
        self.departure.iter().map(|a| a.direction(convention)).collect()
    }

    pub fn arrival_directions(&self, convention: DirectionConvention) -> Vec<Vector2<f64>> {
        self.arrival.iter().map(|a| a.direction(convention)).collect()
    }
}

/// All links of one scenario plus the fixed IRS layout.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    pub bs_irs: PathCluster,
    pub irs_idr: Vec<PathCluster>,
    pub irs_ehr: Vec<PathCluster>,
    pub irs_positions: Vec<Vector2<f64>>,
    pub wavelength: f64,
    pub idr_distances: Vec<f64>,
    pub ehr_distances: Vec<f64>,
}

fn check_finite_position(p: &Vector2<f64>) -> Result<()> {
    if p.x.is_finite() && p.y.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("non-finite position ({}, {})", p.x, p.y)))
    }
}

/// `exp(j k tᵀρ)` for each direction.
pub(crate) fn steering(position: &Vector2<f64>, directions: &[Vector2<f64>], wavelength: f64) -> DVector<Complex64> {
    let k = 2.0 * PI / wavelength;
    DVector::from_iterator(
        directions.len(),
        directions.iter().map(|rho| Complex64::from_polar(1.0, k * position.dot(rho))),
    )
}

/// Field-response vector of an antenna or IRS element at `position`.
pub fn field_response_vector(
    position: &Vector2<f64>,
    angles: &[PathAngle],
    convention: DirectionConvention,
    wavelength: f64,
) -> Result<DVector<Complex64>> {
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(Error::InvalidInput(format!("wavelength must be positive, got {wavelength}")));
    }
    if angles.is_empty() {
        return Err(Error::InvalidInput("angle list is empty".into()));
    }
    check_finite_position(position)?;
    if angles.iter().any(|a| !(a.azimuth.is_finite() && a.elevation.is_finite())) {
        return Err(Error::InvalidInput("non-finite path angle".into()));
    }
    let dirs: Vec<_> = angles.iter().map(|a| a.direction(convention)).collect();
    Ok(steering(position, &dirs, wavelength))
}

/// Field-response matrix with one column per position (`L × count`).
pub(crate) fn response_matrix(positions: &[Vector2<f64>], directions: &[Vector2<f64>], wavelength: f64) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(directions.len(), positions.len());
    for (c, p) in positions.iter().enumerate() {
        out.set_column(c, &steering(p, directions, wavelength));
    }
    out
}

/// IRS-side factor of the BS-IRS channel, `(F_G^r)ᴴ Σ_G` (`N × L`), so that
/// `G = irs_path_matrix · F_G^t`.
pub(crate) fn irs_path_matrix(channels: &ChannelSet) -> DMatrix<Complex64> {
    let dirs = channels.bs_irs.arrival_directions(DirectionConvention::IrsSide);
    let mut out = response_matrix(&channels.irs_positions, &dirs, channels.wavelength).adjoint();
    for (l, g) in channels.bs_irs.gains.iter().enumerate() {
        out.column_mut(l).iter_mut().for_each(|x| *x *= g);
    }
    out
}

/// BS-IRS channel `G = (F_G^r)ᴴ Σ_G F_G^t` (`N × M`).
pub fn assemble_bs_irs_channel(
    positions: &[Vector2<f64>],
    channels: &ChannelSet,
    wavelength: f64,
) -> Result<DMatrix<Complex64>> {
    channels.bs_irs.validate()?;
    for p in positions.iter().chain(channels.irs_positions.iter()) {
        check_finite_position(p)?;
    }
    let tx = channels.bs_irs.departure_directions(DirectionConvention::BsTransmit);
    let rx = channels.bs_irs.arrival_directions(DirectionConvention::IrsSide);
    let ft = response_matrix(positions, &tx, wavelength);
    let mut fr_h = response_matrix(&channels.irs_positions, &rx, wavelength).adjoint();
    for (l, g) in channels.bs_irs.gains.iter().enumerate() {
        fr_h.column_mut(l).iter_mut().for_each(|x| *x *= g);
    }
    if fr_h.ncols() != ft.nrows() {
        return Err(Error::InvalidInput("path count mismatch in BS-IRS link".into()));
    }
    Ok(fr_h * ft)
}

/// IRS-to-user channel `(F^t)ᴴ Σ 1` (length `N`).
pub fn assemble_irs_user_channel(
    cluster: &PathCluster,
    irs_positions: &[Vector2<f64>],
    wavelength: f64,
) -> Result<DVector<Complex64>> {
    cluster.validate()?;
    for p in irs_positions {
        check_finite_position(p)?;
    }
    Ok(irs_user_channel(cluster, irs_positions, wavelength))
}

pub(crate) fn irs_user_channel(cluster: &PathCluster, irs_positions: &[Vector2<f64>], wavelength: f64) -> DVector<Complex64> {
    let dirs = cluster.departure_directions(DirectionConvention::IrsSide);
    let ft = response_matrix(irs_positions, &dirs, wavelength);
    ft.adjoint() * &cluster.gains
}

/// Number of columns of the square-as-possible grid holding `count` points.
pub fn grid_columns(count: usize) -> usize {
    (count as f64).sqrt().ceil() as usize
}

/// Row-major grid of `count` points with the given spacing, centered at the
/// origin.
pub fn centered_grid(count: usize, spacing: f64) -> Vec<Vector2<f64>> {
    let cols = grid_columns(count).max(1);
    let rows = count.div_ceil(cols);
    let x0 = -(cols as f64 - 1.0) * spacing / 2.0;
    let y0 = -(rows as f64 - 1.0) * spacing / 2.0;
    (0..count)
        .map(|k| Vector2::new(x0 + (k % cols) as f64 * spacing, y0 + (k / cols) as f64 * spacing))
        .collect()
}

/// IRS elements on a half-wavelength grid.
pub fn irs_layout(config: &ScenarioConfig) -> Vec<Vector2<f64>> {
    centered_grid(config.num_irs_elements, config.carrier_wavelength / 2.0)
}

/// Initial movable-antenna layout: a centered grid whose spacing spreads the
/// antennas over the region without going below `D_B`.
pub fn initial_antenna_layout(config: &ScenarioConfig) -> Vec<Vector2<f64>> {
    let m = config.num_bs_antennas;
    let spacing = config.min_spacing.max(config.region_size / grid_columns(m) as f64);
    centered_grid(m, spacing)
}

/// Independent random streams derived from one scenario index.
#[derive(Clone, Copy, Debug)]
pub enum RngPurpose {
    Channels = 0,
    Initialization = 1,
}

pub fn scenario_rng(seed: u64, scenario_index: u64, purpose: RngPurpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(scenario_index.wrapping_mul(4).wrapping_add(purpose as u64));
    rng
}

/// Per-path gain variance `C₀² d^{−α} / L` with `C₀ = λ/4π`.
pub fn path_gain_variance(wavelength: f64, distance: f64, exponent: f64, paths: usize) -> f64 {
    let c0 = wavelength / (4.0 * PI);
    c0 * c0 * distance.powf(-exponent) / paths as f64
}

fn draw_angles<R: Rng>(rng: &mut R, count: usize) -> Vec<PathAngle> {
    (0..count)
        .map(|_| {
            let elevation = rng.random::<f64>() * PI;
            let azimuth = rng.random::<f64>() * 2.0 * PI;
            PathAngle { azimuth, elevation }
        })
        .collect()
}

fn draw_cluster<R: Rng>(rng: &mut R, paths: usize, variance: f64) -> PathCluster {
    let departure = draw_angles(rng, paths);
    let arrival = draw_angles(rng, paths);
    let s = (variance / 2.0).sqrt();
    let gains = DVector::from_iterator(
        paths,
        (0..paths).map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(s * re, s * im)
        }),
    );
    PathCluster { departure, arrival, gains }
}

fn draw_distance<R: Rng>(rng: &mut R, range: DistanceRange) -> f64 {
    // Always consume one draw so fixed and ranged distances keep the stream aligned.
    let u: f64 = rng.random();
    range.min + u * (range.max - range.min)
}

/// Scenario number 0 of the configured seed.
pub fn synthesize_scenario(config: &ScenarioConfig) -> Result<ChannelSet> {
    synthesize_scenario_at(config, 0)
}

/// Draws the channels of scenario `scenario_index`. The draw order depends
/// only on `L`, `K_I` and `K_E`, so sweeps over power, region size, antenna
/// count or distance see the same angles and normalized gains.
pub fn synthesize_scenario_at(config: &ScenarioConfig, scenario_index: u64) -> Result<ChannelSet> {
    config.validate()?;
    let mut rng = scenario_rng(config.rng_seed, scenario_index, RngPurpose::Channels);
    let l = config.paths_per_link;
    let lambda = config.carrier_wavelength;
    let bs_irs = draw_cluster(
        &mut rng,
        l,
        path_gain_variance(lambda, config.bs_irs_distance, config.path_loss.bs_irs, l),
    );
    let mut idr_distances = Vec::with_capacity(config.num_idrs);
    let mut irs_idr = Vec::with_capacity(config.num_idrs);
    for _ in 0..config.num_idrs {
        let d = draw_distance(&mut rng, config.idr_distance);
        idr_distances.push(d);
        irs_idr.push(draw_cluster(&mut rng, l, path_gain_variance(lambda, d, config.path_loss.irs_idr, l)));
    }
    let mut ehr_distances = Vec::with_capacity(config.num_ehrs);
    let mut irs_ehr = Vec::with_capacity(config.num_ehrs);
    for _ in 0..config.num_ehrs {
        let d = draw_distance(&mut rng, config.ehr_distance);
        ehr_distances.push(d);
        irs_ehr.push(draw_cluster(&mut rng, l, path_gain_variance(lambda, d, config.path_loss.irs_ehr, l)));
    }
    Ok(ChannelSet {
        bs_irs,
        irs_idr,
        irs_ehr,
        irs_positions: irs_layout(config),
        wavelength: lambda,
        idr_distances,
        ehr_distances,
    })
}
