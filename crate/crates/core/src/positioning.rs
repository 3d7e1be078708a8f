//! Antenna position updates, one antenna at a time.
//!
//! With every other block fixed, the WMMSE objective of antenna `m` is a
//! quadratic in its field-response vector `u = f_G^t(t_m)`. It is majorized
//! by a linear function of `u` (through the largest eigenvalue of the
//! quadratic term), whose dependence on `t_m` is a sum of cosines with an
//! explicit curvature bound. EHR powers are minorized the same way. Each
//! antenna step is then a small convex QCQP in the displacement, measured
//! in wavelengths, with spacing constraints linearized at the current
//! position.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qcqp::{Constraint, ConvexSubproblem, RealQuadratic, Status};
use crate::scenario::{steering, ChannelSet, ScenarioConfig};
use crate::system::{constraint_report_with, DesignPoint, Links};
use crate::wmmse::{surrogate_from, AuxiliaryState};

/// `Σ_l c_l cos(2π τᵀρ_l − ψ_l)` with `τ` in wavelengths, together with its
/// gradient and a curvature bound `M` with `±∇² ⪯ M`.
#[derive(Clone, Debug, PartialEq)]
pub struct CosineSum {
    pub amplitudes: Vec<f64>,
    pub phases: Vec<f64>,
    pub directions: Vec<Vector2<f64>>,
}

impl CosineSum {
    /// `Re{bᴴ u(τ)}` written as a cosine sum.
    pub fn from_coefficients(b: &DVector<Complex64>, directions: &[Vector2<f64>]) -> Self {
        Self {
            amplitudes: b.iter().map(|z| z.norm()).collect(),
            phases: b.iter().map(|z| z.arg()).collect(),
            directions: directions.to_vec(),
        }
    }

    pub fn value(&self, tau: &Vector2<f64>) -> f64 {
        self.terms().map(|(c, psi, rho)| c * (2.0 * PI * tau.dot(rho) - psi).cos()).sum()
    }

    pub fn gradient(&self, tau: &Vector2<f64>) -> Vector2<f64> {
        self.terms()
            .map(|(c, psi, rho)| rho * (-2.0 * PI * c * (2.0 * PI * tau.dot(rho) - psi).sin()))
            .sum()
    }

    pub fn hessian(&self, tau: &Vector2<f64>) -> Matrix2<f64> {
        self.terms()
            .map(|(c, psi, rho)| rho * rho.transpose() * (-4.0 * PI * PI * c * (2.0 * PI * tau.dot(rho) - psi).cos()))
            .sum()
    }

    /// `Σ_l c_l (2π)² (Diag(ρ_x², ρ_y²) + |ρ_x ρ_y| I)`, which dominates
    /// `c (2π)² ρρᵀ` term by term.
    pub fn curvature_bound(&self) -> Matrix2<f64> {
        self.terms()
            .map(|(c, _, rho)| {
                let k = 4.0 * PI * PI * c;
                let cross = (rho.x * rho.y).abs();
                Matrix2::new(k * (rho.x * rho.x + cross), 0.0, 0.0, k * (rho.y * rho.y + cross))
            })
            .sum()
    }

    fn terms(&self) -> impl Iterator<Item = (f64, f64, &Vector2<f64>)> {
        self.amplitudes
            .iter()
            .zip(&self.phases)
            .zip(&self.directions)
            .map(|((c, p), r)| (*c, *p, r))
    }
}

/// Upper bound on the block objective
/// `Σ_i α_i w_i (|v_i|² Σ_k |h_iᴴ f_k|² − 2Re{v_i* h_iᴴ f_i})` as a function
/// of antenna `m`'s position: `2 R̄(t) + offset`, tight at the anchor.
#[derive(Clone, Debug, PartialEq)]
pub struct RateMajorizer {
    pub antenna: usize,
    pub anchor: Vector2<f64>,
    pub wavelength: f64,
    pub cosine: CosineSum,
    pub offset: f64,
}

impl RateMajorizer {
    fn tau(&self, t: &Vector2<f64>) -> Vector2<f64> {
        t / self.wavelength
    }

    /// `2 R̄(t) + offset`.
    pub fn value(&self, t: &Vector2<f64>) -> f64 {
        2.0 * self.cosine.value(&self.tau(t)) + self.offset
    }

    /// Quadratic upper bound of [`Self::value`] around the anchor.
    pub fn quadratic_bound(&self, t: &Vector2<f64>) -> f64 {
        let tau0 = self.tau(&self.anchor);
        let y = self.tau(t) - tau0;
        let g = self.cosine.gradient(&tau0);
        let m = self.cosine.curvature_bound();
        2.0 * (self.cosine.value(&tau0) + g.dot(&y) + 0.5 * y.dot(&(m * y))) + self.offset
    }
}

/// Lower bound on `P_j` as a function of antenna `m`'s position:
/// `P̄(t) + offset` with `P̄ = 2 Re{b₁ᴴ u}`, tight at the anchor.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerMinorizer {
    pub antenna: usize,
    pub ehr: usize,
    pub anchor: Vector2<f64>,
    pub wavelength: f64,
    pub cosine: CosineSum,
    pub offset: f64,
    /// `P_j` at the anchor.
    pub anchor_power: f64,
}

impl PowerMinorizer {
    fn tau(&self, t: &Vector2<f64>) -> Vector2<f64> {
        t / self.wavelength
    }

    pub fn value(&self, t: &Vector2<f64>) -> f64 {
        2.0 * self.cosine.value(&self.tau(t)) + self.offset
    }

    /// Quadratic lower bound of [`Self::value`] around the anchor.
    pub fn quadratic_bound(&self, t: &Vector2<f64>) -> f64 {
        let tau0 = self.tau(&self.anchor);
        let y = self.tau(t) - tau0;
        let (g, m) = self.expansion();
        self.anchor_power + g.dot(&y) - 0.5 * y.dot(&(m * y))
    }

    /// Gradient of `P̄` in wavelengths and the PSD matrix `M` with
    /// `∇²P̄ ⪰ −M`.
    pub fn expansion(&self) -> (Vector2<f64>, Matrix2<f64>) {
        let tau0 = self.tau(&self.anchor);
        (2.0 * self.cosine.gradient(&tau0), 2.0 * self.cosine.curvature_bound())
    }
}

/// Per-antenna pieces shared by the rate and power surrogates.
struct AntennaView {
    /// BS-side path directions.
    directions: Vec<Vector2<f64>>,
    /// `u_m` for every antenna, `L × M`.
    responses: DMatrix<Complex64>,
    /// `c_i` with `h_iᴴ[m] = c_iᴴ u_m`.
    idr: Vec<DVector<Complex64>>,
    /// `d_j` with `g_jᴴ[m] = d_jᴴ u_m`.
    ehr: Vec<DVector<Complex64>>,
}

impl AntennaView {
    fn new(links: &Links, point: &DesignPoint) -> Self {
        let theta = point.reflection();
        let back = |r: &DVector<Complex64>| links.irs_path.adjoint() * r.zip_map(&theta, |a, t| t.conj() * a);
        Self {
            directions: links.tx_directions.clone(),
            responses: links.transmit_response(&point.positions),
            idr: links.idr.iter().map(back).collect(),
            ehr: links.ehr.iter().map(back).collect(),
        }
    }
}

fn check_antenna(point: &DesignPoint, m: usize) -> Result<()> {
    if m < point.positions.len() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("antenna index {m} out of range for {} antennas", point.positions.len())))
    }
}

pub(crate) fn rate_majorizer_with(
    links: &Links,
    point: &DesignPoint,
    aux: &AuxiliaryState,
    config: &ScenarioConfig,
    m: usize,
) -> RateMajorizer {
    let view = AntennaView::new(links, point);
    let l = view.directions.len();
    let u0 = view.responses.column(m).into_owned();
    let beams: Vec<&DVector<Complex64>> = point.beams().collect();

    let mut r0 = DMatrix::<Complex64>::zeros(l, l);
    let mut lin = DVector::<Complex64>::zeros(l);
    let mut constant = 0.0;
    for i in 0..config.num_idrs {
        let c = &view.idr[i];
        let (v, aw) = (aux.v[i], config.rate_weights[i] * aux.w[i]);
        let v2 = v.norm_sqr();
        let cu = c.dotc(&u0);
        let full: Vec<Complex64> = beams.iter().map(|f| (c.adjoint() * &view.responses * *f)[(0, 0)]).collect();
        let mut energy = 0.0;
        for (k, f) in beams.iter().enumerate() {
            let fm = f[m];
            // h_iᴴ f_k without antenna m's contribution
            let rest = full[k] - cu * fm;
            energy += fm.norm_sqr();
            lin -= c * (rest * fm.conj() * (aw * v2));
            constant += aw * v2 * rest.norm_sqr();
            if k == i {
                lin += c * (v * fm.conj() * aw);
                constant -= 2.0 * aw * (v.conj() * rest).re;
            }
        }
        r0 += (c * c.adjoint()) * Complex64::new(aw * v2 * energy, 0.0);
    }
    let (_, lambda_max) = crate::linalg::hermitian_eigen_range(&r0);
    let lambda_max = lambda_max.max(0.0);
    // b₀ = (R₀ − λ I) u₀ − r₀
    let b = &r0 * &u0 - &u0 * Complex64::new(lambda_max, 0.0) - &lin;
    let offset = 2.0 * lambda_max * l as f64 - crate::linalg::quad_form(&r0, &u0) + constant;
    RateMajorizer {
        antenna: m,
        anchor: point.positions[m],
        wavelength: links.wavelength,
        cosine: CosineSum::from_coefficients(&b, &view.directions),
        offset,
    }
}

pub(crate) fn power_minorizers_with(links: &Links, point: &DesignPoint, m: usize) -> Vec<PowerMinorizer> {
    let view = AntennaView::new(links, point);
    let u0 = view.responses.column(m).into_owned();
    let beams: Vec<&DVector<Complex64>> = point.beams().collect();
    view.ehr
        .iter()
        .enumerate()
        .map(|(j, d)| {
            // g_j as an M-vector, g_j[n] = conj(d_jᴴ u_n)
            let g0: DVector<Complex64> = (view.responses.adjoint() * d).into_owned();
            let responses: Vec<Complex64> = beams.iter().map(|f| g0.dotc(f)).collect();
            let anchor_power: f64 = responses.iter().map(|z| z.norm_sqr()).sum();
            // (W g0)_m = Σ_k f_k[m] (f_kᴴ g0)
            let wg_m: Complex64 = beams.iter().zip(&responses).map(|(f, r)| f[m] * r.conj()).sum();
            let b1 = d * wg_m.conj();
            let at_anchor = 2.0 * crate::linalg::re_inner(&b1, &u0);
            PowerMinorizer {
                antenna: m,
                ehr: j,
                anchor: point.positions[m],
                wavelength: links.wavelength,
                cosine: CosineSum::from_coefficients(&b1, &view.directions),
                offset: anchor_power - at_anchor,
                anchor_power,
            }
        })
        .collect()
}

/// Rate-side majorizer for antenna `m`.
pub fn rate_gradient_and_bound(
    point: &DesignPoint,
    channels: &ChannelSet,
    aux: &AuxiliaryState,
    config: &ScenarioConfig,
    m: usize,
) -> Result<RateMajorizer> {
    check_antenna(point, m)?;
    Ok(rate_majorizer_with(&Links::new(channels), point, aux, config, m))
}

/// Power-side minorizers for antenna `m`, one per EHR.
pub fn build_power_surrogate(point: &DesignPoint, channels: &ChannelSet, m: usize) -> Result<Vec<PowerMinorizer>> {
    check_antenna(point, m)?;
    Ok(power_minorizers_with(&Links::new(channels), point, m))
}

/// `ê_sᵀ (t_m − t_s) ≥ D_B` with `ê_s` the unit vector from `t_s` to the
/// current `t_m`, as `(ê_s, ê_sᵀ t_s + D_B)`.
pub fn linearize_spacing(positions: &[Vector2<f64>], m: usize, min_spacing: f64) -> Result<Vec<(Vector2<f64>, f64)>> {
    let mut out = Vec::new();
    for (s, other) in positions.iter().enumerate() {
        if s == m {
            continue;
        }
        let diff = positions[m] - other;
        let norm = diff.norm();
        if norm == 0.0 {
            return Err(Error::CoincidentAntennas(m.min(s), m.max(s)));
        }
        let e = diff / norm;
        out.push((e, e.dot(other) + min_spacing));
    }
    Ok(out)
}

/// Linearized field-response direction of antenna `m`: the unit vectors
/// `ρ_l` and the wavenumber `2π/λ`.
pub fn linearized_direction_vector(channels: &ChannelSet, point: &DesignPoint, m: usize) -> Result<DVector<Complex64>> {
    check_antenna(point, m)?;
    let links = Links::new(channels);
    Ok(steering(&point.positions[m], &links.tx_directions, links.wavelength))
}

/// Constraints shared by both position subproblems, in the displacement
/// `y = (t_m − t_m⁰)/λ` (the first two real variables).
fn geometry_constraints(
    problem: ConvexSubproblem,
    point: &DesignPoint,
    config: &ScenarioConfig,
    m: usize,
    real_dim: usize,
) -> Result<ConvexSubproblem> {
    let lambda = config.carrier_wavelength;
    let t0 = point.positions[m];
    let mut problem = problem;
    for (e, bound) in linearize_spacing(&point.positions, m, config.min_spacing)? {
        // −ê·(t0 + λ y) ≤ −bound
        let mut d = DVector::zeros(real_dim);
        d[0] = -e.x;
        d[1] = -e.y;
        let rhs = (e.dot(&t0) - bound) / lambda;
        problem = problem.subject_to(Constraint::Affine {
            complex: DVector::zeros(0),
            real: d,
            bound: rhs,
        });
    }
    let half = config.region_size / 2.0;
    for (index, c) in [t0.x, t0.y].into_iter().enumerate() {
        problem = problem.subject_to(Constraint::Box {
            index,
            lower: (-half - c) / lambda,
            upper: (half - c) / lambda,
        });
    }
    Ok(problem)
}

fn power_constraint(p: &PowerMinorizer, threshold: f64, reference: Option<f64>, real_dim: usize) -> Constraint {
    // threshold − P_j(t0) − ∇ᵀy + ½ yᵀ M y ≤ β
    let (g, mm) = p.expansion();
    let scale = reference.unwrap_or(1.0);
    let mut matrix = DMatrix::zeros(real_dim, real_dim);
    matrix.view_mut((0, 0), (2, 2)).copy_from(&(mm * (0.5 / scale)));
    let mut linear = DVector::zeros(real_dim);
    linear[0] = -g.x / scale;
    linear[1] = -g.y / scale;
    if reference.is_some() {
        linear[2] = -1.0;
    }
    Constraint::Quadratic {
        complex: None,
        real: Some(RealQuadratic::new(matrix, linear, (threshold - p.anchor_power) / scale)),
    }
}

fn moved(point: &DesignPoint, m: usize, y: &DVector<f64>, wavelength: f64) -> DesignPoint {
    let mut p = point.clone();
    p.positions[m] += Vector2::new(y[0], y[1]) * wavelength;
    p
}

pub(crate) fn position_subproblem_with(
    links: &Links,
    point: &DesignPoint,
    aux: &AuxiliaryState,
    config: &ScenarioConfig,
    m: usize,
) -> Result<ConvexSubproblem> {
    let major = rate_majorizer_with(links, point, aux, config, m);
    let tau0 = point.positions[m] / config.carrier_wavelength;
    let g = major.cosine.gradient(&tau0);
    let mut curvature = major.cosine.curvature_bound();
    if curvature.max() <= 1e-12 {
        curvature += Matrix2::identity() * 1e-12;
    }
    // ∇ᵀy + ½ yᵀ M y
    let objective = RealQuadratic::new(
        DMatrix::from_row_slice(2, 2, (curvature * 0.5).transpose().as_slice()),
        DVector::from_row_slice(&[g.x, g.y]),
        0.0,
    );
    let mut problem = ConvexSubproblem::new(0, 2).minimize_real(objective);
    for p in power_minorizers_with(links, point, m) {
        problem = problem.subject_to(power_constraint(&p, config.ehr_thresholds[p.ehr], None, 2));
    }
    problem = geometry_constraints(problem, point, config, m, 2)?;
    Ok(problem.starting_at(DVector::zeros(0), DVector::zeros(2)))
}

/// The convex subproblem for antenna `m`, in the displacement measured in
/// wavelengths.
pub fn position_subproblem(
    point: &DesignPoint,
    channels: &ChannelSet,
    aux: &AuxiliaryState,
    config: &ScenarioConfig,
    m: usize,
) -> Result<ConvexSubproblem> {
    check_antenna(point, m)?;
    position_subproblem_with(&Links::new(channels), point, aux, config, m)
}

/// One MM step for antenna `m`. Returns `None` if the step failed or would
/// lower the surrogate or break a constraint.
pub(crate) fn position_step(
    links: &Links,
    point: &DesignPoint,
    aux: &AuxiliaryState,
    config: &ScenarioConfig,
    m: usize,
) -> Option<DesignPoint> {
    let problem = position_subproblem_with(links, point, aux, config, m).ok()?;
    let sol = problem.solve(&config.solver.qcqp).ok()?;
    if !matches!(sol.report.status, Status::Optimal | Status::MaxIterations) {
        return None;
    }
    let candidate = moved(point, m, &sol.real, config.carrier_wavelength);
    let eq0 = links.equivalent(point);
    let eq = links.equivalent(&candidate);
    let before = surrogate_from(&eq0, point, aux, config);
    let after = surrogate_from(&eq, &candidate, aux, config);
    let report = constraint_report_with(&eq, &candidate, config);
    (after >= before && report.is_feasible(config)).then_some(candidate)
}

/// New position of antenna `m` after one MM step; the current position if
/// the step is rejected.
pub fn solve_position_subproblem(
    point: &DesignPoint,
    channels: &ChannelSet,
    aux: &AuxiliaryState,
    config: &ScenarioConfig,
    m: usize,
) -> Result<Vector2<f64>> {
    check_antenna(point, m)?;
    let links = Links::new(channels);
    Ok(position_step(&links, point, aux, config, m).map_or(point.positions[m], |p| p.positions[m]))
}

pub(crate) fn feasibility_step(links: &Links, point: &DesignPoint, config: &ScenarioConfig, m: usize, reference: f64) -> Option<DesignPoint> {
    let minorizers = power_minorizers_with(links, point, m);
    let worst = minorizers
        .iter()
        .map(|p| config.ehr_thresholds[p.ehr] - p.anchor_power)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut problem = ConvexSubproblem::new(0, 3).minimize_real(RealQuadratic::linear(DVector::from_row_slice(&[0.0, 0.0, 1.0]), 0.0));
    for p in &minorizers {
        problem = problem.subject_to(power_constraint(p, config.ehr_thresholds[p.ehr], Some(reference), 3));
    }
    let problem = geometry_constraints(problem, point, config, m, 3)
        .ok()?
        .starting_at(DVector::zeros(0), DVector::from_row_slice(&[0.0, 0.0, worst / reference + 1.0]));
    let sol = problem.solve(&config.solver.qcqp).ok()?;
    if !matches!(sol.report.status, Status::Optimal | Status::MaxIterations) {
        return None;
    }
    let candidate = moved(point, m, &sol.real, config.carrier_wavelength);
    let report = constraint_report_with(&links.equivalent(&candidate), &candidate, config);
    report.geometry_satisfied().then_some(candidate)
}

/// Position of antenna `m` after one step that lowers the worst EHR
/// shortfall; the current position if no improvement was found.
pub fn solve_position_feasibility(point: &DesignPoint, channels: &ChannelSet, config: &ScenarioConfig, m: usize) -> Result<Vector2<f64>> {
    check_antenna(point, m)?;
    let links = Links::new(channels);
    let reference = config.max_ehr_threshold().max(f64::MIN_POSITIVE);
    let before = crate::system::constraint_report(point, channels, config).worst_ehr_shortfall();
    Ok(match feasibility_step(&links, point, config, m, reference) {
        Some(p) if crate::system::constraint_report(&p, channels, config).worst_ehr_shortfall() <= before => p.positions[m],
        _ => point.positions[m],
    })
}
