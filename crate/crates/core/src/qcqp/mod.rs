//! Convex quadratically constrained subproblems.
//!
//! A [`ConvexSubproblem`] has complex variables `x ∈ Cⁿ` and real variables
//! `y ∈ Rᵖ`. It is converted to real form `z = [Re x; Im x; y]` by
//! [`ConvexSubproblem::realify`] and solved with a primal-dual interior-point
//! method ([`ipm`]). A diminishing-step subgradient method on an exact
//! penalty takes over if the interior-point iteration breaks down.

pub mod ipm;

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{is_hermitian_psd, quad_form, re_inner, real_eigen_range};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Duality-gap and dual-residual tolerance on the normalized problem.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_iterations: 200 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    Infeasible,
    MaxIterations,
    NumericalFailure,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveStatus {
    pub status: Status,
    /// Objective at the returned point, original units.
    pub objective_value: f64,
    /// Largest constraint violation at the returned point, original units.
    pub primal_residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub complex: DVector<Complex64>,
    pub real: DVector<f64>,
    pub report: SolveStatus,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.report.status == Status::Optimal
    }
}

/// `xᴴ Q x − 2 Re{qᴴ x} + c` with `Q` Hermitian PSD.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexQuadratic {
    pub matrix: DMatrix<Complex64>,
    pub linear: DVector<Complex64>,
    pub constant: f64,
}

impl ComplexQuadratic {
    pub fn new(matrix: DMatrix<Complex64>, linear: DVector<Complex64>, constant: f64) -> Self {
        Self { matrix, linear, constant }
    }

    pub fn value(&self, x: &DVector<Complex64>) -> f64 {
        quad_form(&self.matrix, x) - 2.0 * re_inner(&self.linear, x) + self.constant
    }
}

/// `yᵀ P y + gᵀ y + c` with `P` symmetric PSD.
#[derive(Clone, Debug, PartialEq)]
pub struct RealQuadratic {
    pub matrix: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub constant: f64,
}

impl RealQuadratic {
    pub fn new(matrix: DMatrix<f64>, linear: DVector<f64>, constant: f64) -> Self {
        Self { matrix, linear, constant }
    }

    pub fn linear(linear: DVector<f64>, constant: f64) -> Self {
        let p = linear.len();
        Self { matrix: DMatrix::zeros(p, p), linear, constant }
    }

    pub fn value(&self, y: &DVector<f64>) -> f64 {
        y.dot(&(&self.matrix * y)) + self.linear.dot(y) + self.constant
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    /// `Re{aᴴ x} + dᵀ y ≤ b`.
    Affine { complex: DVector<Complex64>, real: DVector<f64>, bound: f64 },
    /// `Σ_{k∈S} |x_k − s_k|² ≤ r²`.
    NormBall { indices: Vec<usize>, center: DVector<Complex64>, radius: f64 },
    /// `lower ≤ y_k ≤ upper`; either side may be infinite.
    Box { index: usize, lower: f64, upper: f64 },
    /// `xᴴ A x − 2 Re{aᴴ x} + yᵀ B y + dᵀ y + c ≤ 0`.
    Quadratic { complex: Option<ComplexQuadratic>, real: Option<RealQuadratic> },
}

impl Constraint {
    /// `Σ_{k∈S} |x_k|² ≤ budget`.
    pub fn power_budget(indices: Vec<usize>, budget: f64) -> Self {
        let center = DVector::zeros(indices.len());
        Constraint::NormBall { indices, center, radius: budget.max(0.0).sqrt() }
    }

    /// Signed value in `g(x, y) ≤ 0` form.
    pub fn value(&self, x: &DVector<Complex64>, y: &DVector<f64>) -> f64 {
        match self {
            Constraint::Affine { complex, real, bound } => re_inner(complex, x) + real.dot(y) - bound,
            Constraint::NormBall { indices, center, radius } => {
                indices.iter().zip(center.iter()).map(|(k, s)| (x[*k] - s).norm_sqr()).sum::<f64>() - radius * radius
            }
            Constraint::Box { index, lower, upper } => (y[*index] - upper).max(lower - y[*index]),
            Constraint::Quadratic { complex, real } => {
                complex.as_ref().map_or(0.0, |q| q.value(x)) + real.as_ref().map_or(0.0, |q| q.value(y))
            }
        }
    }
}

/// A convex QCQP in complex and real variables.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexSubproblem {
    pub complex_dim: usize,
    pub real_dim: usize,
    pub complex_objective: Option<ComplexQuadratic>,
    pub real_objective: Option<RealQuadratic>,
    pub constraints: Vec<Constraint>,
    /// Optional starting point; the anchor of an MM step is the natural one.
    pub start: Option<(DVector<Complex64>, DVector<f64>)>,
}

impl ConvexSubproblem {
    pub fn new(complex_dim: usize, real_dim: usize) -> Self {
        Self {
            complex_dim,
            real_dim,
            complex_objective: None,
            real_objective: None,
            constraints: Vec::new(),
            start: None,
        }
    }

    pub fn minimize_complex(mut self, objective: ComplexQuadratic) -> Self {
        self.complex_objective = Some(objective);
        self
    }

    pub fn minimize_real(mut self, objective: RealQuadratic) -> Self {
        self.real_objective = Some(objective);
        self
    }

    pub fn subject_to(mut self, constraint: Constraint) -> Self {
        self.constraints.push(constraint);
        self
    }

    pub fn starting_at(mut self, x: DVector<Complex64>, y: DVector<f64>) -> Self {
        self.start = Some((x, y));
        self
    }

    pub fn objective_value(&self, x: &DVector<Complex64>, y: &DVector<f64>) -> f64 {
        self.complex_objective.as_ref().map_or(0.0, |q| q.value(x))
            + self.real_objective.as_ref().map_or(0.0, |q| q.value(y))
    }

    pub fn constraint_values(&self, x: &DVector<Complex64>, y: &DVector<f64>) -> Vec<f64> {
        self.constraints.iter().map(|c| c.value(x, y)).collect()
    }

    /// Largest constraint violation (zero when feasible).
    pub fn max_violation(&self, x: &DVector<Complex64>, y: &DVector<f64>) -> f64 {
        self.constraints.iter().map(|c| c.value(x, y)).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.complex_dim;
        let p = self.real_dim;
        let bad = |m: String| Err(Error::InvalidInput(m));
        let finite_c = |v: &DVector<Complex64>| v.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        let finite_r = |v: &DVector<f64>| v.iter().all(|z| z.is_finite());
        let check_cq = |q: &ComplexQuadratic, what: &str| -> Result<()> {
            if q.matrix.shape() != (n, n) || q.linear.len() != n {
                return Err(Error::InvalidInput(format!("{what}: complex quadratic has wrong dimensions")));
            }
            if !q.matrix.iter().all(|z| z.re.is_finite() && z.im.is_finite()) || !finite_c(&q.linear) || !q.constant.is_finite() {
                return Err(Error::InvalidInput(format!("{what}: non-finite data")));
            }
            if !is_hermitian_psd(&q.matrix, 1e-9) {
                return Err(Error::InvalidInput(format!("{what}: matrix is not Hermitian PSD")));
            }
            Ok(())
        };
        let check_rq = |q: &RealQuadratic, what: &str| -> Result<()> {
            if q.matrix.shape() != (p, p) || q.linear.len() != p {
                return Err(Error::InvalidInput(format!("{what}: real quadratic has wrong dimensions")));
            }
            if !q.matrix.iter().all(|z| z.is_finite()) || !finite_r(&q.linear) || !q.constant.is_finite() {
                return Err(Error::InvalidInput(format!("{what}: non-finite data")));
            }
            let scale = q.matrix.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            if scale > 0.0 {
                let asym = (&q.matrix - q.matrix.transpose()).iter().fold(0.0f64, |a, b| a.max(b.abs()));
                if asym > 1e-9 * scale || real_eigen_range(&q.matrix).0 < -1e-9 * scale {
                    return Err(Error::InvalidInput(format!("{what}: matrix is not symmetric PSD")));
                }
            }
            Ok(())
        };
        if let Some(q) = &self.complex_objective {
            check_cq(q, "objective")?;
        }
        if let Some(q) = &self.real_objective {
            check_rq(q, "objective")?;
        }
        for (i, c) in self.constraints.iter().enumerate() {
            let what = format!("constraint {i}");
            match c {
                Constraint::Affine { complex, real, bound } => {
                    if complex.len() != n || real.len() != p {
                        return bad(format!("{what}: affine data has wrong dimensions"));
                    }
                    if !finite_c(complex) || !finite_r(real) || !bound.is_finite() {
                        return bad(format!("{what}: non-finite data"));
                    }
                }
                Constraint::NormBall { indices, center, radius } => {
                    if indices.len() != center.len() || indices.iter().any(|k| *k >= n) {
                        return bad(format!("{what}: ball indices out of range"));
                    }
                    if !finite_c(center) || !(radius.is_finite() && *radius >= 0.0) {
                        return bad(format!("{what}: invalid ball data"));
                    }
                }
                Constraint::Box { index, lower, upper } => {
                    if *index >= p || lower.is_nan() || upper.is_nan() || lower > upper {
                        return bad(format!("{what}: invalid box"));
                    }
                }
                Constraint::Quadratic { complex, real } => {
                    if let Some(q) = complex {
                        check_cq(q, &what)?;
                    }
                    if let Some(q) = real {
                        check_rq(q, &what)?;
                    }
                }
            }
        }
        if let Some((x, y)) = &self.start {
            if x.len() != n || y.len() != p || !finite_c(x) || !finite_r(y) {
                return bad("start point has wrong dimension or non-finite entries".into());
            }
        }
        Ok(())
    }

    /// Real-valued equivalent on `z = [Re x; Im x; y]`.
    pub fn realify(&self) -> RealProblem {
        let n = self.complex_dim;
        let d = 2 * n + self.real_dim;
        let mut objective = RealFunction::zero(d);
        if let Some(q) = &self.complex_objective {
            objective.add_complex_quadratic(q, n);
        }
        if let Some(q) = &self.real_objective {
            objective.add_real_quadratic(q, 2 * n);
        }
        let mut constraints = Vec::new();
        for c in &self.constraints {
            match c {
                Constraint::Affine { complex, real, bound } => {
                    let mut f = RealFunction::zero(d);
                    for k in 0..n {
                        f.linear[k] = complex[k].re;
                        f.linear[n + k] = complex[k].im;
                    }
                    f.linear.rows_mut(2 * n, self.real_dim).copy_from(real);
                    f.constant = -bound;
                    constraints.push(f);
                }
                Constraint::NormBall { indices, center, radius } => {
                    let mut f = RealFunction::zero(d);
                    let mut diag = Vec::with_capacity(2 * indices.len());
                    let mut c = -radius * radius;
                    for (k, s) in indices.iter().zip(center.iter()) {
                        diag.push((*k, 1.0));
                        diag.push((n + *k, 1.0));
                        f.linear[*k] -= 2.0 * s.re;
                        f.linear[n + *k] -= 2.0 * s.im;
                        c += s.norm_sqr();
                    }
                    f.curvature = Curvature::Diagonal(diag);
                    f.constant = c;
                    constraints.push(f);
                }
                Constraint::Box { index, lower, upper } => {
                    let k = 2 * n + index;
                    if upper.is_finite() {
                        let mut f = RealFunction::zero(d);
                        f.linear[k] = 1.0;
                        f.constant = -upper;
                        constraints.push(f);
                    }
                    if lower.is_finite() {
                        let mut f = RealFunction::zero(d);
                        f.linear[k] = -1.0;
                        f.constant = *lower;
                        constraints.push(f);
                    }
                }
                Constraint::Quadratic { complex, real } => {
                    let mut f = RealFunction::zero(d);
                    if let Some(q) = complex {
                        f.add_complex_quadratic(q, n);
                    }
                    if let Some(q) = real {
                        f.add_real_quadratic(q, 2 * n);
                    }
                    constraints.push(f);
                }
            }
        }
        RealProblem { dim: d, objective, constraints }
    }

    fn split(&self, z: &DVector<f64>) -> (DVector<Complex64>, DVector<f64>) {
        let n = self.complex_dim;
        let x = DVector::from_fn(n, |k, _| Complex64::new(z[k], z[n + k]));
        let y = z.rows(2 * n, self.real_dim).into_owned();
        (x, y)
    }

    fn join(&self, x: &DVector<Complex64>, y: &DVector<f64>) -> DVector<f64> {
        let n = self.complex_dim;
        let mut z = DVector::zeros(2 * n + self.real_dim);
        for k in 0..n {
            z[k] = x[k].re;
            z[n + k] = x[k].im;
        }
        z.rows_mut(2 * n, self.real_dim).copy_from(y);
        z
    }

    /// Solves the problem. Invalid data is reported as an error; solver
    /// outcomes (including infeasibility) are reported in the status.
    pub fn solve(&self, options: &SolverOptions) -> Result<Solution> {
        self.validate()?;
        let real = self.realify();
        let z0 = match &self.start {
            Some((x, y)) => self.join(x, y),
            None => DVector::zeros(real.dim),
        };
        let out = ipm::solve_real(&real, &z0, options);
        let (x, y) = self.split(&out.z);
        let report = SolveStatus {
            status: out.status,
            objective_value: self.objective_value(&x, &y),
            primal_residual: self.max_violation(&x, &y),
            iterations: out.iterations,
        };
        Ok(Solution { complex: x, real: y, report })
    }

    /// Writes the realified problem as JSON: `dim`, `objective` and
    /// `constraints`, each function given by `curvature` (row-major matrix
    /// `P`), `linear` (`g`) and `constant` (`c`) meaning `zᵀPz + gᵀz + c`,
    /// constraints in `≤ 0` form.
    pub fn dump_json(&self, path: &Path) -> Result<()> {
        let real = self.realify();
        let func = |f: &RealFunction| {
            let p = f.dense_curvature(real.dim);
            serde_json::json!({
                "curvature": p.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
                "linear": f.linear.iter().copied().collect::<Vec<_>>(),
                "constant": f.constant,
            })
        };
        let doc = serde_json::json!({
            "complex_dim": self.complex_dim,
            "real_dim": self.real_dim,
            "dim": real.dim,
            "objective": func(&real.objective),
            "constraints": real.constraints.iter().map(func).collect::<Vec<_>>(),
        });
        std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
        Ok(())
    }
}

/// Solves `problem`; see [`ConvexSubproblem::solve`].
pub fn solve(problem: &ConvexSubproblem, options: &SolverOptions) -> Result<Solution> {
    problem.solve(options)
}

/// Quadratic part of a real function.
#[derive(Clone, Debug, PartialEq)]
pub enum Curvature {
    Zero,
    /// Sparse diagonal `P = Σ w e_k e_kᵀ`.
    Diagonal(Vec<(usize, f64)>),
    Dense(DMatrix<f64>),
}

/// `zᵀ P z + gᵀ z + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealFunction {
    pub curvature: Curvature,
    pub linear: DVector<f64>,
    pub constant: f64,
}

impl RealFunction {
    pub fn zero(dim: usize) -> Self {
        Self { curvature: Curvature::Zero, linear: DVector::zeros(dim), constant: 0.0 }
    }

    fn dense_mut(&mut self) -> &mut DMatrix<f64> {
        let d = self.linear.len();
        let current = std::mem::replace(&mut self.curvature, Curvature::Zero);
        self.curvature = Curvature::Dense(match current {
            Curvature::Zero => DMatrix::zeros(d, d),
            Curvature::Diagonal(entries) => {
                let mut m = DMatrix::zeros(d, d);
                for (k, w) in entries {
                    m[(k, k)] += w;
                }
                m
            }
            Curvature::Dense(m) => m,
        });
        match &mut self.curvature {
            Curvature::Dense(m) => m,
            _ => unreachable!(),
        }
    }

    fn add_complex_quadratic(&mut self, q: &ComplexQuadratic, n: usize) {
        if q.matrix.iter().any(|z| *z != Complex64::new(0.0, 0.0)) {
            let p = self.dense_mut();
            for r in 0..n {
                for c in 0..n {
                    let v = q.matrix[(r, c)];
                    // Hermitian part only, so that the block form is symmetric.
                    let w = (v + q.matrix[(c, r)].conj()) * 0.5;
                    p[(r, c)] += w.re;
                    p[(n + r, n + c)] += w.re;
                    p[(r, n + c)] -= w.im;
                    p[(n + r, c)] += w.im;
                }
            }
        }
        for k in 0..n {
            self.linear[k] -= 2.0 * q.linear[k].re;
            self.linear[n + k] -= 2.0 * q.linear[k].im;
        }
        self.constant += q.constant;
    }

    fn add_real_quadratic(&mut self, q: &RealQuadratic, offset: usize) {
        let pdim = q.linear.len();
        if q.matrix.iter().any(|v| *v != 0.0) {
            let p = self.dense_mut();
            for r in 0..pdim {
                for c in 0..pdim {
                    p[(offset + r, offset + c)] += 0.5 * (q.matrix[(r, c)] + q.matrix[(c, r)]);
                }
            }
        }
        for k in 0..pdim {
            self.linear[offset + k] += q.linear[k];
        }
        self.constant += q.constant;
    }

    pub fn dense_curvature(&self, dim: usize) -> DMatrix<f64> {
        match &self.curvature {
            Curvature::Zero => DMatrix::zeros(dim, dim),
            Curvature::Diagonal(entries) => {
                let mut m = DMatrix::zeros(dim, dim);
                for (k, w) in entries {
                    m[(*k, *k)] += w;
                }
                m
            }
            Curvature::Dense(m) => m.clone(),
        }
    }

    pub fn value(&self, z: &DVector<f64>) -> f64 {
        let quad = match &self.curvature {
            Curvature::Zero => 0.0,
            Curvature::Diagonal(entries) => entries.iter().map(|(k, w)| w * z[*k] * z[*k]).sum(),
            Curvature::Dense(m) => z.dot(&(m * z)),
        };
        quad + self.linear.dot(z) + self.constant
    }

    pub fn gradient(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut g = self.linear.clone();
        match &self.curvature {
            Curvature::Zero => {}
            Curvature::Diagonal(entries) => {
                for (k, w) in entries {
                    g[*k] += 2.0 * w * z[*k];
                }
            }
            Curvature::Dense(m) => g += (m * z) * 2.0,
        }
        g
    }

    /// `k += weight · ∇²f`.
    pub fn add_hessian(&self, weight: f64, k: &mut DMatrix<f64>) {
        match &self.curvature {
            Curvature::Zero => {}
            Curvature::Diagonal(entries) => {
                for (i, w) in entries {
                    k[(*i, *i)] += 2.0 * weight * w;
                }
            }
            Curvature::Dense(m) => *k += m * (2.0 * weight),
        }
    }

    pub fn is_constant(&self) -> bool {
        let curved = match &self.curvature {
            Curvature::Zero => false,
            Curvature::Diagonal(e) => e.iter().any(|(_, w)| *w != 0.0),
            Curvature::Dense(m) => m.iter().any(|v| *v != 0.0),
        };
        !curved && self.linear.iter().all(|v| *v == 0.0)
    }

    /// Largest absolute coefficient.
    pub fn magnitude(&self) -> f64 {
        let curv = match &self.curvature {
            Curvature::Zero => 0.0,
            Curvature::Diagonal(e) => e.iter().fold(0.0f64, |a, (_, w)| a.max(w.abs())),
            Curvature::Dense(m) => m.iter().fold(0.0f64, |a, v| a.max(v.abs())),
        };
        let lin = self.linear.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        curv.max(lin).max(self.constant.abs())
    }

    pub fn scaled(&self, s: f64) -> Self {
        let curvature = match &self.curvature {
            Curvature::Zero => Curvature::Zero,
            Curvature::Diagonal(e) => Curvature::Diagonal(e.iter().map(|(k, w)| (*k, w * s)).collect()),
            Curvature::Dense(m) => Curvature::Dense(m * s),
        };
        Self { curvature, linear: &self.linear * s, constant: self.constant * s }
    }

    /// The same function with `extra` zero-coefficient variables appended.
    pub fn extended(&self, extra: usize) -> Self {
        let d = self.linear.len();
        let curvature = match &self.curvature {
            Curvature::Dense(m) => Curvature::Dense(m.clone().resize(d + extra, d + extra, 0.0)),
            other => other.clone(),
        };
        Self { curvature, linear: self.linear.clone().resize_vertically(d + extra, 0.0), constant: self.constant }
    }
}

/// Real form of a [`ConvexSubproblem`]: minimize `objective` subject to
/// `constraints[i](z) ≤ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealProblem {
    pub dim: usize,
    pub objective: RealFunction,
    pub constraints: Vec<RealFunction>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn realify_identity_quadratic() {
        let p = ConvexSubproblem::new(2, 0).minimize_complex(ComplexQuadratic::new(
            DMatrix::identity(2, 2),
            DVector::zeros(2),
            0.0,
        ));
        let r = p.realify();
        let z = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        assert!((r.objective.value(&z) - (1.0 + 4.0 + 0.25 + 9.0)).abs() < 1e-14);
    }

    #[test]
    fn imaginary_linear_term_vanishes_on_real_points() {
        let q = ComplexQuadratic::new(DMatrix::zeros(2, 2), DVector::from_vec(vec![c(0.0, 1.0), c(0.0, -3.0)]), 0.0);
        let x = DVector::from_vec(vec![c(2.0, 0.0), c(-1.0, 0.0)]);
        assert_eq!(q.value(&x), 0.0);
        let p = ConvexSubproblem::new(2, 0).minimize_complex(q);
        let z = DVector::from_vec(vec![2.0, -1.0, 0.0, 0.0]);
        assert_eq!(p.realify().objective.value(&z), 0.0);
    }

    #[test]
    fn validation_rejects_indefinite_objective() {
        let mut m = DMatrix::identity(2, 2);
        m[(1, 1)] = c(-1.0, 0.0);
        let p = ConvexSubproblem::new(2, 0).minimize_complex(ComplexQuadratic::new(m, DVector::zeros(2), 0.0));
        assert!(p.validate().is_err());
        let bad_ball = ConvexSubproblem::new(1, 0).subject_to(Constraint::NormBall {
            indices: vec![3],
            center: DVector::zeros(1),
            radius: 1.0,
        });
        assert!(bad_ball.validate().is_err());
    }

    #[test]
    fn dump_has_documented_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        let p = ConvexSubproblem::new(1, 1)
            .minimize_complex(ComplexQuadratic::new(DMatrix::identity(1, 1), DVector::zeros(1), 0.0))
            .subject_to(Constraint::Box { index: 0, lower: -1.0, upper: 1.0 });
        p.dump_json(&path).unwrap();
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(v["dim"], 3);
        assert_eq!(v["constraints"].as_array().unwrap().len(), 2);
        assert_eq!(v["objective"]["curvature"][0][0], 1.0);
    }
}
