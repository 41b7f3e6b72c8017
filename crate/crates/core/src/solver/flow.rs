//! Projected descent on the discrete energy, keeping the end constraint
//! satisfied after every step.
//!
//! Directions are preconditioned by a tridiagonal Sobolev metric built from
//! the energy Hessian, then projected onto the linearised constraint. Accepted
//! points are pulled back onto the constraint by Gauss-Newton in the same metric.

use nalgebra::{Matrix2, Vector2};
use serde::Serialize;

use super::banded::solve_tridiagonal_spd;
use super::model::AngleModel;
use crate::curve::PlanarCurve;
use crate::energy::BoundaryCondition;
use crate::error::{Error, Result};

/// Symmetric positive definite metric on the free angles.
pub struct Metric {
    first: usize,
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Metric {
    /// Energy Hessian with its curvature factor floored, plus an `L²` shift.
    pub fn at(model: &AngleModel, theta: &[f64], floor_ratio: f64) -> Self {
        let n = theta.len();
        let h = model.h();
        let l = model.grid.length();
        let kap = model.cell_curvatures(theta);
        let floor = model.d2_floor(theta);
        let d2: Vec<f64> = kap.iter().map(|&k| model.density_d2(k, floor)).collect();
        let mean = d2.iter().sum::<f64>() / d2.len() as f64;
        let cut = floor_ratio * mean.max(f64::MIN_POSITIVE);
        let first = usize::from(!model.is_free(0));
        let last = if model.is_free(n - 1) { n - 1 } else { n - 2 };
        let m = last + 1 - first;
        let mut diag = vec![mean * h / (l * l); m];
        let mut off = vec![0.0; m.saturating_sub(1)];
        for (c, &v) in d2.iter().enumerate() {
            let a = v.max(cut) / h;
            let (i, j) = (c, c + 1);
            if i >= first && i <= last {
                diag[i - first] += a;
            }
            if j >= first && j <= last {
                diag[j - first] += a;
            }
            if i >= first && j <= last {
                off[i - first] = -a;
            }
        }
        Self { first, diag, off }
    }

    /// `M⁻¹ v` on the free nodes; fixed entries of the result are zero.
    pub fn solve(&self, v: &[f64]) -> Vec<f64> {
        let m = self.diag.len();
        let b = &v[self.first..self.first + m];
        let x = solve_tridiagonal_spd(&self.diag, &self.off, b);
        let mut out = vec![0.0; v.len()];
        out[self.first..self.first + m].copy_from_slice(&x);
        out
    }
}

/// Linearised end constraint `A = ∂X_N/∂θ` (two rows) on the free nodes.
fn constraint_rows(model: &AngleModel, theta: &[f64]) -> [Vec<f64>; 2] {
    let cols = model.end_jacobian(theta);
    let mut a = [vec![0.0; theta.len()], vec![0.0; theta.len()]];
    for (i, c) in cols.iter().enumerate() {
        if model.is_free(i) {
            a[0][i] = c.x;
            a[1][i] = c.y;
        }
    }
    a
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `M⁻¹Aᵀ` columns and the Schur complement `A M⁻¹ Aᵀ`.
fn schur(metric: &Metric, a: &[Vec<f64>; 2]) -> ([Vec<f64>; 2], Matrix2<f64>) {
    let ma = [metric.solve(&a[0]), metric.solve(&a[1])];
    let s = Matrix2::new(dot(&a[0], &ma[0]), dot(&a[0], &ma[1]), dot(&a[1], &ma[0]), dot(&a[1], &ma[1]));
    (ma, s)
}

/// Removes from `v` its component violating the linearised constraint,
/// orthogonally in the metric.
pub fn project_direction(model: &AngleModel, metric: &Metric, theta: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let a = constraint_rows(model, theta);
    let (ma, s) = schur(metric, &a);
    let inv = s.try_inverse().ok_or_else(|| Error::ProjectionFailed("singular constraint Gram matrix".into()))?;
    let lam = inv * Vector2::new(dot(&a[0], v), dot(&a[1], v));
    Ok(v.iter().enumerate().map(|(i, &x)| x - ma[0][i] * lam.x - ma[1][i] * lam.y).collect())
}

/// Gauss-Newton pull-back onto `X_N = end`, fixed angles imposed. Iterates
/// down to roundoff rather than stopping at `tol`: the energy moves by the end
/// force times the residual, which would otherwise drown small descents.
pub fn project_onto_constraint(model: &AngleModel, metric: &Metric, theta: &[f64], tol: f64) -> Result<Vec<f64>> {
    let mut t = theta.to_vec();
    model.impose_fixed(&mut t);
    let target = tol * model.grid.length();
    let floor = 16.0 * f64::EPSILON * model.grid.length();
    let mut last = f64::INFINITY;
    for _ in 0..30 {
        let r = model.end_residual(&t);
        let norm = r.norm();
        if norm <= floor || !(norm < last) || (norm <= target && norm > 0.5 * last) {
            break;
        }
        last = norm;
        let a = constraint_rows(model, &t);
        let (ma, s) = schur(metric, &a);
        let inv = s.try_inverse().ok_or_else(|| Error::ProjectionFailed("singular constraint Gram matrix".into()))?;
        let lam = inv * r;
        for i in 0..t.len() {
            t[i] -= ma[0][i] * lam.x + ma[1][i] * lam.y;
        }
    }
    let r = model.end_residual(&t).norm();
    if r <= target {
        Ok(t)
    } else {
        Err(Error::ProjectionFailed(format!("end residual {r:.3e} above {target:.3e}")))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FlowOptions {
    /// Maximum number of accepted steps.
    pub budget: usize,
    /// Armijo constant.
    pub armijo: f64,
    /// Projection tolerance relative to the length.
    pub projection_tol: f64,
    /// Stop once the energy falls below this value.
    pub stop_below: Option<f64>,
    /// Floor of the metric stiffness relative to its mean.
    pub metric_floor: f64,
    /// Largest step multiple tried by the line search.
    pub max_step: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { budget: 200, armijo: 1e-4, projection_tol: 1e-12, stop_below: None, metric_floor: 1e-3, max_step: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowStop {
    Budget,
    TargetReached,
    Stationary,
}

#[derive(Clone, Debug)]
pub struct FlowTrace {
    /// Energy before the first step and after each accepted step, accumulated
    /// from the cell-wise changes so the sequence is exactly monotone.
    pub energies: Vec<f64>,
    /// Energy of the final angles evaluated directly.
    pub final_direct: f64,
    pub constraint_residuals: Vec<f64>,
    pub step_sizes: Vec<f64>,
    pub theta: Vec<f64>,
    pub curve: PlanarCurve,
    pub stop: FlowStop,
}

impl FlowTrace {
    pub fn initial_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn final_energy(&self) -> f64 {
        *self.energies.last().expect("trace holds the initial energy")
    }

    /// Largest increase between consecutive energies.
    pub fn max_increase(&self) -> f64 {
        self.energies.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

/// Descent from `theta0` in the angle model.
pub fn gradient_flow_angles(model: &AngleModel, theta0: &[f64], opts: &FlowOptions) -> Result<FlowTrace> {
    let metric = Metric::at(model, theta0, opts.metric_floor);
    let mut theta = project_onto_constraint(model, &metric, theta0, opts.projection_tol)?;
    let mut e = model.energy(&theta);
    let mut energies = vec![e];
    let mut residuals = vec![model.constraint_residual(&theta)];
    let mut steps = Vec::new();
    let mut alpha: f64 = 1.0;
    let mut stop = FlowStop::Budget;
    for _ in 0..opts.budget {
        if opts.stop_below.is_some_and(|t| e < t) {
            stop = FlowStop::TargetReached;
            break;
        }
        let metric = Metric::at(model, &theta, opts.metric_floor);
        let g = model.energy_gradient(&theta);
        let mg = metric.solve(&g);
        let d: Vec<f64> = project_direction(model, &metric, &theta, &mg)?.iter().map(|v| -v).collect();
        let slope = dot(&g, &d);
        if !(slope < -1e-15 * e.abs().max(f64::MIN_POSITIVE)) {
            stop = FlowStop::Stationary;
            break;
        }
        let mut accepted = None;
        let mut a = (2.0 * alpha).min(opts.max_step);
        while a > 1e-14 {
            let trial: Vec<f64> = theta.iter().zip(&d).map(|(t, v)| t + a * v).collect();
            if let Ok(t) = project_onto_constraint(model, &metric, &trial, opts.projection_tol) {
                let change = model.energy_change(&theta, &t);
                if change <= opts.armijo * a * slope {
                    accepted = Some((t, change));
                    break;
                }
            }
            a *= 0.5;
        }
        let Some((t, change)) = accepted else {
            stop = FlowStop::Stationary;
            break;
        };
        alpha = a;
        theta = t;
        e += change;
        energies.push(e);
        residuals.push(model.constraint_residual(&theta));
        steps.push(a);
    }
    let curve = model.curve_of_theta(&theta)?;
    let final_direct = model.energy(&theta);
    Ok(FlowTrace { final_direct, energies, constraint_residuals: residuals, step_sizes: steps, theta, curve, stop })
}

/// Descent from the curve `start` under boundary data `bc`; joint turns of
/// `start` are not represented in the angle model and are dropped.
pub fn gradient_flow(start: &PlanarCurve, bc: &BoundaryCondition, p: f64, opts: &FlowOptions) -> Result<FlowTrace> {
    if (start.length() - bc.length).abs() > 1e-12 * bc.length {
        return Err(Error::GridMismatch(format!("curve length {} differs from {}", start.length(), bc.length)));
    }
    let theta0 = AngleModel::theta_of_curve(start);
    let model = AngleModel::new(p, bc, start.n(), &theta0)?;
    gradient_flow_angles(&model, &theta0, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{make_pinned_mode, PinnedKind, SolverOptions};

    #[test]
    fn critical_point_does_not_move() {
        let cp = make_pinned_mode(2.0, 0.6, 1, PinnedKind::Arc, 1.0, &SolverOptions::with_n(401)).unwrap();
        let trace = gradient_flow_angles(&cp.model(), &cp.theta, &FlowOptions { budget: 20, ..Default::default() }).unwrap();
        assert!((trace.final_energy() - cp.energy).abs() <= 1e-10 * cp.energy);
        assert!(trace.max_increase() <= 0.0);
    }

    #[test]
    fn perturbed_arc_descends_back() {
        let cp = make_pinned_mode(2.0, 0.6, 1, PinnedKind::Arc, 1.0, &SolverOptions::with_n(401)).unwrap();
        let model = cp.model();
        let theta: Vec<f64> = cp.theta.iter().enumerate().map(|(i, t)| t + 0.05 * (i as f64 * 0.05).sin()).collect();
        let trace = gradient_flow_angles(&model, &theta, &FlowOptions { budget: 100, ..Default::default() }).unwrap();
        assert!(trace.initial_energy() > cp.energy);
        assert!((trace.final_energy() - cp.energy).abs() <= 1e-8 * cp.energy, "{} vs {}", trace.final_energy(), cp.energy);
        assert!(trace.max_increase() <= 0.0);
        assert!(trace.constraint_residuals.iter().all(|&r| r <= 1e-6));
    }

    #[test]
    fn projection_reaches_roundoff() {
        let cp = make_pinned_mode(2.0, 0.3, 2, PinnedKind::Arc, 1.0, &SolverOptions::with_n(401)).unwrap();
        let model = cp.model();
        let theta: Vec<f64> = cp.theta.iter().enumerate().map(|(i, t)| t + 0.02 * (i as f64 * 0.1).cos()).collect();
        assert!(model.end_residual(&theta).norm() > 1e-4);
        let metric = Metric::at(&model, &theta, FlowOptions::default().metric_floor);
        let back = project_onto_constraint(&model, &metric, &theta, 1e-6).unwrap();
        // iterates past the requested tolerance
        assert!(model.end_residual(&back).norm() <= 1e-13, "{}", model.end_residual(&back).norm());
    }

    #[test]
    fn projected_direction_is_tangent() {
        let cp = make_pinned_mode(2.0, 0.6, 1, PinnedKind::Arc, 1.0, &SolverOptions::with_n(201)).unwrap();
        let model = cp.model();
        let metric = Metric::at(&model, &cp.theta, 1e-3);
        let v: Vec<f64> = (0..cp.theta.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let d = project_direction(&model, &metric, &cp.theta, &v).unwrap();
        let a = constraint_rows(&model, &cp.theta);
        assert!(dot(&a[0], &d).abs() <= 1e-10 && dot(&a[1], &d).abs() <= 1e-10);
    }
}
