//! Newton iteration on the KKT system of the angle model.
//!
//! Interior positions `X_i` and one force multiplier per cell are carried as
//! unknowns so that every equation couples neighbouring nodes only and the
//! Jacobian is banded.

use nalgebra::Vector2;

use super::banded::BandMatrix;
use super::model::{normal, tangent, AngleModel};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 200 }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub theta: Vec<f64>,
    /// Mean of the per-cell force multipliers.
    pub force: Vector2<f64>,
    /// Scaled stationarity residual.
    pub residual: f64,
    pub constraint_residual: f64,
    pub iterations: usize,
}

struct Layout {
    theta: Vec<Option<usize>>,
    pos: Vec<Option<usize>>,
    mu: Vec<usize>,
    size: usize,
}

fn layout(model: &AngleModel) -> Layout {
    let n = model.n();
    let mut theta = vec![None; n];
    let mut pos = vec![None; n];
    let mut mu = vec![0; n - 1];
    let mut next = 0;
    for i in 0..n {
        if i > 0 && i + 1 < n {
            pos[i] = Some(next);
            next += 2;
        }
        if model.is_free(i) {
            theta[i] = Some(next);
            next += 1;
        }
        if i + 1 < n {
            mu[i] = next;
            next += 2;
        }
    }
    Layout { theta, pos, mu, size: next }
}

struct State {
    theta: Vec<f64>,
    x: Vec<Vector2<f64>>,
    mu: Vec<Vector2<f64>>,
}

impl State {
    fn unpack(&mut self, lay: &Layout, z: &[f64]) {
        for (i, ix) in lay.theta.iter().enumerate() {
            if let Some(ix) = ix {
                self.theta[i] = z[*ix];
            }
        }
        for (i, ix) in lay.pos.iter().enumerate() {
            if let Some(ix) = ix {
                self.x[i] = Vector2::new(z[*ix], z[*ix + 1]);
            }
        }
        for (c, &ix) in lay.mu.iter().enumerate() {
            self.mu[c] = Vector2::new(z[ix], z[ix + 1]);
        }
    }

    fn pack(&self, lay: &Layout) -> Vec<f64> {
        let mut z = vec![0.0; lay.size];
        for (i, ix) in lay.theta.iter().enumerate() {
            if let Some(ix) = ix {
                z[*ix] = self.theta[i];
            }
        }
        for (i, ix) in lay.pos.iter().enumerate() {
            if let Some(ix) = ix {
                z[*ix] = self.x[i].x;
                z[*ix + 1] = self.x[i].y;
            }
        }
        for (c, &ix) in lay.mu.iter().enumerate() {
            z[ix] = self.mu[c].x;
            z[ix + 1] = self.mu[c].y;
        }
        z
    }
}

fn mu_at(mu: &[Vector2<f64>], c: isize) -> Vector2<f64> {
    if c < 0 || c as usize >= mu.len() {
        Vector2::zeros()
    } else {
        mu[c as usize]
    }
}

/// KKT residual and its row scaling (stationarity rows divided by `h*energy scale`, link rows by `h`).
fn residual(model: &AngleModel, lay: &Layout, st: &State, escale: f64) -> (Vec<f64>, Vec<f64>) {
    let n = model.n();
    let h = model.h();
    let g = model.energy_gradient(&st.theta);
    let mut f = vec![0.0; lay.size];
    let mut w = vec![0.0; lay.size];
    for i in 0..n {
        if let Some(ix) = lay.theta[i] {
            let m = mu_at(&st.mu, i as isize - 1) + mu_at(&st.mu, i as isize);
            f[ix] = g[i] + 0.5 * h * m.dot(&normal(st.theta[i]));
            w[ix] = 1.0 / (h * escale);
        }
        if let Some(ix) = lay.pos[i] {
            let r = st.mu[i] - st.mu[i - 1];
            f[ix] = r.x;
            f[ix + 1] = r.y;
            w[ix] = 1.0 / (h * escale);
            w[ix + 1] = w[ix];
        }
    }
    for c in 0..n - 1 {
        let gc = st.x[c + 1] - st.x[c] - 0.5 * h * (tangent(st.theta[c]) + tangent(st.theta[c + 1]));
        let ix = lay.mu[c];
        f[ix] = -gc.x;
        f[ix + 1] = -gc.y;
        w[ix] = 1.0 / h;
        w[ix + 1] = 1.0 / h;
    }
    (f, w)
}

fn jacobian(model: &AngleModel, lay: &Layout, st: &State) -> BandMatrix {
    let n = model.n();
    let h = model.h();
    let (hd, ho) = model.energy_hessian(&st.theta);
    let band = 8;
    let mut j = BandMatrix::zeros(lay.size, band, band);
    let sym = |j: &mut BandMatrix, a: usize, b: usize, v: f64| {
        j.add(a, b, v);
        if a != b {
            j.add(b, a, v);
        }
    };
    for i in 0..n {
        if let Some(ti) = lay.theta[i] {
            let m = mu_at(&st.mu, i as isize - 1) + mu_at(&st.mu, i as isize);
            sym(&mut j, ti, ti, hd[i] - 0.5 * h * m.dot(&tangent(st.theta[i])));
            if i + 1 < n {
                if let Some(tn) = lay.theta[i + 1] {
                    sym(&mut j, ti, tn, ho[i]);
                }
            }
            let nv = 0.5 * h * normal(st.theta[i]);
            for c in [i as isize - 1, i as isize] {
                if c >= 0 && (c as usize) < n - 1 {
                    let mc = lay.mu[c as usize];
                    sym(&mut j, ti, mc, nv.x);
                    sym(&mut j, ti, mc + 1, nv.y);
                }
            }
        }
        if let Some(xi) = lay.pos[i] {
            let before = lay.mu[i - 1];
            let after = lay.mu[i];
            for d in 0..2 {
                sym(&mut j, xi + d, before + d, -1.0);
                sym(&mut j, xi + d, after + d, 1.0);
            }
        }
    }
    j
}

/// Scaled residual attainable in double precision: the cell curvatures carry
/// an absolute error of order `ε|θ|/h`, which `f'` propagates into the gradient.
fn roundoff_floor(model: &AngleModel, theta: &[f64], escale: f64) -> f64 {
    let h = model.h();
    let tmax = theta.iter().fold(1.0f64, |m, t| m.max(t.abs()));
    let dk = 4.0 * f64::EPSILON * tmax / h;
    let spread = model
        .cell_curvatures(theta)
        .iter()
        .map(|&k| (model.density_d1(k + dk) - model.density_d1(k - dk)).abs())
        .fold(0.0f64, f64::max);
    spread / (h * escale)
}

fn merit(f: &[f64], w: &[f64]) -> f64 {
    f.iter().zip(w).map(|(a, b)| (a * b) * (a * b)).sum::<f64>()
}

fn max_scaled(f: &[f64], w: &[f64]) -> f64 {
    f.iter().zip(w).map(|(a, b)| (a * b).abs()).fold(0.0, f64::max)
}

/// Damped Newton from `theta0`; positions start from the trapezoid sums and
/// the force from a least-squares fit of the stationarity equations.
pub fn newton_kkt(model: &AngleModel, theta0: &[f64], opts: &NewtonOptions) -> Result<NewtonOutcome> {
    let n = model.n();
    let lay = layout(model);
    let mut theta = theta0.to_vec();
    model.impose_fixed(&mut theta);
    let x = model.positions(&theta);
    let force = fit_force(model, &theta);
    let mut st = State { theta, x, mu: vec![force; n - 1] };
    st.x[n - 1] = model.end;
    let escale = |st: &State| (model.energy(&st.theta) / model.grid.length()).max(1e-12) + st.mu[0].norm();
    let mut sc = escale(&st);
    let (mut f, mut w) = residual(model, &lay, &st, sc);
    let mut phi = merit(&f, &w);
    let mut iterations = 0;
    let mut stalled = 0;
    while iterations < opts.max_iter {
        if max_scaled(&f, &w) <= opts.tol.max(roundoff_floor(model, &st.theta, sc)) {
            break;
        }
        iterations += 1;
        let jac = jacobian(model, &lay, &st);
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let dz = jac.factor()?.solve(&rhs);
        let z0 = st.pack(&lay);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let z: Vec<f64> = z0.iter().zip(&dz).map(|(a, b)| a + alpha * b).collect();
            let mut trial = State { theta: st.theta.clone(), x: st.x.clone(), mu: st.mu.clone() };
            trial.unpack(&lay, &z);
            let (ft, _) = residual(model, &lay, &trial, sc);
            let pt = merit(&ft, &w);
            if pt.is_finite() && pt <= (1.0 - 1e-4 * alpha) * phi {
                st = trial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            stalled += 1;
            if stalled > 2 {
                break;
            }
            continue;
        }
        sc = escale(&st);
        let r = residual(model, &lay, &st, sc);
        f = r.0;
        w = r.1;
        phi = merit(&f, &w);
    }
    let res = max_scaled(&f, &w);
    let constraint_residual = model.constraint_residual(&st.theta);
    if !(res <= opts.tol.max(roundoff_floor(model, &st.theta, sc))) || !(constraint_residual <= 1e-9 * model.grid.length()) {
        return Err(Error::NoConvergence { iterations, residual: res });
    }
    let force = st.mu.iter().sum::<Vector2<f64>>() / (n - 1) as f64;
    Ok(NewtonOutcome { theta: st.theta, force, residual: res, constraint_residual, iterations })
}

/// Least-squares force `μ` in `∂E/∂θ_i + h w_i μ·n(θ_i) = 0` over the free nodes.
pub fn fit_force(model: &AngleModel, theta: &[f64]) -> Vector2<f64> {
    let g = model.energy_gradient(theta);
    let cols = model.end_jacobian(theta);
    let mut a = nalgebra::Matrix2::zeros();
    let mut b = Vector2::zeros();
    for i in 0..theta.len() {
        if !model.is_free(i) {
            continue;
        }
        a += cols[i] * cols[i].transpose();
        b -= cols[i] * g[i];
    }
    a.try_inverse().map(|inv| inv * b).unwrap_or_else(Vector2::zeros)
}

/// Scaled stationarity residual of `theta` with the least-squares force.
pub fn stationarity_residual(model: &AngleModel, theta: &[f64]) -> f64 {
    let g = model.energy_gradient(theta);
    let cols = model.end_jacobian(theta);
    let mu = fit_force(model, theta);
    let h = model.h();
    let sc = (model.energy(theta) / model.grid.length()).max(1e-12) + mu.norm();
    (0..theta.len())
        .filter(|&i| model.is_free(i))
        .map(|i| ((g[i] + mu.dot(&cols[i])) / (h * sc)).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::BoundaryCondition;
    use std::f64::consts::PI;

    #[test]
    fn circle_is_a_fixed_point() {
        let n = 201;
        let theta: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / (n - 1) as f64).collect();
        let bc = BoundaryCondition::closed(1.0, Some(1)).unwrap();
        let m = AngleModel::new(2.0, &bc, n, &theta).unwrap();
        let out = newton_kkt(&m, &theta, &NewtonOptions::default()).unwrap();
        assert!(out.iterations <= 1);
        assert!(out.force.norm() < 1e-10);
    }

    #[test]
    fn pinned_arc_converges_to_natural_bc() {
        let n = 401;
        let l = 1.0;
        let bc = BoundaryCondition::pinned_ratio(0.8, l).unwrap();
        // a sine guess which is close but not admissible
        let theta: Vec<f64> = (0..n)
            .map(|i| {
                let s = i as f64 / (n - 1) as f64;
                0.7 * (PI * s).cos()
            })
            .collect();
        let m = AngleModel::new(2.0, &bc, n, &theta).unwrap();
        let out = newton_kkt(&m, &theta, &NewtonOptions::default()).unwrap();
        assert!(out.residual < 1e-9);
        assert!(m.end_residual(&out.theta).norm() < 1e-10);
        let c = m.curve_of_theta(&out.theta).unwrap();
        let h = m.h();
        let kmax = c.k.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        assert!(c.k[0].abs() < 10.0 * kmax * h * h * 10.0, "k0 = {}", c.k[0]);
        assert!(c.k[n - 1].abs() < 10.0 * kmax * h * h * 10.0);
    }
}
