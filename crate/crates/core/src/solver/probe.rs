//! Second-order check of a discrete critical point.
//!
//! The Hessian of the Lagrangian is taken by central differences of its
//! gradient along a smooth basis of the constraint tangent space, and the
//! Rayleigh-Ritz eigenvalues are reported in the `L²` metric on angle
//! perturbations. Random admissible perturbations give an independent check.

use nalgebra::{DMatrix, SymmetricEigen, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

use super::flow::{project_onto_constraint, FlowOptions, Metric};
use super::model::{normal, AngleModel};
use super::modes::{CriticalPoint, ModeTag};
use super::newton::fit_force;
use crate::energy::{profile_distance, BcKind};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct ProbeOptions {
    /// Size of the trial basis.
    pub modes: usize,
    /// Eigenvalues above `-tol * F/L` count as non-negative.
    pub tol: f64,
    /// Relative step of the finite differences.
    pub fd_step: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self { modes: 40, tol: 1e-6, fd_step: 1e-5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Unstable,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub min_eigenvalue: f64,
    /// `F/L`, the unit in which the tolerance band is measured.
    pub scale: f64,
    pub tol: f64,
    pub verdict: Verdict,
    /// `max |R - Rᵀ| / max |R|` of the reduced Hessian before symmetrisation.
    pub symmetry_defect: f64,
    pub eigenvalues: Vec<f64>,
    /// Angle perturbation of the lowest eigenvalue, unit `L²` norm.
    #[serde(skip)]
    pub lowest_direction: Vec<f64>,
}

/// Smooth tangent directions, orthonormal in `h Σ v_i²`.
pub struct TangentBasis {
    pub vectors: Vec<Vec<f64>>,
}

fn constraint_rows(model: &AngleModel, theta: &[f64]) -> [Vec<f64>; 2] {
    let mut a = [vec![0.0; theta.len()], vec![0.0; theta.len()]];
    for (i, c) in model.end_jacobian(theta).iter().enumerate() {
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

impl TangentBasis {
    pub fn new(cp: &CriticalPoint, model: &AngleModel, count: usize) -> Result<Self> {
        let n = cp.theta.len();
        let h = model.h();
        let l = model.grid.length();
        let fixed_ends = !model.is_free(0);
        let raw: Vec<Vec<f64>> = (0..count)
            .map(|j| {
                (0..n)
                    .map(|i| {
                        let s = model.grid.s(i);
                        if fixed_ends {
                            ((j + 1) as f64 * PI * s / l).sin()
                        } else {
                            (j as f64 * PI * s / l).cos()
                        }
                    })
                    .collect()
            })
            .collect();
        let a = constraint_rows(model, &cp.theta);
        let gram = nalgebra::Matrix2::new(dot(&a[0], &a[0]), dot(&a[0], &a[1]), dot(&a[1], &a[0]), dot(&a[1], &a[1]));
        let inv = gram.try_inverse().ok_or_else(|| Error::IllConditioned("degenerate end constraint".into()))?;
        let tangent = |v: &[f64]| -> Vec<f64> {
            let mut v = v.to_vec();
            for i in 0..n {
                if !model.is_free(i) {
                    v[i] = 0.0;
                }
            }
            let lam = inv * Vector2::new(dot(&a[0], &v), dot(&a[1], &v));
            for i in 0..n {
                v[i] -= a[0][i] * lam.x + a[1][i] * lam.y;
            }
            v
        };
        let norm = |v: &[f64]| (h * dot(v, v)).sqrt();
        let mut vectors: Vec<Vec<f64>> = Vec::new();
        // a closed non-circular curve can slide along itself; that direction is neutral
        let mut neutral: Vec<Vec<f64>> = Vec::new();
        if model.kind == BcKind::Closed && !matches!(cp.mode, ModeTag::Circle { .. }) {
            let k0 = cp.curve.k[0];
            let shift = tangent(&cp.curve.k.iter().map(|k| k - k0).collect::<Vec<_>>());
            let nv = norm(&shift);
            if nv > 0.0 {
                neutral.push(shift.iter().map(|v| v / nv).collect());
            }
        }
        for r in &raw {
            let mut v = tangent(r);
            let before = norm(&v);
            if before == 0.0 {
                continue;
            }
            for _ in 0..2 {
                for u in neutral.iter().chain(vectors.iter()) {
                    let c = h * dot(&v, u);
                    for i in 0..n {
                        v[i] -= c * u[i];
                    }
                }
            }
            let after = norm(&v);
            if after > 1e-8 * before {
                vectors.push(v.iter().map(|x| x / after).collect());
            }
        }
        Ok(Self { vectors })
    }
}

/// Gradient of `E + μ·(X_N - end)` with fixed angles masked out.
fn lagrangian_gradient(model: &AngleModel, theta: &[f64], mu: Vector2<f64>) -> Vec<f64> {
    let h = model.h();
    let mut g = model.energy_gradient(theta);
    for i in 0..theta.len() {
        if model.is_free(i) {
            g[i] += h * model.weight(i) * mu.dot(&normal(theta[i]));
        } else {
            g[i] = 0.0;
        }
    }
    g
}

/// Smallest eigenvalue of the constrained Hessian and the resulting verdict.
pub fn stability_probe(cp: &CriticalPoint, opts: &ProbeOptions) -> Result<ProbeReport> {
    let model = cp.model();
    let basis = TangentBasis::new(cp, &model, opts.modes)?;
    let m = basis.vectors.len();
    if m == 0 {
        return Err(Error::IllConditioned("empty tangent basis".into()));
    }
    let mu = fit_force(&model, &cp.theta);
    let tmax = cp.theta.iter().fold(1.0f64, |a, t| a.max(t.abs()));
    let hv: Vec<Vec<f64>> = basis
        .vectors
        .iter()
        .map(|v| {
            let vmax = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let eps = opts.fd_step * tmax / vmax;
            let plus: Vec<f64> = cp.theta.iter().zip(v).map(|(t, d)| t + eps * d).collect();
            let minus: Vec<f64> = cp.theta.iter().zip(v).map(|(t, d)| t - eps * d).collect();
            let gp = lagrangian_gradient(&model, &plus, mu);
            let gm = lagrangian_gradient(&model, &minus, mu);
            gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * eps)).collect()
        })
        .collect();
    let reduced = DMatrix::from_fn(m, m, |a, b| dot(&basis.vectors[a], &hv[b]));
    let big = reduced.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE);
    let symmetry_defect = (&reduced - reduced.transpose()).iter().fold(0.0f64, |a, x| a.max(x.abs())) / big;
    let sym = 0.5 * (&reduced + reduced.transpose());
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let low = order[0];
    let n = cp.theta.len();
    let mut lowest_direction = vec![0.0; n];
    for (a, v) in basis.vectors.iter().enumerate() {
        let c = eig.eigenvectors[(a, low)];
        for i in 0..n {
            lowest_direction[i] += c * v[i];
        }
    }
    let scale = cp.energy / cp.length();
    let min_eigenvalue = eigenvalues[0];
    let verdict = if min_eigenvalue >= -opts.tol * scale { Verdict::Stable } else { Verdict::Unstable };
    Ok(ProbeReport { min_eigenvalue, scale, tol: opts.tol, verdict, symmetry_defect, eigenvalues, lowest_direction })
}

#[derive(Clone, Debug, Serialize)]
pub struct RandomCheck {
    pub trials: usize,
    pub max_distance: f64,
    /// Largest distance actually used.
    pub largest_distance: f64,
    /// `min (E(perturbed) - E) / E` over the trials.
    pub worst_relative_change: f64,
    pub passed: bool,
}

/// Energy of `trials` random admissible perturbations within `max_distance`
/// of `cp` (profile distance); passes when none lowers the energy by more than `drop_tol * E`.
pub fn random_perturbations(cp: &CriticalPoint, trials: usize, max_distance: f64, drop_tol: f64, seed: u64) -> Result<RandomCheck> {
    let model = cp.model();
    let basis = TangentBasis::new(cp, &model, 24)?;
    let metric = Metric::at(&model, &cp.theta, FlowOptions::default().metric_floor);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let mut largest: f64 = 0.0;
    let e0 = cp.energy;
    for _ in 0..trials {
        let n = cp.theta.len();
        let mut v = vec![0.0; n];
        for (j, b) in basis.vectors.iter().enumerate() {
            let c: f64 = rng.gen_range(-1.0..1.0) / (1.0 + j as f64);
            for i in 0..n {
                v[i] += c * b[i];
            }
        }
        let target = max_distance * rng.gen_range(0.05..1.0);
        let perturbed = |t: f64| -> Result<(Vec<f64>, f64)> {
            let trial: Vec<f64> = cp.theta.iter().zip(&v).map(|(a, b)| a + t * b).collect();
            let th = project_onto_constraint(&model, &metric, &trial, 1e-13)?;
            let curve = model.curve_of_theta(&th)?;
            Ok((th, profile_distance(&curve, &cp.curve, model.p)?))
        };
        let vmax = v.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE);
        let mut t = 1e-3 / vmax;
        let (mut th, mut dist) = perturbed(t)?;
        // The distance is only roughly linear in `t`, so overshoots are pulled
        // back with a margin.
        for _ in 0..20 {
            if dist > max_distance {
                t *= 0.9 * max_distance / dist;
            } else if dist > 0.0 && dist < 0.5 * target {
                t *= target / dist;
            } else {
                break;
            }
            (th, dist) = perturbed(t)?;
        }
        if dist > max_distance {
            return Err(Error::ProjectionFailed(format!("perturbation distance {dist:.3e} exceeds {max_distance:.3e}")));
        }
        largest = largest.max(dist);
        worst = worst.min((model.energy(&th) - e0) / e0);
    }
    Ok(RandomCheck { trials, max_distance, largest_distance: largest, worst_relative_change: worst, passed: worst >= -drop_tol })
}
