//! Named families of critical points: pinned arcs and loops, circles,
//! figure-eights, flat-core loops and their assemblies, helices.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::model::{curve_from_angles_p, AngleModel};
use super::newton::{fit_force, newton_kkt, stationarity_residual, NewtonOptions, NewtonOutcome};
use crate::curve::{Grid, PlanarCurve, SpaceCurve};
use crate::energy::{BcKind, BoundaryCondition};
use crate::error::{Error, Result};
use crate::profiles::{detect_well_periodic, fold_index, inflections};

pub const P_MIN: f64 = 1.05;
pub const P_MAX: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PinnedKind {
    Arc,
    Loop,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ModeTag {
    Circle { m: u32 },
    FigureEight { n: u32 },
    Pinned { kind: PinnedKind, n: u32, r: f64 },
    FlatCoreLoop,
    FlatCore,
    Unspecified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosedKind {
    Circle,
    FigureEight,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Grid nodes.
    pub n: usize,
    pub newton: NewtonOptions,
    /// Accept exponents outside `[P_MIN, P_MAX]`.
    pub force_p: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { n: crate::curve::DEFAULT_SAMPLES, newton: NewtonOptions::default(), force_p: false }
    }
}

impl SolverOptions {
    pub fn with_n(n: usize) -> Self {
        Self { n, ..Self::default() }
    }
}

/// A discrete critical point together with its angle representation.
#[derive(Clone, Debug)]
pub struct CriticalPoint {
    pub curve: PlanarCurve,
    pub theta: Vec<f64>,
    pub p: f64,
    pub bc: BoundaryCondition,
    /// Force multiplier of the endpoint or closure constraint.
    pub multipliers: Vector2<f64>,
    pub residual: f64,
    /// Discrete energy in the angle model.
    pub energy: f64,
    pub mode: ModeTag,
}

impl CriticalPoint {
    pub fn model(&self) -> AngleModel {
        AngleModel::new(self.p, &self.bc, self.theta.len(), &self.theta).expect("critical point has a valid grid")
    }

    pub fn length(&self) -> f64 {
        self.bc.length
    }

    fn build(model: &AngleModel, theta: Vec<f64>, bc: BoundaryCondition, multipliers: Vector2<f64>, residual: f64, mode: ModeTag) -> Result<Self> {
        let curve = model.curve_of_theta(&theta)?;
        let energy = model.energy(&theta);
        Ok(Self { curve, theta, p: model.p, bc, multipliers, residual, energy, mode })
    }
}

pub fn check_exponent(p: f64, force: bool) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() || (!force && !(P_MIN..=P_MAX).contains(&p)) {
        return Err(Error::UnsupportedExponent(p));
    }
    Ok(())
}

/// Number of zeros of `k` away from the ends.
pub fn interior_inflections(curve: &PlanarCurve) -> usize {
    let eps = inflection_eps(curve);
    let h = curve.h();
    let l = curve.length();
    inflections(curve, eps).into_iter().filter(|&z| z > 3.0 * h && z < l - 3.0 * h).count()
}

fn inflection_eps(curve: &PlanarCurve) -> f64 {
    let kmax = curve.k.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    1e-6 * kmax.max(1e-300)
}

/// Critical point near `init` for boundary data `bc`.
pub fn solve_critical(bc: &BoundaryCondition, p: f64, init: &PlanarCurve, opts: &SolverOptions) -> Result<CriticalPoint> {
    check_exponent(p, opts.force_p)?;
    if (init.length() - bc.length).abs() > 1e-12 * bc.length {
        return Err(Error::GridMismatch(format!("initial curve length {} differs from {}", init.length(), bc.length)));
    }
    let theta0 = AngleModel::theta_of_curve(init);
    let model = AngleModel::new(p, bc, init.n(), &theta0)?;
    let out = newton_kkt(&model, &theta0, &opts.newton)?;
    let cp = CriticalPoint::build(&model, out.theta, bc.clone(), out.force, out.residual, ModeTag::Unspecified)?;
    let expected = interior_inflections(init);
    let found = interior_inflections(&cp.curve);
    if expected != found {
        return Err(Error::LeftBasin { expected, found });
    }
    Ok(cp)
}

/// Normalized angle profile of `half_waves` p-sine half waves over the grid, in `[-1, 1]`.
fn shape_angles(p: f64, half_waves: f64, grid: &Grid) -> Vec<f64> {
    let e = 1.0 / (p - 1.0);
    let l = grid.length();
    let n = grid.n();
    let phi = |s: f64| {
        let v = (half_waves * PI * s / l).sin();
        v.signum() * v.abs().powf(e)
    };
    // fine quadrature keeps the profile accurate where the p-sine has infinite slope
    let sub = 8;
    let mut acc = vec![0.0; n];
    for i in 1..n {
        let a = grid.s(i - 1);
        let b = grid.s(i);
        let d = (b - a) / sub as f64;
        let mut seg = 0.0;
        for j in 0..sub {
            seg += 0.5 * d * (phi(a + j as f64 * d) + phi(a + (j + 1) as f64 * d));
        }
        acc[i] = acc[i - 1] + seg;
    }
    let half = l / half_waves;
    // integral over one half wave, by the same rule
    let m = {
        let steps = 8 * 4096;
        let d = half / steps as f64;
        (0..steps).map(|j| 0.5 * d * (phi(j as f64 * d) + phi((j + 1) as f64 * d))).sum::<f64>()
    };
    acc.iter().map(|v| 2.0 * v / m - 1.0).collect()
}

fn signed_chord(psi: &[f64], alpha: f64, h: f64) -> f64 {
    let n = psi.len();
    psi.iter()
        .enumerate()
        .map(|(i, v)| {
            let w = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
            w * h * (alpha * v).cos()
        })
        .sum()
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol {
            return mid;
        }
        let fm = f(mid);
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Amplitude scan of the p-sine guess: returns `(alpha, reachable r)` for the requested branch.
fn shoot_amplitude(psi: &[f64], h: f64, l: f64, r: f64, kind: PinnedKind) -> Result<(f64, f64)> {
    let step = 0.005;
    let c = |a: f64| signed_chord(psi, a, h) / l;
    let mut a = 0.0;
    let mut prev = c(0.0);
    match kind {
        PinnedKind::Arc => {
            while a < 20.0 {
                let next = c(a + step);
                if next <= r {
                    return Ok((bisect(a, a + step, |x| c(x) - r, 1e-14), r));
                }
                a += step;
            }
            Err(Error::ModeNotFound(format!("no arc amplitude reaches r = {r}")))
        }
        PinnedKind::Loop => {
            // past the first zero of the chord, descend until -r or the first minimum
            while a < 20.0 && prev > 0.0 {
                a += step;
                prev = c(a);
            }
            loop {
                if a > 20.0 {
                    return Err(Error::ModeNotFound(format!("no loop amplitude for r = {r}")));
                }
                let next = c(a + step);
                if next <= -r {
                    return Ok((bisect(a, a + step, |x| c(x) + r, 1e-14), r));
                }
                if next > prev {
                    return Ok((a, -prev));
                }
                a += step;
                prev = next;
            }
        }
    }
}

fn pinned_model(p: f64, r: f64, l: f64, theta: &[f64]) -> Result<(AngleModel, BoundaryCondition)> {
    let bc = BoundaryCondition::pinned_ratio(r, l)?;
    let model = AngleModel::new(p, &bc, theta.len(), theta)?;
    Ok((model, bc))
}

/// Newton continuation in the chord ratio from a solution at `r_from`.
fn continue_pinned(p: f64, l: f64, theta: Vec<f64>, r_from: f64, r_to: f64, newton: &NewtonOptions) -> Result<(Vec<f64>, Vector2<f64>, f64)> {
    let mut theta = theta;
    let mut r = r_from;
    let mut step = (r_to - r_from) / 8.0;
    let mut last = (Vector2::zeros(), f64::INFINITY);
    let (model, _) = pinned_model(p, r, l, &theta)?;
    if let Ok(out) = newton_kkt(&model, &theta, newton) {
        theta = out.theta;
        last = (out.force, out.residual);
    } else if r_from == r_to {
        return Err(Error::ModeNotFound(format!("Newton failed at r = {r_to}")));
    }
    let mut guard = 0;
    while (r - r_to).abs() > 0.0 {
        guard += 1;
        if guard > 400 || step.abs() < 1e-6 {
            return Err(Error::ModeNotFound(format!("continuation stalled at r = {r}")));
        }
        let target = if (r_to - r).abs() <= step.abs() { r_to } else { r + step };
        let (model, _) = pinned_model(p, target, l, &theta)?;
        match newton_kkt(&model, &theta, newton) {
            Ok(out) => {
                theta = out.theta;
                last = (out.force, out.residual);
                r = target;
                step *= 1.5;
            }
            Err(_) => step *= 0.5,
        }
    }
    Ok((theta, last.0, last.1))
}

/// The `(p, r, n)`-arc or loop of length `l`: `n` half waves, `P0 = (0,0)`, `P1 = (rl, 0)`.
pub fn make_pinned_mode(p: f64, r: f64, n: u32, kind: PinnedKind, l: f64, opts: &SolverOptions) -> Result<CriticalPoint> {
    check_exponent(p, opts.force_p)?;
    if !(0.0..1.0).contains(&r) || n == 0 {
        return Err(Error::HypothesisViolated(format!("need r in [0,1) and n >= 1, got r = {r}, n = {n}")));
    }
    let grid = Grid::new(l, opts.n)?;
    let psi = shape_angles(p, n as f64, &grid);
    let (alpha, r_reach) = shoot_amplitude(&psi, grid.h(), l, r, kind)?;
    let shift = if kind == PinnedKind::Loop { PI } else { 0.0 };
    let theta0: Vec<f64> = psi.iter().map(|v| alpha * v + shift).collect();
    let (theta, force, residual) = match continue_pinned(p, l, theta0.clone(), r_reach, r, &opts.newton) {
        Ok(v) => v,
        Err(e) => {
            // restart from a nearly straight arc and continue along the branch
            if kind == PinnedKind::Arc && r < 0.95 {
                let (a1, _) = shoot_amplitude(&psi, grid.h(), l, 0.95, kind)?;
                let t1: Vec<f64> = psi.iter().map(|v| a1 * v).collect();
                continue_pinned(p, l, t1, 0.95, r, &opts.newton)?
            } else {
                return Err(e);
            }
        }
    };
    let (model, bc) = pinned_model(p, r, l, &theta)?;
    let cp = CriticalPoint::build(&model, theta, bc, force, residual, ModeTag::Pinned { kind, n, r })?;
    let found = interior_inflections(&cp.curve);
    if found != n as usize - 1 {
        return Err(Error::LeftBasin { expected: n as usize - 1, found });
    }
    match fold_index(&cp.curve, None) {
        Ok(f) if f.m == n as usize => Ok(cp),
        Ok(f) => Err(Error::ModeNotFound(format!("solution is {}/2-fold, wanted {n}/2", f.m))),
        Err(e) => Err(Error::ModeNotFound(format!("solution is not an m/2-fold profile: {e}"))),
    }
}

/// Closed critical points: the exact `m`-fold circle, or the `n`-times covered figure-eight.
pub fn make_closed(p: f64, kind: ClosedKind, count: u32, l: f64, opts: &SolverOptions) -> Result<CriticalPoint> {
    check_exponent(p, opts.force_p)?;
    if count == 0 {
        return Err(Error::HypothesisViolated("cover count must be at least 1".into()));
    }
    let grid = Grid::new(l, opts.n)?;
    match kind {
        ClosedKind::Circle => {
            let theta: Vec<f64> = (0..grid.n()).map(|i| 2.0 * PI * count as f64 * grid.s(i) / l).collect();
            let bc = BoundaryCondition::closed(l, Some(count as i64))?;
            let model = AngleModel::new(p, &bc, grid.n(), &theta)?;
            let curve = PlanarCurve::circle(count, l, grid.n())?;
            let residual = stationarity_residual(&model, &theta);
            let energy = model.energy(&theta);
            Ok(CriticalPoint { curve, theta, p, bc, multipliers: Vector2::zeros(), residual, energy, mode: ModeTag::Circle { m: count } })
        }
        ClosedKind::FigureEight => {
            let psi = shape_angles(p, 2.0 * count as f64, &grid);
            let c = |a: f64| signed_chord(&psi, a, grid.h());
            let mut a = 0.0;
            while c(a + 0.005) > 0.0 {
                a += 0.005;
                if a > 20.0 {
                    return Err(Error::ModeNotFound("figure-eight closure amplitude".into()));
                }
            }
            let alpha = bisect(a, a + 0.005, c, 1e-14);
            let theta0: Vec<f64> = psi.iter().map(|v| alpha * v).collect();
            let bc = BoundaryCondition::closed(l, Some(0))?;
            let model = AngleModel::new(p, &bc, grid.n(), &theta0)?;
            let out = newton_kkt(&model, &theta0, &opts.newton)?;
            let cp = CriticalPoint::build(&model, out.theta, bc, out.force, out.residual, ModeTag::FigureEight { n: count })?;
            match fold_index(&cp.curve, None) {
                Ok(f) if f.m == 2 * count as usize => Ok(cp),
                other => Err(Error::ModeNotFound(format!("figure-eight fold check failed: {other:?}"))),
            }
        }
    }
}

/// Loop of arclength 1 with both end tangents `(1,0)`, on the pinned loop branch.
#[derive(Clone, Debug)]
pub struct FlatCoreLoop {
    pub p: f64,
    pub cp: CriticalPoint,
    /// Signed chord `X(1) - X(0)`.
    pub chord: f64,
    /// `max(|θ(0)|, |θ(1) - 2π|)`.
    pub tangent_residual: f64,
    /// Root of the fitted end angle over the chord parameter.
    pub chord_root: f64,
    /// `max(|k(0)|, |k(1)|)` and the smallest interior curvature away from the ends.
    pub end_curvature: f64,
    /// `max(|f'(k(0))|, |f'(k(1))|) / max |f'(k)|`; the end condition in the
    /// smooth dual variable, since `k` itself is only Hölder at its zeros.
    pub end_dual: f64,
    pub min_interior_curvature: f64,
    /// `max |x(s) + x(1-s) - 2x(1/2)|` and `max |y(s) - y(1-s)|`.
    pub symmetry_residual: f64,
}

/// Root of the end tangent angle over the chord ratio along the `n = 1` loop branch.
///
/// The angle decreases to zero at the flat-core chord and stays zero beyond it
/// (the solutions grow straight end segments), so the root is located as the
/// left edge of `{r : |θ(0)| <= tol}` by bisection.
pub fn make_flatcore_loop(p: f64, opts: &SolverOptions) -> Result<FlatCoreLoop> {
    if p <= 2.0 {
        return Err(Error::UnsupportedExponent(p));
    }
    check_exponent(p, opts.force_p)?;
    let l = 1.0;
    let grid = Grid::new(l, opts.n)?;
    let psi = shape_angles(p, 1.0, &grid);
    // start low on the loop branch, where the p-sine guess is reliable
    let r0 = 0.05;
    let (alpha, r_reach) = shoot_amplitude(&psi, grid.h(), l, r0, PinnedKind::Loop)?;
    let theta0: Vec<f64> = psi.iter().map(|v| alpha * v + PI).collect();
    let (mut theta, _, _) = continue_pinned(p, l, theta0, r_reach, r0, &opts.newton)?;
    // Beyond the root the discrete end angle sits at roundoff level, and just
    // below it the angle vanishes like (r* - r)^{p/(p-2)}. Only samples where
    // it is resolved are used: the linearised angle θ0^{(p-2)/p} is fitted by
    // a quadratic in r and each new sample goes halfway to the fitted root.
    let resolved = 1e-9;
    let angle = |t: &[f64]| crate::curve::wrap_angle(t[0]);
    if angle(&theta) <= resolved {
        return Err(Error::RootNotBracketed(format!("end tangent angle already unresolved at r = {r0}")));
    }
    // The shift of the loop along the chord softens near the root and picks
    // up roundoff, so every solve is folded back onto θ(1-s) = 2π - θ(s).
    let symmetrize = |t: &mut Vec<f64>| {
        let n = t.len();
        let src = t.clone();
        for i in 0..n {
            t[i] = 0.5 * (src[i] + 2.0 * PI - src[n - 1 - i]);
        }
    };
    let solve_full = |r: f64, start: &[f64]| -> Result<NewtonOutcome> {
        let (model, _) = pinned_model(p, r, l, start)?;
        let mut t = newton_kkt(&model, start, &opts.newton)?.theta;
        symmetrize(&mut t);
        newton_kkt(&model, &t, &opts.newton)
    };
    let solve_at = |r: f64, start: &[f64]| -> Result<Vec<f64>> { Ok(solve_full(r, start)?.theta) };
    let lin = |t: &[f64]| angle(t).max(0.0).powf((p - 2.0) / p);
    let mut samples: Vec<(f64, f64)> = vec![(r0, lin(&theta))];
    let mut r = r0;
    let mut step = 0.01;
    // march up the branch until the angle is no longer resolved
    while r < 0.999 && step >= 1e-5 {
        let next = (r + step).min(0.999);
        match solve_at(next, &theta) {
            Ok(t) if angle(&t) > resolved => {
                r = next;
                samples.push((r, lin(&t)));
                theta = t;
            }
            Ok(_) => break,
            Err(_) => step *= 0.5,
        }
    }
    if samples.len() < 3 {
        return Err(Error::RootNotBracketed(format!("too few resolved samples below r = {r:.3}")));
    }
    // least-squares quadratic over the resolved samples near the top of the march
    let fitted_root = |s: &[(f64, f64)]| -> Option<f64> {
        let last = s[s.len() - 1].0;
        let window: Vec<(f64, f64)> = s.iter().copied().filter(|&(r, _)| r >= last - 0.05).collect();
        if window.len() < 3 {
            return None;
        }
        let a = nalgebra::DMatrix::from_fn(window.len(), 3, |i, j| (window[i].0 - last).powi(j as i32));
        let b = nalgebra::DVector::from_iterator(window.len(), window.iter().map(|w| w.1));
        let c = a.svd(true, true).solve(&b, 1e-14).ok()?;
        let lin_root = last - c[0] / c[1];
        let disc = c[1] * c[1] - 4.0 * c[2] * c[0];
        if c[2] == 0.0 || disc < 0.0 {
            return (lin_root > last).then_some(lin_root);
        }
        let sq = disc.sqrt();
        [(-c[1] + sq) / (2.0 * c[2]), (-c[1] - sq) / (2.0 * c[2])]
            .iter()
            .map(|d| last + d)
            .filter(|&x| x > last)
            .fold(None, |best: Option<f64>, x| Some(best.map_or(x, |b| b.min(x))))
    };
    let mut r_star = fitted_root(&samples).ok_or_else(|| Error::RootNotBracketed("fitted end angle has no root".into()))?;
    for _ in 0..60 {
        let last = samples[samples.len() - 1].0;
        if r_star - last <= 1e-9 {
            break;
        }
        let next = last + 0.5 * (r_star - last);
        let Ok(t) = solve_at(next, &theta) else { break };
        if angle(&t) <= resolved {
            break;
        }
        samples.push((next, lin(&t)));
        theta = t;
        match fitted_root(&samples) {
            Some(est) => r_star = est,
            None => break,
        }
    }
    // Past the root the branch degenerates into loop-plus-segment curves, so the
    // loop itself is the last resolved sample; its end angles are below the
    // resolution threshold and it keeps the symmetry of the pinned problem.
    let last_r = samples[samples.len() - 1].0;
    let out = solve_full(last_r, &theta)?;
    let (model, bc) = pinned_model(p, last_r, l, &out.theta)?;
    let (theta, force, residual) = (out.theta, out.force, out.residual);
    let cp = CriticalPoint::build(&model, theta, bc, force, residual, ModeTag::FlatCoreLoop)?;
    let n = cp.theta.len();
    let rec = cp.curve.reconstruct();
    let chord = rec.points[n - 1].x - rec.points[0].x;
    let tangent_residual = cp.theta[0].abs().max((cp.theta[n - 1] - 2.0 * PI).abs());
    let end_curvature = cp.curve.k[0].abs().max(cp.curve.k[n - 1].abs());
    let dual = |k: f64| model.density_d1(k).abs();
    let dual_max = cp.curve.k.iter().fold(0.0f64, |m, &k| m.max(dual(k)));
    let end_dual = dual(cp.curve.k[0]).max(dual(cp.curve.k[n - 1])) / dual_max;
    let min_interior_curvature = cp.curve.k[1..n - 1].iter().cloned().fold(f64::INFINITY, f64::min);
    let mid = rec.points[(n - 1) / 2];
    let symmetry_residual = (0..n)
        .map(|i| {
            let (a, b) = (rec.points[i], rec.points[n - 1 - i]);
            (a.x + b.x - 2.0 * mid.x).abs().max((a.y - b.y).abs())
        })
        .fold(0.0, f64::max);
    if cp.theta[n - 1] - cp.theta[0] < PI {
        return Err(Error::ModeNotFound("loop branch lost its full turn".into()));
    }
    Ok(FlatCoreLoop { p, cp, chord, chord_root: r_star, tangent_residual, end_curvature, end_dual, min_interior_curvature, symmetry_residual })
}

/// `γ = seg(L0) ⊕ loop(σ1) ⊕ seg(L1) ⊕ … ⊕ loop(σN) ⊕ seg(LN)`, loops of arclength `loop_arclength`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatCoreDecomposition {
    /// `true` for a counter-clockwise loop.
    pub sigmas: Vec<bool>,
    pub seg_lengths: Vec<f64>,
    pub loop_arclength: f64,
}

impl FlatCoreDecomposition {
    pub fn new(sigmas: Vec<bool>, seg_lengths: Vec<f64>) -> Result<Self> {
        if seg_lengths.len() != sigmas.len() + 1 || sigmas.is_empty() {
            return Err(Error::HypothesisViolated(format!("{} loops need {} segment lengths", sigmas.len(), sigmas.len() + 1)));
        }
        if seg_lengths.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::HypothesisViolated("segment lengths must be non-negative".into()));
        }
        Ok(Self { sigmas, seg_lengths, loop_arclength: 1.0 })
    }

    pub fn loops(&self) -> usize {
        self.sigmas.len()
    }

    pub fn total_length(&self) -> f64 {
        self.seg_lengths.iter().sum::<f64>() + self.loops() as f64 * self.loop_arclength
    }

    /// Positive end segments, and no empty segment between opposite loops.
    pub fn quasi_alternating(&self) -> bool {
        let n = self.loops();
        if !(self.seg_lengths[0] > 0.0 && self.seg_lengths[n] > 0.0) {
            return false;
        }
        (1..n).all(|j| self.seg_lengths[j] > 0.0 || self.sigmas[j - 1] == self.sigmas[j])
    }

    /// Arclength where loop `j` (0-based) starts.
    pub fn loop_start(&self, j: usize) -> f64 {
        self.seg_lengths[..=j].iter().sum::<f64>() + j as f64 * self.loop_arclength
    }
}

/// Flat-core curve assembled in angle space, so junctions carry no kink.
#[derive(Clone, Debug)]
pub struct FlatCore {
    pub decomposition: FlatCoreDecomposition,
    pub curve: PlanarCurve,
    pub theta: Vec<f64>,
    pub loop_info: FlatCoreLoop,
    pub energy: f64,
}

impl FlatCore {
    pub fn model(&self, kind: BcKind) -> Result<AngleModel> {
        let bc = match kind {
            BcKind::Pinned => BoundaryCondition::pinned_from(&self.curve)?,
            _ => BoundaryCondition::clamped_from(&self.curve)?,
        };
        AngleModel::new(self.loop_info.p, &bc, self.theta.len(), &self.theta)
    }

    /// The flat-core as a critical point under pinned or clamped data.
    pub fn critical_point(&self, kind: BcKind) -> Result<CriticalPoint> {
        let model = self.model(kind)?;
        let bc = match kind {
            BcKind::Pinned => BoundaryCondition::pinned_from(&self.curve)?,
            _ => BoundaryCondition::clamped_from(&self.curve)?,
        };
        let force = fit_force(&model, &self.theta);
        let residual = stationarity_residual(&model, &self.theta);
        let mut cp = CriticalPoint::build(&model, self.theta.clone(), bc, force, residual, ModeTag::FlatCore)?;
        cp.curve = self.curve.clone();
        Ok(cp)
    }
}

/// Assembles a flat-core from a loop solved with `loop_nodes` nodes; segment
/// lengths are snapped to the loop spacing.
pub fn assemble_flatcore(p: f64, decomposition: &FlatCoreDecomposition, loop_nodes: usize) -> Result<FlatCore> {
    let lp = make_flatcore_loop(p, &SolverOptions::with_n(loop_nodes))?;
    assemble_with_loop(&lp, decomposition)
}

pub fn assemble_with_loop(lp: &FlatCoreLoop, decomposition: &FlatCoreDecomposition) -> Result<FlatCore> {
    let h = lp.cp.curve.h();
    let loop_theta = &lp.cp.theta;
    let mut dec = decomposition.clone();
    dec.loop_arclength = lp.cp.length();
    let mut theta: Vec<f64> = vec![0.0];
    let mut level = 0.0;
    for (j, &len) in decomposition.seg_lengths.iter().enumerate() {
        let cells = (len / h).round() as usize;
        dec.seg_lengths[j] = cells as f64 * h;
        theta.extend(std::iter::repeat(level).take(cells));
        if j < decomposition.sigmas.len() {
            let sign = if decomposition.sigmas[j] { 1.0 } else { -1.0 };
            let base = level - sign * loop_theta[0];
            theta.extend(loop_theta[1..].iter().map(|t| base + sign * t));
            level = *theta.last().unwrap();
        }
    }
    let cells = theta.len() - 1;
    let grid = Grid::from_spacing(h, cells)?;
    let curve = curve_from_angles_p(&grid, &theta, Vector2::zeros(), lp.p)?;
    let bc = BoundaryCondition::pinned_from(&curve)?;
    let model = AngleModel::new(lp.p, &bc, theta.len(), &theta)?;
    let energy = model.energy(&theta);
    Ok(FlatCore { decomposition: dec, curve, theta, loop_info: lp.clone(), energy })
}

/// Helix of `turns` turns sampled at equal parameter steps; the grid spacing is
/// the chord between samples, so the polygon has exact unit speed.
pub fn make_helix(radius: f64, pitch: f64, turns: f64, n: usize) -> Result<SpaceCurve> {
    if !(radius > 0.0) {
        return Err(Error::NonpositiveScale(radius));
    }
    if n < 3 || !(turns > 0.0) {
        return Err(Error::BadGrid(format!("need n >= 3 and positive turns, got n = {n}, turns = {turns}")));
    }
    let c = pitch / (2.0 * PI);
    let total = 2.0 * PI * turns;
    let dt = total / (n - 1) as f64;
    let point = |t: f64| Vector3::new(radius * t.cos(), radius * t.sin(), c * t);
    let chord = (point(dt) - point(0.0)).norm();
    let grid = Grid::from_spacing(chord, n - 1)?;
    let points = (0..n).map(|i| point(i as f64 * dt)).collect();
    SpaceCurve::new(grid, points)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PElasticaClass {
    Circular,
    Wavelike,
    Flatcore,
    Unknown,
}

/// Classification by curvature signature.
pub fn classify_pelastica(curve: &PlanarCurve) -> PElasticaClass {
    let n = curve.n();
    let h = curve.h();
    let kmax = curve.k.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mean = curve.k.iter().sum::<f64>() / n as f64;
    let spread = curve.k.iter().map(|k| (k - mean).abs()).fold(0.0, f64::max);
    if mean.abs() > 0.0 && spread <= 1e-6 * mean.abs() {
        return PElasticaClass::Circular;
    }
    if kmax == 0.0 {
        return PElasticaClass::Unknown;
    }
    if detect_well_periodic(curve, None).is_ok() {
        return PElasticaClass::Wavelike;
    }
    let eps = 1e-4 * kmax;
    let mut plateaus = 0;
    let mut bumps = 0;
    let mut i = 0;
    while i < n {
        if curve.k[i].abs() <= eps {
            let start = i;
            while i < n && curve.k[i].abs() <= eps {
                i += 1;
            }
            if (i - start) as f64 * h > 3.0 * h {
                plateaus += 1;
            }
        } else {
            let sign = curve.k[i] > 0.0;
            while i < n && (curve.k[i].abs() <= eps || (curve.k[i] > 0.0) == sign) {
                // a bump ends at a plateau or a sign change
                if curve.k[i].abs() <= eps && i + 3 < n && curve.k[i..i + 4].iter().all(|k| k.abs() <= eps) {
                    break;
                }
                i += 1;
            }
            bumps += 1;
        }
    }
    if plateaus >= 1 && bumps >= 1 {
        PElasticaClass::Flatcore
    } else {
        PElasticaClass::Unknown
    }
}
