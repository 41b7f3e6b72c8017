//! Constructions for space curves: reflecting or rotating a subarc whose
//! ends lie on the mirror plane or on the rotation axis.

use std::collections::BTreeMap;

use nalgebra::Vector3;

use super::{Competitor, Construction, CurvatureJump, PerturbationReport};
use crate::curve::{SpaceCurve, DEFAULT_SPEED_TOL};
use crate::energy::{bending_energy_3d, AdmissibilityResiduals};
use crate::error::{Error, Result};

/// Unit tangent at node `i` by second-order differences, one-sided at the ends.
fn tangent(curve: &SpaceCurve, i: usize) -> Vector3<f64> {
    let x = &curve.points;
    let n = curve.n();
    let t = if i == 0 {
        -3.0 * x[0] + 4.0 * x[1] - x[2]
    } else if i + 1 == n {
        3.0 * x[n - 1] - 4.0 * x[n - 2] + x[n - 3]
    } else {
        x[i + 1] - x[i - 1]
    };
    t.normalize()
}

/// One-sided tangents `(left, right)` at an interior node.
fn one_sided(curve: &SpaceCurve, i: usize) -> (Vector3<f64>, Vector3<f64>) {
    let x = &curve.points;
    let h2 = 2.0 * curve.h();
    ((3.0 * x[i] - 4.0 * x[i - 1] + x[i - 2]) / h2, (-3.0 * x[i] + 4.0 * x[i + 1] - x[i + 2]) / h2)
}

/// `max_i |a_i - b_i| + (∫ |κ_a - κ_b|² ds)^{1/2}` on a shared grid.
pub fn space_distance(a: &SpaceCurve, b: &SpaceCurve) -> Result<f64> {
    if !a.grid.matches(&b.grid) {
        return Err(Error::GridMismatch(format!("n {} vs {}", a.n(), b.n())));
    }
    let ka = a.curvature_of(DEFAULT_SPEED_TOL)?;
    let kb = b.curvature_of(DEFAULT_SPEED_TOL)?;
    let sup = a.points.iter().zip(&b.points).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
    let mut sum = 0.0;
    for i in 0..a.n() - 1 {
        sum += (ka.kappa[i] - kb.kappa[i]).norm_squared() + (ka.left_at(i + 1) - kb.left_at(i + 1)).norm_squared();
    }
    Ok(sup + (0.5 * a.h() * sum).sqrt())
}

fn cut_nodes(curve: &SpaceCurve, s1: f64, s2: f64) -> Result<(usize, usize)> {
    let l = curve.length();
    if !(s1 >= -1e-9 * l && s2 <= l * (1.0 + 1e-9) && s1 < s2) {
        return Err(Error::BadRange { a: s1, b: s2, length: l });
    }
    let (ia, ib) = (curve.grid.node_of(s1), curve.grid.node_of(s2));
    if ia >= ib || (ia == 0 && ib + 1 == curve.n()) {
        return Err(Error::RangeExceeded(format!("need s2 - s1 < L, got [{s1}, {s2}]")));
    }
    if ia < 2 || ib + 3 > curve.n() {
        return Err(Error::RangeExceeded("cuts need two nodes of margin from the ends".into()));
    }
    Ok((ia, ib))
}

fn space_report(
    construction: Construction,
    original: &SpaceCurve,
    competitor: &SpaceCurve,
    cuts: [usize; 2],
    extras: BTreeMap<String, f64>,
    flags: Vec<String>,
) -> Result<PerturbationReport> {
    // the original gets the same breaks so both sides use the same stencils
    let broken = original.clone().with_breaks(&cuts);
    let before = bending_energy_3d(&broken, DEFAULT_SPEED_TOL)?;
    let after = bending_energy_3d(competitor, DEFAULT_SPEED_TOL)?;
    let kc = competitor.curvature_of(DEFAULT_SPEED_TOL)?;
    let jumps = cuts
        .iter()
        .map(|&i| CurvatureJump { location: competitor.grid.s(i), jump: (kc.kappa[i] - kc.left_at(i)).norm() })
        .collect();
    let c1 = cuts
        .iter()
        .map(|&i| {
            let (l, r) = one_sided(competitor, i);
            (l - r).norm()
        })
        .fold(0.0, f64::max);
    let n = original.n();
    let end = |c: &SpaceCurve| (c.points[0], c.points[n - 1], tangent(c, 0), tangent(c, n - 1));
    let (x0, x1, t0, t1) = end(original);
    let (y0, y1, u0, u1) = end(competitor);
    let length = (competitor.length() - original.length()).abs();
    let bc = AdmissibilityResiduals {
        length,
        start_position: (x0 - y0).norm(),
        end_position: (x1 - y1).norm(),
        start_tangent: (t0 - u0).norm(),
        end_tangent: (t1 - u1).norm(),
        constrained_max: 0.0,
    };
    let bc = AdmissibilityResiduals {
        constrained_max: bc.length.max(bc.start_position).max(bc.end_position).max(bc.start_tangent).max(bc.end_tangent),
        ..bc
    };
    let rounding = 8.0 * f64::EPSILON * (n as f64).sqrt() * before.max(after);
    Ok(PerturbationReport {
        construction,
        energy_before: before,
        energy_after: after,
        energy_margin: after - before,
        error_bar: rounding,
        c1_residual: c1,
        curvature_jumps: jumps,
        bc_residuals: bc,
        distance: space_distance(&broken, competitor)?,
        length_residual: length,
        extras,
        flags,
    })
}

/// `max |Δ²κ|` of the curvature vector, the space analogue of the planar noise floor.
pub fn space_noise_floor(curve: &SpaceCurve) -> Result<f64> {
    let k = curve.curvature_of(DEFAULT_SPEED_TOL)?;
    Ok(k.kappa.windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]).norm()).fold(0.0, f64::max))
}

fn noise_floor(curve: &SpaceCurve) -> Result<f64> {
    let k = curve.curvature_of(DEFAULT_SPEED_TOL)?;
    let kmax = k.kappa.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok((10.0 * space_noise_floor(curve)?).max(1e-12 * kmax))
}

/// Reflection of `γ|[s1,s2]` in the plane through `γ(s1)` with normal `ω`;
/// requires `γ(s2)-γ(s1)`, `γ'(s1)`, `γ'(s2)` orthogonal to `ω`. The jump
/// at `s1` is `2|γ''(s1)·ω|`.
pub fn spatial_reflection_competitor(
    curve: &SpaceCurve,
    s1: f64,
    s2: f64,
    omega: Vector3<f64>,
    tol: f64,
) -> Result<Competitor<SpaceCurve>> {
    let (ia, ib) = cut_nodes(curve, s1, s2)?;
    if (omega.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::BadNormal(omega.norm()));
    }
    let (xa, xb) = (curve.points[ia], curve.points[ib]);
    let defect = ((xb - xa).dot(&omega).abs() / curve.length()).max(tangent(curve, ia).dot(&omega).abs()).max(tangent(curve, ib).dot(&omega).abs());
    if defect > tol {
        return Err(Error::HypothesisViolated(format!("chord and end tangents are not orthogonal to ω ({defect:.3e})")));
    }
    let competitor = curve.reflect_about_plane(curve.grid.s(ia), curve.grid.s(ib), xa, omega)?;
    let k = curve.curvature_of(DEFAULT_SPEED_TOL)?;
    let predicted = 2.0 * k.kappa[ia].dot(&omega).abs();
    let predicted_b = 2.0 * k.kappa[ib].dot(&omega).abs();
    let mut flags = Vec::new();
    if predicted.max(predicted_b) <= noise_floor(curve)? {
        flags.push("γ''·ω vanishes at both cuts".to_string());
    }
    let extras = [("s1", curve.grid.s(ia)), ("s2", curve.grid.s(ib)), ("orthogonality_defect", defect), ("predicted_jump", predicted)]
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
    let report = space_report(Construction::SpatialReflect, curve, &competitor, [ia, ib], extras, flags)?;
    Ok(Competitor { curve: competitor, report })
}

/// Rotation of `γ|[s1,s2]` by `angle` about the tangent line at `γ(s1)`;
/// requires `γ(s2)-γ(s1)`, `γ'(s1)`, `γ'(s2)` parallel. The curvature
/// vectors on both sides of `s1` then form the angle `angle`.
pub fn spatial_rotation_family(curve: &SpaceCurve, s1: f64, s2: f64, angle: f64, tol: f64) -> Result<Competitor<SpaceCurve>> {
    let (ia, ib) = cut_nodes(curve, s1, s2)?;
    let (ta, tb) = (tangent(curve, ia), tangent(curve, ib));
    let chord = curve.points[ib] - curve.points[ia];
    let defect = ta.cross(&tb).norm().max(chord.cross(&ta).norm() / curve.length());
    if defect > tol {
        return Err(Error::HypothesisViolated(format!("chord and end tangents are not parallel ({defect:.3e})")));
    }
    let competitor = curve.rotate_about_axis(curve.grid.s(ia), curve.grid.s(ib), curve.points[ia], ta, angle)?;
    let k = curve.curvature_of(DEFAULT_SPEED_TOL)?;
    let mut flags = Vec::new();
    if k.kappa[ia].norm() <= noise_floor(curve)? {
        flags.push("γ''(s1) vanishes".to_string());
    }
    let kc = competitor.curvature_of(DEFAULT_SPEED_TOL)?;
    let (left, right) = (kc.left_at(ia), kc.kappa[ia]);
    let measured = left.cross(&right).norm().atan2(left.dot(&right));
    let extras = [("s1", curve.grid.s(ia)), ("s2", curve.grid.s(ib)), ("theta", angle), ("measured_angle", measured), ("parallel_defect", defect)]
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
    let report = space_report(Construction::SpatialRotate, curve, &competitor, [ia, ib], extras, flags)?;
    Ok(Competitor { curve: competitor, report })
}
