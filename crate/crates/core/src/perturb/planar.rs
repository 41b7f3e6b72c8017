//! Planar constructions: half-turns of a subarc, cyclic shifts of pinned
//! curves and flat-cores, loop swaps, and the loop rescaling for pinned loops.

use std::collections::BTreeMap;

use nalgebra::Vector2;

use super::{shift_cells, Competitor, Construction, CurvatureJump, PlanarParts};
use crate::curve::{PlanarCurve, Reconstruction};
use crate::energy::{energy, BoundaryCondition, EnergyDensity};
use crate::error::{Error, Result};
use crate::profiles::{default_zero_eps, fold_index, inflections};
use crate::solver::FlatCore;

/// `max |Δ²k|` over windows that do not straddle a joint.
///
/// Stencils touching a (numerical) zero or sign change of `k` are skipped: for `p ≠ 2`
/// the curvature is only Hölder continuous there.
pub fn curvature_noise_floor(curve: &PlanarCurve) -> f64 {
    let zero = 1e-4 * curve.k.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    (1..curve.n() - 1)
        .filter(|&i| curve.joint(i).is_none())
        .filter_map(|i| {
            let (a, b, c) = (curve.k[i - 1], curve.k[i], curve.k_left(i + 1));
            let one_sign = (a > zero && b > zero && c > zero) || (a < -zero && b < -zero && c < -zero);
            one_sign.then(|| (c - 2.0 * b + a).abs())
        })
        .fold(0.0, f64::max)
}

fn tangent_gap(rec: &Reconstruction, ia: usize, ib: usize) -> f64 {
    (rec.tangents[ia] - rec.tangents[ib]).norm()
}

fn extras(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Whether a predicted jump is indistinguishable from the sampling noise.
fn degenerate(jump: f64, curve: &PlanarCurve) -> bool {
    let kmax = curve.k.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    jump <= 10.0 * curvature_noise_floor(curve).max(1e-12 * kmax)
}

fn node_range(curve: &PlanarCurve, s1: f64, s2: f64) -> Result<(usize, usize)> {
    let l = curve.length();
    if !(s1 >= -1e-9 * l && s2 <= l * (1.0 + 1e-9) && s1 < s2) {
        return Err(Error::BadRange { a: s1, b: s2, length: l });
    }
    let (ia, ib) = (curve.grid.node_of(s1), curve.grid.node_of(s2));
    if ia >= ib || (ia == 0 && ib + 1 == curve.n()) {
        return Err(Error::RangeExceeded(format!("need s2 - s1 < L, got [{s1}, {s2}]")));
    }
    Ok((ia, ib))
}

/// Half-turn of `γ|[s1,s2]` about the midpoint of its ends; requires
/// `γ'(s1) = γ'(s2)`. The jump at the cuts is `|k(s1) + k(s2)|`.
pub fn global_rotation_competitor(curve: &PlanarCurve, s1: f64, s2: f64, f: &EnergyDensity, tol: f64) -> Result<Competitor<PlanarCurve>> {
    let (ia, ib) = node_range(curve, s1, s2)?;
    let rec = curve.reconstruct();
    let gap = tangent_gap(&rec, ia, ib);
    if gap > tol {
        return Err(Error::HypothesisViolated(format!("tangents at the cuts differ by {gap:.3e}")));
    }
    let c = 0.5 * (rec.points[ia] + rec.points[ib]);
    let competitor = curve.rotate180_nodes(ia, ib, c)?;
    let predicted = (curve.k[ia] + curve.k_left(ib)).abs();
    let mut flags = Vec::new();
    if degenerate(predicted, curve) {
        flags.push("-k(s1) = k(s2): the cuts carry no curvature jump".to_string());
    }
    let bc = BoundaryCondition::clamped_from(curve)?;
    let report = PlanarParts {
        construction: Construction::GlobalRot,
        original: curve,
        competitor: &competitor,
        bc: &bc,
        extras: extras(&[
            ("s1", curve.grid.s(ia)),
            ("s2", curve.grid.s(ib)),
            ("center_x", c.x),
            ("center_y", c.y),
            ("tangent_gap", gap),
            ("predicted_jump", predicted),
        ]),
        flags,
        extra_bar: 0.0,
        jumps: None,
    }
    .report(f)?;
    Ok(Competitor { curve: competitor, report })
}

/// Half-turn of `γ|[s1+1/j, s3+1/j]` about `c_j`, for consecutive zeros
/// `s1 < s2 < s3` of a well-periodic profile. The jump at `s1+1/j` is `2|k(s1+1/j)|`.
pub fn local_rotation_family(curve: &PlanarCurve, s1: f64, s3: f64, j: f64, f: &EnergyDensity, tol: f64) -> Result<Competitor<PlanarCurve>> {
    let n = curve.n();
    let h = curve.h();
    let l = curve.length();
    if !(0.0 <= s1 && s1 < s3 && s3 <= l * (1.0 + 1e-12)) {
        return Err(Error::HypothesisViolated(format!("need 0 <= s1 < s3 <= L, got {s1}, {s3}")));
    }
    let zeros = inflections(curve, default_zero_eps(curve));
    let near = |s: f64| zeros.iter().any(|z| (z - s).abs() <= 2.0 * h);
    if !near(s1) || !near(s3) {
        return Err(Error::HypothesisViolated(format!("s1 = {s1} and s3 = {s3} must be zeros of k")));
    }
    let between = zeros.iter().filter(|&&z| z > s1 + 2.0 * h && z < s3 - 2.0 * h).count();
    if between != 1 {
        return Err(Error::HypothesisViolated(format!("{between} zeros between s1 and s3; consecutive zeros need exactly one")));
    }
    let m = shift_cells(&curve.grid, j)?;
    let shift = m as f64 * h;
    let i1 = curve.grid.node_of(s1);
    let ia = i1 + m;
    let ib = i1 + ((s3 - s1) / h).round() as usize + m;
    if ib >= n {
        return Err(Error::RangeExceeded(format!("s3 + 1/j = {} exceeds L = {l}", s3 + shift)));
    }
    if ia == 0 && ib + 1 == n {
        return Err(Error::RangeExceeded("the rotated arc would be the whole curve".into()));
    }
    let late = |z: f64, s: f64| z > s + 2.0 * h && z <= s + shift + 0.5 * h;
    if zeros.iter().any(|&z| late(z, s1) || late(z, s3)) {
        return Err(Error::HypothesisViolated(format!("1/j = {shift} reaches the next zero of k")));
    }
    let rec = curve.reconstruct();
    let gap = tangent_gap(&rec, ia, ib);
    if gap > tol {
        return Err(Error::HypothesisViolated(format!("tangents at s1+1/j and s3+1/j differ by {gap:.3e}")));
    }
    let c = 0.5 * (rec.points[ia] + rec.points[ib]);
    let competitor = curve.rotate180_nodes(ia, ib, c)?;
    let predicted = 2.0 * curve.k[ia].abs();
    let mut flags = Vec::new();
    if degenerate(predicted, curve) {
        flags.push("k(s1+1/j) = 0: the cuts carry no curvature jump".to_string());
    }
    let period_offset = ((s3 - s1) / h - ((s3 - s1) / h).round()).abs();
    if period_offset > 1e-6 {
        flags.push(format!("s3 - s1 is {period_offset:.3} cells off the grid"));
    }
    let bc = BoundaryCondition::clamped_from(curve)?;
    let report = PlanarParts {
        construction: Construction::LocalRot,
        original: curve,
        competitor: &competitor,
        bc: &bc,
        extras: extras(&[
            ("j", j),
            ("shift", shift),
            ("cut_a", curve.grid.s(ia)),
            ("cut_b", curve.grid.s(ib)),
            ("c_j_x", c.x),
            ("c_j_y", c.y),
            ("tangent_gap", gap),
            ("predicted_jump", predicted),
        ]),
        flags,
        extra_bar: 0.0,
        jumps: None,
    }
    .report(f)?;
    Ok(Competitor { curve: competitor, report })
}

/// `P0 ⊕ γ|[s_m, L] ⊕ γ|[0, s_m]` with `s_m` the `m`-th node.
fn cyclic_shift(curve: &PlanarCurve, m: usize) -> Result<PlanarCurve> {
    let n = curve.n();
    let head = curve.restrict_nodes(0, m)?;
    let tail = curve.restrict_nodes(m, n - 1)?;
    Ok(PlanarCurve::concat(&[tail, head])?.prepend_point(curve.base_point))
}

fn shift_report(
    construction: Construction,
    curve: &PlanarCurve,
    j: f64,
    limit: f64,
    f: &EnergyDensity,
    tol: f64,
    mut flags: Vec<String>,
) -> Result<Competitor<PlanarCurve>> {
    let n = curve.n();
    let m = shift_cells(&curve.grid, j)?;
    let shift = m as f64 * curve.h();
    if shift >= limit {
        return Err(Error::RangeExceeded(format!("1/j = {shift} must be below {limit}")));
    }
    let rec = curve.reconstruct();
    let t_end = Vector2::new(rec.theta_left[n - 1].cos(), rec.theta_left[n - 1].sin());
    let gap = (rec.tangents[0] - t_end).norm();
    if gap > tol {
        return Err(Error::HypothesisViolated(format!("end tangents differ by {gap:.3e}")));
    }
    let competitor = cyclic_shift(curve, m)?;
    let kj0 = competitor.k[0];
    if degenerate(kj0.abs(), curve) {
        flags.push("k_j(0) = 0: the natural boundary condition still holds".to_string());
    }
    let bc = BoundaryCondition::pinned_from(curve)?;
    let report = PlanarParts {
        construction,
        original: curve,
        competitor: &competitor,
        bc: &bc,
        extras: extras(&[("j", j), ("shift", shift), ("k_j0", kj0), ("k_jL", *competitor.k.last().unwrap()), ("end_tangent_gap", gap)]),
        flags,
        extra_bar: 0.0,
        jumps: None,
    }
    .report(f)?;
    Ok(Competitor { curve: competitor, report })
}

/// Cyclic shift of a 1-fold pinned curve (zeros exactly at `0, L/2, L`);
/// `k_j(0) = k(1/j)` violates the natural boundary condition.
pub fn pinned_shift_family(curve: &PlanarCurve, j: f64, f: &EnergyDensity, tol: f64) -> Result<Competitor<PlanarCurve>> {
    let fold = fold_index(curve, None).map_err(|e| Error::HypothesisViolated(format!("not 1-fold: {e}")))?;
    if fold.m != 2 {
        return Err(Error::HypothesisViolated(format!("not 1-fold: m = {}", fold.m)));
    }
    shift_report(Construction::PinnedShift, curve, j, curve.length(), f, tol, Vec::new())
}

/// Cyclic shift of a flat-core whose first (or, after reversal, last) piece is a loop.
pub fn flatcore_endpoint_shift(fc: &FlatCore, j: f64, f: &EnergyDensity, tol: f64) -> Result<Competitor<PlanarCurve>> {
    let dec = &fc.decomposition;
    let h = fc.curve.h();
    let curve = if dec.seg_lengths[0] < 0.5 * h {
        fc.curve.clone()
    } else if dec.seg_lengths[dec.loops()] < 0.5 * h {
        fc.curve.reverse()
    } else {
        return Err(Error::HypothesisViolated("no loop touches an endpoint".into()));
    };
    shift_report(Construction::FlatcoreShift, &curve, j, dec.loop_arclength, f, tol, Vec::new())
}

/// Replaces the adjacent opposite loops `A ⊕ B` (starting with loop `index`) by
/// `B|[0,1/j] ⊕ A|[1-1/j,1] ⊕ A|[0,1-1/j] ⊕ B|[1/j,1]`. When `index` is
/// `None` the first such pair is used.
pub fn flatcore_loop_swap(fc: &FlatCore, index: Option<usize>, j: f64, f: &EnergyDensity, tol: f64) -> Result<Competitor<PlanarCurve>> {
    let dec = &fc.decomposition;
    let curve = &fc.curve;
    let h = curve.h();
    let adjacent = |i: usize| i + 1 < dec.loops() && dec.seg_lengths[i + 1] < 0.5 * h;
    let i = match index {
        Some(i) => {
            if !adjacent(i) {
                return Err(Error::HypothesisViolated(format!("loops {i} and {} are not adjacent", i + 1)));
            }
            i
        }
        None => (0..dec.loops())
            .find(|&i| adjacent(i) && dec.sigmas[i] != dec.sigmas[i + 1])
            .ok_or_else(|| Error::HypothesisViolated("no adjacent opposite loops".into()))?,
    };
    if dec.sigmas[i] == dec.sigmas[i + 1] {
        return Err(Error::HypothesisViolated("adjacent loops have the same orientation".into()));
    }
    let ln = (dec.loop_arclength / h).round() as usize;
    let m = shift_cells(&curve.grid, j)?;
    if m >= ln {
        return Err(Error::RangeExceeded(format!("1/j = {} must be below the loop arclength {}", m as f64 * h, dec.loop_arclength)));
    }
    let a0 = curve.grid.node_of(dec.loop_start(i));
    let b0 = a0 + ln;
    let b1 = b0 + ln;
    let rec = curve.reconstruct();
    let gap = tangent_gap(&rec, b0 + m, a0 + ln - m).max(tangent_gap(&rec, a0, b0)).max(tangent_gap(&rec, b0, b1));
    if gap > tol {
        return Err(Error::HypothesisViolated(format!("loop tangents do not match ({gap:.3e})")));
    }
    let mut parts = Vec::with_capacity(6);
    if a0 > 0 {
        parts.push(curve.restrict_nodes(0, a0)?);
    }
    parts.push(curve.restrict_nodes(b0, b0 + m)?);
    parts.push(curve.restrict_nodes(a0 + ln - m, b0)?);
    parts.push(curve.restrict_nodes(a0, a0 + ln - m)?);
    parts.push(curve.restrict_nodes(b0 + m, b1)?);
    if b1 + 1 < curve.n() {
        parts.push(curve.restrict_nodes(b1, curve.n() - 1)?);
    }
    let mut competitor = PlanarCurve::concat(&parts)?;
    competitor.base_point = curve.base_point;
    let predicted = 2.0 * curve.k[b0 + m].abs();
    let mut flags = Vec::new();
    if degenerate(predicted, curve) {
        flags.push("loop curvature vanishes at the cut".to_string());
    }
    let bc = BoundaryCondition::clamped_from(curve)?;
    let report = PlanarParts {
        construction: Construction::FlatcoreSwap,
        original: curve,
        competitor: &competitor,
        bc: &bc,
        extras: extras(&[
            ("j", j),
            ("shift", m as f64 * h),
            ("loop_index", i as f64),
            ("cut", curve.grid.s(a0 + m)),
            ("predicted_jump", predicted),
            ("tangent_gap", gap),
        ]),
        flags,
        extra_bar: 0.0,
        jumps: None,
    }
    .report(f)?;
    Ok(Competitor { curve: competitor, report })
}

/// First crossing `a < b` of the polygon through the nodes, as arclengths.
pub fn find_self_intersection(curve: &PlanarCurve) -> Option<(f64, f64)> {
    let pts = curve.points();
    let h = curve.h();
    let n = pts.len();
    let cross = |u: Vector2<f64>, v: Vector2<f64>| u.x * v.y - u.y * v.x;
    for i in 0..n - 1 {
        let (p, r) = (pts[i], pts[i + 1] - pts[i]);
        for jj in i + 2..n - 1 {
            let (q, s) = (pts[jj], pts[jj + 1] - pts[jj]);
            let lo = |a: f64, b: f64, c: f64, d: f64| a.min(b) > c.max(d);
            if lo(p.x, p.x + r.x, q.x, q.x + s.x) || lo(q.x, q.x + s.x, p.x, p.x + r.x) {
                continue;
            }
            if lo(p.y, p.y + r.y, q.y, q.y + s.y) || lo(q.y, q.y + s.y, p.y, p.y + r.y) {
                continue;
            }
            let den = cross(r, s);
            if den.abs() < f64::MIN_POSITIVE {
                continue;
            }
            let t = cross(q - p, s) / den;
            let u = cross(q - p, r) / den;
            if (0.0..1.0).contains(&t) && (0.0..1.0).contains(&u) {
                let (a, b) = ((i as f64 + t) * h, (jj as f64 + u) * h);
                if a > 0.0 && b < curve.length() {
                    return Some((a, b));
                }
            }
        }
    }
    None
}

/// Trapezoid value of `∫ f(|k|)` over `[0, len]` on `4(n-1)` cells.
fn fine_energy(len: f64, n: usize, f: &EnergyDensity, k: impl Fn(f64) -> f64) -> Result<f64> {
    let cells = 4 * (n - 1);
    let hf = len / cells as f64;
    let mut sum = 0.0;
    for i in 0..=cells {
        let w = if i == 0 || i == cells { 0.5 } else { 1.0 };
        sum += w * f.checked(k(i as f64 * hf).abs())?;
    }
    Ok(sum * hf)
}

/// Bisection to `tol` on a bracketing interval.
fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64, what: &str) -> Result<f64> {
    let (glo, ghi) = (g(lo), g(hi));
    if !(glo.signum() * ghi.signum() < 0.0) {
        return Err(Error::RootNotBracketed(format!("{what}: g({lo}) = {glo:.3e}, g({hi}) = {ghi:.3e}")));
    }
    let neg_at_lo = glo < 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if (g(mid) < 0.0) == neg_at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Competitor for a ½-fold pinned loop: odd extension, cut at `-c_j` and
/// `L-1/j`, rotation `Q_j` restoring the chord, and the loop `[a,b]` at the
/// self-intersection stretched by `λ_j = (b-a+1/j-c_j)/(b-a)` to restore the
/// length. The result is resampled on the original grid; `c_j` and `Q_j` are
/// then corrected so the discrete end point is exact.
pub fn pinned_loop_rescale_family(
    curve: &PlanarCurve,
    crossing: Option<(f64, f64)>,
    j: f64,
    f: &EnergyDensity,
) -> Result<Competitor<PlanarCurve>> {
    let norm = curve.normalized_chord();
    let rec = norm.reconstruct();
    let n = norm.n();
    let h = norm.h();
    let len = norm.length();
    let chord = rec.points[n - 1];
    let l = chord.norm();
    if l <= 1e-9 * len {
        return Err(Error::HypothesisViolated("the ends coincide (l = 0)".into()));
    }
    if rec.tangents[0].x <= 0.0 {
        return Err(Error::HypothesisViolated("the start tangent points away from the other end".into()));
    }
    let (a, b) = match crossing {
        Some((a, b)) => {
            let gap = (norm.point_at(&rec, a) - norm.point_at(&rec, b)).norm();
            if !(0.0 < a && a < b && b < len) || gap > 1e-6 * len {
                return Err(Error::HypothesisViolated(format!("γ(a) and γ(b) differ by {gap:.3e}")));
            }
            (a, b)
        }
        None => find_self_intersection(&norm).ok_or_else(|| Error::HypothesisViolated("the curve is injective".into()))?,
    };
    let e = shift_cells(&norm.grid, j)? as f64 * h;
    if b + e >= len {
        return Err(Error::RangeExceeded(format!("1/j = {e} leaves no arc after the loop end b = {b}")));
    }
    let point = |u: f64| if u < 0.0 { -norm.point_at(&rec, -u) } else { norm.point_at(&rec, u) };
    let g = |c: f64| (point(len - e) - point(-c)).norm() - l;
    let c_j = bisect(g, -e, e, 1e-12, "c_j")?;
    let v = point(len - e) - point(-c_j);
    let q_angle = -v.y.atan2(v.x);
    let lambda_of = |c: f64| (b - a + e - c) / (b - a);
    let k_ext = |u: f64| if u < 0.0 { -norm.k_at(-u) } else { norm.k_at(u) };
    let profile = |c: f64, sigma: f64| -> f64 {
        let lam = lambda_of(c);
        let s1 = a + c;
        let s2 = s1 + lam * (b - a);
        if sigma < s1 {
            k_ext(sigma - c)
        } else if sigma < s2 {
            norm.k_at(a + (sigma - s1) / lam) / lam
        } else {
            k_ext(sigma - c - (lam - 1.0) * (b - a))
        }
    };
    let build = |c: f64, omega: f64| -> Result<PlanarCurve> {
        let k = (0..n).map(|i| profile(c, norm.grid.s(i))).collect();
        PlanarCurve::new(norm.grid, k, Vector2::zeros(), norm.theta_at(&rec, c.abs()) + omega)
    };
    let gd = |c: f64| -> Result<f64> { Ok(build(c, 0.0)?.end_point().norm() - l) };
    // secant on the discrete chord, started at the continuous root
    let (mut c0, mut c1) = (c_j, c_j + 1e-6 * e);
    let (mut g0, mut g1) = (gd(c0)?, gd(c1)?);
    for _ in 0..40 {
        if g1.abs() <= 1e-14 * len || g1 == g0 {
            break;
        }
        let c2 = c1 - g1 * (c1 - c0) / (g1 - g0);
        (c0, g0) = (c1, g1);
        c1 = c2;
        g1 = gd(c1)?;
    }
    if g1.abs() > 1e-10 * len {
        return Err(Error::RootNotBracketed(format!("discrete chord mismatch {g1:.3e} after correcting c_j")));
    }
    let c_d = c1;
    let d = build(c_d, 0.0)?.end_point();
    let omega = -d.y.atan2(d.x);
    let competitor = build(c_d, omega)?;
    let lambda = lambda_of(c_d);

    // margin on the grid against margin on a 4x finer sampling of the same
    // piecewise-linear profiles; the shared quadrature offset cancels
    let fine_before = fine_energy(len, n, f, |s| norm.k_at(s))?;
    let fine_after = fine_energy(len, n, f, |s| profile(c_d, s))?;
    let margin = energy(&competitor, f)? - energy(&norm, f)?;
    let resample_bar = (margin - (fine_after - fine_before)).abs();

    let s1 = a + c_d;
    let s2 = s1 + lambda * (b - a);
    let jumps = vec![
        CurvatureJump { location: s1, jump: norm.k_at(a).abs() * (1.0 - 1.0 / lambda) },
        CurvatureJump { location: s2, jump: norm.k_at(b).abs() * (1.0 - 1.0 / lambda) },
    ];
    let bc = BoundaryCondition::pinned(Vector2::zeros(), Vector2::new(l, 0.0), len)?;
    let report = PlanarParts {
        construction: Construction::LoopRescale,
        original: &norm,
        competitor: &competitor,
        bc: &bc,
        extras: extras(&[
            ("j", j),
            ("shift", e),
            ("a", a),
            ("b", b),
            ("c_j", c_j),
            ("c_j_discrete", c_d),
            ("lambda_j", lambda),
            ("lambda_j_continuous", lambda_of(c_j)),
            ("q_angle", q_angle),
            ("omega", omega),
            ("chord", l),
            ("resample_bar", resample_bar),
        ]),
        flags: Vec::new(),
        extra_bar: resample_bar,
        jumps: Some(jumps),
    }
    .report(f)?;
    Ok(Competitor { curve: competitor, report })
}
