//! Structure of curvature profiles: inflection points, well-periodicity,
//! the m/2-fold index and the symmetry identities the constructions rely on.

use serde::{Deserialize, Serialize};

use crate::curve::PlanarCurve;
use crate::error::{Error, Result};

/// Default zero-detection threshold `10*h*max|k'|`, with `k'` from first differences.
pub fn default_zero_eps(curve: &PlanarCurve) -> f64 {
    let dk = curve.k.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    (10.0 * dk).max(1e-12)
}

/// Default profile tolerance `1e-6*max|k| + 100*max|Δ²k|`.
pub fn default_profile_tol(curve: &PlanarCurve) -> f64 {
    let kmax = curve.k.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let d2 = curve.k.windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]).abs()).fold(0.0, f64::max);
    1e-6 * kmax + 100.0 * d2
}

/// Sorted zeros of the curvature interpolant where the sign changes; endpoint
/// zeros are included when `|k| <= eps` there. Samples with `|k| <= eps` are
/// treated as undecided and zeros closer than `3h` are merged.
pub fn inflections(curve: &PlanarCurve, eps: f64) -> Vec<f64> {
    let n = curve.n();
    let h = curve.h();
    let l = curve.length();
    let class = |x: f64| -> i8 {
        if x > eps {
            1
        } else if x < -eps {
            -1
        } else {
            0
        }
    };
    let mut zeros = Vec::new();
    if curve.k[0].abs() <= eps {
        zeros.push(0.0);
    }
    let mut last: Option<(usize, i8)> = None;
    for i in 0..n {
        let c = class(curve.k[i]);
        if c == 0 {
            continue;
        }
        if let Some((j, cj)) = last {
            if cj != c {
                zeros.push(crossing(curve, j, i));
            }
        }
        last = Some((i, c));
    }
    if curve.k_left(n - 1).abs() <= eps {
        zeros.push(l);
    }
    zeros.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::new();
    for z in zeros {
        match merged.last_mut() {
            Some(prev) if z - *prev < 3.0 * h => {
                // keep exact endpoints
                if z == l {
                    *prev = l;
                }
            }
            _ => merged.push(z),
        }
    }
    merged
}

/// Sign change of the linear interpolant between nodes `i < j` of opposite sign;
/// with several raw crossings in between, the middle one.
fn crossing(curve: &PlanarCurve, i: usize, j: usize) -> f64 {
    let h = curve.h();
    let mut found = Vec::new();
    for m in i..j {
        let (a, b) = curve.cell(m);
        if a == 0.0 && m > i {
            found.push(m as f64 * h);
        } else if a * b < 0.0 {
            found.push((m as f64 + a / (a - b)) * h);
        }
    }
    if found.is_empty() {
        return 0.5 * (i + j) as f64 * h;
    }
    found[found.len() / 2]
}

/// Residuals of the well-periodic predicates, each a max over the sampled window.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct WellPeriodicResiduals {
    /// `|Φ(s) + Φ(s+T)|`.
    pub antiperiodic: f64,
    /// `|Φ(u) + Φ(-u)|` about each zero.
    pub odd: f64,
    /// `|Φ(T/2+u) - Φ(T/2-u)|`.
    pub mirror: f64,
    /// Distance of detected zeros from the fitted lattice.
    pub lattice: f64,
}

/// Detected `k(s) = Φ(s - s0)` structure.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WellPeriodicProfile {
    /// Antiperiod `T`.
    pub antiperiod: f64,
    /// Phase `s0`, reduced to `[-T/2, T/2)`.
    pub phase: f64,
    /// `Φ` sampled with the grid spacing over one antiperiod.
    pub phi: Vec<f64>,
    pub tol: f64,
    pub zero_eps: f64,
    pub zeros: Vec<f64>,
    pub residuals: WellPeriodicResiduals,
}

fn not_wp(predicate: &str, at: f64) -> Error {
    Error::NotWellPeriodic { predicate: predicate.into(), at }
}

/// Detects an odd antiperiodic profile whose zero set is exactly the lattice `s0 + TZ`.
pub fn detect_well_periodic(curve: &PlanarCurve, tol: Option<f64>) -> Result<WellPeriodicProfile> {
    let tol = tol.unwrap_or_else(|| default_profile_tol(curve));
    let eps = default_zero_eps(curve);
    let h = curve.h();
    let l = curve.length();
    let zeros = inflections(curve, eps);
    if zeros.len() < 2 {
        return Err(not_wp("at least two zeros", zeros.first().copied().unwrap_or(0.0)));
    }
    let mut gaps: Vec<f64> = zeros.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(f64::total_cmp);
    let t0 = gaps[gaps.len() / 2];
    let zero_tol = 2.0 * h;
    for w in zeros.windows(2) {
        if (w[1] - w[0] - t0).abs() > 2.0 * zero_tol {
            return Err(not_wp("zero set equals TZ (uneven gaps)", w[0]));
        }
    }
    // least-squares lattice z_i = s0 + i*T
    let m = zeros.len() as f64;
    let (mut si, mut sz, mut sii, mut siz) = (0.0, 0.0, 0.0, 0.0);
    for (i, z) in zeros.iter().enumerate() {
        let i = i as f64;
        si += i;
        sz += z;
        sii += i * i;
        siz += i * z;
    }
    let t = (m * siz - si * sz) / (m * sii - si * si);
    let s_first = (sz - t * si) / m;
    let lattice = zeros.iter().enumerate().map(|(i, z)| (z - (s_first + i as f64 * t)).abs()).fold(0.0, f64::max);
    if lattice > zero_tol {
        return Err(not_wp("zero set equals TZ (lattice fit)", zeros[0]));
    }
    let mut phase = s_first.rem_euclid(t);
    if phase >= 0.5 * t {
        phase -= t;
    }
    let lattice_pts: Vec<f64> = (-1..=((l / t).ceil() as i64 + 1)).map(|i| phase + i as f64 * t).collect();
    let dist_to_lattice = |s: f64| lattice_pts.iter().map(|z| (s - z).abs()).fold(f64::INFINITY, f64::min);

    // no zeros off the lattice (catches touching zeros without sign change)
    for i in 0..curve.n() {
        let s = curve.grid.s(i);
        if curve.k[i].abs() <= 0.1 * eps && dist_to_lattice(s) > 3.0 * zero_tol.max(eps / slope_scale(curve)) {
            return Err(not_wp("zero set equals TZ (extra zero)", s));
        }
    }

    let mut res = WellPeriodicResiduals { lattice, ..Default::default() };
    let n = curve.n();
    let inside = |s: f64| s >= 0.0 && s <= l;
    for i in 0..n {
        let s = curve.grid.s(i);
        let ks = curve.k[i];
        if inside(s + t) {
            let kt = curve.k_at(s + t);
            res.antiperiodic = res.antiperiodic.max((ks + kt).abs());
            if dist_to_lattice(s) > 3.0 * h && ks.abs() > eps && kt.abs() > eps && ks * kt >= 0.0 {
                return Err(not_wp("sign alternation Φ(s)Φ(s+T) < 0", s));
            }
        }
        for z in &lattice_pts {
            let mirror_pt = 2.0 * z - s;
            if inside(mirror_pt) && (s - z).abs() <= t {
                res.odd = res.odd.max((ks + curve.k_at(mirror_pt)).abs());
            }
            let c = z + 0.5 * t;
            let refl = 2.0 * c - s;
            if inside(refl) && (s - c).abs() <= 0.5 * t {
                res.mirror = res.mirror.max((ks - curve.k_at(refl)).abs());
            }
        }
    }
    for (name, v) in [("antiperiodic", res.antiperiodic), ("odd", res.odd), ("Φ(T/2+s) = Φ(T/2-s)", res.mirror)] {
        if v > tol {
            return Err(not_wp(&format!("{name} (residual {v:.3e} > tol {tol:.3e})"), phase));
        }
    }
    let start = if phase < 0.0 { phase + t } else { phase };
    let cells = (t / h).round() as usize;
    let phi = (0..=cells)
        .map(|j| {
            let s = start + j as f64 * t / cells as f64;
            if inside(s) {
                curve.k_at(s)
            } else {
                -curve.k_at(s - t)
            }
        })
        .collect();
    Ok(WellPeriodicProfile { antiperiod: t, phase, phi, tol, zero_eps: eps, zeros, residuals: res })
}

fn slope_scale(curve: &PlanarCurve) -> f64 {
    let dk = curve.k.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    (dk / curve.h()).max(1e-300)
}

/// `m` of an m/2-fold profile: `k(0) = 0` and `T = L/m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldInfo {
    pub m: usize,
    pub antiperiod: f64,
    pub ratio: f64,
}

pub fn fold_index(curve: &PlanarCurve, tol: Option<f64>) -> Result<FoldInfo> {
    let wp = detect_well_periodic(curve, tol)?;
    let ratio = curve.length() / wp.antiperiod;
    let m = ratio.round();
    if wp.phase.abs() > 2.0 * curve.h() {
        return Err(Error::NotFolded { ratio });
    }
    if m < 1.0 || (ratio - m).abs() > 1e-3 {
        return Err(Error::NotFolded { ratio });
    }
    Ok(FoldInfo { m: m as usize, antiperiod: wp.antiperiod, ratio })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SymmetryResiduals {
    /// `max |γ'(s1+σ) - γ'(s3+σ)|`.
    pub tangent: f64,
    /// `max |k(σ+s1) + k(s3-σ)|`.
    pub curvature: f64,
}

/// Residuals of `γ'(s1+σ) = γ'(s3+σ)` and `k(σ+s1) = -k(s3-σ)` at consecutive zeros.
pub fn verify_symmetry_lemma(curve: &PlanarCurve, s1: f64, s2: f64, s3: f64) -> Result<SymmetryResiduals> {
    let l = curve.length();
    let h = curve.h();
    if !(0.0 <= s1 && s1 < s2 && s2 < s3 && s3 <= l + 1e-12) {
        return Err(Error::HypothesisViolated(format!("need 0 <= s1 < s2 < s3 <= L, got {s1}, {s2}, {s3}")));
    }
    let eps = default_zero_eps(curve);
    for s in [s1, s2, s3] {
        if curve.k_at(s.min(l)).abs() > eps {
            return Err(Error::HypothesisViolated(format!("k({s}) = {} is not zero", curve.k_at(s))));
        }
    }
    let sign_on = |a: f64, b: f64| -> Result<f64> {
        let lo = a + 3.0 * h;
        let hi = b - 3.0 * h;
        let mid = curve.k_at(0.5 * (a + b)).signum();
        let steps = ((hi - lo) / h).floor().max(0.0) as usize;
        for j in 0..=steps {
            let s = lo + j as f64 * h;
            let v = curve.k_at(s);
            if v == 0.0 || v.signum() != mid {
                return Err(Error::HypothesisViolated(format!("k vanishes or changes sign inside ({a}, {b}) near {s}")));
            }
        }
        Ok(mid)
    };
    let first = sign_on(s1, s2)?;
    let second = sign_on(s2, s3)?;
    if first == second {
        return Err(Error::HypothesisViolated("k has the same sign on both sides of s2".into()));
    }
    let rec = curve.reconstruct();
    let mut tangent: f64 = 0.0;
    let lo = -s1;
    let hi = l - s3;
    let steps = ((hi - lo) / h).round().max(0.0) as usize;
    for j in 0..=steps {
        let sig = if steps == 0 { lo } else { lo + (hi - lo) * j as f64 / steps as f64 };
        let d = curve.tangent_at(&rec, s1 + sig) - curve.tangent_at(&rec, s3 + sig);
        tangent = tangent.max(d.norm());
    }
    let mut curvature: f64 = 0.0;
    let span = s3 - s1;
    let steps = (span / h).round() as usize;
    for j in 0..=steps {
        let sig = span * j as f64 / steps as f64;
        curvature = curvature.max((curve.k_at(s1 + sig) + curve.k_at(s3 - sig)).abs());
    }
    Ok(SymmetryResiduals { tangent, curvature })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PinnedSymmetryResiduals {
    pub chord: f64,
    /// `max |x(L-s) + x(s) - l|`.
    pub x: f64,
    /// `max |y(L-s) - y(s)|`.
    pub y: f64,
}

/// Residuals of `x(L-s) + x(s) = l` and `y(L-s) = y(s)` for a ½-fold curve
/// with `γ(0) = (0,0)` and `γ(L) = (l,0)`.
pub fn verify_pinned_symmetry(curve: &PlanarCurve) -> Result<PinnedSymmetryResiduals> {
    let rec = curve.reconstruct();
    let n = curve.n();
    let l_len = curve.length();
    let p0 = rec.points[0];
    let p1 = rec.points[n - 1];
    let tol = 1e-8 * l_len;
    if p0.norm() > tol || p1.y.abs() > tol {
        return Err(Error::BadNormalization(format!("endpoints {p0:?}, {p1:?} are not (0,0) and (l,0)")));
    }
    let chord = p1.x;
    if chord.abs() <= 1e-9 * l_len {
        return Err(Error::ZeroChord);
    }
    let fold = fold_index(curve, None)?;
    if fold.m != 1 {
        return Err(Error::HypothesisViolated(format!("curve is {}/2-fold, not ½-fold", fold.m)));
    }
    let (mut x, mut y) = (0.0f64, 0.0f64);
    for i in 0..n {
        let a = rec.points[i];
        let b = rec.points[n - 1 - i];
        x = x.max((a.x + b.x - chord).abs());
        y = y.max((a.y - b.y).abs());
    }
    Ok(PinnedSymmetryResiduals { chord, x, y })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine(m: f64, l: f64, n: usize) -> PlanarCurve {
        PlanarCurve::from_fn(l, n, move |s| (m * PI * s / l).sin()).unwrap()
    }

    #[test]
    fn inflections_of_basic_profiles() {
        let c = PlanarCurve::from_fn(1.0, 1001, |_| 1.0).unwrap();
        assert!(inflections(&c, default_zero_eps(&c)).is_empty());
        let s = sine(2.0, 1.0, 4001);
        let z = inflections(&s, default_zero_eps(&s));
        assert_eq!(z.len(), 3);
        assert!((z[0]).abs() < 1e-12 && (z[1] - 0.5).abs() < 1e-9 && (z[2] - 1.0).abs() < 1e-12, "{z:?}");
    }

    #[test]
    fn detects_sine_antiperiod() {
        let t = 0.25;
        let c = PlanarCurve::from_fn(1.0, 4001, move |s| (PI * s / t).sin()).unwrap();
        let wp = detect_well_periodic(&c, None).unwrap();
        assert!((wp.antiperiod - t).abs() < 1e-9);
        assert!(wp.phase.abs() < 1e-9);
    }

    #[test]
    fn rejects_rectified_sine() {
        let t = 0.25;
        let c = PlanarCurve::from_fn(1.0, 4001, move |s| (PI * s / t).sin().abs()).unwrap();
        assert!(matches!(detect_well_periodic(&c, None), Err(Error::NotWellPeriodic { .. })));
    }

    #[test]
    fn fold_indices_of_sines() {
        for m in 1..=3 {
            let f = fold_index(&sine(m as f64, 1.0, 4001), None).unwrap();
            assert_eq!(f.m, m);
        }
    }

    #[test]
    fn phase_shift_is_not_folded_but_is_well_periodic() {
        let c = PlanarCurve::from_fn(1.0, 4001, |s| (3.0 * PI * (s - 0.1)).sin()).unwrap();
        let wp = detect_well_periodic(&c, None).unwrap();
        assert!((wp.phase - 0.1).abs() < 1e-9, "{}", wp.phase);
        assert!(matches!(fold_index(&c, None), Err(Error::NotFolded { .. })));
    }

    #[test]
    fn symmetry_lemma_on_sine() {
        let c = sine(2.0, 1.0, 4001);
        let r = verify_symmetry_lemma(&c, 0.0, 0.5, 1.0).unwrap();
        let h = c.h();
        assert!(r.tangent < 10.0 * h * h && r.curvature < 10.0 * h * h, "{r:?}");
    }

    #[test]
    fn symmetry_lemma_needs_sign_alternation() {
        let c = PlanarCurve::from_fn(1.0, 4001, |s| (2.0 * PI * s).sin().abs()).unwrap();
        assert!(matches!(verify_symmetry_lemma(&c, 0.0, 0.5, 1.0), Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn pinned_symmetry_of_symmetric_arc() {
        let c = sine(1.0, 1.0, 4001).normalized_chord();
        let r = verify_pinned_symmetry(&c).unwrap();
        assert!(r.x < 1e-10 && r.y < 1e-10, "{r:?}");
    }

    #[test]
    fn pinned_symmetry_rejects_bad_normalization() {
        let c = sine(1.0, 1.0, 401);
        assert!(matches!(verify_pinned_symmetry(&c), Err(Error::BadNormalization(_))));
    }
}
