//! Curvature energies `F(γ) = ∫ f(|k|) ds`, boundary data, rotation number,
//! the W^{2,p} surrogate distance and the convexity probe for densities.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::curve::{wrap_angle, PlanarCurve, SpaceCurve};
use crate::error::{Error, Result};

/// Structural claims a density makes about itself; the probe checks them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityClaims {
    pub strictly_convex: bool,
    pub f0_zero: bool,
}

#[derive(Clone)]
pub enum DensityKind {
    /// `f(x) = x^p`.
    Power(f64),
    /// Piecewise-linear interpolant of increasing samples, linear extrapolation past the last node.
    Table { xs: Vec<f64>, ys: Vec<f64> },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// The integrand `f` of `F(γ) = ∫ f(|k|) ds`.
#[derive(Clone)]
pub struct EnergyDensity {
    pub kind: DensityKind,
    pub label: String,
    pub claims: DensityClaims,
}

impl fmt::Debug for EnergyDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EnergyDensity").field("label", &self.label).field("claims", &self.claims).finish()
    }
}

impl EnergyDensity {
    pub fn power(p: f64) -> Self {
        Self {
            kind: DensityKind::Power(p),
            label: format!("x^{p}"),
            claims: DensityClaims { strictly_convex: p > 1.0, f0_zero: true },
        }
    }

    pub fn table(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::Schema { path: "density.table".into(), message: "need matching xs/ys with at least 2 nodes".into() });
        }
        if xs[0] != 0.0 || xs.windows(2).any(|w| w[1] <= w[0]) || ys.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Schema {
                path: "density.table".into(),
                message: "xs must start at 0 and increase, ys must be non-decreasing".into(),
            });
        }
        let f0_zero = ys[0] == 0.0;
        Ok(Self { kind: DensityKind::Table { xs, ys }, label: "table".into(), claims: DensityClaims { strictly_convex: false, f0_zero } })
    }

    pub fn custom(label: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static, claims: DensityClaims) -> Self {
        Self { kind: DensityKind::Custom(Arc::new(f)), label: label.into(), claims }
    }

    /// Parses `p:<value>` or `table:<file>`; table files hold two columns `x,f(x)`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = |m: &str| Error::Schema { path: "--density".into(), message: m.into() };
        if let Some(v) = spec.strip_prefix("p:") {
            let p: f64 = v.trim().parse().map_err(|_| bad("exponent is not a number"))?;
            return Ok(Self::power(p));
        }
        if let Some(path) = spec.strip_prefix("table:") {
            let mut rdr = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).from_path(path)?;
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for rec in rdr.records() {
                let rec = rec?;
                let x: f64 = rec.get(0).and_then(|s| s.trim().parse().ok()).ok_or_else(|| bad("bad x column"))?;
                let y: f64 = rec.get(1).and_then(|s| s.trim().parse().ok()).ok_or_else(|| bad("bad f column"))?;
                xs.push(x);
                ys.push(y);
            }
            return Self::table(xs, ys);
        }
        Err(bad("expected p:<value> or table:<file>"))
    }

    pub fn p(&self) -> Option<f64> {
        match self.kind {
            DensityKind::Power(p) => Some(p),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            DensityKind::Power(p) => {
                if *p == 2.0 {
                    x * x
                } else {
                    x.powf(*p)
                }
            }
            DensityKind::Table { xs, ys } => {
                let m = xs.len();
                let i = match xs.binary_search_by(|v| v.total_cmp(&x)) {
                    Ok(i) => return ys[i],
                    Err(i) => i.clamp(1, m - 1),
                };
                let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
                ys[i - 1] + t * (ys[i] - ys[i - 1])
            }
            DensityKind::Custom(f) => f(x),
        }
    }

    /// `f(0)`; energies of `f` and `f - f(0)` differ by `f(0)*L`.
    pub fn f0(&self) -> f64 {
        self.eval(0.0)
    }

    /// `f - f(0)`, used wherever `f(0) = 0` is assumed.
    pub fn normalized(&self) -> Self {
        let c = self.f0();
        if c == 0.0 {
            return self.clone();
        }
        let inner = self.clone();
        Self::custom(&format!("{} - {c}", self.label), move |x| inner.eval(x) - c, DensityClaims { f0_zero: true, ..self.claims })
    }

    pub(crate) fn checked(&self, x: f64) -> Result<f64> {
        let v = self.eval(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::DensityDomain(x))
        }
    }
}

/// Composite trapezoid value of `∫ f(|k|) ds` with one-sided values at joints.
pub fn energy(curve: &PlanarCurve, f: &EnergyDensity) -> Result<f64> {
    let h = curve.h();
    let mut sum = 0.0;
    for i in 0..curve.n() - 1 {
        let (a, b) = curve.cell(i);
        sum += f.checked(a.abs())? + f.checked(b.abs())?;
    }
    Ok(0.5 * h * sum)
}

/// Energy together with a Richardson estimate of its quadrature error.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub value: f64,
    pub error_bar: f64,
}

/// `|E_h - E_2h| / 3`, where `E_2h` uses every other node.
pub fn energy_error_bar(curve: &PlanarCurve, f: &EnergyDensity) -> Result<f64> {
    let cells = curve.n() - 1;
    let even = cells - cells % 2;
    if even < 2 {
        return Ok(0.0);
    }
    let h = curve.h();
    let (mut fine, mut coarse) = (0.0, 0.0);
    for i in 0..even {
        let (a, b) = curve.cell(i);
        fine += 0.5 * h * (f.checked(a.abs())? + f.checked(b.abs())?);
    }
    for i in (0..even).step_by(2) {
        let a = curve.k[i];
        let b = curve.k_left(i + 2);
        coarse += h * (f.checked(a.abs())? + f.checked(b.abs())?);
    }
    Ok((fine - coarse).abs() / 3.0)
}

pub fn energy_with_bar(curve: &PlanarCurve, f: &EnergyDensity) -> Result<EnergyEstimate> {
    Ok(EnergyEstimate { value: energy(curve, f)?, error_bar: energy_error_bar(curve, f)? })
}

/// `B_p = ∫ |k|^p ds`.
pub fn bending_energy(curve: &PlanarCurve, p: f64) -> f64 {
    energy(curve, &EnergyDensity::power(p)).expect("power density is finite")
}

/// `∫ |κ|^2 ds` of a space curve with curvature from finite differences.
pub fn bending_energy_3d(curve: &SpaceCurve, speed_tol: f64) -> Result<f64> {
    let k = curve.curvature_of(speed_tol)?;
    let h = curve.h();
    let mut sum = 0.0;
    for i in 0..curve.n() - 1 {
        sum += k.kappa[i].norm_squared() + k.left_at(i + 1).norm_squared();
    }
    Ok(0.5 * h * sum)
}

/// `|γ1(0)-γ2(0)| + |θ1(0)-θ2(0)| + (∫|k1-k2|^p ds)^{1/p}` on a shared grid.
pub fn profile_distance(a: &PlanarCurve, b: &PlanarCurve, p: f64) -> Result<f64> {
    if !a.grid.matches(&b.grid) {
        return Err(Error::GridMismatch(format!("n {} vs {}, L {} vs {}", a.n(), b.n(), a.length(), b.length())));
    }
    let h = a.h();
    let mut sum = 0.0;
    for i in 0..a.n() - 1 {
        let (a0, a1) = a.cell(i);
        let (b0, b1) = b.cell(i);
        sum += (a0 - b0).abs().powf(p) + (a1 - b1).abs().powf(p);
    }
    let lp = (0.5 * h * sum).powf(1.0 / p);
    Ok((a.base_point - b.base_point).norm() + wrap_angle(a.base_angle - b.base_angle).abs() + lp)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RotationNumber {
    pub raw: f64,
    pub rounded: i64,
}

/// `(1/2π) ∫ k ds` of a closed curve; turns at joints are included.
pub fn rotation_number(curve: &PlanarCurve, tol: f64) -> Result<RotationNumber> {
    let rec = curve.reconstruct();
    let gap = (rec.points[curve.n() - 1] - rec.points[0]).norm();
    let total = rec.theta_left[curve.n() - 1] - rec.theta[0];
    let raw = total / (2.0 * PI);
    let rounded = raw.round();
    let angle_gap = (total - 2.0 * PI * rounded).abs();
    if gap > tol * curve.length().max(1.0) || angle_gap > tol {
        return Err(Error::NotClosed { gap, angle_gap });
    }
    Ok(RotationNumber { raw, rounded: rounded as i64 })
}

/// Sample set for [`convexity_probe`].
#[derive(Clone, Debug)]
pub struct ProbeSamples {
    pub ts: Vec<f64>,
    pub lambdas: Vec<f64>,
}

impl Default for ProbeSamples {
    fn default() -> Self {
        let ts = (0..=40).map(|i| 1e-3 * 10f64.powf(i as f64 / 8.0)).collect();
        let lambdas = vec![1.001, 1.01, 1.05, 1.1, 1.25, 1.5, 2.0, 4.0, 10.0];
        Self { ts, lambdas }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub f0: f64,
    pub min_scaling_margin: f64,
    pub min_midpoint_margin: f64,
    pub checks: usize,
}

/// Checks `λ f(t/λ) < f(t)` for `t > 0`, `λ > 1` and midpoint strict convexity
/// of `f - f(0)` on the samples. Margins are relative to `f(t)`.
pub fn convexity_probe(f: &EnergyDensity, samples: &ProbeSamples) -> Result<ConvexityReport> {
    let g = f.normalized();
    let rel_tol = 1e-12;
    let mut min_scaling = f64::INFINITY;
    let mut min_mid = f64::INFINITY;
    let mut checks = 0;
    for &t in samples.ts.iter().filter(|&&t| t > 0.0) {
        let gt = g.checked(t)?;
        for &lam in samples.lambdas.iter().filter(|&&l| l > 1.0) {
            let margin = gt - lam * g.checked(t / lam)?;
            let rel = margin / gt.abs().max(f64::MIN_POSITIVE);
            checks += 1;
            min_scaling = min_scaling.min(rel);
            if !(rel > rel_tol) {
                return Err(Error::ProbeFailed { t, lambda: lam, margin });
            }
        }
    }
    let ts: Vec<f64> = std::iter::once(0.0).chain(samples.ts.iter().copied()).collect();
    for (i, &x) in ts.iter().enumerate() {
        for &y in &ts[i + 1..] {
            let (gx, gy, gm) = (g.checked(x)?, g.checked(y)?, g.checked(0.5 * (x + y))?);
            let margin = 0.5 * (gx + gy) - gm;
            let rel = margin / (0.5 * (gx.abs() + gy.abs())).max(f64::MIN_POSITIVE);
            checks += 1;
            min_mid = min_mid.min(rel);
            if !(rel > rel_tol) {
                return Err(Error::ProbeFailed { t: 0.5 * (x + y), lambda: y / x.max(f64::MIN_POSITIVE), margin });
            }
        }
    }
    Ok(ConvexityReport { f0: f.f0(), min_scaling_margin: min_scaling, min_midpoint_margin: min_mid, checks })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcKind {
    Clamped,
    Pinned,
    Closed,
}

/// Boundary data of the admissible classes. For closed curves `p1 = p0`
/// and `rotation` fixes the rotation-number sector when set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    pub kind: BcKind,
    pub p0: Vector2<f64>,
    pub p1: Vector2<f64>,
    pub v0: Option<Vector2<f64>>,
    pub v1: Option<Vector2<f64>>,
    pub length: f64,
    pub rotation: Option<i64>,
}

impl BoundaryCondition {
    pub fn clamped(p0: Vector2<f64>, p1: Vector2<f64>, v0: Vector2<f64>, v1: Vector2<f64>, length: f64) -> Result<Self> {
        for v in [v0, v1] {
            if (v.norm() - 1.0).abs() > 1e-10 {
                return Err(Error::HypothesisViolated(format!("clamped tangent {v:?} is not a unit vector")));
            }
        }
        Self { kind: BcKind::Clamped, p0, p1, v0: Some(v0), v1: Some(v1), length, rotation: None }.validated()
    }

    pub fn pinned(p0: Vector2<f64>, p1: Vector2<f64>, length: f64) -> Result<Self> {
        Self { kind: BcKind::Pinned, p0, p1, v0: None, v1: None, length, rotation: None }.validated()
    }

    /// Pinned data with `P0 = (0,0)` and `P1 = (rL, 0)`.
    pub fn pinned_ratio(r: f64, length: f64) -> Result<Self> {
        Self::pinned(Vector2::zeros(), Vector2::new(r * length, 0.0), length)
    }

    pub fn closed(length: f64, rotation: Option<i64>) -> Result<Self> {
        Self { kind: BcKind::Closed, p0: Vector2::zeros(), p1: Vector2::zeros(), v0: None, v1: None, length, rotation }.validated()
    }

    /// Clamped data read off a curve's ends.
    pub fn clamped_from(curve: &PlanarCurve) -> Result<Self> {
        let rec = curve.reconstruct();
        let n = curve.n();
        let t1 = Vector2::new(rec.theta_left[n - 1].cos(), rec.theta_left[n - 1].sin());
        Self::clamped(rec.points[0], rec.points[n - 1], rec.tangents[0], t1, curve.length())
    }

    pub fn pinned_from(curve: &PlanarCurve) -> Result<Self> {
        let rec = curve.reconstruct();
        Self::pinned(rec.points[0], rec.points[curve.n() - 1], curve.length())
    }

    fn validated(self) -> Result<Self> {
        if !(self.length > 0.0) {
            return Err(Error::HypothesisViolated(format!("length must be positive, got {}", self.length)));
        }
        if self.kind != BcKind::Closed && (self.p1 - self.p0).norm() >= self.length {
            return Err(Error::HypothesisViolated(format!(
                "|P0 - P1| = {} must be below the length {}",
                (self.p1 - self.p0).norm(),
                self.length
            )));
        }
        Ok(self)
    }

    /// `r = |P0 - P1| / L`.
    pub fn r(&self) -> f64 {
        (self.p1 - self.p0).norm() / self.length
    }
}

/// Boundary mismatches of a curve against boundary data; unconstrained entries are reported but not judged.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct AdmissibilityResiduals {
    pub length: f64,
    pub start_position: f64,
    pub end_position: f64,
    pub start_tangent: f64,
    pub end_tangent: f64,
    /// Largest of the residuals that the boundary kind constrains.
    pub constrained_max: f64,
}

pub fn length(curve: &PlanarCurve) -> f64 {
    curve.length()
}

pub fn check_admissible(curve: &PlanarCurve, bc: &BoundaryCondition) -> AdmissibilityResiduals {
    let rec = curve.reconstruct();
    let n = curve.n();
    let x0 = rec.points[0];
    let x1 = rec.points[n - 1];
    let t0 = rec.tangents[0];
    let t1 = Vector2::new(rec.theta_left[n - 1].cos(), rec.theta_left[n - 1].sin());
    let length = (curve.length() - bc.length).abs();
    let (start_position, end_position, start_tangent, end_tangent) = match bc.kind {
        BcKind::Closed => ((x1 - x0).norm(), (x1 - x0).norm(), (t1 - t0).norm(), (t1 - t0).norm()),
        _ => (
            (x0 - bc.p0).norm(),
            (x1 - bc.p1).norm(),
            bc.v0.map_or((t1 - t0).norm(), |v| (t0 - v).norm()),
            bc.v1.map_or((t1 - t0).norm(), |v| (t1 - v).norm()),
        ),
    };
    let constrained_max = match bc.kind {
        BcKind::Pinned => length.max(start_position).max(end_position),
        _ => length.max(start_position).max(end_position).max(start_tangent).max(end_tangent),
    };
    AdmissibilityResiduals { length, start_position, end_position, start_tangent, end_tangent, constrained_max }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_circle_energy() {
        let c = PlanarCurve::circle(1, 2.0 * PI, 4001).unwrap();
        assert!((bending_energy(&c, 2.0) - 2.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn multiply_covered_circle_energy() {
        for (m, p, l) in [(2u32, 3.0, 2.0 * PI), (3, 1.5, 0.7), (1, 2.0, 5.0)] {
            let c = PlanarCurve::circle(m, l, 1001).unwrap();
            let expect = (2.0 * PI * m as f64).powf(p) * l.powf(1.0 - p);
            assert!(((bending_energy(&c, p) - expect) / expect).abs() < 1e-12);
        }
    }

    #[test]
    fn reverse_preserves_energy() {
        let c = PlanarCurve::from_fn(1.0, 501, |s| (5.0 * s).sin() + 0.3).unwrap();
        let f = EnergyDensity::power(3.0);
        let a = energy(&c, &f).unwrap();
        let b = energy(&c.reverse(), &f).unwrap();
        assert!(((a - b) / a).abs() < 1e-12);
    }

    #[test]
    fn density_domain_error() {
        let f = EnergyDensity::custom("log", |x: f64| x.ln(), DensityClaims { strictly_convex: false, f0_zero: false });
        let c = PlanarCurve::segment(1.0, 11).unwrap();
        assert!(matches!(energy(&c, &f), Err(Error::DensityDomain(_))));
    }

    #[test]
    fn table_density_interpolates() {
        let f = EnergyDensity::table(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 4.0]).unwrap();
        assert_eq!(f.eval(1.5), 2.5);
        assert_eq!(f.eval(3.0), 7.0);
        assert!(EnergyDensity::table(vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn distance_of_rotated_circles_is_angle() {
        let a = PlanarCurve::circle(1, 2.0 * PI, 101).unwrap();
        let mut b = a.clone();
        b.base_angle = 1e-3;
        assert_eq!(profile_distance(&a, &a, 2.0).unwrap(), 0.0);
        assert!((profile_distance(&a, &b, 2.0).unwrap() - 1e-3).abs() < 1e-15);
        let c = PlanarCurve::circle(1, 2.0 * PI, 51).unwrap();
        assert!(matches!(profile_distance(&a, &c, 2.0), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn rotation_numbers_of_circles() {
        for m in 1..=3 {
            let c = PlanarCurve::circle(m, 1.0, 2001).unwrap();
            let r = rotation_number(&c, 1e-8).unwrap();
            assert!((r.raw - m as f64).abs() < 1e-8);
            assert_eq!(r.rounded, m as i64);
        }
        let arc = PlanarCurve::from_fn(1.0, 101, |_| 1.0).unwrap();
        assert!(matches!(rotation_number(&arc, 1e-8), Err(Error::NotClosed { .. })));
    }

    #[test]
    fn convexity_probe_examples() {
        let s = ProbeSamples::default();
        assert!(convexity_probe(&EnergyDensity::power(2.0), &s).is_ok());
        assert!(convexity_probe(&EnergyDensity::power(3.0), &s).is_ok());
        assert!(matches!(convexity_probe(&EnergyDensity::power(1.0), &s), Err(Error::ProbeFailed { .. })));
        let concave = EnergyDensity::custom("sqrt", |x: f64| x.sqrt(), DensityClaims { strictly_convex: false, f0_zero: true });
        assert!(convexity_probe(&concave, &s).is_err());
    }

    #[test]
    fn scaling_inequality_arithmetic() {
        let f2 = EnergyDensity::power(2.0);
        assert_eq!(2.0 * f2.eval(1.0 / 2.0), 0.5);
        let f3 = EnergyDensity::power(3.0);
        let v = 1.5 * f3.eval(2.0 / 1.5);
        assert!((v - 3.5555555555555554).abs() < 1e-12 && v < 8.0);
    }

    #[test]
    fn admissibility_of_own_data() {
        let c = PlanarCurve::from_fn(1.0, 401, |s| 3.0 * (PI * s).sin()).unwrap();
        let bc = BoundaryCondition::clamped_from(&c).unwrap();
        let r = check_admissible(&c, &bc);
        assert_eq!(r.constrained_max, 0.0);
        assert_eq!(length(&c), 1.0);
    }

    #[test]
    fn boundary_condition_rejects_long_chord() {
        assert!(BoundaryCondition::pinned_ratio(1.0, 1.0).is_err());
        assert!((BoundaryCondition::pinned_ratio(0.3, 2.0).unwrap().r() - 0.3).abs() < 1e-15);
    }
}
