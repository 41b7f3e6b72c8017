use nalgebra::Vector3;

use super::{Grid, RigidMotion};
use crate::error::{Error, Result};

/// Default unit-speed tolerance on `| |x_{i+1}-x_i|/h - 1 |`.
pub const DEFAULT_SPEED_TOL: f64 = 1e-6;

/// Space curve stored as unit-speed position samples.
///
/// `breaks` lists interior nodes where the curve was cut and pasted; finite
/// differences never straddle a break, so one-sided curvature limits are
/// available there.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceCurve {
    pub grid: Grid,
    pub points: Vec<Vector3<f64>>,
    pub breaks: Vec<usize>,
}

/// Curvature vectors `γ''` at each node; `left` holds the limit from the
/// left at each break (the main vector is the limit from the right).
#[derive(Clone, Debug)]
pub struct SpaceCurvature {
    pub kappa: Vec<Vector3<f64>>,
    pub left: Vec<(usize, Vector3<f64>)>,
}

impl SpaceCurvature {
    pub fn left_at(&self, i: usize) -> Vector3<f64> {
        self.left.iter().find(|(j, _)| *j == i).map_or(self.kappa[i], |(_, v)| *v)
    }
}

impl SpaceCurve {
    pub fn new(grid: Grid, points: Vec<Vector3<f64>>) -> Result<Self> {
        if points.len() != grid.n() {
            return Err(Error::GridMismatch(format!("{} points on a grid of {}", points.len(), grid.n())));
        }
        Ok(Self { grid, points, breaks: Vec::new() })
    }

    /// Planar curve embedded in the plane `z = 0`.
    pub fn from_planar(points: &[nalgebra::Vector2<f64>], grid: Grid) -> Result<Self> {
        Self::new(grid, points.iter().map(|p| Vector3::new(p.x, p.y, 0.0)).collect())
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn h(&self) -> f64 {
        self.grid.h()
    }

    pub fn length(&self) -> f64 {
        self.grid.length()
    }

    pub fn with_breaks(mut self, extra: &[usize]) -> Self {
        for &b in extra {
            if b > 0 && b + 1 < self.n() && !self.breaks.contains(&b) {
                self.breaks.push(b);
            }
        }
        self.breaks.sort_unstable();
        self
    }

    /// `max_i | |x_{i+1}-x_i|/h - 1 |`.
    pub fn speed_residual(&self) -> f64 {
        let h = self.h();
        self.points.windows(2).map(|w| ((w[1] - w[0]).norm() / h - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Node index ranges of the smooth pieces between breaks.
    fn pieces(&self) -> Vec<(usize, usize)> {
        let mut cuts = vec![0];
        cuts.extend(self.breaks.iter().copied());
        cuts.push(self.n() - 1);
        cuts.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// Curvature vectors by second differences: central in the interior of
    /// each piece, one-sided second order at piece ends.
    pub fn curvature_of(&self, speed_tol: f64) -> Result<SpaceCurvature> {
        let residual = self.speed_residual();
        if residual > speed_tol {
            return Err(Error::SpeedViolation { residual, tol: speed_tol });
        }
        let h2 = self.h() * self.h();
        let x = &self.points;
        let mut kappa = vec![Vector3::zeros(); self.n()];
        let mut left = Vec::new();
        let forward = |i: usize, len: usize| -> Vector3<f64> {
            if len >= 3 {
                (2.0 * x[i] - 5.0 * x[i + 1] + 4.0 * x[i + 2] - x[i + 3]) / h2
            } else if len >= 2 {
                (x[i] - 2.0 * x[i + 1] + x[i + 2]) / h2
            } else {
                Vector3::zeros()
            }
        };
        let backward = |i: usize, len: usize| -> Vector3<f64> {
            if len >= 3 {
                (2.0 * x[i] - 5.0 * x[i - 1] + 4.0 * x[i - 2] - x[i - 3]) / h2
            } else if len >= 2 {
                (x[i] - 2.0 * x[i - 1] + x[i - 2]) / h2
            } else {
                Vector3::zeros()
            }
        };
        for (a, b) in self.pieces() {
            let len = b - a;
            kappa[a] = forward(a, len);
            for i in a + 1..b {
                kappa[i] = (x[i + 1] - 2.0 * x[i] + x[i - 1]) / h2;
            }
            let end = backward(b, len);
            if b + 1 == self.n() {
                kappa[b] = end;
            } else {
                left.push((b, end));
            }
        }
        Ok(SpaceCurvature { kappa, left })
    }

    /// Translates every part after the first to start where the previous one ended.
    pub fn concat(parts: &[SpaceCurve]) -> Result<Self> {
        let first = parts.first().ok_or(Error::EmptyList)?;
        let mut points = first.points.clone();
        let mut breaks = first.breaks.clone();
        let mut length = first.length();
        for part in &parts[1..] {
            if !first.grid.same_spacing(&part.grid) {
                return Err(Error::GridMismatch(format!(
                    "concatenation needs equal spacing ({} vs {})",
                    first.h(),
                    part.h()
                )));
            }
            let offset = points.len() - 1;
            let shift = points[offset] - part.points[0];
            points.extend(part.points[1..].iter().map(|p| p + shift));
            breaks.push(offset);
            breaks.extend(part.breaks.iter().map(|b| b + offset));
            length += part.length();
        }
        let grid = Grid::new(length, points.len())?;
        Ok(Self { grid, points, breaks })
    }

    pub fn restrict_nodes(&self, i: usize, j: usize) -> Result<Self> {
        if i >= j || j >= self.n() {
            return Err(Error::BadRange { a: self.grid.s(i), b: self.grid.s(j.min(self.n() - 1)), length: self.length() });
        }
        let length = if i == 0 && j + 1 == self.n() { self.length() } else { self.grid.s(j) - self.grid.s(i) };
        Ok(Self {
            grid: Grid::new(length, j - i + 1)?,
            points: self.points[i..=j].to_vec(),
            breaks: self.breaks.iter().filter(|&&b| b > i && b < j).map(|b| b - i).collect(),
        })
    }

    pub fn restrict(&self, a: f64, b: f64) -> Result<Self> {
        let l = self.length();
        if !(a >= -1e-9 * l && b <= l * (1.0 + 1e-9) && a < b) {
            return Err(Error::BadRange { a, b, length: l });
        }
        self.restrict_nodes(self.grid.node_of(a), self.grid.node_of(b))
    }

    pub fn reverse(&self) -> Self {
        let n = self.n();
        let mut breaks: Vec<usize> = self.breaks.iter().map(|b| n - 1 - b).collect();
        breaks.sort_unstable();
        Self { grid: self.grid, points: self.points.iter().rev().copied().collect(), breaks }
    }

    pub fn transformed(&self, m: &RigidMotion) -> Self {
        Self { grid: self.grid, points: self.points.iter().map(|p| m.apply_point3(p)).collect(), breaks: self.breaks.clone() }
    }

    /// `γ|[0,a] ⊕ M(γ|[a,b]) ⊕ γ|[b,L]` on node indices.
    pub fn replace_middle(&self, ia: usize, ib: usize, m: &RigidMotion) -> Result<Self> {
        let mut parts = Vec::with_capacity(3);
        if ia > 0 {
            parts.push(self.restrict_nodes(0, ia)?);
        }
        parts.push(self.restrict_nodes(ia, ib)?.transformed(m));
        if ib + 1 < self.n() {
            parts.push(self.restrict_nodes(ib, self.n() - 1)?);
        }
        let mut out = Self::concat(&parts)?;
        // the first part's start is fixed; if it was dropped, keep the transformed start
        if ia == 0 {
            let shift = m.apply_point3(&self.points[0]) - out.points[0];
            out.points.iter_mut().for_each(|p| *p += shift);
        }
        Ok(out)
    }

    /// Reflects the subarc `[a,b]` about the plane through `point` with unit normal `normal`.
    pub fn reflect_about_plane(&self, a: f64, b: f64, point: Vector3<f64>, normal: Vector3<f64>) -> Result<Self> {
        let m = RigidMotion::reflection3(point, normal)?;
        let (ia, ib) = self.snap_range(a, b)?;
        self.replace_middle(ia, ib, &m)
    }

    /// Rotates the subarc `[a,b]` by `angle` about the line through `point` along `direction`.
    pub fn rotate_about_axis(&self, a: f64, b: f64, point: Vector3<f64>, direction: Vector3<f64>, angle: f64) -> Result<Self> {
        let m = RigidMotion::rotation3(point, direction, angle)?;
        let (ia, ib) = self.snap_range(a, b)?;
        self.replace_middle(ia, ib, &m)
    }

    fn snap_range(&self, a: f64, b: f64) -> Result<(usize, usize)> {
        let l = self.length();
        if !(a >= -1e-9 * l && b <= l * (1.0 + 1e-9) && a < b) {
            return Err(Error::BadRange { a, b, length: l });
        }
        let (ia, ib) = (self.grid.node_of(a), self.grid.node_of(b));
        if ia >= ib {
            return Err(Error::BadRange { a, b, length: l });
        }
        Ok((ia, ib))
    }

    /// Resamples at equal chord length along a cubic (Catmull-Rom) interpolant
    /// of the cumulative-chord parameterization; a few sweeps equalize chords.
    pub fn reparameterize_unit_speed(&self, sweeps: usize) -> Result<Self> {
        let n = self.n();
        let mut pts = self.points.clone();
        for _ in 0..sweeps.max(1) {
            let mut cum = vec![0.0; n];
            for i in 1..n {
                cum[i] = cum[i - 1] + (pts[i] - pts[i - 1]).norm();
            }
            let total = cum[n - 1];
            let h = total / (n - 1) as f64;
            let mut out = Vec::with_capacity(n);
            let mut seg = 0;
            for i in 0..n {
                let s = if i + 1 == n { total } else { i as f64 * h };
                while seg + 2 < n && cum[seg + 1] < s {
                    seg += 1;
                }
                let t = ((s - cum[seg]) / (cum[seg + 1] - cum[seg])).clamp(0.0, 1.0);
                let p0 = if seg == 0 { 2.0 * pts[0] - pts[1] } else { pts[seg - 1] };
                let p3 = if seg + 2 >= n { 2.0 * pts[n - 1] - pts[n - 2] } else { pts[seg + 2] };
                let (p1, p2) = (pts[seg], pts[seg + 1]);
                let t2 = t * t;
                let t3 = t2 * t;
                out.push(
                    0.5 * (2.0 * p1
                        + (p2 - p0) * t
                        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2
                        + (3.0 * p1 - p0 - 3.0 * p2 + p3) * t3),
                );
            }
            pts = out;
        }
        let total: f64 = pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        Ok(Self { grid: Grid::new(total, n)?, points: pts, breaks: Vec::new() })
    }
}
