//! Cut-and-paste competitors. Each construction returns the competitor curve
//! and a report with the energy comparison, the regularity defect at the cuts,
//! the boundary residuals and the distance to the original.

mod planar;
mod spatial;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::curve::{Grid, PlanarCurve};
use crate::energy::{check_admissible, energy, energy_error_bar, profile_distance, AdmissibilityResiduals, BoundaryCondition, EnergyDensity};
use crate::error::{Error, Result};

pub use planar::{
    curvature_noise_floor, find_self_intersection, flatcore_endpoint_shift, flatcore_loop_swap, global_rotation_competitor, local_rotation_family,
    pinned_loop_rescale_family, pinned_shift_family,
};
pub use spatial::{space_distance, space_noise_floor, spatial_reflection_competitor, spatial_rotation_family};

/// Default tolerance on tangent and orthogonality hypotheses.
pub const HYPOTHESIS_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    GlobalRot,
    LocalRot,
    PinnedShift,
    LoopRescale,
    FlatcoreShift,
    FlatcoreSwap,
    SpatialReflect,
    SpatialRotate,
}

impl Construction {
    pub fn name(self) -> &'static str {
        match self {
            Construction::GlobalRot => "global-rot",
            Construction::LocalRot => "local-rot",
            Construction::PinnedShift => "pinned-shift",
            Construction::LoopRescale => "loop-rescale",
            Construction::FlatcoreShift => "flatcore-shift",
            Construction::FlatcoreSwap => "flatcore-swap",
            Construction::SpatialReflect => "spatial-reflect",
            Construction::SpatialRotate => "spatial-rotate",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureJump {
    pub location: f64,
    pub jump: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub construction: Construction,
    pub energy_before: f64,
    pub energy_after: f64,
    /// `energy_after - energy_before`.
    pub energy_margin: f64,
    /// Quadrature (and resampling) uncertainty of the margin.
    pub error_bar: f64,
    /// Largest one-sided tangent mismatch at the cuts.
    pub c1_residual: f64,
    pub curvature_jumps: Vec<CurvatureJump>,
    pub bc_residuals: AdmissibilityResiduals,
    pub distance: f64,
    pub length_residual: f64,
    pub extras: BTreeMap<String, f64>,
    /// Non-degeneracy hypotheses that failed; the competitor is still returned.
    pub flags: Vec<String>,
}

impl PerturbationReport {
    pub fn max_jump(&self) -> f64 {
        self.curvature_jumps.iter().map(|j| j.jump).fold(0.0, f64::max)
    }

    pub fn extra(&self, key: &str) -> Option<f64> {
        self.extras.get(key).copied()
    }
}

/// Competitor together with its report.
#[derive(Clone, Debug)]
pub struct Competitor<C> {
    pub curve: C,
    pub report: PerturbationReport,
}

/// Number of cells closest to the shift `1/j`; at least one.
pub fn shift_cells(grid: &Grid, j: f64) -> Result<usize> {
    if !(j > 0.0 && j.is_finite()) {
        return Err(Error::RangeExceeded(format!("family index j must be positive, got {j}")));
    }
    let m = (1.0 / (j * grid.h())).round();
    if m < 1.0 {
        return Err(Error::RangeExceeded(format!("1/j = {} is below the grid spacing {}", 1.0 / j, grid.h())));
    }
    Ok(m as usize)
}

/// `j` values whose shifts are `L/10, L/20, L/40, L/80`.
pub fn default_js(length: f64) -> Vec<f64> {
    [10.0, 20.0, 40.0, 80.0].iter().map(|j| j / length).collect()
}

/// Exponent used for the profile distance: the density's power, else 2.
fn distance_exponent(f: &EnergyDensity) -> f64 {
    f.p().unwrap_or(2.0)
}

/// Shared bookkeeping for planar competitors whose cuts are stored as joints.
struct PlanarParts<'a> {
    construction: Construction,
    original: &'a PlanarCurve,
    competitor: &'a PlanarCurve,
    bc: &'a BoundaryCondition,
    extras: BTreeMap<String, f64>,
    flags: Vec<String>,
    /// Extra uncertainty beyond the two Richardson bars.
    extra_bar: f64,
    /// Overrides the joint jumps when the cuts are not stored as joints.
    jumps: Option<Vec<CurvatureJump>>,
}

impl PlanarParts<'_> {
    fn report(self, f: &EnergyDensity) -> Result<PerturbationReport> {
        let before = energy(self.original, f)?;
        let after = energy(self.competitor, f)?;
        let rounding = 8.0 * f64::EPSILON * (self.original.n() as f64).sqrt() * before.abs().max(after.abs());
        let error_bar = energy_error_bar(self.original, f)? + energy_error_bar(self.competitor, f)? + self.extra_bar + rounding;
        let jumps = self.jumps.unwrap_or_else(|| {
            self.competitor
                .joints
                .iter()
                .map(|jt| CurvatureJump { location: self.competitor.grid.s(jt.index), jump: (self.competitor.k[jt.index] - jt.k_left).abs() })
                .collect()
        });
        Ok(PerturbationReport {
            construction: self.construction,
            energy_before: before,
            energy_after: after,
            energy_margin: after - before,
            error_bar,
            c1_residual: self.competitor.max_turn(),
            curvature_jumps: jumps,
            bc_residuals: check_admissible(self.competitor, self.bc),
            distance: profile_distance(self.original, self.competitor, distance_exponent(f))?,
            length_residual: (self.competitor.length() - self.original.length()).abs(),
            extras: self.extras,
            flags: self.flags,
        })
    }
}
