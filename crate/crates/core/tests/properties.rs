//! Property tests for the invariants of the curve, energy, profile,
//! construction and file layers.

use std::f64::consts::PI;

use elastica::curve::{curvature_of_planar, PlanarCurve, RigidMotion};
use elastica::energy::{convexity_probe, energy, profile_distance, rotation_number, EnergyDensity, ProbeSamples};
use elastica::harness::io::{read_curve, write_curve, CurveFile};
use elastica::harness::{judge, SuiteKind, SuiteRow};
use elastica::perturb::{local_rotation_family, pinned_shift_family, Construction};
use elastica::profiles::{detect_well_periodic, fold_index};
use nalgebra::Vector2;
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 48, ..ProptestConfig::default() }
}

/// Smooth profile `a sin(b s + c) + d`.
fn smooth(len: f64, n: usize, a: f64, b: f64, c: f64, d: f64) -> PlanarCurve {
    PlanarCurve::from_fn(len, n, |s| a * (b * s + c).sin() + d).unwrap()
}

fn profile() -> impl Strategy<Value = PlanarCurve> {
    (0.5..2.0f64, 101..401usize, -3.0..3.0f64, 0.5..8.0f64, 0.0..6.3f64, -2.0..2.0f64, -1.0..1.0f64, -1.0..1.0f64, -PI..PI)
        .prop_map(|(len, n, a, b, c, d, x, y, t)| {
            let base = smooth(len, n, a, b, c, d);
            PlanarCurve::new(base.grid, base.k, Vector2::new(x, y), t).unwrap()
        })
}

fn piece(h: f64) -> impl Strategy<Value = PlanarCurve> {
    (10..80usize, -3.0..3.0f64, 0.5..6.0f64, 0.0..6.3f64).prop_map(move |(cells, a, b, c)| {
        let len = h * cells as f64;
        smooth(len, cells + 1, a, b, c, 0.3)
    })
}

fn max_gap(a: &[Vector2<f64>], b: &[Vector2<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn curvature_round_trips_through_positions(len in 0.5..2.0f64, a in -3.0..3.0f64, b in 0.5..6.0f64, c in 0.0..6.3f64) {
        let n = 801;
        let curve = smooth(len, n, a, b, c, 0.5);
        let k = curvature_of_planar(&curve.points(), curve.h(), 1e-4).unwrap();
        let kmax = a.abs() + 0.5;
        let bound = 10.0 * curve.h().powi(2) * (a.abs() * b * b + kmax.powi(3) + 1.0);
        let err = (1..n - 1).map(|i| (k[i] - curve.k[i]).abs()).fold(0.0, f64::max);
        prop_assert!(err <= bound, "{err} > {bound}");
    }

    #[test]
    fn concat_is_associative_and_length_additive(x in piece(0.01), y in piece(0.01), z in piece(0.01)) {
        let left = PlanarCurve::concat(&[PlanarCurve::concat(&[x.clone(), y.clone()]).unwrap(), z.clone()]).unwrap();
        let right = PlanarCurve::concat(&[x.clone(), PlanarCurve::concat(&[y.clone(), z.clone()]).unwrap()]).unwrap();
        let flat = PlanarCurve::concat(&[x.clone(), y.clone(), z.clone()]).unwrap();
        prop_assert!(max_gap(&left.points(), &right.points()) <= 1e-12);
        prop_assert!(max_gap(&flat.points(), &left.points()) <= 1e-12);
        let total = x.length() + y.length() + z.length();
        prop_assert!((flat.length() - total).abs() <= 1e-12 * total);
        prop_assert_eq!(flat.n(), x.n() + y.n() + z.n() - 2);
    }

    #[test]
    fn prepend_point_commutes_with_concat(x in piece(0.02), y in piece(0.02), px in -2.0..2.0f64, py in -2.0..2.0f64) {
        let p = Vector2::new(px, py);
        let a = PlanarCurve::concat(&[x.prepend_point(p), y.clone()]).unwrap();
        let b = PlanarCurve::concat(&[x.clone(), y.clone()]).unwrap().prepend_point(p);
        prop_assert!(max_gap(&a.points(), &b.points()) <= 1e-12);
    }

    #[test]
    fn energy_is_invariant_under_isometries(c in profile(), angle in -PI..PI, tx in -3.0..3.0f64, ty in -3.0..3.0f64, p in 1.2..4.0f64) {
        let f = EnergyDensity::power(p);
        let e = energy(&c, &f).unwrap();
        let m = RigidMotion::rotation2(angle, Vector2::zeros()).compose(&RigidMotion::translation2(Vector2::new(tx, ty)));
        for other in [c.transformed(&m), c.reverse(), c.mirrored()] {
            let eo = energy(&other, &f).unwrap();
            prop_assert!((eo - e).abs() <= 1e-12 * e.abs().max(1.0), "{eo} vs {e}");
        }
    }

    #[test]
    fn energy_is_additive_on_node_aligned_concatenations(x in piece(0.01), y in piece(0.01), p in 1.2..4.0f64) {
        let f = EnergyDensity::power(p);
        let whole = energy(&PlanarCurve::concat(&[x.clone(), y.clone()]).unwrap(), &f).unwrap();
        let parts = energy(&x, &f).unwrap() + energy(&y, &f).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12 * parts.max(1.0));
    }

    #[test]
    fn power_energy_scales_with_length(c in profile(), lambda in 0.2..5.0f64, p in 1.2..4.0f64) {
        let f = EnergyDensity::power(p);
        let e = energy(&c, &f).unwrap();
        let es = energy(&c.scaled(lambda).unwrap(), &f).unwrap();
        prop_assert!((es - lambda.powf(1.0 - p) * e).abs() <= 1e-8 * es.abs().max(1e-300));
    }

    #[test]
    fn profile_distance_is_a_metric(a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64, w in 0.5..6.0f64, p in 1.2..4.0f64) {
        let (x, y, z) = (smooth(1.0, 201, a, w, 0.0, 0.1), smooth(1.0, 201, b, w, 1.0, -0.2), smooth(1.0, 201, c, 2.0 * w, 2.0, 0.0));
        let d = |u: &PlanarCurve, v: &PlanarCurve| profile_distance(u, v, p).unwrap();
        prop_assert_eq!(d(&x, &x), 0.0);
        prop_assert!((d(&x, &y) - d(&y, &x)).abs() <= 1e-14);
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-12);
    }

    #[test]
    fn rotation_number_ignores_rigid_motions(m in 1u32..4, angle in -PI..PI, tx in -3.0..3.0f64, ty in -3.0..3.0f64) {
        let circle = PlanarCurve::circle(m, 1.0, 801).unwrap();
        let motion = RigidMotion::rotation2(angle, Vector2::new(tx, ty));
        let r0 = rotation_number(&circle, 1e-4).unwrap();
        let r1 = rotation_number(&circle.transformed(&motion), 1e-4).unwrap();
        prop_assert_eq!(r0.rounded, m as i64);
        prop_assert!((r0.raw - r1.raw).abs() <= 1e-8);
    }

    #[test]
    fn convexity_probe_accepts_powers(p in 1.05..8.0f64) {
        prop_assert!(convexity_probe(&EnergyDensity::power(p), &ProbeSamples::default()).is_ok());
    }

    // Endpoint samples within the zero threshold count as zeros, so the phase
    // stays clear of that band.
    #[test]
    fn well_periodic_detection_ignores_phase_and_sign(periods in 2u32..6, phase in 0.1..0.9f64, amp in 0.5..3.0f64) {
        let len = 2.0;
        let w = PI * periods as f64 / len * 2.0;
        let shift = phase * PI / w;
        let a = PlanarCurve::from_fn(len, 2001, |s| amp * (w * s).sin()).unwrap();
        let b = PlanarCurve::from_fn(len, 2001, |s| amp * (w * (s + shift)).sin()).unwrap();
        let c = PlanarCurve::from_fn(len, 2001, |s| -amp * (w * (s + shift)).sin()).unwrap();
        let ta = detect_well_periodic(&a, None).unwrap().antiperiod;
        for other in [&b, &c] {
            let t = detect_well_periodic(other, None).unwrap().antiperiod;
            prop_assert!((t - ta).abs() <= 2.0 * a.h(), "{t} vs {ta}");
        }
    }

    #[test]
    fn fold_index_survives_reversal(m in 1usize..6, amp in 0.5..3.0f64) {
        let len = 1.5;
        let c = PlanarCurve::from_fn(len, 1501, |s| amp * (PI * m as f64 * s / len).sin()).unwrap();
        prop_assert_eq!(fold_index(&c, None).unwrap().m, m);
        prop_assert_eq!(fold_index(&c.reverse(), None).unwrap().m, m);
    }

    #[test]
    fn local_rotation_keeps_sample_energy(j in prop::sample::select(vec![10.0, 20.0, 25.0, 40.0, 50.0]), amp in 0.5..3.0f64, p in 1.5..4.0f64) {
        let curve = PlanarCurve::from_fn(1.2, 2401, |s| amp * (2.0 * PI * s).sin()).unwrap();
        let f = EnergyDensity::power(p);
        let out = local_rotation_family(&curve, 0.0, 1.0, j, &f, 1e-6).unwrap();
        let r = &out.report;
        prop_assert!(r.energy_margin.abs() <= 1e-12 * r.energy_before);
        prop_assert!((r.length_residual).abs() <= 1e-12);
    }

    #[test]
    fn pinned_shift_keeps_pinned_data(j in prop::sample::select(vec![10.0, 16.0, 20.0, 40.0, 80.0]), amp in 0.5..3.0f64) {
        let len = 1.0;
        let curve = PlanarCurve::from_fn(len, 2001, |s| amp * (2.0 * PI * s / len).sin()).unwrap();
        let out = pinned_shift_family(&curve, j, &EnergyDensity::power(2.0), 1e-6).unwrap();
        prop_assert!(out.report.bc_residuals.constrained_max <= 1e-8);
        prop_assert!((out.report.extra("k_j0").unwrap() - amp * (2.0 * PI / j).sin()).abs() <= 1e-9);
    }

    #[test]
    fn curve_files_round_trip_bytewise(c in profile()) {
        let text = write_curve(&CurveFile::Planar(c.clone())).unwrap();
        let back = read_curve(&text).unwrap();
        prop_assert_eq!(&back, &CurveFile::Planar(c));
        prop_assert_eq!(write_curve(&back).unwrap(), text);
    }

    #[test]
    fn suites_never_pass_with_a_failing_condition(
        dist in prop::collection::vec(0.01..10.0f64, 4),
        margin in prop::collection::vec(-1e-3..1e-3f64, 4),
        reg in prop::collection::vec(0.0..1.0f64, 4),
        noise in 0.0..0.05f64,
    ) {
        let rows: Vec<SuiteRow> = (0..4)
            .map(|i| SuiteRow { param: 10.0 * 2f64.powi(i as i32), size: 0.1 / 2f64.powi(i as i32), distance: dist[i], energy_margin: margin[i], error_bar: 1e-6, regularity: reg[i], bc_residual: 0.0 })
            .collect();
        let report = judge("prop", SuiteKind::C, Construction::LocalRot, noise, rows, Vec::new());
        let v = report.verdicts;
        if report.passed {
            prop_assert!(v.converges == Some(true) && v.energy_ok && v.regularity_violated);
            prop_assert!(report.rows.iter().all(|r| r.regularity >= 10.0 * noise && r.energy_margin <= r.error_bar));
        }
    }
}
