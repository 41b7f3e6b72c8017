//! JSON and CSV files. Floats are written with 17 significant digits so a
//! write-read-write cycle reproduces the bytes.

use std::io::Write;
use std::path::Path;

use nalgebra::{Vector2, Vector3};
use serde::Serialize;
use serde_json::{json, Map, Value};

use super::SuiteReport;
use crate::curve::{Grid, Joint, PlanarCurve, SpaceCurve};
use crate::error::{Error, Result};

struct SignificantDigits;

impl serde_json::ser::Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }
}

/// Serializes any value with the 17-digit float format.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SignificantDigits);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("JSON output is UTF-8"))
}

#[derive(Clone, Debug, PartialEq)]
pub enum CurveFile {
    Planar(PlanarCurve),
    Space(SpaceCurve),
}

pub fn planar_value(c: &PlanarCurve) -> Value {
    let mut v = json!({
        "dim": 2,
        "L": c.length(),
        "n": c.n(),
        "base_point": [c.base_point.x, c.base_point.y],
        "base_angle": c.base_angle,
        "k": c.k,
    });
    if !c.joints.is_empty() {
        v["joints"] = c.joints.iter().map(|j| json!({"index": j.index, "k_left": j.k_left, "turn": j.turn})).collect();
    }
    v
}

pub fn space_value(c: &SpaceCurve) -> Value {
    let mut v = json!({
        "dim": 3,
        "L": c.length(),
        "n": c.n(),
        "points": c.points.iter().map(|p| vec![p.x, p.y, p.z]).collect::<Vec<_>>(),
    });
    if !c.breaks.is_empty() {
        v["breaks"] = json!(c.breaks);
    }
    v
}

pub fn write_curve(c: &CurveFile) -> Result<String> {
    match c {
        CurveFile::Planar(p) => to_json(&planar_value(p)),
        CurveFile::Space(s) => to_json(&space_value(s)),
    }
}

fn schema(path: &str, message: impl Into<String>) -> Error {
    Error::Schema { path: path.to_string(), message: message.into() }
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| schema(&format!("$.{key}"), "missing field"))
}

fn number(v: &Value, path: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| schema(path, "expected a number"))
}

fn count(v: &Value, path: &str) -> Result<usize> {
    v.as_u64().map(|x| x as usize).ok_or_else(|| schema(path, "expected a non-negative integer"))
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| schema(path, "expected an array"))
}

fn numbers(v: &Value, path: &str, len: Option<usize>) -> Result<Vec<f64>> {
    let a = array(v, path)?;
    if let Some(len) = len {
        if a.len() != len {
            return Err(schema(path, format!("expected {len} entries, found {}", a.len())));
        }
    }
    a.iter().enumerate().map(|(i, x)| number(x, &format!("{path}[{i}]"))).collect()
}

/// Parses and validates a curve file.
pub fn read_curve(text: &str) -> Result<CurveFile> {
    let root: Value = serde_json::from_str(text)?;
    let obj = root.as_object().ok_or_else(|| schema("$", "expected an object"))?;
    let dim = count(field(obj, "dim")?, "$.dim")?;
    let length = number(field(obj, "L")?, "$.L")?;
    let n = count(field(obj, "n")?, "$.n")?;
    let grid = Grid::new(length, n).map_err(|e| schema("$.n", e.to_string()))?;
    match dim {
        2 => {
            let bp = numbers(field(obj, "base_point")?, "$.base_point", Some(2))?;
            let angle = number(field(obj, "base_angle")?, "$.base_angle")?;
            let k = numbers(field(obj, "k")?, "$.k", Some(n))?;
            let mut joints = Vec::new();
            if let Some(js) = obj.get("joints") {
                for (i, j) in array(js, "$.joints")?.iter().enumerate() {
                    let path = format!("$.joints[{i}]");
                    let o = j.as_object().ok_or_else(|| schema(&path, "expected an object"))?;
                    let get = |key: &str| o.get(key).ok_or_else(|| schema(&format!("{path}.{key}"), "missing field"));
                    joints.push(Joint {
                        index: count(get("index")?, &format!("{path}.index"))?,
                        k_left: number(get("k_left")?, &format!("{path}.k_left"))?,
                        turn: number(get("turn")?, &format!("{path}.turn"))?,
                    });
                }
            }
            let curve = PlanarCurve::new(grid, k, Vector2::new(bp[0], bp[1]), angle)?
                .with_joints(joints)
                .map_err(|e| schema("$.joints", e.to_string()))?;
            Ok(CurveFile::Planar(curve))
        }
        3 => {
            let pts = array(field(obj, "points")?, "$.points")?;
            if pts.len() != n {
                return Err(schema("$.points", format!("expected {n} points, found {}", pts.len())));
            }
            let points = pts
                .iter()
                .enumerate()
                .map(|(i, p)| numbers(p, &format!("$.points[{i}]"), Some(3)).map(|v| Vector3::new(v[0], v[1], v[2])))
                .collect::<Result<Vec<_>>>()?;
            let mut curve = SpaceCurve::new(grid, points)?;
            if let Some(b) = obj.get("breaks") {
                let breaks = array(b, "$.breaks")?
                    .iter()
                    .enumerate()
                    .map(|(i, x)| count(x, &format!("$.breaks[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                curve = curve.with_breaks(&breaks);
            }
            Ok(CurveFile::Space(curve))
        }
        other => Err(schema("$.dim", format!("expected 2 or 3, found {other}"))),
    }
}

pub fn load_curve(path: &Path) -> Result<CurveFile> {
    read_curve(&std::fs::read_to_string(path)?)
}

/// One row per node: `x,y` or `x,y,z`.
pub fn curve_csv(c: &CurveFile) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    match c {
        CurveFile::Planar(p) => {
            w.write_record(["x", "y"])?;
            for q in p.points() {
                w.write_record([fmt(q.x), fmt(q.y)])?;
            }
        }
        CurveFile::Space(s) => {
            w.write_record(["x", "y", "z"])?;
            for q in &s.points {
                w.write_record([fmt(q.x), fmt(q.y), fmt(q.z)])?;
            }
        }
    }
    finish(w)
}

/// One row per family member: `j, distance, energy_margin, error_bar, regularity`.
pub fn suite_csv(report: &SuiteReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["j", "distance", "energy_margin", "error_bar", "regularity"])?;
    for r in &report.rows {
        w.write_record([fmt(r.param), fmt(r.distance), fmt(r.energy_margin), fmt(r.error_bar), fmt(r.regularity)])?;
    }
    finish(w)
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::make_helix;

    #[test]
    fn planar_roundtrip_is_bytewise() {
        let c = PlanarCurve::from_fn(1.3, 101, |s| (3.0 * s).sin() / 7.0).unwrap().prepend_point(Vector2::new(0.1, -1.0 / 3.0));
        let c = PlanarCurve::concat(&[c.clone(), c]).unwrap();
        let a = write_curve(&CurveFile::Planar(c.clone())).unwrap();
        let back = read_curve(&a).unwrap();
        assert_eq!(back, CurveFile::Planar(c));
        assert_eq!(write_curve(&back).unwrap(), a);
    }

    #[test]
    fn space_roundtrip_is_bytewise() {
        let h = make_helix(1.0, 0.3, 1.5, 50).unwrap().with_breaks(&[10]);
        let a = write_curve(&CurveFile::Space(h)).unwrap();
        assert_eq!(write_curve(&read_curve(&a).unwrap()).unwrap(), a);
    }

    #[test]
    fn schema_errors_carry_a_path() {
        let bad = r#"{"dim":2,"L":1.0,"n":3,"base_point":[0,0],"base_angle":0,"k":[0,"x",0]}"#;
        match read_curve(bad) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "$.k[1]"),
            other => panic!("{other:?}"),
        }
        match read_curve(r#"{"dim":2,"L":1.0,"n":3}"#) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "$.base_point"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn circle_csv_has_two_columns_and_n_rows() {
        let c = CurveFile::Planar(PlanarCurve::circle(1, 1.0, 64).unwrap());
        let text = curve_csv(&c).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 65);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 2));
    }
}
