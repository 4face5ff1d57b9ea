//! Reference-model serialization: JSON documents and wireframe OBJ export.

use serde_json::{json, Map, Value};

use super::{ReferenceModel, ReferencePolygon, SliceError};
use crate::geom::{Aabb3, PlaneFrame, Polygon2D, Vec3};
use crate::mesh::io::fmt_sig9;
use crate::num::Real;
use crate::protocol::Region;

/// Serialize a reference model as a JSON array of named polygons, each with
/// explicit 3D points and a closed edge cycle. Output is deterministic:
/// keys sorted, two-space indentation, trailing newline.
pub fn serialize_reference_model<T: Real>(model: &ReferenceModel<T>) -> String {
    let entries: Vec<Value> = model
        .polygons
        .iter()
        .map(|p| {
            let points: Vec<Value> = p
                .outline
                .points()
                .iter()
                .map(|&q| {
                    let w = p.frame.lift(q);
                    json!([w.x.to_f64_lossy(), w.y.to_f64_lossy(), w.z.to_f64_lossy()])
                })
                .collect();
            let n = points.len();
            let edges: Vec<Value> = (0..n).map(|i| json!([i, (i + 1) % n])).collect();
            let (region, slice_index) = match p.region {
                Region::Apex => ("apex", Value::Null),
                Region::Base => ("base", Value::Null),
                Region::Central(i) => ("central", json!(i)),
            };
            let mut obj = Map::new();
            obj.insert("edges".into(), Value::Array(edges));
            obj.insert("name".into(), Value::String(p.name.clone()));
            obj.insert("points".into(), Value::Array(points));
            obj.insert("region".into(), Value::String(region.into()));
            obj.insert("slice_index".into(), slice_index);
            obj.insert("thickness_mm".into(), json!(p.thickness_mm.to_f64_lossy()));
            Value::Object(obj)
        })
        .collect();
    let mut text =
        serde_json::to_string_pretty(&Value::Array(entries)).expect("reference model serializes");
    text.push('\n');
    text
}

fn fmt_err(message: impl Into<String>) -> SliceError {
    SliceError::Format(message.into())
}

fn as_f64(v: &Value, what: &str) -> Result<f64, SliceError> {
    v.as_f64()
        .ok_or_else(|| fmt_err(format!("{what} must be a number")))
}

/// Parse a reference-model JSON document back into a model.
///
/// The case id is not part of the document and must be supplied (it normally
/// comes from the sectioning protocol). Planes are reconstructed from the
/// region tag: central polygons lie in transverse planes, apex/base polygons
/// in sagittal planes; every point must lie on its polygon's plane.
pub fn parse_reference_model<T: Real>(
    text: &str,
    case_id: &str,
) -> Result<ReferenceModel<T>, SliceError> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| fmt_err(format!("invalid JSON: {e}")))?;
    let entries = root
        .as_array()
        .ok_or_else(|| fmt_err("top level must be an array"))?;
    let mut polygons: Vec<ReferencePolygon<T>> = Vec::with_capacity(entries.len());
    let mut all_points: Vec<Vec3<T>> = Vec::new();
    for (i, entry) in entries.iter().enumerate() {
        let at = |field: &str| format!("[{i}].{field}");
        let obj = entry
            .as_object()
            .ok_or_else(|| fmt_err(format!("[{i}] must be an object")))?;
        for key in obj.keys() {
            if !matches!(
                key.as_str(),
                "edges" | "name" | "points" | "region" | "slice_index" | "thickness_mm"
            ) {
                return Err(fmt_err(format!("[{i}] unknown key {key:?}")));
            }
        }
        let name = obj
            .get("name")
            .and_then(Value::as_str)
            .ok_or_else(|| fmt_err(format!("{} must be a string", at("name"))))?
            .to_string();
        let thickness = as_f64(
            obj.get("thickness_mm")
                .ok_or_else(|| fmt_err(format!("{} missing", at("thickness_mm"))))?,
            &at("thickness_mm"),
        )?;
        if !(thickness > 0.0) {
            return Err(fmt_err(format!("{} must be positive", at("thickness_mm"))));
        }
        let region_str = obj
            .get("region")
            .and_then(Value::as_str)
            .ok_or_else(|| fmt_err(format!("{} must be a string", at("region"))))?;
        let slice_index = obj.get("slice_index").cloned().unwrap_or(Value::Null);
        let region = match (region_str, &slice_index) {
            ("apex", Value::Null) => Region::Apex,
            ("base", Value::Null) => Region::Base,
            ("central", Value::Number(n)) => {
                let idx = n.as_u64().filter(|&v| v >= 1).ok_or_else(|| {
                    fmt_err(format!("{} must be a positive integer", at("slice_index")))
                })?;
                Region::Central(idx as u32)
            }
            ("central", _) => {
                return Err(fmt_err(format!(
                    "{} required for central polygons",
                    at("slice_index")
                )))
            }
            (other, Value::Null) => {
                return Err(fmt_err(format!(
                    "{} unknown region {other:?}",
                    at("region")
                )))
            }
            _ => {
                return Err(fmt_err(format!(
                    "{} must be null for apex/base",
                    at("slice_index")
                )))
            }
        };
        let raw_points = obj
            .get("points")
            .and_then(Value::as_array)
            .ok_or_else(|| fmt_err(format!("{} must be an array", at("points"))))?;
        if raw_points.len() < 3 {
            return Err(fmt_err(format!("{} needs at least 3 points", at("points"))));
        }
        let mut world: Vec<Vec3<f64>> = Vec::with_capacity(raw_points.len());
        for (k, rp) in raw_points.iter().enumerate() {
            let triple = rp
                .as_array()
                .filter(|a| a.len() == 3)
                .ok_or_else(|| fmt_err(format!("{}[{k}] must be [x, y, z]", at("points"))))?;
            let x = as_f64(&triple[0], &at("points"))?;
            let y = as_f64(&triple[1], &at("points"))?;
            let z = as_f64(&triple[2], &at("points"))?;
            world.push(Vec3::new(x, y, z));
        }
        let raw_edges = obj
            .get("edges")
            .and_then(Value::as_array)
            .ok_or_else(|| fmt_err(format!("{} must be an array", at("edges"))))?;
        if raw_edges.len() != world.len() {
            return Err(fmt_err(format!(
                "{} must close the outline ({} edges for {} points)",
                at("edges"),
                raw_edges.len(),
                world.len()
            )));
        }
        for (k, re) in raw_edges.iter().enumerate() {
            let pair = re
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| fmt_err(format!("{}[{k}] must be [i, j]", at("edges"))))?;
            let a = pair[0].as_u64().map(|v| v as usize);
            let b = pair[1].as_u64().map(|v| v as usize);
            if a != Some(k) || b != Some((k + 1) % world.len()) {
                return Err(fmt_err(format!(
                    "{}[{k}] must be [{k}, {}] (single closed cycle)",
                    at("edges"),
                    (k + 1) % world.len()
                )));
            }
        }
        // Reconstruct the canonical plane for the region.
        let frame: PlaneFrame<T> = match region {
            Region::Central(_) => PlaneFrame::transverse(T::of(world[0].z)),
            Region::Apex | Region::Base => PlaneFrame::sagittal(T::of(world[0].x)),
        };
        let mut planar: Vec<crate::geom::Vec2<T>> = Vec::with_capacity(world.len());
        for (k, &w) in world.iter().enumerate() {
            let w_t = Vec3::new(T::of(w.x), T::of(w.y), T::of(w.z));
            let off = frame.signed_distance(w_t).to_f64_lossy().abs();
            if off > 1e-9 {
                return Err(fmt_err(format!(
                    "{}[{k}] lies {off} mm off the polygon plane",
                    at("points")
                )));
            }
            planar.push(frame.project(w_t));
            all_points.push(w_t);
        }
        let outline =
            Polygon2D::new(planar).map_err(|e| fmt_err(format!("{}: {e}", at("points"))))?;
        polygons.push(ReferencePolygon {
            name,
            frame,
            outline,
            thickness_mm: T::of(thickness),
            region,
        });
    }
    let source_extent = Aabb3::from_points(all_points.iter().copied())
        .ok_or_else(|| fmt_err("model has no points"))?;
    Ok(ReferenceModel {
        case_id: case_id.to_string(),
        polygons,
        source_extent,
    })
}

/// Wireframe OBJ documents for the reference polygons, one per polygon:
/// `v` records for the outline points followed by a closed `l` polyline
/// (1-based indices). Returns `(filename, contents)` pairs named
/// `<case_id>_<name>.obj`.
pub fn export_reference_obj<T: Real>(model: &ReferenceModel<T>) -> Vec<(String, String)> {
    model
        .polygons
        .iter()
        .map(|p| {
            let mut out = String::new();
            for &q in p.outline.points() {
                let w = p.frame.lift(q);
                out.push_str(&format!(
                    "v {} {} {}\n",
                    fmt_sig9(w.x.to_f64_lossy()),
                    fmt_sig9(w.y.to_f64_lossy()),
                    fmt_sig9(w.z.to_f64_lossy())
                ));
            }
            let n = p.outline.len();
            let mut line = String::from("l");
            for i in 1..=n {
                line.push_str(&format!(" {i}"));
            }
            line.push_str(" 1\n");
            out.push_str(&line);
            (format!("{}_{}.obj", model.case_id, p.name), out)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generic_prostate_model;
    use crate::slicing::build_reference_model;
    use approx::assert_relative_eq;

    fn small_model() -> ReferenceModel<f64> {
        let mesh = generic_prostate_model(40.0, 30.0, 35.0, (24, 48)).unwrap();
        let protocol = crate::protocol::tests::reference_case_protocol();
        build_reference_model(&mesh, &protocol, None, None).unwrap()
    }

    #[test]
    fn json_round_trip_preserves_geometry() {
        let model = small_model();
        let text = serialize_reference_model(&model);
        let back: ReferenceModel<f64> = parse_reference_model(&text, &model.case_id).unwrap();
        assert_eq!(back.case_id, model.case_id);
        assert_eq!(back.polygons.len(), model.polygons.len());
        for (a, b) in model.polygons.iter().zip(back.polygons.iter()) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.region, b.region);
            assert_relative_eq!(a.thickness_mm, b.thickness_mm, epsilon = 1e-12);
            assert_eq!(a.outline.len(), b.outline.len());
            for (p, q) in a.outline.points().iter().zip(b.outline.points()) {
                assert_relative_eq!(p.x, q.x, epsilon = 1e-12);
                assert_relative_eq!(p.y, q.y, epsilon = 1e-12);
            }
        }
        // Serialization is deterministic and stable across a round trip.
        assert_eq!(serialize_reference_model(&back), text);
    }

    #[test]
    fn obj_export_uses_polyline_records() {
        let model = small_model();
        let files = export_reference_obj(&model);
        assert_eq!(files.len(), model.polygons.len());
        let (name, body) = &files[0];
        assert_eq!(
            name,
            &format!("{}_{}.obj", model.case_id, model.polygons[0].name)
        );
        assert!(body
            .lines()
            .all(|l| l.starts_with("v ") || l.starts_with("l ")));
        assert!(!body.contains("\nf "), "wireframes must not contain faces");
        let l_line = body.lines().find(|l| l.starts_with("l ")).unwrap();
        let indices: Vec<usize> = l_line[2..]
            .split_whitespace()
            .map(|t| t.parse().unwrap())
            .collect();
        assert_eq!(indices.len(), model.polygons[0].outline.len() + 1);
        assert_eq!(indices.first(), indices.last());
        assert_eq!(*indices.iter().min().unwrap(), 1);
    }

    #[test]
    fn malformed_documents_are_rejected() {
        assert!(matches!(
            parse_reference_model::<f64>("{", "c"),
            Err(SliceError::Format(_))
        ));
        assert!(matches!(
            parse_reference_model::<f64>("{}", "c"),
            Err(SliceError::Format(_))
        ));
        // Unknown key.
        let text = r#"[{"edges": [[0,1],[1,2],[2,0]], "name": "2L", "points": [[0,0,1],[1,0,1],[0,1,1]], "region": "central", "slice_index": 1, "thickness_mm": 2.0, "extra": 1}]"#;
        assert!(matches!(
            parse_reference_model::<f64>(text, "c"),
            Err(SliceError::Format(_))
        ));
        // Point off the plane.
        let text = r#"[{"edges": [[0,1],[1,2],[2,0]], "name": "2L", "points": [[0,0,1],[1,0,1.5],[0,1,1]], "region": "central", "slice_index": 1, "thickness_mm": 2.0}]"#;
        assert!(matches!(
            parse_reference_model::<f64>(text, "c"),
            Err(SliceError::Format(_))
        ));
        // Broken edge cycle.
        let text = r#"[{"edges": [[0,1],[1,2],[2,1]], "name": "2L", "points": [[0,0,1],[1,0,1],[0,1,1]], "region": "central", "slice_index": 1, "thickness_mm": 2.0}]"#;
        assert!(matches!(
            parse_reference_model::<f64>(text, "c"),
            Err(SliceError::Format(_))
        ));
    }

    #[test]
    fn minimal_valid_document_parses() {
        let text = r#"[{"edges": [[0,1],[1,2],[2,0]], "name": "2L", "points": [[0.0,0.0,1.0],[10.0,0.0,1.0],[0.0,10.0,1.0]], "region": "central", "slice_index": 1, "thickness_mm": 2.0}]"#;
        let model: ReferenceModel<f64> = parse_reference_model(text, "case-9").unwrap();
        assert_eq!(model.case_id, "case-9");
        assert_eq!(model.polygons.len(), 1);
        let p = &model.polygons[0];
        assert_eq!(p.region, Region::Central(1));
        assert_relative_eq!(p.outline.area().unwrap(), 50.0, epsilon = 1e-12);
        assert_relative_eq!(p.frame.origin().z, 1.0, epsilon = 1e-12);
    }
}
