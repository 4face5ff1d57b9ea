//! Registered-slide serialization: JSON documents (re-parseable, so later
//! pipeline stages can run from files alone) and OBJ wireframe export.

use serde_json::{json, Map, Value};

use super::{PlanarPolygon3D, RegistrationError, RegistrationResult, Similarity2D};
use crate::geom::{PlaneFrame, Polygon2D, Vec2, Vec3};
use crate::mesh::io::fmt_sig9;
use crate::num::Real;

/// How registered polygons are grouped into OBJ documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjGrouping {
    /// One document per slide holding the contour and every roi.
    Slide,
    /// One document per polygon (contour and each roi separately).
    Annotation,
}

fn points_json<T: Real>(poly: &PlanarPolygon3D<T>) -> (Value, Value) {
    let pts: Vec<Vec3<T>> = poly.points_3d();
    let n = pts.len();
    let points = Value::Array(
        pts.iter()
            .map(|p| json!([p.x.to_f64_lossy(), p.y.to_f64_lossy(), p.z.to_f64_lossy()]))
            .collect(),
    );
    let edges = Value::Array((0..n).map(|i| json!([i, (i + 1) % n])).collect());
    (points, edges)
}

fn frame_json<T: Real>(frame: &PlaneFrame<T>) -> Value {
    let v3 = |v: Vec3<T>| json!([v.x.to_f64_lossy(), v.y.to_f64_lossy(), v.z.to_f64_lossy()]);
    let mut obj = Map::new();
    obj.insert("origin".into(), v3(frame.origin()));
    obj.insert("u".into(), v3(frame.u()));
    obj.insert("v".into(), v3(frame.v()));
    Value::Object(obj)
}

fn entry_base<T: Real>(r: &RegistrationResult<T>, poly: &PlanarPolygon3D<T>) -> Map<String, Value> {
    let (points, edges) = points_json(poly);
    let mut obj = Map::new();
    obj.insert("case_id".into(), Value::String(r.case_id.clone()));
    obj.insert("edges".into(), edges);
    obj.insert("frame".into(), frame_json(&poly.frame));
    obj.insert("name".into(), Value::String(r.slide_name.clone()));
    obj.insert("points".into(), points);
    obj.insert("polygon_name".into(), Value::String(r.polygon_name.clone()));
    obj.insert("thickness_mm".into(), json!(r.thickness_mm.to_f64_lossy()));
    obj
}

/// Serialize registration results as a JSON array with one entry per
/// polygon: for each slide the contour entry (carrying the transform and
/// quality metrics) followed by its roi entries in order. Deterministic
/// output: sorted keys, two-space indentation, trailing newline.
pub fn serialize_registered<T: Real>(results: &[RegistrationResult<T>]) -> String {
    let mut entries: Vec<Value> = Vec::new();
    for r in results {
        let mut contour = entry_base(r, &r.registered_contour);
        contour.insert("kind".into(), Value::String("contour".into()));
        contour.insert("class_label".into(), Value::Null);
        contour.insert("roi_index".into(), Value::Null);
        contour.insert("iou".into(), json!(r.iou.to_f64_lossy()));
        contour.insert(
            "restart_angle_deg".into(),
            json!(r.restart_angle_deg.to_f64_lossy()),
        );
        contour.insert("iterations".into(), json!(r.iterations_used));
        let mut t = Map::new();
        t.insert(
            "rotation_rad".into(),
            json!(r.transform.rotation.to_f64_lossy()),
        );
        t.insert("scale".into(), json!(r.transform.scale.to_f64_lossy()));
        t.insert(
            "translation".into(),
            json!([
                r.transform.translation.x.to_f64_lossy(),
                r.transform.translation.y.to_f64_lossy()
            ]),
        );
        contour.insert("transform".into(), Value::Object(t));
        entries.push(Value::Object(contour));
        for (k, (class, poly)) in r.registered_rois.iter().enumerate() {
            let mut roi = entry_base(r, poly);
            roi.insert("kind".into(), Value::String("roi".into()));
            roi.insert("class_label".into(), Value::String(class.clone()));
            roi.insert("roi_index".into(), json!(k));
            entries.push(Value::Object(roi));
        }
    }
    let mut text = serde_json::to_string_pretty(&Value::Array(entries))
        .expect("registration results serialize");
    text.push('\n');
    text
}

fn fmt_err(message: impl Into<String>) -> RegistrationError {
    RegistrationError::Format(message.into())
}

fn parse_vec3(v: &Value, what: &str) -> Result<[f64; 3], RegistrationError> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 3)
        .ok_or_else(|| fmt_err(format!("{what} must be [x, y, z]")))?;
    let mut out = [0.0; 3];
    for (i, c) in arr.iter().enumerate() {
        out[i] = c
            .as_f64()
            .ok_or_else(|| fmt_err(format!("{what}[{i}] must be a number")))?;
    }
    Ok(out)
}

fn parse_planar_polygon<T: Real>(
    obj: &Map<String, Value>,
    at: &str,
) -> Result<PlanarPolygon3D<T>, RegistrationError> {
    let frame_obj = obj
        .get("frame")
        .and_then(Value::as_object)
        .ok_or_else(|| fmt_err(format!("{at}.frame must be an object")))?;
    let origin = parse_vec3(
        frame_obj.get("origin").unwrap_or(&Value::Null),
        &format!("{at}.frame.origin"),
    )?;
    let u = parse_vec3(
        frame_obj.get("u").unwrap_or(&Value::Null),
        &format!("{at}.frame.u"),
    )?;
    let v = parse_vec3(
        frame_obj.get("v").unwrap_or(&Value::Null),
        &format!("{at}.frame.v"),
    )?;
    let to_t = |a: [f64; 3]| Vec3::new(T::of(a[0]), T::of(a[1]), T::of(a[2]));
    let frame = PlaneFrame::new(to_t(origin), to_t(u), to_t(v))
        .map_err(|e| fmt_err(format!("{at}.frame: {e}")))?;
    let raw_points = obj
        .get("points")
        .and_then(Value::as_array)
        .ok_or_else(|| fmt_err(format!("{at}.points must be an array")))?;
    if raw_points.len() < 3 {
        return Err(fmt_err(format!("{at}.points needs at least 3 points")));
    }
    let raw_edges = obj
        .get("edges")
        .and_then(Value::as_array)
        .ok_or_else(|| fmt_err(format!("{at}.edges must be an array")))?;
    if raw_edges.len() != raw_points.len() {
        return Err(fmt_err(format!("{at}.edges must close the outline")));
    }
    for (k, re) in raw_edges.iter().enumerate() {
        let ok = re
            .as_array()
            .filter(|a| a.len() == 2)
            .map(|a| {
                a[0].as_u64() == Some(k as u64)
                    && a[1].as_u64() == Some(((k + 1) % raw_points.len()) as u64)
            })
            .unwrap_or(false);
        if !ok {
            return Err(fmt_err(format!(
                "{at}.edges[{k}] must continue the single closed cycle"
            )));
        }
    }
    let mut planar: Vec<Vec2<T>> = Vec::with_capacity(raw_points.len());
    for (k, rp) in raw_points.iter().enumerate() {
        let w = parse_vec3(rp, &format!("{at}.points[{k}]"))?;
        let wt = to_t(w);
        if frame.signed_distance(wt).to_f64_lossy().abs() > 1e-9 {
            return Err(fmt_err(format!(
                "{at}.points[{k}] does not lie on the polygon plane"
            )));
        }
        planar.push(frame.project(wt));
    }
    let outline = Polygon2D::new(planar).map_err(|e| fmt_err(format!("{at}.points: {e}")))?;
    Ok(PlanarPolygon3D { frame, outline })
}

/// Parse a registered-slides JSON document back into results.
pub fn parse_registered<T: Real>(
    text: &str,
) -> Result<Vec<RegistrationResult<T>>, RegistrationError> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| fmt_err(format!("invalid JSON: {e}")))?;
    let entries = root
        .as_array()
        .ok_or_else(|| fmt_err("top level must be an array"))?;
    let mut results: Vec<RegistrationResult<T>> = Vec::new();
    for (i, entry) in entries.iter().enumerate() {
        let at = format!("[{i}]");
        let obj = entry
            .as_object()
            .ok_or_else(|| fmt_err(format!("{at} must be an object")))?;
        let field_str = |field: &str| -> Result<String, RegistrationError> {
            obj.get(field)
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| fmt_err(format!("{at}.{field} must be a string")))
        };
        let kind = field_str("kind")?;
        let name = field_str("name")?;
        let poly = parse_planar_polygon::<T>(obj, &at)?;
        let thickness = obj
            .get("thickness_mm")
            .and_then(Value::as_f64)
            .filter(|t| *t > 0.0)
            .ok_or_else(|| fmt_err(format!("{at}.thickness_mm must be positive")))?;
        match kind.as_str() {
            "contour" => {
                let t_obj = obj
                    .get("transform")
                    .and_then(Value::as_object)
                    .ok_or_else(|| fmt_err(format!("{at}.transform must be an object")))?;
                let num = |field: &str| -> Result<f64, RegistrationError> {
                    t_obj
                        .get(field)
                        .and_then(Value::as_f64)
                        .ok_or_else(|| fmt_err(format!("{at}.transform.{field} must be a number")))
                };
                let tr = t_obj
                    .get("translation")
                    .and_then(Value::as_array)
                    .filter(|a| a.len() == 2)
                    .ok_or_else(|| fmt_err(format!("{at}.transform.translation must be [x, y]")))?;
                let tx = tr[0]
                    .as_f64()
                    .ok_or_else(|| fmt_err(format!("{at}.transform.translation[0]")))?;
                let ty = tr[1]
                    .as_f64()
                    .ok_or_else(|| fmt_err(format!("{at}.transform.translation[1]")))?;
                let scale = num("scale")?;
                if !(scale > 0.0) {
                    return Err(fmt_err(format!("{at}.transform.scale must be positive")));
                }
                let transform = Similarity2D::new(
                    T::of(num("rotation_rad")?),
                    T::of(scale),
                    Vec2::new(T::of(tx), T::of(ty)),
                );
                let iou = obj
                    .get("iou")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| fmt_err(format!("{at}.iou must be a number")))?;
                let restart = obj
                    .get("restart_angle_deg")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| fmt_err(format!("{at}.restart_angle_deg must be a number")))?;
                let iterations = obj
                    .get("iterations")
                    .and_then(Value::as_u64)
                    .ok_or_else(|| fmt_err(format!("{at}.iterations must be an integer")))?;
                results.push(RegistrationResult {
                    slide_name: name,
                    polygon_name: field_str("polygon_name")?,
                    case_id: field_str("case_id")?,
                    transform,
                    iou: T::of(iou),
                    restart_angle_deg: T::of(restart),
                    iterations_used: iterations as usize,
                    registered_contour: poly,
                    registered_rois: Vec::new(),
                    thickness_mm: T::of(thickness),
                });
            }
            "roi" => {
                let class = field_str("class_label")?;
                let parent = results
                    .last_mut()
                    .ok_or_else(|| fmt_err(format!("{at}: roi entry before any contour entry")))?;
                if parent.slide_name != name {
                    return Err(fmt_err(format!(
                        "{at}: roi for {name:?} does not follow its contour"
                    )));
                }
                parent.registered_rois.push((class, poly));
            }
            other => return Err(fmt_err(format!("{at}.kind unknown: {other:?}"))),
        }
    }
    Ok(results)
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
        .collect()
}

fn polyline_obj<T: Real>(polys: &[&PlanarPolygon3D<T>]) -> String {
    let mut out = String::new();
    let mut base = 1usize;
    let mut lines: Vec<String> = Vec::new();
    for poly in polys {
        let pts = poly.points_3d();
        for p in &pts {
            out.push_str(&format!(
                "v {} {} {}\n",
                fmt_sig9(p.x.to_f64_lossy()),
                fmt_sig9(p.y.to_f64_lossy()),
                fmt_sig9(p.z.to_f64_lossy())
            ));
        }
        let mut l = String::from("l");
        for i in 0..pts.len() {
            l.push_str(&format!(" {}", base + i));
        }
        l.push_str(&format!(" {base}\n"));
        lines.push(l);
        base += pts.len();
    }
    for l in lines {
        out.push_str(&l);
    }
    out
}

/// OBJ wireframe documents for registered polygons as `(filename, contents)`
/// pairs. [`ObjGrouping::Slide`] writes `<case_id>_<name>.obj` holding the
/// contour and every roi; [`ObjGrouping::Annotation`] writes the contour as
/// `<case_id>_<name>.obj` and each roi as
/// `<case_id>_<name>_<class>_<k>.obj` (class label sanitized, `k` the
/// 1-based roi ordinal).
pub fn export_registered_obj<T: Real>(
    results: &[RegistrationResult<T>],
    grouping: ObjGrouping,
) -> Vec<(String, String)> {
    let mut files = Vec::new();
    for r in results {
        match grouping {
            ObjGrouping::Slide => {
                let mut polys: Vec<&PlanarPolygon3D<T>> = vec![&r.registered_contour];
                polys.extend(r.registered_rois.iter().map(|(_, p)| p));
                files.push((
                    format!("{}_{}.obj", r.case_id, r.slide_name),
                    polyline_obj(&polys),
                ));
            }
            ObjGrouping::Annotation => {
                files.push((
                    format!("{}_{}.obj", r.case_id, r.slide_name),
                    polyline_obj(&[&r.registered_contour]),
                ));
                for (k, (class, poly)) in r.registered_rois.iter().enumerate() {
                    files.push((
                        format!(
                            "{}_{}_{}_{}.obj",
                            r.case_id,
                            r.slide_name,
                            sanitize(class),
                            k + 1
                        ),
                        polyline_obj(&[poly]),
                    ));
                }
            }
        }
    }
    files
}
