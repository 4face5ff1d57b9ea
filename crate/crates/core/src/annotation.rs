//! Slide annotation ingest: GeoJSON feature collections exported from a
//! slide viewer, carrying one tissue outline ("Contour") and any number of
//! classified regions of interest.

use serde_json::Value;

use crate::geom::Polygon2D;
use crate::num::Real;
use crate::slicing::{ReferenceModel, ReferencePolygon};

/// Classification label that marks the tissue outline feature.
pub const CONTOUR_CLASS: &str = "Contour";

/// Errors raised while ingesting annotations.
#[derive(Debug, thiserror::Error)]
pub enum AnnotationError {
    /// No feature classified as the tissue outline.
    #[error("annotation has no feature classified {CONTOUR_CLASS:?}")]
    MissingContour,
    /// More than one outline candidate (or a MultiPolygon outline).
    #[error("annotation outline is ambiguous: {0}")]
    MultipleContour(String),
    /// A ring fails polygon validity (too few points, self-intersection,
    /// out-of-bounds roi, non-finite coordinates).
    #[error("invalid geometry in {feature}: {message}")]
    Geometry { feature: String, message: String },
    /// Structurally invalid document.
    #[error("annotation schema error: {0}")]
    Schema(String),
    /// A mapped polygon name does not exist in the reference model.
    #[error("no reference polygon named {name:?}")]
    UnknownPolygon { name: String },
    /// Two annotation files map to the same reference polygon.
    #[error("reference polygon {name:?} is assigned twice")]
    DuplicateAssignment { name: String },
    /// A mapping manifest entry references a file that was not provided.
    #[error("mapping manifest references unknown file {file:?}")]
    UnmappedFile { file: String },
}

/// One slide's annotations in 2D slide coordinates (mm).
#[derive(Debug, Clone, PartialEq)]
pub struct SlideAnnotations<T> {
    pub slide_name: String,
    /// Tissue outline.
    pub contour: Polygon2D<T>,
    /// Classified regions of interest, in document order.
    pub rois: Vec<(String, Polygon2D<T>)>,
}

fn schema(msg: impl Into<String>) -> AnnotationError {
    AnnotationError::Schema(msg.into())
}

/// Classification of a feature, looked up in priority order:
/// `properties.classification.name`, then `properties.classification` as a
/// bare string, then `properties.class`. `None` when unclassified.
fn classification(feature: &Value) -> Option<String> {
    let props = feature.get("properties")?;
    if let Some(c) = props.get("classification") {
        if let Some(name) = c.get("name").and_then(Value::as_str) {
            return Some(name.to_string());
        }
        if let Some(name) = c.as_str() {
            return Some(name.to_string());
        }
    }
    props
        .get("class")
        .and_then(Value::as_str)
        .map(str::to_string)
}

/// Whether the geometry was a `MultiPolygon`, plus one point ring per member.
type GeometryRings<T> = (bool, Vec<Vec<crate::geom::Vec2<T>>>);

/// Outer rings of a geometry as point lists, applying the mm scale.
/// `Polygon` yields one ring (holes ignored); `MultiPolygon` yields one per
/// member polygon.
fn outer_rings<T: Real>(
    geometry: &Value,
    scale: f64,
    feature: &str,
) -> Result<GeometryRings<T>, AnnotationError> {
    let gtype = geometry
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| schema(format!("{feature}: geometry.type missing")))?;
    let coords = geometry
        .get("coordinates")
        .and_then(Value::as_array)
        .ok_or_else(|| schema(format!("{feature}: geometry.coordinates missing")))?;
    let ring_points =
        |ring: &Value, what: &str| -> Result<Vec<crate::geom::Vec2<T>>, AnnotationError> {
            let arr = ring
                .as_array()
                .ok_or_else(|| schema(format!("{what}: ring must be an array")))?;
            let mut pts: Vec<crate::geom::Vec2<T>> = Vec::with_capacity(arr.len());
            for (i, c) in arr.iter().enumerate() {
                let pair = c
                    .as_array()
                    .filter(|p| p.len() >= 2)
                    .ok_or_else(|| schema(format!("{what}: coordinate [{i}] must be [x, y]")))?;
                let x = pair[0].as_f64().ok_or_else(|| {
                    schema(format!("{what}: coordinate [{i}].x must be a number"))
                })?;
                let y = pair[1].as_f64().ok_or_else(|| {
                    schema(format!("{what}: coordinate [{i}].y must be a number"))
                })?;
                pts.push(crate::geom::Vec2::new(T::of(x * scale), T::of(y * scale)));
            }
            // GeoJSON rings repeat the first point at the end; drop it.
            if pts.len() >= 2 {
                let first = pts[0];
                let last = *pts.last().unwrap();
                if (first - last).norm() <= T::of(1e-12) {
                    pts.pop();
                }
            }
            Ok(pts)
        };
    match gtype {
        "Polygon" => {
            let outer = coords
                .first()
                .ok_or_else(|| schema(format!("{feature}: polygon has no rings")))?;
            Ok((false, vec![ring_points(outer, feature)?]))
        }
        "MultiPolygon" => {
            let mut rings = Vec::with_capacity(coords.len());
            for (i, member) in coords.iter().enumerate() {
                let outer = member
                    .as_array()
                    .and_then(|m| m.first().cloned())
                    .ok_or_else(|| {
                        schema(format!("{feature}: member polygon [{i}] has no rings"))
                    })?;
                rings.push(ring_points(&outer, &format!("{feature} member [{i}]"))?);
            }
            Ok((true, rings))
        }
        other => Err(schema(format!(
            "{feature}: unsupported geometry type {other:?}"
        ))),
    }
}

fn build_polygon<T: Real>(
    points: Vec<crate::geom::Vec2<T>>,
    feature: &str,
) -> Result<Polygon2D<T>, AnnotationError> {
    let poly = Polygon2D::new(points).map_err(|e| AnnotationError::Geometry {
        feature: feature.to_string(),
        message: e.to_string(),
    })?;
    if !poly.is_simple() {
        return Err(AnnotationError::Geometry {
            feature: feature.to_string(),
            message: "ring is self-intersecting".into(),
        });
    }
    Ok(poly)
}

/// Parse a GeoJSON feature collection into slide annotations.
///
/// Coordinates are multiplied by `scale_mm_per_unit` (e.g. microns-per-pixel
/// divided by 1000 for pixel inputs). Exactly one feature must be classified
/// [`CONTOUR_CLASS`]; every other *classified* feature becomes a roi carrying
/// its classification label. Unclassified features are ignored. A
/// MultiPolygon outline is rejected; a MultiPolygon roi contributes one roi
/// per member polygon. Holes are ignored throughout. Every roi's bounding
/// box must intersect the outline's bounding box.
pub fn parse_geojson_annotations<T: Real>(
    text: &str,
    slide_name: &str,
    scale_mm_per_unit: f64,
) -> Result<SlideAnnotations<T>, AnnotationError> {
    if !(scale_mm_per_unit > 0.0) || !scale_mm_per_unit.is_finite() {
        return Err(schema("scale factor must be positive and finite"));
    }
    let root: Value =
        serde_json::from_str(text).map_err(|e| schema(format!("invalid JSON: {e}")))?;
    let features = match root.get("type").and_then(Value::as_str) {
        Some("FeatureCollection") => root
            .get("features")
            .and_then(Value::as_array)
            .ok_or_else(|| schema("features must be an array"))?
            .clone(),
        Some("Feature") => vec![root.clone()],
        _ => return Err(schema("top level must be a FeatureCollection")),
    };

    let mut contour: Option<Polygon2D<T>> = None;
    let mut rois: Vec<(String, Polygon2D<T>)> = Vec::new();
    for (idx, feature) in features.iter().enumerate() {
        let Some(class) = classification(feature) else {
            continue;
        };
        let tag = format!("feature [{idx}] ({class})");
        let geometry = feature
            .get("geometry")
            .ok_or_else(|| schema(format!("{tag}: geometry missing")))?;
        let (multi, rings) = outer_rings::<T>(geometry, scale_mm_per_unit, &tag)?;
        if class == CONTOUR_CLASS {
            if multi {
                return Err(AnnotationError::MultipleContour(format!(
                    "{tag} is a MultiPolygon"
                )));
            }
            if contour.is_some() {
                return Err(AnnotationError::MultipleContour(format!(
                    "{tag} is a second outline"
                )));
            }
            contour = Some(build_polygon(
                rings.into_iter().next().expect("polygon has one ring"),
                &tag,
            )?);
        } else {
            for ring in rings {
                rois.push((class.clone(), build_polygon(ring, &tag)?));
            }
        }
    }
    let contour = contour.ok_or(AnnotationError::MissingContour)?;

    let cb = contour.bounding_box();
    for (class, roi) in &rois {
        if !roi.bounding_box().overlaps(&cb) {
            return Err(AnnotationError::Geometry {
                feature: format!("roi ({class})"),
                message: "roi bounding box does not meet the outline".into(),
            });
        }
    }

    Ok(SlideAnnotations {
        slide_name: slide_name.to_string(),
        contour,
        rois,
    })
}

/// Outcome of pairing annotation files with reference polygons.
#[derive(Debug)]
pub struct ResolvedMapping<'m, T> {
    /// `(annotations, reference polygon)` pairs in protocol order.
    pub pairs: Vec<(SlideAnnotations<T>, &'m ReferencePolygon<T>)>,
    /// Human-readable notes for inputs skipped in lenient mode.
    pub warnings: Vec<String>,
}

/// Pair parsed annotation files with reference polygons.
///
/// By convention a slide's file stem names its polygon; `manifest` entries
/// `(file, polygon)` override the convention (matching the full file name or
/// its stem). Names that resolve to no reference polygon are errors in
/// strict mode and warnings otherwise; manifest entries matching none of the
/// provided files are treated the same way. Assigning two files to one
/// polygon is always an error. Pairs are returned in protocol order.
pub fn resolve_mapping<'m, T: Real>(
    annotations: Vec<(String, SlideAnnotations<T>)>,
    manifest: &[(String, String)],
    model: &'m ReferenceModel<T>,
    strict: bool,
) -> Result<ResolvedMapping<'m, T>, AnnotationError> {
    let stem = |file: &str| -> String {
        let base = file.rsplit('/').next().unwrap_or(file);
        base.strip_suffix(".geojson")
            .or_else(|| base.strip_suffix(".json"))
            .unwrap_or(base)
            .to_string()
    };
    let mut warnings: Vec<String> = Vec::new();
    for (file, _) in manifest {
        let hit = annotations
            .iter()
            .any(|(name, _)| name == file || stem(name) == stem(file));
        if !hit {
            if strict {
                return Err(AnnotationError::UnmappedFile { file: file.clone() });
            }
            warnings.push(format!("mapping entry {file:?} matches no annotation file"));
        }
    }

    let mut assigned: Vec<(usize, SlideAnnotations<T>)> = Vec::new();
    for (file, ann) in annotations {
        let target = manifest
            .iter()
            .find(|(f, _)| *f == file || stem(f) == stem(&file))
            .map(|(_, polygon)| polygon.clone())
            .unwrap_or_else(|| stem(&file));
        let Some(position) = model.polygons.iter().position(|p| p.name == target) else {
            if strict {
                return Err(AnnotationError::UnknownPolygon { name: target });
            }
            warnings.push(format!(
                "annotation {file:?} maps to unknown polygon {target:?}; skipped"
            ));
            continue;
        };
        if assigned.iter().any(|(p, _)| *p == position) {
            return Err(AnnotationError::DuplicateAssignment { name: target });
        }
        assigned.push((position, ann));
    }
    assigned.sort_by_key(|(p, _)| *p);
    Ok(ResolvedMapping {
        pairs: assigned
            .into_iter()
            .map(|(p, ann)| (ann, &model.polygons[p]))
            .collect(),
        warnings,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use serde_json::json;

    /// GeoJSON document with one contour and the given classified rings.
    pub(crate) fn geojson(contour: &[(f64, f64)], rois: &[(&str, Vec<(f64, f64)>)]) -> String {
        let ring = |pts: &[(f64, f64)]| -> Value {
            let mut arr: Vec<Value> = pts.iter().map(|&(x, y)| json!([x, y])).collect();
            arr.push(json!([pts[0].0, pts[0].1]));
            json!([arr])
        };
        let mut features = vec![json!({
            "type": "Feature",
            "geometry": {"type": "Polygon", "coordinates": ring(contour)},
            "properties": {"classification": {"name": CONTOUR_CLASS}}
        })];
        for (class, pts) in rois {
            features.push(json!({
                "type": "Feature",
                "geometry": {"type": "Polygon", "coordinates": ring(pts)},
                "properties": {"classification": {"name": class}}
            }));
        }
        json!({"type": "FeatureCollection", "features": features}).to_string()
    }

    const SQUARE: [(f64, f64); 4] = [(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)];

    #[test]
    fn parses_contour_and_rois_in_order() {
        let text = geojson(
            &SQUARE,
            &[
                (
                    "Gleason 4",
                    vec![(1.0, 1.0), (3.0, 1.0), (3.0, 3.0), (1.0, 3.0)],
                ),
                (
                    "Gleason 3",
                    vec![(5.0, 5.0), (7.0, 5.0), (7.0, 7.0), (5.0, 7.0)],
                ),
            ],
        );
        let a: SlideAnnotations<f64> = parse_geojson_annotations(&text, "2L", 1.0).unwrap();
        assert_eq!(a.slide_name, "2L");
        assert_relative_eq!(a.contour.area().unwrap(), 100.0, epsilon = 1e-9);
        assert_eq!(a.rois.len(), 2);
        assert_eq!(a.rois[0].0, "Gleason 4");
        assert_eq!(a.rois[1].0, "Gleason 3");
        assert_relative_eq!(a.rois[0].1.area().unwrap(), 4.0, epsilon = 1e-9);
    }

    #[test]
    fn scale_factor_converts_pixels_to_mm() {
        let text = geojson(&SQUARE, &[]);
        // 0.25 micron/pixel scanner: scale = 0.25 / 1000 mm per pixel.
        let a: SlideAnnotations<f64> = parse_geojson_annotations(&text, "s", 0.25e-3).unwrap();
        assert_relative_eq!(
            a.contour.area().unwrap(),
            100.0 * 0.25e-3 * 0.25e-3,
            max_relative = 1e-12
        );
    }

    #[test]
    fn classification_lookup_priority() {
        // Bare-string classification and properties.class fallback.
        let text = json!({
            "type": "FeatureCollection",
            "features": [
                {"type": "Feature",
                 "geometry": {"type": "Polygon", "coordinates": [[[0,0],[10,0],[10,10],[0,10],[0,0]]]},
                 "properties": {"classification": CONTOUR_CLASS}},
                {"type": "Feature",
                 "geometry": {"type": "Polygon", "coordinates": [[[1,1],[2,1],[2,2],[1,2],[1,1]]]},
                 "properties": {"class": "Tumor"}},
                {"type": "Feature",
                 "geometry": {"type": "Polygon", "coordinates": [[[4,4],[5,4],[5,5],[4,5],[4,4]]]},
                 "properties": {}}
            ]
        })
        .to_string();
        let a: SlideAnnotations<f64> = parse_geojson_annotations(&text, "s", 1.0).unwrap();
        assert_eq!(a.rois.len(), 1, "unclassified features are ignored");
        assert_eq!(a.rois[0].0, "Tumor");
    }

    #[test]
    fn missing_and_multiple_contours() {
        let no_contour = json!({
            "type": "FeatureCollection",
            "features": [{
                "type": "Feature",
                "geometry": {"type": "Polygon", "coordinates": [[[0,0],[1,0],[1,1],[0,0]]]},
                "properties": {"classification": {"name": "Tumor"}}
            }]
        })
        .to_string();
        assert!(matches!(
            parse_geojson_annotations::<f64>(&no_contour, "s", 1.0),
            Err(AnnotationError::MissingContour)
        ));

        let two = {
            let mut v: Value = serde_json::from_str(&geojson(&SQUARE, &[])).unwrap();
            let dup = v["features"][0].clone();
            v["features"].as_array_mut().unwrap().push(dup);
            v.to_string()
        };
        assert!(matches!(
            parse_geojson_annotations::<f64>(&two, "s", 1.0),
            Err(AnnotationError::MultipleContour(_))
        ));
    }

    #[test]
    fn multipolygon_contour_rejected_roi_split() {
        let multi = json!({
            "type": "FeatureCollection",
            "features": [
                {"type": "Feature",
                 "geometry": {"type": "MultiPolygon", "coordinates": [
                     [[[0,0],[10,0],[10,10],[0,10],[0,0]]],
                     [[[20,0],[30,0],[30,10],[20,10],[20,0]]]
                 ]},
                 "properties": {"classification": {"name": CONTOUR_CLASS}}}
            ]
        })
        .to_string();
        assert!(matches!(
            parse_geojson_annotations::<f64>(&multi, "s", 1.0),
            Err(AnnotationError::MultipleContour(_))
        ));

        let roi_multi = json!({
            "type": "FeatureCollection",
            "features": [
                {"type": "Feature",
                 "geometry": {"type": "Polygon", "coordinates": [[[0,0],[30,0],[30,10],[0,10],[0,0]]]},
                 "properties": {"classification": {"name": CONTOUR_CLASS}}},
                {"type": "Feature",
                 "geometry": {"type": "MultiPolygon", "coordinates": [
                     [[[1,1],[3,1],[3,3],[1,3],[1,1]]],
                     [[[21,1],[23,1],[23,3],[21,3],[21,1]]]
                 ]},
                 "properties": {"classification": {"name": "Tumor"}}}
            ]
        })
        .to_string();
        let a: SlideAnnotations<f64> = parse_geojson_annotations(&roi_multi, "s", 1.0).unwrap();
        assert_eq!(a.rois.len(), 2, "MultiPolygon roi splits per member");
        assert_eq!(a.rois[0].0, "Tumor");
        assert_eq!(a.rois[1].0, "Tumor");
    }

    #[test]
    fn self_intersecting_ring_rejected() {
        let bowtie = geojson(
            &SQUARE,
            &[(
                "Tumor",
                vec![(1.0, 1.0), (3.0, 3.0), (3.0, 1.0), (1.0, 3.0)],
            )],
        );
        assert!(matches!(
            parse_geojson_annotations::<f64>(&bowtie, "s", 1.0),
            Err(AnnotationError::Geometry { .. })
        ));
    }

    #[test]
    fn roi_outside_contour_rejected() {
        let text = geojson(
            &SQUARE,
            &[(
                "Tumor",
                vec![
                    (100.0, 100.0),
                    (101.0, 100.0),
                    (101.0, 101.0),
                    (100.0, 101.0),
                ],
            )],
        );
        assert!(matches!(
            parse_geojson_annotations::<f64>(&text, "s", 1.0),
            Err(AnnotationError::Geometry { .. })
        ));
    }

    #[test]
    fn holes_are_ignored() {
        let with_hole = json!({
            "type": "FeatureCollection",
            "features": [{
                "type": "Feature",
                "geometry": {"type": "Polygon", "coordinates": [
                    [[0,0],[10,0],[10,10],[0,10],[0,0]],
                    [[4,4],[6,4],[6,6],[4,6],[4,4]]
                ]},
                "properties": {"classification": {"name": CONTOUR_CLASS}}
            }]
        })
        .to_string();
        let a: SlideAnnotations<f64> = parse_geojson_annotations(&with_hole, "s", 1.0).unwrap();
        assert_relative_eq!(a.contour.area().unwrap(), 100.0, epsilon = 1e-9);
    }

    mod mapping {
        use super::*;
        use crate::mesh::generic_prostate_model;
        use crate::slicing::build_reference_model;
        use crate::slicing::ReferenceModel;

        fn model() -> ReferenceModel<f64> {
            let mesh = generic_prostate_model(40.0, 30.0, 35.0, (24, 48)).unwrap();
            let protocol = crate::protocol::tests::reference_case_protocol();
            build_reference_model(&mesh, &protocol, None, None).unwrap()
        }

        fn ann(name: &str) -> (String, SlideAnnotations<f64>) {
            let text = geojson(&SQUARE, &[]);
            (
                format!("{name}.geojson"),
                parse_geojson_annotations(&text, name, 1.0).unwrap(),
            )
        }

        #[test]
        fn stem_convention_and_protocol_order() {
            let m = model();
            // Provide files out of protocol order.
            let inputs = vec![ann("3LV"), ann("AL1"), ann("2RD")];
            let r = resolve_mapping(inputs, &[], &m, true).unwrap();
            let names: Vec<&str> = r.pairs.iter().map(|(_, p)| p.name.as_str()).collect();
            assert_eq!(names, vec!["AL1", "2RD", "3LV"], "protocol order restored");
            assert!(r.warnings.is_empty());
        }

        #[test]
        fn manifest_overrides_stem() {
            let m = model();
            let inputs = vec![ann("tumor_slide_A")];
            let manifest = vec![("tumor_slide_A.geojson".to_string(), "4RV".to_string())];
            let r = resolve_mapping(inputs, &manifest, &m, true).unwrap();
            assert_eq!(r.pairs.len(), 1);
            assert_eq!(r.pairs[0].1.name, "4RV");
        }

        #[test]
        fn unknown_polygon_strict_vs_lenient() {
            let m = model();
            let inputs = vec![ann("9Q")];
            let err = resolve_mapping(inputs.clone(), &[], &m, true).unwrap_err();
            assert!(matches!(err, AnnotationError::UnknownPolygon { .. }));
            let r = resolve_mapping(inputs, &[], &m, false).unwrap();
            assert!(r.pairs.is_empty());
            assert_eq!(r.warnings.len(), 1);
        }

        #[test]
        fn duplicate_assignment_always_errors() {
            let m = model();
            let inputs = vec![ann("2LV"), ann("extra")];
            let manifest = vec![("extra.geojson".to_string(), "2LV".to_string())];
            let err = resolve_mapping(inputs, &manifest, &m, false).unwrap_err();
            assert!(matches!(err, AnnotationError::DuplicateAssignment { .. }));
        }

        #[test]
        fn dangling_manifest_entry() {
            let m = model();
            let manifest = vec![("missing.geojson".to_string(), "2LV".to_string())];
            let err = resolve_mapping(vec![ann("2RD")], &manifest, &m, true).unwrap_err();
            assert!(matches!(err, AnnotationError::UnmappedFile { .. }));
            let r = resolve_mapping(vec![ann("2RD")], &manifest, &m, false).unwrap();
            assert_eq!(r.pairs.len(), 1);
            assert_eq!(r.warnings.len(), 1);
        }
    }
}
