//! Pipeline stages shared by the individual subcommands and `pipeline`.
//! Each stage reads files, calls the library, writes its artifacts through
//! the run manifest, and prints a short report.

use std::path::Path;

use histo3d::annotation::{parse_geojson_annotations, resolve_mapping, AnnotationError};
use histo3d::mesh::{load_mesh, MeshFormat};
use histo3d::protocol::{parse_protocol, ProtocolError, SectioningProtocol};
use histo3d::reconstruction::{
    convex_hull, export_reconstruction_obj, gaussian_splatter, linear_extrusion, mark_slides,
    serialize_reconstruction_summary, ReconstructionMesh,
};
use histo3d::registration::{
    export_registered_obj, parse_registered, register_slide, serialize_registered,
};
use histo3d::slicing::{
    build_reference_model, export_reference_obj, parse_reference_model, serialize_reference_model,
};
use histo3d::{AffineTransform64, ReferenceModel64, RegistrationResult64, TriMesh64};

use crate::config::{MethodName, PipelineConfig};
use crate::manifest::RunManifest;
use crate::CliError;

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

/// Invalid JSON is a parse failure (exit 1); schema and invariant problems
/// in well-formed JSON are domain failures (exit 2).
fn json_syntax_check(text: &str, what: &str) -> Result<(), CliError> {
    serde_json::from_str::<serde_json::Value>(text)
        .map(|_| ())
        .map_err(|e| CliError::Parse(format!("{what} is not valid JSON: {e}")))
}

pub fn protocol_error(e: ProtocolError) -> CliError {
    match e {
        ProtocolError::Syntax { .. } => CliError::Parse(e.to_string()),
        ProtocolError::Schema { .. } | ProtocolError::Validation { .. } => {
            CliError::Domain(e.to_string())
        }
    }
}

pub fn load_protocol(path: &Path) -> Result<SectioningProtocol, CliError> {
    let text = read_text(path)?;
    parse_protocol(&text).map_err(protocol_error)
}

/// Load the surface model: exactly one of `mesh` (OBJ/PLY/STL file) and
/// `generic_model` (procedural stand-in dimensions), with the configured
/// pre-transform applied (scale in model axes, then Euler rotation X, Y, Z).
pub fn load_input_mesh(cfg: &PipelineConfig) -> Result<TriMesh64, CliError> {
    let mesh = match (&cfg.mesh, &cfg.generic_model) {
        (Some(_), Some(_)) => {
            return Err(CliError::Domain(
                "give either a mesh file or generic-model dimensions, not both".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::Domain(
                "no surface model: give a mesh file (--mesh) or generic-model dimensions \
                 (--generic-model w,h,d)"
                    .into(),
            ))
        }
        (Some(path), None) => {
            let format = match path.extension().and_then(|e| e.to_str()) {
                Some(e) if e.eq_ignore_ascii_case("obj") => MeshFormat::Obj,
                Some(e) if e.eq_ignore_ascii_case("ply") => MeshFormat::Ply,
                Some(e) if e.eq_ignore_ascii_case("stl") => MeshFormat::Stl,
                _ => MeshFormat::Auto,
            };
            load_mesh(&read_bytes(path)?, format)
                .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?
        }
        (None, Some([w, h, d])) => histo3d::mesh::generic_prostate_model(
            *w,
            *h,
            *d,
            histo3d::mesh::DEFAULT_MODEL_TESSELLATION,
        )
        .map_err(|e| CliError::Domain(format!("generic model: {e}")))?,
    };

    let mut transform = AffineTransform64::identity();
    if let Some(scale) = &cfg.mesh_scale {
        let [sx, sy, sz] = scale.factors();
        transform = AffineTransform64::scale_xyz(sx, sy, sz);
    }
    if let Some([rx, ry, rz]) = cfg.rotate_deg {
        let rot =
            AffineTransform64::rotation_xyz(rx.to_radians(), ry.to_radians(), rz.to_radians());
        transform = rot.compose(&transform);
    }
    mesh.transformed(&transform)
        .map_err(|e| CliError::Domain(format!("mesh pre-transform: {e}")))
}

/// Slice the surface model per the protocol into named reference polygons.
/// Writes `<case>_reference_model.json` plus one OBJ per polygon.
pub fn stage_slice(
    cfg: &PipelineConfig,
    man: &mut RunManifest,
) -> Result<ReferenceModel64, CliError> {
    let protocol_path = cfg
        .protocol
        .as_deref()
        .ok_or_else(|| CliError::Domain("no sectioning protocol given (--protocol)".into()))?;
    let protocol = load_protocol(protocol_path)?;
    let mesh = load_input_mesh(cfg)?;
    let model = man.stage("slice", || {
        build_reference_model(&mesh, &protocol, cfg.apex_offset_mm, cfg.base_offset_mm)
            .map_err(|e| CliError::Domain(format!("slicing: {e}")))
    })?;

    let out = cfg.output_dir()?;
    man.write_output(
        out,
        &format!("{}_reference_model.json", model.case_id),
        &serialize_reference_model(&model),
    )?;
    for (name, contents) in export_reference_obj(&model) {
        man.write_output(out, &name, &contents)?;
    }

    println!(
        "reference model {}: {} polygons",
        model.case_id,
        model.polygons.len()
    );
    let mut regions: Vec<(&str, usize, f64)> = Vec::new();
    for p in &model.polygons {
        let label = p.region.label();
        match regions.iter_mut().find(|(l, _, _)| *l == label) {
            Some(slot) => slot.1 += 1,
            None => regions.push((label, 1, p.thickness_mm)),
        }
    }
    for (label, count, thickness) in regions {
        println!("  {label}: {count} polygons, thickness {thickness} mm");
    }
    Ok(model)
}

/// Read a reference model written by `slice`. The case id is recovered from
/// the file name (`<case>_reference_model.json`).
pub fn load_reference_file(path: &Path) -> Result<ReferenceModel64, CliError> {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("case");
    let case_id = stem.strip_suffix("_reference_model").unwrap_or(stem);
    let text = read_text(path)?;
    json_syntax_check(&text, "reference model")?;
    parse_reference_model(&text, case_id)
        .map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

fn annotation_error(file: &str, e: AnnotationError) -> CliError {
    CliError::Domain(format!("{file}: {e}"))
}

/// Read every `.geojson`/`.json` file of the annotations directory, sorted
/// by file name.
fn load_annotation_dir(
    cfg: &PipelineConfig,
) -> Result<Vec<(String, histo3d::SlideAnnotations64)>, CliError> {
    let dir = cfg
        .annotations
        .as_deref()
        .ok_or_else(|| CliError::Domain("no annotations directory given (--annotations)".into()))?;
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", dir.display())))?;
    let mut files: Vec<std::path::PathBuf> = Vec::new();
    for entry in entries {
        let entry =
            entry.map_err(|e| CliError::Io(format!("cannot read {}: {e}", dir.display())))?;
        let path = entry.path();
        let is_annotation = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("geojson") || e.eq_ignore_ascii_case("json"));
        if path.is_file() && is_annotation {
            files.push(path);
        }
    }
    files.sort();

    let scale = cfg.annotation_scale()?;
    let mut annotations = Vec::with_capacity(files.len());
    for path in files {
        let name = path
            .file_name()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let text = read_text(&path)?;
        json_syntax_check(&text, &name)?;
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default();
        let slide = parse_geojson_annotations(&text, stem, scale)
            .map_err(|e| annotation_error(&name, e))?;
        annotations.push((name, slide));
    }
    Ok(annotations)
}

/// Slide-to-polygon mapping file: a JSON object `{file name: polygon name}`.
fn load_mapping(cfg: &PipelineConfig) -> Result<Vec<(String, String)>, CliError> {
    let Some(path) = cfg.mapping.as_deref() else {
        return Ok(Vec::new());
    };
    let text = read_text(path)?;
    json_syntax_check(&text, "mapping")?;
    let map: serde_json::Map<String, serde_json::Value> =
        serde_json::from_str(&text).map_err(|e| {
            CliError::Domain(format!(
                "{}: mapping must be a JSON object: {e}",
                path.display()
            ))
        })?;
    let mut pairs = Vec::with_capacity(map.len());
    for (file, polygon) in map {
        let polygon = polygon
            .as_str()
            .ok_or_else(|| {
                CliError::Domain(format!(
                    "{}: mapping value for {file:?} must be a polygon name string",
                    path.display()
                ))
            })?
            .to_string();
        pairs.push((file, polygon));
    }
    Ok(pairs)
}

/// Register every annotated slide onto its reference polygon. Writes
/// `<case>_registered.json` plus OBJ exports per the granularity setting,
/// and prints the per-slide IoU table.
pub fn stage_register(
    cfg: &PipelineConfig,
    model: &ReferenceModel64,
    man: &mut RunManifest,
) -> Result<Vec<RegistrationResult64>, CliError> {
    let annotations = load_annotation_dir(cfg)?;
    if annotations.is_empty() {
        println!("warning: no annotation files found; nothing to register");
        write_registered(cfg, &model.case_id, &[], man)?;
        return Ok(Vec::new());
    }
    let mapping = load_mapping(cfg)?;
    let resolved = resolve_mapping(annotations, &mapping, model, cfg.strict())
        .map_err(|e| CliError::Domain(format!("mapping: {e}")))?;
    for w in &resolved.warnings {
        println!("warning: {w}");
    }

    let cpd = cfg.cpd.resolve();
    let results = man.stage("register", || {
        let mut results = Vec::with_capacity(resolved.pairs.len());
        println!(
            "{:<16} {:<8} {:>7} {:>9} {:>6}",
            "slide", "polygon", "IoU", "restart°", "iters"
        );
        for (slide, polygon) in &resolved.pairs {
            let r = register_slide(slide, polygon, &cpd, &model.case_id)
                .map_err(|e| CliError::Domain(format!("registering {}: {e}", slide.slide_name)))?;
            println!(
                "{:<16} {:<8} {:>7.4} {:>9.1} {:>6}",
                r.slide_name, r.polygon_name, r.iou, r.restart_angle_deg, r.iterations_used
            );
            results.push(r);
        }
        Ok(results)
    })?;

    if !results.is_empty() {
        let n = results.len() as f64;
        let mean = results.iter().map(|r| r.iou).sum::<f64>() / n;
        let var = results.iter().map(|r| (r.iou - mean).powi(2)).sum::<f64>() / n;
        println!(
            "mean IoU {:.4} ± {:.4} (n={})",
            mean,
            var.sqrt(),
            results.len()
        );
    }
    write_registered(cfg, &model.case_id, &results, man)?;
    Ok(results)
}

fn write_registered(
    cfg: &PipelineConfig,
    case_id: &str,
    results: &[RegistrationResult64],
    man: &mut RunManifest,
) -> Result<(), CliError> {
    let out = cfg.output_dir()?;
    man.write_output(
        out,
        &format!("{case_id}_registered.json"),
        &serialize_registered(results),
    )?;
    for (name, contents) in export_registered_obj(results, cfg.granularity()) {
        man.write_output(out, &name, &contents)?;
    }
    Ok(())
}

/// Read registered results written by `register` or `mark-slides`.
pub fn load_registered_file(path: &Path) -> Result<Vec<RegistrationResult64>, CliError> {
    let text = read_text(path)?;
    json_syntax_check(&text, "registered results")?;
    parse_registered(&text).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

/// Run the requested reconstruction methods. Writes one OBJ per produced
/// volume plus `<case>_reconstruction.json`, and prints the volume table.
pub fn stage_reconstruct(
    cfg: &PipelineConfig,
    results: &[RegistrationResult64],
    man: &mut RunManifest,
) -> Result<(), CliError> {
    let case_id = results
        .first()
        .map(|r| r.case_id.clone())
        .unwrap_or_else(|| "case".to_string());
    let meshes = man.stage("reconstruct", || {
        let mut meshes: Vec<ReconstructionMesh<f64>> = Vec::new();
        for method in cfg.methods() {
            match method {
                MethodName::Hull => meshes.push(
                    convex_hull(results)
                        .map_err(|e| CliError::Domain(format!("convex hull: {e}")))?,
                ),
                MethodName::Splatter => meshes.extend(
                    gaussian_splatter(results, &cfg.splatter.resolve())
                        .map_err(|e| CliError::Domain(format!("splatter: {e}")))?,
                ),
                MethodName::Extrusion => meshes.extend(
                    linear_extrusion(results)
                        .map_err(|e| CliError::Domain(format!("extrusion: {e}")))?,
                ),
            }
        }
        Ok(meshes)
    })?;

    let out = cfg.output_dir()?;
    man.write_output(
        out,
        &format!("{case_id}_reconstruction.json"),
        &serialize_reconstruction_summary(&meshes)
            .map_err(|e| CliError::Domain(format!("summary: {e}")))?,
    )?;
    for (name, contents) in export_reconstruction_obj(&meshes, &case_id) {
        man.write_output(out, &name, &contents)?;
    }

    for m in &meshes {
        let volume = m
            .mesh
            .signed_volume()
            .map_err(|e| CliError::Domain(format!("volume of {}: {e}", m.class_label)))?;
        println!(
            "{:<10} {:<12} {:>12.3} mm³",
            m.method.label(),
            m.class_label,
            volume
        );
    }
    Ok(())
}

/// Mark whole reference polygons as positive without drawn annotations and
/// write them as registered results (`<case>_registered.json`).
pub fn stage_mark(
    cfg: &PipelineConfig,
    model: &ReferenceModel64,
    ids: &[String],
    class_label: &str,
    man: &mut RunManifest,
) -> Result<Vec<RegistrationResult64>, CliError> {
    let results = man.stage("mark-slides", || {
        mark_slides(model, ids, class_label).map_err(|e| CliError::Domain(e.to_string()))
    })?;
    write_registered(cfg, &model.case_id, &results, man)?;
    println!(
        "marked {} polygon(s) as {class_label:?} in case {}",
        results.len(),
        model.case_id
    );
    Ok(results)
}
