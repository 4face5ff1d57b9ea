//! Pipeline configuration: JSON config file plus command-line overrides
//! (flags win). The resolved form is echoed into the run manifest.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Uniform or per-axis mesh scale factor.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum MeshScale {
    Uniform(f64),
    PerAxis([f64; 3]),
}

impl MeshScale {
    pub fn factors(&self) -> [f64; 3] {
        match *self {
            MeshScale::Uniform(s) => [s, s, s],
            MeshScale::PerAxis(a) => a,
        }
    }
}

/// Reconstruction method selector as written in configs and flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    Hull,
    Splatter,
    Extrusion,
}

/// OBJ export granularity for registered slides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Granularity {
    PerSlide,
    PerAnnotation,
}

/// Registration parameters (all optional; unset fields keep the library
/// defaults).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CpdSettings {
    pub target_points: Option<usize>,
    pub outlier_weight: Option<f64>,
    pub max_iterations: Option<usize>,
    pub sigma_tolerance: Option<f64>,
    pub rotation_restarts: Option<usize>,
    pub restart_step_deg: Option<f64>,
    pub iou_resolution: Option<usize>,
    pub estimate_scale: Option<bool>,
}

impl CpdSettings {
    pub fn resolve(&self) -> histo3d::registration::CpdConfig<f64> {
        let mut c = histo3d::registration::CpdConfig::default();
        if let Some(v) = self.target_points {
            c.target_points = v;
        }
        if let Some(v) = self.outlier_weight {
            c.outlier_weight = v;
        }
        if let Some(v) = self.max_iterations {
            c.max_iterations = v;
        }
        if let Some(v) = self.sigma_tolerance {
            c.sigma_tolerance = v;
        }
        if let Some(v) = self.rotation_restarts {
            c.rotation_restarts = v;
        }
        if let Some(v) = self.restart_step_deg {
            c.restart_step_deg = v;
        }
        if let Some(v) = self.iou_resolution {
            c.iou_resolution = v;
        }
        if let Some(v) = self.estimate_scale {
            c.estimate_scale = v;
        }
        c
    }

    fn merge(&mut self, other: &CpdSettings) {
        macro_rules! take {
            ($f:ident) => {
                if other.$f.is_some() {
                    self.$f = other.$f;
                }
            };
        }
        take!(target_points);
        take!(outlier_weight);
        take!(max_iterations);
        take!(sigma_tolerance);
        take!(rotation_restarts);
        take!(restart_step_deg);
        take!(iou_resolution);
        take!(estimate_scale);
    }
}

/// Gaussian blob parameters (unset fields keep the library defaults).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplatterSettings {
    pub radius_factor: Option<f64>,
    pub min_normal_sigma_mm: Option<f64>,
    pub tessellation: Option<(usize, usize)>,
}

impl SplatterSettings {
    pub fn resolve(&self) -> histo3d::reconstruction::SplatterConfig<f64> {
        let mut c = histo3d::reconstruction::SplatterConfig::default();
        if let Some(v) = self.radius_factor {
            c.radius_factor = v;
        }
        if self.min_normal_sigma_mm.is_some() {
            c.min_normal_sigma_mm = self.min_normal_sigma_mm;
        }
        if let Some(v) = self.tessellation {
            c.tessellation = v;
        }
        c
    }

    fn merge(&mut self, other: &SplatterSettings) {
        if other.radius_factor.is_some() {
            self.radius_factor = other.radius_factor;
        }
        if other.min_normal_sigma_mm.is_some() {
            self.min_normal_sigma_mm = other.min_normal_sigma_mm;
        }
        if other.tessellation.is_some() {
            self.tessellation = other.tessellation;
        }
    }
}

/// Complete pipeline configuration. Every field can come from the JSON
/// config file or from a flag; flags take precedence field by field.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Sectioning-protocol JSON.
    pub protocol: Option<PathBuf>,
    /// Surface model file (OBJ/PLY/STL). Exactly one of `mesh` and
    /// `generic_model` must be set wherever a model is needed.
    pub mesh: Option<PathBuf>,
    /// Procedural stand-in model dimensions (width, height, depth in mm).
    pub generic_model: Option<[f64; 3]>,
    /// Directory of GeoJSON slide annotations.
    pub annotations: Option<PathBuf>,
    /// Slide-to-polygon mapping file (JSON object: file name -> polygon).
    pub mapping: Option<PathBuf>,
    /// Output directory.
    pub output: Option<PathBuf>,
    /// Reference-model JSON produced by `slice` (register/mark-slides input).
    pub reference: Option<PathBuf>,
    /// Registered-results JSON produced by `register` (reconstruct input).
    pub registered: Option<PathBuf>,
    /// Mesh pre-rotation, Euler angles in degrees applied X then Y then Z.
    pub rotate_deg: Option<[f64; 3]>,
    /// Mesh pre-scale (uniform factor or per-axis), applied before rotation.
    pub mesh_scale: Option<MeshScale>,
    /// Annotation unit size in mm (use for annotations not already in mm).
    pub annotation_scale_mm: Option<f64>,
    /// Annotation unit size in microns per pixel (alternative to
    /// `annotation_scale_mm`; they are mutually exclusive).
    pub mpp: Option<f64>,
    pub apex_offset_mm: Option<f64>,
    pub base_offset_mm: Option<f64>,
    pub cpd: CpdSettings,
    pub splatter: SplatterSettings,
    /// Reconstruction methods to run (default: all three).
    pub methods: Option<Vec<MethodName>>,
    /// OBJ export granularity for registered slides (default per-slide).
    pub granularity: Option<Granularity>,
    /// Strict mapping mode (default true): unknown or unmapped slides are
    /// errors instead of warnings.
    pub strict: Option<bool>,
}

impl PipelineConfig {
    /// Load a config file (missing file -> IO error, invalid JSON -> parse
    /// error, unknown keys -> domain error).
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        if let Err(e) = serde_json::from_str::<serde_json::Value>(&text) {
            return Err(CliError::Parse(format!(
                "config {} is not valid JSON: {e}",
                path.display()
            )));
        }
        serde_json::from_str(&text)
            .map_err(|e| CliError::Domain(format!("config {} is invalid: {e}", path.display())))
    }

    /// Overlay `other` (typically flag-derived) onto `self`; set fields of
    /// `other` win.
    pub fn merge(&mut self, other: &PipelineConfig) {
        macro_rules! take {
            ($f:ident) => {
                if other.$f.is_some() {
                    self.$f = other.$f.clone();
                }
            };
        }
        take!(protocol);
        take!(mesh);
        take!(generic_model);
        take!(annotations);
        take!(mapping);
        take!(output);
        take!(reference);
        take!(registered);
        take!(rotate_deg);
        take!(mesh_scale);
        take!(annotation_scale_mm);
        take!(mpp);
        take!(apex_offset_mm);
        take!(base_offset_mm);
        self.cpd.merge(&other.cpd);
        self.splatter.merge(&other.splatter);
        take!(methods);
        take!(granularity);
        take!(strict);
    }

    pub fn output_dir(&self) -> Result<&std::path::Path, CliError> {
        self.output
            .as_deref()
            .ok_or_else(|| CliError::Domain("no output directory given (--output)".into()))
    }

    /// mm-per-unit scale for annotation coordinates.
    pub fn annotation_scale(&self) -> Result<f64, CliError> {
        match (self.annotation_scale_mm, self.mpp) {
            (Some(_), Some(_)) => Err(CliError::Domain(
                "annotation_scale_mm and mpp are mutually exclusive".into(),
            )),
            (Some(s), None) => Ok(s),
            (None, Some(mpp)) => Ok(mpp / 1000.0),
            (None, None) => Ok(1.0),
        }
    }

    pub fn methods(&self) -> Vec<MethodName> {
        self.methods.clone().unwrap_or_else(|| {
            vec![
                MethodName::Hull,
                MethodName::Splatter,
                MethodName::Extrusion,
            ]
        })
    }

    pub fn strict(&self) -> bool {
        self.strict.unwrap_or(true)
    }

    pub fn granularity(&self) -> histo3d::registration::ObjGrouping {
        match self.granularity.unwrap_or(Granularity::PerSlide) {
            Granularity::PerSlide => histo3d::registration::ObjGrouping::Slide,
            Granularity::PerAnnotation => histo3d::registration::ObjGrouping::Annotation,
        }
    }
}
