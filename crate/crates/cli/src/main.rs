//! Command-line front end: reconstruct 3D tumor volumes from 2D histology
//! slide annotations.
//!
//! Subcommands mirror the pipeline stages (`slice`, `register`,
//! `reconstruct`, plus `protocol` utilities, `mark-slides`, and the chained
//! `pipeline`). Configuration comes from an optional JSON file plus flags;
//! flags win field by field. Every artifact-producing command also writes
//! `run_manifest.json` (resolved config, versions, timings, output hashes).
//!
//! Exit codes: 0 success, 1 IO/parse failure, 2 validation/domain failure.

mod config;
mod manifest;
mod stages;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{Granularity, MeshScale, MethodName, PipelineConfig};
use manifest::RunManifest;

/// CLI failure with its exit-code class.
#[derive(Debug)]
pub enum CliError {
    /// Missing/unreadable files (exit 1).
    Io(String),
    /// Malformed input documents (exit 1).
    Parse(String),
    /// Well-formed input that violates an invariant, or bad configuration
    /// (exit 2).
    Domain(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(m) | CliError::Parse(m) | CliError::Domain(m) => f.write_str(m),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) | CliError::Parse(_) => 1,
            CliError::Domain(_) => 2,
        }
    }
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got {s:?}"));
    }
    let mut out = [0.0; 3];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("bad number {part:?}: {e}"))?;
    }
    Ok(out)
}

fn parse_scale(s: &str) -> Result<MeshScale, String> {
    if s.contains(',') {
        parse_triple(s).map(MeshScale::PerAxis)
    } else {
        s.trim()
            .parse::<f64>()
            .map(MeshScale::Uniform)
            .map_err(|e| format!("bad scale {s:?}: {e}"))
    }
}

/// Flags shared by the stage subcommands. Each maps onto one field of the
/// JSON config; set flags override the file.
#[derive(Args, Debug, Default)]
struct CommonFlags {
    /// JSON configuration file (flags override its fields)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Sectioning-protocol JSON
    #[arg(long)]
    protocol: Option<PathBuf>,
    /// Surface model file (OBJ/PLY/STL)
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Procedural stand-in model dimensions in mm: width,height,depth
    #[arg(long, value_name = "W,H,D", value_parser = parse_triple)]
    generic_model: Option<[f64; 3]>,
    /// Directory of GeoJSON slide annotations
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Slide-to-polygon mapping JSON ({"file": "polygon", ...})
    #[arg(long)]
    mapping: Option<PathBuf>,
    /// Output directory
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Reference-model JSON produced by `slice`
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Registered-results JSON produced by `register` or `mark-slides`
    #[arg(long)]
    registered: Option<PathBuf>,
    /// Mesh rotation in degrees, Euler angles applied X then Y then Z
    #[arg(long = "rotate", value_name = "X,Y,Z", value_parser = parse_triple)]
    rotate_deg: Option<[f64; 3]>,
    /// Mesh scale: uniform factor or per-axis sx,sy,sz (applied before rotation)
    #[arg(long, value_name = "S|SX,SY,SZ", value_parser = parse_scale)]
    mesh_scale: Option<MeshScale>,
    /// Annotation unit size in mm per coordinate unit
    #[arg(long = "scale", conflicts_with = "mpp")]
    annotation_scale_mm: Option<f64>,
    /// Annotation resolution in microns per pixel
    #[arg(long)]
    mpp: Option<f64>,
    /// Apex region thickness override (mm)
    #[arg(long = "apex-offset")]
    apex_offset_mm: Option<f64>,
    /// Base region thickness override (mm)
    #[arg(long = "base-offset")]
    base_offset_mm: Option<f64>,
    /// Contours are upsampled to at least this many points before registration
    #[arg(long)]
    target_points: Option<usize>,
    /// Uniform outlier mass in [0, 1)
    #[arg(long)]
    outlier_weight: Option<f64>,
    /// Registration EM iteration cap
    #[arg(long = "max-iters")]
    max_iterations: Option<usize>,
    /// Number of rotation restarts
    #[arg(long = "restarts")]
    rotation_restarts: Option<usize>,
    /// Angle step between rotation restarts (degrees)
    #[arg(long)]
    restart_step_deg: Option<f64>,
    /// Raster resolution of the IoU score (pixels along the long side)
    #[arg(long)]
    iou_resolution: Option<usize>,
    /// Rotation + translation only: keep the slide scale fixed at 1
    #[arg(long)]
    rigid: bool,
    /// Ellipsoid semi-axes as a multiple of the per-axis standard deviation
    #[arg(long)]
    radius_factor: Option<f64>,
    /// Minimum out-of-plane standard deviation (mm) before scaling
    #[arg(long = "min-normal-sigma")]
    min_normal_sigma_mm: Option<f64>,
    /// Reconstruction methods to run (default: all)
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<MethodName>>,
    /// OBJ export granularity for registered slides
    #[arg(long)]
    granularity: Option<Granularity>,
    /// Skip unknown or unmapped slides with a warning instead of failing
    #[arg(long)]
    lenient: bool,
}

impl CommonFlags {
    fn overrides(&self) -> PipelineConfig {
        let mut cfg = PipelineConfig {
            protocol: self.protocol.clone(),
            mesh: self.mesh.clone(),
            generic_model: self.generic_model,
            annotations: self.annotations.clone(),
            mapping: self.mapping.clone(),
            output: self.output.clone(),
            reference: self.reference.clone(),
            registered: self.registered.clone(),
            rotate_deg: self.rotate_deg,
            mesh_scale: self.mesh_scale,
            annotation_scale_mm: self.annotation_scale_mm,
            mpp: self.mpp,
            apex_offset_mm: self.apex_offset_mm,
            base_offset_mm: self.base_offset_mm,
            methods: self.methods.clone(),
            granularity: self.granularity,
            ..PipelineConfig::default()
        };
        cfg.cpd.target_points = self.target_points;
        cfg.cpd.outlier_weight = self.outlier_weight;
        cfg.cpd.max_iterations = self.max_iterations;
        cfg.cpd.rotation_restarts = self.rotation_restarts;
        cfg.cpd.restart_step_deg = self.restart_step_deg;
        cfg.cpd.iou_resolution = self.iou_resolution;
        if self.rigid {
            cfg.cpd.estimate_scale = Some(false);
        }
        cfg.splatter.radius_factor = self.radius_factor;
        cfg.splatter.min_normal_sigma_mm = self.min_normal_sigma_mm;
        if self.lenient {
            cfg.strict = Some(false);
        }
        cfg
    }

    /// Config file (if any) overlaid with the flags.
    fn resolve(&self) -> Result<PipelineConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        cfg.merge(&self.overrides());
        Ok(cfg)
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "histo3d",
    version,
    about = "Reconstruct 3D tumor volumes from 2D histology slide annotations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate or canonicalize a sectioning-protocol file
    Protocol {
        #[command(subcommand)]
        action: ProtocolAction,
    },
    /// Slice the surface model into named reference polygons
    Slice {
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Register slide annotations onto their reference polygons
    Register {
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Build volumetric meshes from registered results
    Reconstruct {
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Mark whole reference polygons positive (slide-level findings without
    /// drawn annotations) and emit them as registered results
    MarkSlides {
        #[command(flatten)]
        flags: CommonFlags,
        /// Comma-separated reference polygon names
        #[arg(long, value_delimiter = ',')]
        ids: Vec<String>,
        /// Class label for the marked regions
        #[arg(long, default_value = "Tumor")]
        class: String,
    },
    /// Run slice, register, and reconstruct in sequence
    Pipeline {
        #[command(flatten)]
        flags: CommonFlags,
    },
}

#[derive(Subcommand, Debug)]
enum ProtocolAction {
    /// Parse and check a protocol file, printing a report
    Validate { input: PathBuf },
    /// Rewrite a protocol in canonical form (stdout, or --output directory)
    Convert {
        input: PathBuf,
        /// Output directory for `<case>_protocol.json` plus a run manifest
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

fn protocol_report(p: &histo3d::protocol::SectioningProtocol) {
    println!("case {}", p.case_id);
    let yesno = |b: bool| if b { "yes" } else { "no" };
    println!(
        "  apex: {} fragments, offset {} mm, ventral/dorsal split: {}",
        p.apex.fragment_count(),
        p.apex.offset_mm,
        yesno(p.apex.split_frontal)
    );
    let central_fragments: usize = p.central.iter().map(|s| s.ids.len()).sum();
    println!(
        "  central: {} slices, {} fragments",
        p.central_count(),
        central_fragments
    );
    println!(
        "  base: {} fragments, offset {} mm, ventral/dorsal split: {}",
        p.base.fragment_count(),
        p.base.offset_mm,
        yesno(p.base.split_frontal)
    );
    println!("  total: {} fragments", p.total_fragment_count());
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Protocol { action } => match action {
            ProtocolAction::Validate { input } => {
                let p = stages::load_protocol(&input)?;
                protocol_report(&p);
                println!("protocol OK");
                Ok(())
            }
            ProtocolAction::Convert { input, output } => {
                let p = stages::load_protocol(&input)?;
                let canonical = histo3d::protocol::serialize_protocol(&p);
                match output {
                    Some(dir) => {
                        let cfg = PipelineConfig {
                            protocol: Some(input),
                            output: Some(dir.clone()),
                            ..PipelineConfig::default()
                        };
                        let mut man = RunManifest::new("protocol-convert", &cfg);
                        man.write_output(
                            &dir,
                            &format!("{}_protocol.json", p.case_id),
                            &canonical,
                        )?;
                        man.finish(&dir)?;
                    }
                    None => print!("{canonical}"),
                }
                Ok(())
            }
        },
        Command::Slice { flags } => {
            let cfg = flags.resolve()?;
            let mut man = RunManifest::new("slice", &cfg);
            stages::stage_slice(&cfg, &mut man)?;
            man.finish(cfg.output_dir()?)
        }
        Command::Register { flags } => {
            let cfg = flags.resolve()?;
            let reference = cfg
                .reference
                .as_deref()
                .ok_or_else(|| CliError::Domain("no reference model given (--reference)".into()))?;
            let model = stages::load_reference_file(reference)?;
            let mut man = RunManifest::new("register", &cfg);
            stages::stage_register(&cfg, &model, &mut man)?;
            man.finish(cfg.output_dir()?)
        }
        Command::Reconstruct { flags } => {
            let cfg = flags.resolve()?;
            let registered = cfg.registered.as_deref().ok_or_else(|| {
                CliError::Domain("no registered results given (--registered)".into())
            })?;
            let results = stages::load_registered_file(registered)?;
            let mut man = RunManifest::new("reconstruct", &cfg);
            stages::stage_reconstruct(&cfg, &results, &mut man)?;
            man.finish(cfg.output_dir()?)
        }
        Command::MarkSlides { flags, ids, class } => {
            let cfg = flags.resolve()?;
            let reference = cfg
                .reference
                .as_deref()
                .ok_or_else(|| CliError::Domain("no reference model given (--reference)".into()))?;
            let model = stages::load_reference_file(reference)?;
            let mut man = RunManifest::new("mark-slides", &cfg);
            stages::stage_mark(&cfg, &model, &ids, &class, &mut man)?;
            man.finish(cfg.output_dir()?)
        }
        Command::Pipeline { flags } => {
            let cfg = flags.resolve()?;
            let mut man = RunManifest::new("pipeline", &cfg);
            let model = stages::stage_slice(&cfg, &mut man)?;
            let results = stages::stage_register(&cfg, &model, &mut man)?;
            stages::stage_reconstruct(&cfg, &results, &mut man)?;
            man.finish(cfg.output_dir()?)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
