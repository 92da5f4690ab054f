//! Command-line surface. Exit codes: 0 success, 2 invalid input, 3 I/O
//! failure.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::bev::{occupancy_readout, DEFAULT_DF};
use crate::error::{Error, Result};
use crate::eval::{EvalReport, DEFAULT_THRESHOLD};
use crate::geometry::{transform_points, PointCloud, LIDAR_FRAME};
use crate::grid::GridConfig;
use crate::groundtruth::{rasterize_semantic, ClassGrouping};
use crate::io::manifest::CameraSource;
use crate::io::{
    self, bev_to_tensor, calib, depth_to_tensor, features_from_tensor, image_to_tensor, read_cloud,
    read_image, render, semantic_from_tensor, semantic_to_tensor, sidecar_path, Calibration,
    GridSidecar, RunManifest, Tensor,
};
use crate::pipeline::{rig_bev, rig_depth, CameraInput};
use crate::simulate::{demo_scene, raycast, render_ideal_depth, render_image};

#[derive(Debug, Parser)]
#[command(
    name = "lapt",
    version,
    about = "LiDAR-aided projection of camera features into a BEV grid"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-camera sparse depth images and their min-pooled form.
    Depth(DepthArgs),
    /// BEV feature grid from camera features (or images) and LiDAR.
    Bev(BevArgs),
    /// Ground-truth semantic grids from box and polygon annotations.
    Gt(GtArgs),
    /// Per-class IoU of predicted against ground-truth grids.
    Eval(EvalArgs),
    /// Synthetic scene: LiDAR cloud, camera images, calibration and a manifest.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Run manifest (JSON); flags override its fields.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub calib: Option<PathBuf>,
    /// Point cloud in the LiDAR frame (.lapt, .xyz or .ply); repeatable.
    #[arg(long)]
    pub cloud: Vec<PathBuf>,
    /// Feature-map decimation factor.
    #[arg(long = "df")]
    pub d_f: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write PNG renders.
    #[arg(long)]
    pub render: bool,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Half-width `E` for a `[-E, E)²` grid, or `x_min,x_max,y_min,y_max`.
    #[arg(long = "grid-extent")]
    pub grid_extent: Option<String>,
    /// Cell size in meters.
    #[arg(long = "grid-cell")]
    pub grid_cell: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DepthArgs {
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct BevArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// `CAMERA=PATH` feature tensor (C×H/d_f×W/d_f f32); repeatable.
    #[arg(long, value_parser = parse_named_path)]
    pub features: Vec<(String, PathBuf)>,
    /// `CAMERA=PATH` RGB image (.png or H×W×3 u8 tensor); repeatable.
    #[arg(long, value_parser = parse_named_path)]
    pub images: Vec<(String, PathBuf)>,
    /// L1 threshold of the rendered occupancy readout.
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct GtArgs {
    /// Annotation JSON with `boxes` and `polygons`.
    #[arg(long)]
    pub annotations: PathBuf,
    /// Class grouping JSON `{target: [source labels]}`; defaults to one class per label.
    #[arg(long)]
    pub classes: Option<PathBuf>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub render: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted grid tensor (u8 0/1 or f32 probabilities, C×X×Y).
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth grid tensor with its JSON sidecar.
    #[arg(long)]
    pub gt: PathBuf,
    /// Predictions at or above this probability count as positive.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Row label in the printed table.
    #[arg(long, default_value = "prediction")]
    pub label: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scene JSON; the built-in demo scene when omitted.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Demo scene camera width.
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    /// Demo scene camera height.
    #[arg(long, default_value_t = 128)]
    pub height: usize,
    /// Seed for LiDAR dropout.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Overrides the scene's LiDAR dropout probability.
    #[arg(long)]
    pub dropout: Option<f64>,
    /// Decimation factor recorded in the written manifest.
    #[arg(long = "df", default_value_t = DEFAULT_DF)]
    pub d_f: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub render: bool,
}

fn parse_named_path(s: &str) -> std::result::Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => {
            Ok((name.to_string(), PathBuf::from(path)))
        }
        _ => Err(format!("expected CAMERA=PATH, got `{s}`")),
    }
}

fn grid_config(base: Option<GridConfig>, args: &GridArgs) -> Result<GridConfig> {
    let mut g = base.unwrap_or_default();
    if let Some(ext) = &args.grid_extent {
        let vals = ext
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::invalid(format!("--grid-extent `{ext}`: {e}")))?;
        match vals.as_slice() {
            [e] => (g.x_min, g.x_max, g.y_min, g.y_max) = (-e, *e, -e, *e),
            [a, b, c, d] => (g.x_min, g.x_max, g.y_min, g.y_max) = (*a, *b, *c, *d),
            _ => {
                return Err(Error::invalid(
                    "--grid-extent takes 1 or 4 comma-separated values",
                ))
            }
        }
    }
    if let Some(cell) = args.grid_cell {
        g.cell = cell;
    }
    g.validate()?;
    Ok(g)
}

fn manifest(run: &RunArgs) -> Result<RunManifest> {
    let mut m = match &run.manifest {
        Some(p) => RunManifest::load(p)?,
        None => RunManifest::default(),
    };
    if run.calib.is_some() {
        m.calibration = run.calib.clone();
    }
    if !run.cloud.is_empty() {
        m.clouds = run.cloud.clone();
    }
    if run.d_f.is_some() {
        m.d_f = run.d_f;
    }
    if run.out.is_some() {
        m.out = run.out.clone();
    }
    Ok(m)
}

/// All cloud files concatenated, in the LiDAR frame.
fn load_clouds(paths: &[PathBuf]) -> Result<PointCloud> {
    let mut points = Vec::new();
    for p in paths {
        points.extend(read_cloud(p, LIDAR_FRAME)?.into_points());
    }
    PointCloud::new(points, LIDAR_FRAME)
}

#[derive(Debug, Serialize, Deserialize)]
struct DepthSummary {
    d_f: usize,
    cameras: Vec<String>,
}

/// Tensor files written by `depth` for one camera.
pub fn depth_file_names(camera: &str) -> (String, String) {
    (
        format!("{camera}.depth.lapt"),
        format!("{camera}.depth_lowres.lapt"),
    )
}

fn cmd_depth(args: &DepthArgs) -> Result<()> {
    let m = manifest(&args.run)?;
    let calib = Calibration::load(m.calibration_path()?)?;
    m.check_inputs(&calib, false)?;
    let out = m.out_dir()?;
    let d_f = m.d_f.unwrap_or(DEFAULT_DF);
    let cloud = load_clouds(&m.clouds)?;
    let depths = rig_depth(&cloud, &calib, d_f)?;
    for (cam, (full, low)) in calib.cameras.iter().zip(&depths) {
        let (full_name, low_name) = depth_file_names(&cam.name);
        depth_to_tensor(full).write(&out.join(&full_name))?;
        depth_to_tensor(low.image()).write(&out.join(&low_name))?;
        if args.run.render {
            render::write_png(
                &out.join(format!("{}.depth.png", cam.name)),
                &render::depth_png(full),
            )?;
            render::write_png(
                &out.join(format!("{}.depth_lowres.png", cam.name)),
                &render::depth_png(low.image()),
            )?;
        }
        println!(
            "{}: {} of {} pixels with depth, {} of {} at d_f = {d_f}",
            cam.name,
            full.valid_count(),
            full.width() * full.height(),
            low.image().valid_count(),
            low.width() * low.height()
        );
    }
    io::write_json(
        &out.join("depth.json"),
        &DepthSummary {
            d_f,
            cameras: calib.cameras.iter().map(|c| c.name.clone()).collect(),
        },
    )
}

fn cmd_bev(args: &BevArgs) -> Result<()> {
    let mut m = manifest(&args.run)?;
    for (name, path) in &args.features {
        m.cameras.insert(
            name.clone(),
            CameraSource {
                features: Some(path.clone()),
                image: None,
            },
        );
    }
    for (name, path) in &args.images {
        m.cameras.insert(
            name.clone(),
            CameraSource {
                features: None,
                image: Some(path.clone()),
            },
        );
    }
    let calib = Calibration::load(m.calibration_path()?)?;
    m.check_inputs(&calib, true)?;
    let out = m.out_dir()?;
    let d_f = m.d_f.unwrap_or(DEFAULT_DF);
    let config = grid_config(m.grid, &args.grid)?;

    let mut inputs = Vec::with_capacity(calib.cameras.len());
    for cam in &calib.cameras {
        let src = &m.cameras[&cam.name];
        let input = match (&src.features, &src.image) {
            (Some(p), _) => {
                CameraInput::Features(features_from_tensor(&Tensor::read(p)?, d_f).map_err(
                    |e| Error::malformed(p, format!("camera {}", cam.name), e.to_string()),
                )?)
            }
            (None, Some(p)) => CameraInput::Image(read_image(p)?),
            (None, None) => unreachable!("checked by check_inputs"),
        };
        inputs.push(input);
    }
    let cloud = load_clouds(&m.clouds)?;
    let grid = rig_bev(&cloud, &calib, inputs, d_f, &config)?;

    let path = out.join("bev.lapt");
    bev_to_tensor(&grid).write(&path)?;
    io::write_json(
        &sidecar_path(&path),
        &GridSidecar {
            grid: config,
            classes: None,
            n_f: Some(grid.n_f()),
            d_f: Some(d_f),
        },
    )?;
    let occupancy = occupancy_readout(&grid, args.threshold)?;
    if args.run.render {
        render::write_png(&out.join("occupancy.png"), &render::grid_png(&occupancy))?;
    }
    println!(
        "BEV grid {}×{}×{} written to {} ({} occupied cells)",
        grid.n_f(),
        config.x_cells(),
        config.y_cells(),
        path.display(),
        occupancy.count()
    );
    Ok(())
}

fn cmd_gt(args: &GtArgs) -> Result<()> {
    let ann = calib::load_annotations(&args.annotations)?;
    let grouping = match &args.classes {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            ClassGrouping::from_json(&text)
                .map_err(|e| Error::malformed(p, "classes", e.to_string()))?
        }
        None => ClassGrouping::identity(&ann.labels())
            .map_err(|e| Error::malformed(&args.annotations, "labels", e.to_string()))?,
    };
    let config = grid_config(None, &args.grid)?;
    let sem = rasterize_semantic(&ann, &grouping, &config)?;
    let path = args.out.join("gt.lapt");
    semantic_to_tensor(&sem).write(&path)?;
    io::write_json(
        &sidecar_path(&path),
        &GridSidecar {
            grid: config,
            classes: Some(sem.classes().to_vec()),
            n_f: None,
            d_f: None,
        },
    )?;
    for (c, name) in sem.classes().iter().enumerate() {
        let mask = sem.class_mask(c, 0.5);
        if args.render {
            render::write_png(
                &args.out.join(format!("gt_{name}.png")),
                &render::grid_png(&mask),
            )?;
        }
        println!("{name}: {} cells", mask.count());
    }
    Ok(())
}

/// Per-class report of `pred` against `gt`, the ground truth's sidecar
/// supplying classes and grid.
pub fn evaluate_files(pred: &Path, gt: &Path, threshold: f64) -> Result<EvalReport> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid(format!(
            "--threshold must be in [0, 1], got {threshold}"
        )));
    }
    let side: GridSidecar = io::read_json(&sidecar_path(gt))?;
    let classes = side
        .classes
        .clone()
        .ok_or_else(|| Error::malformed(sidecar_path(gt), "classes", "missing"))?;
    let gt_grid = semantic_from_tensor(&Tensor::read(gt)?, classes.clone(), side.grid)
        .map_err(|e| Error::malformed(gt, "grid", e.to_string()))?;
    if !gt_grid.is_binary() {
        return Err(Error::malformed(gt, "grid", "ground truth must be binary"));
    }
    let pred_grid = semantic_from_tensor(&Tensor::read(pred)?, classes.clone(), side.grid)
        .map_err(|e| Error::malformed(pred, "grid", e.to_string()))?;
    let mut report = EvalReport::new(classes.clone());
    for (c, name) in classes.iter().enumerate() {
        report.add(
            name,
            &pred_grid.class_mask(c, threshold as f32),
            &gt_grid.class_mask(c, 0.5),
        )?;
    }
    Ok(report)
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let report = evaluate_files(&args.pred, &args.gt, args.threshold)?;
    println!("{}", report.table_header());
    println!("{}", report.table_row(&args.label));
    if let Some(out) = &args.out {
        io::write_json(&out.join("report.json"), &report)?;
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let mut scene = match &args.scene {
        Some(p) => calib::load_scene(p)?,
        None => demo_scene(args.width, args.height)?,
    };
    if let Some(p) = args.dropout {
        scene.lidar.dropout = p;
    }
    let cloud = raycast(&scene, args.seed)?;
    let out = &args.out;
    let calibration = Calibration::from(&scene);
    io::write_atomic(&out.join("calib.json"), calibration.to_json().as_bytes())?;
    io::write_atomic(
        &out.join("scene.json"),
        calib::scene_to_json(&scene).as_bytes(),
    )?;
    io::cloud::cloud_to_tensor(&cloud).write(&out.join("cloud.lapt"))?;
    io::write_json(
        &out.join("annotations.json"),
        &crate::groundtruth::Annotations {
            boxes: scene.boxes.clone(),
            polygons: vec![],
        },
    )?;

    let mut cameras = std::collections::BTreeMap::new();
    for cam in &scene.cameras {
        let img = render_image(&scene, cam);
        let name = format!("{}.image.lapt", cam.name);
        image_to_tensor(&img).write(&out.join(&name))?;
        depth_to_tensor(&render_ideal_depth(&scene, cam))
            .write(&out.join(format!("{}.ideal_depth.lapt", cam.name)))?;
        if args.render {
            let mut png = std::io::Cursor::new(Vec::new());
            img.write_to(&mut png, image::ImageFormat::Png)
                .map_err(|e| Error::invalid(format!("PNG encoding failed: {e}")))?;
            render::write_png(&out.join(format!("{}.png", cam.name)), &png.into_inner())?;
        }
        cameras.insert(
            cam.name.clone(),
            CameraSource {
                features: None,
                image: Some(PathBuf::from(name)),
            },
        );
    }
    let manifest = RunManifest {
        calibration: Some("calib.json".into()),
        clouds: vec!["cloud.lapt".into()],
        cameras,
        grid: Some(GridConfig::default()),
        d_f: Some(args.d_f),
        classes: None,
        out: Some("out".into()),
    };
    io::write_json(&out.join("manifest.json"), &manifest)?;
    let in_vehicle = transform_points(&cloud, &scene.lidar_pose.inverse())?;
    println!(
        "{} LiDAR points, {} cameras, {} boxes written to {} (vehicle-frame z range {:.2}..{:.2} m)",
        cloud.len(),
        scene.cameras.len(),
        scene.boxes.len(),
        out.display(),
        in_vehicle.points().iter().map(|p| p.z).fold(f64::INFINITY, f64::min),
        in_vehicle.points().iter().map(|p| p.z).fold(f64::NEG_INFINITY, f64::max),
    );
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Depth(a) => cmd_depth(a),
        Command::Bev(a) => cmd_bev(a),
        Command::Gt(a) => cmd_gt(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
