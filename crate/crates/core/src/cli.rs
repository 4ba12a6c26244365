//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors (missing
//! or malformed files, invalid inputs).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use crate::decompose::{decompose_labels, decompose_yinyang, recompose_yinyang, resample_equirect};
use crate::error::{Error, Result};
use crate::gaussians::{refine_colors, PixelAlignedParams, RefineOptions, RefineView};
use crate::image::FieldImage;
use crate::io_formats::{
    read_cloud, read_image, read_pose_file, write_cloud, write_image, write_pose_file, PoseRecord,
};
use crate::metrics::{psnr, ssim, PSNR_DISPLAY_CAP};
use crate::pipeline::{run_pipeline, Evaluation, PipelineConfig, Target, View, SYNTH_SUPERSAMPLE};
use crate::pose::Pose;
use crate::rasterizer::{rasterize_with, render_yinyang_with, RasterConfig};
use crate::scene_synth::{build_scene, SceneKind};
use crate::sphere_geom::{cubemap_rig, GridSpec};
use crate::sweep::{match_segments_multi, LabelMap, SweepParams, ViewFeatures};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "yysplat", version, about = "Yin-Yang omnidirectional Gaussian splatting toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for every random choice (scene synthesis)
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Text file of key=value defaults for this subcommand's flags; flags
    /// given on the command line win
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write one key=value record per evaluated metric to this file
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RenderMode {
    Equirect,
    Yinyang,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ImageFormat {
    Png,
    Pfm,
}

impl ImageFormat {
    fn ext(self) -> &'static str {
        match self {
            ImageFormat::Png => "png",
            ImageFormat::Pfm => "pfm",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Nearest depth candidate
    #[arg(long, default_value_t = 1.0)]
    pub d_near: f64,
    /// Farthest depth candidate
    #[arg(long, default_value_t = 100.0)]
    pub d_far: f64,
    /// Number of depth candidates
    #[arg(long, default_value_t = 64)]
    pub depths: usize,
    /// Feature window side (odd)
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    /// Yin/Yang feature height (default: half the input height)
    #[arg(long)]
    pub feature_height: Option<usize>,
}

impl SweepArgs {
    fn params(&self) -> SweepParams {
        SweepParams {
            d_near: self.d_near,
            d_far: self.d_far,
            depths: self.depths,
            window: self.window,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split an equirect image into Yin and Yang images
    Decompose {
        /// Equirect input (PNG or PFM)
        #[arg(long)]
        input: PathBuf,
        /// Output height (default: half the input height)
        #[arg(long)]
        out_height: Option<usize>,
        /// Yin output path
        #[arg(long)]
        yin: PathBuf,
        /// Yang output path
        #[arg(long)]
        yang: PathBuf,
        /// Nearest-neighbour sampling, for label maps
        #[arg(long)]
        labels: bool,
    },
    /// Blend Yin and Yang images back into an equirect image
    Recompose {
        /// Yin input
        #[arg(long)]
        yin: PathBuf,
        /// Yang input
        #[arg(long)]
        yang: PathBuf,
        /// Output equirect height (default: twice the Yin height)
        #[arg(long)]
        height: Option<usize>,
        /// Output path
        #[arg(long)]
        output: PathBuf,
    },
    /// Resample an equirect image onto the six faces of a cubemap
    Cubemap {
        /// Equirect input
        #[arg(long)]
        input: PathBuf,
        /// Face side in pixels
        #[arg(long, default_value_t = 256)]
        face_res: usize,
        /// Output directory (face_<n> images and poses.txt)
        #[arg(long)]
        out_dir: PathBuf,
        /// Face image format
        #[arg(long, value_enum, default_value_t = ImageFormat::Pfm)]
        format: ImageFormat,
    },
    /// Sphere-sweep two equirect views; writes depth maps and cost volumes
    Sweep {
        /// The two equirect views
        #[arg(long, num_args = 2, required = true)]
        images: Vec<PathBuf>,
        /// Pose file whose first two records belong to the views
        #[arg(long)]
        poses: PathBuf,
        #[command(flatten)]
        sweep: SweepArgs,
        /// Output directory
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Render a Gaussian cloud
    Render {
        /// Cloud file
        #[arg(long)]
        cloud: PathBuf,
        /// Pose file
        #[arg(long)]
        poses: PathBuf,
        /// Record of the pose file to render from
        #[arg(long, default_value_t = 0)]
        pose_index: usize,
        /// Direct equirect rasterization or two-pass Yin-Yang
        #[arg(long, value_enum, default_value_t = RenderMode::Yinyang)]
        mode: RenderMode,
        /// Output width (height is half of it)
        #[arg(long, default_value_t = 512)]
        width: usize,
        /// Background colour as r,g,b in [0, 1]
        #[arg(long, default_value = "0,0,0")]
        bg: String,
        /// Output image
        #[arg(long)]
        output: PathBuf,
        /// Optional accumulated-alpha output
        #[arg(long)]
        alpha: Option<PathBuf>,
    },
    /// Refine cloud colours against reference equirect images
    Refine {
        /// Cloud file
        #[arg(long)]
        cloud: PathBuf,
        /// Reference images, matched in order to the pose records
        #[arg(long, num_args = 1.., required = true)]
        images: Vec<PathBuf>,
        /// Pose file
        #[arg(long)]
        poses: PathBuf,
        /// Gradient steps
        #[arg(long, default_value_t = 100)]
        iterations: usize,
        /// Step length relative to the preconditioned step
        #[arg(long, default_value_t = 0.5)]
        lr: f64,
        /// Refined cloud output
        #[arg(long)]
        output: PathBuf,
    },
    /// Match segments between two views through their cost volumes
    Match {
        /// The two equirect views
        #[arg(long, num_args = 2, required = true)]
        images: Vec<PathBuf>,
        /// Equirect label maps of the two views
        #[arg(long, num_args = 2, required = true)]
        labels: Vec<PathBuf>,
        /// Pose file whose first two records belong to the views
        #[arg(long)]
        poses: PathBuf,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// PSNR and SSIM between predicted and reference images
    Eval {
        /// Predicted images
        #[arg(long, num_args = 1.., required = true)]
        pred: Vec<PathBuf>,
        /// Reference images, in the same order
        #[arg(long = "ref", num_args = 1.., required = true)]
        reference: Vec<PathBuf>,
    },
    /// Write a synthetic scene: cloud, poses and ground-truth rasters
    Synth {
        /// shell, textured-room, polar-field or two-objects
        #[arg(long, default_value = "textured-room")]
        scene: String,
        /// Equirect height of the ground-truth rasters
        #[arg(long, default_value_t = 128)]
        height: usize,
        /// Output directory
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Full reconstruction from two views, rendered and scored at targets
    Pipeline {
        /// Synthetic scene to use when no images are given
        #[arg(long, default_value = "textured-room")]
        scene: String,
        /// Two reference equirect views instead of a synthetic scene
        #[arg(long, num_args = 2, requires = "poses")]
        images: Vec<PathBuf>,
        /// Pose file: two reference records, then target records
        #[arg(long)]
        poses: Option<PathBuf>,
        /// Reference images for the target records, in order
        #[arg(long, num_args = 1..)]
        targets: Vec<PathBuf>,
        /// Equirect height of synthetic inputs
        #[arg(long, default_value_t = 128)]
        height: usize,
        #[command(flatten)]
        sweep: SweepArgs,
        /// Opacity of constructed Gaussians
        #[arg(long, default_value_t = 1.0)]
        opacity: f64,
        /// Gaussian size relative to the pixel footprint
        #[arg(long, default_value_t = 1.0)]
        scale_factor: f64,
        /// Colour refinement steps (0 disables)
        #[arg(long, default_value_t = 0)]
        refine_iterations: usize,
        /// Refinement step length
        #[arg(long, default_value_t = 0.5)]
        lr: f64,
        /// Output equirect height (default: input height)
        #[arg(long)]
        render_height: Option<usize>,
        /// Output directory
        #[arg(long)]
        out_dir: PathBuf,
    },
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit code. Messages go to stdout/stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match parse(&argv) {
        Ok(cli) => cli,
        Err(Parsed::Exit(code)) => return code,
        Err(Parsed::Data(e)) => {
            eprintln!("error: {e}");
            return EXIT_DATA;
        }
    };
    let pool = match cli.global.threads {
        Some(0) => {
            eprintln!("error: --threads must be at least 1");
            return EXIT_USAGE;
        }
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return EXIT_DATA;
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

enum Parsed {
    Exit(i32),
    Data(Error),
}

fn clap_exit(e: clap::Error) -> Parsed {
    let _ = e.print();
    match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            Parsed::Exit(EXIT_OK)
        }
        _ => Parsed::Exit(EXIT_USAGE),
    }
}

fn parse(argv: &[OsString]) -> std::result::Result<Cli, Parsed> {
    let cmd = Cli::command();
    let matches = cmd.clone().try_get_matches_from(argv).map_err(clap_exit)?;
    let cli = Cli::from_arg_matches(&matches).map_err(clap_exit)?;
    let Some(path) = &cli.global.config else {
        return Ok(cli);
    };
    let text = fs::read_to_string(path).map_err(|e| Parsed::Data(Error::io(path, e)))?;
    let pairs = parse_config(&text, path).map_err(Parsed::Data)?;
    let Some((sub_name, sub_matches)) = matches.subcommand() else {
        return Ok(cli);
    };
    // Only keys the command line left unset are injected, right after the
    // subcommand name.
    let mut injected = Vec::new();
    for (key, value) in pairs {
        let id = key.replace('-', "_");
        let given = sub_matches
            .try_get_raw(&id)
            .ok()
            .and_then(|_| sub_matches.value_source(&id))
            == Some(ValueSource::CommandLine);
        if given {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match value.as_str() {
            "true" => injected.push(OsString::from(flag)),
            "false" => {}
            _ => {
                injected.push(OsString::from(flag));
                injected.extend(value.split_whitespace().map(OsString::from));
            }
        }
    }
    let pos = argv
        .iter()
        .position(|a| a.to_str() == Some(sub_name))
        .expect("subcommand token present");
    let mut full: Vec<OsString> = argv[..=pos].to_vec();
    full.extend(injected);
    full.extend_from_slice(&argv[pos + 1..]);
    let matches = cmd.try_get_matches_from(full).map_err(clap_exit)?;
    Cli::from_arg_matches(&matches).map_err(clap_exit)
}

fn parse_config(text: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            location: format!("{}:{}", path.display(), n + 1),
            message: "expected key=value".into(),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn execute(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Decompose {
            input,
            out_height,
            yin,
            yang,
            labels,
        } => {
            let img = read_image(input)?;
            let h = out_height.unwrap_or(img.height() / 2);
            let (a, b) = if *labels {
                decompose_labels(&img, h)?
            } else {
                decompose_yinyang(&img, h)?
            };
            write_image(&a, yin)?;
            write_image(&b, yang)
        }
        Command::Recompose {
            yin,
            yang,
            height,
            output,
        } => {
            let a = read_image(yin)?;
            let b = read_image(yang)?;
            let grid = GridSpec::equirect(height.unwrap_or(2 * a.height()))?;
            write_image(&recompose_yinyang(&a, &b, grid)?, output)
        }
        Command::Cubemap {
            input,
            face_res,
            out_dir,
            format,
        } => {
            let img = read_image(input)?;
            create_dir(out_dir)?;
            let rig = cubemap_rig(*face_res)?;
            let mut records = Vec::new();
            for (i, (grid, pose)) in rig.iter().enumerate() {
                let face = resample_equirect(&img, *grid, false)?;
                write_image(&face, out_dir.join(format!("face_{i}.{}", format.ext())))?;
                records.push(PoseRecord::new(format!("face_{i}"), *pose));
            }
            write_pose_file(&records, out_dir.join("poses.txt"))
        }
        Command::Sweep {
            images,
            poses,
            sweep,
            out_dir,
        } => {
            let (imgs, ps) = load_pair(images, poses)?;
            let params = sweep.params();
            let cands = params.candidates()?;
            let fh = sweep.feature_height.unwrap_or(imgs[0].height() / 2);
            let feats = [
                ViewFeatures::from_equirect(&imgs[0], fh, params.window)?,
                ViewFeatures::from_equirect(&imgs[1], fh, params.window)?,
            ];
            create_dir(out_dir)?;
            for (t, s) in [(0, 1), (1, 0)] {
                let res = crate::sweep::sweep_view(&feats[t], &feats[s], &ps[t], &ps[s], &cands)?;
                for (gi, name) in ["yin", "yang"].iter().enumerate() {
                    write_image(&res.depth[gi], out_dir.join(format!("depth_v{t}_{name}.pfm")))?;
                    write_image(
                        &res.cost[gi].to_field_image(),
                        out_dir.join(format!("cost_v{t}_{name}.pfm")),
                    )?;
                }
            }
            Ok(())
        }
        Command::Render {
            cloud,
            poses,
            pose_index,
            mode,
            width,
            bg,
            output,
            alpha,
        } => {
            let cloud = read_cloud(cloud)?;
            let records = read_pose_file(poses)?;
            let rec = records.get(*pose_index).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "pose index {pose_index} out of range ({} records in {})",
                    records.len(),
                    poses.display()
                ))
            })?;
            if *width < 2 || width % 2 != 0 {
                return Err(Error::InvalidArgument(format!("width {width} must be even")));
            }
            let cfg = RasterConfig {
                background: parse_rgb(bg)?,
                ..Default::default()
            };
            let grid = GridSpec::equirect(width / 2)?;
            let (img, a) = match mode {
                RenderMode::Equirect => {
                    let out = rasterize_with(&cloud, &grid, &rec.pose, &cfg)?;
                    (out.image, out.alpha)
                }
                RenderMode::Yinyang => {
                    let out = render_yinyang_with(&cloud, &rec.pose, &grid, &cfg, None)?;
                    (out.image, out.alpha)
                }
            };
            write_image(&img, output)?;
            if let Some(path) = alpha {
                write_image(&a, path)?;
            }
            Ok(())
        }
        Command::Refine {
            cloud,
            images,
            poses,
            iterations,
            lr,
            output,
        } => {
            let cloud = read_cloud(cloud)?;
            let records = read_pose_file(poses)?;
            if records.len() < images.len() {
                return Err(Error::InvalidArgument(format!(
                    "{} images but only {} poses",
                    images.len(),
                    records.len()
                )));
            }
            let views = images
                .iter()
                .zip(&records)
                .map(|(p, r)| {
                    Ok(RefineView {
                        image: read_image(p)?,
                        pose: r.pose,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let opts = RefineOptions {
                iterations: *iterations,
                learning_rate: *lr,
                ..Default::default()
            };
            let (refined, report) = refine_colors(&cloud, &views, &opts)?;
            println!(
                "mse {:.6e} -> {:.6e} over {} steps",
                report.initial_loss(),
                report.final_loss(),
                report.loss_history.len() - 1
            );
            write_records(
                g,
                &[
                    vec![("metric", "mse_before".into()), ("value", fmt_f(report.initial_loss()))],
                    vec![("metric", "mse_after".into()), ("value", fmt_f(report.final_loss()))],
                ],
            )?;
            write_cloud(&refined, output)
        }
        Command::Match {
            images,
            labels,
            poses,
            sweep,
        } => {
            let (imgs, ps) = load_pair(images, poses)?;
            let params = sweep.params();
            let cands = params.candidates()?;
            let fh = sweep.feature_height.unwrap_or(imgs[0].height() / 2);
            let feats = [
                ViewFeatures::from_equirect(&imgs[0], fh, params.window)?,
                ViewFeatures::from_equirect(&imgs[1], fh, params.window)?,
            ];
            let label_maps = labels
                .iter()
                .map(|p| {
                    let img = read_image(p)?;
                    let (yin, yang) = decompose_labels(&img, fh)?;
                    Ok([
                        LabelMap::from_field_image(GridSpec::yin(fh)?, &yin)?,
                        LabelMap::from_field_image(GridSpec::yang(fh)?, &yang)?,
                    ])
                })
                .collect::<Result<Vec<_>>>()?;
            let res = crate::sweep::sweep_view(&feats[0], &feats[1], &ps[0], &ps[1], &cands)?;
            let table = match_segments_multi(
                &[(&res.cost[0], &label_maps[0][0]), (&res.cost[1], &label_maps[0][1])],
                &ps[0],
                &ps[1],
                &label_maps[1],
            )?;
            println!("{:>10} {:>10} {:>8} {:>8}", "src_label", "dst_label", "votes", "total");
            let mut records = Vec::new();
            for m in &table {
                println!("{:>10} {:>10} {:>8} {:>8}", m.src_label, m.dst_label, m.votes, m.total);
                records.push(vec![
                    ("src_label", m.src_label.to_string()),
                    ("dst_label", m.dst_label.to_string()),
                    ("votes", m.votes.to_string()),
                    ("total", m.total.to_string()),
                ]);
            }
            write_records(g, &records)
        }
        Command::Eval { pred, reference } => {
            if pred.len() != reference.len() {
                return Err(Error::InvalidArgument(format!(
                    "{} predictions but {} references",
                    pred.len(),
                    reference.len()
                )));
            }
            let mut evals = Vec::new();
            for (i, (p, r)) in pred.iter().zip(reference).enumerate() {
                let a = read_image(p)?;
                let b = read_image(r)?;
                evals.push(Evaluation {
                    pose_index: i,
                    psnr: psnr(&a, &b)?,
                    ssim: ssim(&a, &b)?,
                });
            }
            report_evaluations(g, &evals)
        }
        Command::Synth {
            scene,
            height,
            out_dir,
        } => {
            let kind: SceneKind = scene.parse()?;
            let scene = build_scene(kind, g.seed);
            let grid = GridSpec::equirect(*height)?;
            create_dir(out_dir)?;
            write_cloud(&scene.cloud, out_dir.join("cloud.yyg"))?;
            let mut records = Vec::new();
            let named = scene
                .reference_poses
                .iter()
                .enumerate()
                .map(|(i, p)| (format!("ref_{i}"), p))
                .chain(scene.target_poses.iter().enumerate().map(|(i, p)| (format!("target_{i}"), p)));
            for (name, pose) in named {
                let gt = scene.render_truth_supersampled(pose, &grid, SYNTH_SUPERSAMPLE);
                write_image(&gt.image, out_dir.join(format!("{name}.pfm")))?;
                write_image(&gt.image, out_dir.join(format!("{name}.png")))?;
                write_image(&gt.depth, out_dir.join(format!("{name}_depth.pfm")))?;
                write_image(&gt.ids, out_dir.join(format!("{name}_ids.pfm")))?;
                records.push(PoseRecord::new(name, *pose));
            }
            write_pose_file(&records, out_dir.join("poses.txt"))
        }
        Command::Pipeline {
            scene,
            images,
            poses,
            targets,
            height,
            sweep,
            opacity,
            scale_factor,
            refine_iterations,
            lr,
            render_height,
            out_dir,
        } => {
            let cfg = PipelineConfig {
                feature_height: sweep.feature_height,
                sweep: sweep.params(),
                gaussians: PixelAlignedParams {
                    opacity: *opacity,
                    scale_factor: *scale_factor,
                },
                refine_iterations: *refine_iterations,
                learning_rate: *lr,
                render_height: *render_height,
                raster: RasterConfig::default(),
            };
            let (views, target_list) = if images.is_empty() {
                synthetic_inputs(scene, g.seed, *height, render_height.unwrap_or(*height))?
            } else {
                file_inputs(images, poses.as_deref().expect("clap requires poses"), targets)?
            };
            let out = run_pipeline(&views, &target_list, &cfg)?;
            create_dir(out_dir)?;
            write_cloud(&out.cloud, out_dir.join("cloud.yyg"))?;
            for (vi, s) in out.sweeps.iter().enumerate() {
                for (gi, name) in ["yin", "yang"].iter().enumerate() {
                    write_image(&s.depth[gi], out_dir.join(format!("depth_v{vi}_{name}.pfm")))?;
                }
            }
            for (i, img) in out.renders.iter().enumerate() {
                write_image(img, out_dir.join(format!("render_{i}.pfm")))?;
                write_image(img, out_dir.join(format!("render_{i}.png")))?;
            }
            if let Some((a, b)) = out.refine_loss {
                println!("refinement mse {a:.6e} -> {b:.6e}");
            }
            report_evaluations(g, &out.evaluations)
        }
    }
}

type Inputs = ([View; 2], Vec<Target>);

fn synthetic_inputs(scene: &str, seed: u64, height: usize, out_height: usize) -> Result<Inputs> {
    let kind: SceneKind = scene.parse()?;
    let scene = build_scene(kind, seed);
    let grid = GridSpec::equirect(height)?;
    let out_grid = GridSpec::equirect(out_height)?;
    let views = [0, 1].map(|i| View {
        image: scene
            .render_truth_supersampled(&scene.reference_poses[i], &grid, SYNTH_SUPERSAMPLE)
            .image,
        pose: scene.reference_poses[i],
    });
    let targets = scene
        .target_poses
        .iter()
        .map(|&pose| Target {
            pose,
            reference: Some(scene.render_truth_supersampled(&pose, &out_grid, SYNTH_SUPERSAMPLE).image),
        })
        .collect();
    Ok((views, targets))
}

fn file_inputs(images: &[PathBuf], poses: &Path, targets: &[PathBuf]) -> Result<Inputs> {
    let (imgs, ps) = load_pair(images, poses)?;
    let records = read_pose_file(poses)?;
    let target_poses = &records[2..];
    if targets.len() > target_poses.len() {
        return Err(Error::InvalidArgument(format!(
            "{} target images but {} target poses",
            targets.len(),
            target_poses.len()
        )));
    }
    let target_list = target_poses
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(Target {
                pose: r.pose,
                reference: targets.get(i).map(read_image).transpose()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let [a, b] = imgs;
    Ok((
        [
            View { image: a, pose: ps[0] },
            View { image: b, pose: ps[1] },
        ],
        target_list,
    ))
}

fn load_pair(images: &[PathBuf], poses: &Path) -> Result<([FieldImage; 2], [Pose; 2])> {
    let records = read_pose_file(poses)?;
    if records.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "{} needs at least two pose records",
            poses.display()
        )));
    }
    let a = read_image(&images[0])?;
    let b = read_image(&images[1])?;
    Ok(([a, b], [records[0].pose, records[1].pose]))
}

fn parse_rgb(s: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvalidArgument(format!("background '{s}': {e}")))?;
    match parts.as_slice() {
        [r, g, b] if parts.iter().all(|x| x.is_finite()) => Ok([*r, *g, *b]),
        _ => Err(Error::InvalidArgument(format!(
            "background '{s}' must be three comma-separated numbers"
        ))),
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn fmt_f(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x}")
    }
}

fn report_evaluations(g: &GlobalArgs, evals: &[Evaluation]) -> Result<()> {
    println!("{:>6} {:>10} {:>10}", "pose", "psnr_db", "ssim");
    let mut records = Vec::new();
    for e in evals {
        println!(
            "{:>6} {:>10.4} {:>10.6}",
            e.pose_index,
            e.psnr.min(PSNR_DISPLAY_CAP),
            e.ssim
        );
        for (metric, value) in [("psnr", e.psnr), ("ssim", e.ssim)] {
            records.push(vec![
                ("pose_index", e.pose_index.to_string()),
                ("metric", metric.to_string()),
                ("value", fmt_f(value)),
            ]);
        }
    }
    write_records(g, &records)
}

/// Writes records as lines of space-separated key=value pairs.
fn write_records(g: &GlobalArgs, records: &[Vec<(&str, String)>]) -> Result<()> {
    let Some(path) = &g.report else {
        return Ok(());
    };
    let mut text = String::new();
    for rec in records {
        let line: Vec<String> = rec.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(text, "{}", line.join(" "));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
