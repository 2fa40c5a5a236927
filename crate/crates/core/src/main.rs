use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use photo3d::camera::{Camera, DepthModel};
use photo3d::config::PipelineConfig;
use photo3d::export::{glb_bytes, read_glb, write_obj};
use photo3d::geom::Grid;
use photo3d::image_io::{load_color, load_depth, save_color};
use photo3d::ldi::Ldi;
use photo3d::mesh::ldi_to_mesh;
use photo3d::metrics::{masked_recon_losses, psnr, ssim, Image, SsimParams};
use photo3d::photo::{build_photo, input_camera, make_backend};
use photo3d::preprocess::{normalize_disparity, DepthMode};
use photo3d::render::{naive_warp, render_trajectory, render_view, Trajectory};
use photo3d::scenes::{hole_margin, layer_shift, Rect, Scene};
use photo3d::{Error, Result};

/// Turn a single RGB-D image into a layered, inpainted 3D photo.
#[derive(Parser)]
#[command(name = "photo3d", version)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, env = "PHOTO3D_CONFIG")]
    config: Option<PathBuf>,
    /// Seed for the optional edge-order shuffle (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Depth,
    Disparity,
}

#[derive(Clone, Copy, ValueEnum)]
enum SceneArg {
    TwoLayer,
    Nested,
}

#[derive(Subcommand)]
enum Command {
    /// Build the LDI and mesh from a color image and a depth map.
    Build {
        #[arg(long)]
        color: PathBuf,
        /// Depth as PFM or 16-bit PNG.
        #[arg(long)]
        depth: PathBuf,
        /// Whether the depth file holds depth or disparity (overrides the config).
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Run directory for all artifacts.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a camera trajectory from a glb or LDI container.
    Render {
        /// `.glb` mesh or `.ldi` container.
        #[arg(long)]
        input: PathBuf,
        /// Trajectory JSON.
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Frame size; required for glb input unless the trajectory sets it.
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        height: Option<usize>,
    },
    /// Naive warp against the full pipeline on a synthetic scene.
    Compare {
        #[arg(long, value_enum, default_value = "two-layer")]
        scene: SceneArg,
        #[arg(long, default_value_t = 128)]
        size: usize,
        /// Foreground shifts in pixels.
        #[arg(long, value_delimiter = ',', default_value = "0,2,5,10")]
        baselines: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare two images; optional masks enable the reconstruction losses.
    Metrics {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        /// Synthesis mask (nonzero = inside).
        #[arg(long, requires = "context")]
        synthesis: Option<PathBuf>,
        #[arg(long, requires = "synthesis")]
        context: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("photo3d: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    match cli.command {
        Command::Build {
            color,
            depth,
            mode,
            out,
        } => {
            if let Some(m) = mode {
                cfg.depth_mode = match m {
                    ModeArg::Depth => DepthMode::Depth,
                    ModeArg::Disparity => DepthMode::Disparity,
                };
            }
            cmd_build(&color, &depth, &cfg, &out)
        }
        Command::Render {
            input,
            trajectory,
            out,
            width,
            height,
        } => cmd_render(&input, &trajectory, &out, width, height, &cfg),
        Command::Compare {
            scene,
            size,
            baselines,
            out,
        } => cmd_compare(scene, size, &baselines, &out, &cfg),
        Command::Metrics {
            image,
            reference,
            synthesis,
            context,
        } => cmd_metrics(&image, &reference, synthesis.as_deref(), context.as_deref()),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

#[derive(Serialize)]
struct ManifestEntry {
    file: String,
    bytes: usize,
    sha256: String,
}

/// Write `files` under `dir` and a manifest listing their hashes.
fn write_with_manifest(dir: &Path, files: Vec<(&str, Vec<u8>)>) -> Result<()> {
    let mut entries = Vec::new();
    for (name, bytes) in files {
        write(&dir.join(name), &bytes)?;
        entries.push(ManifestEntry {
            file: name.to_string(),
            bytes: bytes.len(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
    }
    write(&dir.join("manifest.json"), serde_json::to_vec_pretty(&entries)?)
}

fn cmd_build(color: &Path, depth: &Path, cfg: &PipelineConfig, out: &Path) -> Result<()> {
    let color = load_color(color)?;
    let depth = load_depth(depth)?;
    create_dir(out)?;
    let backend = make_backend(cfg, out);
    let built = build_photo(&color, &depth, cfg, backend.as_ref())?;
    let mut obj = Vec::new();
    write_obj(&mut obj, &built.mesh).map_err(|e| Error::Io {
        path: out.join("mesh.obj"),
        source: e,
    })?;
    write_with_manifest(
        out,
        vec![
            ("scene.ldi", built.ldi.to_container_bytes()),
            ("mesh.glb", glb_bytes(&built.mesh)?),
            ("mesh.obj", obj),
            ("report.json", serde_json::to_vec_pretty(&built.report)?),
            ("config.toml", cfg.to_toml().into_bytes()),
        ],
    )?;
    // kept out of the manifest: wall-clock numbers differ between runs
    write(&out.join("timings.json"), serde_json::to_vec_pretty(&built.timings)?)?;
    println!(
        "{} edges, {} levels, {} synthesized pixels -> {}",
        built.report.edges,
        built.report.levels,
        built.report.synthesized_pixels,
        out.display()
    );
    Ok(())
}

fn cmd_render(
    input: &Path,
    trajectory: &Path,
    out: &Path,
    width: Option<usize>,
    height: Option<usize>,
    cfg: &PipelineConfig,
) -> Result<()> {
    let text = fs::read_to_string(trajectory).map_err(|e| Error::Io {
        path: trajectory.to_path_buf(),
        source: e,
    })?;
    let traj = Trajectory::from_json(&text)?;
    let is_glb = input.extension().is_some_and(|e| e.eq_ignore_ascii_case("glb"));
    let (mesh, w, h) = if is_glb {
        let mesh = read_glb(input)?;
        let w = width.or(traj.width);
        let h = height.or(traj.height);
        let (Some(w), Some(h)) = (w, h) else {
            return Err(Error::Input("glb input needs --width/--height or a sized trajectory".into()));
        };
        (mesh, w, h)
    } else {
        let bytes = fs::read(input).map_err(|e| Error::Io {
            path: input.to_path_buf(),
            source: e,
        })?;
        let ldi = Ldi::from_container_bytes(&bytes)?;
        let (w, h) = (ldi.width(), ldi.height());
        let cam = input_camera(cfg, w, h)?;
        (ldi_to_mesh(&ldi, &cam, cfg.depth_model), width.unwrap_or(w), height.unwrap_or(h))
    };
    let camera = match cfg.camera {
        Some(k) => Camera::new(k, nalgebra_identity())?,
        None => Camera::default_for(w, h),
    };
    create_dir(out)?;
    let frames = render_trajectory(&mesh, &camera, w, h, &traj)?;
    for (i, f) in frames.iter().enumerate() {
        save_color(&out.join(format!("frame_{i:04}.png")), &f.color)?;
    }
    println!("{} frames -> {}", frames.len(), out.display());
    Ok(())
}

fn nalgebra_identity() -> nalgebra::Isometry3<f64> {
    nalgebra::Isometry3::identity()
}

#[derive(Serialize)]
struct CompareRow {
    baseline_px: f64,
    translation: f64,
    margin: usize,
    naive_holes: usize,
    pipeline_holes: usize,
}

#[derive(Serialize)]
struct CompareReport {
    scene: &'static str,
    width: usize,
    height: usize,
    edges: usize,
    levels: usize,
    rows: Vec<CompareRow>,
}

fn cmd_compare(scene: SceneArg, size: usize, baselines: &[f64], out: &Path, cfg: &PipelineConfig) -> Result<()> {
    if size < 32 {
        return Err(Error::Input("scene size must be at least 32".into()));
    }
    let q = size / 4;
    let (name, sc) = match scene {
        SceneArg::TwoLayer => (
            "two-layer",
            Scene::two_layer(size, size, Rect { x0: q + q / 2, y0: q + q / 2, x1: 2 * q + q / 2, y1: 2 * q + q / 2 }),
        ),
        SceneArg::Nested => (
            "nested",
            Scene::nested(size, size, size / 2, Rect { x0: q + q / 4, y0: q + q / 2, x1: 2 * q + q / 4, y1: 2 * q + q / 2 }),
        ),
    };
    let mut cfg = cfg.clone();
    cfg.depth_mode = DepthMode::Disparity;
    create_dir(out)?;
    let backend = make_backend(&cfg, out);
    let built = build_photo(&sc.color, &sc.disparity, &cfg, backend.as_ref())?;
    let disparity = normalize_disparity(&sc.disparity, DepthMode::Disparity)?;
    let src = built.camera;
    let model: DepthModel = cfg.depth_model;
    let near_shift_per_unit = layer_shift(1.0, model, src.fx, 1.0);

    let mut rows = Vec::new();
    for (i, &px) in baselines.iter().enumerate() {
        let t = px / near_shift_per_unit;
        let dst = src.with_pose(src.pose * nalgebra::Isometry3::translation(t, 0.0, 0.0));
        let naive = naive_warp(&sc.color, &disparity, model, &src, &dst)?;
        let ours = render_view(&built.mesh, &dst, size, size);
        let margin = hole_margin(px);
        rows.push(CompareRow {
            baseline_px: px,
            translation: t,
            margin,
            naive_holes: naive.holes_within(margin),
            pipeline_holes: ours.holes_within(margin),
        });
        let mut side = Grid::new(2 * size, size, [0u8; 3]);
        for y in 0..size {
            for x in 0..size {
                *side.get_mut(x, y) = *naive.color.get(x, y);
                *side.get_mut(size + x, y) = *ours.color.get(x, y);
            }
        }
        save_color(&out.join(format!("compare_{i:02}.png")), &side)?;
    }
    let report = CompareReport {
        scene: name,
        width: size,
        height: size,
        edges: built.report.edges,
        levels: built.report.levels,
        rows,
    };
    let json = serde_json::to_string_pretty(&report)?;
    write(&out.join("compare.json"), &json)?;
    println!("{json}");
    Ok(())
}

fn load_mask(path: &Path, w: usize, h: usize) -> Result<Vec<bool>> {
    let m = load_color(path)?;
    if (m.width, m.height) != (w, h) {
        return Err(Error::Input(format!("mask {} has the wrong size", path.display())));
    }
    Ok(m.data.iter().map(|p| p.iter().any(|&v| v > 0)).collect())
}

#[derive(Serialize)]
struct MetricsReport {
    /// `null` when the images are identical (infinite PSNR).
    psnr: Option<f64>,
    identical: bool,
    ssim: f64,
    l_synthesis: Option<f64>,
    l_context: Option<f64>,
}

fn cmd_metrics(image: &Path, reference: &Path, synthesis: Option<&Path>, context: Option<&Path>) -> Result<()> {
    let a = load_color(image)?;
    let b = load_color(reference)?;
    let ia = Image::from_rgb8(a.width, a.height, &a.data)?;
    let ib = Image::from_rgb8(b.width, b.height, &b.data)?;
    let p = psnr(&ia, &ib)?;
    let s = ssim(&ia, &ib, SsimParams::default())?;
    let (ls, lc) = match (synthesis, context) {
        (Some(sp), Some(cp)) => {
            let sm = load_mask(sp, a.width, a.height)?;
            let cm = load_mask(cp, a.width, a.height)?;
            // losses on [0, 1] intensities
            let scale = |im: &Image| Image::new(im.width, im.height, im.channels, im.data.iter().map(|v| v / 255.0).collect());
            let (ls, lc) = masked_recon_losses(&scale(&ia)?, &scale(&ib)?, &sm, &cm)?;
            (Some(ls), Some(lc))
        }
        _ => (None, None),
    };
    let report = MetricsReport {
        psnr: p.is_finite().then_some(p),
        identical: p.is_infinite(),
        ssim: s,
        l_synthesis: ls,
        l_context: lc,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
