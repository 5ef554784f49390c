use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use handtrack::harness::{self, run, tables, Manifest};
use handtrack::registration::SolverConfig;

const EXIT_INPUT: u8 = 2;
const EXIT_LOST: u8 = 3;

#[derive(Parser)]
#[command(name = "handtrack", version, about = "Batch hand pose tracking from depth sequences")]
struct Cli {
    /// Log per-frame progress (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run manifest (TOML).
    manifest: PathBuf,
    /// Output directory, overriding the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic sequence from the manifest's [generate] section.
    Generate(Common),
    /// Preprocess every frame and dump depth and edge images.
    Preprocess(Common),
    /// Track the sequence and write poses, traces and the report.
    Track {
        #[command(flatten)]
        common: Common,
        /// Solver config file replacing the manifest's [config].
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write per-frame overlay images.
        #[arg(long)]
        overlays: bool,
    },
    /// Score a pose table against the manifest's ground truth.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        poses: PathBuf,
    },
    /// Track once per cell of the manifest's [sweep] grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Dump the colliding triangle pairs of one pose.
    CollideDebug {
        #[command(flatten)]
        common: Common,
        /// Take the pose from this table instead of the ground truth.
        #[arg(long)]
        poses: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        frame: usize,
    },
}

fn load_manifest(c: &Common) -> handtrack::Result<Manifest> {
    let mut m = Manifest::load(&c.manifest)?;
    if let Some(out) = &c.out {
        m.output_dir = std::path::absolute(out).unwrap_or_else(|_| out.clone());
    }
    Ok(m)
}

fn with_config(m: &mut Manifest, path: &Option<PathBuf>) -> handtrack::Result<()> {
    if let Some(p) = path {
        m.config = SolverConfig::load(p)?;
    }
    Ok(())
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(d) = path.parent() {
        std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Generate(c) => {
            let m = load_manifest(&c)?;
            let g = run::write_generated(&m)?;
            println!("wrote {} frames; tracking manifest {}", g.frames, g.manifest_path.display());
            if !g.out_of_frustum.is_empty() {
                eprintln!("warning: model leaves the image in frames {:?}", g.out_of_frustum);
            }
        }
        Command::Preprocess(c) => {
            let m = load_manifest(&c)?;
            let rows = harness::preprocess_sequence(&m)?;
            for r in &rows {
                println!("frame {} points {} normals {} edges {}", r.frame, r.points, r.valid_normals, r.edges);
            }
        }
        Command::Track { common, config, overlays } => {
            let mut m = load_manifest(&common)?;
            with_config(&mut m, &config)?;
            m.overlays |= overlays;
            let t = harness::run_tracking(&m, &m.config)?;
            let lost = t.results.iter().filter(|r| r.lost).count();
            println!("tracked {} frames, {lost} lost; poses in {}", t.results.len(), m.output_path().display());
            if let Some(r) = &t.report {
                println!("mean {:.4} px  std {:.4} px  max {:.4} px", r.mean_px, r.std_px, r.max_px);
            }
            if t.lost_fraction() > 0.5 {
                eprintln!("tracking lost on more than half of the frames");
                return Ok(EXIT_LOST);
            }
        }
        Command::Eval { common, poses } => {
            let m = load_manifest(&common)?;
            let r = harness::evaluate_pose_file(&m, &poses)?;
            let text = r.to_text();
            write(&m.output_path().join(run::REPORT_FILE), &text)?;
            print!("{text}");
        }
        Command::Sweep { common, config } => {
            let mut m = load_manifest(&common)?;
            with_config(&mut m, &config)?;
            let cells = harness::sweep(&m)?;
            let text = harness::sweep_table(&cells);
            write(&m.output_path().join("sweep.txt"), &text)?;
            print!("{text}");
        }
        Command::CollideDebug { common, poses, frame } => {
            let m = load_manifest(&common)?;
            let model = m.load_model()?;
            let pose = match &poses {
                Some(p) => tables::load_poses(p)?
                    .into_iter()
                    .find(|r| r.frame == frame)
                    .ok_or_else(|| handtrack::Error::InvalidArgument(format!("no frame {frame} in {}", p.display())))?
                    .pose,
                None => {
                    let seq = harness::open_sequence(&m)?;
                    match seq.truth {
                        Some(t) => t
                            .get(frame)
                            .cloned()
                            .ok_or_else(|| handtrack::Error::InvalidArgument(format!("no ground truth for frame {frame}")))?,
                        None => run::initial_pose(&m, &model.hand, &seq)?,
                    }
                }
            };
            let camera = run::resolve_camera(&m).unwrap_or_default();
            let d = harness::collision_debug(&model.hand, &pose, &m.config)?;
            let out = m.output_path();
            write(&out.join("collisions.txt"), &run::collision_debug_text(&d))?;
            let img = run::collision_image(&model.hand, &pose, &camera, &d)?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("collisions.ppm"), img)?;
            println!("{} colliding pairs, penetration {}", d.pairs.len(), d.penetration);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let input = e
                .downcast_ref::<handtrack::Error>()
                .map_or(false, handtrack::Error::is_input_error);
            ExitCode::from(if input { EXIT_INPUT } else { 1 })
        }
    }
}
