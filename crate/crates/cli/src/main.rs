//! `spect`: simulate, reconstruct and inspect attenuated SPECT data.

mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use spect_core::cht::{solve_line, EDGE_MARGIN};
use spect_core::dbp::backproject;
use spect_core::io;
use spect_core::phantom::default_phantom;
use spect_core::recon::{profile, reconstruct, rmse, Region, DEFAULT_TRUNCATION_BOX};
use spect_core::sinogram::{add_poisson_noise, apply_truncation, differentiate_s};
use spect_core::{CoeffCache, Phantom, ReconConfig, Rect};

use crate::manifest::{Manifest, Stopwatch};

#[derive(Debug, Parser)]
#[command(
    name = "spect",
    version,
    about = "Attenuated SPECT reconstruction via cosh-weighted Hilbert inversion"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Rasterize a phantom.
    Phantom(PhantomArgs),
    /// Analytic exponential Radon transform of a phantom.
    Project(ProjectArgs),
    /// Add Poisson noise to a sinogram.
    Noise(NoiseArgs),
    /// Discard rays that miss a box.
    Truncate(TruncateArgs),
    /// Weighted differential backprojection only.
    Backproject(BackprojectArgs),
    /// Full reconstruction.
    Reconstruct(ReconstructArgs),
    /// Invert one standardized line from a text file.
    InvertLine(InvertLineArgs),
    /// Extract the column nearest `x1` as CSV.
    Profile(ProfileArgs),
    /// RMSE of an image against a reference.
    Metrics(MetricsArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct PhantomArgs {
    #[arg(long, default_value_t = 400)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    extent: f64,
    /// Ellipse table (default: the built-in phantom).
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    png: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct ProjectArgs {
    #[arg(long, allow_negative_numbers = true)]
    mu0: f64,
    #[arg(long, default_value_t = 720)]
    views: usize,
    #[arg(long, default_value_t = 400)]
    rays: usize,
    #[arg(long, default_value_t = 1.0)]
    smax: f64,
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct NoiseArgs {
    #[arg(long)]
    counts: f64,
    #[arg(long)]
    seed: u64,
    input: PathBuf,
    output: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct TruncateArgs {
    /// `x0,y0,x1,y1`
    #[arg(long = "box", allow_hyphen_values = true)]
    rect: Rect,
    input: PathBuf,
    output: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct BackprojectArgs {
    #[arg(long, default_value_t = 256)]
    grid: usize,
    #[arg(long, default_value_t = 1.0)]
    extent: f64,
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct ReconstructArgs {
    /// JSON configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Must match the sinogram's own value when given.
    #[arg(long, allow_negative_numbers = true)]
    mu0: Option<f64>,
    #[arg(long = "m-order")]
    m_order: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    /// Region-of-interest box `x0,y0,x1,y1` for truncated data.
    #[arg(long = "box", allow_hyphen_values = true)]
    rect: Option<Rect>,
    /// Use the default region-of-interest box.
    #[arg(long, conflicts_with = "rect")]
    default_box: bool,
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    png: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct InvertLineArgs {
    input: PathBuf,
    #[arg(long = "m-order", default_value_t = spect_core::cht::DEFAULT_MOMENT_ORDER)]
    m_order: usize,
    /// Resample the line to this many nodes.
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct ProfileArgs {
    #[arg(long, allow_negative_numbers = true)]
    x1: f64,
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct MetricsArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    input: PathBuf,
    /// `support`, `interior`, `all` or a box `x0,y0,x1,y1`.
    #[arg(long, default_value = "support", allow_hyphen_values = true)]
    region: String,
    /// Also write the JSON result here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct ReplayArgs {
    manifest: PathBuf,
}

fn load_phantom(spec: &Option<PathBuf>) -> Result<Phantom> {
    match spec {
        Some(path) => Phantom::load(path).with_context(|| format!("reading {}", path.display())),
        None => Ok(default_phantom()),
    }
}

fn parse_region(text: &str, support: f64) -> Result<Region> {
    Ok(match text {
        "support" => Region::support(support),
        "interior" => Region::interior(support),
        "all" => Region::All,
        other => Region::Box(
            other
                .parse()
                .with_context(|| format!("bad region {other:?}"))?,
        ),
    })
}

fn run_phantom(args: &PhantomArgs, m: &mut Manifest) -> Result<()> {
    let mut clock = Stopwatch::new();
    let phantom = load_phantom(&args.spec)?;
    let img = phantom.rasterize(args.n, args.extent)?;
    clock.lap(m, "rasterize");
    io::write_image(&args.out, &img)?;
    m.output(&args.out);
    if let Some(png) = &args.png {
        let window = io::write_pgm(png, &img)?;
        m.output(png);
        m.set("window", json!(window));
    }
    clock.lap(m, "write");
    if let Some(spec) = &args.spec {
        m.input(spec);
    }
    Ok(())
}

fn run_project(args: &ProjectArgs, m: &mut Manifest) -> Result<()> {
    let mut clock = Stopwatch::new();
    let phantom = load_phantom(&args.spec)?;
    let g = phantom.project(args.mu0, args.views, args.rays, args.smax)?;
    clock.lap(m, "project");
    io::write_sinogram(&args.out, &g)?;
    clock.lap(m, "write");
    m.output(&args.out);
    if let Some(spec) = &args.spec {
        m.input(spec);
    }
    Ok(())
}

fn run_noise(args: &NoiseArgs, m: &mut Manifest) -> Result<()> {
    let mut clock = Stopwatch::new();
    let g = io::read_sinogram(&args.input)?;
    m.input(&args.input);
    let (noisy, clamped) = add_poisson_noise(&g, args.counts, args.seed)?;
    if clamped > 0 {
        log::warn!("{clamped} negative bins clamped to zero before sampling");
    }
    clock.lap(m, "noise");
    io::write_sinogram(&args.output, &noisy)?;
    clock.lap(m, "write");
    m.output(&args.output);
    m.seed = Some(args.seed);
    m.set("clamped_bins", json!(clamped));
    Ok(())
}

fn run_truncate(args: &TruncateArgs, m: &mut Manifest) -> Result<()> {
    let g = io::read_sinogram(&args.input)?;
    m.input(&args.input);
    io::write_sinogram(&args.output, &apply_truncation(&g, &args.rect)?)?;
    m.output(&args.output);
    Ok(())
}

fn run_backproject(args: &BackprojectArgs, m: &mut Manifest) -> Result<()> {
    let mut clock = Stopwatch::new();
    let g = io::read_sinogram(&args.input)?;
    m.input(&args.input);
    let b = backproject(&differentiate_s(&g)?, g.mu0, args.grid, args.extent)?;
    clock.lap(m, "backproject");
    io::write_bfield(&args.out, &b)?;
    m.output(&args.out);
    Ok(())
}

fn recon_config(args: &ReconstructArgs, g: &spect_core::Sinogram) -> Result<ReconConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => ReconConfig {
            mu0: g.mu0,
            n_views: g.n_views,
            n_rays: g.n_rays,
            s_max: g.s_max,
            ..ReconConfig::default()
        },
    };
    if let Some(mu0) = args.mu0 {
        if mu0 != g.mu0 {
            bail!(
                "--mu0 {mu0} disagrees with the sinogram (acquired at mu0 = {})",
                g.mu0
            );
        }
        cfg.mu0 = mu0;
    }
    if let Some(order) = args.m_order {
        cfg.moment_order = order;
    }
    if let Some(grid) = args.grid {
        cfg.grid_n = grid;
    }
    if args.nodes.is_some() {
        cfg.nodes_per_line = args.nodes;
    }
    if let Some(rect) = args.rect {
        cfg.truncation = Some(rect);
    } else if args.default_box {
        cfg.truncation = Some(DEFAULT_TRUNCATION_BOX);
    }
    // acquisition settings describe the data, not the reconstruction
    cfg.noise = None;
    Ok(cfg)
}

fn run_reconstruct(args: &ReconstructArgs, m: &mut Manifest) -> Result<()> {
    let mut clock = Stopwatch::new();
    let g = io::read_sinogram(&args.input)?;
    m.input(&args.input);
    if let Some(cfg) = &args.config {
        m.input(cfg);
    }
    clock.lap(m, "read");
    let cfg = recon_config(args, &g)?;
    m.config = Some(serde_json::to_value(&cfg)?);
    let (img, report) = reconstruct(&cfg, &g)?;
    clock.lap(m, "reconstruct");
    io::write_image(&args.out, &img)?;
    m.output(&args.out);
    if let Some(png) = &args.png {
        let window = io::write_pgm(png, &img)?;
        m.output(png);
        m.set("window", json!(window));
    }
    clock.lap(m, "write");
    m.set("report", serde_json::to_value(&report)?);
    Ok(())
}

fn run_invert_line(args: &InvertLineArgs, m: &mut Manifest) -> Result<()> {
    let text = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    m.input(&args.input);
    let line = io::parse_line_text(&text, args.nodes)?;
    let cache = CoeffCache::for_moment_order(args.m_order);
    let sol = solve_line(&line, args.m_order, &cache)?;
    let mut csv = String::from("t,f\n");
    for t in line.nodes().into_iter().rev() {
        if t.abs() <= 1.0 - EDGE_MARGIN {
            csv.push_str(&format!("{t:e},{:e}\n", sol.eval(&cache, t)));
        }
    }
    std::fs::write(&args.out, csv)?;
    m.output(&args.out);
    m.set(
        "line",
        json!({ "mu1": line.mu1, "c_mu1": line.c_mu1, "nodes": line.n(), "condition": sol.moments.condition }),
    );
    Ok(())
}

fn run_profile(args: &ProfileArgs, m: &mut Manifest) -> Result<()> {
    let img = io::read_image(&args.input)?;
    m.input(&args.input);
    let mut csv = String::from("x2,value\n");
    for (x2, v) in profile(&img, args.x1)? {
        csv.push_str(&format!("{x2:e},{v:e}\n"));
    }
    std::fs::write(&args.out, csv)?;
    m.output(&args.out);
    Ok(())
}

fn run_metrics(args: &MetricsArgs, m: &mut Manifest) -> Result<()> {
    let img = io::read_image(&args.input)?;
    let reference = io::read_image(&args.reference)?;
    m.input(&args.reference);
    m.input(&args.input);
    let region = parse_region(&args.region, 1.0)?;
    let value = rmse(&img, &reference, &region)?;
    let result = json!({ "rmse": value, "region": args.region });
    println!("{result}");
    if let Some(out) = &args.out {
        std::fs::write(out, format!("{result}\n"))?;
        m.output(out);
    }
    m.set("metrics", result);
    Ok(())
}

/// Where a command's manifest goes: next to its main output.
fn manifest_path(command: &Command) -> Option<PathBuf> {
    let main: &Path = match command {
        Command::Phantom(a) => &a.out,
        Command::Project(a) => &a.out,
        Command::Noise(a) => &a.output,
        Command::Truncate(a) => &a.output,
        Command::Backproject(a) => &a.out,
        Command::Reconstruct(a) => &a.out,
        Command::InvertLine(a) => &a.out,
        Command::Profile(a) => &a.out,
        Command::Metrics(a) => {
            return Some(manifest::sibling(
                a.out.as_ref().unwrap_or(&a.input),
                ".metrics.manifest.json",
            ))
        }
        Command::Replay(_) => return None,
    };
    Some(manifest::sibling(main, ".manifest.json"))
}

fn execute(command: &Command, threads: Option<usize>) -> Result<()> {
    if let Command::Replay(args) = command {
        let recorded = Manifest::load(&args.manifest)?;
        let replayed: Command =
            serde_json::from_value(recorded.command.clone()).with_context(|| {
                format!(
                    "{} does not describe a runnable command",
                    args.manifest.display()
                )
            })?;
        if matches!(replayed, Command::Replay(_)) {
            bail!("refusing to replay a replay");
        }
        log::info!("replaying {}", recorded.subcommand);
        return execute(&replayed, threads.or(recorded.threads));
    }
    let name = serde_json::to_value(command)?
        .as_object()
        .and_then(|o| o.keys().next().cloned())
        .unwrap_or_default();
    let mut m = Manifest::new(&name, serde_json::to_value(command)?, threads);
    let started = Instant::now();
    match command {
        Command::Phantom(a) => run_phantom(a, &mut m),
        Command::Project(a) => run_project(a, &mut m),
        Command::Noise(a) => run_noise(a, &mut m),
        Command::Truncate(a) => run_truncate(a, &mut m),
        Command::Backproject(a) => run_backproject(a, &mut m),
        Command::Reconstruct(a) => run_reconstruct(a, &mut m),
        Command::InvertLine(a) => run_invert_line(a, &mut m),
        Command::Profile(a) => run_profile(a, &mut m),
        Command::Metrics(a) => run_metrics(a, &mut m),
        Command::Replay(_) => unreachable!(),
    }?;
    m.timings
        .insert("total".into(), started.elapsed().as_secs_f64());
    if let Some(path) = manifest_path(command) {
        m.save(&path)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            eprintln!("{}", rendered.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match execute(&cli.command, cli.threads) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            eprintln!("error: {}", chain.join(": "));
            ExitCode::FAILURE
        }
    }
}
