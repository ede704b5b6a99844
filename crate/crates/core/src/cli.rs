//! The `bolocor` command line: `simulate`, `correct`, `estimate`, and the
//! `evaluate` metric family.
//!
//! Reports are deterministic `key = value` text on stdout; warnings and
//! timing go to stderr. Repeated runs with the same flags and inputs produce
//! byte-identical output files and reports, and every report carries content
//! digests so runs can be audited. Exit status is 0 iff the command
//! succeeded.

use crate::correction::VideoSequence;
use crate::correction::correct_sequence;
use crate::error::{Error, Result};
use crate::evaluation::{
    deviation_stats, discrete_frechet, dtw_distance, fit_line, fit_plane, intensity_stability,
    mean_distance, merged_plane_deviation, slab_filter, Region,
};
use crate::io::bundle::frame_file;
use crate::io::{
    read_bundle, read_correspondences, read_plane, read_point_cloud, read_trajectory, read_truth,
    read_video_dir, write_bundle, write_pgm, write_video_dir,
};
use crate::optimizer::{estimate_time_constants, WindowConfig};
use crate::photometric::RobustKernel;
use crate::report::{digest_files, RunReport};
use crate::sensor::{SimulationMode, TimeConstants};
use crate::synthetic::{build_benchmark, lift_ground_points, BenchmarkConfig};
use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};

/// Condition numbers above this trigger the degeneracy warning on stderr.
const CONDITION_WARN: f64 = 1e6;

#[derive(Parser)]
#[command(name = "bolocor", version, about = "Microbolometer video correction toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic ground-truth bundle.
    Simulate(SimulateArgs),
    /// Invert the sensor dynamics over a recorded video.
    Correct(CorrectArgs),
    /// Estimate the time constants from a bundle's correspondences.
    Estimate(EstimateArgs),
    /// Geometry, trajectory, and stability metrics.
    #[command(subcommand)]
    Evaluate(EvaluateCommand),
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// Seed for every random draw in the bundle.
    #[arg(long)]
    seed: u64,
    /// Bundle directory to write (created if missing).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 60)]
    frames: usize,
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
    /// Comma-separated exposure choices in milliseconds.
    #[arg(long, default_value = "5,10,20")]
    exposures_ms: String,
    /// Gaussian noise sigma added after simulation, in intensity units.
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    noise_seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::ClosedForm)]
    mode: ModeArg,
}

#[derive(clap::Args)]
struct CorrectArgs {
    /// Input directory: a bundle, or any video directory with raw frames.
    #[arg(long = "in")]
    input: PathBuf,
    /// Video directory to write (frames named corrected_####.f64).
    #[arg(long)]
    out: PathBuf,
    /// Time constants as "tau_h,tau_c" in milliseconds.
    #[arg(long, required_unless_present = "from_truth", conflicts_with = "from_truth")]
    taus_ms: Option<String>,
    /// Take the constants from the input bundle's truth.csv instead.
    #[arg(long)]
    from_truth: bool,
    /// Also write 16-bit PGM previews (rounded and clamped).
    #[arg(long)]
    clamp: bool,
}

#[derive(clap::Args)]
struct EstimateArgs {
    /// Bundle directory with raw frames and correspondences.csv.
    #[arg(long = "in")]
    input: PathBuf,
    /// Initial guess as "tau_h,tau_c" in milliseconds.
    #[arg(long, default_value = "10,10")]
    init_ms: String,
    /// Frames per sliding window.
    #[arg(long, default_value_t = WindowConfig::default().window_size)]
    window: usize,
    #[arg(long, default_value_t = WindowConfig::default().max_iterations)]
    max_iters: usize,
    #[arg(long, default_value_t = WindowConfig::default().step_tolerance)]
    step_tol: f64,
    #[arg(long, default_value_t = WindowConfig::default().energy_tolerance)]
    energy_tol: f64,
    #[arg(long, default_value_t = WindowConfig::default().damping_init)]
    damping: f64,
    /// Huber knee in intensity units.
    #[arg(long, default_value_t = RobustKernel::default().huber_gamma)]
    huber_gamma: f64,
    /// Gradient-weight scale in intensity units per pixel.
    #[arg(long, default_value_t = RobustKernel::default().gradient_scale)]
    gradient_scale: f64,
}

#[derive(Subcommand)]
enum EvaluateCommand {
    /// Total-least-squares plane fit with deviation statistics.
    Plane(PlaneArgs),
    /// Total-least-squares line fit with deviation statistics.
    Line(LineArgs),
    /// Discrete Frechet distance between two trajectories.
    Frechet(PairArgs),
    /// Dynamic-time-warping cost between two trajectories.
    Dtw(PairArgs),
    /// Mean distance over timestamp-matched trajectory samples.
    Meandist(PairArgs),
    /// Intensity stability of a pixel region over a video.
    Stability(StabilityArgs),
}

#[derive(clap::Args)]
struct PlaneArgs {
    /// Point-cloud CSV; repeat the flag for a merged equal-count fit.
    #[arg(long = "points")]
    points: Vec<PathBuf>,
    /// Ground-truth bundle; with --video, road points are lifted from the
    /// video instead of read from CSV.
    #[arg(long, requires = "video", conflicts_with = "points")]
    bundle: Option<PathBuf>,
    /// Video directory whose values displace the lifted points.
    #[arg(long, requires = "bundle")]
    video: Option<PathBuf>,
    /// Frame prefix inside --video.
    #[arg(long, default_value = "corrected")]
    prefix: String,
    /// Lift displacement per intensity unit.
    #[arg(long, default_value_t = 0.02)]
    lift_scale: f64,
    /// Keep only points within this distance of each cloud's own fit.
    #[arg(long)]
    slab: Option<f64>,
    /// Points drawn per cloud before the merged fit (default: smallest cloud).
    #[arg(long)]
    sample_count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    sample_seed: u64,
}

#[derive(clap::Args)]
struct LineArgs {
    /// Point-cloud CSV.
    #[arg(long)]
    points: PathBuf,
}

#[derive(clap::Args)]
struct PairArgs {
    /// First trajectory CSV (t,x,y or t,x,y,z).
    #[arg(long)]
    a: PathBuf,
    /// Second trajectory CSV.
    #[arg(long)]
    b: PathBuf,
}

#[derive(clap::Args)]
struct StabilityArgs {
    /// Video directory (manifest.csv plus frames/).
    #[arg(long)]
    video: PathBuf,
    /// Frame prefix inside --video.
    #[arg(long, default_value = "raw")]
    prefix: String,
    /// Pixel region as "x0,y0,x1,y1", half-open.
    #[arg(long)]
    region: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Carried residual added unchanged; exact inverse of the correction.
    ClosedForm,
    /// Carried residual keeps relaxing through the exposure.
    Physical,
}

impl ModeArg {
    fn as_str(self) -> &'static str {
        match self {
            ModeArg::ClosedForm => "closed-form",
            ModeArg::Physical => "physical",
        }
    }
}

impl From<ModeArg> for SimulationMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::ClosedForm => SimulationMode::ClosedForm,
            ModeArg::Physical => SimulationMode::PhysicalOde,
        }
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return err.exit_code();
        }
    };
    configure_threads();
    let start = std::time::Instant::now();
    match dispatch(cli.command) {
        Ok(report) => {
            print!("{}", report.render());
            eprintln!("elapsed: {:.3} s", start.elapsed().as_secs_f64());
            0
        }
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

/// `BOLOCOR_THREADS` pins the rayon pool size. Results do not depend on the
/// pool size; the variable only trades latency for cores.
fn configure_threads() {
    let Ok(value) = std::env::var("BOLOCOR_THREADS") else {
        return;
    };
    if value.trim().is_empty() {
        return;
    }
    match value.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        _ => eprintln!("warning: ignoring BOLOCOR_THREADS={value:?} (expected a positive integer)"),
    }
}

fn dispatch(command: Command) -> Result<RunReport> {
    match command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Correct(args) => cmd_correct(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Evaluate(cmd) => match cmd {
            EvaluateCommand::Plane(args) => cmd_evaluate_plane(args),
            EvaluateCommand::Line(args) => cmd_evaluate_line(args),
            EvaluateCommand::Frechet(args) => cmd_evaluate_pair(Pair::Frechet, args),
            EvaluateCommand::Dtw(args) => cmd_evaluate_pair(Pair::Dtw, args),
            EvaluateCommand::Meandist(args) => cmd_evaluate_pair(Pair::Meandist, args),
            EvaluateCommand::Stability(args) => cmd_evaluate_stability(args),
        },
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<RunReport> {
    let exposures = parse_exposures_ms(&args.exposures_ms)?;
    let config = BenchmarkConfig {
        frames: args.frames,
        fps: args.fps,
        exposure_choices: exposures.clone(),
        noise_sigma: args.noise_sigma,
        noise_seed: args.noise_seed,
        mode: args.mode.into(),
    };
    let bundle = build_benchmark(args.seed, &config)?;
    write_bundle(&args.out, &bundle)?;

    let mut files = vec![
        args.out.join("manifest.csv"),
        args.out.join("truth.csv"),
        args.out.join("correspondences.csv"),
    ];
    for k in 0..bundle.raw.len() {
        files.push(frame_file(&args.out, "raw", k, "f64"));
        files.push(frame_file(&args.out, "raw", k, "pgm"));
        files.push(frame_file(&args.out, "ideal", k, "f64"));
    }

    let mut report = RunReport::new("simulate");
    report.push("seed", args.seed);
    report.push("frames", bundle.raw.len());
    report.push("fps", args.fps);
    report.push("exposures_s", join_floats(&exposures));
    report.push("mode", args.mode.as_str());
    report.push("noise_sigma", args.noise_sigma);
    report.push("noise_seed", args.noise_seed);
    report.push("width", bundle.raw.width());
    report.push("height", bundle.raw.height());
    report.push("tau_h", bundle.taus.tau_h());
    report.push("tau_c", bundle.taus.tau_c());
    report.push("correspondences", bundle.correspondences.len());
    report.push("out", args.out.display());
    report.push("digest", digest_paths(&files)?);
    Ok(report)
}

fn cmd_correct(args: CorrectArgs) -> Result<RunReport> {
    let raw = read_video_dir(&args.input, "raw")?;
    let (taus, source) = if args.from_truth {
        let (taus, _, _) = read_truth(&args.input.join("truth.csv"))?;
        (taus, "truth")
    } else {
        let text = args.taus_ms.as_deref().expect("clap enforces the pair");
        (parse_taus_ms(text, "--taus-ms")?, "flags")
    };
    let corrected = correct_sequence(&raw, taus)?;
    write_video_dir(&args.out, &corrected, "corrected")?;
    let mut written = video_files(&args.out, "corrected", corrected.len());
    if args.clamp {
        for (k, frame) in corrected.frames().iter().enumerate() {
            let path = frame_file(&args.out, "corrected", k, "pgm");
            write_pgm(&path, frame)?;
            written.push(path);
        }
    }

    let mut report = RunReport::new("correct");
    report.push("in", args.input.display());
    report.push("out", args.out.display());
    report.push("taus_source", source);
    report.push("tau_h", taus.tau_h());
    report.push("tau_c", taus.tau_c());
    report.push("frames", corrected.len());
    report.push("width", corrected.width());
    report.push("height", corrected.height());
    report.push("clamp", args.clamp);
    if let Some(worst) = ideal_deviation(&args.input, &corrected)? {
        report.push("max_abs_error_vs_ideal", worst);
    }
    report.push(
        "input_digest",
        digest_paths(&video_files(&args.input, "raw", raw.len()))?,
    );
    report.push("output_digest", digest_paths(&written)?);
    Ok(report)
}

/// Max absolute difference against the bundle's ideal film, when present.
fn ideal_deviation(dir: &Path, corrected: &VideoSequence) -> Result<Option<f64>> {
    if !frame_file(dir, "ideal", 0, "f64").is_file() {
        return Ok(None);
    }
    let mut worst = 0.0f64;
    for (k, frame) in corrected.frames().iter().enumerate() {
        let (width, height, data) = read_plane(&frame_file(dir, "ideal", k, "f64"))?;
        if (width, height) != (frame.width(), frame.height()) {
            return Err(Error::domain(format!(
                "ideal frame {k} is {width}x{height} but the video is {}x{}",
                frame.width(),
                frame.height()
            )));
        }
        for (a, b) in frame.data().iter().zip(&data) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(Some(worst))
}

fn cmd_estimate(args: EstimateArgs) -> Result<RunReport> {
    let raw = read_video_dir(&args.input, "raw")?;
    let correspondences = read_correspondences(&args.input.join("correspondences.csv"))?;
    let init = parse_taus_ms(&args.init_ms, "--init-ms")?;
    let config = WindowConfig {
        window_size: args.window,
        max_iterations: args.max_iters,
        step_tolerance: args.step_tol,
        energy_tolerance: args.energy_tol,
        damping_init: args.damping,
    };
    let kernel = RobustKernel::new(args.huber_gamma, args.gradient_scale)?;
    let result = estimate_time_constants(&raw, &correspondences, init, &config, &kernel)?;

    if result.normal_condition > CONDITION_WARN {
        eprintln!(
            "warning: normal equations are ill-conditioned (condition {:.3e}); the data leaves \
             a parameter direction degenerate (tau_h is unobservable when all exposures are \
             equal) and the estimate stays near its initial value along it",
            result.normal_condition
        );
    }
    if !result.converged {
        eprintln!(
            "warning: not converged within {} iterations per window",
            config.max_iterations
        );
    }

    let mut files = video_files(&args.input, "raw", raw.len());
    files.push(args.input.join("correspondences.csv"));

    let mut report = RunReport::new("estimate");
    report.push("in", args.input.display());
    report.push("init_tau_h", init.tau_h());
    report.push("init_tau_c", init.tau_c());
    report.push("window", config.window_size);
    report.push("max_iters", config.max_iterations);
    report.push("step_tol", config.step_tolerance);
    report.push("energy_tol", config.energy_tolerance);
    report.push("damping", config.damping_init);
    report.push("huber_gamma", kernel.huber_gamma);
    report.push("gradient_scale", kernel.gradient_scale);
    report.push("frames", raw.len());
    report.push("correspondences", correspondences.len());
    report.push("tau_h", result.taus.tau_h());
    report.push("tau_c", result.taus.tau_c());
    report.push("iterations", result.iterations_used);
    report.push("final_energy", result.final_energy);
    report.push("converged", result.converged);
    report.push("normal_condition", result.normal_condition);
    report.push("windows", result.windows.len());
    for (k, w) in result.windows.iter().enumerate() {
        report.push(format!("window{k}_frames"), format!("{}..{}", w.first_frame, w.last_frame));
        report.push(format!("window{k}_terms"), w.term_count);
        report.push(format!("window{k}_tau_h"), w.taus.tau_h());
        report.push(format!("window{k}_tau_c"), w.taus.tau_c());
        report.push(format!("window{k}_iterations"), w.iterations);
        report.push(format!("window{k}_final_energy"), w.final_energy);
        report.push(format!("window{k}_converged"), w.converged);
        report.push(format!("window{k}_condition"), w.normal_condition);
        report.push(format!("window{k}_energy_trace"), join_floats(&w.energy_trace));
    }
    report.push("input_digest", digest_paths(&files)?);
    Ok(report)
}

fn cmd_evaluate_plane(args: PlaneArgs) -> Result<RunReport> {
    let mut report = RunReport::new("evaluate");
    report.push("metric", "plane");

    let (mut clouds, input_files) = if !args.points.is_empty() {
        let mut clouds = Vec::new();
        for path in &args.points {
            report.push("points", path.display());
            clouds.push(read_point_cloud(path)?.into_points());
        }
        (clouds, args.points.clone())
    } else {
        let Some(bundle_dir) = args.bundle.as_ref() else {
            return Err(Error::domain(
                "provide --points files, or --bundle with --video to lift road points",
            ));
        };
        let video_dir = args.video.as_ref().expect("clap ties --video to --bundle");
        report.push("bundle", bundle_dir.display());
        report.push("video", video_dir.display());
        report.push("prefix", &args.prefix);
        report.push("lift_scale", args.lift_scale);
        let bundle = read_bundle(bundle_dir)?;
        let video = read_video_dir(video_dir, &args.prefix)?;
        let cloud = lift_ground_points(&bundle, &video, args.lift_scale)?;

        let mut files = video_files(bundle_dir, "raw", bundle.raw.len());
        files.push(bundle_dir.join("truth.csv"));
        files.push(bundle_dir.join("correspondences.csv"));
        for k in 0..bundle.raw.len() {
            files.push(frame_file(bundle_dir, "ideal", k, "f64"));
        }
        files.extend(video_files(video_dir, &args.prefix, video.len()));
        (vec![cloud], files)
    };

    if let Some(half) = args.slab {
        report.push("slab", half);
        for cloud in &mut clouds {
            let own = fit_plane(cloud)?;
            *cloud = slab_filter(cloud, &own, half)?;
        }
    }

    let (plane, stats) = merged_plane_deviation(&clouds, args.sample_count, args.sample_seed)?;
    if let Some(count) = args.sample_count {
        report.push("sample_count", count);
    }
    report.push("sample_seed", args.sample_seed);
    report.push("clouds", clouds.len());
    let normal = plane.normal();
    report.push("normal_x", normal[0]);
    report.push("normal_y", normal[1]);
    report.push("normal_z", normal[2]);
    report.push("offset", plane.offset());
    for (k, s) in stats.iter().enumerate() {
        report.push(format!("cloud{k}_points"), s.count);
        report.push(format!("cloud{k}_rmse"), s.rmse);
        report.push(format!("cloud{k}_std"), s.std);
    }
    if let [only] = stats.as_slice() {
        report.push("rmse", only.rmse);
        report.push("std", only.std);
        report.push("count", only.count);
    }
    report.push("input_digest", digest_paths(&input_files)?);
    Ok(report)
}

fn cmd_evaluate_line(args: LineArgs) -> Result<RunReport> {
    let cloud = read_point_cloud(&args.points)?;
    let line = fit_line(cloud.points())?;
    let stats = deviation_stats(cloud.points(), &line)?;

    let mut report = RunReport::new("evaluate");
    report.push("metric", "line");
    report.push("points", args.points.display());
    let anchor = line.anchor();
    let direction = line.direction();
    report.push("anchor_x", anchor[0]);
    report.push("anchor_y", anchor[1]);
    report.push("anchor_z", anchor[2]);
    report.push("direction_x", direction[0]);
    report.push("direction_y", direction[1]);
    report.push("direction_z", direction[2]);
    report.push("rmse", stats.rmse);
    report.push("std", stats.std);
    report.push("count", stats.count);
    report.push("input_digest", digest_paths(std::slice::from_ref(&args.points))?);
    Ok(report)
}

enum Pair {
    Frechet,
    Dtw,
    Meandist,
}

fn cmd_evaluate_pair(kind: Pair, args: PairArgs) -> Result<RunReport> {
    let a = read_trajectory(&args.a)?;
    let b = read_trajectory(&args.b)?;

    let mut report = RunReport::new("evaluate");
    report.push(
        "metric",
        match kind {
            Pair::Frechet => "frechet",
            Pair::Dtw => "dtw",
            Pair::Meandist => "meandist",
        },
    );
    report.push("a", args.a.display());
    report.push("b", args.b.display());
    report.push("a_samples", a.len());
    report.push("b_samples", b.len());
    match kind {
        Pair::Frechet => report.push("frechet", discrete_frechet(&a, &b)?),
        Pair::Dtw => report.push("dtw", dtw_distance(&a, &b)?),
        Pair::Meandist => {
            let m = mean_distance(&a, &b)?;
            report.push("mean_distance", m.mean);
            report.push("matched", m.matched);
            report.push("unmatched", m.unmatched);
        }
    }
    report.push("input_digest", digest_paths(&[args.a.clone(), args.b.clone()])?);
    Ok(report)
}

fn cmd_evaluate_stability(args: StabilityArgs) -> Result<RunReport> {
    let video = read_video_dir(&args.video, &args.prefix)?;
    let region = parse_region(&args.region)?;
    let value = intensity_stability(&video, region)?;

    let mut report = RunReport::new("evaluate");
    report.push("metric", "stability");
    report.push("video", args.video.display());
    report.push("prefix", &args.prefix);
    report.push("region", &args.region);
    report.push("frames", video.len());
    report.push("stability", value);
    report.push(
        "input_digest",
        digest_paths(&video_files(&args.video, &args.prefix, video.len()))?,
    );
    Ok(report)
}

fn parse_float(text: &str, flag: &str) -> Result<f64> {
    text.trim()
        .parse()
        .map_err(|_| Error::domain(format!("{flag}: {text:?} is not a number")))
}

fn split_pair(text: &str, flag: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::domain(format!(
            "{flag} expects two comma-separated numbers, got {text:?}"
        )));
    }
    Ok((parse_float(parts[0], flag)?, parse_float(parts[1], flag)?))
}

/// "12,9" in milliseconds to `TimeConstants` in seconds.
fn parse_taus_ms(text: &str, flag: &str) -> Result<TimeConstants> {
    let (tau_h, tau_c) = split_pair(text, flag)?;
    TimeConstants::new(tau_h * 1e-3, tau_c * 1e-3)
}

fn parse_exposures_ms(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|part| Ok(parse_float(part, "--exposures-ms")? * 1e-3))
        .collect()
}

/// "x0,y0,x1,y1" to a half-open region.
fn parse_region(text: &str) -> Result<Region> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        return Err(Error::domain(format!(
            "--region expects \"x0,y0,x1,y1\", got {text:?}"
        )));
    }
    let mut v = [0usize; 4];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part.trim().parse().map_err(|_| {
            Error::domain(format!("--region: {part:?} is not a pixel index"))
        })?;
    }
    Region::new(v[0], v[1], v[2], v[3])
}

fn join_floats(values: &[f64]) -> String {
    values
        .iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn video_files(dir: &Path, prefix: &str, frames: usize) -> Vec<PathBuf> {
    let mut files = vec![dir.join("manifest.csv")];
    for k in 0..frames {
        files.push(frame_file(dir, prefix, k, "f64"));
    }
    files
}

fn digest_paths(paths: &[PathBuf]) -> Result<String> {
    digest_files(paths.iter().map(PathBuf::as_path))
}
