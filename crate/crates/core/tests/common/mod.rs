//! Shared oracle machinery for the integration tests: a reference RK4
//! integrator, finite-difference derivatives, exhaustive trajectory-metric
//! enumerators, randomized photometric instances, and a runner for the
//! compiled binary.

#![allow(dead_code)]

use bolocor::correction::{Frame, VideoSequence};
use bolocor::evaluation::Trajectory;
use bolocor::photometric::{energy_and_derivatives, Correspondence, RobustKernel};
use bolocor::sensor::{simulate_pixel_sequence, FrameTiming, SimulationMode, TimeConstants};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use std::process::Command;

/// Classic fixed-step RK4 for `dy/dt = rate(y)`; the last step shrinks to
/// land exactly on `duration`.
pub fn rk4(initial: f64, rate: impl Fn(f64) -> f64, duration: f64, step: f64) -> f64 {
    assert!(duration >= 0.0 && step > 0.0);
    let mut y = initial;
    let mut remaining = duration;
    while remaining > 0.0 {
        let h = step.min(remaining);
        let k1 = rate(y);
        let k2 = rate(y + 0.5 * h * k1);
        let k3 = rate(y + 0.5 * h * k2);
        let k4 = rate(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        remaining -= h;
    }
    y
}

/// Relative difference against the larger magnitude, floored at `floor` so
/// near-zero pairs compare absolutely.
pub fn relative_error(got: f64, want: f64, floor: f64) -> f64 {
    (got - want).abs() / got.abs().max(want.abs()).max(floor)
}

fn with_taus(taus: TimeConstants, axis: usize, value: f64) -> TimeConstants {
    match axis {
        0 => TimeConstants::new(value, taus.tau_c()).unwrap(),
        _ => TimeConstants::new(taus.tau_h(), value).unwrap(),
    }
}

fn tau_axis(taus: TimeConstants, axis: usize) -> f64 {
    match axis {
        0 => taus.tau_h(),
        _ => taus.tau_c(),
    }
}

/// Central-difference gradient in `(tau_h, tau_c)` with per-axis relative
/// step `rel_step`.
pub fn fd_gradient(
    f: impl Fn(TimeConstants) -> f64,
    at: TimeConstants,
    rel_step: f64,
) -> [f64; 2] {
    let mut grad = [0.0; 2];
    for (axis, slot) in grad.iter_mut().enumerate() {
        let x = tau_axis(at, axis);
        let h = x * rel_step;
        let hi = f(with_taus(at, axis, x + h));
        let lo = f(with_taus(at, axis, x - h));
        *slot = (hi - lo) / (2.0 * h);
    }
    grad
}

/// Central second differences: the diagonal of the Hessian.
pub fn fd_second_diag(
    f: impl Fn(TimeConstants) -> f64,
    at: TimeConstants,
    rel_step: f64,
) -> [f64; 2] {
    let mid = f(at);
    let mut diag = [0.0; 2];
    for (axis, slot) in diag.iter_mut().enumerate() {
        let x = tau_axis(at, axis);
        let h = x * rel_step;
        let hi = f(with_taus(at, axis, x + h));
        let lo = f(with_taus(at, axis, x - h));
        *slot = (hi - 2.0 * mid + lo) / (h * h);
    }
    diag
}

fn euclid(p: [f64; 3], q: [f64; 3]) -> f64 {
    let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

fn successors(i: usize, j: usize, n: usize, m: usize) -> Vec<(usize, usize)> {
    let mut next = Vec::with_capacity(3);
    if i + 1 < n {
        next.push((i + 1, j));
    }
    if j + 1 < m {
        next.push((i, j + 1));
    }
    if i + 1 < n && j + 1 < m {
        next.push((i + 1, j + 1));
    }
    next
}

/// Discrete Fréchet by exhaustive enumeration of every monotone coupling.
pub fn brute_frechet(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let mut best = f64::INFINITY;
    let mut stack = vec![(0usize, 0usize, euclid(a[0], b[0]))];
    while let Some((i, j, acc)) = stack.pop() {
        if i == a.len() - 1 && j == b.len() - 1 {
            best = best.min(acc);
            continue;
        }
        for (ni, nj) in successors(i, j, a.len(), b.len()) {
            stack.push((ni, nj, acc.max(euclid(a[ni], b[nj]))));
        }
    }
    best
}

/// DTW by exhaustive enumeration. Costs accumulate start-to-end exactly like
/// the library's DP rows, so equal alignments give bitwise equal sums.
pub fn brute_dtw(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let mut best = f64::INFINITY;
    let mut stack = vec![(0usize, 0usize, euclid(a[0], b[0]))];
    while let Some((i, j, acc)) = stack.pop() {
        if i == a.len() - 1 && j == b.len() - 1 {
            best = best.min(acc);
            continue;
        }
        for (ni, nj) in successors(i, j, a.len(), b.len()) {
            stack.push((ni, nj, acc + euclid(a[ni], b[nj])));
        }
    }
    best
}

/// Random trajectory with strictly increasing timestamps and coordinates in
/// roughly [-5, 5].
pub fn random_trajectory(rng: &mut ChaCha8Rng, len: usize) -> Trajectory {
    let mut t = 0.0;
    let samples = (0..len)
        .map(|_| {
            t += rng.random_range(0.01..0.5);
            let p = [
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
            ];
            (t, p)
        })
        .collect();
    Trajectory::new(samples).unwrap()
}

/// A randomized photometric-energy instance: a small static scene simulated
/// at known constants, lightly perturbed so residuals are nonzero but stay
/// deep inside the Huber quadratic branch.
pub struct EnergyInstance {
    pub seq: VideoSequence,
    pub correspondences: Vec<Correspondence>,
    pub taus: TimeConstants,
    pub kernel: RobustKernel,
}

impl EnergyInstance {
    pub fn energy_at(&self, taus: TimeConstants) -> f64 {
        energy_and_derivatives(&self.correspondences, &self.seq, taus, &self.kernel)
            .unwrap()
            .total_energy
    }
}

pub fn random_energy_instance(rng: &mut ChaCha8Rng) -> EnergyInstance {
    let width = 6;
    let height = 5;
    let frames = 5;
    let taus = TimeConstants::new(
        rng.random_range(0.006..0.025),
        rng.random_range(0.006..0.025),
    )
    .unwrap();
    let period = 1.0 / 30.0;
    let timings: Vec<FrameTiming> = (0..frames)
        .map(|k| {
            let exposure = rng.random_range(0.004..0.020);
            FrameTiming::new(k as f64 * period, exposure, period - exposure).unwrap()
        })
        .collect();

    // Static scene: every pixel keeps one irradiance across all frames, with
    // spatial variation so the gradient weights differ pixel to pixel.
    let film: Vec<f64> = (0..width * height)
        .map(|_| rng.random_range(60.0..220.0))
        .collect();
    let mut per_frame = vec![Vec::with_capacity(width * height); frames];
    for &value in &film {
        let raw = simulate_pixel_sequence(
            &vec![value; frames],
            &timings,
            taus,
            SimulationMode::ClosedForm,
        )
        .unwrap();
        for (k, v) in raw.into_iter().enumerate() {
            per_frame[k].push(v);
        }
    }
    let frames_vec: Vec<Frame> = per_frame
        .into_iter()
        .zip(&timings)
        .map(|(mut data, timing)| {
            for v in &mut data {
                // Perturbation of a few millunits: residuals ~1e-3 versus a
                // Huber knee of 9.
                *v += rng.random_range(-2e-3..2e-3);
            }
            Frame::new(width, height, data, *timing).unwrap()
        })
        .collect();
    let seq = VideoSequence::new(frames_vec).unwrap();

    // Hosts start at 1: every term needs the previous frame on both sides.
    let mut correspondences = Vec::new();
    for host in 1..frames - 1 {
        for target in host + 1..frames {
            for _ in 0..3 {
                let x = rng.random_range(1..width - 1);
                let y = rng.random_range(1..height - 1);
                correspondences.push(Correspondence::point(host, (x, y), target, (x, y)));
            }
        }
    }
    EnergyInstance {
        seq,
        correspondences,
        taus,
        kernel: RobustKernel::default(),
    }
}

pub struct CliOutput {
    pub status: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CliOutput {
    /// Value of `key = value` in the stdout report.
    pub fn report_value(&self, key: &str) -> &str {
        self.stdout
            .lines()
            .find_map(|line| line.strip_prefix(&format!("{key} = ")))
            .unwrap_or_else(|| panic!("no report key {key:?} in:\n{}", self.stdout))
    }
}

/// Runs the compiled `bolocor` binary.
pub fn run_cli(dir: &Path, args: &[&str]) -> CliOutput {
    run_cli_env(dir, args, &[])
}

pub fn run_cli_env(dir: &Path, args: &[&str], envs: &[(&str, &str)]) -> CliOutput {
    let mut command = Command::new(env!("CARGO_BIN_EXE_bolocor"));
    command.current_dir(dir).args(args);
    for (key, value) in envs {
        command.env(key, value);
    }
    let output = command.output().expect("binary should spawn");
    CliOutput {
        status: output.status.code().unwrap_or(-1),
        stdout: String::from_utf8(output.stdout).expect("stdout is UTF-8"),
        stderr: String::from_utf8(output.stderr).expect("stderr is UTF-8"),
    }
}
