//! Gauss-Newton estimation of the two time constants.
//!
//! The estimator minimizes the photometric energy of
//! [`crate::photometric::energy_and_derivatives`] over `(tau_h, tau_c)`,
//! parameterized as logarithms so both constants stay positive and steps are
//! relative by construction. Each iteration solves the damped normal
//! equations `(H + lambda I) step = -g` in log space. Steps that do not
//! increase the energy are accepted and divide the damping by 10; steps that
//! do are rejected and multiply it by 10 (engaging at 1e-4 when it was zero,
//! so a `damping_init` of zero runs as pure Gauss-Newton until a step fails).
//!
//! Long sequences are handled by sliding a window one frame at a time; each
//! window is optimized from the previous window's estimate and the per-window
//! results are aggregated by geometric mean. The returned
//! [`EstimationResult`] carries both the aggregate and every window.

use crate::correction::VideoSequence;
use crate::error::{Error, Result};
use crate::photometric::{
    energy_and_derivatives, sym2x2_condition, Correspondence, EnergyReport, RobustKernel,
};
use crate::sensor::TimeConstants;

/// Damping value at which a zero-damping run engages Levenberg damping.
const DAMPING_ENGAGE: f64 = 1e-4;
/// Damping beyond which escalation gives up.
const DAMPING_MAX: f64 = 1e10;
/// Largest accepted log-space step per component (a factor of about 4.5).
const MAX_LOG_STEP: f64 = 1.5;
/// Energy below which the data is considered exactly explained.
const ENERGY_FLOOR: f64 = 1e-15;

/// Optimization schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowConfig {
    /// Frames per sliding window; clamped to the sequence length. Windows
    /// advance one frame at a time.
    pub window_size: usize,
    /// Outer iteration budget per window.
    pub max_iterations: usize,
    /// Convergence threshold on the accepted log-space step (a relative
    /// change of the constants).
    pub step_tolerance: f64,
    /// Convergence threshold on the relative energy drop per iteration.
    pub energy_tolerance: f64,
    /// Initial Levenberg damping; zero requests pure Gauss-Newton.
    pub damping_init: f64,
}

impl WindowConfig {
    fn validate(&self) -> Result<()> {
        if self.window_size < 2 {
            return Err(Error::domain(format!(
                "window_size must be at least 2, got {}",
                self.window_size
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::domain("max_iterations must be at least 1"));
        }
        for (value, name) in [
            (self.step_tolerance, "step_tolerance"),
            (self.energy_tolerance, "energy_tolerance"),
            (self.damping_init, "damping_init"),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::domain(format!(
                    "{name} must be nonnegative and finite, got {value}"
                )));
            }
        }
        Ok(())
    }
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            window_size: 16,
            max_iterations: 50,
            step_tolerance: 1e-9,
            energy_tolerance: 1e-12,
            damping_init: 1e-4,
        }
    }
}

/// Outcome of one window's optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowEstimate {
    /// First frame of the window (inclusive).
    pub first_frame: usize,
    /// Last frame of the window (inclusive).
    pub last_frame: usize,
    /// Correspondences that fell inside the window.
    pub term_count: usize,
    pub taus: TimeConstants,
    pub iterations: usize,
    pub final_energy: f64,
    pub converged: bool,
    /// Energy after the initial evaluation and after every accepted step;
    /// never increases.
    pub energy_trace: Vec<f64>,
    /// Condition number of the log-space normal matrix at the estimate.
    pub normal_condition: f64,
}

/// Aggregate estimate over all windows.
///
/// With a single window the top-level fields mirror that window. With
/// several, `taus` is the geometric mean of the window estimates,
/// `final_energy` and `normal_condition` are evaluated over all
/// correspondences at the aggregate, `iterations_used` sums the windows, and
/// `energy_trace` is the last window's trace.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub taus: TimeConstants,
    pub iterations_used: usize,
    pub final_energy: f64,
    pub converged: bool,
    pub energy_trace: Vec<f64>,
    /// Condition number of the log-space normal matrix; values above about
    /// 1e6 mean the data barely constrains one direction (typically `tau_h`
    /// when all exposures are equal).
    pub normal_condition: f64,
    pub windows: Vec<WindowEstimate>,
}

/// Estimates `(tau_h, tau_c)` from photometric correspondences.
///
/// Fails with [`Error::DegenerateData`] when the correspondences carry no
/// information about either constant (zero gradient and zero normal matrix,
/// as with identical frames on a constant timing schedule) or when the
/// normal equations stay singular after damping escalation. Exhausting
/// `max_iterations` is not an error; the result comes back with
/// `converged = false`.
pub fn estimate_time_constants(
    seq: &VideoSequence,
    correspondences: &[Correspondence],
    init: TimeConstants,
    config: &WindowConfig,
    kernel: &RobustKernel,
) -> Result<EstimationResult> {
    config.validate()?;
    if correspondences.is_empty() {
        return Err(Error::domain(
            "at least one correspondence is required",
        ));
    }
    for corr in correspondences {
        corr.validate(seq)?;
    }

    let window = config.window_size.min(seq.len());
    let mut windows = Vec::new();
    let mut warm = init;
    for start in 0..=(seq.len() - window) {
        let end = start + window;
        let subset: Vec<Correspondence> = correspondences
            .iter()
            .filter(|c| {
                let lo = c.host_frame.min(c.target_frame);
                let hi = c.host_frame.max(c.target_frame);
                lo >= start + 1 && hi < end
            })
            .cloned()
            .collect();
        if subset.is_empty() {
            continue;
        }
        let est = optimize_window(seq, &subset, warm, config, kernel)?;
        warm = est.taus;
        windows.push(WindowEstimate {
            first_frame: start,
            last_frame: end - 1,
            term_count: subset.len(),
            ..est
        });
    }
    if windows.is_empty() {
        return Err(Error::domain(format!(
            "no correspondence fits inside any {window}-frame window"
        )));
    }

    let mean_log_h =
        windows.iter().map(|w| w.taus.tau_h().ln()).sum::<f64>() / windows.len() as f64;
    let mean_log_c =
        windows.iter().map(|w| w.taus.tau_c().ln()).sum::<f64>() / windows.len() as f64;
    let aggregate = TimeConstants::new(mean_log_h.exp(), mean_log_c.exp())?;
    let full = energy_and_derivatives(correspondences, seq, aggregate, kernel)?;
    Ok(EstimationResult {
        taus: aggregate,
        iterations_used: windows.iter().map(|w| w.iterations).sum(),
        final_energy: full.total_energy,
        converged: windows.iter().all(|w| w.converged),
        energy_trace: windows.last().unwrap().energy_trace.clone(),
        normal_condition: log_space_condition(&full, aggregate),
        windows,
    })
}

/// Condition number of the normal matrix transformed to log parameters.
fn log_space_condition(report: &EnergyReport, taus: TimeConstants) -> f64 {
    let (_, h, _) = transformed_system(report, taus);
    sym2x2_condition(&h)
}

/// Gradient and normal matrix in log-parameter coordinates, plus the
/// matrix's largest absolute entry.
fn transformed_system(
    report: &EnergyReport,
    taus: TimeConstants,
) -> ([f64; 2], [[f64; 2]; 2], f64) {
    let d = [taus.tau_h(), taus.tau_c()];
    let g = [d[0] * report.gradient[0], d[1] * report.gradient[1]];
    let h_raw = &report.gauss_newton_hessian;
    let h = [
        [d[0] * h_raw[0][0] * d[0], d[0] * h_raw[0][1] * d[1]],
        [d[1] * h_raw[1][0] * d[0], d[1] * h_raw[1][1] * d[1]],
    ];
    let h_scale = h.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    (g, h, h_scale)
}

/// Fails when the derivatives vanish identically: nothing in the data moves
/// with either time constant.
fn ensure_informative(report: &EnergyReport, taus: TimeConstants) -> Result<()> {
    let (g, _, h_scale) = transformed_system(report, taus);
    let g_scale = g[0].abs().max(g[1].abs());
    if h_scale <= 1e-30 && g_scale <= 1e-30 {
        return Err(Error::DegenerateData(
            "correspondences carry no time-constant information \
             (zero gradient and zero normal matrix)"
                .into(),
        ));
    }
    Ok(())
}

fn optimize_window(
    seq: &VideoSequence,
    correspondences: &[Correspondence],
    init: TimeConstants,
    config: &WindowConfig,
    kernel: &RobustKernel,
) -> Result<WindowEstimate> {
    let mut taus = init;
    let mut report = energy_and_derivatives(correspondences, seq, taus, kernel)?;
    let mut energy = report.total_energy;
    let mut trace = vec![energy];
    let mut lambda = config.damping_init;
    let mut iterations = 0;
    // Reject data with no information before accepting a zero-energy start:
    // identical frames on an unvarying schedule satisfy the model for every
    // tau, which is precisely what the degeneracy test catches.
    ensure_informative(&report, taus)?;
    let mut converged = energy <= ENERGY_FLOOR;

    while !converged && iterations < config.max_iterations {
        iterations += 1;
        let (g, h, h_scale) = transformed_system(&report, taus);
        ensure_informative(&report, taus)?;

        // Inner damping loop: escalate until a step is solvable and does not
        // increase the energy.
        let accepted = loop {
            let m = [
                [h[0][0] + lambda, h[0][1]],
                [h[1][0], h[1][1] + lambda],
            ];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            let step = if det.abs() <= 1e-30 * (1.0 + h_scale * h_scale) || !det.is_finite() {
                None
            } else {
                let sx = (-g[0] * m[1][1] + g[1] * m[0][1]) / det;
                let sy = (-m[0][0] * g[1] + m[1][0] * g[0]) / det;
                Some([
                    sx.clamp(-MAX_LOG_STEP, MAX_LOG_STEP),
                    sy.clamp(-MAX_LOG_STEP, MAX_LOG_STEP),
                ])
            };
            let candidate = step.and_then(|s| {
                let t = TimeConstants::new(
                    (taus.tau_h().ln() + s[0]).exp(),
                    (taus.tau_c().ln() + s[1]).exp(),
                )
                .ok()?;
                let rep = energy_and_derivatives(correspondences, seq, t, kernel).ok()?;
                (rep.total_energy <= energy).then_some((s, t, rep))
            });
            match candidate {
                Some(hit) => break Some(hit),
                None => {
                    lambda = if lambda == 0.0 {
                        DAMPING_ENGAGE
                    } else {
                        lambda * 10.0
                    };
                    if lambda > DAMPING_MAX {
                        if h_scale <= 1e-30 {
                            return Err(Error::DegenerateData(
                                "singular normal equations after damping escalation".into(),
                            ));
                        }
                        break None;
                    }
                }
            }
        };

        let Some((step, new_taus, new_report)) = accepted else {
            // Damping escalation failed on informative data: stall, report
            // the best point reached.
            break;
        };
        let previous = energy;
        taus = new_taus;
        report = new_report;
        energy = report.total_energy;
        trace.push(energy);
        if lambda > 0.0 {
            lambda /= 10.0;
        }

        let step_size = step[0].abs().max(step[1].abs());
        let rel_drop = (previous - energy) / previous.max(f64::MIN_POSITIVE);
        if step_size <= config.step_tolerance
            || rel_drop <= config.energy_tolerance
            || energy <= ENERGY_FLOOR
        {
            converged = true;
        }
    }

    Ok(WindowEstimate {
        first_frame: 0,
        last_frame: 0,
        term_count: correspondences.len(),
        taus,
        iterations,
        final_energy: energy,
        converged,
        energy_trace: trace,
        normal_condition: log_space_condition(&report, taus),
    })
}
