//! Robust photometric consistency energy over pixel correspondences.
//!
//! Two raw frames observing the same scene point should agree once sensor
//! dynamics are accounted for. For a correspondence between pixel `p` in host
//! frame `i` and pixel `p'` in target frame `j`, each frame's fresh
//! contribution is its raw value minus the decayed previous raw value, and the
//! two contributions differ only by the ratio of heating fractions
//! [`beta_factor`]. The per-term residual is therefore
//!
//! ```text
//! r = (I_j[p'] - decay_j * I_{j-1}[p']) - beta * (I_i[p] - decay_i * I_{i-1}[p])
//! ```
//!
//! evaluated at every pattern offset around the pair. Terms are weighted by
//! [`gradient_weight`] (high-gradient pixels are likely misaligned by
//! sub-pixel error, so they count less) and passed through the Huber kernel
//! [`huber`] to tame outliers.
//!
//! [`energy_and_derivatives`] also returns the exact analytic gradient of the
//! energy with respect to `(tau_h, tau_c)` and the Gauss-Newton normal matrix
//! accumulated from per-term Jacobians with Huber handled as an
//! iteratively-reweighted least-squares weight. Terms accumulate in
//! correspondence order, then pattern order, so the reduction is
//! deterministic bit for bit.

use crate::correction::VideoSequence;
use crate::error::{Error, Result};
use crate::sensor::{TimeConstants, MIN_HEATING_FRACTION};

/// A pixel pair asserted to observe the same scene point.
///
/// `host_frame` and `target_frame` must both have a predecessor (index at
/// least 1) because each side of the residual subtracts the decayed previous
/// frame. `pattern` lists integer offsets applied to both pixels; every
/// offset must stay inside the frame for both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Correspondence {
    pub host_frame: usize,
    pub host_pixel: (usize, usize),
    pub target_frame: usize,
    pub target_pixel: (usize, usize),
    pub pattern: Vec<(i32, i32)>,
}

impl Correspondence {
    /// Single-offset correspondence (pattern `[(0, 0)]`).
    pub fn point(
        host_frame: usize,
        host_pixel: (usize, usize),
        target_frame: usize,
        target_pixel: (usize, usize),
    ) -> Self {
        Correspondence {
            host_frame,
            host_pixel,
            target_frame,
            target_pixel,
            pattern: vec![(0, 0)],
        }
    }

    /// Checks this correspondence against a sequence's bounds.
    pub fn validate(&self, seq: &VideoSequence) -> Result<()> {
        if self.host_frame == self.target_frame {
            return Err(Error::domain(format!(
                "correspondence {self:?}: host and target frame must differ"
            )));
        }
        for (name, frame) in [("host", self.host_frame), ("target", self.target_frame)] {
            if frame == 0 {
                return Err(Error::domain(format!(
                    "correspondence {self:?}: {name} frame must have a predecessor"
                )));
            }
            if frame >= seq.len() {
                return Err(Error::domain(format!(
                    "correspondence {self:?}: {name} frame {frame} outside sequence of {} frames",
                    seq.len()
                )));
            }
        }
        if self.pattern.is_empty() {
            return Err(Error::domain(format!(
                "correspondence {self:?}: pattern must be nonempty"
            )));
        }
        let frame = seq.frame(0);
        for &(dx, dy) in &self.pattern {
            for (name, (x, y)) in [("host", self.host_pixel), ("target", self.target_pixel)] {
                let (px, py) = (x as i64 + dx as i64, y as i64 + dy as i64);
                if !frame.contains(px, py) {
                    return Err(Error::domain(format!(
                        "correspondence {self:?}: offset ({dx}, {dy}) pushes {name} pixel \
                         ({x}, {y}) outside {}x{}",
                        frame.width(),
                        frame.height()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Robustness parameters of the energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustKernel {
    /// Huber knee: residuals beyond this magnitude grow linearly.
    pub huber_gamma: f64,
    /// Gradient-weight scale `c`; pixels with gradient magnitude `c` get
    /// weight one half.
    pub gradient_scale: f64,
}

impl RobustKernel {
    pub fn new(huber_gamma: f64, gradient_scale: f64) -> Result<Self> {
        if !(huber_gamma.is_finite() && huber_gamma > 0.0) {
            return Err(Error::domain(format!(
                "huber_gamma must be positive and finite, got {huber_gamma}"
            )));
        }
        if !(gradient_scale.is_finite() && gradient_scale > 0.0) {
            return Err(Error::domain(format!(
                "gradient_scale must be positive and finite, got {gradient_scale}"
            )));
        }
        Ok(RobustKernel {
            huber_gamma,
            gradient_scale,
        })
    }
}

impl Default for RobustKernel {
    /// Operating point used throughout the crate's own experiments: knee at 9
    /// digital units, gradient scale 50 digital units per pixel. Both are
    /// tunable; no data-derived claim is attached to them.
    fn default() -> Self {
        RobustKernel {
            huber_gamma: 9.0,
            gradient_scale: 50.0,
        }
    }
}

/// Energy, raw residuals, and derivatives for one correspondence set.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    /// Sum of weighted Huber terms.
    pub total_energy: f64,
    /// Raw (pre-Huber, pre-weight) residual of every term, in correspondence
    /// order then pattern order.
    pub per_term_residuals: Vec<f64>,
    /// Exact gradient `(dE/dtau_h, dE/dtau_c)`.
    pub gradient: [f64; 2],
    /// Gauss-Newton normal matrix: `sum 2 w omega J J^T` with `omega` the
    /// Huber reweighting. Symmetric positive semidefinite.
    pub gauss_newton_hessian: [[f64; 2]; 2],
}

impl EnergyReport {
    /// Condition number of the normal matrix; infinite when it is singular.
    pub fn condition_number(&self) -> f64 {
        sym2x2_condition(&self.gauss_newton_hessian)
    }
}

/// Ratio of eigenvalues of a symmetric 2x2 matrix; infinite when the smaller
/// eigenvalue is not strictly positive.
pub fn sym2x2_condition(m: &[[f64; 2]; 2]) -> f64 {
    let (a, b, c) = (m[0][0], m[0][1], m[1][1]);
    let half_trace = 0.5 * (a + c);
    let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let lo = half_trace - disc;
    let hi = half_trace + disc;
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Exposure compensation between a target and a host frame:
/// `(1 - exp(-exposure_target / tau_h)) / (1 - exp(-exposure_host / tau_h))`.
///
/// Equal exposures give exactly 1. Fails with [`Error::IllConditioned`] when
/// the host heating fraction falls below
/// [`MIN_HEATING_FRACTION`](crate::sensor::MIN_HEATING_FRACTION).
pub fn beta_factor(exposure_target: f64, exposure_host: f64, tau_h: f64) -> Result<f64> {
    for (value, name) in [
        (exposure_target, "exposure_target"),
        (exposure_host, "exposure_host"),
        (tau_h, "tau_h"),
    ] {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::domain(format!(
                "{name} must be positive and finite, got {value}"
            )));
        }
    }
    let numerator = 1.0 - (-exposure_target / tau_h).exp();
    let denominator = 1.0 - (-exposure_host / tau_h).exp();
    if denominator < MIN_HEATING_FRACTION {
        return Err(Error::IllConditioned(format!(
            "host heating fraction {denominator:.3e} below {MIN_HEATING_FRACTION:.0e}"
        )));
    }
    Ok(numerator / denominator)
}

/// Huber kernel: `r^2` inside the knee, `gamma * (2|r| - gamma)` beyond it.
///
/// Continuous with continuous first derivative at `|r| = gamma`, even in `r`,
/// and bounded above by `r^2` everywhere. `gamma` must be positive.
pub fn huber(r: f64, gamma: f64) -> f64 {
    debug_assert!(gamma > 0.0, "huber gamma must be positive");
    let a = r.abs();
    if a <= gamma {
        r * r
    } else {
        gamma * (2.0 * a - gamma)
    }
}

/// Down-weighting of high-gradient pixels: `c^2 / (c^2 + grad_mag^2)`.
///
/// Equals 1 on flat image regions and decays toward 0 as the local gradient
/// magnitude grows past `c`.
pub fn gradient_weight(grad_mag: f64, c: f64) -> f64 {
    debug_assert!(c > 0.0, "gradient scale must be positive");
    let c2 = c * c;
    c2 / (c2 + grad_mag * grad_mag)
}

/// Raw residual of one correspondence at its base pixel pair (offset zero):
/// pre-Huber and pre-weight.
pub fn residual_term(
    corr: &Correspondence,
    seq: &VideoSequence,
    taus: TimeConstants,
) -> Result<f64> {
    corr.validate(seq)?;
    let ctx = PairContext::build(corr, seq, taus)?;
    Ok(ctx.residual(corr, seq, (0, 0)))
}

/// Total energy, per-term residuals, analytic gradient, and Gauss-Newton
/// normal matrix over a correspondence set.
///
/// The gradient is the exact derivative of the energy (the Huber derivative
/// is `2 r` inside the knee and `2 gamma sign(r)` beyond). The normal matrix
/// treats Huber as an IRLS weight `omega = min(1, gamma / |r|)`:
/// `sum 2 w omega J J^T`. Gradient weights come from central differences on
/// the raw host frame with clamp-to-edge borders.
pub fn energy_and_derivatives(
    correspondences: &[Correspondence],
    seq: &VideoSequence,
    taus: TimeConstants,
    kernel: &RobustKernel,
) -> Result<EnergyReport> {
    let mut total = 0.0;
    let mut residuals = Vec::new();
    let mut gradient = [0.0; 2];
    let mut hessian = [[0.0; 2]; 2];
    for corr in correspondences {
        corr.validate(seq)?;
        let ctx = PairContext::build(corr, seq, taus)?;
        for &offset in &corr.pattern {
            let (r, jac) = ctx.residual_and_jacobian(corr, seq, offset);
            let host = hp(corr.host_pixel, offset);
            let grad_mag = image_gradient_magnitude(seq, corr.host_frame, host);
            let w = gradient_weight(grad_mag, kernel.gradient_scale);
            let omega = if r.abs() <= kernel.huber_gamma {
                1.0
            } else {
                kernel.huber_gamma / r.abs()
            };
            total += w * huber(r, kernel.huber_gamma);
            let scale = 2.0 * w * omega;
            gradient[0] += scale * r * jac[0];
            gradient[1] += scale * r * jac[1];
            for a in 0..2 {
                for b in 0..2 {
                    // jac[a] * jac[b] first: multiplication commutes, so the
                    // matrix stays bitwise symmetric.
                    hessian[a][b] += scale * (jac[a] * jac[b]);
                }
            }
            residuals.push(r);
        }
    }
    Ok(EnergyReport {
        total_energy: total,
        per_term_residuals: residuals,
        gradient,
        gauss_newton_hessian: hessian,
    })
}

/// Per-correspondence quantities that do not depend on the pattern offset.
struct PairContext {
    decay_host: f64,
    decay_target: f64,
    /// d(decay)/d(tau_c) for each side.
    ddecay_host: f64,
    ddecay_target: f64,
    beta: f64,
    dbeta_dtau_h: f64,
}

impl PairContext {
    fn build(corr: &Correspondence, seq: &VideoSequence, taus: TimeConstants) -> Result<Self> {
        let tau_c = taus.tau_c();
        let tau_h = taus.tau_h();
        let tr_host = seq.frame(corr.host_frame - 1).timing().readout();
        let tr_target = seq.frame(corr.target_frame - 1).timing().readout();
        let decay_host = (-tr_host / tau_c).exp();
        let decay_target = (-tr_target / tau_c).exp();

        let te_host = seq.frame(corr.host_frame).timing().exposure();
        let te_target = seq.frame(corr.target_frame).timing().exposure();
        let beta = beta_factor(te_target, te_host, tau_h).map_err(|e| match e {
            Error::IllConditioned(msg) => Error::IllConditioned(format!(
                "frames {} and {}: {msg}",
                corr.host_frame, corr.target_frame
            )),
            other => other,
        })?;
        let numerator = 1.0 - (-te_target / tau_h).exp();
        let denominator = 1.0 - (-te_host / tau_h).exp();
        let dnum = -(-te_target / tau_h).exp() * te_target / (tau_h * tau_h);
        let dden = -(-te_host / tau_h).exp() * te_host / (tau_h * tau_h);
        let dbeta_dtau_h = (dnum * denominator - numerator * dden) / (denominator * denominator);

        Ok(PairContext {
            decay_host,
            decay_target,
            ddecay_host: decay_host * tr_host / (tau_c * tau_c),
            ddecay_target: decay_target * tr_target / (tau_c * tau_c),
            beta,
            dbeta_dtau_h,
        })
    }

    fn residual(&self, corr: &Correspondence, seq: &VideoSequence, offset: (i32, i32)) -> f64 {
        self.residual_and_jacobian(corr, seq, offset).0
    }

    fn residual_and_jacobian(
        &self,
        corr: &Correspondence,
        seq: &VideoSequence,
        offset: (i32, i32),
    ) -> (f64, [f64; 2]) {
        let (hx, hy) = hp(corr.host_pixel, offset);
        let (tx, ty) = hp(corr.target_pixel, offset);
        let i_host = seq.frame(corr.host_frame).get(hx, hy);
        let i_host_prev = seq.frame(corr.host_frame - 1).get(hx, hy);
        let i_target = seq.frame(corr.target_frame).get(tx, ty);
        let i_target_prev = seq.frame(corr.target_frame - 1).get(tx, ty);

        let host_fresh = i_host - self.decay_host * i_host_prev;
        let target_fresh = i_target - self.decay_target * i_target_prev;
        let r = target_fresh - self.beta * host_fresh;
        let dr_dtau_h = -self.dbeta_dtau_h * host_fresh;
        let dr_dtau_c =
            -self.ddecay_target * i_target_prev + self.beta * self.ddecay_host * i_host_prev;
        (r, [dr_dtau_h, dr_dtau_c])
    }
}

fn hp(pixel: (usize, usize), offset: (i32, i32)) -> (usize, usize) {
    (
        (pixel.0 as i64 + offset.0 as i64) as usize,
        (pixel.1 as i64 + offset.1 as i64) as usize,
    )
}

/// Central-difference gradient magnitude with clamp-to-edge borders.
fn image_gradient_magnitude(seq: &VideoSequence, frame: usize, pixel: (usize, usize)) -> f64 {
    let f = seq.frame(frame);
    let (x, y) = pixel;
    let xm = x.saturating_sub(1);
    let xp = (x + 1).min(f.width() - 1);
    let ym = y.saturating_sub(1);
    let yp = (y + 1).min(f.height() - 1);
    let gx = 0.5 * (f.get(xp, y) - f.get(xm, y));
    let gy = 0.5 * (f.get(x, yp) - f.get(x, ym));
    (gx * gx + gy * gy).sqrt()
}
