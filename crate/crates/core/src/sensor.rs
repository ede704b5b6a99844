//! Pixel thermal dynamics: heating during exposure, cooling between frames.
//!
//! A microbolometer pixel behaves as a first-order thermal system. While the
//! shutter is open the measured intensity `I` relaxes toward the steady-state
//! value `I_ss` fixed by the scene:
//!
//! ```text
//! tau_h * dI/dt + I = I_ss
//! ```
//!
//! and during readout, with no incoming flux, it relaxes back toward zero:
//!
//! ```text
//! tau_c * dI/dt + I = 0
//! ```
//!
//! Both equations have closed-form solutions, exposed here as
//! [`heating_response`] and [`cooling_response`]. Because exposure times are
//! comparable to the time constants, a frame captured over `t_e` only reaches
//! the fraction `1 - exp(-t_e / tau_h)` of steady state, and whatever intensity
//! is left at the end of a readout interval `t_r` leaks into the next frame as
//! a residual scaled by `exp(-t_r / tau_c)`. [`steady_state_from_measurement`]
//! inverts the first effect for a single frame; [`simulate_pixel_sequence`]
//! plays both forward over a whole timing schedule.
//!
//! Two forward models are offered, selected by [`SimulationMode`]. In
//! [`SimulationMode::ClosedForm`] the carried residual is added to the freshly
//! heated value unchanged, which makes the model the exact inverse of the
//! closed-form correction in [`crate::correction`]. In
//! [`SimulationMode::PhysicalOde`] the residual itself keeps relaxing during
//! the exposure (it enters the heating equation as the initial condition), a
//! slightly colder and more physical account. The gap between the two modes
//! bounds the model error a closed-form correction can commit.

use crate::error::{ensure_finite, Error, Result};

/// Smallest heating fraction `1 - exp(-t_e / tau_h)` this crate will divide
/// by. Below this the exposure captured essentially none of the steady-state
/// signal and inversion would amplify noise by more than twelve decades.
pub const MIN_HEATING_FRACTION: f64 = 1e-12;

/// Heating and cooling time constants of a pixel, in seconds.
///
/// Both constants are strictly positive and finite; construction enforces
/// this so downstream code can divide by them freely.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeConstants {
    tau_h: f64,
    tau_c: f64,
}

impl TimeConstants {
    /// Validates and wraps a (heating, cooling) pair, both in seconds.
    pub fn new(tau_h: f64, tau_c: f64) -> Result<Self> {
        for (value, name) in [(tau_h, "tau_h"), (tau_c, "tau_c")] {
            ensure_finite(value, name)?;
            if value <= 0.0 {
                return Err(Error::domain(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        Ok(TimeConstants { tau_h, tau_c })
    }

    /// Heating time constant in seconds.
    pub fn tau_h(&self) -> f64 {
        self.tau_h
    }

    /// Cooling time constant in seconds.
    pub fn tau_c(&self) -> f64 {
        self.tau_c
    }
}

/// Exposure schedule of one frame.
///
/// `timestamp` is the exposure start in seconds, `exposure` the shutter-open
/// interval, and `readout` the idle interval before the next exposure begins.
/// Exposure is strictly positive; readout may be zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameTiming {
    timestamp: f64,
    exposure: f64,
    readout: f64,
}

impl FrameTiming {
    /// Validates and wraps a frame timing, all fields in seconds.
    pub fn new(timestamp: f64, exposure: f64, readout: f64) -> Result<Self> {
        ensure_finite(timestamp, "timestamp")?;
        ensure_finite(exposure, "exposure")?;
        ensure_finite(readout, "readout")?;
        if exposure <= 0.0 {
            return Err(Error::domain(format!(
                "exposure must be positive, got {exposure}"
            )));
        }
        if readout < 0.0 {
            return Err(Error::domain(format!(
                "readout must be nonnegative, got {readout}"
            )));
        }
        Ok(FrameTiming {
            timestamp,
            exposure,
            readout,
        })
    }

    /// Exposure start in seconds.
    pub fn timestamp(&self) -> f64 {
        self.timestamp
    }

    /// Shutter-open interval in seconds.
    pub fn exposure(&self) -> f64 {
        self.exposure
    }

    /// Idle interval after exposure in seconds.
    pub fn readout(&self) -> f64 {
        self.readout
    }

    /// Full frame period: exposure plus readout.
    pub fn period(&self) -> f64 {
        self.exposure + self.readout
    }
}

/// Thermal intensity a pixel carries between frames.
///
/// The value is the intensity left over at the end of a readout interval; it
/// becomes the initial condition of the next exposure. A pixel that has fully
/// relaxed is [`PixelState::cold`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelState {
    value: f64,
}

impl PixelState {
    /// Wraps a finite carried intensity.
    pub fn new(value: f64) -> Result<Self> {
        ensure_finite(value, "pixel state")?;
        Ok(PixelState { value })
    }

    /// A fully relaxed pixel (zero carried intensity).
    pub fn cold() -> Self {
        PixelState { value: 0.0 }
    }

    /// Carried intensity in digital units.
    pub fn value(&self) -> f64 {
        self.value
    }
}

/// How [`simulate_pixel_sequence`] treats the residual carried into a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimulationMode {
    /// The residual is added to the freshly heated value unchanged. This is
    /// the exact forward model inverted by the closed-form correction: raw
    /// value = film * heating fraction + residual.
    ClosedForm,
    /// The residual enters the heating equation as the initial condition and
    /// keeps relaxing during the exposure: raw value =
    /// film * heating fraction + residual * exp(-t_e / tau_h).
    PhysicalOde,
}

/// Intensity reached after heating toward `i_ss` for `t` seconds from the
/// initial intensity `i_init`.
///
/// Solution of `tau_h * dI/dt + I = i_ss` with `I(0) = i_init`:
/// `I(t) = i_ss + (i_init - i_ss) * exp(-t / tau_h)`. At `t = 0` this returns
/// `i_init` exactly; as `t` grows it approaches `i_ss`.
///
/// # Example
///
/// ```
/// let v = bolocor::sensor::heating_response(100.0, 0.010, 0.010, 0.0).unwrap();
/// assert!((v - 63.212055882855765).abs() < 1e-12);
/// ```
pub fn heating_response(i_ss: f64, tau_h: f64, t: f64, i_init: f64) -> Result<f64> {
    ensure_finite(i_ss, "i_ss")?;
    ensure_finite(i_init, "i_init")?;
    check_tau_and_time(tau_h, "tau_h", t)?;
    Ok(i_ss + (i_init - i_ss) * (-t / tau_h).exp())
}

/// Intensity left after cooling from `i0` for `t` seconds with no input.
///
/// Solution of `tau_c * dI/dt + I = 0` with `I(0) = i0`:
/// `I(t) = i0 * exp(-t / tau_c)`. At `t = 0` this returns `i0` exactly.
pub fn cooling_response(i0: f64, tau_c: f64, t: f64) -> Result<f64> {
    ensure_finite(i0, "i0")?;
    check_tau_and_time(tau_c, "tau_c", t)?;
    Ok(i0 * (-t / tau_c).exp())
}

/// Steady-state intensity recovered from a single measurement taken over
/// exposure `t_e` by a pixel that started cold.
///
/// Inverts [`heating_response`] with `i_init = 0`:
/// `i_ss = measured / (1 - exp(-t_e / tau_h))`. Fails with
/// [`Error::IllConditioned`] when the heating fraction falls below
/// [`MIN_HEATING_FRACTION`].
pub fn steady_state_from_measurement(measured: f64, tau_h: f64, t_e: f64) -> Result<f64> {
    ensure_finite(measured, "measured")?;
    check_tau_and_time(tau_h, "tau_h", t_e)?;
    if t_e <= 0.0 {
        return Err(Error::domain(format!(
            "exposure must be positive, got {t_e}"
        )));
    }
    let fraction = 1.0 - (-t_e / tau_h).exp();
    if fraction < MIN_HEATING_FRACTION {
        return Err(Error::IllConditioned(format!(
            "heating fraction {fraction:.3e} below {MIN_HEATING_FRACTION:.0e} \
             (exposure {t_e} s is negligible against tau_h {tau_h} s)"
        )));
    }
    Ok(measured / fraction)
}

/// Raw values one pixel reports across a whole timing schedule.
///
/// `film[k]` is the steady-state intensity the scene presents during frame
/// `k`. The pixel starts cold. Each frame heats toward `film[k]` over its
/// exposure, and the result cools over that frame's readout to become the
/// residual carried into frame `k + 1` (so the residual entering frame `k`
/// decays over `timings[k - 1].readout()`). The two [`SimulationMode`]s
/// differ only in whether the residual keeps relaxing during the exposure.
///
/// Both modes are linear in the film, and with a zero film they return zeros.
pub fn simulate_pixel_sequence(
    film: &[f64],
    timings: &[FrameTiming],
    taus: TimeConstants,
    mode: SimulationMode,
) -> Result<Vec<f64>> {
    if film.is_empty() {
        return Err(Error::domain("film must contain at least one frame"));
    }
    if film.len() != timings.len() {
        return Err(Error::domain(format!(
            "film has {} frames but timings has {}",
            film.len(),
            timings.len()
        )));
    }
    for (k, &value) in film.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::domain(format!(
                "film value at frame {k} must be finite, got {value}"
            )));
        }
    }
    let mut raw = Vec::with_capacity(film.len());
    let mut state = PixelState::cold();
    for (k, (&i_ss, timing)) in film.iter().zip(timings).enumerate() {
        let heated = match mode {
            SimulationMode::ClosedForm => {
                heating_response(i_ss, taus.tau_h(), timing.exposure(), 0.0)? + state.value()
            }
            SimulationMode::PhysicalOde => {
                heating_response(i_ss, taus.tau_h(), timing.exposure(), state.value())?
            }
        };
        raw.push(heated);
        if k + 1 < film.len() {
            state = PixelState::new(cooling_response(heated, taus.tau_c(), timing.readout())?)?;
        }
    }
    Ok(raw)
}

fn check_tau_and_time(tau: f64, name: &str, t: f64) -> Result<()> {
    ensure_finite(tau, name)?;
    ensure_finite(t, "t")?;
    if tau <= 0.0 {
        return Err(Error::domain(format!("{name} must be positive, got {tau}")));
    }
    if t < 0.0 {
        return Err(Error::domain(format!("t must be nonnegative, got {t}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn thirty_fps(exposure: f64, n: usize) -> Vec<FrameTiming> {
        (0..n)
            .map(|i| FrameTiming::new(i as f64 / 30.0, exposure, 1.0 / 30.0 - exposure).unwrap())
            .collect()
    }

    #[test]
    fn heating_starts_at_initial_value() {
        assert_eq!(heating_response(100.0, 0.010, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(heating_response(100.0, 0.010, 0.0, 17.5).unwrap(), 17.5);
    }

    #[test]
    fn heating_one_time_constant() {
        // 100 * (1 - exp(-1)), exposure equal to tau_h.
        let v = heating_response(100.0, 0.010, 0.010, 0.0).unwrap();
        assert_relative_eq!(v, 63.212055882855765, max_relative = 1e-15);
    }

    #[test]
    fn heating_saturates_at_steady_state() {
        let v = heating_response(100.0, 0.010, 1.0, 0.0).unwrap();
        assert_relative_eq!(v, 100.0, max_relative = 1e-9);
    }

    #[test]
    fn cooling_starts_at_initial_value() {
        assert_eq!(cooling_response(100.0, 0.010, 0.0).unwrap(), 100.0);
        assert_eq!(cooling_response(0.0, 0.010, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn cooling_thirty_fps_readout() {
        // 100 * exp(-(1/30 - 0.010) / 0.010).
        let t_r = 1.0 / 30.0 - 0.010;
        let v = cooling_response(100.0, 0.010, t_r).unwrap();
        assert_relative_eq!(v, 9.697196786440509, max_relative = 1e-15);
    }

    #[test]
    fn steady_state_inverts_heating() {
        let v = steady_state_from_measurement(100.0, 0.010, 0.010).unwrap();
        assert_relative_eq!(v, 158.19767068693264, max_relative = 1e-15);

        let measured = heating_response(240.0, 0.012, 0.005, 0.0).unwrap();
        let back = steady_state_from_measurement(measured, 0.012, 0.005).unwrap();
        assert_relative_eq!(back, 240.0, max_relative = 1e-12);
    }

    #[test]
    fn steady_state_long_exposure_is_nearly_identity() {
        let v = steady_state_from_measurement(100.0, 0.010, 1.0).unwrap();
        assert_relative_eq!(v, 100.0, max_relative = 1e-9);
    }

    #[test]
    fn steady_state_rejects_negligible_exposure() {
        let err = steady_state_from_measurement(10.0, 10.0, 1e-12).unwrap_err();
        assert!(matches!(err, Error::IllConditioned(_)), "got {err}");
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(TimeConstants::new(0.0, 0.010).is_err());
        assert!(TimeConstants::new(0.010, -1.0).is_err());
        assert!(TimeConstants::new(f64::NAN, 0.010).is_err());
        assert!(FrameTiming::new(0.0, 0.0, 0.01).is_err());
        assert!(FrameTiming::new(0.0, 0.01, -0.01).is_err());
        assert!(heating_response(1.0, -0.010, 0.0, 0.0).is_err());
        assert!(heating_response(1.0, 0.010, -1.0, 0.0).is_err());
        assert!(cooling_response(1.0, 0.010, f64::INFINITY).is_err());
        assert!(steady_state_from_measurement(1.0, 0.010, 0.0).is_err());
        assert!(PixelState::new(f64::NAN).is_err());
    }

    #[test]
    fn simulate_single_frame_is_pure_heating() {
        let taus = TimeConstants::new(0.010, 0.010).unwrap();
        let raw =
            simulate_pixel_sequence(&[100.0], &thirty_fps(0.010, 1), taus, SimulationMode::ClosedForm)
                .unwrap();
        assert_relative_eq!(raw[0], 63.212055882855765, max_relative = 1e-15);
    }

    #[test]
    fn simulate_two_frames_carries_residual() {
        let taus = TimeConstants::new(0.010, 0.010).unwrap();
        let raw = simulate_pixel_sequence(
            &[100.0, 100.0],
            &thirty_fps(0.010, 2),
            taus,
            SimulationMode::ClosedForm,
        )
        .unwrap();
        // Frame 1 = fresh heating + decayed frame 0.
        assert_relative_eq!(raw[0], 63.212055882855765, max_relative = 1e-15);
        assert_relative_eq!(raw[1], 69.34185333457103, max_relative = 1e-15);
    }

    #[test]
    fn simulate_zero_film_returns_zeros() {
        let taus = TimeConstants::new(0.009, 0.014).unwrap();
        for mode in [SimulationMode::ClosedForm, SimulationMode::PhysicalOde] {
            let raw = simulate_pixel_sequence(&[0.0; 5], &thirty_fps(0.010, 5), taus, mode).unwrap();
            assert_eq!(raw, vec![0.0; 5]);
        }
    }

    #[test]
    fn simulate_rejects_mismatched_lengths() {
        let taus = TimeConstants::new(0.010, 0.010).unwrap();
        let err = simulate_pixel_sequence(
            &[1.0, 2.0],
            &thirty_fps(0.010, 3),
            taus,
            SimulationMode::ClosedForm,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "got {err}");
        assert!(simulate_pixel_sequence(&[], &[], taus, SimulationMode::ClosedForm).is_err());
    }

    #[test]
    fn physical_mode_discrepancy_follows_residual_recurrence() {
        // delta_k = physical_k - closed_k obeys
        //   |delta_1| = residual_0 * (1 - exp(-t_e1 / tau_h))        (shared frame 0)
        //   |delta_k| <= residual_{k-1} * (1 - exp(-t_ek / tau_h)) + decay_k * |delta_{k-1}|
        // where residual_{k-1} = decay_k * closed_{k-1} is the carried history.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let taus = TimeConstants::new(
                rng.random_range(0.008..0.015),
                rng.random_range(0.008..0.015),
            )
            .unwrap();
            let n = rng.random_range(2..8usize);
            let exposures = [0.005, 0.010, 0.020];
            let timings: Vec<FrameTiming> = (0..n)
                .map(|i| {
                    let t_e = exposures[rng.random_range(0..3)];
                    FrameTiming::new(i as f64 / 30.0, t_e, 1.0 / 30.0 - t_e).unwrap()
                })
                .collect();
            let film: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..500.0)).collect();
            let closed =
                simulate_pixel_sequence(&film, &timings, taus, SimulationMode::ClosedForm).unwrap();
            let physical =
                simulate_pixel_sequence(&film, &timings, taus, SimulationMode::PhysicalOde).unwrap();

            let mut prev_delta = 0.0f64;
            for k in 1..n {
                let decay = (-timings[k - 1].readout() / taus.tau_c()).exp();
                let fraction = 1.0 - (-timings[k].exposure() / taus.tau_h()).exp();
                let residual = decay * closed[k - 1];
                let delta = (physical[k] - closed[k]).abs();
                if k == 1 {
                    assert_relative_eq!(delta, residual * fraction, max_relative = 1e-12);
                }
                let bound = residual * fraction + decay * prev_delta;
                assert!(
                    delta <= bound * (1.0 + 1e-12) + 1e-15,
                    "frame {k}: discrepancy {delta} exceeds bound {bound}"
                );
                prev_delta = delta;
            }
        }
    }

    proptest! {
        #[test]
        fn heating_is_monotone_in_time(
            i_ss in 1.0..500.0f64,
            tau in 0.005..0.030f64,
            t1 in 0.0..0.1f64,
            dt in 0.0..0.1f64,
        ) {
            // Starting cold below steady state, intensity never decreases with time.
            let a = heating_response(i_ss, tau, t1, 0.0).unwrap();
            let b = heating_response(i_ss, tau, t1 + dt, 0.0).unwrap();
            prop_assert!(b >= a - 1e-12 * i_ss);
        }

        #[test]
        fn cooling_is_monotone_in_time(
            i0 in 0.0..500.0f64,
            tau in 0.005..0.030f64,
            t1 in 0.0..0.1f64,
            dt in 0.0..0.1f64,
        ) {
            let a = cooling_response(i0, tau, t1).unwrap();
            let b = cooling_response(i0, tau, t1 + dt).unwrap();
            prop_assert!(b <= a + 1e-12 * (i0 + 1.0));
        }

        #[test]
        fn simulation_is_linear_in_film(
            f1 in proptest::collection::vec(-100.0..400.0f64, 1..6),
            alpha in -2.0..2.0f64,
            scale_beta in -2.0..2.0f64,
            tau_h in 0.008..0.015f64,
            tau_c in 0.008..0.015f64,
        ) {
            let n = f1.len();
            let f2: Vec<f64> = f1.iter().rev().map(|v| v * 0.7 + 3.0).collect();
            let timings: Vec<FrameTiming> = (0..n)
                .map(|i| FrameTiming::new(i as f64 / 30.0, 0.010, 1.0 / 30.0 - 0.010).unwrap())
                .collect();
            let taus = TimeConstants::new(tau_h, tau_c).unwrap();
            for mode in [SimulationMode::ClosedForm, SimulationMode::PhysicalOde] {
                let combo: Vec<f64> = f1
                    .iter()
                    .zip(&f2)
                    .map(|(a, b)| alpha * a + scale_beta * b)
                    .collect();
                let s1 = simulate_pixel_sequence(&f1, &timings, taus, mode).unwrap();
                let s2 = simulate_pixel_sequence(&f2, &timings, taus, mode).unwrap();
                let sc = simulate_pixel_sequence(&combo, &timings, taus, mode).unwrap();
                for k in 0..n {
                    let expect = alpha * s1[k] + scale_beta * s2[k];
                    prop_assert!(
                        (sc[k] - expect).abs() <= 1e-9 * (1.0 + expect.abs()),
                        "frame {}: {} vs {}", k, sc[k], expect
                    );
                }
            }
        }
    }
}
