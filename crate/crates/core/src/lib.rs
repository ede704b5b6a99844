//! Photometric correction for microbolometer (thermal infrared) video.
//!
//! Uncooled microbolometer pixels do not sample irradiance instantaneously. Each
//! pixel is a thermal mass: during an exposure it heats toward a steady-state
//! value with time constant `tau_h`, and between exposures it cools toward zero
//! with time constant `tau_c`. Typical time constants (around 8 to 15 ms) are of
//! the same order as the exposure itself, so every raw frame is both attenuated
//! (the pixel never reaches steady state) and contaminated by a decayed copy of
//! the previous frame (the pixel has not finished cooling). The visible symptoms
//! are trailing ghosts behind moving warm objects and intensity that wanders with
//! the exposure schedule.
//!
//! Both defects are invertible once the two time constants are known. This crate
//! provides the full loop:
//!
//! * [`sensor`]: the pixel dynamics themselves. Closed-form heating and cooling
//!   responses, steady-state inversion, and a forward simulator that turns an
//!   ideal irradiance sequence into the raw values a sensor would report.
//! * [`correction`]: the closed-form inverse. Per-frame-pair gain and decay
//!   coefficients and whole-sequence correction that recovers the irradiance
//!   film from raw video.
//! * [`photometric`]: a robust photometric consistency energy over pixel
//!   correspondences, with analytic derivatives with respect to the two time
//!   constants.
//! * [`optimizer`]: damped Gauss-Newton estimation of the time constants from
//!   that energy, with sliding-window support for long sequences.
//! * [`evaluation`]: geometry and trajectory metrics used to judge corrected
//!   output (total-least-squares plane and line fits, discrete Frechet distance,
//!   dynamic time warping, timestamp-matched mean distance, region intensity
//!   stability).
//! * [`synthetic`]: a ray-cast ground-truth generator (road plane, box
//!   obstacles, moving camera) whose bundles carry the exact irradiance film,
//!   raw video, correspondences, and truth parameters for every oracle used in
//!   the test suite.
//! * [`io`] and [`report`]: the bundle directory layout, frame file formats,
//!   CSV tables, and the deterministic key-value run report emitted by the CLI.
//! * [`cli`]: the `bolocor` binary (`simulate`, `correct`, `estimate`,
//!   `evaluate`).
//!
//! # Example
//!
//! Simulate one pixel staring at a constant scene, then undo the sensor
//! dynamics:
//!
//! ```
//! use bolocor::sensor::{simulate_pixel_sequence, FrameTiming, SimulationMode, TimeConstants};
//! use bolocor::correction::correction_coefficients;
//!
//! let taus = TimeConstants::new(0.010, 0.010).unwrap();
//! let timings: Vec<FrameTiming> = (0..3)
//!     .map(|i| FrameTiming::new(i as f64 / 30.0, 0.010, 1.0 / 30.0 - 0.010).unwrap())
//!     .collect();
//! let film = [100.0; 3];
//! let raw = simulate_pixel_sequence(&film, &timings, taus, SimulationMode::ClosedForm).unwrap();
//! // Raw values are attenuated and history-contaminated.
//! assert!((raw[0] - 63.212055882855765).abs() < 1e-12);
//!
//! // Invert frame 1 from the (raw, previous raw) pair.
//! let coeff = correction_coefficients(&timings[1], &timings[0], taus).unwrap();
//! let recovered = coeff.gain * (raw[1] - coeff.decay * raw[0]);
//! assert!((recovered - 100.0).abs() < 1e-9);
//! ```

pub mod cli;
pub mod correction;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod optimizer;
pub mod photometric;
pub mod report;
pub mod sensor;
pub mod synthetic;

pub use error::{Error, Result};
