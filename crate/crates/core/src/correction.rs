//! Closed-form photometric correction of raw microbolometer frames.
//!
//! With known time constants the sensor dynamics invert exactly from two
//! consecutive raw frames. The residual of frame `i - 1` survives the readout
//! interval scaled by `decay = exp(-t_r / tau_c)`, and the fresh contribution
//! of frame `i` is the film value scaled by the heating fraction
//! `1 - exp(-t_e / tau_h)`. Subtracting the decayed previous frame and
//! dividing by the heating fraction therefore recovers the film:
//!
//! ```text
//! corrected_i = gain_i * (raw_i - decay_i * raw_{i-1})
//! gain_i  = 1 / (1 - exp(-t_e,i / tau_h))        (always >= 1)
//! decay_i = exp(-t_r,i-1 / tau_c)                (in (0, 1])
//! ```
//!
//! The subtraction uses the raw previous frame, never an already corrected
//! one, so per-frame errors cannot compound along the sequence. Frame 0 has no
//! predecessor; a cold sensor start means its residual is zero and the pure
//! gain applies. Corrected values are deliberately left unclamped: negative
//! excursions are diagnostic (they reveal over-subtraction from a wrong
//! `tau_c`), and clamping is a display concern handled by the CLI.

use crate::error::{Error, Result};
use crate::sensor::{FrameTiming, TimeConstants, MIN_HEATING_FRACTION};
use rayon::prelude::*;

/// A single frame of intensity values with its exposure schedule.
///
/// Values are stored row-major; `data[y * width + x]` is the pixel at column
/// `x`, row `y`. Intensities are `f64` digital units and may be negative
/// (corrected frames are unclamped).
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<f64>,
    timing: FrameTiming,
}

impl Frame {
    /// Wraps row-major intensity data; `data.len()` must equal
    /// `width * height` and be nonzero.
    pub fn new(width: usize, height: usize, data: Vec<f64>, timing: FrameTiming) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::domain(format!(
                "frame dimensions must be nonzero, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::domain(format!(
                "frame data has {} values, expected {}x{} = {}",
                data.len(),
                width,
                height,
                width * height
            )));
        }
        Ok(Frame {
            width,
            height,
            data,
            timing,
        })
    }

    /// A frame filled with one constant value.
    pub fn constant(width: usize, height: usize, value: f64, timing: FrameTiming) -> Result<Self> {
        Frame::new(width, height, vec![value; width * height], timing)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn timing(&self) -> FrameTiming {
        self.timing
    }

    /// Row-major pixel values.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Pixel at column `x`, row `y`; panics when out of bounds.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        assert!(x < self.width && y < self.height, "pixel out of bounds");
        self.data[y * self.width + x]
    }

    /// True when `(x, y)` lies inside the frame.
    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }
}

/// An ordered run of equally sized frames.
///
/// Construction checks that all frames share one resolution, that timestamps
/// strictly increase, and that no exposure overlaps the next frame's start.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoSequence {
    frames: Vec<Frame>,
}

impl VideoSequence {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::domain("sequence must contain at least one frame"))?;
        let (w, h) = (first.width(), first.height());
        for (k, frame) in frames.iter().enumerate() {
            if frame.width() != w || frame.height() != h {
                return Err(Error::domain(format!(
                    "frame {k} is {}x{}, expected {w}x{h}",
                    frame.width(),
                    frame.height()
                )));
            }
        }
        for k in 1..frames.len() {
            let prev = frames[k - 1].timing();
            let curr = frames[k].timing();
            if curr.timestamp() <= prev.timestamp() {
                return Err(Error::domain(format!(
                    "timestamps must strictly increase, frame {k} at {} after {}",
                    curr.timestamp(),
                    prev.timestamp()
                )));
            }
            let busy_until = prev.timestamp() + prev.period();
            if curr.timestamp() < busy_until - 1e-12 * prev.period().max(1.0) {
                return Err(Error::domain(format!(
                    "frame {k} starts at {} before frame {} finishes at {busy_until}",
                    curr.timestamp(),
                    k - 1
                )));
            }
        }
        Ok(VideoSequence { frames })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn frame(&self, k: usize) -> &Frame {
        &self.frames[k]
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    /// A new sequence holding clones of frames `range.start..range.end`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<VideoSequence> {
        if range.end > self.frames.len() || range.start >= range.end {
            return Err(Error::domain(format!(
                "slice {range:?} out of range for {} frames",
                self.frames.len()
            )));
        }
        VideoSequence::new(self.frames[range].to_vec())
    }
}

/// Gain and decay applied to one (previous, current) frame pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionCoefficients {
    /// `1 / (1 - exp(-t_e / tau_h))`, the inverse heating fraction. At least 1.
    pub gain: f64,
    /// `exp(-t_r / tau_c)` over the previous frame's readout. In `(0, 1]`.
    pub decay: f64,
}

/// Coefficients correcting `current` given its predecessor's timing.
///
/// `gain` uses the current frame's exposure; `decay` uses the previous
/// frame's readout. Fails with [`Error::IllConditioned`] when the heating
/// fraction falls below [`MIN_HEATING_FRACTION`].
pub fn correction_coefficients(
    current: &FrameTiming,
    previous: &FrameTiming,
    taus: TimeConstants,
) -> Result<CorrectionCoefficients> {
    let fraction = 1.0 - (-current.exposure() / taus.tau_h()).exp();
    if fraction < MIN_HEATING_FRACTION {
        return Err(Error::IllConditioned(format!(
            "heating fraction {fraction:.3e} below {MIN_HEATING_FRACTION:.0e} \
             for exposure {} s at tau_h {} s",
            current.exposure(),
            taus.tau_h()
        )));
    }
    Ok(CorrectionCoefficients {
        gain: 1.0 / fraction,
        decay: (-previous.readout() / taus.tau_c()).exp(),
    })
}

/// Corrects one frame from the (current, previous) raw pair.
///
/// Every output pixel is `gain * (current - decay * previous)`. Output keeps
/// the current frame's timing. Values are not clamped.
pub fn correct_frame_pair(
    current: &Frame,
    previous: &Frame,
    taus: TimeConstants,
) -> Result<Frame> {
    if current.width() != previous.width() || current.height() != previous.height() {
        return Err(Error::domain(format!(
            "frame pair dimensions differ: {}x{} vs {}x{}",
            current.width(),
            current.height(),
            previous.width(),
            previous.height()
        )));
    }
    let coeff = correction_coefficients(&current.timing(), &previous.timing(), taus)?;
    let data: Vec<f64> = current
        .data()
        .par_iter()
        .zip(previous.data().par_iter())
        .map(|(&curr, &prev)| coeff.gain * (curr - coeff.decay * prev))
        .collect();
    Frame::new(current.width(), current.height(), data, current.timing())
}

/// Corrects a whole sequence.
///
/// Frame 0 is assumed to start from a cold sensor: only its gain applies.
/// Every later frame is corrected against its raw predecessor, so the result
/// for frame `i` depends on raw frames `i` and `i - 1` alone. Errors from a
/// frame pair are annotated with the frame index.
pub fn correct_sequence(raw: &VideoSequence, taus: TimeConstants) -> Result<VideoSequence> {
    let mut corrected = Vec::with_capacity(raw.len());
    let first = raw.frame(0);
    let coeff0 = correction_coefficients(&first.timing(), &first.timing(), taus)
        .map_err(|e| annotate_frame(e, 0))?;
    let data0: Vec<f64> = first.data().iter().map(|&v| coeff0.gain * v).collect();
    corrected.push(Frame::new(first.width(), first.height(), data0, first.timing())?);
    for k in 1..raw.len() {
        corrected.push(
            correct_frame_pair(raw.frame(k), raw.frame(k - 1), taus)
                .map_err(|e| annotate_frame(e, k))?,
        );
    }
    VideoSequence::new(corrected)
}

fn annotate_frame(err: Error, frame: usize) -> Error {
    match err {
        Error::IllConditioned(msg) => Error::IllConditioned(format!("frame {frame}: {msg}")),
        Error::Domain(msg) => Error::Domain(format!("frame {frame}: {msg}")),
        other => other,
    }
}
