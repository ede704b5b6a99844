//! Python bindings for the bolocor core library.
//!
//! Wraps the sensor model, closed-form correction, photometric energy,
//! Gauss-Newton estimator, evaluation metrics, and the synthetic benchmark
//! behind plain Python classes and functions. Errors surface as `ValueError`
//! (`IOError` for file problems).

use bolocor::correction;
use bolocor::error::Error;
use bolocor::evaluation;
use bolocor::io as core_io;
use bolocor::optimizer;
use bolocor::photometric;
use bolocor::sensor;
use bolocor::synthetic;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use std::path::Path;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io { .. } => PyIOError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_mode(mode: &str) -> PyResult<sensor::SimulationMode> {
    match mode {
        "closed-form" => Ok(sensor::SimulationMode::ClosedForm),
        "physical" => Ok(sensor::SimulationMode::PhysicalOde),
        other => Err(PyValueError::new_err(format!(
            "mode must be \"closed-form\" or \"physical\", got {other:?}"
        ))),
    }
}

/// Heating and cooling time constants in seconds.
#[pyclass(name = "TimeConstants", frozen, from_py_object)]
#[derive(Clone)]
struct PyTimeConstants {
    inner: sensor::TimeConstants,
}

#[pymethods]
impl PyTimeConstants {
    #[new]
    fn new(tau_h: f64, tau_c: f64) -> PyResult<Self> {
        Ok(PyTimeConstants {
            inner: sensor::TimeConstants::new(tau_h, tau_c).map_err(to_py)?,
        })
    }

    #[getter]
    fn tau_h(&self) -> f64 {
        self.inner.tau_h()
    }

    #[getter]
    fn tau_c(&self) -> f64 {
        self.inner.tau_c()
    }

    fn __repr__(&self) -> String {
        format!(
            "TimeConstants(tau_h={}, tau_c={})",
            self.inner.tau_h(),
            self.inner.tau_c()
        )
    }
}

/// One frame's exposure schedule: start timestamp, shutter-open and
/// shutter-closed durations, all in seconds.
#[pyclass(name = "FrameTiming", frozen, from_py_object)]
#[derive(Clone)]
struct PyFrameTiming {
    inner: sensor::FrameTiming,
}

#[pymethods]
impl PyFrameTiming {
    #[new]
    fn new(timestamp: f64, exposure: f64, readout: f64) -> PyResult<Self> {
        Ok(PyFrameTiming {
            inner: sensor::FrameTiming::new(timestamp, exposure, readout).map_err(to_py)?,
        })
    }

    #[getter]
    fn timestamp(&self) -> f64 {
        self.inner.timestamp()
    }

    #[getter]
    fn exposure(&self) -> f64 {
        self.inner.exposure()
    }

    #[getter]
    fn readout(&self) -> f64 {
        self.inner.readout()
    }

    #[getter]
    fn period(&self) -> f64 {
        self.inner.period()
    }

    fn __repr__(&self) -> String {
        format!(
            "FrameTiming(timestamp={}, exposure={}, readout={})",
            self.inner.timestamp(),
            self.inner.exposure(),
            self.inner.readout()
        )
    }
}

/// Row-major f64 image with its timing.
#[pyclass(name = "Frame", frozen, from_py_object)]
#[derive(Clone)]
struct PyFrame {
    inner: correction::Frame,
}

#[pymethods]
impl PyFrame {
    #[new]
    fn new(width: usize, height: usize, data: Vec<f64>, timing: PyFrameTiming) -> PyResult<Self> {
        Ok(PyFrame {
            inner: correction::Frame::new(width, height, data, timing.inner).map_err(to_py)?,
        })
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn timing(&self) -> PyFrameTiming {
        PyFrameTiming {
            inner: self.inner.timing(),
        }
    }

    #[getter]
    fn data(&self) -> Vec<f64> {
        self.inner.data().to_vec()
    }

    fn get(&self, x: usize, y: usize) -> PyResult<f64> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(PyValueError::new_err(format!(
                "pixel ({x}, {y}) outside {}x{}",
                self.inner.width(),
                self.inner.height()
            )));
        }
        Ok(self.inner.get(x, y))
    }

    fn __repr__(&self) -> String {
        format!("Frame({}x{})", self.inner.width(), self.inner.height())
    }
}

/// Ordered, equally sized frames with strictly increasing timestamps.
#[pyclass(name = "VideoSequence", frozen, from_py_object)]
#[derive(Clone)]
struct PyVideoSequence {
    inner: correction::VideoSequence,
}

#[pymethods]
impl PyVideoSequence {
    #[new]
    fn new(frames: Vec<PyFrame>) -> PyResult<Self> {
        let frames = frames.into_iter().map(|f| f.inner).collect();
        Ok(PyVideoSequence {
            inner: correction::VideoSequence::new(frames).map_err(to_py)?,
        })
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn frame(&self, k: usize) -> PyResult<PyFrame> {
        if k >= self.inner.len() {
            return Err(PyValueError::new_err(format!(
                "frame {k} outside sequence of {} frames",
                self.inner.len()
            )));
        }
        Ok(PyFrame {
            inner: self.inner.frame(k).clone(),
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "VideoSequence({} frames of {}x{})",
            self.inner.len(),
            self.inner.width(),
            self.inner.height()
        )
    }
}

/// A pixel pair asserted to observe the same scene point.
#[pyclass(name = "Correspondence", frozen, from_py_object)]
#[derive(Clone)]
struct PyCorrespondence {
    inner: photometric::Correspondence,
}

#[pymethods]
impl PyCorrespondence {
    #[new]
    fn new(
        host_frame: usize,
        host_pixel: (usize, usize),
        target_frame: usize,
        target_pixel: (usize, usize),
    ) -> Self {
        PyCorrespondence {
            inner: photometric::Correspondence::point(
                host_frame,
                host_pixel,
                target_frame,
                target_pixel,
            ),
        }
    }

    #[getter]
    fn host_frame(&self) -> usize {
        self.inner.host_frame
    }

    #[getter]
    fn host_pixel(&self) -> (usize, usize) {
        self.inner.host_pixel
    }

    #[getter]
    fn target_frame(&self) -> usize {
        self.inner.target_frame
    }

    #[getter]
    fn target_pixel(&self) -> (usize, usize) {
        self.inner.target_pixel
    }

    fn __repr__(&self) -> String {
        format!(
            "Correspondence({} {:?} -> {} {:?})",
            self.inner.host_frame,
            self.inner.host_pixel,
            self.inner.target_frame,
            self.inner.target_pixel
        )
    }
}

/// Aggregate result of time-constant estimation.
#[pyclass(name = "Estimation", frozen)]
struct PyEstimation {
    #[pyo3(get)]
    tau_h: f64,
    #[pyo3(get)]
    tau_c: f64,
    #[pyo3(get)]
    iterations: usize,
    #[pyo3(get)]
    final_energy: f64,
    #[pyo3(get)]
    converged: bool,
    #[pyo3(get)]
    normal_condition: f64,
    #[pyo3(get)]
    windows: usize,
    #[pyo3(get)]
    energy_trace: Vec<f64>,
}

#[pymethods]
impl PyEstimation {
    fn __repr__(&self) -> String {
        format!(
            "Estimation(tau_h={}, tau_c={}, converged={})",
            self.tau_h, self.tau_c, self.converged
        )
    }
}

/// Synthetic ground-truth bundle: true constants, ideal film, raw video, and
/// extracted correspondences.
#[pyclass(name = "Benchmark", frozen)]
struct PyBenchmark {
    bundle: synthetic::GroundTruthBundle,
}

#[pymethods]
impl PyBenchmark {
    #[getter]
    fn taus(&self) -> PyTimeConstants {
        PyTimeConstants {
            inner: self.bundle.taus,
        }
    }

    #[getter]
    fn raw(&self) -> PyVideoSequence {
        PyVideoSequence {
            inner: self.bundle.raw.clone(),
        }
    }

    /// The ideal irradiance film as a video sequence.
    #[getter]
    fn film(&self) -> PyResult<PyVideoSequence> {
        Ok(PyVideoSequence {
            inner: correction::VideoSequence::new(self.bundle.film.clone()).map_err(to_py)?,
        })
    }

    #[getter]
    fn correspondences(&self) -> Vec<PyCorrespondence> {
        self.bundle
            .correspondences
            .iter()
            .map(|c| PyCorrespondence { inner: c.clone() })
            .collect()
    }

    /// `(x0, y0, x1, y1, settled_frame)` of a pixel that watched a hot box
    /// pass and then sees road for the rest of the sequence, or `None`.
    #[getter]
    fn ghost_region(&self) -> Option<(usize, usize, usize, usize, usize)> {
        synthetic::ghost_region(&self.bundle)
            .map(|(r, settled)| (r.x0, r.y0, r.x1, r.y1, settled))
    }

    fn __repr__(&self) -> String {
        format!(
            "Benchmark({} frames of {}x{}, tau_h={}, tau_c={})",
            self.bundle.raw.len(),
            self.bundle.raw.width(),
            self.bundle.raw.height(),
            self.bundle.taus.tau_h(),
            self.bundle.taus.tau_c()
        )
    }
}

#[pyfunction]
fn heating_response(i_ss: f64, tau_h: f64, t: f64, i_init: f64) -> PyResult<f64> {
    sensor::heating_response(i_ss, tau_h, t, i_init).map_err(to_py)
}

#[pyfunction]
fn cooling_response(i0: f64, tau_c: f64, t: f64) -> PyResult<f64> {
    sensor::cooling_response(i0, tau_c, t).map_err(to_py)
}

/// Raw sensor readings for one pixel across `film` (one ideal value per
/// frame); `mode` is `"closed-form"` or `"physical"`.
#[pyfunction]
#[pyo3(signature = (film, timings, taus, mode = "closed-form"))]
fn simulate_pixel(
    film: Vec<f64>,
    timings: Vec<PyFrameTiming>,
    taus: &PyTimeConstants,
    mode: &str,
) -> PyResult<Vec<f64>> {
    let timings: Vec<sensor::FrameTiming> = timings.into_iter().map(|t| t.inner).collect();
    sensor::simulate_pixel_sequence(&film, &timings, taus.inner, parse_mode(mode)?).map_err(to_py)
}

/// `(gain, decay)` correcting `current` against `previous`.
#[pyfunction]
fn correction_coefficients(
    current: &PyFrameTiming,
    previous: &PyFrameTiming,
    taus: &PyTimeConstants,
) -> PyResult<(f64, f64)> {
    let c = correction::correction_coefficients(&current.inner, &previous.inner, taus.inner)
        .map_err(to_py)?;
    Ok((c.gain, c.decay))
}

#[pyfunction]
fn correct_sequence(raw: &PyVideoSequence, taus: &PyTimeConstants) -> PyResult<PyVideoSequence> {
    Ok(PyVideoSequence {
        inner: correction::correct_sequence(&raw.inner, taus.inner).map_err(to_py)?,
    })
}

#[pyfunction]
fn beta_factor(exposure_target: f64, exposure_host: f64, tau_h: f64) -> PyResult<f64> {
    photometric::beta_factor(exposure_target, exposure_host, tau_h).map_err(to_py)
}

#[pyfunction]
fn huber(r: f64, gamma: f64) -> PyResult<f64> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(PyValueError::new_err(format!(
            "gamma must be positive and finite, got {gamma}"
        )));
    }
    Ok(photometric::huber(r, gamma))
}

#[pyfunction]
fn gradient_weight(grad_mag: f64, c: f64) -> PyResult<f64> {
    if !(c.is_finite() && c > 0.0) {
        return Err(PyValueError::new_err(format!(
            "scale must be positive and finite, got {c}"
        )));
    }
    Ok(photometric::gradient_weight(grad_mag, c))
}

/// `(total_energy, gradient, gauss_newton_hessian)` of the photometric
/// energy at `taus`.
#[pyfunction]
#[pyo3(signature = (correspondences, seq, taus, huber_gamma = 9.0, gradient_scale = 50.0))]
fn energy(
    correspondences: Vec<PyCorrespondence>,
    seq: &PyVideoSequence,
    taus: &PyTimeConstants,
    huber_gamma: f64,
    gradient_scale: f64,
) -> PyResult<(f64, Vec<f64>, Vec<Vec<f64>>)> {
    let kernel = photometric::RobustKernel::new(huber_gamma, gradient_scale).map_err(to_py)?;
    let corrs: Vec<photometric::Correspondence> =
        correspondences.into_iter().map(|c| c.inner).collect();
    let report =
        photometric::energy_and_derivatives(&corrs, &seq.inner, taus.inner, &kernel)
            .map_err(to_py)?;
    Ok((
        report.total_energy,
        report.gradient.to_vec(),
        report
            .gauss_newton_hessian
            .iter()
            .map(|row| row.to_vec())
            .collect(),
    ))
}

/// Gauss-Newton estimation of `(tau_h, tau_c)` over sliding windows.
#[pyfunction]
#[pyo3(signature = (
    seq,
    correspondences,
    init,
    window = 16,
    max_iterations = 50,
    step_tolerance = 1e-9,
    energy_tolerance = 1e-12,
    damping = 1e-4,
    huber_gamma = 9.0,
    gradient_scale = 50.0,
))]
#[allow(clippy::too_many_arguments)]
fn estimate(
    seq: &PyVideoSequence,
    correspondences: Vec<PyCorrespondence>,
    init: &PyTimeConstants,
    window: usize,
    max_iterations: usize,
    step_tolerance: f64,
    energy_tolerance: f64,
    damping: f64,
    huber_gamma: f64,
    gradient_scale: f64,
) -> PyResult<PyEstimation> {
    let config = optimizer::WindowConfig {
        window_size: window,
        max_iterations,
        step_tolerance,
        energy_tolerance,
        damping_init: damping,
    };
    let kernel = photometric::RobustKernel::new(huber_gamma, gradient_scale).map_err(to_py)?;
    let corrs: Vec<photometric::Correspondence> =
        correspondences.into_iter().map(|c| c.inner).collect();
    let result =
        optimizer::estimate_time_constants(&seq.inner, &corrs, init.inner, &config, &kernel)
            .map_err(to_py)?;
    Ok(PyEstimation {
        tau_h: result.taus.tau_h(),
        tau_c: result.taus.tau_c(),
        iterations: result.iterations_used,
        final_energy: result.final_energy,
        converged: result.converged,
        normal_condition: result.normal_condition,
        windows: result.windows.len(),
        energy_trace: result.energy_trace,
    })
}

fn as_trajectory(samples: Vec<(f64, f64, f64, f64)>) -> PyResult<evaluation::Trajectory> {
    evaluation::Trajectory::new(
        samples
            .into_iter()
            .map(|(t, x, y, z)| (t, [x, y, z]))
            .collect(),
    )
    .map_err(to_py)
}

/// Discrete Frechet distance between `(t, x, y, z)` sample lists.
#[pyfunction]
fn discrete_frechet(
    a: Vec<(f64, f64, f64, f64)>,
    b: Vec<(f64, f64, f64, f64)>,
) -> PyResult<f64> {
    evaluation::discrete_frechet(&as_trajectory(a)?, &as_trajectory(b)?).map_err(to_py)
}

/// Dynamic-time-warping distance between `(t, x, y, z)` sample lists.
#[pyfunction]
fn dtw_distance(a: Vec<(f64, f64, f64, f64)>, b: Vec<(f64, f64, f64, f64)>) -> PyResult<f64> {
    evaluation::dtw_distance(&as_trajectory(a)?, &as_trajectory(b)?).map_err(to_py)
}

/// `(mean, matched, unmatched)` over timestamp-matched sample pairs.
#[pyfunction]
fn mean_distance(
    a: Vec<(f64, f64, f64, f64)>,
    b: Vec<(f64, f64, f64, f64)>,
) -> PyResult<(f64, usize, usize)> {
    let m = evaluation::mean_distance(&as_trajectory(a)?, &as_trajectory(b)?).map_err(to_py)?;
    Ok((m.mean, m.matched, m.unmatched))
}

fn to_points(points: Vec<(f64, f64, f64)>) -> Vec<[f64; 3]> {
    points.into_iter().map(|(x, y, z)| [x, y, z]).collect()
}

/// Total-least-squares plane fit: `((nx, ny, nz), offset)` with unit normal.
#[pyfunction]
fn fit_plane(points: Vec<(f64, f64, f64)>) -> PyResult<((f64, f64, f64), f64)> {
    let plane = evaluation::fit_plane(&to_points(points)).map_err(to_py)?;
    let n = plane.normal();
    Ok(((n[0], n[1], n[2]), plane.offset()))
}

/// Total-least-squares line fit: `(anchor, direction)` with unit direction.
#[pyfunction]
fn fit_line(
    points: Vec<(f64, f64, f64)>,
) -> PyResult<((f64, f64, f64), (f64, f64, f64))> {
    let line = evaluation::fit_line(&to_points(points)).map_err(to_py)?;
    let (a, d) = (line.anchor(), line.direction());
    Ok(((a[0], a[1], a[2]), (d[0], d[1], d[2])))
}

/// `(rmse, std, count)` of point distances to a plane.
#[pyfunction]
fn plane_deviation(
    points: Vec<(f64, f64, f64)>,
    normal: (f64, f64, f64),
    offset: f64,
) -> PyResult<(f64, f64, usize)> {
    let plane =
        evaluation::PlaneModel::new([normal.0, normal.1, normal.2], offset).map_err(to_py)?;
    let stats = evaluation::deviation_stats(&to_points(points), &plane).map_err(to_py)?;
    Ok((stats.rmse, stats.std, stats.count))
}

/// `(rmse, std, count)` of point distances to a line.
#[pyfunction]
fn line_deviation(
    points: Vec<(f64, f64, f64)>,
    anchor: (f64, f64, f64),
    direction: (f64, f64, f64),
) -> PyResult<(f64, f64, usize)> {
    let line = evaluation::LineModel::new(
        [anchor.0, anchor.1, anchor.2],
        [direction.0, direction.1, direction.2],
    )
    .map_err(to_py)?;
    let stats = evaluation::deviation_stats(&to_points(points), &line).map_err(to_py)?;
    Ok((stats.rmse, stats.std, stats.count))
}

/// Standard deviation over time of the mean intensity inside
/// `[x0, x1) x [y0, y1)`.
#[pyfunction]
fn intensity_stability(
    seq: &PyVideoSequence,
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
) -> PyResult<f64> {
    let region = evaluation::Region::new(x0, y0, x1, y1).map_err(to_py)?;
    evaluation::intensity_stability(&seq.inner, region).map_err(to_py)
}

/// The standard 64x64x60 drive-by benchmark for a seed.
#[pyfunction]
fn default_benchmark(seed: u64) -> PyResult<PyBenchmark> {
    Ok(PyBenchmark {
        bundle: synthetic::default_benchmark(seed).map_err(to_py)?,
    })
}

/// Road pixels back-projected to 3D with intensity error lifted along the
/// road normal; returns `(x, y, z)` tuples.
#[pyfunction]
#[pyo3(signature = (benchmark, video, scale = 0.02))]
fn lift_ground_points(
    benchmark: &PyBenchmark,
    video: &PyVideoSequence,
    scale: f64,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let points =
        synthetic::lift_ground_points(&benchmark.bundle, &video.inner, scale).map_err(to_py)?;
    Ok(points.into_iter().map(|p| (p[0], p[1], p[2])).collect())
}

/// Writes a sequence as `manifest.csv` plus `frames/{prefix}_####.f64`.
#[pyfunction]
fn write_video(dir: &str, seq: &PyVideoSequence, prefix: &str) -> PyResult<()> {
    core_io::write_video_dir(Path::new(dir), &seq.inner, prefix).map_err(to_py)
}

/// Reads a sequence written by `write_video` (or the CLI).
#[pyfunction]
fn read_video(dir: &str, prefix: &str) -> PyResult<PyVideoSequence> {
    Ok(PyVideoSequence {
        inner: core_io::read_video_dir(Path::new(dir), prefix).map_err(to_py)?,
    })
}

#[pymodule]
fn bolocor_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTimeConstants>()?;
    m.add_class::<PyFrameTiming>()?;
    m.add_class::<PyFrame>()?;
    m.add_class::<PyVideoSequence>()?;
    m.add_class::<PyCorrespondence>()?;
    m.add_class::<PyEstimation>()?;
    m.add_class::<PyBenchmark>()?;
    m.add_function(wrap_pyfunction!(heating_response, m)?)?;
    m.add_function(wrap_pyfunction!(cooling_response, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_pixel, m)?)?;
    m.add_function(wrap_pyfunction!(correction_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(correct_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(beta_factor, m)?)?;
    m.add_function(wrap_pyfunction!(huber, m)?)?;
    m.add_function(wrap_pyfunction!(gradient_weight, m)?)?;
    m.add_function(wrap_pyfunction!(energy, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(discrete_frechet, m)?)?;
    m.add_function(wrap_pyfunction!(dtw_distance, m)?)?;
    m.add_function(wrap_pyfunction!(mean_distance, m)?)?;
    m.add_function(wrap_pyfunction!(fit_plane, m)?)?;
    m.add_function(wrap_pyfunction!(fit_line, m)?)?;
    m.add_function(wrap_pyfunction!(plane_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(line_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(intensity_stability, m)?)?;
    m.add_function(wrap_pyfunction!(default_benchmark, m)?)?;
    m.add_function(wrap_pyfunction!(lift_ground_points, m)?)?;
    m.add_function(wrap_pyfunction!(write_video, m)?)?;
    m.add_function(wrap_pyfunction!(read_video, m)?)?;
    Ok(())
}
