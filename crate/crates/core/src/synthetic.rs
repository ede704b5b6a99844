//! Synthetic ground truth: scene, camera, renderer, and benchmark bundles.
//!
//! The scene is deliberately minimal: a road plane plus axis-aligned boxes,
//! each surface emitting a constant irradiance regardless of view. A pinhole
//! camera rides a straight line through it. Because every surface value is
//! constant, two pixels that see the same surface carry bitwise-equal ideal
//! values, which makes rendered correspondences exact oracles for the
//! photometric energy.
//!
//! World axes: `x` right, `y` up, `z` forward; the road is `y = 0`. The
//! camera looks along its path direction with image rows growing downward
//! (`y_cam = -up`), and pixel `(px, py)` covers the unit square with center
//! `(px + 0.5, py + 0.5)`.

use crate::correction::{Frame, VideoSequence};
use crate::error::{Error, Result};
use crate::evaluation::{LineModel, PlaneModel, Region, Trajectory};
use crate::photometric::Correspondence;
use crate::sensor::{simulate_pixel_sequence, FrameTiming, SimulationMode, TimeConstants};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeSet;

/// Reading order of [`BoxSpec::face_irradiance`].
pub const FACE_ORDER: [&str; 6] = ["-x", "+x", "-y", "+y", "-z", "+z"];

/// Axis-aligned box with one irradiance per face, ordered as [`FACE_ORDER`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSpec {
    pub center: [f64; 3],
    pub half_extents: [f64; 3],
    pub face_irradiance: [f64; 6],
}

impl BoxSpec {
    pub(crate) fn validate(&self) -> Result<()> {
        if !self.center.iter().all(|v| v.is_finite()) {
            return Err(Error::domain(format!(
                "box center must be finite, got {:?}",
                self.center
            )));
        }
        if !self
            .half_extents
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
        {
            return Err(Error::domain(format!(
                "box half-extents must be positive and finite, got {:?}",
                self.half_extents
            )));
        }
        if !self
            .face_irradiance
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
        {
            return Err(Error::domain(format!(
                "box face irradiances must be nonnegative and finite, got {:?}",
                self.face_irradiance
            )));
        }
        Ok(())
    }
}

/// Road plane plus obstacles, all with constant emitted irradiance.
///
/// Rays that miss everything read `ambient` (open sky).
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub road: PlaneModel,
    pub road_irradiance: f64,
    pub ambient: f64,
    pub boxes: Vec<BoxSpec>,
}

impl SceneSpec {
    pub(crate) fn validate(&self) -> Result<()> {
        for (value, name) in [
            (self.road_irradiance, "road irradiance"),
            (self.ambient, "ambient irradiance"),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::domain(format!(
                    "{name} must be nonnegative and finite, got {value}"
                )));
            }
        }
        for b in &self.boxes {
            b.validate()?;
        }
        Ok(())
    }
}

/// Pinhole camera translating along a line at constant speed.
///
/// The camera frame is `z = path direction`, `y = -world_up` projected
/// perpendicular to `z` (rows grow downward), `x = y cross z`. The path must
/// not be vertical. At frame `k` the camera sits at
/// `path.point_at(speed * timings[k].timestamp())`.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraSpec {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub path: LineModel,
    pub speed: f64,
    pub timings: Vec<FrameTiming>,
}

const WORLD_UP: [f64; 3] = [0.0, 1.0, 0.0];

impl CameraSpec {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.fx.is_finite() && self.fx > 0.0 && self.fy.is_finite() && self.fy > 0.0) {
            return Err(Error::domain(format!(
                "focal lengths must be positive, got fx={}, fy={}",
                self.fx, self.fy
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::domain("image resolution must be nonzero"));
        }
        if !(self.cx > 0.0 && self.cx < self.width as f64)
            || !(self.cy > 0.0 && self.cy < self.height as f64)
        {
            return Err(Error::domain(format!(
                "principal point ({}, {}) must lie inside the {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        if !self.speed.is_finite() {
            return Err(Error::domain(format!("speed must be finite, got {}", self.speed)));
        }
        if self.timings.is_empty() {
            return Err(Error::domain("camera needs at least one frame timing"));
        }
        for pair in self.timings.windows(2) {
            if pair[1].timestamp() <= pair[0].timestamp() {
                return Err(Error::domain(
                    "camera frame timestamps must strictly increase",
                ));
            }
        }
        let d = self.path.direction();
        if (d[0] * WORLD_UP[0] + d[1] * WORLD_UP[1] + d[2] * WORLD_UP[2]).abs() > 1.0 - 1e-9 {
            return Err(Error::domain(
                "camera path must not be vertical; the image orientation would be undefined",
            ));
        }
        Ok(())
    }

    /// Camera axes in world coordinates: `(x_cam, y_cam, z_cam)`.
    fn basis(&self) -> ([f64; 3], [f64; 3], [f64; 3]) {
        let z = self.path.direction();
        let tilt = dot(WORLD_UP, z);
        let mut y = [
            -(WORLD_UP[0] - tilt * z[0]),
            -(WORLD_UP[1] - tilt * z[1]),
            -(WORLD_UP[2] - tilt * z[2]),
        ];
        let norm = dot(y, y).sqrt();
        for v in &mut y {
            *v /= norm;
        }
        let x = cross(y, z);
        (x, y, z)
    }

    /// World position of the camera at frame `k`.
    pub fn position(&self, k: usize) -> [f64; 3] {
        self.path.point_at(self.speed * self.timings[k].timestamp())
    }

    /// Subpixel image coordinates of a world point at frame `k`, or `None`
    /// when the point is not in front of the camera.
    pub fn project(&self, k: usize, point: [f64; 3]) -> Option<(f64, f64)> {
        let (x, y, z) = self.basis();
        let o = self.position(k);
        let r = [point[0] - o[0], point[1] - o[1], point[2] - o[2]];
        let zc = dot(r, z);
        if zc <= 1e-9 {
            return None;
        }
        Some((
            self.fx * dot(r, x) / zc + self.cx,
            self.fy * dot(r, y) / zc + self.cy,
        ))
    }

    /// Unit ray through the center of pixel `(px, py)` at frame `k`.
    pub fn pixel_ray(&self, k: usize, px: usize, py: usize) -> ([f64; 3], [f64; 3]) {
        let (x, y, z) = self.basis();
        let dx = (px as f64 + 0.5 - self.cx) / self.fx;
        let dy = (py as f64 + 0.5 - self.cy) / self.fy;
        let mut d = [
            dx * x[0] + dy * y[0] + z[0],
            dx * x[1] + dy * y[1] + z[1],
            dx * x[2] + dy * y[2] + z[2],
        ];
        let norm = dot(d, d).sqrt();
        for v in &mut d {
            *v /= norm;
        }
        (self.position(k), d)
    }

    /// Camera positions as a timestamped trajectory.
    pub fn trajectory(&self) -> Trajectory {
        let samples = self
            .timings
            .iter()
            .enumerate()
            .map(|(k, t)| (t.timestamp(), self.position(k)))
            .collect();
        Trajectory::new(samples).expect("camera timestamps are validated strictly increasing")
    }
}

const RAY_EPS: f64 = 1e-9;

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn ray_plane(origin: [f64; 3], dir: [f64; 3], plane: &PlaneModel) -> Option<f64> {
    let n = plane.normal();
    let denom = dot(n, dir);
    if denom.abs() < 1e-12 {
        return None;
    }
    let t = (plane.offset() - dot(n, origin)) / denom;
    (t > RAY_EPS).then_some(t)
}

/// Slab intersection; returns the entry distance and entered face index.
fn ray_box(origin: [f64; 3], dir: [f64; 3], b: &BoxSpec) -> Option<(f64, usize)> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    let mut face = 0usize;
    for a in 0..3 {
        let lo = b.center[a] - b.half_extents[a];
        let hi = b.center[a] + b.half_extents[a];
        if dir[a].abs() < 1e-15 {
            if origin[a] < lo || origin[a] > hi {
                return None;
            }
            continue;
        }
        let inv = 1.0 / dir[a];
        let (t1, t2) = ((lo - origin[a]) * inv, (hi - origin[a]) * inv);
        let (enter, exit) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        if enter > t_near {
            t_near = enter;
            // Moving toward +a enters through the -a face.
            face = 2 * a + usize::from(dir[a] <= 0.0);
        }
        t_far = t_far.min(exit);
    }
    (t_near <= t_far && t_near > RAY_EPS).then_some((t_near, face))
}

/// Nearest surface hit: irradiance value plus the hit point, or ambient with
/// no point when the ray escapes the scene.
fn cast(scene: &SceneSpec, origin: [f64; 3], dir: [f64; 3]) -> (f64, Option<[f64; 3]>) {
    let mut best_t = f64::INFINITY;
    let mut value = scene.ambient;
    if let Some(t) = ray_plane(origin, dir, &scene.road) {
        best_t = t;
        value = scene.road_irradiance;
    }
    for b in &scene.boxes {
        if let Some((t, face)) = ray_box(origin, dir, b) {
            if t < best_t {
                best_t = t;
                value = b.face_irradiance[face];
            }
        }
    }
    if best_t.is_finite() {
        let p = [
            origin[0] + best_t * dir[0],
            origin[1] + best_t * dir[1],
            origin[2] + best_t * dir[2],
        ];
        (value, Some(p))
    } else {
        (value, None)
    }
}

/// Pixel lattice stride used when extracting correspondences.
const LATTICE_STRIDE: usize = 4;
/// How many subsequent frames each lattice point is tracked into.
const TRACK_SPAN: usize = 3;

/// Renders the ideal irradiance film and extracts pixel correspondences.
///
/// Every pixel takes the irradiance of the nearest surface along its center
/// ray (ambient when the ray escapes). Correspondences come from a
/// `LATTICE_STRIDE`-spaced pixel lattice: each lattice hit point is
/// projected into the next `TRACK_SPAN` frames, rounded to the nearest
/// pixel, and kept only when that pixel renders bitwise the same irradiance
/// (which also rejects occlusions). Host frames start at 1 because the
/// photometric model needs a predecessor frame on both sides.
pub fn render_irradiance_sequence(
    scene: &SceneSpec,
    camera: &CameraSpec,
) -> Result<(Vec<Frame>, Vec<Correspondence>)> {
    scene.validate()?;
    camera.validate()?;
    let (w, h) = (camera.width, camera.height);
    let film: Vec<Frame> = (0..camera.timings.len())
        .into_par_iter()
        .map(|k| {
            let mut data = Vec::with_capacity(w * h);
            for py in 0..h {
                for px in 0..w {
                    let (o, d) = camera.pixel_ray(k, px, py);
                    data.push(cast(scene, o, d).0);
                }
            }
            Frame::new(w, h, data, camera.timings[k])
        })
        .collect::<Result<Vec<_>>>()?;

    let n = film.len();
    let mut corrs = Vec::new();
    let mut seen = BTreeSet::new();
    for k in 1..n {
        for py in (LATTICE_STRIDE / 2..h).step_by(LATTICE_STRIDE) {
            for px in (LATTICE_STRIDE / 2..w).step_by(LATTICE_STRIDE) {
                let (o, d) = camera.pixel_ray(k, px, py);
                let (value, hit) = cast(scene, o, d);
                let Some(point) = hit else { continue };
                for j in (k + 1)..n.min(k + TRACK_SPAN + 1) {
                    let Some((u, v)) = camera.project(j, point) else {
                        continue;
                    };
                    if !(u >= 0.0 && u < w as f64 && v >= 0.0 && v < h as f64) {
                        continue;
                    }
                    let (tx, ty) = (u.floor() as usize, v.floor() as usize);
                    if film[j].get(tx, ty) != value {
                        continue;
                    }
                    if seen.insert((k, px, py, j, tx, ty)) {
                        corrs.push(Correspondence::point(k, (px, py), j, (tx, ty)));
                    }
                }
            }
        }
    }
    Ok((film, corrs))
}

/// Pushes an ideal film through the sensor model, pixel by pixel, then adds
/// seeded Gaussian noise of standard deviation `noise_sigma` (zero skips the
/// noise stream entirely). Noise draws run in frame-major, row-major order.
pub fn synthesize_raw_video(
    film: &[Frame],
    taus: TimeConstants,
    mode: SimulationMode,
    noise_sigma: f64,
    noise_seed: u64,
) -> Result<VideoSequence> {
    if film.is_empty() {
        return Err(Error::domain("film must contain at least one frame"));
    }
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::domain(format!(
            "noise sigma must be nonnegative and finite, got {noise_sigma}"
        )));
    }
    let (w, h) = (film[0].width(), film[0].height());
    for (k, f) in film.iter().enumerate() {
        if f.width() != w || f.height() != h {
            return Err(Error::domain(format!(
                "film frame {k} is {}x{}, expected {w}x{h}",
                f.width(),
                f.height()
            )));
        }
    }
    let timings: Vec<FrameTiming> = film.iter().map(Frame::timing).collect();
    let mut raw = vec![vec![0.0f64; w * h]; film.len()];
    let mut series = vec![0.0f64; film.len()];
    for idx in 0..w * h {
        for (k, f) in film.iter().enumerate() {
            series[k] = f.data()[idx];
        }
        let simulated = simulate_pixel_sequence(&series, &timings, taus, mode)?;
        for (k, v) in simulated.into_iter().enumerate() {
            raw[k][idx] = v;
        }
    }
    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        let normal = rand_distr::Normal::new(0.0, noise_sigma)
            .map_err(|e| Error::domain(format!("invalid noise distribution: {e}")))?;
        for frame in &mut raw {
            for v in frame.iter_mut() {
                *v += rng.sample(normal);
            }
        }
    }
    VideoSequence::new(
        raw.into_iter()
            .zip(&timings)
            .map(|(data, &t)| Frame::new(w, h, data, t))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// Everything an end-to-end experiment needs: the scene and camera, the
/// ideal film, the raw video synthesized from it, the true constants, and
/// the extracted correspondences.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthBundle {
    pub scene: SceneSpec,
    pub camera: CameraSpec,
    pub taus: TimeConstants,
    pub film: Vec<Frame>,
    pub raw: VideoSequence,
    pub correspondences: Vec<Correspondence>,
}

impl GroundTruthBundle {
    pub fn plane(&self) -> PlaneModel {
        self.scene.road
    }

    pub fn line(&self) -> LineModel {
        self.camera.path
    }

    pub fn trajectory(&self) -> Trajectory {
        self.camera.trajectory()
    }
}

/// Knobs for [`build_benchmark`]; `Default` reproduces [`default_benchmark`].
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub frames: usize,
    pub fps: f64,
    /// Per-frame exposures are drawn uniformly from this set.
    pub exposure_choices: Vec<f64>,
    pub noise_sigma: f64,
    pub noise_seed: u64,
    pub mode: SimulationMode,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            frames: 60,
            fps: 30.0,
            exposure_choices: vec![0.005, 0.010, 0.020],
            noise_sigma: 0.0,
            noise_seed: 0,
            mode: SimulationMode::ClosedForm,
        }
    }
}

/// The 64x64 drive-by scene: a road plane at `y = 0` with two hot boxes
/// beside the camera path, camera at height 1.5 moving at 5 m/s along `+z`.
pub fn benchmark_scene() -> (SceneSpec, LineModel) {
    let scene = SceneSpec {
        road: PlaneModel::new([0.0, 1.0, 0.0], 0.0).expect("unit normal"),
        road_irradiance: 100.0,
        ambient: 20.0,
        boxes: vec![
            BoxSpec {
                center: [1.0, 0.45, 6.0],
                half_extents: [0.5, 0.45, 0.5],
                face_irradiance: [300.0, 310.0, 320.0, 330.0, 340.0, 350.0],
            },
            BoxSpec {
                center: [-1.3, 0.35, 9.0],
                half_extents: [0.6, 0.35, 0.6],
                face_irradiance: [400.0, 410.0, 420.0, 430.0, 440.0, 450.0],
            },
        ],
    };
    let path = LineModel::new([0.0, 1.5, 0.0], [0.0, 0.0, 1.0]).expect("unit direction");
    (scene, path)
}

/// Deterministic benchmark bundle for a seed: time constants drawn from
/// [8 ms, 15 ms], per-frame exposures from `exposure_choices`.
///
/// Draw order from `ChaCha8(seed)`: `tau_h`, `tau_c`, then one exposure pick
/// per frame. Noise, when enabled, consumes a separate stream seeded by
/// `noise_seed`. Scene and camera geometry are fixed constants.
pub fn build_benchmark(seed: u64, config: &BenchmarkConfig) -> Result<GroundTruthBundle> {
    if config.frames < 2 {
        return Err(Error::domain(format!(
            "benchmark needs at least 2 frames, got {}",
            config.frames
        )));
    }
    if !(config.fps.is_finite() && config.fps > 0.0) {
        return Err(Error::domain(format!(
            "frame rate must be positive, got {}",
            config.fps
        )));
    }
    if config.exposure_choices.is_empty() {
        return Err(Error::domain("exposure choice set must not be empty"));
    }
    let period = 1.0 / config.fps;
    for &t_e in &config.exposure_choices {
        if !(t_e.is_finite() && t_e > 0.0 && t_e < period) {
            return Err(Error::domain(format!(
                "exposure {t_e} s must lie in (0, {period}) s at {} fps",
                config.fps
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let taus = TimeConstants::new(
        rng.random_range(0.008..0.015),
        rng.random_range(0.008..0.015),
    )?;
    let timings: Vec<FrameTiming> = (0..config.frames)
        .map(|k| {
            let t_e = config.exposure_choices[rng.random_range(0..config.exposure_choices.len())];
            FrameTiming::new(k as f64 / config.fps, t_e, period - t_e)
        })
        .collect::<Result<Vec<_>>>()?;

    let (scene, path) = benchmark_scene();
    let camera = CameraSpec {
        fx: 64.0,
        fy: 64.0,
        cx: 32.0,
        cy: 32.0,
        width: 64,
        height: 64,
        path,
        speed: 5.0,
        timings,
    };
    let (film, correspondences) = render_irradiance_sequence(&scene, &camera)?;
    let raw = synthesize_raw_video(
        &film,
        taus,
        config.mode,
        config.noise_sigma,
        config.noise_seed,
    )?;
    Ok(GroundTruthBundle {
        scene,
        camera,
        taus,
        film,
        raw,
        correspondences,
    })
}

/// [`build_benchmark`] with the default configuration.
pub fn default_benchmark(seed: u64) -> Result<GroundTruthBundle> {
    build_benchmark(seed, &BenchmarkConfig::default())
}

/// Back-projects road pixels into 3D and displaces each along the road
/// normal by `scale * (value - median)` of its frame's road values.
///
/// `video` supplies the values (raw or corrected); road membership comes
/// from the bundle's ideal film, so both videos lift the exact same pixels.
/// A video that matches the ideal film lands exactly on the plane; residual
/// sensor dynamics push points off it.
pub fn lift_ground_points(
    bundle: &GroundTruthBundle,
    video: &VideoSequence,
    scale: f64,
) -> Result<Vec<[f64; 3]>> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::domain(format!(
            "lift scale must be positive and finite, got {scale}"
        )));
    }
    if video.len() != bundle.film.len()
        || video.width() != bundle.camera.width
        || video.height() != bundle.camera.height
    {
        return Err(Error::domain(
            "video shape does not match the bundle's film",
        ));
    }
    let normal = bundle.scene.road.normal();
    let (w, h) = (bundle.camera.width, bundle.camera.height);
    let mut points = Vec::new();
    for k in 0..video.len() {
        let ideal = &bundle.film[k];
        let mut road: Vec<(usize, usize, f64)> = Vec::new();
        for py in 0..h {
            for px in 0..w {
                if ideal.get(px, py) == bundle.scene.road_irradiance {
                    road.push((px, py, video.frame(k).get(px, py)));
                }
            }
        }
        if road.is_empty() {
            continue;
        }
        let mut values: Vec<f64> = road.iter().map(|&(_, _, v)| v).collect();
        values.sort_by(f64::total_cmp);
        let mid = values.len() / 2;
        let median = if values.len() % 2 == 1 {
            values[mid]
        } else {
            0.5 * (values[mid - 1] + values[mid])
        };
        for (px, py, v) in road {
            let (o, d) = bundle.camera.pixel_ray(k, px, py);
            let Some(t) = ray_plane(o, d, &bundle.scene.road) else {
                continue;
            };
            let shift = scale * (v - median);
            points.push([
                o[0] + t * d[0] + shift * normal[0],
                o[1] + t * d[1] + shift * normal[1],
                o[2] + t * d[2] + shift * normal[2],
            ]);
        }
    }
    if points.is_empty() {
        return Err(Error::domain(
            "no road pixels are visible anywhere in the bundle",
        ));
    }
    Ok(points)
}

/// Finds a pixel that watched a box pass and then sees open road for the
/// rest of the sequence: returns its 1x1 region and the first all-road
/// frame. The region makes ghost decay directly measurable, because the
/// ideal value there is constant from that frame on.
pub fn ghost_region(bundle: &GroundTruthBundle) -> Option<(Region, usize)> {
    let (w, h) = (bundle.camera.width, bundle.camera.height);
    let n = bundle.film.len();
    let road = bundle.scene.road_irradiance;
    let ambient = bundle.scene.ambient;
    let mut best: Option<(usize, usize, usize)> = None;
    for py in 0..h {
        for px in 0..w {
            let mut tail = n;
            while tail > 0 && bundle.film[tail - 1].get(px, py) == road {
                tail -= 1;
            }
            if tail == 0 || n - tail < 2 {
                continue;
            }
            let saw_box = (0..tail).any(|k| {
                let v = bundle.film[k].get(px, py);
                v != road && v != ambient
            });
            if !saw_box {
                continue;
            }
            if best.map_or(true, |(t, _, _)| tail < t) {
                best = Some((tail, px, py));
            }
        }
    }
    best.map(|(tail, px, py)| {
        let region = Region::new(px, py, px + 1, py + 1).expect("1x1 region");
        (region, tail)
    })
}
