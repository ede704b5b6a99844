//! Plane and line fitting with perpendicular-deviation statistics.
//!
//! Fits are total least squares: the model minimizes the sum of squared
//! perpendicular distances, obtained from the eigenstructure of the centered
//! covariance. Covariances that are exactly diagonal short-circuit to an
//! axis-aligned answer, so canonical inputs (points on `z = 0`, points along
//! an axis) recover canonical models bit for bit.

use crate::error::{Error, Result};
use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::SeedableRng;

/// Finite 3D points, validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<[f64; 3]>,
}

impl PointCloud {
    pub fn new(points: Vec<[f64; 3]>) -> Result<Self> {
        for (k, p) in points.iter().enumerate() {
            if !p.iter().all(|v| v.is_finite()) {
                return Err(Error::domain(format!(
                    "point {k} has a non-finite coordinate: {p:?}"
                )));
            }
        }
        Ok(PointCloud { points })
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn into_points(self) -> Vec<[f64; 3]> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Plane `{ p : normal . p = offset }` with a unit normal.
///
/// Sign convention: the normal's largest-magnitude component is positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneModel {
    normal: [f64; 3],
    offset: f64,
}

impl PlaneModel {
    pub fn new(normal: [f64; 3], offset: f64) -> Result<Self> {
        let normal = unit_or_err(normal, "plane normal")?;
        if !offset.is_finite() {
            return Err(Error::domain(format!("plane offset must be finite, got {offset}")));
        }
        Ok(PlaneModel { normal, offset })
    }

    pub fn normal(&self) -> [f64; 3] {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Perpendicular distance from a point to the plane.
    pub fn distance(&self, p: [f64; 3]) -> f64 {
        (dot(self.normal, p) - self.offset).abs()
    }

    /// Signed distance, positive on the side the normal points to.
    pub fn signed_distance(&self, p: [f64; 3]) -> f64 {
        dot(self.normal, p) - self.offset
    }
}

/// Line through `anchor` along a unit `direction`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineModel {
    anchor: [f64; 3],
    direction: [f64; 3],
}

impl LineModel {
    pub fn new(anchor: [f64; 3], direction: [f64; 3]) -> Result<Self> {
        if !anchor.iter().all(|v| v.is_finite()) {
            return Err(Error::domain(format!(
                "line anchor must be finite, got {anchor:?}"
            )));
        }
        let direction = unit_or_err(direction, "line direction")?;
        Ok(LineModel { anchor, direction })
    }

    pub fn anchor(&self) -> [f64; 3] {
        self.anchor
    }

    pub fn direction(&self) -> [f64; 3] {
        self.direction
    }

    /// Point on the line at the given signed arc length from the anchor.
    pub fn point_at(&self, s: f64) -> [f64; 3] {
        [
            self.anchor[0] + s * self.direction[0],
            self.anchor[1] + s * self.direction[1],
            self.anchor[2] + s * self.direction[2],
        ]
    }

    /// Perpendicular distance from a point to the line.
    pub fn distance(&self, p: [f64; 3]) -> f64 {
        let r = sub(p, self.anchor);
        let along = dot(r, self.direction);
        let perp = sub(r, scale(self.direction, along));
        dot(perp, perp).sqrt()
    }
}

/// Anything with a perpendicular distance to a point.
pub trait PointDistance {
    fn distance_to_point(&self, point: [f64; 3]) -> f64;
}

impl PointDistance for PlaneModel {
    fn distance_to_point(&self, point: [f64; 3]) -> f64 {
        self.distance(point)
    }
}

impl PointDistance for LineModel {
    fn distance_to_point(&self, point: [f64; 3]) -> f64 {
        self.distance(point)
    }
}

/// RMSE and population standard deviation of perpendicular distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationStats {
    pub rmse: f64,
    pub std: f64,
    pub count: usize,
}

/// Distance statistics of a point set against a fitted model.
pub fn deviation_stats<M: PointDistance + ?Sized>(
    points: &[[f64; 3]],
    model: &M,
) -> Result<DeviationStats> {
    if points.is_empty() {
        return Err(Error::domain(
            "deviation statistics need at least one point",
        ));
    }
    let n = points.len() as f64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for &p in points {
        let d = model.distance_to_point(p);
        sum += d;
        sum_sq += d * d;
    }
    let mean_sq = sum_sq / n;
    let mean = sum / n;
    Ok(DeviationStats {
        rmse: mean_sq.sqrt(),
        std: (mean_sq - mean * mean).max(0.0).sqrt(),
        count: points.len(),
    })
}

/// Total-least-squares plane through a point cloud.
///
/// The normal is the least-spread principal direction of the centered
/// points. Requires at least three points with non-collinear spread;
/// otherwise the perpendicular direction is not unique and the fit fails
/// with [`Error::DegenerateGeometry`].
pub fn fit_plane(points: &[[f64; 3]]) -> Result<PlaneModel> {
    if points.len() < 3 {
        return Err(Error::DegenerateGeometry(format!(
            "plane fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let (centroid, cov) = centered_covariance(points)?;
    let (mut eigenvalues, axes) = principal_axes(&cov);
    // Ascending eigenvalue order: [0] = perpendicular candidate.
    eigenvalues.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lambda_mid = eigenvalues[1].0;
    let lambda_max = eigenvalues[2].0;
    if lambda_mid <= 1e-10 * lambda_max || lambda_max <= 0.0 {
        return Err(Error::DegenerateGeometry(
            "plane fit is degenerate: points are collinear or coincident".into(),
        ));
    }
    let normal = orient(axes[eigenvalues[0].1]);
    PlaneModel::new(normal, dot(normal, centroid))
}

/// Total-least-squares line through a point set.
///
/// Anchor is the centroid; direction is the largest-spread principal
/// direction. Fails with [`Error::DegenerateGeometry`] when all points
/// coincide.
pub fn fit_line(points: &[[f64; 3]]) -> Result<LineModel> {
    if points.len() < 2 {
        return Err(Error::DegenerateGeometry(format!(
            "line fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    let (centroid, cov) = centered_covariance(points)?;
    if cov.trace() <= 0.0 {
        return Err(Error::DegenerateGeometry(
            "line fit is degenerate: all points coincide".into(),
        ));
    }
    let (mut eigenvalues, axes) = principal_axes(&cov);
    eigenvalues.sort_by(|a, b| a.0.total_cmp(&b.0));
    let direction = orient(axes[eigenvalues[2].1]);
    LineModel::new(centroid, direction)
}

/// Keeps points within `half_thickness` of the plane (inclusive).
pub fn slab_filter(
    points: &[[f64; 3]],
    plane: &PlaneModel,
    half_thickness: f64,
) -> Result<Vec<[f64; 3]>> {
    if !(half_thickness.is_finite() && half_thickness >= 0.0) {
        return Err(Error::domain(format!(
            "slab half-thickness must be nonnegative and finite, got {half_thickness}"
        )));
    }
    Ok(points
        .iter()
        .copied()
        .filter(|&p| plane.distance(p) <= half_thickness)
        .collect())
}

/// Draws the same number of points from every cloud without replacement.
///
/// `count` defaults to the smallest cloud. Sampling is seeded and consumes
/// the stream in cloud order, so a fixed seed reproduces the draw. Selected
/// points keep their original relative order.
pub fn sample_equal_counts(
    clouds: &[Vec<[f64; 3]>],
    count: Option<usize>,
    seed: u64,
) -> Result<Vec<Vec<[f64; 3]>>> {
    if clouds.is_empty() {
        return Err(Error::domain("no point clouds to sample"));
    }
    let smallest = clouds.iter().map(Vec::len).min().unwrap();
    let target = count.unwrap_or(smallest);
    if target == 0 {
        return Err(Error::domain(
            "equal-count sampling needs a positive count; a cloud is empty",
        ));
    }
    if target > smallest {
        return Err(Error::domain(format!(
            "requested {target} samples per cloud but the smallest cloud has {smallest}"
        )));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    Ok(clouds
        .iter()
        .map(|cloud| {
            let mut idx = rand::seq::index::sample(&mut rng, cloud.len(), target).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| cloud[i]).collect()
        })
        .collect())
}

/// Merged-fit evaluation: equal-count samples from every cloud are pooled,
/// a plane is fit to the pool, and each full cloud is scored against it.
///
/// Returns the pooled-fit plane and one [`DeviationStats`] per input cloud,
/// in input order.
pub fn merged_plane_deviation(
    clouds: &[Vec<[f64; 3]>],
    count: Option<usize>,
    seed: u64,
) -> Result<(PlaneModel, Vec<DeviationStats>)> {
    let sampled = sample_equal_counts(clouds, count, seed)?;
    let merged: Vec<[f64; 3]> = sampled.into_iter().flatten().collect();
    let plane = fit_plane(&merged)?;
    let stats = clouds
        .iter()
        .map(|cloud| deviation_stats(cloud, &plane))
        .collect::<Result<Vec<_>>>()?;
    Ok((plane, stats))
}

fn centered_covariance(points: &[[f64; 3]]) -> Result<([f64; 3], Matrix3<f64>)> {
    let n = points.len() as f64;
    let mut centroid = [0.0; 3];
    for p in points {
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::domain(format!(
                "point has a non-finite coordinate: {p:?}"
            )));
        }
        for a in 0..3 {
            centroid[a] += p[a];
        }
    }
    for c in &mut centroid {
        *c /= n;
    }
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = sub(*p, centroid);
        for a in 0..3 {
            for b in 0..3 {
                cov[(a, b)] += d[a] * d[b];
            }
        }
    }
    Ok((centroid, cov))
}

/// Eigenvalues with their axis index plus the unit axes themselves.
///
/// An exactly diagonal covariance uses the coordinate axes directly, so
/// axis-aligned inputs produce exact canonical vectors.
fn principal_axes(cov: &Matrix3<f64>) -> ([(f64, usize); 3], [[f64; 3]; 3]) {
    let diagonal = cov[(0, 1)] == 0.0 && cov[(0, 2)] == 0.0 && cov[(1, 2)] == 0.0;
    if diagonal {
        let values = [
            (cov[(0, 0)], 0usize),
            (cov[(1, 1)], 1usize),
            (cov[(2, 2)], 2usize),
        ];
        let axes = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        return (values, axes);
    }
    let eigen = SymmetricEigen::new(*cov);
    let mut values = [(0.0, 0usize); 3];
    let mut axes = [[0.0; 3]; 3];
    for k in 0..3 {
        values[k] = (eigen.eigenvalues[k], k);
        let col: Vector3<f64> = eigen.eigenvectors.column(k).into();
        axes[k] = [col[0], col[1], col[2]];
    }
    (values, axes)
}

/// Flips the vector so its largest-magnitude component is positive.
fn orient(v: [f64; 3]) -> [f64; 3] {
    let mut lead = 0;
    for a in 1..3 {
        if v[a].abs() > v[lead].abs() {
            lead = a;
        }
    }
    if v[lead] < 0.0 {
        [-v[0], -v[1], -v[2]]
    } else {
        v
    }
}

fn unit_or_err(v: [f64; 3], what: &str) -> Result<[f64; 3]> {
    if !v.iter().all(|x| x.is_finite()) {
        return Err(Error::domain(format!("{what} must be finite, got {v:?}")));
    }
    let norm = dot(v, v).sqrt();
    if norm <= 0.0 {
        return Err(Error::domain(format!("{what} must be nonzero")));
    }
    let u = scale(v, 1.0 / norm);
    if (dot(u, u).sqrt() - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!("{what} could not be normalized")));
    }
    Ok(u)
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn scale(v: [f64; 3], s: f64) -> [f64; 3] {
    [v[0] * s, v[1] * s, v[2] * s]
}
