//! Quality metrics for corrected video.
//!
//! Two families: geometric accuracy of structure recovered from intensity
//! (plane/line fits and point-to-model deviation statistics), and temporal
//! consistency (curve distances between trajectories, intensity stability of
//! a fixed image region over time).

mod geometry;
mod trajectory;

pub use geometry::{
    deviation_stats, fit_line, fit_plane, merged_plane_deviation, sample_equal_counts,
    slab_filter, DeviationStats, LineModel, PlaneModel, PointCloud, PointDistance,
};
pub use trajectory::{
    discrete_frechet, dtw_distance, mean_distance, MatchedMean, Trajectory,
    TIMESTAMP_TOLERANCE,
};

use crate::correction::VideoSequence;
use crate::error::{Error, Result};

/// Axis-aligned pixel rectangle, inclusive of `x0,y0`, exclusive of `x1,y1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Region {
    pub fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Result<Self> {
        if x0 >= x1 || y0 >= y1 {
            return Err(Error::domain(format!(
                "region must have positive area, got [{x0}, {x1}) x [{y0}, {y1})"
            )));
        }
        Ok(Region { x0, y0, x1, y1 })
    }
}

/// Standard deviation over time of a region's per-frame mean intensity.
///
/// Zero means the region's average brightness never changes; residual sensor
/// dynamics show up as a positive value. Uses the population (biased)
/// standard deviation, matching [`DeviationStats`].
pub fn intensity_stability(seq: &VideoSequence, region: Region) -> Result<f64> {
    if seq.len() < 2 {
        return Err(Error::domain(
            "intensity stability needs at least two frames",
        ));
    }
    if region.x1 > seq.width() || region.y1 > seq.height() {
        return Err(Error::domain(format!(
            "region [{}, {}) x [{}, {}) exceeds {}x{} frames",
            region.x0,
            region.x1,
            region.y0,
            region.y1,
            seq.width(),
            seq.height()
        )));
    }
    let area = ((region.x1 - region.x0) * (region.y1 - region.y0)) as f64;
    let means: Vec<f64> = seq
        .frames()
        .iter()
        .map(|f| {
            let mut sum = 0.0;
            for y in region.y0..region.y1 {
                for x in region.x0..region.x1 {
                    sum += f.get(x, y);
                }
            }
            sum / area
        })
        .collect();
    let grand = means.iter().sum::<f64>() / means.len() as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / means.len() as f64;
    Ok(var.sqrt())
}
