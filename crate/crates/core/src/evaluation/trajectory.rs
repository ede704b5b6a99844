//! Distances between timestamped trajectories.
//!
//! Discrete Fréchet and DTW align the two sample sequences monotonically and
//! ignore timestamps: Fréchet takes the worst pair distance along the best
//! coupling (a bottleneck), DTW sums pair distances along the best warping
//! path. `mean_distance` does the opposite: it pairs samples strictly by
//! timestamp and averages the pointwise gaps.

use crate::error::{Error, Result};

/// Time-ordered polyline. Planar tracks live in the `z = 0` plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<(f64, [f64; 3])>,
}

impl Trajectory {
    /// Samples must be finite with strictly increasing timestamps.
    pub fn new(samples: Vec<(f64, [f64; 3])>) -> Result<Self> {
        for (k, (t, p)) in samples.iter().enumerate() {
            if !(t.is_finite() && p.iter().all(|v| v.is_finite())) {
                return Err(Error::domain(format!(
                    "trajectory sample {k} is not finite: t={t}, p={p:?}"
                )));
            }
            if k > 0 && *t <= samples[k - 1].0 {
                return Err(Error::domain(format!(
                    "trajectory timestamps must strictly increase; sample {k} has t={t} after t={}",
                    samples[k - 1].0
                )));
            }
        }
        Ok(Trajectory { samples })
    }

    /// Planar track embedded at `z = 0`.
    pub fn from_planar(samples: Vec<(f64, [f64; 2])>) -> Result<Self> {
        Trajectory::new(
            samples
                .into_iter()
                .map(|(t, [x, y])| (t, [x, y, 0.0]))
                .collect(),
        )
    }

    pub fn samples(&self) -> &[(f64, [f64; 3])] {
        &self.samples
    }

    pub fn positions(&self) -> Vec<[f64; 3]> {
        self.samples.iter().map(|&(_, p)| p).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

fn euclid(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

fn require_nonempty(a: &Trajectory, b: &Trajectory, what: &str) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain(format!(
            "{what} needs two non-empty trajectories"
        )));
    }
    Ok(())
}

/// Discrete Fréchet distance: the smallest worst-case pair distance over
/// monotone couplings of the two sample sequences.
pub fn discrete_frechet(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    require_nonempty(a, b, "discrete Frechet")?;
    let pa = a.samples();
    let pb = b.samples();
    let (n, m) = (pa.len(), pb.len());
    // One DP row at a time; entry (i, j) is the best coupling of prefixes
    // a[..=i], b[..=j].
    let mut prev = vec![0.0f64; m];
    let mut curr = vec![0.0f64; m];
    for i in 0..n {
        for j in 0..m {
            let d = euclid(pa[i].1, pb[j].1);
            let reach = match (i, j) {
                (0, 0) => d,
                (0, _) => curr[j - 1].max(d),
                (_, 0) => prev[0].max(d),
                _ => prev[j].min(curr[j - 1]).min(prev[j - 1]).max(d),
            };
            curr[j] = reach;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[m - 1])
}

/// Dynamic-time-warping cost: the smallest sum of pair distances over
/// monotone alignments (unit slope weights, no warping window).
pub fn dtw_distance(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    require_nonempty(a, b, "dynamic time warping")?;
    let pa = a.samples();
    let pb = b.samples();
    let (n, m) = (pa.len(), pb.len());
    let mut prev = vec![0.0f64; m];
    let mut curr = vec![0.0f64; m];
    for i in 0..n {
        for j in 0..m {
            let d = euclid(pa[i].1, pb[j].1);
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => curr[j - 1],
                (_, 0) => prev[0],
                _ => prev[j].min(curr[j - 1]).min(prev[j - 1]),
            };
            curr[j] = best + d;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[m - 1])
}

/// Mean gap over timestamp-matched samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedMean {
    pub mean: f64,
    /// Number of matched sample pairs.
    pub matched: usize,
    /// Samples (from both inputs combined) without a timestamp partner.
    pub unmatched: usize,
}

/// Timestamps within this absolute tolerance count as the same instant.
pub const TIMESTAMP_TOLERANCE: f64 = 1e-9;

/// Mean Euclidean distance over samples that share a timestamp.
///
/// Samples pair up by sort-merge with an absolute tolerance of
/// [`TIMESTAMP_TOLERANCE`] seconds; unmatched samples are skipped and
/// counted. Fails when no timestamps line up.
pub fn mean_distance(a: &Trajectory, b: &Trajectory) -> Result<MatchedMean> {
    require_nonempty(a, b, "mean distance")?;
    let sa = a.samples();
    let sb = b.samples();
    let (mut i, mut j) = (0, 0);
    let mut matched = 0usize;
    let mut sum = 0.0;
    while i < sa.len() && j < sb.len() {
        let (ta, pa) = sa[i];
        let (tb, pb) = sb[j];
        if (ta - tb).abs() <= TIMESTAMP_TOLERANCE {
            sum += euclid(pa, pb);
            matched += 1;
            i += 1;
            j += 1;
        } else if ta < tb {
            i += 1;
        } else {
            j += 1;
        }
    }
    if matched == 0 {
        return Err(Error::domain(
            "trajectories share no timestamps; nothing to average",
        ));
    }
    Ok(MatchedMean {
        mean: sum / matched as f64,
        matched,
        unmatched: sa.len() + sb.len() - 2 * matched,
    })
}
