//! Directory-level readers and writers: full ground-truth bundles and
//! plain video directories. See the module docs in [`crate::io`] for the
//! layout.

use crate::correction::{Frame, VideoSequence};
use crate::error::{Error, Result};
use crate::io::pgm::write_pgm;
use crate::io::plane::{read_plane, write_plane};
use crate::io::tables::{
    read_correspondences, read_manifest, read_truth, write_correspondences, write_manifest,
    write_truth,
};
use crate::sensor::FrameTiming;
use crate::synthetic::GroundTruthBundle;
use std::path::Path;

fn make_dirs(dir: &Path) -> Result<()> {
    let frames = dir.join("frames");
    std::fs::create_dir_all(&frames).map_err(|e| Error::io(frames.display().to_string(), e))
}

pub(crate) fn frame_file(dir: &Path, prefix: &str, index: usize, ext: &str) -> std::path::PathBuf {
    dir.join("frames").join(format!("{prefix}_{index:04}.{ext}"))
}

fn write_frames(dir: &Path, frames: &[Frame], prefix: &str) -> Result<()> {
    for (k, frame) in frames.iter().enumerate() {
        write_plane(
            &frame_file(dir, prefix, k, "f64"),
            frame.width(),
            frame.height(),
            frame.data(),
        )?;
    }
    Ok(())
}

fn read_frames(dir: &Path, timings: &[FrameTiming], prefix: &str) -> Result<Vec<Frame>> {
    let mut frames = Vec::with_capacity(timings.len());
    for (k, timing) in timings.iter().enumerate() {
        let path = frame_file(dir, prefix, k, "f64");
        let (width, height, data) = read_plane(&path)?;
        frames.push(Frame::new(width, height, data, *timing)?);
    }
    Ok(frames)
}

/// Writes a video as `manifest.csv` plus `frames/{prefix}_####.f64`.
pub fn write_video_dir(dir: &Path, video: &VideoSequence, prefix: &str) -> Result<()> {
    make_dirs(dir)?;
    let timings: Vec<FrameTiming> = video.frames().iter().map(Frame::timing).collect();
    write_manifest(&dir.join("manifest.csv"), &timings)?;
    write_frames(dir, video.frames(), prefix)
}

/// Reads a video directory written by [`write_video_dir`].
pub fn read_video_dir(dir: &Path, prefix: &str) -> Result<VideoSequence> {
    let timings = read_manifest(&dir.join("manifest.csv"))?;
    VideoSequence::new(read_frames(dir, &timings, prefix)?)
}

/// Writes a complete ground-truth bundle.
///
/// Raw frames are stored bit-exactly (`raw_####.f64`) and additionally as
/// 16-bit PGM previews (`raw_####.pgm`); the ideal film goes to
/// `ideal_####.f64`.
pub fn write_bundle(dir: &Path, bundle: &GroundTruthBundle) -> Result<()> {
    make_dirs(dir)?;
    let timings: Vec<FrameTiming> = bundle.raw.frames().iter().map(Frame::timing).collect();
    write_manifest(&dir.join("manifest.csv"), &timings)?;
    write_truth(
        &dir.join("truth.csv"),
        bundle.taus,
        &bundle.scene,
        &bundle.camera,
    )?;
    write_correspondences(&dir.join("correspondences.csv"), &bundle.correspondences)?;
    write_frames(dir, bundle.raw.frames(), "raw")?;
    write_frames(dir, &bundle.film, "ideal")?;
    for (k, frame) in bundle.raw.frames().iter().enumerate() {
        write_pgm(&frame_file(dir, "raw", k, "pgm"), frame)?;
    }
    Ok(())
}

/// Reads a bundle back and re-validates everything: specs, frame shapes,
/// and correspondence bounds against the raw video.
pub fn read_bundle(dir: &Path) -> Result<GroundTruthBundle> {
    let timings = read_manifest(&dir.join("manifest.csv"))?;
    let (taus, scene, mut camera) = read_truth(&dir.join("truth.csv"))?;
    camera.timings = timings.clone();
    scene.validate()?;
    camera.validate()?;
    let correspondences = read_correspondences(&dir.join("correspondences.csv"))?;
    let raw = VideoSequence::new(read_frames(dir, &timings, "raw")?)?;
    let film = read_frames(dir, &timings, "ideal")?;
    for c in &correspondences {
        c.validate(&raw)?;
    }
    Ok(GroundTruthBundle {
        scene,
        camera,
        taus,
        film,
        raw,
        correspondences,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{build_benchmark, BenchmarkConfig};

    fn small_bundle() -> GroundTruthBundle {
        let config = BenchmarkConfig {
            frames: 6,
            ..BenchmarkConfig::default()
        };
        build_benchmark(11, &config).unwrap()
    }

    #[test]
    fn bundle_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = small_bundle();
        write_bundle(dir.path(), &bundle).unwrap();
        let back = read_bundle(dir.path()).unwrap();

        assert_eq!(back.scene, bundle.scene);
        assert_eq!(back.camera, bundle.camera);
        assert_eq!(back.taus.tau_h().to_bits(), bundle.taus.tau_h().to_bits());
        assert_eq!(back.correspondences, bundle.correspondences);
        assert_eq!(back.raw.len(), bundle.raw.len());
        for (a, b) in back.raw.frames().iter().zip(bundle.raw.frames()) {
            assert_eq!(a.timing(), b.timing());
            for (x, y) in a.data().iter().zip(b.data()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        for (a, b) in back.film.iter().zip(&bundle.film) {
            for (x, y) in a.data().iter().zip(b.data()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn bundle_layout_matches_the_documented_names() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = small_bundle();
        write_bundle(dir.path(), &bundle).unwrap();
        for name in ["manifest.csv", "truth.csv", "correspondences.csv"] {
            assert!(dir.path().join(name).is_file(), "{name} missing");
        }
        for k in 0..bundle.raw.len() {
            for name in [
                format!("raw_{k:04}.f64"),
                format!("raw_{k:04}.pgm"),
                format!("ideal_{k:04}.f64"),
            ] {
                assert!(dir.path().join("frames").join(&name).is_file(), "{name}");
            }
        }
    }

    #[test]
    fn video_dir_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = small_bundle();
        write_video_dir(dir.path(), &bundle.raw, "corrected").unwrap();
        let back = read_video_dir(dir.path(), "corrected").unwrap();
        assert_eq!(back.len(), bundle.raw.len());
        for (a, b) in back.frames().iter().zip(bundle.raw.frames()) {
            assert_eq!(a.timing(), b.timing());
            assert_eq!(a.data(), b.data());
        }
    }

    #[test]
    fn missing_frame_file_is_reported_with_its_path() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = small_bundle();
        write_bundle(dir.path(), &bundle).unwrap();
        std::fs::remove_file(dir.path().join("frames/ideal_0003.f64")).unwrap();
        let msg = read_bundle(dir.path()).unwrap_err().to_string();
        assert!(msg.contains("ideal_0003.f64"), "{msg}");
    }

    #[test]
    fn tampered_truth_fails_validation() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = small_bundle();
        write_bundle(dir.path(), &bundle).unwrap();
        let truth = dir.path().join("truth.csv");
        let text = std::fs::read_to_string(&truth).unwrap();
        let text = text.replace("\nfx,64\n", "\nfx,-64\n");
        assert!(text.contains("fx,-64"));
        std::fs::write(&truth, text).unwrap();
        assert!(read_bundle(dir.path()).is_err());
    }
}
