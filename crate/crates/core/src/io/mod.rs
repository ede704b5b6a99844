//! On-disk formats.
//!
//! Two pixel formats exist side by side: a standard 16-bit PGM view for
//! interoperability (values rounded and clamped to `0..=65535`) and an exact
//! little-endian `f64` plane (`FP64` magic) that preserves simulated values
//! bit for bit. Everything tabular is plain CSV with LF line endings; floats
//! serialize via Rust's shortest round-trip formatting, so a written value
//! parses back to the identical bits.
//!
//! A ground-truth bundle is a directory:
//!
//! ```text
//! bundle/
//!   manifest.csv          frame_index,timestamp_s,exposure_s,readout_s
//!   truth.csv             key,value (taus, plane, line, camera, scene)
//!   correspondences.csv   frame_i,x,y,frame_j,x_prime,y_prime
//!   frames/raw_0000.f64   exact raw frames (plus raw_0000.pgm views)
//!   frames/ideal_0000.f64 ideal irradiance film
//! ```
//!
//! A plain video directory is the same minus truth, correspondences, and
//! ideal frames.

pub mod bundle;
pub mod pgm;
pub mod plane;
pub mod tables;

pub use bundle::{read_bundle, read_video_dir, write_bundle, write_video_dir};
pub use pgm::{read_pgm, write_pgm};
pub use plane::{read_plane, write_plane};
pub use tables::{
    read_correspondences, read_manifest, read_point_cloud, read_trajectory, read_truth,
    write_correspondences, write_manifest, write_point_cloud, write_trajectory,
};
