//! CSV tables: frame manifests, ground-truth parameters, correspondences,
//! trajectories, and point clouds.
//!
//! Writers build the files by hand (header, LF endings, shortest
//! round-trip float formatting); readers go through the `csv` crate and
//! report malformed content as [`Error::Format`] with the file and line.
//! All times are seconds.

use crate::error::{Error, Result};
use crate::evaluation::{PointCloud, Trajectory};
use crate::photometric::Correspondence;
use crate::sensor::{FrameTiming, TimeConstants};
use crate::synthetic::{BoxSpec, CameraSpec, SceneSpec};
use crate::evaluation::{LineModel, PlaneModel};
use csv::{ReaderBuilder, StringRecord, Trim};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

const MANIFEST_HEADER: [&str; 4] = ["frame_index", "timestamp_s", "exposure_s", "readout_s"];
const CORR_HEADER: [&str; 6] = ["frame_i", "x", "y", "frame_j", "x_prime", "y_prime"];
const FACE_KEYS: [&str; 6] = [
    "face_neg_x",
    "face_pos_x",
    "face_neg_y",
    "face_pos_y",
    "face_neg_z",
    "face_pos_z",
];

fn write_text(path: &Path, text: String) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn open_records(path: &Path) -> Result<Vec<(u64, StringRecord)>> {
    let name = path.display().to_string();
    let mut reader = ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(name.clone(), io),
            other => Error::format(name.clone(), 0, format!("{other:?}")),
        })?;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, csv::Position::line);
            Error::format(name.clone(), line, e.to_string())
        })?;
        let line = rec.position().map_or(0, csv::Position::line);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push((line, rec));
    }
    Ok(rows)
}

fn parse<T: std::str::FromStr>(
    field: &str,
    what: &str,
    path: &Path,
    line: u64,
) -> Result<T> {
    field.parse().map_err(|_| {
        Error::format(
            path.display().to_string(),
            line,
            format!("{what} is not a valid value: {field:?}"),
        )
    })
}

fn expect_width(rec: &StringRecord, want: usize, path: &Path, line: u64) -> Result<()> {
    if rec.len() != want {
        return Err(Error::format(
            path.display().to_string(),
            line,
            format!("expected {want} columns, found {}", rec.len()),
        ));
    }
    Ok(())
}

/// Writes `manifest.csv`: one row per frame in order.
pub fn write_manifest(path: &Path, timings: &[FrameTiming]) -> Result<()> {
    let mut text = String::from("frame_index,timestamp_s,exposure_s,readout_s\n");
    for (k, t) in timings.iter().enumerate() {
        let _ = writeln!(
            text,
            "{k},{},{},{}",
            t.timestamp(),
            t.exposure(),
            t.readout()
        );
    }
    write_text(path, text)
}

/// Reads a manifest; frame indices must run 0, 1, 2, ... in order.
pub fn read_manifest(path: &Path) -> Result<Vec<FrameTiming>> {
    let rows = open_records(path)?;
    let Some(((_, header), data)) = rows.split_first().map(|(h, d)| (h.clone(), d)) else {
        return Err(Error::format(
            path.display().to_string(),
            0,
            "manifest is empty",
        ));
    };
    if header.iter().ne(MANIFEST_HEADER) {
        return Err(Error::format(
            path.display().to_string(),
            1,
            format!("manifest header must be {}", MANIFEST_HEADER.join(",")),
        ));
    }
    let mut timings = Vec::with_capacity(data.len());
    for (expected, (line, rec)) in data.iter().enumerate() {
        expect_width(rec, 4, path, *line)?;
        let index: usize = parse(&rec[0], "frame_index", path, *line)?;
        if index != expected {
            return Err(Error::format(
                path.display().to_string(),
                *line,
                format!("frame_index {index} out of order, expected {expected}"),
            ));
        }
        let timing = FrameTiming::new(
            parse(&rec[1], "timestamp_s", path, *line)?,
            parse(&rec[2], "exposure_s", path, *line)?,
            parse(&rec[3], "readout_s", path, *line)?,
        )
        .map_err(|e| Error::format(path.display().to_string(), *line, e.to_string()))?;
        timings.push(timing);
    }
    Ok(timings)
}

/// Writes `truth.csv`: the constants, plane, path, camera intrinsics, and
/// scene parameters as `key,value` rows in a fixed order.
///
/// The camera's per-frame timings live in the manifest, not here.
pub fn write_truth(
    path: &Path,
    taus: TimeConstants,
    scene: &SceneSpec,
    camera: &CameraSpec,
) -> Result<()> {
    let mut rows: Vec<(String, String)> = Vec::new();
    let mut put = |key: &str, value: String| rows.push((key.to_string(), value));
    put("tau_h", taus.tau_h().to_string());
    put("tau_c", taus.tau_c().to_string());
    let n = scene.road.normal();
    put("plane_normal_x", n[0].to_string());
    put("plane_normal_y", n[1].to_string());
    put("plane_normal_z", n[2].to_string());
    put("plane_offset", scene.road.offset().to_string());
    put("road_irradiance", scene.road_irradiance.to_string());
    put("ambient_irradiance", scene.ambient.to_string());
    let a = camera.path.anchor();
    let d = camera.path.direction();
    put("line_anchor_x", a[0].to_string());
    put("line_anchor_y", a[1].to_string());
    put("line_anchor_z", a[2].to_string());
    put("line_direction_x", d[0].to_string());
    put("line_direction_y", d[1].to_string());
    put("line_direction_z", d[2].to_string());
    put("speed", camera.speed.to_string());
    put("fx", camera.fx.to_string());
    put("fy", camera.fy.to_string());
    put("cx", camera.cx.to_string());
    put("cy", camera.cy.to_string());
    put("image_width", camera.width.to_string());
    put("image_height", camera.height.to_string());
    put("box_count", scene.boxes.len().to_string());
    for (k, b) in scene.boxes.iter().enumerate() {
        for (axis, name) in ["x", "y", "z"].iter().enumerate() {
            put(&format!("box{k}_center_{name}"), b.center[axis].to_string());
        }
        for (axis, name) in ["x", "y", "z"].iter().enumerate() {
            put(
                &format!("box{k}_half_{name}"),
                b.half_extents[axis].to_string(),
            );
        }
        for (face, name) in FACE_KEYS.iter().enumerate() {
            put(
                &format!("box{k}_{name}"),
                b.face_irradiance[face].to_string(),
            );
        }
    }
    let mut text = String::from("key,value\n");
    for (key, value) in rows {
        let _ = writeln!(text, "{key},{value}");
    }
    write_text(path, text)
}

/// Reads `truth.csv`. The returned camera has an empty timing list; callers
/// fill it from the manifest.
pub fn read_truth(path: &Path) -> Result<(TimeConstants, SceneSpec, CameraSpec)> {
    let rows = open_records(path)?;
    let name = path.display().to_string();
    let mut map: BTreeMap<String, (u64, String)> = BTreeMap::new();
    for (i, (line, rec)) in rows.iter().enumerate() {
        expect_width(rec, 2, path, *line)?;
        if i == 0 {
            if &rec[0] != "key" || &rec[1] != "value" {
                return Err(Error::format(name, *line, "truth header must be key,value"));
            }
            continue;
        }
        if map
            .insert(rec[0].to_string(), (*line, rec[1].to_string()))
            .is_some()
        {
            return Err(Error::format(
                name,
                *line,
                format!("duplicate key {:?}", &rec[0]),
            ));
        }
    }
    let fetch = |key: &str| -> Result<(u64, String)> {
        map.get(key).cloned().ok_or_else(|| {
            Error::format(
                path.display().to_string(),
                0,
                format!("missing key {key:?}"),
            )
        })
    };
    let num = |key: &str| -> Result<f64> {
        let (line, text) = fetch(key)?;
        parse(&text, key, path, line)
    };
    let int = |key: &str| -> Result<usize> {
        let (line, text) = fetch(key)?;
        parse(&text, key, path, line)
    };

    let taus = TimeConstants::new(num("tau_h")?, num("tau_c")?)?;
    let road = PlaneModel::new(
        [
            num("plane_normal_x")?,
            num("plane_normal_y")?,
            num("plane_normal_z")?,
        ],
        num("plane_offset")?,
    )?;
    let mut boxes = Vec::new();
    for k in 0..int("box_count")? {
        let mut center = [0.0; 3];
        let mut half = [0.0; 3];
        let mut faces = [0.0; 6];
        for (axis, name) in ["x", "y", "z"].iter().enumerate() {
            center[axis] = num(&format!("box{k}_center_{name}"))?;
            half[axis] = num(&format!("box{k}_half_{name}"))?;
        }
        for (face, name) in FACE_KEYS.iter().enumerate() {
            faces[face] = num(&format!("box{k}_{name}"))?;
        }
        boxes.push(BoxSpec {
            center,
            half_extents: half,
            face_irradiance: faces,
        });
    }
    let scene = SceneSpec {
        road,
        road_irradiance: num("road_irradiance")?,
        ambient: num("ambient_irradiance")?,
        boxes,
    };
    let camera = CameraSpec {
        fx: num("fx")?,
        fy: num("fy")?,
        cx: num("cx")?,
        cy: num("cy")?,
        width: int("image_width")?,
        height: int("image_height")?,
        path: LineModel::new(
            [
                num("line_anchor_x")?,
                num("line_anchor_y")?,
                num("line_anchor_z")?,
            ],
            [
                num("line_direction_x")?,
                num("line_direction_y")?,
                num("line_direction_z")?,
            ],
        )?,
        speed: num("speed")?,
        timings: Vec::new(),
    };
    Ok((taus, scene, camera))
}

/// Writes point correspondences. Only single-offset correspondences
/// serialize; the format has no column for sampling patterns.
pub fn write_correspondences(path: &Path, corrs: &[Correspondence]) -> Result<()> {
    let mut text = String::from("frame_i,x,y,frame_j,x_prime,y_prime\n");
    for c in corrs {
        if c.pattern != [(0, 0)] {
            return Err(Error::domain(format!(
                "correspondence with pattern {:?} cannot be serialized; only point \
                 correspondences are supported",
                c.pattern
            )));
        }
        let _ = writeln!(
            text,
            "{},{},{},{},{},{}",
            c.host_frame,
            c.host_pixel.0,
            c.host_pixel.1,
            c.target_frame,
            c.target_pixel.0,
            c.target_pixel.1
        );
    }
    write_text(path, text)
}

/// Reads point correspondences written by [`write_correspondences`].
pub fn read_correspondences(path: &Path) -> Result<Vec<Correspondence>> {
    let rows = open_records(path)?;
    let Some(((line, header), data)) = rows.split_first().map(|(h, d)| (h.clone(), d)) else {
        return Err(Error::format(
            path.display().to_string(),
            0,
            "correspondence table is empty",
        ));
    };
    if header.iter().ne(CORR_HEADER) {
        return Err(Error::format(
            path.display().to_string(),
            line,
            format!("header must be {}", CORR_HEADER.join(",")),
        ));
    }
    let mut corrs = Vec::with_capacity(data.len());
    for (line, rec) in data {
        expect_width(rec, 6, path, *line)?;
        corrs.push(Correspondence::point(
            parse(&rec[0], "frame_i", path, *line)?,
            (
                parse(&rec[1], "x", path, *line)?,
                parse(&rec[2], "y", path, *line)?,
            ),
            parse(&rec[3], "frame_j", path, *line)?,
            (
                parse(&rec[4], "x_prime", path, *line)?,
                parse(&rec[5], "y_prime", path, *line)?,
            ),
        ));
    }
    Ok(corrs)
}

/// True when every field parses as a finite or infinite float.
fn all_numeric(rec: &StringRecord) -> bool {
    rec.iter().all(|f| f.parse::<f64>().is_ok())
}

/// Writes a trajectory as `t,x,y,z` rows with a header.
pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut text = String::from("t,x,y,z\n");
    for (t, p) in traj.samples() {
        let _ = writeln!(text, "{t},{},{},{}", p[0], p[1], p[2]);
    }
    write_text(path, text)
}

/// Reads a trajectory from `t,x,y[,z]` rows; a non-numeric first row is
/// treated as a header. Planar rows land in the `z = 0` plane.
pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let rows = open_records(path)?;
    let mut samples: Vec<(f64, [f64; 3])> = Vec::new();
    let mut width: Option<usize> = None;
    for (i, (line, rec)) in rows.iter().enumerate() {
        if i == 0 && !all_numeric(rec) {
            continue;
        }
        let cols = rec.len();
        if cols != 3 && cols != 4 {
            return Err(Error::format(
                path.display().to_string(),
                *line,
                format!("expected t,x,y or t,x,y,z (3 or 4 columns), found {cols}"),
            ));
        }
        if *width.get_or_insert(cols) != cols {
            return Err(Error::format(
                path.display().to_string(),
                *line,
                format!("row has {cols} columns but earlier rows had {}", width.unwrap()),
            ));
        }
        let t = parse(&rec[0], "t", path, *line)?;
        let x = parse(&rec[1], "x", path, *line)?;
        let y = parse(&rec[2], "y", path, *line)?;
        let z = if cols == 4 {
            parse(&rec[3], "z", path, *line)?
        } else {
            0.0
        };
        samples.push((t, [x, y, z]));
    }
    Trajectory::new(samples)
        .map_err(|e| Error::format(path.display().to_string(), 0, e.to_string()))
}

/// Writes a point cloud as `x,y,z` rows with a header.
pub fn write_point_cloud(path: &Path, points: &[[f64; 3]]) -> Result<()> {
    let mut text = String::from("x,y,z\n");
    for p in points {
        let _ = writeln!(text, "{},{},{}", p[0], p[1], p[2]);
    }
    write_text(path, text)
}

/// Reads a point cloud from `x,y,z` rows; a non-numeric first row is a
/// header.
pub fn read_point_cloud(path: &Path) -> Result<PointCloud> {
    let rows = open_records(path)?;
    let mut points = Vec::new();
    for (i, (line, rec)) in rows.iter().enumerate() {
        if i == 0 && !all_numeric(rec) {
            continue;
        }
        expect_width(rec, 3, path, *line)?;
        points.push([
            parse(&rec[0], "x", path, *line)?,
            parse(&rec[1], "y", path, *line)?,
            parse(&rec[2], "z", path, *line)?,
        ]);
    }
    PointCloud::new(points)
        .map_err(|e| Error::format(path.display().to_string(), 0, e.to_string()))
}
