//! One selected view on disk: binary PPM colour, raw little-endian `f32`
//! range depth and a pose sidecar.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_bytes, schema, to_json_pretty, write_bytes};
use crate::error::{Error, Result};
use crate::render::{DepthImage, ErpImage, RgbImage};
use crate::PoseWC;

/// The pose sidecar `NNNNNN.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame: usize,
    pub candidate_id: usize,
    /// File names relative to the frame directory.
    pub rgb: String,
    pub depth: String,
    pub width: usize,
    pub height: usize,
    pub camera_type: String,
    /// World-to-camera rotation, scalar first.
    pub quaternion_wxyz: [f64; 4],
    /// Camera centre relative to frame 0, world axes, metres.
    pub position: [f64; 3],
    pub config_hash: String,
}

impl FrameRecord {
    pub fn stem(frame: usize) -> String {
        format!("{frame:06}")
    }
}

pub fn write_ppm(path: impl AsRef<Path>, img: &RgbImage) -> Result<()> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.reserve(img.data.len() * 3);
    for px in &img.data {
        out.extend_from_slice(px);
    }
    write_bytes(path, &out)
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    // Header: magic, width, height, maxval, each followed by whitespace.
    let mut fields = Vec::new();
    let mut i = 0;
    while fields.len() < 4 {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(schema(path, "truncated PPM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    i += 1;
    if fields[0] != "P6" || fields[3] != "255" {
        return Err(schema(path, "expected a binary 8-bit PPM (P6, maxval 255)"));
    }
    let dim = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| schema(path, format!("bad PPM dimension `{s}`")))
    };
    let (width, height) = (dim(&fields[1])?, dim(&fields[2])?);
    let body = bytes.get(i..).unwrap_or_default();
    if body.len() != width * height * 3 {
        return Err(schema(
            path,
            format!("PPM body is {} bytes, expected {}", body.len(), width * height * 3),
        ));
    }
    Ok(ErpImage {
        width,
        height,
        data: body.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
    })
}

pub fn write_depth(path: impl AsRef<Path>, depth: &DepthImage) -> Result<()> {
    let bytes: Vec<u8> = depth.data.iter().flat_map(|d| d.to_le_bytes()).collect();
    write_bytes(path, &bytes)
}

pub fn read_depth(path: impl AsRef<Path>, width: usize, height: usize) -> Result<DepthImage> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    if bytes.len() != 4 * width * height {
        return Err(schema(
            path,
            format!("depth is {} bytes, expected 4·{width}·{height}", bytes.len()),
        ));
    }
    Ok(ErpImage {
        width,
        height,
        data: bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect(),
    })
}

/// Writes frame `idx` into `dir` with its position relative to `first`.
#[allow(clippy::too_many_arguments)]
pub fn write_frame(
    dir: impl AsRef<Path>,
    idx: usize,
    candidate_id: usize,
    rgb: &RgbImage,
    depth: &DepthImage,
    pose: &PoseWC,
    first: &PoseWC,
    config_hash: &str,
) -> Result<FrameRecord> {
    let dir = dir.as_ref();
    if (rgb.width, rgb.height) != (depth.width, depth.height) {
        return Err(Error::InfeasibleSpec(format!(
            "frame {idx}: rgb {}×{} and depth {}×{} differ",
            rgb.width, rgb.height, depth.width, depth.height
        )));
    }
    let stem = FrameRecord::stem(idx);
    let rec = FrameRecord {
        frame: idx,
        candidate_id,
        rgb: format!("{stem}.ppm"),
        depth: format!("{stem}.depth"),
        width: depth.width,
        height: depth.height,
        camera_type: "erp".into(),
        quaternion_wxyz: pose.rotation.to_wxyz(),
        position: (pose.position - first.position).to_array(),
        config_hash: config_hash.into(),
    };
    write_ppm(dir.join(&rec.rgb), rgb)?;
    write_depth(dir.join(&rec.depth), depth)?;
    write_bytes(dir.join(format!("{stem}.json")), to_json_pretty(&rec).as_bytes())?;
    Ok(rec)
}

pub fn frame_json_path(dir: &Path, idx: usize) -> PathBuf {
    dir.join(format!("{}.json", FrameRecord::stem(idx)))
}

/// Reads a frame's sidecar, depth and colour back.
pub fn read_frame(dir: impl AsRef<Path>, idx: usize) -> Result<(FrameRecord, DepthImage, RgbImage)> {
    let dir = dir.as_ref();
    let rec: FrameRecord = super::read_json(frame_json_path(dir, idx))?;
    let depth = read_depth(dir.join(&rec.depth), rec.width, rec.height)?;
    let rgb = read_ppm(dir.join(&rec.rgb))?;
    if (rgb.width, rgb.height) != (rec.width, rec.height) {
        return Err(schema(&dir.join(&rec.rgb), "dimensions differ from the pose sidecar"));
    }
    Ok((rec, depth, rgb))
}
