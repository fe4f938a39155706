use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{read_bytes, schema, to_json_line, to_json_pretty, write_bytes};
use crate::candidates::{Candidate, CandidateSet, LayerDiagnostics};
use crate::curator::StepLog;
use crate::error::{Error, Result};
use crate::geom;

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    write_bytes(path, to_json_pretty(value).as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> Result<()> {
    let mut out = String::new();
    for item in items {
        out.push_str(&to_json_line(item));
        out.push('\n');
    }
    write_bytes(path, out.as_bytes())
}

pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|_| schema(path, "not UTF-8"))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: e.to_string(),
            })
        })
        .collect()
}

/// Per-scene conventions and summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMeta {
    pub scene_id: String,
    pub source: String,
    pub config_hash: String,
    pub world_frame: String,
    pub camera_frame: String,
    pub erp_convention: String,
    pub quaternion_convention: String,
    pub position_origin: String,
    /// World position of frame 0; add to a frame's position to recover world
    /// coordinates.
    pub origin_world: [f64; 3],
    pub depth_encoding: String,
    pub invalid_depth: String,
    pub rgb_encoding: String,
    pub frame_count: usize,
    pub frame_width: usize,
    pub frame_height: usize,
}

impl SceneMeta {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        scene_id: &str,
        source: &str,
        config_hash: &str,
        origin_world: [f64; 3],
        frame_count: usize,
        frame_width: usize,
        frame_height: usize,
    ) -> Self {
        SceneMeta {
            scene_id: scene_id.into(),
            source: source.into(),
            config_hash: config_hash.into(),
            world_frame: geom::WORLD_FRAME.into(),
            camera_frame: geom::CAMERA_FRAME.into(),
            erp_convention: geom::ERP_CONVENTION.into(),
            quaternion_convention: geom::QUATERNION_CONVENTION.into(),
            position_origin: "frame 0 camera centre".into(),
            origin_world,
            depth_encoding: "raw float32 little-endian, row-major, range in metres".into(),
            invalid_depth: "0".into(),
            rgb_encoding: "binary PPM (P6), 8-bit".into(),
            frame_count,
            frame_width,
            frame_height,
        }
    }

    /// Whether the convention strings are the ones this build writes.
    pub fn conventions_match(&self) -> bool {
        self.world_frame == geom::WORLD_FRAME
            && self.camera_frame == geom::CAMERA_FRAME
            && self.erp_convention == geom::ERP_CONVENTION
            && self.quaternion_convention == geom::QUATERNION_CONVENTION
            && self.invalid_depth == "0"
    }
}

/// One line of `candidates.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub id: usize,
    pub position: [f64; 3],
    pub feasible: bool,
    /// Pass flags of filter layers 1..=7.
    pub layers: [bool; 7],
    pub diagnostics: LayerDiagnostics,
}

impl From<&Candidate> for CandidateRecord {
    fn from(c: &Candidate) -> Self {
        CandidateRecord {
            id: c.id,
            position: c.position.to_array(),
            feasible: c.feasible,
            layers: c.layers,
            diagnostics: c.diagnostics.clone(),
        }
    }
}

pub fn write_candidates(path: impl AsRef<Path>, set: &CandidateSet) -> Result<()> {
    let recs: Vec<CandidateRecord> = set.candidates.iter().map(CandidateRecord::from).collect();
    write_jsonl(path, &recs)
}

pub fn read_candidates(path: impl AsRef<Path>) -> Result<Vec<CandidateRecord>> {
    let path = path.as_ref();
    let recs: Vec<CandidateRecord> = read_jsonl(path)?;
    if recs.iter().enumerate().any(|(i, r)| r.id != i) {
        return Err(schema(path, "candidate ids must be 0..n in line order"));
    }
    Ok(recs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogCandidate {
    pub id: usize,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub s: f64,
}

/// One line of `per_step_log.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub selected_id: usize,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub s: f64,
    pub tie_break: bool,
    pub candidates: Vec<LogCandidate>,
}

impl From<&StepLog> for StepRecord {
    fn from(log: &StepLog) -> Self {
        StepRecord {
            step: log.step,
            selected_id: log.selected_id,
            g: log.g,
            l: log.l,
            s: log.s,
            tie_break: log.tie_break,
            candidates: log
                .candidates
                .iter()
                .map(|c| LogCandidate {
                    id: c.candidate_id,
                    g: c.g,
                    l: c.l,
                    s: c.s,
                })
                .collect(),
        }
    }
}

impl StepRecord {
    /// The winner maximises the selector's ranking key over the candidates
    /// it was chosen from, and `tie_break` is set exactly when another
    /// candidate shares that key. The seed step ranks by probe coverage,
    /// which is `G` on the empty history.
    pub fn winner_consistent(&self, selector: &str) -> bool {
        let Some(w) = self.candidates.iter().find(|c| c.id == self.selected_id) else {
            return false;
        };
        if (w.g, w.l, w.s) != (self.g, self.l, self.s) {
            return false;
        }
        let key = |c: &LogCandidate| match (self.step, selector) {
            (1, _) | (_, "coverage_only") => (c.g, 0.0),
            (_, "low_conflict") => (-c.l, c.g),
            _ => (c.s, 0.0),
        };
        let best = self
            .candidates
            .iter()
            .map(key)
            .fold((f64::NEG_INFINITY, f64::NEG_INFINITY), |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 > a.1) {
                    b
                } else {
                    a
                }
            });
        let ties = self.candidates.iter().filter(|c| key(c) == best).count();
        key(w) == best && (ties > 1) == self.tie_break
    }
}

pub fn write_step_logs(path: impl AsRef<Path>, logs: &[StepLog]) -> Result<()> {
    let recs: Vec<StepRecord> = logs.iter().map(StepRecord::from).collect();
    write_jsonl(path, &recs)
}

pub fn read_step_logs(path: impl AsRef<Path>) -> Result<Vec<StepRecord>> {
    let path = path.as_ref();
    let recs: Vec<StepRecord> = read_jsonl(path)?;
    if recs.iter().enumerate().any(|(i, r)| r.step != i + 1) {
        return Err(schema(path, "steps must be numbered 1..n in line order"));
    }
    Ok(recs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedRecord {
    pub frame: usize,
    pub id: usize,
    /// World coordinates.
    pub position: [f64; 3],
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub s: f64,
}

/// `selected_viewpoints.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedViewpoints {
    pub scene_id: String,
    pub config_hash: String,
    pub selector: String,
    pub lambda: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub stopped_early: bool,
    pub viewpoints: Vec<SelectedRecord>,
}

impl SelectedViewpoints {
    pub fn ids(&self) -> Vec<usize> {
        self.viewpoints.iter().map(|v| v.id).collect()
    }
}
