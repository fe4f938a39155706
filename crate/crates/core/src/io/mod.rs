//! The on-disk release layout and its readers, writers and auditor.
//!
//! ```text
//! <out>/config.json          run configuration
//! <out>/config_hash          SHA-256 of the canonical config.json
//! <out>/meta.json            conventions and scene summary
//! <out>/scene.mesh           the mesh the run used
//! <out>/frames/NNNNNN.{ppm,depth,json}
//! <out>/metadata/candidates.jsonl
//! <out>/metadata/per_step_log.jsonl
//! <out>/metadata/selected_viewpoints.json
//! <out>/wallclock.json       timings (the only non-deterministic file)
//! ```
//!
//! JSON numbers are written with 17 significant digits so every `f64`
//! round-trips and equal runs hash equal.

mod audit;
mod export;
mod frames;
mod json;
mod metadata;

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use audit::{audit, AuditCheck, AuditOptions, AuditReport};
pub use export::{
    export_run, load_scene, prepare_run, ExportSummary, PreparedRun, RunConfig, SceneSource,
};
pub use frames::{
    read_depth, read_frame, read_ppm, write_depth, write_frame, write_ppm, FrameRecord,
};
pub use json::{fmt_f64, to_json_line, to_json_pretty};
pub use metadata::{
    read_candidates, read_jsonl, read_json, read_step_logs, write_candidates, write_json,
    write_jsonl, write_step_logs, CandidateRecord, LogCandidate, SceneMeta, SelectedRecord,
    SelectedViewpoints, StepRecord,
};

pub const FRAMES_DIR: &str = "frames";
pub const METADATA_DIR: &str = "metadata";
pub const CONFIG_FILE: &str = "config.json";
pub const CONFIG_HASH_FILE: &str = "config_hash";
pub const META_FILE: &str = "meta.json";
pub const MESH_FILE: &str = "scene.mesh";
pub const CANDIDATES_FILE: &str = "metadata/candidates.jsonl";
pub const STEP_LOG_FILE: &str = "metadata/per_step_log.jsonl";
pub const SELECTED_FILE: &str = "metadata/selected_viewpoints.json";
pub const WALLCLOCK_FILE: &str = "wallclock.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_bytes(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_bytes(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn schema(path: &Path, msg: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}
