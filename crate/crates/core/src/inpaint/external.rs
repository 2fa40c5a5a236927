//! File/subprocess exchange for out-of-process backends.
//!
//! Each stage call gets its own directory `<work_dir>/<seq>-<stage>/` holding:
//!
//! | file                  | channels | content                                        |
//! |-----------------------|----------|------------------------------------------------|
//! | `request.json`        |          | [`RequestSidecar`]                              |
//! | `color.pfm`           | 3        | context color in `[0, 1]`, zero elsewhere       |
//! | `disparity.pfm`       | 1        | context disparity, zero elsewhere               |
//! | `edges.pfm`           | 1        | context edge masks (direction bits as floats)   |
//! | `mask.pfm`            | 1        | 1 on synthesis cells, 0 elsewhere               |
//! | `excluded.pfm`        | 1        | 1 on cells the backend must ignore              |
//! | `seed_color.pfm`      | 3        | flood-fill seed color on synthesis cells        |
//! | `seed_disparity.pfm`  | 1        | flood-fill seed disparity on synthesis cells    |
//! | `inpainted_edges.pfm` | 1        | edge-stage output (color/depth stages only)     |
//!
//! The command is invoked with the directory as its last argument and must
//! write `output.pfm`: 1 channel of edge bits for `edge`, 3 channels of color
//! for `color`, 1 channel of disparity for `depth`, all at the bbox size.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use super::{Backend, InpaintRequest, Stage};
use crate::error::{Error, Result};
use crate::image_io::{read_pfm, write_pfm, PfmImage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestSidecar {
    pub stage: Stage,
    /// `[x, y, width, height]` of the patch on the LDI lattice.
    pub bbox: [i64; 4],
    pub color: String,
    pub disparity: String,
    pub edges: String,
    pub mask: String,
    pub excluded: String,
    pub seed_color: String,
    pub seed_disparity: String,
    pub inpainted_edges: Option<String>,
    pub output: String,
}

fn flag(v: bool) -> f32 {
    if v {
        1.0
    } else {
        0.0
    }
}

/// Write the request planes and sidecar for one stage into `dir`.
pub fn write_request(
    dir: &Path,
    stage: Stage,
    req: &InpaintRequest,
    inpainted_edges: Option<&[u8]>,
) -> Result<RequestSidecar> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (w, h) = (req.width, req.height);
    let flat3 = |v: &[[f32; 3]]| v.iter().flatten().copied().collect::<Vec<f32>>();
    write_pfm(&dir.join("color.pfm"), w, h, 3, &flat3(&req.color))?;
    write_pfm(&dir.join("disparity.pfm"), w, h, 1, &req.disparity)?;
    let edges: Vec<f32> = req.edges.iter().map(|e| *e as f32).collect();
    write_pfm(&dir.join("edges.pfm"), w, h, 1, &edges)?;
    let mask: Vec<f32> = req.synthesis.iter().map(|s| flag(*s)).collect();
    write_pfm(&dir.join("mask.pfm"), w, h, 1, &mask)?;
    let excluded: Vec<f32> = req.excluded.iter().map(|s| flag(*s)).collect();
    write_pfm(&dir.join("excluded.pfm"), w, h, 1, &excluded)?;
    write_pfm(&dir.join("seed_color.pfm"), w, h, 3, &flat3(&req.seed_color))?;
    write_pfm(&dir.join("seed_disparity.pfm"), w, h, 1, &req.seed_disparity)?;
    let inpainted = match inpainted_edges {
        Some(e) => {
            let v: Vec<f32> = e.iter().map(|b| *b as f32).collect();
            write_pfm(&dir.join("inpainted_edges.pfm"), w, h, 1, &v)?;
            Some("inpainted_edges.pfm".to_string())
        }
        None => None,
    };
    let sidecar = RequestSidecar {
        stage,
        bbox: [req.origin.0 as i64, req.origin.1 as i64, w as i64, h as i64],
        color: "color.pfm".into(),
        disparity: "disparity.pfm".into(),
        edges: "edges.pfm".into(),
        mask: "mask.pfm".into(),
        excluded: "excluded.pfm".into(),
        seed_color: "seed_color.pfm".into(),
        seed_disparity: "seed_disparity.pfm".into(),
        inpainted_edges: inpainted,
        output: "output.pfm".into(),
    };
    let json = serde_json::to_vec_pretty(&sidecar)?;
    let path = dir.join("request.json");
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(sidecar)
}

/// Read and shape-check the output plane named by `sidecar`.
pub fn read_result_plane(dir: &Path, sidecar: &RequestSidecar) -> Result<PfmImage> {
    let pfm = read_pfm(&dir.join(&sidecar.output))?;
    let want = if sidecar.stage == Stage::Color { 3 } else { 1 };
    let [_, _, w, h] = sidecar.bbox;
    if pfm.channels != want || pfm.width as i64 != w || pfm.height as i64 != h {
        return Err(Error::Backend {
            stage: sidecar.stage,
            message: format!(
                "output is {}x{}x{}, expected {w}x{h}x{want}",
                pfm.width, pfm.height, pfm.channels
            ),
        });
    }
    Ok(pfm)
}

/// Backend that delegates every stage to an external command.
#[derive(Debug)]
pub struct ExternalBackend {
    pub command: Vec<String>,
    pub work_dir: PathBuf,
    seq: AtomicUsize,
}

impl ExternalBackend {
    pub fn new(command: Vec<String>, work_dir: impl Into<PathBuf>) -> Self {
        ExternalBackend {
            command,
            work_dir: work_dir.into(),
            seq: AtomicUsize::new(0),
        }
    }

    fn run(&self, stage: Stage, req: &InpaintRequest, edges: Option<&[u8]>) -> std::result::Result<PfmImage, String> {
        let seq = self.seq.fetch_add(1, Ordering::SeqCst);
        let dir = self.work_dir.join(format!("{seq:06}-{stage}"));
        let sidecar = write_request(&dir, stage, req, edges).map_err(|e| e.to_string())?;
        let (prog, args) = self
            .command
            .split_first()
            .ok_or_else(|| "no backend command configured".to_string())?;
        let status = Command::new(prog)
            .args(args)
            .arg(&dir)
            .status()
            .map_err(|e| format!("cannot start {prog}: {e}"))?;
        if !status.success() {
            return Err(format!("{prog} exited with {status}"));
        }
        read_result_plane(&dir, &sidecar).map_err(|e| e.to_string())
    }
}

impl Backend for ExternalBackend {
    fn inpaint_edges(&self, req: &InpaintRequest) -> std::result::Result<Vec<u8>, String> {
        let out = self.run(Stage::Edge, req, None)?;
        Ok(out
            .data
            .iter()
            .map(|v| v.round().clamp(0.0, 15.0) as u8)
            .collect())
    }

    fn inpaint_color(&self, req: &InpaintRequest, edges: &[u8]) -> std::result::Result<Vec<[f32; 3]>, String> {
        let out = self.run(Stage::Color, req, Some(edges))?;
        Ok(out
            .data
            .chunks_exact(3)
            .map(|c| [c[0], c[1], c[2]])
            .collect())
    }

    fn inpaint_depth(&self, req: &InpaintRequest, edges: &[u8]) -> std::result::Result<Vec<f32>, String> {
        Ok(self.run(Stage::Depth, req, Some(edges))?.data)
    }
}
