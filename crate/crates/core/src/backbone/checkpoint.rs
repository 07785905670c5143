use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Backbone, BackboneError, LayerSpec, ParamVector, Symmetry};

pub const CHECKPOINT_VERSION: u32 = 1;
const FORMAT: &str = "framekit-params";

/// First line of a checkpoint; `len` little-endian f64s follow it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    pub layers: Vec<LayerSpec>,
    pub symmetry: Symmetry,
    pub identifiers: Option<usize>,
    pub skip: bool,
    pub len: usize,
}

fn io(e: std::io::Error) -> BackboneError {
    BackboneError::Io(e.to_string())
}

pub fn write_checkpoint(w: &mut impl Write, backbone: &Backbone, params: &ParamVector) -> Result<(), BackboneError> {
    if params.len() != backbone.param_count() {
        return Err(BackboneError::ParamCount { expected: backbone.param_count(), found: params.len() });
    }
    let header = CheckpointHeader {
        format: FORMAT.to_string(),
        version: CHECKPOINT_VERSION,
        layers: backbone.specs().to_vec(),
        symmetry: backbone.symmetry(),
        identifiers: backbone.identifiers(),
        skip: backbone.skip(),
        len: params.len(),
    };
    let line = serde_json::to_string(&header).map_err(|e| BackboneError::Checkpoint(e.to_string()))?;
    w.write_all(line.as_bytes()).map_err(io)?;
    w.write_all(b"\n").map_err(io)?;
    for v in params.as_slice() {
        w.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a checkpoint and rebuilds the backbone it describes, re-running the
/// symmetry check of a tagged backbone.
pub fn read_checkpoint(r: &mut impl BufRead) -> Result<(Backbone, ParamVector), BackboneError> {
    let mut line = String::new();
    r.read_line(&mut line).map_err(io)?;
    let header: CheckpointHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| BackboneError::Checkpoint(format!("bad header: {e}")))?;
    if header.format != FORMAT {
        return Err(BackboneError::Checkpoint(format!("unknown format {:?}", header.format)));
    }
    if header.version != CHECKPOINT_VERSION {
        return Err(BackboneError::Checkpoint(format!("unsupported version {}", header.version)));
    }
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(io)?;
    if bytes.len() != header.len * 8 {
        return Err(BackboneError::Checkpoint(format!(
            "header declares {} values, body holds {} bytes",
            header.len,
            bytes.len()
        )));
    }
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    let symmetry = if header.identifiers.is_some() { Symmetry::None } else { header.symmetry };
    let mut backbone = Backbone::new(header.layers.clone(), symmetry)?;
    if let Some(max_n) = header.identifiers {
        backbone = backbone.with_identifiers(max_n)?;
    }
    if header.skip {
        backbone = backbone.with_skip()?;
    }
    let params = ParamVector::from_vec(backbone.specs(), data)?;
    Ok((backbone, params))
}

pub fn save_checkpoint(path: &Path, backbone: &Backbone, params: &ParamVector) -> Result<(), BackboneError> {
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    write_checkpoint(&mut w, backbone, params)
}

pub fn load_checkpoint(path: &Path) -> Result<(Backbone, ParamVector), BackboneError> {
    let mut r = BufReader::new(File::open(path).map_err(io)?);
    read_checkpoint(&mut r)
}
