//! JSON parameter checkpoints.
//!
//! A checkpoint is a single JSON object with a string `meta` section (config
//! hash and the like) and a `tensors` section mapping parameter names to
//! `{ "shape": [rows, cols], "values": [...] }` records with row-major
//! values. Keys are sorted, and floats serialize via the shortest
//! round-trippable decimal form, so save/load is exact.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

use super::Tensor;

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    shape: [usize; 2],
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    #[serde(default)]
    meta: BTreeMap<String, String>,
    tensors: BTreeMap<String, TensorRecord>,
}

/// Writes named tensors plus string metadata to `path` as pretty-printed
/// JSON (atomically: a temp file in the same directory is renamed into
/// place).
pub fn save_checkpoint_with_meta(
    path: &Path,
    params: &[(String, &Tensor)],
    meta: &BTreeMap<String, String>,
) -> Result<()> {
    let mut tensors = BTreeMap::new();
    for (name, t) in params {
        t.check_finite(&format!("checkpoint tensor {name}"))?;
        tensors.insert(
            name.clone(),
            TensorRecord { shape: [t.rows(), t.cols()], values: t.data().to_vec() },
        );
    }
    let file = CheckpointFile { meta: meta.clone(), tensors };
    let json = serde_json::to_string_pretty(&file)?;
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, json)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// [`save_checkpoint_with_meta`] with an empty metadata section.
pub fn save_checkpoint(path: &Path, params: &[(String, &Tensor)]) -> Result<()> {
    save_checkpoint_with_meta(path, params, &BTreeMap::new())
}

/// Reads a checkpoint back into a name -> tensor map plus its metadata.
pub fn load_checkpoint_with_meta(
    path: &Path,
) -> Result<(BTreeMap<String, Tensor>, BTreeMap<String, String>)> {
    let json = fs::read_to_string(path)?;
    let file: CheckpointFile = serde_json::from_str(&json)?;
    let mut out = BTreeMap::new();
    for (name, rec) in file.tensors {
        let t = Tensor::from_vec(rec.shape[0], rec.shape[1], rec.values)
            .map_err(|_| Error::Parse(format!("checkpoint tensor {name} has inconsistent shape")))?;
        t.check_finite(&format!("checkpoint tensor {name}"))?;
        out.insert(name, t);
    }
    Ok((out, file.meta))
}

/// Reads a checkpoint back into a name -> tensor map.
pub fn load_checkpoint(path: &Path) -> Result<BTreeMap<String, Tensor>> {
    Ok(load_checkpoint_with_meta(path)?.0)
}
