//! Checkpoint serialization and the training-log text format.
//!
//! Checkpoints are little-endian binary: an 8-byte magic, a format version,
//! the layer shape, the activation token, the SHA-256 of the vocabulary the
//! model was trained against, then each layer's weights (row-major) and
//! biases as f64. Embedding the vocabulary hash lets downstream stages
//! refuse feature matrices the model was not trained for.

use super::{train::TrainLogEntry, Activation, MLPParams};
use ndarray::{Array1, Array2};
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"PSMODEL\0";
const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("not a model checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("invalid checkpoint shape: {0}")]
    BadShape(String),
    #[error("unknown activation {0:?}")]
    BadActivation(String),
    #[error("checkpoint holds non-finite values at layer {layer}")]
    NonFinite { layer: usize },
    #[error("trailing bytes after checkpoint payload")]
    TrailingBytes,
}

pub fn save_checkpoint(
    path: &Path,
    params: &MLPParams,
    vocab_hash: &[u8; 32],
) -> Result<(), CheckpointError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(params.input_dim() as u32).to_le_bytes())?;
    let hidden = params.hidden_dims();
    w.write_all(&(hidden.len() as u32).to_le_bytes())?;
    for dim in &hidden {
        w.write_all(&(*dim as u32).to_le_bytes())?;
    }
    let token = params.activation.token().as_bytes();
    w.write_all(&(token.len() as u32).to_le_bytes())?;
    w.write_all(token)?;
    w.write_all(vocab_hash)?;
    for (weights, biases) in params.weights.iter().zip(&params.biases) {
        for v in weights.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in biases.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> io::Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read) -> io::Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

pub fn load_checkpoint(path: &Path) -> Result<(MLPParams, [u8; 32]), CheckpointError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }

    let input_dim = read_u32(&mut r)? as usize;
    let n_hidden = read_u32(&mut r)? as usize;
    if input_dim == 0 || n_hidden == 0 {
        return Err(CheckpointError::BadShape(
            "layer dimensions must be positive".into(),
        ));
    }
    let mut dims = Vec::with_capacity(n_hidden + 2);
    dims.push(input_dim);
    for _ in 0..n_hidden {
        let dim = read_u32(&mut r)? as usize;
        if dim == 0 {
            return Err(CheckpointError::BadShape(
                "layer dimensions must be positive".into(),
            ));
        }
        dims.push(dim);
    }
    dims.push(1);

    let token_len = read_u32(&mut r)? as usize;
    if token_len > 16 {
        return Err(CheckpointError::BadShape("activation token too long".into()));
    }
    let mut token = vec![0u8; token_len];
    r.read_exact(&mut token)?;
    let token = String::from_utf8(token)
        .map_err(|e| CheckpointError::BadActivation(format!("{:?}", e.as_bytes())))?;
    let activation: Activation = token
        .parse()
        .map_err(|_| CheckpointError::BadActivation(token.clone()))?;

    let mut vocab_hash = [0u8; 32];
    r.read_exact(&mut vocab_hash)?;

    let mut weights = Vec::with_capacity(dims.len() - 1);
    let mut biases = Vec::with_capacity(dims.len() - 1);
    for pair in dims.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let mut w = Array2::zeros((fan_out, fan_in));
        for v in w.iter_mut() {
            *v = read_f64(&mut r)?;
        }
        let mut b = Array1::zeros(fan_out);
        for v in b.iter_mut() {
            *v = read_f64(&mut r)?;
        }
        weights.push(w);
        biases.push(b);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(CheckpointError::TrailingBytes);
    }

    let params = MLPParams {
        weights,
        biases,
        activation,
    };
    if let Some(layer) = params.first_non_finite_layer() {
        return Err(CheckpointError::NonFinite { layer });
    }
    Ok((params, vocab_hash))
}

/// Write the snapshot log as tab-separated text.
pub fn write_train_log(path: &Path, log: &[TrainLogEntry]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "iteration\ttrain_loss\tval_ap")?;
    for entry in log {
        writeln!(
            w,
            "{}\t{}\t{}",
            entry.iteration, entry.train_loss, entry.val_metric
        )?;
    }
    w.flush()
}
