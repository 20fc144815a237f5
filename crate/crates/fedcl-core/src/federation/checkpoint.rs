//! FCL1 checkpoint files: encoder + projection weights, flat binary.
//!
//! Layout: magic `FCL1`, version u32, layer count u32, then (out, in) u32
//! pairs per layer, then per layer the row-major weights followed by the
//! bias, all little-endian f64. Layers are ordered encoder first, then the
//! two projection layers; loading splits them back apart using the 2-layer
//! projection contract. Classifier heads are a fine-tuning artifact and are
//! not checkpointed.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numeric::{Layer, ModelParams, Tensor};

const MAGIC: &[u8; 4] = b"FCL1";
const VERSION: u32 = 1;

pub fn save_checkpoint(path: impl AsRef<Path>, params: &ModelParams) -> Result<()> {
    let path = path.as_ref();
    params.validate()?;
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path.display().to_string(), e);

    let layers: Vec<&Layer> = params.encoder.iter().chain(params.projection.iter()).collect();
    w.write_all(MAGIC).map_err(io_err)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io_err)?;
    w.write_all(&(layers.len() as u32).to_le_bytes())
        .map_err(io_err)?;
    for l in &layers {
        w.write_all(&(l.out_dim() as u32).to_le_bytes())
            .map_err(io_err)?;
        w.write_all(&(l.in_dim() as u32).to_le_bytes())
            .map_err(io_err)?;
    }
    for l in &layers {
        for &v in l.weight.values().iter().chain(l.bias.values()) {
            w.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(display.clone(), e))?;
    let mut buf = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut buf)
        .map_err(|e| Error::io(display.clone(), e))?;
    let malformed = |reason: String| Error::MalformedFile {
        path: display.clone(),
        reason,
    };

    if buf.len() < 12 {
        return Err(malformed("file shorter than header".into()));
    }
    if &buf[0..4] != MAGIC {
        return Err(malformed("bad magic, expected FCL1".into()));
    }
    let u32_at = |off: usize| u32::from_le_bytes(buf[off..off + 4].try_into().expect("bounded"));
    let version = u32_at(4);
    if version != VERSION {
        return Err(malformed(format!("unsupported version {version}")));
    }
    let n_layers = u32_at(8) as usize;
    if n_layers < 3 {
        return Err(malformed(format!(
            "need at least 1 encoder + 2 projection layers, got {n_layers}"
        )));
    }
    let dims_end = 12 + n_layers * 8;
    if buf.len() < dims_end {
        return Err(malformed("truncated layer dimension table".into()));
    }
    let mut dims = Vec::with_capacity(n_layers);
    for i in 0..n_layers {
        let out = u32_at(12 + i * 8) as usize;
        let inp = u32_at(16 + i * 8) as usize;
        if out == 0 || inp == 0 {
            return Err(malformed(format!("layer {i} has zero dimension")));
        }
        dims.push((out, inp));
    }
    let payload: usize = dims.iter().map(|(o, i)| (o * i + o) * 8).sum();
    if buf.len() != dims_end + payload {
        return Err(malformed(format!(
            "truncated or oversized payload: expected {} bytes, got {}",
            dims_end + payload,
            buf.len()
        )));
    }

    let mut off = dims_end;
    let mut read_f64 = |count: usize| -> Vec<f64> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(f64::from_le_bytes(
                buf[off..off + 8].try_into().expect("bounded"),
            ));
            off += 8;
        }
        out
    };
    let mut layers = Vec::with_capacity(n_layers);
    for &(out, inp) in &dims {
        let weight = Tensor::new(vec![out, inp], read_f64(out * inp)).map_err(|e| {
            Error::MalformedFile {
                path: display.clone(),
                reason: e.to_string(),
            }
        })?;
        let bias =
            Tensor::new(vec![out], read_f64(out)).map_err(|e| Error::MalformedFile {
                path: display.clone(),
                reason: e.to_string(),
            })?;
        layers.push(Layer { weight, bias });
    }
    let projection = layers.split_off(n_layers - 2);
    let params = ModelParams {
        encoder: layers,
        projection,
        classifier: None,
    };
    params.validate().map_err(|e| Error::MalformedFile {
        path: display,
        reason: e.to_string(),
    })?;
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::ArchitectureConfig;
    use crate::rng;

    fn model() -> ModelParams {
        ModelParams::init(
            12,
            &ArchitectureConfig {
                encoder_widths: vec![7, 5],
                projection_hidden: 6,
            },
            3,
            None,
            &mut rng::stream(3, &[rng::tag::INIT]),
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.fcl");
        let m = model();
        save_checkpoint(&path, &m).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded.encoder, m.encoder);
        assert_eq!(loaded.projection, m.projection);
        assert!(loaded.classifier.is_none());
    }

    #[test]
    fn header_starts_with_magic_and_version() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.fcl");
        save_checkpoint(&path, &model()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], b"FCL1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 4);
    }

    #[test]
    fn corrupt_and_truncated_files_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.fcl");
        save_checkpoint(&path, &model()).unwrap();

        let mut bytes = std::fs::read(&path).unwrap();
        bytes[1] = b'X';
        let bad = dir.path().join("bad.fcl");
        std::fs::write(&bad, &bytes).unwrap();
        assert!(matches!(
            load_checkpoint(&bad),
            Err(Error::MalformedFile { .. })
        ));

        let bytes = std::fs::read(&path).unwrap();
        let trunc = dir.path().join("trunc.fcl");
        std::fs::write(&trunc, &bytes[..bytes.len() - 5]).unwrap();
        assert!(matches!(
            load_checkpoint(&trunc),
            Err(Error::MalformedFile { .. })
        ));
    }
}
