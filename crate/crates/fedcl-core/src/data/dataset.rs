//! Labeled sample collections and the FDS1 on-disk format.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// N samples on an H×W×C grid (flat vectors use H = W = 1) with integer
/// labels in `[0, n_classes)`. Sample values live in `[0, 1]` and are stored
/// in f32, matching the file format bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Vec<f32>>,
    pub labels: Vec<u16>,
    pub n_classes: usize,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl Dataset {
    pub fn new(
        samples: Vec<Vec<f32>>,
        labels: Vec<u16>,
        n_classes: usize,
        height: usize,
        width: usize,
        channels: usize,
    ) -> Result<Self> {
        let ds = Self {
            samples,
            labels,
            n_classes,
            height,
            width,
            channels,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 || self.channels == 0 || self.n_classes == 0 {
            return Err(Error::InvalidConfig("dataset dims must be positive".into()));
        }
        if self.samples.len() != self.labels.len() {
            return Err(Error::ShapeMismatch {
                context: "dataset samples vs labels".into(),
                expected: vec![self.samples.len()],
                got: vec![self.labels.len()],
            });
        }
        let dim = self.sample_dim();
        for (i, s) in self.samples.iter().enumerate() {
            if s.len() != dim {
                return Err(Error::ShapeMismatch {
                    context: format!("sample {i}"),
                    expected: vec![dim],
                    got: vec![s.len()],
                });
            }
            if !s.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)) {
                return Err(Error::InvalidConfig(format!(
                    "sample {i} has values outside [0, 1]"
                )));
            }
        }
        for (i, &l) in self.labels.iter().enumerate() {
            if usize::from(l) >= self.n_classes {
                return Err(Error::InvalidConfig(format!(
                    "label {l} of sample {i} exceeds n_classes {}",
                    self.n_classes
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_dim(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn sample_f64(&self, i: usize) -> Vec<f64> {
        self.samples[i].iter().map(|&v| f64::from(v)).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &l in &self.labels {
            counts[usize::from(l)] += 1;
        }
        counts
    }

    /// New dataset holding the given rows, in order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
            height: self.height,
            width: self.width,
            channels: self.channels,
        }
    }
}

const MAGIC: &[u8; 4] = b"FDS1";
const VERSION: u32 = 1;

/// Writes `FDS1 | version | N | H | W | C | n_classes` as little-endian u32,
/// then N samples of H·W·C f32 values, then N u16 labels.
pub fn save_dataset(path: impl AsRef<Path>, dataset: &Dataset) -> Result<()> {
    let path = path.as_ref();
    dataset.validate()?;
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    let emit = |w: &mut BufWriter<File>, bytes: &[u8]| {
        w.write_all(bytes)
            .map_err(|e| Error::io(path.display().to_string(), e))
    };
    emit(&mut w, MAGIC)?;
    for v in [
        VERSION,
        dataset.len() as u32,
        dataset.height as u32,
        dataset.width as u32,
        dataset.channels as u32,
        dataset.n_classes as u32,
    ] {
        emit(&mut w, &v.to_le_bytes())?;
    }
    for s in &dataset.samples {
        for v in s {
            emit(&mut w, &v.to_le_bytes())?;
        }
    }
    for l in &dataset.labels {
        emit(&mut w, &l.to_le_bytes())?;
    }
    w.flush()
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(display.clone(), e))?;
    let mut r = BufReader::new(file);
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)
        .map_err(|e| Error::io(display.clone(), e))?;

    let malformed = |reason: &str| Error::MalformedFile {
        path: display.clone(),
        reason: reason.into(),
    };
    if buf.len() < 4 + 6 * 4 {
        return Err(malformed("file shorter than header"));
    }
    if &buf[0..4] != MAGIC {
        return Err(malformed("bad magic, expected FDS1"));
    }
    let u32_at = |off: usize| u32::from_le_bytes(buf[off..off + 4].try_into().expect("bounded"));
    let version = u32_at(4);
    if version != VERSION {
        return Err(malformed(&format!("unsupported version {version}")));
    }
    let n = u32_at(8) as usize;
    let h = u32_at(12) as usize;
    let w = u32_at(16) as usize;
    let c = u32_at(20) as usize;
    let n_classes = u32_at(24) as usize;
    let dim = h
        .checked_mul(w)
        .and_then(|x| x.checked_mul(c))
        .ok_or_else(|| malformed("dimension overflow"))?;
    let expect = 28 + n * dim * 4 + n * 2;
    if buf.len() != expect {
        return Err(malformed(&format!(
            "truncated or oversized payload: expected {expect} bytes, got {}",
            buf.len()
        )));
    }
    let mut off = 28;
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let mut s = Vec::with_capacity(dim);
        for _ in 0..dim {
            s.push(f32::from_le_bytes(
                buf[off..off + 4].try_into().expect("bounded"),
            ));
            off += 4;
        }
        samples.push(s);
    }
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        labels.push(u16::from_le_bytes(
            buf[off..off + 2].try_into().expect("bounded"),
        ));
        off += 2;
    }
    let ds = Dataset {
        samples,
        labels,
        n_classes,
        height: h,
        width: w,
        channels: c,
    };
    ds.validate().map_err(|e| Error::MalformedFile {
        path: display,
        reason: e.to_string(),
    })?;
    Ok(ds)
}
