//! Random augmentation pairs. Two independent transforms drawn from the
//! same family are applied to one sample to produce the two views of a
//! positive pair.
//!
//! Grid samples (h, w ≥ 2) get crop/flip/rotate/brightness/contrast/noise;
//! flat samples (h == w == 1) get the scaling + masking + noise variant.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentationSpec {
    /// Random-crop scale range in (0, 1]; (1, 1) disables cropping.
    pub crop_scale: (f64, f64),
    pub flip_prob: f64,
    /// Subset of {0, 90, 180, 270} degrees; empty or {0} disables rotation.
    pub rotations: Vec<u16>,
    /// Additive brightness jitter range; (0, 0) disables.
    pub brightness: (f64, f64),
    /// Multiplicative contrast jitter range around the sample mean;
    /// (1, 1) disables.
    pub contrast: (f64, f64),
    pub gaussian_noise_sigma: f64,
    /// Flat-vector variant: fraction of coordinates zeroed per view.
    pub mask_prob: f64,
    /// Flat-vector variant: global multiplicative scale range.
    pub scale: (f64, f64),
}

impl Default for AugmentationSpec {
    fn default() -> Self {
        Self {
            crop_scale: (0.7, 1.0),
            flip_prob: 0.5,
            rotations: vec![0],
            brightness: (-0.2, 0.2),
            contrast: (0.8, 1.2),
            gaussian_noise_sigma: 0.05,
            mask_prob: 0.1,
            scale: (0.9, 1.1),
        }
    }
}

impl AugmentationSpec {
    /// All operations disabled; augment_pair returns exact copies.
    pub fn identity() -> Self {
        Self {
            crop_scale: (1.0, 1.0),
            flip_prob: 0.0,
            rotations: vec![0],
            brightness: (0.0, 0.0),
            contrast: (1.0, 1.0),
            gaussian_noise_sigma: 0.0,
            mask_prob: 0.0,
            scale: (1.0, 1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let range_ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !(0.0..=1.0).contains(&self.flip_prob) || !(0.0..=1.0).contains(&self.mask_prob) {
            return Err(Error::InvalidConfig(
                "augmentation probabilities must lie in [0, 1]".into(),
            ));
        }
        if !range_ok(self.crop_scale) || self.crop_scale.0 <= 0.0 || self.crop_scale.1 > 1.0 {
            return Err(Error::InvalidConfig(format!(
                "crop scale range must satisfy 0 < lo ≤ hi ≤ 1, got {:?}",
                self.crop_scale
            )));
        }
        if !range_ok(self.brightness) || !range_ok(self.contrast) || !range_ok(self.scale) {
            return Err(Error::InvalidConfig(
                "augmentation jitter ranges must be finite with lo ≤ hi".into(),
            ));
        }
        if self.gaussian_noise_sigma < 0.0 {
            return Err(Error::InvalidConfig("noise sigma must be ≥ 0".into()));
        }
        if self
            .rotations
            .iter()
            .any(|r| !matches!(r, 0 | 90 | 180 | 270))
        {
            return Err(Error::InvalidConfig(format!(
                "rotations must come from {{0, 90, 180, 270}}, got {:?}",
                self.rotations
            )));
        }
        Ok(())
    }
}

/// Applies two independently drawn transforms to the same sample and
/// returns the two views as fresh buffers.
pub fn augment_pair(
    values: &[f64],
    h: usize,
    w: usize,
    c: usize,
    spec: &AugmentationSpec,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.validate()?;
    if values.len() != h * w * c {
        return Err(Error::ShapeMismatch {
            context: "augment_pair sample".into(),
            expected: vec![h, w, c],
            got: vec![values.len()],
        });
    }
    let view_q = transform(values, h, w, c, spec, rng)?;
    let view_k = transform(values, h, w, c, spec, rng)?;
    Ok((view_q, view_k))
}

fn transform(
    values: &[f64],
    h: usize,
    w: usize,
    c: usize,
    spec: &AugmentationSpec,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    if h == 1 && w == 1 {
        return Ok(transform_flat(values, spec, rng));
    }
    let mut out = values.to_vec();
    let mut clamp_needed = false;

    if spec.crop_scale != (1.0, 1.0) {
        let s = uniform(rng, spec.crop_scale);
        let ch = ((s * h as f64).round() as usize).clamp(1, h);
        let cw = ((s * w as f64).round() as usize).clamp(1, w);
        let oy = rng.random_range(0..=h - ch);
        let ox = rng.random_range(0..=w - cw);
        // Nearest-neighbor resize of the crop window back to h × w.
        let src = out.clone();
        for y in 0..h {
            let sy = oy + y * ch / h;
            for x in 0..w {
                let sx = ox + x * cw / w;
                for k in 0..c {
                    out[(y * w + x) * c + k] = src[(sy * w + sx) * c + k];
                }
            }
        }
    }

    if spec.flip_prob > 0.0 && rng.random::<f64>() < spec.flip_prob {
        for y in 0..h {
            for x in 0..w / 2 {
                for k in 0..c {
                    out.swap((y * w + x) * c + k, (y * w + (w - 1 - x)) * c + k);
                }
            }
        }
    }

    let rotating: Vec<u16> = spec.rotations.iter().cloned().filter(|&r| r != 0).collect();
    if !rotating.is_empty() || spec.rotations.len() > 1 {
        let deg = spec.rotations[rng.random_range(0..spec.rotations.len())];
        if deg != 0 {
            if (deg == 90 || deg == 270) && h != w {
                return Err(Error::InvalidConfig(
                    "90/270 degree rotations require square grids".into(),
                ));
            }
            let src = out.clone();
            for y in 0..h {
                for x in 0..w {
                    let (sy, sx) = match deg {
                        90 => (w - 1 - x, y),
                        180 => (h - 1 - y, w - 1 - x),
                        270 => (x, h - 1 - y),
                        _ => unreachable!(),
                    };
                    for k in 0..c {
                        out[(y * w + x) * c + k] = src[(sy * w + sx) * c + k];
                    }
                }
            }
        }
    }

    if spec.brightness != (0.0, 0.0) {
        let delta = uniform(rng, spec.brightness);
        for v in &mut out {
            *v += delta;
        }
        clamp_needed = true;
    }

    if spec.contrast != (1.0, 1.0) {
        let factor = uniform(rng, spec.contrast);
        let mean = out.iter().sum::<f64>() / out.len() as f64;
        for v in &mut out {
            *v = mean + factor * (*v - mean);
        }
        clamp_needed = true;
    }

    if spec.gaussian_noise_sigma > 0.0 {
        let normal = Normal::new(0.0, spec.gaussian_noise_sigma).expect("validated sigma");
        for v in &mut out {
            *v += normal.sample(rng);
        }
        clamp_needed = true;
    }

    if clamp_needed {
        for v in &mut out {
            *v = v.clamp(0.0, 1.0);
        }
    }
    Ok(out)
}

fn transform_flat(values: &[f64], spec: &AugmentationSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut out = values.to_vec();
    let mut clamp_needed = false;
    if spec.scale != (1.0, 1.0) {
        let s = uniform(rng, spec.scale);
        for v in &mut out {
            *v *= s;
        }
        clamp_needed = true;
    }
    if spec.mask_prob > 0.0 {
        for v in &mut out {
            if rng.random::<f64>() < spec.mask_prob {
                *v = 0.0;
            }
        }
    }
    if spec.gaussian_noise_sigma > 0.0 {
        let normal = Normal::new(0.0, spec.gaussian_noise_sigma).expect("validated sigma");
        for v in &mut out {
            *v += normal.sample(rng);
        }
        clamp_needed = true;
    }
    if clamp_needed {
        for v in &mut out {
            *v = v.clamp(0.0, 1.0);
        }
    }
    out
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        lo + (hi - lo) * rng.random::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn sample_grid() -> Vec<f64> {
        (0..16).map(|i| i as f64 / 16.0).collect() // 4×4×1
    }

    #[test]
    fn identity_spec_returns_exact_copies() {
        let x = sample_grid();
        let mut r = rng::stream(1, &[1]);
        let (q, k) = augment_pair(&x, 4, 4, 1, &AugmentationSpec::identity(), &mut r).unwrap();
        assert_eq!(q, x);
        assert_eq!(k, x);
    }

    #[test]
    fn forced_flip_mirrors_both_views() {
        let x = sample_grid();
        let mut spec = AugmentationSpec::identity();
        spec.flip_prob = 1.0;
        let mut r = rng::stream(1, &[2]);
        let (q, k) = augment_pair(&x, 4, 4, 1, &spec, &mut r).unwrap();
        let mut mirrored = x.clone();
        for y in 0..4 {
            for xx in 0..4 {
                mirrored[y * 4 + xx] = x[y * 4 + (3 - xx)];
            }
        }
        assert_eq!(q, mirrored);
        assert_eq!(k, mirrored);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let x = sample_grid();
        let spec = AugmentationSpec::default();
        let a = augment_pair(&x, 4, 4, 1, &spec, &mut rng::stream(7, &[3])).unwrap();
        let b = augment_pair(&x, 4, 4, 1, &spec, &mut rng::stream(7, &[3])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rotation_180_twice_is_identity() {
        let x = sample_grid();
        let mut spec = AugmentationSpec::identity();
        spec.rotations = vec![180];
        let mut r = rng::stream(1, &[5]);
        let (q, _) = augment_pair(&x, 4, 4, 1, &spec, &mut r).unwrap();
        let mut rr = rng::stream(1, &[6]);
        let (qq, _) = augment_pair(&q, 4, 4, 1, &spec, &mut rr).unwrap();
        assert_eq!(qq, x);
    }

    #[test]
    fn views_stay_in_unit_interval() {
        let x = sample_grid();
        let spec = AugmentationSpec::default();
        let mut r = rng::stream(11, &[4]);
        for _ in 0..20 {
            let (q, k) = augment_pair(&x, 4, 4, 1, &spec, &mut r).unwrap();
            assert!(q.iter().chain(&k).all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn flat_variant_masks_and_scales() {
        let x: Vec<f64> = (0..8).map(|i| 0.5 + i as f64 / 100.0).collect();
        let mut spec = AugmentationSpec::identity();
        spec.mask_prob = 0.5;
        spec.scale = (0.5, 0.5);
        let mut r = rng::stream(3, &[9]);
        let (q, _) = augment_pair(&x, 1, 1, 8, &spec, &mut r).unwrap();
        assert!(q.iter().any(|&v| v == 0.0), "some coordinate masked");
        assert!(q
            .iter()
            .zip(&x)
            .all(|(&a, &b)| a == 0.0 || (a - b * 0.5).abs() < 1e-12));
    }

    #[test]
    fn invalid_spec_is_rejected() {
        let mut spec = AugmentationSpec::default();
        spec.flip_prob = 1.5;
        assert!(spec.validate().is_err());
        let mut spec = AugmentationSpec::default();
        spec.rotations = vec![45];
        assert!(spec.validate().is_err());
        let mut spec = AugmentationSpec::default();
        spec.crop_scale = (0.0, 1.0);
        assert!(spec.validate().is_err());
    }
}
