//! Four-class synthetic texture corpus standing in for labeled seismic
//! patches: band-limited noise (chaotic), plane waves at 30 degrees
//! (faults) and 120 degrees (salt), and smooth horizontal layering (other).
//!
//! Angles are measured counterclockwise from the column axis with rows
//! pointing down, so a 30 degree wave varies mostly along columns.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::classifier::CLASS_NAMES;
use crate::error::{Result, TexlabError};
use crate::imagecore::fft::signed_frequency;
use crate::imagecore::{spectral_transform, write_raster, FftDirection, Raster, RasterFormat};
use crate::metrics::LabelMap;

pub const CHAOTIC: usize = 0;
pub const FAULTS: usize = 1;
pub const SALT: usize = 2;
pub const OTHER: usize = 3;

pub const FAULT_ANGLE_DEG: f64 = 30.0;
pub const SALT_ANGLE_DEG: f64 = 120.0;

/// Additive white noise standard deviation relative to unit signal power.
pub const NOISE_STD: f64 = 0.35;

fn standardize(mut r: Raster) -> Raster {
    let m = r.mean();
    let var = r.data().iter().map(|v| (v - m) * (v - m)).sum::<f64>() / r.data().len() as f64;
    let s = var.sqrt().max(1e-12);
    r.data_mut().iter_mut().for_each(|v| *v = (*v - m) / s);
    r
}

fn band_limited_noise(width: usize, height: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Raster {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let white = Raster::from_fn(width, height, |_, _| normal.sample(rng));
    let mut spec = spectral_transform(&white.to_complex(), FftDirection::Forward);
    for r in 0..height {
        let v = signed_frequency(r, height) as f64 / height as f64;
        for c in 0..width {
            let u = signed_frequency(c, width) as f64 / width as f64;
            let rad = (u * u + v * v).sqrt();
            if rad < lo || rad > hi {
                spec.set(r, c, Complex64::new(0.0, 0.0));
            }
        }
    }
    spectral_transform(&spec, FftDirection::Inverse).re()
}

fn plane_wave(width: usize, height: usize, angle_deg: f64, rng: &mut ChaCha8Rng) -> Raster {
    let theta = (angle_deg + rng.random_range(-4.0..4.0)).to_radians();
    let freq = rng.random_range(0.14..0.22);
    let phase = rng.random_range(0.0..2.0 * PI);
    let (ux, uy) = (theta.cos(), theta.sin());
    Raster::from_fn(width, height, |r, c| {
        let (x, y) = (c as f64, -(r as f64));
        (2.0 * PI * freq * (ux * x + uy * y) + phase).cos()
    })
}

fn layers(width: usize, height: usize, rng: &mut ChaCha8Rng) -> Raster {
    let comps: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.random_range(0.09..0.15),
                rng.random_range(0.0..2.0 * PI),
                rng.random_range(0.5..1.0),
            )
        })
        .collect();
    let tilt = rng.random_range(-0.03..0.03);
    Raster::from_fn(width, height, |r, c| {
        let depth = r as f64 + tilt * c as f64;
        comps
            .iter()
            .map(|&(f, p, a)| a * (2.0 * PI * f * depth + p).cos())
            .sum()
    })
}

/// A `width x height` texture of the given class, zero mean and unit
/// variance before noise is added.
pub fn synthetic_texture(class: usize, width: usize, height: usize, rng: &mut ChaCha8Rng) -> Result<Raster> {
    let clean = match class {
        CHAOTIC => band_limited_noise(width, height, 0.04, 0.2, rng),
        FAULTS => plane_wave(width, height, FAULT_ANGLE_DEG, rng),
        SALT => plane_wave(width, height, SALT_ANGLE_DEG, rng),
        OTHER => layers(width, height, rng),
        _ => return Err(TexlabError::arg(format!("no synthetic texture for class {class}"))),
    };
    let normal = Normal::new(0.0, NOISE_STD).unwrap();
    let mut out = standardize(clean);
    out.data_mut().iter_mut().for_each(|v| *v += normal.sample(rng));
    Ok(out)
}

/// `per_class` square patches of every class, interleaved by class.
pub fn synthetic_corpus(per_class: usize, side: usize, seed: u64) -> Vec<(Raster, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(per_class * 4);
    for _ in 0..per_class {
        for class in 0..4 {
            let tex = synthetic_texture(class, side, side, &mut rng).expect("known class");
            out.push((tex, class));
        }
    }
    out
}

pub type Samples = Vec<(Raster, usize)>;

/// Deterministic train/test split: the first `round(frac * n)` samples of
/// every class go to training.
pub fn split_corpus(corpus: Samples, train_frac: f64) -> (Samples, Samples) {
    let mut seen = [0usize; 4];
    let mut totals = [0usize; 4];
    for (_, c) in &corpus {
        totals[*c] += 1;
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (r, c) in corpus {
        let cut = (train_frac * totals[c] as f64).round() as usize;
        if seen[c] < cut {
            train.push((r, c));
        } else {
            test.push((r, c));
        }
        seen[c] += 1;
    }
    (train, test)
}

/// Writes a corpus as `root/<class name>/NNNN.sgrd`.
pub fn write_dataset(root: &Path, samples: &[(Raster, usize)]) -> Result<()> {
    let mut counters = [0usize; 4];
    for (raster, class) in samples {
        let dir = root.join(CLASS_NAMES[*class]);
        std::fs::create_dir_all(&dir).map_err(|e| TexlabError::io(&dir, e))?;
        let path = dir.join(format!("{:04}.sgrd", counters[*class]));
        counters[*class] += 1;
        write_raster(raster, path, RasterFormat::Sgrd)?;
    }
    Ok(())
}

/// Section made of `layout` tiles (row-major class ids, `tiles_wide`
/// columns), each filled with an independent texture of its class.
pub fn tiled_section(
    layout: &[usize],
    tiles_wide: usize,
    tile_side: usize,
    seed: u64,
) -> Result<(Raster, LabelMap)> {
    if tiles_wide == 0 || layout.is_empty() || !layout.len().is_multiple_of(tiles_wide) {
        return Err(TexlabError::arg("tile layout must fill whole rows"));
    }
    let tiles_high = layout.len() / tiles_wide;
    let (w, h) = (tiles_wide * tile_side, tiles_high * tile_side);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut section = Raster::zeros(w, h);
    let mut labels = vec![0; w * h];
    for (t, &class) in layout.iter().enumerate() {
        let tex = synthetic_texture(class, tile_side, tile_side, &mut rng)?;
        let (r0, c0) = ((t / tiles_wide) * tile_side, (t % tiles_wide) * tile_side);
        for r in 0..tile_side {
            for c in 0..tile_side {
                section.set(r0 + r, c0 + c, tex.get(r, c));
                labels[(r0 + r) * w + c0 + c] = class;
            }
        }
    }
    Ok((section, LabelMap::new(w, h, labels)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textures_are_normalized_and_deterministic() {
        for class in 0..4 {
            let a = synthetic_texture(class, 40, 30, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
            let b = synthetic_texture(class, 40, 30, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
            assert_eq!(a, b);
            assert!(a.mean().abs() < 0.2);
            let power = a.energy() / 1200.0;
            assert!((power - (1.0 + NOISE_STD * NOISE_STD)).abs() < 0.3, "class {class} power {power}");
        }
        assert!(synthetic_texture(4, 8, 8, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn split_keeps_class_balance() {
        let corpus = synthetic_corpus(10, 9, 1);
        let (train, test) = split_corpus(corpus, 0.7);
        assert_eq!((train.len(), test.len()), (28, 12));
        for c in 0..4 {
            assert_eq!(train.iter().filter(|s| s.1 == c).count(), 7);
        }
    }

    #[test]
    fn tiled_section_labels() {
        let (s, l) = tiled_section(&[0, 1, 2, 3], 2, 10, 3).unwrap();
        assert_eq!(s.shape(), (20, 20));
        assert_eq!(l.labels[0], 0);
        assert_eq!(l.labels[15], 1);
        assert_eq!(l.labels[10 * 20], 2);
        assert_eq!(l.labels[399], 3);
        assert!(tiled_section(&[0, 1, 2], 2, 10, 3).is_err());
    }
}
