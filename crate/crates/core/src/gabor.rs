//! Gabor filter bank: complex plane waves under isotropic Gaussian
//! envelopes, octave-spaced in frequency and uniformly spaced in angle.
//!
//! Filter `(s, k)` has center frequency `f_s = 0.25 / 2^s` cycles/pixel,
//! orientation `theta_k = k * pi / K` (direction of the wave vector,
//! counter-clockwise from the column axis with rows pointing down, so
//! `y = -row`), envelope `sigma_s = 0.56 / f_s` and support `+-ceil(3 sigma_s)`.
//! The envelope is normalized to unit sum so every filter has unit gain at
//! its center frequency; the real part is then made zero-mean.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Result, TexlabError};
use crate::imagecore::fft::spectral_transform_in_place;
use crate::imagecore::{ComplexRaster, FftDirection, Raster};
use crate::subband::{Subband, SubbandSet};

pub const MAX_FREQUENCY: f64 = 0.25;
/// `sigma * f` giving roughly one octave of bandwidth.
pub const SIGMA_FREQUENCY_PRODUCT: f64 = 0.56;
pub const DEFAULT_SCALES: usize = 3;
pub const DEFAULT_ORIENTATIONS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct GaborFilter {
    pub scale: usize,
    pub orientation: usize,
    /// cycles/pixel
    pub frequency: f64,
    /// radians
    pub theta: f64,
    pub sigma: f64,
    /// Square kernel of odd side, centered.
    pub kernel: ComplexRaster,
}

impl GaborFilter {
    pub fn half_width(&self) -> usize {
        self.kernel.width() / 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaborBank {
    pub num_scales: usize,
    pub num_orientations: usize,
    /// Scale-major: index `s * num_orientations + k`.
    pub filters: Vec<GaborFilter>,
}

fn make_filter(scale: usize, orientation: usize, num_orientations: usize) -> GaborFilter {
    let frequency = MAX_FREQUENCY / (1u64 << scale) as f64;
    let theta = orientation as f64 * PI / num_orientations as f64;
    let sigma = SIGMA_FREQUENCY_PRODUCT / frequency;
    let half = (3.0 * sigma).ceil() as isize;
    let side = (2 * half + 1) as usize;
    let (ct, st) = (theta.cos(), theta.sin());

    let mut envelope = Vec::with_capacity(side * side);
    let mut carrier = Vec::with_capacity(side * side);
    for r in -half..=half {
        for c in -half..=half {
            let (x, y) = (c as f64, -(r as f64));
            envelope.push((-(x * x + y * y) / (2.0 * sigma * sigma)).exp());
            carrier.push(Complex64::from_polar(1.0, 2.0 * PI * frequency * (x * ct + y * st)));
        }
    }
    let norm: f64 = envelope.iter().sum();
    let mut taps: Vec<Complex64> = envelope
        .iter()
        .zip(&carrier)
        .map(|(e, w)| w * (e / norm))
        .collect();
    let mean_re = taps.iter().map(|t| t.re).sum::<f64>() / taps.len() as f64;
    for t in &mut taps {
        t.re -= mean_re;
    }
    GaborFilter {
        scale,
        orientation,
        frequency,
        theta,
        sigma,
        kernel: ComplexRaster::new(side, side, taps).expect("kernel is finite"),
    }
}

pub fn build_gabor_bank(num_scales: usize, num_orientations: usize) -> Result<GaborBank> {
    if num_scales == 0 || num_orientations == 0 {
        return Err(TexlabError::arg("Gabor bank needs at least one scale and orientation"));
    }
    if num_scales > 8 {
        return Err(TexlabError::arg(format!(
            "{num_scales} Gabor scales give kernels wider than any patch"
        )));
    }
    let filters = (0..num_scales)
        .flat_map(|s| (0..num_orientations).map(move |k| (s, k)))
        .map(|(s, k)| make_filter(s, k, num_orientations))
        .collect();
    Ok(GaborBank {
        num_scales,
        num_orientations,
        filters,
    })
}

impl GaborBank {
    pub fn max_kernel_side(&self) -> usize {
        self.filters.iter().map(|f| f.kernel.width()).max().unwrap_or(1)
    }

    /// Complex filter responses with symmetric border handling, one per
    /// filter, in bank order.
    pub fn responses(&self, raster: &Raster) -> Result<Vec<ComplexRaster>> {
        let side = self.max_kernel_side();
        if raster.width() < side || raster.height() < side {
            return Err(TexlabError::arg(format!(
                "raster {}x{} smaller than the largest Gabor kernel ({side}x{side})",
                raster.width(),
                raster.height()
            )));
        }
        let pad = side / 2;
        let padded = raster.pad_reflect(pad, pad, pad, pad);
        let (ph, pw) = padded.shape();
        let mut spectrum = padded.to_complex();
        spectral_transform_in_place(&mut spectrum, FftDirection::Forward);

        let mut out = Vec::with_capacity(self.filters.len());
        for filter in &self.filters {
            // kernel centered on the origin of the padded grid, wrapped
            let mut k = ComplexRaster::zeros(pw, ph);
            let kh = filter.half_width() as isize;
            let ks = filter.kernel.width();
            for i in 0..ks {
                for j in 0..ks {
                    let r = (i as isize - kh).rem_euclid(ph as isize) as usize;
                    let c = (j as isize - kh).rem_euclid(pw as isize) as usize;
                    k.set(r, c, filter.kernel.get(i, j));
                }
            }
            spectral_transform_in_place(&mut k, FftDirection::Forward);
            for (a, b) in k.data_mut().iter_mut().zip(spectrum.data()) {
                *a *= b;
            }
            spectral_transform_in_place(&mut k, FftDirection::Inverse);
            let mut resp = ComplexRaster::zeros(raster.width(), raster.height());
            for r in 0..raster.height() {
                for c in 0..raster.width() {
                    resp.set(r, c, k.get(r + pad, c + pad));
                }
            }
            out.push(resp);
        }
        Ok(out)
    }
}

/// Response magnitudes, one subband per filter. Subbands are ordered
/// coarse to fine (highest scale index first), by orientation within a scale.
pub fn apply_gabor_bank(raster: &Raster, bank: &GaborBank) -> Result<SubbandSet> {
    let responses = bank.responses(raster)?;
    let mut bands: Vec<Subband> = bank
        .filters
        .iter()
        .zip(responses)
        .map(|(f, resp)| {
            Subband::real(
                f.scale,
                f.orientation,
                format!("scale{}_orient{}", f.scale, f.orientation),
                resp.magnitude(),
            )
        })
        .collect();
    bands.sort_by_key(|b| (std::cmp::Reverse(b.scale), b.orientation));
    Ok(SubbandSet { bands })
}
