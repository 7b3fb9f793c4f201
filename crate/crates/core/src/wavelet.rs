//! Orthonormal 2-D Haar wavelet transform.
//!
//! Analysis filters are `h_L = [1, 1]/sqrt2` and `h_H = [-1, 1]/sqrt2`,
//! applied along rows first (horizontal), then along columns (vertical),
//! each followed by decimation by two. Subband names give the horizontal
//! filter first: `HL` is high-pass horizontally and low-pass vertically.
//!
//! Odd lengths are extended by repeating the last row/column before a
//! level is analysed; the original shape is stored so synthesis can crop.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Result, TexlabError};
use crate::imagecore::Raster;
use crate::subband::{Subband, SubbandSet};

/// Detail orientations in their canonical order.
pub const ORIENTATIONS: [&str; 3] = ["HL", "LH", "HH"];

#[derive(Debug, Clone, PartialEq)]
pub struct DwtLevel {
    pub hl: Raster,
    pub lh: Raster,
    pub hh: Raster,
    /// Shape `(rows, cols)` of the approximation this level was computed from.
    pub input_shape: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DwtSubbands {
    /// `levels[0]` is the finest level.
    pub levels: Vec<DwtLevel>,
    /// Final low-pass approximation.
    pub ll: Raster,
}

impl DwtSubbands {
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn subband_count(&self) -> usize {
        3 * self.levels.len() + 1
    }

    /// Coarse to fine, `HL, LH, HH` within a level, approximation last.
    pub fn to_subband_set(&self) -> SubbandSet {
        let mut bands = Vec::with_capacity(self.subband_count());
        for (i, level) in self.levels.iter().enumerate().rev() {
            let scale = i + 1;
            for (o, grid) in [&level.hl, &level.lh, &level.hh].into_iter().enumerate() {
                bands.push(Subband::real(
                    scale,
                    o,
                    format!("level{scale}_{}", ORIENTATIONS[o]),
                    grid.clone(),
                ));
            }
        }
        bands.push(Subband::real(self.levels.len(), 0, "LL", self.ll.clone()));
        SubbandSet { bands }
    }
}

/// One analysis level. Returns `(LL, LH, HL, HH)`.
pub fn dwt2_single(raster: &Raster) -> (Raster, Raster, Raster, Raster) {
    let (h, w) = raster.shape();
    let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
    let at = |r: usize, c: usize| raster.get(r.min(h - 1), c.min(w - 1));
    let mut ll = Raster::zeros(ow, oh);
    let mut lh = Raster::zeros(ow, oh);
    let mut hl = Raster::zeros(ow, oh);
    let mut hh = Raster::zeros(ow, oh);
    for r in 0..oh {
        for c in 0..ow {
            let (a, b) = (at(2 * r, 2 * c), at(2 * r, 2 * c + 1));
            let (d, e) = (at(2 * r + 1, 2 * c), at(2 * r + 1, 2 * c + 1));
            // horizontal pass on the two rows
            let (l0, h0) = (FRAC_1_SQRT_2 * (a + b), FRAC_1_SQRT_2 * (b - a));
            let (l1, h1) = (FRAC_1_SQRT_2 * (d + e), FRAC_1_SQRT_2 * (e - d));
            // vertical pass
            ll.set(r, c, FRAC_1_SQRT_2 * (l0 + l1));
            lh.set(r, c, FRAC_1_SQRT_2 * (l1 - l0));
            hl.set(r, c, FRAC_1_SQRT_2 * (h0 + h1));
            hh.set(r, c, FRAC_1_SQRT_2 * (h1 - h0));
        }
    }
    (ll, lh, hl, hh)
}

/// Inverse of [`dwt2_single`], cropped to `shape`.
pub fn idwt2_single(
    ll: &Raster,
    lh: &Raster,
    hl: &Raster,
    hh: &Raster,
    shape: (usize, usize),
) -> Result<Raster> {
    let (oh, ow) = ll.shape();
    for band in [lh, hl, hh] {
        if band.shape() != (oh, ow) {
            return Err(TexlabError::arg(format!(
                "detail band shape {:?} differs from approximation {:?}",
                band.shape(),
                (oh, ow)
            )));
        }
    }
    let (h, w) = shape;
    if h == 0 || w == 0 || h.div_ceil(2) != oh || w.div_ceil(2) != ow {
        return Err(TexlabError::arg(format!(
            "recorded shape {shape:?} inconsistent with subband shape {:?}",
            (oh, ow)
        )));
    }
    let mut out = Raster::zeros(2 * ow, 2 * oh);
    for r in 0..oh {
        for c in 0..ow {
            let l0 = FRAC_1_SQRT_2 * (ll.get(r, c) - lh.get(r, c));
            let l1 = FRAC_1_SQRT_2 * (ll.get(r, c) + lh.get(r, c));
            let h0 = FRAC_1_SQRT_2 * (hl.get(r, c) - hh.get(r, c));
            let h1 = FRAC_1_SQRT_2 * (hl.get(r, c) + hh.get(r, c));
            out.set(2 * r, 2 * c, FRAC_1_SQRT_2 * (l0 - h0));
            out.set(2 * r, 2 * c + 1, FRAC_1_SQRT_2 * (l0 + h0));
            out.set(2 * r + 1, 2 * c, FRAC_1_SQRT_2 * (l1 - h1));
            out.set(2 * r + 1, 2 * c + 1, FRAC_1_SQRT_2 * (l1 + h1));
        }
    }
    Ok(if (h, w) == out.shape() {
        out
    } else {
        out.crop(0, 0, h, w)
    })
}

/// Largest level count accepted for a raster: `log2(min dim) + 1`.
pub fn max_levels(width: usize, height: usize) -> usize {
    let min_dim = width.min(height) as f64;
    (min_dim.log2() + 1.0).floor() as usize
}

pub fn dwt2_multi(raster: &Raster, levels: usize) -> Result<DwtSubbands> {
    if levels == 0 {
        return Err(TexlabError::arg("DWT needs at least one level"));
    }
    let limit = max_levels(raster.width(), raster.height());
    if levels > limit {
        return Err(TexlabError::arg(format!(
            "{levels} DWT levels exceed the limit of {limit} for a {}x{} raster",
            raster.width(),
            raster.height()
        )));
    }
    let mut out = Vec::with_capacity(levels);
    let mut approx = raster.clone();
    for _ in 0..levels {
        let input_shape = approx.shape();
        let (ll, lh, hl, hh) = dwt2_single(&approx);
        out.push(DwtLevel {
            hl,
            lh,
            hh,
            input_shape,
        });
        approx = ll;
    }
    Ok(DwtSubbands {
        levels: out,
        ll: approx,
    })
}

pub fn idwt2_multi(subbands: &DwtSubbands) -> Result<Raster> {
    if subbands.levels.is_empty() {
        return Err(TexlabError::arg("no DWT levels to invert"));
    }
    let mut approx = subbands.ll.clone();
    for level in subbands.levels.iter().rev() {
        approx = idwt2_single(&approx, &level.lh, &level.hl, &level.hh, level.input_shape)?;
    }
    Ok(approx)
}
