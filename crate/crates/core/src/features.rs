//! Effective-singular-value descriptors.
//!
//! Every subband grid contributes its full list of singular values, with
//! the entries past `ceil(effective_rank)` zeroed. The descriptor length
//! therefore depends only on the subband shape, never on its content.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::curvelet;
use crate::error::{Result, TexlabError};
use crate::gabor;
use crate::imagecore::{Patch, Raster};
use crate::pyramid;
use crate::subband::{Subband, SubbandSet};
use crate::wavelet;

/// Slack subtracted before taking the ceiling of the effective rank, so
/// that round-off on an integer rank does not keep an extra value.
pub const RANK_CEIL_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    Amplitude,
    Pyramid,
    Dwt,
    Gabor,
    Curvelet,
}

impl Attribute {
    pub const ALL: [Attribute; 5] = [
        Attribute::Amplitude,
        Attribute::Pyramid,
        Attribute::Dwt,
        Attribute::Gabor,
        Attribute::Curvelet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Attribute::Amplitude => "amplitude",
            Attribute::Pyramid => "pyramid",
            Attribute::Dwt => "dwt",
            Attribute::Gabor => "gabor",
            Attribute::Curvelet => "curvelet",
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Attribute {
    type Err = TexlabError;

    fn from_str(s: &str) -> Result<Self> {
        Attribute::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| TexlabError::arg(format!("unknown attribute {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeConfig {
    pub attribute: Attribute,
    /// Pyramid levels, DWT levels, Gabor scales or curvelet scales
    /// (low-pass band included). Ignored for amplitude.
    pub scales: usize,
    /// Gabor orientations.
    pub orientations: usize,
}

impl AttributeConfig {
    pub fn new(attribute: Attribute, scales: usize) -> Self {
        AttributeConfig {
            attribute,
            scales,
            orientations: gabor::DEFAULT_ORIENTATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub attribute: Attribute,
    pub values: Vec<f64>,
    /// `(offset, length)` of each subband's descriptor.
    pub layout: Vec<(usize, usize)>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Singular values in nonincreasing order.
pub fn singular_values(matrix: &Raster) -> Result<Vec<f64>> {
    let (rows, cols) = matrix.shape();
    if rows == 0 || cols == 0 {
        return Err(TexlabError::arg("singular values of an empty matrix"));
    }
    let m = DMatrix::from_row_slice(rows, cols, matrix.data());
    let mut sv: Vec<f64> = m.singular_values().iter().map(|v| v.max(0.0)).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// `exp` of the Shannon entropy of the l1-normalized values. All-zero
/// input has rank 1 by convention.
pub fn effective_rank(sv: &[f64]) -> f64 {
    let total: f64 = sv.iter().sum();
    if total <= 0.0 {
        return 1.0;
    }
    let entropy: f64 = sv
        .iter()
        .map(|&s| s / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    entropy.exp()
}

/// Number of leading values kept for a given effective rank.
pub fn kept_count(rank: f64, len: usize) -> usize {
    ((rank - RANK_CEIL_SLACK).ceil().max(1.0) as usize).min(len)
}

/// Singular values of `grid` with entries past `ceil(effective_rank)` set
/// to zero. Values below the numerical-rank floor
/// `sigma_max * max(m, n) * eps` are treated as exact zeros first.
pub fn subband_descriptor(grid: &Raster) -> Result<Vec<f64>> {
    let (rows, cols) = grid.shape();
    let mut sv = singular_values(grid)?;
    let floor = sv[0] * rows.max(cols) as f64 * f64::EPSILON;
    for s in sv.iter_mut() {
        if *s <= floor {
            *s = 0.0;
        }
    }
    let keep = kept_count(effective_rank(&sv), sv.len());
    for s in sv.iter_mut().skip(keep) {
        *s = 0.0;
    }
    Ok(sv)
}

/// Decomposes a patch with the configured attribute. Amplitude yields the
/// patch itself as its only band.
pub fn decompose(raster: &Raster, config: &AttributeConfig) -> Result<SubbandSet> {
    match config.attribute {
        Attribute::Amplitude => Ok(SubbandSet {
            bands: vec![Subband::real(0, 0, "amplitude", raster.clone())],
        }),
        Attribute::Pyramid => Ok(pyramid::gaussian_pyramid(raster, config.scales)?.to_subband_set()),
        Attribute::Dwt => Ok(wavelet::dwt2_multi(raster, config.scales)?.to_subband_set()),
        Attribute::Gabor => {
            let bank = gabor::build_gabor_bank(config.scales, config.orientations)?;
            gabor::apply_gabor_bank(raster, &bank)
        }
        Attribute::Curvelet => Ok(curvelet::fdct2(raster, config.scales)?.to_subband_set()),
    }
}

pub fn subband_features(set: &SubbandSet, attribute: Attribute) -> Result<FeatureVector> {
    let mut values = Vec::new();
    let mut layout = Vec::with_capacity(set.len());
    for band in set.iter() {
        let d = subband_descriptor(&band.feature_grid())?;
        layout.push((values.len(), d.len()));
        values.extend(d);
    }
    Ok(FeatureVector {
        attribute,
        values,
        layout,
    })
}

/// Feature vector of an already tapered patch.
pub fn attribute_features(patch: &Patch, config: &AttributeConfig) -> Result<FeatureVector> {
    let set = decompose(&patch.raster, config)?;
    subband_features(&set, config.attribute)
}

/// Feature length for a square patch of the given side, computed from the
/// subband shapes alone.
pub fn feature_length(config: &AttributeConfig, side: usize) -> Result<usize> {
    let set = decompose(&Raster::zeros(side, side), config)?;
    Ok(set
        .iter()
        .map(|b| {
            let (r, c) = b.shape();
            r.min(c)
        })
        .sum())
}
