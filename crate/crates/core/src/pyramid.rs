//! Gaussian pyramid: blur with the 5-tap binomial kernel, keep every other
//! row and column, repeat.

use crate::error::{Result, TexlabError};
use crate::imagecore::filter::convolve_separable;
use crate::imagecore::{BorderMode, Raster};
use crate::subband::{Subband, SubbandSet};

pub const BINOMIAL_5: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

#[derive(Debug, Clone, PartialEq)]
pub struct Pyramid {
    /// `levels[0]` is the input at full resolution.
    pub levels: Vec<Raster>,
}

impl Pyramid {
    /// Levels ordered coarse to fine.
    pub fn to_subband_set(&self) -> SubbandSet {
        self.levels
            .iter()
            .enumerate()
            .rev()
            .map(|(k, l)| Subband::real(k, 0, format!("level{k}"), l.clone()))
            .collect()
    }
}

/// Keeps even-indexed rows and columns, giving `ceil(n/2)` samples per axis.
pub fn decimate2(raster: &Raster) -> Raster {
    let w = raster.width().div_ceil(2);
    let h = raster.height().div_ceil(2);
    Raster::from_fn(w, h, |r, c| raster.get(2 * r, 2 * c))
}

pub fn gaussian_pyramid(raster: &Raster, num_scales: usize) -> Result<Pyramid> {
    if num_scales == 0 {
        return Err(TexlabError::arg("pyramid needs at least one scale"));
    }
    let min_dim = raster.width().min(raster.height());
    if num_scales > 1 && (num_scales > usize::BITS as usize || min_dim < 1 << (num_scales - 1)) {
        return Err(TexlabError::arg(format!(
            "{num_scales} pyramid scales need a minimum dimension of {}, got {min_dim}",
            1u128 << (num_scales - 1).min(127)
        )));
    }
    let mut levels = Vec::with_capacity(num_scales);
    levels.push(raster.clone());
    for _ in 1..num_scales {
        let prev = levels.last().unwrap();
        let blurred = convolve_separable(prev, &BINOMIAL_5, BorderMode::Symmetric)?;
        levels.push(decimate2(&blurred));
    }
    Ok(Pyramid { levels })
}
