//! Rasters, file formats and the low-level filters shared by all
//! attribute modules.

pub mod fft;
pub mod filter;
pub mod io;
pub mod patch;
mod raster;

pub use fft::{spectral_transform, FftDirection};
pub use filter::{convolve2d, gradient2d, BorderMode};
pub use io::{label_overlay, read_raster, read_raster_auto, write_ppm, write_raster, RasterFormat};
pub use patch::{extract_weighted_patch, Patch};
pub use raster::{reflect_index, ComplexRaster, Raster};
