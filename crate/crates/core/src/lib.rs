//! Multiresolution texture attributes for 2-D seismic sections, plus the
//! superpixel labeling workflow built on them.
//!
//! Four decompositions are provided ([`pyramid`], [`wavelet`], [`gabor`],
//! [`curvelet`]). Each produces a [`SubbandSet`] that [`features`] turns into
//! a fixed-length vector of effective singular values. [`segmentation`]
//! oversegments a section with SLIC, [`classifier`] holds the one-vs-all
//! linear SVMs and [`metrics`] scores label maps. [`pipeline`] wires it all
//! together behind the `texlab` command line tool.

pub mod classifier;
pub mod curvelet;
pub mod error;
pub mod features;
pub mod gabor;
pub mod imagecore;
pub mod metrics;
pub mod pipeline;
pub mod pyramid;
pub mod segmentation;
pub mod subband;
pub mod wavelet;

pub use error::{Result, TexlabError};
pub use imagecore::{ComplexRaster, Patch, Raster};
pub use subband::{Subband, SubbandSet};
