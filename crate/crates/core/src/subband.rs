use crate::imagecore::{ComplexRaster, Raster};

#[derive(Debug, Clone, PartialEq)]
pub enum SubbandData {
    Real(Raster),
    Complex(ComplexRaster),
}

/// One scale/orientation component of a decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Subband {
    pub scale: usize,
    pub orientation: usize,
    /// Short name used when dumping to disk, e.g. `level1_HL`.
    pub name: String,
    pub data: SubbandData,
}

impl Subband {
    pub fn real(scale: usize, orientation: usize, name: impl Into<String>, grid: Raster) -> Self {
        Subband {
            scale,
            orientation,
            name: name.into(),
            data: SubbandData::Real(grid),
        }
    }

    pub fn complex(
        scale: usize,
        orientation: usize,
        name: impl Into<String>,
        grid: ComplexRaster,
    ) -> Self {
        Subband {
            scale,
            orientation,
            name: name.into(),
            data: SubbandData::Complex(grid),
        }
    }

    /// `(rows, cols)`
    pub fn shape(&self) -> (usize, usize) {
        match &self.data {
            SubbandData::Real(r) => r.shape(),
            SubbandData::Complex(c) => c.shape(),
        }
    }

    /// The grid that feature extraction consumes: real bands as-is,
    /// complex bands by modulus.
    pub fn feature_grid(&self) -> Raster {
        match &self.data {
            SubbandData::Real(r) => r.clone(),
            SubbandData::Complex(c) => c.magnitude(),
        }
    }
}

/// Ordered collection of subbands. Order is part of the feature layout.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SubbandSet {
    pub bands: Vec<Subband>,
}

impl SubbandSet {
    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Subband> {
        self.bands.iter()
    }
}

impl FromIterator<Subband> for SubbandSet {
    fn from_iter<I: IntoIterator<Item = Subband>>(iter: I) -> Self {
        SubbandSet {
            bands: iter.into_iter().collect(),
        }
    }
}
