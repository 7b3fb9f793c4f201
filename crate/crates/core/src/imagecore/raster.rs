use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Result, TexlabError};

/// Real-valued image grid stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Raster {
    /// Builds a raster from row-major data. Every value must be finite.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(TexlabError::arg(format!(
                "raster dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(TexlabError::arg(format!(
                "raster data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(TexlabError::arg(format!("non-finite value at index {pos}")));
        }
        Ok(Raster {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        Raster {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Evaluates `f(row, col)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Raster {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// `(height, width)`, i.e. (rows, cols).
    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    /// Value at a possibly out-of-range position, folded back with
    /// symmetric (half-sample) reflection: `-1 -> 0`, `n -> n-1`.
    #[inline]
    pub fn get_reflect(&self, row: isize, col: isize) -> f64 {
        self.get(reflect_index(row, self.height), reflect_index(col, self.width))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Raster {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn transpose(&self) -> Raster {
        Raster::from_fn(self.height, self.width, |r, c| self.get(c, r))
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn max_abs_diff(&self, other: &Raster) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Copies the rectangle starting at (`row0`, `col0`) of the given size.
    pub fn crop(&self, row0: usize, col0: usize, height: usize, width: usize) -> Raster {
        assert!(row0 + height <= self.height && col0 + width <= self.width);
        Raster::from_fn(width, height, |r, c| self.get(row0 + r, col0 + c))
    }

    /// Pads every side by the given amounts using symmetric reflection.
    pub fn pad_reflect(&self, top: usize, bottom: usize, left: usize, right: usize) -> Raster {
        let w = self.width + left + right;
        let h = self.height + top + bottom;
        Raster::from_fn(w, h, |r, c| {
            self.get_reflect(r as isize - top as isize, c as isize - left as isize)
        })
    }

    pub fn to_complex(&self) -> ComplexRaster {
        ComplexRaster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }
}

impl Index<(usize, usize)> for Raster {
    type Output = f64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.width + c]
    }
}

impl IndexMut<(usize, usize)> for Raster {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.width + c]
    }
}

/// Symmetric reflection of an index into `[0, n)`.
#[inline]
pub fn reflect_index(mut i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * n;
    i = i.rem_euclid(period);
    if i >= n {
        i = period - 1 - i;
    }
    i as usize
}

/// Complex-valued grid, row-major. Used for spectra and complex subbands.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexRaster {
    width: usize,
    height: usize,
    data: Vec<Complex64>,
}

impl ComplexRaster {
    pub fn new(width: usize, height: usize, data: Vec<Complex64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(TexlabError::arg(format!(
                "raster dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(TexlabError::arg(format!(
                "complex raster data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(TexlabError::arg("non-finite complex value"));
        }
        Ok(ComplexRaster {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        ComplexRaster {
            width,
            height,
            data: vec![Complex64::new(0.0, 0.0); width * height],
        }
    }

    /// Builds from separate real and imaginary planes.
    pub fn from_parts(width: usize, height: usize, re: &[f64], im: &[f64]) -> Result<Self> {
        if re.len() != im.len() {
            return Err(TexlabError::arg("real and imaginary planes differ in length"));
        }
        let data = re
            .iter()
            .zip(im)
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect();
        Self::new(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.width + col] = value;
    }

    pub fn re(&self) -> Raster {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| v.re).collect(),
        }
    }

    pub fn im(&self) -> Raster {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| v.im).collect(),
        }
    }

    /// Pointwise modulus.
    pub fn magnitude(&self) -> Raster {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| v.norm()).collect(),
        }
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Raster::new(0, 3, vec![]).is_err());
        assert!(Raster::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Raster::new(1, 1, vec![f64::NAN]).is_err());
        assert!(ComplexRaster::new(2, 1, vec![Complex64::new(0.0, 0.0)]).is_err());
    }

    #[test]
    fn reflect_index_is_half_sample_symmetric() {
        let got: Vec<usize> = (-4..8).map(|i| reflect_index(i, 4)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 0, 1, 2, 3, 3, 2, 1, 0]);
        assert_eq!(reflect_index(-7, 1), 0);
    }

    #[test]
    fn pad_then_crop_is_identity() {
        let r = Raster::from_fn(5, 3, |r, c| (r * 5 + c) as f64);
        let p = r.pad_reflect(2, 1, 3, 4);
        assert_eq!(p.shape(), (6, 12));
        assert_eq!(p.crop(2, 3, 3, 5), r);
        assert_eq!(p.get(0, 3), r.get(1, 0));
    }
}
