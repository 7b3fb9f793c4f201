use crate::error::{Result, TexlabError};
use crate::imagecore::Raster;

pub const DEFAULT_PATCH_SIDE: usize = 99;

/// Weight the taper assigns to the patch corners.
pub const CORNER_WEIGHT: f64 = 0.01;

/// Square, Gaussian-weighted window cut from a section.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub raster: Raster,
    /// (row, col) of the patch center in the parent section.
    pub source_center: (usize, usize),
}

impl Patch {
    pub fn side(&self) -> usize {
        self.raster.width()
    }
}

/// Standard deviation that makes the corner weight exactly [`CORNER_WEIGHT`]:
/// `sigma = d_corner / sqrt(2 ln(1/CORNER_WEIGHT))` with `d_corner` the
/// center-to-corner distance.
pub fn taper_sigma(side: usize) -> f64 {
    let half = (side as f64 - 1.0) / 2.0;
    let d_corner = half * std::f64::consts::SQRT_2;
    d_corner / (2.0 * (1.0 / CORNER_WEIGHT).ln()).sqrt()
}

/// Isotropic Gaussian window, peak 1 at the center.
pub fn gaussian_taper(side: usize) -> Raster {
    let half = (side as f64 - 1.0) / 2.0;
    if side == 1 {
        return Raster::filled(1, 1, 1.0);
    }
    let two_sigma_sq = 2.0 * taper_sigma(side).powi(2);
    Raster::from_fn(side, side, |r, c| {
        let dy = r as f64 - half;
        let dx = c as f64 - half;
        (-(dx * dx + dy * dy) / two_sigma_sq).exp()
    })
}

/// Cuts a `side x side` window around `center` (row, col), reflecting at
/// the section borders, and multiplies it by the Gaussian taper.
pub fn extract_weighted_patch(raster: &Raster, center: (usize, usize), side: usize) -> Result<Patch> {
    if side == 0 || side.is_multiple_of(2) {
        return Err(TexlabError::arg(format!("patch side must be odd, got {side}")));
    }
    let (row, col) = center;
    if row >= raster.height() || col >= raster.width() {
        return Err(TexlabError::arg(format!(
            "patch center ({row}, {col}) outside {}x{} raster",
            raster.width(),
            raster.height()
        )));
    }
    let taper = gaussian_taper(side);
    let half = (side / 2) as isize;
    let out = Raster::from_fn(side, side, |r, c| {
        let sr = row as isize + r as isize - half;
        let sc = col as isize + c as isize - half;
        raster.get_reflect(sr, sc) * taper.get(r, c)
    });
    Ok(Patch {
        raster: out,
        source_center: center,
    })
}

/// Applies the taper to an image that already is a full patch.
pub fn taper_full_patch(raster: &Raster) -> Result<Patch> {
    if raster.width() != raster.height() {
        return Err(TexlabError::arg(format!(
            "patch must be square, got {}x{}",
            raster.width(),
            raster.height()
        )));
    }
    let side = raster.width();
    extract_weighted_patch(raster, (side / 2, side / 2), side)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taper_peak_and_corners() {
        let ones = Raster::filled(120, 110, 1.0);
        let p = extract_weighted_patch(&ones, (60, 60), 99).unwrap();
        assert_eq!(p.side(), 99);
        assert_eq!(p.raster.get(49, 49), 1.0);
        for (r, c) in [(0, 0), (0, 98), (98, 0), (98, 98)] {
            assert!((p.raster.get(r, c) - 0.01).abs() <= 1e-12);
        }
        // closed form: 49*sqrt(2) / sqrt(2 ln 100)
        let expected = 49.0 * 2f64.sqrt() / (2.0 * 100f64.ln()).sqrt();
        assert!((taper_sigma(99) - expected).abs() < 1e-12);
        assert!((taper_sigma(99) - 22.8335).abs() < 1e-4);
    }

    #[test]
    fn reflection_at_origin_keeps_constant() {
        let c = Raster::filled(30, 30, 3.0);
        let p = extract_weighted_patch(&c, (0, 0), 21).unwrap();
        let t = gaussian_taper(21);
        assert!(p.raster.max_abs_diff(&t.map(|v| 3.0 * v)) < 1e-15);
    }

    #[test]
    fn taper_is_radially_monotone() {
        let t = gaussian_taper(31);
        let mut pairs: Vec<(f64, f64)> = (0..31)
            .flat_map(|r| (0..31).map(move |c| (r, c)))
            .map(|(r, c)| {
                let d = ((r as f64 - 15.0).powi(2) + (c as f64 - 15.0).powi(2)).sqrt();
                (d, t.get(r, c))
            })
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for w in pairs.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-15);
        }
    }

    #[test]
    fn bad_arguments() {
        let r = Raster::zeros(10, 10);
        assert!(extract_weighted_patch(&r, (10, 0), 5).is_err());
        assert!(extract_weighted_patch(&r, (0, 0), 4).is_err());
    }
}
