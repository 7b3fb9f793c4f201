//! Fast discrete curvelet transform via wrapping.
//!
//! The DFT plane of an `N1 x N2` image (rows x cols) is split into one
//! non-directional low-pass band and `J - 1` directional rings, ring `j`
//! holding `K(j) = 16 * 2^ceil((j-1)/2)` angular wedges. Every wedge is
//! multiplied by its window, wrapped into a small rectangle around the
//! origin and brought back to space with an inverse FFT.
//!
//! Windows
//! -------
//! Frequencies are normalized per axis, `u = k2/N2`, `v = -k1/N1` (so `v`
//! points up), and the radial coordinate is the square-corona norm
//! `r = 2 max(|u|, |v|)`, which reaches 1 at the Nyquist border.
//!
//! Radially, with the profile `phi(t) = 1` for `t <= 1`,
//! `cos(pi/2 * nu(t - 1))` for `1 < t < 2` and 0 beyond, where
//! `nu(x) = x^2 (3 - 2x)`, the nested low-pass windows are
//! `Phi_m(r) = phi(r / rho_m)` with `rho_m = 2^(m - (J-2)) / 3`,
//! `m = 0..J-2`. The low-pass band is `Phi_0`, ring `j < J-1` is
//! `sqrt(Phi_j^2 - Phi_(j-1)^2)` and the outermost ring is
//! `sqrt(1 - Phi_(J-2)^2)`, so the squares telescope to exactly 1.
//!
//! Angularly, wedge `l` of a ring with `K` wedges is centered on
//! `theta_l = l * 2 pi / K` (angle of `(u, v)`); it is flat within
//! `Delta/4` of its center and rolls off over `Delta/2` shared with its
//! neighbor as `cos(pi/2 * nu(x))` / `sin(pi/2 * nu(x))`, `Delta = 2 pi / K`.
//!
//! Wedge `l + K/2` is defined as the mirror of wedge `l` through the
//! origin of the DFT grid, so for real input its coefficients are the
//! complex conjugates of those of wedge `l`. Grid points that are their
//! own mirror (DC and Nyquist corners) split their weight evenly between
//! the two members of a pair.
//!
//! Wrapping
//! --------
//! Each window's support is mapped into an `L1 x L2` rectangle by taking
//! signed frequency indices modulo `(L1, L2)`. The rectangle is the one of
//! minimal area for which this map is injective on the support, so the
//! inverse can unwrap exactly. Coefficients are scaled by
//! `sqrt(L1 L2 / (N1 N2))`, which makes the transform a Parseval tight
//! frame: `sum |c|^2 = sum x^2`.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, TexlabError};
use crate::imagecore::fft::{signed_frequency, spectral_transform_in_place};
use crate::imagecore::{ComplexRaster, FftDirection, Raster};
use crate::subband::{Subband, SubbandSet};

/// Maximum scale count `ceil(log2(min(N1, N2)) - 3)`, evaluated exactly as
/// `ceil_log2(min) - 3` (clamped at 0).
pub fn max_scales(n1: usize, n2: usize) -> usize {
    let m = n1.min(n2).max(1);
    let ceil_log2 = usize::BITS - (m - 1).leading_zeros();
    (ceil_log2 as usize).saturating_sub(3)
}

/// Number of wedges on directional ring `j >= 1`: `16 * 2^ceil((j-1)/2)`.
pub fn wedges_per_ring(j: usize) -> usize {
    assert!(j >= 1, "directional rings are numbered from 1");
    16 << (j / 2)
}

#[inline]
fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

/// Radial low-pass profile: 1 up to `t = 1`, 0 from `t = 2`.
#[inline]
fn lowpass_profile(t: f64) -> f64 {
    if t <= 1.0 {
        1.0
    } else if t >= 2.0 {
        0.0
    } else {
        (FRAC_PI_2 * smoothstep(t - 1.0)).cos()
    }
}

/// Angular weights at angle `theta` for a ring with `k` wedges: at most two
/// nonzero `(wedge, weight)` entries whose squares sum to 1.
fn angular_weights(theta: f64, k: usize) -> [(usize, f64); 2] {
    let delta = 2.0 * PI / k as f64;
    let pos = theta.rem_euclid(2.0 * PI) / delta;
    let nearest = pos.round();
    let t = (pos - nearest) * delta; // in [-delta/2, delta/2]
    let l0 = (nearest as usize) % k;
    let flat = delta / 4.0;
    if t.abs() <= flat {
        return [(l0, 1.0), (l0, 0.0)];
    }
    let x = (t.abs() - flat) / (delta / 2.0); // in (0, 1/2]
    let l1 = if t > 0.0 { (l0 + 1) % k } else { (l0 + k - 1) % k };
    let s = FRAC_PI_2 * smoothstep(x);
    [(l0, s.cos()), (l1, s.sin())]
}

/// One window of the partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Wedge {
    /// 0 for the low-pass band, `1..J` for directional rings.
    pub scale: usize,
    pub index: usize,
    /// Center angle of the frequency sector, radians in `[0, 2 pi)`.
    /// Zero for the low-pass band.
    pub angle: f64,
    /// Index of the conjugate partner within the same ring.
    pub partner: Option<usize>,
    /// `(rows, cols)` of the wrapped coefficient grid.
    pub wrap_shape: (usize, usize),
    /// Flat DFT-grid index of every support point.
    points: Vec<u32>,
    weights: Vec<f64>,
    /// Flat index into the wrapped grid for every support point.
    wrapped: Vec<u32>,
}

impl Wedge {
    /// Orientation of the image structures this wedge responds to
    /// (perpendicular to the frequency direction), radians in `[0, pi)`.
    pub fn orientation(&self) -> f64 {
        (self.angle + FRAC_PI_2).rem_euclid(PI)
    }

    pub fn support_len(&self) -> usize {
        self.points.len()
    }

    /// Window value at every DFT-grid point (zero off the support).
    pub fn window(&self, n1: usize, n2: usize) -> Raster {
        let mut w = Raster::zeros(n2, n1);
        for (&p, &v) in self.points.iter().zip(&self.weights) {
            w.data_mut()[p as usize] = v;
        }
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveletPartition {
    /// Rows.
    pub n1: usize,
    /// Columns.
    pub n2: usize,
    /// Scales available for this size.
    pub j_max: usize,
    /// Requested scales, low-pass band included.
    pub scales: usize,
    pub lowpass: Wedge,
    /// `rings[j - 1]` holds the wedges of directional ring `j`.
    pub rings: Vec<Vec<Wedge>>,
}

impl CurveletPartition {
    /// Wedge count per directional ring, coarse to fine.
    pub fn wedge_counts(&self) -> Vec<usize> {
        self.rings.iter().map(|r| r.len()).collect()
    }

    pub fn num_windows(&self) -> usize {
        1 + self.rings.iter().map(|r| r.len()).sum::<usize>()
    }

    /// Sum over all windows of the squared window value at each DFT point.
    pub fn squared_window_sum(&self) -> Raster {
        let mut acc = Raster::zeros(self.n2, self.n1);
        for w in std::iter::once(&self.lowpass).chain(self.rings.iter().flatten()) {
            for (&p, &v) in w.points.iter().zip(&w.weights) {
                acc.data_mut()[p as usize] += v * v;
            }
        }
        acc
    }
}

/// Smallest `(L1, L2)` for which signed indices modulo `(L1, L2)` are
/// injective on `coords`. Ties prefer the squarer rectangle, then smaller L1.
fn minimal_wrap(coords: &[(isize, isize)]) -> (usize, usize) {
    let (mut a0, mut a1, mut b0, mut b1) = (isize::MAX, isize::MIN, isize::MAX, isize::MIN);
    for &(a, b) in coords {
        a0 = a0.min(a);
        a1 = a1.max(a);
        b0 = b0.min(b);
        b1 = b1.max(b);
    }
    let bh = (a1 - a0 + 1) as usize;
    let bw = (b1 - b0 + 1) as usize;
    let n = coords.len();
    let mut best = (bh, bw);
    let key = |(h, w): (usize, usize)| (h * w, h.abs_diff(w), h);
    let mut seen = vec![u32::MAX; bh * bw];
    let mut stamp = 0u32;
    for l1 in 1..=bh {
        let min_l2 = n.div_ceil(l1).max(1);
        if min_l2 > bw || key((l1, min_l2)) >= key(best) {
            continue;
        }
        for l2 in min_l2..=bw {
            if key((l1, l2)) >= key(best) {
                break;
            }
            stamp += 1;
            let injective = coords.iter().all(|&(a, b)| {
                let slot = a.rem_euclid(l1 as isize) as usize * l2 + b.rem_euclid(l2 as isize) as usize;
                if seen[slot] == stamp {
                    false
                } else {
                    seen[slot] = stamp;
                    true
                }
            });
            if injective {
                best = (l1, l2);
                break;
            }
        }
    }
    best
}

fn build_wedge(
    scale: usize,
    index: usize,
    angle: f64,
    partner: Option<usize>,
    entries: Vec<(usize, f64)>,
    n1: usize,
    n2: usize,
) -> Wedge {
    let coords: Vec<(isize, isize)> = entries
        .iter()
        .map(|&(p, _)| (signed_frequency(p / n2, n1), signed_frequency(p % n2, n2)))
        .collect();
    let wrap_shape = if coords.is_empty() {
        (1, 1)
    } else {
        minimal_wrap(&coords)
    };
    let (l1, l2) = wrap_shape;
    let wrapped = coords
        .iter()
        .map(|&(a, b)| (a.rem_euclid(l1 as isize) as usize * l2 + b.rem_euclid(l2 as isize) as usize) as u32)
        .collect();
    Wedge {
        scale,
        index,
        angle,
        partner,
        wrap_shape,
        points: entries.iter().map(|&(p, _)| p as u32).collect(),
        weights: entries.iter().map(|&(_, w)| w).collect(),
        wrapped,
    }
}

/// Mirror of a wedge through the DFT-grid origin.
fn mirror_wedge(w: &Wedge, index: usize, n1: usize, n2: usize) -> Wedge {
    let (l1, l2) = w.wrap_shape;
    let neg = |p: u32, r: usize, c: usize| {
        let (pr, pc) = (p as usize / c, p as usize % c);
        ((r - pr) % r * c + (c - pc) % c) as u32
    };
    Wedge {
        scale: w.scale,
        index,
        angle: (w.angle + PI).rem_euclid(2.0 * PI),
        partner: Some(w.index),
        wrap_shape: w.wrap_shape,
        points: w.points.iter().map(|&p| neg(p, n1, n2)).collect(),
        weights: w.weights.clone(),
        wrapped: w.wrapped.iter().map(|&m| neg(m, l1, l2)).collect(),
    }
}

pub fn curvelet_partition(n1: usize, n2: usize, scales: usize) -> Result<CurveletPartition> {
    let j_max = max_scales(n1, n2);
    if scales < 2 {
        return Err(TexlabError::arg(format!(
            "curvelet transform needs at least 2 scales, got {scales}"
        )));
    }
    if scales > j_max {
        return Err(TexlabError::arg(format!(
            "{scales} curvelet scales requested, at most {j_max} fit a {n2}x{n1} grid"
        )));
    }
    let total = n1 * n2;
    let rho = |m: usize| (2f64).powi(m as i32 - (scales as i32 - 2)) / 3.0;

    let mut radius = Vec::with_capacity(total);
    let mut theta = Vec::with_capacity(total);
    for k1 in 0..n1 {
        let v = -(signed_frequency(k1, n1) as f64) / n1 as f64;
        for k2 in 0..n2 {
            let u = signed_frequency(k2, n2) as f64 / n2 as f64;
            radius.push(2.0 * u.abs().max(v.abs()));
            theta.push(v.atan2(u));
        }
    }
    let phi = |m: usize, r: f64| lowpass_profile(r / rho(m));
    let ring_weight = |j: usize, r: f64| -> f64 {
        let outer = if j == scales - 1 { 1.0 } else { phi(j, r).powi(2) };
        (outer - phi(j - 1, r).powi(2)).max(0.0).sqrt()
    };
    let negate = |p: usize| ((n1 - p / n2) % n1) * n2 + (n2 - p % n2) % n2;

    let lowpass_entries: Vec<(usize, f64)> = (0..total)
        .map(|p| (p, phi(0, radius[p])))
        .filter(|&(_, w)| w > 0.0)
        .collect();
    let lowpass = build_wedge(0, 0, 0.0, None, lowpass_entries, n1, n2);

    let mut rings = Vec::with_capacity(scales - 1);
    for j in 1..scales {
        let k = wedges_per_ring(j);
        let half = k / 2;
        // Angular weights, made exactly mirror-consistent: each mirror pair
        // takes its representative's weights shifted by K/2.
        let mut ang: Vec<[(usize, f64); 2]> = vec![[(0, 0.0); 2]; total];
        for p in 0..total {
            let q = negate(p);
            if q < p {
                continue;
            }
            let a = angular_weights(theta[p], k);
            ang[p] = a;
            if q != p {
                ang[q] = a.map(|(l, w)| ((l + half) % k, w));
            }
        }
        let mut entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); half];
        for p in 0..total {
            let rw = ring_weight(j, radius[p]);
            if rw <= 0.0 {
                continue;
            }
            if negate(p) == p {
                // self-mirrored point: share between the two members of a pair
                let mut sq = vec![0.0; half];
                for &(l, w) in &ang[p] {
                    sq[l % half] += w * w;
                }
                for (l, s) in sq.into_iter().enumerate() {
                    if s > 0.0 {
                        entries[l].push((p, rw * (s / 2.0).sqrt()));
                    }
                }
            } else {
                for &(l, w) in &ang[p] {
                    if l < half && w > 0.0 {
                        entries[l].push((p, rw * w));
                    }
                }
            }
        }
        let mut first: Vec<Wedge> = entries
            .into_par_iter()
            .enumerate()
            .map(|(l, e)| {
                let angle = l as f64 * 2.0 * PI / k as f64;
                build_wedge(j, l, angle, Some(l + half), e, n1, n2)
            })
            .collect();
        let second: Vec<Wedge> = first
            .iter()
            .map(|w| mirror_wedge(w, w.index + half, n1, n2))
            .collect();
        first.extend(second);
        rings.push(first);
    }

    Ok(CurveletPartition {
        n1,
        n2,
        j_max,
        scales,
        lowpass,
        rings,
    })
}

/// Shared partition for a grid size, built once per process.
pub fn cached_partition(n1: usize, n2: usize, scales: usize) -> Result<Arc<CurveletPartition>> {
    type Cache = Mutex<HashMap<(usize, usize, usize), Arc<CurveletPartition>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(p) = cache.lock().unwrap().get(&(n1, n2, scales)) {
        return Ok(Arc::clone(p));
    }
    let built = Arc::new(curvelet_partition(n1, n2, scales)?);
    let mut guard = cache.lock().unwrap();
    Ok(Arc::clone(guard.entry((n1, n2, scales)).or_insert(built)))
}

#[derive(Debug, Clone)]
pub struct CurveletCoeffs {
    pub partition: Arc<CurveletPartition>,
    pub lowpass: ComplexRaster,
    /// `rings[j - 1][l]` for directional ring `j`, wedge `l`.
    pub rings: Vec<Vec<ComplexRaster>>,
}

impl CurveletCoeffs {
    pub fn energy(&self) -> f64 {
        self.lowpass.energy()
            + self
                .rings
                .iter()
                .flatten()
                .map(|c| c.energy())
                .sum::<f64>()
    }

    /// Coefficient magnitudes: directional rings coarse to fine, wedges in
    /// index order, low-pass band last.
    pub fn to_subband_set(&self) -> SubbandSet {
        let mut bands = Vec::with_capacity(self.partition.num_windows());
        for (ji, ring) in self.rings.iter().enumerate() {
            let j = ji + 1;
            for (l, c) in ring.iter().enumerate() {
                bands.push(Subband::complex(j, l, format!("scale{j}_wedge{l}"), c.clone()));
            }
        }
        bands.push(Subband::complex(0, 0, "scale0_wedge0", self.lowpass.clone()));
        SubbandSet { bands }
    }
}

fn wrap_scale(wedge: &Wedge, n: usize) -> f64 {
    ((wedge.wrap_shape.0 * wedge.wrap_shape.1) as f64 / n as f64).sqrt()
}

fn analyze(wedge: &Wedge, spectrum: &ComplexRaster, n: usize) -> ComplexRaster {
    let (l1, l2) = wedge.wrap_shape;
    let mut grid = ComplexRaster::zeros(l2, l1);
    {
        let g = grid.data_mut();
        let x = spectrum.data();
        for ((&p, &w), &m) in wedge.points.iter().zip(&wedge.weights).zip(&wedge.wrapped) {
            g[m as usize] += x[p as usize] * w;
        }
    }
    spectral_transform_in_place(&mut grid, FftDirection::Inverse);
    let s = wrap_scale(wedge, n);
    for v in grid.data_mut() {
        *v *= s;
    }
    grid
}

fn synthesize_into(wedge: &Wedge, coeffs: &ComplexRaster, acc: &mut [Complex64], n: usize) {
    let mut grid = coeffs.clone();
    spectral_transform_in_place(&mut grid, FftDirection::Forward);
    let s = 1.0 / wrap_scale(wedge, n);
    let g = grid.data();
    for ((&p, &w), &m) in wedge.points.iter().zip(&wedge.weights).zip(&wedge.wrapped) {
        acc[p as usize] += g[m as usize] * (w * s);
    }
}

/// Forward transform on a prebuilt partition.
pub fn fdct2_with(partition: &Arc<CurveletPartition>, raster: &Raster) -> Result<CurveletCoeffs> {
    if raster.shape() != (partition.n1, partition.n2) {
        return Err(TexlabError::arg(format!(
            "raster shape {:?} does not match partition {:?}",
            raster.shape(),
            (partition.n1, partition.n2)
        )));
    }
    let n = partition.n1 * partition.n2;
    let mut spectrum = raster.to_complex();
    spectral_transform_in_place(&mut spectrum, FftDirection::Forward);
    let lowpass = analyze(&partition.lowpass, &spectrum, n);
    let rings = partition
        .rings
        .iter()
        .map(|ring| ring.par_iter().map(|w| analyze(w, &spectrum, n)).collect())
        .collect();
    Ok(CurveletCoeffs {
        partition: Arc::clone(partition),
        lowpass,
        rings,
    })
}

pub fn fdct2(raster: &Raster, scales: usize) -> Result<CurveletCoeffs> {
    let partition = cached_partition(raster.height(), raster.width(), scales)?;
    fdct2_with(&partition, raster)
}

pub fn ifdct2(coeffs: &CurveletCoeffs) -> Result<Raster> {
    let part = &coeffs.partition;
    let shape_of = |w: &Wedge| w.wrap_shape;
    if coeffs.lowpass.shape() != shape_of(&part.lowpass) {
        return Err(TexlabError::arg("low-pass coefficient grid does not match partition"));
    }
    if coeffs.rings.len() != part.rings.len() {
        return Err(TexlabError::arg(format!(
            "{} coefficient rings for a partition with {}",
            coeffs.rings.len(),
            part.rings.len()
        )));
    }
    for (j, (cr, pr)) in coeffs.rings.iter().zip(&part.rings).enumerate() {
        if cr.len() != pr.len() {
            return Err(TexlabError::arg(format!(
                "ring {} has {} wedges, partition has {}",
                j + 1,
                cr.len(),
                pr.len()
            )));
        }
        for (c, w) in cr.iter().zip(pr) {
            if c.shape() != shape_of(w) {
                return Err(TexlabError::arg(format!(
                    "wedge ({}, {}) grid {:?} does not match wrap shape {:?}",
                    w.scale,
                    w.index,
                    c.shape(),
                    w.wrap_shape
                )));
            }
        }
    }
    let n = part.n1 * part.n2;
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    synthesize_into(&part.lowpass, &coeffs.lowpass, &mut acc, n);
    for (cr, pr) in coeffs.rings.iter().zip(&part.rings) {
        for (c, w) in cr.iter().zip(pr) {
            synthesize_into(w, c, &mut acc, n);
        }
    }
    let mut spectrum = ComplexRaster::new(part.n2, part.n1, acc)?;
    spectral_transform_in_place(&mut spectrum, FftDirection::Inverse);
    Ok(spectrum.re())
}
