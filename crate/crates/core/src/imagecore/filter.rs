use crate::error::{Result, TexlabError};
use crate::imagecore::Raster;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BorderMode {
    /// Half-sample symmetric reflection (`dcb|abcd|cba`).
    #[default]
    Symmetric,
    /// Pixels outside the raster read as zero.
    Zero,
}

impl BorderMode {
    #[inline]
    fn sample(self, raster: &Raster, row: isize, col: isize) -> f64 {
        match self {
            BorderMode::Symmetric => raster.get_reflect(row, col),
            BorderMode::Zero => {
                if row < 0
                    || col < 0
                    || row >= raster.height() as isize
                    || col >= raster.width() as isize
                {
                    0.0
                } else {
                    raster.get(row as usize, col as usize)
                }
            }
        }
    }
}

/// 2-D convolution with a centered, odd-sized kernel. Output has the input's shape.
pub fn convolve2d(raster: &Raster, kernel: &Raster, border: BorderMode) -> Result<Raster> {
    let (kh, kw) = kernel.shape();
    if kh % 2 == 0 || kw % 2 == 0 {
        return Err(TexlabError::arg(format!(
            "convolution kernel must have odd sides, got {kw}x{kh}"
        )));
    }
    let (h, w) = raster.shape();
    let (ch, cw) = ((kh / 2) as isize, (kw / 2) as isize);
    let mut out = Raster::zeros(w, h);
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for i in 0..kh {
                let rr = r as isize + ch - i as isize;
                for j in 0..kw {
                    let cc = c as isize + cw - j as isize;
                    acc += kernel.get(i, j) * border.sample(raster, rr, cc);
                }
            }
            out.set(r, c, acc);
        }
    }
    Ok(out)
}

/// Convolves rows then columns with the same odd-length 1-D kernel.
pub fn convolve_separable(raster: &Raster, taps: &[f64], border: BorderMode) -> Result<Raster> {
    if taps.len().is_multiple_of(2) {
        return Err(TexlabError::arg("separable kernel must have odd length"));
    }
    let row_kernel = Raster::new(taps.len(), 1, taps.to_vec())?;
    let col_kernel = Raster::new(1, taps.len(), taps.to_vec())?;
    let tmp = convolve2d(raster, &row_kernel, border)?;
    convolve2d(&tmp, &col_kernel, border)
}

/// Horizontal (`gx`, along columns) and vertical (`gy`, along rows)
/// derivatives: central differences inside, one-sided at the borders.
pub fn gradient2d(raster: &Raster) -> Result<(Raster, Raster)> {
    let (h, w) = raster.shape();
    if h < 2 || w < 2 {
        return Err(TexlabError::arg(format!(
            "gradient needs at least 2x2 pixels, got {w}x{h}"
        )));
    }
    let gx = Raster::from_fn(w, h, |r, c| {
        if c == 0 {
            raster.get(r, 1) - raster.get(r, 0)
        } else if c == w - 1 {
            raster.get(r, w - 1) - raster.get(r, w - 2)
        } else {
            0.5 * (raster.get(r, c + 1) - raster.get(r, c - 1))
        }
    });
    let gy = Raster::from_fn(w, h, |r, c| {
        if r == 0 {
            raster.get(1, c) - raster.get(0, c)
        } else if r == h - 1 {
            raster.get(h - 1, c) - raster.get(h - 2, c)
        } else {
            0.5 * (raster.get(r + 1, c) - raster.get(r - 1, c))
        }
    });
    Ok((gx, gy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute-force definition: out[r][c] = sum_{a,b} x[a][b] * k[r-a+ch][c-b+cw].
    fn conv_oracle(x: &Raster, k: &Raster) -> Raster {
        let (h, w) = x.shape();
        let (kh, kw) = k.shape();
        let (ch, cw) = ((kh / 2) as isize, (kw / 2) as isize);
        Raster::from_fn(w, h, |r, c| {
            let mut acc = 0.0;
            for a in -(kh as isize)..(h as isize + kh as isize) {
                for b in -(kw as isize)..(w as isize + kw as isize) {
                    let ki = r as isize - a + ch;
                    let kj = c as isize - b + cw;
                    if ki >= 0 && kj >= 0 && (ki as usize) < kh && (kj as usize) < kw {
                        acc += x.get_reflect(a, b) * k.get(ki as usize, kj as usize);
                    }
                }
            }
            acc
        })
    }

    fn grid(w: usize, h: usize) -> impl Strategy<Value = Raster> {
        proptest::collection::vec(-1.0f64..1.0, w * h)
            .prop_map(move |v| Raster::new(w, h, v).unwrap())
    }

    #[test]
    fn unit_kernel_is_identity() {
        let x = Raster::from_fn(4, 3, |r, c| (r * 7 + c * 3) as f64 * 0.1);
        let k = Raster::new(1, 1, vec![1.0]).unwrap();
        assert_eq!(convolve2d(&x, &k, BorderMode::Symmetric).unwrap(), x);
    }

    #[test]
    fn even_kernel_rejected() {
        let x = Raster::zeros(4, 4);
        let k = Raster::zeros(2, 3);
        assert!(matches!(
            convolve2d(&x, &k, BorderMode::Symmetric),
            Err(TexlabError::Argument(_))
        ));
    }

    #[test]
    fn constant_is_preserved_by_unit_sum_kernel() {
        let x = Raster::filled(6, 5, 2.5);
        let k = Raster::new(3, 3, vec![0.1, 0.2, 0.05, 0.1, 0.1, 0.15, 0.05, 0.1, 0.15]).unwrap();
        let y = convolve2d(&x, &k, BorderMode::Symmetric).unwrap();
        assert!(y.data().iter().all(|&v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn gradient_of_ramp_and_constant() {
        let ramp = Raster::from_fn(5, 4, |_, c| c as f64);
        let (gx, gy) = gradient2d(&ramp).unwrap();
        assert!(gx.data().iter().all(|&v| (v - 1.0).abs() < 1e-15));
        assert!(gy.data().iter().all(|&v| v == 0.0));
        let (gx, gy) = gradient2d(&Raster::filled(3, 3, 4.0)).unwrap();
        assert!(gx.data().iter().chain(gy.data()).all(|&v| v == 0.0));
        assert!(gradient2d(&Raster::zeros(1, 5)).is_err());
    }

    #[test]
    fn gradient_matches_difference_oracle() {
        let x = Raster::from_fn(5, 5, |r, c| ((r * 13 + c * 7) % 11) as f64 - 0.3 * r as f64);
        let (gx, gy) = gradient2d(&x).unwrap();
        for r in 0..5usize {
            for c in 0..5usize {
                let (cl, cr) = (c.saturating_sub(1), (c + 1).min(4));
                let (ru, rd) = (r.saturating_sub(1), (r + 1).min(4));
                let ex = (x.get(r, cr) - x.get(r, cl)) / (cr - cl) as f64;
                let ey = (x.get(rd, c) - x.get(ru, c)) / (rd - ru) as f64;
                assert_eq!(gx.get(r, c), ex);
                assert_eq!(gy.get(r, c), ey);
            }
        }
    }

    proptest! {
        #[test]
        fn convolution_matches_brute_force(
            x in (1usize..=8, 1usize..=8).prop_flat_map(|(w, h)| grid(w, h)),
            k in (0usize..2, 0usize..2).prop_flat_map(|(a, b)| grid(2 * a + 1, 2 * b + 1)),
        ) {
            let fast = convolve2d(&x, &k, BorderMode::Symmetric).unwrap();
            let slow = conv_oracle(&x, &k);
            prop_assert!(fast.max_abs_diff(&slow) <= 1e-12);
        }

        #[test]
        fn gradient_is_linear(a in grid(6, 4), b in grid(6, 4), s in -3.0f64..3.0) {
            let mix = Raster::new(6, 4, a.data().iter().zip(b.data()).map(|(x, y)| s * x + y).collect()).unwrap();
            let (ga, ha) = gradient2d(&a).unwrap();
            let (gb, hb) = gradient2d(&b).unwrap();
            let (gm, hm) = gradient2d(&mix).unwrap();
            for i in 0..24 {
                prop_assert!((gm.data()[i] - (s * ga.data()[i] + gb.data()[i])).abs() < 1e-12);
                prop_assert!((hm.data()[i] - (s * ha.data()[i] + hb.data()[i])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_3x3_kernel_on_6x6_matches_oracle() {
        let x = Raster::from_fn(6, 6, |r, c| ((r * 31 + c * 17) % 13) as f64 / 13.0 - 0.5);
        let k = Raster::from_fn(3, 3, |r, c| ((r * 5 + c * 3) % 7) as f64 / 7.0 - 0.4);
        let fast = convolve2d(&x, &k, BorderMode::Symmetric).unwrap();
        assert!(fast.max_abs_diff(&conv_oracle(&x, &k)) <= 1e-12);
    }
}
