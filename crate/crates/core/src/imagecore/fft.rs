//! Two-dimensional DFT on arbitrary grid sizes, built from row and column
//! passes of one-dimensional mixed-radix transforms.
//!
//! Normalization: the forward transform is unscaled, the inverse divides by
//! `width * height`.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::imagecore::ComplexRaster;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FftDirection {
    Forward,
    Inverse,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        match direction {
            FftDirection::Forward => p.plan_fft_forward(len),
            FftDirection::Inverse => p.plan_fft_inverse(len),
        }
    })
}

pub fn spectral_transform(input: &ComplexRaster, direction: FftDirection) -> ComplexRaster {
    let mut out = input.clone();
    spectral_transform_in_place(&mut out, direction);
    out
}

pub fn spectral_transform_in_place(grid: &mut ComplexRaster, direction: FftDirection) {
    let (h, w) = grid.shape();
    let data = grid.data_mut();

    let row_fft = plan(w, direction);
    let mut scratch = vec![Complex64::new(0.0, 0.0); row_fft.get_inplace_scratch_len()];
    for row in data.chunks_exact_mut(w) {
        row_fft.process_with_scratch(row, &mut scratch);
    }

    if h > 1 {
        let col_fft = plan(h, direction);
        let mut scratch = vec![Complex64::new(0.0, 0.0); col_fft.get_inplace_scratch_len()];
        let mut column = vec![Complex64::new(0.0, 0.0); h];
        for c in 0..w {
            for r in 0..h {
                column[r] = data[r * w + c];
            }
            col_fft.process_with_scratch(&mut column, &mut scratch);
            for r in 0..h {
                data[r * w + c] = column[r];
            }
        }
    }

    if direction == FftDirection::Inverse {
        let scale = 1.0 / (w * h) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// Signed frequency index of DFT bin `k` on a grid of length `n`:
/// bins at or above `ceil(n/2)` map to negative frequencies, so the Nyquist
/// bin of an even length becomes `-n/2`.
#[inline]
pub fn signed_frequency(k: usize, n: usize) -> isize {
    if k < n.div_ceil(2) {
        k as isize
    } else {
        k as isize - n as isize
    }
}
