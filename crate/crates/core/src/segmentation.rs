//! SLIC superpixels over `[l, gx, gy, x, y]`: amplitude and its two
//! gradients (each min-max normalized to `[0, 1]`) replace the CIELAB color
//! channels of the original algorithm.
//!
//! Distance: `D^2 = d_f^2 + (m / S)^2 d_s^2` with `d_f` the feature
//! distance, `d_s` the spatial distance, `m` the compactness and
//! `S = sqrt(pixels / target)` the grid interval.

use std::collections::VecDeque;

use crate::error::{Result, TexlabError};
use crate::imagecore::{gradient2d, Raster};

pub const DEFAULT_COMPACTNESS: f64 = 10.0;
pub const DEFAULT_MAX_ITERS: usize = 10;
/// Default average superpixel area in pixels (about 50x50).
pub const DEFAULT_PIXELS_PER_SUPERPIXEL: usize = 2500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicParams {
    pub target_count: usize,
    pub compactness: f64,
    pub max_iters: usize,
}

impl SlicParams {
    pub fn new(target_count: usize) -> Self {
        SlicParams {
            target_count,
            compactness: DEFAULT_COMPACTNESS,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }

    /// One superpixel per [`DEFAULT_PIXELS_PER_SUPERPIXEL`] pixels.
    pub fn for_size(width: usize, height: usize) -> Self {
        Self::new((width * height / DEFAULT_PIXELS_PER_SUPERPIXEL).max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperpixelMap {
    pub width: usize,
    pub height: usize,
    /// Row-major superpixel id per pixel, ids in `[0, count)`.
    pub labels: Vec<usize>,
    /// Mean `(row, col)` of each superpixel's pixels.
    pub centroids: Vec<(f64, f64)>,
    pub count: usize,
    /// Total assignment cost after each clustering iteration, before the
    /// connectivity pass.
    pub cost_history: Vec<f64>,
}

impl SuperpixelMap {
    #[inline]
    pub fn label(&self, row: usize, col: usize) -> usize {
        self.labels[row * self.width + col]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.count];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }

    /// Pixels on a boundary between two superpixels (4-neighborhood,
    /// right/down neighbor differs).
    pub fn boundary_mask(&self) -> Vec<bool> {
        let (w, h) = (self.width, self.height);
        (0..w * h)
            .map(|i| {
                let (r, c) = (i / w, i % w);
                (c + 1 < w && self.labels[i] != self.labels[i + 1])
                    || (r + 1 < h && self.labels[i] != self.labels[i + w])
            })
            .collect()
    }
}

fn normalize(data: &[f64]) -> Vec<f64> {
    let (lo, hi) = data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = hi - lo;
    if span <= 0.0 {
        vec![0.0; data.len()]
    } else {
        data.iter().map(|v| (v - lo) / span).collect()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Center {
    f: [f64; 3],
    row: f64,
    col: f64,
}

/// Grid of seed rows x cols whose product does not exceed `target`.
fn seed_grid(width: usize, height: usize, target: usize) -> (usize, usize) {
    if target == 1 {
        return (1, 1);
    }
    let s = ((width * height) as f64 / target as f64).sqrt();
    let cols = ((width as f64 / s).round() as usize).clamp(1, target.min(width));
    let rows = ((target as f64 / cols as f64).round() as usize).clamp(1, height);
    let rows = rows.min(target / cols).max(1);
    (rows, cols)
}

pub fn slic_segment(raster: &Raster, params: &SlicParams) -> Result<SuperpixelMap> {
    let (h, w) = raster.shape();
    let n = w * h;
    if params.target_count == 0 || params.target_count > n {
        return Err(TexlabError::arg(format!(
            "target superpixel count {} outside [1, {n}]",
            params.target_count
        )));
    }
    if !(params.compactness.is_finite() && params.compactness > 0.0) {
        return Err(TexlabError::arg("compactness must be positive"));
    }

    let (gx, gy) = if w >= 2 && h >= 2 {
        gradient2d(raster)?
    } else {
        (Raster::zeros(w, h), Raster::zeros(w, h))
    };
    let chans = [
        normalize(raster.data()),
        normalize(gx.data()),
        normalize(gy.data()),
    ];
    let feat = |i: usize| [chans[0][i], chans[1][i], chans[2][i]];
    let grad_mag: Vec<f64> = gx
        .data()
        .iter()
        .zip(gy.data())
        .map(|(a, b)| a * a + b * b)
        .collect();

    let s = (n as f64 / params.target_count as f64).sqrt();
    let spatial_weight = (params.compactness / s).powi(2);
    let (grid_rows, grid_cols) = seed_grid(w, h, params.target_count);
    let step_r = h as f64 / grid_rows as f64;
    let step_c = w as f64 / grid_cols as f64;

    // seeds at grid cell centers, nudged to the lowest gradient in 3x3
    let mut centers = Vec::with_capacity(grid_rows * grid_cols);
    for gr in 0..grid_rows {
        for gc in 0..grid_cols {
            let r0 = (((gr as f64 + 0.5) * step_r) as usize).min(h - 1);
            let c0 = (((gc as f64 + 0.5) * step_c) as usize).min(w - 1);
            let (mut br, mut bc) = (r0, c0);
            for r in r0.saturating_sub(1)..=(r0 + 1).min(h - 1) {
                for c in c0.saturating_sub(1)..=(c0 + 1).min(w - 1) {
                    if grad_mag[r * w + c] < grad_mag[br * w + bc] {
                        (br, bc) = (r, c);
                    }
                }
            }
            centers.push(Center {
                f: feat(br * w + bc),
                row: br as f64,
                col: bc as f64,
            });
        }
    }

    let reach = s.max(step_r).max(step_c).ceil() as isize;
    let dist = |c: &Center, i: usize| -> f64 {
        let f = feat(i);
        let (r, col) = ((i / w) as f64, (i % w) as f64);
        let df = (0..3).map(|k| (f[k] - c.f[k]).powi(2)).sum::<f64>();
        let ds = (r - c.row).powi(2) + (col - c.col).powi(2);
        df + spatial_weight * ds
    };

    let mut labels = vec![usize::MAX; n];
    let mut best = vec![f64::INFINITY; n];
    let mut cost_history = Vec::with_capacity(params.max_iters);
    for _ in 0..params.max_iters.max(1) {
        // the current assignment stays a candidate, so cost cannot rise
        for i in 0..n {
            best[i] = if labels[i] == usize::MAX {
                f64::INFINITY
            } else {
                dist(&centers[labels[i]], i)
            };
        }
        for (k, c) in centers.iter().enumerate() {
            let (cr, cc) = (c.row.round() as isize, c.col.round() as isize);
            let r_lo = (cr - reach).max(0) as usize;
            let r_hi = (cr + reach).min(h as isize - 1) as usize;
            let c_lo = (cc - reach).max(0) as usize;
            let c_hi = (cc + reach).min(w as isize - 1) as usize;
            for r in r_lo..=r_hi {
                for col in c_lo..=c_hi {
                    let i = r * w + col;
                    let d = dist(c, i);
                    if d < best[i] {
                        best[i] = d;
                        labels[i] = k;
                    }
                }
            }
        }
        cost_history.push(best.iter().filter(|d| d.is_finite()).sum());

        let mut acc = vec![(Center::default(), 0usize); centers.len()];
        for i in 0..n {
            if labels[i] == usize::MAX {
                continue;
            }
            let f = feat(i);
            let (a, cnt) = &mut acc[labels[i]];
            for (s, v) in a.f.iter_mut().zip(f) {
                *s += v;
            }
            a.row += (i / w) as f64;
            a.col += (i % w) as f64;
            *cnt += 1;
        }
        for (c, (a, cnt)) in centers.iter_mut().zip(acc) {
            if cnt > 0 {
                let inv = 1.0 / cnt as f64;
                *c = Center {
                    f: [a.f[0] * inv, a.f[1] * inv, a.f[2] * inv],
                    row: a.row * inv,
                    col: a.col * inv,
                };
            }
        }
    }

    let labels = enforce_connectivity(&labels, w, h);
    let (labels, count) = compact_labels(&labels);
    let centroids = compute_centroids(&labels, w, count);
    Ok(SuperpixelMap {
        width: w,
        height: h,
        labels,
        centroids,
        count,
        cost_history,
    })
}

/// 4-connected components of equal labels. Returns per-pixel component id
/// and component sizes.
fn components(labels: &[usize], w: usize, h: usize) -> (Vec<usize>, Vec<usize>) {
    let mut comp = vec![usize::MAX; labels.len()];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..labels.len() {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut size = 0;
        comp[start] = id;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            size += 1;
            let (r, c) = (i / w, i % w);
            let mut visit = |j: usize| {
                if comp[j] == usize::MAX && labels[j] == labels[start] {
                    comp[j] = id;
                    queue.push_back(j);
                }
            };
            if c > 0 {
                visit(i - 1);
            }
            if c + 1 < w {
                visit(i + 1);
            }
            if r > 0 {
                visit(i - w);
            }
            if r + 1 < h {
                visit(i + w);
            }
        }
        sizes.push(size);
    }
    (comp, sizes)
}

/// Keeps the largest 4-connected piece of every label; every other piece
/// (and any unassigned pixel) is merged into the largest superpixel it
/// touches.
fn enforce_connectivity(labels: &[usize], w: usize, h: usize) -> Vec<usize> {
    let (comp, comp_sizes) = components(labels, w, h);
    let mut main_comp: std::collections::HashMap<usize, usize> = Default::default();
    for (i, &l) in labels.iter().enumerate() {
        if l == usize::MAX {
            continue;
        }
        let c = comp[i];
        main_comp
            .entry(l)
            .and_modify(|m| {
                if comp_sizes[c] > comp_sizes[*m] || (comp_sizes[c] == comp_sizes[*m] && c < *m) {
                    *m = c;
                }
            })
            .or_insert(c);
    }
    const ORPHAN: usize = usize::MAX;
    let mut out: Vec<usize> = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            if l != ORPHAN && main_comp.get(&l) == Some(&comp[i]) {
                l
            } else {
                ORPHAN
            }
        })
        .collect();
    let mut sizes: std::collections::HashMap<usize, usize> = Default::default();
    for &l in &out {
        if l != ORPHAN {
            *sizes.entry(l).or_default() += 1;
        }
    }
    // each connected orphan region is adjacent only to kept regions
    let (orphan_comp, comp_count) = components(&out, w, h);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); comp_count.len()];
    for (i, &l) in out.iter().enumerate() {
        if l == ORPHAN {
            groups[orphan_comp[i]].push(i);
        }
    }
    for members in groups.into_iter().filter(|g| !g.is_empty()) {
        let mut target: Option<usize> = None;
        for &i in &members {
            let (r, c) = (i / w, i % w);
            let mut neighbors = Vec::with_capacity(4);
            if c > 0 {
                neighbors.push(i - 1);
            }
            if c + 1 < w {
                neighbors.push(i + 1);
            }
            if r > 0 {
                neighbors.push(i - w);
            }
            if r + 1 < h {
                neighbors.push(i + w);
            }
            for j in neighbors {
                let l = out[j];
                if l == ORPHAN {
                    continue;
                }
                let better = match target {
                    None => true,
                    Some(t) => sizes[&l] > sizes[&t] || (sizes[&l] == sizes[&t] && l < t),
                };
                if better {
                    target = Some(l);
                }
            }
        }
        let t = target.expect("orphan regions always touch a kept superpixel");
        for &i in &members {
            out[i] = t;
        }
        *sizes.get_mut(&t).unwrap() += members.len();
    }
    out
}

/// Renumbers labels `0..count` in order of first appearance.
fn compact_labels(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map: std::collections::HashMap<usize, usize> = Default::default();
    let out = labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect();
    (out, map.len())
}

fn compute_centroids(labels: &[usize], w: usize, count: usize) -> Vec<(f64, f64)> {
    let mut acc = vec![(0.0, 0.0, 0usize); count];
    for (i, &l) in labels.iter().enumerate() {
        acc[l].0 += (i / w) as f64;
        acc[l].1 += (i % w) as f64;
        acc[l].2 += 1;
    }
    acc.into_iter()
        .map(|(r, c, n)| (r / n as f64, c / n as f64))
        .collect()
}

/// Mean member coordinates of every superpixel.
pub fn superpixel_centroids(map: &SuperpixelMap) -> Vec<(f64, f64)> {
    compute_centroids(&map.labels, map.width, map.count)
}

/// Pixel anchors for patch extraction: each centroid rounded half-up. If
/// the rounded pixel falls outside its own (non-convex) superpixel, the
/// nearest member pixel is used instead, ties broken by scan order.
pub fn patch_anchors(map: &SuperpixelMap) -> Vec<(usize, usize)> {
    let centroids = superpixel_centroids(map);
    let mut anchors: Vec<(usize, usize)> = centroids
        .iter()
        .map(|&(r, c)| {
            (
                ((r + 0.5).floor() as usize).min(map.height - 1),
                ((c + 0.5).floor() as usize).min(map.width - 1),
            )
        })
        .collect();
    let mut best = vec![f64::INFINITY; map.count];
    let outside: Vec<bool> = anchors
        .iter()
        .enumerate()
        .map(|(k, &(r, c))| map.label(r, c) != k)
        .collect();
    if outside.iter().any(|&o| o) {
        for (i, &l) in map.labels.iter().enumerate() {
            if !outside[l] {
                continue;
            }
            let (r, c) = ((i / map.width) as f64, (i % map.width) as f64);
            let d = (r - centroids[l].0).powi(2) + (c - centroids[l].1).powi(2);
            if d < best[l] {
                best[l] = d;
                anchors[l] = (i / map.width, i % map.width);
            }
        }
    }
    anchors
}
