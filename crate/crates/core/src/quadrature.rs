//! Midpoint tensor grids and reproducible reductions.
//!
//! Sums are split into fixed-size chunks whose partial sums are combined in
//! index order, so results do not depend on the number of worker threads.

use rayon::prelude::*;
use thiserror::Error;

/// Items per reduction chunk; fixed so that rounding is thread-independent.
pub const CHUNK: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("grid needs at least one cell per axis and a non-degenerate box")]
    Degenerate,
    #[error(
        "grid does not resolve a wave of radius {radius} at frequency {k}: \
         cell width {width} exceeds {limit}"
    )]
    Unresolved {
        radius: f64,
        k: u32,
        width: f64,
        limit: f64,
    },
}

/// Value of a quadrature together with a Richardson error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    /// Midpoint-rule estimate from values on a grid and its 2× refinement.
    pub fn richardson(coarse: f64, fine: f64) -> Self {
        Self {
            value: coarse,
            error: (4.0 / 3.0) * (coarse - fine).abs(),
        }
    }
}

/// Order-independent-of-threads sum of `f(0) + … + f(len − 1)`.
pub fn deterministic_sum<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let chunks = len.div_ceil(CHUNK);
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let end = ((c + 1) * CHUNK).min(len);
            (c * CHUNK..end).map(&f).sum::<f64>()
        })
        .collect();
    partial.iter().sum()
}

/// Like [`deterministic_sum`] but accumulates `W` sums at once.
pub fn deterministic_sums<const W: usize, F>(len: usize, f: F) -> [f64; W]
where
    F: Fn(usize) -> [f64; W] + Sync,
{
    let chunks = len.div_ceil(CHUNK);
    let partial: Vec<[f64; W]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let end = ((c + 1) * CHUNK).min(len);
            let mut acc = [0.0; W];
            for i in c * CHUNK..end {
                let v = f(i);
                for w in 0..W {
                    acc[w] += v[w];
                }
            }
            acc
        })
        .collect();
    let mut total = [0.0; W];
    for p in &partial {
        for w in 0..W {
            total[w] += p[w];
        }
    }
    total
}

/// Midpoint grid of `counts[j]` cells along axis `j` of the box `[lo, hi]`.
///
/// Nodes are numbered with the first axis varying slowest, so every slice
/// of constant first coordinate is a contiguous index range.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformGrid {
    lo: Vec<f64>,
    width: Vec<f64>,
    counts: Vec<usize>,
}

impl UniformGrid {
    pub fn new(lo: &[f64], hi: &[f64], counts: &[usize]) -> Result<Self, QuadratureError> {
        if lo.len() != hi.len() || lo.len() != counts.len() || lo.is_empty() {
            return Err(QuadratureError::Degenerate);
        }
        let mut width = Vec::with_capacity(lo.len());
        for j in 0..lo.len() {
            if counts[j] == 0 || !(hi[j] > lo[j]) || !lo[j].is_finite() || !hi[j].is_finite() {
                return Err(QuadratureError::Degenerate);
            }
            width.push((hi[j] - lo[j]) / counts[j] as f64);
        }
        Ok(Self {
            lo: lo.to_vec(),
            width,
            counts: counts.to_vec(),
        })
    }

    /// Cube `[c − r, c + r]^D` with `cells` cells per axis.
    pub fn ball_box(center: &[f64], r: f64, cells: usize) -> Result<Self, QuadratureError> {
        let lo: Vec<f64> = center.iter().map(|c| c - r).collect();
        let hi: Vec<f64> = center.iter().map(|c| c + r).collect();
        Self::new(&lo, &hi, &vec![cells; center.len()])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn widths(&self) -> &[f64] {
        &self.width
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn max_width(&self) -> f64 {
        self.width.iter().copied().fold(0.0, f64::max)
    }

    pub fn cell_volume(&self) -> f64 {
        self.width.iter().product()
    }

    /// Nodes per slice of constant first coordinate.
    pub fn slice_len(&self) -> usize {
        self.counts[1..].iter().product()
    }

    /// Coordinate of node `i` along axis `j`.
    #[inline]
    pub fn coord(&self, j: usize, i: usize) -> f64 {
        self.lo[j] + (i as f64 + 0.5) * self.width[j]
    }

    /// Writes the coordinates of node `idx` into `out`.
    #[inline]
    pub fn node(&self, mut idx: usize, out: &mut [f64]) {
        for j in (0..self.dim()).rev() {
            let c = self.counts[j];
            out[j] = self.coord(j, idx % c);
            idx /= c;
        }
    }

    pub fn node_vec(&self, idx: usize) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.node(idx, &mut y);
        y
    }

    /// Index of the cell containing `y`, if any.
    pub fn locate(&self, y: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for j in 0..self.dim() {
            let s = (y[j] - self.lo[j]) / self.width[j];
            if !(s >= 0.0) || s >= self.counts[j] as f64 {
                return None;
            }
            idx = idx * self.counts[j] + s as usize;
        }
        Some(idx)
    }

    /// Grid with every axis subdivided `factor` times.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            lo: self.lo.clone(),
            width: self.width.iter().map(|w| w / factor as f64).collect(),
            counts: self.counts.iter().map(|c| c * factor).collect(),
        }
    }

    /// Whether every cell width is at most `r/(8k)`.
    pub fn resolves(&self, r: f64, k: u32) -> bool {
        self.max_width() <= r / (8.0 * k as f64)
    }

    pub fn check_resolves(&self, r: f64, k: u32) -> Result<(), QuadratureError> {
        if self.resolves(r, k) {
            Ok(())
        } else {
            Err(QuadratureError::Unresolved {
                radius: r,
                k,
                width: self.max_width(),
                limit: r / (8.0 * k as f64),
            })
        }
    }

    /// Largest frequency a wave of radius `r` may carry on this grid.
    pub fn max_frequency(&self, r: f64) -> u32 {
        let k = (r / (8.0 * self.max_width())).floor();
        if k >= u32::MAX as f64 {
            u32::MAX
        } else {
            k as u32
        }
    }

    /// Indices of nodes strictly inside the open ball `B_r(c)`, ascending.
    pub fn nodes_in_ball(&self, c: &[f64], r: f64) -> Vec<usize> {
        let dim = self.dim();
        let mut lo_i = vec![0usize; dim];
        let mut hi_i = vec![0usize; dim];
        for j in 0..dim {
            let a = ((c[j] - r - self.lo[j]) / self.width[j] - 0.5)
                .ceil()
                .max(0.0);
            let b = ((c[j] + r - self.lo[j]) / self.width[j] - 0.5)
                .floor()
                .min(self.counts[j] as f64 - 1.0);
            if b < a {
                return Vec::new();
            }
            lo_i[j] = a as usize;
            hi_i[j] = b as usize;
        }
        let mut out = Vec::new();
        let mut cur = lo_i.clone();
        let r2 = r * r;
        loop {
            let mut d2 = 0.0;
            let mut idx = 0;
            for j in 0..dim {
                let v = self.coord(j, cur[j]) - c[j];
                d2 += v * v;
                idx = idx * self.counts[j] + cur[j];
            }
            if d2 < r2 {
                out.push(idx);
            }
            // odometer increment, last axis fastest
            let mut j = dim;
            loop {
                if j == 0 {
                    return out;
                }
                j -= 1;
                if cur[j] < hi_i[j] {
                    cur[j] += 1;
                    break;
                }
                cur[j] = lo_i[j];
            }
        }
    }
}

/// Volume of the Euclidean ball of radius `r` in ℝ^`dim`.
pub fn ball_volume(dim: usize, r: f64) -> f64 {
    let unit = match dim {
        0 => 1.0,
        1 => 2.0,
        _ => {
            // V_n = 2π/n · V_{n−2}
            let mut v = if dim % 2 == 0 { 1.0 } else { 2.0 };
            let mut k = if dim % 2 == 0 { 2 } else { 3 };
            while k <= dim {
                v *= 2.0 * std::f64::consts::PI / k as f64;
                k += 2;
            }
            v
        }
    };
    unit * r.powi(dim as i32)
}
