//! Convex-hull and Hausdorff-metric kernels over finite point clouds in ℝⁿ.
//!
//! Compact sets are represented by finite inner point clouds, so every
//! interior certificate produced here is conservative: a point certified
//! inside `conv(cloud)` is inside the hull of any superset of the cloud.

mod hull;
pub(crate) mod simplex;

pub use hull::{
    hull_membership, hull_stability_check, interior_margin, margin_at_least, ray_reach,
    segment_direction, HullCertificate, SegmentChoice, SegmentSearch, FEASIBILITY_TOL,
};

use thiserror::Error;

/// Largest ambient dimension supported by the hull kernels.
pub const MAX_DIM: usize = 9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite coordinate in point {index}")]
    NonFinite { index: usize },
    #[error("ambient dimension {0} is outside 1..={MAX_DIM}")]
    UnsupportedDimension(usize),
    #[error("feasibility solver hit its iteration cap; membership is indeterminate")]
    Indeterminate,
    #[error("point is not in the convex hull")]
    NotInHull,
    #[error("point lies on the hull boundary (interior margin is zero)")]
    NotInterior,
    #[error("segment bound not achieved: best |z̄|·2n/dist = {ratio:.6} < 1")]
    BoundNotAchieved { ratio: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// A non-empty finite set of points in ℝⁿ with a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    // row-major, one point per `dim` entries
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self, GeometryError> {
        let first = points.first().ok_or(GeometryError::EmptyCloud)?;
        let dim = first.len();
        let mut coords = Vec::with_capacity(dim * points.len());
        for (index, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(GeometryError::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(GeometryError::NonFinite { index });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords)
    }

    /// Builds a cloud from row-major coordinates.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self, GeometryError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(GeometryError::UnsupportedDimension(dim));
        }
        if coords.is_empty() {
            return Err(GeometryError::EmptyCloud);
        }
        if coords.len() % dim != 0 {
            return Err(GeometryError::DimensionMismatch {
                expected: dim,
                found: coords.len() % dim,
            });
        }
        if let Some(i) = coords.iter().position(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite { index: i / dim });
        }
        Ok(Self { dim, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for p in self.points() {
            for (ci, pi) in c.iter_mut().zip(p) {
                *ci += pi;
            }
        }
        let n = self.len() as f64;
        c.iter_mut().for_each(|v| *v /= n);
        c
    }

    /// Euclidean distance from `z` to the nearest cloud point.
    pub fn distance_to(&self, z: &[f64]) -> f64 {
        self.points()
            .map(|p| squared_distance(p, z))
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    /// Per-coordinate (min, max) bounds.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.points() {
            for j in 0..self.dim {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
        (lo, hi)
    }

    pub(crate) fn check_dim(&self, z: &[f64]) -> Result<(), GeometryError> {
        if z.len() != self.dim {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim,
                found: z.len(),
            });
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn directed_hausdorff(a: &PointCloud, b: &PointCloud) -> f64 {
    a.points()
        .map(|p| {
            b.points()
                .map(|q| squared_distance(p, q))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
        .sqrt()
}

/// Hausdorff distance `max(sup_a dist(a, B), sup_b dist(b, A))` by brute force.
pub fn hausdorff_distance(a: &PointCloud, b: &PointCloud) -> Result<f64, GeometryError> {
    if a.dim != b.dim {
        return Err(GeometryError::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    Ok(directed_hausdorff(a, b).max(directed_hausdorff(b, a)))
}
