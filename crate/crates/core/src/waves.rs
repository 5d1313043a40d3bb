//! Localized plane waves: compactly supported exact solutions of
//! `∂_t u + div_x m = 0`, `div_x b = 0` oscillating along a chosen
//! amplitude direction `z̄ = (ū, m̄, b̄)`.
//!
//! In local coordinates `ξ = (y − y₀)/r` a wave is
//! `w(ξ) = z̄ φ(ξ) cos(ω n̂·ξ) + Π(ξ)·G(∇φ(ξ))`, with `Π = sin(ω n̂·ξ)/ω`,
//! `ω = 2πk` and `G` a linear map fixed by the construction branch. The
//! first term dominates; the second is what makes the field divergence-free
//! and is `O(1/k)`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::quadrature::{ball_volume, deterministic_sum, QuadratureError, UniformGrid};
use crate::state::StateVector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveError {
    #[error("wave radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("wave frequency must be at least 1")]
    InvalidFrequency,
    #[error("spatial dimension {0} is not supported (expected 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite wave parameter")]
    NonFinite,
    #[error("amplitude lies outside the planar wave cone: ū = 0 while m̄ ≠ 0")]
    OutsideWaveCone,
    #[error("quadrature has {cells} cells per axis, frequency needs at least {required}")]
    UnderResolved { cells: usize, required: usize },
    #[error("wave invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Which construction produced the wave.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `d ≥ 3`: purely spatial oscillation direction `n ⟂ m̄, b̄`.
    General,
    /// `d = 2`: space-time direction with `n_x = −b̄^⊥`, requires `ū ≠ 0`
    /// whenever `m̄ ≠ 0`.
    Planar,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::General => "general",
            Branch::Planar => "planar",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "general" => Some(Branch::General),
            "planar" => Some(Branch::Planar),
            _ => None,
        }
    }
}

/// Smooth radial cutoff: value and `dφ/dρ` at radius `rho`.
///
/// `φ = 1` for `ρ ≤ 1/2`, `φ = 0` for `ρ ≥ 1`, and in between the smooth
/// step `h(1−s)/(h(1−s) + h(s))`, `s = 2ρ − 1`, `h(x) = e^{−1/x}`. Every
/// derivative is continuous across both shells.
pub fn cutoff_radial(rho: f64) -> (f64, f64) {
    if rho <= 0.5 {
        return (1.0, 0.0);
    }
    if rho >= 1.0 {
        return (0.0, 0.0);
    }
    let s = 2.0 * rho - 1.0;
    let a = (-1.0 / (1.0 - s)).exp();
    let b = (-1.0 / s).exp();
    let sum = a + b;
    let phi = a / sum;
    if a == 0.0 || b == 0.0 {
        return (phi, 0.0);
    }
    let w = 1.0 / ((1.0 - s) * (1.0 - s)) + 1.0 / (s * s);
    let dphi_ds = -(a / sum) * (b / sum) * w;
    (phi, 2.0 * dphi_ds)
}

/// Cutoff value and gradient at a point of `ℝ^D`.
pub fn cutoff_eval(xi: &[f64]) -> (f64, Vec<f64>) {
    let rho = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (phi, dphi) = cutoff_radial(rho);
    let grad = if dphi == 0.0 {
        vec![0.0; xi.len()]
    } else {
        xi.iter().map(|v| dphi * v / rho).collect()
    };
    (phi, grad)
}

/// One localized plane wave with its cached oscillation geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveSpec {
    d: usize,
    center: Vec<f64>,
    radius: f64,
    k: u32,
    zbar: Vec<f64>,
    branch: Branch,
    nhat: [f64; 4],
    // planar only: potential direction with n̂ × A = (ū, m̄)
    avec: [f64; 3],
    // planar only: |n| before normalization, multiplies the b-potential
    bscale: f64,
}

const INVARIANT_TOL: f64 = 1e-9;

impl WaveSpec {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn zbar(&self) -> &[f64] {
        &self.zbar
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    /// Unit oscillation direction in space-time.
    pub fn nhat(&self) -> &[f64] {
        &self.nhat[..self.d + 1]
    }

    pub fn potential(&self) -> &[f64; 3] {
        &self.avec
    }

    pub fn bscale(&self) -> f64 {
        self.bscale
    }

    /// Phase frequency `2πk` in local coordinates.
    pub fn omega(&self) -> f64 {
        2.0 * PI * self.k as f64
    }

    /// Whether `y` lies in the open support ball.
    pub fn contains(&self, y: &[f64]) -> bool {
        let r2: f64 = y
            .iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        r2 < self.radius * self.radius
    }

    /// Rebuilds a wave from stored geometry, checking every invariant.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        branch: Branch,
        center: Vec<f64>,
        radius: f64,
        k: u32,
        zbar: Vec<f64>,
        nhat: Vec<f64>,
        avec: Option<[f64; 3]>,
        bscale: f64,
    ) -> Result<Self, WaveError> {
        let d = center
            .len()
            .checked_sub(1)
            .ok_or(WaveError::UnsupportedDimension(0))?;
        check_basic(d, &center, radius, k, &zbar)?;
        if nhat.len() != d + 1 {
            return Err(WaveError::DimensionMismatch {
                expected: d + 1,
                found: nhat.len(),
            });
        }
        if nhat.iter().any(|v| !v.is_finite()) || !bscale.is_finite() {
            return Err(WaveError::NonFinite);
        }
        let mut nh = [0.0; 4];
        nh[..d + 1].copy_from_slice(&nhat);
        let spec = Self {
            d,
            center,
            radius,
            k,
            zbar,
            branch,
            nhat: nh,
            avec: avec.unwrap_or([0.0; 3]),
            bscale,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the geometric invariants of the cached fields.
    pub fn validate(&self) -> Result<(), WaveError> {
        let d = self.d;
        let nh = self.nhat();
        let len = nh.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (len - 1.0).abs() > INVARIANT_TOL {
            return Err(WaveError::Invariant(format!("|n̂| = {len}, expected 1")));
        }
        let scale = 1.0 + self.zbar.iter().map(|v| v * v).sum::<f64>().sqrt();
        let tol = INVARIANT_TOL * scale;
        let (abar, bbar) = (&self.zbar[..=d], &self.zbar[d + 1..]);
        match self.branch {
            Branch::General => {
                if d < 3 {
                    return Err(WaveError::Invariant("general branch needs d ≥ 3".into()));
                }
                if nh[0] != 0.0 {
                    return Err(WaveError::Invariant(
                        "n̂ must have zero time component".into(),
                    ));
                }
                let nm: f64 = (0..d).map(|i| nh[i + 1] * abar[i + 1]).sum();
                let nb: f64 = (0..d).map(|i| nh[i + 1] * bbar[i]).sum();
                if nm.abs() > tol || nb.abs() > tol {
                    return Err(WaveError::Invariant(
                        "n must be orthogonal to m̄ and b̄".into(),
                    ));
                }
            }
            Branch::Planar => {
                if d != 2 {
                    return Err(WaveError::Invariant("planar branch needs d = 2".into()));
                }
                let na: f64 = (0..3).map(|i| nh[i] * abar[i]).sum();
                if na.abs() > tol {
                    return Err(WaveError::Invariant(
                        "n̂ must be orthogonal to (ū, m̄)".into(),
                    ));
                }
                let c = cross(&[nh[0], nh[1], nh[2]], &self.avec);
                if (0..3).any(|i| (c[i] - abar[i]).abs() > tol) {
                    return Err(WaveError::Invariant("n̂ × A must equal (ū, m̄)".into()));
                }
                if self.bscale < 0.0 {
                    return Err(WaveError::Invariant("b-scale must be non-negative".into()));
                }
                let bp = [-self.bscale * nh[2], self.bscale * nh[1]];
                if (bp[0] - bbar[0]).abs() > tol || (bp[1] - bbar[1]).abs() > tol {
                    return Err(WaveError::Invariant("|n|·n̂_x^⊥ must equal b̄".into()));
                }
                if (self.zbar[0] == 0.0) && (abar[1] != 0.0 || abar[2] != 0.0) {
                    return Err(WaveError::OutsideWaveCone);
                }
            }
        }
        Ok(())
    }

    /// Adds the wave value at `y` to `out`; returns whether `y` is inside
    /// the support.
    #[inline]
    pub fn add_to(&self, y: &[f64], out: &mut [f64]) -> bool {
        let d = self.d;
        let dd = d + 1;
        let inv_r = 1.0 / self.radius;
        let mut xi = [0.0; 4];
        let mut rho2 = 0.0;
        for j in 0..dd {
            xi[j] = (y[j] - self.center[j]) * inv_r;
            rho2 += xi[j] * xi[j];
        }
        if rho2 >= 1.0 {
            return false;
        }
        let rho = rho2.sqrt();
        let (phi, dphi) = cutoff_radial(rho);
        let omega = self.omega();
        let mut phase = 0.0;
        for j in 0..dd {
            phase += self.nhat[j] * xi[j];
        }
        let (sn, cs) = (omega * phase).sin_cos();
        let lead = phi * cs;
        for (o, z) in out.iter_mut().zip(&self.zbar) {
            *o += lead * z;
        }
        if dphi == 0.0 {
            return true;
        }
        let pi_k = sn / omega;
        let mut g = [0.0; 4];
        for j in 0..dd {
            g[j] = dphi * xi[j] / rho;
        }
        let z = &self.zbar;
        match self.branch {
            Branch::General => {
                // a = ā(n̂·g) − n̂(ā·g), b = b̄(n·g_x) − n(b̄·g_x)
                let ng: f64 = (0..dd).map(|j| self.nhat[j] * g[j]).sum();
                let ag: f64 = (0..dd).map(|j| z[j] * g[j]).sum();
                let bg: f64 = (0..d).map(|i| z[dd + i] * g[i + 1]).sum();
                for j in 0..dd {
                    out[j] += pi_k * (z[j] * ng - self.nhat[j] * ag);
                }
                for i in 0..d {
                    out[dd + i] += pi_k * (z[dd + i] * ng - self.nhat[i + 1] * bg);
                }
            }
            Branch::Planar => {
                let c = cross(&[g[0], g[1], g[2]], &self.avec);
                for j in 0..3 {
                    out[j] += pi_k * c[j];
                }
                out[3] += pi_k * self.bscale * (-g[2]);
                out[4] += pi_k * self.bscale * g[1];
            }
        }
        true
    }
}

#[inline]
fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn check_basic(d: usize, center: &[f64], r: f64, k: u32, zbar: &[f64]) -> Result<(), WaveError> {
    if !(d == 2 || d == 3) {
        return Err(WaveError::UnsupportedDimension(d));
    }
    if zbar.len() != 2 * d + 1 {
        return Err(WaveError::DimensionMismatch {
            expected: 2 * d + 1,
            found: zbar.len(),
        });
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(WaveError::InvalidRadius(r));
    }
    if k == 0 {
        return Err(WaveError::InvalidFrequency);
    }
    if center.iter().chain(zbar).any(|v| !v.is_finite()) {
        return Err(WaveError::NonFinite);
    }
    Ok(())
}

/// First unit vector of the coordinate basis surviving Gram–Schmidt against
/// `span`, re-orthogonalized once for accuracy.
fn first_survivor(dim: usize, span: &[&[f64]]) -> Vec<f64> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in span {
        let scale = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if scale == 0.0 {
            continue;
        }
        let mut w: Vec<f64> = v.to_vec();
        for _ in 0..2 {
            for q in &basis {
                let p: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
                w.iter_mut().zip(q).for_each(|(a, b)| *a -= p * b);
            }
        }
        let len = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 1e-12 * scale {
            basis.push(w.iter().map(|x| x / len).collect());
        }
    }
    let mut best: Option<Vec<f64>> = None;
    let mut best_len = 0.0;
    for j in 0..dim {
        let mut w = vec![0.0; dim];
        w[j] = 1.0;
        for _ in 0..2 {
            for q in &basis {
                let p: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
                w.iter_mut().zip(q).for_each(|(a, b)| *a -= p * b);
            }
        }
        let len = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 1e-3 {
            return w.iter().map(|x| x / len).collect();
        }
        if len > best_len {
            best_len = len;
            best = Some(w.iter().map(|x| x / len).collect());
        }
    }
    best.expect("the span has dimension below the ambient dimension")
}

/// Builds the wave with amplitude `zbar` on `B_r(center)` at frequency `k`.
pub fn make_wave(
    zbar: &[f64],
    center: &[f64],
    r: f64,
    k: u32,
    d: usize,
) -> Result<WaveSpec, WaveError> {
    if center.len() != d + 1 {
        return Err(WaveError::DimensionMismatch {
            expected: d + 1,
            found: center.len(),
        });
    }
    check_basic(d, center, r, k, zbar)?;
    let abar = &zbar[..=d];
    let bbar = &zbar[d + 1..];
    let mut nhat = [0.0; 4];
    let mut avec = [0.0; 3];
    let mut bscale = 0.0;
    let branch = if d == 2 {
        let (u, m) = (zbar[0], [zbar[1], zbar[2]]);
        if u == 0.0 && (m[0] != 0.0 || m[1] != 0.0) {
            return Err(WaveError::OutsideWaveCone);
        }
        let n: Vec<f64> = if bbar[0] != 0.0 || bbar[1] != 0.0 {
            // n_x = −b̄^⊥ with ⊥(a, b) = (−b, a)
            let nx = [bbar[1], -bbar[0]];
            let nt = if u != 0.0 {
                -(nx[0] * m[0] + nx[1] * m[1]) / u
            } else {
                0.0
            };
            let raw = [nt, nx[0], nx[1]];
            let len = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
            bscale = len;
            raw.iter().map(|v| v / len).collect()
        } else {
            first_survivor(3, &[abar])
        };
        nhat[..3].copy_from_slice(&n);
        let a3 = [abar[0], abar[1], abar[2]];
        avec = cross(&a3, &[n[0], n[1], n[2]]);
        Branch::Planar
    } else {
        let n = first_survivor(d, &[&abar[1..], bbar]);
        nhat[1..=d].copy_from_slice(&n);
        Branch::General
    };
    let spec = WaveSpec {
        d,
        center: center.to_vec(),
        radius: r,
        k,
        zbar: zbar.to_vec(),
        branch,
        nhat,
        avec,
        bscale,
    };
    spec.validate()?;
    Ok(spec)
}

/// Wave value at `y`; zero outside the support ball.
pub fn wave_eval(spec: &WaveSpec, y: &[f64]) -> StateVector {
    let mut out = vec![0.0; 2 * spec.d + 1];
    spec.add_to(y, &mut out);
    StateVector::from_vec(out)
}

/// Central-difference residuals `(∂_t u + div_x m, div_x b)` of the field
/// `eval` at `y` with step `h`.
pub fn fd_residual<F>(eval: F, d: usize, y: &[f64], h: f64) -> (f64, f64)
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = 2 * d + 1;
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    let mut p = y.to_vec();
    let (mut r1, mut r2) = (0.0, 0.0);
    for j in 0..=d {
        p[j] = y[j] + h;
        plus.iter_mut().for_each(|v| *v = 0.0);
        eval(&p, &mut plus);
        p[j] = y[j] - h;
        minus.iter_mut().for_each(|v| *v = 0.0);
        eval(&p, &mut minus);
        p[j] = y[j];
        // component j of (u, m) pairs with coordinate j of (t, x)
        r1 += (plus[j] - minus[j]) / (2.0 * h);
        if j >= 1 {
            r2 += (plus[d + j] - minus[d + j]) / (2.0 * h);
        }
    }
    (r1, r2)
}

/// Finite-difference divergence residuals of one wave at `y`.
pub fn divergence_residual(spec: &WaveSpec, y: &[f64], h: f64) -> (f64, f64) {
    fd_residual(
        |p, out| {
            spec.add_to(p, out);
        },
        spec.d,
        y,
        h,
    )
}

/// Fewest cells per axis of the ball box that resolve frequency `k`:
/// eight nodes per period along any direction.
pub fn min_cells(k: u32) -> usize {
    16 * k as usize
}

fn ball_grid(spec: &WaveSpec, cells: usize) -> Result<UniformGrid, WaveError> {
    let required = min_cells(spec.k);
    if cells < required {
        return Err(WaveError::UnderResolved { cells, required });
    }
    Ok(UniformGrid::ball_box(&spec.center, spec.radius, cells)?)
}

/// Midpoint-rule `∫|w|²` over the support, with `cells` cells per axis of
/// the enclosing cube.
pub fn l2_mass(spec: &WaveSpec, cells: usize) -> Result<f64, WaveError> {
    let grid = ball_grid(spec, cells)?;
    let n = 2 * spec.d + 1;
    let dim = spec.d + 1;
    let sum = deterministic_sum(grid.len(), |i| {
        let mut y = [0.0; 4];
        grid.node(i, &mut y[..dim]);
        let mut w = [0.0; 7];
        if spec.add_to(&y[..dim], &mut w[..n]) {
            w.iter().map(|v| v * v).sum()
        } else {
            0.0
        }
    });
    Ok(sum * grid.cell_volume())
}

/// Midpoint-rule `∫ w·ψ` over the support; `testfn` writes `ψ(y)`.
pub fn weak_pairing<F>(spec: &WaveSpec, testfn: F, cells: usize) -> Result<f64, WaveError>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let grid = ball_grid(spec, cells)?;
    let n = 2 * spec.d + 1;
    let dim = spec.d + 1;
    let sum = deterministic_sum(grid.len(), |i| {
        let mut y = [0.0; 4];
        grid.node(i, &mut y[..dim]);
        let mut w = [0.0; 7];
        if !spec.add_to(&y[..dim], &mut w[..n]) {
            return 0.0;
        }
        let mut psi = [0.0; 7];
        testfn(&y[..dim], &mut psi[..n]);
        w.iter().zip(&psi).map(|(a, b)| a * b).sum()
    });
    Ok(sum * grid.cell_volume())
}

/// `(|z̄|²/4)·vol(B_{r/2})` in space-time `ℝ^{d+1}`.
pub fn plane_wave_energy_bound(spec: &WaveSpec) -> f64 {
    let z2: f64 = spec.zbar.iter().map(|v| v * v).sum();
    0.25 * z2 * ball_volume(spec.d + 1, 0.5 * spec.radius)
}

/// Distance from `w` to the segment `[−z̄, z̄]`.
pub fn segment_distance(w: &[f64], zbar: &[f64]) -> f64 {
    let zz: f64 = zbar.iter().map(|v| v * v).sum();
    let t = if zz > 0.0 {
        (w.iter().zip(zbar).map(|(a, b)| a * b).sum::<f64>() / zz).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    w.iter()
        .zip(zbar)
        .map(|(a, b)| (a - t * b) * (a - t * b))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_values() {
        assert_eq!(cutoff_eval(&[0.0, 0.0, 0.0]), (1.0, vec![0.0; 3]));
        assert_eq!(cutoff_eval(&[1.0, 0.0, 0.0]), (0.0, vec![0.0; 3]));
        let (v, g) = cutoff_eval(&[0.75, 0.0, 0.0]);
        assert!((v - 0.5).abs() < 1e-15);
        assert!(g[0] < 0.0 && g[1] == 0.0 && g[2] == 0.0);
        for rho in [0.5 + 1e-300, 0.5 + 1e-9, 1.0 - 1e-9, 1.0 - 1e-300] {
            let (v, d) = cutoff_radial(rho);
            assert!(v.is_finite() && d.is_finite() && (0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn cutoff_gradient_matches_differences() {
        let h = 1e-5;
        for rho in [0.55, 0.6, 0.7, 0.75, 0.8, 0.9, 0.95] {
            let fd = (cutoff_radial(rho + h).0 - cutoff_radial(rho - h).0) / (2.0 * h);
            let (_, d) = cutoff_radial(rho);
            assert!(
                (fd - d).abs() < 1e-7 * (1.0 + d.abs()),
                "{rho}: {fd} vs {d}"
            );
        }
    }

    #[test]
    fn general_branch_direction() {
        let w = make_wave(&[1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0], &[0.0; 4], 1.0, 1, 3).unwrap();
        assert_eq!(w.branch(), Branch::General);
        assert_eq!(w.nhat(), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn planar_branch_cases() {
        let w = make_wave(&[1.0, 0.0, 0.0, 0.0, 0.0], &[0.0; 3], 1.0, 1, 2).unwrap();
        assert_eq!(w.nhat()[0], 0.0);
        let c = cross(&[w.nhat()[0], w.nhat()[1], w.nhat()[2]], w.potential());
        assert!((c[0] - 1.0).abs() < 1e-15 && c[1].abs() < 1e-15 && c[2].abs() < 1e-15);
        assert_eq!(
            make_wave(&[0.0, 1.0, 0.0, 0.0, 1.0], &[0.0; 3], 1.0, 1, 2),
            Err(WaveError::OutsideWaveCone)
        );
        let w = make_wave(&[0.5, 0.3, -0.2, 0.6, 0.8], &[0.0; 3], 1.0, 2, 2).unwrap();
        w.validate().unwrap();
    }

    #[test]
    fn center_value_and_support() {
        let z = [0.5, 0.3, -0.2, 0.6, 0.8];
        let w = make_wave(&z, &[0.3, 0.4, 0.5], 0.2, 3, 2).unwrap();
        assert_eq!(wave_eval(&w, &[0.3, 0.4, 0.5]).as_slice(), &z);
        assert!(wave_eval(&w, &[0.3, 0.6, 0.5]).is_zero());
        assert!(wave_eval(&w, &[0.3, 0.4, 0.75]).is_zero());
    }

    #[test]
    fn rejects_bad_parameters() {
        let z = [1.0, 0.0, 0.0, 0.0, 0.0];
        assert!(matches!(
            make_wave(&z, &[0.0; 3], 0.0, 1, 2),
            Err(WaveError::InvalidRadius(_))
        ));
        assert_eq!(
            make_wave(&z, &[0.0; 3], 1.0, 0, 2),
            Err(WaveError::InvalidFrequency)
        );
        assert!(matches!(
            make_wave(&z, &[0.0; 4], 1.0, 1, 2),
            Err(WaveError::DimensionMismatch { .. })
        ));
        let w = make_wave(&z, &[0.0; 3], 1.0, 1, 2).unwrap();
        assert!(matches!(
            l2_mass(&w, 8),
            Err(WaveError::UnderResolved { .. })
        ));
    }

    #[test]
    fn residual_is_small_for_unit_frequency() {
        let z = [0.5, 0.3, -0.2, 0.6, 0.8];
        let w = make_wave(&z, &[0.0; 3], 1.0, 1, 2).unwrap();
        let zn = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        for y in [[0.1, 0.6, 0.3], [-0.5, 0.2, 0.5], [0.3, -0.3, -0.7]] {
            let (r1, r2) = divergence_residual(&w, &y, 1e-4);
            assert!(r1.abs() <= 1e-5 * zn && r2.abs() <= 1e-5 * zn, "{r1} {r2}");
        }
        assert_eq!(divergence_residual(&w, &[2.0, 0.0, 0.0], 1e-3), (0.0, 0.0));
    }

    #[test]
    fn mass_is_quadratic() {
        let z = [0.5, 0.3, -0.2, 0.6, 0.8];
        let w1 = make_wave(&z, &[0.0; 3], 1.0, 1, 2).unwrap();
        let z2: Vec<f64> = z.iter().map(|v| 2.0 * v).collect();
        let w2 = make_wave(&z2, &[0.0; 3], 1.0, 1, 2).unwrap();
        let (a, b) = (l2_mass(&w1, 32).unwrap(), l2_mass(&w2, 32).unwrap());
        assert!((b - 4.0 * a).abs() < 1e-12 * b);
        let zero = make_wave(&[0.0; 5], &[0.0; 3], 1.0, 1, 2).unwrap();
        assert_eq!(l2_mass(&zero, 16).unwrap(), 0.0);
    }

    #[test]
    fn segment_distance_examples() {
        let z = [1.0, 0.0];
        assert_eq!(segment_distance(&[0.5, 0.0], &z), 0.0);
        assert_eq!(segment_distance(&[2.0, 0.0], &z), 1.0);
        assert_eq!(segment_distance(&[0.0, 3.0], &z), 3.0);
    }
}
