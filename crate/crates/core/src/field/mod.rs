//! Composite subsolutions: the zero state plus a finite list of waves.
//!
//! A composite field solves the linear system exactly, because every wave
//! does; only the pointwise constraint is measured numerically, through the
//! functionals `J = ∫ dist²(z, K_y)` and `I = ∫ |z|²` on a midpoint grid.

mod format;

pub use format::{deserialize, serialize, to_string, FormatError, FORMAT_VERSION};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::constraint::{dist_to_k, ConstraintError, ConstraintParams, SphereLattice};
use crate::quadrature::{deterministic_sum, Estimate, QuadratureError, UniformGrid};
use crate::state::StateVector;
use crate::waves::{fd_residual, WaveSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("wave {index} has dimension {found}, field has {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("wave {index} is not contained in U")]
    OutsideDomain { index: usize },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
}

/// Constraint-sampling lattice recorded with a field so that certification
/// can be repeated exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sampling {
    pub count: usize,
    pub seed: Option<u64>,
}

impl Sampling {
    pub fn default_for(d: usize, seed: Option<u64>) -> Self {
        Self {
            count: if d == 2 { 64 } else { 256 },
            seed,
        }
    }

    pub fn lattice(&self, d: usize) -> Result<SphereLattice, ConstraintError> {
        SphereLattice::new(d, self.count, self.seed)
    }
}

/// Anything that can be evaluated pointwise as a state field.
pub trait Evaluator: Sync {
    fn d(&self) -> usize;

    /// Overwrites `out` with the state at `y`.
    fn eval_into(&self, y: &[f64], out: &mut [f64]);

    /// Fails when `grid` is too coarse for the field.
    fn check_grid(&self, _grid: &UniformGrid) -> Result<(), QuadratureError> {
        Ok(())
    }
}

// buckets per axis of the spatial index
const BUCKETS_2D: usize = 16;
const BUCKETS_3D: usize = 8;

/// Uniform bucket grid over the bounding box of `U`, listing the waves whose
/// ball meets each bucket in ascending index order.
#[derive(Debug, Clone, PartialEq)]
struct WaveIndex {
    lo: Vec<f64>,
    width: Vec<f64>,
    per_axis: usize,
    buckets: Vec<Vec<u32>>,
}

impl WaveIndex {
    fn new(params: &ConstraintParams) -> Self {
        let (t0, t1) = params.profile().interval();
        let mut lo = vec![t0];
        lo.extend_from_slice(params.omega().lo());
        let mut hi = vec![t1];
        hi.extend_from_slice(params.omega().hi());
        let per_axis = if params.d() == 2 {
            BUCKETS_2D
        } else {
            BUCKETS_3D
        };
        let width = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| (b - a) / per_axis as f64)
            .collect();
        Self {
            lo,
            width,
            per_axis,
            buckets: vec![Vec::new(); per_axis.pow((params.d() + 1) as u32)],
        }
    }

    fn axis_range(&self, j: usize, a: f64, b: f64) -> (usize, usize) {
        let last = self.per_axis - 1;
        let clamp = |v: f64| (v.floor().max(0.0) as usize).min(last);
        (
            clamp((a - self.lo[j]) / self.width[j]),
            clamp((b - self.lo[j]) / self.width[j]),
        )
    }

    fn insert(&mut self, id: u32, w: &WaveSpec) {
        let dim = self.lo.len();
        let c = w.center();
        let r = w.radius();
        let ranges: Vec<(usize, usize)> = (0..dim)
            .map(|j| self.axis_range(j, c[j] - r, c[j] + r))
            .collect();
        let mut cur: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        loop {
            let idx = cur.iter().fold(0, |acc, &i| acc * self.per_axis + i);
            self.buckets[idx].push(id);
            let mut j = dim;
            loop {
                if j == 0 {
                    return;
                }
                j -= 1;
                if cur[j] < ranges[j].1 {
                    cur[j] += 1;
                    break;
                }
                cur[j] = ranges[j].0;
            }
        }
    }

    fn bucket(&self, y: &[f64]) -> Option<&[u32]> {
        let mut idx = 0;
        for j in 0..self.lo.len() {
            let s = (y[j] - self.lo[j]) / self.width[j];
            if !(s >= 0.0) || s >= self.per_axis as f64 {
                return None;
            }
            idx = idx * self.per_axis + s as usize;
        }
        Some(&self.buckets[idx])
    }
}

/// A subsolution `z = Σ_i w_i` over the problem data `params`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeField {
    params: ConstraintParams,
    sampling: Sampling,
    waves: Vec<WaveSpec>,
    index: WaveIndex,
}

impl CompositeField {
    /// The zero subsolution.
    pub fn empty(params: ConstraintParams, sampling: Sampling) -> Self {
        let index = WaveIndex::new(&params);
        Self {
            params,
            sampling,
            waves: Vec::new(),
            index,
        }
    }

    /// Field with the given waves; each ball must lie inside `U`.
    pub fn new(
        params: ConstraintParams,
        sampling: Sampling,
        waves: Vec<WaveSpec>,
    ) -> Result<Self, FieldError> {
        let mut f = Self::empty(params, sampling);
        f.extend(waves)?;
        Ok(f)
    }

    /// Appends waves, keeping the existing ones untouched.
    pub fn extend(&mut self, waves: Vec<WaveSpec>) -> Result<(), FieldError> {
        for w in waves {
            let index = self.waves.len();
            if w.d() != self.params.d() {
                return Err(FieldError::DimensionMismatch {
                    index,
                    expected: self.params.d(),
                    found: w.d(),
                });
            }
            if !ball_inside_u(&self.params, w.center(), w.radius()) {
                return Err(FieldError::OutsideDomain { index });
            }
            self.index.insert(index as u32, &w);
            self.waves.push(w);
        }
        Ok(())
    }

    pub fn params(&self) -> &ConstraintParams {
        &self.params
    }

    pub fn sampling(&self) -> Sampling {
        self.sampling
    }

    pub fn waves(&self) -> &[WaveSpec] {
        &self.waves
    }

    pub fn len(&self) -> usize {
        self.waves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waves.is_empty()
    }

    pub fn d(&self) -> usize {
        self.params.d()
    }

    /// Sum of every wave whose ball contains `y`.
    pub fn eval(&self, y: &[f64]) -> StateVector {
        let mut out = vec![0.0; 2 * self.d() + 1];
        self.eval_into(y, &mut out);
        StateVector::from_vec(out)
    }
}

impl Evaluator for CompositeField {
    fn d(&self) -> usize {
        self.params.d()
    }

    #[inline]
    fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        if let Some(ids) = self.index.bucket(y) {
            for &id in ids {
                self.waves[id as usize].add_to(y, out);
            }
        }
    }

    fn check_grid(&self, grid: &UniformGrid) -> Result<(), QuadratureError> {
        for w in &self.waves {
            grid.check_resolves(w.radius(), w.k())?;
        }
        Ok(())
    }
}

/// `field_eval`: value of the composite field at `y`.
pub fn field_eval(field: &CompositeField, y: &[f64]) -> StateVector {
    field.eval(y)
}

/// Whether the open ball `B_r(c)` lies in `U` (up to rounding).
pub fn ball_inside_u(params: &ConstraintParams, c: &[f64], r: f64) -> bool {
    let (t0, t1) = params.profile().interval();
    let slack = 1e-12 * (1.0 + r);
    let om = params.omega();
    c[0] - r >= t0 - slack
        && c[0] + r <= t1 + slack
        && (0..params.d())
            .all(|i| c[i + 1] - r >= om.lo()[i] - slack && c[i + 1] + r <= om.hi()[i] + slack)
}

/// Midpoint grid over `U` with `nt` time cells and `nx` cells per space axis.
pub fn u_grid(
    params: &ConstraintParams,
    nt: usize,
    nx: usize,
) -> Result<UniformGrid, QuadratureError> {
    let (t0, t1) = params.profile().interval();
    let mut lo = vec![t0];
    lo.extend_from_slice(params.omega().lo());
    let mut hi = vec![t1];
    hi.extend_from_slice(params.omega().hi());
    let mut counts = vec![nt];
    counts.extend(std::iter::repeat(nx).take(params.d()));
    UniformGrid::new(&lo, &hi, &counts)
}

fn integrate<E, F>(ev: &E, grid: &UniformGrid, integrand: F) -> f64
where
    E: Evaluator + ?Sized,
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    let dim = grid.dim();
    let n = 2 * ev.d() + 1;
    let sum = deterministic_sum(grid.len(), |i| {
        let mut y = [0.0; 4];
        grid.node(i, &mut y[..dim]);
        let mut z = [0.0; 7];
        ev.eval_into(&y[..dim], &mut z[..n]);
        integrand(&z[..n], &y[..dim])
    });
    sum * grid.cell_volume()
}

/// `J = ∫_U dist²(z, K_y)` on `grid` only.
pub fn j_value<E: Evaluator + ?Sized>(
    ev: &E,
    params: &ConstraintParams,
    grid: &UniformGrid,
) -> Result<f64, FieldError> {
    ev.check_grid(grid)?;
    Ok(integrate(ev, grid, |z, y| dist_to_k(z, y, params).powi(2)))
}

/// `J` with a Richardson error estimate from one 2× refinement.
pub fn j_functional<E: Evaluator + ?Sized>(
    ev: &E,
    params: &ConstraintParams,
    grid: &UniformGrid,
) -> Result<Estimate, FieldError> {
    let coarse = j_value(ev, params, grid)?;
    let fine = j_value(ev, params, &grid.refined(2))?;
    Ok(Estimate::richardson(coarse, fine))
}

/// `I = ∫_U |z|²` on `grid` only.
pub fn i_value<E: Evaluator + ?Sized>(ev: &E, grid: &UniformGrid) -> Result<f64, FieldError> {
    ev.check_grid(grid)?;
    Ok(integrate(ev, grid, |z, _| z.iter().map(|v| v * v).sum()))
}

/// `I` with a Richardson error estimate.
pub fn i_functional<E: Evaluator + ?Sized>(
    ev: &E,
    grid: &UniformGrid,
) -> Result<Estimate, FieldError> {
    let coarse = i_value(ev, grid)?;
    let fine = i_value(ev, &grid.refined(2))?;
    Ok(Estimate::richardson(coarse, fine))
}

/// One row of an energy profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySample {
    pub t: f64,
    /// Prescribed `E(t)`.
    pub target: f64,
    /// `𝓔(t) = ∫_Ω u²(t, x) dx`.
    pub actual: f64,
    /// Richardson estimate of the spatial quadrature error.
    pub error: f64,
}

fn slice_energy<E: Evaluator + ?Sized>(ev: &E, grid: &UniformGrid, t: f64) -> f64 {
    let dim = grid.dim();
    let n = 2 * ev.d() + 1;
    let per = grid.slice_len();
    let sum = deterministic_sum(per, |i| {
        let mut y = [0.0; 4];
        grid.node(i, &mut y[..dim]);
        y[0] = t;
        let mut z = [0.0; 7];
        ev.eval_into(&y[..dim], &mut z[..n]);
        z[0] * z[0]
    });
    sum * grid.cell_volume() / grid.widths()[0]
}

/// `𝓔(t)` at every time node of `grid`, with error estimates from a 2×
/// spatial refinement.
pub fn energy_profile<E: Evaluator + ?Sized>(
    ev: &E,
    params: &ConstraintParams,
    grid: &UniformGrid,
) -> Result<Vec<EnergySample>, FieldError> {
    ev.check_grid(grid)?;
    let fine = {
        let mut counts = grid.counts().to_vec();
        counts.iter_mut().skip(1).for_each(|c| *c *= 2);
        let lo = grid.lo().to_vec();
        let hi: Vec<f64> = (0..grid.dim())
            .map(|j| lo[j] + grid.widths()[j] * grid.counts()[j] as f64)
            .collect();
        UniformGrid::new(&lo, &hi, &counts)?
    };
    Ok((0..grid.counts()[0])
        .map(|i| {
            let t = grid.coord(0, i);
            let actual = slice_energy(ev, grid, t);
            let refined = slice_energy(ev, &fine, t);
            EnergySample {
                t,
                target: params.profile().eval(t),
                actual,
                error: (4.0 / 3.0) * (actual - refined).abs(),
            }
        })
        .collect())
}

/// `∫_I (E − 𝓔) dt` by the midpoint rule over the profile samples.
pub fn energy_gap(profile: &[EnergySample], dt: f64) -> f64 {
    profile.iter().map(|s| s.target - s.actual).sum::<f64>() * dt
}

/// Largest finite-difference residuals of both linear equations over
/// `samples` seeded random points of `U`.
pub fn pde_residual<E: Evaluator + ?Sized>(
    ev: &E,
    params: &ConstraintParams,
    samples: usize,
    h: f64,
    seed: u64,
) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (t0, t1) = params.profile().interval();
    let om = params.omega();
    let (mut m1, mut m2) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let mut y = vec![rng.gen_range(t0..t1)];
        for i in 0..params.d() {
            y.push(rng.gen_range(om.lo()[i]..om.hi()[i]));
        }
        let (r1, r2) = fd_residual(|p, out| ev.eval_into(p, out), ev.d(), &y, h);
        m1 = m1.max(r1.abs());
        m2 = m2.max(r2.abs());
    }
    (m1, m2)
}
