//! The pointwise constraint family `y ↦ K_y` of the continuity system.
//!
//! Inside `U = I × Ω` the constraint set is
//! `K_y = {(σf, σf·β, β) : σ = ±1, |β| = 1}` with `f(y) = √F(y)` and
//! `F(t, x) = E(t)/|Ω|`; outside `U` it collapses to `{0}`.

use std::io::Read;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::geometry::{self, hausdorff_distance, GeometryError, PointCloud};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstraintError {
    #[error("invalid energy profile: {0}")]
    InvalidProfile(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("spatial dimension {0} is not supported (expected 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("degenerate constraint at y: f(y) = 0")]
    Degenerate,
    #[error("point lies outside U = I × Ω")]
    OutsideDomain,
    #[error("sample count {count} too small (need an even count ≥ {min})")]
    SampleCount { count: usize, min: usize },
    #[error("energy table: {0}")]
    Table(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Shape of the prescribed energy inside the interval.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    /// `E(t) = height` for `t > jump`, `0` for `t ≤ jump`.
    Step { height: f64, jump: f64 },
    /// `E(t) = amplitude · sin²(π (t − t0)/(t1 − t0))`.
    Bump { amplitude: f64 },
    /// Linear interpolation of `(t, E)` samples; zero outside the table.
    Table { times: Vec<f64>, values: Vec<f64> },
}

/// Prescribed energy `E(t)`, supported on the open interval `(t0, t1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyProfile {
    t0: f64,
    t1: f64,
    kind: ProfileKind,
}

impl EnergyProfile {
    pub fn new(t0: f64, t1: f64, kind: ProfileKind) -> Result<Self, ConstraintError> {
        if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
            return Err(ConstraintError::InvalidProfile(format!(
                "interval ({t0}, {t1}) must be finite and non-empty"
            )));
        }
        match &kind {
            ProfileKind::Step { height, jump } => {
                if !(height.is_finite() && *height >= 0.0 && jump.is_finite()) {
                    return Err(ConstraintError::InvalidProfile(
                        "step height must be finite and ≥ 0".into(),
                    ));
                }
            }
            ProfileKind::Bump { amplitude } => {
                if !(amplitude.is_finite() && *amplitude >= 0.0) {
                    return Err(ConstraintError::InvalidProfile(
                        "bump amplitude must be finite and ≥ 0".into(),
                    ));
                }
            }
            ProfileKind::Table { times, values } => {
                if times.len() != values.len() || times.len() < 2 {
                    return Err(ConstraintError::Table(
                        "need at least two (t, E) rows".into(),
                    ));
                }
                if times.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(ConstraintError::Table(
                        "t must be strictly increasing".into(),
                    ));
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(ConstraintError::Table("E must be finite and ≥ 0".into()));
                }
                if times.iter().any(|t| !t.is_finite()) {
                    return Err(ConstraintError::Table("t must be finite".into()));
                }
            }
        }
        Ok(Self { t0, t1, kind })
    }

    /// Constant energy on the whole interval.
    pub fn constant(t0: f64, t1: f64, value: f64) -> Result<Self, ConstraintError> {
        Self::new(
            t0,
            t1,
            ProfileKind::Step {
                height: value,
                jump: t0,
            },
        )
    }

    /// Reads a two-column `(t, E)` CSV; a non-numeric first row is taken as
    /// a header.
    pub fn read_table<R: Read>(t0: f64, t1: f64, reader: R) -> Result<Self, ConstraintError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| ConstraintError::Table(e.to_string()))?;
            if rec.len() != 2 {
                return Err(ConstraintError::Table(format!(
                    "row {i}: expected 2 columns, found {}",
                    rec.len()
                )));
            }
            let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
            match parsed {
                (Ok(t), Ok(e)) => {
                    times.push(t);
                    values.push(e);
                }
                _ if i == 0 => continue,
                _ => {
                    return Err(ConstraintError::Table(format!("row {i}: not a number")));
                }
            }
        }
        Self::new(t0, t1, ProfileKind::Table { times, values })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn eval(&self, t: f64) -> f64 {
        if !(t > self.t0 && t < self.t1) {
            return 0.0;
        }
        match &self.kind {
            ProfileKind::Step { height, jump } => {
                if t > *jump {
                    *height
                } else {
                    0.0
                }
            }
            ProfileKind::Bump { amplitude } => {
                let s = (std::f64::consts::PI * (t - self.t0) / (self.t1 - self.t0)).sin();
                amplitude * s * s
            }
            ProfileKind::Table { times, values } => {
                let n = times.len();
                if t < times[0] || t > times[n - 1] {
                    return 0.0;
                }
                let j = times.partition_point(|&s| s <= t).clamp(1, n - 1);
                let (ta, tb) = (times[j - 1], times[j]);
                let w = (t - ta) / (tb - ta);
                values[j - 1] * (1.0 - w) + values[j] * w
            }
        }
    }

    /// Supremum of `E` over the interval.
    pub fn max_value(&self) -> f64 {
        match &self.kind {
            ProfileKind::Step { height, jump } => {
                if *jump < self.t1 {
                    *height
                } else {
                    0.0
                }
            }
            ProfileKind::Bump { amplitude } => *amplitude,
            ProfileKind::Table { times, values } => {
                // interior table nodes plus interpolated values at the interval ends
                let mut m = 0.0f64;
                for (t, v) in times.iter().zip(values) {
                    if *t > self.t0 && *t < self.t1 {
                        m = m.max(*v);
                    }
                }
                let eps = (self.t1 - self.t0) * 1e-12;
                m.max(self.eval(self.t0 + eps))
                    .max(self.eval(self.t1 - eps))
            }
        }
    }
}

/// Axis-aligned open box `Ω ⊂ ℝ^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, ConstraintError> {
        if lo.len() != hi.len() {
            return Err(ConstraintError::InvalidDomain(
                "corner dimensions differ".into(),
            ));
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b))
        {
            return Err(ConstraintError::InvalidDomain("box is degenerate".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit(d: usize) -> Self {
        Self {
            lo: vec![0.0; d],
            hi: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| v > a && v < b)
    }

    /// Distance from an interior point to the box boundary.
    pub fn clearance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (a, b))| (v - a).min(b - v))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Problem data defining `F` and `U = I × Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintParams {
    d: usize,
    omega: DomainBox,
    profile: EnergyProfile,
}

impl ConstraintParams {
    pub fn new(omega: DomainBox, profile: EnergyProfile) -> Result<Self, ConstraintError> {
        let d = omega.dim();
        if !(d == 2 || d == 3) {
            return Err(ConstraintError::UnsupportedDimension(d));
        }
        Ok(Self { d, omega, profile })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// State dimension `2d + 1`.
    pub fn n(&self) -> usize {
        2 * self.d + 1
    }

    pub fn omega(&self) -> &DomainBox {
        &self.omega
    }

    pub fn profile(&self) -> &EnergyProfile {
        &self.profile
    }

    /// `|U| = |I|·|Ω|`.
    pub fn u_volume(&self) -> f64 {
        let (t0, t1) = self.profile.interval();
        (t1 - t0) * self.omega.volume()
    }

    /// Whether the space-time point `y = (t, x)` lies in `U`.
    pub fn in_u(&self, y: &[f64]) -> bool {
        let (t0, t1) = self.profile.interval();
        y[0] > t0 && y[0] < t1 && self.omega.contains(&y[1..])
    }

    /// `F(t, x) = E(t)/|Ω|` on `Ω`, zero elsewhere.
    pub fn big_f(&self, y: &[f64]) -> f64 {
        if self.omega.contains(&y[1..]) {
            self.profile.eval(y[0]) / self.omega.volume()
        } else {
            0.0
        }
    }
}

/// `f(y) = √F(y)`; zero outside `U`.
pub fn f_value(params: &ConstraintParams, y: &[f64]) -> f64 {
    params.big_f(y).sqrt()
}

/// Exact Euclidean distance from `z` to `K_y` when `f(y) = f`.
///
/// The unit vector is optimized in closed form: for each sign `σ` the best
/// `β` is `(σf·m + b)/|σf·m + b|`.
pub fn distance_to_constraint(z: &[f64], f: f64) -> f64 {
    let d = (z.len() - 1) / 2;
    let (u, m, b) = (z[0], &z[1..=d], &z[d + 1..]);
    let mut best = f64::INFINITY;
    for sigma in [1.0, -1.0] {
        let sf = sigma * f;
        let mut v = [0.0; 4];
        let mut vn = 0.0;
        for i in 0..d {
            v[i] = sf * m[i] + b[i];
            vn += v[i] * v[i];
        }
        let vn = vn.sqrt();
        let mut d2 = (u - sf) * (u - sf);
        if vn > 0.0 {
            for i in 0..d {
                let beta = v[i] / vn;
                let dm = m[i] - sf * beta;
                let db = b[i] - beta;
                d2 += dm * dm + db * db;
            }
        } else {
            // every unit β is optimal
            let mm: f64 = m.iter().map(|x| x * x).sum();
            let bb: f64 = b.iter().map(|x| x * x).sum();
            d2 += mm + f * f + bb + 1.0;
        }
        best = best.min(d2);
    }
    best.sqrt()
}

/// `dist(z, K_y)`; equals `|z|` outside `U` where `K_y = {0}`.
pub fn dist_to_k(z: &[f64], y: &[f64], params: &ConstraintParams) -> f64 {
    if !params.in_u(y) {
        return geometry::norm(z);
    }
    distance_to_constraint(z, f_value(params, y))
}

/// Quasi-uniform unit directions on `S^{d−1}` used to sample `K_y`.
///
/// Circle directions are equispaced; sphere directions follow a Fibonacci
/// lattice. An optional seed applies a random rotation, giving distinct but
/// equally fine samplings.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereLattice {
    d: usize,
    seed: Option<u64>,
    directions: Vec<[f64; 3]>,
    facets: Vec<Facet>,
}

/// Supporting half-space `normal·β ≤ offset` of the direction polytope.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Facet {
    normal: [f64; 3],
    offset: f64,
}

impl SphereLattice {
    /// Lattice for `count` constraint samples (`count/2` directions).
    pub fn new(d: usize, count: usize, seed: Option<u64>) -> Result<Self, ConstraintError> {
        if !(d == 2 || d == 3) {
            return Err(ConstraintError::UnsupportedDimension(d));
        }
        let min = 2 * (d + 1);
        if count < min || count % 2 != 0 {
            return Err(ConstraintError::SampleCount { count, min });
        }
        let half = count / 2;
        let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
        let directions: Vec<[f64; 3]> = if d == 2 {
            let offset = rng.as_mut().map_or(0.0, |r| rand::Rng::gen::<f64>(r));
            (0..half)
                .map(|i| {
                    let th = 2.0 * std::f64::consts::PI * (i as f64 + offset) / half as f64;
                    [th.cos(), th.sin(), 0.0]
                })
                .collect()
        } else {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            let rot = rng.as_mut().map(random_rotation);
            (0..half)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / half as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let th = golden * i as f64;
                    let p = [r * th.cos(), r * th.sin(), z];
                    match &rot {
                        Some(q) => apply(q, p),
                        None => p,
                    }
                })
                .collect()
        };
        let facets = polytope_facets(d, &directions);
        if facets.is_empty() {
            return Err(ConstraintError::SampleCount { count, min });
        }
        Ok(Self {
            d,
            seed,
            directions,
            facets,
        })
    }

    /// Default density: 64 samples for `d = 2`, 256 for `d = 3`.
    pub fn default_for(d: usize, seed: Option<u64>) -> Result<Self, ConstraintError> {
        Self::new(d, if d == 2 { 64 } else { 256 }, seed)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Total number of constraint samples (both signs).
    pub fn count(&self) -> usize {
        2 * self.directions.len()
    }

    pub fn direction(&self, i: usize) -> &[f64] {
        &self.directions[i][..self.d]
    }

    pub fn directions(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.directions.iter().map(move |p| &p[..self.d])
    }
}

/// Facets of `conv(directions)` by brute force over all `d`-subsets.
fn polytope_facets(d: usize, dirs: &[[f64; 3]]) -> Vec<Facet> {
    const TOL: f64 = 1e-12;
    let mut facets: Vec<Facet> = Vec::new();
    let mut consider = |normal: [f64; 3], anchor: &[f64; 3]| {
        let len = (normal[0] * normal[0] + normal[1] * normal[1] + normal[2] * normal[2]).sqrt();
        if len < 1e-12 {
            return;
        }
        let mut nrm = normal.map(|v| v / len);
        let mut offset = dot3(&nrm, anchor);
        if offset < 0.0 {
            nrm = nrm.map(|v| -v);
            offset = -offset;
        }
        if offset <= TOL || dirs.iter().any(|p| dot3(&nrm, p) > offset + TOL) {
            return;
        }
        let duplicate = facets
            .iter()
            .any(|f| (f.offset - offset).abs() < 1e-10 && dot3(&f.normal, &nrm) > 1.0 - 1e-10);
        if !duplicate {
            facets.push(Facet {
                normal: nrm,
                offset,
            });
        }
    };
    let k = dirs.len();
    if d == 2 {
        for i in 0..k {
            for j in i + 1..k {
                let (p, q) = (&dirs[i], &dirs[j]);
                consider([q[1] - p[1], p[0] - q[0], 0.0], p);
            }
        }
    } else {
        for i in 0..k {
            for j in i + 1..k {
                for l in j + 1..k {
                    let (p, q, r) = (&dirs[i], &dirs[j], &dirs[l]);
                    let u = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
                    let v = [r[0] - p[0], r[1] - p[1], r[2] - p[2]];
                    let c = [
                        u[1] * v[2] - u[2] * v[1],
                        u[2] * v[0] - u[0] * v[2],
                        u[0] * v[1] - u[1] * v[0],
                    ];
                    consider(c, p);
                }
            }
        }
    }
    facets
}

#[inline]
fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn random_rotation(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
    let mut q: [f64; 4] = [0.0; 4];
    for v in q.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|v| v / n);
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

fn apply(r: &[[f64; 3]; 3], p: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (i, row) in r.iter().enumerate() {
        out[i] = row[0] * p[0] + row[1] * p[1] + row[2] * p[2];
    }
    // keep unit length exact to rounding
    let n = (out[0] * out[0] + out[1] * out[1] + out[2] * out[2]).sqrt();
    out.map(|v| v / n)
}

/// Constraint samples `(σf, σf·β_i, β_i)` for `f = f` and every lattice
/// direction, `σ = +1` first.
pub fn sample_constraint(f: f64, lattice: &SphereLattice) -> Result<PointCloud, ConstraintError> {
    if !(f > 0.0) {
        return Err(ConstraintError::Degenerate);
    }
    let d = lattice.d();
    let n = 2 * d + 1;
    let mut coords = Vec::with_capacity(n * lattice.count());
    for sigma in [1.0, -1.0] {
        let sf = sigma * f;
        for beta in lattice.directions() {
            coords.push(sf);
            coords.extend(beta.iter().map(|b| sf * b));
            coords.extend_from_slice(beta);
        }
    }
    Ok(PointCloud::from_flat(n, coords)?)
}

/// Samples `K_y` on the lattice; `y` must lie in `U`.
pub fn sample_k(
    y: &[f64],
    params: &ConstraintParams,
    lattice: &SphereLattice,
) -> Result<PointCloud, ConstraintError> {
    if !params.in_u(y) {
        return Err(ConstraintError::OutsideDomain);
    }
    sample_constraint(f_value(params, y), lattice)
}

/// Whether `z` has certified interior margin ≥ `margin` in the sampled
/// hull of `K_y` (hence in `int conv K_y`).
pub fn in_u_certified(
    z: &[f64],
    y: &[f64],
    params: &ConstraintParams,
    margin: f64,
    lattice: &SphereLattice,
) -> Result<bool, ConstraintError> {
    if !params.in_u(y) {
        return Err(ConstraintError::OutsideDomain);
    }
    let f = f_value(params, y);
    certified_with_f(z, f, margin, lattice)
}

/// [`in_u_certified`] for a known value of `f`.
pub fn certified_with_f(
    z: &[f64],
    f: f64,
    margin: f64,
    lattice: &SphereLattice,
) -> Result<bool, ConstraintError> {
    if !(f > 0.0) {
        return Err(ConstraintError::Degenerate);
    }
    if !hull_box_admits(z, f) {
        return Ok(false);
    }
    Ok(hull_margin(z, f, lattice).is_some_and(|m| m >= margin))
}

/// Cross-polytope interior margin of `z` in the sampled hull of `K_y`
/// (`f(y) = f`), or `None` when `z` lies outside it.
///
/// Writing `s = (m/f + b)/2` and `q = (b − m/f)/2`, the sampled hull is
/// `{|u| ≤ f, s ∈ ((1 + u/f)/2)·P, q ∈ ((1 − u/f)/2)·P}` where `P` is the
/// polytope spanned by the lattice directions. Each facet `ν·β ≤ c` of `P`
/// yields two half-spaces in `z`, so the value equals
/// [`crate::geometry::interior_margin`] on [`sample_constraint`] without
/// solving any program.
pub fn hull_margin(z: &[f64], f: f64, lattice: &SphereLattice) -> Option<f64> {
    let d = lattice.d();
    debug_assert_eq!(z.len(), 2 * d + 1);
    let (u, m, b) = (z[0], &z[1..=d], &z[d + 1..]);
    // slack of u ≤ f and −u ≤ f; their only coefficient is on u
    let mut reach = (f - u).min(f + u);
    if reach < 0.0 {
        return None;
    }
    for facet in &lattice.facets {
        let nu = &facet.normal[..d];
        let c = facet.offset;
        let mut nm = 0.0;
        let mut nb = 0.0;
        let mut nmax = 0.0f64;
        for i in 0..d {
            nm += nu[i] * m[i];
            nb += nu[i] * b[i];
            nmax = nmax.max(nu[i].abs());
        }
        // −c·u + ν·m + f ν·b ≤ c f  and  c·u − ν·m + f ν·b ≤ c f
        let s1 = c * f + c * u - nm - f * nb;
        let s2 = c * f - c * u + nm - f * nb;
        if s1 < 0.0 || s2 < 0.0 {
            return None;
        }
        let coef = c.max(nmax).max(f * nmax);
        reach = reach.min(s1.min(s2) / coef);
    }
    Some(reach / ((2 * d + 1) as f64).sqrt())
}

/// Necessary condition for `z ∈ conv K_y`: `|u| ≤ f`, `|m| ≤ f`, `|b| ≤ 1`.
pub fn hull_box_admits(z: &[f64], f: f64) -> bool {
    let d = (z.len() - 1) / 2;
    let slack = 1e-12;
    let mm: f64 = z[1..=d].iter().map(|v| v * v).sum();
    let bb: f64 = z[d + 1..].iter().map(|v| v * v).sum();
    z[0].abs() <= f + slack && mm.sqrt() <= f + slack && bb.sqrt() <= 1.0 + slack
}

/// `(d_H(K_y, K_{y'}), 2|f(y) − f(y')|)` on a shared lattice.
pub fn hausdorff_continuity_bound(
    y: &[f64],
    y2: &[f64],
    params: &ConstraintParams,
    lattice: &SphereLattice,
) -> Result<(f64, f64), ConstraintError> {
    let a = sample_k(y, params, lattice)?;
    let b = sample_k(y2, params, lattice)?;
    let lhs = hausdorff_distance(&a, &b)?;
    Ok((lhs, 2.0 * (f_value(params, y) - f_value(params, y2)).abs()))
}

/// Time intervals where `E(t) ≥ floor`, located by sampling plus bisection.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveRegion {
    floor: f64,
    intervals: Vec<(f64, f64)>,
}

const ACTIVE_SCAN: usize = 4096;

impl ActiveRegion {
    pub fn new(profile: &EnergyProfile, floor: f64) -> Self {
        let (t0, t1) = profile.interval();
        let h = (t1 - t0) / ACTIVE_SCAN as f64;
        let active = |t: f64| profile.eval(t) >= floor && profile.eval(t) > 0.0;
        let refine = |mut a: f64, mut b: f64| {
            // a and b straddle a transition; returns the crossing time
            let fa = active(a);
            for _ in 0..80 {
                let mid = 0.5 * (a + b);
                if active(mid) == fa {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            0.5 * (a + b)
        };
        let mut intervals = Vec::new();
        let mut start: Option<f64> = None;
        let mut prev_t = t0;
        let mut prev_active = false;
        for i in 0..ACTIVE_SCAN {
            let t = t0 + (i as f64 + 0.5) * h;
            let a = active(t);
            match (prev_active, a) {
                (false, true) => {
                    start = Some(if i == 0 { t0 } else { refine(prev_t, t) });
                }
                (true, false) => {
                    intervals.push((start.take().unwrap(), refine(prev_t, t)));
                }
                _ => {}
            }
            prev_t = t;
            prev_active = a;
        }
        if let Some(s) = start {
            intervals.push((s, t1));
        }
        Self { floor, intervals }
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains_time(&self, t: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| t > a && t < b)
    }

    /// Distance from `t` to the complement of the active time set.
    pub fn time_clearance(&self, t: f64) -> f64 {
        self.intervals
            .iter()
            .find(|&&(a, b)| t > a && t < b)
            .map_or(0.0, |&(a, b)| (t - a).min(b - t))
    }

    /// Radius of the largest ball around `y` inside the active part of `U`.
    pub fn clearance(&self, y: &[f64], params: &ConstraintParams) -> f64 {
        if !params.omega().contains(&y[1..]) {
            return 0.0;
        }
        self.time_clearance(y[0])
            .min(params.omega().clearance(&y[1..]))
    }

    pub fn contains(&self, y: &[f64], params: &ConstraintParams) -> bool {
        self.contains_time(y[0]) && params.omega().contains(&y[1..])
    }
}
