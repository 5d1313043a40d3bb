//! One constructive perturbation step: pick amplitudes, stability radii and
//! a disjoint ball cover, then add one wave per ball.
//!
//! All work happens on a [`Workspace`], which caches the field at every
//! node of the quadrature grid. The cache is updated by adding wave values
//! in list order, so it agrees bit for bit with evaluating the field from
//! scratch.

use rayon::prelude::*;
use thiserror::Error;

use crate::constraint::{
    certified_with_f, distance_to_constraint, hull_margin, sample_constraint, ActiveRegion,
    ConstraintError, ConstraintParams, SphereLattice,
};
use crate::field::{CompositeField, Evaluator, FieldError};
use crate::geometry::{segment_direction, GeometryError, SegmentSearch};
use crate::quadrature::{deterministic_sum, deterministic_sums, UniformGrid, CHUNK};
use crate::waves::{make_wave, WaveError, WaveSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerturbError {
    #[error("state at the center is not certified inside the relaxed constraint")]
    NotCertified,
    #[error("wave-cone adjustment failed to certify the segment (best ratio {ratio:.4})")]
    NudgeFailed { ratio: f64 },
    #[error("no stability radius above {r_min} certifies")]
    DegenerateGeometry { r_min: f64 },
    #[error("empty cover: {0}")]
    EmptyCover(CoverFailure),
    #[error("grid has {found} nodes, workspace expects {expected}")]
    GridMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Wave(#[from] WaveError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Why no cover ball could be placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverFailure {
    /// No node carries positive distance mass.
    Converged,
    /// No admissible center has room for a resolvable wave.
    ResolutionLimited,
    /// Every attempted center failed certification.
    Uncertifiable,
}

impl std::fmt::Display for CoverFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CoverFailure::Converged => "field already satisfies the constraint on the grid",
            CoverFailure::ResolutionLimited => "no center admits a ball the grid can resolve",
            CoverFailure::Uncertifiable => "no attempted center could be certified",
        })
    }
}

/// Tuning knobs of a perturbation step.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbConfig {
    /// Planar wave-cone nudge: minimum `|ū|/|z̄|`.
    pub theta: f64,
    /// Interior margin every active node must keep.
    pub margin: f64,
    pub segment: SegmentSearch,
    /// Cap on attempted cover centers per step.
    pub max_attempts: usize,
    /// Points checked per candidate stability radius.
    pub stability_samples: usize,
    /// Amplitude halvings tried when no stability radius certifies.
    pub backoff: usize,
    /// Failed centers block candidates within `taboo · r_min`.
    pub taboo: f64,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        Self {
            theta: 0.1,
            margin: 1e-6,
            segment: SegmentSearch::default(),
            max_attempts: 48,
            stability_samples: 48,
            backoff: 3,
            taboo: 1.0,
        }
    }
}

/// Field, grid and cached node values for one run.
#[derive(Debug, Clone)]
pub struct Workspace {
    field: CompositeField,
    grid: UniformGrid,
    region: ActiveRegion,
    lattice: SphereLattice,
    // f per time slice and whether the slice is active
    f_slice: Vec<f64>,
    active_slice: Vec<bool>,
    values: Vec<f64>,
}

impl Workspace {
    pub fn new(
        field: CompositeField,
        grid: UniformGrid,
        region: ActiveRegion,
    ) -> Result<Self, PerturbError> {
        field.check_grid(&grid).map_err(FieldError::from)?;
        let lattice = field.sampling().lattice(field.d())?;
        let params = field.params();
        let nt = grid.counts()[0];
        let mut y = grid.node_vec(0);
        let mut f_slice = Vec::with_capacity(nt);
        let mut active_slice = Vec::with_capacity(nt);
        for i in 0..nt {
            y[0] = grid.coord(0, i);
            f_slice.push(crate::constraint::f_value(params, &y));
            active_slice.push(region.contains_time(y[0]));
        }
        let n = 2 * field.d() + 1;
        let mut values = vec![0.0; grid.len() * n];
        let dim = grid.dim();
        values
            .par_chunks_mut(CHUNK * n)
            .enumerate()
            .for_each(|(c, chunk)| {
                let mut y = [0.0; 4];
                for (j, z) in chunk.chunks_exact_mut(n).enumerate() {
                    grid.node(c * CHUNK + j, &mut y[..dim]);
                    field.eval_into(&y[..dim], z);
                }
            });
        Ok(Self {
            field,
            grid,
            region,
            lattice,
            f_slice,
            active_slice,
            values,
        })
    }

    pub fn field(&self) -> &CompositeField {
        &self.field
    }

    pub fn into_field(self) -> CompositeField {
        self.field
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn region(&self) -> &ActiveRegion {
        &self.region
    }

    pub fn lattice(&self) -> &SphereLattice {
        &self.lattice
    }

    pub fn params(&self) -> &ConstraintParams {
        self.field.params()
    }

    fn n(&self) -> usize {
        2 * self.field.d() + 1
    }

    /// Cached state at node `i`.
    pub fn value(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.values[i * n..(i + 1) * n]
    }

    fn slice_of(&self, i: usize) -> usize {
        i / self.grid.slice_len()
    }

    /// `f` at node `i`.
    pub fn f_at(&self, i: usize) -> f64 {
        self.f_slice[self.slice_of(i)]
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active_slice[self.slice_of(i)]
    }

    fn dist2_of(&self, z: &[f64], i: usize) -> f64 {
        distance_to_constraint(z, self.f_at(i)).powi(2)
    }

    /// `J` on the workspace grid.
    pub fn j_value(&self) -> f64 {
        self.j_of(&self.values)
    }

    fn j_of(&self, values: &[f64]) -> f64 {
        let n = self.n();
        deterministic_sum(self.grid.len(), |i| {
            distance_to_constraint(&values[i * n..(i + 1) * n], self.f_at(i)).powi(2)
        }) * self.grid.cell_volume()
    }

    /// `I` on the workspace grid.
    pub fn i_value(&self) -> f64 {
        let n = self.n();
        deterministic_sum(self.grid.len(), |i| {
            self.values[i * n..(i + 1) * n].iter().map(|v| v * v).sum()
        }) * self.grid.cell_volume()
    }

    /// `𝓔(t)` for every time slice.
    pub fn slice_energies(&self) -> Vec<f64> {
        let per = self.grid.slice_len();
        let n = self.n();
        let vol = self.grid.cell_volume() / self.grid.widths()[0];
        (0..self.grid.counts()[0])
            .map(|s| {
                let base = s * per;
                deterministic_sum(per, |i| {
                    let u = self.values[(base + i) * n];
                    u * u
                }) * vol
            })
            .collect()
    }

    /// Number of active nodes whose cached state fails certification.
    pub fn uncertified_nodes(&self, margin: f64) -> usize {
        let [bad] = deterministic_sums(self.grid.len(), |i| {
            if !self.is_active(i) {
                return [0.0];
            }
            let ok = certified_with_f(self.value(i), self.f_at(i), margin, &self.lattice)
                .unwrap_or(false);
            [if ok { 0.0 } else { 1.0 }]
        });
        bad as usize
    }

    /// Field value at an arbitrary point (not cached).
    pub fn eval(&self, y: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.n()];
        self.field.eval_into(y, &mut z);
        z
    }

    /// Smallest frequency-one ball radius the grid resolves.
    pub fn r_min(&self) -> f64 {
        8.0 * self.grid.max_width()
    }
}

/// Amplitude direction at a point with state `z` and `f(y) = f`.
///
/// Returns `z̄` with `[z − z̄, z + z̄]` strictly inside the sampled hull and
/// `|z̄| ≥ dist(z, K_y)/(4n)`; for `d = 2` the result also has
/// `|ū| ≥ θ|z̄|`, which keeps it in the planar wave cone.
pub fn local_direction(
    z: &[f64],
    f: f64,
    lattice: &SphereLattice,
    cfg: &PerturbConfig,
) -> Result<Vec<f64>, PerturbError> {
    let n = z.len();
    let d = (n - 1) / 2;
    if !hull_margin(z, f, lattice).is_some_and(|m| m > 0.0) {
        return Err(PerturbError::NotCertified);
    }
    let dist = distance_to_constraint(z, f);
    if dist == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let cloud = sample_constraint(f, lattice)?;
    let seg = segment_direction(z, &cloud, &cfg.segment)?;
    let mut zbar = seg.zbar;
    let len = zbar.iter().map(|v| v * v).sum::<f64>().sqrt();
    if d == 2 && zbar[0].abs() < cfg.theta * len {
        zbar[0] = cfg.theta * len * if zbar[0] < 0.0 { -1.0 } else { 1.0 };
    }
    let need = dist / (4.0 * n as f64);
    let mut best_ratio = 0.0f64;
    for scale in [1.0, 0.75, 0.5] {
        let cand: Vec<f64> = zbar.iter().map(|v| v * scale).collect();
        let clen = cand.iter().map(|v| v * v).sum::<f64>().sqrt();
        best_ratio = best_ratio.max(clen / need);
        if clen < need {
            break;
        }
        let plus: Vec<f64> = z.iter().zip(&cand).map(|(a, b)| a + b).collect();
        let minus: Vec<f64> = z.iter().zip(&cand).map(|(a, b)| a - b).collect();
        let ok = |p: &[f64]| hull_margin(p, f, lattice).is_some_and(|m| m > 0.0);
        if ok(&plus) && ok(&minus) {
            return Ok(cand);
        }
    }
    Err(PerturbError::NudgeFailed { ratio: best_ratio })
}

/// Deterministic probe points of `B_R(y)`: the center, two shells of axis
/// points, diagonal points, then grid nodes of the ball in strides.
fn stability_points(ws: &Workspace, y: &[f64], r: f64, count: usize) -> Vec<Vec<f64>> {
    let dim = y.len();
    let mut pts = vec![y.to_vec()];
    for frac in [0.5, 0.95] {
        for j in 0..dim {
            for s in [1.0, -1.0] {
                let mut p = y.to_vec();
                p[j] += s * frac * r;
                pts.push(p);
            }
        }
    }
    let diag = 0.7 * r / (dim as f64).sqrt();
    for mask in 0..(1usize << dim) {
        pts.push(
            (0..dim)
                .map(|j| y[j] + if mask >> j & 1 == 1 { diag } else { -diag })
                .collect(),
        );
    }
    if pts.len() < count {
        let nodes = ws.grid.nodes_in_ball(y, r);
        let want = count - pts.len();
        if !nodes.is_empty() {
            let stride = (nodes.len() / want).max(1);
            for &i in nodes.iter().step_by(stride).take(want) {
                pts.push(ws.grid.node_vec(i));
            }
        }
    }
    pts
}

/// Stability radius `R` and margin `ρ` for amplitude `zbar` at `y`.
///
/// `ρ` is half the smaller endpoint margin at `y`. `R` is the largest of
/// `r_max, r_max/2, …` (not below `r_min`) such that at every probe point
/// `x`, `z(x) ± z̄` keeps margin `ρ` and `dist(z(x), K_x) ≤ 2 dist(z(y), K_y)`.
pub fn stability_radius(
    ws: &Workspace,
    y: &[f64],
    zbar: &[f64],
    r_max: f64,
    cfg: &PerturbConfig,
) -> Result<(f64, f64), PerturbError> {
    let params = ws.params();
    let f_y = crate::constraint::f_value(params, y);
    let z_y = ws.eval(y);
    let plus: Vec<f64> = z_y.iter().zip(zbar).map(|(a, b)| a + b).collect();
    let minus: Vec<f64> = z_y.iter().zip(zbar).map(|(a, b)| a - b).collect();
    let m = match (
        hull_margin(&plus, f_y, &ws.lattice),
        hull_margin(&minus, f_y, &ws.lattice),
    ) {
        (Some(a), Some(b)) if a.min(b) > 0.0 => a.min(b),
        _ => return Err(PerturbError::NotCertified),
    };
    let rho = 0.5 * m;
    let dist_y = distance_to_constraint(&z_y, f_y);
    let r_min = ws.r_min();
    let mut r = r_max;
    while r >= r_min {
        let ok = stability_points(ws, y, r, cfg.stability_samples)
            .iter()
            .all(|x| {
                let f = crate::constraint::f_value(params, x);
                if !(f > 0.0) {
                    return false;
                }
                let z = ws.eval(x);
                let zp: Vec<f64> = z.iter().zip(zbar).map(|(a, b)| a + b).collect();
                let zm: Vec<f64> = z.iter().zip(zbar).map(|(a, b)| a - b).collect();
                certified_with_f(&zp, f, rho, &ws.lattice).unwrap_or(false)
                    && certified_with_f(&zm, f, rho, &ws.lattice).unwrap_or(false)
                    && distance_to_constraint(&z, f) <= 2.0 * dist_y
            });
        if ok {
            return Ok((r, rho));
        }
        r *= 0.5;
    }
    Err(PerturbError::DegenerateGeometry { r_min })
}

/// One ball of a cover.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverBall {
    pub center: Vec<f64>,
    pub radius: f64,
    pub zbar: Vec<f64>,
    /// Stability margin `ρ`.
    pub margin: f64,
    /// `dist(z(y), K_y)` at the center.
    pub dist: f64,
    /// Largest frequency the grid resolves on this ball.
    pub k_max: u32,
    /// `∫_B dist²` on the grid.
    pub captured: f64,
}

/// Result of [`select_cover`].
#[derive(Debug, Clone, PartialEq)]
pub struct Cover {
    pub balls: Vec<CoverBall>,
    /// `J` when the cover was built.
    pub epsilon: f64,
    pub captured: f64,
    /// Whether `captured > ε/2`.
    pub complete: bool,
    pub attempts: usize,
}

/// Greedy disjoint cover of high-distance regions.
///
/// Nodes are ranked by `dist²` mass to nine digits (ties: larger
/// clearance, then lower index); each admissible center gets an amplitude and a stability radius
/// shrunk to avoid earlier balls. Selection stops once the captured mass
/// exceeds `ε/2`, when candidates run out, or after
/// [`PerturbConfig::max_attempts`] attempts.
pub fn select_cover(ws: &Workspace, cfg: &PerturbConfig) -> Result<Cover, PerturbError> {
    let params = ws.params();
    let vol = ws.grid.cell_volume();
    let epsilon = ws.j_value();
    let r_min = ws.r_min();
    let dim = ws.grid.dim();

    let mut cands: Vec<(usize, f64, f64)> = (0..ws.grid.len())
        .into_par_iter()
        .filter(|&i| ws.is_active(i))
        .map(|i| {
            let y = ws.grid.node_vec(i);
            let mass = ws.dist2_of(ws.value(i), i) * vol;
            (i, mass, ws.region.clearance(&y, params))
        })
        .filter(|c| c.1 > 0.0)
        .collect();
    if cands.is_empty() {
        return Err(PerturbError::EmptyCover(CoverFailure::Converged));
    }
    // masses equal up to roundoff rank as ties so clearance decides
    let top = cands.iter().map(|c| c.1).fold(0.0, f64::max);
    let key = |m: f64| (m / top * 1e9).round() as u64;
    cands.sort_by(|a, b| {
        key(b.1)
            .cmp(&key(a.1))
            .then(b.2.total_cmp(&a.2))
            .then(a.0.cmp(&b.0))
    });

    let mut balls: Vec<CoverBall> = Vec::new();
    let mut failed: Vec<Vec<f64>> = Vec::new();
    let mut captured = 0.0;
    let mut attempts = 0;
    let mut roomy = false;
    let mut y = vec![0.0; dim];
    for &(i, _, clearance) in &cands {
        if captured > 0.5 * epsilon || attempts >= cfg.max_attempts {
            break;
        }
        if clearance < r_min {
            continue;
        }
        ws.grid.node(i, &mut y);
        let mut avail = clearance;
        for b in &balls {
            avail = avail.min(dist(&y, &b.center) - b.radius);
        }
        if avail < r_min {
            continue;
        }
        roomy = true;
        if failed.iter().any(|p| dist(p, &y) < cfg.taboo * r_min) {
            continue;
        }
        attempts += 1;
        let z = ws.value(i);
        let f = ws.f_at(i);
        let attempt = local_direction(z, f, &ws.lattice, cfg).and_then(|zbar| {
            if zbar.iter().all(|v| *v == 0.0) {
                return Err(PerturbError::NotCertified);
            }
            let mut last = PerturbError::NotCertified;
            for j in 0..cfg.backoff.max(1) {
                let s = 0.5f64.powi(j as i32);
                let scaled: Vec<f64> = zbar.iter().map(|v| v * s).collect();
                match stability_radius(ws, &y, &scaled, avail, cfg) {
                    Ok((r, rho)) => return Ok((scaled, r, rho)),
                    Err(e) => last = e,
                }
            }
            Err(last)
        });
        let (zbar, r, rho) = match attempt {
            Ok(v) => v,
            Err(_) => {
                failed.push(y.clone());
                continue;
            }
        };
        let nodes = ws.grid.nodes_in_ball(&y, r);
        let mass: f64 = nodes
            .iter()
            .map(|&j| ws.dist2_of(ws.value(j), j))
            .sum::<f64>()
            * vol;
        if !(mass > 0.0) {
            failed.push(y.clone());
            continue;
        }
        captured += mass;
        balls.push(CoverBall {
            center: y.clone(),
            radius: r,
            zbar,
            margin: rho,
            dist: distance_to_constraint(z, f),
            k_max: ws.grid.max_frequency(r).max(1),
            captured: mass,
        });
    }
    if balls.is_empty() {
        let reason = if roomy {
            CoverFailure::Uncertifiable
        } else {
            CoverFailure::ResolutionLimited
        };
        return Err(PerturbError::EmptyCover(reason));
    }
    Ok(Cover {
        complete: captured > 0.5 * epsilon,
        balls,
        epsilon,
        captured,
        attempts,
    })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Quantitative record of one trial step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// `J` before the step.
    pub epsilon: f64,
    pub j_after: f64,
    /// `∫ |z_k − z|²` on the grid.
    pub gain: f64,
    /// `(C/(64n²))·ε`.
    pub delta: f64,
    /// `min_i gain_i/(|γ z̄_i|²·V_i)` over the cover balls.
    pub c_measured: f64,
    /// `(C/(64n²))·γ²·captured`, the bound `gain` must exceed.
    pub chain_bound: f64,
    pub cover_size: usize,
    pub captured: f64,
    pub frequencies: Vec<u32>,
    pub gamma: f64,
    /// Active nodes in the balls that failed certification.
    pub uncertified: usize,
}

impl StepReport {
    pub fn chain_holds(&self) -> bool {
        self.gain >= self.chain_bound
    }

    pub fn acceptable(&self) -> bool {
        self.uncertified == 0 && self.chain_holds() && self.j_after < self.epsilon
    }

    pub fn k_max(&self) -> u32 {
        self.frequencies.iter().copied().max().unwrap_or(0)
    }
}

/// A trial step that has not been committed.
#[derive(Debug, Clone)]
pub struct Trial {
    pub report: StepReport,
    waves: Vec<WaveSpec>,
    values: Vec<f64>,
}

/// Builds the trial field `z + Σ w_i` with amplitudes `γ z̄_i` and
/// frequencies `ks[i]`, re-certifies the touched nodes and measures the
/// gain.
pub fn perturb_step(
    ws: &Workspace,
    cover: &Cover,
    ks: &[u32],
    gamma: f64,
    cfg: &PerturbConfig,
) -> Result<Trial, PerturbError> {
    let d = ws.field.d();
    let n = 2 * d + 1;
    let vol = ws.grid.cell_volume();
    let mut values = ws.values.clone();
    let mut waves = Vec::with_capacity(cover.balls.len());
    let mut gain = 0.0;
    let mut c_measured = f64::INFINITY;
    let mut uncertified = 0;
    for (ball, &k) in cover.balls.iter().zip(ks) {
        let amp: Vec<f64> = ball.zbar.iter().map(|v| gamma * v).collect();
        let wave = make_wave(&amp, &ball.center, ball.radius, k, d)?;
        ws.grid
            .check_resolves(ball.radius, k)
            .map_err(FieldError::from)?;
        // slightly enlarged so the wave itself decides membership
        let nodes = ws
            .grid
            .nodes_in_ball(&ball.center, ball.radius * (1.0 + 1e-9));
        let mut y = vec![0.0; d + 1];
        let mut g = 0.0;
        let mut inside = 0usize;
        for &i in &nodes {
            ws.grid.node(i, &mut y);
            let z = &mut values[i * n..(i + 1) * n];
            let before: Vec<f64> = z.to_vec();
            if !wave.add_to(&y, z) {
                continue;
            }
            inside += 1;
            g += z
                .iter()
                .zip(&before)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
            if ws.is_active(i)
                && !certified_with_f(z, ws.f_at(i), cfg.margin, &ws.lattice).unwrap_or(false)
            {
                uncertified += 1;
            }
        }
        let g = g * vol;
        gain += g;
        let amp2: f64 = amp.iter().map(|v| v * v).sum();
        let v_node = inside as f64 * vol;
        if amp2 > 0.0 && v_node > 0.0 {
            c_measured = c_measured.min(g / (amp2 * v_node));
        }
        waves.push(wave);
    }
    if !c_measured.is_finite() {
        c_measured = 0.0;
    }
    let nn = (n * n) as f64;
    let report = StepReport {
        epsilon: cover.epsilon,
        j_after: ws.j_of(&values),
        gain,
        delta: c_measured / (64.0 * nn) * cover.epsilon,
        c_measured,
        chain_bound: c_measured / (64.0 * nn) * gamma * gamma * cover.captured,
        cover_size: cover.balls.len(),
        captured: cover.captured,
        frequencies: ks.to_vec(),
        gamma,
        uncertified,
    };
    Ok(Trial {
        report,
        waves,
        values,
    })
}

impl Workspace {
    /// Makes a trial step permanent.
    pub fn commit(&mut self, trial: Trial) -> Result<StepReport, PerturbError> {
        self.field.extend(trial.waves)?;
        self.values = trial.values;
        Ok(trial.report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{DomainBox, EnergyProfile};
    use crate::field::{u_grid, Sampling};

    fn workspace(nt: usize, nx: usize) -> Workspace {
        let p = ConstraintParams::new(
            DomainBox::unit(2),
            EnergyProfile::constant(0.0, 1.0, 1.0).unwrap(),
        )
        .unwrap();
        let region = ActiveRegion::new(p.profile(), 1e-3);
        let grid = u_grid(&p, nt, nx).unwrap();
        let field = CompositeField::empty(p, Sampling::default_for(2, Some(1)));
        Workspace::new(field, grid, region).unwrap()
    }

    #[test]
    fn local_direction_at_zero() {
        let lat = SphereLattice::default_for(2, None).unwrap();
        let cfg = PerturbConfig::default();
        let zbar = local_direction(&[0.0; 5], 1.0, &lat, &cfg).unwrap();
        let len = zbar.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(len >= 3f64.sqrt() / 20.0);
        assert!(zbar[0].abs() >= 0.1 * len - 1e-15);
    }

    #[test]
    fn local_direction_on_constraint_is_zero() {
        let lat = SphereLattice::default_for(2, None).unwrap();
        let cfg = PerturbConfig::default();
        // a constraint point is on the hull boundary, so it is not certified
        let p = [1.0, 1.0, 0.0, 1.0, 0.0];
        assert_eq!(
            local_direction(&p, 1.0, &lat, &cfg),
            Err(PerturbError::NotCertified)
        );
    }

    #[test]
    fn zero_gamma_changes_nothing() {
        let ws = workspace(32, 32);
        let cfg = PerturbConfig::default();
        let cover = select_cover(&ws, &cfg).unwrap();
        let ks: Vec<u32> = cover.balls.iter().map(|b| b.k_max).collect();
        let trial = perturb_step(&ws, &cover, &ks, 0.0, &cfg).unwrap();
        assert_eq!(trial.report.gain, 0.0);
        assert_eq!(trial.report.j_after, ws.j_value());
    }

    #[test]
    fn workspace_matches_fresh_evaluation() {
        let mut ws = workspace(32, 32);
        let cfg = PerturbConfig::default();
        let cover = select_cover(&ws, &cfg).unwrap();
        let ks: Vec<u32> = cover.balls.iter().map(|b| b.k_max).collect();
        let trial = perturb_step(&ws, &cover, &ks, 0.5, &cfg).unwrap();
        ws.commit(trial).unwrap();
        let fresh =
            Workspace::new(ws.field().clone(), ws.grid().clone(), ws.region().clone()).unwrap();
        assert_eq!(fresh.values, ws.values);
        assert_eq!(fresh.j_value(), ws.j_value());
    }

    #[test]
    fn cover_balls_are_disjoint_and_inside() {
        let ws = workspace(32, 32);
        let cover = select_cover(&ws, &PerturbConfig::default()).unwrap();
        for (a, ba) in cover.balls.iter().enumerate() {
            assert!(ws.region().clearance(&ba.center, ws.params()) >= ba.radius);
            for bb in &cover.balls[a + 1..] {
                assert!(dist(&ba.center, &bb.center) >= ba.radius + bb.radius - 1e-12);
            }
        }
        assert!(cover.captured > 0.0);
    }
}
