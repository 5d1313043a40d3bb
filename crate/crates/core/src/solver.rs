//! Accept/reject iteration from the zero subsolution, plus the independent
//! verification pass over a finished field.

use std::io::Write;
use std::time::Instant;

use thiserror::Error;

use crate::constraint::{
    certified_with_f, f_value, ActiveRegion, ConstraintError, ConstraintParams,
};
use crate::field::{
    energy_gap, energy_profile, i_functional, j_functional, pde_residual, u_grid, CompositeField,
    EnergySample, Evaluator, FieldError, Sampling,
};
use crate::perturbation::{
    perturb_step, select_cover, CoverFailure, PerturbConfig, PerturbError, StepReport, Workspace,
};
use crate::quadrature::{deterministic_sums, Estimate, QuadratureError, UniformGrid};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("energy profile has no active region above {floor}")]
    EmptyActiveRegion { floor: f64 },
    #[error("field has dimension {found}, configuration has {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Perturb(#[from] PerturbError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// `J` fell to the tolerance, or no node has positive distance.
    Converged,
    /// `max_steps` accepted steps were taken.
    MaxSteps,
    /// Trials certified but none decreased `J` enough.
    Stalled,
    /// No resolvable ball or frequency was left to try.
    ResolutionLimited,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxSteps => "max-steps",
            Status::Stalled => "stalled",
            Status::ResolutionLimited => "resolution-limited",
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Converged | Status::MaxSteps => 0,
            Status::Stalled => 2,
            Status::ResolutionLimited => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub params: ConstraintParams,
    /// Active-region floor `ε_E`; `None` means `1e-3 · max E`.
    pub energy_floor: Option<f64>,
    pub nt: usize,
    pub nx: usize,
    /// Refinement factor of the verification grid.
    pub refine: usize,
    pub max_steps: usize,
    pub tol_j: f64,
    /// Frequency of the first step; doubles every step, clamped per ball.
    pub k0: u32,
    pub gammas: Vec<f64>,
    pub seed: u64,
    /// Constraint sampling count; `None` uses the default for `d`.
    pub samples: Option<usize>,
    pub perturb: PerturbConfig,
}

impl SolverConfig {
    pub fn new(params: ConstraintParams) -> Self {
        Self {
            params,
            energy_floor: None,
            nt: 64,
            nx: 64,
            refine: 2,
            max_steps: 5,
            tol_j: 1e-6,
            k0: 2,
            gammas: vec![1.0, 0.5, 0.25, 0.125],
            seed: 0,
            samples: None,
            perturb: PerturbConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::Config(m.to_string()));
        if self.nt == 0 || self.nx == 0 {
            return bad("grid resolutions must be positive");
        }
        if self.refine < 1 {
            return bad("refinement factor must be at least 1");
        }
        if self.max_steps < 1 {
            return bad("max_steps must be at least 1");
        }
        if !(self.tol_j >= 0.0) {
            return bad("J tolerance must be non-negative");
        }
        if self.k0 < 1 {
            return bad("base frequency must be at least 1");
        }
        if self.gammas.is_empty() || self.gammas.iter().any(|g| !(*g > 0.0 && *g <= 1.0)) {
            return bad("amplitude scales must lie in (0, 1]");
        }
        if let Some(f) = self.energy_floor {
            if !(f > 0.0) {
                return bad("active-region floor must be positive");
            }
        }
        if !(self.perturb.theta > 0.0 && self.perturb.theta < 1.0) {
            return bad("theta must lie in (0, 1)");
        }
        if !(self.perturb.margin > 0.0) {
            return bad("certification margin must be positive");
        }
        if self.samples == Some(0) {
            return bad("sample count must be positive");
        }
        Ok(())
    }

    pub fn sampling(&self) -> Sampling {
        let d = self.params.d();
        Sampling {
            count: self.samples.unwrap_or(Sampling::default_for(d, None).count),
            seed: Some(self.seed),
        }
    }

    pub fn floor(&self) -> f64 {
        self.energy_floor
            .unwrap_or(1e-3 * self.params.profile().max_value())
    }

    pub fn grid(&self) -> Result<UniformGrid, SolverError> {
        Ok(u_grid(&self.params, self.nt, self.nx)?)
    }

    pub fn region(&self) -> Result<ActiveRegion, SolverError> {
        let floor = self.floor();
        let region = ActiveRegion::new(self.params.profile(), floor);
        if region.is_empty() {
            return Err(SolverError::EmptyActiveRegion { floor });
        }
        Ok(region)
    }
}

/// One row of the diagnostics table. Row 0 is the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRow {
    pub step: usize,
    pub j: f64,
    pub i: f64,
    /// `∫_I (E − 𝓔) dt` on the solver grid.
    pub gap: f64,
    pub cover_size: usize,
    pub k: u32,
    pub gamma: f64,
    pub gain: f64,
    pub captured: f64,
    pub delta: f64,
    pub c_measured: f64,
    /// Kept out of the CSV so that outputs stay byte-identical.
    pub wall_seconds: f64,
}

const DIAGNOSTICS_HEADER: [&str; 11] = [
    "step", "J", "I", "gap", "cover", "k", "gamma", "gain", "captured", "delta", "C",
];

/// Outcome of [`Solver::step`].
#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Accepted(StepReport),
    Finished(Status),
}

/// Stepwise driver; [`run`] wraps it.
#[derive(Debug)]
pub struct Solver {
    config: SolverConfig,
    ws: Workspace,
    rows: Vec<DiagnosticsRow>,
    status: Option<Status>,
}

impl Solver {
    pub fn new(config: SolverConfig) -> Result<Self, SolverError> {
        config.validate()?;
        let region = config.region()?;
        let grid = config.grid()?;
        let field = CompositeField::empty(config.params.clone(), config.sampling());
        let mut perturb = config.perturb.clone();
        perturb.segment.seed = config.seed;
        let config = SolverConfig { perturb, ..config };
        let ws = Workspace::new(field, grid, region)?;
        let mut s = Self {
            config,
            ws,
            rows: Vec::new(),
            status: None,
        };
        let row = s.row(0, None, 0.0);
        s.rows.push(row);
        Ok(s)
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn workspace(&self) -> &Workspace {
        &self.ws
    }

    pub fn field(&self) -> &CompositeField {
        self.ws.field()
    }

    pub fn rows(&self) -> &[DiagnosticsRow] {
        &self.rows
    }

    pub fn status(&self) -> Option<Status> {
        self.status
    }

    fn gap(&self) -> f64 {
        let grid = self.ws.grid();
        let dt = grid.widths()[0];
        let profile = self.ws.params().profile();
        self.ws
            .slice_energies()
            .iter()
            .enumerate()
            .map(|(s, e)| profile.eval(grid.coord(0, s)) - e)
            .sum::<f64>()
            * dt
    }

    fn row(&self, step: usize, report: Option<&StepReport>, wall: f64) -> DiagnosticsRow {
        let r = report;
        DiagnosticsRow {
            step,
            j: self.ws.j_value(),
            i: self.ws.i_value(),
            gap: self.gap(),
            cover_size: r.map_or(0, |r| r.cover_size),
            k: r.map_or(0, |r| r.k_max()),
            gamma: r.map_or(0.0, |r| r.gamma),
            gain: r.map_or(0.0, |r| r.gain),
            captured: r.map_or(0.0, |r| r.captured),
            delta: r.map_or(0.0, |r| r.delta),
            c_measured: r.map_or(0.0, |r| r.c_measured),
            wall_seconds: wall,
        }
    }

    fn finish(&mut self, status: Status) -> StepOutcome {
        self.status = Some(status);
        StepOutcome::Finished(status)
    }

    /// Attempts one step. After a `Finished` outcome further calls repeat it.
    pub fn step(&mut self) -> Result<StepOutcome, SolverError> {
        if let Some(s) = self.status {
            return Ok(StepOutcome::Finished(s));
        }
        let start = Instant::now();
        let j = self.rows.last().map_or(f64::INFINITY, |r| r.j);
        if j <= self.config.tol_j {
            return Ok(self.finish(Status::Converged));
        }
        let step = self.rows.len();
        if step > self.config.max_steps {
            return Ok(self.finish(Status::MaxSteps));
        }
        let cfg = &self.config.perturb;
        let cover = match select_cover(&self.ws, cfg) {
            Ok(c) => c,
            Err(PerturbError::EmptyCover(reason)) => {
                return Ok(self.finish(match reason {
                    CoverFailure::Converged => Status::Converged,
                    CoverFailure::ResolutionLimited => Status::ResolutionLimited,
                    CoverFailure::Uncertifiable => Status::Stalled,
                }))
            }
            Err(e) => return Err(e.into()),
        };
        let target = self
            .config
            .k0
            .saturating_mul(1u32.checked_shl(step as u32 - 1).unwrap_or(u32::MAX));
        let mut ks: Vec<u32> = cover.balls.iter().map(|b| target.min(b.k_max)).collect();
        let mut any_certified = false;
        loop {
            for &gamma in &self.config.gammas {
                let trial = perturb_step(&self.ws, &cover, &ks, gamma, cfg)?;
                if trial.report.uncertified == 0 {
                    any_certified = true;
                }
                if trial.report.acceptable() {
                    let report = self.ws.commit(trial)?;
                    let row = self.row(step, Some(&report), start.elapsed().as_secs_f64());
                    self.rows.push(row);
                    return Ok(StepOutcome::Accepted(report));
                }
            }
            let next: Vec<u32> = ks
                .iter()
                .zip(&cover.balls)
                .map(|(&k, b)| k.saturating_mul(2).min(b.k_max))
                .collect();
            if next == ks {
                let status = if any_certified {
                    Status::Stalled
                } else {
                    Status::ResolutionLimited
                };
                return Ok(self.finish(status));
            }
            ks = next;
        }
    }

    /// Steps until a stopping rule fires.
    pub fn run(mut self) -> Result<RunOutput, SolverError> {
        let status = loop {
            if let StepOutcome::Finished(s) = self.step()? {
                break s;
            }
        };
        Ok(RunOutput {
            status,
            rows: self.rows,
            field: self.ws.into_field(),
        })
    }
}

/// A finished run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub status: Status,
    pub rows: Vec<DiagnosticsRow>,
    pub field: CompositeField,
}

/// `run`: iterate from the zero field until a stopping rule fires.
pub fn run(config: SolverConfig) -> Result<RunOutput, SolverError> {
    Solver::new(config)?.run()
}

/// Writes the diagnostics table as CSV.
pub fn write_diagnostics<W: Write>(rows: &[DiagnosticsRow], out: W) -> Result<(), SolverError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DIAGNOSTICS_HEADER)?;
    for r in rows {
        w.write_record([
            r.step.to_string(),
            format!("{:?}", r.j),
            format!("{:?}", r.i),
            format!("{:?}", r.gap),
            r.cover_size.to_string(),
            r.k.to_string(),
            format!("{:?}", r.gamma),
            format!("{:?}", r.gain),
            format!("{:?}", r.captured),
            format!("{:?}", r.delta),
            format!("{:?}", r.c_measured),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `(t, E, 𝓔, err)` rows as CSV.
pub fn write_energy<W: Write>(profile: &[EnergySample], out: W) -> Result<(), SolverError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "E", "energy", "err"])?;
    for s in profile {
        w.write_record([
            format!("{:?}", s.t),
            format!("{:?}", s.target),
            format!("{:?}", s.actual),
            format!("{:?}", s.error),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One verified property.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub j: Estimate,
    pub i: Estimate,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Active nodes of `grid` whose field value fails certification.
pub fn uncertified_count(
    field: &CompositeField,
    region: &ActiveRegion,
    grid: &UniformGrid,
    margin: f64,
) -> Result<usize, SolverError> {
    let lattice = field.sampling().lattice(field.d())?;
    let params = field.params();
    let dim = grid.dim();
    let n = 2 * field.d() + 1;
    let [bad] = deterministic_sums(grid.len(), |i| {
        let mut y = [0.0; 4];
        grid.node(i, &mut y[..dim]);
        if !region.contains_time(y[0]) {
            return [0.0];
        }
        let mut z = [0.0; 7];
        field.eval_into(&y[..dim], &mut z[..n]);
        let ok = certified_with_f(&z[..n], f_value(params, &y[..dim]), margin, &lattice)
            .unwrap_or(false);
        [if ok { 0.0 } else { 1.0 }]
    });
    Ok(bad as usize)
}

/// Residual probe points, FD step and roundoff floor for `field`.
fn residual_check(field: &CompositeField, seed: u64) -> Check {
    const SAMPLES: usize = 400;
    let waves = field.waves();
    if waves.is_empty() {
        let (a, b) = pde_residual(field, field.params(), SAMPLES, 1e-3, seed);
        return Check {
            name: "residual",
            passed: a == 0.0 && b == 0.0,
            detail: format!("empty field, residuals {a:e} {b:e}"),
        };
    }
    // smallest oscillation length over the waves
    let scale = waves
        .iter()
        .map(|w| w.radius() / w.omega())
        .fold(f64::INFINITY, f64::min);
    let amp = waves
        .iter()
        .map(|w| w.zbar().iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let h = 0.02 * scale;
    let (a1, b1) = pde_residual(field, field.params(), SAMPLES, h, seed);
    let (a2, b2) = pde_residual(field, field.params(), SAMPLES, 0.5 * h, seed);
    let floor = 1e3 * f64::EPSILON * amp * waves.len() as f64 / (0.5 * h);
    let coarse = a1.max(b1);
    let fine = a2.max(b2);
    let ratio = coarse / fine;
    let passed = fine <= floor || ratio >= 3.0;
    Check {
        name: "residual",
        passed,
        detail: format!(
            "max residual {coarse:.3e} at h={h:.3e}, {fine:.3e} at h/2, ratio {ratio:.2}"
        ),
    }
}

/// `verify`: independent recomputation of every property of a field.
pub fn verify(field: &CompositeField, config: &SolverConfig) -> Result<VerifyReport, SolverError> {
    if field.d() != config.params.d() {
        return Err(SolverError::DimensionMismatch {
            expected: config.params.d(),
            found: field.d(),
        });
    }
    config.validate()?;
    let params = field.params();
    let region = config.region()?;
    let grid = config.grid()?;
    let fine = grid.refined(config.refine);
    let mut checks = Vec::new();

    checks.push(Check {
        name: "config",
        passed: params == &config.params,
        detail: if params == &config.params {
            "field header matches configuration".into()
        } else {
            "field header differs from configuration".into()
        },
    });

    let resolved = field.check_grid(&fine);
    checks.push(Check {
        name: "resolution",
        passed: resolved.is_ok(),
        detail: match &resolved {
            Ok(()) => format!("all {} waves resolved", field.len()),
            Err(e) => e.to_string(),
        },
    });
    resolved?;

    let outside: Vec<usize> = field
        .waves()
        .iter()
        .enumerate()
        .filter(|(_, w)| {
            let c = w.center();
            region.clearance(c, params) < w.radius() * (1.0 - 1e-12)
        })
        .map(|(i, _)| i)
        .collect();
    checks.push(Check {
        name: "support",
        passed: outside.is_empty(),
        detail: if outside.is_empty() {
            "every wave ball lies in the active region".into()
        } else {
            format!("waves {outside:?} leave the active region")
        },
    });

    let bad = uncertified_count(field, &region, &fine, config.perturb.margin)?;
    checks.push(Check {
        name: "certification",
        passed: bad == 0,
        detail: format!("{bad} of {} fine nodes uncertified", fine.len()),
    });

    let profile = energy_profile(field, params, &grid)?;
    let mut worst = f64::NEG_INFINITY;
    for s in &profile {
        worst = worst.max(s.actual - s.target - s.error - 1e-12);
    }
    checks.push(Check {
        name: "energy",
        passed: worst <= 0.0,
        detail: format!(
            "max excess over E(t) beyond tolerance {:.3e}",
            worst.max(0.0)
        ),
    });

    let j = j_functional(field, params, &grid)?;
    let i = i_functional(field, &grid)?;
    let gap = energy_gap(&profile, grid.widths()[0]);
    let f_max = params.profile().max_value().sqrt() / params.omega().volume().sqrt();
    let bound = 2.0 * f_max * (j.value.max(0.0) * params.u_volume()).sqrt() + j.error;
    let squeeze = gap >= -1e-12 && gap <= bound;
    checks.push(Check {
        name: "squeeze",
        passed: squeeze,
        detail: format!("gap {gap:.6e} within [0, {bound:.6e}]"),
    });

    checks.push(residual_check(field, config.seed));

    Ok(VerifyReport { j, i, checks })
}
