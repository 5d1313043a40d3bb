//! `convint`: build, inspect and verify constructed solutions.
//!
//! Exit codes: 0 success, 1 configuration or input error (or a failed
//! verification), 2 solver stalled, 3 resolution limit reached.

mod config;
mod output;

use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use convint_core::constraint::{dist_to_k, ConstraintParams, DomainBox, EnergyProfile};
use convint_core::field::{self, energy_profile, u_grid, CompositeField, Sampling};
use convint_core::solver::{self, SolverConfig};
use convint_core::waves::{
    divergence_residual, l2_mass, make_wave, min_cells, plane_wave_energy_bound, wave_eval,
    WaveError,
};

use config::ConfigFile;
use output::{unix_seconds, write_atomic, RunManifest, Staging};

const EXIT_ERROR: u8 = 1;
const EXIT_RESOLUTION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "convint",
    version,
    about = "Convex-integration solutions of the continuity equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver and write field, diagnostics, energy profile and manifest.
    Solve {
        /// TOML configuration, or a manifest from an earlier run.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides solver.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Recheck every property of a field file against a configuration.
    Verify {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Build one wave and report its values, residual and mass.
    Wave {
        /// Amplitude z̄ = (u, m, b) as comma-separated numbers.
        #[arg(long, allow_hyphen_values = true)]
        zbar: String,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 0.25)]
        radius: f64,
        /// Center (t, x) as comma-separated numbers; defaults to the middle
        /// of the unit cylinder.
        #[arg(long, allow_hyphen_values = true)]
        center: Option<String>,
        /// Cells per axis for the mass quadrature.
        #[arg(long)]
        cells: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write grids or profiles of a field as CSV.
    Export {
        #[arg(long)]
        field: PathBuf,
        /// energy, u, b or dist.
        #[arg(long)]
        what: String,
        /// Supplies grid resolutions; defaults are 64 by 64.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Time of the u and b slices; defaults to the interval midpoint.
        #[arg(long, allow_hyphen_values = true)]
        t: Option<f64>,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// An error with its exit code.
struct Failure(u8, String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(EXIT_ERROR, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Solve { config, out, seed } => cmd_solve(&config, &out, seed),
        Command::Verify { field, config } => cmd_verify(&field, &config),
        Command::Wave {
            zbar,
            k,
            radius,
            center,
            cells,
            out,
        } => cmd_wave(&zbar, k, radius, center.as_deref(), cells, &out),
        Command::Export {
            field,
            what,
            config,
            t,
            out,
        } => cmd_export(&field, &what, config.as_deref(), t, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

/// Loads a TOML configuration or the snapshot inside a manifest.
fn load_config(path: &Path) -> Result<(ConfigFile, Option<u64>), Failure> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure(EXIT_ERROR, format!("cannot read {}: {e}", path.display())))?;
        let m = RunManifest::from_json(&text)
            .map_err(|e| Failure(EXIT_ERROR, format!("malformed manifest: {e}")))?;
        Ok((ConfigFile::parse(&m.config)?, Some(m.seed)))
    } else {
        Ok((ConfigFile::load(path)?, None))
    }
}

fn read_field(path: &Path) -> Result<CompositeField, Failure> {
    let f = fs::File::open(path)
        .map_err(|e| Failure(EXIT_ERROR, format!("cannot read {}: {e}", path.display())))?;
    field::deserialize(BufReader::new(f))
        .map_err(|e| Failure(EXIT_ERROR, format!("field file {}: {e}", path.display())))
}

fn cmd_solve(config: &Path, out: &Path, seed: Option<u64>) -> Result<u8, Failure> {
    let started = unix_seconds();
    let (mut cfg, manifest_seed) = load_config(config)?;
    if let Some(s) = seed.or(manifest_seed) {
        cfg.solver.seed = s;
    }
    let sc = cfg.solver_config()?;
    let result = solver::run(sc.clone())?;

    let mut diag = Vec::new();
    solver::write_diagnostics(&result.rows, &mut diag)?;
    let grid = sc.grid()?;
    let profile = energy_profile(&result.field, &sc.params, &grid)?;
    let mut energy = Vec::new();
    solver::write_energy(&profile, &mut energy)?;

    let mut stage = Staging::new(out)?;
    stage.write("field.waves", field::to_string(&result.field).as_bytes())?;
    stage.write("diagnostics.csv", &diag)?;
    stage.write("energy.csv", &energy)?;
    let mut outputs = stage.names().to_vec();
    outputs.push("manifest.json".into());
    let manifest = RunManifest {
        tool: "convint".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.solver.seed,
        config_path: config.display().to_string(),
        output_dir: out.display().to_string(),
        outputs,
        status: result.status.name().into(),
        accepted_steps: result.rows.len() - 1,
        step_wall_seconds: result.rows.iter().skip(1).map(|r| r.wall_seconds).collect(),
        started_unix: started,
        finished_unix: unix_seconds(),
        config: cfg.to_toml(),
    };
    stage.write("manifest.json", manifest.to_json().as_bytes())?;
    stage.commit()?;

    let last = result.rows.last().expect("row 0 always exists");
    eprintln!(
        "{}: {} accepted steps, J = {:.6}, {} waves",
        result.status.name(),
        result.rows.len() - 1,
        last.j,
        result.field.len()
    );
    Ok(result.status.exit_code() as u8)
}

fn cmd_verify(field_path: &Path, config: &Path) -> Result<u8, Failure> {
    let field = read_field(field_path)?;
    let (cfg, _) = load_config(config)?;
    let sc = cfg.solver_config()?;
    let report = solver::verify(&field, &sc)?;
    println!("J = {:.9e} ± {:.2e}", report.j.value, report.j.error);
    println!("I = {:.9e} ± {:.2e}", report.i.value, report.i.error);
    for c in &report.checks {
        println!(
            "{:<14} {}  {}",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.detail
        );
    }
    if report.passed() {
        Ok(0)
    } else {
        let names: Vec<&str> = report.failures().map(|c| c.name).collect();
        Err(Failure(EXIT_ERROR, format!("failed: {}", names.join(", "))))
    }
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure(EXIT_ERROR, format!("{what}: {e}")))
}

fn wave_failure(e: WaveError) -> Failure {
    match e {
        WaveError::UnderResolved { .. } => Failure(EXIT_RESOLUTION, e.to_string()),
        _ => Failure(EXIT_ERROR, e.to_string()),
    }
}

fn cmd_wave(
    zbar: &str,
    k: u32,
    radius: f64,
    center: Option<&str>,
    cells: Option<usize>,
    out: &Path,
) -> Result<u8, Failure> {
    let zbar = parse_list(zbar, "zbar")?;
    if zbar.len() % 2 == 0 || !(5..=7).contains(&zbar.len()) {
        return Err(Failure(
            EXIT_ERROR,
            format!(
                "zbar needs 5 (d = 2) or 7 (d = 3) entries, found {}",
                zbar.len()
            ),
        ));
    }
    let d = (zbar.len() - 1) / 2;
    let center = match center {
        Some(c) => parse_list(c, "center")?,
        None => vec![0.5; d + 1],
    };
    let wave = make_wave(&zbar, &center, radius, k, d).map_err(wave_failure)?;
    let cells = cells.unwrap_or(min_cells(k));
    let mass = l2_mass(&wave, cells).map_err(wave_failure)?;
    let params =
        ConstraintParams::new(DomainBox::unit(d), EnergyProfile::constant(0.0, 1.0, 1.0)?)?;
    let field = CompositeField::new(params, Sampling::default_for(d, None), vec![wave.clone()])?;

    // value slice along the time axis through the center
    let mut slice = String::from("s");
    for name in component_names(d) {
        slice.push(',');
        slice.push_str(&name);
    }
    slice.push('\n');
    let steps = 200;
    for i in 0..=steps {
        let s = -1.1 * radius + 2.2 * radius * i as f64 / steps as f64;
        let mut y = center.clone();
        y[0] += s;
        let z = wave_eval(&wave, &y);
        let _ = write!(slice, "{s:?}");
        for v in z.as_slice() {
            let _ = write!(slice, ",{v:?}");
        }
        slice.push('\n');
    }

    let h = 0.02 * radius / wave.omega();
    let mut worst = [0.0f64; 4];
    for j in 0..=d {
        for frac in [0.3, -0.55, 0.8] {
            let mut y = center.clone();
            y[j] += frac * radius;
            let (a1, b1) = divergence_residual(&wave, &y, h);
            let (a2, b2) = divergence_residual(&wave, &y, 0.5 * h);
            worst[0] = worst[0].max(a1.abs());
            worst[1] = worst[1].max(b1.abs());
            worst[2] = worst[2].max(a2.abs());
            worst[3] = worst[3].max(b2.abs());
        }
    }
    let at_center = wave_eval(&wave, &center);
    let bound = plane_wave_energy_bound(&wave);
    let report = format!(
        "branch {}\nk {k}\nradius {radius:?}\ncenter value {:?}\nl2 mass {mass:?} ({cells} cells)\n\
         energy bound {bound:?}\nmass/bound {:.4}\n\
         residual h {h:?}: {:.3e} {:.3e}\nresidual h/2: {:.3e} {:.3e}\n",
        wave.branch().name(),
        at_center.as_slice(),
        mass / bound,
        worst[0],
        worst[1],
        worst[2],
        worst[3],
    );

    let mut stage = Staging::new(out)?;
    stage.write("wave.waves", field::to_string(&field).as_bytes())?;
    stage.write("slice.csv", slice.as_bytes())?;
    stage.write("report.txt", report.as_bytes())?;
    stage.commit()?;
    print!("{report}");
    Ok(0)
}

fn component_names(d: usize) -> Vec<String> {
    let mut v = vec!["u".to_string()];
    v.extend((1..=d).map(|i| format!("m{i}")));
    v.extend((1..=d).map(|i| format!("b{i}")));
    v
}

fn cmd_export(
    field_path: &Path,
    what: &str,
    config: Option<&Path>,
    t: Option<f64>,
    out: Option<&Path>,
) -> Result<u8, Failure> {
    if !matches!(what, "energy" | "u" | "b" | "dist") {
        return Err(Failure(
            EXIT_ERROR,
            format!("unknown export target {what:?} (expected energy, u, b or dist)"),
        ));
    }
    let field = read_field(field_path)?;
    let params = field.params().clone();
    let (nt, nx) = match config {
        Some(p) => {
            let (cfg, _) = load_config(p)?;
            (cfg.grid.nt, cfg.grid.nx)
        }
        None => {
            let c = SolverConfig::new(params.clone());
            (c.nt, c.nx)
        }
    };
    let grid = u_grid(&params, nt, nx)?;
    let d = field.d();
    let mut text = String::new();
    match what {
        "energy" => {
            let profile = energy_profile(&field, &params, &grid)?;
            let mut buf = Vec::new();
            solver::write_energy(&profile, &mut buf)?;
            text = String::from_utf8(buf).expect("csv output is UTF-8");
        }
        "u" | "b" => {
            let (t0, t1) = params.profile().interval();
            let t = t.unwrap_or(0.5 * (t0 + t1));
            let axes: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
            let _ = writeln!(text, "{},{what}", axes.join(","));
            let per = grid.slice_len();
            let mut y = vec![0.0; d + 1];
            for i in 0..per {
                grid.node(i, &mut y);
                y[0] = t;
                let z = field.eval(&y);
                let v = if what == "u" {
                    z.u()
                } else {
                    z.b().iter().map(|b| b * b).sum::<f64>().sqrt()
                };
                let coords: Vec<String> = y[1..].iter().map(|c| format!("{c:?}")).collect();
                let _ = writeln!(text, "{},{v:?}", coords.join(","));
            }
        }
        _ => {
            let axes: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
            let _ = writeln!(text, "t,{},dist", axes.join(","));
            let mut y = vec![0.0; d + 1];
            for i in 0..grid.len() {
                grid.node(i, &mut y);
                let z = field.eval(&y);
                let dist = dist_to_k(z.as_slice(), &y, &params);
                let coords: Vec<String> = y.iter().map(|c| format!("{c:?}")).collect();
                let _ = writeln!(text, "{},{dist:?}", coords.join(","));
            }
        }
    }
    match out {
        Some(p) => write_atomic(p, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(0)
}
