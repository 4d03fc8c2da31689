//! Command-line front end: `solve`, `convergence` and `mesh-check`.
//!
//! Exit codes: 0 on success, 1 on a numerical failure (including a failed
//! check), 2 on bad input.

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::gradient::DEFAULT_ALPHA;
use crate::mesh::{regularity, validate};
use crate::meshgen::MeshSpec;
use crate::postproc::{convergence_order, read_run_csv, write_run_csv};
use crate::problems::Problem;
use crate::run::{convergence_study, run_problem, RunConfig};
use crate::space::{compute_weights, partition_faces, PartitionPolicy};

/// `θ_D` above which mesh-check warns.
pub const THETA_WARNING: f64 = 100.0;

#[derive(Debug, Parser)]
#[command(name = "sushi", version, about = "SUSHI finite volume schemes for anisotropic diffusion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem on one mesh and write VTK, CSV and JSON artifacts.
    Solve(SolveArgs),
    /// Refinement study over a mesh family, or a replay of stored errors.
    Convergence(ConvergenceArgs),
    /// Check the geometric identities and regularity of a mesh.
    MeshCheck(MeshCheckArgs),
}

#[derive(Debug, Args)]
pub struct SchemeArgs {
    /// anisotropic-smooth, isotropic-smooth, tilted-barrier, superadmissible
    /// or a path to a JSON descriptor.
    #[arg(long, default_value = "anisotropic-smooth")]
    pub problem: String,
    /// rect:NxM | tri:N | ncrect:N | barrier:1|2|3 | file:PATH
    #[arg(long, default_value = "rect:8x6")]
    pub mesh: MeshSpec,
    /// all-hybrid | all-barycentric | discontinuity
    #[arg(long, default_value = "all-hybrid")]
    pub policy: PartitionPolicy,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Relative residual target of the conjugate gradient.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Recorded in the manifest; only randomised checks consume it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use hybrid face barycentres as barycentric support points.
    #[arg(long)]
    pub extended_weights: bool,
    /// Keep hybrid unknowns only on region-crossing faces.
    #[arg(long)]
    pub strict_partition: bool,
    /// Pick weights by minimum spread only, without preferring neighbour pairs.
    #[arg(long)]
    pub min_spread_weights: bool,
}

impl SchemeArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            alpha: self.alpha,
            tol: self.tol,
            seed: self.seed,
            extended_weights: self.extended_weights,
            promote_collinear: !self.strict_partition,
            prefer_pairs: !self.min_spread_weights,
            ..RunConfig::new(&self.problem, self.mesh.clone(), self.policy)
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Also write the matrix in MatrixMarket format.
    #[arg(long)]
    pub matrix: bool,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Refinement parameters of the mesh family.
    #[arg(long, value_delimiter = ',', default_values_t = [4usize, 8, 16, 32])]
    pub levels: Vec<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Fit orders from a stored study CSV instead of solving.
    #[arg(long, conflicts_with = "synthetic")]
    pub replay: Option<PathBuf>,
    /// Fit orders of the synthetic series `e = h^ORDER` as a self-check.
    #[arg(long)]
    pub synthetic: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MeshCheckArgs {
    #[arg(long)]
    pub mesh: MeshSpec,
    /// Also report θ_{D,B} for this partition.
    #[arg(long)]
    pub policy: Option<PartitionPolicy>,
}

/// `%g`-style formatting with six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..6).contains(&exp) {
        let s = format!("{:.*}", (5 - exp).max(0) as usize, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.5e}");
        let (mantissa, e) = s.split_once('e').unwrap();
        let mantissa = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{mantissa}e{e}")
    }
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    exit_code(execute(&cli, &mut stdout.lock()))
}

pub fn exit_code(result: Result<bool>) -> i32 {
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                2
            } else {
                1
            }
        }
    }
}

/// Runs a parsed command; `Ok(false)` means a check failed.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<bool> {
    match &cli.command {
        Command::Solve(a) => solve(a, out),
        Command::Convergence(a) => convergence(a, out),
        Command::MeshCheck(a) => mesh_check(a, out),
    }
}

fn solve(a: &SolveArgs, out: &mut dyn Write) -> Result<bool> {
    let config = a.scheme.config();
    let problem = Problem::by_name(&config.problem)?;
    let r = run_problem(&problem, &config)?;
    writeln!(out, "problem {} on {} ({})", problem.name, config.mesh, config.policy)?;
    writeln!(
        out,
        "cells {}  hybrid faces {}  barycentric faces {}",
        r.mesh.n_cells(),
        r.partition.n_hybrid(),
        r.partition.n_barycentric()
    )?;
    writeln!(out, "N={}  NM={}", r.system.n(), r.system.nm())?;
    writeln!(
        out,
        "{}: {} iterations, residual {}, {} s",
        r.solve.method,
        r.solve.iterations,
        sig6(r.solve.residual),
        sig6(r.solve.wall_time_s)
    )?;
    if let Some(e) = &r.errors {
        writeln!(out, "eps(u) = {}  eps(grad u) = {}", sig6(e.eps_u), sig6(e.eps_grad))?;
        if let Some(fc) = e.flux_consistency {
            writeln!(out, "E(u) = {}", sig6(fc))?;
        }
    }
    if let Some(s) = r.sides {
        let v = s.as_array().map(sig6);
        writeln!(out, "boundary fluxes (x=0 x=1 y=0 y=1): {} {} {} {}", v[0], v[1], v[2], v[3])?;
    }
    let files = r.write_artifacts(&problem, &config, &a.out, a.matrix)?;
    for f in files {
        writeln!(out, "wrote {}", f.display())?;
    }
    Ok(true)
}

fn fit_report(out: &mut dyn Write, label: &str, series: &[(f64, f64)]) -> Result<f64> {
    let s = convergence_order(series)?;
    writeln!(out, "order {label}: {}", sig6(s))?;
    Ok(s)
}

fn convergence(a: &ConvergenceArgs, out: &mut dyn Write) -> Result<bool> {
    if let Some(order) = a.synthetic {
        let series: Vec<(f64, f64)> = (1..=5)
            .map(|k| {
                let h = 0.5f64.powi(k);
                (h, 3.0 * h.powf(order))
            })
            .collect();
        fit_report(out, "synthetic", &series)?;
        return Ok(true);
    }
    if let Some(path) = &a.replay {
        let records = File::open(path)
            .map_err(Error::from)
            .and_then(read_run_csv)
            .map_err(|e| e.in_file(path))?;
        let pick = |f: fn(&crate::postproc::RunRecord) -> Option<f64>| -> Result<Vec<(f64, f64)>> {
            records
                .iter()
                .map(|r| {
                    f(r).map(|e| (r.h, e))
                        .ok_or_else(|| Error::InvalidConfig(format!("{}: row without errors", path.display())))
                })
                .collect()
        };
        fit_report(out, "eps(u)", &pick(|r| r.eps_u)?)?;
        fit_report(out, "eps(grad u)", &pick(|r| r.eps_grad)?)?;
        return Ok(true);
    }
    let config = a.scheme.config();
    let problem = Problem::by_name(&config.problem)?;
    let study = convergence_study(&problem, &config, &a.levels)?;
    for (r, e) in study.records.iter().zip(&study.reports) {
        writeln!(
            out,
            "{}  h={}  N={}  NM={}  eps(u)={}  eps(grad u)={}",
            r.mesh,
            sig6(r.h),
            r.n,
            r.nm,
            sig6(e.eps_u),
            sig6(e.eps_grad)
        )?;
    }
    writeln!(out, "order eps(u): {}", sig6(study.slope_u))?;
    writeln!(out, "order eps(grad u): {}", sig6(study.slope_grad))?;
    writeln!(out, "order cell gradient (relative): {}", sig6(study.slope_cell_grad))?;
    if let Some(s) = study.slope_flux_consistency {
        writeln!(out, "order E(u): {}", sig6(s))?;
    }
    std::fs::create_dir_all(&a.out)?;
    let path = a.out.join("convergence.csv");
    write_run_csv(&study.records, File::create(&path)?)?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(true)
}

fn mesh_check(a: &MeshCheckArgs, out: &mut dyn Write) -> Result<bool> {
    // a readable file with broken topology is a failed check, not bad input
    let (mesh, regions) = match a.mesh.build() {
        Err(e) if matches!(e.root(), Error::InvalidTopology(_)) => {
            writeln!(out, "{e}")?;
            writeln!(out, "FAIL")?;
            return Ok(false);
        }
        built => built?,
    };
    let report = validate(&mesh);
    let reg = match a.policy {
        Some(policy) => {
            let p = partition_faces(&mesh, policy, regions.as_ref())?;
            let w = compute_weights(&mesh, &p, regions.as_ref())?;
            regularity(&mesh, Some((&p, &w)))?
        }
        None => regularity(&mesh, None)?,
    };
    writeln!(
        out,
        "mesh {}: {} cells, {} faces, {} vertices",
        a.mesh,
        mesh.n_cells(),
        mesh.n_faces(),
        mesh.vertices.len()
    )?;
    writeln!(out, "theta_D = {}", sig6(reg.theta_d))?;
    if let Some(t) = reg.theta_db {
        writeln!(out, "theta_DB = {}", sig6(t))?;
    }
    if reg.theta_d > THETA_WARNING {
        writeln!(out, "warning: theta_D = {} is large (thin or stretched cells)", sig6(reg.theta_d))?;
    }
    let worst = |f: fn(&crate::mesh::CellResidual) -> f64| report.cells.iter().map(f).fold(0.0, f64::max);
    writeln!(out, "max moment residual    {}", sig6(worst(|c| c.moment)))?;
    writeln!(out, "max distance residual  {}", sig6(worst(|c| c.distance_sum)))?;
    writeln!(out, "max closure residual   {}", sig6(worst(|c| c.closure)))?;
    writeln!(out, "domain measure residual {}", sig6(report.domain_residual))?;
    for e in &report.topology_errors {
        writeln!(out, "topology: {e}")?;
    }
    for c in report.failures() {
        writeln!(
            out,
            "cell {}: moment {} distance {} closure {}",
            c.cell,
            sig6(c.moment),
            sig6(c.distance_sum),
            sig6(c.closure)
        )?;
    }
    let passed = report.passed();
    writeln!(out, "{}", if passed { "PASS" } else { "FAIL" })?;
    Ok(passed)
}
