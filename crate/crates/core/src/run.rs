//! End-to-end pipeline: mesh, partition, weights, assembly, solve and
//! post-processing for one problem on one mesh.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_with, local_matrices, LinearSystem, LocalFluxMatrix, TensorField};
use crate::error::Result;
use crate::gradient::{check_alpha, gradient_field, GradientField, DEFAULT_ALPHA};
use crate::mesh::{theta_d, Mesh};
use crate::meshgen::{MeshSpec, RegionMap};
use crate::postproc::{
    boundary_flux_totals, composite_fluxes, convergence_order, error_norms, export_vtk, flux_consistency_e,
    reconstruct_faces, write_json, write_run_csv, ErrorReport, FluxReport, RunRecord, SideTotals,
};
use crate::problems::Problem;
use crate::solver::{solve_cg, CgOptions, SolveReport};
use crate::space::{
    compute_weights_with, partition_faces_with, BarycentricWeights, DiscreteFunction,
    EdgePartition, PartitionOptions, PartitionPolicy, WeightOptions,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Built-in problem name or path to a JSON descriptor.
    pub problem: String,
    pub mesh: MeshSpec,
    pub policy: PartitionPolicy,
    pub alpha: f64,
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
    /// Exponent of the reported discrete `W^{1,p}` norm.
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub extended_weights: bool,
    #[serde(default = "default_true")]
    pub promote_collinear: bool,
    #[serde(default = "default_true")]
    pub prefer_pairs: bool,
}

fn default_p() -> f64 {
    2.0
}

fn default_true() -> bool {
    true
}

impl RunConfig {
    pub fn new(problem: &str, mesh: MeshSpec, policy: PartitionPolicy) -> Self {
        Self {
            problem: problem.into(),
            mesh,
            policy,
            alpha: DEFAULT_ALPHA,
            tol: 1e-12,
            seed: 0,
            p: 2.0,
            extended_weights: false,
            promote_collinear: true,
            prefer_pairs: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(crate::Error::InvalidConfig(format!("tolerance must lie in (0, 1), got {}", self.tol)));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(crate::Error::InvalidConfig(format!("p must be at least 1, got {}", self.p)));
        }
        Ok(())
    }
}

/// Everything computed by one run.
#[derive(Debug)]
pub struct RunOutcome {
    pub mesh: Mesh,
    pub regions: Option<RegionMap>,
    pub partition: EdgePartition,
    pub weights: BarycentricWeights,
    pub tensor: TensorField,
    pub locals: Vec<LocalFluxMatrix>,
    pub system: LinearSystem,
    pub solution: DiscreteFunction,
    pub gradient: GradientField,
    pub solve: SolveReport,
    pub fluxes: FluxReport,
    pub sides: Option<SideTotals>,
    pub errors: Option<ErrorReport>,
}

/// Runs `problem` with the settings of `config` (its `problem` field is
/// ignored here).
pub fn run_problem(problem: &Problem, config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let (mesh, gen_regions) = config.mesh.build()?;
    run_on_mesh(problem, config, mesh, gen_regions)
}

pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    let problem = Problem::by_name(&config.problem)?;
    run_problem(&problem, config)
}

/// As [`run_problem`], on an already built mesh. Generator regions take
/// precedence over the problem's region function.
pub fn run_on_mesh(
    problem: &Problem,
    config: &RunConfig,
    mesh: Mesh,
    regions: Option<RegionMap>,
) -> Result<RunOutcome> {
    config.validate()?;
    let regions = regions.or_else(|| problem.region_map(&mesh));
    let partition = partition_faces_with(
        &mesh,
        config.policy,
        regions.as_ref(),
        PartitionOptions {
            promote_collinear: config.promote_collinear,
        },
    )?;
    let weights = compute_weights_with(
        &mesh,
        &partition,
        regions.as_ref(),
        WeightOptions {
            use_hybrid_points: config.extended_weights,
            prefer_pairs: config.prefer_pairs,
            ..Default::default()
        },
    )?;
    let tensor = problem.tensor_field(&mesh, regions.as_ref())?;
    tensor.validate(&mesh)?;
    let locals = local_matrices(&mesh, &tensor, config.alpha)?;
    let source = |x| (problem.source)(x);
    let boundary = |x| (problem.boundary)(x);
    let system = assemble_with(&mesh, &partition, &weights, &locals, source, boundary)?;
    let (x, solve) = solve_cg(
        &system.matrix,
        &system.rhs,
        CgOptions {
            tol: config.tol,
            ..Default::default()
        },
    )?;
    log::info!(
        "{} on {}: N = {}, NM = {}, {} iterations",
        problem.name,
        config.mesh,
        system.n(),
        system.nm(),
        solve.iterations
    );
    let solution = reconstruct_faces(&mesh, &partition, &weights, &system.numbering, &x, boundary)?;
    let gradient = gradient_field(&mesh, &solution, config.alpha);
    let fluxes = composite_fluxes(&mesh, &partition, &weights, &locals, &solution, source)?;
    let sides = if problem.boundary_fluxes.is_some() {
        Some(boundary_flux_totals(&mesh, &fluxes)?)
    } else {
        boundary_flux_totals(&mesh, &fluxes).ok()
    };
    let errors = match &problem.exact {
        Some(exact) => {
            let mut rep = error_norms(&mesh, &solution, &gradient, exact, config.p);
            if tensor.is_identity() {
                rep.flux_consistency =
                    Some(flux_consistency_e(&mesh, &partition, &weights, &tensor, &locals, exact)?);
            }
            Some(rep)
        }
        None => None,
    };
    Ok(RunOutcome {
        mesh,
        regions,
        partition,
        weights,
        tensor,
        locals,
        system,
        solution,
        gradient,
        solve,
        fluxes,
        sides,
        errors,
    })
}

/// Run manifest written next to the artifacts. Holds no timing so that
/// identical configurations give identical files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub problem: String,
    pub n_cells: usize,
    pub n_faces: usize,
    pub n_hybrid: usize,
    pub n_barycentric: usize,
    pub n: usize,
    pub nm: usize,
    pub h: f64,
    pub theta_d: f64,
    pub max_abs_weight: f64,
    pub solver: String,
    pub iterations: usize,
    pub residual: f64,
    pub errors: Option<ErrorReport>,
    pub boundary_fluxes: Option<SideTotals>,
    pub exact_boundary_fluxes: Option<[f64; 4]>,
    /// How `ε(u)` and `ε(∇u)` are sampled.
    pub error_norm: String,
    pub files: Vec<String>,
}

impl RunOutcome {
    pub fn record(&self, config: &RunConfig) -> RunRecord {
        let s = self.sides.map(|s| s.as_array());
        RunRecord {
            mesh: config.mesh.to_string(),
            policy: config.policy.to_string(),
            alpha: config.alpha,
            h: self.mesh.h,
            n: self.system.n(),
            nm: self.system.nm(),
            iterations: self.solve.iterations,
            eps_u: self.errors.as_ref().map(|e| e.eps_u),
            eps_grad: self.errors.as_ref().map(|e| e.eps_grad),
            flux_x_min: s.map(|s| s[0]),
            flux_x_max: s.map(|s| s[1]),
            flux_y_min: s.map(|s| s[2]),
            flux_y_max: s.map(|s| s[3]),
        }
    }

    pub fn manifest(&self, problem: &Problem, config: &RunConfig, files: Vec<String>) -> Manifest {
        Manifest {
            config: config.clone(),
            problem: problem.name.clone(),
            n_cells: self.mesh.n_cells(),
            n_faces: self.mesh.n_faces(),
            n_hybrid: self.partition.n_hybrid(),
            n_barycentric: self.partition.n_barycentric(),
            n: self.system.n(),
            nm: self.system.nm(),
            h: self.mesh.h,
            theta_d: theta_d(&self.mesh),
            max_abs_weight: self.weights.max_abs(),
            solver: self.solve.method.clone(),
            iterations: self.solve.iterations,
            residual: self.solve.residual,
            errors: self.errors.clone(),
            boundary_fluxes: self.sides,
            exact_boundary_fluxes: problem.boundary_fluxes,
            error_norm: "cell-point L2 for u, cone-centroid L2 for the gradient".into(),
            files,
        }
    }

    /// Writes `solution.vtk`, `report.csv`, `manifest.json` and, when faces
    /// were eliminated, `weights.csv`; with `matrix`, also `matrix.mtx`.
    pub fn write_artifacts(
        &self,
        problem: &Problem,
        config: &RunConfig,
        dir: &Path,
        matrix: bool,
    ) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut files = vec!["solution.vtk".to_string(), "report.csv".into()];
        export_vtk(
            &self.mesh,
            &self.solution,
            &self.gradient,
            self.regions.as_ref(),
            BufWriter::new(File::create(dir.join("solution.vtk"))?),
        )?;
        write_run_csv(&[self.record(config)], File::create(dir.join("report.csv"))?)?;
        if self.partition.n_barycentric() > 0 {
            self.weights.write_csv(File::create(dir.join("weights.csv"))?)?;
            files.push("weights.csv".into());
        }
        if matrix {
            self.system
                .matrix
                .write_matrix_market(BufWriter::new(File::create(dir.join("matrix.mtx"))?))?;
            files.push("matrix.mtx".into());
        }
        files.push("manifest.json".into());
        let manifest = self.manifest(problem, config, files.clone());
        write_json(&manifest, File::create(dir.join("manifest.json"))?)?;
        Ok(files.into_iter().map(|f| dir.join(f)).collect())
    }
}

/// Refinement study over several levels of one mesh family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Study {
    pub records: Vec<RunRecord>,
    pub reports: Vec<ErrorReport>,
    /// Fitted order of `ε(u)` in `h`.
    pub slope_u: f64,
    /// Fitted order of `ε(∇u)`.
    pub slope_grad: f64,
    /// Fitted order of the relative cell-gradient error.
    pub slope_cell_grad: f64,
    /// Fitted order of `E(ū)`, when `Λ = Id`.
    pub slope_flux_consistency: Option<f64>,
}

/// Runs `problem` on `config.mesh.with_level(n)` for every `n` in `levels`.
pub fn convergence_study(problem: &Problem, config: &RunConfig, levels: &[usize]) -> Result<Study> {
    if problem.exact.is_none() {
        return Err(crate::Error::InvalidConfig(format!(
            "problem '{}' has no exact solution",
            problem.name
        )));
    }
    let mut records = Vec::new();
    let mut reports = Vec::new();
    for &n in levels {
        let cfg = RunConfig {
            mesh: config.mesh.with_level(n)?,
            ..config.clone()
        };
        let out = run_problem(problem, &cfg)?;
        records.push(out.record(&cfg));
        reports.push(out.errors.expect("exact solution known"));
    }
    let fit = |f: &dyn Fn(&ErrorReport) -> f64| {
        let series: Vec<(f64, f64)> = records.iter().zip(&reports).map(|(r, e)| (r.h, f(e))).collect();
        convergence_order(&series)
    };
    let slope_u = fit(&|e| e.eps_u)?;
    let slope_grad = fit(&|e| e.eps_grad)?;
    let slope_cell_grad = fit(&|e| e.rel_eps_cell_grad)?;
    let slope_flux_consistency = if reports.iter().all(|e| e.flux_consistency.is_some()) {
        Some(fit(&|e| e.flux_consistency.unwrap())?)
    } else {
        None
    };
    Ok(Study {
        records,
        reports,
        slope_u,
        slope_grad,
        slope_cell_grad,
        slope_flux_consistency,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let mut c = RunConfig::new("anisotropic-smooth", MeshSpec::Rect(2, 2), PartitionPolicy::AllHybrid);
        assert!(c.validate().is_ok());
        c.alpha = 0.0;
        assert!(c.validate().is_err());
        c.alpha = 1.0;
        c.tol = 2.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn artifacts_are_deterministic() {
        let c = RunConfig::new("tilted-barrier", MeshSpec::TiltedBarrier(1), PartitionPolicy::DiscontinuityAligned);
        let p = Problem::by_name(&c.problem).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let fa = run_problem(&p, &c).unwrap().write_artifacts(&p, &c, a.path(), true).unwrap();
        let fb = run_problem(&p, &c).unwrap().write_artifacts(&p, &c, b.path(), true).unwrap();
        assert_eq!(fa.len(), 5);
        for (x, y) in fa.iter().zip(&fb) {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{x:?}");
        }
        let m: Manifest = serde_json::from_reader(File::open(a.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m.n_cells, 210);
        assert_eq!(m.config, c);
    }
}
