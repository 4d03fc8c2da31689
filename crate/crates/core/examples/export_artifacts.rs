//! Solves the anisotropic problem and writes the VTK, CSV, weights,
//! MatrixMarket and manifest files to a directory (default `out/example`).

use std::path::PathBuf;

use sushi::meshgen::MeshSpec;
use sushi::problems::Problem;
use sushi::run::{run_problem, RunConfig};
use sushi::space::PartitionPolicy;

fn main() -> sushi::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "out/example".into());
    let problem = Problem::by_name("anisotropic-smooth")?;
    let config = RunConfig::new(&problem.name, MeshSpec::NonconformingRect(2), PartitionPolicy::AllBarycentric);
    let outcome = run_problem(&problem, &config)?;
    for path in outcome.write_artifacts(&problem, &config, &dir, true)? {
        println!("{}", path.display());
    }
    Ok(())
}
