//! Writes the nonconforming mesh to the text format, reads it back and
//! solves on the file mesh.

use sushi::mesh::{read_mesh_str, write_mesh_string};
use sushi::meshgen::gen_nonconforming_rect;
use sushi::problems::Problem;
use sushi::run::{run_on_mesh, RunConfig};
use sushi::space::PartitionPolicy;

fn main() -> sushi::Result<()> {
    let text = write_mesh_string(&gen_nonconforming_rect(1));
    println!("{}", text.lines().take(6).collect::<Vec<_>>().join("\n"));
    println!("...");
    let mesh = read_mesh_str(&text)?;
    let problem = Problem::by_name("isotropic-smooth")?;
    let config = RunConfig::new(&problem.name, "ncrect:1".parse()?, PartitionPolicy::AllHybrid);
    let out = run_on_mesh(&problem, &config, mesh, None)?;
    let e = out.errors.expect("exact solution known");
    println!(
        "cells {}  N={}  eps(u)={:.3e}  E(u)={:.3e}",
        out.mesh.n_cells(),
        out.system.n(),
        e.eps_u,
        e.flux_consistency.unwrap_or(f64::NAN)
    );
    Ok(())
}
