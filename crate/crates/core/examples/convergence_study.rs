//! Convergence orders of the anisotropic smooth problem on the triangular,
//! square and nonconforming families, for the hybrid and cell-centred schemes.

use sushi::meshgen::MeshSpec;
use sushi::problems::Problem;
use sushi::run::{convergence_study, RunConfig};
use sushi::space::PartitionPolicy;

fn main() -> sushi::Result<()> {
    let problem = Problem::by_name("anisotropic-smooth")?;
    let families: [(MeshSpec, &[usize]); 3] = [
        (MeshSpec::Tri(4), &[4, 8, 16, 32]),
        (MeshSpec::Rect(4, 4), &[4, 8, 16, 32]),
        (MeshSpec::NonconformingRect(1), &[1, 2, 3, 4, 5]),
    ];
    for (mesh, levels) in families {
        for policy in [PartitionPolicy::AllHybrid, PartitionPolicy::AllBarycentric] {
            let study = convergence_study(&problem, &RunConfig::new(&problem.name, mesh.clone(), policy), levels)?;
            println!("{mesh} family, {policy}");
            for (r, e) in study.records.iter().zip(&study.reports) {
                println!(
                    "  {:<10} h = {:.4}  N = {:>5}  eps(u) = {:.3e}  eps(grad u) = {:.3e}  cell grad (rel) = {:.3e}",
                    r.mesh, r.h, r.n, e.eps_u, e.eps_grad, e.rel_eps_cell_grad
                );
            }
            println!(
                "  orders: u {:.3}, grad u {:.3}, cell gradient {:.3}",
                study.slope_u, study.slope_grad, study.slope_cell_grad
            );
        }
    }
    Ok(())
}
