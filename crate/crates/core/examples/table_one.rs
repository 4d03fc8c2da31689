//! Unknown counts, nonzeros and errors on the three Table 1 meshes, for the
//! hybrid and the cell-centred variants of the anisotropic smooth problem.

use sushi::meshgen::MeshSpec;
use sushi::run::{run, RunConfig};
use sushi::space::PartitionPolicy;

fn main() -> sushi::Result<()> {
    println!("{:<10} {:<16} {:>5} {:>6} {:>12} {:>12}", "mesh", "policy", "N", "NM", "eps(u)", "eps(grad u)");
    for mesh in [MeshSpec::Rect(8, 6), MeshSpec::NonconformingRect(2), MeshSpec::Rect(8, 10)] {
        for policy in [PartitionPolicy::AllHybrid, PartitionPolicy::AllBarycentric] {
            let cfg = RunConfig::new("anisotropic-smooth", mesh.clone(), policy);
            let out = run(&cfg)?;
            let e = out.errors.expect("exact solution known");
            println!(
                "{:<10} {:<16} {:>5} {:>6} {:>12.3e} {:>12.3e}",
                mesh.to_string(),
                policy.to_string(),
                out.system.n(),
                out.system.nm(),
                e.eps_u,
                e.eps_grad
            );
        }
    }
    Ok(())
}
