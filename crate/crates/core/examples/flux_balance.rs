//! Composite fluxes after a SUSHI-NP solve of the tilted barrier: hybrid
//! faces are conservative and every cell balances through pair fluxes.

use sushi::meshgen::MeshSpec;
use sushi::run::{run, RunConfig};
use sushi::space::PartitionPolicy;

fn main() -> sushi::Result<()> {
    let cfg = RunConfig::new("tilted-barrier", MeshSpec::TiltedBarrier(2), PartitionPolicy::DiscontinuityAligned);
    let out = run(&cfg)?;
    let f = &out.fluxes;
    println!("hybrid faces {}  pair fluxes {}", f.hybrid_residuals.len(), f.pairs.len() / 2);
    println!("max hybrid residual      {:.2e}", f.max_hybrid_residual());
    println!("max pair antisymmetry    {:.2e}", f.max_antisymmetry());
    println!("max cell balance         {:.2e}", f.max_cell_balance());
    println!("boundary sum of F_K,s    {:.2e}", f.boundary_sum(&out.mesh));
    if let Some(s) = out.sides {
        println!("outward fluxes per side  {:?}", s.as_array());
    }
    Ok(())
}
