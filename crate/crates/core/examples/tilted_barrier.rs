//! Boundary fluxes of the tilted barrier problem on the three barrier meshes
//! for the hybrid, discontinuity-aligned and cell-centred variants.

use sushi::meshgen::MeshSpec;
use sushi::run::{run, RunConfig};
use sushi::space::PartitionPolicy;

fn main() -> sushi::Result<()> {
    println!("exact fluxes: -0.2 0.2 1 -1");
    for v in 1..=3u8 {
        for policy in [
            PartitionPolicy::AllHybrid,
            PartitionPolicy::DiscontinuityAligned,
            PartitionPolicy::AllBarycentric,
        ] {
            let cfg = RunConfig::new("tilted-barrier", MeshSpec::TiltedBarrier(v), policy);
            let out = run(&cfg)?;
            let s = out.sides.expect("unit square").as_array();
            let err_u = out.errors.map(|e| e.eps_u).unwrap_or(f64::NAN);
            println!(
                "mesh {v} {:<16} N={:>6} NM={:>7}  fluxes {:>10.4} {:>10.4} {:>10.4} {:>10.4}  eps(u) {:.2e}",
                policy.to_string(),
                out.system.n(),
                out.system.nm(),
                s[0],
                s[1],
                s[2],
                s[3],
                err_u
            );
        }
    }
    Ok(())
}
