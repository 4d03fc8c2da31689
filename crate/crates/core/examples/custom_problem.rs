//! A problem read from a JSON descriptor: polynomial exact solution and a
//! two-region tensor. The source term is derived from the polynomial; the
//! tensors share their first row so that the normal flux is continuous.

use sushi::meshgen::MeshSpec;
use sushi::problems::Problem;
use sushi::run::{run_problem, RunConfig};
use sushi::space::PartitionPolicy;

const DESCRIPTOR: &str = r#"{
  "name": "bilinear-two-region",
  "tensor": {"two_region": {"split_x": 0.5,
                            "left": [[1.0, 0.0], [0.0, 1.0]],
                            "right": [[1.0, 0.0], [0.0, 4.0]]}},
  "exact": {"coefficients": [[0.0, 0.0, 1.0], [0.0, 0.0, 0.0, 1.0], [1.0]]}
}"#;

fn main() -> sushi::Result<()> {
    let problem = Problem::from_json(DESCRIPTOR)?;
    for policy in [
        PartitionPolicy::AllHybrid,
        PartitionPolicy::DiscontinuityAligned,
        PartitionPolicy::AllBarycentric,
    ] {
        for n in [4, 8, 16] {
            let config = RunConfig::new(&problem.name, MeshSpec::Rect(n, n), policy);
            let out = run_problem(&problem, &config)?;
            let e = out.errors.expect("exact solution given");
            println!("{policy:<16} rect:{n}x{n}  N={:>4}  eps(u)={:.3e}", out.system.n(), e.eps_u);
        }
    }
    Ok(())
}
