//! Geometric identities and regularity factors of every generated family.

use sushi::mesh::{regularity, validate};
use sushi::meshgen::MeshSpec;

fn main() -> sushi::Result<()> {
    let specs = ["rect:8x6", "rect:64x64", "tri:32", "ncrect:5", "barrier:1", "barrier:2", "barrier:3"];
    println!("{:<12} {:>6} {:>10} {:>10}  identities", "mesh", "cells", "theta_D", "worst");
    for s in specs {
        let spec: MeshSpec = s.parse()?;
        let (mesh, _) = spec.build()?;
        let report = validate(&mesh);
        let reg = regularity(&mesh, None)?;
        println!(
            "{:<12} {:>6} {:>10.3} {:>10.1e}  {}",
            s,
            mesh.n_cells(),
            reg.theta_d,
            report.worst(),
            if report.passed() { "ok" } else { "FAILED" }
        );
    }
    Ok(())
}
