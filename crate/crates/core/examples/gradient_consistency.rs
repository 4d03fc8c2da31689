//! Consistency of the discrete gradient: `∇_D P_D φ` against `∇φ` under
//! refinement, cone by cone, for `φ = 16x(1−x)y(1−y)`.

use sushi::gradient::{gradient_field, DEFAULT_ALPHA};
use sushi::mesh::Point;
use sushi::meshgen::gen_tri;
use sushi::postproc::convergence_order;
use sushi::space::interpolate;

fn main() -> sushi::Result<()> {
    let phi = |p: Point| 16.0 * p.x * (1.0 - p.x) * p.y * (1.0 - p.y);
    let grad = |p: Point| {
        Point::new(
            16.0 * (1.0 - 2.0 * p.x) * p.y * (1.0 - p.y),
            16.0 * p.x * (1.0 - p.x) * (1.0 - 2.0 * p.y),
        )
    };
    let mut series = Vec::new();
    for n in [8, 16, 32, 64] {
        let mesh = gen_tri(n);
        let field = gradient_field(&mesh, &interpolate(&mesh, phi), DEFAULT_ALPHA);
        let mut worst: f64 = 0.0;
        for c in &mesh.cells {
            for i in 0..c.n_faces() {
                worst = worst.max((field.cones[c.id][i] - grad(mesh.cone_centroid(c.id, i))).norm());
            }
        }
        println!("tri:{n:<3} h={:.4}  max cone error {worst:.3e}", mesh.h);
        series.push((mesh.h, worst));
    }
    println!("order {:.3}", convergence_order(&series)?);
    Ok(())
}
