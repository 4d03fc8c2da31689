//! Stabilised discrete gradient.
//!
//! On the cone `D_{K,σ}` the gradient is `∇_K u + R_{K,σ}(u) n_{K,σ}`, where
//! `∇_K u` is the consistent cell gradient and `R_{K,σ}` penalises the gap
//! between the face value and its affine prediction from the cell.

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::space::DiscreteFunction;

/// Default stabilisation coefficient, `√d` for `d = 2`.
pub const DEFAULT_ALPHA: f64 = std::f64::consts::SQRT_2;

pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "stabilisation coefficient must be positive, got {alpha}"
        )))
    }
}

/// `∇_K u = |K|⁻¹ Σ_σ |σ| (u_σ − u_K) n_{K,σ}`
pub fn cell_gradient(mesh: &Mesh, u: &DiscreteFunction, k: usize) -> Point {
    let cell = &mesh.cells[k];
    let uk = u.cells[k];
    let mut g = Point::zeros();
    for (i, &f) in cell.faces.iter().enumerate() {
        g += mesh.faces[f].measure * (u.faces[f] - uk) * cell.normals[i];
    }
    g / cell.measure
}

/// `R_{K,σ}u = α/d_{K,σ} (u_σ − u_K − ∇_K u·(x_σ − x_K))` for the face at
/// local position `local` of cell `k`.
pub fn stabilization_residual(
    mesh: &Mesh,
    u: &DiscreteFunction,
    k: usize,
    local: usize,
    alpha: f64,
) -> f64 {
    residual_with(mesh, u, k, local, alpha, cell_gradient(mesh, u, k))
}

fn residual_with(
    mesh: &Mesh,
    u: &DiscreteFunction,
    k: usize,
    local: usize,
    alpha: f64,
    grad: Point,
) -> f64 {
    let cell = &mesh.cells[k];
    let f = cell.faces[local];
    let dx = mesh.faces[f].barycentre - cell.point;
    alpha / cell.distances[local] * (u.faces[f] - u.cells[k] - grad.dot(&dx))
}

/// Piecewise constant gradient, one vector per cone.
#[derive(Clone, Debug)]
pub struct GradientField {
    pub alpha: f64,
    /// `cones[K][i]` is `∇_{K,σ}u` for the i-th face of `K`.
    pub cones: Vec<Vec<Point>>,
}

impl GradientField {
    /// `∫_Ω |∇_D u|²`
    pub fn l2_norm_sq(&self, mesh: &Mesh) -> f64 {
        mesh.cells
            .iter()
            .map(|c| {
                c.cone_measures
                    .iter()
                    .zip(&self.cones[c.id])
                    .map(|(m, g)| m * g.norm_squared())
                    .sum::<f64>()
            })
            .sum()
    }

    /// Cone-measure weighted mean over a cell, which equals `∇_K u`.
    pub fn cell_average(&self, mesh: &Mesh, k: usize) -> Point {
        let c = &mesh.cells[k];
        let s: Point = c
            .cone_measures
            .iter()
            .zip(&self.cones[k])
            .map(|(m, g)| *m * g)
            .sum();
        s / c.measure
    }
}

/// Evaluates `∇_D u` on every cone. `u` must carry values on all faces.
pub fn gradient_field(mesh: &Mesh, u: &DiscreteFunction, alpha: f64) -> GradientField {
    let cones = mesh
        .cells
        .iter()
        .map(|c| {
            let g = cell_gradient(mesh, u, c.id);
            (0..c.n_faces())
                .map(|i| g + residual_with(mesh, u, c.id, i, alpha, g) * c.normals[i])
                .collect()
        })
        .collect();
    GradientField { alpha, cones }
}

/// Vectors `y^{σσ'}` with `∇_{K,σ}u = Σ_{σ'} (u_{σ'} − u_K) y^{σσ'}`.
#[derive(Clone, Debug)]
pub struct YVectors {
    pub cell: usize,
    /// `y[s][t]`, local face indices.
    pub y: Vec<Vec<Point>>,
}

impl YVectors {
    pub fn reconstruct(&self, mesh: &Mesh, u: &DiscreteFunction, local: usize) -> Point {
        let c = &mesh.cells[self.cell];
        c.faces
            .iter()
            .zip(&self.y[local])
            .map(|(&f, y)| (u.faces[f] - u.cells[self.cell]) * y)
            .sum()
    }
}

pub fn y_vectors(mesh: &Mesh, k: usize, alpha: f64) -> YVectors {
    let c = &mesh.cells[k];
    let n = c.n_faces();
    let area = c.measure;
    let mut y = vec![vec![Point::zeros(); n]; n];
    for s in 0..n {
        let fs = &mesh.faces[c.faces[s]];
        let ns = c.normals[s];
        let ds = c.distances[s];
        let dxs = fs.barycentre - c.point;
        for t in 0..n {
            let ft = &mesh.faces[c.faces[t]];
            let nt = c.normals[t];
            let base = ft.measure / area * nt;
            y[s][t] = if s == t {
                base + alpha / ds * (1.0 - fs.measure / area * ns.dot(&dxs)) * ns
            } else {
                base - alpha / (ds * area) * ft.measure * nt.dot(&dxs) * ns
            };
        }
    }
    YVectors { cell: k, y }
}
