//! Post-processing: reconstruction, composite fluxes, discrete norms and
//! error measures.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::assembly::{rhs_cell_integral, LocalFluxMatrix, TensorField};
use crate::error::{Error, Result};
use crate::gradient::{cell_gradient, GradientField};
use crate::mesh::{Mesh, Point};
use crate::problems::ExactSolution;
use crate::space::{BarycentricWeights, DiscreteFunction, EdgePartition, SupportPoint, UnknownNumbering};

mod export;

pub use export::{export_vtk, read_run_csv, write_json, write_run_csv, RunRecord};

/// Full face array from a solved vector of retained unknowns.
pub fn reconstruct_faces(
    mesh: &Mesh,
    partition: &EdgePartition,
    weights: &BarycentricWeights,
    numbering: &UnknownNumbering,
    x: &[f64],
    boundary: impl Fn(Point) -> f64,
) -> Result<DiscreteFunction> {
    DiscreteFunction::from_unknowns(mesh, partition, weights, numbering, x, boundary)
}

/// Fluxes of a solved (or interpolated) discrete function.
#[derive(Clone, Debug, PartialEq)]
pub struct FluxReport {
    /// `F_{K,σ}` per cell, local face order.
    pub cell_face: Vec<Vec<f64>>,
    /// Composite pair fluxes `F_{K,L}`, both orientations stored.
    pub pairs: BTreeMap<(usize, usize), f64>,
    /// Flux routed from barycentric faces to hybrid support faces, per cell.
    pub face_support: Vec<f64>,
    /// Residual of the balance equation of each hybrid face.
    pub hybrid_residuals: Vec<(usize, f64)>,
    /// `Σ` outgoing fluxes of `K` minus `∫_K f`.
    pub cell_balance: Vec<f64>,
    /// Largest `|F_{K,σ}|`, a scale for the residuals.
    pub scale: f64,
}

impl FluxReport {
    pub fn max_hybrid_residual(&self) -> f64 {
        self.hybrid_residuals.iter().map(|r| r.1.abs()).fold(0.0, f64::max)
    }

    pub fn max_cell_balance(&self) -> f64 {
        self.cell_balance.iter().map(|r| r.abs()).fold(0.0, f64::max)
    }

    pub fn max_antisymmetry(&self) -> f64 {
        self.pairs
            .iter()
            .map(|(&(k, l), v)| (v + self.pairs.get(&(l, k)).copied().unwrap_or(f64::NAN)).abs())
            .fold(0.0, f64::max)
    }

    /// `Σ_{σ ⊂ ∂Ω} F_{K,σ}`, which balances `Σ_K ∫_K f`.
    pub fn boundary_sum(&self, mesh: &Mesh) -> f64 {
        mesh.boundary_faces()
            .map(|f| self.cell_face[f.cells[0].unwrap()][f.local[0]])
            .sum()
    }
}

/// Face fluxes, composite pair fluxes and balance residuals of `u`.
pub fn composite_fluxes(
    mesh: &Mesh,
    partition: &EdgePartition,
    weights: &BarycentricWeights,
    locals: &[LocalFluxMatrix],
    u: &DiscreteFunction,
    source: impl Fn(Point) -> f64,
) -> Result<FluxReport> {
    let cell_face: Vec<Vec<f64>> = locals.iter().map(|a| a.fluxes(mesh, u)).collect();
    let scale = cell_face.iter().flatten().map(|f| f.abs()).fold(0.0, f64::max);
    let mut pairs = BTreeMap::new();
    let mut face_support = vec![0.0; mesh.n_cells()];
    let mut hybrid_acc = vec![0.0; mesh.n_faces()];
    let mut direct = vec![0.0; mesh.n_cells()];

    for c in &mesh.cells {
        for (i, &f) in c.faces.iter().enumerate() {
            let flux = cell_face[c.id][i];
            let face = &mesh.faces[f];
            if face.is_boundary() || partition.is_hybrid(f) {
                direct[c.id] += flux;
                if !face.is_boundary() {
                    hybrid_acc[f] += flux;
                }
                continue;
            }
            let comb = weights.get(f).ok_or(Error::MissingWeights { face: f })?;
            for &(p, beta) in comb {
                match p {
                    SupportPoint::Cell(l) if l == c.id => {}
                    SupportPoint::Cell(l) => {
                        *pairs.entry((c.id, l)).or_insert(0.0) += flux * beta;
                        *pairs.entry((l, c.id)).or_insert(0.0) -= flux * beta;
                    }
                    SupportPoint::Face(s) => {
                        face_support[c.id] += flux * beta;
                        hybrid_acc[s] -= flux * beta;
                    }
                }
            }
        }
    }

    let mut cell_balance = Vec::with_capacity(mesh.n_cells());
    for c in &mesh.cells {
        let out: f64 = direct[c.id] + face_support[c.id];
        let pair_sum: f64 = pairs.range((c.id, 0)..(c.id + 1, 0)).map(|(_, v)| v).sum();
        cell_balance.push(out + pair_sum - rhs_cell_integral(mesh, c.id, &source));
    }
    let hybrid_residuals = partition.hybrid_faces().map(|f| (f, hybrid_acc[f])).collect();
    Ok(FluxReport {
        cell_face,
        pairs,
        face_support,
        hybrid_residuals,
        cell_balance,
        scale,
    })
}

/// Outward fluxes `∫ Λ∇u·n` per side of the bounding box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideTotals {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl SideTotals {
    pub fn as_array(&self) -> [f64; 4] {
        [self.x_min, self.x_max, self.y_min, self.y_max]
    }
}

/// Side index (0: x_min, 1: x_max, 2: y_min, 3: y_max) of a boundary face.
pub fn boundary_side(mesh: &Mesh, face: usize) -> Result<usize> {
    let (lo, hi) = mesh.bounding_box();
    let tol = 1e-10 * (hi - lo).norm();
    let (a, b) = mesh.faces[face].endpoints(mesh);
    let on = |v: f64, w: f64, t: f64| (v - t).abs() <= tol && (w - t).abs() <= tol;
    if on(a.x, b.x, lo.x) {
        Ok(0)
    } else if on(a.x, b.x, hi.x) {
        Ok(1)
    } else if on(a.y, b.y, lo.y) {
        Ok(2)
    } else if on(a.y, b.y, hi.y) {
        Ok(3)
    } else {
        Err(Error::UnclassifiedBoundaryFace { face })
    }
}

/// Approximates the outward `∫ Λ∇u·n` on each side as `−Σ F_{K,σ}`.
pub fn boundary_flux_totals(mesh: &Mesh, fluxes: &FluxReport) -> Result<SideTotals> {
    let mut t = [0.0; 4];
    for f in mesh.boundary_faces() {
        let side = boundary_side(mesh, f.id)?;
        t[side] -= fluxes.cell_face[f.cells[0].unwrap()][f.local[0]];
    }
    Ok(SideTotals {
        x_min: t[0],
        x_max: t[1],
        y_min: t[2],
        y_max: t[3],
    })
}

/// `|v|_X = (Σ_K Σ_σ |σ|/d_{K,σ} (v_σ − v_K)²)^{1/2}`
pub fn seminorm_x(mesh: &Mesh, v: &DiscreteFunction) -> f64 {
    mesh.cells
        .iter()
        .map(|c| {
            c.faces
                .iter()
                .zip(&c.distances)
                .map(|(&f, d)| mesh.faces[f].measure / d * (v.faces[f] - v.cells[c.id]).powi(2))
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

/// Discrete `W^{1,p}` norm of cell values, with zero trace:
/// `‖v‖^p = Σ_σ |σ| (D_σ v)^p / d_σ^{p−1}`.
pub fn norm_1p(mesh: &Mesh, cells: &[f64], p: f64) -> f64 {
    mesh.faces
        .iter()
        .map(|f| {
            let k = f.cells[0].unwrap();
            let dk = mesh.cells[k].distances[f.local[0]];
            let (jump, d) = match f.cells[1] {
                Some(l) => ((cells[k] - cells[l]).abs(), dk + mesh.cells[l].distances[f.local[1]]),
                None => (cells[k].abs(), dk),
            };
            f.measure * jump.powf(p) / d.powf(p - 1.0)
        })
        .sum::<f64>()
        .powf(1.0 / p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// `(Σ_K |K| (u_K − ū(x_K))²)^{1/2}`
    pub eps_u: f64,
    /// `(Σ cones |D_{K,σ}| ‖∇_{K,σ}u − ∇ū(cone centroid)‖²)^{1/2}`
    pub eps_grad: f64,
    /// `ε(u) / (Σ_K |K| ū(x_K)²)^{1/2}`
    pub rel_eps_u: f64,
    /// Relative error of the cell gradients,
    /// `(Σ_K |K| ‖∇_K u − ∇ū(x_K)‖²)^{1/2} / (Σ_K |K| ‖∇ū(x_K)‖²)^{1/2}`.
    pub rel_eps_cell_grad: f64,
    /// `|u|_X` of the discrete solution.
    pub seminorm_x: f64,
    pub p: f64,
    /// `‖u‖_{1,p,M}` of the discrete solution.
    pub norm_1p: f64,
    /// Flux consistency `E(ū)`, when `Λ = Id`.
    pub flux_consistency: Option<f64>,
}

pub fn error_norms(
    mesh: &Mesh,
    u: &DiscreteFunction,
    grad: &GradientField,
    exact: &ExactSolution,
    p: f64,
) -> ErrorReport {
    let eps_u = mesh
        .cells
        .iter()
        .map(|c| c.measure * (u.cells[c.id] - (exact.u)(c.point)).powi(2))
        .sum::<f64>()
        .sqrt();
    let eps_grad = mesh
        .cells
        .iter()
        .map(|c| {
            (0..c.n_faces())
                .map(|i| {
                    let g = (exact.grad)(mesh.cone_centroid(c.id, i));
                    c.cone_measures[i] * (grad.cones[c.id][i] - g).norm_squared()
                })
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt();
    let (mut u_norm, mut g_err, mut g_norm) = (0.0, 0.0, 0.0);
    for c in &mesh.cells {
        let g = (exact.grad)(c.point);
        u_norm += c.measure * (exact.u)(c.point).powi(2);
        g_err += c.measure * (cell_gradient(mesh, u, c.id) - g).norm_squared();
        g_norm += c.measure * g.norm_squared();
    }
    ErrorReport {
        eps_u,
        eps_grad,
        rel_eps_u: ratio(eps_u, u_norm.sqrt()),
        rel_eps_cell_grad: ratio(g_err.sqrt(), g_norm.sqrt()),
        seminorm_x: seminorm_x(mesh, u),
        p,
        norm_1p: norm_1p(mesh, &u.cells, p),
        flux_consistency: None,
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        a
    }
}

/// 3-point Gauss rule on `[0, 1]`: (abscissa, weight).
const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// `E(ū) = (Σ_K Σ_σ d_{K,σ}/|σ| (F_{K,σ}(P_{D,B}ū) + ∫_σ ∇ū·n)²)^{1/2}`,
/// defined for `Λ = Id` only.
pub fn flux_consistency_e(
    mesh: &Mesh,
    partition: &EdgePartition,
    weights: &BarycentricWeights,
    tensor: &TensorField,
    locals: &[LocalFluxMatrix],
    exact: &ExactSolution,
) -> Result<f64> {
    if !tensor.is_identity() {
        return Err(Error::RequiresIdentityTensor);
    }
    let pu = crate::space::interpolate_composite(mesh, partition, weights, |x| (exact.u)(x))?;
    let mut sum = 0.0;
    for (c, a) in mesh.cells.iter().zip(locals) {
        for (i, &f) in c.faces.iter().enumerate() {
            let face = &mesh.faces[f];
            let (p0, p1) = face.endpoints(mesh);
            let n = c.normals[i];
            let integral: f64 = GAUSS3
                .iter()
                .map(|&(t, w)| w * (exact.grad)(p0 + t * (p1 - p0)).dot(&n))
                .sum::<f64>()
                * face.measure;
            let r = a.flux(mesh, &pu, i) + integral;
            sum += c.distances[i] / face.measure * r * r;
        }
    }
    Ok(sum.sqrt())
}

/// Least-squares slope of `log e` against `log h`.
pub fn convergence_order(series: &[(f64, f64)]) -> Result<f64> {
    if series.len() < 3 {
        return Err(Error::InsufficientLevels { got: series.len() });
    }
    if series.iter().any(|&(h, e)| !(h > 0.0 && e > 0.0)) {
        return Err(Error::InvalidConfig("convergence series needs positive h and errors".into()));
    }
    let pts: Vec<(f64, f64)> = series.iter().map(|&(h, e)| (h.ln(), e.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidConfig("convergence series needs distinct h".into()));
    }
    Ok(sxy / sxx)
}
