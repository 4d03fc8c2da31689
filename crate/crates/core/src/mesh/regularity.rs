//! Geometric identity checks and the mesh regularity measures.

use nalgebra::Matrix2;
use serde::Serialize;

use super::{geometric_moment, Mesh, Point};
use crate::error::{Error, Result};
use crate::space::{BarycentricWeights, EdgePartition, SupportPoint};

/// Relative tolerance for the per-cell geometric identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;

/// Residuals of the geometric identities for one cell, relative to `|K|`.
#[derive(Clone, Debug, Serialize)]
pub struct CellResidual {
    pub cell: usize,
    /// `‖Σ|σ| n (x_σ − x_K)^t − |K| Id‖_∞ / |K|`
    pub moment: f64,
    /// `|Σ|σ| d_{K,σ} − d |K|| / |K|`
    pub distance_sum: f64,
    /// `‖Σ|σ| n‖ / Σ|σ|`
    pub closure: f64,
}

impl CellResidual {
    pub fn max(&self) -> f64 {
        self.moment.max(self.distance_sum).max(self.closure)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub cells: Vec<CellResidual>,
    pub topology_errors: Vec<String>,
    /// `|Σ|K| − |Ω|| / |Ω|`, with `|Ω|` from the boundary faces.
    pub domain_residual: f64,
    pub tolerance: f64,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &CellResidual> {
        self.cells.iter().filter(move |r| !(r.max() <= self.tolerance))
    }

    pub fn passed(&self) -> bool {
        self.topology_errors.is_empty()
            && self.domain_residual <= self.tolerance
            && self.failures().next().is_none()
    }

    pub fn worst(&self) -> f64 {
        self.cells.iter().map(CellResidual::max).fold(0.0, f64::max)
    }
}

/// Checks the per-cell geometric identities and the mesh topology.
pub fn validate(mesh: &Mesh) -> ValidationReport {
    let dim = mesh.dim as f64;
    let mut topology_errors = Vec::new();
    let cells = mesh
        .cells
        .iter()
        .map(|c| {
            let m = geometric_moment(mesh, c.id) - Matrix2::identity() * c.measure;
            let moment = m.abs().max() / c.measure;
            let mut dsum = 0.0;
            let mut closure = nalgebra::Vector2::zeros();
            let mut perimeter = 0.0;
            for (i, &f) in c.faces.iter().enumerate() {
                let face = &mesh.faces[f];
                dsum += face.measure * c.distances[i];
                closure += face.measure * c.normals[i];
                perimeter += face.measure;
            }
            CellResidual {
                cell: c.id,
                moment,
                distance_sum: (dsum - dim * c.measure).abs() / c.measure,
                closure: closure.norm() / perimeter,
            }
        })
        .collect();

    for face in &mesh.faces {
        for (side, cell) in face.cells.iter().enumerate() {
            if let Some(k) = *cell {
                if mesh.cells[k].faces.get(face.local[side]) != Some(&face.id) {
                    topology_errors.push(format!(
                        "face {} is not listed by cell {k} at its recorded position",
                        face.id
                    ));
                }
            }
        }
    }
    let referenced: usize = mesh.cells.iter().map(|c| c.faces.len()).sum();
    let expected = mesh.n_faces() + mesh.n_interior_faces();
    if referenced != expected {
        topology_errors.push(format!(
            "cells reference {referenced} face slots, expected {expected}"
        ));
    }

    topology_errors.extend(interior_boundary_faces(mesh));

    let domain = mesh.domain_measure();
    ValidationReport {
        cells,
        topology_errors,
        domain_residual: (mesh.total_measure() - domain).abs() / domain.abs(),
        tolerance: IDENTITY_TOLERANCE,
    }
}

/// Boundary faces with another cell just outside them: an edge subdivided
/// on one side only (a hanging node missing from the split list).
fn interior_boundary_faces(mesh: &Mesh) -> Vec<String> {
    let polygons: Vec<(Vec<Point>, Point, Point)> = mesh
        .cells
        .iter()
        .map(|c| {
            let pts: Vec<Point> = c.vertices.iter().map(|&v| mesh.vertices[v]).collect();
            let lo = pts.iter().fold(pts[0], |a, p| a.inf(p));
            let hi = pts.iter().fold(pts[0], |a, p| a.sup(p));
            (pts, lo, hi)
        })
        .collect();
    let mut errors = Vec::new();
    for face in mesh.boundary_faces() {
        let k = face.first_cell();
        let cell = &mesh.cells[k];
        let probe = face.barycentre + 1e-6 * cell.diameter * cell.normals[face.local[0]];
        let covering = polygons.iter().enumerate().find(|(c, (pts, lo, hi))| {
            *c != k
                && probe.x >= lo.x
                && probe.x <= hi.x
                && probe.y >= lo.y
                && probe.y <= hi.y
                && contains(pts, probe)
        });
        if let Some((c, _)) = covering {
            errors.push(format!(
                "boundary face {} of cell {k} borders cell {c} (undeclared hanging node?)",
                face.id
            ));
        }
    }
    errors
}

/// Even-odd point in polygon test.
fn contains(pts: &[Point], p: Point) -> bool {
    let mut inside = false;
    let mut j = pts.len() - 1;
    for i in 0..pts.len() {
        let (a, b) = (pts[i], pts[j]);
        if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Regularity measures of a mesh, with the worst ratio reached in each cell.
#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub theta_d: f64,
    pub theta_db: Option<f64>,
    pub per_cell: Vec<f64>,
}

/// `max(max_σ d_{K,σ}/d_{L,σ}, max_{K,σ} h_K/d_{K,σ})`
pub fn theta_d(mesh: &Mesh) -> f64 {
    per_cell_theta(mesh).into_iter().fold(1.0, f64::max)
}

fn per_cell_theta(mesh: &Mesh) -> Vec<f64> {
    mesh.cells
        .iter()
        .map(|c| {
            let mut worst: f64 = 0.0;
            for (i, &f) in c.faces.iter().enumerate() {
                let d = c.distances[i];
                worst = worst.max(c.diameter / d);
                let face = &mesh.faces[f];
                if let Some(l) = face.neighbour(c.id) {
                    let other = &mesh.cells[l];
                    let dl = other.distances[other.local_index(f).unwrap()];
                    worst = worst.max(d / dl);
                }
            }
            worst
        })
        .collect()
}

/// `θ_{D,B}`: `θ_D` combined with the spread of the barycentric weights.
pub fn theta_db(
    mesh: &Mesh,
    partition: &EdgePartition,
    weights: &BarycentricWeights,
) -> Result<f64> {
    let mut theta = theta_d(mesh);
    for face in mesh.interior_faces() {
        if !partition.is_barycentric(face.id) {
            continue;
        }
        let w = weights
            .get(face.id)
            .ok_or(Error::MissingWeights { face: face.id })?;
        let spread: f64 = w
            .iter()
            .map(|&(p, beta)| {
                let x = match p {
                    SupportPoint::Cell(l) => mesh.cells[l].point,
                    SupportPoint::Face(s) => mesh.faces[s].barycentre,
                };
                beta.abs() * (x - face.barycentre).norm_squared()
            })
            .sum();
        for k in face.cells.iter().flatten() {
            let hk = mesh.cells[*k].diameter;
            theta = theta.max(spread / (hk * hk));
        }
    }
    Ok(theta)
}

/// Computes `θ_D`, optionally `θ_{D,B}`, and the per-cell worst ratios.
pub fn regularity(
    mesh: &Mesh,
    weights: Option<(&EdgePartition, &BarycentricWeights)>,
) -> Result<RegularityReport> {
    let per_cell = per_cell_theta(mesh);
    let theta_d = per_cell.iter().copied().fold(1.0, f64::max);
    let theta_db = weights
        .map(|(p, w)| theta_db(mesh, p, w))
        .transpose()?;
    Ok(RegularityReport {
        theta_d,
        theta_db,
        per_cell,
    })
}
