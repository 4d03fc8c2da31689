//! Polygonal meshes with possibly nonconforming (hanging-node) interfaces.
//!
//! A mesh is described topologically by a [`RawMesh`] (vertex coordinates,
//! counter-clockwise cell corner lists, optional cell points and optional edge
//! splits) and turned into a [`Mesh`] by [`compute_geometry`], which derives
//! every quantity the discretisation needs: measures, face barycentres,
//! outward normals, cell-point-to-face distances and cone measures.
//!
//! Nonconformity is expressed through [`EdgeSplit`] records: a cell side that
//! abuts several smaller neighbours is listed once by its two corners and the
//! split record inserts the intermediate vertices. After expansion every face
//! is a segment between two consecutive polygon vertices, shared by at most
//! two cells.

mod io;
mod regularity;

pub use io::{read_mesh, read_mesh_str, write_mesh, write_mesh_string};
pub use regularity::{
    regularity, theta_d, theta_db, validate, CellResidual, RegularityReport, ValidationReport,
    IDENTITY_TOLERANCE,
};

use std::collections::HashMap;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

/// A point (or vector) of the plane.
pub type Point = Vector2<f64>;

/// Relative threshold below which a cell-point-to-face distance is rejected.
const STAR_TOLERANCE: f64 = 1e-12;

/// Subdivision of the edge `a -> b` by `interior` vertices, ordered from `a` to `b`.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeSplit {
    pub a: usize,
    pub b: usize,
    pub interior: Vec<usize>,
}

/// Topological mesh description, as stored in mesh files.
#[derive(Clone, Debug, PartialEq)]
pub struct RawMesh {
    pub dim: usize,
    pub vertices: Vec<Point>,
    /// Corner vertex indices of each cell, counter-clockwise.
    pub cells: Vec<Vec<usize>>,
    /// Explicit cell points; centres of mass are used when absent.
    pub cell_points: Option<Vec<Point>>,
    pub splits: Vec<EdgeSplit>,
}

impl RawMesh {
    pub fn new(vertices: Vec<Point>, cells: Vec<Vec<usize>>) -> Self {
        Self {
            dim: 2,
            vertices,
            cells,
            cell_points: None,
            splits: Vec::new(),
        }
    }

    /// Full polygon of each cell, hanging vertices included.
    pub fn expanded_cells(&self) -> Result<Vec<Vec<usize>>> {
        let mut split_map: HashMap<(usize, usize), (&[usize], bool)> = HashMap::new();
        for s in &self.splits {
            if split_map.insert((s.a, s.b), (&s.interior, false)).is_some()
                || split_map.insert((s.b, s.a), (&s.interior, true)).is_some()
            {
                return Err(Error::InvalidTopology(format!(
                    "edge ({}, {}) is split twice",
                    s.a, s.b
                )));
            }
        }
        let nv = self.vertices.len();
        let mut out = Vec::with_capacity(self.cells.len());
        for (k, corners) in self.cells.iter().enumerate() {
            if corners.len() < 3 {
                return Err(Error::InvalidTopology(format!(
                    "cell {k} has fewer than 3 vertices"
                )));
            }
            let mut poly = Vec::with_capacity(corners.len());
            for (i, &a) in corners.iter().enumerate() {
                let b = corners[(i + 1) % corners.len()];
                if a >= nv || b >= nv {
                    return Err(Error::InvalidTopology(format!(
                        "cell {k} references missing vertex {}",
                        a.max(b)
                    )));
                }
                poly.push(a);
                if let Some(&(interior, reversed)) = split_map.get(&(a, b)) {
                    if reversed {
                        poly.extend(interior.iter().rev());
                    } else {
                        poly.extend(interior.iter());
                    }
                }
            }
            if let Some(&v) = poly.iter().find(|&&v| v >= nv) {
                return Err(Error::InvalidTopology(format!(
                    "cell {k} references missing vertex {v}"
                )));
            }
            out.push(poly);
        }
        Ok(out)
    }
}

/// A face (edge) of the mesh.
#[derive(Clone, Debug)]
pub struct Face {
    pub id: usize,
    /// Endpoints, oriented counter-clockwise with respect to `cells[0]`.
    pub vertices: [usize; 2],
    pub measure: f64,
    pub barycentre: Point,
    /// Unit normal pointing out of `cells[0]`.
    pub normal: Point,
    /// Adjacent cells; the second entry is `None` for boundary faces.
    pub cells: [Option<usize>; 2],
    /// Position of this face in the face list of each adjacent cell.
    pub local: [usize; 2],
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.cells[1].is_none()
    }

    pub fn first_cell(&self) -> usize {
        self.cells[0].expect("every face has at least one cell")
    }

    /// The cell on the other side of the face, if any.
    pub fn neighbour(&self, cell: usize) -> Option<usize> {
        match self.cells {
            [Some(a), Some(b)] if a == cell => Some(b),
            [Some(a), Some(b)] if b == cell => Some(a),
            _ => None,
        }
    }

    pub fn endpoints(&self, mesh: &Mesh) -> (Point, Point) {
        (
            mesh.vertices[self.vertices[0]],
            mesh.vertices[self.vertices[1]],
        )
    }
}

/// A control volume with its derived geometry.
#[derive(Clone, Debug)]
pub struct Cell {
    pub id: usize,
    /// Polygon vertices, counter-clockwise, hanging vertices included.
    pub vertices: Vec<usize>,
    pub faces: Vec<usize>,
    /// The cell point `x_K`.
    pub point: Point,
    pub centroid: Point,
    pub measure: f64,
    pub diameter: f64,
    /// Outward unit normal per local face.
    pub normals: Vec<Point>,
    /// Distance from the cell point to the line of each local face.
    pub distances: Vec<f64>,
    /// Measure of the cone with apex `point` and base each local face.
    pub cone_measures: Vec<f64>,
}

impl Cell {
    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn local_index(&self, face: usize) -> Option<usize> {
        self.faces.iter().position(|&f| f == face)
    }
}

/// A polygonal mesh with all derived geometric quantities.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub dim: usize,
    pub vertices: Vec<Point>,
    pub cells: Vec<Cell>,
    pub faces: Vec<Face>,
    /// Largest cell diameter.
    pub h: f64,
    pub raw: RawMesh,
}

impl Mesh {
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn interior_faces(&self) -> impl Iterator<Item = &Face> {
        self.faces.iter().filter(|f| !f.is_boundary())
    }

    pub fn boundary_faces(&self) -> impl Iterator<Item = &Face> {
        self.faces.iter().filter(|f| f.is_boundary())
    }

    pub fn n_interior_faces(&self) -> usize {
        self.interior_faces().count()
    }

    /// Sum of the cell measures.
    pub fn total_measure(&self) -> f64 {
        self.cells.iter().map(|c| c.measure).sum()
    }

    /// Axis-aligned bounding box of the vertices.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::repeat(f64::INFINITY);
        let mut hi = Point::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    /// Area enclosed by the boundary faces (divergence theorem).
    pub fn domain_measure(&self) -> f64 {
        self.boundary_faces()
            .map(|f| 0.5 * f.measure * f.normal.dot(&f.barycentre))
            .sum()
    }

    /// Cells sharing at least one vertex with each vertex, sorted by id.
    pub fn vertex_cells(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertices.len()];
        for cell in &self.cells {
            for &v in &cell.vertices {
                if out[v].last() != Some(&cell.id) {
                    out[v].push(cell.id);
                }
            }
        }
        out
    }

    /// Centroid of the triangular cone `D_{K,σ}` for local face `local` of `cell`.
    pub fn cone_centroid(&self, cell: usize, local: usize) -> Point {
        let c = &self.cells[cell];
        let (a, b) = self.faces[c.faces[local]].endpoints(self);
        (c.point + a + b) / 3.0
    }

    /// Replaces the cell points and recomputes the dependent quantities.
    pub fn with_cell_points(&self, points: Vec<Point>) -> Result<Mesh> {
        let mut raw = self.raw.clone();
        raw.cell_points = Some(points);
        compute_geometry(&raw)
    }
}

/// Signed area and centroid of a polygon by fan triangulation from the vertex average.
fn polygon_area_centroid(poly: &[Point]) -> (f64, Point) {
    let n = poly.len() as f64;
    let apex = poly.iter().sum::<Point>() / n;
    let mut area = 0.0;
    let mut moment = Point::zeros();
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let (a, b) = (p - apex, q - apex);
        let t = 0.5 * (a.x * b.y - a.y * b.x);
        area += t;
        moment += t * (apex + p + q) / 3.0;
    }
    if area == 0.0 {
        return (0.0, apex);
    }
    (area, moment / area)
}

/// Derives the full mesh geometry from its topological description.
pub fn compute_geometry(raw: &RawMesh) -> Result<Mesh> {
    if raw.dim != 2 {
        return Err(Error::UnsupportedDimension(raw.dim));
    }
    let polygons = raw.expanded_cells()?;
    if let Some(points) = &raw.cell_points {
        if points.len() != raw.cells.len() {
            return Err(Error::InvalidTopology(format!(
                "{} cell points given for {} cells",
                points.len(),
                raw.cells.len()
            )));
        }
    }
    let vertices = &raw.vertices;
    if let Some(v) = vertices.iter().position(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(Error::InvalidTopology(format!("vertex {v} is not finite")));
    }

    let mut faces: Vec<Face> = Vec::new();
    let mut face_index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut cells = Vec::with_capacity(polygons.len());

    for (k, poly) in polygons.iter().enumerate() {
        let pts: Vec<Point> = poly.iter().map(|&v| vertices[v]).collect();
        let (measure, centroid) = polygon_area_centroid(&pts);
        if !(measure > 0.0) {
            return Err(Error::DegenerateCell { cell: k });
        }
        let mut diameter: f64 = 0.0;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                diameter = diameter.max((pts[i] - pts[j]).norm());
            }
        }
        let point = raw
            .cell_points
            .as_ref()
            .map(|p| p[k])
            .unwrap_or(centroid);

        let mut cell_faces = Vec::with_capacity(poly.len());
        for i in 0..poly.len() {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            let key = (a.min(b), a.max(b));
            let local = cell_faces.len();
            let id = match face_index.get(&key) {
                Some(&id) => {
                    let face = &mut faces[id];
                    if face.cells[1].is_some() {
                        return Err(Error::InvalidTopology(format!(
                            "face ({a}, {b}) is shared by more than two cells"
                        )));
                    }
                    if face.cells[0] == Some(k) {
                        return Err(Error::InvalidTopology(format!(
                            "cell {k} uses edge ({a}, {b}) twice"
                        )));
                    }
                    if face.vertices != [b, a] {
                        return Err(Error::InvalidTopology(format!(
                            "cells {} and {k} traverse edge ({a}, {b}) in the same direction",
                            face.first_cell()
                        )));
                    }
                    face.cells[1] = Some(k);
                    face.local[1] = local;
                    id
                }
                None => {
                    let id = faces.len();
                    let (pa, pb) = (vertices[a], vertices[b]);
                    let t = pb - pa;
                    let measure = t.norm();
                    if !(measure > 0.0) {
                        return Err(Error::DegenerateFace { face: id });
                    }
                    faces.push(Face {
                        id,
                        vertices: [a, b],
                        measure,
                        barycentre: 0.5 * (pa + pb),
                        normal: Point::new(t.y, -t.x) / measure,
                        cells: [Some(k), None],
                        local: [local, 0],
                    });
                    face_index.insert(key, id);
                    id
                }
            };
            cell_faces.push(id);
        }

        let mut normals = Vec::with_capacity(cell_faces.len());
        let mut distances = Vec::with_capacity(cell_faces.len());
        let mut cone_measures = Vec::with_capacity(cell_faces.len());
        for &f in &cell_faces {
            let face = &faces[f];
            let n = if face.cells[0] == Some(k) {
                face.normal
            } else {
                -face.normal
            };
            let d = n.dot(&(face.barycentre - point));
            if !(d > STAR_TOLERANCE * diameter) {
                return Err(Error::NonStarShaped {
                    cell: k,
                    face: f,
                    distance: d,
                });
            }
            normals.push(n);
            distances.push(d);
            cone_measures.push(face.measure * d / 2.0);
        }

        cells.push(Cell {
            id: k,
            vertices: poly.clone(),
            faces: cell_faces,
            point,
            centroid,
            measure,
            diameter,
            normals,
            distances,
            cone_measures,
        });
    }

    let h = cells.iter().map(|c| c.diameter).fold(0.0, f64::max);
    Ok(Mesh {
        dim: raw.dim,
        vertices: vertices.clone(),
        cells,
        faces,
        h,
        raw: raw.clone(),
    })
}

/// `Σ_σ |σ| n_{K,σ} (x_σ − x_K)^t` for one cell.
pub fn geometric_moment(mesh: &Mesh, cell: usize) -> Matrix2<f64> {
    let c = &mesh.cells[cell];
    let mut m = Matrix2::zeros();
    for (i, &f) in c.faces.iter().enumerate() {
        let face = &mesh.faces[f];
        m += face.measure * c.normals[i] * (face.barycentre - c.point).transpose();
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> RawMesh {
        RawMesh::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(1.0, 1.0),
                Point::new(0.0, 1.0),
            ],
            vec![vec![0, 1, 2, 3]],
        )
    }

    #[test]
    fn unit_square_cell() {
        let mesh = compute_geometry(&unit_square()).unwrap();
        let c = &mesh.cells[0];
        assert!((c.measure - 1.0).abs() < 1e-15);
        assert_eq!(c.n_faces(), 4);
        assert_eq!(mesh.n_interior_faces(), 0);
        for (i, &f) in c.faces.iter().enumerate() {
            assert!((mesh.faces[f].measure - 1.0).abs() < 1e-15);
            assert!((c.distances[i] - 0.5).abs() < 1e-15);
            let n = c.normals[i];
            assert!((n.x.abs() - 1.0).abs() < 1e-15 || (n.y.abs() - 1.0).abs() < 1e-15);
            assert!(n.dot(&(mesh.faces[f].barycentre - c.point)) > 0.0);
        }
        assert!((c.diameter - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn right_triangle_hypotenuse_distance() {
        let raw = RawMesh::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(0.0, 1.0),
            ],
            vec![vec![0, 1, 2]],
        );
        let mesh = compute_geometry(&raw).unwrap();
        let c = &mesh.cells[0];
        assert!((c.measure - 0.5).abs() < 1e-15);
        assert!((c.point - Point::new(1.0 / 3.0, 1.0 / 3.0)).norm() < 1e-15);
        // hypotenuse x + y = 1 is the second edge (1 -> 2)
        let expected = 1.0 / (3.0 * 2f64.sqrt());
        assert!((c.distances[1] - expected).abs() < 1e-15);
    }

    #[test]
    fn cell_point_outside_is_rejected() {
        let mut raw = unit_square();
        raw.cell_points = Some(vec![Point::new(1.5, 0.5)]);
        assert!(matches!(
            compute_geometry(&raw),
            Err(Error::NonStarShaped { cell: 0, .. })
        ));
        raw.cell_points = Some(vec![Point::new(1.0, 0.5)]);
        assert!(matches!(
            compute_geometry(&raw),
            Err(Error::NonStarShaped { .. })
        ));
    }

    #[test]
    fn repeated_vertex_gives_degenerate_face() {
        let mut raw = unit_square();
        raw.vertices.push(Point::new(1.0, 1.0));
        raw.cells = vec![vec![0, 1, 2, 4, 3]];
        // 2 and 4 coincide: the edge between them has zero length
        assert!(matches!(
            compute_geometry(&raw),
            Err(Error::DegenerateFace { .. })
        ));
    }

    #[test]
    fn clockwise_cell_is_rejected() {
        let mut raw = unit_square();
        raw.cells = vec![vec![0, 3, 2, 1]];
        assert!(matches!(
            compute_geometry(&raw),
            Err(Error::DegenerateCell { cell: 0 })
        ));
    }

    #[test]
    fn missing_vertex_is_topology_error() {
        let mut raw = unit_square();
        raw.cells = vec![vec![0, 1, 2, 7]];
        assert!(matches!(
            compute_geometry(&raw),
            Err(Error::InvalidTopology(_))
        ));
    }

    #[test]
    fn split_edge_creates_two_faces() {
        // two unit cells on the left, one 1x2 cell on the right
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 2.0),
            Point::new(0.0, 2.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 2.0),
        ];
        let mut raw = RawMesh::new(v, vec![vec![0, 1, 2, 3], vec![3, 2, 4, 5], vec![1, 6, 7, 4]]);
        raw.splits.push(EdgeSplit {
            a: 4,
            b: 1,
            interior: vec![2],
        });
        let mesh = compute_geometry(&raw).unwrap();
        assert_eq!(mesh.cells[2].n_faces(), 5);
        assert_eq!(mesh.n_interior_faces(), 3);
        let right = &mesh.cells[2];
        assert!((right.measure - 2.0).abs() < 1e-14);
        assert!((right.centroid - Point::new(1.5, 1.0)).norm() < 1e-14);
        assert!((geometric_moment(&mesh, 2) - Matrix2::identity() * 2.0).norm() < 1e-13);
    }

    #[test]
    fn undeclared_hanging_node_fails_validation() {
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 2.0),
            Point::new(0.0, 2.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 2.0),
        ];
        let raw = RawMesh::new(v, vec![vec![0, 1, 2, 3], vec![3, 2, 4, 5], vec![1, 6, 7, 4]]);
        let mesh = compute_geometry(&raw).unwrap();
        let report = validate(&mesh);
        assert!(!report.passed());
        assert_eq!(report.topology_errors.len(), 3, "{:?}", report.topology_errors);
        assert!(report.topology_errors[0].contains("hanging node"));
    }

    #[test]
    fn nonconvex_polygon_centroid() {
        // L-shaped hexagon: unit square with the top-right quarter removed
        let raw = RawMesh::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(1.0, 0.5),
                Point::new(0.5, 0.5),
                Point::new(0.5, 1.0),
                Point::new(0.0, 1.0),
            ],
            vec![vec![0, 1, 2, 3, 4, 5]],
        );
        let mut raw = raw;
        raw.cell_points = Some(vec![Point::new(0.25, 0.25)]);
        let mesh = compute_geometry(&raw).unwrap();
        let c = &mesh.cells[0];
        assert!((c.measure - 0.75).abs() < 1e-15);
        // centroid of three quarter-squares at (.25,.25), (.75,.25), (.25,.75)
        assert!((c.centroid - Point::new(5.0 / 12.0, 5.0 / 12.0)).norm() < 1e-15);
    }
}
