//! Deterministic generators for the benchmark mesh families.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::mesh::{compute_geometry, read_mesh, EdgeSplit, Mesh, Point, RawMesh};

/// Region tag of each cell (1-based sub-domain numbers).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionMap(pub Vec<u8>);

impl RegionMap {
    pub fn region(&self, cell: usize) -> u8 {
        self.0[cell]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Tags cells by evaluating `f` at their centroids.
    pub fn from_fn(mesh: &Mesh, f: impl Fn(Point) -> u8) -> Self {
        Self(mesh.cells.iter().map(|c| f(c.centroid)).collect())
    }
}

/// `nx × ny` axis-aligned rectangles on the unit square, row by row.
pub fn gen_rect(nx: usize, ny: usize) -> Mesh {
    assert!(nx >= 1 && ny >= 1, "rect resolution must be at least 1");
    compute_geometry(&rect_raw(nx, ny)).expect("rectangular grids are valid")
}

fn rect_raw(nx: usize, ny: usize) -> RawMesh {
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point::new(i as f64 / nx as f64, j as f64 / ny as f64));
        }
    }
    let v = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            cells.push(vec![v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)]);
        }
    }
    RawMesh::new(vertices, cells)
}

/// Structured triangulation: each of the `n × n` squares is cut along its
/// lower-left to upper-right diagonal.
pub fn gen_tri(n: usize) -> Mesh {
    assert!(n >= 1, "tri resolution must be at least 1");
    let square = rect_raw(n, n);
    let mut cells = Vec::with_capacity(2 * n * n);
    for c in &square.cells {
        let [a, b, c, d] = [c[0], c[1], c[2], c[3]];
        cells.push(vec![a, b, c]);
        cells.push(vec![a, c, d]);
    }
    compute_geometry(&RawMesh::new(square.vertices, cells)).expect("triangulations are valid")
}

/// Two rectangular blocks meeting at `x = 1/2`: `2n × 3n` cells on the left,
/// `2n × 5n` on the right. Interface faces are split at the union of both
/// sides' grid lines so that each has exactly two neighbours.
pub fn gen_nonconforming_rect(n: usize) -> Mesh {
    assert!(n >= 1, "ncrect resolution must be at least 1");
    let cols = 2 * n;
    let (rows_l, rows_r) = (3 * n, 5 * n);
    // interface heights on a common denominator of 15n
    let den = 15 * n;
    let mut vertices: Vec<Point> = Vec::new();
    let mut interface: BTreeMap<usize, usize> = BTreeMap::new();
    let mut interface_vertex = |m: usize, vertices: &mut Vec<Point>| -> usize {
        *interface.entry(m).or_insert_with(|| {
            vertices.push(Point::new(0.5, m as f64 / den as f64));
            vertices.len() - 1
        })
    };

    let mut block = |rows: usize, x0: f64, left: bool, vertices: &mut Vec<Point>| {
        let mut idx = vec![vec![0usize; rows + 1]; cols + 1];
        for (i, column) in idx.iter_mut().enumerate() {
            let on_interface = if left { i == cols } else { i == 0 };
            for (j, slot) in column.iter_mut().enumerate() {
                *slot = if on_interface {
                    interface_vertex(j * (den / rows), vertices)
                } else {
                    vertices.push(Point::new(
                        x0 + 0.5 * i as f64 / cols as f64,
                        j as f64 / rows as f64,
                    ));
                    vertices.len() - 1
                };
            }
        }
        idx
    };
    let left = block(rows_l, 0.0, true, &mut vertices);
    let right = block(rows_r, 0.5, false, &mut vertices);
    let interface_all: Vec<(usize, usize)> = {
        // re-borrow the interface map through the vertex coordinates
        let mut all: Vec<(usize, usize)> = (0..=rows_l)
            .map(|j| (j * (den / rows_l), left[cols][j]))
            .chain((0..=rows_r).map(|k| (k * (den / rows_r), right[0][k])))
            .collect();
        all.sort();
        all.dedup();
        all
    };
    let between = |lo: usize, hi: usize| -> Vec<usize> {
        interface_all
            .iter()
            .filter(|&&(m, _)| m > lo && m < hi)
            .map(|&(_, v)| v)
            .collect()
    };

    let mut cells = Vec::new();
    let mut splits = Vec::new();
    for (idx, rows, is_left) in [(&left, rows_l, true), (&right, rows_r, false)] {
        let step = den / rows;
        for j in 0..rows {
            for i in 0..cols {
                let c = vec![idx[i][j], idx[i + 1][j], idx[i + 1][j + 1], idx[i][j + 1]];
                if is_left && i + 1 == cols {
                    let interior = between(j * step, (j + 1) * step);
                    if !interior.is_empty() {
                        splits.push(EdgeSplit {
                            a: c[1],
                            b: c[2],
                            interior,
                        });
                    }
                }
                if !is_left && i == 0 {
                    let mut interior = between(j * step, (j + 1) * step);
                    if !interior.is_empty() {
                        interior.reverse();
                        splits.push(EdgeSplit {
                            a: c[3],
                            b: c[0],
                            interior,
                        });
                    }
                }
                cells.push(c);
            }
        }
    }
    let mut raw = RawMesh::new(vertices, cells);
    raw.splits = splits;
    compute_geometry(&raw).expect("nonconforming grids are valid")
}

/// Slope of the tilted barrier.
pub const BARRIER_SLOPE: f64 = 0.2;
/// Vertical thickness of the barrier.
pub const BARRIER_WIDTH: f64 = 0.05;
/// Thickness of the thin layers added around the discontinuity lines.
pub const THIN_LAYER: f64 = 1e-4;

/// A straight line `y = c0 + c1 x`.
#[derive(Clone, Copy, Debug)]
struct Line {
    c0: f64,
    c1: f64,
}

impl Line {
    const BOTTOM: Line = Line { c0: 0.0, c1: 0.0 };
    const TOP: Line = Line { c0: 1.0, c1: 0.0 };

    fn at(&self, x: f64) -> f64 {
        self.c0 + self.c1 * x
    }

    fn shifted(&self, dy: f64) -> Line {
        Line {
            c0: self.c0 + dy,
            c1: self.c1,
        }
    }

    /// `(1 − t) self + t other`
    fn lerp(&self, other: &Line, t: f64) -> Line {
        Line {
            c0: (1.0 - t) * self.c0 + t * other.c0,
            c1: (1.0 - t) * self.c1 + t * other.c1,
        }
    }
}

/// Lower discontinuity line `φ₁ = 0`, i.e. `y = δ(x − ½) + 0.475`.
fn lower_interface() -> Line {
    Line {
        c0: 0.475 - 0.5 * BARRIER_SLOPE,
        c1: BARRIER_SLOPE,
    }
}

/// Appends `n` layers from `from` to `to`, tagged `region`.
fn push_layers(lines: &mut Vec<Line>, regions: &mut Vec<u8>, to: Line, n: usize, region: u8) {
    let from = *lines.last().expect("a starting line");
    for k in 1..=n {
        lines.push(if k == n {
            to
        } else {
            from.lerp(&to, k as f64 / n as f64)
        });
        regions.push(region);
    }
}

/// Quadrilateral meshes of the tilted barrier test.
///
/// Ten uniform columns; layer lines are straight and two of them coincide with
/// the discontinuity lines `φ₁ = 0` and `φ₂ = 0`. Variant 1 has 21 layers
/// (10 / 1 / 10), variant 2 has 100 layers (45 / 10 / 45) and variant 3 is
/// variant 1 with two layers of thickness 10⁻⁴ around each discontinuity line.
/// The cell point of each quadrilateral sits on its vertical mid-line, half way
/// between the bottom and top lines, so every face barycentre lies on the
/// segment joining the two neighbouring cell points.
pub fn gen_tilted_barrier(variant: u8) -> Result<(Mesh, RegionMap)> {
    let phi1 = lower_interface();
    let phi2 = phi1.shifted(BARRIER_WIDTH);
    let mut lines = vec![Line::BOTTOM];
    let mut layer_regions = Vec::new();
    match variant {
        1 => {
            push_layers(&mut lines, &mut layer_regions, phi1, 10, 1);
            push_layers(&mut lines, &mut layer_regions, phi2, 1, 2);
            push_layers(&mut lines, &mut layer_regions, Line::TOP, 10, 3);
        }
        2 => {
            push_layers(&mut lines, &mut layer_regions, phi1, 45, 1);
            push_layers(&mut lines, &mut layer_regions, phi2, 10, 2);
            push_layers(&mut lines, &mut layer_regions, Line::TOP, 45, 3);
        }
        3 => {
            push_layers(&mut lines, &mut layer_regions, phi1.shifted(-THIN_LAYER), 10, 1);
            push_layers(&mut lines, &mut layer_regions, phi1, 1, 1);
            push_layers(&mut lines, &mut layer_regions, phi1.shifted(THIN_LAYER), 1, 2);
            push_layers(&mut lines, &mut layer_regions, phi2.shifted(-THIN_LAYER), 1, 2);
            push_layers(&mut lines, &mut layer_regions, phi2, 1, 2);
            push_layers(&mut lines, &mut layer_regions, phi2.shifted(THIN_LAYER), 1, 3);
            push_layers(&mut lines, &mut layer_regions, Line::TOP, 10, 3);
        }
        v => {
            return Err(Error::InvalidConfig(format!(
                "barrier mesh variant must be 1, 2 or 3, got {v}"
            )))
        }
    }

    let cols = 10;
    let xs: Vec<f64> = (0..=cols).map(|i| i as f64 / cols as f64).collect();
    let mut vertices = Vec::with_capacity((cols + 1) * lines.len());
    for line in &lines {
        for &x in &xs {
            vertices.push(Point::new(x, line.at(x)));
        }
    }
    let v = |i: usize, j: usize| j * (cols + 1) + i;
    let mut cells = Vec::new();
    let mut points = Vec::new();
    let mut regions = Vec::new();
    for (j, &region) in layer_regions.iter().enumerate() {
        for i in 0..cols {
            cells.push(vec![v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)]);
            let xc = 0.5 * (xs[i] + xs[i + 1]);
            points.push(Point::new(
                xc,
                0.5 * (lines[j].at(xc) + lines[j + 1].at(xc)),
            ));
            regions.push(region);
        }
    }
    let mut raw = RawMesh::new(vertices, cells);
    raw.cell_points = Some(points);
    Ok((compute_geometry(&raw)?, RegionMap(regions)))
}

/// Mesh selector: `rect:NxM | tri:N | ncrect:N | barrier:V | file:PATH`.
/// A string without a `kind:` prefix is read as a file path.
#[derive(Clone, Debug, PartialEq, )]
pub enum MeshSpec {
    Rect(usize, usize),
    Tri(usize),
    NonconformingRect(usize),
    TiltedBarrier(u8),
    File(PathBuf),
}

impl MeshSpec {
    /// Builds the mesh; barrier meshes also return their region map.
    pub fn build(&self) -> Result<(Mesh, Option<RegionMap>)> {
        Ok(match self {
            MeshSpec::Rect(nx, ny) => (gen_rect(*nx, *ny), None),
            MeshSpec::Tri(n) => (gen_tri(*n), None),
            MeshSpec::NonconformingRect(n) => (gen_nonconforming_rect(*n), None),
            MeshSpec::TiltedBarrier(v) => {
                let (m, r) = gen_tilted_barrier(*v)?;
                (m, Some(r))
            }
            MeshSpec::File(p) => (read_mesh(p)?, None),
        })
    }

    /// Same family at a different resolution (used by refinement studies).
    pub fn with_level(&self, n: usize) -> Result<MeshSpec> {
        match self {
            MeshSpec::Rect(..) => Ok(MeshSpec::Rect(n, n)),
            MeshSpec::Tri(_) => Ok(MeshSpec::Tri(n)),
            MeshSpec::NonconformingRect(_) => Ok(MeshSpec::NonconformingRect(n)),
            other => Err(Error::InvalidConfig(format!(
                "mesh '{other}' has no refinement parameter"
            ))),
        }
    }
}

impl Serialize for MeshSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MeshSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for MeshSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshSpec::Rect(nx, ny) => write!(f, "rect:{nx}x{ny}"),
            MeshSpec::Tri(n) => write!(f, "tri:{n}"),
            MeshSpec::NonconformingRect(n) => write!(f, "ncrect:{n}"),
            MeshSpec::TiltedBarrier(v) => write!(f, "barrier:{v}"),
            MeshSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for MeshSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("invalid mesh spec '{s}'"));
        let positive = |t: &str| -> Result<usize> {
            t.parse::<usize>().ok().filter(|&n| n >= 1).ok_or_else(bad)
        };
        // a bare path is a mesh file
        let Some((kind, arg)) = s.split_once(':') else {
            return if s.is_empty() { Err(bad()) } else { Ok(MeshSpec::File(PathBuf::from(s))) };
        };
        match kind {
            "rect" => {
                let (a, b) = arg.split_once('x').ok_or_else(bad)?;
                Ok(MeshSpec::Rect(positive(a)?, positive(b)?))
            }
            "tri" => Ok(MeshSpec::Tri(positive(arg)?)),
            "ncrect" => Ok(MeshSpec::NonconformingRect(positive(arg)?)),
            "barrier" => match arg {
                "1" | "2" | "3" => Ok(MeshSpec::TiltedBarrier(arg.parse().unwrap())),
                _ => Err(bad()),
            },
            "file" if !arg.is_empty() => Ok(MeshSpec::File(PathBuf::from(arg))),
            _ => Err(bad()),
        }
    }
}
