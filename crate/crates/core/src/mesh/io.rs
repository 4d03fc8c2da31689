//! Line-oriented mesh text format.
//!
//! ```text
//! dim 2
//! vertices N
//! x y            (N lines)
//! cells M
//! i j k ...      (M lines, counter-clockwise corner indices)
//! cellpoints M   (optional)
//! x y            (M lines)
//! split S        (optional)
//! a b v1 v2 ...  (S lines: edge a -> b subdivided by v1, v2, ...)
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Coordinates are
//! written with the shortest representation that round-trips exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{compute_geometry, EdgeSplit, Mesh, Point, RawMesh};
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        for (i, line) in self.inner.by_ref() {
            let t = line.trim();
            self.last = i + 1;
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            return Some((i + 1, t));
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next_content()
            .ok_or_else(|| parse_err(self.last + 1, format!("unexpected end of file, expected {what}")))
    }
}

fn header(line: usize, text: &str, keyword: &str) -> Result<usize> {
    let mut it = text.split_whitespace();
    match (it.next(), it.next(), it.next()) {
        (Some(k), Some(n), None) if k == keyword => n
            .parse()
            .map_err(|_| parse_err(line, format!("invalid count '{n}' after '{keyword}'"))),
        _ => Err(parse_err(line, format!("expected '{keyword} <count>'"))),
    }
}

fn point(line: usize, text: &str) -> Result<Point> {
    let vals: Vec<&str> = text.split_whitespace().collect();
    if vals.len() != 2 {
        return Err(parse_err(line, "expected two coordinates"));
    }
    let parse = |s: &str| {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| parse_err(line, format!("invalid coordinate '{s}'")))
    };
    Ok(Point::new(parse(vals[0])?, parse(vals[1])?))
}

fn indices(line: usize, text: &str, n_vertices: usize) -> Result<Vec<usize>> {
    text.split_whitespace()
        .map(|s| {
            let v: usize = s
                .parse()
                .map_err(|_| parse_err(line, format!("invalid vertex index '{s}'")))?;
            if v >= n_vertices {
                return Err(parse_err(
                    line,
                    format!("vertex {v} does not exist ({n_vertices} vertices)"),
                ));
            }
            Ok(v)
        })
        .collect()
}

/// Parses the topological description from text.
pub fn parse_raw(text: &str) -> Result<RawMesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (l, t) = lines.expect("'dim'")?;
    let dim = header(l, t, "dim")?;
    if dim != 2 {
        return Err(parse_err(l, format!("unsupported dimension {dim}")));
    }
    let (l, t) = lines.expect("'vertices'")?;
    let nv = header(l, t, "vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (l, t) = lines.expect("a vertex")?;
        vertices.push(point(l, t)?);
    }
    let (l, t) = lines.expect("'cells'")?;
    let nc = header(l, t, "cells")?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (l, t) = lines.expect("a cell")?;
        let c = indices(l, t, nv)?;
        if c.len() < 3 {
            return Err(parse_err(l, "a cell needs at least 3 vertices"));
        }
        cells.push(c);
    }
    let mut raw = RawMesh::new(vertices, cells);
    while let Some((l, t)) = lines.next_content() {
        let keyword = t.split_whitespace().next().unwrap_or("");
        match keyword {
            "cellpoints" => {
                let n = header(l, t, "cellpoints")?;
                if n != nc {
                    return Err(parse_err(l, format!("{n} cell points for {nc} cells")));
                }
                let mut pts = Vec::with_capacity(n);
                for _ in 0..n {
                    let (l, t) = lines.expect("a cell point")?;
                    pts.push(point(l, t)?);
                }
                raw.cell_points = Some(pts);
            }
            "split" => {
                let n = header(l, t, "split")?;
                for _ in 0..n {
                    let (l, t) = lines.expect("a split record")?;
                    let idx = indices(l, t, nv)?;
                    if idx.len() < 3 {
                        return Err(parse_err(l, "a split needs two endpoints and at least one vertex"));
                    }
                    raw.splits.push(EdgeSplit {
                        a: idx[0],
                        b: idx[1],
                        interior: idx[2..].to_vec(),
                    });
                }
            }
            other => return Err(parse_err(l, format!("unknown section '{other}'"))),
        }
    }
    Ok(raw)
}

/// Parses a mesh and computes its geometry.
pub fn read_mesh_str(text: &str) -> Result<Mesh> {
    compute_geometry(&parse_raw(text)?)
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    fs::read_to_string(path)
        .map_err(Error::from)
        .and_then(|text| read_mesh_str(&text))
        .map_err(|e| e.in_file(path))
}

/// Serialises the topological description of a mesh.
pub fn write_mesh_string(mesh: &Mesh) -> String {
    write_raw(&mesh.raw)
}

pub fn write_raw(raw: &RawMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "dim {}", raw.dim);
    let _ = writeln!(s, "vertices {}", raw.vertices.len());
    for v in &raw.vertices {
        let _ = writeln!(s, "{} {}", v.x, v.y);
    }
    let _ = writeln!(s, "cells {}", raw.cells.len());
    for c in &raw.cells {
        let line: Vec<String> = c.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    if let Some(pts) = &raw.cell_points {
        let _ = writeln!(s, "cellpoints {}", pts.len());
        for p in pts {
            let _ = writeln!(s, "{} {}", p.x, p.y);
        }
    }
    if !raw.splits.is_empty() {
        let _ = writeln!(s, "split {}", raw.splits.len());
        for sp in &raw.splits {
            let mut line = vec![sp.a.to_string(), sp.b.to_string()];
            line.extend(sp.interior.iter().map(usize::to_string));
            let _ = writeln!(s, "{}", line.join(" "));
        }
    }
    s
}

pub fn write_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_mesh_string(mesh))?;
    Ok(())
}
