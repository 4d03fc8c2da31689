//! Legacy VTK, CSV and JSON writers.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gradient::GradientField;
use crate::mesh::Mesh;
use crate::meshgen::RegionMap;
use crate::space::DiscreteFunction;

/// ASCII legacy VTK unstructured grid: polygon cells, cell scalars `u`,
/// cell-averaged gradient vectors and an optional region tag.
pub fn export_vtk<W: Write>(
    mesh: &Mesh,
    u: &DiscreteFunction,
    grad: &GradientField,
    regions: Option<&RegionMap>,
    mut w: W,
) -> Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "sushi solution")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.vertices.len())?;
    for v in &mesh.vertices {
        writeln!(w, "{:e} {:e} 0", v.x, v.y)?;
    }
    let size: usize = mesh.cells.iter().map(|c| c.vertices.len() + 1).sum();
    writeln!(w, "CELLS {} {}", mesh.n_cells(), size)?;
    for c in &mesh.cells {
        write!(w, "{}", c.vertices.len())?;
        for v in &c.vertices {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    writeln!(w, "CELL_TYPES {}", mesh.n_cells())?;
    for _ in &mesh.cells {
        writeln!(w, "7")?;
    }
    writeln!(w, "CELL_DATA {}", mesh.n_cells())?;
    writeln!(w, "SCALARS u double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in &u.cells {
        writeln!(w, "{v:e}")?;
    }
    writeln!(w, "VECTORS gradient double")?;
    for c in &mesh.cells {
        let g = grad.cell_average(mesh, c.id);
        writeln!(w, "{:e} {:e} 0", g.x, g.y)?;
    }
    if let Some(r) = regions {
        writeln!(w, "SCALARS region int 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for &t in &r.0 {
            writeln!(w, "{t}")?;
        }
    }
    Ok(())
}

/// One row of a run report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub mesh: String,
    pub policy: String,
    pub alpha: f64,
    pub h: f64,
    pub n: usize,
    pub nm: usize,
    pub iterations: usize,
    pub eps_u: Option<f64>,
    pub eps_grad: Option<f64>,
    pub flux_x_min: Option<f64>,
    pub flux_x_max: Option<f64>,
    pub flux_y_min: Option<f64>,
    pub flux_y_max: Option<f64>,
}

pub fn write_run_csv<W: Write>(records: &[RunRecord], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in records {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_run_csv<R: Read>(r: R) -> Result<Vec<RunRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rd.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

pub fn write_json<W: Write, T: Serialize>(value: &T, w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, value)?;
    Ok(())
}
