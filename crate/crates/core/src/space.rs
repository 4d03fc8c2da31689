//! Discrete unknown spaces: the hybrid/barycentric face split, barycentric
//! weights, unknown numbering and interpolation operators.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use log::warn;
use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::meshgen::RegionMap;

/// Which interior faces keep their own unknown.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionPolicy {
    /// Every interior face is hybrid (B empty).
    AllHybrid,
    /// Every interior face is eliminated (cell-centred scheme).
    AllBarycentric,
    /// Hybrid unknowns only where the region tag changes.
    #[serde(rename = "discontinuity")]
    DiscontinuityAligned,
}

impl fmt::Display for PartitionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            PartitionPolicy::AllHybrid => "all-hybrid",
            PartitionPolicy::AllBarycentric => "all-barycentric",
            PartitionPolicy::DiscontinuityAligned => "discontinuity",
        })
    }
}

impl FromStr for PartitionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all-hybrid" => Ok(PartitionPolicy::AllHybrid),
            "all-barycentric" => Ok(PartitionPolicy::AllBarycentric),
            "discontinuity" => Ok(PartitionPolicy::DiscontinuityAligned),
            _ => Err(Error::InvalidConfig(format!(
                "unknown policy '{s}' (expected all-hybrid, all-barycentric or discontinuity)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FaceKind {
    Hybrid,
    Barycentric,
    Dirichlet,
}

/// Split of the faces into hybrid (H), barycentric (B) and boundary faces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgePartition {
    kinds: Vec<FaceKind>,
}

impl EdgePartition {
    /// Builds a partition from a predicate selecting the hybrid interior faces.
    pub fn from_hybrid(mesh: &Mesh, is_hybrid: impl Fn(usize) -> bool) -> Self {
        let kinds = mesh
            .faces
            .iter()
            .map(|f| {
                if f.is_boundary() {
                    FaceKind::Dirichlet
                } else if is_hybrid(f.id) {
                    FaceKind::Hybrid
                } else {
                    FaceKind::Barycentric
                }
            })
            .collect();
        Self { kinds }
    }

    pub fn kind(&self, face: usize) -> FaceKind {
        self.kinds[face]
    }

    pub fn is_hybrid(&self, face: usize) -> bool {
        self.kinds[face] == FaceKind::Hybrid
    }

    pub fn is_barycentric(&self, face: usize) -> bool {
        self.kinds[face] == FaceKind::Barycentric
    }

    pub fn hybrid_faces(&self) -> impl Iterator<Item = usize> + '_ {
        self.faces_of(FaceKind::Hybrid)
    }

    pub fn barycentric_faces(&self) -> impl Iterator<Item = usize> + '_ {
        self.faces_of(FaceKind::Barycentric)
    }

    fn faces_of(&self, kind: FaceKind) -> impl Iterator<Item = usize> + '_ {
        self.kinds
            .iter()
            .enumerate()
            .filter(move |(_, &k)| k == kind)
            .map(|(i, _)| i)
    }

    pub fn n_hybrid(&self) -> usize {
        self.hybrid_faces().count()
    }

    pub fn n_barycentric(&self) -> usize {
        self.barycentric_faces().count()
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }
}

/// Tuning of [`partition_faces_with`].
#[derive(Clone, Copy, Debug)]
pub struct PartitionOptions {
    /// With the discontinuity policy, also keep a hybrid unknown on faces whose
    /// same-region neighbourhood has collinear cell points, so that every
    /// eliminated face is a barycentre of cell points of its own region.
    pub promote_collinear: bool,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        Self {
            promote_collinear: true,
        }
    }
}

pub fn partition_faces(
    mesh: &Mesh,
    policy: PartitionPolicy,
    regions: Option<&RegionMap>,
) -> Result<EdgePartition> {
    partition_faces_with(mesh, policy, regions, PartitionOptions::default())
}

pub fn partition_faces_with(
    mesh: &Mesh,
    policy: PartitionPolicy,
    regions: Option<&RegionMap>,
    options: PartitionOptions,
) -> Result<EdgePartition> {
    match policy {
        PartitionPolicy::AllHybrid => Ok(EdgePartition::from_hybrid(mesh, |_| true)),
        PartitionPolicy::AllBarycentric => Ok(EdgePartition::from_hybrid(mesh, |_| false)),
        PartitionPolicy::DiscontinuityAligned => {
            let regions = regions.ok_or(Error::MissingRegionMap)?;
            if regions.len() != mesh.n_cells() {
                return Err(Error::InvalidConfig(format!(
                    "region map has {} entries for {} cells",
                    regions.len(),
                    mesh.n_cells()
                )));
            }
            let vertex_cells = mesh.vertex_cells();
            Ok(EdgePartition::from_hybrid(mesh, |f| {
                let face = &mesh.faces[f];
                let (k, l) = (face.cells[0].unwrap(), face.cells[1].unwrap());
                if regions.region(k) != regions.region(l) {
                    return true;
                }
                if !options.promote_collinear {
                    return false;
                }
                let pts: Vec<Point> = candidate_cells(mesh, &vertex_cells, f, Some(regions))
                    .into_iter()
                    .map(|c| mesh.cells[c].point)
                    .collect();
                !spans_plane(&pts, mesh.cells[k].diameter)
            }))
        }
    }
}

fn spans_plane(points: &[Point], scale: f64) -> bool {
    let tol = 1e-10 * scale * scale;
    let Some(&p0) = points.first() else {
        return false;
    };
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            if cross(a - p0, b - p0).abs() > tol {
                return true;
            }
        }
    }
    false
}

fn cross(a: Point, b: Point) -> f64 {
    a.x * b.y - a.y * b.x
}

/// A point entering a barycentric combination.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SupportPoint {
    /// Cell point `x_L`.
    Cell(usize),
    /// Barycentre of a hybrid face.
    Face(usize),
}

impl SupportPoint {
    pub fn position(&self, mesh: &Mesh) -> Point {
        match *self {
            SupportPoint::Cell(c) => mesh.cells[c].point,
            SupportPoint::Face(f) => mesh.faces[f].barycentre,
        }
    }
}

pub type Combination = Vec<(SupportPoint, f64)>;

/// Barycentric coefficients `β` of every eliminated face.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BarycentricWeights {
    per_face: Vec<Option<Combination>>,
}

impl BarycentricWeights {
    /// No face is eliminated.
    pub fn empty(mesh: &Mesh) -> Self {
        Self {
            per_face: vec![None; mesh.n_faces()],
        }
    }

    /// Wraps user-supplied combinations after checking the affine conditions
    /// on every barycentric face.
    pub fn from_combinations(
        mesh: &Mesh,
        partition: &EdgePartition,
        per_face: Vec<Option<Combination>>,
    ) -> Result<Self> {
        if per_face.len() != mesh.n_faces() {
            return Err(Error::InvalidConfig(format!(
                "{} weight entries for {} faces",
                per_face.len(),
                mesh.n_faces()
            )));
        }
        let w = Self { per_face };
        for f in partition.barycentric_faces() {
            let c = w.get(f).ok_or(Error::MissingWeights { face: f })?;
            check_affine(mesh, partition, f, c)?;
        }
        Ok(w)
    }

    pub fn get(&self, face: usize) -> Option<&[(SupportPoint, f64)]> {
        self.per_face.get(face).and_then(|c| c.as_deref())
    }

    /// Iterates `(face, combination)` over the faces that carry weights.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &[(SupportPoint, f64)])> {
        self.per_face
            .iter()
            .enumerate()
            .filter_map(|(f, c)| c.as_deref().map(|c| (f, c)))
    }

    pub fn max_abs(&self) -> f64 {
        self.iter()
            .flat_map(|(_, c)| c.iter().map(|&(_, b)| b.abs()))
            .fold(0.0, f64::max)
    }

    /// Writes `face,kind,id,beta` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (face, c) in self.iter() {
            for &(p, beta) in c {
                w.serialize(WeightRow::new(face, p, beta))?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads rows produced by [`write_csv`](Self::write_csv).
    pub fn read_csv<R: Read>(mesh: &Mesh, reader: R) -> Result<Self> {
        let mut per_face: Vec<Option<Combination>> = vec![None; mesh.n_faces()];
        for row in csv::Reader::from_reader(reader).deserialize() {
            let row: WeightRow = row?;
            let slot = per_face.get_mut(row.face).ok_or_else(|| {
                Error::InvalidConfig(format!("weights reference missing face {}", row.face))
            })?;
            let point = match row.kind.as_str() {
                "cell" => SupportPoint::Cell(row.id),
                "face" => SupportPoint::Face(row.id),
                k => return Err(Error::InvalidConfig(format!("unknown point kind '{k}'"))),
            };
            slot.get_or_insert_with(Vec::new).push((point, row.beta));
        }
        Ok(Self { per_face })
    }
}

#[derive(Serialize, Deserialize)]
struct WeightRow {
    face: usize,
    kind: String,
    id: usize,
    beta: f64,
}

impl WeightRow {
    fn new(face: usize, p: SupportPoint, beta: f64) -> Self {
        let (kind, id) = match p {
            SupportPoint::Cell(c) => ("cell", c),
            SupportPoint::Face(f) => ("face", f),
        };
        Self {
            face,
            kind: kind.into(),
            id,
            beta,
        }
    }
}

fn check_affine(
    mesh: &Mesh,
    partition: &EdgePartition,
    face: usize,
    c: &[(SupportPoint, f64)],
) -> Result<()> {
    let x = mesh.faces[face].barycentre;
    let mut sum = 0.0;
    let mut moment = Point::zeros();
    for &(p, beta) in c {
        if let SupportPoint::Face(s) = p {
            if !partition.is_hybrid(s) {
                return Err(Error::InconsistentWeights { face });
            }
        }
        sum += beta;
        moment += beta * p.position(mesh);
    }
    if (sum - 1.0).abs() > 1e-10 || (moment - x).norm() > 1e-10 * mesh.h {
        return Err(Error::InconsistentWeights { face });
    }
    Ok(())
}

/// Tuning of [`compute_weights_with`].
#[derive(Clone, Copy, Debug)]
pub struct WeightOptions {
    /// Largest number of points in a combination (2 or 3).
    pub max_support: usize,
    /// Allow hybrid face barycentres of the same region as support points.
    pub use_hybrid_points: bool,
    /// Take the two neighbours whenever `x_σ` lies on the segment joining
    /// their cell points, without searching wider combinations.
    pub prefer_pairs: bool,
}

impl Default for WeightOptions {
    fn default() -> Self {
        Self {
            max_support: 3,
            use_hybrid_points: false,
            prefer_pairs: true,
        }
    }
}

pub fn compute_weights(
    mesh: &Mesh,
    partition: &EdgePartition,
    regions: Option<&RegionMap>,
) -> Result<BarycentricWeights> {
    compute_weights_with(mesh, partition, regions, WeightOptions::default())
}

/// Chooses, for every barycentric face, the local combination of at most
/// `max_support` nearby points reproducing `x_σ` with the smallest
/// `Σ|β||x − x_σ|²`. Ties go to the smaller `Σβ²`, then to fewer points,
/// then to the lowest point ids. With `prefer_pairs`, a face whose
/// barycentre lies between its two cell points keeps those two.
pub fn compute_weights_with(
    mesh: &Mesh,
    partition: &EdgePartition,
    regions: Option<&RegionMap>,
    options: WeightOptions,
) -> Result<BarycentricWeights> {
    if !(2..=3).contains(&options.max_support) {
        return Err(Error::InvalidConfig(format!(
            "max_support must be 2 or 3, got {}",
            options.max_support
        )));
    }
    let vertex_cells = mesh.vertex_cells();
    let per_face = (0..mesh.n_faces())
        .into_par_iter()
        .map(|f| {
            if !partition.is_barycentric(f) {
                return Ok(None);
            }
            let c = face_weights(mesh, partition, regions, &vertex_cells, f, options)?;
            let big = c.iter().map(|&(_, b)| b.abs()).fold(0.0, f64::max);
            if big > 4.0 {
                warn!("face {f}: barycentric weight of magnitude {big:.3} exceeds 4");
            }
            Ok(Some(c))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BarycentricWeights { per_face })
}

/// Cells sharing a vertex with `face` (the two neighbours included),
/// restricted to the neighbours' region when a map is supplied and both
/// neighbours lie in it. A face between two regions has no home region.
fn candidate_cells(
    mesh: &Mesh,
    vertex_cells: &[Vec<usize>],
    face: usize,
    regions: Option<&RegionMap>,
) -> Vec<usize> {
    let fc = &mesh.faces[face];
    let home = regions.and_then(|r| {
        let h = r.region(fc.first_cell());
        fc.cells.iter().flatten().all(|&c| r.region(c) == h).then_some(h)
    });
    let mut set = BTreeSet::new();
    for &v in &fc.vertices {
        set.extend(vertex_cells[v].iter().copied());
    }
    set.into_iter()
        .filter(|&c| match (regions, home) {
            (Some(r), Some(h)) => r.region(c) == h,
            _ => true,
        })
        .collect()
}

fn face_weights(
    mesh: &Mesh,
    partition: &EdgePartition,
    regions: Option<&RegionMap>,
    vertex_cells: &[Vec<usize>],
    f: usize,
    options: WeightOptions,
) -> Result<Combination> {
    let face = &mesh.faces[f];
    let (k, l) = (face.cells[0].unwrap(), face.cells[1].unwrap());
    let x = face.barycentre;
    let hk = mesh.cells[k].diameter.max(mesh.cells[l].diameter);
    let cells = candidate_cells(mesh, vertex_cells, f, regions);
    let mut points: Vec<SupportPoint> = cells.iter().map(|&c| SupportPoint::Cell(c)).collect();
    if options.use_hybrid_points {
        let mut faces = BTreeSet::new();
        for &c in &cells {
            faces.extend(
                mesh.cells[c]
                    .faces
                    .iter()
                    .copied()
                    .filter(|&s| partition.is_hybrid(s)),
            );
        }
        points.extend(faces.into_iter().map(SupportPoint::Face));
    }
    let pos: Vec<Point> = points.iter().map(|p| p.position(mesh)).collect();

    let mut best: Option<(f64, Combination)> = None;
    let mut consider = |c: Combination| {
        let spread: f64 = c
            .iter()
            .map(|&(p, b)| b.abs() * (p.position(mesh) - x).norm_squared())
            .sum();
        let better = match &best {
            None => true,
            Some((s, prev)) => {
                let tol = 1e-12 * hk * hk;
                let (q, q_prev) = (sum_sq(&c), sum_sq(prev));
                if spread < s - tol {
                    true
                } else if spread > s + tol {
                    false
                } else if q < q_prev - 1e-12 {
                    true
                } else if q > q_prev + 1e-12 {
                    false
                } else {
                    (c.len(), ids(&c)) < (prev.len(), ids(prev))
                }
            }
        };
        if better {
            best = Some((spread, c));
        }
    };

    // the two neighbours, when x_σ lies on the segment joining them
    let (xk, xl) = (mesh.cells[k].point, mesh.cells[l].point);
    let seg = xl - xk;
    if cross(seg, x - xk).abs() <= 1e-12 * hk * hk && seg.norm_squared() > 0.0 {
        let t = (x - xk).dot(&seg) / seg.norm_squared();
        let mut pair = vec![(SupportPoint::Cell(k), 1.0 - t), (SupportPoint::Cell(l), t)];
        pair.sort_by_key(|a| a.0);
        if options.prefer_pairs {
            check_affine(mesh, partition, f, &pair)?;
            return Ok(pair);
        }
        consider(pair);
    }
    if options.max_support >= 3 {
        let n = points.len();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    if let Some(beta) = solve_affine([pos[a], pos[b], pos[c]], x, hk) {
                        consider(vec![
                            (points[a], beta[0]),
                            (points[b], beta[1]),
                            (points[c], beta[2]),
                        ]);
                    }
                }
            }
        }
    }
    let (_, c) = best.ok_or(Error::NoValidCombination { face: f })?;
    check_affine(mesh, partition, f, &c)?;
    Ok(c)
}

fn sum_sq(c: &Combination) -> f64 {
    c.iter().map(|&(_, b)| b * b).sum()
}

fn ids(c: &Combination) -> Vec<SupportPoint> {
    c.iter().map(|&(p, _)| p).collect()
}

/// Barycentric coordinates of `x` in a non-degenerate triangle.
fn solve_affine(p: [Point; 3], x: Point, scale: f64) -> Option<[f64; 3]> {
    let det = cross(p[1] - p[0], p[2] - p[0]);
    if det.abs() <= 1e-8 * scale * scale {
        return None;
    }
    let m = Matrix3::new(
        p[0].x, p[1].x, p[2].x, //
        p[0].y, p[1].y, p[2].y, //
        1.0, 1.0, 1.0,
    );
    let beta = m.lu().solve(&Vector3::new(x.x, x.y, 1.0))?;
    Some([beta[0], beta[1], beta[2]])
}

/// Bijection between retained unknowns (cells, then hybrid faces by
/// increasing face id) and `0..N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownNumbering {
    n_cells: usize,
    hybrid: Vec<usize>,
    face_index: Vec<Option<usize>>,
}

impl UnknownNumbering {
    pub fn new(mesh: &Mesh, partition: &EdgePartition) -> Self {
        let n_cells = mesh.n_cells();
        let hybrid: Vec<usize> = partition.hybrid_faces().collect();
        let mut face_index = vec![None; mesh.n_faces()];
        for (i, &f) in hybrid.iter().enumerate() {
            face_index[f] = Some(n_cells + i);
        }
        Self {
            n_cells,
            hybrid,
            face_index,
        }
    }

    pub fn len(&self) -> usize {
        self.n_cells + self.hybrid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn cell(&self, k: usize) -> usize {
        k
    }

    pub fn face(&self, f: usize) -> Option<usize> {
        self.face_index[f]
    }

    pub fn hybrid_faces(&self) -> &[usize] {
        &self.hybrid
    }
}

/// Cell values and a full array of face values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteFunction {
    pub cells: Vec<f64>,
    pub faces: Vec<f64>,
}

impl DiscreteFunction {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self {
            cells: vec![0.0; mesh.n_cells()],
            faces: vec![0.0; mesh.n_faces()],
        }
    }

    /// Expands a vector of retained unknowns: hybrid values are copied,
    /// barycentric faces are combined and boundary faces take `boundary`.
    pub fn from_unknowns(
        mesh: &Mesh,
        partition: &EdgePartition,
        weights: &BarycentricWeights,
        numbering: &UnknownNumbering,
        x: &[f64],
        boundary: impl Fn(Point) -> f64,
    ) -> Result<Self> {
        let cells = x[..numbering.n_cells()].to_vec();
        let mut faces = vec![0.0; mesh.n_faces()];
        for face in &mesh.faces {
            if face.is_boundary() {
                faces[face.id] = boundary(face.barycentre);
            } else if let Some(i) = numbering.face(face.id) {
                faces[face.id] = x[i];
            }
        }
        let mut u = Self { cells, faces };
        u.fill_barycentric(partition, weights)?;
        Ok(u)
    }

    /// Recomputes every barycentric face value from its combination.
    pub fn fill_barycentric(
        &mut self,
        partition: &EdgePartition,
        weights: &BarycentricWeights,
    ) -> Result<()> {
        for f in partition.barycentric_faces() {
            let c = weights.get(f).ok_or(Error::MissingWeights { face: f })?;
            self.faces[f] = combine(c, &self.cells, &self.faces);
        }
        Ok(())
    }

    /// Values of the retained unknowns.
    pub fn unknowns(&self, numbering: &UnknownNumbering) -> Vec<f64> {
        let mut x = self.cells.clone();
        x.extend(numbering.hybrid_faces().iter().map(|&f| self.faces[f]));
        x
    }
}

fn combine(c: &[(SupportPoint, f64)], cells: &[f64], faces: &[f64]) -> f64 {
    c.iter()
        .map(|&(p, b)| {
            b * match p {
                SupportPoint::Cell(l) => cells[l],
                SupportPoint::Face(s) => faces[s],
            }
        })
        .sum()
}

/// `P_D φ`: values at cell points and at every face barycentre.
pub fn interpolate(mesh: &Mesh, phi: impl Fn(Point) -> f64) -> DiscreteFunction {
    DiscreteFunction {
        cells: mesh.cells.iter().map(|c| phi(c.point)).collect(),
        faces: mesh.faces.iter().map(|f| phi(f.barycentre)).collect(),
    }
}

/// `P_{D,B} φ`: as [`interpolate`], with barycentric faces replaced by the
/// combination of the interpolated support values.
pub fn interpolate_composite(
    mesh: &Mesh,
    partition: &EdgePartition,
    weights: &BarycentricWeights,
    phi: impl Fn(Point) -> f64,
) -> Result<DiscreteFunction> {
    let mut u = interpolate(mesh, phi);
    u.fill_barycentric(partition, weights)?;
    Ok(u)
}
