//! Local flux matrices and assembly of the global symmetric system.
//!
//! The numerical flux out of `K` through `σ` is
//! `F_{K,σ}(u) = Σ_{σ'} A_K^{σσ'} (u_K − u_{σ'})`. Each flux is first written
//! as a linear form in the retained unknowns (barycentric faces replaced by
//! their combinations, Dirichlet values moved to a constant) and then added to
//! the row of `K`, to the rows of the points supporting a barycentric face, or
//! to the row of a hybrid face.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, Matrix2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gradient::y_vectors;
use crate::mesh::{Mesh, Point};
use crate::space::{BarycentricWeights, DiscreteFunction, EdgePartition, SupportPoint, UnknownNumbering};
use crate::sparse::SymmetricCsr;

type TensorFn = dyn Fn(Point) -> Matrix2<f64> + Send + Sync;

/// Diffusion tensor `Λ`.
#[derive(Clone)]
pub enum TensorField {
    Constant(Matrix2<f64>),
    PerCell(Vec<Matrix2<f64>>),
    /// Sampled at cone centroids.
    Function(Arc<TensorFn>),
}

impl fmt::Debug for TensorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TensorField::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            TensorField::PerCell(v) => write!(f, "PerCell({} cells)", v.len()),
            TensorField::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl TensorField {
    pub fn identity() -> Self {
        TensorField::Constant(Matrix2::identity())
    }

    /// Isotropic `λ_K Id` per cell.
    pub fn isotropic(lambda: &[f64]) -> Self {
        TensorField::PerCell(lambda.iter().map(|&l| Matrix2::identity() * l).collect())
    }

    pub fn function(f: impl Fn(Point) -> Matrix2<f64> + Send + Sync + 'static) -> Self {
        TensorField::Function(Arc::new(f))
    }

    /// `Λ` on the cone of `cell` at local face `local`.
    pub fn sample(&self, mesh: &Mesh, cell: usize, local: usize) -> Matrix2<f64> {
        match self {
            TensorField::Constant(m) => *m,
            TensorField::PerCell(v) => v[cell],
            TensorField::Function(f) => f(mesh.cone_centroid(cell, local)),
        }
    }

    pub fn is_identity(&self) -> bool {
        let id = Matrix2::identity();
        match self {
            TensorField::Constant(m) => *m == id,
            TensorField::PerCell(v) => v.iter().all(|m| *m == id),
            TensorField::Function(_) => false,
        }
    }

    /// Checks symmetry and positive definiteness on every cone and returns
    /// the eigenvalue bounds `(λ_min, λ_max)`.
    pub fn validate(&self, mesh: &Mesh) -> Result<(f64, f64)> {
        if let TensorField::PerCell(v) = self {
            if v.len() != mesh.n_cells() {
                return Err(Error::InvalidConfig(format!(
                    "tensor field has {} entries for {} cells",
                    v.len(),
                    mesh.n_cells()
                )));
            }
        }
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for c in &mesh.cells {
            for i in 0..c.n_faces() {
                let (a, b) = eigen_bounds(&self.sample(mesh, c.id, i), c.id)?;
                lo = lo.min(a);
                hi = hi.max(b);
            }
        }
        Ok((lo, hi))
    }
}

fn eigen_bounds(m: &Matrix2<f64>, cell: usize) -> Result<(f64, f64)> {
    let scale = m.abs().max();
    if !m.iter().all(|v| v.is_finite()) || (m[(0, 1)] - m[(1, 0)]).abs() > 1e-12 * scale {
        return Err(Error::NonSymmetricTensor { cell });
    }
    let half_tr = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let disc = (0.25 * (m[(0, 0)] - m[(1, 1)]).powi(2) + m[(0, 1)] * m[(1, 0)]).sqrt();
    let (lo, hi) = (half_tr - disc, half_tr + disc);
    if !(lo > 0.0) {
        return Err(Error::NonPositiveTensor { cell });
    }
    Ok((lo, hi))
}

/// Dense `A_K` over the faces of one cell (local face order).
#[derive(Clone, Debug)]
pub struct LocalFluxMatrix {
    pub cell: usize,
    pub a: DMatrix<f64>,
}

impl LocalFluxMatrix {
    /// `F_{K,σ}` for the face at local position `local`.
    pub fn flux(&self, mesh: &Mesh, u: &DiscreteFunction, local: usize) -> f64 {
        let c = &mesh.cells[self.cell];
        let uk = u.cells[self.cell];
        c.faces
            .iter()
            .enumerate()
            .map(|(t, &f)| self.a[(local, t)] * (uk - u.faces[f]))
            .sum()
    }

    /// All fluxes of the cell, in local face order.
    pub fn fluxes(&self, mesh: &Mesh, u: &DiscreteFunction) -> Vec<f64> {
        (0..self.a.nrows()).map(|s| self.flux(mesh, u, s)).collect()
    }
}

/// `A_K^{σσ'} = Σ_{σ''} y^{σ''σ} · Λ_{K,σ''} y^{σ''σ'}` with
/// `Λ_{K,σ''} = |D_{K,σ''}| Λ`.
pub fn local_matrix(mesh: &Mesh, k: usize, tensor: &TensorField, alpha: f64) -> Result<LocalFluxMatrix> {
    let c = &mesh.cells[k];
    let n = c.n_faces();
    let y = y_vectors(mesh, k, alpha);
    let mut a = DMatrix::zeros(n, n);
    for s in 0..n {
        let lam = tensor.sample(mesh, k, s);
        eigen_bounds(&lam, k)?;
        let lam = lam * c.cone_measures[s];
        let ly: Vec<Point> = y.y[s].iter().map(|v| lam * v).collect();
        for t in 0..n {
            for t2 in t..n {
                a[(t, t2)] += y.y[s][t].dot(&ly[t2]);
            }
        }
    }
    for t in 0..n {
        for t2 in 0..t {
            a[(t, t2)] = a[(t2, t)];
        }
    }
    Ok(LocalFluxMatrix { cell: k, a })
}

/// Local matrices of every cell, computed in parallel.
pub fn local_matrices(mesh: &Mesh, tensor: &TensorField, alpha: f64) -> Result<Vec<LocalFluxMatrix>> {
    crate::ensure_thread_pool();
    (0..mesh.n_cells())
        .into_par_iter()
        .map(|k| local_matrix(mesh, k, tensor, alpha))
        .collect()
}

/// `F_{K,σ}(u)` for the face at local position `local` of cell `k`.
pub fn flux(mesh: &Mesh, local_matrix: &LocalFluxMatrix, u: &DiscreteFunction, local: usize) -> f64 {
    local_matrix.flux(mesh, u, local)
}

/// Cone-centroid quadrature of `∫_K f`, exact for affine `f`.
pub fn rhs_cell_integral(mesh: &Mesh, k: usize, f: impl Fn(Point) -> f64) -> f64 {
    let c = &mesh.cells[k];
    (0..c.n_faces())
        .map(|i| c.cone_measures[i] * f(mesh.cone_centroid(k, i)))
        .sum()
}

/// Assembled system over the retained unknowns.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: SymmetricCsr,
    pub rhs: Vec<f64>,
    pub numbering: UnknownNumbering,
}

impl LinearSystem {
    pub fn n(&self) -> usize {
        self.rhs.len()
    }

    /// Nonzeros of the full matrix (both triangles, diagonal once).
    pub fn nm(&self) -> usize {
        self.matrix.nnz_full()
    }
}

/// A flux as a linear form in the retained unknowns plus a constant.
struct LinearForm {
    terms: Vec<(usize, f64)>,
    constant: f64,
}

fn flux_form(
    mesh: &Mesh,
    partition: &EdgePartition,
    weights: &BarycentricWeights,
    numbering: &UnknownNumbering,
    boundary: &[f64],
    a: &LocalFluxMatrix,
    local: usize,
) -> Result<LinearForm> {
    let c = &mesh.cells[a.cell];
    let mut terms = vec![(numbering.cell(a.cell), 0.0)];
    let mut constant = 0.0;
    for (t, &f) in c.faces.iter().enumerate() {
        let coef = a.a[(local, t)];
        terms[0].1 += coef;
        if mesh.faces[f].is_boundary() {
            constant -= coef * boundary[f];
        } else if let Some(i) = numbering.face(f) {
            terms.push((i, -coef));
        } else {
            let comb = weights.get(f).ok_or(Error::MissingWeights { face: f })?;
            for &(p, beta) in comb {
                let i = support_index(partition, numbering, f, p)?;
                terms.push((i, -coef * beta));
            }
        }
    }
    Ok(LinearForm { terms, constant })
}

fn support_index(
    partition: &EdgePartition,
    numbering: &UnknownNumbering,
    face: usize,
    p: SupportPoint,
) -> Result<usize> {
    match p {
        SupportPoint::Cell(l) => Ok(numbering.cell(l)),
        SupportPoint::Face(s) if partition.is_hybrid(s) => {
            numbering.face(s).ok_or(Error::InconsistentWeights { face })
        }
        SupportPoint::Face(_) => Err(Error::InconsistentWeights { face }),
    }
}

/// Assembles the composite scheme for `−div(Λ∇u) = f` with `u = g` on the
/// boundary (`g` evaluated at boundary face barycentres).
pub fn assemble<F, G>(
    mesh: &Mesh,
    partition: &EdgePartition,
    weights: &BarycentricWeights,
    tensor: &TensorField,
    source: F,
    boundary: G,
    alpha: f64,
) -> Result<LinearSystem>
where
    F: Fn(Point) -> f64 + Sync,
    G: Fn(Point) -> f64,
{
    let locals = local_matrices(mesh, tensor, alpha)?;
    assemble_with(mesh, partition, weights, &locals, source, boundary)
}

/// As [`assemble`], reusing precomputed local matrices.
pub fn assemble_with<F, G>(
    mesh: &Mesh,
    partition: &EdgePartition,
    weights: &BarycentricWeights,
    locals: &[LocalFluxMatrix],
    source: F,
    boundary: G,
) -> Result<LinearSystem>
where
    F: Fn(Point) -> f64 + Sync,
    G: Fn(Point) -> f64,
{
    let numbering = UnknownNumbering::new(mesh, partition);
    let n = numbering.len();
    let bvals: Vec<f64> = mesh
        .faces
        .iter()
        .map(|f| if f.is_boundary() { boundary(f.barycentre) } else { 0.0 })
        .collect();

    // (triplets, rhs increments) per cell, merged in cell order below
    let per_cell: Vec<(Vec<(usize, usize, f64)>, Vec<(usize, f64)>)> = locals
        .par_iter()
        .map(|a| {
            let k = a.cell;
            let mut trip = Vec::new();
            let mut rhs = vec![(numbering.cell(k), rhs_cell_integral(mesh, k, &source))];
            for (s, &f) in mesh.cells[k].faces.iter().enumerate() {
                let form = flux_form(mesh, partition, weights, &numbering, &bvals, a, s)?;
                let mut add_row = |row: usize, scale: f64| {
                    for &(j, v) in &form.terms {
                        trip.push((row, j, scale * v));
                    }
                    rhs.push((row, -scale * form.constant));
                };
                add_row(numbering.cell(k), 1.0);
                if mesh.faces[f].is_boundary() {
                    continue;
                }
                if let Some(i) = numbering.face(f) {
                    add_row(i, -1.0);
                } else {
                    let comb = weights.get(f).ok_or(Error::MissingWeights { face: f })?;
                    for &(p, beta) in comb {
                        add_row(support_index(partition, &numbering, f, p)?, -beta);
                    }
                }
            }
            Ok((trip, rhs))
        })
        .collect::<Result<_>>()?;

    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; n];
    for (t, r) in per_cell {
        triplets.extend(t);
        for (i, v) in r {
            rhs[i] += v;
        }
    }
    let matrix = SymmetricCsr::from_triplets(n, &triplets);
    for (row, d) in matrix.diagonal().into_iter().enumerate() {
        if !(d > 0.0) {
            return Err(Error::SingularAfterElimination { row });
        }
    }
    Ok(LinearSystem {
        matrix,
        rhs,
        numbering,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradient::{gradient_field, DEFAULT_ALPHA};
    use crate::meshgen::{gen_nonconforming_rect, gen_rect, gen_tri};
    use crate::space::{compute_weights, interpolate, partition_faces, PartitionPolicy};
    use nalgebra::SymmetricEigen;
    use rand::{Rng, SeedableRng};

    fn clubar() -> TensorField {
        TensorField::Constant(Matrix2::new(1.5, 0.5, 0.5, 1.5))
    }

    fn random(mesh: &Mesh, seed: u64) -> DiscreteFunction {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        DiscreteFunction {
            cells: (0..mesh.n_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            faces: (0..mesh.n_faces()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        }
    }

    #[test]
    fn unit_square_identity_is_diagonal() {
        let m = gen_rect(1, 1);
        let a = local_matrix(&m, 0, &TensorField::identity(), DEFAULT_ALPHA).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { 2.0 } else { 0.0 };
                assert!((a.a[(i, j)] - expected).abs() < 1e-13, "{i} {j}: {}", a.a[(i, j)]);
            }
        }
    }

    #[test]
    fn anisotropic_unit_square_is_spd() {
        let m = gen_rect(1, 1);
        let a = local_matrix(&m, 0, &clubar(), DEFAULT_ALPHA).unwrap();
        assert!((&a.a - a.a.transpose()).abs().max() < 1e-14);
        let eig = SymmetricEigen::new(a.a.clone()).eigenvalues;
        assert!(eig.iter().all(|&e| e > 0.0));
    }

    #[test]
    fn quadratic_form_matches_cone_energy() {
        for m in [gen_tri(2), gen_nonconforming_rect(1)] {
            let locals = local_matrices(&m, &clubar(), 0.8).unwrap();
            for seed in 0..10 {
                let u = random(&m, seed);
                let g = gradient_field(&m, &u, 0.8);
                let lam = Matrix2::new(1.5, 0.5, 0.5, 1.5);
                for c in &m.cells {
                    let energy: f64 = (0..c.n_faces())
                        .map(|i| c.cone_measures[i] * g.cones[c.id][i].dot(&(lam * g.cones[c.id][i])))
                        .sum();
                    let fluxes = locals[c.id].fluxes(&m, &u);
                    let form: f64 = c
                        .faces
                        .iter()
                        .zip(&fluxes)
                        .map(|(&f, fl)| fl * (u.cells[c.id] - u.faces[f]))
                        .sum();
                    assert!((form - energy).abs() <= 1e-12 * energy.abs());
                }
            }
        }
    }

    #[test]
    fn affine_fluxes_are_exact() {
        let m = gen_nonconforming_rect(1);
        let grad = Point::new(-0.4, 1.3);
        let u = interpolate(&m, |x| 2.0 + grad.dot(&x));
        let locals = local_matrices(&m, &TensorField::identity(), DEFAULT_ALPHA).unwrap();
        for c in &m.cells {
            for (s, &f) in c.faces.iter().enumerate() {
                let expected = -m.faces[f].measure * grad.dot(&c.normals[s]);
                let got = flux(&m, &locals[c.id], &u, s);
                assert!((got - expected).abs() < 1e-12);
            }
        }
        let zero = interpolate(&m, |_| 3.0);
        assert!(locals[0].fluxes(&m, &zero).iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn unknown_and_nonzero_counts() {
        let cases = [
            (gen_rect(8, 6), [(130, 874), (48, 488)]),
            (gen_nonconforming_rect(2), [(182, 1334), (64, 724)]),
            (gen_rect(8, 10), [(222, 1542), (80, 864)]),
        ];
        for (m, expected) in cases {
            let policies = [PartitionPolicy::AllHybrid, PartitionPolicy::AllBarycentric];
            for (policy, (n, nm)) in policies.into_iter().zip(expected) {
                let p = partition_faces(&m, policy, None).unwrap();
                let w = compute_weights(&m, &p, None).unwrap();
                let sys = assemble(&m, &p, &w, &clubar(), |_| 1.0, |_| 0.0, DEFAULT_ALPHA).unwrap();
                assert_eq!((sys.n(), sys.nm()), (n, nm), "{policy}");
            }
        }
    }

    #[test]
    fn rhs_quadrature() {
        let m = gen_tri(2);
        for c in &m.cells {
            assert!((rhs_cell_integral(&m, c.id, |_| 1.0) - c.measure).abs() < 1e-15);
            let affine = |x: Point| 1.0 + 2.0 * x.x - x.y;
            let exact = c.measure * affine(c.centroid);
            assert!((rhs_cell_integral(&m, c.id, affine) - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn tensor_validation() {
        let m = gen_rect(2, 2);
        assert!(clubar().validate(&m).is_ok());
        let (lo, hi) = clubar().validate(&m).unwrap();
        assert!((lo - 1.0).abs() < 1e-14 && (hi - 2.0).abs() < 1e-14);
        let ns = TensorField::Constant(Matrix2::new(1.0, 0.2, 0.0, 1.0));
        assert!(matches!(ns.validate(&m), Err(Error::NonSymmetricTensor { .. })));
        let np = TensorField::Constant(Matrix2::new(1.0, 2.0, 2.0, 1.0));
        assert!(matches!(np.validate(&m), Err(Error::NonPositiveTensor { .. })));
        assert!(local_matrix(&m, 0, &np, 1.0).is_err());
    }

    #[test]
    fn assembly_is_thread_count_independent() {
        let m = gen_nonconforming_rect(2);
        let p = partition_faces(&m, PartitionPolicy::AllBarycentric, None).unwrap();
        let w = compute_weights(&m, &p, None).unwrap();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| assemble(&m, &p, &w, &clubar(), |x| x.x, |x| x.y, 1.0).unwrap())
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(a.matrix, b.matrix);
        assert_eq!(a.rhs, b.rhs);
    }
}
