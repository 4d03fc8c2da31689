//! Benchmark problems: tensor, source, boundary data and exact solution.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::assembly::TensorField;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::meshgen::{RegionMap, BARRIER_SLOPE, BARRIER_WIDTH};

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> Point + Send + Sync>;
pub type RegionFn = Arc<dyn Fn(Point) -> u8 + Send + Sync>;

#[derive(Clone)]
pub struct ExactSolution {
    pub u: ScalarFn,
    pub grad: VectorFn,
}

/// Diffusion tensor of a problem, before it is bound to a mesh.
#[derive(Clone, Debug, PartialEq)]
pub enum ProblemTensor {
    Constant(Matrix2<f64>),
    /// Piecewise constant, keyed by region tag.
    ByRegion(BTreeMap<u8, Matrix2<f64>>),
}

#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub tensor: ProblemTensor,
    pub source: ScalarFn,
    /// Dirichlet data `g`, evaluated at boundary face barycentres.
    pub boundary: ScalarFn,
    pub exact: Option<ExactSolution>,
    /// Region of a point, used to tag cells by their centroid.
    pub regions: Option<RegionFn>,
    /// Exact `∫ Λ∇u·n` on the sides `x = 0`, `x = 1`, `y = 0`, `y = 1`.
    pub boundary_fluxes: Option<[f64; 4]>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("tensor", &self.tensor)
            .field("exact", &self.exact.is_some())
            .finish_non_exhaustive()
    }
}

impl Problem {
    /// Built-in problem by name, or a JSON descriptor when `name` is a path
    /// to an existing `.json` file.
    pub fn by_name(name: &str) -> Result<Problem> {
        match name {
            "anisotropic-smooth" => Ok(problem_anisotropic_smooth()),
            "isotropic-smooth" => Ok(problem_isotropic_smooth()),
            "tilted-barrier" => Ok(problem_tilted_barrier()),
            "superadmissible" => problem_superadmissible_oracle(1.0, 100.0),
            _ if name.ends_with(".json") => Problem::from_json_file(name),
            _ => Err(Error::InvalidConfig(format!(
                "unknown problem '{name}' (expected anisotropic-smooth, isotropic-smooth, \
                 tilted-barrier, superadmissible or a .json descriptor)"
            ))),
        }
    }

    /// Tags cells through the problem's region function.
    pub fn region_map(&self, mesh: &Mesh) -> Option<RegionMap> {
        self.regions
            .as_ref()
            .map(|f| RegionMap::from_fn(mesh, |x| f(x)))
    }

    pub fn tensor_field(&self, mesh: &Mesh, regions: Option<&RegionMap>) -> Result<TensorField> {
        match &self.tensor {
            ProblemTensor::Constant(m) => Ok(TensorField::Constant(*m)),
            ProblemTensor::ByRegion(map) => {
                let regions = regions.ok_or(Error::MissingRegionMap)?;
                let per_cell = (0..mesh.n_cells())
                    .map(|k| {
                        let r = regions.region(k);
                        map.get(&r).copied().ok_or_else(|| {
                            Error::InvalidConfig(format!("no tensor for region {r} (cell {k})"))
                        })
                    })
                    .collect::<Result<_>>()?;
                Ok(TensorField::PerCell(per_cell))
            }
        }
    }

    pub fn is_identity_tensor(&self) -> bool {
        let id = Matrix2::identity();
        match &self.tensor {
            ProblemTensor::Constant(m) => *m == id,
            ProblemTensor::ByRegion(map) => map.values().all(|m| *m == id),
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Problem> {
        let path = path.as_ref();
        std::fs::read_to_string(path)
            .map_err(Error::from)
            .and_then(|text| Problem::from_json(&text))
            .map_err(|e| e.in_file(path))
    }

    pub fn from_json(text: &str) -> Result<Problem> {
        let d: ProblemDescriptor = serde_json::from_str(text)?;
        d.build()
    }
}

fn quartic(p: Point) -> f64 {
    16.0 * p.x * (1.0 - p.x) * p.y * (1.0 - p.y)
}

fn quartic_grad(p: Point) -> Point {
    Point::new(
        16.0 * (1.0 - 2.0 * p.x) * p.y * (1.0 - p.y),
        16.0 * p.x * (1.0 - p.x) * (1.0 - 2.0 * p.y),
    )
}

/// `−div(Λ∇ū)` for `ū = 16x(1−x)y(1−y)` and a constant symmetric `Λ`:
/// `ū_xx = −32y(1−y)`, `ū_yy = −32x(1−x)`, `ū_xy = 16(1−2x)(1−2y)`.
fn quartic_source(lam: Matrix2<f64>) -> ScalarFn {
    Arc::new(move |p: Point| {
        let uxx = -32.0 * p.y * (1.0 - p.y);
        let uyy = -32.0 * p.x * (1.0 - p.x);
        let uxy = 16.0 * (1.0 - 2.0 * p.x) * (1.0 - 2.0 * p.y);
        -(lam[(0, 0)] * uxx + 2.0 * lam[(0, 1)] * uxy + lam[(1, 1)] * uyy)
    })
}

fn smooth(name: &str, lam: Matrix2<f64>) -> Problem {
    Problem {
        name: name.into(),
        tensor: ProblemTensor::Constant(lam),
        source: quartic_source(lam),
        boundary: Arc::new(|_| 0.0),
        exact: Some(ExactSolution {
            u: Arc::new(quartic),
            grad: Arc::new(quartic_grad),
        }),
        regions: None,
        boundary_fluxes: None,
    }
}

/// Constant anisotropic `Λ = [[1.5, .5], [.5, 1.5]]`, `ū = 16x(1−x)y(1−y)`,
/// homogeneous Dirichlet data.
pub fn problem_anisotropic_smooth() -> Problem {
    smooth("anisotropic-smooth", Matrix2::new(1.5, 0.5, 0.5, 1.5))
}

/// Same exact solution with `Λ = Id`.
pub fn problem_isotropic_smooth() -> Problem {
    smooth("isotropic-smooth", Matrix2::identity())
}

/// Permeability inside the barrier.
pub const BARRIER_LAMBDA: f64 = 1e-2;

/// `φ₁(x, y) = y − δ(x − ½) − 0.475`
pub fn barrier_phi1(p: Point) -> f64 {
    p.y - BARRIER_SLOPE * (p.x - 0.5) - 0.475
}

pub fn barrier_region(p: Point) -> u8 {
    let phi1 = barrier_phi1(p);
    if phi1 < 0.0 {
        1
    } else if phi1 - BARRIER_WIDTH < 0.0 {
        2
    } else {
        3
    }
}

/// Continuous piecewise affine solution with `λ∇u = (δ, −1)` everywhere.
pub fn barrier_exact(p: Point) -> f64 {
    let phi1 = barrier_phi1(p);
    match barrier_region(p) {
        1 => -phi1,
        2 => -phi1 / BARRIER_LAMBDA,
        _ => -(phi1 - BARRIER_WIDTH) - BARRIER_WIDTH / BARRIER_LAMBDA,
    }
}

fn barrier_grad(p: Point) -> Point {
    let g = Point::new(BARRIER_SLOPE, -1.0);
    if barrier_region(p) == 2 {
        g / BARRIER_LAMBDA
    } else {
        g
    }
}

/// Three-region tilted barrier: `λ = 1` outside, `10⁻²` inside, `f = 0`,
/// Dirichlet data from the exact solution.
pub fn problem_tilted_barrier() -> Problem {
    let mut map = BTreeMap::new();
    map.insert(1, Matrix2::identity());
    map.insert(2, Matrix2::identity() * BARRIER_LAMBDA);
    map.insert(3, Matrix2::identity());
    Problem {
        name: "tilted-barrier".into(),
        tensor: ProblemTensor::ByRegion(map),
        source: Arc::new(|_| 0.0),
        boundary: Arc::new(barrier_exact),
        exact: Some(ExactSolution {
            u: Arc::new(barrier_exact),
            grad: Arc::new(barrier_grad),
        }),
        regions: Some(Arc::new(barrier_region)),
        boundary_fluxes: Some([-BARRIER_SLOPE, BARRIER_SLOPE, 1.0, -1.0]),
    }
}

/// Unit square split at `x = ½` into isotropic halves `λ_left`, `λ_right`
/// (regions 1 and 2), unit source and homogeneous Dirichlet data.
pub fn problem_superadmissible_oracle(lambda_left: f64, lambda_right: f64) -> Result<Problem> {
    for l in [lambda_left, lambda_right] {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidConfig(format!("λ must be positive, got {l}")));
        }
    }
    let mut map = BTreeMap::new();
    map.insert(1, Matrix2::identity() * lambda_left);
    map.insert(2, Matrix2::identity() * lambda_right);
    Ok(Problem {
        name: "superadmissible".into(),
        tensor: ProblemTensor::ByRegion(map),
        source: Arc::new(|_| 1.0),
        boundary: Arc::new(|_| 0.0),
        exact: None,
        regions: Some(Arc::new(|p: Point| if p.x < 0.5 { 1 } else { 2 })),
        boundary_fluxes: None,
    })
}

/// `u(x, y) = Σ c[i][j] xⁱ yʲ`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub coefficients: Vec<Vec<f64>>,
}

impl Polynomial {
    pub fn eval(&self, p: Point) -> f64 {
        self.terms().map(|(i, j, c)| c * p.x.powi(i) * p.y.powi(j)).sum()
    }

    pub fn grad(&self, p: Point) -> Point {
        let mut g = Point::zeros();
        for (i, j, c) in self.terms() {
            if i > 0 {
                g.x += c * i as f64 * p.x.powi(i - 1) * p.y.powi(j);
            }
            if j > 0 {
                g.y += c * j as f64 * p.x.powi(i) * p.y.powi(j - 1);
            }
        }
        g
    }

    pub fn hessian(&self, p: Point) -> Matrix2<f64> {
        let mut h = Matrix2::zeros();
        for (i, j, c) in self.terms() {
            let (fi, fj) = (i as f64, j as f64);
            if i > 1 {
                h[(0, 0)] += c * fi * (fi - 1.0) * p.x.powi(i - 2) * p.y.powi(j);
            }
            if j > 1 {
                h[(1, 1)] += c * fj * (fj - 1.0) * p.x.powi(i) * p.y.powi(j - 2);
            }
            if i > 0 && j > 0 {
                let v = c * fi * fj * p.x.powi(i - 1) * p.y.powi(j - 1);
                h[(0, 1)] += v;
                h[(1, 0)] += v;
            }
        }
        h
    }

    fn terms(&self) -> impl Iterator<Item = (i32, i32, f64)> + '_ {
        self.coefficients.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(move |(j, &c)| (i as i32, j as i32, c))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorDescriptor {
    Constant([[f64; 2]; 2]),
    /// Two halves split by the vertical line `x = split_x`.
    TwoRegion {
        split_x: f64,
        left: [[f64; 2]; 2],
        right: [[f64; 2]; 2],
    },
}

/// JSON descriptor of a custom problem with a polynomial exact solution.
///
/// ```json
/// {"name": "bilinear", "tensor": {"constant": [[2, 0], [0, 1]]},
///  "exact": {"coefficients": [[0, 0], [0, 1]]}}
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemDescriptor {
    pub name: String,
    pub tensor: TensorDescriptor,
    pub exact: Polynomial,
}

fn matrix(m: [[f64; 2]; 2]) -> Matrix2<f64> {
    Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1])
}

impl ProblemDescriptor {
    /// Builds the problem. A two-region tensor is accepted only when the
    /// normal flux `(Λ∇u)·e_x` of the polynomial is continuous on the split
    /// line, otherwise `u` is not a weak solution.
    pub fn build(&self) -> Result<Problem> {
        if let TensorDescriptor::TwoRegion { split_x, left, right } = self.tensor {
            let jump = matrix(left) - matrix(right);
            for i in 0..=20 {
                let p = Point::new(split_x, i as f64 / 20.0);
                let g = self.exact.grad(p);
                let scale = (matrix(left) * g).norm().max((matrix(right) * g).norm()).max(1.0);
                if (jump * g).x.abs() > 1e-10 * scale {
                    return Err(Error::InvalidConfig(format!(
                        "{}: normal flux of the exact solution jumps across x = {split_x} (at y = {})",
                        self.name, p.y
                    )));
                }
            }
        }
        let (tensor, regions, lam_at): (ProblemTensor, Option<RegionFn>, Arc<dyn Fn(Point) -> Matrix2<f64> + Send + Sync>) =
            match self.tensor {
                TensorDescriptor::Constant(m) => {
                    let m = matrix(m);
                    (ProblemTensor::Constant(m), None, Arc::new(move |_| m))
                }
                TensorDescriptor::TwoRegion { split_x, left, right } => {
                    let (l, r) = (matrix(left), matrix(right));
                    let mut map = BTreeMap::new();
                    map.insert(1, l);
                    map.insert(2, r);
                    let region = move |p: Point| if p.x < split_x { 1 } else { 2 };
                    (
                        ProblemTensor::ByRegion(map),
                        Some(Arc::new(region)),
                        Arc::new(move |p| if region(p) == 1 { l } else { r }),
                    )
                }
            };
        let poly = Arc::new(self.exact.clone());
        let (pu, pg, ph) = (poly.clone(), poly.clone(), poly);
        let u: ScalarFn = Arc::new(move |p| pu.eval(p));
        Ok(Problem {
            name: self.name.clone(),
            tensor,
            source: Arc::new(move |p| {
                let h = ph.hessian(p);
                let lam = lam_at(p);
                -(lam[(0, 0)] * h[(0, 0)] + lam[(0, 1)] * h[(0, 1)] + lam[(1, 0)] * h[(1, 0)] + lam[(1, 1)] * h[(1, 1)])
            }),
            boundary: u.clone(),
            exact: Some(ExactSolution {
                u,
                grad: Arc::new(move |p| pg.grad(p)),
            }),
            regions,
            boundary_fluxes: None,
        })
    }
}
