//! Preconditioned conjugate gradient and a dense Cholesky oracle.

use std::time::Instant;

use log::debug;
use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SymmetricCsr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    None,
    Jacobi,
}

#[derive(Clone, Copy, Debug)]
pub struct CgOptions {
    /// Relative residual target `‖b − Ax‖ / ‖b‖`.
    pub tol: f64,
    /// Defaults to `10 N`.
    pub max_iters: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iters: None,
            preconditioner: Preconditioner::Jacobi,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: String,
    pub iterations: usize,
    pub residual: f64,
    pub wall_time_s: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conjugate gradient on an SPD matrix.
pub fn solve_cg(a: &SymmetricCsr, b: &[f64], options: CgOptions) -> Result<(Vec<f64>, SolveReport)> {
    if !(options.tol > 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance must be positive, got {}", options.tol)));
    }
    crate::ensure_thread_pool();
    let start = Instant::now();
    let n = a.dim();
    let max_iters = options.max_iters.unwrap_or(10 * n.max(1));
    let lower = a.lower_index();
    let inv_diag: Vec<f64> = match options.preconditioner {
        Preconditioner::Jacobi => a
            .diagonal()
            .into_iter()
            .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
            .collect(),
        Preconditioner::None => vec![1.0; n],
    };
    let report = |iterations, residual| SolveReport {
        method: match options.preconditioner {
            Preconditioner::None => "cg".into(),
            Preconditioner::Jacobi => "cg-jacobi".into(),
        },
        iterations,
        residual,
        wall_time_s: start.elapsed().as_secs_f64(),
    };

    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, report(0, 0.0)));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iters {
        let ap = a.par_matvec(&p, &lower);
        let pap = dot(&p, &ap);
        if pap == 0.0 {
            // search direction underflowed: the tolerance is below rounding
            return Err(Error::Stagnated {
                iteration: it,
                residual: true_residual(a, b, &x) / bnorm,
            });
        }
        if !(pap > 0.0) {
            return Err(Error::BreakdownNonSpd { iteration: it });
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let res = dot(&r, &r).sqrt() / bnorm;
        if res <= options.tol {
            debug!("cg converged in {it} iterations, residual {res:e}");
            return Ok((x, report(it, res)));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    // true residual, in case the recurrence drifted
    Err(Error::MaxIterations {
        iterations: max_iters,
        residual: true_residual(a, b, &x) / bnorm,
    })
}

fn true_residual(a: &SymmetricCsr, b: &[f64], x: &[f64]) -> f64 {
    let ax = a.matvec(x);
    b.iter().zip(&ax).map(|(b, y)| (b - y).powi(2)).sum::<f64>().sqrt()
}

/// Result of a dense Cholesky solve; the pivots certify definiteness.
#[derive(Clone, Debug)]
pub struct DenseSolution {
    pub x: Vec<f64>,
    /// Squared diagonal of the Cholesky factor, all positive.
    pub pivots: Vec<f64>,
}

impl DenseSolution {
    pub fn min_pivot(&self) -> f64 {
        self.pivots.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Largest system accepted by [`solve_dense`].
pub const DENSE_LIMIT: usize = 5000;

pub fn solve_dense(a: &SymmetricCsr, b: &[f64]) -> Result<DenseSolution> {
    if a.dim() > DENSE_LIMIT {
        return Err(Error::InvalidConfig(format!(
            "dense solve limited to {DENSE_LIMIT} unknowns, got {}",
            a.dim()
        )));
    }
    cholesky_solve(a.to_dense(), b)
}

/// Cholesky solve of a dense symmetric matrix.
pub fn cholesky_solve(m: DMatrix<f64>, b: &[f64]) -> Result<DenseSolution> {
    let n = m.nrows();
    let Some(chol) = Cholesky::new(m.clone()) else {
        return Err(failed_pivot(m));
    };
    let l = chol.l();
    let pivots: Vec<f64> = (0..n).map(|i| l[(i, i)].powi(2)).collect();
    let x = chol.solve(&DVector::from_column_slice(b));
    Ok(DenseSolution {
        x: x.iter().copied().collect(),
        pivots,
    })
}

/// Locates the first non-positive pivot: the factorisation is rerun with a
/// sentinel substituted for bad pivots, and the rows before the first
/// sentinel are exact.
fn failed_pivot(m: DMatrix<f64>) -> Error {
    const SENTINEL: f64 = 1e300;
    let a = m.clone();
    let Some(chol) = Cholesky::new_with_substitute(m, SENTINEL) else {
        return Error::NotPositiveDefinite {
            pivot: 0,
            value: f64::NAN,
        };
    };
    let l = chol.l();
    let n = a.nrows();
    let pivot = (0..n).find(|&j| l[(j, j)] == SENTINEL.sqrt()).unwrap_or(0);
    let value = a[(pivot, pivot)] - (0..pivot).map(|k| l[(pivot, k)].powi(2)).sum::<f64>();
    Error::NotPositiveDefinite { pivot, value }
}
