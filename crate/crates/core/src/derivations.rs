//! Derivation algebras and pre-Einstein derivations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lie::LieAlgebra;
use crate::linalg::{self, Snapped};
use crate::scalar::Scalar;

/// Singular-value cutoff for all derivation nullspaces.
pub const NULLSPACE_CUTOFF: f64 = 1e-10;

/// Denominator cap for rational eigenvalue snapping.
pub const MAX_DENOMINATOR: i64 = 64;

/// Basis of a space of derivations, orthonormal for the Frobenius product.
#[derive(Clone, Debug)]
pub struct DerivationBasis {
    pub algebra_dim: usize,
    pub matrices: Vec<DMatrix<f64>>,
}

impl DerivationBasis {
    pub fn dim(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// Frobenius distance from `m` to the span, relative to `|m|`.
    pub fn projection_residual(&self, m: &DMatrix<f64>) -> f64 {
        let mut r = m.clone();
        for a in &self.matrices {
            let c = a.dot(m);
            r -= a * c;
        }
        r.norm() / m.norm().max(1e-300)
    }

    /// Largest Leibniz residual over the basis.
    pub fn max_leibniz_residual<T: Scalar>(&self, alg: &LieAlgebra<T>) -> f64 {
        let a = alg.to_f64();
        self.matrices
            .iter()
            .map(|d| a.leibniz_residual(d))
            .fold(0.0, f64::max)
    }

    fn from_nullspace(n: usize, vectors: Vec<DVector<f64>>) -> Self {
        let matrices = vectors
            .into_iter()
            .map(|v| linalg::mat_of(v.as_slice(), n))
            .collect();
        Self {
            algebra_dim: n,
            matrices,
        }
    }
}

/// Rows of the linear system `D[e_i,e_j] - [De_i,e_j] - [e_i,De_j] = 0`
/// in the column-major unknowns of `D`.
pub fn leibniz_system(alg: &LieAlgebra<f64>) -> DMatrix<f64> {
    let n = alg.dim();
    let pairs = n * (n.saturating_sub(1)) / 2;
    let mut sys = DMatrix::zeros(pairs * n, n * n);
    let var = |r: usize, c: usize| c * n + r;
    let mut row = 0;
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..n {
                for m in 0..n {
                    let c = *alg.c(i, j, m);
                    if c != 0.0 {
                        sys[(row, var(k, m))] += c;
                    }
                    let c = *alg.c(m, j, k);
                    if c != 0.0 {
                        sys[(row, var(m, i))] -= c;
                    }
                    let c = *alg.c(i, m, k);
                    if c != 0.0 {
                        sys[(row, var(m, j))] -= c;
                    }
                }
                row += 1;
            }
        }
    }
    let scale = alg.structure_scale();
    if scale > 0.0 {
        sys /= scale;
    }
    sys
}

/// Rows of `g D + D^T g = 0`, scaled by the largest metric entry.
fn skew_system(g: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    let mut sys = DMatrix::zeros(n * (n + 1) / 2, n * n);
    let var = |r: usize, c: usize| c * n + r;
    let mut row = 0;
    for a in 0..n {
        for b in a..n {
            for m in 0..n {
                sys[(row, var(m, b))] += g[(a, m)];
                sys[(row, var(m, a))] += g[(m, b)];
            }
            row += 1;
        }
    }
    sys / g.amax().max(1e-300)
}

/// Rows of `D C - C D = 0`.
fn commuting_system(c: &DMatrix<f64>) -> DMatrix<f64> {
    let n = c.nrows();
    let mut sys = DMatrix::zeros(n * n, n * n);
    let var = |r: usize, col: usize| col * n + r;
    for r in 0..n {
        for col in 0..n {
            let row = var(r, col);
            for m in 0..n {
                // (DC)_{r,col} = D_{r m} C_{m col}
                sys[(row, var(r, m))] += c[(m, col)];
                // (CD)_{r,col} = C_{r m} D_{m col}
                sys[(row, var(m, col))] -= c[(r, m)];
            }
        }
    }
    sys / c.amax().max(1e-300)
}

fn stack(blocks: &[DMatrix<f64>], cols: usize) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(b);
        r += b.nrows();
    }
    out
}

pub fn derivation_basis<T: Scalar>(alg: &LieAlgebra<T>) -> DerivationBasis {
    let a = alg.to_f64();
    let n = a.dim();
    let sys = leibniz_system(&a);
    DerivationBasis::from_nullspace(n, linalg::nullspace(&sys, NULLSPACE_CUTOFF))
}

/// Derivations that are skew-symmetric for `metric`.
pub fn skew_derivations<T: Scalar>(
    alg: &LieAlgebra<T>,
    metric: &DMatrix<f64>,
) -> Result<DerivationBasis> {
    let a = alg.to_f64();
    let n = a.dim();
    if metric.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: metric.nrows(),
        });
    }
    linalg::check_metric(metric)?;
    let sys = stack(&[leibniz_system(&a), skew_system(metric)], n * n);
    Ok(DerivationBasis::from_nullspace(
        n,
        linalg::nullspace(&sys, NULLSPACE_CUTOFF),
    ))
}

/// Derivations commuting with every matrix in `commutants`.
pub fn commuting_derivations<T: Scalar>(
    alg: &LieAlgebra<T>,
    commutants: &[DMatrix<f64>],
) -> Result<DerivationBasis> {
    let a = alg.to_f64();
    let n = a.dim();
    let mut blocks = vec![leibniz_system(&a)];
    for c in commutants {
        if c.nrows() != n || c.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: c.nrows().max(c.ncols()),
            });
        }
        // commuting with c is commuting with its traceless part
        let shifted = c - DMatrix::identity(n, n) * (c.trace() / n as f64);
        if shifted.amax() > 1e-12 * c.amax() {
            blocks.push(commuting_system(&shifted));
        }
    }
    let sys = stack(&blocks, n * n);
    Ok(DerivationBasis::from_nullspace(
        n,
        linalg::nullspace(&sys, NULLSPACE_CUTOFF),
    ))
}

/// Solution of `trace(phi A) = trace(A)` for all derivations `A`.
#[derive(Clone, Debug)]
pub struct PreEinsteinDerivation {
    pub matrix: DMatrix<f64>,
    /// Ascending raw eigenvalues.
    pub eigenvalues: Vec<f64>,
    pub snapped: Vec<Snapped>,
    /// Max of `|trace(phi A_k) - trace(A_k)|` over the derivation basis.
    pub residual: f64,
    /// `|trace(phi^2) - trace(phi)|`.
    pub self_residual: f64,
    /// Whether the minimum-norm solution had to be replaced by its
    /// semisimple part.
    pub used_semisimple_part: bool,
}

impl PreEinsteinDerivation {
    /// Largest distance between a raw eigenvalue and its snapped rational.
    pub fn snap_error(&self) -> f64 {
        self.snapped.iter().map(|s| s.error).fold(0.0, f64::max)
    }

    /// Distinct snapped eigenvalues, ascending.
    pub fn distinct_eigenvalues(&self) -> Vec<Snapped> {
        let mut out: Vec<Snapped> = Vec::new();
        for s in &self.snapped {
            if !out.iter().any(|o| o.numer == s.numer && o.denom == s.denom) {
                out.push(s.clone());
            }
        }
        out
    }
}

fn pre_einstein_residuals(phi: &DMatrix<f64>, basis: &DerivationBasis) -> (f64, f64) {
    let residual = basis
        .matrices
        .iter()
        .map(|a| ((phi * a).trace() - a.trace()).abs())
        .fold(0.0, f64::max);
    let self_residual = ((phi * phi).trace() - phi.trace()).abs();
    (residual, self_residual)
}

pub fn pre_einstein<T: Scalar>(alg: &LieAlgebra<T>) -> Result<PreEinsteinDerivation> {
    let basis = derivation_basis(alg);
    pre_einstein_from_basis(&basis)
}

pub fn pre_einstein_from_basis(basis: &DerivationBasis) -> Result<PreEinsteinDerivation> {
    let n = basis.algebra_dim;
    let k = basis.dim();
    if k == 0 {
        return Err(Error::PreEinsteinNotFound { residual: f64::NAN });
    }
    let gram = DMatrix::from_fn(k, k, |a, b| (&basis.matrices[a] * &basis.matrices[b]).trace());
    let rhs = DVector::from_fn(k, |a, _| basis.matrices[a].trace());
    let coef = linalg::min_norm_solve(&gram, &rhs, 1e-12);
    let mut phi = DMatrix::zeros(n, n);
    for (c, a) in coef.iter().zip(&basis.matrices) {
        phi += a * *c;
    }

    let spectrum_tol = 1e-8 * phi.norm().max(1.0);
    let mut used_semisimple_part = false;
    if !linalg::is_semisimple(&phi) {
        let clusters = linalg::eigen_clusters(&phi, 1e-6 * phi.norm().max(1.0)).ok_or(
            Error::PreEinsteinNotFound {
                residual: f64::NAN,
            },
        )?;
        if clusters.iter().any(|(z, _)| z.im.abs() > 1e-6) {
            return Err(Error::PreEinsteinNotFound {
                residual: pre_einstein_residuals(&phi, basis).0,
            });
        }
        let distinct: Vec<f64> = clusters
            .iter()
            .map(|(z, _)| linalg::rationalize(z.re, MAX_DENOMINATOR).value())
            .collect();
        phi = linalg::semisimple_part(&phi, &distinct).ok_or(Error::PreEinsteinNotFound {
            residual: f64::NAN,
        })?;
        used_semisimple_part = true;
    }
    let (residual, self_residual) = pre_einstein_residuals(&phi, basis);
    if residual > 1e-8 || !linalg::is_semisimple(&phi) {
        return Err(Error::PreEinsteinNotFound { residual });
    }
    let eigenvalues = linalg::real_spectrum(&phi, spectrum_tol)
        .ok_or(Error::PreEinsteinNotFound { residual })?;
    let snapped = eigenvalues
        .iter()
        .map(|&v| linalg::rationalize(v, MAX_DENOMINATOR))
        .collect();
    Ok(PreEinsteinDerivation {
        matrix: phi,
        eigenvalues,
        snapped,
        residual,
        self_residual,
        used_semisimple_part,
    })
}
