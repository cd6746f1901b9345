//! Floating-point linear algebra helpers. Dense decompositions go through
//! LAPACK.

use nalgebra::{Complex, DMatrix, DVector};
use nalgebra_lapack as lapack;
use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, Result};

/// Full SVD `(U, sigma, V^T)` with `sigma` descending and of length
/// `min(rows, cols)`.
pub fn svd(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return (DMatrix::identity(r, r), Vec::new(), DMatrix::identity(c, c));
    }
    if let Some(d) = lapack::SVD::new(m.clone()) {
        return (d.u, d.singular_values.iter().copied().collect(), d.vt);
    }
    let d = m.clone().svd(true, true);
    let mut order: Vec<usize> = (0..d.singular_values.len()).collect();
    order.sort_by(|&a, &b| d.singular_values[b].total_cmp(&d.singular_values[a]));
    let u = d.u.expect("requested U");
    let vt = d.v_t.expect("requested V^T");
    let k = order.len();
    let u = DMatrix::from_fn(r, k, |i, j| u[(i, order[j])]);
    let vt = DMatrix::from_fn(k, c, |i, j| vt[(order[i], j)]);
    (u, order.iter().map(|&i| d.singular_values[i]).collect(), vt)
}

/// Orthonormal basis (as columns) of `{x : m x = 0}`, keeping singular
/// directions with `sigma <= rel_cutoff * sigma_max`.
pub fn nullspace(m: &DMatrix<f64>, rel_cutoff: f64) -> Vec<DVector<f64>> {
    let cols = m.ncols();
    if cols == 0 {
        return Vec::new();
    }
    let padded;
    let a = if m.nrows() < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        padded = p;
        &padded
    } else {
        m
    };
    // SVD of the small Gram-free factor: QR first keeps the tall case cheap.
    let r = if a.nrows() > 2 * cols {
        a.clone().qr().r()
    } else {
        a.clone()
    };
    let r = if r.nrows() < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (r.nrows(), cols)).copy_from(&r);
        p
    } else {
        r
    };
    let (_, sv, vt) = svd(&r);
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return (0..cols).map(|i| DVector::from_fn(cols, |j, _| (i == j) as u8 as f64)).collect();
    }
    let cut = rel_cutoff * smax;
    sv.iter()
        .enumerate()
        .filter(|(_, &s)| s <= cut)
        .map(|(i, _)| vt.row(i).transpose())
        .collect()
}

/// Singular values, descending.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    svd(m).1
}

pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

struct SymEig {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

/// Eigen-decomposition of a symmetric matrix with ascending eigenvalues.
pub fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let sym = (m + m.transpose()) * 0.5;
    let (eigenvalues, eigenvectors) = match lapack::SymmetricEigen::try_new(sym.clone()) {
        Some(e) => (e.eigenvalues, e.eigenvectors),
        None => {
            let e = sym.symmetric_eigen();
            (e.eigenvalues, e.eigenvectors)
        }
    };
    let eig = SymEig { eigenvalues, eigenvectors };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Checks symmetry and positive definiteness of a metric.
pub fn check_metric(g: &DMatrix<f64>) -> Result<()> {
    metric_eigen(g).map(|_| ())
}

fn metric_eigen(g: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if g.nrows() != g.ncols() {
        return Err(Error::DimensionMismatch {
            expected: g.nrows(),
            actual: g.ncols(),
        });
    }
    let scale = g.amax().max(1e-300);
    let asym = (g - g.transpose()).amax();
    if asym > 1e-10 * scale {
        return Err(Error::InvalidInput(format!(
            "metric is not symmetric (max asymmetry {asym:.3e})"
        )));
    }
    let (vals, vecs) = sym_eigen(g);
    let min = vals.first().copied().unwrap_or(0.0);
    if !(min > 0.0) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    Ok((vals, vecs))
}

/// `(g^{-1/2}, g^{1/2})` for a positive-definite `g`.
pub fn sym_inv_sqrt(g: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (vals, vecs) = metric_eigen(g)?;
    Ok((
        sym_function(&vals, &vecs, |v| 1.0 / v.sqrt()),
        sym_function(&vals, &vecs, f64::sqrt),
    ))
}

/// `exp(m)` for a symmetric `m`.
pub fn sym_exp(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen(m);
    sym_function(&vals, &vecs, f64::exp)
}

fn sym_function(vals: &[f64], vecs: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let mut scaled = vecs.clone();
    for (mut col, v) in scaled.column_iter_mut().zip(vals) {
        col *= f(*v);
    }
    scaled * vecs.transpose()
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn min_norm_solve(a: &DMatrix<f64>, b: &DVector<f64>, rel_cutoff: f64) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    if n == 0 || a.nrows() == 0 {
        return x;
    }
    let (u, sv, vt) = svd(a);
    let smax = sv.first().copied().unwrap_or(0.0);
    for (i, &s) in sv.iter().enumerate() {
        if s > rel_cutoff * smax {
            x += vt.row(i).transpose() * (u.column(i).dot(b) / s);
        }
    }
    x
}

/// Eigenvalues over C; `None` if the eigenvalue iteration fails.
pub fn complex_eigenvalues(m: &DMatrix<f64>) -> Option<Vec<Complex<f64>>> {
    if m.nrows() == 0 {
        return Some(Vec::new());
    }
    let e = lapack::Eigen::new(m.clone(), false, false)?;
    let values: Vec<Complex<f64>> = e
        .eigenvalues_re
        .iter()
        .zip(e.eigenvalues_im.iter())
        .map(|(&re, &im)| Complex::new(re, im))
        .collect();
    values.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(values)
}

/// Complex eigenvalues grouped into clusters of radius `tol`; `None` if the
/// eigenvalue iteration does not converge.
pub fn eigen_clusters(m: &DMatrix<f64>, tol: f64) -> Option<Vec<(Complex<f64>, usize)>> {
    let eig = complex_eigenvalues(m)?;
    let mut clusters: Vec<(Complex<f64>, usize)> = Vec::new();
    for z in eig.iter() {
        match clusters.iter_mut().find(|(c, _)| (c - z).norm() <= tol) {
            Some((c, k)) => {
                *c = (*c * (*k as f64) + z) / (*k as f64 + 1.0);
                *k += 1;
            }
            None => clusters.push((*z, 1)),
        }
    }
    Some(clusters)
}

/// Diagonalizable over C, judged by `rank(M - lambda I) = n - mult` on each
/// eigenvalue cluster (cluster radius `1e-8 * |M|`).
pub fn is_semisimple(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    let norm = m.norm();
    if n == 0 || norm == 0.0 {
        return true;
    }
    let Some(clusters) = eigen_clusters(m, 1e-8 * norm) else {
        return false;
    };
    for (lambda, mult) in clusters {
        // real form of M - lambda I; singular values come in pairs
        let real = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
            let (br, bc) = (r / n, c / n);
            let (i, j) = (r % n, c % n);
            let diag = if i == j { 1.0 } else { 0.0 };
            match (br, bc) {
                (0, 0) | (1, 1) => m[(i, j)] - lambda.re * diag,
                (0, 1) => lambda.im * diag,
                _ => -lambda.im * diag,
            }
        });
        let small = svd(&real).1.iter().filter(|&&s| s <= 1e-7 * norm).count();
        if small < 2 * mult {
            return false;
        }
    }
    true
}

/// Real parts of the eigenvalues if every imaginary part is below `tol`.
pub fn real_spectrum(m: &DMatrix<f64>, tol: f64) -> Option<Vec<f64>> {
    let eig = complex_eigenvalues(m)?;
    if eig.iter().any(|z| z.im.abs() > tol) {
        return None;
    }
    let mut v: Vec<f64> = eig.iter().map(|z| z.re).collect();
    v.sort_by(|a, b| a.total_cmp(b));
    Some(v)
}

/// Continued-fraction snap of a real number to a nearby rational.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapped {
    pub raw: f64,
    pub numer: i64,
    pub denom: i64,
    pub error: f64,
}

impl Snapped {
    pub fn value(&self) -> f64 {
        self.numer as f64 / self.denom as f64
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(BigInt::from(self.numer), BigInt::from(self.denom))
    }
}

/// Best convergent of `x` with denominator at most `max_den`.
pub fn rationalize(x: f64, max_den: i64) -> Snapped {
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut best = (x.round() as i64, 1i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i64;
        let (Some(h2), Some(k2)) = (
            a.checked_mul(h1).and_then(|v| v.checked_add(h0)),
            a.checked_mul(k1).and_then(|v| v.checked_add(k0)),
        ) else {
            break;
        };
        if k2 > max_den {
            break;
        }
        best = (h2, k2);
        if (h2 as f64 / k2 as f64 - x).abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
        let frac = r - a as f64;
        if frac.abs() < 1e-300 {
            break;
        }
        r = 1.0 / frac;
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
    }
    let (numer, denom) = best;
    Snapped {
        raw: x,
        numer,
        denom,
        error: (numer as f64 / denom as f64 - x).abs(),
    }
}

/// Semisimple part of `m` given its (distinct) eigenvalues, by Newton's
/// iteration on `p(x) = prod (x - lambda_i)`.
pub fn semisimple_part(m: &DMatrix<f64>, eigenvalues: &[f64]) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let mut s = m.clone();
    for _ in 0..8 {
        let mut p = id.clone();
        for &l in eigenvalues {
            p = p * (&s - &id * l);
        }
        if p.norm() <= 1e-13 * (1.0 + m.norm()).powi(eigenvalues.len() as i32) {
            return Some(s);
        }
        let mut dp = DMatrix::zeros(n, n);
        for skip in 0..eigenvalues.len() {
            let mut term = id.clone();
            for (i, &l) in eigenvalues.iter().enumerate() {
                if i != skip {
                    term = term * (&s - &id * l);
                }
            }
            dp += term;
        }
        let inv = dp.try_inverse()?;
        s -= p * inv;
    }
    Some(s)
}

pub fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

/// Flattened column-major copy, for stacking matrices as vectors.
pub fn vec_of(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn mat_of(v: &[f64], n: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(n, n, v)
}

/// Orthonormal basis of the span of the given vectors (SVD rank cutoff).
pub fn orthonormal_span(vectors: &[DVector<f64>], rel_cutoff: f64) -> Vec<DVector<f64>> {
    if vectors.is_empty() {
        return Vec::new();
    }
    let m = DMatrix::from_columns(vectors);
    let (u, sv, _) = svd(&m);
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Vec::new();
    }
    sv.iter()
        .enumerate()
        .filter(|(_, &s)| s > rel_cutoff * smax)
        .map(|(i, _)| u.column(i).into_owned())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rationalize_recovers_small_fractions() {
        let s = rationalize(2.0 / 3.0, 64);
        assert_eq!((s.numer, s.denom), (2, 3));
        let s = rationalize(-17.0 / 25.0 + 1e-12, 64);
        assert_eq!((s.numer, s.denom), (-17, 25));
        let s = rationalize(38.0 / 25.0, 64);
        assert_eq!((s.numer, s.denom), (38, 25));
        assert_eq!(rationalize(3.0, 64).denom, 1);
        assert!(rationalize(std::f64::consts::PI, 64).error > 1e-6);
    }

    #[test]
    fn jordan_block_is_not_semisimple() {
        let j = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(!is_semisimple(&j));
        let d = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert!(is_semisimple(&d));
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(is_semisimple(&rot));
        assert!(real_spectrum(&rot, 1e-9).is_none());
    }

    #[test]
    fn nullspace_of_wide_and_tall_systems() {
        let wide = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        assert_eq!(nullspace(&wide, 1e-10).len(), 2);
        let mut tall = DMatrix::zeros(40, 3);
        for r in 0..40 {
            tall[(r, 0)] = r as f64;
            tall[(r, 1)] = -(r as f64);
        }
        let ns = nullspace(&tall, 1e-10);
        assert_eq!(ns.len(), 2);
        for v in ns {
            assert!((&tall * v).norm() < 1e-10);
        }
    }

    #[test]
    fn inverse_square_root() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let (p, q) = sym_inv_sqrt(&g).unwrap();
        assert_relative_eq!(&p * &g * &p, DMatrix::identity(2, 2), epsilon = 1e-12);
        assert_relative_eq!(&q * &q, g, epsilon = 1e-12);
        assert!(sym_inv_sqrt(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).is_err());
    }

    #[test]
    fn semisimple_part_removes_nilpotent_block() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 5.0]);
        let s = semisimple_part(&m, &[2.0, 5.0]).unwrap();
        assert_relative_eq!(s, DMatrix::from_diagonal(&DVector::from_row_slice(&[2.0, 2.0, 5.0])), epsilon = 1e-10);
    }

    #[test]
    fn min_norm_picks_smallest_solution() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let x = min_norm_solve(&a, &DVector::from_row_slice(&[2.0]), 1e-12);
        assert_relative_eq!(x, DVector::from_row_slice(&[1.0, 1.0]), epsilon = 1e-12);
    }
}
