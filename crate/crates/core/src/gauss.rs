//! Gaussian elimination over any [`Scalar`] field.
//!
//! Exact for rationals; for floats, pivots below `tol` count as zero and the
//! largest-magnitude pivot is chosen in each column.

use nalgebra::DMatrix;

use crate::scalar::Scalar;

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref<T: Scalar>(m: &mut DMatrix<T>, tol: f64) -> Vec<usize> {
    let (rows, cols) = m.shape();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let mut best = None;
        let mut best_mag = 0.0;
        for i in r..rows {
            let v = &m[(i, c)];
            if v.negligible(tol) {
                continue;
            }
            let mag = v.to_f64().abs();
            if best.is_none() || (!T::EXACT && mag > best_mag) {
                best = Some(i);
                best_mag = mag;
                if T::EXACT {
                    break;
                }
            }
        }
        let Some(p) = best else { continue };
        m.swap_rows(p, r);
        let inv = T::one() / m[(r, c)].clone();
        for j in c..cols {
            let v = m[(r, j)].clone() * inv.clone();
            m[(r, j)] = v;
        }
        for i in 0..rows {
            if i == r || m[(i, c)].is_zero() {
                continue;
            }
            let f = m[(i, c)].clone();
            for j in c..cols {
                let v = m[(r, j)].clone() * f.clone();
                m[(i, j)] -= v;
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank<T: Scalar>(m: &DMatrix<T>, tol: f64) -> usize {
    let mut w = m.clone();
    rref(&mut w, tol).len()
}

/// Basis of the right nullspace `{x : m x = 0}`.
pub fn nullspace<T: Scalar>(m: &DMatrix<T>, tol: f64) -> Vec<Vec<T>> {
    let cols = m.ncols();
    let mut w = m.clone();
    let pivots = rref(&mut w, tol);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![T::zero(); cols];
            v[f] = T::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -w[(row, f)].clone();
            }
            v
        })
        .collect()
}

/// Inverse by Gauss-Jordan; `None` when a pivot vanishes.
pub fn inverse<T: Scalar>(m: &DMatrix<T>, tol: f64) -> Option<DMatrix<T>> {
    let n = m.nrows();
    if m.ncols() != n {
        return None;
    }
    let mut aug = DMatrix::<T>::zeros(n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            aug[(i, j)] = m[(i, j)].clone();
        }
        aug[(i, n + i)] = T::one();
    }
    let pivots = rref(&mut aug, tol);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return None;
    }
    Some(aug.view((0, n), (n, n)).into_owned())
}
