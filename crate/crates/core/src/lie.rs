//! Lie algebras given by structure constants over a chosen basis.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gauss;
use crate::linalg;
use crate::scalar::{max_abs, Scalar};

/// `[e_i, e_j] = coeff * e_k` with `i < j`.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketEntry<T> {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub coeff: T,
}

impl<T> BracketEntry<T> {
    pub fn new(i: usize, j: usize, k: usize, coeff: T) -> Self {
        Self { i, j, k, coeff }
    }
}

/// Finite-dimensional real Lie algebra.
///
/// Only entries with `i < j` are stored; the dense antisymmetric tensor is
/// kept alongside for evaluation.
#[derive(Clone, PartialEq)]
pub struct LieAlgebra<T: Scalar> {
    names: Vec<String>,
    entries: Vec<BracketEntry<T>>,
    tensor: Vec<T>,
}

impl<T: Scalar> fmt::Debug for LieAlgebra<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LieAlgebra")
            .field("names", &self.names)
            .field("entries", &self.entries)
            .finish()
    }
}

pub fn default_names(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("e{i}")).collect()
}

impl<T: Scalar> LieAlgebra<T> {
    /// Build from sparse entries. Indices must satisfy `i < j < dim` and
    /// `k < dim`; a repeated `(i, j, k)` triple is rejected.
    pub fn new(names: Vec<String>, entries: Vec<BracketEntry<T>>) -> Result<Self> {
        let dim = names.len();
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        let mut tensor = vec![T::zero(); dim * dim * dim];
        let mut seen = std::collections::HashSet::new();
        let mut kept = Vec::with_capacity(entries.len());
        for e in entries {
            let bad = |reason: &str| Error::MalformedEntry {
                i: e.i,
                j: e.j,
                k: e.k,
                dim,
                reason: reason.to_string(),
            };
            if e.i >= dim || e.j >= dim || e.k >= dim {
                return Err(bad("index out of range"));
            }
            if e.i >= e.j {
                return Err(bad("entries must have i < j"));
            }
            if !seen.insert((e.i, e.j, e.k)) {
                return Err(bad("duplicate entry"));
            }
            if e.coeff.is_zero() {
                continue;
            }
            tensor[(e.i * dim + e.j) * dim + e.k] = e.coeff.clone();
            tensor[(e.j * dim + e.i) * dim + e.k] = -e.coeff.clone();
            kept.push(e);
        }
        kept.sort_by_key(|e| (e.i, e.j, e.k));
        Ok(Self {
            names,
            entries: kept,
            tensor,
        })
    }

    /// Build from a dense tensor indexed `[(i * dim + j) * dim + k]`.
    /// Only the `i < j` half is read.
    pub fn from_dense(names: Vec<String>, dense: &[T]) -> Result<Self> {
        let dim = names.len();
        if dense.len() != dim * dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim * dim,
                actual: dense.len(),
            });
        }
        let mut entries = Vec::new();
        for i in 0..dim {
            for j in i + 1..dim {
                for k in 0..dim {
                    let c = &dense[(i * dim + j) * dim + k];
                    if !c.is_zero() {
                        entries.push(BracketEntry::new(i, j, k, c.clone()));
                    }
                }
            }
        }
        Self::new(names, entries)
    }

    pub fn abelian(dim: usize) -> Self {
        Self::new(default_names(dim), Vec::new()).expect("positive dimension")
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn entries(&self) -> &[BracketEntry<T>] {
        &self.entries
    }

    pub fn is_abelian(&self) -> bool {
        self.entries.is_empty()
    }

    /// Coefficient of `e_k` in `[e_i, e_j]`.
    pub fn c(&self, i: usize, j: usize, k: usize) -> &T {
        let n = self.dim();
        &self.tensor[(i * n + j) * n + k]
    }

    pub fn dense(&self) -> &[T] {
        &self.tensor
    }

    pub fn bracket_basis(&self, i: usize, j: usize) -> Vec<T> {
        let n = self.dim();
        self.tensor[(i * n + j) * n..(i * n + j + 1) * n].to_vec()
    }

    fn check_len(&self, v: &[T]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: v.len(),
            });
        }
        Ok(())
    }

    pub fn bracket(&self, x: &[T], y: &[T]) -> Result<Vec<T>> {
        self.check_len(x)?;
        self.check_len(y)?;
        Ok(self.bracket_unchecked(x, y))
    }

    pub(crate) fn bracket_unchecked(&self, x: &[T], y: &[T]) -> Vec<T> {
        let n = self.dim();
        let mut out = vec![T::zero(); n];
        for e in &self.entries {
            // x_i y_j - x_j y_i
            let w = x[e.i].clone() * y[e.j].clone() - x[e.j].clone() * y[e.i].clone();
            if w.is_zero() {
                continue;
            }
            out[e.k] += w * e.coeff.clone();
        }
        out
    }

    /// Matrix of `y -> [x, y]`.
    pub fn ad_matrix(&self, x: &[T]) -> Result<DMatrix<T>> {
        self.check_len(x)?;
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for e in &self.entries {
            // [x, e_j] gets x_i c_ij^k ; [x, e_i] gets -x_j c_ij^k
            if !x[e.i].is_zero() {
                m[(e.k, e.j)] += x[e.i].clone() * e.coeff.clone();
            }
            if !x[e.j].is_zero() {
                m[(e.k, e.i)] -= x[e.j].clone() * e.coeff.clone();
            }
        }
        Ok(m)
    }

    pub fn ad_basis(&self, i: usize) -> DMatrix<T> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |k, j| self.c(i, j, k).clone())
    }

    /// `B(x, y) = trace(ad x ad y)` on basis vectors.
    pub fn killing_form(&self) -> DMatrix<T> {
        let n = self.dim();
        let ads: Vec<DMatrix<T>> = (0..n).map(|i| self.ad_basis(i)).collect();
        let mut b = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = trace_product(&ads[i], &ads[j]);
                b[(i, j)] = v.clone();
                b[(j, i)] = v;
            }
        }
        b
    }

    /// Jacobi identity on every basis triple `i < j < k`.
    pub fn validate(&self) -> ValidationReport<T> {
        let n = self.dim();
        let tol = self.float_tolerance();
        let mut failures = Vec::new();
        let mut max_residual: f64 = 0.0;
        let mut checked = 0;
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    checked += 1;
                    let r = self.jacobi_residual(i, j, k);
                    let m = max_abs(r.iter().cloned());
                    max_residual = max_residual.max(m);
                    if !r.iter().all(|v| v.negligible(tol)) {
                        failures.push(JacobiFailure {
                            triple: (i, j, k),
                            residual: r,
                        });
                    }
                }
            }
        }
        ValidationReport {
            failures,
            max_residual,
            triples_checked: checked,
        }
    }

    /// `[[e_i,e_j],e_k] + [[e_j,e_k],e_i] + [[e_k,e_i],e_j]`.
    pub fn jacobi_residual(&self, i: usize, j: usize, k: usize) -> Vec<T> {
        let n = self.dim();
        let unit = |a: usize| {
            let mut v = vec![T::zero(); n];
            v[a] = T::one();
            v
        };
        let (ei, ej, ek) = (unit(i), unit(j), unit(k));
        let a = self.bracket_unchecked(&self.bracket_basis(i, j), &ek);
        let b = self.bracket_unchecked(&self.bracket_basis(j, k), &ei);
        let c = self.bracket_unchecked(&self.bracket_basis(k, i), &ej);
        a.into_iter()
            .zip(b)
            .zip(c)
            .map(|((a, b), c)| a + b + c)
            .collect()
    }

    /// Absolute tolerance used when `T` is not exact.
    pub(crate) fn float_tolerance(&self) -> f64 {
        let s = self.structure_scale();
        1e-9 * s.max(1.0).powi(2)
    }

    /// Largest absolute structure constant.
    pub fn structure_scale(&self) -> f64 {
        max_abs(self.entries.iter().map(|e| e.coeff.clone()))
    }

    /// Bracket in the coordinates `x' = a x`: `[x, y]' = a [a_inv x', a_inv y']`.
    /// Exact for exact scalars; `a_inv` must be the inverse of `a`.
    pub fn change_basis(&self, a: &DMatrix<T>, a_inv: &DMatrix<T>) -> Result<Self> {
        let n = self.dim();
        for m in [a, a_inv] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: m.nrows(),
                });
            }
        }
        let mut entries = Vec::new();
        let cols: Vec<Vec<T>> = (0..n).map(|j| a_inv.column(j).iter().cloned().collect()).collect();
        for i in 0..n {
            for j in i + 1..n {
                let br = mat_vec(a, &self.bracket_unchecked(&cols[i], &cols[j]));
                for (k, v) in br.into_iter().enumerate() {
                    if !v.is_zero() {
                        entries.push(BracketEntry::new(i, j, k, v));
                    }
                }
            }
        }
        LieAlgebra::new(self.names.clone(), entries)
    }

    /// Max over basis pairs of `|D[x,y] - [Dx,y] - [x,Dy]|`.
    pub fn leibniz_residual(&self, d: &DMatrix<T>) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        let cols: Vec<Vec<T>> = (0..n).map(|j| d.column(j).iter().cloned().collect()).collect();
        for i in 0..n {
            for j in i + 1..n {
                let br = self.bracket_basis(i, j);
                let lhs = mat_vec(d, &br);
                let unit_i = unit_vec::<T>(n, i);
                let unit_j = unit_vec::<T>(n, j);
                let r1 = self.bracket_unchecked(&cols[i], &unit_j);
                let r2 = self.bracket_unchecked(&unit_i, &cols[j]);
                for k in 0..n {
                    let v = lhs[k].clone() - r1[k].clone() - r2[k].clone();
                    worst = worst.max(v.to_f64().abs());
                }
            }
        }
        worst
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(&T) -> U) -> LieAlgebra<U> {
        let entries = self
            .entries
            .iter()
            .map(|e| BracketEntry::new(e.i, e.j, e.k, f(&e.coeff)))
            .collect();
        LieAlgebra::new(self.names.clone(), entries).expect("indices already validated")
    }

    pub fn to_f64(&self) -> LieAlgebra<f64> {
        self.map_scalar(|c| c.to_f64())
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: names.len(),
            });
        }
        self.names = names;
        Ok(self)
    }

    /// Span of the given basis vectors as a subalgebra, re-indexed in the
    /// given order. Fails if the span is not closed under the bracket.
    pub fn subalgebra(&self, indices: &[usize]) -> Result<LieAlgebra<T>> {
        let n = self.dim();
        let mut pos = vec![None; n];
        for (p, &i) in indices.iter().enumerate() {
            if i >= n {
                return Err(Error::InvalidInput(format!("index {i} out of range")));
            }
            pos[i] = Some(p);
        }
        let tol = self.float_tolerance();
        let mut entries = Vec::new();
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                if a >= b {
                    continue;
                }
                for k in 0..n {
                    let c = self.c(i, j, k);
                    if c.negligible(tol) {
                        continue;
                    }
                    let Some(p) = pos[k] else {
                        return Err(Error::InvalidInput(format!(
                            "span is not closed: [{}, {}] has a component along {}",
                            self.names[i], self.names[j], self.names[k]
                        )));
                    };
                    entries.push(BracketEntry::new(a, b, p, c.clone()));
                }
            }
        }
        let names = indices.iter().map(|&i| self.names[i].clone()).collect();
        LieAlgebra::new(names, entries)
    }

    /// Lower central series dimensions of the span of `indices`, taken inside
    /// the span itself; nilpotent iff the sequence reaches zero.
    pub fn is_nilpotent_on(&self, indices: &[usize]) -> bool {
        let n = self.dim();
        let tol = self.float_tolerance();
        let mut current: Vec<Vec<T>> = indices.iter().map(|&i| unit_vec(n, i)).collect();
        let mut last = gauss_rank(&current, n, tol);
        for _ in 0..=indices.len() {
            if last == 0 {
                return true;
            }
            let mut next = Vec::new();
            for &i in indices {
                for v in &current {
                    let w = self.bracket_unchecked(&unit_vec(n, i), v);
                    if w.iter().any(|c| !c.negligible(tol)) {
                        next.push(w);
                    }
                }
            }
            let basis = independent_rows(&next, n, tol);
            let r = basis.len();
            if r == last && r > 0 {
                return false;
            }
            current = basis;
            last = r;
        }
        last == 0
    }

    pub fn is_nilpotent(&self) -> bool {
        let all: Vec<usize> = (0..self.dim()).collect();
        self.is_nilpotent_on(&all)
    }
}

pub(crate) fn unit_vec<T: Scalar>(n: usize, i: usize) -> Vec<T> {
    let mut v = vec![T::zero(); n];
    v[i] = T::one();
    v
}

pub(crate) fn mat_vec<T: Scalar>(m: &DMatrix<T>, v: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); m.nrows()];
    for j in 0..m.ncols() {
        if v[j].is_zero() {
            continue;
        }
        for i in 0..m.nrows() {
            out[i] += m[(i, j)].clone() * v[j].clone();
        }
    }
    out
}

pub(crate) fn trace_product<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> T {
    let n = a.nrows();
    let mut s = T::zero();
    for i in 0..n {
        for k in 0..n {
            if a[(i, k)].is_zero() {
                continue;
            }
            s += a[(i, k)].clone() * b[(k, i)].clone();
        }
    }
    s
}

pub(crate) fn mat_mul<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let mut out = DMatrix::zeros(a.nrows(), b.ncols());
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            if a[(i, k)].is_zero() {
                continue;
            }
            for j in 0..b.ncols() {
                out[(i, j)] += a[(i, k)].clone() * b[(k, j)].clone();
            }
        }
    }
    out
}

fn rows_matrix<T: Scalar>(rows: &[Vec<T>], n: usize) -> DMatrix<T> {
    DMatrix::from_fn(rows.len(), n, |r, c| rows[r][c].clone())
}

fn gauss_rank<T: Scalar>(rows: &[Vec<T>], n: usize, tol: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    gauss::rank(&rows_matrix(rows, n), tol)
}

fn independent_rows<T: Scalar>(rows: &[Vec<T>], n: usize, tol: f64) -> Vec<Vec<T>> {
    if rows.is_empty() {
        return Vec::new();
    }
    let mut m = rows_matrix(rows, n);
    let pivots = gauss::rref(&mut m, tol);
    (0..pivots.len())
        .map(|r| m.row(r).iter().cloned().collect())
        .collect()
}

#[derive(Clone, Debug)]
pub struct JacobiFailure<T> {
    pub triple: (usize, usize, usize),
    pub residual: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct ValidationReport<T> {
    pub failures: Vec<JacobiFailure<T>>,
    pub max_residual: f64,
    pub triples_checked: usize,
}

impl<T> ValidationReport<T> {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Semidirect sum `outer ⋉ inner` with `[o_a, x] = action[a] x`.
///
/// Outer basis vectors come first in the result.
pub fn semidirect<T: Scalar>(
    action: &[DMatrix<T>],
    outer: &LieAlgebra<T>,
    inner: &LieAlgebra<T>,
) -> Result<LieAlgebra<T>> {
    let (m, n) = (outer.dim(), inner.dim());
    if action.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: action.len(),
        });
    }
    for d in action {
        if d.nrows() != n || d.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: d.nrows().max(d.ncols()),
            });
        }
    }
    let scale = inner.structure_scale().max(1.0)
        * action
            .iter()
            .map(|d| max_abs(d.iter().cloned()))
            .fold(1.0, f64::max);
    let tol = if T::EXACT { 0.0 } else { 1e-12 * scale };
    for (idx, d) in action.iter().enumerate() {
        let r = inner.leibniz_residual(d);
        if r > tol {
            return Err(Error::NotADerivation {
                index: idx,
                residual: r,
            });
        }
    }
    // [rho(a), rho(b)] = rho([a, b])
    let mut hom: f64 = 0.0;
    for a in 0..m {
        for b in a + 1..m {
            let comm = mat_mul(&action[a], &action[b]) - mat_mul(&action[b], &action[a]);
            let mut rhs = DMatrix::zeros(n, n);
            for k in 0..m {
                let c = outer.c(a, b, k);
                if !c.is_zero() {
                    rhs += action[k].map(|v| v * c.clone());
                }
            }
            hom = hom.max(max_abs((comm - rhs).iter().cloned()));
        }
    }
    let hom_tol = if T::EXACT {
        0.0
    } else {
        1e-12 * scale.max(outer.structure_scale()).powi(2)
    };
    if hom > hom_tol {
        return Err(Error::NotAHomomorphism { residual: hom });
    }

    let mut entries = Vec::new();
    for e in outer.entries() {
        entries.push(BracketEntry::new(e.i, e.j, e.k, e.coeff.clone()));
    }
    for (a, d) in action.iter().enumerate() {
        for j in 0..n {
            for k in 0..n {
                let v = &d[(k, j)];
                if !v.is_zero() {
                    entries.push(BracketEntry::new(a, m + j, m + k, v.clone()));
                }
            }
        }
    }
    for e in inner.entries() {
        entries.push(BracketEntry::new(m + e.i, m + e.j, m + e.k, e.coeff.clone()));
    }
    let names = outer
        .names()
        .iter()
        .chain(inner.names().iter())
        .cloned()
        .collect();
    LieAlgebra::new(names, entries)
}

/// `s = a + n` split of a solvable algebra by basis index sets.
#[derive(Clone, Debug)]
pub struct SolvableDecomposition<T: Scalar> {
    pub algebra: LieAlgebra<T>,
    pub a_indices: Vec<usize>,
    pub n_indices: Vec<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct StandardDecompositionReport {
    pub partition: bool,
    pub n_is_ideal: bool,
    pub n_is_nilpotent: bool,
    pub derived_in_n: bool,
    pub a_is_abelian: bool,
    /// Indices (into `a_indices`) whose `ad|_n` failed the semisimplicity test.
    pub non_semisimple: Vec<usize>,
    pub failed: Vec<String>,
}

impl StandardDecompositionReport {
    pub fn passed(&self) -> bool {
        self.failed.is_empty()
    }
}

pub fn check_standard_decomposition<T: Scalar>(
    dec: &SolvableDecomposition<T>,
) -> StandardDecompositionReport {
    let alg = &dec.algebra;
    let n = alg.dim();
    let mut report = StandardDecompositionReport::default();

    let mut seen = vec![0u8; n];
    let mut in_range = true;
    for &i in dec.a_indices.iter().chain(dec.n_indices.iter()) {
        if i >= n {
            in_range = false;
        } else {
            seen[i] += 1;
        }
    }
    report.partition = in_range && seen.iter().all(|&c| c == 1);
    if !report.partition {
        report.failed.push("a and n do not partition the basis".into());
        return report;
    }

    let tol = alg.float_tolerance();
    let a_component_zero = |i: usize, j: usize| {
        dec.a_indices
            .iter()
            .all(|&k| alg.c(i, j, k).negligible(tol))
    };

    report.derived_in_n = (0..n).all(|i| (0..n).all(|j| a_component_zero(i, j)));
    report.n_is_ideal = (0..n).all(|i| dec.n_indices.iter().all(|&j| a_component_zero(i, j)));
    report.a_is_abelian = dec.a_indices.iter().all(|&i| {
        dec.a_indices
            .iter()
            .all(|&j| (0..n).all(|k| alg.c(i, j, k).negligible(tol)))
    });
    report.n_is_nilpotent = report.n_is_ideal && alg.is_nilpotent_on(&dec.n_indices);

    for (pos, &a) in dec.a_indices.iter().enumerate() {
        let ad = alg.ad_basis(a).map(|v| v.to_f64());
        let restricted = DMatrix::from_fn(dec.n_indices.len(), dec.n_indices.len(), |r, c| {
            ad[(dec.n_indices[r], dec.n_indices[c])]
        });
        if !linalg::is_semisimple(&restricted) {
            report.non_semisimple.push(pos);
        }
    }

    if !report.n_is_ideal {
        report.failed.push("n is not an ideal".into());
    }
    if !report.n_is_nilpotent {
        report.failed.push("n is not nilpotent".into());
    }
    if !report.derived_in_n {
        report.failed.push("[s, s] is not contained in n".into());
    }
    if !report.a_is_abelian {
        report.failed.push("a is not abelian".into());
    }
    if !report.non_semisimple.is_empty() {
        report
            .failed
            .push(format!("ad(A)|n not semisimple for a-basis positions {:?}", report.non_semisimple));
    }
    report
}
