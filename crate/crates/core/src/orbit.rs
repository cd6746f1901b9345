//! Orbit data for the action of GL(n) on brackets.
//!
//! `A.mu(x, y) = A mu(A^{-1} x, A^{-1} y)`, with infinitesimal version
//! `X.mu(x, y) = X mu(x, y) - mu(X x, y) - mu(x, X y)`. For a torus acting
//! diagonally the entry `[e_i, e_j] = c e_k` has weight `x_k - x_i - x_j`,
//! and the torus orbit is closed iff 0 lies in the relative interior of the
//! convex hull of the weights of the nonzero entries.

use nalgebra::{DMatrix, DVector};
use num_traits::Zero;

use crate::derivations::PreEinsteinDerivation;
use crate::error::{Error, Result};
use crate::gauss;
use crate::lie::{BracketEntry, LieAlgebra};
use crate::linalg;
use crate::lp::{self, LpOutcome, StandardLp};
use crate::scalar::Scalar;
use crate::Rational;

/// Decision threshold for the interiority slack.
pub const SLACK_TOL: f64 = 1e-9;

/// `sl(n) ∩ z(phi) ∩ ker(X -> trace(X phi))`, in an eigenbasis of `phi`.
#[derive(Clone, Debug)]
pub struct GPhiData {
    pub basis: Vec<DMatrix<f64>>,
    /// Diagonal elements of `basis`, scaled to primitive integer vectors.
    pub torus_basis: Vec<DMatrix<f64>>,
    /// Columns are eigenvectors of `phi` in the original basis.
    pub eigenbasis: DMatrix<f64>,
    /// Snapped eigenvalue of each eigenbasis vector.
    pub eigenvalues: Vec<Rational>,
    /// The bracket rewritten in the eigenbasis.
    pub mu: LieAlgebra<f64>,
}

impl GPhiData {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn problem(&self) -> OrbitProblem {
        OrbitProblem {
            mu: self.mu.clone(),
            group_basis: self.basis.clone(),
        }
    }

    pub fn torus_problem(&self) -> OrbitProblem {
        OrbitProblem {
            mu: self.mu.clone(),
            group_basis: self.torus_basis.clone(),
        }
    }
}

fn is_diagonal(m: &DMatrix<f64>, tol: f64) -> bool {
    (0..m.nrows()).all(|r| (0..m.ncols()).all(|c| r == c || m[(r, c)].abs() <= tol))
}

/// Eigenvectors of a diagonalizable matrix with the given distinct real
/// eigenvalues, grouped by eigenvalue.
fn eigenvectors(m: &DMatrix<f64>, distinct: &[f64]) -> Result<(DMatrix<f64>, Vec<usize>)> {
    let n = m.nrows();
    let mut cols = Vec::new();
    let mut labels = Vec::new();
    for (idx, &l) in distinct.iter().enumerate() {
        let shifted = m - DMatrix::identity(n, n) * l;
        let scale = m.norm().max(1.0);
        let (_, sv, vt) = linalg::svd(&shifted);
        for (i, &s) in sv.iter().enumerate() {
            if s <= 1e-8 * scale {
                cols.push(vt.row(i).transpose());
                labels.push(idx);
            }
        }
    }
    if cols.len() != n {
        return Err(Error::InvalidInput(format!(
            "matrix is not diagonalizable over R ({} eigenvectors for dimension {n})",
            cols.len()
        )));
    }
    Ok((DMatrix::from_columns(&cols), labels))
}

fn primitive_integer(v: &[Rational]) -> Vec<Rational> {
    use num_integer::Integer;
    let mut lcm = num_bigint::BigInt::from(1);
    for x in v {
        lcm = lcm.lcm(x.denom());
    }
    let ints: Vec<num_bigint::BigInt> = v.iter().map(|x| (x * Rational::from_integer(lcm.clone())).to_integer()).collect();
    let g = ints.iter().fold(num_bigint::BigInt::zero(), |g, a| g.gcd(a));
    if g.is_zero() {
        return v.to_vec();
    }
    ints.into_iter().map(|a| Rational::from_integer(a / &g)).collect()
}

pub fn build_g_phi<T: Scalar>(n: &LieAlgebra<T>, phi: &PreEinsteinDerivation) -> Result<GPhiData> {
    let mu = n.to_f64();
    let dim = mu.dim();
    if phi.matrix.nrows() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: phi.matrix.nrows(),
        });
    }
    let distinct = phi.distinct_eigenvalues();
    let (q, eigenvalues): (DMatrix<f64>, Vec<Rational>) = if is_diagonal(&phi.matrix, 1e-12 * phi.matrix.norm().max(1.0)) {
        let vals: Vec<Rational> = (0..dim)
            .map(|i| linalg::rationalize(phi.matrix[(i, i)], crate::derivations::MAX_DENOMINATOR).to_rational())
            .collect();
        (DMatrix::identity(dim, dim), vals)
    } else {
        let values: Vec<f64> = distinct.iter().map(|s| s.value()).collect();
        let (q, labels) = eigenvectors(&phi.matrix, &values)?;
        let vals = labels.iter().map(|&l| distinct[l].to_rational()).collect();
        (q, vals)
    };
    let q_inv = q.clone().try_inverse().ok_or(Error::Singular {
        condition: f64::INFINITY,
    })?;
    let mu_eigen = act(&mu, &q_inv)?;

    let mut basis = Vec::new();
    for a in 0..dim {
        for b in 0..dim {
            if a != b && eigenvalues[a] == eigenvalues[b] {
                let mut e = DMatrix::zeros(dim, dim);
                e[(a, b)] = 1.0;
                basis.push(e);
            }
        }
    }
    // diagonal part: sum d = 0 and sum lambda d = 0, solved exactly
    let mut sys = DMatrix::from_element(2, dim, Rational::zero());
    for i in 0..dim {
        sys[(0, i)] = Rational::from_i64(1);
        sys[(1, i)] = eigenvalues[i].clone();
    }
    let mut torus_basis = Vec::new();
    for v in gauss::nullspace(&sys, 0.0) {
        let v = primitive_integer(&v);
        let d = DMatrix::from_diagonal(&DVector::from_iterator(dim, v.iter().map(|x| x.to_f64())));
        torus_basis.push(d.clone());
        basis.push(d);
    }
    Ok(GPhiData {
        basis,
        torus_basis,
        eigenbasis: q,
        eigenvalues,
        mu: mu_eigen,
    })
}

/// `A.mu(x, y) = A mu(A^{-1} x, A^{-1} y)`.
pub fn act<T: Scalar>(mu: &LieAlgebra<T>, a: &DMatrix<f64>) -> Result<LieAlgebra<f64>> {
    let n = mu.dim();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: a.nrows(),
        });
    }
    let sv = linalg::singular_values(a);
    let cond = sv[0] / sv[n - 1];
    if !(cond < 1e12) {
        return Err(Error::Singular { condition: cond });
    }
    let a_inv = a.clone().try_inverse().ok_or(Error::Singular { condition: cond })?;
    let mu = mu.to_f64();
    let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    // contract the output index with A, then both inputs with A^{-1}
    let mut t1 = vec![0.0; n * n * n];
    for e in mu.entries() {
        for k in 0..n {
            let v = a[(k, e.k)] * e.coeff;
            t1[idx(e.i, e.j, k)] += v;
            t1[idx(e.j, e.i, k)] -= v;
        }
    }
    let mut t2 = vec![0.0; n * n * n];
    for p in 0..n {
        for q in 0..n {
            for k in 0..n {
                let v = t1[idx(p, q, k)];
                if v == 0.0 {
                    continue;
                }
                for i in 0..n {
                    t2[idx(i, q, k)] += a_inv[(p, i)] * v;
                }
            }
        }
    }
    let mut entries = Vec::new();
    let mut t3 = vec![0.0; n];
    let scale = t2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..n {
        for j in i + 1..n {
            t3.iter_mut().for_each(|v| *v = 0.0);
            for q in 0..n {
                let w = a_inv[(q, j)];
                if w == 0.0 {
                    continue;
                }
                for k in 0..n {
                    t3[k] += t2[idx(i, q, k)] * w;
                }
            }
            for (k, &v) in t3.iter().enumerate() {
                if v.abs() > 1e-15 * scale {
                    entries.push(BracketEntry::new(i, j, k, v));
                }
            }
        }
    }
    let out = LieAlgebra::new(mu.names().to_vec(), entries)?;
    let report = out.validate();
    let s = out.structure_scale().max(1.0);
    if report.max_residual > 1e-9 * s * s {
        return Err(Error::InvalidInput(format!(
            "transformed bracket violates Jacobi (residual {:.3e})",
            report.max_residual
        )));
    }
    Ok(out)
}

/// `X.mu` as a vector over `(i < j, k)`.
pub fn lie_action<T: Scalar>(mu: &LieAlgebra<T>, x: &DMatrix<f64>) -> Vec<f64> {
    let mu = mu.to_f64();
    let n = mu.dim();
    let mut out = Vec::with_capacity(n * n * (n.saturating_sub(1)) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let br = mu.bracket_basis(i, j);
            let xi: Vec<f64> = x.column(i).iter().copied().collect();
            let xj: Vec<f64> = x.column(j).iter().copied().collect();
            let r1 = mu.bracket_unchecked(&xi, &crate::lie::unit_vec(n, j));
            let r2 = mu.bracket_unchecked(&crate::lie::unit_vec(n, i), &xj);
            for k in 0..n {
                let xm: f64 = (0..n).map(|m| x[(k, m)] * br[m]).sum();
                out.push(xm - r1[k] - r2[k]);
            }
        }
    }
    out
}

/// A bracket together with a Lie algebra of matrices acting on it.
#[derive(Clone, Debug)]
pub struct OrbitProblem {
    pub mu: LieAlgebra<f64>,
    pub group_basis: Vec<DMatrix<f64>>,
}

impl OrbitProblem {
    /// Largest relative distance of a commutator of basis elements from the
    /// span of the basis.
    pub fn closure_residual(&self) -> f64 {
        let vecs: Vec<DVector<f64>> = self.group_basis.iter().map(linalg::vec_of).collect();
        let span = linalg::orthonormal_span(&vecs, 1e-10);
        let mut worst: f64 = 0.0;
        for (a, x) in self.group_basis.iter().enumerate() {
            for y in &self.group_basis[a + 1..] {
                let c = linalg::vec_of(&linalg::commutator(x, y));
                let norm = c.norm();
                if norm == 0.0 {
                    continue;
                }
                let mut r = c.clone();
                for u in &span {
                    r -= u * u.dot(&c);
                }
                worst = worst.max(r.norm() / norm);
            }
        }
        worst
    }

    pub fn check(&self) -> Result<()> {
        let n = self.mu.dim();
        if let Some(bad) = self.group_basis.iter().find(|m| m.nrows() != n || m.ncols() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: bad.nrows(),
            });
        }
        let r = self.closure_residual();
        if r > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "group basis is not closed under commutators (residual {r:.3e})"
            )));
        }
        Ok(())
    }
}

/// `dim {X in span(group_basis) : X.mu = 0}`.
pub fn stabilizer_dimension(problem: &OrbitProblem) -> Result<usize> {
    problem.check()?;
    let g = &problem.group_basis;
    if g.is_empty() {
        return Ok(0);
    }
    let n = problem.mu.dim();
    let span = DMatrix::from_columns(&g.iter().map(linalg::vec_of).collect::<Vec<_>>());
    let span_rank = rank(&span);
    let rows = n * n * (n.saturating_sub(1)) / 2;
    if rows == 0 {
        return Ok(span_rank);
    }
    let image = DMatrix::from_fn(rows, g.len(), |_, _| 0.0);
    let mut image = image;
    for (c, x) in g.iter().enumerate() {
        for (r, v) in lie_action(&problem.mu, x).into_iter().enumerate() {
            image[(r, c)] = v;
        }
    }
    // rank of X -> X.mu restricted to the span, relative to |mu| |X|
    let scale = problem.mu.structure_scale().max(1e-300)
        * g.iter().map(|m| m.norm()).fold(0.0, f64::max);
    let image_rank = linalg::singular_values(&image)
        .iter()
        .filter(|&&s| s > 1e-10 * scale)
        .count();
    Ok(span_rank - image_rank.min(span_rank))
}

fn rank(m: &DMatrix<f64>) -> usize {
    let sv = linalg::singular_values(m);
    let smax = sv.first().copied().unwrap_or(0.0);
    sv.iter().filter(|&&s| s > 1e-10 * smax && s > 0.0).count()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Closed,
    NotClosed,
    /// `|slack| <= 1e-9`: on the relative boundary at tolerance.
    Undecided,
}

/// One-parameter subgroup `exp(tau X_w)` along which the orbit leaves
/// itself.
#[derive(Clone, Debug)]
pub struct Destabilizer {
    /// Coordinates of `w` in the torus basis.
    pub direction: Vec<f64>,
    /// Diagonal of `X_w`.
    pub diagonal: Vec<f64>,
    /// `<w, weight>` for every support entry; all `<= 0`, some `< 0`.
    pub pairings: Vec<f64>,
    /// Norm of the limit point (entries with zero pairing).
    pub limit_norm: f64,
    /// `(tau, |exp(tau X_w).mu - limit|)` along the verified flow.
    pub flow: Vec<(f64, f64)>,
    pub monotone: bool,
    pub verified: bool,
}

#[derive(Clone, Debug)]
pub struct TorusTestResult {
    pub verdict: Verdict,
    pub closed: bool,
    /// Support entries `(i, j, k)`, one per nonzero structure constant.
    pub entries: Vec<(usize, usize, usize)>,
    /// Weight of each support entry in torus-basis coordinates.
    pub weights: Vec<Vec<f64>>,
    /// `weights` as integers when every weight is integral.
    pub integer_weights: Option<Vec<Vec<i64>>>,
    /// Convex coefficients with `sum lambda w = 0`, when 0 is in the hull.
    pub membership: Option<Vec<f64>>,
    /// Optimal `s` in `max s : lambda_e >= s, sum lambda = 1, sum lambda w = 0`
    /// (`None` when 0 is not in the affine hull).
    pub interior_slack: Option<f64>,
    pub destabilizer: Option<Destabilizer>,
}

impl TorusTestResult {
    /// Distinct weights in first-seen order.
    pub fn weight_set(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for w in &self.weights {
            if !out.iter().any(|o| o.iter().zip(w).all(|(a, b)| (a - b).abs() < 1e-9)) {
                out.push(w.clone());
            }
        }
        out
    }
}

fn torus_diagonals(problem: &OrbitProblem) -> Result<Vec<Vec<f64>>> {
    let g = &problem.group_basis;
    for (a, x) in g.iter().enumerate() {
        let tol = 1e-10 * x.norm().max(1.0);
        if !is_diagonal(x, tol) {
            for y in &g[a + 1..] {
                if linalg::commutator(x, y).amax() > tol {
                    return Err(Error::NotATorus("basis elements do not commute".into()));
                }
            }
            if !linalg::is_semisimple(x) || linalg::real_spectrum(x, 1e-8 * x.norm()).is_none() {
                return Err(Error::NotATorus(
                    "basis element is not diagonalizable over R".into(),
                ));
            }
            return Err(Error::NotATorus(
                "basis must be diagonal; rewrite the bracket in a common eigenbasis".into(),
            ));
        }
    }
    Ok(g.iter().map(|x| x.diagonal().iter().copied().collect()).collect())
}

fn membership_lp(weights: &[Vec<f64>], r: usize) -> Option<Vec<f64>> {
    let m = weights.len();
    let mut a = vec![vec![1.0; m]];
    let mut b = vec![1.0];
    for d in 0..r {
        a.push(weights.iter().map(|w| w[d]).collect());
        b.push(0.0);
    }
    match lp::solve(&StandardLp {
        a,
        b,
        c: vec![0.0; m],
    }) {
        LpOutcome::Optimal { x, .. } => Some(x),
        _ => None,
    }
}

/// `max s` with `lambda_e = s + sigma_e`, `sigma >= 0`, `sum lambda = 1`,
/// `sum lambda w = 0`.
fn interior_lp(weights: &[Vec<f64>], r: usize) -> Option<f64> {
    let m = weights.len();
    // variables: sigma_1..sigma_m, s+, s-
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut row = vec![1.0; m];
    row.push(m as f64);
    row.push(-(m as f64));
    a.push(row);
    b.push(1.0);
    for d in 0..r {
        let total: f64 = weights.iter().map(|w| w[d]).sum();
        let mut row: Vec<f64> = weights.iter().map(|w| w[d]).collect();
        row.push(total);
        row.push(-total);
        a.push(row);
        b.push(0.0);
    }
    let mut c = vec![0.0; m];
    c.push(1.0);
    c.push(-1.0);
    match lp::solve(&StandardLp { a, b, c }) {
        LpOutcome::Optimal { value, .. } => Some(value),
        _ => None,
    }
}

/// Direction `w` (torus coordinates, box `|w_a| <= 1`) with every pairing
/// `<= 0` and at least one `< 0`.
fn destabilizing_direction(weights: &[Vec<f64>], r: usize) -> Option<Vec<f64>> {
    let mut bounds_a = Vec::new();
    let mut bounds_b = Vec::new();
    for d in 0..r {
        let mut up = vec![0.0; r];
        up[d] = 1.0;
        let mut down = vec![0.0; r];
        down[d] = -1.0;
        bounds_a.push(up);
        bounds_a.push(down);
        bounds_b.push(1.0);
        bounds_b.push(1.0);
    }
    // strict: max t with <w, weight> + t <= 0
    let mut a: Vec<Vec<f64>> = weights
        .iter()
        .map(|w| w.iter().copied().chain(std::iter::once(1.0)).collect())
        .collect();
    let mut b = vec![0.0; weights.len()];
    for (row, v) in bounds_a.iter().zip(&bounds_b) {
        a.push(row.iter().copied().chain(std::iter::once(0.0)).collect());
        b.push(*v);
    }
    a.push(vec![0.0; r].into_iter().chain(std::iter::once(1.0)).collect());
    b.push(1.0);
    let mut c = vec![0.0; r];
    c.push(1.0);
    if let LpOutcome::Optimal { x, value } = lp::solve_inequalities(&a, &b, &c) {
        if value > 1e-12 {
            return Some(x[..r].to_vec());
        }
    }
    // boundary case: max -sum <w, weight> with <w, weight> <= 0
    let mut a: Vec<Vec<f64>> = weights.to_vec();
    let mut b = vec![0.0; weights.len()];
    a.extend(bounds_a);
    b.extend(bounds_b);
    let c: Vec<f64> = (0..r).map(|d| -weights.iter().map(|w| w[d]).sum::<f64>()).collect();
    if let LpOutcome::Optimal { x, value } = lp::solve_inequalities(&a, &b, &c) {
        if value > 1e-12 {
            return Some(x);
        }
    }
    None
}

fn tensor_norm(mu: &LieAlgebra<f64>) -> f64 {
    mu.entries().iter().map(|e| e.coeff * e.coeff).sum::<f64>().sqrt()
}

fn distance(a: &LieAlgebra<f64>, b: &LieAlgebra<f64>) -> f64 {
    a.dense()
        .iter()
        .zip(b.dense())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
        / std::f64::consts::SQRT_2
}

/// Flows `mu` along `exp(tau X)` for diagonal `X` by repeated application
/// of `act`, until it is within `1e-6 |mu|` of `limit`.
fn verify_flow(
    mu: &LieAlgebra<f64>,
    diagonal: &[f64],
    limit: &LieAlgebra<f64>,
    slowest: f64,
) -> Result<(Vec<(f64, f64)>, bool, bool)> {
    let n = mu.dim();
    let target = 1e-6 * tensor_norm(mu);
    // 20 samples reaching a 1e-7 decay of the slowest destabilized entry
    let horizon = (1e7f64).ln() / slowest;
    let dt = horizon / 20.0;
    let step = DMatrix::from_diagonal(&DVector::from_iterator(n, diagonal.iter().map(|x| (x * dt).exp())));
    let mut current = mu.clone();
    let mut flow = vec![(0.0, distance(&current, limit))];
    let mut monotone = true;
    for s in 1..=200 {
        current = act(&current, &step)?;
        let d = distance(&current, limit);
        if d > flow.last().map(|p| p.1).unwrap_or(f64::INFINITY) * (1.0 + 1e-12) {
            monotone = false;
        }
        flow.push((s as f64 * dt, d));
        if d < target && s >= 20 {
            return Ok((flow, monotone, true));
        }
    }
    Ok((flow, monotone, false))
}

pub fn torus_closed(problem: &OrbitProblem) -> Result<TorusTestResult> {
    let diagonals = torus_diagonals(problem)?;
    let r = diagonals.len();
    let mu = &problem.mu;
    let tol = 1e-12 * mu.structure_scale().max(1e-300);
    let support: Vec<&BracketEntry<f64>> = mu.entries().iter().filter(|e| e.coeff.abs() > tol).collect();
    let entries: Vec<(usize, usize, usize)> = support.iter().map(|e| (e.i, e.j, e.k)).collect();
    let weights: Vec<Vec<f64>> = support
        .iter()
        .map(|e| diagonals.iter().map(|d| d[e.k] - d[e.i] - d[e.j]).collect())
        .collect();
    let integral = weights.iter().flatten().all(|w| (w - w.round()).abs() < 1e-9);
    let integer_weights = integral.then(|| {
        weights
            .iter()
            .map(|w| w.iter().map(|v| v.round() as i64).collect())
            .collect()
    });

    if support.is_empty() {
        return Ok(TorusTestResult {
            verdict: Verdict::Closed,
            closed: true,
            entries,
            weights,
            integer_weights,
            membership: None,
            interior_slack: None,
            destabilizer: None,
        });
    }

    let membership = membership_lp(&weights, r);
    let slack = interior_lp(&weights, r);
    let verdict = match slack {
        Some(s) if s > SLACK_TOL => Verdict::Closed,
        Some(s) if s >= -SLACK_TOL => Verdict::Undecided,
        _ => Verdict::NotClosed,
    };

    let destabilizer = if verdict == Verdict::NotClosed {
        match destabilizing_direction(&weights, r) {
            Some(w) => {
                let n = mu.dim();
                let diagonal: Vec<f64> = (0..n)
                    .map(|i| (0..r).map(|a| w[a] * diagonals[a][i]).sum())
                    .collect();
                let pairings: Vec<f64> = weights
                    .iter()
                    .map(|wt| wt.iter().zip(&w).map(|(a, b)| a * b).sum())
                    .collect();
                let zero_tol = 1e-9 * w.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
                let limit_entries = support
                    .iter()
                    .zip(&pairings)
                    .filter(|(_, p)| p.abs() <= zero_tol)
                    .map(|(e, _)| (*e).clone())
                    .collect();
                let limit = LieAlgebra::new(mu.names().to_vec(), limit_entries)?;
                let slowest = pairings
                    .iter()
                    .filter(|p| **p < -zero_tol)
                    .map(|p| -p)
                    .fold(f64::INFINITY, f64::min);
                let (flow, monotone, verified) = verify_flow(mu, &diagonal, &limit, slowest)?;
                Some(Destabilizer {
                    direction: w,
                    diagonal,
                    pairings,
                    limit_norm: tensor_norm(&limit),
                    flow,
                    monotone,
                    verified,
                })
            }
            None => None,
        }
    } else {
        None
    };

    Ok(TorusTestResult {
        closed: verdict == Verdict::Closed,
        verdict,
        entries,
        weights,
        integer_weights,
        membership,
        interior_slack: slack,
        destabilizer,
    })
}
