//! Ricci curvature of reductive homogeneous metrics.
//!
//! For `g = k + q` with an inner product on `q` and an orthonormal basis
//! `{X_i}` of `q`:
//!
//! ```text
//! <M X, Y> = -1/2 sum_i <[X,X_i]_q, [Y,X_i]_q> + 1/4 sum_ij <[X_i,X_j]_q, X><[X_i,X_j]_q, Y>
//! Rc(X, Y) = <M X, Y> - 1/2 B(X, Y) - 1/2 <[H,X]_q, Y> - 1/2 <X, [H,Y]_q>
//! ```
//!
//! where `B` is the Killing form of `g` and `<H, X> = trace(ad X)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lie::LieAlgebra;
use crate::linalg;
use crate::scalar::Scalar;

/// `g = k + q` by basis index sets, with an inner product on `q`.
#[derive(Clone, Debug)]
pub struct ReductiveSplit<T: Scalar = f64> {
    pub algebra: LieAlgebra<T>,
    pub k_indices: Vec<usize>,
    pub q_indices: Vec<usize>,
    /// Inner product on `q`, indexed like `q_indices`.
    pub metric: DMatrix<f64>,
}

impl<T: Scalar> ReductiveSplit<T> {
    /// Validated split. `k` must be a subalgebra with `[k, q] ⊆ q` and the
    /// metric must be `ad(k)`-invariant.
    pub fn new(
        algebra: LieAlgebra<T>,
        k_indices: Vec<usize>,
        q_indices: Vec<usize>,
        metric: DMatrix<f64>,
    ) -> Result<Self> {
        let n = algebra.dim();
        let mut seen = vec![false; n];
        for &i in k_indices.iter().chain(&q_indices) {
            if i >= n || seen[i] {
                return Err(Error::Precondition(
                    "k and q must partition the basis".into(),
                ));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) || q_indices.is_empty() {
            return Err(Error::Precondition(
                "k and q must partition the basis with q nonempty".into(),
            ));
        }
        if metric.nrows() != q_indices.len() || metric.ncols() != q_indices.len() {
            return Err(Error::DimensionMismatch {
                expected: q_indices.len(),
                actual: metric.nrows(),
            });
        }
        linalg::check_metric(&metric)?;
        let tol = algebra.float_tolerance();
        for &a in &k_indices {
            for &b in &k_indices {
                if q_indices.iter().any(|&c| !algebra.c(a, b, c).negligible(tol)) {
                    return Err(Error::Precondition("k is not a subalgebra".into()));
                }
            }
            for &b in &q_indices {
                if k_indices.iter().any(|&c| !algebra.c(a, b, c).negligible(tol)) {
                    return Err(Error::Precondition("[k, q] is not contained in q".into()));
                }
            }
            let ad = DMatrix::from_fn(q_indices.len(), q_indices.len(), |r, c| {
                algebra.c(a, q_indices[c], q_indices[r]).to_f64()
            });
            let defect = (&metric * &ad + ad.transpose() * &metric).amax();
            let scale = metric.amax() * ad.amax().max(1.0);
            if defect > 1e-10 * scale {
                return Err(Error::Precondition(format!(
                    "metric is not ad({})-invariant (defect {defect:.3e})",
                    algebra.names()[a]
                )));
            }
        }
        Ok(Self {
            algebra,
            k_indices,
            q_indices,
            metric,
        })
    }

    /// Split with `k = 0`.
    pub fn trivial(algebra: LieAlgebra<T>, metric: DMatrix<f64>) -> Result<Self> {
        let q = (0..algebra.dim()).collect();
        Self::new(algebra, Vec::new(), q, metric)
    }

    pub fn q_dim(&self) -> usize {
        self.q_indices.len()
    }
}

/// Bracket data of a split that does not depend on the metric.
#[derive(Clone, Debug)]
pub struct RicciEngine {
    m: usize,
    /// `[q_a, q_b]` projected to q: `tensor[(a*m + b)*m + c]`.
    tensor: Vec<f64>,
    killing_q: DMatrix<f64>,
    /// `trace(ad q_a)` on the full algebra.
    traces: DVector<f64>,
    unimodular: bool,
}

impl RicciEngine {
    pub fn new<T: Scalar>(split: &ReductiveSplit<T>) -> Self {
        let alg = split.algebra.to_f64();
        let q = &split.q_indices;
        let m = q.len();
        let mut tensor = vec![0.0; m * m * m];
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    tensor[(a * m + b) * m + c] = *alg.c(q[a], q[b], q[c]);
                }
            }
        }
        let killing = if alg.is_abelian() {
            DMatrix::zeros(alg.dim(), alg.dim())
        } else {
            alg.killing_form()
        };
        let killing_q = DMatrix::from_fn(m, m, |r, c| killing[(q[r], q[c])]);
        let traces = DVector::from_fn(m, |a, _| alg.ad_basis(q[a]).trace());
        let unimodular = (0..alg.dim()).all(|i| alg.ad_basis(i).trace() == 0.0);
        Self {
            m,
            tensor,
            killing_q,
            traces,
            unimodular,
        }
    }

    /// Engine for a nilpotent (or any unimodular, `k = 0`) algebra, skipping
    /// the Killing form when it is known to vanish.
    pub fn for_algebra<T: Scalar>(alg: &LieAlgebra<T>) -> Self {
        let a = alg.to_f64();
        let m = a.dim();
        let killing_q = if a.is_nilpotent() {
            DMatrix::zeros(m, m)
        } else {
            a.killing_form()
        };
        let traces = DVector::from_fn(m, |i, _| a.ad_basis(i).trace());
        let unimodular = traces.iter().all(|t| *t == 0.0);
        Self {
            m,
            tensor: a.dense().to_vec(),
            killing_q,
            traces,
            unimodular,
        }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// Structure constants of `q` in the orthonormal frame given by the
    /// columns of `p`, with `p_inv` its inverse.
    fn frame_tensor(&self, p: &DMatrix<f64>, p_inv: &DMatrix<f64>) -> Vec<f64> {
        let m = self.m;
        let idx = |a: usize, b: usize, c: usize| (a * m + b) * m + c;
        let mut t1 = vec![0.0; m * m * m];
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    let v = self.tensor[idx(a, b, c)];
                    if v == 0.0 {
                        continue;
                    }
                    for i in 0..m {
                        t1[idx(i, b, c)] += p[(a, i)] * v;
                    }
                }
            }
        }
        let mut t2 = vec![0.0; m * m * m];
        for i in 0..m {
            for b in 0..m {
                for c in 0..m {
                    let v = t1[idx(i, b, c)];
                    if v == 0.0 {
                        continue;
                    }
                    for j in 0..m {
                        t2[idx(i, j, c)] += p[(b, j)] * v;
                    }
                }
            }
        }
        let mut t3 = vec![0.0; m * m * m];
        for i in 0..m {
            for j in 0..m {
                for c in 0..m {
                    let v = t2[idx(i, j, c)];
                    if v == 0.0 {
                        continue;
                    }
                    for l in 0..m {
                        t3[idx(i, j, l)] += p_inv[(l, c)] * v;
                    }
                }
            }
        }
        t3
    }

    fn moment_onb(&self, t: &[f64]) -> DMatrix<f64> {
        let m = self.m;
        let idx = |a: usize, b: usize, c: usize| (a * m + b) * m + c;
        let mut out = DMatrix::zeros(m, m);
        for x in 0..m {
            for y in x..m {
                let mut s1 = 0.0;
                let mut s2 = 0.0;
                for i in 0..m {
                    for l in 0..m {
                        s1 += t[idx(x, i, l)] * t[idx(y, i, l)];
                        s2 += t[idx(i, l, x)] * t[idx(i, l, y)];
                    }
                }
                let v = -0.5 * s1 + 0.25 * s2;
                out[(x, y)] = v;
                out[(y, x)] = v;
            }
        }
        out
    }

    /// Full report for the inner product `metric` on `q`.
    pub fn evaluate(&self, metric: &DMatrix<f64>) -> Result<RicciReport> {
        let (p, p_inv) = linalg::sym_inv_sqrt(metric)?;
        let t = self.frame_tensor(&p, &p_inv);
        let moment_onb = self.moment_onb(&t);
        let mut rc = moment_onb.clone();
        if self.killing_q.amax() > 0.0 {
            rc -= p.transpose() * &self.killing_q * &p * 0.5;
        }
        let mut mean_curvature = DVector::zeros(self.m);
        if !self.unimodular {
            // coordinates of H in the orthonormal frame
            let h = p.transpose() * &self.traces;
            let m = self.m;
            let mut ad_h = DMatrix::zeros(m, m);
            for i in 0..m {
                if h[i] == 0.0 {
                    continue;
                }
                for x in 0..m {
                    for l in 0..m {
                        ad_h[(l, x)] += h[i] * t[(i * m + x) * m + l];
                    }
                }
            }
            rc -= (&ad_h + ad_h.transpose()) * 0.5;
            mean_curvature = &p * h;
        }
        Ok(RicciReport::from_frame(rc, moment_onb, p, p_inv, mean_curvature))
    }
}

/// Ricci curvature of a split, in the original basis of `q` and in the
/// orthonormal frame `p = metric^{-1/2}`.
#[derive(Clone, Debug)]
pub struct RicciReport {
    /// `metric^{-1} * ricci_tensor`.
    pub ricci_operator: DMatrix<f64>,
    pub ricci_tensor: DMatrix<f64>,
    /// Ricci operator in the orthonormal frame (symmetric).
    pub ricci_orthonormal: DMatrix<f64>,
    pub moment_orthonormal: DMatrix<f64>,
    /// Ascending eigenvalues of the Ricci operator.
    pub spectrum: Vec<f64>,
    /// `trace(Ric) / dim q`.
    pub einstein_constant: f64,
    /// `|Ric - c Id|_op / |c|`, absolute when `|c| < 1e-12`.
    pub deviation: f64,
    pub scalar_curvature: f64,
    /// Mean curvature vector in the original basis of `q`.
    pub mean_curvature: DVector<f64>,
    pub frame: DMatrix<f64>,
    pub frame_inverse: DMatrix<f64>,
}

impl RicciReport {
    fn from_frame(
        rc: DMatrix<f64>,
        moment: DMatrix<f64>,
        p: DMatrix<f64>,
        p_inv: DMatrix<f64>,
        mean_curvature: DVector<f64>,
    ) -> Self {
        let m = rc.nrows();
        let rc = (&rc + rc.transpose()) * 0.5;
        let (spectrum, _) = linalg::sym_eigen(&rc);
        let scalar = rc.trace();
        let c = scalar / m as f64;
        let spread = spectrum
            .iter()
            .map(|v| (v - c).abs())
            .fold(0.0, f64::max);
        let deviation = if c.abs() < 1e-12 { spread } else { spread / c.abs() };
        Self {
            ricci_operator: &p * &rc * &p_inv,
            ricci_tensor: &p_inv * &rc * &p_inv,
            ricci_orthonormal: rc,
            moment_orthonormal: moment,
            spectrum,
            einstein_constant: c,
            deviation,
            scalar_curvature: scalar,
            mean_curvature,
            frame: p,
            frame_inverse: p_inv,
        }
    }

    /// Block of the orthonormal-frame Ricci operator with rows `rows` and
    /// columns `cols` (positions in `q`).
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| {
            self.ricci_orthonormal[(rows[r], cols[c])]
        })
    }
}

/// `H` with `<H, X> = trace(ad X)` for `X` in `q`, in the basis of `q`.
pub fn mean_curvature_vector<T: Scalar>(split: &ReductiveSplit<T>) -> Result<DVector<f64>> {
    let engine = RicciEngine::new(split);
    let chol = split
        .metric
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite {
            min_eigenvalue: linalg::sym_eigen(&split.metric).0[0],
        })?;
    Ok(chol.solve(&engine.traces))
}

/// The operator `M` on `q`, in the original basis of `q`.
pub fn moment_operator<T: Scalar>(split: &ReductiveSplit<T>) -> Result<DMatrix<f64>> {
    let engine = RicciEngine::new(split);
    let (p, p_inv) = linalg::sym_inv_sqrt(&split.metric)?;
    let t = engine.frame_tensor(&p, &p_inv);
    Ok(&p * engine.moment_onb(&t) * &p_inv)
}

pub fn ricci_operator<T: Scalar>(split: &ReductiveSplit<T>) -> Result<RicciReport> {
    RicciEngine::new(split).evaluate(&split.metric)
}

/// Einstein with negative constant: `deviation < tol` and `c < 0`.
pub fn einstein_check(report: &RicciReport, tol: f64) -> bool {
    report.deviation < tol && report.einstein_constant < 0.0
}
