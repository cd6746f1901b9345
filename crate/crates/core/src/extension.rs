//! Einstein extensions and standard modifications.

use nalgebra::{DMatrix, DVector};

use crate::curvature::{ricci_operator, ReductiveSplit, RicciReport};
use crate::derivations::skew_derivations;
use crate::error::{Error, Result};
use crate::lie::{check_standard_decomposition, semidirect, BracketEntry, LieAlgebra, SolvableDecomposition};
use crate::linalg;
use crate::scalar::Scalar;
use crate::soliton::nilsoliton_residual;

/// Einstein tolerance for assembled metrics.
pub const CONSTRUCTION_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct ExtensionResult {
    pub assembled: ReductiveSplit<f64>,
    pub betas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub einstein_constant: f64,
    pub deviation: f64,
    pub ricci: RicciReport,
    /// Positions in `q` of each block, in order (`a` or `p_1,i` blocks first).
    pub blocks: Vec<(String, Vec<usize>)>,
}

fn failure(report: &RicciReport) -> Error {
    Error::ConstructionFailure {
        deviation: report.deviation,
        spectrum: report.spectrum.clone(),
    }
}

fn rel_amax(m: &DMatrix<f64>, scale: f64) -> f64 {
    m.amax() / scale.max(1e-300)
}

/// `g`-symmetric part of `d`: `(d + g^{-1} d^T g) / 2`.
pub fn symmetric_part(d: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let g_inv = g
        .clone()
        .try_inverse()
        .ok_or(Error::Singular { condition: f64::INFINITY })?;
    Ok((d + g_inv * d.transpose() * g) * 0.5)
}

/// How the metric on `a` is built from the symmetric parts `S_A`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AbelianMetricRule {
    /// `<A, A'> = trace(S_A S_A') / |c|`.
    #[default]
    TraceOfProduct,
    /// `<A, A'> = trace(S_A) trace(S_A') / |c|`.
    ProductOfTraces,
}

/// A nilsoliton with an abelian family of symmetric derivations.
#[derive(Clone, Debug)]
pub struct AbelianExtensionSpec {
    pub n: LieAlgebra<f64>,
    pub metric: DMatrix<f64>,
    pub c: f64,
    pub a_derivations: Vec<DMatrix<f64>>,
}

impl AbelianExtensionSpec {
    /// Takes `c` from the nilsoliton fit of `metric`.
    pub fn from_nilsoliton<T: Scalar>(
        n: &LieAlgebra<T>,
        metric: DMatrix<f64>,
        a_derivations: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let fit = nilsoliton_residual(n, &metric)?;
        Ok(Self {
            n: n.to_f64(),
            metric,
            c: fit.c,
            a_derivations,
        })
    }

    pub fn check(&self) -> Result<()> {
        if !(self.c < 0.0) {
            return Err(Error::Precondition(format!(
                "nilsoliton constant must be negative, got {}",
                self.c
            )));
        }
        if self.a_derivations.is_empty() {
            return Err(Error::Precondition("a must be nonzero".into()));
        }
        let fit = nilsoliton_residual(&self.n, &self.metric)?;
        if fit.residual > 1e-8 {
            return Err(Error::Precondition(format!(
                "metric is not a nilsoliton (residual {:.3e})",
                fit.residual
            )));
        }
        let scale = self.a_derivations.iter().map(|d| d.amax()).fold(0.0, f64::max);
        for (i, a) in self.a_derivations.iter().enumerate() {
            let sym = &self.metric * a - a.transpose() * &self.metric;
            if rel_amax(&sym, scale * self.metric.amax()) > 1e-10 {
                return Err(Error::Precondition(format!(
                    "derivation {i} is not symmetric for the metric"
                )));
            }
            for b in &self.a_derivations[i + 1..] {
                if rel_amax(&linalg::commutator(a, b), scale * scale) > 1e-10 {
                    return Err(Error::Precondition("derivations do not commute".into()));
                }
            }
        }
        // fitted Einstein derivation must lie in span(a)
        let span = linalg::orthonormal_span(
            &self.a_derivations.iter().map(linalg::vec_of).collect::<Vec<_>>(),
            1e-10,
        );
        let d = linalg::vec_of(&fit.derivation);
        let mut r = d.clone();
        for u in &span {
            r -= u * u.dot(&d);
        }
        if r.norm() > 1e-9 * d.norm().max(1e-300) {
            return Err(Error::Precondition(
                "Einstein derivation is not in the span of a".into(),
            ));
        }
        Ok(())
    }
}

pub fn extend_abelian(spec: &AbelianExtensionSpec, rule: AbelianMetricRule) -> Result<ExtensionResult> {
    spec.check()?;
    let k = spec.a_derivations.len();
    let n = spec.n.dim();
    let kappa = 1.0 / spec.c.abs();
    let sym: Vec<DMatrix<f64>> = spec
        .a_derivations
        .iter()
        .map(|d| symmetric_part(d, &spec.metric))
        .collect::<Result<_>>()?;
    let a_metric = DMatrix::from_fn(k, k, |i, j| match rule {
        AbelianMetricRule::TraceOfProduct => kappa * (&sym[i] * &sym[j]).trace(),
        AbelianMetricRule::ProductOfTraces => kappa * sym[i].trace() * sym[j].trace(),
    });
    let names = (1..=k).map(|i| if k == 1 { "A".to_string() } else { format!("A{i}") }).collect();
    let outer = LieAlgebra::new(names, Vec::new())?;
    let s = semidirect(&spec.a_derivations, &outer, &spec.n)?;
    let mut g = DMatrix::zeros(k + n, k + n);
    g.view_mut((0, 0), (k, k)).copy_from(&a_metric);
    g.view_mut((k, k), (n, n)).copy_from(&spec.metric);
    let split = ReductiveSplit::trivial(s, g)?;
    let ricci = ricci_operator(&split)?;
    if ricci.deviation > CONSTRUCTION_TOL {
        return Err(failure(&ricci));
    }
    Ok(ExtensionResult {
        assembled: split,
        betas: Vec::new(),
        alphas: Vec::new(),
        einstein_constant: ricci.einstein_constant,
        deviation: ricci.deviation,
        blocks: vec![("a".into(), (0..k).collect()), ("n".into(), (k..k + n).collect())],
        ricci,
    })
}

/// Constant in front of the Killing form on each `p_1,i`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AlphaRule {
    /// `alpha_i = (-1/2 - beta_i) / c`: the symmetric factor with metric
    /// `alpha B` has Ricci operator `-1 / (2 alpha)`.
    #[default]
    KillingNormalized,
    /// `alpha_i = (-1 - beta_i) / c`.
    Unhalved,
}

impl AlphaRule {
    pub fn alpha(self, beta: f64, c: f64) -> f64 {
        match self {
            AlphaRule::KillingNormalized => (-0.5 - beta) / c,
            AlphaRule::Unhalved => (-1.0 - beta) / c,
        }
    }
}

/// Semisimple `g1` acting on an Einstein solvable `s2` by `rho`.
#[derive(Clone, Debug)]
pub struct SemisimpleExtensionSpec {
    pub g1: LieAlgebra<f64>,
    pub k1: Vec<usize>,
    pub p1: Vec<usize>,
    /// Basis indices of each simple ideal of `g1`.
    pub ideals: Vec<Vec<usize>>,
    pub s2: SolvableDecomposition<f64>,
    pub g2: DMatrix<f64>,
    pub c: f64,
    /// `rho(X)` for each basis vector `X` of `g1`, acting on `s2`.
    pub rho: Vec<DMatrix<f64>>,
}

impl SemisimpleExtensionSpec {
    pub fn check(&self) -> Result<()> {
        let n1 = self.g1.dim();
        let n2 = self.s2.algebra.dim();
        if self.rho.len() != n1 {
            return Err(Error::DimensionMismatch {
                expected: n1,
                actual: self.rho.len(),
            });
        }
        let mut seen = vec![0; n1];
        for &i in self.k1.iter().chain(&self.p1) {
            if i >= n1 {
                return Err(Error::Precondition("k1/p1 index out of range".into()));
            }
            seen[i] += 1;
        }
        if seen.iter().any(|&s| s != 1) {
            return Err(Error::Precondition("k1 and p1 must partition g1".into()));
        }
        let mut seen = vec![0; n1];
        for &i in self.ideals.iter().flatten() {
            if i >= n1 {
                return Err(Error::Precondition("ideal index out of range".into()));
            }
            seen[i] += 1;
        }
        if seen.iter().any(|&s| s != 1) {
            return Err(Error::Precondition("ideals must partition g1".into()));
        }
        if !(self.c < 0.0) {
            return Err(Error::Precondition(format!(
                "Einstein constant must be negative, got {}",
                self.c
            )));
        }
        if self.g2.nrows() != n2 {
            return Err(Error::DimensionMismatch {
                expected: n2,
                actual: self.g2.nrows(),
            });
        }
        let dec = check_standard_decomposition(&self.s2);
        if !dec.passed() {
            return Err(Error::Precondition(format!(
                "s2 decomposition: {}",
                dec.failed.join("; ")
            )));
        }
        let scale = self.rho.iter().map(|r| r.amax()).fold(1.0, f64::max) * self.g2.amax();
        for (i, r) in self.rho.iter().enumerate() {
            let name = &self.g1.names()[i];
            let sym = &self.g2 * r - r.transpose() * &self.g2;
            let skew = &self.g2 * r + r.transpose() * &self.g2;
            if self.p1.contains(&i) && rel_amax(&sym, scale) > 1e-9 {
                return Err(Error::Precondition(format!("rho({name}) is not symmetric")));
            }
            if self.k1.contains(&i) && rel_amax(&skew, scale) > 1e-9 {
                return Err(Error::Precondition(format!("rho({name}) is not skew-symmetric")));
            }
            for &a in &self.s2.a_indices {
                if r.column(a).amax() > 1e-10 * scale {
                    return Err(Error::Precondition(format!(
                        "rho({name}) does not annihilate a2"
                    )));
                }
            }
        }
        let ricci = ricci_operator(&ReductiveSplit::trivial(self.s2.algebra.clone(), self.g2.clone())?)?;
        if ricci.deviation > CONSTRUCTION_TOL
            || (ricci.einstein_constant - self.c).abs() > 1e-8 * self.c.abs()
        {
            return Err(Error::Precondition(format!(
                "s2 metric is not Einstein with constant {} (deviation {:.3e}, constant {})",
                self.c, ricci.deviation, ricci.einstein_constant
            )));
        }
        Ok(())
    }
}

/// `beta` with `T ≈ beta B` on one `p_1,i` block, and the relative misfit.
pub fn beta_ratio(t: &DMatrix<f64>, b: &DMatrix<f64>) -> (f64, f64) {
    let bb = b.dot(b);
    if bb == 0.0 {
        return (0.0, t.norm());
    }
    let beta = t.dot(b) / bb;
    (beta, (t - b * beta).norm() / bb.sqrt())
}

pub fn extend_semisimple(spec: &SemisimpleExtensionSpec, rule: AlphaRule) -> Result<ExtensionResult> {
    spec.check()?;
    let n1 = spec.g1.dim();
    let n2 = spec.s2.algebra.dim();
    let killing = spec.g1.killing_form();

    let mut betas = Vec::new();
    let mut alphas = Vec::new();
    let mut p_blocks = Vec::new();
    for (i, ideal) in spec.ideals.iter().enumerate() {
        let p: Vec<usize> = ideal.iter().copied().filter(|x| spec.p1.contains(x)).collect();
        let t = DMatrix::from_fn(p.len(), p.len(), |r, c| (&spec.rho[p[r]] * &spec.rho[p[c]]).trace());
        let b = DMatrix::from_fn(p.len(), p.len(), |r, c| killing[(p[r], p[c])]);
        let (beta, misfit) = beta_ratio(&t, &b);
        if misfit > 1e-8 {
            return Err(Error::BetaFit {
                ideal: i,
                residual: misfit,
            });
        }
        betas.push(beta);
        alphas.push(rule.alpha(beta, spec.c));
        p_blocks.push(p);
    }

    let g = semidirect(&spec.rho, &spec.g1, &spec.s2.algebra)?;
    // q = p1 (ideal by ideal), then s2
    let mut q: Vec<usize> = p_blocks.iter().flatten().copied().collect();
    let np = q.len();
    q.extend(n1..n1 + n2);
    let mut metric = DMatrix::zeros(np + n2, np + n2);
    let mut blocks = Vec::new();
    let mut offset = 0;
    for (i, p) in p_blocks.iter().enumerate() {
        for (r, &a) in p.iter().enumerate() {
            for (c, &b) in p.iter().enumerate() {
                metric[(offset + r, offset + c)] = alphas[i] * killing[(a, b)];
            }
        }
        blocks.push((format!("p1.{i}"), (offset..offset + p.len()).collect()));
        offset += p.len();
    }
    metric.view_mut((np, np), (n2, n2)).copy_from(&spec.g2);
    blocks.push(("s2".into(), (np..np + n2).collect()));

    let split = ReductiveSplit::new(g, spec.k1.clone(), q, metric)?;
    let ricci = ricci_operator(&split)?;
    if ricci.deviation > CONSTRUCTION_TOL {
        return Err(failure(&ricci));
    }
    Ok(ExtensionResult {
        assembled: split,
        betas,
        alphas,
        einstein_constant: ricci.einstein_constant,
        deviation: ricci.deviation,
        ricci,
        blocks,
    })
}

/// One step of the standard modification of a metric solvable algebra.
#[derive(Clone, Debug)]
pub struct StandardModification {
    /// `r'` in the basis `w_i = r_i + d_i`.
    pub algebra: LieAlgebra<f64>,
    pub skew_dim: usize,
    /// Column `i` holds the coordinates of `d_i` in the skew-derivation basis.
    pub correction: DMatrix<f64>,
    /// Largest change of a structure constant relative to the input.
    pub max_change: f64,
    /// `r' = r` at tolerance `1e-10`.
    pub unchanged: bool,
    /// Defect of `r'` as a subalgebra of `Der_skew ⋉ r`.
    pub closure_residual: f64,
}

/// Killing-orthogonal complement of `Der_skew(r, metric)` in
/// `Der_skew ⋉ r`, with its induced bracket.
pub fn standard_modification<T: Scalar>(r: &LieAlgebra<T>, metric: &DMatrix<f64>) -> Result<StandardModification> {
    let r = r.to_f64();
    let n = r.dim();
    let skew = skew_derivations(&r, metric)?;
    let s = skew.dim();
    if s == 0 {
        return Ok(StandardModification {
            algebra: r,
            skew_dim: 0,
            correction: DMatrix::zeros(0, n),
            max_change: 0.0,
            unchanged: true,
            closure_residual: 0.0,
        });
    }
    let ds = &skew.matrices;
    // brackets of the (Frobenius-orthonormal) skew basis
    let mut outer_entries = Vec::new();
    for a in 0..s {
        for b in a + 1..s {
            let comm = linalg::commutator(&ds[a], &ds[b]);
            for (k, d) in ds.iter().enumerate() {
                let c = comm.dot(d);
                if c.abs() > 1e-13 {
                    outer_entries.push(BracketEntry::new(a, b, k, c));
                }
            }
        }
    }
    let outer_names = (1..=s).map(|i| format!("D{i}")).collect();
    let outer = LieAlgebra::new(outer_names, outer_entries)?;
    let m = semidirect(ds, &outer, &r)?;
    let b = m.killing_form();
    let b_dd = b.view((0, 0), (s, s)).into_owned();
    let b_dr = b.view((0, s), (s, n)).into_owned();
    let svals = linalg::singular_values(&b_dd);
    let smax = svals.first().copied().unwrap_or(0.0);
    let defect = svals.iter().filter(|&&v| v <= 1e-10 * smax.max(1e-300)).count();
    if defect > 0 || smax == 0.0 {
        return Err(Error::DegeneratePairing {
            defect: if smax == 0.0 { s } else { defect },
        });
    }
    let correction = b_dd
        .lu()
        .solve(&(-b_dr))
        .ok_or(Error::DegeneratePairing { defect: s })?;

    let w = |i: usize| -> DVector<f64> {
        let mut v = DVector::zeros(s + n);
        v.rows_mut(0, s).copy_from(&correction.column(i));
        v[s + i] = 1.0;
        v
    };
    let ws: Vec<DVector<f64>> = (0..n).map(w).collect();
    let mut entries = Vec::new();
    let mut closure: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let br = DVector::from_vec(m.bracket_unchecked(ws[i].as_slice(), ws[j].as_slice()));
            let coords = br.rows(s, n).into_owned();
            let mut expected = DVector::zeros(s);
            for k in 0..n {
                if coords[k] != 0.0 {
                    entries.push(BracketEntry::new(i, j, k, coords[k]));
                    expected += correction.column(k) * coords[k];
                }
            }
            closure = closure.max((br.rows(0, s) - expected).amax());
        }
    }
    let modified = LieAlgebra::new(r.names().to_vec(), entries)?;
    let max_change = modified
        .dense()
        .iter()
        .zip(r.dense())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let scale = r.structure_scale().max(1.0);
    Ok(StandardModification {
        unchanged: max_change <= 1e-10 * scale,
        algebra: modified,
        skew_dim: s,
        correction,
        max_change,
        closure_residual: closure,
    })
}

/// Applies `standard_modification` `steps` times with the same metric.
pub fn iterate_standard_modification<T: Scalar>(
    r: &LieAlgebra<T>,
    metric: &DMatrix<f64>,
    steps: usize,
) -> Result<Vec<StandardModification>> {
    let mut out: Vec<StandardModification> = Vec::with_capacity(steps);
    let mut current = r.to_f64();
    for _ in 0..steps {
        let step = standard_modification(&current, metric)?;
        current = step.algebra.clone();
        out.push(step);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use approx::assert_relative_eq;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(v))
    }

    #[test]
    fn heisenberg_rank_one_extension_is_einstein() {
        let spec = AbelianExtensionSpec::from_nilsoliton(
            &models::heisenberg3(),
            DMatrix::identity(3, 3),
            vec![diag(&[1.0, 1.0, 2.0])],
        )
        .unwrap();
        assert_relative_eq!(spec.c, -1.5, epsilon = 1e-12);
        let res = extend_abelian(&spec, AbelianMetricRule::default()).unwrap();
        assert!(res.deviation < 1e-8);
        assert_relative_eq!(res.einstein_constant, -1.5, epsilon = 1e-10);
        assert_relative_eq!(res.assembled.metric[(0, 0)], 4.0, epsilon = 1e-12);
    }

    #[test]
    fn heisenberg_rank_two_extension_is_einstein() {
        let spec = AbelianExtensionSpec::from_nilsoliton(
            &models::heisenberg3(),
            DMatrix::identity(3, 3),
            vec![diag(&[1.0, 0.0, 1.0]), diag(&[0.0, 1.0, 1.0])],
        )
        .unwrap();
        let res = extend_abelian(&spec, AbelianMetricRule::default()).unwrap();
        assert!(res.deviation < 1e-8);
    }

    #[test]
    fn flat_extension_is_rejected() {
        let spec = AbelianExtensionSpec::from_nilsoliton(
            &models::abelian(2),
            DMatrix::identity(2, 2),
            vec![DMatrix::identity(2, 2)],
        )
        .unwrap();
        assert!(matches!(extend_abelian(&spec, AbelianMetricRule::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn heisenberg_is_fixed_by_standard_modification() {
        let m = standard_modification(&models::heisenberg3(), &DMatrix::identity(3, 3)).unwrap();
        assert_eq!(m.skew_dim, 1);
        assert!(m.unchanged);
    }

    #[test]
    fn rotation_is_removed_by_standard_modification() {
        let m = standard_modification(&models::hyperbolic_rot(), &DMatrix::identity(3, 3)).unwrap();
        assert!(!m.unchanged);
        let ad = m.algebra.ad_basis(0);
        assert_relative_eq!(ad, diag(&[0.0, 1.0, 1.0]), epsilon = 1e-12);
        assert!(m.closure_residual < 1e-12);
        let again = standard_modification(&m.algebra, &DMatrix::identity(3, 3)).unwrap();
        assert!(again.unchanged);
    }

    #[test]
    fn sl2_on_ch2_is_einstein() {
        let res = extend_semisimple(&models::sl2_iwasawa_ext(), AlphaRule::default()).unwrap();
        assert_relative_eq!(res.betas[0], 0.25, epsilon = 1e-12);
        assert_relative_eq!(res.alphas[0], 0.5, epsilon = 1e-12);
        assert!(res.deviation < 1e-8);
        assert_relative_eq!(res.einstein_constant, -1.5, epsilon = 1e-10);
        let unhalved = extend_semisimple(&models::sl2_iwasawa_ext(), AlphaRule::Unhalved);
        assert!(matches!(unhalved, Err(Error::ConstructionFailure { .. })));
    }

    #[test]
    fn trivial_action_gives_product() {
        let res = extend_semisimple(&models::sl2_times_ch2(), AlphaRule::default()).unwrap();
        assert_eq!(res.betas[0], 0.0);
        assert_relative_eq!(res.alphas[0], 1.0 / 3.0, epsilon = 1e-12);
        let p1 = &res.blocks[0].1;
        let rest: Vec<usize> = (0..res.assembled.q_dim()).filter(|i| !p1.contains(i)).collect();
        assert!(res.ricci.block(p1, &rest).amax() < 1e-10);
        assert!(res.deviation < 1e-8);
    }

    #[test]
    fn alpha_rules() {
        assert_relative_eq!(AlphaRule::KillingNormalized.alpha(0.25, -1.5), 0.5);
        assert_relative_eq!(AlphaRule::Unhalved.alpha(0.0, -2.0), 0.5);
    }
}
