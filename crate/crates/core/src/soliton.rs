//! Nilsoliton detection, Einstein-derivation normalization and a metric flow
//! searching for nilsolitons.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::curvature::{RicciEngine, RicciReport};
use crate::derivations::{self, DerivationBasis, PreEinsteinDerivation, MAX_DENOMINATOR};
use crate::error::{Error, Result};
use crate::lie::LieAlgebra;
use crate::linalg;
use crate::scalar::Scalar;

/// Least-squares fit `Ric ≈ c Id + D` with `D` a derivation.
#[derive(Clone, Debug)]
pub struct SolitonFit {
    pub c: f64,
    /// Fitted derivation in the original basis.
    pub derivation: DMatrix<f64>,
    /// `|Ric - c Id - D|_F / |Ric|_F`, measured in an orthonormal frame.
    pub residual: f64,
    pub ricci: RicciReport,
}

impl SolitonFit {
    pub fn is_nilsoliton(&self, tol: f64) -> bool {
        self.residual < tol
    }

    /// Fitted derivation in the orthonormal frame of the metric.
    pub fn derivation_orthonormal(&self) -> DMatrix<f64> {
        &self.ricci.frame_inverse * &self.derivation * &self.ricci.frame
    }
}

/// Ricci engine and derivation basis of a nilpotent algebra, reusable
/// across metrics.
#[derive(Clone, Debug)]
pub struct SolitonFitter {
    engine: RicciEngine,
    basis: DerivationBasis,
    abelian: bool,
}

impl SolitonFitter {
    pub fn new<T: Scalar>(n: &LieAlgebra<T>) -> Result<Self> {
        if !n.is_nilpotent() {
            return Err(Error::Precondition("algebra is not nilpotent".into()));
        }
        Ok(Self {
            engine: RicciEngine::for_algebra(n),
            basis: derivations::derivation_basis(n),
            abelian: n.is_abelian(),
        })
    }

    pub fn derivation_basis(&self) -> &DerivationBasis {
        &self.basis
    }

    pub fn fit(&self, metric: &DMatrix<f64>) -> Result<SolitonFit> {
        let m = self.engine.dim();
        if metric.nrows() != m || metric.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: metric.nrows(),
            });
        }
        let ricci = self.engine.evaluate(metric)?;
        if self.abelian {
            return Ok(SolitonFit {
                c: 0.0,
                derivation: DMatrix::zeros(m, m),
                residual: 0.0,
                ricci,
            });
        }
        let target = &ricci.ricci_orthonormal;
        let p = &ricci.frame;
        let p_inv = &ricci.frame_inverse;
        let k = self.basis.dim();
        let mut design = DMatrix::zeros(m * m, k + 1);
        design
            .column_mut(0)
            .copy_from(&linalg::vec_of(&DMatrix::identity(m, m)));
        for (col, d) in self.basis.matrices.iter().enumerate() {
            design
                .column_mut(col + 1)
                .copy_from(&linalg::vec_of(&(p_inv * d * p)));
        }
        let rhs = linalg::vec_of(target);
        let coef = least_squares(&design, &rhs);
        let fitted = &design * &coef;
        let norm = rhs.norm();
        let residual = if norm == 0.0 {
            0.0
        } else {
            (rhs - fitted).norm() / norm
        };
        let mut derivation = DMatrix::zeros(m, m);
        for (c, d) in coef.iter().skip(1).zip(&self.basis.matrices) {
            derivation += d * *c;
        }
        Ok(SolitonFit {
            c: coef[0],
            derivation,
            residual,
            ricci,
        })
    }
}

/// Normal equations when they are well conditioned, then QR, then SVD
/// minimum norm.
fn least_squares(design: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let gram = design.tr_mul(design);
    let diag = gram.diagonal();
    if diag.min() > 0.0 {
        let scale = DVector::from_iterator(diag.len(), diag.iter().map(|v| 1.0 / v.sqrt()));
        let scaled = DMatrix::from_fn(gram.nrows(), gram.ncols(), |r, c| gram[(r, c)] * scale[r] * scale[c]);
        if let Some(chol) = scaled.clone().cholesky() {
            let l = chol.l();
            let d = l.diagonal().map(f64::abs);
            if d.min() > 1e-4 * d.max() {
                let rhs_scaled = design.tr_mul(rhs).component_mul(&scale);
                return chol.solve(&rhs_scaled).component_mul(&scale);
            }
        }
    }
    if design.nrows() >= design.ncols() {
        let qr = design.clone().qr();
        let r = qr.r();
        let diag = r.diagonal().map(f64::abs);
        if diag.min() > 1e-10 * diag.max() {
            let mut qt_b = rhs.clone();
            qr.q_tr_mul(&mut qt_b);
            let k = design.ncols();
            if let Some(x) = r.solve_upper_triangular(&qt_b.rows(0, k).into_owned()) {
                return x;
            }
        }
    }
    linalg::min_norm_solve(design, rhs, 1e-12)
}

pub fn nilsoliton_residual<T: Scalar>(n: &LieAlgebra<T>, metric: &DMatrix<f64>) -> Result<SolitonFit> {
    SolitonFitter::new(n)?.fit(metric)
}

/// A derivation rescaled to have integer eigenvalues with no common factor.
#[derive(Clone, Debug)]
pub struct NormalizedDerivation {
    pub matrix: DMatrix<f64>,
    /// Ascending integer eigenvalues.
    pub integers: Vec<i64>,
    /// Factor applied to the pre-Einstein-normalized input.
    pub scale: BigRational,
}

fn normalize_with_spectrum(
    matrix: &DMatrix<f64>,
    snapped: &[linalg::Snapped],
) -> Result<NormalizedDerivation> {
    if let Some(bad) = snapped.iter().find(|s| s.numer <= 0) {
        return Err(Error::NotEinsteinCandidate(format!(
            "eigenvalue {} is not positive",
            bad.raw
        )));
    }
    let mut lcm = BigInt::one();
    for s in snapped {
        lcm = lcm.lcm(&BigInt::from(s.denom));
    }
    let scaled: Vec<BigInt> = snapped
        .iter()
        .map(|s| BigInt::from(s.numer) * (&lcm / BigInt::from(s.denom)))
        .collect();
    let gcd = scaled.iter().fold(BigInt::zero(), |g, a| g.gcd(a));
    let scale = BigRational::new(lcm, gcd.clone());
    let integers = scaled
        .iter()
        .map(|a| (a / &gcd).to_i64().unwrap_or(i64::MAX))
        .collect();
    let factor = Scalar::to_f64(&scale);
    Ok(NormalizedDerivation {
        matrix: matrix * factor,
        integers,
        scale,
    })
}

/// `lambda * phi` with `lambda` the least positive rational making every
/// snapped eigenvalue an integer.
pub fn einstein_derivation_normalized(phi: &PreEinsteinDerivation) -> Result<NormalizedDerivation> {
    normalize_with_spectrum(&phi.matrix, &phi.snapped)
}

/// Normalizes an arbitrary positive multiple of an Einstein derivation
/// (for instance a fitted soliton derivation): first to
/// `trace(D^2) = trace(D)`, then to integers.
pub fn normalize_derivation(d: &DMatrix<f64>) -> Result<NormalizedDerivation> {
    let t2 = (d * d).trace();
    if t2.abs() < 1e-300 {
        return Err(Error::NotEinsteinCandidate("derivation is nilpotent".into()));
    }
    let phi = d * (d.trace() / t2);
    let spectrum = linalg::real_spectrum(&phi, 1e-8 * phi.norm().max(1.0)).ok_or_else(|| {
        Error::NotEinsteinCandidate("spectrum is not real".into())
    })?;
    let snapped: Vec<linalg::Snapped> = spectrum
        .iter()
        .map(|&v| linalg::rationalize(v, MAX_DENOMINATOR))
        .collect();
    if let Some(s) = snapped.iter().find(|s| s.error > 1e-6) {
        return Err(Error::NotEinsteinCandidate(format!(
            "eigenvalue {} is not close to a rational with denominator <= {MAX_DENOMINATOR}",
            s.raw
        )));
    }
    normalize_with_spectrum(&phi, &snapped)
}

/// Update rule of [`nilsoliton_flow`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FlowScheme {
    /// `g <- g - 2 step (Rc - (scal / n) g)`.
    #[default]
    Additive,
    /// `g <- g^{1/2} exp(-2 step Z / |Ric|) g^{1/2}` in the orthonormal frame,
    /// with `Z = Ric - c Id - sym(D)` for the fitted `(c, D)`. Removing the
    /// derivation part stops the drift along automorphisms, so the metric
    /// stays bounded when a nilsoliton exists.
    GaugeFixed,
}

impl FlowScheme {
    /// Step used when none is given.
    pub fn default_step(self) -> f64 {
        match self {
            FlowScheme::Additive => 1e-2,
            FlowScheme::GaugeFixed => 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowParams {
    pub step: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    pub scheme: FlowScheme,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            step: 1e-2,
            max_iter: 20_000,
            tol: 1e-6,
            seed: 0,
            scheme: FlowScheme::Additive,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FlowReport {
    pub final_metric: DMatrix<f64>,
    /// Loop passes, accepted or rejected.
    pub iterations: usize,
    /// Residual of every accepted iterate, starting with the initial metric.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// The run ended without reaching `tol`, by step underflow or by the
    /// iteration limit.
    pub stagnated: bool,
    /// The step fell below `1e-15`.
    pub step_underflow: bool,
    pub seed: u64,
    pub best_residual: f64,
    pub final_step: f64,
    pub final_fit: SolitonFit,
    /// Ratio of the extreme eigenvalues of the final metric. Growth without
    /// bound means the iterates leave every compact set of metrics.
    pub condition: f64,
}

impl FlowReport {
    /// Human-readable outcome. A non-converged run never certifies that no
    /// nilsoliton exists.
    pub fn summary(&self) -> String {
        if self.converged {
            format!(
                "converged after {} iterations, residual {:.3e}",
                self.iterations, self.best_residual
            )
        } else {
            let why = if self.step_underflow { "step underflow" } else { "iteration limit" };
            format!(
                "no convergence ({why}) after {} iterations, best residual {:.3e}, \
                 metric condition number {:.3e}; this is non-certifying and does not \
                 prove that no nilsoliton exists",
                self.iterations, self.best_residual, self.condition
            )
        }
    }
}

/// Random positive-definite matrix of determinant one.
pub fn random_metric(dim: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
    let g = a.transpose() * &a + DMatrix::identity(dim, dim) * 0.25;
    unit_determinant(g)
}

fn unit_determinant(g: DMatrix<f64>) -> DMatrix<f64> {
    let n = g.nrows() as f64;
    let det = g.determinant();
    g / det.powf(1.0 / n)
}

/// Flow `g <- g - 2 step (Rc - (scal / n) g)`, renormalized to unit
/// determinant, with step halving whenever the soliton residual would
/// increase or positivity would be lost.
pub fn nilsoliton_flow<T: Scalar>(
    n: &LieAlgebra<T>,
    init: &DMatrix<f64>,
    params: &FlowParams,
) -> Result<FlowReport> {
    let fitter = SolitonFitter::new(n)?;
    flow_with(&fitter, init, params)
}

pub fn flow_with(fitter: &SolitonFitter, init: &DMatrix<f64>, params: &FlowParams) -> Result<FlowReport> {
    if !(params.step > 0.0) || !(params.tol > 0.0) {
        return Err(Error::InvalidInput("step and tol must be positive".into()));
    }
    linalg::check_metric(init)?;
    let dim = init.nrows() as f64;
    let mut g = unit_determinant((init + init.transpose()) * 0.5);
    let mut fit = fitter.fit(&g)?;
    let mut history = vec![fit.residual];
    let mut step = params.step;
    let mut iterations = 0;
    let mut step_underflow = false;
    while fit.residual >= params.tol && iterations < params.max_iter {
        iterations += 1;
        let candidate = match params.scheme {
            FlowScheme::Additive => {
                let rc = &fit.ricci.ricci_tensor;
                &g - (rc - &g * (fit.ricci.scalar_curvature / dim)) * (2.0 * step)
            }
            FlowScheme::GaugeFixed => gauge_fixed_step(&fit, step),
        };
        let candidate = (&candidate + candidate.transpose()) * 0.5;
        let accepted = candidate.clone().cholesky().is_some() && {
            let next = unit_determinant(candidate);
            match fitter.fit(&next) {
                Ok(f) if f.residual <= fit.residual => {
                    g = next;
                    fit = f;
                    true
                }
                _ => false,
            }
        };
        if accepted {
            history.push(fit.residual);
            step = (step * 1.25).min(params.step);
        } else {
            step *= 0.5;
            if step < 1e-15 {
                step_underflow = true;
                break;
            }
        }
    }
    let best = fit.residual;
    let condition = condition_number(&g);
    Ok(FlowReport {
        final_metric: g,
        iterations,
        residual_history: history,
        converged: best < params.tol,
        stagnated: best >= params.tol,
        step_underflow,
        seed: params.seed,
        best_residual: best,
        final_step: step,
        final_fit: fit,
        condition,
    })
}

fn gauge_fixed_step(fit: &SolitonFit, step: f64) -> DMatrix<f64> {
    let ric = &fit.ricci.ricci_orthonormal;
    let m = ric.nrows();
    let d = &fit.ricci.frame_inverse * &fit.derivation * &fit.ricci.frame;
    let z = ric - DMatrix::identity(m, m) * fit.c - (&d + d.transpose()) * 0.5;
    let scale = ric.norm().max(1e-300);
    let e = linalg::sym_exp(&(z * (-2.0 * step / scale)));
    let half = &fit.ricci.frame_inverse;
    half.transpose() * e * half
}

fn condition_number(g: &DMatrix<f64>) -> f64 {
    let (vals, _) = linalg::sym_eigen(g);
    match (vals.first(), vals.last()) {
        (Some(lo), Some(hi)) if *lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Independent flows from `random_metric(dim, seed)` for each seed, run in
/// parallel.
pub fn seeded_flows<T: Scalar>(
    n: &LieAlgebra<T>,
    seeds: &[u64],
    params: &FlowParams,
) -> Result<Vec<FlowReport>> {
    let fitter = SolitonFitter::new(n)?;
    seeds
        .par_iter()
        .map(|&seed| {
            let p = FlowParams {
                seed,
                ..params.clone()
            };
            flow_with(&fitter, &random_metric(n.dim(), seed), &p)
        })
        .collect()
}

/// Ricci spectrum divided by its largest absolute value.
pub fn normalized_spectrum(report: &RicciReport) -> DVector<f64> {
    let scale = report
        .spectrum
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    DVector::from_iterator(report.spectrum.len(), report.spectrum.iter().map(|v| v / scale))
}
