//! Randomized consistency laws, run both by the property tests and by the
//! acceptance runner.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curvature::{ricci_operator, ReductiveSplit};
use crate::derivations::{commuting_derivations, derivation_basis, pre_einstein};
use crate::error::Result;
use crate::extension::AlphaRule;
use crate::orbit::{build_g_phi, stabilizer_dimension};
use crate::scalar::Scalar;
use crate::soliton::random_metric;
use crate::{gauss, models, ExactAlgebra, LieAlgebra, Rational, RealAlgebra};

#[derive(Clone, Debug)]
pub struct LawReport {
    pub name: &'static str,
    pub trials: usize,
    pub failures: usize,
    /// Largest residual seen (0 for exact laws).
    pub worst: f64,
}

impl LawReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.trials > 0
    }
}

/// Integer matrix of determinant one (a product of random shears) and its
/// exact inverse.
pub fn integer_change_of_basis(dim: usize, rng: &mut impl Rng) -> (DMatrix<Rational>, DMatrix<Rational>) {
    let mut a = DMatrix::from_fn(dim, dim, |r, c| Rational::from_i64(i64::from(r == c)));
    if dim > 1 {
        for _ in 0..2 * dim {
            let r = rng.gen_range(0..dim);
            let s = (r + rng.gen_range(1..dim)) % dim;
            let k = Rational::from_i64(if rng.gen_bool(0.5) { 1 } else { -1 });
            for c in 0..dim {
                let v = a[(s, c)].clone() * k.clone();
                a[(r, c)] += v;
            }
        }
    }
    let inv = gauss::inverse(&a, 0.0).expect("unimodular");
    (a, inv)
}

pub fn random_rational_vector(dim: usize, rng: &mut impl Rng) -> Vec<Rational> {
    (0..dim)
        .map(|_| Rational::from_ratio(rng.gen_range(-5..=5), rng.gen_range(1..=4)))
        .collect()
}

/// Random orthogonal matrix (Q factor of a random matrix).
pub fn random_orthogonal(dim: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
    m.qr().q()
}

/// `[[x,y],z] + [[y,z],x] + [[z,x],y]`.
pub fn jacobi_sum<T: Scalar>(alg: &LieAlgebra<T>, x: &[T], y: &[T], z: &[T]) -> Result<Vec<T>> {
    let a = alg.bracket(&alg.bracket(x, y)?, z)?;
    let b = alg.bracket(&alg.bracket(y, z)?, x)?;
    let c = alg.bracket(&alg.bracket(z, x)?, y)?;
    Ok(a.into_iter()
        .zip(b)
        .zip(c)
        .map(|((a, b), c)| a + b + c)
        .collect())
}

/// Exact Jacobi on the transformed algebra, both on basis triples and on
/// the given vectors.
pub fn jacobi_law(
    alg: &ExactAlgebra,
    a: &DMatrix<Rational>,
    a_inv: &DMatrix<Rational>,
    vectors: [&[Rational]; 3],
) -> Result<bool> {
    let t = alg.change_basis(a, a_inv)?;
    let sum = jacobi_sum(&t, vectors[0], vectors[1], vectors[2])?;
    Ok(t.validate().passed() && sum.iter().all(|v| v == &Rational::from_i64(0)))
}

/// Worst `leibniz_residual(D) / (|D| * structure scale)` over a derivation
/// basis and one random combination of it.
pub fn leibniz_law(alg: &RealAlgebra, coeffs: &[f64]) -> f64 {
    let basis = derivation_basis(alg);
    let scale = alg.structure_scale().max(1e-300);
    let rel = |d: &DMatrix<f64>| {
        let norm = d.norm();
        if norm == 0.0 {
            0.0
        } else {
            alg.leibniz_residual(d) / (norm * scale)
        }
    };
    let mut worst = basis.matrices.iter().map(rel).fold(0.0, f64::max);
    if !basis.is_empty() {
        let mut combo = DMatrix::zeros(alg.dim(), alg.dim());
        for (d, c) in basis.matrices.iter().zip(coeffs.iter().cycle()) {
            combo += d * *c;
        }
        worst = worst.max(rel(&combo));
    }
    worst
}

/// Relative error of `Ric(t g) = Ric(g) / t`.
pub fn ricci_scaling_law<T: Scalar>(alg: &LieAlgebra<T>, metric: &DMatrix<f64>, t: f64) -> Result<f64> {
    let base = ricci_operator(&ReductiveSplit::trivial(alg.clone(), metric.clone())?)?;
    let scaled = ricci_operator(&ReductiveSplit::trivial(alg.clone(), metric * t)?)?;
    let expected = &base.ricci_operator / t;
    let norm = expected.norm();
    let err = (&scaled.ricci_operator - &expected).norm();
    Ok(if norm > 1e-12 { err / norm } else { err })
}

/// Relative error of `Ric(Q.mu) = Q Ric(mu) Q^T` with identity metrics.
pub fn ricci_equivariance_law<T: Scalar>(alg: &LieAlgebra<T>, q: &DMatrix<f64>) -> Result<f64> {
    let n = alg.dim();
    let id = DMatrix::identity(n, n);
    let moved = alg.to_f64().change_basis(q, &q.transpose())?;
    let base = ricci_operator(&ReductiveSplit::trivial(alg.to_f64(), id.clone())?)?;
    let image = ricci_operator(&ReductiveSplit::trivial(moved, id)?)?;
    let expected = q * &base.ricci_operator * q.transpose();
    let norm = expected.norm().max(1.0);
    Ok((&image.ricci_operator - expected).norm() / norm)
}

/// Relative error of `phi(Q.mu) = Q phi(mu) Q^T` for orthogonal `Q`.
///
/// The minimum-norm solution is only equivariant under isometries of the
/// Frobenius norm.
pub fn pre_einstein_equivariance_law<T: Scalar>(alg: &LieAlgebra<T>, q: &DMatrix<f64>) -> Result<f64> {
    let alg = alg.to_f64();
    let moved = alg.change_basis(q, &q.transpose())?;
    let phi = pre_einstein(&alg)?;
    let phi_moved = pre_einstein(&moved)?;
    let expected = q * &phi.matrix * q.transpose();
    Ok((&phi_moved.matrix - &expected).norm() / expected.norm().max(1.0))
}

/// Positivity and monotonicity of both alpha rules at `beta` and
/// `beta + delta`.
pub fn alpha_law(beta: f64, delta: f64, c: f64) -> bool {
    [AlphaRule::KillingNormalized, AlphaRule::Unhalved]
        .into_iter()
        .all(|rule| {
            let lo = rule.alpha(beta, c);
            let hi = rule.alpha(beta + delta, c);
            lo > 0.0 && hi > lo
        })
}

/// `(stabilizer_dimension on g_phi, dim(Der^phi ∩ sl))`, computed along
/// independent routes.
pub fn stabilizer_law<T: Scalar>(alg: &LieAlgebra<T>) -> Result<(usize, usize)> {
    let phi = pre_einstein(alg)?;
    let g = build_g_phi(alg, &phi)?;
    let stab = stabilizer_dimension(&g.problem())?;
    let commuting = commuting_derivations(alg, &[phi.matrix.clone()])?;
    let traced = commuting.matrices.iter().any(|d| d.trace().abs() > 1e-8 * d.norm());
    Ok((stab, commuting.dim() - usize::from(traced)))
}

fn exact_pool() -> Vec<ExactAlgebra> {
    vec![
        models::abelian(3),
        models::heisenberg3(),
        models::ch2(),
        models::sl2(),
        models::sl2_cartan(),
        models::hyperbolic_rot(),
        models::paper_n11(),
    ]
}

fn nilpotent_pool() -> Vec<ExactAlgebra> {
    vec![
        models::abelian(3),
        models::heisenberg3(),
        models::paper_n2_10(),
        models::paper_n11(),
    ]
}

fn pick<'a, T>(pool: &'a [T], rng: &mut impl Rng) -> &'a T {
    &pool[rng.gen_range(0..pool.len())]
}

struct Tally {
    report: LawReport,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            report: LawReport {
                name,
                trials: 0,
                failures: 0,
                worst: 0.0,
            },
        }
    }

    fn record(&mut self, ok: bool, residual: f64) {
        self.report.trials += 1;
        if !ok {
            self.report.failures += 1;
        }
        if residual.is_finite() {
            self.report.worst = self.report.worst.max(residual);
        } else {
            self.report.worst = f64::INFINITY;
        }
    }

    fn residual(&mut self, r: Result<f64>, tol: f64) {
        match r {
            Ok(v) => self.record(v < tol, v),
            Err(_) => self.record(false, f64::INFINITY),
        }
    }
}

/// Runs every law `trials` times from one seed.
pub fn run_all(trials: usize, seed: u64) -> Vec<LawReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exact = exact_pool();
    let nilpotent = nilpotent_pool();

    let mut jacobi = Tally::new("jacobi-exact");
    let mut leibniz = Tally::new("leibniz-residual");
    let mut scaling = Tally::new("ricci-scaling");
    let mut equivariance = Tally::new("ricci-equivariance");
    let mut phi = Tally::new("pre-einstein-equivariance");
    let mut alpha = Tally::new("alpha-positive-monotone");
    let mut stabilizer = Tally::new("stabilizer-agreement");

    for _ in 0..trials {
        let alg = pick(&exact, &mut rng);
        let n = alg.dim();
        let (a, a_inv) = integer_change_of_basis(n, &mut rng);
        let vs: Vec<Vec<Rational>> = (0..3).map(|_| random_rational_vector(n, &mut rng)).collect();
        match jacobi_law(alg, &a, &a_inv, [&vs[0], &vs[1], &vs[2]]) {
            Ok(ok) => jacobi.record(ok, 0.0),
            Err(_) => jacobi.record(false, f64::INFINITY),
        }

        let moved = alg.change_basis(&a, &a_inv).map(|m| m.to_f64());
        let coeffs: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        leibniz.residual(moved.map(|m| leibniz_law(&m, &coeffs)), 1e-10);

        let q = random_orthogonal(n, &mut rng);
        equivariance.residual(ricci_equivariance_law(alg, &q), 1e-9);

        let nil = pick(&nilpotent, &mut rng);
        let metric = random_metric(nil.dim(), rng.gen());
        for t in [2.0, 10.0] {
            scaling.residual(ricci_scaling_law(nil, &metric, t), 1e-9);
        }
        let q = random_orthogonal(nil.dim(), &mut rng);
        phi.residual(pre_einstein_equivariance_law(nil, &q), 1e-8);
        let (a, a_inv) = integer_change_of_basis(nil.dim(), &mut rng);
        match nil.change_basis(&a, &a_inv).and_then(|m| stabilizer_law(&m)) {
            Ok((s, d)) => stabilizer.record(s == d, 0.0),
            Err(_) => stabilizer.record(false, f64::INFINITY),
        }

        let beta = rng.gen_range(0.0..5.0);
        let delta = rng.gen_range(1e-3..1.0);
        let c = -rng.gen_range(0.1..30.0);
        alpha.record(alpha_law(beta, delta, c), 0.0);
    }

    [jacobi, leibniz, scaling, equivariance, phi, alpha, stabilizer]
        .into_iter()
        .map(|t| t.report)
        .collect()
}
