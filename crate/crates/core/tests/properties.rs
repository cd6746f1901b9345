use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use solvmetric::curvature::{ricci_operator, ReductiveSplit};
use solvmetric::derivations::pre_einstein;
use solvmetric::extension::{
    extend_abelian, extend_semisimple, AbelianExtensionSpec, AbelianMetricRule, AlphaRule,
};
use solvmetric::orbit::{act, build_g_phi, torus_closed, Verdict};
use solvmetric::soliton::{
    nilsoliton_flow, nilsoliton_residual, normalize_derivation, random_metric, FlowParams, FlowScheme,
};
use solvmetric::{laws, models, LieAlgebra, RealAlgebra};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 100,
        ..ProptestConfig::default()
    }
}

fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_row_slice(v))
}

fn near_identity(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::identity(n, n) + DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.3..0.3))
}

fn max_entry(alg: &RealAlgebra) -> f64 {
    alg.dense().iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn nilpotent(idx: usize) -> RealAlgebra {
    [models::heisenberg3(), models::paper_n2_10(), models::paper_n11()][idx % 3].to_f64()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn randomized_laws_hold(seed in any::<u64>()) {
        for report in laws::run_all(1, seed) {
            prop_assert!(report.passed(), "{report:?}");
        }
    }

    #[test]
    fn ricci_tensor_is_symmetric_and_traces_to_scal(idx in 0usize..3, seed in any::<u64>()) {
        let alg = nilpotent(idx);
        let g = random_metric(alg.dim(), seed);
        let r = ricci_operator(&ReductiveSplit::trivial(alg, g).unwrap()).unwrap();
        let scale = r.ricci_tensor.amax().max(1.0);
        prop_assert!((&r.ricci_tensor - r.ricci_tensor.transpose()).amax() < 1e-10 * scale);
        prop_assert!((r.ricci_operator.trace() - r.scalar_curvature).abs() < 1e-9 * scale);
        // nilpotent algebras are unimodular
        prop_assert!(r.mean_curvature.amax() < 1e-10);
        // and have negative scalar curvature unless abelian
        prop_assert!(r.scalar_curvature < 0.0);
    }

    #[test]
    fn every_heisenberg_metric_is_a_nilsoliton(seed in any::<u64>()) {
        let fit = nilsoliton_residual(&models::heisenberg3(), &random_metric(3, seed)).unwrap();
        prop_assert!(fit.residual < 1e-8);
        prop_assert!(fit.c < 0.0);
    }

    #[test]
    fn soliton_fit_is_invariant_and_consistent(idx in 0usize..3, seed in any::<u64>()) {
        let alg = nilpotent(idx);
        let n = alg.dim();
        let g = random_metric(n, seed);
        let fit = nilsoliton_residual(&alg, &g).unwrap();

        let q = laws::random_orthogonal(n, &mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
        let moved = alg.change_basis(&q, &q.transpose()).unwrap();
        let moved_fit = nilsoliton_residual(&moved, &(&q * &g * q.transpose())).unwrap();
        prop_assert!((fit.residual - moved_fit.residual).abs() < 1e-9);

        prop_assert!((fit.c - moved_fit.c).abs() < 1e-9 * fit.c.abs().max(1.0));
    }

    #[test]
    fn soliton_derivation_is_symmetric_and_commutes(pick in any::<bool>(), seed in any::<u64>()) {
        // every metric on h3 is a nilsoliton; on paper-n11 take a rotated copy
        let (alg, g) = if pick {
            (models::heisenberg3().to_f64(), random_metric(3, seed))
        } else {
            let q = laws::random_orthogonal(11, &mut ChaCha8Rng::seed_from_u64(seed));
            let moved = models::paper_n11().to_f64().change_basis(&q, &q.transpose()).unwrap();
            (moved, &q * models::paper_n11_metric() * q.transpose())
        };
        let fit = nilsoliton_residual(&alg, &g).unwrap();
        prop_assert!(fit.residual < 1e-8);
        let d = &fit.derivation;
        let scale = d.amax().max(1.0) * g.amax();
        prop_assert!((&g * d - d.transpose() * &g).amax() < 1e-8 * scale);
        let ric = &fit.ricci.ricci_operator;
        let comm = ric * d - d * ric;
        prop_assert!(comm.amax() < 1e-8 * scale * ric.amax().max(1.0));
    }

    #[test]
    fn abelian_extension_keeps_the_nilsoliton(s in 0.2f64..3.0, t in -2.0f64..2.0, u in 0.2f64..3.0) {
        // a = span of two combinations of diag(1,0,1), diag(0,1,1)
        let b1 = diag(&[1.0, 0.0, 1.0]);
        let b2 = diag(&[0.0, 1.0, 1.0]);
        let a = vec![&b1 * s + &b2 * t, &b2 * u];
        let g = DMatrix::identity(3, 3);
        let spec = AbelianExtensionSpec::from_nilsoliton(&models::heisenberg3(), g.clone(), a).unwrap();
        let res = extend_abelian(&spec, AbelianMetricRule::TraceOfProduct).unwrap();
        prop_assert!(res.deviation < 1e-8);

        let n_idx = &res.blocks[1].1;
        let split = &res.assembled;
        let block = DMatrix::from_fn(3, 3, |r, c| split.metric[(n_idx[r], n_idx[c])]);
        prop_assert_eq!(block, g);
        let h3 = models::heisenberg3().to_f64();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    prop_assert_eq!(
                        *split.algebra.c(n_idx[i], n_idx[j], n_idx[k]),
                        *h3.c(i, j, k)
                    );
                }
            }
        }
        let trace = res.ricci.ricci_operator.trace();
        let expected = spec.c * split.q_dim() as f64;
        prop_assert!((trace - expected).abs() < 1e-8 * expected.abs());
    }

    #[test]
    fn alpha_grows_with_beta(beta in 0.0f64..10.0, delta in 1e-6f64..5.0, c in -50.0f64..-0.01) {
        for rule in [AlphaRule::KillingNormalized, AlphaRule::Unhalved] {
            prop_assert!(rule.alpha(beta + delta, c) > rule.alpha(beta, c));
            prop_assert!(rule.alpha(beta, c) > 0.0);
        }
    }

    #[test]
    fn act_is_a_group_action(idx in 0usize..3, seed in any::<u64>()) {
        let mu = nilpotent(idx);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = near_identity(mu.dim(), &mut rng);
        let b = near_identity(mu.dim(), &mut rng);
        let Ok(step) = act(&mu, &a) else { return Ok(()) };
        let (Ok(twice), Ok(once)) = (act(&step, &b), act(&mu, &(&b * &a))) else {
            return Ok(());
        };
        let diff = twice
            .dense()
            .iter()
            .zip(once.dense())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        prop_assert!(diff < 1e-9 * max_entry(&once).max(1.0));
    }

    #[test]
    fn closed_torus_orbit_is_bounded_below(seed in any::<u64>()) {
        let alg = models::paper_n11();
        let phi = pre_einstein(&alg).unwrap();
        let data = build_g_phi(&alg, &phi).unwrap();
        let res = torus_closed(&data.torus_problem()).unwrap();
        prop_assert_eq!(res.verdict, Verdict::Closed);
        // sum lambda_e <w_e, X> = 0 forces some entry not to shrink
        let floor = data.mu.entries().iter().map(|e| e.coeff.abs()).fold(f64::INFINITY, f64::min);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = DVector::zeros(alg.dim());
        let k = data.torus_basis.len() as f64;
        for t in &data.torus_basis {
            x += t.diagonal() * (rng.gen_range(-3.0..3.0) / (k * t.amax()));
        }
        let moved = act(&data.mu, &DMatrix::from_diagonal(&x.map(f64::exp))).unwrap();
        prop_assert!(max_entry(&moved) >= floor * (1.0 - 1e-9));
    }
}

#[test]
fn g_phi_satisfies_its_defining_conditions() {
    for alg in [models::heisenberg3(), models::paper_n2_10(), models::paper_n11(), models::abelian(3)] {
        let phi = pre_einstein(&alg).unwrap();
        let data = build_g_phi(&alg, &phi).unwrap();
        let p = DMatrix::from_diagonal(&DVector::from_iterator(
            alg.dim(),
            data.eigenvalues.iter().map(solvmetric::Scalar::to_f64),
        ));
        for x in &data.basis {
            assert!(x.trace().abs() < 1e-10);
            assert!((x * &p - &p * x).amax() < 1e-10);
            assert!((x * &p).trace().abs() < 1e-10);
        }
        for t in &data.torus_basis {
            let off = t - DMatrix::from_diagonal(&t.diagonal());
            assert_eq!(off.amax(), 0.0);
        }
    }
}

#[test]
fn destabilizing_flow_is_monotone() {
    let mu = LieAlgebra::new(
        vec!["e1".into(), "e2".into(), "e3".into()],
        vec![
            solvmetric::BracketEntry::new(0, 1, 2, 1.0),
            solvmetric::BracketEntry::new(0, 2, 2, 0.5),
        ],
    )
    .unwrap();
    let problem = solvmetric::orbit::OrbitProblem {
        mu,
        group_basis: vec![diag(&[1.0, 0.0, -1.0]), diag(&[0.0, 1.0, -1.0])],
    };
    let res = torus_closed(&problem).unwrap();
    assert_eq!(res.verdict, Verdict::NotClosed);
    let d = res.destabilizer.unwrap();
    assert!(d.verified && d.monotone);
    assert!(d.flow.len() >= 20);
    assert!(d.flow.windows(2).all(|w| w[1].1 <= w[0].1));
    assert!(d.pairings.iter().all(|&p| p <= 1e-12));
    assert!(d.pairings.iter().any(|&p| p < -1e-12));
}

#[test]
fn flow_keeps_the_metric_positive_and_the_residual_falling() {
    let params = FlowParams {
        max_iter: 3_000,
        tol: 1e-8,
        ..FlowParams::default()
    };
    for seed in 0..3 {
        let init = random_metric(11, seed);
        let report = nilsoliton_flow(&models::paper_n11(), &init, &params).unwrap();
        assert!(report.final_metric.clone().cholesky().is_some());
        assert!(report.residual_history.windows(2).all(|w| w[1] <= w[0]));
        let first = report.residual_history[0];
        assert!(report.best_residual < 0.5 * first, "{} -> {}", first, report.best_residual);
    }
}

#[test]
fn extension_by_sl2_is_einstein_and_consistent() {
    for spec in [models::sl2_iwasawa_ext(), models::sl2_times_ch2()] {
        let res = extend_semisimple(&spec, AlphaRule::KillingNormalized).unwrap();
        let q = res.assembled.q_dim() as f64;
        let trace = res.ricci.ricci_orthonormal.trace();
        assert!((trace - spec.c * q).abs() < 1e-8 * (spec.c * q).abs());
    }
}

#[test]
fn gauge_fixed_flow_recovers_the_n11_nilsoliton() {
    let params = FlowParams {
        scheme: FlowScheme::GaugeFixed,
        step: FlowScheme::GaugeFixed.default_step(),
        max_iter: 2_000,
        ..FlowParams::default()
    };
    let mut want = models::S12_AD_A.to_vec();
    want.sort_unstable();
    for seed in 0..3 {
        let report = nilsoliton_flow(&models::paper_n11(), &random_metric(11, seed), &params).unwrap();
        assert!(report.converged, "seed {seed}: {}", report.summary());
        assert!(report.condition < 1e6, "metric degenerated: {}", report.condition);
        assert!(report.residual_history.windows(2).all(|w| w[1] <= w[0]));
        let mut got = normalize_derivation(&report.final_fit.derivation).unwrap().integers;
        got.sort_unstable();
        assert_eq!(got, want);
    }
}
