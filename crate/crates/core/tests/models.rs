use nalgebra::DMatrix;
use solvmetric::derivations::pre_einstein;
use solvmetric::extension::iterate_standard_modification;
use solvmetric::models;
use solvmetric::soliton::nilsoliton_residual;
use solvmetric::{ExactAlgebra, Scalar};

fn solvable_catalog() -> Vec<(&'static str, ExactAlgebra, DMatrix<f64>)> {
    vec![
        ("heisenberg3", models::heisenberg3(), models::identity_metric(3)),
        ("ch2", models::ch2(), models::ch2_metric()),
        ("hyperbolic-rot", models::hyperbolic_rot(), models::identity_metric(3)),
        ("paper-s12", models::paper_s12(), models::paper_s12_metric()),
        ("abelian-3", models::abelian(3), models::identity_metric(3)),
    ]
}

#[test]
fn standard_modification_stabilizes() {
    for (name, alg, g) in solvable_catalog() {
        let steps = iterate_standard_modification(&alg, &g, 3).unwrap();
        let (second, third) = (&steps[1].algebra, &steps[2].algebra);
        let diff = second
            .dense()
            .iter()
            .zip(third.dense())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff < 1e-10, "{name}: {diff}");
        assert!(steps[2].unchanged, "{name}");
    }
}

#[test]
fn rotating_hyperbolic_plane_is_straightened() {
    // ad A = [[1, 1], [-1, 1]]: the skew part is removed by one step
    let steps = iterate_standard_modification(&models::hyperbolic_rot(), &models::identity_metric(3), 2).unwrap();
    assert_eq!(steps[0].skew_dim, 1);
    assert!(!steps[0].unchanged);
    let r = &steps[0].algebra;
    let sym = |i: usize, j: usize| r.c(0, i, j);
    assert!((sym(1, 2) - sym(2, 1)).abs() < 1e-10);
    assert!(steps[1].unchanged);
}

#[test]
fn heisenberg_is_its_own_modification() {
    let steps = iterate_standard_modification(&models::heisenberg3(), &models::identity_metric(3), 1).unwrap();
    let h3 = models::heisenberg3().to_f64();
    assert_eq!(steps[0].skew_dim, 1);
    let diff = steps[0]
        .algebra
        .dense()
        .iter()
        .zip(h3.dense())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(diff < 1e-12);
}

#[test]
fn soliton_derivation_is_proportional_to_phi() {
    let cases = [
        (models::heisenberg3(), models::identity_metric(3)),
        (models::paper_n11(), models::paper_n11_metric()),
    ];
    for (alg, g) in cases {
        let fit = nilsoliton_residual(&alg, &g).unwrap();
        let phi = pre_einstein(&alg).unwrap();
        let mut d = nalgebra::SymmetricEigen::new(fit.derivation_orthonormal().symmetric_part()).eigenvalues;
        d.as_mut_slice().sort_by(f64::total_cmp);
        let ratio = d[0] / phi.eigenvalues[0];
        assert!(ratio > 0.0);
        for (x, y) in d.iter().zip(&phi.eigenvalues) {
            assert!((x - ratio * y).abs() < 1e-8 * ratio.abs(), "{x} vs {}", ratio * y);
        }
    }
}

#[test]
fn catalog_brackets_are_exact_lie_algebras() {
    for (name, alg, _) in solvable_catalog() {
        assert!(alg.validate().passed(), "{name}");
    }
    for alg in [models::sl2(), models::sl2_cartan(), models::paper_n2_10(), models::paper_n11()] {
        assert!(alg.validate().passed());
    }
    assert_eq!(models::paper_s12().dim(), 12);
    let ad_a = models::paper_s12().ad_basis(0);
    let diag: Vec<i64> = (1..12).map(|i| ad_a[(i, i)].to_f64() as i64).collect();
    assert_eq!(diag, models::S12_AD_A.to_vec());
}
