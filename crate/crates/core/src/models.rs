//! Standard algebras with exact structure constants and their natural
//! metrics.
//!
//! The 11-dimensional nilpotent algebra `n` below is written in a rescaled
//! basis `e1' = √2 e1`, `e2' = √3 e2`, `z1' = √3 z1` of the basis in which its
//! constants are `√8, √12, √3`. In the rescaled basis all constants are
//! rational, and the diagonal metric `diag(1, 2, 3, 1, 1, 1, 1, 1, 1, 3, 1)`
//! makes the original basis orthonormal.

use nalgebra::{DMatrix, DVector};

use crate::extension::SemisimpleExtensionSpec;
use crate::lie::{semidirect, BracketEntry, LieAlgebra, SolvableDecomposition};
use crate::scalar::Scalar;
use crate::{ExactAlgebra, Rational};

fn q(n: i64) -> Rational {
    Rational::from_i64(n)
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn entry(i: usize, j: usize, k: usize, c: i64) -> BracketEntry<Rational> {
    BracketEntry::new(i, j, k, q(c))
}

fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_row_slice(v))
}

pub fn abelian(dim: usize) -> ExactAlgebra {
    LieAlgebra::abelian(dim)
}

/// `[e1, e2] = z`.
pub fn heisenberg3() -> ExactAlgebra {
    LieAlgebra::new(names(&["e1", "e2", "z"]), vec![entry(0, 1, 2, 1)]).expect("valid")
}

/// `sl(2, R)` on `H, E, F`.
pub fn sl2() -> ExactAlgebra {
    LieAlgebra::new(
        names(&["H", "E", "F"]),
        vec![entry(0, 1, 1, 2), entry(0, 2, 2, -2), entry(1, 2, 0, 1)],
    )
    .expect("valid")
}

/// `sl(2, R)` on `H, X = E + F, K = E - F`: `p = span{H, X}`, `k = span{K}`.
pub fn sl2_cartan() -> ExactAlgebra {
    LieAlgebra::new(
        names(&["H", "X", "K"]),
        vec![entry(0, 1, 2, 2), entry(0, 2, 1, 2), entry(1, 2, 0, -2)],
    )
    .expect("valid")
}

/// Standard representation of `sl2_cartan` on `R^2`.
pub fn sl2_cartan_standard_rep() -> Vec<DMatrix<Rational>> {
    let m = |a: i64, b: i64, c: i64, d: i64| DMatrix::from_row_slice(2, 2, &[q(a), q(b), q(c), q(d)]);
    vec![m(1, 0, 0, -1), m(0, 1, 1, 0), m(0, 1, -1, 0)]
}

/// The 11-dimensional two-step nilpotent algebra on `e0..e8, z1, z2`
/// (rescaled basis, see the module docs).
pub fn paper_n11() -> ExactAlgebra {
    let n = names(&["e0", "e1", "e2", "e3", "e4", "e5", "e6", "e7", "e8", "z1", "z2"]);
    let (z1, z2) = (9, 10);
    LieAlgebra::new(
        n,
        vec![
            entry(1, 2, z1, 4),
            entry(0, 1, z2, 4),
            entry(3, 4, z1, 2),
            entry(5, 6, z1, 1),
            entry(7, 8, z1, 1),
            entry(5, 8, z2, 3),
            entry(6, 7, z2, 3),
        ],
    )
    .expect("valid")
}

pub fn paper_n11_metric() -> DMatrix<f64> {
    diag(&[1.0, 2.0, 3.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 3.0, 1.0])
}

/// `ad A` on `paper_n11`, in the basis `e0..e8, z1, z2`.
pub const S12_AD_A: [i64; 11] = [21, 17, 21, 19, 19, 19, 19, 19, 19, 38, 38];

/// The ideal `span{e1..e8, z1, z2}` of `paper_n11`.
pub fn paper_n2_10() -> ExactAlgebra {
    paper_n11()
        .subalgebra(&(1..11).collect::<Vec<_>>())
        .expect("ideal")
}

pub fn paper_n2_10_metric() -> DMatrix<f64> {
    diag(&[2.0, 3.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 3.0, 1.0])
}

/// `R A ⋉ paper_n11` with `ad A = diag(21, 17, 21, 19 x 6, 38, 38)`.
pub fn paper_s12() -> ExactAlgebra {
    let d = DMatrix::from_diagonal(&DVector::from_iterator(11, S12_AD_A.iter().map(|&v| q(v))));
    let outer = LieAlgebra::new(names(&["A"]), Vec::new()).expect("valid");
    semidirect(&[d], &outer, &paper_n11()).expect("diagonal derivation")
}

/// Einstein metric on `paper_s12`: `|A|^2 = trace(ad A) = 249`, `A ⟂ n`,
/// and the metric of `paper_n11` on `n`.
pub fn paper_s12_metric() -> DMatrix<f64> {
    let mut g = DMatrix::zeros(12, 12);
    g[(0, 0)] = 249.0;
    g.view_mut((1, 1), (11, 11)).copy_from(&paper_n11_metric());
    g
}

/// Literal reading: `{A, e0, ..., z2}` orthonormal (in the original basis).
pub fn paper_s12_literal_metric() -> DMatrix<f64> {
    let mut g = paper_s12_metric();
    g[(0, 0)] = 1.0;
    g
}

pub fn paper_s12_decomposition() -> SolvableDecomposition<Rational> {
    SolvableDecomposition {
        algebra: paper_s12(),
        a_indices: vec![0],
        n_indices: (1..12).collect(),
    }
}

/// `R A ⋉ heisenberg3` with `ad A = diag(1, 1, 2)`: the complex hyperbolic
/// plane.
pub fn ch2() -> ExactAlgebra {
    LieAlgebra::new(
        names(&["A", "e1", "e2", "z"]),
        vec![entry(0, 1, 1, 1), entry(0, 2, 2, 1), entry(0, 3, 3, 2), entry(1, 2, 3, 1)],
    )
    .expect("valid")
}

/// Einstein metric on `ch2` with constant `-3/2`.
pub fn ch2_metric() -> DMatrix<f64> {
    diag(&[4.0, 1.0, 1.0, 1.0])
}

pub fn ch2_decomposition() -> SolvableDecomposition<Rational> {
    SolvableDecomposition {
        algebra: ch2(),
        a_indices: vec![0],
        n_indices: vec![1, 2, 3],
    }
}

/// `sl2_cartan` acting on `ch2`: standard representation on `span{e1, e2}`,
/// trivially on `A` and `z`.
pub fn sl2_on_ch2() -> Vec<DMatrix<Rational>> {
    sl2_cartan_standard_rep()
        .into_iter()
        .map(|m| {
            let mut full = DMatrix::from_element(4, 4, q(0));
            for r in 0..2 {
                for c in 0..2 {
                    full[(1 + r, 1 + c)] = m[(r, c)].clone();
                }
            }
            full
        })
        .collect()
}

/// `R A ⋉ R^2` with `ad A = [[1, 1], [-1, 1]]`: real hyperbolic plane
/// presented with a rotating factor.
pub fn hyperbolic_rot() -> ExactAlgebra {
    LieAlgebra::new(
        names(&["A", "e1", "e2"]),
        vec![entry(0, 1, 1, 1), entry(0, 1, 2, -1), entry(0, 2, 1, 1), entry(0, 2, 2, 1)],
    )
    .expect("valid")
}

pub fn identity_metric(dim: usize) -> DMatrix<f64> {
    DMatrix::identity(dim, dim)
}

fn sl2_acting_on_ch2(rho: Vec<DMatrix<f64>>) -> SemisimpleExtensionSpec {
    let ch2 = ch2_decomposition();
    SemisimpleExtensionSpec {
        g1: sl2_cartan().to_f64(),
        k1: vec![2],
        p1: vec![0, 1],
        ideals: vec![vec![0, 1, 2]],
        s2: SolvableDecomposition {
            algebra: ch2.algebra.to_f64(),
            a_indices: ch2.a_indices,
            n_indices: ch2.n_indices,
        },
        g2: ch2_metric(),
        c: -1.5,
        rho,
    }
}

/// `sl(2, R)` acting on `ch2` through `sp(2, R)` on `span{e1, e2}`.
pub fn sl2_iwasawa_ext() -> SemisimpleExtensionSpec {
    sl2_acting_on_ch2(sl2_on_ch2().iter().map(|m| m.map(|v| v.to_f64())).collect())
}

/// `sl(2, R) x ch2` with `rho = 0`.
pub fn sl2_times_ch2() -> SemisimpleExtensionSpec {
    sl2_acting_on_ch2(vec![DMatrix::zeros(4, 4); 3])
}
