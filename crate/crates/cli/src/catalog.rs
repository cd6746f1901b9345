//! Bundled algebras with known results.

use serde::Serialize;
use solvmetric::extension::{extend_semisimple, AlphaRule, SemisimpleExtensionSpec};
use solvmetric::models;
use solvmetric::{ExactAlgebra, Rational};

use crate::document::{AlgebraDocument, Decomposition, Reductive};

/// Known results, asserted by the test suite.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Expected {
    /// Ascending pre-Einstein spectrum as `"p/q"` strings (nilpotent entries).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pre_einstein_spectrum: Option<Vec<String>>,
    /// Nilsoliton constant of the declared metric.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub soliton_constant: Option<String>,
    /// Whether the declared metric is a nilsoliton.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nilsoliton: Option<bool>,
    /// Whether the declared metric is Einstein with negative constant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub einstein: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub einstein_constant: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derivation_dim: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CatalogEntry {
    pub name: String,
    pub description: String,
    pub document: AlgebraDocument,
    pub expected: Expected,
    pub solvable: bool,
}

fn spectrum(values: &[(i64, i64, usize)]) -> Option<Vec<String>> {
    Some(
        values
            .iter()
            .flat_map(|&(p, q, mult)| {
                let s = if q == 1 { p.to_string() } else { format!("{p}/{q}") };
                std::iter::repeat(s).take(mult)
            })
            .collect(),
    )
}

fn doc(alg: &ExactAlgebra, metric: &nalgebra::DMatrix<f64>) -> AlgebraDocument {
    AlgebraDocument::from_algebra(alg).with_metric(metric)
}

fn decomposition(a: Vec<usize>, n: Vec<usize>) -> Option<Decomposition> {
    Some(Decomposition { a, n })
}

/// `sl(2, R)` acting on `ch2` as one 7-dimensional algebra: `k = {K}`, the
/// metric from `extend-semisimple` on `q`.
fn sl2_iwasawa_document() -> AlgebraDocument {
    let g1 = models::sl2_cartan();
    let ch2 = models::ch2();
    let outer = solvmetric::lie::semidirect(&models::sl2_on_ch2(), &g1, &ch2).expect("sl2 acts by derivations");
    let ext = extend_semisimple(&models::sl2_iwasawa_ext(), AlphaRule::KillingNormalized)
        .expect("bundled extension is Einstein");
    let mut d = doc(&outer, &ext.assembled.metric);
    d.reductive = Some(Reductive {
        k: ext.assembled.k_indices.clone(),
        q: ext.assembled.q_indices.clone(),
    });
    d
}

pub fn entries() -> Vec<CatalogEntry> {
    let mut out = Vec::new();
    for n in 1..=4 {
        out.push(CatalogEntry {
            name: format!("abelian-{n}"),
            description: format!("abelian R^{n}"),
            document: doc(&models::abelian(n), &models::identity_metric(n)),
            expected: Expected {
                pre_einstein_spectrum: spectrum(&[(1, 1, n)]),
                soliton_constant: Some("0".into()),
                nilsoliton: Some(true),
                einstein: Some(false),
                derivation_dim: Some(n * n),
                ..Expected::default()
            },
            solvable: true,
        });
    }
    out.push(CatalogEntry {
        name: "heisenberg3".into(),
        description: "3-dimensional Heisenberg algebra [e1, e2] = z".into(),
        document: doc(&models::heisenberg3(), &models::identity_metric(3)),
        expected: Expected {
            pre_einstein_spectrum: spectrum(&[(2, 3, 2), (4, 3, 1)]),
            soliton_constant: Some("-3/2".into()),
            nilsoliton: Some(true),
            einstein: Some(false),
            derivation_dim: Some(6),
            ..Expected::default()
        },
        solvable: true,
    });
    out.push(CatalogEntry {
        name: "paper-n11".into(),
        description: "11-dimensional two-step nilpotent algebra with its nilsoliton metric \
                      (rescaled basis with rational constants)"
            .into(),
        document: doc(&models::paper_n11(), &models::paper_n11_metric()),
        expected: Expected {
            pre_einstein_spectrum: spectrum(&[(17, 25, 1), (19, 25, 6), (21, 25, 2), (38, 25, 2)]),
            soliton_constant: Some("-25".into()),
            nilsoliton: Some(true),
            einstein: Some(false),
            derivation_dim: Some(37),
            ..Expected::default()
        },
        solvable: true,
    });
    out.push(CatalogEntry {
        name: "paper-n2-10".into(),
        description: "10-dimensional ideal of paper-n11 without e0; admits no nilsoliton".into(),
        document: doc(&models::paper_n2_10(), &models::paper_n2_10_metric()),
        expected: Expected {
            pre_einstein_spectrum: spectrum(&[(3, 4, 8), (3, 2, 2)]),
            nilsoliton: Some(false),
            einstein: Some(false),
            derivation_dim: Some(33),
            ..Expected::default()
        },
        solvable: true,
    });
    let mut s12 = doc(&models::paper_s12(), &models::paper_s12_metric());
    s12.decomposition = decomposition(vec![0], (1..12).collect());
    out.push(CatalogEntry {
        name: "paper-s12".into(),
        description: "R A + paper-n11 with ad A = diag(21, 17, 21, 19 x 6, 38, 38) and its Einstein metric".into(),
        document: s12,
        expected: Expected {
            einstein: Some(true),
            einstein_constant: Some("-25".into()),
            ..Expected::default()
        },
        solvable: true,
    });
    out.push(CatalogEntry {
        name: "sl2-iwasawa-ext".into(),
        description: "sl(2, R) acting on ch2 through span{e1, e2}; extend-semisimple input".into(),
        document: sl2_iwasawa_document(),
        expected: Expected {
            einstein: Some(true),
            einstein_constant: Some("-3/2".into()),
            ..Expected::default()
        },
        solvable: false,
    });
    let mut ch2 = doc(&models::ch2(), &models::ch2_metric());
    ch2.decomposition = decomposition(vec![0], vec![1, 2, 3]);
    out.push(CatalogEntry {
        name: "ch2".into(),
        description: "complex hyperbolic plane: rank-one extension of heisenberg3".into(),
        document: ch2,
        expected: Expected {
            einstein: Some(true),
            einstein_constant: Some("-3/2".into()),
            ..Expected::default()
        },
        solvable: true,
    });
    let mut rot = doc(&models::hyperbolic_rot(), &models::identity_metric(3));
    rot.decomposition = decomposition(vec![0], vec![1, 2]);
    out.push(CatalogEntry {
        name: "hyperbolic-rot".into(),
        description: "real hyperbolic 3-space with ad A = [[1, 1], [-1, 1]]".into(),
        document: rot,
        expected: Expected {
            einstein: Some(true),
            einstein_constant: Some("-2".into()),
            ..Expected::default()
        },
        solvable: true,
    });
    out
}

pub fn names() -> Vec<String> {
    entries().into_iter().map(|e| e.name).collect()
}

pub fn find(name: &str) -> Option<CatalogEntry> {
    entries().into_iter().find(|e| e.name == name)
}

/// Extension data behind `extend-semisimple`.
pub fn semisimple_spec(name: &str) -> Option<SemisimpleExtensionSpec> {
    match name {
        "sl2-iwasawa-ext" => Some(models::sl2_iwasawa_ext()),
        "sl2-times-ch2" => Some(models::sl2_times_ch2()),
        _ => None,
    }
}

pub fn parse_expected(s: &str) -> Rational {
    solvmetric::scalar::parse_rational(s).expect("catalog values are rational")
}
