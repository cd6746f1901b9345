//! JSON interchange format for metric Lie algebras.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use solvmetric::scalar::{format_rational, parse_rational};
use solvmetric::{BracketEntry, ExactAlgebra, LieAlgebra, Rational};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    /// Rational coefficient, `"p/q"` or `"p"`.
    pub c: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub a: Vec<usize>,
    pub n: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reductive {
    pub k: Vec<usize>,
    pub q: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraDocument {
    pub schema_version: String,
    pub dim: usize,
    pub basis: Vec<String>,
    pub brackets: Vec<Bracket>,
    /// Row-major inner product on the whole algebra, or on `q` when
    /// `reductive` is present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<Decomposition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reductive: Option<Reductive>,
}

#[derive(Debug, thiserror::Error)]
pub enum DocumentError {
    #[error("unsupported schema_version {0:?} (expected \"1\")")]
    Schema(String),
    #[error("basis has {basis} names but dim is {dim}")]
    BasisLength { basis: usize, dim: usize },
    #[error("bracket {index}: {reason}")]
    Bracket { index: usize, reason: String },
    #[error("metric must be {expected}x{expected}, got {rows} rows")]
    MetricShape { expected: usize, rows: usize },
    #[error("metric row {row} has length {len}, expected {expected}")]
    MetricRow { row: usize, len: usize, expected: usize },
    #[error("metric is not symmetric at ({0}, {1})")]
    MetricSymmetry(usize, usize),
    #[error("{0}")]
    Indices(String),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

fn check_partition(what: &str, a: &[usize], b: &[usize], dim: usize) -> Result<(), DocumentError> {
    let mut seen = vec![false; dim];
    for &i in a.iter().chain(b) {
        if i >= dim {
            return Err(DocumentError::Indices(format!("{what} index {i} out of range for dim {dim}")));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(DocumentError::Indices(format!("{what} index {i} listed twice")));
        }
    }
    Ok(())
}

impl AlgebraDocument {
    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        let doc: Self = serde_json::from_str(text)?;
        doc.check()?;
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    /// Structural checks; Jacobi is left to `validate`.
    pub fn check(&self) -> Result<(), DocumentError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(DocumentError::Schema(self.schema_version.clone()));
        }
        if self.basis.len() != self.dim {
            return Err(DocumentError::BasisLength {
                basis: self.basis.len(),
                dim: self.dim,
            });
        }
        for (index, b) in self.brackets.iter().enumerate() {
            let reason = if b.i >= b.j {
                Some(format!("needs i < j, got i = {}, j = {}", b.i, b.j))
            } else if b.j >= self.dim || b.k >= self.dim {
                Some(format!("index out of range for dim {}", self.dim))
            } else if parse_rational(&b.c).is_none() {
                Some(format!("coefficient {:?} is not a rational \"p/q\"", b.c))
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(DocumentError::Bracket { index, reason });
            }
        }
        if let Some(d) = &self.decomposition {
            check_partition("decomposition", &d.a, &d.n, self.dim)?;
        }
        let metric_dim = match &self.reductive {
            Some(r) => {
                check_partition("reductive", &r.k, &r.q, self.dim)?;
                if r.k.len() + r.q.len() != self.dim {
                    return Err(DocumentError::Indices("reductive k and q must cover the basis".into()));
                }
                r.q.len()
            }
            None => self.dim,
        };
        if let Some(m) = &self.metric {
            if m.len() != metric_dim {
                return Err(DocumentError::MetricShape {
                    expected: metric_dim,
                    rows: m.len(),
                });
            }
            for (row, r) in m.iter().enumerate() {
                if r.len() != metric_dim {
                    return Err(DocumentError::MetricRow {
                        row,
                        len: r.len(),
                        expected: metric_dim,
                    });
                }
            }
            for r in 0..metric_dim {
                for c in 0..r {
                    if m[r][c] != m[c][r] {
                        return Err(DocumentError::MetricSymmetry(r, c));
                    }
                }
            }
        }
        Ok(())
    }

    /// Exact structure constants. Duplicate entries for the same `(i, j, k)`
    /// are summed.
    pub fn algebra(&self) -> Result<ExactAlgebra, DocumentError> {
        self.check()?;
        let entries = self
            .brackets
            .iter()
            .map(|b| BracketEntry::new(b.i, b.j, b.k, parse_rational(&b.c).expect("checked")))
            .collect();
        LieAlgebra::new(self.basis.clone(), entries).map_err(|e| DocumentError::Bracket {
            index: 0,
            reason: e.to_string(),
        })
    }

    pub fn metric_matrix(&self) -> Option<DMatrix<f64>> {
        self.metric.as_ref().map(|rows| {
            let n = rows.len();
            DMatrix::from_fn(n, n, |r, c| rows[r][c])
        })
    }

    /// Declared metric, or the identity on `q`.
    pub fn metric_or_identity(&self) -> DMatrix<f64> {
        self.metric_matrix().unwrap_or_else(|| {
            let n = self.reductive.as_ref().map_or(self.dim, |r| r.q.len());
            DMatrix::identity(n, n)
        })
    }

    pub fn from_algebra(alg: &ExactAlgebra) -> Self {
        let brackets = alg
            .entries()
            .iter()
            .map(|e| Bracket {
                i: e.i,
                j: e.j,
                k: e.k,
                c: format_rational(&e.coeff),
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION.into(),
            dim: alg.dim(),
            basis: alg.names().to_vec(),
            brackets,
            metric: None,
            decomposition: None,
            reductive: None,
        }
    }

    pub fn with_metric(mut self, g: &DMatrix<f64>) -> Self {
        self.metric = Some((0..g.nrows()).map(|r| g.row(r).iter().copied().collect()).collect());
        self
    }
}

/// Exact rational for a float that is a short fraction, else its binary
/// expansion.
pub fn rational_of(x: f64) -> Rational {
    let s = solvmetric::linalg::rationalize(x, 1 << 20);
    if s.error == 0.0 {
        s.to_rational()
    } else {
        Rational::from_float(x).unwrap_or_default()
    }
}
