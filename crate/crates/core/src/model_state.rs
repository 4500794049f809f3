//! Sampler state, hyperparameters and consistency checks.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Mask, Matrix};
use crate::ontology::Ontology;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Dirichlet concentration of document-topic rows.
    pub alpha_b: f64,
    /// Dirichlet concentration of topic-concept rows.
    pub alpha_a: f64,
    /// Dirichlet concentration of concept-word rows.
    pub alpha_p: f64,
    /// IBP concentration over topics.
    pub gamma_b: f64,
    /// Concept inclusion concentration; each concept column has a
    /// `Beta(gamma_a / V, 1)` inclusion rate.
    pub gamma_a: f64,
    pub p_split: f64,
    /// Precision of the concept-word proposal in split/merge moves.
    pub beta_mh: f64,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            alpha_b: 1.0,
            alpha_a: 1.0,
            alpha_p: 1.0,
            gamma_b: 1.0,
            gamma_a: 1.0,
            p_split: 0.5,
            beta_mh: 1000.0,
            seed: 0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha_b", self.alpha_b),
            ("alpha_a", self.alpha_a),
            ("alpha_p", self.alpha_p),
            ("gamma_b", self.gamma_b),
            ("gamma_a", self.gamma_a),
            ("beta_mh", self.beta_mh),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.p_split > 0.0 && self.p_split < 1.0) {
            return Err(Error::Config(format!(
                "p_split must lie in (0, 1), got {}",
                self.p_split
            )));
        }
        Ok(())
    }
}

/// All instantiated parameters of one chain.
///
/// Rows of `b` (`N × K`), `a` (`K × V`) and `p` (`V × V`) are distributions;
/// `bbar` and `abar` are the sparsity masks of `b` and `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ModelState<T> {
    pub b: Matrix<T>,
    pub bbar: Mask,
    pub a: Matrix<T>,
    pub abar: Mask,
    pub p: Matrix<T>,
    /// Concept-word matrix pinned to the identity; P updates and split/merge
    /// moves are skipped.
    #[serde(default)]
    pub lida: bool,
}

impl<T: Real> ModelState<T> {
    #[inline]
    pub fn num_topics(&self) -> usize {
        self.a.rows()
    }

    #[inline]
    pub fn num_docs(&self) -> usize {
        self.b.rows()
    }

    #[inline]
    pub fn vocab_size(&self) -> usize {
        self.p.rows()
    }

    /// Pins `P = I` and disables everything that would move it.
    pub fn lida_mode(mut self) -> Self {
        self.p = Matrix::identity(self.vocab_size());
        self.lida = true;
        self
    }

    /// Number of nonzero topic-concept weights across instantiated topics.
    pub fn sparsity_count(&self) -> usize {
        self.a.count_positive()
    }

    /// Checks every structural invariant; reports the first violation.
    pub fn validate(&self, ontology: &Ontology) -> Result<(), Violation> {
        let (n, k, v) = (self.num_docs(), self.num_topics(), self.vocab_size());
        if k == 0 {
            return Err(Violation::NoTopics);
        }
        let shapes = [
            ("B", self.b.rows(), self.b.cols(), n, k),
            ("Bbar", self.bbar.rows(), self.bbar.cols(), n, k),
            ("A", self.a.rows(), self.a.cols(), k, v),
            ("Abar", self.abar.rows(), self.abar.cols(), k, v),
            ("P", self.p.rows(), self.p.cols(), v, v),
        ];
        for (name, r, c, er, ec) in shapes {
            if (r, c) != (er, ec) {
                return Err(Violation::Shape {
                    matrix: name,
                    got: (r, c),
                    expected: (er, ec),
                });
            }
        }
        if ontology.num_words() != v {
            return Err(Violation::Shape {
                matrix: "ontology",
                got: (ontology.num_words(), ontology.num_words()),
                expected: (v, v),
            });
        }
        check_rows("B", &self.b, Some(&self.bbar))?;
        check_rows("A", &self.a, Some(&self.abar))?;
        check_rows("P", &self.p, None)?;
        for c in 0..v {
            for (w, &x) in self.p.row(c).iter().enumerate() {
                if x > T::zero() && !ontology.can_emit(c, w) {
                    return Err(Violation::Ontology { row: c, col: w });
                }
            }
        }
        Ok(())
    }
}

fn check_rows<T: Real>(name: &'static str, m: &Matrix<T>, mask: Option<&Mask>) -> Result<(), Violation> {
    for i in 0..m.rows() {
        let row = m.row(i);
        let mut sum = 0.0;
        for (j, &x) in row.iter().enumerate() {
            if !x.is_finite() || x < T::zero() {
                return Err(Violation::BadEntry {
                    matrix: name,
                    row: i,
                    col: j,
                    value: x.as_f64(),
                });
            }
            if let Some(mask) = mask {
                if x > T::zero() && !mask.get(i, j) {
                    return Err(Violation::Mask {
                        matrix: name,
                        row: i,
                        col: j,
                    });
                }
            }
            sum += x.as_f64();
        }
        if (sum - 1.0).abs() > T::SIMPLEX_TOL {
            return Err(Violation::Simplex {
                matrix: name,
                row: i,
                sum,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoTopics,
    Shape {
        matrix: &'static str,
        got: (usize, usize),
        expected: (usize, usize),
    },
    BadEntry {
        matrix: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },
    Simplex {
        matrix: &'static str,
        row: usize,
        sum: f64,
    },
    Mask {
        matrix: &'static str,
        row: usize,
        col: usize,
    },
    Ontology {
        row: usize,
        col: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoTopics => write!(f, "state has no topics"),
            Violation::Shape {
                matrix,
                got,
                expected,
            } => write!(
                f,
                "{matrix} has shape {}x{}, expected {}x{}",
                got.0, got.1, expected.0, expected.1
            ),
            Violation::BadEntry {
                matrix,
                row,
                col,
                value,
            } => write!(f, "{matrix}[{row},{col}] = {value} is not a probability"),
            Violation::Simplex { matrix, row, sum } => {
                write!(f, "{matrix} row {row} sums to {sum}")
            }
            Violation::Mask { matrix, row, col } => {
                write!(f, "{matrix}[{row},{col}] is positive but its mask entry is 0")
            }
            Violation::Ontology { row, col } => {
                write!(f, "P[{row},{col}] is positive but {col} is outside the reach of {row}")
            }
        }
    }
}

impl std::error::Error for Violation {}
