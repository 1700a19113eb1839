//! JSON document types for systems and truncated solutions.
//!
//! Rational coefficients are serialized as strings `"p/q"` (or `"p"`)
//! so exactness survives the round trip; floats never appear.

use serde::{Deserialize, Serialize};

use crate::parse::{parse_expression, ExprError};
use crate::rat::{format_rat, parse_rat, RatParseError};
use crate::series::{MultiIndex, Series, SeriesError, SeriesVec};
use crate::system::{PfaffianSystem, ValidationIssue};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DocError {
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("expression error in f_{axis} component {component}: {source}")]
    Expr {
        axis: usize,
        component: usize,
        source: ExprError,
    },
    #[error("bad rational at index {index:?}, component {component}: {source}")]
    Rat {
        index: Vec<u32>,
        component: usize,
        source: RatParseError,
    },
    #[error("system validation failed: {0}")]
    Validation(String),
    #[error("bad coefficient entry {index:?}: {reason}")]
    BadEntry { index: Vec<u32>, reason: String },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

fn validation_message(issues: &[ValidationIssue]) -> String {
    issues
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Serialized form of a Pfaffian system: pole orders plus one expression
/// string per equation component.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct SystemDocument {
    pub m: usize,
    pub n: usize,
    pub p: Vec<u32>,
    pub f: Vec<Vec<String>>,
}

impl SystemDocument {
    pub fn from_system(sys: &PfaffianSystem) -> SystemDocument {
        SystemDocument {
            m: sys.var_count(),
            n: sys.unknown_count(),
            p: sys.pole_orders().to_vec(),
            f: sys
                .rhs_all()
                .iter()
                .map(|fm| fm.comps().iter().map(|p| p.to_string()).collect())
                .collect(),
        }
    }

    pub fn to_system(&self) -> Result<PfaffianSystem, DocError> {
        let mut maps = Vec::with_capacity(self.f.len());
        for (ai, comps) in self.f.iter().enumerate() {
            let mut polys = Vec::with_capacity(comps.len());
            for (ci, text) in comps.iter().enumerate() {
                let poly = parse_expression(text, self.m, self.n).map_err(|source| {
                    DocError::Expr {
                        axis: ai + 1,
                        component: ci + 1,
                        source,
                    }
                })?;
                polys.push(poly);
            }
            maps.push(crate::poly::PolyMap::new(polys).map_err(|e| {
                DocError::Validation(e.to_string())
            })?);
        }
        PfaffianSystem::new(self.m, self.n, self.p.clone(), maps)
            .map_err(|issues| DocError::Validation(validation_message(&issues)))
    }

    pub fn from_json(text: &str) -> Result<SystemDocument, DocError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serialization cannot fail")
    }
}

/// One coefficient vector c_k, exact rationals as strings.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct CoeffEntry {
    pub k: Vec<u32>,
    pub c: Vec<String>,
}

/// Serialized truncated solution Σ c_k x^k with 1 ≤ |k| ≤ order.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct SolutionDocument {
    pub m: usize,
    pub n: usize,
    pub order: u32,
    pub coefficients: Vec<CoeffEntry>,
}

impl SolutionDocument {
    /// Entries carry every index where some component is nonzero.
    pub fn from_series_vec(phi: &SeriesVec) -> SolutionDocument {
        let mut indices = std::collections::BTreeSet::new();
        for comp in phi.comps() {
            for (k, _) in comp.terms() {
                if k.degree() >= 1 {
                    indices.insert(k.clone());
                }
            }
        }
        let coefficients = indices
            .into_iter()
            .map(|k| CoeffEntry {
                c: phi
                    .comps()
                    .iter()
                    .map(|comp| format_rat(&comp.coeff(&k)))
                    .collect(),
                k: k.0,
            })
            .collect();
        SolutionDocument {
            m: phi.var_count(),
            n: phi.len(),
            order: phi.trunc(),
            coefficients,
        }
    }

    pub fn to_series_vec(&self) -> Result<SeriesVec, DocError> {
        let mut comps: Vec<Vec<(MultiIndex, crate::rat::Rat)>> = vec![Vec::new(); self.n];
        for entry in &self.coefficients {
            if entry.k.len() != self.m {
                return Err(DocError::BadEntry {
                    index: entry.k.clone(),
                    reason: format!("index has {} entries, expected {}", entry.k.len(), self.m),
                });
            }
            let k = MultiIndex(entry.k.clone());
            let d = k.degree();
            if d < 1 || d > self.order {
                return Err(DocError::BadEntry {
                    index: entry.k.clone(),
                    reason: format!("total degree {d} outside 1..={}", self.order),
                });
            }
            if entry.c.len() != self.n {
                return Err(DocError::BadEntry {
                    index: entry.k.clone(),
                    reason: format!(
                        "coefficient vector has {} entries, expected {}",
                        entry.c.len(),
                        self.n
                    ),
                });
            }
            for (ci, text) in entry.c.iter().enumerate() {
                let v = parse_rat(text).map_err(|source| DocError::Rat {
                    index: entry.k.clone(),
                    component: ci + 1,
                    source,
                })?;
                if !num_traits::Zero::is_zero(&v) {
                    comps[ci].push((k.clone(), v));
                }
            }
        }
        let series = comps
            .into_iter()
            .map(|terms| Series::from_terms(self.m, self.order, terms))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SeriesVec::new(series)?)
    }

    pub fn from_json(text: &str) -> Result<SolutionDocument, DocError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serialization cannot fail")
    }
}
