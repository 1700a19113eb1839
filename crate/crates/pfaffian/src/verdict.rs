//! Outcomes of theorem-hypothesis checks, with certificates.

use std::fmt;

use serde::Serialize;

/// Which convergence criterion a verdict is about.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum TheoremId {
    A,
    B { axis: usize },
    C,
    One,
    Two,
    Three,
    Four,
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TheoremId::A => write!(f, "Theorem A"),
            TheoremId::B { axis } => write!(f, "Theorem B (axis {axis})"),
            TheoremId::C => write!(f, "Theorem C"),
            TheoremId::One => write!(f, "Theorem 1"),
            TheoremId::Two => write!(f, "Theorem 2"),
            TheoremId::Three => write!(f, "Theorem 3"),
            TheoremId::Four => write!(f, "Theorem 4"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum VerdictStatus {
    Holds,
    Fails,
    NotApplicable,
    /// The truncation order limited the check; a larger order may decide it.
    InconclusiveAtOrder(u32),
}

impl fmt::Display for VerdictStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerdictStatus::Holds => write!(f, "Holds"),
            VerdictStatus::Fails => write!(f, "Fails"),
            VerdictStatus::NotApplicable => write!(f, "NotApplicable"),
            VerdictStatus::InconclusiveAtOrder(n) => write!(f, "InconclusiveAtOrder({n})"),
        }
    }
}

/// Machine-checkable evidence attached to Holds/Fails verdicts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Certificate {
    None,
    /// Free-text side condition (e.g. vacuous cases).
    Note(String),
    /// Nonzero integrability defect: pair (i, j) and a witness monomial.
    DefectWitness {
        i: usize,
        j: usize,
        monomial: String,
    },
    /// All pole orders equal one.
    AllAxesFuchsian,
    /// A non-negative integer eigenvalue of a Jacobian at the origin.
    IntegerEigenvalue { axis: usize, eigenvalue: u32 },
    /// No non-negative integer eigenvalue up to the scan bound.
    NoIntegerEigenvalue { axis: usize, scan_bound: u32 },
    /// Two axes with non-degenerate Jacobians at the origin.
    NondegeneratePair { j: usize, l: usize, note: String },
    /// Degenerate Jacobians: determinants of all J_i(0).
    DegenerateJacobians { determinants: Vec<String> },
    /// For each resonant integer j, a monomial witnessing det(A - jI) != 0.
    ResonancesCertified { witnesses: Vec<(u32, String)> },
    /// No resonant integers existed at all.
    NoResonantIntegers { scan_bound: u32 },
    /// Defect components (pair and component index) whose Jacobian
    /// determinant is nonzero on the solution, with a witness monomial.
    ComponentSubset {
        components: Vec<(usize, usize, usize)>,
        det_monomial: String,
    },
    /// Order condition verified through the stated degree. Coefficients
    /// beyond it could in principle still violate the condition.
    OrderVerifiedThrough { degree: u32 },
    /// A stored monomial violating an order condition.
    OrderViolation {
        axis: usize,
        row: usize,
        col: usize,
        monomial: String,
    },
}

/// Outcome of one theorem-hypothesis check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub theorem: TheoremId,
    pub status: VerdictStatus,
    pub certificate: Certificate,
    pub conclusion: String,
}

impl Verdict {
    pub fn new(
        theorem: TheoremId,
        status: VerdictStatus,
        certificate: Certificate,
        conclusion: impl Into<String>,
    ) -> Self {
        Verdict {
            theorem,
            status,
            certificate,
            conclusion: conclusion.into(),
        }
    }

    pub fn holds(&self) -> bool {
        self.status == VerdictStatus::Holds
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} — {}", self.theorem, self.status, self.conclusion)
    }
}
