//! The Pfaffian system aggregate in PDE form and its validation.
//!
//! A system is the data (m, n, p_1..p_m, f_1..f_m) of
//!   x_i^{p_i} dy/dx_i = f_i(x, y),  i = 1..m,
//! with polynomial right-hand sides vanishing at the origin.

use std::fmt;

use num_traits::Zero;

use crate::poly::{PolyError, PolyMap};

/// One validation violation; `validate` returns all of them, not just the
/// first, for better diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationIssue {
    PoleOrderTooSmall { axis: usize, p: u32 },
    ConstantTermInRhs { axis: usize, component: usize },
    ComponentCountMismatch { axis: usize, got: usize, expected: usize },
    VariableCountMismatch { axis: usize },
    PoleCountMismatch { got: usize, expected: usize },
    EmptySystem,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::PoleOrderTooSmall { axis, p } => {
                write!(f, "p_{axis} = {p} < 1")
            }
            ValidationIssue::ConstantTermInRhs { axis, component } => {
                write!(f, "constant term in f_{axis} (component {component})")
            }
            ValidationIssue::ComponentCountMismatch { axis, got, expected } => {
                write!(f, "f_{axis} has {got} components, expected {expected}")
            }
            ValidationIssue::VariableCountMismatch { axis } => {
                write!(f, "f_{axis} uses a different variable count than the system")
            }
            ValidationIssue::PoleCountMismatch { got, expected } => {
                write!(f, "{got} pole orders given, expected {expected}")
            }
            ValidationIssue::EmptySystem => write!(f, "system must have m >= 1 and n >= 1"),
        }
    }
}

/// The object of the PDE-form system: m >= 1 equations in n >= 1 unknowns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PfaffianSystem {
    m: usize,
    n: usize,
    p: Vec<u32>,
    f: Vec<PolyMap>,
}

impl PfaffianSystem {
    /// Builds a system and validates it; all violations are returned.
    pub fn new(
        m: usize,
        n: usize,
        p: Vec<u32>,
        f: Vec<PolyMap>,
    ) -> Result<Self, Vec<ValidationIssue>> {
        let sys = PfaffianSystem { m, n, p, f };
        let issues = sys.validate();
        if issues.is_empty() {
            Ok(sys)
        } else {
            Err(issues)
        }
    }

    /// Checks p_i >= 1, f_i(0,0) = 0, and shape consistency.
    pub fn validate(&self) -> Vec<ValidationIssue> {
        let mut issues = Vec::new();
        if self.m == 0 || self.n == 0 {
            issues.push(ValidationIssue::EmptySystem);
        }
        if self.p.len() != self.m {
            issues.push(ValidationIssue::PoleCountMismatch {
                got: self.p.len(),
                expected: self.m,
            });
        }
        for (i, p) in self.p.iter().enumerate() {
            if *p < 1 {
                issues.push(ValidationIssue::PoleOrderTooSmall {
                    axis: i + 1,
                    p: *p,
                });
            }
        }
        if self.f.len() != self.m {
            issues.push(ValidationIssue::PoleCountMismatch {
                got: self.f.len(),
                expected: self.m,
            });
        }
        for (i, fi) in self.f.iter().enumerate() {
            let axis = i + 1;
            if fi.len() != self.n {
                issues.push(ValidationIssue::ComponentCountMismatch {
                    axis,
                    got: fi.len(),
                    expected: self.n,
                });
                continue;
            }
            if fi.x_count() != self.m || fi.y_count() != self.n {
                issues.push(ValidationIssue::VariableCountMismatch { axis });
                continue;
            }
            for (c, comp) in fi.comps().iter().enumerate() {
                if !comp.at_origin().is_zero() {
                    issues.push(ValidationIssue::ConstantTermInRhs {
                        axis,
                        component: c + 1,
                    });
                }
            }
        }
        issues
    }

    pub fn var_count(&self) -> usize {
        self.m
    }

    pub fn unknown_count(&self) -> usize {
        self.n
    }

    /// Pole order p_i for the 1-based axis.
    pub fn pole_order(&self, axis: usize) -> u32 {
        self.p[axis - 1]
    }

    pub fn pole_orders(&self) -> &[u32] {
        &self.p
    }

    /// Right-hand side f_i for the 1-based axis.
    pub fn rhs(&self, axis: usize) -> &PolyMap {
        &self.f[axis - 1]
    }

    pub fn rhs_all(&self) -> &[PolyMap] {
        &self.f
    }
}

/// Builds a system from expression strings, the usual entry point for
/// tests and the CLI.
pub fn system_from_expressions(
    m: usize,
    n: usize,
    p: Vec<u32>,
    exprs: &[Vec<&str>],
) -> Result<PfaffianSystem, String> {
    let mut maps = Vec::with_capacity(exprs.len());
    for (i, comps) in exprs.iter().enumerate() {
        let mut polys = Vec::with_capacity(comps.len());
        for (c, text) in comps.iter().enumerate() {
            let poly = crate::parse::parse_expression(text, m, n)
                .map_err(|e| format!("f_{} component {}: {}", i + 1, c + 1, e))?;
            polys.push(poly);
        }
        maps.push(PolyMap::new(polys).map_err(|e: PolyError| e.to_string())?);
    }
    PfaffianSystem::new(m, n, p, maps).map_err(|issues| {
        issues
            .iter()
            .map(ValidationIssue::to_string)
            .collect::<Vec<_>>()
            .join("; ")
    })
}
