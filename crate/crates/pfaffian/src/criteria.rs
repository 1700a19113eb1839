//! Convergence criteria with certificates.
//!
//! Each check is an independent sufficient condition for convergence of
//! a formal solution; the aggregate report certifies convergence as soon
//! as any single verdict holds. Checks that depend on the truncated
//! solution can only certify through the computed order and say so.

use num_traits::Zero;

use crate::integrability::{check_theorem2, check_theorem3, IntegrabilityError};
use crate::poly::{jacobian_y, jacobian_y_at_origin, RatMat};
use crate::rat::{rat_floor_u32, rat_abs, rat_int, Rat};
use crate::series::{Series, SeriesVec};
use crate::solver::{restricted_jacobian_A, SolveError};
use crate::system::PfaffianSystem;
use crate::verdict::{Certificate, TheoremId, Verdict, VerdictStatus};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CriteriaError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Integrability(#[from] IntegrabilityError),
    #[error(transparent)]
    Poly(#[from] crate::poly::PolyError),
    #[error(transparent)]
    Series(#[from] crate::series::SeriesError),
}

/// det(M − λI) as an exact polynomial in λ; coefficient `i` multiplies
/// λ^i, and the leading coefficient is (−1)^n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharPoly {
    pub coeffs: Vec<Rat>,
}

impl CharPoly {
    /// Cofactor expansion over Q[λ]; exact for the small matrices used
    /// here.
    pub fn of(m: &RatMat) -> CharPoly {
        let n = m.size();
        // entries of M − λI as degree ≤ 1 polynomials in λ
        let rows: Vec<Vec<Vec<Rat>>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            vec![m.entry(i, j).clone(), rat_int(-1)]
                        } else {
                            vec![m.entry(i, j).clone()]
                        }
                    })
                    .collect()
            })
            .collect();
        let mut coeffs = det_poly(&rows);
        coeffs.resize(n + 1, Rat::zero());
        CharPoly { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }
}

fn poly_mul_q(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Rat::zero(); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn poly_add_q(a: &mut Vec<Rat>, b: &[Rat], negate: bool) {
    if a.len() < b.len() {
        a.resize(b.len(), Rat::zero());
    }
    for (i, bi) in b.iter().enumerate() {
        if negate {
            a[i] -= bi;
        } else {
            a[i] += bi;
        }
    }
}

fn det_poly(rows: &[Vec<Vec<Rat>>]) -> Vec<Rat> {
    let n = rows.len();
    if n == 0 {
        return vec![rat_int(1)];
    }
    if n == 1 {
        return rows[0][0].clone();
    }
    let mut acc: Vec<Rat> = Vec::new();
    for j in 0..n {
        if rows[0][j].iter().all(Zero::is_zero) {
            continue;
        }
        let minor: Vec<Vec<Vec<Rat>>> = rows[1..]
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != j)
                    .map(|(_, v)| v.clone())
                    .collect()
            })
            .collect();
        let term = poly_mul_q(&rows[0][j], &det_poly(&minor));
        poly_add_q(&mut acc, &term, j % 2 == 1);
    }
    acc
}

/// Eigenvalue scan bound: floor of the maximum absolute row sum, an
/// upper bound on the spectral radius.
pub fn eig_scan_bound(m: &RatMat) -> u32 {
    let mut best = Rat::zero();
    for row in m.rows() {
        let sum: Rat = row.iter().map(rat_abs).sum();
        if sum > best {
            best = sum;
        }
    }
    rat_floor_u32(&best)
}

/// All non-negative integers j ≤ bound with det(M − jI) = 0, exactly.
pub fn integer_eigs_with_bound(m: &RatMat, bound: u32) -> Vec<u32> {
    let cp = CharPoly::of(m);
    (0..=bound)
        .filter(|j| cp.eval(&rat_int(*j as i64)).is_zero())
        .collect()
}

pub fn integer_eigs(m: &RatMat) -> Vec<u32> {
    integer_eigs_with_bound(m, eig_scan_bound(m))
}

/// Fuchsian case: every axis has a first-order pole.
pub fn check_theorem_a(sys: &PfaffianSystem) -> Verdict {
    if sys.pole_orders().iter().all(|&p| p == 1) {
        Verdict::new(
            TheoremId::A,
            VerdictStatus::Holds,
            Certificate::AllAxesFuchsian,
            "every formal solution converges (Fuchsian system)",
        )
    } else {
        Verdict::new(
            TheoremId::A,
            VerdictStatus::NotApplicable,
            Certificate::None,
            "some axis has pole order greater than one",
        )
    }
}

/// One Fuchsian axis whose origin Jacobian avoids non-negative integer
/// eigenvalues forces convergence of every formal solution.
pub fn check_theorem_b_with_bound(
    sys: &PfaffianSystem,
    axis: usize,
    bound: Option<u32>,
) -> Result<Verdict, CriteriaError> {
    let id = TheoremId::B { axis };
    if sys.pole_order(axis) != 1 {
        return Ok(Verdict::new(
            id,
            VerdictStatus::NotApplicable,
            Certificate::None,
            format!("axis {axis} has pole order {} > 1", sys.pole_order(axis)),
        ));
    }
    let j0 = jacobian_y_at_origin(sys.rhs(axis))?;
    let scan_bound = bound.unwrap_or_else(|| eig_scan_bound(&j0));
    let eigs = integer_eigs_with_bound(&j0, scan_bound);
    match eigs.first() {
        Some(&e) => Ok(Verdict::new(
            id,
            VerdictStatus::Fails,
            Certificate::IntegerEigenvalue {
                axis,
                eigenvalue: e,
            },
            format!("J_{axis}(0) has non-negative integer eigenvalue {e}"),
        )),
        None => Ok(Verdict::new(
            id,
            VerdictStatus::Holds,
            Certificate::NoIntegerEigenvalue { axis, scan_bound },
            "every formal solution converges (non-resonant Fuchsian axis)",
        )),
    }
}

pub fn check_theorem_b(sys: &PfaffianSystem, axis: usize) -> Result<Verdict, CriteriaError> {
    check_theorem_b_with_bound(sys, axis, None)
}

/// Axis-1 criterion for a specific solution: det(A − jI) ≢ 0 for every
/// non-negative integer j, with A the restricted Jacobian at φ.
pub fn check_theorem_1_with_bound(
    sys: &PfaffianSystem,
    phi: &SeriesVec,
    bound: Option<u32>,
) -> Result<Verdict, CriteriaError> {
    if sys.pole_order(1) != 1 {
        return Ok(Verdict::new(
            TheoremId::One,
            VerdictStatus::NotApplicable,
            Certificate::None,
            "axis 1 must have pole order 1",
        ));
    }
    let a = restricted_jacobian_A(sys, phi)?;
    let n = a.size();
    let a0 = RatMat::new(
        (0..n)
            .map(|i| (0..n).map(|j| a.entry(i, j).constant_term()).collect())
            .collect(),
    )?;
    let scan_bound = bound.unwrap_or_else(|| eig_scan_bound(&a0));
    let resonant = integer_eigs_with_bound(&a0, scan_bound);
    if resonant.is_empty() {
        return Ok(Verdict::new(
            TheoremId::One,
            VerdictStatus::Holds,
            Certificate::NoResonantIntegers { scan_bound },
            "no non-negative integer eigenvalue of A(0); det(A − jI) ≢ 0 for all j",
        ));
    }
    let mut witnesses = Vec::new();
    for j in resonant {
        let shifted = a.sub_scalar_identity(&rat_int(j as i64))?;
        let det = shifted.det()?;
        let first = det.terms().next().map(|(k, c)| (k.clone(), c.clone()));
        match first {
            Some((k, c)) => {
                let mono = Series::monomial(det.var_count(), det.trunc(), k, c)?;
                witnesses.push((j, mono.to_string()));
            }
            None => {
                return Ok(Verdict::new(
                    TheoremId::One,
                    VerdictStatus::InconclusiveAtOrder(phi.trunc()),
                    Certificate::None,
                    format!(
                        "det(A − {j}I) vanishes through the computed order; cannot certify ≢ 0"
                    ),
                ));
            }
        }
    }
    Ok(Verdict::new(
        TheoremId::One,
        VerdictStatus::Holds,
        Certificate::ResonancesCertified { witnesses },
        "every resonant det(A − jI) certified nonzero",
    ))
}

pub fn check_theorem_1(sys: &PfaffianSystem, phi: &SeriesVec) -> Result<Verdict, CriteriaError> {
    check_theorem_1_with_bound(sys, phi, None)
}

/// All poles of order ≥ 2 with two non-degenerate origin Jacobians:
/// unique formal solution, and it converges.
pub fn check_theorem_c(sys: &PfaffianSystem) -> Result<Verdict, CriteriaError> {
    if sys.var_count() < 2 {
        return Ok(Verdict::new(
            TheoremId::C,
            VerdictStatus::NotApplicable,
            Certificate::None,
            "criterion requires m >= 2",
        ));
    }
    if sys.pole_orders().iter().any(|&p| p < 2) {
        return Ok(Verdict::new(
            TheoremId::C,
            VerdictStatus::NotApplicable,
            Certificate::None,
            "criterion requires every pole order at least 2",
        ));
    }
    let mut dets = Vec::with_capacity(sys.var_count());
    for i in 1..=sys.var_count() {
        dets.push(jacobian_y_at_origin(sys.rhs(i))?.det());
    }
    let nondeg: Vec<usize> = dets
        .iter()
        .enumerate()
        .filter(|(_, d)| !d.is_zero())
        .map(|(i, _)| i + 1)
        .collect();
    if nondeg.len() >= 2 {
        let note = if sys.var_count() == 2 {
            "for m = 2 the complete-integrability assumption is removable (Sibuya)"
        } else {
            "unique formal solution; converges"
        };
        Ok(Verdict::new(
            TheoremId::C,
            VerdictStatus::Holds,
            Certificate::NondegeneratePair {
                j: nondeg[0],
                l: nondeg[1],
                note: note.to_string(),
            },
            "unique formal solution, and it converges",
        ))
    } else {
        Ok(Verdict::new(
            TheoremId::C,
            VerdictStatus::Fails,
            Certificate::DegenerateJacobians {
                determinants: dets.iter().map(crate::rat::format_rat).collect(),
            },
            "fewer than two non-degenerate origin Jacobians",
        ))
    }
}

/// Two-variable order condition: ord_{x_i} ∂f_i/∂y(x, φ) ≥ p_i − 1 for
/// i = 1, 2. A violating monomial is conclusive; absence of one only
/// certifies through the computed order.
pub fn check_theorem_4(
    sys: &PfaffianSystem,
    phi: &SeriesVec,
) -> Result<Verdict, CriteriaError> {
    if sys.var_count() != 2 {
        return Ok(Verdict::new(
            TheoremId::Four,
            VerdictStatus::NotApplicable,
            Certificate::None,
            "criterion requires exactly two variables",
        ));
    }
    let trunc = phi.trunc();
    for i in 1..=2usize {
        let need = sys.pole_order(i).saturating_sub(1);
        if need == 0 {
            continue;
        }
        let jac = jacobian_y(sys.rhs(i))?;
        for (r, row) in jac.iter().enumerate() {
            for (c, entry) in row.iter().enumerate() {
                let at_phi = entry.eval_series(phi)?;
                for (k, coeff) in at_phi.terms() {
                    if k.get(i) < need {
                        let mono = Series::monomial(
                            at_phi.var_count(),
                            trunc,
                            k.clone(),
                            coeff.clone(),
                        )?;
                        return Ok(Verdict::new(
                            TheoremId::Four,
                            VerdictStatus::Fails,
                            Certificate::OrderViolation {
                                axis: i,
                                row: r + 1,
                                col: c + 1,
                                monomial: mono.to_string(),
                            },
                            format!(
                                "ord_x{i} of (∂f_{i}/∂y)_{}{} at φ is below {need}",
                                r + 1,
                                c + 1
                            ),
                        ));
                    }
                }
            }
        }
    }
    Ok(Verdict::new(
        TheoremId::Four,
        VerdictStatus::Holds,
        Certificate::OrderVerifiedThrough { degree: trunc },
        format!(
            "order conditions hold for all computed terms; degrees beyond {trunc} unchecked"
        ),
    ))
}

/// Tuning knobs for the aggregate run.
#[derive(Debug, Clone)]
pub struct CriteriaOptions {
    /// Override the eigenvalue scan bound for Theorems B and 1.
    pub eig_bound: Option<u32>,
    /// Cap on the subset search in Theorem 3.
    pub subset_cap: usize,
}

impl Default for CriteriaOptions {
    fn default() -> Self {
        CriteriaOptions {
            eig_bound: None,
            subset_cap: crate::integrability::DEFAULT_SUBSET_CAP,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CriteriaReport {
    /// Fixed order: A, B per axis, C, 1, 2, 3, 4.
    pub verdicts: Vec<Verdict>,
    /// True when at least one verdict holds.
    pub certified: bool,
    pub conclusion: String,
}

/// Runs every applicable criterion; solution-dependent checks are
/// skipped (NotApplicable) when no φ is supplied.
pub fn run_all(
    sys: &PfaffianSystem,
    phi: Option<&SeriesVec>,
    options: &CriteriaOptions,
) -> Result<CriteriaReport, CriteriaError> {
    let mut verdicts = Vec::new();
    verdicts.push(check_theorem_a(sys));
    for axis in 1..=sys.var_count() {
        verdicts.push(check_theorem_b_with_bound(sys, axis, options.eig_bound)?);
    }
    verdicts.push(check_theorem_c(sys)?);
    match phi {
        Some(phi) => {
            verdicts.push(check_theorem_1_with_bound(sys, phi, options.eig_bound)?);
            verdicts.push(check_theorem2(sys, phi)?);
            verdicts.push(check_theorem3(sys, phi, options.subset_cap)?);
            verdicts.push(check_theorem_4(sys, phi)?);
        }
        None => {
            for (id, note) in [
                (TheoremId::One, "needs a solution"),
                (TheoremId::Two, "needs a solution"),
                (TheoremId::Three, "needs a solution"),
                (TheoremId::Four, "needs a solution"),
            ] {
                verdicts.push(Verdict::new(
                    id,
                    VerdictStatus::NotApplicable,
                    Certificate::None,
                    note,
                ));
            }
        }
    }
    let certified = verdicts.iter().any(Verdict::holds);
    let conclusion = if certified {
        let names: Vec<String> = verdicts
            .iter()
            .filter(|v| v.holds())
            .map(|v| v.theorem.to_string())
            .collect();
        format!("convergence certified via {}", names.join(", "))
    } else {
        "no criterion applies".to_string()
    };
    Ok(CriteriaReport {
        verdicts,
        certified,
        conclusion,
    })
}
