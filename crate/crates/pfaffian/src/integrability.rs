//! Complete-integrability defects and the non-integrable convergence checks.
//!
//! The system is completely integrable iff every defect vector
//!   F_ij = x_j^{p_j} df_i/dx_j - x_i^{p_i} df_j/dx_i
//!          + (df_i/dy) f_j - (df_j/dy) f_i,   i < j,
//! is the zero polynomial. The defects also vanish on every formal
//! solution regardless of integrability, which the solver uses as a
//! cross-check.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::poly::{jacobian_y, Poly, PolyError, PolyMap};
use crate::series::{Series, SeriesError, SeriesMat, SeriesVec};
use crate::system::PfaffianSystem;
use crate::verdict::{Certificate, TheoremId, Verdict, VerdictStatus};

#[derive(Debug, Error)]
pub enum IntegrabilityError {
    #[error("pair indices must satisfy 1 <= i < j <= m; got ({0}, {1})")]
    BadPair(usize, usize),
    #[error("subset search exceeded the cap of {cap} candidate subsets")]
    SubsetCapExceeded { cap: usize },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// All defect vectors, keyed by (i, j) with i < j; F_ji = -F_ij is implicit.
#[derive(Debug, Clone)]
pub struct DefectSet {
    defects: BTreeMap<(usize, usize), PolyMap>,
}

impl DefectSet {
    pub fn compute(sys: &PfaffianSystem) -> Result<Self, IntegrabilityError> {
        let m = sys.var_count();
        let mut defects = BTreeMap::new();
        for i in 1..=m {
            for j in (i + 1)..=m {
                defects.insert((i, j), compat_defect(sys, i, j)?);
            }
        }
        Ok(DefectSet { defects })
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&PolyMap> {
        self.defects.get(&(i, j))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &PolyMap)> {
        self.defects.iter()
    }

    pub fn all_zero(&self) -> bool {
        self.defects.values().all(PolyMap::is_zero)
    }
}

/// The exact polynomial defect vector F_ij; no truncation involved.
pub fn compat_defect(
    sys: &PfaffianSystem,
    i: usize,
    j: usize,
) -> Result<PolyMap, IntegrabilityError> {
    let m = sys.var_count();
    if i == 0 || j == 0 || i >= j || j > m {
        return Err(IntegrabilityError::BadPair(i, j));
    }
    let fi = sys.rhs(i);
    let fj = sys.rhs(j);
    let pi = sys.pole_order(i);
    let pj = sys.pole_order(j);
    let ji = jacobian_y(fi)?;
    let jj = jacobian_y(fj)?;
    let n = sys.unknown_count();

    let mut comps = Vec::with_capacity(n);
    for a in 0..n {
        // x_j^{p_j} d(f_i)_a/dx_j - x_i^{p_i} d(f_j)_a/dx_i
        let mut acc = fi
            .comp(a)
            .partial_x(j)?
            .mul_x_power(j, pj)?
            .sub(&fj.comp(a).partial_x(i)?.mul_x_power(i, pi)?)?;
        // + sum_b (d(f_i)_a/dy_b (f_j)_b - d(f_j)_a/dy_b (f_i)_b)
        for b in 0..n {
            acc = acc.add(&ji[a][b].mul(fj.comp(b))?)?;
            acc = acc.sub(&jj[a][b].mul(fi.comp(b))?)?;
        }
        comps.push(acc);
    }
    Ok(PolyMap::new(comps)?)
}

fn first_monomial(p: &Poly) -> String {
    p.terms()
        .next()
        .map(|((xe, ye), c)| {
            Poly::monomial(p.x_count(), p.y_count(), xe.clone(), ye.clone(), c.clone())
                .to_string()
        })
        .unwrap_or_else(|| "0".to_string())
}

/// Exact decision: Holds iff every F_ij is the zero polynomial.
/// For m = 1 there are no pairs and the verdict holds vacuously.
pub fn is_completely_integrable(sys: &PfaffianSystem) -> Result<Verdict, IntegrabilityError> {
    if sys.var_count() < 2 {
        return Ok(Verdict::new(
            TheoremId::Two, // reported under the integrability umbrella; id unused by callers
            VerdictStatus::Holds,
            Certificate::Note("single-variable system: no compatibility pairs".into()),
            "vacuously integrable",
        ));
    }
    let defects = DefectSet::compute(sys)?;
    for ((i, j), fij) in defects.iter() {
        for (c, comp) in fij.comps().iter().enumerate() {
            if !comp.is_zero() {
                return Ok(Verdict::new(
                    TheoremId::Two,
                    VerdictStatus::Fails,
                    Certificate::DefectWitness {
                        i: *i,
                        j: *j,
                        monomial: first_monomial(comp),
                    },
                    format!("not completely integrable: F_{i}{j} component {} is nonzero", c + 1),
                ));
            }
        }
    }
    Ok(Verdict::new(
        TheoremId::Two,
        VerdictStatus::Holds,
        Certificate::Note("every defect F_ij is the zero polynomial".into()),
        "completely integrable",
    ))
}

/// F_ij evaluated componentwise on a solution candidate; must vanish
/// through the truncation whenever phi solves the system.
pub fn defect_on_solution(
    sys: &PfaffianSystem,
    phi: &SeriesVec,
    i: usize,
    j: usize,
) -> Result<SeriesVec, IntegrabilityError> {
    let fij = compat_defect(sys, i, j)?;
    Ok(fij.eval_series(phi)?)
}

/// Scalar case of the non-integrability criterion: a non-integrable
/// system with n = 1 forces any formal solution to converge.
pub fn check_theorem2(
    sys: &PfaffianSystem,
    _phi: &SeriesVec,
) -> Result<Verdict, IntegrabilityError> {
    if sys.unknown_count() != 1 {
        return Ok(Verdict::new(
            TheoremId::Two,
            VerdictStatus::NotApplicable,
            Certificate::None,
            "criterion requires a scalar unknown (n = 1)",
        ));
    }
    let integ = is_completely_integrable(sys)?;
    match integ.status {
        VerdictStatus::Fails => Ok(Verdict::new(
            TheoremId::Two,
            VerdictStatus::Holds,
            integ.certificate,
            "formal solution converges (scalar non-integrable system)",
        )),
        _ => Ok(Verdict::new(
            TheoremId::Two,
            VerdictStatus::NotApplicable,
            Certificate::None,
            "system is completely integrable",
        )),
    }
}

/// Vector case: searches size-n subsets of the nonzero defect components
/// for one whose Jacobian in y is non-degenerate on the solution.
pub fn check_theorem3(
    sys: &PfaffianSystem,
    phi: &SeriesVec,
    subset_cap: usize,
) -> Result<Verdict, IntegrabilityError> {
    let m = sys.var_count();
    let n = sys.unknown_count();
    if m < 2 {
        return Ok(Verdict::new(
            TheoremId::Three,
            VerdictStatus::NotApplicable,
            Certificate::None,
            "criterion requires m >= 2",
        ));
    }
    let defects = DefectSet::compute(sys)?;
    if defects.all_zero() {
        return Ok(Verdict::new(
            TheoremId::Three,
            VerdictStatus::NotApplicable,
            Certificate::None,
            "system is completely integrable",
        ));
    }
    // Collect nonzero scalar components g with their provenance (i, j, row).
    let mut candidates: Vec<((usize, usize, usize), &Poly)> = Vec::new();
    for ((i, j), fij) in defects.iter() {
        for (c, comp) in fij.comps().iter().enumerate() {
            if !comp.is_zero() {
                candidates.push(((*i, *j, c + 1), comp));
            }
        }
    }
    if candidates.len() < n {
        return Ok(Verdict::new(
            TheoremId::Three,
            VerdictStatus::NotApplicable,
            Certificate::None,
            format!(
                "only {} nonzero defect components exist, need {}",
                candidates.len(),
                n
            ),
        ));
    }

    let trunc = phi.trunc();
    let mut examined = 0usize;
    let mut saw_symbolically_nonzero = false;
    let mut subset = (0..n).collect::<Vec<usize>>();
    loop {
        examined += 1;
        if examined > subset_cap {
            return Err(IntegrabilityError::SubsetCapExceeded { cap: subset_cap });
        }
        // Jacobian of the chosen components in y, evaluated at phi.
        let mut sym_rows: Vec<Vec<Poly>> = Vec::with_capacity(n);
        for &idx in &subset {
            let g = candidates[idx].1;
            let row = (1..=n)
                .map(|b| g.partial_y(b))
                .collect::<Result<Vec<_>, _>>()?;
            sym_rows.push(row);
        }
        // Symbolic determinant: zero here means the subset can never work,
        // and does not count toward the inconclusive path.
        let sym_det = poly_det(&sym_rows)?;
        if !sym_det.is_zero() {
            saw_symbolically_nonzero = true;
            let mut eval_rows = Vec::with_capacity(n);
            for row in &sym_rows {
                let entries = row
                    .iter()
                    .map(|p| p.eval_series(phi))
                    .collect::<Result<Vec<Series>, _>>()?;
                eval_rows.push(entries);
            }
            let det = SeriesMat::new(eval_rows)?.det()?;
            if !det.is_zero() {
                let witness = det
                    .terms()
                    .next()
                    .map(|(k, c)| {
                        Series::monomial(det.var_count(), det.trunc(), k.clone(), c.clone())
                            .unwrap()
                            .to_string()
                    })
                    .unwrap();
                let components = subset.iter().map(|&idx| candidates[idx].0).collect();
                return Ok(Verdict::new(
                    TheoremId::Three,
                    VerdictStatus::Holds,
                    Certificate::ComponentSubset {
                        components,
                        det_monomial: witness,
                    },
                    "formal solution converges (non-degenerate defect components)",
                ));
            }
        }
        if !next_combination(&mut subset, candidates.len()) {
            break;
        }
    }
    if saw_symbolically_nonzero {
        Ok(Verdict::new(
            TheoremId::Three,
            VerdictStatus::InconclusiveAtOrder(trunc),
            Certificate::OrderVerifiedThrough { degree: trunc },
            "all candidate determinants vanish through the computed order",
        ))
    } else {
        Ok(Verdict::new(
            TheoremId::Three,
            VerdictStatus::Fails,
            Certificate::Note(
                "every size-n Jacobian of nonzero defect components is identically zero".into(),
            ),
            "no component subset can satisfy the hypothesis",
        ))
    }
}

/// Advances `subset` to the next lexicographic n-combination of 0..len.
fn next_combination(subset: &mut [usize], len: usize) -> bool {
    let n = subset.len();
    let mut i = n;
    while i > 0 {
        i -= 1;
        if subset[i] != i + len - n {
            subset[i] += 1;
            for j in (i + 1)..n {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn poly_det(rows: &[Vec<Poly>]) -> Result<Poly, PolyError> {
    let n = rows.len();
    if n == 1 {
        return Ok(rows[0][0].clone());
    }
    let m = rows[0][0].x_count();
    let yn = rows[0][0].y_count();
    let mut acc = Poly::zero(m, yn);
    for (j, e) in rows[0].iter().enumerate() {
        if e.is_zero() {
            continue;
        }
        let minor: Vec<Vec<Poly>> = rows[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != j)
                    .map(|(_, v)| v.clone())
                    .collect()
            })
            .collect();
        let sub = poly_det(&minor)?;
        let term = e.mul(&sub)?;
        acc = if j % 2 == 0 {
            acc.add(&term)?
        } else {
            acc.sub(&term)?
        };
    }
    Ok(acc)
}

/// Default cap on the subset search.
pub const DEFAULT_SUBSET_CAP: usize = 10_000;
