//! Empirical growth diagnostics for computed coefficient arrays.
//!
//! Everything here is floating point by design: the algebra stays exact
//! in the other modules, while fits and radius estimates are inherently
//! approximate and advisory.

use num_traits::Zero;

use crate::rat::{ln_abs, rat_abs, rat_to_f64, Rat};
use crate::series::SeriesVec;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DiagnosticsError {
    #[error("insufficient data: {got} nonzero points, need at least {need}")]
    InsufficientData { got: usize, need: usize },
}

/// Per-degree coefficient maxima M_d = max_{|k|=d} |c_k| over all
/// components, d = 1..=N.
#[derive(Debug, Clone)]
pub struct GrowthProfile {
    /// M_d as f64 (may overflow to +inf for huge rationals; the log
    /// values below stay finite).
    pub maxima: Vec<f64>,
    /// ln M_d, None where the whole degree vanishes.
    pub log_maxima: Vec<Option<f64>>,
    /// True at position d−1 when every degree-d coefficient is zero.
    pub zero_degrees: Vec<bool>,
    /// True when the whole array is zero.
    pub degenerate: bool,
}

impl GrowthProfile {
    pub fn order(&self) -> u32 {
        self.maxima.len() as u32
    }

    /// CSV emission with header `degree,max_abs_coeff`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("degree,max_abs_coeff\n");
        for (i, m) in self.maxima.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, m));
        }
        out
    }
}

pub fn degree_profile(phi: &SeriesVec) -> GrowthProfile {
    let n = phi.trunc() as usize;
    let mut best: Vec<Option<Rat>> = vec![None; n];
    for comp in phi.comps() {
        for (k, c) in comp.terms() {
            let d = k.degree() as usize;
            if d == 0 || d > n {
                continue;
            }
            let a = rat_abs(c);
            let slot = &mut best[d - 1];
            match slot {
                Some(cur) if *cur >= a => {}
                _ => *slot = Some(a),
            }
        }
    }
    let maxima: Vec<f64> = best
        .iter()
        .map(|b| b.as_ref().map(rat_to_f64).unwrap_or(0.0))
        .collect();
    let log_maxima: Vec<Option<f64>> = best
        .iter()
        .map(|b| b.as_ref().and_then(ln_abs))
        .collect();
    let zero_degrees: Vec<bool> = best.iter().map(|b| b.is_none()).collect();
    let degenerate = zero_degrees.iter().all(|&z| z);
    GrowthProfile {
        maxima,
        log_maxima,
        zero_degrees,
        degenerate,
    }
}

/// Least-squares fit of ln M_d ≈ logC + d·logA + s·ln(d!) over the
/// nonzero degrees.
#[derive(Debug, Clone)]
pub struct GevreyFit {
    /// Gevrey order estimate: 0 suggests convergence, 1 factorial
    /// divergence.
    pub s: f64,
    pub log_a: f64,
    pub log_c: f64,
    /// Coefficient of determination of the fit.
    pub r_squared: f64,
    pub degrees_used: Vec<u32>,
}

fn ln_factorial(d: u32) -> f64 {
    (2..=d).map(|k| (k as f64).ln()).sum()
}

/// Solves a small dense system in f64 by Gaussian elimination with
/// partial pivoting; returns None when singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let (pivot, max) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))?;
        if max < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

pub const MIN_FIT_POINTS: usize = 5;

pub fn gevrey_fit(profile: &GrowthProfile) -> Result<GevreyFit, DiagnosticsError> {
    let points: Vec<(f64, f64, f64)> = profile
        .log_maxima
        .iter()
        .enumerate()
        .filter_map(|(i, lm)| {
            lm.map(|y| {
                let d = (i + 1) as f64;
                (d, ln_factorial((i + 1) as u32), y)
            })
        })
        .collect();
    if points.len() < MIN_FIT_POINTS {
        return Err(DiagnosticsError::InsufficientData {
            got: points.len(),
            need: MIN_FIT_POINTS,
        });
    }
    // Basis [1, d, ln(d!)]; normal equations for (logC, logA, s).
    let mut ata = vec![vec![0.0f64; 3]; 3];
    let mut atb = vec![0.0f64; 3];
    for &(d, lf, y) in &points {
        let row = [1.0, d, lf];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * y;
        }
    }
    let sol = solve_dense(ata, atb).ok_or(DiagnosticsError::InsufficientData {
        got: points.len(),
        need: MIN_FIT_POINTS,
    })?;
    let (log_c, log_a, s) = (sol[0], sol[1], sol[2]);
    let mean_y = points.iter().map(|p| p.2).sum::<f64>() / points.len() as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for &(d, lf, y) in &points {
        let pred = log_c + log_a * d + s * lf;
        ss_res += (y - pred) * (y - pred);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(GevreyFit {
        s,
        log_a,
        log_c,
        r_squared,
        degrees_used: points.iter().map(|p| p.0 as u32).collect(),
    })
}

/// Ray along which a multivariate array is restricted to one variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ray {
    /// x_axis = t, all other variables 0 (1-based axis).
    Axis(usize),
    /// x_1 = x_2 = … = x_m = t.
    Diagonal,
}

/// Cauchy–Hadamard radius estimate 1/max |a_d|^{1/d}, taking the max
/// over the last third of the nonzero degrees of the restricted
/// single-variable series.
pub fn radius_estimate(phi: &SeriesVec, ray: Ray) -> Result<f64, DiagnosticsError> {
    let n = phi.trunc() as usize;
    // |a_d| per degree, max over components.
    let mut best: Vec<Option<Rat>> = vec![None; n];
    for comp in phi.comps() {
        let mut per_degree: Vec<Rat> = vec![Rat::zero(); n + 1];
        for (k, c) in comp.terms() {
            match ray {
                Ray::Axis(axis) => {
                    let d = k.get(axis) as usize;
                    if k.degree() == k.get(axis) && d >= 1 && d <= n {
                        per_degree[d] += c;
                    }
                }
                Ray::Diagonal => {
                    let d = k.degree() as usize;
                    if (1..=n).contains(&d) {
                        per_degree[d] += c;
                    }
                }
            }
        }
        for (d, v) in per_degree.iter().enumerate().skip(1) {
            if v.is_zero() {
                continue;
            }
            let a = rat_abs(v);
            let slot = &mut best[d - 1];
            match slot {
                Some(cur) if *cur >= a => {}
                _ => *slot = Some(a),
            }
        }
    }
    let nonzero: Vec<(usize, f64)> = best
        .iter()
        .enumerate()
        .filter_map(|(i, b)| b.as_ref().and_then(ln_abs).map(|l| (i + 1, l)))
        .collect();
    if nonzero.len() < MIN_FIT_POINTS {
        return Err(DiagnosticsError::InsufficientData {
            got: nonzero.len(),
            need: MIN_FIT_POINTS,
        });
    }
    let tail_start = nonzero.len() - nonzero.len().div_ceil(3);
    let max_root = nonzero[tail_start..]
        .iter()
        .map(|&(d, l)| (l / d as f64).exp())
        .fold(f64::MIN, f64::max);
    Ok(1.0 / max_root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int};
    use crate::series::{MultiIndex, Series};
    use crate::solver::{solve_formal, FreePolicy};
    use crate::system::system_from_expressions;
    use std::collections::BTreeMap;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    fn euler_solution(order: u32) -> SeriesVec {
        let sys = system_from_expressions(1, 1, vec![2], &[vec!["y1 - x1"]]).unwrap();
        solve_formal(&sys, order, &FreePolicy::Zero).unwrap().0.phi
    }

    fn e2_diagonal(order: u32) -> SeriesVec {
        let sys = system_from_expressions(
            2,
            1,
            vec![1, 1],
            &[vec!["y1 + y1^2"], vec!["y1 + y1^2"]],
        )
        .unwrap();
        let mut assign = BTreeMap::new();
        assign.insert(mi(&[1, 1]), vec![rat_int(1)]);
        solve_formal(&sys, order, &FreePolicy::Value(assign))
            .unwrap()
            .0
            .phi
    }

    #[test]
    fn euler_profile_is_factorial() {
        let profile = degree_profile(&euler_solution(6));
        assert_eq!(profile.maxima, vec![1.0, 1.0, 2.0, 6.0, 24.0, 120.0]);
        assert!(!profile.degenerate);
        assert!(profile.zero_degrees.iter().all(|&z| !z));
    }

    #[test]
    fn lacunary_profile_flags_zero_degrees() {
        let profile = degree_profile(&e2_diagonal(6));
        assert_eq!(profile.maxima, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        assert_eq!(
            profile.zero_degrees,
            vec![true, false, true, false, true, false]
        );
    }

    #[test]
    fn zero_solution_is_degenerate() {
        let profile = degree_profile(&SeriesVec::zero(1, 2, 5));
        assert!(profile.degenerate);
    }

    #[test]
    fn synthetic_gevrey_recovery() {
        // M_d = 2^d (d!)^(1/2): exact recovery of (s, logA).
        let n = 20usize;
        let log_maxima: Vec<Option<f64>> = (1..=n)
            .map(|d| Some((d as f64) * 2f64.ln() + 0.5 * ln_factorial(d as u32)))
            .collect();
        let profile = GrowthProfile {
            maxima: vec![1.0; n],
            log_maxima,
            zero_degrees: vec![false; n],
            degenerate: false,
        };
        let fit = gevrey_fit(&profile).unwrap();
        assert!((fit.s - 0.5).abs() < 1e-6, "s = {}", fit.s);
        assert!((fit.log_a - 2f64.ln()).abs() < 1e-6, "logA = {}", fit.log_a);
        assert!(fit.r_squared > 1.0 - 1e-9);
    }

    #[test]
    fn euler_fit_is_factorial_class() {
        let profile = degree_profile(&euler_solution(25));
        let fit = gevrey_fit(&profile).unwrap();
        assert!((0.8..=1.2).contains(&fit.s), "s = {}", fit.s);
    }

    #[test]
    fn e2_fit_is_convergent_class() {
        let profile = degree_profile(&e2_diagonal(24));
        let fit = gevrey_fit(&profile).unwrap();
        assert!((-0.2..=0.2).contains(&fit.s), "s = {}", fit.s);
    }

    #[test]
    fn insufficient_data_paths() {
        let phi = SeriesVec::new(vec![Series::from_terms(
            1,
            4,
            vec![(mi(&[1]), rat_int(1))],
        )
        .unwrap()])
        .unwrap();
        assert!(matches!(
            gevrey_fit(&degree_profile(&phi)),
            Err(DiagnosticsError::InsufficientData { .. })
        ));
        assert!(matches!(
            radius_estimate(&phi, Ray::Axis(1)),
            Err(DiagnosticsError::InsufficientData { .. })
        ));
    }

    #[test]
    fn radius_of_geometric_series() {
        // Σ (1/r)^d t^d with r = 3/4 restricted along axis 1.
        let n = 24u32;
        let r = rat(3, 4);
        let terms: Vec<(MultiIndex, Rat)> = (1..=n)
            .map(|d| {
                let mut c = rat_int(1);
                for _ in 0..d {
                    c /= r.clone();
                }
                (mi(&[d]), c)
            })
            .collect();
        let phi =
            SeriesVec::new(vec![Series::from_terms(1, n, terms).unwrap()]).unwrap();
        let est = radius_estimate(&phi, Ray::Axis(1)).unwrap();
        assert!((est - 0.75).abs() < 0.05 * 0.75, "estimate {est}");
    }

    #[test]
    fn radius_on_e2_diagonal() {
        let est = radius_estimate(&e2_diagonal(24), Ray::Diagonal).unwrap();
        assert!((0.9..=1.1).contains(&est), "estimate {est}");
    }

    #[test]
    fn euler_radius_collapses() {
        let est = radius_estimate(&euler_solution(25), Ray::Axis(1)).unwrap();
        assert!(est < 0.2, "estimate {est}");
    }

    #[test]
    fn csv_shape() {
        let profile = degree_profile(&euler_solution(3));
        let csv = profile.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "degree,max_abs_coeff");
        assert_eq!(lines[1], "1,1");
        assert_eq!(lines.len(), 4);
    }
}
