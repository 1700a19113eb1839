//! Exact polynomials in (x_1..x_m, y_1..y_n) and their calculus.
//!
//! These carry the right-hand sides of the system: every coefficient is a
//! rational, every derivative and product is exact.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::rat::{format_rat, Rat};
use crate::series::{MultiIndex, Series, SeriesError, SeriesVec};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolyError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("axis {axis} out of range (bound {bound})")]
    AxisOutOfRange { axis: usize, bound: usize },
    #[error("substituted series must have no constant term (component {0})")]
    ConstantTermInSubstitution(usize),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Sparse polynomial over Q in m x-variables and n y-variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly {
    m: usize,
    n: usize,
    terms: BTreeMap<(MultiIndex, MultiIndex), Rat>,
}

impl Poly {
    pub fn zero(m: usize, n: usize) -> Self {
        Poly {
            m,
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(m: usize, n: usize, c: Rat) -> Self {
        let mut p = Poly::zero(m, n);
        if !c.is_zero() {
            p.terms
                .insert((MultiIndex::zero(m), MultiIndex::zero(n)), c);
        }
        p
    }

    pub fn monomial(m: usize, n: usize, xexp: MultiIndex, yexp: MultiIndex, c: Rat) -> Self {
        let mut p = Poly::zero(m, n);
        if !c.is_zero() {
            p.terms.insert((xexp, yexp), c);
        }
        p
    }

    pub fn from_terms<I>(m: usize, n: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (MultiIndex, MultiIndex, Rat)>,
    {
        let mut p = Poly::zero(m, n);
        for (xe, ye, c) in terms {
            p.add_term(xe, ye, c);
        }
        p
    }

    pub fn x_count(&self) -> usize {
        self.m
    }

    pub fn y_count(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(MultiIndex, MultiIndex), &Rat)> {
        self.terms.iter()
    }

    /// The coefficient of a given monomial.
    pub fn coeff(&self, xexp: &MultiIndex, yexp: &MultiIndex) -> Rat {
        self.terms
            .get(&(xexp.clone(), yexp.clone()))
            .cloned()
            .unwrap_or_else(Rat::zero)
    }

    fn add_term(&mut self, xe: MultiIndex, ye: MultiIndex, c: Rat) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry((xe, ye)).or_insert_with(Rat::zero);
        *entry += c;
        self.terms.retain(|_, v| !v.is_zero());
    }

    fn check_shape(&self, other: &Poly) -> Result<(), PolyError> {
        if self.m != other.m || self.n != other.n {
            return Err(PolyError::ShapeMismatch(format!(
                "({},{}) vs ({},{})",
                self.m, self.n, other.m, other.n
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for ((xe, ye), c) in &other.terms {
            out.add_term(xe.clone(), ye.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> Poly {
        Poly {
            m: self.m,
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.clone(), -c.clone()))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rat) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.m, self.n);
        }
        Poly {
            m: self.m,
            n: self.n,
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check_shape(other)?;
        let mut out = Poly::zero(self.m, self.n);
        for ((xa, ya), ca) in &self.terms {
            for ((xb, yb), cb) in &other.terms {
                out.add_term(xa.add(xb), ya.add(yb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, e: u32) -> Result<Poly, PolyError> {
        let mut acc = Poly::constant(self.m, self.n, Rat::one());
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Exact partial derivative in x_axis (1-based).
    pub fn partial_x(&self, axis: usize) -> Result<Poly, PolyError> {
        if axis == 0 || axis > self.m {
            return Err(PolyError::AxisOutOfRange {
                axis,
                bound: self.m,
            });
        }
        let mut out = Poly::zero(self.m, self.n);
        for ((xe, ye), c) in &self.terms {
            let e = xe.get(axis);
            if e == 0 {
                continue;
            }
            let dx = xe.checked_sub(&MultiIndex::unit(self.m, axis)).unwrap();
            out.add_term(dx, ye.clone(), c * Rat::from_integer(e.into()));
        }
        Ok(out)
    }

    /// Exact partial derivative in y_axis (1-based).
    pub fn partial_y(&self, axis: usize) -> Result<Poly, PolyError> {
        if axis == 0 || axis > self.n {
            return Err(PolyError::AxisOutOfRange {
                axis,
                bound: self.n,
            });
        }
        let mut out = Poly::zero(self.m, self.n);
        for ((xe, ye), c) in &self.terms {
            let e = ye.get(axis);
            if e == 0 {
                continue;
            }
            let dy = ye.checked_sub(&MultiIndex::unit(self.n, axis)).unwrap();
            out.add_term(xe.clone(), dy, c * Rat::from_integer(e.into()));
        }
        Ok(out)
    }

    /// Multiplies by the x-monomial x_axis^p.
    pub fn mul_x_power(&self, axis: usize, p: u32) -> Result<Poly, PolyError> {
        if axis == 0 || axis > self.m {
            return Err(PolyError::AxisOutOfRange {
                axis,
                bound: self.m,
            });
        }
        let mut shift = MultiIndex::zero(self.m);
        shift.0[axis - 1] = p;
        Ok(Poly {
            m: self.m,
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|((xe, ye), c)| ((xe.add(&shift), ye.clone()), c.clone()))
                .collect(),
        })
    }

    /// Evaluates at y = phi, x mapping to itself, in the truncated ring at
    /// phi's truncation. phi must have no constant terms, so every output
    /// coefficient through the truncation is exact.
    pub fn eval_series(&self, phi: &SeriesVec) -> Result<Series, PolyError> {
        if phi.len() != self.n {
            return Err(PolyError::ShapeMismatch(format!(
                "expected {} substituted components, got {}",
                self.n,
                phi.len()
            )));
        }
        let m = if self.n == 0 { self.m } else { phi.var_count() };
        if m != self.m {
            return Err(PolyError::ShapeMismatch(format!(
                "substituted series over {} variables, polynomial over {}",
                m, self.m
            )));
        }
        for (j, c) in phi.comps().iter().enumerate() {
            if !c.constant_term().is_zero() {
                return Err(PolyError::ConstantTermInSubstitution(j + 1));
            }
        }
        let trunc = phi.trunc();
        // Cache powers of each substituted component.
        let mut powers: Vec<Vec<Series>> = phi
            .comps()
            .iter()
            .map(|c| vec![Series::one(self.m, trunc), c.clone()])
            .collect();
        let mut acc = Series::zero(self.m, trunc);
        for ((xe, ye), c) in &self.terms {
            if xe.degree() > trunc {
                continue;
            }
            let mut term = Series::monomial(self.m, trunc, xe.clone(), c.clone())?;
            for j in 0..self.n {
                let e = ye.get(j + 1) as usize;
                if e == 0 {
                    continue;
                }
                while powers[j].len() <= e {
                    let next = powers[j].last().unwrap().mul(phi.comp(j))?;
                    powers[j].push(next);
                }
                term = term.mul(&powers[j][e])?;
            }
            acc = acc.add(&term)?;
        }
        Ok(acc)
    }

    /// Evaluation at x = 0, y = 0 (the constant monomial's coefficient).
    pub fn at_origin(&self) -> Rat {
        self.coeff(&MultiIndex::zero(self.m), &MultiIndex::zero(self.n))
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for ((xe, ye), c) in self.terms.iter().rev() {
            let mono = format_xy_monomial(xe, ye);
            let cs = format_rat(c);
            let (sign, mag) = if let Some(stripped) = cs.strip_prefix('-') {
                ("-", stripped.to_string())
            } else {
                ("+", cs)
            };
            if first {
                first = false;
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if mono.is_empty() {
                write!(f, "{mag}")?;
            } else if mag == "1" {
                write!(f, "{mono}")?;
            } else {
                // Fractions need parentheses so the printed form re-parses.
                if mag.contains('/') {
                    write!(f, "({mag})*{mono}")?;
                } else {
                    write!(f, "{mag}*{mono}")?;
                }
            }
        }
        Ok(())
    }
}

fn format_xy_monomial(xe: &MultiIndex, ye: &MultiIndex) -> String {
    let mut parts = Vec::new();
    for (i, e) in xe.0.iter().enumerate() {
        if *e == 0 {
            continue;
        }
        if *e == 1 {
            parts.push(format!("x{}", i + 1));
        } else {
            parts.push(format!("x{}^{}", i + 1, e));
        }
    }
    for (i, e) in ye.0.iter().enumerate() {
        if *e == 0 {
            continue;
        }
        if *e == 1 {
            parts.push(format!("y{}", i + 1));
        } else {
            parts.push(format!("y{}^{}", i + 1, e));
        }
    }
    parts.join("*")
}

/// The n scalar components of one right-hand side f_i.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyMap {
    comps: Vec<Poly>,
}

impl PolyMap {
    pub fn new(comps: Vec<Poly>) -> Result<Self, PolyError> {
        if let Some(first) = comps.first() {
            for c in &comps[1..] {
                if c.x_count() != first.x_count() || c.y_count() != first.y_count() {
                    return Err(PolyError::ShapeMismatch(
                        "components have differing variable counts".into(),
                    ));
                }
            }
        }
        Ok(PolyMap { comps })
    }

    pub fn len(&self) -> usize {
        self.comps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn comp(&self, i: usize) -> &Poly {
        &self.comps[i]
    }

    pub fn comps(&self) -> &[Poly] {
        &self.comps
    }

    pub fn x_count(&self) -> usize {
        self.comps.first().map_or(0, Poly::x_count)
    }

    pub fn y_count(&self) -> usize {
        self.comps.first().map_or(0, Poly::y_count)
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Poly::is_zero)
    }

    /// Componentwise evaluation at y = phi.
    pub fn eval_series(&self, phi: &SeriesVec) -> Result<SeriesVec, PolyError> {
        let comps = self
            .comps
            .iter()
            .map(|p| p.eval_series(phi))
            .collect::<Result<Vec<_>, _>>()?;
        SeriesVec::new(comps).map_err(PolyError::from)
    }
}

/// Symbolic Jacobian in y: entry (a, b) = d(component a)/d y_b.
pub fn jacobian_y(fm: &PolyMap) -> Result<Vec<Vec<Poly>>, PolyError> {
    let n = fm.y_count();
    if fm.len() != n {
        return Err(PolyError::ShapeMismatch(format!(
            "map has {} components but {} y-variables",
            fm.len(),
            n
        )));
    }
    (0..n)
        .map(|a| (1..=n).map(|b| fm.comp(a).partial_y(b)).collect())
        .collect()
}

/// Square rational matrix; holds Jacobians evaluated at the origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatMat {
    n: usize,
    entries: Vec<Vec<Rat>>,
}

impl RatMat {
    pub fn new(entries: Vec<Vec<Rat>>) -> Result<Self, PolyError> {
        let n = entries.len();
        for row in &entries {
            if row.len() != n {
                return Err(PolyError::ShapeMismatch("matrix is not square".into()));
            }
        }
        Ok(RatMat { n, entries })
    }

    pub fn zero(n: usize) -> Self {
        RatMat {
            n,
            entries: vec![vec![Rat::zero(); n]; n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RatMat::zero(n);
        for i in 0..n {
            m.entries[i][i] = Rat::one();
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &Rat {
        &self.entries[i][j]
    }

    pub fn rows(&self) -> &[Vec<Rat>] {
        &self.entries
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rat) {
        self.entries[i][j] = v;
    }

    /// Exact determinant by fraction-free-enough Gaussian elimination.
    pub fn det(&self) -> Rat {
        let n = self.n;
        if n == 0 {
            return Rat::one();
        }
        let mut a = self.entries.clone();
        let mut det = Rat::one();
        for col in 0..n {
            let pivot = (col..n).find(|&r| !a[r][col].is_zero());
            let pivot = match pivot {
                Some(p) => p,
                None => return Rat::zero(),
            };
            if pivot != col {
                a.swap(col, pivot);
                det = -det;
            }
            det *= a[col][col].clone();
            let inv = Rat::one() / a[col][col].clone();
            for row in (col + 1)..n {
                if a[row][col].is_zero() {
                    continue;
                }
                let factor = &a[row][col] * &inv;
                for j in col..n {
                    let t = &factor * &a[col][j];
                    a[row][j] -= t;
                }
            }
        }
        det
    }

    /// M - c*I.
    pub fn sub_scalar_identity(&self, c: &Rat) -> RatMat {
        let mut out = self.clone();
        for i in 0..self.n {
            out.entries[i][i] -= c;
        }
        out
    }
}

/// Jacobian in y evaluated at x = 0, y = 0: picks out the monomials that
/// are linear in one y-variable with zero x-exponent.
pub fn jacobian_y_at_origin(fm: &PolyMap) -> Result<RatMat, PolyError> {
    let n = fm.y_count();
    if fm.len() != n {
        return Err(PolyError::ShapeMismatch(format!(
            "map has {} components but {} y-variables",
            fm.len(),
            n
        )));
    }
    let m = fm.x_count();
    let mut out = RatMat::zero(n);
    let x0 = MultiIndex::zero(m);
    for a in 0..n {
        for b in 0..n {
            let yb = MultiIndex::unit(n, b + 1);
            out.set(a, b, fm.comp(a).coeff(&x0, &yb));
        }
    }
    Ok(out)
}
