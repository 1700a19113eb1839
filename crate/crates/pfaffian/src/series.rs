//! Sparse truncated multivariate power series over exact rationals.
//!
//! A `Series` holds finitely many terms of total degree at most `trunc`;
//! everything of higher total degree is unknown, not zero. Binary
//! operations therefore truncate to the minimum of the operand
//! truncations, never claiming precision that is not actually held.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::rat::{format_rat, Rat};

/// Exponent tuple k = (k_1, ..., k_m); |k| is the total degree.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(m: usize) -> Self {
        MultiIndex(vec![0; m])
    }

    /// Unit index e_axis (1-based axis).
    pub fn unit(m: usize, axis: usize) -> Self {
        let mut v = vec![0; m];
        v[axis - 1] = 1;
        MultiIndex(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Exponent of the 1-based axis.
    pub fn get(&self, axis: usize) -> u32 {
        self.0[axis - 1]
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Componentwise subtraction; None if any entry would go negative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<u32>>>()
            .map(MultiIndex)
    }

    /// All indices of total degree exactly `d` over `m` variables,
    /// in lexicographic order.
    pub fn all_of_degree(m: usize, d: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; m];
        fn rec(cur: &mut Vec<u32>, pos: usize, rem: u32, out: &mut Vec<MultiIndex>) {
            if pos + 1 == cur.len() {
                cur[pos] = rem;
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for v in 0..=rem {
                cur[pos] = v;
                rec(cur, pos + 1, rem - v, out);
            }
        }
        if m == 0 {
            if d == 0 {
                out.push(MultiIndex(Vec::new()));
            }
            return out;
        }
        rec(&mut cur, 0, d, &mut out);
        out
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SeriesError {
    #[error("variable-count mismatch: {0} vs {1}")]
    VarCountMismatch(usize, usize),
    #[error("axis {axis} out of range for {m} variables")]
    AxisOutOfRange { axis: usize, m: usize },
    #[error("truncation mismatch: {0} vs {1}")]
    TruncMismatch(u32, u32),
    #[error("cannot differentiate a series truncated at degree 0")]
    TruncTooSmall,
    #[error("term index {index} exceeds truncation degree {trunc}")]
    TermBeyondTrunc { index: MultiIndex, trunc: u32 },
    #[error("term index has {0} entries, expected {1}")]
    BadIndexLength(usize, usize),
    #[error("matrix is not a unit: determinant has zero constant term")]
    NonUnitMatrix,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// Sparse truncated power series: finitely many nonzero coefficients,
/// all of total degree <= trunc.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Series {
    m: usize,
    trunc: u32,
    terms: BTreeMap<MultiIndex, Rat>,
}

impl Series {
    pub fn zero(m: usize, trunc: u32) -> Self {
        Series {
            m,
            trunc,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(m: usize, trunc: u32, value: Rat) -> Self {
        let mut s = Series::zero(m, trunc);
        if !value.is_zero() {
            s.terms.insert(MultiIndex::zero(m), value);
        }
        s
    }

    pub fn one(m: usize, trunc: u32) -> Self {
        Series::constant(m, trunc, Rat::one())
    }

    pub fn monomial(m: usize, trunc: u32, index: MultiIndex, coeff: Rat) -> Result<Self, SeriesError> {
        if index.len() != m {
            return Err(SeriesError::BadIndexLength(index.len(), m));
        }
        if index.degree() > trunc {
            return Err(SeriesError::TermBeyondTrunc { index, trunc });
        }
        let mut s = Series::zero(m, trunc);
        if !coeff.is_zero() {
            s.terms.insert(index, coeff);
        }
        Ok(s)
    }

    /// Builds a series from raw terms, dropping zeros and rejecting
    /// indices beyond the truncation degree.
    pub fn from_terms<I>(m: usize, trunc: u32, terms: I) -> Result<Self, SeriesError>
    where
        I: IntoIterator<Item = (MultiIndex, Rat)>,
    {
        let mut s = Series::zero(m, trunc);
        for (k, c) in terms {
            if k.len() != m {
                return Err(SeriesError::BadIndexLength(k.len(), m));
            }
            if k.degree() > trunc {
                return Err(SeriesError::TermBeyondTrunc { index: k, trunc });
            }
            if c.is_zero() {
                continue;
            }
            let entry = s.terms.entry(k).or_insert_with(Rat::zero);
            *entry += c;
            if entry.is_zero() {
                // re-fetch key not possible here; clean below
            }
        }
        s.terms.retain(|_, c| !c.is_zero());
        Ok(s)
    }

    pub fn var_count(&self) -> usize {
        self.m
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Rat)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, k: &MultiIndex) -> Rat {
        self.terms.get(k).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn constant_term(&self) -> Rat {
        self.coeff(&MultiIndex::zero(self.m))
    }

    fn check_m(&self, other: &Series) -> Result<(), SeriesError> {
        if self.m != other.m {
            return Err(SeriesError::VarCountMismatch(self.m, other.m));
        }
        Ok(())
    }

    fn check_axis(&self, axis: usize) -> Result<(), SeriesError> {
        if axis == 0 || axis > self.m {
            return Err(SeriesError::AxisOutOfRange { axis, m: self.m });
        }
        Ok(())
    }

    /// Coefficientwise sum; result truncation is the minimum of the operands.
    pub fn add(&self, other: &Series) -> Result<Series, SeriesError> {
        self.check_m(other)?;
        let trunc = self.trunc.min(other.trunc);
        let mut terms = BTreeMap::new();
        for (k, c) in self.terms.iter().chain(other.terms.iter()) {
            if k.degree() > trunc {
                continue;
            }
            let entry = terms.entry(k.clone()).or_insert_with(Rat::zero);
            *entry += c;
        }
        terms.retain(|_, c: &mut Rat| !c.is_zero());
        Ok(Series {
            m: self.m,
            trunc,
            terms,
        })
    }

    pub fn neg(&self) -> Series {
        Series {
            m: self.m,
            trunc: self.trunc,
            terms: self.terms.iter().map(|(k, c)| (k.clone(), -c.clone())).collect(),
        }
    }

    pub fn sub(&self, other: &Series) -> Result<Series, SeriesError> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rat) -> Series {
        if c.is_zero() {
            return Series::zero(self.m, self.trunc);
        }
        Series {
            m: self.m,
            trunc: self.trunc,
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect(),
        }
    }

    /// Cauchy product, discarding all result terms of total degree > trunc.
    pub fn mul(&self, other: &Series) -> Result<Series, SeriesError> {
        self.check_m(other)?;
        let trunc = self.trunc.min(other.trunc);
        let mut terms: BTreeMap<MultiIndex, Rat> = BTreeMap::new();
        for (ka, ca) in &self.terms {
            let da = ka.degree();
            if da > trunc {
                continue;
            }
            for (kb, cb) in &other.terms {
                if da + kb.degree() > trunc {
                    continue;
                }
                let k = ka.add(kb);
                let entry = terms.entry(k).or_insert_with(Rat::zero);
                *entry += ca * cb;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Ok(Series {
            m: self.m,
            trunc,
            terms,
        })
    }

    /// Partial derivative in the given 1-based axis; lowers trunc by one.
    pub fn partial(&self, axis: usize) -> Result<Series, SeriesError> {
        self.check_axis(axis)?;
        if self.trunc == 0 {
            return Err(SeriesError::TruncTooSmall);
        }
        let trunc = self.trunc - 1;
        let mut terms = BTreeMap::new();
        for (k, c) in &self.terms {
            let e = k.get(axis);
            if e == 0 {
                continue;
            }
            let dk = k.checked_sub(&MultiIndex::unit(self.m, axis)).unwrap();
            if dk.degree() > trunc {
                continue;
            }
            let v = c * Rat::from_integer(e.into());
            if !v.is_zero() {
                terms.insert(dk, v);
            }
        }
        Ok(Series {
            m: self.m,
            trunc,
            terms,
        })
    }

    /// Multiplies by x_axis^p; every shifted term is retained exactly, so
    /// the result truncation rises by p.
    pub fn mul_axis_power(&self, axis: usize, p: u32) -> Result<Series, SeriesError> {
        self.check_axis(axis)?;
        let mut shift = MultiIndex::zero(self.m);
        shift.0[axis - 1] = p;
        let terms = self
            .terms
            .iter()
            .map(|(k, c)| (k.add(&shift), c.clone()))
            .collect();
        Ok(Series {
            m: self.m,
            trunc: self.trunc + p,
            terms,
        })
    }

    /// Minimum exponent of x_axis over the stored terms; None (infinity)
    /// for the zero series. The value certifies divisibility only through
    /// the computed truncation.
    pub fn ord_axis(&self, axis: usize) -> Result<Option<u32>, SeriesError> {
        self.check_axis(axis)?;
        Ok(self.terms.keys().map(|k| k.get(axis)).min())
    }

    /// Sets x_axis = 0: drops every term with a positive exponent in the
    /// given axis, keeping the variable count and truncation.
    pub fn restrict_axis(&self, axis: usize) -> Result<Series, SeriesError> {
        self.check_axis(axis)?;
        Ok(Series {
            m: self.m,
            trunc: self.trunc,
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| k.get(axis) == 0)
                .map(|(k, c)| (k.clone(), c.clone()))
                .collect(),
        })
    }

    /// Lowers the truncation degree, discarding higher-degree terms.
    pub fn retrunc(&self, trunc: u32) -> Series {
        if trunc >= self.trunc {
            let mut s = self.clone();
            s.trunc = self.trunc;
            return s;
        }
        Series {
            m: self.m,
            trunc,
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| k.degree() <= trunc)
                .map(|(k, c)| (k.clone(), c.clone()))
                .collect(),
        }
    }

    /// Multiplicative inverse of a unit series (nonzero constant term),
    /// by Newton iteration b <- b(2 - ab); exact through trunc.
    pub fn inverse(&self) -> Result<Series, SeriesError> {
        let a0 = self.constant_term();
        if a0.is_zero() {
            return Err(SeriesError::NonUnitMatrix);
        }
        let mut b = Series::constant(self.m, self.trunc, Rat::one() / a0);
        let two = Series::constant(self.m, self.trunc, Rat::from_integer(2.into()));
        // Each step doubles the valid order; trunc+1 coefficleading orders suffice.
        let mut order = 1u64;
        while order <= self.trunc as u64 {
            let ab = self.mul(&b)?;
            b = b.mul(&two.sub(&ab)?)?;
            order *= 2;
        }
        Ok(b)
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in &self.terms {
            let mono = format_monomial(k);
            let cs = format_rat(c);
            if first {
                first = false;
                if mono.is_empty() {
                    write!(f, "{cs}")?;
                } else if cs == "1" {
                    write!(f, "{mono}")?;
                } else if cs == "-1" {
                    write!(f, "-{mono}")?;
                } else {
                    write!(f, "{cs}*{mono}")?;
                }
            } else {
                let (sign, mag) = if cs.starts_with('-') {
                    ("-", cs.trim_start_matches('-').to_string())
                } else {
                    ("+", cs)
                };
                if mono.is_empty() {
                    write!(f, " {sign} {mag}")?;
                } else if mag == "1" {
                    write!(f, " {sign} {mono}")?;
                } else {
                    write!(f, " {sign} {mag}*{mono}")?;
                }
            }
        }
        Ok(())
    }
}

fn format_monomial(k: &MultiIndex) -> String {
    let mut parts = Vec::new();
    for (i, e) in k.0.iter().enumerate() {
        if *e == 0 {
            continue;
        }
        if *e == 1 {
            parts.push(format!("x{}", i + 1));
        } else {
            parts.push(format!("x{}^{}", i + 1, e));
        }
    }
    parts.join("*")
}

/// Vector of n series sharing variable count and truncation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesVec {
    comps: Vec<Series>,
}

impl SeriesVec {
    pub fn new(comps: Vec<Series>) -> Result<Self, SeriesError> {
        if let Some(first) = comps.first() {
            for c in &comps[1..] {
                if c.var_count() != first.var_count() {
                    return Err(SeriesError::VarCountMismatch(first.var_count(), c.var_count()));
                }
                if c.trunc() != first.trunc() {
                    return Err(SeriesError::TruncMismatch(first.trunc(), c.trunc()));
                }
            }
        }
        Ok(SeriesVec { comps })
    }

    pub fn zero(n: usize, m: usize, trunc: u32) -> Self {
        SeriesVec {
            comps: vec![Series::zero(m, trunc); n],
        }
    }

    pub fn len(&self) -> usize {
        self.comps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn comp(&self, i: usize) -> &Series {
        &self.comps[i]
    }

    pub fn comps(&self) -> &[Series] {
        &self.comps
    }

    pub fn var_count(&self) -> usize {
        self.comps.first().map_or(0, Series::var_count)
    }

    pub fn trunc(&self) -> u32 {
        self.comps.first().map_or(0, Series::trunc)
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Series::is_zero)
    }

    pub fn add(&self, other: &SeriesVec) -> Result<SeriesVec, SeriesError> {
        if self.len() != other.len() {
            return Err(SeriesError::ShapeMismatch(format!(
                "vector lengths {} vs {}",
                self.len(),
                other.len()
            )));
        }
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_, _>>()?;
        Ok(SeriesVec { comps })
    }

    pub fn sub(&self, other: &SeriesVec) -> Result<SeriesVec, SeriesError> {
        if self.len() != other.len() {
            return Err(SeriesError::ShapeMismatch(format!(
                "vector lengths {} vs {}",
                self.len(),
                other.len()
            )));
        }
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<_, _>>()?;
        Ok(SeriesVec { comps })
    }

    pub fn retrunc(&self, trunc: u32) -> SeriesVec {
        SeriesVec {
            comps: self.comps.iter().map(|c| c.retrunc(trunc)).collect(),
        }
    }

    pub fn map<F: FnMut(&Series) -> Result<Series, SeriesError>>(
        &self,
        mut f: F,
    ) -> Result<SeriesVec, SeriesError> {
        let comps = self.comps.iter().map(|c| f(c)).collect::<Result<_, _>>()?;
        Ok(SeriesVec { comps })
    }
}

/// Square matrix of series sharing variable count and truncation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesMat {
    n: usize,
    entries: Vec<Vec<Series>>,
}

impl SeriesMat {
    pub fn new(entries: Vec<Vec<Series>>) -> Result<Self, SeriesError> {
        let n = entries.len();
        let mut probe: Option<(usize, u32)> = None;
        for row in &entries {
            if row.len() != n {
                return Err(SeriesError::ShapeMismatch("matrix is not square".into()));
            }
            for e in row {
                match probe {
                    None => probe = Some((e.var_count(), e.trunc())),
                    Some((m, t)) => {
                        if e.var_count() != m {
                            return Err(SeriesError::VarCountMismatch(m, e.var_count()));
                        }
                        if e.trunc() != t {
                            return Err(SeriesError::TruncMismatch(t, e.trunc()));
                        }
                    }
                }
            }
        }
        Ok(SeriesMat { n, entries })
    }

    pub fn identity(n: usize, m: usize, trunc: u32) -> Self {
        let entries = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            Series::one(m, trunc)
                        } else {
                            Series::zero(m, trunc)
                        }
                    })
                    .collect()
            })
            .collect();
        SeriesMat { n, entries }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &Series {
        &self.entries[i][j]
    }

    pub fn var_count(&self) -> usize {
        self.entries
            .first()
            .and_then(|r| r.first())
            .map_or(0, Series::var_count)
    }

    pub fn trunc(&self) -> u32 {
        self.entries
            .first()
            .and_then(|r| r.first())
            .map_or(0, Series::trunc)
    }

    /// M - c*I for a rational scalar c.
    pub fn sub_scalar_identity(&self, c: &Rat) -> Result<SeriesMat, SeriesError> {
        let mut entries = self.entries.clone();
        let m = self.var_count();
        let trunc = self.trunc();
        for (i, row) in entries.iter_mut().enumerate() {
            row[i] = row[i].sub(&Series::constant(m, trunc, c.clone()))?;
        }
        SeriesMat::new(entries)
    }

    /// Determinant via cofactor expansion; n stays small in practice.
    pub fn det(&self) -> Result<Series, SeriesError> {
        let m = self.var_count();
        let trunc = self.trunc();
        if self.n == 0 {
            return Ok(Series::one(m, trunc));
        }
        det_rec(&self.entries)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &SeriesVec) -> Result<SeriesVec, SeriesError> {
        if v.len() != self.n {
            return Err(SeriesError::ShapeMismatch(format!(
                "matrix size {} vs vector length {}",
                self.n,
                v.len()
            )));
        }
        let m = self.var_count();
        let trunc = self.trunc().min(v.trunc());
        let mut comps = Vec::with_capacity(self.n);
        for row in &self.entries {
            let mut acc = Series::zero(m, trunc);
            for (e, x) in row.iter().zip(v.comps()) {
                acc = acc.add(&e.mul(x)?)?;
            }
            comps.push(acc);
        }
        SeriesVec::new(comps)
    }

    /// Solves M u = r exactly through the common truncation, by Gaussian
    /// elimination with unit pivots. Requires det(M) to have a nonzero
    /// constant term; otherwise reports `NonUnitMatrix` (the resonant case).
    pub fn solve_linear_series(&self, r: &SeriesVec) -> Result<SeriesVec, SeriesError> {
        if r.len() != self.n {
            return Err(SeriesError::ShapeMismatch(format!(
                "matrix size {} vs vector length {}",
                self.n,
                r.len()
            )));
        }
        let n = self.n;
        let trunc = self.trunc().min(r.trunc());
        let mut a: Vec<Vec<Series>> = self
            .entries
            .iter()
            .map(|row| row.iter().map(|e| e.retrunc(trunc)).collect())
            .collect();
        let mut b: Vec<Series> = r.comps().iter().map(|e| e.retrunc(trunc)).collect();

        for col in 0..n {
            // A unit pivot exists iff the constant matrix is nonsingular in
            // the remaining block.
            let pivot = (col..n).find(|&row| !a[row][col].constant_term().is_zero());
            let pivot = match pivot {
                Some(p) => p,
                None => return Err(SeriesError::NonUnitMatrix),
            };
            a.swap(col, pivot);
            b.swap(col, pivot);
            let inv = a[col][col].inverse()?;
            for j in col..n {
                a[col][j] = a[col][j].mul(&inv)?;
            }
            b[col] = b[col].mul(&inv)?;
            for row in 0..n {
                if row == col || a[row][col].is_zero() {
                    continue;
                }
                let factor = a[row][col].clone();
                for j in col..n {
                    let t = factor.mul(&a[col][j])?;
                    a[row][j] = a[row][j].sub(&t)?;
                }
                let t = factor.mul(&b[col])?;
                b[row] = b[row].sub(&t)?;
            }
        }
        SeriesVec::new(b)
    }
}

fn det_rec(entries: &[Vec<Series>]) -> Result<Series, SeriesError> {
    let n = entries.len();
    if n == 1 {
        return Ok(entries[0][0].clone());
    }
    let m = entries[0][0].var_count();
    let trunc = entries[0][0].trunc();
    let mut acc = Series::zero(m, trunc);
    for (j, e) in entries[0].iter().enumerate() {
        if e.is_zero() {
            continue;
        }
        let minor: Vec<Vec<Series>> = entries[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != j)
                    .map(|(_, v)| v.clone())
                    .collect()
            })
            .collect();
        let sub = det_rec(&minor)?;
        let term = e.mul(&sub)?;
        acc = if j % 2 == 0 {
            acc.add(&term)?
        } else {
            acc.sub(&term)?
        };
    }
    Ok(acc)
}
