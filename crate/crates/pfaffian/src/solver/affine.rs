//! Affine forms over the rationals in a set of deferred free parameters.
//!
//! When a per-index linear system is rank-deficient, the solver does not
//! commit a value immediately: it introduces a fresh parameter λ_k and
//! carries coefficients as affine expressions `constant + Σ a_k λ_k`.
//! Later consistency rows can then pin a parameter exactly. Products of
//! two non-constant forms fall outside the affine world; the solver
//! resolves all live parameters by policy before retrying such a product.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use crate::rat::{format_rat, Rat};

/// Raised when a product of two genuinely non-constant affine forms is
/// requested; the caller must resolve parameters and retry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonlinearProduct;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Affine {
    constant: Rat,
    linear: BTreeMap<u32, Rat>,
}

impl Affine {
    pub fn zero() -> Self {
        Affine::default()
    }

    pub fn from_const(c: Rat) -> Self {
        Affine {
            constant: c,
            linear: BTreeMap::new(),
        }
    }

    pub fn lambda(id: u32) -> Self {
        let mut linear = BTreeMap::new();
        linear.insert(id, Rat::from_integer(1.into()));
        Affine {
            constant: Rat::zero(),
            linear,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.linear.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.linear.is_empty()
    }

    /// The constant value, if the form carries no parameters.
    pub fn constant_value(&self) -> Option<&Rat> {
        if self.linear.is_empty() {
            Some(&self.constant)
        } else {
            None
        }
    }

    pub fn constant_part(&self) -> &Rat {
        &self.constant
    }

    pub fn lambda_ids(&self) -> impl DoubleEndedIterator<Item = u32> + '_ {
        self.linear.keys().copied()
    }

    pub fn lambda_coeff(&self, id: u32) -> Option<&Rat> {
        self.linear.get(&id)
    }

    pub fn add(&self, other: &Affine) -> Affine {
        let mut out = self.clone();
        out.constant += &other.constant;
        for (id, c) in &other.linear {
            let e = out.linear.entry(*id).or_insert_with(Rat::zero);
            *e += c;
            if e.is_zero() {
                out.linear.remove(id);
            }
        }
        out
    }

    pub fn neg(&self) -> Affine {
        Affine {
            constant: -self.constant.clone(),
            linear: self.linear.iter().map(|(id, c)| (*id, -c.clone())).collect(),
        }
    }

    pub fn sub(&self, other: &Affine) -> Affine {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rat) -> Affine {
        if c.is_zero() {
            return Affine::zero();
        }
        Affine {
            constant: &self.constant * c,
            linear: self.linear.iter().map(|(id, a)| (*id, a * c)).collect(),
        }
    }

    /// Affine-by-affine product; fails unless at least one factor is constant.
    pub fn mul(&self, other: &Affine) -> Result<Affine, NonlinearProduct> {
        if self.is_constant() {
            Ok(other.scale(&self.constant))
        } else if other.is_constant() {
            Ok(self.scale(&other.constant))
        } else {
            Err(NonlinearProduct)
        }
    }

    /// Replaces λ_id with `value`; `value` must not itself mention λ_id.
    pub fn substitute(&self, id: u32, value: &Affine) -> Affine {
        match self.linear.get(&id) {
            None => self.clone(),
            Some(coef) => {
                let coef = coef.clone();
                let mut out = self.clone();
                out.linear.remove(&id);
                out.add(&value.scale(&coef))
            }
        }
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        if !self.constant.is_zero() || self.linear.is_empty() {
            write!(f, "{}", format_rat(&self.constant))?;
            first = false;
        }
        for (id, c) in &self.linear {
            if first {
                write!(f, "{}*L{}", format_rat(c), id)?;
                first = false;
            } else {
                write!(f, " + {}*L{}", format_rat(c), id)?;
            }
        }
        Ok(())
    }
}
