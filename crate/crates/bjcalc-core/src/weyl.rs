//! The non-commutative unital algebra generated by `X` and `P` with
//! `[X, P] = i hbar`, kept in normal order (every `X` power to the left of
//! every `P` power).

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::parse::{self, ParseError};
use crate::rational::{binomial, factorial, Rational};
use crate::scalar::ExactScalar;
use crate::symbol::{format_terms, forward_owned_binop};

/// A normal-ordered element `sum c_{rs} X^r P^s`. The representation is
/// unique: no stored coefficient is zero.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NormalOperator {
    terms: BTreeMap<(u32, u32), ExactScalar>,
}

impl NormalOperator {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(0, 0, ExactScalar::one())
    }

    /// `c * X^r P^s` (already normal ordered).
    pub fn monomial(r: u32, s: u32, c: ExactScalar) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((r, s), c);
        }
        Self { terms }
    }

    pub fn var_x() -> Self {
        Self::monomial(1, 0, ExactScalar::one())
    }

    pub fn var_p() -> Self {
        Self::monomial(0, 1, ExactScalar::one())
    }

    pub fn from_scalar(c: ExactScalar) -> Self {
        Self::monomial(0, 0, c)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|(r, s)| r + s).max()
    }

    pub fn coeff(&self, r: u32, s: u32) -> ExactScalar {
        self.terms.get(&(r, s)).cloned().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(u32, u32), &ExactScalar)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn scale(&self, c: &ExactScalar) -> Self {
        let mut out = Self::zero();
        for ((r, s), q) in &self.terms {
            out.add_term(*r, *s, &(q * c));
        }
        out
    }

    pub(crate) fn add_term(&mut self, r: u32, s: u32, c: &ExactScalar) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry((r, s)).or_insert_with(ExactScalar::zero);
        *entry = &*entry + c;
        if entry.is_zero() {
            self.terms.remove(&(r, s));
        }
    }

    /// `AB - BA`.
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// Parse the operator grammar: free words over `X`, `P`, `i`, `hbar`
    /// and rationals; juxtaposition composes in the written order and the
    /// result is normal ordered.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        parse::parse_operator(text)
    }
}

/// Normal ordering of `P^b X^c`:
/// `P^b X^c = sum_l C(b,l) C(c,l) l! (-i hbar)^l X^{c-l} P^{b-l}`,
/// the closed form of repeatedly applying `P X = X P - i hbar`.
fn swap_powers(b: u32, c: u32) -> NormalOperator {
    let mut out = NormalOperator::zero();
    for l in 0..=b.min(c) {
        let count = Rational::from_integer(binomial(b, l) * binomial(c, l) * factorial(l));
        let coeff = ExactScalar::neg_i_hbar_pow(l).scale_rational(&count);
        out.add_term(c - l, b - l, &coeff);
    }
    out
}

impl Mul for &NormalOperator {
    type Output = NormalOperator;
    fn mul(self, rhs: &NormalOperator) -> NormalOperator {
        let mut out = NormalOperator::zero();
        for ((r1, s1), c1) in &self.terms {
            for ((r2, s2), c2) in &rhs.terms {
                // X^r1 P^s1 X^r2 P^s2 = X^r1 (P^s1 X^r2) P^s2
                let mid = swap_powers(*s1, *r2);
                let coeff = c1 * c2;
                for ((mr, ms), mc) in &mid.terms {
                    out.add_term(r1 + mr, ms + s2, &(&coeff * mc));
                }
            }
        }
        out
    }
}

impl Add for &NormalOperator {
    type Output = NormalOperator;
    fn add(self, rhs: &NormalOperator) -> NormalOperator {
        let mut out = self.clone();
        for ((r, s), c) in &rhs.terms {
            out.add_term(*r, *s, c);
        }
        out
    }
}

impl Sub for &NormalOperator {
    type Output = NormalOperator;
    fn sub(self, rhs: &NormalOperator) -> NormalOperator {
        let mut out = self.clone();
        for ((r, s), c) in &rhs.terms {
            out.add_term(*r, *s, &-c);
        }
        out
    }
}

impl Neg for &NormalOperator {
    type Output = NormalOperator;
    fn neg(self) -> NormalOperator {
        let terms = self.terms.iter().map(|(k, c)| (*k, -c)).collect();
        NormalOperator { terms }
    }
}

forward_owned_binop!(NormalOperator, Add, add);
forward_owned_binop!(NormalOperator, Sub, sub);
forward_owned_binop!(NormalOperator, Mul, mul);

impl Neg for NormalOperator {
    type Output = NormalOperator;
    fn neg(self) -> NormalOperator {
        -&self
    }
}

impl fmt::Display for NormalOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_terms(&self.terms, "X", "P"))
    }
}
