//! The coefficient field of the exact algebra: Gaussian rationals attached
//! to integer (possibly negative) powers of a symbolic `hbar`.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::Zero;

use crate::rational::{rat_int, Rational};

/// A complex number with exact rational real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaussianRational {
    pub re: Rational,
    pub im: Rational,
}

impl GaussianRational {
    pub fn new(re: Rational, im: Rational) -> Self {
        Self { re, im }
    }

    pub fn zero() -> Self {
        Self::new(Rational::zero(), Rational::zero())
    }

    pub fn one() -> Self {
        Self::new(rat_int(1), Rational::zero())
    }

    pub fn i() -> Self {
        Self::new(Rational::zero(), rat_int(1))
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(&self.re + &other.re, &self.im + &other.im)
    }

    pub fn neg(&self) -> Self {
        Self::new(-self.re.clone(), -self.im.clone())
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(
            &self.re * &other.re - &self.im * &other.im,
            &self.re * &other.im + &self.im * &other.re,
        )
    }
}

/// An exact scalar: a finite sum `sum_e (re_e + im_e i) hbar^e` over integer
/// exponents `e`. No stored coefficient is zero, so the representation is
/// canonical and equality is structural.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExactScalar {
    terms: BTreeMap<i64, GaussianRational>,
}

impl ExactScalar {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_gaussian(GaussianRational::one())
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        Self::from_gaussian(GaussianRational::i())
    }

    pub fn from_rational(q: Rational) -> Self {
        Self::from_gaussian(GaussianRational::new(q, Rational::zero()))
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(rat_int(n))
    }

    pub fn from_gaussian(g: GaussianRational) -> Self {
        Self::term(0, g)
    }

    /// `hbar^e`, `e` possibly negative.
    pub fn hbar_pow(e: i64) -> Self {
        Self::term(e, GaussianRational::one())
    }

    /// A single term `g * hbar^e`.
    pub fn term(e: i64, g: GaussianRational) -> Self {
        let mut terms = BTreeMap::new();
        if !g.is_zero() {
            terms.insert(e, g);
        }
        Self { terms }
    }

    /// `(-i hbar)^l`.
    pub fn neg_i_hbar_pow(l: u32) -> Self {
        // (-i)^l cycles 1, -i, -1, i.
        let g = match l % 4 {
            0 => GaussianRational::one(),
            1 => GaussianRational::i().neg(),
            2 => GaussianRational::one().neg(),
            _ => GaussianRational::i(),
        };
        Self::term(l as i64, g)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .get(&0)
                .map(|g| g == &GaussianRational::one())
                .unwrap_or(false)
    }

    /// Iterate `(hbar exponent, coefficient)` pairs in ascending exponent
    /// order.
    pub fn iter(&self) -> impl Iterator<Item = (&i64, &GaussianRational)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// The unique `hbar` exponent when the scalar is `hbar`-homogeneous.
    pub fn hbar_degree(&self) -> Option<i64> {
        if self.terms.len() == 1 {
            self.terms.keys().next().copied()
        } else {
            None
        }
    }

    pub fn scale_rational(&self, q: &Rational) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        let terms = self
            .terms
            .iter()
            .map(|(e, g)| (*e, GaussianRational::new(&g.re * q, &g.im * q)))
            .collect();
        Self { terms }
    }

    fn add_assign_term(&mut self, e: i64, g: &GaussianRational) {
        if g.is_zero() {
            return;
        }
        let entry = self.terms.entry(e).or_insert_with(GaussianRational::zero);
        *entry = entry.add(g);
        if entry.is_zero() {
            self.terms.remove(&e);
        }
    }
}

impl Add for &ExactScalar {
    type Output = ExactScalar;
    fn add(self, rhs: &ExactScalar) -> ExactScalar {
        let mut out = self.clone();
        for (e, g) in &rhs.terms {
            out.add_assign_term(*e, g);
        }
        out
    }
}

impl Sub for &ExactScalar {
    type Output = ExactScalar;
    fn sub(self, rhs: &ExactScalar) -> ExactScalar {
        let mut out = self.clone();
        for (e, g) in &rhs.terms {
            out.add_assign_term(*e, &g.neg());
        }
        out
    }
}

impl Mul for &ExactScalar {
    type Output = ExactScalar;
    // hbar exponents add under multiplication
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: &ExactScalar) -> ExactScalar {
        let mut out = ExactScalar::zero();
        for (e1, g1) in &self.terms {
            for (e2, g2) in &rhs.terms {
                out.add_assign_term(e1 + e2, &g1.mul(g2));
            }
        }
        out
    }
}

impl Neg for &ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        let terms = self.terms.iter().map(|(e, g)| (*e, g.neg())).collect();
        ExactScalar { terms }
    }
}

macro_rules! forward_owned_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: ExactScalar) -> ExactScalar {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&ExactScalar> for ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: &ExactScalar) -> ExactScalar {
                (&self).$method(rhs)
            }
        }
    };
}

forward_owned_binop!(Add, add);
forward_owned_binop!(Sub, sub);
forward_owned_binop!(Mul, mul);

impl Neg for ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        -&self
    }
}
