//! The commutative ring of classical polynomial symbols `a(x, p)` in one
//! degree of freedom, with deterministic printing.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};

use crate::parse::{self, ParseError};
use crate::rational::Rational;
use crate::scalar::ExactScalar;

/// A polynomial `sum c_{rs} x^r p^s` with [`ExactScalar`] coefficients.
/// `x^r p^s == p^s x^r`; no stored coefficient is zero.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PolySymbol {
    terms: BTreeMap<(u32, u32), ExactScalar>,
}

impl PolySymbol {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(0, 0, ExactScalar::one())
    }

    /// `c * x^r p^s`.
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

    /// Max total degree `r + s`, or `None` for the zero polynomial.
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

    /// Parse the symbol grammar (`x`, `p`, `i`, `hbar`, rationals, `^`,
    /// parentheses, juxtaposition as commutative multiplication).
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        parse::parse_symbol(text)
    }
}

impl Add for &PolySymbol {
    type Output = PolySymbol;
    fn add(self, rhs: &PolySymbol) -> PolySymbol {
        let mut out = self.clone();
        for ((r, s), c) in &rhs.terms {
            out.add_term(*r, *s, c);
        }
        out
    }
}

impl Sub for &PolySymbol {
    type Output = PolySymbol;
    fn sub(self, rhs: &PolySymbol) -> PolySymbol {
        let mut out = self.clone();
        for ((r, s), c) in &rhs.terms {
            out.add_term(*r, *s, &-c);
        }
        out
    }
}

impl Mul for &PolySymbol {
    type Output = PolySymbol;
    fn mul(self, rhs: &PolySymbol) -> PolySymbol {
        let mut out = PolySymbol::zero();
        for ((r1, s1), c1) in &self.terms {
            for ((r2, s2), c2) in &rhs.terms {
                out.add_term(r1 + r2, s1 + s2, &(c1 * c2));
            }
        }
        out
    }
}

impl Neg for &PolySymbol {
    type Output = PolySymbol;
    fn neg(self) -> PolySymbol {
        let terms = self.terms.iter().map(|(k, c)| (*k, -c)).collect();
        PolySymbol { terms }
    }
}

macro_rules! forward_owned_binop {
    ($type:ident, $trait:ident, $method:ident) => {
        impl $trait for $type {
            type Output = $type;
            fn $method(self, rhs: $type) -> $type {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&$type> for $type {
            type Output = $type;
            fn $method(self, rhs: &$type) -> $type {
                (&self).$method(rhs)
            }
        }
    };
}
pub(crate) use forward_owned_binop;

forward_owned_binop!(PolySymbol, Add, add);
forward_owned_binop!(PolySymbol, Sub, sub);
forward_owned_binop!(PolySymbol, Mul, mul);

impl Neg for PolySymbol {
    type Output = PolySymbol;
    fn neg(self) -> PolySymbol {
        -&self
    }
}

impl fmt::Display for PolySymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_terms(&self.terms, "x", "p"))
    }
}

// ---------------------------------------------------------------------------
// Deterministic printing, shared by symbols and normal-ordered operators.
//
// Terms are ordered graded-lexicographically descending (total degree first,
// then the first variable's exponent). The output parses back to the same
// value under the corresponding grammar.
// ---------------------------------------------------------------------------

pub(crate) fn format_terms(
    terms: &BTreeMap<(u32, u32), ExactScalar>,
    var1: &str,
    var2: &str,
) -> String {
    if terms.is_empty() {
        return "0".to_string();
    }
    let mut keys: Vec<(u32, u32)> = terms.keys().copied().collect();
    keys.sort_by_key(|&(r, s)| (std::cmp::Reverse(r + s), std::cmp::Reverse(r)));

    let mut out = String::new();
    for (idx, (r, s)) in keys.iter().enumerate() {
        let mono = format_monomial(*r, *s, var1, var2);
        let (negative, coeff) = format_coeff(&terms[&(*r, *s)], !mono.is_empty());
        if idx == 0 {
            if negative {
                out.push('-');
            }
        } else {
            out.push_str(if negative { " - " } else { " + " });
        }
        match (coeff.is_empty(), mono.is_empty()) {
            (true, true) => out.push('1'),
            (true, false) => out.push_str(&mono),
            (false, true) => out.push_str(&coeff),
            (false, false) => {
                out.push_str(&coeff);
                out.push(' ');
                out.push_str(&mono);
            }
        }
    }
    out
}

fn format_monomial(r: u32, s: u32, var1: &str, var2: &str) -> String {
    let mut parts = Vec::new();
    if r > 0 {
        parts.push(format_power(var1, r));
    }
    if s > 0 {
        parts.push(format_power(var2, s));
    }
    parts.join(" ")
}

fn format_power(var: &str, e: u32) -> String {
    if e == 1 {
        var.to_string()
    } else {
        format!("{var}^{e}")
    }
}

/// Returns `(negative, text)` where `text` omits the sign and is empty for a
/// plain coefficient 1. Coefficients that are not a single real or imaginary
/// `hbar`-monomial are parenthesized and carry their signs inside.
fn format_coeff(c: &ExactScalar, has_monomial: bool) -> (bool, String) {
    if let Some(simple) = as_simple(c) {
        let (e, q, imaginary) = simple;
        let negative = q.is_negative();
        let mag = q.abs();
        let mut parts = Vec::new();
        let suppress_one = imaginary || e != 0 || has_monomial;
        if !(mag.is_one() && suppress_one) {
            parts.push(format_rational(&mag));
        }
        if imaginary {
            parts.push("i".to_string());
        }
        if e != 0 {
            parts.push(format_hbar(e));
        }
        (negative, parts.join(" "))
    } else {
        (false, format!("({})", format_scalar_sum(c)))
    }
}

/// A scalar is "simple" when it has a single `hbar` exponent and its
/// Gaussian part is purely real or purely imaginary.
fn as_simple(c: &ExactScalar) -> Option<(i64, Rational, bool)> {
    if c.term_count() != 1 {
        return None;
    }
    let (e, g) = c.iter().next().unwrap();
    if g.im.is_zero() {
        Some((*e, g.re.clone(), false))
    } else if g.re.is_zero() {
        Some((*e, g.im.clone(), true))
    } else {
        None
    }
}

/// Print a general scalar as a sum, `hbar` exponents ascending, real part
/// before imaginary part: e.g. `1/2 + 1/2 i` or `1 - 2 i hbar^2`.
fn format_scalar_sum(c: &ExactScalar) -> String {
    let mut out = String::new();
    let mut first = true;
    let push = |q: &Rational, imaginary: bool, e: i64, out: &mut String, first: &mut bool| {
        if q.is_zero() {
            return;
        }
        let negative = q.is_negative();
        if *first {
            if negative {
                out.push('-');
            }
            *first = false;
        } else {
            out.push_str(if negative { " - " } else { " + " });
        }
        let mag = q.abs();
        let mut parts = Vec::new();
        if !(mag.is_one() && (imaginary || e != 0)) {
            parts.push(format_rational(&mag));
        }
        if imaginary {
            parts.push("i".to_string());
        }
        if e != 0 {
            parts.push(format_hbar(e));
        }
        if parts.is_empty() {
            parts.push("1".to_string());
        }
        out.push_str(&parts.join(" "));
    };
    for (e, g) in c.iter() {
        push(&g.re, false, *e, &mut out, &mut first);
        push(&g.im, true, *e, &mut out, &mut first);
    }
    out
}

fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn format_hbar(e: i64) -> String {
    if e == 1 {
        "hbar".to_string()
    } else {
        format!("hbar^{e}")
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::rational::rat;
    use crate::scalar::GaussianRational;
    use proptest::prelude::*;

    fn sym(text: &str) -> PolySymbol {
        PolySymbol::parse(text).unwrap()
    }

    #[test]
    fn ring_examples() {
        assert_eq!(&sym("x") * &sym("p"), sym("x p"));
        assert_eq!(&sym("x + p") * &sym("x - p"), sym("x^2 - p^2"));
        assert_eq!(&sym("x p") * &sym("x p"), sym("x^2 p^2"));
    }

    #[test]
    fn parse_examples() {
        let a = sym("x^2 p^2 - 2/3 hbar^2");
        assert_eq!(a.coeff(2, 2), ExactScalar::one());
        assert_eq!(
            a.coeff(0, 0),
            ExactScalar::hbar_pow(2).scale_rational(&rat(-2, 3))
        );
        assert!(sym("0").is_zero());

        let b = sym("(1/2 + 1/2 i) x p^3");
        assert_eq!(
            b.coeff(1, 3),
            ExactScalar::from_gaussian(GaussianRational::new(rat(1, 2), rat(1, 2)))
        );
        assert_eq!(b.term_count(), 1);
    }

    #[test]
    fn print_contract() {
        assert_eq!(PolySymbol::zero().to_string(), "0");
        let mut a = PolySymbol::monomial(1, 1, ExactScalar::one());
        a.add_term(
            0,
            0,
            &ExactScalar::term(1, GaussianRational::new(rat(0, 1), rat(1, 2))),
        );
        assert_eq!(a.to_string(), "x p + 1/2 i hbar");
        assert_eq!(
            sym("x^2 p^2 - 2/3 hbar^2").to_string(),
            "x^2 p^2 - 2/3 hbar^2"
        );
        assert_eq!(
            sym("(1/2 + 1/2 i) x p^3").to_string(),
            "(1/2 + 1/2 i) x p^3"
        );
        assert_eq!(sym("- x").to_string(), "-x");
        assert_eq!(sym("hbar^-1 p").to_string(), "hbar^-1 p");
    }

    #[test]
    fn parse_error_positions() {
        let err = PolySymbol::parse("x +").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("1:4"), "{msg}");
        let err = PolySymbol::parse("x^-2").unwrap_err();
        assert!(err.to_string().contains("negative exponent"), "{err}");
    }

    pub(crate) fn arb_symbol(max_deg: u32) -> impl Strategy<Value = PolySymbol> {
        let term = (
            0..=max_deg,
            0..=max_deg,
            -2i64..=2,
            -9i64..=9,
            -9i64..=9,
            1i64..=4,
        );
        proptest::collection::vec(term, 0..6).prop_map(move |terms| {
            let mut out = PolySymbol::zero();
            for (r, s, e, re_n, im_n, den) in terms {
                let g = GaussianRational::new(rat(re_n, den), rat(im_n, den));
                out.add_term(r.min(max_deg), s.min(max_deg), &ExactScalar::term(e, g));
            }
            out
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        #[test]
        fn ring_axioms((a, b, c) in (arb_symbol(8), arb_symbol(8), arb_symbol(8))) {
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert!((&a - &a).is_zero());
        }

        #[test]
        fn print_parse_round_trip(a in arb_symbol(8)) {
            let text = a.to_string();
            let back = PolySymbol::parse(&text).unwrap();
            prop_assert_eq!(&back, &a, "text: {}", text);
            // printing is idempotent on canonical text
            prop_assert_eq!(back.to_string(), text);
        }
    }
}
