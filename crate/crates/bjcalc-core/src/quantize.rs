//! Quantization and dequantization of polynomial symbols in the Weyl and
//! Born-Jordan schemes, plus the symbol maps between the two schemes.
//!
//! On a monomial `x^r p^s` both quantizations are sums over `l` of
//! `(-i hbar)^l C(s,l) C(r,l) w(l) X^{r-l} P^{s-l}` where the weight is
//! `w(l) = l!/2^l` (Weyl) or `w(l) = l!/(l+1)` (Born-Jordan). Equivalently
//! they are the symmetrized and the equally-weighted averages over operator
//! orderings; [`op_w_average`] and [`op_bj_average`] evaluate those averages
//! through the Weyl algebra and cross-check the two printed forms of each.
//!
//! The Born-Jordan -> Weyl symbol map multiplies covariant symbols by
//! `Theta(z) = sinc(x p / 2 hbar)`; on polynomials it acts monomial by
//! monomial through the Maclaurin coefficients of `sin(t)/t`, and its
//! inverse through the coefficients of `t/sin(t)`. Both directions are
//! validated on every call against the composite route
//! `dequantize . quantize`, which only uses the commutation relation.

use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::One;
use thiserror::Error;

use crate::rational::{
    binomial, factorial, rat, theta_inv_series_coeff, theta_series_coeff, Rational,
};
use crate::scalar::ExactScalar;
use crate::symbol::PolySymbol;
use crate::weyl::NormalOperator;

/// The two quantization schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Weyl,
    BornJordan,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Weyl => "weyl",
            Scheme::BornJordan => "bj",
        }
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "weyl" | "w" => Ok(Scheme::Weyl),
            "bj" | "bornjordan" | "born-jordan" => Ok(Scheme::BornJordan),
            other => Err(format!(
                "unknown scheme '{other}' (expected 'weyl' or 'bj')"
            )),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuantizeError {
    #[error("internal consistency failure: the two ordering averages of {scheme:?} disagree at monomial x^{r} p^{s}")]
    AverageMismatch { scheme: Scheme, r: u32, s: u32 },
    #[error("internal consistency failure: series symbol map disagrees with the quantize/dequantize route")]
    SeriesOracleMismatch,
}

fn scheme_weight(scheme: Scheme, l: u32) -> Rational {
    match scheme {
        // l! / 2^l
        Scheme::Weyl => Rational::new(factorial(l), BigInt::one() << l as usize),
        // l! / (l+1)
        Scheme::BornJordan => Rational::new(factorial(l), BigInt::from(l + 1)),
    }
}

fn monomial_closed(r: u32, s: u32, scheme: Scheme) -> NormalOperator {
    let mut out = NormalOperator::zero();
    for l in 0..=r.min(s) {
        let count =
            Rational::from_integer(binomial(s, l) * binomial(r, l)) * scheme_weight(scheme, l);
        let coeff = ExactScalar::neg_i_hbar_pow(l).scale_rational(&count);
        out.add_term(r - l, s - l, &coeff);
    }
    out
}

/// Weyl quantization of `x^r p^s` by the closed sum with weights `l!/2^l`.
pub fn op_w_monomial(r: u32, s: u32) -> NormalOperator {
    monomial_closed(r, s, Scheme::Weyl)
}

/// Born-Jordan quantization of `x^r p^s` by the closed sum with weights
/// `l!/(l+1)`.
pub fn op_bj_monomial(r: u32, s: u32) -> NormalOperator {
    monomial_closed(r, s, Scheme::BornJordan)
}

/// Evaluate both ordering-average forms of a monomial quantization through
/// the Weyl algebra and return the common value.
///
/// For Weyl these are `2^{-s} sum_l C(s,l) P^{s-l} X^r P^l` and
/// `2^{-r} sum_l C(r,l) X^l P^s X^{r-l}`; Born-Jordan replaces the binomial
/// weights by the uniform weights `1/(s+1)` and `1/(r+1)`.
fn monomial_average(r: u32, s: u32, scheme: Scheme) -> Result<NormalOperator, QuantizeError> {
    let xr = NormalOperator::monomial(r, 0, ExactScalar::one());
    let ps = NormalOperator::monomial(0, s, ExactScalar::one());

    let mut by_p = NormalOperator::zero();
    for l in 0..=s {
        let left = NormalOperator::monomial(0, s - l, ExactScalar::one());
        let right = NormalOperator::monomial(0, l, ExactScalar::one());
        let prod = &(&left * &xr) * &right;
        let w = match scheme {
            Scheme::Weyl => Rational::new(binomial(s, l), BigInt::one() << s as usize),
            Scheme::BornJordan => rat(1, (s + 1) as i64),
        };
        by_p = &by_p + &prod.scale(&ExactScalar::from_rational(w));
    }

    let mut by_x = NormalOperator::zero();
    for l in 0..=r {
        let left = NormalOperator::monomial(l, 0, ExactScalar::one());
        let right = NormalOperator::monomial(r - l, 0, ExactScalar::one());
        let prod = &(&left * &ps) * &right;
        let w = match scheme {
            Scheme::Weyl => Rational::new(binomial(r, l), BigInt::one() << r as usize),
            Scheme::BornJordan => rat(1, (r + 1) as i64),
        };
        by_x = &by_x + &prod.scale(&ExactScalar::from_rational(w));
    }

    if by_p != by_x {
        return Err(QuantizeError::AverageMismatch { scheme, r, s });
    }
    Ok(by_p)
}

/// Weyl quantization of `x^r p^s` as the symmetrized ordering average,
/// evaluated in both printed forms and cross-checked.
pub fn op_w_average(r: u32, s: u32) -> Result<NormalOperator, QuantizeError> {
    monomial_average(r, s, Scheme::Weyl)
}

/// Born-Jordan quantization of `x^r p^s` as the equally-weighted ordering
/// average, evaluated in both printed forms and cross-checked.
pub fn op_bj_average(r: u32, s: u32) -> Result<NormalOperator, QuantizeError> {
    monomial_average(r, s, Scheme::BornJordan)
}

/// Quantize a polynomial symbol by linear extension of the monomial rule.
pub fn quantize(a: &PolySymbol, scheme: Scheme) -> NormalOperator {
    let mut out = NormalOperator::zero();
    for ((r, s), c) in a.iter() {
        out = &out + &monomial_closed(*r, *s, scheme).scale(c);
    }
    out
}

/// Recover the unique polynomial symbol with the given quantization.
///
/// Since `quantize(x^r p^s) = X^r P^s + lower order`, eliminating the
/// top-degree terms and recursing terminates; both schemes are bijections
/// on polynomials.
pub fn dequantize(op: &NormalOperator, scheme: Scheme) -> PolySymbol {
    let mut result = PolySymbol::zero();
    let mut work = op.clone();
    while let Some(d) = work.degree() {
        let mut leading = PolySymbol::zero();
        for ((r, s), c) in work.iter() {
            if r + s == d {
                leading = &leading + &PolySymbol::monomial(*r, *s, c.clone());
            }
        }
        result = &result + &leading;
        work = &work - &quantize(&leading, scheme);
        debug_assert!(work.degree().is_none_or(|d2| d2 < d));
    }
    result
}

/// Monomial-wise series action shared by the two symbol maps: the direction
/// is fixed by the coefficient family `coeff(k)` (`sin(t)/t` coefficients for
/// Born-Jordan -> Weyl, `t/sin(t)` coefficients for the inverse).
fn series_map(a: &PolySymbol, coeff: fn(u32) -> Rational) -> PolySymbol {
    let mut out = PolySymbol::zero();
    for ((r, s), c) in a.iter() {
        let (r, s) = (*r, *s);
        for k in 0..=(r.min(s) / 2) {
            // coeff(k) * (hbar^2/4)^k * r! s! / ((r-2k)! (s-2k)!)
            let falling = Rational::from_integer(
                factorial(r) / factorial(r - 2 * k) * (factorial(s) / factorial(s - 2 * k)),
            );
            let quarter = Rational::new(BigInt::one(), BigInt::one() << (2 * k as usize));
            let scale = coeff(k) * falling * quarter;
            let term = ExactScalar::hbar_pow(2 * k as i64).scale_rational(&scale);
            out.add_term(r - 2 * k, s - 2 * k, &(c * &term));
        }
    }
    out
}

/// The Weyl symbol of the operator whose Born-Jordan symbol is `a`
/// (multiplication of the covariant symbol by `Theta`). Validated against
/// `dequantize(quantize(a, BornJordan), Weyl)` on every call.
pub fn bj_to_weyl_poly(a: &PolySymbol) -> Result<PolySymbol, QuantizeError> {
    let series = series_map(a, theta_series_coeff);
    let composite = dequantize(&quantize(a, Scheme::BornJordan), Scheme::Weyl);
    if series != composite {
        return Err(QuantizeError::SeriesOracleMismatch);
    }
    Ok(series)
}

/// The Born-Jordan symbol of the operator whose Weyl symbol is `b`
/// (division of the covariant symbol by `Theta`, a polynomial again because
/// the covariant symbol is supported at the origin). Validated against
/// `dequantize(quantize(b, Weyl), BornJordan)` on every call.
pub fn weyl_to_bj_poly(b: &PolySymbol) -> Result<PolySymbol, QuantizeError> {
    let series = series_map(b, theta_inv_series_coeff);
    let composite = dequantize(&quantize(b, Scheme::Weyl), Scheme::BornJordan);
    if series != composite {
        return Err(QuantizeError::SeriesOracleMismatch);
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sym(text: &str) -> PolySymbol {
        PolySymbol::parse(text).unwrap()
    }

    fn op(text: &str) -> NormalOperator {
        NormalOperator::parse(text).unwrap()
    }

    #[test]
    fn monomial_values() {
        assert_eq!(
            op_w_monomial(2, 2),
            op("X^2 P^2 - 2 i hbar X P - 1/2 hbar^2")
        );
        assert_eq!(
            op_bj_monomial(2, 2),
            op("X^2 P^2 - 2 i hbar X P - 2/3 hbar^2")
        );
        assert_eq!(op_w_monomial(3, 0), op("X^3"));
        assert_eq!(op_bj_monomial(0, 4), op("P^4"));
        assert_eq!(op_w_monomial(1, 1), op("X P - 1/2 i hbar"));
        assert_eq!(op_bj_monomial(1, 1), op("X P - 1/2 i hbar"));
    }

    #[test]
    fn average_values() {
        assert_eq!(op_bj_average(1, 1).unwrap(), op("X P - 1/2 i hbar"));
        assert_eq!(
            op_w_average(2, 2).unwrap(),
            op("X^2 P^2 - 2 i hbar X P - 1/2 hbar^2")
        );
        assert_eq!(op_w_average(5, 0).unwrap(), op("X^5"));
    }

    #[test]
    fn closed_formulas_match_averages() {
        for r in 0..=6 {
            for s in 0..=6 {
                assert_eq!(
                    op_w_monomial(r, s),
                    op_w_average(r, s).unwrap(),
                    "W {r},{s}"
                );
                assert_eq!(
                    op_bj_monomial(r, s),
                    op_bj_average(r, s).unwrap(),
                    "BJ {r},{s}"
                );
            }
        }
    }

    #[test]
    fn schemes_agree_exactly_up_to_first_mixed_power() {
        for r in 0..=6 {
            for s in 0..=6 {
                let same = op_w_monomial(r, s) == op_bj_monomial(r, s);
                assert_eq!(same, r.min(s) <= 1, "at ({r},{s})");
            }
        }
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(
            quantize(&sym("x^2 p^2 - 1/6 hbar^2"), Scheme::Weyl),
            op("X^2 P^2 - 2 i hbar X P - 2/3 hbar^2")
        );
        assert!(quantize(&PolySymbol::zero(), Scheme::BornJordan).is_zero());
        assert_eq!(
            quantize(&sym("x p"), Scheme::BornJordan),
            op("X P - 1/2 i hbar")
        );
    }

    #[test]
    fn dequantize_examples() {
        assert_eq!(
            dequantize(
                &op("X^2 P^2 - 2 i hbar X P - 2/3 hbar^2"),
                Scheme::BornJordan
            ),
            sym("x^2 p^2")
        );
        assert_eq!(dequantize(&op("1"), Scheme::Weyl), sym("1"));
        assert_eq!(dequantize(&op("1"), Scheme::BornJordan), sym("1"));
        assert_eq!(
            dequantize(&op_w_monomial(2, 2), Scheme::BornJordan),
            sym("x^2 p^2 + 1/6 hbar^2")
        );
        assert_eq!(
            dequantize(&op("X P"), Scheme::Weyl),
            sym("x p + 1/2 i hbar")
        );
    }

    #[test]
    fn symbol_map_examples() {
        assert_eq!(
            bj_to_weyl_poly(&sym("x^2 p^2")).unwrap(),
            sym("x^2 p^2 - 1/6 hbar^2")
        );
        assert_eq!(bj_to_weyl_poly(&sym("x p")).unwrap(), sym("x p"));
        assert_eq!(bj_to_weyl_poly(&sym("x^7")).unwrap(), sym("x^7"));
        assert_eq!(
            weyl_to_bj_poly(&sym("x^2 p^2")).unwrap(),
            sym("x^2 p^2 + 1/6 hbar^2")
        );
        assert_eq!(weyl_to_bj_poly(&sym("x p")).unwrap(), sym("x p"));
        assert_eq!(weyl_to_bj_poly(&sym("p^5")).unwrap(), sym("p^5"));
    }

    #[test]
    fn hbar_grading_of_monomial_quantization() {
        for scheme in [Scheme::Weyl, Scheme::BornJordan] {
            let a = monomial_closed(5, 4, scheme);
            for ((r, s), c) in a.iter() {
                let l = 5 - r;
                assert_eq!(4 - s, l, "diagonal structure");
                assert_eq!(c.hbar_degree(), Some(l as i64), "hbar degree at l={l}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn round_trips(a in crate::symbol::tests::arb_symbol(5)) {
            for scheme in [Scheme::Weyl, Scheme::BornJordan] {
                let op = quantize(&a, scheme);
                prop_assert_eq!(&dequantize(&op, scheme), &a);
            }
        }

        #[test]
        fn series_maps_are_mutually_inverse(a in crate::symbol::tests::arb_symbol(5)) {
            let there = bj_to_weyl_poly(&a).unwrap();
            prop_assert_eq!(&weyl_to_bj_poly(&there).unwrap(), &a);
            let back = weyl_to_bj_poly(&a).unwrap();
            prop_assert_eq!(&bj_to_weyl_poly(&back).unwrap(), &a);
        }

        #[test]
        fn all_maps_linear((a, b) in (crate::symbol::tests::arb_symbol(4), crate::symbol::tests::arb_symbol(4))) {
            let sum = &a + &b;
            for scheme in [Scheme::Weyl, Scheme::BornJordan] {
                prop_assert_eq!(
                    quantize(&sum, scheme),
                    &quantize(&a, scheme) + &quantize(&b, scheme)
                );
            }
            prop_assert_eq!(
                bj_to_weyl_poly(&sum).unwrap(),
                &bj_to_weyl_poly(&a).unwrap() + &bj_to_weyl_poly(&b).unwrap()
            );
            prop_assert_eq!(
                weyl_to_bj_poly(&sum).unwrap(),
                &weyl_to_bj_poly(&a).unwrap() + &weyl_to_bj_poly(&b).unwrap()
            );
        }
    }
}
