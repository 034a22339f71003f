//! Deterministic textual output for floating-point values and
//! exponential-polynomial symbols.

use bjcalc_core::expjet::{ComplexPoly, ExpSymbol};
use num_complex::Complex64;

/// Fixed-precision rendering with trailing zeros trimmed and negative zero
/// normalized; "1.000000000000" prints as "1", values that round to zero
/// print as "0".
pub fn fmt_float(v: f64, precision: usize) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    let mut s = format!("{v:.precision$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

pub fn join_floats(values: &[f64], precision: usize) -> String {
    values
        .iter()
        .map(|v| fmt_float(*v, precision))
        .collect::<Vec<_>>()
        .join(",")
}

/// Render a sum of exponential-polynomial terms in the symbol grammar
/// extended with `exp(i/hbar*sigma([x0,p0],z))`.
pub fn format_exp_symbol(sym: &ExpSymbol, precision: usize) -> String {
    if sym.terms.is_empty() {
        return "0".to_string();
    }
    sym.terms
        .iter()
        .map(|t| format_exp_term(&t.z0.flat(), &t.poly, precision))
        .collect::<Vec<_>>()
        .join(" + ")
}

fn format_exp_term(z0_flat: &[f64], poly: &ComplexPoly, precision: usize) -> String {
    let exp_part = if z0_flat.iter().all(|v| *v == 0.0) {
        None
    } else {
        Some(format!(
            "exp(i/hbar*sigma([{}],z))",
            join_floats(z0_flat, precision)
        ))
    };
    let trivial_poly = poly.degree() == 0
        && (poly.coeff(&vec![0; poly.nvars()]) - Complex64::new(1.0, 0.0)).norm() == 0.0;
    let poly_part = if trivial_poly {
        None
    } else {
        let text = format_poly(poly, precision);
        // a multi-term polynomial binds to the exponential as a product
        let needs_parens = exp_part.is_some() && poly.iter().count() > 1;
        Some(if needs_parens {
            format!("({text})")
        } else {
            text
        })
    };
    match (poly_part, exp_part) {
        (None, None) => "1".to_string(),
        (None, Some(e)) => e,
        (Some(p), None) => p,
        (Some(p), Some(e)) => format!("{p} {e}"),
    }
}

fn format_poly(poly: &ComplexPoly, precision: usize) -> String {
    if poly.is_empty() {
        return "0".to_string();
    }
    let nvars = poly.nvars();
    let mut keys: Vec<Vec<u32>> = poly.iter().map(|(a, _)| a.clone()).collect();
    // graded lexicographic, descending
    keys.sort_by(|a, b| {
        let (ta, tb) = (a.iter().sum::<u32>(), b.iter().sum::<u32>());
        tb.cmp(&ta).then_with(|| b.cmp(a))
    });

    let mut out = String::new();
    for (idx, key) in keys.iter().enumerate() {
        let mono = format_monomial(key, nvars);
        let (negative, coeff) = format_complex_coeff(poly.coeff(key), !mono.is_empty(), precision);
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

fn format_monomial(alpha: &[u32], nvars: usize) -> String {
    let n = nvars / 2;
    let var_name = |j: usize| -> String {
        if n == 1 {
            if j == 0 {
                "x".into()
            } else {
                "p".into()
            }
        } else if j < n {
            format!("x{}", j + 1)
        } else {
            format!("p{}", j - n + 1)
        }
    };
    let mut parts = Vec::new();
    for (j, &e) in alpha.iter().enumerate() {
        if e == 1 {
            parts.push(var_name(j));
        } else if e > 1 {
            parts.push(format!("{}^{}", var_name(j), e));
        }
    }
    parts.join(" ")
}

/// Returns `(negative, body)` with the sign stripped for purely real or
/// purely imaginary coefficients, which are the common case; mixed
/// coefficients are parenthesized.
fn format_complex_coeff(c: Complex64, has_monomial: bool, precision: usize) -> (bool, String) {
    let re_zero = fmt_float(c.re, precision) == "0";
    let im_zero = fmt_float(c.im, precision) == "0";
    if im_zero {
        let neg = c.re < 0.0 && !re_zero;
        let mag = fmt_float(c.re.abs(), precision);
        if mag == "1" && has_monomial {
            (neg, String::new())
        } else {
            (neg, mag)
        }
    } else if re_zero {
        let neg = c.im < 0.0;
        let mag = fmt_float(c.im.abs(), precision);
        if mag == "1" {
            (neg, "i".to_string())
        } else {
            (neg, format!("{mag} i"))
        }
    } else {
        let re = fmt_float(c.re, precision);
        let im_neg = c.im < 0.0;
        let im_mag = fmt_float(c.im.abs(), precision);
        let im = if im_mag == "1" {
            "i".to_string()
        } else {
            format!("{im_mag} i")
        };
        (
            false,
            format!("({re} {} {im})", if im_neg { "-" } else { "+" }),
        )
    }
}
