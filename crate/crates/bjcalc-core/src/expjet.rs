//! Exact calculus for exponential-polynomial symbols
//! `P(z) exp((i/hbar) sigma(z0, z))` through their covariant symbols, which
//! are finite combinations of derivatives of a Dirac delta at `z0`
//! ("delta jets").
//!
//! Multiplying a covariant symbol by `Theta` maps the Born-Jordan symbol of
//! an operator to its Weyl symbol; on jets this is a triangular action whose
//! diagonal is `Theta(z0)`. Away from the zero set the action inverts by
//! jet division; on the zero set it loses the top jet order, and division
//! raises the order by one with a minimal-norm choice among the solutions.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::theta::{theta, theta_gradient, PhasePoint, ThetaContext};

/// Below this magnitude `Theta(z0)` is treated as an exact zero of the
/// kernel (true zeros evaluate to ~1e-17 in floating point).
pub const THETA_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone)]
pub enum JetError {
    #[error("jet division residual {residual:e} exceeds {tolerance:e} at order {order}; retry with a higher max_order")]
    ResidualTooLarge {
        residual: f64,
        tolerance: f64,
        order: usize,
    },
    #[error("jet division system is singular at z0 = {z0}")]
    SingularSystem { z0: PhasePoint },
}

// ---------------------------------------------------------------------------
// Multivariate polynomials with complex coefficients
// ---------------------------------------------------------------------------

/// A polynomial in the `2n` flat phase-space coordinates
/// `(x_1..x_n, p_1..p_n)` with `Complex64` coefficients. Exact zeros are not
/// stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Complex64>,
}

const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);

impl ComplexPoly {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Complex64) -> Self {
        let mut out = Self::zero(nvars);
        out.add_term(vec![0; nvars], c);
        out
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Complex64::new(1.0, 0.0))
    }

    /// The coordinate monomial `z_j` in the flat layout.
    pub fn coordinate(nvars: usize, j: usize) -> Self {
        let mut alpha = vec![0; nvars];
        alpha[j] = 1;
        let mut out = Self::zero(nvars);
        out.add_term(alpha, Complex64::new(1.0, 0.0));
        out
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|a| a.iter().sum::<u32>() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<u32>, &Complex64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, alpha: &[u32]) -> Complex64 {
        self.terms.get(alpha).copied().unwrap_or(C_ZERO)
    }

    pub fn add_term(&mut self, alpha: Vec<u32>, c: Complex64) {
        assert_eq!(alpha.len(), self.nvars);
        if c == C_ZERO {
            return;
        }
        let entry = self.terms.entry(alpha.clone()).or_insert(C_ZERO);
        *entry += c;
        if *entry == C_ZERO {
            self.terms.remove(&alpha);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (a, c) in &other.terms {
            out.add_term(a.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (a, c) in &other.terms {
            out.add_term(a.clone(), -c);
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::zero(self.nvars);
        for (a, v) in &self.terms {
            out.add_term(a.clone(), v * c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let sum: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                out.add_term(sum, ca * cb);
            }
        }
        out
    }

    /// Product truncated to total degree `<= cap`.
    pub fn mul_truncated(&self, other: &Self, cap: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let sum: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                if sum.iter().sum::<u32>() as usize <= cap {
                    out.add_term(sum, ca * cb);
                }
            }
        }
        out
    }

    /// Partial derivative in coordinate `j`.
    pub fn partial(&self, j: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (a, c) in &self.terms {
            if a[j] > 0 {
                let mut b = a.clone();
                b[j] -= 1;
                out.add_term(b, c * a[j] as f64);
            }
        }
        out
    }

    /// Iterated partial derivative `d^alpha`.
    pub fn partial_multi(&self, alpha: &[u32]) -> Self {
        let mut out = self.clone();
        for (j, &e) in alpha.iter().enumerate() {
            for _ in 0..e {
                out = out.partial(j);
            }
        }
        out
    }

    pub fn eval(&self, coords: &[f64]) -> Complex64 {
        assert_eq!(coords.len(), self.nvars);
        let mut acc = C_ZERO;
        for (a, c) in &self.terms {
            let mut m = 1.0;
            for (j, &e) in a.iter().enumerate() {
                m *= coords[j].powi(e as i32);
            }
            acc += c * m;
        }
        acc
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Drop coefficients with magnitude below `eps`.
    pub fn pruned(&self, eps: f64) -> Self {
        let mut out = Self::zero(self.nvars);
        for (a, c) in &self.terms {
            if c.norm() >= eps {
                out.add_term(a.clone(), *c);
            }
        }
        out
    }
}

/// `sigma(z, c) = J z . c` as a polynomial in the flat coordinates of `z`:
/// `sum_j c_j p_j - sum_j c_{n+j} x_j`.
pub fn sigma_linear_poly(c: &[f64]) -> ComplexPoly {
    assert!(c.len().is_multiple_of(2) && !c.is_empty());
    let n = c.len() / 2;
    let mut out = ComplexPoly::zero(2 * n);
    for j in 0..n {
        let mut a = vec![0; 2 * n];
        a[n + j] = 1; // p_j
        out.add_term(a, Complex64::new(c[j], 0.0));
        let mut b = vec![0; 2 * n];
        b[j] = 1; // x_j
        out.add_term(b, Complex64::new(-c[n + j], 0.0));
    }
    out
}

// ---------------------------------------------------------------------------
// Exponential-polynomial symbols and delta jets
// ---------------------------------------------------------------------------

/// One term `P(z) exp((i/hbar) sigma(z0, z))`, the polynomial in absolute
/// flat coordinates.
#[derive(Debug, Clone)]
pub struct ExpPolyTerm {
    pub z0: PhasePoint,
    pub poly: ComplexPoly,
}

impl ExpPolyTerm {
    pub fn new(z0: PhasePoint, poly: ComplexPoly) -> Self {
        assert_eq!(poly.nvars(), 2 * z0.dim());
        Self { z0, poly }
    }

    /// The pure exponential `exp((i/hbar) sigma(z0, z))`.
    pub fn exponential(z0: PhasePoint) -> Self {
        let nvars = 2 * z0.dim();
        Self::new(z0, ComplexPoly::one(nvars))
    }
}

/// A finite sum of [`ExpPolyTerm`]s, with at most one term per frequency
/// point after [`ExpSymbol::normalized`].
#[derive(Debug, Clone, Default)]
pub struct ExpSymbol {
    pub terms: Vec<ExpPolyTerm>,
}

impl ExpSymbol {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn from_term(term: ExpPolyTerm) -> Self {
        Self { terms: vec![term] }.normalized()
    }

    /// Merge terms sharing a frequency point (bitwise equality) and drop
    /// empty polynomials.
    pub fn normalized(mut self) -> Self {
        let mut merged: Vec<ExpPolyTerm> = Vec::new();
        for term in self.terms.drain(..) {
            if let Some(existing) = merged.iter_mut().find(|t| t.z0.flat() == term.z0.flat()) {
                existing.poly = existing.poly.add(&term.poly);
            } else {
                merged.push(term);
            }
        }
        merged.retain(|t| !t.poly.is_empty());
        Self { terms: merged }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { terms }.normalized()
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.poly.max_coeff_norm())
            .fold(0.0, f64::max)
    }

    /// Largest coefficient distance to `other`, matching terms by frequency
    /// point (missing terms compare against zero).
    pub fn coeff_distance(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        for t in &self.terms {
            let diff = match other.terms.iter().find(|u| u.z0.flat() == t.z0.flat()) {
                Some(u) => t.poly.sub(&u.poly),
                None => t.poly.clone(),
            };
            worst = worst.max(diff.max_coeff_norm());
        }
        for u in &other.terms {
            if !self.terms.iter().any(|t| t.z0.flat() == u.z0.flat()) {
                worst = worst.max(u.poly.max_coeff_norm());
            }
        }
        worst
    }
}

/// A covariant symbol `sum_alpha d_alpha d^alpha delta(z - z0)`.
#[derive(Debug, Clone)]
pub struct DeltaJet {
    pub z0: PhasePoint,
    coeffs: BTreeMap<Vec<u32>, Complex64>,
}

impl DeltaJet {
    pub fn new(z0: PhasePoint) -> Self {
        Self {
            z0,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn nvars(&self) -> usize {
        2 * self.z0.dim()
    }

    pub fn add_term(&mut self, alpha: Vec<u32>, c: Complex64) {
        assert_eq!(alpha.len(), self.nvars());
        if c == C_ZERO {
            return;
        }
        *self.coeffs.entry(alpha).or_insert(C_ZERO) += c;
    }

    pub fn coeff(&self, alpha: &[u32]) -> Complex64 {
        self.coeffs.get(alpha).copied().unwrap_or(C_ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<u32>, &Complex64)> {
        self.coeffs.iter()
    }

    /// Highest derivative order present.
    pub fn order(&self) -> usize {
        self.coeffs
            .keys()
            .map(|a| a.iter().sum::<u32>() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Pairing with a polynomial test function:
    /// `< d^alpha delta_{z0}, phi > = (-1)^{|alpha|} (d^alpha phi)(z0)`.
    pub fn pair(&self, phi: &ComplexPoly) -> Complex64 {
        let coords = self.z0.flat();
        let mut acc = C_ZERO;
        for (alpha, d) in &self.coeffs {
            let sign = if alpha.iter().sum::<u32>() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            acc += d * sign * phi.partial_multi(alpha).eval(&coords);
        }
        acc
    }
}

impl fmt::Display for DeltaJet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "jet at {} with {} coefficients, order {}",
            self.z0,
            self.coeffs.len(),
            self.order()
        )
    }
}

// ---------------------------------------------------------------------------
// Multi-index helpers
// ---------------------------------------------------------------------------

/// All multi-indices over `nvars` variables with `|alpha| <= max_order`,
/// ordered by total order then lexicographically.
pub fn multi_indices(nvars: usize, max_order: usize) -> Vec<Vec<u32>> {
    fn rec(
        nvars: usize,
        pos: usize,
        remaining: u32,
        current: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
    ) {
        if pos == nvars {
            if remaining == 0 {
                out.push(current.clone());
            }
            return;
        }
        for e in 0..=remaining {
            current[pos] = e;
            rec(nvars, pos + 1, remaining - e, current, out);
        }
        current[pos] = 0;
    }
    let mut out = Vec::new();
    let mut current = vec![0u32; nvars];
    for order in 0..=max_order {
        let mut level = Vec::new();
        rec(nvars, 0, order as u32, &mut current, &mut level);
        level.sort();
        out.extend(level);
    }
    out
}

fn multi_binom(a: &[u32], b: &[u32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| binom_f64(x, y)).product()
}

fn binom_f64(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc
}

fn multi_factorial(a: &[u32]) -> f64 {
    a.iter()
        .map(|&e| (1..=e).map(|v| v as f64).product::<f64>())
        .product()
}

fn le_componentwise(a: &[u32], b: &[u32]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

// ---------------------------------------------------------------------------
// Derivatives of Theta
// ---------------------------------------------------------------------------

/// Derivatives `sinc^(m)(t)` for `m = 0..=max_m`, each evaluated without
/// numerical differentiation: the Maclaurin series of `sin(t)/t` for
/// `|t| <= 1`, otherwise the closed form obtained from `Im(e^{it}/t)` by the
/// Leibniz rule.
pub fn sinc_derivatives(t: f64, max_m: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(max_m + 1);
    if t.abs() <= 1.0 {
        for m in 0..=max_m {
            let mut acc = 0.0;
            // term k contributes (-1)^k (2k)!/((2k-m)! (2k+1)!) t^{2k-m}
            let mut k = m.div_ceil(2);
            let mut steps = 0;
            loop {
                let mut coeff = 1.0;
                for j in 0..m {
                    coeff *= (2 * k - j) as f64;
                }
                for j in 1..=(2 * k + 1) {
                    coeff /= j as f64;
                }
                let term = if k % 2 == 0 { coeff } else { -coeff } * t.powi((2 * k - m) as i32);
                acc += term;
                k += 1;
                steps += 1;
                if (steps > 3 && term.abs() < 1e-22 * (1.0 + acc.abs())) || steps > 60 {
                    break;
                }
            }
            out.push(acc);
        }
    } else {
        let eit = Complex64::new(0.0, t).exp();
        for m in 0..=max_m {
            let mut sum = C_ZERO;
            for j in 0..=m {
                let ipow = Complex64::new(0.0, 1.0).powu((m - j) as u32);
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                let jfact: f64 = (1..=j).map(|v| v as f64).product();
                sum += ipow * sign * binom_f64(m as u32, j as u32) * jfact * t.powi(-1 - j as i32);
            }
            out.push((eit * sum).im);
        }
    }
    out
}

/// Taylor polynomial of `Theta` at `z0`, to total degree `order`, in the
/// displacement coordinates `h = z - z0`. The coefficient of `h^beta` is
/// `d^beta Theta(z0) / beta!`. Built by composing the derivatives of `sinc`
/// with the exact quadratic expansion of `x.p / 2 hbar` around `z0`, so no
/// numerical differentiation is involved.
pub fn theta_taylor(ctx: &ThetaContext, z0: &PhasePoint, order: usize) -> ComplexPoly {
    let n = z0.dim();
    let nvars = 2 * n;
    let two_h = 2.0 * ctx.hbar;
    let t0 = z0.xp() / two_h;

    // displacement of the inner argument: u(h) = (p0.hx + x0.hp + hx.hp)/2hbar
    let mut u = ComplexPoly::zero(nvars);
    for j in 0..n {
        let mut a = vec![0; nvars];
        a[j] = 1;
        u.add_term(a, Complex64::new(z0.p[j] / two_h, 0.0));
        let mut b = vec![0; nvars];
        b[n + j] = 1;
        u.add_term(b, Complex64::new(z0.x[j] / two_h, 0.0));
        let mut c = vec![0; nvars];
        c[j] = 1;
        c[n + j] = 1;
        u.add_term(c, Complex64::new(1.0 / two_h, 0.0));
    }

    let derivs = sinc_derivatives(t0, order);
    let mut acc = ComplexPoly::constant(nvars, Complex64::new(derivs[0], 0.0));
    let mut upow = ComplexPoly::one(nvars);
    let mut mfact = 1.0;
    for (m, dm) in derivs.iter().enumerate().skip(1) {
        upow = upow.mul_truncated(&u, order);
        mfact *= m as f64;
        acc = acc.add(&upow.scale(Complex64::new(dm / mfact, 0.0)));
    }
    acc
}

/// `d^beta Theta(z0)` for all `|beta| <= order`, keyed by multi-index.
pub fn theta_partials(
    ctx: &ThetaContext,
    z0: &PhasePoint,
    order: usize,
) -> BTreeMap<Vec<u32>, f64> {
    let taylor = theta_taylor(ctx, z0, order);
    let mut out = BTreeMap::new();
    for beta in multi_indices(2 * z0.dim(), order) {
        let c = taylor.coeff(&beta);
        out.insert(beta.clone(), c.re * multi_factorial(&beta));
    }
    out
}

// ---------------------------------------------------------------------------
// The symplectic-Fourier correspondence on exponential-polynomial symbols
// ---------------------------------------------------------------------------

/// Covariant symbol of `P(z) exp((i/hbar) sigma(z0, z))` as a delta jet.
///
/// On monomials the correspondence is diagonal up to a block swap: the
/// monomial `x^gamma p^mu` contributes to `d^{(mu, gamma)} delta_{z0}` with
/// scale `(2 pi hbar)^n (-i hbar)^{|gamma|+|mu|} (-1)^{|gamma|}`; the pure
/// exponential corresponds to `(2 pi hbar)^n delta_{z0}`.
pub fn to_jet(ctx: &ThetaContext, term: &ExpPolyTerm) -> DeltaJet {
    let n = term.z0.dim();
    let factor = (2.0 * std::f64::consts::PI * ctx.hbar).powi(n as i32);
    let mut jet = DeltaJet::new(term.z0.clone());
    for (beta, c) in term.poly.iter() {
        let gamma = &beta[..n];
        let mu = &beta[n..];
        let total: u32 = beta.iter().sum();
        let gamma_total: u32 = gamma.iter().sum();
        let scale = Complex64::new(0.0, -ctx.hbar).powu(total)
            * if gamma_total.is_multiple_of(2) {
                1.0
            } else {
                -1.0
            }
            * factor;
        let mut alpha = Vec::with_capacity(2 * n);
        alpha.extend_from_slice(mu);
        alpha.extend_from_slice(gamma);
        jet.add_term(alpha, c * scale);
    }
    jet
}

/// Inverse of [`to_jet`].
pub fn from_jet(ctx: &ThetaContext, jet: &DeltaJet) -> ExpPolyTerm {
    let n = jet.z0.dim();
    let factor = (2.0 * std::f64::consts::PI * ctx.hbar).powi(-(n as i32));
    let mut poly = ComplexPoly::zero(2 * n);
    for (alpha, d) in jet.iter() {
        let head = &alpha[..n]; // becomes the p-exponents
        let tail = &alpha[n..]; // becomes the x-exponents
        let total: u32 = alpha.iter().sum();
        let tail_total: u32 = tail.iter().sum();
        let scale = (Complex64::new(0.0, 1.0) / ctx.hbar).powu(total)
            * if tail_total.is_multiple_of(2) {
                1.0
            } else {
                -1.0
            }
            * factor;
        let mut beta = Vec::with_capacity(2 * n);
        beta.extend_from_slice(tail);
        beta.extend_from_slice(head);
        poly.add_term(beta, d * scale);
    }
    ExpPolyTerm::new(jet.z0.clone(), poly)
}

/// Multiply a jet by `Theta` using the distributional Leibniz rule:
/// `f d^alpha delta = sum_{beta <= alpha} (-1)^{|beta|} C(alpha, beta)
/// (d^beta f)(z0) d^{alpha - beta} delta`.
pub fn multiply_theta_jet(ctx: &ThetaContext, jet: &DeltaJet) -> DeltaJet {
    let order = jet.order();
    let partials = theta_partials(ctx, &jet.z0, order);
    let mut out = DeltaJet::new(jet.z0.clone());
    for (alpha, d) in jet.iter() {
        for beta in multi_indices(jet.nvars(), alpha.iter().sum::<u32>() as usize) {
            if !le_componentwise(&beta, alpha) {
                continue;
            }
            let df = partials[&beta];
            if df == 0.0 {
                continue;
            }
            let sign = if beta.iter().sum::<u32>() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            let rest: Vec<u32> = alpha.iter().zip(&beta).map(|(a, b)| a - b).collect();
            out.add_term(rest, d * sign * multi_binom(alpha, &beta) * df);
        }
    }
    out
}

/// Weyl symbol of the operator with Born-Jordan symbol `a`: per frequency
/// point, conjugate the `Theta` multiplication by the jet correspondence.
pub fn bj_to_weyl_exp(ctx: &ThetaContext, a: &ExpSymbol) -> ExpSymbol {
    let mut out = ExpSymbol::zero();
    for term in &a.clone().normalized().terms {
        let jet = to_jet(ctx, term);
        let image = multiply_theta_jet(ctx, &jet);
        out.terms.push(from_jet(ctx, &image));
    }
    out.normalized()
}

/// Born-Jordan symbol of the operator with Weyl symbol `b`: solves
/// `Theta . a_jet = b_jet` per frequency point.
///
/// Away from the zero set the system is triangular with diagonal
/// `Theta(z0)` and solves exactly at the same jet order. On the zero set
/// the diagonal vanishes and the order-(m+1) jets map onto the order-m
/// jets; the minimal-norm solution is taken and the residual checked.
/// `max_order` defaults to the input order plus one.
pub fn weyl_to_bj_exp(
    ctx: &ThetaContext,
    b: &ExpSymbol,
    max_order: Option<usize>,
) -> Result<ExpSymbol, JetError> {
    let mut out = ExpSymbol::zero();
    for term in &b.clone().normalized().terms {
        let b_jet = to_jet(ctx, term);
        let theta0 = theta(ctx, &term.z0);
        let a_jet = if theta0.abs() > THETA_ZERO_TOL {
            divide_jet_regular(ctx, &b_jet, theta0)
        } else {
            let order = max_order.unwrap_or(b_jet.order() + 1);
            divide_jet_at_zero(ctx, &b_jet, order)?
        };
        out.terms.push(from_jet(ctx, &a_jet));
    }
    Ok(out.normalized())
}

/// Triangular back-substitution for `Theta . a = b` when `Theta(z0) != 0`.
fn divide_jet_regular(ctx: &ThetaContext, b: &DeltaJet, theta0: f64) -> DeltaJet {
    let order = b.order();
    let partials = theta_partials(ctx, &b.z0, order);
    let indices = multi_indices(b.nvars(), order);
    let mut a = DeltaJet::new(b.z0.clone());
    // highest order first: gamma receives contributions only from alpha
    // componentwise above it, which are already known
    for gamma in indices.iter().rev() {
        let mut acc = b.coeff(gamma);
        for (alpha, da) in a.iter() {
            if alpha != gamma && le_componentwise(gamma, alpha) {
                let beta: Vec<u32> = alpha.iter().zip(gamma).map(|(x, y)| x - y).collect();
                let sign = if beta.iter().sum::<u32>() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                acc -= da * sign * multi_binom(alpha, &beta) * partials[&beta];
            }
        }
        let coeff = acc / theta0;
        if coeff != C_ZERO {
            a.add_term(gamma.clone(), coeff);
        }
    }
    a
}

/// Minimal-norm solve of `Theta . a = b` at a zero of `Theta`, with the
/// unknown jet of order `order` and data of order `order - 1` (or less).
fn divide_jet_at_zero(
    ctx: &ThetaContext,
    b: &DeltaJet,
    order: usize,
) -> Result<DeltaJet, JetError> {
    let nvars = b.nvars();
    let out_order = b.order();
    let in_basis = multi_indices(nvars, order);
    let out_basis = multi_indices(nvars, out_order);
    let mut partials = theta_partials(ctx, &b.z0, order);
    // this branch is only entered when Theta(z0) is classified as a zero;
    // clamping the value entry keeps floating-point residue (~1e-17) from
    // making the system spuriously solvable with enormous coefficients
    partials.insert(vec![0; nvars], 0.0);

    // out[gamma] = sum_{alpha >= gamma} a_alpha (-1)^{|alpha-gamma|}
    //              C(alpha, alpha-gamma) d^{alpha-gamma} Theta(z0)
    let mut m = DMatrix::<Complex64>::zeros(out_basis.len(), in_basis.len());
    for (row, gamma) in out_basis.iter().enumerate() {
        for (col, alpha) in in_basis.iter().enumerate() {
            if le_componentwise(gamma, alpha) {
                let beta: Vec<u32> = alpha.iter().zip(gamma).map(|(x, y)| x - y).collect();
                let sign = if beta.iter().sum::<u32>() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                m[(row, col)] =
                    Complex64::new(sign * multi_binom(alpha, &beta) * partials[&beta], 0.0);
            }
        }
    }
    let rhs = DMatrix::<Complex64>::from_fn(out_basis.len(), 1, |r, _| b.coeff(&out_basis[r]));

    // minimal-norm solution a = M^H (M M^H)^{-1} b
    let mh = m.adjoint();
    let gram = &m * &mh;
    let y = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| JetError::SingularSystem { z0: b.z0.clone() })?;
    let a_vec = mh * y;

    let mut a = DeltaJet::new(b.z0.clone());
    for (col, alpha) in in_basis.iter().enumerate() {
        let c = a_vec[(col, 0)];
        if c != C_ZERO {
            a.add_term(alpha.clone(), c);
        }
    }

    // verify by applying the full multiplication
    let image = multiply_theta_jet(ctx, &a);
    let mut residual = 0.0f64;
    for alpha in multi_indices(nvars, order) {
        residual = residual.max((image.coeff(&alpha) - b.coeff(&alpha)).norm());
    }
    let tolerance = 1e-10 * b.max_coeff_norm().max(1.0);
    if residual > tolerance {
        return Err(JetError::ResidualTooLarge {
            residual,
            tolerance,
            order,
        });
    }
    Ok(a)
}

/// A Born-Jordan symbol of the phase-space translation operator attached to
/// `z0` (whose Weyl symbol is the pure exponential at `z0`).
///
/// Off the zero set the symbol is `Theta(z0)^{-1}` times the exponential; on
/// the zero set it is the first-order symbol `(i/hbar) sigma(z, c) exp(...)`
/// with the minimal-norm multiplier `c = -grad Theta(z0) / |grad
/// Theta(z0)|^2`. The minimal-norm choice among the infinitely many valid
/// symbols is a library convention.
pub fn solve_heisenberg_bj(ctx: &ThetaContext, z0: &PhasePoint) -> ExpPolyTerm {
    let theta0 = theta(ctx, z0);
    let nvars = 2 * z0.dim();
    if theta0.abs() > THETA_ZERO_TOL {
        return ExpPolyTerm::new(
            z0.clone(),
            ComplexPoly::constant(nvars, Complex64::new(1.0 / theta0, 0.0)),
        );
    }
    let g = theta_gradient(ctx, z0);
    let g2: f64 = g.iter().map(|v| v * v).sum();
    let c: Vec<f64> = g.iter().map(|v| -v / g2).collect();
    let poly = sigma_linear_poly(&c).scale(Complex64::new(0.0, 1.0 / ctx.hbar));
    ExpPolyTerm::new(z0.clone(), poly)
}

/// A nonzero element mapped to zero by the Born-Jordan -> Weyl symbol map
/// on symbols of exponential type `r`, when one exists: the pure
/// exponential at the witness point of the first zero hypersurface,
/// available exactly when `r >= sqrt(4 pi hbar)`. Below the threshold the
/// map is injective and `None` is returned.
pub fn kernel_witness(ctx: &ThetaContext, r: f64) -> Option<ExpPolyTerm> {
    assert!(r >= 0.0, "radius must be non-negative");
    if r >= ctx.zero_threshold() {
        Some(ExpPolyTerm::exponential(ctx.witness_point()))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn ctx1(hbar: f64) -> ThetaContext {
        ThetaContext::new(hbar, 1)
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_poly(rng: &mut ChaCha8Rng, nvars: usize, degree: usize) -> ComplexPoly {
        let mut poly = ComplexPoly::zero(nvars);
        for alpha in multi_indices(nvars, degree) {
            if rng.gen_bool(0.6) {
                poly.add_term(alpha, c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)));
            }
        }
        poly
    }

    #[test]
    fn sinc_derivative_branches_agree() {
        // the series converges for every t; compare it against the closed
        // form across the switchover point
        for m in 0..=6usize {
            for &t in &[1.0001f64, 1.2, 2.0, 3.5] {
                let mut series = 0.0;
                let mut k = m.div_ceil(2);
                for _ in 0..90 {
                    let mut coeff = 1.0;
                    for j in 0..m {
                        coeff *= (2 * k - j) as f64;
                    }
                    for j in 1..=(2 * k + 1) {
                        coeff /= j as f64;
                    }
                    series += if k % 2 == 0 { coeff } else { -coeff } * t.powi((2 * k - m) as i32);
                    k += 1;
                }
                let got = sinc_derivatives(t, m)[m];
                assert!(
                    (got - series).abs() <= 1e-11 * (1.0 + series.abs()),
                    "m={m} t={t} got={got} series={series}"
                );
            }
        }
        assert!((sinc_derivatives(0.0, 2)[0] - 1.0).abs() < 1e-15);
        assert!(sinc_derivatives(0.0, 2)[1].abs() < 1e-15);
        // sinc'(pi k) = cos(pi k)/(pi k)
        assert!((sinc_derivatives(PI, 1)[1] - (-1.0 / PI)).abs() < 1e-14);
    }

    #[test]
    fn taylor_matches_direct_formulas() {
        let ctx = ctx1(0.7);
        let z0 = PhasePoint::dim1(1.3, -0.4);
        let taylor = theta_taylor(&ctx, &z0, 3);
        assert!((taylor.coeff(&[0, 0]).re - theta(&ctx, &z0)).abs() < 1e-14);
        let g = theta_gradient(&ctx, &z0);
        assert!((taylor.coeff(&[1, 0]).re - g[0]).abs() < 1e-13);
        assert!((taylor.coeff(&[0, 1]).re - g[1]).abs() < 1e-13);

        // second partials against central differences
        let h = 1e-4;
        let fxx = (theta(&ctx, &PhasePoint::dim1(z0.x[0] + h, z0.p[0])) - 2.0 * theta(&ctx, &z0)
            + theta(&ctx, &PhasePoint::dim1(z0.x[0] - h, z0.p[0])))
            / (h * h);
        assert!((2.0 * taylor.coeff(&[2, 0]).re - fxx).abs() < 1e-5);
        let fxp = (theta(&ctx, &PhasePoint::dim1(z0.x[0] + h, z0.p[0] + h))
            - theta(&ctx, &PhasePoint::dim1(z0.x[0] + h, z0.p[0] - h))
            - theta(&ctx, &PhasePoint::dim1(z0.x[0] - h, z0.p[0] + h))
            + theta(&ctx, &PhasePoint::dim1(z0.x[0] - h, z0.p[0] - h)))
            / (4.0 * h * h);
        assert!((taylor.coeff(&[1, 1]).re - fxp).abs() < 1e-5);
    }

    #[test]
    fn jet_of_pure_exponential() {
        let ctx = ctx1(1.0);
        let term = ExpPolyTerm::exponential(PhasePoint::dim1(0.7, 0.2));
        let jet = to_jet(&ctx, &term);
        assert_eq!(jet.order(), 0);
        assert!((jet.coeff(&[0, 0]) - c(2.0 * PI, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn jet_of_sigma_linear_matches_gradient_pattern() {
        // (i/hbar) sigma(z, c) exp(...) <-> (2 pi hbar)^n sum c_j d_j delta
        let ctx = ctx1(0.5);
        let z0 = PhasePoint::dim1(0.3, 0.9);
        let cvec = [1.25, -0.75];
        let poly = sigma_linear_poly(&cvec).scale(c(0.0, 1.0 / ctx.hbar));
        let jet = to_jet(&ctx, &ExpPolyTerm::new(z0, poly));
        let factor = 2.0 * PI * ctx.hbar;
        assert!((jet.coeff(&[1, 0]) - c(factor * cvec[0], 0.0)).norm() < 1e-12);
        assert!((jet.coeff(&[0, 1]) - c(factor * cvec[1], 0.0)).norm() < 1e-12);
        assert!(jet.coeff(&[0, 0]).norm() < 1e-15);
    }

    #[test]
    fn jet_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = 1 + rng.gen_range(0..2) as usize;
            let ctx = ThetaContext::new(rng.gen_range(0.2..2.0), n);
            let z0 = PhasePoint::from_flat(
                &(0..2 * n)
                    .map(|_| rng.gen_range(-2.0..2.0))
                    .collect::<Vec<_>>(),
            );
            let term = ExpPolyTerm::new(z0, random_poly(&mut rng, 2 * n, 4));
            let back = from_jet(&ctx, &to_jet(&ctx, &term));
            let diff = back.poly.sub(&term.poly).max_coeff_norm();
            assert!(
                diff < 1e-12 * (1.0 + term.poly.max_coeff_norm()),
                "diff={diff}"
            );
        }
    }

    #[test]
    fn theta_multiplication_kills_delta_at_zero() {
        let ctx = ctx1(1.0);
        let jet = to_jet(&ctx, &ExpPolyTerm::exponential(ctx.witness_point()));
        let image = multiply_theta_jet(&ctx, &jet);
        assert!(image.max_coeff_norm() < 1e-14, "{}", image.max_coeff_norm());
    }

    #[test]
    fn first_order_jet_at_zero_collapses_to_gradient_pairing() {
        let ctx = ctx1(1.0);
        let z0 = ctx.witness_point();
        let g = theta_gradient(&ctx, &z0);
        let mut jet = DeltaJet::new(z0.clone());
        let cvec = [0.4, -1.1];
        jet.add_term(vec![1, 0], c(cvec[0], 0.0));
        jet.add_term(vec![0, 1], c(cvec[1], 0.0));
        let image = multiply_theta_jet(&ctx, &jet);
        // Theta(z0) = 0: only the delta coefficient -sum c_j dTheta_j survives
        let expect = -(cvec[0] * g[0] + cvec[1] * g[1]);
        assert!((image.coeff(&[0, 0]) - c(expect, 0.0)).norm() < 1e-13);
        assert!(image.coeff(&[1, 0]).norm() < 1e-14);
        assert!(image.coeff(&[0, 1]).norm() < 1e-14);
    }

    #[test]
    fn pairing_identity_for_theta_multiplication() {
        // < Theta . jet, phi > = < jet, Theta phi >, the right side expanded
        // through the Leibniz rule on exact Taylor data
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..40 {
            let ctx = ctx1(1.0);
            let z0 = if trial % 2 == 0 {
                PhasePoint::dim1(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
            } else {
                let x: f64 = rng.gen_range(0.5..3.0);
                PhasePoint::dim1(x, 2.0 * PI / x)
            };
            let mut jet = DeltaJet::new(z0.clone());
            for alpha in multi_indices(2, 3) {
                if rng.gen_bool(0.5) {
                    jet.add_term(alpha, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                }
            }
            let phi = random_poly(&mut rng, 2, 4);

            let lhs = multiply_theta_jet(&ctx, &jet).pair(&phi);

            let partials = theta_partials(&ctx, &z0, 7);
            let coords = z0.flat();
            let mut rhs = c(0.0, 0.0);
            for (alpha, d) in jet.iter() {
                let sign = if alpha.iter().sum::<u32>() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                let mut dv = c(0.0, 0.0);
                for beta in multi_indices(2, alpha.iter().sum::<u32>() as usize) {
                    if !le_componentwise(&beta, alpha) {
                        continue;
                    }
                    let rest: Vec<u32> = alpha.iter().zip(&beta).map(|(a, b)| a - b).collect();
                    dv += multi_binom(alpha, &beta)
                        * partials[&beta]
                        * phi.partial_multi(&rest).eval(&coords);
                }
                rhs += d * sign * dv;
            }
            let scale = lhs.norm().max(rhs.norm()).max(1.0);
            assert!(
                (lhs - rhs).norm() <= 1e-10 * scale,
                "trial={trial} lhs={lhs} rhs={rhs}"
            );
        }
    }

    #[test]
    fn kernel_characterization_on_a_grid() {
        // bj_to_weyl of a pure exponential vanishes exactly at the zero set:
        // the image coefficient is Theta(z0) itself
        let ctx = ctx1(0.8);
        for i in 0..15 {
            for j in 0..15 {
                let z0 = PhasePoint::dim1(-7.0 + i as f64, -7.0 + j as f64);
                let image = bj_to_weyl_exp(
                    &ctx,
                    &ExpSymbol::from_term(ExpPolyTerm::exponential(z0.clone())),
                );
                let coeff = image.max_coeff_norm();
                let t = theta(&ctx, &z0).abs();
                assert!((coeff - t).abs() < 1e-13, "z0={z0} coeff={coeff} theta={t}");
                assert_eq!(coeff <= 1e-14, t <= 1e-14, "z0={z0}");
            }
        }
    }

    #[test]
    fn bj_to_weyl_on_exponentials() {
        let ctx = ctx1(1.0);
        // off the zero set: multiplication by Theta(z0)
        let z0 = PhasePoint::dim1(1.0, 1.0);
        let sym = ExpSymbol::from_term(ExpPolyTerm::exponential(z0.clone()));
        let image = bj_to_weyl_exp(&ctx, &sym);
        assert_eq!(image.terms.len(), 1);
        let expect = theta(&ctx, &z0);
        assert!((image.terms[0].poly.coeff(&[0, 0]) - c(expect, 0.0)).norm() < 1e-13);

        // on the zero set: the exponential is in the kernel
        let w = ExpSymbol::from_term(ExpPolyTerm::exponential(ctx.witness_point()));
        let image = bj_to_weyl_exp(&ctx, &w);
        assert!(image.max_coeff_norm() < 1e-14);
    }

    #[test]
    fn heisenberg_solver_examples() {
        let ctx = ctx1(1.0);
        // z0 = 0: identity operator, symbol 1
        let sol = solve_heisenberg_bj(&ctx, &PhasePoint::zero(1));
        assert_eq!(sol.poly.degree(), 0);
        assert!((sol.poly.coeff(&[0, 0]) - c(1.0, 0.0)).norm() < 1e-15);

        // x0.p0 = pi hbar: Theta = 2/pi, so the symbol is (pi/2) exp(...)
        let z0 = PhasePoint::dim1(PI, 1.0);
        let sol = solve_heisenberg_bj(&ctx, &z0);
        assert!((sol.poly.coeff(&[0, 0]) - c(PI / 2.0, 0.0)).norm() < 1e-13);

        // witness point: first-order symbol with -sum c_j dTheta_j = 1
        let z0 = ctx.witness_point();
        let sol = solve_heisenberg_bj(&ctx, &z0);
        assert_eq!(sol.poly.degree(), 1);
        let g = theta_gradient(&ctx, &z0);
        // coefficient of p is (i/hbar)c_1, coefficient of x is -(i/hbar)c_2
        let c1 = (sol.poly.coeff(&[0, 1]) / c(0.0, 1.0 / ctx.hbar)).re;
        let c2 = (-sol.poly.coeff(&[1, 0]) / c(0.0, 1.0 / ctx.hbar)).re;
        let constraint = -(c1 * g[0] + c2 * g[1]);
        assert!((constraint - 1.0).abs() < 1e-12, "constraint={constraint}");
    }

    #[test]
    fn heisenberg_round_trip_through_symbol_map() {
        let ctx = ctx1(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for trial in 0..60 {
            let z0 = match trial % 3 {
                0 => PhasePoint::dim1(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
                1 => {
                    let x: f64 = rng.gen_range(0.4..4.0);
                    let k = if trial % 2 == 0 { 1.0 } else { -2.0 };
                    PhasePoint::dim1(x, 2.0 * PI * k / x)
                }
                _ => ctx.witness_point(),
            };
            let a = ExpSymbol::from_term(solve_heisenberg_bj(&ctx, &z0));
            let image = bj_to_weyl_exp(&ctx, &a);
            let expect = ExpSymbol::from_term(ExpPolyTerm::exponential(z0.clone()));
            let dist = image.coeff_distance(&expect);
            assert!(dist <= 1e-9, "trial={trial} z0={z0} dist={dist:e}");
        }
    }

    #[test]
    fn division_round_trip() {
        let ctx = ctx1(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for trial in 0..40 {
            let z0 = if trial % 2 == 0 {
                PhasePoint::dim1(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
            } else {
                let x: f64 = rng.gen_range(0.5..3.0);
                PhasePoint::dim1(x, 2.0 * PI / x)
            };
            let b = ExpSymbol::from_term(ExpPolyTerm::new(z0, random_poly(&mut rng, 2, 2)));
            if b.terms.is_empty() {
                continue;
            }
            let a = weyl_to_bj_exp(&ctx, &b, None).unwrap();
            let back = bj_to_weyl_exp(&ctx, &a);
            let dist = back.coeff_distance(&b);
            let scale = b.max_coeff_norm().max(1.0);
            assert!(dist <= 1e-9 * scale, "trial={trial} dist={dist:e}");
        }
    }

    #[test]
    fn division_at_zero_raises_order_by_one() {
        let ctx = ctx1(1.0);
        let b = ExpSymbol::from_term(ExpPolyTerm::exponential(ctx.witness_point()));
        let a = weyl_to_bj_exp(&ctx, &b, None).unwrap();
        assert_eq!(a.terms.len(), 1);
        assert_eq!(a.terms[0].poly.degree(), 1);
    }

    #[test]
    fn division_of_zero_is_zero() {
        let ctx = ctx1(1.0);
        let out = weyl_to_bj_exp(&ctx, &ExpSymbol::zero(), None).unwrap();
        assert!(out.terms.is_empty());
    }

    #[test]
    fn division_at_zero_needs_the_extra_order() {
        // capping the jet order at the data order leaves no solution at a
        // zero of Theta
        let ctx = ctx1(1.0);
        let b = ExpSymbol::from_term(ExpPolyTerm::exponential(ctx.witness_point()));
        assert!(weyl_to_bj_exp(&ctx, &b, Some(0)).is_err());
        assert!(weyl_to_bj_exp(&ctx, &b, Some(1)).is_ok());
    }

    #[test]
    fn kernel_witness_threshold() {
        let ctx = ctx1(1.0);
        let threshold = ctx.zero_threshold();
        assert!(kernel_witness(&ctx, 0.5 * threshold).is_none());
        assert!(kernel_witness(&ctx, 0.99 * threshold).is_none());
        let w = kernel_witness(&ctx, threshold).unwrap();
        assert!((w.z0.norm_sq() - 4.0 * PI).abs() < 1e-12);
        let image = bj_to_weyl_exp(&ctx, &ExpSymbol::from_term(w));
        assert!(image.max_coeff_norm() <= 1e-14);
    }

    #[test]
    fn kernel_witness_makes_solutions_non_unique() {
        let ctx = ctx1(1.0);
        let z0 = ctx.witness_point();
        let a = ExpSymbol::from_term(solve_heisenberg_bj(&ctx, &z0));
        let w = ExpSymbol::from_term(kernel_witness(&ctx, ctx.zero_threshold()).unwrap());
        let shifted = a.add(&w);
        let img_a = bj_to_weyl_exp(&ctx, &a);
        let img_shifted = bj_to_weyl_exp(&ctx, &shifted);
        assert!(img_a.coeff_distance(&img_shifted) <= 1e-13);
    }
}
