//! Exact symbolic-numeric calculus for Born-Jordan and Weyl quantization.
//!
//! The library has two arithmetic worlds:
//!
//! * **Exact**: Gaussian-rational coefficients carrying integer powers of a
//!   symbolic `hbar` ([`scalar::ExactScalar`]), the commutative polynomial
//!   ring in `(x, p)` ([`symbol::PolySymbol`]), the normal-ordered Weyl
//!   algebra ([`weyl::NormalOperator`]), and the quantization /
//!   dequantization maps between them ([`quantize`]).
//! * **Numeric**: `f64` evaluation of the Cohen kernel
//!   `Theta(z) = sinc(x.p / 2 hbar)`, its zero-set geometry ([`theta`]),
//!   the delta-jet calculus for exponential symbols ([`expjet`]), and
//!   sampled covariant symbols on grids ([`grid`]).
//!
//! The two worlds meet in the symbol maps: multiplying a covariant symbol by
//! `Theta` turns a Born-Jordan symbol into the Weyl symbol of the same
//! operator, and dividing by `Theta` (where possible) goes back.
//!
//! Everything is a plain immutable value; there is no global state, so all
//! operations are referentially transparent and safe to call concurrently.

pub mod expjet;
pub mod grid;
pub mod parse;
pub mod quantize;
pub mod rational;
pub mod scalar;
pub mod symbol;
pub mod theta;
pub mod weyl;

pub use quantize::Scheme;
pub use rational::Rational;
pub use scalar::ExactScalar;
pub use symbol::PolySymbol;
pub use theta::{PhasePoint, ThetaContext};
pub use weyl::NormalOperator;
