//! Sampled covariant symbols on a square grid: the numerical realization of
//! the Born-Jordan <-> Weyl symbol map on band-limited symbols in one degree
//! of freedom.
//!
//! A [`GridSymbol`] holds samples of a covariant symbol on the uniform grid
//! of `[-L, L]^2`, supported in `|z| <= r`. The forward map multiplies the
//! samples by `Theta`; as long as `r < sqrt(4 pi hbar)` the support avoids
//! the zero set and the pointwise division inverts it exactly on the same
//! grid. The conditioning of the inverse is `1 / min |Theta|` over the
//! support and blows up as `r` approaches the threshold.

use std::fmt;
use std::io::{self, Read, Write};

use num_complex::Complex64;
use thiserror::Error;

use crate::theta::{theta, PhasePoint, ThetaContext};

const MAGIC: &[u8; 4] = b"BJGR";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("support radius {r} reaches the zero set of Theta (threshold sqrt(4 pi hbar) = {threshold}); the symbol map is not invertible there")]
    ThresholdViolation { r: f64, threshold: f64 },
    #[error("Theta is {min_theta:e} in magnitude on the support grid; refusing division below the practical floor {floor:e}")]
    NearSingular { min_theta: f64, floor: f64 },
    #[error("invalid grid: {0}")]
    Invalid(String),
    #[error("grid io: {0}")]
    Io(#[from] io::Error),
    #[error("grid format: {0}")]
    Format(String),
}

/// Practical guard for the pointwise division, stricter than the geometric
/// radius test alone.
const MIN_THETA_FLOOR: f64 = 1e-9;

/// A covariant symbol sampled on the uniform `N x N` grid of `[-L, L]^2`
/// with spacing `h = 2L/N`; sample `(i, j)` sits at
/// `(x, p) = (-L + i h, -L + j h)` and the layout is row-major in `i`.
#[derive(Debug, Clone)]
pub struct GridSymbol {
    hbar: f64,
    half_width: f64,
    resolution: usize,
    support_radius: f64,
    samples: Vec<Complex64>,
}

impl GridSymbol {
    /// Build from a closed-form covariant symbol; samples outside the
    /// support radius are forced to zero.
    pub fn from_fn<F>(
        hbar: f64,
        half_width: f64,
        resolution: usize,
        support_radius: f64,
        f: F,
    ) -> Result<Self, GridError>
    where
        F: Fn(f64, f64) -> Complex64,
    {
        let mut grid = Self::validated_empty(hbar, half_width, resolution, support_radius)?;
        let n = resolution;
        for i in 0..n {
            let x = grid.coordinate(i);
            for j in 0..n {
                let p = grid.coordinate(j);
                if x * x + p * p <= support_radius * support_radius {
                    grid.samples[i * n + j] = f(x, p);
                }
            }
        }
        Ok(grid)
    }

    /// The standard smooth fixture: a Gaussian bump
    /// `exp(-|z|^2 / 2 s^2)` with `s = r/4`, truncated at `|z| = r`.
    pub fn gaussian_bump(
        hbar: f64,
        half_width: f64,
        resolution: usize,
        support_radius: f64,
    ) -> Result<Self, GridError> {
        let s = support_radius / 4.0;
        Self::from_fn(hbar, half_width, resolution, support_radius, |x, p| {
            Complex64::new((-(x * x + p * p) / (2.0 * s * s)).exp(), 0.0)
        })
    }

    fn validated_empty(
        hbar: f64,
        half_width: f64,
        resolution: usize,
        support_radius: f64,
    ) -> Result<Self, GridError> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(GridError::Invalid("hbar must be positive".into()));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(GridError::Invalid("half-width must be positive".into()));
        }
        if resolution == 0 || !resolution.is_multiple_of(2) {
            return Err(GridError::Invalid(format!(
                "resolution must be even and positive, got {resolution}"
            )));
        }
        if !(support_radius > 0.0 && support_radius <= half_width) {
            return Err(GridError::Invalid(format!(
                "support radius must satisfy 0 < r <= L, got r={support_radius}, L={half_width}"
            )));
        }
        Ok(Self {
            hbar,
            half_width,
            resolution,
            support_radius,
            samples: vec![Complex64::new(0.0, 0.0); resolution * resolution],
        })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// Grid spacing `h = 2L/N`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.resolution as f64
    }

    /// Coordinate of grid line `i`: `-L + i h`.
    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    pub fn sample(&self, i: usize, j: usize) -> Complex64 {
        self.samples[i * self.resolution + j]
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn context(&self) -> ThetaContext {
        ThetaContext::new(self.hbar, 1)
    }

    fn map_samples<F>(&self, f: F) -> Self
    where
        F: Fn(usize, usize, Complex64) -> Complex64,
    {
        let mut out = self.clone();
        let n = self.resolution;
        for i in 0..n {
            for j in 0..n {
                out.samples[i * n + j] = f(i, j, self.samples[i * n + j]);
            }
        }
        out
    }

    fn in_support(&self, i: usize, j: usize) -> bool {
        let x = self.coordinate(i);
        let p = self.coordinate(j);
        x * x + p * p <= self.support_radius * self.support_radius
    }

    pub fn max_norm(&self) -> f64 {
        self.samples.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest sample difference, normalized by the other grid's sup norm.
    pub fn relative_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.resolution, other.resolution);
        let scale = other.max_norm().max(f64::MIN_POSITIVE);
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
            / scale
    }
}

/// Pointwise multiplication of the samples by `Theta`: the covariant-symbol
/// form of the Born-Jordan -> Weyl map. Support is preserved.
pub fn grid_forward(a: &GridSymbol) -> GridSymbol {
    let ctx = a.context();
    a.map_samples(|i, j, v| v * theta(&ctx, &PhasePoint::dim1(a.coordinate(i), a.coordinate(j))))
}

/// Minimum of `|Theta|` over the support grid points.
fn min_theta_on_support(b: &GridSymbol) -> f64 {
    let ctx = b.context();
    let n = b.resolution;
    let mut min = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            if b.in_support(i, j) {
                let t = theta(&ctx, &PhasePoint::dim1(b.coordinate(i), b.coordinate(j))).abs();
                min = min.min(t);
            }
        }
    }
    min
}

fn check_invertible(b: &GridSymbol) -> Result<f64, GridError> {
    let threshold = b.context().zero_threshold();
    if b.support_radius >= threshold {
        return Err(GridError::ThresholdViolation {
            r: b.support_radius,
            threshold,
        });
    }
    let min_theta = min_theta_on_support(b);
    if min_theta < MIN_THETA_FLOOR {
        return Err(GridError::NearSingular {
            min_theta,
            floor: MIN_THETA_FLOOR,
        });
    }
    Ok(min_theta)
}

/// Pointwise division by `Theta` on the support: the exact inverse of
/// [`grid_forward`] on the same grid. Requires the support to stay strictly
/// below the `sqrt(4 pi hbar)` threshold, where `Theta` has no zeros.
pub fn grid_inverse(b: &GridSymbol) -> Result<GridSymbol, GridError> {
    check_invertible(b)?;
    let ctx = b.context();
    Ok(b.map_samples(|i, j, v| {
        if b.in_support(i, j) {
            v / theta(&ctx, &PhasePoint::dim1(b.coordinate(i), b.coordinate(j)))
        } else {
            v
        }
    }))
}

/// Sup-norm amplification bound of the inverse map:
/// `max over support of 1/|Theta|`.
pub fn condition_number(b: &GridSymbol) -> Result<f64, GridError> {
    let min_theta = check_invertible(b)?;
    Ok(1.0 / min_theta)
}

/// Evaluate the symbol at arbitrary phase-space points from its covariant
/// samples by the involutive transform
/// `a(z) = (2 pi hbar)^{-1} sum_grid exp(-(i/hbar) sigma(z, z')) a_sigma(z') h^2`
/// (trapezoid quadrature; the samples vanish at the boundary).
pub fn synthesize(a: &GridSymbol, points: &[PhasePoint]) -> Vec<Complex64> {
    let n = a.resolution;
    let h2 = a.spacing() * a.spacing();
    let norm = 1.0 / (2.0 * std::f64::consts::PI * a.hbar);
    points
        .iter()
        .map(|z| {
            assert_eq!(z.dim(), 1, "grid symbols are 1-dimensional");
            let (zx, zp) = (z.x[0], z.p[0]);
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                let x = a.coordinate(i);
                for j in 0..n {
                    let v = a.samples[i * n + j];
                    if v == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let p = a.coordinate(j);
                    // sigma(z, z') = p x' - x p'
                    let phase = -(zp * x - zx * p) / a.hbar;
                    acc += v * Complex64::new(phase.cos(), phase.sin());
                }
            }
            acc * norm * h2
        })
        .collect()
}

impl fmt::Display for GridSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "grid N={} L={} hbar={} r={} ({} samples)",
            self.resolution,
            self.half_width,
            self.hbar,
            self.support_radius,
            self.samples.len()
        )
    }
}

// ---------------------------------------------------------------------------
// Exchange formats
// ---------------------------------------------------------------------------

/// Write the little-endian binary layout: magic `BJGR`, version `u32`,
/// `N u32`, `L f64`, `hbar f64`, `r f64`, then `N^2` complex128 samples
/// row-major.
pub fn write_binary<W: Write>(grid: &GridSymbol, mut w: W) -> Result<(), GridError> {
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(grid.resolution as u32).to_le_bytes())?;
    w.write_all(&grid.half_width.to_le_bytes())?;
    w.write_all(&grid.hbar.to_le_bytes())?;
    w.write_all(&grid.support_radius.to_le_bytes())?;
    for c in &grid.samples {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<GridSymbol, GridError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(GridError::Format(format!(
            "bad magic {:?}, expected \"BJGR\"",
            magic
        )));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let version = u32::from_le_bytes(u32buf);
    if version != FORMAT_VERSION {
        return Err(GridError::Format(format!(
            "unsupported version {version}, expected {FORMAT_VERSION}"
        )));
    }
    r.read_exact(&mut u32buf)?;
    let n = u32::from_le_bytes(u32buf) as usize;
    let mut f64buf = [0u8; 8];
    r.read_exact(&mut f64buf)?;
    let half_width = f64::from_le_bytes(f64buf);
    r.read_exact(&mut f64buf)?;
    let hbar = f64::from_le_bytes(f64buf);
    r.read_exact(&mut f64buf)?;
    let support_radius = f64::from_le_bytes(f64buf);
    let mut grid = GridSymbol::validated_empty(hbar, half_width, n, support_radius)?;
    for c in grid.samples.iter_mut() {
        r.read_exact(&mut f64buf)?;
        let re = f64::from_le_bytes(f64buf);
        r.read_exact(&mut f64buf)?;
        let im = f64::from_le_bytes(f64buf);
        *c = Complex64::new(re, im);
    }
    for i in 0..n {
        for j in 0..n {
            if !grid.in_support(i, j) && grid.sample(i, j).norm() > 1e-14 {
                return Err(GridError::Format(format!(
                    "sample ({i},{j}) outside the stated support radius {support_radius} is {:e}",
                    grid.sample(i, j).norm()
                )));
            }
        }
    }
    Ok(grid)
}

/// CSV export with header `z1,z2,re,im`, one row per grid sample.
pub fn write_csv<W: Write>(grid: &GridSymbol, mut w: W) -> Result<(), GridError> {
    writeln!(w, "z1,z2,re,im")?;
    let n = grid.resolution;
    for i in 0..n {
        let x = grid.coordinate(i);
        for j in 0..n {
            let p = grid.coordinate(j);
            let v = grid.samples[i * n + j];
            writeln!(w, "{x},{p},{},{}", v.re, v.im)?;
        }
    }
    Ok(())
}
