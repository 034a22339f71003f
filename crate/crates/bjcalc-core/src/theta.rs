//! Numeric evaluation of the Cohen kernel `Theta(z) = sinc(x.p / 2 hbar)`
//! in `n >= 1` degrees of freedom, and the geometry of its zero set
//! `Z = union over k != 0 of { x.p = 2 pi k hbar }`.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// A phase-space point `z = (x, p)` with `x, p` real vectors of length `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, p: Vec<f64>) -> Self {
        assert_eq!(x.len(), p.len(), "x and p must have the same length");
        assert!(!x.is_empty(), "dimension must be at least 1");
        Self { x, p }
    }

    /// Convenience constructor for one degree of freedom.
    pub fn dim1(x: f64, p: f64) -> Self {
        Self::new(vec![x], vec![p])
    }

    /// Build from the flat layout `(x_1..x_n, p_1..p_n)`.
    pub fn from_flat(coords: &[f64]) -> Self {
        assert!(
            coords.len() >= 2 && coords.len().is_multiple_of(2),
            "need 2n coordinates"
        );
        let n = coords.len() / 2;
        Self::new(coords[..n].to_vec(), coords[n..].to_vec())
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn zero(n: usize) -> Self {
        Self::new(vec![0.0; n], vec![0.0; n])
    }

    /// The product `x . p`.
    pub fn xp(&self) -> f64 {
        self.x.iter().zip(&self.p).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.x.iter().chain(&self.p).map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Flat coordinates `(x_1..x_n, p_1..p_n)`.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = self.x.clone();
        out.extend_from_slice(&self.p);
        out
    }

    pub fn dist(&self, other: &Self) -> f64 {
        self.x
            .iter()
            .zip(&other.x)
            .chain(self.p.iter().zip(&other.p))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl fmt::Display for PhasePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let coords: Vec<String> = self.flat().iter().map(|v| format!("{v}")).collect();
        write!(f, "({})", coords.join(", "))
    }
}

/// Numeric evaluation context: a positive `hbar` and the number of degrees
/// of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaContext {
    pub hbar: f64,
    pub n: usize,
}

impl ThetaContext {
    pub fn new(hbar: f64, n: usize) -> Self {
        assert!(hbar > 0.0 && hbar.is_finite(), "hbar must be positive");
        assert!(n >= 1, "dimension must be at least 1");
        Self { hbar, n }
    }

    /// Distance from the origin to the zero set: `sqrt(4 pi hbar)`.
    pub fn zero_threshold(&self) -> f64 {
        (4.0 * std::f64::consts::PI * self.hbar).sqrt()
    }

    /// The point `x_0 = p_0 = sqrt(2 pi hbar / n) (1, ..., 1)`, which lies
    /// on the first zero hypersurface at minimal distance from the origin:
    /// `x_0 . p_0 = 2 pi hbar` and `|z_0|^2 = 4 pi hbar`.
    pub fn witness_point(&self) -> PhasePoint {
        let c = (2.0 * std::f64::consts::PI * self.hbar / self.n as f64).sqrt();
        PhasePoint::new(vec![c; self.n], vec![c; self.n])
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThetaError {
    #[error("projection onto branch k={k} did not converge after {iterations} iterations (last residual {residual:e}, point {z})")]
    NoConvergence {
        k: i64,
        iterations: usize,
        residual: f64,
        z: PhasePoint,
    },
    #[error("domain violation: {0}")]
    Domain(String),
}

const SERIES_CUTOFF: f64 = 1e-4;

/// `sin(t)/t` with the removable singularity filled by a 4-term Maclaurin
/// series below `|t| = 1e-4` (series error there is far below 1 ulp).
pub fn sinc(t: f64) -> f64 {
    if t.abs() < SERIES_CUTOFF {
        let t2 = t * t;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0 - t2 * t2 * t2 / 5040.0
    } else {
        t.sin() / t
    }
}

/// Derivative of `sinc`, series-evaluated near zero.
pub fn sinc_prime(t: f64) -> f64 {
    if t.abs() < SERIES_CUTOFF {
        let t2 = t * t;
        -t / 3.0 + t * t2 / 30.0 - t * t2 * t2 / 840.0 + t * t2 * t2 * t2 / 45360.0
    } else {
        (t.cos() - t.sin() / t) / t
    }
}

/// `Theta(z) = sinc(x.p / 2 hbar)`; equals 1 at `z = 0` and takes values in
/// roughly `[-0.2173, 1]`.
pub fn theta(ctx: &ThetaContext, z: &PhasePoint) -> f64 {
    sinc(z.xp() / (2.0 * ctx.hbar))
}

const GAUSS5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GAUSS5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_08,
    0.478_628_670_499_366_47,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
];

/// `Theta` evaluated from its defining integral
/// `int_0^1 exp(i (tau - 1/2) x.p / hbar) d tau` by composite 5-point
/// Gauss-Legendre quadrature over `m` panels. The imaginary part cancels by
/// symmetry, leaving the cosine integral. Exists as an independent check of
/// [`theta`].
pub fn theta_quadrature(ctx: &ThetaContext, z: &PhasePoint, m: usize) -> f64 {
    assert!(m >= 1, "panel count must be at least 1");
    let omega = z.xp() / ctx.hbar;
    let h = 1.0 / m as f64;
    let mut total = 0.0;
    for panel in 0..m {
        let a = panel as f64 * h;
        let mid = a + 0.5 * h;
        let mut acc = 0.0;
        for (node, weight) in GAUSS5_NODES.iter().zip(&GAUSS5_WEIGHTS) {
            let tau = mid + 0.5 * h * node;
            acc += weight * ((tau - 0.5) * omega).cos();
        }
        total += 0.5 * h * acc;
    }
    total
}

/// Gradient of `Theta` in the flat layout `(d/dx_1..d/dx_n, d/dp_1..d/dp_n)`:
/// `grad Theta = sinc'(t) (p, x) / (2 hbar)` with `t = x.p / 2 hbar`. The
/// `x`-derivatives carry `p`-weights and vice versa.
pub fn theta_gradient(ctx: &ThetaContext, z: &PhasePoint) -> Vec<f64> {
    let scale = sinc_prime(z.xp() / (2.0 * ctx.hbar)) / (2.0 * ctx.hbar);
    let mut out = Vec::with_capacity(2 * z.dim());
    out.extend(z.p.iter().map(|v| scale * v));
    out.extend(z.x.iter().map(|v| scale * v));
    out
}

/// Result of projecting a point onto the zero set.
#[derive(Debug, Clone)]
pub struct ZeroProjection {
    pub distance: f64,
    pub nearest: PhasePoint,
    /// Index of the achieving hypersurface `x.p = 2 pi k hbar`.
    pub k: i64,
}

/// Minimal distance from `z` to the branch `x.p = 2 pi k hbar` (`k != 0`).
///
/// Stationary points of the constrained problem satisfy
/// `w = (z + lambda S z') / (1 - lambda^2)` coordinate-wise coupled through
/// the swap `S(x,p) = (p,x)`; eliminating `w` leaves the scalar equation
/// `(q (1 + lambda^2) + lambda |z|^2) / (1 - lambda^2)^2 = c` in
/// `lambda in (-1, 1)`, whose roots are located by a scan-and-bisect pass.
/// Every candidate (plus the branch vertices and the linear projection seed)
/// is then polished by Newton iteration on the full Lagrange system.
pub fn branch_distance(
    ctx: &ThetaContext,
    z: &PhasePoint,
    k: i64,
) -> Result<ZeroProjection, ThetaError> {
    assert!(k != 0, "k = 0 is not part of the zero set");
    let c = 2.0 * std::f64::consts::PI * k as f64 * ctx.hbar;
    let n = z.dim();

    let mut candidates: Vec<PhasePoint> = Vec::new();

    // Branch vertices: the points of the branch closest to the origin,
    // x = s t (1,..,1), p = sign(c) s t (1,..,1) with n t^2 = |c|.
    let t = (c.abs() / n as f64).sqrt();
    for s in [1.0, -1.0] {
        candidates.push(PhasePoint::new(vec![s * t; n], vec![s * t * c.signum(); n]));
    }

    // First-order projection along the constraint gradient.
    let g = constraint_residual(z, c);
    let grad = swap(z);
    let gn2 = grad.norm_sq();
    if gn2 > 1e-30 {
        let step = g / gn2;
        let flat: Vec<f64> = z
            .flat()
            .iter()
            .zip(grad.flat())
            .map(|(zi, gi)| zi - step * gi)
            .collect();
        candidates.push(PhasePoint::from_flat(&flat));
    }

    // Roots of the scalar stationarity equation.
    let q = z.xp();
    let z2 = z.norm_sq();
    let h = |lam: f64| -> f64 {
        let d = 1.0 - lam * lam;
        (q * (1.0 + lam * lam) + lam * z2) / (d * d) - c
    };
    let steps = 512;
    let lim = 1.0 - 1e-9;
    let mut prev_l = -lim;
    let mut prev_v = h(prev_l);
    for j in 1..=steps {
        let lam = -lim + 2.0 * lim * j as f64 / steps as f64;
        let v = h(lam);
        if prev_v == 0.0 || (prev_v < 0.0) != (v < 0.0) {
            let mut lo = prev_l;
            let mut hi = lam;
            let mut flo = prev_v;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let fm = h(mid);
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            let lam_root = 0.5 * (lo + hi);
            let d = 1.0 - lam_root * lam_root;
            if d.abs() > 1e-12 {
                let zf = z.flat();
                let sf = swap(z).flat();
                let wf: Vec<f64> = zf
                    .iter()
                    .zip(&sf)
                    .map(|(zi, si)| (zi + lam_root * si) / d)
                    .collect();
                candidates.push(PhasePoint::from_flat(&wf));
            }
        }
        prev_l = lam;
        prev_v = v;
    }

    // Newton-polish every candidate on the Lagrange system and keep the best.
    let scale = 1.0 + z.norm() + c.abs().sqrt();
    let mut best: Option<PhasePoint> = None;
    let mut last_residual = f64::INFINITY;
    let max_iter = 60;
    for cand in candidates {
        if let Some(w) = newton_polish(z, &cand, c, max_iter) {
            let ok = constraint_residual(&w, c).abs() <= 1e-10 * scale * scale;
            if ok {
                let better = match &best {
                    Some(b) => z.dist(&w) < z.dist(b),
                    None => true,
                };
                if better {
                    best = Some(w);
                }
            }
        } else {
            last_residual = last_residual.min(constraint_residual(&cand, c).abs());
        }
    }

    match best {
        Some(nearest) => Ok(ZeroProjection {
            distance: z.dist(&nearest),
            nearest,
            k,
        }),
        None => Err(ThetaError::NoConvergence {
            k,
            iterations: max_iter,
            residual: last_residual,
            z: z.clone(),
        }),
    }
}

fn swap(z: &PhasePoint) -> PhasePoint {
    PhasePoint::new(z.p.clone(), z.x.clone())
}

fn constraint_residual(w: &PhasePoint, c: f64) -> f64 {
    w.xp() - c
}

/// Newton iteration on the Lagrange conditions
/// `w - z = lambda (p_w, x_w)`, `x_w . p_w = c`, in the `2n+1` unknowns
/// `(w, lambda)`. Uses the block structure of the Jacobian: solving
/// `(I - lambda S) u = rhs` couples each `(x_j, p_j)` pair independently.
fn newton_polish(
    z: &PhasePoint,
    start: &PhasePoint,
    c: f64,
    max_iter: usize,
) -> Option<PhasePoint> {
    let n = z.dim();
    let mut w = start.clone();
    // initial multiplier: least-squares fit of w - z = lambda * S w
    let mut lambda = {
        let sw = swap(&w);
        let num: f64 = w
            .flat()
            .iter()
            .zip(z.flat())
            .zip(sw.flat())
            .map(|((wi, zi), si)| (wi - zi) * si)
            .sum();
        let den = sw.norm_sq().max(1e-300);
        num / den
    };
    let scale = 1.0 + z.norm() + c.abs().sqrt();
    let tol = 1e-13 * scale * scale;

    for _ in 0..max_iter {
        // residuals
        let sw = swap(&w);
        let r1: Vec<f64> = w
            .flat()
            .iter()
            .zip(z.flat())
            .zip(sw.flat())
            .map(|((wi, zi), si)| wi - zi - lambda * si)
            .collect();
        let r2 = constraint_residual(&w, c);
        let res = r1.iter().map(|v| v * v).sum::<f64>().sqrt() + r2.abs();
        if res <= tol {
            return Some(w);
        }

        // Solve J * (dw, dl) = -(r1, r2).
        // J = [ I - lambda S   -S w ]
        //     [ (S w)^T          0  ]
        // For each pair (x_j, p_j) the matrix I - lambda S is
        // [[1, -lambda], [-lambda, 1]] with determinant 1 - lambda^2.
        let det = 1.0 - lambda * lambda;
        if det.abs() < 1e-14 {
            // Jacobian singular along this direction; nudge lambda.
            lambda *= 1.0 - 1e-6;
            continue;
        }
        // Write dw = A^{-1}(-r1) + dl * A^{-1}(S w) with A = I - lambda S.
        let inv_apply = |vx: f64, vp: f64| -> (f64, f64) {
            ((vx + lambda * vp) / det, (lambda * vx + vp) / det)
        };
        let mut a_inv_r = vec![0.0; 2 * n];
        let mut a_inv_sw = vec![0.0; 2 * n];
        for j in 0..n {
            let (ux, up) = inv_apply(-r1[j], -r1[n + j]);
            a_inv_r[j] = ux;
            a_inv_r[n + j] = up;
            let (vx, vp) = inv_apply(sw.x[j], sw.p[j]);
            a_inv_sw[j] = vx;
            a_inv_sw[n + j] = vp;
        }
        // Constraint row: (S w)^T dw = -r2.
        let swf = sw.flat();
        let num: f64 = swf.iter().zip(&a_inv_r).map(|(a, b)| a * b).sum();
        let den: f64 = swf.iter().zip(&a_inv_sw).map(|(a, b)| a * b).sum();
        if den.abs() < 1e-300 {
            return None;
        }
        let dl = (-r2 - num) / den;
        let mut new_flat = w.flat();
        for j in 0..2 * n {
            new_flat[j] += a_inv_r[j] + dl * a_inv_sw[j];
        }
        w = PhasePoint::from_flat(&new_flat);
        lambda += dl;
        if !lambda.is_finite() || !w.norm().is_finite() {
            return None;
        }
    }
    // accept if already stationary enough
    let sw = swap(&w);
    let r1: f64 = w
        .flat()
        .iter()
        .zip(z.flat())
        .zip(sw.flat())
        .map(|((wi, zi), si)| (wi - zi - lambda * si).powi(2))
        .sum::<f64>()
        .sqrt();
    let r2 = constraint_residual(&w, c).abs();
    if r1 + r2 <= 1e-9 * scale * scale {
        Some(w)
    } else {
        None
    }
}

/// Minimal distance from `z` to the full zero set, over all branches
/// `k != 0`. Branches are scanned outward until their origin-distance
/// `sqrt(4 pi |k| hbar)` exceeds any distance already achieved.
pub fn zero_set_distance(ctx: &ThetaContext, z: &PhasePoint) -> Result<ZeroProjection, ThetaError> {
    let mut best: Option<ZeroProjection> = None;
    let mut abs_k: i64 = 1;
    loop {
        let branch_origin_dist = (4.0 * std::f64::consts::PI * abs_k as f64 * ctx.hbar).sqrt();
        if let Some(b) = &best {
            // every point of branch |k| is at least this far away
            if branch_origin_dist - z.norm() > b.distance {
                break;
            }
        }
        for k in [abs_k, -abs_k] {
            let proj = branch_distance(ctx, z, k)?;
            let better = best.as_ref().is_none_or(|b| proj.distance < b.distance);
            if better {
                best = Some(proj);
            }
        }
        abs_k += 1;
        if abs_k > 1_000_000 {
            return Err(ThetaError::Domain(
                "zero-set search exceeded branch budget".into(),
            ));
        }
    }
    Ok(best.expect("at least branch 1 is always evaluated"))
}

/// Distance from a scalar `t` to `Z_0 = { 2 pi k hbar : k != 0 }`.
pub fn dist_to_zero_line(hbar: f64, t: f64) -> f64 {
    let period = 2.0 * std::f64::consts::PI * hbar;
    let k = (t / period).round();
    if k == 0.0 {
        period - t.abs()
    } else {
        let mut d = (t - k * period).abs();
        // neighbours, skipping k = 0
        for kk in [k - 1.0, k + 1.0] {
            if kk != 0.0 {
                d = d.min((t - kk * period).abs());
            }
        }
        d
    }
}

/// One verified bound within a [`BoundsReport`].
#[derive(Debug, Clone)]
pub struct BoundCheck {
    pub name: &'static str,
    pub samples: usize,
    pub empirical_min: f64,
    pub floor: f64,
    pub pass: bool,
    pub witness: Option<PhasePoint>,
}

impl fmt::Display for BoundCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} (min {:.6e}, floor {:.6e}, samples {})",
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.empirical_min,
            self.floor,
            self.samples
        )?;
        if !self.pass {
            if let Some(w) = &self.witness {
                write!(f, " witness {w}")?;
            }
        }
        Ok(())
    }
}

/// Report of the sampled lower-bound checks on `Theta`.
#[derive(Debug, Clone)]
pub struct BoundsReport {
    pub checks: Vec<BoundCheck>,
}

impl BoundsReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

impl fmt::Display for BoundsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        write!(f, "overall: {}", if self.pass() { "PASS" } else { "FAIL" })
    }
}

/// Verify, on deterministic pseudo-random samples, the quantitative lower
/// bounds that make division by `Theta` possible:
///
/// 1. `|Theta(z)| (1 + |z|)^2 >= C dist(z, Z)` — the empirical minimum of
///    the ratio must stay above a configured floor (1e-3);
/// 2. `|grad Theta(z)| |z| >= 2` at points of the zero set;
/// 3. in one variable, `|sinc(t/2 hbar)| (1 + |t|) >= C_0 dist(t, Z_0)` —
///    the empirical infimum must be positive, and `|sinc(t/2 hbar)| >= 2/pi`
///    on `|t| <= pi hbar`.
pub fn check_hormander_bounds(
    ctx: &ThetaContext,
    box_half_width: f64,
    samples: usize,
    seed: u64,
) -> Result<BoundsReport, ThetaError> {
    assert!(samples >= 1, "need at least one sample");
    assert!(box_half_width > 0.0, "box must have positive half-width");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = ctx.n;

    // (1) ratio |Theta|(1+|z|)^2 / dist(z, Z)
    let ratio_floor = 1e-3;
    let mut ratio_min = f64::INFINITY;
    let mut ratio_witness = None;
    for _ in 0..samples {
        let z = random_point(&mut rng, n, box_half_width);
        let d = zero_set_distance(ctx, &z)?.distance;
        if d < 1e-12 {
            continue;
        }
        let ratio = theta(ctx, &z).abs() * (1.0 + z.norm()).powi(2) / d;
        if ratio < ratio_min {
            ratio_min = ratio;
            ratio_witness = Some(z);
        }
    }
    let ratio_pass = ratio_min >= ratio_floor;

    // (2) |grad Theta| |z| >= 2 on the zero set
    let grad_floor = 2.0 - 1e-9;
    let mut grad_min = f64::INFINITY;
    let mut grad_witness = None;
    for _ in 0..samples.min(10_000) {
        let z = random_zero_point(&mut rng, ctx, box_half_width);
        let g = theta_gradient(ctx, &z);
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let val = gnorm * z.norm();
        if val < grad_min {
            grad_min = val;
            grad_witness = Some(z);
        }
    }
    let grad_pass = grad_min >= grad_floor;

    // (3) scalar sinc bound
    let mut sinc_min = f64::INFINITY;
    let mut sinc_witness = None;
    let mut small_t_min = f64::INFINITY;
    let t_range = (box_half_width * box_half_width).max(4.0 * std::f64::consts::PI * ctx.hbar);
    for _ in 0..samples {
        let t: f64 = rng.gen_range(-t_range..t_range);
        let d = dist_to_zero_line(ctx.hbar, t);
        if d > 1e-12 {
            let ratio = sinc(t / (2.0 * ctx.hbar)).abs() * (1.0 + t.abs()) / d;
            if ratio < sinc_min {
                sinc_min = ratio;
                sinc_witness = Some(PhasePoint::dim1(t, 0.0));
            }
        }
        let ts = t / t_range * std::f64::consts::PI * ctx.hbar;
        small_t_min = small_t_min.min(sinc(ts / (2.0 * ctx.hbar)).abs());
    }
    let sinc_pass = sinc_min > 0.0;
    let small_t_floor = 2.0 / std::f64::consts::PI - 1e-12;
    let small_t_pass = small_t_min >= small_t_floor;

    Ok(BoundsReport {
        checks: vec![
            BoundCheck {
                name: "theta_distance_ratio",
                samples,
                empirical_min: ratio_min,
                floor: ratio_floor,
                pass: ratio_pass,
                witness: if ratio_pass { None } else { ratio_witness },
            },
            BoundCheck {
                name: "zero_set_gradient",
                samples: samples.min(10_000),
                empirical_min: grad_min,
                floor: grad_floor,
                pass: grad_pass,
                witness: if grad_pass { None } else { grad_witness },
            },
            BoundCheck {
                name: "sinc_distance_ratio",
                samples,
                empirical_min: sinc_min,
                floor: 0.0,
                pass: sinc_pass,
                witness: if sinc_pass { None } else { sinc_witness },
            },
            BoundCheck {
                name: "sinc_small_argument",
                samples,
                empirical_min: small_t_min,
                floor: small_t_floor,
                pass: small_t_pass,
                witness: None,
            },
        ],
    })
}

fn random_point(rng: &mut ChaCha8Rng, n: usize, half_width: f64) -> PhasePoint {
    let coords: Vec<f64> = (0..2 * n)
        .map(|_| rng.gen_range(-half_width..half_width))
        .collect();
    PhasePoint::from_flat(&coords)
}

/// A deterministic random point of the zero set: sample `x` and a direction
/// for `p`, then shift `p` along `x` so that `x.p = 2 pi k hbar`.
fn random_zero_point(rng: &mut ChaCha8Rng, ctx: &ThetaContext, half_width: f64) -> PhasePoint {
    loop {
        let k: i64 = *[1, -1, 2, -2, 3].get(rng.gen_range(0..5)).unwrap();
        let c = 2.0 * std::f64::consts::PI * k as f64 * ctx.hbar;
        let x: Vec<f64> = (0..ctx.n)
            .map(|_| rng.gen_range(-half_width..half_width))
            .collect();
        let xn2: f64 = x.iter().map(|v| v * v).sum();
        if xn2 < 1e-6 * half_width * half_width {
            continue;
        }
        let y: Vec<f64> = (0..ctx.n)
            .map(|_| rng.gen_range(-half_width..half_width))
            .collect();
        let xy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let shift = (c - xy) / xn2;
        let p: Vec<f64> = y.iter().zip(&x).map(|(yi, xi)| yi + shift * xi).collect();
        return PhasePoint::new(x, p);
    }
}

/// The degree-2 homogeneous diffeomorphism of the half-space `z_1 > 0`:
/// `y_1 = z_1^2`, `y_j = z_1 z_j` for `j = 2..n`,
/// `y_{n+j-1} = z_1 z_{n+j}` for `j = 2..n`, and `y_{2n} = x.p`.
/// (`z_{n+1}` carries no product of its own; it is recovered from `y_{2n}`.)
pub fn cone_forward(z: &PhasePoint) -> Result<Vec<f64>, ThetaError> {
    let n = z.dim();
    let zf = z.flat();
    if zf[0] <= 0.0 {
        return Err(ThetaError::Domain(format!(
            "cone coordinates need z_1 > 0, got {}",
            zf[0]
        )));
    }
    let mut y = vec![0.0; 2 * n];
    y[0] = zf[0] * zf[0];
    for j in 1..n {
        y[j] = zf[0] * zf[j];
    }
    for j in 1..n {
        y[n + j - 1] = zf[0] * zf[n + j];
    }
    y[2 * n - 1] = z.xp();
    Ok(y)
}

/// Inverse of [`cone_forward`] on `y_1 > 0`.
pub fn cone_inverse(y: &[f64], n: usize) -> Result<PhasePoint, ThetaError> {
    assert_eq!(y.len(), 2 * n, "need 2n coordinates");
    if y[0] <= 0.0 {
        return Err(ThetaError::Domain(format!(
            "inverse cone coordinates need y_1 > 0, got {}",
            y[0]
        )));
    }
    let root = y[0].sqrt();
    let mut zf = vec![0.0; 2 * n];
    zf[0] = root;
    for j in 1..n {
        zf[j] = y[j] / root;
    }
    for j in 1..n {
        zf[n + j] = y[n + j - 1] / root;
    }
    // x.p = y_{2n} determines z_{n+1}
    let mut cross = 0.0;
    for j in 1..n {
        cross += y[j] * y[n + j - 1] / y[0];
    }
    zf[n] = (y[2 * n - 1] - cross) / root;
    Ok(PhasePoint::from_flat(&zf))
}
