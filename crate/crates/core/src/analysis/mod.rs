//! Entire-function checks: maximum modulus, growth order, Jensen's formula,
//! zero-count bounds, density classification of `β√k` sequences and the
//! Weierstrass-product counterexample.

mod growth;
mod product;

pub use growth::{spectrogram_growth, Direction, GrowthFit, SpectrogramExtension};
pub use product::{Counterexample, CounterexampleReport, SqrtSequence, ZERO_CHECK_K};

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("radius must be finite and positive, got {0}")]
    InvalidRadius(f64),
    #[error("need at least 64 angles, got {0}")]
    TooFewAngles(usize),
    #[error("radii must be strictly increasing and at least two")]
    BadRadii,
    #[error("M({r}) = exp({log_m}) ≤ 1; log log M is undefined")]
    LogLogUndefined { r: f64, log_m: f64 },
    #[error("zeros of the function are not known")]
    MissingZeros,
    #[error("F(0) = 0")]
    ZeroAtOrigin,
    #[error("radius {r} is within 1e-3 of the zero modulus {modulus}")]
    RadiusNearZero { r: f64, modulus: f64 },
    #[error("s must exceed 1, got {0}")]
    InvalidS(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(
        "beta = {beta} does not exceed sqrt(pi/b) = {min}; the construction is not guaranteed"
    )]
    BetaTooSmall { beta: f64, min: f64 },
    #[error(
        "product tail bound {bound:e} on the disk exceeds the tolerance {tol:e}; increase k_max"
    )]
    InsufficientKmax { bound: f64, tol: f64 },
}

/// Minimum number of angles used by [`jensen_check`].
pub const JENSEN_ANGLES: usize = 4096;

/// Radii closer than this to a zero modulus are rejected by [`jensen_check`].
pub const JENSEN_ZERO_GAP: f64 = 1e-3;

/// An entire function of one complex variable with optional metadata.
pub trait EntireFunction: Sync {
    fn eval(&self, z: Complex64) -> Complex64;

    /// `log |F(z)|`; override when `F` can overflow.
    fn log_abs(&self, z: Complex64) -> f64 {
        self.eval(z).norm().ln()
    }

    /// Every zero of `F`, when known, or at least those inside the radii of
    /// interest.
    fn zeros(&self) -> Option<&[Complex64]> {
        None
    }

    /// `(b, C)` with `|F(z)| ≤ C e^{b|z|²}`.
    fn claimed_growth(&self) -> Option<(f64, f64)> {
        None
    }
}

type EvalFn = Box<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// Closure-backed [`EntireFunction`].
pub struct EntireEval {
    f: EvalFn,
    zeros: Option<Vec<Complex64>>,
    growth: Option<(f64, f64)>,
}

impl EntireEval {
    pub fn new(f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self {
            f: Box::new(f),
            zeros: None,
            growth: None,
        }
    }

    pub fn with_zeros(mut self, zeros: Vec<Complex64>) -> Self {
        self.zeros = Some(zeros);
        self
    }

    pub fn with_growth(mut self, b: f64, c: f64) -> Self {
        self.growth = Some((b, c));
        self
    }

    /// `scale · ∏ (z − r_j)` with its zeros attached.
    pub fn polynomial(scale: Complex64, roots: Vec<Complex64>) -> Self {
        let r = roots.clone();
        Self::new(move |z| r.iter().fold(scale, |acc, root| acc * (z - root))).with_zeros(roots)
    }
}

impl std::fmt::Debug for EntireEval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EntireEval")
            .field("zeros", &self.zeros)
            .field("growth", &self.growth)
            .finish_non_exhaustive()
    }
}

impl EntireFunction for EntireEval {
    fn eval(&self, z: Complex64) -> Complex64 {
        (self.f)(z)
    }

    fn zeros(&self) -> Option<&[Complex64]> {
        self.zeros.as_deref()
    }

    fn claimed_growth(&self) -> Option<(f64, f64)> {
        self.growth
    }
}

/// Sum in a fixed binary tree so the result does not depend on how the
/// terms were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (lo, hi) = xs.split_at(xs.len() / 2);
    pairwise_sum(lo) + pairwise_sum(hi)
}

fn circle(r: f64, n_theta: usize) -> impl IndexedParallelIterator<Item = Complex64> {
    (0..n_theta)
        .into_par_iter()
        .map(move |j| Complex64::from_polar(r, 2.0 * PI * j as f64 / n_theta as f64))
}

fn check_circle(r: f64, n_theta: usize) -> Result<(), AnalysisError> {
    if !(r.is_finite() && r > 0.0) {
        return Err(AnalysisError::InvalidRadius(r));
    }
    if n_theta < 64 {
        return Err(AnalysisError::TooFewAngles(n_theta));
    }
    Ok(())
}

/// `max |F(re^{iθ})|` over `n_theta` equispaced angles starting at `θ = 0`.
pub fn max_modulus<F: EntireFunction + ?Sized>(
    f: &F,
    r: f64,
    n_theta: usize,
) -> Result<f64, AnalysisError> {
    Ok(log_max_modulus(f, r, n_theta)?.exp())
}

/// `log M(r)`, evaluated through [`EntireFunction::log_abs`].
pub fn log_max_modulus<F: EntireFunction + ?Sized>(
    f: &F,
    r: f64,
    n_theta: usize,
) -> Result<f64, AnalysisError> {
    check_circle(r, n_theta)?;
    let logs: Vec<f64> = circle(r, n_theta).map(|z| f.log_abs(z)).collect();
    Ok(logs.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Angles used by [`order_estimate`] for each maximum modulus.
pub const ORDER_ANGLES: usize = 256;

/// Relative residual above which [`order_estimate`] refits on the three
/// largest radii.
pub const ORDER_REFIT_RESIDUAL: f64 = 0.05;

/// Least-squares slope and relative residual `‖res‖/‖y − ȳ‖`.
pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let rel = if ss_tot > 0.0 {
        (ss_res / ss_tot).sqrt()
    } else {
        0.0
    };
    (slope, intercept, rel)
}

pub(crate) fn check_radii(radii: &[f64]) -> Result<(), AnalysisError> {
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(AnalysisError::BadRadii);
    }
    match radii.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        Some(r) => Err(AnalysisError::InvalidRadius(*r)),
        None => Ok(()),
    }
}

/// Slope of `log log M(r)` against `log r`.
///
/// When the relative residual of the full fit exceeds
/// [`ORDER_REFIT_RESIDUAL`] only the three largest radii are used.
pub fn order_estimate<F: EntireFunction + ?Sized>(
    f: &F,
    radii: &[f64],
) -> Result<f64, AnalysisError> {
    check_radii(radii)?;
    let log_max = radii
        .iter()
        .map(|&r| log_max_modulus(f, r, ORDER_ANGLES))
        .collect::<Result<Vec<_>, _>>()?;
    order_from_log_max(radii, &log_max)
}

/// [`order_estimate`] from precomputed `log M(r)` values.
pub fn order_from_log_max(radii: &[f64], log_max: &[f64]) -> Result<f64, AnalysisError> {
    check_radii(radii)?;
    let mut xs = Vec::with_capacity(radii.len());
    let mut ys = Vec::with_capacity(radii.len());
    for (&r, &log_m) in radii.iter().zip(log_max) {
        if !(log_m > 0.0) {
            return Err(AnalysisError::LogLogUndefined { r, log_m });
        }
        xs.push(r.ln());
        ys.push(log_m.ln());
    }
    let (slope, _, rel) = linear_fit(&xs, &ys);
    if rel > ORDER_REFIT_RESIDUAL && xs.len() > 3 {
        let k = xs.len() - 3;
        return Ok(linear_fit(&xs[k..], &ys[k..]).0);
    }
    Ok(slope)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JensenReport {
    pub r: f64,
    /// Angular mean of `log |F(re^{iθ})|`.
    pub lhs: f64,
    /// `log |F(0)| + Σ_{|z_j| < r} log(r/|z_j|)`.
    pub rhs: f64,
    pub gap: f64,
    pub zeros_inside: usize,
    pub n_theta: usize,
}

/// Both sides of Jensen's formula on the circle of radius `r`.
pub fn jensen_check<F: EntireFunction + ?Sized>(
    f: &F,
    r: f64,
) -> Result<JensenReport, AnalysisError> {
    check_circle(r, JENSEN_ANGLES)?;
    let zeros = f.zeros().ok_or(AnalysisError::MissingZeros)?;
    let f0 = f.eval(Complex64::new(0.0, 0.0)).norm();
    if f0 == 0.0 {
        return Err(AnalysisError::ZeroAtOrigin);
    }
    if let Some(z) = zeros
        .iter()
        .find(|z| (z.norm() - r).abs() < JENSEN_ZERO_GAP)
    {
        return Err(AnalysisError::RadiusNearZero {
            r,
            modulus: z.norm(),
        });
    }
    // The trapezoid error for a zero of modulus ρ decays like q^n with
    // q = min(ρ/r, r/ρ); refine so q^n < e^{-32} for the closest zero.
    let closest = zeros
        .iter()
        .map(|z| (z.norm() / r).ln().abs())
        .fold(f64::INFINITY, f64::min);
    let n_theta = JENSEN_ANGLES.max((32.0 / closest).ceil().min(1e8) as usize);
    let logs: Vec<f64> = circle(r, n_theta).map(|z| f.log_abs(z)).collect();
    let lhs = pairwise_sum(&logs) / n_theta as f64;
    let inside: Vec<f64> = zeros
        .iter()
        .filter(|z| z.norm() < r)
        .map(|z| (r / z.norm()).ln())
        .collect();
    let rhs = f0.ln() + pairwise_sum(&inside);
    Ok(JensenReport {
        r,
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
        zeros_inside: inside.len(),
        n_theta,
    })
}

/// `(log C + b s² r²) / log s`, an upper bound for the number of zeros in the
/// disk of radius `r` of a function with `|F(z)| ≤ C e^{b|z|²}` and `|F(0)| = 1`.
pub fn zero_count_bound(b: f64, c: f64, r: f64, s: f64) -> Result<f64, AnalysisError> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(AnalysisError::InvalidS(s));
    }
    if !(b > 0.0 && c > 0.0 && r >= 0.0) || !(b.is_finite() && c.is_finite() && r.is_finite()) {
        return Err(AnalysisError::InvalidParameter(format!(
            "need b > 0, C > 0, r ≥ 0; got b={b}, C={c}, r={r}"
        )));
    }
    Ok((c.ln() + b * s * s * r * r) / s.ln())
}

/// Minimiser of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol * (1.0 + lo.abs() + hi.abs()) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityThreshold {
    /// Maximising dilation `s`.
    pub s: f64,
    /// `sup_{s>1} √(2 log s / (b s²))`.
    pub value: f64,
    /// Closed form `1/√(b e)`.
    pub closed_form: f64,
}

/// Numerically maximise `√(2 log s / (b s²))` over `s > 1`.
pub fn density_threshold(b: f64) -> Result<DensityThreshold, AnalysisError> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(AnalysisError::InvalidParameter(format!(
            "b must be positive, got {b}"
        )));
    }
    let g = |s: f64| (2.0 * s.ln() / (b * s * s)).sqrt();
    let s = golden_section(|s| -g(s), 1.0 + 1e-12, 16.0, 1e-14);
    Ok(DensityThreshold {
        s,
        value: g(s),
        closed_form: 1.0 / (b * std::f64::consts::E).sqrt(),
    })
}

/// `min_{s>1}` of [`zero_count_bound`], with the minimising `s`.
pub fn optimized_zero_count_bound(b: f64, c: f64, r: f64) -> Result<(f64, f64), AnalysisError> {
    zero_count_bound(b, c, r, 2.0)?;
    if c < 1.0 {
        // log C < 0 makes the bound arbitrarily negative as s → 1⁺.
        return Err(AnalysisError::InvalidParameter(format!(
            "the optimised bound needs C ≥ 1, got {c}"
        )));
    }
    if r == 0.0 {
        // log C / log s decreases to 0 as s → ∞.
        return Ok((f64::INFINITY, 0.0));
    }
    let bound = |s: f64| zero_count_bound(b, c, r, s).unwrap_or(f64::INFINITY);
    let hi = 4.0 + (1.0 + c.ln() / (b * r * r)).sqrt() * 4.0;
    let s = golden_section(bound, 1.0 + 1e-9, hi, 1e-14);
    Ok((s, bound(s)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityVerdict {
    Uniqueness,
    Gap,
    NonUniqueness,
}

/// Classify `Λ = {±β√k}` against growth `b`: uniqueness below `1/√(b e)`,
/// non-uniqueness above `√(π/b)`, undecided in between.
pub fn density_classify(seq: &SqrtSequence, b: f64) -> DensityVerdict {
    let beta = seq.beta;
    if beta < 1.0 / (b * std::f64::consts::E).sqrt() {
        DensityVerdict::Uniqueness
    } else if beta > (PI / b).sqrt() {
        DensityVerdict::NonUniqueness
    } else {
        DensityVerdict::Gap
    }
}
