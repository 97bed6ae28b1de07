use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pairwise_sum, AnalysisError, EntireFunction};
use crate::io::fmt_f64;

/// Absolute residuals at rounded zeros are aggregated up to this index.
pub const ZERO_CHECK_K: usize = 100;

/// `λ(k) = β√k` for `k ≥ 1`, with split index `K` for the counterexample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqrtSequence {
    pub beta: f64,
    pub split: usize,
}

impl SqrtSequence {
    pub fn new(beta: f64) -> Result<Self, AnalysisError> {
        Self::with_split(beta, 1)
    }

    pub fn with_split(beta: f64, split: usize) -> Result<Self, AnalysisError> {
        if !(beta > 0.0 && beta.is_finite()) || split == 0 {
            return Err(AnalysisError::InvalidParameter(format!(
                "need beta > 0 and K ≥ 1, got beta={beta}, K={split}"
            )));
        }
        Ok(Self { beta, split })
    }

    pub fn lambda(&self, k: usize) -> f64 {
        self.beta * (k as f64).sqrt()
    }

    /// `γ(k) = λ(k)²`.
    pub fn gamma(&self, k: usize) -> f64 {
        self.beta * self.beta * k as f64
    }
}

/// Truncated Weierstrass product
/// `F̃(z) = ∏_{k<K} (1 − z²/λ(k)²) · ∏_{K≤k≤k_max} (1 − z⁴/γ(k)²)`,
/// which vanishes at every `±λ(k)`, `k ≤ k_max`, and has `F̃(0) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub seq: SqrtSequence,
    pub b: f64,
    pub k_max: usize,
    pub disk: f64,
    /// `Σ_{k>k_max} |z|⁴/γ(k)² ≤ disk⁴/(β⁴ k_max)` on `|z| ≤ disk`; bounds the
    /// log-modulus error against the infinite product.
    pub tail_bound: f64,
    #[serde(skip)]
    gammas: Vec<f64>,
}

impl Counterexample {
    /// Rejects `β ≤ √(π/b)` and a tail bound above `tail_tol`.
    pub fn build(
        seq: SqrtSequence,
        b: f64,
        k_max: usize,
        disk: f64,
        tail_tol: f64,
    ) -> Result<Self, AnalysisError> {
        if !(b > 0.0 && b.is_finite()) || !(disk > 0.0 && disk.is_finite()) || !(tail_tol > 0.0) {
            return Err(AnalysisError::InvalidParameter(format!(
                "need b > 0, disk > 0, tail_tol > 0; got b={b}, disk={disk}, tail_tol={tail_tol}"
            )));
        }
        if k_max < seq.split {
            return Err(AnalysisError::InvalidParameter(format!(
                "k_max = {k_max} is below the split index {}",
                seq.split
            )));
        }
        let min = (PI / b).sqrt();
        if !(seq.beta > min) {
            return Err(AnalysisError::BetaTooSmall {
                beta: seq.beta,
                min,
            });
        }
        let tail_bound = disk.powi(4) / (seq.beta.powi(4) * k_max as f64);
        if tail_bound > tail_tol {
            return Err(AnalysisError::InsufficientKmax {
                bound: tail_bound,
                tol: tail_tol,
            });
        }
        let gammas = (1..=k_max).map(|k| seq.gamma(k)).collect();
        Ok(Self {
            seq,
            b,
            k_max,
            disk,
            tail_bound,
            gammas,
        })
    }

    /// `Σ log` of the factors at `z`.
    pub fn log_eval(&self, z: Complex64) -> Complex64 {
        self.log_eval_sq(z * z)
    }

    /// `F̃` depends on `z` only through `w = z²`; `Σ log` of the factors at `w`.
    pub fn log_eval_sq(&self, w: Complex64) -> Complex64 {
        let k0 = self.seq.split - 1;
        let mut re = Vec::with_capacity(2 * self.k_max);
        let mut im = Vec::with_capacity(2 * self.k_max);
        let mut push = |f: Complex64| {
            let l = f.ln();
            re.push(l.re);
            im.push(l.im);
        };
        for g in &self.gammas[..k0] {
            push(1.0 - w / g);
        }
        for g in &self.gammas[k0..] {
            push(1.0 - w / g);
            push(1.0 + w / g);
        }
        Complex64::new(pairwise_sum(&re), pairwise_sum(&im))
    }

    /// `|F̃(z)| e^{-b|z|²}`.
    pub fn envelope_ratio(&self, z: Complex64) -> f64 {
        (self.log_abs(z) - self.b * z.norm_sqr()).exp()
    }

    /// Polar grid over the disk: `n_r + 1` radii from 0 and `n_theta` angles.
    pub fn disk_points(&self, n_r: usize, n_theta: usize) -> Vec<Complex64> {
        let mut pts = vec![Complex64::new(0.0, 0.0)];
        for i in 1..=n_r {
            let r = self.disk * i as f64 / n_r as f64;
            pts.extend(
                (0..n_theta)
                    .map(|j| Complex64::from_polar(r, 2.0 * PI * j as f64 / n_theta as f64)),
            );
        }
        pts
    }

    /// `sup |F̃(z)| e^{-b|z|²}` over [`Self::disk_points`].
    pub fn growth_sup(&self, n_r: usize, n_theta: usize) -> f64 {
        self.disk_points(n_r, n_theta)
            .par_iter()
            .map(|&z| self.envelope_ratio(z))
            .collect::<Vec<_>>()
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// CSV `re,im,F_re,F_im,envelope_ratio`.
    pub fn to_csv(&self, points: &[Complex64]) -> String {
        let vals: Vec<(Complex64, f64)> = points
            .par_iter()
            .map(|&z| (self.eval(z), self.envelope_ratio(z)))
            .collect();
        let mut out = String::from("re,im,F_re,F_im,envelope_ratio\n");
        for (z, (v, e)) in points.iter().zip(vals) {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fmt_f64(z.re),
                fmt_f64(z.im),
                fmt_f64(v.re),
                fmt_f64(v.im),
                fmt_f64(e)
            );
        }
        out
    }

    /// Zero residuals, midpoint magnitudes and the growth certificate.
    ///
    /// `zero_residuals` evaluate `F̃(±λ(k))` through `λ(k)² = γ(k)`. The
    /// `rounded_*` fields evaluate at the nearest doubles to `±λ(k)` instead;
    /// near `k_max` the truncated product is astronomically large on the real
    /// axis, so the absolute rounded residual is aggregated over
    /// `k ≤ ZERO_CHECK_K` and the relative one divides by `|F̃|` at the
    /// midpoint to the next zero.
    pub fn report(&self, n_r: usize, n_theta: usize) -> CounterexampleReport {
        let mid = |k: usize| 0.5 * (self.seq.lambda(k) + self.seq.lambda(k + 1));
        let residuals: Vec<f64> = (1..=self.k_max)
            .map(|k| {
                self.log_eval_sq(Complex64::new(self.seq.gamma(k), 0.0))
                    .re
                    .exp()
            })
            .collect();
        let (rounded, relative): (Vec<f64>, Vec<f64>) = (1..=self.k_max)
            .into_par_iter()
            .map(|k| {
                let l = self.seq.lambda(k);
                let abs = self
                    .log_abs(Complex64::new(l, 0.0))
                    .max(self.log_abs(Complex64::new(-l, 0.0)));
                (
                    abs.exp(),
                    (abs - self.log_abs(Complex64::new(mid(k), 0.0))).exp(),
                )
            })
            .unzip();
        let midpoints: Vec<f64> = (1..=self.k_max.min(10))
            .map(|k| self.eval(Complex64::new(mid(k), 0.0)).norm())
            .collect();
        let doubled = Self {
            k_max: 2 * self.k_max,
            tail_bound: self.tail_bound / 2.0,
            gammas: (1..=2 * self.k_max).map(|k| self.seq.gamma(k)).collect(),
            ..self.clone()
        };
        let sup = self.growth_sup(n_r, n_theta);
        let sup2 = doubled.growth_sup(n_r, n_theta);
        CounterexampleReport {
            beta: self.seq.beta,
            b: self.b,
            split: self.seq.split,
            k_max: self.k_max,
            disk: self.disk,
            tail_bound: self.tail_bound,
            f_at_zero: self.eval(Complex64::new(0.0, 0.0)),
            max_zero_residual: residuals.iter().copied().fold(0.0, f64::max),
            zero_residuals: residuals,
            rounded_max_zero_residual: rounded
                .iter()
                .take(ZERO_CHECK_K)
                .copied()
                .fold(0.0, f64::max),
            rounded_max_relative_zero_residual: relative.iter().copied().fold(0.0, f64::max),
            min_midpoint_modulus: midpoints.iter().copied().fold(f64::INFINITY, f64::min),
            growth_sup: sup,
            growth_sup_doubled: sup2,
            growth_rel_change: (sup2 - sup).abs() / sup,
        }
    }
}

impl EntireFunction for Counterexample {
    fn eval(&self, z: Complex64) -> Complex64 {
        self.log_eval(z).exp()
    }

    fn log_abs(&self, z: Complex64) -> f64 {
        self.log_eval(z).re
    }

    fn claimed_growth(&self) -> Option<(f64, f64)> {
        Some((self.b, 1.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub beta: f64,
    pub b: f64,
    pub split: usize,
    pub k_max: usize,
    pub disk: f64,
    pub tail_bound: f64,
    pub f_at_zero: Complex64,
    /// `|F̃(±λ(k))|` for `k = 1..=k_max`.
    pub zero_residuals: Vec<f64>,
    pub max_zero_residual: f64,
    /// Largest `|F̃|` at the doubles nearest `±λ(k)`, `k ≤ ZERO_CHECK_K`.
    pub rounded_max_zero_residual: f64,
    /// Largest `|F̃|` at the doubles nearest `±λ(k)`, divided by `|F̃|` at the
    /// following midpoint, over every `k ≤ k_max`.
    pub rounded_max_relative_zero_residual: f64,
    /// Smallest `|F̃|` at `(λ(k) + λ(k+1))/2`, `k ≤ 10`.
    pub min_midpoint_modulus: f64,
    pub growth_sup: f64,
    pub growth_sup_doubled: f64,
    pub growth_rel_change: f64,
}
