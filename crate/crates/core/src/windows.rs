//! Analytic window functions and the growth classes `O_a^b`.
//!
//! Every window is of the form `p(z) e^{-γ z²}` with `p` a polynomial, which
//! makes evaluation at complex arguments and in log space straightforward.
//! Hermite functions use the orthonormal normalisation
//! `h_n(t) = 2^{1/4} (2^n n!)^{-1/2} H_n(√(2π) t) e^{-π t²}`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WindowError {
    #[error("gamma must be positive and finite, got {0}")]
    InvalidGamma(f64),
    #[error("polynomial coefficients must contain a nonzero finite entry")]
    InvalidCoefficients,
    #[error("growth parameters must be positive and finite (a = {a:?}, b = {b:?})")]
    InvalidEnvelope { a: Vec<f64>, b: Vec<f64> },
    #[error("epsilon {eps} must lie in (0, min a = {min_a})")]
    InvalidEpsilon { eps: f64, min_a: f64 },
    #[error("envelope grid radius must be at least 4 and resolution at least 3 (radius {radius}, points {points})")]
    InvalidGrid { radius: f64, points: usize },
    #[error("unknown window variant `{0}`")]
    UnknownVariant(String),
    #[error("window variant `{variant}` is missing field `{field}`")]
    MissingField {
        variant: String,
        field: &'static str,
    },
}

/// An analytic window `p(z) e^{-γ z²}` in one variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WindowJson", into = "WindowJson")]
pub enum WindowSpec {
    Gaussian {
        gamma: f64,
    },
    Hermite {
        n: usize,
    },
    /// `Σ coeffs[k] z^k · e^{-γ z²}`.
    PolyGaussian {
        coeffs: Vec<Complex64>,
        gamma: f64,
    },
}

impl WindowSpec {
    pub fn gaussian(gamma: f64) -> Result<Self, WindowError> {
        let w = WindowSpec::Gaussian { gamma };
        w.validate()?;
        Ok(w)
    }

    pub fn hermite(n: usize) -> Self {
        WindowSpec::Hermite { n }
    }

    pub fn poly_gaussian(coeffs: Vec<Complex64>, gamma: f64) -> Result<Self, WindowError> {
        let w = WindowSpec::PolyGaussian { coeffs, gamma };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), WindowError> {
        let gamma = self.gamma();
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(WindowError::InvalidGamma(gamma));
        }
        if let WindowSpec::PolyGaussian { coeffs, .. } = self {
            let finite = coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite());
            if !finite || coeffs.iter().all(|c| c.norm() == 0.0) {
                return Err(WindowError::InvalidCoefficients);
            }
        }
        Ok(())
    }

    /// Gaussian rate `γ` of the exponential factor.
    pub fn gamma(&self) -> f64 {
        match self {
            WindowSpec::Gaussian { gamma } | WindowSpec::PolyGaussian { gamma, .. } => *gamma,
            WindowSpec::Hermite { .. } => PI,
        }
    }

    /// Polynomial factor `p(z)`.
    pub fn prefactor(&self, z: Complex64) -> Complex64 {
        match self {
            WindowSpec::Gaussian { .. } => Complex64::new(1.0, 0.0),
            WindowSpec::Hermite { n } => hermite_polynomial_part(*n, z),
            WindowSpec::PolyGaussian { coeffs, .. } => coeffs
                .iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c),
        }
    }

    /// Value of the analytic window at `z`. Overflow saturates to infinity.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let p = self.prefactor(z);
        if p.re == 0.0 && p.im == 0.0 {
            return p;
        }
        p * (-self.gamma() * z * z).exp()
    }

    /// Value at a real argument.
    #[inline]
    pub fn eval_real(&self, t: f64) -> Complex64 {
        match self {
            WindowSpec::Gaussian { gamma } => Complex64::new((-gamma * t * t).exp(), 0.0),
            WindowSpec::Hermite { n } => Complex64::new(hermite_function(*n, t), 0.0),
            WindowSpec::PolyGaussian { .. } => self.eval(Complex64::new(t, 0.0)),
        }
    }

    /// `log |w(z)|`, finite well beyond the range where `eval` overflows.
    pub fn log_abs(&self, z: Complex64) -> f64 {
        self.prefactor(z).norm().ln() - self.gamma() * (z * z).re
    }

    /// The limiting growth class `(γ, γ)` of the window. Polynomial factors
    /// only move it to `(γ - ε, γ + ε)` for every `ε > 0`.
    pub fn nominal_envelope(&self) -> GrowthEnvelope {
        let g = self.gamma();
        GrowthEnvelope {
            a: vec![g],
            b: vec![g],
            c: None,
        }
    }

    fn degree(&self) -> usize {
        match self {
            WindowSpec::Gaussian { .. } => 0,
            WindowSpec::Hermite { n } => *n,
            WindowSpec::PolyGaussian { coeffs, .. } => coeffs.len().saturating_sub(1),
        }
    }

    /// Half-width `U` beyond which `|w|²` is below `1e-300`-scale relative to its bulk.
    fn outer_radius(&self) -> f64 {
        let gamma = self.gamma();
        let mut u = (self.degree() as f64 / gamma).sqrt() + 1.0;
        loop {
            let lo = self.log_abs(Complex64::new(-u, 0.0));
            let hi = self.log_abs(Complex64::new(u, 0.0));
            if 2.0 * lo.max(hi) < -700.0 || u > 1e4 {
                return u;
            }
            u += 0.25;
        }
    }

    fn sampled_magnitudes(&self) -> (f64, Vec<f64>) {
        const H: f64 = 1.0 / 256.0;
        let u = self.outer_radius();
        let n = (u / H).ceil() as usize;
        // |w(±k h)|² folded onto k = 0..=n
        let vals = (0..=n)
            .map(|k| {
                let t = k as f64 * H;
                let plus = self.eval_real(t).norm_sqr();
                if k == 0 {
                    plus
                } else {
                    plus + self.eval_real(-t).norm_sqr()
                }
            })
            .collect();
        (H, vals)
    }

    /// `∫ |w(t)|² dt` over the real line.
    pub fn norm_sqr(&self) -> f64 {
        match self {
            WindowSpec::Hermite { .. } => 1.0,
            WindowSpec::Gaussian { gamma } => (PI / (2.0 * gamma)).sqrt(),
            WindowSpec::PolyGaussian { .. } => {
                let (h, vals) = self.sampled_magnitudes();
                h * vals.iter().sum::<f64>()
            }
        }
    }

    /// Smallest `s` (on a 1/256 grid) with `∫_{|t|>s} |w|² ≤ tol · ‖w‖²`.
    pub fn effective_radius(&self, tol: f64) -> f64 {
        let (h, vals) = self.sampled_magnitudes();
        let total: f64 = vals.iter().sum();
        let budget = tol * total;
        let mut tail = 0.0;
        for k in (0..vals.len()).rev() {
            if tail + vals[k] > budget {
                return (k + 1) as f64 * h;
            }
            tail += vals[k];
        }
        0.0
    }
}

/// Polynomial part `q_n(z)` of `h_n(z) = q_n(z) e^{-π z²}`.
///
/// Three-term recurrence for the orthonormal Hermite functions:
/// `q_{k+1} = √(2/(k+1)) √(2π) z q_k − √(k/(k+1)) q_{k−1}`, `q_0 = 2^{1/4}`.
pub fn hermite_polynomial_part(n: usize, z: Complex64) -> Complex64 {
    let scale = (2.0 * PI).sqrt();
    let mut prev = Complex64::new(0.0, 0.0);
    let mut cur = Complex64::new(SQRT_2.sqrt(), 0.0);
    for k in 0..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * scale * z * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Real Hermite function `h_n(t)`.
pub fn hermite_function(n: usize, t: f64) -> f64 {
    let scale = (2.0 * PI).sqrt();
    let gauss = (-PI * t * t).exp();
    let mut prev = 0.0;
    let mut cur = SQRT_2.sqrt() * gauss;
    for k in 0..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * scale * t * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `[h_0(t), …, h_{count-1}(t)]` by the same recurrence as [`hermite_function`].
pub fn hermite_functions(count: usize, t: f64) -> Vec<f64> {
    let scale = (2.0 * PI).sqrt();
    let mut out = Vec::with_capacity(count);
    let mut prev = 0.0;
    let mut cur = SQRT_2.sqrt() * (-PI * t * t).exp();
    for k in 0..count {
        out.push(cur);
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * scale * t * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    out
}

/// Decay/growth data `(a, b)` and the implicit constant `c` of
/// `|F(x+iy)| ≤ c ∏ e^{-a_j x_j²} e^{b_j y_j²}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthEnvelope {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Option<f64>,
}

impl GrowthEnvelope {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self, WindowError> {
        let env = GrowthEnvelope { a, b, c: None };
        env.validate()?;
        Ok(env)
    }

    pub fn scalar(a: f64, b: f64) -> Result<Self, WindowError> {
        Self::new(vec![a], vec![b])
    }

    pub fn validate(&self) -> Result<(), WindowError> {
        let ok = |v: &[f64]| !v.is_empty() && v.iter().all(|x| x.is_finite() && *x > 0.0);
        if self.a.len() != self.b.len() || !ok(&self.a) || !ok(&self.b) {
            return Err(WindowError::InvalidEnvelope {
                a: self.a.clone(),
                b: self.b.clone(),
            });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }
}

/// Class of `G·F` for `F ∈ O_a^b` and `G` of exponential type: `O_{a-ε}^{b+ε}`.
pub fn class_after_product(
    env: &GrowthEnvelope,
    epsilon: f64,
) -> Result<GrowthEnvelope, WindowError> {
    env.validate()?;
    let min_a = env.a.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(epsilon > 0.0 && epsilon < min_a) {
        return Err(WindowError::InvalidEpsilon {
            eps: epsilon,
            min_a,
        });
    }
    Ok(GrowthEnvelope {
        a: env.a.iter().map(|a| a - epsilon).collect(),
        b: env.b.iter().map(|b| b + epsilon).collect(),
        c: None,
    })
}

/// Square evaluation grid `[-radius, radius]²` with `points × points` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeGrid {
    pub radius: f64,
    pub points: usize,
}

impl Default for EnvelopeGrid {
    fn default() -> Self {
        Self {
            radius: 6.0,
            points: 121,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundedness {
    Bounded,
    Growing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    /// `(a, b)` as requested, with `c` the supremum over the largest grid.
    pub envelope: GrowthEnvelope,
    pub verdict: Boundedness,
    /// `(R, log c(R))` for `R`, `2R`, `4R`.
    pub log_sup_by_radius: Vec<(f64, f64)>,
}

/// Estimate the constant of `|F(x+iy)| ≲ e^{-a x²} e^{b y²}` as a grid supremum.
///
/// The grid keeps its spacing while the radius doubles twice; the verdict is
/// `Bounded` when both doublings change the supremum by less than 1%.
pub fn envelope_fit(
    w: &WindowSpec,
    a: f64,
    b: f64,
    grid: &EnvelopeGrid,
) -> Result<EnvelopeFit, WindowError> {
    w.validate()?;
    GrowthEnvelope::scalar(a, b)?;
    if !(grid.radius >= 4.0) || grid.points < 3 {
        return Err(WindowError::InvalidGrid {
            radius: grid.radius,
            points: grid.points,
        });
    }
    let half = (grid.points - 1) / 2;
    let h = grid.radius / half as f64;
    let outer = 4 * half as i64;
    let mut best = [f64::NEG_INFINITY; 3];
    for i in -outer..=outer {
        let x = i as f64 * h;
        for j in -outer..=outer {
            let y = j as f64 * h;
            let v = w.log_abs(Complex64::new(x, y)) + a * x * x - b * y * y;
            let ring = i.abs().max(j.abs());
            let level = if ring <= half as i64 {
                0
            } else if ring <= 2 * half as i64 {
                1
            } else {
                2
            };
            for slot in best.iter_mut().skip(level) {
                if v > *slot {
                    *slot = v;
                }
            }
        }
    }
    let rel = |lo: f64, hi: f64| (hi - lo).exp_m1().abs();
    let verdict = if rel(best[0], best[1]) < 0.01 && rel(best[1], best[2]) < 0.01 {
        Boundedness::Bounded
    } else {
        Boundedness::Growing
    };
    let r = half as f64 * h;
    Ok(EnvelopeFit {
        envelope: GrowthEnvelope {
            a: vec![a],
            b: vec![b],
            c: Some(best[2].exp()),
        },
        verdict,
        log_sup_by_radius: vec![(r, best[0]), (2.0 * r, best[1]), (4.0 * r, best[2])],
    })
}

#[derive(Serialize, Deserialize)]
struct WindowJson {
    variant: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coeffs: Option<Vec<[f64; 2]>>,
}

impl From<WindowSpec> for WindowJson {
    fn from(w: WindowSpec) -> Self {
        match w {
            WindowSpec::Gaussian { gamma } => WindowJson {
                variant: "gaussian".into(),
                gamma: Some(gamma),
                n: None,
                coeffs: None,
            },
            WindowSpec::Hermite { n } => WindowJson {
                variant: "hermite".into(),
                gamma: None,
                n: Some(n),
                coeffs: None,
            },
            WindowSpec::PolyGaussian { coeffs, gamma } => WindowJson {
                variant: "polygaussian".into(),
                gamma: Some(gamma),
                n: None,
                coeffs: Some(coeffs.iter().map(|c| [c.re, c.im]).collect()),
            },
        }
    }
}

impl TryFrom<WindowJson> for WindowSpec {
    type Error = WindowError;

    fn try_from(j: WindowJson) -> Result<Self, Self::Error> {
        let missing = |field| WindowError::MissingField {
            variant: j.variant.clone(),
            field,
        };
        let w = match j.variant.as_str() {
            "gaussian" => WindowSpec::Gaussian {
                gamma: j.gamma.ok_or_else(|| missing("gamma"))?,
            },
            "hermite" => WindowSpec::Hermite {
                n: j.n.ok_or_else(|| missing("n"))?,
            },
            "polygaussian" => WindowSpec::PolyGaussian {
                gamma: j.gamma.ok_or_else(|| missing("gamma"))?,
                coeffs: j
                    .coeffs
                    .as_ref()
                    .ok_or_else(|| missing("coeffs"))?
                    .iter()
                    .map(|[re, im]| Complex64::new(*re, *im))
                    .collect(),
            },
            other => return Err(WindowError::UnknownVariant(other.to_string())),
        };
        w.validate()?;
        Ok(w)
    }
}
