use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    check_radii, linear_fit, log_max_modulus, order_from_log_max, AnalysisError, EntireFunction,
};
use crate::stft::Signal;
use crate::windows::WindowSpec;

/// Which coordinate of the spectrogram is continued into the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `z ↦ S(z, ω)` for fixed real `ω`.
    Time,
    /// `ζ ↦ S(x, ζ)` for fixed real `x`.
    Frequency,
}

/// Entire continuation of one slice of the spectrogram `|V_w f(x, ω)|²`.
///
/// For real arguments `S = V · conj V`; the continuation replaces the
/// conjugated factor by its analytic counterpart
/// `dt Σ conj f(t) w̃(t − x) e^{2πiωt}` with `w̃(u) = conj w(conj u)`.
#[derive(Debug, Clone)]
pub struct SpectrogramExtension {
    pub f: Signal,
    pub w: WindowSpec,
    pub direction: Direction,
    /// The fixed real coordinate.
    pub fixed: f64,
}

impl SpectrogramExtension {
    pub fn new(f: Signal, w: WindowSpec, direction: Direction, fixed: f64) -> Self {
        Self {
            f,
            w,
            direction,
            fixed,
        }
    }

    fn star(&self, u: Complex64) -> Complex64 {
        self.w.eval(u.conj()).conj()
    }
}

impl EntireFunction for SpectrogramExtension {
    fn eval(&self, z: Complex64) -> Complex64 {
        let (x, omega) = match self.direction {
            Direction::Time => (z, Complex64::new(self.fixed, 0.0)),
            Direction::Frequency => (Complex64::new(self.fixed, 0.0), z),
        };
        let mut v = Complex64::new(0.0, 0.0);
        let mut v_star = Complex64::new(0.0, 0.0);
        for (j, fj) in self.f.values.iter().enumerate() {
            let t = self.f.t(j);
            let u = t - x;
            let phase = (Complex64::new(0.0, -2.0 * std::f64::consts::PI * t) * omega).exp();
            v += fj * self.star(u) * phase;
            v_star += fj.conj() * self.w.eval(u) / phase;
        }
        v * v_star * (self.f.dt * self.f.dt)
    }
}

/// Quadratic-exponent fit `log M(r) ≈ c r² + d` and order estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub radii: Vec<f64>,
    pub log_max: Vec<f64>,
    pub c: f64,
    pub d: f64,
    pub order: f64,
}

/// Growth of a spectrogram slice over the circles `|z| = r`.
pub fn spectrogram_growth(
    ext: &SpectrogramExtension,
    radii: &[f64],
    n_theta: usize,
) -> Result<GrowthFit, AnalysisError> {
    check_radii(radii)?;
    let log_max = radii
        .iter()
        .map(|&r| log_max_modulus(ext, r, n_theta))
        .collect::<Result<Vec<_>, _>>()?;
    let r2: Vec<f64> = radii.iter().map(|r| r * r).collect();
    let (c, d, _) = linear_fit(&r2, &log_max);
    let order = order_from_log_max(radii, &log_max)?;
    Ok(GrowthFit {
        radii: radii.to_vec(),
        log_max,
        c,
        d,
        order,
    })
}
