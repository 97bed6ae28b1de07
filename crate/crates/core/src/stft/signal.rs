use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::StftError;
use crate::grid::UniformGrid;
use crate::io::fmt_f64;
use crate::lattices::TfPoint;
use crate::windows::{hermite_functions, WindowSpec};

/// Samples of a function on the grid `t0 + j·dt`, integrated with the
/// rectangle rule (weight `dt`). Outside the grid the function is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<Complex64>,
}

impl Signal {
    pub fn new(t0: f64, dt: f64, values: Vec<Complex64>) -> Result<Self, StftError> {
        let s = Signal { t0, dt, values };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), StftError> {
        if self.values.len() < 2 || !(self.dt.is_finite() && self.dt > 0.0) || !self.t0.is_finite()
        {
            return Err(StftError::InvalidSignal(
                "need at least 2 samples, finite t0 and dt > 0".into(),
            ));
        }
        if self
            .values
            .iter()
            .any(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(StftError::InvalidSignal("non-finite sample".into()));
        }
        Ok(())
    }

    /// The default grid `[-8, 8]` with step `1/64`.
    pub fn default_grid() -> UniformGrid {
        UniformGrid::spanning(-8.0, 8.0, 1025)
    }

    pub fn from_fn(grid: UniformGrid, f: impl Fn(f64) -> Complex64) -> Self {
        Signal {
            t0: grid.start,
            dt: grid.step,
            values: grid.points().map(f).collect(),
        }
    }

    pub fn zeros(grid: UniformGrid) -> Self {
        Signal {
            t0: grid.start,
            dt: grid.step,
            values: vec![Complex64::new(0.0, 0.0); grid.count],
        }
    }

    /// Samples of an analytic window on the real axis.
    pub fn from_window(w: &WindowSpec, grid: UniformGrid) -> Self {
        Self::from_fn(grid, |t| w.eval_real(t))
    }

    /// `Σ c_n h_n` on the grid.
    pub fn from_hermite(grid: UniformGrid, coeffs: &[Complex64]) -> Self {
        Self::from_fn(grid, |t| {
            hermite_functions(coeffs.len(), t)
                .iter()
                .zip(coeffs)
                .map(|(h, c)| c * h)
                .sum()
        })
    }

    pub fn grid(&self) -> UniformGrid {
        UniformGrid::new(self.t0, self.dt, self.values.len())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn t(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.values.len() - 1)
    }

    pub fn same_grid(&self, other: &Signal) -> bool {
        self.values.len() == other.values.len()
            && (self.dt - other.dt).abs() <= 1e-12 * self.dt
            && (self.t0 - other.t0).abs() <= 1e-9 * self.dt
    }

    /// `dt Σ |f_j|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.dt * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `dt Σ |f_j|`.
    pub fn l1_norm(&self) -> f64 {
        self.dt * self.values.iter().map(|v| v.norm()).sum::<f64>()
    }

    /// `⟨f, g⟩ = dt Σ f_j conj(g_j)` on a shared grid.
    pub fn inner(&self, other: &Signal) -> Complex64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum::<Complex64>()
            * self.dt
    }

    pub fn scaled(&self, tau: Complex64) -> Signal {
        Signal {
            t0: self.t0,
            dt: self.dt,
            values: self.values.iter().map(|v| v * tau).collect(),
        }
    }

    pub fn sub(&self, other: &Signal) -> Signal {
        Signal {
            t0: self.t0,
            dt: self.dt,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Linear interpolation; zero outside the grid.
    pub fn interp(&self, t: f64) -> Complex64 {
        let u = (t - self.t0) / self.dt;
        let last = (self.values.len() - 1) as f64;
        if !(u > -1e-9 && u < last + 1e-9) {
            return Complex64::new(0.0, 0.0);
        }
        let u = u.clamp(0.0, last);
        let j = (u.floor() as usize).min(self.values.len() - 2);
        let frac = u - j as f64;
        if frac == 0.0 {
            return self.values[j];
        }
        self.values[j] * (1.0 - frac) + self.values[j + 1] * frac
    }

    /// Resample onto another grid by linear interpolation.
    pub fn resample(&self, grid: UniformGrid) -> Signal {
        Signal::from_fn(grid, |t| self.interp(t))
    }
}

/// Phaseless samples `|V_w f(λ)|` at a list of points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfSampleSet {
    pub points: Vec<TfPoint>,
    pub magnitudes: Vec<f64>,
}

impl TfSampleSet {
    pub fn new(points: Vec<TfPoint>, magnitudes: Vec<f64>) -> Result<Self, StftError> {
        if points.len() != magnitudes.len() {
            return Err(StftError::InvalidSamples(format!(
                "{} points but {} magnitudes",
                points.len(),
                magnitudes.len()
            )));
        }
        if magnitudes.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(StftError::InvalidSamples(
                "magnitudes must be finite and non-negative".into(),
            ));
        }
        Ok(Self { points, magnitudes })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// CSV with header `x,omega,magnitude`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,omega,magnitude\n");
        for (p, m) in self.points.iter().zip(&self.magnitudes) {
            let _ = writeln!(out, "{},{},{}", fmt_f64(p.x), fmt_f64(p.omega), fmt_f64(*m));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_layout() {
        let s = Signal::new(
            -1.0,
            0.5,
            vec![Complex64::new(1.0, 2.0), Complex64::new(0.0, -1.0)],
        )
        .unwrap();
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"t0":-1.0,"dt":0.5,"values":[[1.0,2.0],[0.0,-1.0]]}"#);
        assert_eq!(serde_json::from_str::<Signal>(&j).unwrap(), s);
    }

    #[test]
    fn rejects_degenerate_signals() {
        assert!(Signal::new(0.0, 0.1, vec![Complex64::new(1.0, 0.0)]).is_err());
        assert!(Signal::new(0.0, 0.0, vec![Complex64::new(1.0, 0.0); 3]).is_err());
        assert!(TfSampleSet::new(vec![TfPoint::new(0.0, 0.0)], vec![-1.0]).is_err());
    }

    #[test]
    fn interpolation_is_exact_on_nodes_and_linear_between() {
        let g = UniformGrid::new(0.0, 0.5, 5);
        let s = Signal::from_fn(g, |t| Complex64::new(2.0 * t + 1.0, -t));
        assert_eq!(s.interp(1.0), Complex64::new(3.0, -1.0));
        let mid = s.interp(1.2);
        assert!((mid - Complex64::new(3.4, -1.2)).norm() < 1e-14);
        assert_eq!(s.interp(2.5), Complex64::new(0.0, 0.0));
        assert_eq!(s.interp(2.0), Complex64::new(5.0, -2.0));
    }

    #[test]
    fn hermite_expansion_norm() {
        let g = Signal::default_grid();
        let c = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        let s = Signal::from_hermite(g, &c);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }
}
