//! Discretised short-time Fourier transform
//! `V_w f(x, ω) = ∫ f(t) conj(w(t − x)) e^{-2πiωt} dt` by the rectangle rule.

mod frft;
mod metaplectic;
mod signal;

pub use frft::{frft, hermite_coefficients, HermiteExpansion};
pub use metaplectic::MetaplecticGaussian;
pub use signal::{Signal, TfSampleSet};

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::grid::UniformGrid;
use crate::lattices::TfPoint;
use crate::windows::{WindowError, WindowSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StftError {
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("invalid sample set: {0}")]
    InvalidSamples(String),
    #[error("point {index} (x = {x}) needs the grid to cover [{need_lo}, {need_hi}] but it spans [{grid_lo}, {grid_hi}]")]
    Coverage {
        index: usize,
        x: f64,
        need_lo: f64,
        need_hi: f64,
        grid_lo: f64,
        grid_hi: f64,
    },
    #[error("signals are not on a common grid")]
    GridMismatch,
    #[error("incompatible grids: {0}")]
    IncompatibleGrid(String),
    #[error("shift {0} leaves no overlap with the signal grid")]
    NoOverlap(f64),
    #[error("Hermite expansion with {n_basis} terms leaves relative residual {residual:e}")]
    PoorRepresentation { n_basis: usize, residual: f64 },
    #[error(transparent)]
    Window(#[from] WindowError),
}

/// Relative tail mass of `|w|²` the grid must cover around each `x`.
pub const COVERAGE_TOL: f64 = 1e-12;
/// Relative tail mass beyond which window samples are dropped from the sums.
const SUPPORT_TOL: f64 = 1e-32;

/// `e^{-2πiω(t_start + j·dt)}` for `j < len`, re-anchored every 64 steps.
fn phase_vector(omega: f64, t_start: f64, dt: f64, len: usize, out: &mut Vec<Complex64>) {
    out.clear();
    let step = Complex64::from_polar(1.0, -2.0 * PI * omega * dt);
    let mut z = Complex64::new(1.0, 0.0);
    for j in 0..len {
        if j % 64 == 0 {
            z = Complex64::from_polar(1.0, -2.0 * PI * omega * (t_start + j as f64 * dt));
        }
        out.push(z);
        z *= step;
    }
}

/// Index range `[lo, hi]` of grid points within `r` of `x`, clamped to the grid.
fn window_range(f: &Signal, x: f64, r: f64) -> Option<(usize, usize)> {
    let lo = ((x - r - f.t0) / f.dt).ceil().max(0.0);
    let hi = ((x + r - f.t0) / f.dt).floor().min((f.len() - 1) as f64);
    (lo <= hi).then_some((lo as usize, hi as usize))
}

fn check_coverage(f: &Signal, r: f64, index: usize, x: f64) -> Result<(), StftError> {
    let slack = 1e-9 * f.dt;
    if x - r < f.t0 - slack || x + r > f.t_end() + slack {
        return Err(StftError::Coverage {
            index,
            x,
            need_lo: x - r,
            need_hi: x + r,
            grid_lo: f.t0,
            grid_hi: f.t_end(),
        });
    }
    Ok(())
}

/// `V_w f_s(λ)` for several signals on a shared grid and many points.
///
/// Returns one vector per signal, in point order. Window samples are computed
/// once per distinct `x`.
pub fn stft_batch(
    signals: &[&Signal],
    w: &WindowSpec,
    points: &[TfPoint],
) -> Result<Vec<Vec<Complex64>>, StftError> {
    w.validate()?;
    let Some(first) = signals.first() else {
        return Ok(Vec::new());
    };
    for s in signals {
        s.validate()?;
        if !first.same_grid(s) {
            return Err(StftError::GridMismatch);
        }
    }
    let r_cov = w.effective_radius(COVERAGE_TOL);
    let r_sup = w.effective_radius(SUPPORT_TOL).max(r_cov);
    for (i, p) in points.iter().enumerate() {
        check_coverage(first, r_cov, i, p.x)?;
    }

    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| points[i].x.total_cmp(&points[j].x).then(i.cmp(&j)));
    let groups: Vec<&[usize]> = order
        .chunk_by(|&i, &j| points[i].x == points[j].x)
        .collect();

    let dt = first.dt;
    let computed: Vec<(usize, Vec<Complex64>)> = groups
        .par_iter()
        .flat_map_iter(|group| {
            let x = points[group[0]].x;
            let mut results = Vec::with_capacity(group.len());
            let Some((lo, hi)) = window_range(first, x, r_sup) else {
                for &i in group.iter() {
                    results.push((i, vec![Complex64::new(0.0, 0.0); signals.len()]));
                }
                return results.into_iter();
            };
            let win: Vec<Complex64> = (lo..=hi)
                .map(|j| w.eval_real(first.t(j) - x).conj() * dt)
                .collect();
            let mut phases = Vec::with_capacity(win.len());
            for &i in group.iter() {
                phase_vector(points[i].omega, first.t(lo), dt, win.len(), &mut phases);
                let kernel: Vec<Complex64> = win.iter().zip(&phases).map(|(a, b)| a * b).collect();
                let vals = signals
                    .iter()
                    .map(|s| {
                        s.values[lo..=hi]
                            .iter()
                            .zip(&kernel)
                            .map(|(v, k)| v * k)
                            .sum()
                    })
                    .collect();
                results.push((i, vals));
            }
            results.into_iter()
        })
        .collect();

    let mut out = vec![vec![Complex64::new(0.0, 0.0); points.len()]; signals.len()];
    for (i, vals) in computed {
        for (s, v) in vals.into_iter().enumerate() {
            out[s][i] = v;
        }
    }
    Ok(out)
}

/// `V_w f` at each point.
pub fn stft_points(
    f: &Signal,
    w: &WindowSpec,
    points: &[TfPoint],
) -> Result<Vec<Complex64>, StftError> {
    Ok(stft_batch(&[f], w, points)?.pop().unwrap_or_default())
}

/// Rectangle-rule value of `V_w f(x, ω)`; fails if the grid does not cover
/// the window's effective support around `x`.
pub fn stft_point(f: &Signal, w: &WindowSpec, x: f64, omega: f64) -> Result<Complex64, StftError> {
    Ok(stft_points(f, w, &[TfPoint::new(x, omega)])?[0])
}

/// `|V_w f(λ)|` for every point, in input order.
pub fn sample_phaseless(
    f: &Signal,
    w: &WindowSpec,
    points: &[TfPoint],
) -> Result<TfSampleSet, StftError> {
    let v = stft_points(f, w, points)?;
    Ok(TfSampleSet {
        points: points.to_vec(),
        magnitudes: v.iter().map(|z| z.norm()).collect(),
    })
}

/// `V_f g`-style transform with a sampled window: `Σ f(t_j) conj(g(t_j − x)) e^{-2πiωt_j} dt`,
/// `g` linearly interpolated (exact when `x` is a multiple of `dt`).
pub fn cross_stft(f: &Signal, g: &Signal, x: f64, omega: f64) -> Complex64 {
    let mut phases = Vec::with_capacity(f.len());
    phase_vector(omega, f.t0, f.dt, f.len(), &mut phases);
    f.values
        .iter()
        .enumerate()
        .map(|(j, v)| v * g.interp(f.t(j) - x).conj() * phases[j])
        .sum::<Complex64>()
        * f.dt
}

/// Number of FFT bins `M = 1/(dt·dω)` implied by a frequency grid.
pub fn fft_size(dt: f64, domega: f64) -> Result<usize, StftError> {
    let m = 1.0 / (dt * domega);
    let mr = m.round();
    if !(m.is_finite() && mr >= 2.0 && (m - mr).abs() <= 1e-9 * mr) {
        return Err(StftError::IncompatibleGrid(format!(
            "1/(dt·dω) = {m} is not an integer ≥ 2"
        )));
    }
    Ok(mr as usize)
}

/// `|V_w f(x_i, ω_k)|²` on a product grid, one FFT per `x`.
///
/// The frequency step must satisfy `dω = 1/(M·dt)` for an integer `M`; the
/// samples are then exact discrete Fourier sums of the windowed product.
/// No coverage check is made: the signal is taken as zero off its grid.
pub fn spectrogram_grid(
    f: &Signal,
    w: &WindowSpec,
    xgrid: UniformGrid,
    omegagrid: UniformGrid,
) -> Result<Array2<f64>, StftError> {
    f.validate()?;
    w.validate()?;
    if !xgrid.is_valid() || !omegagrid.is_valid() || omegagrid.count < 2 {
        return Err(StftError::IncompatibleGrid(
            "x and ω grids must be non-empty and increasing".into(),
        ));
    }
    let m = fft_size(f.dt, omegagrid.step)?;
    let fft = FftPlanner::new().plan_fft_forward(m);
    let r_sup = w.effective_radius(SUPPORT_TOL);
    let (omega0, dt) = (omegagrid.start, f.dt);
    let pre = {
        let mut v = Vec::new();
        phase_vector(omega0, 0.0, dt, f.len(), &mut v);
        v
    };

    let rows: Vec<Vec<f64>> = (0..xgrid.count)
        .into_par_iter()
        .map(|i| {
            let x = xgrid.at(i);
            let mut buf = vec![Complex64::new(0.0, 0.0); m];
            if let Some((lo, hi)) = window_range(f, x, r_sup) {
                for j in lo..=hi {
                    buf[j % m] += f.values[j] * w.eval_real(f.t(j) - x).conj() * pre[j];
                }
            }
            fft.process(&mut buf);
            (0..omegagrid.count)
                .map(|k| (buf[k % m] * dt).norm_sqr())
                .collect()
        })
        .collect();

    let mut out = Array2::zeros((xgrid.count, omegagrid.count));
    for (i, row) in rows.into_iter().enumerate() {
        for (k, v) in row.into_iter().enumerate() {
            out[[i, k]] = v;
        }
    }
    Ok(out)
}

/// `f_s(t) = f(t − s)·conj(f(t))` on the grid of `f`; `f(t − s)` is linearly
/// interpolated when `s` is not a multiple of `dt`.
pub fn tensor_product(f: &Signal, shift: f64) -> Result<Signal, StftError> {
    f.validate()?;
    let span = f.t_end() - f.t0;
    if !(shift.abs() < span) {
        return Err(StftError::NoOverlap(shift));
    }
    let values = (0..f.len())
        .map(|j| f.interp(f.t(j) - shift) * f.values[j].conj())
        .collect();
    Ok(Signal {
        t0: f.t0,
        dt: f.dt,
        values,
    })
}
