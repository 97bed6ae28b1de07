//! Spectrogram → correlation → ambiguity → signal.
//!
//! With `x` running over the signal grid and `dω = 1/(M·dt)`, the forward
//! transform of `ω ↦ |V_w f(x, ω)|²` is the discrete correlation
//! `Q(x, s) = ⟨f_s, T_x w_s⟩` with `f_s(t) = f(t − s)·conj(f(t))`. In `x` this
//! is a correlation of `f_s` with `w_s`, so dividing transforms recovers the
//! transform of `f_s`, from which `f` follows up to a global phase.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::RetrievalError;
use crate::grid::UniformGrid;
use crate::stft::{fft_size, spectrogram_grid, Signal, StftError, COVERAGE_TOL};
use crate::windows::WindowSpec;

/// Forward transform of the spectrogram along `ω`: `values[[i, m]] = Q(x_i, s_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    pub xgrid: UniformGrid,
    /// Lags `s_m = m·dt`, `m = -M/2 .. M/2`.
    pub lags: UniformGrid,
    pub values: Array2<Complex64>,
}

/// `A(s, ξ) = ∫ f_s(t) e^{-2πiξt} dt = conj(V_f f(s, −ξ))` on a band of lags.
///
/// Frequencies whose denominator fell below threshold hold zero.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguityGrid {
    /// Lags `s`.
    pub lags: UniformGrid,
    /// Frequencies `ξ_q`, centred, one full period `1/dt`.
    pub freqs: UniformGrid,
    /// Time grid the ambiguity was recovered on.
    pub tgrid: UniformGrid,
    /// `values[[m, q]] = A(lags[m], freqs[q])`.
    pub values: Array2<Complex64>,
    /// `kept[[m, q]]` is false where the denominator was thresholded.
    pub kept: Array2<bool>,
}

impl AmbiguityGrid {
    pub fn lag_index(&self, s: f64) -> Option<usize> {
        self.lags.index_of(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Relative threshold on the window tensor-product spectrum.
    pub eps_rel: f64,
    /// Largest lag `|s|` recovered.
    pub max_lag: f64,
    /// Damping of the phase propagation relative to `max |f|²`.
    pub floor_rel: f64,
}

/// Gaussian rate `γ = 8π` of the default reconstruction window `e^{-γt²}`.
///
/// The spectrum of the window tensor product decays like `e^{-π²ξ²/(2γ)}`;
/// with the standard `γ = π` the division loses Hermite mixtures of degree
/// five below double-precision roundoff, while `8π` keeps the quotient well
/// conditioned over the band the signal occupies.
pub const RECONSTRUCTION_GAMMA: f64 = 8.0 * PI;

/// The default reconstruction window.
pub fn reconstruction_window() -> WindowSpec {
    WindowSpec::Gaussian {
        gamma: RECONSTRUCTION_GAMMA,
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            eps_rel: 1e-6,
            max_lag: 0.5,
            floor_rel: 1e-6,
        }
    }
}

/// The `x` and `ω` grids on which the pipeline expects the spectrogram of a
/// signal on `tgrid`: `x` is `tgrid` itself, `ω` has `M = 2^⌈log₂ N⌉` bins.
pub fn pipeline_grids(tgrid: UniformGrid) -> (UniformGrid, UniformGrid) {
    let m = tgrid.count.next_power_of_two().max(2);
    (
        tgrid,
        UniformGrid::centered(1.0 / (m as f64 * tgrid.step), m),
    )
}

/// Forward Fourier transform in `ω` of each spectrogram row.
pub fn spectro_to_correlation(
    spec: &Array2<f64>,
    xgrid: UniformGrid,
    omegagrid: UniformGrid,
) -> Result<Correlation, RetrievalError> {
    let (nx, nw) = spec.dim();
    if nx != xgrid.count || nw != omegagrid.count || !xgrid.is_valid() || xgrid.count < 2 {
        return Err(StftError::IncompatibleGrid(
            "spectrogram shape does not match its grids".into(),
        )
        .into());
    }
    let dt = xgrid.step;
    let m = fft_size(dt, omegagrid.step)?;
    if nw != m {
        return Err(StftError::IncompatibleGrid(format!(
            "need one full period of {m} frequency bins, got {nw}"
        ))
        .into());
    }
    let fft = FftPlanner::new().plan_fft_forward(m);
    let half = m / 2;
    let domega = omegagrid.step;
    let omega0 = omegagrid.start;
    let lags = UniformGrid::centered(dt, m);

    let rows: Vec<Vec<Complex64>> = (0..nx)
        .into_par_iter()
        .map(|i| {
            let mut buf: Vec<Complex64> = spec
                .row(i)
                .iter()
                .map(|v| Complex64::new(*v, 0.0))
                .collect();
            fft.process(&mut buf);
            // Q(x, s_m) = dω e^{-2πiω₀ s_m} Σ_k S_k e^{-2πi k m/M}
            (0..m)
                .map(|c| {
                    let mm = c as i64 - half as i64;
                    let s = mm as f64 * dt;
                    buf[mm.rem_euclid(m as i64) as usize]
                        * Complex64::from_polar(domega, -2.0 * PI * omega0 * s)
                })
                .collect()
        })
        .collect();

    let mut values = Array2::zeros((nx, m));
    for (i, row) in rows.into_iter().enumerate() {
        for (c, v) in row.into_iter().enumerate() {
            values[[i, c]] = v;
        }
    }
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak > 0.0 {
        let edge = values
            .column(0)
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        if edge > 1e-10 * peak {
            return Err(RetrievalError::InsufficientCoverage(edge / peak));
        }
    }
    Ok(Correlation {
        xgrid,
        lags,
        values,
    })
}

/// Divide the `x`-transform of `Q(·, s)` by the transform of the window
/// tensor product, for every lag with `|s| ≤ max_lag`.
///
/// The threshold is `eps_rel` times the largest denominator over all lags,
/// `Σ_n |w(n·dt)|²`.
pub fn deconvolve(
    q: &Correlation,
    w: &WindowSpec,
    cfg: &PipelineConfig,
) -> Result<AmbiguityGrid, RetrievalError> {
    w.validate().map_err(StftError::from)?;
    if !(cfg.eps_rel > 0.0 && cfg.eps_rel < 1.0) || !(cfg.max_lag >= 0.0) {
        return Err(RetrievalError::InvalidConfig(format!(
            "eps_rel must be in (0,1) and max_lag ≥ 0, got {cfg:?}"
        )));
    }
    let dt = q.xgrid.step;
    let n = q.xgrid.count;
    let radius = w.effective_radius(COVERAGE_TOL);
    let half_span = 0.5 * (q.xgrid.end() - q.xgrid.start);
    if radius > half_span {
        return Err(RetrievalError::WindowTooWide { radius, half_span });
    }
    let r_sup = w.effective_radius(1e-32);
    let nw = (r_sup / dt).ceil() as i64;
    let mx = (n + 2 * nw as usize + 1).next_power_of_two();
    let half_lags = (q.lags.count / 2) as i64;
    let m_max = ((cfg.max_lag / dt).floor() as i64).min(half_lags - 1);
    let planner_fwd = FftPlanner::new().plan_fft_forward(mx);

    let d_max: f64 = (-nw..=nw)
        .map(|k| w.eval_real(k as f64 * dt).norm_sqr())
        .sum();
    let threshold = cfg.eps_rel * d_max;
    let freqs = UniformGrid::centered(1.0 / (mx as f64 * dt), mx);
    let t0 = q.xgrid.start;
    let half = (mx / 2) as i64;

    let rows: Vec<(Vec<Complex64>, Vec<bool>)> = (-m_max..=m_max)
        .into_par_iter()
        .map(|mm| {
            let col = (mm + half_lags) as usize;
            let s = mm as f64 * dt;
            let mut num = vec![Complex64::new(0.0, 0.0); mx];
            for i in 0..n {
                num[i] = q.values[[i, col]];
            }
            planner_fwd.process(&mut num);
            // w_s(u) = w(u − s)·conj(w(u)) sampled at u = k·dt
            let mut den = vec![Complex64::new(0.0, 0.0); mx];
            for k in -nw..=nw {
                let u = k as f64 * dt;
                den[k.rem_euclid(mx as i64) as usize] = w.eval_real(u - s) * w.eval_real(u).conj();
            }
            planner_fwd.process(&mut den);
            let mut vals = vec![Complex64::new(0.0, 0.0); mx];
            let mut kept = vec![false; mx];
            for c in 0..mx {
                let qq = c as i64 - half;
                let bin = qq.rem_euclid(mx as i64) as usize;
                let d = den[bin];
                if d.norm() > threshold {
                    let xi = qq as f64 / (mx as f64 * dt);
                    let fhat = num[bin] / (d.conj() * dt);
                    vals[c] = fhat * Complex64::from_polar(dt, -2.0 * PI * xi * t0);
                    kept[c] = true;
                }
            }
            (vals, kept)
        })
        .collect();

    if rows.iter().all(|(_, k)| k.iter().all(|b| !b)) {
        return Err(RetrievalError::DegenerateWindow);
    }
    let nl = rows.len();
    let mut values = Array2::zeros((nl, mx));
    let mut kept = Array2::from_elem((nl, mx), false);
    for (r, (v, k)) in rows.into_iter().enumerate() {
        for c in 0..mx {
            values[[r, c]] = v[c];
            kept[[r, c]] = k[c];
        }
    }
    Ok(AmbiguityGrid {
        lags: UniformGrid::new(-(m_max as f64) * dt, dt, nl),
        freqs,
        tgrid: q.xgrid,
        values,
        kept,
    })
}

/// `f_s(t_j)` for every stored lag, by inverse transform in `ξ`.
/// Row `m` corresponds to `amb.lags.at(m)`, column `j` to `amb.tgrid.at(j)`.
pub fn tensor_rows(amb: &AmbiguityGrid) -> Array2<Complex64> {
    let mx = amb.freqs.count;
    let dt = amb.tgrid.step;
    let t0 = amb.tgrid.start;
    let n = amb.tgrid.count;
    let half = (mx / 2) as i64;
    let ifft = FftPlanner::new().plan_fft_inverse(mx);
    let rows: Vec<Vec<Complex64>> = (0..amb.lags.count)
        .into_par_iter()
        .map(|r| {
            let mut buf = vec![Complex64::new(0.0, 0.0); mx];
            for c in 0..mx {
                let qq = c as i64 - half;
                let xi = qq as f64 / (mx as f64 * dt);
                buf[qq.rem_euclid(mx as i64) as usize] = amb.values[[r, c]]
                    * Complex64::from_polar(1.0 / (dt * mx as f64), 2.0 * PI * xi * t0);
            }
            ifft.process(&mut buf);
            buf.truncate(n);
            buf
        })
        .collect();
    let mut out = Array2::zeros((amb.lags.count, n));
    for (r, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            out[[r, j]] = v;
        }
    }
    out
}

/// Recover `f` up to global phase from its ambiguity band.
///
/// The representative has `f(t₀) = +√f₀(t₀)` at `t₀ = argmax f₀` with
/// `f₀ = |f|²`. Values are then filled outward from `t₀`: each new `f(u)`
/// solves `f_s(t) = f(u)·conj(f(t))`, `u = t − s`, in the least-squares sense
/// over the already known `t` within the lag band. The normal equation is
/// damped by `floor_rel · f₀(t₀)` so that values far below the noise floor
/// decay to zero instead of amplifying it.
pub fn ambiguity_to_signal(amb: &AmbiguityGrid, floor_rel: f64) -> Result<Signal, RetrievalError> {
    let rows = tensor_rows(amb);
    let zero_lag = amb
        .lag_index(0.0)
        .ok_or_else(|| RetrievalError::InvalidConfig("lag band must contain 0".into()))?;
    let n = amb.tgrid.count;
    let f0: Vec<f64> = (0..n).map(|j| rows[[zero_lag, j]].re).collect();
    let (j0, peak) = f0.iter().enumerate().fold(
        (0, 0.0),
        |acc, (j, v)| if *v > acc.1 { (j, *v) } else { acc },
    );
    let noise = (0..n)
        .map(|j| rows[[zero_lag, j]].im.abs())
        .fold(0.0, f64::max);
    if !(peak > 1e3 * noise) || peak <= 1e-300 {
        return Err(RetrievalError::NoAnchor(peak));
    }
    let m_max = (amb.lags.count / 2) as i64;
    let lag_row = |m: i64| (zero_lag as i64 + m) as usize;
    let damping = floor_rel * peak;

    let mut f = vec![Complex64::new(0.0, 0.0); n];
    f[j0] = Complex64::new(peak.sqrt(), 0.0);
    let fill = |j: usize, dir: i64, f: &mut Vec<Complex64>| {
        // known anchors t = t_j + m·dt·dir with 1 ≤ m ≤ m_max, lag s = t − u
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = damping;
        for m in 1..=m_max {
            let jt = j as i64 + dir * m;
            if jt < 0 || jt >= n as i64 {
                break;
            }
            let anchor = f[jt as usize];
            num += rows[[lag_row(dir * m), jt as usize]] * anchor;
            den += anchor.norm_sqr();
        }
        f[j] = num / den;
    };
    for j in (j0 + 1)..n {
        fill(j, -1, &mut f);
    }
    for j in (0..j0).rev() {
        fill(j, 1, &mut f);
    }
    Ok(Signal {
        t0: amb.tgrid.start,
        dt: amb.tgrid.step,
        values: f,
    })
}

/// The whole pipeline: spectrogram of `f` on the pipeline grids, then back to a signal.
pub fn reconstruct(
    spec: &Array2<f64>,
    xgrid: UniformGrid,
    omegagrid: UniformGrid,
    w: &WindowSpec,
    cfg: &PipelineConfig,
) -> Result<Signal, RetrievalError> {
    let q = spectro_to_correlation(spec, xgrid, omegagrid)?;
    let amb = deconvolve(&q, w, cfg)?;
    ambiguity_to_signal(&amb, cfg.floor_rel)
}

/// Spectrogram of `f` on [`pipeline_grids`].
pub fn pipeline_spectrogram(
    f: &Signal,
    w: &WindowSpec,
) -> Result<(Array2<f64>, UniformGrid, UniformGrid), RetrievalError> {
    let (xg, og) = pipeline_grids(f.grid());
    Ok((spectrogram_grid(f, w, xg, og)?, xg, og))
}
