//! Phase retrieval: reconstruction from a full spectrogram, global-phase
//! alignment, least-squares fitting from lattice samples and
//! distinguishability reports.

mod fit;
mod pipeline;

pub use fit::{fit_from_samples, loss_and_gradient, FitConfig, FitReport, FitStatus, HermiteModel};
pub use pipeline::{
    ambiguity_to_signal, deconvolve, pipeline_grids, pipeline_spectrogram, reconstruct,
    reconstruction_window, spectro_to_correlation, tensor_rows, AmbiguityGrid, Correlation,
    PipelineConfig, RECONSTRUCTION_GAMMA,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattices::TfPoint;
use crate::stft::{stft_batch, Signal, StftError};
use crate::windows::WindowSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RetrievalError {
    #[error(transparent)]
    Stft(#[from] StftError),
    #[error("signal has zero norm")]
    ZeroNorm,
    #[error("signals are not on a shared grid")]
    GridMismatch,
    #[error("correlation does not decay at the lag boundary (ratio {0:e})")]
    InsufficientCoverage(f64),
    #[error("window radius {radius} exceeds half the signal span {half_span}")]
    WindowTooWide { radius: f64, half_span: f64 },
    #[error("window tensor-product spectrum is below threshold everywhere")]
    DegenerateWindow,
    #[error("largest |f|² value {0:e} is below the noise floor; cannot anchor the phase")]
    NoAnchor(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Unimodular `τ` minimising `‖f − τg‖` and the relative residual `‖f − τg‖/‖f‖`.
pub fn phase_align(f: &Signal, g: &Signal) -> Result<(Complex64, f64), RetrievalError> {
    if !f.same_grid(g) {
        return Err(RetrievalError::GridMismatch);
    }
    let (nf, ng) = (f.norm(), g.norm());
    if nf == 0.0 || ng == 0.0 {
        return Err(RetrievalError::ZeroNorm);
    }
    let ip = f.inner(g);
    let tau = if ip.norm() > 0.0 {
        ip / ip.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let err = f.sub(&g.scaled(tau)).norm() / nf;
    Ok((tau, err))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistinguishReport {
    pub max_dev: f64,
    pub argmax: TfPoint,
    pub aligned_distance: f64,
}

/// Largest difference of phaseless samples of `f` and `h` over `points`, and
/// their distance modulo global phase. `h` is resampled onto the grid of `f`
/// when the grids differ.
pub fn distinguish(
    f: &Signal,
    h: &Signal,
    w: &WindowSpec,
    points: &[TfPoint],
) -> Result<DistinguishReport, RetrievalError> {
    let h = if f.same_grid(h) {
        h.clone()
    } else {
        h.resample(f.grid())
    };
    let v = stft_batch(&[f, &h], w, points)?;
    let mut max_dev = 0.0;
    let mut argmax = points.first().copied().unwrap_or(TfPoint::new(0.0, 0.0));
    for (i, p) in points.iter().enumerate() {
        let d = (v[0][i].norm() - v[1][i].norm()).abs();
        if d > max_dev {
            max_dev = d;
            argmax = *p;
        }
    }
    let (_, aligned_distance) = phase_align(f, &h)?;
    Ok(DistinguishReport {
        max_dev,
        argmax,
        aligned_distance,
    })
}
