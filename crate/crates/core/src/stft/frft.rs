use num_complex::Complex64;

use super::{Signal, StftError};
use crate::windows::hermite_functions;

/// Coefficients `c_n = ⟨f, h_n⟩` and the relative residual of the truncated expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteExpansion {
    pub coeffs: Vec<Complex64>,
    pub residual: f64,
}

pub fn hermite_coefficients(f: &Signal, n_basis: usize) -> HermiteExpansion {
    let basis: Vec<Vec<f64>> = (0..f.len())
        .map(|j| hermite_functions(n_basis, f.t(j)))
        .collect();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n_basis];
    for (v, h) in f.values.iter().zip(&basis) {
        for (c, hn) in coeffs.iter_mut().zip(h) {
            *c += v * hn;
        }
    }
    coeffs.iter_mut().for_each(|c| *c *= f.dt);
    let resid_sq: f64 = f
        .values
        .iter()
        .zip(&basis)
        .map(|(v, h)| {
            (v - h
                .iter()
                .zip(&coeffs)
                .map(|(hn, c)| c * hn)
                .sum::<Complex64>())
            .norm_sqr()
        })
        .sum::<f64>()
        * f.dt;
    let norm = f.norm();
    let residual = if norm > 0.0 {
        resid_sq.sqrt() / norm
    } else {
        0.0
    };
    HermiteExpansion { coeffs, residual }
}

/// Fractional Fourier transform by Hermite expansion: `h_n ↦ e^{-inθ} h_n`.
/// At `θ = π/2` this is `f ↦ ∫ f(t) e^{-2πiωt} dt`.
pub fn frft(f: &Signal, theta: f64, n_basis: usize) -> Result<Signal, StftError> {
    f.validate()?;
    let exp = hermite_coefficients(f, n_basis);
    if exp.residual > 1e-6 {
        return Err(StftError::PoorRepresentation {
            n_basis,
            residual: exp.residual,
        });
    }
    let rotated: Vec<Complex64> = exp
        .coeffs
        .iter()
        .enumerate()
        .map(|(n, c)| c * Complex64::from_polar(1.0, -(n as f64) * theta))
        .collect();
    Ok(Signal::from_hermite(f.grid(), &rotated))
}
