//! Least-squares recovery of Hermite coefficients from phaseless samples.
//!
//! The model is `f_c = Σ_n c_n h_n`, so `V_w f_c(λ) = Σ_n c_n B[λ][n]` with
//! `B[λ][n] = V_w h_n(λ)` precomputed. The loss `Σ_λ (|V_w f_c(λ)|² − m_λ²)²`
//! is minimised by gradient descent over `(Re c, Im c)` with Barzilai–Borwein
//! trial steps and Armijo backtracking, from several seeded starts.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{phase_align, RetrievalError};
use crate::grid::UniformGrid;
use crate::stft::{stft_batch, Signal, TfSampleSet};
use crate::windows::WindowSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub n_basis: usize,
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop once the loss falls below `tol · Σ m_λ⁴`.
    pub tol: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Backtracking factor.
    pub shrink: f64,
    pub seed: u64,
    pub grid: UniformGrid,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            n_basis: 4,
            restarts: 8,
            max_iters: 5000,
            tol: 1e-24,
            armijo: 1e-4,
            shrink: 0.5,
            seed: 0,
            grid: Signal::default_grid(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), RetrievalError> {
        let ok = self.n_basis >= 1
            && self.restarts >= 1
            && self.tol > 0.0
            && self.armijo > 0.0
            && self.armijo < 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.grid.is_valid()
            && self.grid.count >= 2;
        if !ok {
            return Err(RetrievalError::InvalidConfig(format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    MaxIters,
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub status: FitStatus,
    pub loss: f64,
    pub n_iters: usize,
    pub coeffs: Vec<Complex64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aligned_error: Option<f64>,
    pub seed: u64,
    pub best_restart: usize,
}

/// Sampled STFTs of the Hermite basis together with the target magnitudes.
pub struct HermiteModel {
    /// `basis[λ·n_basis + n] = V_w h_n(λ)`.
    basis: Vec<Complex64>,
    targets_sq: Vec<f64>,
    n_basis: usize,
}

impl HermiteModel {
    pub fn new(
        samples: &TfSampleSet,
        w: &WindowSpec,
        n_basis: usize,
        grid: UniformGrid,
    ) -> Result<Self, RetrievalError> {
        let hs: Vec<Signal> = (0..n_basis)
            .map(|n| {
                let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
                c[n] = Complex64::new(1.0, 0.0);
                Signal::from_hermite(grid, &c)
            })
            .collect();
        let refs: Vec<&Signal> = hs.iter().collect();
        let per_basis = stft_batch(&refs, w, &samples.points)?;
        let mut basis = vec![Complex64::new(0.0, 0.0); samples.len() * n_basis];
        for (n, col) in per_basis.iter().enumerate() {
            for (l, v) in col.iter().enumerate() {
                basis[l * n_basis + n] = *v;
            }
        }
        Ok(Self {
            basis,
            targets_sq: samples.magnitudes.iter().map(|m| m * m).collect(),
            n_basis,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.targets_sq.len()
    }

    fn row(&self, l: usize) -> &[Complex64] {
        &self.basis[l * self.n_basis..(l + 1) * self.n_basis]
    }

    fn predict(&self, c: &[Complex64], l: usize) -> Complex64 {
        self.row(l).iter().zip(c).map(|(b, c)| b * c).sum()
    }

    pub fn loss(&self, c: &[Complex64]) -> f64 {
        (0..self.n_samples())
            .map(|l| {
                let r = self.predict(c, l).norm_sqr() - self.targets_sq[l];
                r * r
            })
            .sum()
    }

    /// Loss and `∂L/∂Re c_n + i ∂L/∂Im c_n = 4 Σ_λ r_λ V_λ conj(B[λ][n])`.
    pub fn loss_and_gradient(&self, c: &[Complex64]) -> (f64, Vec<Complex64>) {
        let mut grad = vec![Complex64::new(0.0, 0.0); self.n_basis];
        let mut loss = 0.0;
        for l in 0..self.n_samples() {
            let v = self.predict(c, l);
            let r = v.norm_sqr() - self.targets_sq[l];
            loss += r * r;
            let scaled = 4.0 * r * v;
            for (g, b) in grad.iter_mut().zip(self.row(l)) {
                *g += scaled * b.conj();
            }
        }
        (loss, grad)
    }

    fn energy(&self, c: &[Complex64]) -> f64 {
        (0..self.n_samples())
            .map(|l| self.predict(c, l).norm_sqr())
            .sum()
    }
}

/// Convenience wrapper returning `(L(c), ∇L(c))` for an explicit model.
pub fn loss_and_gradient(model: &HermiteModel, c: &[Complex64]) -> (f64, Vec<Complex64>) {
    model.loss_and_gradient(c)
}

struct RunResult {
    status: FitStatus,
    loss: f64,
    n_iters: usize,
    coeffs: Vec<Complex64>,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}

fn descend(
    model: &HermiteModel,
    mut c: Vec<Complex64>,
    cfg: &FitConfig,
    stop_at: f64,
) -> RunResult {
    let (mut loss, mut grad) = model.loss_and_gradient(&c);
    let gnorm0 = dot(&grad, &grad).sqrt();
    let mut step = if gnorm0 > 0.0 { 1e-3 / gnorm0 } else { 0.0 };
    let mut prev: Option<(Vec<Complex64>, Vec<Complex64>)> = None;
    let mut stalled = 0;
    for iter in 0..cfg.max_iters {
        if loss <= stop_at {
            return RunResult {
                status: FitStatus::Converged,
                loss,
                n_iters: iter,
                coeffs: c,
            };
        }
        let g2 = dot(&grad, &grad);
        if g2 == 0.0 {
            return RunResult {
                status: FitStatus::Stalled,
                loss,
                n_iters: iter,
                coeffs: c,
            };
        }
        if let Some((pc, pg)) = &prev {
            let s: Vec<Complex64> = c.iter().zip(pc).map(|(a, b)| a - b).collect();
            let y: Vec<Complex64> = grad.iter().zip(pg).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 0.0 {
                step = dot(&s, &s) / sy;
            }
        }
        let mut t = step;
        let (trial, trial_loss) = loop {
            let trial: Vec<Complex64> = c.iter().zip(&grad).map(|(a, g)| a - g * t).collect();
            let tl = model.loss(&trial);
            if tl <= loss - cfg.armijo * t * g2 || t < 1e-300 {
                break (trial, tl);
            }
            t *= cfg.shrink;
        };
        if !(trial_loss < loss) {
            stalled += 1;
            if stalled > 5 {
                return RunResult {
                    status: FitStatus::Stalled,
                    loss,
                    n_iters: iter,
                    coeffs: c,
                };
            }
            step = t * cfg.shrink;
            prev = None;
            continue;
        }
        stalled = 0;
        let (new_loss, new_grad) = model.loss_and_gradient(&trial);
        prev = Some((
            std::mem::replace(&mut c, trial),
            std::mem::replace(&mut grad, new_grad),
        ));
        loss = new_loss;
        step = t;
    }
    let status = if loss <= stop_at {
        FitStatus::Converged
    } else {
        FitStatus::MaxIters
    };
    RunResult {
        status,
        loss,
        n_iters: cfg.max_iters,
        coeffs: c,
    }
}

/// Fit Hermite coefficients to phaseless samples; deterministic for a fixed seed.
///
/// Restart `r` draws its start from `ChaCha8(seed + r)`; the best restart is
/// chosen by `(loss, r)`. With `truth` the report includes the phase-aligned
/// error of the fitted signal on the truth's grid.
pub fn fit_from_samples(
    samples: &TfSampleSet,
    w: &WindowSpec,
    cfg: &FitConfig,
    truth: Option<&Signal>,
) -> Result<FitReport, RetrievalError> {
    cfg.validate()?;
    let grid = truth.map(|t| t.grid()).unwrap_or(cfg.grid);
    let model = HermiteModel::new(samples, w, cfg.n_basis, grid)?;
    let target_energy: f64 = model.targets_sq.iter().sum();
    let scale4: f64 = model.targets_sq.iter().map(|m| m * m).sum();

    let aligned = |coeffs: &[Complex64]| -> Option<f64> {
        let t = truth?;
        let fitted = Signal::from_hermite(t.grid(), coeffs);
        match phase_align(t, &fitted) {
            Ok((_, e)) => Some(e),
            Err(_) => Some(if t.norm() == 0.0 && fitted.norm() == 0.0 {
                0.0
            } else {
                1.0
            }),
        }
    };

    if target_energy == 0.0 {
        let coeffs = vec![Complex64::new(0.0, 0.0); cfg.n_basis];
        return Ok(FitReport {
            status: FitStatus::Converged,
            loss: 0.0,
            n_iters: 0,
            aligned_error: aligned(&coeffs),
            coeffs,
            seed: cfg.seed,
            best_restart: 0,
        });
    }

    let stop_at = cfg.tol * scale4;
    let runs: Vec<RunResult> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(r as u64));
            let mut c: Vec<Complex64> = (0..cfg.n_basis)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re, im)
                })
                .collect();
            let e = model.energy(&c);
            if e > 0.0 {
                let k = (target_energy / e).sqrt();
                c.iter_mut().for_each(|v| *v *= k);
            }
            descend(&model, c, cfg, stop_at)
        })
        .collect();

    let (best_restart, best) = runs
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.loss.total_cmp(&b.loss).then(i.cmp(j)))
        .expect("at least one restart");
    Ok(FitReport {
        status: best.status,
        loss: best.loss,
        n_iters: best.n_iters,
        coeffs: best.coeffs.clone(),
        aligned_error: aligned(&best.coeffs),
        seed: cfg.seed,
        best_restart,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattices::SqrtLattice;
    use crate::stft::sample_phaseless;
    use rand::Rng;

    fn small_model(seed: u64) -> (HermiteModel, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = SqrtLattice::rect(0.3, 2.0)
            .unwrap()
            .generate()
            .unwrap()
            .points;
        let truth = Signal::from_hermite(
            Signal::default_grid(),
            &[
                Complex64::new(0.7, 0.2),
                Complex64::new(-0.3, 0.5),
                Complex64::new(0.1, 0.0),
            ],
        );
        let samples = sample_phaseless(&truth, &WindowSpec::hermite(0), &pts).unwrap();
        let model = HermiteModel::new(&samples, &WindowSpec::hermite(0), 3, Signal::default_grid())
            .unwrap();
        let _ = rng.random::<u64>();
        (model, rng)
    }

    #[test]
    fn gradient_matches_central_differences() {
        let (model, mut rng) = small_model(1);
        let h = 1e-6;
        for _ in 0..10 {
            let c: Vec<Complex64> = (0..3)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let (_, g) = model.loss_and_gradient(&c);
            for n in 0..3 {
                for (k, dir) in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]
                    .into_iter()
                    .enumerate()
                {
                    let mut cp = c.clone();
                    let mut cm = c.clone();
                    cp[n] += dir * h;
                    cm[n] -= dir * h;
                    let fd = (model.loss(&cp) - model.loss(&cm)) / (2.0 * h);
                    let an = if k == 0 { g[n].re } else { g[n].im };
                    assert!(
                        (fd - an).abs() <= 1e-5 * an.abs().max(1e-3),
                        "fd {fd} vs {an}"
                    );
                }
            }
        }
    }

    #[test]
    fn loss_is_phase_invariant() {
        let (model, mut rng) = small_model(2);
        let c: Vec<Complex64> = (0..3)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let base = model.loss(&c);
        for _ in 0..5 {
            let tau = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
            let rotated: Vec<Complex64> = c.iter().map(|v| v * tau).collect();
            assert!((model.loss(&rotated) - base).abs() <= 1e-12 * base.max(1.0));
        }
    }

    #[test]
    fn zero_samples_fit_zero() {
        let pts = SqrtLattice::rect(0.5, 1.0)
            .unwrap()
            .generate()
            .unwrap()
            .points;
        let n = pts.len();
        let samples = TfSampleSet::new(pts, vec![0.0; n]).unwrap();
        let rep = fit_from_samples(
            &samples,
            &WindowSpec::hermite(0),
            &FitConfig::default(),
            None,
        )
        .unwrap();
        assert_eq!(rep.loss, 0.0);
        assert!(rep.coeffs.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn recovers_gaussian_on_small_lattice() {
        let pts = SqrtLattice::rect(0.24, 2.5)
            .unwrap()
            .generate()
            .unwrap()
            .points;
        let truth = Signal::from_window(&WindowSpec::hermite(0), Signal::default_grid());
        let w = WindowSpec::hermite(0);
        let samples = sample_phaseless(&truth, &w, &pts).unwrap();
        let cfg = FitConfig {
            n_basis: 4,
            seed: 7,
            ..FitConfig::default()
        };
        let rep = fit_from_samples(&samples, &w, &cfg, Some(&truth)).unwrap();
        assert!(rep.aligned_error.unwrap() < 1e-3, "{rep:?}");
        let again = fit_from_samples(&samples, &w, &cfg, Some(&truth)).unwrap();
        assert_eq!(rep, again);
    }
}
