//! Uniform one-dimensional grids shared by the signal, spectrogram and
//! ambiguity containers.

use serde::{Deserialize, Serialize};

/// The points `start + i * step` for `i in 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl UniformGrid {
    pub fn new(start: f64, step: f64, count: usize) -> Self {
        Self { start, step, count }
    }

    /// Grid of `count` points covering `[lo, hi]` inclusively.
    pub fn spanning(lo: f64, hi: f64, count: usize) -> Self {
        let step = if count > 1 {
            (hi - lo) / (count - 1) as f64
        } else {
            0.0
        };
        Self {
            start: lo,
            step,
            count,
        }
    }

    /// Grid of `m` FFT bins with spacing `step`, centred so that index `m/2`
    /// is the origin: `(-m/2 .. m/2) * step`.
    pub fn centered(step: f64, m: usize) -> Self {
        Self {
            start: -((m / 2) as f64) * step,
            step,
            count: m,
        }
    }

    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.at(self.count.saturating_sub(1))
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |i| self.at(i))
    }

    pub fn is_valid(&self) -> bool {
        self.count >= 1
            && self.step.is_finite()
            && self.start.is_finite()
            && (self.count == 1 || self.step > 0.0)
    }

    /// Signed integer `k` with `value ≈ k * step` (relative tolerance `1e-9`).
    pub fn multiple_of_step(&self, value: f64) -> Option<i64> {
        let k = (value / self.step).round();
        if (value - k * self.step).abs() <= 1e-9 * self.step.max(value.abs()) {
            Some(k as i64)
        } else {
            None
        }
    }

    /// Index `i` with `at(i) ≈ value`, if the value lies on the grid.
    pub fn index_of(&self, value: f64) -> Option<usize> {
        let k = ((value - self.start) / self.step).round();
        if k < 0.0 || k >= self.count as f64 {
            return None;
        }
        let off = (self.at(k as usize) - value).abs();
        (off <= 1e-9 * self.step).then_some(k as usize)
    }
}
