use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Signal;
use crate::grid::UniformGrid;
use crate::lattices::Sl2Mat;

/// Metaplectic image of the standard Gaussian: `C e^{-π c t²}` with
/// `c = p(1 + i(ac + bd))`. `C = (2 Re c)^{1/4}` gives unit norm and a
/// positive value at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetaplecticGaussian {
    pub c: Complex64,
    pub amplitude: f64,
}

impl MetaplecticGaussian {
    pub fn new(s: &Sl2Mat) -> Self {
        let c = s.p() * Complex64::new(1.0, s.a * s.c + s.b * s.d);
        Self {
            c,
            amplitude: (2.0 * c.re).powf(0.25),
        }
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.amplitude * (-PI * self.c * t * t).exp()
    }

    pub fn to_signal(&self, grid: UniformGrid) -> Signal {
        Signal::from_fn(grid, |t| self.eval(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let id = MetaplecticGaussian::new(&Sl2Mat::identity());
        assert_eq!(id.c, Complex64::new(1.0, 0.0));
        assert!((id.amplitude - 2f64.powf(0.25)).abs() < 1e-15);
        let sh = MetaplecticGaussian::new(&Sl2Mat::shear(0.5));
        assert!((sh.c - Complex64::new(0.8, 0.4)).norm() < 1e-15);
        for theta in [0.3, 1.0, 2.5] {
            let r = MetaplecticGaussian::new(&Sl2Mat::rotation(theta));
            assert!((r.c - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn unit_norm() {
        for s in [
            Sl2Mat::shear(0.5),
            Sl2Mat::shear(-0.3),
            Sl2Mat::new(2.0, 0.0, 0.0, 0.5).unwrap(),
        ] {
            let g = MetaplecticGaussian::new(&s).to_signal(Signal::default_grid());
            assert!((g.norm_sqr() - 1.0).abs() < 1e-10);
            assert!(g.values[512].im == 0.0 && g.values[512].re > 0.0);
        }
    }
}
