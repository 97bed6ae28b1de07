//! Square-root lattices `A(√ℤ)²`, SL(2,ℝ) deformations and sampling thresholds.
//!
//! A signed index `k` stands for the coordinate `sign(k)·√|k|`, so a point of
//! `A(√ℤ)²` is recorded together with its index pair `(k1, k2)`.

use std::f64::consts::{E, PI};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::fmt_f64;
use crate::windows::GrowthEnvelope;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("generating matrix is singular (|det| = {0:e})")]
    Singular(f64),
    #[error("matrix entries and radius must be finite, radius non-negative")]
    NonFinite,
    #[error("matrix is not in SL(2,R): det = {0}")]
    NotSymplectic(f64),
    #[error("p - q = {0} is not positive; no sampling threshold applies")]
    NotAdmissible(f64),
    #[error("index bound {0} is too large to enumerate")]
    TooManyPoints(f64),
}

/// `{±√n : 0 ≤ n ≤ n_max}`, ascending, with 0 listed once.
pub fn sqrt_set(n_max: u64) -> Vec<f64> {
    let pos: Vec<f64> = (1..=n_max).map(|n| (n as f64).sqrt()).collect();
    pos.iter()
        .rev()
        .map(|v| -v)
        .chain(std::iter::once(0.0))
        .chain(pos.iter().copied())
        .collect()
}

/// Coordinate `sign(k)·√|k|` for a signed index.
#[inline]
pub fn signed_sqrt(k: i64) -> f64 {
    (k.unsigned_abs() as f64).sqrt().copysign(k as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TfPoint {
    pub x: f64,
    pub omega: f64,
}

impl TfPoint {
    pub fn new(x: f64, omega: f64) -> Self {
        Self { x, omega }
    }
}

/// How the recorded indices map back to coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexKind {
    /// coordinate `sign(k)√|k|`
    SquareRoot,
    /// coordinate `k`
    Integer,
}

/// A finite set of time-frequency points with their generating indices.
/// Points added outside a lattice carry no index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub matrix: [[f64; 2]; 2],
    pub kind: IndexKind,
    pub points: Vec<TfPoint>,
    pub indices: Vec<Option<[i64; 2]>>,
}

impl PointSet {
    pub fn from_points(points: Vec<TfPoint>) -> Self {
        let n = points.len();
        PointSet {
            matrix: [[1.0, 0.0], [0.0, 1.0]],
            kind: IndexKind::SquareRoot,
            points,
            indices: vec![None; n],
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Recompute a point from its indices; `None` for index-free points.
    pub fn replay(&self, i: usize) -> Option<TfPoint> {
        let [k1, k2] = self.indices[i]?;
        let coord = |k: i64| match self.kind {
            IndexKind::SquareRoot => signed_sqrt(k),
            IndexKind::Integer => k as f64,
        };
        Some(apply(&self.matrix, coord(k1), coord(k2)))
    }

    /// CSV with header `idx,x,omega,n1,s1,n2,s2`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("idx,x,omega,n1,s1,n2,s2\n");
        for (i, (p, ix)) in self.points.iter().zip(&self.indices).enumerate() {
            let _ = write!(out, "{i},{},{}", fmt_f64(p.x), fmt_f64(p.omega));
            match ix {
                Some([k1, k2]) => {
                    let _ = writeln!(
                        out,
                        ",{},{},{},{}",
                        k1.unsigned_abs(),
                        k1.signum(),
                        k2.unsigned_abs(),
                        k2.signum()
                    );
                }
                None => out.push_str(",,,,\n"),
            }
        }
        out
    }
}

#[inline]
fn apply(m: &[[f64; 2]; 2], u: f64, v: f64) -> TfPoint {
    TfPoint {
        x: m[0][0] * u + m[0][1] * v,
        omega: m[1][0] * u + m[1][1] * v,
    }
}

fn det(m: &[[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Spectral norm of a 2×2 matrix.
fn spectral_norm(m: &[[f64; 2]; 2]) -> f64 {
    let frob2: f64 = m.iter().flatten().map(|v| v * v).sum();
    let d = det(m);
    let disc = (frob2 * frob2 - 4.0 * d * d).max(0.0).sqrt();
    ((frob2 + disc) / 2.0).sqrt()
}

fn inverse(m: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let d = det(m);
    [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
}

/// The truncation `{Az : z ∈ (√ℤ)², ‖Az‖₂ ≤ radius}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqrtLattice {
    pub matrix: [[f64; 2]; 2],
    pub radius: f64,
}

/// Guard against enumerations that would not fit in memory.
const MAX_INDEX_BOUND: f64 = 1e4;

impl SqrtLattice {
    pub fn new(matrix: [[f64; 2]; 2], radius: f64) -> Result<Self, LatticeError> {
        if !matrix.iter().flatten().all(|v| v.is_finite()) || !(radius.is_finite() && radius >= 0.0)
        {
            return Err(LatticeError::NonFinite);
        }
        let d = det(&matrix);
        if d.abs() <= 1e-12 {
            return Err(LatticeError::Singular(d));
        }
        Ok(Self { matrix, radius })
    }

    /// `α(√ℤ)²`.
    pub fn rect(alpha: f64, radius: f64) -> Result<Self, LatticeError> {
        Self::new([[alpha, 0.0], [0.0, alpha]], radius)
    }

    /// `α·S(√ℤ)²` for a symplectic deformation `S`.
    pub fn deformed(s: &Sl2Mat, alpha: f64, radius: f64) -> Result<Self, LatticeError> {
        Self::new(
            [[alpha * s.a, alpha * s.b], [alpha * s.c, alpha * s.d]],
            radius,
        )
    }

    /// Per-coordinate bound `n ≤ ceil((‖A⁻¹‖₂·R)²)` on `|k|`.
    pub fn index_bound(&self) -> f64 {
        (spectral_norm(&inverse(&self.matrix)) * self.radius)
            .powi(2)
            .ceil()
    }

    /// Enumerate in lexicographic order of `(k1, k2)`.
    pub fn generate(&self) -> Result<PointSet, LatticeError> {
        let bound = self.index_bound();
        if bound > MAX_INDEX_BOUND {
            return Err(LatticeError::TooManyPoints(bound));
        }
        let n = bound as i64;
        let roots: Vec<f64> = (-n..=n).map(signed_sqrt).collect();
        let mut points = Vec::new();
        let mut indices = Vec::new();
        for (i1, &u) in roots.iter().enumerate() {
            for (i2, &v) in roots.iter().enumerate() {
                let p = apply(&self.matrix, u, v);
                if p.x.hypot(p.omega) <= self.radius {
                    points.push(p);
                    indices.push(Some([i1 as i64 - n, i2 as i64 - n]));
                }
            }
        }
        Ok(PointSet {
            matrix: self.matrix,
            kind: IndexKind::SquareRoot,
            points,
            indices,
        })
    }
}

/// Ordinary lattice `Aℤ²` truncated to a disk, for comparison plots.
pub fn integer_lattice(matrix: [[f64; 2]; 2], radius: f64) -> Result<PointSet, LatticeError> {
    let lat = SqrtLattice::new(matrix, radius)?;
    let bound = (spectral_norm(&inverse(&matrix)) * radius).ceil();
    if bound > MAX_INDEX_BOUND {
        return Err(LatticeError::TooManyPoints(bound));
    }
    let n = bound as i64;
    let mut points = Vec::new();
    let mut indices = Vec::new();
    for k1 in -n..=n {
        for k2 in -n..=n {
            let p = apply(&lat.matrix, k1 as f64, k2 as f64);
            if p.x.hypot(p.omega) <= radius {
                points.push(p);
                indices.push(Some([k1, k2]));
            }
        }
    }
    Ok(PointSet {
        matrix,
        kind: IndexKind::Integer,
        points,
        indices,
    })
}

/// The cross-shaped set `√2({0}×√ℤ) ∪ √2(√ℤ×{0}) ∪ {(1,0),(0,1)}` with `n ≤ n_max`.
pub fn als_preset(n_max: u64) -> PointSet {
    let s = 2f64.sqrt();
    let n = n_max as i64;
    let mut points = Vec::new();
    let mut indices = Vec::new();
    for k1 in -n..=n {
        if k1 == 0 {
            for k2 in -n..=n {
                points.push(TfPoint::new(0.0, s * signed_sqrt(k2)));
                indices.push(Some([0, k2]));
            }
        } else {
            points.push(TfPoint::new(s * signed_sqrt(k1), 0.0));
            indices.push(Some([k1, 0]));
        }
    }
    points.push(TfPoint::new(1.0, 0.0));
    points.push(TfPoint::new(0.0, 1.0));
    indices.extend([None, None]);
    PointSet {
        matrix: [[s, 0.0], [0.0, s]],
        kind: IndexKind::SquareRoot,
        points,
        indices,
    }
}

/// A matrix `[[a, b], [c, d]]` of determinant one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sl2Mat {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Sl2Mat {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, LatticeError> {
        let det = a * d - b * c;
        if !(det - 1.0).abs().le(&1e-10) {
            return Err(LatticeError::NotSymplectic(det));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn identity() -> Self {
        Self {
            a: 1.0,
            b: 0.0,
            c: 0.0,
            d: 1.0,
        }
    }

    /// `[[cos θ, −sin θ], [sin θ, cos θ]]`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            a: c,
            b: -s,
            c: s,
            d: c,
        }
    }

    /// Shear parallel to the x-axis, `[[1, σ], [0, 1]]`.
    pub fn shear(sigma: f64) -> Self {
        Self {
            a: 1.0,
            b: sigma,
            c: 0.0,
            d: 1.0,
        }
    }

    /// `p = 1/(a² + b²)`.
    pub fn p(&self) -> f64 {
        1.0 / (self.a * self.a + self.b * self.b)
    }

    /// `q = |ac + bd|`.
    pub fn q(&self) -> f64 {
        (self.a * self.c + self.b * self.d).abs()
    }

    pub fn apply(&self, pt: TfPoint) -> TfPoint {
        apply(&[[self.a, self.b], [self.c, self.d]], pt.x, pt.omega)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    Rect,
    Gaussian,
    Sl2Conservative,
    Sl2Printed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sl2Variant {
    #[default]
    Conservative,
    Printed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub tau_max: Vec<f64>,
    pub nu_max: Vec<f64>,
    pub admissible: bool,
    pub rule: ThresholdRule,
}

impl ThresholdReport {
    /// Mark admissibility for the given spacings: each must be strictly below its bound.
    /// A single spacing is applied to every axis.
    pub fn check(mut self, tau: &[f64], nu: &[f64]) -> Self {
        let below = |spacing: &[f64], bound: &[f64]| {
            bound.iter().enumerate().all(|(j, b)| {
                let s = if spacing.len() == 1 {
                    spacing[0]
                } else {
                    spacing.get(j).copied().unwrap_or(f64::INFINITY)
                };
                s > 0.0 && s < *b
            })
        };
        self.admissible = below(tau, &self.tau_max) && below(nu, &self.nu_max);
        self
    }
}

/// `τ_j < (2 b_j e)^{-1/2}` and `ν_j < (a_j/(2π² e))^{1/2}` for a window in `O_a^b`.
pub fn rect_thresholds(env: &GrowthEnvelope) -> ThresholdReport {
    ThresholdReport {
        tau_max: env.b.iter().map(|b| (1.0 / (2.0 * b * E)).sqrt()).collect(),
        nu_max: env
            .a
            .iter()
            .map(|a| (a / (2.0 * PI * PI * E)).sqrt())
            .collect(),
        admissible: true,
        rule: ThresholdRule::Rect,
    }
}

/// Bounds for a Gaussian window `e^{-γt²}` (the limit `ε → 0` of the rect rule).
pub fn gaussian_thresholds(gamma: f64) -> ThresholdReport {
    let env = GrowthEnvelope {
        a: vec![gamma],
        b: vec![gamma],
        c: None,
    };
    ThresholdReport {
        rule: ThresholdRule::Gaussian,
        ..rect_thresholds(&env)
    }
}

/// Spacing bound `α_max` for `α·S(√ℤ)²` with a standard Gaussian window.
pub fn sl2_alpha_max(s: &Sl2Mat, variant: Sl2Variant) -> Result<f64, LatticeError> {
    let (p, q) = (s.p(), s.q());
    if p - q <= 0.0 {
        return Err(LatticeError::NotAdmissible(p - q));
    }
    let base = (1.0 / (2.0 * PI * E)).sqrt();
    Ok(match variant {
        Sl2Variant::Printed => base * (1.0 / (p - q).sqrt()).min((p + q).sqrt()),
        Sl2Variant::Conservative => base * (1.0 / (p + q).sqrt()).min((p - q).sqrt()),
    })
}

pub fn sl2_threshold(s: &Sl2Mat, variant: Sl2Variant) -> Result<ThresholdReport, LatticeError> {
    let alpha = sl2_alpha_max(s, variant)?;
    Ok(ThresholdReport {
        tau_max: vec![alpha],
        nu_max: vec![alpha],
        admissible: true,
        rule: match variant {
            Sl2Variant::Conservative => ThresholdRule::Sl2Conservative,
            Sl2Variant::Printed => ThresholdRule::Sl2Printed,
        },
    })
}

/// Positive root of `σ³ + σ = 1`, the edge of the admissible shear range.
pub fn shear_admissible_root() -> f64 {
    let f = |s: f64| s * s * s + s - 1.0;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const GAUSS_BOUND: f64 = 0.24197072451914337;

    #[test]
    fn sqrt_set_examples() {
        let s3 = sqrt_set(3);
        let expect = [
            -(3f64.sqrt()),
            -(2f64.sqrt()),
            -1.0,
            0.0,
            1.0,
            2f64.sqrt(),
            3f64.sqrt(),
        ];
        assert_eq!(s3, expect);
        assert_eq!(sqrt_set(0), vec![0.0]);
        let s4 = sqrt_set(4);
        assert_eq!(s4.len(), 9);
        assert_eq!(s4[4 + 4], 2.0);
    }

    /// Brute force over `|k| ≤ 3` for the identity at radius 1.5.
    #[test]
    fn identity_radius_one_and_a_half() {
        let pts = SqrtLattice::new([[1.0, 0.0], [0.0, 1.0]], 1.5)
            .unwrap()
            .generate()
            .unwrap();
        let vals = sqrt_set(3);
        let mut brute = 0;
        for &s in &vals {
            for &t in &vals {
                if s * s + t * t <= 2.25 {
                    brute += 1;
                }
            }
        }
        assert_eq!(brute, 13);
        assert_eq!(pts.len(), 13);
    }

    #[test]
    fn degenerate_radii_and_scalings() {
        let pts = SqrtLattice::rect(1.0, 0.0).unwrap().generate().unwrap();
        assert_eq!(pts.points, vec![TfPoint::new(0.0, 0.0)]);
        let pts = SqrtLattice::rect(2.0, 1.9).unwrap().generate().unwrap();
        assert_eq!(pts.len(), 1);
        assert!(matches!(
            SqrtLattice::new([[1.0, 2.0], [2.0, 4.0]], 1.0),
            Err(LatticeError::Singular(_))
        ));
    }

    #[test]
    fn sheared_lattice_is_complete() {
        // every point of a brute-force enumeration with a generous index cap is present
        let s = Sl2Mat::shear(0.5);
        let lat = SqrtLattice::deformed(&s, 0.3, 2.0).unwrap();
        let pts = lat.generate().unwrap();
        let cap = 4 * lat.index_bound() as i64;
        let mut brute = 0;
        for k1 in -cap..=cap {
            for k2 in -cap..=cap {
                let p = apply(&lat.matrix, signed_sqrt(k1), signed_sqrt(k2));
                if p.x.hypot(p.omega) <= lat.radius {
                    brute += 1;
                }
            }
        }
        assert_eq!(pts.len(), brute);
    }

    #[test]
    fn rotation_and_shear_parameters() {
        let r = Sl2Mat::rotation(0.7);
        assert!((r.p() - 1.0).abs() < 1e-15 && r.q() < 1e-15);
        let s = Sl2Mat::shear(0.5);
        assert!((s.p() - 0.8).abs() < 1e-15 && (s.q() - 0.5).abs() < 1e-15);
        assert_eq!(Sl2Mat::shear(0.0), Sl2Mat::identity());
        assert!(Sl2Mat::new(1.0, 0.0, 0.0, 1.0 + 2e-10).is_err());
        assert!(Sl2Mat::new(2.0, 0.0, 0.0, 0.5).is_ok());
    }

    #[test]
    fn rect_threshold_values() {
        let g = rect_thresholds(&GrowthEnvelope::scalar(PI, PI).unwrap());
        assert!((g.tau_max[0] - GAUSS_BOUND).abs() < 1e-15);
        assert!((g.nu_max[0] - GAUSS_BOUND).abs() < 1e-15);
        let r = rect_thresholds(&GrowthEnvelope::new(vec![1.0, 4.0], vec![1.0, 4.0]).unwrap());
        assert!((r.tau_max[0] - 0.42888).abs() < 1e-5 && (r.tau_max[1] - 0.21444).abs() < 1e-5);
        let eps = 1e-9;
        let near = rect_thresholds(&GrowthEnvelope::scalar(2.0 - eps, 2.0 + eps).unwrap());
        let cor = (1.0 / (2.0 * 2.0 * E)).sqrt();
        assert!((near.tau_max[0] - cor).abs() < 1e-8);
        assert!(g.clone().check(&[0.24], &[0.24]).admissible);
        assert!(!g.check(&[0.25], &[0.24]).admissible);
    }

    #[test]
    fn sl2_threshold_values() {
        for theta in [0.0, 0.3, PI / 4.0, 1.2, 2.9] {
            for v in [Sl2Variant::Conservative, Sl2Variant::Printed] {
                let a = sl2_alpha_max(&Sl2Mat::rotation(theta), v).unwrap();
                assert!((a - GAUSS_BOUND).abs() < 1e-13);
            }
        }
        let s = Sl2Mat::shear(0.5);
        let printed = sl2_alpha_max(&s, Sl2Variant::Printed).unwrap();
        let cons = sl2_alpha_max(&s, Sl2Variant::Conservative).unwrap();
        assert!((printed - GAUSS_BOUND * (1.3f64).sqrt()).abs() < 1e-15);
        assert!((printed - 0.2759).abs() < 5e-5);
        assert!((cons - GAUSS_BOUND * 0.3f64.sqrt()).abs() < 1e-15);
        assert!((cons - 0.1325).abs() < 5e-5);
        assert!(matches!(
            sl2_threshold(&Sl2Mat::shear(0.69), Sl2Variant::Conservative),
            Err(LatticeError::NotAdmissible(_))
        ));
    }

    #[test]
    fn shear_root() {
        let r = shear_admissible_root();
        assert!((r - 0.6823).abs() < 5e-5);
        assert!((1.0 / (1.0 + r * r) - r).abs() < 1e-10);
        assert!(sl2_alpha_max(&Sl2Mat::shear(r - 1e-3), Sl2Variant::Conservative).is_ok());
        assert!(sl2_alpha_max(&Sl2Mat::shear(r + 1e-3), Sl2Variant::Conservative).is_err());
    }

    #[test]
    fn als_examples() {
        let s = 2f64.sqrt();
        let one = als_preset(1);
        let expect = [
            (-s, 0.0),
            (0.0, -s),
            (0.0, 0.0),
            (0.0, s),
            (s, 0.0),
            (1.0, 0.0),
            (0.0, 1.0),
        ];
        assert_eq!(one.len(), expect.len());
        for (p, (x, w)) in one.points.iter().zip(expect) {
            assert!((p.x - x).abs() < 1e-15 && (p.omega - w).abs() < 1e-15);
        }
        let zero = als_preset(0);
        assert_eq!(
            zero.points,
            vec![
                TfPoint::new(0.0, 0.0),
                TfPoint::new(1.0, 0.0),
                TfPoint::new(0.0, 1.0)
            ]
        );
        for i in 0..one.len() {
            if let Some(p) = one.replay(i) {
                assert_eq!(p, one.points[i]);
            }
        }
    }

    #[test]
    fn csv_layout() {
        let pts = SqrtLattice::rect(1.0, 1.0).unwrap().generate().unwrap();
        let csv = pts.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("idx,x,omega,n1,s1,n2,s2"));
        assert_eq!(
            lines.next().unwrap(),
            format!("0,{},{},1,-1,0,0", fmt_f64(-1.0), fmt_f64(0.0))
        );
        assert!(als_preset(0).to_csv().ends_with(",,,,\n"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn replay_is_exact_and_inside(
            a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, d in -2.0f64..2.0,
            radius in 0.0f64..2.5,
        ) {
            prop_assume!((a * d - b * c).abs() > 0.2);
            let pts = SqrtLattice::new([[a, b], [c, d]], radius).unwrap().generate().unwrap();
            for i in 0..pts.len() {
                prop_assert_eq!(pts.replay(i), Some(pts.points[i]));
                let p = pts.points[i];
                prop_assert!(p.x.hypot(p.omega) <= radius);
            }
            let mut sorted = pts.indices.clone();
            sorted.sort();
            sorted.dedup();
            prop_assert_eq!(&sorted, &pts.indices);
        }

        #[test]
        fn identity_lattice_is_symmetric(radius in 0.0f64..3.0) {
            let pts = SqrtLattice::rect(1.0, radius).unwrap().generate().unwrap();
            for p in &pts.points {
                for q in [TfPoint::new(-p.x, p.omega), TfPoint::new(p.x, -p.omega)] {
                    let q = TfPoint::new(q.x + 0.0, q.omega + 0.0);
                    prop_assert!(pts.points.iter().any(|r| r.x == q.x && r.omega == q.omega));
                }
            }
        }

        #[test]
        fn conservative_never_exceeds_printed(theta in -3.0f64..3.0, sigma in -0.68f64..0.68, alpha in 0.5f64..2.0) {
            let s = Sl2Mat::new(alpha, 0.0, 0.0, 1.0 / alpha).unwrap();
            for m in [Sl2Mat::rotation(theta), Sl2Mat::shear(sigma), s] {
                if let (Ok(c), Ok(p)) = (sl2_alpha_max(&m, Sl2Variant::Conservative), sl2_alpha_max(&m, Sl2Variant::Printed)) {
                    prop_assert!(c <= p + 1e-15);
                }
            }
        }
    }
}
