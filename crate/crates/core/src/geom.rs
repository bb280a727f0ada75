//! Planar vectors, unit directions and small symmetric matrices.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;

/// Tolerance on `|ϑ| = 1` accepted by [`Direction::new`].
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// A unit vector in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction(Vec2);

impl Direction {
    pub fn new(v: Vec2) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::param("direction", format!("|v| = {n}, expected 1")));
        }
        Ok(Direction(v))
    }

    pub fn from_angle(angle: f64) -> Self {
        Direction(Vec2::new(angle.cos(), angle.sin()))
    }

    /// Normalises `v`; fails on the zero vector.
    pub fn normalize(v: Vec2) -> Result<Self> {
        let n = v.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::param("direction", "cannot normalise zero vector"));
        }
        Ok(Direction(v / n))
    }

    pub fn vec(&self) -> Vec2 {
        self.0
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn angle(&self) -> f64 {
        self.0.y.atan2(self.0.x)
    }

    /// Counter-clockwise rotation by π/2.
    pub fn perp(&self) -> Direction {
        Direction(Vec2::new(-self.0.y, self.0.x))
    }

    pub fn neg(&self) -> Direction {
        Direction(-self.0)
    }

    pub fn dot(&self, v: &Vec2) -> f64 {
        self.0.dot(v)
    }
}

/// Real symmetric 2×2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 {
        xx: 0.0,
        xy: 0.0,
        yy: 0.0,
    };
    pub const IDENTITY: Sym2 = Sym2 {
        xx: 1.0,
        xy: 0.0,
        yy: 1.0,
    };

    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Sym2 { xx, xy, yy }
    }

    pub fn scalar(s: f64) -> Self {
        Sym2::new(s, 0.0, s)
    }

    pub fn to_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.xx, self.xy, self.xy, self.yy)
    }

    /// Symmetric part of `m`.
    pub fn from_matrix(m: &Matrix2<f64>) -> Self {
        Sym2::new(m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)])
    }

    pub fn scale(&self, s: f64) -> Self {
        Sym2::new(self.xx * s, self.xy * s, self.yy * s)
    }

    pub fn add(&self, o: &Sym2) -> Self {
        Sym2::new(self.xx + o.xx, self.xy + o.xy, self.yy + o.yy)
    }

    pub fn sub(&self, o: &Sym2) -> Self {
        Sym2::new(self.xx - o.xx, self.xy - o.xy, self.yy - o.yy)
    }

    /// Eigenvalues `(λ_min, λ_max)` from the quadratic formula.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        let r = half_diff.hypot(self.xy);
        (mean - r, mean + r)
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        let (lo, hi) = self.eigenvalues();
        lo.abs().max(hi.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }
}

/// Complex symmetric 2×2 matrix, the element admittivity `σ − iωε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CSym2 {
    pub xx: Complex64,
    pub xy: Complex64,
    pub yy: Complex64,
}

impl CSym2 {
    pub fn identity() -> Self {
        CSym2::from_parts(&Sym2::IDENTITY, &Sym2::ZERO, 0.0)
    }

    /// `sigma − i·omega·eps`.
    pub fn from_parts(sigma: &Sym2, eps: &Sym2, omega: f64) -> Self {
        let c = |s: f64, e: f64| Complex64::new(s, -omega * e);
        CSym2 {
            xx: c(sigma.xx, eps.xx),
            xy: c(sigma.xy, eps.xy),
            yy: c(sigma.yy, eps.yy),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        CSym2 {
            xx: self.xx * s,
            xy: self.xy * s,
            yy: self.yy * s,
        }
    }

    pub fn to_matrix(&self) -> Matrix2<Complex64> {
        Matrix2::new(self.xx, self.xy, self.xy, self.yy)
    }

    /// Bilinear form `pᵀ γ q` (no conjugation).
    #[inline]
    pub fn bilinear(&self, p: &[Complex64; 2], q: &[Complex64; 2]) -> Complex64 {
        p[0] * (self.xx * q[0] + self.xy * q[1]) + p[1] * (self.xy * q[0] + self.yy * q[1])
    }

    #[inline]
    pub fn bilinear_real(&self, p: &Vec2, q: &Vec2) -> Complex64 {
        self.xx * (p.x * q.x) + self.xy * (p.x * q.y + p.y * q.x) + self.yy * (p.y * q.y)
    }

    pub fn is_identity(&self) -> bool {
        *self == CSym2::identity()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_closed_form() {
        let (lo, hi) = Sym2::new(2.0, 1.0, 2.0).eigenvalues();
        assert!((lo - 1.0).abs() < 1e-14 && (hi - 3.0).abs() < 1e-14);
        assert_eq!(Sym2::scalar(-0.5).eigenvalues(), (-0.5, -0.5));
    }

    #[test]
    fn direction_rejects_non_unit() {
        assert!(Direction::new(Vec2::new(1.0, 1.0)).is_err());
        let d = Direction::from_angle(0.3);
        assert!(d.perp().dot(&d.vec()).abs() < 1e-15);
    }

    #[test]
    fn complex_admittivity_parts() {
        let g = CSym2::from_parts(&Sym2::scalar(2.0), &Sym2::scalar(1.0), 2.0);
        assert_eq!(g.xx, Complex64::new(2.0, -2.0));
        assert_eq!(g.xy, Complex64::new(0.0, 0.0));
    }
}
