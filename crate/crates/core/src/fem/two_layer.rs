//! Separation-of-variables solution for a concentric two-layer unit disk.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

/// Radial coefficients of the mode-`n` solution with trace `e^{inθ}` on the unit circle:
/// `A r^{|n|}` for `r < ρ` and `B r^{|n|} + C r^{−|n|}` for `ρ < r < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLayerMode {
    pub n: i64,
    pub a: C,
    pub b: C,
    pub c: C,
}

impl TwoLayerMode {
    /// Radial profile at `r`.
    pub fn radial(&self, rho: f64, r: f64) -> C {
        let m = self.n.unsigned_abs() as i32;
        if m == 0 {
            return C::new(1.0, 0.0);
        }
        if r < rho {
            self.a * r.powi(m)
        } else {
            self.b * r.powi(m) + self.c * r.powi(-m)
        }
    }
}

fn check(rho: f64, k: C) -> Result<()> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::param("rho", format!("{rho} is outside (0, 1)")));
    }
    if !(k.re > 0.0) || !k.im.is_finite() {
        return Err(Error::param(
            "k",
            format!("{k} must have positive real part"),
        ));
    }
    Ok(())
}

/// Solves the interface conditions `u` and `k ∂_r u` continuous at `r = ρ`.
pub fn two_layer_mode(rho: f64, k: C, n: i64) -> Result<TwoLayerMode> {
    check(rho, k)?;
    if n == 0 {
        let one = C::new(1.0, 0.0);
        return Ok(TwoLayerMode {
            n,
            a: one,
            b: one,
            c: C::new(0.0, 0.0),
        });
    }
    let m = n.unsigned_abs() as i32;
    let mu = (1.0 - k) / (1.0 + k);
    let r2 = rho.powi(2 * m);
    let b = 1.0 / (1.0 + mu * r2);
    let c = mu * r2 * b;
    let a = b + c / r2;
    Ok(TwoLayerMode { n, a, b, c })
}

/// DtN eigenvalue `λ_n = |n|(1 − μρ^{2|n|})/(1 + μρ^{2|n|})`, `μ = (1 − k)/(1 + k)`.
pub fn analytic_two_layer_dtn(rho: f64, k: C, n: i64) -> Result<C> {
    if k == C::new(-1.0, 0.0) {
        return Err(Error::param("k", "k = -1 is degenerate"));
    }
    check(rho, k)?;
    if n == 0 {
        return Ok(C::new(0.0, 0.0));
    }
    let m = n.unsigned_abs() as i32;
    let mu = (1.0 - k) / (1.0 + k);
    let r2 = rho.powi(2 * m);
    Ok(m as f64 * (1.0 - mu * r2) / (1.0 + mu * r2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        for n in [1, 2, -5] {
            let v = analytic_two_layer_dtn(0.5, C::new(1.0, 0.0), n).unwrap();
            assert!((v - C::new(n.abs() as f64, 0.0)).norm() < 1e-15);
        }
        assert_eq!(
            analytic_two_layer_dtn(0.5, C::new(2.0, 0.0), 0).unwrap(),
            C::new(0.0, 0.0)
        );
        let v = analytic_two_layer_dtn(0.5, C::new(2.0, 0.0), 1).unwrap();
        assert!((v.re - 13.0 / 11.0).abs() < 1e-15 && v.im == 0.0);
        assert!(analytic_two_layer_dtn(0.5, C::new(-1.0, 0.0), 1).is_err());
    }

    #[test]
    fn interface_conditions() {
        let (rho, k) = (0.5, C::new(2.0, -1.0));
        for n in 1..6 {
            let m = two_layer_mode(rho, k, n).unwrap();
            let nn = n as f64;
            let inside = m.a * rho.powf(nn);
            let outside = m.b * rho.powf(nn) + m.c * rho.powf(-nn);
            assert!((inside - outside).norm() < 1e-14);
            let flux_in = k * m.a * nn * rho.powf(nn - 1.0);
            let flux_out = nn * (m.b * rho.powf(nn - 1.0) - m.c * rho.powf(-nn - 1.0));
            assert!((flux_in - flux_out).norm() < 1e-13);
            assert!((m.b + m.c - 1.0).norm() < 1e-15);
            let lam = analytic_two_layer_dtn(rho, k, n).unwrap();
            assert!((lam - nn * (m.b - m.c)).norm() < 1e-13);
        }
    }
}
