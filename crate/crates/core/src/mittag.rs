//! The Mittag-Leffler function `E_α(z) = Σ zⁿ/Γ(αn + 1)` for complex `z` and `0 < α ≤ 1`.
//!
//! Three regimes are stitched together:
//!
//! * small `|z|`: the Taylor series;
//! * intermediate `|z|`: numerical inversion of the Laplace transform `s^{α−β}/(s^α − z)` on an
//!   optimally placed parabolic contour, plus the residues of the poles left outside it;
//! * large `|z|`: the sector asymptotics `(1/α)exp(z^{1/α}) − Σ z^{−k}/Γ(1 − αk)`.
//!
//! The derivative uses `E'_α(z) = E_{α,α}(z)/α` with the same machinery.

use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

type C = Complex64;

const LOG_DBL_EPS: f64 = -36.043_653_389_117_154;

/// Width of the band around `|arg z| = πα/2` classified as the sector boundary.
pub const SECTOR_BAND: f64 = 1e-9;

/// Maximum number of algebraic terms in the asymptotic expansion.
pub const MAX_ALGEBRAIC_TERMS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLParams {
    pub alpha: f64,
    /// Target relative accuracy.
    pub accuracy: f64,
    /// Maximum number of Taylor terms.
    pub max_terms: usize,
    /// Taylor series is used for `|z| ≤ r_small`.
    pub r_small: f64,
    /// Sector asymptotics are used for `|z| ≥ r_large`.
    pub r_large: f64,
}

impl MLParams {
    pub fn new(alpha: f64) -> Result<Self> {
        let p = MLParams {
            alpha,
            accuracy: 1e-10,
            max_terms: 1000,
            r_small: 1.0,
            r_large: 30.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::param(
                "alpha",
                format!("{} is outside (0, 1]", self.alpha),
            ));
        }
        if !(self.accuracy > 1e-15 && self.accuracy < 1e-2) {
            return Err(Error::param(
                "accuracy",
                format!("{} is outside (1e-15, 1e-2)", self.accuracy),
            ));
        }
        if !(self.r_small > 0.0 && self.r_small < self.r_large && self.r_large.is_finite()) {
            return Err(Error::param(
                "r_small/r_large",
                format!(
                    "need 0 < r_small ({}) < r_large ({})",
                    self.r_small, self.r_large
                ),
            ));
        }
        if self.max_terms == 0 {
            return Err(Error::param("max_terms", "must be positive"));
        }
        Ok(())
    }
}

/// Which method produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Exact,
    Taylor,
    Contour,
    AsymptoticGrowth,
    AsymptoticDecay,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Exact => "exact",
            Regime::Taylor => "taylor",
            Regime::Contour => "contour",
            Regime::AsymptoticGrowth => "asymptotic_growth",
            Regime::AsymptoticDecay => "asymptotic_decay",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    ExponentialGrowth,
    AlgebraicDecay,
    Boundary,
}

/// Classifies `z` by `|arg z|` against `πα/2`.
pub fn growth_sector(alpha: f64, z: C) -> Result<Sector> {
    if z == C::new(0.0, 0.0) {
        return Err(Error::param("z", "the sector of 0 is undefined"));
    }
    let d = z.arg().abs() - PI * alpha / 2.0;
    Ok(if d.abs() <= SECTOR_BAND {
        Sector::Boundary
    } else if d < 0.0 {
        Sector::ExponentialGrowth
    } else {
        Sector::AlgebraicDecay
    })
}

/// `1/Γ(x)`, exactly zero at the poles of `Γ`.
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.round() {
        return 0.0;
    }
    if x == x.round() && x <= 30.0 {
        return 1.0 / (1..x as u64).map(|k| k as f64).product::<f64>();
    }
    if x < 0.5 {
        // Reflection keeps the value finite near the poles.
        (PI * x).sin() * gamma(1.0 - x) / PI
    } else {
        1.0 / gamma(x)
    }
}

/// `E_α(z)`.
pub fn ml_eval(params: &MLParams, z: C) -> Result<C> {
    ml_eval_with_regime(params, z).map(|(v, _)| v)
}

/// `E'_α(z)`.
pub fn ml_deriv(params: &MLParams, z: C) -> Result<C> {
    ml_deriv_with_regime(params, z).map(|(v, _)| v)
}

pub fn ml_eval_with_regime(params: &MLParams, z: C) -> Result<(C, Regime)> {
    params.validate()?;
    if params.alpha == 1.0 {
        check_finite(z)?;
        let v = z.exp();
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::Overflow { z });
        }
        return Ok((v, Regime::Exact));
    }
    eval_two_param(params, params.alpha, 1.0, z)
}

pub fn ml_deriv_with_regime(params: &MLParams, z: C) -> Result<(C, Regime)> {
    params.validate()?;
    if params.alpha == 1.0 {
        check_finite(z)?;
        let v = z.exp();
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::Overflow { z });
        }
        return Ok((v, Regime::Exact));
    }
    let (v, r) = eval_two_param(params, params.alpha, params.alpha, z)?;
    Ok((v / params.alpha, r))
}

fn check_finite(z: C) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::param("z", format!("{z} is not finite")))
    }
}

/// `E_{α,β}(z)` by regime, using `E(z̄) = conj E(z)`.
fn eval_two_param(params: &MLParams, alpha: f64, beta: f64, z: C) -> Result<(C, Regime)> {
    check_finite(z)?;
    if z.im < 0.0 {
        let (v, r) = eval_two_param(params, alpha, beta, z.conj())?;
        return Ok((v.conj(), r));
    }
    let r = z.norm();
    let (v, regime) = if r <= params.r_small {
        (taylor(params, alpha, beta, z)?, Regime::Taylor)
    } else if r >= params.r_large {
        match asymptotic(params, alpha, beta, z) {
            Some(res) => res,
            None => (contour(params, alpha, beta, z)?, Regime::Contour),
        }
    } else {
        (contour(params, alpha, beta, z)?, Regime::Contour)
    };
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::Overflow { z });
    }
    Ok((if z.im == 0.0 { C::new(v.re, 0.0) } else { v }, regime))
}

/// Truncated series `Σ zⁿ/Γ(αn + β)`.
pub fn taylor(params: &MLParams, alpha: f64, beta: f64, z: C) -> Result<C> {
    let mut sum = C::new(0.0, 0.0);
    let mut zn = C::new(1.0, 0.0);
    let mut small = 0;
    for n in 0..params.max_terms {
        let term = zn * rgamma(alpha * n as f64 + beta);
        sum += term;
        // Consecutive terms can vanish at poles of Γ, so require two small terms in a row.
        if term.norm() <= 0.01 * params.accuracy * sum.norm() {
            small += 1;
            if small == 2 {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
        zn *= z;
    }
    let last = zn.norm() * rgamma(alpha * params.max_terms as f64 + beta).abs();
    Err(Error::Accuracy {
        best: sum,
        achieved: last / sum.norm(),
    })
}

/// Sector asymptotics; `None` where they are not trusted.
pub fn asymptotic(params: &MLParams, alpha: f64, beta: f64, z: C) -> Option<(C, Regime)> {
    if alpha >= 0.9 {
        return None;
    }
    let arg = z.arg().abs();
    if (arg - PI * alpha / 2.0).abs() < 0.05 {
        return None;
    }
    // The exponential term is kept wherever it is not negligible, i.e. |arg z| < απ.
    let mut sum = C::new(0.0, 0.0);
    let growth = arg < PI * alpha;
    if growth {
        let w = z.powf(1.0 / alpha);
        sum += z.powf((1.0 - beta) / alpha) * w.exp() / alpha;
    }
    let zinv = z.inv();
    let mut zk = C::new(1.0, 0.0);
    let mut last = 0.0;
    for k in 1..=MAX_ALGEBRAIC_TERMS {
        zk *= zinv;
        let term = zk * rgamma(beta - alpha * k as f64);
        sum -= term;
        last = term.norm();
    }
    if !(last <= params.accuracy * sum.norm()) && sum.is_finite() {
        return None;
    }
    let regime = if arg < PI * alpha / 2.0 {
        Regime::AsymptoticGrowth
    } else {
        Regime::AsymptoticDecay
    };
    Some((sum, regime))
}

/// Inverse Laplace transform of `s^{α−β}/(s^α − z)` at `t = 1` on a parabolic contour.
pub fn contour(params: &MLParams, alpha: f64, beta: f64, z: C) -> Result<C> {
    let t = 1.0;
    let mut log_eps = (1e-15f64).ln();
    let target = params.accuracy.ln();

    // Poles s* = |z|^{1/α} e^{i(θ + 2kπ)/α} on the principal sheet.
    let theta = z.arg();
    let kmin = (-alpha / 2.0 - theta / (2.0 * PI)).ceil() as i64;
    let kmax = (alpha / 2.0 - theta / (2.0 * PI)).floor() as i64;
    let rad = z.norm().powf(1.0 / alpha);
    let mut poles: Vec<(f64, C)> = (kmin..=kmax)
        .map(|k| {
            let s = C::from_polar(rad, (theta + 2.0 * k as f64 * PI) / alpha);
            ((s.re + s.norm()) / 2.0, s)
        })
        .filter(|(phi, _)| *phi > 1e-15)
        .collect();
    poles.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut s_star = vec![C::new(0.0, 0.0)];
    let mut phi = vec![0.0];
    for (p, s) in &poles {
        s_star.push(*s);
        phi.push(*p);
    }
    let j1 = s_star.len();
    let mut p = vec![1.0; j1];
    p[0] = (-2.0 * (alpha - beta + 1.0)).max(0.0);
    let mut q = vec![1.0; j1];
    q[j1 - 1] = f64::INFINITY;
    phi.push(f64::INFINITY);

    let (mu, h, n, region) = loop {
        let mut best: Option<(f64, f64, f64, usize)> = None;
        for j in 0..j1 {
            if !(phi[j] < (log_eps - LOG_DBL_EPS) / t && phi[j] < phi[j + 1]) {
                continue;
            }
            let (mu, h, n) = if j < j1 - 1 {
                optimal_param_rb(t, phi[j], phi[j + 1], p[j], q[j], log_eps)
            } else {
                optimal_param_ru(t, phi[j], p[j], log_eps)
            };
            if best.map_or(true, |b| n < b.2) {
                best = Some((mu, h, n, j));
            }
        }
        match best {
            Some(b) if b.2 <= 200.0 => break b,
            _ => {
                log_eps += 10f64.ln();
                if log_eps > target {
                    return Err(Error::Accuracy {
                        best: C::new(f64::NAN, f64::NAN),
                        achieved: log_eps.exp(),
                    });
                }
            }
        }
    };

    let n = n as i64;
    let mut sum = C::new(0.0, 0.0);
    for k in -n..=n {
        let u = h * k as f64;
        let s = mu * C::new(1.0, u).powi(2);
        let ds = C::new(-2.0 * mu * u, 2.0 * mu);
        let f = s.powf(alpha - beta) / (s.powf(alpha) - z) * ds;
        sum += (s * t).exp() * f;
    }
    let integral = sum * h / C::new(0.0, 2.0 * PI);

    let residues: C = s_star[region + 1..]
        .iter()
        .map(|s| s.powf(1.0 - beta) * (s * t).exp() / alpha)
        .sum();
    Ok(integral + residues)
}

fn optimal_param_rb(
    t: f64,
    phi_j: f64,
    phi_j1: f64,
    pj: f64,
    qj: f64,
    log_eps_in: f64,
) -> (f64, f64, f64) {
    let fac = 1.01;
    let f_max = (log_eps_in - LOG_DBL_EPS).exp();
    let sq_phi_j = phi_j.sqrt();
    let threshold = 2.0 * ((log_eps_in - LOG_DBL_EPS) / t).sqrt();
    let sq_phi_j1 = phi_j1.sqrt().min(threshold - sq_phi_j);

    let none = (0.0, 0.0, f64::INFINITY);
    let (sq_bar_j, sq_bar_j1, f_bar) = if pj < 1e-14 && qj < 1e-14 {
        (sq_phi_j, sq_phi_j1, 1.0)
    } else if pj < 1e-14 {
        let f_min = if sq_phi_j > 0.0 {
            fac * (sq_phi_j / (sq_phi_j1 - sq_phi_j)).powf(qj)
        } else {
            fac
        };
        if f_min >= f_max {
            return none;
        }
        let f_bar = f_min + f_min / f_max * (f_max - f_min);
        let fq = f_bar.powf(-1.0 / qj);
        (
            sq_phi_j,
            (2.0 * sq_phi_j1 - fq * sq_phi_j) / (2.0 + fq),
            f_bar,
        )
    } else if qj < 1e-14 {
        let f_min = fac * (sq_phi_j1 / (sq_phi_j1 - sq_phi_j)).powf(pj);
        if f_min >= f_max {
            return none;
        }
        let f_bar = f_min + f_min / f_max * (f_max - f_min);
        let fp = f_bar.powf(-1.0 / pj);
        (
            (2.0 * sq_phi_j + fp * sq_phi_j1) / (2.0 - fp),
            sq_phi_j1,
            f_bar,
        )
    } else {
        let f_min = fac * (sq_phi_j + sq_phi_j1) / (sq_phi_j1 - sq_phi_j).powf(pj.max(qj));
        if f_min >= f_max {
            return none;
        }
        let f_min = f_min.max(1.5);
        let f_bar = f_min + f_min / f_max * (f_max - f_min);
        let fp = f_bar.powf(-1.0 / pj);
        let fq = f_bar.powf(-1.0 / qj);
        let w = -phi_j1 * t / log_eps_in;
        let den = 2.0 + w - (1.0 + w) * fp + fq;
        (
            ((2.0 + w + fq) * sq_phi_j + fp * sq_phi_j1) / den,
            (-(1.0 + w) * fq * sq_phi_j + (2.0 + w - (1.0 + w) * fp) * sq_phi_j1) / den,
            f_bar,
        )
    };
    let log_eps = log_eps_in - f_bar.ln();
    let w = -sq_bar_j1 * sq_bar_j1 * t / log_eps;
    let mu = (((1.0 + w) * sq_bar_j + sq_bar_j1) / (2.0 + w)).powi(2);
    let h = -2.0 * PI / log_eps * (sq_bar_j1 - sq_bar_j) / ((1.0 + w) * sq_bar_j + sq_bar_j1);
    let n = ((1.0 - log_eps / t / mu).sqrt() / h).ceil();
    if !(h > 0.0) || !n.is_finite() {
        return none;
    }
    (mu, h, n)
}

fn optimal_param_ru(t: f64, phi_j: f64, pj: f64, log_eps: f64) -> (f64, f64, f64) {
    let sq_phi_j = phi_j.sqrt();
    let mut phibar = if phi_j > 0.0 { phi_j * 1.01 } else { 0.01 };
    let mut sq_phibar = phibar.sqrt();
    let (f_min, f_max, f_tar) = (1.0, 10.0, 5.0f64);
    let (mut n, mut a, mut sq_mu);
    let mut iterations = 0;
    loop {
        let phi_t = phibar * t;
        let log_eps_phi_t = log_eps / phi_t;
        n = (phi_t / PI * (1.0 - 3.0 * log_eps_phi_t / 2.0 + (1.0 - 2.0 * log_eps_phi_t).sqrt()))
            .ceil();
        a = PI * n / phi_t;
        sq_mu = sq_phibar * (4.0 - a).abs() / (7.0 - (1.0 + 12.0 * a).sqrt()).abs();
        let fbar = ((sq_phibar - sq_phi_j) / sq_mu).powf(-pj);
        iterations += 1;
        if pj < 1e-14 || (f_min < fbar && fbar < f_max) || iterations > 100 {
            break;
        }
        sq_phibar = f_tar.powf(-1.0 / pj) * sq_mu + sq_phi_j;
        phibar = sq_phibar * sq_phibar;
    }
    let mut mu = sq_mu * sq_mu;
    let mut h = (-3.0 * a - 2.0 + 2.0 * (1.0 + 12.0 * a).sqrt()) / (4.0 - a) / n;

    let threshold = (log_eps - LOG_DBL_EPS) / t;
    if mu > threshold {
        let q = if pj.abs() < 1e-14 {
            0.0
        } else {
            f_tar.powf(-1.0 / pj) * mu.sqrt()
        };
        let phibar = (q + phi_j.sqrt()).powi(2);
        if phibar < threshold {
            let w = (LOG_DBL_EPS / (LOG_DBL_EPS - log_eps)).sqrt();
            let u = (-phibar * t / LOG_DBL_EPS).sqrt();
            mu = threshold;
            n = (w * log_eps / 2.0 / PI / (u * w - 1.0)).ceil();
            h = (LOG_DBL_EPS / (LOG_DBL_EPS - log_eps)).sqrt() / n;
        } else {
            n = f64::INFINITY;
            h = 0.0;
        }
    }
    (mu, h, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(alpha: f64) -> MLParams {
        MLParams::new(alpha).unwrap()
    }

    #[test]
    fn alpha_one_is_exp() {
        let v = ml_eval(&p(1.0), C::new(1.0, 0.0)).unwrap();
        assert!((v.re - std::f64::consts::E).abs() < 1e-15);
        assert_eq!(
            ml_deriv(&p(1.0), C::new(0.0, 0.0)).unwrap(),
            C::new(1.0, 0.0)
        );
    }

    #[test]
    fn value_at_zero() {
        for a in [0.3, 0.5, 0.8] {
            assert_eq!(ml_eval(&p(a), C::new(0.0, 0.0)).unwrap(), C::new(1.0, 0.0));
        }
        let d = ml_deriv(&p(0.5), C::new(0.0, 0.0)).unwrap();
        assert!((d.re - 2.0 / PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_alpha() {
        assert!(MLParams::new(0.0).is_err());
        assert!(MLParams::new(1.2).is_err());
        let mut q = p(0.5);
        q.accuracy = 0.5;
        assert!(ml_eval(&q, C::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn sectors() {
        assert_eq!(
            growth_sector(0.5, C::new(2.0, 0.0)).unwrap(),
            Sector::ExponentialGrowth
        );
        assert_eq!(
            growth_sector(0.5, C::new(-2.0, 0.0)).unwrap(),
            Sector::AlgebraicDecay
        );
        assert_eq!(
            growth_sector(1.0, C::new(0.0, 1.0)).unwrap(),
            Sector::Boundary
        );
        assert!(growth_sector(0.5, C::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn rgamma_poles() {
        assert_eq!(rgamma(0.0), 0.0);
        assert_eq!(rgamma(-3.0), 0.0);
        assert!((rgamma(0.5) - 1.0 / PI.sqrt()).abs() < 1e-15);
        assert!((rgamma(-0.5) + 0.5 / PI.sqrt()).abs() < 1e-15);
    }
}
