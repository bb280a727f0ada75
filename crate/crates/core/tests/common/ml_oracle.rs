//! Extended-precision Mittag-Leffler series, used as an independent reference.

use num_complex::Complex64;
use rug::{Complex, Float};

const PREC: u32 = 768;

/// `1/Γ(αn + β)` for `n < terms`, in extended precision.
pub struct SeriesOracle {
    rgamma: Vec<Float>,
}

impl SeriesOracle {
    /// Enough terms for `|z| ≤ radius`: the tail starts below `e^{-400}` of the leading scale.
    pub fn new(alpha: f64, beta: f64, radius: f64) -> Self {
        let mut terms = 10;
        loop {
            let n = terms as f64;
            let x = alpha * n + beta;
            let log_term = n * radius.ln() - lgamma(x);
            if n > 10.0 && log_term < -400.0 {
                break;
            }
            terms += 10;
        }
        let a = Float::with_val(PREC, alpha);
        let b = Float::with_val(PREC, beta);
        let rgamma = (0..terms)
            .map(|n| {
                let x = Float::with_val(PREC, &a * n as u32) + &b;
                Float::with_val(PREC, x.gamma()).recip()
            })
            .collect();
        SeriesOracle { rgamma }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let z = Complex::with_val(PREC, (z.re, z.im));
        let mut zn = Complex::with_val(PREC, (1, 0));
        let mut sum = Complex::with_val(PREC, (0, 0));
        for g in &self.rgamma {
            sum += Complex::with_val(PREC, &zn * g);
            zn *= &z;
        }
        let (re, im) = sum.into_real_imag();
        Complex64::new(re.to_f64(), im.to_f64())
    }

    /// `Σ n zⁿ⁻¹ /Γ(αn + β)`.
    pub fn eval_deriv(&self, z: Complex64) -> Complex64 {
        let z = Complex::with_val(PREC, (z.re, z.im));
        let mut zn = Complex::with_val(PREC, (1, 0));
        let mut sum = Complex::with_val(PREC, (0, 0));
        for (n, g) in self.rgamma.iter().enumerate().skip(1) {
            sum += Complex::with_val(PREC, &zn * g) * n as u32;
            zn *= &z;
        }
        let (re, im) = sum.into_real_imag();
        Complex64::new(re.to_f64(), im.to_f64())
    }
}

fn lgamma(x: f64) -> f64 {
    Float::with_val(64, x).ln_gamma().to_f64()
}

/// The 200-point test grid: radii 0.5, 1.0, …, 5.0 times 20 angles.
pub fn grid() -> Vec<Complex64> {
    let mut pts = Vec::new();
    for i in 1..=10 {
        let r = 0.5 * i as f64;
        for k in 0..20 {
            let th = std::f64::consts::TAU * (k as f64 + 0.25) / 20.0 - std::f64::consts::PI;
            pts.push(Complex64::from_polar(r, th));
        }
    }
    pts
}
