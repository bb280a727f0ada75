mod common;

use common::ml_oracle::{grid, SeriesOracle};
use enclosure::mittag::{asymptotic, contour, ml_deriv, ml_eval, rgamma, taylor, MLParams};
use num_complex::Complex64;

#[test]
fn half_order_at_one_matches_series_and_erfc() {
    let oracle = SeriesOracle::new(0.5, 1.0, 1.0);
    let expected = oracle.eval(Complex64::new(1.0, 0.0));
    // E_{1/2}(1) = e·erfc(−1) = e·(1 + erf 1)
    let closed = std::f64::consts::E * (1.0 + rug::Float::with_val(128, 1.0).erf().to_f64());
    assert!(
        (expected.re - closed).abs() < 1e-14,
        "{} vs {closed}",
        expected.re
    );
    assert!((expected.re - 5.00898).abs() < 1e-5);
    let p = MLParams::new(0.5).unwrap();
    let v = ml_eval(&p, Complex64::new(1.0, 0.0)).unwrap();
    assert!((v.re / expected.re - 1.0).abs() < 1e-12, "{v}");
}

#[test]
fn grid_values_and_derivatives() {
    for alpha in [0.3, 0.5, 0.8, 1.0] {
        let p = MLParams::new(alpha).unwrap();
        let oracle = SeriesOracle::new(alpha, 1.0, 5.0);
        let mut worst: f64 = 0.0;
        let mut worst_d: f64 = 0.0;
        for z in grid() {
            let e = oracle.eval(z);
            let v = ml_eval(&p, z).unwrap();
            worst = worst.max((v - e).norm() / e.norm());
            let ed = oracle.eval_deriv(z);
            let d = ml_deriv(&p, z).unwrap();
            worst_d = worst_d.max((d - ed).norm() / ed.norm());
        }
        println!("alpha {alpha}: worst value error {worst:e}, worst derivative error {worst_d:e}");
        assert!(worst <= 1e-9, "alpha {alpha}: {worst:e}");
        assert!(worst_d <= 1e-9, "alpha {alpha}: {worst_d:e}");
    }
}

/// Growth ray for order `alpha` on which `Re z^{1/α} = 1` at `|z| = 50`, so the algebraic
/// correction is still visible there.
fn growth_ray(alpha: f64) -> f64 {
    let c = 1.0 / 50f64.powf(1.0 / alpha);
    alpha * c.acos()
}

fn growth_deviation(p: &MLParams, r: f64, phi: f64) -> f64 {
    let z = Complex64::from_polar(r, phi);
    let lead = z.powf(1.0 / p.alpha).exp() / p.alpha;
    (ml_eval(p, z).unwrap() / lead - 1.0).norm()
}

fn decay_deviation(p: &MLParams, r: f64) -> f64 {
    let z = Complex64::from_polar(r, std::f64::consts::PI);
    let lead = -z.inv() * rgamma(1.0 - p.alpha);
    (ml_eval(p, z).unwrap() / lead - 1.0).norm()
}

#[test]
fn asymptotic_ratios_decrease_along_rays() {
    for alpha in [0.3, 0.5, 0.8] {
        let p = MLParams::new(alpha).unwrap();
        let phi = growth_ray(alpha);
        let g: Vec<f64> = [50.0, 100.0, 200.0]
            .iter()
            .map(|&r| growth_deviation(&p, r, phi))
            .collect();
        let d: Vec<f64> = [50.0, 100.0, 200.0]
            .iter()
            .map(|&r| decay_deviation(&p, r))
            .collect();
        println!("alpha {alpha}: growth {g:?}, decay {d:?}");
        for dev in [&g, &d] {
            for w in dev.windows(2) {
                // Below the evaluation accuracy the deviation is rounding noise.
                assert!(w[1] < w[0] || w[1] <= 1e-9, "alpha {alpha}: {dev:?}");
            }
        }
    }
}

#[test]
fn regimes_agree_at_hand_off_radii() {
    for alpha in [0.3, 0.5, 0.8] {
        let p = MLParams::new(alpha).unwrap();
        for k in 0..24 {
            let phi = std::f64::consts::TAU * (k as f64 + 0.5) / 24.0 - std::f64::consts::PI;
            let z = Complex64::from_polar(p.r_small, phi);
            let a = taylor(&p, alpha, 1.0, z).unwrap();
            let b = contour(&p, alpha, 1.0, z).unwrap();
            assert!(
                (a - b).norm() <= 10.0 * p.accuracy * a.norm(),
                "alpha {alpha}, z {z}: {a} vs {b}"
            );

            // Values beyond the double range are skipped.
            let z = Complex64::from_polar(p.r_large, phi);
            if let Some((a, _)) = asymptotic(&p, alpha, 1.0, z).filter(|(a, _)| a.is_finite()) {
                let b = contour(&p, alpha, 1.0, z).unwrap();
                assert!(
                    (a - b).norm() <= 10.0 * p.accuracy * a.norm(),
                    "alpha {alpha}, z {z}: {a} vs {b}"
                );
            }
        }
    }
}

#[test]
fn decay_sector_correction_shrinks() {
    for alpha in [0.3, 0.5, 0.8] {
        let p = MLParams::new(alpha).unwrap();
        for phi in [
            0.55 * std::f64::consts::PI * alpha + 0.5,
            std::f64::consts::PI,
        ] {
            let dev: Vec<f64> = [50.0, 100.0, 200.0]
                .iter()
                .map(|&r| {
                    let z = Complex64::from_polar(r, phi);
                    (z * ml_eval(&p, z).unwrap() + rgamma(1.0 - alpha)).norm()
                })
                .collect();
            assert!(
                dev[1] < dev[0] && dev[2] < dev[1],
                "alpha {alpha}, arg {phi}: {dev:?}"
            );
        }
    }
}

#[test]
fn derivative_matches_finite_difference() {
    let p = MLParams::new(0.5).unwrap();
    let z = Complex64::new(2.0, 1.0);
    let step = 1e-5;
    let fd = (ml_eval(&p, z + step).unwrap() - ml_eval(&p, z - step).unwrap()) / (2.0 * step);
    let d = ml_deriv(&p, z).unwrap();
    assert!((d - fd).norm() <= 1e-6 * d.norm(), "{d} vs {fd}");
    let d0 = ml_deriv(&p, Complex64::new(0.0, 0.0)).unwrap();
    assert!((d0.re - 2.0 / std::f64::consts::PI.sqrt()).abs() < 1e-12);
}

#[test]
fn overflow_is_reported() {
    let p = MLParams::new(0.3).unwrap();
    let z = Complex64::from_polar(30.0, -0.4);
    assert!(matches!(
        ml_eval(&p, z),
        Err(enclosure::Error::Overflow { .. })
    ));
    let p = MLParams::new(1.0).unwrap();
    assert!(matches!(
        ml_eval(&p, Complex64::new(800.0, 1.0)),
        Err(enclosure::Error::Overflow { .. })
    ));
}
