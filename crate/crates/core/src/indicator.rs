//! Indicator functionals, support-function fits, transition search and region estimates.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{BoundaryBasis, DtNMatrix, DtnKind};
use crate::geom::{Direction, Vec2};
use crate::mesh::{Mesh, ShapeSpec};
use crate::probes::{
    cone_avoids_shape, cone_contains, ConeSpec, ProbeKind, ProbeSpec, OVERFLOW_GUARD,
};

type C = Complex64;

/// Samples with `|I|` below this are censored.
pub const UNDERFLOW_FLOOR: f64 = 1e-280;
/// Largest admissible RMS residual of the log-slope fit.
pub const FIT_RESIDUAL: f64 = 0.05;
pub const MIN_FIT_POINTS: usize = 5;
/// Log-steps smaller than this count as ties in the decay/growth classifier.
pub const DEAD_BAND: f64 = 1e-2;
pub const LADDER_POINTS: usize = 12;
/// Default `τ_max = TAU_H_CAP / h`.
pub const TAU_H_CAP: f64 = 0.3;
pub const RASTER: usize = 512;
/// Relative rounding accuracy of gap entries.
pub const ENTRY_EPS: f64 = 1e-13;

/// Relative accuracy assumed for gap entries on a mesh of size `h`: rounding plus the P1
/// interpolation scale `h²/8`.
pub fn entry_accuracy(h: f64) -> f64 {
    ENTRY_EPS + h * h / 8.0
}
/// A sample is kept only if `|I|` exceeds this multiple of its error bound.
pub const NOISE_FACTOR: f64 = 10.0;
/// Largest relative residual of a Fourier expansion of a probe trace.
pub const TRUNCATION_LIMIT: f64 = 1e-6;
/// Largest `|log(f_{j±1}/f_j)|` between neighbouring boundary nodes for a nodal trace to count
/// as resolved.
pub const RESOLUTION_LIMIT: f64 = 1.0;
/// Nodes below this fraction of the peak trace modulus are ignored by the resolution test.
pub const RESOLUTION_FLOOR: f64 = 1e-3;

/// One indicator evaluation with its numerical diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorValue {
    pub value: f64,
    /// Error bound `entry_accuracy(h)·Σ|c_j||B_jk||c'_k|`; infinite for an unresolved nodal trace.
    pub noise: f64,
    /// Relative residual of the trace expansion (zero for the nodal basis).
    pub truncation: f64,
}

impl IndicatorValue {
    /// True if the sample is above the underflow floor and clear of its error bound.
    pub fn usable(&self) -> bool {
        let a = self.value.abs();
        a.is_finite() && a > UNDERFLOW_FLOOR && a > NOISE_FACTOR * self.noise
    }
}

/// Geometric ladder of `n` points from `tau_min` to `tau_max`.
pub fn tau_ladder(tau_min: f64, tau_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(tau_min > 0.0 && tau_max > tau_min && tau_max.is_finite()) || n < 2 {
        return Err(Error::param(
            "tau",
            format!(
                "ladder needs 0 < tau_min < tau_max and n >= 2 (got {tau_min}, {tau_max}, {n})"
            ),
        ));
    }
    let r = (tau_max / tau_min).ln() / (n - 1) as f64;
    Ok((0..n).map(|k| tau_min * (r * k as f64).exp()).collect())
}

/// Mesh-limited `τ_max`.
pub fn tau_max_for(h: f64) -> f64 {
    TAU_H_CAP / h
}

fn require_gap(gap: &DtNMatrix) -> Result<()> {
    if gap.kind != DtnKind::Gap {
        return Err(Error::param(
            "dtn_gap",
            format!("expected a gap matrix, got {}", gap.kind.as_str()),
        ));
    }
    Ok(())
}

/// Coefficients of the probe trace in the matrix basis and the relative truncation residual.
pub fn trace_coefficients(gap: &DtNMatrix, probe: &ProbeSpec) -> Result<(Vec<C>, f64)> {
    let f = probe.trace(&gap.nodes)?;
    match gap.basis {
        BoundaryBasis::Nodal => Ok((f, 0.0)),
        BoundaryBasis::Fourier { n_max } => {
            let nb = gap.nodes.len() as f64;
            let angles: Vec<f64> = gap.nodes.iter().map(|p| p.y.atan2(p.x)).collect();
            let n_max = n_max as i64;
            let c: Vec<C> = (-n_max..=n_max)
                .map(|n| {
                    f.iter()
                        .zip(&angles)
                        .map(|(v, a)| v * C::from_polar(1.0, -(n as f64) * a))
                        .sum::<C>()
                        / nb
                })
                .collect();
            let mut res = 0.0;
            let mut norm = 0.0;
            for (v, a) in f.iter().zip(&angles) {
                let approx: C = c
                    .iter()
                    .zip(-n_max..=n_max)
                    .map(|(cn, n)| cn * C::from_polar(1.0, n as f64 * a))
                    .sum();
                res += (v - approx).norm_sqr();
                norm += v.norm_sqr();
            }
            let rel = if norm > 0.0 { (res / norm).sqrt() } else { 0.0 };
            Ok((c, rel))
        }
    }
}

/// Largest complex-log step `|log(f_{j±1}/f_j)|` of a closed nodal trace over the nodes carrying
/// at least [`RESOLUTION_FLOOR`] of its peak modulus.
pub fn trace_step(f: &[C]) -> f64 {
    let n = f.len();
    let peak = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if n < 2 || peak == 0.0 {
        return 0.0;
    }
    (0..n)
        .filter(|&j| f[j].norm() >= RESOLUTION_FLOOR * peak)
        .map(|j| {
            let next = (f[(j + 1) % n] / f[j]).ln().norm();
            let prev = (f[(j + n - 1) % n] / f[j]).ln().norm();
            next.max(prev)
        })
        .fold(0.0, f64::max)
}

/// `Re <(Λ_{σ,ε} − Λ_{1,0}) f, f̄>` for the probe trace `f`, with diagnostics.
pub fn indicator(gap: &DtNMatrix, probe: &ProbeSpec) -> Result<IndicatorValue> {
    require_gap(gap)?;
    if probe.tau > tau_max_for(gap.mesh_h) * (1.0 + 1e-12) {
        log::warn!(
            "tau = {} exceeds the mesh-limited cap {:.3}; values may be unresolved",
            probe.tau,
            tau_max_for(gap.mesh_h)
        );
    }
    if let ProbeKind::MittagLeffler { .. } = probe.kind {
        probe.check_cone_condition(gap.radius)?;
    }
    let (c, truncation) = trace_coefficients(gap, probe)?;
    if truncation > TRUNCATION_LIMIT {
        return Err(Error::Truncation {
            error: truncation,
            threshold: TRUNCATION_LIMIT,
        });
    }
    let cc = gap.basis.conjugate_coefficients(&c);
    let value = gap.bilinear(&c, &cc).re;
    let mut noise = 0.0;
    for (j, cj) in c.iter().enumerate() {
        let row = &gap.data[j * gap.dim..(j + 1) * gap.dim];
        noise += cj.norm()
            * row
                .iter()
                .zip(&cc)
                .map(|(b, d)| b.norm() * d.norm())
                .sum::<f64>();
    }
    // A trace that changes by more than a factor e between nodes is not represented by the
    // nodal basis, and the quadratic form loses its cancellation.
    let resolved = gap.basis != BoundaryBasis::Nodal || trace_step(&c) <= RESOLUTION_LIMIT;
    Ok(IndicatorValue {
        value,
        noise: if resolved {
            entry_accuracy(gap.mesh_h) * noise
        } else {
            f64::INFINITY
        },
        truncation,
    })
}

/// CGO indicator `I_{ϑ,ϑ⊥}(τ, t)`.
pub fn indicator_cgo(
    gap: &DtNMatrix,
    theta: Direction,
    theta_perp: Direction,
    t: f64,
    tau: f64,
) -> Result<f64> {
    Ok(indicator(gap, &ProbeSpec::cgo(theta, theta_perp, t, tau)?)?.value)
}

/// Mittag-Leffler indicator `I^α_{(y,ϑ)}(τ, t)`; `ϑ⊥` is taken as `ϑ` rotated by +90°.
pub fn indicator_ml(
    gap: &DtNMatrix,
    alpha: f64,
    y: Vec2,
    theta: Direction,
    t: f64,
    tau: f64,
) -> Result<f64> {
    Ok(indicator(
        gap,
        &ProbeSpec::mittag_leffler(y, alpha, theta, theta.perp(), t, tau)?,
    )?
    .value)
}

/// Degree-5 seven-point rule on the reference triangle (barycentric points, weights summing to 1).
fn quadrature7() -> [([f64; 3], f64); 7] {
    let s = 15f64.sqrt();
    let (a1, b1, w1) = (
        (6.0 - s) / 21.0,
        (9.0 + 2.0 * s) / 21.0,
        (155.0 - s) / 1200.0,
    );
    let (a2, b2, w2) = (
        (6.0 + s) / 21.0,
        (9.0 - 2.0 * s) / 21.0,
        (155.0 + s) / 1200.0,
    );
    [
        ([1.0 / 3.0; 3], 9.0 / 40.0),
        ([a1, a1, b1], w1),
        ([a1, b1, a1], w1),
        ([b1, a1, a1], w1),
        ([a2, a2, b2], w2),
        ([a2, b2, a2], w2),
        ([b2, a2, a2], w2),
    ]
}

/// `J(τ, t) = ∫_D |∇e_τ|² dx` over the inclusion elements of `mesh`.
pub fn j_oracle(mesh: &Mesh, probe: &ProbeSpec) -> Result<f64> {
    if probe.tau == 0.0 {
        return Ok(0.0);
    }
    let rule = quadrature7();
    let tris: Vec<usize> = mesh.inclusion_triangles().collect();
    let parts: Vec<f64> = tris
        .par_iter()
        .map(|&t| {
            let [i, j, k] = mesh.triangles[t];
            let (p, q, r) = (mesh.vertices[i], mesh.vertices[j], mesh.vertices[k]);
            let pts: Vec<Vec2> = rule
                .iter()
                .map(|(l, _)| p * l[0] + q * l[1] + r * l[2])
                .collect();
            let g = probe.gradient(&pts)?;
            let s: f64 = g
                .iter()
                .zip(&rule)
                .map(|(g, (_, w))| w * (g[0].norm_sqr() + g[1].norm_sqr()))
                .sum();
            Ok(s * mesh.signed_area(t))
        })
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum())
}

/// Indicator values of one probe family along a `τ` ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSeries {
    /// The probe; its `tau` field is irrelevant.
    pub probe: ProbeSpec,
    pub taus: Vec<f64>,
    pub values: Vec<f64>,
    pub noise: Vec<f64>,
    pub oracle: Option<Vec<f64>>,
}

impl IndicatorSeries {
    pub fn new(probe: ProbeSpec, taus: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let noise = vec![0.0; values.len()];
        let s = IndicatorSeries {
            probe,
            taus,
            values,
            noise,
            oracle: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.taus.len() != self.values.len() || self.noise.len() != self.values.len() {
            return Err(Error::param("series", "tau and value lengths differ"));
        }
        if self.taus.windows(2).any(|w| !(w[1] > w[0])) || self.taus.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::param(
                "series",
                "tau grid must be positive and strictly increasing",
            ));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("series", "values must be finite"));
        }
        Ok(())
    }

    fn usable(&self, k: usize) -> bool {
        let a = self.values[k].abs();
        a > UNDERFLOW_FLOOR && a > NOISE_FACTOR * self.noise[k]
    }

    /// `(τ, log|I|)` for the samples that are neither underflowed nor noise-dominated.
    pub fn log_samples(&self) -> Vec<(f64, f64)> {
        (0..self.taus.len())
            .filter(|&k| self.usable(k))
            .map(|k| (self.taus[k], self.values[k].abs().ln()))
            .collect()
    }

    /// Attaches `J(τ, t)` computed on the ground-truth mesh.
    pub fn with_oracle(mut self, mesh: &Mesh) -> Result<Self> {
        let j = self
            .taus
            .iter()
            .map(|&tau| j_oracle(mesh, &self.probe.with_tau(tau)))
            .collect::<Result<_>>()?;
        self.oracle = Some(j);
        Ok(self)
    }
}

/// Evaluates the indicator of `probe` at every `τ` in `taus`.
pub fn indicator_series(
    gap: &DtNMatrix,
    probe: &ProbeSpec,
    taus: &[f64],
) -> Result<IndicatorSeries> {
    let vals: Vec<IndicatorValue> = taus
        .par_iter()
        .map(|&tau| indicator(gap, &probe.with_tau(tau)))
        .collect::<Result<_>>()?;
    let s = IndicatorSeries {
        probe: *probe,
        taus: taus.to_vec(),
        values: vals.iter().map(|v| v.value).collect(),
        noise: vals.iter().map(|v| v.noise).collect(),
        oracle: None,
    };
    s.validate()?;
    Ok(s)
}

/// Largest `τ` for which the squared probe trace stays below the overflow guard on the boundary
/// nodes, so the quadratic form remains finite.
pub fn overflow_tau(nodes: &[Vec2], probe: &ProbeSpec) -> f64 {
    let unit = probe.with_tau(1.0);
    let growth = nodes
        .iter()
        .map(|x| {
            let y = match probe.kind {
                ProbeKind::Cgo => Vec2::zeros(),
                ProbeKind::MittagLeffler { y, .. } => y,
            };
            let d = x - y;
            let w = C::new(unit.theta.dot(&d) - unit.t, unit.theta_perp.dot(&d));
            match probe.kind {
                ProbeKind::Cgo => w.re,
                ProbeKind::MittagLeffler { alpha, .. } => {
                    if w.norm() == 0.0 || w.arg().abs() >= alpha * std::f64::consts::PI {
                        0.0
                    } else {
                        w.powf(1.0 / alpha).re
                    }
                }
            }
        })
        .fold(0.0, f64::max);
    if growth <= 0.0 {
        return f64::INFINITY;
    }
    let p = match probe.kind {
        ProbeKind::Cgo => 1.0,
        ProbeKind::MittagLeffler { alpha, .. } => 1.0 / alpha,
    };
    (0.45 * OVERFLOW_GUARD / growth).powf(1.0 / p)
}

/// Least-squares support estimate for one direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportFit {
    pub theta: Direction,
    pub t: f64,
    pub h_hat: f64,
    /// Slope of `log|I|` against `2τ`.
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual of the fit.
    pub residual: f64,
    /// `τ` range of the fitting window.
    pub window: (f64, f64),
    pub points: usize,
    pub low_confidence: bool,
}

fn line_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    (slope, intercept, (rss / n).sqrt())
}

/// Fits `log|I(τ,t)| ≈ intercept + slope·2τ` over the largest trailing window whose RMS residual
/// is at most [`FIT_RESIDUAL`]; returns `ĥ = t + slope`.
pub fn support_slope_fit(series: &IndicatorSeries) -> Result<SupportFit> {
    series.validate()?;
    let samples: Vec<(f64, f64)> = series
        .log_samples()
        .into_iter()
        .map(|(tau, l)| (2.0 * tau, l))
        .collect();
    if samples.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "{} usable samples above the floor, need {MIN_FIT_POINTS}",
            samples.len()
        )));
    }
    let mut chosen = None;
    for start in 0..=samples.len() - MIN_FIT_POINTS {
        let fit = line_fit(&samples[start..]);
        if fit.2 <= FIT_RESIDUAL {
            chosen = Some((start, fit, false));
            break;
        }
    }
    let (start, (slope, intercept, residual), low) = chosen.unwrap_or_else(|| {
        let start = samples.len() - MIN_FIT_POINTS;
        (start, line_fit(&samples[start..]), true)
    });
    if low {
        log::warn!("slope fit residual {residual:.3} exceeds {FIT_RESIDUAL}; low confidence");
    }
    let window = &samples[start..];
    Ok(SupportFit {
        theta: series.probe.theta,
        t: series.probe.t,
        h_hat: series.probe.t + slope,
        slope,
        intercept,
        residual,
        window: (window[0].0 / 2.0, window[window.len() - 1].0 / 2.0),
        points: window.len(),
        low_confidence: low,
    })
}

/// Per-direction fits.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportEstimate {
    pub fits: Vec<SupportFit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Decay,
    Growth,
}

impl Trend {
    pub fn as_str(&self) -> &'static str {
        match self {
            Trend::Decay => "decay",
            Trend::Growth => "growth",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub trend: Trend,
    pub low_confidence: bool,
    /// Number of increasing and decreasing steps outside the dead band.
    pub up: usize,
    pub down: usize,
}

/// Decay/growth of `log|I|` over the trailing half of the usable samples.
///
/// Steps within [`DEAD_BAND`] are ignored; a tie (including too few usable samples) counts as
/// decay with the low-confidence flag set.
pub fn classify(series: &IndicatorSeries) -> Classification {
    let logs = series.log_samples();
    let tail = &logs[logs.len() / 2..];
    let (mut up, mut down) = (0, 0);
    for w in tail.windows(2) {
        let d = w[1].1 - w[0].1;
        if d > DEAD_BAND {
            up += 1;
        } else if d < -DEAD_BAND {
            down += 1;
        }
    }
    let trend = if up > down {
        Trend::Growth
    } else {
        Trend::Decay
    };
    Classification {
        trend,
        low_confidence: up == down || (up > 0 && down > 0) || tail.len() < 2,
        up,
        down,
    }
}

/// One trial offset of a transition search.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub t: f64,
    pub class: Classification,
    /// `None` when the probe overflows already at the smallest ladder value.
    pub series: Option<IndicatorSeries>,
}

/// Result of a bisection for the Mittag-Leffler transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub y: Vec2,
    pub theta: Direction,
    pub alpha: f64,
    /// Upper end of the final bracket: the smallest offset classified as decay.
    pub h_alpha: f64,
    pub bracket: (f64, f64),
    pub trials: Vec<Trial>,
    pub low_confidence: bool,
}

/// Ladder search settings for [`transition_search_ml`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderSpec {
    pub tau_min: f64,
    pub tau_max: f64,
    pub points: usize,
}

impl LadderSpec {
    pub fn for_mesh(h: f64) -> Self {
        LadderSpec {
            tau_min: 1.0,
            tau_max: tau_max_for(h),
            points: LADDER_POINTS,
        }
    }
}

/// Classifies one trial offset, shortening the ladder where the probe would overflow.
pub fn classify_offset(gap: &DtNMatrix, probe: &ProbeSpec, ladder: &LadderSpec) -> Result<Trial> {
    let cap = ladder.tau_max.min(overflow_tau(&gap.nodes, probe));
    if cap <= ladder.tau_min {
        // Even the smallest ladder value overflows: the cone sweeps deep into the domain.
        return Ok(Trial {
            t: probe.t,
            class: Classification {
                trend: Trend::Growth,
                low_confidence: true,
                up: 0,
                down: 0,
            },
            series: None,
        });
    }
    let taus = tau_ladder(ladder.tau_min, cap, ladder.points)?;
    let series = indicator_series(gap, probe, &taus)?;
    Ok(Trial {
        t: probe.t,
        class: classify(&series),
        series: Some(series),
    })
}

/// Final bracket of a set of classified offsets: the largest growth offset and the smallest decay
/// offset above it.
pub fn bracket_from_trials(trials: &[Trial]) -> Option<(f64, f64)> {
    let lo = trials
        .iter()
        .filter(|tr| tr.class.trend == Trend::Growth)
        .map(|tr| tr.t)
        .fold(f64::NEG_INFINITY, f64::max);
    let hi = trials
        .iter()
        .filter(|tr| tr.class.trend == Trend::Decay && tr.t > lo)
        .map(|tr| tr.t)
        .fold(f64::INFINITY, f64::min);
    (lo.is_finite() && hi.is_finite()).then_some((lo, hi))
}

/// Bisects `[t_lo, t_hi] ⊂ (−∞, 0)` for the offset where the indicator switches from growth to decay.
pub fn transition_search_ml(
    gap: &DtNMatrix,
    alpha: f64,
    y: Vec2,
    theta: Direction,
    interval: (f64, f64),
    ladder: &LadderSpec,
    tol: f64,
) -> Result<Transition> {
    let (mut lo, mut hi) = interval;
    if !(lo < hi && hi < 0.0) {
        return Err(Error::param(
            "interval",
            format!("need t_lo < t_hi < 0, got [{lo}, {hi}]"),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let probe = ProbeSpec::mittag_leffler(y, alpha, theta, theta.perp(), hi, 1.0)?;
    probe.check_cone_condition(gap.radius)?;
    let at = |t: f64| classify_offset(gap, &probe.with_t(t), ladder);
    let mut trials = vec![at(lo)?, at(hi)?];
    let (c_lo, c_hi) = (trials[0].class, trials[1].class);
    if c_lo.trend == c_hi.trend {
        return Err(Error::NoTransition {
            lo,
            hi,
            class: c_lo.trend.as_str(),
        });
    }
    if c_lo.trend == Trend::Decay {
        return Err(Error::NoTransition {
            lo,
            hi,
            class: "decay below growth",
        });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let trial = at(mid)?;
        match trial.class.trend {
            Trend::Growth => lo = mid,
            Trend::Decay => hi = mid,
        }
        trials.push(trial);
    }
    let low_confidence = trials.iter().any(|tr| tr.class.low_confidence);
    Ok(Transition {
        y,
        theta,
        alpha,
        h_alpha: hi,
        bracket: (lo, hi),
        trials,
        low_confidence,
    })
}

/// Cone carved out of the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarvedCone {
    pub y: Vec2,
    pub theta: Direction,
    pub alpha: f64,
    pub h_alpha: f64,
    pub cone: ConeSpec,
}

/// Rasterised region on `[−R, R]²`, row-major from the bottom-left cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub n: usize,
    pub radius: f64,
    pub cells: Vec<bool>,
}

impl Mask {
    pub fn cell_center(&self, i: usize, j: usize) -> Vec2 {
        let d = 2.0 * self.radius / self.n as f64;
        Vec2::new(
            -self.radius + (j as f64 + 0.5) * d,
            -self.radius + (i as f64 + 0.5) * d,
        )
    }

    pub fn area(&self) -> f64 {
        let d = 2.0 * self.radius / self.n as f64;
        self.cells.iter().filter(|&&c| c).count() as f64 * d * d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    Hull,
    ConeComplement,
}

/// Upper estimate of the inclusion.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionEstimate {
    pub kind: RegionKind,
    pub domain_radius: f64,
    /// Hull vertices in counter-clockwise order (empty for cone complements).
    pub polygon: Vec<Vec2>,
    pub cones: Vec<CarvedCone>,
    pub mask: Option<Mask>,
}

impl RegionEstimate {
    pub fn area(&self) -> f64 {
        match self.kind {
            RegionKind::Hull => crate::mesh::polygon_area(&self.polygon),
            RegionKind::ConeComplement => self.mask.as_ref().map_or(0.0, Mask::area),
        }
    }

    pub fn contains_point(&self, p: &Vec2) -> bool {
        match self.kind {
            RegionKind::Hull => {
                let n = self.polygon.len();
                (0..n).all(|i| {
                    let (a, b) = (self.polygon[i], self.polygon[(i + 1) % n]);
                    (b - a).perp(&(p - a)) >= -1e-12
                })
            }
            RegionKind::ConeComplement => {
                p.norm() <= self.domain_radius
                    && !self.cones.iter().any(|c| cone_interior(&c.cone, p))
            }
        }
    }

    /// Whether the closed shape lies in the region (a shape touching a cone boundary counts).
    pub fn contains_shape(&self, shape: &ShapeSpec) -> bool {
        match self.kind {
            RegionKind::Hull => match shape {
                ShapeSpec::Disk { center, radius } => {
                    let c = Vec2::new(center[0], center[1]);
                    let n = self.polygon.len();
                    (0..n).all(|i| {
                        let (a, b) = (self.polygon[i], self.polygon[(i + 1) % n]);
                        (b - a).perp(&(c - a)) / (b - a).norm() >= radius - 1e-12
                    })
                }
                _ => shape
                    .boundary_samples(4096)
                    .iter()
                    .all(|p| self.contains_point(p)),
            },
            RegionKind::ConeComplement => {
                self.cones.iter().all(|c| cone_avoids_shape(&c.cone, shape))
            }
        }
    }
}

fn cone_interior(cone: &ConeSpec, p: &Vec2) -> bool {
    cone_contains(cone, p) && cone.margin(p) > 0.0
}

/// Clips a convex polygon to `{x : n·x ≤ h}`.
fn clip(poly: &[Vec2], n: &Vec2, h: f64) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let m = poly.len();
    for i in 0..m {
        let (p, q) = (poly[i], poly[(i + 1) % m]);
        let (fp, fq) = (n.dot(&p) - h, n.dot(&q) - h);
        if fp <= 0.0 {
            out.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            out.push(p + (q - p) * (fp / (fp - fq)));
        }
    }
    out
}

/// Intersection of the half-planes `{x·ϑ ≤ ĥ(ϑ)}` with a 256-gon circumscribing the domain.
pub fn convex_hull_estimate(fits: &[SupportFit], domain_radius: f64) -> Result<RegionEstimate> {
    if fits.len() < 3 {
        return Err(Error::param("estimates", "need at least 3 directions"));
    }
    let mut angles: Vec<f64> = fits
        .iter()
        .map(|f| f.theta.angle().rem_euclid(std::f64::consts::TAU))
        .collect();
    angles.sort_by(f64::total_cmp);
    let widest = angles
        .windows(2)
        .map(|w| w[1] - w[0])
        .chain(std::iter::once(
            angles[0] + std::f64::consts::TAU - angles[angles.len() - 1],
        ))
        .fold(0.0, f64::max);
    if widest >= std::f64::consts::PI {
        return Err(Error::param(
            "estimates",
            "directions do not span the circle",
        ));
    }
    let m = 256;
    let r = domain_radius / (std::f64::consts::PI / m as f64).cos();
    let mut poly: Vec<Vec2> = (0..m)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / m as f64;
            Vec2::new(r * a.cos(), r * a.sin())
        })
        .collect();
    for f in fits {
        poly = clip(&poly, &f.theta.vec(), f.h_hat);
        if poly.len() < 3 {
            return Err(Error::EmptyRegion);
        }
    }
    if crate::mesh::polygon_area(&poly) <= 0.0 {
        return Err(Error::EmptyRegion);
    }
    Ok(RegionEstimate {
        kind: RegionKind::Hull,
        domain_radius,
        polygon: poly,
        cones: Vec::new(),
        mask: None,
    })
}

/// Domain minus the union of the estimated cones, plus an `n × n` raster of the result.
pub fn cone_carving(
    transitions: &[Transition],
    domain_radius: f64,
    n: usize,
) -> Result<RegionEstimate> {
    let cones = transitions
        .iter()
        .map(|tr| {
            Ok(CarvedCone {
                y: tr.y,
                theta: tr.theta,
                alpha: tr.alpha,
                h_alpha: tr.h_alpha,
                cone: ConeSpec::new(
                    tr.y + tr.theta.vec() * tr.h_alpha,
                    tr.theta,
                    std::f64::consts::FRAC_PI_2 * tr.alpha,
                )?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut est = RegionEstimate {
        kind: RegionKind::ConeComplement,
        domain_radius,
        polygon: Vec::new(),
        cones,
        mask: None,
    };
    let mut mask = Mask {
        n,
        radius: domain_radius,
        cells: vec![false; n * n],
    };
    let rows: Vec<Vec<bool>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| est.contains_point(&mask.cell_center(i, j)))
                .collect()
        })
        .collect();
    for (i, row) in rows.into_iter().enumerate() {
        mask.cells[i * n..(i + 1) * n].copy_from_slice(&row);
    }
    est.mask = Some(mask);
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn synthetic(f: impl Fn(f64) -> f64, t: f64) -> IndicatorSeries {
        let th = Direction::from_angle(0.0);
        let probe = ProbeSpec::cgo(th, th.perp(), t, 1.0).unwrap();
        let taus = tau_ladder(1.0, 15.0, LADDER_POINTS).unwrap();
        let values = taus.iter().map(|&x| f(x)).collect();
        IndicatorSeries::new(probe, taus, values).unwrap()
    }

    #[test]
    fn exact_linear_data() {
        let t = 0.2;
        let s = synthetic(|tau| (2.0 * tau * (0.5 - t) + 1.0).exp(), t);
        let fit = support_slope_fit(&s).unwrap();
        assert!((fit.h_hat - 0.5).abs() < 1e-12);
        assert_eq!(fit.points, LADDER_POINTS);
        assert!(!fit.low_confidence);
    }

    #[test]
    fn floor_is_censored() {
        let s = synthetic(|_| 1e-300, 0.0);
        assert!(matches!(support_slope_fit(&s), Err(Error::Fit(_))));
    }

    #[test]
    fn monotone_exponentials() {
        for g in [0.1, 0.5, 2.0] {
            let up = synthetic(|tau| 3.0 * (g * tau).exp(), -0.5);
            let down = synthetic(|tau| 3.0 * (-g * tau).exp(), -0.5);
            assert_eq!(classify(&up).trend, Trend::Growth);
            assert_eq!(classify(&down).trend, Trend::Decay);
        }
        let flat = synthetic(|_| 1.0, -0.5);
        let c = classify(&flat);
        assert_eq!(c.trend, Trend::Decay);
        assert!(c.low_confidence);
    }

    #[test]
    fn square_hull() {
        let fits: Vec<SupportFit> = [0.0, 0.5 * PI, PI, 1.5 * PI]
            .iter()
            .map(|&a| SupportFit {
                theta: Direction::from_angle(a),
                t: 0.0,
                h_hat: 0.5,
                slope: 0.5,
                intercept: 0.0,
                residual: 0.0,
                window: (1.0, 2.0),
                points: 5,
                low_confidence: false,
            })
            .collect();
        let hull = convex_hull_estimate(&fits, 1.0).unwrap();
        assert!((hull.area() - 1.0).abs() < 1e-12);
        for p in &hull.polygon {
            assert!((p.x.abs() - 0.5).abs() < 1e-12 && (p.y.abs() - 0.5).abs() < 1e-12);
        }
        assert!(convex_hull_estimate(&fits[..2], 1.0).is_err());
    }

    #[test]
    fn disjoint_half_planes_are_empty() {
        let mk = |a: f64, h: f64| SupportFit {
            theta: Direction::from_angle(a),
            t: 0.0,
            h_hat: h,
            slope: h,
            intercept: 0.0,
            residual: 0.0,
            window: (1.0, 2.0),
            points: 5,
            low_confidence: false,
        };
        let fits = vec![
            mk(0.0, -0.5),
            mk(PI, -0.5),
            mk(0.5 * PI, 0.5),
            mk(1.5 * PI, 0.5),
        ];
        assert!(matches!(
            convex_hull_estimate(&fits, 1.0),
            Err(Error::EmptyRegion)
        ));
    }

    #[test]
    fn empty_carving_is_the_domain() {
        let est = cone_carving(&[], 1.0, 256).unwrap();
        let a = est.area();
        assert!((a - PI).abs() < 0.01 * PI, "{a}");
    }
}
