//! Exponential (CGO) and Mittag-Leffler probe functions, and cone geometry.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geom::{Direction, Vec2};
use crate::mesh::{support_function_exact, ShapeSpec};
use crate::mittag::{ml_deriv, ml_eval, MLParams};

type C = Complex64;

/// Largest real exponent accepted before a probe is declared to overflow.
pub const OVERFLOW_GUARD: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeKind {
    Cgo,
    MittagLeffler { y: Vec2, alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSpec {
    pub kind: ProbeKind,
    pub theta: Direction,
    pub theta_perp: Direction,
    pub t: f64,
    pub tau: f64,
}

impl ProbeSpec {
    pub fn cgo(theta: Direction, theta_perp: Direction, t: f64, tau: f64) -> Result<Self> {
        let s = ProbeSpec {
            kind: ProbeKind::Cgo,
            theta,
            theta_perp,
            t,
            tau,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn mittag_leffler(
        y: Vec2,
        alpha: f64,
        theta: Direction,
        theta_perp: Direction,
        t: f64,
        tau: f64,
    ) -> Result<Self> {
        let s = ProbeSpec {
            kind: ProbeKind::MittagLeffler { y, alpha },
            theta,
            theta_perp,
            t,
            tau,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta.dot(&self.theta_perp.vec()).abs() > 1e-9 {
            return Err(Error::param("theta_perp", "must be orthogonal to theta"));
        }
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(Error::param(
                "tau",
                format!("{} must be nonnegative", self.tau),
            ));
        }
        if !self.t.is_finite() {
            return Err(Error::param("t", "must be finite"));
        }
        if let ProbeKind::MittagLeffler { y, alpha } = self.kind {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::param("alpha", format!("{alpha} is outside (0, 1]")));
            }
            if !(y.x.is_finite() && y.y.is_finite()) {
                return Err(Error::param("y", "must be finite"));
            }
        }
        Ok(())
    }

    /// The same probe with `ϑ⊥` reversed.
    pub fn flipped(&self) -> Self {
        ProbeSpec {
            theta_perp: self.theta_perp.neg(),
            ..*self
        }
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        ProbeSpec { tau, ..*self }
    }

    pub fn with_t(&self, t: f64) -> Self {
        ProbeSpec { t, ..*self }
    }

    /// Cone with half-aperture `πα/2` whose growth region matches the probe at offset `t`.
    pub fn cone(&self) -> Option<ConeSpec> {
        match self.kind {
            ProbeKind::Cgo => None,
            ProbeKind::MittagLeffler { y, alpha } => Some(ConeSpec {
                vertex: y + self.theta.vec() * self.t,
                axis: self.theta,
                half_aperture: std::f64::consts::FRAC_PI_2 * alpha,
            }),
        }
    }

    /// Checks that the cone at `y` (offset 0) stays outside the disk of radius `domain_radius`.
    pub fn check_cone_condition(&self, domain_radius: f64) -> Result<()> {
        if let ProbeKind::MittagLeffler { y, alpha } = self.kind {
            let cone = ConeSpec::new(y, self.theta, std::f64::consts::FRAC_PI_2 * alpha)?;
            let omega = ShapeSpec::disk(Vec2::zeros(), domain_radius);
            if !cone_avoids_shape(&cone, &omega) {
                return Err(Error::ConeCondition);
            }
        }
        Ok(())
    }

    /// `w(x) = τ{(x − y)·ϑ − t + i(x − y)·ϑ⊥}` (with `y = 0` for CGO probes).
    fn argument(&self, x: &Vec2) -> C {
        let y = match self.kind {
            ProbeKind::Cgo => Vec2::zeros(),
            ProbeKind::MittagLeffler { y, .. } => y,
        };
        let d = x - y;
        C::new(
            self.tau * (self.theta.dot(&d) - self.t),
            self.tau * self.theta_perp.dot(&d),
        )
    }

    fn complex_direction(&self) -> [C; 2] {
        [
            C::new(self.tau * self.theta.x(), self.tau * self.theta_perp.x()),
            C::new(self.tau * self.theta.y(), self.tau * self.theta_perp.y()),
        ]
    }

    /// Probe values at `points`.
    pub fn trace(&self, points: &[Vec2]) -> Result<Vec<C>> {
        match self.kind {
            ProbeKind::Cgo => cgo_trace(self, points),
            ProbeKind::MittagLeffler { .. } => ml_probe_trace(self, points),
        }
    }

    /// Probe gradients at `points`.
    pub fn gradient(&self, points: &[Vec2]) -> Result<Vec<[C; 2]>> {
        match self.kind {
            ProbeKind::Cgo => cgo_gradient(self, points),
            ProbeKind::MittagLeffler { .. } => ml_probe_gradient(self, points),
        }
    }
}

fn require_cgo(spec: &ProbeSpec) -> Result<()> {
    spec.validate()?;
    match spec.kind {
        ProbeKind::Cgo => Ok(()),
        _ => Err(Error::param("kind", "expected a CGO probe")),
    }
}

fn require_ml(spec: &ProbeSpec) -> Result<MLParams> {
    spec.validate()?;
    match spec.kind {
        ProbeKind::MittagLeffler { alpha, .. } => MLParams::new(alpha),
        _ => Err(Error::param("kind", "expected a Mittag-Leffler probe")),
    }
}

/// `e^{τ((x·ϑ − t) + i x·ϑ⊥)}` at each point.
pub fn cgo_trace(spec: &ProbeSpec, points: &[Vec2]) -> Result<Vec<C>> {
    require_cgo(spec)?;
    let args: Vec<C> = points.iter().map(|x| spec.argument(x)).collect();
    let worst = args.iter().map(|w| w.re).fold(f64::NEG_INFINITY, f64::max);
    if worst > OVERFLOW_GUARD {
        return Err(Error::ProbeOverflow { exponent: worst });
    }
    Ok(args.into_iter().map(|w| w.exp()).collect())
}

/// `τ(ϑ + iϑ⊥)·e^{τ((x·ϑ − t) + i x·ϑ⊥)}` at each point.
pub fn cgo_gradient(spec: &ProbeSpec, points: &[Vec2]) -> Result<Vec<[C; 2]>> {
    let values = cgo_trace(spec, points)?;
    let d = spec.complex_direction();
    Ok(values.into_iter().map(|v| [d[0] * v, d[1] * v]).collect())
}

/// `E_α(w(x))` at each point.
pub fn ml_probe_trace(spec: &ProbeSpec, points: &[Vec2]) -> Result<Vec<C>> {
    let params = require_ml(spec)?;
    points
        .iter()
        .map(|x| finite_probe(ml_eval(&params, spec.argument(x)), spec, x))
        .collect()
}

/// `τ(ϑ + iϑ⊥)·E'_α(w(x))` at each point.
pub fn ml_probe_gradient(spec: &ProbeSpec, points: &[Vec2]) -> Result<Vec<[C; 2]>> {
    let params = require_ml(spec)?;
    let d = spec.complex_direction();
    points
        .iter()
        .map(|x| {
            let v = finite_probe(ml_deriv(&params, spec.argument(x)), spec, x)?;
            Ok([d[0] * v, d[1] * v])
        })
        .collect()
}

fn finite_probe(v: Result<C>, spec: &ProbeSpec, x: &Vec2) -> Result<C> {
    match v {
        Ok(v) if v.re.is_finite() && v.im.is_finite() => Ok(v),
        Ok(_) | Err(Error::Overflow { .. }) => Err(Error::ProbeOverflow {
            exponent: spec.argument(x).norm(),
        }),
        Err(e) => Err(e),
    }
}

/// Closed cone `{v + s·d : s ≥ 0, angle(d, axis) ≤ half_aperture}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeSpec {
    pub vertex: Vec2,
    pub axis: Direction,
    pub half_aperture: f64,
}

impl ConeSpec {
    pub fn new(vertex: Vec2, axis: Direction, half_aperture: f64) -> Result<Self> {
        // π/2 (α = 1) is the half-plane.
        if !(half_aperture > 0.0 && half_aperture <= std::f64::consts::FRAC_PI_2) {
            return Err(Error::param(
                "half_aperture",
                format!("{half_aperture} is outside (0, π/2]"),
            ));
        }
        Ok(ConeSpec {
            vertex,
            axis,
            half_aperture,
        })
    }

    /// `(x − v)·a − |x − v|cos(half_aperture)`: nonnegative exactly on the cone, and concave in `x`.
    pub fn margin(&self, x: &Vec2) -> f64 {
        let d = x - self.vertex;
        self.axis.dot(&d) - d.norm() * self.half_aperture.cos()
    }

    /// The two boundary rays.
    pub fn edges(&self) -> [Direction; 2] {
        let a = self.axis.angle();
        [
            Direction::from_angle(a + self.half_aperture),
            Direction::from_angle(a - self.half_aperture),
        ]
    }

    /// Euclidean distance from `x` to the closed cone.
    pub fn distance(&self, x: &Vec2) -> f64 {
        if cone_contains(self, x) {
            return 0.0;
        }
        let d = x - self.vertex;
        self.edges()
            .iter()
            .map(|e| {
                let s = e.dot(&d);
                if s <= 0.0 {
                    d.norm()
                } else {
                    (d - e.vec() * s).norm()
                }
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Angle test `angle(x − v, axis) ≤ half_aperture`; the vertex belongs to the cone.
pub fn cone_contains(cone: &ConeSpec, x: &Vec2) -> bool {
    let d = x - cone.vertex;
    let r = d.norm();
    r == 0.0 || cone.axis.dot(&d) >= r * cone.half_aperture.cos() - 1e-12 * r
}

/// True when the cone and the closed shape have disjoint interiors; tangency counts as avoiding.
pub fn cone_avoids_shape(cone: &ConeSpec, shape: &ShapeSpec) -> bool {
    let tol = 1e-12;
    match shape {
        ShapeSpec::Disk { center, radius } => {
            let c = Vec2::new(center[0], center[1]);
            cone.distance(&c) >= radius - tol * radius.max(1.0)
        }
        ShapeSpec::Polygon { .. } => {
            let pts = shape.vertices().unwrap_or_default();
            if shape.contains(&cone.vertex) && !on_polygon_boundary(&pts, &cone.vertex) {
                return false;
            }
            let n = pts.len();
            let best = (0..n)
                .map(|i| max_on_segment(cone, pts[i], pts[(i + 1) % n]))
                .fold(f64::NEG_INFINITY, f64::max);
            best <= tol
        }
        ShapeSpec::Ellipse { .. } => {
            if shape.contains(&cone.vertex) {
                return false;
            }
            // The margin is linear along rays from the vertex, so its maximum over the
            // ellipse is attained on the boundary.
            let pts = shape.boundary_samples(4096);
            let n = pts.len();
            let (i, _) = pts
                .iter()
                .enumerate()
                .map(|(i, p)| (i, cone.margin(p)))
                .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
            let best = max_on_arc(cone, shape, i, n);
            best <= tol
        }
    }
}

fn on_polygon_boundary(pts: &[Vec2], x: &Vec2) -> bool {
    let n = pts.len();
    (0..n).any(|i| {
        let (p, q) = (pts[i], pts[(i + 1) % n]);
        let e = q - p;
        (e.perp(&(x - p))).abs() <= 1e-12 * e.norm()
            && (x - p).dot(&e) >= 0.0
            && (x - q).dot(&e) <= 0.0
    })
}

/// Maximum of the concave cone margin on a segment, by golden-section search.
fn max_on_segment(cone: &ConeSpec, p: Vec2, q: Vec2) -> f64 {
    let f = |s: f64| cone.margin(&(p + (q - p) * s));
    golden_max(f, 0.0, 1.0).1
}

fn max_on_arc(cone: &ConeSpec, shape: &ShapeSpec, i: usize, n: usize) -> f64 {
    let (center, a, b, rot) = match shape {
        ShapeSpec::Ellipse {
            center,
            a,
            b,
            rotation,
        } => (Vec2::new(center[0], center[1]), *a, *b, *rotation),
        _ => unreachable!(),
    };
    let (s, c) = rot.sin_cos();
    let point = |t: f64| {
        let (u, v) = (a * t.cos(), b * t.sin());
        center + Vec2::new(c * u - s * v, s * u + c * v)
    };
    let step = std::f64::consts::TAU / n as f64;
    let t0 = step * i as f64;
    golden_max(|t| cone.margin(&point(t)), t0 - step, t0 + step).1
}

/// Golden-section maximisation of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (hi - lo).abs() <= 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    let (fl, fh) = (f(lo), f(hi));
    [(lo, fl), (hi, fh), (x1, f1), (x2, f2)]
        .into_iter()
        .fold(
            (lo, f64::NEG_INFINITY),
            |a, b| if b.1 > a.1 { b } else { a },
        )
}

/// Generalised support function: the critical offset `t` at which the cone
/// `C_{y+tϑ}(ϑ, πα/2)` first touches the shape.
///
/// Equals `max_{x∈D̄} [(x − y)·ϑ − cot(πα/2)|(x − y)·ϑ⊥|]`, evaluated through the dual form
/// `min_{|μ|≤cot(πα/2)} [h_D(ϑ + μϑ⊥) − y·(ϑ + μϑ⊥)]` with `h_D` extended by homogeneity.
pub fn generalized_support_exact(
    shape: &ShapeSpec,
    y: &Vec2,
    theta: &Direction,
    alpha: f64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", format!("{alpha} is outside (0, 1)")));
    }
    shape.validate()?;
    let kappa = 1.0 / (std::f64::consts::FRAC_PI_2 * alpha).tan();
    let perp = theta.perp();
    let f = |mu: f64| {
        let v = theta.vec() + perp.vec() * mu;
        let n = v.norm();
        let dir = Direction::normalize(v).expect("nonzero");
        n * support_function_exact(shape, &dir) - y.dot(&v)
    };
    // Convex in μ: maximise −f.
    let (_, neg) = golden_max(|mu| -f(mu), -kappa, kappa);
    Ok(-neg)
}
