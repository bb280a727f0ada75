//! Conductivity/permittivity perturbations, reduction to the background `(1, 0)` and jump
//! diagnostics.

use std::fmt::Write as _;
use std::io::BufRead;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geom::{CSym2, Direction, Sym2};
use crate::mesh::{Mesh, Region};

/// Tolerance for definiteness checks on 2×2 symmetric matrices.
pub const DEFINITE_TOL: f64 = 1e-12;

/// Safety margin subtracted from the scanned jump constant.
pub const JUMP_MARGIN: f64 = 1e-9;

/// Coefficients relative to a constant isotropic background `(σ0, ε0)`:
/// `σ = σ0 + α`, `ε = ε0 + β` on the inclusion.
#[derive(Debug, Clone)]
pub struct ReductionInput {
    pub sigma0: f64,
    pub eps0: f64,
    pub omega: f64,
    /// Per-element `α`, ignored on background elements.
    pub alpha: Vec<Sym2>,
    /// Per-element `β`, ignored on background elements.
    pub beta: Vec<Sym2>,
}

impl ReductionInput {
    /// Same `α`, `β` on every inclusion element.
    pub fn constant(
        mesh: &Mesh,
        sigma0: f64,
        eps0: f64,
        omega: f64,
        alpha: Sym2,
        beta: Sym2,
    ) -> Self {
        let n = mesh.num_triangles();
        ReductionInput {
            sigma0,
            eps0,
            omega,
            alpha: vec![alpha; n],
            beta: vec![beta; n],
        }
    }

    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        if !(self.sigma0 >= 0.0) || !self.sigma0.is_finite() {
            return Err(Error::param(
                "sigma0",
                format!("{} must be nonnegative", self.sigma0),
            ));
        }
        if !(self.eps0 > 0.0) || !self.eps0.is_finite() {
            return Err(Error::param(
                "eps0",
                format!("{} must be positive", self.eps0),
            ));
        }
        if !(self.omega >= 0.0) || !self.omega.is_finite() {
            return Err(Error::param(
                "omega",
                format!("{} must be nonnegative", self.omega),
            ));
        }
        if self.alpha.len() != mesh.num_triangles() || self.beta.len() != mesh.num_triangles() {
            return Err(Error::param(
                "alpha/beta",
                "one matrix per mesh element is required",
            ));
        }
        if !self.alpha.iter().chain(&self.beta).all(Sym2::is_finite) {
            return Err(Error::param("alpha/beta", "entries must be finite"));
        }
        Ok(())
    }

    /// `σ − iωε` of the original problem, per element.
    pub fn original_admittivity(&self, mesh: &Mesh) -> Vec<CSym2> {
        let s0 = Sym2::scalar(self.sigma0);
        let e0 = Sym2::scalar(self.eps0);
        (0..mesh.num_triangles())
            .map(|t| match mesh.labels[t] {
                Region::Background => CSym2::from_parts(&s0, &e0, self.omega),
                Region::Inclusion => {
                    CSym2::from_parts(&s0.add(&self.alpha[t]), &e0.add(&self.beta[t]), self.omega)
                }
            })
            .collect()
    }

    /// The scalar `σ0 − iωε0` relating the original and reduced DtN maps.
    pub fn background_factor(&self) -> Complex64 {
        Complex64::new(self.sigma0, -self.omega * self.eps0)
    }
}

/// Reduced coefficients `σ = I + a`, `ε = b` on the inclusion, `(I, 0)` elsewhere.
#[derive(Debug, Clone)]
pub struct AdmittivityField {
    mesh: Arc<Mesh>,
    omega: f64,
    a: Vec<Sym2>,
    b: Vec<Sym2>,
}

impl AdmittivityField {
    /// Builds a field, zeroing background entries and checking that `I + a` is positive definite.
    pub fn new(mesh: Arc<Mesh>, omega: f64, mut a: Vec<Sym2>, mut b: Vec<Sym2>) -> Result<Self> {
        if !(omega >= 0.0) || !omega.is_finite() {
            return Err(Error::param(
                "omega",
                format!("{omega} must be nonnegative"),
            ));
        }
        if a.len() != mesh.num_triangles() || b.len() != mesh.num_triangles() {
            return Err(Error::param(
                "a/b",
                "one matrix per mesh element is required",
            ));
        }
        for t in 0..mesh.num_triangles() {
            if mesh.labels[t] == Region::Background {
                a[t] = Sym2::ZERO;
                b[t] = Sym2::ZERO;
                continue;
            }
            if !a[t].is_finite() || !b[t].is_finite() {
                return Err(Error::param(
                    "a/b",
                    format!("non-finite entry on element {t}"),
                ));
            }
            let lo = Sym2::IDENTITY.add(&a[t]).eigenvalues().0;
            if lo < DEFINITE_TOL {
                return Err(Error::NotPositiveDefinite {
                    element: t,
                    eigenvalue: lo,
                });
            }
        }
        Ok(AdmittivityField { mesh, omega, a, b })
    }

    /// The same `a`, `b` on every inclusion element.
    pub fn constant(mesh: Arc<Mesh>, omega: f64, a: Sym2, b: Sym2) -> Result<Self> {
        let n = mesh.num_triangles();
        AdmittivityField::new(mesh, omega, vec![a; n], vec![b; n])
    }

    /// `(σ, ε) = (1, 0)` everywhere.
    pub fn homogeneous(mesh: Arc<Mesh>, omega: f64) -> Self {
        let n = mesh.num_triangles();
        AdmittivityField {
            mesh,
            omega,
            a: vec![Sym2::ZERO; n],
            b: vec![Sym2::ZERO; n],
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn a(&self) -> &[Sym2] {
        &self.a
    }

    pub fn b(&self) -> &[Sym2] {
        &self.b
    }

    /// `σ = I + a` on element `t`.
    pub fn sigma(&self, t: usize) -> Sym2 {
        Sym2::IDENTITY.add(&self.a[t])
    }

    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        AdmittivityField::new(self.mesh.clone(), omega, self.a.clone(), self.b.clone())
    }

    pub fn write_text(&self, provenance: &[String]) -> String {
        let mut s = String::new();
        for line in provenance {
            let _ = writeln!(s, "# {line}");
        }
        let _ = writeln!(s, "omega {:e}", self.omega);
        for t in self.mesh.inclusion_triangles() {
            let (a, b) = (self.a[t], self.b[t]);
            let _ = writeln!(
                s,
                "{t} {:e} {:e} {:e} {:e} {:e} {:e}",
                a.xx, a.xy, a.yy, b.xx, b.xy, b.yy
            );
        }
        s
    }

    pub fn read_text<R: BufRead>(mesh: Arc<Mesh>, r: R, name: &str) -> Result<Self> {
        let n = mesh.num_triangles();
        let mut a = vec![Sym2::ZERO; n];
        let mut b = vec![Sym2::ZERO; n];
        let mut omega = None;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| Error::Parse {
                path: name.to_string(),
                line: i + 1,
                msg: msg.to_string(),
            };
            if let Some(rest) = line.strip_prefix("omega") {
                omega = Some(
                    rest.trim()
                        .parse::<f64>()
                        .map_err(|_| err("bad omega value"))?,
                );
                continue;
            }
            let tok: Vec<&str> = line.split_whitespace().collect();
            if tok.len() != 7 {
                return Err(err("expected `element_id a11 a12 a22 b11 b12 b22`"));
            }
            let t: usize = tok[0].parse().map_err(|_| err("bad element id"))?;
            if t >= n || mesh.labels[t] != Region::Inclusion {
                return Err(err("element id is not an inclusion element of the mesh"));
            }
            let v: Vec<f64> = tok[1..]
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| err("bad number"))?;
            a[t] = Sym2::new(v[0], v[1], v[2]);
            b[t] = Sym2::new(v[3], v[4], v[5]);
        }
        let omega = omega.ok_or_else(|| Error::Parse {
            path: name.to_string(),
            line: 0,
            msg: "missing `omega` line".into(),
        })?;
        AdmittivityField::new(mesh, omega, a, b)
    }
}

/// Maps `(σ0, ε0, ω, α, β)` to the reduced perturbations
/// `a = (σ0α + ω²ε0β)/d`, `b = (σ0β − ε0α)/d` with `d = σ0² + ω²ε0²`.
pub fn reduce_background(mesh: Arc<Mesh>, input: &ReductionInput) -> Result<AdmittivityField> {
    input.validate(&mesh)?;
    let (s0, e0, w) = (input.sigma0, input.eps0, input.omega);
    let den = s0 * s0 + w * w * e0 * e0;
    if den == 0.0 {
        return Err(Error::DegenerateReduction);
    }
    let n = mesh.num_triangles();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for t in 0..n {
        let (al, be) = (input.alpha[t], input.beta[t]);
        a.push(al.scale(s0 / den).add(&be.scale(w * w * e0 / den)));
        b.push(be.scale(s0 / den).sub(&al.scale(e0 / den)));
    }
    AdmittivityField::new(mesh, input.omega, a, b)
}

/// Inverse of the reduction map: recovers `(α, β)` from `(a, b)`.
pub fn expand_background(sigma0: f64, eps0: f64, omega: f64, a: &Sym2, b: &Sym2) -> (Sym2, Sym2) {
    let alpha = a.scale(sigma0).sub(&b.scale(omega * omega * eps0));
    let beta = a.scale(eps0).add(&b.scale(sigma0));
    (alpha, beta)
}

/// `γ = σ − iωε` per element; identity on the background.
pub fn complex_admittivity(field: &AdmittivityField) -> Vec<CSym2> {
    (0..field.mesh.num_triangles())
        .map(|t| match field.mesh.labels[t] {
            Region::Background => CSym2::identity(),
            Region::Inclusion => CSym2::from_parts(&field.sigma(t), &field.b[t], field.omega),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpSign {
    Positive,
    Negative,
    Indefinite,
}

#[derive(Debug, Clone)]
pub struct JumpReport {
    pub theta: Direction,
    pub delta: f64,
    pub sign: JumpSign,
    /// Largest admissible jump constant over the scanned slab (zero when indefinite).
    pub c_theta: f64,
    /// Lowest eigenvalue of `σ = I + a` over the slab.
    pub m: f64,
    /// Largest operator norm of `b` over the slab.
    pub big_m: f64,
    /// Frequency bound `√(m C)/M` for a negative jump, `+∞` for a positive one, 0 when indefinite.
    pub omega_max: f64,
    /// Number of elements scanned.
    pub elements: usize,
}

/// Scans inclusion elements whose centroid lies in `D_ϑ(δ)`, the slab of depth `δ` below the
/// discrete support line in direction `ϑ`.
pub fn jump_analysis(
    field: &AdmittivityField,
    theta: &Direction,
    delta: f64,
) -> Result<JumpReport> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::param("delta", format!("{delta} must be positive")));
    }
    let mesh = &field.mesh;
    let h_d = mesh
        .inclusion_triangles()
        .flat_map(|t| mesh.triangles[t])
        .map(|i| theta.dot(&mesh.vertices[i]))
        .fold(f64::NEG_INFINITY, f64::max);
    let slab: Vec<usize> = mesh
        .inclusion_triangles()
        .filter(|&t| theta.dot(&mesh.centroid(t)) > h_d - delta)
        .collect();
    if slab.is_empty() {
        return Err(Error::EmptySlab { delta });
    }
    let mut min_a = f64::INFINITY;
    let mut max_a = f64::NEG_INFINITY;
    let mut m = f64::INFINITY;
    let mut big_m: f64 = 0.0;
    for &t in &slab {
        let (lo, hi) = field.a[t].eigenvalues();
        min_a = min_a.min(lo);
        max_a = max_a.max(hi);
        m = m.min(field.sigma(t).eigenvalues().0);
        big_m = big_m.max(field.b[t].norm());
    }
    let (sign, c_theta) = if min_a > DEFINITE_TOL {
        (JumpSign::Positive, (min_a - JUMP_MARGIN).max(0.0))
    } else if -max_a > DEFINITE_TOL {
        (JumpSign::Negative, (-max_a - JUMP_MARGIN).max(0.0))
    } else {
        (JumpSign::Indefinite, 0.0)
    };
    let omega_max = match sign {
        JumpSign::Positive => f64::INFINITY,
        JumpSign::Negative if big_m == 0.0 => f64::INFINITY,
        JumpSign::Negative => (m * c_theta).sqrt() / big_m,
        JumpSign::Indefinite => 0.0,
    };
    Ok(JumpReport {
        theta: *theta,
        delta,
        sign,
        c_theta,
        m,
        big_m,
        omega_max,
        elements: slab.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;
    use crate::mesh::{build_disk_mesh, ShapeSpec};

    fn mesh() -> Arc<Mesh> {
        Arc::new(build_disk_mesh(1.0, 0.1, Some(&ShapeSpec::disk(Vec2::zeros(), 0.5))).unwrap())
    }

    fn first_inclusion(m: &Mesh) -> usize {
        m.inclusion_triangles().next().unwrap()
    }

    #[test]
    fn scalar_reduction_example() {
        let m = mesh();
        let input =
            ReductionInput::constant(&m, 1.0, 1.0, 1.0, Sym2::scalar(2.0), Sym2::scalar(1.0));
        let f = reduce_background(m.clone(), &input).unwrap();
        let t = first_inclusion(&m);
        assert!((f.sigma(t).xx - 2.5).abs() < 1e-15);
        assert!((f.b()[t].xx + 0.5).abs() < 1e-15);
        let g = complex_admittivity(&f)[t].xx * input.background_factor();
        assert!((g - Complex64::new(3.0, -2.0)).norm() < 1e-14);
    }

    #[test]
    fn unit_background_is_identity_map() {
        let m = mesh();
        let al = Sym2::new(0.3, 0.1, 0.2);
        let be = Sym2::new(0.5, -0.2, 0.4);
        let input = ReductionInput::constant(&m, 1.0, 0.0001, 0.0, al, be);
        let f = reduce_background(m.clone(), &input).unwrap();
        let t = first_inclusion(&m);
        assert_eq!(f.a()[t], al);
    }

    #[test]
    fn zero_sigma0_scales_permittivity() {
        let m = mesh();
        let input =
            ReductionInput::constant(&m, 0.0, 2.0, 3.0, Sym2::scalar(0.7), Sym2::scalar(1.0));
        let f = reduce_background(m.clone(), &input).unwrap();
        let t = first_inclusion(&m);
        // eps = 3, eps0 = 2
        assert!((f.a()[t].xx - 0.5).abs() < 1e-15);
        let degenerate = ReductionInput::constant(&m, 0.0, 2.0, 0.0, Sym2::ZERO, Sym2::ZERO);
        assert!(matches!(
            reduce_background(m, &degenerate),
            Err(Error::DegenerateReduction)
        ));
    }

    #[test]
    fn rejects_indefinite_sigma() {
        let m = mesh();
        let r = AdmittivityField::constant(m, 0.0, Sym2::scalar(-1.5), Sym2::ZERO);
        assert!(matches!(r, Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn complex_admittivity_examples() {
        let m = mesh();
        let f = AdmittivityField::constant(m.clone(), 2.0, Sym2::IDENTITY, Sym2::IDENTITY).unwrap();
        let g = complex_admittivity(&f);
        let t = first_inclusion(&m);
        assert_eq!(g[t].xx, Complex64::new(2.0, -2.0));
        let bg = (0..m.num_triangles())
            .find(|&t| m.labels[t] == Region::Background)
            .unwrap();
        assert!(g[bg].is_identity());
        let f0 = f.with_omega(0.0).unwrap();
        assert_eq!(complex_admittivity(&f0)[t].xx, Complex64::new(2.0, 0.0));
    }

    #[test]
    fn jump_examples() {
        let m = mesh();
        let th = Direction::from_angle(0.3);
        let f = AdmittivityField::constant(m.clone(), 0.0, Sym2::scalar(2.0), Sym2::ZERO).unwrap();
        let r = jump_analysis(&f, &th, 0.1).unwrap();
        assert_eq!(r.sign, JumpSign::Positive);
        assert!((r.c_theta - 2.0).abs() < 2e-9);
        assert!(r.omega_max.is_infinite());

        let f =
            AdmittivityField::constant(m.clone(), 0.0, Sym2::scalar(-0.5), Sym2::IDENTITY).unwrap();
        let r = jump_analysis(&f, &th, 0.1).unwrap();
        assert_eq!(r.sign, JumpSign::Negative);
        assert!((r.m - 0.5).abs() < 1e-15 && (r.big_m - 1.0).abs() < 1e-15);
        assert!((r.omega_max - 0.5).abs() < 1e-8);

        assert!(matches!(
            jump_analysis(&f, &th, 0.0),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn field_text_round_trip() {
        let m = mesh();
        let f =
            AdmittivityField::constant(m.clone(), 1.5, Sym2::new(0.2, 0.1, 0.3), Sym2::scalar(0.5))
                .unwrap();
        let text = f.write_text(&[]);
        let back = AdmittivityField::read_text(m, text.as_bytes(), "mem").unwrap();
        assert_eq!(back.a(), f.a());
        assert_eq!(back.b(), f.b());
        assert_eq!(back.omega(), 1.5);
    }
}
