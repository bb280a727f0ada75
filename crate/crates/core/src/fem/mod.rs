//! P1 finite elements for `∇·γ∇u = 0` with complex-symmetric `γ = σ − iωε`, DtN assembly and
//! the two-layer disk benchmark.

pub mod io;
pub mod sparse;
pub mod two_layer;

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::admittivity::{complex_admittivity, AdmittivityField};
use crate::error::{Error, Result};
use crate::geom::{CSym2, Vec2};
use crate::mesh::{Mesh, Region};
use sparse::{cocg, profile_size, rcm_ordering, CsrMatrix, Skyline};

pub use io::{load_dtn, read_dtn, save_dtn, write_dtn};
pub use two_layer::{analytic_two_layer_dtn, two_layer_mode, TwoLayerMode};

type C = Complex64;

/// Relative residual tolerance of the iterative fallback and the reported solver tolerance.
pub const SOLVER_TOL: f64 = 1e-10;

/// Skyline factors larger than this many entries switch to the iterative solver.
pub const DIRECT_ENTRY_LIMIT: usize = 120_000_000;

const ZERO: C = C::new(0.0, 0.0);

/// Element stiffness `K_ij = |T| ∇φ_iᵀ γ ∇φ_j`.
pub fn element_stiffness(mesh: &Mesh, t: usize, gamma: &CSym2) -> [[C; 3]; 3] {
    let (g, area) = mesh.hat_gradients(t);
    let mut k = [[ZERO; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let v = gamma.bilinear_real(&g[i], &g[j]) * area;
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    k
}

pub fn assemble_stiffness(mesh: &Mesh, coeffs: &[CSym2]) -> CsrMatrix {
    let mut trip = Vec::with_capacity(9 * mesh.num_triangles());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let k = element_stiffness(mesh, t, &coeffs[t]);
        for i in 0..3 {
            for j in 0..3 {
                trip.push((tri[i], tri[j], k[i][j]));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.num_vertices(), trip)
}

/// Gradient of the P1 function with nodal values `u` on triangle `t`.
pub fn element_gradient(mesh: &Mesh, t: usize, u: &[C]) -> [C; 2] {
    let (g, _) = mesh.hat_gradients(t);
    let tri = mesh.triangles[t];
    let mut out = [ZERO; 2];
    for i in 0..3 {
        out[0] += u[tri[i]] * g[i].x;
        out[1] += u[tri[i]] * g[i].y;
    }
    out
}

#[derive(Debug)]
enum Backend {
    Direct(Skyline),
    Iterative(CsrMatrix),
}

/// Dirichlet solver with one factorisation of the interior block, reusable across traces.
#[derive(Debug)]
pub struct DirichletSolver {
    stiffness: CsrMatrix,
    boundary: Vec<usize>,
    interior: Vec<usize>,
    backend: Backend,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Nodal values on all mesh vertices.
    pub u: Vec<C>,
    /// Relative residual of the interior equations.
    pub residual: f64,
}

impl DirichletSolver {
    pub fn new(mesh: &Mesh, coeffs: &[CSym2]) -> Result<Self> {
        Self::build(mesh, coeffs, false)
    }

    /// Forces the preconditioned iterative backend.
    pub fn new_iterative(mesh: &Mesh, coeffs: &[CSym2]) -> Result<Self> {
        Self::build(mesh, coeffs, true)
    }

    fn build(mesh: &Mesh, coeffs: &[CSym2], iterative: bool) -> Result<Self> {
        if coeffs.len() != mesh.num_triangles() {
            return Err(Error::param(
                "coefficients",
                "one admittivity per element is required",
            ));
        }
        for (t, g) in coeffs.iter().enumerate() {
            let re = crate::geom::Sym2::new(g.xx.re, g.xy.re, g.yy.re);
            if !(re.eigenvalues().0 > 0.0) {
                return Err(Error::NotPositiveDefinite {
                    element: t,
                    eigenvalue: re.eigenvalues().0,
                });
            }
        }
        let stiffness = assemble_stiffness(mesh, coeffs);
        let boundary = mesh.boundary_nodes();
        let mut is_boundary = vec![false; mesh.num_vertices()];
        for &b in &boundary {
            is_boundary[b] = true;
        }
        let interior: Vec<usize> = (0..mesh.num_vertices())
            .filter(|&i| !is_boundary[i])
            .collect();
        let kii = stiffness.submatrix(&interior);
        let backend = if iterative {
            Backend::Iterative(kii)
        } else {
            let perm = rcm_ordering(&kii);
            if profile_size(&kii, &perm) > DIRECT_ENTRY_LIMIT {
                log::warn!("skyline profile too large; using the iterative solver");
                Backend::Iterative(kii)
            } else {
                Backend::Direct(Skyline::factor(&kii, perm)?)
            }
        };
        Ok(DirichletSolver {
            stiffness,
            boundary,
            interior,
            backend,
        })
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    /// Pivot ratio of the direct factorisation, if any.
    pub fn condition_estimate(&self) -> Option<f64> {
        match &self.backend {
            Backend::Direct(f) => Some(f.pivot_ratio),
            Backend::Iterative(_) => None,
        }
    }

    /// Solves with `u = trace` on the boundary nodes (given in loop order).
    pub fn solve(&self, trace: &[C]) -> Result<SolveResult> {
        if trace.len() != self.boundary.len() {
            return Err(Error::param(
                "trace",
                "one value per boundary node is required",
            ));
        }
        let n = self.stiffness.n;
        let mut u = vec![ZERO; n];
        for (&b, &v) in self.boundary.iter().zip(trace) {
            u[b] = v;
        }
        // rhs = −K_IΓ g
        let mut rhs = vec![ZERO; self.interior.len()];
        for (r, &i) in rhs.iter_mut().zip(&self.interior) {
            *r = -self.stiffness.row(i).map(|(j, v)| v * u[j]).sum::<C>();
        }
        let x = match &self.backend {
            Backend::Direct(f) => f.solve(&rhs),
            Backend::Iterative(kii) => cocg(kii, &rhs, SOLVER_TOL, 20 * kii.n + 100)?.0,
        };
        for (&i, v) in self.interior.iter().zip(x) {
            u[i] = v;
        }
        let rnorm = rhs.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let res = self
            .interior
            .iter()
            .map(|&i| {
                self.stiffness
                    .row(i)
                    .map(|(j, v)| v * u[j])
                    .sum::<C>()
                    .norm_sqr()
            })
            .sum::<f64>()
            .sqrt();
        let residual = if rnorm > 0.0 { res / rnorm } else { res };
        Ok(SolveResult { u, residual })
    }

    /// Boundary rows of `K u`, in loop order: the discrete conormal flux.
    pub fn flux(&self, u: &[C]) -> Vec<C> {
        self.boundary
            .iter()
            .map(|&b| self.stiffness.row(b).map(|(j, v)| v * u[j]).sum())
            .collect()
    }
}

pub fn solve_dirichlet(field: &AdmittivityField, trace: &[C]) -> Result<SolveResult> {
    let solver = DirichletSolver::new(field.mesh(), &complex_admittivity(field))?;
    solver.solve(trace)
}

/// Discretisation of boundary traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryBasis {
    /// P1 interpolants of `e^{inθ}`, `n = −N..=N`, stored in that order.
    Fourier { n_max: usize },
    /// Hat functions of the boundary vertices, in loop order.
    Nodal,
}

impl BoundaryBasis {
    pub fn dim(&self, boundary_nodes: usize) -> usize {
        match self {
            BoundaryBasis::Fourier { n_max } => 2 * n_max + 1,
            BoundaryBasis::Nodal => boundary_nodes,
        }
    }

    pub fn validate(&self, boundary_nodes: usize) -> Result<()> {
        if let BoundaryBasis::Fourier { n_max } = self {
            if *n_max < 1 || *n_max > boundary_nodes / 8 {
                return Err(Error::param(
                    "n_max",
                    format!(
                        "{n_max} must lie in [1, {}] for {boundary_nodes} boundary nodes",
                        boundary_nodes / 8
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Mode number of Fourier basis index `j`.
    pub fn mode(&self, j: usize) -> Option<i64> {
        match self {
            BoundaryBasis::Fourier { n_max } => Some(j as i64 - *n_max as i64),
            BoundaryBasis::Nodal => None,
        }
    }

    /// Index of Fourier mode `n`.
    pub fn index(&self, n: i64) -> Option<usize> {
        match self {
            BoundaryBasis::Fourier { n_max } if n.unsigned_abs() as usize <= *n_max => {
                Some((n + *n_max as i64) as usize)
            }
            _ => None,
        }
    }

    /// Nodal values of every basis function at the boundary points.
    pub fn columns(&self, points: &[Vec2]) -> Vec<Vec<C>> {
        match self {
            BoundaryBasis::Fourier { n_max } => {
                let n_max = *n_max as i64;
                (-n_max..=n_max)
                    .map(|n| {
                        points
                            .iter()
                            .map(|p| C::from_polar(1.0, n as f64 * p.y.atan2(p.x)))
                            .collect()
                    })
                    .collect()
            }
            BoundaryBasis::Nodal => (0..points.len())
                .map(|j| {
                    let mut c = vec![ZERO; points.len()];
                    c[j] = C::new(1.0, 0.0);
                    c
                })
                .collect(),
        }
    }

    /// Coefficients of the conjugate trace: `c'_n = conj(c_{−n})` for Fourier, `conj(c)` for nodal.
    pub fn conjugate_coefficients(&self, c: &[C]) -> Vec<C> {
        match self {
            BoundaryBasis::Fourier { .. } => c.iter().rev().map(|v| v.conj()).collect(),
            BoundaryBasis::Nodal => c.iter().map(|v| v.conj()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtnKind {
    Perturbed,
    Background,
    /// `B_{σ,ε} − B_{1,0}`.
    Gap,
}

impl DtnKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DtnKind::Perturbed => "perturbed",
            DtnKind::Background => "background",
            DtnKind::Gap => "gap",
        }
    }
}

/// `B_{jk} = <Λ φ_j, φ_k>` (bilinear, no conjugation), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DtNMatrix {
    pub kind: DtnKind,
    pub basis: BoundaryBasis,
    pub omega: f64,
    pub mesh_h: f64,
    pub radius: f64,
    pub solver_tol: f64,
    /// Boundary vertices in loop order.
    pub nodes: Vec<Vec2>,
    pub dim: usize,
    pub data: Vec<C>,
}

impl DtNMatrix {
    pub fn get(&self, j: usize, k: usize) -> C {
        self.data[j * self.dim + k]
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖B − Bᵀ‖_F`.
    pub fn asymmetry(&self) -> f64 {
        let mut s = 0.0;
        for j in 0..self.dim {
            for k in 0..self.dim {
                s += (self.get(j, k) - self.get(k, j)).norm_sqr();
            }
        }
        s.sqrt()
    }

    pub fn check_compatible(&self, other: &DtNMatrix) -> Result<()> {
        if self.basis != other.basis || self.dim != other.dim {
            return Err(Error::BasisMismatch(format!(
                "{:?} (dim {}) vs {:?} (dim {})",
                self.basis, self.dim, other.basis, other.dim
            )));
        }
        if self.nodes.len() != other.nodes.len()
            || self
                .nodes
                .iter()
                .zip(&other.nodes)
                .any(|(a, b)| (a - b).norm() > 1e-9 * self.radius.max(1.0))
        {
            return Err(Error::BasisMismatch("boundary nodes differ".into()));
        }
        Ok(())
    }

    /// `self − other` as a gap matrix.
    pub fn difference(&self, other: &DtNMatrix) -> Result<DtNMatrix> {
        self.check_compatible(other)?;
        Ok(DtNMatrix {
            kind: DtnKind::Gap,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
            ..self.clone()
        })
    }

    pub fn scaled(&self, s: C) -> DtNMatrix {
        DtNMatrix {
            data: self.data.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    /// `Re Σ_{jk} c_j B_{jk} c'_k` with `c'` the coefficients of the conjugate trace.
    pub fn conjugate_form(&self, c: &[C]) -> Result<f64> {
        if c.len() != self.dim {
            return Err(Error::BasisMismatch(format!(
                "{} coefficients for a basis of dimension {}",
                c.len(),
                self.dim
            )));
        }
        let cc = self.basis.conjugate_coefficients(c);
        Ok(self.bilinear(c, &cc).re)
    }

    /// `Σ_{jk} c_j B_{jk} d_k`.
    pub fn bilinear(&self, c: &[C], d: &[C]) -> C {
        let mut s = ZERO;
        for (j, cj) in c.iter().enumerate() {
            if *cj == ZERO {
                continue;
            }
            let row = &self.data[j * self.dim..(j + 1) * self.dim];
            s += cj * row.iter().zip(d).map(|(b, dk)| b * dk).sum::<C>();
        }
        s
    }
}

fn boundary_points(mesh: &Mesh) -> Vec<Vec2> {
    mesh.boundary_nodes()
        .iter()
        .map(|&i| mesh.vertices[i])
        .collect()
}

fn empty_dtn(mesh: &Mesh, basis: BoundaryBasis, omega: f64, kind: DtnKind) -> DtNMatrix {
    let nodes = boundary_points(mesh);
    let dim = basis.dim(nodes.len());
    DtNMatrix {
        kind,
        basis,
        omega,
        mesh_h: mesh.h,
        radius: mesh.radius(),
        solver_tol: SOLVER_TOL,
        nodes,
        dim,
        data: vec![ZERO; dim * dim],
    }
}

/// Assembles `B_{jk} = <Λ φ_j, φ_k>` for per-element admittivities `coeffs`, with one
/// factorisation shared by all right-hand sides.
pub fn assemble_dtn_matrix(
    mesh: &Mesh,
    coeffs: &[CSym2],
    basis: BoundaryBasis,
    omega: f64,
) -> Result<DtNMatrix> {
    let mut out = empty_dtn(mesh, basis, omega, DtnKind::Perturbed);
    basis.validate(out.nodes.len())?;
    let solver = DirichletSolver::new(mesh, coeffs)?;
    let cols = basis.columns(&out.nodes);
    let rows: Vec<Vec<C>> = cols
        .par_iter()
        .map(|g| {
            let sol = solver.solve(g)?;
            let r = solver.flux(&sol.u);
            Ok(cols
                .iter()
                .map(|gk| gk.iter().zip(&r).map(|(a, b)| a * b).sum())
                .collect())
        })
        .collect::<Result<_>>()?;
    for (j, row) in rows.into_iter().enumerate() {
        out.data[j * out.dim..(j + 1) * out.dim].copy_from_slice(&row);
    }
    Ok(out)
}

/// Perturbed, background and gap matrices for one field.
#[derive(Debug, Clone)]
pub struct DtnData {
    pub perturbed: DtNMatrix,
    pub background: DtNMatrix,
    /// `B_{σ,ε} − B_{1,0}` evaluated as `∫_D ∇u_σ^jᵀ(γ − I)∇u_1^k`, which avoids cancellation.
    pub gap: DtNMatrix,
}

/// Assembles perturbed and background DtN matrices and their difference.
///
/// The difference uses the exact discrete identity
/// `B_σ(j,k) − B_1(j,k) = Σ_{T⊂D} |T| ∇u_σ^jᵀ (γ − I) ∇u_1^k`,
/// where `u_σ^j`, `u_1^k` are the discrete solutions with traces `φ_j`, `φ_k`.
pub fn assemble_dtn_data(field: &AdmittivityField, basis: BoundaryBasis) -> Result<DtnData> {
    let mesh: &Arc<Mesh> = field.mesh();
    let coeffs = complex_admittivity(field);
    let ident = vec![CSym2::identity(); mesh.num_triangles()];
    let mut perturbed = empty_dtn(mesh, basis, field.omega(), DtnKind::Perturbed);
    basis.validate(perturbed.nodes.len())?;
    let mut background = empty_dtn(mesh, basis, field.omega(), DtnKind::Background);
    let mut gap = empty_dtn(mesh, basis, field.omega(), DtnKind::Gap);
    let dim = perturbed.dim;

    let s_sigma = DirichletSolver::new(mesh, &coeffs)?;
    let s_one = DirichletSolver::new(mesh, &ident)?;
    let cols = basis.columns(&perturbed.nodes);
    let incl: Vec<usize> = mesh.inclusion_triangles().collect();

    struct Column {
        row_sigma: Vec<C>,
        row_one: Vec<C>,
        grad_sigma: Vec<[C; 2]>,
        grad_one: Vec<[C; 2]>,
    }
    let columns: Vec<Column> = cols
        .par_iter()
        .map(|g| {
            let us = s_sigma.solve(g)?.u;
            let u1 = s_one.solve(g)?.u;
            let rs = s_sigma.flux(&us);
            let r1 = s_one.flux(&u1);
            let pair = |r: &[C]| -> Vec<C> {
                cols.iter()
                    .map(|gk| gk.iter().zip(r).map(|(a, b)| a * b).sum())
                    .collect()
            };
            Ok(Column {
                row_sigma: pair(&rs),
                row_one: pair(&r1),
                grad_sigma: incl
                    .iter()
                    .map(|&t| element_gradient(mesh, t, &us))
                    .collect(),
                grad_one: incl
                    .iter()
                    .map(|&t| element_gradient(mesh, t, &u1))
                    .collect(),
            })
        })
        .collect::<Result<_>>()?;

    for (j, c) in columns.iter().enumerate() {
        perturbed.data[j * dim..(j + 1) * dim].copy_from_slice(&c.row_sigma);
        background.data[j * dim..(j + 1) * dim].copy_from_slice(&c.row_one);
    }

    // (γ − I)∇u_1^k, scaled by the element area.
    let weights: Vec<(f64, CSym2)> = incl
        .iter()
        .map(|&t| {
            let g = coeffs[t];
            let d = CSym2 {
                xx: g.xx - 1.0,
                xy: g.xy,
                yy: g.yy - 1.0,
            };
            (mesh.signed_area(t), d)
        })
        .collect();
    let rows: Vec<Vec<C>> = (0..dim)
        .into_par_iter()
        .map(|j| {
            let gs = &columns[j].grad_sigma;
            (0..dim)
                .map(|k| {
                    let g1 = &columns[k].grad_one;
                    let mut s = ZERO;
                    for (e, (area, d)) in weights.iter().enumerate() {
                        s += d.bilinear(&gs[e], &g1[e]) * *area;
                    }
                    s
                })
                .collect()
        })
        .collect();
    for (j, row) in rows.into_iter().enumerate() {
        gap.data[j * dim..(j + 1) * dim].copy_from_slice(&row);
    }
    Ok(DtnData {
        perturbed,
        background,
        gap,
    })
}

/// How the test function `g` is extended into the domain in [`dtn_pairing_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extension {
    /// Discrete harmonic (Laplace) extension.
    Harmonic,
    /// Boundary values only, zero at interior nodes.
    Zero,
}

/// `<Λ f, g> = ∫ γ ∇u_f·∇E(g)` with `E(g)` the discrete harmonic extension.
pub fn dtn_pairing(field: &AdmittivityField, f: &[C], g: &[C]) -> Result<C> {
    dtn_pairing_with(field, f, g, Extension::Harmonic)
}

pub fn dtn_pairing_with(field: &AdmittivityField, f: &[C], g: &[C], ext: Extension) -> Result<C> {
    let mesh = field.mesh();
    let coeffs = complex_admittivity(field);
    let solver = DirichletSolver::new(mesh, &coeffs)?;
    let u = solver.solve(f)?.u;
    let v = match ext {
        Extension::Harmonic => {
            let ident = vec![CSym2::identity(); mesh.num_triangles()];
            DirichletSolver::new(mesh, &ident)?.solve(g)?.u
        }
        Extension::Zero => {
            let mut v = vec![ZERO; mesh.num_vertices()];
            for (&b, &x) in solver.boundary().iter().zip(g) {
                v[b] = x;
            }
            v
        }
    };
    Ok(energy_pairing(mesh, &coeffs, &u, &v))
}

/// `Σ_T |T| ∇uᵀ γ ∇v`.
pub fn energy_pairing(mesh: &Mesh, coeffs: &[CSym2], u: &[C], v: &[C]) -> C {
    (0..mesh.num_triangles())
        .map(|t| {
            let gu = element_gradient(mesh, t, u);
            let gv = element_gradient(mesh, t, v);
            coeffs[t].bilinear(&gu, &gv) * mesh.signed_area(t)
        })
        .sum()
}

/// `Re <(Λ_{σ,ε} − Λ_{1,0}) f, f̄>` for trace coefficients `c`.
pub fn energy_gap(perturbed: &DtNMatrix, background: &DtNMatrix, c: &[C]) -> Result<f64> {
    perturbed.difference(background)?.conjugate_form(c)
}

/// Outcome of checking the two-sided energy inequality for a pair of coefficient fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBoundsReport {
    pub lhs: f64,
    pub gap: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Checks
/// `∫(σ1+iωε1){(σ1+ω²ε1σ1⁻¹ε1)⁻¹ − σ2⁻¹}(σ1−iωε1)∇u1·∇ū1 ≤ Re<(Λ2 − Λ1)f, f̄> ≤ ∫{σ2+ω²ε2σ2⁻¹ε2 − σ1}∇u1·∇ū1`
/// on the discrete solutions. The slack is `5·h·∫|∇u1|²`, five times the first-order energy
/// error estimate.
pub fn energy_bounds_check(
    field1: &AdmittivityField,
    field2: &AdmittivityField,
    f: &[C],
) -> Result<EnergyBoundsReport> {
    use nalgebra::Matrix2;
    let mesh = field1.mesh();
    if !Arc::ptr_eq(mesh, field2.mesh()) && mesh.num_triangles() != field2.mesh().num_triangles() {
        return Err(Error::param("field2", "fields must live on the same mesh"));
    }
    if field1.omega() != field2.omega() {
        return Err(Error::param("field2", "fields must share the frequency"));
    }
    let w = field1.omega();
    let g1 = complex_admittivity(field1);
    let g2 = complex_admittivity(field2);
    let s1 = DirichletSolver::new(mesh, &g1)?;
    let s2 = DirichletSolver::new(mesh, &g2)?;
    let u1 = s1.solve(f)?.u;
    let fbar: Vec<C> = f.iter().map(|v| v.conj()).collect();
    let u1bar_trace = s1.solve(&fbar)?.u;
    let u2 = s2.solve(f)?.u;

    let inv = |m: &Matrix2<f64>| {
        m.try_inverse()
            .ok_or_else(|| Error::param("sigma", "singular"))
    };
    let (mut lhs, mut gap, mut rhs, mut energy) = (0.0, ZERO, 0.0, 0.0);
    for t in 0..mesh.num_triangles() {
        let area = mesh.signed_area(t);
        let gu = element_gradient(mesh, t, &u1);
        energy += area * (gu[0].norm_sqr() + gu[1].norm_sqr());
        if mesh.labels[t] == Region::Background {
            continue;
        }
        let sig1 = field1.sigma(t).to_matrix();
        let eps1 = field1.b()[t].to_matrix();
        let sig2 = field2.sigma(t).to_matrix();
        let eps2 = field2.b()[t].to_matrix();
        let s1inv = inv(&sig1)?;
        let s2inv = inv(&sig2)?;
        let inner = inv(&(sig1 + eps1 * s1inv * eps1 * (w * w)))? - s2inv;
        let left = sig1.map(|v| C::new(v, 0.0)) + eps1.map(|v| C::new(0.0, w * v));
        let right = sig1.map(|v| C::new(v, 0.0)) - eps1.map(|v| C::new(0.0, w * v));
        let m_lhs = left * inner.map(|v| C::new(v, 0.0)) * right;
        let m_rhs = sig2 + eps2 * s2inv * eps2 * (w * w) - sig1;
        let quad = |m: &Matrix2<C>| -> C {
            let mut s = ZERO;
            for i in 0..2 {
                for j in 0..2 {
                    s += m[(i, j)] * gu[j] * gu[i].conj();
                }
            }
            s
        };
        lhs += area * quad(&m_lhs).re;
        rhs += area * quad(&m_rhs.map(|v| C::new(v, 0.0))).re;
        let gu2 = element_gradient(mesh, t, &u2);
        let gv = element_gradient(mesh, t, &u1bar_trace);
        let d = CSym2 {
            xx: g2[t].xx - g1[t].xx,
            xy: g2[t].xy - g1[t].xy,
            yy: g2[t].yy - g1[t].yy,
        };
        gap += d.bilinear(&gu2, &gv) * area;
    }
    let slack = 5.0 * mesh.h * energy;
    let gap = gap.re;
    Ok(EnergyBoundsReport {
        lhs,
        gap,
        rhs,
        slack,
        pass: lhs <= gap + slack && gap <= rhs + slack,
    })
}
