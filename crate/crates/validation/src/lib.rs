//! Benchmark configurations shared by the acceptance suite.

use std::sync::Arc;

use enclosure::admittivity::AdmittivityField;
use enclosure::fem::{assemble_dtn_data, BoundaryBasis, DtnData};
use enclosure::geom::Sym2;
use enclosure::mesh::{build_disk_mesh, Mesh, ShapeSpec};
use enclosure::{Result, Vec2};

/// Default mesh size of the benchmarks.
pub const H: f64 = 0.02;

/// A meshed benchmark with constant inclusion coefficients `a`, `b` at frequency `omega`.
pub struct Benchmark {
    pub shape: ShapeSpec,
    pub mesh: Arc<Mesh>,
    pub field: AdmittivityField,
}

impl Benchmark {
    pub fn new(shape: ShapeSpec, h: f64, omega: f64, a: Sym2, b: Sym2) -> Result<Self> {
        let mesh = Arc::new(build_disk_mesh(1.0, h, Some(&shape))?);
        let field = AdmittivityField::constant(mesh.clone(), omega, a, b)?;
        Ok(Benchmark { shape, mesh, field })
    }

    /// Centred disk of radius 0.5 with `a = I`, `b = I/2`, `ω = 1`.
    pub fn positive_jump(h: f64) -> Result<Self> {
        Self::new(
            ShapeSpec::disk(Vec2::zeros(), 0.5),
            h,
            1.0,
            Sym2::IDENTITY,
            Sym2::scalar(0.5),
        )
    }

    /// Centred disk of radius 0.5 with `a = −I/2`, `b = I`.
    pub fn negative_jump(h: f64, omega: f64) -> Result<Self> {
        Self::new(
            ShapeSpec::disk(Vec2::zeros(), 0.5),
            h,
            omega,
            Sym2::scalar(-0.5),
            Sym2::IDENTITY,
        )
    }

    /// Disk of radius 0.3 centred at `(0.3, 0)` with `a = I`, `b = I/2`, `ω = 1`.
    pub fn off_center(h: f64) -> Result<Self> {
        Self::new(
            ShapeSpec::disk(Vec2::new(0.3, 0.0), 0.3),
            h,
            1.0,
            Sym2::IDENTITY,
            Sym2::scalar(0.5),
        )
    }

    pub fn dtn(&self, basis: BoundaryBasis) -> Result<DtnData> {
        assemble_dtn_data(&self.field, basis)
    }
}
