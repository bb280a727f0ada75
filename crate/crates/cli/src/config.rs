//! Experiment configuration (TOML).

use std::path::{Path, PathBuf};

use enclosure::geom::Sym2;
use enclosure::indicator::{tau_max_for, LadderSpec, LADDER_POINTS};
use enclosure::mesh::ShapeSpec;
use enclosure::probes::ProbeSpec;
use enclosure::{Direction, Error, Result, Vec2};
use serde::Deserialize;
use sha2::{Digest, Sha256};

/// A coefficient given either as a scalar multiple of the identity or as `[xx, xy, yy]`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Scalar(f64),
    Matrix([f64; 3]),
}

impl Coefficient {
    pub fn to_sym(self) -> Sym2 {
        match self {
            Coefficient::Scalar(s) => Sym2::scalar(s),
            Coefficient::Matrix([xx, xy, yy]) => Sym2::new(xx, xy, yy),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "default_h")]
    pub h: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    #[serde(default)]
    pub omega: f64,
    pub a: Option<Coefficient>,
    pub b: Option<Coefficient>,
}

/// Original coefficients `σ = σ0 + α`, `ε = ε0 + β`, reduced before assembly.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Background {
    pub sigma0: f64,
    pub eps0: f64,
    pub alpha: Coefficient,
    pub beta: Coefficient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Cgo,
    Ml,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Probe {
    #[serde(default = "cgo")]
    pub family: Family,
    /// Number of equally spaced directions, starting at angle 0.
    #[serde(default = "sixteen")]
    pub directions: usize,
    /// Offset `t` of the exponential probes.
    #[serde(default)]
    pub t: f64,
    #[serde(default = "one")]
    pub tau_min: f64,
    /// Defaults to `0.3 / h`.
    pub tau_max: Option<f64>,
    #[serde(default = "ladder_points")]
    pub tau_points: usize,
    /// Accept `tau_max` above the mesh-resolution cap.
    #[serde(default)]
    pub allow_unresolved_tau: bool,
    #[serde(default = "half")]
    pub alpha: f64,
    /// Radius of the ring of Mittag-Leffler vertices; each vertex probes along its outward normal.
    #[serde(default = "three")]
    pub vertex_radius: f64,
    #[serde(default = "t_search")]
    pub t_search: [f64; 2],
    #[serde(default = "t_tol")]
    pub t_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Nodal,
    Fourier,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Basis {
    #[serde(default = "nodal")]
    pub kind: BasisKind,
    #[serde(default = "eight")]
    pub n_max: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default = "out_dir")]
    pub dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Validation {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "twenty")]
    pub energy_pairs: usize,
    #[serde(default = "twenty")]
    pub energy_traces: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub domain: Domain,
    /// Absent for a homogeneous domain.
    pub inclusion: Option<ShapeSpec>,
    #[serde(default)]
    pub coefficients: Coefficients,
    pub background: Option<Background>,
    #[serde(default)]
    pub probe: Probe,
    #[serde(default)]
    pub basis: Basis,
    #[serde(default)]
    pub output: Output,
    #[serde(default)]
    pub validation: Validation,
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn three() -> f64 {
    3.0
}
fn default_h() -> f64 {
    DEFAULT_H
}
fn sixteen() -> usize {
    16
}
fn eight() -> usize {
    8
}
fn twenty() -> usize {
    20
}
fn ladder_points() -> usize {
    LADDER_POINTS
}
fn cgo() -> Family {
    Family::Cgo
}
fn nodal() -> BasisKind {
    BasisKind::Nodal
}
fn t_search() -> [f64; 2] {
    [-3.9, -1.0]
}
fn t_tol() -> f64 {
    0.01
}
fn out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Default mesh size.
pub const DEFAULT_H: f64 = 0.02;

impl Default for Domain {
    fn default() -> Self {
        Domain {
            radius: 1.0,
            h: DEFAULT_H,
        }
    }
}

impl Default for Coefficients {
    fn default() -> Self {
        Coefficients {
            omega: 0.0,
            a: None,
            b: None,
        }
    }
}

impl Default for Probe {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

impl Default for Basis {
    fn default() -> Self {
        Basis {
            kind: BasisKind::Nodal,
            n_max: 8,
        }
    }
}

impl Default for Output {
    fn default() -> Self {
        Output { dir: out_dir() }
    }
}

impl Default for Validation {
    fn default() -> Self {
        Validation {
            enabled: false,
            energy_pairs: 20,
            energy_traces: 20,
        }
    }
}

fn bad(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let bytes = std::fs::read(path).map_err(|e| bad(&path.display().to_string(), e))?;
        let text =
            String::from_utf8(bytes.clone()).map_err(|e| bad(&path.display().to_string(), e))?;
        let cfg = Self::parse(&text)?;
        Ok((cfg, hex::encode(Sha256::digest(&bytes))))
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.domain;
        if !(d.radius > 0.0 && d.radius.is_finite()) {
            return Err(bad("domain.radius", "must be positive"));
        }
        if !(d.h > 0.0 && d.h < d.radius / 4.0) {
            return Err(bad(
                "domain.h",
                format!("{} must lie in (0, radius/4)", d.h),
            ));
        }
        if let Some(shape) = &self.inclusion {
            shape.validate().map_err(|e| bad("inclusion", e))?;
            let (_, rmax) = shape.radial_extent();
            if rmax >= d.radius {
                return Err(bad("inclusion", "must lie inside the domain"));
            }
        }
        let c = &self.coefficients;
        if !(c.omega >= 0.0 && c.omega.is_finite()) {
            return Err(bad("coefficients.omega", "must be nonnegative"));
        }
        match (&self.background, c.a, c.b) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(bad(
                    "coefficients.a/b",
                    "give either [coefficients] a, b or [background] alpha, beta, not both",
                ))
            }
            (None, None, _) | (None, _, None) if self.inclusion.is_some() => {
                return Err(bad(
                    "coefficients.a/b",
                    "required when an inclusion is present",
                ))
            }
            _ => {}
        }
        if let Some(bg) = &self.background {
            if !(bg.sigma0 >= 0.0) || !(bg.eps0 > 0.0) {
                return Err(bad("background", "need sigma0 >= 0 and eps0 > 0"));
            }
        }

        let p = &self.probe;
        if p.directions < 1 {
            return Err(bad("probe.directions", "must be at least 1"));
        }
        if !(p.tau_min > 0.0) {
            return Err(bad("probe.tau_min", "must be positive"));
        }
        if p.tau_points < 2 {
            return Err(bad("probe.tau_points", "must be at least 2"));
        }
        let tau_max = self.tau_max();
        if !(tau_max > p.tau_min) {
            return Err(bad(
                "probe.tau_max",
                format!("{tau_max} must exceed tau_min"),
            ));
        }
        let cap = tau_max_for(d.h);
        if tau_max > cap * (1.0 + 1e-12) {
            if p.allow_unresolved_tau {
                log::warn!("probe.tau_max = {tau_max} exceeds the mesh cap {cap:.3}");
            } else {
                return Err(bad(
                    "probe.tau_max",
                    format!(
                        "{tau_max} exceeds 0.3/h = {cap:.3}; set allow_unresolved_tau to override"
                    ),
                ));
            }
        }
        if self.probe.family == Family::Ml {
            if !(p.alpha > 0.0 && p.alpha < 1.0) {
                return Err(bad("probe.alpha", "must lie in (0, 1)"));
            }
            let [lo, hi] = p.t_search;
            if !(lo < hi && hi < 0.0) {
                return Err(bad("probe.t_search", "need t_lo < t_hi < 0"));
            }
            if !(p.t_tol > 0.0) {
                return Err(bad("probe.t_tol", "must be positive"));
            }
            for (y, theta) in self.vertices() {
                let spec = ProbeSpec::mittag_leffler(y, p.alpha, theta, theta.perp(), 0.0, 1.0)?;
                spec.check_cone_condition(d.radius).map_err(|_| {
                    bad(
                        "probe.vertex_radius",
                        format!("cone at {y:?} meets the domain"),
                    )
                })?;
            }
        }
        if self.basis.kind == BasisKind::Fourier && self.basis.n_max < 1 {
            return Err(bad("basis.n_max", "must be at least 1"));
        }
        Ok(())
    }

    pub fn tau_max(&self) -> f64 {
        self.probe
            .tau_max
            .unwrap_or_else(|| tau_max_for(self.domain.h))
    }

    pub fn ladder(&self) -> LadderSpec {
        LadderSpec {
            tau_min: self.probe.tau_min,
            tau_max: self.tau_max(),
            points: self.probe.tau_points,
        }
    }

    pub fn directions(&self) -> Vec<Direction> {
        let n = self.probe.directions;
        (0..n)
            .map(|k| Direction::from_angle(std::f64::consts::TAU * k as f64 / n as f64))
            .collect()
    }

    /// Mittag-Leffler vertices on the ring with their outward directions.
    pub fn vertices(&self) -> Vec<(Vec2, Direction)> {
        self.directions()
            .into_iter()
            .map(|th| (th.vec() * self.probe.vertex_radius, th))
            .collect()
    }

    pub fn basis(&self) -> enclosure::fem::BoundaryBasis {
        match self.basis.kind {
            BasisKind::Nodal => enclosure::fem::BoundaryBasis::Nodal,
            BasisKind::Fourier => enclosure::fem::BoundaryBasis::Fourier {
                n_max: self.basis.n_max,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let cfg = ExperimentConfig::parse("").unwrap();
        assert_eq!(cfg.domain.h, DEFAULT_H);
        assert!(cfg.inclusion.is_none());
        assert_eq!(cfg.probe.tau_points, LADDER_POINTS);
        assert_eq!(cfg.directions().len(), 16);
    }

    #[test]
    fn full_config() {
        let text = r#"
            [domain]
            h = 0.05
            [inclusion]
            kind = "disk"
            center = [0.1, 0.0]
            radius = 0.3
            [coefficients]
            omega = 1.0
            a = [1.0, 0.0, 2.0]
            b = 0.5
            [probe]
            family = "ml"
            alpha = 0.5
        "#;
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(
            cfg.coefficients.a.unwrap().to_sym(),
            Sym2::new(1.0, 0.0, 2.0)
        );
        assert_eq!(cfg.vertices().len(), 16);
    }

    #[test]
    fn field_level_errors() {
        let e = ExperimentConfig::parse("[domain]\nh = 0.5\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("domain.h"), "{e}");
        let e = ExperimentConfig::parse("[probe]\ntau_max = 100.0\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("probe.tau_max"), "{e}");
        let e = ExperimentConfig::parse("[domain]\nwidth = 1\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("width"), "{e}");
        let e = ExperimentConfig::parse(
            "[inclusion]\nkind = \"disk\"\ncenter = [0, 0]\nradius = 0.3\n",
        )
        .unwrap_err()
        .to_string();
        assert!(e.contains("coefficients.a/b"), "{e}");
    }
}
