//! Subcommand implementations.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use enclosure::admittivity::{
    complex_admittivity, expand_background, jump_analysis, reduce_background, AdmittivityField,
    JumpSign, ReductionInput,
};
use enclosure::fem::{
    analytic_two_layer_dtn, assemble_dtn_data, assemble_dtn_matrix, energy_bounds_check, load_dtn,
    save_dtn, BoundaryBasis, DtNMatrix, SOLVER_TOL,
};
use enclosure::geom::Sym2;
use enclosure::indicator::{
    bracket_from_trials, classify, cone_carving, convex_hull_estimate, indicator_series,
    support_slope_fit, tau_ladder, transition_search_ml, Classification, IndicatorSeries,
    RegionEstimate, Transition, Trend, Trial, RASTER,
};
use enclosure::mesh::{build_disk_mesh, support_function_exact, Mesh, ShapeSpec};
use enclosure::mittag::{ml_eval_with_regime, MLParams};
use enclosure::probes::ProbeSpec;
use enclosure::{Direction, Error, Result, Vec2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, Family};
use crate::output::{num, read_csv, region_svg, write_csv};

type C = Complex64;

pub const MESH_FILE: &str = "mesh.txt";
pub const PERTURBED_FILE: &str = "dtn_perturbed.txt";
pub const BACKGROUND_FILE: &str = "dtn_background.txt";
pub const GAP_FILE: &str = "dtn_gap.txt";
pub const INDICATOR_FILE: &str = "indicator.csv";

pub const INDICATOR_COLUMNS: [&str; 12] = [
    "family", "alpha", "theta_x", "theta_y", "y_x", "y_y", "t", "tau", "I", "logabsI", "noise", "J",
];

pub struct Context {
    pub cfg: ExperimentConfig,
    pub hash: String,
    pub out: PathBuf,
    pub validate: bool,
    pub seed: u64,
}

impl Context {
    pub fn new(
        cfg: ExperimentConfig,
        hash: String,
        out: Option<PathBuf>,
        validate: bool,
        seed: u64,
    ) -> Result<Self> {
        let out = out.unwrap_or_else(|| cfg.output.dir.clone());
        std::fs::create_dir_all(&out)
            .map_err(|e| Error::Config(format!("output.dir {}: {e}", out.display())))?;
        let validate = validate || cfg.validation.enabled;
        Ok(Context {
            cfg,
            hash,
            out,
            validate,
            seed,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn provenance(&self, command: &str) -> Vec<String> {
        vec![
            format!("enclosure {} {command}", env!("CARGO_PKG_VERSION")),
            format!("config_sha256 {}", self.hash),
            format!("mesh_h {}", self.cfg.domain.h),
            format!("solver_tol {SOLVER_TOL:e}"),
        ]
    }

    fn mesh(&self) -> Result<Arc<Mesh>> {
        let d = &self.cfg.domain;
        Ok(Arc::new(build_disk_mesh(
            d.radius,
            d.h,
            self.cfg.inclusion.as_ref(),
        )?))
    }

    /// Reduced field and, when the original background is given, the reduction input.
    fn field(&self, mesh: &Arc<Mesh>) -> Result<(AdmittivityField, Option<ReductionInput>)> {
        let c = &self.cfg.coefficients;
        if let Some(bg) = &self.cfg.background {
            let input = ReductionInput::constant(
                mesh,
                bg.sigma0,
                bg.eps0,
                c.omega,
                bg.alpha.to_sym(),
                bg.beta.to_sym(),
            );
            return Ok((reduce_background(mesh.clone(), &input)?, Some(input)));
        }
        match (c.a, c.b) {
            (Some(a), Some(b)) => Ok((
                AdmittivityField::constant(mesh.clone(), c.omega, a.to_sym(), b.to_sym())?,
                None,
            )),
            _ => Ok((AdmittivityField::homogeneous(mesh.clone(), c.omega), None)),
        }
    }
}

fn missing(path: &Path, producer: &str) -> Error {
    Error::Config(format!(
        "{} not found; run `{producer}` first",
        path.display()
    ))
}

pub fn cmd_mesh(ctx: &Context) -> Result<()> {
    let mesh = ctx.mesh()?;
    mesh.save(&ctx.path(MESH_FILE), &ctx.provenance("mesh"))?;
    log::info!(
        "mesh: {} vertices, {} triangles, {} inclusion triangles",
        mesh.num_vertices(),
        mesh.num_triangles(),
        mesh.inclusion_triangles().count()
    );
    Ok(())
}

pub fn cmd_dtn(ctx: &Context) -> Result<()> {
    let mesh = ctx.mesh()?;
    let (field, _) = ctx.field(&mesh)?;
    let data = assemble_dtn_data(&field, ctx.cfg.basis())?;
    let prov = ctx.provenance("dtn");
    save_dtn(&data.perturbed, &ctx.path(PERTURBED_FILE), &prov)?;
    save_dtn(&data.background, &ctx.path(BACKGROUND_FILE), &prov)?;
    save_dtn(&data.gap, &ctx.path(GAP_FILE), &prov)?;
    log::info!(
        "dtn: dimension {}, gap Frobenius norm {:e}, asymmetry {:e}",
        data.gap.dim,
        data.gap.frobenius(),
        data.gap.asymmetry()
    );
    Ok(())
}

/// The gap matrix from the dtn outputs, preferring the directly assembled difference.
fn load_gap(ctx: &Context) -> Result<DtNMatrix> {
    let gap_path = ctx.path(GAP_FILE);
    let gap = if gap_path.exists() {
        load_dtn(&gap_path)?
    } else {
        let p = ctx.path(PERTURBED_FILE);
        let b = ctx.path(BACKGROUND_FILE);
        if !p.exists() {
            return Err(missing(&p, "dtn"));
        }
        if !b.exists() {
            return Err(missing(&b, "dtn"));
        }
        load_dtn(&p)?.difference(&load_dtn(&b)?)?
    };
    if (gap.mesh_h - ctx.cfg.domain.h).abs() > 1e-12 {
        log::warn!(
            "DtN data were assembled with h = {}, config has h = {}",
            gap.mesh_h,
            ctx.cfg.domain.h
        );
    }
    Ok(gap)
}

fn series_rows(
    family: &str,
    alpha: f64,
    y: Vec2,
    s: &IndicatorSeries,
    rows: &mut Vec<Vec<String>>,
) {
    for k in 0..s.taus.len() {
        let v = s.values[k];
        rows.push(vec![
            family.to_string(),
            num(alpha),
            num(s.probe.theta.x()),
            num(s.probe.theta.y()),
            num(y.x),
            num(y.y),
            num(s.probe.t),
            num(s.taus[k]),
            num(v),
            num(v.abs().ln()),
            num(s.noise[k]),
            s.oracle.as_ref().map(|j| num(j[k])).unwrap_or_default(),
        ]);
    }
}

pub fn cmd_indicate(ctx: &Context) -> Result<()> {
    let gap = load_gap(ctx)?;
    // Ground truth is only touched in validation mode.
    let truth = if ctx.validate {
        Some(ctx.mesh()?)
    } else {
        None
    };
    let cfg = &ctx.cfg;
    let mut rows = Vec::new();
    match cfg.probe.family {
        Family::Cgo => {
            let taus = tau_ladder(cfg.probe.tau_min, cfg.tau_max(), cfg.probe.tau_points)?;
            for th in cfg.directions() {
                let probe = ProbeSpec::cgo(th, th.perp(), cfg.probe.t, 1.0)?;
                let mut s = indicator_series(&gap, &probe, &taus)?;
                if let Some(m) = &truth {
                    s = s.with_oracle(m)?;
                }
                series_rows("cgo", 1.0, Vec2::zeros(), &s, &mut rows);
            }
        }
        Family::Ml => {
            let p = &cfg.probe;
            for (y, th) in cfg.vertices() {
                let interval = (p.t_search[0], p.t_search[1]);
                match transition_search_ml(&gap, p.alpha, y, th, interval, &cfg.ladder(), p.t_tol) {
                    Ok(tr) => {
                        log::info!(
                            "vertex ({:.3}, {:.3}): h_alpha = {:.4}",
                            y.x,
                            y.y,
                            tr.h_alpha
                        );
                        for trial in tr.trials {
                            match trial.series {
                                Some(mut s) => {
                                    if let Some(m) = &truth {
                                        s = s.with_oracle(m)?;
                                    }
                                    series_rows("ml", p.alpha, y, &s, &mut rows);
                                }
                                None => rows.push(overflow_row(p.alpha, y, &th, trial.t)),
                            }
                        }
                    }
                    Err(e @ Error::NoTransition { .. }) => {
                        log::warn!("vertex ({:.3}, {:.3}): {e}", y.x, y.y);
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }
    write_csv(
        &ctx.path(INDICATOR_FILE),
        &ctx.provenance("indicate"),
        &INDICATOR_COLUMNS,
        &rows,
    )
}

/// Marks a trial whose probe overflowed before the first ladder value.
fn overflow_row(alpha: f64, y: Vec2, th: &Direction, t: f64) -> Vec<String> {
    vec![
        "ml".into(),
        num(alpha),
        num(th.x()),
        num(th.y()),
        num(y.x),
        num(y.y),
        num(t),
        num(0.0),
        "inf".into(),
        "inf".into(),
        num(0.0),
        String::new(),
    ]
}

struct Group {
    family: String,
    alpha: f64,
    theta: Direction,
    y: Vec2,
    t: f64,
    taus: Vec<f64>,
    values: Vec<f64>,
    noise: Vec<f64>,
    j: Vec<Option<f64>>,
}

fn parse_f(s: &str, col: &str, line: usize) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse {
        path: INDICATOR_FILE.into(),
        line,
        msg: format!("column {col}: `{s}` is not a number"),
    })
}

fn read_groups(path: &Path) -> Result<Vec<Group>> {
    let (header, rows) = read_csv(path)?;
    let col = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("{}: missing column {name}", path.display())))
    };
    let idx: Vec<usize> = INDICATOR_COLUMNS
        .iter()
        .map(|c| col(c))
        .collect::<Result<_>>()?;
    let mut groups: Vec<Group> = Vec::new();
    let mut index: HashMap<Vec<String>, usize> = HashMap::new();
    for (line, r) in rows.iter().enumerate() {
        let key: Vec<String> = idx[..7].iter().map(|&i| r[i].clone()).collect();
        let get = |k: usize| parse_f(&r[idx[k]], INDICATOR_COLUMNS[k], line + 2);
        let g = match index.get(&key) {
            Some(&g) => g,
            None => {
                let theta = Direction::normalize(Vec2::new(get(2)?, get(3)?))?;
                groups.push(Group {
                    family: r[idx[0]].clone(),
                    alpha: get(1)?,
                    theta,
                    y: Vec2::new(get(4)?, get(5)?),
                    t: get(6)?,
                    taus: Vec::new(),
                    values: Vec::new(),
                    noise: Vec::new(),
                    j: Vec::new(),
                });
                index.insert(key, groups.len() - 1);
                groups.len() - 1
            }
        };
        let grp = &mut groups[g];
        grp.taus.push(get(7)?);
        grp.values.push(get(8)?);
        grp.noise.push(get(10)?);
        let j = &r[idx[11]];
        grp.j.push(if j.is_empty() {
            None
        } else {
            Some(parse_f(j, "J", line + 2)?)
        });
    }
    Ok(groups)
}

fn group_series(g: &Group) -> Result<IndicatorSeries> {
    let probe = if g.family == "ml" {
        ProbeSpec::mittag_leffler(g.y, g.alpha, g.theta, g.theta.perp(), g.t, 1.0)?
    } else {
        ProbeSpec::cgo(g.theta, g.theta.perp(), g.t, 1.0)?
    };
    let mut s = IndicatorSeries::new(probe, g.taus.clone(), g.values.clone())?;
    s.noise = g.noise.clone();
    if g.j.iter().all(Option::is_some) {
        s.oracle = Some(g.j.iter().map(|v| v.unwrap()).collect());
    }
    Ok(s)
}

pub fn cmd_reconstruct(ctx: &Context, input: Option<PathBuf>) -> Result<()> {
    let path = input.unwrap_or_else(|| ctx.path(INDICATOR_FILE));
    if !path.exists() {
        return Err(missing(&path, "indicate"));
    }
    let groups = read_groups(&path)?;
    let radius = ctx.cfg.domain.radius;
    let prov = ctx.provenance("reconstruct");
    let truth = if ctx.validate {
        ctx.cfg.inclusion.as_ref()
    } else {
        None
    };
    let est = match ctx.cfg.probe.family {
        Family::Cgo => {
            let mut fits = Vec::new();
            for g in groups.iter().filter(|g| g.family == "cgo") {
                fits.push(support_slope_fit(&group_series(g)?)?);
            }
            let rows: Vec<Vec<String>> = fits
                .iter()
                .map(|f| {
                    vec![
                        num(f.theta.x()),
                        num(f.theta.y()),
                        num(f.t),
                        num(f.h_hat),
                        num(f.slope),
                        num(f.intercept),
                        num(f.residual),
                        num(f.window.0),
                        num(f.window.1),
                        f.points.to_string(),
                        f.low_confidence.to_string(),
                    ]
                })
                .collect();
            write_csv(
                &ctx.path("fits.csv"),
                &prov,
                &[
                    "theta_x",
                    "theta_y",
                    "t",
                    "h_hat",
                    "slope",
                    "intercept",
                    "residual",
                    "tau_lo",
                    "tau_hi",
                    "points",
                    "low_confidence",
                ],
                &rows,
            )?;
            let hull = convex_hull_estimate(&fits, radius)?;
            let rows: Vec<Vec<String>> = hull
                .polygon
                .iter()
                .map(|p| vec![num(p.x), num(p.y)])
                .collect();
            write_csv(&ctx.path("hull.csv"), &prov, &["x", "y"], &rows)?;
            std::fs::write(ctx.path("hull.svg"), region_svg(radius, truth, &hull))?;
            hull
        }
        Family::Ml => {
            let transitions = ml_transitions(&groups)?;
            let carved = cone_carving(&transitions, radius, RASTER)?;
            let rows: Vec<Vec<String>> = carved
                .cones
                .iter()
                .zip(&transitions)
                .map(|(c, tr)| {
                    vec![
                        num(c.y.x),
                        num(c.y.y),
                        num(c.theta.x()),
                        num(c.theta.y()),
                        num(c.alpha),
                        num(c.h_alpha),
                        num(c.cone.vertex.x),
                        num(c.cone.vertex.y),
                        tr.low_confidence.to_string(),
                    ]
                })
                .collect();
            write_csv(
                &ctx.path("cones.csv"),
                &prov,
                &[
                    "y_x",
                    "y_y",
                    "theta_x",
                    "theta_y",
                    "alpha",
                    "h_alpha",
                    "vertex_x",
                    "vertex_y",
                    "low_confidence",
                ],
                &rows,
            )?;
            let mask = carved.mask.as_ref().expect("carving produces a mask");
            let mut text: String = prov.iter().map(|l| format!("# {l}\n")).collect();
            text.push_str(&format!(
                "# {} x {} cells on [-{radius}, {radius}]^2, first row at the bottom\n",
                mask.n, mask.n
            ));
            for i in 0..mask.n {
                text.extend(mask.cells[i * mask.n..(i + 1) * mask.n].iter().map(|&c| {
                    if c {
                        '1'
                    } else {
                        '0'
                    }
                }));
                text.push('\n');
            }
            std::fs::write(ctx.path("mask.txt"), text)?;
            std::fs::write(ctx.path("cones.svg"), region_svg(radius, truth, &carved))?;
            carved
        }
    };
    if let Some(shape) = truth {
        report_containment(ctx, &est, shape)?;
    }
    Ok(())
}

/// Rebuilds each vertex's bisection from its recorded trials.
fn ml_transitions(groups: &[Group]) -> Result<Vec<Transition>> {
    let mut order: Vec<(Vec2, Direction, f64)> = Vec::new();
    let mut trials: Vec<Vec<Trial>> = Vec::new();
    for g in groups.iter().filter(|g| g.family == "ml") {
        let k = match order
            .iter()
            .position(|(y, th, _)| *y == g.y && th == &g.theta)
        {
            Some(k) => k,
            None => {
                order.push((g.y, g.theta, g.alpha));
                trials.push(Vec::new());
                order.len() - 1
            }
        };
        let trial = if g.values.iter().any(|v| !v.is_finite()) {
            Trial {
                t: g.t,
                class: Classification {
                    trend: Trend::Growth,
                    low_confidence: true,
                    up: 0,
                    down: 0,
                },
                series: None,
            }
        } else {
            let s = group_series(g)?;
            Trial {
                t: g.t,
                class: classify(&s),
                series: Some(s),
            }
        };
        trials[k].push(trial);
    }
    let mut out = Vec::new();
    for ((y, theta, alpha), trials) in order.into_iter().zip(trials) {
        let Some((lo, hi)) = bracket_from_trials(&trials) else {
            log::warn!(
                "vertex ({:.3}, {:.3}): recorded trials do not bracket a transition",
                y.x,
                y.y
            );
            continue;
        };
        let low_confidence = trials.iter().any(|t| t.class.low_confidence);
        out.push(Transition {
            y,
            theta,
            alpha,
            h_alpha: hi,
            bracket: (lo, hi),
            trials,
            low_confidence,
        });
    }
    Ok(out)
}

fn report_containment(ctx: &Context, est: &RegionEstimate, shape: &ShapeSpec) -> Result<()> {
    let contains = est.contains_shape(shape);
    let ratio = est.area() / shape.area();
    let omega_area = std::f64::consts::PI * ctx.cfg.domain.radius.powi(2);
    let text = format!(
        "contains_true_inclusion {contains}\narea_ratio {}\nexcluded_fraction {}\n",
        num(ratio),
        num(1.0 - est.area() / omega_area)
    );
    println!("{}", text.trim_end());
    let mut out: String = ctx
        .provenance("reconstruct")
        .iter()
        .map(|l| format!("# {l}\n"))
        .collect();
    out.push_str(&text);
    std::fs::write(ctx.path("containment.txt"), out)?;
    Ok(())
}

/// `start:end:count` grid.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let err = || Error::Config(format!("grid `{s}`: expected start:end:count"));
    if parts.len() != 3 {
        return Err(err());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| err())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| err())?;
    let n: usize = parts[2].trim().parse().map_err(|_| err())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(err());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect())
}

pub fn cmd_mleval(out: &Path, alpha: f64, re: &str, im: &str) -> Result<()> {
    let params = MLParams::new(alpha).map_err(|e| Error::Config(format!("alpha: {e}")))?;
    let xs = parse_range(re)?;
    let ys = parse_range(im)?;
    std::fs::create_dir_all(out)?;
    let mut rows = Vec::new();
    for &y in &ys {
        for &x in &xs {
            let (v, regime) = ml_eval_with_regime(&params, C::new(x, y))?;
            rows.push(vec![
                num(alpha),
                num(x),
                num(y),
                num(v.re),
                num(v.im),
                regime.as_str().to_string(),
            ]);
        }
    }
    let prov = vec![
        format!("enclosure {} mleval", env!("CARGO_PKG_VERSION")),
        format!("alpha {alpha}"),
        format!("accuracy {:e}", params.accuracy),
    ];
    write_csv(
        &out.join("mleval.csv"),
        &prov,
        &["alpha", "re_z", "im_z", "re_E", "im_E", "regime"],
        &rows,
    )
}

struct Report {
    lines: Vec<String>,
    failures: usize,
}

impl Report {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        let line = format!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        println!("{line}");
        self.lines.push(line);
    }
}

fn random_spd(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Sym2 {
    let (l1, l2) = (rng.gen_range(lo..hi), rng.gen_range(lo..hi));
    let (s, c) = rng.gen_range(0.0..std::f64::consts::PI).sin_cos();
    Sym2::new(
        c * c * l1 + s * s * l2,
        c * s * (l1 - l2),
        s * s * l1 + c * c * l2,
    )
}

fn fourier_n(mesh: &Mesh) -> usize {
    (mesh.boundary.len() / 8).min(8)
}

pub fn cmd_validate(ctx: &Context) -> Result<()> {
    let cfg = &ctx.cfg;
    let mesh = ctx.mesh()?;
    let (field, input) = ctx.field(&mesh)?;
    let omega = cfg.coefficients.omega;
    let mut rep = Report {
        lines: Vec::new(),
        failures: 0,
    };
    let basis = BoundaryBasis::Fourier {
        n_max: fourier_n(&mesh),
    };

    // Reduction scaling: original DtN = (σ0 − iωε0)·reduced DtN.
    let input = match input {
        Some(i) => i,
        None => {
            let (al, be) = expand_background(
                1.0,
                1.0,
                omega,
                &field.a()[mesh.inclusion_triangles().next().unwrap_or(0)],
                &field.b()[mesh.inclusion_triangles().next().unwrap_or(0)],
            );
            ReductionInput::constant(&mesh, 1.0, 1.0, omega, al, be)
        }
    };
    let reduced = reduce_background(mesh.clone(), &input)?;
    let orig = assemble_dtn_matrix(&mesh, &input.original_admittivity(&mesh), basis, omega)?;
    let red = assemble_dtn_matrix(&mesh, &complex_admittivity(&reduced), basis, omega)?;
    let diff = orig
        .difference(&red.scaled(input.background_factor()))?
        .frobenius()
        / orig.frobenius();
    rep.check(
        "reduction_scaling",
        diff <= 1e-8,
        format!("relative Frobenius difference {diff:e}"),
    );

    // Two-sided energy inequality on random coefficient pairs and traces.
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let nodes: Vec<Vec2> = mesh
        .boundary_nodes()
        .iter()
        .map(|&i| mesh.vertices[i])
        .collect();
    let cols = basis.columns(&nodes);
    let (mut fails, mut total) = (0, 0);
    for _ in 0..cfg.validation.energy_pairs {
        let mk = |rng: &mut ChaCha8Rng| {
            let s = random_spd(rng, 0.5, 3.0);
            let e = random_spd(rng, 0.0, 2.0);
            AdmittivityField::constant(mesh.clone(), omega, s.sub(&Sym2::IDENTITY), e)
        };
        let f1 = mk(&mut rng)?;
        let f2 = mk(&mut rng)?;
        for _ in 0..cfg.validation.energy_traces {
            let coef: Vec<C> = (0..cols.len())
                .map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let trace: Vec<C> = (0..nodes.len())
                .map(|i| cols.iter().zip(&coef).map(|(c, a)| c[i] * a).sum())
                .collect();
            let r = energy_bounds_check(&f1, &f2, &trace)?;
            total += 1;
            if !r.pass {
                fails += 1;
            }
        }
    }
    rep.check(
        "energy_inequality",
        fails == 0,
        format!("{fails} failures in {total} checks"),
    );

    // Sign of the indicator at the true support value.
    if let Some(shape) = &cfg.inclusion {
        let gap = assemble_dtn_data(&field, cfg.basis())?.gap;
        let taus = tau_ladder(cfg.probe.tau_min, cfg.tau_max(), cfg.probe.tau_points)?;
        for th in cfg
            .directions()
            .into_iter()
            .step_by((cfg.probe.directions / 4).max(1))
        {
            let jr = jump_analysis(&field, &th, 2.0 * cfg.domain.h)?;
            let hd = support_function_exact(shape, &th);
            let s = indicator_series(&gap, &ProbeSpec::cgo(th, th.perp(), hd, 1.0)?, &taus)?;
            let tail = &s.values[s.values.len() / 2..];
            let name = format!("indicator_sign[theta={:.4}]", th.angle());
            match jr.sign {
                JumpSign::Positive => {
                    let slack =
                        5.0 * cfg.domain.h * tail.iter().map(|v| v.abs()).fold(0.0, f64::max);
                    let worst = tail.iter().cloned().fold(f64::INFINITY, f64::min);
                    rep.check(
                        &name,
                        worst >= -slack,
                        format!("positive jump, min I = {worst:e}"),
                    );
                }
                JumpSign::Negative if omega < jr.omega_max => {
                    let worst = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    rep.check(
                        &name,
                        worst < 0.0,
                        format!("negative jump, max I = {worst:e}"),
                    );
                }
                other => {
                    rep.lines.push(format!(
                        "SKIP {name}: jump {other:?}, omega_max {}",
                        jr.omega_max
                    ));
                }
            }
        }

        // Separation-of-variables oracle for a centred disk with scalar coefficients.
        if let ShapeSpec::Disk { center, radius } = shape {
            let a = field.a()[mesh.inclusion_triangles().next().unwrap_or(0)];
            let b = field.b()[mesh.inclusion_triangles().next().unwrap_or(0)];
            let scalar = a.xy == 0.0 && a.xx == a.yy && b.xy == 0.0 && b.xx == b.yy;
            if center[0] == 0.0 && center[1] == 0.0 && cfg.domain.radius == 1.0 && scalar {
                let k = C::new(1.0 + a.xx, -omega * b.xx);
                let dtn = assemble_dtn_matrix(&mesh, &complex_admittivity(&field), basis, omega)?;
                let mut worst: f64 = 0.0;
                for n in 1..=fourier_n(&mesh) as i64 {
                    let v = dtn.get(basis.index(n).unwrap(), basis.index(-n).unwrap())
                        / std::f64::consts::TAU;
                    let exact = analytic_two_layer_dtn(*radius, k, n)?;
                    worst = worst.max((v - exact).norm() / exact.norm());
                }
                rep.check(
                    "two_layer_oracle",
                    worst <= 0.02,
                    format!("max relative error {worst:e}"),
                );
            }
        }
    } else {
        let gap = assemble_dtn_data(&field, basis)?.gap;
        let norm = gap.frobenius();
        rep.check(
            "empty_inclusion_gap",
            norm == 0.0,
            format!("gap Frobenius norm {norm:e}"),
        );
    }

    let mut text: String = ctx
        .provenance("validate")
        .iter()
        .map(|l| format!("# {l}\n"))
        .collect();
    text.push_str(&format!("# seed {}\n", ctx.seed));
    for l in &rep.lines {
        text.push_str(l);
        text.push('\n');
    }
    std::fs::write(ctx.path("validate_report.txt"), text)?;
    if rep.failures > 0 {
        return Err(Error::Fit(format!(
            "{} validation checks failed",
            rep.failures
        )));
    }
    Ok(())
}
