//! Structured polar-grid triangulations of a disk with a labelled inclusion.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{Direction, Vec2};

/// Minimum number of triangles that must be labelled as inclusion.
pub const MIN_INCLUSION_TRIANGLES: usize = 8;

/// Geometry of the inclusion `D`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeSpec {
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    /// Ellipse with semi-axes `a` (along the rotated x-axis) and `b`.
    Ellipse {
        center: [f64; 2],
        a: f64,
        b: f64,
        #[serde(default)]
        rotation: f64,
    },
    /// Convex polygon, vertices listed counter-clockwise.
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
}

impl ShapeSpec {
    pub fn disk(center: Vec2, radius: f64) -> Self {
        ShapeSpec::Disk {
            center: [center.x, center.y],
            radius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            ShapeSpec::Disk { center, radius } => {
                if !finite(center) || !(*radius > 0.0) || !radius.is_finite() {
                    return Err(Error::InvalidShape(format!(
                        "disk radius {radius} must be positive"
                    )));
                }
            }
            ShapeSpec::Ellipse {
                center,
                a,
                b,
                rotation,
            } => {
                if !finite(center) || !finite(&[*a, *b, *rotation]) || !(*a > 0.0) || !(*b > 0.0) {
                    return Err(Error::InvalidShape(format!(
                        "ellipse semi-axes ({a}, {b}) must be positive"
                    )));
                }
            }
            ShapeSpec::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::InvalidShape(
                        "polygon needs at least 3 vertices".into(),
                    ));
                }
                if !vertices.iter().all(|v| finite(v)) {
                    return Err(Error::InvalidShape("polygon vertex is not finite".into()));
                }
                let pts = self.polygon_points();
                let n = pts.len();
                for i in 0..n {
                    let (p, q, r) = (pts[i], pts[(i + 1) % n], pts[(i + 2) % n]);
                    let cross = (q - p).perp(&(r - q));
                    if cross <= 0.0 {
                        return Err(Error::InvalidShape(format!(
                            "polygon must be convex and counter-clockwise (turn at vertex {} is {cross:e})",
                            (i + 1) % n
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn polygon_points(&self) -> Vec<Vec2> {
        match self {
            ShapeSpec::Polygon { vertices } => {
                vertices.iter().map(|v| Vec2::new(v[0], v[1])).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Points of the polygon, or `None` for curved shapes.
    pub fn vertices(&self) -> Option<Vec<Vec2>> {
        matches!(self, ShapeSpec::Polygon { .. }).then(|| self.polygon_points())
    }

    pub fn center(&self) -> Vec2 {
        match self {
            ShapeSpec::Disk { center, .. } | ShapeSpec::Ellipse { center, .. } => {
                Vec2::new(center[0], center[1])
            }
            ShapeSpec::Polygon { .. } => {
                let pts = self.polygon_points();
                pts.iter().sum::<Vec2>() / pts.len() as f64
            }
        }
    }

    /// Closed-set membership.
    pub fn contains(&self, p: &Vec2) -> bool {
        match self {
            ShapeSpec::Disk { center, radius } => {
                (p - Vec2::new(center[0], center[1])).norm_squared() <= radius * radius
            }
            ShapeSpec::Ellipse {
                center,
                a,
                b,
                rotation,
            } => {
                let d = p - Vec2::new(center[0], center[1]);
                let (s, c) = rotation.sin_cos();
                let u = c * d.x + s * d.y;
                let v = -s * d.x + c * d.y;
                (u / a).powi(2) + (v / b).powi(2) <= 1.0
            }
            ShapeSpec::Polygon { .. } => {
                let pts = self.polygon_points();
                let n = pts.len();
                (0..n).all(|i| (pts[(i + 1) % n] - pts[i]).perp(&(p - pts[i])) >= 0.0)
            }
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            ShapeSpec::Disk { radius, .. } => std::f64::consts::PI * radius * radius,
            ShapeSpec::Ellipse { a, b, .. } => std::f64::consts::PI * a * b,
            ShapeSpec::Polygon { .. } => polygon_area(&self.polygon_points()),
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self {
            ShapeSpec::Disk { radius, .. } => 2.0 * std::f64::consts::PI * radius,
            ShapeSpec::Ellipse { a, b, .. } => {
                // Ramanujan's second approximation.
                let h = ((a - b) / (a + b)).powi(2);
                std::f64::consts::PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()))
            }
            ShapeSpec::Polygon { .. } => {
                let pts = self.polygon_points();
                let n = pts.len();
                (0..n).map(|i| (pts[(i + 1) % n] - pts[i]).norm()).sum()
            }
        }
    }

    /// Boundary points: the polygon itself or a fine sampling of a curved shape.
    pub fn boundary_samples(&self, n: usize) -> Vec<Vec2> {
        match self {
            ShapeSpec::Polygon { .. } => self.polygon_points(),
            ShapeSpec::Disk { center, radius } => (0..n)
                .map(|i| {
                    let t = std::f64::consts::TAU * i as f64 / n as f64;
                    Vec2::new(center[0] + radius * t.cos(), center[1] + radius * t.sin())
                })
                .collect(),
            ShapeSpec::Ellipse {
                center,
                a,
                b,
                rotation,
            } => {
                let (s, c) = rotation.sin_cos();
                (0..n)
                    .map(|i| {
                        let t = std::f64::consts::TAU * i as f64 / n as f64;
                        let (u, v) = (a * t.cos(), b * t.sin());
                        Vec2::new(center[0] + c * u - s * v, center[1] + s * u + c * v)
                    })
                    .collect()
            }
        }
    }

    /// Smallest and largest distance from the origin to points of the boundary.
    pub fn radial_extent(&self) -> (f64, f64) {
        let max = match self {
            ShapeSpec::Disk { center, radius } => center[0].hypot(center[1]) + radius,
            _ => {
                let c = self.center();
                let dir = Direction::normalize(c).unwrap_or(Direction::from_angle(0.0));
                // The farthest point maximises x·u over unit u; sample directions densely.
                let mut best = support_function_exact(self, &dir);
                for i in 0..720 {
                    let d = Direction::from_angle(std::f64::consts::TAU * i as f64 / 720.0);
                    best = best.max(support_function_exact(self, &d));
                }
                best
            }
        };
        let min = match self {
            ShapeSpec::Disk { center, radius } => (center[0].hypot(center[1]) - radius).abs(),
            _ => self
                .boundary_samples(4096)
                .iter()
                .map(|p| p.norm())
                .fold(f64::INFINITY, f64::min),
        };
        (min.max(0.0), max)
    }
}

/// `h_D(ϑ) = sup_{x∈D} x·ϑ`, evaluated in closed form.
pub fn support_function_exact(shape: &ShapeSpec, theta: &Direction) -> f64 {
    match shape {
        ShapeSpec::Disk { center, radius } => theta.dot(&Vec2::new(center[0], center[1])) + radius,
        ShapeSpec::Ellipse {
            center,
            a,
            b,
            rotation,
        } => {
            // x = c + R diag(a,b) u with |u| ≤ 1, so sup x·ϑ = c·ϑ + |diag(a,b) Rᵀ ϑ|.
            let (s, c) = rotation.sin_cos();
            let u = c * theta.x() + s * theta.y();
            let v = -s * theta.x() + c * theta.y();
            theta.dot(&Vec2::new(center[0], center[1])) + (a * u).hypot(b * v)
        }
        ShapeSpec::Polygon { vertices } => vertices
            .iter()
            .map(|v| theta.dot(&Vec2::new(v[0], v[1])))
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Shoelace area of a closed polygon (positive when counter-clockwise).
pub fn polygon_area(pts: &[Vec2]) -> f64 {
    let n = pts.len();
    0.5 * (0..n).map(|i| pts[i].perp(&pts[(i + 1) % n])).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Background,
    Inclusion,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    /// Unit outward normal.
    pub normal: Vec2,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Vec2>,
    pub triangles: Vec<[usize; 3]>,
    pub labels: Vec<Region>,
    /// Counter-clockwise loop: edge `i` ends where edge `i + 1` starts.
    pub boundary: Vec<BoundaryEdge>,
    pub h: f64,
}

impl Mesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [i, j, k] = self.triangles[t];
        let (p, q, r) = (self.vertices[i], self.vertices[j], self.vertices[k]);
        0.5 * (q - p).perp(&(r - p))
    }

    pub fn centroid(&self, t: usize) -> Vec2 {
        let [i, j, k] = self.triangles[t];
        (self.vertices[i] + self.vertices[j] + self.vertices[k]) / 3.0
    }

    /// Gradients of the three barycentric hat functions on triangle `t`, with its area.
    pub fn hat_gradients(&self, t: usize) -> ([Vec2; 3], f64) {
        let [i, j, k] = self.triangles[t];
        let (p, q, r) = (self.vertices[i], self.vertices[j], self.vertices[k]);
        let two_a = (q - p).perp(&(r - p));
        let rot = |e: Vec2| Vec2::new(-e.y, e.x) / two_a;
        ([rot(q - r), rot(r - p), rot(p - q)], 0.5 * two_a)
    }

    /// Boundary vertices in loop order.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        self.boundary.iter().map(|e| e.a).collect()
    }

    /// Radius of the domain, taken from the boundary loop.
    pub fn radius(&self) -> f64 {
        self.boundary
            .iter()
            .map(|e| self.vertices[e.a].norm())
            .fold(0.0, f64::max)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.signed_area(t)).sum()
    }

    pub fn boundary_polygon_area(&self) -> f64 {
        let pts: Vec<Vec2> = self
            .boundary_nodes()
            .iter()
            .map(|&i| self.vertices[i])
            .collect();
        polygon_area(&pts)
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary
            .iter()
            .map(|e| (self.vertices[e.b] - self.vertices[e.a]).norm())
            .sum()
    }

    pub fn inclusion_triangles(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_triangles()).filter(|&t| self.labels[t] == Region::Inclusion)
    }

    pub fn inclusion_area(&self) -> f64 {
        self.inclusion_triangles()
            .map(|t| self.signed_area(t))
            .sum()
    }

    /// Checks orientation, labels and the boundary loop.
    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidShape(msg));
        if self.labels.len() != self.triangles.len() {
            return bad("label count does not match triangle count".into());
        }
        for t in 0..self.num_triangles() {
            if self.triangles[t].iter().any(|&i| i >= self.vertices.len()) {
                return bad(format!("triangle {t} references a missing vertex"));
            }
            if !(self.signed_area(t) > 0.0) {
                return bad(format!("triangle {t} is not positively oriented"));
            }
        }
        let n = self.boundary.len();
        if n < 3 {
            return bad("boundary loop has fewer than 3 edges".into());
        }
        for i in 0..n {
            if self.boundary[i].b != self.boundary[(i + 1) % n].a {
                return bad(format!(
                    "boundary edge {i} does not connect to its successor"
                ));
            }
        }
        let mut seen = vec![false; self.vertices.len()];
        for e in &self.boundary {
            if std::mem::replace(&mut seen[e.a], true) {
                return bad("boundary loop visits a vertex twice".into());
            }
        }
        Ok(())
    }

    pub fn write_text<W: Write>(&self, mut w: W, provenance: &[String]) -> Result<()> {
        let mut s = String::new();
        for line in provenance {
            let _ = writeln!(s, "# {line}");
        }
        let _ = writeln!(
            s,
            "{} {} {} {:e}",
            self.num_vertices(),
            self.num_triangles(),
            self.boundary.len(),
            self.h
        );
        for v in &self.vertices {
            let _ = writeln!(s, "{:e} {:e}", v.x, v.y);
        }
        for (t, l) in self.triangles.iter().zip(&self.labels) {
            let _ = writeln!(
                s,
                "{} {} {} {}",
                t[0],
                t[1],
                t[2],
                (*l == Region::Inclusion) as u8
            );
        }
        for e in &self.boundary {
            let _ = writeln!(s, "{} {} {:e} {:e}", e.a, e.b, e.normal.x, e.normal.y);
        }
        w.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn save(&self, path: &Path, provenance: &[String]) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_text(std::io::BufWriter::new(f), provenance)
    }

    pub fn read_text<R: BufRead>(r: R, name: &str) -> Result<Mesh> {
        let mut lines = r.lines().enumerate().filter(|(_, l)| {
            l.as_ref().map_or(true, |l| {
                !l.trim_start().starts_with('#') && !l.trim().is_empty()
            })
        });
        let err = |line: usize, msg: &str| Error::Parse {
            path: name.to_string(),
            line: line + 1,
            msg: msg.to_string(),
        };
        let mut next = |what: &str| -> Result<(usize, Vec<String>)> {
            match lines.next() {
                Some((i, l)) => Ok((i, l?.split_whitespace().map(str::to_string).collect())),
                None => Err(err(
                    0,
                    &format!("unexpected end of file while reading {what}"),
                )),
            }
        };
        fn num<T: std::str::FromStr>(tok: &[String], k: usize) -> Option<T> {
            tok.get(k)?.parse().ok()
        }
        let (i, head) = next("header")?;
        let (nv, nt, nb, h): (usize, usize, usize, f64) =
            match (num(&head, 0), num(&head, 1), num(&head, 2), num(&head, 3)) {
                (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
                _ => return Err(err(i, "header must be `nv nt nb h`")),
            };
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (i, tok) = next("vertices")?;
            match (num(&tok, 0), num(&tok, 1)) {
                (Some(x), Some(y)) => vertices.push(Vec2::new(x, y)),
                _ => return Err(err(i, "vertex line must be `x y`")),
            }
        }
        let mut triangles = Vec::with_capacity(nt);
        let mut labels = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (i, tok) = next("triangles")?;
            match (num(&tok, 0), num(&tok, 1), num(&tok, 2), num::<u8>(&tok, 3)) {
                (Some(a), Some(b), Some(c), Some(l)) if l <= 1 => {
                    triangles.push([a, b, c]);
                    labels.push(if l == 1 {
                        Region::Inclusion
                    } else {
                        Region::Background
                    });
                }
                _ => return Err(err(i, "triangle line must be `i j k label`")),
            }
        }
        let mut boundary = Vec::with_capacity(nb);
        for _ in 0..nb {
            let (i, tok) = next("boundary edges")?;
            match (num(&tok, 0), num(&tok, 1), num(&tok, 2), num(&tok, 3)) {
                (Some(a), Some(b), Some(nx), Some(ny)) => boundary.push(BoundaryEdge {
                    a,
                    b,
                    normal: Vec2::new(nx, ny),
                }),
                _ => return Err(err(i, "boundary line must be `i j nx ny`")),
            }
        }
        let mesh = Mesh {
            vertices,
            triangles,
            labels,
            boundary,
            h,
        };
        mesh.check()?;
        Ok(mesh)
    }

    pub fn load(path: &Path) -> Result<Mesh> {
        let f = std::fs::File::open(path)?;
        Mesh::read_text(std::io::BufReader::new(f), &path.display().to_string())
    }
}

/// Ring radii: uniform spacing `h` outside the band, `h/2` inside it, ending at `radius`.
fn ring_radii(radius: f64, h: f64, band: Option<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut breaks = vec![(0.0, h)];
    match band {
        Some((lo, hi)) => {
            let lo = lo.max(0.0);
            let hi = hi.min(radius);
            if lo > 0.0 {
                breaks.push((lo, h / 2.0));
            } else {
                breaks[0].1 = h / 2.0;
            }
            breaks.push((hi, h));
        }
        None => {}
    }
    breaks.push((radius, h));
    let mut radii = vec![(0.0, breaks[0].1)];
    for w in breaks.windows(2) {
        let (r0, step) = w[0];
        let r1 = w[1].0;
        if r1 <= r0 {
            continue;
        }
        let mut n = ((r1 - r0) / step - 1e-9).ceil().max(1.0) as usize;
        // Odd layer count inside the band keeps its midline off the rings, so a centred
        // interface is never fitted by accident.
        if step < h && n % 2 == 0 {
            n += 1;
        }
        let ds = (r1 - r0) / n as f64;
        for k in 1..=n {
            radii.push((r0 + ds * k as f64, ds));
        }
    }
    radii
}

/// Structured polar triangulation of the disk of radius `domain_radius`.
///
/// Ring `k` at radius `r_k` carries `6·max(1, round(r_k/s_k))` equally spaced nodes, where `s_k`
/// is the local radial spacing. Consecutive rings are stitched by merging their nodes in angle
/// order. Near `∂D` the spacing is halved over a band of width `2h` on each side. Triangles are
/// labelled by centroid membership.
pub fn build_disk_mesh(
    domain_radius: f64,
    target_h: f64,
    inclusion: Option<&ShapeSpec>,
) -> Result<Mesh> {
    if !(domain_radius > 0.0) || !domain_radius.is_finite() {
        return Err(Error::param(
            "domain_radius",
            format!("{domain_radius} must be positive"),
        ));
    }
    if !(target_h > 0.0 && target_h < domain_radius / 4.0) {
        return Err(Error::param(
            "target_h",
            format!("{target_h} must lie in (0, domain_radius/4)"),
        ));
    }
    let band = match inclusion {
        Some(shape) => {
            shape.validate()?;
            let (rmin, rmax) = shape.radial_extent();
            let gap = domain_radius - rmax;
            if gap < 2.0 * target_h {
                return Err(Error::InclusionNotInterior {
                    gap,
                    required: 2.0 * target_h,
                });
            }
            Some((rmin - 2.0 * target_h, rmax + 2.0 * target_h))
        }
        None => None,
    };

    let radii = ring_radii(domain_radius, target_h, band);
    let mut vertices = vec![Vec2::zeros()];
    let mut rings: Vec<(usize, usize)> = vec![(0, 1)];
    for &(r, s) in &radii[1..] {
        let n = 6 * ((r / s).round() as usize).max(1);
        let start = vertices.len();
        for i in 0..n {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            vertices.push(Vec2::new(r * t.cos(), r * t.sin()));
        }
        rings.push((start, n));
    }

    let mut triangles = Vec::new();
    let (s1, n1) = rings[1];
    for i in 0..n1 {
        triangles.push([0, s1 + i, s1 + (i + 1) % n1]);
    }
    for w in rings[1..].windows(2) {
        zipper(w[0], w[1], &mut triangles);
    }
    for t in triangles.iter_mut() {
        let (p, q, r) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
        if (q - p).perp(&(r - p)) < 0.0 {
            t.swap(1, 2);
        }
    }

    let labels: Vec<Region> = triangles
        .iter()
        .map(|t| {
            let c = (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0;
            match inclusion {
                Some(shape) if shape.contains(&c) => Region::Inclusion,
                _ => Region::Background,
            }
        })
        .collect();

    let (sb, nb) = *rings.last().unwrap();
    let boundary = (0..nb)
        .map(|i| {
            let (a, b) = (sb + i, sb + (i + 1) % nb);
            let e = vertices[b] - vertices[a];
            BoundaryEdge {
                a,
                b,
                normal: Vec2::new(e.y, -e.x) / e.norm(),
            }
        })
        .collect();

    let mesh = Mesh {
        vertices,
        triangles,
        labels,
        boundary,
        h: target_h,
    };
    if inclusion.is_some() {
        let count = mesh.inclusion_triangles().count();
        if count < MIN_INCLUSION_TRIANGLES {
            return Err(Error::UnresolvedInclusion { count });
        }
    }
    Ok(mesh)
}

/// Stitches two concentric rings of equally spaced nodes starting at angle 0.
fn zipper(inner: (usize, usize), outer: (usize, usize), out: &mut Vec<[usize; 3]>) {
    let (si, ni) = inner;
    let (so, no) = outer;
    let (mut i, mut j) = (0usize, 0usize);
    while i < ni || j < no {
        // Compare the angles of the next node on each ring, in exact integer arithmetic.
        let advance_inner = j == no || (i < ni && (i + 1) * no < (j + 1) * ni);
        if advance_inner {
            out.push([si + i % ni, si + (i + 1) % ni, so + j % no]);
            i += 1;
        } else {
            out.push([si + i % ni, so + (j + 1) % no, so + j % no]);
            j += 1;
        }
    }
}
