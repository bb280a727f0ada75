//! Provenance headers, CSV tables and SVG overlays.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use enclosure::indicator::RegionEstimate;
use enclosure::mesh::ShapeSpec;
use enclosure::{Result, Vec2};

/// Writes `#`-prefixed provenance lines followed by a CSV table.
pub fn write_csv(
    path: &Path,
    provenance: &[String],
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for line in provenance {
        writeln!(f, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(f);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV table, skipping `#` lines; returns the header and the records.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(csv_err)?;
    let header = r
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = r
        .records()
        .map(|rec| {
            rec.map(|r| r.iter().map(str::to_string).collect())
                .map_err(csv_err)
        })
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

fn csv_err(e: csv::Error) -> enclosure::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e.into(),
        other => enclosure::Error::Config(format!("csv: {other:?}")),
    }
}

pub fn num(v: f64) -> String {
    format!("{v:e}")
}

fn shape_svg(shape: &ShapeSpec, style: &str, s: &mut String) {
    match shape {
        ShapeSpec::Disk { center, radius } => {
            let _ = writeln!(
                s,
                r#"<circle cx="{}" cy="{}" r="{radius}" {style}/>"#,
                center[0], -center[1]
            );
        }
        _ => {
            let pts = shape.boundary_samples(256);
            polygon_svg(&pts, style, s);
        }
    }
}

fn polygon_svg(pts: &[Vec2], style: &str, s: &mut String) {
    let list: Vec<String> = pts
        .iter()
        .map(|p| format!("{:.6},{:.6}", p.x, -p.y))
        .collect();
    let _ = writeln!(s, r#"<polygon points="{}" {style}/>"#, list.join(" "));
}

/// Overlay of the domain, the true inclusion (if known) and the estimate.
pub fn region_svg(radius: f64, truth: Option<&ShapeSpec>, est: &RegionEstimate) -> String {
    let m = 1.15 * radius;
    let stroke = radius / 200.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="600" height="600">"#,
        -m,
        -m,
        2.0 * m,
        2.0 * m
    );
    let _ = writeln!(
        s,
        r#"<circle cx="0" cy="0" r="{radius}" fill="none" stroke="black" stroke-width="{stroke}"/>"#
    );
    if let Some(mask) = &est.mask {
        let d = 2.0 * mask.radius / mask.n as f64;
        for i in 0..mask.n {
            // Merge runs of cells in a row into one rectangle.
            let mut j = 0;
            while j < mask.n {
                if !mask.cells[i * mask.n + j] {
                    j += 1;
                    continue;
                }
                let start = j;
                while j < mask.n && mask.cells[i * mask.n + j] {
                    j += 1;
                }
                let x = -mask.radius + start as f64 * d;
                let y = -mask.radius + (i + 1) as f64 * d;
                let _ = writeln!(
                    s,
                    r##"<rect x="{x:.6}" y="{:.6}" width="{:.6}" height="{d:.6}" fill="#9ecae1"/>"##,
                    -y,
                    (j - start) as f64 * d
                );
            }
        }
    }
    if !est.polygon.is_empty() {
        polygon_svg(
            &est.polygon,
            &format!(
                r##"fill="#9ecae1" fill-opacity="0.6" stroke="#3182bd" stroke-width="{stroke}""##
            ),
            &mut s,
        );
    }
    for c in &est.cones {
        let [e1, e2] = c.cone.edges();
        let len = 3.0 * radius + c.cone.vertex.norm();
        let pts = [
            c.cone.vertex + e1.vec() * len,
            c.cone.vertex,
            c.cone.vertex + e2.vec() * len,
        ];
        let list: Vec<String> = pts
            .iter()
            .map(|p| format!("{:.6},{:.6}", p.x, -p.y))
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#e6550d" stroke-width="{stroke}"/>"##,
            list.join(" ")
        );
    }
    if let Some(shape) = truth {
        shape_svg(
            shape,
            &format!(
                r#"fill="none" stroke="red" stroke-width="{}""#,
                2.0 * stroke
            ),
            &mut s,
        );
    }
    s.push_str("</svg>\n");
    s
}
