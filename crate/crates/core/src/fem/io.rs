//! Plain-text DtN matrix files.
//!
//! ```text
//! # provenance lines
//! kind gap
//! basis fourier 8        (or: basis nodal)
//! omega 1
//! mesh_h 0.02
//! radius 1
//! solver_tol 1e-10
//! nodes 314
//! x y                    (one line per boundary node)
//! dim 17
//! re im                  (dim² lines, row-major)
//! ```

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{BoundaryBasis, DtNMatrix, DtnKind};
use crate::error::{Error, Result};
use crate::geom::Vec2;

pub fn write_dtn<W: Write>(m: &DtNMatrix, mut w: W, provenance: &[String]) -> Result<()> {
    let mut s = String::new();
    for line in provenance {
        let _ = writeln!(s, "# {line}");
    }
    let _ = writeln!(s, "kind {}", m.kind.as_str());
    match m.basis {
        BoundaryBasis::Fourier { n_max } => {
            let _ = writeln!(s, "basis fourier {n_max}");
        }
        BoundaryBasis::Nodal => {
            let _ = writeln!(s, "basis nodal");
        }
    }
    let _ = writeln!(s, "omega {:e}", m.omega);
    let _ = writeln!(s, "mesh_h {:e}", m.mesh_h);
    let _ = writeln!(s, "radius {:e}", m.radius);
    let _ = writeln!(s, "solver_tol {:e}", m.solver_tol);
    let _ = writeln!(s, "nodes {}", m.nodes.len());
    for p in &m.nodes {
        let _ = writeln!(s, "{:e} {:e}", p.x, p.y);
    }
    let _ = writeln!(s, "dim {}", m.dim);
    for v in &m.data {
        let _ = writeln!(s, "{:e} {:e}", v.re, v.im);
    }
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub fn save_dtn(m: &DtNMatrix, path: &Path, provenance: &[String]) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_dtn(m, std::io::BufWriter::new(f), provenance)
}

pub fn load_dtn(path: &Path) -> Result<DtNMatrix> {
    let f = std::fs::File::open(path)?;
    read_dtn(std::io::BufReader::new(f), &path.display().to_string())
}

struct Lines<'a, I> {
    inner: I,
    name: &'a str,
}

impl<I: Iterator<Item = (usize, std::io::Result<String>)>> Lines<'_, I> {
    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.name.to_string(),
            line: line + 1,
            msg: msg.into(),
        }
    }

    fn next(&mut self) -> Result<(usize, Vec<String>)> {
        loop {
            match self.inner.next() {
                Some((i, l)) => {
                    let l = l?;
                    let t = l.trim();
                    if t.is_empty() || t.starts_with('#') {
                        continue;
                    }
                    return Ok((i, t.split_whitespace().map(str::to_string).collect()));
                }
                None => {
                    return Err(Error::Parse {
                        path: self.name.to_string(),
                        line: 0,
                        msg: "unexpected end of file".into(),
                    })
                }
            }
        }
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<String>)> {
        let (i, tok) = self.next()?;
        if tok.first().map(String::as_str) != Some(key) {
            return Err(self.err(i, format!("expected `{key}`")));
        }
        Ok((i, tok[1..].to_vec()))
    }

    fn float(&self, i: usize, tok: &[String], k: usize) -> Result<f64> {
        tok.get(k)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.err(i, "expected a number"))
    }

    fn value(&mut self, key: &str) -> Result<(usize, f64)> {
        let (i, tok) = self.keyed(key)?;
        Ok((i, self.float(i, &tok, 0)?))
    }
}

pub fn read_dtn<R: BufRead>(r: R, name: &str) -> Result<DtNMatrix> {
    let mut rd = Lines {
        inner: r.lines().enumerate(),
        name,
    };
    let (i, tok) = rd.keyed("kind")?;
    let kind = match tok.first().map(String::as_str) {
        Some("perturbed") => DtnKind::Perturbed,
        Some("background") => DtnKind::Background,
        Some("gap") => DtnKind::Gap,
        _ => return Err(rd.err(i, "kind must be perturbed, background or gap")),
    };
    let (i, tok) = rd.keyed("basis")?;
    let basis = match tok.first().map(String::as_str) {
        Some("fourier") => BoundaryBasis::Fourier {
            n_max: tok
                .get(1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| rd.err(i, "fourier basis needs N"))?,
        },
        Some("nodal") => BoundaryBasis::Nodal,
        _ => return Err(rd.err(i, "basis must be fourier or nodal")),
    };
    let omega = rd.value("omega")?.1;
    let mesh_h = rd.value("mesh_h")?.1;
    let radius = rd.value("radius")?.1;
    let solver_tol = rd.value("solver_tol")?.1;
    let nb = rd.value("nodes")?.1 as usize;
    let mut nodes = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (i, tok) = rd.next()?;
        nodes.push(Vec2::new(rd.float(i, &tok, 0)?, rd.float(i, &tok, 1)?));
    }
    let (i, dim) = rd.value("dim")?;
    let dim = dim as usize;
    if dim != basis.dim(nb) {
        return Err(rd.err(i, format!("dim {dim} does not match the basis")));
    }
    let mut data = Vec::with_capacity(dim * dim);
    for _ in 0..dim * dim {
        let (i, tok) = rd.next()?;
        data.push(Complex64::new(rd.float(i, &tok, 0)?, rd.float(i, &tok, 1)?));
    }
    Ok(DtNMatrix {
        kind,
        basis,
        omega,
        mesh_h,
        radius,
        solver_tol,
        nodes,
        dim,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let m = DtNMatrix {
            kind: DtnKind::Gap,
            basis: BoundaryBasis::Fourier { n_max: 1 },
            omega: 0.25,
            mesh_h: 0.05,
            radius: 1.0,
            solver_tol: 1e-10,
            nodes: vec![Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)],
            dim: 3,
            data: (0..9)
                .map(|k| Complex64::new(k as f64 / 7.0, -(k as f64).sqrt()))
                .collect(),
        };
        let mut buf = Vec::new();
        write_dtn(&m, &mut buf, &["hash abc".into()]).unwrap();
        let back = read_dtn(&buf[..], "mem").unwrap();
        assert_eq!(back, m);
    }
}
