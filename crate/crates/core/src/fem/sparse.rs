//! Sparse complex-symmetric linear algebra: CSR storage, reverse Cuthill-McKee ordering,
//! skyline `LDLᵀ` factorisation and a COCG fallback.

use std::collections::VecDeque;

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<C>,
}

impl CsrMatrix {
    /// Builds an `n × n` matrix, summing duplicate entries.
    pub fn from_triplets(n: usize, mut trip: Vec<(usize, usize, C)>) -> Self {
        trip.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut col = Vec::with_capacity(trip.len());
        let mut val: Vec<C> = Vec::with_capacity(trip.len());
        let mut last = None;
        for (i, j, v) in trip {
            if last == Some((i, j)) {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(j);
                val.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n,
            row_ptr,
            col,
            val,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.col[k], self.val[k]))
    }

    pub fn matvec(&self, x: &[C], y: &mut [C]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn diagonal(&self) -> Vec<C> {
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .find(|&(j, _)| j == i)
                    .map_or(C::new(0.0, 0.0), |(_, v)| v)
            })
            .collect()
    }

    /// Rows and columns restricted to `keep` (given as old indices), renumbered in that order.
    pub fn submatrix(&self, keep: &[usize]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut trip = Vec::new();
        for (new_i, &i) in keep.iter().enumerate() {
            for (j, v) in self.row(i) {
                if map[j] != usize::MAX {
                    trip.push((new_i, map[j], v));
                }
            }
        }
        CsrMatrix::from_triplets(keep.len(), trip)
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Reverse Cuthill-McKee permutation: `perm[new] = old`.
pub fn rcm_ordering(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n;
    let degree: Vec<usize> = (0..n).map(|i| a.row_ptr[i + 1] - a.row_ptr[i]).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let seed = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| degree[i])
            .unwrap();
        let start = pseudo_peripheral(a, seed, &degree);
        let comp_start = order.len();
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            order.push(i);
            let mut nb: Vec<usize> = a.row(i).map(|(j, _)| j).filter(|&j| !visited[j]).collect();
            nb.sort_unstable_by_key(|&j| (degree[j], j));
            for j in nb {
                visited[j] = true;
                queue.push_back(j);
            }
        }
        if order.len() == comp_start {
            break;
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(a: &CsrMatrix, seed: usize, degree: &[usize]) -> usize {
    let mut node = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let (levels, last) = bfs_levels(a, node);
        let far = last
            .into_iter()
            .min_by_key(|&j| (degree[j], j))
            .unwrap_or(node);
        if levels <= ecc {
            break;
        }
        ecc = levels;
        node = far;
    }
    node
}

fn bfs_levels(a: &CsrMatrix, start: usize) -> (usize, Vec<usize>) {
    let mut dist = vec![usize::MAX; a.n];
    dist[start] = 0;
    let mut frontier = vec![start];
    let mut depth = 0;
    loop {
        let mut next = Vec::new();
        for &i in &frontier {
            for (j, _) in a.row(i) {
                if dist[j] == usize::MAX {
                    dist[j] = depth + 1;
                    next.push(j);
                }
            }
        }
        if next.is_empty() {
            return (depth, frontier);
        }
        depth += 1;
        frontier = next;
    }
}

/// Number of stored entries of the skyline factor of `a` under `perm`.
pub fn profile_size(a: &CsrMatrix, perm: &[usize]) -> usize {
    let first = skyline_first(a, perm);
    first.iter().enumerate().map(|(i, &f)| i - f + 1).sum()
}

fn skyline_first(a: &CsrMatrix, perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; a.n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let mut first: Vec<usize> = (0..a.n).collect();
    for old in 0..a.n {
        let i = inv[old];
        for (j, _) in a.row(old) {
            let j = inv[j];
            if j < i {
                first[i] = first[i].min(j);
            } else {
                first[j] = first[j].min(i);
            }
        }
    }
    first
}

/// `A = L D Lᵀ` of a complex-symmetric matrix in skyline (variable band) storage, without
/// pivoting. Row `i` of `L` is stored from column `first[i]` up to the diagonal, which holds `D`.
#[derive(Debug, Clone)]
pub struct Skyline {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<C>,
    /// Ratio of the largest to the smallest pivot modulus.
    pub pivot_ratio: f64,
}

impl Skyline {
    pub fn factor(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.n;
        let first = skyline_first(a, &perm);
        let mut start = vec![0; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut data = vec![C::new(0.0, 0.0); start[n]];
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        for old in 0..n {
            let i = inv[old];
            for (j, v) in a.row(old) {
                let j = inv[j];
                if j <= i {
                    data[start[i] + j - first[i]] = v;
                }
            }
        }

        let mut scale = vec![0.0f64; n];
        for i in 0..n {
            scale[i] = data[start[i + 1] - 1].norm();
        }
        let (mut dmin, mut dmax) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let fi = first[i];
            let (before, rest) = data.split_at_mut(start[i]);
            let row = &mut rest[..i - fi + 1];
            // First pass: row[j] ← a_ij − Σ_k t_ik L_jk, the unscaled entries t_ij = L_ij D_j.
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let rj = &before[start[j]..start[j + 1]];
                let mut s = C::new(0.0, 0.0);
                for (x, y) in row[k0 - fi..j - fi].iter().zip(&rj[k0 - fj..j - fj]) {
                    s += x * y;
                }
                row[j - fi] -= s;
            }
            let mut d = row[i - fi];
            for j in fi..i {
                let dj = before[start[j + 1] - 1];
                let t = row[j - fi];
                let l = t / dj;
                d -= t * l;
                row[j - fi] = l;
            }
            let dn = d.norm();
            if !(dn > 1e-14 * scale[i]) || !dn.is_finite() {
                return Err(Error::Singular {
                    pivot: i,
                    condition: if dn > 0.0 {
                        dmax.max(scale[i]) / dn
                    } else {
                        f64::INFINITY
                    },
                });
            }
            dmin = dmin.min(dn);
            dmax = dmax.max(dn);
            row[i - fi] = d;
        }
        Ok(Skyline {
            n,
            perm,
            first,
            start,
            data,
            pivot_ratio: dmax / dmin,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn stored_entries(&self) -> usize {
        self.data.len()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[C]) -> Vec<C> {
        let n = self.n;
        let mut y: Vec<C> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1] - 1];
            let s: C = row.iter().zip(&y[fi..i]).map(|(l, v)| l * v).sum();
            y[i] -= s;
        }
        for i in 0..n {
            y[i] /= self.data[self.start[i + 1] - 1];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let yi = y[i];
            let row = &self.data[self.start[i]..self.start[i + 1] - 1];
            for (l, v) in row.iter().zip(&mut y[fi..i]) {
                *v -= l * yi;
            }
        }
        let mut x = vec![C::new(0.0, 0.0); n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// Conjugate orthogonal conjugate gradient with Jacobi preconditioning for complex-symmetric `a`.
/// Returns the solution and the achieved relative residual.
pub fn cocg(a: &CsrMatrix, b: &[C], tol: f64, max_iter: usize) -> Result<(Vec<C>, f64)> {
    let n = a.n;
    let dinv: Vec<C> = a.diagonal().iter().map(|d| d.inv()).collect();
    let bnorm = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let mut x = vec![C::new(0.0, 0.0); n];
    if bnorm == 0.0 {
        return Ok((x, 0.0));
    }
    let mut r = b.to_vec();
    let mut z: Vec<C> = r.iter().zip(&dinv).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz: C = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut q = vec![C::new(0.0, 0.0); n];
    let mut res = 1.0;
    for it in 0..max_iter {
        a.matvec(&p, &mut q);
        let pq: C = p.iter().zip(&q).map(|(a, b)| a * b).sum();
        if pq.norm() == 0.0 {
            return Err(Error::NotConverged {
                iterations: it,
                residual: res,
            });
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        res = r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt() / bnorm;
        if res <= tol {
            return Ok((x, res));
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new: C = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize, shift: C) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, C::new(2.0, 0.0) + shift));
            if i + 1 < n {
                t.push((i, i + 1, C::new(-1.0, 0.0)));
                t.push((i + 1, i, C::new(-1.0, 0.0)));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn skyline_and_cocg_agree() {
        let a = laplacian_1d(50, C::new(0.1, -0.3));
        let b: Vec<C> = (0..50).map(|i| C::new(i as f64, 1.0)).collect();
        let perm = rcm_ordering(&a);
        let f = Skyline::factor(&a, perm).unwrap();
        let x = f.solve(&b);
        let mut ax = vec![C::new(0.0, 0.0); 50];
        a.matvec(&x, &mut ax);
        let err: f64 = ax
            .iter()
            .zip(&b)
            .map(|(p, q)| (p - q).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10);
        let (y, _) = cocg(&a, &b, 1e-12, 1000).unwrap();
        assert!(x.iter().zip(&y).all(|(p, q)| (p - q).norm() < 1e-8));
    }

    #[test]
    fn singular_is_reported() {
        let a = CsrMatrix::from_triplets(
            2,
            vec![
                (0, 0, C::new(1.0, 0.0)),
                (0, 1, C::new(1.0, 0.0)),
                (1, 0, C::new(1.0, 0.0)),
                (1, 1, C::new(1.0, 0.0)),
            ],
        );
        assert!(matches!(
            Skyline::factor(&a, vec![0, 1]),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn rcm_is_a_permutation() {
        let a = laplacian_1d(20, C::new(0.0, 0.0));
        let mut p = rcm_ordering(&a);
        p.sort_unstable();
        assert_eq!(p, (0..20).collect::<Vec<_>>());
    }
}
