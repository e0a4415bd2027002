//! Sparse linear algebra for the potential problems: a compressed-row
//! matrix, conjugate gradient on the complement of the constant nullspace,
//! and an envelope (skyline) Cholesky factorization for repeated solves with
//! one operator.

use crate::error::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    /// Assembles from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trip: Vec<(usize, usize, f64)>) -> Self {
        trip.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(trip.len());
        let mut values: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trip {
            debug_assert!(r < nrows && c < ncols);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[s..e], &self.values[s..e])
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            *yr = cols.iter().zip(vals).map(|(&c, v)| v * x[c]).sum();
        }
    }

    /// `y += Aᵀ x`.
    pub fn matvec_t_add(&self, x: &[f64], y: &mut [f64]) {
        for (r, &xr) in x.iter().enumerate() {
            if xr == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(r);
            for (&c, v) in cols.iter().zip(vals) {
                y[c] += v * xr;
            }
        }
    }

    /// `Aᵀ diag(w) A`.
    pub fn weighted_normal(&self, w: &[f64]) -> Csr {
        let mut trip = Vec::new();
        for (r, &wr) in w.iter().enumerate().take(self.nrows) {
            let (cols, vals) = self.row(r);
            for (&ci, vi) in cols.iter().zip(vals) {
                for (&cj, vj) in cols.iter().zip(vals) {
                    trip.push((ci, cj, wr * vi * vj));
                }
            }
        }
        Csr::from_triplets(self.ncols, self.ncols, trip)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).find(|(&c, _)| c == r).map_or(0.0, |(_, v)| *v)
            })
            .collect()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn remove_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    pub rel_tol: f64,
    /// Defaults to `max(500, 20·√n)` when `None`.
    pub max_iters: Option<usize>,
    pub jacobi: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            max_iters: None,
            jacobi: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub residual: f64,
}

pub fn default_cg_iters(n: usize) -> usize {
    ((20.0 * (n as f64).sqrt()).ceil() as usize).max(500)
}

/// Solves `A x = b` for symmetric positive semidefinite `A` whose nullspace is
/// the constant vector. The right-hand side and every residual are projected
/// onto the complement of the constants; `x` is the initial guess on entry.
pub fn cg_nullspace(a: &Csr, b: &[f64], x: &mut [f64], opts: &CgOptions) -> Result<CgOutcome> {
    let n = b.len();
    let mut rhs = b.to_vec();
    remove_mean(&mut rhs);
    let bnorm = norm(&rhs);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgOutcome {
            iterations: 0,
            residual: 0.0,
        });
    }
    let max_iters = opts.max_iters.unwrap_or_else(|| default_cg_iters(n));
    let inv_diag: Option<Vec<f64>> = opts
        .jacobi
        .then(|| a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect());
    let precond = |r: &[f64], z: &mut [f64]| {
        match &inv_diag {
            Some(dinv) => z.iter_mut().zip(r).zip(dinv).for_each(|((z, r), d)| *z = r * d),
            None => z.copy_from_slice(r),
        }
        remove_mean(z);
    };

    let mut ax = vec![0.0; n];
    a.matvec(x, &mut ax);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    remove_mean(&mut r);
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = norm(&r) / bnorm;
    let mut it = 0;
    while res > opts.rel_tol {
        if it >= max_iters {
            return Err(Error::NonConvergence {
                iterations: it,
                residual: res,
            });
        }
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::NonConvergence {
                iterations: it,
                residual: res,
            });
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        remove_mean(&mut r);
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = norm(&r) / bnorm;
        it += 1;
    }
    Ok(CgOutcome {
        iterations: it,
        residual: res,
    })
}

const REFINE_TOL: f64 = 1e-12;

/// Envelope Cholesky factor of a symmetric matrix with one DOF pinned to zero
/// (its row and column replaced by the identity), which removes a
/// one-dimensional nullspace.
#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    n: usize,
    pin: usize,
    first: Vec<usize>,
    start: Vec<usize>,
    vals: Vec<f64>,
    a: Csr,
}

impl SkylineCholesky {
    pub fn factor_pinned(a: &Csr, pin: usize) -> Result<Self> {
        let n = a.nrows;
        let mut first: Vec<usize> = (0..n).collect();
        for r in 0..n {
            if r == pin {
                continue;
            }
            let (cols, _) = a.row(r);
            for &c in cols {
                if c != pin && c < first[r] {
                    first[r] = c;
                }
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut vals = vec![0.0; start[n]];
        for r in 0..n {
            if r == pin {
                vals[start[r] + (r - first[r])] = 1.0;
                continue;
            }
            let (cols, v) = a.row(r);
            for (&c, &x) in cols.iter().zip(v) {
                if c <= r && c != pin {
                    vals[start[r] + (c - first[r])] += x;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let si = start[i];
            for j in fi..i {
                let fj = first[j];
                let sj = start[j];
                let k0 = fi.max(fj);
                let s: f64 = dot(&vals[si + (k0 - fi)..si + (j - fi)], &vals[sj + (k0 - fj)..sj + (j - fj)]);
                let ljj = vals[sj + (j - fj)];
                vals[si + (j - fi)] = (vals[si + (j - fi)] - s) / ljj;
            }
            let row = &vals[si..si + (i - fi)];
            let d = vals[si + (i - fi)] - dot(row, row);
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::Factorization { pivot: i, value: d });
            }
            vals[si + (i - fi)] = d.sqrt();
        }
        Ok(Self {
            n,
            pin,
            first,
            start,
            vals,
            a: a.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn solve_once(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let fi = self.first[i];
            let si = self.start[i];
            let s = dot(&self.vals[si..si + (i - fi)], &b[fi..i]);
            b[i] = (b[i] - s) / self.vals[si + (i - fi)];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let si = self.start[i];
            b[i] /= self.vals[si + (i - fi)];
            let xi = b[i];
            for (bk, l) in b[fi..i].iter_mut().zip(&self.vals[si..si + (i - fi)]) {
                *bk -= l * xi;
            }
        }
    }

    /// Solves the pinned system, with one step of iterative refinement when
    /// the first residual exceeds `1e-12` relative. The pinned component of
    /// the result is 0.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        x[self.pin] = 0.0;
        self.solve_once(&mut x);
        let mut ax = vec![0.0; self.n];
        self.a.matvec(&x, &mut ax);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        r[self.pin] = 0.0;
        if norm(&r) <= REFINE_TOL * norm(b) {
            return x;
        }
        self.solve_once(&mut r);
        x.iter_mut().zip(&r).for_each(|(x, d)| *x += d);
        x[self.pin] = 0.0;
        x
    }

    /// Relative residual `‖b − A x‖ / ‖b‖` with the pinned row excluded and
    /// `b` projected off the constants.
    pub fn relative_residual(&self, b: &[f64], x: &[f64]) -> f64 {
        let mut rhs = b.to_vec();
        remove_mean(&mut rhs);
        let bn = norm(&rhs);
        if bn == 0.0 {
            return 0.0;
        }
        let mut ax = vec![0.0; self.n];
        self.a.matvec(x, &mut ax);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        norm(&r) / bn
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // 1D Neumann Laplacian on n nodes.
    fn neumann(n: usize) -> Csr {
        let mut t = Vec::new();
        for i in 0..n - 1 {
            t.push((i, i, 1.0));
            t.push((i + 1, i + 1, 1.0));
            t.push((i, i + 1, -1.0));
            t.push((i + 1, i, -1.0));
        }
        Csr::from_triplets(n, n, t)
    }

    #[test]
    fn triplets_merge_duplicates() {
        let a = Csr::from_triplets(2, 2, vec![(1, 0, 1.0), (0, 0, 2.0), (1, 0, 3.0)]);
        assert_eq!(a.nnz(), 2);
        let mut y = vec![0.0; 2];
        a.matvec(&[1.0, 1.0], &mut y);
        assert_eq!(y, vec![2.0, 4.0]);
        let mut z = vec![0.0; 2];
        a.matvec_t_add(&[1.0, 1.0], &mut z);
        assert_eq!(z, vec![6.0, 0.0]);
    }

    #[test]
    fn weighted_normal_matches_dense() {
        let m = Csr::from_triplets(3, 2, vec![(0, 0, 1.0), (0, 1, -1.0), (1, 1, 2.0), (2, 0, 3.0)]);
        let a = m.weighted_normal(&[1.0, 0.5, 2.0]);
        let mut y = vec![0.0; 2];
        a.matvec(&[1.0, 0.0], &mut y);
        assert_eq!(y, vec![1.0 + 18.0, -1.0]);
        a.matvec(&[0.0, 1.0], &mut y);
        assert_eq!(y, vec![-1.0, 1.0 + 2.0]);
    }

    #[test]
    fn cg_and_cholesky_agree_on_neumann() {
        let n = 40;
        let a = neumann(n);
        let b: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.3).sin()).collect();
        for jacobi in [false, true] {
            let mut x = vec![0.0; n];
            let out = cg_nullspace(&a, &b, &mut x, &CgOptions { jacobi, ..Default::default() }).unwrap();
            assert!(out.residual <= 1e-8);
            let chol = SkylineCholesky::factor_pinned(&a, 0).unwrap();
            let y = chol.solve(&{
                let mut c = b.clone();
                remove_mean(&mut c);
                c
            });
            assert!(chol.relative_residual(&b, &y) < 1e-12);
            // same solution up to a constant
            let shift = x[0] - y[0];
            for i in 0..n {
                assert!((x[i] - y[i] - shift).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn cg_zero_rhs_and_iteration_cap() {
        let a = neumann(10);
        let mut x = vec![1.0; 10];
        cg_nullspace(&a, &[0.0; 10], &mut x, &CgOptions::default()).unwrap();
        assert!(x.iter().all(|v| *v == 0.0));
        let n = 200;
        let a = neumann(n);
        let b: Vec<f64> = (0..n).map(|i| if i < n / 2 { 1.0 } else { -1.0 }).collect();
        let mut x = vec![0.0; n];
        let err = cg_nullspace(
            &a,
            &b,
            &mut x,
            &CgOptions {
                max_iters: Some(3),
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iterations: 3, .. }));
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Csr::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(SkylineCholesky::factor_pinned(&a, 0).is_err());
    }
}
