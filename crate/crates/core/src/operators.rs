//! Scaled discrete vector calculus on collocated tensor grids.
//!
//! Every derivative is a second-order central difference in the interior
//! with second-order one-sided closures on the end nodes of each axis. The
//! scaled operators multiply the axis derivative by the grid's anisotropy
//! scale, so on the wire `D_n = (∂1/h_a, ∂2/h_a, ∂3)` and on the film
//! `D_n = (∂1, ∂2, ∂3/h_b)`.
//!
//! Each operator has an explicit transpose (`*_t`), used to form exact
//! gradients of discrete energies.

use crate::error::{Error, Result};
use crate::grid::{BcVariant, BoundaryMask, Grid3};

pub type ScalarField3 = Vec<f64>;
pub type ScalarField2 = Vec<f64>;
pub type ScalarField1 = Vec<f64>;

/// Three nodal component arrays on a [`Grid3`].
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField3 {
    pub c: [Vec<f64>; 3],
}

impl VectorField3 {
    pub fn zeros(n: usize) -> Self {
        Self {
            c: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    pub fn from_fn(grid: &Grid3, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut out = Self::zeros(grid.len());
        for n in 0..grid.len() {
            let v = f(grid.coords(n));
            for k in 0..3 {
                out.c[k][n] = v[k];
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.c[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.c[0].is_empty()
    }

    #[inline]
    pub fn at(&self, n: usize) -> [f64; 3] {
        [self.c[0][n], self.c[1][n], self.c[2][n]]
    }

    #[inline]
    pub fn norm_sq_at(&self, n: usize) -> f64 {
        self.c[0][n] * self.c[0][n] + self.c[1][n] * self.c[1][n] + self.c[2][n] * self.c[2][n]
    }

    pub fn scale(&mut self, s: f64) {
        for comp in &mut self.c {
            comp.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn axpy(&mut self, a: f64, other: &VectorField3) {
        for k in 0..3 {
            for (x, y) in self.c[k].iter_mut().zip(&other.c[k]) {
                *x += a * y;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.c
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Stencil of the axis derivative at position `m` of `n` nodes with spacing `d`:
/// `(position, coefficient)` triples.
#[inline]
pub fn axis_stencil(m: usize, n: usize, d: f64) -> [(usize, f64); 3] {
    let h = 0.5 / d;
    if m == 0 {
        [(0, -3.0 * h), (1, 4.0 * h), (2, -h)]
    } else if m == n - 1 {
        [(n - 1, 3.0 * h), (n - 2, -4.0 * h), (n - 3, h)]
    } else {
        [(m + 1, h), (m - 1, -h), (m, 0.0)]
    }
}

#[inline]
fn stride(dims: [usize; 3], axis: usize) -> usize {
    match axis {
        0 => 1,
        1 => dims[0],
        _ => dims[0] * dims[1],
    }
}

/// `out += scale · D_axis u` on a field with shape `dims`.
pub fn diff_axis(u: &[f64], dims: [usize; 3], axis: usize, d: f64, scale: f64, out: &mut [f64]) {
    let s = stride(dims, axis);
    let n_ax = dims[axis];
    for (node, o) in out.iter_mut().enumerate() {
        let m = (node / s) % n_ax;
        let base = node - m * s;
        let mut acc = 0.0;
        for (pos, coef) in axis_stencil(m, n_ax, d) {
            acc += coef * u[base + pos * s];
        }
        *o += scale * acc;
    }
}

/// `out += scale · D_axisᵀ v`.
pub fn diff_axis_t(v: &[f64], dims: [usize; 3], axis: usize, d: f64, scale: f64, out: &mut [f64]) {
    let s = stride(dims, axis);
    let n_ax = dims[axis];
    for (node, &vn) in v.iter().enumerate() {
        if vn == 0.0 {
            continue;
        }
        let m = (node / s) % n_ax;
        let base = node - m * s;
        for (pos, coef) in axis_stencil(m, n_ax, d) {
            out[base + pos * s] += scale * coef * vn;
        }
    }
}

/// Scaled gradient `D_n u`.
pub fn grad_scaled(u: &[f64], g: &Grid3) -> VectorField3 {
    let mut out = VectorField3::zeros(g.len());
    for axis in 0..3 {
        diff_axis(u, g.dims, axis, g.spacing[axis], g.scale[axis], &mut out.c[axis]);
    }
    out
}

/// Transpose of [`grad_scaled`].
pub fn grad_scaled_t(v: &VectorField3, g: &Grid3) -> ScalarField3 {
    let mut out = vec![0.0; g.len()];
    for axis in 0..3 {
        diff_axis_t(&v.c[axis], g.dims, axis, g.spacing[axis], g.scale[axis], &mut out);
    }
    out
}

/// Scaled divergence `div_n p`.
pub fn div_scaled(p: &VectorField3, g: &Grid3) -> ScalarField3 {
    let mut out = vec![0.0; g.len()];
    for axis in 0..3 {
        diff_axis(&p.c[axis], g.dims, axis, g.spacing[axis], g.scale[axis], &mut out);
    }
    out
}

/// Transpose of [`div_scaled`].
pub fn div_scaled_t(v: &[f64], g: &Grid3) -> VectorField3 {
    let mut out = VectorField3::zeros(g.len());
    for axis in 0..3 {
        diff_axis_t(v, g.dims, axis, g.spacing[axis], g.scale[axis], &mut out.c[axis]);
    }
    out
}

// (component of rot, component of p, axis, sign)
const ROT_TERMS: [(usize, usize, usize, f64); 6] = [
    (0, 2, 1, 1.0),
    (0, 1, 2, -1.0),
    (1, 0, 2, 1.0),
    (1, 2, 0, -1.0),
    (2, 1, 0, 1.0),
    (2, 0, 1, -1.0),
];

/// Scaled curl `rot_n p`.
pub fn rot_scaled(p: &VectorField3, g: &Grid3) -> VectorField3 {
    let mut out = VectorField3::zeros(g.len());
    for (r, c, axis, sign) in ROT_TERMS {
        diff_axis(&p.c[c], g.dims, axis, g.spacing[axis], sign * g.scale[axis], &mut out.c[r]);
    }
    out
}

/// Transpose of [`rot_scaled`].
pub fn rot_scaled_t(v: &VectorField3, g: &Grid3) -> VectorField3 {
    let mut out = VectorField3::zeros(g.len());
    for (r, c, axis, sign) in ROT_TERMS {
        diff_axis_t(&v.c[r], g.dims, axis, g.spacing[axis], sign * g.scale[axis], &mut out.c[c]);
    }
    out
}

/// Zeroes the components flagged in `mask`.
pub fn project(p: &VectorField3, g: &Grid3, mask: &BoundaryMask) -> Result<VectorField3> {
    if mask.dims != g.dims || p.len() != g.len() {
        return Err(Error::Shape(format!(
            "mask dims {:?} / field length {} do not match grid dims {:?}",
            mask.dims,
            p.len(),
            g.dims
        )));
    }
    let mut out = p.clone();
    apply_mask(&mut out, mask);
    Ok(out)
}

pub(crate) fn apply_mask(p: &mut VectorField3, mask: &BoundaryMask) {
    for (n, flags) in mask.constrained.iter().enumerate() {
        for k in 0..3 {
            if flags[k] {
                p.c[k][n] = 0.0;
            }
        }
    }
}

fn project_kind(p: &VectorField3, g: &Grid3, mask: &BoundaryMask, kind: BcVariant) -> Result<VectorField3> {
    if mask.kind != kind {
        return Err(Error::Shape(format!("mask is {:?}, expected {:?}", mask.kind, kind)));
    }
    project(p, g, mask)
}

/// Enforces `p·ν = 0` by zeroing the normal components flagged in a
/// tangential mask.
pub fn project_tangential(p: &VectorField3, g: &Grid3, mask: &BoundaryMask) -> Result<VectorField3> {
    project_kind(p, g, mask, BcVariant::TangentialNuZero)
}

/// Enforces `p ∥ e3` by zeroing in-plane components flagged in the mask.
pub fn project_parallel_e3(p: &VectorField3, g: &Grid3, mask: &BoundaryMask) -> Result<VectorField3> {
    project_kind(p, g, mask, BcVariant::ParallelE3)
}

/// Trapezoidal quadrature of nodal values over the grid.
pub fn integrate(values: &[f64], g: &Grid3) -> f64 {
    weighted_sum(values, &g.weights())
}

#[inline]
pub fn weighted_sum(values: &[f64], weights: &[f64]) -> f64 {
    values.iter().zip(weights).map(|(v, w)| v * w).sum()
}

/// `Σ w |v|²` over all components.
pub fn weighted_norm_sq(v: &VectorField3, weights: &[f64]) -> f64 {
    v.c.iter()
        .map(|c| c.iter().zip(weights).map(|(x, w)| w * x * x).sum::<f64>())
        .sum()
}

/// `‖p‖_{L⁴}` with trapezoidal weights.
pub fn l4_norm(p: &VectorField3, weights: &[f64]) -> f64 {
    let s: f64 = (0..p.len())
        .map(|n| {
            let q = p.norm_sq_at(n);
            weights[n] * q * q
        })
        .sum();
    s.powf(0.25)
}

/// `‖D_n p‖_{L²}` over all nine entries.
pub fn grad_l2_norm(p: &VectorField3, g: &Grid3, weights: &[f64]) -> f64 {
    p.c.iter()
        .map(|comp| weighted_norm_sq(&grad_scaled(comp, g), weights))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::JunctionMap;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn sample(g: &Grid3, f: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
        (0..g.len()).map(|n| f(g.coords(n))).collect()
    }

    #[test]
    fn gradient_exact_on_linear() {
        let g = Grid3::wire([5, 6, 7], 0.1).unwrap();
        let du = grad_scaled(&sample(&g, |x| x[2]), &g);
        for n in 0..g.len() {
            assert!(du.c[0][n].abs() < 1e-12 && du.c[1][n].abs() < 1e-12);
            assert!((du.c[2][n] - 1.0).abs() < 1e-12);
        }
        let du = grad_scaled(&sample(&g, |x| x[0]), &g);
        for n in 0..g.len() {
            assert!((du.c[0][n] - 10.0).abs() < 1e-11);
        }
    }

    #[test]
    fn gradient_second_order() {
        let err = |n: usize| {
            let g = Grid3::wire([3, 3, n], 0.5).unwrap();
            let du = grad_scaled(&sample(&g, |x| (PI * x[2]).sin()), &g);
            (0..g.len())
                .map(|m| (du.c[2][m] - PI * (PI * g.coords(m)[2]).cos()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(33), err(65));
        assert!(e1 < 1e-2 * PI);
        assert!(e1 / e2 > 3.5, "ratio {}", e1 / e2);
    }

    #[test]
    fn divergence_cases() {
        let g = Grid3::film([5, 5, 5], 0.2).unwrap();
        let p = VectorField3::from_fn(&g, |x| [x[0], x[1], 0.0]);
        assert!(div_scaled(&p, &g).iter().all(|v| (v - 2.0).abs() < 1e-12));
        let c = grad_scaled(&vec![3.0; g.len()], &g);
        assert!(div_scaled(&c, &g).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn curl_cases() {
        let g = Grid3::film([5, 5, 5], 0.2).unwrap();
        let p = VectorField3::from_fn(&g, |x| [-x[1], x[0], 0.0]);
        let r = rot_scaled(&p, &g);
        for n in 0..g.len() {
            assert!(r.c[0][n].abs() < 1e-12 && r.c[1][n].abs() < 1e-12);
            assert!((r.c[2][n] - 2.0).abs() < 1e-12);
        }
        let g = Grid3::wire([5, 5, 9], 0.2).unwrap();
        let p = VectorField3::from_fn(&g, |x| [0.0, 0.0, (PI * x[2]).sin()]);
        assert!(rot_scaled(&p, &g).max_abs() < 1e-12);
    }

    proptest::proptest! {
        /// Transposes are adjoint in the plain Euclidean product on any shape,
        /// and `rot ∘ grad` vanishes to rounding.
        #[test]
        fn adjoint_identities_on_random_shapes(
            dims in proptest::array::uniform3(3usize..9),
            h in 0.05..0.9f64,
            film in proptest::prelude::any::<bool>(),
            seed in proptest::prelude::any::<u64>(),
        ) {
            let g = if film { Grid3::film(dims, h) } else { Grid3::wire(dims, h) }.unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut field = || {
                let mut v = VectorField3::zeros(g.len());
                v.c.iter_mut().for_each(|c| c.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0)));
                v
            };
            let (p, q) = (field(), field());
            let dot = |a: &VectorField3, b: &VectorField3| -> f64 {
                (0..3).map(|k| a.c[k].iter().zip(&b.c[k]).map(|(x, y)| x * y).sum::<f64>()).sum()
            };
            let (lhs, rhs) = (dot(&rot_scaled(&p, &g), &q), dot(&p, &rot_scaled_t(&q, &g)));
            proptest::prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0) * g.scale[2].max(g.scale[0]));
            let lhs: f64 = div_scaled(&p, &g).iter().zip(&q.c[2]).map(|(a, b)| a * b).sum();
            let rhs = dot(&p, &div_scaled_t(&q.c[2], &g));
            proptest::prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0) * g.scale[2].max(g.scale[0]));
            let rg = rot_scaled(&grad_scaled(&q.c[0], &g), &g);
            let size = grad_scaled(&q.c[0], &g).max_abs() * g.scale[0].max(g.scale[2]) / g.spacing.iter().fold(f64::INFINITY, |m, &d| m.min(d));
            proptest::prop_assert!(rg.max_abs() <= 1e-13 * size.max(1.0));
        }
    }

    #[test]
    fn transposes_match_inner_products() {
        let g = Grid3::wire([4, 5, 6], 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut rand_field = || {
            let mut v = VectorField3::zeros(g.len());
            v.c.iter_mut()
                .for_each(|c| c.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0)));
            v
        };
        let (p, q) = (rand_field(), rand_field());
        let dot = |a: &VectorField3, b: &VectorField3| -> f64 {
            (0..3).map(|k| a.c[k].iter().zip(&b.c[k]).map(|(x, y)| x * y).sum::<f64>()).sum()
        };
        let lhs = dot(&rot_scaled(&p, &g), &q);
        let rhs = dot(&p, &rot_scaled_t(&q, &g));
        assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0));
        let d = div_scaled(&p, &g);
        let lhs: f64 = d.iter().zip(&q.c[0]).map(|(a, b)| a * b).sum();
        let rhs = dot(&p, &div_scaled_t(&q.c[0], &g));
        assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0));
        let gu = grad_scaled(&q.c[1], &g);
        let lhs = dot(&gu, &p);
        let rhs: f64 = grad_scaled_t(&p, &g).iter().zip(&q.c[1]).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0));
    }

    #[test]
    fn projection_idempotent_and_faces() {
        let a = Grid3::wire([5, 5, 5], 0.5).unwrap();
        let b = Grid3::film([5, 5, 5], 0.25).unwrap();
        let jm = JunctionMap::build(&a, &b, 0.5).unwrap();
        let mask = BoundaryMask::wire(&a, BcVariant::TangentialNuZero);
        let ones = VectorField3::from_fn(&a, |_| [1.0, 1.0, 1.0]);
        let p1 = project_tangential(&ones, &a, &mask).unwrap();
        assert_eq!(p1.at(a.index(0, 2, 2)), [0.0, 1.0, 1.0]);
        assert_eq!(p1.at(a.index(2, 4, 2)), [1.0, 0.0, 1.0]);
        assert_eq!(p1.at(a.index(2, 2, 4)), [1.0, 1.0, 0.0]);
        assert_eq!(p1.at(a.index(2, 2, 2)), [1.0, 1.0, 1.0]);
        let p2 = project_tangential(&p1, &a, &mask).unwrap();
        assert_eq!(p1, p2);
        let z = VectorField3::zeros(a.len());
        assert_eq!(project_tangential(&z, &a, &mask).unwrap(), z);
        // mismatches are rejected
        let mb = BoundaryMask::film(&b, BcVariant::TangentialNuZero, &jm);
        let big = Grid3::wire([6, 5, 5], 0.5).unwrap();
        assert!(project(&VectorField3::zeros(big.len()), &big, &mb).is_err());
        assert!(project_parallel_e3(&ones, &a, &mask).is_err());
    }

    #[test]
    fn quadrature_cases() {
        let g = Grid3::wire([9, 9, 65], 0.2).unwrap();
        assert!((integrate(&vec![1.0; g.len()], &g) - 1.0).abs() < 1e-14);
        let s = integrate(&sample(&g, |x| (PI * x[2]).sin().powi(2)), &g);
        assert!((s - 0.5).abs() < 1e-4);
        let b = Grid3::film([8, 9, 5], 0.2).unwrap();
        assert!(integrate(&sample(&b, |x| x[0]), &b).abs() < 1e-15);
    }

    #[test]
    fn adjoint_consistency_on_interior_fields() {
        let g = Grid3::film([7, 8, 9], 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let interior = |n: usize| {
            let [i, j, k] = g.unravel(n);
            i > 0 && j > 0 && k > 0 && i < 6 && j < 7 && k < 8
        };
        let u: Vec<f64> = (0..g.len())
            .map(|n| if interior(n) { rng.gen_range(-1.0..1.0) } else { 0.0 })
            .collect();
        let mut p = VectorField3::zeros(g.len());
        for k in 0..3 {
            for n in 0..g.len() {
                if interior(n) {
                    p.c[k][n] = rng.gen_range(-1.0..1.0);
                }
            }
        }
        let w = g.weights();
        let gu = grad_scaled(&u, &g);
        let lhs: f64 = (0..3)
            .map(|k| (0..g.len()).map(|n| w[n] * gu.c[k][n] * p.c[k][n]).sum::<f64>())
            .sum();
        let dp = div_scaled(&p, &g);
        let rhs: f64 = (0..g.len()).map(|n| w[n] * u[n] * dp[n]).sum();
        assert!((lhs + rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()));
    }
}
