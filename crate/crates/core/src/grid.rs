//! Tensor grids on the rescaled wire `Ω^a = Θ × (0,1)` and film
//! `Ω^b = Θ × (-1,0)`, on the limit domains `(0,1)` and `Θ`, plus boundary
//! masks and the junction interpolation map.
//!
//! `Θ` is the square `(-1/2, 1/2)²`. Node storage is x1-fastest, x3-slowest,
//! so a horizontal layer is a contiguous block.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which rescaled subdomain a grid discretizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    WireA,
    FilmB,
}

/// Boundary condition family for the polarization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum BcVariant {
    /// `p·ν = 0` on the outer boundary.
    #[default]
    TangentialNuZero,
    /// `p ∥ e3` on the outer boundary.
    ParallelE3,
}

/// Trapezoidal weights for `n` uniformly spaced nodes with spacing `d`.
pub fn trapezoid_weights(n: usize, d: f64) -> Vec<f64> {
    let mut w = vec![d; n];
    if n > 1 {
        w[0] = 0.5 * d;
        w[n - 1] = 0.5 * d;
    }
    w
}

fn check_dim(n: usize, what: &str) -> Result<()> {
    if n < 3 {
        return Err(Error::Grid(format!("{what} has {n} nodes, at least 3 are required")));
    }
    Ok(())
}

fn check_thickness(h: f64) -> Result<()> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::Grid(format!("thickness {h} is outside (0, 1)")));
    }
    Ok(())
}

/// Uniform tensor grid on one of the rescaled 3D subdomains.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid3 {
    pub domain: Domain,
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    /// Derivative scale per axis: `(1/h_a, 1/h_a, 1)` on the wire and
    /// `(1, 1, 1/h_b)` on the film.
    pub scale: [f64; 3],
    pub origin: [f64; 3],
    pub extent: [f64; 3],
    /// `h_a` for the wire, `h_b` for the film.
    pub thickness: f64,
}

impl Grid3 {
    /// Grid on `Ω^a = Θ × (0,1)`.
    pub fn wire(dims: [usize; 3], h_a: f64) -> Result<Self> {
        Self::build(Domain::WireA, dims, h_a)
    }

    /// Grid on `Ω^b = Θ × (-1,0)`.
    pub fn film(dims: [usize; 3], h_b: f64) -> Result<Self> {
        Self::build(Domain::FilmB, dims, h_b)
    }

    fn build(domain: Domain, dims: [usize; 3], h: f64) -> Result<Self> {
        for (axis, &n) in dims.iter().enumerate() {
            check_dim(n, &format!("axis {}", axis + 1))?;
        }
        check_thickness(h)?;
        let (origin, scale) = match domain {
            Domain::WireA => ([-0.5, -0.5, 0.0], [1.0 / h, 1.0 / h, 1.0]),
            Domain::FilmB => ([-0.5, -0.5, -1.0], [1.0, 1.0, 1.0 / h]),
        };
        let extent = [1.0; 3];
        let spacing = [0, 1, 2].map(|a| extent[a] / (dims[a] - 1) as f64);
        Ok(Self {
            domain,
            dims,
            spacing,
            scale,
            origin,
            extent,
            thickness: h,
        })
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of nodes in one horizontal layer.
    pub fn layer_len(&self) -> usize {
        self.dims[0] * self.dims[1]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn unravel(&self, n: usize) -> [usize; 3] {
        let i = n % self.dims[0];
        let r = n / self.dims[0];
        [i, r % self.dims[1], r / self.dims[1]]
    }

    /// Coordinate of node `m` along `axis`; end nodes are exact.
    #[inline]
    pub fn axis_coord(&self, axis: usize, m: usize) -> f64 {
        self.origin[axis] + self.extent[axis] * m as f64 / (self.dims[axis] - 1) as f64
    }

    pub fn coords(&self, n: usize) -> [f64; 3] {
        let ijk = self.unravel(n);
        [0, 1, 2].map(|a| self.axis_coord(a, ijk[a]))
    }

    /// Tensor-product trapezoidal quadrature weights, one per node.
    pub fn weights(&self) -> Vec<f64> {
        let w = [0, 1, 2].map(|a| trapezoid_weights(self.dims[a], self.spacing[a]));
        let mut out = Vec::with_capacity(self.len());
        for k in 0..self.dims[2] {
            for j in 0..self.dims[1] {
                for i in 0..self.dims[0] {
                    out.push(w[0][i] * w[1][j] * w[2][k]);
                }
            }
        }
        out
    }

    /// Index of the horizontal layer lying on the junction plane `x3 = 0`.
    pub fn junction_layer(&self) -> usize {
        match self.domain {
            Domain::WireA => 0,
            Domain::FilmB => self.dims[2] - 1,
        }
    }
}

/// Uniform grid on `[0, 1]` for the wire limit profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1 {
    pub n: usize,
    pub spacing: f64,
}

impl Grid1 {
    pub fn new(n: usize) -> Result<Self> {
        check_dim(n, "1D grid")?;
        Ok(Self {
            n,
            spacing: 1.0 / (n - 1) as f64,
        })
    }

    pub fn coord(&self, m: usize) -> f64 {
        m as f64 / (self.n - 1) as f64
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.coord(m)).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        trapezoid_weights(self.n, self.spacing)
    }
}

/// Uniform tensor grid on `Θ` for the film limit field.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2 {
    pub dims: [usize; 2],
    pub spacing: [f64; 2],
    /// Node standing in for the point `0'`.
    pub pin: [usize; 2],
}

impl Grid2 {
    /// The pin is the node nearest to `0'`; for even sizes the tie goes to the
    /// lower index.
    pub fn new(dims: [usize; 2]) -> Result<Self> {
        check_dim(dims[0], "2D grid axis 1")?;
        check_dim(dims[1], "2D grid axis 2")?;
        let pin = dims.map(|n| if n % 2 == 1 { (n - 1) / 2 } else { n / 2 - 1 });
        Ok(Self {
            dims,
            spacing: dims.map(|n| 1.0 / (n - 1) as f64),
            pin,
        })
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.dims[0] * j
    }

    pub fn pin_index(&self) -> usize {
        self.index(self.pin[0], self.pin[1])
    }

    #[inline]
    pub fn axis_coord(&self, axis: usize, m: usize) -> f64 {
        -0.5 + m as f64 / (self.dims[axis] - 1) as f64
    }

    pub fn coords(&self, n: usize) -> [f64; 2] {
        let i = n % self.dims[0];
        let j = n / self.dims[0];
        [self.axis_coord(0, i), self.axis_coord(1, j)]
    }

    pub fn weights(&self) -> Vec<f64> {
        let w0 = trapezoid_weights(self.dims[0], self.spacing[0]);
        let w1 = trapezoid_weights(self.dims[1], self.spacing[1]);
        let mut out = Vec::with_capacity(self.len());
        for wj in &w1 {
            for wi in &w0 {
                out.push(wi * wj);
            }
        }
        out
    }

    /// Dimensions as a 3D array with a singleton third axis.
    pub fn dims3(&self) -> [usize; 3] {
        [self.dims[0], self.dims[1], 1]
    }

    /// Bilinear interpolation of nodal `values` at `(y1, y2)` in `Θ`.
    pub fn interpolate(&self, values: &[f64], y: [f64; 2]) -> f64 {
        let (n0, w0) = bilinear_axis(y[0], self.dims[0]);
        let (n1, w1) = bilinear_axis(y[1], self.dims[1]);
        let mut s = 0.0;
        for (a, wa) in [(n0, 1.0 - w0), (n0 + 1, w0)] {
            for (b, wb) in [(n1, 1.0 - w1), (n1 + 1, w1)] {
                s += wa * wb * values[self.index(a, b)];
            }
        }
        s
    }
}

/// Cell index and fractional offset of coordinate `y ∈ [-1/2, 1/2]` on an
/// axis with `n` nodes.
fn bilinear_axis(y: f64, n: usize) -> (usize, f64) {
    let t = ((y + 0.5) * (n - 1) as f64).clamp(0.0, (n - 1) as f64);
    let i0 = (t.floor() as usize).min(n - 2);
    (i0, t - i0 as f64)
}

/// Linear interpolation of a profile sampled on `grid` at `x ∈ [0, 1]`.
pub fn interpolate_1d(grid: &Grid1, values: &[f64], x: f64) -> f64 {
    let t = (x * (grid.n - 1) as f64).clamp(0.0, (grid.n - 1) as f64);
    let i0 = (t.floor() as usize).min(grid.n - 2);
    let f = t - i0 as f64;
    (1.0 - f) * values[i0] + f * values[i0 + 1]
}

/// Per-node, per-component constraint flags for one subdomain.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMask {
    pub kind: BcVariant,
    pub dims: [usize; 3],
    pub constrained: Vec<[bool; 3]>,
    /// Nodes on the plane `x3 = 0`.
    pub junction_face: Vec<bool>,
}

impl BoundaryMask {
    fn faces(grid: &Grid3, kind: BcVariant, skip_layer: usize) -> Self {
        let [n0, n1, n2] = grid.dims;
        let mut constrained = vec![[false; 3]; grid.len()];
        let mut junction_face = vec![false; grid.len()];
        let jl = grid.junction_layer();
        for n in 0..grid.len() {
            let [i, j, k] = grid.unravel(n);
            junction_face[n] = k == jl;
            if k == skip_layer && grid.domain == Domain::WireA {
                continue;
            }
            let on_x1 = i == 0 || i == n0 - 1;
            let on_x2 = j == 0 || j == n1 - 1;
            let on_x3 = k != jl && (k == 0 || k == n2 - 1);
            let c = &mut constrained[n];
            match kind {
                BcVariant::TangentialNuZero => {
                    c[0] |= on_x1;
                    c[1] |= on_x2;
                    c[2] |= on_x3;
                }
                BcVariant::ParallelE3 => {
                    if on_x1 || on_x2 || on_x3 {
                        c[0] = true;
                        c[1] = true;
                    }
                }
            }
        }
        Self {
            kind,
            dims: grid.dims,
            constrained,
            junction_face,
        }
    }

    /// Mask on the wire. The bottom layer carries no flags: its values are
    /// dependent on the film through the junction map.
    pub fn wire(grid: &Grid3, kind: BcVariant) -> Self {
        Self::faces(grid, kind, 0)
    }

    /// Mask on the film, including the junction-plane nodes outside
    /// `h_a·Θ` (third component for the tangential variant, in-plane
    /// components for the parallel variant).
    pub fn film(grid: &Grid3, kind: BcVariant, junction: &JunctionMap) -> Self {
        let mut mask = Self::faces(grid, kind, usize::MAX);
        let top = grid.junction_layer() * grid.layer_len();
        for (m, &outside) in junction.outside.iter().enumerate() {
            if !outside {
                continue;
            }
            let c = &mut mask.constrained[top + m];
            match kind {
                BcVariant::TangentialNuZero => c[2] = true,
                BcVariant::ParallelE3 => {
                    c[0] = true;
                    c[1] = true;
                }
            }
        }
        mask
    }

    pub fn len(&self) -> usize {
        self.constrained.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constrained.is_empty()
    }

    pub fn constrained_count(&self, n: usize) -> usize {
        self.constrained[n].iter().filter(|&&c| c).count()
    }
}

/// Bilinear stencil into the film's junction plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionStencil {
    /// Film node indices (full 3D indices).
    pub nodes: [usize; 4],
    pub weights: [f64; 4],
}

/// Couples the wire's bottom face `(x', 0)` to the film plane at `(h_a x', 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionMap {
    pub h_a: f64,
    /// One stencil per wire bottom-face node, in layer order.
    pub stencils: Vec<JunctionStencil>,
    /// One flag per film junction-plane node: true outside the closed square
    /// of side `h_a` centred at `0'`.
    pub outside: Vec<bool>,
}

impl JunctionMap {
    pub fn build(grid_a: &Grid3, grid_b: &Grid3, h_a: f64) -> Result<Self> {
        if grid_a.domain != Domain::WireA || grid_b.domain != Domain::FilmB {
            return Err(Error::Grid("junction map needs a wire grid and a film grid".into()));
        }
        if (grid_a.thickness - h_a).abs() > 1e-14 {
            return Err(Error::Grid(format!(
                "junction h_a = {h_a} does not match the wire grid thickness {}",
                grid_a.thickness
            )));
        }
        let [nb0, nb1, nb2] = grid_b.dims;
        let top = nb2 - 1;
        let mut stencils = Vec::with_capacity(grid_a.layer_len());
        for j in 0..grid_a.dims[1] {
            for i in 0..grid_a.dims[0] {
                let y1 = h_a * grid_a.axis_coord(0, i);
                let y2 = h_a * grid_a.axis_coord(1, j);
                let (i0, f1) = bilinear_axis(y1, nb0);
                let (j0, f2) = bilinear_axis(y2, nb1);
                stencils.push(JunctionStencil {
                    nodes: [
                        grid_b.index(i0, j0, top),
                        grid_b.index(i0 + 1, j0, top),
                        grid_b.index(i0, j0 + 1, top),
                        grid_b.index(i0 + 1, j0 + 1, top),
                    ],
                    weights: [
                        (1.0 - f1) * (1.0 - f2),
                        f1 * (1.0 - f2),
                        (1.0 - f1) * f2,
                        f1 * f2,
                    ],
                });
            }
        }
        let half = 0.5 * h_a + 1e-12;
        let mut outside = Vec::with_capacity(nb0 * nb1);
        for j in 0..nb1 {
            for i in 0..nb0 {
                let x1 = grid_b.axis_coord(0, i);
                let x2 = grid_b.axis_coord(1, j);
                outside.push(x1.abs() > half || x2.abs() > half);
            }
        }
        Ok(Self {
            h_a,
            stencils,
            outside,
        })
    }

    /// Interpolated film values, one per wire bottom-face node.
    pub fn interpolate(&self, film_values: &[f64]) -> Vec<f64> {
        self.stencils
            .iter()
            .map(|s| {
                s.nodes
                    .iter()
                    .zip(&s.weights)
                    .map(|(&n, &w)| w * film_values[n])
                    .sum()
            })
            .collect()
    }

    /// Transpose of [`Self::interpolate`]: accumulates bottom-face values
    /// back onto the film nodes.
    pub fn scatter_add(&self, bottom_values: &[f64], film_out: &mut [f64]) {
        for (s, &v) in self.stencils.iter().zip(bottom_values) {
            for (&n, &w) in s.nodes.iter().zip(&s.weights) {
                film_out[n] += w * v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_grid_scales_and_spacing() {
        let g = Grid3::wire([5, 5, 5], 0.1).unwrap();
        assert_eq!(g.scale, [10.0, 10.0, 1.0]);
        assert_eq!(g.spacing, [0.25, 0.25, 0.25]);
        assert_eq!(g.axis_coord(2, 4), 1.0);
        assert_eq!(g.axis_coord(0, 2), 0.0);
    }

    #[test]
    fn film_grid_scales() {
        let g = Grid3::film([5, 5, 5], 0.01).unwrap();
        assert_eq!(g.scale, [1.0, 1.0, 100.0]);
        assert_eq!(g.axis_coord(2, 0), -1.0);
        assert_eq!(g.axis_coord(2, 4), 0.0);
    }

    #[test]
    fn too_few_nodes_rejected() {
        assert!(Grid3::wire([2, 5, 5], 0.1).is_err());
        assert!(Grid1::new(2).is_err());
        assert!(Grid2::new([5, 2]).is_err());
        assert!(Grid3::film([5, 5, 5], 1.0).is_err());
    }

    #[test]
    fn quadrature_weights_integrate_one() {
        let g = Grid3::film([4, 6, 7], 0.3).unwrap();
        let s: f64 = g.weights().iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn grid1_nodes() {
        let g = Grid1::new(5).unwrap();
        assert_eq!(g.coords(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn grid2_pin_odd_and_even() {
        let g = Grid2::new([5, 5]).unwrap();
        assert_eq!(g.pin, [2, 2]);
        assert_eq!(g.coords(g.pin_index()), [0.0, 0.0]);
        let g = Grid2::new([4, 4]).unwrap();
        assert_eq!(g.pin, [1, 1]);
    }

    #[test]
    fn junction_center_hits_node_exactly() {
        let a = Grid3::wire([5, 5, 5], 0.3).unwrap();
        let b = Grid3::film([9, 9, 5], 0.09).unwrap();
        let jm = JunctionMap::build(&a, &b, 0.3).unwrap();
        let s = jm.stencils[a.index(2, 2, 0)];
        assert_eq!(s.weights[0], 1.0);
        assert_eq!(s.nodes[0], b.index(4, 4, 4));
    }

    #[test]
    fn junction_partition_of_unity_and_affine_exactness() {
        let a = Grid3::wire([6, 7, 5], 0.37).unwrap();
        let b = Grid3::film([8, 5, 4], 0.1).unwrap();
        let jm = JunctionMap::build(&a, &b, 0.37).unwrap();
        let values: Vec<f64> = (0..b.len())
            .map(|n| {
                let x = b.coords(n);
                1.5 - 2.0 * x[0] + 0.7 * x[1]
            })
            .collect();
        let interp = jm.interpolate(&values);
        for (m, v) in interp.iter().enumerate() {
            let x = a.coords(m);
            let expected = 1.5 - 2.0 * 0.37 * x[0] + 0.7 * 0.37 * x[1];
            assert!((v - expected).abs() < 1e-13);
        }
        for s in &jm.stencils {
            assert!(s.weights.iter().all(|&w| w >= 0.0));
            assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn junction_outside_mask() {
        let a = Grid3::wire([5, 5, 5], 0.5).unwrap();
        let b = Grid3::film([11, 11, 5], 0.25).unwrap();
        let jm = JunctionMap::build(&a, &b, 0.5).unwrap();
        // b node at (0.4, 0.0) lies outside the square of half-side 0.25
        assert!(jm.outside[9 + 11 * 5]);
        // (0.2, 0.0) is inside
        assert!(!jm.outside[7 + 11 * 5]);
    }

    #[test]
    fn junction_rejects_mismatched_thickness() {
        let a = Grid3::wire([5, 5, 5], 0.5).unwrap();
        let b = Grid3::film([5, 5, 5], 0.25).unwrap();
        assert!(JunctionMap::build(&a, &b, 0.4).is_err());
        assert!(JunctionMap::build(&b, &a, 0.5).is_err());
    }

    #[test]
    fn mask_counts_on_face_interiors() {
        let a = Grid3::wire([5, 5, 5], 0.5).unwrap();
        let b = Grid3::film([5, 5, 5], 0.25).unwrap();
        let jm = JunctionMap::build(&a, &b, 0.5).unwrap();
        for (kind, expected) in [(BcVariant::TangentialNuZero, 1), (BcVariant::ParallelE3, 2)] {
            let ma = BoundaryMask::wire(&a, kind);
            let mb = BoundaryMask::film(&b, kind, &jm);
            // face-interior nodes: lateral face x1 = -1/2 and the wire top
            assert_eq!(ma.constrained_count(a.index(0, 2, 2)), expected);
            assert_eq!(ma.constrained_count(a.index(2, 2, 4)), expected);
            assert_eq!(mb.constrained_count(b.index(2, 0, 2)), expected);
            assert_eq!(mb.constrained_count(b.index(2, 2, 0)), expected);
            // interior nodes are free
            assert_eq!(ma.constrained_count(a.index(2, 2, 2)), 0);
            // bottom layer of the wire is dependent, not masked
            assert_eq!(ma.constrained_count(a.index(0, 0, 0)), 0);
            assert!(ma.junction_face[a.index(1, 1, 0)]);
            assert!(mb.junction_face[b.index(1, 1, 4)]);
        }
        // edges accumulate incident faces
        let ma = BoundaryMask::wire(&a, BcVariant::TangentialNuZero);
        assert_eq!(ma.constrained[a.index(0, 0, 4)], [true, true, true]);
    }

    #[test]
    fn film_outside_plane_flags() {
        let a = Grid3::wire([5, 5, 5], 0.5).unwrap();
        let b = Grid3::film([5, 5, 5], 0.25).unwrap();
        let jm = JunctionMap::build(&a, &b, 0.5).unwrap();
        let mt = BoundaryMask::film(&b, BcVariant::TangentialNuZero, &jm);
        let mp = BoundaryMask::film(&b, BcVariant::ParallelE3, &jm);
        // (0.25, 0) is on the closed square boundary → inside
        assert_eq!(mt.constrained[b.index(3, 2, 4)], [false, false, false]);
        // (0.5, 0.25) outside and on the x1 face
        assert_eq!(mt.constrained[b.index(4, 3, 4)], [true, false, true]);
        assert_eq!(mp.constrained[b.index(1, 1, 4)], [false, false, false]);
        assert_eq!(mp.constrained[b.index(4, 3, 4)], [true, true, false]);
    }
}
