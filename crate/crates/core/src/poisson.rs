//! Potential problems of the nonlocal term.
//!
//! Every potential is the discrete Galerkin solution of a weighted
//! least-squares problem `min_φ Σ w_r ((Mφ)_r − p_r)²`, where `M` maps the
//! independent potential DOFs to sampled scaled gradients and `p` holds the
//! polarization samples. The normal equations `MᵀWM φ = MᵀW p` are the
//! discrete weak form; their nullspace is the constant potential, removed by a
//! normalization shift after the solve.
//!
//! Junction conditions are eliminated: the wire's bottom face is interpolated
//! from the film plane, and in the coupled limit model the wire profile's
//! endpoint aliases the film pin node.

use crate::error::{Error, Result};
use crate::grid::{Grid1, Grid2, Grid3, JunctionMap};
use crate::linalg::{cg_nullspace, CgOptions, CgOutcome, Csr, SkylineCholesky};
use crate::operators::axis_stencil;

/// How the normal equations are solved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverKind {
    /// Conjugate gradient on the complement of the constants.
    Cg(CgOptions),
    /// Envelope Cholesky factorization computed once, with one DOF pinned.
    Direct,
}

impl Default for SolverKind {
    fn default() -> Self {
        SolverKind::Cg(CgOptions::default())
    }
}

/// Least-squares gradient system with its assembled normal operator.
#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    /// DOFs → gradient samples.
    pub m: Csr,
    /// Row weights of the potential problem.
    pub w_solve: Vec<f64>,
    /// Row weights of the nonlocal energy term.
    pub w_energy: Vec<f64>,
    /// Quadrature weights on DOFs of the integral fixed to zero.
    pub norm_weights: Vec<f64>,
    pub a: Csr,
    solver: SolverKind,
    chol: Option<SkylineCholesky>,
    same_weights: bool,
}

impl GalerkinSystem {
    pub fn new(
        m: Csr,
        w_solve: Vec<f64>,
        w_energy: Vec<f64>,
        norm_weights: Vec<f64>,
        solver: SolverKind,
    ) -> Result<Self> {
        let a = m.weighted_normal(&w_solve);
        let chol = match solver {
            SolverKind::Direct => Some(SkylineCholesky::factor_pinned(&a, 0)?),
            SolverKind::Cg(_) => None,
        };
        let same_weights = w_solve == w_energy;
        Ok(Self {
            m,
            w_solve,
            w_energy,
            norm_weights,
            a,
            solver,
            chol,
            same_weights,
        })
    }

    pub fn ndof(&self) -> usize {
        self.m.ncols
    }

    pub fn nsamples(&self) -> usize {
        self.m.nrows
    }

    fn solve_normal(&self, rhs: &[f64]) -> Result<(Vec<f64>, CgOutcome)> {
        match (&self.chol, self.solver) {
            (Some(chol), _) => {
                let x = chol.solve(rhs);
                let residual = chol.relative_residual(rhs, &x);
                Ok((
                    x,
                    CgOutcome {
                        iterations: 0,
                        residual,
                    },
                ))
            }
            (None, SolverKind::Cg(opts)) => {
                let mut x = vec![0.0; rhs.len()];
                let out = cg_nullspace(&self.a, rhs, &mut x, &opts)?;
                Ok((x, out))
            }
            (None, SolverKind::Direct) => unreachable!("direct solver without factor"),
        }
    }

    fn normalize(&self, x: &mut [f64]) {
        let total: f64 = self.norm_weights.iter().sum();
        let c = crate::linalg::dot(&self.norm_weights, x) / total;
        x.iter_mut().for_each(|v| *v -= c);
    }

    /// `MᵀW p` for samples `p`.
    pub fn rhs(&self, p: &[f64]) -> Vec<f64> {
        let wp: Vec<f64> = p.iter().zip(&self.w_solve).map(|(p, w)| p * w).collect();
        let mut out = vec![0.0; self.ndof()];
        self.m.matvec_t_add(&wp, &mut out);
        out
    }

    /// Normalized potential DOFs for polarization samples `p`.
    pub fn solve(&self, p: &[f64]) -> Result<(Vec<f64>, CgOutcome)> {
        if p.len() != self.nsamples() {
            return Err(Error::Shape(format!(
                "expected {} polarization samples, got {}",
                self.nsamples(),
                p.len()
            )));
        }
        let rhs = self.rhs(p);
        let (mut x, out) = self.solve_normal(&rhs)?;
        self.normalize(&mut x);
        Ok((x, out))
    }

    /// Sampled gradient `Mφ`.
    pub fn gradient_samples(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.nsamples()];
        self.m.matvec(x, &mut g);
        g
    }

    /// Nonlocal energy `Σ w_energy |Mφ|²` of the solved potential `x` for the
    /// samples `p`. With equal weights it is evaluated as
    /// `2Σ w p·Mφ − Σ w |Mφ|²`, which agrees at the exact solution and is
    /// insensitive to first order in the solve error.
    pub fn nonlocal(&self, x: &[f64], p: &[f64]) -> f64 {
        let g = self.gradient_samples(x);
        if self.same_weights {
            return g
                .iter()
                .zip(p)
                .zip(&self.w_energy)
                .map(|((g, p), w)| w * (2.0 * p - g) * g)
                .sum();
        }
        g.iter().zip(&self.w_energy).map(|(g, w)| w * g * g).sum()
    }

    /// Derivative of the nonlocal energy with respect to the polarization
    /// samples, given the solved potential `x`. When the solve and energy
    /// weights differ this needs one adjoint solve.
    pub fn nonlocal_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let g = self.gradient_samples(x);
        if self.same_weights {
            return Ok(g.iter().zip(&self.w_energy).map(|(g, w)| 2.0 * w * g).collect());
        }
        let kg: Vec<f64> = g.iter().zip(&self.w_energy).map(|(g, w)| w * g).collect();
        let mut kx = vec![0.0; self.ndof()];
        self.m.matvec_t_add(&kg, &mut kx);
        let (z, _) = self.solve_normal(&kx)?;
        let mz = self.gradient_samples(&z);
        Ok(mz.iter().zip(&self.w_solve).map(|(g, w)| 2.0 * w * g).collect())
    }

    /// Residual of the energy identity `Σ w|Mφ|² = Σ w p·Mφ` (solve weights),
    /// relative to the left side.
    pub fn energy_identity_defect(&self, p: &[f64], x: &[f64]) -> f64 {
        let g = self.gradient_samples(x);
        let lhs: f64 = g.iter().zip(&self.w_solve).map(|(g, w)| w * g * g).sum();
        let rhs: f64 = g.iter().zip(p).zip(&self.w_solve).map(|((g, p), w)| w * g * p).sum();
        if lhs == 0.0 {
            rhs.abs()
        } else {
            (lhs - rhs).abs() / lhs
        }
    }
}

/// Nodal entries `(node, coef)` of the scaled derivative along `axis` at
/// `node` on a tensor grid with shape `dims`.
fn derivative_entries(
    node: usize,
    dims: [usize; 3],
    axis: usize,
    d: f64,
    scale: f64,
) -> impl Iterator<Item = (usize, f64)> {
    let stride = match axis {
        0 => 1,
        1 => dims[0],
        _ => dims[0] * dims[1],
    };
    let m = (node / stride) % dims[axis];
    let base = node - m * stride;
    axis_stencil(m, dims[axis], d)
        .into_iter()
        .filter(|(_, c)| *c != 0.0)
        .map(move |(pos, c)| (base + pos * stride, c * scale))
}

/// Which integral is fixed to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Normalization {
    WireMean,
    FilmMean,
}

/// Scalar potential pair on the wire and film grids.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialPair {
    pub phi_a: Vec<f64>,
    pub phi_b: Vec<f64>,
}

/// The coupled 3D potential problem for one pair of grids and thicknesses.
///
/// DOFs are all film nodes followed by the wire nodes above the bottom layer.
/// Samples are ordered `(p^a_1, p^a_2, p^a_3, p^b_1, p^b_2, p^b_3)`, each a
/// full nodal array.
#[derive(Debug, Clone)]
pub struct CoupledPotential {
    pub grid_a: Grid3,
    pub grid_b: Grid3,
    pub junction: JunctionMap,
    pub system: GalerkinSystem,
}

impl CoupledPotential {
    /// `solve_weights` and `energy_weights` are the `(wire, film)` factors
    /// multiplying the two integrals.
    pub fn new(
        grid_a: &Grid3,
        grid_b: &Grid3,
        junction: &JunctionMap,
        solve_weights: [f64; 2],
        energy_weights: [f64; 2],
        normalization: Normalization,
        solver: SolverKind,
    ) -> Result<Self> {
        if junction.stencils.len() != grid_a.layer_len() {
            return Err(Error::Shape("junction map does not match the wire grid".into()));
        }
        let (na, nb) = (grid_a.len(), grid_b.len());
        let layer = grid_a.layer_len();
        let ndof = nb + na - layer;
        let wire_dofs = |node: usize, coef: f64, out: &mut Vec<(usize, f64)>| {
            if node < layer {
                let s = &junction.stencils[node];
                for (&n, &w) in s.nodes.iter().zip(&s.weights) {
                    if w != 0.0 {
                        out.push((n, coef * w));
                    }
                }
            } else {
                out.push((nb + node - layer, coef));
            }
        };
        let mut trip = Vec::new();
        let mut buf = Vec::new();
        for c in 0..3 {
            for n in 0..na {
                let row = c * na + n;
                buf.clear();
                for (node, coef) in derivative_entries(n, grid_a.dims, c, grid_a.spacing[c], grid_a.scale[c]) {
                    wire_dofs(node, coef, &mut buf);
                }
                trip.extend(buf.iter().map(|&(d, v)| (row, d, v)));
            }
        }
        for c in 0..3 {
            for n in 0..nb {
                let row = 3 * na + c * nb + n;
                for (node, coef) in derivative_entries(n, grid_b.dims, c, grid_b.spacing[c], grid_b.scale[c]) {
                    trip.push((row, node, coef));
                }
            }
        }
        let m = Csr::from_triplets(3 * (na + nb), ndof, trip);

        let qa = grid_a.weights();
        let qb = grid_b.weights();
        let row_weights = |f: [f64; 2]| -> Vec<f64> {
            let mut w = Vec::with_capacity(3 * (na + nb));
            for _ in 0..3 {
                w.extend(qa.iter().map(|q| f[0] * q));
            }
            for _ in 0..3 {
                w.extend(qb.iter().map(|q| f[1] * q));
            }
            w
        };
        let mut norm_weights = vec![0.0; ndof];
        match normalization {
            Normalization::FilmMean => norm_weights[..nb].copy_from_slice(&qb),
            Normalization::WireMean => {
                let mut tmp = Vec::new();
                for (n, &q) in qa.iter().enumerate() {
                    tmp.clear();
                    wire_dofs(n, q, &mut tmp);
                    for &(d, v) in &tmp {
                        norm_weights[d] += v;
                    }
                }
            }
        }
        let system = GalerkinSystem::new(
            m,
            row_weights(solve_weights),
            row_weights(energy_weights),
            norm_weights,
            solver,
        )?;
        Ok(Self {
            grid_a: grid_a.clone(),
            grid_b: grid_b.clone(),
            junction: junction.clone(),
            system,
        })
    }

    /// Expands DOFs to nodal potentials on both grids.
    pub fn expand(&self, x: &[f64]) -> PotentialPair {
        let nb = self.grid_b.len();
        let layer = self.grid_a.layer_len();
        let phi_b = x[..nb].to_vec();
        let mut phi_a = self.junction.interpolate(&phi_b);
        phi_a.extend_from_slice(&x[nb..]);
        debug_assert_eq!(phi_a.len(), layer + x.len() - nb);
        PotentialPair { phi_a, phi_b }
    }

    pub fn solve_samples(&self, p: &[f64]) -> Result<(Vec<f64>, CgOutcome)> {
        self.system.solve(p)
    }
}

/// Stacks the two fields into the sample order used by [`CoupledPotential`].
pub fn coupled_samples(p: &crate::energy::CoupledField3) -> Vec<f64> {
    let mut s = Vec::with_capacity(3 * (p.a.len() + p.b.len()));
    for c in &p.a.c {
        s.extend_from_slice(c);
    }
    for c in &p.b.c {
        s.extend_from_slice(c);
    }
    s
}

/// Solves the coupled 3D potential problem by conjugate gradient. Weights and
/// normalization follow the regime.
pub fn solve_coupled_potential(
    p: &crate::energy::CoupledField3,
    grid_a: &Grid3,
    grid_b: &Grid3,
    junction: &JunctionMap,
    params: &crate::energy::RegimeParams,
) -> Result<(PotentialPair, CgOutcome)> {
    let cp = CoupledPotential::new(
        grid_a,
        grid_b,
        junction,
        params.potential_weights(),
        params.energy_weights(),
        params.normalization(),
        SolverKind::default(),
    )?;
    let (x, out) = cp.solve_samples(&coupled_samples(p))?;
    Ok((cp.expand(&x), out))
}

/// Wire profile potential: the trapezoidal antiderivative of `q` minus its
/// mean. Satisfies `dψ/dx3 = q` and `∫ψ = 0`.
pub fn solve_psi_1d(q: &[f64]) -> Vec<f64> {
    let n = q.len();
    let d = 1.0 / (n - 1) as f64;
    let mut psi = vec![0.0; n];
    for m in 1..n {
        psi[m] = psi[m - 1] + 0.5 * d * (q[m - 1] + q[m]);
    }
    let w = crate::grid::trapezoid_weights(n, d);
    let mean = crate::linalg::dot(&w, &psi);
    psi.iter_mut().for_each(|v| *v -= mean);
    psi
}

/// Transpose of the linear map [`solve_psi_1d`].
pub fn solve_psi_1d_t(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let d = 1.0 / (n - 1) as f64;
    let w = crate::grid::trapezoid_weights(n, d);
    // psi = C q - w·(C q) 1, so psiᵀ-map is Cᵀ (v - (Σv) w).
    let sv: f64 = v.iter().sum();
    let u: Vec<f64> = v.iter().zip(&w).map(|(v, w)| v - sv * w).collect();
    // (C q)_m = Σ_{k<m} d/2 (q_k + q_{k+1}); tail[k] = Σ_{m>k} u_m.
    let mut out = vec![0.0; n];
    let mut tail = 0.0;
    let mut tails = vec![0.0; n];
    for m in (0..n).rev() {
        tails[m] = tail;
        tail += u[m];
    }
    for k in 0..n {
        let mut acc = 0.0;
        if k + 1 < n {
            acc += tails[k];
        }
        if k > 0 {
            acc += tails[k - 1];
        }
        out[k] = 0.5 * d * acc;
    }
    out
}

/// Film potential system on a [`Grid2`]; samples are `(q_1, q_2)`.
pub fn film_system(grid: &Grid2, solver: SolverKind) -> Result<GalerkinSystem> {
    let n = grid.len();
    let dims = grid.dims3();
    let mut trip = Vec::new();
    for c in 0..2 {
        for node in 0..n {
            for (k, coef) in derivative_entries(node, dims, c, grid.spacing[c], 1.0) {
                trip.push((c * n + node, k, coef));
            }
        }
    }
    let m = Csr::from_triplets(2 * n, n, trip);
    let q = grid.weights();
    let mut w = q.clone();
    w.extend_from_slice(&q);
    GalerkinSystem::new(m, w.clone(), w, q, solver)
}

/// Film potential for an in-plane field: `∫_Θ ψ = 0`.
pub fn solve_psi_2d(q1: &[f64], q2: &[f64], grid: &Grid2) -> Result<(Vec<f64>, CgOutcome)> {
    let sys = film_system(grid, SolverKind::default())?;
    let mut p = q1.to_vec();
    p.extend_from_slice(q2);
    sys.solve(&p)
}

/// Cell averages `(q_m + q_{m+1}) / 2` of a nodal profile.
pub fn cell_average(q: &[f64]) -> Vec<f64> {
    q.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// Transpose of [`cell_average`].
pub fn cell_average_t(c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; c.len() + 1];
    for (m, v) in c.iter().enumerate() {
        out[m] += 0.5 * v;
        out[m + 1] += 0.5 * v;
    }
    out
}

/// Coupled wire-profile/film potential system. DOFs are the film nodes
/// followed by the profile nodes `1..N`; the profile's node 0 aliases the film
/// pin node. The profile is differentiated per cell (piecewise-linear
/// Galerkin form, matching [`solve_psi_1d`]); samples are the cell averages of
/// `q^a` followed by `(q^b_1, q^b_2)`, weighted by `|Θ|` and `ℓ`.
pub fn coupled_limit_system(grid1: &Grid1, grid2: &Grid2, ell: f64, theta_area: f64, solver: SolverKind) -> Result<GalerkinSystem> {
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(Error::Validation(format!("coupling ratio must be positive and finite, got {ell}")));
    }
    let n1 = grid1.n;
    let ncell = n1 - 1;
    let n2 = grid2.len();
    let pin = grid2.pin_index();
    let dof_1d = |m: usize| if m == 0 { pin } else { n2 + m - 1 };
    let d = grid1.spacing;
    let mut trip = Vec::new();
    for m in 0..ncell {
        trip.push((m, dof_1d(m + 1), 1.0 / d));
        trip.push((m, dof_1d(m), -1.0 / d));
    }
    let dims = grid2.dims3();
    for c in 0..2 {
        for node in 0..n2 {
            for (k, coef) in derivative_entries(node, dims, c, grid2.spacing[c], 1.0) {
                trip.push((ncell + c * n2 + node, k, coef));
            }
        }
    }
    let ndof = n2 + n1 - 1;
    let m = Csr::from_triplets(ncell + 2 * n2, ndof, trip);
    let w2 = grid2.weights();
    let mut w = vec![theta_area * d; ncell];
    for _ in 0..2 {
        w.extend(w2.iter().map(|v| ell * v));
    }
    let mut norm = vec![0.0; ndof];
    for (m, &v) in grid1.weights().iter().enumerate() {
        norm[dof_1d(m)] += v;
    }
    GalerkinSystem::new(m, w.clone(), w, norm, solver)
}

/// Wire profile and film potentials of the coupled limit model.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitPotential {
    pub psi_a: Option<Vec<f64>>,
    pub psi_b: Option<Vec<f64>>,
}

/// Splits coupled-limit DOFs into `(ψ^a, ψ^b)`.
pub fn split_coupled_limit(x: &[f64], grid2: &Grid2) -> (Vec<f64>, Vec<f64>) {
    let n2 = grid2.len();
    let psi_b = x[..n2].to_vec();
    let mut psi_a = vec![x[grid2.pin_index()]];
    psi_a.extend_from_slice(&x[n2..]);
    (psi_a, psi_b)
}

/// Jacobi-preconditioned CG: the wire rows carry weights `|Θ|/d` against
/// `O(1)` film rows, which stalls the unpreconditioned iteration.
pub const COUPLED_LIMIT_CG: SolverKind = SolverKind::Cg(CgOptions {
    rel_tol: 1e-8,
    max_iters: None,
    jacobi: true,
});

/// Solves the coupled limit potential problem by conjugate gradient.
pub fn solve_psi_coupled(
    qa: &[f64],
    qb1: &[f64],
    qb2: &[f64],
    grid1: &Grid1,
    grid2: &Grid2,
    ell: f64,
) -> Result<(LimitPotential, CgOutcome)> {
    let sys = coupled_limit_system(grid1, grid2, ell, 1.0, COUPLED_LIMIT_CG)?;
    let mut p = cell_average(qa);
    p.extend_from_slice(qb1);
    p.extend_from_slice(qb2);
    let (x, out) = sys.solve(&p)?;
    let (a, b) = split_coupled_limit(&x, grid2);
    Ok((
        LimitPotential {
            psi_a: Some(a),
            psi_b: Some(b),
        },
        out,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn psi_1d_cases() {
        let z = solve_psi_1d(&[0.0; 9]);
        assert!(z.iter().all(|v| *v == 0.0));
        let g = Grid1::new(5).unwrap();
        let psi = solve_psi_1d(&[1.0; 5]);
        for (m, x) in g.coords().iter().enumerate() {
            assert!((psi[m] - (x - 0.5)).abs() < 1e-14);
        }
        let g = Grid1::new(1025).unwrap();
        let q: Vec<f64> = g.coords().iter().map(|x| (PI * x).sin()).collect();
        let psi = solve_psi_1d(&q);
        let err = g
            .coords()
            .iter()
            .zip(&psi)
            .map(|(x, p)| (p + (PI * x).cos() / PI).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-5, "{err}");
    }

    #[test]
    fn psi_1d_transpose() {
        let n = 11;
        let u: Vec<f64> = (0..n).map(|i| ((i * i) as f64 * 0.37).sin()).collect();
        let v: Vec<f64> = (0..n).map(|i| ((i + 3) as f64 * 0.91).cos()).collect();
        let lhs = crate::linalg::dot(&solve_psi_1d(&u), &v);
        let rhs = crate::linalg::dot(&u, &solve_psi_1d_t(&v));
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn psi_2d_zero_and_manufactured() {
        let g = Grid2::new([9, 9]).unwrap();
        let (z, _) = solve_psi_2d(&[0.0; 81], &[0.0; 81], &g).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));
        let err = |n: usize| {
            let g = Grid2::new([n, n]).unwrap();
            let w = |x: [f64; 2]| (PI * x[0]).sin() * (PI * x[1]).cos() + x[1] * x[1];
            let q1: Vec<f64> = (0..g.len()).map(|k| {
                let x = g.coords(k);
                PI * (PI * x[0]).cos() * (PI * x[1]).cos()
            }).collect();
            let q2: Vec<f64> = (0..g.len()).map(|k| {
                let x = g.coords(k);
                -PI * (PI * x[0]).sin() * (PI * x[1]).sin() + 2.0 * x[1]
            }).collect();
            let (psi, out) = solve_psi_2d(&q1, &q2, &g).unwrap();
            assert!(out.residual <= 1e-8);
            let wv: Vec<f64> = (0..g.len()).map(|k| w(g.coords(k))).collect();
            let mean = crate::linalg::dot(&wv, &g.weights());
            wv.iter().zip(&psi).map(|(a, b)| (a - mean - b).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(17), err(33));
        assert!(e1 / e2 > 3.5, "{e1} {e2}");
    }

    #[test]
    fn coupled_limit_wire_only_forcing() {
        let g1 = Grid1::new(129).unwrap();
        let g2 = Grid2::new([17, 17]).unwrap();
        let qa: Vec<f64> = g1.coords().iter().map(|x| (PI * x).sin()).collect();
        let z = vec![0.0; g2.len()];
        let (lp, out) = solve_psi_coupled(&qa, &z, &z, &g1, &g2, 1.0).unwrap();
        assert!(out.residual <= 1e-8);
        let (a, b) = (lp.psi_a.unwrap(), lp.psi_b.unwrap());
        assert_eq!(a[0], b[g2.pin_index()]);
        for v in &b {
            assert!((v + 1.0 / PI).abs() < 1e-3, "{v}");
        }
        for (x, v) in g1.coords().iter().zip(&a) {
            assert!((v + (PI * x).cos() / PI).abs() < 1e-3);
        }
    }

    #[test]
    fn direct_and_cg_agree() {
        let g1 = Grid1::new(17).unwrap();
        let g2 = Grid2::new([9, 9]).unwrap();
        let p: Vec<f64> = (0..16 + 162).map(|i| ((i as f64) * 0.71).sin()).collect();
        let cg = coupled_limit_system(&g1, &g2, 2.0, 1.0, SolverKind::default()).unwrap();
        let dr = coupled_limit_system(&g1, &g2, 2.0, 1.0, SolverKind::Direct).unwrap();
        let (x, _) = cg.solve(&p).unwrap();
        let (y, o) = dr.solve(&p).unwrap();
        assert!(o.residual < 1e-12);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-7);
        }
        assert!(cg.energy_identity_defect(&p, &x) < 1e-7);
        let mean: f64 = split_coupled_limit(&y, &g2).0.iter().zip(g1.weights()).map(|(a, w)| a * w).sum();
        assert!(mean.abs() < 1e-12);
    }
}
