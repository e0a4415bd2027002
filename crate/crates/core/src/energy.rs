//! Rescaled 3D energies on the wire/film pair and their exact discrete
//! gradients.
//!
//! `E_n` uses the rot/div form, `S_n` the full scaled gradient. Both add the
//! double-well, nonlocal and external-field terms; the wire integrals carry
//! the factor `h_a²` and the film integrals `h_b`.

use serde::{Deserialize, Serialize};

use crate::config::Regime;
use crate::error::{Error, Result};
use crate::grid::{BoundaryMask, Grid3, JunctionMap};
use crate::operators::{
    apply_mask, axis_stencil, div_scaled, div_scaled_t, grad_scaled, grad_scaled_t, rot_scaled, rot_scaled_t, VectorField3,
};
use crate::optimize::Objective;
use crate::poisson::{coupled_samples, CoupledPotential, Normalization, PotentialPair, SolverKind};

pub use crate::grid::BcVariant;

/// Material constants, thicknesses and regime of one 3D problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeParams {
    pub alpha: f64,
    pub beta: f64,
    pub h_a: f64,
    pub h_b: f64,
    pub regime: Regime,
    pub bc: BcVariant,
}

impl RegimeParams {
    pub fn new(alpha: f64, beta: f64, h_a: f64, h_b: f64, regime: Regime, bc: BcVariant) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::Validation(format!("alpha and beta must be positive, got {alpha}, {beta}")));
        }
        for (name, h) in [("h_a", h_a), ("h_b", h_b)] {
            if !(h > 0.0 && h < 1.0) {
                return Err(Error::Validation(format!("{name} = {h} is not in (0, 1)")));
            }
        }
        Ok(Self {
            alpha,
            beta,
            h_a,
            h_b,
            regime,
            bc,
        })
    }

    /// Factors multiplying the wire and film integrals of the energy.
    pub fn energy_weights(&self) -> [f64; 2] {
        [self.h_a * self.h_a, self.h_b]
    }

    /// Factors of the potential problem; the film factor is `h_b²` when
    /// `h_b ≫ h_a²`.
    pub fn potential_weights(&self) -> [f64; 2] {
        match self.regime {
            Regime::Infinity => [self.h_a * self.h_a, self.h_b * self.h_b],
            _ => [self.h_a * self.h_a, self.h_b],
        }
    }

    pub fn normalization(&self) -> Normalization {
        match self.regime {
            Regime::Infinity => Normalization::FilmMean,
            _ => Normalization::WireMean,
        }
    }
}

/// Polarization on the wire (`a`) and film (`b`) grids.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledField3 {
    pub a: VectorField3,
    pub b: VectorField3,
}

impl CoupledField3 {
    pub fn zeros(grid_a: &Grid3, grid_b: &Grid3) -> Self {
        Self {
            a: VectorField3::zeros(grid_a.len()),
            b: VectorField3::zeros(grid_b.len()),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.a.scale(s);
        out.b.scale(s);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnergyKind {
    /// `β|rot p|² + |div p|²`.
    RotDiv,
    /// `|D p|²`.
    FullGradient,
}

/// Per-term energy values. Terms not used by the energy kind are 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kind: EnergyKind,
    pub rot_term: f64,
    pub div_term: f64,
    pub fullgrad_term: f64,
    pub doublewell_term: f64,
    pub nonlocal_term: f64,
    pub external_term: f64,
    pub total: f64,
    /// Weight of the wire part.
    pub scale_a: f64,
    /// Weight of the film part.
    pub scale_b: f64,
}

impl EnergyBreakdown {
    pub fn new(kind: EnergyKind, scale_a: f64, scale_b: f64) -> Self {
        Self {
            kind,
            rot_term: 0.0,
            div_term: 0.0,
            fullgrad_term: 0.0,
            doublewell_term: 0.0,
            nonlocal_term: 0.0,
            external_term: 0.0,
            total: 0.0,
            scale_a,
            scale_b,
        }
    }

    pub(crate) fn finish(mut self) -> Self {
        self.total = self.rot_term
            + self.div_term
            + self.fullgrad_term
            + self.doublewell_term
            + self.nonlocal_term
            + self.external_term;
        self
    }

    pub(crate) fn add(&mut self, t: &Terms) {
        self.rot_term += t.rot;
        self.div_term += t.div;
        self.fullgrad_term += t.full;
        self.doublewell_term += t.dw;
        self.external_term += t.ext;
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Terms {
    pub rot: f64,
    pub div: f64,
    pub full: f64,
    pub dw: f64,
    pub ext: f64,
}

/// Local (non-potential) terms on one subdomain, weighted by `c`, with the
/// gradient with respect to nodal values when requested.
#[allow(clippy::too_many_arguments)]
fn local_terms(
    p: &VectorField3,
    f: &VectorField3,
    g: &Grid3,
    q: &[f64],
    c: f64,
    alpha: f64,
    beta: f64,
    kind: EnergyKind,
    want_grad: bool,
) -> (Terms, Option<VectorField3>) {
    let n = g.len();
    let mut t = Terms::default();
    let mut grad = want_grad.then(|| VectorField3::zeros(n));
    match kind {
        EnergyKind::RotDiv => {
            let mut r = rot_scaled(p, g);
            t.rot = c * beta * crate::operators::weighted_norm_sq(&r, q);
            let mut d = div_scaled(p, g);
            t.div = c * d.iter().zip(q).map(|(v, w)| w * v * v).sum::<f64>();
            if let Some(gr) = grad.as_mut() {
                for comp in &mut r.c {
                    comp.iter_mut().zip(q).for_each(|(v, w)| *v *= 2.0 * c * beta * w);
                }
                gr.axpy(1.0, &rot_scaled_t(&r, g));
                d.iter_mut().zip(q).for_each(|(v, w)| *v *= 2.0 * c * w);
                gr.axpy(1.0, &div_scaled_t(&d, g));
            }
        }
        EnergyKind::FullGradient => {
            for k in 0..3 {
                let mut du = grad_scaled(&p.c[k], g);
                t.full += c * crate::operators::weighted_norm_sq(&du, q);
                if let Some(gr) = grad.as_mut() {
                    for comp in &mut du.c {
                        comp.iter_mut().zip(q).for_each(|(v, w)| *v *= 2.0 * c * w);
                    }
                    let back = grad_scaled_t(&du, g);
                    gr.c[k].iter_mut().zip(&back).for_each(|(a, b)| *a += b);
                }
            }
        }
    }
    for m in 0..n {
        let s = p.norm_sq_at(m) - 1.0;
        t.dw += c * alpha * q[m] * s * s;
        let fp = f.c[0][m] * p.c[0][m] + f.c[1][m] * p.c[1][m] + f.c[2][m] * p.c[2][m];
        t.ext += c * q[m] * fp;
        if let Some(gr) = grad.as_mut() {
            for k in 0..3 {
                gr.c[k][m] += 4.0 * c * alpha * q[m] * s * p.c[k][m] + c * q[m] * f.c[k][m];
            }
        }
    }
    (t, grad)
}

/// A discretized 3D problem: grids, constraints, external field and the
/// factored potential operator, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Problem3d {
    pub grid_a: Grid3,
    pub grid_b: Grid3,
    pub junction: JunctionMap,
    pub mask_a: BoundaryMask,
    pub mask_b: BoundaryMask,
    pub params: RegimeParams,
    pub kind: EnergyKind,
    pub f: CoupledField3,
    pub potential: CoupledPotential,
    weights_a: Vec<f64>,
    weights_b: Vec<f64>,
}

impl Problem3d {
    pub fn new(
        dims_a: [usize; 3],
        dims_b: [usize; 3],
        params: RegimeParams,
        kind: EnergyKind,
        f: Option<CoupledField3>,
        solver: SolverKind,
    ) -> Result<Self> {
        let grid_a = Grid3::wire(dims_a, params.h_a)?;
        let grid_b = Grid3::film(dims_b, params.h_b)?;
        let junction = JunctionMap::build(&grid_a, &grid_b, params.h_a)?;
        let mask_a = BoundaryMask::wire(&grid_a, params.bc);
        let mask_b = BoundaryMask::film(&grid_b, params.bc, &junction);
        let f = f.unwrap_or_else(|| CoupledField3::zeros(&grid_a, &grid_b));
        if f.a.len() != grid_a.len() || f.b.len() != grid_b.len() {
            return Err(Error::Shape("external field does not match the grids".into()));
        }
        let potential = CoupledPotential::new(
            &grid_a,
            &grid_b,
            &junction,
            params.potential_weights(),
            params.energy_weights(),
            params.normalization(),
            solver,
        )?;
        Ok(Self {
            weights_a: grid_a.weights(),
            weights_b: grid_b.weights(),
            grid_a,
            grid_b,
            junction,
            mask_a,
            mask_b,
            params,
            kind,
            f,
            potential,
        })
    }

    /// Same problem with another external field.
    pub fn with_field(&self, f: CoupledField3) -> Result<Self> {
        if f.a.len() != self.grid_a.len() || f.b.len() != self.grid_b.len() {
            return Err(Error::Shape("external field does not match the grids".into()));
        }
        Ok(Self { f, ..self.clone() })
    }

    pub fn to_flat(&self, p: &CoupledField3) -> Vec<f64> {
        coupled_samples(p)
    }

    pub fn from_flat(&self, x: &[f64]) -> CoupledField3 {
        let (na, nb) = (self.grid_a.len(), self.grid_b.len());
        let part = |off: usize, n: usize| VectorField3 {
            c: [0, 1, 2].map(|k| x[off + k * n..off + (k + 1) * n].to_vec()),
        };
        CoupledField3 {
            a: part(0, na),
            b: part(3 * na, nb),
        }
    }

    /// Enforces every constraint: boundary masks, film junction-plane
    /// conditions, and the wire bottom face as the interpolated film plane.
    pub fn project(&self, p: &CoupledField3) -> CoupledField3 {
        let mut out = p.clone();
        apply_mask(&mut out.b, &self.mask_b);
        apply_mask(&mut out.a, &self.mask_a);
        for k in 0..3 {
            let bottom = self.junction.interpolate(&out.b.c[k]);
            out.a.c[k][..bottom.len()].copy_from_slice(&bottom);
        }
        out
    }

    /// Largest violation of the constraints (0 for admissible states).
    pub fn constraint_residual(&self, p: &CoupledField3) -> f64 {
        let q = self.project(p);
        let mut d = q.clone();
        d.a.axpy(-1.0, &p.a);
        d.b.axpy(-1.0, &p.b);
        d.a.max_abs().max(d.b.max_abs())
    }

    pub fn potential(&self, p: &CoupledField3) -> Result<PotentialPair> {
        let (x, _) = self.potential.solve_samples(&coupled_samples(p))?;
        Ok(self.potential.expand(&x))
    }

    fn eval(&self, p: &CoupledField3, want_grad: bool) -> Result<(EnergyBreakdown, Option<CoupledField3>)> {
        let [ca, cb] = self.params.energy_weights();
        let (alpha, beta) = (self.params.alpha, self.params.beta);
        let (ta, ga) = local_terms(&p.a, &self.f.a, &self.grid_a, &self.weights_a, ca, alpha, beta, self.kind, want_grad);
        let (tb, gb) = local_terms(&p.b, &self.f.b, &self.grid_b, &self.weights_b, cb, alpha, beta, self.kind, want_grad);
        let mut e = EnergyBreakdown::new(self.kind, ca, cb);
        e.add(&ta);
        e.add(&tb);
        let samples = coupled_samples(p);
        let (x, _) = self.potential.solve_samples(&samples)?;
        e.nonlocal_term = self.potential.system.nonlocal(&x, &samples);
        let e = e.finish();
        if !want_grad {
            return Ok((e, None));
        }
        let mut g = CoupledField3 {
            a: ga.unwrap(),
            b: gb.unwrap(),
        };
        let gn = self.potential.system.nonlocal_gradient(&x)?;
        let gn = self.from_flat(&gn);
        g.a.axpy(1.0, &gn.a);
        g.b.axpy(1.0, &gn.b);
        Ok((e, Some(self.reduce_gradient(g))))
    }

    /// Chain rule through the junction interpolation, then zeroes the
    /// dependent and constrained components.
    pub fn reduce_gradient(&self, mut g: CoupledField3) -> CoupledField3 {
        let layer = self.grid_a.layer_len();
        for k in 0..3 {
            let bottom = g.a.c[k][..layer].to_vec();
            self.junction.scatter_add(&bottom, &mut g.b.c[k]);
            g.a.c[k][..layer].iter_mut().for_each(|v| *v = 0.0);
        }
        apply_mask(&mut g.a, &self.mask_a);
        apply_mask(&mut g.b, &self.mask_b);
        g
    }

    /// `E_n` or `S_n` depending on [`Problem3d::kind`].
    pub fn evaluate(&self, p: &CoupledField3) -> Result<EnergyBreakdown> {
        Ok(self.eval(p, false)?.0)
    }

    /// Energy and its gradient with respect to the independent DOFs.
    pub fn evaluate_with_gradient(&self, p: &CoupledField3) -> Result<(EnergyBreakdown, CoupledField3)> {
        let (e, g) = self.eval(p, true)?;
        Ok((e, g.unwrap()))
    }

    /// Lumped mass of each independent DOF in the flat layout (1 on dependent
    /// and constrained DOFs).
    pub fn lumped_mass(&self) -> Vec<f64> {
        let [ca, cb] = self.params.energy_weights();
        let layer = self.grid_a.layer_len();
        let mut ma: Vec<f64> = self.weights_a.iter().map(|w| ca * w).collect();
        let mut mb: Vec<f64> = self.weights_b.iter().map(|w| cb * w).collect();
        self.junction.scatter_add(&ma[..layer], &mut mb);
        ma[..layer].iter_mut().for_each(|v| *v = 1.0);
        let mut out = Vec::with_capacity(3 * (ma.len() + mb.len()));
        for _ in 0..3 {
            out.extend_from_slice(&ma);
        }
        for _ in 0..3 {
            out.extend_from_slice(&mb);
        }
        out
    }

    /// Lumped mass plus the diagonal of the gradient-term stiffness, per DOF
    /// in the flat layout (1 on dependent and constrained DOFs). Equalizes the
    /// `1/h_a` and `1/h_b` derivative scalings for the descent direction.
    pub fn stiffness_preconditioner(&self) -> Vec<f64> {
        let [ca, cb] = self.params.energy_weights();
        let layer = self.grid_a.layer_len();
        let mut pa = self.stiffness_diag(&self.grid_a, &self.weights_a, ca);
        let mut pb = self.stiffness_diag(&self.grid_b, &self.weights_b, cb);
        for k in 0..3 {
            self.junction.scatter_add(&pa[k][..layer], &mut pb[k]);
            pa[k][..layer].iter_mut().for_each(|v| *v = 1.0);
        }
        pa.into_iter().chain(pb).flatten().collect()
    }

    /// `c·w_i·(1 + 2 Σ_axis κ s² (Dᵀ W D)_ii / w_i)` per component, with `κ`
    /// the coefficient of the axis derivative of that component.
    fn stiffness_diag(&self, g: &Grid3, w: &[f64], c: f64) -> [Vec<f64>; 3] {
        let rel = [0, 1, 2].map(|a| {
            let (n, d) = (g.dims[a], g.spacing[a]);
            let w1 = crate::grid::trapezoid_weights(n, d);
            let mut dsq = vec![0.0; n];
            for m in 0..n {
                for (pos, coef) in axis_stencil(m, n, d) {
                    dsq[pos] += w1[m] * coef * coef;
                }
            }
            let s2 = g.scale[a] * g.scale[a];
            dsq.iter().zip(&w1).map(|(q, v)| s2 * q / v).collect::<Vec<f64>>()
        });
        [0, 1, 2].map(|k| {
            (0..g.len())
                .map(|node| {
                    let ijk = g.unravel(node);
                    let stiff: f64 = (0..3)
                        .map(|a| {
                            let kappa = match self.kind {
                                EnergyKind::RotDiv if a != k => self.params.beta,
                                _ => 1.0,
                            };
                            kappa * rel[a][ijk[a]]
                        })
                        .sum();
                    c * w[node] * (1.0 + 2.0 * stiff)
                })
                .collect()
        })
    }

    /// Flat indices of the independent, unconstrained DOFs.
    pub fn free_dofs(&self) -> Vec<usize> {
        let (na, nb) = (self.grid_a.len(), self.grid_b.len());
        let layer = self.grid_a.layer_len();
        let mut out = Vec::new();
        for k in 0..3 {
            for n in layer..na {
                if !self.mask_a.constrained[n][k] {
                    out.push(k * na + n);
                }
            }
        }
        for k in 0..3 {
            for n in 0..nb {
                if !self.mask_b.constrained[n][k] {
                    out.push(3 * na + k * nb + n);
                }
            }
        }
        out
    }
}

/// `E_n` of a state (rot/div form).
pub fn eval_e_n(problem: &Problem3d, p: &CoupledField3) -> Result<EnergyBreakdown> {
    let pr = Problem3d {
        kind: EnergyKind::RotDiv,
        ..problem.clone()
    };
    pr.evaluate(p)
}

/// `S_n` of a state (full-gradient form).
pub fn eval_s_n(problem: &Problem3d, p: &CoupledField3) -> Result<EnergyBreakdown> {
    let pr = Problem3d {
        kind: EnergyKind::FullGradient,
        ..problem.clone()
    };
    pr.evaluate(p)
}

impl Objective for Problem3d {
    fn dim(&self) -> usize {
        3 * (self.grid_a.len() + self.grid_b.len())
    }

    fn project(&self, x: &mut [f64]) {
        let p = self.project(&self.from_flat(x));
        x.copy_from_slice(&coupled_samples(&p));
    }

    fn value(&self, x: &[f64]) -> Result<EnergyBreakdown> {
        self.evaluate(&self.from_flat(x))
    }

    fn value_and_gradient(&self, x: &[f64]) -> Result<(EnergyBreakdown, Vec<f64>)> {
        let (e, g) = self.evaluate_with_gradient(&self.from_flat(x))?;
        Ok((e, coupled_samples(&g)))
    }

    fn metric(&self) -> Vec<f64> {
        self.lumped_mass()
    }

    fn preconditioner(&self) -> Vec<f64> {
        self.stiffness_preconditioner()
    }

    fn free_dofs(&self) -> Vec<usize> {
        Problem3d::free_dofs(self)
    }
}
