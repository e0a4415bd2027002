//! Limit models: the wire profile energy `E_0` (1D), the film energy `E_∞`
//! (2D), the coupled energy `E` (1D + 2D joined at `0'`), and the recovery
//! lifts of limit states back to admissible 3D fields.
//!
//! The wire profile is differentiated per cell (piecewise-linear form), which
//! makes the trapezoidal antiderivative the exact discrete potential. The film
//! field uses the nodal central differences of [`crate::operators`].

use serde::{Deserialize, Serialize};

use crate::config::{film_profile, wire_profile, RunConfig};
use crate::energy::{CoupledField3, EnergyBreakdown, EnergyKind, Problem3d};
use crate::error::{Error, Result};
use crate::grid::{interpolate_1d, Grid1, Grid2};
use crate::operators::{diff_axis, diff_axis_t};
use crate::optimize::{minimize, MinimizeReport, Objective, OptimizerOptions};
use crate::poisson::{
    cell_average, cell_average_t, coupled_limit_system, film_system, solve_psi_1d, solve_psi_1d_t, GalerkinSystem,
    SolverKind,
};

const ADMISSIBLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitVariant {
    Coupled,
    Wire1D,
    Film2D,
}

/// Unknowns of a limit model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LimitState {
    Coupled { qa: Vec<f64>, qb: [Vec<f64>; 2] },
    Wire1D { qa: Vec<f64> },
    Film2D { qb: [Vec<f64>; 2] },
}

impl LimitState {
    pub fn variant(&self) -> LimitVariant {
        match self {
            LimitState::Coupled { .. } => LimitVariant::Coupled,
            LimitState::Wire1D { .. } => LimitVariant::Wire1D,
            LimitState::Film2D { .. } => LimitVariant::Film2D,
        }
    }
}

fn inadmissible(what: String) -> Error {
    Error::Inadmissible(what)
}

// ---------------------------------------------------------------- wire (1D)

/// `|Θ|∫(|q'|² + α(q²−1)² + |ψ'|²) + ∫F^a q` with `q(0) = q(1) = 0`.
#[derive(Debug, Clone)]
pub struct WireModel {
    pub grid: Grid1,
    pub alpha: f64,
    pub theta_area: f64,
    /// `F^a(x3) = ∫_Θ f_3 dx'` at the nodes.
    pub fa: Vec<f64>,
    weights: Vec<f64>,
}

impl WireModel {
    pub fn new(grid: Grid1, alpha: f64, theta_area: f64, fa: Option<Vec<f64>>) -> Result<Self> {
        let fa = fa.unwrap_or_else(|| vec![0.0; grid.n]);
        if fa.len() != grid.n {
            return Err(Error::Shape(format!("forcing has {} values for {} nodes", fa.len(), grid.n)));
        }
        Ok(Self {
            weights: grid.weights(),
            grid,
            alpha,
            theta_area,
            fa,
        })
    }

    pub fn check(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.grid.n {
            return Err(Error::Shape(format!("profile has {} values for {} nodes", q.len(), self.grid.n)));
        }
        if q[0].abs() > ADMISSIBLE_TOL || q[self.grid.n - 1].abs() > ADMISSIBLE_TOL {
            return Err(inadmissible("wire profile must vanish at both ends".into()));
        }
        Ok(())
    }

    fn eval(&self, q: &[f64], want_grad: bool) -> (EnergyBreakdown, Option<Vec<f64>>) {
        let n = self.grid.n;
        let d = self.grid.spacing;
        let t = self.theta_area;
        let mut e = EnergyBreakdown::new(EnergyKind::FullGradient, t, 0.0);
        let mut g = vec![0.0; n];
        for m in 0..n - 1 {
            let s = (q[m + 1] - q[m]) / d;
            e.fullgrad_term += t * d * s * s;
            g[m] -= 2.0 * t * s;
            g[m + 1] += 2.0 * t * s;
        }
        for m in 0..n {
            let s = q[m] * q[m] - 1.0;
            e.doublewell_term += t * self.alpha * self.weights[m] * s * s;
            e.external_term += self.weights[m] * self.fa[m] * q[m];
            g[m] += 4.0 * t * self.alpha * self.weights[m] * s * q[m] + self.weights[m] * self.fa[m];
        }
        let psi = solve_psi_1d(q);
        let mut gpsi = vec![0.0; n];
        for m in 0..n - 1 {
            let s = (psi[m + 1] - psi[m]) / d;
            e.nonlocal_term += t * d * s * s;
            gpsi[m] -= 2.0 * t * s;
            gpsi[m + 1] += 2.0 * t * s;
        }
        let e = e.finish();
        if !want_grad {
            return (e, None);
        }
        for (a, b) in g.iter_mut().zip(solve_psi_1d_t(&gpsi)) {
            *a += b;
        }
        g[0] = 0.0;
        g[n - 1] = 0.0;
        (e, Some(g))
    }

    pub fn evaluate(&self, q: &[f64]) -> Result<EnergyBreakdown> {
        self.check(q)?;
        Ok(self.eval(q, false).0)
    }
}

impl Objective for WireModel {
    fn dim(&self) -> usize {
        self.grid.n
    }
    fn project(&self, x: &mut [f64]) {
        x[0] = 0.0;
        x[self.grid.n - 1] = 0.0;
    }
    fn value(&self, x: &[f64]) -> Result<EnergyBreakdown> {
        Ok(self.eval(x, false).0)
    }
    fn value_and_gradient(&self, x: &[f64]) -> Result<(EnergyBreakdown, Vec<f64>)> {
        let (e, g) = self.eval(x, true);
        Ok((e, g.unwrap()))
    }
    fn metric(&self) -> Vec<f64> {
        self.weights.iter().map(|w| self.theta_area * w).collect()
    }
    fn free_dofs(&self) -> Vec<usize> {
        (1..self.grid.n - 1).collect()
    }
}

/// `E_0` of a wire profile.
pub fn eval_e0(qa: &[f64], fa: &[f64], alpha: f64, theta_area: f64) -> Result<EnergyBreakdown> {
    let model = WireModel::new(Grid1::new(qa.len())?, alpha, theta_area, Some(fa.to_vec()))?;
    model.evaluate(qa)
}

// ---------------------------------------------------------------- film (2D)

/// Local film terms `∫β rot² + div² + α(|q|²−1)² + F·q` with factor `c`.
fn film_local(
    grid: &Grid2,
    weights: &[f64],
    q1: &[f64],
    q2: &[f64],
    f: &[Vec<f64>; 2],
    alpha: f64,
    beta: f64,
    c: f64,
    e: &mut EnergyBreakdown,
    grad: Option<(&mut [f64], &mut [f64])>,
) {
    let n = grid.len();
    let dims = grid.dims3();
    let [d1, d2] = grid.spacing;
    let mut rot = vec![0.0; n];
    diff_axis(q2, dims, 0, d1, 1.0, &mut rot);
    diff_axis(q1, dims, 1, d2, -1.0, &mut rot);
    let mut div = vec![0.0; n];
    diff_axis(q1, dims, 0, d1, 1.0, &mut div);
    diff_axis(q2, dims, 1, d2, 1.0, &mut div);
    for m in 0..n {
        let s = q1[m] * q1[m] + q2[m] * q2[m] - 1.0;
        e.rot_term += c * beta * weights[m] * rot[m] * rot[m];
        e.div_term += c * weights[m] * div[m] * div[m];
        e.doublewell_term += c * alpha * weights[m] * s * s;
        e.external_term += c * weights[m] * (f[0][m] * q1[m] + f[1][m] * q2[m]);
    }
    if let Some((g1, g2)) = grad {
        for m in 0..n {
            rot[m] *= 2.0 * c * beta * weights[m];
            div[m] *= 2.0 * c * weights[m];
            let s = q1[m] * q1[m] + q2[m] * q2[m] - 1.0;
            g1[m] += 4.0 * c * alpha * weights[m] * s * q1[m] + c * weights[m] * f[0][m];
            g2[m] += 4.0 * c * alpha * weights[m] * s * q2[m] + c * weights[m] * f[1][m];
        }
        diff_axis_t(&rot, dims, 0, d1, 1.0, g2);
        diff_axis_t(&rot, dims, 1, d2, -1.0, g1);
        diff_axis_t(&div, dims, 0, d1, 1.0, g1);
        diff_axis_t(&div, dims, 1, d2, 1.0, g2);
    }
}

/// In-plane constraint flags: `q_1 = 0` on the `x_1` faces, `q_2 = 0` on the
/// `x_2` faces.
fn film_boundary(grid: &Grid2) -> [Vec<bool>; 2] {
    let [n1, n2] = grid.dims;
    let mut c = [vec![false; grid.len()], vec![false; grid.len()]];
    for j in 0..n2 {
        for i in 0..n1 {
            let k = grid.index(i, j);
            c[0][k] = i == 0 || i == n1 - 1;
            c[1][k] = j == 0 || j == n2 - 1;
        }
    }
    c
}

/// `∫_Θ(β|rot q|² + |div q|² + α(|q|²−1)² + |Dψ|²) + ∫F^b·q` with
/// `q·ν = 0` on `∂Θ` and `q(0') = 0`.
#[derive(Debug, Clone)]
pub struct FilmModel {
    pub grid: Grid2,
    pub alpha: f64,
    pub beta: f64,
    /// `F^b(x') = ∫_{-1}^0 (f_1, f_2) dx3` at the nodes.
    pub fb: [Vec<f64>; 2],
    pub system: GalerkinSystem,
    weights: Vec<f64>,
    boundary: [Vec<bool>; 2],
}

impl FilmModel {
    pub fn new(grid: Grid2, alpha: f64, beta: f64, fb: Option<[Vec<f64>; 2]>, solver: SolverKind) -> Result<Self> {
        let fb = fb.unwrap_or_else(|| [vec![0.0; grid.len()], vec![0.0; grid.len()]]);
        if fb[0].len() != grid.len() || fb[1].len() != grid.len() {
            return Err(Error::Shape("film forcing does not match the 2D grid".into()));
        }
        Ok(Self {
            system: film_system(&grid, solver)?,
            weights: grid.weights(),
            boundary: film_boundary(&grid),
            grid,
            alpha,
            beta,
            fb,
        })
    }

    pub fn check(&self, q1: &[f64], q2: &[f64]) -> Result<()> {
        let n = self.grid.len();
        if q1.len() != n || q2.len() != n {
            return Err(Error::Shape("film field does not match the 2D grid".into()));
        }
        for m in 0..n {
            if (self.boundary[0][m] && q1[m].abs() > ADMISSIBLE_TOL) || (self.boundary[1][m] && q2[m].abs() > ADMISSIBLE_TOL) {
                return Err(inadmissible(format!("film field is not tangential at node {m}")));
            }
        }
        let p = self.grid.pin_index();
        if q1[p].abs() > ADMISSIBLE_TOL || q2[p].abs() > ADMISSIBLE_TOL {
            return Err(inadmissible("film field must vanish at the pin node".into()));
        }
        Ok(())
    }

    fn eval(&self, x: &[f64], want_grad: bool) -> Result<(EnergyBreakdown, Option<Vec<f64>>)> {
        let n = self.grid.len();
        let (q1, q2) = x.split_at(n);
        let mut e = EnergyBreakdown::new(EnergyKind::RotDiv, 0.0, 1.0);
        let mut g = vec![0.0; 2 * n];
        {
            let (g1, g2) = g.split_at_mut(n);
            let grad = want_grad.then_some((g1, g2));
            film_local(&self.grid, &self.weights, q1, q2, &self.fb, self.alpha, self.beta, 1.0, &mut e, grad);
        }
        let (psi, _) = self.system.solve(x)?;
        e.nonlocal_term = self.system.nonlocal(&psi, x);
        let e = e.finish();
        if !want_grad {
            return Ok((e, None));
        }
        let gn = self.system.nonlocal_gradient(&psi)?;
        g.iter_mut().zip(&gn).for_each(|(a, b)| *a += b);
        self.zero_constrained(&mut g);
        Ok((e, Some(g)))
    }

    fn zero_constrained(&self, x: &mut [f64]) {
        let n = self.grid.len();
        for m in 0..n {
            for c in 0..2 {
                if self.boundary[c][m] {
                    x[c * n + m] = 0.0;
                }
            }
        }
        let p = self.grid.pin_index();
        x[p] = 0.0;
        x[n + p] = 0.0;
    }

    pub fn evaluate(&self, q1: &[f64], q2: &[f64]) -> Result<EnergyBreakdown> {
        self.check(q1, q2)?;
        let mut x = q1.to_vec();
        x.extend_from_slice(q2);
        Ok(self.eval(&x, false)?.0)
    }
}

impl Objective for FilmModel {
    fn dim(&self) -> usize {
        2 * self.grid.len()
    }
    fn project(&self, x: &mut [f64]) {
        self.zero_constrained(x);
    }
    fn value(&self, x: &[f64]) -> Result<EnergyBreakdown> {
        Ok(self.eval(x, false)?.0)
    }
    fn value_and_gradient(&self, x: &[f64]) -> Result<(EnergyBreakdown, Vec<f64>)> {
        let (e, g) = self.eval(x, true)?;
        Ok((e, g.unwrap()))
    }
    fn metric(&self) -> Vec<f64> {
        let mut m = self.weights.clone();
        m.extend_from_slice(&self.weights);
        m
    }
    fn free_dofs(&self) -> Vec<usize> {
        let mut probe = vec![1.0; self.dim()];
        self.zero_constrained(&mut probe);
        (0..self.dim()).filter(|&i| probe[i] != 0.0).collect()
    }
}

/// `E_∞` of a film field.
pub fn eval_einf(q1: &[f64], q2: &[f64], fb: &[Vec<f64>; 2], alpha: f64, beta: f64, grid: &Grid2) -> Result<EnergyBreakdown> {
    let model = FilmModel::new(grid.clone(), alpha, beta, Some(fb.clone()), SolverKind::default())?;
    model.evaluate(q1, q2)
}

// ---------------------------------------------------------------- coupled

/// Coupled energy `E`: the wire terms weighted by `|Θ|`, the film terms by
/// `ℓ`, and the joint potential with `ψ^a(0) = ψ^b(0')`.
///
/// With `junction_zero` the junction values `q^a(0)`, `q^b(0')` are pinned
/// to zero; otherwise they are only required to coincide,
/// `q^a(0) = q^b_1(0') = q^b_2(0')`.
#[derive(Debug, Clone)]
pub struct CoupledModel {
    pub grid1: Grid1,
    pub grid2: Grid2,
    pub alpha: f64,
    pub beta: f64,
    pub ell: f64,
    pub theta_area: f64,
    pub fa: Vec<f64>,
    pub fb: [Vec<f64>; 2],
    pub junction_zero: bool,
    pub system: GalerkinSystem,
    w1: Vec<f64>,
    w2: Vec<f64>,
    boundary: [Vec<bool>; 2],
}

impl CoupledModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        grid1: Grid1,
        grid2: Grid2,
        alpha: f64,
        beta: f64,
        ell: f64,
        fa: Option<Vec<f64>>,
        fb: Option<[Vec<f64>; 2]>,
        junction_zero: bool,
        solver: SolverKind,
    ) -> Result<Self> {
        let theta_area = 1.0;
        let fa = fa.unwrap_or_else(|| vec![0.0; grid1.n]);
        let fb = fb.unwrap_or_else(|| [vec![0.0; grid2.len()], vec![0.0; grid2.len()]]);
        if fa.len() != grid1.n || fb[0].len() != grid2.len() || fb[1].len() != grid2.len() {
            return Err(Error::Shape("limit forcing does not match the grids".into()));
        }
        Ok(Self {
            system: coupled_limit_system(&grid1, &grid2, ell, theta_area, solver)?,
            w1: grid1.weights(),
            w2: grid2.weights(),
            boundary: film_boundary(&grid2),
            grid1,
            grid2,
            alpha,
            beta,
            ell,
            theta_area,
            fa,
            fb,
            junction_zero,
        })
    }

    fn offsets(&self) -> (usize, usize) {
        (self.grid1.n, self.grid2.len())
    }

    pub fn flat(&self, qa: &[f64], qb: &[Vec<f64>; 2]) -> Vec<f64> {
        let mut x = qa.to_vec();
        x.extend_from_slice(&qb[0]);
        x.extend_from_slice(&qb[1]);
        x
    }

    pub fn unflat(&self, x: &[f64]) -> (Vec<f64>, [Vec<f64>; 2]) {
        let (n1, n2) = self.offsets();
        (
            x[..n1].to_vec(),
            [x[n1..n1 + n2].to_vec(), x[n1 + n2..].to_vec()],
        )
    }

    pub fn check(&self, qa: &[f64], qb: &[Vec<f64>; 2]) -> Result<()> {
        let (n1, n2) = self.offsets();
        if qa.len() != n1 || qb[0].len() != n2 || qb[1].len() != n2 {
            return Err(Error::Shape("coupled state does not match the grids".into()));
        }
        let mut x = self.flat(qa, qb);
        self.apply_constraints(&mut x);
        let dev = x
            .iter()
            .zip(self.flat(qa, qb))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if dev > ADMISSIBLE_TOL {
            return Err(inadmissible(format!("coupled state violates its constraints by {dev:.3e}")));
        }
        Ok(())
    }

    fn apply_constraints(&self, x: &mut [f64]) {
        let (n1, n2) = self.offsets();
        x[n1 - 1] = 0.0;
        for m in 0..n2 {
            for c in 0..2 {
                if self.boundary[c][m] {
                    x[n1 + c * n2 + m] = 0.0;
                }
            }
        }
        let p = self.grid2.pin_index();
        if self.junction_zero {
            x[0] = 0.0;
            x[n1 + p] = 0.0;
            x[n1 + n2 + p] = 0.0;
        } else {
            let v = x[n1 + p];
            x[0] = v;
            x[n1 + n2 + p] = v;
        }
    }

    fn reduce_gradient(&self, g: &mut [f64]) {
        let (n1, n2) = self.offsets();
        let p = self.grid2.pin_index();
        if !self.junction_zero {
            g[n1 + p] += g[0] + g[n1 + n2 + p];
        }
        g[0] = 0.0;
        g[n1 + n2 + p] = 0.0;
        if self.junction_zero {
            g[n1 + p] = 0.0;
        }
        g[n1 - 1] = 0.0;
        for m in 0..n2 {
            for c in 0..2 {
                if self.boundary[c][m] {
                    g[n1 + c * n2 + m] = 0.0;
                }
            }
        }
    }

    fn eval(&self, x: &[f64], want_grad: bool) -> Result<(EnergyBreakdown, Option<Vec<f64>>)> {
        let (n1, n2) = self.offsets();
        let qa = &x[..n1];
        let (q1, q2) = x[n1..].split_at(n2);
        let t = self.theta_area;
        let d = self.grid1.spacing;
        let mut e = EnergyBreakdown::new(EnergyKind::RotDiv, t, self.ell);
        let mut g = vec![0.0; x.len()];
        for m in 0..n1 - 1 {
            let s = (qa[m + 1] - qa[m]) / d;
            e.fullgrad_term += t * d * s * s;
            g[m] -= 2.0 * t * s;
            g[m + 1] += 2.0 * t * s;
        }
        for m in 0..n1 {
            let s = qa[m] * qa[m] - 1.0;
            e.doublewell_term += t * self.alpha * self.w1[m] * s * s;
            e.external_term += self.w1[m] * self.fa[m] * qa[m];
            g[m] += 4.0 * t * self.alpha * self.w1[m] * s * qa[m] + self.w1[m] * self.fa[m];
        }
        {
            let (g1, g2) = g[n1..].split_at_mut(n2);
            let grad = want_grad.then_some((g1, g2));
            film_local(&self.grid2, &self.w2, q1, q2, &self.fb, self.alpha, self.beta, self.ell, &mut e, grad);
        }
        let mut samples = cell_average(qa);
        samples.extend_from_slice(q1);
        samples.extend_from_slice(q2);
        let (psi, _) = self.system.solve(&samples)?;
        e.nonlocal_term = self.system.nonlocal(&psi, &samples);
        let e = e.finish();
        if !want_grad {
            return Ok((e, None));
        }
        let gs = self.system.nonlocal_gradient(&psi)?;
        let ncell = n1 - 1;
        for (a, b) in g[..n1].iter_mut().zip(cell_average_t(&gs[..ncell])) {
            *a += b;
        }
        for (a, b) in g[n1..].iter_mut().zip(&gs[ncell..]) {
            *a += b;
        }
        self.reduce_gradient(&mut g);
        Ok((e, Some(g)))
    }

    pub fn evaluate(&self, qa: &[f64], qb: &[Vec<f64>; 2]) -> Result<EnergyBreakdown> {
        self.check(qa, qb)?;
        Ok(self.eval(&self.flat(qa, qb), false)?.0)
    }
}

impl Objective for CoupledModel {
    fn dim(&self) -> usize {
        self.grid1.n + 2 * self.grid2.len()
    }
    fn project(&self, x: &mut [f64]) {
        self.apply_constraints(x);
    }
    fn value(&self, x: &[f64]) -> Result<EnergyBreakdown> {
        Ok(self.eval(x, false)?.0)
    }
    fn value_and_gradient(&self, x: &[f64]) -> Result<(EnergyBreakdown, Vec<f64>)> {
        let (e, g) = self.eval(x, true)?;
        Ok((e, g.unwrap()))
    }
    fn metric(&self) -> Vec<f64> {
        let (n1, n2) = self.offsets();
        let mut m: Vec<f64> = self.w1.iter().map(|w| self.theta_area * w).collect();
        for _ in 0..2 {
            m.extend(self.w2.iter().map(|w| self.ell * w));
        }
        if !self.junction_zero {
            let p = self.grid2.pin_index();
            m[n1 + p] += m[0] + m[n1 + n2 + p];
        }
        m
    }
    fn free_dofs(&self) -> Vec<usize> {
        let mut probe = vec![1.0; self.dim()];
        let mut g = probe.clone();
        self.reduce_gradient(&mut g);
        probe.iter_mut().zip(&g).for_each(|(p, g)| *p = *g);
        (0..self.dim()).filter(|&i| probe[i] != 0.0).collect()
    }
}

/// Coupled energy `E` of a state.
#[allow(clippy::too_many_arguments)]
pub fn eval_e_coupled(
    qa: &[f64],
    qb: &[Vec<f64>; 2],
    fa: &[f64],
    fb: &[Vec<f64>; 2],
    alpha: f64,
    beta: f64,
    ell: f64,
    grid2: &Grid2,
) -> Result<EnergyBreakdown> {
    let model = CoupledModel::new(
        Grid1::new(qa.len())?,
        grid2.clone(),
        alpha,
        beta,
        ell,
        Some(fa.to_vec()),
        Some(fb.clone()),
        true,
        crate::poisson::COUPLED_LIMIT_CG,
    )?;
    model.evaluate(qa, qb)
}

// ---------------------------------------------------------------- dispatch

/// One of the three limit models, ready for minimization.
#[derive(Debug, Clone)]
pub enum LimitModel {
    Wire(WireModel),
    Film(FilmModel),
    Coupled(CoupledModel),
}

impl LimitModel {
    /// The model selected by the configuration's regime, on its limit grids
    /// and with the profiles of its field presets.
    pub fn from_config(cfg: &RunConfig, solver: SolverKind) -> Result<Self> {
        let variant = match cfg.regime {
            crate::config::Regime::Finite(_) => LimitVariant::Coupled,
            crate::config::Regime::Zero => LimitVariant::Wire1D,
            crate::config::Regime::Infinity => LimitVariant::Film2D,
        };
        Self::build(cfg, variant, solver)
    }

    pub fn build(cfg: &RunConfig, variant: LimitVariant, solver: SolverKind) -> Result<Self> {
        let g1 = Grid1::new(cfg.grid_1d)?;
        let g2 = Grid2::new(cfg.grid_2d)?;
        Ok(match variant {
            LimitVariant::Wire1D => {
                let fa = wire_profile(&cfg.field_preset_a, &g1);
                LimitModel::Wire(WireModel::new(g1, cfg.alpha, 1.0, Some(fa))?)
            }
            LimitVariant::Film2D => {
                let fb = film_profile(&cfg.field_preset_b, &g2);
                LimitModel::Film(FilmModel::new(g2, cfg.alpha, cfg.beta, Some(fb), solver)?)
            }
            LimitVariant::Coupled => {
                let ell = match cfg.regime {
                    crate::config::Regime::Finite(l) => l,
                    _ => 1.0,
                };
                let fa = wire_profile(&cfg.field_preset_a, &g1);
                let fb = film_profile(&cfg.field_preset_b, &g2);
                LimitModel::Coupled(CoupledModel::new(
                    g1,
                    g2,
                    cfg.alpha,
                    cfg.beta,
                    ell,
                    Some(fa),
                    Some(fb),
                    cfg.junction_zero,
                    solver,
                )?)
            }
        })
    }

    pub fn variant(&self) -> LimitVariant {
        match self {
            LimitModel::Wire(_) => LimitVariant::Wire1D,
            LimitModel::Film(_) => LimitVariant::Film2D,
            LimitModel::Coupled(_) => LimitVariant::Coupled,
        }
    }

    pub fn objective(&self) -> &dyn Objective {
        match self {
            LimitModel::Wire(m) => m,
            LimitModel::Film(m) => m,
            LimitModel::Coupled(m) => m,
        }
    }

    pub fn state_from_flat(&self, x: &[f64]) -> LimitState {
        match self {
            LimitModel::Wire(_) => LimitState::Wire1D { qa: x.to_vec() },
            LimitModel::Film(m) => {
                let n = m.grid.len();
                LimitState::Film2D {
                    qb: [x[..n].to_vec(), x[n..].to_vec()],
                }
            }
            LimitModel::Coupled(m) => {
                let (qa, qb) = m.unflat(x);
                LimitState::Coupled { qa, qb }
            }
        }
    }

    pub fn grid1(&self) -> Option<&Grid1> {
        match self {
            LimitModel::Wire(m) => Some(&m.grid),
            LimitModel::Coupled(m) => Some(&m.grid1),
            LimitModel::Film(_) => None,
        }
    }

    pub fn grid2(&self) -> Option<&Grid2> {
        match self {
            LimitModel::Film(m) => Some(&m.grid),
            LimitModel::Coupled(m) => Some(&m.grid2),
            LimitModel::Wire(_) => None,
        }
    }
}

/// Minimizes a limit model; returns the best state and the report.
pub fn minimize_limit(model: &LimitModel, opts: &OptimizerOptions, seed: u64) -> Result<(LimitState, MinimizeReport)> {
    let report = minimize(model.objective(), opts, seed, None)?;
    Ok((model.state_from_flat(&report.state), report))
}

/// Builds the recovery field of a limit state on the problem's 3D grids:
/// in the junction layer `0 ≤ x3 ≤ h_a` the wire carries
/// `(q^b(h_a x')(h_a − x3)/h_a, q^a(x3))`, above it `(0, 0, q^a(x3))`, and
/// the film carries `(q^b_1, q^b_2, 0)`. The result is projected onto the
/// admissible set.
pub fn lift_limit_to_3d(state: &LimitState, grid1: Option<&Grid1>, grid2: Option<&Grid2>, problem: &Problem3d) -> Result<CoupledField3> {
    let need = |g: Option<&Grid1>| g.ok_or_else(|| Error::Shape("lifting a wire profile needs its 1D grid".into())).cloned();
    let need2 = |g: Option<&Grid2>| g.ok_or_else(|| Error::Shape("lifting a film field needs its 2D grid".into())).cloned();
    let (qa, qb) = match state {
        LimitState::Coupled { qa, qb } => (Some((need(grid1)?, qa)), Some((need2(grid2)?, qb))),
        LimitState::Wire1D { qa } => (Some((need(grid1)?, qa)), None),
        LimitState::Film2D { qb } => (None, Some((need2(grid2)?, qb))),
    };
    if let Some((g, q)) = &qa {
        if q.len() != g.n {
            return Err(Error::Shape("wire profile does not match its grid".into()));
        }
    }
    if let Some((g, q)) = &qb {
        if q[0].len() != g.len() || q[1].len() != g.len() {
            return Err(Error::Shape("film field does not match its grid".into()));
        }
    }
    let h_a = problem.params.h_a;
    let mut p = CoupledField3::zeros(&problem.grid_a, &problem.grid_b);
    for n in 0..problem.grid_a.len() {
        let x = problem.grid_a.coords(n);
        if let Some((g, q)) = &qa {
            p.a.c[2][n] = interpolate_1d(g, q, x[2]);
        }
        if let Some((g, q)) = &qb {
            if x[2] <= h_a {
                let y = [h_a * x[0], h_a * x[1]];
                let taper = (h_a - x[2]) / h_a;
                p.a.c[0][n] = g.interpolate(&q[0], y) * taper;
                p.a.c[1][n] = g.interpolate(&q[1], y) * taper;
            }
        }
    }
    if let Some((g, q)) = &qb {
        for n in 0..problem.grid_b.len() {
            let x = problem.grid_b.coords(n);
            p.b.c[0][n] = g.interpolate(&q[0], [x[0], x[1]]);
            p.b.c[1][n] = g.interpolate(&q[1], [x[0], x[1]]);
        }
    }
    Ok(problem.project(&p))
}
