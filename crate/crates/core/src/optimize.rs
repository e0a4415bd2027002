//! Projected gradient descent with Armijo backtracking and parallel
//! multi-restart.
//!
//! Objectives work on a flat DOF vector. The stationarity test divides the
//! gradient by a lumped mass (a diagonal metric approximating the `L²` inner
//! product of the discrete fields), so it is independent of the grid and of
//! the thickness weights. The descent direction divides by a diagonal
//! preconditioner, the lumped mass unless the objective supplies a stiffer
//! one. The trial step of each line search is the Barzilai–Borwein step in
//! the preconditioner metric, followed by Armijo backtracking, so accepted
//! iterates decrease the energy monotonically.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::EnergyBreakdown;
use crate::error::{Error, Result};

/// A smooth energy on a constrained flat DOF vector.
pub trait Objective: Sync {
    fn dim(&self) -> usize;
    /// Maps any vector onto the admissible set in place (idempotent).
    fn project(&self, x: &mut [f64]);
    fn value(&self, x: &[f64]) -> Result<EnergyBreakdown>;
    /// Energy and its gradient with respect to the independent DOFs; dependent
    /// and constrained entries of the gradient are 0.
    fn value_and_gradient(&self, x: &[f64]) -> Result<(EnergyBreakdown, Vec<f64>)>;
    /// Positive diagonal metric of the stationarity test.
    fn metric(&self) -> Vec<f64>;
    /// Positive diagonal scaling of the descent direction.
    fn preconditioner(&self) -> Vec<f64> {
        self.metric()
    }
    /// Indices of the independent, unconstrained DOFs.
    fn free_dofs(&self) -> Vec<usize>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum InitKind {
    Zero,
    RandomUnitish,
    /// The lifted limit-model minimizer when one is supplied; a random start
    /// otherwise.
    #[default]
    Lifted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerOptions {
    pub max_iters: usize,
    /// Tolerance on `max_i |g_i| / m_i` over the free DOFs.
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub init_step: f64,
    pub restarts: usize,
    pub init_kind: InitKind,
    /// Barzilai–Borwein trial steps; the plain trial step is `init_step`.
    pub bb_step: bool,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            grad_tol: 1e-6,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            init_step: 1.0,
            restarts: 4,
            init_kind: InitKind::Lifted,
            bb_step: true,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad(format!("armijo_c = {} is not in (0, 1)", self.armijo_c));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad(format!("backtrack_factor = {} is not in (0, 1)", self.backtrack_factor));
        }
        if self.restarts < 1 {
            return bad("restarts must be at least 1".into());
        }
        if !(self.init_step > 0.0) || !(self.grad_tol > 0.0) {
            return bad("init_step and grad_tol must be positive".into());
        }
        Ok(())
    }
}

/// Outcome of one descent run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DescentResult {
    pub state: Vec<f64>,
    pub energy: EnergyBreakdown,
    pub iterations: usize,
    pub converged: bool,
    pub stationarity: f64,
}

/// Best result over all restarts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimizeReport {
    pub state: Vec<f64>,
    pub energy: EnergyBreakdown,
    /// Iterations of the best restart.
    pub iterations: usize,
    pub restarts: usize,
    pub converged: bool,
    pub best_restart: usize,
    pub stationarity: f64,
    /// Final total energy of each restart (`NaN` for a failed restart).
    pub restart_energies: Vec<f64>,
}

impl MinimizeReport {
    /// Largest minus smallest final energy over the successful restarts.
    pub fn spread(&self) -> f64 {
        let ok = self.restart_energies.iter().filter(|v| v.is_finite());
        let (lo, hi) = ok.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        if lo.is_finite() {
            hi - lo
        } else {
            f64::NAN
        }
    }
}

fn stationarity(g: &[f64], metric: &[f64], free: &[usize]) -> f64 {
    free.iter().map(|&i| (g[i] / metric[i]).abs()).fold(0.0, f64::max)
}

/// Projected gradient descent from `x0` (projected first).
/// Relative size of the energy changes treated as rounding noise.
const ENERGY_NOISE: f64 = 1e-11;

pub fn descend<O: Objective + ?Sized>(obj: &O, x0: &[f64], opts: &OptimizerOptions) -> Result<DescentResult> {
    opts.validate()?;
    let metric = obj.metric();
    let prec = obj.preconditioner();
    let free = obj.free_dofs();
    let mut x = x0.to_vec();
    obj.project(&mut x);
    let (mut e, mut g) = obj.value_and_gradient(&x)?;
    let mut stat = stationarity(&g, &metric, &free);
    let mut step = opts.init_step;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut it = 0;
    while stat > opts.grad_tol && it < opts.max_iters {
        if opts.bb_step {
            if let Some((xp, gp)) = &prev {
                let mut sms = 0.0;
                let mut sy = 0.0;
                for &i in &free {
                    let s = x[i] - xp[i];
                    sms += s * s * prec[i];
                    sy += s * (g[i] - gp[i]);
                }
                step = if sy > 0.0 && sms > 0.0 {
                    (sms / sy).clamp(1e-12, 1e12)
                } else {
                    opts.init_step
                };
            }
        }
        let mut t = step;
        let mut accepted = None;
        for _ in 0..80 {
            let mut xn = x.clone();
            for &i in &free {
                xn[i] -= t * g[i] / prec[i];
            }
            obj.project(&mut xn);
            let slope: f64 = free.iter().map(|&i| g[i] * (xn[i] - x[i])).sum();
            let (en, gn) = obj.value_and_gradient(&xn)?;
            if slope >= 0.0 {
                t *= opts.backtrack_factor;
                continue;
            }
            // Once the decrease is below the energy's rounding noise, fall back
            // to the approximate Armijo test on the directional derivative.
            let noise = ENERGY_NOISE * e.total.abs();
            let armijo = en.total <= e.total + opts.armijo_c * slope;
            let approx = en.total <= e.total + noise && {
                let slope_t: f64 = free.iter().map(|&i| gn[i] * (xn[i] - x[i])).sum();
                slope_t <= (1.0 - 2.0 * opts.armijo_c) * slope.abs()
            };
            if armijo || approx {
                accepted = Some((xn, en, gn));
                break;
            }
            t *= opts.backtrack_factor;
        }
        let Some((xn, en, gn)) = accepted else {
            // No decrease is representable at this precision.
            break;
        };
        prev = Some((std::mem::replace(&mut x, xn), std::mem::replace(&mut g, gn)));
        e = en;
        if !opts.bb_step {
            step = opts.init_step;
        }
        stat = stationarity(&g, &metric, &free);
        it += 1;
    }
    Ok(DescentResult {
        state: x,
        energy: e,
        iterations: it,
        converged: stat <= opts.grad_tol,
        stationarity: stat,
    })
}

/// Uniform `[-1, 1]` draw on every DOF, projected. The stream is selected by
/// `restart` so restarts are independent of scheduling.
pub fn random_state<O: Objective + ?Sized>(obj: &O, seed: u64, restart: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart);
    let mut x: Vec<f64> = (0..obj.dim()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    obj.project(&mut x);
    x
}

/// Initializer kinds used by the restarts: a zero start, random starts, and
/// finally `opts.init_kind`.
pub fn restart_plan(opts: &OptimizerOptions) -> Vec<InitKind> {
    if opts.restarts == 1 {
        return vec![opts.init_kind];
    }
    let mut plan = vec![InitKind::Zero];
    plan.extend(std::iter::repeat(InitKind::RandomUnitish).take(opts.restarts - 2));
    plan.push(opts.init_kind);
    plan
}

/// Multi-restart minimization. `lifted` supplies the state used by
/// [`InitKind::Lifted`].
pub fn minimize<O: Objective + ?Sized>(
    obj: &O,
    opts: &OptimizerOptions,
    seed: u64,
    lifted: Option<&[f64]>,
) -> Result<MinimizeReport> {
    opts.validate()?;
    let plan = restart_plan(opts);
    let starts: Vec<Vec<f64>> = plan
        .iter()
        .enumerate()
        .map(|(r, kind)| match (kind, lifted) {
            (InitKind::Zero, _) => vec![0.0; obj.dim()],
            (InitKind::Lifted, Some(l)) => l.to_vec(),
            _ => random_state(obj, seed, r as u64),
        })
        .collect();
    let results: Vec<Result<DescentResult>> = starts.par_iter().map(|x0| descend(obj, x0, opts)).collect();
    let restart_energies = results
        .iter()
        .map(|r| r.as_ref().map_or(f64::NAN, |d| d.energy.total))
        .collect();
    let mut best: Option<(usize, &DescentResult)> = None;
    for (i, r) in results.iter().enumerate() {
        if let Ok(d) = r {
            if best.map_or(true, |(_, b)| d.energy.total < b.energy.total) {
                best = Some((i, d));
            }
        }
    }
    let Some((best_restart, d)) = best else {
        return Err(results.into_iter().find_map(|r| r.err()).expect("at least one restart"));
    };
    Ok(MinimizeReport {
        state: d.state.clone(),
        energy: d.energy,
        iterations: d.iterations,
        restarts: plan.len(),
        converged: d.converged,
        best_restart,
        stationarity: d.stationarity,
        restart_energies,
    })
}

/// Random state smoothed by `steps` descent iterations. Finite differences at
/// raw random states are dominated by roundoff in the (large) energy.
pub fn relaxed_random_state<O: Objective + ?Sized>(obj: &O, seed: u64, steps: usize) -> Result<Vec<f64>> {
    let x = random_state(obj, seed, 0);
    if steps == 0 {
        return Ok(x);
    }
    let opts = OptimizerOptions {
        max_iters: steps,
        ..Default::default()
    };
    Ok(descend(obj, &x, &opts)?.state)
}

/// Entries below this fraction of `max |g|` are compared against that floor
/// instead of their own size; central differences cannot resolve them beyond
/// the rounding noise of the energy.
pub const GRADCHECK_FLOOR: f64 = 1e-3;

/// Worst relative discrepancy between the analytic gradient and central
/// differences on `n_probes` random free DOFs of the projected state `x`.
pub fn gradcheck<O: Objective + ?Sized>(obj: &O, x: &[f64], n_probes: usize, fd_step: f64, seed: u64) -> Result<f64> {
    if !(fd_step > 0.0) {
        return Err(Error::Validation(format!("finite-difference step must be positive, got {fd_step}")));
    }
    let mut x = x.to_vec();
    obj.project(&mut x);
    let (_, g) = obj.value_and_gradient(&x)?;
    let free = obj.free_dofs();
    let floor = GRADCHECK_FLOOR * free.iter().fold(0.0_f64, |m, &i| m.max(g[i].abs()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = sample(&mut rng, free.len(), n_probes.min(free.len()));
    let mut worst = 0.0_f64;
    for k in picks.iter() {
        let i = free[k];
        let mut xp = x.clone();
        xp[i] += fd_step;
        obj.project(&mut xp);
        let mut xm = x.clone();
        xm[i] -= fd_step;
        obj.project(&mut xm);
        let fd = (obj.value(&xp)?.total - obj.value(&xm)?.total) / (2.0 * fd_step);
        let den = fd.abs().max(g[i].abs()).max(floor);
        if den > 0.0 {
            worst = worst.max((fd - g[i]).abs() / den);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::EnergyKind;

    /// `Σ a_i (x_i - b_i)² / 2` with the last DOF pinned to 0.
    struct Quadratic {
        a: Vec<f64>,
        b: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            self.a.len()
        }
        fn project(&self, x: &mut [f64]) {
            *x.last_mut().unwrap() = 0.0;
        }
        fn value(&self, x: &[f64]) -> Result<EnergyBreakdown> {
            let mut e = EnergyBreakdown::new(EnergyKind::RotDiv, 1.0, 1.0);
            e.doublewell_term = x.iter().zip(&self.a).zip(&self.b).map(|((x, a), b)| 0.5 * a * (x - b) * (x - b)).sum();
            Ok(e.finish())
        }
        fn value_and_gradient(&self, x: &[f64]) -> Result<(EnergyBreakdown, Vec<f64>)> {
            let mut g: Vec<f64> = x.iter().zip(&self.a).zip(&self.b).map(|((x, a), b)| a * (x - b)).collect();
            *g.last_mut().unwrap() = 0.0;
            Ok((self.value(x)?, g))
        }
        fn metric(&self) -> Vec<f64> {
            vec![1.0; self.a.len()]
        }
        fn free_dofs(&self) -> Vec<usize> {
            (0..self.a.len() - 1).collect()
        }
    }

    fn quad() -> Quadratic {
        Quadratic {
            a: (0..30).map(|i| 1.0 + i as f64).collect(),
            b: (0..30).map(|i| (i as f64).sin()).collect(),
        }
    }

    #[test]
    fn convex_quadratic_converges() {
        let q = quad();
        for bb_step in [true, false] {
            let opts = OptimizerOptions {
                bb_step,
                init_step: 0.05,
                ..Default::default()
            };
            let r = minimize(&q, &opts, 1, None).unwrap();
            assert!(r.converged);
            for i in 0..29 {
                assert!((r.state[i] - q.b[i]).abs() < 1e-6);
            }
            assert_eq!(r.state[29], 0.0);
            assert_eq!(r.restarts, 4);
        }
    }

    #[test]
    fn quadratic_gradcheck_exact() {
        let q = quad();
        let x = random_state(&q, 4, 0);
        // Central differences are exact on quadratics; a wide step keeps the
        // energy's rounding below the tolerance.
        let e = gradcheck(&q, &x, 20, 1e-2, 0).unwrap();
        assert!(e <= 1e-10, "{e}");
        assert!(gradcheck(&q, &x, 20, 0.0, 0).is_err());
    }

    /// Gradient off by 1% in every entry.
    struct Skewed(Quadratic);

    impl Objective for Skewed {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn project(&self, x: &mut [f64]) {
            self.0.project(x)
        }
        fn value(&self, x: &[f64]) -> Result<EnergyBreakdown> {
            self.0.value(x)
        }
        fn value_and_gradient(&self, x: &[f64]) -> Result<(EnergyBreakdown, Vec<f64>)> {
            let (e, g) = self.0.value_and_gradient(x)?;
            Ok((e, g.into_iter().map(|v| 1.01 * v).collect()))
        }
        fn metric(&self) -> Vec<f64> {
            self.0.metric()
        }
        fn free_dofs(&self) -> Vec<usize> {
            self.0.free_dofs()
        }
    }

    #[test]
    fn gradcheck_flags_wrong_gradient() {
        let q = Skewed(quad());
        let x = random_state(&q, 4, 0);
        let e = gradcheck(&q, &x, 20, 1e-5, 0).unwrap();
        assert!(e > 5e-3, "{e}");
    }

    #[test]
    fn deterministic_and_descending() {
        let q = quad();
        let opts = OptimizerOptions {
            max_iters: 7,
            ..Default::default()
        };
        let x0 = random_state(&q, 9, 2);
        let e0 = q.value(&x0).unwrap().total;
        let d = descend(&q, &x0, &opts).unwrap();
        assert!(d.energy.total <= e0);
        let r1 = minimize(&q, &opts, 3, None).unwrap();
        let r2 = minimize(&q, &opts, 3, None).unwrap();
        assert_eq!(r1.state, r2.state);
        assert_eq!(r1.iterations, r2.iterations);
        assert_eq!(r1.restart_energies.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), r2.restart_energies.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn options_validation_and_plan() {
        assert!(OptimizerOptions { armijo_c: 1.0, ..Default::default() }.validate().is_err());
        assert!(OptimizerOptions { backtrack_factor: 0.0, ..Default::default() }.validate().is_err());
        assert!(OptimizerOptions { restarts: 0, ..Default::default() }.validate().is_err());
        let plan = restart_plan(&OptimizerOptions::default());
        assert_eq!(plan, vec![InitKind::Zero, InitKind::RandomUnitish, InitKind::RandomUnitish, InitKind::Lifted]);
    }
}
