//! Thickness sweeps and the entry points behind the command-line tool.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{materialize_field, Regime, RunConfig};
use crate::energy::{BcVariant, CoupledField3, EnergyBreakdown, EnergyKind, Problem3d, RegimeParams};
use crate::error::{Error, Result};
use crate::limits::{lift_limit_to_3d, minimize_limit, LimitModel, LimitState, LimitVariant};
use crate::operators::{grad_l2_norm, l4_norm};
use crate::optimize::{gradcheck, minimize, relaxed_random_state, MinimizeReport, Objective};
use crate::poisson::SolverKind;

/// Limit minima shared by every row of a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitSummary {
    pub variant: LimitVariant,
    /// Minimum of the regime's limit energy.
    pub min_energy: EnergyBreakdown,
    pub iterations: usize,
    pub converged: bool,
    pub restart_spread: f64,
    /// `min E_0` and `min E_∞` when they enter the volume-normalized limit.
    pub min_wire: Option<f64>,
    pub min_film: Option<f64>,
    /// Limit of `E_n / |Ω_n|`: `½ min E_0 + (ℓ/2) min E_∞`, `½ min E_0` or
    /// `½ min E_∞`.
    pub volume_limit: f64,
    pub state: LimitState,
}

/// One scheduled thickness pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub h_a: f64,
    pub h_b: f64,
    /// `h_b / h_a²`.
    pub ratio: f64,
    pub regime: String,
    /// `h_a²` for the finite and zero regimes, `h_b` for the infinite one.
    pub scale: f64,
    pub e3d: Option<EnergyBreakdown>,
    /// `S_n` minimized under the parallel-to-`e_3` boundary condition.
    pub s3d: Option<EnergyBreakdown>,
    /// `S_n` minimized over the tangential admissible set of `E_n`.
    pub s3d_pn: Option<EnergyBreakdown>,
    pub e3d_scaled: f64,
    pub s3d_scaled: f64,
    pub e3d_over_ha2: f64,
    pub s3d_over_ha2: f64,
    pub s3d_pn_scaled: f64,
    /// `E_n / |Ω_n|` with `|Ω_n| = (h_a² + h_b)|Θ|`.
    pub e3d_volume: f64,
    pub s3d_volume: f64,
    pub e_limit: f64,
    pub e_limit_volume: f64,
    /// `e3d_scaled − e_limit`.
    pub gap: f64,
    /// `e3d_volume − e_limit_volume`.
    pub gap_volume: f64,
    /// `(S_n − E_n) / scale`.
    pub gap_s_minus_e: f64,
    /// Same with `S_n` over the tangential admissible set.
    pub gap_s_pn_minus_e: f64,
    /// Scaled energy of the lifted limit minimizer.
    pub lifted_scaled: f64,
    pub iters: usize,
    pub iters_s: usize,
    pub iters_s_pn: usize,
    pub restarts: usize,
    pub converged: bool,
    pub converged_s: bool,
    pub converged_s_pn: bool,
    pub best_restart: usize,
    pub restart_spread: f64,
    pub restart_spread_s: f64,
    pub norm_p_a_l4: f64,
    pub norm_p_b_l4: f64,
    /// Regime-scaled norms (see [`regime_factors`]).
    pub norm_p_a_l4_scaled: f64,
    pub norm_p_b_l4_scaled: f64,
    pub grad_norm_a_scaled: f64,
    pub grad_norm_b_scaled: f64,
    pub failure: Option<String>,
}

impl SweepRow {
    pub const CSV_HEADER: [&'static str; 13] = [
        "h_a",
        "h_b",
        "ratio",
        "regime",
        "E3d_scaled",
        "S3d_scaled",
        "S3d_Pn_scaled",
        "E_limit",
        "gap",
        "iters",
        "restarts",
        "norm_p_a_L4",
        "norm_p_b_L4_scaled",
    ];

    pub fn csv_record(&self) -> Vec<String> {
        vec![
            self.h_a.to_string(),
            self.h_b.to_string(),
            self.ratio.to_string(),
            self.regime.clone(),
            self.e3d_scaled.to_string(),
            self.s3d_scaled.to_string(),
            self.s3d_pn_scaled.to_string(),
            self.e_limit.to_string(),
            self.gap.to_string(),
            self.iters.to_string(),
            self.restarts.to_string(),
            self.norm_p_a_l4.to_string(),
            self.norm_p_b_l4_scaled.to_string(),
        ]
    }

    fn failed(h_a: f64, h_b: f64, regime: Regime, limit: &LimitSummary, msg: String) -> Self {
        let nan = f64::NAN;
        Self {
            h_a,
            h_b,
            ratio: h_b / (h_a * h_a),
            regime: regime.to_string(),
            scale: energy_scale(regime, h_a, h_b),
            e3d: None,
            s3d: None,
            s3d_pn: None,
            e3d_scaled: nan,
            s3d_scaled: nan,
            e3d_over_ha2: nan,
            s3d_over_ha2: nan,
            s3d_pn_scaled: nan,
            e3d_volume: nan,
            s3d_volume: nan,
            e_limit: limit.min_energy.total,
            e_limit_volume: limit.volume_limit,
            gap: nan,
            gap_volume: nan,
            gap_s_minus_e: nan,
            gap_s_pn_minus_e: nan,
            lifted_scaled: nan,
            iters: 0,
            iters_s: 0,
            iters_s_pn: 0,
            restarts: 0,
            converged: false,
            converged_s: false,
            converged_s_pn: false,
            best_restart: 0,
            restart_spread: nan,
            restart_spread_s: nan,
            norm_p_a_l4: nan,
            norm_p_b_l4: nan,
            norm_p_a_l4_scaled: nan,
            norm_p_b_l4_scaled: nan,
            grad_norm_a_scaled: nan,
            grad_norm_b_scaled: nan,
            failure: Some(msg),
        }
    }
}

/// Normalization of the 3D energy compared with the regime's limit.
pub fn energy_scale(regime: Regime, h_a: f64, h_b: f64) -> f64 {
    match regime {
        Regime::Infinity => h_b,
        _ => h_a * h_a,
    }
}

/// Factors `(wire, film)` applied to the norms of the minimizers so that they
/// stay bounded in the regime: `√h_b/h_a` on the film when `h_b ≪ h_a²`,
/// `h_a/√h_b` on the wire when `h_b ≫ h_a²`.
pub fn regime_factors(regime: Regime, h_a: f64, h_b: f64) -> (f64, f64) {
    match regime {
        Regime::Finite(_) => (1.0, 1.0),
        Regime::Zero => (1.0, h_b.sqrt() / h_a),
        Regime::Infinity => (h_a / h_b.sqrt(), 1.0),
    }
}

fn params_for(cfg: &RunConfig, h_a: f64, h_b: f64, bc: BcVariant) -> Result<RegimeParams> {
    RegimeParams::new(cfg.alpha, cfg.beta, h_a, h_b, cfg.regime, bc)
}

/// The 3D problem of one sweep point with the configured field presets.
pub fn build_problem(cfg: &RunConfig, h_a: f64, h_b: f64, bc: BcVariant, kind: EnergyKind) -> Result<Problem3d> {
    let params = params_for(cfg, h_a, h_b, bc)?;
    let bare = Problem3d::new(cfg.grid_a, cfg.grid_b, params, kind, None, SolverKind::Direct)?;
    let f = CoupledField3 {
        a: materialize_field(&cfg.field_preset_a, &bare.grid_a),
        b: materialize_field(&cfg.field_preset_b, &bare.grid_b),
    };
    bare.with_field(f)
}

/// Minimizes the regime's limit energy (and, for the volume-normalized
/// limit, the separate wire and film energies).
pub fn solve_limits(cfg: &RunConfig) -> Result<(LimitModel, LimitSummary)> {
    let model = LimitModel::from_config(cfg, SolverKind::Direct)?;
    let (state, report) = minimize_limit(&model, &cfg.optimizer, cfg.seed)?;
    let min_of = |v: LimitVariant| -> Result<f64> {
        let m = LimitModel::build(cfg, v, SolverKind::Direct)?;
        Ok(minimize_limit(&m, &cfg.optimizer, cfg.seed)?.1.energy.total)
    };
    let (min_wire, min_film, volume_limit) = match cfg.regime {
        Regime::Finite(ell) => {
            let (w, f) = (min_of(LimitVariant::Wire1D)?, min_of(LimitVariant::Film2D)?);
            (Some(w), Some(f), 0.5 * w + 0.5 * ell * f)
        }
        Regime::Zero => (Some(report.energy.total), None, 0.5 * report.energy.total),
        Regime::Infinity => (None, Some(report.energy.total), 0.5 * report.energy.total),
    };
    let summary = LimitSummary {
        variant: model.variant(),
        min_energy: report.energy,
        iterations: report.iterations,
        converged: report.converged,
        restart_spread: report.spread(),
        min_wire,
        min_film,
        volume_limit,
        state,
    };
    Ok((model, summary))
}

/// Lifted limit state for a problem, as a flat DOF vector.
pub fn lifted_start(model: &LimitModel, state: &LimitState, problem: &Problem3d) -> Result<Vec<f64>> {
    let p = lift_limit_to_3d(state, model.grid1(), model.grid2(), problem)?;
    Ok(problem.to_flat(&p))
}

fn sweep_point(cfg: &RunConfig, h_a: f64, h_b: f64, model: &LimitModel, limit: &LimitSummary) -> Result<SweepRow> {
    let regime = cfg.regime;
    let scale = energy_scale(regime, h_a, h_b);
    let volume = h_a * h_a + h_b;
    let pe = build_problem(cfg, h_a, h_b, BcVariant::TangentialNuZero, EnergyKind::RotDiv)?;
    let lift_e = lifted_start(model, &limit.state, &pe)?;
    let lifted_energy = pe.value(&lift_e)?.total;
    let re = minimize(&pe, &cfg.optimizer, cfg.seed, Some(&lift_e))?;
    let ps = build_problem(cfg, h_a, h_b, BcVariant::ParallelE3, EnergyKind::FullGradient)?;
    let lift_s = lifted_start(model, &limit.state, &ps)?;
    let rs = minimize(&ps, &cfg.optimizer, cfg.seed, Some(&lift_s))?;
    let pt = build_problem(cfg, h_a, h_b, BcVariant::TangentialNuZero, EnergyKind::FullGradient)?;
    let rt = minimize(&pt, &cfg.optimizer, cfg.seed, Some(&lift_e))?;

    let p = pe.from_flat(&re.state);
    let wa = pe.grid_a.weights();
    let wb = pe.grid_b.weights();
    let (fa, fb) = regime_factors(regime, h_a, h_b);
    let (la, lb) = (l4_norm(&p.a, &wa), l4_norm(&p.b, &wb));
    let (e, s, st) = (re.energy.total, rs.energy.total, rt.energy.total);
    Ok(SweepRow {
        h_a,
        h_b,
        ratio: h_b / (h_a * h_a),
        regime: regime.to_string(),
        scale,
        e3d: Some(re.energy),
        s3d: Some(rs.energy),
        s3d_pn: Some(rt.energy),
        e3d_scaled: e / scale,
        s3d_scaled: s / scale,
        e3d_over_ha2: e / (h_a * h_a),
        s3d_over_ha2: s / (h_a * h_a),
        s3d_pn_scaled: st / scale,
        e3d_volume: e / volume,
        s3d_volume: s / volume,
        e_limit: limit.min_energy.total,
        e_limit_volume: limit.volume_limit,
        gap: e / scale - limit.min_energy.total,
        gap_volume: e / volume - limit.volume_limit,
        gap_s_minus_e: (s - e) / scale,
        gap_s_pn_minus_e: (st - e) / scale,
        lifted_scaled: lifted_energy / scale,
        iters: re.iterations,
        iters_s: rs.iterations,
        iters_s_pn: rt.iterations,
        restarts: re.restarts,
        converged: re.converged,
        converged_s: rs.converged,
        converged_s_pn: rt.converged,
        best_restart: re.best_restart,
        restart_spread: re.spread(),
        restart_spread_s: rs.spread(),
        norm_p_a_l4: la,
        norm_p_b_l4: lb,
        norm_p_a_l4_scaled: fa * la,
        norm_p_b_l4_scaled: fb * lb,
        grad_norm_a_scaled: fa * grad_l2_norm(&p.a, &pe.grid_a, &wa),
        grad_norm_b_scaled: fb * grad_l2_norm(&p.b, &pe.grid_b, &wb),
        failure: None,
    })
}

/// Result of a sweep: one row per scheduled pair, in schedule order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sweep {
    pub limit: LimitSummary,
    pub rows: Vec<SweepRow>,
}

/// Runs every scheduled thickness pair. Failures are recorded in the row.
pub fn run_sweep(cfg: &RunConfig) -> Result<Sweep> {
    let cfg = cfg.clone().validate()?;
    let (model, limit) = solve_limits(&cfg)?;
    let rows = cfg
        .thickness_schedule
        .par_iter()
        .map(|&(h_a, h_b)| {
            sweep_point(&cfg, h_a, h_b, &model, &limit)
                .unwrap_or_else(|e| SweepRow::failed(h_a, h_b, cfg.regime, &limit, e.to_string()))
        })
        .collect();
    Ok(Sweep { limit, rows })
}

/// Bound check of one diagnostic quantity along a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticQuantity {
    pub name: String,
    pub values: Vec<f64>,
    pub max: f64,
    pub median: f64,
    pub bounded: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub quantities: Vec<DiagnosticQuantity>,
    pub passed: bool,
}

fn median(v: &[f64]) -> f64 {
    let mut s: Vec<f64> = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Flags regime-scaled norms whose maximum along the sweep exceeds ten times
/// their median. Rows without a minimizer are skipped.
pub fn diagnostics(rows: &[SweepRow]) -> DiagnosticsReport {
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.failure.is_none()).collect();
    let picks: [(&str, fn(&SweepRow) -> f64); 4] = [
        ("norm_p_a_L4_scaled", |r| r.norm_p_a_l4_scaled),
        ("norm_p_b_L4_scaled", |r| r.norm_p_b_l4_scaled),
        ("grad_norm_a_scaled", |r| r.grad_norm_a_scaled),
        ("grad_norm_b_scaled", |r| r.grad_norm_b_scaled),
    ];
    let quantities: Vec<DiagnosticQuantity> = picks
        .iter()
        .map(|(name, f)| {
            let values: Vec<f64> = ok.iter().map(|r| f(r)).collect();
            let max = values.iter().cloned().fold(0.0, f64::max);
            let med = median(&values);
            DiagnosticQuantity {
                name: name.to_string(),
                bounded: values.iter().all(|v| v.is_finite()) && max <= 10.0 * med.max(0.0),
                values,
                max,
                median: med,
            }
        })
        .collect();
    DiagnosticsReport {
        passed: quantities.iter().all(|q| q.bounded),
        quantities,
    }
}

/// Finite-difference check results, one entry per energy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub entries: Vec<(String, f64)>,
    pub worst: f64,
}

/// Descent steps applied to the random states probed by [`run_gradcheck`].
pub const GRADCHECK_RELAX_STEPS: usize = 10;

/// Central-difference gradient check (20 probes, step `1e-5`, 3 seeds) of
/// `E_n` and `S_n` in both boundary-condition variants at the first scheduled
/// pair, and of the three limit energies.
pub fn run_gradcheck(cfg: &RunConfig) -> Result<GradcheckReport> {
    let cfg = cfg.clone().validate()?;
    let (h_a, h_b) = cfg.thickness_schedule[0];
    let mut entries = Vec::new();
    let seeds = [cfg.seed, cfg.seed.wrapping_add(1), cfg.seed.wrapping_add(2)];
    let check = |name: String, obj: &dyn Objective, entries: &mut Vec<(String, f64)>| -> Result<()> {
        let mut worst = 0.0_f64;
        for &s in &seeds {
            let x = relaxed_random_state(obj, s, GRADCHECK_RELAX_STEPS)?;
            worst = worst.max(gradcheck(obj, &x, 20, 1e-5, s)?);
        }
        entries.push((name, worst));
        Ok(())
    };
    for bc in [BcVariant::TangentialNuZero, BcVariant::ParallelE3] {
        for kind in [EnergyKind::RotDiv, EnergyKind::FullGradient] {
            let pr = build_problem(&cfg, h_a, h_b, bc, kind)?;
            let name = format!("{}_{:?}", if kind == EnergyKind::RotDiv { "E_n" } else { "S_n" }, bc);
            check(name, &pr, &mut entries)?;
        }
    }
    for v in [LimitVariant::Wire1D, LimitVariant::Film2D, LimitVariant::Coupled] {
        let m = LimitModel::build(&cfg, v, SolverKind::Direct)?;
        check(format!("{v:?}"), m.objective(), &mut entries)?;
    }
    let worst = entries.iter().map(|e| e.1).fold(0.0, f64::max);
    Ok(GradcheckReport { entries, worst })
}

/// Minimizes one limit model.
pub fn run_limit(cfg: &RunConfig, variant: LimitVariant) -> Result<(LimitState, MinimizeReport)> {
    let cfg = cfg.clone().validate()?;
    let model = LimitModel::build(&cfg, variant, SolverKind::Direct)?;
    minimize_limit(&model, &cfg.optimizer, cfg.seed)
}

/// Minimizes `E_n` for one thickness pair, starting from the configured
/// restarts (the lifted start uses the regime's limit minimizer).
pub fn run_solve3d(cfg: &RunConfig, h_a: f64, h_b: f64) -> Result<(Problem3d, MinimizeReport)> {
    let cfg = cfg.clone().validate()?;
    if !(h_a > 0.0 && h_a < 1.0 && h_b > 0.0 && h_b < 1.0) {
        return Err(Error::Validation(format!("pair ({h_a}, {h_b}) is not in (0, 1)²")));
    }
    let pr = build_problem(&cfg, h_a, h_b, BcVariant::TangentialNuZero, EnergyKind::RotDiv)?;
    let lifted = if cfg.optimizer.init_kind == crate::optimize::InitKind::Lifted {
        let model = LimitModel::from_config(&cfg, SolverKind::Direct)?;
        let (state, _) = minimize_limit(&model, &cfg.optimizer, cfg.seed)?;
        Some(lifted_start(&model, &state, &pr)?)
    } else {
        None
    };
    let report = minimize(&pr, &cfg.optimizer, cfg.seed, lifted.as_deref())?;
    Ok((pr, report))
}
