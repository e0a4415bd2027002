//! Minimizes the wire, film and coupled limit energies for a small problem
//! with a downward field on the wire.

use ferrojunction::config::{finite_schedule, FieldPreset};
use ferrojunction::limits::{minimize_limit, LimitModel, LimitState, LimitVariant};
use ferrojunction::optimize::OptimizerOptions;
use ferrojunction::poisson::SolverKind;
use ferrojunction::{Regime, RunConfig};

fn main() -> ferrojunction::Result<()> {
    let mut cfg = RunConfig::new(Regime::Finite(1.0), finite_schedule(1.0, &[0.2]));
    cfg.grid_1d = 129;
    cfg.grid_2d = [17, 17];
    cfg.field_preset_a = FieldPreset::Constant([0.0, 0.0, -4.0]);
    cfg.field_preset_b = FieldPreset::AxisSine { axis: 1, amplitude: 2.0 };
    cfg.optimizer = OptimizerOptions { restarts: 6, ..Default::default() };

    for variant in [LimitVariant::Wire1D, LimitVariant::Film2D, LimitVariant::Coupled] {
        let model = LimitModel::build(&cfg, variant, SolverKind::Direct)?;
        let (state, report) = minimize_limit(&model, &cfg.optimizer, cfg.seed)?;
        let e = report.energy;
        println!(
            "{variant:?}: E = {:.6} (gradient {:.4}, double well {:.4}, nonlocal {:.4}, external {:.4}), {} iterations, converged {}",
            e.total,
            e.rot_term + e.div_term + e.fullgrad_term,
            e.doublewell_term,
            e.nonlocal_term,
            e.external_term,
            report.iterations,
            report.converged
        );
        if let LimitState::Wire1D { qa } | LimitState::Coupled { qa, .. } = &state {
            let mid = qa[qa.len() / 2];
            println!("    wire profile at mid-height {mid:.4}");
        }
    }
    Ok(())
}
