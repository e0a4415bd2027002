//! Finite-difference check of every analytic gradient.

use ferrojunction::config::{finite_schedule, FieldPreset};
use ferrojunction::harness::run_gradcheck;
use ferrojunction::{Regime, RunConfig};

fn main() -> ferrojunction::Result<()> {
    let mut cfg = RunConfig::new(Regime::Finite(0.5), finite_schedule(0.5, &[0.3]));
    cfg.grid_a = [8, 8, 8];
    cfg.grid_b = [8, 8, 8];
    cfg.field_preset_a = FieldPreset::Constant([0.1, 0.0, -2.0]);
    cfg.field_preset_b = FieldPreset::AxisSine { axis: 2, amplitude: 1.0 };
    let report = run_gradcheck(&cfg)?;
    for (name, err) in &report.entries {
        println!("{name:<24} {err:.2e}");
    }
    println!("worst {:.2e}", report.worst);
    Ok(())
}
