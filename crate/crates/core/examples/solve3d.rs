//! Minimizes the 3D energy for one thickness pair and compares the scaled
//! minimum with the coupled limit.

use ferrojunction::config::finite_schedule;
use ferrojunction::harness::{run_solve3d, solve_limits};
use ferrojunction::optimize::OptimizerOptions;
use ferrojunction::{Regime, RunConfig};

fn main() -> ferrojunction::Result<()> {
    let (h_a, h_b) = (0.2, 0.04);
    let mut cfg = RunConfig::new(Regime::Finite(1.0), finite_schedule(1.0, &[h_a]));
    cfg.grid_a = [9, 9, 9];
    cfg.grid_b = [9, 9, 9];
    cfg.optimizer = OptimizerOptions { restarts: 3, max_iters: 2000, ..Default::default() };

    let (_, limit) = solve_limits(&cfg)?;
    let (problem, report) = run_solve3d(&cfg, h_a, h_b)?;
    let scaled = report.energy.total / (h_a * h_a);
    println!("restart energies {:?}", report.restart_energies);
    println!(
        "E_n/h_a² = {scaled:.6}, coupled limit minimum {:.6}, gap {:.2e}",
        limit.min_energy.total,
        scaled - limit.min_energy.total
    );
    let p = problem.from_flat(&report.state);
    println!("constraint residual {:.1e}, max |p| {:.3e}", problem.constraint_residual(&p), p.a.max_abs().max(p.b.max_abs()));
    Ok(())
}
