//! Thickness sweep in the finite regime, written as CSV plus JSON.
//!
//! `S(tan)` is the full-gradient energy over the tangential admissible set of
//! `E_n`, `S(∥e3)` the one with the parallel-to-`e_3` boundary condition,
//! whose film can polarize out of plane and which has a different limit.

use std::path::PathBuf;

use ferrojunction::config::{finite_schedule, write_results};
use ferrojunction::harness::{diagnostics, run_sweep};
use ferrojunction::optimize::OptimizerOptions;
use ferrojunction::{Regime, RunConfig};

fn main() -> ferrojunction::Result<()> {
    let mut cfg = RunConfig::new(Regime::Finite(1.0), finite_schedule(1.0, &[0.4, 0.283, 0.2]));
    cfg.grid_a = [9, 9, 9];
    cfg.grid_b = [9, 9, 9];
    cfg.optimizer = OptimizerOptions { restarts: 3, max_iters: 500, ..Default::default() };
    let sweep = run_sweep(&cfg)?;
    println!("{:>6} {:>10} {:>12} {:>12} {:>12} {:>12}", "h_a", "h_b", "E/h_a²", "S(tan)/h_a²", "S(∥e3)/h_a²", "gap");
    for r in &sweep.rows {
        println!(
            "{:>6} {:>10.4} {:>12.6} {:>12.6} {:>12.6} {:>12.2e}",
            r.h_a, r.h_b, r.e3d_scaled, r.s3d_pn_scaled, r.s3d_scaled, r.gap
        );
    }
    println!("limit minimum {:.6}, volume-normalized limit {:.6}", sweep.limit.min_energy.total, sweep.limit.volume_limit);
    println!("scaled norms bounded: {}", diagnostics(&sweep.rows).passed);
    let out = std::env::temp_dir().join(PathBuf::from("ferrojunction_sweep.csv"));
    write_results(&sweep.rows, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}
