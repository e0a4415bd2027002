//! Lifts a coupled limit state to 3D and watches the scaled 3D energy
//! approach the limit energy as the structure thins.

use std::f64::consts::PI;

use ferrojunction::energy::{EnergyKind, Problem3d, RegimeParams};
use ferrojunction::grid::{Grid1, Grid2};
use ferrojunction::limits::{eval_e_coupled, lift_limit_to_3d, LimitState};
use ferrojunction::poisson::SolverKind;
use ferrojunction::{BcVariant, Regime};

fn main() -> ferrojunction::Result<()> {
    let g1 = Grid1::new(65)?;
    let g2 = Grid2::new([17, 17])?;
    let qa: Vec<f64> = g1.coords().iter().map(|x| 0.8 * (PI * x).sin()).collect();
    let bump = |k: usize| {
        let x = g2.coords(k);
        (PI * x[0]).cos() * (PI * x[1]).cos() * (4.0 * (x[0] * x[0] + x[1] * x[1])).min(1.0)
    };
    let qb = [(0..g2.len()).map(bump).collect::<Vec<_>>(), vec![0.0; g2.len()]];
    let zero2 = [vec![0.0; g2.len()], vec![0.0; g2.len()]];
    let limit = eval_e_coupled(&qa, &qb, &vec![0.0; 65], &zero2, 1.0, 1.0, 1.0, &g2)?.total;
    let state = LimitState::Coupled { qa, qb };
    println!("coupled limit energy {limit:.6}");
    for h_a in [0.4, 0.2, 0.1] {
        let params = RegimeParams::new(1.0, 1.0, h_a, h_a * h_a, Regime::Finite(1.0), BcVariant::TangentialNuZero)?;
        let problem = Problem3d::new([9, 9, 17], [17, 17, 5], params, EnergyKind::RotDiv, None, SolverKind::Direct)?;
        let p = lift_limit_to_3d(&state, Some(&g1), Some(&g2), &problem)?;
        let e = problem.evaluate(&p)?.total / (h_a * h_a);
        println!("h_a = {h_a:<4}  E_n(lift)/h_a² = {e:.6}  gap {:.3e}", e - limit);
    }
    Ok(())
}
