//! Coupled wire/film potential for a vertical wire polarization: the film
//! potential settles at the wire's junction value.

use std::f64::consts::PI;

use ferrojunction::energy::{CoupledField3, RegimeParams};
use ferrojunction::grid::{Grid3, JunctionMap};
use ferrojunction::operators::VectorField3;
use ferrojunction::poisson::{solve_coupled_potential, solve_psi_1d};
use ferrojunction::{BcVariant, Regime};

fn main() -> ferrojunction::Result<()> {
    let (h_a, h_b) = (0.25, 0.0625);
    let params = RegimeParams::new(1.0, 1.0, h_a, h_b, Regime::Finite(1.0), BcVariant::TangentialNuZero)?;
    let ga = Grid3::wire([17, 17, 33], h_a)?;
    let gb = Grid3::film([17, 17, 9], h_b)?;
    let jm = JunctionMap::build(&ga, &gb, h_a)?;
    let mut p = CoupledField3::zeros(&ga, &gb);
    p.a = VectorField3::from_fn(&ga, |x| [0.0, 0.0, (PI * x[2]).sin()]);
    let (phi, out) = solve_coupled_potential(&p, &ga, &gb, &jm, &params)?;
    println!("CG: {} iterations, relative residual {:.2e}", out.iterations, out.residual);

    let (lo, hi) = phi.phi_b.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    println!("film potential range [{lo:.6}, {hi:.6}]");
    let centre = ga.index(8, 8, 0);
    println!("wire potential at the junction centre {:.6}", phi.phi_a[centre]);

    let profile: Vec<f64> = (0..33).map(|k| (PI * k as f64 / 32.0).sin()).collect();
    let psi = solve_psi_1d(&profile);
    println!("1D profile potential: ψ(0) = {:.6}, ψ(1) = {:.6} (exact ∓1/π = {:.6})", psi[0], psi[32], 1.0 / PI);
    Ok(())
}
