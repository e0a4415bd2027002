#![allow(dead_code)]

use std::f64::consts::PI;

use ferrojunction::energy::{CoupledField3, RegimeParams};
use ferrojunction::grid::{Grid3, JunctionMap};
use ferrojunction::linalg::CgOutcome;
use ferrojunction::operators::VectorField3;
use ferrojunction::poisson::solve_coupled_potential;
use ferrojunction::{BcVariant, Regime};

/// Film potential of the manufactured coupled problem.
pub fn w_film(x: [f64; 3]) -> f64 {
    (PI * x[0]).cos() * (PI * x[1]).cos() * (1.0 + x[2]).powi(2) + x[0] * x[2]
}

fn w_film_grad(x: [f64; 3]) -> [f64; 3] {
    let (c1, s1) = ((PI * x[0]).cos(), (PI * x[0]).sin());
    let (c2, s2) = ((PI * x[1]).cos(), (PI * x[1]).sin());
    let z = 1.0 + x[2];
    [-PI * s1 * c2 * z * z + x[2], -PI * c1 * s2 * z * z, 2.0 * c1 * c2 * z + x[0]]
}

/// Wire potential; equals the film potential at `(h_a x′, 0)` on the junction.
pub fn w_wire(x: [f64; 3], h_a: f64) -> f64 {
    (PI * h_a * x[0]).cos() * (PI * h_a * x[1]).cos() + (PI * x[2]).sin() * x[0] + x[2] * x[2]
}

fn w_wire_grad(x: [f64; 3], h_a: f64) -> [f64; 3] {
    let (c1, s1) = ((PI * h_a * x[0]).cos(), (PI * h_a * x[0]).sin());
    let (c2, s2) = ((PI * h_a * x[1]).cos(), (PI * h_a * x[1]).sin());
    [
        -PI * h_a * s1 * c2 + (PI * x[2]).sin(),
        -PI * h_a * c1 * s2,
        PI * (PI * x[2]).cos() * x[0] + 2.0 * x[2],
    ]
}

/// Max-norm error of the coupled potential for `p = D_n w` on `n³` grids,
/// with the CG outcome and the wire-mean of the computed potential.
pub fn manufactured_3d(n: usize, h_a: f64, h_b: f64) -> (f64, CgOutcome, f64) {
    let ga = Grid3::wire([n, n, n], h_a).unwrap();
    let gb = Grid3::film([n, n, n], h_b).unwrap();
    let jm = JunctionMap::build(&ga, &gb, h_a).unwrap();
    let params = RegimeParams::new(1.0, 1.0, h_a, h_b, Regime::Finite(h_b / (h_a * h_a)), BcVariant::TangentialNuZero).unwrap();
    let p = CoupledField3 {
        a: VectorField3::from_fn(&ga, |x| {
            let g = w_wire_grad(x, h_a);
            [g[0] / h_a, g[1] / h_a, g[2]]
        }),
        b: VectorField3::from_fn(&gb, |x| {
            let g = w_film_grad(x);
            [g[0], g[1], g[2] / h_b]
        }),
    };
    let (phi, out) = solve_coupled_potential(&p, &ga, &gb, &jm, &params).unwrap();
    let qa = ga.weights();
    let wa: Vec<f64> = (0..ga.len()).map(|k| w_wire(ga.coords(k), h_a)).collect();
    let wb: Vec<f64> = (0..gb.len()).map(|k| w_film(gb.coords(k))).collect();
    let total: f64 = qa.iter().sum();
    let mean = wa.iter().zip(&qa).map(|(a, b)| a * b).sum::<f64>() / total;
    let phi_mean = phi.phi_a.iter().zip(&qa).map(|(a, b)| a * b).sum::<f64>() / total;
    let err_a = wa.iter().zip(&phi.phi_a).map(|(w, f)| (w - mean - f).abs()).fold(0.0, f64::max);
    let err_b = wb.iter().zip(&phi.phi_b).map(|(w, f)| (w - mean - f).abs()).fold(0.0, f64::max);
    (err_a.max(err_b), out, phi_mean)
}

/// Number of consecutive steps along which `|v|` does not grow by more than
/// `slack`.
pub fn nonincreasing_steps(values: &[f64], slack: f64) -> usize {
    values.windows(2).filter(|w| w[1].abs() <= w[0].abs() + slack).count()
}
