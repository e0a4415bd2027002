//! Scaled gradient, divergence and rotation on a wire grid, with a refinement
//! study of the derivative error.

use std::f64::consts::PI;

use ferrojunction::grid::Grid3;
use ferrojunction::operators::{div_scaled, grad_scaled, integrate, rot_scaled, VectorField3};

fn main() -> ferrojunction::Result<()> {
    let h_a = 0.25;
    println!("{:>4} {:>12} {:>12} {:>12}", "n", "grad error", "max|rot D u|", "∫ div");
    for n in [9, 17, 33, 65] {
        let g = Grid3::wire([n, n, n], h_a)?;
        let u: Vec<f64> = (0..g.len())
            .map(|k| {
                let x = g.coords(k);
                (PI * x[0]).sin() * (PI * x[1]).cos() * x[2]
            })
            .collect();
        let du = grad_scaled(&u, &g);
        let mut err = VectorField3::from_fn(&g, |x| {
            [
                PI * (PI * x[0]).cos() * (PI * x[1]).cos() * x[2] / h_a,
                -PI * (PI * x[0]).sin() * (PI * x[1]).sin() * x[2] / h_a,
                (PI * x[0]).sin() * (PI * x[1]).cos(),
            ]
        });
        err.axpy(-1.0, &du);
        let p = VectorField3::from_fn(&g, |x| [0.0, 0.0, (PI * x[2]).sin()]);
        println!(
            "{n:>4} {:>12.3e} {:>12.3e} {:>12.6}",
            err.max_abs(),
            rot_scaled(&du, &g).max_abs(),
            integrate(&div_scaled(&p, &g), &g)
        );
    }
    Ok(())
}
