//! Fugacity from the polylog equation and the limit shapes of the cycle-length
//! partition below and above the critical density.

use bose_cycles::bec_observables::{limit_shape_finite, limit_shape_macroscopic, solve_fugacity};
use bose_cycles::numerics::{polylog, riemann_zeta};

fn main() -> Result<(), bose_cycles::Error> {
    let d = 3;
    let zeta = riemann_zeta(1.5)?;
    for rl in [0.5, 1.0, 2.0, zeta, 4.0] {
        let f = solve_fugacity(rl, d)?;
        let resid = if f.z < 1.0 { polylog(1.5, f.z)? - rl } else { 0.0 };
        println!("rho*lambda^3 = {rl:.6}  z = {:.15}  residual {resid:.1e}  {:?}", f.z, f.regime);
    }
    let below = solve_fugacity(1.0, d)?;
    let above = solve_fugacity(4.0, d)?;
    println!("\n   t   finite(below)       finite(above)");
    for t in [1.0, 2.0, 4.0, 8.0, 16.0] {
        println!(
            "{t:>4}   {:.12e}  {:.12e}",
            limit_shape_finite(t, &below, 1.0, d)?,
            limit_shape_finite(t, &above, 4.0, d)?
        );
    }
    println!("zeta(5/2)/zeta(3/2) = {:.15}", riemann_zeta(2.5)? / zeta);
    println!("\n   t   macroscopic");
    for t in [0.05, 0.25, 0.5, 0.9, 1.0, 1.5] {
        println!("{t:>5}  {:.12}", limit_shape_macroscopic(t)?);
    }
    Ok(())
}
