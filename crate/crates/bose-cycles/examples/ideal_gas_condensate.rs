//! Condensate fraction of the ideal Bose gas at fixed density as N doubles, above and
//! below the critical density, with the tail sandwich that brackets it.

use bose_cycles::bec_observables::{condensate_density_ideal, condensate_sandwich};
use bose_cycles::cycle_recursion::ideal_table;
use bose_cycles::numerics::riemann_zeta;
use bose_cycles::SystemParams;

fn main() -> Result<(), bose_cycles::Error> {
    let zeta = riemann_zeta(1.5)?;
    for (label, rl) in [("above", 2.0 * zeta), ("below", 0.5 * zeta)] {
        println!("{label} critical: rho*lambda^3 = {rl:.6}");
        println!("      N   rho0/rho            lower/rho           upper/rho");
        for n in [512usize, 1024, 2048, 4096] {
            let p = SystemParams::with_density(3, rl, 1.0, 1.0, n)?;
            let t = ideal_table(&p)?;
            let rho = p.rho();
            let s = condensate_sandwich(&t, 1.0)?;
            println!(
                "{n:>7}   {:.12}    {:.12}    {:.12}",
                condensate_density_ideal(&t)? / rho,
                s.lower / rho,
                s.upper / rho
            );
        }
    }
    Ok(())
}
