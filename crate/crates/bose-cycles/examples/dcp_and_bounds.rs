//! Free-energy bounds for a Gaussian pair potential, the cycle-decoupled model's free
//! energy across its admissible range of gamma, and its critical density.

use bose_cycles::cycle_recursion::dcp_gamma_bracket;
use bose_cycles::potentials_bounds::{
    bounds_gap_closed_form, dcp_critical, dcp_free_energy, free_energy_bounds, PairPotential, PhiSequence,
};
use bose_cycles::SystemParams;

fn main() -> Result<(), bose_cycles::Error> {
    let p = SystemParams::with_density(3, 1.0, 1.0, 1.0, 512)?;
    let pot = PairPotential::gaussian(1.0, 0.5)?;
    let b = free_energy_bounds(&p, &pot)?;
    println!("f0 = {:.12}  lower = {:.12}  upper = {:.12}", b.f0, b.lower, b.upper);
    println!("gap = {:.15e}  closed form = {:.15e}", b.gap(), bounds_gap_closed_form(&p, &pot)?);
    let (lo, hi) = dcp_gamma_bracket(&p, &pot);
    let top = p.beta * pot.u0() / 2.0;
    println!("gamma bracket [{lo:.6}, {hi:.6}]");
    for i in 0..=6 {
        let g = lo + (top - lo) * i as f64 / 6.0;
        let f = dcp_free_energy(&p, g, &pot)?;
        println!("  gamma = {g:>10.6}  f_dcp = {f:.12}  inside = {}", b.clone().with_value(f).contains_value());
    }
    for g in [0.0, -0.5, -2.0] {
        let c = dcp_critical(&PhiSequence::exponential(g), p.beta, 3)?;
        println!("gamma = {g:>5}: zeta_dcp = {:.15}  mu_bar = {:.6}", c.zeta_dcp, c.mu_bar);
    }
    Ok(())
}
