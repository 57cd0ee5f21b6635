//! Two particles on a ring: truncated Fourier series against the discrete-time
//! transfer-matrix oracle, for both partitions of 2.

use bose_cycles::lemma_g::{eval_g_fourier, eval_g_oracle, Truncation};
use bose_cycles::potentials_bounds::PairPotential;
use bose_cycles::SystemParams;

fn main() -> Result<(), bose_cycles::Error> {
    let params = SystemParams::new(1, 4.0, 0.1, 1.0, 2)?;
    let pot = PairPotential::gaussian(1.0, 0.5)?;
    let trunc = Truncation { alpha_max: 2, z_max: 8, tol: 1e-3 };
    println!("partition  fourier                 oracle                  |diff|     err_f      err_o");
    for sizes in [vec![2], vec![1, 1]] {
        let f = eval_g_fourier(&[0.0], &sizes, &params, &pot, trunc)?;
        let o = eval_g_oracle(&sizes, &params, &pot, 3, 128)?;
        println!(
            "{:<10} {:.16e} {:.16e} {:.2e} {:.2e} {:.2e}",
            format!("{sizes:?}"),
            f.value,
            o.value,
            (f.value - o.value).abs(),
            f.error_estimate,
            o.error_estimate
        );
        println!("           shells {:?}  raw oracle m=3 {:.16e}", f.shells, o.raw);
    }
    Ok(())
}
