//! The cycle recursion for `Q_N` against brute-force enumeration of cycle types, and the
//! exact rational case `a_n = 2`.

use bose_cycles::cycle_recursion::{partition_sum_oracle, recurse, recurse_exact, WeightSequence};
use bose_cycles::SystemParams;
use num::BigRational;

fn main() -> Result<(), bose_cycles::Error> {
    let p = SystemParams::new(3, 4.0, 1.0, 1.0, 8)?;
    let sequences = [
        ("a_n = 1", WeightSequence::constant(1.0, 8)?),
        ("a_n = 2", WeightSequence::constant(2.0, 8)?),
        ("a_n = q_n", WeightSequence::ideal(&p)?),
    ];
    for (name, w) in &sequences {
        let table = recurse(w);
        println!("{name}");
        for n in 1..=8 {
            let fast = table.q(n).value();
            let slow = partition_sum_oracle(w, n)?.value();
            println!("  N={n}  recursion {fast:.15e}  enumeration {slow:.15e}  rel {:.1e}", (fast - slow).abs() / slow);
        }
    }
    let twos = vec![BigRational::from_integer(2.into()); 12];
    let exact = recurse_exact(&twos);
    let shown: Vec<String> = exact.iter().map(|q| q.to_string()).collect();
    println!("exact Q_N for a_n = 2: {}", shown.join(" "));
    Ok(())
}
