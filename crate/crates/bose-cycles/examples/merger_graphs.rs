//! Coupling patterns as multigraphs: which admit all-nonzero integer solutions of the
//! vertex constraints, and how many free directions the solutions have.

use bose_cycles::merger_graphs::{
    assign_edge_vectors, constraint_rank, free_dimension, incidence_rank, is_merger, random_bridgeless, to_edge_list,
    verify_assignment, CycleMultiGraph,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn report(name: &str, g: &CycleMultiGraph) -> Result<(), bose_cycles::Error> {
    print!(
        "{name:<22} V={} E={} merger={} K={} rank={}",
        g.vertex_count(),
        g.edge_count(),
        is_merger(g),
        constraint_rank(g),
        incidence_rank(g)
    );
    match free_dimension(g) {
        Ok(n) => {
            let a = assign_edge_vectors(g, 1)?;
            println!(" N_I={n} vectors={:?} ok={}", a.vectors, verify_assignment(g, &a));
        }
        Err(_) => println!(" (has a bridge)"),
    }
    Ok(())
}

fn main() -> Result<(), bose_cycles::Error> {
    report("double edge x4", &CycleMultiGraph::new(vec![1, 2], vec![(0, 1, 4)])?)?;
    report("path (bridged)", &CycleMultiGraph::new(vec![1, 2, 3], vec![(0, 1, 1), (1, 2, 1)])?)?;
    let tetra: Vec<(usize, usize, u32)> = vec![(0, 1, 1), (0, 2, 1), (0, 3, 1), (1, 2, 1), (1, 3, 1), (2, 3, 1)];
    report("tetrahedron", &CycleMultiGraph::new(vec![1, 2, 3, 4], tetra)?)?;
    for n in 3..=6 {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, 1))).collect();
        report(&format!("K_{n}"), &CycleMultiGraph::new((1..=n as u64).collect(), edges)?)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = random_bridgeless(&mut rng, 6, 10);
    report("random bridgeless", &g)?;
    print!("{}", to_edge_list(&g));
    Ok(())
}
