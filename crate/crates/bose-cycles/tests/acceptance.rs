//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line and then
//! asserts, so `cargo test --test acceptance -- --nocapture` gives a readable summary.

use std::collections::BTreeSet;
use std::time::Instant;

use bose_cycles::bec_observables::{
    condensate_density_ideal, condensate_sandwich, fixed_box_limit_ln, limit_shape_finite, limit_shape_macroscopic,
    solve_fugacity, Regime,
};
use bose_cycles::cycle_recursion::{
    dcp_gamma_bracket, dcp_table, difference_identity_check, ideal_table, partition_sum_oracle, recurse, recurse_exact,
    WeightSequence,
};
use bose_cycles::lemma_g::{
    eval_g_fourier, eval_g_oracle, f_n_asymptotic, f_n_forms, f_n_integral_closed_form, integrate_f_n_1d, FnRegime,
    Truncation,
};
use bose_cycles::merger_graphs::{
    assign_edge_vectors, free_dimension, incidence_rank, is_merger, random_bridgeless, verify_assignment,
    CycleMultiGraph, EdgeVectorAssignment,
};
use bose_cycles::numerics::{polylog, riemann_zeta};
use bose_cycles::potentials_bounds::{
    bounds_gap_closed_form, coupling_rate, dcp_critical, dcp_free_energy, free_energy_bounds, pair_rate, PairPotential,
    PhiSequence, RateInputs, RateMode,
};
use bose_cycles::SystemParams;
use num::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(name: &str, failures: &[String], detail: &str) {
    if failures.is_empty() {
        println!("PASS {name}: {detail}");
    } else {
        println!("FAIL {name}: {detail}; {}", failures.join("; "));
    }
    assert!(failures.is_empty(), "{name}: {failures:?}");
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn recursion_matches_partition_enumeration() {
    let start = Instant::now();
    let mut fails = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let random: Vec<f64> = (0..8).map(|_| rng.gen_range(0.05..5.0)).collect();
    let mut seqs = vec![
        ("const1".to_string(), WeightSequence::constant(1.0, 8).unwrap()),
        ("const2".to_string(), WeightSequence::constant(2.0, 8).unwrap()),
        ("random".to_string(), WeightSequence::from_values(&random).unwrap()),
    ];
    for (d, side, lambda) in [(1u32, 2.0, 1.0), (3, 4.0, 1.0), (2, 1.5, 2.5)] {
        let p = SystemParams::new(d, side, 1.0, lambda, 8).unwrap();
        seqs.push((format!("q_n d={d} L={side} lambda={lambda}"), WeightSequence::ideal(&p).unwrap()));
    }
    let mut worst: f64 = 0.0;
    for (name, w) in &seqs {
        let t = recurse(w);
        for n in 1..=8 {
            let fast = t.q(n).value();
            let slow = partition_sum_oracle(w, n).unwrap().value();
            let r = rel(fast, slow);
            worst = worst.max(r);
            if r >= 1e-12 {
                fails.push(format!("{name} N={n}: rel {r:.2e}"));
            }
        }
    }
    let twos = vec![BigRational::from_integer(2.into()); 30];
    let exact = recurse_exact(&twos);
    for (n, q) in exact.iter().enumerate() {
        if *q != BigRational::from_integer((n as i64 + 1).into()) {
            fails.push(format!("exact Q_{n} = {q}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 5.0 {
        fails.push(format!("runtime {secs:.2}s"));
    }
    verdict(
        "recursion vs enumeration",
        &fails,
        &format!("{} sequences, worst rel {worst:.1e}, Q_N = N+1 exactly up to N=30, {secs:.2}s", seqs.len()),
    );
}

#[test]
fn difference_identity_residual() {
    let p = SystemParams::new(3, 8.0, 1.0, 1.0, 128).unwrap();
    let t = ideal_table(&p).unwrap();
    let r = difference_identity_check(t.weights(), &t);
    let fails = if r < 1e-10 { vec![] } else { vec![format!("residual {r:.2e}")] };
    verdict("difference identity", &fails, &format!("residual {r:.2e} at d=3 L=8 N=128"));
}

#[test]
fn fixed_box_product_limit() {
    let p = SystemParams::new(3, 3.0, 1.0, 1.0, 200).unwrap();
    let t = ideal_table(&p).unwrap();
    let lim = fixed_box_limit_ln(3, 3.0, 1.0);
    let r = (t.ln_q(200) - lim).exp_m1().abs();
    let fails = if r < 1e-8 { vec![] } else { vec![format!("rel {r:.2e}")] };
    verdict("fixed-box limit", &fails, &format!("|Q_200/limit - 1| = {r:.2e}"));
}

#[test]
fn ideal_gas_condensate_trend() {
    let start = Instant::now();
    let zeta = riemann_zeta(1.5).unwrap();
    let sizes = [512usize, 1024, 2048, 4096];
    let fraction = |rl: f64| -> Vec<f64> {
        sizes
            .iter()
            .map(|&n| {
                let p = SystemParams::with_density(3, rl, 1.0, 1.0, n).unwrap();
                condensate_density_ideal(&ideal_table(&p).unwrap()).unwrap() / p.rho()
            })
            .collect()
    };
    let above = fraction(2.0 * zeta);
    let below = fraction(0.5 * zeta);
    let mut fails = Vec::new();
    for k in 1..sizes.len() {
        if above[k] <= above[k - 1] {
            fails.push(format!("above: not increasing at N={} ({:.6} -> {:.6})", sizes[k], above[k - 1], above[k]));
        }
        if (above[k] - 0.5).abs() >= (above[k - 1] - 0.5).abs() {
            fails.push(format!("above: gap to 1/2 not shrinking at N={}", sizes[k]));
        }
        if below[k] >= below[k - 1] {
            fails.push(format!("below: not decreasing at N={}", sizes[k]));
        }
    }
    if below[3] >= 0.02 {
        fails.push(format!("below: {:.4} at N=4096", below[3]));
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 60.0 {
        fails.push(format!("runtime {secs:.1}s"));
    }
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ");
    verdict(
        "ideal-gas condensate trend",
        &fails,
        &format!("above [{}] below [{}] {secs:.2}s", fmt(&above), fmt(&below)),
    );
}

#[test]
fn condensate_sandwich_brackets() {
    let zeta = riemann_zeta(1.5).unwrap();
    let mut fails = Vec::new();
    let mut count = 0;
    for rl in [0.5 * zeta, 0.9 * zeta, 1.5 * zeta, 2.0 * zeta, 4.0 * zeta] {
        for n in [64usize, 256, 1024] {
            let p = SystemParams::with_density(3, rl, 1.0, 1.0, n).unwrap();
            let t = ideal_table(&p).unwrap();
            for c in [0.25, 1.0, 4.0] {
                let s = condensate_sandwich(&t, c).unwrap();
                count += 1;
                if !s.holds() {
                    fails.push(format!("rho*lambda^3={rl:.3} N={n} c={c}: {s:?}"));
                }
            }
        }
    }
    verdict("condensate sandwich", &fails, &format!("{count} configurations"));
}

#[test]
fn fugacity_solution() {
    let mut fails = Vec::new();
    let mut worst: f64 = 0.0;
    for d in [3u32, 4, 5] {
        let zc = riemann_zeta(d as f64 / 2.0).unwrap();
        for frac in [0.01, 0.1, 0.5, 0.9, 0.999] {
            let rl = frac * zc;
            let f = solve_fugacity(rl, d).unwrap();
            let r = (polylog(d as f64 / 2.0, f.z).unwrap() - rl).abs();
            worst = worst.max(r);
            if r >= 1e-10 || f.regime != Regime::BelowCritical {
                fails.push(format!("d={d} rho*lambda^d={rl}: residual {r:.2e}"));
            }
        }
        for rl in [zc, 1.5 * zc] {
            let f = solve_fugacity(rl, d).unwrap();
            if f.z != 1.0 {
                fails.push(format!("d={d} rho*lambda^d={rl}: z={}", f.z));
            }
        }
    }
    verdict("fugacity", &fails, &format!("worst residual {worst:.1e}, z=1 at and above critical"));
}

fn graph(labels: &[u64], edges: &[(u64, u64, u32)]) -> CycleMultiGraph {
    CycleMultiGraph::from_labelled_edges(labels.to_vec(), edges).unwrap()
}

#[test]
fn merger_graph_examples_and_random_suite() {
    let start = Instant::now();
    let mut fails = Vec::new();
    for n in 2..=8u32 {
        let g = graph(&[1, 2], &[(1, 2, n)]);
        if !is_merger(&g) || free_dimension(&g).unwrap() != n as usize - 1 {
            fails.push(format!("two vertices, {n} edges"));
        }
    }
    let tetra = graph(&[1, 2, 3, 4], &[(1, 2, 1), (1, 3, 1), (1, 4, 1), (2, 3, 1), (2, 4, 1), (3, 4, 1)]);
    let (x, y, z) = (1i64, 10, 100);
    let vectors = tetra
        .instances()
        .iter()
        .map(|&(i, j)| {
            vec![match (tetra.labels()[i], tetra.labels()[j]) {
                (1, 2) => x,
                (1, 3) => -x + z,
                (2, 3) => x + y,
                (1, 4) => -z,
                (2, 4) => -y,
                _ => y + z,
            }]
        })
        .collect();
    if !verify_assignment(&tetra, &EdgeVectorAssignment { dim: 1, vectors }) {
        fails.push("tetrahedron merged values".into());
    }
    let patch = graph(
        &[1, 2, 3, 4, 5, 6],
        &[(1, 2, 1), (2, 3, 1), (3, 4, 1), (4, 5, 1), (5, 6, 1), (1, 6, 1), (2, 4, 1), (2, 6, 1), (4, 6, 1)],
    );
    if incidence_rank(&patch) != 5 || free_dimension(&patch).unwrap() != 4 {
        fails.push("triangular patch rank/N_I".into());
    }
    for n in 3..=7u64 {
        let edges: Vec<_> = (1..=n).flat_map(|i| (i + 1..=n).map(move |j| (i, j, 1))).collect();
        let k = graph(&(1..=n).collect::<Vec<_>>(), &edges);
        if free_dimension(&k).unwrap() as u64 != (n - 1) * (n - 2) / 2 {
            fails.push(format!("K_{n}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..1000 {
        let g = random_bridgeless(&mut rng, 12, 24);
        let comps = g.components();
        let sizes: BTreeSet<usize> = comps.iter().copied().collect();
        let expected: usize = sizes.iter().map(|c| comps.iter().filter(|&&v| v == *c).count() - 1).sum();
        let ok = assign_edge_vectors(&g, 2).map(|a| verify_assignment(&g, &a)).unwrap_or(false);
        if !ok || incidence_rank(&g) != expected || g.vertex_count() > 12 {
            fails.push(format!("random graph {i}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 30.0 {
        fails.push(format!("runtime {secs:.1}s"));
    }
    verdict("merger graphs", &fails, &format!("worked examples and 1000 random graphs, {secs:.2}s"));
}

fn connected(v: usize, edges: &[(usize, usize)]) -> bool {
    let mut seen = vec![false; v];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &(a, b) in edges {
            for (s, t) in [(a, b), (b, a)] {
                if s == u && !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
    }
    seen.iter().all(|&s| s)
}

fn canonical(v: usize, edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut perm: Vec<usize> = (0..v).collect();
    let mut best: Option<Vec<(usize, usize)>> = None;
    loop {
        let mut e: Vec<(usize, usize)> =
            edges.iter().map(|&(a, b)| (perm[a].min(perm[b]), perm[a].max(perm[b]))).collect();
        e.sort_unstable();
        if best.as_ref().is_none_or(|b| e < *b) {
            best = Some(e);
        }
        let Some(i) = (0..v.saturating_sub(1)).rev().find(|&i| perm[i] < perm[i + 1]) else { break };
        let j = (i + 1..v).rev().find(|&j| perm[j] > perm[i]).unwrap();
        perm.swap(i, j);
        perm[i + 1..].reverse();
    }
    best.unwrap()
}

fn has_small_solution(v: usize, edges: &[(usize, usize)]) -> bool {
    let last: Vec<Option<usize>> = (0..v).map(|u| edges.iter().rposition(|&(a, b)| a == u || b == u)).collect();
    let mut sums = vec![0i64; v];
    fn go(k: usize, edges: &[(usize, usize)], last: &[Option<usize>], sums: &mut [i64]) -> bool {
        if k == edges.len() {
            return true;
        }
        let (a, b) = edges[k];
        for x in (-3i64..=3).filter(|&x| x != 0) {
            sums[a] += x;
            sums[b] -= x;
            let closed_ok = [a, b].iter().all(|&u| last[u] != Some(k) || sums[u] == 0);
            if closed_ok && go(k + 1, edges, last, sums) {
                return true;
            }
            sums[a] -= x;
            sums[b] += x;
        }
        false
    }
    go(0, edges, &last, &mut sums)
}

#[test]
fn merger_converse_by_exhaustion() {
    let start = Instant::now();
    let mut fails = Vec::new();
    let mut graphs = 0usize;
    for v in 2..=5usize {
        let pairs: Vec<(usize, usize)> = (0..v).flat_map(|i| (i + 1..v).map(move |j| (i, j))).collect();
        let mut seen = BTreeSet::new();
        let mut stack: Vec<Vec<usize>> = vec![vec![]];
        while let Some(pick) = stack.pop() {
            if pick.len() < 6 {
                let from = pick.last().copied().unwrap_or(0);
                for p in from..pairs.len() {
                    let mut next = pick.clone();
                    next.push(p);
                    stack.push(next);
                }
            }
            if pick.is_empty() {
                continue;
            }
            let edges: Vec<(usize, usize)> = pick.iter().map(|&p| pairs[p]).collect();
            if !connected(v, &edges) || !seen.insert(canonical(v, &edges)) {
                continue;
            }
            graphs += 1;
            let mut grouped: Vec<(u64, u64, u32)> = Vec::new();
            for &(a, b) in &edges {
                match grouped.iter_mut().find(|e| (e.0, e.1) == (a as u64 + 1, b as u64 + 1)) {
                    Some(e) => e.2 += 1,
                    None => grouped.push((a as u64 + 1, b as u64 + 1, 1)),
                }
            }
            let g = graph(&(1..=v as u64).collect::<Vec<_>>(), &grouped);
            if is_merger(&g) != has_small_solution(v, &edges) {
                fails.push(format!("V={v} edges {edges:?}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 120.0 {
        fails.push(format!("runtime {secs:.1}s"));
    }
    verdict("merger converse", &fails, &format!("{graphs} connected multigraphs up to isomorphism, {secs:.2}s"));
}

#[test]
fn two_particle_kernel_desk_check() {
    let params = SystemParams::new(1, 4.0, 0.1, 1.0, 2).unwrap();
    let pot = PairPotential::gaussian(1.0, 0.5).unwrap();
    let trunc = Truncation { alpha_max: 2, z_max: 8, tol: 1e-3 };
    let mut fails = Vec::new();
    let mut rows = Vec::new();
    for sizes in [vec![2usize], vec![1, 1]] {
        let f = eval_g_fourier(&[0.0], &sizes, &params, &pot, trunc).unwrap();
        let o = eval_g_oracle(&sizes, &params, &pot, 3, 128).unwrap();
        let diff = (f.value - o.value).abs();
        let budget = f.error_estimate + o.error_estimate;
        if diff > budget || budget / o.value.abs() > 1e-3 {
            fails.push(format!("{sizes:?}: diff {diff:.2e} budget {budget:.2e}"));
        }
        rows.push(format!("{sizes:?} diff {diff:.1e} <= {budget:.1e}"));
    }
    for (d, sizes) in [(1u32, vec![2usize]), (1, vec![1, 1]), (2, vec![2, 1]), (3, vec![1, 1, 1]), (2, vec![3])] {
        let n: usize = sizes.iter().sum();
        let p = SystemParams::new(d, 2.5, 1.0, 1.0, n).unwrap();
        let x = vec![0.0; d as usize];
        let g = eval_g_fourier(&x, &sizes, &p, &PairPotential::Zero, trunc).unwrap();
        let prod: f64 = sizes.iter().map(|&k| p.q_value(k)).product();
        if rel(g.value, prod) > 1e-10 {
            fails.push(format!("zero potential d={d} {sizes:?}: {} vs {prod}", g.value));
        }
    }
    verdict("two-particle kernel", &fails, &rows.join(", "));
}

#[test]
fn f_n_dual_forms_and_integral() {
    let mut fails = Vec::new();
    let mut worst: f64 = 0.0;
    let cases: [(FnRegime, f64, usize, [f64; 2]); 3] = [
        (FnRegime::Vanishing, 10.0, 1, [0.2, 0.45]),
        (FnRegime::Fixed, 2.0, 3, [-2.3, 0.1]),
        (FnRegime::Diverging, 0.5, 25, [0.02, -1.03]),
    ];
    for (regime, side, n, w) in cases {
        let p = SystemParams::new(2, side, 1.0, 1.0, 1).unwrap();
        for x in [[0.3, -0.1], [1.7, 0.0], [0.0, 0.05]] {
            let f = f_n_forms(&x, &w, &p, n).unwrap();
            worst = worst.max(f.relative_gap());
            if f.relative_gap() >= 1e-10 {
                fails.push(format!("{regime:?} x={x:?}: gap {:.2e}", f.relative_gap()));
            }
            let a = f_n_asymptotic(&x, &w, &p, n, regime).unwrap();
            if !a.within_bound() {
                fails.push(format!("{regime:?} x={x:?}: leading term outside bound"));
            }
        }
    }
    let p = SystemParams::new(1, 4.0, 1.0, 1.0, 1).unwrap();
    for (w, n) in [(0.0, 1usize), (0.3, 1), (1.25, 2), (-0.7, 5), (2.0, 16)] {
        let num = integrate_f_n_1d(w, &p, n, 256).unwrap();
        let exact = f_n_integral_closed_form(&[w], &p, n);
        if (num - exact).abs() >= 1e-8 * exact.max(1.0) {
            fails.push(format!("integral w={w} n={n}: {num} vs {exact}"));
        }
    }
    verdict("f_n identities", &fails, &format!("worst dual gap {worst:.1e}, integral identity at 5 points"));
}

#[test]
fn free_energy_bounds_and_dcp_inside() {
    let mut fails = Vec::new();
    for (d, n) in [(3u32, 64usize), (3, 512), (2, 100)] {
        let p = SystemParams::with_density(d, 1.0, 1.0, 1.0, n).unwrap();
        let b = free_energy_bounds(&p, &PairPotential::Zero).unwrap();
        if (b.lower - b.f0).abs() > 1e-12 || (b.upper - b.f0).abs() > 1e-12 {
            fails.push(format!("zero potential d={d} N={n}: {b:?}"));
        }
    }
    let p = SystemParams::with_density(3, 1.0, 1.0, 1.0, 512).unwrap();
    for (a, s) in [(1.0, 0.5), (0.3, 1.2), (2.0, 0.2)] {
        let pot = PairPotential::gaussian(a, s).unwrap();
        let b = free_energy_bounds(&p, &pot).unwrap();
        let closed = bounds_gap_closed_form(&p, &pot).unwrap();
        if rel(b.gap(), closed) > 1e-12 {
            fails.push(format!("gap A={a} sigma={s}: {} vs {closed}", b.gap()));
        }
        let (lo, _) = dcp_gamma_bracket(&p, &pot);
        let top = p.beta * pot.u0() / 2.0;
        for i in 0..=8 {
            let g = lo + (top - lo) * i as f64 / 8.0;
            let f = dcp_free_energy(&p, g, &pot).unwrap();
            if !b.clone().with_value(f).contains_value() {
                fails.push(format!("dcp outside at A={a} sigma={s} gamma={g}: {f}"));
            }
        }
    }
    verdict("free-energy bounds", &fails, "zero potential collapse, gap closed form, dcp inside at N=512");
}

#[test]
fn dcp_model_reduces_and_critical_density() {
    let mut fails = Vec::new();
    for (d, side, n) in [(3u32, 6.0, 300usize), (2, 4.0, 100), (1, 10.0, 50)] {
        let p = SystemParams::new(d, side, 1.0, 1.0, n).unwrap();
        let a: Vec<u64> = ideal_table(&p).unwrap().values().iter().map(|v| v.ln().to_bits()).collect();
        let b: Vec<u64> = dcp_table(&p, 0.0).unwrap().values().iter().map(|v| v.ln().to_bits()).collect();
        if a != b {
            fails.push(format!("gamma=0 differs at d={d}"));
        }
    }
    for d in [3u32, 4, 6] {
        let zc = riemann_zeta(d as f64 / 2.0).unwrap();
        for g in [0.0, -0.1, -1.0, -3.0, 0.7] {
            let c = dcp_critical(&PhiSequence::exponential(g), 1.3, d).unwrap();
            if (c.zeta_dcp - zc).abs() > 1e-10 {
                fails.push(format!("d={d} gamma={g}: {} vs {zc}", c.zeta_dcp));
            }
        }
    }
    verdict("cycle-decoupled model", &fails, "gamma=0 bit-identical, exponential family critical density");
}

#[test]
fn coupling_rate_maximizer() {
    let base = RateInputs { c: 0.42, a: 0.0, eps: 0.5, eps0: 0.5, v: 1.0, c1: 0.1, rho: 1.0, lambda: 1.0, d: 3 };
    let mut fails = Vec::new();
    let at_c = pair_rate(&base, base.c);
    if at_c != 0.0 {
        fails.push(format!("rate at a=c is {at_c}"));
    }
    let closed = coupling_rate(&base, RateMode::Pairs).unwrap().maximizing_gap;
    let steps = 10_000;
    let best_a = (0..=steps)
        .map(|i| base.c * i as f64 / steps as f64)
        .max_by(|x, y| pair_rate(&base, *x).total_cmp(&pair_rate(&base, *y)))
        .unwrap();
    let grid_gap = base.c - best_a;
    let r = rel(closed, grid_gap);
    if r > 0.1 {
        fails.push(format!("closed gap {closed:.4e} vs grid {grid_gap:.4e}"));
    }
    verdict("coupling rate", &fails, &format!("closed gap {closed:.4e}, grid gap {grid_gap:.4e}, rel {r:.3}"));
}

#[test]
fn cycle_length_limit_shapes() {
    let mut fails = Vec::new();
    for d in [3u32, 4, 5] {
        let s = d as f64 / 2.0;
        let zc = riemann_zeta(s).unwrap();
        let rl = 2.0 * zc;
        let f = solve_fugacity(rl, d).unwrap();
        let shape = limit_shape_finite(1.0, &f, rl, d).unwrap();
        let want = riemann_zeta(s + 1.0).unwrap() / zc;
        if (shape - want).abs() > 1e-10 {
            fails.push(format!("d={d}: {shape} vs {want}"));
        }
    }
    for i in 1..=400 {
        let t = i as f64 / 100.0;
        let want = (1.0 / t).ln().max(0.0);
        let got = limit_shape_macroscopic(t).unwrap();
        if (got - want).abs() > 1e-15 * want.max(1.0) {
            fails.push(format!("macroscopic t={t}: {got} vs {want}"));
        }
    }
    verdict("limit shapes", &fails, "finite shape at t=1 for d=3,4,5; macroscopic shape at 400 points");
}
