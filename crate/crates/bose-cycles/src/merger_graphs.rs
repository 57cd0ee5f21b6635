//! Inter-cycle coupling multigraphs: bridgelessness, constraint rank, free dimension and
//! explicit nonzero integer edge-vector solutions of the vertex constraints.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use rand::Rng;
use serde::Serialize;

use crate::error::{domain, Error, Result};

/// Multigraph on labelled vertices; each edge is stored once with its multiplicity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleMultiGraph {
    labels: Vec<u64>,
    edges: Vec<(usize, usize, u32)>,
}

impl CycleMultiGraph {
    /// Build from vertex labels and `(i, j, multiplicity)` over vertex indices.
    pub fn new(labels: Vec<u64>, edges: Vec<(usize, usize, u32)>) -> Result<Self> {
        let mut sorted = labels.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(domain("vertex labels must be distinct"));
        }
        if labels.contains(&0) {
            return Err(domain("vertex labels must be positive"));
        }
        let v = labels.len();
        let mut agg: BTreeMap<(usize, usize), u32> = BTreeMap::new();
        for (i, j, m) in edges {
            if i >= v || j >= v {
                return Err(domain(format!("edge ({i}, {j}) references a missing vertex")));
            }
            if i == j {
                return Err(domain("self-loops are not allowed"));
            }
            if m > 0 {
                *agg.entry((i.min(j), i.max(j))).or_insert(0) += m;
            }
        }
        let edges = agg.into_iter().map(|((i, j), m)| (i, j, m)).collect();
        Ok(CycleMultiGraph { labels, edges })
    }

    /// Build from edges given by label.
    pub fn from_labelled_edges(labels: Vec<u64>, edges: &[(u64, u64, u32)]) -> Result<Self> {
        let index: BTreeMap<u64, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        let look = |l: u64| index.get(&l).copied().ok_or_else(|| domain(format!("unknown vertex label {l}")));
        let e = edges.iter().map(|&(a, b, m)| Ok((look(a)?, look(b)?, m))).collect::<Result<Vec<_>>>()?;
        CycleMultiGraph::new(labels, e)
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    /// Aggregated edges `(i, j, b_ij)` with `i < j`.
    pub fn edges(&self) -> &[(usize, usize, u32)] {
        &self.edges
    }

    /// Total number of edge instances, counting multiplicity.
    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(|e| e.2 as usize).sum()
    }

    /// Edge instances in canonical order, oriented from the smaller to the larger label.
    pub fn instances(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for &(i, j, m) in &self.edges {
            let (lo, hi) = if self.labels[i] < self.labels[j] { (i, j) } else { (j, i) };
            for _ in 0..m {
                out.push((lo, hi));
            }
        }
        out
    }

    fn adjacency(&self, inst: &[(usize, usize)]) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.vertex_count()];
        for (id, &(a, b)) in inst.iter().enumerate() {
            adj[a].push((b, id));
            adj[b].push((a, id));
        }
        adj
    }

    /// Component index per vertex.
    pub fn components(&self) -> Vec<usize> {
        let inst = self.instances();
        let adj = self.adjacency(&inst);
        let mut comp = vec![usize::MAX; self.vertex_count()];
        let mut next = 0;
        for s in 0..self.vertex_count() {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &(w, _) in &adj[u] {
                    if comp[w] == usize::MAX {
                        comp[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn component_count(&self) -> usize {
        self.components().iter().max().map_or(0, |m| m + 1)
    }

    /// Edge-instance ids that are bridges.
    pub fn bridges(&self) -> Vec<usize> {
        let inst = self.instances();
        let adj = self.adjacency(&inst);
        let n = self.vertex_count();
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut timer = 0;
        let mut out = Vec::new();
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
            while let Some(&mut (u, parent_edge, ref mut pos)) = stack.last_mut() {
                if *pos < adj[u].len() {
                    let (w, id) = adj[u][*pos];
                    *pos += 1;
                    if id == parent_edge {
                        continue;
                    }
                    if disc[w] == usize::MAX {
                        disc[w] = timer;
                        low[w] = timer;
                        timer += 1;
                        stack.push((w, id, 0));
                    } else {
                        low[u] = low[u].min(disc[w]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(p, _, _)) = stack.last() {
                        low[p] = low[p].min(low[u]);
                        if low[u] > disc[p] {
                            out.push(parent_edge);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Every edge lies on a circle.
pub fn is_merger(g: &CycleMultiGraph) -> bool {
    g.bridges().is_empty()
}

/// `Σ (V_i − 1)` over components carrying at least one edge.
pub fn constraint_rank(g: &CycleMultiGraph) -> usize {
    let comp = g.components();
    let m = g.component_count();
    let mut size = vec![0usize; m];
    let mut has_edge = vec![false; m];
    for &c in &comp {
        size[c] += 1;
    }
    for &(i, _, _) in g.edges() {
        has_edge[comp[i]] = true;
    }
    (0..m).filter(|&c| has_edge[c]).map(|c| size[c] - 1).sum()
}

/// `N_I = E − V + m` for a merger.
pub fn free_dimension(g: &CycleMultiGraph) -> Result<usize> {
    if !is_merger(g) {
        return Err(Error::Refused("free dimension is defined for mergers only".into()));
    }
    Ok(g.edge_count() + g.component_count() - g.vertex_count())
}

/// Rank of the `V × E` signed incidence matrix by fraction-free elimination.
pub fn incidence_rank(g: &CycleMultiGraph) -> usize {
    let inst = g.instances();
    let rows = g.vertex_count();
    let cols = inst.len();
    let mut m = vec![vec![0i128; cols]; rows];
    for (e, &(lo, hi)) in inst.iter().enumerate() {
        m[lo][e] = 1;
        m[hi][e] = -1;
    }
    integer_rank(m)
}

pub(crate) fn integer_rank(mut m: Vec<Vec<i128>>) -> usize {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    let mut prev = 1i128;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| m[r][col] != 0) else { continue };
        m.swap(rank, p);
        for r in rank + 1..rows {
            for c in col + 1..cols {
                m[r][c] = (m[rank][col] * m[r][c] - m[r][col] * m[rank][c]) / prev;
            }
            m[r][col] = 0;
        }
        prev = m[rank][col];
        rank += 1;
    }
    rank
}

/// Integer edge vectors, one per edge instance in [`CycleMultiGraph::instances`] order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeVectorAssignment {
    pub dim: usize,
    pub vectors: Vec<Vec<i64>>,
}

/// Nonzero integer solution of all vertex constraints built from a fundamental-circle basis.
pub fn assign_edge_vectors(g: &CycleMultiGraph, dim: usize) -> Result<EdgeVectorAssignment> {
    if dim == 0 {
        return Err(domain("dimension must be >= 1"));
    }
    if !is_merger(g) {
        return Err(Error::Refused("graph has a bridge; no nonzero solution exists".into()));
    }
    let inst = g.instances();
    let adj = g.adjacency(&inst);
    let n = g.vertex_count();
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut depth = vec![usize::MAX; n];
    let mut in_tree = vec![false; inst.len()];
    for root in 0..n {
        if depth[root] != usize::MAX {
            continue;
        }
        depth[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &(w, id) in &adj[u] {
                if depth[w] == usize::MAX {
                    depth[w] = depth[u] + 1;
                    parent[w] = Some((u, id));
                    in_tree[id] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    let labels = g.labels();
    let mut value = vec![0i64; inst.len()];
    let mut add = |id: usize, from: usize, to: usize, x: i64| -> Result<()> {
        let signed = if labels[from] < labels[to] { x } else { -x };
        value[id] = value[id].checked_add(signed).ok_or_else(|| Error::ResourceLimit("edge value overflow".into()))?;
        Ok(())
    };
    let mut circle = 0u32;
    for (id, &(a, b)) in inst.iter().enumerate() {
        if in_tree[id] {
            continue;
        }
        if circle >= 62 {
            return Err(Error::ResourceLimit("more than 62 independent circles".into()));
        }
        let x = 1i64 << circle;
        circle += 1;
        add(id, a, b, x)?;
        let (mut u, mut w) = (b, a);
        let mut down = Vec::new();
        while u != w {
            if depth[u] >= depth[w] {
                let (p, pid) = parent[u].expect("non-root");
                add(pid, u, p, x)?;
                u = p;
            } else {
                let (p, pid) = parent[w].expect("non-root");
                down.push((pid, p, w));
                w = p;
            }
        }
        for (pid, p, c) in down.into_iter().rev() {
            add(pid, p, c, x)?;
        }
    }
    let vectors = value
        .into_iter()
        .map(|v| {
            let mut z = vec![0i64; dim];
            z[0] = v;
            z
        })
        .collect();
    Ok(EdgeVectorAssignment { dim, vectors })
}

/// All vectors nonzero and every vertex sum (plus at the smaller label) zero.
pub fn verify_assignment(g: &CycleMultiGraph, a: &EdgeVectorAssignment) -> bool {
    let inst = g.instances();
    if a.vectors.len() != inst.len() || a.vectors.iter().any(|v| v.len() != a.dim) {
        return false;
    }
    if a.vectors.iter().any(|v| v.iter().all(|&c| c == 0)) {
        return false;
    }
    let mut sums = vec![vec![0i128; a.dim]; g.vertex_count()];
    for (&(lo, hi), v) in inst.iter().zip(&a.vectors) {
        for (k, &c) in v.iter().enumerate() {
            sums[lo][k] += c as i128;
            sums[hi][k] -= c as i128;
        }
    }
    sums.iter().all(|s| s.iter().all(|&c| c == 0))
}

/// Aggregate particle-level couplings `α^k_j` into cycle-level multiplicities.
/// Cycle `l` gets label `l + 1`.
pub fn from_alpha(alpha: &BTreeMap<(usize, usize), u32>, cycle_sizes: &[usize]) -> Result<CycleMultiGraph> {
    if cycle_sizes.is_empty() || cycle_sizes.contains(&0) {
        return Err(domain("cycle sizes must be a nonempty list of positive integers"));
    }
    let n: usize = cycle_sizes.iter().sum();
    let mut owner = Vec::with_capacity(n + 1);
    owner.push(usize::MAX);
    for (l, &s) in cycle_sizes.iter().enumerate() {
        owner.extend(std::iter::repeat_n(l, s));
    }
    let mut edges = Vec::new();
    for (&(j, k), &m) in alpha {
        if !(1 <= j && j < k && k <= n) {
            return Err(domain(format!("coupling ({j}, {k}) needs 1 <= j < k <= {n}")));
        }
        if owner[j] != owner[k] && m > 0 {
            edges.push((owner[j], owner[k], m));
        }
    }
    CycleMultiGraph::new((1..=cycle_sizes.len() as u64).collect(), edges)
}

/// Heuristic bracket `(lower, upper)` on the max-min covering count `M`: a greedy
/// minimal circle covering gives the lower end, `N_I` the upper.
pub fn covering_bracket(g: &CycleMultiGraph) -> Result<(usize, usize)> {
    let upper = free_dimension(g)?;
    let inst = g.instances();
    let adj = g.adjacency(&inst);
    let mut circles: Vec<Vec<usize>> = Vec::new();
    let mut covered = vec![false; inst.len()];
    for (id, &(a, b)) in inst.iter().enumerate() {
        if covered[id] {
            continue;
        }
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; g.vertex_count()];
        let mut seen = vec![false; g.vertex_count()];
        seen[a] = true;
        let mut queue = VecDeque::from([a]);
        while let Some(u) = queue.pop_front() {
            if u == b {
                break;
            }
            for &(w, eid) in &adj[u] {
                if eid != id && !seen[w] {
                    seen[w] = true;
                    prev[w] = Some((u, eid));
                    queue.push_back(w);
                }
            }
        }
        let mut circle = vec![id];
        let mut u = b;
        while u != a {
            let (p, eid) = prev[u].expect("bridgeless graph has a return path");
            circle.push(eid);
            u = p;
        }
        for &e in &circle {
            covered[e] = true;
        }
        circles.push(circle);
    }
    let mut count = vec![0usize; inst.len()];
    for c in &circles {
        for &e in c {
            count[e] += 1;
        }
    }
    let mut kept = circles.len();
    for c in &circles {
        if c.iter().all(|&e| count[e] > 1) {
            for &e in c {
                count[e] -= 1;
            }
            kept -= 1;
        }
    }
    Ok((kept.min(upper), upper))
}

/// Parse an edge list: optional `labels l1 l2 ...` header, then `u v [mult]` lines by
/// label. `#` starts a comment.
pub fn parse_edge_list(text: &str) -> Result<CycleMultiGraph> {
    let mut labels: Vec<u64> = Vec::new();
    let mut header = false;
    let mut edges = Vec::new();
    let mut seen_edge = false;
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let err = |msg: String| Error::Parse { line: no + 1, msg };
        let num = |t: &str| t.parse::<u64>().map_err(|_| err(format!("'{t}' is not a nonnegative integer")));
        if toks[0].eq_ignore_ascii_case("labels") {
            if header || seen_edge {
                return Err(err("labels header must come first and only once".into()));
            }
            header = true;
            labels = toks[1..].iter().map(|t| num(t)).collect::<Result<_>>()?;
            continue;
        }
        if toks.len() < 2 || toks.len() > 3 {
            return Err(err(format!("expected 'u v mult', got '{line}'")));
        }
        seen_edge = true;
        let u = num(toks[0])?;
        let v = num(toks[1])?;
        let m = if toks.len() == 3 { num(toks[2])? } else { 1 };
        let m = u32::try_from(m).map_err(|_| err("multiplicity too large".into()))?;
        for l in [u, v] {
            if !labels.contains(&l) {
                if header {
                    return Err(err(format!("label {l} missing from header")));
                }
                labels.push(l);
            }
        }
        edges.push((u, v, m));
    }
    CycleMultiGraph::from_labelled_edges(labels, &edges).map_err(|e| match e {
        Error::Domain(msg) => Error::Parse { line: 0, msg },
        other => other,
    })
}

pub fn to_edge_list(g: &CycleMultiGraph) -> String {
    let mut s = String::from("labels");
    for l in g.labels() {
        let _ = write!(s, " {l}");
    }
    s.push('\n');
    for &(i, j, m) in g.edges() {
        let _ = writeln!(s, "{} {} {}", g.labels()[i], g.labels()[j], m);
    }
    s
}

/// Random bridgeless multigraph built from ear decompositions, possibly with several
/// components and isolated vertices.
pub fn random_bridgeless<R: Rng>(rng: &mut R, max_vertices: usize, max_edges: usize) -> CycleMultiGraph {
    loop {
        let g = random_attempt(rng, max_vertices, max_edges);
        if g.edge_count() <= max_edges {
            return g;
        }
    }
}

fn random_attempt<R: Rng>(rng: &mut R, max_vertices: usize, max_edges: usize) -> CycleMultiGraph {
    let total_v = rng.gen_range(2..=max_vertices.max(2));
    let mut edges: Vec<(usize, usize, u32)> = Vec::new();
    let mut edge_budget = max_edges;
    let mut next = 0;
    while next < total_v {
        let left = total_v - next;
        if left == 1 || edge_budget < 2 || rng.gen_bool(0.1) {
            next += 1;
            continue;
        }
        let size = rng.gen_range(2..=left.min(edge_budget));
        let base = next;
        next += size;
        let mut used: Vec<usize> = vec![base];
        let mut pending: Vec<usize> = (base + 1..base + size).collect();
        let first = pending.remove(0);
        edges.push((base, first, 2));
        used.push(first);
        edge_budget -= 2;
        while !pending.is_empty() {
            let k = rng.gen_range(1..=pending.len().min(edge_budget.saturating_sub(1)).max(1));
            if k + 1 > edge_budget {
                let v = pending.remove(0);
                let a = used[rng.gen_range(0..used.len())];
                edges.push((a, v, 2));
                used.push(v);
                edge_budget = edge_budget.saturating_sub(2);
                continue;
            }
            let a = used[rng.gen_range(0..used.len())];
            let b = used[rng.gen_range(0..used.len())];
            let mut prev = a;
            for _ in 0..k {
                let v = pending.remove(0);
                edges.push((prev, v, 1));
                used.push(v);
                prev = v;
            }
            if prev == b {
                edges.push((prev, a, 1));
            } else {
                edges.push((prev, b, 1));
            }
            edge_budget -= k + 1;
        }
        let extra = rng.gen_range(0..=edge_budget.min(3));
        for _ in 0..extra {
            let a = base + rng.gen_range(0..size);
            let b = base + rng.gen_range(0..size);
            if a != b {
                let p = rng.gen_range(0..size);
                let c = base + p;
                if c != a && c != b {
                    edges.push((a, c, 1));
                    edges.push((c, b, 1));
                    edges.push((b, a, 1));
                    edge_budget = edge_budget.saturating_sub(3);
                } else {
                    edges.push((a, b, 2));
                    edge_budget = edge_budget.saturating_sub(2);
                }
            }
        }
    }
    let mut labels: Vec<u64> = (1..=total_v as u64).collect();
    for i in (1..labels.len()).rev() {
        let j = rng.gen_range(0..=i);
        labels.swap(i, j);
    }
    CycleMultiGraph::new(labels, edges).expect("generator emits valid graphs")
}
