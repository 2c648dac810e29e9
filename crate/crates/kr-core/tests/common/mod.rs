//! Shared helpers for integration tests: two independent transport oracles
//! and deterministic instance generators.
//!
//! The oracles deliberately avoid the library's solver machinery. One uses
//! the cumulative-distribution formula that is exact on the real line, the
//! other enumerates every spanning-tree basis of the transportation
//! polytope. They agree with each other on line instances, which is the
//! cross-check that makes them trustworthy as referees for the solver.

#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Exact transport distance between measures on the real line:
/// the integral of |F_mu - F_nu| over the positions, evaluated by sweeping
/// the merged breakpoints. Atoms are `(position, weight)` pairs; positions
/// may repeat and need not be sorted.
pub fn line_w1(mu: &[(f64, f64)], nu: &[(f64, f64)]) -> f64 {
    let mut events: Vec<(f64, f64, f64)> = mu
        .iter()
        .map(|&(x, w)| (x, w, 0.0))
        .chain(nu.iter().map(|&(x, w)| (x, 0.0, w)))
        .collect();
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut total = 0.0f64;
    let mut f_mu = 0.0f64;
    let mut f_nu = 0.0f64;
    let mut prev = f64::NEG_INFINITY;
    for (x, dmu, dnu) in events {
        if prev.is_finite() && x > prev {
            total += (f_mu - f_nu).abs() * (x - prev);
        }
        f_mu += dmu;
        f_nu += dnu;
        prev = x;
    }
    total
}

/// Exact optimum of the transportation problem by exhaustive search over
/// basis structures. Every vertex of the transportation polytope is the
/// unique flow supported on some spanning tree of the complete bipartite
/// graph, so minimizing the cost over all feasible spanning-tree flows
/// yields the true optimum. Only viable for small instances: the number of
/// candidate bases is C(m*n, m+n-1).
pub fn enum_w1(supply: &[f64], demand: &[f64], cost: impl Fn(usize, usize) -> f64) -> f64 {
    let m = supply.len();
    let n = demand.len();
    assert!(m > 0 && n > 0, "empty marginal");
    let cells = m * n;
    let k = m + n - 1;
    assert!(k <= cells, "not enough cells for a basis");
    let mut best = f64::INFINITY;
    let mut pick: Vec<usize> = (0..k).collect();
    loop {
        if let Some(value) = tree_flow_cost(supply, demand, &pick, &cost) {
            if value < best {
                best = value;
            }
        }
        // advance to the next k-combination of 0..cells in lex order
        let mut i = k;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] != i + cells - k {
                break;
            }
        }
        if pick[i] == i + cells - k {
            return best;
        }
        pick[i] += 1;
        for j in i + 1..k {
            pick[j] = pick[j - 1] + 1;
        }
    }
}

/// Solve the flows forced by a candidate basis via leaf elimination.
/// Returns the plan cost when the basis is a spanning tree whose flow is
/// nonnegative, `None` otherwise.
fn tree_flow_cost(
    supply: &[f64],
    demand: &[f64],
    pick: &[usize],
    cost: &impl Fn(usize, usize) -> f64,
) -> Option<f64> {
    let m = supply.len();
    let n = demand.len();
    let nodes = m + n;

    let mut parent: Vec<usize> = (0..nodes).collect();
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];
    for (edge, &cell) in pick.iter().enumerate() {
        let i = cell / n;
        let j = cell % n;
        let (a, b) = (i, m + j);
        let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
        if ra == rb {
            return None; // cycle
        }
        parent[ra] = rb;
        adjacency[a].push((b, edge));
        adjacency[b].push((a, edge));
    }

    let mut balance: Vec<f64> = supply
        .iter()
        .copied()
        .chain(demand.iter().map(|&d| -d))
        .collect();
    let mut degree: Vec<usize> = adjacency.iter().map(Vec::len).collect();
    let mut removed = vec![false; pick.len()];
    let mut leaves: Vec<usize> = (0..nodes).filter(|&v| degree[v] == 1).collect();
    let mut flow = vec![0.0; pick.len()];
    let mut processed = 0;
    while let Some(v) = leaves.pop() {
        if degree[v] != 1 {
            continue;
        }
        let &(u, edge) = adjacency[v]
            .iter()
            .find(|&&(_, e)| !removed[e])
            .expect("degree-one node keeps one live edge");
        // positive flow runs from the supply side to the demand side
        flow[edge] = if v < m { balance[v] } else { -balance[v] };
        if flow[edge] < -1e-12 {
            return None;
        }
        balance[u] += balance[v];
        balance[v] = 0.0;
        removed[edge] = true;
        degree[v] -= 1;
        degree[u] -= 1;
        if degree[u] == 1 {
            leaves.push(u);
        }
        processed += 1;
    }
    if processed != pick.len() {
        return None; // disconnected (cannot happen once edges == nodes-1 and acyclic)
    }
    let mut value = 0.0;
    for (edge, &cell) in pick.iter().enumerate() {
        value += flow[edge] * cost(cell / n, cell % n);
    }
    Some(value)
}

/// Random positive weights summing to one.
pub fn random_simplex(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..len).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    let drift: f64 = 1.0 - w.iter().sum::<f64>();
    w[0] += drift;
    w
}

/// A random line instance: shared positions, two probability vectors with
/// the given support sizes over disjoint index ranges (so the measures
/// never overlap unless positions collide).
pub struct LineInstance {
    pub positions: Vec<f64>,
    pub mu: Vec<(usize, f64)>,
    pub nu: Vec<(usize, f64)>,
}

pub fn random_line_instance(rng: &mut ChaCha8Rng, m: usize, n: usize) -> LineInstance {
    let positions: Vec<f64> = (0..m + n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let wm = random_simplex(rng, m);
    let wn = random_simplex(rng, n);
    LineInstance {
        positions,
        mu: (0..m).map(|i| (i, wm[i])).collect(),
        nu: (0..n).map(|j| (m + j, wn[j])).collect(),
    }
}

/// A random planar instance with some shared atoms between the measures,
/// exercising the diagonal (mass that stays in place).
pub struct PlaneInstance {
    pub points: Vec<Vec<f64>>,
    pub mu: Vec<(usize, f64)>,
    pub nu: Vec<(usize, f64)>,
}

pub fn random_plane_instance(
    rng: &mut ChaCha8Rng,
    m: usize,
    n: usize,
    shared: usize,
) -> PlaneInstance {
    assert!(shared <= m.min(n));
    let distinct = m + n - shared;
    let points: Vec<Vec<f64>> = (0..distinct)
        .map(|_| vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)])
        .collect();
    let wm = random_simplex(rng, m);
    let wn = random_simplex(rng, n);
    // mu occupies indices 0..m; nu reuses the first `shared` of them and
    // then the fresh tail.
    let mu = (0..m).map(|i| (i, wm[i])).collect();
    let nu = (0..n)
        .map(|j| {
            let idx = if j < shared { j } else { m + (j - shared) };
            (idx, wn[j])
        })
        .collect();
    PlaneInstance { points, mu, nu }
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
