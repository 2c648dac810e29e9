//! Exact Kantorovich-Rubinshtein distance between finitely supported
//! probability measures, certified from both sides.
//!
//! On a finite union support the distance is the optimum of a transportation
//! problem. Because the cost is a metric, mass shared by both measures never
//! profits from moving: `min(mu_p, nu_p)` is pinned in place at each shared
//! point and the solver works on the positive and negative parts of
//! `mu - nu` only. The reduced problem is solved with the network simplex
//! method on the complete bipartite graph, and the result is reported as a
//! certificate pair:
//!
//! * `plan`: a coupling with marginals `mu` and `nu` whose cost equals the
//!   reported value (an upper bound by feasibility);
//! * `potential`: a 1-Lipschitz function whose integral against `mu - nu`
//!   equals the same value (a lower bound by duality).
//!
//! Weak duality squeezes the distance between the two bounds, so
//! [`verify_certificate`] can confirm optimality using arithmetic only, with
//! no trust in the solver.
//!
//! Everything is deterministic: entering arcs are chosen by most negative
//! reduced cost with lexicographic tie-breaking, so identical inputs yield
//! identical certificates.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lipschitz::{max_defect, mcshane_reproject, LipFunction};
use crate::measure::{kahan_total, DiscreteMeasure, KahanSum};
use crate::space::{union_space, MetricSpace};
use crate::tol;

/// Hard ceiling on the union support size. Beyond this the dense cost
/// table and the quadratic certificate checks stop being reasonable.
pub const MAX_UNION_ATOMS: usize = 5000;

/// Safety net against pivot cycling; reached only by pathology.
const PIVOT_LIMIT: usize = 500_000;

/// After this many consecutive degenerate pivots the pricing rule switches
/// from steepest descent to first-negative, which cannot cycle.
const DEGENERATE_SWITCH: usize = 2000;

/// The output of [`kr_distance`]: the value plus the primal and dual
/// certificates that pin it from both sides.
#[derive(Debug, Clone)]
pub struct TransportCertificate {
    /// The transport distance, equal to the cost of `plan`.
    pub value: f64,
    /// Coupling entries `(from, to, mass)` over point indices, sorted,
    /// with only positive masses listed. Row sums over `from` recover the
    /// first measure, column sums over `to` the second.
    pub plan: Vec<(usize, usize, f64)>,
    /// A 1-Lipschitz function on the union support whose integral against
    /// the difference of the measures equals `value`.
    pub potential: LipFunction,
}

/// Residuals of a certificate check; all should sit at round-off level.
#[derive(Debug, Clone, Copy)]
pub struct CertificateCheck {
    /// Largest deviation of a plan marginal from the corresponding measure.
    pub max_marginal_residual: f64,
    /// Largest violation of the 1-Lipschitz property by the potential,
    /// over all pairs in its domain.
    pub max_lip_violation: f64,
    /// `|cost(plan) - value|`.
    pub primal_gap: f64,
    /// `|integral of potential against (mu - nu) - value|`.
    pub dual_gap: f64,
}

impl CertificateCheck {
    /// Upper bound on the gap between the primal and dual objectives.
    pub fn duality_gap(&self) -> f64 {
        self.primal_gap + self.dual_gap
    }

    pub fn passes(&self) -> bool {
        self.max_marginal_residual <= tol::CERT
            && self.max_lip_violation <= tol::CERT
            && self.primal_gap <= tol::CERT
            && self.dual_gap <= tol::CERT
    }
}

/// Compute the transport distance between two probability measures on
/// compatible spaces, with certificates.
pub fn kr_distance(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<TransportCertificate> {
    mu.require_probability()?;
    nu.require_probability()?;
    let space = union_space(mu.space(), nu.space())?;

    let mut weights: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for &(p, w) in mu.atoms() {
        weights.entry(p).or_insert((0.0, 0.0)).0 = w;
    }
    for &(p, w) in nu.atoms() {
        weights.entry(p).or_insert((0.0, 0.0)).1 = w;
    }
    if weights.len() > MAX_UNION_ATOMS {
        return Err(Error::TooManyAtoms { atoms: weights.len(), limit: MAX_UNION_ATOMS });
    }

    let mut plan: Vec<(usize, usize, f64)> = Vec::new();
    let mut sources: Vec<usize> = Vec::new();
    let mut sinks: Vec<usize> = Vec::new();
    let mut supply: Vec<f64> = Vec::new();
    let mut demand: Vec<f64> = Vec::new();
    let mut balanced: Vec<usize> = Vec::new();
    for (&p, &(wm, wn)) in &weights {
        let pinned = wm.min(wn);
        if pinned > 0.0 {
            plan.push((p, p, pinned));
        }
        let net = wm - wn;
        if net > 0.0 {
            sources.push(p);
            supply.push(net);
        } else if net < 0.0 {
            sinks.push(p);
            demand.push(-net);
        } else {
            balanced.push(p);
        }
    }

    let mut values: BTreeMap<usize, f64> = BTreeMap::new();
    if sources.is_empty() || sinks.is_empty() {
        // The measures agree atom by atom (up to mass bookkeeping slack);
        // nothing moves and the zero function certifies the zero value.
        for &p in weights.keys() {
            values.insert(p, 0.0);
        }
    } else {
        rebalance(&mut supply, &mut demand);
        let cost = CostTable::build(&space, &sources, &sinks);
        let solved = solve_transportation(&supply, &demand, &cost)?;
        for (pos, &p) in sources.iter().enumerate() {
            values.insert(p, solved.u[pos]);
        }
        for (pos, &p) in sinks.iter().enumerate() {
            values.insert(p, -solved.v[pos]);
        }
        for &(i, j, flow) in &solved.flows {
            plan.push((sources[i], sinks[j], flow));
        }
        // Points where the measures already agree take the tightest value
        // compatible with the computed potentials.
        if !balanced.is_empty() {
            let anchors: Vec<(usize, f64)> = values.iter().map(|(&i, &v)| (i, v)).collect();
            for &p in &balanced {
                let mut best = f64::INFINITY;
                for &(a, fa) in &anchors {
                    best = best.min(fa + space.dist(p, a));
                }
                values.insert(p, best);
            }
        }
    }

    // Re-projecting absorbs the round-off the simplex potentials carry, so
    // the published potential satisfies its Lipschitz bound outright; the
    // values it can move by are at defect scale and stay inside the
    // certificate tolerance.
    let mut values = mcshane_reproject(&values, &space);
    let floor = values.values().fold(f64::INFINITY, |acc, &v| acc.min(v));
    for v in values.values_mut() {
        *v -= floor;
    }

    plan.sort_by_key(|&(a, b, _)| (a, b));
    let value = kahan_total(plan.iter().map(|&(a, b, f)| f * space.dist(a, b)));
    let potential = LipFunction::new(values, 1.0)?;
    Ok(TransportCertificate { value, plan, potential })
}

/// Evaluate the dual objective `integral f d(mu - nu)` for a candidate
/// function, after checking that `f` really is 1-Lipschitz on the union
/// support. The result is a valid lower bound for the distance.
pub fn dual_evaluate(
    f: &LipFunction,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Result<f64> {
    let space = union_space(mu.space(), nu.space())?;
    let support: Vec<usize> = {
        let mut s: Vec<usize> = mu.atoms().iter().chain(nu.atoms()).map(|&(p, _)| p).collect();
        s.sort_unstable();
        s.dedup();
        s
    };
    for (a, &i) in support.iter().enumerate() {
        let fi = f.try_value(i)?;
        for &j in &support[a + 1..] {
            let fj = f.try_value(j)?;
            let df = (fi - fj).abs();
            let d = space.dist(i, j);
            if df > d + tol::LIP_SLACK {
                return Err(Error::NotLipschitz { i, j, observed: df, allowed: d });
            }
        }
    }
    Ok(mu.integrate(f)? - nu.integrate(f)?)
}

/// Re-derive every claim a certificate makes about a pair of measures and
/// report the residuals. Uses nothing from the solver: marginals are summed
/// directly, the Lipschitz property is checked pairwise, and the two
/// objectives are recomputed from scratch.
pub fn verify_certificate(
    cert: &TransportCertificate,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Result<CertificateCheck> {
    let space = union_space(mu.space(), nu.space())?;

    let mut row: BTreeMap<usize, KahanSum> = BTreeMap::new();
    let mut col: BTreeMap<usize, KahanSum> = BTreeMap::new();
    let mut cost = KahanSum::default();
    for &(a, b, flow) in &cert.plan {
        if a >= space.len() || b >= space.len() {
            return Err(Error::PointOutOfRange { index: a.max(b), len: space.len() });
        }
        if !flow.is_finite() || flow < 0.0 {
            return Err(Error::NegativeWeight { index: a, weight: flow });
        }
        row.entry(a).or_default().add(flow);
        col.entry(b).or_default().add(flow);
        cost.add(flow * space.dist(a, b));
    }
    let mut max_marginal_residual = 0.0f64;
    let residual = |sums: &BTreeMap<usize, KahanSum>, measure: &DiscreteMeasure| {
        let mut worst = 0.0f64;
        for (&p, sum) in sums {
            worst = worst.max((sum.value() - measure.weight(p)).abs());
        }
        for &(p, w) in measure.atoms() {
            if !sums.contains_key(&p) {
                worst = worst.max(w);
            }
        }
        worst
    };
    max_marginal_residual = max_marginal_residual
        .max(residual(&row, mu))
        .max(residual(&col, nu));

    let max_lip_violation =
        max_defect(cert.potential.values(), &space, cert.potential.lip_bound());

    let dual = mu.integrate(&cert.potential)? - nu.integrate(&cert.potential)?;

    Ok(CertificateCheck {
        max_marginal_residual,
        max_lip_violation,
        primal_gap: (cost.value() - cert.value).abs(),
        dual_gap: (dual - cert.value).abs(),
    })
}

/// Absorb the float residual between total supply and total demand into the
/// largest entry of the lighter side, so the transportation problem closes
/// exactly. The adjustment is at mass-bookkeeping scale.
fn rebalance(supply: &mut [f64], demand: &mut [f64]) {
    let s = kahan_total(supply.iter().copied());
    let d = kahan_total(demand.iter().copied());
    let diff = s - d;
    let bump = |side: &mut [f64], amount: f64| {
        let mut k = 0;
        for (i, &x) in side.iter().enumerate() {
            if x > side[k] {
                k = i;
            }
        }
        side[k] += amount;
    };
    if diff > 0.0 {
        bump(demand, diff);
    } else if diff < 0.0 {
        bump(supply, -diff);
    }
}

/// Dense cost table for the reduced problem, extracted once so the pricing
/// scans run over flat memory.
struct CostTable {
    n: usize,
    c: Vec<f64>,
    max: f64,
}

impl CostTable {
    fn build(space: &MetricSpace, sources: &[usize], sinks: &[usize]) -> CostTable {
        let n = sinks.len();
        let mut c = Vec::with_capacity(sources.len() * n);
        let mut max = 0.0f64;
        for &a in sources {
            for &b in sinks {
                let d = space.dist(a, b);
                max = max.max(d);
                c.push(d);
            }
        }
        CostTable { n, c, max }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.c[i * self.n + j]
    }
}

struct Solved {
    u: Vec<f64>,
    v: Vec<f64>,
    /// `(source position, sink position, mass)` with positive mass only.
    flows: Vec<(usize, usize, f64)>,
}

/// Network simplex on the complete bipartite transportation problem.
///
/// The basis is a spanning tree over `m + n` nodes (sources first). The
/// initial tree comes from greedy cheapest-cell shipping, which is acyclic
/// because every positive shipment exhausts a row or a column; zero-flow
/// arcs then complete it to a spanning tree in cost order. Each pivot picks
/// the most negative reduced cost (ties to the lexicographically first
/// cell), cancels along the unique tree cycle, and recomputes potentials.
/// Long degenerate runs switch pricing to first-negative order, which
/// cannot revisit a basis; a hard pivot cap backstops everything.
///
/// The returned potentials satisfy `u_i + v_j <= c_ij` everywhere (up to
/// pivot tolerance) with equality on basic arcs. Because the costs obey the
/// triangle inequality and the tree anchors every node to a basic arc, the
/// node potentials differ by at most the distance between their points
/// across any pair of nodes, which is what makes the dual a Lipschitz
/// function rather than a mere vector.
fn solve_transportation(a: &[f64], b: &[f64], cost: &CostTable) -> Result<Solved> {
    let m = a.len();
    let n = b.len();
    let nodes = m + n;
    let eps = 1e-12 * (1.0 + cost.max);

    let mut order: Vec<u32> = (0..(m * n) as u32).collect();
    order.sort_by(|&x, &y| {
        let (cx, cy) = (cost.c[x as usize], cost.c[y as usize]);
        cx.partial_cmp(&cy).unwrap().then(x.cmp(&y))
    });

    // Greedy shipping pass: at most m + n - 1 positive allocations.
    let mut rem_a = a.to_vec();
    let mut rem_b = b.to_vec();
    let mut arc_i: Vec<u32> = Vec::with_capacity(nodes - 1);
    let mut arc_j: Vec<u32> = Vec::with_capacity(nodes - 1);
    let mut arc_flow: Vec<f64> = Vec::with_capacity(nodes - 1);
    for &cell in &order {
        let (i, j) = ((cell as usize) / n, (cell as usize) % n);
        let ship = rem_a[i].min(rem_b[j]);
        if ship > 0.0 {
            arc_i.push(i as u32);
            arc_j.push(j as u32);
            arc_flow.push(ship);
            rem_a[i] -= ship;
            rem_b[j] -= ship;
        }
    }

    // Complete the forest to a spanning tree with zero-flow arcs.
    let mut parent: Vec<u32> = (0..nodes as u32).collect();
    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }
    for k in 0..arc_i.len() {
        let (ra, rb) = (
            find(&mut parent, arc_i[k]),
            find(&mut parent, (m as u32) + arc_j[k]),
        );
        debug_assert_ne!(ra, rb, "greedy shipping produced a cycle");
        parent[ra as usize] = rb;
    }
    for &cell in &order {
        if arc_i.len() == nodes - 1 {
            break;
        }
        let (i, j) = ((cell as usize) / n, (cell as usize) % n);
        let (ra, rb) = (find(&mut parent, i as u32), find(&mut parent, (m + j) as u32));
        if ra != rb {
            parent[ra as usize] = rb;
            arc_i.push(i as u32);
            arc_j.push(j as u32);
            arc_flow.push(0.0);
        }
    }
    debug_assert_eq!(arc_i.len(), nodes - 1);
    drop(order);

    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); nodes];
    for e in 0..arc_i.len() {
        adjacency[arc_i[e] as usize].push(e as u32);
        adjacency[m + arc_j[e] as usize].push(e as u32);
    }

    let mut pot = vec![0.0f64; nodes];
    let mut stamp = vec![0u32; nodes];
    let mut epoch = 0u32;
    let mut stack: Vec<u32> = Vec::with_capacity(nodes);
    let mut parent_arc: Vec<u32> = vec![0; nodes];

    let compute_potentials = |pot: &mut Vec<f64>,
                              stamp: &mut Vec<u32>,
                              epoch: &mut u32,
                              stack: &mut Vec<u32>,
                              adjacency: &Vec<Vec<u32>>,
                              arc_i: &Vec<u32>,
                              arc_j: &Vec<u32>| {
        *epoch += 1;
        pot[0] = 0.0;
        stamp[0] = *epoch;
        stack.clear();
        stack.push(0);
        while let Some(x) = stack.pop() {
            for &e in &adjacency[x as usize] {
                let (i, j) = (arc_i[e as usize], arc_j[e as usize]);
                let other = if x == i { m as u32 + j } else { i };
                if stamp[other as usize] != *epoch {
                    stamp[other as usize] = *epoch;
                    pot[other as usize] =
                        cost.at(i as usize, j as usize) - pot[x as usize];
                    stack.push(other);
                }
            }
        }
    };

    compute_potentials(
        &mut pot, &mut stamp, &mut epoch, &mut stack, &adjacency, &arc_i, &arc_j,
    );

    let mut pivots = 0usize;
    let mut degenerate_run = 0usize;
    loop {
        // Pricing: steepest reduced cost, or first-negative after a long
        // degenerate run.
        let bland = degenerate_run >= DEGENERATE_SWITCH;
        let mut entering: Option<(usize, usize)> = None;
        let mut best = -eps;
        'scan: for i in 0..m {
            let ui = pot[i];
            let row = &cost.c[i * n..(i + 1) * n];
            for (j, &c) in row.iter().enumerate() {
                let reduced = c - ui - pot[m + j];
                if reduced < best {
                    best = reduced;
                    entering = Some((i, j));
                    if bland {
                        break 'scan;
                    }
                }
            }
        }
        let Some((ei, ej)) = entering else {
            break;
        };
        pivots += 1;
        if pivots > PIVOT_LIMIT {
            return Err(Error::PivotLimitExceeded { pivots });
        }

        // The unique tree path from the entering arc's sink end back to its
        // source end; arcs at even positions lose flow.
        epoch += 1;
        stamp[ei] = epoch;
        stack.clear();
        stack.push(ei as u32);
        let target = (m + ej) as u32;
        'walk: while let Some(x) = stack.pop() {
            for &e in &adjacency[x as usize] {
                let (i, j) = (arc_i[e as usize], arc_j[e as usize]);
                let other = if x == i { m as u32 + j } else { i };
                if stamp[other as usize] != epoch {
                    stamp[other as usize] = epoch;
                    parent_arc[other as usize] = e;
                    if other == target {
                        break 'walk;
                    }
                    stack.push(other);
                }
            }
        }
        debug_assert_eq!(stamp[target as usize], epoch, "basis tree is disconnected");

        let mut path: Vec<u32> = Vec::new();
        let mut at = target;
        while at != ei as u32 {
            let e = parent_arc[at as usize];
            path.push(e);
            let (i, j) = (arc_i[e as usize], arc_j[e as usize]);
            at = if at == i { m as u32 + j } else { i };
        }

        let mut theta = f64::INFINITY;
        let mut leave: Option<u32> = None;
        for (pos, &e) in path.iter().enumerate() {
            if pos % 2 != 0 {
                continue;
            }
            let f = arc_flow[e as usize];
            let replace = match leave {
                None => true,
                Some(cur) => {
                    f < theta
                        || (f == theta
                            && (arc_i[e as usize], arc_j[e as usize])
                                < (arc_i[cur as usize], arc_j[cur as usize]))
                }
            };
            if replace {
                theta = f;
                leave = Some(e);
            }
        }
        let leave = leave.expect("cycle has at least one losing arc");

        if theta > 0.0 {
            for (pos, &e) in path.iter().enumerate() {
                if pos % 2 == 0 {
                    arc_flow[e as usize] -= theta;
                } else {
                    arc_flow[e as usize] += theta;
                }
            }
            degenerate_run = 0;
        } else {
            degenerate_run += 1;
        }

        // Swap the leaving arc's slot over to the entering arc.
        let slot = leave as usize;
        let (old_i, old_j) = (arc_i[slot] as usize, m + arc_j[slot] as usize);
        for node in [old_i, old_j] {
            let list = &mut adjacency[node];
            let pos = list.iter().position(|&e| e == leave).expect("arc listed");
            list.swap_remove(pos);
        }
        arc_i[slot] = ei as u32;
        arc_j[slot] = ej as u32;
        arc_flow[slot] = theta;
        adjacency[ei].push(leave);
        adjacency[m + ej].push(leave);

        compute_potentials(
            &mut pot, &mut stamp, &mut epoch, &mut stack, &adjacency, &arc_i, &arc_j,
        );
    }

    // Re-solve the flows exactly from the final tree by leaf elimination,
    // discarding whatever drift the pivots accumulated.
    let mut balance: Vec<f64> = a.iter().copied().chain(b.iter().map(|&x| -x)).collect();
    let mut degree: Vec<usize> = adjacency.iter().map(Vec::len).collect();
    let mut removed = vec![false; arc_i.len()];
    let mut leaves: Vec<usize> = (0..nodes).filter(|&x| degree[x] == 1).collect();
    let mut flows: Vec<(usize, usize, f64)> = Vec::new();
    while let Some(x) = leaves.pop() {
        if degree[x] != 1 {
            continue;
        }
        let &e = adjacency[x]
            .iter()
            .find(|&&e| !removed[e as usize])
            .expect("leaf keeps one live arc");
        let (i, j) = (arc_i[e as usize] as usize, arc_j[e as usize] as usize);
        let flow = if x < m { balance[x] } else { -balance[x] };
        let other = if x < m { m + j } else { i };
        balance[other] += balance[x];
        balance[x] = 0.0;
        removed[e as usize] = true;
        degree[x] -= 1;
        degree[other] -= 1;
        if degree[other] == 1 {
            leaves.push(other);
        }
        if flow > 0.0 {
            flows.push((i, j, flow));
        }
    }
    flows.sort_unstable_by_key(|&(a, b, _)| (a, b));

    Ok(Solved {
        u: pot[..m].to_vec(),
        v: pot[m..].to_vec(),
        flows,
    })
}
