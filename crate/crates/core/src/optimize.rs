//! Exhaustive search for optimal plans between small atomic marginals, and a
//! local improvement pass driven by quasi-cycle shortcuts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cycles::{find_lagrangian_cycles, remove_quasi_cycle, LagrangianCycle};
use crate::error::{check_alpha, Error, Result};
use crate::flow::{decompose_with_stationary, EulerFlow};
use crate::geometry::{eps_geom, Point};
use crate::measure::{AtomicMeasure, WEIGHT_EPS};
use crate::plan::{marginals, TrafficPlan, WeightedCurve};

/// Largest number of atoms per side accepted by [`brute_force_optimal`].
pub const MAX_ATOMS_PER_SIDE: usize = 4;

/// A tree on terminals plus free branch points.
///
/// Nodes `0..terminals.len()` are terminals, the rest branch points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub terminals: Vec<Point>,
    /// Net demand at each terminal: negative at sources, positive at sinks.
    pub demand: Vec<f64>,
    pub branch_points: Vec<Point>,
    pub edges: Vec<(usize, usize)>,
    /// Flow along each edge from its first to its second node.
    pub edge_flow: Vec<f64>,
}

impl TopologySpec {
    fn node(&self, i: usize) -> &Point {
        if i < self.terminals.len() {
            &self.terminals[i]
        } else {
            &self.branch_points[i - self.terminals.len()]
        }
    }

    /// Σ |flow|^α · length.
    pub fn cost(&self, alpha: f64) -> f64 {
        self.edges
            .iter()
            .zip(&self.edge_flow)
            .map(|(&(u, v), f)| f.abs().powf(alpha) * self.node(u).dist(self.node(v)))
            .sum()
    }

    /// The tree as an overlay flow; zero-flow and zero-length edges vanish.
    pub fn to_flow(&self) -> Result<EulerFlow> {
        EulerFlow::from_segments(
            self.edges
                .iter()
                .zip(&self.edge_flow)
                .map(|(&(u, v), &f)| (self.node(u).clone(), self.node(v).clone(), f)),
        )
    }
}

/// Knobs for the branch-point descent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub seed: u64,
    /// Starting configurations per topology.
    pub restarts: usize,
    /// Sweep cap per start.
    pub max_sweeps: usize,
    /// Stop once no branch point moves farther than this in a sweep.
    pub move_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            seed: 0,
            restarts: 5,
            max_sweeps: 500,
            move_tol: 1e-10,
        }
    }
}

/// Output of [`brute_force_optimal`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalPlan {
    pub plan: TrafficPlan,
    /// E^α of `plan`.
    pub energy: f64,
    /// Best tree, absent when nothing moves.
    pub topology: Option<TopologySpec>,
    pub topologies_searched: usize,
}

/// Every full tree topology on `n >= 2` terminals, as edge lists over nodes
/// `0..n` (terminals) and `n..2n-2` (branch points).
pub fn full_topologies(n: usize) -> Vec<Vec<(usize, usize)>> {
    assert!(n >= 2, "a tree needs two terminals");
    if n == 2 {
        return vec![vec![(0, 1)]];
    }
    let mut out = vec![vec![(0, n), (1, n), (2, n)]];
    for k in 3..n {
        let branch = n + k - 2;
        let mut next = Vec::with_capacity(out.len() * (2 * k - 1));
        for tree in &out {
            for (i, &(u, v)) in tree.iter().enumerate() {
                let mut t = tree.clone();
                t[i] = (u, branch);
                t.push((branch, v));
                t.push((branch, k));
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// Flow on each edge `(u, v)` from u to v given terminal demands.
fn tree_flows(n_nodes: usize, edges: &[(usize, usize)], demand: &[f64]) -> Vec<f64> {
    let mut adj = vec![Vec::new(); n_nodes];
    for (i, &(u, v)) in edges.iter().enumerate() {
        adj[u].push((v, i));
        adj[v].push((u, i));
    }
    // Post-order from root 0: subtree demand.
    let mut parent_edge = vec![usize::MAX; n_nodes];
    let mut order = Vec::with_capacity(n_nodes);
    let mut seen = vec![false; n_nodes];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        order.push(u);
        for &(v, e) in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                parent_edge[v] = e;
                stack.push(v);
            }
        }
    }
    let mut sub = vec![0.0; n_nodes];
    for (i, d) in demand.iter().enumerate() {
        sub[i] = *d;
    }
    let mut flows = vec![0.0; edges.len()];
    for &u in order.iter().rev() {
        let e = parent_edge[u];
        if e == usize::MAX {
            continue;
        }
        let (a, b) = edges[e];
        let parent = if a == u { b } else { a };
        // The subtree of u absorbs sub[u]; it flows from parent into u.
        flows[e] = if b == u { sub[u] } else { -sub[u] };
        sub[parent] += sub[u];
    }
    flows
}

/// Minimize Σ_j c_j |s − n_j| for one branch point: exact at a neighbour when
/// the neighbour is optimal, a Weiszfeld step otherwise.
fn relax_point(s: &Point, nbrs: &[(Point, f64)]) -> Point {
    let eps = eps_geom();
    for (k, (nk, ck)) in nbrs.iter().enumerate() {
        // Subgradient test at the neighbour n_k.
        let mut pull = Point::zeros(s.dim());
        for (j, (nj, cj)) in nbrs.iter().enumerate() {
            if j == k {
                continue;
            }
            let d = nk.dist(nj);
            if d > eps {
                pull = &pull + &(&(nj - nk) * (cj / d));
            }
        }
        if pull.norm() <= *ck {
            return nk.clone();
        }
    }
    let mut num = Point::zeros(s.dim());
    let mut den = 0.0;
    for (nj, cj) in nbrs {
        let d = s.dist(nj).max(1e-12);
        num = &num + &(nj * (cj / d));
        den += cj / d;
    }
    if den > 0.0 {
        &num * (1.0 / den)
    } else {
        s.clone()
    }
}

fn descend(
    terminals: &[Point],
    edges: &[(usize, usize)],
    weights: &[f64],
    mut branch: Vec<Point>,
    opts: &SolverOptions,
) -> Vec<Point> {
    let n = terminals.len();
    let n_nodes = n + branch.len();
    let mut adj = vec![Vec::new(); n_nodes];
    for (i, &(u, v)) in edges.iter().enumerate() {
        if weights[i] > 0.0 {
            adj[u].push((v, weights[i]));
            adj[v].push((u, weights[i]));
        }
    }
    for _ in 0..opts.max_sweeps {
        let mut moved: f64 = 0.0;
        for b in 0..branch.len() {
            let node = n + b;
            if adj[node].is_empty() {
                continue;
            }
            let nbrs: Vec<(Point, f64)> = adj[node]
                .iter()
                .map(|&(v, c)| {
                    let p = if v < n { terminals[v].clone() } else { branch[v - n].clone() };
                    (p, c)
                })
                .collect();
            let next = relax_point(&branch[b], &nbrs);
            moved = moved.max(next.dist(&branch[b]));
            branch[b] = next;
        }
        if moved <= opts.move_tol {
            break;
        }
    }
    branch
}

/// Starting branch-point positions for restart `r`.
fn initial_branch(terminals: &[Point], count: usize, r: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let dim = terminals[0].dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    let mut centroid = Point::zeros(dim);
    for t in terminals {
        for (i, c) in t.coords().iter().enumerate() {
            lo[i] = lo[i].min(*c);
            hi[i] = hi[i].max(*c);
        }
        centroid = &centroid + t;
    }
    let centroid = &centroid * (1.0 / terminals.len() as f64);
    let span = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max).max(1e-6);
    (0..count)
        .map(|_| {
            if r == 0 {
                Point::new(centroid.coords().iter().map(|c| c + 1e-3 * span * rng.gen_range(-1.0..1.0)))
            } else {
                Point::new((0..dim).map(|i| rng.gen_range(lo[i]..=hi[i])))
            }
        })
        .collect()
}

fn solve_topology(
    terminals: &[Point],
    demand: &[f64],
    edges: &[(usize, usize)],
    alpha: f64,
    opts: &SolverOptions,
    index: usize,
) -> TopologySpec {
    let n = terminals.len();
    let n_branch = n.saturating_sub(2);
    let flows = tree_flows(n + n_branch, edges, demand);
    let weights: Vec<f64> = flows
        .iter()
        .map(|f| if f.abs() > WEIGHT_EPS { f.abs().powf(alpha) } else { 0.0 })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut best: Option<(f64, TopologySpec)> = None;
    for r in 0..opts.restarts.max(1) {
        let start = initial_branch(terminals, n_branch, r, &mut rng);
        let branch = descend(terminals, edges, &weights, start, opts);
        let topo = TopologySpec {
            terminals: terminals.to_vec(),
            demand: demand.to_vec(),
            branch_points: branch,
            edges: edges.to_vec(),
            edge_flow: flows.clone(),
        };
        let cost = topo.cost(alpha);
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, topo));
        }
        if n_branch == 0 {
            break;
        }
    }
    best.expect("at least one restart").1
}

fn check_marginals(mu_minus: &AtomicMeasure, mu_plus: &AtomicMeasure) -> Result<()> {
    for mu in [mu_minus, mu_plus] {
        if let Some((_, w)) = mu.atoms().iter().find(|(_, w)| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidMass(*w));
        }
    }
    let (a, b) = (mu_minus.total(), mu_plus.total());
    if (a - b).abs() > 1e-12 * a.max(b).max(1.0) {
        return Err(Error::MassMismatch { minus: a, plus: b });
    }
    if mu_minus.len() > MAX_ATOMS_PER_SIDE || mu_plus.len() > MAX_ATOMS_PER_SIDE {
        return Err(Error::TooManyAtoms {
            sources: mu_minus.len(),
            sinks: mu_plus.len(),
            cap: MAX_ATOMS_PER_SIDE,
        });
    }
    Ok(())
}

/// Optimal traffic plan between two small atomic measures, with default options.
pub fn brute_force_optimal(mu_minus: &AtomicMeasure, mu_plus: &AtomicMeasure, alpha: f64) -> Result<OptimalPlan> {
    brute_force_optimal_with(mu_minus, mu_plus, alpha, &SolverOptions::default())
}

/// Optimal traffic plan between two small atomic measures.
///
/// Mass present in both marginals at the same point stays put as constant
/// curves. The remaining net demand is connected by the cheapest tree over
/// all full Steiner topologies, each optimized over its branch points.
pub fn brute_force_optimal_with(
    mu_minus: &AtomicMeasure,
    mu_plus: &AtomicMeasure,
    alpha: f64,
    opts: &SolverOptions,
) -> Result<OptimalPlan> {
    check_alpha(alpha)?;
    check_marginals(mu_minus, mu_plus)?;

    let net = mu_plus.sub(mu_minus);
    let mut stationary = AtomicMeasure::positive();
    for (p, w) in mu_minus.atoms() {
        let common = w.min(mu_plus.weight_at(p));
        if common > 0.0 {
            stationary.add(p.clone(), common);
        }
    }
    stationary.normalize();

    let terminals: Vec<Point> = net.atoms().iter().map(|(p, _)| p.clone()).collect();
    let mut demand: Vec<f64> = net.atoms().iter().map(|(_, w)| *w).collect();
    // Rebalance rounding so the tree flows close exactly.
    if let Some(last) = demand.last_mut() {
        let drift: f64 = net.total();
        *last -= drift;
    }

    if terminals.len() < 2 {
        let plan = decompose_with_stationary(&EulerFlow::empty(), &stationary)?;
        return Ok(OptimalPlan {
            plan,
            energy: 0.0,
            topology: None,
            topologies_searched: 0,
        });
    }

    let topologies = full_topologies(terminals.len());
    let best = topologies
        .par_iter()
        .enumerate()
        .map(|(i, edges)| {
            let topo = solve_topology(&terminals, &demand, edges, alpha, opts, i);
            (topo.cost(alpha), i, topo)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .expect("at least one topology");
    let topo = best.2;
    let flow = topo.to_flow()?;
    let plan = decompose_with_stationary(&flow, &stationary)?;
    let energy = plan.alpha_energy(alpha)?;
    Ok(OptimalPlan {
        plan,
        energy,
        topology: Some(topo),
        topologies_searched: topologies.len(),
    })
}

/// Outcome of [`local_improve`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImproveReport {
    pub plan: TrafficPlan,
    /// Energy of the input followed by the energy after every accepted round.
    pub energies: Vec<f64>,
    /// Cycle removed in each accepted round.
    pub removed: Vec<LagrangianCycle>,
    pub rounds: usize,
    /// No Lagrangian cycle of strength above 1e-9 remains among moving atoms.
    pub cycle_free: bool,
}

/// Split off constant atoms, which sit still and never take part in cycles.
fn split_stationary(plan: &TrafficPlan) -> Result<(TrafficPlan, Vec<WeightedCurve>)> {
    let (moving, still): (Vec<_>, Vec<_>) = plan.atoms().iter().cloned().partition(|a| !a.curve.is_constant());
    Ok((TrafficPlan::new(moving)?, still))
}

/// One shortcut attempt at `cycle`, trying ε₀ = |y−x|/8 and a few halvings.
fn try_shortcut(moving: &TrafficPlan, cycle: &LagrangianCycle, alpha: f64) -> Option<TrafficPlan> {
    let mut eps0 = cycle.x.dist(&cycle.y) / 8.0;
    for _ in 0..4 {
        if let Ok(res) = remove_quasi_cycle(moving, &cycle.x, &cycle.y, eps0, alpha) {
            let (minus, plus) = marginals(moving);
            let mut common = AtomicMeasure::positive();
            for (p, w) in minus.atoms() {
                let c = w.min(plus.weight_at(p));
                if c > 0.0 {
                    common.add(p.clone(), c);
                }
            }
            common.normalize();
            if let Ok(plan) = decompose_with_stationary(&res.flow, &common) {
                return Some(plan);
            }
        }
        eps0 *= 0.5;
    }
    None
}

/// Repeatedly shortcut the strongest Lagrangian cycle (ties: longer |y−x|,
/// then lexicographic), rebuild a plan by path decomposition, and keep the
/// result only when the α-energy strictly drops.
pub fn local_improve(plan: &TrafficPlan, alpha: f64, max_rounds: usize) -> Result<ImproveReport> {
    check_alpha(alpha)?;
    let mut current = plan.clone();
    let mut energy = current.alpha_energy(alpha)?;
    let mut energies = vec![energy];
    let mut removed = Vec::new();
    let mut cycle_free = false;
    let mut rounds = 0;
    while rounds < max_rounds {
        let (moving, still) = split_stationary(&current)?;
        let mut cycles = find_lagrangian_cycles(&moving, 1e-9)?;
        if cycles.is_empty() {
            cycle_free = true;
            break;
        }
        cycles.sort_by(|a, b| {
            b.strength
                .total_cmp(&a.strength)
                .then_with(|| b.x.dist(&b.y).total_cmp(&a.x.dist(&a.y)))
                .then_with(|| a.x.lex_cmp(&b.x))
                .then_with(|| a.y.lex_cmp(&b.y))
        });
        let mut accepted = None;
        for cycle in &cycles {
            let Some(improved) = try_shortcut(&moving, cycle, alpha) else {
                continue;
            };
            let mut atoms = improved.into_atoms();
            atoms.extend(still.iter().cloned());
            let candidate = TrafficPlan::new(atoms)?;
            let e = candidate.alpha_energy(alpha)?;
            if e < energy - 1e-12 * energy.max(1.0) {
                accepted = Some((candidate, e, cycle.clone()));
                break;
            }
        }
        let Some((next, e, cycle)) = accepted else {
            break;
        };
        current = next;
        energy = e;
        energies.push(e);
        removed.push(cycle);
        rounds += 1;
    }
    if !cycle_free && rounds == max_rounds {
        let (moving, _) = split_stationary(&current)?;
        cycle_free = find_lagrangian_cycles(&moving, 1e-9)?.is_empty();
    }
    Ok(ImproveReport {
        plan: current,
        energies,
        removed,
        rounds,
        cycle_free,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::check_good_decomposition;

    fn p(x: f64, y: f64) -> Point {
        Point::xy(x, y)
    }

    fn measure(atoms: &[(Point, f64)]) -> AtomicMeasure {
        AtomicMeasure::from_atoms(atoms.iter().cloned(), false)
    }

    #[test]
    fn topology_counts() {
        let counts: Vec<usize> = (2..=7).map(|n| full_topologies(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 3, 15, 105, 945]);
        for t in full_topologies(5) {
            assert_eq!(t.len(), 2 * 5 - 3);
        }
    }

    #[test]
    fn tree_flows_follow_demand() {
        // Sources 0, 1 feed sink 2 through branch 3.
        let f = tree_flows(4, &[(0, 3), (1, 3), (2, 3)], &[-0.5, -0.5, 1.0]);
        assert_eq!(f, vec![0.5, 0.5, -1.0]);
    }

    #[test]
    fn single_pair_is_a_segment() {
        let r = brute_force_optimal(
            &measure(&[(p(0.0, 0.0), 1.0)]),
            &measure(&[(p(3.0, 4.0), 1.0)]),
            0.5,
        )
        .unwrap();
        assert!((r.energy - 5.0).abs() < 1e-12);
        assert_eq!(r.plan.len(), 1);
    }

    #[test]
    fn equal_marginals_cost_nothing() {
        let mu = measure(&[(p(0.0, 0.0), 0.5), (p(1.0, 0.0), 0.5)]);
        let r = brute_force_optimal(&mu, &mu, 0.5).unwrap();
        assert_eq!(r.energy, 0.0);
        assert!(r.plan.atoms().iter().all(|a| a.curve.is_constant()));
        assert!((r.plan.total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tall_y_beats_v() {
        let h = 4.0;
        let minus = measure(&[(p(-1.0, 0.0), 0.5), (p(1.0, 0.0), 0.5)]);
        let plus = measure(&[(p(0.0, h), 1.0)]);
        let r = brute_force_optimal(&minus, &plus, 0.5).unwrap();
        let v = 2.0 * 0.5f64.sqrt() * (1.0 + h * h).sqrt();
        assert!(r.energy < v - 1e-3);
        let rep = check_good_decomposition(&r.plan).unwrap();
        assert!(rep.a_holds && rep.b_holds && rep.c_holds);
    }

    #[test]
    fn rejects_bad_marginals() {
        let a = measure(&[(p(0.0, 0.0), 1.0)]);
        let b = measure(&[(p(1.0, 0.0), 0.5)]);
        assert!(matches!(brute_force_optimal(&a, &b, 0.5), Err(Error::MassMismatch { .. })));
        let many = measure(&(0..5).map(|i| (p(i as f64, 0.0), 0.2)).collect::<Vec<_>>());
        assert!(matches!(
            brute_force_optimal(&many, &a, 0.5),
            Err(Error::TooManyAtoms { .. })
        ));
    }

    #[test]
    fn head_on_improves() {
        // Two crossing routes sharing a middle stretch in opposite directions.
        let plan = TrafficPlan::from_polylines(vec![
            (0.5, vec![p(-1.0, 0.5), p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.5)]),
            (0.5, vec![p(2.0, -0.5), p(1.0, 0.0), p(0.0, 0.0), p(-1.0, -0.5)]),
        ])
        .unwrap();
        let rep = local_improve(&plan, 0.5, 10).unwrap();
        assert!(rep.rounds >= 1 && rep.cycle_free);
        assert!(rep.energies.windows(2).all(|w| w[1] < w[0]));
        let g = check_good_decomposition(&rep.plan).unwrap();
        assert!(g.a_holds && g.b_holds && g.c_holds, "{g:?}");
    }
}
