//! Polyhedral transport paths: induced currents, boundaries, α-masses,
//! cones over points, good-decomposition checks and path decomposition.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::arrangement::Arrangement;
use crate::error::{check_alpha, Error, Result};
use crate::geometry::{eps_geom, Point, PolyCurve};
use crate::measure::{AtomicMeasure, WEIGHT_EPS};
use crate::plan::{build_network, marginals, Network, Region, TrafficPlan, WeightedCurve};

/// Edge of an [`EulerFlow`]: `vertices[a] → vertices[b]` carrying signed weight `w`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowEdge {
    pub a: usize,
    pub b: usize,
    pub w: f64,
}

/// A weighted oriented edge set with pairwise interior-disjoint edges.
///
/// Edges are canonical: `vertices[a] < vertices[b]` lexicographically, sorted,
/// and no weight of magnitude at most [`WEIGHT_EPS`] is stored.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(into = "crate::io::FlowJson", try_from = "crate::io::FlowJson")]
pub struct EulerFlow {
    vertices: Vec<Point>,
    edges: Vec<FlowEdge>,
}

impl EulerFlow {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Overlay weighted segments `(p, q, w)` (meaning weight `w` along p → q)
    /// and sum weights on shared edges.
    pub fn from_segments<I>(segments: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Point, Point, f64)>,
    {
        let eps = eps_geom();
        let mut segs = Vec::new();
        let mut weights = Vec::new();
        for (p, q, w) in segments {
            if p.dist(&q) > eps && w != 0.0 {
                segs.push((p, q));
                weights.push(w);
            }
        }
        if segs.is_empty() {
            return Ok(Self::empty());
        }
        let arr = Arrangement::build(&segs)?;
        let mut acc = vec![0.0; arr.edges.len()];
        for (pieces, w) in arr.pieces.iter().zip(&weights) {
            for &(e, forward) in pieces {
                acc[e] += if forward { *w } else { -*w };
            }
        }
        let edges = arr.edges.iter().zip(acc).map(|(&(a, b), w)| FlowEdge { a, b, w });
        Ok(Self::compact(arr.vertices, edges))
    }

    /// Keep nonzero edges and only the vertices they use. `raw` must already
    /// be in canonical edge order.
    fn compact(vertices: Vec<Point>, raw: impl Iterator<Item = FlowEdge>) -> Self {
        let mut remap: HashMap<usize, usize> = HashMap::new();
        let mut kept_vertices = Vec::new();
        let mut edges = Vec::new();
        for e in raw {
            if e.w.abs() <= WEIGHT_EPS {
                continue;
            }
            let mut id = |v: usize| {
                *remap.entry(v).or_insert_with(|| {
                    kept_vertices.push(vertices[v].clone());
                    kept_vertices.len() - 1
                })
            };
            let (a, b) = (id(e.a), id(e.b));
            edges.push(FlowEdge { a, b, w: e.w });
        }
        EulerFlow {
            vertices: kept_vertices,
            edges,
        }
    }

    /// The flow θ⃗ carried by an overlay network.
    pub fn from_network(network: &Network) -> Self {
        let raw = network.edges().iter().map(|e| FlowEdge {
            a: e.a,
            b: e.b,
            w: e.theta_vec,
        });
        Self::compact(network.vertices().to_vec(), raw)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> &[FlowEdge] {
        &self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    /// `(a, b, w)` triples with canonical orientation.
    pub fn segments(&self) -> impl Iterator<Item = (&Point, &Point, f64)> + '_ {
        self.edges.iter().map(|e| (&self.vertices[e.a], &self.vertices[e.b], e.w))
    }

    pub fn edge_length(&self, e: &FlowEdge) -> f64 {
        self.vertices[e.a].dist(&self.vertices[e.b])
    }

    pub fn scaled(&self, k: f64) -> Self {
        let raw = self.edges.iter().map(|e| FlowEdge { w: e.w * k, ..*e });
        Self::compact(self.vertices.clone(), raw)
    }

    pub fn neg(&self) -> Self {
        self.scaled(-1.0)
    }

    /// Overlay sum.
    pub fn add(&self, other: &EulerFlow) -> Result<Self> {
        let segs = self
            .segments()
            .chain(other.segments())
            .map(|(a, b, w)| (a.clone(), b.clone(), w));
        Self::from_segments(segs)
    }

    pub fn sub(&self, other: &EulerFlow) -> Result<Self> {
        self.add(&other.neg())
    }

    /// Σ_e length · |w|^α over the part of each edge in `region`.
    pub fn alpha_mass(&self, alpha: f64, region: &Region) -> Result<f64> {
        check_alpha(alpha)?;
        Ok(self
            .segments()
            .map(|(a, b, w)| region.length_in_segment(a, b) * w.abs().powf(alpha))
            .sum())
    }

    /// Mass M(T) = Σ length · |w|.
    pub fn mass(&self) -> f64 {
        self.segments().map(|(a, b, w)| a.dist(b) * w.abs()).sum()
    }

    /// ∂T: incoming minus outgoing weight at every vertex.
    pub fn boundary(&self) -> AtomicMeasure {
        boundary(self)
    }

    /// Largest edge-weight discrepancy with `other`, after overlay.
    pub fn max_difference(&self, other: &EulerFlow) -> Result<f64> {
        Ok(self.sub(other)?.edges.iter().map(|e| e.w.abs()).fold(0.0, f64::max))
    }
}

/// The current I_γ of one curve carrying `mass`: back-and-forth traversals cancel.
pub fn induce_current(curve: &PolyCurve, mass: f64) -> Result<EulerFlow> {
    if curve.is_constant() {
        return Ok(EulerFlow::empty());
    }
    let plan = TrafficPlan::new(vec![WeightedCurve::new(curve.clone(), mass)?])?;
    induce_flow(&plan)
}

/// T_P = ∫ I_γ dP.
pub fn induce_flow(plan: &TrafficPlan) -> Result<EulerFlow> {
    if plan.is_empty() {
        return Ok(EulerFlow::empty());
    }
    Ok(EulerFlow::from_network(&build_network(plan)?))
}

/// ∂T as a signed atomic measure.
pub fn boundary(flow: &EulerFlow) -> AtomicMeasure {
    let mut acc = vec![0.0; flow.vertices.len()];
    for e in &flow.edges {
        acc[e.b] += e.w;
        acc[e.a] -= e.w;
    }
    AtomicMeasure::from_atoms(flow.vertices.iter().cloned().zip(acc), true)
}

/// M^α of a flow restricted to a region.
pub fn alpha_mass(flow: &EulerFlow, alpha: f64, region: &Region) -> Result<f64> {
    flow.alpha_mass(alpha, region)
}

/// The cone `apex ⨯⨯ S`: an edge apex → p with weight w for every atom (p, w).
///
/// Atoms at the apex itself contribute nothing. The boundary equals S when S
/// is balanced and has no atom at the apex.
pub fn cone_over(apex: &Point, s: &AtomicMeasure) -> Result<EulerFlow> {
    let total = s.total();
    if total.abs() > 1e-12 * s.mass().max(1.0) {
        return Err(Error::UnbalancedMeasure(total));
    }
    EulerFlow::from_segments(s.atoms().iter().map(|(p, w)| (apex.clone(), p.clone(), *w)))
}

/// Outcome of [`check_good_decomposition`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodDecompositionReport {
    pub a_holds: bool,
    pub b_holds: bool,
    pub c_holds: bool,
    /// ∫ M(I_γ) dP − M(T_P).
    pub b_gap: f64,
    /// ∫ M(∂I_γ) dP − M(∂T_P).
    pub c_gap: f64,
    /// Atoms that are constant or not simple.
    pub offending_atoms: Vec<usize>,
}

/// Check the three conditions of a good decomposition:
/// A every atom is a nonconstant simple curve (closed curves fail),
/// B M(T_P) = ∫ M(I_γ) dP,
/// C M(∂T_P) = ∫ M(∂I_γ) dP = 2 P(Lip₁).
pub fn check_good_decomposition(plan: &TrafficPlan) -> Result<GoodDecompositionReport> {
    if plan.is_empty() {
        return Ok(GoodDecompositionReport {
            a_holds: true,
            b_holds: true,
            c_holds: true,
            b_gap: 0.0,
            c_gap: 0.0,
            offending_atoms: Vec::new(),
        });
    }
    let network = build_network(plan)?;
    let offending_atoms: Vec<usize> = plan
        .atoms()
        .iter()
        .zip(network.walks())
        .enumerate()
        .filter(|(_, (atom, walk))| atom.curve.is_constant() || !walk.is_simple())
        .map(|(i, _)| i)
        .collect();

    let mut per_atom = 0.0;
    let mut eulerian = 0.0;
    for e in network.edges() {
        for inc in &e.incidences {
            per_atom += network.atom_mass(inc.atom) * inc.signed().unsigned_abs() as f64 * e.length;
        }
        eulerian += e.theta_vec.abs() * e.length;
    }
    let b_gap = per_atom - eulerian;

    let flow = EulerFlow::from_network(&network);
    let boundary_mass = flow.boundary().mass();
    let eps = eps_geom();
    let endpoint_mass: f64 = plan
        .atoms()
        .iter()
        .filter(|a| a.curve.start().dist(a.curve.end()) > eps)
        .map(|a| 2.0 * a.mass)
        .sum();
    let c_gap = endpoint_mass - boundary_mass;
    let total = plan.total_mass();

    let tol = |scale: f64| 1e-9 * scale.max(1.0);
    Ok(GoodDecompositionReport {
        a_holds: offending_atoms.is_empty(),
        b_holds: b_gap.abs() <= tol(per_atom),
        c_holds: c_gap.abs() <= tol(endpoint_mass) && (endpoint_mass - 2.0 * total).abs() <= tol(total),
        b_gap,
        c_gap,
        offending_atoms,
    })
}

#[derive(PartialEq)]
struct Widest(f64, usize);

impl Eq for Widest {}

impl PartialOrd for Widest {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Widest {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Directed residual graph used by [`decompose`].
struct Digraph {
    /// (tail, head, capacity)
    arcs: Vec<(usize, usize, f64)>,
    out: Vec<Vec<usize>>,
}

impl Digraph {
    fn from_flow(flow: &EulerFlow) -> Self {
        let n = flow.vertices.len();
        let mut arcs = Vec::with_capacity(flow.edges.len());
        let mut out = vec![Vec::new(); n];
        for e in &flow.edges {
            let (t, h) = if e.w > 0.0 { (e.a, e.b) } else { (e.b, e.a) };
            out[t].push(arcs.len());
            arcs.push((t, h, e.w.abs()));
        }
        Digraph { arcs, out }
    }

    fn live(&self, arc: usize) -> bool {
        self.arcs[arc].2 > WEIGHT_EPS
    }

    /// Some directed cycle through live arcs, as a list of arcs.
    fn find_cycle(&self) -> Option<Vec<usize>> {
        let n = self.out.len();
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; n];
        let mut via: Vec<Option<usize>> = vec![None; n];
        for root in 0..n {
            if state[root] != 0 {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
            state[root] = 1;
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if *next < self.out[v].len() {
                    let arc = self.out[v][*next];
                    *next += 1;
                    if !self.live(arc) {
                        continue;
                    }
                    let h = self.arcs[arc].1;
                    match state[h] {
                        0 => {
                            state[h] = 1;
                            via[h] = Some(arc);
                            stack.push((h, 0));
                        }
                        1 => {
                            let mut cycle = vec![arc];
                            let mut cur = v;
                            while cur != h {
                                let a = via[cur].expect("stack vertex has a parent arc");
                                cycle.push(a);
                                cur = self.arcs[a].0;
                            }
                            cycle.reverse();
                            return Some(cycle);
                        }
                        _ => {}
                    }
                } else {
                    state[v] = 2;
                    stack.pop();
                }
            }
        }
        None
    }

    /// Cancel directed cycles; returns the total cancelled mass × length.
    fn cancel_cycles(&mut self, vertices: &[Point]) -> f64 {
        let mut removed = 0.0;
        while let Some(cycle) = self.find_cycle() {
            let bottleneck = cycle.iter().map(|&a| self.arcs[a].2).fold(f64::INFINITY, f64::min);
            for &a in &cycle {
                let (t, h, c) = self.arcs[a];
                removed += bottleneck * vertices[t].dist(&vertices[h]);
                self.arcs[a].2 = if c - bottleneck <= WEIGHT_EPS { 0.0 } else { c - bottleneck };
            }
        }
        removed
    }

    /// Max-bottleneck path from `src` to each vertex: (width, arc into vertex).
    fn widest_from(&self, src: usize) -> (Vec<f64>, Vec<Option<usize>>) {
        let n = self.out.len();
        let mut width = vec![0.0; n];
        let mut via = vec![None; n];
        let mut done = vec![false; n];
        width[src] = f64::INFINITY;
        let mut heap = BinaryHeap::new();
        heap.push(Widest(f64::INFINITY, src));
        while let Some(Widest(wd, v)) = heap.pop() {
            if done[v] {
                continue;
            }
            done[v] = true;
            for &arc in &self.out[v] {
                if !self.live(arc) {
                    continue;
                }
                let (_, h, c) = self.arcs[arc];
                let cand = wd.min(c);
                if !done[h] && cand > width[h] {
                    width[h] = cand;
                    via[h] = Some(arc);
                    heap.push(Widest(cand, h));
                }
            }
        }
        (width, via)
    }
}

/// Decompose a flow into weighted source-to-sink paths.
///
/// Directed cycles are cancelled first, then the widest remaining
/// source-to-sink path is peeled off repeatedly. The resulting plan has
/// marginals equal to the Jordan parts of ∂T and, after cycle cancellation,
/// no two of its paths traverse an edge in opposite directions.
pub fn decompose(flow: &EulerFlow) -> Result<TrafficPlan> {
    if flow.is_empty() {
        return Ok(TrafficPlan::empty());
    }
    let mut g = Digraph::from_flow(flow);
    g.cancel_cycles(&flow.vertices);

    let n = flow.vertices.len();
    let mut excess = vec![0.0; n];
    for &(t, h, c) in &g.arcs {
        excess[t] -= c;
        excess[h] += c;
    }
    let scale = flow.edges.iter().map(|e| e.w.abs()).fold(1.0, f64::max);
    let tol = 1e-10 * scale;

    let mut atoms = Vec::new();
    loop {
        let mut best: Option<(f64, usize, usize, Vec<Option<usize>>)> = None;
        for src in 0..n {
            if -excess[src] <= tol {
                continue;
            }
            let (width, via) = g.widest_from(src);
            for sink in 0..n {
                if sink == src || excess[sink] <= tol || width[sink] <= WEIGHT_EPS {
                    continue;
                }
                let amount = width[sink].min(-excess[src]).min(excess[sink]);
                if best.as_ref().is_none_or(|b| amount > b.0 + 1e-15) {
                    best = Some((amount, src, sink, via.clone()));
                }
            }
        }
        let Some((amount, src, sink, via)) = best else {
            break;
        };
        let mut path = vec![sink];
        let mut arcs = Vec::new();
        let mut cur = sink;
        while cur != src {
            let a = via[cur].expect("reachable sink has a predecessor");
            arcs.push(a);
            cur = g.arcs[a].0;
            path.push(cur);
        }
        path.reverse();
        for a in arcs {
            let c = g.arcs[a].2 - amount;
            g.arcs[a].2 = if c <= WEIGHT_EPS { 0.0 } else { c };
        }
        excess[src] += amount;
        excess[sink] -= amount;
        let curve = PolyCurve::new(path.iter().map(|&v| flow.vertices[v].clone()).collect())?;
        atoms.push(WeightedCurve::new(curve, amount)?);
    }

    let leftover = excess.iter().map(|e| e.abs()).fold(0.0, f64::max);
    if leftover > 1e-8 * scale {
        return Err(Error::Decomposition(format!("unrouted boundary mass {leftover}")));
    }
    TrafficPlan::new(atoms)
}

/// Plan built from `flow` plus constant curves making up `stationary`, a
/// positive measure of mass that should stay put.
pub fn decompose_with_stationary(flow: &EulerFlow, stationary: &AtomicMeasure) -> Result<TrafficPlan> {
    let mut atoms = decompose(flow)?.into_atoms();
    for (p, w) in stationary.atoms() {
        if *w > WEIGHT_EPS {
            atoms.push(WeightedCurve::new(PolyCurve::constant(p.clone()), *w)?);
        }
    }
    TrafficPlan::new(atoms)
}

/// Marginal check helper: ∂T_P = μ⁺ − μ⁻ within `tol`.
pub fn boundary_matches_marginals(flow: &EulerFlow, plan: &TrafficPlan, tol: f64) -> bool {
    let (minus, plus) = marginals(plan);
    flow.boundary().approx_eq(&plus.sub(&minus), tol)
}
