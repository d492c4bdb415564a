//! Wasserstein-1 distances between atomic measures and flat-norm bounds for
//! polyhedral flows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::EulerFlow;
use crate::geometry::Point;
use crate::measure::{AtomicMeasure, WEIGHT_EPS};

/// An optimal coupling: `(i, j, amount)` moves `amount` from atom i of the
/// first measure to atom j of the second.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub cost: f64,
    pub moves: Vec<(usize, usize, f64)>,
}

struct Arc {
    to: usize,
    cap: f64,
    cost: f64,
}

/// Min-cost flow on a small dense graph by successive shortest paths
/// (Bellman-Ford on the residual graph).
struct MinCostFlow {
    arcs: Vec<Arc>,
    out: Vec<Vec<usize>>,
}

impl MinCostFlow {
    fn new(n: usize) -> Self {
        MinCostFlow {
            arcs: Vec::new(),
            out: vec![Vec::new(); n],
        }
    }

    fn add(&mut self, from: usize, to: usize, cap: f64, cost: f64) -> usize {
        let id = self.arcs.len();
        self.out[from].push(id);
        self.arcs.push(Arc { to, cap, cost });
        self.out[to].push(id + 1);
        self.arcs.push(Arc {
            to: from,
            cap: 0.0,
            cost: -cost,
        });
        id
    }

    fn run(&mut self, s: usize, t: usize, tol: f64) -> f64 {
        let n = self.out.len();
        let mut total = 0.0;
        loop {
            let mut dist = vec![f64::INFINITY; n];
            let mut via = vec![usize::MAX; n];
            dist[s] = 0.0;
            for _ in 0..n {
                let mut changed = false;
                for u in 0..n {
                    if dist[u] == f64::INFINITY {
                        continue;
                    }
                    for &a in &self.out[u] {
                        let arc = &self.arcs[a];
                        if arc.cap > tol && dist[u] + arc.cost < dist[arc.to] - 1e-15 {
                            dist[arc.to] = dist[u] + arc.cost;
                            via[arc.to] = a;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            if dist[t] == f64::INFINITY {
                return total;
            }
            let mut push = f64::INFINITY;
            let mut v = t;
            while v != s {
                let a = via[v];
                push = push.min(self.arcs[a].cap);
                v = self.arcs[a ^ 1].to;
            }
            let mut v = t;
            while v != s {
                let a = via[v];
                self.arcs[a].cap -= push;
                self.arcs[a ^ 1].cap += push;
                v = self.arcs[a ^ 1].to;
            }
            total += push * dist[t];
        }
    }
}

/// Optimal coupling between two positive measures of equal mass, Euclidean cost.
pub fn optimal_coupling(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<Coupling> {
    let (a, b) = (mu.total(), nu.total());
    if (a - b).abs() > 1e-9 * a.max(b).max(1.0) {
        return Err(Error::MassMismatch { minus: a, plus: b });
    }
    let (n, m) = (mu.len(), nu.len());
    if n == 0 || m == 0 {
        return Ok(Coupling {
            cost: 0.0,
            moves: Vec::new(),
        });
    }
    let s = n + m;
    let t = s + 1;
    let mut g = MinCostFlow::new(n + m + 2);
    for (i, (_, w)) in mu.atoms().iter().enumerate() {
        g.add(s, i, *w, 0.0);
    }
    for (j, (_, w)) in nu.atoms().iter().enumerate() {
        g.add(n + j, t, *w, 0.0);
    }
    let mut pair_arcs = Vec::with_capacity(n * m);
    for (i, (p, _)) in mu.atoms().iter().enumerate() {
        for (j, (q, _)) in nu.atoms().iter().enumerate() {
            let id = g.add(i, n + j, f64::INFINITY, p.dist(q));
            pair_arcs.push((i, j, id));
        }
    }
    let tol = 1e-15 * a.max(1.0);
    let cost = g.run(s, t, tol);
    let moves = pair_arcs
        .into_iter()
        .filter_map(|(i, j, id)| {
            let sent = g.arcs[id ^ 1].cap;
            (sent > WEIGHT_EPS).then_some((i, j, sent))
        })
        .collect();
    Ok(Coupling { cost, moves })
}

/// W₁(μ, ν) for positive measures of equal mass.
pub fn wasserstein1(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<f64> {
    Ok(optimal_coupling(mu, nu)?.cost)
}

/// Lower and upper bounds on the flat norm of `T1 − T2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatBounds {
    /// W₁ between the positive and negative parts of ∂(T1 − T2).
    pub lower: f64,
    /// min{ M(D), M(R) + M(S) } with R a cheapest filling of ∂D by matching
    /// segments and S a cone over the closed remainder D − R.
    pub upper: f64,
}

/// Σ_e |w_e| area(apex, a_e, b_e): the mass of the cone over a closed flow.
fn cone_area(apex: &Point, flow: &EulerFlow) -> f64 {
    flow.segments()
        .map(|(a, b, w)| {
            let u = a - apex;
            let v = b - apex;
            let cross2 = (u.norm2() * v.norm2() - u.dot(&v).powi(2)).max(0.0);
            0.5 * cross2.sqrt() * w.abs()
        })
        .sum()
}

pub fn flat_distance_bounds(t1: &EulerFlow, t2: &EulerFlow) -> Result<FlatBounds> {
    let diff = t1.sub(t2)?;
    if diff.is_empty() {
        return Ok(FlatBounds { lower: 0.0, upper: 0.0 });
    }
    let (plus, minus) = diff.boundary().jordan();
    let coupling = optimal_coupling(&minus, &plus)?;
    let filler = EulerFlow::from_segments(coupling.moves.iter().map(|&(i, j, w)| {
        (minus.atoms()[i].0.clone(), plus.atoms()[j].0.clone(), w)
    }))?;
    let closed = diff.sub(&filler)?;
    let mut apexes: Vec<Point> = closed.vertices().to_vec();
    if let Some(first) = apexes.first() {
        let mut c = Point::zeros(first.dim());
        for v in &apexes {
            c = &c + v;
        }
        apexes.push(&c * (1.0 / apexes.len() as f64));
    }
    let area = apexes
        .iter()
        .map(|a| cone_area(a, &closed))
        .fold(f64::INFINITY, f64::min);
    let area = if area.is_finite() { area } else { 0.0 };
    let upper = diff.mass().min(coupling.cost + area);
    Ok(FlatBounds {
        lower: coupling.cost.min(upper),
        upper,
    })
}

/// Upper bound on the flat distance between two flows.
pub fn flat_distance_estimate(t1: &EulerFlow, t2: &EulerFlow) -> Result<f64> {
    Ok(flat_distance_bounds(t1, t2)?.upper)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point {
        Point::xy(x, y)
    }

    #[test]
    fn coupling_matches_nearest_pairs() {
        let mu = AtomicMeasure::from_atoms([(p(0.0, 0.0), 0.5), (p(10.0, 0.0), 0.5)], false);
        let nu = AtomicMeasure::from_atoms([(p(0.0, 1.0), 0.5), (p(10.0, 2.0), 0.5)], false);
        let c = optimal_coupling(&mu, &nu).unwrap();
        assert!((c.cost - 1.5).abs() < 1e-12);
        assert_eq!(c.moves.len(), 2);
    }

    #[test]
    fn split_mass() {
        let mu = AtomicMeasure::from_atoms([(p(0.0, 0.0), 1.0)], false);
        let nu = AtomicMeasure::from_atoms([(p(1.0, 0.0), 0.25), (p(0.0, 2.0), 0.75)], false);
        assert!((wasserstein1(&mu, &nu).unwrap() - 1.75).abs() < 1e-12);
    }

    #[test]
    fn flat_examples() {
        let unit = EulerFlow::from_segments([(p(0.0, 0.0), p(1.0, 0.0), 1.0)]).unwrap();
        assert_eq!(flat_distance_estimate(&unit, &unit).unwrap(), 0.0);
        assert!(flat_distance_estimate(&unit, &EulerFlow::empty()).unwrap() <= 1.0 + 1e-12);

        let h = 0.1;
        let shifted = EulerFlow::from_segments([(p(0.0, h), p(1.0, h), 1.0)]).unwrap();
        let b = flat_distance_bounds(&unit, &shifted).unwrap();
        // Two connecting sides plus the rectangle between the edges.
        assert!(b.upper <= 3.0 * h + 1e-9, "{b:?}");
        assert!((b.lower - 2.0 * h).abs() < 1e-12);
    }
}
