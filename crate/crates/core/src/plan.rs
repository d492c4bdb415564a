//! Traffic plans on polygonal curves, their marginals, the overlay network
//! carrying all multiplicities, and the (localized) α-energy.

use serde::{Deserialize, Serialize};

use crate::arrangement::Arrangement;
use crate::error::{check_alpha, Error, Result};
use crate::geometry::{ball_interval, eps_geom, sphere_params, Point, PolyCurve};
use crate::measure::AtomicMeasure;
use crate::slicing::SliceFunction;

/// One atom of a traffic plan: a curve carrying positive mass.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedCurve {
    pub curve: PolyCurve,
    pub mass: f64,
}

impl WeightedCurve {
    pub fn new(curve: PolyCurve, mass: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidMass(mass));
        }
        Ok(WeightedCurve { curve, mass })
    }
}

/// A finite positive combination of polygonal curves.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(into = "crate::io::PlanJson", try_from = "crate::io::PlanJson")]
pub struct TrafficPlan {
    atoms: Vec<WeightedCurve>,
}

impl TrafficPlan {
    pub fn new(atoms: Vec<WeightedCurve>) -> Result<Self> {
        if let Some(first) = atoms.first() {
            let dim = first.curve.dim();
            for a in &atoms {
                if a.curve.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: a.curve.dim(),
                    });
                }
                if !(a.mass > 0.0 && a.mass.is_finite()) {
                    return Err(Error::InvalidMass(a.mass));
                }
            }
        }
        Ok(TrafficPlan { atoms })
    }

    pub fn empty() -> Self {
        TrafficPlan { atoms: Vec::new() }
    }

    /// Convenience constructor from (mass, vertices) pairs.
    pub fn from_polylines<I, V>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, V)>,
        V: IntoIterator<Item = Point>,
    {
        let atoms = atoms
            .into_iter()
            .map(|(m, vs)| WeightedCurve::new(PolyCurve::new(vs.into_iter().collect())?, m))
            .collect::<Result<Vec<_>>>()?;
        Self::new(atoms)
    }

    pub fn atoms(&self) -> &[WeightedCurve] {
        &self.atoms
    }

    pub fn into_atoms(self) -> Vec<WeightedCurve> {
        self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn dim(&self) -> Option<usize> {
        self.atoms.first().map(|a| a.curve.dim())
    }

    /// P(Lip₁).
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// ∫ T∞ dP.
    pub fn total_time(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass * a.curve.stopping_time()).sum()
    }

    /// Check every curve stays in the closed ball of radius `radius` about 0.
    pub fn check_domain(&self, radius: f64) -> Result<()> {
        for a in &self.atoms {
            for v in a.curve.vertices() {
                if v.norm() > radius + eps_geom() {
                    return Err(Error::OutsideDomain(v.coords().to_vec(), radius));
                }
            }
        }
        Ok(())
    }

    pub fn marginals(&self) -> (AtomicMeasure, AtomicMeasure) {
        marginals(self)
    }

    pub fn network(&self) -> Result<Network> {
        build_network(self)
    }

    pub fn alpha_energy(&self, alpha: f64) -> Result<f64> {
        alpha_energy(self, alpha, &Region::Full)
    }
}

/// Start-point and end-point push-forwards (μ⁻, μ⁺).
pub fn marginals(plan: &TrafficPlan) -> (AtomicMeasure, AtomicMeasure) {
    let mut minus = AtomicMeasure::positive();
    let mut plus = AtomicMeasure::positive();
    for a in plan.atoms() {
        minus.add(a.curve.start().clone(), a.mass);
        plus.add(a.curve.end().clone(), a.mass);
    }
    minus.normalize();
    plus.normalize();
    (minus, plus)
}

/// How one atom traverses one edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Incidence {
    pub atom: usize,
    /// Traversals along the canonical orientation.
    pub forward: u32,
    /// Traversals against it.
    pub backward: u32,
}

impl Incidence {
    pub fn signed(&self) -> i64 {
        self.forward as i64 - self.backward as i64
    }

    pub fn total(&self) -> u32 {
        self.forward + self.backward
    }
}

/// An edge of the overlay network with its multiplicities.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkEdge {
    /// Lexicographically smaller endpoint (canonical orientation a → b).
    pub a: usize,
    pub b: usize,
    pub length: f64,
    pub incidences: Vec<Incidence>,
    /// Mass of atoms whose image contains the edge (θ).
    pub theta: f64,
    /// Mass counted with the number of traversals (Θ).
    pub full_theta: f64,
    /// Net signed mass along the canonical orientation (θ⃗).
    pub theta_vec: f64,
    /// Mass of atoms with at least one forward traversal (θ⁺).
    pub theta_plus: f64,
    /// Mass of atoms with at least one backward traversal (θ⁻).
    pub theta_minus: f64,
    /// min(θ⁺, θ⁻).
    pub theta_bar: f64,
}

/// Walk of one atom through the network.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct AtomWalk {
    /// Visited vertex ids, starting with the start point. Empty for constant curves.
    pub vertices: Vec<usize>,
    /// Arc-length time at each visited vertex.
    pub times: Vec<f64>,
    /// Traversed (edge, forward) pairs; `edges[i]` joins `vertices[i]` and `vertices[i + 1]`.
    pub edges: Vec<(usize, bool)>,
}

impl AtomWalk {
    /// No vertex repeats, which also excludes closed curves.
    pub fn is_simple(&self) -> bool {
        let mut seen = self.vertices.clone();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }
}

/// The overlay Σ_P of all curve segments of a plan.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    vertices: Vec<Point>,
    edges: Vec<NetworkEdge>,
    walks: Vec<AtomWalk>,
    masses: Vec<f64>,
}

impl Network {
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> &[NetworkEdge] {
        &self.edges
    }

    pub fn walks(&self) -> &[AtomWalk] {
        &self.walks
    }

    pub fn atom_mass(&self, atom: usize) -> f64 {
        self.masses[atom]
    }

    pub fn edge_endpoints(&self, e: usize) -> (&Point, &Point) {
        let edge = &self.edges[e];
        (&self.vertices[edge.a], &self.vertices[edge.b])
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        let (a, b) = self.edge_endpoints(e);
        a.lerp(b, 0.5)
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    /// Σ_e |e ∩ region| θ^{α-1} Θ.
    pub fn alpha_energy(&self, alpha: f64, region: &Region) -> Result<f64> {
        check_alpha(alpha)?;
        Ok(self
            .edges
            .iter()
            .map(|e| {
                let (a, b) = (&self.vertices[e.a], &self.vertices[e.b]);
                let len = region.length_in_segment(a, b);
                if len == 0.0 {
                    0.0
                } else {
                    len * e.theta.powf(alpha - 1.0) * e.full_theta
                }
            })
            .sum())
    }
}

/// Overlay every atom's segments and tally multiplicities per edge.
pub fn build_network(plan: &TrafficPlan) -> Result<Network> {
    let mut segments = Vec::new();
    let mut owner = Vec::new();
    for (i, a) in plan.atoms().iter().enumerate() {
        for (p, q) in a.curve.segments() {
            segments.push((p.clone(), q.clone()));
            owner.push(i);
        }
    }
    let arr = Arrangement::build(&segments)?;

    let n_atoms = plan.len();
    let mut walks: Vec<AtomWalk> = vec![AtomWalk::default(); n_atoms];
    for (s, pieces) in arr.pieces.iter().enumerate() {
        let walk = &mut walks[owner[s]];
        for &(e, forward) in pieces {
            let (a, b) = arr.edges[e];
            let (from, to) = if forward { (a, b) } else { (b, a) };
            let len = arr.edge_length(e);
            if walk.vertices.is_empty() {
                walk.vertices.push(from);
                walk.times.push(0.0);
            }
            let t = walk.times.last().copied().unwrap_or(0.0) + len;
            walk.vertices.push(to);
            walk.times.push(t);
            walk.edges.push((e, forward));
        }
    }

    let mut incid: Vec<Vec<Incidence>> = vec![Vec::new(); arr.edges.len()];
    for (atom, walk) in walks.iter().enumerate() {
        for &(e, forward) in &walk.edges {
            let list = &mut incid[e];
            let slot = match list.iter_mut().position(|inc| inc.atom == atom) {
                Some(k) => &mut list[k],
                None => {
                    list.push(Incidence {
                        atom,
                        forward: 0,
                        backward: 0,
                    });
                    list.last_mut().unwrap()
                }
            };
            if forward {
                slot.forward += 1;
            } else {
                slot.backward += 1;
            }
        }
    }

    let masses: Vec<f64> = plan.atoms().iter().map(|a| a.mass).collect();
    let edges = arr
        .edges
        .iter()
        .enumerate()
        .map(|(e, &(a, b))| {
            let mut incidences = std::mem::take(&mut incid[e]);
            incidences.sort_by_key(|i| i.atom);
            let mut theta = 0.0;
            let mut full_theta = 0.0;
            let mut theta_vec = 0.0;
            let mut theta_plus = 0.0;
            let mut theta_minus = 0.0;
            for inc in &incidences {
                let m = masses[inc.atom];
                theta += m;
                full_theta += m * inc.total() as f64;
                theta_vec += m * inc.signed() as f64;
                if inc.forward > 0 {
                    theta_plus += m;
                }
                if inc.backward > 0 {
                    theta_minus += m;
                }
            }
            NetworkEdge {
                a,
                b,
                length: arr.edge_length(e),
                incidences,
                theta,
                full_theta,
                theta_vec,
                theta_plus,
                theta_minus,
                theta_bar: theta_plus.min(theta_minus),
            }
        })
        .collect();

    Ok(Network {
        vertices: arr.vertices,
        edges,
        walks,
        masses,
    })
}

/// A measurable set on which energies can be localized.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Full,
    /// Closed ball.
    Ball { center: Point, radius: f64 },
    /// `{lo <= f <= hi}`.
    Slab { f: SliceFunction, lo: f64, hi: f64 },
    Union(Vec<Region>),
}

impl Region {
    /// Sorted, disjoint parameter intervals of the segment `a + u (b - a)`,
    /// `u ∈ [0,1]`, lying in the region.
    pub fn segment_intervals(&self, a: &Point, b: &Point) -> Vec<(f64, f64)> {
        match self {
            Region::Full => vec![(0.0, 1.0)],
            Region::Ball { center, radius } => ball_interval(a, b, center, *radius).into_iter().collect(),
            Region::Slab { f, lo, hi } => f.level_band_intervals(a, b, *lo, *hi),
            Region::Union(parts) => {
                let mut all: Vec<(f64, f64)> = parts.iter().flat_map(|r| r.segment_intervals(a, b)).collect();
                all.sort_by(|x, y| x.0.total_cmp(&y.0));
                let mut merged: Vec<(f64, f64)> = Vec::new();
                for (lo, hi) in all {
                    match merged.last_mut() {
                        Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                        _ => merged.push((lo, hi)),
                    }
                }
                merged
            }
        }
    }

    pub fn length_in_segment(&self, a: &Point, b: &Point) -> f64 {
        if let Region::Full = self {
            return a.dist(b);
        }
        let frac: f64 = self.segment_intervals(a, b).iter().map(|(lo, hi)| (hi - lo).max(0.0)).sum();
        frac * a.dist(b)
    }
}

/// E^α(P, region) = Σ_e |e ∩ region| θ^{α-1} Θ over the overlay network.
pub fn alpha_energy(plan: &TrafficPlan, alpha: f64, region: &Region) -> Result<f64> {
    check_alpha(alpha)?;
    if plan.is_empty() {
        return Ok(0.0);
    }
    build_network(plan)?.alpha_energy(alpha, region)
}

/// Which end of a curve to keep in [`truncate_outside_ball`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncateSide {
    /// γ on [0, t⁻] with t⁻ the first time on the sphere.
    Head,
    /// γ on [t⁺, T∞] with t⁺ the last time on the sphere.
    Tail,
}

/// First and last arc-length times at which `curve` lies on the sphere of
/// radius `eps` about `center`; `None` if it never does.
pub fn sphere_times(curve: &PolyCurve, center: &Point, eps: f64) -> Option<(f64, f64)> {
    let params = curve.vertex_params();
    let mut first: Option<f64> = None;
    let mut last: Option<f64> = None;
    if curve.is_constant() {
        let on = (curve.start().dist(center) - eps).abs() <= eps_geom();
        return on.then_some((0.0, 0.0));
    }
    for (k, (a, b)) in curve.segments().enumerate() {
        let len = params[k + 1] - params[k];
        for u in sphere_params(a, b, center, eps) {
            let t = params[k] + u * len;
            if first.is_none() {
                first = Some(t);
            }
            last = Some(t);
        }
    }
    first.zip(last)
}

/// Keep the part of `curve` before it first meets (head) or after it last
/// leaves (tail) the sphere `∂B_eps(center)`. A curve that never meets the
/// sphere has t⁻ = t⁺ = 0: the head is constant at γ(0), the tail is the curve.
pub fn truncate_outside_ball(curve: &PolyCurve, center: &Point, eps: f64, side: TruncateSide) -> PolyCurve {
    let (t_minus, t_plus) = sphere_times(curve, center, eps).unwrap_or((0.0, 0.0));
    let len = curve.length();
    let out = match side {
        TruncateSide::Head => curve.restrict(0.0, t_minus),
        TruncateSide::Tail => curve.restrict(t_plus, len),
    };
    out.expect("sphere times lie in [0, length]")
}
