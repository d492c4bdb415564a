//! Cancellations, Lagrangian cycles and the quasi-cycle shortcut.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_alpha, Error, Result};
use crate::flow::{cone_over, induce_flow, EulerFlow};
use crate::geometry::{ball_interval, eps_geom, Point, PolyCurve};
use crate::measure::{AtomicMeasure, WEIGHT_EPS};
use crate::plan::{
    build_network, marginals, sphere_times, truncate_outside_ball, Region, TrafficPlan, TruncateSide, WeightedCurve,
};
use crate::slicing::{slice, slice_mass_profile, SliceFunction};

/// Directional multiplicities of one overlay edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeCancellation {
    pub edge: usize,
    pub a: Point,
    pub b: Point,
    pub length: f64,
    pub theta_plus: f64,
    pub theta_minus: f64,
    pub theta_bar: f64,
}

/// Where a plan cancels itself at the Eulerian level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CancellationReport {
    /// Every overlay edge in canonical order.
    pub per_edge: Vec<EdgeCancellation>,
    /// Indices into `per_edge` of edges with θ̄ > 0.
    pub cancelling: Vec<usize>,
    /// Σ length over edges with θ̄ > 0.
    pub cancelled_length: f64,
    /// ∫ θ̄ dH¹.
    pub theta_bar_integral: f64,
    pub max_theta_bar: f64,
    /// θ̄ = 0 exactly where |θ⃗| = Θ, on every edge.
    pub equivalence_holds: bool,
}

impl CancellationReport {
    pub fn has_cancellations(&self) -> bool {
        !self.cancelling.is_empty()
    }
}

pub fn cancellation_report(plan: &TrafficPlan) -> Result<CancellationReport> {
    let network = build_network(plan)?;
    let mut per_edge = Vec::with_capacity(network.edges().len());
    let mut cancelling = Vec::new();
    let mut cancelled_length = 0.0;
    let mut theta_bar_integral = 0.0;
    let mut max_theta_bar: f64 = 0.0;
    let mut equivalence_holds = true;
    let scale = plan.total_mass().max(1.0);
    for (i, e) in network.edges().iter().enumerate() {
        let (a, b) = network.edge_endpoints(i);
        let full = (e.theta_vec.abs() - e.full_theta).abs() <= 1e-12 * scale;
        if (e.theta_bar == 0.0) != full {
            equivalence_holds = false;
        }
        if e.theta_bar > 0.0 {
            cancelling.push(i);
            cancelled_length += e.length;
            theta_bar_integral += e.theta_bar * e.length;
            max_theta_bar = max_theta_bar.max(e.theta_bar);
        }
        per_edge.push(EdgeCancellation {
            edge: i,
            a: a.clone(),
            b: b.clone(),
            length: e.length,
            theta_plus: e.theta_plus,
            theta_minus: e.theta_minus,
            theta_bar: e.theta_bar,
        });
    }
    Ok(CancellationReport {
        per_edge,
        cancelling,
        cancelled_length,
        theta_bar_integral,
        max_theta_bar,
        equivalence_holds,
    })
}

/// First time the curve is in the closed ball and last time it is.
fn ball_visit_times(curve: &PolyCurve, center: &Point, radius: f64) -> Option<(f64, f64)> {
    if curve.is_constant() {
        return (curve.start().dist(center) <= radius).then_some((0.0, 0.0));
    }
    let params = curve.vertex_params();
    let mut first = None;
    let mut last = None;
    for (k, (a, b)) in curve.segments().enumerate() {
        if let Some((lo, hi)) = ball_interval(a, b, center, radius) {
            let len = params[k + 1] - params[k];
            if first.is_none() {
                first = Some(params[k] + lo * len);
            }
            last = Some(params[k] + hi * len);
        }
    }
    first.zip(last)
}

/// γ ∈ Γ_eps(x, y): the curve meets B̄_eps(x) at some s and B̄_eps(y) at some t ≥ s.
pub fn in_gamma(curve: &PolyCurve, x: &Point, y: &Point, eps: f64) -> bool {
    let r = eps + eps_geom();
    match (ball_visit_times(curve, x, r), ball_visit_times(curve, y, r)) {
        (Some((first_x, _)), Some((_, last_y))) => first_x <= last_y,
        _ => false,
    }
}

/// P(Γ_eps(x, y)). With `eps = 0` the curve must pass through both points.
pub fn gamma_mass(plan: &TrafficPlan, x: &Point, y: &Point, eps: f64) -> f64 {
    plan.atoms()
        .iter()
        .filter(|a| in_gamma(&a.curve, x, y, eps))
        .map(|a| a.mass)
        .sum()
}

/// A pair of points visited in both orders by positive mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagrangianCycle {
    pub x: Point,
    pub y: Point,
    /// P(Γ(x, y)).
    pub forward_mass: f64,
    /// P(Γ(y, x)).
    pub backward_mass: f64,
    pub strength: f64,
}

/// Candidate pairs among network vertices and midpoints of cancelling edges
/// with both Γ-masses positive and strength at least `min_strength`, strongest
/// first, ties by lexicographic (x, y).
pub fn find_lagrangian_cycles(plan: &TrafficPlan, min_strength: f64) -> Result<Vec<LagrangianCycle>> {
    if plan.is_empty() {
        return Ok(Vec::new());
    }
    let network = build_network(plan)?;
    let mut candidates: Vec<Point> = network.vertices().to_vec();
    let mut midpoint_of: HashMap<usize, usize> = HashMap::new();
    for (i, e) in network.edges().iter().enumerate() {
        if e.theta_bar > 0.0 {
            midpoint_of.insert(i, candidates.len());
            candidates.push(network.edge_midpoint(i));
        }
    }

    // Pair masses: (u, v) with u < v by candidate id -> (P(Γ(u,v)), P(Γ(v,u))).
    let mut pairs: HashMap<(usize, usize), (f64, f64)> = HashMap::new();
    for (atom, walk) in network.walks().iter().enumerate() {
        let mass = network.atom_mass(atom);
        let mut first: HashMap<usize, f64> = HashMap::new();
        let mut last: HashMap<usize, f64> = HashMap::new();
        let mut visit = |id: usize, t: f64| {
            first.entry(id).or_insert(t);
            last.insert(id, t);
        };
        for (k, &v) in walk.vertices.iter().enumerate() {
            visit(v, walk.times[k]);
            if let Some(&(e, _)) = walk.edges.get(k) {
                if let Some(&mid) = midpoint_of.get(&e) {
                    visit(mid, 0.5 * (walk.times[k] + walk.times[k + 1]));
                }
            }
        }
        let mut ids: Vec<usize> = first.keys().copied().collect();
        ids.sort_unstable();
        for (i, &u) in ids.iter().enumerate() {
            for &v in &ids[i + 1..] {
                let fwd = first[&u] <= last[&v];
                let bwd = first[&v] <= last[&u];
                if fwd || bwd {
                    let slot = pairs.entry((u, v)).or_insert((0.0, 0.0));
                    if fwd {
                        slot.0 += mass;
                    }
                    if bwd {
                        slot.1 += mass;
                    }
                }
            }
        }
    }

    let mut out: Vec<LagrangianCycle> = pairs
        .into_iter()
        .filter_map(|((u, v), (f, b))| {
            let strength = f.min(b);
            if strength <= 0.0 || strength < min_strength {
                return None;
            }
            let (pu, pv) = (&candidates[u], &candidates[v]);
            let (x, y, fwd, bwd) = if pu.lex_cmp(pv).is_le() {
                (pu.clone(), pv.clone(), f, b)
            } else {
                (pv.clone(), pu.clone(), b, f)
            };
            Some(LagrangianCycle {
                x,
                y,
                forward_mass: fwd,
                backward_mass: bwd,
                strength,
            })
        })
        .collect();
    out.sort_by(|a, b| {
        b.strength
            .total_cmp(&a.strength)
            .then_with(|| a.x.lex_cmp(&b.x))
            .then_with(|| a.y.lex_cmp(&b.y))
    });
    Ok(out)
}

/// Membership of an atom in the four families used by the shortcut.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// In Γ_ε(x,y) only.
    XY,
    /// In Γ_ε(y,x) only.
    YX,
    /// In both, reaching the x-sphere first.
    XYX,
    /// In both, reaching the y-sphere first.
    YXY,
}

/// Everything computed by [`remove_quasi_cycle`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShortcutResult {
    /// The competitor T̄ = T̃ + x ⨯⨯ S^x + y ⨯⨯ S^y.
    pub flow: EulerFlow,
    /// The residual plan P̃ inducing T̃.
    pub residual: TrafficPlan,
    pub chosen_eps: f64,
    /// min{P(Γ_ε₀(x,y)), P(Γ_ε₀(y,x))}.
    pub m: f64,
    pub m_x: f64,
    pub m_y: f64,
    /// P(Λ(x,y)), P(Λ(y,x)), P(Λ(x,y,x)), P(Λ(y,x,y)) at the chosen radius.
    pub family_mass: [f64; 4],
    /// Family of every atom, `None` when it is left untouched.
    pub families: Vec<Option<Family>>,
    pub s_x: AtomicMeasure,
    pub s_y: AtomicMeasure,
    /// ∫ H¹(img γ) dQ₁ and ∫ H¹(img γ) dQ₂.
    pub removed_length: [f64; 2],
    pub energy_before: f64,
    pub residual_energy: f64,
    /// E^α(P, B_{2ε₀}(x)) and E^α(P, B_{2ε₀}(y)).
    pub ball_energy: [f64; 2],
    /// M^α of the slice intensities by d_x and d_y at the chosen radius.
    pub slice_mass: [f64; 2],
    /// Right-hand side of the certified bound.
    pub bound_rhs: f64,
    /// E^α(P) − α P(Lip₁)^{α−1} m |y−x| + ε (M^α(⟦P,d_x,ε⟧) + M^α(⟦P,d_y,ε⟧)).
    pub sharp_rhs: f64,
    /// M^α(T̄).
    pub achieved: f64,
    pub certificate: bool,
    /// Largest atom of ∂T̄ − (μ⁺ − μ⁻).
    pub boundary_error: f64,
}

/// Radius in [ε₀, 2ε₀] minimizing M^α(⟦P,d_x,ε⟧) + M^α(⟦P,d_y,ε⟧): the
/// midpoint of the first level piece attaining the minimum.
fn choose_radius(plan: &TrafficPlan, x: &Point, y: &Point, eps0: f64, alpha: f64) -> Result<(f64, f64)> {
    let fx = SliceFunction::distance(x.clone());
    let fy = SliceFunction::distance(y.clone());
    let px = slice_mass_profile(plan, &fx, eps0, 2.0 * eps0, alpha)?;
    let py = slice_mass_profile(plan, &fy, eps0, 2.0 * eps0, alpha)?;
    let mut cuts: Vec<f64> = px.iter().chain(py.iter()).flat_map(|p| [p.lo, p.hi]).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let lookup = |pieces: &[crate::slicing::LevelPiece], l: f64| {
        pieces.iter().find(|p| p.lo < l && l < p.hi).map(|p| p.value)
    };
    let mut best: Option<(f64, f64)> = None;
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let (Some(a), Some(b)) = (lookup(&px, mid), lookup(&py, mid)) else {
            continue;
        };
        let v = a + b;
        if best.is_none_or(|(_, bv)| v < bv) {
            best = Some((mid, v));
        }
    }
    best.ok_or_else(|| Error::NonGenericLevel {
        level: eps0,
        reason: "no generic radius in [eps0, 2 eps0]".into(),
    })
}

/// Shortcut a quasi-cycle between `x` and `y`.
///
/// The plan must consist of simple nonconstant curves and satisfy
/// `0 < eps0 <= |y - x| / 8` and `min{P(Γ_ε₀(x,y)), P(Γ_ε₀(y,x))} > 0`.
/// Returns a transport path with the same boundary as the plan and its energy
/// compared against E^α(P) − αP(Lip₁)^{α−1} m|y−x| + E^α(P,B_{2ε₀}(x)) + E^α(P,B_{2ε₀}(y)).
pub fn remove_quasi_cycle(plan: &TrafficPlan, x: &Point, y: &Point, eps0: f64, alpha: f64) -> Result<ShortcutResult> {
    check_alpha(alpha)?;
    let dist = x.dist(y);
    let limit = dist / 8.0;
    if !(eps0 > 0.0 && eps0 <= limit) {
        return Err(Error::EpsTooLarge { eps0, limit });
    }
    let network = build_network(plan)?;
    for (i, (atom, walk)) in plan.atoms().iter().zip(network.walks()).enumerate() {
        if atom.curve.is_constant() || !walk.is_simple() {
            return Err(Error::NonSimpleAtom(i));
        }
    }
    let m = gamma_mass(plan, x, y, eps0).min(gamma_mass(plan, y, x, eps0));
    if m <= 0.0 {
        return Err(Error::NoQuasiCycle);
    }

    // Radius.
    let (eps, _) = choose_radius(plan, x, y, eps0, alpha)?;
    let slice_x = slice(plan, &SliceFunction::distance(x.clone()), eps)?;
    let slice_y = slice(plan, &SliceFunction::distance(y.clone()), eps)?;
    let slice_mass = [slice_x.intensity.alpha_mass(alpha), slice_y.intensity.alpha_mass(alpha)];

    // Families and truncations.
    let families: Vec<Option<Family>> = plan
        .atoms()
        .iter()
        .map(|a| {
            let xy = in_gamma(&a.curve, x, y, eps);
            let yx = in_gamma(&a.curve, y, x, eps);
            match (xy, yx) {
                (true, false) => Some(Family::XY),
                (false, true) => Some(Family::YX),
                (true, true) => {
                    let tx = sphere_times(&a.curve, x, eps).map_or(0.0, |t| t.0);
                    let ty = sphere_times(&a.curve, y, eps).map_or(0.0, |t| t.0);
                    Some(if tx <= ty { Family::XYX } else { Family::YXY })
                }
                (false, false) => None,
            }
        })
        .collect();
    let mut family_mass = [0.0; 4];
    for (a, f) in plan.atoms().iter().zip(&families) {
        let slot = match f {
            Some(Family::XY) => 0,
            Some(Family::YX) => 1,
            Some(Family::XYX) => 2,
            Some(Family::YXY) => 3,
            None => continue,
        };
        family_mass[slot] += a.mass;
    }
    let lam_min = family_mass[0].min(family_mass[1]);
    let ratio = |den: f64| if den == 0.0 { 0.0 } else { lam_min / den };
    let m_x = ratio(family_mass[0]);
    let m_y = ratio(family_mass[1]);

    let mut residual_atoms: Vec<WeightedCurve> = Vec::new();
    let mut s_x = AtomicMeasure::signed();
    let mut s_y = AtomicMeasure::signed();
    let mut removed_length = [0.0; 2];
    for (i, (a, fam)) in plan.atoms().iter().zip(&families).enumerate() {
        let Some(fam) = *fam else {
            residual_atoms.push(a.clone());
            continue;
        };
        let curve = &a.curve;
        // (coefficient, head cut at x?, tail cut at x?, slot of removed length)
        let (coef, head_x, tail_x, slot) = match fam {
            Family::XY => (m_x, true, false, 0),
            Family::YX => (m_y, false, true, 0),
            Family::XYX => (1.0, true, true, 1),
            Family::YXY => (1.0, false, false, 1),
        };
        let centre = |at_x: bool| if at_x { x } else { y };
        let residual = a.mass * (1.0 - coef);
        if residual < -1e-12 * a.mass {
            return Err(Error::NegativeResidual { atom: i, mass: residual });
        }
        if residual > WEIGHT_EPS {
            residual_atoms.push(WeightedCurve::new(curve.clone(), residual)?);
        }
        let w = coef * a.mass;
        if w <= 0.0 {
            continue;
        }
        let head = truncate_outside_ball(curve, centre(head_x), eps, TruncateSide::Head);
        let tail = truncate_outside_ball(curve, centre(tail_x), eps, TruncateSide::Tail);
        removed_length[slot] += w * (curve.length() - head.length() - tail.length());

        // Defect measures: +w at the start of the kept tail, -w at the end of the kept head.
        let head_end = head.end().clone();
        let tail_start = tail.start().clone();
        for (at_x, pt, wt) in [(head_x, head_end, -w), (tail_x, tail_start, w)] {
            if at_x {
                s_x.add(pt, wt);
            } else {
                s_y.add(pt, wt);
            }
        }
        for piece in [head, tail] {
            if !piece.is_constant() {
                residual_atoms.push(WeightedCurve::new(piece, w)?);
            }
        }
    }
    s_x.normalize();
    s_y.normalize();

    let residual = TrafficPlan::new(residual_atoms)?;
    let t_tilde = induce_flow(&residual)?;
    let flow = t_tilde.add(&cone_over(x, &s_x)?)?.add(&cone_over(y, &s_y)?)?;

    // Boundary preservation.
    let (minus, plus) = marginals(plan);
    let boundary_error = flow.boundary().max_abs_difference(&plus.sub(&minus));
    let total = plan.total_mass();
    let tol = 1e-9 * total.max(1.0);
    if boundary_error > tol {
        return Err(Error::EstimateViolated(format!("boundary drift {boundary_error}")));
    }

    // Length removal lower bounds.
    let both = family_mass[2] + family_mass[3];
    let len_tol = 1e-9 * (dist * total).max(1.0);
    if removed_length[0] < dist * lam_min - len_tol {
        return Err(Error::EstimateViolated(format!(
            "removed length {} below |y-x| min P(Λ) = {}",
            removed_length[0],
            dist * lam_min
        )));
    }
    if removed_length[1] < dist * both - len_tol {
        return Err(Error::EstimateViolated(format!(
            "removed length {} below |y-x| P(Γ∩Γ) = {}",
            removed_length[1],
            dist * both
        )));
    }

    // Energies.
    let energy_before = network.alpha_energy(alpha, &Region::Full)?;
    let residual_energy = if residual.is_empty() {
        0.0
    } else {
        build_network(&residual)?.alpha_energy(alpha, &Region::Full)?
    };
    let gain_rate = alpha * total.powf(alpha - 1.0);
    let concavity_rhs = energy_before - gain_rate * (removed_length[0] + removed_length[1]);
    let e_tol = 1e-9 * energy_before.max(1.0);
    if residual_energy > concavity_rhs + e_tol {
        return Err(Error::EstimateViolated(format!(
            "residual energy {residual_energy} exceeds {concavity_rhs}"
        )));
    }

    let ball_energy = [
        network.alpha_energy(
            alpha,
            &Region::Ball {
                center: x.clone(),
                radius: 2.0 * eps0,
            },
        )?,
        network.alpha_energy(
            alpha,
            &Region::Ball {
                center: y.clone(),
                radius: 2.0 * eps0,
            },
        )?,
    ];
    let base = energy_before - gain_rate * m * dist;
    let bound_rhs = base + ball_energy[0] + ball_energy[1];
    let sharp_rhs = base + eps * (slice_mass[0] + slice_mass[1]);
    let achieved = flow.alpha_mass(alpha, &Region::Full)?;

    Ok(ShortcutResult {
        flow,
        residual,
        chosen_eps: eps,
        m,
        m_x,
        m_y,
        family_mass,
        families,
        s_x,
        s_y,
        removed_length,
        energy_before,
        residual_energy,
        ball_energy,
        slice_mass,
        bound_rhs,
        sharp_rhs,
        achieved,
        certificate: achieved <= bound_rhs + 1e-9,
        boundary_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point {
        Point::xy(x, y)
    }

    fn plan(atoms: Vec<(f64, Vec<Point>)>) -> TrafficPlan {
        TrafficPlan::from_polylines(atoms).unwrap()
    }

    fn head_on(m: f64) -> TrafficPlan {
        plan(vec![
            (m, vec![p(0.0, 0.0), p(1.0, 0.0)]),
            (m, vec![p(1.0, 0.0), p(0.0, 0.0)]),
        ])
    }

    fn y_fixture() -> TrafficPlan {
        plan(vec![
            (1.0, vec![p(-1.0, 0.0), p(0.0, 1.0), p(0.0, 3.0)]),
            (1.0, vec![p(1.0, 0.0), p(0.0, 1.0), p(0.0, 3.0)]),
        ])
    }

    #[test]
    fn cancellation_examples() {
        let r = cancellation_report(&head_on(0.5)).unwrap();
        assert_eq!(r.cancelling.len(), 1);
        assert_eq!(r.per_edge[0].theta_bar, 0.5);
        assert!((r.cancelled_length - 1.0).abs() < 1e-15);
        assert!(r.equivalence_holds);

        let r = cancellation_report(&y_fixture()).unwrap();
        assert!(!r.has_cancellations());

        // Up the stem, around a loop, and back down the stem.
        let pshape = plan(vec![(
            0.7,
            vec![p(0.0, 0.0), p(0.0, 2.0), p(1.0, 2.0), p(1.0, 3.0), p(0.0, 3.0), p(0.0, 2.0), p(0.0, 1.0)],
        )]);
        let r = cancellation_report(&pshape).unwrap();
        let doubled: Vec<_> = r.cancelling.iter().map(|&i| &r.per_edge[i]).collect();
        assert_eq!(doubled.len(), 1);
        assert_eq!(doubled[0].theta_bar, 0.7);
        assert!((doubled[0].length - 1.0).abs() < 1e-12);
        assert!(r.equivalence_holds);
    }

    #[test]
    fn gamma_mass_examples() {
        let (x, y) = (p(0.0, 0.0), p(1.0, 0.0));
        let one = plan(vec![(0.3, vec![p(-1.0, 0.0), p(2.0, 0.0)])]);
        assert_eq!(gamma_mass(&one, &x, &y, 0.0), 0.3);
        assert_eq!(gamma_mass(&one, &y, &x, 0.0), 0.0);
        let only_x = plan(vec![(0.3, vec![p(-1.0, 0.0), p(0.0, 0.0), p(0.0, 2.0)])]);
        assert_eq!(gamma_mass(&only_x, &x, &y, 0.0), 0.0);
        assert_eq!(gamma_mass(&one, &x, &y, 10.0), 0.3);
        assert_eq!(gamma_mass(&one, &y, &x, 10.0), 0.3);
    }

    #[test]
    fn lagrangian_cycle_examples() {
        let cycles = find_lagrangian_cycles(&head_on(0.25), 1e-9).unwrap();
        assert!(cycles
            .iter()
            .any(|c| c.x == p(0.0, 0.0) && c.y == p(1.0, 0.0) && c.strength == 0.25));
        assert!(find_lagrangian_cycles(&y_fixture(), 1e-9).unwrap().is_empty());

        let two = plan(vec![
            (0.5, vec![p(0.0, 0.0), p(1.0, 0.0)]),
            (0.5, vec![p(1.0, 0.0), p(0.0, 0.0)]),
            (0.25, vec![p(0.0, 5.0), p(1.0, 5.0)]),
            (0.25, vec![p(1.0, 5.0), p(0.0, 5.0)]),
        ]);
        let cycles = find_lagrangian_cycles(&two, 1e-9).unwrap();
        assert!(cycles.iter().any(|c| c.x == p(0.0, 0.0) && c.y == p(1.0, 0.0)));
        assert!(cycles.iter().any(|c| c.x == p(0.0, 5.0) && c.y == p(1.0, 5.0)));
        assert!(cycles.windows(2).all(|w| w[0].strength >= w[1].strength));
        assert_eq!(cycles[0].strength, 0.5);
    }

    #[test]
    fn head_on_shortcut() {
        let m = 0.5;
        let pl = head_on(m);
        let (x, y) = (p(0.0, 0.0), p(1.0, 0.0));
        let r = remove_quasi_cycle(&pl, &x, &y, 0.125, 0.5).unwrap();
        assert!(r.certificate);
        assert!(r.boundary_error < 1e-12);
        assert!(r.achieved < r.bound_rhs);
        assert!(r.chosen_eps >= 0.125 && r.chosen_eps <= 0.25);
        assert_eq!((r.m_x, r.m_y), (1.0, 1.0));
        assert!(r.s_x.total().abs() < 1e-15 && r.s_y.total().abs() < 1e-15);
    }

    #[test]
    fn shortcut_preconditions() {
        let (x, y) = (p(0.0, 0.0), p(1.0, 0.0));
        assert!(matches!(
            remove_quasi_cycle(&head_on(0.5), &x, &y, 0.2, 0.5),
            Err(Error::EpsTooLarge { .. })
        ));
        assert_eq!(
            remove_quasi_cycle(&y_fixture(), &p(-1.0, 0.0), &p(0.0, 3.0), 0.1, 0.5),
            Err(Error::NoQuasiCycle)
        );
        let looped = plan(vec![(1.0, vec![p(0.0, 0.0), p(2.0, 0.0), p(1.0, 1.0), p(1.0, -1.0)])]);
        assert_eq!(
            remove_quasi_cycle(&looped, &x, &y, 0.1, 0.5),
            Err(Error::NonSimpleAtom(0))
        );
    }
}
