//! Slices of traffic plans by level sets of distance and affine functions,
//! with exact integration over levels.

use serde::{Deserialize, Serialize};

use crate::error::{check_alpha, Error, Result};
use crate::geometry::{closest_param, eps_geom, Point};
use crate::measure::AtomicMeasure;
use crate::plan::{build_network, alpha_energy, Network, Region, TrafficPlan};

/// A Lipschitz function used to slice plans.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SliceFunction {
    /// z ↦ |z - center|.
    Distance { center: Point },
    /// z ↦ normal · z + offset.
    Affine { normal: Point, offset: f64 },
}

impl SliceFunction {
    pub fn distance(center: Point) -> Self {
        SliceFunction::Distance { center }
    }

    pub fn affine(normal: Point, offset: f64) -> Result<Self> {
        let f = SliceFunction::Affine { normal, offset };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SliceFunction::Distance { center } if !center.is_finite() => {
                Err(Error::InvalidSliceFunction("center must be finite".into()))
            }
            SliceFunction::Affine { normal, offset } => {
                if !normal.is_finite() || !offset.is_finite() {
                    Err(Error::InvalidSliceFunction("coefficients must be finite".into()))
                } else if normal.norm() == 0.0 {
                    Err(Error::InvalidSliceFunction("normal must be nonzero".into()))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, p: &Point) -> f64 {
        match self {
            SliceFunction::Distance { center } => p.dist(center),
            SliceFunction::Affine { normal, offset } => normal.dot(p) + offset,
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            SliceFunction::Distance { .. } => 1.0,
            SliceFunction::Affine { normal, .. } => normal.norm(),
        }
    }

    /// Values of f along the segment at which the crossing structure can
    /// change: both endpoints and, for a distance function, an interior minimum.
    fn segment_critical_values(&self, a: &Point, b: &Point, out: &mut Vec<f64>) {
        out.push(self.eval(a));
        out.push(self.eval(b));
        if let SliceFunction::Distance { center } = self {
            let u = closest_param(a, b, center);
            if u > 0.0 && u < 1.0 {
                out.push(a.lerp(b, u).dist(center));
            }
        }
    }

    /// Parameter intervals of `a + u (b - a)`, `u ∈ [0,1]`, where `lo <= f <= hi`.
    pub fn level_band_intervals(&self, a: &Point, b: &Point, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        if lo > hi {
            return Vec::new();
        }
        match self {
            SliceFunction::Affine { .. } => {
                let g0 = self.eval(a);
                let g1 = self.eval(b);
                let dg = g1 - g0;
                if dg == 0.0 {
                    return if g0 >= lo && g0 <= hi { vec![(0.0, 1.0)] } else { Vec::new() };
                }
                let u_lo = (lo - g0) / dg;
                let u_hi = (hi - g0) / dg;
                let (s, e) = if u_lo <= u_hi { (u_lo, u_hi) } else { (u_hi, u_lo) };
                let (s, e) = (s.max(0.0), e.min(1.0));
                if s <= e {
                    vec![(s, e)]
                } else {
                    Vec::new()
                }
            }
            SliceFunction::Distance { center } => {
                if hi < 0.0 {
                    return Vec::new();
                }
                let Some((p1, p2)) = crate::geometry::ball_interval(a, b, center, hi) else {
                    return Vec::new();
                };
                if lo <= 0.0 {
                    return vec![(p1, p2)];
                }
                match crate::geometry::ball_interval(a, b, center, lo) {
                    None => vec![(p1, p2)],
                    Some((q1, q2)) => {
                        let mut out = Vec::new();
                        if q1 > p1 {
                            out.push((p1, q1.min(p2)));
                        }
                        if q2 < p2 {
                            out.push((q2.max(p1), p2));
                        }
                        out
                    }
                }
            }
        }
    }

    /// Transversal crossings of `{f = level}` by the open segment, as
    /// `(u, sign of the derivative)`.
    fn segment_crossings(&self, a: &Point, b: &Point, level: f64) -> Result<Vec<(f64, i8)>> {
        let eps = eps_geom();
        match self {
            SliceFunction::Affine { .. } => {
                let g0 = self.eval(a);
                let g1 = self.eval(b);
                if (g0 - level) * (g1 - level) < 0.0 {
                    let u = (level - g0) / (g1 - g0);
                    Ok(vec![(u, if g1 > g0 { 1 } else { -1 })])
                } else {
                    Ok(Vec::new())
                }
            }
            SliceFunction::Distance { center } => {
                if level < 0.0 {
                    return Ok(Vec::new());
                }
                let d = b - a;
                let w = a - center;
                let dd = d.norm2();
                let bq = w.dot(&d);
                let cq = w.norm2() - level * level;
                let u_min = (-bq / dd).clamp(0.0, 1.0);
                let h = a.lerp(b, u_min).dist(center);
                if (h - level).abs() <= eps && u_min > 0.0 && u_min < 1.0 {
                    return Err(Error::NonGenericLevel {
                        level,
                        reason: "tangential contact with the level sphere".into(),
                    });
                }
                let disc = bq * bq - dd * cq;
                if disc <= 0.0 {
                    return Ok(Vec::new());
                }
                let sq = disc.sqrt();
                let mut out = Vec::new();
                for (u, s) in [((-bq - sq) / dd, -1i8), ((-bq + sq) / dd, 1i8)] {
                    if u > 0.0 && u < 1.0 {
                        out.push((u, s));
                    }
                }
                Ok(out)
            }
        }
    }
}

/// One transversal crossing of a level set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub atom: usize,
    pub t: f64,
    pub sign: i8,
    pub point: Point,
}

/// Slice intensity ⟦P,f,ℓ⟧ and slice ⟨P,f,ℓ⟩ at one level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceResult {
    pub level: f64,
    pub intensity: AtomicMeasure,
    pub slice: AtomicMeasure,
    pub crossings: Vec<Crossing>,
}

/// Crossings of every atom with `{f = level}`.
///
/// Fails with `NonGenericLevel` when a vertex sits on the level set (which
/// also covers segments contained in it) or a segment touches it tangentially.
pub fn slice(plan: &TrafficPlan, f: &SliceFunction, level: f64) -> Result<SliceResult> {
    f.validate()?;
    let eps = eps_geom();
    let mut crossings = Vec::new();
    for (i, atom) in plan.atoms().iter().enumerate() {
        let curve = &atom.curve;
        for v in curve.vertices() {
            if (f.eval(v) - level).abs() <= eps {
                return Err(Error::NonGenericLevel {
                    level,
                    reason: format!("a vertex of atom {i} lies on the level set"),
                });
            }
        }
        let params = curve.vertex_params();
        for (k, (a, b)) in curve.segments().enumerate() {
            let len = params[k + 1] - params[k];
            for (u, sign) in f.segment_crossings(a, b, level)? {
                crossings.push(Crossing {
                    atom: i,
                    t: params[k] + u * len,
                    sign,
                    point: a.lerp(b, u),
                });
            }
        }
    }
    let mut intensity = AtomicMeasure::positive();
    let mut signed = AtomicMeasure::signed();
    for c in &crossings {
        let m = plan.atoms()[c.atom].mass;
        intensity.add(c.point.clone(), m);
        signed.add(c.point.clone(), c.sign as f64 * m);
    }
    intensity.normalize();
    signed.normalize();
    Ok(SliceResult {
        level,
        intensity,
        slice: signed,
        crossings,
    })
}

/// A maximal open level interval on which the slice structure is constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelPiece {
    pub lo: f64,
    pub hi: f64,
    /// M^α of the slice intensity anywhere inside (lo, hi).
    pub value: f64,
}

/// Sorted critical levels of f on the overlay network within `[a, b]`,
/// including `a` and `b` themselves.
pub fn critical_levels(network: &Network, f: &SliceFunction, a: f64, b: f64) -> Vec<f64> {
    let mut vals = vec![a, b];
    let vs = network.vertices();
    for e in network.edges() {
        f.segment_critical_values(&vs[e.a], &vs[e.b], &mut vals);
    }
    vals.retain(|v| *v >= a && *v <= b);
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    vals
}

/// The piecewise-constant profile ℓ ↦ M^α(⟦P,f,ℓ⟧) on `[a, b]`.
///
/// Pieces whose midpoint is not a generic level (only possible for intervals
/// of width comparable to the geometric tolerance) are omitted.
pub fn slice_mass_profile(plan: &TrafficPlan, f: &SliceFunction, a: f64, b: f64, alpha: f64) -> Result<Vec<LevelPiece>> {
    check_alpha(alpha)?;
    f.validate()?;
    if !(a < b) {
        return Err(Error::BadInterval { a, b });
    }
    if plan.is_empty() {
        return Ok(vec![LevelPiece { lo: a, hi: b, value: 0.0 }]);
    }
    let network = build_network(plan)?;
    let levels = critical_levels(&network, f, a, b);
    let mut pieces = Vec::with_capacity(levels.len());
    for w in levels.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        match slice(plan, f, mid) {
            Ok(s) => pieces.push(LevelPiece {
                lo: w[0],
                hi: w[1],
                value: s.intensity.alpha_mass(alpha),
            }),
            Err(Error::NonGenericLevel { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(pieces)
}

/// Outcome of [`check_slice_bounds`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceBoundReport {
    /// ∫_a^b M^α(⟦P,f,ℓ⟧) dℓ, integrated exactly.
    pub lhs: f64,
    /// Lip(f) E^α(P, f⁻¹([a, b])).
    pub rhs: f64,
    pub holds: bool,
    /// Midpoint-rule estimate of `lhs` from `samples` levels.
    pub sampled_lhs: f64,
    pub pieces: Vec<LevelPiece>,
}

/// Verify ∫_a^b M^α(⟦P,f,ℓ⟧) dℓ ≤ Lip(f) E^α(P, f⁻¹([a,b])).
pub fn check_slice_bounds(
    plan: &TrafficPlan,
    f: &SliceFunction,
    a: f64,
    b: f64,
    alpha: f64,
    samples: usize,
) -> Result<SliceBoundReport> {
    let pieces = slice_mass_profile(plan, f, a, b, alpha)?;
    let lhs: f64 = pieces.iter().map(|p| (p.hi - p.lo) * p.value).sum();
    let region = Region::Slab { f: f.clone(), lo: a, hi: b };
    let rhs = f.lipschitz() * alpha_energy(plan, alpha, &region)?;

    let mut sampled = 0.0;
    let mut used = 0usize;
    let h = (b - a) / samples.max(1) as f64;
    for k in 0..samples {
        let level = a + (k as f64 + 0.5) * h;
        if let Ok(s) = slice(plan, f, level) {
            sampled += s.intensity.alpha_mass(alpha);
            used += 1;
        }
    }
    let sampled_lhs = if used > 0 { sampled / used as f64 * (b - a) } else { 0.0 };

    Ok(SliceBoundReport {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-9,
        sampled_lhs,
        pieces,
    })
}
