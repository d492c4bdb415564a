//! Points, cones and arc-length parametrized polygonal curves.
//!
//! Curves are polylines parametrized by arc length, so every curve is
//! 1-Lipschitz and its stopping time equals its length. Predicates use a
//! global coordinate tolerance, see [`eps_geom`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Default coordinate tolerance for snapping and geometric predicates.
pub const DEFAULT_EPS_GEOM: f64 = 1e-9;

// 0 means "unset", i.e. DEFAULT_EPS_GEOM.
static EPS_GEOM_BITS: AtomicU64 = AtomicU64::new(0);

/// Current coordinate tolerance. Points closer than this are identified.
pub fn eps_geom() -> f64 {
    match EPS_GEOM_BITS.load(AtomicOrdering::Relaxed) {
        0 => DEFAULT_EPS_GEOM,
        bits => f64::from_bits(bits),
    }
}

/// Override the coordinate tolerance process-wide.
pub fn set_eps_geom(eps: f64) -> Result<()> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidConfig(format!("eps_geom must be positive, got {eps}")));
    }
    EPS_GEOM_BITS.store(eps.to_bits(), AtomicOrdering::Relaxed);
    Ok(())
}

/// A point (or vector) in R^d.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(SmallVec<[f64; 3]>);

impl Point {
    pub fn new(coords: impl IntoIterator<Item = f64>) -> Self {
        Point(coords.into_iter().collect())
    }

    pub fn xy(x: f64, y: f64) -> Self {
        Point(SmallVec::from_slice(&[x, y]))
    }

    pub fn zeros(dim: usize) -> Self {
        Point(SmallVec::from_elem(0.0, dim))
    }

    /// Unit vector along axis `i`.
    pub fn axis(dim: usize, i: usize) -> Self {
        let mut p = Self::zeros(dim);
        p.0[i] = 1.0;
        p
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm2(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// `self + u (other - self)`.
    pub fn lerp(&self, other: &Point, u: f64) -> Point {
        Point(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a + u * (b - a))
                .collect(),
        )
    }

    pub fn normalized(&self) -> Option<Point> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    pub fn approx_eq(&self, other: &Point) -> bool {
        self.dist(other) <= eps_geom()
    }

    /// Lexicographic order on coordinates; used for canonical orientations.
    pub fn lex_cmp(&self, other: &Point) -> Ordering {
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

impl From<&[f64]> for Point {
    fn from(c: &[f64]) -> Self {
        Point(SmallVec::from_slice(c))
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(c: [f64; N]) -> Self {
        Point(SmallVec::from_slice(&c))
    }
}

impl Sub for &Point {
    type Output = Point;
    fn sub(self, rhs: &Point) -> Point {
        Point(self.0.iter().zip(rhs.0.iter()).map(|(a, b)| a - b).collect())
    }
}

impl Add for &Point {
    type Output = Point;
    fn add(self, rhs: &Point) -> Point {
        Point(self.0.iter().zip(rhs.0.iter()).map(|(a, b)| a + b).collect())
    }
}

impl Mul<f64> for &Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point(self.0.iter().map(|a| a * k).collect())
    }
}

impl Neg for &Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point(self.0.iter().map(|a| -a).collect())
    }
}

/// Which part of a cone is meant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    TwoSided,
    Plus,
    Minus,
}

/// The cone `{y : d(y - apex, span axis) <= s |y - apex|}` intersected with the
/// closed ball of radius `radius`, optionally cut by a half-space.
#[derive(Clone, Debug, PartialEq)]
pub struct Cone {
    apex: Point,
    radius: f64,
    axis: Point,
    aperture: f64,
    side: Sidedness,
}

impl Cone {
    /// `radius` may be `f64::INFINITY`. The axis is normalized here.
    pub fn new(apex: Point, radius: f64, axis: Point, aperture: f64, side: Sidedness) -> Result<Self> {
        if apex.dim() != axis.dim() {
            return Err(Error::DimensionMismatch {
                expected: apex.dim(),
                found: axis.dim(),
            });
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidCone(format!("radius must be positive, got {radius}")));
        }
        if !(aperture > 0.0 && aperture < 1.0) {
            return Err(Error::InvalidCone(format!("aperture must lie in (0,1), got {aperture}")));
        }
        let axis = axis
            .normalized()
            .ok_or_else(|| Error::InvalidCone("axis must be a nonzero finite vector".into()))?;
        Ok(Cone {
            apex,
            radius,
            axis,
            aperture,
            side,
        })
    }

    pub fn apex(&self) -> &Point {
        &self.apex
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn axis(&self) -> &Point {
        &self.axis
    }

    pub fn aperture(&self) -> f64 {
        self.aperture
    }

    pub fn side(&self) -> Sidedness {
        self.side
    }

    pub fn contains(&self, p: &Point) -> bool {
        cone_contains(self, p)
    }
}

pub fn cone_contains(c: &Cone, p: &Point) -> bool {
    let w = p - &c.apex;
    let r2 = w.norm2();
    if r2.sqrt() > c.radius {
        return false;
    }
    let along = w.dot(&c.axis);
    let perp2 = (r2 - along * along).max(0.0);
    if perp2 > c.aperture * c.aperture * r2 {
        return false;
    }
    match c.side {
        Sidedness::TwoSided => true,
        Sidedness::Plus => along >= 0.0,
        Sidedness::Minus => along <= 0.0,
    }
}

/// A polygonal curve parametrized by arc length.
///
/// A single vertex encodes a constant curve. Consecutive vertices closer than
/// [`eps_geom`] are merged on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyCurve {
    vertices: Vec<Point>,
    cumlen: Vec<f64>,
}

impl PolyCurve {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        let first = vertices
            .first()
            .ok_or_else(|| Error::InvalidCurve("a curve needs at least one vertex".into()))?;
        let dim = first.dim();
        if dim == 0 {
            return Err(Error::InvalidCurve("zero-dimensional point".into()));
        }
        let eps = eps_geom();
        let mut kept: Vec<Point> = Vec::with_capacity(vertices.len());
        for v in vertices {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.dim(),
                });
            }
            if !v.is_finite() {
                return Err(Error::InvalidCurve(format!("non-finite vertex {v:?}")));
            }
            if kept.last().is_some_and(|last| last.dist(&v) <= eps) {
                continue;
            }
            kept.push(v);
        }
        Ok(Self::from_clean(kept))
    }

    fn from_clean(vertices: Vec<Point>) -> Self {
        let mut cumlen = Vec::with_capacity(vertices.len());
        let mut acc = 0.0;
        cumlen.push(0.0);
        for w in vertices.windows(2) {
            acc += w[0].dist(&w[1]);
            cumlen.push(acc);
        }
        PolyCurve { vertices, cumlen }
    }

    pub fn constant(p: Point) -> Self {
        Self::from_clean(vec![p])
    }

    pub fn segment(a: Point, b: Point) -> Result<Self> {
        Self::new(vec![a, b])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Arc-length parameter of each vertex.
    pub fn vertex_params(&self) -> &[f64] {
        &self.cumlen
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].dim()
    }

    pub fn length(&self) -> f64 {
        *self.cumlen.last().unwrap()
    }

    /// Stopping time; equal to the length under arc-length parametrization.
    pub fn stopping_time(&self) -> f64 {
        self.length()
    }

    pub fn is_constant(&self) -> bool {
        self.vertices.len() == 1
    }

    pub fn start(&self) -> &Point {
        &self.vertices[0]
    }

    pub fn end(&self) -> &Point {
        self.vertices.last().unwrap()
    }

    pub fn num_segments(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn segments(&self) -> impl Iterator<Item = (&Point, &Point)> + '_ {
        self.vertices.windows(2).map(|w| (&w[0], &w[1]))
    }

    /// Index of the segment containing parameter `t` (clamped).
    fn segment_at(&self, t: f64) -> usize {
        let n = self.num_segments();
        if n == 0 {
            return 0;
        }
        let idx = self.cumlen.partition_point(|&c| c <= t);
        idx.saturating_sub(1).min(n - 1)
    }

    /// γ(t), constant before 0 and after the stopping time.
    pub fn point_at(&self, t: f64) -> Point {
        if self.is_constant() || t <= 0.0 {
            return self.vertices[0].clone();
        }
        if t >= self.length() {
            return self.end().clone();
        }
        let k = self.segment_at(t);
        let seg_len = self.cumlen[k + 1] - self.cumlen[k];
        let u = if seg_len > 0.0 { (t - self.cumlen[k]) / seg_len } else { 0.0 };
        self.vertices[k].lerp(&self.vertices[k + 1], u)
    }

    /// Unit direction of segment `k`.
    pub fn segment_direction(&self, k: usize) -> Point {
        let d = &self.vertices[k + 1] - &self.vertices[k];
        let len = self.cumlen[k + 1] - self.cumlen[k];
        &d * (1.0 / len)
    }

    /// The curve traversed backwards.
    pub fn reversed(&self) -> PolyCurve {
        let mut v = self.vertices.clone();
        v.reverse();
        Self::from_clean(v)
    }

    /// γ(· + a) on [0, b - a], clipped at the stopping time.
    pub fn restrict(&self, a: f64, b: f64) -> Result<PolyCurve> {
        restrict(self, a, b)
    }

    /// Vertex list with linear interpolation inserted at arc-length `a` and `b`.
    fn sub_vertices(&self, a: f64, b: f64) -> Vec<Point> {
        let mut out = vec![self.point_at(a)];
        for (v, &c) in self.vertices.iter().zip(self.cumlen.iter()) {
            if c > a && c < b {
                out.push(v.clone());
            }
        }
        out.push(self.point_at(b));
        out
    }
}

/// Restriction of `curve` to `[a, b]`, reparametrized to start at 0.
pub fn restrict(curve: &PolyCurve, a: f64, b: f64) -> Result<PolyCurve> {
    if !(a >= 0.0 && a <= b) || a.is_nan() || b.is_nan() {
        return Err(Error::BadInterval { a, b });
    }
    let len = curve.length();
    let a = a.min(len);
    let b = b.min(len);
    if b - a <= 0.0 || curve.is_constant() {
        return Ok(PolyCurve::constant(curve.point_at(a)));
    }
    PolyCurve::new(curve.sub_vertices(a, b))
}

/// Outcome of [`proper_crossing`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingResult {
    /// Last time before `t0` at distance `r` from γ(t0), if any.
    pub t_in: Option<f64>,
    /// First time after `t0` at distance `r` from γ(t0), if any.
    pub t_out: Option<f64>,
    /// Supremum of radii at which the crossing is proper.
    pub max_radius: f64,
    pub proper: bool,
}

/// Decide whether `curve` crosses the two-sided cone of aperture `s` and radius
/// `r` centred at γ(t0), with axis γ'(t0), properly at time `t0`.
///
/// The maximal radius is exact: on each side of `t0` the curve is walked until
/// it first leaves the one-sided infinite cone, and the largest distance from
/// γ(t0) reached before that is the side's radius.
pub fn proper_crossing(curve: &PolyCurve, t0: f64, r: f64, s: f64) -> Result<CrossingResult> {
    if curve.is_constant() {
        return Err(Error::DegenerateCurve);
    }
    let len = curve.length();
    let eps = eps_geom();
    if !(t0 > 0.0 && t0 < len) {
        return Err(Error::ParameterOutOfRange { t: t0, len });
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidCone(format!("aperture must lie in (0,1), got {s}")));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidCone(format!("radius must be positive, got {r}")));
    }
    let tangent = tangent_at(curve, t0, eps)?;

    let (rho_out, hit_out) = half_crossing(curve, t0, &tangent, s, r);
    let reversed = curve.reversed();
    let (rho_in, hit_in) = half_crossing(&reversed, len - t0, &(-&tangent), s, r);
    let max_radius = rho_out.min(rho_in);
    let t_out = hit_out;
    let t_in = hit_in.map(|t| len - t);
    let proper = t_in.is_some() && t_out.is_some() && r <= max_radius;
    Ok(CrossingResult {
        t_in,
        t_out,
        max_radius,
        proper,
    })
}

/// Unit tangent at `t0`, rejecting corners.
fn tangent_at(curve: &PolyCurve, t0: f64, eps: f64) -> Result<Point> {
    let params = curve.vertex_params();
    let k = curve.segment_at(t0);
    // t0 may sit on the interior vertex k (start of segment k) or k + 1.
    for j in [k, k + 1] {
        if j > 0 && j + 1 < params.len() && (params[j] - t0).abs() <= eps {
            let d_in = curve.segment_direction(j - 1);
            let d_out = curve.segment_direction(j);
            if d_in.dist(&d_out) > 1e-9 {
                return Err(Error::VertexParameter { t: t0 });
            }
            return Ok(d_out);
        }
    }
    Ok(curve.segment_direction(k))
}

/// Walk forward from `t0`. Returns the largest distance from γ(t0) reached
/// before the curve leaves the one-sided cone `X+(γ(t0), ∞, v, s)`, and the
/// first time the distance equals `r`.
fn half_crossing(curve: &PolyCurve, t0: f64, v: &Point, s: f64, r: f64) -> (f64, Option<f64>) {
    let x0 = curve.point_at(t0);
    let params = curve.vertex_params();
    let verts = curve.vertices();
    let mut k = curve.segment_at(t0);
    let mut start = x0.clone();
    let mut start_t = t0;
    let mut rho: f64 = 0.0;
    let mut hit: Option<f64> = None;
    let mut inside_cone = true;

    while k < curve.num_segments() {
        let end = &verts[k + 1];
        let piece_len = params[k + 1] - start_t;
        if piece_len > 0.0 {
            let d = end - &start;
            let a = &start - &x0;
            if hit.is_none() {
                if let Some(u) = first_exit_from_ball(&a, &d, r) {
                    hit = Some(start_t + u * piece_len);
                }
            }
            if inside_cone {
                match cone_exit_param(&a, &d, v, s) {
                    Some(u) => {
                        let p = start.lerp(end, u);
                        rho = rho.max(p.dist(&x0));
                        inside_cone = false;
                    }
                    None => rho = rho.max(end.dist(&x0)),
                }
            }
            if !inside_cone && hit.is_some() {
                break;
            }
        }
        start = end.clone();
        start_t = params[k + 1];
        k += 1;
    }
    (rho, hit)
}

/// Smallest u in [0,1] with |a + u d| = r, given |a| < r or a on the sphere at u=0
/// not counted. Returns the exit root of the ball.
fn first_exit_from_ball(a: &Point, d: &Point, r: f64) -> Option<f64> {
    let dd = d.norm2();
    if dd == 0.0 {
        return None;
    }
    if a.norm() >= r {
        return Some(0.0);
    }
    let b = a.dot(d);
    let c = a.norm2() - r * r;
    let disc = (b * b - dd * c).max(0.0);
    let u = (-b + disc.sqrt()) / dd;
    (u <= 1.0 + 1e-12).then_some(u.clamp(0.0, 1.0))
}

/// First parameter u in [0,1] at which `a + u d` leaves the one-sided cone of
/// axis `v` and aperture `s` at the origin, or `None` if the piece stays inside.
fn cone_exit_param(a: &Point, d: &Point, v: &Point, s: f64) -> Option<f64> {
    let va = v.dot(a);
    let vd = v.dot(d);
    let aa = a.norm2();
    let ad = a.dot(d);
    let dd = d.norm2();
    let k = 1.0 - s * s;
    // c(u) = (v·w)^2 - (1 - s^2)|w|^2 >= 0 and h(u) = v·w >= 0.
    let c2 = vd * vd - k * dd;
    let c1 = 2.0 * (va * vd - k * ad);
    let c0 = va * va - k * aa;
    let inside = |u: f64| {
        let w2 = aa + 2.0 * u * ad + u * u * dd;
        let h = va + u * vd;
        let c = c0 + u * (c1 + u * c2);
        let tol = 1e-12 * w2.max(1e-300);
        h >= -1e-12 * w2.sqrt() && c >= -tol
    };
    let mut breaks = vec![0.0, 1.0];
    if vd != 0.0 {
        breaks.push(-va / vd);
    }
    breaks.extend(quadratic_roots(c2, c1, c0));
    breaks.retain(|u| (0.0..=1.0).contains(u));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    for w in breaks.windows(2) {
        if w[1] - w[0] <= 0.0 {
            continue;
        }
        if !inside(0.5 * (w[0] + w[1])) {
            return Some(w[0]);
        }
    }
    None
}

/// Real roots of `a u^2 + b u + c`, degenerate cases included.
pub(crate) fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() <= 1e-14 * scale {
        if b.abs() <= 1e-14 * scale {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    // Numerically stable pair.
    let q = -0.5 * (b + b.signum() * sq);
    let mut roots = if q != 0.0 { vec![q / a, c / q] } else { vec![-b / (2.0 * a)] };
    roots.sort_by(f64::total_cmp);
    roots
}

/// Parameters u (unsorted on the line, clipped to nothing) where the segment
/// `a + u (b - a)` meets the sphere of radius `r` about `c`.
pub(crate) fn sphere_params(a: &Point, b: &Point, c: &Point, r: f64) -> Vec<f64> {
    let d = b - a;
    let w = a - c;
    let dd = d.norm2();
    if dd == 0.0 {
        return Vec::new();
    }
    let bq = w.dot(&d);
    let cq = w.norm2() - r * r;
    let disc = bq * bq - dd * cq;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let mut out = vec![(-bq - sq) / dd, (-bq + sq) / dd];
    out.retain(|u| (0.0..=1.0).contains(u));
    out.dedup();
    out
}

/// The sub-interval of [0,1] where `a + u (b - a)` lies in the closed ball.
pub(crate) fn ball_interval(a: &Point, b: &Point, c: &Point, r: f64) -> Option<(f64, f64)> {
    let d = b - a;
    let w = a - c;
    let dd = d.norm2();
    if dd == 0.0 {
        return (w.norm() <= r).then_some((0.0, 1.0));
    }
    let bq = w.dot(&d);
    let cq = w.norm2() - r * r;
    let disc = bq * bq - dd * cq;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let lo = ((-bq - sq) / dd).max(0.0);
    let hi = ((-bq + sq) / dd).min(1.0);
    (lo <= hi).then_some((lo, hi))
}

/// Parameter of the point of the segment closest to `c`, in [0,1].
pub(crate) fn closest_param(a: &Point, b: &Point, c: &Point) -> f64 {
    let d = b - a;
    let dd = d.norm2();
    if dd == 0.0 {
        return 0.0;
    }
    ((c - a).dot(&d) / dd).clamp(0.0, 1.0)
}

pub(crate) fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let u = closest_param(a, b, p);
    a.lerp(b, u).dist(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cone(side: Sidedness, s: f64, r: f64) -> Cone {
        Cone::new(Point::xy(0.0, 0.0), r, Point::xy(1.0, 0.0), s, side).unwrap()
    }

    #[test]
    fn cone_contains_examples() {
        let c = cone(Sidedness::TwoSided, 0.5, 1.0);
        assert!(c.contains(&Point::xy(0.5, 0.0)));
        assert!(!c.contains(&Point::xy(0.0, 0.5)));
        assert!(c.contains(&Point::xy(-0.5, 0.0)));
        let plus = cone(Sidedness::Plus, 0.5, 1.0);
        assert!(!plus.contains(&Point::xy(-0.5, 0.0)));
        let minus = cone(Sidedness::Minus, 0.5, 1.0);
        assert!(minus.contains(&Point::xy(-0.5, 0.0)));
        assert!(!c.contains(&Point::xy(1.5, 0.0)));
    }

    #[test]
    fn cone_rejects_bad_parameters() {
        let o = Point::xy(0.0, 0.0);
        assert!(Cone::new(o.clone(), 1.0, Point::xy(0.0, 0.0), 0.5, Sidedness::Plus).is_err());
        assert!(Cone::new(o.clone(), 1.0, Point::xy(1.0, 0.0), 1.0, Sidedness::Plus).is_err());
        assert!(Cone::new(o.clone(), 0.0, Point::xy(1.0, 0.0), 0.5, Sidedness::Plus).is_err());
        assert!(Cone::new(o, f64::INFINITY, Point::xy(2.0, 0.0), 0.5, Sidedness::Plus).is_ok());
    }

    #[test]
    fn straight_segment_crosses_properly() {
        let c = PolyCurve::segment(Point::xy(-1.0, 0.0), Point::xy(1.0, 0.0)).unwrap();
        let res = proper_crossing(&c, 1.0, 0.5, 0.5).unwrap();
        assert!(res.proper);
        assert!((res.t_in.unwrap() - 0.5).abs() < 1e-12);
        assert!((res.t_out.unwrap() - 1.5).abs() < 1e-12);
        assert!((res.max_radius - 1.0).abs() < 1e-12);
    }

    #[test]
    fn l_shaped_curve_radius() {
        let c = PolyCurve::new(vec![Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(1.0, 1.0)]).unwrap();
        let res = proper_crossing(&c, 0.5, 0.1, 0.5).unwrap();
        // Backward leg reaches the start point at distance 0.5; forward leg
        // stays in the cone up to (1, 1/sqrt(12)), distance sqrt(1/3) > 0.5.
        assert!((res.max_radius - 0.5).abs() < 1e-12);
        assert!(proper_crossing(&c, 0.5, 0.49, 0.5).unwrap().proper);
        assert!(!proper_crossing(&c, 0.5, 0.51, 0.5).unwrap().proper);
        // From t0 = 0.9 the backward leg is longer; the forward cone exit limits.
        let res = proper_crossing(&c, 0.9, 0.05, 0.5).unwrap();
        let u = (0.1f64 * 0.1 * 0.25 / 0.75).sqrt();
        let expected = (0.01 + u * u).sqrt();
        assert!((res.max_radius - expected).abs() < 1e-12, "{res:?} vs {expected}");
    }

    #[test]
    fn crossing_errors() {
        let k = PolyCurve::constant(Point::xy(0.0, 0.0));
        assert_eq!(proper_crossing(&k, 0.0, 1.0, 0.5), Err(Error::DegenerateCurve));
        let c = PolyCurve::new(vec![Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(1.0, 1.0)]).unwrap();
        assert!(matches!(proper_crossing(&c, 1.0, 0.1, 0.5), Err(Error::VertexParameter { .. })));
        assert!(matches!(proper_crossing(&c, 2.0, 0.1, 0.5), Err(Error::ParameterOutOfRange { .. })));
        // A collinear interior vertex has a tangent.
        let straight = PolyCurve::new(vec![Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(2.0, 0.0)]).unwrap();
        assert!(proper_crossing(&straight, 1.0, 0.5, 0.5).unwrap().proper);
    }

    #[test]
    fn restrict_examples() {
        let c = PolyCurve::segment(Point::xy(0.0, 0.0), Point::xy(2.0, 0.0)).unwrap();
        let r = restrict(&c, 0.5, 1.5).unwrap();
        assert_eq!(r.vertices(), &[Point::xy(0.5, 0.0), Point::xy(1.5, 0.0)]);
        let k = restrict(&c, 0.7, 0.7).unwrap();
        assert!(k.is_constant());
        assert_eq!(k.start(), &Point::xy(0.7, 0.0));
        let clipped = restrict(&c, 1.0, 5.0).unwrap();
        assert!((clipped.length() - 1.0).abs() < 1e-15);
        assert!(matches!(restrict(&c, 1.0, 0.5), Err(Error::BadInterval { .. })));
    }

    #[test]
    fn consecutive_duplicates_are_merged() {
        let c = PolyCurve::new(vec![Point::xy(0.0, 0.0), Point::xy(0.0, 0.0), Point::xy(1.0, 0.0)]).unwrap();
        assert_eq!(c.vertices().len(), 2);
        assert!(PolyCurve::new(vec![]).is_err());
        assert!(PolyCurve::new(vec![Point::xy(0.0, 0.0), Point::new([1.0, 0.0, 0.0])]).is_err());
    }

    fn polyline() -> impl Strategy<Value = PolyCurve> {
        prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 2..7).prop_filter_map("degenerate", |pts| {
            let c = PolyCurve::new(pts.into_iter().map(|(x, y)| Point::xy(x, y)).collect()).ok()?;
            (!c.is_constant()).then_some(c)
        })
    }

    proptest! {
        #[test]
        fn arc_length_is_additive(c in polyline(), u in 0.0..1.0f64, v in 0.0..1.0f64) {
            let len = c.length();
            let (a, b) = if u <= v { (u * len, v * len) } else { (v * len, u * len) };
            let total = restrict(&c, 0.0, a).unwrap().length()
                + restrict(&c, a, b).unwrap().length()
                + restrict(&c, b, len).unwrap().length();
            prop_assert!((total - len).abs() <= 1e-9);
        }

        #[test]
        fn cone_monotone_in_aperture_and_radius(
            px in -2.0..2.0f64, py in -2.0..2.0f64,
            s1 in 0.01..0.99f64, s2 in 0.01..0.99f64,
            r1 in 0.1..3.0f64, r2 in 0.1..3.0f64,
            angle in 0.0..std::f64::consts::TAU,
        ) {
            let (s_lo, s_hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
            let (r_lo, r_hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            let axis = Point::xy(angle.cos(), angle.sin());
            let p = Point::xy(px, py);
            for side in [Sidedness::TwoSided, Sidedness::Plus, Sidedness::Minus] {
                let small = Cone::new(Point::xy(0.1, -0.2), r_lo, axis.clone(), s_lo, side).unwrap();
                let big = Cone::new(Point::xy(0.1, -0.2), r_hi, axis.clone(), s_hi, side).unwrap();
                if small.contains(&p) {
                    prop_assert!(big.contains(&p));
                }
            }
        }

        #[test]
        fn proper_crossing_monotone_below_max_radius(c in polyline(), frac in 0.05..0.95f64, s in 0.05..0.95f64) {
            let t0 = frac * c.length();
            if let Ok(res) = proper_crossing(&c, t0, 1e-3, s) {
                prop_assert!(res.max_radius > 0.0);
                for i in 1..=10 {
                    let r = res.max_radius * i as f64 / 10.5;
                    let at = proper_crossing(&c, t0, r, s).unwrap();
                    prop_assert!(at.proper, "radius {} of {}", r, res.max_radius);
                }
            }
        }
    }
}
