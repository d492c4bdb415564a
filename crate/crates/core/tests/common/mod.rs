#![allow(dead_code)]

use brancho::{Point, TrafficPlan};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn p(x: f64, y: f64) -> Point {
    Point::xy(x, y)
}

pub fn plan(atoms: Vec<(f64, Vec<Point>)>) -> TrafficPlan {
    TrafficPlan::from_polylines(atoms).unwrap()
}

/// Two unit masses running over [0,1]×{0} in opposite directions, with legs
/// leaving the segment on different sides.
pub fn legged_head_on() -> TrafficPlan {
    plan(vec![
        (1.0, vec![p(-1.0, 0.5), p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.5)]),
        (1.0, vec![p(2.0, -0.5), p(1.0, 0.0), p(0.0, 0.0), p(-1.0, -0.5)]),
    ])
}

/// Four atoms each walking two sides of the unit square, so every side is
/// covered by two atoms and every pair of adjacent corners forms a cycle.
pub fn square_cycle() -> TrafficPlan {
    let corners = [p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)];
    let centre = p(0.5, 0.5);
    let rotate = |v: &Point, a: f64| { let (x, y) = (v.coords()[0], v.coords()[1]); p(x * a.cos() - y * a.sin(), x * a.sin() + y * a.cos()) };
    let atoms = (0..4)
        .map(|k| {
            let c0 = &corners[k];
            let out0 = (c0 - &centre).normalized().unwrap();
            let c2 = &corners[(k + 2) % 4];
            let out2 = rotate(&(c2 - &centre).normalized().unwrap(), 0.5);
            let source = c0 + &(&out0 * 0.3);
            let sink = c2 + &(&out2 * 0.3);
            (
                0.25 + 0.05 * k as f64,
                vec![source, c0.clone(), corners[(k + 1) % 4].clone(), c2.clone(), sink],
            )
        })
        .collect();
    plan(atoms)
}

/// Sources and sink of the two-to-one Y instance, all of mass 1/2 at the sources.
pub fn y_instance() -> ([Point; 2], Point) {
    ([p(-0.9, 0.1 / 3.0), p(0.8 + 1.0 / 7.0, 0.0)], p(1.0 / 9.0, 1.3))
}

pub fn random_point(rng: &mut ChaCha8Rng, half_width: f64) -> Point {
    p(rng.gen_range(-half_width..half_width), rng.gen_range(-half_width..half_width))
}

/// Polyline with 2..=max_vertices vertices in [-w, w]².
pub fn random_polyline(rng: &mut ChaCha8Rng, max_vertices: usize, w: f64) -> Vec<Point> {
    let n = rng.gen_range(2..=max_vertices);
    (0..n).map(|_| random_point(rng, w)).collect()
}

/// Lattice walk on {0,..,3}² moving to a random axis neighbour each step.
pub fn lattice_walk(rng: &mut ChaCha8Rng, steps: usize) -> Vec<Point> {
    let mut cur = (rng.gen_range(0..4i32), rng.gen_range(0..4i32));
    let mut out = vec![p(cur.0 as f64, cur.1 as f64)];
    while out.len() <= steps {
        let (dx, dy) = [(1, 0), (-1, 0), (0, 1), (0, -1)][rng.gen_range(0..4)];
        let next = (cur.0 + dx, cur.1 + dy);
        if (0..4).contains(&next.0) && (0..4).contains(&next.1) {
            cur = next;
            out.push(p(cur.0 as f64, cur.1 as f64));
        }
    }
    out
}

/// Plan mixing lattice walks (heavy overlap in both directions) and free
/// polylines (transversal crossings).
pub fn random_overlapping_plan(rng: &mut ChaCha8Rng) -> TrafficPlan {
    let n = rng.gen_range(1..=5);
    let atoms = (0..n)
        .map(|_| {
            let mass = rng.gen_range(0.1..1.0);
            let verts = if rng.gen_bool(0.7) {
                let steps = rng.gen_range(1..=5);
                lattice_walk(rng, steps)
            } else {
                random_polyline(rng, 4, 2.0).into_iter().map(|q| &q + &p(1.5, 1.5)).collect()
            };
            (mass, verts)
        })
        .collect();
    plan(atoms)
}

/// A plan with a quasi-cycle injected between two random points `x` and `y`:
/// atoms passing near x then y, atoms passing near y then x, and unrelated
/// background atoms. Every atom is a simple curve.
pub struct InjectedCycle {
    pub plan: TrafficPlan,
    pub x: Point,
    pub y: Point,
    pub eps0: f64,
}

fn jitter(rng: &mut ChaCha8Rng, c: &Point, r: f64) -> Point {
    let a = rng.gen_range(0.0..std::f64::consts::TAU);
    let s = rng.gen_range(0.0..r);
    c + &p(s * a.cos(), s * a.sin())
}

pub fn injected_cycle(rng: &mut ChaCha8Rng) -> InjectedCycle {
    loop {
        let x = random_point(rng, 1.0);
        let y = random_point(rng, 1.0);
        let d = x.dist(&y);
        if d < 0.5 {
            continue;
        }
        let eps0 = rng.gen_range(0.25..1.0) * d / 8.0;
        let mut atoms = Vec::new();
        let through = |rng: &mut ChaCha8Rng, first: &Point, second: &Point, back: bool| {
            let mut v = vec![random_point(rng, 2.0), jitter(rng, first, 0.5 * eps0), jitter(rng, second, 0.5 * eps0)];
            if back {
                v.push(jitter(rng, first, 0.5 * eps0));
            }
            v.push(random_point(rng, 2.0));
            v
        };
        for _ in 0..rng.gen_range(1..=3) {
            atoms.push((rng.gen_range(0.1..1.0), through(rng, &x, &y, false)));
        }
        for _ in 0..rng.gen_range(1..=3) {
            atoms.push((rng.gen_range(0.1..1.0), through(rng, &y, &x, false)));
        }
        if rng.gen_bool(0.3) {
            let (a, b) = if rng.gen_bool(0.5) { (&x, &y) } else { (&y, &x) };
            atoms.push((rng.gen_range(0.1..1.0), through(rng, a, b, true)));
        }
        for _ in 0..rng.gen_range(0..=2) {
            atoms.push((rng.gen_range(0.1..1.0), random_polyline(rng, 4, 2.0)));
        }
        let Ok(plan) = TrafficPlan::from_polylines(atoms) else {
            continue;
        };
        let Ok(net) = plan.network() else {
            continue;
        };
        if net.walks().iter().all(|w| w.is_simple()) {
            return InjectedCycle { plan, x, y, eps0 };
        }
    }
}
