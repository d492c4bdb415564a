//! Overlay of a set of straight segments into pairwise interior-disjoint edges.
//!
//! Every input segment is split at the endpoints of other segments lying on
//! it and at transversal crossings; points closer than [`eps_geom`] snap to
//! the same vertex. Collinear overlapping pieces end up on the same edge.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{eps_geom, point_segment_distance, Point};

/// Snapping vertex pool backed by a uniform grid on the first two coordinates.
#[derive(Debug, Default)]
pub(crate) struct VertexPool {
    points: Vec<Point>,
    grid: HashMap<(i64, i64), Vec<usize>>,
    cell: f64,
}

impl VertexPool {
    pub(crate) fn new() -> Self {
        VertexPool {
            points: Vec::new(),
            grid: HashMap::new(),
            cell: (4.0 * eps_geom()).max(1e-7),
        }
    }

    fn key(&self, p: &Point) -> (i64, i64) {
        let c = p.coords();
        let kx = (c[0] / self.cell).floor() as i64;
        let ky = c.get(1).map_or(0, |y| (y / self.cell).floor() as i64);
        (kx, ky)
    }

    pub(crate) fn find(&self, p: &Point) -> Option<usize> {
        let eps = eps_geom();
        let (kx, ky) = self.key(p);
        let mut best: Option<(f64, usize)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.grid.get(&(kx + dx, ky + dy)) {
                    for &id in ids {
                        let d = self.points[id].dist(p);
                        if d <= eps && best.is_none_or(|(bd, _)| d < bd) {
                            best = Some((d, id));
                        }
                    }
                }
            }
        }
        best.map(|(_, id)| id)
    }

    pub(crate) fn intern(&mut self, p: &Point) -> usize {
        if let Some(id) = self.find(p) {
            return id;
        }
        let id = self.points.len();
        let key = self.key(p);
        self.points.push(p.clone());
        self.grid.entry(key).or_default().push(id);
        id
    }

    pub(crate) fn points(&self) -> &[Point] {
        &self.points
    }

    pub(crate) fn into_points(self) -> Vec<Point> {
        self.points
    }
}

/// Result of overlaying segments.
#[derive(Debug, Clone)]
pub(crate) struct Arrangement {
    pub vertices: Vec<Point>,
    /// Edges as (a, b) with `vertices[a] < vertices[b]` lexicographically,
    /// sorted by (a, b) coordinates.
    pub edges: Vec<(usize, usize)>,
    /// For each input segment, the edges it covers in traversal order and
    /// whether it runs along the canonical orientation.
    pub pieces: Vec<Vec<(usize, bool)>>,
}

struct Seg {
    a: Point,
    b: Point,
    ia: usize,
    ib: usize,
    lo: Point,
    hi: Point,
}

impl Arrangement {
    /// Overlay `segments`. Zero-length input segments (after snapping) are
    /// kept with an empty piece list.
    pub(crate) fn build(segments: &[(Point, Point)]) -> Result<Self> {
        Self::build_with_pool(segments, VertexPool::new())
    }

    /// Overlay using a pre-seeded pool (extra isolated vertices keep their ids).
    pub(crate) fn build_with_pool(segments: &[(Point, Point)], mut pool: VertexPool) -> Result<Self> {
        let eps = eps_geom();
        let segs: Vec<Seg> = segments
            .iter()
            .map(|(a, b)| {
                let ia = pool.intern(a);
                let ib = pool.intern(b);
                let lo = Point::new(a.coords().iter().zip(b.coords()).map(|(x, y)| x.min(*y) - eps));
                let hi = Point::new(a.coords().iter().zip(b.coords()).map(|(x, y)| x.max(*y) + eps));
                Seg {
                    a: a.clone(),
                    b: b.clone(),
                    ia,
                    ib,
                    lo,
                    hi,
                }
            })
            .collect();

        let mut splits: Vec<Vec<(f64, usize)>> = segs
            .iter()
            .map(|s| vec![(0.0, s.ia), (1.0, s.ib)])
            .collect();

        // Sweep over the first coordinate to prune pairs.
        let mut order: Vec<usize> = (0..segs.len()).collect();
        order.sort_by(|&i, &j| segs[i].lo.coords()[0].total_cmp(&segs[j].lo.coords()[0]));
        for (oi, &i) in order.iter().enumerate() {
            if segs[i].ia == segs[i].ib {
                continue;
            }
            for &j in &order[oi + 1..] {
                if segs[j].lo.coords()[0] > segs[i].hi.coords()[0] {
                    break;
                }
                if segs[j].ia == segs[j].ib || !boxes_overlap(&segs[i], &segs[j]) {
                    continue;
                }
                intersect_pair(&segs, i, j, &mut pool, &mut splits, eps);
            }
        }

        let vertices = pool.into_points();
        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        let mut raw_pieces: Vec<Vec<(usize, bool)>> = Vec::with_capacity(segs.len());
        for (s, sp) in segs.iter().zip(splits.iter_mut()) {
            let mut pieces = Vec::new();
            if s.ia != s.ib {
                sp.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
                let mut ids: Vec<usize> = Vec::with_capacity(sp.len());
                for &(_, id) in sp.iter() {
                    if ids.last() != Some(&id) {
                        ids.push(id);
                    }
                }
                for w in ids.windows(2) {
                    let (u, v) = (w[0], w[1]);
                    if vertices[u].dist(&vertices[v]) <= eps {
                        return Err(Error::OverlayDegeneracy);
                    }
                    let forward = vertices[u].lex_cmp(&vertices[v]) == Ordering::Less;
                    let key = if forward { (u, v) } else { (v, u) };
                    let next = edges.len();
                    let e = *edge_ids.entry(key).or_insert_with(|| {
                        edges.push(key);
                        next
                    });
                    pieces.push((e, forward));
                }
            }
            raw_pieces.push(pieces);
        }

        // Canonical edge order.
        let mut perm: Vec<usize> = (0..edges.len()).collect();
        perm.sort_by(|&x, &y| {
            let (a1, b1) = edges[x];
            let (a2, b2) = edges[y];
            vertices[a1]
                .lex_cmp(&vertices[a2])
                .then_with(|| vertices[b1].lex_cmp(&vertices[b2]))
        });
        let mut rank = vec![0usize; edges.len()];
        for (new, &old) in perm.iter().enumerate() {
            rank[old] = new;
        }
        let sorted_edges = perm.iter().map(|&old| edges[old]).collect();
        let pieces = raw_pieces
            .into_iter()
            .map(|p| p.into_iter().map(|(e, f)| (rank[e], f)).collect())
            .collect();
        Ok(Arrangement {
            vertices,
            edges: sorted_edges,
            pieces,
        })
    }

    pub(crate) fn edge_length(&self, e: usize) -> f64 {
        let (a, b) = self.edges[e];
        self.vertices[a].dist(&self.vertices[b])
    }
}

fn boxes_overlap(s: &Seg, t: &Seg) -> bool {
    s.lo.coords()
        .iter()
        .zip(s.hi.coords())
        .zip(t.lo.coords().iter().zip(t.hi.coords()))
        .all(|((l1, h1), (l2, h2))| l1 <= h2 && l2 <= h1)
}

/// Parameter of the projection of `p` on the segment, unclamped.
fn project(a: &Point, b: &Point, p: &Point) -> f64 {
    let d = b - a;
    (p - a).dot(&d) / d.norm2()
}

fn intersect_pair(
    segs: &[Seg],
    i: usize,
    j: usize,
    pool: &mut VertexPool,
    splits: &mut [Vec<(f64, usize)>],
    eps: f64,
) {
    let (s, t) = (&segs[i], &segs[j]);
    let mut touched = false;
    // Endpoints of one segment lying on the other.
    for (host, host_idx, guest) in [(s, i, t), (t, j, s)] {
        for (p, pid) in [(&guest.a, guest.ia), (&guest.b, guest.ib)] {
            if pid == host.ia || pid == host.ib {
                touched = true;
                continue;
            }
            if point_segment_distance(p, &host.a, &host.b) <= eps {
                let u = project(&host.a, &host.b, p).clamp(0.0, 1.0);
                splits[host_idx].push((u, pid));
                touched = true;
            }
        }
    }
    // Transversal crossing in the interior of both.
    let d1 = &s.b - &s.a;
    let d2 = &t.b - &t.a;
    let r = &s.a - &t.a;
    let a11 = d1.norm2();
    let a22 = d2.norm2();
    let a12 = d1.dot(&d2);
    let det = a11 * a22 - a12 * a12;
    if det <= 1e-14 * a11 * a22 {
        return;
    }
    let b1 = -d1.dot(&r);
    let b2 = d2.dot(&r);
    let u = (a22 * b1 + a12 * b2) / det;
    let v = (a12 * b1 + a11 * b2) / det;
    let (len1, len2) = (a11.sqrt(), a22.sqrt());
    if u * len1 < -eps || (1.0 - u) * len1 < -eps || v * len2 < -eps || (1.0 - v) * len2 < -eps {
        return;
    }
    let p = s.a.lerp(&s.b, u);
    let q = t.a.lerp(&t.b, v);
    if p.dist(&q) > eps {
        return;
    }
    let mid = p.lerp(&q, 0.5);
    if touched
        && [&s.a, &s.b, &t.a, &t.b]
            .iter()
            .any(|e| e.dist(&mid) <= eps)
    {
        return;
    }
    let id = pool.intern(&mid);
    let ps = pool.points();
    let u = project(&s.a, &s.b, &ps[id]).clamp(0.0, 1.0);
    let v = project(&t.a, &t.b, &ps[id]).clamp(0.0, 1.0);
    splits[i].push((u, id));
    splits[j].push((v, id));
}
