//! Euclidean minimum spanning tree, its rotation system, and the bounded
//! faces of the planar graph formed by the tree plus the convex hull.
//!
//! Faces are traced with interior on the left: arriving at `v` from `u`, the
//! walk leaves along the neighbor that precedes `u` in the counterclockwise
//! rotation at `v`. Dangling subtrees inside a face are traversed out and
//! back, so a slit edge shows up twice in the walk and a slit tip has a
//! corner angle of 2π.

use std::collections::HashSet;

use crate::geom::{ccw_angle, convex_hull, orient, polygon_area, Point};
use crate::pointproc::PointSample;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

impl Edge {
    pub fn other(&self, v: usize) -> usize {
        if v == self.a {
            self.b
        } else {
            self.a
        }
    }

    /// Endpoints with the smaller index first.
    pub fn key(&self) -> (usize, usize) {
        (self.a.min(self.b), self.a.max(self.b))
    }
}

#[derive(Debug, Clone)]
pub struct Forest {
    pub vertex_count: usize,
    pub edges: Vec<Edge>,
    /// Incident edge ids per vertex, sorted counterclockwise by direction.
    pub rotation: Vec<Vec<usize>>,
}

impl Forest {
    pub fn degree(&self, v: usize) -> usize {
        self.rotation[v].len()
    }

    pub fn edge_set(&self) -> HashSet<(usize, usize)> {
        self.edges.iter().map(Edge::key).collect()
    }

    pub fn shortest_edge(&self) -> Option<f64> {
        self.edges.iter().map(|e| e.length).min_by(f64::total_cmp)
    }
}

/// O(n²) Prim. Ties between equal lengths resolve toward the smaller index,
/// but general-position input has none.
pub fn build_mst(sample: &PointSample) -> Result<Forest> {
    let pts = &sample.points;
    let n = pts.len();
    if n < 2 {
        return Err(Error::Parameter(format!(
            "spanning tree needs at least 2 points, got {n}"
        )));
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut cur = 0;
    in_tree[0] = true;
    for _ in 1..n {
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            let d = (pts[v] - pts[cur]).norm();
            if d < best[v] {
                best[v] = d;
                parent[v] = cur;
            }
        }
        let mut next = usize::MAX;
        for v in 0..n {
            if !in_tree[v] && (next == usize::MAX || best[v] < best[next]) {
                next = v;
            }
        }
        if best[next] == 0.0 {
            return Err(Error::Degeneracy(format!(
                "points {} and {} coincide",
                parent[next], next
            )));
        }
        in_tree[next] = true;
        edges.push(Edge {
            a: parent[next],
            b: next,
            length: best[next],
        });
        cur = next;
    }
    Ok(forest_from_edges(pts, edges))
}

/// Wraps an arbitrary edge list with its rotation system.
pub fn forest_from_edges(pts: &[Point], edges: Vec<Edge>) -> Forest {
    let n = pts.len();
    let mut rotation = vec![Vec::new(); n];
    for (id, e) in edges.iter().enumerate() {
        rotation[e.a].push(id);
        rotation[e.b].push(id);
    }
    for (v, list) in rotation.iter_mut().enumerate() {
        list.sort_by(|&x, &y| {
            let dx = pts[edges[x].other(v)] - pts[v];
            let dy = pts[edges[y].other(v)] - pts[v];
            dx.arg().total_cmp(&dy.arg())
        });
    }
    Forest {
        vertex_count: n,
        edges,
        rotation,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimaxReport {
    pub holds: bool,
    /// First tree edge whose endpoints are joined by strictly shorter edges,
    /// or a structural defect reported as the offending pair.
    pub violation: Option<(usize, usize)>,
}

/// Checks the minimax characterization: every tree edge `(x, y)` is such
/// that no `x`–`y` path in the complete graph uses only strictly shorter
/// edges. Also checks the edge set is a spanning tree.
pub fn verify_minimax(sample: &PointSample, forest: &Forest) -> MinimaxReport {
    let pts = &sample.points;
    let n = pts.len();
    let fail = |pair| MinimaxReport {
        holds: false,
        violation: Some(pair),
    };
    if forest.edges.len() + 1 != n {
        return fail((n, forest.edges.len()));
    }
    let mut uf = UnionFind::new(n);
    for e in &forest.edges {
        if !uf.union(e.a, e.b) {
            return fail(e.key());
        }
    }

    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            pairs.push(((pts[i] - pts[j]).norm(), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut tree: Vec<&Edge> = forest.edges.iter().collect();
    tree.sort_by(|a, b| a.length.total_cmp(&b.length));

    // sweep by length; a tree edge is checked against the components formed
    // by all strictly shorter pairs
    let mut uf = UnionFind::new(n);
    let mut k = 0;
    for e in tree {
        let len = (pts[e.a] - pts[e.b]).norm();
        while k < pairs.len() && pairs[k].0 < len {
            uf.union(pairs[k].1, pairs[k].2);
            k += 1;
        }
        if uf.find(e.a) == uf.find(e.b) {
            return fail(e.key());
        }
    }
    MinimaxReport {
        holds: true,
        violation: None,
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    /// Index into `Forest::edges`.
    Tree(usize),
    /// Convex hull edge that is not a tree edge.
    Hull,
}

/// One corner of a face walk: the walk arrives at `vertex` from `prev` and
/// leaves toward `next`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkStep {
    pub vertex: usize,
    pub prev: usize,
    pub next: usize,
    pub incoming: EdgeKind,
    pub outgoing: EdgeKind,
}

#[derive(Debug, Clone)]
pub struct Face {
    pub id: usize,
    pub steps: Vec<WalkStep>,
    /// Interior angle at each step, in `(0, 2π]`.
    pub corner_angles: Vec<f64>,
    pub area: f64,
    /// Vertex coordinates along the walk.
    pub polygon: Vec<Point>,
}

impl Face {
    pub fn corner_count(&self) -> usize {
        self.steps.len()
    }

    /// Steps whose outgoing edge lies on the convex hull.
    pub fn hull_steps(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps
            .iter()
            .enumerate()
            .filter(|(_, s)| s.outgoing == EdgeKind::Hull)
            .map(|(i, _)| i)
    }
}

/// Bounded faces of tree ∪ hull, each traced counterclockwise.
pub fn extract_faces(sample: &PointSample, forest: &Forest) -> Result<Vec<Face>> {
    let pts = &sample.points;
    let n = pts.len();
    if n < 3 {
        return Err(Error::Degeneracy(format!(
            "need at least 3 points for a face, got {n}"
        )));
    }
    let hull = convex_hull(pts);
    if hull.len() < 3 {
        return Err(Error::Degeneracy("all points are collinear".into()));
    }
    let tree_keys = forest.edge_set();

    // neighbors with the edge kind, sorted counterclockwise
    let mut adj: Vec<Vec<(usize, EdgeKind)>> = vec![Vec::new(); n];
    for (id, e) in forest.edges.iter().enumerate() {
        adj[e.a].push((e.b, EdgeKind::Tree(id)));
        adj[e.b].push((e.a, EdgeKind::Tree(id)));
    }
    for k in 0..hull.len() {
        let (a, b) = (hull[k], hull[(k + 1) % hull.len()]);
        if !tree_keys.contains(&(a.min(b), a.max(b))) {
            adj[a].push((b, EdgeKind::Hull));
            adj[b].push((a, EdgeKind::Hull));
        }
    }
    for (v, list) in adj.iter_mut().enumerate() {
        list.sort_by(|x, y| {
            (pts[x.0] - pts[v])
                .arg()
                .total_cmp(&(pts[y.0] - pts[v]).arg())
        });
    }
    let position = |v: usize, u: usize| adj[v].iter().position(|&(w, _)| w == u).unwrap();

    let mut visited: Vec<Vec<bool>> = adj.iter().map(|l| vec![false; l.len()]).collect();
    let mut faces = Vec::new();
    for start in 0..n {
        for slot in 0..adj[start].len() {
            if visited[start][slot] {
                continue;
            }
            // trace the face to the left of half-edge start -> adj[start][slot]
            let mut steps = Vec::new();
            let (mut u, mut k) = (start, slot);
            loop {
                visited[u][k] = true;
                let (v, kind) = adj[u][k];
                let back = position(v, u);
                let deg = adj[v].len();
                let k_next = (back + deg - 1) % deg;
                let (w, out_kind) = adj[v][k_next];
                steps.push(WalkStep {
                    vertex: v,
                    prev: u,
                    next: w,
                    incoming: kind,
                    outgoing: out_kind,
                });
                u = v;
                k = k_next;
                if u == start && k == slot {
                    break;
                }
            }
            let polygon: Vec<Point> = steps.iter().map(|s| pts[s.vertex]).collect();
            let area = polygon_area(&polygon);
            if area <= 0.0 {
                continue; // the outer face
            }
            // rotate so the walk starts at a corner leaving along the hull
            if let Some(r) = steps.iter().position(|s| s.outgoing == EdgeKind::Hull) {
                steps.rotate_left(r);
            }
            let polygon: Vec<Point> = steps.iter().map(|s| pts[s.vertex]).collect();
            let corner_angles = steps
                .iter()
                .map(|s| ccw_angle(pts[s.next] - pts[s.vertex], pts[s.prev] - pts[s.vertex]))
                .collect();
            faces.push(Face {
                id: 0,
                steps,
                corner_angles,
                area,
                polygon,
            });
        }
    }
    // deterministic numbering, independent of tracing order
    faces.sort_by_key(|f| {
        let s = &f.steps[0];
        (s.vertex, s.next)
    });
    for (i, f) in faces.iter_mut().enumerate() {
        f.id = i;
    }
    Ok(faces)
}

/// Area of the convex hull of the sample.
pub fn hull_area(sample: &PointSample) -> f64 {
    let hull = convex_hull(&sample.points);
    let poly: Vec<Point> = hull.iter().map(|&i| sample.points[i]).collect();
    polygon_area(&poly)
}

/// Whether vertex `v` lies on the convex hull boundary.
pub fn hull_vertices(sample: &PointSample) -> Vec<bool> {
    let mut on = vec![false; sample.len()];
    for i in convex_hull(&sample.points) {
        on[i] = true;
    }
    on
}

/// Per vertex, the `(face id, angle)` sectors it contributes to faces.
pub fn sector_angles(vertex_count: usize, faces: &[Face]) -> Vec<Vec<(usize, f64)>> {
    let mut out = vec![Vec::new(); vertex_count];
    for f in faces {
        for (s, &a) in f.steps.iter().zip(&f.corner_angles) {
            out[s.vertex].push((f.id, a));
        }
    }
    out
}

/// Interior angle of the hull at each hull vertex (0 for interior vertices).
pub fn hull_angles(sample: &PointSample) -> Vec<f64> {
    let pts = &sample.points;
    let hull = convex_hull(pts);
    let mut out = vec![0.0; pts.len()];
    let m = hull.len();
    for k in 0..m {
        let (p, v, q) = (hull[(k + m - 1) % m], hull[k], hull[(k + 1) % m]);
        debug_assert!(orient(pts[p], pts[v], pts[q]) > 0.0);
        out[v] = ccw_angle(pts[q] - pts[v], pts[p] - pts[v]);
    }
    out
}
