//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};

use conalloc_core::allocation::{dist2, Center, Owner, Site};
use conalloc_core::Complex64 as C;

pub fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Tree of a Prüfer sequence.
pub fn prufer_tree(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &x in seq {
        degree[x] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &x in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
        edges.push(key(leaf, x));
        degree[leaf] -= 1;
        degree[x] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push(key(rest[0], rest[1]));
    edges
}

/// Lightest of all n^(n−2) labeled spanning trees.
pub fn cayley_minimum(pts: &[C]) -> HashSet<(usize, usize)> {
    let n = pts.len();
    let total = n.pow(n as u32 - 2);
    let mut best = (f64::INFINITY, Vec::new());
    for code in 0..total {
        let mut c = code;
        let seq: Vec<usize> = (0..n - 2)
            .map(|_| {
                let d = c % n;
                c /= n;
                d
            })
            .collect();
        let tree = prufer_tree(&seq, n);
        let w: f64 = tree.iter().map(|&(a, b)| (pts[a] - pts[b]).norm()).sum();
        if w < best.0 {
            best = (w, tree);
        }
    }
    best.1.into_iter().collect()
}

/// Pairs with no connecting path of strictly shorter edges.
pub fn minimax_edges(pts: &[C]) -> HashSet<(usize, usize)> {
    let n = pts.len();
    let d = |i: usize, j: usize| (pts[i] - pts[j]).norm();
    let mut out = HashSet::new();
    for x in 0..n {
        for y in x + 1..n {
            let limit = d(x, y);
            let mut seen = vec![false; n];
            let mut queue = VecDeque::from([x]);
            seen[x] = true;
            while let Some(u) = queue.pop_front() {
                for v in 0..n {
                    if !seen[v] && d(u, v) < limit {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            if !seen[y] {
                out.insert((x, y));
            }
        }
    }
    out
}

/// Closed-form map of the upper half disk onto the upper half-plane.
pub fn half_disk_map(z: C) -> C {
    let q = (1.0 + z) / (1.0 - z);
    q * q
}

/// Every stable assignment, by exhaustive search. Sites rank centers by
/// `(distance, index)` with "unclaimed" last; centers rank sites the same
/// way. A branch is cut when some site already sits with a center worse
/// than `c` while `c` can no longer fill up with sites it prefers.
pub struct StableOracle<'a> {
    sites: &'a [Site],
    centers: &'a [Center],
    d: Vec<Vec<f64>>,
    owner: Vec<Option<usize>>,
    members: Vec<Vec<usize>>,
    pub found: Vec<Vec<Owner>>,
    pub nodes: usize,
}

impl<'a> StableOracle<'a> {
    pub fn run(sites: &'a [Site], centers: &'a [Center]) -> Vec<Vec<Owner>> {
        let d = sites
            .iter()
            .map(|s| centers.iter().map(|c| dist2(s, c)).collect())
            .collect();
        let mut o = StableOracle {
            sites,
            centers,
            d,
            owner: Vec::new(),
            members: vec![Vec::new(); centers.len()],
            found: Vec::new(),
            nodes: 0,
        };
        o.dfs();
        o.found
    }

    /// Does site `s` rank center `a` above its current seat `seat`?
    fn site_prefers(&self, s: usize, a: usize, seat: Option<usize>) -> bool {
        match seat {
            None => true,
            Some(b) => (self.d[s][a], a) < (self.d[s][b], b),
        }
    }

    /// Does center `c` rank site `x` above site `y`?
    fn center_prefers(&self, c: usize, x: usize, y: usize) -> bool {
        (self.d[x][c], x) < (self.d[y][c], y)
    }

    fn doomed(&self) -> bool {
        let placed = self.owner.len();
        let n = self.sites.len();
        for s in 0..placed {
            for c in 0..self.centers.len() {
                let cap = self.centers[c].capacity_cells;
                if cap == 0 || !self.site_prefers(s, c, self.owner[s]) {
                    continue;
                }
                if self.members[c]
                    .iter()
                    .any(|&y| self.center_prefers(c, s, y))
                {
                    return true;
                }
                let room = cap - self.members[c].len();
                let later = (placed..n)
                    .filter(|&y| self.center_prefers(c, y, s))
                    .count();
                if later < room {
                    return true;
                }
            }
        }
        false
    }

    fn dfs(&mut self) {
        self.nodes += 1;
        if self.doomed() {
            return;
        }
        let s = self.owner.len();
        if s == self.sites.len() {
            self.found.push(
                self.owner
                    .iter()
                    .map(|o| o.map_or(Owner::Unclaimed, Owner::Center))
                    .collect(),
            );
            return;
        }
        for c in 0..self.centers.len() {
            if self.members[c].len() < self.centers[c].capacity_cells {
                self.owner.push(Some(c));
                self.members[c].push(s);
                self.dfs();
                self.members[c].pop();
                self.owner.pop();
            }
        }
        self.owner.push(None);
        self.dfs();
        self.owner.pop();
    }
}

/// Checks that `owner` gives every site a center at least as good as in
/// every stable assignment, and that it is itself among them.
pub fn site_optimal(sites: &[Site], centers: &[Center], owner: &[Owner]) -> Result<usize, String> {
    let all = StableOracle::run(sites, centers);
    if !all.iter().any(|a| a == owner) {
        return Err(format!(
            "output is not among {} stable assignments",
            all.len()
        ));
    }
    let rank = |s: usize, o: Owner| match o {
        Owner::Center(c) => (dist2(&sites[s], &centers[c]), c),
        _ => (f64::INFINITY, usize::MAX),
    };
    for other in &all {
        for s in 0..sites.len() {
            if rank(s, other[s]) < rank(s, owner[s]) {
                return Err(format!("site {s} does better in another stable assignment"));
            }
        }
    }
    Ok(all.len())
}
