//! Site-optimal stable allocation of weighted sites in ℍ to centers on ℝ.
//!
//! Sites rank centers by Euclidean distance and centers rank sites the same
//! way; ties break on `(distance, site index, center index)`. Centers have
//! integral capacities counted in cells. Two engines are provided: the
//! staged deferred-acceptance procedure and the growing-ball sweep. Because
//! both sides rank by one shared key the stable assignment is unique, and
//! the engines agree exactly.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use num_complex::Complex64;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Center {
    /// Caller-defined label (the pipeline stores the sector index here).
    pub id: usize,
    /// Coordinate on ∂ℍ.
    pub position: f64,
    pub appetite: f64,
    pub capacity_cells: usize,
}

impl Center {
    /// Capacity is the appetite rounded to whole cells of `cell_measure`.
    pub fn new(id: usize, position: f64, appetite: f64, cell_measure: f64) -> Self {
        let capacity_cells = if appetite > 0.0 {
            (appetite / cell_measure).round() as usize
        } else {
            0
        };
        Center {
            id,
            position,
            appetite,
            capacity_cells,
        }
    }

    pub fn with_capacity(id: usize, position: f64, capacity_cells: usize) -> Self {
        Center {
            id,
            position,
            appetite: capacity_cells as f64,
            capacity_cells,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Site {
    pub id: usize,
    pub position: Complex64,
    pub measure: f64,
    /// Grid cell the site was carried from.
    pub source_cell: (i64, i64),
}

impl Site {
    pub fn unit(id: usize, x: f64, y: f64) -> Self {
        Site {
            id,
            position: Complex64::new(x, y),
            measure: 1.0,
            source_cell: (0, 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Owner {
    /// Index into the center slice.
    Center(usize),
    Unclaimed,
    Undefined,
}

impl Owner {
    pub fn center(self) -> Option<usize> {
        match self {
            Owner::Center(c) => Some(c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub owner: Vec<Owner>,
    /// Site is equidistant from its owner and another center.
    pub tie: Vec<bool>,
    pub filled_cells: Vec<usize>,
    pub filled_measure: Vec<f64>,
    pub sated: Vec<bool>,
    pub stage_count: usize,
}

impl Assignment {
    pub fn unclaimed_count(&self) -> usize {
        self.owner
            .iter()
            .filter(|o| **o == Owner::Unclaimed)
            .count()
    }

    pub fn unsated_count(&self) -> usize {
        self.sated.iter().filter(|s| !**s).count()
    }

    /// Builds the bookkeeping fields from an owner vector.
    pub fn from_owners(
        sites: &[Site],
        centers: &[Center],
        owner: Vec<Owner>,
        stage_count: usize,
    ) -> Self {
        let mut filled_cells = vec![0; centers.len()];
        let mut filled_measure = vec![0.0; centers.len()];
        for (s, o) in sites.iter().zip(&owner) {
            if let Owner::Center(c) = *o {
                if c < centers.len() {
                    filled_cells[c] += 1;
                    filled_measure[c] += s.measure;
                }
            }
        }
        let sated = centers
            .iter()
            .zip(&filled_cells)
            .map(|(c, &f)| f >= c.capacity_cells)
            .collect();
        let tie = sites
            .iter()
            .zip(&owner)
            .map(|(s, o)| match *o {
                Owner::Center(c) if c < centers.len() => {
                    let d = dist2(s, &centers[c]);
                    centers
                        .iter()
                        .enumerate()
                        .any(|(k, other)| k != c && dist2(s, other) == d)
                }
                _ => false,
            })
            .collect();
        Assignment {
            owner,
            tie,
            filled_cells,
            filled_measure,
            sated,
            stage_count,
        }
    }
}

#[inline]
pub fn dist2(site: &Site, center: &Center) -> f64 {
    let dx = site.position.re - center.position;
    dx * dx + site.position.im * site.position.im
}

/// How site `s` ranks center `c`: smaller is better.
#[inline]
fn site_key(sites: &[Site], centers: &[Center], s: usize, c: usize) -> (f64, usize) {
    (dist2(&sites[s], &centers[c]), c)
}

/// Total order on `(distance², index)` pairs.
#[inline]
fn cmp_key(a: (f64, usize), b: (f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Heap entry ordered by how much a center dislikes the site.
#[derive(Debug, Clone, Copy)]
struct Held {
    d2: f64,
    site: usize,
}

impl PartialEq for Held {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Held {}
impl PartialOrd for Held {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Held {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_key((self.d2, self.site), (other.d2, other.site))
    }
}

fn validate(sites: &[Site]) -> Result<()> {
    for s in sites {
        if !(s.measure > 0.0) {
            return Err(Error::Parameter(format!(
                "site {} has nonpositive measure",
                s.id
            )));
        }
    }
    Ok(())
}

/// Staged deferred acceptance. In every stage each active site applies to
/// its nearest center that has not yet rejected it; each center keeps its
/// `capacity_cells` nearest applicants, counting those it already holds,
/// and rejects the rest. Rejections are permanent. The procedure stops when
/// a stage produces no rejection.
pub fn stable_allocate_stages(sites: &[Site], centers: &[Center]) -> Result<Assignment> {
    validate(sites)?;
    let n = sites.len();
    let m = centers.len();
    let prefs: Vec<Vec<usize>> = (0..n)
        .map(|s| {
            let mut p: Vec<usize> = (0..m).collect();
            p.sort_by(|&a, &b| {
                cmp_key(
                    site_key(sites, centers, s, a),
                    site_key(sites, centers, s, b),
                )
            });
            p
        })
        .collect();
    let mut next = vec![0usize; n];
    let mut held: Vec<BinaryHeap<Held>> = vec![BinaryHeap::new(); m];
    let mut pending: Vec<usize> = (0..n).collect();
    let mut stages = 0;

    while !pending.is_empty() {
        let mut applied = false;
        for &s in &pending {
            if next[s] < m {
                let c = prefs[s][next[s]];
                held[c].push(Held {
                    d2: dist2(&sites[s], &centers[c]),
                    site: s,
                });
                applied = true;
            }
        }
        if !applied {
            break;
        }
        stages += 1;
        let mut rejected = Vec::new();
        for c in 0..m {
            while held[c].len() > centers[c].capacity_cells {
                let worst = held[c].pop().unwrap();
                rejected.push(worst.site);
            }
        }
        for &s in &rejected {
            next[s] += 1;
        }
        rejected.sort_unstable();
        pending = rejected;
    }

    let mut owner = vec![Owner::Unclaimed; n];
    for (c, h) in held.iter().enumerate() {
        for e in h.iter() {
            owner[e.site] = Owner::Center(c);
        }
    }
    Ok(Assignment::from_owners(sites, centers, owner, stages))
}

/// Growing-ball sweep: all `(site, center)` pairs in increasing
/// `(distance, site, center)` order; a pair assigns the site when the site
/// is still free and the center still has room.
pub fn stable_allocate_balls(sites: &[Site], centers: &[Center]) -> Result<Assignment> {
    validate(sites)?;
    let n = sites.len();
    let m = centers.len();
    let mut events: Vec<(f64, u32, u32)> = Vec::with_capacity(n * m);
    for (s, site) in sites.iter().enumerate() {
        for (c, center) in centers.iter().enumerate() {
            if center.capacity_cells > 0 {
                events.push((dist2(site, center), s as u32, c as u32));
            }
        }
    }
    events.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut owner = vec![Owner::Unclaimed; n];
    let mut filled = vec![0usize; m];
    let mut open = centers.iter().filter(|c| c.capacity_cells > 0).count();
    let mut free = n;
    for (_, s, c) in events {
        if open == 0 || free == 0 {
            break;
        }
        let (s, c) = (s as usize, c as usize);
        if owner[s] == Owner::Unclaimed && filled[c] < centers[c].capacity_cells {
            owner[s] = Owner::Center(c);
            filled[c] += 1;
            free -= 1;
            if filled[c] == centers[c].capacity_cells {
                open -= 1;
            }
        }
    }
    Ok(Assignment::from_owners(sites, centers, owner, 0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StabilityViolation {
    OverCapacity {
        center: usize,
    },
    /// An unclaimed site coexists with a center that has room.
    UnclaimedAndUnsated {
        site: usize,
        center: usize,
    },
    /// The site prefers the center to its owner and the center has room
    /// or holds a site it likes less.
    BlockingPair {
        site: usize,
        center: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub stable: bool,
    pub violation: Option<StabilityViolation>,
}

impl StabilityReport {
    fn fail(v: StabilityViolation) -> Self {
        StabilityReport {
            stable: false,
            violation: Some(v),
        }
    }
}

/// Checks for blocking pairs, over-full centers, and the coexistence of an
/// unclaimed site with an unsated center. Undefined sites are ignored.
pub fn check_stability(sites: &[Site], centers: &[Center], asg: &Assignment) -> StabilityReport {
    let m = centers.len();
    let mut count = vec![0usize; m];
    let mut worst: Vec<Option<(f64, usize)>> = vec![None; m];
    for (s, o) in asg.owner.iter().enumerate() {
        if let Owner::Center(c) = *o {
            count[c] += 1;
            let k = (dist2(&sites[s], &centers[c]), s);
            if worst[c].is_none_or(|w| cmp_key(k, w) == Ordering::Greater) {
                worst[c] = Some(k);
            }
        }
    }
    for c in 0..m {
        if count[c] > centers[c].capacity_cells {
            return StabilityReport::fail(StabilityViolation::OverCapacity { center: c });
        }
    }
    if let Some(site) = asg.owner.iter().position(|o| *o == Owner::Unclaimed) {
        if let Some(center) = (0..m).find(|&c| count[c] < centers[c].capacity_cells) {
            return StabilityReport::fail(StabilityViolation::UnclaimedAndUnsated { site, center });
        }
    }
    for (s, o) in asg.owner.iter().enumerate() {
        let current = match *o {
            Owner::Center(c) => Some(site_key(sites, centers, s, c)),
            Owner::Unclaimed => None,
            Owner::Undefined => continue,
        };
        for c in 0..m {
            let k = site_key(sites, centers, s, c);
            let prefers = current.is_none_or(|cur| cmp_key(k, cur) == Ordering::Less);
            if !prefers || centers[c].capacity_cells == 0 {
                continue;
            }
            let room = count[c] < centers[c].capacity_cells;
            let dislikes_holder = worst[c].is_some_and(|w| cmp_key((k.0, s), w) == Ordering::Less);
            if room || dislikes_holder {
                return StabilityReport::fail(StabilityViolation::BlockingPair {
                    site: s,
                    center: c,
                });
            }
        }
    }
    StabilityReport {
        stable: true,
        violation: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrefixViolation {
    /// In the column nearest to `center`, a site above a gap still belongs to it.
    Column { center: usize, site: usize },
    /// `site` belongs to `center` although a rival reached a nearer point of
    /// the same arc first and lies closer to `site` than to that point.
    Arc {
        center: usize,
        site: usize,
        blocker: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrefixReport {
    pub holds: bool,
    pub columns_checked: usize,
    pub violation: Option<PrefixViolation>,
}

/// Discrete shape checks of territories in ℍ.
///
/// *Column:* sites sharing an abscissa form a column; every site in it
/// ranks centers identically, so the column's nearest center must own a
/// bottom prefix. One stray cell above the break is tolerated.
///
/// *Arc:* if `Z` is owned by `B` and nearer to `B` than to `A`, then any
/// `Y` at least as far from `A` as `Z` and at most as far from `B` as `Z`
/// cannot belong to `A`. This is the ray-and-arc sweep argument in a form
/// that needs no exact circles of sites.
pub fn column_prefix_check(sites: &[Site], centers: &[Center], asg: &Assignment) -> PrefixReport {
    let mut columns: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, s) in sites.iter().enumerate() {
        columns.entry(s.position.re.to_bits()).or_default().push(i);
    }
    let mut checked = 0;
    for col in columns.values_mut() {
        if col.len() < 2 || centers.is_empty() {
            continue;
        }
        checked += 1;
        let x = sites[col[0]].position.re;
        let near = (0..centers.len())
            .min_by(|&a, &b| {
                let da = (x - centers[a].position).powi(2);
                let db = (x - centers[b].position).powi(2);
                da.total_cmp(&db).then(a.cmp(&b))
            })
            .unwrap();
        col.sort_by(|&a, &b| {
            sites[a]
                .position
                .im
                .total_cmp(&sites[b].position.im)
                .then(a.cmp(&b))
        });
        let mut broken = false;
        let mut strays = 0;
        for &s in col.iter() {
            let mine = asg.owner[s] == Owner::Center(near);
            if !mine {
                broken = true;
            } else if broken {
                strays += 1;
                if strays > 1 {
                    return PrefixReport {
                        holds: false,
                        columns_checked: checked,
                        violation: Some(PrefixViolation::Column {
                            center: near,
                            site: s,
                        }),
                    };
                }
            }
        }
    }

    let m = centers.len();
    let mut territory: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (s, o) in asg.owner.iter().enumerate() {
        if let Owner::Center(c) = *o {
            territory[c].push(s);
        }
    }
    for (z, o) in asg.owner.iter().enumerate() {
        let Owner::Center(b) = *o else { continue };
        let zb = (dist2(&sites[z], &centers[b]), z);
        for a in 0..m {
            if a == b {
                continue;
            }
            let za = (dist2(&sites[z], &centers[a]), z);
            if cmp_key(zb, za) != Ordering::Less {
                continue;
            }
            for &y in &territory[a] {
                let ya = (dist2(&sites[y], &centers[a]), y);
                let yb = (dist2(&sites[y], &centers[b]), y);
                if cmp_key(ya, za) == Ordering::Greater && cmp_key(yb, zb) == Ordering::Less {
                    return PrefixReport {
                        holds: false,
                        columns_checked: checked,
                        violation: Some(PrefixViolation::Arc {
                            center: a,
                            site: y,
                            blocker: z,
                        }),
                    };
                }
            }
        }
    }
    PrefixReport {
        holds: true,
        columns_checked: checked,
        violation: None,
    }
}
