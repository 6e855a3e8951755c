//! End-to-end construction: faces, appetites, grid cells, forward images,
//! per-face stable allocation, and global bookkeeping and audits.
//!
//! Sites are grid cells of the source plane carried forward by the face map;
//! the allocation is pulled back by keeping each cell's identity, so no
//! inverse map is evaluated here.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::allocation::{
    check_stability, column_prefix_check, stable_allocate_balls, stable_allocate_stages,
    Assignment, Center, Owner, PrefixViolation, Site, StabilityViolation,
};
use crate::conformal::{
    boundary_residual, build_map, gap_stats, trace_boundary, GapStats, MapChain,
};
use crate::geom::{convex_hull, segment_distance, winding_number, Point};
use crate::msf::{
    build_mst, extract_faces, hull_area, sector_angles, EdgeKind, Face, Forest, UnionFind,
};
use crate::pointproc::PointSample;
use crate::{Error, Result};

/// Cell centers closer than this to a tree or hull edge are jittered.
pub const EDGE_CLEARANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AppetiteMode {
    /// Each face hands its whole area to its corners in proportion to angle.
    #[default]
    Figure,
    /// Each vertex splits a unit appetite over its sectors by angle.
    Ideal,
}

impl fmt::Display for AppetiteMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AppetiteMode::Figure => "figure",
            AppetiteMode::Ideal => "ideal",
        })
    }
}

impl FromStr for AppetiteMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "figure" => Ok(AppetiteMode::Figure),
            "ideal" => Ok(AppetiteMode::Ideal),
            other => Err(Error::Parameter(format!("unknown appetite mode {other:?}"))),
        }
    }
}

/// Per face, the appetite of each walk corner.
pub fn compute_appetites(
    faces: &[Face],
    vertex_count: usize,
    mode: AppetiteMode,
) -> Result<Vec<Vec<f64>>> {
    match mode {
        AppetiteMode::Figure => faces
            .iter()
            .map(|f| {
                let total: f64 = f.corner_angles.iter().sum();
                if !(total > 0.0) {
                    return Err(Error::Degeneracy(format!(
                        "face {} has zero total angle",
                        f.id
                    )));
                }
                Ok(f.corner_angles.iter().map(|a| f.area * a / total).collect())
            })
            .collect(),
        AppetiteMode::Ideal => {
            let mut at_vertex = vec![0.0; vertex_count];
            for f in faces {
                for (s, a) in f.steps.iter().zip(&f.corner_angles) {
                    at_vertex[s.vertex] += a;
                }
            }
            faces
                .iter()
                .map(|f| {
                    f.steps
                        .iter()
                        .zip(&f.corner_angles)
                        .map(|(s, a)| {
                            let total = at_vertex[s.vertex];
                            if total > 0.0 {
                                Ok(a / total)
                            } else {
                                Err(Error::Degeneracy(format!(
                                    "vertex {} has zero total angle",
                                    s.vertex
                                )))
                            }
                        })
                        .collect()
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub ix: i64,
    pub iy: i64,
    /// Sample point of the cell, normally its center.
    pub point: Point,
    pub jittered: bool,
}

#[derive(Debug, Clone)]
pub struct CellGrid {
    pub face: usize,
    pub h: f64,
    pub cells: Vec<Cell>,
}

impl CellGrid {
    pub fn measure(&self) -> f64 {
        self.cells.len() as f64 * self.h * self.h
    }

    pub fn jittered_count(&self) -> usize {
        self.cells.iter().filter(|c| c.jittered).count()
    }
}

/// The global square lattice of side `h` with cell `(ix, iy)` centered at
/// `((ix + ½)h, (iy + ½)h)`. Centers lying on an edge of the planar graph
/// are moved to a fixed off-edge point of the same cell, so every cell
/// belongs to at most one face.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub h: f64,
    segments: Vec<(Point, Point)>,
    moved: HashMap<(i64, i64), Point>,
}

const JITTER_OFFSETS: [(f64, f64); 6] = [
    (0.2113, 0.1309),
    (-0.1709, 0.2236),
    (0.1414, -0.2646),
    (-0.2449, -0.1732),
    (0.3162, 0.0577),
    (-0.0707, 0.3873),
];

impl Lattice {
    pub fn new(h: f64, segments: Vec<(Point, Point)>) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Parameter(format!(
                "grid size must be positive, got {h}"
            )));
        }
        let mut lattice = Lattice {
            h,
            segments,
            moved: HashMap::new(),
        };
        let mut hits = HashSet::new();
        for &(a, b) in &lattice.segments {
            let (x0, x1) = (
                a.re.min(b.re) - EDGE_CLEARANCE,
                a.re.max(b.re) + EDGE_CLEARANCE,
            );
            let (y0, y1) = (
                a.im.min(b.im) - EDGE_CLEARANCE,
                a.im.max(b.im) + EDGE_CLEARANCE,
            );
            for ix in lattice.index_range(x0, x1) {
                for iy in lattice.index_range(y0, y1) {
                    if segment_distance(lattice.center(ix, iy), a, b) < EDGE_CLEARANCE {
                        hits.insert((ix, iy));
                    }
                }
            }
        }
        let mut hits: Vec<_> = hits.into_iter().collect();
        hits.sort_unstable();
        for (ix, iy) in hits {
            let c = lattice.center(ix, iy);
            let p = JITTER_OFFSETS
                .iter()
                .map(|&(dx, dy)| c + Complex64::new(dx, dy) * h)
                .find(|&p| lattice.clear_of_edges(p))
                .ok_or_else(|| {
                    Error::Resolution(format!("cell ({ix}, {iy}) cannot be moved off the edges"))
                })?;
            lattice.moved.insert((ix, iy), p);
        }
        Ok(lattice)
    }

    /// Lattice for the tree and hull edges of a sample.
    pub fn for_graph(h: f64, sample: &PointSample, forest: &Forest) -> Result<Self> {
        let pts = &sample.points;
        let mut segments: Vec<(Point, Point)> =
            forest.edges.iter().map(|e| (pts[e.a], pts[e.b])).collect();
        let hull = convex_hull(pts);
        for k in 0..hull.len() {
            segments.push((pts[hull[k]], pts[hull[(k + 1) % hull.len()]]));
        }
        Lattice::new(h, segments)
    }

    /// Lattice for the boundary edges of a single face.
    pub fn for_face(h: f64, face: &Face) -> Result<Self> {
        let n = face.polygon.len();
        let segments = (0..n)
            .map(|i| (face.polygon[i], face.polygon[(i + 1) % n]))
            .collect();
        Lattice::new(h, segments)
    }

    fn clear_of_edges(&self, p: Point) -> bool {
        self.segments
            .iter()
            .all(|&(a, b)| segment_distance(p, a, b) >= EDGE_CLEARANCE)
    }

    fn index_range(&self, lo: f64, hi: f64) -> std::ops::RangeInclusive<i64> {
        let a = (lo / self.h - 0.5).ceil() as i64;
        let b = (hi / self.h - 0.5).floor() as i64;
        a..=b
    }

    pub fn center(&self, ix: i64, iy: i64) -> Point {
        Complex64::new((ix as f64 + 0.5) * self.h, (iy as f64 + 0.5) * self.h)
    }

    /// Sample point of a cell and whether it was moved.
    pub fn point(&self, ix: i64, iy: i64) -> (Point, bool) {
        match self.moved.get(&(ix, iy)) {
            Some(&p) => (p, true),
            None => (self.center(ix, iy), false),
        }
    }

    /// Cells whose sample point lies inside the face.
    pub fn discretize(&self, face: &Face) -> Result<CellGrid> {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in &face.polygon {
            x0 = x0.min(p.re);
            x1 = x1.max(p.re);
            y0 = y0.min(p.im);
            y1 = y1.max(p.im);
        }
        let mut cells = Vec::new();
        for ix in self.index_range(x0 - self.h, x1 + self.h) {
            for iy in self.index_range(y0 - self.h, y1 + self.h) {
                let (point, jittered) = self.point(ix, iy);
                if winding_number(&face.polygon, point) != 0 {
                    cells.push(Cell {
                        ix,
                        iy,
                        point,
                        jittered,
                    });
                }
            }
        }
        if cells.is_empty() {
            return Err(Error::Resolution(format!(
                "grid size {} leaves face {} without cells",
                self.h, face.id
            )));
        }
        Ok(CellGrid {
            face: face.id,
            h: self.h,
            cells,
        })
    }
}

/// Grid cells of one face on the lattice of side `h`.
pub fn discretize_face(face: &Face, h: f64) -> Result<CellGrid> {
    Lattice::for_face(h, face)?.discretize(face)
}

/// Shortest tree edge on the boundary of a face, or its shortest edge when
/// the boundary has no tree edge.
pub fn shortest_tree_edge(face: &Face) -> f64 {
    let n = face.polygon.len();
    let len = |i: usize| (face.polygon[(i + 1) % n] - face.polygon[i]).norm();
    let tree = (0..n)
        .filter(|&i| matches!(face.steps[i].outgoing, EdgeKind::Tree(_)))
        .map(len)
        .fold(f64::INFINITY, f64::min);
    if tree.is_finite() {
        tree
    } else {
        (0..n).map(len).fold(f64::INFINITY, f64::min)
    }
}

/// Allocation of one face in the half-plane, keyed by its cells.
#[derive(Debug, Clone)]
pub struct FaceAllocation {
    pub sites: Vec<Site>,
    pub centers: Vec<Center>,
    pub assignment: Assignment,
    /// Cells whose image left the open half-plane; they are undefined and
    /// carry no site.
    pub lost_cells: Vec<usize>,
    /// Owner per cell as a corner index.
    pub cell_owner: Vec<Owner>,
}

/// Power-of-two factor bringing `scale` near 1; multiplying by it is exact.
fn exact_normalizer(scale: f64) -> f64 {
    if scale > 0.0 && scale.is_finite() {
        (-scale.log2().round()).exp2()
    } else {
        1.0
    }
}

/// Maps the cells of a face forward and allocates them among its corners.
pub fn run_face(chain: &MapChain, grid: &CellGrid, appetites: &[f64]) -> Result<FaceAllocation> {
    if appetites.len() != chain.corner_images.len() {
        return Err(Error::Parameter(format!(
            "{} appetites for {} corners",
            appetites.len(),
            chain.corner_images.len()
        )));
    }
    let k = exact_normalizer(chain.scale());
    let measure = grid.h * grid.h;
    let centers: Vec<Center> = chain
        .corner_images
        .iter()
        .zip(appetites)
        .enumerate()
        .map(|(i, (&u, &a))| Center::new(i, u * k, a, measure))
        .collect();
    let images: Vec<Option<Complex64>> = grid
        .cells
        .par_iter()
        .map(|c| chain.map_forward_flagged(c.point).map(|w| w * k))
        .collect();
    let mut sites = Vec::with_capacity(images.len());
    let mut lost_cells = Vec::new();
    let mut site_of_cell = vec![usize::MAX; images.len()];
    for (i, (cell, w)) in grid.cells.iter().zip(&images).enumerate() {
        match w {
            Some(w) if w.im > 0.0 && w.im.is_finite() && w.re.is_finite() => {
                site_of_cell[i] = sites.len();
                sites.push(Site {
                    id: i,
                    position: *w,
                    measure,
                    source_cell: (cell.ix, cell.iy),
                });
            }
            _ => lost_cells.push(i),
        }
    }
    let assignment = stable_allocate_balls(&sites, &centers)?;
    let cell_owner = site_of_cell
        .iter()
        .map(|&s| {
            if s == usize::MAX {
                Owner::Undefined
            } else {
                assignment.owner[s]
            }
        })
        .collect();
    Ok(FaceAllocation {
        sites,
        centers,
        assignment,
        lost_cells,
        cell_owner,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellOwner {
    /// A corner of the face, given by its walk index and vertex id.
    Corner {
        corner: usize,
        vertex: usize,
    },
    Unclaimed,
    Undefined,
}

impl CellOwner {
    pub fn vertex(self) -> Option<usize> {
        match self {
            CellOwner::Corner { vertex, .. } => Some(vertex),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FaceDiagnostics {
    pub corners: usize,
    pub samples: usize,
    pub spacing: f64,
    pub attempts: usize,
    /// Largest |Im| of a boundary sample image relative to the map scale.
    pub boundary_residual: f64,
    pub gaps: Option<GapStats>,
    pub stage_count: usize,
    pub ties: usize,
    pub jittered: usize,
    pub lost: usize,
}

#[derive(Debug, Clone)]
pub enum FaceStatus {
    Mapped(Box<FaceAllocation>),
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct FaceOutcome {
    pub face: Face,
    pub cells: Vec<Cell>,
    pub appetites: Vec<f64>,
    pub owners: Vec<CellOwner>,
    pub status: FaceStatus,
    pub diagnostics: FaceDiagnostics,
}

impl FaceOutcome {
    pub fn allocation(&self) -> Option<&FaceAllocation> {
        match &self.status {
            FaceStatus::Mapped(a) => Some(a),
            FaceStatus::Failed(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub h: f64,
    pub mode: AppetiteMode,
    /// Boundary spacing; per face `(shortest tree edge)/4` when absent.
    pub spacing: Option<f64>,
    /// Spacing halvings tried after a numerical failure.
    pub retries: usize,
}

impl PipelineConfig {
    pub fn new(h: f64, mode: AppetiteMode) -> Self {
        PipelineConfig {
            h,
            mode,
            spacing: None,
            retries: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GlobalAllocation {
    pub config: PipelineConfig,
    pub sample: PointSample,
    pub forest: Forest,
    pub faces: Vec<FaceOutcome>,
}

impl GlobalAllocation {
    pub fn cell_measure(&self) -> f64 {
        self.config.h * self.config.h
    }

    pub fn cell_count(&self) -> usize {
        self.faces.iter().map(|f| f.cells.len()).sum()
    }

    pub fn count(&self, pred: impl Fn(CellOwner) -> bool) -> usize {
        self.faces
            .iter()
            .flat_map(|f| f.owners.iter())
            .filter(|o| pred(**o))
            .count()
    }

    /// Claimed measure per vertex, summed over its sectors.
    pub fn claimed_measure(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.sample.len()];
        let m = self.cell_measure();
        for f in &self.faces {
            for o in &f.owners {
                if let Some(v) = o.vertex() {
                    out[v] += m;
                }
            }
        }
        out
    }

    /// Appetite per vertex, summed over its sectors.
    pub fn appetite(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.sample.len()];
        for f in &self.faces {
            for (s, a) in f.face.steps.iter().zip(&f.appetites) {
                out[s.vertex] += a;
            }
        }
        out
    }

    pub fn stage_counts(&self) -> Vec<usize> {
        self.faces
            .iter()
            .map(|f| f.diagnostics.stage_count)
            .collect()
    }

    pub fn failed_faces(&self) -> Vec<usize> {
        self.faces
            .iter()
            .filter(|f| f.allocation().is_none())
            .map(|f| f.face.id)
            .collect()
    }

    /// Replaces the per-cell owners, keeping geometry and sites. Fails if
    /// the shape of `owners` does not match the cells.
    pub fn with_owners(&self, owners: Vec<Vec<CellOwner>>) -> Result<GlobalAllocation> {
        if owners.len() != self.faces.len() {
            return Err(Error::Parameter(format!(
                "owners for {} faces, expected {}",
                owners.len(),
                self.faces.len()
            )));
        }
        let mut out = self.clone();
        for (f, o) in out.faces.iter_mut().zip(owners) {
            if o.len() != f.cells.len() {
                return Err(Error::Parameter(format!(
                    "face {}: {} owners for {} cells",
                    f.face.id,
                    o.len(),
                    f.cells.len()
                )));
            }
            if let FaceStatus::Mapped(alloc) = &mut f.status {
                let mut owner = Vec::with_capacity(alloc.sites.len());
                for (cell, co) in o.iter().enumerate() {
                    if alloc.lost_cells.binary_search(&cell).is_ok() {
                        continue;
                    }
                    owner.push(match *co {
                        CellOwner::Corner { corner, .. } => Owner::Center(corner),
                        CellOwner::Unclaimed => Owner::Unclaimed,
                        CellOwner::Undefined => Owner::Undefined,
                    });
                }
                alloc.assignment = Assignment::from_owners(
                    &alloc.sites,
                    &alloc.centers,
                    owner,
                    alloc.assignment.stage_count,
                );
            }
            f.owners = o;
        }
        Ok(out)
    }
}

fn corner_owner(face: &Face, o: Owner) -> CellOwner {
    match o {
        Owner::Center(c) => CellOwner::Corner {
            corner: c,
            vertex: face.steps[c].vertex,
        },
        Owner::Unclaimed => CellOwner::Unclaimed,
        Owner::Undefined => CellOwner::Undefined,
    }
}

fn process_face(
    face: Face,
    appetites: Vec<f64>,
    lattice: &Lattice,
    config: &PipelineConfig,
) -> Result<FaceOutcome> {
    let grid = lattice.discretize(&face)?;
    let base = config
        .spacing
        .unwrap_or_else(|| shortest_tree_edge(&face) / 4.0);
    let mut diagnostics = FaceDiagnostics {
        corners: face.corner_count(),
        samples: 0,
        spacing: base,
        attempts: 0,
        boundary_residual: f64::NAN,
        gaps: None,
        stage_count: 0,
        ties: 0,
        jittered: grid.jittered_count(),
        lost: 0,
    };
    let mut last_error = String::new();
    for attempt in 0..=config.retries {
        let spacing = base / f64::from(1u32 << attempt.min(30));
        diagnostics.attempts = attempt + 1;
        diagnostics.spacing = spacing;
        let samples = trace_boundary(&face, spacing)?;
        diagnostics.samples = samples.len();
        let chain = match build_map(&samples) {
            Ok(c) => c,
            Err(e @ (Error::NumericalFailure { .. } | Error::Crowding(_) | Error::Pole(_))) => {
                log::warn!("face {}: {e}; halving boundary spacing", face.id);
                last_error = e.to_string();
                continue;
            }
            Err(e) => return Err(e),
        };
        diagnostics.boundary_residual = boundary_residual(&chain, &samples) / chain.scale();
        diagnostics.gaps = gap_stats(&chain);
        let alloc = run_face(&chain, &grid, &appetites)?;
        let staged = stable_allocate_stages(&alloc.sites, &alloc.centers)?;
        if staged.owner != alloc.assignment.owner {
            return Err(Error::Degeneracy(format!(
                "face {}: stage and ball engines disagree",
                face.id
            )));
        }
        diagnostics.stage_count = staged.stage_count;
        diagnostics.ties = alloc.assignment.tie.iter().filter(|t| **t).count();
        diagnostics.lost = alloc.lost_cells.len();
        let mut alloc = alloc;
        alloc.assignment.stage_count = staged.stage_count;
        let owners = alloc
            .cell_owner
            .iter()
            .map(|&o| corner_owner(&face, o))
            .collect();
        return Ok(FaceOutcome {
            face,
            cells: grid.cells,
            appetites,
            owners,
            status: FaceStatus::Mapped(Box::new(alloc)),
            diagnostics,
        });
    }
    log::warn!("face {}: map failed, cells marked undefined", face.id);
    Ok(FaceOutcome {
        owners: vec![CellOwner::Undefined; grid.cells.len()],
        face,
        cells: grid.cells,
        appetites,
        status: FaceStatus::Failed(last_error),
        diagnostics,
    })
}

/// Runs the whole construction on a point sample.
pub fn run_pipeline(sample: &PointSample, config: &PipelineConfig) -> Result<GlobalAllocation> {
    if let Some(s) = config.spacing {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Parameter(format!(
                "boundary spacing must be positive, got {s}"
            )));
        }
    }
    let forest = build_mst(sample)?;
    let faces = extract_faces(sample, &forest)?;
    let appetites = compute_appetites(&faces, sample.len(), config.mode)?;
    let lattice = Lattice::for_graph(config.h, sample, &forest)?;
    let outcomes = faces
        .into_par_iter()
        .zip(appetites.into_par_iter())
        .map(|(face, app)| process_face(face, app, &lattice, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(GlobalAllocation {
        config: config.clone(),
        sample: sample.clone(),
        forest,
        faces: outcomes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityReport {
    /// Connected pieces of each vertex's territory (0 when it is empty).
    pub components: Vec<usize>,
    /// Share of vertices whose territory has at most one piece.
    pub connected_fraction: f64,
}

/// Counts the pieces of every vertex's territory. Cells are joined to
/// same-owner 4-neighbors, and every cell within `2h` of its vertex is
/// joined to that vertex, so sectors meeting at the vertex count as one.
pub fn verify_connectivity(global: &GlobalAllocation) -> ConnectivityReport {
    let n = global.sample.len();
    let h = global.config.h;
    let mut index: HashMap<(i64, i64), (usize, usize)> = HashMap::new();
    let mut owner_of = Vec::new();
    let mut points = Vec::new();
    for f in &global.faces {
        for (c, o) in f.cells.iter().zip(&f.owners) {
            if let Some(v) = o.vertex() {
                index.insert((c.ix, c.iy), (owner_of.len(), v));
                owner_of.push(v);
                points.push(global.config.h * Complex64::new(c.ix as f64 + 0.5, c.iy as f64 + 0.5));
            }
        }
    }
    let cells = owner_of.len();
    // node `cells + v` stands for vertex `v`
    let mut uf = UnionFind::new(cells + n);
    for (&(ix, iy), &(i, v)) in &index {
        for key in [(ix + 1, iy), (ix, iy + 1)] {
            if let Some(&(j, w)) = index.get(&key) {
                if v == w {
                    uf.union(i, j);
                }
            }
        }
        if (points[i] - global.sample.points[v]).norm() <= 2.0 * h {
            uf.union(i, cells + v);
        }
    }
    let mut roots: Vec<HashSet<usize>> = vec![HashSet::new(); n];
    for i in 0..cells {
        let r = uf.find(i);
        roots[owner_of[i]].insert(r);
    }
    let components: Vec<usize> = roots.iter().map(HashSet::len).collect();
    let connected = components.iter().filter(|&&c| c <= 1).count();
    ConnectivityReport {
        connected_fraction: if n == 0 {
            1.0
        } else {
            connected as f64 / n as f64
        },
        components,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SatednessReport {
    /// Claimed measure over appetite per vertex (1 when the appetite is 0).
    pub ratio: Vec<f64>,
    /// Allowed deviation of claimed measure from appetite per vertex.
    pub tolerance: Vec<f64>,
    pub claimed: Vec<f64>,
    pub appetite: Vec<f64>,
    pub unsated_sectors: usize,
    pub unclaimed_cells: usize,
    pub undefined_cells: usize,
    /// Faces with both an unclaimed cell and an unsated corner.
    pub dichotomy_violations: Vec<usize>,
    /// Vertices whose claimed measure is off by more than the tolerance.
    pub out_of_tolerance: Vec<usize>,
}

/// Fill levels against appetites. A corner can miss its appetite by the
/// rounding of its capacity (half a cell) plus, in a face whose capacities
/// exceed its cell count, that excess.
pub fn satedness_report(global: &GlobalAllocation) -> SatednessReport {
    let n = global.sample.len();
    let m = global.cell_measure();
    let claimed = global.claimed_measure();
    let appetite = global.appetite();
    let mut tolerance = vec![0.0; n];
    let mut unsated_sectors = 0;
    let mut dichotomy_violations = Vec::new();
    for f in &global.faces {
        let (excess, alloc) = match f.allocation() {
            Some(a) => {
                let cap: usize = a.centers.iter().map(|c| c.capacity_cells).sum();
                (cap.saturating_sub(a.sites.len()), Some(a))
            }
            None => (0, None),
        };
        for (k, s) in f.face.steps.iter().enumerate() {
            tolerance[s.vertex] += (excess as f64 + 0.5) * m;
            if alloc.is_none() {
                // a failed face grants nothing; its appetite is excused
                tolerance[s.vertex] += f.appetites[k];
            }
        }
        if let Some(a) = alloc {
            let unsated = a.assignment.unsated_count();
            unsated_sectors += unsated;
            if unsated > 0 && a.assignment.unclaimed_count() > 0 {
                dichotomy_violations.push(f.face.id);
            }
        }
    }
    let ratio = claimed
        .iter()
        .zip(&appetite)
        .map(|(c, a)| if *a > 0.0 { c / a } else { 1.0 })
        .collect();
    let out_of_tolerance = (0..n)
        .filter(|&v| (claimed[v] - appetite[v]).abs() > tolerance[v] + 1e-12)
        .collect();
    SatednessReport {
        ratio,
        tolerance,
        claimed,
        appetite,
        unsated_sectors,
        unclaimed_cells: global.count(|o| o == CellOwner::Unclaimed),
        undefined_cells: global.count(|o| o == CellOwner::Undefined),
        dichotomy_violations,
        out_of_tolerance,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AuditFailure {
    Stability {
        face: usize,
        violation: StabilityViolation,
    },
    Prefix {
        face: usize,
        violation: PrefixViolation,
    },
    Dichotomy {
        face: usize,
    },
    AngleClosure {
        vertex: usize,
        total: f64,
        expected: f64,
    },
    AppetiteClosure {
        face: usize,
        total: f64,
        expected: f64,
    },
    VertexAppetite {
        vertex: usize,
        total: f64,
    },
    Partition {
        cells: usize,
        accounted: usize,
    },
}

impl fmt::Display for AuditFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AuditFailure::Stability { face, violation } => {
                write!(f, "face {face}: unstable, {violation:?}")
            }
            AuditFailure::Prefix { face, violation } => {
                write!(f, "face {face}: territory shape violation, {violation:?}")
            }
            AuditFailure::Dichotomy { face } => {
                write!(f, "face {face}: unclaimed cells next to an unsated corner")
            }
            AuditFailure::AngleClosure {
                vertex,
                total,
                expected,
            } => write!(
                f,
                "vertex {vertex}: sector angles sum to {total}, expected {expected}"
            ),
            AuditFailure::AppetiteClosure {
                face,
                total,
                expected,
            } => write!(
                f,
                "face {face}: appetites sum to {total}, expected {expected}"
            ),
            AuditFailure::VertexAppetite { vertex, total } => {
                write!(
                    f,
                    "vertex {vertex}: sector appetites sum to {total}, expected 1"
                )
            }
            AuditFailure::Partition { cells, accounted } => {
                write!(f, "{accounted} owners for {cells} cells")
            }
        }
    }
}

/// Hard invariants of an allocation: per-face stability and territory
/// shape, the unclaimed/unsated dichotomy, angle and appetite closure, and
/// the cell partition. Returns every failure found, first per face.
pub fn audit(global: &GlobalAllocation) -> Vec<AuditFailure> {
    let mut out = Vec::new();
    for f in &global.faces {
        let Some(a) = f.allocation() else { continue };
        let r = check_stability(&a.sites, &a.centers, &a.assignment);
        if let Some(violation) = r.violation {
            out.push(AuditFailure::Stability {
                face: f.face.id,
                violation,
            });
            continue;
        }
        let p = column_prefix_check(&a.sites, &a.centers, &a.assignment);
        if let Some(violation) = p.violation {
            out.push(AuditFailure::Prefix {
                face: f.face.id,
                violation,
            });
        }
        if a.assignment.unsated_count() > 0 && a.assignment.unclaimed_count() > 0 {
            out.push(AuditFailure::Dichotomy { face: f.face.id });
        }
    }

    let faces: Vec<Face> = global.faces.iter().map(|f| f.face.clone()).collect();
    let hull = crate::msf::hull_angles(&global.sample);
    for (v, sectors) in sector_angles(global.sample.len(), &faces)
        .iter()
        .enumerate()
    {
        let total: f64 = sectors.iter().map(|s| s.1).sum();
        let expected = if hull[v] > 0.0 {
            hull[v]
        } else {
            std::f64::consts::TAU
        };
        if (total - expected).abs() > 1e-9 {
            out.push(AuditFailure::AngleClosure {
                vertex: v,
                total,
                expected,
            });
        }
    }
    match global.config.mode {
        AppetiteMode::Figure => {
            for f in &global.faces {
                let total: f64 = f.appetites.iter().sum();
                if (total - f.face.area).abs() > 1e-9 * f.face.area.max(1e-300) {
                    out.push(AuditFailure::AppetiteClosure {
                        face: f.face.id,
                        total,
                        expected: f.face.area,
                    });
                }
            }
        }
        AppetiteMode::Ideal => {
            for (vertex, &total) in global.appetite().iter().enumerate() {
                if (total - 1.0).abs() > 1e-9 {
                    out.push(AuditFailure::VertexAppetite { vertex, total });
                }
            }
        }
    }
    let cells = global.cell_count();
    let accounted = global.faces.iter().map(|f| f.owners.len()).sum();
    if cells != accounted {
        out.push(AuditFailure::Partition { cells, accounted });
    }
    out
}

/// Cell area against the convex hull area.
pub fn coverage(global: &GlobalAllocation) -> (f64, f64) {
    (
        global.cell_count() as f64 * global.cell_measure(),
        hull_area(&global.sample),
    )
}
