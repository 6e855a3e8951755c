//! Numerical Riemann maps of faces onto the upper half-plane by the
//! geodesic zipper algorithm.
//!
//! The boundary walk `s₀, s₁, …, s_{N-1}` starts inside a hull edge. The
//! first map `sqrt((z − s₁)/(s₀ − z))` opens the segment `[s₀, s₁]` onto ℝ,
//! sending `s₁ ↦ 0` and `s₀ ↦ ∞`. Every later fresh sample `a` is then
//! unzipped with the elementary slit map
//!
//! ```text
//!     f(z) = sqrt(M(z)² + c²),   M(z) = z / (1 − z/b),   b = |a|²/Re a,  c = |a|²/Im a
//! ```
//!
//! which takes ℍ minus the hyperbolic geodesic from 0 to `a` onto ℍ, with
//! `a ↦ 0`. A terminal Möbius map sends the image of `s₀` back to ∞ and a
//! squaring opens the remaining right angle.
//!
//! Faces are not Jordan domains: dangling tree edges are walked twice.
//! Once the first side of a slit has been unzipped, the second side already
//! lies on ℝ, so its samples are not zipped again. Instead each sample that
//! retraces an earlier segment takes the right-hand prime end recorded when
//! that segment was opened, and the next fresh step starts from there after
//! a real shift. All prime ends are tracked as real numbers from the moment
//! they reach ℝ, so the two preimages of a slit point never get confused by
//! rounding.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::geom::{segment_distance, winding_number};
use crate::msf::{EdgeKind, Face};
use crate::{Error, Result};

type C = Complex64;

/// Boundary walk of a face, refined for the zipper.
#[derive(Debug, Clone)]
pub struct BoundarySamples {
    pub points: Vec<C>,
    /// For a sample reached along the reverse of an earlier segment
    /// `(i, i + 1)`, that `i`.
    pub retrace_of: Vec<Option<usize>>,
    /// Sample index of each face corner, in walk order.
    pub anchors: Vec<usize>,
    /// Set when the spacing exceeded the shortest edge.
    pub refinement_warning: bool,
}

impl BoundarySamples {
    /// Samples for a simple closed polygon given counterclockwise, with
    /// every vertex an anchor. `start_edge` is the edge whose interior hosts
    /// the start sample; each edge is split into `max(2, len/spacing)` pieces
    /// when it is the start edge and `max(1, …)` otherwise.
    pub fn jordan(vertices: &[C], start_edge: usize, max_spacing: f64) -> Self {
        let steps: Vec<(usize, usize)> = (0..vertices.len())
            .map(|i| (i, (i + 1) % vertices.len()))
            .collect();
        build_samples(vertices, &steps, start_edge, max_spacing)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum SampleKey {
    Vertex(usize),
    Interior(usize, usize, usize),
}

fn pieces(len: f64, spacing: f64, min: usize) -> usize {
    ((len / spacing).ceil() as usize).max(min)
}

/// `steps[k] = (vertex, next)` over `coords`; corner `k` sits at `vertex`.
fn build_samples(
    coords: &[C],
    steps: &[(usize, usize)],
    start: usize,
    spacing: f64,
) -> BoundarySamples {
    let mut pts = Vec::new();
    let mut keys = Vec::new();
    let mut anchors = Vec::with_capacity(steps.len());
    let mut s0 = 0;
    let mut shortest = f64::INFINITY;
    let walk_len = steps.len();
    for k in 0..walk_len {
        let (u, v) = steps[(start + k) % walk_len];
        anchors.push(pts.len());
        pts.push(coords[u]);
        keys.push(SampleKey::Vertex(u));
        let len = (coords[v] - coords[u]).norm();
        shortest = shortest.min(len);
        let m = pieces(len, spacing, if k == 0 { 2 } else { 1 });
        // interior points are placed along the canonical direction so both
        // traversals of a slit produce bit-identical coordinates
        let (lo, hi) = (u.min(v), u.max(v));
        for t in 1..m {
            let idx = if u == lo { t } else { m - t };
            let p = coords[lo] + (coords[hi] - coords[lo]) * (idx as f64 / m as f64);
            if k == 0 && t == m / 2 {
                s0 = pts.len();
            }
            pts.push(p);
            keys.push(SampleKey::Interior(lo, hi, idx));
        }
    }
    // re-index so corners come in face-step order regardless of `start`
    anchors.rotate_right(start % walk_len);
    let n = pts.len();
    pts.rotate_left(s0);
    keys.rotate_left(s0);
    for a in anchors.iter_mut() {
        *a = (*a + n - s0) % n;
    }

    let mut seen: HashMap<(SampleKey, SampleKey), usize> = HashMap::new();
    let mut retrace_of = vec![None; n];
    for i in 1..n {
        if let Some(&j) = seen.get(&(keys[i], keys[i - 1])) {
            retrace_of[i] = Some(j);
        } else {
            seen.insert((keys[i - 1], keys[i]), i - 1);
        }
    }
    BoundarySamples {
        points: pts,
        retrace_of,
        anchors,
        refinement_warning: spacing >= shortest,
    }
}

/// Samples the face walk with spacing at most `max_spacing`. The walk starts
/// inside the face's longest hull edge; slit edges are sampled on both sides
/// with identical coordinates.
pub fn trace_boundary(face: &Face, max_spacing: f64) -> Result<BoundarySamples> {
    let start = face
        .hull_steps()
        .max_by(|&a, &b| {
            let la = (face.polygon[(a + 1) % face.polygon.len()] - face.polygon[a]).norm();
            let lb = (face.polygon[(b + 1) % face.polygon.len()] - face.polygon[b]).norm();
            la.total_cmp(&lb).then(b.cmp(&a))
        })
        .ok_or_else(|| Error::Degeneracy(format!("face {} has no hull edge", face.id)))?;
    trace_boundary_from(face, start, max_spacing)
}

/// As [`trace_boundary`], starting inside the outgoing edge of walk step
/// `start`, which must be a hull edge.
pub fn trace_boundary_from(face: &Face, start: usize, max_spacing: f64) -> Result<BoundarySamples> {
    if !(max_spacing > 0.0 && max_spacing.is_finite()) {
        return Err(Error::Parameter(format!(
            "boundary spacing must be positive, got {max_spacing}"
        )));
    }
    if face.steps.get(start).map(|s| s.outgoing) != Some(EdgeKind::Hull) {
        return Err(Error::Parameter(format!(
            "face {}: walk step {start} does not leave along a hull edge",
            face.id
        )));
    }
    // coordinates indexed by global vertex id
    let max_v = face
        .steps
        .iter()
        .map(|s| s.vertex.max(s.next))
        .max()
        .unwrap_or(0);
    let mut coords = vec![C::new(f64::NAN, f64::NAN); max_v + 1];
    for (s, p) in face.steps.iter().zip(&face.polygon) {
        coords[s.vertex] = *p;
    }
    let steps: Vec<(usize, usize)> = face.steps.iter().map(|s| (s.vertex, s.next)).collect();
    let samples = build_samples(&coords, &steps, start, max_spacing);
    if samples.refinement_warning {
        log::warn!(
            "face {}: boundary spacing {max_spacing} is not below the shortest edge",
            face.id
        );
    }
    Ok(samples)
}

/// Parameters `(b, c)` of the elementary map that unzips the geodesic from 0
/// to `a`. `b` is infinite for a vertical slit.
pub fn slit_params(a: C) -> (f64, f64) {
    let r2 = a.norm_sqr();
    let b = if a.re == 0.0 {
        f64::INFINITY
    } else {
        r2 / a.re
    };
    (b, r2 / a.im)
}

#[inline]
fn mobius(z: C, b: f64) -> C {
    // b = ±∞ gives the identity
    z / (1.0 - z / b)
}

#[inline]
fn mobius_inv(s: C, b: f64) -> C {
    s / (1.0 + s / b)
}

/// Picks the square root branch that follows the sign of `re`, falling back
/// to the root in the closed upper half-plane.
#[inline]
fn oriented_sqrt(w: C, re: f64) -> C {
    let s = w.sqrt();
    if re > 0.0 {
        s
    } else if re < 0.0 || s.im < 0.0 {
        -s
    } else {
        s
    }
}

/// Replaces a negative zero imaginary part by `+0.0` so that principal
/// roots of real arguments land on the upper side of their cut.
#[inline]
fn closed_upper(w: C) -> C {
    if w.im == 0.0 {
        C::new(w.re, 0.0)
    } else {
        w
    }
}

/// The elementary slit map `z ↦ sqrt(M(z)² + c²)` with `M(z) = z/(1 − z/b)`,
/// which opens the circular arc from 0 to `tip` orthogonal to ℝ onto the
/// segment `[-c, c]`.
///
/// Keeping the tip lets both directions use the factorization
/// `M(z) − ic = (b + ic)(z − tip)/(b − z)`, which has no cancellation near
/// the tip: the tip maps to exactly 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitMap {
    pub tip: C,
    pub b: f64,
    pub c: f64,
}

impl SlitMap {
    pub fn from_tip(tip: C) -> Self {
        let (b, c) = slit_params(tip);
        SlitMap { tip, b, c }
    }

    /// Map with given `(b, c)`; the tip is recovered from them.
    pub fn from_params(b: f64, c: f64) -> Self {
        let tip = if b.is_infinite() {
            C::new(0.0, c)
        } else {
            let r2 = 1.0 / ((1.0 / b).powi(2) + (1.0 / c).powi(2));
            C::new(r2 / b, r2 / c)
        };
        SlitMap { tip, b, c }
    }

    pub fn forward(&self, z: C) -> Result<C> {
        if self.b.is_finite() && z == C::new(self.b, 0.0) {
            return Err(Error::Pole(self.b));
        }
        Ok(self.apply(z))
    }

    #[inline]
    fn apply(&self, z: C) -> C {
        if z.im == 0.0 {
            return C::new(self.real(z.re), 0.0);
        }
        let ic = C::new(0.0, self.c);
        let below = if self.b.is_infinite() {
            z - self.tip
        } else {
            (z - self.tip) * (self.b + ic) / (self.b - z)
        };
        let m = below + ic;
        oriented_sqrt(below * (m + ic), m.re)
    }

    /// Boundary values on `(-c, c)` are the prime ends on the two sides of
    /// the arc.
    #[inline]
    pub fn inverse(&self, w: C) -> C {
        let w = closed_upper(w);
        let ic = C::new(0.0, self.c);
        let s = closed_upper((w - self.c).sqrt() * (w + self.c).sqrt());
        // s − ic = w²/(s + ic), pushed through the Möbius difference
        if w.im == 0.0 {
            return mobius_inv(s, self.b);
        }
        let ds = w * w / (s + ic);
        let y = if self.b.is_infinite() {
            self.tip + ds
        } else {
            self.tip + ds * (self.b / (self.b + s)) * (self.b / (self.b + ic))
        };
        C::new(y.re, y.im.max(0.0))
    }

    /// Action on ℝ ∪ {∞}; infinity is `f64::INFINITY`.
    pub fn real(&self, x: f64) -> f64 {
        let m = if x.is_infinite() {
            -self.b
        } else if x == self.b {
            return f64::INFINITY;
        } else {
            x / (1.0 - x / self.b)
        };
        if m.is_infinite() {
            return f64::INFINITY;
        }
        let r = m.hypot(self.c);
        if m < 0.0 {
            -r
        } else {
            r
        }
    }
}

/// The elementary slit map `sqrt(M(z)² + c²)` on the closed upper half-plane.
pub fn elementary_forward(b: f64, c: f64, z: C) -> Result<C> {
    SlitMap::from_params(b, c).forward(z)
}

/// Inverse of [`elementary_forward`]; boundary values are the continuous
/// extension (points of `(-c, c)` land on the two sides of the geodesic).
pub fn elementary_inverse(b: f64, c: f64, w: C) -> C {
    SlitMap::from_params(b, c).inverse(w)
}

fn real_step(step: &ZipStep, x: f64) -> f64 {
    step.slit.real(x - step.shift)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZipStep {
    /// Real translation applied before the slit map.
    pub shift: f64,
    pub slit: SlitMap,
}

impl ZipStep {
    #[inline]
    fn forward(&self, z: C) -> C {
        self.slit.apply(z - self.shift)
    }

    #[inline]
    fn inverse(&self, w: C) -> C {
        self.slit.inverse(w) + self.shift
    }
}

/// Final normalization `z ↦ sign · (y / (1 − y/d))²` with `y = z − shift`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Terminal {
    pub shift: f64,
    pub d: f64,
    pub sign: f64,
}

impl Terminal {
    fn pre_square(&self, z: C) -> C {
        mobius(z - self.shift, self.d)
    }

    fn forward(&self, z: C) -> C {
        let m = self.pre_square(z);
        m * m * self.sign
    }

    fn inverse(&self, w: C) -> C {
        let m = closed_upper(closed_upper(w * self.sign).sqrt() * self.sign);
        mobius_inv(m, self.d) + self.shift
    }

    fn real(&self, x: f64) -> f64 {
        let y = x - self.shift;
        let m = if y.is_infinite() {
            -self.d
        } else {
            y / (1.0 - y / self.d)
        };
        self.sign * m * m
    }
}

/// A built Riemann map of one face onto ℍ.
#[derive(Debug, Clone)]
pub struct MapChain {
    pub z0: C,
    pub z1: C,
    pub steps: Vec<ZipStep>,
    pub terminal: Terminal,
    /// Boundary image of each anchor, in anchor order.
    pub corner_images: Vec<f64>,
    /// Boundary image of every sample; `∞` for the start sample.
    pub sample_images: Vec<f64>,
}

#[inline]
fn upper_sqrt(w: C) -> C {
    let s = w.sqrt();
    if s.im < 0.0 {
        -s
    } else {
        s
    }
}

impl MapChain {
    fn initial(&self, z: C) -> C {
        upper_sqrt((z - self.z1) / (self.z0 - z))
    }

    fn initial_inverse(&self, w: C) -> C {
        let r = w * w;
        (self.z1 + r * self.z0) / (1.0 + r)
    }

    /// Image of an interior point of the face.
    pub fn map_forward(&self, z: C) -> C {
        let mut w = self.initial(z);
        for s in &self.steps {
            w = s.forward(w);
        }
        self.terminal.forward(w)
    }

    /// Like [`map_forward`](Self::map_forward) but `None` when the image is
    /// not strictly inside ℍ (the point sits on the boundary, e.g. on a
    /// slit, where the prime end is ambiguous).
    pub fn map_forward_flagged(&self, z: C) -> Option<C> {
        let w = self.map_forward(z);
        (w.im > 0.0 && w.re.is_finite() && w.im.is_finite()).then_some(w)
    }

    /// Preimage of `w` in the closed upper half-plane; on ℝ this is the
    /// boundary point of the corresponding prime end.
    pub fn map_inverse(&self, w: C) -> C {
        let mut z = self.terminal.inverse(w);
        for s in self.steps.iter().rev() {
            z = s.inverse(z);
        }
        self.initial_inverse(z)
    }

    /// Largest absolute finite corner image; the natural length scale of the
    /// normalized map.
    pub fn scale(&self) -> f64 {
        self.corner_images
            .iter()
            .filter(|u| u.is_finite())
            .fold(0.0f64, |m, u| m.max(u.abs()))
    }
}

/// Finds an interior point next to the start segment of `samples`.
fn interior_witness(samples: &BoundarySamples) -> C {
    let (p0, p1) = (samples.points[0], samples.points[1]);
    let dir = p1 - p0;
    let normal = C::new(-dir.im, dir.re); // left of the walk
    let mid = (p0 + p1) * 0.5;
    let n = samples.len();
    for frac in [0.5, 0.25, 0.1, 0.03, 0.01, 0.003] {
        let w = mid + normal * frac;
        let clearance = (0..n)
            .map(|i| segment_distance(w, samples.points[i], samples.points[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min);
        if winding_number(&samples.points, w) == 1 && clearance > 0.4 * frac * dir.norm() {
            return w;
        }
    }
    mid + normal * 1e-3
}

/// Builds the map for a sampled face walk.
pub fn build_map(samples: &BoundarySamples) -> Result<MapChain> {
    let pts = &samples.points;
    let n = pts.len();
    if n < 3 {
        return Err(Error::Parameter(format!(
            "need at least 3 boundary samples, got {n}"
        )));
    }
    if samples.retrace_of[0].is_some() || samples.retrace_of[1].is_some() {
        return Err(Error::Parameter(
            "walk must start on a non-slit segment".into(),
        ));
    }
    let (z0, z1) = (pts[0], pts[1]);
    let mut chain = MapChain {
        z0,
        z1,
        steps: Vec::with_capacity(n),
        terminal: Terminal {
            shift: 0.0,
            d: f64::INFINITY,
            sign: 1.0,
        },
        corner_images: Vec::new(),
        sample_images: Vec::new(),
    };

    // complex images of fresh samples not yet unzipped
    let mut img: Vec<C> = (0..n)
        .map(|k| {
            if k >= 2 && samples.retrace_of[k].is_none() {
                chain.initial(pts[k])
            } else {
                C::new(f64::NAN, f64::NAN)
            }
        })
        .collect();
    // left (own) and right prime ends of samples already on ℝ
    let mut own = vec![f64::NAN; n];
    let mut right = vec![f64::NAN; n];
    let mut placed: Vec<usize> = vec![1];
    own[1] = 0.0;
    own[0] = f64::INFINITY;
    let mut base = 1;

    for j in 2..n {
        if let Some(i) = samples.retrace_of[j] {
            if right[i].is_nan() {
                return Err(Error::Parameter(format!(
                    "sample {j} retraces segment {i} before it was opened"
                )));
            }
            own[j] = right[i];
            placed.push(j);
            base = j;
            continue;
        }
        let shift = own[base];
        let a = img[j] - shift;
        if !(a.im > 0.0 && a.re.is_finite() && a.im.is_finite()) {
            return Err(Error::NumericalFailure {
                sample: j,
                re: a.re,
                im: a.im,
            });
        }
        let slit = SlitMap::from_tip(a);
        let c = slit.c;
        if !c.is_finite() {
            return Err(Error::Crowding(chain.steps.len()));
        }
        let step = ZipStep { shift, slit };
        own[0] = real_step(&step, own[0]);
        for &k in &placed {
            own[k] = real_step(&step, own[k]);
            if !right[k].is_nan() {
                right[k] = real_step(&step, right[k]);
            }
        }
        own[base] = -c;
        right[base] = c;
        own[j] = 0.0;
        placed.push(j);
        for k in j + 1..n {
            if samples.retrace_of[k].is_none() {
                img[k] = step.forward(img[k]);
            }
        }
        chain.steps.push(step);
        base = j;
    }

    let shift = own[base];
    let d = own[0] - shift;
    chain.terminal = Terminal {
        shift,
        d: if d.is_finite() { d } else { f64::INFINITY },
        sign: 1.0,
    };
    let witness = interior_witness(samples);
    let mut w = chain.initial(witness);
    for s in &chain.steps {
        w = s.forward(w);
    }
    let m = chain.terminal.pre_square(w);
    if (m * m).im < 0.0 {
        chain.terminal.sign = -1.0;
    }

    chain.sample_images = (0..n)
        .map(|k| {
            if k == 0 {
                f64::INFINITY
            } else {
                chain.terminal.real(own[k])
            }
        })
        .collect();
    chain.corner_images = samples
        .anchors
        .iter()
        .map(|&a| chain.sample_images[a])
        .collect();
    if chain.corner_images.iter().any(|u| !u.is_finite()) {
        return Err(Error::Crowding(chain.steps.len()));
    }
    Ok(chain)
}

/// Spread of consecutive corner images along ∂ℍ.
#[derive(Debug, Clone, PartialEq)]
pub struct GapStats {
    /// Consecutive gaps of the sorted corner images, divided by the largest.
    pub normalized_gaps: Vec<f64>,
    pub min_gap: f64,
    pub max_gap: f64,
    /// `max_gap / min_gap`; infinite when two images coincide.
    pub ratio: f64,
}

pub fn gap_stats(chain: &MapChain) -> Option<GapStats> {
    gap_stats_of(&chain.corner_images)
}

pub fn gap_stats_of(images: &[f64]) -> Option<GapStats> {
    if images.len() < 2 {
        return None;
    }
    let mut u = images.to_vec();
    u.sort_by(f64::total_cmp);
    let gaps: Vec<f64> = u.windows(2).map(|w| w[1] - w[0]).collect();
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    Some(GapStats {
        normalized_gaps: gaps.iter().map(|g| g / max_gap).collect(),
        min_gap,
        max_gap,
        ratio: max_gap / min_gap,
    })
}

/// Largest `|Im f(s)|` over the boundary samples (start sample excluded),
/// relative to the map scale.
pub fn boundary_residual(chain: &MapChain, samples: &BoundarySamples) -> f64 {
    let scale = chain.scale().max(f64::MIN_POSITIVE);
    samples.points[1..]
        .iter()
        .map(|&p| chain.map_forward(p).im.abs())
        .fold(0.0, f64::max)
        / scale
}
