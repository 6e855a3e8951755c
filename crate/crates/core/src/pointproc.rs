//! Finite planar point configurations: seeded Poisson and fixed-count
//! uniform samplers, the plain-text points format, and general-position
//! enforcement.
//!
//! Randomness comes from `ChaCha8Rng` seeded with `seed_from_u64`. The
//! generator is portable across platforms and its output is fixed by the
//! `rand_chacha` version, so a `(domain, parameters, seed)` triple always
//! reproduces the same sample bit for bit. Independent streams of the same
//! seed are used for point placement and for tie-breaking jitter.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::geom::Point;
use crate::{Error, Result};

const POINT_STREAM: u64 = 0;
const JITTER_STREAM: u64 = 1;

/// Magnitude of the deterministic perturbation applied to break distance ties.
pub const JITTER: f64 = 1e-9;
/// Two pairwise distances closer than this count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;
/// Above this many points the O(n² log n) tie scan is skipped.
pub const GENERAL_POSITION_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Disk { center: Point, radius: f64 },
    Rectangle { min: Point, max: Point },
}

impl Domain {
    pub fn unit_disk() -> Self {
        Domain::Disk {
            center: Complex64::new(0.0, 0.0),
            radius: 1.0,
        }
    }

    pub fn unit_square() -> Self {
        Domain::rectangle(1.0, 1.0).unwrap()
    }

    pub fn disk(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Parameter(format!(
                "disk radius must be positive, got {radius}"
            )));
        }
        Ok(Domain::Disk { center, radius })
    }

    /// Rectangle `[0, width] × [0, height]`.
    pub fn rectangle(width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(Error::Parameter(format!(
                "rectangle must have positive width and height, got {width}x{height}"
            )));
        }
        Ok(Domain::Rectangle {
            min: Complex64::new(0.0, 0.0),
            max: Complex64::new(width, height),
        })
    }

    pub fn area(&self) -> f64 {
        match *self {
            Domain::Disk { radius, .. } => std::f64::consts::PI * radius * radius,
            Domain::Rectangle { min, max } => (max.re - min.re) * (max.im - min.im),
        }
    }

    /// Strict interior test.
    pub fn contains(&self, p: Point) -> bool {
        match *self {
            Domain::Disk { center, radius } => (p - center).norm_sqr() < radius * radius,
            Domain::Rectangle { min, max } => {
                p.re > min.re && p.re < max.re && p.im > min.im && p.im < max.im
            }
        }
    }

    fn bounding_box(&self) -> (Point, Point) {
        match *self {
            Domain::Disk { center, radius } => (
                center - Complex64::new(radius, radius),
                center + Complex64::new(radius, radius),
            ),
            Domain::Rectangle { min, max } => (min, max),
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Point {
        let (lo, hi) = self.bounding_box();
        loop {
            let p = Complex64::new(
                lo.re + (hi.re - lo.re) * rng.random::<f64>(),
                lo.im + (hi.im - lo.im) * rng.random::<f64>(),
            );
            if self.contains(p) {
                return p;
            }
        }
    }

    fn describe(&self) -> String {
        match *self {
            Domain::Disk { center, radius } => {
                format!("disk {} {} {}", center.re, center.im, radius)
            }
            Domain::Rectangle { min, max } => {
                format!("rect {} {} {} {}", min.re, min.im, max.re, max.im)
            }
        }
    }

    fn parse_descriptor(words: &[&str]) -> Option<Self> {
        let nums: Vec<f64> = words[1..].iter().filter_map(|w| w.parse().ok()).collect();
        match (words.first().copied(), nums.as_slice()) {
            (Some("disk"), [x, y, r]) => Domain::disk(Complex64::new(*x, *y), *r).ok(),
            (Some("rect"), [x0, y0, x1, y1]) if x1 > x0 && y1 > y0 => Some(Domain::Rectangle {
                min: Complex64::new(*x0, *y0),
                max: Complex64::new(*x1, *y1),
            }),
            _ => None,
        }
    }
}

/// How a sample was produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generation {
    Poisson { intensity: f64 },
    UniformCount { n: usize },
    File,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointSample {
    pub points: Vec<Point>,
    /// `None` for samples read from a file without a domain comment.
    pub domain: Option<Domain>,
    pub seed: u64,
    pub generation: Generation,
}

impl PointSample {
    pub fn from_points(points: Vec<Point>) -> Self {
        PointSample {
            points,
            domain: None,
            seed: 0,
            generation: Generation::File,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Homogeneous Poisson process of the given intensity restricted to `domain`.
///
/// Zero intensity yields an empty sample; negative or non-finite intensity is
/// rejected.
pub fn sample_poisson(domain: Domain, intensity: f64, seed: u64) -> Result<PointSample> {
    if !(intensity >= 0.0 && intensity.is_finite()) {
        return Err(Error::Parameter(format!(
            "intensity must be a nonnegative finite number, got {intensity}"
        )));
    }
    let mut rng = rng_for(seed, POINT_STREAM);
    let mean = intensity * domain.area();
    let count = if mean == 0.0 {
        0
    } else {
        let law = Poisson::new(mean).map_err(|e| Error::Parameter(e.to_string()))?;
        let c: f64 = law.sample(&mut rng);
        c as usize
    };
    let points = (0..count).map(|_| domain.draw(&mut rng)).collect();
    let mut sample = PointSample {
        points,
        domain: Some(domain),
        seed,
        generation: Generation::Poisson { intensity },
    };
    enforce_general_position(&mut sample);
    Ok(sample)
}

/// `n` i.i.d. uniform points in `domain`.
pub fn sample_uniform_count(domain: Domain, n: usize, seed: u64) -> Result<PointSample> {
    if n == 0 {
        return Err(Error::Parameter("point count must be at least 1".into()));
    }
    let mut rng = rng_for(seed, POINT_STREAM);
    let points = (0..n).map(|_| domain.draw(&mut rng)).collect();
    let mut sample = PointSample {
        points,
        domain: Some(domain),
        seed,
        generation: Generation::UniformCount { n },
    };
    enforce_general_position(&mut sample);
    Ok(sample)
}

/// Returns the first pair of point pairs whose distances tie within
/// [`TIE_TOLERANCE`], if any. Coincident points count as a tie with themselves.
pub fn find_distance_tie(points: &[Point]) -> Option<((usize, usize), (usize, usize))> {
    let n = points.len();
    let mut d: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let dist = (points[i] - points[j]).norm();
            if dist <= TIE_TOLERANCE {
                return Some(((i, j), (i, j)));
            }
            d.push((dist, i, j));
        }
    }
    d.sort_by(|a, b| a.0.total_cmp(&b.0));
    d.windows(2)
        .find(|w| w[1].0 - w[0].0 <= TIE_TOLERANCE)
        .map(|w| ((w[0].1, w[0].2), (w[1].1, w[1].2)))
}

/// Perturbs points by [`JITTER`] until all pairwise distances are distinct.
/// Samples above [`GENERAL_POSITION_LIMIT`] points are left untouched.
pub fn enforce_general_position(sample: &mut PointSample) {
    if sample.points.len() > GENERAL_POSITION_LIMIT {
        return;
    }
    let mut rng = rng_for(sample.seed, JITTER_STREAM);
    while let Some((_, (_, j))) = find_distance_tie(&sample.points) {
        let old = sample.points[j];
        loop {
            let theta = rng.random::<f64>() * std::f64::consts::TAU;
            let moved = old + Complex64::from_polar(JITTER, theta);
            if sample.domain.is_none_or(|d| d.contains(moved)) {
                sample.points[j] = moved;
                break;
            }
        }
    }
}

/// Renders a sample in the points text format.
pub fn format_points(sample: &PointSample) -> String {
    let mut out = String::new();
    if let Some(d) = &sample.domain {
        let _ = writeln!(out, "# domain {}", d.describe());
    }
    match sample.generation {
        Generation::Poisson { intensity } => {
            let _ = writeln!(out, "# poisson intensity {intensity} seed {}", sample.seed);
        }
        Generation::UniformCount { n } => {
            let _ = writeln!(out, "# uniform n {n} seed {}", sample.seed);
        }
        Generation::File => {}
    }
    for p in &sample.points {
        let _ = writeln!(out, "{} {}", p.re, p.im);
    }
    out
}

pub fn write_points(sample: &PointSample, path: &Path) -> Result<()> {
    fs::write(path, format_points(sample)).map_err(|e| Error::io(path, e))
}

/// Parses the points text format. `origin` only labels parse errors.
pub fn parse_points(text: &str, origin: &Path) -> Result<PointSample> {
    let mut points = Vec::new();
    let mut domain = None;
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let words: Vec<&str> = comment.split_whitespace().collect();
            if words.first() == Some(&"domain") {
                domain = Domain::parse_descriptor(&words[1..]);
            }
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line: k + 1,
            msg,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(err(format!(
                "expected two coordinates, found {}",
                fields.len()
            )));
        }
        let x: f64 = fields[0]
            .parse()
            .map_err(|_| err(format!("bad coordinate {:?}", fields[0])))?;
        let y: f64 = fields[1]
            .parse()
            .map_err(|_| err(format!("bad coordinate {:?}", fields[1])))?;
        if !(x.is_finite() && y.is_finite()) {
            return Err(err("non-finite coordinate".into()));
        }
        points.push(Complex64::new(x, y));
    }
    if points.is_empty() {
        warn!("{}: no points", origin.display());
    }
    Ok(PointSample {
        points,
        domain,
        seed: 0,
        generation: Generation::File,
    })
}

pub fn read_points(path: &Path) -> Result<PointSample> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_points(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_intensity_is_empty() {
        let s = sample_poisson(Domain::unit_square(), 0.0, 3).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn negative_intensity_rejected() {
        assert!(matches!(
            sample_poisson(Domain::unit_square(), -1.0, 3),
            Err(Error::Parameter(_))
        ));
        assert!(sample_poisson(Domain::unit_square(), f64::NAN, 3).is_err());
    }

    #[test]
    fn poisson_mean_count() {
        let seeds = 1000;
        let total: usize = (0..seeds)
            .map(|s| {
                sample_poisson(Domain::unit_square(), 100.0, s)
                    .unwrap()
                    .len()
            })
            .sum();
        let mean = total as f64 / seeds as f64;
        assert!((mean - 100.0).abs() < 30.0, "mean {mean}");
        // the mean itself has sd 10/sqrt(1000) ≈ 0.32
        assert!((mean - 100.0).abs() < 1.5, "mean {mean}");
    }

    #[test]
    fn poisson_in_disk_is_contained() {
        let s = sample_poisson(Domain::unit_disk(), 52.2, 7).unwrap();
        assert!(!s.is_empty());
        assert!(s.points.iter().all(|p| p.norm_sqr() < 1.0));
    }

    #[test]
    fn uniform_count_exact() {
        let s = sample_uniform_count(Domain::unit_disk(), 164, 1).unwrap();
        assert_eq!(s.len(), 164);
        assert!(s.points.iter().all(|p| p.norm_sqr() < 1.0));
        assert_eq!(
            sample_uniform_count(Domain::unit_disk(), 1, 9)
                .unwrap()
                .len(),
            1
        );
        assert!(sample_uniform_count(Domain::unit_disk(), 0, 9).is_err());
    }

    #[test]
    fn uniform_subdisk_fraction() {
        let s = sample_uniform_count(Domain::unit_disk(), 100_000, 11).unwrap();
        let inner = s.points.iter().filter(|p| p.norm_sqr() < 0.25).count();
        let frac = inner as f64 / s.len() as f64;
        assert!((frac - 0.25).abs() < 0.01, "fraction {frac}");
    }

    #[test]
    fn deterministic_per_seed() {
        let a = sample_uniform_count(Domain::unit_disk(), 50, 5).unwrap();
        let b = sample_uniform_count(Domain::unit_disk(), 50, 5).unwrap();
        let c = sample_uniform_count(Domain::unit_disk(), 50, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn ties_are_broken() {
        let mut s = PointSample::from_points(vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(1.0, 1.0),
        ]);
        assert!(find_distance_tie(&s.points).is_some());
        enforce_general_position(&mut s);
        assert!(find_distance_tie(&s.points).is_none());
        for (p, q) in s
            .points
            .iter()
            .zip([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)])
        {
            assert!((p - Complex64::new(q.0, q.1)).norm() <= 10.0 * JITTER);
        }
    }

    #[test]
    fn single_coordinate_line_is_parse_error() {
        let err = parse_points("0.1 0.2\n0.5\n", Path::new("pts.txt")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_text_is_empty_sample() {
        let s = parse_points("# nothing here\n\n", Path::new("e.txt")).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn domain_comment_round_trips() {
        let s = sample_uniform_count(Domain::unit_disk(), 10, 2).unwrap();
        let back = parse_points(&format_points(&s), Path::new("x")).unwrap();
        assert_eq!(back.domain, s.domain);
        assert_eq!(back.points, s.points);
    }
}
