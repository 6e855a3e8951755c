//! Small planar geometry kit. Points are `Complex64` throughout so the same
//! type serves the source plane and the half-plane.

use std::f64::consts::TAU;

use num_complex::Complex64;

pub type Point = Complex64;

#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Twice the signed area of triangle `abc`; positive when counterclockwise.
#[inline]
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(b - a, c - a)
}

/// Signed shoelace area of a closed polygon (last vertex joins the first).
pub fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        s += cross(poly[i], poly[(i + 1) % n]);
    }
    0.5 * s
}

/// Convex hull indices in counterclockwise order (Andrew's monotone chain).
/// Collinear boundary points are dropped.
pub fn convex_hull(points: &[Point]) -> Vec<usize> {
    let n = points.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        points[a]
            .re
            .total_cmp(&points[b].re)
            .then(points[a].im.total_cmp(&points[b].im))
    });
    if n < 3 {
        return idx;
    }
    let mut hull: Vec<usize> = Vec::with_capacity(2 * n);
    let push = |hull: &mut Vec<usize>, i: usize, floor: usize| {
        while hull.len() >= floor + 2 {
            let a = points[hull[hull.len() - 2]];
            let b = points[hull[hull.len() - 1]];
            if orient(a, b, points[i]) <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    };
    for &i in &idx {
        push(&mut hull, i, 0);
    }
    let lower = hull.len() - 1;
    for &i in idx.iter().rev().skip(1) {
        push(&mut hull, i, lower);
    }
    hull.pop();
    if hull.len() < 3 {
        return Vec::new();
    }
    hull
}

pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).re * ab.re + (p - a).im * ab.im) / len2;
    let t = t.clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Winding number of a closed polygon around `p`. Doubly traversed slit
/// edges cancel, so this works for walks of faces with dangling trees.
pub fn winding_number(poly: &[Point], p: Point) -> i32 {
    let n = poly.len();
    let mut w = 0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if a.im <= p.im {
            if b.im > p.im && orient(a, b, p) > 0.0 {
                w += 1;
            }
        } else if b.im <= p.im && orient(a, b, p) < 0.0 {
            w -= 1;
        }
    }
    w
}

/// Counterclockwise angle from direction `from` to direction `to`, in `(0, 2π]`.
pub fn ccw_angle(from: Point, to: Point) -> f64 {
    let mut a = to.arg() - from.arg();
    while a <= 0.0 {
        a += TAU;
    }
    while a > TAU {
        a -= TAU;
    }
    a
}
