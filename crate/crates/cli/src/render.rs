//! SVG drawing of an allocation: territories as merged row runs of cells,
//! the tree on top, centers as dots. The y axis points up as in the plane.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use conalloc_core::msf::Forest;
use conalloc_core::pointproc::PointSample;

use crate::allocfile::{AllocationFile, FileOwner};

#[derive(Debug, Clone)]
pub struct RenderOptions {
    pub palette_seed: u64,
    /// Fractions of the larger picture side.
    pub tree_width: f64,
    pub point_radius: f64,
    pub draw_tree: bool,
    pub draw_points: bool,
    pub width: u32,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            palette_seed: 0,
            tree_width: 0.002,
            point_radius: 0.003,
            draw_tree: true,
            draw_points: true,
            width: 800,
        }
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn hsl_to_rgb(h: f64, s: f64, l: f64) -> (u8, u8, u8) {
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    let to = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    (to(r), to(g), to(b))
}

/// Fill color of a center: hashed hue with some spread in saturation and
/// lightness, as `#rrggbb`.
pub fn territory_color(id: usize, seed: u64) -> String {
    let bits = splitmix(splitmix(id as u64) ^ seed);
    let hue = (bits % 360) as f64;
    let sat = 0.45 + 0.35 * ((bits >> 16) % 100) as f64 / 100.0;
    let light = 0.55 + 0.2 * ((bits >> 32) % 100) as f64 / 100.0;
    let (r, g, b) = hsl_to_rgb(hue, sat, light);
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn fill(owner: FileOwner, seed: u64) -> String {
    match owner {
        FileOwner::Center(v) => territory_color(v, seed),
        FileOwner::Unclaimed => "#ffffff".into(),
        FileOwner::Undefined => "url(#undefined)".into(),
    }
}

pub fn render_svg(
    file: &AllocationFile,
    sample: &PointSample,
    forest: &Forest,
    opts: &RenderOptions,
) -> String {
    let h = file.h;
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in &sample.points {
        x0 = x0.min(p.re);
        x1 = x1.max(p.re);
        y0 = y0.min(p.im);
        y1 = y1.max(p.im);
    }
    for r in &file.records {
        x0 = x0.min(r.ix as f64 * h);
        x1 = x1.max((r.ix + 1) as f64 * h);
        y0 = y0.min(r.iy as f64 * h);
        y1 = y1.max((r.iy + 1) as f64 * h);
    }
    if x0 > x1 {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let size = (x1 - x0).max(y1 - y0).max(f64::MIN_POSITIVE);
    let margin = 0.03 * size;
    let (vx, vy) = (x0 - margin, -(y1 + margin));
    let (vw, vh) = (x1 - x0 + 2.0 * margin, y1 - y0 + 2.0 * margin);
    let height = (opts.width as f64 * vh / vw).round() as u32;

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="{:.6} {:.6} {:.6} {:.6}">"#,
        opts.width, height, vx, vy, vw, vh
    );
    let _ = writeln!(
        out,
        r##"<defs><pattern id="undefined" patternUnits="userSpaceOnUse" width="{w:.6}" height="{w:.6}"><rect width="{w:.6}" height="{w:.6}" fill="#eeeeee"/><path d="M0,{w:.6} L{w:.6},0" stroke="#888888" stroke-width="{s:.6}"/></pattern></defs>"##,
        w = 4.0 * h,
        s = 0.5 * h
    );
    let _ = writeln!(
        out,
        r##"<rect x="{vx:.6}" y="{vy:.6}" width="{vw:.6}" height="{vh:.6}" fill="#ffffff"/>"##
    );

    // rows of cells, merged into runs of equal fill
    let mut rows: BTreeMap<i64, Vec<(i64, FileOwner)>> = BTreeMap::new();
    for r in &file.records {
        rows.entry(r.iy).or_default().push((r.ix, r.owner));
    }
    let _ = writeln!(out, r#"<g shape-rendering="crispEdges" stroke="none">"#);
    for (iy, mut row) in rows.into_iter().rev() {
        row.sort_by_key(|c| c.0);
        let mut k = 0;
        while k < row.len() {
            let (start, owner) = row[k];
            let mut end = start;
            while k + 1 < row.len() && row[k + 1].0 == end + 1 && row[k + 1].1 == owner {
                k += 1;
                end += 1;
            }
            k += 1;
            let _ = writeln!(
                out,
                r#"<rect x="{:.6}" y="{:.6}" width="{:.6}" height="{:.6}" fill="{}"/>"#,
                start as f64 * h,
                -((iy + 1) as f64 * h),
                (end - start + 1) as f64 * h,
                h,
                fill(owner, opts.palette_seed)
            );
        }
    }
    out.push_str("</g>\n");

    let pts = &sample.points;
    if opts.draw_tree {
        let _ = writeln!(
            out,
            r##"<g stroke="#202020" stroke-width="{:.6}" stroke-linecap="round">"##,
            opts.tree_width * size
        );
        for e in &forest.edges {
            let (a, b) = (pts[e.a], pts[e.b]);
            let _ = writeln!(
                out,
                r#"<line x1="{:.6}" y1="{:.6}" x2="{:.6}" y2="{:.6}"/>"#,
                a.re, -a.im, b.re, -b.im
            );
        }
        out.push_str("</g>\n");
    }
    if opts.draw_points {
        let _ = writeln!(out, r##"<g fill="#000000">"##);
        for p in pts {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.6}" cy="{:.6}" r="{:.6}"/>"#,
                p.re,
                -p.im,
                opts.point_radius * size
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocfile::Record;
    use conalloc_core::msf::build_mst;
    use conalloc_core::pipeline::AppetiteMode;
    use conalloc_core::Complex64;

    fn one_owner_file() -> (AllocationFile, PointSample) {
        let sample = PointSample::from_points(vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
        ]);
        let records = (0..4)
            .flat_map(|iy| {
                (0..4).map(move |ix| Record {
                    face: 0,
                    ix,
                    iy,
                    corner: Some(0),
                    owner: FileOwner::Center(0),
                })
            })
            .collect();
        let file = AllocationFile {
            h: 0.25,
            mode: AppetiteMode::Figure,
            spacing: None,
            retries: 2,
            point_count: 3,
            face_count: 1,
            records,
        };
        (file, sample)
    }

    #[test]
    fn colors_are_hex_and_stable() {
        let c = territory_color(17, 0);
        assert_eq!(c.len(), 7);
        assert!(c.starts_with('#') && c[1..].chars().all(|ch| ch.is_ascii_hexdigit()));
        assert_eq!(c, territory_color(17, 0));
        assert_ne!(territory_color(17, 0), territory_color(17, 1));
        let distinct: std::collections::HashSet<String> =
            (0..200).map(|i| territory_color(i, 0)).collect();
        assert!(distinct.len() > 190);
    }

    #[test]
    fn hsl_primaries() {
        assert_eq!(hsl_to_rgb(0.0, 1.0, 0.5), (255, 0, 0));
        assert_eq!(hsl_to_rgb(120.0, 1.0, 0.5), (0, 255, 0));
        assert_eq!(hsl_to_rgb(240.0, 1.0, 0.5), (0, 0, 255));
        assert_eq!(hsl_to_rgb(0.0, 0.0, 1.0), (255, 255, 255));
    }

    #[test]
    fn single_owner_rows_merge_into_one_rect_each() {
        let (file, sample) = one_owner_file();
        let forest = build_mst(&sample).unwrap();
        let svg = render_svg(&file, &sample, &forest, &RenderOptions::default());
        let color = territory_color(0, 0);
        assert_eq!(svg.matches(&format!("fill=\"{color}\"")).count(), 4);
        assert_eq!(svg.matches("<line ").count(), 2);
        assert_eq!(svg.matches("<circle ").count(), 3);
        assert_eq!(
            svg,
            render_svg(&file, &sample, &forest, &RenderOptions::default())
        );
    }

    #[test]
    fn unclaimed_is_white_and_undefined_hatched() {
        let (mut file, sample) = one_owner_file();
        file.records[0].owner = FileOwner::Unclaimed;
        file.records[0].corner = None;
        file.records[5].owner = FileOwner::Undefined;
        file.records[5].corner = None;
        let forest = build_mst(&sample).unwrap();
        let opts = RenderOptions {
            draw_tree: false,
            draw_points: false,
            ..Default::default()
        };
        let svg = render_svg(&file, &sample, &forest, &opts);
        assert!(svg.contains(r#"fill="url(#undefined)""#));
        assert!(svg.contains(r##"<rect x="0.000000" y="-0.250000" width="0.250000" height="0.250000" fill="#ffffff"/>"##));
        assert!(!svg.contains("<line "));
        assert!(!svg.contains("<circle "));
    }
}
