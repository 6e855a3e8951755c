use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use conalloc_core::allocation::check_stability;
use conalloc_core::conformal::{build_map, gap_stats, trace_boundary, GapStats};
use conalloc_core::msf::{build_mst, extract_faces};
use conalloc_core::pipeline::{
    audit, coverage, run_pipeline, satedness_report, shortest_tree_edge, verify_connectivity,
    GlobalAllocation, PipelineConfig,
};
use conalloc_core::pointproc::{
    format_points, read_points, sample_poisson, sample_uniform_count, PointSample,
};
use conalloc_core::Error;

use crate::allocfile::AllocationFile;
use crate::args::{Cli, Command, RenderArgs, RunArgs, SampleArgs, StatsArgs, VerifyArgs};
use crate::error::{CliError, Result};
use crate::render::{render_svg, RenderOptions};

pub fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Sample(a) => cmd_sample(a, out),
        Command::Run(a) => cmd_run(a, out, err),
        Command::Render(a) => cmd_render(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Stats(a) => cmd_stats(a, out),
    }
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e))?,
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e))?,
    }
    Ok(())
}

/// Points for a construction: at least three are needed for a face.
pub fn load_points(path: &Path) -> Result<PointSample> {
    let s = read_points(path)?;
    if s.len() < 3 {
        return Err(Error::Degeneracy(format!(
            "{} holds {} point(s); at least 3 are needed",
            path.display(),
            s.len()
        ))
        .into());
    }
    Ok(s)
}

pub fn cmd_sample(a: &SampleArgs, out: &mut dyn Write) -> Result<()> {
    let s = match (a.n, a.intensity) {
        (Some(n), _) => sample_uniform_count(a.domain, n, a.seed)?,
        (None, Some(i)) => sample_poisson(a.domain, i, a.seed)?,
        (None, None) => return Err(CliError::Usage("give --n or --intensity".into())),
    };
    emit(a.output.as_deref(), &format_points(&s), out)
}

fn check_distinct(paths: &[&Path]) -> Result<()> {
    for (i, a) in paths.iter().enumerate() {
        if paths[i + 1..].contains(a) {
            return Err(CliError::Usage(format!("{} is used twice", a.display())));
        }
    }
    Ok(())
}

pub fn cmd_run(a: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    if !(a.grid > 0.0 && a.grid.is_finite()) {
        return Err(CliError::Usage(format!(
            "--grid must be positive, got {}",
            a.grid
        )));
    }
    if let Some(s) = a.spacing {
        if !(s > 0.0 && s.is_finite()) {
            return Err(CliError::Usage(format!(
                "--spacing must be positive, got {s}"
            )));
        }
    }
    let diag_path = a.diagnostics.clone().or_else(|| {
        a.output.as_ref().map(|o| {
            let mut p = o.clone().into_os_string();
            p.push(".diag.txt");
            p.into()
        })
    });
    let mut paths = vec![a.points.as_path()];
    paths.extend(a.output.as_deref());
    paths.extend(diag_path.as_deref());
    check_distinct(&paths)?;

    let sample = load_points(&a.points)?;
    let config = PipelineConfig {
        h: a.grid,
        mode: a.mode,
        spacing: a.spacing,
        retries: a.retries,
    };
    let g = run_pipeline(&sample, &config)?;
    emit(
        a.output.as_deref(),
        &AllocationFile::from_global(&g).format(),
        out,
    )?;
    let (report, unstable) = diagnostics(&g);
    emit(diag_path.as_deref(), &report, err)?;
    if let Some(face) = unstable {
        return Err(CliError::Invariant(format!(
            "face {face} allocation is not stable"
        )));
    }
    let failed = g.failed_faces();
    if !failed.is_empty() {
        return Err(CliError::PartialFailure {
            count: failed.len(),
        });
    }
    Ok(())
}

fn fmt_ratio(g: &Option<GapStats>) -> String {
    g.as_ref().map_or("-".into(), |g| format!("{:e}", g.ratio))
}

/// `key: value` report of a run. Also returns the first face whose stored
/// assignment fails the stability check.
pub fn diagnostics(g: &GlobalAllocation) -> (String, Option<usize>) {
    let mut s = String::new();
    let conn = verify_connectivity(g);
    let sat = satedness_report(g);
    let (cell_area, hull) = coverage(g);
    let claimed = g.count(|o| o.vertex().is_some());
    let _ = writeln!(s, "points: {}", g.sample.len());
    let _ = writeln!(s, "faces: {}", g.faces.len());
    let _ = writeln!(s, "grid: {}", g.config.h);
    let _ = writeln!(s, "mode: {}", g.config.mode);
    let _ = writeln!(s, "cells: {}", g.cell_count());
    let _ = writeln!(s, "claimed_cells: {claimed}");
    let _ = writeln!(s, "unclaimed_cells: {}", sat.unclaimed_cells);
    let _ = writeln!(s, "undefined_cells: {}", sat.undefined_cells);
    let _ = writeln!(s, "cell_area: {cell_area}");
    let _ = writeln!(s, "hull_area: {hull}");
    let _ = writeln!(
        s,
        "unclaimed_fraction_of_hull: {}",
        sat.unclaimed_cells as f64 * g.cell_measure() / hull
    );
    let _ = writeln!(s, "failed_faces: {}", g.failed_faces().len());
    let _ = writeln!(s, "unsated_sectors: {}", sat.unsated_sectors);
    let _ = writeln!(
        s,
        "satedness_out_of_tolerance: {}",
        sat.out_of_tolerance.len()
    );
    let _ = writeln!(
        s,
        "dichotomy_violations: {}",
        sat.dichotomy_violations.len()
    );
    let _ = writeln!(s, "connected_fraction: {}", conn.connected_fraction);
    let max_ratio = g
        .faces
        .iter()
        .filter_map(|f| f.diagnostics.gaps.as_ref().map(|x| x.ratio))
        .fold(0.0f64, f64::max);
    let _ = writeln!(s, "max_gap_ratio: {max_ratio:e}");

    let mut unstable = None;
    let mut stable_faces = 0;
    for f in &g.faces {
        let d = &f.diagnostics;
        let stable = match f.allocation() {
            Some(a) => {
                let ok = check_stability(&a.sites, &a.centers, &a.assignment).stable;
                if !ok && unstable.is_none() {
                    unstable = Some(f.face.id);
                }
                stable_faces += usize::from(ok);
                if ok {
                    "yes"
                } else {
                    "no"
                }
            }
            None => "failed",
        };
        let _ = writeln!(
            s,
            "face {}: corners {} cells {} samples {} spacing {:e} attempts {} residual {:e} stages {} ties {} jittered {} lost {} gap_ratio {} stable {}",
            f.face.id,
            d.corners,
            f.cells.len(),
            d.samples,
            d.spacing,
            d.attempts,
            d.boundary_residual,
            d.stage_count,
            d.ties,
            d.jittered,
            d.lost,
            fmt_ratio(&d.gaps),
            stable
        );
    }
    let _ = writeln!(s, "stable_faces: {stable_faces}");
    for (v, c) in conn.components.iter().enumerate() {
        if *c > 1 {
            let _ = writeln!(s, "territory {v}: components {c}");
        }
    }
    (s, unstable)
}

pub fn cmd_render(a: &RenderArgs, out: &mut dyn Write) -> Result<()> {
    let file = AllocationFile::read(&a.allocation)?;
    let sample = load_points(&a.points)?;
    if file.point_count != sample.len() {
        return Err(CliError::Consistency(format!(
            "allocation is for {} points, {} has {}",
            file.point_count,
            a.points.display(),
            sample.len()
        )));
    }
    if let Some(r) = file.records.iter().find(|r| match r.owner {
        crate::allocfile::FileOwner::Center(v) => v >= sample.len(),
        _ => false,
    }) {
        return Err(CliError::Consistency(format!(
            "cell ({}, {}) names a point outside the points file",
            r.ix, r.iy
        )));
    }
    if !(a.tree_width >= 0.0 && a.point_radius >= 0.0 && a.width > 0) {
        return Err(CliError::Usage("render sizes must be nonnegative".into()));
    }
    let forest = build_mst(&sample)?;
    let opts = RenderOptions {
        palette_seed: a.palette_seed,
        tree_width: a.tree_width,
        point_radius: a.point_radius,
        draw_tree: !a.no_tree,
        draw_points: !a.no_points,
        width: a.width,
    };
    emit(
        a.output.as_deref(),
        &render_svg(&file, &sample, &forest, &opts),
        out,
    )
}

pub fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<()> {
    let file = AllocationFile::read(&a.allocation)?;
    let sample = load_points(&a.points)?;
    if file.point_count != sample.len() {
        return Err(CliError::Consistency(format!(
            "allocation is for {} points, {} has {}",
            file.point_count,
            a.points.display(),
            sample.len()
        )));
    }
    let fresh = run_pipeline(&sample, &file.config())?;
    let g = fresh.with_owners(file.owners_for(&fresh)?)?;
    let failures = audit(&g);
    let conn = verify_connectivity(&g);
    let sat = satedness_report(&g);
    let mut s = String::new();
    let _ = writeln!(s, "faces: {}", g.faces.len());
    let _ = writeln!(s, "cells: {}", g.cell_count());
    let _ = writeln!(s, "failed_faces: {}", g.failed_faces().len());
    let _ = writeln!(s, "connected_fraction: {}", conn.connected_fraction);
    let _ = writeln!(s, "unsated_sectors: {}", sat.unsated_sectors);
    let _ = writeln!(s, "unclaimed_cells: {}", sat.unclaimed_cells);
    let _ = writeln!(
        s,
        "satedness_out_of_tolerance: {}",
        sat.out_of_tolerance.len()
    );
    let _ = writeln!(s, "invariant_failures: {}", failures.len());
    for f in &failures {
        let _ = writeln!(s, "failure: {f}");
    }
    let _ = writeln!(
        s,
        "verdict: {}",
        if failures.is_empty() {
            "ok"
        } else {
            "violated"
        }
    );
    emit(None, &s, out)?;
    match failures.first() {
        Some(f) => Err(CliError::Invariant(f.to_string())),
        None => Ok(()),
    }
}

/// Gap statistics of every face map, as printed by `stats`.
#[derive(Debug)]
pub struct FaceGaps {
    pub face: usize,
    pub corners: usize,
    pub samples: usize,
    pub gaps: Result<Option<GapStats>>,
}

pub fn face_gaps(sample: &PointSample, spacing: Option<f64>) -> Result<Vec<FaceGaps>> {
    let forest = build_mst(sample)?;
    let faces = extract_faces(sample, &forest)?;
    let mut out = Vec::with_capacity(faces.len());
    for face in &faces {
        let base = spacing.unwrap_or_else(|| shortest_tree_edge(face) / 4.0);
        let mut result = Err(CliError::Usage("no attempt".into()));
        let mut samples = 0;
        for attempt in 0..3 {
            let bs = trace_boundary(face, base / f64::from(1u32 << attempt))?;
            samples = bs.len();
            match build_map(&bs) {
                Ok(chain) => {
                    result = Ok(gap_stats(&chain));
                    break;
                }
                Err(e) => result = Err(e.into()),
            }
        }
        out.push(FaceGaps {
            face: face.id,
            corners: face.corner_count(),
            samples,
            gaps: result,
        });
    }
    Ok(out)
}

pub fn cmd_stats(a: &StatsArgs, out: &mut dyn Write) -> Result<()> {
    if let Some(s) = a.spacing {
        if !(s > 0.0 && s.is_finite()) {
            return Err(CliError::Usage(format!(
                "--spacing must be positive, got {s}"
            )));
        }
    }
    let sample = load_points(&a.points)?;
    let faces = face_gaps(&sample, a.spacing)?;
    let mut s = String::new();
    let mut max_ratio = 0.0f64;
    let mut histogram: BTreeMap<i32, usize> = BTreeMap::new();
    let _ = writeln!(s, "points: {}", sample.len());
    let _ = writeln!(s, "faces: {}", faces.len());
    for f in &faces {
        match &f.gaps {
            Ok(Some(g)) => {
                max_ratio = max_ratio.max(g.ratio);
                let _ = writeln!(
                    s,
                    "face {}: corners {} samples {} min_gap {:e} max_gap {:e} ratio {:e}",
                    f.face, f.corners, f.samples, g.min_gap, g.max_gap, g.ratio
                );
                let list: Vec<String> =
                    g.normalized_gaps.iter().map(|x| format!("{x:e}")).collect();
                let _ = writeln!(s, "face {} gaps: {}", f.face, list.join(" "));
                for x in &g.normalized_gaps {
                    let bin = if *x > 0.0 {
                        x.log10().floor() as i32
                    } else {
                        i32::MIN
                    };
                    *histogram.entry(bin).or_default() += 1;
                }
            }
            Ok(None) => {
                let _ = writeln!(
                    s,
                    "face {}: corners {} samples {} ratio -",
                    f.face, f.corners, f.samples
                );
            }
            Err(e) => {
                let _ = writeln!(
                    s,
                    "face {}: corners {} samples {} failed {e}",
                    f.face, f.corners, f.samples
                );
            }
        }
    }
    let _ = writeln!(s, "max_ratio: {max_ratio:e}");
    for (bin, count) in histogram {
        if bin == i32::MIN {
            let _ = writeln!(s, "log10_gap zero: {count}");
        } else {
            let _ = writeln!(s, "log10_gap [{bin},{}): {count}", bin + 1);
        }
    }
    emit(None, &s, out)
}
