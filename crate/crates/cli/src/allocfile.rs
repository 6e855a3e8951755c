//! Tab-separated allocation file, version 1.
//!
//! ```text
//! conalloc-allocation	1
//! h	0.005
//! mode	figure
//! spacing	auto
//! retries	2
//! points	164
//! faces	14
//! cells	111787
//! face	ix	iy	corner	owner
//! 0	12	-3	2	17
//! 0	12	-2	-	UNCLAIMED
//! ```
//!
//! `owner` is a point index; `corner` is the walk position of the owning
//! sector inside its face.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use conalloc_core::pipeline::{AppetiteMode, CellOwner, GlobalAllocation, PipelineConfig};
use conalloc_core::Error;

use crate::error::{CliError, Result};

pub const MAGIC: &str = "conalloc-allocation";
pub const VERSION: u32 = 1;
const COLUMNS: &str = "face\tix\tiy\tcorner\towner";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileOwner {
    Center(usize),
    Unclaimed,
    Undefined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Record {
    pub face: usize,
    pub ix: i64,
    pub iy: i64,
    pub corner: Option<usize>,
    pub owner: FileOwner,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationFile {
    pub h: f64,
    pub mode: AppetiteMode,
    pub spacing: Option<f64>,
    pub retries: usize,
    pub point_count: usize,
    pub face_count: usize,
    pub records: Vec<Record>,
}

impl AllocationFile {
    pub fn from_global(g: &GlobalAllocation) -> Self {
        let mut records = Vec::with_capacity(g.cell_count());
        for f in &g.faces {
            for (cell, o) in f.cells.iter().zip(&f.owners) {
                let (corner, owner) = match *o {
                    CellOwner::Corner { corner, vertex } => {
                        (Some(corner), FileOwner::Center(vertex))
                    }
                    CellOwner::Unclaimed => (None, FileOwner::Unclaimed),
                    CellOwner::Undefined => (None, FileOwner::Undefined),
                };
                records.push(Record {
                    face: f.face.id,
                    ix: cell.ix,
                    iy: cell.iy,
                    corner,
                    owner,
                });
            }
        }
        AllocationFile {
            h: g.config.h,
            mode: g.config.mode,
            spacing: g.config.spacing,
            retries: g.config.retries,
            point_count: g.sample.len(),
            face_count: g.faces.len(),
            records,
        }
    }

    pub fn config(&self) -> PipelineConfig {
        PipelineConfig {
            h: self.h,
            mode: self.mode,
            spacing: self.spacing,
            retries: self.retries,
        }
    }

    pub fn format(&self) -> String {
        let mut out = String::with_capacity(32 * self.records.len() + 200);
        let _ = writeln!(out, "{MAGIC}\t{VERSION}");
        let _ = writeln!(out, "h\t{}", self.h);
        let _ = writeln!(out, "mode\t{}", self.mode);
        match self.spacing {
            Some(s) => {
                let _ = writeln!(out, "spacing\t{s}");
            }
            None => out.push_str("spacing\tauto\n"),
        }
        let _ = writeln!(out, "retries\t{}", self.retries);
        let _ = writeln!(out, "points\t{}", self.point_count);
        let _ = writeln!(out, "faces\t{}", self.face_count);
        let _ = writeln!(out, "cells\t{}", self.records.len());
        out.push_str(COLUMNS);
        out.push('\n');
        for r in &self.records {
            let _ = write!(out, "{}\t{}\t{}\t", r.face, r.ix, r.iy);
            match r.corner {
                Some(c) => {
                    let _ = write!(out, "{c}");
                }
                None => out.push('-'),
            }
            match r.owner {
                FileOwner::Center(v) => {
                    let _ = writeln!(out, "\t{v}");
                }
                FileOwner::Unclaimed => out.push_str("\tUNCLAIMED\n"),
                FileOwner::Undefined => out.push_str("\tUNDEFINED\n"),
            }
        }
        out
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let err = |line: usize, msg: String| {
            CliError::Core(Error::Parse {
                path: origin.to_path_buf(),
                line,
                msg,
            })
        };
        let mut header = |key: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((k, l)) => match l.split_once('\t') {
                    Some((name, value)) if name == key => Ok((k + 1, value.to_string())),
                    _ => Err(err(k + 1, format!("expected header field {key:?}"))),
                },
                None => Err(err(0, format!("missing header field {key:?}"))),
            }
        };
        let num = |(line, v): (usize, String)| -> Result<usize> {
            v.parse().map_err(|_| err(line, format!("bad count {v:?}")))
        };

        let (line, version) = header(MAGIC)?;
        if version != VERSION.to_string() {
            return Err(err(line, format!("unsupported version {version}")));
        }
        let (line, h) = header("h")?;
        let h: f64 = h
            .parse()
            .map_err(|_| err(line, format!("bad grid size {h:?}")))?;
        if !(h > 0.0 && h.is_finite()) {
            return Err(err(line, format!("grid size must be positive, got {h}")));
        }
        let (line, mode) = header("mode")?;
        let mode: AppetiteMode = mode.parse().map_err(|e: Error| err(line, e.to_string()))?;
        let (line, spacing) = header("spacing")?;
        let spacing = match spacing.as_str() {
            "auto" => None,
            s => Some(
                s.parse::<f64>()
                    .ok()
                    .filter(|x| *x > 0.0 && x.is_finite())
                    .ok_or_else(|| err(line, format!("bad spacing {s:?}")))?,
            ),
        };
        let retries = num(header("retries")?)?;
        let point_count = num(header("points")?)?;
        let face_count = num(header("faces")?)?;
        let (cells_line, cells) = header("cells")?;
        let cells = num((cells_line, cells))?;
        match lines.next() {
            Some((_, l)) if l == COLUMNS => {}
            Some((k, _)) => return Err(err(k + 1, "expected column header".into())),
            None => return Err(err(0, "missing column header".into())),
        }

        let mut records = Vec::with_capacity(cells);
        for (k, l) in lines {
            let f: Vec<&str> = l.split('\t').collect();
            if f.len() != 5 {
                return Err(err(k + 1, format!("expected 5 fields, found {}", f.len())));
            }
            let int = |s: &str| -> Result<i64> {
                s.parse()
                    .map_err(|_| err(k + 1, format!("bad integer {s:?}")))
            };
            let index = |s: &str| -> Result<usize> {
                s.parse()
                    .map_err(|_| err(k + 1, format!("bad index {s:?}")))
            };
            let corner = match f[3] {
                "-" => None,
                s => Some(index(s)?),
            };
            let owner = match f[4] {
                "UNCLAIMED" => FileOwner::Unclaimed,
                "UNDEFINED" => FileOwner::Undefined,
                s => FileOwner::Center(index(s)?),
            };
            if corner.is_some() != matches!(owner, FileOwner::Center(_)) {
                return Err(err(
                    k + 1,
                    "corner must be given exactly for owned cells".into(),
                ));
            }
            records.push(Record {
                face: index(f[0])?,
                ix: int(f[1])?,
                iy: int(f[2])?,
                corner,
                owner,
            });
        }
        if records.len() != cells {
            return Err(err(
                cells_line,
                format!(
                    "header announces {cells} cells, file holds {}",
                    records.len()
                ),
            ));
        }
        Ok(AllocationFile {
            h,
            mode,
            spacing,
            retries,
            point_count,
            face_count,
            records,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.format()).map_err(|e| CliError::Core(Error::io(path, e)))
    }

    /// Per-face owners for the cells of `g`, taken from this file. The
    /// `owner` column decides; `corner` only picks among several sectors of
    /// the same point. A cell given to a point that does not bound its face
    /// is an invariant violation.
    pub fn owners_for(&self, g: &GlobalAllocation) -> Result<Vec<Vec<CellOwner>>> {
        if self.point_count != g.sample.len() {
            return Err(CliError::Consistency(format!(
                "allocation is for {} points, points file has {}",
                self.point_count,
                g.sample.len()
            )));
        }
        if self.face_count != g.faces.len() || self.records.len() != g.cell_count() {
            return Err(CliError::Consistency(format!(
                "allocation has {} faces and {} cells, the points give {} and {}",
                self.face_count,
                self.records.len(),
                g.faces.len(),
                g.cell_count()
            )));
        }
        let mut records = self.records.iter();
        let mut out = Vec::with_capacity(g.faces.len());
        for f in &g.faces {
            let mut owners = Vec::with_capacity(f.cells.len());
            for cell in &f.cells {
                let r = records.next().expect("record count checked");
                if (r.face, r.ix, r.iy) != (f.face.id, cell.ix, cell.iy) {
                    return Err(CliError::Consistency(format!(
                        "record for cell ({}, {}) of face {} found where cell ({}, {}) of face {} belongs",
                        r.ix, r.iy, r.face, cell.ix, cell.iy, f.face.id
                    )));
                }
                owners.push(match r.owner {
                    FileOwner::Unclaimed => CellOwner::Unclaimed,
                    FileOwner::Undefined => CellOwner::Undefined,
                    FileOwner::Center(v) => {
                        let corners: Vec<usize> = f
                            .face
                            .steps
                            .iter()
                            .enumerate()
                            .filter(|(_, s)| s.vertex == v)
                            .map(|(k, _)| k)
                            .collect();
                        let corner = match (corners.as_slice(), r.corner) {
                            ([], _) => {
                                return Err(CliError::Invariant(format!(
                                    "cell ({}, {}) of face {} is owned by point {v}, which does not bound the face",
                                    r.ix, r.iy, f.face.id
                                )))
                            }
                            ([only], _) => *only,
                            (many, Some(c)) if many.contains(&c) => c,
                            _ => {
                                return Err(CliError::Consistency(format!(
                                    "cell ({}, {}) of face {}: corner does not name a sector of point {v}",
                                    r.ix, r.iy, f.face.id
                                )))
                            }
                        };
                        CellOwner::Corner { corner, vertex: v }
                    }
                });
            }
            out.push(owners);
        }
        Ok(out)
    }
}
