use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn conalloc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conalloc"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn ok(o: &Output) {
    assert_eq!(code(o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

/// A 30-point disk sample with its allocation at a coarse grid.
fn fixture() -> (TempDir, PathBuf, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    ok(&conalloc(
        &["sample", "--n", "30", "--seed", "3", "-o", "p.txt"],
        dir.path(),
    ));
    ok(&conalloc(
        &["run", "p.txt", "--grid", "0.02", "-o", "a.tsv"],
        dir.path(),
    ));
    let (p, a) = (dir.path().join("p.txt"), dir.path().join("a.tsv"));
    (dir, p, a)
}

fn data_lines(text: &str) -> usize {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .count()
}

#[test]
fn sample_writes_the_requested_count() {
    let dir = tempfile::tempdir().unwrap();
    ok(&conalloc(
        &[
            "sample", "--n", "164", "--domain", "disk", "--seed", "1", "-o", "pts.txt",
        ],
        dir.path(),
    ));
    let text = fs::read_to_string(dir.path().join("pts.txt")).unwrap();
    assert_eq!(data_lines(&text), 164);
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|x| x.parse().unwrap())
            .collect();
        assert_eq!(v.len(), 2);
        assert!(v[0].hypot(v[1]) <= 1.0);
    }
}

#[test]
fn sample_without_output_goes_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let o = conalloc(&["sample", "--n", "5", "--seed", "9"], dir.path());
    ok(&o);
    assert_eq!(data_lines(&String::from_utf8(o.stdout).unwrap()), 5);
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn poisson_rectangle_sample_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sample",
        "--intensity",
        "1",
        "--domain",
        "rect:10x10",
        "--seed",
        "2",
    ];
    let a = conalloc(&args, dir.path());
    let b = conalloc(&args, dir.path());
    ok(&a);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let n = data_lines(&text);
    assert!((50..=150).contains(&n), "{n} points for mean 100");
}

#[test]
fn bad_flags_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["sample"][..],
        &["sample", "--n", "4", "--intensity", "1"],
        &["sample", "--n", "4", "--domain", "hexagon"],
        &["sample", "--n", "4", "--domain", "rect:0x1"],
        &["run"],
        &["bogus"],
    ] {
        assert_eq!(code(&conalloc(args, dir.path())), 1, "{args:?}");
    }
    fs::write(dir.path().join("p.txt"), "0 0\n1 0\n0 1\n").unwrap();
    for args in [
        &["run", "p.txt", "--grid", "0"][..],
        &["run", "p.txt", "--grid", "-1"],
        &["run", "p.txt", "--spacing", "0"],
        &["run", "p.txt", "--mode", "fancy"],
        &["run", "p.txt", "-o", "p.txt"],
    ] {
        assert_eq!(code(&conalloc(args, dir.path())), 1, "{args:?}");
    }
    assert_eq!(code(&conalloc(&["--help"], dir.path())), 0);
}

#[test]
fn three_points_make_one_face() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.txt"), "0 0\n1 0\n0.3 0.8\n").unwrap();
    ok(&conalloc(
        &[
            "run",
            "p.txt",
            "--grid",
            "0.05",
            "-o",
            "a.tsv",
            "--diagnostics",
            "d.txt",
        ],
        dir.path(),
    ));
    let diag = fs::read_to_string(dir.path().join("d.txt")).unwrap();
    assert!(diag.lines().any(|l| l == "faces: 1"), "{diag}");
    assert!(diag.lines().any(|l| l == "failed_faces: 0"));
    assert!(diag.contains("stable yes"));
    let file = fs::read_to_string(dir.path().join("a.tsv")).unwrap();
    let column: Vec<&str> = file
        .lines()
        .skip_while(|l| !l.starts_with("face\t"))
        .skip(1)
        .map(|l| l.rsplit('\t').next().unwrap())
        .collect();
    let owners: std::collections::HashSet<&str> = column.iter().copied().collect();
    assert!(owners.is_subset(
        &["0", "1", "2", "UNCLAIMED", "UNDEFINED"]
            .into_iter()
            .collect()
    ));
    for v in ["0", "1", "2"] {
        assert!(owners.contains(v));
    }
    assert!(column.iter().filter(|&&o| o == "UNDEFINED").count() * 50 < column.len());
    ok(&conalloc(&["verify", "a.tsv", "p.txt"], dir.path()));
}

#[test]
fn empty_or_short_points_files_fail_with_data_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("e.txt"), "").unwrap();
    fs::write(dir.path().join("two.txt"), "0 0\n1 1\n").unwrap();
    fs::write(dir.path().join("junk.txt"), "0 0\n1 x\n2 2\n").unwrap();
    for f in ["e.txt", "two.txt", "junk.txt", "missing.txt"] {
        assert_eq!(code(&conalloc(&["run", f], dir.path())), 2, "{f}");
    }
    assert_eq!(code(&conalloc(&["stats", "e.txt"], dir.path())), 2);
}

#[test]
fn run_writes_a_diagnostics_report_next_to_the_output() {
    let (dir, _, _) = fixture();
    let diag = fs::read_to_string(dir.path().join("a.tsv.diag.txt")).unwrap();
    for key in [
        "points:",
        "faces:",
        "cells:",
        "unclaimed_cells:",
        "connected_fraction:",
        "max_gap_ratio:",
        "satedness_out_of_tolerance:",
        "stable_faces:",
    ] {
        assert!(diag.lines().any(|l| l.starts_with(key)), "{key} missing");
    }
    for line in diag.lines() {
        assert!(line.contains(": "), "{line}");
    }
}

#[test]
fn run_is_deterministic_and_the_file_round_trips() {
    let (dir, _, a) = fixture();
    let first = fs::read(&a).unwrap();
    let o = conalloc(&["run", "p.txt", "--grid", "0.02"], dir.path());
    ok(&o);
    assert_eq!(o.stdout, first);
    let parsed = conalloc_cli::allocfile::AllocationFile::read(&a).unwrap();
    assert_eq!(parsed.format().as_bytes(), first.as_slice());
}

#[test]
fn fresh_output_verifies() {
    let (dir, _, _) = fixture();
    let o = conalloc(&["verify", "a.tsv", "p.txt"], dir.path());
    ok(&o);
    let report = String::from_utf8(o.stdout).unwrap();
    assert!(report.lines().any(|l| l == "verdict: ok"), "{report}");
    assert!(report.lines().any(|l| l == "invariant_failures: 0"));
}

/// Records as (line index, fields) below the column header.
fn records(text: &str) -> Vec<(usize, Vec<String>)> {
    let lines: Vec<&str> = text.lines().collect();
    let start = lines.iter().position(|l| l.starts_with("face\t")).unwrap() + 1;
    (start..lines.len())
        .map(|i| (i, lines[i].split('\t').map(str::to_owned).collect()))
        .collect()
}

fn replace_line(text: &str, index: usize, fields: &[String]) -> String {
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    lines[index] = fields.join("\t");
    lines.join("\n") + "\n"
}

#[test]
fn swapped_owners_are_an_invariant_violation() {
    let (dir, _, a) = fixture();
    let text = fs::read_to_string(&a).unwrap();
    let recs = records(&text);
    // two claimed cells of one face, far apart, with different owners
    let claimed: Vec<&(usize, Vec<String>)> = recs
        .iter()
        .filter(|(_, f)| f[0] == "1" && f[4].parse::<usize>().is_ok())
        .collect();
    let first = claimed[0];
    let far = claimed
        .iter()
        .rev()
        .find(|(_, f)| f[4] != first.1[4])
        .expect("two owners");
    let (mut x, mut y) = (first.1.clone(), far.1.clone());
    std::mem::swap(&mut x[3], &mut y[3]);
    std::mem::swap(&mut x[4], &mut y[4]);
    let mutated = replace_line(&replace_line(&text, first.0, &x), far.0, &y);
    fs::write(&a, mutated).unwrap();
    let o = conalloc(&["verify", "a.tsv", "p.txt"], dir.path());
    assert_eq!(
        code(&o),
        4,
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report = String::from_utf8(o.stdout).unwrap();
    assert!(
        report.lines().any(|l| l.starts_with("failure: face 1")),
        "{report}"
    );
}

#[test]
fn owner_outside_the_face_is_an_invariant_violation() {
    let (dir, p, a) = fixture();
    let text = fs::read_to_string(&a).unwrap();
    let recs = records(&text);
    let n = data_lines(&fs::read_to_string(p).unwrap());
    let face0: std::collections::HashSet<String> = recs
        .iter()
        .filter(|(_, f)| f[0] == "0")
        .map(|(_, f)| f[4].clone())
        .collect();
    let outsider = (0..n)
        .map(|v| v.to_string())
        .find(|v| !face0.contains(v))
        .unwrap();
    let (i, mut fields) = recs.iter().find(|(_, f)| f[0] == "0").cloned().unwrap();
    fields[3] = "0".into();
    fields[4] = outsider;
    fs::write(&a, replace_line(&text, i, &fields)).unwrap();
    assert_eq!(
        code(&conalloc(&["verify", "a.tsv", "p.txt"], dir.path())),
        4
    );
}

#[test]
fn truncated_or_mismatched_files_are_data_errors() {
    let (dir, _, a) = fixture();
    let text = fs::read_to_string(&a).unwrap();
    let cut = &text[..text.len() / 2];
    let cut = &cut[..cut.rfind('\n').unwrap() + 1];
    fs::write(dir.path().join("cut.tsv"), cut).unwrap();
    assert_eq!(
        code(&conalloc(&["verify", "cut.tsv", "p.txt"], dir.path())),
        2
    );
    assert_eq!(
        code(&conalloc(&["render", "cut.tsv", "p.txt"], dir.path())),
        2
    );

    ok(&conalloc(
        &["sample", "--n", "31", "--seed", "3", "-o", "q.txt"],
        dir.path(),
    ));
    assert_eq!(
        code(&conalloc(&["verify", "a.tsv", "q.txt"], dir.path())),
        2
    );
    assert_eq!(
        code(&conalloc(&["render", "a.tsv", "q.txt"], dir.path())),
        2
    );
    fs::write(dir.path().join("junk.tsv"), "hello\n").unwrap();
    assert_eq!(
        code(&conalloc(&["verify", "junk.tsv", "p.txt"], dir.path())),
        2
    );
}

#[test]
fn render_is_byte_identical_and_draws_everything() {
    let (dir, _, _) = fixture();
    let a = conalloc(&["render", "a.tsv", "p.txt"], dir.path());
    ok(&a);
    ok(&conalloc(
        &["render", "a.tsv", "p.txt", "-o", "f.svg"],
        dir.path(),
    ));
    assert_eq!(a.stdout, fs::read(dir.path().join("f.svg")).unwrap());
    let svg = String::from_utf8(a.stdout).unwrap();
    assert!(svg.starts_with("<?xml"));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<line ").count(), 29);
    assert_eq!(svg.matches("<circle ").count(), 30);
    let bare = conalloc(
        &[
            "render",
            "a.tsv",
            "p.txt",
            "--no-tree",
            "--no-points",
            "--palette-seed",
            "5",
        ],
        dir.path(),
    );
    ok(&bare);
    let bare = String::from_utf8(bare.stdout).unwrap();
    assert!(!bare.contains("<line ") && !bare.contains("<circle "));
    assert_ne!(bare, svg);
}

#[test]
fn stats_is_deterministic_and_reports_ratios() {
    let (dir, _, _) = fixture();
    let a = conalloc(&["stats", "p.txt"], dir.path());
    let b = conalloc(&["stats", "p.txt"], dir.path());
    ok(&a);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let max: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("max_ratio: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(max > 1e6, "{max}");
    assert!(text.lines().any(|l| l.starts_with("log10_gap [")));

    fs::write(dir.path().join("t.txt"), "0 0\n1 0\n0.3 0.8\n").unwrap();
    let small = String::from_utf8(conalloc(&["stats", "t.txt"], dir.path()).stdout).unwrap();
    let max: f64 = small
        .lines()
        .find_map(|l| l.strip_prefix("max_ratio: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((1.0..100.0).contains(&max), "{max}");
}
