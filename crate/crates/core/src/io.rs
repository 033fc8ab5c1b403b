//! CSV input and output.
//!
//! A 1-D field file has the header `x,value` and one row per cell. A 2-D file
//! starts with `# nx=..,ny=..,lx=..,ly=..` followed by `ny` rows of `nx`
//! comma-separated values. Floats use Rust's shortest round-trip formatting,
//! so identical runs produce identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::Error;
use crate::grid::{Field, Grid};
use crate::solver::{RunResult, State};

/// Shortest round-trip text for `v`, switching to exponent form outside
/// `[1e-4, 1e15)` so tiny residuals stay short.
pub fn fmt_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn field_csv_string(f: &Field) -> String {
    let g = f.grid();
    let mut s = String::new();
    if g.dim() == 1 {
        s.push_str("x,value\n");
        for (i, v) in f.values().iter().enumerate() {
            let _ = writeln!(s, "{},{}", fmt_float(g.center(i)[0]), fmt_float(*v));
        }
    } else {
        let [nx, ny] = g.cells();
        let [lx, ly] = g.lengths();
        let _ = writeln!(s, "# nx={nx},ny={ny},lx={lx},ly={ly}");
        for row in f.values().chunks(nx) {
            let line: Vec<String> = row.iter().map(|v| fmt_float(*v)).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
    }
    s
}

/// Parses a field file written by [`field_csv_string`] onto `grid`.
pub fn parse_field_csv(text: &str, grid: Grid, path: &Path) -> Result<Field, Error> {
    let bad = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        message: format!("line {line}: {msg}"),
    };
    let num = |tok: &str, line: usize| -> Result<f64, Error> {
        tok.trim()
            .parse::<f64>()
            .map_err(|_| bad(line, format!("not a number: {:?}", tok.trim())))
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut values = Vec::with_capacity(grid.len());
    if grid.dim() == 1 {
        match lines.next() {
            Some((_, h)) if h.trim() == "x,value" => {}
            Some((i, h)) => return Err(bad(i + 1, format!("expected header `x,value`, found {h:?}"))),
            None => return Err(bad(1, "empty file".into())),
        }
        for (i, l) in lines {
            let cols: Vec<&str> = l.split(',').collect();
            if cols.len() != 2 {
                return Err(bad(i + 1, format!("expected 2 columns, found {}", cols.len())));
            }
            values.push(num(cols[1], i + 1)?);
        }
    } else {
        let [nx, ny] = grid.cells();
        match lines.next() {
            Some((i, h)) => {
                let h = h.trim();
                let body = h
                    .strip_prefix('#')
                    .ok_or_else(|| bad(i + 1, "expected `# nx=..,ny=..,lx=..,ly=..` header".into()))?;
                for kv in body.split(',') {
                    let (k, v) = kv
                        .trim()
                        .split_once('=')
                        .ok_or_else(|| bad(i + 1, format!("malformed header entry {kv:?}")))?;
                    let want = match k {
                        "nx" => nx as f64,
                        "ny" => ny as f64,
                        "lx" => grid.lengths()[0],
                        "ly" => grid.lengths()[1],
                        _ => return Err(bad(i + 1, format!("unknown header key {k:?}"))),
                    };
                    if num(v, i + 1)? != want {
                        return Err(bad(i + 1, format!("{k} = {v} does not match the grid ({want})")));
                    }
                }
            }
            None => return Err(bad(1, "empty file".into())),
        }
        for (i, l) in lines {
            let row: Vec<&str> = l.split(',').collect();
            if row.len() != nx {
                return Err(bad(i + 1, format!("expected {nx} columns, found {}", row.len())));
            }
            for tok in row {
                values.push(num(tok, i + 1)?);
            }
        }
    }
    if values.len() != grid.len() {
        return Err(bad(
            text.lines().count(),
            format!("expected {} values, found {}", grid.len(), values.len()),
        ));
    }
    Ok(Field::from_values(grid, values).expect("count checked"))
}

pub fn read_field_csv(path: &Path, grid: Grid) -> Result<Field, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_field_csv(&text, grid, path)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_field_csv(path: &Path, f: &Field) -> Result<(), Error> {
    write_text(path, &field_csv_string(f))
}

pub fn diagnostics_csv_string(records: &[DiagnosticsRecord]) -> String {
    let mut s = String::from(DiagnosticsRecord::CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.to_csv_row());
        s.push('\n');
    }
    s
}

/// Worst-case monitor slacks of a run; negative means violated.
pub fn run_summary(res: &RunResult, lambda: f64) -> String {
    let cap = 1.0 - 0.5 * lambda;
    let fold = |f: &dyn Fn(&DiagnosticsRecord) -> f64| res.records.iter().map(f).fold(f64::INFINITY, f64::min);
    let mut s = String::new();
    let _ = writeln!(s, "steps = {}", res.steps);
    let _ = writeln!(s, "dt = {}", fmt_float(res.dt));
    let _ = writeln!(s, "substeps = {}", res.substeps);
    let _ = writeln!(s, "newton_iterations = {}", res.newton_iterations);
    let _ = writeln!(s, "t_final = {}", fmt_float(res.final_state.t));
    let _ = writeln!(s, "slack_phi_lower = {}", fmt_float(fold(&|r| r.min_phi)));
    let _ = writeln!(s, "slack_phi_upper = {}", fmt_float(fold(&|r| cap - r.max_phi)));
    let _ = writeln!(s, "slack_sigma_lower = {}", fmt_float(fold(&|r| r.min_sigma)));
    let _ = writeln!(s, "slack_sigma_upper = {}", fmt_float(fold(&|r| 1.0 - r.max_sigma)));
    let _ = writeln!(
        s,
        "slack_mean_envelope = {}",
        fmt_float(fold(&|r| (r.mean_phi - r.mean_lo).min(r.mean_hi - r.mean_phi)))
    );
    let _ = writeln!(s, "max_residual_phi = {}", fmt_float(res.max_residuals.phi));
    let _ = writeln!(s, "max_residual_sigma = {}", fmt_float(res.max_residuals.sigma));
    let _ = writeln!(s, "max_residual_mu = {}", fmt_float(res.max_residuals.mu));
    let _ = writeln!(s, "residual_floor = {}", fmt_float(res.max_residuals.floor));
    let _ = writeln!(s, "max_mass_defect = {}", fmt_float(res.max_mass_defect));
    let _ = writeln!(s, "separation_level = {}", fmt_float(res.separation_level));
    let _ = writeln!(s, "empirical_m_tau = {}", fmt_float(res.empirical_m_tau));
    let flags: Vec<String> = res.flags().into_iter().collect();
    let _ = writeln!(s, "flags = [{}]", flags.join(", "));
    s
}

/// Writes `diagnostics.csv`, `summary.txt` and one `phi`, `mu`, `sigma` file
/// per snapshot into `dir`.
pub fn write_run_artifacts(dir: &Path, res: &RunResult, lambda: f64) -> Result<Vec<PathBuf>, Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let diag = dir.join("diagnostics.csv");
    write_text(&diag, &diagnostics_csv_string(&res.records))?;
    written.push(diag);
    let summary = dir.join("summary.txt");
    write_text(&summary, &run_summary(res, lambda))?;
    written.push(summary);
    let steps_per_snapshot = |s: &State| (s.t / res.dt).round() as usize;
    for snap in &res.snapshots {
        let n = steps_per_snapshot(snap);
        for (name, f) in [("phi", &snap.phi), ("mu", &snap.mu), ("sigma", &snap.sigma)] {
            let p = dir.join(format!("{name}_{n:06}.csv"));
            write_field_csv(&p, f)?;
            written.push(p);
        }
    }
    Ok(written)
}
