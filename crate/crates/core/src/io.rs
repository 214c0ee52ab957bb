//! Run directories: snapshot CSVs, the trajectory index, the diagnostics
//! time series and the summary verdicts.
//!
//! Floats are written with 17 significant digits, so every file reads back
//! to the exact values that were written.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::checks::CheckResult;
use crate::config::Config;
use crate::diagnostics::{DiagnosticsRecord, DIAGNOSTICS_COLUMNS};
use crate::error::{Error, Result};
use crate::grid::{build_grid, DomainKind, Field, Grid};
use crate::solver::SnapshotSink;
use crate::state::State;

pub const INDEX_FILE: &str = "index.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SNAPSHOT_COLUMNS: [&str; 6] = ["t", "y", "v", "u", "theta", "Z"];

pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_error(path: &Path, msg: impl Into<String>) -> Error {
    Error::Format { file: path.display().to_string(), msg: msg.into() }
}

fn parse_row(path: &Path, line_no: usize, line: &str, width: usize) -> Result<Vec<f64>> {
    let vals = line
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| format_error(path, format!("line {line_no}: {e}")))?;
    if vals.len() != width {
        return Err(format_error(path, format!("line {line_no}: expected {width} columns, found {}", vals.len())));
    }
    Ok(vals)
}

fn check_header(path: &Path, header: Option<&str>, columns: &[&str]) -> Result<()> {
    let expected = columns.join(",");
    match header {
        Some(h) if h.trim() == expected => Ok(()),
        Some(h) => Err(format_error(path, format!("header `{h}` differs from `{expected}`"))),
        None => Err(format_error(path, "empty file")),
    }
}

/// Writes `contents` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| format_error(path, e.to_string()))
}

pub fn snapshot_csv(state: &State) -> String {
    let mut out = SNAPSHOT_COLUMNS.join(",");
    out.push('\n');
    let t = format_f64(state.t);
    for (i, y) in state.grid().nodes().iter().enumerate() {
        let _ = writeln!(
            out,
            "{t},{},{},{},{},{}",
            format_f64(*y),
            format_f64(state.v[i]),
            format_f64(state.u[i]),
            format_f64(state.theta[i]),
            format_f64(state.z[i])
        );
    }
    out
}

pub fn write_snapshot(path: &Path, state: &State) -> Result<()> {
    write_atomic(path, snapshot_csv(state).as_bytes())
}

/// Reads a snapshot written by [`write_snapshot`] onto `grid`.
///
/// Only the layout is validated; physically invalid values are returned as
/// they are so that the checks can name them.
pub fn read_snapshot(path: &Path, grid: &Arc<Grid>) -> Result<State> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    check_header(path, lines.next(), &SNAPSHOT_COLUMNS)?;
    let rows = lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_row(path, i + 2, l, SNAPSHOT_COLUMNS.len()))
        .collect::<Result<Vec<_>>>()?;
    if rows.len() != grid.n_nodes() {
        return Err(format_error(path, format!("{} rows for {} nodes", rows.len(), grid.n_nodes())));
    }
    let tol = 1e-9 * grid.length();
    for (row, y) in rows.iter().zip(grid.nodes()) {
        if (row[1] - y).abs() > tol {
            return Err(format_error(path, format!("node y = {} does not match the grid ({y})", row[1])));
        }
    }
    let col = |k: usize| -> Result<Field> {
        Field::new(Arc::clone(grid), rows.iter().map(|r| r[k]).collect())
            .map_err(|e| format_error(path, e.to_string()))
    };
    Ok(State { t: rows[0][0], v: col(2)?, u: col(3)?, theta: col(4)?, z: col(5)? })
}

pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = DIAGNOSTICS_COLUMNS.join(",");
    out.push('\n');
    for r in records {
        out.push_str(&diagnostics_line(r));
    }
    out
}

fn diagnostics_line(r: &DiagnosticsRecord) -> String {
    let mut line = r.to_row().iter().map(|x| format_f64(*x)).collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

pub fn write_diagnostics(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    write_atomic(path, diagnostics_csv(records).as_bytes())
}

pub fn read_diagnostics(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    check_header(path, lines.next(), &DIAGNOSTICS_COLUMNS)?;
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let v = parse_row(path, i + 2, l, DIAGNOSTICS_COLUMNS.len())?;
            let row: [f64; 18] = v.try_into().expect("width checked");
            Ok(DiagnosticsRecord::from_row(&row))
        })
        .collect()
}

pub fn write_summary(path: &Path, checks: &[CheckResult]) -> Result<()> {
    write_json(path, checks)
}

pub fn read_summary(path: &Path) -> Result<Vec<CheckResult>> {
    read_json(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Complete,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub file: String,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryIndex {
    pub domain: DomainKind,
    pub n_cells: usize,
    pub status: RunStatus,
    pub error: Option<String>,
    /// Every configuration key with the value the run used.
    pub config: BTreeMap<String, String>,
    pub snapshots: Vec<SnapshotEntry>,
}

impl TrajectoryIndex {
    pub fn new(config: &Config) -> Self {
        Self {
            domain: config.domain,
            n_cells: config.n_cells,
            status: RunStatus::Running,
            error: None,
            config: config.entries().into_iter().collect(),
            snapshots: Vec::new(),
        }
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        build_grid(self.domain, self.n_cells)
    }

    /// Rebuilds the configuration from the echoed keys.
    pub fn config(&self) -> Result<Config> {
        let mut cfg = Config::default();
        for (k, v) in &self.config {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }
}

pub fn snapshot_file_name(k: usize) -> String {
    format!("snapshot_{k:06}.csv")
}

/// Streams a run into a directory: one snapshot file per output instant,
/// diagnostics rows, and an index rewritten after every snapshot so that an
/// interrupted run leaves a readable prefix behind.
pub struct RunWriter {
    dir: PathBuf,
    index: TrajectoryIndex,
    records: Vec<DiagnosticsRecord>,
}

impl RunWriter {
    pub fn create(dir: &Path, config: &Config) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let writer = Self { dir: dir.to_path_buf(), index: TrajectoryIndex::new(config), records: Vec::new() };
        writer.flush()?;
        Ok(writer)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    fn flush(&self) -> Result<()> {
        write_diagnostics(&self.dir.join(DIAGNOSTICS_FILE), &self.records)?;
        write_json(&self.dir.join(INDEX_FILE), &self.index)
    }

    /// Marks the run complete, or aborted with `error`.
    pub fn finish(mut self, error: Option<String>) -> Result<TrajectoryIndex> {
        self.index.status = if error.is_some() { RunStatus::Aborted } else { RunStatus::Complete };
        self.index.error = error;
        self.flush()?;
        Ok(self.index)
    }
}

impl SnapshotSink for RunWriter {
    fn record(&mut self, state: &State, diagnostics: &DiagnosticsRecord) -> Result<()> {
        let file = snapshot_file_name(self.index.snapshots.len());
        write_snapshot(&self.dir.join(&file), state)?;
        self.index.snapshots.push(SnapshotEntry { file, t: state.t });
        self.records.push(diagnostics.clone());
        self.flush()
    }
}

/// A run directory read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub index: TrajectoryIndex,
    pub config: Config,
    pub states: Vec<State>,
}

pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    let index_path = dir.join(INDEX_FILE);
    if !index_path.is_file() {
        return Err(format_error(&index_path, "missing trajectory index"));
    }
    let index: TrajectoryIndex = read_json(&index_path)?;
    let config = index.config()?;
    let grid = index.grid()?;
    let states = index
        .snapshots
        .iter()
        .map(|e| read_snapshot(&dir.join(&e.file), &grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(LoadedRun { index, config, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checks::CheckResult;
    use crate::config::validate_config;
    use crate::solver::run_simulation;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 1.0 - f64::EPSILON] {
            assert_eq!(format_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn run_directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = Config::default();
        cfg.set("preset.name", "smooth-bump").unwrap();
        cfg.set("grid.n_cells", "40").unwrap();
        cfg.set("solver.t_end", "0.02").unwrap();
        let vc = validate_config(&cfg).unwrap();
        let mut writer = RunWriter::create(dir.path(), &vc.config).unwrap();
        let traj = run_simulation(&vc, Some(&mut writer)).unwrap();
        writer.finish(None).unwrap();

        let loaded = load_run(dir.path()).unwrap();
        assert_eq!(loaded.index.status, RunStatus::Complete);
        assert_eq!(loaded.config, vc.config);
        assert_eq!(loaded.states.len(), traj.len());
        for (a, b) in loaded.states.iter().zip(traj.states()) {
            assert_eq!(a, b);
        }
        let records = read_diagnostics(&dir.path().join(DIAGNOSTICS_FILE)).unwrap();
        let expected: Vec<_> = traj.records().cloned().collect();
        assert_eq!(records, expected);
    }

    #[test]
    fn summary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(SUMMARY_FILE);
        let checks = vec![CheckResult::at_most("a", 0.1, 1.0), CheckResult::at_least("b", 0.1, 1.0)];
        write_summary(&path, &checks).unwrap();
        assert_eq!(read_summary(&path).unwrap(), checks);
    }

    #[test]
    fn corrupt_snapshot_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let grid = build_grid(DomainKind::UnitInterval, 8).unwrap();
        let path = dir.path().join("s.csv");
        fs::write(&path, "t,y,v,u,theta,Z\n0,0,1,0,1\n").unwrap();
        assert!(matches!(read_snapshot(&path, &grid), Err(Error::Format { .. })));
        assert!(matches!(load_run(dir.path()), Err(Error::Format { .. })));
    }
}
