use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::io_fmt::{self, fmt17};

/// Stopping rule shared by every iterative solver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub max_sweeps: usize,
    /// Sup-norm change of the primary iterate over one sweep.
    #[serde(serialize_with = "io_fmt::f64_17")]
    pub tol_change: f64,
    /// Duality-gap target (regression solvers only).
    #[serde(serialize_with = "io_fmt::opt_f64_17")]
    pub tol_gap: Option<f64>,
    /// Stop once the criterion is at or below this value.
    #[serde(serialize_with = "io_fmt::opt_f64_17")]
    pub target_criterion: Option<f64>,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule { max_sweeps: 10_000, tol_change: 1e-10, tol_gap: None, target_criterion: None }
    }
}

impl StopRule {
    pub fn sweeps(max_sweeps: usize) -> Self {
        StopRule { max_sweeps, ..Default::default() }
    }

    pub fn with_tol(mut self, tol_change: f64) -> Self {
        self.tol_change = tol_change;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 {
            return Err(Error::Parameter("max_sweeps must be at least 1".into()));
        }
        if !(self.tol_change > 0.0) {
            return Err(Error::Parameter(format!("tol_change must be positive, got {}", self.tol_change)));
        }
        if let Some(g) = self.tol_gap {
            if !(g > 0.0) {
                return Err(Error::Parameter(format!("tol_gap must be positive, got {g}")));
            }
        }
        Ok(())
    }
}

/// When to store full iterate snapshots in trace records.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Snapshots {
    /// Every sweep when the iterate has at most 1000 entries.
    #[default]
    Auto,
    Always,
    Never,
}

impl Snapshots {
    pub(crate) fn keep(self, len: usize) -> bool {
        match self {
            Snapshots::Auto => len <= 1000,
            Snapshots::Always => true,
            Snapshots::Never => false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub stop: StopRule,
    pub snapshots: Snapshots,
    /// Record wall-clock time per sweep. Off by default so that trace files are
    /// byte-reproducible.
    pub timing: bool,
    pub execution: Execution,
}

impl RunOptions {
    pub fn new(stop: StopRule) -> Self {
        RunOptions { stop, ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIter,
    Error(String),
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceRecord {
    pub k: usize,
    #[serde(skip)]
    pub w: Option<Vec<f64>>,
    #[serde(skip)]
    pub u: Option<Vec<f64>>,
    pub criterion: f64,
    pub suboptimality: Option<f64>,
    pub active_size: usize,
    pub block_updates_done: u64,
    pub wall_ns: u64,
    pub work_units: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceConfig {
    pub solver: String,
    pub stop: StopRule,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<(String, f64)>,
}

/// Per-sweep record of a solver run. Record 0 is the initial point.
#[derive(Clone, Debug, Serialize)]
pub struct SolverTrace {
    pub config: TraceConfig,
    pub status: Status,
    pub parallel_width: Option<usize>,
    #[serde(skip)]
    pub records: Vec<TraceRecord>,
}

impl SolverTrace {
    pub fn new(solver: &str, stop: StopRule) -> Self {
        SolverTrace {
            config: TraceConfig {
                solver: solver.to_string(),
                stop,
                seed: None,
                generator: None,
                params: Vec::new(),
            },
            status: Status::MaxIter,
            parallel_width: None,
            records: Vec::new(),
        }
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.config.params.push((name.to_string(), value));
        self
    }

    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("trace has an initial record")
    }

    pub fn sweeps(&self) -> usize {
        self.last().k
    }

    pub fn criteria(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.criterion).collect()
    }

    /// Fills `suboptimality = criterion − optimum` on every record.
    pub fn fill_suboptimality(&mut self, optimum: f64) {
        for r in &mut self.records {
            r.suboptimality = Some(r.criterion - optimum);
        }
    }

    /// Work accounting: each sweep costs `per_sweep` units.
    pub fn fill_work_units(&mut self, per_sweep: f64) {
        for r in &mut self.records {
            r.work_units = Some(r.k as f64 * per_sweep);
        }
    }

    /// Keeps the first `dense` records, then sweeps on a geometric grid with
    /// the given ratio, and always the final record.
    pub fn thin_geometric(&mut self, dense: usize, ratio: f64) {
        let last = self.sweeps();
        let mut next = dense as f64;
        self.records.retain(|r| {
            if r.k < dense || r.k == last {
                return true;
            }
            if r.k as f64 >= next {
                while next <= r.k as f64 {
                    next *= ratio;
                }
                return true;
            }
            false
        });
    }

    pub fn w_snapshots(&self) -> Result<Vec<(usize, &[f64])>> {
        let snaps: Vec<_> = self
            .records
            .iter()
            .filter_map(|r| r.w.as_deref().map(|w| (r.k, w)))
            .collect();
        if snaps.is_empty() {
            return Err(Error::Data("trace carries no coefficient snapshots".into()));
        }
        Ok(snaps)
    }

    pub fn to_csv(&self) -> String {
        let work = self.records.iter().any(|r| r.work_units.is_some());
        let mut s = String::from("k,criterion,suboptimality,active_size,block_updates_done,wall_ns");
        if self.parallel_width.is_some() {
            s.push_str(",parallel_width");
        }
        if work {
            s.push_str(",work_units");
        }
        s.push('\n');
        for r in &self.records {
            let sub = r.suboptimality.map(fmt17).unwrap_or_default();
            let _ = write!(
                s,
                "{},{},{},{},{},{}",
                r.k,
                fmt17(r.criterion),
                sub,
                r.active_size,
                r.block_updates_done,
                r.wall_ns
            );
            if let Some(d) = self.parallel_width {
                let _ = write!(s, ",{d}");
            }
            if work {
                let _ = write!(s, ",{}", r.work_units.map(fmt17).unwrap_or_default());
            }
            s.push('\n');
        }
        s
    }

    pub fn sidecar_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            #[serde(flatten)]
            trace: &'a SolverTrace,
            sweeps: usize,
            #[serde(serialize_with = "io_fmt::f64_17")]
            final_criterion: f64,
        }
        Ok(serde_json::to_string_pretty(&Sidecar {
            trace: self,
            sweeps: self.sweeps(),
            final_criterion: self.last().criterion,
        })?)
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        crate::harness::write_atomic(&dir.join(format!("{stem}.csv")), self.to_csv().as_bytes())?;
        crate::harness::write_atomic(&dir.join(format!("{stem}.json")), self.sidecar_json()?.as_bytes())
    }
}

/// Builds trace records while a solver runs.
pub(crate) struct Recorder {
    pub trace: SolverTrace,
    opts: RunOptions,
    start: Instant,
}

impl Recorder {
    pub fn new(solver: &str, opts: &RunOptions) -> Self {
        Recorder { trace: SolverTrace::new(solver, opts.stop), opts: *opts, start: Instant::now() }
    }

    pub fn record(
        &mut self,
        k: usize,
        criterion: f64,
        active_size: usize,
        block_updates_done: u64,
        w: Option<&[f64]>,
        u: Option<&[f64]>,
    ) {
        let keep = |v: Option<&[f64]>| v.filter(|v| self.opts.snapshots.keep(v.len())).map(<[f64]>::to_vec);
        let wall_ns = if self.opts.timing { self.start.elapsed().as_nanos() as u64 } else { 0 };
        self.trace.records.push(TraceRecord {
            k,
            w: keep(w),
            u: keep(u),
            criterion,
            suboptimality: None,
            active_size,
            block_updates_done,
            wall_ns,
            work_units: None,
        });
    }

    /// Applies the stopping rule after sweep `k`; returns true to stop.
    pub fn should_stop(&mut self, k: usize, change: f64, gap: Option<f64>) -> bool {
        let stop = &self.opts.stop;
        let crit = self.trace.last().criterion;
        let done = change <= stop.tol_change
            || matches!((gap, stop.tol_gap), (Some(g), Some(t)) if g <= t)
            || stop.target_criterion.is_some_and(|t| crit <= t);
        if done {
            self.trace.status = Status::Converged;
            true
        } else {
            if k >= stop.max_sweeps {
                self.trace.status = Status::MaxIter;
            }
            k >= stop.max_sweeps
        }
    }

    pub fn finish(self) -> SolverTrace {
        self.trace
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut r = Recorder::new("x", &RunOptions::default());
        r.record(0, 1.5, 0, 0, Some(&[1.0]), None);
        r.record(1, 0.25, 1, 3, Some(&[2.0]), None);
        let mut t = r.finish();
        t.fill_suboptimality(0.25);
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "k,criterion,suboptimality,active_size,block_updates_done,wall_ns");
        assert!(lines[2].starts_with("1,2.5000000000000000e-1,0.0000000000000000e0,1,3,0"));
        t.parallel_width = Some(4);
        t.fill_work_units(10.0);
        assert!(t.to_csv().lines().next().unwrap().ends_with(",parallel_width,work_units"));
        assert_eq!(t.w_snapshots().unwrap().len(), 2);
    }

    #[test]
    fn stop_rule_validation() {
        assert!(StopRule::sweeps(0).validate().is_err());
        assert!(StopRule::default().with_tol(0.0).validate().is_err());
        assert!(StopRule::default().validate().is_ok());
    }
}
