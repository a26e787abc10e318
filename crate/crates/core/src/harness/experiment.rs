use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_blocks, Execution};
use crate::io_fmt;
use crate::parallel::{parallel_admm_cd, parallel_dykstra_cd, AdmmParams, WeightVector};
use crate::serial::{lasso_cd, RunOptions, Snapshots, SolverTrace, StopRule};

use super::instance::{gen_instance, InstanceSpec, GENERATOR};
use super::oracle::reference_lasso;
use super::write_atomic;

/// Absolute suboptimality level used for the work comparison.
pub const ABS_THRESHOLD: f64 = 1e-4;
/// Relative suboptimality every solver is expected to reach.
pub const REL_THRESHOLD: f64 = 1e-6;
/// Work checkpoints, in multiples of `p`.
const CHECKPOINTS: [f64; 10] = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "solver", rename_all = "snake_case")]
pub enum SolverSel {
    Cd,
    /// Parallel-Dykstra-CD with `γ_i = 1/p`.
    Pdcd,
    /// Parallel-ADMM-CD with `ρ_i = rho/p`.
    Padmm { rho: f64 },
}

impl SolverSel {
    pub fn label(&self) -> String {
        match self {
            SolverSel::Cd => "cd".into(),
            SolverSel::Pdcd => "pdcd".into(),
            SolverSel::Padmm { rho } => format!("padmm_rho{rho}"),
        }
    }

    pub fn is_parallel(&self) -> bool {
        !matches!(self, SolverSel::Cd)
    }

    /// Serial CD, parallel-Dykstra-CD and parallel-ADMM-CD at `ρ ∈ {10, 50, 200}`.
    pub fn default_set() -> Vec<SolverSel> {
        vec![
            SolverSel::Cd,
            SolverSel::Pdcd,
            SolverSel::Padmm { rho: 10.0 },
            SolverSel::Padmm { rho: 50.0 },
            SolverSel::Padmm { rho: 200.0 },
        ]
    }
}

/// Fraction `e` such that `e·p` parallel block updates cost one serial update.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EfficiencyModel {
    #[serde(serialize_with = "io_fmt::f64_17")]
    pub e: f64,
}

impl EfficiencyModel {
    pub fn new(e: f64) -> Result<Self> {
        if !(e > 0.0 && e <= 1.0) {
            return Err(Error::Parameter(format!("efficiency must lie in (0, 1], got {e}")));
        }
        Ok(EfficiencyModel { e })
    }

    /// Work units of one sweep of `solver` on `p` coordinates.
    pub fn sweep_cost(&self, solver: &SolverSel, p: usize) -> f64 {
        if solver.is_parallel() {
            1.0 / self.e
        } else {
            p as f64
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub spec: InstanceSpec,
    pub solvers: Vec<SolverSel>,
    pub efficiency: EfficiencyModel,
    /// Sweep cap per solver run.
    pub max_sweeps: usize,
    pub tol_gap: f64,
    /// Runs stop once relative suboptimality falls below this.
    pub stop_rel: f64,
    /// Dispatch of trials; solvers inside a trial run sequentially.
    pub execution: Execution,
}

impl ExperimentConfig {
    pub fn new(spec: InstanceSpec, solvers: Vec<SolverSel>, efficiency: EfficiencyModel) -> Self {
        ExperimentConfig {
            spec,
            solvers,
            efficiency,
            max_sweeps: 200_000,
            tol_gap: 1e-10,
            stop_rel: 1e-10,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunResult {
    pub label: String,
    pub sweeps: usize,
    #[serde(serialize_with = "io_fmt::f64_17")]
    pub final_rel_subopt: f64,
    #[serde(serialize_with = "io_fmt::opt_f64_17")]
    pub work_to_abs: Option<f64>,
    #[serde(serialize_with = "io_fmt::opt_f64_17")]
    pub work_to_rel: Option<f64>,
    /// Relative suboptimality at each work checkpoint.
    #[serde(skip)]
    pub at_checkpoints: Vec<f64>,
    #[serde(skip)]
    pub trace: SolverTrace,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialResult {
    pub trial: usize,
    #[serde(serialize_with = "io_fmt::opt_f64_17")]
    pub optimum: Option<f64>,
    pub active_size: Option<usize>,
    #[serde(serialize_with = "io_fmt::opt_f64_17")]
    pub gap: Option<f64>,
    pub runs: Vec<RunResult>,
    /// Error messages of this trial; runs that completed are kept.
    pub errors: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Stat {
    #[serde(serialize_with = "io_fmt::f64_17")]
    pub mean: f64,
    #[serde(serialize_with = "io_fmt::f64_17")]
    pub median: f64,
    /// Number of trials contributing.
    pub count: usize,
}

impl Stat {
    fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let m = v.len();
        let median = if m % 2 == 1 { v[m / 2] } else { 0.5 * (v[m / 2 - 1] + v[m / 2]) };
        Some(Stat { mean: v.iter().sum::<f64>() / m as f64, median, count: m })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Checkpoint {
    #[serde(serialize_with = "io_fmt::f64_17")]
    pub work_units: f64,
    pub rel_subopt: Option<Stat>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverSummary {
    pub label: String,
    pub selection: SolverSel,
    pub runs: usize,
    /// Work units to reach absolute suboptimality `1e-4`, over trials that reached it.
    pub work_to_abs: Option<Stat>,
    pub reached_abs: usize,
    /// Work units to reach relative suboptimality `1e-6`.
    pub work_to_rel: Option<Stat>,
    pub reached_rel: usize,
    #[serde(serialize_with = "io_fmt::f64_17")]
    pub max_final_rel_subopt: f64,
    pub checkpoints: Vec<Checkpoint>,
}

impl SolverSummary {
    /// Mean work to the absolute threshold, or infinity if some trial never got there.
    pub fn mean_work_to_abs(&self) -> f64 {
        match &self.work_to_abs {
            Some(s) if self.reached_abs == self.runs => s.mean,
            _ => f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentSummary {
    pub generator: String,
    pub spec: InstanceSpec,
    pub efficiency: EfficiencyModel,
    pub max_sweeps: usize,
    #[serde(serialize_with = "io_fmt::f64_17")]
    pub abs_threshold: f64,
    #[serde(serialize_with = "io_fmt::f64_17")]
    pub rel_threshold: f64,
    #[serde(serialize_with = "io_fmt::opt_f64_17")]
    pub mean_active_size: Option<f64>,
    pub solvers: Vec<SolverSummary>,
    pub trials: Vec<TrialResult>,
}

impl ExperimentSummary {
    pub fn solver(&self, label: &str) -> Option<&SolverSummary> {
        self.solvers.iter().find(|s| s.label == label)
    }

    pub fn failed_trials(&self) -> usize {
        self.trials.iter().filter(|t| !t.errors.is_empty()).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn first_work_below(trace: &SolverTrace, level: f64, scale: f64) -> Option<f64> {
    trace
        .records
        .iter()
        .find(|r| r.suboptimality.is_some_and(|s| s / scale <= level))
        .and_then(|r| r.work_units)
}

fn run_one(sel: &SolverSel, cfg: &ExperimentConfig, trial: usize, optimum: f64) -> Result<RunResult> {
    let problem = gen_instance(&cfg.spec, trial)?;
    let p = problem.p();
    let scale = optimum.abs().max(f64::MIN_POSITIVE);
    let stop = StopRule {
        max_sweeps: cfg.max_sweeps,
        tol_change: f64::MIN_POSITIVE,
        tol_gap: None,
        target_criterion: Some(optimum + cfg.stop_rel * scale),
    };
    let opts = RunOptions { stop, snapshots: Snapshots::Never, timing: false, execution: Execution::Sequential };
    let (_, mut trace) = match sel {
        SolverSel::Cd => lasso_cd(problem.x(), problem.y(), cfg.spec.lambda, &opts)?,
        SolverSel::Pdcd => parallel_dykstra_cd(&problem, &WeightVector::uniform(p), &opts)?,
        SolverSel::Padmm { rho } => parallel_admm_cd(&problem, &AdmmParams::uniform(p, *rho)?, &opts)?,
    };
    trace.config.seed = Some(cfg.spec.seed);
    trace.config.generator = Some(GENERATOR.to_string());
    trace.fill_suboptimality(optimum);
    trace.fill_work_units(cfg.efficiency.sweep_cost(sel, p));
    let at_checkpoints = CHECKPOINTS
        .iter()
        .map(|&c| {
            let budget = c * p as f64;
            let r = trace.records.iter().take_while(|r| r.work_units.unwrap_or(0.0) <= budget).last();
            r.and_then(|r| r.suboptimality).unwrap_or(f64::NAN) / scale
        })
        .collect();
    let result = RunResult {
        label: sel.label(),
        sweeps: trace.sweeps(),
        final_rel_subopt: trace.last().suboptimality.unwrap_or(f64::NAN) / scale,
        work_to_abs: first_work_below(&trace, ABS_THRESHOLD, 1.0),
        work_to_rel: first_work_below(&trace, REL_THRESHOLD, scale),
        at_checkpoints,
        trace,
    };
    Ok(result)
}

fn run_trial(cfg: &ExperimentConfig, trial: usize, out: Option<&Path>) -> TrialResult {
    let mut res = TrialResult { trial, optimum: None, active_size: None, gap: None, runs: Vec::new(), errors: Vec::new() };
    let certified = gen_instance(&cfg.spec, trial)
        .and_then(|pr| reference_lasso(pr.x(), pr.y(), cfg.spec.lambda, cfg.tol_gap));
    let (w_star, cert) = match certified {
        Ok(v) => v,
        Err(e) => {
            res.errors.push(format!("oracle: {e}"));
            return res;
        }
    };
    res.optimum = Some(cert.criterion);
    res.gap = Some(cert.gap);
    res.active_size = Some(w_star.iter().filter(|&&v| v != 0.0).count());
    for sel in &cfg.solvers {
        match run_one(sel, cfg, trial, cert.criterion) {
            Ok(mut run) => {
                // thresholds are already extracted; keep the files small
                run.trace.thin_geometric(200, 1.02);
                if let Some(dir) = out {
                    let dir = dir.join(format!("trial_{trial:03}"));
                    if let Err(e) = run.trace.write(&dir, &run.label) {
                        res.errors.push(format!("{}: {e}", run.label));
                    }
                }
                res.runs.push(run);
            }
            Err(e) => res.errors.push(format!("{}: {e}", sel.label())),
        }
    }
    res
}

/// Runs every selected solver on every trial instance against a certified
/// optimum. Trial outputs go to `out/trial_XXX/<label>.{csv,json}` and the
/// aggregate to `out/summary.json` when `out` is given.
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ExperimentSummary> {
    cfg.spec.validate()?;
    EfficiencyModel::new(cfg.efficiency.e)?;
    if cfg.solvers.is_empty() {
        return Err(Error::Usage("no solvers selected".into()));
    }
    if !(cfg.stop_rel > 0.0) {
        return Err(Error::Parameter("stop_rel must be positive".into()));
    }
    if cfg.max_sweeps == 0 {
        return Err(Error::Parameter("max_sweeps must be at least 1".into()));
    }
    let trials = map_blocks(cfg.spec.trials, cfg.execution, |t| run_trial(cfg, t, out));
    let summary = summarize(cfg, trials);
    if let Some(dir) = out {
        write_atomic(&dir.join("summary.json"), summary.to_json()?.as_bytes())?;
    }
    Ok(summary)
}

fn summarize(cfg: &ExperimentConfig, trials: Vec<TrialResult>) -> ExperimentSummary {
    let p = cfg.spec.p as f64;
    let sizes: Vec<f64> = trials.iter().filter_map(|t| t.active_size.map(|s| s as f64)).collect();
    let mean_active_size = Stat::of(&sizes).map(|s| s.mean);
    let solvers = cfg
        .solvers
        .iter()
        .map(|sel| {
            let label = sel.label();
            let runs: Vec<&RunResult> = trials.iter().flat_map(|t| t.runs.iter()).filter(|r| r.label == label).collect();
            let abs: Vec<f64> = runs.iter().filter_map(|r| r.work_to_abs).collect();
            let rel: Vec<f64> = runs.iter().filter_map(|r| r.work_to_rel).collect();
            let checkpoints = CHECKPOINTS
                .iter()
                .enumerate()
                .map(|(i, &c)| {
                    let vals: Vec<f64> = runs.iter().map(|r| r.at_checkpoints[i]).filter(|v| v.is_finite()).collect();
                    Checkpoint { work_units: c * p, rel_subopt: Stat::of(&vals) }
                })
                .collect();
            SolverSummary {
                label,
                selection: *sel,
                runs: runs.len(),
                work_to_abs: Stat::of(&abs),
                reached_abs: abs.len(),
                work_to_rel: Stat::of(&rel),
                reached_rel: rel.len(),
                max_final_rel_subopt: runs.iter().map(|r| r.final_rel_subopt).fold(f64::NEG_INFINITY, f64::max),
                checkpoints,
            }
        })
        .collect();
    ExperimentSummary {
        generator: GENERATOR.to_string(),
        spec: cfg.spec,
        efficiency: cfg.efficiency,
        max_sweeps: cfg.max_sweeps,
        abs_threshold: ABS_THRESHOLD,
        rel_threshold: REL_THRESHOLD,
        mean_active_size,
        solvers,
        trials,
    }
}
