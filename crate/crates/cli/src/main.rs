use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dykstra_cd::bregman::{
    general_cd, parallel_admm_cd_general, parallel_dykstra_cd_general, theorem6_check, SmoothLoss,
};
use dykstra_cd::geometry::io::{InstanceFile, LossKind, LossSpec};
use dykstra_cd::harness::experiment::{run_experiment, EfficiencyModel, ExperimentConfig, SolverSel};
use dykstra_cd::harness::instance::{gen_data, gen_labels, InstanceSpec};
use dykstra_cd::harness::oracle::reference_lasso;
use dykstra_cd::harness::plot::{emit_plot, read_bundle};
use dykstra_cd::harness::write_atomic;
use dykstra_cd::parallel::{parallel_admm_cd, parallel_dykstra_cd, AdmmParams, WeightVector};
use dykstra_cd::rates::RateReport;
use dykstra_cd::serial::{block_cd, dykstra, equivalence_check, hildreth, lasso_cd, Snapshots};
use dykstra_cd::{Error, Penalty, RegressionProblem, Result, RunOptions, SolverTrace, StopRule};

/// Overrides every output directory.
const OUT_DIR_ENV: &str = "DYKSTRA_CD_OUT_DIR";

#[derive(Parser)]
#[command(name = "dykstra-cd", version, about = "Dykstra, coordinate descent and ADMM solvers")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a Gaussian instance and write it as JSON.
    Gen(GenArgs),
    /// Run one solver on an instance file and write its trace.
    Solve(SolveArgs),
    /// Run the Dykstra/coordinate-descent lockstep check.
    Equiv(EquivArgs),
    /// Linear-rate bounds and measured contraction for a lasso instance.
    Rates(RatesArgs),
    /// Multi-trial comparison of serial and parallel solvers.
    Experiment(ExperimentArgs),
    /// Render an experiment bundle as SVG.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PenaltyArg {
    L1,
    GroupL2,
    Linf,
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 500)]
    p: usize,
    #[arg(long, default_value_t = 20)]
    s: usize,
    #[arg(long, default_value_t = 1.0)]
    noise_sd: f64,
    #[arg(long, default_value_t = 5.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    trial: usize,
    /// Columns per block.
    #[arg(long, default_value_t = 1)]
    width: usize,
    #[arg(long, value_enum, default_value_t = PenaltyArg::L1)]
    penalty: PenaltyArg,
    /// Attach a logistic loss on thresholded labels.
    #[arg(long)]
    logistic: bool,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum SolverArg {
    Cd,
    Dykstra,
    Hildreth,
    Pdcd,
    Padmm,
    GenCd,
    GenPdcd,
    GenPadmm,
}

#[derive(clap::Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, value_enum)]
    solver: SolverArg,
    /// Total augmented Lagrangian parameter, split evenly over blocks.
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Comma-separated block weights summing to one; uniform when omitted.
    #[arg(long, value_delimiter = ',')]
    gamma: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1000)]
    max_sweeps: usize,
    /// Sup-norm change tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Output directory for `<stem>.csv` and `<stem>.json`; the CSV goes to
    /// standard output when neither this nor the environment override is set.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    stem: Option<String>,
}

#[derive(clap::Args)]
struct EquivArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = 200)]
    sweeps: usize,
    /// Largest acceptable deviation.
    #[arg(long, default_value_t = 1e-9)]
    threshold: f64,
}

#[derive(clap::Args)]
struct RatesArgs {
    instance: PathBuf,
    /// Coordinate-descent sweeps used for the measured ratios.
    #[arg(long, default_value_t = 500)]
    sweeps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ExperimentArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 500)]
    p: usize,
    #[arg(long, default_value_t = 20)]
    s: usize,
    #[arg(long, default_value_t = 5.0)]
    lambda: f64,
    #[arg(long, default_value_t = 30)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    efficiency: f64,
    /// Parallel-ADMM-CD parameters to run.
    #[arg(long, value_delimiter = ',', default_values_t = [10.0, 50.0, 200.0])]
    rho: Vec<f64>,
    #[arg(long, default_value_t = 200_000)]
    max_sweeps: usize,
    /// Relative suboptimality at which runs stop.
    #[arg(long, default_value_t = 1e-10)]
    stop_rel: f64,
    #[arg(long, default_value = "experiment_out")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct PlotArgs {
    /// Experiment output directory.
    bundle: PathBuf,
    /// SVG path; `<bundle>/plot.svg` by default.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Writes to standard output; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn out_dir(flag: Option<&Path>) -> Option<PathBuf> {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).or_else(|| flag.map(Path::to_path_buf))
}

fn gen(a: GenArgs) -> Result<()> {
    let spec = InstanceSpec { n: a.n, p: a.p, s: a.s, noise_sd: a.noise_sd, lambda: a.lambda, seed: a.seed, trials: a.trial + 1 };
    let (x, y) = gen_data(&spec, a.trial)?;
    let penalty = match a.penalty {
        PenaltyArg::L1 => Penalty::l1(a.lambda),
        PenaltyArg::GroupL2 => Penalty::group_l2(a.lambda),
        PenaltyArg::Linf => Penalty::linf(a.lambda),
    };
    let problem = if a.width == 1 && matches!(a.penalty, PenaltyArg::L1) {
        RegressionProblem::lasso(x, y, a.lambda)?
    } else {
        RegressionProblem::grouped(x, y, a.width, penalty)?
    };
    let loss = if a.logistic {
        Some(LossSpec { kind: LossKind::Logistic, y: gen_labels(&spec, a.trial)?.as_slice().to_vec() })
    } else {
        None
    };
    let file = InstanceFile::from_problem(&problem, loss);
    let json = file.to_json()?;
    let path = match out_dir(None) {
        Some(dir) => Some(dir.join(a.out.as_ref().and_then(|p| p.file_name()).unwrap_or("instance.json".as_ref()))),
        None => a.out,
    };
    match path {
        Some(path) => write_atomic(&path, json.as_bytes()),
        None => emit(&format!("{json}\n")),
    }
}

fn load(path: &Path) -> Result<(RegressionProblem, SmoothLoss)> {
    let file = InstanceFile::read(path)?;
    let problem = file.to_problem()?;
    let loss = match &file.loss {
        Some(spec) => SmoothLoss::from_spec(spec)?,
        None => SmoothLoss::quadratic(problem.y().clone())?,
    };
    Ok((problem, loss))
}

fn solve(a: SolveArgs) -> Result<()> {
    let (problem, loss) = load(&a.instance)?;
    let stop = StopRule { max_sweeps: a.max_sweeps, tol_change: a.tol, tol_gap: None, target_criterion: None };
    let opts = RunOptions { snapshots: Snapshots::Never, ..RunOptions::new(stop) };
    let d = problem.num_blocks();
    let weights = match &a.gamma {
        Some(g) => WeightVector::new(g.clone())?,
        None => WeightVector::uniform(d),
    };
    let trace: SolverTrace = match a.solver {
        SolverArg::Cd => block_cd(&problem, &opts, None)?.1,
        SolverArg::Dykstra => dykstra(&problem.dual_problem(), &opts)?.1,
        SolverArg::Hildreth => hildreth(&problem.halfspace_sets()?, problem.y(), &opts)?.2,
        SolverArg::Pdcd => parallel_dykstra_cd(&problem, &weights, &opts)?.1,
        SolverArg::Padmm => parallel_admm_cd(&problem, &AdmmParams::uniform(d, a.rho)?, &opts)?.1,
        SolverArg::GenCd => general_cd(&loss, &problem, &opts, None)?.1,
        SolverArg::GenPdcd => parallel_dykstra_cd_general(&loss, &problem, &opts)?.1,
        SolverArg::GenPadmm => parallel_admm_cd_general(&loss, &problem, a.rho, &opts)?.1,
    };
    match out_dir(a.out.as_deref()) {
        Some(dir) => {
            let stem = a.stem.clone().unwrap_or_else(|| trace.config.solver.clone());
            trace.write(&dir, &stem)?;
            eprintln!("{}: {} sweeps, criterion {:e}", stem, trace.sweeps(), trace.last().criterion);
        }
        None => emit(&trace.to_csv())?,
    }
    Ok(())
}

/// Exit status 3 when the deviation exceeds the threshold.
fn equiv(a: EquivArgs) -> Result<ExitCode> {
    let (problem, loss) = load(&a.instance)?;
    let stop = StopRule::sweeps(a.sweeps).with_tol(f64::MIN_POSITIVE);
    let (check, dev) = if loss.is_quadratic() {
        ("dykstra_vs_cd", equivalence_check(&problem, &stop)?)
    } else {
        ("bregman_dykstra_vs_cd", theorem6_check(&loss, &problem, &stop)?)
    };
    let ok = dev <= a.threshold;
    let report = serde_json::json!({
        "check": check,
        "sweeps": a.sweeps,
        "deviation": dev,
        "threshold": a.threshold,
        "pass": ok,
    });
    emit(&format!("{}\n", serde_json::to_string_pretty(&report).map_err(Error::from)?))?;
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn rates(a: RatesArgs) -> Result<()> {
    let (problem, _) = load(&a.instance)?;
    let lambda = problem
        .lasso_lambda()
        .ok_or_else(|| Error::Type("rate bounds need a lasso instance (single-column L1 blocks)".into()))?;
    let (w_star, _) = reference_lasso(problem.x(), problem.y(), lambda, 1e-10)?;
    let opts = RunOptions { snapshots: Snapshots::Always, ..RunOptions::new(StopRule::sweeps(a.sweeps).with_tol(f64::MIN_POSITIVE)) };
    let (_, trace) = lasso_cd(problem.x(), problem.y(), lambda, &opts)?;
    let report = RateReport::build(problem.x(), w_star.as_slice(), None, Some(&trace))?;
    let json = report.to_json()?;
    match out_dir(a.out.as_deref()) {
        Some(dir) => write_atomic(&dir.join("rates.json"), json.as_bytes()),
        None => emit(&format!("{json}\n")),
    }
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let spec = InstanceSpec { n: a.n, p: a.p, s: a.s, noise_sd: 1.0, lambda: a.lambda, seed: a.seed, trials: a.trials };
    let mut solvers = vec![SolverSel::Cd, SolverSel::Pdcd];
    solvers.extend(a.rho.iter().map(|&rho| SolverSel::Padmm { rho }));
    let cfg = ExperimentConfig {
        max_sweeps: a.max_sweeps,
        stop_rel: a.stop_rel,
        ..ExperimentConfig::new(spec, solvers, EfficiencyModel::new(a.efficiency)?)
    };
    let dir = out_dir(Some(&a.out)).expect("a default directory is set");
    let summary = run_experiment(&cfg, Some(&dir))?;
    if let Some(m) = summary.mean_active_size {
        println!("mean oracle active-set size: {m:.2}");
    }
    for s in &summary.solvers {
        println!(
            "{:<14} mean work to 1e-4: {:>12.1}  reached {}/{}  max final relative suboptimality {:.2e}",
            s.label,
            s.mean_work_to_abs(),
            s.reached_abs,
            s.runs,
            s.max_final_rel_subopt
        );
    }
    println!("summary: {}", dir.join("summary.json").display());
    let failed = summary.failed_trials();
    if failed > 0 {
        eprintln!("{failed} trial(s) reported errors; see summary.json");
    }
    Ok(())
}

fn plot(a: PlotArgs) -> Result<()> {
    let series = read_bundle(&a.bundle)?;
    let default_name = PathBuf::from("plot.svg");
    let path = match out_dir(None) {
        Some(dir) => dir.join(a.out.as_ref().and_then(|p| p.file_name().map(PathBuf::from)).unwrap_or(default_name)),
        None => a.out.unwrap_or_else(|| a.bundle.join(default_name)),
    };
    emit_plot(&series, &path)?;
    println!("{}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Gen(a) => gen(a)?,
        Cmd::Solve(a) => solve(a)?,
        Cmd::Equiv(a) => return equiv(a),
        Cmd::Rates(a) => rates(a)?,
        Cmd::Experiment(a) => experiment(a)?,
        Cmd::Plot(a) => plot(a)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
