//! Command-line front end: generate instances, sample scenarios, build and
//! export models, evaluate fixed solutions, solve, cross-compare policies
//! and run full experiments.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use flpbd::experiment::{default_desk_config, run_experiment, ExperimentConfig};
use flpbd::genbench::{
    generate_instance, load_coords, synthetic_coords, DemandPattern, EllMode, GeneratorConfig,
    SetupVariability,
};
use flpbd::instance::FirstStageSolution;
use flpbd::milp;
use flpbd::recourse::{self, Policy};
use flpbd::scenario::{sample_correlated, sample_independent};
use flpbd::solve::{
    branch_and_bound, brute_force, solve_via_export, BruteForceGuard, Limits, SolveResult,
};
use flpbd::xeval::{cross_gap, fmt_sig9, gap_matrix_csv};
use flpbd::{Instance, ScenarioSet};

#[derive(Parser)]
#[command(
    name = "flpbd",
    version,
    about = "Facility location with Bernoulli demand under four outsourcing policies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark instance and write it as JSON.
    GenInstance(GenInstanceArgs),
    /// Sample a scenario set for an instance and write it as JSON.
    SampleScenarios(SampleArgs),
    /// Build a policy model and export it as MPS or LP text.
    BuildModel(BuildModelArgs),
    /// Evaluate a fixed first-stage solution under one policy.
    Eval(EvalArgs),
    /// Solve one instance under one policy.
    Solve(SolveArgs),
    /// Solve all four policies and write the cross-policy gap matrix.
    CrossEval(CrossEvalArgs),
    /// Run a full experiment grid and write CSV reports.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PatternArg {
    Pt1,
    Pt2,
}

impl From<PatternArg> for DemandPattern {
    fn from(p: PatternArg) -> Self {
        match p {
            PatternArg::Pt1 => DemandPattern::Pt1,
            PatternArg::Pt2 => DemandPattern::Pt2,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SetupVarArg {
    Zero,
    Mu10,
    Mu3,
}

impl From<SetupVarArg> for SetupVariability {
    fn from(v: SetupVarArg) -> Self {
        match v {
            SetupVarArg::Zero => SetupVariability::Zero,
            SetupVarArg::Mu10 => SetupVariability::MuOver10,
            SetupVarArg::Mu3 => SetupVariability::MuOver3,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EllArg {
    Zero,
    Positive,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Fo,
    CdCo,
    OdCo,
    Ro,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Fo => Policy::Fo,
            PolicyArg::CdCo => Policy::CdCo,
            PolicyArg::OdCo => Policy::OdCo,
            PolicyArg::Ro => Policy::Ro,
        }
    }
}

#[derive(Args)]
struct GenInstanceArgs {
    /// TSPLIB EUC_2D file to draw points from.
    #[arg(long, conflicts_with = "synthetic_points")]
    coords_file: Option<PathBuf>,
    /// Number of synthetic uniform points to draw instead of a file.
    #[arg(long)]
    synthetic_points: Option<usize>,
    #[arg(long)]
    sites: usize,
    #[arg(long)]
    customers: usize,
    #[arg(long, value_enum, default_value = "pt1")]
    pattern: PatternArg,
    /// Capacity factor (1 = tight, 4 = loose).
    #[arg(long, default_value_t = 1)]
    gamma: u32,
    #[arg(long, value_enum, default_value = "mu10")]
    setup_var: SetupVarArg,
    #[arg(long, value_enum, default_value = "positive")]
    ell: EllArg,
    /// Target open-facility count used to scale capacities.
    #[arg(long, default_value_t = 5)]
    target_open: usize,
    /// Outsourcing penalty as a multiple of the largest serving cost.
    #[arg(long, default_value_t = 1.5)]
    penalty_ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output instance JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Number of scenarios.
    #[arg(long, default_value_t = 50)]
    count: usize,
    /// Spatially correlated demands instead of independent ones.
    #[arg(long)]
    correlated: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output scenario JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BuildModelArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    scenarios: PathBuf,
    #[arg(long, value_enum)]
    policy: PolicyArg,
    /// Add the facility-outsourcing valid inequalities (FO only).
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    cuts: bool,
    /// mps or lp.
    #[arg(long, default_value = "mps")]
    format: String,
    /// Unused; accepted so every subcommand takes a seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output model path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    scenarios: PathBuf,
    #[arg(long, value_enum)]
    policy: PolicyArg,
    /// First-stage solution JSON ({"open": [...], "assign": [...]}).
    #[arg(long)]
    solution: PathBuf,
    /// Unused; accepted so every subcommand takes a seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    scenarios: PathBuf,
    #[arg(long, value_enum)]
    policy: PolicyArg,
    /// bnb (branch and bound), brute (exhaustive oracle) or external.
    #[arg(long, default_value = "bnb")]
    method: String,
    /// External solver command with {model} and {solution} placeholders.
    #[arg(long)]
    solver_cmd: Option<String>,
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    node_limit: Option<u64>,
    /// Unused; accepted so every subcommand takes a seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output solution JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CrossEvalArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    scenarios: PathBuf,
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    node_limit: Option<u64>,
    /// Unused; accepted so every subcommand takes a seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for gap.csv and solution files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment configuration JSON; the default desk-scale grid when
    /// omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    node_limit: Option<u64>,
    /// Output directory (overrides the configured one).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_or_print(out: Option<&PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn load_pair(
    instance: &PathBuf,
    scenarios: &PathBuf,
) -> anyhow::Result<(Instance<f64>, ScenarioSet<f64>)> {
    let inst = Instance::load(instance)
        .with_context(|| format!("loading instance {}", instance.display()))?;
    let report = inst.validate();
    if !report.is_ok() {
        bail!("invalid instance: {}", report.violations.join("; "));
    }
    let scen = ScenarioSet::load(scenarios)
        .with_context(|| format!("loading scenarios {}", scenarios.display()))?;
    Ok((inst, scen))
}

fn print_solve_summary(policy: Policy, result: &SolveResult<f64>) {
    let z_upper = result
        .z_upper
        .map_or("-".to_string(), |v| fmt_sig9(v));
    let z_lower = if result.z_lower.is_finite() {
        fmt_sig9(result.z_lower)
    } else {
        "-".to_string()
    };
    let gap = result.gap_pct.map_or("-".to_string(), |v| fmt_sig9(v));
    println!(
        "{policy}: status={} z_upper={z_upper} z_lower={z_lower} gap_pct={gap} nodes={}",
        result.status, result.stats.nodes
    );
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::GenInstance(args) => {
            let coords = match (&args.coords_file, args.synthetic_points) {
                (Some(path), _) => load_coords(path)?,
                (None, Some(count)) => synthetic_coords(count, args.seed ^ 0x9e37_79b9),
                (None, None) => bail!("need --coords-file or --synthetic-points"),
            };
            let mut cfg = GeneratorConfig::new(
                coords,
                args.sites,
                args.customers,
                args.pattern.into(),
                args.gamma,
                args.setup_var.into(),
                match args.ell {
                    EllArg::Zero => EllMode::Zero,
                    EllArg::Positive => EllMode::Positive,
                },
                args.seed,
            );
            cfg.target_open = args.target_open;
            cfg.penalty_ratio = args.penalty_ratio;
            let inst: Instance<f64> = generate_instance(&cfg)?;
            write_or_print(args.out.as_ref(), &inst.to_json())?;
        }
        Command::SampleScenarios(args) => {
            let inst = Instance::<f64>::load(&args.instance)?;
            let scen = if args.correlated {
                sample_correlated(&inst, args.count, args.seed)?
            } else {
                sample_independent(&inst, args.count, args.seed)?
            };
            write_or_print(args.out.as_ref(), &scen.to_json())?;
        }
        Command::BuildModel(args) => {
            let (inst, scen) = load_pair(&args.instance, &args.scenarios)?;
            let model = milp::build(&inst, &scen, args.policy.into(), args.cuts);
            let text = match args.format.as_str() {
                "mps" => milp::write_mps_string(&model),
                "lp" => milp::write_lp_string(&model),
                other => bail!("unknown format {other:?}, expected mps or lp"),
            };
            write_or_print(args.out.as_ref(), &text)?;
            eprintln!(
                "{}: {} variables, {} constraints",
                model.name,
                model.n_vars(),
                model.n_cons()
            );
        }
        Command::Eval(args) => {
            let (inst, scen) = load_pair(&args.instance, &args.scenarios)?;
            let sol = FirstStageSolution::load(&args.solution)?;
            let policy: Policy = args.policy.into();
            let eval = recourse::evaluate(&inst, &scen, &sol, policy)?;
            let b = eval.breakdown;
            println!("expected_cost {}", fmt_sig9(eval.expected_cost));
            if let Some(out) = &args.out {
                let report = serde_json::json!({
                    "policy": policy.as_str(),
                    "expected_cost": eval.expected_cost,
                    "opening": b.opening,
                    "service": b.service,
                    "penalty": b.penalty,
                    "reassign": b.reassign,
                });
                std::fs::write(out, serde_json::to_string_pretty(&report)?)?;
            }
        }
        Command::Solve(args) => {
            let (inst, scen) = load_pair(&args.instance, &args.scenarios)?;
            let policy: Policy = args.policy.into();
            let limits = Limits {
                max_nodes: args.node_limit,
                max_seconds: args.time_limit,
            };
            let result = match args.method.as_str() {
                "bnb" => branch_and_bound(&inst, &scen, policy, &limits)?,
                "brute" => brute_force(&inst, &scen, policy, &BruteForceGuard::default())?,
                "external" => {
                    let cmd = args
                        .solver_cmd
                        .as_deref()
                        .context("--method external needs --solver-cmd")?;
                    let dir = std::env::temp_dir();
                    solve_via_export(&inst, &scen, policy, cmd, &dir)?
                }
                other => bail!("unknown method {other:?}"),
            };
            print_solve_summary(policy, &result);
            if let (Some(out), Some(best)) = (&args.out, &result.best) {
                best.solution.save(out)?;
            }
        }
        Command::CrossEval(args) => {
            let (inst, scen) = load_pair(&args.instance, &args.scenarios)?;
            std::fs::create_dir_all(&args.out)?;
            let limits = Limits {
                max_nodes: args.node_limit,
                max_seconds: args.time_limit,
            };
            let mut solutions = Vec::with_capacity(4);
            let mut optima = [0.0f64; 4];
            let mut proven = [false; 4];
            for (k, &policy) in Policy::ALL.iter().enumerate() {
                let result = branch_and_bound(&inst, &scen, policy, &limits)?;
                print_solve_summary(policy, &result);
                let best = result
                    .best
                    .with_context(|| format!("no feasible solution under {policy}"))?;
                optima[k] = result.z_upper.expect("incumbent exists");
                proven[k] = result.status == flpbd::solve::SolveStatus::Optimal;
                best.solution
                    .save(args.out.join(format!("solution_{}.json", policy_slug(policy))))?;
                solutions.push(best.solution);
            }
            let solutions: [FirstStageSolution; 4] =
                solutions.try_into().expect("four policies");
            let matrix = cross_gap(&inst, &scen, &solutions, &optima, &proven)?;
            std::fs::write(args.out.join("gap.csv"), gap_matrix_csv(&matrix))?;
            println!("gap matrix written to {}", args.out.join("gap.csv").display());
        }
        Command::Experiment(args) => {
            let mut cfg: ExperimentConfig = match &args.config {
                Some(path) => ExperimentConfig::load(path)?,
                None => {
                    let out = args
                        .out
                        .clone()
                        .context("--out is required without --config")?;
                    default_desk_config(out, args.seed)
                }
            };
            if let Some(out) = args.out {
                cfg.out_dir = out;
            }
            if args.config.is_none() {
                cfg.seed = args.seed;
            }
            if args.time_limit.is_some() {
                cfg.time_limit_s = args.time_limit;
            }
            if args.node_limit.is_some() {
                cfg.node_limit = args.node_limit;
            }
            let report = run_experiment(&cfg)?;
            let solved: usize = report
                .units
                .iter()
                .flat_map(|u| u.rows.iter())
                .filter(|r| r.status == Some(flpbd::solve::SolveStatus::Optimal))
                .count();
            let total: usize = report.units.iter().map(|u| u.rows.len()).sum();
            println!(
                "{} units, {solved}/{total} solves optimal, {} excluded from aggregates; reports in {}",
                report.units.len(),
                report.excluded,
                cfg.out_dir.display()
            );
            if let Some(means) = report.open_means {
                for (k, policy) in Policy::ALL.iter().enumerate() {
                    println!("mean open facilities {policy}: {}", fmt_sig9(means[k]));
                }
            }
        }
    }
    Ok(())
}

fn policy_slug(policy: Policy) -> &'static str {
    match policy {
        Policy::Fo => "fo",
        Policy::CdCo => "cdco",
        Policy::OdCo => "odco",
        Policy::Ro => "ro",
    }
}
