//! Experiment orchestration: solve a batch of (instance, scenario) units
//! under several policies, cross-evaluate the solutions, and emit CSV
//! reports.
//!
//! Every CSV artifact is deterministic for a fixed configuration and seed:
//! rows are ordered by unit then policy, and all floats carry 9 significant
//! digits. Wall-clock measurements go to a separate `timings.txt`, which is
//! the one file outside the determinism contract.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::genbench::{
    generate_instance, load_coords, synthetic_coords, DemandPattern, EllMode, GeneratorConfig,
    SetupVariability,
};
use crate::instance::FirstStageSolution;
use crate::recourse::Policy;
use crate::scenario::{sample_correlated, sample_independent};
use crate::solve::{branch_and_bound, solve_via_export, Limits, SolveStatus};
use crate::xeval::{
    cost_breakdown, cross_gap, fmt_sig9, gap_matrix_csv, mean_gap_matrix, open_facility_stats,
    CostStructure, GapMatrix, COMPONENTS,
};
use crate::{Error, Instance, Result, ScenarioSet};

/// Where a unit's instance comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceSource {
    File(PathBuf),
    Generate(GenSpec),
}

/// Generator parameters in file-friendly form; coordinates are either a
/// TSPLIB file or synthetic points derived from the unit seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic_points: Option<usize>,
    pub sites: usize,
    pub customers: usize,
    pub pattern: DemandPattern,
    pub gamma: u32,
    pub setup_variability: SetupVariability,
    pub ell_mode: EllMode,
}

/// Where a unit's scenario set comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioSource {
    File(PathBuf),
    Sample { count: usize, correlated: bool },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentUnit {
    pub id: String,
    pub instance: InstanceSource,
    pub scenarios: ScenarioSource,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Internal,
    External { },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub units: Vec<ExperimentUnit>,
    pub policies: Vec<Policy>,
    /// Internal branch and bound, or an external command template with
    /// `{model}` and `{solution}` placeholders.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver_cmd: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_limit_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_limit: Option<u64>,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        if self.units.is_empty() {
            return Err(Error::Parse("experiment needs at least one unit".into()));
        }
        if self.policies.is_empty() {
            return Err(Error::Parse("experiment needs at least one policy".into()));
        }
        if self.time_limit_s.is_some_and(|t| t < 0.0) {
            return Err(Error::Parse("time limit must be nonnegative".into()));
        }
        let mut ids: Vec<&str> = self.units.iter().map(|u| u.id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.units.len() {
            return Err(Error::Parse("unit ids must be unique".into()));
        }
        for unit in &self.units {
            if let ScenarioSource::Sample { count, .. } = unit.scenarios {
                if count == 0 {
                    return Err(Error::Parse(format!(
                        "unit {} samples zero scenarios",
                        unit.id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The desk-scale default grid: every combination of 3 or 4 sites, 6 or 8
/// customers, 8 or 16 scenarios, independent or correlated demands, tight
/// or loose capacities, and the two demand patterns — 64 units, all within
/// the exact solvers' reach.
pub fn default_desk_config(out_dir: impl Into<PathBuf>, seed: u64) -> ExperimentConfig {
    let mut units = Vec::new();
    for &sites in &[3usize, 4] {
        for &customers in &[6usize, 8] {
            for &n_scen in &[8usize, 16] {
                for &correlated in &[false, true] {
                    for &gamma in &[1u32, 4] {
                        for &pattern in &[DemandPattern::Pt1, DemandPattern::Pt2] {
                            let id = format!(
                                "i{sites}_j{customers}_w{n_scen:02}_{}_g{gamma}_{}",
                                if correlated { "c" } else { "u" },
                                match pattern {
                                    DemandPattern::Pt1 => "pt1",
                                    DemandPattern::Pt2 => "pt2",
                                }
                            );
                            units.push(ExperimentUnit {
                                id,
                                instance: InstanceSource::Generate(GenSpec {
                                    coords_file: None,
                                    synthetic_points: Some(sites + customers + 6),
                                    sites,
                                    customers,
                                    pattern,
                                    gamma,
                                    setup_variability: SetupVariability::MuOver10,
                                    ell_mode: EllMode::Positive,
                                }),
                                scenarios: ScenarioSource::Sample {
                                    count: n_scen,
                                    correlated,
                                },
                            });
                        }
                    }
                }
            }
        }
    }
    ExperimentConfig {
        units,
        policies: Policy::ALL.to_vec(),
        solver_cmd: None,
        time_limit_s: None,
        node_limit: None,
        out_dir: out_dir.into(),
        seed,
    }
}

#[derive(Debug, Clone)]
pub struct PolicyRow {
    pub unit: String,
    pub policy: Policy,
    pub status: Option<SolveStatus>,
    pub z_upper: Option<f64>,
    pub z_lower: Option<f64>,
    pub gap_pct: Option<f64>,
    pub nodes: u64,
    pub wall_ms: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct UnitOutcome {
    pub id: String,
    /// (correlated, gamma, pattern) for generated units.
    pub meta: Option<(bool, u32, DemandPattern)>,
    pub rows: Vec<PolicyRow>,
    pub gap_matrix: Option<GapMatrix<f64>>,
    pub cost: Vec<(Policy, CostStructure<f64>)>,
    pub solutions: Option<[FirstStageSolution; 4]>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub units: Vec<UnitOutcome>,
    pub mean_gap: Option<[[f64; 4]; 4]>,
    /// Units excluded from the aggregate gap matrix because some policy
    /// produced no feasible solution (or was not run).
    pub excluded: usize,
    pub open_means: Option<[f64; 4]>,
}

fn resolve_instance(source: &InstanceSource, unit_seed: u64) -> Result<Instance<f64>> {
    match source {
        InstanceSource::File(path) => Instance::load(path),
        InstanceSource::Generate(spec) => {
            let coords = match (&spec.coords_file, spec.synthetic_points) {
                (Some(path), _) => load_coords(path)?,
                (None, Some(count)) => synthetic_coords(count, unit_seed ^ 0x9e37_79b9),
                (None, None) => {
                    return Err(Error::Parse(
                        "generator spec needs coords_file or synthetic_points".into(),
                    ))
                }
            };
            let cfg = GeneratorConfig::new(
                coords,
                spec.sites,
                spec.customers,
                spec.pattern,
                spec.gamma,
                spec.setup_variability,
                spec.ell_mode,
                unit_seed,
            );
            generate_instance(&cfg)
        }
    }
}

fn resolve_scenarios(
    source: &ScenarioSource,
    inst: &Instance<f64>,
    unit_seed: u64,
) -> Result<ScenarioSet<f64>> {
    match source {
        ScenarioSource::File(path) => ScenarioSet::load(path),
        ScenarioSource::Sample { count, correlated } => {
            if *correlated {
                sample_correlated(inst, *count, unit_seed ^ 0x51ce_b00c)
            } else {
                sample_independent(inst, *count, unit_seed ^ 0x51ce_b00c)
            }
        }
    }
}

/// Runs the whole experiment and writes the CSV reports into
/// `cfg.out_dir`. Failures of individual units or policies are recorded in
/// their rows and the run continues.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir)?;
    let limits = Limits {
        max_nodes: cfg.node_limit,
        max_seconds: cfg.time_limit_s,
    };

    let mut units = Vec::with_capacity(cfg.units.len());
    for (idx, unit) in cfg.units.iter().enumerate() {
        let unit_seed = cfg.seed.wrapping_add(idx as u64);
        let meta = match (&unit.instance, &unit.scenarios) {
            (InstanceSource::Generate(spec), ScenarioSource::Sample { correlated, .. }) => {
                Some((*correlated, spec.gamma, spec.pattern))
            }
            _ => None,
        };
        let mut outcome = UnitOutcome {
            id: unit.id.clone(),
            meta,
            rows: Vec::new(),
            gap_matrix: None,
            cost: Vec::new(),
            solutions: None,
        };

        let prepared = resolve_instance(&unit.instance, unit_seed)
            .and_then(|inst| resolve_scenarios(&unit.scenarios, &inst, unit_seed).map(|s| (inst, s)));
        let (inst, scen) = match prepared {
            Ok(pair) => pair,
            Err(e) => {
                for &policy in &cfg.policies {
                    outcome.rows.push(PolicyRow {
                        unit: unit.id.clone(),
                        policy,
                        status: None,
                        z_upper: None,
                        z_lower: None,
                        gap_pct: None,
                        nodes: 0,
                        wall_ms: 0.0,
                        error: Some(e.to_string()),
                    });
                }
                units.push(outcome);
                continue;
            }
        };

        let mut per_policy: Vec<Option<(FirstStageSolution, f64, bool)>> = vec![None; 4];
        for &policy in &cfg.policies {
            let solved = match &cfg.solver_cmd {
                None => branch_and_bound(&inst, &scen, policy, &limits),
                Some(cmd) => solve_via_export(&inst, &scen, policy, cmd, &cfg.out_dir),
            };
            match solved {
                Ok(result) => {
                    let k = Policy::ALL.iter().position(|&p| p == policy).expect("known");
                    if let (Some(best), Some(up)) = (&result.best, result.z_upper) {
                        per_policy[k] = Some((
                            best.solution.clone(),
                            up,
                            result.status == SolveStatus::Optimal,
                        ));
                        outcome.cost.push((policy, cost_breakdown(&best.evaluation)));
                    }
                    outcome.rows.push(PolicyRow {
                        unit: unit.id.clone(),
                        policy,
                        status: Some(result.status),
                        z_upper: result.z_upper,
                        z_lower: result.z_lower.is_finite().then_some(result.z_lower),
                        gap_pct: result.gap_pct,
                        nodes: result.stats.nodes,
                        wall_ms: result.stats.wall.as_secs_f64() * 1e3,
                        error: None,
                    });
                }
                Err(e) => {
                    outcome.rows.push(PolicyRow {
                        unit: unit.id.clone(),
                        policy,
                        status: None,
                        z_upper: None,
                        z_lower: None,
                        gap_pct: None,
                        nodes: 0,
                        wall_ms: 0.0,
                        error: Some(e.to_string()),
                    });
                }
            }
        }

        let complete = cfg.policies.len() == 4 && per_policy.iter().all(Option::is_some);
        if complete {
            let mut solutions = Vec::with_capacity(4);
            let mut optima = [0.0f64; 4];
            let mut proven = [false; 4];
            for (k, slot) in per_policy.into_iter().enumerate() {
                let (sol, value, optimal) = slot.expect("complete");
                optima[k] = value;
                proven[k] = optimal;
                solutions.push(sol);
            }
            let solutions: [FirstStageSolution; 4] =
                solutions.try_into().expect("four solutions");
            match cross_gap(&inst, &scen, &solutions, &optima, &proven) {
                Ok(matrix) => {
                    outcome.gap_matrix = Some(matrix);
                    outcome.solutions = Some(solutions);
                }
                Err(e) => {
                    for row in &mut outcome.rows {
                        if row.error.is_none() {
                            row.error = Some(format!("cross-evaluation failed: {e}"));
                        }
                    }
                }
            }
        }
        units.push(outcome);
    }

    let matrices: Vec<GapMatrix<f64>> = units
        .iter()
        .filter_map(|u| u.gap_matrix.clone())
        .collect();
    let excluded = units.len() - matrices.len();
    let mean_gap = mean_gap_matrix(&matrices);
    let batch: Vec<[FirstStageSolution; 4]> = units
        .iter()
        .filter_map(|u| u.solutions.clone())
        .collect();
    let open_means = open_facility_stats(&batch).ok();

    let report = ExperimentReport {
        units,
        mean_gap,
        excluded,
        open_means,
    };
    write_reports(cfg, &report)?;
    Ok(report)
}

fn opt_fmt(x: Option<f64>) -> String {
    x.map(fmt_sig9).unwrap_or_default()
}

fn write_reports(cfg: &ExperimentConfig, report: &ExperimentReport) -> Result<()> {
    let dir = &cfg.out_dir;

    // results.csv: one row per (unit, policy)
    let mut results = String::from("instance,policy,status,z_upper,z_lower,gap_pct,nodes,error\n");
    let mut timings = String::from("instance,policy,wall_ms\n");
    for unit in &report.units {
        for row in &unit.rows {
            let status = row
                .error
                .as_ref()
                .map(|_| "error".to_string())
                .or_else(|| row.status.map(|s| s.to_string()))
                .unwrap_or_default();
            results.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                row.unit,
                row.policy,
                status,
                opt_fmt(row.z_upper),
                opt_fmt(row.z_lower),
                opt_fmt(row.gap_pct),
                row.nodes,
                row.error.as_deref().unwrap_or("").replace(',', ";"),
            ));
            timings.push_str(&format!(
                "{},{},{:.3}\n",
                row.unit, row.policy, row.wall_ms
            ));
        }
    }
    fs::write(dir.join("results.csv"), results)?;
    // wall-clock times are inherently non-reproducible; kept outside the
    // deterministic CSV set
    fs::write(dir.join("timings.txt"), timings)?;

    for unit in &report.units {
        if let Some(matrix) = &unit.gap_matrix {
            fs::write(
                dir.join(format!("gap_{}.csv", unit.id)),
                gap_matrix_csv(matrix),
            )?;
        }
    }
    if let Some(mean) = &report.mean_gap {
        let mut out = String::from("solution_policy");
        for policy in Policy::ALL {
            out.push(',');
            out.push_str(policy.as_str());
        }
        out.push('\n');
        for (a, policy) in Policy::ALL.iter().enumerate() {
            out.push_str(policy.as_str());
            for b in 0..4 {
                out.push(',');
                out.push_str(&fmt_sig9(mean[a][b]));
            }
            out.push('\n');
        }
        out.push_str(&format!("excluded_instances,{}\n", report.excluded));
        fs::write(dir.join("gap_mean.csv"), out)?;
    }

    // cost_structure.csv: long format
    let mut cost = String::from("instance,policy,component,share\n");
    for unit in &report.units {
        for (policy, cs) in &unit.cost {
            for (k, component) in COMPONENTS.iter().enumerate() {
                cost.push_str(&format!(
                    "{},{},{},{}\n",
                    unit.id,
                    policy,
                    component,
                    fmt_sig9(cs.shares[k])
                ));
            }
        }
    }
    fs::write(dir.join("cost_structure.csv"), cost)?;

    let mut opens = String::from("policy,mean_open,instances\n");
    if let Some(means) = &report.open_means {
        let counted = report.units.len() - report.excluded;
        for (k, policy) in Policy::ALL.iter().enumerate() {
            opens.push_str(&format!("{},{},{}\n", policy, fmt_sig9(means[k]), counted));
        }
    }
    fs::write(dir.join("open_facilities.csv"), opens)?;

    // summary.csv: aggregated by (correlation, gamma, pattern) like the
    // policy-performance tables
    let mut summary = String::from(
        "correlated,gamma,pattern,policy,instances,optimal,mean_gap_pct,mean_nodes\n",
    );
    let mut groups: Vec<(bool, u32, DemandPattern)> = report
        .units
        .iter()
        .filter_map(|u| u.meta)
        .collect();
    groups.sort_by_key(|&(c, g, p)| (c, g, p as u8));
    groups.dedup();
    for (corr, gamma, pattern) in groups {
        for policy in Policy::ALL {
            let rows: Vec<&PolicyRow> = report
                .units
                .iter()
                .filter(|u| u.meta == Some((corr, gamma, pattern)))
                .flat_map(|u| u.rows.iter())
                .filter(|r| r.policy == policy)
                .collect();
            if rows.is_empty() {
                continue;
            }
            let optimal = rows
                .iter()
                .filter(|r| r.status == Some(SolveStatus::Optimal))
                .count();
            let gaps: Vec<f64> = rows.iter().filter_map(|r| r.gap_pct).collect();
            let mean_gap = if gaps.is_empty() {
                None
            } else {
                Some(gaps.iter().sum::<f64>() / gaps.len() as f64)
            };
            let mean_nodes =
                rows.iter().map(|r| r.nodes as f64).sum::<f64>() / rows.len() as f64;
            summary.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                u8::from(corr),
                gamma,
                match pattern {
                    DemandPattern::Pt1 => "pt1",
                    DemandPattern::Pt2 => "pt2",
                },
                policy,
                rows.len(),
                optimal,
                opt_fmt(mean_gap),
                fmt_sig9(mean_nodes),
            ));
        }
    }
    fs::write(dir.join("summary.csv"), summary)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(dir: &Path, seed: u64) -> ExperimentConfig {
        let mut cfg = default_desk_config(dir, seed);
        cfg.units.truncate(2);
        cfg
    }

    #[test]
    fn tiny_experiment_solves_all_policies() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config(dir.path(), 7);
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.units.len(), 2);
        for unit in &report.units {
            assert_eq!(unit.rows.len(), 4);
            for row in &unit.rows {
                assert_eq!(row.status, Some(SolveStatus::Optimal), "{}", row.unit);
                assert!(row.error.is_none());
            }
            assert!(unit.gap_matrix.is_some());
        }
        assert!(dir.path().join("results.csv").is_file());
        assert!(dir.path().join("gap_mean.csv").is_file());
        assert!(dir.path().join("cost_structure.csv").is_file());
        assert!(dir.path().join("open_facilities.csv").is_file());
        assert!(dir.path().join("summary.csv").is_file());
    }

    #[test]
    fn reruns_are_byte_identical() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        run_experiment(&tiny_config(dir_a.path(), 13)).unwrap();
        run_experiment(&tiny_config(dir_b.path(), 13)).unwrap();
        let mut names: Vec<String> = fs::read_dir(dir_a.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .filter(|n| n.ends_with(".csv"))
            .collect();
        names.sort();
        assert!(names.len() >= 5);
        for name in names {
            let a = fs::read(dir_a.path().join(&name)).unwrap();
            let b = fs::read(dir_b.path().join(&name)).unwrap();
            assert_eq!(a, b, "{name} differs between reruns");
        }
    }

    #[test]
    fn zero_time_limit_reports_time_limit_statuses() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_config(dir.path(), 3);
        cfg.time_limit_s = Some(0.0);
        let report = run_experiment(&cfg).unwrap();
        for unit in &report.units {
            for row in &unit.rows {
                assert_eq!(row.status, Some(SolveStatus::TimeLimit));
                assert!(row.gap_pct.is_some());
            }
        }
    }

    #[test]
    fn unit_failures_are_recorded_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_config(dir.path(), 3);
        cfg.units[0].instance = InstanceSource::File(PathBuf::from("/nonexistent.json"));
        let report = run_experiment(&cfg).unwrap();
        assert!(report.units[0].rows.iter().all(|r| r.error.is_some()));
        assert!(report.units[1].rows.iter().all(|r| r.error.is_none()));
        assert_eq!(report.excluded, 1);
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = tiny_config(Path::new("out"), 5);
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back = ExperimentConfig::from_json_str(&text).unwrap();
        assert_eq!(back.units.len(), cfg.units.len());
        assert_eq!(back.seed, cfg.seed);
    }

    #[test]
    fn duplicate_unit_ids_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_config(dir.path(), 3);
        let clone = cfg.units[0].clone();
        cfg.units.push(clone);
        assert!(run_experiment(&cfg).is_err());
    }
}
