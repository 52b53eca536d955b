//! Exact solvers at desk scale.
//!
//! `brute_force` enumerates every feasible first stage and is the oracle;
//! `branch_and_bound` explores the same space with a valid lower bound and
//! must reproduce the oracle value; `solve_via_export` hands a model file
//! to an external MILP solver and verifies whatever comes back against the
//! recourse evaluators.

use std::collections::HashMap;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::Rng;

use crate::error::Error;
use crate::instance::{FirstStageSolution, Instance};
use crate::milp;
use crate::recourse::{self, expected_total_fast, Policy, PolicyEvaluation};
use crate::scalar::Scalar;
use crate::scenario::ScenarioSet;
use crate::Result;

/// Size limits for the exhaustive oracle.
#[derive(Debug, Clone, Copy)]
pub struct BruteForceGuard {
    pub max_sites: usize,
    pub max_customers: usize,
    pub max_scenarios: usize,
}

impl Default for BruteForceGuard {
    fn default() -> Self {
        BruteForceGuard {
            max_sites: 4,
            max_customers: 8,
            max_scenarios: 16,
        }
    }
}

/// Work limits for branch and bound.
#[derive(Debug, Clone, Copy, Default)]
pub struct Limits {
    pub max_nodes: Option<u64>,
    pub max_seconds: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    TimeLimit,
    MemoryLimit,
    Infeasible,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::TimeLimit => "time-limit",
            SolveStatus::MemoryLimit => "memory-limit",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SolveStats {
    pub nodes: u64,
    pub wall: Duration,
}

/// Incumbent with its full recourse detail.
#[derive(Debug, Clone)]
pub struct BestSolution<T> {
    pub solution: FirstStageSolution,
    pub evaluation: PolicyEvaluation<T>,
}

#[derive(Debug, Clone)]
pub struct SolveResult<T> {
    pub status: SolveStatus,
    pub best: Option<BestSolution<T>>,
    /// Best feasible objective found, if any.
    pub z_upper: Option<T>,
    /// Proven lower bound; +inf when the problem is infeasible.
    pub z_lower: T,
    /// 100·(z_U − z_L)/z_L; zero when proven optimal, absent without an
    /// incumbent.
    pub gap_pct: Option<T>,
    pub stats: SolveStats,
}

/// Percentage optimality gap 100·(z_U − z_L)/z_L.
pub fn optimality_gap_pct<T: Scalar>(z_upper: T, z_lower: T) -> T {
    T::from_f64_lossy(100.0) * (z_upper - z_lower) / z_lower
}

#[allow(clippy::too_many_arguments)]
fn finish_result<T: Scalar>(
    inst: &Instance<T>,
    scen: &ScenarioSet<T>,
    policy: Policy,
    status: SolveStatus,
    incumbent: Option<(Vec<bool>, Vec<usize>, T)>,
    z_lower: T,
    nodes: u64,
    started: Instant,
) -> SolveResult<T> {
    let best = incumbent.map(|(open, site_of, _)| {
        let solution = FirstStageSolution::from_site_of(inst.n_sites, open, &site_of);
        let evaluation =
            recourse::evaluate(inst, scen, &solution, policy).expect("incumbent is feasible");
        BestSolution {
            solution,
            evaluation,
        }
    });
    let z_upper = best.as_ref().map(|b| b.evaluation.expected_cost);
    let gap_pct = match (status, z_upper) {
        (SolveStatus::Optimal, Some(_)) => Some(T::zero()),
        (_, Some(up)) => Some(optimality_gap_pct(up, z_lower)),
        _ => None,
    };
    SolveResult {
        status,
        best,
        z_upper,
        z_lower,
        gap_pct,
        stats: SolveStats {
            nodes,
            wall: started.elapsed(),
        },
    }
}

/// Exhaustive enumeration of all feasible (y, x); exact but exponential,
/// guarded by `guard`.
pub fn brute_force<T: Scalar>(
    inst: &Instance<T>,
    scen: &ScenarioSet<T>,
    policy: Policy,
    guard: &BruteForceGuard,
) -> Result<SolveResult<T>> {
    if inst.n_sites > guard.max_sites
        || inst.n_customers > guard.max_customers
        || scen.n_scenarios() > guard.max_scenarios
    {
        return Err(Error::SizeGuard(format!(
            "{}x{}x{} exceeds brute-force guard {}x{}x{}",
            inst.n_sites,
            inst.n_customers,
            scen.n_scenarios(),
            guard.max_sites,
            guard.max_customers,
            guard.max_scenarios
        )));
    }
    let started = Instant::now();
    let m = inst.n_sites;
    let n = inst.n_customers;
    let mut best: Option<(Vec<bool>, Vec<usize>, T)> = None;
    let mut evaluated = 0u64;

    for mask in 0..(1u32 << m) {
        let open: Vec<bool> = (0..m).map(|i| mask & (1 << i) != 0).collect();
        let open_sites: Vec<usize> = (0..m).filter(|&i| open[i]).collect();
        if n > 0 && open_sites.is_empty() {
            continue;
        }
        let lb_total: usize = open_sites.iter().map(|&i| inst.min_assigned[i]).sum();
        if lb_total > n {
            continue;
        }
        let mut site_of = vec![usize::MAX; n];
        let mut counts = vec![0usize; m];
        enumerate_assignments(
            inst,
            scen,
            policy,
            &open,
            &open_sites,
            &mut site_of,
            &mut counts,
            0,
            &mut best,
            &mut evaluated,
        );
    }

    let (status, z_lower) = match &best {
        Some((_, _, value)) => (SolveStatus::Optimal, *value),
        None => (SolveStatus::Infeasible, T::infinity()),
    };
    Ok(finish_result(
        inst, scen, policy, status, best, z_lower, evaluated, started,
    ))
}

#[allow(clippy::too_many_arguments)]
fn enumerate_assignments<T: Scalar>(
    inst: &Instance<T>,
    scen: &ScenarioSet<T>,
    policy: Policy,
    open: &[bool],
    open_sites: &[usize],
    site_of: &mut Vec<usize>,
    counts: &mut Vec<usize>,
    j: usize,
    best: &mut Option<(Vec<bool>, Vec<usize>, T)>,
    evaluated: &mut u64,
) {
    let n = inst.n_customers;
    if j == n {
        *evaluated += 1;
        let value = expected_total_fast(inst, scen, policy, open, site_of);
        if best.as_ref().is_none_or(|&(_, _, b)| value < b) {
            *best = Some((open.to_vec(), site_of.clone(), value));
        }
        return;
    }
    // deficit pruning: the remaining customers must be able to fill every
    // open site up to its lower bound
    let remaining = n - j;
    let deficit: usize = open_sites
        .iter()
        .map(|&i| inst.min_assigned[i].saturating_sub(counts[i]))
        .sum();
    if deficit > remaining {
        return;
    }
    for &i in open_sites {
        site_of[j] = i;
        counts[i] += 1;
        enumerate_assignments(
            inst, scen, policy, open, open_sites, site_of, counts, j + 1, best, evaluated,
        );
        counts[i] -= 1;
        site_of[j] = usize::MAX;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum YState {
    Free,
    Open,
    Closed,
}

struct Node<T> {
    y: Vec<YState>,
    /// Assigned sites for the first `assigned` entries of the customer order.
    site_of: Vec<usize>,
    assigned: usize,
    bound: T,
}

/// Valid lower bound for every completion of a partial node: setup costs of
/// the sites already fixed open plus, per customer, the empirical demand
/// frequency times a policy-specific floor on what serving or outsourcing
/// that customer can cost. Penalties beyond those floors are nonnegative
/// and are dropped.
fn partial_bound<T: Scalar>(
    inst: &Instance<T>,
    phat: &[T],
    policy: Policy,
    y: &[YState],
    site_of: &[usize],
    customer_order: &[usize],
    assigned: usize,
) -> T {
    let mut bound = T::zero();
    for i in 0..inst.n_sites {
        if y[i] == YState::Open {
            bound += inst.open_cost[i];
        }
    }
    let assigned_site = |j: usize| -> Option<usize> {
        customer_order[..assigned]
            .iter()
            .position(|&jc| jc == j)
            .map(|pos| site_of[pos])
    };
    for j in 0..inst.n_customers {
        if phat[j] == T::zero() {
            continue;
        }
        let fixed = assigned_site(j);
        let mut floor = T::infinity();
        match policy {
            Policy::Fo | Policy::CdCo | Policy::OdCo => {
                for i in 0..inst.n_sites {
                    if y[i] == YState::Closed {
                        continue;
                    }
                    if fixed.is_some_and(|fi| fi != i) {
                        continue;
                    }
                    let candidate = match policy {
                        Policy::Fo => inst.c(i, j),
                        _ => inst.c(i, j).min(inst.outsource_penalty[i]),
                    };
                    floor = floor.min(candidate);
                }
            }
            Policy::Ro => {
                floor = inst.external_cost;
                for i in 0..inst.n_sites {
                    if y[i] == YState::Closed {
                        continue;
                    }
                    let candidate = if fixed.is_some_and(|fi| fi != i) {
                        inst.c(i, j) + inst.reassign_penalty[j]
                    } else {
                        inst.c(i, j)
                    };
                    floor = floor.min(candidate);
                }
            }
        }
        if floor.is_finite() {
            bound += phat[j] * floor;
        }
    }
    bound
}

/// Greedy incumbent: open sites by setup cost per capacity unit until the
/// expected demand is covered, assign every customer to its cheapest open
/// site, then repair assignment lower bounds by moving customers from
/// surplus sites.
fn greedy_incumbent<T: Scalar>(
    inst: &Instance<T>,
    scen: &ScenarioSet<T>,
) -> Option<(Vec<bool>, Vec<usize>)> {
    let m = inst.n_sites;
    let n = inst.n_customers;
    if m == 0 || n == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        let ka = inst.open_cost[a] / T::from_f64_lossy(inst.capacity[a] as f64);
        let kb = inst.open_cost[b] / T::from_f64_lossy(inst.capacity[b] as f64);
        ka.partial_cmp(&kb).expect("finite").then(a.cmp(&b))
    });
    let expected: T = scen.empirical_prob().iter().copied().sum();
    let mut open = vec![false; m];
    let mut lb_total = 0usize;
    let mut cap_total = T::zero();
    for &i in &order {
        if lb_total + inst.min_assigned[i] > n {
            continue;
        }
        open[i] = true;
        lb_total += inst.min_assigned[i];
        cap_total += T::from_f64_lossy(inst.capacity[i] as f64);
        if cap_total >= expected {
            break;
        }
    }
    let open_sites: Vec<usize> = (0..m).filter(|&i| open[i]).collect();
    if open_sites.is_empty() {
        return None;
    }

    let mut site_of = vec![0usize; n];
    let mut counts = vec![0usize; m];
    for j in 0..n {
        let best = *open_sites
            .iter()
            .min_by(|&&a, &&b| {
                inst.c(a, j)
                    .partial_cmp(&inst.c(b, j))
                    .expect("finite")
                    .then(a.cmp(&b))
            })
            .expect("nonempty");
        site_of[j] = best;
        counts[best] += 1;
    }
    // repair pass: totals guarantee a donor exists while any deficit remains
    loop {
        let Some(&needy) = open_sites
            .iter()
            .find(|&&i| counts[i] < inst.min_assigned[i])
        else {
            break;
        };
        let mut mover: Option<(T, usize)> = None;
        for j in 0..n {
            let from = site_of[j];
            if from == needy || counts[from] <= inst.min_assigned[from] {
                continue;
            }
            let delta = inst.c(needy, j) - inst.c(from, j);
            if mover.as_ref().is_none_or(|&(d, _)| delta < d) {
                mover = Some((delta, j));
            }
        }
        let (_, j) = mover?;
        counts[site_of[j]] -= 1;
        site_of[j] = needy;
        counts[needy] += 1;
    }
    Some((open, site_of))
}

/// Branch and bound over y (sites first) then x (customers by decreasing
/// empirical demand), with incumbent evaluation through the recourse
/// evaluators. Proven exact when it terminates within the limits.
pub fn branch_and_bound<T: Scalar>(
    inst: &Instance<T>,
    scen: &ScenarioSet<T>,
    policy: Policy,
    limits: &Limits,
) -> Result<SolveResult<T>> {
    if scen.n_customers() != inst.n_customers {
        return Err(Error::DimensionMismatch(
            "scenario set and instance disagree on customers".to_string(),
        ));
    }
    let started = Instant::now();
    let m = inst.n_sites;
    let n = inst.n_customers;
    let phat = scen.empirical_prob().to_vec();

    // site branching order: largest expected service mass first
    let mut site_order: Vec<usize> = (0..m).collect();
    let spread: Vec<T> = (0..m)
        .map(|i| (0..n).map(|j| phat[j] * inst.c(i, j)).sum())
        .collect();
    site_order.sort_by(|&a, &b| {
        spread[b]
            .partial_cmp(&spread[a])
            .expect("finite")
            .then(a.cmp(&b))
    });
    // customer branching order: decreasing empirical demand
    let mut customer_order: Vec<usize> = (0..n).collect();
    customer_order.sort_by(|&a, &b| {
        phat[b]
            .partial_cmp(&phat[a])
            .expect("finite")
            .then(a.cmp(&b))
    });

    let mut incumbent: Option<(Vec<bool>, Vec<usize>, T)> =
        greedy_incumbent(inst, scen).map(|(open, site_of)| {
            let value = expected_total_fast(inst, scen, policy, &open, &site_of);
            (open, site_of, value)
        });
    let mut incumbent_value = incumbent.as_ref().map_or(T::infinity(), |&(_, _, v)| v);

    let root_y = vec![YState::Free; m];
    let root = Node {
        bound: partial_bound(inst, &phat, policy, &root_y, &[], &customer_order, 0),
        y: root_y,
        site_of: Vec::new(),
        assigned: 0,
    };
    let mut stack = vec![root];
    let mut nodes = 0u64;
    let mut aborted = false;

    while let Some(node) = stack.pop() {
        let hit_node_limit = limits.max_nodes.is_some_and(|max| nodes >= max);
        let hit_time_limit = limits
            .max_seconds
            .is_some_and(|max| started.elapsed().as_secs_f64() >= max);
        if hit_node_limit || hit_time_limit {
            stack.push(node);
            aborted = true;
            break;
        }
        nodes += 1;
        if node.bound >= incumbent_value {
            continue;
        }

        if let Some(&site) = site_order.iter().find(|&&i| node.y[i] == YState::Free) {
            for state in [YState::Closed, YState::Open] {
                let mut y = node.y.clone();
                y[site] = state;
                let lb_total: usize = (0..m)
                    .filter(|&i| y[i] == YState::Open)
                    .map(|i| inst.min_assigned[i])
                    .sum();
                if lb_total > n {
                    continue;
                }
                let fully_decided = y.iter().all(|&s| s != YState::Free);
                if fully_decided && n > 0 && !y.contains(&YState::Open) {
                    continue;
                }
                let bound = partial_bound(
                    inst,
                    &phat,
                    policy,
                    &y,
                    &node.site_of,
                    &customer_order,
                    node.assigned,
                );
                if bound < incumbent_value {
                    stack.push(Node {
                        y,
                        site_of: node.site_of.clone(),
                        assigned: node.assigned,
                        bound,
                    });
                }
            }
            continue;
        }

        let open_sites: Vec<usize> = (0..m).filter(|&i| node.y[i] == YState::Open).collect();
        if node.assigned == n {
            // leaf; lower bounds were enforced during branching
            let mut site_of = vec![usize::MAX; n];
            for (pos, &j) in customer_order.iter().enumerate() {
                site_of[j] = node.site_of[pos];
            }
            let open: Vec<bool> = (0..m).map(|i| node.y[i] == YState::Open).collect();
            let value = expected_total_fast(inst, scen, policy, &open, &site_of);
            if value < incumbent_value {
                incumbent_value = value;
                incumbent = Some((open, site_of, value));
            }
            continue;
        }

        let mut counts = vec![0usize; m];
        for &i in &node.site_of {
            counts[i] += 1;
        }
        let remaining = n - node.assigned - 1;
        // push in reverse so lower site indices are explored first
        for &site in open_sites.iter().rev() {
            counts[site] += 1;
            let deficit: usize = open_sites
                .iter()
                .map(|&i| inst.min_assigned[i].saturating_sub(counts[i]))
                .sum();
            counts[site] -= 1;
            if deficit > remaining {
                continue;
            }
            let mut site_of = node.site_of.clone();
            site_of.push(site);
            let bound = partial_bound(
                inst,
                &phat,
                policy,
                &node.y,
                &site_of,
                &customer_order,
                node.assigned + 1,
            );
            if bound < incumbent_value {
                stack.push(Node {
                    y: node.y.clone(),
                    site_of,
                    assigned: node.assigned + 1,
                    bound,
                });
            }
        }
    }

    let (status, z_lower) = if aborted {
        let frontier = stack
            .iter()
            .map(|node| node.bound)
            .fold(T::infinity(), T::min);
        (SolveStatus::TimeLimit, frontier.min(incumbent_value))
    } else if incumbent.is_some() {
        (SolveStatus::Optimal, incumbent_value)
    } else {
        (SolveStatus::Infeasible, T::infinity())
    };
    Ok(finish_result(
        inst, scen, policy, status, incumbent, z_lower, nodes, started,
    ))
}

/// Random feasible first stage, or `None` if sampling failed.
pub fn random_feasible_solution<T: Scalar, R: Rng>(
    inst: &Instance<T>,
    rng: &mut R,
) -> Option<FirstStageSolution> {
    let m = inst.n_sites;
    let n = inst.n_customers;
    'attempt: for _ in 0..64 {
        let mut open: Vec<bool> = (0..m).map(|_| rng.gen_bool(0.6)).collect();
        if !open.contains(&true) {
            open[rng.gen_range(0..m)] = true;
        }
        let open_sites: Vec<usize> = (0..m).filter(|&i| open[i]).collect();
        let lb_total: usize = open_sites.iter().map(|&i| inst.min_assigned[i]).sum();
        if lb_total > n {
            continue;
        }
        let mut site_of: Vec<usize> = (0..n)
            .map(|_| open_sites[rng.gen_range(0..open_sites.len())])
            .collect();
        let mut counts = vec![0usize; m];
        for &i in &site_of {
            counts[i] += 1;
        }
        loop {
            let Some(&needy) = open_sites
                .iter()
                .find(|&&i| counts[i] < inst.min_assigned[i])
            else {
                return Some(FirstStageSolution::from_site_of(m, open, &site_of));
            };
            let movable: Vec<usize> = (0..n)
                .filter(|&j| {
                    let from = site_of[j];
                    from != needy && counts[from] > inst.min_assigned[from]
                })
                .collect();
            if movable.is_empty() {
                continue 'attempt;
            }
            let j = movable[rng.gen_range(0..movable.len())];
            counts[site_of[j]] -= 1;
            site_of[j] = needy;
            counts[needy] += 1;
        }
    }
    None
}

/// Runs an external MILP solver on the exported model.
///
/// `solver_cmd` is a shell command template with `{model}` and `{solution}`
/// placeholders. The solution file may be CPLEX-style XML or plain
/// `name value` lines (optionally including an `objective <value>` line);
/// the recovered first stage is re-evaluated through the recourse module
/// and a reported objective that disagrees by more than 1e-6 relative is
/// an error.
pub fn solve_via_export<T: Scalar>(
    inst: &Instance<T>,
    scen: &ScenarioSet<T>,
    policy: Policy,
    solver_cmd: &str,
    work_dir: &Path,
) -> Result<SolveResult<T>> {
    let started = Instant::now();
    let model = milp::build(inst, scen, policy, policy == Policy::Fo);
    let model_path = work_dir.join(format!("{}.mps", model.name));
    let solution_path = work_dir.join(format!("{}.sol", model.name));
    milp::export_mps(&model, &model_path)?;

    let command = solver_cmd
        .replace("{model}", &model_path.to_string_lossy())
        .replace("{solution}", &solution_path.to_string_lossy());
    let output = std::process::Command::new("sh")
        .arg("-c")
        .arg(&command)
        .output()
        .map_err(|e| Error::ExternalSolver(format!("failed to launch {command:?}: {e}")))?;
    if !output.status.success() {
        return Err(Error::ExternalSolver(format!(
            "command {command:?} exited with {}: {}",
            output.status,
            String::from_utf8_lossy(&output.stderr)
        )));
    }
    let text = std::fs::read_to_string(&solution_path)
        .map_err(|e| Error::ExternalSolver(format!("no solution file written: {e}")))?;
    let (values, reported) = if text.trim_start().starts_with('<') {
        parse_sol_xml(&text)?
    } else {
        parse_sol_text(&text)?
    };

    let mut open = vec![false; inst.n_sites];
    for (i, o) in open.iter_mut().enumerate() {
        *o = values.get(&format!("y_{i}")).copied().unwrap_or(0.0) > 0.5;
    }
    let mut site_of = vec![usize::MAX; inst.n_customers];
    for j in 0..inst.n_customers {
        for i in 0..inst.n_sites {
            if values.get(&format!("x_{i}_{j}")).copied().unwrap_or(0.0) > 0.5 {
                site_of[j] = i;
            }
        }
        if site_of[j] == usize::MAX {
            return Err(Error::ExternalSolver(format!(
                "solution file does not assign customer {j}"
            )));
        }
    }
    let solution = FirstStageSolution::from_site_of(inst.n_sites, open, &site_of);
    let evaluation = recourse::evaluate(inst, scen, &solution, policy)?;
    let evaluated = evaluation.expected_cost.to_f64().expect("finite");
    if let Some(reported) = reported {
        let scale = 1.0f64.max(reported.abs()).max(evaluated.abs());
        if (reported - evaluated).abs() > 1e-6 * scale {
            return Err(Error::ObjectiveMismatch {
                reported,
                evaluated,
            });
        }
    }
    let value = evaluation.expected_cost;
    Ok(SolveResult {
        status: SolveStatus::Optimal,
        best: Some(BestSolution {
            solution,
            evaluation,
        }),
        z_upper: Some(value),
        z_lower: value,
        gap_pct: Some(T::zero()),
        stats: SolveStats {
            nodes: 0,
            wall: started.elapsed(),
        },
    })
}

/// Searches PATH for a known MILP solver and returns its name and a ready
/// command template, if any.
pub fn detect_external_solver() -> Option<(String, String)> {
    let candidates: [(&str, &str); 4] = [
        (
            "cbc",
            "cbc {model} solve printingOptions all solution {solution}",
        ),
        ("glpsol", "glpsol --freemps {model} -w {solution}"),
        (
            "scip",
            "scip -c \"read {model} optimize write solution {solution} quit\"",
        ),
        ("highs", "highs --solution_file {solution} {model}"),
    ];
    let path = std::env::var_os("PATH")?;
    for (name, template) in candidates {
        for dir in std::env::split_paths(&path) {
            if dir.join(name).is_file() {
                return Some((name.to_string(), template.to_string()));
            }
        }
    }
    None
}

fn parse_sol_xml(text: &str) -> Result<(HashMap<String, f64>, Option<f64>)> {
    let mut values = HashMap::new();
    let mut objective = None;
    for chunk in text.split('<') {
        let chunk = chunk.trim();
        if chunk.starts_with("header") {
            if let Some(v) = attr(chunk, "objectiveValue") {
                objective = Some(v.parse::<f64>().map_err(|_| {
                    Error::Parse(format!("bad objectiveValue {v:?} in solution file"))
                })?);
            }
        } else if chunk.starts_with("variable ") {
            let name = attr(chunk, "name")
                .ok_or_else(|| Error::Parse("variable tag without name".into()))?;
            let value = attr(chunk, "value")
                .ok_or_else(|| Error::Parse("variable tag without value".into()))?;
            let value: f64 = value
                .parse()
                .map_err(|_| Error::Parse(format!("bad value {value:?} in solution file")))?;
            values.insert(name.to_string(), value);
        }
    }
    Ok((values, objective))
}

fn attr<'a>(tag: &'a str, key: &str) -> Option<&'a str> {
    let pattern = format!("{key}=\"");
    let start = tag.find(&pattern)? + pattern.len();
    let end = tag[start..].find('"')? + start;
    Some(&tag[start..end])
}

fn parse_sol_text(text: &str) -> Result<(HashMap<String, f64>, Option<f64>)> {
    let mut values = HashMap::new();
    let mut objective = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(name), Some(value)) = (fields.next(), fields.next()) else {
            return Err(Error::Parse(format!("bad solution line: {line:?}")));
        };
        let value: f64 = value
            .parse()
            .map_err(|_| Error::Parse(format!("bad solution value in line {line:?}")))?;
        if name.eq_ignore_ascii_case("objective") {
            objective = Some(value);
        } else {
            values.insert(name.to_string(), value);
        }
    }
    Ok((values, objective))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recourse::test_util::{instance, single_scenario};
    use crate::scalar::rel_close;
    use crate::scenario::{sample_correlated, sample_independent};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_instance(seed: u64, m: usize, n: usize) -> Instance<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut inst = instance(
            m,
            n,
            (0..m * n)
                .map(|_| (rng.gen_range(0.5f64..9.0) * 100.0).round() / 100.0)
                .collect(),
            (0..m).map(|_| rng.gen_range(1..=2)).collect(),
            (0..m)
                .map(|_| (rng.gen_range(1.0f64..10.0) * 100.0).round() / 100.0)
                .collect(),
            (rng.gen_range(3.0f64..14.0) * 100.0).round() / 100.0,
            (0..n)
                .map(|_| (rng.gen_range(0.0f64..3.0) * 100.0).round() / 100.0)
                .collect(),
        );
        inst.open_cost = (0..m)
            .map(|_| (rng.gen_range(1.0f64..15.0) * 100.0).round() / 100.0)
            .collect();
        for p in inst.demand_prob.iter_mut() {
            *p = rng.gen_range(0.15..0.9);
        }
        if rng.gen_bool(0.4) {
            inst.min_assigned = (0..m).map(|_| rng.gen_range(0..=1)).collect();
        }
        inst
    }

    #[test]
    fn gap_formula_spot_value() {
        assert_eq!(optimality_gap_pct(105.0, 100.0), 5.0);
    }

    #[test]
    fn single_site_forced_instance_costs_twelve_under_every_policy() {
        let mut inst = instance(1, 2, vec![1.0, 1.0], vec![2], vec![5.0], 9.0, vec![1.0; 2]);
        inst.open_cost = vec![10.0];
        let scen = single_scenario(vec![true, true], vec![0, 1]);
        for policy in Policy::ALL {
            let result = brute_force(&inst, &scen, policy, &BruteForceGuard::default()).unwrap();
            assert_eq!(result.status, SolveStatus::Optimal);
            assert!((result.z_upper.unwrap() - 12.0).abs() < 1e-12, "{policy}");
        }
    }

    #[test]
    fn pigeonhole_lower_bounds_allow_only_single_site_solutions() {
        let mut inst = instance(
            2,
            4,
            vec![1.0, 2.0, 3.0, 4.0, 4.0, 3.0, 2.0, 1.0],
            vec![4, 4],
            vec![9.0, 9.0],
            12.0,
            vec![0.0; 4],
        );
        inst.min_assigned = vec![3, 3];
        inst.open_cost = vec![5.0, 5.0];
        let scen = single_scenario(vec![true, true, false, false], vec![1, 0]);
        let result = brute_force(&inst, &scen, Policy::Fo, &BruteForceGuard::default()).unwrap();
        assert_eq!(result.status, SolveStatus::Optimal);
        assert_eq!(result.best.unwrap().solution.open_count(), 1);
    }

    #[test]
    fn infeasible_when_lower_bounds_cannot_be_met() {
        let mut inst = instance(1, 2, vec![1.0, 1.0], vec![2], vec![5.0], 9.0, vec![0.0; 2]);
        inst.min_assigned = vec![3];
        let scen = single_scenario(vec![true, true], vec![0, 1]);
        for policy in Policy::ALL {
            let result = brute_force(&inst, &scen, policy, &BruteForceGuard::default()).unwrap();
            assert_eq!(result.status, SolveStatus::Infeasible);
            assert!(result.z_upper.is_none());
            let bnb = branch_and_bound(&inst, &scen, policy, &Limits::default()).unwrap();
            assert_eq!(bnb.status, SolveStatus::Infeasible);
        }
    }

    #[test]
    fn size_guard_is_enforced() {
        let inst = random_instance(1, 2, 4);
        let scen = sample_independent(&inst, 4, 1).unwrap();
        let guard = BruteForceGuard {
            max_customers: 3,
            ..Default::default()
        };
        assert!(matches!(
            brute_force(&inst, &scen, Policy::Fo, &guard),
            Err(Error::SizeGuard(_))
        ));
    }

    #[test]
    fn branch_and_bound_matches_brute_force() {
        let guard = BruteForceGuard::default();
        for seed in 0..25u64 {
            let m = 2 + (seed % 2) as usize;
            let n = 4 + (seed % 3) as usize;
            let inst = random_instance(seed, m, n);
            let scen = if seed % 2 == 0 {
                sample_independent(&inst, 4 + (seed % 4) as usize, seed ^ 0xff).unwrap()
            } else {
                sample_correlated(&inst, 4 + (seed % 4) as usize, seed ^ 0xff).unwrap()
            };
            for policy in Policy::ALL {
                let exact = brute_force(&inst, &scen, policy, &guard).unwrap();
                let bnb = branch_and_bound(&inst, &scen, policy, &Limits::default()).unwrap();
                assert_eq!(exact.status, bnb.status, "seed {seed} {policy}");
                if exact.status == SolveStatus::Optimal {
                    let a = exact.z_upper.unwrap();
                    let b = bnb.z_upper.unwrap();
                    assert!(
                        rel_close(a, b, 1e-9),
                        "seed {seed} {policy}: brute {a} vs bnb {b}"
                    );
                    assert!(bnb.gap_pct.unwrap() <= 1e-6);
                }
            }
        }
    }

    #[test]
    fn zero_node_budget_reports_time_limit_with_root_bound() {
        let inst = random_instance(9, 3, 5);
        let scen = sample_independent(&inst, 6, 2).unwrap();
        let limits = Limits {
            max_nodes: Some(0),
            max_seconds: None,
        };
        let result = branch_and_bound(&inst, &scen, Policy::CdCo, &limits).unwrap();
        assert_eq!(result.status, SolveStatus::TimeLimit);
        assert_eq!(result.stats.nodes, 0);
        let upper = result.z_upper.expect("greedy incumbent");
        assert!(result.z_lower <= upper + 1e-9);
        assert!(result.gap_pct.is_some());
    }

    #[test]
    fn node_bounds_never_exceed_subtree_optima() {
        // audit the bound on partially fixed nodes by enumerating every
        // completion compatible with the fixes
        let inst = random_instance(17, 3, 4);
        let scen = sample_independent(&inst, 4, 3).unwrap();
        let phat = scen.empirical_prob().to_vec();
        let customer_order: Vec<usize> = (0..4).collect();
        for policy in Policy::ALL {
            for y_mask in 0..27u32 {
                // ternary encoding of Free/Open/Closed over 3 sites
                let mut y = Vec::new();
                let mut rest = y_mask;
                for _ in 0..3 {
                    y.push(match rest % 3 {
                        0 => YState::Free,
                        1 => YState::Open,
                        _ => YState::Closed,
                    });
                    rest /= 3;
                }
                for assigned in 0..=2usize {
                    // the first `assigned` customers are fixed to site 0
                    let open0 = y[0] != YState::Closed;
                    if assigned > 0 && !open0 {
                        continue;
                    }
                    let site_of = vec![0usize; assigned];
                    let bound = partial_bound(
                        &inst,
                        &phat,
                        policy,
                        &y,
                        &site_of,
                        &customer_order,
                        assigned,
                    );
                    let mut best = f64::INFINITY;
                    for mask in 0..8u32 {
                        let open: Vec<bool> = (0..3).map(|i| mask & (1 << i) != 0).collect();
                        let consistent = (0..3).all(|i| match y[i] {
                            YState::Open => open[i],
                            YState::Closed => !open[i],
                            YState::Free => true,
                        });
                        if !consistent || !open.contains(&true) {
                            continue;
                        }
                        if assigned > 0 && !open[0] {
                            continue;
                        }
                        let open_sites: Vec<usize> = (0..3).filter(|&i| open[i]).collect();
                        let lb: usize = open_sites.iter().map(|&i| inst.min_assigned[i]).sum();
                        if lb > 4 {
                            continue;
                        }
                        let free = 4 - assigned;
                        let combos = open_sites.len().pow(free as u32);
                        for combo in 0..combos {
                            let mut site_of_full = vec![0usize; 4];
                            site_of_full[..assigned].copy_from_slice(&site_of);
                            let mut rest = combo;
                            for slot in site_of_full.iter_mut().skip(assigned) {
                                *slot = open_sites[rest % open_sites.len()];
                                rest /= open_sites.len();
                            }
                            let mut counts = vec![0usize; 3];
                            for &i in &site_of_full {
                                counts[i] += 1;
                            }
                            if (0..3).any(|i| open[i] && counts[i] < inst.min_assigned[i]) {
                                continue;
                            }
                            let v = expected_total_fast(
                                &inst,
                                &scen,
                                policy,
                                &open,
                                &site_of_full,
                            );
                            best = best.min(v);
                        }
                    }
                    if best.is_finite() {
                        assert!(
                            bound <= best + 1e-9,
                            "{policy}: bound {bound} exceeds subtree optimum {best}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn cdco_optimum_never_exceeds_fo_optimum() {
        let guard = BruteForceGuard::default();
        for seed in 40..55u64 {
            let inst = random_instance(seed, 2, 4);
            let scen = sample_independent(&inst, 4, seed).unwrap();
            let fo = brute_force(&inst, &scen, Policy::Fo, &guard).unwrap();
            let cd = brute_force(&inst, &scen, Policy::CdCo, &guard).unwrap();
            if let (Some(f), Some(c)) = (fo.z_upper, cd.z_upper) {
                assert!(c <= f + 1e-9, "seed {seed}: CD-CO {c} > FO {f}");
            }
        }
    }

    #[test]
    fn random_feasible_solutions_are_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..30u64 {
            let inst = random_instance(seed, 3, 6);
            if let Some(sol) = random_feasible_solution(&inst, &mut rng) {
                assert!(crate::instance::check_first_stage_feasible(&inst, &sol)
                    .unwrap()
                    .is_feasible());
            }
        }
    }

    #[test]
    fn external_round_trip_with_scripted_solver() {
        let dir = tempfile::tempdir().unwrap();
        let inst = random_instance(3, 2, 4);
        let scen = sample_independent(&inst, 4, 7).unwrap();
        let internal = branch_and_bound(&inst, &scen, Policy::Fo, &Limits::default()).unwrap();
        let best = internal.best.as_ref().unwrap();

        // a stand-in solver: copies a prepared solution file into place
        let sol_file = dir.path().join("prepared.sol");
        let mut text = format!("objective {}\n", internal.z_upper.unwrap());
        for (i, &open) in best.solution.open.iter().enumerate() {
            text.push_str(&format!("y_{i} {}\n", u8::from(open)));
        }
        for i in 0..inst.n_sites {
            for j in 0..inst.n_customers {
                text.push_str(&format!("x_{i}_{j} {}\n", u8::from(best.solution.x(i, j))));
            }
        }
        std::fs::write(&sol_file, &text).unwrap();
        let cmd = format!("cp {} {{solution}}", sol_file.display());

        let external = solve_via_export(&inst, &scen, Policy::Fo, &cmd, dir.path()).unwrap();
        assert!(rel_close(
            external.z_upper.unwrap(),
            internal.z_upper.unwrap(),
            1e-9
        ));

        // tampering with the objective is caught
        let tampered = text.replace(
            &format!("objective {}", internal.z_upper.unwrap()),
            "objective 1",
        );
        std::fs::write(&sol_file, tampered).unwrap();
        assert!(matches!(
            solve_via_export(&inst, &scen, Policy::Fo, &cmd, dir.path()),
            Err(Error::ObjectiveMismatch { .. })
        ));
    }

    #[test]
    fn missing_solver_binary_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let inst = random_instance(3, 2, 3);
        let scen = sample_independent(&inst, 2, 7).unwrap();
        let result = solve_via_export(
            &inst,
            &scen,
            Policy::Fo,
            "/nonexistent-solver-binary {model} {solution}",
            dir.path(),
        );
        assert!(matches!(result, Err(Error::ExternalSolver(_))));
    }

    #[test]
    fn cplex_style_xml_solution_files_parse() {
        let text = r#"<?xml version="1.0" encoding="UTF-8"?>
<CPLEXSolution version="1.2">
 <header problemName="m.mps" objectiveValue="42.5" solutionStatusString="integer optimal solution"/>
 <variables>
  <variable name="y_0" index="0" value="1"/>
  <variable name="x_0_0" index="1" value="0.999999"/>
 </variables>
</CPLEXSolution>
"#;
        let (values, objective) = parse_sol_xml(text).unwrap();
        assert_eq!(objective, Some(42.5));
        assert_eq!(values["y_0"], 1.0);
        assert!(values["x_0_0"] > 0.5);
    }
}
