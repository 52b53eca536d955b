//! Exact second-stage evaluation of a fixed first-stage solution.
//!
//! These evaluators are the semantic ground truth the MILP formulations
//! must agree with: given open facilities and assignments, they compute the
//! optimal (or, for the order-driven policy, the prescribed) recourse for
//! every scenario and the resulting expected cost.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::flow::MinCostFlow;
use crate::instance::{check_first_stage_feasible, FirstStageSolution, Instance};
use crate::scalar::Scalar;
use crate::scenario::ScenarioSet;
use crate::Result;

/// The four outsourcing policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// Facility outsourcing: serve everyone, buy missing capacity.
    Fo,
    /// Cost-driven customer outsourcing.
    CdCo,
    /// Order-driven (first-come-first-served) customer outsourcing.
    OdCo,
    /// Reassignment outsourcing.
    Ro,
}

impl Policy {
    pub const ALL: [Policy; 4] = [Policy::Fo, Policy::CdCo, Policy::OdCo, Policy::Ro];

    pub fn as_str(self) -> &'static str {
        match self {
            Policy::Fo => "FO",
            Policy::CdCo => "CD-CO",
            Policy::OdCo => "OD-CO",
            Policy::Ro => "RO",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "fo" => Ok(Policy::Fo),
            "cd-co" | "cdco" => Ok(Policy::CdCo),
            "od-co" | "odco" => Ok(Policy::OdCo),
            "ro" => Ok(Policy::Ro),
            other => Err(Error::Parse(format!("unknown policy {other:?}"))),
        }
    }
}

/// What happened to one customer in one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Service {
    /// Served from this site (under RO it may differ from the assigned one).
    By(usize),
    /// Handed to a third party at the assigned site's penalty g_i.
    Outsourced,
    /// Served from the external source at unit cost g (RO only).
    External,
    /// No demand in this scenario.
    NoDemand,
}

/// Recourse detail for a single scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome<T> {
    pub served: Vec<Service>,
    /// θ_i^ω equivalent: per site, the number of its assigned demand
    /// customers not served in-house (capacity units bought under FO,
    /// outsourced customers under CO, externally served under RO).
    pub outsourced_at: Vec<usize>,
    pub service_cost: T,
    /// z^ω equivalent: outsourcing penalties (g_i per unit, or g per
    /// external customer under RO).
    pub penalty_cost: T,
    pub reassign_cost: T,
}

impl<T: Scalar> ScenarioOutcome<T> {
    pub fn total(&self) -> T {
        self.service_cost + self.penalty_cost + self.reassign_cost
    }
}

/// Expected-cost components; `total()` recomposes them without residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown<T> {
    pub opening: T,
    pub service: T,
    pub penalty: T,
    pub reassign: T,
}

impl<T: Scalar> CostBreakdown<T> {
    pub fn total(&self) -> T {
        self.opening + self.service + self.penalty + self.reassign
    }
}

/// Full evaluation of a first-stage solution under one policy.
#[derive(Debug, Clone)]
pub struct PolicyEvaluation<T> {
    pub policy: Policy,
    pub per_scenario: Vec<ScenarioOutcome<T>>,
    pub breakdown: CostBreakdown<T>,
    /// opening + Σ_ω π^ω (service + penalty + reassign), composed exactly
    /// from the breakdown.
    pub expected_cost: T,
}

fn check_inputs<T: Scalar>(
    inst: &Instance<T>,
    scen: &ScenarioSet<T>,
    sol: &FirstStageSolution,
) -> Result<Vec<usize>> {
    if scen.n_customers() != inst.n_customers {
        return Err(Error::DimensionMismatch(format!(
            "scenario set has {} customers, instance {}",
            scen.n_customers(),
            inst.n_customers
        )));
    }
    let verdict = check_first_stage_feasible(inst, sol)?;
    if let crate::instance::FeasibilityVerdict::Infeasible(violations) = verdict {
        return Err(Error::InfeasibleFirstStage(violations.join("; ")));
    }
    sol.site_of()
}

/// Facility outsourcing: every demand customer is served from its assigned
/// site; sites over capacity buy θ_i^ω = max(0, η_i^ω − K_i) units at g_i.
pub fn eval_fo<T: Scalar>(
    inst: &Instance<T>,
    scen: &ScenarioSet<T>,
    sol: &FirstStageSolution,
) -> Result<PolicyEvaluation<T>> {
    let site_of = check_inputs(inst, scen, sol)?;
    Ok(assemble(inst, scen, sol, Policy::Fo, |w| {
        fo_outcome(inst, scen, w, &site_of)
    }))
}

/// Cost-driven customer outsourcing: per site, serve the cost-minimal
/// subset of its assigned demand customers (cheapest first while
/// c_ij ≤ g_i, up to K_i), outsource the rest at g_i each.
pub fn eval_cdco<T: Scalar>(
    inst: &Instance<T>,
    scen: &ScenarioSet<T>,
    sol: &FirstStageSolution,
) -> Result<PolicyEvaluation<T>> {
    let site_of = check_inputs(inst, scen, sol)?;
    Ok(assemble(inst, scen, sol, Policy::CdCo, |w| {
        cdco_outcome(inst, scen, w, &site_of)
    }))
}

/// Order-driven customer outsourcing: per site, serve callers in the
/// scenario's arrival order until the capacity is reached, outsource the
/// later ones at g_i each.
pub fn eval_odco<T: Scalar>(
    inst: &Instance<T>,
    scen: &ScenarioSet<T>,
    sol: &FirstStageSolution,
) -> Result<PolicyEvaluation<T>> {
    let site_of = check_inputs(inst, scen, sol)?;
    Ok(assemble(inst, scen, sol, Policy::OdCo, |w| {
        odco_outcome(inst, scen, w, &site_of)
    }))
}

/// Reassignment outsourcing: solve the per-scenario transportation problem
/// exactly — each demand customer is served from an open site (cost c_ij,
/// plus h_j when it is not the assigned site) or externally at g.
pub fn eval_ro<T: Scalar>(
    inst: &Instance<T>,
    scen: &ScenarioSet<T>,
    sol: &FirstStageSolution,
) -> Result<PolicyEvaluation<T>> {
    let site_of = check_inputs(inst, scen, sol)?;
    let mut flow = MinCostFlow::new(0);
    Ok(assemble(inst, scen, sol, Policy::Ro, |w| {
        ro_outcome(inst, scen, w, &sol.open, &site_of, &mut flow)
    }))
}

/// Dispatch over [`Policy`].
pub fn evaluate<T: Scalar>(
    inst: &Instance<T>,
    scen: &ScenarioSet<T>,
    sol: &FirstStageSolution,
    policy: Policy,
) -> Result<PolicyEvaluation<T>> {
    match policy {
        Policy::Fo => eval_fo(inst, scen, sol),
        Policy::CdCo => eval_cdco(inst, scen, sol),
        Policy::OdCo => eval_odco(inst, scen, sol),
        Policy::Ro => eval_ro(inst, scen, sol),
    }
}

/// Σ_i f_i y_i + Σ_ω π^ω · scenario cost.
pub fn expected_total<T: Scalar>(
    inst: &Instance<T>,
    scen: &ScenarioSet<T>,
    sol: &FirstStageSolution,
    policy: Policy,
) -> Result<T> {
    Ok(evaluate(inst, scen, sol, policy)?.expected_cost)
}

fn assemble<T: Scalar>(
    inst: &Instance<T>,
    scen: &ScenarioSet<T>,
    sol: &FirstStageSolution,
    policy: Policy,
    mut outcome: impl FnMut(usize) -> ScenarioOutcome<T>,
) -> PolicyEvaluation<T> {
    let mut opening = T::zero();
    for i in 0..inst.n_sites {
        if sol.open[i] {
            opening += inst.open_cost[i];
        }
    }
    let mut per_scenario = Vec::with_capacity(scen.n_scenarios());
    let mut service = T::zero();
    let mut penalty = T::zero();
    let mut reassign = T::zero();
    for w in 0..scen.n_scenarios() {
        let o = outcome(w);
        let pi = scen.prob(w);
        service += pi * o.service_cost;
        penalty += pi * o.penalty_cost;
        reassign += pi * o.reassign_cost;
        per_scenario.push(o);
    }
    let breakdown = CostBreakdown {
        opening,
        service,
        penalty,
        reassign,
    };
    PolicyEvaluation {
        policy,
        per_scenario,
        breakdown,
        expected_cost: breakdown.total(),
    }
}

/// Expected cost without building per-scenario detail; used in the solver
/// hot loops. Accumulates in the same order as the detailed path, so both
/// agree bit for bit. The caller guarantees first-stage feasibility.
pub(crate) fn expected_total_fast<T: Scalar>(
    inst: &Instance<T>,
    scen: &ScenarioSet<T>,
    policy: Policy,
    open: &[bool],
    site_of: &[usize],
) -> T {
    let mut opening = T::zero();
    for i in 0..inst.n_sites {
        if open[i] {
            opening += inst.open_cost[i];
        }
    }
    let mut service = T::zero();
    let mut penalty = T::zero();
    let mut reassign = T::zero();
    let mut flow = MinCostFlow::new(0);
    for w in 0..scen.n_scenarios() {
        let o = match policy {
            Policy::Fo => fo_outcome(inst, scen, w, site_of),
            Policy::CdCo => cdco_outcome(inst, scen, w, site_of),
            Policy::OdCo => odco_outcome(inst, scen, w, site_of),
            Policy::Ro => ro_outcome(inst, scen, w, open, site_of, &mut flow),
        };
        let pi = scen.prob(w);
        service += pi * o.service_cost;
        penalty += pi * o.penalty_cost;
        reassign += pi * o.reassign_cost;
    }
    opening + service + penalty + reassign
}

fn fo_outcome<T: Scalar>(
    inst: &Instance<T>,
    scen: &ScenarioSet<T>,
    w: usize,
    site_of: &[usize],
) -> ScenarioOutcome<T> {
    let mut served = vec![Service::NoDemand; inst.n_customers];
    let mut eta = vec![0usize; inst.n_sites];
    let mut service_cost = T::zero();
    for j in 0..inst.n_customers {
        if scen.d(w, j) {
            let i = site_of[j];
            eta[i] += 1;
            service_cost += inst.c(i, j);
            served[j] = Service::By(i);
        }
    }
    let mut outsourced_at = vec![0usize; inst.n_sites];
    let mut penalty_cost = T::zero();
    for i in 0..inst.n_sites {
        let over = eta[i].saturating_sub(inst.capacity[i]);
        outsourced_at[i] = over;
        if over > 0 {
            penalty_cost += inst.outsource_penalty[i] * T::from_f64_lossy(over as f64);
        }
    }
    ScenarioOutcome {
        served,
        outsourced_at,
        service_cost,
        penalty_cost,
        reassign_cost: T::zero(),
    }
}

fn cdco_outcome<T: Scalar>(
    inst: &Instance<T>,
    scen: &ScenarioSet<T>,
    w: usize,
    site_of: &[usize],
) -> ScenarioOutcome<T> {
    let mut served = vec![Service::NoDemand; inst.n_customers];
    let mut outsourced_at = vec![0usize; inst.n_sites];
    let mut per_site: Vec<Vec<(T, usize)>> = vec![Vec::new(); inst.n_sites];
    for j in 0..inst.n_customers {
        if scen.d(w, j) {
            let i = site_of[j];
            per_site[i].push((inst.c(i, j), j));
        }
    }
    let mut service_cost = T::zero();
    let mut penalty_cost = T::zero();
    for i in 0..inst.n_sites {
        let candidates = &mut per_site[i];
        // cheapest first; equal costs broken by lower customer index
        candidates.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite costs"));
        let g = inst.outsource_penalty[i];
        let mut in_house = 0usize;
        for &(c, j) in candidates.iter() {
            if in_house < inst.capacity[i] && c <= g {
                in_house += 1;
                service_cost += c;
                served[j] = Service::By(i);
            } else {
                outsourced_at[i] += 1;
                penalty_cost += g;
                served[j] = Service::Outsourced;
            }
        }
    }
    ScenarioOutcome {
        served,
        outsourced_at,
        service_cost,
        penalty_cost,
        reassign_cost: T::zero(),
    }
}

fn odco_outcome<T: Scalar>(
    inst: &Instance<T>,
    scen: &ScenarioSet<T>,
    w: usize,
    site_of: &[usize],
) -> ScenarioOutcome<T> {
    let mut served = vec![Service::NoDemand; inst.n_customers];
    let mut outsourced_at = vec![0usize; inst.n_sites];
    let mut in_house = vec![0usize; inst.n_sites];
    let mut service_cost = T::zero();
    let mut penalty_cost = T::zero();
    for &j in scen.call_order(w) {
        let i = site_of[j];
        if in_house[i] < inst.capacity[i] {
            in_house[i] += 1;
            service_cost += inst.c(i, j);
            served[j] = Service::By(i);
        } else {
            outsourced_at[i] += 1;
            penalty_cost += inst.outsource_penalty[i];
            served[j] = Service::Outsourced;
        }
    }
    ScenarioOutcome {
        served,
        outsourced_at,
        service_cost,
        penalty_cost,
        reassign_cost: T::zero(),
    }
}

fn ro_outcome<T: Scalar>(
    inst: &Instance<T>,
    scen: &ScenarioSet<T>,
    w: usize,
    open: &[bool],
    site_of: &[usize],
    graph: &mut MinCostFlow<T>,
) -> ScenarioOutcome<T> {
    let mut served = vec![Service::NoDemand; inst.n_customers];
    let mut outsourced_at = vec![0usize; inst.n_sites];
    let demand: Vec<usize> = (0..inst.n_customers).filter(|&j| scen.d(w, j)).collect();
    if demand.is_empty() {
        return ScenarioOutcome {
            served,
            outsourced_at,
            service_cost: T::zero(),
            penalty_cost: T::zero(),
            reassign_cost: T::zero(),
        };
    }
    let open_sites: Vec<usize> = (0..inst.n_sites).filter(|&i| open[i]).collect();

    // source, demand customers, open sites, external node, sink
    let d_count = demand.len();
    let source = 0usize;
    let cust_base = 1usize;
    let site_base = cust_base + d_count;
    let external = site_base + open_sites.len();
    let sink = external + 1;
    graph.clear(sink + 1);
    let mut serve_arcs = Vec::with_capacity(d_count * open_sites.len());
    let mut ext_arcs = Vec::with_capacity(d_count);
    for (a, &j) in demand.iter().enumerate() {
        graph.add_arc(source, cust_base + a, 1, T::zero());
        for (b, &i) in open_sites.iter().enumerate() {
            let mut cost = inst.c(i, j);
            if site_of[j] != i {
                cost = cost + inst.reassign_penalty[j];
            }
            serve_arcs.push(graph.add_arc(cust_base + a, site_base + b, 1, cost));
        }
        ext_arcs.push(graph.add_arc(cust_base + a, external, 1, inst.external_cost));
    }
    for (b, &i) in open_sites.iter().enumerate() {
        graph.add_arc(site_base + b, sink, inst.capacity[i] as i64, T::zero());
    }
    graph.add_arc(external, sink, d_count as i64, T::zero());

    let (flow, _) = graph.solve(source, sink, d_count as i64);
    debug_assert_eq!(flow, d_count as i64, "external arcs make full flow feasible");

    let mut service_cost = T::zero();
    let mut penalty_cost = T::zero();
    let mut reassign_cost = T::zero();
    for (a, &j) in demand.iter().enumerate() {
        let mut routed = false;
        for (b, &i) in open_sites.iter().enumerate() {
            if graph.flow_on(serve_arcs[a * open_sites.len() + b]) > 0 {
                served[j] = Service::By(i);
                service_cost += inst.c(i, j);
                if site_of[j] != i {
                    reassign_cost += inst.reassign_penalty[j];
                }
                routed = true;
                break;
            }
        }
        if !routed {
            debug_assert!(graph.flow_on(ext_arcs[a]) > 0);
            served[j] = Service::External;
            penalty_cost += inst.external_cost;
            outsourced_at[site_of[j]] += 1;
        }
    }
    ScenarioOutcome {
        served,
        outsourced_at,
        service_cost,
        penalty_cost,
        reassign_cost,
    }
}
