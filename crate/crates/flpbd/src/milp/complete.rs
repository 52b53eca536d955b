//! Optimal completion of a policy model under a fixed first stage.
//!
//! Everything numeric here — objective coefficients, row coefficients,
//! right-hand sides — is read from the built model, never from the
//! instance, so the value obtained is an independent route to the recourse
//! cost: a wrong coefficient or sign in a builder makes the completion
//! disagree with the evaluators. Free binaries are enumerated exhaustively
//! (per-facility subsets for customer outsourcing, per-customer labelings
//! for reassignment), continuous variables take their implied lower bounds,
//! and the completed point is checked against every row of the model.

use std::collections::HashMap;

use crate::error::Error;
use crate::instance::FirstStageSolution;
use crate::recourse::{Policy, PolicyEvaluation, Service};
use crate::scalar::Scalar;
use crate::Result;

use super::{Constraint, MilpModel, Sense};

/// Enumeration limits; completion refuses blocks larger than these.
#[derive(Debug, Clone, Copy)]
pub struct CompletionGuards {
    /// Largest per-facility demand set enumerated for customer outsourcing.
    pub max_subset: usize,
    /// Largest per-scenario demand-customer count under reassignment.
    pub max_ro_demand: usize,
    /// Largest open-facility count under reassignment.
    pub max_ro_open: usize,
}

impl Default for CompletionGuards {
    fn default() -> Self {
        CompletionGuards {
            max_subset: 12,
            max_ro_demand: 10,
            max_ro_open: 4,
        }
    }
}

/// Dimensions and column lookups recovered from the variable names.
struct VarMap {
    n_sites: usize,
    n_customers: usize,
    n_scen: usize,
    has_s: bool,
    has_lam: bool,
}

impl VarMap {
    fn from_model<T: Scalar>(model: &MilpModel<T>) -> Result<Self> {
        let mut n_sites = 0usize;
        let mut n_customers = 0usize;
        let mut n_scen = 0usize;
        let mut has_s = false;
        let mut has_lam = false;
        for v in model.vars() {
            let fields: Vec<&str> = v.name.split('_').collect();
            let parse = |t: &str| -> Result<usize> {
                t.parse()
                    .map_err(|_| Error::Parse(format!("bad variable name {:?}", v.name)))
            };
            match fields.as_slice() {
                ["y", i] => n_sites = n_sites.max(parse(i)? + 1),
                ["x", _, j] => n_customers = n_customers.max(parse(j)? + 1),
                ["s", _, _, w] => {
                    has_s = true;
                    n_scen = n_scen.max(parse(w)? + 1);
                }
                ["th", _, w] | ["z", w] | ["mu", _, w] => n_scen = n_scen.max(parse(w)? + 1),
                ["lam", _, w] => {
                    has_lam = true;
                    n_scen = n_scen.max(parse(w)? + 1);
                }
                _ => return Err(Error::Parse(format!("bad variable name {:?}", v.name))),
            }
        }
        Ok(VarMap {
            n_sites,
            n_customers,
            n_scen,
            has_s,
            has_lam,
        })
    }
}

fn con_lookup<T: Scalar>(model: &MilpModel<T>) -> HashMap<&str, &Constraint<T>> {
    model.cons().iter().map(|c| (c.name.as_str(), c)).collect()
}

fn need<'a, T>(
    rows: &HashMap<&str, &'a Constraint<T>>,
    name: &str,
) -> Result<&'a Constraint<T>> {
    rows.get(name)
        .copied()
        .ok_or_else(|| Error::Parse(format!("model has no row {name}")))
}

/// Smallest value of `values[col]` permitted by a `>=` row, holding all
/// other variables at their current values.
fn implied_lower_bound<T: Scalar>(
    con: &Constraint<T>,
    col: usize,
    values: &[T],
) -> Result<T> {
    if con.sense != Sense::Ge {
        return Err(Error::Parse(format!("row {} is not a >= row", con.name)));
    }
    let mut rest = T::zero();
    let mut own = T::zero();
    for &(c, a) in &con.terms {
        if c == col {
            own = a;
        } else {
            rest += a * values[c];
        }
    }
    if own <= T::zero() {
        return Err(Error::Parse(format!(
            "row {} has no positive coefficient on the bounded variable",
            con.name
        )));
    }
    Ok((con.rhs - rest) / own)
}

fn first_stage_values<T: Scalar>(
    model: &MilpModel<T>,
    map: &VarMap,
    sol: &FirstStageSolution,
) -> Result<Vec<T>> {
    if sol.n_sites() != map.n_sites || sol.n_customers() != map.n_customers {
        return Err(Error::DimensionMismatch(format!(
            "solution is {}x{}, model is {}x{}",
            sol.n_sites(),
            sol.n_customers(),
            map.n_sites,
            map.n_customers
        )));
    }
    let mut values = vec![T::zero(); model.n_vars()];
    for i in 0..map.n_sites {
        let col = model
            .col(&format!("y_{i}"))
            .ok_or_else(|| Error::Parse(format!("model has no variable y_{i}")))?;
        values[col] = if sol.open[i] { T::one() } else { T::zero() };
    }
    for i in 0..map.n_sites {
        for j in 0..map.n_customers {
            let col = model
                .col(&format!("x_{i}_{j}"))
                .ok_or_else(|| Error::Parse(format!("model has no variable x_{i}_{j}")))?;
            values[col] = if sol.x(i, j) { T::one() } else { T::zero() };
        }
    }
    Ok(values)
}

/// Optimal objective value of the model with the first-stage variables
/// fixed to `sol`. The completed point is verified against every row; a
/// violation (for instance a cut that would have to lift the completion)
/// is an error rather than a silently adjusted value.
pub fn restricted_optimum<T: Scalar>(
    model: &MilpModel<T>,
    policy: Policy,
    sol: &FirstStageSolution,
    guards: &CompletionGuards,
) -> Result<T> {
    let map = VarMap::from_model(model)?;
    let rows = con_lookup(model);
    let mut values = first_stage_values(model, &map, sol)?;

    match policy {
        Policy::Fo => complete_fo(model, &map, &rows, &mut values)?,
        Policy::CdCo => complete_co(model, &map, &rows, &mut values, guards, false)?,
        Policy::OdCo => complete_co(model, &map, &rows, &mut values, guards, true)?,
        Policy::Ro => complete_ro(model, &map, &rows, &mut values, guards)?,
    }

    let violations = model.violated_rows(&values, T::objective_tol());
    if !violations.is_empty() {
        return Err(Error::Parse(format!(
            "completion violates {} row(s), first: {}",
            violations.len(),
            violations[0]
        )));
    }
    Ok(model.objective_value(&values))
}

fn complete_fo<T: Scalar>(
    model: &MilpModel<T>,
    map: &VarMap,
    rows: &HashMap<&str, &Constraint<T>>,
    values: &mut Vec<T>,
) -> Result<()> {
    for i in 0..map.n_sites {
        for w in 0..map.n_scen {
            let col = model.col(&format!("th_{i}_{w}")).expect("FO has th vars");
            let row = need(rows, &format!("out_{i}_{w}"))?;
            values[col] = implied_lower_bound(row, col, values)?.max(T::zero());
        }
    }
    set_penalties(model, map, rows, values)
}

fn set_penalties<T: Scalar>(
    model: &MilpModel<T>,
    map: &VarMap,
    rows: &HashMap<&str, &Constraint<T>>,
    values: &mut [T],
) -> Result<()> {
    for w in 0..map.n_scen {
        let col = model.col(&format!("z_{w}")).expect("model has z vars");
        let row = need(rows, &format!("pen_{w}"))?;
        values[col] = implied_lower_bound(row, col, values)?.max(T::zero());
    }
    Ok(())
}

/// Row activity where columns may take trial values.
fn activity_with<T: Scalar>(con: &Constraint<T>, value_of: impl Fn(usize) -> T) -> T {
    con.terms.iter().map(|&(col, a)| a * value_of(col)).sum()
}

fn complete_co<T: Scalar>(
    model: &MilpModel<T>,
    map: &VarMap,
    rows: &HashMap<&str, &Constraint<T>>,
    values: &mut Vec<T>,
    guards: &CompletionGuards,
    fifo: bool,
) -> Result<()> {
    if !map.has_s {
        return Err(Error::Parse("model has no service variables".to_string()));
    }
    let half = T::from_f64_lossy(0.5);
    for w in 0..map.n_scen {
        let z_obj = model.vars()[model.col(&format!("z_{w}")).expect("z var")].obj;
        let pen_row = need(rows, &format!("pen_{w}"))?;
        for i in 0..map.n_sites {
            let out_row = need(rows, &format!("out_{i}_{w}"))?;
            let th_col = model.col(&format!("th_{i}_{w}")).expect("th var");
            // outsourcing rate g_i, read off the penalty row
            let g = pen_row
                .terms
                .iter()
                .find(|&&(c, _)| c == th_col)
                .map(|&(_, a)| -a)
                .unwrap_or(T::zero());
            // demand customers of this facility-scenario block: service
            // variables present in the outsourcing row whose assignment is
            // fixed to one
            let mut candidates: Vec<(usize, usize)> = Vec::new(); // (j, s col)
            for j in 0..map.n_customers {
                if let Some(col) = model.col(&format!("s_{i}_{j}_{w}")) {
                    let in_out_row = out_row.terms.iter().any(|&(c, _)| c == col);
                    let x_col = model.col(&format!("x_{i}_{j}")).expect("x var");
                    if in_out_row && values[x_col] > half {
                        candidates.push((j, col));
                    }
                }
            }
            if candidates.len() > guards.max_subset {
                return Err(Error::SizeGuard(format!(
                    "facility-scenario block has {} demand customers, guard is {}",
                    candidates.len(),
                    guards.max_subset
                )));
            }
            let cap_row = need(rows, &format!("cap_{i}_{w}"))?;

            let mut best_mask = 0u32;
            let mut best_value = T::infinity();
            let mut best_theta = T::zero();
            for mask in 0..(1u32 << candidates.len()) {
                let trial = |col: usize| -> T {
                    for (bit, &(_, s_col)) in candidates.iter().enumerate() {
                        if s_col == col {
                            return if mask & (1 << bit) != 0 {
                                T::one()
                            } else {
                                T::zero()
                            };
                        }
                    }
                    values[col]
                };
                if activity_with(cap_row, trial) > cap_row.rhs + T::objective_tol() {
                    continue;
                }
                if fifo {
                    let mut ok = true;
                    for &(j, _) in &candidates {
                        let row = need(rows, &format!("fifo_{i}_{j}_{w}"))?;
                        if activity_with(row, trial) > row.rhs + T::objective_tol() {
                            ok = false;
                            break;
                        }
                    }
                    if !ok {
                        continue;
                    }
                }
                let theta = {
                    let mut rest = T::zero();
                    let mut own = T::zero();
                    for &(c, a) in &out_row.terms {
                        if c == th_col {
                            own = a;
                        } else {
                            rest += a * trial(c);
                        }
                    }
                    ((out_row.rhs - rest) / own).max(T::zero())
                };
                let mut value = z_obj * g * theta;
                for (bit, &(_, s_col)) in candidates.iter().enumerate() {
                    if mask & (1 << bit) != 0 {
                        value += model.vars()[s_col].obj;
                    }
                }
                if value < best_value {
                    best_value = value;
                    best_mask = mask;
                    best_theta = theta;
                }
            }
            if best_value.is_infinite() {
                return Err(Error::Parse(format!(
                    "no feasible completion for block {i}/{w}"
                )));
            }
            for (bit, &(_, s_col)) in candidates.iter().enumerate() {
                values[s_col] = if best_mask & (1 << bit) != 0 {
                    T::one()
                } else {
                    T::zero()
                };
            }
            values[model.col(&format!("th_{i}_{w}")).expect("th var")] = best_theta;
        }
    }
    set_penalties(model, map, rows, values)
}

fn complete_ro<T: Scalar>(
    model: &MilpModel<T>,
    map: &VarMap,
    rows: &HashMap<&str, &Constraint<T>>,
    values: &mut Vec<T>,
    guards: &CompletionGuards,
) -> Result<()> {
    if !map.has_lam {
        return Err(Error::Parse("model has no reassignment variables".to_string()));
    }
    let half = T::from_f64_lossy(0.5);
    let open_sites: Vec<usize> = (0..map.n_sites)
        .filter(|&i| values[model.col(&format!("y_{i}")).expect("y var")] > half)
        .collect();
    if open_sites.len() > guards.max_ro_open {
        return Err(Error::SizeGuard(format!(
            "{} open facilities, guard is {}",
            open_sites.len(),
            guards.max_ro_open
        )));
    }
    for w in 0..map.n_scen {
        let demand: Vec<usize> = (0..map.n_customers)
            .filter(|&j| {
                rows.get(format!("cov_{j}_{w}").as_str())
                    .is_some_and(|row| row.rhs > half)
            })
            .collect();
        if demand.len() > guards.max_ro_demand {
            return Err(Error::SizeGuard(format!(
                "{} demand customers in one scenario, guard is {}",
                demand.len(),
                guards.max_ro_demand
            )));
        }
        // capacities read off the cap rows (the -K_i coefficient on y_i)
        let mut remaining = Vec::with_capacity(open_sites.len());
        for &i in &open_sites {
            let row = need(rows, &format!("cap_{i}_{w}"))?;
            let y_col = model.col(&format!("y_{i}")).expect("y var");
            let k = row
                .terms
                .iter()
                .find(|&&(c, _)| c == y_col)
                .map(|&(_, a)| -a)
                .ok_or_else(|| Error::Parse(format!("row cap_{i}_{w} has no capacity term")))?;
            remaining.push(k.to_f64().expect("finite") as i64);
        }

        // unit costs of each option, straight from the objective
        let mut serve_cost = vec![T::zero(); demand.len() * open_sites.len()];
        let mut ext_cost = vec![T::zero(); demand.len()];
        for (a, &j) in demand.iter().enumerate() {
            for (b, &i) in open_sites.iter().enumerate() {
                let s_col = model.col(&format!("s_{i}_{j}_{w}")).expect("s var");
                let x_col = model.col(&format!("x_{i}_{j}")).expect("x var");
                let lam_col = model.col(&format!("lam_{j}_{w}")).expect("lam var");
                let mut cost = model.vars()[s_col].obj;
                if values[x_col] <= half {
                    cost += model.vars()[lam_col].obj;
                }
                serve_cost[a * open_sites.len() + b] = cost;
            }
            let mu_col = model.col(&format!("mu_{j}_{w}")).expect("mu var");
            ext_cost[a] = model.vars()[mu_col].obj;
        }

        // exhaustive labeling with cost pruning; EXTERNAL = open_sites.len()
        let n_opts = open_sites.len();
        let mut labels = vec![n_opts; demand.len()];
        let mut best_labels = labels.clone();
        let mut best = T::infinity();
        fn rec<T: Scalar>(
            idx: usize,
            acc: T,
            n_opts: usize,
            serve_cost: &[T],
            ext_cost: &[T],
            remaining: &mut [i64],
            labels: &mut [usize],
            best: &mut T,
            best_labels: &mut [usize],
        ) {
            if acc >= *best {
                return;
            }
            if idx == labels.len() {
                *best = acc;
                best_labels.copy_from_slice(labels);
                return;
            }
            for b in 0..n_opts {
                if remaining[b] == 0 {
                    continue;
                }
                remaining[b] -= 1;
                labels[idx] = b;
                rec(
                    idx + 1,
                    acc + serve_cost[idx * n_opts + b],
                    n_opts,
                    serve_cost,
                    ext_cost,
                    remaining,
                    labels,
                    best,
                    best_labels,
                );
                remaining[b] += 1;
            }
            labels[idx] = n_opts;
            rec(
                idx + 1,
                acc + ext_cost[idx],
                n_opts,
                serve_cost,
                ext_cost,
                remaining,
                labels,
                best,
                best_labels,
            );
        }
        rec(
            0,
            T::zero(),
            n_opts,
            &serve_cost,
            &ext_cost,
            &mut remaining,
            &mut labels,
            &mut best,
            &mut best_labels,
        );

        for (a, &j) in demand.iter().enumerate() {
            let b = best_labels[a];
            if b == n_opts {
                values[model.col(&format!("mu_{j}_{w}")).expect("mu var")] = T::one();
            } else {
                let i = open_sites[b];
                values[model.col(&format!("s_{i}_{j}_{w}")).expect("s var")] = T::one();
                let x_col = model.col(&format!("x_{i}_{j}")).expect("x var");
                if values[x_col] <= half {
                    values[model.col(&format!("lam_{j}_{w}")).expect("lam var")] = T::one();
                }
            }
        }
    }
    Ok(())
}

/// Variable assignment induced by an evaluator run: first stage from `sol`,
/// second stage from the per-scenario outcomes. Lets tests compare a model
/// with an evaluation variable by variable, not just by objective.
pub fn induced_assignment<T: Scalar>(
    model: &MilpModel<T>,
    policy: Policy,
    sol: &FirstStageSolution,
    eval: &PolicyEvaluation<T>,
) -> Result<Vec<T>> {
    let map = VarMap::from_model(model)?;
    let mut values = first_stage_values(model, &map, sol)?;
    if eval.per_scenario.len() != map.n_scen {
        return Err(Error::DimensionMismatch(format!(
            "evaluation has {} scenarios, model {}",
            eval.per_scenario.len(),
            map.n_scen
        )));
    }
    let site_of = sol.site_of()?;
    for (w, outcome) in eval.per_scenario.iter().enumerate() {
        match policy {
            Policy::Fo | Policy::CdCo | Policy::OdCo => {
                for i in 0..map.n_sites {
                    if let Some(col) = model.col(&format!("th_{i}_{w}")) {
                        values[col] = T::from_f64_lossy(outcome.outsourced_at[i] as f64);
                    }
                }
                let z = model
                    .col(&format!("z_{w}"))
                    .ok_or_else(|| Error::Parse(format!("model has no variable z_{w}")))?;
                values[z] = outcome.penalty_cost;
                if policy != Policy::Fo {
                    for (j, service) in outcome.served.iter().enumerate() {
                        if let Service::By(i) = service {
                            let col = model
                                .col(&format!("s_{i}_{j}_{w}"))
                                .ok_or_else(|| Error::Parse("missing s variable".into()))?;
                            values[col] = T::one();
                        }
                    }
                }
            }
            Policy::Ro => {
                for (j, service) in outcome.served.iter().enumerate() {
                    match service {
                        Service::By(i) => {
                            let col = model
                                .col(&format!("s_{i}_{j}_{w}"))
                                .ok_or_else(|| Error::Parse("missing s variable".into()))?;
                            values[col] = T::one();
                            if site_of[j] != *i {
                                let lam = model
                                    .col(&format!("lam_{j}_{w}"))
                                    .ok_or_else(|| Error::Parse("missing lam variable".into()))?;
                                values[lam] = T::one();
                            }
                        }
                        Service::External => {
                            let mu = model
                                .col(&format!("mu_{j}_{w}"))
                                .ok_or_else(|| Error::Parse("missing mu variable".into()))?;
                            values[mu] = T::one();
                        }
                        Service::Outsourced => {
                            return Err(Error::Parse(
                                "reassignment outcome cannot contain third-party outsourcing"
                                    .to_string(),
                            ));
                        }
                        Service::NoDemand => {}
                    }
                }
            }
        }
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp;
    use crate::recourse::{self, test_util::instance};
    use crate::scalar::rel_close;
    use crate::scenario::{sample_independent, ScenarioSet};
    use crate::solve::random_feasible_solution;
    use crate::Instance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_case(seed: u64) -> (Instance<f64>, ScenarioSet<f64>, FirstStageSolution) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.gen_range(2..=3);
        let n = rng.gen_range(3..=6);
        let mut inst = instance(
            m,
            n,
            (0..m * n)
                .map(|_| (rng.gen_range(0.0f64..9.0) * 100.0).round() / 100.0)
                .collect(),
            (0..m).map(|_| rng.gen_range(1..=2)).collect(),
            (0..m)
                .map(|_| (rng.gen_range(0.0f64..10.0) * 100.0).round() / 100.0)
                .collect(),
            (rng.gen_range(1.0f64..12.0) * 100.0).round() / 100.0,
            (0..n)
                .map(|_| (rng.gen_range(0.0f64..3.0) * 100.0).round() / 100.0)
                .collect(),
        );
        inst.open_cost = (0..m).map(|_| rng.gen_range(1.0..20.0)).collect();
        for p in inst.demand_prob.iter_mut() {
            *p = rng.gen_range(0.2..0.9);
        }
        let scen = sample_independent(&inst, rng.gen_range(2..=6), seed ^ 0x5a5a).unwrap();
        let sol = random_feasible_solution(&inst, &mut rng).expect("feasible");
        (inst, scen, sol)
    }

    #[test]
    fn completions_match_evaluators_on_random_cases() {
        let guards = CompletionGuards::default();
        for seed in 0..60u64 {
            let (inst, scen, sol) = random_case(seed);
            for policy in Policy::ALL {
                let model = milp::build(&inst, &scen, policy, false);
                let completed = restricted_optimum(&model, policy, &sol, &guards).unwrap();
                let evaluated = recourse::expected_total(&inst, &scen, &sol, policy).unwrap();
                assert!(
                    rel_close(completed, evaluated, 1e-9),
                    "seed {seed} {policy}: completion {completed} vs evaluator {evaluated}"
                );
            }
        }
    }

    #[test]
    fn fo_completion_with_cuts_never_violates_them() {
        let guards = CompletionGuards::default();
        for seed in 0..30u64 {
            let (inst, scen, sol) = random_case(seed);
            let plain = milp::build_fo(&inst, &scen, false);
            let cut = milp::build_fo(&inst, &scen, true);
            let a = restricted_optimum(&plain, Policy::Fo, &sol, &guards).unwrap();
            // restricted_optimum verifies every row, cuts included
            let b = restricted_optimum(&cut, Policy::Fo, &sol, &guards).unwrap();
            assert!(rel_close(a, b, 1e-12), "seed {seed}: {a} vs {b}");
        }
    }

    #[test]
    fn induced_assignment_reproduces_objective_and_feasibility() {
        let guards = CompletionGuards::default();
        for seed in 0..40u64 {
            let (inst, scen, sol) = random_case(seed);
            for policy in Policy::ALL {
                let model = milp::build(&inst, &scen, policy, policy == Policy::Fo);
                let eval = recourse::evaluate(&inst, &scen, &sol, policy).unwrap();
                let values = induced_assignment(&model, policy, &sol, &eval).unwrap();
                let violations = model.violated_rows(&values, 1e-9);
                assert!(violations.is_empty(), "seed {seed} {policy}: {violations:?}");
                let obj = model.objective_value(&values);
                assert!(
                    rel_close(obj, eval.expected_cost, 1e-9),
                    "seed {seed} {policy}: objective {obj} vs {}",
                    eval.expected_cost
                );
                // and the induced point can never beat the optimal completion
                let opt = restricted_optimum(&model, policy, &sol, &guards).unwrap();
                assert!(obj >= opt - 1e-9, "seed {seed} {policy}");
            }
        }
    }

    #[test]
    fn ro_zero_external_cost_completion_is_opening_only() {
        let mut inst = instance(
            2,
            3,
            vec![4.0, 5.0, 6.0, 7.0, 8.0, 9.0],
            vec![1, 1],
            vec![2.0, 2.0],
            0.0, // external service is free
            vec![1.0; 3],
        );
        inst.open_cost = vec![3.0, 4.0];
        let scen = sample_independent(&inst, 4, 5).unwrap();
        let sol = FirstStageSolution::from_site_of(2, vec![true, true], &[0, 1, 0]);
        let model = milp::build_ro(&inst, &scen);
        let opt =
            restricted_optimum(&model, Policy::Ro, &sol, &CompletionGuards::default()).unwrap();
        assert!((opt - 7.0).abs() < 1e-12);
    }

    #[test]
    fn odco_single_caller_completion_matches_replay() {
        let inst = instance(1, 2, vec![1.0, 2.0], vec![2], vec![5.0], 9.0, vec![0.0; 2]);
        let scen = recourse::test_util::single_scenario(vec![true, false], vec![0]);
        let sol = FirstStageSolution::from_site_of(1, vec![true], &[0, 0]);
        let model = milp::build_odco(&inst, &scen);
        let completed =
            restricted_optimum(&model, Policy::OdCo, &sol, &CompletionGuards::default()).unwrap();
        let evaluated = recourse::expected_total(&inst, &scen, &sol, Policy::OdCo).unwrap();
        assert!((completed - evaluated).abs() < 1e-12);
        // first caller must be served: value is the service cost, not g
        assert!((completed - 1.0).abs() < 1e-12);
    }

    #[test]
    fn size_guards_are_enforced() {
        let (inst, scen, sol) = random_case(3);
        let model = milp::build_cdco(&inst, &scen);
        let guards = CompletionGuards {
            max_subset: 0,
            ..Default::default()
        };
        // every block with at least one demand customer now exceeds the guard
        let result = restricted_optimum(&model, Policy::CdCo, &sol, &guards);
        assert!(matches!(result, Err(Error::SizeGuard(_))));
    }
}
