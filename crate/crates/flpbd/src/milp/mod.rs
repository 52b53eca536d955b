//! Solver-neutral MILP models for the four policies.
//!
//! A built model is an immutable list of variables (with objective
//! coefficients) and linear constraints, always minimizing. Variable names
//! are deterministic — `y_i`, `x_i_j`, `s_i_j_w`, `th_i_w`, `z_w`,
//! `lam_j_w`, `mu_j_w` — and declaration order is fixed (first stage, then
//! policy-specific blocks), so exported files are reproducible byte for
//! byte.
//!
//! The expected-service term of every objective uses the empirical demand
//! frequencies p̂_j of the scenario set rather than the nominal p_j, and the
//! customer-outsourcing service term is weighted by the scenario
//! probabilities; both choices make the model value coincide exactly with
//! the recourse evaluation on scenario-defined data.

mod complete;
mod io;

pub use complete::{induced_assignment, restricted_optimum, CompletionGuards};
pub use io::{
    export_lp, export_mps, models_equivalent, read_lp, read_mps, write_lp_string,
    write_mps_string,
};

use std::collections::HashMap;

use crate::instance::Instance;
use crate::recourse::Policy;
use crate::scalar::Scalar;
use crate::scenario::ScenarioSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    /// Continuous with lower bound 0 and no upper bound.
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Variable<T> {
    pub name: String,
    pub kind: VarKind,
    pub obj: T,
}

#[derive(Debug, Clone)]
pub struct Constraint<T> {
    pub name: String,
    /// (column, coefficient) pairs; zero coefficients are never stored.
    pub terms: Vec<(usize, T)>,
    pub sense: Sense,
    pub rhs: T,
}

#[derive(Debug, Clone)]
pub struct MilpModel<T> {
    pub name: String,
    vars: Vec<Variable<T>>,
    cons: Vec<Constraint<T>>,
    index: HashMap<String, usize>,
}

impl<T: Scalar> MilpModel<T> {
    pub fn new(name: impl Into<String>) -> Self {
        MilpModel {
            name: name.into(),
            vars: Vec::new(),
            cons: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Declares a variable; names must be unique.
    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, obj: T) -> usize {
        let name = name.into();
        let col = self.vars.len();
        let previous = self.index.insert(name.clone(), col);
        assert!(previous.is_none(), "duplicate variable {name}");
        self.vars.push(Variable { name, kind, obj });
        col
    }

    /// Adds a constraint; zero coefficients are dropped, columns must exist.
    pub fn add_con(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, T)>,
        sense: Sense,
        rhs: T,
    ) {
        let terms: Vec<(usize, T)> = terms
            .into_iter()
            .filter(|&(col, coeff)| {
                assert!(col < self.vars.len(), "constraint references unknown column");
                coeff != T::zero()
            })
            .collect();
        self.cons.push(Constraint {
            name: name.into(),
            terms,
            sense,
            rhs,
        });
    }

    pub fn vars(&self) -> &[Variable<T>] {
        &self.vars
    }

    pub fn cons(&self) -> &[Constraint<T>] {
        &self.cons
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn n_cons(&self) -> usize {
        self.cons.len()
    }

    pub fn col(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn objective_value(&self, values: &[T]) -> T {
        self.vars
            .iter()
            .zip(values)
            .map(|(v, &x)| v.obj * x)
            .sum()
    }

    pub fn row_activity(&self, con: &Constraint<T>, values: &[T]) -> T {
        con.terms.iter().map(|&(col, a)| a * values[col]).sum()
    }

    /// All constraints violated by more than `tol` at the given point.
    pub fn violated_rows(&self, values: &[T], tol: T) -> Vec<String> {
        let mut out = Vec::new();
        for con in &self.cons {
            let lhs = self.row_activity(con, values);
            let bad = match con.sense {
                Sense::Le => lhs > con.rhs + tol,
                Sense::Ge => lhs < con.rhs - tol,
                Sense::Eq => (lhs - con.rhs).abs() > tol,
            };
            if bad {
                out.push(format!(
                    "{}: activity {lhs} {} {}",
                    con.name,
                    con.sense.symbol(),
                    con.rhs
                ));
            }
        }
        out
    }
}

fn var_y(i: usize) -> String {
    format!("y_{i}")
}
fn var_x(i: usize, j: usize) -> String {
    format!("x_{i}_{j}")
}
fn var_s(i: usize, j: usize, w: usize) -> String {
    format!("s_{i}_{j}_{w}")
}
fn var_th(i: usize, w: usize) -> String {
    format!("th_{i}_{w}")
}
fn var_z(w: usize) -> String {
    format!("z_{w}")
}
fn var_lam(j: usize, w: usize) -> String {
    format!("lam_{j}_{w}")
}
fn var_mu(j: usize, w: usize) -> String {
    format!("mu_{j}_{w}")
}

/// First-stage fragment shared by all policies: binaries y and x, the
/// assignment equalities, the open-facility linking rows and the
/// assignment lower bounds (emitted even when ℓ_i = 0).
pub fn build_first_stage<T: Scalar>(inst: &Instance<T>) -> MilpModel<T> {
    let mut model = MilpModel::new("flpbd");
    for i in 0..inst.n_sites {
        model.add_var(var_y(i), VarKind::Binary, inst.open_cost[i]);
    }
    for i in 0..inst.n_sites {
        for j in 0..inst.n_customers {
            model.add_var(var_x(i, j), VarKind::Binary, T::zero());
        }
    }
    let y = |i: usize| i;
    let x = |i: usize, j: usize| inst.n_sites + i * inst.n_customers + j;

    for j in 0..inst.n_customers {
        let terms = (0..inst.n_sites).map(|i| (x(i, j), T::one())).collect();
        model.add_con(format!("assign_{j}"), terms, Sense::Eq, T::one());
    }
    for i in 0..inst.n_sites {
        for j in 0..inst.n_customers {
            model.add_con(
                format!("link_{i}_{j}"),
                vec![(x(i, j), T::one()), (y(i), -T::one())],
                Sense::Le,
                T::zero(),
            );
        }
    }
    for i in 0..inst.n_sites {
        let mut terms: Vec<(usize, T)> = (0..inst.n_customers)
            .map(|j| (x(i, j), T::one()))
            .collect();
        terms.push((y(i), -T::from_f64_lossy(inst.min_assigned[i] as f64)));
        model.add_con(format!("lmin_{i}"), terms, Sense::Ge, T::zero());
    }
    model
}

/// Facility-outsourcing model. `with_cuts` adds the per-site aggregated
/// outsourcing inequality and the single peak-demand-scenario inequality;
/// both are valid inequalities, so they never change the optimal value.
pub fn build_fo<T: Scalar>(
    inst: &Instance<T>,
    scen: &ScenarioSet<T>,
    with_cuts: bool,
) -> MilpModel<T> {
    assert_eq!(inst.n_customers, scen.n_customers());
    let mut model = build_first_stage(inst);
    model.name = "flpbd_fo".to_string();
    let phat = scen.empirical_prob();
    let y = |i: usize| i;
    let x = |i: usize, j: usize| inst.n_sites + i * inst.n_customers + j;
    for i in 0..inst.n_sites {
        for j in 0..inst.n_customers {
            model.vars[x(i, j)].obj = phat[j] * inst.c(i, j);
        }
    }

    let n_scen = scen.n_scenarios();
    let mut th = vec![0usize; inst.n_sites * n_scen];
    for i in 0..inst.n_sites {
        for w in 0..n_scen {
            th[i * n_scen + w] = model.add_var(var_th(i, w), VarKind::Continuous, T::zero());
        }
    }
    let z: Vec<usize> = (0..n_scen)
        .map(|w| model.add_var(var_z(w), VarKind::Continuous, scen.prob(w)))
        .collect();

    // th_i_w >= sum_j d_j^w x_ij - K_i y_i
    for i in 0..inst.n_sites {
        for w in 0..n_scen {
            let mut terms = vec![(th[i * n_scen + w], T::one())];
            for j in 0..inst.n_customers {
                if scen.d(w, j) {
                    terms.push((x(i, j), -T::one()));
                }
            }
            terms.push((y(i), T::from_f64_lossy(inst.capacity[i] as f64)));
            model.add_con(format!("out_{i}_{w}"), terms, Sense::Ge, T::zero());
        }
    }
    // z_w >= sum_i g_i th_i_w
    for w in 0..n_scen {
        let mut terms = vec![(z[w], T::one())];
        for i in 0..inst.n_sites {
            terms.push((th[i * n_scen + w], -inst.outsource_penalty[i]));
        }
        model.add_con(format!("pen_{w}"), terms, Sense::Ge, T::zero());
    }

    if with_cuts {
        // sum_w pi_w th_i_w >= sum_j phat_j x_ij - K_i y_i
        for i in 0..inst.n_sites {
            let mut terms: Vec<(usize, T)> = (0..n_scen)
                .map(|w| (th[i * n_scen + w], scen.prob(w)))
                .collect();
            for j in 0..inst.n_customers {
                terms.push((x(i, j), -phat[j]));
            }
            terms.push((y(i), T::from_f64_lossy(inst.capacity[i] as f64)));
            model.add_con(format!("cutavg_{i}"), terms, Sense::Ge, T::zero());
        }
        // sum_i K_i y_i + sum_i th_i_wmax >= D^wmax for the scenario with
        // the most demand customers (lowest index on ties)
        let wt = scen.max_demand_scenario();
        let dmax = scen.demand_count(wt).expect("in range");
        let mut terms: Vec<(usize, T)> = (0..inst.n_sites)
            .map(|i| (y(i), T::from_f64_lossy(inst.capacity[i] as f64)))
            .collect();
        for i in 0..inst.n_sites {
            terms.push((th[i * n_scen + wt], T::one()));
        }
        model.add_con(
            "cutmax".to_string(),
            terms,
            Sense::Ge,
            T::from_f64_lossy(dmax as f64),
        );
    }
    model
}

/// Shared body of the two customer-outsourcing models.
fn build_co_base<T: Scalar>(inst: &Instance<T>, scen: &ScenarioSet<T>) -> MilpModel<T> {
    assert_eq!(inst.n_customers, scen.n_customers());
    let mut model = build_first_stage(inst);
    let x = |i: usize, j: usize| inst.n_sites + i * inst.n_customers + j;
    let n_scen = scen.n_scenarios();

    let mut s_cols = vec![0usize; inst.n_sites * inst.n_customers * n_scen];
    for i in 0..inst.n_sites {
        for j in 0..inst.n_customers {
            for w in 0..n_scen {
                s_cols[(i * inst.n_customers + j) * n_scen + w] = model.add_var(
                    var_s(i, j, w),
                    VarKind::Binary,
                    scen.prob(w) * inst.c(i, j),
                );
            }
        }
    }
    let s = |i: usize, j: usize, w: usize| s_cols[(i * inst.n_customers + j) * n_scen + w];
    let mut th = vec![0usize; inst.n_sites * n_scen];
    for i in 0..inst.n_sites {
        for w in 0..n_scen {
            th[i * n_scen + w] = model.add_var(var_th(i, w), VarKind::Continuous, T::zero());
        }
    }
    let z: Vec<usize> = (0..n_scen)
        .map(|w| model.add_var(var_z(w), VarKind::Continuous, scen.prob(w)))
        .collect();

    // sum_w s_ijw <= (sum_w d_j^w) x_ij
    for i in 0..inst.n_sites {
        for j in 0..inst.n_customers {
            let mut terms: Vec<(usize, T)> =
                (0..n_scen).map(|w| (s(i, j, w), T::one())).collect();
            let demand_scenarios = (0..n_scen).filter(|&w| scen.d(w, j)).count();
            terms.push((x(i, j), -T::from_f64_lossy(demand_scenarios as f64)));
            model.add_con(format!("su_{i}_{j}"), terms, Sense::Le, T::zero());
        }
    }
    // sum_j d_j^w s_ijw <= K_i
    for i in 0..inst.n_sites {
        for w in 0..n_scen {
            let terms = (0..inst.n_customers)
                .filter(|&j| scen.d(w, j))
                .map(|j| (s(i, j, w), T::one()))
                .collect();
            model.add_con(
                format!("cap_{i}_{w}"),
                terms,
                Sense::Le,
                T::from_f64_lossy(inst.capacity[i] as f64),
            );
        }
    }
    // sum_j d_j^w s_ijw + th_iw >= sum_j d_j^w x_ij
    for i in 0..inst.n_sites {
        for w in 0..n_scen {
            let mut terms = vec![(th[i * n_scen + w], T::one())];
            for j in 0..inst.n_customers {
                if scen.d(w, j) {
                    terms.push((s(i, j, w), T::one()));
                    terms.push((x(i, j), -T::one()));
                }
            }
            model.add_con(format!("out_{i}_{w}"), terms, Sense::Ge, T::zero());
        }
    }
    // z_w >= sum_i g_i th_iw
    for w in 0..n_scen {
        let mut terms = vec![(z[w], T::one())];
        for i in 0..inst.n_sites {
            terms.push((th[i * n_scen + w], -inst.outsource_penalty[i]));
        }
        model.add_con(format!("pen_{w}"), terms, Sense::Ge, T::zero());
    }
    model
}

/// Cost-driven customer outsourcing.
pub fn build_cdco<T: Scalar>(inst: &Instance<T>, scen: &ScenarioSet<T>) -> MilpModel<T> {
    let mut model = build_co_base(inst, scen);
    model.name = "flpbd_cdco".to_string();
    model
}

/// Order-driven customer outsourcing: the cost-driven model plus the
/// first-come-first-served rows. A demand customer may be skipped at its
/// facility only once the facility already serves K_i earlier callers, so
/// for the first caller the right-hand sum is empty and service is forced.
pub fn build_odco<T: Scalar>(inst: &Instance<T>, scen: &ScenarioSet<T>) -> MilpModel<T> {
    let mut model = build_co_base(inst, scen);
    model.name = "flpbd_odco".to_string();
    let x = |i: usize, j: usize| inst.n_sites + i * inst.n_customers + j;
    for i in 0..inst.n_sites {
        for w in 0..scen.n_scenarios() {
            for (pos, &j) in scen.call_order(w).iter().enumerate() {
                let k = T::from_f64_lossy(inst.capacity[i] as f64);
                let s_col = model.col(&var_s(i, j, w)).expect("declared");
                let mut terms = vec![(x(i, j), k), (s_col, -k)];
                for &prev in &scen.call_order(w)[..pos] {
                    let col = model.col(&var_s(i, prev, w)).expect("declared");
                    terms.push((col, -T::one()));
                }
                model.add_con(format!("fifo_{i}_{j}_{w}"), terms, Sense::Le, T::zero());
            }
        }
    }
    model
}

/// Reassignment outsourcing.
pub fn build_ro<T: Scalar>(inst: &Instance<T>, scen: &ScenarioSet<T>) -> MilpModel<T> {
    assert_eq!(inst.n_customers, scen.n_customers());
    let mut model = build_first_stage(inst);
    model.name = "flpbd_ro".to_string();
    let y = |i: usize| i;
    let x = |i: usize, j: usize| inst.n_sites + i * inst.n_customers + j;
    let n_scen = scen.n_scenarios();

    let mut s_cols = vec![0usize; inst.n_sites * inst.n_customers * n_scen];
    for i in 0..inst.n_sites {
        for j in 0..inst.n_customers {
            for w in 0..n_scen {
                s_cols[(i * inst.n_customers + j) * n_scen + w] = model.add_var(
                    var_s(i, j, w),
                    VarKind::Binary,
                    scen.prob(w) * inst.c(i, j),
                );
            }
        }
    }
    let s = |i: usize, j: usize, w: usize| s_cols[(i * inst.n_customers + j) * n_scen + w];
    let mut lam = vec![0usize; inst.n_customers * n_scen];
    for j in 0..inst.n_customers {
        for w in 0..n_scen {
            lam[j * n_scen + w] = model.add_var(
                var_lam(j, w),
                VarKind::Binary,
                scen.prob(w) * inst.reassign_penalty[j],
            );
        }
    }
    let mut mu = vec![0usize; inst.n_customers * n_scen];
    for j in 0..inst.n_customers {
        for w in 0..n_scen {
            mu[j * n_scen + w] = model.add_var(
                var_mu(j, w),
                VarKind::Binary,
                scen.prob(w) * inst.external_cost,
            );
        }
    }

    // sum_j s_ijw <= K_i y_i
    for i in 0..inst.n_sites {
        for w in 0..n_scen {
            let mut terms: Vec<(usize, T)> = (0..inst.n_customers)
                .map(|j| (s(i, j, w), T::one()))
                .collect();
            terms.push((y(i), -T::from_f64_lossy(inst.capacity[i] as f64)));
            model.add_con(format!("cap_{i}_{w}"), terms, Sense::Le, T::zero());
        }
    }
    // d_j^w lam_jw >= s_ijw - d_j^w x_ij
    for i in 0..inst.n_sites {
        for j in 0..inst.n_customers {
            for w in 0..n_scen {
                let d = scen.d(w, j);
                let mut terms = Vec::with_capacity(3);
                if d {
                    terms.push((lam[j * n_scen + w], T::one()));
                    terms.push((x(i, j), T::one()));
                }
                terms.push((s(i, j, w), -T::one()));
                model.add_con(format!("reas_{i}_{j}_{w}"), terms, Sense::Ge, T::zero());
            }
        }
    }
    // sum_i s_ijw + mu_jw >= d_j^w
    for j in 0..inst.n_customers {
        for w in 0..n_scen {
            let mut terms: Vec<(usize, T)> = (0..inst.n_sites)
                .map(|i| (s(i, j, w), T::one()))
                .collect();
            terms.push((mu[j * n_scen + w], T::one()));
            let rhs = if scen.d(w, j) { T::one() } else { T::zero() };
            model.add_con(format!("cov_{j}_{w}"), terms, Sense::Ge, rhs);
        }
    }
    model
}

/// Builds the model for any policy; `with_cuts` only affects FO.
pub fn build<T: Scalar>(
    inst: &Instance<T>,
    scen: &ScenarioSet<T>,
    policy: Policy,
    with_cuts: bool,
) -> MilpModel<T> {
    match policy {
        Policy::Fo => build_fo(inst, scen, with_cuts),
        Policy::CdCo => build_cdco(inst, scen),
        Policy::OdCo => build_odco(inst, scen),
        Policy::Ro => build_ro(inst, scen),
    }
}

/// Closed-form FO model size: (variables, constraints) without cuts.
pub fn fo_size(n_sites: usize, n_customers: usize, n_scen: usize) -> (usize, usize) {
    (
        n_sites * (1 + n_customers) + n_scen * (n_sites + 1),
        n_customers * (1 + n_sites) + n_sites + n_scen * (n_sites + 1),
    )
}

/// Closed-form CD-CO model size: (variables, constraints).
pub fn cdco_size(n_sites: usize, n_customers: usize, n_scen: usize) -> (usize, usize) {
    let (fo_vars, _) = fo_size(n_sites, n_customers, n_scen);
    (
        fo_vars + n_sites * n_customers * n_scen,
        n_customers * (1 + 2 * n_sites) + n_sites + n_scen * (2 * n_sites + 1),
    )
}
