//! Finite demand-scenario sets and their samplers.
//!
//! A scenario fixes one joint realization of the Bernoulli demands plus the
//! order in which the demand customers called for service (the call order
//! only matters under order-driven outsourcing, but it is scenario data, not
//! policy data, so every set carries it).
//!
//! Sampling is reproducible: the generator is ChaCha8 keyed from a 64-bit
//! seed, uniforms take the top 53 bits of the next 64-bit output, and
//! normal variates come from the inverse-CDF transform in [`crate::normal`].
//! Everything is drawn in a fixed order, so a given (instance, count, seed)
//! always yields the same set.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::instance::Instance;
use crate::normal::{standard_normal, std_normal_cdf};
use crate::scalar::{kahan_sum, Scalar};
use crate::Result;

/// Uniform draw in `[0, 1)` with 53 random bits.
pub(crate) fn unit_uniform<R: rand::RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A finite set of demand scenarios with probabilities and call orders.
///
/// Invariants are enforced at construction: probabilities are positive and
/// sum to one (within [`Scalar::prob_sum_tol`]), and each call order is a
/// permutation of exactly that scenario's demand customers.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet<T> {
    prob: Vec<T>,
    /// Scenario-major demand matrix: entry `w * n_customers + j`.
    demand: Vec<bool>,
    call_order: Vec<Vec<usize>>,
    empirical: Vec<T>,
    n_customers: usize,
}

impl<T: Scalar> ScenarioSet<T> {
    pub fn new(
        n_customers: usize,
        prob: Vec<T>,
        demand: Vec<Vec<bool>>,
        call_order: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let n_scen = prob.len();
        if n_scen == 0 {
            return Err(Error::InvalidScenarioSet("no scenarios".to_string()));
        }
        if demand.len() != n_scen || call_order.len() != n_scen {
            return Err(Error::InvalidScenarioSet(format!(
                "{} probabilities, {} demand rows, {} call orders",
                n_scen,
                demand.len(),
                call_order.len()
            )));
        }
        for &p in &prob {
            if !(p > T::zero()) || !p.is_finite() {
                return Err(Error::InvalidScenarioSet(
                    "scenario probabilities must be positive and finite".to_string(),
                ));
            }
        }
        let total = kahan_sum(prob.iter().copied());
        if (total - T::one()).abs() > T::prob_sum_tol() {
            return Err(Error::InvalidScenarioSet(format!(
                "scenario probabilities sum to {total}"
            )));
        }

        let mut flat = Vec::with_capacity(n_scen * n_customers);
        for (w, row) in demand.iter().enumerate() {
            if row.len() != n_customers {
                return Err(Error::InvalidScenarioSet(format!(
                    "scenario {w} has {} demand entries, expected {n_customers}",
                    row.len()
                )));
            }
            flat.extend_from_slice(row);
        }
        for (w, order) in call_order.iter().enumerate() {
            let mut seen = vec![false; n_customers];
            for &j in order {
                if j >= n_customers || !demand[w][j] || seen[j] {
                    return Err(Error::InvalidScenarioSet(format!(
                        "call order of scenario {w} is not a permutation of its demand customers"
                    )));
                }
                seen[j] = true;
            }
            let demand_count = demand[w].iter().filter(|&&d| d).count();
            if order.len() != demand_count {
                return Err(Error::InvalidScenarioSet(format!(
                    "call order of scenario {w} lists {} customers, scenario has {demand_count}",
                    order.len()
                )));
            }
        }

        let empirical = (0..n_customers)
            .map(|j| {
                kahan_sum((0..n_scen).map(|w| {
                    if flat[w * n_customers + j] {
                        prob[w]
                    } else {
                        T::zero()
                    }
                }))
            })
            .collect();

        Ok(ScenarioSet {
            prob,
            demand: flat,
            call_order,
            empirical,
            n_customers,
        })
    }

    #[inline]
    pub fn n_scenarios(&self) -> usize {
        self.prob.len()
    }

    #[inline]
    pub fn n_customers(&self) -> usize {
        self.n_customers
    }

    #[inline]
    pub fn prob(&self, w: usize) -> T {
        self.prob[w]
    }

    pub fn probs(&self) -> &[T] {
        &self.prob
    }

    /// d_j^ω.
    #[inline]
    pub fn d(&self, w: usize, j: usize) -> bool {
        self.demand[w * self.n_customers + j]
    }

    pub fn call_order(&self, w: usize) -> &[usize] {
        &self.call_order[w]
    }

    /// Cached empirical probabilities p̂_j = Σ_ω π^ω d_j^ω.
    pub fn empirical_prob(&self) -> &[T] {
        &self.empirical
    }

    /// D^ω: number of demand customers in scenario `w`.
    pub fn demand_count(&self, w: usize) -> Result<usize> {
        if w >= self.n_scenarios() {
            return Err(Error::IndexOutOfRange(format!(
                "scenario {w} of {}",
                self.n_scenarios()
            )));
        }
        Ok((0..self.n_customers).filter(|&j| self.d(w, j)).count())
    }

    /// Scenario index with the largest demand count, lowest index on ties.
    pub fn max_demand_scenario(&self) -> usize {
        let mut best = 0;
        let mut best_count = 0;
        for w in 0..self.n_scenarios() {
            let count = self.demand_count(w).expect("in range");
            if count > best_count {
                best = w;
                best_count = count;
            }
        }
        best
    }

    pub fn to_json(&self) -> String {
        let raw = ScenarioJson {
            prob: self.prob.iter().map(|p| p.to_f64().expect("finite")).collect(),
            demand: (0..self.n_scenarios())
                .map(|w| {
                    (0..self.n_customers)
                        .map(|j| u8::from(self.d(w, j)))
                        .collect()
                })
                .collect(),
            call_order: self.call_order.clone(),
        };
        serde_json::to_string_pretty(&raw).expect("serialize")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: ScenarioJson = serde_json::from_str(text)?;
        let n_customers = raw.demand.first().map_or(0, Vec::len);
        let demand = raw
            .demand
            .into_iter()
            .map(|row| row.into_iter().map(|d| d != 0).collect())
            .collect();
        let prob = raw.prob.into_iter().map(T::from_f64_lossy).collect();
        ScenarioSet::new(n_customers, prob, demand, raw.call_order)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct ScenarioJson {
    prob: Vec<f64>,
    demand: Vec<Vec<u8>>,
    call_order: Vec<Vec<usize>>,
}

/// Pseudo-distances and mixing weights for spatially correlated sampling.
#[derive(Debug, Clone)]
pub struct CorrelationSpec<T> {
    /// δ_jj' = max{0.1, max_i |c_ij − c_ij'|}, row-major, self-distances
    /// included (they floor to 0.1 like any identical pair).
    pub delta: Vec<T>,
    /// Δ: largest pairwise pseudo-distance.
    pub max_delta: T,
    /// w(δ_jk) = 1 + (1 − 2δ/Δ)^(1/3), real cube root.
    pub weights: Vec<T>,
    n: usize,
}

impl<T: Scalar> CorrelationSpec<T> {
    #[inline]
    pub fn delta(&self, j: usize, k: usize) -> T {
        self.delta[j * self.n + k]
    }

    #[inline]
    pub fn weight(&self, j: usize, k: usize) -> T {
        self.weights[j * self.n + k]
    }
}

/// Mixing weight w(δ) = 1 + (1 − 2δ/Δ)^(1/3) with the real cube root, so it
/// decreases from 2 at δ = 0 to 0 at δ = Δ.
pub fn decay_weight<T: Scalar>(delta: T, max_delta: T) -> T {
    let two = T::from_f64_lossy(2.0);
    T::one() + (T::one() - two * delta / max_delta).cbrt()
}

/// Builds the pseudo-distance and weight matrices for an instance.
/// Needs at least two customers, otherwise Δ is undefined.
pub fn build_correlation_spec<T: Scalar>(inst: &Instance<T>) -> Result<CorrelationSpec<T>> {
    let n = inst.n_customers;
    if n < 2 {
        return Err(Error::TooFewCustomers);
    }
    let floor = T::from_f64_lossy(0.1);
    let mut delta = vec![T::zero(); n * n];
    let mut max_delta = T::zero();
    for j in 0..n {
        for k in 0..n {
            let mut spread = T::zero();
            for i in 0..inst.n_sites {
                spread = spread.max((inst.c(i, j) - inst.c(i, k)).abs());
            }
            let d = floor.max(spread);
            delta[j * n + k] = d;
            max_delta = max_delta.max(d);
        }
    }
    let weights = delta
        .iter()
        .map(|&d| decay_weight(d, max_delta))
        .collect();
    Ok(CorrelationSpec {
        delta,
        max_delta,
        weights,
        n,
    })
}

/// Samples scenarios with independent Bernoulli(p_j) demands and uniformly
/// random call orders; probabilities are the uniform 1/n_scen.
pub fn sample_independent<T: Scalar>(
    inst: &Instance<T>,
    n_scen: usize,
    seed: u64,
) -> Result<ScenarioSet<T>> {
    if n_scen == 0 {
        return Err(Error::InvalidScenarioSet(
            "need at least one scenario".to_string(),
        ));
    }
    let p: Vec<f64> = inst
        .demand_prob
        .iter()
        .map(|p| p.to_f64().expect("finite"))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut demand = Vec::with_capacity(n_scen);
    let mut call_order = Vec::with_capacity(n_scen);
    for _ in 0..n_scen {
        let row: Vec<bool> = p.iter().map(|&pj| unit_uniform(&mut rng) < pj).collect();
        call_order.push(random_call_order(&row, &mut rng));
        demand.push(row);
    }
    let pi = T::one() / T::from_f64_lossy(n_scen as f64);
    ScenarioSet::new(inst.n_customers, vec![pi; n_scen], demand, call_order)
}

/// Samples scenarios with spatially correlated demands.
///
/// Per scenario, i.i.d. standard normals Z_k are mixed into
/// Y_j = Σ_k w(δ_jk) Z_k / sqrt(Σ_k w(δ_jk)²), which is again N(0,1), and
/// customer j demands iff Φ(Y_j) ≤ p_j — so the marginal of d_j stays
/// exactly Bernoulli(p_j) while nearby customers correlate positively.
pub fn sample_correlated<T: Scalar>(
    inst: &Instance<T>,
    n_scen: usize,
    seed: u64,
) -> Result<ScenarioSet<T>> {
    if n_scen == 0 {
        return Err(Error::InvalidScenarioSet(
            "need at least one scenario".to_string(),
        ));
    }
    let spec = build_correlation_spec(inst)?;
    let n = inst.n_customers;

    // Sampling math runs in f64 regardless of T.
    let weights: Vec<f64> = spec.weights.iter().map(|w| w.to_f64().expect("finite")).collect();
    let mut norm = vec![0.0f64; n];
    for j in 0..n {
        let sq: f64 = (0..n).map(|k| weights[j * n + k].powi(2)).sum();
        if sq <= 0.0 {
            return Err(Error::DegenerateCorrelation);
        }
        norm[j] = sq.sqrt();
    }
    let p: Vec<f64> = inst
        .demand_prob
        .iter()
        .map(|p| p.to_f64().expect("finite"))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = vec![0.0f64; n];
    let mut demand = Vec::with_capacity(n_scen);
    let mut call_order = Vec::with_capacity(n_scen);
    for _ in 0..n_scen {
        for zk in z.iter_mut() {
            *zk = standard_normal(&mut rng);
        }
        let row: Vec<bool> = (0..n)
            .map(|j| {
                let y: f64 = (0..n).map(|k| weights[j * n + k] * z[k]).sum::<f64>() / norm[j];
                std_normal_cdf(y) <= p[j]
            })
            .collect();
        call_order.push(random_call_order(&row, &mut rng));
        demand.push(row);
    }
    let pi = T::one() / T::from_f64_lossy(n_scen as f64);
    ScenarioSet::new(inst.n_customers, vec![pi; n_scen], demand, call_order)
}

/// Uniformly random permutation of the demand customers of one scenario.
fn random_call_order<R: Rng>(demand_row: &[bool], rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = demand_row
        .iter()
        .enumerate()
        .filter_map(|(j, &d)| d.then_some(j))
        .collect();
    // Fisher-Yates.
    for i in (1..order.len()).rev() {
        let k = rng.gen_range(0..=i);
        order.swap(i, k);
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::test_util::tiny_instance;
    use proptest::prelude::*;

    fn with_probs(p: Vec<f64>) -> Instance<f64> {
        let n = p.len();
        Instance {
            n_sites: 1,
            n_customers: n,
            open_cost: vec![1.0],
            min_assigned: vec![0],
            capacity: vec![1],
            serve_cost: (0..n).map(|j| j as f64).collect(),
            outsource_penalty: vec![1.0],
            external_cost: 1.0,
            reassign_penalty: vec![0.0; n],
            demand_prob: p,
            site_labels: None,
            customer_labels: None,
        }
    }

    #[test]
    fn zero_probabilities_give_empty_scenarios() {
        let inst = with_probs(vec![0.0, 0.0, 0.0]);
        let scen = sample_independent(&inst, 5, 3).unwrap();
        for w in 0..5 {
            assert_eq!(scen.demand_count(w).unwrap(), 0);
            assert!(scen.call_order(w).is_empty());
        }
    }

    #[test]
    fn unit_probabilities_give_full_scenarios() {
        let inst = with_probs(vec![1.0, 1.0]);
        let scen = sample_independent(&inst, 4, 3).unwrap();
        for w in 0..4 {
            assert_eq!(scen.demand_count(w).unwrap(), 2);
            let mut order = scen.call_order(w).to_vec();
            order.sort_unstable();
            assert_eq!(order, vec![0, 1]);
        }
    }

    #[test]
    fn independent_sampling_obeys_law_of_large_numbers() {
        let inst = with_probs(vec![0.5, 0.5, 0.5]);
        let scen = sample_independent(&inst, 10_000, 11).unwrap();
        for &phat in scen.empirical_prob() {
            // 3-sigma bound for Binomial(10000, 0.5) frequencies is 0.015.
            assert!((phat - 0.5).abs() < 0.02, "phat = {phat}");
        }
    }

    #[test]
    fn identical_cost_columns_floor_to_min_distance() {
        let mut inst = with_probs(vec![0.5, 0.5, 0.5]);
        inst.serve_cost = vec![1.0, 1.0, 7.0];
        let spec = build_correlation_spec(&inst).unwrap();
        assert_eq!(spec.delta(0, 1), 0.1);
    }

    #[test]
    fn decay_weight_endpoints() {
        // midpoint of the decay
        assert!((decay_weight(1.0f64, 2.0) - 1.0).abs() < 1e-15);
        // real cube root of -1 at the far end
        assert!(decay_weight(2.0f64, 2.0).abs() < 1e-15);
        // zero distance
        assert!((decay_weight(0.0f64, 2.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn correlation_spec_needs_two_customers() {
        let inst = with_probs(vec![0.5]);
        assert!(matches!(
            build_correlation_spec(&inst),
            Err(Error::TooFewCustomers)
        ));
    }

    #[test]
    fn correlated_degenerate_probabilities() {
        let mut inst = with_probs(vec![0.0, 0.0, 0.0]);
        inst.serve_cost = vec![0.0, 1.0, 2.0];
        let scen = sample_correlated(&inst, 20, 5).unwrap();
        for w in 0..20 {
            assert_eq!(scen.demand_count(w).unwrap(), 0);
        }

        inst.demand_prob = vec![1.0, 1.0, 1.0];
        let scen = sample_correlated(&inst, 20, 5).unwrap();
        for w in 0..20 {
            assert_eq!(scen.demand_count(w).unwrap(), 3);
        }
    }

    #[test]
    fn all_equal_distances_are_degenerate() {
        // One site, both customers with the same cost: every δ floors to 0.1
        // and every weight is zero, so the mixed normals are undefined.
        let mut inst = with_probs(vec![0.5, 0.5]);
        inst.serve_cost = vec![3.0, 3.0];
        assert!(matches!(
            sample_correlated(&inst, 4, 9),
            Err(Error::DegenerateCorrelation)
        ));
    }

    #[test]
    fn correlated_sampling_preserves_marginals() {
        let inst = with_probs(vec![0.2, 0.5, 0.8, 0.35]);
        let scen = sample_correlated(&inst, 10_000, 17).unwrap();
        for (j, &phat) in scen.empirical_prob().iter().enumerate() {
            let p = inst.demand_prob[j];
            let bound = 3.0 * (p * (1.0 - p) / 10_000.0).sqrt();
            assert!((phat - p).abs() < bound, "j={j} phat={phat} p={p}");
        }
    }

    #[test]
    fn mixing_rows_are_normalized() {
        let inst = tiny_instance();
        let spec = build_correlation_spec(&inst).unwrap();
        let n = inst.n_customers;
        for j in 0..n {
            let sq: f64 = (0..n).map(|k| spec.weight(j, k).powi(2)).sum();
            let norm = sq.sqrt();
            let back: f64 = (0..n).map(|k| (spec.weight(j, k) / norm).powi(2)).sum();
            assert!((back - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn demand_count_examples() {
        let set = ScenarioSet::<f64>::new(
            4,
            vec![0.5, 0.5],
            vec![
                vec![false, false, false, false],
                vec![true, false, true, true],
            ],
            vec![vec![], vec![2, 0, 3]],
        )
        .unwrap();
        assert_eq!(set.demand_count(0).unwrap(), 0);
        assert_eq!(set.demand_count(1).unwrap(), 3);
        assert!(set.demand_count(2).is_err());
    }

    #[test]
    fn expected_demand_equals_sum_of_empirical_probs() {
        let inst = with_probs(vec![0.3, 0.6, 0.9, 0.1, 0.5]);
        let scen = sample_independent(&inst, 64, 23).unwrap();
        let lhs: f64 = (0..scen.n_scenarios())
            .map(|w| scen.prob(w) * scen.demand_count(w).unwrap() as f64)
            .sum();
        let rhs: f64 = scen.empirical_prob().iter().sum();
        assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn sampling_is_reproducible() {
        let inst = with_probs(vec![0.3, 0.6, 0.9]);
        assert_eq!(
            sample_independent(&inst, 50, 99).unwrap(),
            sample_independent(&inst, 50, 99).unwrap()
        );
        let mut inst2 = inst.clone();
        inst2.serve_cost = vec![0.0, 2.0, 5.0];
        assert_eq!(
            sample_correlated(&inst2, 50, 99).unwrap(),
            sample_correlated(&inst2, 50, 99).unwrap()
        );
    }

    #[test]
    fn json_round_trip() {
        let inst = with_probs(vec![0.3, 0.6, 0.9]);
        let scen = sample_independent(&inst, 12, 4).unwrap();
        let back = ScenarioSet::<f64>::from_json_str(&scen.to_json()).unwrap();
        assert_eq!(scen, back);
    }

    #[test]
    fn loader_rejects_bad_call_order() {
        let text = r#"{"prob": [1.0], "demand": [[1, 0]], "call_order": [[1]]}"#;
        assert!(ScenarioSet::<f64>::from_json_str(text).is_err());
        let text = r#"{"prob": [1.0], "demand": [[1, 0]], "call_order": [[]]}"#;
        assert!(ScenarioSet::<f64>::from_json_str(text).is_err());
    }

    #[test]
    fn loader_accepts_nonuniform_weights() {
        let text = r#"{"prob": [0.25, 0.75], "demand": [[1], [0]], "call_order": [[0], []]}"#;
        let set = ScenarioSet::<f64>::from_json_str(text).unwrap();
        assert!((set.empirical_prob()[0] - 0.25).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn call_orders_are_permutations_of_demand_customers(seed in any::<u64>(), n_scen in 1usize..12) {
            let inst = with_probs(vec![0.4, 0.7, 0.2, 0.9]);
            let scen = sample_independent(&inst, n_scen, seed).unwrap();
            for w in 0..n_scen {
                let mut order = scen.call_order(w).to_vec();
                order.sort_unstable();
                let demand: Vec<usize> = (0..4).filter(|&j| scen.d(w, j)).collect();
                prop_assert_eq!(order, demand);
            }
        }
    }
}
