//! Cross-policy solution-quality analysis.
//!
//! The central object is the 4×4 gap matrix: entry (A, B) measures how much
//! worse policy A's first-stage solution performs under policy B's recourse
//! than B's own optimum. Under proven optima the entries are nonnegative and
//! the diagonal is zero; against best-found values negative entries are
//! possible and are reported as-is, flagged by the per-column optimality
//! status.

use crate::instance::FirstStageSolution;
use crate::recourse::{expected_total, Policy, PolicyEvaluation};
use crate::scalar::Scalar;
use crate::scenario::ScenarioSet;
use crate::{Error, Instance, Result};

/// Component labels used in cost-structure outputs.
pub const COMPONENTS: [&str; 4] = ["opening", "service", "penalty", "reassign"];

#[derive(Debug, Clone)]
pub struct GapMatrix<T> {
    /// `gap[a][b]` = 100·(cost_B(x*_A) − z*_B)/z*_B with policies in
    /// [`Policy::ALL`] order.
    pub gap: [[T; 4]; 4],
    /// Whether each column's reference value z*_B is a proven optimum.
    pub proven: [bool; 4],
}

/// Evaluates each policy's first-stage solution under every other policy's
/// recourse. The scenario set (call orders included) is shared, so the
/// comparison runs on identical uncertainty.
pub fn cross_gap<T: Scalar>(
    inst: &Instance<T>,
    scen: &ScenarioSet<T>,
    solutions: &[FirstStageSolution; 4],
    optima: &[T; 4],
    proven: &[bool; 4],
) -> Result<GapMatrix<T>> {
    let hundred = T::from_f64_lossy(100.0);
    let mut gap = [[T::zero(); 4]; 4];
    for (a, sol) in solutions.iter().enumerate() {
        for (b, &policy_b) in Policy::ALL.iter().enumerate() {
            let cost = expected_total(inst, scen, sol, policy_b)?;
            gap[a][b] = hundred * (cost - optima[b]) / optima[b];
        }
    }
    Ok(GapMatrix {
        gap,
        proven: *proven,
    })
}

/// Normalized cost shares of one evaluation.
#[derive(Debug, Clone, Copy)]
pub struct CostStructure<T> {
    /// opening / service / penalty / reassign shares, summing to one.
    pub shares: [T; 4],
    /// Set when the expected cost is zero and no shares exist.
    pub zero_total: bool,
}

pub fn cost_breakdown<T: Scalar>(eval: &PolicyEvaluation<T>) -> CostStructure<T> {
    let b = eval.breakdown;
    let total = b.total();
    if total == T::zero() {
        return CostStructure {
            shares: [T::zero(); 4],
            zero_total: true,
        };
    }
    CostStructure {
        shares: [
            b.opening / total,
            b.service / total,
            b.penalty / total,
            b.reassign / total,
        ],
        zero_total: false,
    }
}

/// Mean open-facility count per policy over a batch of solutions.
pub fn open_facility_stats(batch: &[[FirstStageSolution; 4]]) -> Result<[f64; 4]> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut means = [0.0f64; 4];
    for solutions in batch {
        for (k, sol) in solutions.iter().enumerate() {
            means[k] += sol.open_count() as f64;
        }
    }
    for mean in &mut means {
        *mean /= batch.len() as f64;
    }
    Ok(means)
}

/// Floats in CSV artifacts carry 9 significant digits.
pub fn fmt_sig9(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{x:.8e}")
    }
}

/// Table-shaped CSV for one gap matrix: policy rows and columns, plus a
/// trailing row marking which column optima were proven.
pub fn gap_matrix_csv<T: Scalar>(matrix: &GapMatrix<T>) -> String {
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
            out.push_str(&fmt_sig9(matrix.gap[a][b].to_f64().expect("finite")));
        }
        out.push('\n');
    }
    out.push_str("proven_optimum");
    for b in 0..4 {
        out.push(',');
        out.push_str(if matrix.proven[b] { "1" } else { "0" });
    }
    out.push('\n');
    out
}

/// Entry-wise mean of a batch of gap matrices.
pub fn mean_gap_matrix<T: Scalar>(matrices: &[GapMatrix<T>]) -> Option<[[f64; 4]; 4]> {
    if matrices.is_empty() {
        return None;
    }
    let mut mean = [[0.0f64; 4]; 4];
    for matrix in matrices {
        for a in 0..4 {
            for b in 0..4 {
                mean[a][b] += matrix.gap[a][b].to_f64().expect("finite");
            }
        }
    }
    for row in &mut mean {
        for cell in row {
            *cell /= matrices.len() as f64;
        }
    }
    Some(mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recourse::{self, test_util::instance};
    use crate::scenario::sample_independent;
    use crate::solve::{brute_force, BruteForceGuard, SolveStatus};

    fn tiny_setup() -> (Instance<f64>, ScenarioSet<f64>) {
        let mut inst = instance(
            2,
            4,
            vec![1.0, 2.5, 4.0, 2.0, 3.5, 1.5, 2.0, 4.5],
            vec![1, 1],
            vec![4.0, 5.0],
            7.0,
            vec![0.8, 0.6, 0.9, 0.7],
        );
        inst.open_cost = vec![3.0, 4.0];
        for p in inst.demand_prob.iter_mut() {
            *p = 0.6;
        }
        let scen = sample_independent(&inst, 6, 11).unwrap();
        (inst, scen)
    }

    #[test]
    fn diagonal_is_zero_under_proven_optima() {
        let (inst, scen) = tiny_setup();
        let guard = BruteForceGuard::default();
        let mut solutions = Vec::new();
        let mut optima = [0.0; 4];
        let mut proven = [false; 4];
        for (k, policy) in Policy::ALL.iter().enumerate() {
            let result = brute_force(&inst, &scen, *policy, &guard).unwrap();
            assert_eq!(result.status, SolveStatus::Optimal);
            optima[k] = result.z_upper.unwrap();
            proven[k] = true;
            solutions.push(result.best.unwrap().solution);
        }
        let solutions: [FirstStageSolution; 4] = solutions.try_into().unwrap();
        let matrix = cross_gap(&inst, &scen, &solutions, &optima, &proven).unwrap();
        for k in 0..4 {
            assert!(
                matrix.gap[k][k].abs() < 1e-9,
                "diagonal {k} = {}",
                matrix.gap[k][k]
            );
        }
        // proven optima: nothing can beat the column optimum
        for a in 0..4 {
            for b in 0..4 {
                assert!(matrix.gap[a][b] >= -1e-9);
            }
        }
    }

    #[test]
    fn cost_shares_recompose_and_fo_has_no_reassign_share() {
        let (inst, scen) = tiny_setup();
        let sol = FirstStageSolution::from_site_of(2, vec![true, true], &[0, 1, 0, 1]);
        for policy in Policy::ALL {
            let eval = recourse::evaluate(&inst, &scen, &sol, policy).unwrap();
            let cs = cost_breakdown(&eval);
            assert!(!cs.zero_total);
            let total: f64 = cs.shares.iter().sum();
            assert!((total - 1.0).abs() < 1e-9, "{policy}");
            for share in cs.shares {
                assert!((0.0..=1.0 + 1e-12).contains(&share));
            }
            if policy != Policy::Ro {
                assert_eq!(cs.shares[3], 0.0, "{policy} must not reassign");
            }
            // shares scale back to the components
            let b = eval.breakdown;
            assert!((cs.shares[0] * b.total() - b.opening).abs() < 1e-9);
        }
    }

    #[test]
    fn opening_only_solution_has_unit_opening_share() {
        let (inst, _) = tiny_setup();
        let scen = crate::recourse::test_util::single_scenario(vec![false; 4], vec![]);
        let sol = FirstStageSolution::from_site_of(2, vec![true, false], &[0, 0, 0, 0]);
        let eval = recourse::evaluate(&inst, &scen, &sol, Policy::Fo).unwrap();
        let cs = cost_breakdown(&eval);
        assert_eq!(cs.shares[0], 1.0);
    }

    #[test]
    fn zero_total_cost_is_flagged() {
        let mut inst = instance(1, 1, vec![1.0], vec![1], vec![1.0], 1.0, vec![0.0]);
        inst.open_cost = vec![0.0];
        let scen = crate::recourse::test_util::single_scenario(vec![false], vec![]);
        let sol = FirstStageSolution::from_site_of(1, vec![true], &[0]);
        let eval = recourse::evaluate(&inst, &scen, &sol, Policy::Fo).unwrap();
        let cs = cost_breakdown(&eval);
        assert!(cs.zero_total);
        assert_eq!(cs.shares, [0.0; 4]);
    }

    #[test]
    fn open_facility_means() {
        let sol = |bits: [bool; 3]| {
            FirstStageSolution::from_site_of(
                3,
                bits.to_vec(),
                &[bits.iter().position(|&b| b).unwrap(); 2],
            )
        };
        let one = sol([true, false, true]);
        assert_eq!(one.open_count(), 2);
        let batch = vec![[one.clone(), one.clone(), one.clone(), one.clone()]];
        let means = open_facility_stats(&batch).unwrap();
        assert_eq!(means, [2.0; 4]);
        assert!(open_facility_stats(&[]).is_err());
    }

    #[test]
    fn gap_csv_shape() {
        let matrix = GapMatrix {
            gap: [[0.0f64; 4]; 4],
            proven: [true, true, false, true],
        };
        let csv = gap_matrix_csv(&matrix);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0], "solution_policy,FO,CD-CO,OD-CO,RO");
        assert!(lines[5].starts_with("proven_optimum,1,1,0,1"));
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_sig9(105.0), "1.05000000e2");
        assert_eq!(fmt_sig9(-0.125), "-1.25000000e-1");
    }
}
