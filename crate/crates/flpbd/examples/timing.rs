use flpbd::genbench::*;
use flpbd::recourse::Policy;
use flpbd::scenario::*;
use flpbd::solve::*;
use std::time::Instant;

fn main() {
    // full-guard corner
    let cfg = GeneratorConfig::new(synthetic_coords(18, 5), 4, 8, DemandPattern::Pt1, 1,
        SetupVariability::MuOver10, EllMode::Positive, 3);
    let inst: flpbd::Instance<f64> = generate_instance(&cfg).unwrap();
    let scen = sample_independent(&inst, 16, 9).unwrap();
    for policy in Policy::ALL {
        let t = Instant::now();
        let b = brute_force(&inst, &scen, policy, &BruteForceGuard::default()).unwrap();
        let tb = t.elapsed();
        let t = Instant::now();
        let n = branch_and_bound(&inst, &scen, policy, &Limits::default()).unwrap();
        println!("{policy}: brute {:?} ({} evals) bnb {:?} ({} nodes) z={:.4}",
            tb, b.stats.nodes, t.elapsed(), n.stats.nodes, n.z_upper.unwrap());
        assert!((b.z_upper.unwrap() - n.z_upper.unwrap()).abs() < 1e-9 * b.z_upper.unwrap());
    }
    // gamma=4 variant (loose capacity)
    let mut cfg4 = cfg.clone();
    cfg4.gamma = 4;
    let inst4: flpbd::Instance<f64> = generate_instance(&cfg4).unwrap();
    let scen4 = sample_correlated(&inst4, 16, 9).unwrap();
    for policy in Policy::ALL {
        let t = Instant::now();
        let n = branch_and_bound(&inst4, &scen4, policy, &Limits::default()).unwrap();
        println!("g4 {policy}: bnb {:?} ({} nodes)", t.elapsed(), n.stats.nodes);
    }
}
