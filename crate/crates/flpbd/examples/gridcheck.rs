use flpbd::experiment::*;
use flpbd::genbench::*;
use flpbd::recourse::Policy;
use flpbd::scenario::*;
use flpbd::solve::*;

fn means_for(rho: f64, m_target: usize) -> [f64; 4] {
    let mut sums = [0.0f64; 4];
    let mut count = 0;
    for &sites in &[3usize, 4] {
        for &customers in &[6usize, 8] {
            for &n_scen in &[8usize] {
                for &corr in &[false, true] {
                    for &gamma in &[1u32, 4] {
                        for &pattern in &[DemandPattern::Pt1, DemandPattern::Pt2] {
                            let mut cfg = GeneratorConfig::new(
                                synthetic_coords(sites + customers + 6, 1000 + count),
                                sites, customers, pattern, gamma,
                                SetupVariability::MuOver10, EllMode::Positive, 77 + count);
                            cfg.penalty_ratio = rho;
                            cfg.target_open = m_target;
                            let inst: flpbd::Instance<f64> = generate_instance(&cfg).unwrap();
                            let scen = if corr { sample_correlated(&inst, n_scen, 5 + count) }
                                       else { sample_independent(&inst, n_scen, 5 + count) }.unwrap();
                            for (k, &p) in Policy::ALL.iter().enumerate() {
                                let r = branch_and_bound(&inst, &scen, p, &Limits::default()).unwrap();
                                sums[k] += r.best.unwrap().solution.open_count() as f64;
                            }
                            count += 1;
                        }
                    }
                }
            }
        }
    }
    sums.map(|s| s / count as f64)
}

fn main() {
    for &(rho, m) in &[(1.5f64, 5usize), (0.8, 5), (2.5, 5), (1.5, 3), (0.8, 3), (2.5, 3), (1.2, 8), (0.6, 5)] {
        let means = means_for(rho, m);
        println!("rho={rho} m={m}: FO={:.3} CD={:.3} OD={:.3} RO={:.3}", means[0], means[1], means[2], means[3]);
    }
}
