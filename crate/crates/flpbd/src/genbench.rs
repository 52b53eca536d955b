//! Benchmark instance generation.
//!
//! Instances are derived from a planar point set (a TSPLIB `EUC_2D` file or
//! synthetic uniform points): sites and customers are drawn without
//! replacement, service costs are rounded Euclidean distances, and demand
//! probabilities follow one of two low/medium/high mixes. The remaining
//! cost parameters are scale-derived so that opening, serving and
//! outsourcing stay comparable:
//!
//! * setup cost `f_i = max(1, N(μ, σ))` with `μ = mean(c)·|J|/|I|` and σ one
//!   of `{0, μ/10, μ/3}`;
//! * capacity `K_i = γ · max(1, round(Σ_j p_j / m))` with target open count
//!   `m` (default 5) and the capacity factor `γ ∈ {1, 2, 4}`;
//! * assignment lower bound `ℓ_i = floor(|J| / (2|I|))` or zero;
//! * outsourcing penalty `g_i = ρ · max_j c_ij` (default ρ = 1.5),
//!   reassignment penalty `h_j = 0.5 · min_i c_ij`, external cost
//!   `g = max_i g_i`.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::instance::Instance;
use crate::normal::standard_normal;
use crate::scalar::Scalar;
use crate::scenario::unit_uniform;
use crate::Result;

/// Demand-probability mix: percentage of low/medium/high-probability
/// customers. Low draws from U(0.10, 0.25), medium from U(0.40, 0.60) and
/// high from U(0.75, 0.90).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DemandPattern {
    /// 20% low, 60% medium, 20% high.
    Pt1,
    /// 20% low, 20% medium, 60% high.
    Pt2,
}

impl DemandPattern {
    fn low_high_fractions(self) -> (f64, f64) {
        match self {
            DemandPattern::Pt1 => (0.2, 0.2),
            DemandPattern::Pt2 => (0.2, 0.6),
        }
    }
}

impl std::str::FromStr for DemandPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pt1" | "1" => Ok(DemandPattern::Pt1),
            "pt2" | "2" => Ok(DemandPattern::Pt2),
            other => Err(Error::Parse(format!("unknown pattern {other:?}"))),
        }
    }
}

/// Standard deviation of the setup-cost draw, relative to its mean μ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetupVariability {
    Zero,
    MuOver10,
    MuOver3,
}

impl SetupVariability {
    fn sigma(self, mu: f64) -> f64 {
        match self {
            SetupVariability::Zero => 0.0,
            SetupVariability::MuOver10 => mu / 10.0,
            SetupVariability::MuOver3 => mu / 3.0,
        }
    }
}

impl std::str::FromStr for SetupVariability {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" | "0" => Ok(SetupVariability::Zero),
            "mu10" | "mu/10" | "muover10" => Ok(SetupVariability::MuOver10),
            "mu3" | "mu/3" | "muover3" => Ok(SetupVariability::MuOver3),
            other => Err(Error::Parse(format!("unknown setup variability {other:?}"))),
        }
    }
}

/// Whether open facilities carry a positive assignment lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EllMode {
    Zero,
    Positive,
}

impl std::str::FromStr for EllMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" | "0" => Ok(EllMode::Zero),
            "positive" | "pos" => Ok(EllMode::Positive),
            other => Err(Error::Parse(format!("unknown ell mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    /// Candidate points; sites and customers are drawn from these.
    pub coords: Vec<(f64, f64)>,
    pub n_sites: usize,
    pub n_customers: usize,
    pub pattern: DemandPattern,
    /// Capacity factor γ; the canonical values are 1, 2 and 4.
    pub gamma: u32,
    pub setup_variability: SetupVariability,
    pub ell_mode: EllMode,
    pub seed: u64,
    /// Target number of open facilities used to scale base capacities.
    pub target_open: usize,
    /// Outsourcing penalty g_i as a multiple of the largest serving cost.
    pub penalty_ratio: f64,
}

impl GeneratorConfig {
    pub fn new(
        coords: Vec<(f64, f64)>,
        n_sites: usize,
        n_customers: usize,
        pattern: DemandPattern,
        gamma: u32,
        setup_variability: SetupVariability,
        ell_mode: EllMode,
        seed: u64,
    ) -> Self {
        GeneratorConfig {
            coords,
            n_sites,
            n_customers,
            pattern,
            gamma,
            setup_variability,
            ell_mode,
            seed,
            target_open: 5,
            penalty_ratio: 1.5,
        }
    }
}

/// Number of customers in the low/medium/high probability classes:
/// low and high round to the nearest integer, the remainder is medium.
pub fn class_counts(pattern: DemandPattern, n: usize) -> (usize, usize, usize) {
    let (low_frac, high_frac) = pattern.low_high_fractions();
    let low = (low_frac * n as f64).round() as usize;
    let high = (high_frac * n as f64).round() as usize;
    assert!(low + high <= n, "rounded class counts exceed {n}");
    (low, n - low - high, high)
}

/// Generates a deterministic instance from the configuration.
pub fn generate_instance<T: Scalar>(cfg: &GeneratorConfig) -> Result<Instance<T>> {
    let m = cfg.n_sites;
    let n = cfg.n_customers;
    if m == 0 || n == 0 {
        return Err(Error::InvalidInstance(
            "need at least one site and one customer".to_string(),
        ));
    }
    if m + n > cfg.coords.len() {
        return Err(Error::InsufficientPoints {
            needed: m + n,
            available: cfg.coords.len(),
        });
    }
    if cfg.gamma == 0 {
        return Err(Error::InvalidInstance("gamma must be positive".to_string()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Draw site and customer points without replacement.
    let mut ids: Vec<usize> = (0..cfg.coords.len()).collect();
    for i in (1..ids.len()).rev() {
        let k = rng.gen_range(0..=i);
        ids.swap(i, k);
    }
    let sites = &ids[..m];
    let customers = &ids[m..m + n];

    // Distances rounded to 2 decimals keep the cost matrix stable across
    // platforms.
    let mut c = vec![0.0f64; m * n];
    for (a, &si) in sites.iter().enumerate() {
        for (b, &cj) in customers.iter().enumerate() {
            let (x1, y1) = cfg.coords[si];
            let (x2, y2) = cfg.coords[cj];
            let d = ((x1 - x2).powi(2) + (y1 - y2).powi(2)).sqrt();
            c[a * n + b] = (d * 100.0).round() / 100.0;
        }
    }

    // Demand probabilities: shuffle the class labels, then draw each p_j
    // uniformly from its class range.
    let (low, medium, high) = class_counts(cfg.pattern, n);
    let mut classes = Vec::with_capacity(n);
    classes.extend(std::iter::repeat(0u8).take(low));
    classes.extend(std::iter::repeat(1u8).take(medium));
    classes.extend(std::iter::repeat(2u8).take(high));
    for i in (1..classes.len()).rev() {
        let k = rng.gen_range(0..=i);
        classes.swap(i, k);
    }
    let p: Vec<f64> = classes
        .iter()
        .map(|&class| {
            let (lo, hi) = match class {
                0 => (0.10, 0.25),
                1 => (0.40, 0.60),
                _ => (0.75, 0.90),
            };
            lo + (hi - lo) * unit_uniform(&mut rng)
        })
        .collect();

    // Setup costs.
    let mean_c: f64 = c.iter().sum::<f64>() / (m * n) as f64;
    let mu = mean_c * n as f64 / m as f64;
    let sigma = cfg.setup_variability.sigma(mu);
    let f: Vec<f64> = (0..m)
        .map(|_| {
            let draw = if sigma == 0.0 {
                mu
            } else {
                mu + sigma * standard_normal(&mut rng)
            };
            draw.max(1.0)
        })
        .collect();

    // Capacities: base level sized so that ~target_open facilities cover the
    // expected demand, then scaled by γ so that γ=4 instances have exactly
    // four times the γ=1 capacity of the same seed.
    let sum_p: f64 = p.iter().sum();
    let target = cfg.target_open.max(1);
    let base_k = ((sum_p / target as f64).round() as usize).max(1);
    let capacity = vec![base_k * cfg.gamma as usize; m];

    let ell = match cfg.ell_mode {
        EllMode::Zero => 0,
        EllMode::Positive => n / (2 * m),
    };

    let g_i: Vec<f64> = (0..m)
        .map(|i| {
            let worst = (0..n).map(|j| c[i * n + j]).fold(0.0f64, f64::max);
            cfg.penalty_ratio * worst
        })
        .collect();
    let h: Vec<f64> = (0..n)
        .map(|j| {
            let best = (0..m).map(|i| c[i * n + j]).fold(f64::INFINITY, f64::min);
            0.5 * best
        })
        .collect();
    let g_ext = g_i.iter().fold(0.0f64, |acc, &g| acc.max(g));

    let conv = |xs: Vec<f64>| xs.into_iter().map(T::from_f64_lossy).collect();
    let inst = Instance {
        n_sites: m,
        n_customers: n,
        open_cost: conv(f),
        min_assigned: vec![ell; m],
        capacity,
        serve_cost: conv(c),
        outsource_penalty: conv(g_i),
        external_cost: T::from_f64_lossy(g_ext),
        reassign_penalty: conv(h),
        demand_prob: conv(p),
        site_labels: None,
        customer_labels: None,
    };
    debug_assert!(inst.validate().is_ok());
    Ok(inst)
}

/// Synthetic uniform points on [0, 100]² for when no TSPLIB file is at hand.
pub fn synthetic_coords(count: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (
                100.0 * unit_uniform(&mut rng),
                100.0 * unit_uniform(&mut rng),
            )
        })
        .collect()
}

/// Parses the `NODE_COORD_SECTION` of a TSPLIB file with `EUC_2D` edge
/// weights into a coordinate list.
pub fn load_coords(path: impl AsRef<Path>) -> Result<Vec<(f64, f64)>> {
    parse_tsplib(&fs::read_to_string(path)?)
}

/// TSPLIB parsing on an in-memory string.
pub fn parse_tsplib(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut dimension: Option<usize> = None;
    let mut edge_weight_type: Option<String> = None;
    let mut coords: Vec<(f64, f64)> = Vec::new();
    let mut in_coords = false;

    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if in_coords {
            if line.eq_ignore_ascii_case("EOF") {
                break;
            }
            let mut parts = line.split_whitespace();
            let _id = parts
                .next()
                .ok_or_else(|| Error::Parse("empty coordinate line".to_string()))?;
            let x: f64 = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad coordinate line: {line:?}")))?;
            let y: f64 = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad coordinate line: {line:?}")))?;
            coords.push((x, y));
            continue;
        }
        if line.eq_ignore_ascii_case("NODE_COORD_SECTION") {
            in_coords = true;
            continue;
        }
        if let Some((key, value)) = line.split_once(':') {
            match key.trim().to_ascii_uppercase().as_str() {
                "DIMENSION" => {
                    dimension = Some(value.trim().parse().map_err(|_| {
                        Error::Parse(format!("bad DIMENSION value: {}", value.trim()))
                    })?);
                }
                "EDGE_WEIGHT_TYPE" => edge_weight_type = Some(value.trim().to_string()),
                _ => {}
            }
        }
    }

    if !in_coords {
        return Err(Error::Parse(
            "file has no NODE_COORD_SECTION".to_string(),
        ));
    }
    match edge_weight_type.as_deref() {
        Some("EUC_2D") | None => {}
        Some(other) => {
            return Err(Error::Parse(format!(
                "unsupported EDGE_WEIGHT_TYPE {other:?}, only EUC_2D is handled"
            )));
        }
    }
    if let Some(dim) = dimension {
        if coords.len() != dim {
            return Err(Error::Parse(format!(
                "DIMENSION is {dim} but {} coordinates were read",
                coords.len()
            )));
        }
    }
    Ok(coords)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_cfg(n_sites: usize, n_customers: usize, seed: u64) -> GeneratorConfig {
        GeneratorConfig::new(
            synthetic_coords(n_sites + n_customers + 10, 999),
            n_sites,
            n_customers,
            DemandPattern::Pt1,
            1,
            SetupVariability::MuOver10,
            EllMode::Positive,
            seed,
        )
    }

    #[test]
    fn pattern_one_class_counts_for_thirty_customers() {
        assert_eq!(class_counts(DemandPattern::Pt1, 30), (6, 18, 6));
        let cfg = base_cfg(5, 30, 7);
        let inst: Instance<f64> = generate_instance(&cfg).unwrap();
        let low = inst
            .demand_prob
            .iter()
            .filter(|&&p| (0.10..=0.25).contains(&p))
            .count();
        let medium = inst
            .demand_prob
            .iter()
            .filter(|&&p| (0.40..=0.60).contains(&p))
            .count();
        let high = inst
            .demand_prob
            .iter()
            .filter(|&&p| (0.75..=0.90).contains(&p))
            .count();
        assert_eq!((low, medium, high), (6, 18, 6));
    }

    #[test]
    fn pattern_two_class_counts_for_thirty_customers() {
        assert_eq!(class_counts(DemandPattern::Pt2, 30), (6, 6, 18));
        let mut cfg = base_cfg(5, 30, 7);
        cfg.pattern = DemandPattern::Pt2;
        let inst: Instance<f64> = generate_instance(&cfg).unwrap();
        let high = inst
            .demand_prob
            .iter()
            .filter(|&&p| (0.75..=0.90).contains(&p))
            .count();
        assert_eq!(high, 18);
    }

    #[test]
    fn gamma_scales_capacity_exactly() {
        let cfg1 = base_cfg(4, 12, 3);
        let mut cfg4 = cfg1.clone();
        cfg4.gamma = 4;
        let i1: Instance<f64> = generate_instance(&cfg1).unwrap();
        let i4: Instance<f64> = generate_instance(&cfg4).unwrap();
        for i in 0..4 {
            assert_eq!(i4.capacity[i], 4 * i1.capacity[i]);
        }
        // everything else is untouched by γ
        assert_eq!(i1.serve_cost, i4.serve_cost);
        assert_eq!(i1.demand_prob, i4.demand_prob);
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = base_cfg(3, 9, 42);
        let a: Instance<f64> = generate_instance(&cfg).unwrap();
        let b: Instance<f64> = generate_instance(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generated_instances_validate() {
        for seed in 0..25 {
            for &(m, n) in &[(2usize, 4usize), (3, 7), (5, 12)] {
                let mut cfg = base_cfg(m, n, seed);
                cfg.pattern = if seed % 2 == 0 {
                    DemandPattern::Pt1
                } else {
                    DemandPattern::Pt2
                };
                cfg.gamma = [1, 2, 4][(seed % 3) as usize];
                let inst: Instance<f64> = generate_instance(&cfg).unwrap();
                let report = inst.validate();
                assert!(report.is_ok(), "seed {seed}: {:?}", report.violations);
            }
        }
    }

    #[test]
    fn insufficient_points_is_an_error() {
        let mut cfg = base_cfg(3, 9, 42);
        cfg.coords.truncate(5);
        assert!(matches!(
            generate_instance::<f64>(&cfg),
            Err(Error::InsufficientPoints { .. })
        ));
    }

    #[test]
    fn tsplib_pythagorean_distances() {
        let text = "NAME: tri\nTYPE: TSP\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 3 4\n3 0 8\nEOF\n";
        let pts = parse_tsplib(text).unwrap();
        assert_eq!(pts.len(), 3);
        let d = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
        assert_eq!(d(pts[0], pts[1]), 5.0);
        assert_eq!(d(pts[1], pts[2]), 5.0);
        assert_eq!(d(pts[0], pts[2]), 8.0);
    }

    #[test]
    fn tsplib_missing_section_is_an_error() {
        let text = "NAME: broken\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: EUC_2D\n1 0 0\n";
        assert!(parse_tsplib(text).is_err());
    }

    #[test]
    fn tsplib_rejects_non_euclidean() {
        let text =
            "DIMENSION: 1\nEDGE_WEIGHT_TYPE: GEO\nNODE_COORD_SECTION\n1 0 0\nEOF\n";
        assert!(parse_tsplib(text).is_err());
    }

    #[test]
    fn fifty_two_node_header_parses_fifty_two_points() {
        // Same header fields as the classic 52-node Berlin benchmark file.
        let mut text = String::from(
            "NAME: berlin52\nTYPE: TSP\nCOMMENT: 52 locations\nDIMENSION: 52\nEDGE_WEIGHT_TYPE: EUC_2D\nNODE_COORD_SECTION\n",
        );
        for i in 0..52 {
            text.push_str(&format!("{} {}.0 {}.0\n", i + 1, 10 * i, 7 * i));
        }
        text.push_str("EOF\n");
        assert_eq!(parse_tsplib(&text).unwrap().len(), 52);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let text = "DIMENSION: 4\nEDGE_WEIGHT_TYPE: EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 1 1\nEOF\n";
        assert!(parse_tsplib(text).is_err());
    }
}
