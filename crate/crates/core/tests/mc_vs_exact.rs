//! Simulation against the exact law, across regimes.

use trendlab_core::exact::{exact_covariance, exact_distributions, mean_variance_path};
use trendlab_core::rng::SeedSpec;
use trendlab_core::sim::{monte_carlo, streaming_monte_carlo, DEFAULT_MEMORY_CAP};
use trendlab_core::ModelParams;

fn sets() -> [ModelParams; 4] {
    [
        ModelParams::new(0.3, 0.2, 0.6, 0.1, 1, 1).unwrap(),
        ModelParams::new(0.25, 0.5, 1.0, 0.0, 1, 1).unwrap(),
        ModelParams::new(0.2, 0.6, 1.0, 0.0, 1, 0).unwrap(),
        ModelParams::new(0.5, 0.3, 0.2, 0.6, 1, 1).unwrap(),
    ]
}

#[test]
fn snapshot_means_and_variances() {
    let grid = [10, 60, 250];
    let reps = 40_000;
    for (i, params) in sets().iter().enumerate() {
        let ens = monte_carlo(params, 250, &grid, reps, SeedSpec::new(100 + i as u64), DEFAULT_MEMORY_CAP).unwrap();
        let path = mean_variance_path(params, 250);
        for (s, &n) in grid.iter().enumerate() {
            let xs: Vec<f64> = ens.column(s).iter().map(|&x| x as f64).collect();
            let r = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / r;
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (r - 1.0);
            let (m, v) = path[n as usize];
            assert!((mean - m).abs() < 5.0 * (v / r).sqrt(), "set {i} n {n}: mean {mean} vs {m}");
            // variance of the sample variance is about 2 v^2 / r for moderate tails
            assert!((var - v).abs() < 6.0 * v * (2.0 / r).sqrt(), "set {i} n {n}: var {var} vs {v}");
        }
    }
}

#[test]
fn snapshot_laws_match_dp() {
    let grid = [5, 30, 120];
    let reps = 200_000;
    for (i, params) in sets().iter().enumerate() {
        let ens = monte_carlo(params, 120, &grid, reps, SeedSpec::new(7 + i as u64), DEFAULT_MEMORY_CAP).unwrap();
        let dists = exact_distributions(params, &grid).unwrap();
        for (s, d) in dists.iter().enumerate() {
            let mut counts = vec![0u64; (d.n + 1) as usize];
            for &x in ens.column(s) {
                counts[(x - params.n0()) as usize] += 1;
            }
            let tv: f64 =
                d.iter().map(|(k, p)| (counts[(k - params.n0()) as usize] as f64 / reps as f64 - p).abs()).sum::<f64>()
                    * 0.5;
            let support = (d.n + 1) as f64;
            // E TV is about sqrt(support / (2 pi reps)) at most
            assert!(tv < 3.0 * (support / reps as f64).sqrt(), "set {i} n {}: tv {tv}", d.n);
        }
    }
}

#[test]
fn streaming_covariances_match_recursion() {
    let params = sets()[0];
    let grid = [100, 400];
    let reps = 30_000;
    let summary = streaming_monte_carlo(&params, 400, &grid, &[(0, 1)], reps, SeedSpec::new(3)).unwrap();
    let want = exact_covariance(&params, 100, 400).unwrap();
    let got = summary.comoments[0].covariance();
    let (_, v100) = mean_variance_path(&params, 100)[100];
    let (_, v400) = mean_variance_path(&params, 400)[400];
    let se = (v100 * v400 / reps as f64).sqrt() * 1.5;
    assert!((got - want).abs() < 4.0 * se, "{got} vs {want}");
    assert_eq!(summary.count(), reps);
}
