mod common;

use sa_procure::annealing::TemperatureSchedule;
use sa_procure::catalog::job_cost;
use sa_procure::oracle::{stationarity_check, total_variation};
use sa_procure::workload::{NoiseModel, WorkloadStream};
use sa_procure::Error;

use common::*;

/// Dense transition matrix written out from the chain's definition: pick one
/// of four lattice moves uniformly, stay put if it leaves the box, otherwise
/// move with probability min(1, exp(-ΔY/τ)).
fn dense_chain(families: usize, cores: (u32, u32), y: &[f64], tau: f64) -> Vec<Vec<f64>> {
    let width = (cores.1 - cores.0 + 1) as i64;
    let n = y.len();
    let moves: &[(i64, i64)] = if families == 1 {
        &[(0, -1), (0, 1)]
    } else {
        &[(0, -1), (0, 1), (-1, 0), (1, 0)]
    };
    let mut p = vec![vec![0.0; n]; n];
    for i in 0..n {
        let (f, c) = ((i as i64) / width, (i as i64) % width);
        for &(df, dc) in moves {
            let (g, d) = (f + df, c + dc);
            let share = 1.0 / moves.len() as f64;
            if g < 0 || g >= families as i64 || d < 0 || d >= width {
                p[i][i] += share;
                continue;
            }
            let j = (g * width + d) as usize;
            let a = (-(y[j] - y[i]).max(0.0) / tau).exp();
            p[i][j] += share * a;
            p[i][i] += share * (1.0 - a);
        }
    }
    p
}

/// Solves πP = π, Σπ = 1 by Gaussian elimination with partial pivoting.
fn solve_stationary(p: &[Vec<f64>]) -> Vec<f64> {
    let n = p.len();
    // Rows of (Pᵀ - I), with the last equation replaced by Σπ = 1.
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|r| {
            let mut row: Vec<f64> = (0..n).map(|c| p[c][r] - if r == c { 1.0 } else { 0.0 }).collect();
            row.push(0.0);
            row
        })
        .collect();
    a[n - 1] = vec![1.0; n + 1];
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, piv);
        let pivot = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col {
                let k = row[col] / pivot[col];
                for (x, p) in row[col..].iter_mut().zip(&pivot[col..]) {
                    *x -= k * p;
                }
            }
        }
    }
    (0..n).map(|i| a[i][n] / a[i][i]).collect()
}

#[test]
fn two_dimensional_chain_matches_gibbs_three_ways() {
    let (families, cores, tau) = (3, (1, 6), 20.0);
    let exp = experiment(
        families,
        cores,
        single(speedup(300.0, 0.1, families)),
        2000.0,
        TemperatureSchedule::fixed(tau).unwrap(),
        10,
    );
    let y: Vec<f64> = exp
        .space
        .iter()
        .map(|c| {
            let t = 300.0 * (1.0 + 0.1 * c.family as f64) * (0.1 + 0.9 / c.cores as f64);
            t + 2000.0 * job_cost(c, t, &exp.catalog).unwrap()
        })
        .collect();
    let z: f64 = y.iter().map(|v| (-v / tau).exp()).sum();
    let gibbs: Vec<f64> = y.iter().map(|v| (-v / tau).exp() / z).collect();
    let solved = solve_stationary(&dense_chain(families, cores, &y, tau));

    let report = stationarity_check(&exp, tau, 1_000_000, 4).unwrap();
    for (a, b) in report.objective.iter().zip(&y) {
        assert!((a - b).abs() <= 1e-9 * b.abs());
    }
    assert!(total_variation(&report.gibbs, &gibbs) < 1e-12);
    assert!(total_variation(&solved, &gibbs) < 1e-9);
    assert!(total_variation(&report.matrix_stationary, &solved) < 1e-9);
    assert!(report.tv_matrix_vs_gibbs < 1e-9);
    assert!(report.tv_empirical_vs_gibbs < 0.02, "{}", report.tv_empirical_vs_gibbs);
}

#[test]
fn noisy_workloads_are_refused_by_name() {
    let workload = single(speedup(300.0, 0.1, 1))
        .with_noise(NoiseModel::MultiplicativeLognormal { sigma: 0.2 })
        .unwrap();
    let exp = experiment(1, (1, 5), workload, 0.0, TemperatureSchedule::fixed(5.0).unwrap(), 10);
    let err = stationarity_check(&exp, 5.0, 100, 1).unwrap_err();
    assert!(matches!(err, Error::Refused(_)));
    assert!(err.to_string().contains("sigma: 0.2"), "{err}");
}

#[test]
fn oversized_spaces_are_refused() {
    let w: WorkloadStream = single(speedup(300.0, 0.1, 3));
    let exp = experiment(3, (1, 400), w, 0.0, TemperatureSchedule::fixed(5.0).unwrap(), 10);
    assert!(matches!(stationarity_check(&exp, 5.0, 100, 1), Err(Error::Refused(_))));
}
