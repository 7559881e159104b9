//! Fixed-temperature validation of the annealing chain.
//!
//! Two routes to the same stationary law: the exact transition matrix built
//! from the proposal and acceptance rules and power-iterated to its fixed
//! point, and the empirical occupancy of a long run of the real
//! [`propose`]/[`AnnealerState::step`] loop. Both are compared to the Gibbs
//! vector `exp(-Y/τ)/Z`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::annealing::{
    acceptance_probability, apply_move, gibbs_distribution, move_set, propose, AcceptanceRule, AnnealerState,
};
use crate::catalog::{Configuration, SearchSpace};
use crate::error::{Error, Result};
use crate::experiment::{BlendMode, Experiment};
use crate::simulator::objective_landscape;

/// Largest space the check accepts.
pub const MAX_ORACLE_STATES: usize = 1000;

/// Row-sparse stochastic matrix: `rows[i]` lists `(j, P[i][j])` with `P[i][j] > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl TransitionMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `p · P`
    pub fn left_multiply(&self, p: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (i, row) in self.rows.iter().enumerate() {
            let pi = p[i];
            for &(j, w) in row {
                out[j] += pi * w;
            }
        }
    }
}

/// Exact one-step transition matrix of the heat-bath chain at temperature `tau`
/// over `space`, with objective `values[i]` at `space.config_at(i)`.
pub fn transition_matrix(space: &SearchSpace, values: &[f64], tau: f64) -> Result<TransitionMatrix> {
    if values.len() != space.len() {
        return Err(Error::domain(
            "objective_values",
            format!("{} values for a space of {}", values.len(), space.len()),
        ));
    }
    let moves = move_set(space);
    let share = 1.0 / moves.len() as f64;
    let mut rows = Vec::with_capacity(space.len());
    for (i, x) in space.iter().enumerate() {
        let mut stay = 0.0;
        let mut row = Vec::with_capacity(moves.len() + 1);
        for &mv in moves {
            match apply_move(x, mv, space) {
                None => stay += share,
                Some(y) => {
                    let j = space.index_of(y).expect("neighbor within space");
                    let a = acceptance_probability(values[j] - values[i], tau)?;
                    row.push((j, share * a));
                    stay += share * (1.0 - a);
                }
            }
        }
        if stay > 0.0 {
            row.push((i, stay));
        }
        rows.push(row);
    }
    Ok(TransitionMatrix { rows })
}

/// Spaces up to this size are solved by repeated squaring of the dense matrix.
const DENSE_LIMIT: usize = 128;

/// Stationary vector by power iteration. Small chains square the dense matrix
/// (`P, P², P⁴, …`) until every row agrees to rounding, which converges even when
/// the spectral gap is tiny; larger chains iterate `p ← pP` from the uniform
/// vector until the L1 change per sweep drops below `tol` or `max_iter` sweeps
/// have run. Returns the vector and the number of multiplications.
pub fn stationary_vector(m: &TransitionMatrix, tol: f64, max_iter: usize) -> (Vec<f64>, usize) {
    let n = m.len();
    if n <= DENSE_LIMIT {
        return stationary_by_squaring(m);
    }
    let mut p = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for it in 1..=max_iter {
        m.left_multiply(&p, &mut next);
        let z: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= z);
        let change: f64 = p.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut p, &mut next);
        if change < tol {
            return (p, it);
        }
    }
    (p, max_iter)
}

fn stationary_by_squaring(m: &TransitionMatrix) -> (Vec<f64>, usize) {
    let n = m.len();
    let mut q = vec![0.0; n * n];
    for (i, row) in m.rows.iter().enumerate() {
        for &(j, w) in row {
            q[i * n + j] += w;
        }
    }
    let mut tmp = vec![0.0; n * n];
    let mut squarings = 0;
    let mut last_spread = f64::INFINITY;
    loop {
        let spread = (0..n)
            .map(|j| {
                let col = (0..n).map(|i| q[i * n + j]);
                let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
                hi - lo
            })
            .fold(0.0, f64::max);
        // Once rows agree to rounding, further squarings only shuffle ulps.
        if spread < 4.0 * f64::EPSILON || (spread >= last_spread && spread < 1e-12) || squarings == 200 {
            break;
        }
        last_spread = spread;
        tmp.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..n {
            for k in 0..n {
                let a = q[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    tmp[i * n + j] += a * q[k * n + j];
                }
            }
            // Row sums drift by an ulp per product; left alone the drift compounds.
            let z: f64 = tmp[i * n..(i + 1) * n].iter().sum();
            tmp[i * n..(i + 1) * n].iter_mut().for_each(|x| *x /= z);
        }
        std::mem::swap(&mut q, &mut tmp);
        squarings += 1;
    }
    let mut p: Vec<f64> = (0..n).map(|j| (0..n).map(|i| q[i * n + j]).sum::<f64>() / n as f64).collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= z);
    (p, squarings)
}

/// Total-variation distance `½ Σ |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[derive(Debug, Clone, Serialize)]
pub struct StationarityReport {
    pub tau: f64,
    pub steps: u64,
    pub seed: u64,
    pub states: Vec<Configuration>,
    pub objective: Vec<f64>,
    pub gibbs: Vec<f64>,
    pub matrix_stationary: Vec<f64>,
    pub empirical: Vec<f64>,
    pub power_iterations: usize,
    pub tv_matrix_vs_gibbs: f64,
    pub tv_empirical_vs_gibbs: f64,
}

/// Compares the fixed-temperature chain on the experiment's initial workload
/// against its Gibbs distribution. Requires a deterministic objective.
pub fn stationarity_check(exp: &Experiment, tau: f64, steps: u64, seed: u64) -> Result<StationarityReport> {
    if !exp.workload.noise().is_noiseless() {
        return Err(Error::Refused(format!(
            "noise = {:?}: the stationarity check needs a noiseless workload",
            exp.workload.noise()
        )));
    }
    if exp.blend_mode == BlendMode::Sample && exp.workload.initial().components().len() > 1 {
        return Err(Error::Refused(
            "mode.blend = sample draws a job type per job, so the objective is random; use expected mode".into(),
        ));
    }
    if exp.space.len() > MAX_ORACLE_STATES {
        return Err(Error::Refused(format!(
            "space has {} states; the check is limited to {MAX_ORACLE_STATES}",
            exp.space.len()
        )));
    }
    if steps == 0 {
        return Err(Error::domain("steps", "must be >= 1"));
    }
    exp.validate()?;

    let space = &exp.space;
    let values = objective_landscape(exp, 0)?;
    let gibbs = gibbs_distribution(&values, tau)?;
    let matrix = transition_matrix(space, &values, tau)?;
    let (matrix_stationary, power_iterations) = stationary_vector(&matrix, 1e-15, 5_000_000);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = rng.random_range(0..space.len() as u64) as usize;
    let mut state = AnnealerState::new(space.config_at(start).expect("index within space"), values[start], tau)?;
    let mut counts = vec![0u64; space.len()];
    for _ in 0..steps {
        let proposal = propose(&state, space, &mut rng);
        let j = space.index_of(proposal.candidate).expect("proposal within space");
        state.step(&proposal, values[j], AcceptanceRule::HeatBath, &mut rng)?;
        counts[space.index_of(state.accepted_config).expect("state within space")] += 1;
    }
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / steps as f64).collect();

    Ok(StationarityReport {
        tau,
        steps,
        seed,
        states: space.iter().collect(),
        tv_matrix_vs_gibbs: total_variation(&matrix_stationary, &gibbs),
        tv_empirical_vs_gibbs: total_variation(&empirical, &gibbs),
        objective: values,
        gibbs,
        matrix_stationary,
        empirical,
        power_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_search_space, Catalog, FamilySpec};

    fn space(families: usize, lo: u32, hi: u32) -> SearchSpace {
        let cat = Catalog::new(
            (0..families)
                .map(|i| FamilySpec {
                    name: format!("f{i}"),
                    price_per_core_hour: 0.05,
                    memory_per_core: 4.0,
                })
                .collect(),
            0,
        )
        .unwrap();
        build_search_space(&cat, lo, hi).unwrap()
    }

    #[test]
    fn rows_are_stochastic() {
        let s = space(3, 1, 5);
        let values: Vec<f64> = (0..s.len()).map(|i| ((i * 7) % 11) as f64).collect();
        let m = transition_matrix(&s, &values, 2.0).unwrap();
        for row in &m.rows {
            let sum: f64 = row.iter().map(|(_, w)| w).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn detailed_balance_holds_for_gibbs() {
        let s = space(2, 1, 6);
        let values: Vec<f64> = (0..s.len()).map(|i| ((i * 5) % 7) as f64 * 1.3).collect();
        let tau = 1.7;
        let m = transition_matrix(&s, &values, tau).unwrap();
        let g = gibbs_distribution(&values, tau).unwrap();
        let dense = |i: usize, j: usize| m.rows[i].iter().find(|(k, _)| *k == j).map_or(0.0, |(_, w)| *w);
        for i in 0..s.len() {
            for j in 0..s.len() {
                assert!((g[i] * dense(i, j) - g[j] * dense(j, i)).abs() < 1e-15);
            }
        }
        let (pi, _) = stationary_vector(&m, 1e-15, 1_000_000);
        assert!(total_variation(&pi, &g) < 1e-9);
    }

    #[test]
    fn tv_distance_basics() {
        assert_eq!(total_variation(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        assert_eq!(total_variation(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
    }
}
