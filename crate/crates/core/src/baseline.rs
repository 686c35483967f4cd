//! Classical simulated annealing on the Ising form of a problem.
//!
//! Metropolis single-spin-flip updates with a geometric temperature ladder,
//! one temperature per sweep. Run-time is counted as `sweeps × N` spin-update
//! attempts per restart.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::IsingProblem;
use crate::seed::{derive_seed, rng_from_seed};

/// Energies at or below this count as reaching the satisfying level.
const SUCCESS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaParams {
    pub sweeps: usize,
    pub t_initial: f64,
    pub t_final: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SaParams {
    fn default() -> Self {
        SaParams {
            sweeps: 1000,
            t_initial: 8.0,
            t_final: 0.05,
            restarts: 100,
            seed: 0,
        }
    }
}

impl SaParams {
    pub fn new(sweeps: usize, restarts: usize, seed: u64) -> Self {
        SaParams {
            sweeps,
            restarts,
            seed,
            ..SaParams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0 && self.t_initial > self.t_final && self.t_initial.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "temperatures must satisfy T_initial > T_final > 0, got {} and {}",
                self.t_initial, self.t_final
            )));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("restarts must be at least 1".into()));
        }
        Ok(())
    }

    /// Temperature of sweep `k`; the first sweep runs at `T_initial` and the
    /// last at `T_final`.
    pub fn temperature(&self, k: usize) -> f64 {
        if self.sweeps <= 1 {
            return self.t_final;
        }
        let frac = k as f64 / (self.sweeps - 1) as f64;
        self.t_initial * (self.t_final / self.t_initial).powf(frac)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaResult {
    pub best_spins: Vec<i8>,
    pub best_energy: f64,
    pub success: bool,
    /// Fraction of restarts whose final configuration has energy zero.
    pub success_fraction: f64,
    /// Spin-update attempts per restart.
    pub runtime: u64,
}

/// Per-restart outcome.
struct Restart {
    energy: f64,
    best_spins: Vec<i8>,
    best_energy: f64,
}

/// Neighbour lists `(j, J_ij)` for every spin.
fn adjacency(prob: &IsingProblem) -> Vec<Vec<(usize, f64)>> {
    let mut adj = vec![Vec::new(); prob.n_spins()];
    for c in prob.couplings() {
        adj[c.i].push((c.j, c.strength));
        adj[c.j].push((c.i, c.strength));
    }
    adj
}

pub(crate) fn random_spins(rng: &mut ChaCha8Rng, n: usize) -> Vec<i8> {
    (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect()
}

fn run_restart(
    prob: &IsingProblem,
    adj: &[Vec<(usize, f64)>],
    params: &SaParams,
    seed: u64,
) -> Restart {
    let n = prob.n_spins();
    let mut rng = rng_from_seed(seed);
    let mut spins = random_spins(&mut rng, n);
    // local[i] = h_i + Σ_j J_ij s_j, so flipping i changes E by 2 s_i local[i]
    let mut local: Vec<f64> = (0..n)
        .map(|i| {
            prob.fields()[i]
                + adj[i]
                    .iter()
                    .map(|&(j, w)| w * spins[j] as f64)
                    .sum::<f64>()
        })
        .collect();
    let mut energy = prob
        .classical_energy(&spins)
        .expect("spin vector has the problem size");
    let mut best_spins = spins.clone();
    let mut best_energy = energy;

    for k in 0..params.sweeps {
        let beta = 1.0 / params.temperature(k);
        for i in 0..n {
            let delta = 2.0 * spins[i] as f64 * local[i];
            if delta <= 0.0 || rng.gen::<f64>() < (-beta * delta).exp() {
                spins[i] = -spins[i];
                energy += delta;
                let s = 2.0 * spins[i] as f64;
                for &(j, w) in &adj[i] {
                    local[j] += w * s;
                }
                if energy < best_energy - SUCCESS_TOL {
                    best_energy = energy;
                    best_spins.clone_from(&spins);
                }
            }
        }
    }
    // energies accumulate in small integers; recompute to drop drift
    let energy = prob.classical_energy(&spins).expect("size checked");
    let best_energy = prob.classical_energy(&best_spins).expect("size checked");
    Restart {
        energy,
        best_spins,
        best_energy,
    }
}

/// Runs `restarts` independent anneals. Restart `r` draws from the stream
/// `derive_seed(seed, r)`, so results do not depend on the thread count.
pub fn simulated_anneal(prob: &IsingProblem, params: &SaParams) -> Result<SaResult> {
    params.validate()?;
    let adj = adjacency(prob);
    let runs: Vec<Restart> = (0..params.restarts)
        .into_par_iter()
        .map(|r| run_restart(prob, &adj, params, derive_seed(params.seed, r as u64)))
        .collect();

    let successes = runs.iter().filter(|r| r.energy <= SUCCESS_TOL).count();
    let mut best = &runs[0];
    for r in &runs[1..] {
        if r.best_energy < best.best_energy - SUCCESS_TOL {
            best = r;
        }
    }
    Ok(SaResult {
        best_spins: best.best_spins.clone(),
        best_energy: best.best_energy,
        success: best.best_energy <= SUCCESS_TOL,
        success_fraction: successes as f64 / params.restarts as f64,
        runtime: (params.sweeps * prob.n_spins()) as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{generate_hard_instance, parse_dimacs, GeneratorCriteria};
    use proptest::prelude::*;

    #[test]
    fn single_clause_always_succeeds() {
        let inst = parse_dimacs("p cnf 2 1\n1 -2 0\n").unwrap();
        let prob = IsingProblem::from_sat(&inst);
        let res = simulated_anneal(&prob, &SaParams::new(50, 40, 3)).unwrap();
        assert_eq!(res.success_fraction, 1.0);
        assert!(res.success);
        assert_eq!(res.runtime, 100);
    }

    #[test]
    fn zero_sweeps_returns_initial_configuration() {
        let inst = parse_dimacs("p cnf 5 3\n1 2 0\n-3 4 0\n5 -1 0\n").unwrap();
        let prob = IsingProblem::from_sat(&inst);
        let params = SaParams {
            sweeps: 0,
            t_final: 1e-12,
            restarts: 1,
            ..SaParams::new(0, 1, 11)
        };
        let res = simulated_anneal(&prob, &params).unwrap();
        let mut rng = rng_from_seed(derive_seed(11, 0));
        assert_eq!(res.best_spins, random_spins(&mut rng, 5));
        assert_eq!(res.runtime, 0);
    }

    #[test]
    fn short_schedules_sometimes_fail_on_hard_instances() {
        let inst = generate_hard_instance(&GeneratorCriteria::new(10, 5)).unwrap();
        let prob = IsingProblem::from_sat(&inst);
        let ground = inst.brute_force_solve().unwrap();
        assert_eq!(ground.len(), 1);
        let params = SaParams::new(3, 400, 9);
        let res = simulated_anneal(&prob, &params).unwrap();
        assert!(
            res.success_fraction > 0.0 && res.success_fraction < 1.0,
            "fraction {}",
            res.success_fraction
        );
        // the best configuration is the unique satisfying assignment
        assert!(res.success);
        let found: u64 = res
            .best_spins
            .iter()
            .enumerate()
            .map(|(i, &s)| if s > 0 { 1u64 << i } else { 0 })
            .sum();
        assert_eq!(found, ground[0]);
    }

    #[test]
    fn deterministic_per_seed() {
        let inst = generate_hard_instance(&GeneratorCriteria::new(8, 2)).unwrap();
        let prob = IsingProblem::from_sat(&inst);
        let a = simulated_anneal(&prob, &SaParams::new(5, 30, 4)).unwrap();
        let b = simulated_anneal(&prob, &SaParams::new(5, 30, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_temperatures() {
        let inst = parse_dimacs("p cnf 2 1\n1 2 0\n").unwrap();
        let prob = IsingProblem::from_sat(&inst);
        let mut p = SaParams::new(10, 1, 0);
        p.t_final = p.t_initial;
        assert!(simulated_anneal(&prob, &p).is_err());
        p.t_final = 0.0;
        assert!(simulated_anneal(&prob, &p).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn best_energy_matches_configuration(seed in any::<u64>(), sweeps in 0usize..20) {
            let inst = generate_hard_instance(&GeneratorCriteria::new(6, seed % 50)).unwrap();
            let prob = IsingProblem::from_sat(&inst);
            let res = simulated_anneal(&prob, &SaParams::new(sweeps, 4, seed)).unwrap();
            let e = prob.classical_energy(&res.best_spins).unwrap();
            prop_assert_eq!(e, res.best_energy);
            prop_assert!(e >= -1e-9);
        }
    }
}
