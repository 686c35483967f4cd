//! Rejection sampling of hard 2-SAT instances.
//!
//! An instance is accepted when it has exactly one satisfying assignment
//! (certified by exhaustive search) and its first excited level is at least as
//! degenerate as requested. An optional clause-swap stage then greedily raises
//! the first-excited degeneracy while preserving uniqueness.

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Clause, Literal, SatInstance, BRUTE_FORCE_LIMIT};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClauseCount {
    Fixed(usize),
    /// Inclusive range, drawn uniformly per attempt.
    Range { min: usize, max: usize },
    /// `ratio * N` clauses, rounded.
    Ratio(f64),
}

impl ClauseCount {
    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> usize {
        match *self {
            ClauseCount::Fixed(m) => m,
            ClauseCount::Range { min, max } => rng.gen_range(min..=max),
            ClauseCount::Ratio(r) => (r * n as f64).round() as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorCriteria {
    pub n_vars: usize,
    pub clauses: ClauseCount,
    pub require_unique_solution: bool,
    pub min_first_excited_degeneracy: u64,
    pub max_attempts: usize,
    pub seed: u64,
    /// Draw only clauses satisfied by a hidden random assignment, so every
    /// candidate is satisfiable.
    pub planted: bool,
    /// Rounds of the greedy clause-swap stage (0 disables it).
    pub swap_rounds: usize,
}

impl Default for GeneratorCriteria {
    fn default() -> Self {
        GeneratorCriteria {
            n_vars: 8,
            clauses: ClauseCount::Ratio(2.0),
            require_unique_solution: true,
            min_first_excited_degeneracy: 1,
            max_attempts: 100_000,
            seed: 0,
            planted: false,
            swap_rounds: 0,
        }
    }
}

impl GeneratorCriteria {
    pub fn new(n_vars: usize, seed: u64) -> Self {
        GeneratorCriteria {
            n_vars,
            seed,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_vars < 2 {
            return Err(Error::InvalidParameter(
                "a 2-SAT instance needs at least 2 variables".into(),
            ));
        }
        if self.n_vars > BRUTE_FORCE_LIMIT {
            return Err(Error::TooLarge {
                n: self.n_vars,
                limit: BRUTE_FORCE_LIMIT,
            });
        }
        if self.max_attempts == 0 {
            return Err(Error::InvalidParameter("max_attempts must be at least 1".into()));
        }
        if let ClauseCount::Range { min, max } = self.clauses {
            if min > max {
                return Err(Error::InvalidParameter(format!(
                    "empty clause range {min}..={max}"
                )));
            }
        }
        Ok(())
    }
}

fn random_clause(n: usize, rng: &mut ChaCha8Rng, hidden: Option<u64>) -> Clause {
    loop {
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let c = Clause::new(
            Literal { var: a, negated: rng.gen() },
            Literal { var: b, negated: rng.gen() },
        )
        .canonical();
        match hidden {
            Some(h) if c.is_violated(h) => continue,
            _ => return c,
        }
    }
}

fn draw_clauses(n: usize, m: usize, rng: &mut ChaCha8Rng, hidden: Option<u64>) -> Vec<Clause> {
    // Distinct clauses only; the pool of satisfiable-by-`hidden` clauses has
    // 3 * n(n-1)/2 members, so cap `m` to keep this loop finite.
    let pool = if hidden.is_some() { 3 } else { 4 } * n * (n - 1) / 2;
    let m = m.min(pool);
    let mut seen = HashSet::with_capacity(m);
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        let c = random_clause(n, rng, hidden);
        if seen.insert(c) {
            out.push(c);
        }
    }
    out
}

/// Outcome of checking one candidate.
struct Qualified {
    degeneracy: u64,
}

fn qualify(n: usize, clauses: &[Clause], criteria: &GeneratorCriteria) -> Option<Qualified> {
    let inst = SatInstance::new(n, clauses.to_vec()).ok()?;
    let solutions = inst.count_solutions_up_to(1);
    if solutions == 0 || (criteria.require_unique_solution && solutions != 1) {
        return None;
    }
    let spectrum = inst.classical_spectrum().ok()?;
    if spectrum.first_excited_degeneracy < criteria.min_first_excited_degeneracy {
        return None;
    }
    Some(Qualified {
        degeneracy: spectrum.first_excited_degeneracy,
    })
}

/// Draws instances from the criteria's seed until one qualifies.
pub fn generate_hard_instance(criteria: &GeneratorCriteria) -> Result<SatInstance> {
    criteria.validate()?;
    let n = criteria.n_vars;
    let mut rng = rng_from_seed(criteria.seed);

    for _ in 0..criteria.max_attempts {
        let m = criteria.clauses.draw(n, &mut rng);
        if m < n / 2 {
            return Err(Error::InvalidParameter(format!(
                "{m} clauses cannot touch all {n} variables"
            )));
        }
        let hidden = criteria.planted.then(|| rng.gen_range(0..1u64 << n));
        let mut clauses = draw_clauses(n, m, &mut rng, hidden);
        let Some(mut best) = qualify(n, &clauses, criteria) else {
            continue;
        };
        for _ in 0..criteria.swap_rounds {
            let slot = rng.gen_range(0..clauses.len());
            let replacement = random_clause(n, &mut rng, hidden);
            if clauses.contains(&replacement) {
                continue;
            }
            let previous = std::mem::replace(&mut clauses[slot], replacement);
            match qualify(n, &clauses, criteria) {
                Some(q) if q.degeneracy >= best.degeneracy => best = q,
                _ => clauses[slot] = previous,
            }
        }
        return SatInstance::new(n, clauses);
    }
    Err(Error::GeneratorExhausted {
        attempts: criteria.max_attempts,
        reason: format!(
            "no N={} instance met unique={} and first-excited degeneracy >= {}",
            n, criteria.require_unique_solution, criteria.min_first_excited_degeneracy
        ),
    })
}

/// One accepted member of a deduplicated ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMember {
    pub index: usize,
    pub seed: u64,
    pub instance: SatInstance,
    pub ground_mask: u64,
    pub first_excited_degeneracy: u64,
}

/// Generates `count` instances with distinct canonical forms.
///
/// Candidate `i` is drawn with seed `derive_seed(master_seed, i)`; candidates
/// are examined in index order so the result does not depend on the number
/// of worker threads. At most `max_candidates` candidates are drawn.
pub fn generate_ensemble(
    template: &GeneratorCriteria,
    count: usize,
    master_seed: u64,
    max_candidates: usize,
) -> Result<Vec<EnsembleMember>> {
    let batch = rayon::current_num_threads().max(1) * 4;
    let mut seen: HashSet<SatInstance> = HashSet::new();
    let mut members = Vec::with_capacity(count);
    let mut next = 0usize;

    while members.len() < count {
        if next >= max_candidates {
            return Err(Error::GeneratorExhausted {
                attempts: next,
                reason: format!(
                    "only {} distinct instances found, {} requested",
                    members.len(),
                    count
                ),
            });
        }
        let end = (next + batch).min(max_candidates);
        let drawn: Vec<Result<(u64, SatInstance)>> = (next..end)
            .into_par_iter()
            .map(|i| {
                let seed = derive_seed(master_seed, i as u64);
                let criteria = GeneratorCriteria {
                    seed,
                    ..template.clone()
                };
                generate_hard_instance(&criteria).map(|inst| (seed, inst))
            })
            .collect();
        for (offset, result) in drawn.into_iter().enumerate() {
            if members.len() == count {
                break;
            }
            let (seed, inst) = result?;
            let canon = inst.canonical();
            if !seen.insert(canon.clone()) {
                continue;
            }
            let spectrum = canon.classical_spectrum()?;
            let ground_mask = canon.brute_force_solve()?[0];
            members.push(EnsembleMember {
                index: next + offset,
                seed,
                instance: canon,
                ground_mask,
                first_excited_degeneracy: spectrum.first_excited_degeneracy,
            });
        }
        next = end;
    }
    Ok(members)
}
