//! 2-SAT instances: representation, exhaustive classical analysis and
//! generation of hard ensembles.
//!
//! Assignments are packed into a `u64` mask where bit `i` holds `x_i`
//! (variables are 0-based internally, 1-based in DIMACS text). The same mask
//! is the computational-basis index of the corresponding spin configuration,
//! with `x_i = 1` mapped to `s_i = +1`.

mod dimacs;
mod generator;

pub use dimacs::{parse_dimacs, read_dimacs, to_dimacs};
pub use generator::{
    generate_ensemble, generate_hard_instance, ClauseCount, EnsembleMember, GeneratorCriteria,
};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest variable count accepted by the exhaustive routines.
pub const BRUTE_FORCE_LIMIT: usize = 24;

/// A variable or its negation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    /// 0-based variable index.
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal { var, negated: false }
    }

    pub fn neg(var: usize) -> Self {
        Literal { var, negated: true }
    }

    /// `+1` for `x_i`, `-1` for its negation.
    pub fn sign(self) -> i32 {
        if self.negated {
            -1
        } else {
            1
        }
    }

    /// Signed 1-based DIMACS form.
    pub fn to_dimacs(self) -> i64 {
        let v = self.var as i64 + 1;
        if self.negated {
            -v
        } else {
            v
        }
    }

    pub fn from_dimacs(lit: i64) -> Option<Self> {
        if lit == 0 {
            return None;
        }
        Some(Literal {
            var: (lit.unsigned_abs() - 1) as usize,
            negated: lit < 0,
        })
    }

    #[inline]
    pub fn is_true(self, mask: u64) -> bool {
        ((mask >> self.var) & 1 == 1) != self.negated
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "¬x{}", self.var + 1)
        } else {
            write!(f, "x{}", self.var + 1)
        }
    }
}

/// A two-literal disjunction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Clause(pub [Literal; 2]);

impl Clause {
    pub fn new(a: Literal, b: Literal) -> Self {
        Clause([a, b])
    }

    /// Literals ordered by variable index.
    pub fn canonical(self) -> Self {
        let [a, b] = self.0;
        if a <= b {
            Clause([a, b])
        } else {
            Clause([b, a])
        }
    }

    #[inline]
    pub fn is_violated(self, mask: u64) -> bool {
        !self.0[0].is_true(mask) && !self.0[1].is_true(mask)
    }
}

/// A 2-SAT formula over `n_vars` variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SatInstance {
    n_vars: usize,
    clauses: Vec<Clause>,
}

impl SatInstance {
    /// Builds an instance, checking that every clause joins two distinct
    /// in-range variables and that every variable is used.
    pub fn new(n_vars: usize, clauses: Vec<Clause>) -> Result<Self> {
        if n_vars == 0 {
            return Err(Error::InvalidInstance("instance has no variables".into()));
        }
        if n_vars > 64 {
            return Err(Error::TooLarge { n: n_vars, limit: 64 });
        }
        let mut used = vec![false; n_vars];
        for (idx, clause) in clauses.iter().enumerate() {
            let [a, b] = clause.0;
            for lit in [a, b] {
                if lit.var >= n_vars {
                    return Err(Error::InvalidInstance(format!(
                        "clause {} references variable {} but N = {}",
                        idx + 1,
                        lit.var + 1,
                        n_vars
                    )));
                }
                used[lit.var] = true;
            }
            if a.var == b.var {
                return Err(Error::InvalidInstance(format!(
                    "clause {} uses variable {} twice",
                    idx + 1,
                    a.var + 1
                )));
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::InvalidInstance(format!(
                "variable {} appears in no clause",
                v + 1
            )));
        }
        Ok(SatInstance { n_vars, clauses })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Literals sorted within clauses, clauses sorted. Two instances with the
    /// same canonical form are treated as duplicates.
    pub fn canonical(&self) -> SatInstance {
        let mut clauses: Vec<Clause> = self.clauses.iter().map(|c| c.canonical()).collect();
        clauses.sort_unstable();
        SatInstance {
            n_vars: self.n_vars,
            clauses,
        }
    }

    /// Number of violated clauses under a packed assignment.
    #[inline]
    pub fn violations_of_mask(&self, mask: u64) -> u32 {
        self.clauses.iter().filter(|c| c.is_violated(mask)).count() as u32
    }

    /// Number of clauses whose two literals are both false.
    pub fn violated_clauses(&self, assignment: &[bool]) -> Result<u32> {
        if assignment.len() != self.n_vars {
            return Err(Error::LengthMismatch {
                expected: self.n_vars,
                got: assignment.len(),
            });
        }
        Ok(self.violations_of_mask(bits_to_mask(assignment)))
    }

    fn check_brute_force_size(&self) -> Result<()> {
        if self.n_vars > BRUTE_FORCE_LIMIT {
            return Err(Error::TooLarge {
                n: self.n_vars,
                limit: BRUTE_FORCE_LIMIT,
            });
        }
        Ok(())
    }

    /// Every satisfying assignment, as masks in increasing order.
    pub fn brute_force_solve(&self) -> Result<Vec<u64>> {
        self.check_brute_force_size()?;
        Ok((0..1u64 << self.n_vars)
            .filter(|&m| self.violations_of_mask(m) == 0)
            .collect())
    }

    /// Counts satisfying assignments, stopping once `limit` is exceeded.
    pub(crate) fn count_solutions_up_to(&self, limit: usize) -> usize {
        let mut count = 0;
        for m in 0..1u64 << self.n_vars {
            if self.violations_of_mask(m) == 0 {
                count += 1;
                if count > limit {
                    break;
                }
            }
        }
        count
    }

    /// Histogram of the clause energy over all `2^N` configurations.
    pub fn classical_spectrum(&self) -> Result<ClassicalSpectrum> {
        self.check_brute_force_size()?;
        let mut counts = vec![0u64; self.clauses.len() + 1];
        for m in 0..1u64 << self.n_vars {
            counts[self.violations_of_mask(m) as usize] += 1;
        }
        let histogram: BTreeMap<u32, u64> = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(v, &c)| (v as u32, c))
            .collect();
        Ok(ClassicalSpectrum::from_histogram(histogram))
    }
}

impl fmt::Display for SatInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                write!(f, " ∧ ")?;
            }
            write!(f, "({} ∨ {})", c.0[0], c.0[1])?;
        }
        Ok(())
    }
}

/// Energy levels of the clause Hamiltonian, where a configuration's energy is
/// four times its number of violated clauses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalSpectrum {
    pub ground_energy: f64,
    pub ground_degeneracy: u64,
    /// `None` when every configuration has the same energy.
    pub first_excited_energy: Option<f64>,
    pub first_excited_degeneracy: u64,
    /// Violated-clause count → number of configurations.
    pub histogram: BTreeMap<u32, u64>,
}

impl ClassicalSpectrum {
    fn from_histogram(histogram: BTreeMap<u32, u64>) -> Self {
        let mut levels = histogram.iter();
        let (&g, &gd) = levels.next().expect("at least one configuration");
        let excited = levels.next();
        ClassicalSpectrum {
            ground_energy: 4.0 * g as f64,
            ground_degeneracy: gd,
            first_excited_energy: excited.map(|(&e, _)| 4.0 * e as f64),
            first_excited_degeneracy: excited.map_or(0, |(_, &d)| d),
            histogram,
        }
    }

    pub fn total_states(&self) -> u64 {
        self.histogram.values().sum()
    }

    /// Classical gap between the two lowest levels.
    pub fn gap(&self) -> Option<f64> {
        self.first_excited_energy.map(|e| e - self.ground_energy)
    }
}

pub fn bits_to_mask(bits: &[bool]) -> u64 {
    bits.iter()
        .enumerate()
        .fold(0u64, |m, (i, &b)| if b { m | (1 << i) } else { m })
}

pub fn mask_to_bits(mask: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| (mask >> i) & 1 == 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(n: usize, clauses: &[(i64, i64)]) -> SatInstance {
        SatInstance::new(
            n,
            clauses
                .iter()
                .map(|&(a, b)| {
                    Clause::new(
                        Literal::from_dimacs(a).unwrap(),
                        Literal::from_dimacs(b).unwrap(),
                    )
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn violated_counts() {
        let f = inst(2, &[(1, 2)]);
        assert_eq!(f.violated_clauses(&[true, false]).unwrap(), 0);
        assert_eq!(f.violated_clauses(&[false, false]).unwrap(), 1);

        let g = inst(2, &[(1, 2), (-1, 2), (1, -2)]);
        assert_eq!(g.violated_clauses(&[true, true]).unwrap(), 0);
        // only (x1 ∨ x2) fails at (0, 0)
        assert_eq!(g.violated_clauses(&[false, false]).unwrap(), 1);
        assert_eq!(g.violated_clauses(&[false, true]).unwrap(), 1);
        assert!(matches!(
            g.violated_clauses(&[true]),
            Err(Error::LengthMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn brute_force_examples() {
        let two = inst(2, &[(1, 2), (-1, 2)]);
        // (x1, x2) = (0, 1) and (1, 1)
        assert_eq!(two.brute_force_solve().unwrap(), vec![0b10, 0b11]);

        let unique = inst(2, &[(1, 2), (-1, 2), (1, -2)]);
        assert_eq!(unique.brute_force_solve().unwrap(), vec![0b11]);

        let unsat = inst(2, &[(1, 2), (1, -2), (-1, 2), (-1, -2)]);
        assert!(unsat.brute_force_solve().unwrap().is_empty());
    }

    #[test]
    fn spectrum_single_clause() {
        let s = inst(2, &[(1, 2)]).classical_spectrum().unwrap();
        assert_eq!(s.ground_energy, 0.0);
        assert_eq!(s.ground_degeneracy, 3);
        assert_eq!(s.first_excited_energy, Some(4.0));
        assert_eq!(s.first_excited_degeneracy, 1);
        assert_eq!(s.total_states(), 4);
    }

    #[test]
    fn spectrum_unique_instance() {
        let s = inst(2, &[(1, 2), (-1, 2), (1, -2)])
            .classical_spectrum()
            .unwrap();
        assert_eq!(s.ground_degeneracy, 1);
        assert!(s.ground_energy < s.first_excited_energy.unwrap());
    }

    #[test]
    fn rejects_bad_instances() {
        let same = Clause::new(Literal::pos(0), Literal::neg(0));
        assert!(SatInstance::new(2, vec![same]).is_err());
        let out = Clause::new(Literal::pos(0), Literal::pos(5));
        assert!(SatInstance::new(2, vec![out]).is_err());
        let unused = Clause::new(Literal::pos(0), Literal::pos(1));
        assert!(SatInstance::new(3, vec![unused]).is_err());
    }

    #[test]
    fn size_guard() {
        let clauses = (0..25)
            .map(|i| Clause::new(Literal::pos(i), Literal::pos((i + 1) % 25)))
            .collect();
        let big = SatInstance::new(25, clauses).unwrap();
        assert!(matches!(big.brute_force_solve(), Err(Error::TooLarge { .. })));
        assert!(matches!(big.classical_spectrum(), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn canonical_sorts() {
        let a = inst(3, &[(3, -1), (2, 1)]);
        let b = inst(3, &[(1, 2), (-1, 3)]);
        assert_eq!(a.canonical(), b.canonical());
    }

    #[test]
    fn mask_roundtrip() {
        let bits = vec![true, false, true, true];
        assert_eq!(mask_to_bits(bits_to_mask(&bits), 4), bits);
    }
}
