//! Ising form of the 2-SAT clause Hamiltonian.
//!
//! A clause on literals `(i, e1)`, `(j, e2)` contributes
//! `(e1 s_i - 1)(e2 s_j - 1) = e1 e2 s_i s_j - e1 s_i - e2 s_j + 1`, which in the
//! convention `E = -Σ h_i s_i - Σ J_ij s_i s_j + offset` means
//! `J_ij -= e1 e2`, `h_i += e1`, `h_j += e2`, `offset += 1`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::SatInstance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub strength: f64,
}

/// Classical Ising data of a problem Hamiltonian.
///
/// Spin `i` is `+1` when bit `i` of a basis index is set.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingProblem {
    n_spins: usize,
    fields: Vec<f64>,
    /// Sorted by `(i, j)` with `i < j`; one entry per coupled pair.
    couplings: Vec<Coupling>,
    offset: f64,
}

impl IsingProblem {
    /// Builds a problem, merging repeated pairs. Pairs are kept even if their
    /// strengths cancel, so the edge set reflects the input graph.
    pub fn new(
        fields: Vec<f64>,
        couplings: impl IntoIterator<Item = Coupling>,
        offset: f64,
    ) -> Result<Self> {
        let n = fields.len();
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for c in couplings {
            let (i, j) = if c.i < c.j { (c.i, c.j) } else { (c.j, c.i) };
            if i == j || j >= n {
                return Err(Error::InvalidParameter(format!(
                    "invalid coupling ({}, {}) for {} spins",
                    c.i, c.j, n
                )));
            }
            *merged.entry((i, j)).or_insert(0.0) += c.strength;
        }
        Ok(IsingProblem {
            n_spins: n,
            fields,
            couplings: merged
                .into_iter()
                .map(|((i, j), strength)| Coupling { i, j, strength })
                .collect(),
            offset,
        })
    }

    /// Maps a 2-SAT instance so that energies equal four times the number of
    /// violated clauses.
    pub fn from_sat(inst: &SatInstance) -> Self {
        let mut fields = vec![0.0; inst.n_vars()];
        let mut pairs = Vec::with_capacity(inst.n_clauses());
        for clause in inst.clauses() {
            let [a, b] = clause.0;
            let (e1, e2) = (a.sign() as f64, b.sign() as f64);
            fields[a.var] += e1;
            fields[b.var] += e2;
            pairs.push(Coupling {
                i: a.var,
                j: b.var,
                strength: -e1 * e2,
            });
        }
        IsingProblem::new(fields, pairs, inst.n_clauses() as f64)
            .expect("instance invariants guarantee valid couplings")
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.couplings.iter().map(|c| (c.i, c.j))
    }

    /// `-Σ h_i s_i - Σ J_ij s_i s_j + offset`.
    pub fn classical_energy(&self, spins: &[i8]) -> Result<f64> {
        if spins.len() != self.n_spins {
            return Err(Error::LengthMismatch {
                expected: self.n_spins,
                got: spins.len(),
            });
        }
        let mut e = self.offset;
        for (h, &s) in self.fields.iter().zip(spins) {
            e -= h * s as f64;
        }
        for c in &self.couplings {
            e -= c.strength * (spins[c.i] * spins[c.j]) as f64;
        }
        Ok(e)
    }

    /// Energy of the configuration encoded by basis index `b`.
    #[inline]
    pub fn energy_of_index(&self, b: u64) -> f64 {
        let spin = |i: usize| if (b >> i) & 1 == 1 { 1.0 } else { -1.0 };
        let mut e = self.offset;
        for (i, h) in self.fields.iter().enumerate() {
            e -= h * spin(i);
        }
        for c in &self.couplings {
            e -= c.strength * spin(c.i) * spin(c.j);
        }
        e
    }

    /// Energies of all `2^N` basis states.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..1u64 << self.n_spins)
            .map(|b| self.energy_of_index(b))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&IsingJson::from(self)).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: IsingJson = serde_json::from_str(text)?;
        raw.try_into()
    }
}

pub fn spins_from_index(b: u64, n: usize) -> Vec<i8> {
    (0..n).map(|i| if (b >> i) & 1 == 1 { 1 } else { -1 }).collect()
}

pub fn spins_from_bits(bits: &[bool]) -> Vec<i8> {
    bits.iter().map(|&x| if x { 1 } else { -1 }).collect()
}

/// Wire form: `{n, h[], couplings[[i, j, J]], offset}`.
#[derive(Debug, Serialize, Deserialize)]
struct IsingJson {
    n: usize,
    h: Vec<f64>,
    couplings: Vec<(usize, usize, f64)>,
    offset: f64,
}

impl From<&IsingProblem> for IsingJson {
    fn from(p: &IsingProblem) -> Self {
        IsingJson {
            n: p.n_spins,
            h: p.fields.clone(),
            couplings: p.couplings.iter().map(|c| (c.i, c.j, c.strength)).collect(),
            offset: p.offset,
        }
    }
}

impl TryFrom<IsingJson> for IsingProblem {
    type Error = Error;

    fn try_from(raw: IsingJson) -> Result<Self> {
        if raw.h.len() != raw.n {
            return Err(Error::InvalidParameter(format!(
                "h has {} entries but n = {}",
                raw.h.len(),
                raw.n
            )));
        }
        IsingProblem::new(
            raw.h,
            raw.couplings
                .into_iter()
                .map(|(i, j, strength)| Coupling { i, j, strength }),
            raw.offset,
        )
    }
}
