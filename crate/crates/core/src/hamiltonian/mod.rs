//! Time-dependent annealing Hamiltonians and their matrix-free action.
//!
//! ```text
//! H(s) = A(s) Σ_i (-h^x_i) σ^x_i  +  g(s) Σ_<ij> (-J^x_ij) σ^x_i σ^x_j  +  B(s) H_P
//! ```
//!
//! with `g(s) = s(1 - s)` and `J^x = +1` (ferromagnetic trigger), `-1`
//! (antiferromagnetic trigger) or no trigger term at all (standard). The
//! trigger acts on the coupling graph of the problem. `H_P` is diagonal and
//! stored as the `2^N` classical energies, offset included.
//!
//! Basis index bit `i` is spin `i`; a set bit means `σ^z_i = +1`.

mod schedule;
mod state;

pub use schedule::{trigger_envelope, trigger_envelope_derivative, LinearSchedule, Schedule};
pub use state::StateVector;

use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::IsingProblem;
use crate::spectra::{self, LanczosOptions};

/// Largest spin count for which the `2^N` vectors are built.
pub const MAX_SPINS: usize = 20;

/// Below this dimension the matrix-vector product runs on one thread.
const PARALLEL_DIM: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Standard,
    FerroTrigger,
    AntiferroTrigger,
}

impl Variant {
    pub const ALL: [Variant; 3] = [
        Variant::Standard,
        Variant::FerroTrigger,
        Variant::AntiferroTrigger,
    ];

    /// `J^x` of the trigger term, if any.
    pub fn trigger_coupling(self) -> Option<f64> {
        match self {
            Variant::Standard => None,
            Variant::FerroTrigger => Some(1.0),
            Variant::AntiferroTrigger => Some(-1.0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Standard => "standard",
            Variant::FerroTrigger => "ferro_trigger",
            Variant::AntiferroTrigger => "antiferro_trigger",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Variant::Standard),
            "ferro_trigger" | "ferro" => Ok(Variant::FerroTrigger),
            "antiferro_trigger" | "antiferro" => Ok(Variant::AntiferroTrigger),
            other => Err(Error::InvalidParameter(format!("unknown variant `{other}`"))),
        }
    }
}

/// Everything needed to build `H(s)`.
#[derive(Debug, Clone)]
pub struct AnnealSpec {
    pub problem: IsingProblem,
    pub variant: Variant,
    /// `h^x_i` per spin.
    pub transverse_fields: Vec<f64>,
    pub schedule: Arc<dyn Schedule>,
}

impl AnnealSpec {
    /// Linear schedule and unit transverse field.
    pub fn new(problem: IsingProblem, variant: Variant) -> Self {
        let n = problem.n_spins();
        AnnealSpec {
            problem,
            variant,
            transverse_fields: vec![1.0; n],
            schedule: Arc::new(LinearSchedule),
        }
    }

    pub fn with_transverse_field(mut self, hx: f64) -> Self {
        self.transverse_fields = vec![hx; self.problem.n_spins()];
        self
    }

    pub fn with_schedule(mut self, schedule: Arc<dyn Schedule>) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn n_spins(&self) -> usize {
        self.problem.n_spins()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairTerm {
    pub i: usize,
    pub j: usize,
    /// Coefficient of `σ^x_i σ^x_j`, i.e. `-J^x`.
    pub coefficient: f64,
}

/// Operator content of `H(s)` independent of `s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HamiltonianTerms {
    pub n_spins: usize,
    /// Coefficient of `σ^x_i`, i.e. `-h^x_i`.
    pub single_x: Vec<f64>,
    /// Trigger terms; empty for the standard variant.
    pub pair_x: Vec<PairTerm>,
    /// Classical energy of every basis state.
    pub z_diagonal: Vec<f64>,
}

/// Multipliers of the three operator groups at a given `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub x: f64,
    pub xx: f64,
    pub z: f64,
}

/// Scalars the matrix-free product can act on.
pub trait Amplitude: Copy + Send + Sync + Add<Output = Self> + Mul<f64, Output = Self> {}
impl Amplitude for f64 {}
impl Amplitude for Complex64 {}

/// `H(s)` ready for repeated application.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    terms: HamiltonianTerms,
    variant: Variant,
    schedule: Arc<dyn Schedule>,
    max_abs_diagonal: f64,
}

/// Precomputes the operator terms of `spec`.
pub fn build_terms(spec: &AnnealSpec) -> Result<Hamiltonian> {
    Hamiltonian::build(spec)
}

impl Hamiltonian {
    pub fn build(spec: &AnnealSpec) -> Result<Self> {
        let n = spec.n_spins();
        if n > MAX_SPINS {
            return Err(Error::TooLarge { n, limit: MAX_SPINS });
        }
        if spec.transverse_fields.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: spec.transverse_fields.len(),
            });
        }
        let pair_x = match spec.variant.trigger_coupling() {
            None => Vec::new(),
            Some(jx) => spec
                .problem
                .edges()
                .map(|(i, j)| PairTerm {
                    i,
                    j,
                    coefficient: -jx,
                })
                .collect(),
        };
        let z_diagonal = spec.problem.diagonal();
        let max_abs_diagonal = z_diagonal.iter().fold(0.0f64, |m, z| m.max(z.abs()));
        Ok(Hamiltonian {
            terms: HamiltonianTerms {
                n_spins: n,
                single_x: spec.transverse_fields.iter().map(|h| -h).collect(),
                pair_x,
                z_diagonal,
            },
            variant: spec.variant,
            schedule: Arc::clone(&spec.schedule),
            max_abs_diagonal,
        })
    }

    pub fn terms(&self) -> &HamiltonianTerms {
        &self.terms
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn schedule(&self) -> &dyn Schedule {
        self.schedule.as_ref()
    }

    pub fn n_spins(&self) -> usize {
        self.terms.n_spins
    }

    pub fn dim(&self) -> usize {
        1 << self.terms.n_spins
    }

    pub fn coefficients(&self, s: f64) -> Coefficients {
        Coefficients {
            x: self.schedule.a(s),
            xx: if self.terms.pair_x.is_empty() {
                0.0
            } else {
                trigger_envelope(s)
            },
            z: self.schedule.b(s),
        }
    }

    /// Coefficients of `dH/ds`.
    pub fn derivative_coefficients(&self, s: f64) -> Coefficients {
        Coefficients {
            x: self.schedule.da(s),
            xx: if self.terms.pair_x.is_empty() {
                0.0
            } else {
                trigger_envelope_derivative(s)
            },
            z: self.schedule.db(s),
        }
    }

    /// Upper bound on `‖H‖` from the triangle inequality.
    pub fn norm_bound(&self, c: Coefficients) -> f64 {
        let x: f64 = self.terms.single_x.iter().map(|v| v.abs()).sum();
        let xx: f64 = self.terms.pair_x.iter().map(|p| p.coefficient.abs()).sum();
        c.x.abs() * x + c.xx.abs() * xx + c.z.abs() * self.max_abs_diagonal
    }

    /// `out = H(c) · input` with the given group multipliers.
    pub fn apply_into<T: Amplitude>(&self, c: Coefficients, input: &[T], out: &mut [T]) {
        let dim = self.dim();
        assert_eq!(input.len(), dim, "input dimension");
        assert_eq!(out.len(), dim, "output dimension");

        let singles: Vec<(usize, f64)> = self
            .terms
            .single_x
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0 && c.x != 0.0)
            .map(|(i, &v)| (1usize << i, c.x * v))
            .collect();
        let pairs: Vec<(usize, f64)> = self
            .terms
            .pair_x
            .iter()
            .filter(|p| p.coefficient != 0.0 && c.xx != 0.0)
            .map(|p| ((1usize << p.i) | (1usize << p.j), c.xx * p.coefficient))
            .collect();
        let z = &self.terms.z_diagonal;

        let kernel = |base: usize, chunk: &mut [T]| {
            for (k, slot) in chunk.iter_mut().enumerate() {
                let b = base + k;
                let mut acc = input[b] * (c.z * z[b]);
                for &(mask, coef) in singles.iter().chain(&pairs) {
                    acc = acc + input[b ^ mask] * coef;
                }
                *slot = acc;
            }
        };

        if dim >= PARALLEL_DIM {
            let chunk = PARALLEL_DIM / 4;
            out.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(ci, ch)| kernel(ci * chunk, ch));
        } else {
            kernel(0, out);
        }
    }

    /// `H(s) ψ`, unnormalized.
    pub fn apply(&self, s: f64, psi: &StateVector) -> Result<Vec<Complex64>> {
        if psi.dim() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                got: psi.dim(),
            });
        }
        check_s(s)?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.apply_into(self.coefficients(s), psi.amplitudes(), &mut out);
        Ok(out)
    }

    /// `H(s) v` for a real vector (`H(s)` is real symmetric).
    pub fn apply_real(&self, s: f64, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(self.coefficients(s), v, &mut out);
        out
    }
}

pub(crate) fn check_s(s: f64) -> Result<()> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("s = {s} outside [0, 1]")))
    }
}

/// Largest value over the grid of `|⟨1(s)|dH/ds|0(s)⟩| / Δ(s)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdiabaticBound {
    /// `f64::INFINITY` when the gap closes on the grid.
    pub value: f64,
    pub s_at_max: f64,
    pub unbounded: bool,
}

/// Gap below which the ground level counts as degenerate.
const DEGENERATE_GAP: f64 = 1e-12;

/// Evaluates the adiabatic-theorem ratio on `grid_points` equally spaced
/// values of `s` in `[0, 1]` and returns its maximum.
///
/// When the first excited level is degenerate the matrix element is the norm
/// of the projection of `dH/ds |0⟩` onto the whole level.
pub fn adiabatic_bound(spec: &AnnealSpec, grid_points: usize) -> Result<AdiabaticBound> {
    if grid_points < 2 {
        return Err(Error::InvalidParameter("grid needs at least 2 points".into()));
    }
    let ham = Hamiltonian::build(spec)?;
    let mut best = AdiabaticBound {
        value: 0.0,
        s_at_max: 0.0,
        unbounded: false,
    };
    for g in 0..grid_points {
        let s = g as f64 / (grid_points - 1) as f64;
        let ratio = adiabatic_ratio(&ham, s)?;
        if ratio.is_infinite() {
            return Ok(AdiabaticBound {
                value: f64::INFINITY,
                s_at_max: s,
                unbounded: true,
            });
        }
        if ratio > best.value {
            best.value = ratio;
            best.s_at_max = s;
        }
    }
    Ok(best)
}

/// The adiabatic ratio at a single `s`.
pub fn adiabatic_ratio(ham: &Hamiltonian, s: f64) -> Result<f64> {
    check_s(s)?;
    let opts = LanczosOptions::for_hamiltonian(ham, s);
    let mut solver = spectra::DeflatedLanczos::new(ham, s, opts);
    let ground = solver.next_pair()?;
    let first = solver.next_pair()?;
    let gap = first.value - ground.value;
    if gap < DEGENERATE_GAP {
        return Ok(f64::INFINITY);
    }
    let level_tol = 1e-8 * ham.norm_bound(ham.coefficients(s)).max(1.0);
    let mut level = vec![first];
    while level.len() < ham.dim() - 1 && level.len() < 32 {
        let next = solver.next_pair()?;
        if next.value - level[0].value > level_tol {
            break;
        }
        level.push(next);
    }

    let mut dh0 = vec![0.0; ham.dim()];
    ham.apply_into(ham.derivative_coefficients(s), &ground.vector, &mut dh0);
    let element = level
        .iter()
        .map(|p| {
            let e: f64 = p.vector.iter().zip(&dh0).map(|(a, b)| a * b).sum();
            e * e
        })
        .sum::<f64>()
        .sqrt();
    Ok(element / (gap * gap))
}
