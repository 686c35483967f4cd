//! Low-lying spectrum of `H(s)`: eigenpairs, the gap profile `Δ(s)` and its
//! global minimum.

mod lanczos;
mod tridiagonal;

pub use lanczos::{
    lowest_pairs, DeflatedLanczos, EigenPair, HamiltonianAt, LanczosOptions, SymmetricOperator,
};
pub use tridiagonal::{tridiagonal_eigen, Rows, TridiagonalEigen};

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{check_s, AnnealSpec, Hamiltonian};

pub const DEFAULT_GRID_POINTS: usize = 128;
pub const DEFAULT_REFINE_TOL: f64 = 1e-6;

/// The `k` lowest eigenpairs of `H(s)`, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

pub fn lowest_eigenpairs(spec: &AnnealSpec, s: f64, k: usize) -> Result<EigenResult> {
    let ham = Hamiltonian::build(spec)?;
    lowest_eigenpairs_of(&ham, s, k)
}

pub fn lowest_eigenpairs_of(ham: &Hamiltonian, s: f64, k: usize) -> Result<EigenResult> {
    check_s(s)?;
    let pairs = lowest_pairs(
        HamiltonianAt::new(ham, s),
        k,
        LanczosOptions::for_hamiltonian(ham, s),
    )?;
    let mut out = EigenResult {
        values: Vec::with_capacity(k),
        vectors: Vec::with_capacity(k),
        residuals: Vec::with_capacity(k),
    };
    for p in pairs {
        out.values.push(p.value);
        out.residuals.push(p.residual);
        out.vectors.push(p.vector);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapSample {
    pub s: f64,
    pub e0: f64,
    pub e1: f64,
    pub gap: f64,
}

/// `Δ(s) = E1 − E0`, with a degenerate ground level giving zero.
///
/// Off the diagonal endpoint both levels come from one Krylov space, which
/// cannot resolve an exactly degenerate ground level; where `H(s)` is
/// diagonal the two lowest entries are read off directly.
pub fn gap_at(ham: &Hamiltonian, s: f64) -> Result<GapSample> {
    Ok(gap_at_from(ham, s, None)?.0)
}

/// [`gap_at`] with an optional warm start; also returns a start vector for
/// a nearby `s`.
fn gap_at_from(
    ham: &Hamiltonian,
    s: f64,
    start: Option<Vec<f64>>,
) -> Result<(GapSample, Option<Vec<f64>>)> {
    check_s(s)?;
    let c = ham.coefficients(s);
    let (e0, e1, next) = if c.x == 0.0 && c.xx == 0.0 {
        let (a, b) = lowest_two(ham.terms().z_diagonal.iter().map(|z| c.z * z));
        (a, b, None)
    } else {
        let mut solver = DeflatedLanczos::new(ham, s, LanczosOptions::for_hamiltonian(ham, s));
        let pairs = match start {
            Some(v) => solver.next_pairs_from(2, v)?,
            None => solver.next_pairs(2)?,
        };
        let mix: Vec<f64> = pairs[0]
            .vector
            .iter()
            .zip(&pairs[1].vector)
            .map(|(a, b)| a + b)
            .collect();
        (pairs[0].value, pairs[1].value, Some(mix))
    };
    Ok((
        GapSample {
            s,
            e0,
            e1,
            gap: (e1 - e0).max(0.0),
        },
        next,
    ))
}

fn lowest_two(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut a, mut b) = (f64::INFINITY, f64::INFINITY);
    for v in values {
        if v < a {
            b = a;
            a = v;
        } else if v < b {
            b = v;
        }
    }
    (a, b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapProfile {
    /// Uniform grid samples, ascending in `s`.
    pub samples: Vec<GapSample>,
    /// Every refined local minimum of the grid, ascending in `s`.
    pub minima: Vec<GapSample>,
    pub min_gap: f64,
    pub s_star: f64,
    /// `1 / min_gap`; infinite for a closing gap.
    pub xi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub delta_min: f64,
    pub s_star: f64,
    pub xi: f64,
}

impl GapProfile {
    pub fn summary(&self) -> GapSummary {
        GapSummary {
            delta_min: self.min_gap,
            s_star: self.s_star,
            xi: self.xi,
        }
    }

    /// `s,E0,E1,gap` rows of the uniform grid.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,E0,E1,gap\n");
        for p in &self.samples {
            writeln!(out, "{},{},{},{}", p.s, p.e0, p.e1, p.gap).unwrap();
        }
        out
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string(&self.summary()).expect("plain data serializes")
    }
}

pub fn gap_profile(spec: &AnnealSpec, grid_points: usize, refine_tol: f64) -> Result<GapProfile> {
    let ham = Hamiltonian::build(spec)?;
    gap_profile_of(&ham, grid_points, refine_tol)
}

/// Uniform scan of `Δ(s)` followed by golden-section refinement of every
/// local minimum bracketed by the grid.
pub fn gap_profile_of(ham: &Hamiltonian, grid_points: usize, refine_tol: f64) -> Result<GapProfile> {
    if grid_points < 16 {
        return Err(Error::InvalidParameter(format!(
            "gap profile needs at least 16 grid points, got {grid_points}"
        )));
    }
    if !(refine_tol > 0.0) {
        return Err(Error::InvalidParameter("refine_tol must be positive".into()));
    }
    let last = grid_points - 1;
    let chunks: Vec<Vec<usize>> = (0..grid_points)
        .collect::<Vec<_>>()
        .chunks(WARM_CHUNK)
        .map(|c| c.to_vec())
        .collect();
    let samples: Vec<GapSample> = chunks
        .par_iter()
        .map(|idx| {
            let mut warm = WarmStart::new(ham.dim(), idx[0] as u64);
            idx.iter()
                .map(|&i| warm.gap(ham, i as f64 / last as f64))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let brackets: Vec<usize> = (0..grid_points)
        .filter(|&i| {
            let g = samples[i].gap;
            let left_ok = i == 0 || g < samples[i - 1].gap;
            let right_ok = i == last || g <= samples[i + 1].gap;
            left_ok && right_ok
        })
        .collect();

    let minima = brackets
        .par_iter()
        .map(|&i| {
            let lo = samples[i.saturating_sub(1)].s;
            let hi = samples[(i + 1).min(last)].s;
            let refined = golden_section(ham, lo, hi, refine_tol)?;
            Ok(if refined.gap <= samples[i].gap {
                refined
            } else {
                samples[i]
            })
        })
        .collect::<Result<Vec<GapSample>>>()?;

    let best = minima
        .iter()
        .copied()
        .min_by(|a, b| a.gap.total_cmp(&b.gap))
        .expect("a finite grid always has a minimum");
    Ok(GapProfile {
        samples,
        minima,
        min_gap: best.gap,
        s_star: best.s,
        xi: 1.0 / best.gap,
    })
}

/// Consecutive grid points sharing a chain of warm starts. Fixed, so the
/// result does not depend on the number of threads.
const WARM_CHUNK: usize = 16;

/// Weight of the random admixture in a warm start, relative to the previous
/// eigenvectors. Keeps every level represented in the Krylov space, so a
/// state coming down from above is not missed.
const WARM_NOISE: f64 = 0.3;

struct WarmStart {
    rng: rand_chacha::ChaCha8Rng,
    previous: Option<Vec<f64>>,
    dim: usize,
}

impl WarmStart {
    fn new(dim: usize, stream: u64) -> Self {
        WarmStart {
            rng: crate::seed::rng_from_seed(crate::seed::derive_seed(0x6a9_57a7, stream)),
            previous: None,
            dim,
        }
    }

    fn gap(&mut self, ham: &Hamiltonian, s: f64) -> Result<GapSample> {
        use rand::Rng;
        let start = self.previous.take().map(|mut v| {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let amp = WARM_NOISE * norm / (self.dim as f64).sqrt();
            for x in v.iter_mut() {
                *x += amp * self.rng.gen_range(-1.0..1.0);
            }
            v
        });
        let (sample, next) = gap_at_from(ham, s, start)?;
        self.previous = next;
        Ok(sample)
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn golden_section(ham: &Hamiltonian, mut lo: f64, mut hi: f64, tol: f64) -> Result<GapSample> {
    let mut warm = WarmStart::new(ham.dim(), lo.to_bits());
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = warm.gap(ham, x1)?;
    let mut f2 = warm.gap(ham, x2)?;
    while hi - lo > tol {
        if f1.gap <= f2.gap {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = warm.gap(ham, x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = warm.gap(ham, x2)?;
        }
    }
    Ok(if f1.gap <= f2.gap { f1 } else { f2 })
}

/// `(Δ_min, s*)` with the default grid and tolerance.
pub fn min_gap(spec: &AnnealSpec) -> Result<(f64, f64)> {
    let p = gap_profile(spec, DEFAULT_GRID_POINTS, DEFAULT_REFINE_TOL)?;
    Ok((p.min_gap, p.s_star))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::Variant;
    use crate::ising::IsingProblem;
    use crate::problems::parse_dimacs;
    use std::f64::consts::SQRT_2;

    fn canonical() -> AnnealSpec {
        AnnealSpec::new(IsingProblem::new(vec![1.0], [], 0.0).unwrap(), Variant::Standard)
    }

    #[test]
    fn single_clause_at_s_one() {
        let inst = parse_dimacs("p cnf 2 1\n1 2 0").unwrap();
        let spec = AnnealSpec::new(IsingProblem::from_sat(&inst), Variant::Standard);
        let r = lowest_eigenpairs(&spec, 1.0, 4).unwrap();
        for (v, e) in r.values.iter().zip([0.0, 0.0, 0.0, 4.0]) {
            assert!((v - e).abs() < 1e-10, "{:?}", r.values);
        }
    }

    #[test]
    fn canonical_midpoint() {
        let r = lowest_eigenpairs(&canonical(), 0.5, 2).unwrap();
        assert!((r.values[0] + SQRT_2 / 2.0).abs() < 1e-12);
        assert!((r.values[1] - SQRT_2 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn canonical_min_gap() {
        let (gap, s) = min_gap(&canonical()).unwrap();
        assert!((gap - SQRT_2).abs() < 1e-6, "{gap}");
        assert!((s - 0.5).abs() < 1e-6, "{s}");
    }

    #[test]
    fn canonical_profile_matches_closed_form() {
        let p = gap_profile(&canonical(), 33, 1e-8).unwrap();
        for smp in &p.samples {
            let exact = 2.0 * ((1.0 - smp.s).powi(2) + smp.s.powi(2)).sqrt();
            assert!((smp.gap - exact).abs() < 1e-10);
        }
        assert!((p.xi * p.min_gap - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_clause_gap_closes_at_end() {
        let inst = parse_dimacs("p cnf 2 1\n1 2 0").unwrap();
        let spec = AnnealSpec::new(IsingProblem::from_sat(&inst), Variant::Standard);
        let p = gap_profile(&spec, 16, 1e-6).unwrap();
        assert!(p.min_gap < 1e-8);
        assert!((p.s_star - 1.0).abs() < 1e-6);
    }

    #[test]
    fn transverse_endpoint_gap_is_two() {
        let inst = parse_dimacs("p cnf 4 4\n1 -2 0\n2 3 0\n-3 4 0\n-1 -4 0").unwrap();
        for v in Variant::ALL {
            let ham = Hamiltonian::build(&AnnealSpec::new(IsingProblem::from_sat(&inst), v)).unwrap();
            let g = gap_at(&ham, 0.0).unwrap();
            assert!((g.gap - 2.0).abs() < 1e-10);
            assert!((g.e0 + 4.0).abs() < 1e-10);
        }
    }

    #[test]
    fn csv_and_json() {
        let p = gap_profile(&canonical(), 16, 1e-6).unwrap();
        let csv = p.to_csv();
        assert!(csv.starts_with("s,E0,E1,gap\n"));
        assert_eq!(csv.lines().count(), 17);
        let json: serde_json::Value = serde_json::from_str(&p.summary_json()).unwrap();
        assert!(json["delta_min"].as_f64().unwrap() > 1.41);
    }

    #[test]
    fn rejects_small_grid() {
        assert!(gap_profile(&canonical(), 8, 1e-6).is_err());
    }
}
