//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use qa2sat_core::hamiltonian::{AnnealSpec, Variant};
use qa2sat_core::ising::IsingProblem;
use qa2sat_core::problems::{generate_hard_instance, ClauseCount, GeneratorCriteria, SatInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// `op` on qubit `site` of `n`, built as a Kronecker product. Qubit 0 is the
/// least significant bit of the basis index, hence the rightmost factor.
pub fn embed(op: &DMatrix<f64>, site: usize, n: usize) -> DMatrix<f64> {
    let id = DMatrix::<f64>::identity(2, 2);
    let mut m = DMatrix::<f64>::identity(1, 1);
    for q in (0..n).rev() {
        m = kron(&m, if q == site { op } else { &id });
    }
    m
}

pub fn sigma_x() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

/// Problem energies from clause counting, independent of the Ising mapping.
pub fn sat_diagonal(inst: &SatInstance) -> Vec<f64> {
    (0..1u64 << inst.n_vars())
        .map(|b| {
            4.0 * inst
                .clauses()
                .iter()
                .filter(|c| c.0.iter().all(|l| ((b >> l.var) & 1 == 1) == l.negated))
                .count() as f64
        })
        .collect()
}

/// Dense `H(s)` for the linear schedule with unit transverse field.
pub fn dense_hamiltonian(inst: &SatInstance, variant: Variant, s: f64) -> DMatrix<f64> {
    let n = inst.n_vars();
    let dim = 1 << n;
    let sx = sigma_x();
    let mut driver = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..n {
        driver -= embed(&sx, i, n);
    }
    let mut trigger = DMatrix::<f64>::zeros(dim, dim);
    let jx = match variant {
        Variant::Standard => 0.0,
        Variant::FerroTrigger => 1.0,
        Variant::AntiferroTrigger => -1.0,
    };
    let mut edges: Vec<(usize, usize)> = inst
        .clauses()
        .iter()
        .map(|c| {
            let (a, b) = (c.0[0].var, c.0[1].var);
            (a.min(b), a.max(b))
        })
        .collect();
    edges.sort();
    edges.dedup();
    for (i, j) in edges {
        trigger -= embed(&sx, i, n) * embed(&sx, j, n) * jx;
    }
    let problem = DMatrix::from_diagonal(&DVector::from_vec(sat_diagonal(inst)));
    driver * (1.0 - s) + trigger * (s * (1.0 - s)) + problem * s
}

pub fn dense_spectrum(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn dense_gap(inst: &SatInstance, variant: Variant, s: f64) -> f64 {
    let e = dense_spectrum(&dense_hamiltonian(inst, variant, s));
    e[1] - e[0]
}

/// A random instance with every variable used; no uniqueness requirement.
pub fn random_instance(n: usize, seed: u64) -> SatInstance {
    let mut c = GeneratorCriteria::new(n, seed);
    c.require_unique_solution = false;
    c.clauses = ClauseCount::Range { min: n, max: 2 * n + 2 };
    generate_hard_instance(&c).expect("unconstrained generation succeeds")
}

pub fn hard_instance(n: usize, seed: u64) -> SatInstance {
    generate_hard_instance(&GeneratorCriteria::new(n, seed)).expect("hard instance")
}

pub fn spec(inst: &SatInstance, variant: Variant) -> AnnealSpec {
    AnnealSpec::new(IsingProblem::from_sat(inst), variant)
}

pub fn random_complex(dim: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    (0..dim)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}
