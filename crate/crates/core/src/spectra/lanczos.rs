//! Lanczos iteration with full reorthogonalization and explicit locking of
//! converged eigenvectors.
//!
//! Each call to [`DeflatedLanczos::next_pair`] runs a fresh Lanczos process
//! in the orthogonal complement of the pairs found so far and returns the
//! lowest eigenpair there. Degenerate levels therefore show up once per
//! multiplicity, which a single Krylov space would miss.

use rand::Rng;

use crate::error::{Error, Result};
use crate::hamiltonian::{Coefficients, Hamiltonian};
use crate::seed::{derive_seed, rng_from_seed};

use super::tridiagonal::{tridiagonal_eigen, Rows};

/// A real symmetric operator.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// Scale for relative tolerances, usually a bound on the operator norm.
    fn scale(&self) -> f64 {
        1.0
    }
}

/// `H(s)` with fixed multipliers.
#[derive(Debug, Clone, Copy)]
pub struct HamiltonianAt<'a> {
    pub ham: &'a Hamiltonian,
    pub coefficients: Coefficients,
}

impl<'a> HamiltonianAt<'a> {
    pub fn new(ham: &'a Hamiltonian, s: f64) -> Self {
        HamiltonianAt {
            ham,
            coefficients: ham.coefficients(s),
        }
    }
}

impl SymmetricOperator for HamiltonianAt<'_> {
    fn dim(&self) -> usize {
        self.ham.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.ham.apply_into(self.coefficients, x, y);
    }

    fn scale(&self) -> f64 {
        self.ham.norm_bound(self.coefficients)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Krylov dimension before an explicit restart.
    pub max_iter: usize,
    pub max_restarts: usize,
    /// Target for the residual estimate, relative to the operator scale.
    pub tol: f64,
    /// Largest accepted true residual, relative to the operator scale.
    pub accept_tol: f64,
    /// How often the tridiagonal problem is solved.
    pub check_every: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            max_iter: 250,
            max_restarts: 20,
            tol: 1e-9,
            accept_tol: 1e-8,
            check_every: 4,
            seed: 0x5eed_1a2c_705a_u64,
        }
    }
}

impl LanczosOptions {
    pub fn for_hamiltonian(_ham: &Hamiltonian, _s: f64) -> Self {
        LanczosOptions::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// `‖H v − λ v‖`, computed explicitly.
    pub residual: f64,
    /// Matrix-vector products spent on this pair.
    pub iterations: usize,
    /// Lowest Ritz value at every check of the last Krylov run.
    pub ritz_history: Vec<f64>,
}

/// Successive lowest eigenpairs of a symmetric operator.
pub struct DeflatedLanczos<O> {
    op: O,
    opts: LanczosOptions,
    locked: Vec<Vec<f64>>,
}

impl<'a> DeflatedLanczos<HamiltonianAt<'a>> {
    pub fn new(ham: &'a Hamiltonian, s: f64, opts: LanczosOptions) -> Self {
        DeflatedLanczos::with_operator(HamiltonianAt::new(ham, s), opts)
    }
}

impl<O: SymmetricOperator> DeflatedLanczos<O> {
    pub fn with_operator(op: O, opts: LanczosOptions) -> Self {
        DeflatedLanczos {
            op,
            opts,
            locked: Vec::new(),
        }
    }

    pub fn found(&self) -> usize {
        self.locked.len()
    }

    /// Lowest eigenpair orthogonal to every pair returned so far.
    pub fn next_pair(&mut self) -> Result<EigenPair> {
        Ok(self.next_pairs(1)?.remove(0))
    }

    /// The `nev` lowest eigenpairs of one Krylov space in the complement of
    /// the pairs found so far. Cheaper than `nev` calls to
    /// [`next_pair`](Self::next_pair), but a single Krylov space holds only
    /// one vector of each degenerate level.
    pub fn next_pairs(&mut self, nev: usize) -> Result<Vec<EigenPair>> {
        let dim = self.op.dim();
        if nev == 0 || self.locked.len() + nev > dim {
            return Err(Error::InvalidParameter(format!(
                "cannot find {nev} more eigenpairs of a {dim}-dimensional operator with {} found",
                self.locked.len()
            )));
        }
        let mut rng = rng_from_seed(derive_seed(self.opts.seed, self.locked.len() as u64));
        let start: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        self.next_pairs_from(nev, start)
    }

    /// As [`next_pairs`](Self::next_pairs) with a caller-supplied start
    /// vector, e.g. eigenvectors at a nearby parameter value.
    pub fn next_pairs_from(&mut self, nev: usize, mut start: Vec<f64>) -> Result<Vec<EigenPair>> {
        let dim = self.op.dim();
        if nev == 0 || self.locked.len() + nev > dim || start.len() != dim {
            return Err(Error::InvalidParameter(format!(
                "cannot find {nev} more eigenpairs of a {dim}-dimensional operator with {} found",
                self.locked.len()
            )));
        }
        let scale = match self.op.scale() {
            s if s.is_finite() && s > 1e-12 => s,
            _ => 1.0,
        };

        let mut spent = 0;
        let mut best_residual = f64::INFINITY;
        for attempt in 0..=self.opts.max_restarts {
            let run = self.krylov_run(start, scale, nev)?;
            spent += run.iterations;
            let worst = run.pairs.iter().map(|p| p.1).fold(0.0, f64::max);
            best_residual = best_residual.min(worst);
            let acceptable = worst <= self.opts.accept_tol * scale;
            if acceptable && (run.converged || attempt == self.opts.max_restarts) {
                let pairs: Vec<EigenPair> = run
                    .pairs
                    .into_iter()
                    .map(|(value, residual, vector)| EigenPair {
                        value,
                        vector,
                        residual,
                        iterations: spent,
                        ritz_history: run.history.clone(),
                    })
                    .collect();
                self.locked.extend(pairs.iter().map(|p| p.vector.clone()));
                return Ok(pairs);
            }
            // Restart from a mix of the wanted Ritz vectors.
            start = vec![0.0; dim];
            for (_, _, v) in &run.pairs {
                axpy(1.0, v, &mut start);
            }
        }
        Err(Error::NoConvergence {
            iterations: spent,
            residual: best_residual,
        })
    }

    fn krylov_run(&self, start: Vec<f64>, scale: f64, nev: usize) -> Result<KrylovRun> {
        let dim = self.op.dim();
        let free = dim - self.locked.len();
        let m_max = self.opts.max_iter.min(free).max(nev);

        let mut q = start;
        orthogonalize(&mut q, &self.locked);
        orthogonalize(&mut q, &self.locked);
        let norm = dot(&q, &q).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidParameter("start vector lies in the locked space".into()));
        }
        scale_in_place(&mut q, 1.0 / norm);

        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m_max);
        let mut alpha = Vec::with_capacity(m_max);
        let mut beta: Vec<f64> = Vec::with_capacity(m_max);
        let mut history = Vec::new();
        let mut w = vec![0.0; dim];
        let mut converged = false;
        let breakdown = 1e-13 * scale;

        for j in 0..m_max {
            basis.push(q);
            let qj = &basis[j];
            self.op.apply(qj, &mut w);
            let a = dot(qj, &w);
            axpy(-a, qj, &mut w);
            if j > 0 {
                axpy(-beta[j - 1], &basis[j - 1], &mut w);
            }
            // A second pass only when the first removed most of the vector.
            let before = dot(&w, &w).sqrt();
            orthogonalize(&mut w, &self.locked);
            orthogonalize(&mut w, &basis);
            let mut b = dot(&w, &w).sqrt();
            if b < 0.7 * before {
                orthogonalize(&mut w, &self.locked);
                orthogonalize(&mut w, &basis);
                b = dot(&w, &w).sqrt();
            }
            alpha.push(a);

            let last = j + 1 == m_max;
            let due = (j + 1) % self.opts.check_every.max(1) == 0;
            if j + 1 >= nev && (due || b <= breakdown || last) {
                let eig = tridiagonal_eigen(&alpha, &beta, Rows::Last)?;
                history.push(eig.values[0]);
                let estimate = (0..nev)
                    .map(|i| b * eig.rows[0][i].abs())
                    .fold(0.0, f64::max);
                if b <= breakdown || estimate <= self.opts.tol * scale {
                    converged = true;
                    break;
                }
            }
            if last {
                break;
            }
            beta.push(b);
            scale_in_place(&mut w, 1.0 / b);
            q = std::mem::replace(&mut w, vec![0.0; dim]);
        }

        let m = alpha.len();
        let eig = tridiagonal_eigen(&alpha, &beta[..m - 1], Rows::All)?;
        let mut pairs = Vec::with_capacity(nev);
        let mut hv = vec![0.0; dim];
        for i in 0..nev {
            let y = eig.vector(i);
            let mut v = vec![0.0; dim];
            for (coef, qi) in y.iter().zip(&basis) {
                axpy(*coef, qi, &mut v);
            }
            orthogonalize(&mut v, &self.locked);
            for (_, _, u) in &pairs {
                orthogonalize(&mut v, std::slice::from_ref(u));
            }
            let norm = dot(&v, &v).sqrt();
            scale_in_place(&mut v, 1.0 / norm);

            self.op.apply(&v, &mut hv);
            let value = dot(&v, &hv);
            axpy(-value, &v, &mut hv);
            pairs.push((value, dot(&hv, &hv).sqrt(), v));
        }

        Ok(KrylovRun {
            pairs,
            iterations: m + nev,
            history,
            converged,
        })
    }
}

struct KrylovRun {
    /// `(value, residual, vector)` per wanted pair.
    pairs: Vec<(f64, f64, Vec<f64>)>,
    iterations: usize,
    history: Vec<f64>,
    converged: bool,
}

/// The `k` lowest eigenpairs of `op`, ascending.
pub fn lowest_pairs<O: SymmetricOperator>(
    op: O,
    k: usize,
    opts: LanczosOptions,
) -> Result<Vec<EigenPair>> {
    if k == 0 || k > op.dim() {
        return Err(Error::InvalidParameter(format!(
            "cannot compute {k} eigenpairs of a {}-dimensional operator",
            op.dim()
        )));
    }
    let mut solver = DeflatedLanczos::with_operator(op, opts);
    let mut pairs = (0..k).map(|_| solver.next_pair()).collect::<Result<Vec<_>>>()?;
    // Locking finds pairs in order up to rounding; make it exact.
    pairs.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(pairs)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
fn scale_in_place(x: &mut [f64], a: f64) {
    x.iter_mut().for_each(|v| *v *= a);
}

fn orthogonalize(w: &mut [f64], against: &[Vec<f64>]) {
    for v in against {
        let c = dot(v, w);
        axpy(-c, v, w);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    struct Dense(DMatrix<f64>);

    impl SymmetricOperator for Dense {
        fn dim(&self) -> usize {
            self.0.nrows()
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            let r = &self.0 * nalgebra::DVector::from_column_slice(x);
            y.copy_from_slice(r.as_slice());
        }
        fn scale(&self) -> f64 {
            self.0.norm()
        }
    }

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rng_from_seed(seed);
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        (&a + a.transpose()) * 0.5
    }

    fn oracle(m: &DMatrix<f64>) -> Vec<f64> {
        let mut v: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn random_dense_lowest_four() {
        let m = random_symmetric(120, 3);
        let expected = oracle(&m);
        let pairs = lowest_pairs(Dense(m.clone()), 4, LanczosOptions::default()).unwrap();
        for (p, e) in pairs.iter().zip(&expected) {
            assert!((p.value - e).abs() < 1e-10, "{} vs {}", p.value, e);
            assert!(p.residual < 1e-8 * m.norm());
        }
        for a in 0..4 {
            for b in 0..4 {
                let d = dot(&pairs[a].vector, &pairs[b].vector);
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn finds_multiplicity() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            1.0, 0.0, 3.0, 0.0, 2.0, 0.0,
        ]));
        let pairs = lowest_pairs(Dense(m), 4, LanczosOptions::default()).unwrap();
        let values: Vec<f64> = pairs.iter().map(|p| p.value).collect();
        for (v, e) in values.iter().zip([0.0, 0.0, 0.0, 1.0]) {
            assert!((v - e).abs() < 1e-12, "{values:?}");
        }
    }

    #[test]
    fn ritz_values_decrease() {
        let m = random_symmetric(200, 11);
        let opts = LanczosOptions {
            check_every: 1,
            ..LanczosOptions::default()
        };
        let mut solver = DeflatedLanczos::with_operator(Dense(m), opts);
        let pair = solver.next_pair().unwrap();
        assert!(pair.ritz_history.len() > 5);
        for w in pair.ritz_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} then {}", w[0], w[1]);
        }
    }

    #[test]
    fn restarts_recover_from_tiny_krylov_space() {
        let m = random_symmetric(80, 5);
        let expected = oracle(&m);
        let opts = LanczosOptions {
            max_iter: 12,
            max_restarts: 400,
            ..LanczosOptions::default()
        };
        let pairs = lowest_pairs(Dense(m), 2, opts).unwrap();
        assert!((pairs[0].value - expected[0]).abs() < 1e-9);
        assert!((pairs[1].value - expected[1]).abs() < 1e-9);
    }

    #[test]
    fn reports_non_convergence() {
        let m = random_symmetric(80, 5);
        let opts = LanczosOptions {
            max_iter: 3,
            max_restarts: 1,
            ..LanczosOptions::default()
        };
        assert!(matches!(
            lowest_pairs(Dense(m), 1, opts),
            Err(Error::NoConvergence { .. })
        ));
    }
}
