//! Real-time evolution through the anneal with the symmetric second-order
//! product formula
//!
//! ```text
//! U(s_mid) = exp(-iτB Z/2) · exp(-iτ[A X₁ + g X₂]) · exp(-iτB Z/2)
//! ```
//!
//! evaluated at the midpoint of every step. All X-type terms commute, so the
//! middle factor is exact. It is applied either as a product of one- and
//! two-qubit rotations or, equivalently, as a diagonal phase between two
//! Walsh-Hadamard transforms. The second is several times faster. Adjacent
//! Z half-steps are merged.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{AnnealSpec, Hamiltonian, Schedule, StateVector, Variant};
use crate::ising::IsingProblem;
use crate::spectra::{DeflatedLanczos, LanczosOptions};

/// How the commuting X-type exponential is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XMethod {
    /// Per-term one- and two-qubit rotations.
    Rotations,
    /// Phase table in the Hadamard basis.
    #[default]
    Hadamard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionParams {
    pub t_anneal: f64,
    pub n_steps: usize,
    /// Values of `s` at which to record `|⟨0(s)|ψ⟩|²`; rounded to the nearest
    /// step boundary.
    #[serde(default)]
    pub record_overlaps: Vec<f64>,
    #[serde(default)]
    pub x_method: XMethod,
}

impl EvolutionParams {
    /// Uses [`default_steps`].
    pub fn new(t_anneal: f64) -> Self {
        EvolutionParams {
            t_anneal,
            n_steps: default_steps(t_anneal),
            record_overlaps: Vec::new(),
            x_method: XMethod::default(),
        }
    }

    pub fn with_steps(mut self, n_steps: usize) -> Self {
        self.n_steps = n_steps;
        self
    }

    pub fn tau(&self) -> f64 {
        self.t_anneal / self.n_steps as f64
    }
}

/// `max(1000, ⌈100·T_A⌉)`, i.e. `τ ≤ 0.01`.
pub fn default_steps(t_anneal: f64) -> usize {
    ((100.0 * t_anneal).ceil() as usize).max(1000)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapPoint {
    pub s: f64,
    pub ground_overlap: f64,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub state: StateVector,
    pub overlaps: Vec<OverlapPoint>,
    /// `|‖ψ‖ − 1|` before the final renormalization.
    pub norm_drift: f64,
}

/// Largest tolerated norm drift; beyond it the run is treated as corrupted.
const MAX_NORM_DRIFT: f64 = 1e-6;

/// Evolves `|+⟩^⊗N` under `H(s)` for the whole anneal.
pub fn evolve(spec: &AnnealSpec, params: &EvolutionParams) -> Result<Evolution> {
    let ham = Hamiltonian::build(spec)?;
    evolve_from(&ham, params, StateVector::uniform(ham.n_spins()))
}

pub fn evolve_from(
    ham: &Hamiltonian,
    params: &EvolutionParams,
    initial: StateVector,
) -> Result<Evolution> {
    let mut prop = Propagator::new(ham, params, initial)?;
    let n = params.n_steps;
    let mut marks: Vec<(usize, f64)> = params
        .record_overlaps
        .iter()
        .map(|&s| {
            if (0.0..=1.0).contains(&s) {
                Ok(((s * n as f64).round() as usize, s))
            } else {
                Err(Error::InvalidParameter(format!("overlap point s = {s} outside [0, 1]")))
            }
        })
        .collect::<Result<_>>()?;
    marks.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let mut overlaps = Vec::with_capacity(marks.len());
    let mut next_mark = 0;
    loop {
        while next_mark < marks.len() && marks[next_mark].0 == prop.steps_done() {
            let s = prop.s_now();
            let psi = prop.state_now();
            overlaps.push(OverlapPoint {
                s,
                ground_overlap: ground_overlap(ham, s, &psi)?,
            });
            next_mark += 1;
        }
        if prop.steps_done() == n {
            break;
        }
        let target = marks.get(next_mark).map_or(n, |m| m.0);
        prop.advance(target - prop.steps_done())?;
    }
    let (state, norm_drift) = prop.finish()?;
    Ok(Evolution {
        state,
        overlaps,
        norm_drift,
    })
}

fn ground_overlap(ham: &Hamiltonian, s: f64, psi: &StateVector) -> Result<f64> {
    let c = ham.coefficients(s);
    if c.x == 0.0 && c.xx == 0.0 {
        // Diagonal: the ground level may be degenerate, so sum over it.
        let z = &ham.terms().z_diagonal;
        let e0 = z.iter().fold(f64::INFINITY, |m, &e| m.min(c.z * e));
        return Ok(z
            .iter()
            .enumerate()
            .filter(|(_, &e)| c.z * e - e0 <= 1e-12 * e0.abs().max(1.0))
            .map(|(b, _)| psi.probability(b))
            .sum());
    }
    let mut solver = DeflatedLanczos::new(ham, s, LanczosOptions::for_hamiltonian(ham, s));
    let ground = solver.next_pair()?;
    Ok(psi.overlap_with_real(&ground.vector))
}

/// `|⟨ground_index|ψ⟩|²`.
pub fn success_probability(psi: &StateVector, ground_index: usize) -> f64 {
    psi.probability(ground_index)
}

/// Step-by-step integrator.
pub struct Propagator<'a> {
    ham: &'a Hamiltonian,
    n_steps: usize,
    tau: f64,
    done: usize,
    /// Z angle still owed from the previous step's closing half.
    pending_z: f64,
    psi: Vec<Complex64>,
    z_levels: LevelTable,
    x_levels: Option<LevelTable>,
    phases: Vec<Complex64>,
}

impl<'a> Propagator<'a> {
    pub fn new(ham: &'a Hamiltonian, params: &EvolutionParams, initial: StateVector) -> Result<Self> {
        if params.n_steps == 0 {
            return Err(Error::InvalidParameter("n_steps must be at least 1".into()));
        }
        if !(params.t_anneal >= 0.0 && params.t_anneal.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "annealing time {} must be finite and non-negative",
                params.t_anneal
            )));
        }
        if initial.dim() != ham.dim() {
            return Err(Error::LengthMismatch {
                expected: ham.dim(),
                got: initial.dim(),
            });
        }
        let terms = ham.terms();
        let z_levels = LevelTable::build(terms.z_diagonal.iter().map(|&e| [e, 0.0]));
        let x_levels = match params.x_method {
            XMethod::Rotations => None,
            XMethod::Hadamard => Some(LevelTable::build((0..ham.dim()).map(|b| {
                // σ^x eigenvalue of site i in Hadamard basis state b
                let x = |i: usize| if (b >> i) & 1 == 0 { 1.0 } else { -1.0 };
                let single: f64 = terms.single_x.iter().enumerate().map(|(i, c)| c * x(i)).sum();
                let pair: f64 = terms.pair_x.iter().map(|p| p.coefficient * x(p.i) * x(p.j)).sum();
                [single, pair]
            }))),
        };
        Ok(Propagator {
            ham,
            n_steps: params.n_steps,
            tau: params.tau(),
            done: 0,
            pending_z: 0.0,
            psi: initial.into_amplitudes(),
            z_levels,
            x_levels,
            phases: Vec::new(),
        })
    }

    pub fn steps_done(&self) -> usize {
        self.done
    }

    pub fn s_now(&self) -> f64 {
        self.done as f64 / self.n_steps as f64
    }

    /// The state at the current step boundary.
    pub fn state_now(&self) -> StateVector {
        let mut psi = self.psi.clone();
        if self.pending_z != 0.0 {
            self.z_levels
                .apply(&mut psi, &mut Vec::new(), [self.pending_z, 0.0], 1.0);
        }
        StateVector::from_amplitudes(psi).expect("unitary evolution keeps a unit vector")
    }

    /// Runs `count` further steps.
    pub fn advance(&mut self, count: usize) -> Result<()> {
        let count = count.min(self.n_steps - self.done);
        let dim = self.psi.len() as f64;
        for _ in 0..count {
            let s = (self.done as f64 + 0.5) / self.n_steps as f64;
            let c = self.ham.coefficients(s);
            let half_z = 0.5 * self.tau * c.z;
            let z_angle = self.pending_z + half_z;
            if z_angle != 0.0 {
                self.z_levels.apply(&mut self.psi, &mut self.phases, [z_angle, 0.0], 1.0);
            }
            let (ax, axx) = (self.tau * c.x, self.tau * c.xx);
            if ax != 0.0 || axx != 0.0 {
                match &self.x_levels {
                    Some(table) => {
                        fwht(&mut self.psi);
                        table.apply(&mut self.psi, &mut self.phases, [ax, axx], 1.0 / dim);
                        fwht(&mut self.psi);
                    }
                    None => self.rotate(ax, axx),
                }
            }
            self.pending_z = half_z;
            self.done += 1;
            if self.done % 4096 == 0 && !self.psi.iter().all(|a| a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::NonFinite { step: self.done });
            }
        }
        Ok(())
    }

    fn rotate(&mut self, ax: f64, axx: f64) {
        let terms = self.ham.terms();
        for (i, &coef) in terms.single_x.iter().enumerate() {
            rotate_pairs(&mut self.psi, 1 << i, ax * coef);
        }
        for p in &terms.pair_x {
            rotate_pairs(&mut self.psi, (1 << p.i) | (1 << p.j), axx * p.coefficient);
        }
    }

    /// Applies the owed half step and returns the normalized final state
    /// with its norm drift.
    pub fn finish(mut self) -> Result<(StateVector, f64)> {
        self.advance(self.n_steps - self.done)?;
        if self.pending_z != 0.0 {
            self.z_levels
                .apply(&mut self.psi, &mut self.phases, [self.pending_z, 0.0], 1.0);
            self.pending_z = 0.0;
        }
        let norm = self.psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(Error::NonFinite { step: self.done });
        }
        let drift = (norm - 1.0).abs();
        if drift > MAX_NORM_DRIFT {
            return Err(Error::NonFinite { step: self.done });
        }
        Ok((StateVector::from_amplitudes(self.psi)?, drift))
    }
}

/// `exp(-iφ P)` for the bit-flip operator `P: |b⟩ ↦ |b ⊕ mask⟩`.
fn rotate_pairs(psi: &mut [Complex64], mask: usize, phi: f64) {
    if phi == 0.0 {
        return;
    }
    let (c, s) = (phi.cos(), phi.sin());
    let minus_is = Complex64::new(0.0, -s);
    let low = 1usize << mask.trailing_zeros();
    for b in 0..psi.len() {
        // visit each pair once, from the member with the lowest flipped bit clear
        if b & low == 0 {
            let partner = b ^ mask;
            let (a0, a1) = (psi[b], psi[partner]);
            psi[b] = a0 * c + a1 * minus_is;
            psi[partner] = a1 * c + a0 * minus_is;
        }
    }
}

/// Unnormalized in-place Walsh-Hadamard transform.
fn fwht(x: &mut [Complex64]) {
    let n = x.len();
    let mut h = 1;
    while h < n {
        for block in x.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*a, *b);
                *a = u + v;
                *b = u - v;
            }
        }
        h *= 2;
    }
}

/// Distinct values of a two-component diagonal, so each step needs one
/// complex exponential per level instead of one per amplitude.
#[derive(Debug, Clone)]
struct LevelTable {
    level_of: Vec<u32>,
    levels: Vec<[f64; 2]>,
}

impl LevelTable {
    fn build(values: impl Iterator<Item = [f64; 2]>) -> Self {
        let mut index: HashMap<[u64; 2], u32> = HashMap::new();
        let mut levels = Vec::new();
        let level_of = values
            .map(|v| {
                *index.entry([v[0].to_bits(), v[1].to_bits()]).or_insert_with(|| {
                    levels.push(v);
                    (levels.len() - 1) as u32
                })
            })
            .collect();
        LevelTable { level_of, levels }
    }

    /// `ψ_b ← scale · exp(-i(θ·v_b)) ψ_b`.
    fn apply(&self, psi: &mut [Complex64], phases: &mut Vec<Complex64>, theta: [f64; 2], scale: f64) {
        phases.clear();
        phases.extend(
            self.levels
                .iter()
                .map(|v| Complex64::from_polar(scale, -(theta[0] * v[0] + theta[1] * v[1]))),
        );
        for (a, &l) in psi.iter_mut().zip(&self.level_of) {
            *a *= phases[l as usize];
        }
    }
}

/// One anneal of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: usize,
    pub n: usize,
    pub variant: Variant,
    pub t_anneal: f64,
    pub n_steps: usize,
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlaps: Option<Vec<OverlapPoint>>,
    pub wall_time_s: f64,
}

/// Anneals `spec` and scores the final state against `ground_index`.
pub fn run_instance(
    instance: usize,
    spec: &AnnealSpec,
    ground_index: usize,
    params: &EvolutionParams,
) -> Result<RunRecord> {
    let start = Instant::now();
    let evo = evolve(spec, params)?;
    Ok(RunRecord {
        instance,
        n: spec.n_spins(),
        variant: spec.variant,
        t_anneal: params.t_anneal,
        n_steps: params.n_steps,
        p: success_probability(&evo.state, ground_index),
        overlaps: (!params.record_overlaps.is_empty()).then_some(evo.overlaps),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// `s,ground_overlap` rows.
pub fn overlap_csv(points: &[OverlapPoint]) -> String {
    let mut out = String::from("s,ground_overlap\n");
    for p in points {
        writeln!(out, "{},{}", p.s, p.ground_overlap).unwrap();
    }
    out
}

/// Sweep `h(t) = c·t` over `t ∈ [-t_max, t_max]` at fixed `Γ`, written as an
/// anneal with `s = (t + t_max) / 2t_max`.
#[derive(Debug, Clone, Copy)]
pub struct LandauZenerSchedule {
    pub c: f64,
    pub t_max: f64,
}

impl Schedule for LandauZenerSchedule {
    fn a(&self, _s: f64) -> f64 {
        1.0
    }
    fn b(&self, s: f64) -> f64 {
        self.c * self.t_max * (2.0 * s - 1.0)
    }
    fn da(&self, _s: f64) -> f64 {
        0.0
    }
    fn db(&self, _s: f64) -> f64 {
        2.0 * self.c * self.t_max
    }
    fn name(&self) -> &str {
        "landau_zener"
    }
}

/// Probability of ending in the instantaneous ground state of
/// `H = -Γσ^x - h(t)σ^z` after a linear sweep, starting in the ground state
/// at `-t_max`. `n_steps = None` picks a step fine enough for `h(±t_max)`.
pub fn landau_zener_demo(gamma: f64, c: f64, t_max: f64, n_steps: Option<usize>) -> Result<f64> {
    if !(c > 0.0 && t_max > 0.0 && gamma >= 0.0) {
        return Err(Error::InvalidParameter(
            "sweep needs c > 0, t_max > 0 and Γ ≥ 0".into(),
        ));
    }
    let schedule = LandauZenerSchedule { c, t_max };
    // -σ^z: bit 1 (spin up) has energy -1
    let problem = IsingProblem::new(vec![1.0], [], 0.0)?;
    let spec = AnnealSpec::new(problem, Variant::Standard)
        .with_transverse_field(gamma)
        .with_schedule(Arc::new(schedule));
    let ham = Hamiltonian::build(&spec)?;

    let t_anneal = 2.0 * t_max;
    let h_max = c * t_max;
    let steps = n_steps.unwrap_or_else(|| {
        let scale = h_max.max(gamma).max(1.0);
        ((t_anneal * scale * 20.0).ceil() as usize).max(10_000)
    });

    // Ground state of [[h, -Γ], [-Γ, -h]] at h = -h_max.
    let d = -h_max;
    let r = d.hypot(gamma);
    let (g0, g1) = if gamma == 0.0 { (1.0, 0.0) } else { (gamma, d + r) };
    let initial = StateVector::from_amplitudes(vec![Complex64::new(g0, 0.0), Complex64::new(g1, 0.0)])?;

    let params = EvolutionParams {
        t_anneal,
        n_steps: steps,
        record_overlaps: Vec::new(),
        x_method: XMethod::Rotations,
    };
    let evo = evolve_from(&ham, &params, initial)?;
    Ok(success_probability(&evo.state, 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::parse_dimacs;
    use crate::hamiltonian::Variant;

    fn spec4(variant: Variant) -> AnnealSpec {
        let inst = parse_dimacs("p cnf 4 5\n1 -2 0\n2 3 0\n-3 4 0\n-1 -4 0\n1 3 0").unwrap();
        AnnealSpec::new(IsingProblem::from_sat(&inst), variant)
    }

    #[test]
    fn fwht_is_involution_up_to_scale() {
        let mut x: Vec<Complex64> = (0..16).map(|k| Complex64::new(k as f64, -(k as f64) / 3.0)).collect();
        let orig = x.clone();
        fwht(&mut x);
        fwht(&mut x);
        for (a, b) in x.iter().zip(&orig) {
            assert!((a / 16.0 - b).norm() < 1e-13);
        }
    }

    #[test]
    fn zero_duration_is_identity() {
        let sp = spec4(Variant::FerroTrigger);
        let evo = evolve(&sp, &EvolutionParams::new(0.0).with_steps(10)).unwrap();
        let uniform = StateVector::uniform(4);
        assert!((evo.state.inner(&uniform).norm() - 1.0).abs() < 1e-14);
        assert!((success_probability(&evo.state, 3) - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_success_probability() {
        let psi = StateVector::uniform(10);
        assert!((success_probability(&psi, 123) - 2f64.powi(-10)).abs() < 1e-18);
        assert_eq!(success_probability(&StateVector::basis(3, 5), 5), 1.0);
    }

    #[test]
    fn both_x_routes_agree() {
        for variant in Variant::ALL {
            let sp = spec4(variant);
            let mut p = EvolutionParams::new(5.0).with_steps(200);
            let a = evolve(&sp, &p).unwrap().state;
            p.x_method = XMethod::Rotations;
            let b = evolve(&sp, &p).unwrap().state;
            let diff: f64 = a
                .amplitudes()
                .iter()
                .zip(b.amplitudes())
                .map(|(x, y)| (x - y).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(diff < 1e-12, "{variant}: {diff}");
        }
    }

    #[test]
    fn unitary_every_step() {
        let ham = Hamiltonian::build(&spec4(Variant::AntiferroTrigger)).unwrap();
        let params = EvolutionParams::new(3.0).with_steps(50);
        let mut prop = Propagator::new(&ham, &params, StateVector::uniform(4)).unwrap();
        for _ in 0..50 {
            prop.advance(1).unwrap();
            let n: f64 = prop.psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn commuting_limit_is_exact() {
        #[derive(Debug)]
        struct DriverOnly;
        impl Schedule for DriverOnly {
            fn a(&self, s: f64) -> f64 {
                1.0 + s
            }
            fn b(&self, _s: f64) -> f64 {
                0.0
            }
        }
        let sp = spec4(Variant::Standard).with_schedule(Arc::new(DriverOnly));
        let ham = Hamiltonian::build(&sp).unwrap();
        let t = 2.0;
        // ∫ A dt over the anneal = t · 1.5
        let phi = -1.5 * t;
        let mut want = StateVector::basis(4, 6).into_amplitudes();
        for i in 0..4 {
            rotate_pairs(&mut want, 1 << i, phi);
        }
        for steps in [1, 3, 17] {
            let params = EvolutionParams::new(t).with_steps(steps);
            let got = evolve_from(&ham, &params, StateVector::basis(4, 6)).unwrap().state;
            for (a, b) in got.amplitudes().iter().zip(&want) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn overlap_trace_endpoints() {
        let sp = spec4(Variant::Standard);
        let mut params = EvolutionParams::new(1.0).with_steps(100);
        params.record_overlaps = vec![0.0, 0.5, 1.0];
        let evo = evolve(&sp, &params).unwrap();
        assert_eq!(evo.overlaps.len(), 3);
        assert!((evo.overlaps[0].ground_overlap - 1.0).abs() < 1e-10);
        let ground = IsingProblem::from_sat(&parse_dimacs("p cnf 4 5\n1 -2 0\n2 3 0\n-3 4 0\n-1 -4 0\n1 3 0").unwrap());
        let d = ground.diagonal();
        let p_ground: f64 = d
            .iter()
            .enumerate()
            .filter(|(_, &e)| e == 0.0)
            .map(|(b, _)| evo.state.probability(b))
            .sum();
        assert!((evo.overlaps[2].ground_overlap - p_ground).abs() < 1e-12);
        assert!(overlap_csv(&evo.overlaps).starts_with("s,ground_overlap\n"));
    }

    #[test]
    fn landau_zener_limits() {
        assert_eq!(landau_zener_demo(0.0, 1.0, 20.0, Some(2000)).unwrap(), 0.0);
        let slow = landau_zener_demo(1.0, 0.05, 400.0, None).unwrap();
        assert!(slow > 0.999, "{slow}");
    }

    #[test]
    fn rejects_bad_params() {
        let sp = spec4(Variant::Standard);
        assert!(evolve(&sp, &EvolutionParams::new(1.0).with_steps(0)).is_err());
        assert!(evolve(&sp, &EvolutionParams::new(-1.0)).is_err());
        let mut p = EvolutionParams::new(1.0);
        p.record_overlaps = vec![1.5];
        assert!(evolve(&sp, &p).is_err());
    }
}
