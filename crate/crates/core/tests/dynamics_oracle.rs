mod common;

use common::*;
use qa2sat_core::dynamics::{evolve, landau_zener_demo, success_probability, EvolutionParams, XMethod};
use qa2sat_core::hamiltonian::{AnnealSpec, StateVector, Variant};
use qa2sat_core::ising::IsingProblem;
use qa2sat_core::spectra::min_gap;
use std::time::Instant;

fn distance(a: &StateVector, b: &StateVector) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn canonical() -> AnnealSpec {
    AnnealSpec::new(IsingProblem::new(vec![1.0], [], 0.0).unwrap(), Variant::Standard)
}

#[test]
fn canonical_matches_fine_reference() {
    let sp = canonical();
    let coarse = evolve(&sp, &EvolutionParams::new(10.0).with_steps(10_000)).unwrap();
    let fine = evolve(&sp, &EvolutionParams::new(10.0).with_steps(1_000_000)).unwrap();
    assert!(distance(&coarse.state, &fine.state) < 1e-6);
}

#[test]
fn second_order_convergence() {
    let inst = hard_instance(4, 21);
    for variant in Variant::ALL {
        let sp = spec(&inst, variant);
        let n = 400;
        let reference = evolve(&sp, &EvolutionParams::new(10.0).with_steps(100 * n)).unwrap();
        let e1 = distance(&evolve(&sp, &EvolutionParams::new(10.0).with_steps(n)).unwrap().state, &reference.state);
        let e2 = distance(&evolve(&sp, &EvolutionParams::new(10.0).with_steps(2 * n)).unwrap().state, &reference.state);
        let ratio = e1 / e2;
        assert!((3.5..=4.5).contains(&ratio), "{variant}: {e1} / {e2} = {ratio}");
    }
}

#[test]
fn routes_agree_on_generated_instance() {
    let inst = hard_instance(7, 4);
    for variant in Variant::ALL {
        let sp = spec(&inst, variant);
        let mut p = EvolutionParams::new(20.0).with_steps(2000);
        let a = evolve(&sp, &p).unwrap();
        p.x_method = XMethod::Rotations;
        let b = evolve(&sp, &p).unwrap();
        assert!(distance(&a.state, &b.state) < 1e-10);
    }
}

#[test]
fn adiabatic_limit_on_large_gap_instance() {
    // first N=6 hard instance whose gap is comfortably open
    let (inst, gap) = (0..200)
        .map(|seed| hard_instance(6, seed))
        .map(|inst| {
            let g = min_gap(&spec(&inst, Variant::Standard)).unwrap().0;
            (inst, g)
        })
        .find(|(_, g)| *g >= 0.5)
        .expect("an open-gap instance");
    let ground = inst.brute_force_solve().unwrap()[0] as usize;
    let evo = evolve(&spec(&inst, Variant::Standard), &EvolutionParams::new(1000.0)).unwrap();
    let p = success_probability(&evo.state, ground);
    assert!(p > 0.99, "gap {gap}: p = {p}");
}

#[test]
fn landau_zener_formula() {
    let t_max = 200.0 / std::f64::consts::PI;
    let p = landau_zener_demo(1.0, std::f64::consts::PI, t_max, None).unwrap();
    let formula = 1.0 - (-1.0f64).exp();
    assert!((p - formula).abs() < 0.01, "{p} vs {formula}");
}

#[test]
#[ignore]
fn anneal_timing() {
    for n in [8, 10, 12] {
        let inst = hard_instance(n, 1);
        for method in [XMethod::Hadamard, XMethod::Rotations] {
            let mut p = EvolutionParams::new(100.0);
            p.x_method = method;
            let t = Instant::now();
            evolve(&spec(&inst, Variant::FerroTrigger), &p).unwrap();
            eprintln!("N={n} {method:?} T_A=100: {:?}", t.elapsed());
        }
    }
}
