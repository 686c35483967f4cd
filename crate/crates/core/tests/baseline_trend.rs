mod common;

use qa2sat_core::baseline::{simulated_anneal, SaParams};
use qa2sat_core::ising::IsingProblem;

/// Instances with more first-excited states trap short SA runs at least as
/// often as instances with few of them.
#[test]
fn success_fraction_does_not_rise_with_excited_degeneracy() {
    let mut rows: Vec<(u64, f64)> = (0..120)
        .map(|seed| {
            let inst = common::hard_instance(10, 1000 + seed);
            let deg = inst.classical_spectrum().unwrap().first_excited_degeneracy;
            let prob = IsingProblem::from_sat(&inst);
            let res = simulated_anneal(&prob, &SaParams::new(4, 200, seed)).unwrap();
            (deg, res.success_fraction)
        })
        .collect();
    rows.sort_by_key(|r| r.0);
    let third = rows.len() / 3;
    let mean = |s: &[(u64, f64)]| s.iter().map(|r| r.1).sum::<f64>() / s.len() as f64;
    let low = mean(&rows[..third]);
    let high = mean(&rows[rows.len() - third..]);
    println!(
        "degeneracy {}..{} vs {}..{}: mean success {low:.3} vs {high:.3}",
        rows[0].0,
        rows[third - 1].0,
        rows[rows.len() - third].0,
        rows[rows.len() - 1].0
    );
    assert!(high <= low + 0.02, "low {low} high {high}");
}
