//! Statistics applied to ensembles of gaps and success probabilities.

mod distributions;

pub use distributions::{
    fit_distribution, fit_gamma, histogram, ks_distance, lz_map_distribution, median,
    median_normalize, DistributionFamily, FamilyKind, Histogram, LzPdf,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome of rescaling raw success probabilities to mean one half.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappedSuccess {
    /// Exponent `R` in `P = 1 − (1 − p)^R`.
    pub r: f64,
    pub mapped: Vec<f64>,
    /// At least half the runs already succeed with certainty; `R = 0`.
    pub saturated: bool,
}

/// Finds `R` with `mean(1 − (1 − p)^R) = 1/2`.
///
/// Bisection in `ln R`. The mean rises from the fraction of `p = 1` entries
/// at `R → 0⁺` to the fraction of `p > 0` entries at `R → ∞`; when the
/// former already reaches one half the result is `R = 0` with the saturated
/// flag, and when the latter does not exceed it there is no solution.
pub fn map_success(p_list: &[f64]) -> Result<MappedSuccess> {
    if p_list.is_empty() {
        return Err(Error::InvalidParameter("no success probabilities".into()));
    }
    if let Some(p) = p_list.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")));
    }
    let n = p_list.len() as f64;
    let certain = p_list.iter().filter(|&&p| p == 1.0).count() as f64 / n;
    let possible = p_list.iter().filter(|&&p| p > 0.0).count() as f64 / n;
    if certain >= 0.5 {
        return Ok(MappedSuccess {
            r: 0.0,
            mapped: p_list.iter().map(|&p| if p == 1.0 { 1.0 } else { 0.0 }).collect(),
            saturated: true,
        });
    }
    if possible <= 0.5 {
        return Err(Error::Unreachable(format!(
            "only {:.1}% of runs ever succeed; a mean of 1/2 is out of reach",
            100.0 * possible
        )));
    }
    let logs: Vec<f64> = p_list.iter().map(|&p| (-p).ln_1p()).collect();
    let mean_at = |r: f64| logs.iter().map(|&l| -(r * l).exp_m1()).sum::<f64>() / n - 0.5;

    let (mut lo, mut hi) = (-12.0f64 * std::f64::consts::LN_10, 12.0 * std::f64::consts::LN_10);
    while mean_at(lo.exp()) > 0.0 {
        lo -= 10.0;
    }
    while mean_at(hi.exp()) < 0.0 {
        hi += 10.0;
        if hi > 700.0 {
            return Err(Error::Unreachable("R overflows".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_at(mid.exp()) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let r = (0.5 * (lo + hi)).exp();
    Ok(MappedSuccess {
        r,
        mapped: logs.iter().map(|&l| -(r * l).exp_m1()).collect(),
        saturated: false,
    })
}

/// `ln(1 − P)/ln(1 − p) · T_A` without clamping; `p = 1` gives 0.
pub fn tts_raw(p: f64, t_anneal: f64, p_target: f64) -> Result<f64> {
    check_tts(p, t_anneal, p_target)?;
    if p == 0.0 {
        return Ok(f64::INFINITY);
    }
    if p == 1.0 {
        return Ok(0.0);
    }
    Ok((-p_target).ln_1p() / (-p).ln_1p() * t_anneal)
}

/// Time to solution at confidence `p_target`. At least one anneal is always
/// needed, so `p ≥ p_target` gives `T_A`; `p = 0` gives infinity.
pub fn tts(p: f64, t_anneal: f64, p_target: f64) -> Result<f64> {
    let raw = tts_raw(p, t_anneal, p_target)?;
    Ok(if p >= p_target { t_anneal } else { raw })
}

fn check_tts(p: f64, t_anneal: f64, p_target: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} outside [0, 1]")));
    }
    if !(p_target > 0.0 && p_target < 1.0) {
        return Err(Error::InvalidParameter(format!("target {p_target} outside (0, 1)")));
    }
    if !(t_anneal > 0.0 && t_anneal.is_finite()) {
        return Err(Error::InvalidParameter(format!("annealing time {t_anneal} must be positive")));
    }
    Ok(())
}

/// Linear-interpolation quantile at position `1 + q(n − 1)` of the sorted
/// values. `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 >= sorted.len() {
        sorted[sorted.len() - 1]
    } else if frac == 0.0 || sorted[i] == sorted[i + 1] {
        // also keeps runs of infinite values finite-arithmetic free
        sorted[i]
    } else {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    }
}

/// `D1..D9`.
pub fn deciles(values: &[f64]) -> Result<[f64; 9]> {
    if values.len() < 10 {
        return Err(Error::InvalidParameter(format!(
            "deciles need at least 10 values, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("NaN among decile inputs".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(std::array::from_fn(|i| quantile_sorted(&sorted, (i + 1) as f64 / 10.0)))
}

/// `value = D·e^{rN}` fitted by least squares on `ln value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFit {
    pub d: f64,
    pub r: f64,
    /// RMS residual of `ln value`.
    pub residual: f64,
    pub n_min: f64,
    pub n_max: f64,
    pub points: usize,
}

/// Fits the points with `N ≥ window_min` (all points when `None`).
pub fn fit_exponential(points: &[(f64, f64)], window_min: Option<f64>) -> Result<ExpFit> {
    let used: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(n, _)| window_min.map_or(true, |w| n >= w))
        .collect();
    if used.len() < 3 {
        return Err(Error::Fit(format!(
            "exponential fit needs 3 points in the window, got {}",
            used.len()
        )));
    }
    if let Some(&(n, v)) = used.iter().find(|&&(_, v)| !(v > 0.0 && v.is_finite())) {
        return Err(Error::Fit(format!("value {v} at N = {n} is not positive and finite")));
    }
    let m = used.len() as f64;
    let mx = used.iter().map(|p| p.0).sum::<f64>() / m;
    let my = used.iter().map(|p| p.1.ln()).sum::<f64>() / m;
    let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all points share one N".into()));
    }
    let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum();
    let r = sxy / sxx;
    let ln_d = my - r * mx;
    let residual = (used
        .iter()
        .map(|p| (p.1.ln() - ln_d - r * p.0).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    Ok(ExpFit {
        d: ln_d.exp(),
        r,
        residual,
        n_min: used.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        n_max: used.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
        points: used.len(),
    })
}

/// Smallest `N` of the upper half of the distinct sizes, keeping at least
/// three sizes when that many exist.
pub fn default_window(sizes: &[f64]) -> Option<f64> {
    let mut s = sizes.to_vec();
    s.sort_by(f64::total_cmp);
    s.dedup();
    if s.is_empty() {
        return None;
    }
    let keep = (s.len() / 2).max(3).min(s.len());
    Some(s[s.len() - keep])
}

/// Run-time rate implied by a gap rate when `T_A ∝ Δ⁻²`.
pub fn theoretical_runtime_rate(r_delta: f64) -> f64 {
    2.0 * r_delta.abs()
}

/// `1 − e^{−γΔ²}`.
pub fn lz_predict(delta_min: f64, gamma: f64) -> f64 {
    if delta_min == 0.0 || gamma == 0.0 {
        return 0.0;
    }
    if gamma.is_infinite() {
        return 1.0;
    }
    -(-gamma * delta_min * delta_min).exp_m1()
}
