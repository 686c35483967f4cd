//! Extreme-value families for gap statistics, their maximum-likelihood fits
//! and the Landau-Zener push-forward to success probabilities.
//!
//! Every density is normalized, so the amplitude `a` is determined by the
//! shape and scale: `a = k/b` for the Fréchet and (translated) Weibull forms
//! and `a = k·b` for the transformed-translated Weibull.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::quantile_sorted;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// `a (b/x)^{k+1} e^{-(b/x)^k}`, `x > 0`.
    Frechet,
    /// `a (x/b)^{k-1} e^{-(x/b)^k}`, `x > 0`.
    Weibull,
    /// Weibull in `x − μ`, `x > μ`.
    TranslatedWeibull,
    /// Density of `y = 1/x` for translated-Weibull `x`:
    /// `a (1−μy)^{-2} ((1−μy)/(by))^{k+1} e^{-((1−μy)/(by))^k}`.
    TransformedTranslatedWeibull,
}

impl FamilyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyKind::Frechet => "frechet",
            FamilyKind::Weibull => "weibull",
            FamilyKind::TranslatedWeibull => "translated_weibull",
            FamilyKind::TransformedTranslatedWeibull => "transformed_translated_weibull",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionFamily {
    pub kind: FamilyKind,
    pub a: f64,
    pub b: f64,
    pub k: f64,
    pub mu: f64,
}

impl DistributionFamily {
    pub fn new(kind: FamilyKind, k: f64, b: f64, mu: f64) -> Result<Self> {
        if !(k > 0.0 && b > 0.0 && k.is_finite() && b.is_finite() && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "distribution needs k > 0, b > 0 (got k = {k}, b = {b}, μ = {mu})"
            )));
        }
        let mu = match kind {
            FamilyKind::Frechet | FamilyKind::Weibull => 0.0,
            _ => mu,
        };
        if kind == FamilyKind::TransformedTranslatedWeibull && mu < 0.0 {
            // 1/x would leave (0, ∞) for the part of x in (μ, 0)
            return Err(Error::InvalidParameter(format!(
                "transformed-translated Weibull needs μ ≥ 0, got {mu}"
            )));
        }
        let a = match kind {
            FamilyKind::TransformedTranslatedWeibull => k * b,
            _ => k / b,
        };
        Ok(DistributionFamily { kind, a, b, k, mu })
    }

    pub fn frechet(k: f64, b: f64) -> Result<Self> {
        Self::new(FamilyKind::Frechet, k, b, 0.0)
    }

    pub fn weibull(k: f64, b: f64) -> Result<Self> {
        Self::new(FamilyKind::Weibull, k, b, 0.0)
    }

    pub fn translated_weibull(k: f64, b: f64, mu: f64) -> Result<Self> {
        Self::new(FamilyKind::TranslatedWeibull, k, b, mu)
    }

    pub fn transformed_translated_weibull(k: f64, b: f64, mu: f64) -> Result<Self> {
        Self::new(FamilyKind::TransformedTranslatedWeibull, k, b, mu)
    }

    /// Open support interval.
    pub fn support(&self) -> (f64, f64) {
        match self.kind {
            FamilyKind::Frechet | FamilyKind::Weibull => (0.0, f64::INFINITY),
            FamilyKind::TranslatedWeibull => (self.mu, f64::INFINITY),
            FamilyKind::TransformedTranslatedWeibull => {
                (0.0, if self.mu > 0.0 { 1.0 / self.mu } else { f64::INFINITY })
            }
        }
    }

    /// Density; zero outside the support.
    pub fn pdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if !(x > lo && x < hi) {
            return 0.0;
        }
        let (a, b, k, mu) = (self.a, self.b, self.k, self.mu);
        match self.kind {
            FamilyKind::Frechet => {
                let t = b / x;
                a * t.powf(k + 1.0) * (-t.powf(k)).exp()
            }
            FamilyKind::Weibull => weibull_core(a, (x) / b, k),
            FamilyKind::TranslatedWeibull => weibull_core(a, (x - mu) / b, k),
            FamilyKind::TransformedTranslatedWeibull => {
                let u = 1.0 - mu * x;
                let t = u / (b * x);
                a / (u * u) * t.powf(k + 1.0) * (-t.powf(k)).exp()
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let (b, k, mu) = (self.b, self.k, self.mu);
        match self.kind {
            FamilyKind::Frechet => (-(b / x).powf(k)).exp(),
            FamilyKind::Weibull => -(-(x / b).powf(k)).exp_m1(),
            FamilyKind::TranslatedWeibull => -(-((x - mu) / b).powf(k)).exp_m1(),
            FamilyKind::TransformedTranslatedWeibull => (-((1.0 / x - mu) / b).powf(k)).exp(),
        }
    }

    /// Inverse CDF at `u ∈ (0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let (b, k, mu) = (self.b, self.k, self.mu);
        // E = -ln(1 - u) is standard exponential
        let e_upper = -(-u).ln_1p();
        let e_lower = -u.ln();
        match self.kind {
            FamilyKind::Frechet => b * e_lower.powf(-1.0 / k),
            FamilyKind::Weibull => b * e_upper.powf(1.0 / k),
            FamilyKind::TranslatedWeibull => mu + b * e_upper.powf(1.0 / k),
            FamilyKind::TransformedTranslatedWeibull => 1.0 / (mu + b * e_lower.powf(1.0 / k)),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        (0..count)
            .map(|_| {
                let u: f64 = rng.gen();
                self.quantile(u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON))
            })
            .collect()
    }
}

fn weibull_core(a: f64, t: f64, k: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    a * t.powf(k - 1.0) * (-t.powf(k)).exp()
}

pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("median of no values".into()));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&s, 0.5))
}

/// Divides by the sample median; returns the scaled values and the median.
pub fn median_normalize(values: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m = median(values)?;
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidParameter(format!("median {m} cannot normalize")));
    }
    Ok((values.iter().map(|v| v / m).collect(), m))
}

const MIN_FIT_SAMPLES: usize = 50;

/// Maximum-likelihood fit of `kind` to raw samples.
///
/// Fréchet samples are fitted as Weibull reciprocals. The translated forms
/// profile the likelihood over the shift. The transformed form fits a
/// translated Weibull to the reciprocals `ξ = 1/y` and carries the
/// parameters over.
pub fn fit_distribution(samples: &[f64], kind: FamilyKind) -> Result<DistributionFamily> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::Fit(format!(
            "distribution fit needs at least {MIN_FIT_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Fit("non-finite sample".into()));
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    if hi - lo <= 1e-12 * hi.abs().max(1.0) {
        return Err(Error::Fit("all samples are equal".into()));
    }
    let positive = || {
        if lo > 0.0 {
            Ok(())
        } else {
            Err(Error::Fit(format!("{} needs positive samples", kind.as_str())))
        }
    };
    match kind {
        FamilyKind::Weibull => {
            positive()?;
            let (k, b) = weibull_mle(samples)?;
            DistributionFamily::weibull(k, b)
        }
        FamilyKind::Frechet => {
            positive()?;
            let inv: Vec<f64> = samples.iter().map(|x| 1.0 / x).collect();
            let (k, b) = weibull_mle(&inv)?;
            DistributionFamily::frechet(k, 1.0 / b)
        }
        FamilyKind::TranslatedWeibull => {
            let (k, b, mu) = translated_weibull_mle(samples, false)?;
            DistributionFamily::translated_weibull(k, b, mu)
        }
        FamilyKind::TransformedTranslatedWeibull => {
            positive()?;
            let inv: Vec<f64> = samples.iter().map(|x| 1.0 / x).collect();
            let (k, b, mu) = translated_weibull_mle(&inv, true)?;
            DistributionFamily::transformed_translated_weibull(k, b, mu)
        }
    }
}

/// Two-parameter Weibull MLE. The shape solves the profile equation
/// `Σ xᵏ ln x / Σ xᵏ − 1/k − mean(ln x) = 0`, which is increasing in `k`.
fn weibull_mle(x: &[f64]) -> Result<(f64, f64)> {
    // Work with x / max for overflow safety; the shape is scale-free.
    let scale = x.iter().fold(0.0f64, |m, &v| m.max(v));
    let logs: Vec<f64> = x.iter().map(|v| (v / scale).ln()).collect();
    let mean_log = logs.iter().sum::<f64>() / logs.len() as f64;
    let score = |k: f64| {
        let (mut s0, mut s1) = (0.0, 0.0);
        for &l in &logs {
            let w = (k * l).exp();
            s0 += w;
            s1 += w * l;
        }
        s1 / s0 - 1.0 / k - mean_log
    };
    let (mut lo, mut hi) = (1e-3f64, 1e3f64);
    if score(lo) > 0.0 || score(hi) < 0.0 {
        return Err(Error::Fit("Weibull shape outside [1e-3, 1e3]".into()));
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if score(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-14 {
            break;
        }
    }
    let k = (lo * hi).sqrt();
    let mean_pow = logs.iter().map(|&l| (k * l).exp()).sum::<f64>() / logs.len() as f64;
    Ok((k, scale * mean_pow.powf(1.0 / k)))
}

fn weibull_loglik(x: &[f64], k: f64, b: f64) -> f64 {
    let n = x.len() as f64;
    let mut sum_log = 0.0;
    let mut sum_pow = 0.0;
    for &v in x {
        let t = v / b;
        sum_log += t.ln();
        sum_pow += t.powf(k);
    }
    n * (k / b).ln() + (k - 1.0) * sum_log - sum_pow
}

/// Profiles the translated-Weibull likelihood over `μ < min(x)`: a
/// log-spaced scan of the distance `min(x) − μ`, then golden-section
/// refinement around the best scan point. With `nonnegative` the shift is
/// kept in `[0, min(x))`.
fn translated_weibull_mle(x: &[f64], nonnegative: bool) -> Result<(f64, f64, f64)> {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let span = hi - lo;
    let (mut d_min, mut d_max) = (1e-4 * span, 1e2 * span);
    if nonnegative {
        d_max = d_max.min(lo);
        d_min = d_min.min(0.5 * d_max);
    }
    let profile = |log_gap: f64| -> Option<(f64, f64, f64, f64)> {
        let mu = lo - span * log_gap.exp();
        let shifted: Vec<f64> = x.iter().map(|v| v - mu).collect();
        let (k, b) = weibull_mle(&shifted).ok()?;
        let ll = weibull_loglik(&shifted, k, b);
        ll.is_finite().then_some((ll, k, b, mu))
    };
    let (g_lo, g_hi) = ((d_min / span).ln(), (d_max / span).ln());
    let steps = 60;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| g_lo + (g_hi - g_lo) * i as f64 / steps as f64)
        .collect();
    let scored: Vec<(usize, f64)> = grid
        .iter()
        .enumerate()
        .filter_map(|(i, &g)| profile(g).map(|p| (i, p.0)))
        .collect();
    let &(best, _) = scored
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::Fit("translated-Weibull likelihood undefined".into()))?;
    let (mut a, mut c) = (grid[best.saturating_sub(1)], grid[(best + 1).min(steps)]);
    let neg = |g: f64| profile(g).map_or(f64::INFINITY, |p| -p.0);
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = c - INV_PHI * (c - a);
    let mut x2 = a + INV_PHI * (c - a);
    let (mut f1, mut f2) = (neg(x1), neg(x2));
    while c - a > 1e-10 {
        if f1 <= f2 {
            c = x2;
            x2 = x1;
            f2 = f1;
            x1 = c - INV_PHI * (c - a);
            f1 = neg(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (c - a);
            f2 = neg(x2);
        }
    }
    let candidates = [grid[best], x1, x2];
    let (_, k, b, mu) = candidates
        .iter()
        .filter_map(|&g| profile(g))
        .max_by(|p, q| p.0.total_cmp(&q.0))
        .expect("the scan point itself is valid");
    Ok((k, b, mu))
}

/// Largest distance between the empirical CDF of `samples` and `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Density histogram. `density[i]` covers `[edges[i], edges[i+1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    pub rule: String,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Freedman-Diaconis binning (`h = 2·IQR·n^{-1/3}`) unless `bins` is given;
/// capped at 200 bins.
pub fn histogram(values: &[f64], bins: Option<usize>) -> Result<Histogram> {
    if values.len() < 2 {
        return Err(Error::InvalidParameter("histogram needs at least 2 values".into()));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let (lo, hi) = (s[0], s[s.len() - 1]);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidParameter("histogram of non-finite values".into()));
    }
    let (count, rule) = match bins {
        Some(b) if b > 0 => (b, format!("fixed:{b}")),
        Some(_) => return Err(Error::InvalidParameter("zero bins".into())),
        None => {
            let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
            let h = 2.0 * iqr / (s.len() as f64).cbrt();
            let c = if h > 0.0 && hi > lo {
                ((hi - lo) / h).ceil() as usize
            } else {
                1
            };
            (c.clamp(1, 200), "freedman_diaconis".to_string())
        }
    };
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let width = (hi - lo) / count as f64;
    let edges: Vec<f64> = (0..=count).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0usize; count];
    for &v in &s {
        let i = (((v - lo) / width) as usize).min(count - 1);
        counts[i] += 1;
    }
    let n = s.len() as f64;
    Ok(Histogram {
        edges,
        density: counts.iter().map(|&c| c as f64 / (n * width)).collect(),
        rule,
    })
}

/// Success-probability density implied by a gap density through
/// `p = 1 − e^{−γΔ²}`, tabulated on a midpoint grid of `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LzPdf {
    pub p: Vec<f64>,
    pub pdf: Vec<f64>,
    /// Mass of the un-normalized push-forward on the grid.
    pub raw_mass: f64,
}

pub fn lz_map_distribution(gap_family: &DistributionFamily, gamma: f64, grid: usize) -> Result<LzPdf> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("γ = {gamma} must be positive")));
    }
    if grid < 2 {
        return Err(Error::InvalidParameter("grid needs at least 2 points".into()));
    }
    let p: Vec<f64> = (0..grid).map(|i| (i as f64 + 0.5) / grid as f64).collect();
    let raw: Vec<f64> = p
        .iter()
        .map(|&p| {
            let delta = (-(-p).ln_1p() / gamma).sqrt();
            let jacobian = 1.0 / (2.0 * gamma * delta * (1.0 - p));
            gap_family.pdf(delta) * jacobian
        })
        .collect();
    let mass = raw.iter().sum::<f64>() / grid as f64;
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::Unreachable(format!(
            "push-forward density is not integrable on the grid (mass {mass})"
        )));
    }
    Ok(LzPdf {
        p,
        pdf: raw.iter().map(|v| v / mass).collect(),
        raw_mass: mass,
    })
}

/// `γ` such that the mean of `1 − e^{−γΔ²}` over `gaps` equals
/// `target_mean`.
pub fn fit_gamma(gaps: &[f64], target_mean: f64) -> Result<f64> {
    if gaps.is_empty() || gaps.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
        return Err(Error::InvalidParameter("gaps must be finite and non-negative".into()));
    }
    let open = gaps.iter().filter(|&&g| g > 0.0).count() as f64 / gaps.len() as f64;
    if !(target_mean > 0.0 && target_mean < open) {
        return Err(Error::Unreachable(format!(
            "mean success {target_mean} not attainable with {:.1}% open gaps",
            100.0 * open
        )));
    }
    let mean = |log_g: f64| {
        let g = log_g.exp();
        gaps.iter().map(|&d| super::lz_predict(d, g)).sum::<f64>() / gaps.len() as f64
    };
    let (mut lo, mut hi) = (-60.0f64, 60.0f64);
    while mean(lo) > target_mean {
        lo -= 20.0;
    }
    while mean(hi) < target_mean {
        hi += 20.0;
        if hi > 700.0 {
            return Err(Error::Unreachable("γ overflows".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(mid) < target_mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}
