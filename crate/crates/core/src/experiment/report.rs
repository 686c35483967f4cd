//! Aggregation of stage results into plot-ready tables.

use std::collections::BTreeMap;

use super::store::{num, opt, Table};
use super::{ExperimentConfig, GapRecord, ManifestEntry, SaRecord};
use crate::analysis::{
    default_window, deciles, fit_distribution, fit_exponential, fit_gamma, histogram, ks_distance,
    lz_map_distribution, map_success, median_normalize, theoretical_runtime_rate, tts,
    DistributionFamily, FamilyKind, LzPdf,
};
use crate::dynamics::RunRecord;
use crate::hamiltonian::Variant;

/// Stage outputs as read back from disk.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub manifest: Vec<ManifestEntry>,
    pub gaps: Vec<GapRecord>,
    pub runs: Vec<RunRecord>,
    pub sa: Vec<SaRecord>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub tables: Vec<Table>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Gap family used for each variant's median-normalized histogram.
pub fn gap_family(v: Variant) -> FamilyKind {
    match v {
        Variant::Standard => FamilyKind::Frechet,
        Variant::FerroTrigger => FamilyKind::TransformedTranslatedWeibull,
        Variant::AntiferroTrigger => FamilyKind::Weibull,
    }
}

const DECILE_COLS: [&str; 9] = ["D1", "D2", "D3", "D4", "D5", "D6", "D7", "D8", "D9"];

struct Builder<'a> {
    cfg: &'a ExperimentConfig,
    warnings: Vec<String>,
    deciles: Table,
    fits: Table,
    table1: Table,
    distributions: Table,
    histograms: Table,
    mapping: Table,
    lz: Table,
}

type Series = BTreeMap<usize, Vec<f64>>;

impl<'a> Builder<'a> {
    fn warn(&mut self, msg: String) -> String {
        self.warnings.push(msg.clone());
        msg
    }

    fn t_cell(t: Option<f64>) -> String {
        t.map(num).unwrap_or_default()
    }

    /// Decile rows of one quantity; returns the deciles of every size with
    /// enough data.
    fn decile_rows(&mut self, quantity: &str, label: &str, t: Option<f64>, series: &Series) -> BTreeMap<usize, [f64; 9]> {
        let mut out = BTreeMap::new();
        for (&n, values) in series {
            let mut row = vec![quantity.to_string(), label.to_string(), Self::t_cell(t), n.to_string(), values.len().to_string()];
            match deciles(values) {
                Ok(d) => {
                    row.extend(d.iter().map(|&x| num(x)));
                    row.push(String::new());
                    out.insert(n, d);
                }
                Err(e) => {
                    row.extend(std::iter::repeat(String::new()).take(9));
                    row.push(self.warn(format!("{quantity} {label} {} N={n}: {e}", Self::t_cell(t))));
                }
            }
            self.deciles.push(row);
        }
        out
    }

    /// One exponential fit per decile; returns the D5 rate.
    fn fit_rows(&mut self, quantity: &str, label: &str, t: Option<f64>, dec: &BTreeMap<usize, [f64; 9]>) -> Option<f64> {
        let sizes: Vec<f64> = dec.keys().map(|&n| n as f64).collect();
        let window = self.cfg.analysis.fit_window_min.or_else(|| default_window(&sizes));
        let mut median_rate = None;
        for (i, stat) in DECILE_COLS.iter().enumerate() {
            let points: Vec<(f64, f64)> = dec.iter().map(|(&n, d)| (n as f64, d[i])).collect();
            let mut row = vec![quantity.to_string(), label.to_string(), Self::t_cell(t), stat.to_string(), opt(window)];
            match fit_exponential(&points, window) {
                Ok(f) => {
                    row.extend([num(f.n_min), num(f.n_max), f.points.to_string(), num(f.d), num(f.r), num(f.residual), String::new()]);
                    if i == 4 {
                        median_rate = Some(f.r);
                    }
                }
                Err(e) => {
                    row.extend(std::iter::repeat(String::new()).take(6));
                    row.push(self.warn(format!("{quantity} {label} {} {stat} fit: {e}", Self::t_cell(t))));
                }
            }
            self.fits.push(row);
        }
        median_rate
    }

    /// Histogram rows; `fitted` gives the model density at a bin center.
    fn histogram_rows(&mut self, quantity: &str, label: &str, t: Option<f64>, n: usize, values: &[f64], fitted: Option<&dyn Fn(f64) -> f64>) {
        match histogram(values, self.cfg.analysis.bins) {
            Ok(h) => {
                for (i, c) in h.centers().into_iter().enumerate() {
                    self.histograms.push(vec![
                        quantity.to_string(),
                        label.to_string(),
                        Self::t_cell(t),
                        n.to_string(),
                        i.to_string(),
                        num(h.edges[i]),
                        num(h.edges[i + 1]),
                        num(h.density[i]),
                        fitted.map(|f| num(f(c))).unwrap_or_default(),
                        h.rule.clone(),
                    ]);
                }
            }
            Err(e) => {
                self.warn(format!("{quantity} {label} {} N={n} histogram: {e}", Self::t_cell(t)));
            }
        }
    }

    /// Median-normalized gap histogram with the variant's family, plus the
    /// LZ-predicted success density from a fit to the raw gaps.
    fn gap_distributions(&mut self, v: Variant, series: &Series) -> BTreeMap<usize, LzPdf> {
        let kind = gap_family(v);
        let mut lz_out = BTreeMap::new();
        for (&n, gaps) in series {
            let mut row = vec![v.as_str().to_string(), n.to_string(), kind.as_str().to_string(), gaps.len().to_string()];
            let normalized = median_normalize(gaps);
            let fit = normalized
                .as_ref()
                .map_err(|e| e.to_string())
                .and_then(|(x, _)| fit_distribution(x, kind).map_err(|e| e.to_string()));
            match (&normalized, &fit) {
                (Ok((x, m)), Ok(f)) => {
                    let ks = ks_distance(x, |y| f.cdf(y));
                    row.extend([num(*m), num(f.k), num(f.b), num(f.mu), num(f.a), num(ks), String::new()]);
                }
                (Ok((_, m)), Err(e)) => {
                    row.extend([num(*m), String::new(), String::new(), String::new(), String::new(), String::new()]);
                    row.push(self.warn(format!("gap distribution {v} N={n}: {e}")));
                }
                (Err(e), _) => {
                    row.extend(std::iter::repeat(String::new()).take(6));
                    row.push(self.warn(format!("gap distribution {v} N={n}: {e}")));
                }
            }
            self.distributions.push(row);
            if let Ok((x, _)) = &normalized {
                let f = fit.as_ref().ok().copied();
                let pdf = move |y: f64| f.map_or(f64::NAN, |f: DistributionFamily| f.pdf(y));
                let fitted: Option<&dyn Fn(f64) -> f64> = if f.is_some() { Some(&pdf) } else { None };
                self.histogram_rows("gap_normalized", v.as_str(), None, n, x, fitted);
            }

            let predicted = fit_distribution(gaps, kind).and_then(|raw| {
                let gamma = fit_gamma(gaps, 0.5)?;
                Ok((gamma, lz_map_distribution(&raw, gamma, self.cfg.analysis.lz_grid)?))
            });
            match predicted {
                Ok((gamma, pdf)) => {
                    for (p, d) in pdf.p.iter().zip(&pdf.pdf) {
                        self.lz.push(vec![v.as_str().to_string(), n.to_string(), num(gamma), num(*p), num(*d), String::new()]);
                    }
                    lz_out.insert(n, pdf);
                }
                Err(e) => {
                    let w = self.warn(format!("LZ prediction {v} N={n}: {e}"));
                    self.lz.push(vec![v.as_str().to_string(), n.to_string(), String::new(), String::new(), String::new(), w]);
                }
            }
        }
        lz_out
    }

    fn mapping_rows(&mut self, v: Variant, t: f64, p_series: &Series, lz: &BTreeMap<usize, LzPdf>) {
        for (&n, ps) in p_series {
            let mean_p = ps.iter().sum::<f64>() / ps.len() as f64;
            let mut row = vec![v.as_str().to_string(), num(t), n.to_string(), ps.len().to_string(), num(mean_p)];
            match map_success(ps) {
                Ok(m) => {
                    let mean_mapped = m.mapped.iter().sum::<f64>() / m.mapped.len() as f64;
                    row.extend([num(m.r), m.saturated.to_string(), num(mean_mapped), String::new()]);
                    let pred = lz.get(&n).cloned();
                    let interp = move |p: f64| pred.as_ref().map_or(f64::NAN, |l| interpolate(l, p));
                    let fitted: Option<&dyn Fn(f64) -> f64> = if lz.contains_key(&n) { Some(&interp) } else { None };
                    self.histogram_rows("mapped_p", v.as_str(), Some(t), n, &m.mapped, fitted);
                }
                Err(e) => {
                    row.extend([String::new(), String::new(), String::new()]);
                    row.push(self.warn(format!("mapping {v} T_A={} N={n}: {e}", num(t))));
                }
            }
            self.mapping.push(row);
        }
    }
}

/// Linear interpolation on the midpoint grid, flat beyond the end points.
fn interpolate(l: &LzPdf, p: f64) -> f64 {
    let g = l.p.len();
    let x = p * g as f64 - 0.5;
    if x <= 0.0 {
        return l.pdf[0];
    }
    let i = x.floor() as usize;
    if i + 1 >= g {
        return l.pdf[g - 1];
    }
    let f = x - i as f64;
    l.pdf[i] + f * (l.pdf[i + 1] - l.pdf[i])
}

/// Computes every report table. Missing or insufficient data produce
/// warnings (in the `warning` column and the returned list), never errors.
pub fn build_report(cfg: &ExperimentConfig, data: &Dataset) -> Report {
    let t_cols: Vec<String> = cfg.t_anneal.iter().map(|t| format!("r_tts99_T{}", num(*t))).collect();
    let mut t1_header: Vec<&str> = vec!["variant", "r_delta", "r_tr"];
    t1_header.extend(t_cols.iter().map(String::as_str));
    t1_header.push("warning");
    let mut d_header = vec!["quantity", "variant", "t_anneal", "N", "count"];
    d_header.extend(DECILE_COLS);
    d_header.push("warning");

    let mut b = Builder {
        cfg,
        warnings: Vec::new(),
        deciles: Table::new("deciles", &d_header),
        fits: Table::new(
            "fits",
            &["quantity", "variant", "t_anneal", "statistic", "window_min", "n_min", "n_max", "points", "D", "r", "residual", "warning"],
        ),
        table1: Table::new("table1", &t1_header),
        distributions: Table::new("distributions", &["variant", "N", "family", "count", "median", "k", "b", "mu", "a", "ks", "warning"]),
        histograms: Table::new(
            "histograms",
            &["quantity", "variant", "t_anneal", "N", "bin", "lo", "hi", "density", "fitted_density", "rule"],
        ),
        mapping: Table::new("mapping", &["variant", "t_anneal", "N", "count", "mean_p", "R", "saturated", "mean_mapped", "warning"]),
        lz: Table::new("lz_pdf", &["variant", "N", "gamma", "p", "pdf", "warning"]),
    };
    let p_target = cfg.analysis.p_target;

    for &v in &cfg.variants {
        let mut gaps: Series = BTreeMap::new();
        let mut xis: Series = BTreeMap::new();
        let mut failed = 0usize;
        for g in data.gaps.iter().filter(|g| g.variant == v) {
            match g.delta_min {
                Some(d) => {
                    gaps.entry(g.n).or_default().push(d);
                    xis.entry(g.n).or_default().push(g.xi.unwrap_or(f64::INFINITY));
                }
                None => failed += 1,
            }
        }
        if failed > 0 {
            b.warn(format!("{v}: {failed} gap scans failed and are left out"));
        }
        if gaps.is_empty() {
            b.warn(format!("{v}: no gap results"));
        }
        let gap_dec = b.decile_rows("delta_min", v.as_str(), None, &gaps);
        b.decile_rows("xi", v.as_str(), None, &xis);
        let r_delta = b.fit_rows("delta_min", v.as_str(), None, &gap_dec);
        let lz = b.gap_distributions(v, &gaps);

        let mut r_tts = Vec::new();
        for &t in &cfg.t_anneal {
            let mut ps: Series = BTreeMap::new();
            for r in data.runs.iter().filter(|r| r.variant == v && r.t_anneal == t) {
                ps.entry(r.n).or_default().push(r.p);
            }
            if ps.is_empty() {
                b.warn(format!("{v} T_A={}: no anneal results", num(t)));
            }
            let mut times: Series = BTreeMap::new();
            for (&n, list) in &ps {
                times.insert(n, list.iter().map(|&p| tts(p.clamp(0.0, 1.0), t, p_target).unwrap_or(f64::NAN)).collect());
            }
            b.decile_rows("p", v.as_str(), Some(t), &ps);
            let tts_dec = b.decile_rows("tts99", v.as_str(), Some(t), &times);
            r_tts.push(b.fit_rows("tts99", v.as_str(), Some(t), &tts_dec));
            b.mapping_rows(v, t, &ps, &lz);
        }

        let mut row = vec![v.as_str().to_string(), opt(r_delta), opt(r_delta.map(theoretical_runtime_rate))];
        row.extend(r_tts.iter().map(|r| opt(*r)));
        let missing: Vec<&str> = std::iter::once(("r_delta", r_delta))
            .chain(t_cols.iter().map(String::as_str).zip(r_tts.iter().copied()))
            .filter(|(_, r)| r.is_none())
            .map(|(c, _)| c)
            .collect();
        row.push(if missing.is_empty() {
            String::new()
        } else {
            b.warn(format!("table1 {v}: no median fit for {}", missing.join(", ")))
        });
        b.table1.push(row);
    }

    // classical baseline, time in spin-update attempts
    let mut sa_frac: Series = BTreeMap::new();
    let mut sa_tts: Series = BTreeMap::new();
    for r in &data.sa {
        sa_frac.entry(r.n).or_default().push(r.success_fraction);
        let time = if r.runtime == 0 {
            f64::NAN
        } else {
            tts(r.success_fraction, r.runtime as f64, p_target).unwrap_or(f64::NAN)
        };
        sa_tts.entry(r.n).or_default().push(time);
    }
    if !sa_frac.is_empty() {
        b.decile_rows("sa_success", "sa", None, &sa_frac);
        let dec = b.decile_rows("sa_tts99", "sa", None, &sa_tts);
        b.fit_rows("sa_tts99", "sa", None, &dec);
    }

    let Builder { warnings, deciles, fits, table1, distributions, histograms, mapping, lz, .. } = b;
    Report {
        tables: vec![table1, deciles, fits, distributions, histograms, mapping, lz],
        warnings,
    }
}

/// Column reference written next to the report tables.
pub const SCHEMA: &str = r#"# Report schema

Every CSV starts with one comment line `# config_hash=<sha256> master_seed=<u64>`
followed by a header row. Numbers use the shortest round-trip decimal form;
`inf`/`nan` mark non-finite values; an empty cell means "not available", and
the `warning` column then says why. `t_anneal` is empty for quantities that do
not depend on the annealing time. Variants are `standard`, `ferro_trigger`,
`antiferro_trigger`; the classical baseline is labelled `sa`.

## table1.csv
Median scaling exponents per variant.
- `variant`
- `r_delta`: rate `r` of the fit `D5(Δ_min) = D·exp(r·N)`
- `r_tr`: theoretical run-time rate `2·|r_delta|`
- `r_tts99_T<T_A>`: rate of the fit of the median TTS99 at that annealing time
- `warning`

## deciles.csv
- `quantity`: `delta_min`, `xi` (= 1/Δ_min), `p` (success probability),
  `tts99` (time to solution at `analysis.p_target`, clamped to `T_A` when
  `p ≥ p_target`, `inf` when `p = 0`), `sa_success` (fraction of SA restarts
  ending at energy 0), `sa_tts99` (in spin-update attempts, `sweeps × N` per restart)
- `variant`, `t_anneal`, `N`, `count` (values available at that size)
- `D1` … `D9`: type-7 deciles (linear interpolation between order statistics)
- `warning`

## fits.csv
Least-squares fit of `ln(value) = ln(D) + r·N` to one decile across sizes.
- `quantity`, `variant`, `t_anneal`
- `statistic`: `D1` … `D9` (`D5` is the median)
- `window_min`: smallest N admitted (configured or the upper half of the sizes)
- `n_min`, `n_max`, `points`: sizes actually used
- `D`, `r`, `residual` (RMS of the log residuals)
- `warning`

## distributions.csv
Maximum-likelihood fit to the median-normalized gaps `x = Δ_min / median`.
`standard` uses Fréchet, `ferro_trigger` the transformed translated Weibull
(a translated Weibull fitted to `1/x`), `antiferro_trigger` Weibull.
- `variant`, `N`, `family`, `count`, `median` (the normalizing median)
- `k`, `b`, `mu`, `a`: shape, scale, shift and normalization constant
- `ks`: Kolmogorov-Smirnov distance of the normalized sample to the fit
- `warning`

## histograms.csv
- `quantity`: `gap_normalized` (Δ_min / median) or `mapped_p` (success
  probabilities after the mean-one-half mapping `1 − (1 − p)^R`)
- `variant`, `t_anneal`, `N`
- `bin`, `lo`, `hi`: bin index and edges
- `density`: count / (total · width); integrates to 1 per group
- `fitted_density`: the fitted family (gaps) or the LZ-predicted density
  interpolated from `lz_pdf.csv` (mapped success probabilities)
- `rule`: `freedman_diaconis` or `fixed:<bins>`

## mapping.csv
- `variant`, `t_anneal`, `N`, `count`, `mean_p`
- `R`: exponent making the mean mapped probability 1/2
- `saturated`: `true` when half or more runs already have `p = 1` (then `R = 0`)
- `mean_mapped`
- `warning`

## lz_pdf.csv
Density of `p = 1 − exp(−γΔ²)` when Δ follows the variant's family fitted to
the raw gaps, with γ chosen so the mean predicted probability is 1/2. This
is the prediction for the `mapped_p` histograms.
- `variant`, `N`, `gamma`, `p` (midpoint grid of (0, 1)), `pdf`, `warning`

## warnings.txt
One line per warning raised while building the tables.
"#;
