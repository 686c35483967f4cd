//! Reproducible experiment pipeline: ensembles, gap scans, anneals, the
//! classical baseline and the aggregated report.
//!
//! Every stage reads a single [`ExperimentConfig`] and writes into one output
//! directory. Result lines carry the config hash and master seed. Stages skip
//! work already on disk, and lines are written in task order, so an
//! interrupted run resumes to the same files an uninterrupted run produces
//! (up to wall-time fields), whatever the number of workers.

mod report;
mod store;

pub use report::{build_report, Dataset, Report, SCHEMA};
pub use store::{load_lines, num, Line, OrderedAppender, Table};

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baseline::{simulated_anneal, SaParams};
use crate::dynamics::{default_steps, run_instance, EvolutionParams, RunRecord, XMethod};
use crate::error::{Error, Result};
use crate::hamiltonian::{AnnealSpec, Variant, MAX_SPINS};
use crate::ising::IsingProblem;
use crate::problems::{generate_ensemble, ClauseCount, Clause, GeneratorCriteria, Literal, SatInstance};
use crate::seed::derive_seed;
use crate::spectra::gap_profile;

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const GAPS_FILE: &str = "gaps.jsonl";
pub const RUNS_FILE: &str = "runs.jsonl";
pub const SA_FILE: &str = "sa.jsonl";
pub const REPORT_DIR: &str = "report";
pub const PROFILE_DIR: &str = "profiles";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// N ∈ {6, 8, 10, 12}, 50 instances each.
    Test,
    /// N = 6..=18, 100 instances each.
    Full,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "test" => Ok(Profile::Test),
            "full" => Ok(Profile::Full),
            other => Err(Error::InvalidParameter(format!("unknown profile {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub sizes: Vec<usize>,
    /// Instances per size.
    pub count: usize,
    pub clauses: ClauseCount,
    pub require_unique_solution: bool,
    pub min_first_excited_degeneracy: u64,
    /// Draws per instance before the generator gives up.
    pub max_attempts: usize,
    pub planted: bool,
    pub swap_rounds: usize,
    /// Candidates examined per size before the ensemble gives up.
    pub max_candidates: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        let g = GeneratorCriteria::default();
        EnsembleConfig {
            sizes: vec![6, 8, 10, 12],
            count: 50,
            clauses: g.clauses,
            require_unique_solution: g.require_unique_solution,
            min_first_excited_degeneracy: g.min_first_excited_degeneracy,
            max_attempts: g.max_attempts,
            planted: g.planted,
            swap_rounds: g.swap_rounds,
            max_candidates: 10_000,
        }
    }
}

impl EnsembleConfig {
    pub fn criteria(&self, n: usize) -> GeneratorCriteria {
        GeneratorCriteria {
            n_vars: n,
            clauses: self.clauses,
            require_unique_solution: self.require_unique_solution,
            min_first_excited_degeneracy: self.min_first_excited_degeneracy,
            max_attempts: self.max_attempts,
            seed: 0,
            planted: self.planted,
            swap_rounds: self.swap_rounds,
        }
    }
}

/// Number of Trotter steps for an annealing time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepPolicy {
    /// `max(1000, ⌈100·T_A⌉)`.
    Default,
    PerUnitTime { per_unit: f64, min: usize },
    Fixed { n_steps: usize },
}

impl StepPolicy {
    pub fn steps(&self, t_anneal: f64) -> usize {
        match *self {
            StepPolicy::Default => default_steps(t_anneal),
            StepPolicy::PerUnitTime { per_unit, min } => {
                ((per_unit * t_anneal).ceil() as usize).max(min)
            }
            StepPolicy::Fixed { n_steps } => n_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GapConfig {
    pub grid_points: usize,
    pub refine_tol: f64,
    /// Also write the uniform-grid spectrum of every scan.
    pub write_profiles: bool,
}

impl Default for GapConfig {
    fn default() -> Self {
        GapConfig {
            grid_points: crate::spectra::DEFAULT_GRID_POINTS,
            refine_tol: crate::spectra::DEFAULT_REFINE_TOL,
            write_profiles: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnnealConfig {
    pub x_method: XMethod,
    /// Values of `s` at which the instantaneous ground-state overlap is
    /// recorded in each run.
    pub record_overlaps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SaConfig {
    pub sweeps: usize,
    pub restarts: usize,
    pub t_initial: f64,
    pub t_final: f64,
}

impl Default for SaConfig {
    fn default() -> Self {
        let p = SaParams::default();
        SaConfig {
            sweeps: p.sweeps,
            restarts: p.restarts,
            t_initial: p.t_initial,
            t_final: p.t_final,
        }
    }
}

impl SaConfig {
    pub fn params(&self, seed: u64) -> SaParams {
        SaParams {
            sweeps: self.sweeps,
            t_initial: self.t_initial,
            t_final: self.t_final,
            restarts: self.restarts,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Smallest N used by scaling fits; `None` takes the upper half of the
    /// sizes (at least three).
    pub fit_window_min: Option<f64>,
    /// Confidence of the time to solution.
    pub p_target: f64,
    /// Only `type7` (linear interpolation between order statistics).
    pub quantile_rule: String,
    /// Fixed histogram bin count; `None` is Freedman-Diaconis.
    pub bins: Option<usize>,
    /// Grid of the predicted success-probability densities.
    pub lz_grid: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            fit_window_min: None,
            p_target: 0.99,
            quantile_rule: "type7".into(),
            bins: None,
            lz_grid: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    /// Not part of the config hash.
    pub output_dir: PathBuf,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    pub variants: Vec<Variant>,
    pub t_anneal: Vec<f64>,
    #[serde(default = "default_policy")]
    pub steps: StepPolicy,
    #[serde(default)]
    pub gap: GapConfig,
    #[serde(default)]
    pub anneal: AnnealConfig,
    #[serde(default)]
    pub sa: SaConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

fn default_policy() -> StepPolicy {
    StepPolicy::Default
}

impl ExperimentConfig {
    pub fn profile(profile: Profile) -> Self {
        let (name, sizes, count) = match profile {
            Profile::Test => ("test", vec![6, 8, 10, 12], 50),
            Profile::Full => ("full", (6..=18).collect(), 100),
        };
        ExperimentConfig {
            name: name.into(),
            seed: 20_240_611,
            output_dir: PathBuf::from("runs").join(name),
            ensemble: EnsembleConfig {
                sizes,
                count,
                ..EnsembleConfig::default()
            },
            variants: Variant::ALL.to_vec(),
            t_anneal: vec![10.0, 100.0, 1000.0],
            steps: StepPolicy::Default,
            gap: GapConfig::default(),
            anneal: AnnealConfig::default(),
            sa: SaConfig::default(),
            analysis: AnalysisConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        let e = &self.ensemble;
        if e.sizes.is_empty() {
            return bad("ensemble.sizes is empty".into());
        }
        if let Some(&n) = e.sizes.iter().find(|&&n| !(2..=MAX_SPINS).contains(&n)) {
            return bad(format!("size {n} outside 2..={MAX_SPINS}"));
        }
        if e.sizes.iter().collect::<BTreeSet<_>>().len() != e.sizes.len() {
            return bad("ensemble.sizes has duplicates".into());
        }
        if e.count == 0 {
            return bad("ensemble.count must be at least 1".into());
        }
        if self.variants.is_empty()
            || self.variants.iter().collect::<BTreeSet<_>>().len() != self.variants.len()
        {
            return bad("variants must be a non-empty list without duplicates".into());
        }
        if self.t_anneal.is_empty() || self.t_anneal.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return bad("t_anneal must be a non-empty list of positive times".into());
        }
        let mut ts = self.t_anneal.clone();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        if ts.len() != self.t_anneal.len() {
            return bad("t_anneal has duplicates".into());
        }
        match self.steps {
            StepPolicy::PerUnitTime { per_unit, .. } if !(per_unit > 0.0 && per_unit.is_finite()) => {
                return bad("steps.per_unit must be positive".into())
            }
            StepPolicy::Fixed { n_steps: 0 } => return bad("steps.n_steps must be positive".into()),
            _ => {}
        }
        if self.gap.grid_points < 16 || !(self.gap.refine_tol > 0.0) {
            return bad("gap.grid_points must be ≥ 16 and gap.refine_tol positive".into());
        }
        if self.anneal.record_overlaps.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return bad("anneal.record_overlaps entries must lie in [0, 1]".into());
        }
        self.sa.params(0).validate()?;
        let a = &self.analysis;
        if !(a.p_target > 0.0 && a.p_target < 1.0) {
            return bad(format!("analysis.p_target {} outside (0, 1)", a.p_target));
        }
        if a.quantile_rule != "type7" {
            return bad(format!("unsupported quantile rule {:?}", a.quantile_rule));
        }
        if a.bins == Some(0) || a.lz_grid < 2 {
            return bad("analysis.bins must be positive and analysis.lz_grid ≥ 2".into());
        }
        Ok(())
    }

    /// SHA-256 of the compact JSON form with `output_dir` blanked.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let text = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// One ensemble member as stored in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// `N{n}-{index}`.
    pub id: String,
    pub n_vars: usize,
    pub index: usize,
    pub seed: u64,
    /// Signed 1-based literals.
    pub clauses: Vec<[i64; 2]>,
    /// `x_1 x_2 …` of the unique satisfying assignment.
    pub ground_assignment: String,
    pub ground_mask: u64,
    pub first_excited_degeneracy: u64,
}

impl ManifestEntry {
    pub fn instance(&self) -> Result<SatInstance> {
        let clauses = self
            .clauses
            .iter()
            .map(|&[a, b]| {
                let lit = |v: i64| {
                    Literal::from_dimacs(v).ok_or_else(|| {
                        Error::InvalidInstance(format!("{}: bad literal {v}", self.id))
                    })
                };
                Ok(Clause::new(lit(a)?, lit(b)?))
            })
            .collect::<Result<Vec<_>>>()?;
        SatInstance::new(self.n_vars, clauses)
    }

    pub fn key(&self) -> (usize, usize) {
        (self.n_vars, self.index)
    }
}

/// Outcome of one gap scan. The numbers are absent when the scan failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub n: usize,
    pub instance: usize,
    pub variant: Variant,
    pub delta_min: Option<f64>,
    pub s_star: Option<f64>,
    /// `1 / Δ_min`; absent for a closed gap.
    pub xi: Option<f64>,
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Quantum run line; `method` is `"qa"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealLine {
    pub method: String,
    #[serde(flatten)]
    pub run: RunRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaRecord {
    /// Always `"sa"`.
    pub method: String,
    pub n: usize,
    pub instance: usize,
    pub sweeps: usize,
    pub restarts: usize,
    pub t_initial: f64,
    pub t_final: f64,
    pub success_fraction: f64,
    pub best_energy: f64,
    /// Spin-update attempts per restart, `sweeps × N`.
    pub runtime: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageSummary {
    pub stage: &'static str,
    pub total: usize,
    pub skipped: usize,
    pub computed: usize,
    pub path: PathBuf,
}

/// A config bound to an output directory and a worker count.
pub struct Experiment {
    config: ExperimentConfig,
    out: PathBuf,
    hash: String,
    workers: usize,
    verbose: bool,
}

impl Experiment {
    /// Validates the config and prepares the output directory. A
    /// `config.json` already there must have the same hash.
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let out = config.output_dir.clone();
        fs::create_dir_all(&out)?;
        let hash = config.hash();
        let path = out.join("config.json");
        if let Ok(old) = fs::read_to_string(&path) {
            let old: ExperimentConfig = serde_json::from_str(&old)?;
            if old.hash() != hash {
                return Err(Error::InvalidParameter(format!(
                    "{} holds a different config (hash {}); use another output directory",
                    out.display(),
                    old.hash()
                )));
            }
        }
        store::write_atomic(&path, &(config.to_json() + "\n"))?;
        Ok(Experiment {
            config,
            out,
            hash,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            verbose: false,
        })
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    /// Progress lines on stderr.
    pub fn with_progress(mut self, verbose: bool) -> Self {
        self.verbose = verbose;
        self
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    fn path(&self, file: &str) -> PathBuf {
        self.out.join(file)
    }

    fn line<T: Serialize>(&self, body: &T) -> Result<String> {
        store::to_line(&self.hash, self.config.seed, body)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
    }

    /// Generates the ensembles. Complete per-size groups already in the
    /// manifest are kept; the file is rewritten in config order.
    pub fn generate(&self) -> Result<StageSummary> {
        let path = self.path(MANIFEST_FILE);
        let existing: Vec<ManifestEntry> = load_lines(&path, &self.hash)?;
        let mut by_n: BTreeMap<usize, Vec<ManifestEntry>> = BTreeMap::new();
        for e in existing {
            by_n.entry(e.n_vars).or_default().push(e);
        }
        let e = &self.config.ensemble;
        let pool = self.pool()?;
        let (mut skipped, mut computed) = (0, 0);
        let mut text = String::new();
        for &n in &e.sizes {
            let group = match by_n.remove(&n) {
                Some(g) if g.len() == e.count => {
                    skipped += g.len();
                    g
                }
                _ => {
                    let members = pool.install(|| {
                        generate_ensemble(
                            &e.criteria(n),
                            e.count,
                            derive_seed(self.config.seed, n as u64),
                            e.max_candidates,
                        )
                    })?;
                    computed += members.len();
                    members
                        .into_iter()
                        .enumerate()
                        .map(|(index, m)| ManifestEntry {
                            id: format!("N{n}-{index}"),
                            n_vars: n,
                            index,
                            seed: m.seed,
                            clauses: m
                                .instance
                                .clauses()
                                .iter()
                                .map(|c| [c.0[0].to_dimacs(), c.0[1].to_dimacs()])
                                .collect(),
                            ground_assignment: (0..n)
                                .map(|i| if (m.ground_mask >> i) & 1 == 1 { '1' } else { '0' })
                                .collect(),
                            ground_mask: m.ground_mask,
                            first_excited_degeneracy: m.first_excited_degeneracy,
                        })
                        .collect()
                }
            };
            if self.verbose {
                eprintln!("generate: N={n} ready ({} instances)", group.len());
            }
            for entry in &group {
                text.push_str(&self.line(entry)?);
                text.push('\n');
            }
        }
        store::write_atomic(&path, &text)?;
        Ok(StageSummary {
            stage: "generate",
            total: skipped + computed,
            skipped,
            computed,
            path,
        })
    }

    pub fn manifest(&self) -> Result<Vec<ManifestEntry>> {
        let path = self.path(MANIFEST_FILE);
        if !path.exists() {
            return Err(Error::InvalidParameter(format!(
                "no manifest at {}; run `generate` first",
                path.display()
            )));
        }
        let entries: Vec<ManifestEntry> = load_lines(&path, &self.hash)?;
        let sizes: BTreeSet<usize> = self.config.ensemble.sizes.iter().copied().collect();
        Ok(entries.into_iter().filter(|e| sizes.contains(&e.n_vars)).collect())
    }

    /// Gap scan of every (instance, variant). Scan failures are recorded in
    /// the line and the stage continues.
    pub fn gap(&self) -> Result<StageSummary> {
        let manifest = self.manifest()?;
        let mut tasks = Vec::new();
        for entry in &manifest {
            for &v in &self.config.variants {
                tasks.push((entry, v));
            }
        }
        let path = self.path(GAPS_FILE);
        let done: BTreeSet<(usize, usize, Variant)> = load_lines::<GapRecord>(&path, &self.hash)?
            .into_iter()
            .map(|r| (r.n, r.instance, r.variant))
            .collect();
        if self.config.gap.write_profiles {
            fs::create_dir_all(self.path(PROFILE_DIR))?;
        }
        let gap = &self.config.gap;
        self.run_stage("gap", path, tasks, |&(e, v)| !done.contains(&(e.n_vars, e.index, v)), |&(e, v)| {
            let start = Instant::now();
            let spec = AnnealSpec::new(IsingProblem::from_sat(&e.instance()?), v);
            let mut rec = GapRecord {
                n: e.n_vars,
                instance: e.index,
                variant: v,
                delta_min: None,
                s_star: None,
                xi: None,
                wall_time_s: 0.0,
                error: None,
            };
            match gap_profile(&spec, gap.grid_points, gap.refine_tol) {
                Ok(p) => {
                    rec.delta_min = Some(p.min_gap);
                    rec.s_star = Some(p.s_star);
                    rec.xi = p.xi.is_finite().then_some(p.xi);
                    if gap.write_profiles {
                        let name = format!("{}_{}.csv", e.id, v.as_str());
                        let text = format!(
                            "# config_hash={} master_seed={}\n{}",
                            self.hash,
                            self.config.seed,
                            p.to_csv()
                        );
                        store::write_atomic(&self.path(PROFILE_DIR).join(name), &text)?;
                    }
                }
                Err(err @ (Error::NoConvergence { .. } | Error::NonFinite { .. })) => {
                    rec.error = Some(err.to_string());
                }
                Err(err) => return Err(err),
            }
            rec.wall_time_s = start.elapsed().as_secs_f64();
            Ok(rec)
        })
    }

    pub fn evolution_params(&self, t_anneal: f64) -> EvolutionParams {
        EvolutionParams {
            t_anneal,
            n_steps: self.config.steps.steps(t_anneal),
            record_overlaps: self.config.anneal.record_overlaps.clone(),
            x_method: self.config.anneal.x_method,
        }
    }

    /// One anneal per (instance, variant, T_A).
    pub fn anneal(&self) -> Result<StageSummary> {
        let manifest = self.manifest()?;
        let mut tasks = Vec::new();
        for entry in &manifest {
            for &v in &self.config.variants {
                for &t in &self.config.t_anneal {
                    tasks.push((entry, v, t));
                }
            }
        }
        let path = self.path(RUNS_FILE);
        let done: BTreeSet<(usize, usize, Variant, u64)> = load_lines::<AnnealLine>(&path, &self.hash)?
            .into_iter()
            .map(|l| (l.run.n, l.run.instance, l.run.variant, l.run.t_anneal.to_bits()))
            .collect();
        self.run_stage(
            "anneal",
            path,
            tasks,
            |&(e, v, t)| !done.contains(&(e.n_vars, e.index, v, t.to_bits())),
            |&(e, v, t)| {
                let spec = AnnealSpec::new(IsingProblem::from_sat(&e.instance()?), v);
                let run = run_instance(e.index, &spec, e.ground_mask as usize, &self.evolution_params(t))?;
                Ok(AnnealLine {
                    method: "qa".into(),
                    run,
                })
            },
        )
    }

    /// Seed of the SA run on manifest entry `(n, index)`.
    pub fn sa_seed(&self, n: usize, index: usize) -> u64 {
        derive_seed(derive_seed(self.config.seed, u64::MAX), ((n as u64) << 32) | index as u64)
    }

    /// Simulated-annealing baseline on every instance.
    pub fn sa(&self) -> Result<StageSummary> {
        let manifest = self.manifest()?;
        let path = self.path(SA_FILE);
        let done: BTreeSet<(usize, usize)> = load_lines::<SaRecord>(&path, &self.hash)?
            .into_iter()
            .map(|r| (r.n, r.instance))
            .collect();
        let tasks: Vec<&ManifestEntry> = manifest.iter().collect();
        self.run_stage("sa", path, tasks, |e| !done.contains(&e.key()), |e| {
            let start = Instant::now();
            let prob = IsingProblem::from_sat(&e.instance()?);
            let params = self.config.sa.params(self.sa_seed(e.n_vars, e.index));
            let res = simulated_anneal(&prob, &params)?;
            Ok(SaRecord {
                method: "sa".into(),
                n: e.n_vars,
                instance: e.index,
                sweeps: params.sweeps,
                restarts: params.restarts,
                t_initial: params.t_initial,
                t_final: params.t_final,
                success_fraction: res.success_fraction,
                best_energy: res.best_energy,
                runtime: res.runtime,
                wall_time_s: start.elapsed().as_secs_f64(),
            })
        })
    }

    /// Everything the report reads, from disk.
    pub fn dataset(&self) -> Result<Dataset> {
        let read_opt = |file: &str| -> Result<bool> { Ok(self.path(file).exists()) };
        let manifest = self.manifest()?;
        let gaps = if read_opt(GAPS_FILE)? { load_lines(&self.path(GAPS_FILE), &self.hash)? } else { Vec::new() };
        let runs = if read_opt(RUNS_FILE)? {
            load_lines::<AnnealLine>(&self.path(RUNS_FILE), &self.hash)?
                .into_iter()
                .map(|l| l.run)
                .collect()
        } else {
            Vec::new()
        };
        let sa = if read_opt(SA_FILE)? { load_lines(&self.path(SA_FILE), &self.hash)? } else { Vec::new() };
        Ok(Dataset { manifest, gaps, runs, sa })
    }

    /// Builds every table from the results on disk and writes them, with
    /// `SCHEMA.md` and `warnings.txt`, into `report/`.
    pub fn report(&self) -> Result<Report> {
        let data = self.dataset()?;
        let report = build_report(&self.config, &data);
        let dir = self.path(REPORT_DIR);
        fs::create_dir_all(&dir)?;
        for t in &report.tables {
            store::write_atomic(&dir.join(format!("{}.csv", t.name)), &t.to_csv(&self.hash, self.config.seed))?;
        }
        store::write_atomic(&dir.join("SCHEMA.md"), SCHEMA)?;
        let mut warn = format!("# config_hash={} master_seed={}\n", self.hash, self.config.seed);
        for w in &report.warnings {
            warn.push_str(w);
            warn.push('\n');
        }
        store::write_atomic(&dir.join("warnings.txt"), &warn)?;
        if self.verbose {
            for w in &report.warnings {
                eprintln!("report warning: {w}");
            }
        }
        Ok(report)
    }

    /// Runs the pending tasks on a work queue and appends their lines in
    /// task order.
    fn run_stage<T: Sync, R: Serialize + Send>(
        &self,
        stage: &'static str,
        path: PathBuf,
        tasks: Vec<T>,
        pending: impl Fn(&T) -> bool,
        work: impl Fn(&T) -> Result<R> + Sync,
    ) -> Result<StageSummary> {
        let total = tasks.len();
        let todo: Vec<T> = tasks.into_iter().filter(|t| pending(t)).collect();
        let skipped = total - todo.len();
        let appender = OrderedAppender::open(&path)?;
        let next = AtomicUsize::new(0);
        let written = AtomicUsize::new(0);
        let stop = AtomicBool::new(false);
        let failure: Mutex<Option<Error>> = Mutex::new(None);
        let report_every = (todo.len() / 20).max(1);

        let worker = || loop {
            if stop.load(Ordering::Relaxed) {
                return;
            }
            let i = next.fetch_add(1, Ordering::Relaxed);
            if i >= todo.len() {
                return;
            }
            let result = work(&todo[i])
                .and_then(|r| self.line(&r))
                .and_then(|line| appender.push(i, line));
            match result {
                Ok(w) => {
                    let before = written.fetch_add(w, Ordering::Relaxed);
                    if self.verbose && w > 0 && (before + w) / report_every != before / report_every {
                        eprintln!("{stage}: {}/{} new tasks done", before + w, todo.len());
                    }
                }
                Err(e) => {
                    stop.store(true, Ordering::Relaxed);
                    failure.lock().expect("failure lock").get_or_insert(e);
                    return;
                }
            }
        };
        if !todo.is_empty() {
            let pool = self.pool()?;
            pool.scope(|s| {
                for _ in 0..self.workers {
                    s.spawn(|_| worker());
                }
            });
        }
        if let Some(e) = failure.into_inner().expect("failure lock") {
            return Err(e);
        }
        Ok(StageSummary {
            stage,
            total,
            skipped,
            computed: todo.len(),
            path,
        })
    }
}
