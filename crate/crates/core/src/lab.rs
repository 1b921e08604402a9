//! Experiment configs, resumable budget and sample-size sweeps, scaling-law
//! fits, aggregation comparisons and bound-envelope tables.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::{
    bound_envelopes, generalization_bound, metric_entropy_bound, rate_schedule, BoundBreakdown, BoundInputs,
    EntropyEstimate, EnvelopeParams, EnvelopeRow, SubnetBudget,
};
use crate::erm::{
    erm_train, estimate_generalization, generate_training_set, pou_template, sup_error, Measures, SampleCounts,
    TrainOptions,
};
use crate::error::{Error, Result};
use crate::lipschitz::LipschitzClassSpec;
use crate::operators::{Domains, MultiOperator, OperatorConfig};
use crate::rng::derive_seed;
use crate::separable::{build_constructive, Aggregation, ConstructionBudget, ConstructionLimits};

/// `gamma`, `L`, `beta` of one Lipschitz class; the dimension comes from `dims`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassParams {
    pub gamma: f64,
    pub lip: f64,
    pub bound: f64,
}

impl Default for ClassParams {
    fn default() -> Self {
        Self { gamma: 1.0, lip: 1.0, bound: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassesConfig {
    #[serde(default)]
    pub w: ClassParams,
    #[serde(default)]
    pub u: ClassParams,
    #[serde(default)]
    pub v: ClassParams,
}

/// Sampling cube for the input measures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubeConfig {
    pub eta: f64,
    pub terms: usize,
    /// Half-width of a random constant added to every sample.
    #[serde(default)]
    pub shift: f64,
}

impl Default for CubeConfig {
    fn default() -> Self {
        Self { eta: 2.5, terms: 8, shift: 0.0 }
    }
}

/// Sample-size sweep: PoU template, hierarchical data, projected GD.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub budget: ConstructionBudget,
    pub n_alpha: Vec<usize>,
    pub n_u: usize,
    pub n_x: usize,
    pub sigma: f64,
    pub optimizer: TrainOptions,
    #[serde(default = "default_max_terms")]
    pub max_terms: usize,
}

fn default_max_terms() -> usize {
    20_000
}

/// Fixed stage-2 budget with varying stage-1 grid size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub p_values: Vec<usize>,
    pub h: usize,
    pub n: usize,
    pub delta_w: f64,
    pub delta_u: f64,
    #[serde(default)]
    pub limits: ConstructionLimits,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeConfig {
    pub params: EnvelopeParams,
    pub eps_grid: Vec<f64>,
}

/// A complete experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub operator: OperatorConfig,
    /// `[d_W, d_U, d_V]`.
    pub dims: [usize; 3],
    #[serde(default)]
    pub classes: ClassesConfig,
    #[serde(default)]
    pub cube: CubeConfig,
    #[serde(default)]
    pub budgets: Vec<ConstructionBudget>,
    #[serde(default)]
    pub training: Option<TrainingConfig>,
    #[serde(default)]
    pub compare: Option<CompareConfig>,
    #[serde(default)]
    pub bounds: Option<EnvelopeConfig>,
    #[serde(default = "default_sup_samples")]
    pub sup_samples: usize,
    #[serde(default = "default_gen_samples")]
    pub gen_samples: SampleCounts,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_sup_samples() -> usize {
    1000
}

fn default_gen_samples() -> SampleCounts {
    SampleCounts::new(8, 4, 8)
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn domains(&self) -> Result<Domains> {
        let c = |d: usize, p: ClassParams| {
            LipschitzClassSpec::new(d, p.gamma, p.lip, p.bound).map_err(|e| Error::Config(e.to_string()))
        };
        Ok(Domains {
            w: c(self.dims[0], self.classes.w)?,
            u: c(self.dims[1], self.classes.u)?,
            v: c(self.dims[2], self.classes.v)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.contains(&0) {
            return Err(Error::Config("dims must be positive".into()));
        }
        self.domains()?;
        if self.sup_samples == 0 {
            return Err(Error::Config("sup_samples must be positive".into()));
        }
        for b in &self.budgets {
            b.validate().map_err(|e| Error::Config(format!("budget: {e}")))?;
        }
        if let Some(t) = &self.training {
            if t.n_alpha.is_empty() || t.n_alpha.contains(&0) || t.n_u == 0 || t.n_x == 0 {
                return Err(Error::Config("training sample grid must be nonempty and positive".into()));
            }
            if !(t.sigma >= 0.0) {
                return Err(Error::Config("training sigma must be >= 0".into()));
            }
            t.budget.validate().map_err(|e| Error::Config(format!("training budget: {e}")))?;
        }
        if let Some(c) = &self.compare {
            if c.p_values.is_empty() || c.p_values.contains(&0) {
                return Err(Error::Config("compare.p_values must be nonempty and positive".into()));
            }
        }
        if let Some(b) = &self.bounds {
            if b.eps_grid.is_empty() {
                return Err(Error::Config("bounds.eps_grid is empty".into()));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn operator(&self) -> Result<MultiOperator> {
        self.operator.build(self.domains()?)
    }

    pub fn measures(&self) -> Result<Measures> {
        Measures::shifted_cubes(&self.domains()?, self.cube.eta, self.cube.terms, self.cube.shift)
    }

    /// Sweep points in output order.
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut pts: Vec<SweepPoint> = self.budgets.iter().map(|b| SweepPoint::Construct(*b)).collect();
        if let Some(t) = &self.training {
            pts.extend(t.n_alpha.iter().map(|&n| SweepPoint::Train { n_alpha: n }));
        }
        pts
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SweepPoint {
    Construct(ConstructionBudget),
    Train { n_alpha: usize },
}

fn variant_name(v: Aggregation) -> &'static str {
    match v {
        Aggregation::Parallel => "parallel",
        Aggregation::Nested => "nested",
    }
}

impl SweepPoint {
    pub fn key(&self) -> String {
        match self {
            SweepPoint::Construct(b) => format!(
                "construct:p{}-h{}-n{}-dw{}-du{}-{}",
                b.p,
                b.h,
                b.n,
                b.delta_w,
                b.delta_u,
                variant_name(b.variant)
            ),
            SweepPoint::Train { n_alpha } => format!("train:na{n_alpha}"),
        }
    }
}

/// Column order of the results CSV.
pub const SWEEP_COLUMNS: [&str; 16] = [
    "key",
    "kind",
    "p",
    "h",
    "n",
    "delta_w",
    "delta_u",
    "variant",
    "n_alpha",
    "complexity",
    "nonzeros",
    "sup_error",
    "gen_error",
    "gen_stderr",
    "train_loss",
    "status",
];

/// One results row. Empty fields mean "not applicable" or "failed".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub key: String,
    pub kind: String,
    pub p: usize,
    pub h: usize,
    pub n: usize,
    pub delta_w: f64,
    pub delta_u: f64,
    pub variant: Aggregation,
    pub n_alpha: Option<usize>,
    pub complexity: Option<f64>,
    pub nonzeros: Option<f64>,
    pub sup_error: Option<f64>,
    pub gen_error: Option<f64>,
    pub gen_stderr: Option<f64>,
    pub train_loss: Option<f64>,
    pub status: String,
}

impl SweepRow {
    fn skeleton(point: &SweepPoint, budget: &ConstructionBudget) -> Self {
        Self {
            key: point.key(),
            kind: match point {
                SweepPoint::Construct(_) => "construct".into(),
                SweepPoint::Train { .. } => "train".into(),
            },
            p: budget.p,
            h: budget.h,
            n: budget.n,
            delta_w: budget.delta_w,
            delta_u: budget.delta_u,
            variant: budget.variant,
            n_alpha: match point {
                SweepPoint::Train { n_alpha } => Some(*n_alpha),
                SweepPoint::Construct(_) => None,
            },
            complexity: None,
            nonzeros: None,
            sup_error: None,
            gen_error: None,
            gen_stderr: None,
            train_loss: None,
            status: String::new(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Shared state of one experiment.
pub struct Lab {
    pub config: ExperimentConfig,
    pub operator: MultiOperator,
    pub measures: Measures,
}

impl Lab {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let operator = config.operator()?;
        let measures = config.measures()?;
        Ok(Self { config, operator, measures })
    }

    fn seed(&self, path: &[u64]) -> u64 {
        derive_seed(self.config.seed, path)
    }

    /// Evaluates one sweep point; module errors end up in the status column.
    pub fn run_point(&self, point: &SweepPoint) -> SweepRow {
        let budget = match point {
            SweepPoint::Construct(b) => *b,
            SweepPoint::Train { .. } => {
                self.config.training.as_ref().map(|t| t.budget).expect("training point without config")
            }
        };
        let mut row = SweepRow::skeleton(point, &budget);
        let outcome = match point {
            SweepPoint::Construct(b) => self.construct(b, &mut row),
            SweepPoint::Train { n_alpha } => self.train(*n_alpha, &mut row),
        };
        row.status = match outcome {
            Ok(()) => "ok".into(),
            Err(e) => format!("error: {e}"),
        };
        row
    }

    fn construct(&self, b: &ConstructionBudget, row: &mut SweepRow) -> Result<()> {
        let approx = build_constructive(&self.operator, *b)?;
        row.complexity = Some(approx.complexity());
        row.nonzeros = Some(approx.theta_count() + approx.subnet_nonzeros());
        row.sup_error =
            Some(sup_error(&approx, &self.operator, &self.measures, self.config.sup_samples, self.seed(&[1]))?.value);
        let g =
            estimate_generalization(&approx, &self.operator, &self.measures, self.config.gen_samples, self.seed(&[2]))?;
        row.gen_error = Some(g.mean);
        row.gen_stderr = Some(g.stderr);
        Ok(())
    }

    fn train(&self, n_alpha: usize, row: &mut SweepRow) -> Result<()> {
        let t = self.config.training.as_ref().ok_or_else(|| Error::Config("no training section".into()))?;
        let template = pou_template(&self.operator, t.budget, t.max_terms)?;
        let set = generate_training_set(
            &self.operator,
            &self.measures,
            &template.w_sensors,
            &template.u_sensors,
            SampleCounts::new(n_alpha, t.n_u, t.n_x),
            t.sigma,
            self.seed(&[3, n_alpha as u64]),
        )?;
        let report = erm_train(&template, &set, &t.optimizer)?;
        let net = &report.net;
        let parts = net.complexity_parts();
        row.complexity = Some(net.complexity() as f64);
        row.nonzeros = Some((parts.theta + parts.branch_u + parts.trunk + parts.branch_alpha) as f64);
        row.train_loss = Some(report.final_loss());
        row.sup_error =
            Some(sup_error(net, &self.operator, &self.measures, self.config.sup_samples, self.seed(&[1]))?.value);
        let g = estimate_generalization(net, &self.operator, &self.measures, self.config.gen_samples, self.seed(&[2]))?;
        row.gen_error = Some(g.mean);
        row.gen_stderr = Some(g.stderr);
        Ok(())
    }
}

/// Sidecar written next to the results CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSidecar {
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub columns: Vec<String>,
    pub sup_samples: usize,
    pub sup_error_estimator: String,
    pub rows: usize,
    pub complete: bool,
}

/// Paths and rows of a finished sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub csv: PathBuf,
    pub sidecar: PathBuf,
    /// Rows taken over from an earlier run.
    pub resumed: usize,
}

pub fn rows_to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(SWEEP_COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
}

pub fn rows_from_csv(text: &str) -> Result<Vec<SweepRow>> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().map(|r| r.map_err(csv_err)).collect()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Runs every sweep point of `config`, writing `results.csv` and
/// `results.json` into `out_dir`.
///
/// Finished rows are journaled to `results.csv.partial` as they complete, so
/// an interrupted run resumes where it stopped when the config hash matches.
pub fn run_sweep(config: &ExperimentConfig, out_dir: &Path, threads: Option<usize>) -> Result<SweepOutcome> {
    config.validate()?;
    let points = config.points();
    if points.is_empty() {
        return Err(Error::Config("sweep grid is empty: give budgets or a training section".into()));
    }
    fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join("results.csv");
    let journal = out_dir.join("results.csv.partial");
    let sidecar_path = out_dir.join("results.json");
    let hash = config.hash();

    let previous: Option<SweepSidecar> =
        fs::read_to_string(&sidecar_path).ok().and_then(|s| serde_json::from_str(&s).ok());
    let mut done: BTreeMap<String, SweepRow> = BTreeMap::new();
    if previous.as_ref().is_some_and(|p| p.config_hash == hash) {
        for path in [&csv_path, &journal] {
            if let Ok(text) = fs::read_to_string(path) {
                // a torn final journal line is dropped
                for row in rows_from_csv_lenient(&text) {
                    done.insert(row.key.clone(), row);
                }
            }
        }
    } else if journal.exists() {
        fs::remove_file(&journal)?;
    }
    let resumed = points.iter().filter(|p| done.contains_key(&p.key())).count();

    let mut sidecar = SweepSidecar {
        config_hash: hash,
        config: config.clone(),
        columns: SWEEP_COLUMNS.iter().map(|s| s.to_string()).collect(),
        sup_samples: config.sup_samples,
        sup_error_estimator: format!("max over {} Monte Carlo triples", config.sup_samples),
        rows: points.len(),
        complete: false,
    };
    write_atomic(&sidecar_path, &serde_json::to_string_pretty(&sidecar)?)?;

    let todo: Vec<SweepPoint> = points.iter().filter(|p| !done.contains_key(&p.key())).copied().collect();
    if !todo.is_empty() {
        let lab = Lab::new(config.clone())?;
        let fresh = !journal.exists();
        let file = fs::OpenOptions::new().create(true).append(true).open(&journal)?;
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        if fresh {
            writer.write_record(SWEEP_COLUMNS).map_err(csv_err)?;
            writer.flush()?;
        }
        let appender = Mutex::new(writer);
        let run = |p: &SweepPoint| -> Result<SweepRow> {
            let row = lab.run_point(p);
            let mut w = appender.lock().expect("journal lock");
            w.serialize(&row).map_err(csv_err)?;
            w.flush()?;
            Ok(row)
        };
        let rows = execute(&todo, threads, run)?;
        for row in rows {
            done.insert(row.key.clone(), row);
        }
    }

    let rows: Vec<SweepRow> = points.iter().map(|p| done[&p.key()].clone()).collect();
    write_atomic(&csv_path, &rows_to_csv(&rows)?)?;
    sidecar.complete = true;
    write_atomic(&sidecar_path, &serde_json::to_string_pretty(&sidecar)?)?;
    if journal.exists() {
        fs::remove_file(&journal)?;
    }
    Ok(SweepOutcome { rows, csv: csv_path, sidecar: sidecar_path, resumed })
}

fn rows_from_csv_lenient(text: &str) -> Vec<SweepRow> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().filter_map(|r| r.ok()).collect()
}

fn execute<T: Send, F>(items: &[SweepPoint], threads: Option<usize>, f: F) -> Result<Vec<T>>
where
    F: Fn(&SweepPoint) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            builder = builder.num_threads(n);
        }
        let pool = builder.build().map_err(|e| Error::Resource(e.to_string()))?;
        pool.install(|| items.par_iter().map(&f).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        items.iter().map(f).collect()
    }
}

/// Scaling model in transformed coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    /// `log e` against `log c`.
    Powerlaw,
    /// `log e` against `log(log c / log log c)`.
    LoglogIterated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub model: FitModel,
    pub points: Vec<(f64, f64)>,
    pub exponent: f64,
    pub intercept: f64,
    /// RMS residual in transformed coordinates.
    pub residual: f64,
}

/// Least-squares line through the transformed `(complexity, error)` points.
pub fn fit_scaling(points: &[(f64, f64)], model: FitModel) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {}", points.len())));
    }
    let transformed: Vec<(f64, f64)> = points
        .iter()
        .map(|&(c, e)| {
            if !(c > 0.0 && e > 0.0) {
                return Err(Error::Fit(format!("points must be positive, got ({c}, {e})")));
            }
            let x = match model {
                FitModel::Powerlaw => c.ln(),
                FitModel::LoglogIterated => {
                    if !(c.ln() > 1.0) {
                        return Err(Error::Fit(format!("log log c undefined or zero at c = {c}")));
                    }
                    (c.ln() / c.ln().ln()).ln()
                }
            };
            Ok((x, e.ln()))
        })
        .collect::<Result<_>>()?;
    let m = transformed.len() as f64;
    let mx = transformed.iter().map(|p| p.0).sum::<f64>() / m;
    let my = transformed.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = transformed.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 1e-24 * (1.0 + mx * mx) {
        return Err(Error::Fit("abscissa is constant".into()));
    }
    let sxy: f64 = transformed.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let residual = (transformed.iter().map(|p| (p.1 - intercept - exponent * p.0).powi(2)).sum::<f64>() / m).sqrt();
    Ok(ScalingFit { model, points: points.to_vec(), exponent, intercept, residual })
}

/// `(complexity, sup_error)` pairs of the successful rows, optionally
/// restricted to one `kind`.
pub fn fit_points(rows: &[SweepRow], kind: Option<&str>) -> Vec<(f64, f64)> {
    rows.iter()
        .filter(|r| r.is_ok() && kind.is_none_or(|k| r.kind == k))
        .filter_map(|r| Some((r.complexity?, r.sup_error?)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub p: usize,
    pub parallel_error: f64,
    pub nested_error: f64,
    pub parallel_complexity: f64,
    pub nested_complexity: f64,
    pub complexity_ratio: f64,
}

/// Monte Carlo sup-errors and complexities of both aggregation variants for
/// each stage-1 grid size.
pub fn compare_aggregation(lab: &Lab) -> Result<Vec<CompareRow>> {
    let c = lab.config.compare.as_ref().ok_or_else(|| Error::Config("no compare section".into()))?;
    let seed = lab.seed(&[4]);
    c.p_values
        .iter()
        .map(|&p| {
            let base = ConstructionBudget {
                p,
                h: c.h,
                n: c.n,
                delta_w: c.delta_w,
                delta_u: c.delta_u,
                variant: Aggregation::Parallel,
                limits: c.limits,
            };
            let par = build_constructive(&lab.operator, base)?;
            let nest = build_constructive(&lab.operator, base.with_variant(Aggregation::Nested))?;
            let n = lab.config.sup_samples;
            let parallel_error = sup_error(&par, &lab.operator, &lab.measures, n, seed)?.value;
            let nested_error = sup_error(&nest, &lab.operator, &lab.measures, n, seed)?.value;
            Ok(CompareRow {
                p,
                parallel_error,
                nested_error,
                parallel_complexity: par.complexity(),
                nested_complexity: nest.complexity(),
                complexity_ratio: nest.complexity() / par.complexity(),
            })
        })
        .collect()
}

pub fn compare_to_csv(rows: &[CompareRow]) -> Result<String> {
    to_csv(rows)
}

/// Envelope rows of the config's `bounds` section.
pub fn envelope_table(config: &ExperimentConfig) -> Result<Vec<EnvelopeRow>> {
    let b = config.bounds.as_ref().ok_or_else(|| Error::Config("no bounds section".into()))?;
    bound_envelopes(&b.params, &b.eps_grid)
}

pub fn envelopes_to_csv(rows: &[EnvelopeRow]) -> Result<String> {
    to_csv(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyRequest {
    pub p: f64,
    pub h: f64,
    pub n: f64,
    /// Budgets of the trunk, `u` and `alpha` subnets, in that order.
    pub subnets: [SubnetBudget; 3],
    pub eta: f64,
    #[serde(default)]
    pub log_t_override: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateRequest {
    pub n_alpha: Vec<u64>,
    pub d_w: usize,
    pub d_u: usize,
    pub beta_v: f64,
}

/// Input of the bound calculators; every section is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsRequest {
    #[serde(default)]
    pub generalization: Option<BoundInputs>,
    #[serde(default)]
    pub entropy: Option<EntropyRequest>,
    #[serde(default)]
    pub rate: Option<RateRequest>,
    #[serde(default)]
    pub envelopes: Option<EnvelopeConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n_alpha: u64,
    pub eps: f64,
    pub eta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub generalization: Option<BoundBreakdown>,
    pub entropy: Option<EntropyEstimate>,
    pub rate: Vec<RateRow>,
    pub envelopes: Vec<EnvelopeRow>,
    pub notes: Vec<String>,
}

pub fn evaluate_bounds(req: &BoundsRequest) -> Result<BoundsReport> {
    let mut notes = Vec::new();
    let generalization = req.generalization.as_ref().map(generalization_bound).transpose()?;
    let entropy = req
        .entropy
        .as_ref()
        .map(|e| metric_entropy_bound(e.p, e.h, e.n, e.subnets, e.eta, e.log_t_override))
        .transpose()?;
    let rate = match &req.rate {
        Some(r) => r
            .n_alpha
            .iter()
            .map(|&n| rate_schedule(n, r.d_w, r.d_u, r.beta_v).map(|(eps, eta)| RateRow { n_alpha: n, eps, eta }))
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    let envelopes = match &req.envelopes {
        Some(e) => {
            notes.push(format!(
                "envelope constants c = {} and d = {} are user-supplied; the true constants are unknown",
                e.params.c, e.params.d_eps
            ));
            let rows = bound_envelopes(&e.params, &e.eps_grid)?;
            if let Some(r) = rows.iter().find(|r| !r.ordered) {
                notes.push(format!("lower envelope exceeds upper envelope at eps = {}", r.eps));
            }
            rows
        }
        None => Vec::new(),
    };
    Ok(BoundsReport { generalization, entropy, rate, envelopes, notes })
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn base_config() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{
                "operator": {"name": "kernel", "quadrature_n": 40},
                "dims": [1, 1, 1],
                "cube": {"eta": 2.5, "terms": 4},
                "budgets": [
                    {"p": 2, "h": 2, "n": 3, "delta_w": 1.0, "delta_u": 1.0, "variant": "parallel"},
                    {"p": 3, "h": 3, "n": 5, "delta_w": 0.5, "delta_u": 0.5, "variant": "parallel"}
                ],
                "sup_samples": 40,
                "gen_samples": {"n_alpha": 3, "n_u": 2, "n_x": 3},
                "seed": 17
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn config_validation() {
        let c = base_config();
        assert_eq!(c.points().len(), 2);
        assert!(matches!(
            ExperimentConfig::from_json(r#"{"operator": {"name": "nope"}, "dims": [1,1,1]}"#),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            ExperimentConfig::from_json(r#"{"operator": {"name": "affine"}, "dims": [0,1,1]}"#),
            Err(Error::Config(_))
        ));
        let empty = ExperimentConfig { budgets: vec![], ..c.clone() };
        let dir = tempdir();
        assert!(matches!(run_sweep(&empty, &dir, Some(1)), Err(Error::Config(_))));
        assert_ne!(c.hash(), ExperimentConfig { seed: 18, ..c.clone() }.hash());
        assert_eq!(c.hash(), base_config().hash());
    }

    fn tempdir() -> PathBuf {
        static NEXT: std::sync::atomic::AtomicUsize = std::sync::atomic::AtomicUsize::new(0);
        let k = NEXT.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        let dir = std::env::temp_dir().join(format!("mnolab-lab-{}-{k}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn sweep_rows_and_determinism() {
        let c = base_config();
        let (d1, d2) = (tempdir(), tempdir());
        let a = run_sweep(&c, &d1, Some(2)).unwrap();
        assert_eq!(a.rows.len(), 2);
        assert!(a.rows.iter().all(|r| r.is_ok() && r.sup_error.unwrap().is_finite()));
        run_sweep(&c, &d2, Some(1)).unwrap();
        let t1 = fs::read(d1.join("results.csv")).unwrap();
        assert_eq!(t1, fs::read(d2.join("results.csv")).unwrap());
        assert!(String::from_utf8(t1.clone()).unwrap().starts_with(&SWEEP_COLUMNS.join(",")));
        assert!(!d1.join("results.csv.partial").exists());

        let again = run_sweep(&c, &d1, None).unwrap();
        assert_eq!(again.resumed, 2);
        assert_eq!(fs::read(d1.join("results.csv")).unwrap(), t1);
    }

    #[test]
    fn row_errors_do_not_stop_the_sweep() {
        let mut c = base_config();
        c.budgets.push(ConstructionBudget::parallel(2, 2, 2, 0.01, 1.0));
        let out = run_sweep(&c, &tempdir(), Some(1)).unwrap();
        assert!(out.rows[2].status.starts_with("error: resource"));
        assert!(out.rows[..2].iter().all(SweepRow::is_ok));
    }

    #[test]
    fn csv_roundtrip() {
        let out = run_sweep(&base_config(), &tempdir(), Some(1)).unwrap();
        let text = rows_to_csv(&out.rows).unwrap();
        assert_eq!(rows_from_csv(&text).unwrap(), out.rows);
    }

    #[test]
    fn fits_recover_exponents() {
        let pts: Vec<(f64, f64)> = [10.0, 100.0, 1e3, 1e4].iter().map(|&c: &f64| (c, c.powi(-2))).collect();
        let f = fit_scaling(&pts, FitModel::Powerlaw).unwrap();
        assert_relative_eq!(f.exponent, -2.0, epsilon = 1e-9);
        assert!(f.residual < 1e-9);
        let pts: Vec<(f64, f64)> = [1.2f64, 1.6, 2.0, 2.4, 3.0]
            .iter()
            .map(|s| {
                let c = s.exp().exp();
                (c, (c.ln() / c.ln().ln()).powi(-1))
            })
            .collect();
        assert_relative_eq!(fit_scaling(&pts, FitModel::LoglogIterated).unwrap().exponent, -1.0, epsilon = 1e-6);
        assert!(matches!(fit_scaling(&pts[..2], FitModel::Powerlaw), Err(Error::Fit(_))));
        assert!(matches!(fit_scaling(&[(5.0, 1.0), (5.0, 2.0), (5.0, 3.0)], FitModel::Powerlaw), Err(Error::Fit(_))));
    }

    #[test]
    fn single_term_variants_agree() {
        let mut c = base_config();
        c.compare = Some(CompareConfig {
            p_values: vec![1, 2],
            h: 2,
            n: 3,
            delta_w: 1.0,
            delta_u: 1.0,
            limits: ConstructionLimits::default(),
        });
        let rows = compare_aggregation(&Lab::new(c).unwrap()).unwrap();
        assert_eq!(rows[0].parallel_error, rows[0].nested_error);
        assert_eq!(rows[0].complexity_ratio, 1.0);
        assert!(rows[1].nested_complexity > rows[1].parallel_complexity);
        assert!(compare_to_csv(&rows).unwrap().starts_with("p,parallel_error"));
    }

    #[test]
    fn bounds_request() {
        let req: BoundsRequest = serde_json::from_str(
            r#"{
                "generalization": {"eps": 0.1, "eta": 0.01, "sigma": 0.0, "beta_v": 1.0, "n_alpha": 100, "n_u": 10,
                                   "n_x": 10, "log_cov_eta": 5.0, "log_cov_eta4b": 10.0},
                "entropy": {"p": 1, "h": 1, "n": 1, "eta": 1.0, "subnets": [
                    {"layers": 1, "magnitude": 1, "nonzeros": 1},
                    {"layers": 1, "magnitude": 1, "nonzeros": 1},
                    {"layers": 1, "magnitude": 1, "nonzeros": 1}]},
                "rate": {"n_alpha": [1000], "d_w": 1, "d_u": 1, "beta_v": 1.0}
            }"#,
        )
        .unwrap();
        let r = evaluate_bounds(&req).unwrap();
        assert_relative_eq!(r.generalization.unwrap().total, 3.833_333_333_333_333, epsilon = 1e-10);
        assert_relative_eq!(r.entropy.unwrap().log_covering, 4.0 * 3f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(r.rate[0].eta, 0.004, epsilon = 1e-15);
        assert!(r.envelopes.is_empty());
    }

    #[test]
    fn envelope_rows() {
        let mut c = base_config();
        c.bounds = Some(EnvelopeConfig {
            params: EnvelopeParams { eta: 2.0, delta: 0.0, r: 1.0, c: 1.0, d_eps: 1.0, d_w: 2, d_u: 1 },
            eps_grid: vec![0.5, 0.25],
        });
        let rows = envelope_table(&c).unwrap();
        assert_relative_eq!(rows[0].log_lower, 2f64.powf(1.0 / 3.0), epsilon = 1e-12);
        assert!(envelopes_to_csv(&rows).unwrap().starts_with("eps,log_lower,log_upper,ordered"));
    }
}
