//! Hierarchical training data, empirical risk minimization over separable
//! networks, and Monte Carlo error estimation.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cube::{calibrate_amplitude, CalibrationGrid, CubeSpec, SineCube};
use crate::error::{Error, Result};
use crate::lipschitz::{project, LipschitzClassSpec};
use crate::operators::{Domains, MultiOperator};
use crate::relu::{clip_apply, ReluNet};
use crate::rng::stream;
use crate::separable::{build_constructive, ConstructionBudget, Features, SeparableNet, Subnet};
use crate::{OperatorMap, ScalarFn};

/// Random input functions.
pub trait FunctionMeasure: Send + Sync {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<Arc<dyn ScalarFn>>;
}

/// Uniform coordinates `y in [0, 1]^J` pushed through a cube on
/// `[-gamma, gamma]^d`, plus a uniform constant in `[-shift, shift]`.
#[derive(Clone, Debug)]
pub struct CubeMeasure {
    pub cube: SineCube,
    pub gamma: f64,
    pub shift: f64,
}

impl CubeMeasure {
    pub fn new(cube: SineCube, gamma: f64) -> Self {
        Self { cube, gamma, shift: 0.0 }
    }

    /// Cube whose amplitude is calibrated so that all samples lie in `class`.
    pub fn calibrated(class: &LipschitzClassSpec, eta: f64, terms: usize) -> Result<Self> {
        Self::calibrated_shifted(class, eta, terms, 0.0)
    }

    /// As [`CubeMeasure::calibrated`], with the cube calibrated against the
    /// bound `beta - shift` so that shifted samples stay in `class`.
    pub fn calibrated_shifted(class: &LipschitzClassSpec, eta: f64, terms: usize, shift: f64) -> Result<Self> {
        if !(shift >= 0.0 && shift < class.bound) {
            return Err(Error::param(format!("shift must lie in [0, {}), got {shift}", class.bound)));
        }
        let target = LipschitzClassSpec { bound: class.bound - shift, ..*class };
        let amplitude = calibrate_amplitude(class.d, eta, 1.0, terms, &target, CalibrationGrid::for_class(&target))?;
        let cube = SineCube::new(CubeSpec { d: class.d, eta, amplitude, terms, r: 1.0 })?;
        Ok(Self { cube, gamma: class.gamma, shift })
    }
}

impl FunctionMeasure for CubeMeasure {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<Arc<dyn ScalarFn>> {
        let y: Vec<f64> = (0..self.cube.spec().terms).map(|_| rng.random::<f64>()).collect();
        let e = self.cube.element_on(&y, self.gamma)?;
        if self.shift == 0.0 {
            return Ok(Arc::new(e));
        }
        let c = self.shift * (2.0 * rng.random::<f64>() - 1.0);
        Ok(Arc::new(move |x: &[f64]| c + e.eval(x)))
    }
}

/// Uniform points on `[-gamma, gamma]^d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformBox {
    pub d: usize,
    pub gamma: f64,
}

impl UniformBox {
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..self.d).map(|_| rng.random_range(-self.gamma..=self.gamma)).collect()
    }
}

/// The three sampling measures of a benchmark.
#[derive(Clone)]
pub struct Measures {
    pub alpha: Arc<dyn FunctionMeasure>,
    pub u: Arc<dyn FunctionMeasure>,
    pub x: UniformBox,
}

impl Measures {
    /// Calibrated cube measures on both input classes and uniform points on the output domain.
    pub fn cubes(domains: &Domains, eta: f64, terms: usize) -> Result<Self> {
        Self::shifted_cubes(domains, eta, terms, 0.0)
    }

    /// Cube measures with a random constant offset of size at most `shift`.
    pub fn shifted_cubes(domains: &Domains, eta: f64, terms: usize, shift: f64) -> Result<Self> {
        Ok(Self {
            alpha: Arc::new(CubeMeasure::calibrated_shifted(&domains.w, eta, terms, shift)?),
            u: Arc::new(CubeMeasure::calibrated_shifted(&domains.u, eta, terms, shift)?),
            x: UniformBox { d: domains.v.d, gamma: domains.v.gamma },
        })
    }
}

/// One labeled point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub alpha_id: usize,
    /// Global index `alpha_id * n_u + i`.
    pub u_id: usize,
    pub x: Vec<f64>,
    pub label: f64,
}

/// Hierarchical sample: `n_alpha` functions `alpha`, `n_u` functions `u`
/// per `alpha`, and `n_x` labeled points per pair, ordered `(alpha, u, x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub n_alpha: usize,
    pub n_u: usize,
    pub n_x: usize,
    pub sigma: f64,
    pub seed: u64,
    pub w_sensors: Vec<Vec<f64>>,
    pub u_sensors: Vec<Vec<f64>>,
    /// Sensor vectors of the sampled `alpha`.
    pub alpha_samples: Vec<Vec<f64>>,
    /// Sensor vectors of the sampled `u`, indexed by `u_id`.
    pub u_samples: Vec<Vec<f64>>,
    #[serde(skip)]
    pub points: Vec<LabeledPoint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub n_alpha: usize,
    pub n_u: usize,
    pub n_x: usize,
}

impl SampleCounts {
    pub fn new(n_alpha: usize, n_u: usize, n_x: usize) -> Self {
        Self { n_alpha, n_u, n_x }
    }

    pub fn total(&self) -> usize {
        self.n_alpha * self.n_u * self.n_x
    }

    fn validate(&self) -> Result<()> {
        if self.n_alpha == 0 || self.n_u == 0 || self.n_x == 0 {
            return Err(Error::param("sample counts must be positive"));
        }
        Ok(())
    }
}

fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Draws a training set. Tier `alpha_l` uses stream `[1, l]`, `u_li` uses
/// `[2, l, i]`, and the points and noise of pair `(l, i)` use `[3, l, i]`.
pub fn generate_training_set(
    g: &MultiOperator,
    measures: &Measures,
    w_sensors: &[Vec<f64>],
    u_sensors: &[Vec<f64>],
    counts: SampleCounts,
    sigma: f64,
    seed: u64,
) -> Result<TrainingSet> {
    counts.validate()?;
    if !(sigma >= 0.0) {
        return Err(Error::param("noise level must be >= 0"));
    }
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::param(e.to_string()))?;
    let SampleCounts { n_alpha, n_u, n_x } = counts;
    let alphas = map_indexed(n_alpha, |l| measures.alpha.sample(&mut stream(seed, &[1, l as u64])))?;
    let blocks = map_indexed(n_alpha * n_u, |pair| {
        let (l, i) = (pair / n_u, pair % n_u);
        let u = measures.u.sample(&mut stream(seed, &[2, l as u64, i as u64]))?;
        let mut rng = stream(seed, &[3, l as u64, i as u64]);
        let mut pts = Vec::with_capacity(n_x);
        for _ in 0..n_x {
            let x = measures.x.sample(&mut rng);
            let zeta = if sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            let label = g.eval(alphas[l].as_ref(), u.as_ref(), &x)? + zeta;
            pts.push(LabeledPoint { alpha_id: l, u_id: pair, x, label });
        }
        Ok((project(u.as_ref(), u_sensors), pts))
    })?;
    let mut u_samples = Vec::with_capacity(blocks.len());
    let mut points = Vec::with_capacity(counts.total());
    for (s, p) in blocks {
        u_samples.push(s);
        points.extend(p);
    }
    Ok(TrainingSet {
        n_alpha,
        n_u,
        n_x,
        sigma,
        seed,
        w_sensors: w_sensors.to_vec(),
        u_sensors: u_sensors.to_vec(),
        alpha_samples: alphas.iter().map(|a| project(a.as_ref(), w_sensors)).collect(),
        u_samples,
        points,
    })
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn x_dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.x.len())
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() != self.n_alpha * self.n_u * self.n_x {
            return Err(Error::shape(format!(
                "{} points, expected {} x {} x {}",
                self.points.len(),
                self.n_alpha,
                self.n_u,
                self.n_x
            )));
        }
        if self.alpha_samples.len() != self.n_alpha || self.u_samples.len() != self.n_alpha * self.n_u {
            return Err(Error::shape("sample tiers disagree with the declared counts"));
        }
        let d = self.x_dim();
        for p in &self.points {
            if p.alpha_id >= self.n_alpha || p.u_id >= self.u_samples.len() || p.x.len() != d {
                return Err(Error::shape("labeled point refers to a missing sample"));
            }
        }
        Ok(())
    }

    /// CSV body with columns `alpha_id,u_id,x_1..x_d,label`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["alpha_id".to_string(), "u_id".to_string()];
        header.extend((1..=self.x_dim()).map(|k| format!("x_{k}")));
        header.push("label".into());
        w.write_record(&header).map_err(csv_err)?;
        for p in &self.points {
            let mut row = vec![p.alpha_id.to_string(), p.u_id.to_string()];
            row.extend(p.x.iter().map(f64::to_string));
            row.push(p.label.to_string());
            w.write_record(&row).map_err(csv_err)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Config(e.to_string()))?)
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// Sidecar JSON with counts, seed, noise level and sensor data.
    pub fn sidecar_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_parts(csv_text: &str, sidecar: &str) -> Result<Self> {
        let mut set: TrainingSet = serde_json::from_str(sidecar)?;
        let mut r = csv::Reader::from_reader(csv_text.as_bytes());
        let cols = r.headers().map_err(csv_err)?.len();
        if cols < 3 {
            return Err(Error::Config("training CSV needs alpha_id, u_id and label columns".into()));
        }
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let num = |i: usize| -> Result<f64> {
                rec[i].parse::<f64>().map_err(|e| Error::Config(format!("bad number {:?}: {e}", &rec[i])))
            };
            let id = |i: usize| -> Result<usize> {
                rec[i].parse::<usize>().map_err(|e| Error::Config(format!("bad id {:?}: {e}", &rec[i])))
            };
            set.points.push(LabeledPoint {
                alpha_id: id(0)?,
                u_id: id(1)?,
                x: (2..cols - 1).map(num).collect::<Result<_>>()?,
                label: num(cols - 1)?,
            });
        }
        set.validate()?;
        Ok(set)
    }

    /// Writes `<stem>.csv` and `<stem>.json`.
    pub fn save(&self, stem: &Path) -> Result<(PathBuf, PathBuf)> {
        let csv_path = stem.with_extension("csv");
        let json_path = stem.with_extension("json");
        std::fs::write(&csv_path, self.to_csv()?)?;
        std::fs::write(&json_path, self.sidecar_json()?)?;
        Ok((csv_path, json_path))
    }

    pub fn load(stem: &Path) -> Result<Self> {
        let csv_text = std::fs::read_to_string(stem.with_extension("csv"))?;
        let sidecar = std::fs::read_to_string(stem.with_extension("json"))?;
        Self::from_parts(&csv_text, &sidecar)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}

/// Template whose subnets are the tents of a constructive approximant and
/// whose coefficients are zero.
pub fn pou_template(g: &MultiOperator, budget: ConstructionBudget, max_terms: usize) -> Result<SeparableNet> {
    let mut net = build_constructive(g, budget)?.to_separable(max_terms)?;
    net.theta.iter_mut().for_each(|t| *t = 0.0);
    Ok(net)
}

/// Template with random one-hidden-layer ReLU subnets and zero coefficients.
pub fn relu_template(
    w_sensors: Vec<Vec<f64>>,
    u_sensors: Vec<Vec<f64>>,
    d_v: usize,
    shape: [usize; 3],
    width: usize,
    seed: u64,
) -> Result<SeparableNet> {
    let family = |tag: u64, count: usize, d_in: usize| -> Result<Vec<Subnet>> {
        (0..count)
            .map(|i| {
                let mut rng = stream(seed, &[5, tag, i as u64]);
                Ok(Subnet::Relu { net: ReluNet::random(&[d_in, width, 1], 1.0, &mut rng)? })
            })
            .collect()
    };
    let [p, h, n] = shape;
    SeparableNet::new(
        vec![0.0; p * h * n],
        family(0, p, w_sensors.len())?,
        family(1, h, u_sensors.len())?,
        family(2, n, d_v)?,
        w_sensors,
        u_sensors,
        None,
        None,
    )
}

/// Projected gradient descent settings. `batch = None` means full batch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub steps: usize,
    pub lr: f64,
    #[serde(default)]
    pub batch: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Clip level `a` of the trained operator.
    pub clip_a: f64,
    /// Coefficient box `[-I, I]`.
    pub theta_bound: f64,
    /// Also update ReLU subnets; tent and constant subnets stay fixed.
    #[serde(default)]
    pub train_subnets: bool,
}

impl TrainOptions {
    fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || !(self.clip_a > 0.0) || !(self.theta_bound > 0.0) {
            return Err(Error::param("lr, clip level and coefficient bound must be positive"));
        }
        if self.batch == Some(0) {
            return Err(Error::param("batch size must be positive"));
        }
        Ok(())
    }
}

/// Loss above which training is declared divergent.
pub const DIVERGENCE_LOSS: f64 = 1e6;

/// Trained net and the empirical loss before the first step and after each step.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub net: SeparableNet,
    pub trace: Vec<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        *self.trace.last().expect("trace holds the initial loss")
    }
}

fn point_inputs<'a>(set: &'a TrainingSet, p: &'a LabeledPoint) -> (&'a [f64], &'a [f64], &'a [f64]) {
    (&set.alpha_samples[p.alpha_id], &set.u_samples[p.u_id], &p.x)
}

fn all_features(net: &SeparableNet, set: &TrainingSet) -> Result<Vec<Features>> {
    map_indexed(set.len(), |i| {
        let (a, u, x) = point_inputs(set, &set.points[i]);
        net.features(a, u, x)
    })
}

fn empirical_loss(net: &SeparableNet, set: &TrainingSet, feats: &[Features]) -> f64 {
    let sq: Vec<f64> = feats
        .iter()
        .zip(&set.points)
        .map(|(f, p)| {
            let out = clip_opt(net.clip_a, net.contract(f));
            (out - p.label).powi(2)
        })
        .collect();
    pairwise_sum(&sq) / set.len() as f64
}

fn clip_opt(a: Option<f64>, v: f64) -> f64 {
    a.map_or(v, |a| clip_apply(a, v))
}

/// Sum in a fixed pairwise order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n if n <= 8 => v.iter().sum(),
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

fn pairwise_sum_vecs(v: &[Vec<f64>]) -> Vec<f64> {
    match v.len() {
        0 => Vec::new(),
        1 => v[0].clone(),
        n => {
            let mut a = pairwise_sum_vecs(&v[..n / 2]);
            let b = pairwise_sum_vecs(&v[n / 2..]);
            a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            a
        }
    }
}

fn relu_params(s: &Subnet) -> Option<&ReluNet> {
    match s {
        Subnet::Relu { net } => Some(net),
        _ => None,
    }
}

fn subnet_grads(family: &[Subnet], input: &[f64], upstream: &[f64]) -> Result<Vec<Option<crate::relu::NetGrad>>> {
    family.iter().zip(upstream).map(|(s, &g)| relu_params(s).map(|n| n.grad_params(input, &[g])).transpose()).collect()
}

/// Minimizes the clipped empirical squared loss by projected gradient descent.
/// The iterate with the lowest loss seen is returned, so the final loss never
/// exceeds the initial one.
pub fn erm_train(template: &SeparableNet, set: &TrainingSet, opt: &TrainOptions) -> Result<TrainReport> {
    opt.validate()?;
    set.validate()?;
    if set.w_sensors.len() != template.w_sensors.len() || set.u_sensors.len() != template.u_sensors.len() {
        return Err(Error::shape("training set sensors differ from the network sensors"));
    }
    if let Some(t) = template.theta.iter().find(|t| t.abs() > opt.theta_bound) {
        return Err(Error::param(format!("initial coefficient {t} outside [-I, I]")));
    }
    let mut net = template.clone();
    net.clip_a = Some(opt.clip_a);
    net.theta_bound = Some(opt.theta_bound);
    let train_subnets = opt.train_subnets
        && net.l_nets.iter().chain(&net.b_nets).chain(&net.tau_nets).any(|s| relu_params(s).is_some());

    let mut feats = all_features(&net, set)?;
    let mut trace = vec![empirical_loss(&net, set, &feats)];
    let mut best = (trace[0], net.clone());
    let [_, h, n] = net.theta_shape;
    let nb = opt.batch.unwrap_or(set.len()).min(set.len());

    for step in 0..opt.steps {
        let batch: Vec<usize> = if nb == set.len() {
            (0..set.len()).collect()
        } else {
            let mut idx = sample_indices(&mut stream(opt.seed, &[4, step as u64]), set.len(), nb).into_vec();
            idx.sort_unstable();
            idx
        };
        // per-point residual factor 2 (out - w) clip'(raw) / |batch|
        let scale = 2.0 / nb as f64;
        let factors: Vec<f64> = batch
            .iter()
            .map(|&i| {
                let raw = net.contract(&feats[i]);
                let slope = if raw.abs() < opt.clip_a { 1.0 } else { 0.0 };
                scale * (clip_apply(opt.clip_a, raw) - set.points[i].label) * slope
            })
            .collect();
        let theta_grads: Vec<Vec<f64>> = batch
            .iter()
            .zip(&factors)
            .map(|(&i, &r)| {
                let f = &feats[i];
                let mut g = vec![0.0; net.theta.len()];
                if r != 0.0 {
                    for (p, lp) in f.l.iter().enumerate() {
                        for (k, bk) in f.b.iter().enumerate() {
                            let base = (p * h + k) * n;
                            for (l, tl) in f.tau.iter().enumerate() {
                                g[base + l] = r * lp * bk * tl;
                            }
                        }
                    }
                }
                g
            })
            .collect();
        let grad = pairwise_sum_vecs(&theta_grads);

        if train_subnets {
            update_subnets(&mut net, set, &batch, &factors, &feats, opt.lr)?;
        }
        for (t, g) in net.theta.iter_mut().zip(&grad) {
            *t = (*t - opt.lr * g).clamp(-opt.theta_bound, opt.theta_bound);
        }
        if train_subnets {
            feats = all_features(&net, set)?;
        }
        let loss = empirical_loss(&net, set, &feats);
        trace.push(loss);
        if !loss.is_finite() || loss > DIVERGENCE_LOSS {
            return Err(Error::Training { step: step + 1, loss, trace });
        }
        if loss < best.0 {
            best = (loss, net.clone());
        }
    }
    Ok(TrainReport { net: best.1, trace })
}

fn update_subnets(
    net: &mut SeparableNet,
    set: &TrainingSet,
    batch: &[usize],
    factors: &[f64],
    feats: &[Features],
    lr: f64,
) -> Result<()> {
    let [p_n, h, n] = net.theta_shape;
    let th = &net.theta;
    let mut l_acc: Vec<Vec<Option<crate::relu::NetGrad>>> = Vec::new();
    let mut b_acc = Vec::new();
    let mut t_acc = Vec::new();
    for (&i, &r) in batch.iter().zip(factors) {
        if r == 0.0 {
            continue;
        }
        let f = &feats[i];
        let (a, u, x) = point_inputs(set, &set.points[i]);
        let dl: Vec<f64> = (0..p_n)
            .map(|p| {
                r * (0..h)
                    .map(|k| f.b[k] * (0..n).map(|l| th[(p * h + k) * n + l] * f.tau[l]).sum::<f64>())
                    .sum::<f64>()
            })
            .collect();
        let db: Vec<f64> = (0..h)
            .map(|k| {
                r * (0..p_n)
                    .map(|p| f.l[p] * (0..n).map(|l| th[(p * h + k) * n + l] * f.tau[l]).sum::<f64>())
                    .sum::<f64>()
            })
            .collect();
        let dt: Vec<f64> = (0..n)
            .map(|l| {
                r * (0..p_n)
                    .map(|p| f.l[p] * (0..h).map(|k| th[(p * h + k) * n + l] * f.b[k]).sum::<f64>())
                    .sum::<f64>()
            })
            .collect();
        l_acc.push(subnet_grads(&net.l_nets, a, &dl)?);
        b_acc.push(subnet_grads(&net.b_nets, u, &db)?);
        t_acc.push(subnet_grads(&net.tau_nets, x, &dt)?);
    }
    for (family, acc) in [(&mut net.l_nets, l_acc), (&mut net.b_nets, b_acc), (&mut net.tau_nets, t_acc)] {
        for (j, s) in family.iter_mut().enumerate() {
            if let Subnet::Relu { net: rn } = s {
                for g in acc.iter().filter_map(|row| row[j].as_ref()) {
                    rn.add_scaled(-lr, g);
                }
            }
        }
    }
    Ok(())
}

/// Exact unclipped least-squares coefficients for frozen subnets, and the
/// resulting empirical loss.
pub fn least_squares_theta(net: &SeparableNet, set: &TrainingSet) -> Result<(Vec<f64>, f64)> {
    set.validate()?;
    let feats = all_features(net, set)?;
    let cols = net.theta.len();
    let [_, h, n] = net.theta_shape;
    let mut phi = DMatrix::<f64>::zeros(set.len(), cols);
    for (row, f) in feats.iter().enumerate() {
        for (p, lp) in f.l.iter().enumerate() {
            for (k, bk) in f.b.iter().enumerate() {
                for (l, tl) in f.tau.iter().enumerate() {
                    phi[(row, (p * h + k) * n + l)] = lp * bk * tl;
                }
            }
        }
    }
    let w = DVector::from_iterator(set.len(), set.points.iter().map(|p| p.label));
    let svd = phi.clone().svd(true, true);
    let theta = svd.solve(&w, 1e-12).map_err(|e| Error::Fit(e.to_string()))?;
    let resid = &phi * &theta - &w;
    Ok((theta.iter().copied().collect(), resid.norm_squared() / set.len() as f64))
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Mean over `(alpha, u)` pairs of `(1/n_x) sum_j (net - G)^2`, with the
/// standard error over pairs.
pub fn estimate_generalization(
    net: &dyn OperatorMap,
    g: &MultiOperator,
    measures: &Measures,
    counts: SampleCounts,
    seed: u64,
) -> Result<Estimate> {
    counts.validate()?;
    let SampleCounts { n_alpha, n_u, n_x } = counts;
    let alphas = map_indexed(n_alpha, |l| measures.alpha.sample(&mut stream(seed, &[11, l as u64])))?;
    let pair_errors = map_indexed(n_alpha * n_u, |pair| {
        let (l, i) = (pair / n_u, pair % n_u);
        let u = measures.u.sample(&mut stream(seed, &[12, l as u64, i as u64]))?;
        let mut rng = stream(seed, &[13, l as u64, i as u64]);
        let mut s = 0.0;
        for _ in 0..n_x {
            let x = measures.x.sample(&mut rng);
            s += (net.eval(alphas[l].as_ref(), u.as_ref(), &x)? - g.eval(alphas[l].as_ref(), u.as_ref(), &x)?).powi(2);
        }
        Ok(s / n_x as f64)
    })?;
    Ok(mean_stderr(&pair_errors))
}

fn mean_stderr(v: &[f64]) -> Estimate {
    let m = v.len();
    let mean = pairwise_sum(v) / m as f64;
    let stderr = if m > 1 {
        let dev: Vec<f64> = v.iter().map(|e| (e - mean).powi(2)).collect();
        (pairwise_sum(&dev) / (m - 1) as f64 / m as f64).sqrt()
    } else {
        0.0
    };
    Estimate { mean, stderr, samples: m }
}

/// Monte Carlo sup-error `max |net - G|` over `samples` random triples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupError {
    pub value: f64,
    pub samples: usize,
}

/// Triple `t` draws `alpha`, `u` and `x` from streams `[21, t]`, `[22, t]`, `[23, t]`.
pub fn sup_error(
    net: &dyn OperatorMap,
    g: &MultiOperator,
    measures: &Measures,
    samples: usize,
    seed: u64,
) -> Result<SupError> {
    if samples == 0 {
        return Err(Error::param("sup-error needs at least one sample"));
    }
    let errs = map_indexed(samples, |t| {
        let alpha = measures.alpha.sample(&mut stream(seed, &[21, t as u64]))?;
        let u = measures.u.sample(&mut stream(seed, &[22, t as u64]))?;
        let x = measures.x.sample(&mut stream(seed, &[23, t as u64]));
        Ok((net.eval(alpha.as_ref(), u.as_ref(), &x)? - g.eval(alpha.as_ref(), u.as_ref(), &x)?).abs())
    })?;
    Ok(SupError { value: errs.iter().copied().fold(0.0, f64::max), samples })
}
