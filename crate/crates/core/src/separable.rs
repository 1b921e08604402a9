//! Separable multiple-operator networks, the concatenated-input baseline,
//! complexity accounting, and the constructive partition-of-unity
//! approximant with parallel or nested aggregation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lipschitz::{build_cover, build_pou, lift, project, Lifted, LipschitzClassSpec, PartitionOfUnity};
use crate::operators::MultiOperator;
use crate::relu::{clip_apply, Layer, ReluNet};
use crate::{OperatorMap, ScalarFn};

/// Tent function of node `index` on a uniform grid of `nodes` points over
/// `[lo, hi]`. Inputs are clamped into `[lo, hi]`; a single node gives the
/// constant 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HatAxis {
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
    pub index: usize,
}

impl HatAxis {
    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.nodes - 1) as f64
    }

    pub fn node(&self) -> f64 {
        grid_node(self.lo, self.hi, self.nodes, self.index)
    }

    pub fn eval(&self, t: f64) -> f64 {
        if self.nodes <= 1 {
            return 1.0;
        }
        let t = t.clamp(self.lo, self.hi);
        (1.0 - (t - self.node()).abs() / self.spacing()).max(0.0)
    }

    /// Exact ReLU realization on `[lo, hi]`.
    pub fn relu_net(&self) -> ReluNet {
        let build = |w1: Vec<f64>, b1: Vec<f64>, w2: Vec<f64>, b2: f64| {
            let k = w1.len();
            ReluNet::new(vec![
                Layer::new(k, 1, w1, b1).expect("hat layer"),
                Layer::new(1, k, w2, vec![b2]).expect("hat layer"),
            ])
            .expect("hat net")
        };
        if self.nodes <= 1 {
            return ReluNet::new(vec![Layer::new(1, 1, vec![0.0], vec![1.0]).expect("constant")]).expect("constant");
        }
        let h = self.spacing();
        let c = self.node();
        if self.index == 0 {
            build(vec![1.0, 1.0], vec![-self.lo, -self.lo - h], vec![-1.0 / h, 1.0 / h], 1.0)
        } else if self.index + 1 == self.nodes {
            build(vec![-1.0, -1.0], vec![self.hi, self.hi - h], vec![-1.0 / h, 1.0 / h], 1.0)
        } else {
            build(vec![1.0; 3], vec![h - c, -c, -h - c], vec![1.0 / h, -2.0 / h, 1.0 / h], 0.0)
        }
    }
}

fn grid_node(lo: f64, hi: f64, nodes: usize, index: usize) -> f64 {
    if nodes <= 1 {
        0.5 * (lo + hi)
    } else if index + 1 == nodes {
        hi
    } else {
        lo + (hi - lo) * index as f64 / (nodes - 1) as f64
    }
}

/// A scalar subnet of a separable network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Subnet {
    Relu {
        net: ReluNet,
    },
    /// Product of one-dimensional tents, one per input coordinate.
    Hat {
        axes: Vec<HatAxis>,
    },
    Constant {
        dim: usize,
        value: f64,
    },
}

impl Subnet {
    pub fn input_dim(&self) -> usize {
        match self {
            Subnet::Relu { net } => net.input_dim(),
            Subnet::Hat { axes } => axes.len(),
            Subnet::Constant { dim, .. } => *dim,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(Error::shape(format!("subnet expects {} inputs, got {}", self.input_dim(), x.len())));
        }
        Ok(match self {
            Subnet::Relu { net } => net.forward(x)?[0],
            Subnet::Hat { axes } => axes.iter().zip(x).map(|(a, &t)| a.eval(t)).product(),
            Subnet::Constant { value, .. } => *value,
        })
    }

    /// Nonzero parameters. A tensor tent counts the ReLU realizations of its
    /// one-dimensional factors; the multiplication gadget is not counted.
    pub fn count_nonzero(&self) -> usize {
        match self {
            Subnet::Relu { net } => net.count_nonzero(),
            Subnet::Hat { axes } => axes.iter().map(|a| a.relu_net().count_nonzero()).sum(),
            Subnet::Constant { value, .. } => usize::from(*value != 0.0),
        }
    }

    fn check_scalar(&self) -> Result<()> {
        match self {
            Subnet::Relu { net } if net.output_dim() != 1 => Err(Error::shape("subnets must have scalar output")),
            _ => Ok(()),
        }
    }
}

/// Complexity `2 (||Theta||_0 + H K_2 + N K_1 + P K_3)`.
pub fn separable_complexity(theta_nonzero: usize, hk2: usize, nk1: usize, pk3: usize) -> usize {
    2 * (theta_nonzero + hk2 + nk1 + pk3)
}

/// Complexity `2 (||Theta||_0 + N K_1 + H K_2)` for concatenated inputs.
pub fn concat_complexity(theta_nonzero: usize, nk1: usize, hk2: usize) -> usize {
    2 * (theta_nonzero + nk1 + hk2)
}

/// Grouped nonzero counts of a network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityParts {
    pub theta: usize,
    /// Sum over the `u`-subnets `b_k`.
    pub branch_u: usize,
    /// Sum over the trunk subnets `tau_l`.
    pub trunk: usize,
    /// Sum over the `alpha`-subnets `l_p`; zero for concatenated networks.
    pub branch_alpha: usize,
}

impl ComplexityParts {
    pub fn total(&self) -> usize {
        separable_complexity(self.theta, self.branch_u, self.trunk, self.branch_alpha)
    }
}

fn clip(a: Option<f64>, v: f64) -> f64 {
    match a {
        Some(a) => clip_apply(a, v),
        None => v,
    }
}

fn check_family(nets: &[Subnet], dim: usize, what: &str) -> Result<()> {
    if nets.is_empty() {
        return Err(Error::shape(format!("{what} family is empty")));
    }
    for n in nets {
        n.check_scalar()?;
        if n.input_dim() != dim {
            return Err(Error::shape(format!("{what} subnet takes {} inputs, expected {dim}", n.input_dim())));
        }
    }
    Ok(())
}

fn eval_family(nets: &[Subnet], x: &[f64]) -> Result<Vec<f64>> {
    nets.iter().map(|n| n.eval(x)).collect()
}

/// `sum_{p,k,l} theta_pkl l_p(alpha) b_k(u) tau_l(x)`, optionally clipped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparableNet {
    /// `[P, H, N]`.
    pub theta_shape: [usize; 3],
    /// Row-major `theta[(p H + k) N + l]`.
    pub theta: Vec<f64>,
    pub l_nets: Vec<Subnet>,
    pub b_nets: Vec<Subnet>,
    pub tau_nets: Vec<Subnet>,
    pub w_sensors: Vec<Vec<f64>>,
    pub u_sensors: Vec<Vec<f64>>,
    pub clip_a: Option<f64>,
    pub theta_bound: Option<f64>,
}

/// Subnet outputs at one input triple.
#[derive(Clone, Debug, PartialEq)]
pub struct Features {
    pub l: Vec<f64>,
    pub b: Vec<f64>,
    pub tau: Vec<f64>,
}

impl SeparableNet {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        theta: Vec<f64>,
        l_nets: Vec<Subnet>,
        b_nets: Vec<Subnet>,
        tau_nets: Vec<Subnet>,
        w_sensors: Vec<Vec<f64>>,
        u_sensors: Vec<Vec<f64>>,
        clip_a: Option<f64>,
        theta_bound: Option<f64>,
    ) -> Result<Self> {
        let net = Self {
            theta_shape: [l_nets.len(), b_nets.len(), tau_nets.len()],
            theta,
            l_nets,
            b_nets,
            tau_nets,
            w_sensors,
            u_sensors,
            clip_a,
            theta_bound,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        let [p, h, n] = self.theta_shape;
        if [p, h, n] != [self.l_nets.len(), self.b_nets.len(), self.tau_nets.len()] {
            return Err(Error::shape("theta shape disagrees with the subnet families"));
        }
        if self.theta.len() != p * h * n {
            return Err(Error::shape(format!("theta has {} entries, expected {p}x{h}x{n}", self.theta.len())));
        }
        check_family(&self.l_nets, self.w_sensors.len(), "alpha")?;
        check_family(&self.b_nets, self.u_sensors.len(), "u")?;
        let dv = self.tau_nets[0].input_dim();
        check_family(&self.tau_nets, dv, "trunk")?;
        if let Some(a) = self.clip_a {
            if !(a >= 0.0) {
                return Err(Error::param("clip level must be >= 0"));
            }
        }
        if let Some(bound) = self.theta_bound {
            if let Some(t) = self.theta.iter().find(|t| t.abs() > bound) {
                return Err(Error::param(format!("coefficient {t} exceeds bound {bound}")));
            }
        }
        Ok(())
    }

    pub fn index(&self, p: usize, k: usize, l: usize) -> usize {
        let [_, h, n] = self.theta_shape;
        (p * h + k) * n + l
    }

    pub fn output_dim_v(&self) -> usize {
        self.tau_nets[0].input_dim()
    }

    pub fn features(&self, a: &[f64], u: &[f64], x: &[f64]) -> Result<Features> {
        Ok(Features {
            l: eval_family(&self.l_nets, a)?,
            b: eval_family(&self.b_nets, u)?,
            tau: eval_family(&self.tau_nets, x)?,
        })
    }

    /// Unclipped contraction of precomputed features, factorized as
    /// `sum_p l_p sum_k b_k sum_l theta tau_l`.
    pub fn contract(&self, f: &Features) -> f64 {
        let [_, h, n] = self.theta_shape;
        f.l.iter()
            .enumerate()
            .map(|(p, lp)| {
                lp * f
                    .b
                    .iter()
                    .enumerate()
                    .map(|(k, bk)| {
                        let row = &self.theta[(p * h + k) * n..(p * h + k + 1) * n];
                        bk * row.iter().zip(&f.tau).map(|(t, tl)| t * tl).sum::<f64>()
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    /// Forward pass on sensor vectors.
    pub fn forward_vectors(&self, a: &[f64], u: &[f64], x: &[f64]) -> Result<f64> {
        Ok(clip(self.clip_a, self.contract(&self.features(a, u, x)?)))
    }

    pub fn forward(&self, alpha: &dyn ScalarFn, u: &dyn ScalarFn, x: &[f64]) -> Result<f64> {
        self.forward_vectors(&project(alpha, &self.w_sensors), &project(u, &self.u_sensors), x)
    }

    /// Reference triple loop, evaluating every subnet inside the loop.
    pub fn forward_brute(&self, alpha: &dyn ScalarFn, u: &dyn ScalarFn, x: &[f64]) -> Result<f64> {
        let a = project(alpha, &self.w_sensors);
        let uv = project(u, &self.u_sensors);
        let mut s = 0.0;
        for (p, lp) in self.l_nets.iter().enumerate() {
            for (k, bk) in self.b_nets.iter().enumerate() {
                for (l, tl) in self.tau_nets.iter().enumerate() {
                    s += self.theta[self.index(p, k, l)] * lp.eval(&a)? * bk.eval(&uv)? * tl.eval(x)?;
                }
            }
        }
        Ok(clip(self.clip_a, s))
    }

    pub fn complexity_parts(&self) -> ComplexityParts {
        ComplexityParts {
            theta: self.theta.iter().filter(|t| **t != 0.0).count(),
            branch_u: self.b_nets.iter().map(Subnet::count_nonzero).sum(),
            trunk: self.tau_nets.iter().map(Subnet::count_nonzero).sum(),
            branch_alpha: self.l_nets.iter().map(Subnet::count_nonzero).sum(),
        }
    }

    pub fn complexity(&self) -> usize {
        self.complexity_parts().total()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let net: Self = serde_json::from_str(s)?;
        net.validate()?;
        Ok(net)
    }
}

impl OperatorMap for SeparableNet {
    fn eval(&self, alpha: &dyn ScalarFn, u: &dyn ScalarFn, x: &[f64]) -> Result<f64> {
        self.forward(alpha, u, x)
    }
}

/// Extremes of `sum_p l_p(alpha)` over the samples, as `(max, min)`.
pub fn pou_sum_audit(net: &SeparableNet, alpha_samples: &[&dyn ScalarFn]) -> Result<(f64, f64)> {
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for alpha in alpha_samples {
        let a = project(*alpha, &net.w_sensors);
        let s: f64 = eval_family(&net.l_nets, &a)?.iter().sum();
        hi = hi.max(s);
        lo = lo.min(s);
    }
    Ok((hi, lo))
}

/// `sum_{k,l} theta_kl b_k(s_W alpha, s_U u) tau_l(x)` with the sensor
/// blocks rescaled by `s_W = max(beta_W, beta_U) / beta_W` and
/// `s_U = max(beta_W, beta_U) / beta_U`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcatNet {
    /// `[H, N]`.
    pub theta_shape: [usize; 2],
    pub theta: Vec<f64>,
    pub b_nets: Vec<Subnet>,
    pub tau_nets: Vec<Subnet>,
    pub w_sensors: Vec<Vec<f64>>,
    pub u_sensors: Vec<Vec<f64>>,
    pub beta_w: f64,
    pub beta_u: f64,
    pub clip_a: Option<f64>,
    pub theta_bound: Option<f64>,
}

impl ConcatNet {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        theta: Vec<f64>,
        b_nets: Vec<Subnet>,
        tau_nets: Vec<Subnet>,
        w_sensors: Vec<Vec<f64>>,
        u_sensors: Vec<Vec<f64>>,
        beta_w: f64,
        beta_u: f64,
        clip_a: Option<f64>,
    ) -> Result<Self> {
        let net = Self {
            theta_shape: [b_nets.len(), tau_nets.len()],
            theta,
            b_nets,
            tau_nets,
            w_sensors,
            u_sensors,
            beta_w,
            beta_u,
            clip_a,
            theta_bound: None,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        let [h, n] = self.theta_shape;
        if [h, n] != [self.b_nets.len(), self.tau_nets.len()] || self.theta.len() != h * n {
            return Err(Error::shape("theta shape disagrees with the subnet families"));
        }
        if !(self.beta_w > 0.0 && self.beta_u > 0.0) {
            return Err(Error::param("sup-norm bounds must be positive"));
        }
        check_family(&self.b_nets, self.w_sensors.len() + self.u_sensors.len(), "branch")?;
        check_family(&self.tau_nets, self.tau_nets[0].input_dim(), "trunk")
    }

    /// `(s_W, s_U)`.
    pub fn rescale(&self) -> (f64, f64) {
        let m = self.beta_w.max(self.beta_u);
        (m / self.beta_w, m / self.beta_u)
    }

    /// The concatenated, rescaled sensor vector.
    pub fn branch_input(&self, a: &[f64], u: &[f64]) -> Vec<f64> {
        let (sw, su) = self.rescale();
        a.iter().map(|v| sw * v).chain(u.iter().map(|v| su * v)).collect()
    }

    pub fn forward_vectors(&self, a: &[f64], u: &[f64], x: &[f64]) -> Result<f64> {
        let input = self.branch_input(a, u);
        let b = eval_family(&self.b_nets, &input)?;
        let tau = eval_family(&self.tau_nets, x)?;
        let n = self.theta_shape[1];
        let s = b
            .iter()
            .enumerate()
            .map(|(k, bk)| bk * self.theta[k * n..(k + 1) * n].iter().zip(&tau).map(|(t, tl)| t * tl).sum::<f64>())
            .sum();
        Ok(clip(self.clip_a, s))
    }

    pub fn forward(&self, alpha: &dyn ScalarFn, u: &dyn ScalarFn, x: &[f64]) -> Result<f64> {
        self.forward_vectors(&project(alpha, &self.w_sensors), &project(u, &self.u_sensors), x)
    }

    pub fn forward_brute(&self, alpha: &dyn ScalarFn, u: &dyn ScalarFn, x: &[f64]) -> Result<f64> {
        let input = self.branch_input(&project(alpha, &self.w_sensors), &project(u, &self.u_sensors));
        let n = self.theta_shape[1];
        let mut s = 0.0;
        for (k, bk) in self.b_nets.iter().enumerate() {
            for (l, tl) in self.tau_nets.iter().enumerate() {
                s += self.theta[k * n + l] * bk.eval(&input)? * tl.eval(x)?;
            }
        }
        Ok(clip(self.clip_a, s))
    }

    pub fn complexity_parts(&self) -> ComplexityParts {
        ComplexityParts {
            theta: self.theta.iter().filter(|t| **t != 0.0).count(),
            branch_u: self.b_nets.iter().map(Subnet::count_nonzero).sum(),
            trunk: self.tau_nets.iter().map(Subnet::count_nonzero).sum(),
            branch_alpha: 0,
        }
    }

    pub fn complexity(&self) -> usize {
        let c = self.complexity_parts();
        concat_complexity(c.theta, c.trunk, c.branch_u)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let net: Self = serde_json::from_str(s)?;
        net.validate()?;
        Ok(net)
    }
}

impl OperatorMap for ConcatNet {
    fn eval(&self, alpha: &dyn ScalarFn, u: &dyn ScalarFn, x: &[f64]) -> Result<f64> {
        self.forward(alpha, u, x)
    }
}

/// How the stage-2 resolution reacts to the number of stage-1 terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Stage-2 resolution independent of the stage-1 term count.
    Parallel,
    /// Stage-2 radius divided, and grid counts multiplied, by the number of
    /// stage-1 terms.
    Nested,
}

/// Desk-scale caps on the constructive build.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionLimits {
    /// Maximum number of sensors per input function.
    pub max_sensors: usize,
    /// Maximum number of grid nodes per stage.
    pub max_grid: usize,
}

impl Default for ConstructionLimits {
    fn default() -> Self {
        Self { max_sensors: 12, max_grid: 1_000_000 }
    }
}

/// Budget of the constructive approximant. `p`, `h`, `n` are grid nodes per
/// axis for the `alpha` sensor cube, the `u` sensor cube and the output domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionBudget {
    pub p: usize,
    pub h: usize,
    pub n: usize,
    pub delta_w: f64,
    pub delta_u: f64,
    pub variant: Aggregation,
    #[serde(default)]
    pub limits: ConstructionLimits,
}

impl ConstructionBudget {
    pub fn parallel(p: usize, h: usize, n: usize, delta_w: f64, delta_u: f64) -> Self {
        Self { p, h, n, delta_w, delta_u, variant: Aggregation::Parallel, limits: ConstructionLimits::default() }
    }

    pub fn with_variant(self, variant: Aggregation) -> Self {
        Self { variant, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.h == 0 || self.n == 0 {
            return Err(Error::param("grid budgets must be positive"));
        }
        if !(self.delta_w > 0.0 && self.delta_u > 0.0) {
            return Err(Error::param("cover radii must be positive"));
        }
        Ok(())
    }
}

/// Tensor grid of `per_axis` nodes on `[-half, half]^dim` with tent weights.
#[derive(Clone, Debug, PartialEq)]
struct TentGrid {
    dim: usize,
    half: f64,
    per_axis: usize,
}

impl TentGrid {
    fn new(dim: usize, half: f64, requested: usize, limits: &ConstructionLimits, what: &str) -> Result<Self> {
        let mut per_axis = requested;
        if (per_axis as f64).powi(dim as i32) > limits.max_grid as f64 {
            per_axis = (limits.max_grid as f64).powf(1.0 / dim as f64).floor() as usize;
            while (per_axis as f64).powi(dim as i32) > limits.max_grid as f64 {
                per_axis -= 1;
            }
            if per_axis < 2 {
                return Err(Error::Resource(format!(
                    "{what} grid {requested}^{dim} exceeds the cap of {} nodes",
                    limits.max_grid
                )));
            }
        }
        Ok(Self { dim, half, per_axis })
    }

    fn total(&self) -> u64 {
        (self.per_axis as u64).pow(self.dim as u32)
    }

    fn axis(&self, index: usize) -> HatAxis {
        HatAxis { lo: -self.half, hi: self.half, nodes: self.per_axis, index }
    }

    fn node(&self, index: usize) -> f64 {
        grid_node(-self.half, self.half, self.per_axis, index)
    }

    fn coords(&self, mut flat: u64) -> Vec<f64> {
        let m = self.per_axis as u64;
        let mut c = vec![0.0; self.dim];
        for k in (0..self.dim).rev() {
            c[k] = self.node((flat % m) as usize);
            flat /= m;
        }
        c
    }

    /// Nonzero tent weights at `t` as `(flat index, weight)`.
    fn active(&self, t: &[f64]) -> Vec<(u64, f64)> {
        let m = self.per_axis;
        let mut terms = vec![(0u64, 1.0)];
        for &v in t {
            let pairs: Vec<(usize, f64)> = if m == 1 {
                vec![(0, 1.0)]
            } else {
                let h = 2.0 * self.half / (m - 1) as f64;
                let s = ((v.clamp(-self.half, self.half) + self.half) / h).clamp(0.0, (m - 1) as f64);
                let i = (s.floor() as usize).min(m - 2);
                let frac = s - i as f64;
                [(i, 1.0 - frac), (i + 1, frac)].into_iter().filter(|p| p.1 > 0.0).collect()
            };
            terms = terms
                .iter()
                .flat_map(|&(f, w)| pairs.iter().map(move |&(i, wi)| (f * m as u64 + i as u64, w * wi)))
                .collect();
        }
        terms
    }

    /// Nonzero count of all tensor tents of this grid.
    fn subnet_nonzeros(&self) -> f64 {
        if self.dim == 0 {
            return 0.0;
        }
        let axis_sum: usize = (0..self.per_axis).map(|i| self.axis(i).relu_net().count_nonzero()).sum();
        self.dim as f64 * axis_sum as f64 * (self.per_axis as f64).powi(self.dim as i32 - 1)
    }

    fn subnet(&self, mut flat: u64) -> Subnet {
        let m = self.per_axis as u64;
        let mut axes = vec![self.axis(0); self.dim];
        for k in (0..self.dim).rev() {
            axes[k] = self.axis((flat % m) as usize);
            flat /= m;
        }
        Subnet::Hat { axes }
    }
}

/// One input-function stage: sensors from a ball cover, a tent grid over the
/// discretized cube `[-beta, beta]^{n_c}`, and anchors lifted from grid nodes.
#[derive(Clone, Debug)]
struct FunctionStage {
    pou: Arc<PartitionOfUnity>,
    grid: TentGrid,
}

impl FunctionStage {
    fn new(
        spec: &LipschitzClassSpec,
        delta: f64,
        per_axis: usize,
        limits: &ConstructionLimits,
        what: &str,
    ) -> Result<Self> {
        let n = ((spec.gamma * (spec.d as f64).sqrt() / delta).ceil() as usize).max(1);
        let sensors = (n as f64).powi(spec.d as i32);
        if sensors > limits.max_sensors as f64 {
            return Err(Error::Resource(format!(
                "{what} cover needs {sensors} sensors, cap is {}",
                limits.max_sensors
            )));
        }
        let pou = Arc::new(build_pou(build_cover(spec, delta)?)?);
        let grid = TentGrid::new(pou.len(), spec.bound, per_axis, limits, what)?;
        Ok(Self { pou, grid })
    }

    fn sensors(&self) -> &[Vec<f64>] {
        &self.pou.cover().centers
    }

    fn anchor(&self, flat: u64) -> Lifted {
        lift(self.grid.coords(flat), self.pou.clone()).expect("anchor length matches cover")
    }
}

/// Realized sizes of a constructive build.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionSizes {
    pub sensors_w: usize,
    pub sensors_u: usize,
    pub p_per_axis: usize,
    pub h_per_axis: usize,
    pub n_per_axis: usize,
    pub delta_w: f64,
    pub delta_u: f64,
    /// Number of `l_p`, `b_k`, `tau_l` (as floats; they can be astronomically large).
    pub p_total: f64,
    pub h_total: f64,
    pub n_total: f64,
}

/// The constructive approximant
/// `sum_{p,k,l} l_p(alpha) b_k(u) tau_l(x) G[alpha_p][u_k](v_l)`.
///
/// Coefficients are evaluated on demand; only the `2^(n_cW + n_cU + d_V)`
/// tents active at the input are touched.
#[derive(Clone, Debug)]
pub struct ConstructiveApproximant {
    op: MultiOperator,
    budget: ConstructionBudget,
    w: FunctionStage,
    u: FunctionStage,
    x: TentGrid,
}

pub fn build_constructive(op: &MultiOperator, budget: ConstructionBudget) -> Result<ConstructiveApproximant> {
    budget.validate()?;
    let s = op.spec;
    let limits = budget.limits;
    let w = FunctionStage::new(&s.w, budget.delta_w, budget.p, &limits, "alpha")?;
    let factor = match budget.variant {
        Aggregation::Parallel => 1,
        Aggregation::Nested => {
            usize::try_from(w.grid.total()).map_err(|_| Error::Resource("stage-1 term count overflows".into()))?
        }
    };
    let u = FunctionStage::new(&s.u, budget.delta_u / factor as f64, budget.h.saturating_mul(factor), &limits, "u")?;
    let x = TentGrid::new(s.v.d, s.v.gamma, budget.n.saturating_mul(factor), &limits, "output")?;
    Ok(ConstructiveApproximant { op: op.clone(), budget, w, u, x })
}

impl ConstructiveApproximant {
    pub fn budget(&self) -> &ConstructionBudget {
        &self.budget
    }

    pub fn sizes(&self) -> ConstructionSizes {
        ConstructionSizes {
            sensors_w: self.w.pou.len(),
            sensors_u: self.u.pou.len(),
            p_per_axis: self.w.grid.per_axis,
            h_per_axis: self.u.grid.per_axis,
            n_per_axis: self.x.per_axis,
            delta_w: self.w.pou.cover().delta,
            delta_u: self.u.pou.cover().delta,
            p_total: self.w.grid.total() as f64,
            h_total: self.u.grid.total() as f64,
            n_total: self.x.total() as f64,
        }
    }

    pub fn w_sensors(&self) -> &[Vec<f64>] {
        self.w.sensors()
    }

    pub fn u_sensors(&self) -> &[Vec<f64>] {
        self.u.sensors()
    }

    /// Coefficient `G[alpha_p][u_k](v_l)`.
    pub fn coefficient(&self, p: u64, k: u64, l: u64) -> Result<f64> {
        self.op.eval(&self.w.anchor(p), &self.u.anchor(k), &self.x.coords(l))
    }

    pub fn forward(&self, alpha: &dyn ScalarFn, u: &dyn ScalarFn, x: &[f64]) -> Result<f64> {
        let a = project(alpha, self.w.sensors());
        let uv = project(u, self.u.sensors());
        self.forward_vectors(&a, &uv, x)
    }

    pub fn forward_vectors(&self, a: &[f64], uv: &[f64], x: &[f64]) -> Result<f64> {
        if x.len() != self.x.dim {
            return Err(Error::shape(format!("point has dimension {}, output domain {}", x.len(), self.x.dim)));
        }
        let s1 = self.w.grid.active(a);
        let s2 = self.u.grid.active(uv);
        let s3 = self.x.active(x);
        let mut total = 0.0;
        for &(p, lp) in &s1 {
            let alpha_p = self.w.anchor(p);
            for &(k, bk) in &s2 {
                let u_k = self.u.anchor(k);
                for &(l, tl) in &s3 {
                    total += lp * bk * tl * self.op.eval(&alpha_p, &u_k, &self.x.coords(l))?;
                }
            }
        }
        Ok(total)
    }

    /// `sum_p l_p(alpha)`, exactly one for tent grids up to rounding.
    pub fn stage_one_sum(&self, alpha: &dyn ScalarFn) -> f64 {
        self.w.grid.active(&project(alpha, self.w.sensors())).iter().map(|t| t.1).sum()
    }

    /// Dense coefficient count `P H N` (an upper bound on `||Theta||_0`).
    pub fn theta_count(&self) -> f64 {
        self.w.grid.total() as f64 * self.u.grid.total() as f64 * self.x.total() as f64
    }

    /// `2 (||Theta||_0 + sum b_k + sum tau_l + sum l_p)` with the dense
    /// coefficient count.
    pub fn complexity(&self) -> f64 {
        2.0 * (self.theta_count()
            + self.u.grid.subnet_nonzeros()
            + self.x.subnet_nonzeros()
            + self.w.grid.subnet_nonzeros())
    }

    /// Nonzero parameters of the subnets alone.
    pub fn subnet_nonzeros(&self) -> f64 {
        self.u.grid.subnet_nonzeros() + self.x.subnet_nonzeros() + self.w.grid.subnet_nonzeros()
    }

    /// Explicit [`SeparableNet`] with every coefficient evaluated. Refused
    /// above `max_terms` coefficients.
    pub fn to_separable(&self, max_terms: usize) -> Result<SeparableNet> {
        if self.theta_count() > max_terms as f64 {
            return Err(Error::Resource(format!("{} coefficients exceed the cap of {max_terms}", self.theta_count())));
        }
        let (p, h, n) = (self.w.grid.total(), self.u.grid.total(), self.x.total());
        let idx: Vec<(u64, u64, u64)> =
            (0..p).flat_map(|a| (0..h).flat_map(move |b| (0..n).map(move |c| (a, b, c)))).collect();
        #[cfg(feature = "parallel")]
        let theta: Vec<f64> = {
            use rayon::prelude::*;
            idx.par_iter().map(|&(a, b, c)| self.coefficient(a, b, c)).collect::<Result<_>>()?
        };
        #[cfg(not(feature = "parallel"))]
        let theta: Vec<f64> = idx.iter().map(|&(a, b, c)| self.coefficient(a, b, c)).collect::<Result<_>>()?;
        SeparableNet::new(
            theta,
            (0..p).map(|i| self.w.grid.subnet(i)).collect(),
            (0..h).map(|i| self.u.grid.subnet(i)).collect(),
            (0..n).map(|i| self.x.subnet(i)).collect(),
            self.w.sensors().to_vec(),
            self.u.sensors().to_vec(),
            None,
            None,
        )
    }
}

impl OperatorMap for ConstructiveApproximant {
    fn eval(&self, alpha: &dyn ScalarFn, u: &dyn ScalarFn, x: &[f64]) -> Result<f64> {
        self.forward(alpha, u, x)
    }
}

/// Parameter-count envelope `N = eps^(-d'' eps^(-d_max))`, returned as `log N`.
pub fn predicted_parameter_count(eps: f64, d_pp: f64, d_w: usize, d_u: usize) -> Result<f64> {
    crate::bounds::predicted_log_count(eps, d_pp, d_w.max(d_u))
}
