//! Dense feedforward ReLU networks.
//!
//! A network is a chain of affine layers with ReLU between consecutive
//! layers and no activation after the last one:
//! `q(x) = W_L ReLU(... ReLU(W_1 x + b_1) ...) + b_L`.
//!
//! Weights are stored dense and row-major. Sparsity is only metadata
//! (see [`ReluNet::count_nonzero`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Threshold used by [`ReluNet::count_significant`] for trained weights.
pub const SIGNIFICANT_WEIGHT: f64 = 1e-12;

#[inline]
pub fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// Clipping onto `[-a, a]`.
pub fn clip_apply(a: f64, v: f64) -> f64 {
    v.max(-a).min(a)
}

/// One affine stage `x -> W x + b` with `W` of shape `rows x cols`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Layer {
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::shape("layer dimensions must be positive"));
        }
        if weights.len() != rows * cols {
            return Err(Error::shape(format!("weight buffer has {} entries, expected {rows}x{cols}", weights.len())));
        }
        if bias.len() != rows {
            return Err(Error::shape(format!("bias has {} entries, expected {rows}", bias.len())));
        }
        Ok(Self { rows, cols, weights, bias })
    }

    /// Builds a layer from a list of weight rows.
    pub fn from_rows(rows: &[&[f64]], bias: &[f64]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::shape("ragged weight rows"));
        }
        let weights = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(rows.len(), cols, weights, bias.to_vec())
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![0.0; rows * cols], vec![0.0; rows])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.cols + col]
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    fn apply_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.cols)
                .zip(&self.bias)
                .map(|(row, b)| row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b),
        );
    }

    fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights.iter().chain(&self.bias).copied()
    }
}

/// Gradient of a scalar quantity with respect to every parameter of a
/// [`ReluNet`], laid out exactly like the network's layers.
#[derive(Clone, Debug, PartialEq)]
pub struct NetGrad {
    pub layers: Vec<LayerGrad>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl NetGrad {
    pub fn zeros_like(net: &ReluNet) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad { weights: vec![0.0; l.weights.len()], bias: vec![0.0; l.bias.len()] })
                .collect(),
        }
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, scale: f64, other: &NetGrad) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights.iter_mut().zip(&b.weights).for_each(|(x, y)| *x += scale * y);
            a.bias.iter_mut().zip(&b.bias).for_each(|(x, y)| *x += scale * y);
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias).copied()).collect()
    }
}

/// Feedforward ReLU network.
#[derive(Clone, Debug, PartialEq)]
pub struct ReluNet {
    layers: Vec<Layer>,
}

impl ReluNet {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::shape("a network needs at least one layer"));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].rows != pair[1].cols {
                return Err(Error::shape(format!(
                    "layer {} outputs {} values but layer {} expects {}",
                    i + 1,
                    pair[0].rows,
                    i + 2,
                    pair[1].cols
                )));
            }
        }
        Ok(Self { layers })
    }

    /// All-zero network with the given layer widths `[d_in, h_1, ..., d_out]`.
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::shape("need at least input and output dimension"));
        }
        let layers = dims.windows(2).map(|w| Layer::zeros(w[1], w[0])).collect::<Result<_>>()?;
        Self::new(layers)
    }

    /// Network with i.i.d. uniform parameters in `[-scale, scale]`.
    pub fn random<R: rand::Rng + ?Sized>(dims: &[usize], scale: f64, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(dims)?;
        for layer in &mut net.layers {
            for w in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                *w = rng.random_range(-scale..=scale);
            }
        }
        Ok(net)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].rows
    }

    /// Number of weight matrices.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Number of ReLU stages, i.e. `depth() - 1`.
    pub fn hidden_layers(&self) -> usize {
        self.layers.len() - 1
    }

    /// Largest hidden layer width (0 for a purely affine network).
    pub fn max_width(&self) -> usize {
        self.layers[..self.layers.len() - 1].iter().map(|l| l.rows).max().unwrap_or(0)
    }

    /// Layer widths `[d_in, h_1, ..., d_out]`.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim()).chain(self.layers.iter().map(|l| l.rows)).collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::shape(format!("input has length {}, network expects {}", x.len(), self.input_dim())));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.apply_into(&cur, &mut next);
            if i < last {
                next.iter_mut().for_each(|v| *v = relu(*v));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Forward pass for scalar-output networks.
    pub fn eval_scalar(&self, x: &[f64]) -> Result<f64> {
        if self.output_dim() != 1 {
            return Err(Error::shape("eval_scalar needs a scalar-output network"));
        }
        Ok(self.forward(x)?[0])
    }

    /// Number of parameters that are exactly nonzero.
    pub fn count_nonzero(&self) -> usize {
        self.layers.iter().flat_map(Layer::params).filter(|&w| w != 0.0).count()
    }

    /// Number of parameters with magnitude above `threshold`; meant for
    /// trained weights, which are generically dense.
    pub fn count_significant(&self, threshold: f64) -> usize {
        self.layers.iter().flat_map(Layer::params).filter(|w| w.abs() > threshold).count()
    }

    pub fn max_abs_param(&self) -> f64 {
        self.layers.iter().flat_map(Layer::params).fold(0.0, |m, w| m.max(w.abs()))
    }

    /// Gradient of `upstream . forward(x)` with respect to every parameter,
    /// by reverse accumulation. The ReLU derivative at exactly 0 is taken
    /// to be 0.
    pub fn grad_params(&self, x: &[f64], upstream: &[f64]) -> Result<NetGrad> {
        self.check_input(x)?;
        if upstream.len() != self.output_dim() {
            return Err(Error::shape(format!(
                "upstream has length {}, network outputs {}",
                upstream.len(),
                self.output_dim()
            )));
        }
        // activations[l] is the input to layer l; pre[l] its pre-activation output
        let last = self.layers.len() - 1;
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        activations.push(x.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.apply_into(&activations[i], &mut z);
            if i < last {
                activations.push(z.iter().map(|&v| relu(v)).collect());
            }
            pre.push(z);
        }

        let mut grad = NetGrad::zeros_like(self);
        let mut delta = upstream.to_vec();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let input = &activations[i];
            let g = &mut grad.layers[i];
            for (r, d) in delta.iter().enumerate() {
                g.bias[r] = *d;
                let row = &mut g.weights[r * layer.cols..(r + 1) * layer.cols];
                row.iter_mut().zip(input).for_each(|(gw, a)| *gw = d * a);
            }
            if i > 0 {
                let below = &pre[i - 1];
                delta = (0..layer.cols)
                    .map(|c| {
                        if below[c] > 0.0 {
                            delta.iter().enumerate().map(|(r, d)| d * layer.weight(r, c)).sum()
                        } else {
                            0.0
                        }
                    })
                    .collect();
            }
        }
        Ok(grad)
    }

    /// `params += scale * grad`.
    pub fn add_scaled(&mut self, scale: f64, grad: &NetGrad) {
        for (layer, g) in self.layers.iter_mut().zip(&grad.layers) {
            layer.weights.iter_mut().zip(&g.weights).for_each(|(w, d)| *w += scale * d);
            layer.bias.iter_mut().zip(&g.bias).for_each(|(w, d)| *w += scale * d);
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&NetWire::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let wire: NetWire = serde_json::from_str(s)?;
        wire.try_into()
    }
}

/// Serialized layout: `{dims, layers: [{W, b}]}` with `W` row-major.
#[derive(Serialize, Deserialize)]
pub(crate) struct NetWire {
    dims: Vec<usize>,
    layers: Vec<LayerWire>,
}

#[derive(Serialize, Deserialize)]
struct LayerWire {
    #[serde(rename = "W")]
    w: Vec<f64>,
    b: Vec<f64>,
}

impl From<&ReluNet> for NetWire {
    fn from(net: &ReluNet) -> Self {
        NetWire {
            dims: net.dims(),
            layers: net.layers.iter().map(|l| LayerWire { w: l.weights.clone(), b: l.bias.clone() }).collect(),
        }
    }
}

impl TryFrom<NetWire> for ReluNet {
    type Error = Error;

    fn try_from(wire: NetWire) -> Result<Self> {
        if wire.dims.len() != wire.layers.len() + 1 {
            return Err(Error::shape("dims must have one more entry than layers"));
        }
        let layers = wire
            .layers
            .into_iter()
            .enumerate()
            .map(|(i, l)| Layer::new(wire.dims[i + 1], wire.dims[i], l.w, l.b))
            .collect::<Result<_>>()?;
        ReluNet::new(layers)
    }
}

impl Serialize for ReluNet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        NetWire::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ReluNet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = NetWire::deserialize(d)?;
        ReluNet::try_from(wire).map_err(serde::de::Error::custom)
    }
}

/// The network class `F_NN(d1, d2, L, p, K, kappa, R)`. `layers` bounds the
/// number of ReLU stages.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetClassSpec {
    pub d_in: usize,
    pub d_out: usize,
    pub layers: usize,
    pub width: usize,
    pub nonzeros: usize,
    pub magnitude: f64,
    pub output_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassBound {
    InputDim,
    OutputDim,
    Layers,
    Width,
    Nonzeros,
    Magnitude,
    OutputBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassViolation {
    pub bound: ClassBound,
    pub limit: f64,
    pub measured: f64,
}

/// Lists every bound of `spec` that `net` violates. The output bound is
/// measured on `probes` only.
pub fn validate_class(net: &ReluNet, spec: &NetClassSpec, probes: &[Vec<f64>]) -> Vec<ClassViolation> {
    let mut out = Vec::new();
    let mut check = |bound, limit: f64, measured: f64| {
        if measured > limit {
            out.push(ClassViolation { bound, limit, measured });
        }
    };
    let dims_ok = net.input_dim() == spec.d_in && net.output_dim() == spec.d_out;
    if net.input_dim() != spec.d_in {
        out_dim_violation(&mut check, ClassBound::InputDim, spec.d_in, net.input_dim());
    }
    if net.output_dim() != spec.d_out {
        out_dim_violation(&mut check, ClassBound::OutputDim, spec.d_out, net.output_dim());
    }
    check(ClassBound::Layers, spec.layers as f64, net.hidden_layers() as f64);
    check(ClassBound::Width, spec.width as f64, net.max_width() as f64);
    check(ClassBound::Nonzeros, spec.nonzeros as f64, net.count_nonzero() as f64);
    check(ClassBound::Magnitude, spec.magnitude, net.max_abs_param());
    if dims_ok {
        let worst = probes
            .iter()
            .filter_map(|p| net.forward(p).ok())
            .flat_map(|y| y.into_iter().map(f64::abs))
            .fold(0.0, f64::max);
        check(ClassBound::OutputBound, spec.output_bound, worst);
    }
    out
}

fn out_dim_violation(check: &mut impl FnMut(ClassBound, f64, f64), bound: ClassBound, want: usize, got: usize) {
    // a dimension mismatch is reported with the mismatched value as measurement
    // regardless of direction
    if got > want {
        check(bound, want as f64, got as f64);
    } else {
        check(bound, -(want as f64), -(got as f64));
    }
}

/// ReLU realization of `Clip_a`: `a - ReLU(2a - ReLU(v + a))`.
///
/// Two hidden layers of width one and six parameters; magnitudes are
/// bounded by `max(1, 2a)`.
pub fn clip_as_network(a: f64) -> Result<ReluNet> {
    if !(a >= 0.0) {
        return Err(Error::param(format!("clip level must be >= 0, got {a}")));
    }
    ReluNet::new(vec![
        Layer::new(1, 1, vec![1.0], vec![a])?,
        Layer::new(1, 1, vec![-1.0], vec![2.0 * a])?,
        Layer::new(1, 1, vec![-1.0], vec![a])?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn identity_net() -> ReluNet {
        ReluNet::new(vec![
            Layer::from_rows(&[&[1.0], &[-1.0]], &[0.0, 0.0]).unwrap(),
            Layer::from_rows(&[&[1.0, -1.0]], &[0.0]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn identity_forward() {
        let net = identity_net();
        assert_eq!(net.forward(&[3.0]).unwrap(), vec![3.0]);
        assert_eq!(net.forward(&[-2.0]).unwrap(), vec![-2.0]);
    }

    #[test]
    fn single_affine_layer() {
        let net = ReluNet::new(vec![Layer::from_rows(&[&[2.0, 0.0], &[0.0, 0.0]], &[1.0, 0.0]).unwrap()]).unwrap();
        assert_eq!(net.forward(&[1.0, 1.0]).unwrap(), vec![3.0, 0.0]);
    }

    #[test]
    fn shape_errors() {
        let net = identity_net();
        assert!(matches!(net.forward(&[1.0, 2.0]), Err(Error::Shape(_))));
        assert!(matches!(net.grad_params(&[1.0], &[1.0, 1.0]), Err(Error::Shape(_))));
        let bad = ReluNet::new(vec![Layer::zeros(3, 1).unwrap(), Layer::zeros(1, 2).unwrap()]);
        assert!(matches!(bad, Err(Error::Shape(_))));
        assert!(ReluNet::new(vec![]).is_err());
    }

    #[test]
    fn nonzero_counts() {
        let net = ReluNet::new(vec![Layer::from_rows(&[&[1.0, 0.0], &[0.0, 2.0]], &[0.0, 0.0]).unwrap()]).unwrap();
        assert_eq!(net.count_nonzero(), 2);
        assert_eq!(ReluNet::zeros(&[3, 4, 1]).unwrap().count_nonzero(), 0);
        assert!(clip_as_network(1.0).unwrap().count_nonzero() <= 6);
        assert!(clip_as_network(2.0).unwrap().count_nonzero() <= 6);
    }

    #[test]
    fn significant_count_ignores_tiny_weights() {
        let net = ReluNet::new(vec![Layer::new(1, 2, vec![1e-15, 0.5], vec![-1e-13]).unwrap()]).unwrap();
        assert_eq!(net.count_nonzero(), 3);
        assert_eq!(net.count_significant(SIGNIFICANT_WEIGHT), 1);
    }

    #[test]
    fn clip_values() {
        assert_eq!(clip_apply(1.0, 2.5), 1.0);
        assert_eq!(clip_apply(1.0, -7.0), -1.0);
        assert_eq!(clip_apply(0.0, 3.0), 0.0);
        let net = clip_as_network(1.0).unwrap();
        assert_eq!(net.eval_scalar(&[2.5]).unwrap(), 1.0);
        assert_relative_eq!(net.eval_scalar(&[0.3]).unwrap(), 0.3, epsilon = 1e-15);
        assert!(clip_as_network(-1.0).is_err());
    }

    #[test]
    fn class_validation() {
        let net = identity_net();
        let probes: Vec<Vec<f64>> = (0..=100).map(|i| vec![-5.0 + 0.1 * i as f64]).collect();
        let spec =
            NetClassSpec { d_in: 1, d_out: 1, layers: 2, width: 2, nonzeros: 4, magnitude: 1.0, output_bound: 10.0 };
        assert!(validate_class(&net, &spec, &probes).is_empty());

        let tight = NetClassSpec { magnitude: 0.5, ..spec };
        let v = validate_class(&net, &tight, &probes);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].bound, ClassBound::Magnitude);
        assert_eq!(v[0].measured, 1.0);

        let clip = clip_as_network(1.0).unwrap();
        let probes: Vec<Vec<f64>> = (0..=600).map(|i| vec![-3.0 + 0.01 * i as f64]).collect();
        let clip_class =
            NetClassSpec { d_in: 1, d_out: 1, layers: 2, width: 1, nonzeros: 6, magnitude: 2.0, output_bound: 1.0 };
        assert!(validate_class(&clip, &clip_class, &probes).is_empty());
    }

    #[test]
    fn gradient_of_linear_layer() {
        let net = ReluNet::new(vec![Layer::new(1, 1, vec![0.7], vec![0.0]).unwrap()]).unwrap();
        let g = net.grad_params(&[1.0], &[1.0]).unwrap();
        assert_eq!(g.layers[0].weights, vec![1.0]);
        assert_eq!(g.layers[0].bias, vec![1.0]);
    }

    #[test]
    fn gradient_at_kink_is_zero() {
        // hidden pre-activation is exactly 0 at x = 0
        let net = ReluNet::new(vec![
            Layer::new(1, 1, vec![1.0], vec![0.0]).unwrap(),
            Layer::new(1, 1, vec![2.0], vec![0.0]).unwrap(),
        ])
        .unwrap();
        let g = net.grad_params(&[0.0], &[1.0]).unwrap();
        assert_eq!(g.layers[0].weights, vec![0.0]);
        assert_eq!(g.layers[0].bias, vec![0.0]);
        assert_eq!(g.layers[1].bias, vec![1.0]);
    }

    fn slot(n: &mut ReluNet, li: usize, k: usize) -> &mut f64 {
        let nw = n.layers[li].weights.len();
        if k < nw {
            &mut n.layers[li].weights[k]
        } else {
            &mut n.layers[li].bias[k - nw]
        }
    }

    pub(crate) fn finite_difference(net: &ReluNet, x: &[f64], upstream: &[f64], h: f64) -> Vec<f64> {
        let value = |n: &ReluNet| -> f64 { n.forward(x).unwrap().iter().zip(upstream).map(|(a, b)| a * b).sum() };
        let mut out = Vec::new();
        for li in 0..net.depth() {
            let count = net.layers[li].weights.len() + net.layers[li].bias.len();
            for k in 0..count {
                let mut plus = net.clone();
                let mut minus = net.clone();
                *slot(&mut plus, li, k) += h;
                *slot(&mut minus, li, k) -= h;
                out.push((value(&plus) - value(&minus)) / (2.0 * h));
            }
        }
        out
    }

    #[test]
    fn identity_gradient_matches_central_differences() {
        let net = identity_net();
        let g = net.grad_params(&[3.0], &[1.0]).unwrap().flatten();
        let fd = finite_difference(&net, &[3.0], &[1.0], 1e-4);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net = ReluNet::random(&[3, 5, 4, 2], 1.3, &mut rng).unwrap();
        let s = net.to_json().unwrap();
        assert!(s.contains("\"dims\":[3,5,4,2]"));
        let back = ReluNet::from_json(&s).unwrap();
        for (a, b) in net.layers.iter().zip(&back.layers) {
            for (x, y) in a.params().zip(b.params()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    fn permute_hidden(net: &ReluNet, layer: usize, perm: &[usize]) -> ReluNet {
        let mut out = net.clone();
        let l = &net.layers[layer];
        let next = &net.layers[layer + 1];
        for (new_r, &old_r) in perm.iter().enumerate() {
            for c in 0..l.cols {
                out.layers[layer].weights[new_r * l.cols + c] = l.weight(old_r, c);
            }
            out.layers[layer].bias[new_r] = l.bias[old_r];
            for r in 0..next.rows {
                out.layers[layer + 1].weights[r * next.cols + new_r] = next.weight(r, old_r);
            }
        }
        out
    }

    proptest! {
        #[test]
        fn bias_free_nets_are_positively_homogeneous(seed in 0u64..1000, c in 0.01f64..10.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut net = ReluNet::random(&[3, 6, 4, 2], 1.0, &mut rng).unwrap();
            for l in &mut net.layers { l.bias.iter_mut().for_each(|b| *b = 0.0); }
            let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
            let a = net.forward(&cx).unwrap();
            let b = net.forward(&x).unwrap();
            for (p, q) in a.iter().zip(&b) {
                prop_assert!((p - c * q).abs() <= 1e-12 * (1.0 + p.abs()));
            }
        }

        #[test]
        fn clip_network_matches_clip(a in 0.5f64..5.0, v in -20.0f64..20.0) {
            let net = clip_as_network(a).unwrap();
            let y = net.eval_scalar(&[v]).unwrap();
            prop_assert!((y - clip_apply(a, v)).abs() <= 1e-12 * (1.0 + a));
            prop_assert!(y.abs() <= a);
            prop_assert!(net.max_abs_param() <= 2.0 * a);
        }

        #[test]
        fn nonzero_count_is_permutation_invariant(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut net = ReluNet::random(&[2, 5, 1], 1.0, &mut rng).unwrap();
            // sprinkle exact zeros
            for l in &mut net.layers {
                for w in l.weights.iter_mut() { if rng.random_bool(0.4) { *w = 0.0; } }
            }
            let perm = [3usize, 0, 4, 1, 2];
            let p = permute_hidden(&net, 0, &perm);
            prop_assert_eq!(net.count_nonzero(), p.count_nonzero());
            let x = [0.3, -0.8];
            prop_assert!((net.forward(&x).unwrap()[0] - p.forward(&x).unwrap()[0]).abs() < 1e-12);
        }
    }
}
