//! Closed-form calculators: generalization bound, metric entropy, rate
//! schedule, parameter-count envelopes and minimax envelopes.
//!
//! Everything that can overflow is computed in log space; non-finite results
//! are reported as errors rather than saturated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs of the expected generalization error bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub eps: f64,
    pub eta: f64,
    pub sigma: f64,
    pub beta_v: f64,
    pub n_alpha: u64,
    pub n_u: u64,
    pub n_x: u64,
    /// Log covering number of the clipped class at radius `eta`.
    pub log_cov_eta: f64,
    /// Log covering number at radius `eta / (4 beta_V)`.
    pub log_cov_eta4b: f64,
}

/// Total and the five addends, in order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundBreakdown {
    pub total: f64,
    pub terms: [f64; 5],
}

/// `4 eps^2 + eta (8 sigma + 6) + 8 sigma eta / sqrt(n) sqrt(log N_eta + log 2)
///  + 16 sigma^2 / n (log N_eta + log 2) + 112 beta_V^2 / (3 n_alpha) log N_{eta/4beta_V}`
/// with `n = n_alpha n_u n_x`.
pub fn generalization_bound(b: &BoundInputs) -> Result<BoundBreakdown> {
    if b.n_alpha == 0 || b.n_u == 0 || b.n_x == 0 {
        return Err(Error::param("sample counts must be positive"));
    }
    for (name, v) in [
        ("eps", b.eps),
        ("eta", b.eta),
        ("sigma", b.sigma),
        ("beta_v", b.beta_v),
        ("log_cov_eta", b.log_cov_eta),
        ("log_cov_eta4b", b.log_cov_eta4b),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::param(format!("{name} must be finite and >= 0, got {v}")));
        }
    }
    let n = b.n_alpha as f64 * b.n_u as f64 * b.n_x as f64;
    let cov = b.log_cov_eta + std::f64::consts::LN_2;
    let terms = [
        4.0 * b.eps * b.eps,
        b.eta * (8.0 * b.sigma + 6.0),
        8.0 * b.sigma * b.eta / n.sqrt() * cov.sqrt(),
        16.0 * b.sigma * b.sigma / n * cov,
        112.0 * b.beta_v * b.beta_v / (3.0 * b.n_alpha as f64) * b.log_cov_eta4b,
    ];
    Ok(BoundBreakdown { total: terms.iter().sum(), terms })
}

/// Depth `L_i`, magnitude `kappa_i` and nonzero count `K_i` of one subnet family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubnetBudget {
    pub layers: f64,
    pub magnitude: f64,
    pub nonzeros: f64,
}

/// Metric entropy estimate of the separable class at radius `eta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub log_t: f64,
    pub log_covering: f64,
}

/// `T = PHN sum_i L_i kappa_i^(L_i - 1)` and
/// `log N(eta) <= PHN [log(T/eta) + sum_i K_i log(L_i kappa_i T / eta)]`
/// for the three subnet families. `log_t_override` replaces `log T`.
pub fn metric_entropy_bound(
    p: f64,
    h: f64,
    n: f64,
    subnets: [SubnetBudget; 3],
    eta: f64,
    log_t_override: Option<f64>,
) -> Result<EntropyEstimate> {
    if !(eta > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {eta}")));
    }
    if !(p > 0.0 && h > 0.0 && n > 0.0) {
        return Err(Error::param("P, H, N must be positive"));
    }
    for s in &subnets {
        if !(s.layers >= 1.0 && s.magnitude > 0.0 && s.nonzeros >= 0.0) {
            return Err(Error::param(format!("invalid subnet budget {s:?}")));
        }
    }
    let log_phn = p.ln() + h.ln() + n.ln();
    let log_t = match log_t_override {
        Some(v) => v,
        None => {
            let logs: Vec<f64> = subnets.iter().map(|s| s.layers.ln() + (s.layers - 1.0) * s.magnitude.ln()).collect();
            log_phn + log_sum_exp(&logs)
        }
    };
    let base = log_t - eta.ln();
    let inner = base + subnets.iter().map(|s| s.nonzeros * ((s.layers * s.magnitude).ln() + base)).sum::<f64>();
    let log_covering = log_phn.exp() * inner;
    if !log_covering.is_finite() {
        return Err(Error::Overflow("metric entropy".into()));
    }
    Ok(EntropyEstimate { log_t, log_covering })
}

pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `eps = (c log n / log log n)^(-1/d)` with `c = d / (4 (1 + d/2))`,
/// `d = max(d_W, d_U)`, and `eta = 4 beta_V / n`. Requires `n_alpha >= 16`.
pub fn rate_schedule(n_alpha: u64, d_w: usize, d_u: usize, beta_v: f64) -> Result<(f64, f64)> {
    if n_alpha < 16 {
        return Err(Error::domain(format!("rate schedule needs n_alpha >= 16, got {n_alpha}")));
    }
    let d = d_w.max(d_u) as f64;
    if d < 1.0 {
        return Err(Error::param("dimensions must be >= 1"));
    }
    let n = n_alpha as f64;
    let c = d / (4.0 * (1.0 + d / 2.0));
    let eps = (c * n.ln() / n.ln().ln()).powf(-1.0 / d);
    Ok((eps, 4.0 * beta_v / n))
}

/// Parameter-count envelope `log N = d'' eps^(-d_max) log(1/eps)`.
pub fn predicted_log_count(eps: f64, d_pp: f64, d_max: usize) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(format!("accuracy must lie in (0, 1), got {eps}")));
    }
    Ok(d_pp * eps.powf(-(d_max as f64)) * (1.0 / eps).ln())
}

/// Inverse envelope `eps = (log N / log log N)^(-1/d_max)` given `log N`.
pub fn accuracy_envelope(log_count: f64, d_max: usize) -> Result<f64> {
    if !(log_count > 1.0) {
        return Err(Error::domain(format!("log log N must be positive, got log N = {log_count}")));
    }
    Ok((log_count / log_count.ln()).powf(-1.0 / d_max as f64))
}

/// One row of the minimax envelope table, in log space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRow {
    pub eps: f64,
    pub log_lower: f64,
    pub log_upper: f64,
    pub ordered: bool,
}

/// Envelope constants; `c` and `d_eps` are user-supplied existence constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeParams {
    pub eta: f64,
    pub delta: f64,
    pub r: f64,
    pub c: f64,
    pub d_eps: f64,
    pub d_w: usize,
    pub d_u: usize,
}

/// Lower `log = c eps^(-1/((eta+1+delta) r))` and upper
/// `log = d log(1/eps) eps^(-max(d_W, d_U))` per grid point.
pub fn bound_envelopes(p: &EnvelopeParams, eps_grid: &[f64]) -> Result<Vec<EnvelopeRow>> {
    let admissible = (1.0 + 1.0 / p.d_w as f64).min(1.0 + 1.0 / p.d_u as f64);
    if !(p.eta > admissible) {
        return Err(Error::domain(format!("cube decay must exceed {admissible}, got {}", p.eta)));
    }
    if !(p.r >= 1.0 && p.delta >= 0.0) {
        return Err(Error::param("need r >= 1 and delta >= 0"));
    }
    let d_max = p.d_w.max(p.d_u) as f64;
    eps_grid
        .iter()
        .map(|&eps| {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::domain(format!("accuracy must lie in (0, 1), got {eps}")));
            }
            let log_lower = p.c * eps.powf(-1.0 / ((p.eta + 1.0 + p.delta) * p.r));
            let log_upper = p.d_eps * (1.0 / eps).ln() * eps.powf(-d_max);
            if !(log_lower.is_finite() && log_upper.is_finite()) {
                return Err(Error::Overflow(format!("envelope at eps = {eps}")));
            }
            Ok(EnvelopeRow { eps, log_lower, log_upper, ordered: log_lower <= log_upper })
        })
        .collect()
}
