//! Bounded Lipschitz classes on hypercubes, ball covers, tent partitions of
//! unity, and the sensor projection / lifting pair.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ScalarFn;

/// Functions on `[-gamma, gamma]^d` with `|f| <= bound` and Lipschitz
/// constant `lip` in the Euclidean norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzClassSpec {
    pub d: usize,
    pub gamma: f64,
    pub lip: f64,
    pub bound: f64,
}

impl LipschitzClassSpec {
    pub fn new(d: usize, gamma: f64, lip: f64, bound: f64) -> Result<Self> {
        let spec = Self { d, gamma, lip, bound };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::param("domain dimension must be >= 1"));
        }
        for (name, v) in [("gamma", self.gamma), ("lip", self.lip), ("bound", self.bound)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Lebesgue measure of the domain.
    pub fn volume(&self) -> f64 {
        (2.0 * self.gamma).powi(self.d as i32)
    }

    /// Nearest point of the domain.
    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| v.clamp(-self.gamma, self.gamma)).collect()
    }
}

/// Uniform tensor grid with `n` nodes per axis on `[-gamma, gamma]^d`,
/// endpoints included.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub d: usize,
    pub gamma: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(d: usize, gamma: f64, n: usize) -> Self {
        Self { d, gamma, n: n.max(2) }
    }

    /// Finest grid whose spacing does not exceed `h`.
    pub fn with_mesh(d: usize, gamma: f64, h: f64) -> Self {
        Self::new(d, gamma, (2.0 * gamma / h).ceil() as usize + 1)
    }

    /// Default verification grid for a class: spacing `gamma / 200`.
    pub fn for_class(spec: &LipschitzClassSpec) -> Self {
        Self::with_mesh(spec.d, spec.gamma, spec.gamma / 200.0)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.gamma / (self.n - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.gamma
        } else {
            -self.gamma + self.spacing() * i as f64
        }
    }

    /// Point with flat index `flat`, last axis fastest.
    pub fn point(&self, mut flat: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.d];
        for k in (0..self.d).rev() {
            x[k] = self.coord(flat % self.n);
            flat /= self.n;
        }
        x
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Evaluates `f` at every node in flat order.
    pub fn sample(&self, f: &dyn ScalarFn) -> Vec<f64> {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..self.len()).into_par_iter().map(|i| f.eval(&self.point(i))).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..self.len()).map(|i| f.eval(&self.point(i))).collect()
        }
    }
}

/// Balls of common radius `delta` around `centers`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallCover {
    pub d: usize,
    pub gamma: f64,
    pub delta: f64,
    pub centers: Vec<Vec<f64>>,
    /// Centers per axis when the cover is an axis grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_axis: Option<usize>,
}

/// Axis-grid cover of `[-gamma, gamma]^d` by `delta`-balls.
///
/// Uses `n = max(1, ceil(gamma sqrt(d) / delta))` cell midpoints per axis, so
/// every point is within `sqrt(d) gamma / n <= delta` of a center.
pub fn build_cover(spec: &LipschitzClassSpec, delta: f64) -> Result<BallCover> {
    spec.validate()?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param(format!("cover radius must be positive, got {delta}")));
    }
    let n = ((spec.gamma * (spec.d as f64).sqrt() / delta).ceil() as usize).max(1);
    let total = n
        .checked_pow(spec.d as u32)
        .filter(|&t| t <= 50_000_000)
        .ok_or_else(|| Error::Resource(format!("cover needs {n}^{} centers", spec.d)))?;
    let step = 2.0 * spec.gamma / n as f64;
    let axis: Vec<f64> = (0..n).map(|i| -spec.gamma + step * (i as f64 + 0.5)).collect();
    let centers = (0..total)
        .map(|mut flat| {
            let mut c = vec![0.0; spec.d];
            for k in (0..spec.d).rev() {
                c[k] = axis[flat % n];
                flat /= n;
            }
            c
        })
        .collect();
    Ok(BallCover { d: spec.d, gamma: spec.gamma, delta, centers, per_axis: Some(n) })
}

impl BallCover {
    /// Cover from explicit centers; validity is not checked here.
    pub fn from_centers(d: usize, gamma: f64, delta: f64, centers: Vec<Vec<f64>>) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::param(format!("cover radius must be positive, got {delta}")));
        }
        if centers.is_empty() || centers.iter().any(|c| c.len() != d) {
            return Err(Error::shape(format!("centers must be nonempty points of dimension {d}")));
        }
        Ok(Self { d, gamma, delta, centers, per_axis: None })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Indices of centers within `radius` of `x`.
    fn near(&self, x: &[f64], radius: f64, out: &mut Vec<usize>) {
        out.clear();
        match self.per_axis {
            Some(n) => {
                let step = 2.0 * self.gamma / n as f64;
                let mut lo = vec![0usize; self.d];
                let mut hi = vec![0usize; self.d];
                for k in 0..self.d {
                    let a = ((x[k] - radius + self.gamma) / step - 0.5).ceil().max(0.0);
                    let b = ((x[k] + radius + self.gamma) / step - 0.5).floor().min(n as f64 - 1.0);
                    if b < a {
                        return;
                    }
                    lo[k] = a as usize;
                    hi[k] = b as usize;
                }
                let mut idx = lo.clone();
                loop {
                    let flat = idx.iter().fold(0, |acc, &i| acc * n + i);
                    if dist(&self.centers[flat], x) <= radius {
                        out.push(flat);
                    }
                    let mut k = self.d;
                    loop {
                        if k == 0 {
                            return;
                        }
                        k -= 1;
                        if idx[k] < hi[k] {
                            idx[k] += 1;
                            break;
                        }
                        idx[k] = lo[k];
                    }
                }
            }
            None => out.extend((0..self.centers.len()).filter(|&i| dist(&self.centers[i], x) <= radius)),
        }
    }

    /// Distance from `x` to the nearest center.
    pub fn nearest_distance(&self, x: &[f64]) -> f64 {
        match self.per_axis {
            Some(n) => {
                let step = 2.0 * self.gamma / n as f64;
                x.iter()
                    .map(|&v| {
                        let i = ((v + self.gamma) / step - 0.5).round().clamp(0.0, n as f64 - 1.0);
                        let c = -self.gamma + step * (i + 0.5);
                        (v - c) * (v - c)
                    })
                    .sum::<f64>()
                    .sqrt()
            }
            None => self.centers.iter().map(|c| dist(c, x)).fold(f64::INFINITY, f64::min),
        }
    }

    /// Largest distance to the nearest center over a grid of spacing `<= mesh`.
    pub fn covering_radius(&self, mesh: f64) -> f64 {
        Grid::with_mesh(self.d, self.gamma, mesh).points().map(|x| self.nearest_distance(&x)).fold(0.0, f64::max)
    }

    /// Checks coverage on a grid of spacing `delta / 4`.
    pub fn verify(&self) -> Result<()> {
        let grid = Grid::with_mesh(self.d, self.gamma, self.delta / 4.0);
        let tol = self.delta * (1.0 + 1e-12);
        let gap = grid.points().find(|x| self.nearest_distance(x) > tol);
        match gap {
            Some(point) => Err(Error::Coverage { point }),
            None => Ok(()),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Normalized tents `rho_i = t_i / sum_j t_j`, `t_i(x) = max(0, 1 - |x - c_i| / delta)`.
///
/// Where every tent vanishes (a point exactly at distance `delta` from all
/// nearby centers) the weight is shared equally among the centers on the
/// closed balls containing the point.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionOfUnity {
    cover: BallCover,
}

pub fn build_pou(cover: BallCover) -> Result<PartitionOfUnity> {
    if cover.is_empty() {
        return Err(Error::param("empty cover"));
    }
    cover.verify()?;
    Ok(PartitionOfUnity { cover })
}

impl PartitionOfUnity {
    pub fn cover(&self) -> &BallCover {
        &self.cover
    }

    pub fn len(&self) -> usize {
        self.cover.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cover.is_empty()
    }

    /// Nonzero weights at `x` as `(index, rho)` pairs in index order.
    pub fn weights(&self, x: &[f64]) -> Result<Vec<(usize, f64)>> {
        if x.len() != self.cover.d {
            return Err(Error::shape(format!("point has dimension {}, cover {}", x.len(), self.cover.d)));
        }
        let delta = self.cover.delta;
        let mut idx = Vec::new();
        self.cover.near(x, delta * (1.0 + 1e-12), &mut idx);
        if idx.is_empty() {
            return Err(Error::Coverage { point: x.to_vec() });
        }
        let tents: Vec<f64> = idx.iter().map(|&i| (1.0 - dist(&self.cover.centers[i], x) / delta).max(0.0)).collect();
        let total: f64 = tents.iter().sum();
        if total > 0.0 {
            Ok(idx.into_iter().zip(tents).filter(|(_, t)| *t > 0.0).map(|(i, t)| (i, t / total)).collect())
        } else {
            let w = 1.0 / idx.len() as f64;
            Ok(idx.into_iter().map(|i| (i, w)).collect())
        }
    }

    /// All weights as a dense vector.
    pub fn weights_dense(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        for (i, w) in self.weights(x)? {
            out[i] = w;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        self.cover.to_json()
    }
}

/// Sensor projection `(f(a_1), ..., f(a_n))`.
pub fn project(f: &dyn ScalarFn, sensors: &[Vec<f64>]) -> Vec<f64> {
    sensors.iter().map(|s| f.eval(s)).collect()
}

/// Lifting `x -> sum_i coeffs_i rho_i(x)`. Points outside the domain are
/// evaluated at their nearest point of the domain.
#[derive(Clone, Debug)]
pub struct Lifted {
    coeffs: Vec<f64>,
    pou: Arc<PartitionOfUnity>,
}

pub fn lift(coeffs: Vec<f64>, pou: Arc<PartitionOfUnity>) -> Result<Lifted> {
    if coeffs.len() != pou.len() {
        return Err(Error::shape(format!("{} coefficients for {} bumps", coeffs.len(), pou.len())));
    }
    Ok(Lifted { coeffs, pou })
}

impl Lifted {
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

impl ScalarFn for Lifted {
    fn eval(&self, x: &[f64]) -> f64 {
        let g = self.pou.cover.gamma;
        let inside = x.iter().all(|v| v.abs() <= g);
        let owned;
        let x = if inside {
            x
        } else {
            owned = x.iter().map(|v| v.clamp(-g, g)).collect::<Vec<_>>();
            &owned
        };
        match self.pou.weights(x) {
            Ok(w) => w.iter().map(|&(i, r)| self.coeffs[i] * r).sum(),
            Err(_) => f64::NAN,
        }
    }
}

/// `max_x |f(x) - lift(project(f))(x)|` over the nodes of `grid`, with the
/// cover centers as sensors.
pub fn lift_error(f: &dyn ScalarFn, pou: &Arc<PartitionOfUnity>, grid: &Grid) -> Result<f64> {
    let lifted = lift(project(f, &pou.cover.centers), pou.clone())?;
    let mut worst = 0.0f64;
    for x in grid.points() {
        let e = (f.eval(&x) - lifted.eval(&x)).abs();
        if e.is_nan() {
            return Err(Error::Coverage { point: x });
        }
        worst = worst.max(e);
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MembershipViolation {
    /// `|f(point)| = value > limit`.
    Bound { point: Vec<f64>, value: f64, limit: f64 },
    /// Difference quotient between `a` and `b` exceeds `limit`.
    Lipschitz { a: Vec<f64>, b: Vec<f64>, quotient: f64, limit: f64 },
}

/// Default relative tolerance of [`membership_check`].
pub const MEMBERSHIP_TOL: f64 = 1e-6;

/// Grid test of class membership. Reports the worst offender of each kind.
///
/// In one dimension all pairs are covered exactly by adjacent pairs. In
/// higher dimension the quotients are taken over a stencil of offsets with
/// entries in `[-3, 3]` (all pairs on grids of at most 12 nodes per axis).
pub fn membership_check(
    f: &dyn ScalarFn,
    spec: &LipschitzClassSpec,
    grid: &Grid,
    tol: f64,
) -> Vec<MembershipViolation> {
    let values = grid.sample(f);
    check_samples(&values, spec, grid, tol)
}

/// Maximum `|f|` and maximum difference quotient of grid samples in flat order.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleStats {
    pub max_abs: f64,
    pub max_abs_at: usize,
    pub max_quotient: f64,
    pub quotient_pair: (usize, usize),
}

pub fn sample_stats(values: &[f64], grid: &Grid) -> SampleStats {
    let (max_abs_at, max_abs) =
        values
            .iter()
            .map(|v| v.abs())
            .enumerate()
            .fold((0, 0.0), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    let h = grid.spacing();
    let n = grid.n as isize;
    let d = grid.d;
    let radius: isize = if grid.n <= 12 { n - 1 } else { 3 };
    // offsets in the half space: first nonzero entry positive
    let mut offsets: Vec<(Vec<isize>, f64)> = Vec::new();
    if d == 1 {
        offsets.push((vec![1], h));
    } else {
        let side = (2 * radius + 1) as usize;
        for flat in 0..side.pow(d as u32) {
            let mut o = vec![0isize; d];
            let mut t = flat;
            for k in (0..d).rev() {
                o[k] = (t % side) as isize - radius;
                t /= side;
            }
            if o.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0) {
                let len = o.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt() * h;
                offsets.push((o, len));
            }
        }
    }
    let mut best = (0.0f64, (0usize, 0usize));
    let mut idx = vec![0isize; d];
    for flat in 0..values.len() {
        let mut t = flat;
        for k in (0..d).rev() {
            idx[k] = (t % grid.n) as isize;
            t /= grid.n;
        }
        for (o, len) in &offsets {
            let mut other = 0usize;
            let mut ok = true;
            for k in 0..d {
                let j = idx[k] + o[k];
                if j < 0 || j >= n {
                    ok = false;
                    break;
                }
                other = other * grid.n + j as usize;
            }
            if ok {
                let q = (values[other] - values[flat]).abs() / len;
                if q > best.0 {
                    best = (q, (flat, other));
                }
            }
        }
    }
    SampleStats { max_abs, max_abs_at, max_quotient: best.0, quotient_pair: best.1 }
}

/// [`membership_check`] on precomputed grid samples.
pub fn check_samples(values: &[f64], spec: &LipschitzClassSpec, grid: &Grid, tol: f64) -> Vec<MembershipViolation> {
    violations_from_stats(&sample_stats(values, grid), 1.0, spec, grid, tol)
}

/// Violations of `scale * f` given the statistics of `f`.
pub fn violations_from_stats(
    stats: &SampleStats,
    scale: f64,
    spec: &LipschitzClassSpec,
    grid: &Grid,
    tol: f64,
) -> Vec<MembershipViolation> {
    let mut out = Vec::new();
    let value = scale * stats.max_abs;
    if !(value <= spec.bound * (1.0 + tol)) {
        out.push(MembershipViolation::Bound { point: grid.point(stats.max_abs_at), value, limit: spec.bound });
    }
    let quotient = scale * stats.max_quotient;
    if !(quotient <= spec.lip * (1.0 + tol)) {
        out.push(MembershipViolation::Lipschitz {
            a: grid.point(stats.quotient_pair.0),
            b: grid.point(stats.quotient_pair.1),
            quotient,
            limit: spec.lip,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(d: usize) -> LipschitzClassSpec {
        LipschitzClassSpec::new(d, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn cover_examples() {
        let c = build_cover(&spec(1), 0.5).unwrap();
        assert_eq!(c.centers, vec![vec![-0.5], vec![0.5]]);
        assert!(c.covering_radius(1e-3) <= 0.5 + 1e-12);
        let c = build_cover(&spec(1), 2.0).unwrap();
        assert_eq!(c.centers, vec![vec![0.0]]);
        let c = build_cover(&spec(2), 0.75).unwrap();
        assert!(c.covering_radius(0.01) <= 0.75);
        assert!(c.len() <= (2f64.sqrt() / 0.75).ceil().powi(2) as usize);
        assert!(matches!(build_cover(&spec(1), 0.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn cover_json_round_trip() {
        let c = build_cover(&spec(2), 0.6).unwrap();
        let back = BallCover::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn pou_examples() {
        let cover = BallCover::from_centers(1, 1.0, 1.0, vec![vec![-0.5], vec![0.5]]).unwrap();
        let pou = build_pou(cover).unwrap();
        let w = pou.weights_dense(&[0.0]).unwrap();
        assert_relative_eq!(w[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(w[1], 0.5, epsilon = 1e-15);

        let cover = BallCover::from_centers(1, 1.0, 0.6, vec![vec![-0.5], vec![0.5]]).unwrap();
        let pou = build_pou(cover).unwrap();
        assert_eq!(pou.weights(&[-0.5]).unwrap(), vec![(0, 1.0)]);
    }

    #[test]
    fn pou_rejects_gaps() {
        let cover = BallCover::from_centers(1, 1.0, 0.3, vec![vec![-0.5], vec![0.5]]).unwrap();
        assert!(matches!(build_pou(cover), Err(Error::Coverage { .. })));
    }

    #[test]
    fn pou_sums_to_one_and_is_local() {
        for (d, delta) in [(1, 0.3), (2, 0.45), (3, 0.8)] {
            let cover = build_cover(&spec(d), delta).unwrap();
            let pou = build_pou(cover).unwrap();
            for x in Grid::new(d, 1.0, 13).points() {
                let w = pou.weights(&x).unwrap();
                let s: f64 = w.iter().map(|p| p.1).sum();
                assert!((s - 1.0).abs() <= 1e-12);
                for (i, r) in w {
                    assert!((0.0..=1.0).contains(&r));
                    assert!(dist(&pou.cover().centers[i], &x) <= delta * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn projection_examples() {
        let s = vec![vec![-1.0], vec![0.0], vec![1.0]];
        assert_eq!(project(&|x: &[f64]| x[0], &s), vec![-1.0, 0.0, 1.0]);
        assert_eq!(project(&|_: &[f64]| 2.5, &s), vec![2.5; 3]);
        assert_eq!(project(&|x: &[f64]| x[0].abs(), &[vec![-0.5], vec![0.5]]), vec![0.5, 0.5]);
    }

    #[test]
    fn lift_examples() {
        let pou = Arc::new(build_pou(build_cover(&spec(2), 0.4).unwrap()).unwrap());
        let c = lift(vec![0.7; pou.len()], pou.clone()).unwrap();
        for x in Grid::new(2, 1.0, 9).points() {
            assert_relative_eq!(c.eval(&x), 0.7, epsilon = 1e-14);
        }
        assert!(lift(vec![0.0; 3], pou).is_err());

        let pou =
            Arc::new(build_pou(BallCover::from_centers(1, 1.0, 1.0, vec![vec![-0.5], vec![0.5]]).unwrap()).unwrap());
        let l = lift(vec![0.0, 1.0], pou).unwrap();
        assert_relative_eq!(l.eval(&[0.0]), 0.5, epsilon = 1e-15);

        let pou =
            Arc::new(build_pou(BallCover::from_centers(1, 1.0, 0.6, vec![vec![-0.5], vec![0.5]]).unwrap()).unwrap());
        let l = lift(project(&|x: &[f64]| x[0], &pou.cover().centers), pou).unwrap();
        assert_eq!(l.eval(&[0.5]), 0.5);
    }

    #[test]
    fn lift_error_examples() {
        let pou = Arc::new(build_pou(build_cover(&spec(1), 0.25).unwrap()).unwrap());
        let grid = Grid::with_mesh(1, 1.0, 1e-3);
        assert!(lift_error(&|x: &[f64]| x[0], &pou, &grid).unwrap() <= 0.25);
        assert_eq!(lift_error(&|_: &[f64]| 3.0, &pou, &grid).unwrap(), 0.0);

        let pou =
            Arc::new(build_pou(BallCover::from_centers(1, 1.0, 1.0, vec![vec![-1.0], vec![1.0]]).unwrap()).unwrap());
        let abs = |x: &[f64]| x[0].abs();
        let l = lift(project(&abs, &pou.cover().centers), pou.clone()).unwrap();
        assert_eq!(l.eval(&[0.0]), 1.0);
        assert_relative_eq!(lift_error(&abs, &pou, &Grid::new(1, 1.0, 201)).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn membership_examples() {
        let s = spec(1);
        let grid = Grid::for_class(&s);
        assert!(membership_check(&|x: &[f64]| x[0].sin() / 2.0, &s, &grid, MEMBERSHIP_TOL).is_empty());

        let s3 = LipschitzClassSpec::new(1, 1.0, 1.0, 3.0).unwrap();
        let v = membership_check(&|x: &[f64]| 2.0 * x[0], &s3, &grid, MEMBERSHIP_TOL);
        assert_eq!(v.len(), 1);
        match &v[0] {
            MembershipViolation::Lipschitz { quotient, .. } => assert_relative_eq!(*quotient, 2.0, epsilon = 1e-9),
            other => panic!("unexpected {other:?}"),
        }

        let v = membership_check(&|_: &[f64]| 2.0, &s, &grid, MEMBERSHIP_TOL);
        assert!(matches!(v.as_slice(), [MembershipViolation::Bound { .. }]));
    }

    #[test]
    fn membership_sees_diagonal_slopes() {
        // axis quotients are 0.8, the diagonal quotient 0.8 * sqrt(2)
        let s = LipschitzClassSpec::new(2, 1.0, 1.0, 10.0).unwrap();
        let grid = Grid::new(2, 1.0, 41);
        let v = membership_check(&|x: &[f64]| 0.8 * (x[0] + x[1]), &s, &grid, MEMBERSHIP_TOL);
        assert_eq!(v.len(), 1);
    }
}
