//! Truncated sine cubes `u = A sum_j j^-eta y_j e_kappa(j)` with
//! `e_kappa(x) = sin(kappa . x) / c_r` on `[0, 2pi]^d`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lipschitz::{sample_stats, violations_from_stats, Grid, LipschitzClassSpec, MEMBERSHIP_TOL};
use crate::quadrature::{simpson, torus_integral};
use crate::ScalarFn;

/// Default number of Simpson subintervals for [`c_r`].
pub const C_R_NODES: usize = 10_000;

/// `c_r = ((2pi)^(d-1) int_0^2pi |sin t|^r dt)^(1/r)`, the `L^r` norm of
/// `sin(kappa . x)` on `[0, 2pi]^d` for any nonzero integer `kappa`.
pub fn c_r(d: usize, r: f64, quadrature_n: usize) -> Result<f64> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(Error::param(format!("Lebesgue exponent must be a finite r >= 1, got {r}")));
    }
    if d == 0 {
        return Err(Error::param("dimension must be >= 1"));
    }
    let half = simpson(|t| t.sin().abs().powf(r), 0.0, PI, quadrature_n);
    Ok(((2.0 * PI).powi(d as i32 - 1) * 2.0 * half).powf(1.0 / r))
}

/// `L^r([0, 2pi]^d)` norm of `f` by the periodic trapezoid rule.
pub fn torus_lr_norm(d: usize, r: f64, n: usize, f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> f64 {
    torus_integral(d, n, &|x| f(x).abs().powf(r)).powf(1.0 / r)
}

/// The first `J` positive multi-indices ordered by max-norm, then
/// lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiIndexEnumeration {
    pub d: usize,
    pub indices: Vec<Vec<u32>>,
}

impl MultiIndexEnumeration {
    /// 1-based position `j(kappa)`, if enumerated.
    pub fn position(&self, kappa: &[u32]) -> Option<usize> {
        self.indices.iter().position(|k| k == kappa).map(|i| i + 1)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

pub fn enumerate_multiindices(d: usize, count: usize) -> MultiIndexEnumeration {
    let mut indices = Vec::with_capacity(count);
    let mut k: u32 = 1;
    while indices.len() < count && d > 0 {
        // all of {1..k}^d in lexicographic order, keeping those with max = k
        let mut cur = vec![1u32; d];
        loop {
            if cur.contains(&k) {
                indices.push(cur.clone());
                if indices.len() == count {
                    break;
                }
            }
            let mut i = d;
            let mut done = true;
            while i > 0 {
                i -= 1;
                if cur[i] < k {
                    cur[i] += 1;
                    cur[i + 1..].iter_mut().for_each(|c| *c = 1);
                    done = false;
                    break;
                }
            }
            if done {
                break;
            }
        }
        k += 1;
    }
    MultiIndexEnumeration { d, indices }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeSpec {
    pub d: usize,
    pub eta: f64,
    pub amplitude: f64,
    pub terms: usize,
    pub r: f64,
}

impl CubeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.terms == 0 {
            return Err(Error::param("cube needs d >= 1 and J >= 1"));
        }
        if !(self.eta > 1.0) {
            return Err(Error::param(format!("decay exponent must exceed 1, got {}", self.eta)));
        }
        if !(self.amplitude > 0.0) {
            return Err(Error::param("amplitude must be positive"));
        }
        if !(self.r >= 1.0) {
            return Err(Error::param("Lebesgue exponent must be >= 1"));
        }
        Ok(())
    }
}

/// A truncated cube with its basis precomputed.
#[derive(Clone, Debug, PartialEq)]
pub struct SineCube {
    spec: CubeSpec,
    c_r: f64,
    kappas: Vec<Vec<f64>>,
    enumeration: MultiIndexEnumeration,
}

impl SineCube {
    pub fn new(spec: CubeSpec) -> Result<Self> {
        spec.validate()?;
        let enumeration = enumerate_multiindices(spec.d, spec.terms);
        let kappas = enumeration.indices.iter().map(|k| k.iter().map(|&v| v as f64).collect()).collect();
        Ok(Self { spec, c_r: c_r(spec.d, spec.r, C_R_NODES)?, kappas, enumeration })
    }

    pub fn spec(&self) -> &CubeSpec {
        &self.spec
    }

    pub fn c_r(&self) -> f64 {
        self.c_r
    }

    pub fn enumeration(&self) -> &MultiIndexEnumeration {
        &self.enumeration
    }

    pub fn with_amplitude(&self, amplitude: f64) -> Result<Self> {
        let spec = CubeSpec { amplitude, ..self.spec };
        spec.validate()?;
        Ok(Self { spec, ..self.clone() })
    }

    /// Coefficient `A j^-eta / c_r` in front of `sin(kappa(j) . x)`.
    pub fn weight(&self, j: usize) -> f64 {
        self.spec.amplitude * (j as f64).powf(-self.spec.eta) / self.c_r
    }

    /// Element with coordinates `y in [0, 1]^J` on `[0, 2pi]^d`.
    pub fn element(&self, y: &[f64]) -> Result<CubeElement> {
        self.element_impl(y, None)
    }

    /// Element composed with the affine map `[-gamma, gamma]^d -> [0, 2pi]^d`.
    pub fn element_on(&self, y: &[f64], gamma: f64) -> Result<CubeElement> {
        if !(gamma > 0.0) {
            return Err(Error::param("gamma must be positive"));
        }
        self.element_impl(y, Some(gamma))
    }

    fn element_impl(&self, y: &[f64], gamma: Option<f64>) -> Result<CubeElement> {
        if y.len() != self.spec.terms {
            return Err(Error::shape(format!("{} coordinates for a cube with J = {}", y.len(), self.spec.terms)));
        }
        if let Some(bad) = y.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::param(format!("cube coordinate {bad} outside [0, 1]")));
        }
        let terms = y
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (self.weight(i + 1) * v, self.kappas[i].clone()))
            .collect();
        Ok(CubeElement { terms, gamma, y: y.to_vec() })
    }

    /// `A c_r^-1 sum_{j<=J} j^-eta`, a bound on the sup-norm of every element.
    pub fn sup_bound(&self) -> f64 {
        (1..=self.spec.terms).map(|j| self.weight(j)).sum()
    }

    /// Bound `A c_r^-1 J^(1-eta) / (eta - 1)` on the sup-norm of the
    /// discarded tail `sum_{j>J}`.
    pub fn tail_bound(&self) -> f64 {
        let s = &self.spec;
        s.amplitude / self.c_r * (s.terms as f64).powf(1.0 - s.eta) / (s.eta - 1.0)
    }

    /// Bound on the Lipschitz constant of any element on `[-gamma, gamma]^d`.
    pub fn lipschitz_bound(&self, gamma: f64) -> f64 {
        let scale = PI / gamma;
        (1..=self.spec.terms)
            .map(|j| self.weight(j) * self.kappas[j - 1].iter().map(|k| k * k).sum::<f64>().sqrt() * scale)
            .sum()
    }
}

/// A finite sine series, optionally precomposed with a domain rescale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeElement {
    terms: Vec<(f64, Vec<f64>)>,
    gamma: Option<f64>,
    y: Vec<f64>,
}

impl CubeElement {
    pub fn coordinates(&self) -> &[f64] {
        &self.y
    }
}

impl ScalarFn for CubeElement {
    fn eval(&self, x: &[f64]) -> f64 {
        let t = |xi: f64| match self.gamma {
            Some(g) => (xi + g) * PI / g,
            None => xi,
        };
        self.terms.iter().map(|(w, kappa)| w * kappa.iter().zip(x).map(|(k, &xi)| k * t(xi)).sum::<f64>().sin()).sum()
    }
}

/// Biorthogonal functional `e*_kappa(u) = (2 c_r / (2pi)^d) int u(x) sin(kappa . x) dx`
/// by the periodic trapezoid rule with `quadrature_n` nodes per axis.
pub fn biorthogonal_coeff(u: &dyn ScalarFn, kappa: &[u32], r: f64, quadrature_n: usize) -> Result<f64> {
    let d = kappa.len();
    let cr = c_r(d, r, C_R_NODES)?;
    let k: Vec<f64> = kappa.iter().map(|&v| v as f64).collect();
    let integral =
        torus_integral(d, quadrature_n, &|x| u.eval(x) * k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>().sin());
    Ok(2.0 * cr / (2.0 * PI).powi(d as i32) * integral)
}

/// Calibration grid options.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationGrid {
    /// Grid nodes per axis on the target domain.
    pub nodes: usize,
    /// Relative width at which bisection stops.
    pub rel_tol: f64,
}

impl CalibrationGrid {
    pub fn for_class(target: &LipschitzClassSpec) -> Self {
        Self { nodes: Grid::for_class(target).n, rel_tol: 1e-3 }
    }
}

/// The `2^min(J, 10)` corner coordinates: the leading coordinates run over
/// `{0, 1}`, any further ones are fixed to 1.
pub fn calibration_corners(terms: usize) -> Vec<Vec<f64>> {
    let free = terms.min(10);
    (0..1usize << free)
        .map(|mask| (0..terms).map(|j| if j >= free || mask >> j & 1 == 1 { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// Largest amplitude on a bisection grid such that every corner element of
/// the cube, rescaled to the target domain, passes the grid membership check.
pub fn calibrate_amplitude(
    d: usize,
    eta: f64,
    r: f64,
    terms: usize,
    target: &LipschitzClassSpec,
    grid: CalibrationGrid,
) -> Result<f64> {
    target.validate()?;
    if target.d != d {
        return Err(Error::shape(format!("cube dimension {d} differs from target dimension {}", target.d)));
    }
    if !(eta > 1.0 + 1.0 / d as f64) {
        return Err(Error::param(format!("decay exponent must exceed 1 + 1/d = {}, got {eta}", 1.0 + 1.0 / d as f64)));
    }
    let unit = SineCube::new(CubeSpec { d, eta, amplitude: 1.0, terms, r })?;
    let g = Grid::new(d, target.gamma, grid.nodes);

    // membership of A * u is a pure rescaling of the statistics of u at A = 1
    let stats: Vec<_> = calibration_corners(terms)
        .iter()
        .map(|y| {
            let e = unit.element_on(y, target.gamma)?;
            Ok(sample_stats(&g.sample(&e), &g))
        })
        .collect::<Result<_>>()?;
    let passes = |a: f64| stats.iter().all(|s| violations_from_stats(s, a, target, &g, MEMBERSHIP_TOL).is_empty());

    let mut lo = (target.bound / unit.sup_bound()).min(target.lip / unit.lipschitz_bound(target.gamma));
    if !passes(lo) {
        return Err(Error::Calibration(format!("analytic amplitude {lo} fails the grid check")));
    }
    let mut hi = lo * 2.0;
    while passes(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Calibration("membership never fails; grid too coarse".into()));
        }
    }
    while hi - lo > grid.rel_tol * lo {
        let mid = 0.5 * (lo + hi);
        if passes(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo < 1e-12 {
        return Err(Error::Calibration(format!("no feasible amplitude above 1e-12 (best {lo:e})")));
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lipschitz::membership_check;
    use approx::assert_relative_eq;

    #[test]
    fn c_r_examples() {
        assert_relative_eq!(c_r(1, 2.0, C_R_NODES).unwrap(), PI.sqrt(), max_relative = 1e-8);
        assert_relative_eq!(c_r(1, 1.0, C_R_NODES).unwrap(), 4.0, max_relative = 1e-8);
        assert_relative_eq!(c_r(2, 2.0, C_R_NODES).unwrap(), 4.442_882_938_158_366, max_relative = 1e-8);
        assert!(c_r(1, 0.5, C_R_NODES).is_err());
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate_multiindices(2, 1).indices, vec![vec![1, 1]]);
        assert_eq!(enumerate_multiindices(2, 4).indices, vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]);
        let e = enumerate_multiindices(1, 5);
        assert_eq!(e.indices, (1..=5).map(|k| vec![k]).collect::<Vec<_>>());
        assert_eq!(e.position(&[4]), Some(4));
    }

    #[test]
    fn enumeration_sandwich() {
        for d in 1..=3 {
            let e = enumerate_multiindices(d, 64);
            assert_eq!(e.len(), 64);
            for (i, k) in e.indices.iter().enumerate() {
                let kmax = *k.iter().max().unwrap() as usize;
                let j = i + 1;
                assert!((kmax - 1).pow(d as u32) < j && j <= kmax.pow(d as u32));
            }
        }
    }

    #[test]
    fn element_examples() {
        let cube = SineCube::new(CubeSpec { d: 1, eta: 2.0, amplitude: 1.0, terms: 1, r: 2.0 }).unwrap();
        let e = cube.element(&[1.0]).unwrap();
        assert_relative_eq!(e.eval(&[PI / 2.0]), 0.564_189_583_547_756_3, epsilon = 1e-9);
        let z = cube.element(&[0.0]).unwrap();
        assert_eq!(z.eval(&[1.3]), 0.0);
        assert!(matches!(cube.element(&[1.5]), Err(Error::Parameter(_))));
        assert!(matches!(cube.element(&[0.5, 0.5]), Err(Error::Shape(_))));
    }

    #[test]
    fn elements_respect_sup_bound() {
        let cube = SineCube::new(CubeSpec { d: 2, eta: 2.0, amplitude: 3.0, terms: 9, r: 1.0 }).unwrap();
        let e = cube.element(&[1.0; 9]).unwrap();
        let bound = cube.sup_bound();
        for x in Grid::new(2, PI, 41).points() {
            let x: Vec<f64> = x.iter().map(|v| v + PI).collect();
            assert!(e.eval(&x).abs() <= bound + 1e-12);
        }
        assert!(cube.tail_bound() > 0.0);
    }

    #[test]
    fn unit_norm_basis() {
        for d in 1..=2 {
            for r in [1.0, 2.0] {
                let cube = SineCube::new(CubeSpec { d, eta: 2.0, amplitude: 1.0, terms: 6, r }).unwrap();
                for k in &cube.enumeration().indices {
                    let kf: Vec<f64> = k.iter().map(|&v| v as f64).collect();
                    let cr = cube.c_r();
                    let n = if d == 1 { 16_384 } else { 2048 };
                    let norm =
                        torus_lr_norm(d, r, n, &|x| kf.iter().zip(x).map(|(a, b)| a * b).sum::<f64>().sin() / cr);
                    assert!((norm - 1.0).abs() < 1e-5, "d={d} r={r} k={k:?} {norm}");
                }
            }
        }
    }

    #[test]
    fn biorthogonality() {
        let cube = SineCube::new(CubeSpec { d: 2, eta: 2.0, amplitude: 1.0, terms: 6, r: 2.0 }).unwrap();
        let idx = cube.enumeration().indices.clone();
        for (a, ka) in idx.iter().enumerate() {
            let mut y = vec![0.0; 6];
            y[a] = 1.0;
            let e = cube.element(&y).unwrap();
            let scale = cube.weight(a + 1) * cube.c_r();
            for (b, kb) in idx.iter().enumerate() {
                let v = biorthogonal_coeff(&e, kb, 2.0, 256).unwrap() / scale;
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-6, "{ka:?} {kb:?} {v}");
            }
        }
    }

    #[test]
    fn coefficient_recovery() {
        let cube = SineCube::new(CubeSpec { d: 1, eta: 2.0, amplitude: 0.7, terms: 4, r: 1.0 }).unwrap();
        let y = [0.2, 0.9, 0.0, 0.4];
        let e = cube.element(&y).unwrap();
        for (j, yj) in y.iter().enumerate() {
            let got = biorthogonal_coeff(&e, &[j as u32 + 1], 1.0, 256).unwrap();
            assert_relative_eq!(got, 0.7 * ((j + 1) as f64).powf(-2.0) * yj, epsilon = 1e-10);
        }
    }

    #[test]
    fn calibration() {
        let target = LipschitzClassSpec::new(1, 1.0, 1.0, 1.0).unwrap();
        let grid = CalibrationGrid::for_class(&target);
        let a = calibrate_amplitude(1, 2.5, 2.0, 8, &target, grid).unwrap();
        let cube = SineCube::new(CubeSpec { d: 1, eta: 2.5, amplitude: a, terms: 8, r: 2.0 }).unwrap();
        let g = Grid::new(1, 1.0, grid.nodes);
        let mut worst_fails = false;
        for y in calibration_corners(8) {
            let e = cube.element_on(&y, 1.0).unwrap();
            assert!(membership_check(&e, &target, &g, MEMBERSHIP_TOL).is_empty());
            let bigger = cube.with_amplitude(a * 1.05).unwrap().element_on(&y, 1.0).unwrap();
            worst_fails |= !membership_check(&bigger, &target, &g, MEMBERSHIP_TOL).is_empty();
        }
        assert!(worst_fails, "margin above 5%");

        let doubled = LipschitzClassSpec::new(1, 1.0, 2.0, 2.0).unwrap();
        let a2 = calibrate_amplitude(1, 2.5, 2.0, 8, &doubled, grid).unwrap();
        assert!(a2 >= 2.0 * a * (1.0 - 2e-3));
        assert!(calibrate_amplitude(1, 1.5, 2.0, 8, &target, grid).is_err());
    }
}
